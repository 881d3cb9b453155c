//! IQ-plane state estimation: linear discriminant training, single-shot
//! classification, the Bayes error of a two-blob model, and mixture-weight
//! population estimates.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::demod::IqPoint;
use crate::error::{Error, Result};
use crate::physics::QubitState;
use crate::scalar::Real;

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Blob separation `d / sigma` at which two equal-prior isotropic blobs are
/// confused with probability `per_class_error`: `2 * Phi^-1(1 - error)`.
pub fn separation_for_error(per_class_error: f64) -> Result<f64> {
    if !(per_class_error > 0.0 && per_class_error < 0.5) {
        return Err(Error::domain(format!(
            "per-class error must be in (0, 0.5), got {per_class_error}"
        )));
    }
    let n = Normal::new(0.0, 1.0).expect("unit normal");
    Ok(2.0 * n.inverse_cdf(1.0 - per_class_error))
}

/// Two isotropic Gaussian blobs with a shared per-axis `sigma`.
///
/// `sigma == 0` is accepted as the perfectly separable limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobModel<T = f64> {
    pub mu_g: IqPoint<T>,
    pub mu_e: IqPoint<T>,
    pub sigma: T,
    pub prior_e: T,
}

impl<T: Real> BlobModel<T> {
    pub fn new(mu_g: IqPoint<T>, mu_e: IqPoint<T>, sigma: T, prior_e: T) -> Result<Self> {
        if !(sigma >= T::zero()) || !sigma.is_finite() {
            return Err(Error::config(format!("blob sigma must be finite and >= 0, got {sigma:?}")));
        }
        if !(prior_e >= T::zero() && prior_e <= T::one()) {
            return Err(Error::config(format!("prior_e must be in [0, 1], got {prior_e:?}")));
        }
        if !mu_g.is_finite() || !mu_e.is_finite() {
            return Err(Error::config("blob means must be finite"));
        }
        Ok(Self { mu_g, mu_e, sigma, prior_e })
    }

    pub fn with_prior(self, prior_e: T) -> Result<Self> {
        Self::new(self.mu_g, self.mu_e, self.sigma, prior_e)
    }

    pub fn separation(&self) -> T {
        self.mu_e.sub(&self.mu_g).norm()
    }
}

/// Linear decision boundary `w . x + b = 0`; points with a positive score
/// are assigned `label_positive`, exact ties go to the ground state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discriminant<T = f64> {
    pub w: [T; 2],
    pub b: T,
    #[serde(rename = "positive")]
    pub label_positive: QubitState,
}

impl<T: Real> Discriminant<T> {
    pub fn new(w: [T; 2], b: T, label_positive: QubitState) -> Result<Self> {
        if w[0] == T::zero() && w[1] == T::zero() {
            return Err(Error::config("discriminant normal must be non-zero"));
        }
        if !(w[0].is_finite() && w[1].is_finite() && b.is_finite()) {
            return Err(Error::config("discriminant coefficients must be finite"));
        }
        Ok(Self { w, b, label_positive })
    }

    #[inline]
    pub fn score(&self, p: &IqPoint<T>) -> T {
        self.w[0] * p.i + self.w[1] * p.q + self.b
    }

    /// Multiplies `(w, b)` by `c`. Decisions are unchanged for `c > 0`.
    pub fn scaled(&self, c: T) -> Self {
        Self { w: [self.w[0] * c, self.w[1] * c], b: self.b * c, ..*self }
    }
}

#[inline]
pub fn classify<T: Real>(d: &Discriminant<T>, p: &IqPoint<T>) -> QubitState {
    let s = d.score(p);
    if s > T::zero() {
        d.label_positive
    } else if s < T::zero() {
        d.label_positive.flipped()
    } else {
        QubitState::Ground
    }
}

/// How the LDA intercept accounts for class priors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "mode", content = "prior_e")]
pub enum InterceptMode {
    /// `ln(n_e / n_g)` from the training counts.
    #[default]
    SampleFrequency,
    /// Perpendicular bisector of the means, no prior term.
    Midpoint,
    /// `ln(p / (1 - p))` for an operating prior `p` that differs from the
    /// training mix.
    Prior(f64),
}

/// Fisher/LDA training with the prior-aware intercept from the sample counts.
pub fn train_lda<T: Real>(shots: &[(IqPoint<T>, QubitState)]) -> Result<Discriminant<T>> {
    train_lda_with(shots, InterceptMode::SampleFrequency)
}

/// `w = S_pooled^-1 (mean_e - mean_g)`, `b = -w . midpoint + log-prior`.
///
/// If both classes have zero scatter the data is perfectly separable and the
/// Bayes rule degenerates to the nearest mean; that case returns the
/// bisector with `w = mean_e - mean_g` and no prior term.
pub fn train_lda_with<T: Real>(
    shots: &[(IqPoint<T>, QubitState)],
    mode: InterceptMode,
) -> Result<Discriminant<T>> {
    let (n_g, n_e) = shots.iter().fold((0usize, 0usize), |(g, e), (_, s)| match s {
        QubitState::Ground => (g + 1, e),
        QubitState::Excited => (g, e + 1),
    });
    if n_g < 2 || n_e < 2 {
        return Err(Error::Training(format!(
            "need at least 2 shots per state, got {n_g} ground and {n_e} excited"
        )));
    }
    // accumulate in f64 regardless of T
    let mut sum = [[0.0f64; 2]; 2];
    for (p, s) in shots {
        let k = s.index();
        sum[k][0] += p.i.as_f64();
        sum[k][1] += p.q.as_f64();
    }
    let counts = [n_g as f64, n_e as f64];
    let mean = [
        [sum[0][0] / counts[0], sum[0][1] / counts[0]],
        [sum[1][0] / counts[1], sum[1][1] / counts[1]],
    ];
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (p, s) in shots {
        let m = mean[s.index()];
        let dx = p.i.as_f64() - m[0];
        let dy = p.q.as_f64() - m[1];
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let dof = (shots.len() - 2) as f64;
    let (sxx, sxy, syy) = (sxx / dof, sxy / dof, syy / dof);
    let delta = [mean[1][0] - mean[0][0], mean[1][1] - mean[0][1]];
    let mid = [(mean[0][0] + mean[1][0]) / 2.0, (mean[0][1] + mean[1][1]) / 2.0];
    if delta == [0.0, 0.0] {
        return Err(Error::Training("class means coincide".into()));
    }

    let (w, log_prior) = if sxx == 0.0 && sxy == 0.0 && syy == 0.0 {
        (delta, 0.0)
    } else {
        let det = sxx * syy - sxy * sxy;
        let scale = ((sxx + syy) / 2.0).powi(2);
        if !(det > 1e-12 * scale) {
            return Err(Error::Training("pooled covariance is singular (collinear data)".into()));
        }
        let w = [(syy * delta[0] - sxy * delta[1]) / det, (sxx * delta[1] - sxy * delta[0]) / det];
        let log_prior = match mode {
            InterceptMode::SampleFrequency => (counts[1] / counts[0]).ln(),
            InterceptMode::Midpoint => 0.0,
            InterceptMode::Prior(p) => {
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::Training(format!("operating prior must be in (0, 1), got {p}")));
                }
                (p / (1.0 - p)).ln()
            }
        };
        (w, log_prior)
    };
    let b = -(w[0] * mid[0] + w[1] * mid[1]) + log_prior;
    Discriminant::new([T::lit(w[0]), T::lit(w[1])], T::lit(b), QubitState::Excited)
}

/// Minimum achievable misclassification probability of `m`.
///
/// Isotropic equal-covariance blobs reduce to one dimension along the
/// inter-mean axis; the optimal threshold sits `sigma^2 ln(p_g / p_e) / d`
/// past the midpoint.
pub fn bayes_error<T: Real>(m: &BlobModel<T>) -> T {
    let d = m.separation().as_f64();
    let sigma = m.sigma.as_f64();
    let pe = m.prior_e.as_f64();
    let pg = 1.0 - pe;
    if d == 0.0 {
        return T::lit(pe.min(pg));
    }
    if sigma == 0.0 || pe == 0.0 || pg == 0.0 {
        return T::zero();
    }
    let threshold = d / 2.0 + sigma * sigma * (pg / pe).ln() / d;
    let err = pg * normal_cdf(-threshold / sigma) + pe * normal_cdf((threshold - d) / sigma);
    T::lit(err)
}

/// Per-class error rates `(P(decide e | g), P(decide g | e))` of a linear
/// discriminant applied to the blobs of `m`.
pub fn discriminant_error_rates<T: Real>(d: &Discriminant<T>, m: &BlobModel<T>) -> (f64, f64) {
    let norm = (d.w[0].as_f64()).hypot(d.w[1].as_f64());
    let sigma = m.sigma.as_f64();
    let sg = d.score(&m.mu_g).as_f64() / norm;
    let se = d.score(&m.mu_e).as_f64() / norm;
    let positive_is_e = d.label_positive == QubitState::Excited;
    let p_pos = |s: f64| if sigma == 0.0 { (s > 0.0) as u8 as f64 } else { normal_cdf(s / sigma) };
    let (g_as_e, e_as_g) = if positive_is_e {
        (p_pos(sg), 1.0 - p_pos(se))
    } else {
        (1.0 - p_pos(sg), p_pos(se))
    };
    (g_as_e, e_as_g)
}

/// Mixture estimate of `(p_g, p_e)` with the blob means and width fixed:
/// one-parameter EM on the excited weight, iterated to 1e-10.
pub fn estimate_populations<T: Real>(points: &[IqPoint<T>], m: &BlobModel<T>) -> Result<(T, T)> {
    if points.is_empty() {
        return Err(Error::domain("cannot estimate populations from zero points"));
    }
    if m.separation() == T::zero() {
        return Err(Error::domain("blob means coincide; populations are not identifiable"));
    }
    let to64 = |p: &IqPoint<T>| (p.i.as_f64(), p.q.as_f64());
    let (gi, gq) = to64(&m.mu_g);
    let (ei, eq) = to64(&m.mu_e);
    let sigma = m.sigma.as_f64();
    let n = points.len() as f64;
    // log-likelihood ratio ln(L_e / L_g) per point
    let llr: Vec<f64> = points
        .iter()
        .map(|p| {
            let (x, y) = to64(p);
            let dg = (x - gi).powi(2) + (y - gq).powi(2);
            let de = (x - ei).powi(2) + (y - eq).powi(2);
            if sigma == 0.0 {
                if de < dg { f64::INFINITY } else { f64::NEG_INFINITY }
            } else {
                (dg - de) / (2.0 * sigma * sigma)
            }
        })
        .collect();
    if sigma == 0.0 {
        let pe = llr.iter().filter(|l| **l > 0.0).count() as f64 / n;
        return Ok((T::lit(1.0 - pe), T::lit(pe)));
    }
    let inv_ratio: Vec<f64> = llr.iter().map(|&l| (-l).exp()).collect();
    let mut w = 0.5f64;
    for _ in 0..100_000 {
        let odds = (1.0 - w) / w;
        let next = inv_ratio.iter().map(|&r| 1.0 / (1.0 + odds * r)).sum::<f64>() / n;
        let done = (next - w).abs() < 1e-10;
        w = next;
        if done || w == 0.0 || w == 1.0 {
            break;
        }
    }
    Ok((T::lit(1.0 - w), T::lit(w)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(i: f64, q: f64) -> IqPoint<f64> {
        IqPoint::new(i, q)
    }

    fn symmetric_clusters() -> Vec<(IqPoint<f64>, QubitState)> {
        let offs = [(0.3, 0.1), (-0.2, 0.4), (0.1, -0.5), (-0.2, 0.0)];
        let mut v = Vec::new();
        for (dx, dy) in offs {
            v.push((pt(-2.0 + dx, 1.0 + dy), QubitState::Ground));
            v.push((pt(2.0 - dx, 1.0 + dy), QubitState::Excited));
        }
        v
    }

    #[test]
    fn mirror_symmetric_data_gives_q_axis() {
        let d = train_lda(&symmetric_clusters()).unwrap();
        assert!(d.w[0] > 0.0);
        assert!(d.w[1].abs() < 1e-12 * d.w[0]);
        assert!(d.b.abs() < 1e-12);
    }

    #[test]
    fn swapped_labels_negate_normal() {
        let shots = symmetric_clusters();
        let swapped: Vec<_> = shots.iter().map(|(p, s)| (*p, s.flipped())).collect();
        let a = train_lda(&shots).unwrap();
        let b = train_lda(&swapped).unwrap();
        assert!((a.w[0] + b.w[0]).abs() < 1e-12 && (a.w[1] + b.w[1]).abs() < 1e-12);
        for (p, _) in &shots {
            assert_ne!(classify(&a, p), classify(&b, p));
        }
    }

    #[test]
    fn training_errors() {
        let mut one_class: Vec<_> = symmetric_clusters().into_iter().filter(|(_, s)| s.is_excited()).collect();
        assert!(matches!(train_lda(&one_class), Err(Error::Training(_))));
        one_class.push((pt(-2.0, 1.0), QubitState::Ground));
        assert!(train_lda(&one_class).is_err());
        // every point on one line: rank-one scatter
        let line: Vec<_> = (0..6)
            .map(|k| {
                let x = k as f64;
                (pt(x, 2.0 * x), if k < 3 { QubitState::Ground } else { QubitState::Excited })
            })
            .collect();
        assert!(matches!(train_lda(&line), Err(Error::Training(_))));
    }

    #[test]
    fn zero_scatter_falls_back_to_bisector() {
        let shots = vec![
            (pt(0.0, 0.0), QubitState::Ground),
            (pt(0.0, 0.0), QubitState::Ground),
            (pt(4.0, 0.0), QubitState::Excited),
            (pt(4.0, 0.0), QubitState::Excited),
            (pt(4.0, 0.0), QubitState::Excited),
        ];
        let d = train_lda(&shots).unwrap();
        assert_eq!(classify(&d, &pt(1.9, 3.0)), QubitState::Ground);
        assert_eq!(classify(&d, &pt(2.1, -3.0)), QubitState::Excited);
        assert_eq!(d.score(&pt(2.0, 7.0)), 0.0);
    }

    #[test]
    fn ties_go_to_ground() {
        let d = Discriminant::new([1.0, 0.0], 0.0, QubitState::Excited).unwrap();
        assert_eq!(classify(&d, &pt(0.0, 5.0)), QubitState::Ground);
        let flipped = Discriminant::new([1.0, 0.0], 0.0, QubitState::Ground).unwrap();
        assert_eq!(classify(&flipped, &pt(0.0, 5.0)), QubitState::Ground);
        assert_eq!(classify(&flipped, &pt(-1.0, 5.0)), QubitState::Excited);
        assert!(Discriminant::new([0.0, 0.0], 1.0, QubitState::Excited).is_err());
    }

    #[test]
    fn json_layout() {
        let d = Discriminant::new([1.5, -2.0], 0.25, QubitState::Excited).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, r#"{"w":[1.5,-2.0],"b":0.25,"positive":"e"}"#);
        let back: Discriminant<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn separation_constant() {
        let r = separation_for_error(0.005).unwrap();
        assert!((r - 5.1517).abs() < 1e-4, "{r}");
        assert!((normal_cdf(-r / 2.0) - 0.005).abs() < 1e-12);
        assert!(separation_for_error(0.7).is_err());
    }

    #[test]
    fn bayes_error_limits() {
        let m = BlobModel::new(pt(0.0, 0.0), pt(5.1517, 0.0), 1.0, 0.5).unwrap();
        assert!((bayes_error(&m) - 0.005).abs() < 1e-5);
        let sharp = BlobModel { sigma: 0.0, ..m };
        assert_eq!(bayes_error(&sharp), 0.0);
        let tiny = BlobModel { sigma: 1e-6, ..m };
        assert!(bayes_error(&tiny) < 1e-300);
        let same = BlobModel::new(pt(1.0, 1.0), pt(1.0, 1.0), 1.0, 0.117).unwrap();
        assert!((bayes_error(&same) - 0.117).abs() < 1e-15);
        let same = BlobModel { prior_e: 0.8, ..same };
        assert!((bayes_error(&same) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn analytic_error_rates_of_bisector() {
        let m = BlobModel::new(pt(0.0, 0.0), pt(0.0, 5.1517), 1.0, 0.5).unwrap();
        let d = Discriminant::new([0.0, 1.0], -5.1517 / 2.0, QubitState::Excited).unwrap();
        let (a, b) = discriminant_error_rates(&d, &m);
        assert!((a - 0.005).abs() < 1e-6 && (b - 0.005).abs() < 1e-6);
    }

    #[test]
    fn population_edge_cases() {
        let m = BlobModel::new(pt(0.0, 0.0), pt(3.0, 0.0), 0.0, 0.5).unwrap();
        assert!(estimate_populations::<f64>(&[], &m).is_err());
        let at_g = vec![pt(0.0, 0.0); 100];
        assert_eq!(estimate_populations(&at_g, &m).unwrap(), (1.0, 0.0));
        let m = BlobModel { sigma: 0.05, ..m };
        let (_, pe) = estimate_populations(&at_g, &m).unwrap();
        assert!(pe < 1e-8, "{pe}");
        let same = BlobModel::new(pt(1.0, 0.0), pt(1.0, 0.0), 1.0, 0.5).unwrap();
        assert!(estimate_populations(&at_g, &same).is_err());
    }
}
