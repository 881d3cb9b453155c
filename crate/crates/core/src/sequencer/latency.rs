use serde::{Deserialize, Serialize};

/// Platform latency decomposition, every stage in whole nanoseconds.
///
/// The latency runs from the last readout sample entering the platform to
/// the first sample of the conditioned output pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyModel {
    #[serde(rename = "adc_ns")]
    pub adc: u64,
    #[serde(rename = "decimation_ns")]
    pub decimation: u64,
    #[serde(rename = "demod_pipeline_ns")]
    pub demod_pipeline: u64,
    /// Five 125 MHz cycles by default.
    #[serde(rename = "decision_ns")]
    pub decision: u64,
    #[serde(rename = "interpolation_ns")]
    pub interpolation: u64,
    #[serde(rename = "dac_ns")]
    pub dac: u64,
}

impl LatencyModel {
    /// Current firmware: 428 ns in total.
    pub const fn baseline() -> Self {
        Self { adc: 70, decimation: 100, demod_pipeline: 48, decision: 40, interpolation: 100, dac: 70 }
    }

    /// Target of an optimized design: 150 ns in total.
    pub const fn optimized() -> Self {
        Self { adc: 40, decimation: 25, demod_pipeline: 16, decision: 8, interpolation: 25, dac: 36 }
    }

    pub const fn zero() -> Self {
        Self { adc: 0, decimation: 0, demod_pipeline: 0, decision: 0, interpolation: 0, dac: 0 }
    }

    pub fn components(&self) -> [(&'static str, u64); 6] {
        [
            ("adc", self.adc),
            ("decimation", self.decimation),
            ("demod_pipeline", self.demod_pipeline),
            ("decision", self.decision),
            ("interpolation", self.interpolation),
            ("dac", self.dac),
        ]
    }

    pub fn total_ns(&self) -> u64 {
        self.components().iter().map(|(_, v)| v).sum()
    }

    /// Total in seconds.
    pub fn total(&self) -> f64 {
        self.total_ns() as f64 * 1e-9
    }
}

impl Default for LatencyModel {
    fn default() -> Self {
        Self::baseline()
    }
}

/// Exact component sum of `m`, in seconds.
pub fn platform_latency(m: &LatencyModel) -> f64 {
    m.total()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        assert_eq!(LatencyModel::baseline().total_ns(), 428);
        assert_eq!(LatencyModel::optimized().total_ns(), 150);
        assert_eq!(LatencyModel::zero().total_ns(), 0);
        assert_eq!(platform_latency(&LatencyModel::zero()), 0.0);
        assert!((platform_latency(&LatencyModel::default()) - 428e-9).abs() < 1e-22);
        // decision stage is five fabric clock cycles
        assert_eq!(LatencyModel::baseline().decision, 5 * 8);
    }

    #[test]
    fn json_names_carry_units() {
        let v: LatencyModel = serde_json::from_str(
            r#"{"adc_ns":1,"decimation_ns":2,"demod_pipeline_ns":3,"decision_ns":4,"interpolation_ns":5,"dac_ns":6}"#,
        )
        .unwrap();
        assert_eq!(v.total_ns(), 21);
    }
}
