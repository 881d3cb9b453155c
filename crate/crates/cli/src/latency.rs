//! Latency report: stage breakdown, total, and the timed reset sequence.

use std::fmt::Write as _;

use qfsim_core::sequencer::{active_reset_program, platform_latency, validate};
use qfsim_core::RateConverter;

use crate::config::Experiment;
use crate::error::Result;

pub fn cmd_latency(exp: &Experiment) -> Result<String> {
    let m = &exp.latency;
    let window_ns = (exp.demod.window * 1e9).round() as u64;
    let pi_ns = (exp.qubit.pi_duration * 1e9).round() as u64;
    let schedule = validate(&active_reset_program(window_ns), m, pi_ns)?;
    let conv = RateConverter::<f64>::platform();

    let mut out = String::new();
    let w = &mut out;
    let line = "-".repeat(30);
    writeln!(w, "{:<20}{:>10}", "stage", "ns").unwrap();
    writeln!(w, "{line}").unwrap();
    for (name, ns) in m.components() {
        writeln!(w, "{name:<20}{ns:>10}").unwrap();
    }
    writeln!(w, "{line}").unwrap();
    writeln!(w, "{:<20}{:>10}", "total", m.total_ns()).unwrap();
    writeln!(w, "{:<20}{:>10.1}", "total (s x 1e9)", platform_latency(m) * 1e9).unwrap();
    writeln!(w).unwrap();
    writeln!(w, "reset sequence").unwrap();
    writeln!(w, "{:<14}{:>10}{:>10}  arm", "op", "start_ns", "end_ns").unwrap();
    for e in schedule.entries() {
        let arm = match e.arm {
            Some(s) if s.is_excited() => "if e",
            Some(_) => "if g",
            None => "",
        };
        writeln!(w, "{:<14}{:>10}{:>10}  {arm}", e.name, e.start_ns, e.end_ns).unwrap();
    }
    writeln!(w, "{:<14}{:>10}", "duration_ns", schedule.duration_ns()).unwrap();
    writeln!(w).unwrap();
    writeln!(
        w,
        "rate converter: factor {}, {} taps, group delay {} ns per stage",
        conv.factor(),
        conv.taps().len(),
        conv.group_delay() * 1e9
    )
    .unwrap();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total_line(report: &str) -> String {
        report.lines().find(|l| l.starts_with("total ")).unwrap().to_string()
    }

    #[test]
    fn presets() {
        for (doc, total) in [("{}", 428), (r#"{"latency":{"preset":"optimized"}}"#, 150), (r#"{"latency":{"preset":"zero"}}"#, 0)]
        {
            let r = cmd_latency(&Experiment::from_json(doc).unwrap()).unwrap();
            assert!(total_line(&r).ends_with(&format!(" {total}")), "{r}");
        }
    }

    #[test]
    fn default_timeline() {
        let r = cmd_latency(&Experiment::from_json("{}").unwrap()).unwrap();
        assert!(r.contains("pi                  1228      1478  if e"), "{r}");
        assert!(r.contains("duration_ns         1478"), "{r}");
    }
}
