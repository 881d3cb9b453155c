//! Experiment front end for the qfsim platform model: configuration,
//! readout calibration, active reset and latency reports.

pub mod calibrate;
pub mod config;
pub mod error;
pub mod latency;
pub mod reset;

use std::path::Path;

pub use calibrate::{cmd_calibrate, Calibration, CalibrationReport};
pub use config::{ConfigFile, Experiment};
pub use error::{CliError, Result};
pub use latency::cmd_latency;
pub use reset::{cmd_reset, run_reset, ResetReport};

use qfsim_core::Discriminant;

/// Stream ids of calibration shots; reset shots use their shot index.
pub const STREAM_CALIBRATION: u64 = 1 << 62;

/// Environment variable capping the worker count (0 or unset = all cores).
pub const THREADS_ENV: &str = "QFSIM_THREADS";

/// Worker pool sized from `QFSIM_THREADS`.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("{THREADS_ENV} must be a non-negative integer, got {v:?}")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker threads: {e}")))
}

pub fn load_discriminant(path: &Path) -> Result<Discriminant<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
    let d: Discriminant<f64> =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Discriminant::new(d.w, d.b, d.label_positive)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Writes the discriminant to `out` and the calibration report next to it
/// as `<stem>_report.json`; returns the report path.
pub fn write_calibration(cal: &Calibration, out: &Path) -> Result<std::path::PathBuf> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))?;
    }
    let disc = serde_json::to_string(&cal.discriminant).expect("discriminant serializes") + "\n";
    std::fs::write(out, disc).map_err(|e| CliError::write(out, e))?;
    let stem = out.file_stem().map_or_else(|| "discriminant".into(), |s| s.to_string_lossy().into_owned());
    let report_path = out.with_file_name(format!("{stem}_report.json"));
    let report = serde_json::to_string_pretty(&cal.report).expect("report serializes") + "\n";
    std::fs::write(&report_path, report).map_err(|e| CliError::write(&report_path, e))?;
    Ok(report_path)
}
