use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qfsim_cli::{cmd_calibrate, cmd_latency, cmd_reset, load_discriminant, thread_pool, write_calibration, Experiment};

#[derive(Parser)]
#[command(name = "qfsim", version, about = "Qubit readout and active-feedback simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the state discriminant on prepared g/e shots.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        /// Discriminant JSON; the report goes next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the active-reset experiment.
    Reset {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        discriminant: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Also write every shot to shots.ndjson.
        #[arg(long)]
        shot_log: bool,
    },
    /// Print the latency budget and the reset timeline.
    Latency {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(cli: Cli) -> qfsim_cli::Result<()> {
    let pool = thread_pool()?;
    match cli.command {
        Command::Calibrate { config, out } => {
            let exp = Experiment::load(&config)?;
            let cal = pool.install(|| cmd_calibrate(&exp))?;
            let report = write_calibration(&cal, &out)?;
            let r = &cal.report;
            println!("discriminant   {}", out.display());
            println!("report         {}", report.display());
            println!("cable delay    {} samples", r.measured_cable_delay_samples);
            println!("blob sigma     {}", r.empirical.sigma);
            println!("bayes error    {}", r.empirical.bayes_error);
        }
        Command::Reset { config, discriminant, out_dir, shot_log } => {
            let exp = Experiment::load(&config)?;
            let disc = load_discriminant(&discriminant)?;
            let r = pool.install(|| cmd_reset(&exp, &disc, &out_dir, shot_log))?;
            let mk = |t: Option<f64>| t.map_or_else(|| "n/a".to_string(), |t| format!("{:.2} mK", t * 1e3));
            println!("shots          {}", r.n_shots);
            println!("p1 before      {:.5} (truth)  {:.5} (mixture)", r.p1_before.truth, r.p1_before.mixture);
            println!("p1 after       {:.5} (truth)  {:.5} (mixture)", r.p1_after.truth, r.p1_after.mixture);
            println!("fidelity       {:.5}", r.fidelity);
            println!("T_eff          {} -> {}", mk(r.t_eff_before_k), mk(r.t_eff_after_k));
            println!("sequence       {:.0} ns", r.sequence_duration_s * 1e9);
            if r.pi_pulse.assumed_defaults {
                println!("note: pi-pulse error and duration are assumed defaults");
            }
        }
        Command::Latency { config } => {
            let exp = Experiment::load(&config)?;
            print!("{}", cmd_latency(&exp)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qfsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
