//! `ddw`: configuration-driven runner for the driven double-well computations.

mod config;
mod error;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Generator, ScenarioConfig, Task};
use error::{CliError, Result};

#[derive(Parser)]
#[command(name = "ddw", version, about = "Floquet spectra and dissipative tunneling in a driven double well")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// H₀ and Floquet spectra at one amplitude.
    Spectrum(Overrides),
    /// Quasienergies and mean energies over an amplitude grid, with crossing detection.
    Sweep(Overrides),
    /// Coherent evolution of the right-localized state.
    Tunnel(Overrides),
    /// Dissipative evolution of the right-localized state.
    Dissipate(Overrides),
    /// Asymptotic state for each temperature of the list.
    Attractor(Overrides),
    /// Stroboscopic phase-space portrait of the classical dynamics.
    Classical(Overrides),
    /// Runs the task named in the config file.
    Run(Overrides),
    /// Dry-run check of the configuration; prints a JSON report.
    Validate {
        #[command(flatten)]
        overrides: Overrides,
        /// Task to validate for, instead of the one in the config.
        #[arg(long, value_enum)]
        task: Option<Task>,
    },
    /// Prints the documented default configuration.
    Defaults,
}

#[derive(Args, Default)]
struct Overrides {
    /// Scenario file (TOML); flags below override its values.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Artifact directory.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    barrier_height: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    omega: Option<f64>,
    /// Rescaled amplitude F.
    #[arg(long, allow_hyphen_values = true)]
    amplitude: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    damping: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    temperature: Option<f64>,
    /// K.
    #[arg(long)]
    retained: Option<usize>,
    /// N_F.
    #[arg(long)]
    sidebands: Option<usize>,
    /// M.
    #[arg(long)]
    states: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    f_start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    f_stop: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    f_step: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_end: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, value_enum)]
    generator: Option<Generator>,
    /// Spectrum indices even,odd,chaotic.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    triple: Option<Vec<usize>>,
    /// Comma-separated k_BT list for the attractor task.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    temperatures: Option<Vec<f64>>,
    #[arg(long)]
    periods: Option<usize>,
}

impl Overrides {
    fn resolve(&self, task: Option<Task>) -> Result<ScenarioConfig> {
        let mut c = match &self.config {
            Some(path) => ScenarioConfig::load(path)?,
            None => ScenarioConfig::default(),
        };
        if let Some(t) = task {
            c.task = t;
        }
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut c.system.barrier_height, self.barrier_height);
        set(&mut c.system.omega, self.omega);
        set(&mut c.system.amplitude, self.amplitude);
        set(&mut c.bath.damping, self.damping);
        set(&mut c.bath.temperature, self.temperature);
        set(&mut c.sweep.f_start, self.f_start);
        set(&mut c.sweep.f_stop, self.f_stop);
        set(&mut c.sweep.f_step, self.f_step);
        if let Some(o) = &self.output {
            c.output_dir = Some(o.clone());
        }
        if let Some(n) = self.threads {
            c.threads = n;
        }
        if let Some(k) = self.retained {
            c.truncation.retained = k;
        }
        if let Some(n) = self.sidebands {
            c.truncation.sidebands = n;
        }
        if let Some(m) = self.states {
            c.truncation.states = m;
        }
        if let Some(t) = self.t_end {
            c.propagation.t_end = Some(t);
        }
        if let Some(n) = self.samples {
            c.propagation.samples = n;
        }
        if let Some(g) = self.generator {
            c.propagation.generator = g;
        }
        if let Some(t) = &self.triple {
            c.propagation.triple = Some([t[0], t[1], t[2]]);
        }
        if let Some(t) = &self.temperatures {
            c.attractor.temperatures = t.clone();
        }
        if let Some(n) = self.periods {
            c.classical.periods = n;
        }
        Ok(c)
    }
}

fn init_pool(threads: usize) -> Result<()> {
    if threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let (overrides, task) = match cli.command {
        Command::Defaults => {
            print!("{}", config::reference_page());
            return Ok(());
        }
        Command::Validate { overrides, task } => {
            let cfg = overrides.resolve(task)?;
            init_pool(cfg.threads)?;
            let report = run::validate(&cfg);
            println!("{}", serde_json::to_string_pretty(&report)?);
            return match report.errors.first() {
                Some(e) => Err(CliError::invalid("config", e.clone())),
                None => Ok(()),
            };
        }
        Command::Spectrum(o) => (o, Some(Task::Spectrum)),
        Command::Sweep(o) => (o, Some(Task::Sweep)),
        Command::Tunnel(o) => (o, Some(Task::Tunnel)),
        Command::Dissipate(o) => (o, Some(Task::Dissipate)),
        Command::Attractor(o) => (o, Some(Task::Attractor)),
        Command::Classical(o) => (o, Some(Task::Classical)),
        Command::Run(o) => (o, None),
    };
    let cfg = overrides.resolve(task)?;
    cfg.validate()?;
    init_pool(cfg.threads)?;
    let manifest = run::run(&cfg)?;
    println!("{}", manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
