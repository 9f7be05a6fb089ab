use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tjpf::harness::{
    check_output_dir, preset, run_experiment, write_truth, Experiment, ExperimentConfig, HarnessError,
    PRESET_NAMES,
};

#[derive(Parser)]
#[command(name = "tjpf", version, about = "Tempering and jittering particle filter twin experiments")]
struct Cli {
    /// Worker threads for particle-parallel work (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate the truth trajectory and observations only.
    Truth(RunArgs),
    /// Run a full twin experiment.
    Run(RunArgs),
    /// List presets, or print one as JSON.
    Presets {
        #[arg(long)]
        preset: Option<String>,
    },
    /// Check a config and/or the outputs of a finished run.
    Validate {
        #[command(flatten)]
        source: Source,
        /// Output directory to re-check.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Source {
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Sets the truth seed and derives the ensemble seed from it.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Source {
    fn load(&self) -> Result<Option<ExperimentConfig>, HarnessError> {
        match (&self.config, &self.preset) {
            (Some(p), _) => ExperimentConfig::load(p).map(Some),
            (None, Some(name)) => preset(name).map(Some),
            (None, None) => Ok(None),
        }
    }
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut c = self
            .source
            .load()?
            .ok_or_else(|| HarnessError::Parse("one of --config or --preset is required".into()))?;
        if let Some(s) = self.seed {
            c = c.with_seed(s);
        }
        if let Some(o) = &self.out {
            c.output_dir = Some(o.clone());
        }
        Ok(c)
    }
}

fn execute(cmd: Cmd) -> Result<(), HarnessError> {
    match cmd {
        Cmd::Presets { preset: None } => {
            for n in PRESET_NAMES {
                println!("{n}");
            }
        }
        Cmd::Presets { preset: Some(n) } => println!("{}", preset(&n)?.to_json()),
        Cmd::Truth(a) => {
            let c = a.config()?;
            let dir = c.output_dir.clone().unwrap_or_else(|| PathBuf::from(&c.name));
            let exp = Experiment::new(c)?;
            let truth = exp.generate_truth()?;
            write_truth(&dir, &exp, &truth)?;
            println!("{}: {} states, {} observations -> {}", exp.config().name, truth.states.len(), truth.obs.len(), dir.display());
        }
        Cmd::Run(a) => {
            let mut c = a.config()?;
            if c.output_dir.is_none() {
                c.output_dir = Some(PathBuf::from(&c.name));
            }
            let m = run_experiment(&c)?;
            let n = m.rmse.len();
            println!(
                "{}: {} steps, {} analyses, final rmse {:.6e}, es {:.6e} -> {}",
                m.name,
                n,
                m.traces.len(),
                m.rmse[n - 1],
                m.es[n - 1],
                c.output_dir.as_ref().unwrap().display()
            );
        }
        Cmd::Validate { source, out } => {
            let c = source.load()?;
            if c.is_none() && out.is_none() {
                return Err(HarnessError::Parse("nothing to validate: give --config, --preset or --out".into()));
            }
            if let Some(c) = c {
                c.validate()?;
                println!("config {}: ok", c.name);
            }
            if let Some(dir) = out {
                let n = check_output_dir(&dir)?;
                println!("{}: ok ({n} traces checked)", dir.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(cli.cmd)),
            Err(e) => Err(HarnessError::Parse(format!("--threads: {e}"))),
        },
        None => execute(cli.cmd),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
