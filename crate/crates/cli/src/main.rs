use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stair_radar::experiment::ExperimentConfig;
use stair_radar_cli::{
    cmd_evaluate, cmd_process, cmd_simulate, cmd_sweep, cmd_train, load_config, CliResult,
    ProcessingFlags, ScenarioFile,
};

#[derive(Parser)]
#[command(
    name = "stair-radar",
    version,
    about = "Radar stair perception: simulate, process, sweep, train, evaluate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config (scenario for simulate/process, experiment otherwise).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides every seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Run directory.
    #[arg(long, default_value = "runs/default")]
    out: PathBuf,
}

#[derive(Args)]
struct DspFlags {
    /// Compute the angle FFT at every range bin.
    #[arg(long)]
    exhaustive_aoa: bool,
    /// Parabolic sub-bin refinement of range and angle peaks.
    #[arg(long)]
    peak_interp: bool,
    /// False-alarm probability of the range CFAR.
    #[arg(long)]
    cfar_pfa: Option<f64>,
}

impl DspFlags {
    fn flags(&self) -> ProcessingFlags {
        ProcessingFlags {
            exhaustive_aoa: self.exhaustive_aoa,
            peak_interp: self.peak_interp,
            cfar_pfa: self.cfar_pfa,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a walk's cubes plus the ground-truth sidecar.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Target lists and the dimension report for one acquisition.
    Process {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dsp: DspFlags,
        /// Read cubes from this directory instead of synthesizing in memory.
        #[arg(long)]
        cubes: Option<PathBuf>,
    },
    /// Build the enhancer dataset over the stair grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dsp: DspFlags,
    },
    /// Train the enhancer on the training split.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        split_seed: Option<u64>,
        /// Defaults to <out>/dataset.csv.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Compare the enhancer with the initial estimator on the test split.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        split_seed: Option<u64>,
        /// Defaults to <out>/dataset.csv.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Defaults to <out>/model.json.
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

fn scenario(common: &Common) -> CliResult<ScenarioFile> {
    let mut s: ScenarioFile = load_config(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        s.seed = seed;
    }
    Ok(s)
}

fn experiment(common: &Common, split_seed: Option<u64>) -> CliResult<ExperimentConfig> {
    let mut cfg: ExperimentConfig = load_config(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(s) = split_seed {
        cfg.split.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate { common } => {
            let s = cmd_simulate(&scenario(&common)?, &common.out)?;
            println!(
                "wrote {} cubes and {}",
                s.cube_files.len(),
                s.truth_file.display()
            );
        }
        Command::Process { common, dsp, cubes } => {
            let s = cmd_process(
                &scenario(&common)?,
                cubes.as_deref(),
                dsp.flags(),
                &common.out,
            )?;
            let r = &s.report;
            match &r.aggregate {
                Some(a) => println!(
                    "{}/{} frames estimated; depth {:.2} cm, height {:.2} cm",
                    r.frames_with_estimate,
                    r.frame_count,
                    a.depth_m * 100.0,
                    a.height_m * 100.0
                ),
                None => println!("no estimate in {} frames", r.frame_count),
            }
        }
        Command::Sweep { common, dsp } => {
            let mut cfg = experiment(&common, None)?;
            dsp.flags().apply(&mut cfg.pipeline.processing);
            let d = cmd_sweep(&cfg, &common.out)?;
            println!(
                "{} samples over {} combinations",
                d.samples.len(),
                d.coverage.len()
            );
            for w in &d.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::Train {
            common,
            epochs,
            split_seed,
            dataset,
        } => {
            let mut cfg = experiment(&common, split_seed)?;
            if let Some(e) = epochs {
                cfg.train.epochs = e;
            }
            let dataset = dataset.unwrap_or_else(|| common.out.join("dataset.csv"));
            let (_, history) = cmd_train(&cfg, &dataset, &common.out)?;
            if let Some(last) = history.last() {
                println!(
                    "trained {} epochs, final training loss {:.3e}",
                    history.len(),
                    last.train_loss
                );
            }
        }
        Command::Evaluate {
            common,
            split_seed,
            dataset,
            model,
        } => {
            let cfg = experiment(&common, split_seed)?;
            let dataset = dataset.unwrap_or_else(|| common.out.join("dataset.csv"));
            let model = model.unwrap_or_else(|| common.out.join("model.json"));
            let imp = cmd_evaluate(&cfg, &dataset, &model, &common.out)?;
            let pct =
                |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{:.1}%", v * 100.0));
            println!(
                "MAE improvement: depth {}, height {}",
                pct(imp.depth.mae),
                pct(imp.height.mae)
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
