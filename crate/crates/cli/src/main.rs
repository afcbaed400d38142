use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rfscene_cli::config::{resolve, Overrides};
use rfscene_cli::eval::cmd_eval;
use rfscene_cli::pipeline::{run_pipeline, run_single_stage, Stage};
use rfscene_cli::presets::{generate, scene_json, Preset};
use rfscene_cli::{CliError, PipelineConfig, Result};

#[derive(Parser)]
#[command(name = "rfscene", version, about = "mmWave OFDM scene reconstruction toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scene utilities.
    Scene {
        #[command(subcommand)]
        command: SceneCommand,
    },
    /// Scene, trajectory and per-frame CIR.
    Simulate(RunArgs),
    /// Radio frames and Cartesian volumes from the CIRs in a run directory.
    Image(RunArgs),
    /// Multi-frame fusion with every frame as the reference.
    Fuse(RunArgs),
    /// Voxel and depth heads from the fused volumes.
    Reconstruct(RunArgs),
    /// Compare a prediction directory with a ground-truth directory.
    Eval(EvalArgs),
    /// All stages, ground truth, evaluation and a manifest.
    Pipeline(RunArgs),
}

#[derive(Subcommand)]
enum SceneCommand {
    /// Write a preset scene as JSON.
    Gen {
        #[arg(long)]
        preset: Preset,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON config. Stage commands fall back to the run directory's
    /// config.json, then to defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    frames: Option<usize>,
    /// Disable receiver noise.
    #[arg(long)]
    no_noise: bool,
    /// Worker threads; all cores when unset.
    #[arg(long, env = "RFSCENE_THREADS")]
    threads: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Report directory; defaults to the prediction directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Supplies the occupancy threshold and loss weights.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            frames: self.frames,
            no_noise: self.no_noise,
        }
    }

    fn config(&self, fallback_to_run_dir: bool) -> Result<PipelineConfig> {
        let overrides = self.overrides();
        let mut path = self.config.clone();
        if path.is_none() && fallback_to_run_dir {
            if let Some(out) = &self.out {
                let saved = out.join("config.json");
                if saved.is_file() {
                    path = Some(saved);
                }
            }
        }
        resolve(path.as_deref(), &overrides)
    }
}

fn stage(args: &RunArgs, stage: Stage) -> Result<()> {
    let cfg = args.config(stage != Stage::Simulate)?;
    let files = run_single_stage(&cfg, &cfg.output, stage, args.threads)?;
    eprintln!("{}: wrote {} files to {}", stage.name(), files.len(), cfg.output.display());
    Ok(())
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Scene {
            command: SceneCommand::Gen { preset, seed, out },
        } => {
            let text = scene_json(&generate(preset, seed));
            match out {
                Some(p) => write_file(&p, &text)?,
                None => print!("{text}"),
            }
        }
        Command::Simulate(a) => stage(&a, Stage::Simulate)?,
        Command::Image(a) => stage(&a, Stage::Image)?,
        Command::Fuse(a) => stage(&a, Stage::Fuse)?,
        Command::Reconstruct(a) => stage(&a, Stage::Reconstruct)?,
        Command::Eval(a) => {
            let cfg = resolve(a.config.as_deref(), &Overrides::default())?;
            let out = a.out.unwrap_or_else(|| a.pred.clone());
            let report = cmd_eval(&a.pred, &a.gt, &out, cfg.heads.tau_occ, &cfg.loss)?;
            print_json(&report);
        }
        Command::Pipeline(a) => {
            let cfg = a.config(false)?;
            let summary = run_pipeline(&cfg, &cfg.output, a.threads)?;
            eprintln!("pipeline: results in {}", summary.dir.display());
            print_json(&summary.report);
        }
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Config { .. } | CliError::UnknownPreset(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
