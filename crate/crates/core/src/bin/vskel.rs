use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vessel_skeleton::dataset::{load_truth_frames, save_with_truth, GroundTruth, RunConfig, ScanDataset};
use vessel_skeleton::eval::{evaluate, mean_iou};
use vessel_skeleton::export::{export, Format};
use vessel_skeleton::simulate::{simulate, SimulationSpec};
use vessel_skeleton::{run, Error, HyperParams, PipelineResult, Profile, Result};

/// Vessel skeleton and bifurcation finder for tracked ultrasound masks.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic scan directory from a phantom spec.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the pipeline on a scan directory.
    Run {
        #[arg(long)]
        data: PathBuf,
        /// Defaults to <data>/config.json.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Replace the configured thresholds with a built-in set.
        #[arg(long, value_enum)]
        profile: Option<Profile>,
    },
    /// Score a result against ground truth and print the report as JSON.
    Eval {
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Scan directory with truth_frames/, for mask IoU.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Convert a result file.
    Export {
        #[arg(long)]
        result: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        #[arg(long)]
        out: PathBuf,
    },
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate { spec, out, seed } => {
            let spec = SimulationSpec::read(&spec)?;
            let sim = simulate(&spec.phantom, &spec.scan, seed)?;
            save_with_truth(&out, &sim.dataset, &sim.truth, &sim.clean_frames)?;
            eprintln!("wrote {} frames to {}", sim.dataset.frames.len(), out.display());
        }
        Command::Run { data, config, out, profile } => {
            let dataset = ScanDataset::load(&data, config.as_deref())?;
            let RunConfig { hyper_params, calibration, .. } = dataset.config;
            let hp = profile.map_or(hyper_params, HyperParams::for_profile);
            let result = run(&dataset, &hp, &calibration)?;
            for w in &result.warnings {
                eprintln!("warning: {w}");
            }
            result.write(&out)?;
            eprintln!(
                "{} merged track(s), {} bifurcation(s) in {:.3} s",
                result.merged_tracks.len(),
                result.bifurcations.len(),
                result.identification_time_s
            );
        }
        Command::Eval { result, truth, data } => {
            let result = PipelineResult::read(&result)?;
            let truth = GroundTruth::read(&truth)?;
            let mut report = evaluate(&result, &truth);
            if let Some(dir) = data {
                let dataset = ScanDataset::load(&dir, None)?;
                if let Some(clean) = load_truth_frames(&dir)? {
                    let pairs = dataset
                        .frames
                        .iter()
                        .filter_map(|f| clean.iter().find(|(i, _)| *i == f.index).map(|(_, m)| (&f.mask, m)));
                    report.mean_iou = mean_iou(pairs);
                }
            }
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        }
        Command::Export { result, format, out } => {
            export(&PipelineResult::read(&result)?, format, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_input_error() {
        2
    } else {
        1
    }
}
