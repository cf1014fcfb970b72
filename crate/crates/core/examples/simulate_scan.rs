//! Renders a noisy Y-phantom sweep and writes it as a dataset directory.
//!
//! cargo run --example simulate_scan -- /tmp/scan 7

use std::path::PathBuf;

use vessel_skeleton::dataset::save_with_truth;
use vessel_skeleton::mask::connected_components;
use vessel_skeleton::simulate::{simulate, NoiseModel, ScanParams, YPhantom};

fn main() -> vessel_skeleton::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "scan".into()));
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);

    let y = YPhantom::default();
    let sim = simulate(&y.spec(NoiseModel::moderate()), &ScanParams::default(), seed)?;
    let counts: Vec<usize> = sim.clean_frames.iter().map(|m| connected_components(m).len()).collect();
    let split = counts.iter().position(|&c| c == 2).unwrap_or(counts.len());
    println!("carina at z {:.2} mm; first two-lumen frame {split}", y.carina().z);

    save_with_truth(&out, &sim.dataset, &sim.truth, &sim.clean_frames)?;
    println!("wrote {} frames to {}", sim.dataset.frames.len(), out.display());
    Ok(())
}
