//! Writes a pipeline result as JSON, PLY and CSV.
//!
//! cargo run --example export -- /tmp/out

use std::path::PathBuf;

use vessel_skeleton::export::{export, Format};
use vessel_skeleton::simulate::{simulate, NoiseModel, ScanParams, YPhantom};
use vessel_skeleton::{run, PipelineResult};

fn main() -> vessel_skeleton::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    let sim = simulate(&YPhantom::default().spec(NoiseModel::none()), &ScanParams::default(), 0)?;
    let ds = &sim.dataset;
    let result = run(ds, &ds.config.hyper_params, &ds.config.calibration)?;

    for (format, name) in [(Format::Json, "result.json"), (Format::Ply, "skeleton.ply"), (Format::Csv, "skeleton.csv")]
    {
        let path = dir.join(name);
        export(&result, format, &path)?;
        println!("{format:?}: {}", path.display());
    }
    let back = PipelineResult::read(&dir.join("result.json"))?;
    println!("{} points, JSON round trip identical: {}", back.total_points(), back == result);
    Ok(())
}
