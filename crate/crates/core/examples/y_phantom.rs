//! End-to-end run on a simulated Y-phantom, scored against its ground truth.

use vessel_skeleton::eval::evaluate;
use vessel_skeleton::simulate::{simulate, NoiseModel, ScanParams, YPhantom};
use vessel_skeleton::{run, HyperParams};

fn main() -> vessel_skeleton::Result<()> {
    let sim = simulate(&YPhantom::default().spec(NoiseModel::none()), &ScanParams::default(), 0)?;
    let ds = &sim.dataset;
    let result = run(ds, &HyperParams::phantom(), &ds.config.calibration)?;

    for t in &result.timings {
        println!("{:<12} {:8.2} ms", t.stage.to_string(), t.seconds * 1e3);
    }
    println!("identification time {:.3} s", result.identification_time_s);
    println!("{:?}", result.stats);

    for (b, site) in result.bifurcations.iter().zip(&result.needle_sites) {
        println!("bifurcation {:?} at t {:.3} s", b.position.as_slice(), b.t);
        if let Some(s) = site {
            println!("needle site {:?}, {:.2} mm away", s.position.as_slice(), s.distance_to_bifurcation);
        }
    }
    let report = evaluate(&result, &sim.truth);
    println!(
        "error {:?} mm, FP {}, FN {}, needle in range {:?}",
        report.bifurcation_error_mm, report.false_positives, report.false_negatives, report.needle_in_range
    );
    Ok(())
}
