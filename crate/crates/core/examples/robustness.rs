//! Seed sweep over noisy Y-phantoms, and the parallel-vessel control.

use vessel_skeleton::eval::evaluate;
use vessel_skeleton::simulate::{parallel_phantom, simulate, NoiseModel, ScanParams, YPhantom};
use vessel_skeleton::{run, HyperParams};

fn main() -> vessel_skeleton::Result<()> {
    let hp = HyperParams::phantom();
    let sp = ScanParams::default();
    let seeds = 0..10u64;

    let y = YPhantom::default().spec(NoiseModel::moderate());
    let (mut found, mut fp, mut errors) = (0, 0, Vec::new());
    for seed in seeds.clone() {
        let sim = simulate(&y, &sp, seed)?;
        let r = run(&sim.dataset, &hp, &sim.dataset.config.calibration)?;
        let report = evaluate(&r, &sim.truth);
        fp += report.false_positives;
        if let Some(&e) = report.bifurcation_error_mm.first() {
            found += 1;
            errors.push(e);
        }
        println!("seed {seed}: {} bifurcation(s), error {:?}", r.bifurcations.len(), report.bifurcation_error_mm);
    }
    let mean = errors.iter().sum::<f64>() / errors.len().max(1) as f64;
    println!("Y-phantom: found {found}/{}, mean error {mean:.3} mm, {fp} false positive(s)", seeds.end);

    let parallel = parallel_phantom(8.0, 20.0, 2.0, NoiseModel::moderate());
    let mut bifurcations = 0;
    for seed in seeds.clone() {
        let sim = simulate(&parallel, &sp, seed)?;
        bifurcations += run(&sim.dataset, &hp, &sim.dataset.config.calibration)?.bifurcations.len();
    }
    println!("parallel vessels: {bifurcations} bifurcation(s) over {} seeds", seeds.end);
    Ok(())
}
