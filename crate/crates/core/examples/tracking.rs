//! Optimal frame-to-frame assignment on two vessels whose centres swap sides.

use vessel_skeleton::geometry::Point3;
use vessel_skeleton::tracking::{finalize, hungarian, Tracker};
use vessel_skeleton::HyperParams;

fn main() -> vessel_skeleton::Result<()> {
    let cost = vec![vec![1.0, 2.0], vec![5.0, 2.0]];
    let a = hungarian(&cost)?;
    println!("assignment {:?}, cost {}", a.row_to_col, a.cost);

    let hp = HyperParams { delta_td: 5.0, ..HyperParams::phantom() };
    let mut tracker = Tracker::new(hp);
    for i in 0..30 {
        let t = i as f64 / 30.0;
        let z = i as f64 * 1.67;
        let x = 6.0 - 0.4 * i as f64;
        let mut frame = vec![Point3::new(x, 20.0, z, t), Point3::new(-x, 20.0, z, t)];
        if i == 12 {
            frame.push(Point3::new(30.0, 5.0, z, t));
        }
        tracker.step(t, &frame)?;
    }
    for tr in tracker.tracks() {
        println!("track {}: {} point(s), active {}", tr.id, tr.len(), tr.active);
    }
    let kept = finalize(tracker.into_tracks(), &hp);
    println!("{} track(s) kept after filtering", kept.len());
    Ok(())
}
