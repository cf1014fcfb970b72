//! Merging a trunk and two branches, then locating the bifurcation and the
//! needle site.

use nalgebra::Vector3;
use vessel_skeleton::skeleton::{find_bifurcations, merge_all, needle_site};
use vessel_skeleton::tracking::{Track, TrackPoint};
use vessel_skeleton::HyperParams;

fn track(id: usize, from: Vector3<f64>, step: Vector3<f64>, first_frame: usize, n: usize) -> Track {
    let points = (0..n)
        .map(|i| TrackPoint {
            pos: from + step * i as f64,
            t: (first_frame + i) as f64 / 30.0,
            origin_id: id,
            interpolated: false,
        })
        .collect();
    Track { id, points, misses: 0, active: false }
}

fn main() -> vessel_skeleton::Result<()> {
    let dz = 50.0 / 30.0;
    let lateral = dz * 25f64.to_radians().tan();
    let trunk = track(0, Vector3::new(0.0, 20.0, 0.0), Vector3::new(0.0, 0.0, dz), 0, 70);
    let apex = trunk.last().pos + Vector3::new(0.0, 0.0, dz);
    let left = track(1, apex, Vector3::new(-lateral, 0.0, dz), 70, 40);
    let right = track(2, apex, Vector3::new(lateral, 0.0, dz), 70, 40);

    let hp = HyperParams::phantom();
    let merged = merge_all(&[trunk, left, right], &hp);
    for m in &merged {
        println!("merged track {}: members {:?}, {} points", m.id, m.member_ids, m.points.len());
        for b in find_bifurcations(m, &hp) {
            println!(
                "  bifurcation at {:?}, t {:.3} s, {} supporting pair(s)",
                b.position.as_slice(),
                b.t,
                b.supporting_pairs
            );
            let site = needle_site(m, &b, hp.needle_target_mm)?;
            println!("  needle site at {:?}, {:.2} mm cranial", site.position.as_slice(), site.distance_to_bifurcation);
        }
    }
    Ok(())
}
