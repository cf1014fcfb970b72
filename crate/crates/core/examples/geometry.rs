//! Circle, line and closest-approach primitives on small hand-made inputs.

use nalgebra::Vector3;
use vessel_skeleton::geometry::{acute_angle_deg, closest_points, fit_line3, min_enclosing_circle, Point2, Point3};

fn main() -> vessel_skeleton::Result<()> {
    let blob = [Point2::new(0.0, 0.0), Point2::new(4.0, 0.0), Point2::new(2.0, 3.0), Point2::new(2.0, 1.0)];
    let c = min_enclosing_circle(&blob)?;
    println!("enclosing circle: centre ({:.3}, {:.3}) radius {:.3}", c.center.x, c.center.y, c.radius);

    let along_z: Vec<Point3> = (0..10).map(|i| Point3::new(0.1 * (i % 2) as f64, 5.0, i as f64, i as f64)).collect();
    let oblique: Vec<Point3> = (0..10).map(|i| Point3::new(i as f64 * 0.5, 5.0, i as f64, i as f64)).collect();
    let (a, b) = (fit_line3(&along_z)?, fit_line3(&oblique)?);
    println!("line a: anchor {:?} direction {:?}", a.anchor.as_slice(), a.direction.as_slice());
    println!("line b: anchor {:?} direction {:?}", b.anchor.as_slice(), b.direction.as_slice());

    let cp = closest_points(&a, &b, 1e-9);
    println!(
        "angle {:.2} deg, closest distance {:.4} mm, parallel {}",
        acute_angle_deg(&a, &b),
        cp.distance,
        cp.parallel
    );
    if let Some(m) = cp.midpoint() {
        println!("meeting point {:?}", m.as_slice());
    }

    let shifted = fit_line3(
        &along_z.iter().map(|p| Point3 { pos: p.pos + Vector3::new(0.0, 3.0, 0.0), t: p.t }).collect::<Vec<_>>(),
    )?;
    let cp = closest_points(&a, &shifted, 1e-9);
    println!("a vs a shifted 3 mm: parallel {}, distance {:.4}", cp.parallel, cp.distance);
    Ok(())
}
