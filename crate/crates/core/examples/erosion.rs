//! Splitting two touching vessel cross-sections by repeated erosion.

use vessel_skeleton::mask::{connected_components, detect, erode_until_stable, Mask};

fn show(m: &Mask) {
    for y in (0..m.height()).step_by(2) {
        let row: String = (0..m.width()).map(|x| if m.get(x, y) { '#' } else { '.' }).collect();
        println!("{row}");
    }
}

fn main() -> vessel_skeleton::Result<()> {
    let m = Mask::from_fn(60, 30, |x, y| {
        let (x, y) = (x as f64, y as f64);
        (x - 21.0).hypot(y - 15.0) <= 10.0 || (x - 39.0).hypot(y - 15.0) <= 10.0
    });
    show(&m);
    println!("before: {} component(s)", connected_components(&m).len());

    let e = erode_until_stable(&m, 6.0, 64)?;
    println!("after {} iterations (converged: {}): {} segment(s)", e.iterations, e.converged, e.segments.len());
    for s in &e.segments {
        println!(
            "  centre ({:.1}, {:.1}) radius {:.2} px, {} px",
            s.mec.center.x,
            s.mec.center.y,
            s.mec.radius,
            s.pixels.len()
        );
    }
    let kept = detect(&e.segments, 3.0, 0, 0.0);
    println!("{} detection(s) with radius >= 3 px", kept.len());
    Ok(())
}
