//! Lifting a pixel detection into world coordinates through an interpolated
//! probe pose.

use nalgebra::{UnitQuaternion, Vector3};
use vessel_skeleton::geometry::Point2;
use vessel_skeleton::mask::Detection;
use vessel_skeleton::projection::{pose_at, project, Calibration, Pose};

fn main() -> vessel_skeleton::Result<()> {
    let cal = Calibration::for_image(256, 256, 50.0);
    println!("pixel spacing {:.4} mm", cal.pixel_spacing);

    // Probe slides 50 mm/s along z while slowly rolling about z.
    let log: Vec<Pose> = (0..=4)
        .map(|i| {
            let t = i as f64 * 0.5;
            Pose {
                t,
                translation: Vector3::new(0.0, 0.0, 50.0 * t),
                rotation: UnitQuaternion::from_axis_angle(&Vector3::z_axis(), (5.0 * t).to_radians()),
            }
        })
        .collect();

    let pose = pose_at(&log, 0.8)?;
    println!("pose at 0.8 s: z {:.2} mm, roll {:.2} deg", pose.translation.z, pose.rotation.angle().to_degrees());

    let d = Detection { center: Point2::new(128.0, 102.4), radius: 10.0, frame_index: 24, t: 0.8 };
    let p = project(&d, &cal, &log)?;
    println!("detection at pixel (128, 102.4) -> world ({:.3}, {:.3}, {:.3}) mm", p.pos.x, p.pos.y, p.pos.z);
    Ok(())
}
