//! Pixel detections to timestamped world points via the probe pose log.
//!
//! Image axes: `u` (column) runs along the probe's lateral axis and `v` (row)
//! along its axial (depth) axis. Both directions are configurable through
//! [`Calibration`]. The world frame is in millimetres.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::mask::Detection;

const QUATERNION_TOLERANCE: f64 = 1e-6;

/// Probe pose at time `t`: world = rotation * probe + translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub t: f64,
    pub translation: Vector3<f64>,
    pub rotation: UnitQuaternion<f64>,
}

impl Pose {
    pub fn identity(t: f64) -> Self {
        Self { t, translation: Vector3::zeros(), rotation: UnitQuaternion::identity() }
    }

    pub fn transform(&self, probe: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * probe + self.translation
    }
}

/// One line of the pose log: `{"t": s, "p": [mm, mm, mm], "q": [w, x, y, z]}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub t: f64,
    pub p: [f64; 3],
    pub q: [f64; 4],
}

impl TryFrom<PoseRecord> for Pose {
    type Error = Error;

    fn try_from(r: PoseRecord) -> Result<Self> {
        let q = Quaternion::new(r.q[0], r.q[1], r.q[2], r.q[3]);
        let norm = q.norm();
        if !((norm - 1.0).abs() <= QUATERNION_TOLERANCE) {
            return Err(Error::InvalidQuaternion { t: r.t, norm });
        }
        Ok(Pose { t: r.t, translation: Vector3::from(r.p), rotation: UnitQuaternion::new_normalize(q) })
    }
}

impl From<&Pose> for PoseRecord {
    fn from(p: &Pose) -> Self {
        let q = p.rotation.quaternion();
        PoseRecord { t: p.t, p: p.translation.into(), q: [q.w, q.i, q.j, q.k] }
    }
}

/// Parses a JSON-lines pose log. Blank lines are skipped.
pub fn parse_pose_log(reader: impl BufRead, path: &Path) -> Result<Vec<Pose>> {
    let mut poses: Vec<Pose> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PoseRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Format { path: path.to_owned(), msg: format!("line {}: {e}", lineno + 1) })?;
        let pose = Pose::try_from(rec)?;
        if poses.last().is_some_and(|prev| pose.t <= prev.t) {
            return Err(Error::UnsortedPoseLog { t: pose.t });
        }
        poses.push(pose);
    }
    Ok(poses)
}

pub fn read_pose_log(path: &Path) -> Result<Vec<Pose>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_pose_log(BufReader::new(f), path)
}

pub fn write_pose_log(path: &Path, poses: &[Pose]) -> Result<()> {
    let mut out = String::new();
    for p in poses {
        out.push_str(&serde_json::to_string(&PoseRecord::from(p)).expect("pose serializes"));
        out.push('\n');
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Image-to-probe mapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Millimetres per pixel, isotropic.
    pub pixel_spacing: f64,
    /// Probe-frame position (lateral, axial) of pixel (0, 0), in millimetres.
    pub image_origin_offset: [f64; 2],
    /// Probe-frame unit vector along increasing image column.
    #[serde(default = "lateral_default")]
    pub lateral_axis: [f64; 3],
    /// Probe-frame unit vector along increasing image row (depth).
    #[serde(default = "axial_default")]
    pub axial_axis: [f64; 3],
}

fn lateral_default() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

fn axial_default() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

impl Default for Calibration {
    fn default() -> Self {
        Self {
            pixel_spacing: 1.0,
            image_origin_offset: [0.0, 0.0],
            lateral_axis: lateral_default(),
            axial_axis: axial_default(),
        }
    }
}

impl Calibration {
    /// Isotropic spacing that maps the image height onto `depth_mm`, with the
    /// image centred laterally on the probe axis.
    pub fn for_image(width: usize, height: usize, depth_mm: f64) -> Self {
        let spacing = depth_mm / height as f64;
        Self { pixel_spacing: spacing, image_origin_offset: [-(width as f64) / 2.0 * spacing, 0.0], ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pixel_spacing > 0.0) || !self.pixel_spacing.is_finite() {
            return Err(Error::InvalidParam(format!("pixel_spacing must be positive, got {}", self.pixel_spacing)));
        }
        for axis in [self.lateral_axis, self.axial_axis] {
            let n = Vector3::from(axis).norm();
            if (n - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidParam(format!("probe axis {axis:?} is not a unit vector")));
            }
        }
        Ok(())
    }

    /// Probe-frame position of a (sub)pixel location.
    pub fn pixel_to_probe(&self, u: f64, v: f64) -> Vector3<f64> {
        let plane = Vector2::new(u, v) * self.pixel_spacing + Vector2::from(self.image_origin_offset);
        Vector3::from(self.lateral_axis) * plane.x + Vector3::from(self.axial_axis) * plane.y
    }
}

/// Pose at time `t`: translation is interpolated linearly and rotation by
/// slerp between the bracketing log entries. Outside the log's time span the
/// nearest endpoint is returned.
pub fn pose_at(log: &[Pose], t: f64) -> Result<Pose> {
    let (first, last) = match (log.first(), log.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::EmptyPoseLog),
    };
    if t <= first.t {
        return Ok(Pose { t, ..*first });
    }
    if t >= last.t {
        return Ok(Pose { t, ..*last });
    }
    let hi = log.partition_point(|p| p.t < t);
    let b = &log[hi];
    if b.t == t {
        return Ok(*b);
    }
    let a = &log[hi - 1];
    let frac = (t - a.t) / (b.t - a.t);
    let translation = a.translation.lerp(&b.translation, frac);
    let rotation =
        a.rotation.try_slerp(&b.rotation, frac, 1e-12).unwrap_or_else(|| a.rotation.nlerp(&b.rotation, frac));
    Ok(Pose { t, translation, rotation })
}

/// World position of a detection's centre at the detection's timestamp.
pub fn project(d: &Detection, cal: &Calibration, log: &[Pose]) -> Result<Point3> {
    let pose = pose_at(log, d.t)?;
    let probe = cal.pixel_to_probe(d.center.x, d.center.y);
    Ok(Point3 { pos: pose.transform(&probe), t: d.t })
}
