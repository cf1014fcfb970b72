//! Synthetic sweeps over tubular vessel phantoms with known ground truth.
//!
//! The probe moves along world +z at constant speed with an identity
//! orientation. Image columns map to world x (lateral), rows to world y
//! (depth) and the image plane sits at the probe's current z. Vessels are
//! unions of capsules around polyline centrelines, so a branch cut by the
//! image plane renders as a filled ellipse (a disc when perpendicular).

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Frame, GroundTruth, RunConfig, ScanDataset};
use crate::error::{Error, Result};
use crate::mask::Mask;
use crate::params::HyperParams;
use crate::projection::{Calibration, Pose};

/// One vessel segment: a polyline centreline with a radius at each vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub centerline: Vec<[f64; 3]>,
    pub radii: Vec<f64>,
}

impl Branch {
    pub fn straight(from: Vector3<f64>, to: Vector3<f64>, radius: f64) -> Self {
        Self { centerline: vec![from.into(), to.into()], radii: vec![radius, radius] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Probability of flipping each pixel.
    #[serde(default)]
    pub flip_prob: f64,
    /// Mean number of filled speckle discs added per frame.
    #[serde(default)]
    pub speckle_per_frame: f64,
    /// Speckle radius range in pixels.
    #[serde(default = "default_speckle_radius")]
    pub speckle_radius_px: [f64; 2],
    /// Standard deviation of the Gaussian error added to each recorded pose
    /// translation component, in millimetres.
    #[serde(default)]
    pub pose_jitter_mm: f64,
}

fn default_speckle_radius() -> [f64; 2] {
    [1.5, 4.0]
}

impl NoiseModel {
    pub fn none() -> Self {
        Self { speckle_radius_px: default_speckle_radius(), ..Self::default() }
    }

    /// 1% pixel flips, two speckles per frame and 0.2 mm pose jitter.
    pub fn moderate() -> Self {
        Self {
            flip_prob: 0.01,
            speckle_per_frame: 2.0,
            speckle_radius_px: default_speckle_radius(),
            pose_jitter_mm: 0.2,
        }
    }
}

/// Vessel tree plus its ground-truth bifurcation points (world mm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub branches: Vec<Branch>,
    #[serde(default)]
    pub junctions: Vec<[f64; 3]>,
    #[serde(default = "NoiseModel::none")]
    pub noise: NoiseModel,
}

/// Geometry of a symmetric Y-shaped phantom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YPhantom {
    /// Point where the branch centrelines leave the trunk centreline.
    pub apex: Vector3<f64>,
    pub trunk_length: f64,
    /// Angle of each branch to the trunk axis, degrees.
    pub branch_angle_deg: f64,
    pub branch_length: f64,
    pub radius: f64,
}

impl Default for YPhantom {
    fn default() -> Self {
        Self {
            apex: Vector3::new(0.0, 20.0, 110.0),
            trunk_length: 120.0,
            branch_angle_deg: 25.0,
            branch_length: 70.0,
            radius: 2.0,
        }
    }
}

impl YPhantom {
    /// In-plane point where the two branch cross-sections stop overlapping:
    /// the first sweep position at which the scan shows two separate lumens.
    pub fn carina(&self) -> Vector3<f64> {
        let theta = self.branch_angle_deg.to_radians();
        self.apex + Vector3::new(0.0, 0.0, self.radius / theta.sin())
    }

    pub fn spec(&self, noise: NoiseModel) -> PhantomSpec {
        let theta = self.branch_angle_deg.to_radians();
        let trunk_start = self.apex - Vector3::new(0.0, 0.0, self.trunk_length);
        let left = Vector3::new(-theta.sin(), 0.0, theta.cos()) * self.branch_length;
        let right = Vector3::new(theta.sin(), 0.0, theta.cos()) * self.branch_length;
        PhantomSpec {
            branches: vec![
                Branch::straight(trunk_start, self.apex, self.radius),
                Branch::straight(self.apex, self.apex + left, self.radius),
                Branch::straight(self.apex, self.apex + right, self.radius),
            ],
            junctions: vec![self.carina().into()],
            noise,
        }
    }
}

/// Two straight vessels parallel to the sweep, `gap` millimetres apart.
pub fn parallel_phantom(gap: f64, depth: f64, radius: f64, noise: NoiseModel) -> PhantomSpec {
    let z = (-10.0, 220.0);
    let vessel = |x: f64| Branch::straight(Vector3::new(x, depth, z.0), Vector3::new(x, depth, z.1), radius);
    PhantomSpec { branches: vec![vessel(-gap / 2.0), vessel(gap / 2.0)], junctions: Vec::new(), noise }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    pub velocity_mm_s: f64,
    pub frame_rate_hz: f64,
    pub width: usize,
    pub height: usize,
    pub depth_mm: f64,
    pub n_frames: usize,
    /// Sweep position (world z) of the first frame.
    #[serde(default)]
    pub start_mm: f64,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self {
            velocity_mm_s: 50.0,
            frame_rate_hz: 30.0,
            width: 256,
            height: 256,
            depth_mm: 50.0,
            n_frames: 120,
            start_mm: 0.0,
        }
    }
}

impl ScanParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.velocity_mm_s > 0.0
            && self.frame_rate_hz > 0.0
            && self.depth_mm > 0.0
            && self.width > 0
            && self.height > 0
            && self.n_frames > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParam(format!("scan parameters must be positive: {self:?}")))
        }
    }

    pub fn frame_time(&self, index: usize) -> f64 {
        index as f64 / self.frame_rate_hz
    }

    pub fn calibration(&self) -> Calibration {
        Calibration::for_image(self.width, self.height, self.depth_mm)
    }
}

/// Contents of a simulation spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub phantom: PhantomSpec,
    #[serde(default)]
    pub scan: ScanParams,
}

impl SimulationSpec {
    pub fn read(path: &std::path::Path) -> Result<Self> {
        crate::dataset::read_json(path)
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        crate::dataset::write_json(path, self)
    }
}

/// A rendered scan with everything needed to score a reconstruction.
#[derive(Debug, Clone)]
pub struct SimulatedScan {
    pub dataset: ScanDataset,
    pub truth: GroundTruth,
    /// Noise-free masks, one per frame.
    pub clean_frames: Vec<Mask>,
}

struct Capsule {
    a: Vector3<f64>,
    b: Vector3<f64>,
    ra: f64,
    rb: f64,
}

impl Capsule {
    fn r_max(&self) -> f64 {
        self.ra.max(self.rb)
    }

    /// Whether `p` lies within the locally interpolated radius of the segment.
    fn contains(&self, p: &Vector3<f64>) -> bool {
        let ab = self.b - self.a;
        let len2 = ab.norm_squared();
        let s = if len2 > 0.0 { ((p - self.a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
        let r = self.ra + (self.rb - self.ra) * s;
        (self.a + ab * s - p).norm_squared() <= r * r
    }

    /// World x/y bounds of the cross-section with the plane `z`, if any.
    fn plane_bounds(&self, z: f64) -> Option<([f64; 2], [f64; 2])> {
        let r = self.r_max();
        let (za, zb) = (self.a.z, self.b.z);
        if z < za.min(zb) - r || z > za.max(zb) + r {
            return None;
        }
        // Portion of the axis within r of the plane.
        let (s0, s1) = if (zb - za).abs() < 1e-12 {
            (0.0, 1.0)
        } else {
            let u = ((z - r - za) / (zb - za)).clamp(0.0, 1.0);
            let v = ((z + r - za) / (zb - za)).clamp(0.0, 1.0);
            (u.min(v), u.max(v))
        };
        let (p, q) = (self.a.lerp(&self.b, s0), self.a.lerp(&self.b, s1));
        Some(([p.x.min(q.x) - r, p.x.max(q.x) + r], [p.y.min(q.y) - r, p.y.max(q.y) + r]))
    }
}

fn capsules(spec: &PhantomSpec) -> Result<Vec<Capsule>> {
    let mut out = Vec::new();
    for (i, br) in spec.branches.iter().enumerate() {
        if br.centerline.len() < 2 || br.centerline.len() != br.radii.len() {
            return Err(Error::InvalidParam(format!("branch {i} needs >= 2 vertices with one radius each")));
        }
        if br.radii.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::InvalidParam(format!("branch {i} has a non-positive radius")));
        }
        for k in 0..br.centerline.len() - 1 {
            out.push(Capsule {
                a: Vector3::from(br.centerline[k]),
                b: Vector3::from(br.centerline[k + 1]),
                ra: br.radii[k],
                rb: br.radii[k + 1],
            });
        }
    }
    Ok(out)
}

/// Noise-free mask of the vessel cross-sections at sweep position `z`.
pub fn render_plane(spec: &PhantomSpec, sp: &ScanParams, z: f64) -> Result<Mask> {
    let caps = capsules(spec)?;
    Ok(render_with(&caps, sp, z))
}

fn render_with(caps: &[Capsule], sp: &ScanParams, z: f64) -> Mask {
    let cal = sp.calibration();
    let s = cal.pixel_spacing;
    let [ox, oy] = cal.image_origin_offset;
    let mut mask = Mask::new(sp.width, sp.height);
    for cap in caps {
        let Some((xr, yr)) = cap.plane_bounds(z) else {
            continue;
        };
        let col = |x: f64| ((x - ox) / s).clamp(0.0, (sp.width - 1) as f64);
        let row = |y: f64| ((y - oy) / s).clamp(0.0, (sp.height - 1) as f64);
        let (u0, u1) = (col(xr[0]).floor() as usize, col(xr[1]).ceil() as usize);
        let (v0, v1) = (row(yr[0]).floor() as usize, row(yr[1]).ceil() as usize);
        for v in v0..=v1 {
            for u in u0..=u1 {
                if mask.get(u, v) {
                    continue;
                }
                let p = Vector3::new(ox + u as f64 * s, oy + v as f64 * s, z);
                if cap.contains(&p) {
                    mask.set(u, v, true);
                }
            }
        }
    }
    mask
}

fn add_noise(mask: &Mask, noise: &NoiseModel, rng: &mut ChaCha8Rng) -> Mask {
    let (w, h) = (mask.width(), mask.height());
    let mut out = mask.clone();
    if noise.flip_prob > 0.0 {
        for v in 0..h {
            for u in 0..w {
                if rng.random_bool(noise.flip_prob) {
                    out.set(u, v, !out.get(u, v));
                }
            }
        }
    }
    let whole = noise.speckle_per_frame.floor();
    let extra = rng.random_bool((noise.speckle_per_frame - whole).clamp(0.0, 1.0));
    let count = whole as usize + extra as usize;
    for _ in 0..count {
        let cx = rng.random_range(0.0..w as f64);
        let cy = rng.random_range(0.0..h as f64);
        let [rmin, rmax] = noise.speckle_radius_px;
        let r = if rmax > rmin { rng.random_range(rmin..rmax) } else { rmin };
        let (u0, u1) = ((cx - r).floor().max(0.0) as usize, ((cx + r).ceil() as usize).min(w - 1));
        let (v0, v1) = ((cy - r).floor().max(0.0) as usize, ((cy + r).ceil() as usize).min(h - 1));
        for v in v0..=v1 {
            for u in u0..=u1 {
                if (u as f64 - cx).powi(2) + (v as f64 - cy).powi(2) <= r * r {
                    out.set(u, v, true);
                }
            }
        }
    }
    out
}

/// Renders a sweep over `spec`. Deterministic for a given seed.
pub fn simulate(spec: &PhantomSpec, sp: &ScanParams, seed: u64) -> Result<SimulatedScan> {
    sp.validate()?;
    let caps = capsules(spec)?;
    let noise = &spec.noise;
    if !(0.0..=1.0).contains(&noise.flip_prob) || noise.speckle_per_frame < 0.0 || noise.pose_jitter_mm < 0.0 {
        return Err(Error::InvalidParam(format!("invalid noise model {noise:?}")));
    }
    let jitter = Normal::new(0.0, noise.pose_jitter_mm).map_err(|e| Error::InvalidParam(e.to_string()))?;

    let mut frames = Vec::with_capacity(sp.n_frames);
    let mut clean_frames = Vec::with_capacity(sp.n_frames);
    let mut poses = Vec::with_capacity(sp.n_frames);
    for i in 0..sp.n_frames {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let t = sp.frame_time(i);
        let z = sp.start_mm + sp.velocity_mm_s * t;
        let clean = render_with(&caps, sp, z);
        let noisy = add_noise(&clean, noise, &mut rng);

        let mut translation = Vector3::new(0.0, 0.0, z);
        if noise.pose_jitter_mm > 0.0 {
            translation += Vector3::from_fn(|_, _| jitter.sample(&mut rng));
        }
        poses.push(Pose { translation, ..Pose::identity(t) });
        frames.push(Frame { index: i, t, mask: noisy });
        clean_frames.push(clean);
    }
    if clean_frames.iter().all(Mask::is_empty) {
        return Err(Error::EmptyScan);
    }

    let config = RunConfig { hyper_params: HyperParams::phantom(), calibration: sp.calibration(), scan: *sp };
    let truth = GroundTruth { junctions: spec.junctions.iter().map(|&j| Vector3::from(j)).collect() };
    Ok(SimulatedScan { dataset: ScanDataset { frames, poses, config }, truth, clean_frames })
}
