//! Geometric primitives: minimum enclosing circles, least-squares 3D lines
//! and closest points between two lines.

use nalgebra::{Matrix3, Vector3};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for the parallel-line test, applied to unit directions.
pub const DEFAULT_EPS_I: f64 = 1e-9;

/// Point sets larger than this are reduced to their convex hull before the
/// enclosing circle is computed.
const HULL_THRESHOLD: usize = 512;

const MEC_SHUFFLE_SEED: u64 = 0x005e_edc1_4c1e;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A position in world millimetres with its acquisition time in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub pos: Vector3<f64>,
    pub t: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64, t: f64) -> Self {
        Self { pos: Vector3::new(x, y, z), t }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle2 {
    pub center: Point2,
    pub radius: f64,
}

impl Circle2 {
    pub fn contains(&self, p: &Point2) -> bool {
        self.center.dist(p) <= self.radius * (1.0 + 1e-14) + 1e-12
    }
}

/// `P(s) = anchor + s * direction`, with `direction` of unit length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line3 {
    pub anchor: Vector3<f64>,
    pub direction: Vector3<f64>,
}

impl Line3 {
    /// Builds a line, normalizing `direction`. Returns `None` for a zero direction.
    pub fn new(anchor: Vector3<f64>, direction: Vector3<f64>) -> Option<Self> {
        let n = direction.norm();
        if !(n > 0.0) || !n.is_finite() {
            return None;
        }
        Some(Self { anchor, direction: direction / n })
    }

    pub fn point_at(&self, s: f64) -> Vector3<f64> {
        self.anchor + self.direction * s
    }
}

/// Closest points between two lines. When `parallel` is set, the parameters
/// and points are NaN and must not be used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestPoints {
    pub t1_star: f64,
    pub t2_star: f64,
    pub p1: Vector3<f64>,
    pub p2: Vector3<f64>,
    pub distance: f64,
    pub parallel: bool,
}

impl ClosestPoints {
    /// Midpoint of the two closest points, `None` for parallel lines.
    pub fn midpoint(&self) -> Option<Vector3<f64>> {
        (!self.parallel).then(|| (self.p1 + self.p2) * 0.5)
    }
}

/// Smallest circle covering all `points`.
///
/// Incremental Welzl construction over a shuffled copy of the input. The
/// shuffle uses a fixed seed so the result only depends on the input order.
pub fn min_enclosing_circle(points: &[Point2]) -> Result<Circle2> {
    if points.is_empty() {
        return Err(Error::NoPoints);
    }
    let mut pts = if points.len() > HULL_THRESHOLD { convex_hull(points) } else { points.to_vec() };
    let mut rng = ChaCha8Rng::seed_from_u64(MEC_SHUFFLE_SEED);
    pts.shuffle(&mut rng);

    let mut circle: Option<Circle2> = None;
    for i in 0..pts.len() {
        let p = pts[i];
        if circle.is_none_or(|c| !c.contains(&p)) {
            circle = Some(circle_with_point(&pts[..i], p));
        }
    }
    Ok(circle.expect("non-empty input"))
}

/// Smallest circle enclosing `pts` with `p` on its boundary.
fn circle_with_point(pts: &[Point2], p: Point2) -> Circle2 {
    let mut c = Circle2 { center: p, radius: 0.0 };
    for (j, &q) in pts.iter().enumerate() {
        if !c.contains(&q) {
            c = if c.radius == 0.0 { diameter_circle(p, q) } else { circle_with_two_points(&pts[..j], p, q) };
        }
    }
    c
}

/// Smallest circle enclosing `pts` with both `p` and `q` on its boundary.
fn circle_with_two_points(pts: &[Point2], p: Point2, q: Point2) -> Circle2 {
    let base = diameter_circle(p, q);
    let mut left: Option<Circle2> = None;
    let mut right: Option<Circle2> = None;

    for r in pts {
        if base.contains(r) {
            continue;
        }
        let turn = cross(p, q, *r);
        let Some(c) = circumcircle(p, q, *r) else {
            continue;
        };
        let side = cross(p, q, c.center);
        if turn > 0.0 {
            if left.is_none_or(|l| side > cross(p, q, l.center)) {
                left = Some(c);
            }
        } else if turn < 0.0 && right.is_none_or(|rc| side < cross(p, q, rc.center)) {
            right = Some(c);
        }
    }

    match (left, right) {
        (None, None) => base,
        (Some(l), None) => l,
        (None, Some(r)) => r,
        (Some(l), Some(r)) => {
            if l.radius <= r.radius {
                l
            } else {
                r
            }
        }
    }
}

fn cross(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

pub(crate) fn diameter_circle(a: Point2, b: Point2) -> Circle2 {
    let center = Point2::new((a.x + b.x) / 2.0, (a.y + b.y) / 2.0);
    Circle2 { center, radius: center.dist(&a).max(center.dist(&b)) }
}

pub(crate) fn circumcircle(a: Point2, b: Point2, c: Point2) -> Option<Circle2> {
    // Translate to reduce cancellation.
    let ox = (a.x.min(b.x).min(c.x) + a.x.max(b.x).max(c.x)) / 2.0;
    let oy = (a.y.min(b.y).min(c.y) + a.y.max(b.y).max(c.y)) / 2.0;
    let (ax, ay) = (a.x - ox, a.y - oy);
    let (bx, by) = (b.x - ox, b.y - oy);
    let (cx, cy) = (c.x - ox, c.y - oy);
    let d = (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by)) * 2.0;
    if d == 0.0 {
        return None;
    }
    let a2 = ax * ax + ay * ay;
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let x = ox + (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d;
    let y = oy + (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d;
    let center = Point2::new(x, y);
    let radius = center.dist(&a).max(center.dist(&b)).max(center.dist(&c));
    Some(Circle2 { center, radius })
}

/// Convex hull by monotone chain, counter-clockwise, collinear points dropped.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Least-squares line through `points`: anchor at the mean, direction along
/// the first principal component of the mean-centred positions.
///
/// The direction is sign-normalized so that its largest-magnitude component
/// is positive.
pub fn fit_line3(points: &[Point3]) -> Result<Line3> {
    fit_line_positions(points.iter().map(|p| p.pos))
}

pub(crate) fn fit_line_positions<I>(positions: I) -> Result<Line3>
where
    I: Iterator<Item = Vector3<f64>> + Clone,
{
    let n = positions.clone().count();
    if n < 2 {
        return Err(Error::DegeneratePointSet);
    }
    let mean = positions.clone().fold(Vector3::zeros(), |acc, p| acc + p) / n as f64;
    let mut cov = Matrix3::zeros();
    for p in positions {
        let d = p - mean;
        cov += d * d.transpose();
    }
    let scale = cov.abs().max();
    if !(scale > 0.0) {
        return Err(Error::DegeneratePointSet);
    }
    let (values, vectors) = symmetric_eigen3(&cov);
    let best = (0..3).max_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    let mut dir: Vector3<f64> = vectors.column(best).into_owned();
    dir.normalize_mut();
    let lead = (0..3).max_by(|&a, &b| dir[a].abs().total_cmp(&dir[b].abs())).unwrap();
    if dir[lead] < 0.0 {
        dir = -dir;
    }
    Ok(Line3 { anchor: mean, direction: dir })
}

/// Eigen-decomposition of a symmetric 3x3 matrix by cyclic Jacobi rotations.
/// Returns eigenvalues and the matrix whose columns are the eigenvectors.
pub(crate) fn symmetric_eigen3(m: &Matrix3<f64>) -> ([f64; 3], Matrix3<f64>) {
    let mut a = *m;
    let mut v = Matrix3::identity();
    for _sweep in 0..64 {
        let off = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
        let diag = a[(0, 0)].powi(2) + a[(1, 1)].powi(2) + a[(2, 2)].powi(2);
        if off <= f64::EPSILON * f64::EPSILON * diag || off == 0.0 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let apq = a[(p, q)];
            if apq == 0.0 {
                continue;
            }
            let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut rot = Matrix3::identity();
            rot[(p, p)] = c;
            rot[(q, q)] = c;
            rot[(p, q)] = s;
            rot[(q, p)] = -s;
            a = rot.transpose() * a * rot;
            a[(p, q)] = 0.0;
            a[(q, p)] = 0.0;
            v *= rot;
        }
    }
    ([a[(0, 0)], a[(1, 1)], a[(2, 2)]], v)
}

/// Closed-form closest points between two lines.
///
/// Solves the 2x2 normal equations of `min |P1(t1) - P2(t2)|^2` with the
/// general (non-unit) direction formula. The lines are reported parallel when
/// `|(V1.V2)^2 - |V1|^2 |V2|^2| <= eps_i * |V1|^2 |V2|^2`, i.e. `eps_i` is
/// compared against the denominator of unit-normalized directions.
pub fn closest_points(a: &Line3, b: &Line3, eps_i: f64) -> ClosestPoints {
    let v1 = a.direction;
    let v2 = b.direction;
    let v1v2 = v1.dot(&v2);
    let n1 = v1.norm_squared();
    let n2 = v2.norm_squared();
    let denom = v1v2 * v1v2 - n1 * n2;

    if denom.abs() <= eps_i * n1 * n2 {
        let nan = Vector3::repeat(f64::NAN);
        // Distance between parallel lines is still well defined.
        let d = b.anchor - a.anchor;
        let distance = (d - v1 * (d.dot(&v1) / n1)).norm();
        return ClosestPoints { t1_star: f64::NAN, t2_star: f64::NAN, p1: nan, p2: nan, distance, parallel: true };
    }

    let d = b.anchor - a.anchor;
    let r1 = d.dot(&v1);
    let r2 = d.dot(&v2);
    let t1 = (-n2 * r1 + v1v2 * r2) / denom;
    let t2 = (-v1v2 * r1 + n1 * r2) / denom;
    let p1 = a.point_at(t1);
    let p2 = b.point_at(t2);
    ClosestPoints { t1_star: t1, t2_star: t2, p1, p2, distance: (p1 - p2).norm(), parallel: false }
}

/// Acute angle between two lines in degrees, in `[0, 90]`.
pub fn acute_angle_deg(a: &Line3, b: &Line3) -> f64 {
    let c = a.direction.dot(&b.direction).abs() / (a.direction.norm() * b.direction.norm());
    c.clamp(0.0, 1.0).acos().to_degrees()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn p2(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn line(a: [f64; 3], d: [f64; 3]) -> Line3 {
        Line3::new(Vector3::from(a), Vector3::from(d)).unwrap()
    }

    /// Minimum over all 2-point diameters and 3-point circumcircles that
    /// cover every point.
    fn brute_force_mec(pts: &[Point2]) -> f64 {
        let covers = |c: &Circle2| pts.iter().all(|p| c.center.dist(p) <= c.radius + 1e-9);
        let mut best = f64::INFINITY;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let c = diameter_circle(pts[i], pts[j]);
                if covers(&c) {
                    best = best.min(c.radius);
                }
                for k in j + 1..pts.len() {
                    if let Some(c) = circumcircle(pts[i], pts[j], pts[k]) {
                        if covers(&c) {
                            best = best.min(c.radius);
                        }
                    }
                }
            }
        }
        best
    }

    #[test]
    fn mec_trivial_cases() {
        let c = min_enclosing_circle(&[p2(3.0, 4.0)]).unwrap();
        assert_eq!(c.center, p2(3.0, 4.0));
        assert_eq!(c.radius, 0.0);

        let c = min_enclosing_circle(&[p2(0.0, 0.0), p2(2.0, 0.0)]).unwrap();
        assert_eq!(c.center, p2(1.0, 0.0));
        assert_eq!(c.radius, 1.0);

        assert!(matches!(min_enclosing_circle(&[]), Err(Error::NoPoints)));
    }

    #[test]
    fn mec_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let pts: Vec<Point2> =
                (0..20).map(|_| p2(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0))).collect();
            let c = min_enclosing_circle(&pts).unwrap();
            assert!((c.radius - brute_force_mec(&pts)).abs() < 1e-9);
        }
    }

    #[test]
    fn mec_hull_path_on_large_sets() {
        // Filled disk of radius 20: > 512 pixels goes through the hull reduction.
        let mut pts = Vec::new();
        for y in -20..=20 {
            for x in -20..=20 {
                if x * x + y * y <= 400 {
                    pts.push(p2(x as f64, y as f64));
                }
            }
        }
        assert!(pts.len() > HULL_THRESHOLD);
        let c = min_enclosing_circle(&pts).unwrap();
        assert!((c.radius - 20.0).abs() < 1e-9);
        assert!(c.center.dist(&p2(0.0, 0.0)) < 1e-9);
    }

    #[test]
    fn fit_line_examples() {
        let pts = [Point3::new(0., 0., 0., 0.), Point3::new(1., 1., 1., 1.), Point3::new(2., 2., 2., 2.)];
        let l = fit_line3(&pts).unwrap();
        assert!((l.anchor - Vector3::new(1.0, 1.0, 1.0)).norm() < 1e-12);
        let expect = Vector3::new(1.0, 1.0, 1.0) / 3f64.sqrt();
        assert!((l.direction - expect).norm() < 1e-12);

        let l = fit_line3(&[Point3::new(-1., 0., 0., 0.), Point3::new(1., 0., 0., 1.)]).unwrap();
        assert!(l.anchor.norm() < 1e-15);
        assert!((l.direction - Vector3::x()).norm() < 1e-15);

        let same = [Point3::new(1., 2., 3., 0.), Point3::new(1., 2., 3., 1.)];
        assert!(matches!(fit_line3(&same), Err(Error::DegeneratePointSet)));
        assert!(matches!(fit_line3(&same[..1]), Err(Error::DegeneratePointSet)));
    }

    #[test]
    fn fit_line_matches_svd_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let normal = rand_distr::Normal::new(0.0, 0.01).unwrap();
        for _ in 0..20 {
            let dir =
                Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                    .normalize();
            let origin = Vector3::new(rng.random_range(-10.0..10.0), 5.0, 1.0);
            let pts: Vec<Point3> = (0..50)
                .map(|i| {
                    let s = i as f64 * 0.5 - 12.0;
                    let noise = Vector3::new(rng.sample(normal), rng.sample(normal), rng.sample(normal));
                    Point3 { pos: origin + dir * s + noise, t: i as f64 }
                })
                .collect();
            let fit = fit_line3(&pts).unwrap();

            let mean = pts.iter().fold(Vector3::zeros(), |a, p| a + p.pos) / 50.0;
            let mut data = nalgebra::DMatrix::zeros(50, 3);
            for (i, p) in pts.iter().enumerate() {
                let d = p.pos - mean;
                for k in 0..3 {
                    data[(i, k)] = d[k];
                }
            }
            let svd = data.svd(false, true);
            let vt = svd.v_t.unwrap();
            let best = svd.singular_values.imax();
            let oracle = Vector3::new(vt[(best, 0)], vt[(best, 1)], vt[(best, 2)]);
            let angle = fit.direction.dot(&oracle).abs().min(1.0).acos();
            assert!(angle < 1e-6, "angle {angle}");
        }
    }

    #[test]
    fn closest_points_skew_axes() {
        let a = line([0., 0., 0.], [1., 0., 0.]);
        let b = line([0., 0., 1.], [0., 1., 0.]);
        let cp = closest_points(&a, &b, DEFAULT_EPS_I);
        assert!(!cp.parallel);
        assert_eq!(cp.t1_star, 0.0);
        assert_eq!(cp.t2_star, 0.0);
        assert_eq!(cp.p1, Vector3::zeros());
        assert_eq!(cp.p2, Vector3::new(0., 0., 1.));
        assert_eq!(cp.distance, 1.0);
        assert_eq!(cp.midpoint().unwrap(), Vector3::new(0., 0., 0.5));
    }

    #[test]
    fn closest_points_parallel() {
        let a = line([0., 0., 0.], [1., 2., 3.]);
        let b = line([5., 0., 0.], [1., 2., 3.]);
        let cp = closest_points(&a, &b, DEFAULT_EPS_I);
        assert!(cp.parallel);
        assert!(cp.midpoint().is_none());
    }

    #[test]
    fn closest_points_general_formula_accepts_non_unit_directions() {
        let a = Line3 { anchor: Vector3::zeros(), direction: Vector3::new(2.0, 0.0, 0.0) };
        let b = Line3 { anchor: Vector3::new(3.0, -1.0, 2.0), direction: Vector3::new(0.0, 0.5, 0.0) };
        let cp = closest_points(&a, &b, DEFAULT_EPS_I);
        assert!((cp.p1 - Vector3::new(3.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((cp.p2 - Vector3::new(3.0, 0.0, 2.0)).norm() < 1e-12);
        assert!((cp.t1_star - 1.5).abs() < 1e-12);
        assert!((cp.t2_star - 2.0).abs() < 1e-12);
    }

    #[test]
    fn angle_examples() {
        let x = line([0.; 3], [1., 0., 0.]);
        assert!((acute_angle_deg(&x, &line([0.; 3], [0., 1., 0.])) - 90.0).abs() < 1e-12);
        assert!(acute_angle_deg(&x, &line([0.; 3], [-1., 0., 0.])).abs() < 1e-12);
        assert!((acute_angle_deg(&x, &line([0.; 3], [1., 1., 0.])) - 45.0).abs() < 1e-9);
    }

    fn arb_vec() -> impl Strategy<Value = Vector3<f64>> {
        (-50.0..50.0f64, -50.0..50.0f64, -50.0..50.0f64).prop_map(|(x, y, z)| Vector3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn mec_covers_and_is_tight(pts in prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 1..40)) {
            let pts: Vec<Point2> = pts.into_iter().map(|(x, y)| p2(x, y)).collect();
            let c = min_enclosing_circle(&pts).unwrap();
            prop_assert!(pts.iter().all(|p| c.center.dist(p) <= c.radius + 1e-9));
            if c.radius > 1e-3 {
                let shrunk = c.radius - 1e-3;
                prop_assert!(pts.iter().any(|p| c.center.dist(p) > shrunk));
            }
        }

        #[test]
        fn fit_is_translation_equivariant(
            pts in prop::collection::vec(arb_vec(), 3..20),
            shift in arb_vec(),
        ) {
            let a: Vec<Point3> = pts.iter().enumerate().map(|(i, p)| Point3 { pos: *p, t: i as f64 }).collect();
            let b: Vec<Point3> = a.iter().map(|p| Point3 { pos: p.pos + shift, t: p.t }).collect();
            let (fa, fb) = (fit_line3(&a).unwrap(), fit_line3(&b).unwrap());
            prop_assert!((fa.anchor + shift - fb.anchor).norm() < 1e-9);
            prop_assert!(fa.direction.dot(&fb.direction).abs() > 1.0 - 1e-6);
        }

        #[test]
        fn closest_points_is_symmetric(a0 in arb_vec(), a1 in arb_vec(), b0 in arb_vec(), b1 in arb_vec()) {
            prop_assume!(a1.norm() > 1e-3 && b1.norm() > 1e-3);
            let a = Line3::new(a0, a1).unwrap();
            let b = Line3::new(b0, b1).unwrap();
            let ab = closest_points(&a, &b, DEFAULT_EPS_I);
            let ba = closest_points(&b, &a, DEFAULT_EPS_I);
            prop_assert_eq!(ab.parallel, ba.parallel);
            if !ab.parallel && a1.normalize().dot(&b1.normalize()).abs() < 0.999 {
                prop_assert!((ab.t1_star - ba.t2_star).abs() < 1e-6);
                prop_assert!((ab.t2_star - ba.t1_star).abs() < 1e-6);
                prop_assert!((ab.p1 - ba.p2).norm() < 1e-6);
                prop_assert!((ab.distance - ba.distance).abs() < 1e-9);
            }
        }

        #[test]
        fn intersecting_lines_meet_at_their_intersection(x in arb_vec(), d1 in arb_vec(), d2 in arb_vec()) {
            prop_assume!(d1.norm() > 1e-2 && d2.norm() > 1e-2);
            prop_assume!(d1.normalize().dot(&d2.normalize()).abs() < 0.99);
            let a = Line3::new(x + d1 * 0.7, d1).unwrap();
            let b = Line3::new(x - d2 * 1.3, d2).unwrap();
            let cp = closest_points(&a, &b, DEFAULT_EPS_I);
            prop_assert!(cp.distance < 1e-9);
            prop_assert!((cp.midpoint().unwrap() - x).norm() < 1e-9);
        }
    }
}
