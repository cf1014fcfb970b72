//! Track merging, bifurcation identification and needle-site selection.

use std::collections::BTreeSet;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{acute_angle_deg, closest_points, fit_line_positions, Line3};
use crate::params::HyperParams;
use crate::tracking::{Track, TrackPoint};

/// Timestamps closer than this are treated as the same frame.
const TIME_EPS: f64 = 1e-9;

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vector3<f64>>) -> Option<Self> {
        let mut iter = points.into_iter();
        let first = *iter.next()?;
        Some(iter.fold(Aabb { min: first, max: first }, |b, p| Aabb { min: b.min.inf(p), max: b.max.sup(p) }))
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    pub fn padded(&self, pad: f64) -> Self {
        Self { min: self.min.add_scalar(-pad), max: self.max.add_scalar(pad) }
    }
}

/// Fills frame gaps strictly inside the track's time span with linearly
/// interpolated points. Nothing is extrapolated.
pub fn interpolate_track(track: &Track, frame_times: &[f64]) -> Track {
    let mut out = track.clone();
    if track.points.len() < 2 {
        return out;
    }
    let first = track.points[0].t;
    let last = track.last().t;
    let mut added = Vec::new();
    for &ft in frame_times {
        if ft <= first + TIME_EPS || ft >= last - TIME_EPS {
            continue;
        }
        let hi = track.points.partition_point(|p| p.t < ft - TIME_EPS);
        if (track.points[hi].t - ft).abs() <= TIME_EPS {
            continue;
        }
        let (a, b) = (&track.points[hi - 1], &track.points[hi]);
        let frac = (ft - a.t) / (b.t - a.t);
        added.push(TrackPoint { pos: a.pos.lerp(&b.pos, frac), t: ft, origin_id: track.id, interpolated: true });
    }
    if !added.is_empty() {
        out.points.extend(added);
        out.points.sort_by(|a, b| a.t.total_cmp(&b.t));
    }
    out
}

/// Least-squares line through a track's measured (non-interpolated) points.
pub fn fit_track_line(track: &Track) -> Result<Line3> {
    fit_line_positions(track.points.iter().filter(|p| !p.interpolated).map(|p| p.pos))
}

/// The merge conditions, in evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeCheck {
    /// Mean depths differ by `delta_h` or more.
    Height,
    /// Lines are closer than `delta_theta` to parallel.
    Angle,
    /// Lines are numerically parallel, so no intersection exists.
    Parallel,
    /// The estimated intersection lies outside the observed volume.
    Bbox,
    /// The lines' closest approach is `delta_sd` or more.
    Distance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeDecision {
    pub mergeable: bool,
    /// Conditions that failed; empty iff `mergeable`.
    pub failed: Vec<MergeCheck>,
    pub intersection: Option<Vector3<f64>>,
    pub line_distance: f64,
    pub angle_deg: f64,
}

/// A track with its fitted line.
#[derive(Debug, Clone, Copy)]
pub struct FittedTrack<'a> {
    pub track: &'a Track,
    pub line: &'a Line3,
}

/// Checks whether two tracks belong to one branching vessel: equal depth,
/// clearly non-parallel lines, and lines that (nearly) meet inside `frame_bbox`.
pub fn can_merge(a: FittedTrack<'_>, b: FittedTrack<'_>, hp: &HyperParams, frame_bbox: &Aabb) -> MergeDecision {
    // Evaluate in a canonical order so the decision is exactly symmetric.
    let (a, b) = if a.track.id <= b.track.id { (a, b) } else { (b, a) };
    let mut failed = Vec::new();

    let depth_gap = (a.line.anchor[hp.depth_axis] - b.line.anchor[hp.depth_axis]).abs();
    if !(depth_gap < hp.delta_h) {
        failed.push(MergeCheck::Height);
    }
    let angle_deg = acute_angle_deg(a.line, b.line);
    if !(angle_deg >= hp.delta_theta) {
        failed.push(MergeCheck::Angle);
    }
    let cp = closest_points(a.line, b.line, hp.eps_i);
    let intersection = cp.midpoint();
    match intersection {
        None => failed.push(MergeCheck::Parallel),
        Some(mid) => {
            if !frame_bbox.contains(&mid) {
                failed.push(MergeCheck::Bbox);
            }
            if !(cp.distance < hp.delta_sd) {
                failed.push(MergeCheck::Distance);
            }
        }
    }
    MergeDecision { mergeable: failed.is_empty(), failed, intersection, line_distance: cp.distance, angle_deg }
}

/// Union of one or more tracks that form a single (possibly branching) vessel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedTrack {
    pub id: usize,
    pub member_ids: BTreeSet<usize>,
    /// Ordered by time, ties by origin id.
    pub points: Vec<TrackPoint>,
    pub line: Option<Line3>,
}

impl MergedTrack {
    pub fn bbox(&self) -> Option<Aabb> {
        Aabb::from_points(self.points.iter().map(|p| &p.pos))
    }
}

/// Merges tracks connected by pairwise [`can_merge`] edges.
///
/// Components are numbered by their smallest member id. Tracks whose line
/// cannot be fitted never gain an edge.
pub fn merge_all(tracks: &[Track], hp: &HyperParams) -> Vec<MergedTrack> {
    let lines: Vec<Option<Line3>> = tracks.iter().map(|t| fit_track_line(t).ok()).collect();
    let frame_bbox = Aabb::from_points(tracks.iter().flat_map(|t| t.points.iter().map(|p| &p.pos)));

    let mut parent: Vec<usize> = (0..tracks.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }

    if let Some(bbox) = frame_bbox {
        for i in 0..tracks.len() {
            for j in i + 1..tracks.len() {
                let (Some(li), Some(lj)) = (&lines[i], &lines[j]) else {
                    continue;
                };
                let decision = can_merge(
                    FittedTrack { track: &tracks[i], line: li },
                    FittedTrack { track: &tracks[j], line: lj },
                    hp,
                    &bbox,
                );
                if decision.mergeable {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                    }
                }
            }
        }
    }

    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..tracks.len() {
        let root = find(&mut parent, i);
        match groups.iter_mut().find(|(r, _)| *r == root) {
            Some((_, members)) => members.push(i),
            None => groups.push((root, vec![i])),
        }
    }
    groups.sort_by_key(|(_, members)| members.iter().map(|&i| tracks[i].id).min());

    groups
        .into_iter()
        .enumerate()
        .map(|(id, (_, members))| {
            let mut points: Vec<TrackPoint> = members.iter().flat_map(|&i| tracks[i].points.iter().copied()).collect();
            points.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.origin_id.cmp(&b.origin_id)));
            let line = if members.len() == 1 {
                lines[members[0]]
            } else {
                fit_line_positions(points.iter().filter(|p| !p.interpolated).map(|p| p.pos)).ok()
            };
            MergedTrack { id, member_ids: members.iter().map(|&i| tracks[i].id).collect(), points, line }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bifurcation {
    pub position: Vector3<f64>,
    pub t: f64,
    /// Origin track ids of the reporting pair, smaller id first.
    pub origin_pair: (usize, usize),
    /// Number of qualifying point pairs in this bifurcation's cluster.
    pub supporting_pairs: usize,
    pub merged_id: usize,
}

#[derive(Debug, Clone, Copy)]
struct PointPair {
    midpoint: Vector3<f64>,
    t: f64,
    distance: f64,
    origins: (usize, usize),
}

/// Bifurcations within one merged track.
///
/// A pair of points qualifies when they are closer than `delta_t` in time and
/// `delta_bd` in space and come from different original tracks. Qualifying
/// pairs are grouped by single linkage on their midpoints at `delta_bd`; each
/// group is reported at the midpoint of its earliest pair. Ordered by time.
pub fn find_bifurcations(mt: &MergedTrack, hp: &HyperParams) -> Vec<Bifurcation> {
    let pts = &mt.points;
    let mut pairs = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let dt = (pts[j].t - pts[i].t).abs();
            if dt >= hp.delta_t {
                break;
            }
            if pts[i].origin_id == pts[j].origin_id {
                continue;
            }
            let distance = (pts[i].pos - pts[j].pos).norm();
            if distance < hp.delta_bd {
                let (o1, o2) = (pts[i].origin_id, pts[j].origin_id);
                pairs.push(PointPair {
                    midpoint: (pts[i].pos + pts[j].pos) * 0.5,
                    t: (pts[i].t + pts[j].t) * 0.5,
                    distance,
                    origins: (o1.min(o2), o1.max(o2)),
                });
            }
        }
    }

    let mut parent: Vec<usize> = (0..pairs.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for a in 0..pairs.len() {
        for b in a + 1..pairs.len() {
            if (pairs[a].midpoint - pairs[b].midpoint).norm() < hp.delta_bd {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }

    let mut clusters: Vec<(usize, usize, usize)> = Vec::new(); // (root, earliest pair, size)
    for k in 0..pairs.len() {
        let root = find(&mut parent, k);
        match clusters.iter_mut().find(|(r, _, _)| *r == root) {
            Some((_, best, size)) => {
                *size += 1;
                let (p, q) = (&pairs[k], &pairs[*best]);
                if p.t < q.t || (p.t == q.t && p.distance < q.distance) {
                    *best = k;
                }
            }
            None => clusters.push((root, k, 1)),
        }
    }

    let mut out: Vec<Bifurcation> = clusters
        .into_iter()
        .map(|(_, best, size)| {
            let p = &pairs[best];
            Bifurcation {
                position: p.midpoint,
                t: p.t,
                origin_pair: p.origins,
                supporting_pairs: size,
                merged_id: mt.id,
            }
        })
        .collect();
    out.sort_by(|a, b| a.t.total_cmp(&b.t));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeedleSite {
    pub position: Vector3<f64>,
    pub t: f64,
    pub distance_to_bifurcation: f64,
    /// Index of the chosen point within its merged track.
    pub point_index: usize,
    pub merged_id: usize,
}

/// The point scanned before `b` (cranial, since scans run proximal to
/// distal) whose distance to `b` is closest to `target_mm`. Ties go to the
/// earliest point.
pub fn needle_site(mt: &MergedTrack, b: &Bifurcation, target_mm: f64) -> Result<NeedleSite> {
    let mut best: Option<(usize, f64, f64)> = None;
    for (i, p) in mt.points.iter().enumerate() {
        if !(p.t < b.t) {
            continue;
        }
        let d = (p.pos - b.position).norm();
        let score = (d - target_mm).abs();
        if best.is_none_or(|(_, s, _)| score < s) {
            best = Some((i, score, d));
        }
    }
    let (i, _, d) = best.ok_or(Error::BifurcationAtScanStart)?;
    let p = &mt.points[i];
    Ok(NeedleSite { position: p.pos, t: p.t, distance_to_bifurcation: d, point_index: i, merged_id: mt.id })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tp(pos: [f64; 3], t: f64, origin: usize) -> TrackPoint {
        TrackPoint { pos: Vector3::from(pos), t, origin_id: origin, interpolated: false }
    }

    fn track(id: usize, points: Vec<TrackPoint>) -> Track {
        Track { id, points, misses: 0, active: true }
    }

    /// Straight track from `start` along `dir`, one point per `dt` seconds.
    fn ray(id: usize, start: [f64; 3], dir: [f64; 3], n: usize, t0: f64) -> Track {
        let (s, d) = (Vector3::from(start), Vector3::from(dir));
        track(id, (0..n).map(|i| tp((s + d * i as f64).into(), t0 + i as f64 * 0.1, id)).collect())
    }

    fn merged(points: Vec<TrackPoint>) -> MergedTrack {
        MergedTrack { id: 0, member_ids: points.iter().map(|p| p.origin_id).collect(), points, line: None }
    }

    #[test]
    fn interpolation_fills_gaps() {
        let tr = track(3, vec![tp([0.0; 3], 0.0, 3), tp([2.0, 0.0, 0.0], 2.0, 3)]);
        let out = interpolate_track(&tr, &[0.0, 1.0, 2.0]);
        assert_eq!(out.points.len(), 3);
        assert_eq!(
            out.points[1],
            TrackPoint { pos: Vector3::new(1.0, 0.0, 0.0), t: 1.0, origin_id: 3, interpolated: true }
        );

        let full = track(0, vec![tp([0.0; 3], 0.0, 0), tp([1.0; 3], 1.0, 0), tp([2.0; 3], 2.0, 0)]);
        assert_eq!(interpolate_track(&full, &[0.0, 1.0, 2.0]), full);
        // no extrapolation
        assert_eq!(interpolate_track(&full, &[-1.0, 3.0]), full);
    }

    #[test]
    fn interpolation_on_curved_track_follows_chords() {
        let tr = track(0, vec![tp([0.0, 0.0, 0.0], 0.0, 0), tp([4.0, 0.0, 4.0], 4.0, 0), tp([4.0, 3.0, 8.0], 5.0, 0)]);
        let times: Vec<f64> = (0..=5).map(f64::from).collect();
        let out = interpolate_track(&tr, &times);
        assert_eq!(out.points.len(), 6);
        for (k, p) in out.points.iter().enumerate().filter(|(_, p)| p.interpolated) {
            let s = k as f64 / 4.0;
            assert!((p.pos - Vector3::new(4.0 * s, 0.0, 4.0 * s)).norm() < 1e-12);
        }
    }

    fn decide(a: &Track, b: &Track, hp: &HyperParams) -> MergeDecision {
        let (la, lb) = (fit_track_line(a).unwrap(), fit_track_line(b).unwrap());
        let bbox = Aabb::from_points(a.points.iter().chain(&b.points).map(|p| &p.pos)).unwrap();
        can_merge(FittedTrack { track: a, line: &la }, FittedTrack { track: b, line: &lb }, hp, &bbox)
    }

    #[test]
    fn parallel_tracks_fail_on_angle() {
        let a = ray(0, [0.0, 20.0, 0.0], [0.0, 0.0, 1.0], 30, 0.0);
        let b = ray(1, [5.0, 20.0, 0.0], [0.0, 0.0, 1.0], 30, 0.0);
        let d = decide(&a, &b, &HyperParams::phantom());
        assert!(!d.mergeable);
        assert_eq!(d.failed.first(), Some(&MergeCheck::Angle));
        assert!(d.failed.contains(&MergeCheck::Parallel));
    }

    /// Arm of a V through `apex`, starting a few samples before it so the
    /// apex lies strictly inside the observed volume.
    fn arm(id: usize, apex: [f64; 3], dir: [f64; 3]) -> Track {
        let start = Vector3::from(apex) - Vector3::from(dir) * 5.0;
        ray(id, start.into(), dir, 30, 0.0)
    }

    #[test]
    fn v_shape_merges() {
        let half = 15f64.to_radians();
        let a = arm(0, [0.0, 20.0, 0.0], [half.sin(), 0.0, half.cos()]);
        let b = arm(1, [0.0, 20.0, 0.0], [-half.sin(), 0.0, half.cos()]);
        let d = decide(&a, &b, &HyperParams::phantom());
        assert!(d.mergeable, "{:?}", d.failed);
        assert!((d.angle_deg - 30.0).abs() < 1e-9);
        assert!(d.line_distance < 1e-9);
        assert!((d.intersection.unwrap() - Vector3::new(0.0, 20.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn v_shape_meeting_outside_the_frame_fails_on_bbox() {
        // Lines meet at z = -50, both tracks are observed for z in [0, 29].
        let half = 15f64.to_radians();
        let (s, c) = (half.sin(), half.cos());
        let offset = 50.0 * s / c;
        let a = ray(0, [offset, 20.0, 0.0], [s, 0.0, c], 30, 0.0);
        let b = ray(1, [-offset, 20.0, 0.0], [-s, 0.0, c], 30, 0.0);
        let d = decide(&a, &b, &HyperParams::phantom());
        let meet = Vector3::new(0.0, 20.0, -50.0);
        assert!((d.intersection.unwrap() - meet).norm() < 1e-9);
        assert_eq!(d.failed, vec![MergeCheck::Bbox]);
    }

    #[test]
    fn depth_and_distance_conditions() {
        let half = 15f64.to_radians();
        let a = arm(0, [0.0, 20.0, 0.0], [half.sin(), 0.0, half.cos()]);
        let deep = arm(1, [0.0, 35.0, 0.0], [-half.sin(), 0.0, half.cos()]);
        let hp = HyperParams { delta_h: 10.0, ..HyperParams::phantom() };
        let d = decide(&a, &deep, &hp);
        assert_eq!(d.failed, vec![MergeCheck::Height, MergeCheck::Distance]);
    }

    #[test]
    fn merging_is_transitive_through_the_graph() {
        // A and C are parallel, B crosses both.
        let a = ray(0, [0.0, 20.0, 0.0], [0.0, 0.0, 1.0], 20, 0.0);
        let c = ray(2, [6.0, 20.0, 0.0], [0.0, 0.0, 1.0], 20, 0.0);
        let dir = Vector3::new(1.0, 0.0, 1.0).normalize();
        let b = ray(1, [-3.0, 20.0, 7.0], dir.into(), 15, 0.0);
        let hp = HyperParams::phantom();
        assert!(!decide(&a, &c, &hp).mergeable);
        assert!(decide(&a, &b, &hp).mergeable);
        assert!(decide(&b, &c, &hp).mergeable);
        let m = merge_all(&[a, b, c], &hp);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].member_ids, BTreeSet::from([0, 1, 2]));
        assert_eq!(m[0].points.len(), 55);
    }

    #[test]
    fn no_edges_gives_singletons() {
        let a = ray(0, [0.0, 20.0, 0.0], [0.0, 0.0, 1.0], 20, 0.0);
        let b = ray(1, [10.0, 20.0, 0.0], [0.0, 0.0, 1.0], 20, 0.0);
        let m = merge_all(&[a, b], &HyperParams::phantom());
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].member_ids, BTreeSet::from([0]));
        assert_eq!(m[1].member_ids, BTreeSet::from([1]));
    }

    #[test]
    fn single_origin_has_no_bifurcation() {
        let tr = ray(0, [0.0; 3], [0.0, 0.0, 1.0], 20, 0.0);
        assert!(find_bifurcations(&merged(tr.points), &HyperParams::pig()).is_empty());
    }

    #[test]
    fn close_pair_from_two_origins() {
        let pts = vec![
            tp([0.0, 0.0, 0.0], 0.9, 0),
            tp([0.0, 0.0, 1.0], 1.0, 0),
            tp([4.0, 0.0, 1.0], 1.0, 1),
            tp([20.0, 0.0, 1.0], 1.0, 2),
        ];
        let b = find_bifurcations(&merged(pts), &HyperParams::pig());
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].position, Vector3::new(2.0, 0.0, 1.0));
        assert_eq!(b[0].t, 1.0);
        assert_eq!(b[0].origin_pair, (0, 1));
        assert_eq!(b[0].supporting_pairs, 1);
    }

    #[test]
    fn pairs_along_a_branch_collapse_into_one_bifurcation() {
        // Two origins diverging slowly over ten frames.
        let mut pts = Vec::new();
        for k in 0..10 {
            let t = k as f64 / 30.0;
            pts.push(tp([-(k as f64) * 0.5, 0.0, k as f64 * 1.7], t, 0));
            pts.push(tp([k as f64 * 0.5, 0.0, k as f64 * 1.7], t, 1));
        }
        let b = find_bifurcations(&merged(pts), &HyperParams::pig());
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].supporting_pairs, 10);
        assert_eq!(b[0].t, 0.0);
    }

    #[test]
    fn needle_site_on_straight_trunk() {
        let mut pts: Vec<TrackPoint> = (0..=40).map(|i| tp([0.0, 0.0, i as f64], i as f64, 0)).collect();
        pts.push(tp([3.0, 0.0, 40.0], 40.0, 1));
        let mt = merged(pts);
        let b = Bifurcation {
            position: Vector3::new(0.0, 0.0, 40.0),
            t: 40.0,
            origin_pair: (0, 1),
            supporting_pairs: 1,
            merged_id: 0,
        };
        let site = needle_site(&mt, &b, 20.0).unwrap();
        assert!((site.distance_to_bifurcation - 20.0).abs() <= 0.5);
        assert!(site.t < b.t);
        assert_eq!(site.position, Vector3::new(0.0, 0.0, 20.0));
    }

    #[test]
    fn needle_site_edge_cases() {
        let mt = merged(vec![tp([0.0, 0.0, 0.0], 0.0, 0), tp([0.0, 0.0, 35.0], 1.0, 0), tp([1.0, 0.0, 35.0], 1.0, 1)]);
        let mut b = Bifurcation {
            position: Vector3::new(0.0, 0.0, 35.0),
            t: 1.0,
            origin_pair: (0, 1),
            supporting_pairs: 1,
            merged_id: 0,
        };
        let site = needle_site(&mt, &b, 20.0).unwrap();
        assert_eq!(site.distance_to_bifurcation, 35.0);
        assert_eq!(site.point_index, 0);

        b.t = 0.0;
        assert!(matches!(needle_site(&mt, &b, 20.0), Err(Error::BifurcationAtScanStart)));
    }
}
