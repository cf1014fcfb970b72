//! Frame-to-frame grouping of vessel centres into tracks.

mod dbscan;
mod hungarian;

pub use dbscan::dbscan;
pub use hungarian::{hungarian, hungarian_padded, Assignment};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::params::HyperParams;

/// Consecutive unassigned frames after which a track is terminated.
pub const MAX_MISSES: u32 = 5;
/// Tracks with fewer points are discarded.
pub const MIN_TRACK_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub pos: Vector3<f64>,
    pub t: f64,
    /// Id of the track this point was first assigned to.
    pub origin_id: usize,
    #[serde(default)]
    pub interpolated: bool,
}

impl TrackPoint {
    pub fn point3(&self) -> Point3 {
        Point3 { pos: self.pos, t: self.t }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub id: usize,
    pub points: Vec<TrackPoint>,
    pub misses: u32,
    pub active: bool,
}

impl Track {
    fn start(id: usize, p: &Point3) -> Self {
        Self {
            id,
            points: vec![TrackPoint { pos: p.pos, t: p.t, origin_id: id, interpolated: false }],
            misses: 0,
            active: true,
        }
    }

    pub fn last(&self) -> &TrackPoint {
        self.points.last().expect("tracks are never empty")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Stateful tracker; feed it one frame at a time with [`Tracker::step`].
#[derive(Debug, Clone)]
pub struct Tracker {
    hp: HyperParams,
    tracks: Vec<Track>,
    last_t: Option<f64>,
}

impl Tracker {
    pub fn new(hp: HyperParams) -> Self {
        Self { hp, tracks: Vec::new(), last_t: None }
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn into_tracks(self) -> Vec<Track> {
        self.tracks
    }

    /// Advances to the frame at time `t` with that frame's world detections.
    ///
    /// Detections are matched to the last points of the active tracks by a
    /// minimum-total-distance assignment. Matches farther than `delta_td`
    /// are voided; every detection left without a track starts a new one.
    /// Active tracks that get nothing accumulate a miss and stop after
    /// [`MAX_MISSES`] in a row.
    pub fn step(&mut self, t: f64, detections: &[Point3]) -> Result<()> {
        if let Some(last) = self.last_t {
            if !(t > last) {
                return Err(Error::NonMonotonicFrame { t, last });
            }
        }
        if let Some(d) = detections.iter().find(|d| d.t != t) {
            return Err(Error::InvalidParam(format!("detection at t={} passed for frame t={t}", d.t)));
        }
        self.last_t = Some(t);

        let active: Vec<usize> = (0..self.tracks.len()).filter(|&i| self.tracks[i].active).collect();
        let cost: Vec<Vec<f64>> = active
            .iter()
            .map(|&i| {
                let last = self.tracks[i].last().pos;
                detections.iter().map(|d| (d.pos - last).norm()).collect()
            })
            .collect();

        let mut claimed = vec![false; detections.len()];
        let mut fed = vec![false; active.len()];
        if !active.is_empty() && !detections.is_empty() {
            let assignment = hungarian_padded(&cost, 10.0 * self.hp.delta_td)?;
            for (row, col) in assignment.pairs() {
                if cost[row][col] > self.hp.delta_td {
                    continue;
                }
                let track = &mut self.tracks[active[row]];
                let d = &detections[col];
                track.points.push(TrackPoint { pos: d.pos, t, origin_id: track.id, interpolated: false });
                track.misses = 0;
                claimed[col] = true;
                fed[row] = true;
            }
        }

        for (row, &i) in active.iter().enumerate() {
            if !fed[row] {
                let track = &mut self.tracks[i];
                track.misses += 1;
                if track.misses >= MAX_MISSES {
                    track.active = false;
                }
            }
        }

        for (d, _) in detections.iter().zip(&claimed).filter(|(_, &c)| !c) {
            let id = self.tracks.len();
            self.tracks.push(Track::start(id, d));
        }
        Ok(())
    }
}

/// Drops short tracks and removes DBSCAN noise points from the rest.
pub fn finalize(tracks: Vec<Track>, hp: &HyperParams) -> Vec<Track> {
    tracks
        .into_iter()
        .filter(|t| t.len() >= MIN_TRACK_POINTS)
        .filter_map(|mut track| {
            let positions: Vec<Vector3<f64>> = track.points.iter().map(|p| p.pos).collect();
            let labels = dbscan(&positions, hp.dbscan_eps, hp.dbscan_min_pts);
            let mut keep = labels.iter().map(Option::is_some);
            track.points.retain(|_| keep.next().unwrap_or(false));
            (track.len() >= MIN_TRACK_POINTS).then_some(track)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64, z: f64, t: f64) -> Point3 {
        Point3::new(x, y, z, t)
    }

    fn straight_track(id: usize, n: usize) -> Track {
        Track {
            id,
            points: (0..n)
                .map(|i| TrackPoint {
                    pos: Vector3::new(0.0, 0.0, i as f64),
                    t: i as f64,
                    origin_id: id,
                    interpolated: false,
                })
                .collect(),
            misses: 0,
            active: true,
        }
    }

    #[test]
    fn first_frame_starts_one_track_per_detection() {
        let mut tr = Tracker::new(HyperParams::pig());
        tr.step(0.0, &[pt(0., 0., 0., 0.), pt(10., 0., 0., 0.), pt(20., 0., 0., 0.)]).unwrap();
        assert_eq!(tr.tracks().len(), 3);
        assert!(tr.tracks().iter().enumerate().all(|(i, t)| t.id == i && t.len() == 1 && t.points[0].origin_id == i));
    }

    #[test]
    fn far_match_is_voided() {
        let mut tr = Tracker::new(HyperParams::pig());
        tr.step(0.0, &[pt(0., 0., 0., 0.)]).unwrap();
        tr.step(1.0, &[pt(0., 0., 150., 1.)]).unwrap();
        let tracks = tr.tracks();
        assert_eq!(tracks.len(), 2);
        assert_eq!(tracks[0].len(), 1);
        assert_eq!(tracks[0].misses, 1);
        assert_eq!(tracks[1].points[0].pos, Vector3::new(0., 0., 150.));
    }

    #[test]
    fn crossing_vessels_use_optimal_assignment() {
        // Greedy nearest-neighbour on track 0 takes detection 0 (cost 1) and
        // leaves track 1 with detection 1 (cost 5), total 6. The optimum
        // pairs them the other way round for 2 + 2 = 4.
        let mut tr = Tracker::new(HyperParams::pig());
        tr.step(0.0, &[pt(0., 0., 0., 0.), pt(3., 0., 0., 0.)]).unwrap();
        tr.step(1.0, &[pt(1., 0., 0., 1.), pt(-2., 0., 0., 1.)]).unwrap();
        let tracks = tr.tracks();
        assert_eq!(tracks[0].last().pos, Vector3::new(-2., 0., 0.));
        assert_eq!(tracks[1].last().pos, Vector3::new(1., 0., 0.));
    }

    #[test]
    fn tracks_terminate_after_five_misses() {
        let mut tr = Tracker::new(HyperParams::pig());
        tr.step(0.0, &[pt(0., 0., 0., 0.)]).unwrap();
        for k in 1..=5 {
            tr.step(k as f64, &[]).unwrap();
        }
        assert!(!tr.tracks()[0].active);
        assert_eq!(tr.tracks()[0].misses, 5);
        // No revival: a nearby detection starts a fresh track.
        tr.step(6.0, &[pt(0., 0., 1., 6.)]).unwrap();
        assert_eq!(tr.tracks().len(), 2);
    }

    #[test]
    fn rejects_non_monotonic_frames() {
        let mut tr = Tracker::new(HyperParams::pig());
        tr.step(1.0, &[]).unwrap();
        assert!(matches!(tr.step(1.0, &[]), Err(Error::NonMonotonicFrame { .. })));
        assert!(matches!(tr.step(0.5, &[]), Err(Error::NonMonotonicFrame { .. })));
    }

    #[test]
    fn finalize_drops_short_tracks() {
        let out = finalize(vec![straight_track(0, 4), straight_track(1, 5)], &HyperParams::pig());
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].id, 1);
    }

    #[test]
    fn finalize_removes_outliers() {
        let mut track = straight_track(0, 30);
        track
            .points
            .insert(15, TrackPoint { pos: Vector3::new(50.0, 0.0, 15.0), t: 14.5, origin_id: 0, interpolated: false });
        let hp = HyperParams { dbscan_eps: 10.0, dbscan_min_pts: 3, ..HyperParams::pig() };
        let out = finalize(vec![track], &hp);
        assert_eq!(out[0].len(), 30);
        assert!(out[0].points.iter().all(|p| p.pos.x == 0.0));
    }

    #[test]
    fn finalize_keeps_identical_points() {
        let mut track = straight_track(0, 6);
        for p in &mut track.points {
            p.pos = Vector3::new(1.0, 1.0, 1.0);
        }
        assert_eq!(finalize(vec![track], &HyperParams::pig())[0].len(), 6);
    }
}
