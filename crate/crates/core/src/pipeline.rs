//! End-to-end runner: masks and poses in, skeleton, bifurcations and needle
//! sites out.

use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::dataset::{read_json, write_json, ScanDataset};
use crate::error::{Error, Result, Stage};
use crate::geometry::Point3;
use crate::mask::{detect, erode_until_stable, Detection, Segment};
use crate::params::HyperParams;
use crate::projection::{project, Calibration};
use crate::skeleton::{
    find_bifurcations, interpolate_track, merge_all, needle_site, Bifurcation, MergedTrack, NeedleSite,
};
use crate::tracking::{finalize, Tracker};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: Stage,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RunStats {
    pub frames: usize,
    pub detections: usize,
    pub raw_tracks: usize,
    pub kept_tracks: usize,
    /// Frames where erosion hit its iteration cap with oversized segments left.
    pub unconverged_frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub merged_tracks: Vec<MergedTrack>,
    /// Ordered by time.
    pub bifurcations: Vec<Bifurcation>,
    /// One entry per bifurcation, `None` where no cranial point exists.
    pub needle_sites: Vec<Option<NeedleSite>>,
    /// Index of the earliest bifurcation.
    pub primary: Option<usize>,
    pub timings: Vec<StageTiming>,
    /// Wall time of all stages; dataset loading is not included.
    pub identification_time_s: f64,
    pub stats: RunStats,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl PipelineResult {
    pub fn read(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn total_points(&self) -> usize {
        self.merged_tracks.iter().map(|m| m.points.len()).sum()
    }

    pub fn primary_bifurcation(&self) -> Option<&Bifurcation> {
        self.primary.map(|i| &self.bifurcations[i])
    }

    pub fn stage_seconds(&self, stage: Stage) -> f64 {
        self.timings.iter().filter(|s| s.stage == stage).map(|s| s.seconds).sum()
    }
}

struct Timer {
    timings: Vec<(Stage, Duration)>,
}

impl Timer {
    fn time<T>(&mut self, stage: Stage, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().map_err(|e| e.in_stage(stage));
        self.timings.push((stage, start.elapsed()));
        out
    }
}

/// Runs every stage over `dataset` in order.
pub fn run(dataset: &ScanDataset, hp: &HyperParams, cal: &Calibration) -> Result<PipelineResult> {
    hp.validate()?;
    cal.validate()?;
    if dataset.frames.is_empty() {
        return Err(Error::NoFrames);
    }
    let started = Instant::now();
    let mut timer = Timer { timings: Vec::new() };
    let mut stats = RunStats { frames: dataset.frames.len(), ..RunStats::default() };
    let mut warnings = Vec::new();

    let eroded: Vec<Vec<Segment>> = timer.time(Stage::Mask, || {
        dataset
            .frames
            .iter()
            .map(|f| {
                let e = erode_until_stable(&f.mask, hp.delta_s, hp.max_erosion_iters)?;
                if !e.converged {
                    stats.unconverged_frames += 1;
                }
                Ok(e.segments)
            })
            .collect()
    })?;

    let detections: Vec<Vec<Detection>> = timer.time(Stage::Detect, || {
        Ok(dataset.frames.iter().zip(&eroded).map(|(f, segs)| detect(segs, hp.delta_n, f.index, f.t)).collect())
    })?;
    stats.detections = detections.iter().map(Vec::len).sum();

    let world: Vec<Vec<Point3>> = timer.time(Stage::Project, || {
        if dataset.poses.is_empty() {
            return Err(Error::EmptyPoseLog);
        }
        detections.iter().map(|ds| ds.iter().map(|d| project(d, cal, &dataset.poses)).collect()).collect()
    })?;

    let raw = timer.time(Stage::Track, || {
        let mut tracker = Tracker::new(*hp);
        for (f, pts) in dataset.frames.iter().zip(&world) {
            tracker.step(f.t, pts)?;
        }
        Ok(tracker.into_tracks())
    })?;
    stats.raw_tracks = raw.len();

    let tracks = timer.time(Stage::Finalize, || Ok(finalize(raw, hp)))?;
    stats.kept_tracks = tracks.len();

    let frame_times: Vec<f64> = dataset.frames.iter().map(|f| f.t).collect();
    let tracks = timer.time(Stage::Interpolate, || {
        Ok(tracks.iter().map(|t| interpolate_track(t, &frame_times)).collect::<Vec<_>>())
    })?;

    let merged = timer.time(Stage::Merge, || Ok(merge_all(&tracks, hp)))?;

    let bifurcations: Vec<Bifurcation> = timer.time(Stage::Bifurcate, || {
        let mut all: Vec<Bifurcation> = merged.iter().flat_map(|m| find_bifurcations(m, hp)).collect();
        all.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.merged_id.cmp(&b.merged_id)));
        Ok(all)
    })?;

    let needle_sites = timer.time(Stage::Needle, || {
        Ok(bifurcations
            .iter()
            .map(|b| {
                let mt = merged.iter().find(|m| m.id == b.merged_id).expect("bifurcation refers to a merged track");
                needle_site(mt, b, hp.needle_target_mm)
                    .map_err(|e| warnings.push(format!("bifurcation at t={:.3}: {e}", b.t)))
                    .ok()
            })
            .collect::<Vec<_>>())
    })?;
    let identification_time_s = started.elapsed().as_secs_f64();

    if stats.unconverged_frames > 0 {
        warnings.push(format!("erosion did not converge on {} frame(s)", stats.unconverged_frames));
    }
    let primary = (!bifurcations.is_empty()).then_some(0);

    Ok(PipelineResult {
        merged_tracks: merged,
        bifurcations,
        needle_sites,
        primary,
        timings: timer.timings.into_iter().map(|(stage, d)| StageTiming { stage, seconds: d.as_secs_f64() }).collect(),
        identification_time_s,
        stats,
        warnings,
    })
}
