//! Writing results as JSON, ASCII PLY or CSV.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::PipelineResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Ply,
    Csv,
}

const PALETTE: [[u8; 3]; 8] = [
    [230, 25, 75],
    [60, 180, 75],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [128, 128, 0],
];

pub fn color_for(merged_id: usize) -> [u8; 3] {
    PALETTE[merged_id % PALETTE.len()]
}

/// Global vertex index (in export order) of the merged-track point nearest to `target`.
fn nearest_vertex(result: &PipelineResult, target: &nalgebra::Vector3<f64>) -> Option<usize> {
    result
        .merged_tracks
        .iter()
        .flat_map(|m| m.points.iter())
        .enumerate()
        .min_by(|a, b| (a.1.pos - target).norm().total_cmp(&(b.1.pos - target).norm()))
        .map(|(i, _)| i)
}

/// ASCII PLY of all merged-track points, coloured by merged track. Each
/// bifurcation and needle site is noted in a header comment with the index
/// of its nearest vertex.
pub fn to_ply(result: &PipelineResult) -> String {
    let mut out = String::from("ply\nformat ascii 1.0\n");
    for (i, b) in result.bifurcations.iter().enumerate() {
        let v = nearest_vertex(result, &b.position).map_or(-1, |v| v as i64);
        let p = b.position;
        let _ = writeln!(out, "comment bifurcation {i} vertex {v} at {} {} {} t {}", p.x, p.y, p.z, b.t);
    }
    for (i, n) in result.needle_sites.iter().enumerate() {
        if let Some(n) = n {
            let v = nearest_vertex(result, &n.position).map_or(-1, |v| v as i64);
            let p = n.position;
            let _ = writeln!(out, "comment needle {i} vertex {v} at {} {} {} t {}", p.x, p.y, p.z, n.t);
        }
    }
    let _ = writeln!(out, "element vertex {}", result.total_points());
    out.push_str("property float x\nproperty float y\nproperty float z\n");
    out.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n");
    for m in &result.merged_tracks {
        let [r, g, b] = color_for(m.id);
        for p in &m.points {
            let _ = writeln!(out, "{} {} {} {r} {g} {b}", p.pos.x, p.pos.y, p.pos.z);
        }
    }
    out
}

/// One row per merged-track point.
pub fn to_csv(result: &PipelineResult) -> String {
    let mut out = String::from("merged_id,origin_id,t,x,y,z,interpolated\n");
    for m in &result.merged_tracks {
        for p in &m.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                m.id, p.origin_id, p.t, p.pos.x, p.pos.y, p.pos.z, p.interpolated
            );
        }
    }
    out
}

pub fn export(result: &PipelineResult, format: Format, path: &Path) -> Result<()> {
    let text = match format {
        Format::Json => return result.write(path),
        Format::Ply => to_ply(result),
        Format::Csv => to_csv(result),
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
