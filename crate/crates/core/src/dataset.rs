//! On-disk scan layout.
//!
//! ```text
//! <dir>/config.json        hyper_params + calibration + scan
//! <dir>/poses.jsonl        one pose per line
//! <dir>/frames/000000.pgm  binary masks, P5
//! <dir>/truth.json         optional ground-truth junctions
//! <dir>/truth_frames/      optional noise-free masks
//! ```
//!
//! Frame `i` is taken at `t = i / scan.frame_rate_hz`.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::Mask;
use crate::params::HyperParams;
use crate::projection::{read_pose_log, write_pose_log, Calibration, Pose};
use crate::simulate::ScanParams;

pub const CONFIG_FILE: &str = "config.json";
pub const POSES_FILE: &str = "poses.jsonl";
pub const FRAMES_DIR: &str = "frames";
pub const TRUTH_FILE: &str = "truth.json";
pub const TRUTH_FRAMES_DIR: &str = "truth_frames";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub hyper_params: HyperParams,
    pub calibration: Calibration,
    pub scan: ScanParams,
}

impl RunConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let cfg: RunConfig = read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn validate(&self) -> Result<()> {
        self.hyper_params.validate()?;
        self.calibration.validate()?;
        self.scan.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub index: usize,
    pub t: f64,
    pub mask: Mask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanDataset {
    pub frames: Vec<Frame>,
    pub poses: Vec<Pose>,
    pub config: RunConfig,
}

/// Known bifurcation positions in world millimetres.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub junctions: Vec<Vector3<f64>>,
}

impl GroundTruth {
    pub fn read(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn frame_name(index: usize) -> String {
    format!("{index:06}.pgm")
}

/// Numbered `*.pgm` files in `dir`, sorted by index.
fn list_frames(dir: &Path) -> Result<Vec<(usize, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("pgm") {
            continue;
        }
        let index = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| Error::Format { path: path.clone(), msg: "frame file name is not a number".into() })?;
        out.push((index, path));
    }
    out.sort();
    if let Some(w) = out.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Format { path: w[1].1.clone(), msg: format!("duplicate frame index {}", w[1].0) });
    }
    Ok(out)
}

fn write_masks<'a>(dir: &Path, masks: impl Iterator<Item = (usize, &'a Mask)>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, m) in masks {
        m.write_pgm(&dir.join(frame_name(i)))?;
    }
    Ok(())
}

impl ScanDataset {
    /// Loads a dataset directory. `config` overrides `<dir>/config.json`.
    pub fn load(dir: &Path, config: Option<&Path>) -> Result<Self> {
        let config_path = config.map_or_else(|| dir.join(CONFIG_FILE), Path::to_path_buf);
        let config = RunConfig::read(&config_path)?;
        let poses = read_pose_log(&dir.join(POSES_FILE))?;
        let mut frames = Vec::new();
        for (index, path) in list_frames(&dir.join(FRAMES_DIR))? {
            let mask = Mask::read_pgm(&path)?;
            if (mask.width(), mask.height()) != (config.scan.width, config.scan.height) {
                return Err(Error::Format {
                    path,
                    msg: format!(
                        "frame is {}x{}, config says {}x{}",
                        mask.width(),
                        mask.height(),
                        config.scan.width,
                        config.scan.height
                    ),
                });
            }
            frames.push(Frame { index, t: config.scan.frame_time(index), mask });
        }
        Ok(Self { frames, poses, config })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.config.write(&dir.join(CONFIG_FILE))?;
        write_pose_log(&dir.join(POSES_FILE), &self.poses)?;
        write_masks(&dir.join(FRAMES_DIR), self.frames.iter().map(|f| (f.index, &f.mask)))
    }
}

/// Writes a simulated scan with its truth files.
pub fn save_with_truth(dir: &Path, dataset: &ScanDataset, truth: &GroundTruth, clean: &[Mask]) -> Result<()> {
    dataset.save(dir)?;
    truth.write(&dir.join(TRUTH_FILE))?;
    write_masks(&dir.join(TRUTH_FRAMES_DIR), clean.iter().enumerate())
}

/// Noise-free masks from `<dir>/truth_frames`, if present.
pub fn load_truth_frames(dir: &Path) -> Result<Option<Vec<(usize, Mask)>>> {
    let td = dir.join(TRUTH_FRAMES_DIR);
    if !td.is_dir() {
        return Ok(None);
    }
    list_frames(&td)?.into_iter().map(|(i, p)| Mask::read_pgm(&p).map(|m| (i, m))).collect::<Result<Vec<_>>>().map(Some)
}
