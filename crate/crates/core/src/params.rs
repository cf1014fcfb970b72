use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DEFAULT_EPS_I;
use crate::mask::DEFAULT_MAX_EROSION_ITERS;

/// Thresholds for the whole pipeline. Pixel-typed values apply to mask
/// radii; length-typed values are world millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Minimum enclosing-circle radius (px) for a segment to count as a vessel.
    pub delta_n: f64,
    /// Erosion stops once every segment's radius (px) is below this.
    pub delta_s: f64,
    /// Maximum distance (mm) between a detection and a track's last point.
    pub delta_td: f64,
    /// Maximum difference of mean depth (mm) for two tracks to merge.
    pub delta_h: f64,
    /// Minimum angle (degrees) between two track lines for them to merge.
    pub delta_theta: f64,
    /// Maximum closest-approach distance (mm) between two track lines.
    pub delta_sd: f64,
    /// Maximum time difference (s) for a bifurcation point pair.
    pub delta_t: f64,
    /// Maximum distance (mm) for a bifurcation point pair.
    pub delta_bd: f64,
    #[serde(default = "default_eps_i")]
    pub eps_i: f64,
    #[serde(default = "default_dbscan_eps")]
    pub dbscan_eps: f64,
    #[serde(default = "default_dbscan_min_pts")]
    pub dbscan_min_pts: usize,
    /// Target distance (mm) from the bifurcation to the needle site.
    #[serde(default = "default_needle_target")]
    pub needle_target_mm: f64,
    /// World axis index (0, 1 or 2) holding depth below the skin.
    #[serde(default = "default_depth_axis")]
    pub depth_axis: usize,
    #[serde(default = "default_max_erosion_iters")]
    pub max_erosion_iters: usize,
}

fn default_eps_i() -> f64 {
    DEFAULT_EPS_I
}
fn default_dbscan_eps() -> f64 {
    10.0
}
fn default_dbscan_min_pts() -> usize {
    3
}
fn default_needle_target() -> f64 {
    20.0
}
fn default_depth_axis() -> usize {
    1
}
fn default_max_erosion_iters() -> usize {
    DEFAULT_MAX_EROSION_ITERS
}

/// Named hyperparameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Pig,
    Phantom,
}

impl HyperParams {
    /// Values tuned on in-vivo porcine scans.
    pub fn pig() -> Self {
        Self {
            delta_n: 3.0,
            delta_s: 6.0,
            delta_td: 100.0,
            delta_h: 200.0,
            delta_theta: 10.0,
            delta_sd: 10.0,
            delta_t: 0.01,
            delta_bd: 10.0,
            ..Self::phantom()
        }
    }

    /// Values tuned on the vascular phantom.
    pub fn phantom() -> Self {
        Self {
            delta_n: 8.0,
            delta_s: 23.0,
            delta_td: 100.0,
            delta_h: 200.0,
            delta_theta: 10.0,
            delta_sd: 10.0,
            delta_t: 0.01,
            delta_bd: 40.0,
            eps_i: default_eps_i(),
            dbscan_eps: default_dbscan_eps(),
            dbscan_min_pts: default_dbscan_min_pts(),
            needle_target_mm: default_needle_target(),
            depth_axis: default_depth_axis(),
            max_erosion_iters: default_max_erosion_iters(),
        }
    }

    pub fn for_profile(profile: Profile) -> Self {
        match profile {
            Profile::Pig => Self::pig(),
            Profile::Phantom => Self::phantom(),
        }
    }

    /// Wider bifurcation windows used for anatomically unusual subjects.
    pub fn with_wide_bifurcation_window(self) -> Self {
        Self { delta_t: 0.1, delta_bd: 20.0, ..self }
    }

    /// Scales every length-typed world threshold by `s`.
    pub fn scaled_lengths(self, s: f64) -> Self {
        Self {
            delta_td: self.delta_td * s,
            delta_h: self.delta_h * s,
            delta_sd: self.delta_sd * s,
            delta_bd: self.delta_bd * s,
            dbscan_eps: self.dbscan_eps * s,
            needle_target_mm: self.needle_target_mm * s,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("delta_n", self.delta_n),
            ("delta_s", self.delta_s),
            ("delta_td", self.delta_td),
            ("delta_h", self.delta_h),
            ("delta_theta", self.delta_theta),
            ("delta_sd", self.delta_sd),
            ("delta_t", self.delta_t),
            ("delta_bd", self.delta_bd),
            ("eps_i", self.eps_i),
            ("dbscan_eps", self.dbscan_eps),
            ("needle_target_mm", self.needle_target_mm),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParam(format!("{name} must be positive, got {v}")));
            }
        }
        if self.dbscan_min_pts == 0 {
            return Err(Error::InvalidParam("dbscan_min_pts must be at least 1".into()));
        }
        if self.max_erosion_iters == 0 {
            return Err(Error::InvalidParam("max_erosion_iters must be at least 1".into()));
        }
        if self.depth_axis > 2 {
            return Err(Error::InvalidParam(format!("depth_axis must be 0, 1 or 2, got {}", self.depth_axis)));
        }
        Ok(())
    }
}

impl Default for HyperParams {
    fn default() -> Self {
        Self::phantom()
    }
}
