//! Per-frame binary mask processing: majority erosion, 8-connected
//! component labeling and vessel detection.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{min_enclosing_circle, Circle2, Point2};

pub const DEFAULT_MAX_EROSION_ITERS: usize = 64;

/// Row-major binary image.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, bits: vec![false; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self { width, height, bits }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::InvalidParam(format!(
                "mask of {width}x{height} needs {} bits, got {}",
                width * height,
                bits.len()
            )));
        }
        Ok(Self { width, height, bits })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Number of on-pixels in the 3x3 neighbourhood of `(x, y)`, zero padded.
    pub fn neighborhood_sum(&self, x: usize, y: usize) -> usize {
        let mut sum = 0;
        for ny in y.saturating_sub(1)..=(y + 1).min(self.height - 1) {
            for nx in x.saturating_sub(1)..=(x + 1).min(self.width - 1) {
                sum += self.bits[ny * self.width + nx] as usize;
            }
        }
        sum
    }

    /// Intersection-over-union with another mask of the same size. Two empty
    /// masks have IoU 1.
    pub fn iou(&self, other: &Mask) -> f64 {
        assert_eq!((self.width, self.height), (other.width, other.height));
        let (mut inter, mut union) = (0usize, 0usize);
        for (&a, &b) in self.bits.iter().zip(&other.bits) {
            inter += (a && b) as usize;
            union += (a || b) as usize;
        }
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Binary PGM (P5), 0 for background and 255 for vessel.
    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.bits.iter().map(|&b| if b { 255u8 } else { 0 }));
        out
    }

    /// Parses a binary PGM (P5) with maxval up to 255; values >= 128 are vessel.
    pub fn from_pgm_bytes(data: &[u8]) -> std::result::Result<Self, String> {
        let mut pos = 0usize;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            // skip whitespace and comments
            while pos < data.len() {
                if data[pos].is_ascii_whitespace() {
                    pos += 1;
                } else if data[pos] == b'#' {
                    while pos < data.len() && data[pos] != b'\n' {
                        pos += 1;
                    }
                } else {
                    break;
                }
            }
            let start = pos;
            while pos < data.len() && !data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err("truncated header".into());
            }
            fields.push(std::str::from_utf8(&data[start..pos]).map_err(|_| "non-ascii header")?.to_owned());
        }
        if fields[0] != "P5" {
            return Err(format!("expected magic P5, found {:?}", fields[0]));
        }
        let parse = |s: &str| s.parse::<usize>().map_err(|_| format!("bad header field {s:?}"));
        let (width, height, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
        if maxval == 0 || maxval > 255 {
            return Err(format!("unsupported maxval {maxval}"));
        }
        // exactly one whitespace byte separates header and raster
        pos += 1;
        let raster = data.get(pos..pos + width * height).ok_or("truncated raster")?;
        Ok(Self { width, height, bits: raster.iter().map(|&v| v >= 128).collect() })
    }

    pub fn read_pgm(path: &Path) -> Result<Self> {
        let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_pgm_bytes(&data).map_err(|msg| Error::Pgm { path: path.to_owned(), msg })
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_pgm_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// An 8-connected group of on-pixels with its minimum enclosing circle.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    /// Pixel centres, `x` = column, `y` = row.
    pub pixels: Vec<Point2>,
    pub mec: Circle2,
}

/// A vessel candidate in one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub center: Point2,
    pub radius: f64,
    pub frame_index: usize,
    pub t: f64,
}

/// Labels the 8-connected components of `m`, ordered by their minimum row
/// and then minimum column.
pub fn connected_components(m: &Mask) -> Vec<Segment> {
    let (w, h) = (m.width, m.height);
    let mut seen = vec![false; w * h];
    let mut stack = Vec::new();
    let mut out: Vec<((usize, usize), Segment)> = Vec::new();

    for start in 0..w * h {
        if !m.bits[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut pixels = Vec::new();
        let (mut min_row, mut min_col) = (usize::MAX, usize::MAX);
        while let Some(idx) = stack.pop() {
            let (x, y) = (idx % w, idx / w);
            min_row = min_row.min(y);
            min_col = min_col.min(x);
            pixels.push(Point2::new(x as f64, y as f64));
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let n = ny * w + nx;
                    if m.bits[n] && !seen[n] {
                        seen[n] = true;
                        stack.push(n);
                    }
                }
            }
        }
        pixels.sort_by(|a, b| a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x)));
        let mec = min_enclosing_circle(&pixels).expect("component has pixels");
        out.push(((min_row, min_col), Segment { pixels, mec }));
    }
    out.sort_by_key(|(key, _)| *key);
    out.into_iter().map(|(_, s)| s).collect()
}

/// One 3x3 box-filter pass: a pixel is on iff at least half of its zero-padded
/// neighbourhood (i.e. 5 of 9) is on.
///
/// This is a majority filter. It can switch on a background pixel that has
/// five or more vessel neighbours.
pub fn erode_step(m: &Mask) -> Mask {
    Mask::from_fn(m.width, m.height, |x, y| m.neighborhood_sum(x, y) as f64 / 9.0 >= 0.5)
}

/// Classical 3x3 erosion (all nine pixels must be on), zero padded.
pub fn erode_full(m: &Mask) -> Mask {
    Mask::from_fn(m.width, m.height, |x, y| m.neighborhood_sum(x, y) == 9)
}

/// Result of [`erode_until_stable`].
#[derive(Debug, Clone)]
pub struct Erosion {
    pub segments: Vec<Segment>,
    pub iterations: usize,
    /// False when `max_iters` ran out with a segment still at or above `delta_s`.
    pub converged: bool,
}

/// Erodes until every segment's enclosing-circle radius is below `delta_s`.
///
/// Each iteration applies [`erode_step`] restricted to the current mask, so
/// pixels are only ever removed. When the majority pass leaves the mask
/// unchanged (smooth convex blobs are fixed points of it), the segments still
/// at or above `delta_s` are instead peeled with [`erode_full`]. Segments that
/// vanish are dropped.
pub fn erode_until_stable(m: &Mask, delta_s: f64, max_iters: usize) -> Result<Erosion> {
    if !(delta_s > 0.0) {
        return Err(Error::InvalidParam(format!("delta_s must be positive, got {delta_s}")));
    }
    if max_iters == 0 {
        return Err(Error::InvalidParam("max_iters must be at least 1".into()));
    }
    let mut current = m.clone();
    let mut segments = connected_components(&current);
    let mut iterations = 0;
    let oversized = |segs: &[Segment]| segs.iter().any(|s| s.mec.radius >= delta_s);

    while oversized(&segments) && iterations < max_iters {
        let majority = erode_step(&current);
        let mut next = Mask::from_fn(current.width, current.height, |x, y| current.get(x, y) && majority.get(x, y));
        if next == current {
            let peeled = erode_full(&current);
            for seg in segments.iter().filter(|s| s.mec.radius >= delta_s) {
                for p in &seg.pixels {
                    let (x, y) = (p.x as usize, p.y as usize);
                    next.set(x, y, peeled.get(x, y));
                }
            }
        }
        current = next;
        segments = connected_components(&current);
        iterations += 1;
    }
    let converged = !oversized(&segments);
    Ok(Erosion { segments, iterations, converged })
}

/// Keeps segments whose enclosing-circle radius is at least `delta_n`.
pub fn detect(segments: &[Segment], delta_n: f64, frame_index: usize, t: f64) -> Vec<Detection> {
    segments
        .iter()
        .filter(|s| s.mec.radius >= delta_n)
        .map(|s| Detection { center: s.mec.center, radius: s.mec.radius, frame_index, t })
        .collect()
}
