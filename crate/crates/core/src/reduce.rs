//! Spatial reduction: repeating pixel-to-group patterns and OR pooling of
//! spike channels.
//!
//! Traversal orders (only group membership matters to the OR reduction):
//!
//! * `col-stride:N` counts `0..N` across the frame row by row (column index
//!   fastest). With `N` equal to the column count every group is one column.
//! * `row-stride:N` counts `0..N` down the frame column by column (row index
//!   fastest). With `N` equal to the row count every group is one row.
//!   Strides longer than a dimension keep counting into the next line.
//! * `box:WxH` numbers a `W` wide, `H` tall block and tiles it, so pixel
//!   `(r, c)` gets `(r mod H) * W + (c mod W)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::SpikeRaster;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PatternKind {
    Full,
    RowStride(usize),
    ColStride(usize),
    Box { w: usize, h: usize },
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternKind::Full => f.write_str("full"),
            PatternKind::RowStride(n) => write!(f, "row-stride:{n}"),
            PatternKind::ColStride(n) => write!(f, "col-stride:{n}"),
            PatternKind::Box { w, h } => write!(f, "box:{w}x{h}"),
        }
    }
}

impl FromStr for PatternKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::invalid(format!("unknown reduction pattern '{s}'"));
        // Zero sizes parse; `build_pattern` rejects them.
        let size = |v: &str| -> Result<usize> { v.trim().parse::<usize>().map_err(|_| bad()) };
        if s == "full" {
            return Ok(PatternKind::Full);
        }
        let (name, arg) = s.split_once(':').ok_or_else(bad)?;
        match name {
            "row-stride" => Ok(PatternKind::RowStride(size(arg)?)),
            "col-stride" => Ok(PatternKind::ColStride(size(arg)?)),
            "box" => {
                let (w, h) = arg.split_once('x').ok_or_else(bad)?;
                Ok(PatternKind::Box {
                    w: size(w)?,
                    h: size(h)?,
                })
            }
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for PatternKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PatternKind> for String {
    fn from(k: PatternKind) -> String {
        k.to_string()
    }
}

/// Pixel-to-group assignment for one frame size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionPattern {
    kind: PatternKind,
    rows: usize,
    cols: usize,
    assignment: Vec<usize>,
    group_count: usize,
}

impl ReductionPattern {
    pub fn kind(&self) -> PatternKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn group_of(&self, row: usize, col: usize) -> usize {
        self.assignment[row * self.cols + col]
    }

    /// Group ids in row-major pixel order.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn group_count(&self) -> usize {
        self.group_count
    }

    /// Pixels `(row, col)` belonging to each group.
    pub fn members(&self) -> Vec<Vec<(usize, usize)>> {
        let mut out = vec![Vec::new(); self.group_count];
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[self.group_of(r, c)].push((r, c));
            }
        }
        out
    }

    /// Spike channels the pattern feeds into a network.
    pub fn channel_count(&self) -> usize {
        2 * self.group_count
    }
}

pub fn group_count(pattern: &ReductionPattern) -> usize {
    pattern.group_count
}

/// Builds the assignment for `kind` on a `rows x cols` frame.
///
/// Ids that never occur (a stride or box larger than the frame) are dropped
/// and the rest renumbered in order, so ids always cover `0..group_count`.
pub fn build_pattern(kind: PatternKind, rows: usize, cols: usize) -> Result<ReductionPattern> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("frame dimensions must be positive"));
    }
    let raw_id = |r: usize, c: usize| -> usize {
        match kind {
            PatternKind::Full => r * cols + c,
            PatternKind::ColStride(n) => (r * cols + c) % n,
            PatternKind::RowStride(n) => (c * rows + r) % n,
            PatternKind::Box { w, h } => (r % h) * w + (c % w),
        }
    };
    match kind {
        PatternKind::RowStride(0) | PatternKind::ColStride(0) => return Err(Error::invalid("stride must be positive")),
        PatternKind::Box { w, h } if w == 0 || h == 0 => return Err(Error::invalid("box dimensions must be positive")),
        _ => {}
    }
    let mut assignment = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            assignment.push(raw_id(r, c));
        }
    }
    let max = assignment.iter().copied().max().unwrap_or(0);
    let mut remap = vec![usize::MAX; max + 1];
    for &id in &assignment {
        remap[id] = 0;
    }
    let mut next = 0;
    for slot in remap.iter_mut().filter(|s| **s == 0) {
        *slot = next;
        next += 1;
    }
    for id in &mut assignment {
        *id = remap[*id];
    }
    Ok(ReductionPattern {
        kind,
        rows,
        cols,
        assignment,
        group_count: next,
    })
}

/// ORs per-pixel spike channels into per-group channels.
///
/// `per_pixel` holds two channels per pixel in row-major pixel order
/// (rising, falling). The result holds two channels per group.
pub fn reduce_spikes(per_pixel: &SpikeRaster, pattern: &ReductionPattern) -> Result<SpikeRaster> {
    let pixels = pattern.rows * pattern.cols;
    if per_pixel.n_channels() != 2 * pixels {
        return Err(Error::ShapeMismatch(format!(
            "raster has {} channels, pattern expects {} (2 per pixel)",
            per_pixel.n_channels(),
            2 * pixels
        )));
    }
    let steps = per_pixel.n_timesteps();
    let mut out = SpikeRaster::silent(pattern.channel_count(), steps);
    for (pixel, &g) in pattern.assignment.iter().enumerate() {
        for edge in 0..2 {
            let src = per_pixel.channel(2 * pixel + edge);
            if !src.iter().any(|b| *b) {
                continue;
            }
            let dst = out.channel_mut(2 * g + edge);
            for (d, s) in dst.iter_mut().zip(src) {
                *d |= *s;
            }
        }
    }
    Ok(out)
}
