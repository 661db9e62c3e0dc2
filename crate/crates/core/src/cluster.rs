//! Pixel-cluster datasets: the sample type, the CSV cluster file format,
//! labelling, file-level train/test splits, class balancing and a synthetic
//! stand-in generator.
//!
//! A cluster file is plain text. The first line names the frame shape:
//!
//! ```text
//! # shape=13x21x20 t_res_ps=200
//! 0.734,-0.21,1,0,0,0,...
//! ```
//!
//! Every following non-empty line is one sample: `p_t,y0,charge_sign`
//! followed by `rows*cols*slices` charge values in `[slice][row][col]` order.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Native time resolution of the detector read-out.
pub const NATIVE_T_RES_PS: u32 = 200;

/// Dimensions of a cluster frame stack.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FrameShape {
    pub rows: usize,
    pub cols: usize,
    pub slices: usize,
}

impl FrameShape {
    pub const fn new(rows: usize, cols: usize, slices: usize) -> Self {
        Self { rows, cols, slices }
    }

    pub const fn pixels(&self) -> usize {
        self.rows * self.cols
    }

    pub const fn len(&self) -> usize {
        self.rows * self.cols * self.slices
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn header(&self) -> String {
        format!(
            "# shape={}x{}x{} t_res_ps={}",
            self.rows, self.cols, self.slices, NATIVE_T_RES_PS
        )
    }
}

impl Default for FrameShape {
    /// 13 rows (y) x 21 columns (x) x 20 slices of 200 ps.
    fn default() -> Self {
        Self::new(13, 21, 20)
    }
}

/// One particle hit: charge frames over time plus truth information.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterSample<T> {
    shape: FrameShape,
    charges: Vec<T>,
    pub p_t: T,
    pub y0: T,
    pub charge_sign: i8,
}

impl<T: Scalar> ClusterSample<T> {
    /// Builds a sample from flat `[slice][row][col]` charges.
    pub fn new(shape: FrameShape, charges: Vec<T>, p_t: T, y0: T, charge_sign: i8) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::ShapeMismatch("frame shape has a zero dimension".into()));
        }
        if charges.len() != shape.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} charge values, got {}",
                shape.len(),
                charges.len()
            )));
        }
        if let Some(bad) = charges.iter().find(|q| !q.is_finite() || **q < T::zero()) {
            return Err(Error::invalid(format!("charge {bad} is negative or not finite")));
        }
        if !(p_t.is_finite() && p_t > T::zero()) {
            return Err(Error::invalid(format!("p_t must be positive, got {p_t}")));
        }
        if !y0.is_finite() {
            return Err(Error::invalid("y0 must be finite"));
        }
        if charge_sign != 1 && charge_sign != -1 {
            return Err(Error::invalid(format!(
                "charge_sign must be +1 or -1, got {charge_sign}"
            )));
        }
        Ok(Self {
            shape,
            charges,
            p_t,
            y0,
            charge_sign,
        })
    }

    /// An all-zero frame stack.
    pub fn zeros(shape: FrameShape, p_t: T) -> Result<Self> {
        Self::new(shape, vec![T::zero(); shape.len()], p_t, T::zero(), 1)
    }

    pub fn shape(&self) -> FrameShape {
        self.shape
    }

    pub fn charges(&self) -> &[T] {
        &self.charges
    }

    #[inline]
    fn offset(&self, slice: usize, row: usize, col: usize) -> usize {
        (slice * self.shape.rows + row) * self.shape.cols + col
    }

    pub fn charge(&self, slice: usize, row: usize, col: usize) -> T {
        self.charges[self.offset(slice, row, col)]
    }

    /// Sets one charge value. Negative or non-finite values are rejected.
    pub fn set_charge(&mut self, slice: usize, row: usize, col: usize, q: T) -> Result<()> {
        if !q.is_finite() || q < T::zero() {
            return Err(Error::invalid(format!("charge {q} is negative or not finite")));
        }
        let i = self.offset(slice, row, col);
        self.charges[i] = q;
        Ok(())
    }

    /// The time series of one pixel.
    pub fn pixel_series(&self, row: usize, col: usize) -> Vec<T> {
        (0..self.shape.slices).map(|s| self.charge(s, row, col)).collect()
    }
}

/// Binary p_T class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClassLabel {
    Low = 0,
    High = 1,
}

impl ClassLabel {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Self::Low),
            1 => Some(Self::High),
            _ => None,
        }
    }
}

/// High iff `p_t > pt_cutoff`; a sample exactly at the cutoff is low.
pub fn label<T: Scalar>(sample: &ClusterSample<T>, pt_cutoff: T) -> ClassLabel {
    label_pt(sample.p_t, pt_cutoff)
}

pub fn label_pt<T: Scalar>(p_t: T, pt_cutoff: T) -> ClassLabel {
    if p_t > pt_cutoff {
        ClassLabel::High
    } else {
        ClassLabel::Low
    }
}

// ---------------------------------------------------------------------------
// file format

/// Writes samples in the cluster CSV format. All samples must share a shape;
/// an empty slice is written with the default shape header.
pub fn save_dataset<T: Scalar>(path: &Path, samples: &[ClusterSample<T>]) -> Result<()> {
    let shape = samples.first().map(|s| s.shape).unwrap_or_default();
    let mut out = String::with_capacity(64 + samples.len() * shape.len() * 4);
    out.push_str(&shape.header());
    out.push('\n');
    for s in samples {
        if s.shape != shape {
            return Err(Error::ShapeMismatch(format!(
                "sample shape {:?} differs from dataset shape {:?}",
                s.shape, shape
            )));
        }
        let _ = write!(out, "{},{},{}", s.p_t, s.y0, s.charge_sign);
        for q in &s.charges {
            let _ = write!(out, ",{q}");
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn parse_header(path: &Path, line: &str) -> Result<FrameShape> {
    let err = |msg: &str| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        msg: msg.to_string(),
    };
    let body = line
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| err("missing '# shape=RxCxS' header"))?;
    let spec = body
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix("shape="))
        .ok_or_else(|| err("header lacks shape="))?;
    let dims: Vec<usize> = spec
        .split('x')
        .map(|d| d.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| err("shape must be RxCxS integers"))?;
    match dims[..] {
        [r, c, s] if r > 0 && c > 0 && s > 0 => Ok(FrameShape::new(r, c, s)),
        _ => Err(err("shape must have three positive dimensions")),
    }
}

fn parse_row<T: Scalar>(path: &Path, lineno: usize, line: &str, shape: FrameShape) -> Result<ClusterSample<T>> {
    let perr = |msg: String| Error::Parse {
        path: path.to_path_buf(),
        line: lineno,
        msg,
    };
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    let expected = 3 + shape.len();
    if fields.len() != expected {
        return Err(perr(format!(
            "expected {expected} fields for shape {}x{}x{}, found {}",
            shape.rows,
            shape.cols,
            shape.slices,
            fields.len()
        )));
    }
    let num = |i: usize| -> Result<T> {
        fields[i]
            .parse::<T>()
            .map_err(|_| perr(format!("field {} ('{}') is not a number", i + 1, fields[i])))
    };
    let p_t = num(0)?;
    let y0 = num(1)?;
    let charge_sign: i8 = fields[2]
        .parse()
        .map_err(|_| perr(format!("charge_sign '{}' is not an integer", fields[2])))?;
    let mut charges = Vec::with_capacity(shape.len());
    for i in 3..expected {
        let q = num(i)?;
        if !q.is_finite() || q < T::zero() {
            return Err(perr(format!("charge field {} is negative or not finite", i + 1)));
        }
        charges.push(q);
    }
    ClusterSample::new(shape, charges, p_t, y0, charge_sign).map_err(|e| perr(e.to_string()))
}

/// Reads a cluster file, returning samples in file order.
pub fn load_dataset<T: Scalar>(path: &Path) -> Result<Vec<ClusterSample<T>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        msg: "empty file; header required".into(),
    })?;
    let shape = parse_header(path, header)?;
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_row(path, i + 2, l, shape))
        .collect()
}

fn scan_file(path: &Path) -> Result<(FrameShape, usize)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        msg: "empty file; header required".into(),
    })?;
    let shape = parse_header(path, header)?;
    Ok((shape, lines.filter(|l| !l.trim().is_empty()).count()))
}

// ---------------------------------------------------------------------------
// manifests

/// Ordered list of cluster files sharing one frame shape.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub file_paths: Vec<PathBuf>,
    pub samples_per_file: Vec<usize>,
    pub frame_shape: FrameShape,
}

impl DatasetManifest {
    pub fn new(file_paths: Vec<PathBuf>, samples_per_file: Vec<usize>, frame_shape: FrameShape) -> Result<Self> {
        if file_paths.is_empty() {
            return Err(Error::invalid("manifest has no files"));
        }
        if file_paths.len() != samples_per_file.len() {
            return Err(Error::invalid("one sample count per file required"));
        }
        Ok(Self {
            file_paths,
            samples_per_file,
            frame_shape,
        })
    }

    /// Scans the given cluster files for their shapes and sample counts.
    pub fn from_files(paths: &[PathBuf]) -> Result<Self> {
        let first = paths.first().ok_or_else(|| Error::invalid("manifest has no files"))?;
        let (shape, _) = scan_file(first)?;
        let mut counts = Vec::with_capacity(paths.len());
        for p in paths {
            let (s, n) = scan_file(p)?;
            if s != shape {
                return Err(Error::ShapeMismatch(format!(
                    "{} has shape {s:?}, expected {shape:?}",
                    p.display()
                )));
            }
            counts.push(n);
        }
        Self::new(paths.to_vec(), counts, shape)
    }

    /// Reads a newline-separated list of paths. Relative paths are resolved
    /// against the manifest's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        let files: Vec<PathBuf> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                let p = Path::new(l);
                if p.is_absolute() {
                    p.to_path_buf()
                } else {
                    base.join(p)
                }
            })
            .collect();
        Self::from_files(&files)
    }

    /// Writes the manifest as newline-separated paths, relative to the
    /// manifest's directory when the file lives below it.
    pub fn save(&self, path: &Path) -> Result<()> {
        let base = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or_else(|| Path::new("."));
        let base = fs::canonicalize(base).map_err(|e| Error::io(base, e))?;
        let mut out = String::new();
        for p in &self.file_paths {
            let abs = fs::canonicalize(p).map_err(|e| Error::io(p, e))?;
            let shown = abs.strip_prefix(&base).map(Path::to_path_buf).unwrap_or(abs);
            out.push_str(&shown.to_string_lossy());
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn len(&self) -> usize {
        self.file_paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.file_paths.is_empty()
    }

    pub fn total_samples(&self) -> usize {
        self.samples_per_file.iter().sum()
    }

    fn subset(&self, idx: &[usize]) -> Self {
        Self {
            file_paths: idx.iter().map(|&i| self.file_paths[i].clone()).collect(),
            samples_per_file: idx.iter().map(|&i| self.samples_per_file[i]).collect(),
            frame_shape: self.frame_shape,
        }
    }
}

/// Splits a manifest into (train, test) by whole files.
///
/// The test set receives `round(test_fraction * n)` files, at least one and
/// at most `n - 1`. Files keep their manifest order within each side.
pub fn split_by_files(
    manifest: &DatasetManifest,
    test_fraction: f64,
    seed: u64,
) -> Result<(DatasetManifest, DatasetManifest)> {
    let n = manifest.len();
    if n < 2 {
        return Err(Error::invalid("need at least 2 files to split"));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "test_fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let n_test = ((test_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut test: Vec<usize> = order[..n_test].to_vec();
    let mut train: Vec<usize> = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((manifest.subset(&train), manifest.subset(&test)))
}

/// Indices of a class-balanced subset, in input order. The majority class is
/// down-sampled uniformly at random.
pub fn balanced_indices<T: Scalar>(pts: &[T], pt_cutoff: T, seed: u64) -> Result<Vec<usize>> {
    let (high, low): (Vec<usize>, Vec<usize>) =
        (0..pts.len()).partition(|&i| label_pt(pts[i], pt_cutoff) == ClassLabel::High);
    if high.is_empty() || low.is_empty() {
        return Err(Error::invalid(format!(
            "both classes required for balancing ({} low, {} high)",
            low.len(),
            high.len()
        )));
    }
    let keep = high.len().min(low.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = |members: &[usize], rng: &mut ChaCha8Rng| -> Vec<usize> {
        if members.len() == keep {
            members.to_vec()
        } else {
            index::sample(rng, members.len(), keep)
                .into_iter()
                .map(|i| members[i])
                .collect()
        }
    };
    let mut out = pick(&low, &mut rng);
    out.extend(pick(&high, &mut rng));
    out.sort_unstable();
    Ok(out)
}

/// Down-samples the majority class so both classes have equal counts.
pub fn balance_classes<T: Scalar>(
    samples: &[ClusterSample<T>],
    pt_cutoff: T,
    seed: u64,
) -> Result<Vec<ClusterSample<T>>> {
    let pts: Vec<T> = samples.iter().map(|s| s.p_t).collect();
    Ok(balanced_indices(&pts, pt_cutoff, seed)?
        .into_iter()
        .map(|i| samples[i].clone())
        .collect())
}

// ---------------------------------------------------------------------------
// synthetic generator

/// Parameters of the synthetic cluster generator.
///
/// This is a desk-scale stand-in for simulated sensor data, not a physics
/// simulation. A track crosses the sensor thickness while spanning
/// `1 + length_scale / p_t` pixel rows in y, so low-p_T tracks make long thin
/// clusters and high-p_T tracks short dense ones. Charge in each pixel builds
/// up linearly over a few time slices, later for deeper segments.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub shape: FrameShape,
    /// Lower edge of the p_T spectrum in GeV.
    pub pt_min: f64,
    /// Upper edge of the p_T spectrum in GeV.
    pub pt_max: f64,
    /// Power-law index of the falling spectrum, `P(p_t > x) = (pt_min/x)^index`.
    pub spectrum_index: f64,
    /// Row span per unit 1/p_T (rows * GeV).
    pub length_scale: f64,
    /// Charge deposited by a perpendicular track over the full thickness (e-).
    pub charge_thickness: f64,
    /// Ratio of the y pitch to the sensor thickness.
    pub pitch_over_thickness: f64,
    /// Gaussian read-out noise per pixel and slice (e-).
    pub noise_sigma: f64,
    /// Range of y0 in mm.
    pub y0_range: (f64, f64),
    pub charge_sign: i8,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            shape: FrameShape::default(),
            pt_min: 0.2,
            pt_max: 100.0,
            spectrum_index: 1.2,
            length_scale: 1.6,
            charge_thickness: 7500.0,
            pitch_over_thickness: 0.125,
            noise_sigma: 40.0,
            y0_range: (-1.0, 1.0),
            charge_sign: 1,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.shape.is_empty() {
            return bad("generator shape has a zero dimension");
        }
        if self.shape.slices < 8 {
            return bad("generator needs at least 8 time slices");
        }
        if !(self.pt_min > 0.0 && self.pt_max > self.pt_min) {
            return bad("require 0 < pt_min < pt_max");
        }
        if self.spectrum_index.is_nan() || self.spectrum_index <= 0.0 {
            return bad("spectrum_index must be positive");
        }
        if !(self.length_scale >= 0.0 && self.length_scale.is_finite()) {
            return bad("length_scale must be non-negative");
        }
        if !(self.charge_thickness > 0.0 && self.pitch_over_thickness > 0.0) {
            return bad("charge_thickness and pitch_over_thickness must be positive");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be non-negative");
        }
        if self.y0_range.0.is_nan() || self.y0_range.1.is_nan() || self.y0_range.0 > self.y0_range.1 {
            return bad("y0_range must be ordered");
        }
        if self.charge_sign != 1 && self.charge_sign != -1 {
            return bad("charge_sign must be +1 or -1");
        }
        Ok(())
    }

    /// Row span of a track with the given p_T.
    pub fn track_rows(&self, p_t: f64) -> f64 {
        1.0 + self.length_scale / p_t
    }

    fn sample_pt(&self, rng: &mut impl Rng) -> f64 {
        loop {
            let u: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
            let pt = self.pt_min * u.powf(-1.0 / self.spectrum_index);
            if pt <= self.pt_max {
                return pt;
            }
        }
    }
}

/// Generates `n` synthetic clusters; identical seeds give identical data.
pub fn generate_synthetic<T: Scalar>(n: usize, seed: u64, config: &SyntheticConfig) -> Result<Vec<ClusterSample<T>>> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| synth_one(config, &mut rng)).collect()
}

fn synth_one<T: Scalar>(cfg: &SyntheticConfig, rng: &mut ChaCha8Rng) -> Result<ClusterSample<T>> {
    let shape = cfg.shape;
    let (rows, cols, slices) = (shape.rows, shape.cols, shape.slices);
    let p_t = cfg.sample_pt(rng);
    let y0 = if cfg.y0_range.0 == cfg.y0_range.1 {
        cfg.y0_range.0
    } else {
        rng.gen_range(cfg.y0_range.0..=cfg.y0_range.1)
    };

    let span = cfg.track_rows(p_t).min(rows as f64);
    let centre = rows as f64 / 2.0 + rng.gen_range(-0.5..0.5);
    let start = (centre - span / 2.0).clamp(0.0, rows as f64 - span);
    let total = cfg.charge_thickness * (1.0 + (span * cfg.pitch_over_thickness).powi(2)).sqrt();

    // Sharing with the neighbouring column models a small x incidence angle.
    let col = cols / 2;
    let share: f64 = rng.gen_range(0.0..0.3);
    let neighbour = if rng.gen_bool(0.5) {
        col.saturating_sub(1)
    } else {
        (col + 1).min(cols - 1)
    };

    let mut final_charge = vec![0.0f64; rows * cols];
    let mut onset = vec![0usize; rows];
    for r in 0..rows {
        let lo = (r as f64).max(start);
        let hi = ((r + 1) as f64).min(start + span);
        if hi <= lo {
            continue;
        }
        let q = total * (hi - lo) / span;
        final_charge[r * cols + col] += q * (1.0 - share);
        if neighbour != col {
            final_charge[r * cols + neighbour] += q * share;
        } else {
            final_charge[r * cols + col] += q * share;
        }
        // Depth along the track sets when the charge starts to arrive.
        let mid = ((lo + hi) / 2.0 - start) / span.max(1e-9);
        let depth = if cfg.charge_sign > 0 { mid } else { 1.0 - mid };
        onset[r] = 1 + (depth * 3.0).round() as usize;
    }

    let noise = Normal::new(0.0, cfg.noise_sigma.max(f64::MIN_POSITIVE)).map_err(|e| Error::Config(e.to_string()))?;
    let mut charges = Vec::with_capacity(shape.len());
    for s in 0..slices {
        for r in 0..rows {
            let rise = 3 + onset[r];
            for c in 0..cols {
                let q_final = final_charge[r * cols + c];
                let frac = if s < onset[r] {
                    0.0
                } else {
                    (((s - onset[r]) + 1) as f64 / rise as f64).min(1.0)
                };
                let jitter = if cfg.noise_sigma > 0.0 { noise.sample(rng) } else { 0.0 };
                let q = (q_final * frac + jitter).max(0.0);
                charges.push(T::lit(q));
            }
        }
    }
    ClusterSample::new(shape, charges, T::lit(p_t), T::lit(y0), cfg.charge_sign)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(p_t: f64) -> ClusterSample<f64> {
        ClusterSample::zeros(FrameShape::new(2, 3, 4), p_t).unwrap()
    }

    #[test]
    fn label_uses_strict_cutoff() {
        assert_eq!(label(&sample(1.0), 0.5), ClassLabel::High);
        assert_eq!(label(&sample(0.2), 0.5), ClassLabel::Low);
        assert_eq!(label(&sample(0.5), 0.5), ClassLabel::Low);
    }

    #[test]
    fn rejects_negative_charge_and_bad_pt() {
        let shape = FrameShape::new(1, 1, 2);
        assert!(ClusterSample::new(shape, vec![0.0, -1.0], 1.0, 0.0, 1).is_err());
        assert!(ClusterSample::new(shape, vec![0.0, 1.0], 0.0, 0.0, 1).is_err());
        assert!(ClusterSample::new(shape, vec![0.0], 1.0, 0.0, 1).is_err());
        assert!(ClusterSample::new(shape, vec![0.0, 1.0], 1.0, 0.0, 0).is_err());
    }

    #[test]
    fn indexing_is_slice_row_col() {
        let mut s = ClusterSample::zeros(FrameShape::new(2, 3, 4), 1.0f64).unwrap();
        s.set_charge(3, 1, 2, 5.0).unwrap();
        assert_eq!(*s.charges().last().unwrap(), 5.0);
        assert_eq!(s.pixel_series(1, 2), vec![0.0, 0.0, 0.0, 5.0]);
    }

    fn manifest(n: usize) -> DatasetManifest {
        DatasetManifest::new(
            (0..n).map(|i| PathBuf::from(format!("f{i}.csv"))).collect(),
            vec![10; n],
            FrameShape::default(),
        )
        .unwrap()
    }

    #[test]
    fn split_counts() {
        let (tr, te) = split_by_files(&manifest(160), 0.2, 7).unwrap();
        assert_eq!((tr.len(), te.len()), (128, 32));
        let (tr, te) = split_by_files(&manifest(2), 0.5, 7).unwrap();
        assert_eq!((tr.len(), te.len()), (1, 1));
        let (tr, te) = split_by_files(&manifest(3), 0.01, 7).unwrap();
        assert_eq!((tr.len(), te.len()), (2, 1));
        assert!(split_by_files(&manifest(1), 0.5, 7).is_err());
        assert!(split_by_files(&manifest(4), 1.0, 7).is_err());
    }

    #[test]
    fn split_is_deterministic_partition() {
        let m = manifest(20);
        let a = split_by_files(&m, 0.3, 11).unwrap();
        let b = split_by_files(&m, 0.3, 11).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<_> = a.0.file_paths.iter().chain(&a.1.file_paths).cloned().collect();
        all.sort();
        let mut expect = m.file_paths.clone();
        expect.sort();
        assert_eq!(all, expect);
    }

    #[test]
    fn balance_downsamples_majority() {
        let mut v: Vec<_> = (0..90).map(|_| sample(0.3)).collect();
        v.extend((0..10).map(|_| sample(3.0)));
        let b = balance_classes(&v, 0.5, 1).unwrap();
        let high = b.iter().filter(|s| s.p_t > 0.5).count();
        assert_eq!((b.len() - high, high), (10, 10));

        let even: Vec<_> = (0..100).map(|i| sample(if i % 2 == 0 { 0.3 } else { 3.0 })).collect();
        assert_eq!(balance_classes(&even, 0.5, 1).unwrap(), even);

        let one_class: Vec<_> = (0..5).map(|_| sample(0.3)).collect();
        assert!(balance_classes(&one_class, 0.5, 1).is_err());
    }

    #[test]
    fn balance_two_seeds() {
        let pts: Vec<f64> = (0..1100).map(|i| if i < 1000 { 0.3 } else { 2.0 }).collect();
        let a = balanced_indices(&pts, 0.5, 1).unwrap();
        let b = balanced_indices(&pts, 0.5, 2).unwrap();
        for idx in [&a, &b] {
            assert_eq!(idx.iter().filter(|&&i| i < 1000).count(), 100);
            assert_eq!(idx.iter().filter(|&&i| i >= 1000).count(), 100);
        }
        assert_ne!(a, b);
    }

    #[test]
    fn synthetic_single_and_deterministic() {
        let cfg = SyntheticConfig::default();
        assert!(generate_synthetic::<f64>(0, 1, &cfg).is_err());
        let one = generate_synthetic::<f64>(1, 1, &cfg).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].shape(), FrameShape::default());
        assert_eq!(
            generate_synthetic::<f64>(50, 9, &cfg).unwrap(),
            generate_synthetic::<f64>(50, 9, &cfg).unwrap()
        );
        let bad = SyntheticConfig { pt_min: -1.0, ..cfg };
        assert!(generate_synthetic::<f64>(1, 1, &bad).is_err());
    }

    #[test]
    fn synthetic_spectrum_is_falling() {
        let data = generate_synthetic::<f32>(10_000, 3, &SyntheticConfig::default()).unwrap();
        let low = data.iter().filter(|s| s.p_t < 2.0).count() as f64 / data.len() as f64;
        assert!(low >= 0.8, "low-pT fraction {low}");
        assert!(data.iter().all(|s| s.p_t >= 0.2));
    }

    fn rows_with_charge(s: &ClusterSample<f64>) -> usize {
        let sh = s.shape();
        (0..sh.rows)
            .filter(|&r| (0..sh.cols).any(|c| s.charge(sh.slices - 1, r, c) > 800.0))
            .count()
    }

    #[test]
    fn synthetic_length_anticorrelated_with_pt() {
        let cfg = SyntheticConfig {
            noise_sigma: 0.0,
            ..Default::default()
        };
        let mut data = generate_synthetic::<f64>(400, 5, &cfg).unwrap();
        data.sort_by(|a, b| a.p_t.partial_cmp(&b.p_t).unwrap());
        // nominal span strictly decreasing in p_T
        for w in data.windows(2) {
            assert!(cfg.track_rows(w[0].p_t) >= cfg.track_rows(w[1].p_t));
        }
        let lows: Vec<_> = data.iter().filter(|s| s.p_t < 0.3).map(rows_with_charge).collect();
        let highs: Vec<_> = data.iter().filter(|s| s.p_t > 2.0).map(rows_with_charge).collect();
        let mean = |v: &[usize]| v.iter().sum::<usize>() as f64 / v.len() as f64;
        assert!(mean(&lows) > mean(&highs) + 2.0);
    }

    #[test]
    fn synthetic_charge_builds_over_time() {
        let cfg = SyntheticConfig {
            noise_sigma: 0.0,
            ..Default::default()
        };
        for s in generate_synthetic::<f64>(20, 2, &cfg).unwrap() {
            let sh = s.shape();
            for r in 0..sh.rows {
                for c in 0..sh.cols {
                    let series = s.pixel_series(r, c);
                    assert_eq!(series[0], 0.0);
                    assert!(series.windows(2).all(|w| w[1] >= w[0]));
                }
            }
        }
    }
}
