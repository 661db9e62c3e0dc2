//! Delta spike encoding of pixel charge waveforms.
//!
//! Each pixel's series is scanned forward. A sample above the noise threshold
//! becomes the reference; the first later sample that has risen by at least
//! `delta_x` emits a rising spike, the first that has fallen by at least
//! `delta_x` a falling spike, and the scan continues from the crossing
//! sample. A spike found at index `j` is stamped `t_res * (j + 1)` ps and
//! lands on raster timestep `j`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cluster::{ClusterSample, NATIVE_T_RES_PS};
use crate::error::{Error, Result};
use crate::raster::SpikeRaster;
use crate::reduce::ReductionPattern;
use crate::scalar::Scalar;

/// Time resolutions the pipeline is configured with (ps).
pub const SUPPORTED_T_RES_PS: [u32; 6] = [10, 20, 40, 50, 100, 200];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>", serialize = "T: Scalar + Serialize"))]
pub struct EncoderParams<T> {
    /// Noise-suppression threshold (e-).
    pub x_th: T,
    /// Charge step that triggers a spike (e-).
    pub delta_x: T,
    /// Time resolution of the encoded raster (ps).
    pub t_res_ps: u32,
}

impl<T: Scalar> Default for EncoderParams<T> {
    fn default() -> Self {
        Self {
            x_th: T::lit(800.0),
            delta_x: T::lit(400.0),
            t_res_ps: NATIVE_T_RES_PS,
        }
    }
}

impl<T: Scalar> EncoderParams<T> {
    pub fn with_t_res(t_res_ps: u32) -> Self {
        Self {
            t_res_ps,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_th.is_finite() && self.x_th >= T::zero()) {
            return Err(Error::invalid("x_th must be finite and non-negative"));
        }
        if !(self.delta_x.is_finite() && self.delta_x > T::zero()) {
            return Err(Error::invalid("delta_x must be positive"));
        }
        upsample_factor(self.t_res_ps).map(|_| ())
    }

    /// Raster length for a frame stack of `slices` native slices.
    pub fn timesteps(&self, slices: usize) -> Result<usize> {
        Ok(slices * upsample_factor(self.t_res_ps)?)
    }
}

/// Rising and falling spike times (ps), each strictly increasing.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SpikeTrainPair {
    pub t_plus: Vec<u32>,
    pub t_minus: Vec<u32>,
}

impl SpikeTrainPair {
    pub fn len(&self) -> usize {
        self.t_plus.len() + self.t_minus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn upsample_factor(target_res_ps: u32) -> Result<usize> {
    if target_res_ps == 0 || !NATIVE_T_RES_PS.is_multiple_of(target_res_ps) {
        return Err(Error::invalid(format!(
            "time resolution {target_res_ps} ps does not divide {NATIVE_T_RES_PS} ps"
        )));
    }
    Ok((NATIVE_T_RES_PS / target_res_ps) as usize)
}

/// Linearly interpolates a native-resolution series onto `target_res_ps`.
///
/// Output index `i * f` holds input `i` (with `f = 200 / target_res_ps`).
/// Points after the last input sample hold its value.
pub fn upsample<T: Scalar>(series: &[T], target_res_ps: u32) -> Result<Vec<T>> {
    let f = upsample_factor(target_res_ps)?;
    if f == 1 {
        return Ok(series.to_vec());
    }
    let ft = T::from_usize(f).expect("small factor");
    let mut out = Vec::with_capacity(series.len() * f);
    for (i, &x) in series.iter().enumerate() {
        let next = series.get(i + 1).copied().unwrap_or(x);
        let step = next - x;
        for j in 0..f {
            let frac = T::from_usize(j).expect("small index") / ft;
            out.push(x + step * frac);
        }
    }
    Ok(out)
}

/// Encodes one pixel series already sampled at `params.t_res_ps`.
pub fn encode_pixel<T: Scalar>(series: &[T], params: &EncoderParams<T>) -> SpikeTrainPair {
    let mut trains = SpikeTrainPair::default();
    scan_edges(series, params.x_th, params.delta_x, |idx, rising| {
        let t = params.t_res_ps * (idx as u32 + 1);
        if rising {
            trains.t_plus.push(t);
        } else {
            trains.t_minus.push(t);
        }
    });
    trains
}

/// Core scan; calls `emit(index, rising)` for every crossing.
fn scan_edges<T: Scalar>(x: &[T], x_th: T, delta_x: T, mut emit: impl FnMut(usize, bool)) {
    let n = x.len();
    let mut k = 0;
    while k < n {
        if x[k] <= x_th {
            k += 1;
            continue;
        }
        let rise = x[k] + delta_x;
        let fall = x[k] - delta_x;
        let hit = (k + 1..n).find_map(|j| {
            if x[j] >= rise {
                Some((j, true))
            } else if x[j] <= fall {
                Some((j, false))
            } else {
                None
            }
        });
        match hit {
            Some((j, rising)) => {
                emit(j, rising);
                k = j;
            }
            None => break,
        }
    }
}

/// Per-pixel raster: two channels per pixel in row-major pixel order.
pub fn pixel_rasters<T: Scalar>(sample: &ClusterSample<T>, params: &EncoderParams<T>) -> Result<SpikeRaster> {
    params.validate()?;
    let shape = sample.shape();
    let steps = params.timesteps(shape.slices)?;
    let mut raster = SpikeRaster::silent(2 * shape.pixels(), steps);
    for r in 0..shape.rows {
        for c in 0..shape.cols {
            let pixel = r * shape.cols + c;
            encode_series_into(sample, r, c, params, |idx, rising| {
                raster.set(2 * pixel + usize::from(!rising), idx, true);
            })?;
        }
    }
    Ok(raster)
}

fn encode_series_into<T: Scalar>(
    sample: &ClusterSample<T>,
    row: usize,
    col: usize,
    params: &EncoderParams<T>,
    emit: impl FnMut(usize, bool),
) -> Result<()> {
    let series = sample.pixel_series(row, col);
    // Nothing above threshold means no reference sample, so no spikes.
    if series.iter().all(|q| *q <= params.x_th) {
        return Ok(());
    }
    let series = upsample(&series, params.t_res_ps)?;
    scan_edges(&series, params.x_th, params.delta_x, emit);
    Ok(())
}

/// Encodes every pixel and ORs the spikes into the pattern's group channels.
pub fn encode_cluster<T: Scalar>(
    sample: &ClusterSample<T>,
    params: &EncoderParams<T>,
    pattern: &ReductionPattern,
) -> Result<SpikeRaster> {
    params.validate()?;
    let shape = sample.shape();
    if shape.rows != pattern.rows() || shape.cols != pattern.cols() {
        return Err(Error::ShapeMismatch(format!(
            "pattern is {}x{}, frame is {}x{}",
            pattern.rows(),
            pattern.cols(),
            shape.rows,
            shape.cols
        )));
    }
    let steps = params.timesteps(shape.slices)?;
    let mut raster = SpikeRaster::silent(pattern.channel_count(), steps);
    for r in 0..shape.rows {
        for c in 0..shape.cols {
            let g = pattern.group_of(r, c);
            encode_series_into(sample, r, c, params, |idx, rising| {
                raster.set(2 * g + usize::from(!rising), idx, true);
            })?;
        }
    }
    Ok(raster)
}

/// Writes a raster as `channel_index,time_ps` rows.
pub fn write_spike_dump(path: &Path, raster: &SpikeRaster, t_res_ps: u32) -> Result<()> {
    let mut out = String::from("channel_index,time_ps\n");
    for (ch, t) in raster.events() {
        let _ = writeln!(out, "{ch},{}", (t as u32 + 1) * t_res_ps);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::FrameShape;
    use crate::reduce::{build_pattern, PatternKind};

    fn p200() -> EncoderParams<f64> {
        EncoderParams::default()
    }

    #[test]
    fn upsample_identity_and_midpoint() {
        let s = [1.0, 5.0, 2.0];
        assert_eq!(upsample(&s, 200).unwrap(), s.to_vec());
        let up = upsample(&[0.0, 1000.0], 100).unwrap();
        assert_eq!(up.len(), 4);
        assert_eq!(&up[..3], &[0.0, 500.0, 1000.0]);
        assert!(upsample(&s, 30).is_err());
        assert!(upsample(&s, 0).is_err());
    }

    #[test]
    fn upsample_preserves_originals() {
        let s: Vec<f64> = (0..20).map(|i| ((i * 37) % 11) as f64 * 100.0).collect();
        for res in SUPPORTED_T_RES_PS {
            let up = upsample(&s, res).unwrap();
            let f = (200 / res) as usize;
            assert_eq!(up.len(), s.len() * f);
            for (i, x) in s.iter().enumerate() {
                assert_eq!(up[i * f], *x);
            }
        }
    }

    #[test]
    fn below_threshold_is_silent() {
        let s = vec![800.0; 20];
        assert!(encode_pixel(&s, &p200()).is_empty());
        assert!(encode_pixel::<f64>(&[], &p200()).is_empty());
    }

    #[test]
    fn step_from_zero_has_no_reference() {
        // The jump happens before any sample exceeds the threshold, and the
        // plateau never moves by delta_x again.
        let mut s = vec![0.0, 0.0];
        s.extend(std::iter::repeat_n(2000.0, 18));
        assert!(encode_pixel(&s, &p200()).is_empty());
    }

    #[test]
    fn second_step_from_active_plateau() {
        let s = [0.0, 0.0, 2000.0, 2000.0, 2400.0, 2400.0];
        let tr = encode_pixel(&s, &p200());
        assert_eq!(tr.t_plus, vec![1000]);
        assert!(tr.t_minus.is_empty());
    }

    #[test]
    fn ramp_gives_consecutive_spikes() {
        let m = 6;
        let s: Vec<f64> = (0..m).map(|i| 1000.0 + 400.0 * i as f64).collect();
        let tr = encode_pixel(&s, &p200());
        assert_eq!(tr.t_plus, vec![400, 600, 800, 1000, 1200]);
        assert!(tr.t_minus.is_empty());
    }

    #[test]
    fn falling_edge() {
        let s = [3000.0, 2500.0, 2000.0, 1000.0, 0.0];
        let tr = encode_pixel(&s, &p200());
        assert!(tr.t_plus.is_empty());
        // each sample is at least 400 below the previous reference; the last
        // reference (1000) still sits above the threshold
        assert_eq!(tr.t_minus, vec![400, 600, 800, 1000]);
    }

    #[test]
    fn all_zero_frame_is_silent() {
        let s = ClusterSample::zeros(FrameShape::default(), 1.0).unwrap();
        let p = build_pattern(PatternKind::RowStride(13), 13, 21).unwrap();
        let r = encode_cluster(&s, &p200(), &p).unwrap();
        assert_eq!(r.n_timesteps(), 20);
        assert_eq!(r.n_channels(), 26);
        assert_eq!(r.spike_count(), 0);
    }

    #[test]
    fn single_pixel_maps_to_its_group() {
        let mut s = ClusterSample::zeros(FrameShape::default(), 1.0).unwrap();
        for t in 0..20 {
            s.set_charge(t, 4, 9, 1000.0 + 450.0 * t as f64).unwrap();
        }
        let trains = encode_pixel(&s.pixel_series(4, 9), &p200());
        let p = build_pattern(PatternKind::RowStride(13), 13, 21).unwrap();
        let r = encode_cluster(&s, &p200(), &p).unwrap();
        let g = p.group_of(4, 9);
        let times = |ch: usize| -> Vec<u32> {
            r.channel(ch)
                .iter()
                .enumerate()
                .filter(|(_, b)| **b)
                .map(|(t, _)| (t as u32 + 1) * 200)
                .collect()
        };
        assert_eq!(times(2 * g), trains.t_plus);
        assert_eq!(times(2 * g + 1), trains.t_minus);
        assert_eq!(r.spike_count(), trains.len());
    }

    #[test]
    fn pattern_mismatch_errors() {
        let s = ClusterSample::zeros(FrameShape::default(), 1.0).unwrap();
        let p = build_pattern(PatternKind::Full, 5, 7).unwrap();
        assert!(encode_cluster(&s, &p200(), &p).is_err());
    }

    #[test]
    fn upsampled_raster_length() {
        let s = ClusterSample::zeros(FrameShape::default(), 1.0).unwrap();
        let p = build_pattern(PatternKind::Full, 13, 21).unwrap();
        for res in SUPPORTED_T_RES_PS {
            let r = encode_cluster(&s, &EncoderParams::with_t_res(res), &p).unwrap();
            assert_eq!(r.n_timesteps() as u32, 4000 / res);
        }
    }
}
