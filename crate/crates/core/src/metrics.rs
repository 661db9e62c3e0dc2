//! Classification and trigger figures of merit.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cluster::{label_pt, ClassLabel};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// p_T (GeV) above which a track counts as signal when computing efficiency.
pub const DEFAULT_PT_REFERENCE: f64 = 2.0;

/// Denominator used for the data-reduction fraction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionNorm {
    /// All samples.
    #[default]
    All,
    /// Only samples below the reference p_T.
    LowOnly,
}

impl fmt::Display for ReductionNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReductionNorm::All => "all",
            ReductionNorm::LowOnly => "low_only",
        })
    }
}

impl FromStr for ReductionNorm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Self::All),
            "low_only" | "low-only" => Ok(Self::LowOnly),
            _ => Err(Error::invalid(format!("unknown reduction normalization '{s}'"))),
        }
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::invalid(format!("length mismatch: {a} vs {b}")));
    }
    if a == 0 {
        return Err(Error::invalid("empty input"));
    }
    Ok(())
}

/// Fraction of samples with `p_t > pt_ref` that are predicted high.
pub fn signal_efficiency<T: Scalar>(predictions: &[ClassLabel], pts: &[T], pt_ref: T) -> Result<f64> {
    check_lengths(predictions.len(), pts.len())?;
    let (mut hit, mut total) = (0usize, 0usize);
    for (p, &pt) in predictions.iter().zip(pts) {
        if pt > pt_ref {
            total += 1;
            hit += usize::from(*p == ClassLabel::High);
        }
    }
    if total == 0 {
        return Err(Error::invalid(format!("no samples above p_T reference {pt_ref}")));
    }
    Ok(hit as f64 / total as f64)
}

/// Fraction of samples safely dropped: predicted low with `p_t < pt_ref`.
pub fn data_reduction<T: Scalar>(predictions: &[ClassLabel], pts: &[T], pt_ref: T, norm: ReductionNorm) -> Result<f64> {
    check_lengths(predictions.len(), pts.len())?;
    let (mut hit, mut low) = (0usize, 0usize);
    for (p, &pt) in predictions.iter().zip(pts) {
        if pt < pt_ref {
            low += 1;
            hit += usize::from(*p == ClassLabel::Low);
        }
    }
    let denom = match norm {
        ReductionNorm::All => predictions.len(),
        ReductionNorm::LowOnly => low,
    };
    if denom == 0 {
        return Ok(0.0);
    }
    Ok(hit as f64 / denom as f64)
}

/// Confusion counts for the high class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_labels(predictions: &[ClassLabel], truths: &[ClassLabel]) -> Self {
        let mut c = Self::default();
        for (p, t) in predictions.iter().zip(truths) {
            match (p, t) {
                (ClassLabel::High, ClassLabel::High) => c.tp += 1,
                (ClassLabel::High, ClassLabel::Low) => c.fp += 1,
                (ClassLabel::Low, ClassLabel::Low) => c.tn += 1,
                (ClassLabel::Low, ClassLabel::High) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            0.0
        } else {
            2.0 * self.tp as f64 / denom as f64
        }
    }

    /// Mean of the per-class recalls; classes with no samples are skipped.
    pub fn balanced_accuracy(&self) -> f64 {
        let mut recalls = Vec::with_capacity(2);
        if self.tp + self.fn_ > 0 {
            recalls.push(self.tp as f64 / (self.tp + self.fn_) as f64);
        }
        if self.tn + self.fp > 0 {
            recalls.push(self.tn as f64 / (self.tn + self.fp) as f64);
        }
        if recalls.is_empty() {
            0.0
        } else {
            recalls.iter().sum::<f64>() / recalls.len() as f64
        }
    }
}

/// F1 of the high-p_T class; 0 when precision and recall are both 0.
pub fn f1_score(predictions: &[ClassLabel], truths: &[ClassLabel]) -> Result<f64> {
    check_lengths(predictions.len(), truths.len())?;
    Ok(Confusion::from_labels(predictions, truths).f1())
}

pub fn balanced_accuracy(predictions: &[ClassLabel], truths: &[ClassLabel]) -> Result<f64> {
    check_lengths(predictions.len(), truths.len())?;
    Ok(Confusion::from_labels(predictions, truths).balanced_accuracy())
}

/// Predicted-high fraction per bin of true p_T.
#[derive(Clone, Debug, PartialEq)]
pub struct TurnOnCurve {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Zero for empty bins; see `populated`.
    pub efficiency: Vec<f64>,
    pub populated: Vec<bool>,
}

impl TurnOnCurve {
    /// `bin_low,bin_high,count,efficiency` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_low,bin_high,count,efficiency\n");
        for i in 0..self.counts.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                self.bin_edges[i],
                self.bin_edges[i + 1],
                self.counts[i],
                self.efficiency[i]
            );
        }
        out
    }
}

/// Bins are half-open `[lo, hi)` except the last, which includes its upper
/// edge. Samples outside the edges are dropped.
pub fn turn_on_curve<T: Scalar>(predictions: &[ClassLabel], pts: &[T], bin_edges: &[f64]) -> Result<TurnOnCurve> {
    if bin_edges.len() < 2 {
        return Err(Error::invalid("turn-on curve needs at least 2 bin edges"));
    }
    if bin_edges
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
    {
        return Err(Error::invalid("bin edges must be strictly increasing"));
    }
    if predictions.len() != pts.len() {
        return Err(Error::invalid("length mismatch"));
    }
    let nbins = bin_edges.len() - 1;
    let mut counts = vec![0usize; nbins];
    let mut high = vec![0usize; nbins];
    let last = bin_edges[nbins];
    for (p, pt) in predictions.iter().zip(pts) {
        let x = pt.as_f64();
        if x < bin_edges[0] || x > last {
            continue;
        }
        // first edge strictly greater than x, minus one
        let bin = bin_edges.partition_point(|e| *e <= x).saturating_sub(1).min(nbins - 1);
        counts[bin] += 1;
        high[bin] += usize::from(*p == ClassLabel::High);
    }
    let efficiency = counts
        .iter()
        .zip(&high)
        .map(|(&n, &h)| if n == 0 { 0.0 } else { h as f64 / n as f64 })
        .collect();
    Ok(TurnOnCurve {
        bin_edges: bin_edges.to_vec(),
        populated: counts.iter().map(|&n| n > 0).collect(),
        counts,
        efficiency,
    })
}

/// Test-set summary.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub signal_efficiency: f64,
    pub data_reduction: f64,
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub f1: f64,
    pub n_samples: usize,
    pub pt_reference: f64,
    pub pt_cutoff: f64,
    pub normalization: ReductionNorm,
}

impl EvalReport {
    /// Computes all metrics. Truth labels use `pt_cutoff`; efficiency and
    /// reduction use `pt_reference`.
    pub fn compute<T: Scalar>(
        predictions: &[ClassLabel],
        pts: &[T],
        pt_cutoff: T,
        pt_reference: T,
        normalization: ReductionNorm,
    ) -> Result<Self> {
        check_lengths(predictions.len(), pts.len())?;
        let truths: Vec<ClassLabel> = pts.iter().map(|&p| label_pt(p, pt_cutoff)).collect();
        let confusion = Confusion::from_labels(predictions, &truths);
        let correct = confusion.tp + confusion.tn;
        Ok(Self {
            signal_efficiency: signal_efficiency(predictions, pts, pt_reference)?,
            data_reduction: data_reduction(predictions, pts, pt_reference, normalization)?,
            accuracy: correct as f64 / predictions.len() as f64,
            balanced_accuracy: confusion.balanced_accuracy(),
            f1: confusion.f1(),
            n_samples: predictions.len(),
            pt_reference: pt_reference.as_f64(),
            pt_cutoff: pt_cutoff.as_f64(),
            normalization,
        })
    }

    /// Flat `key=value` lines.
    pub fn to_kv_text(&self) -> String {
        format!(
            "signal_efficiency={}\ndata_reduction={}\naccuracy={}\nbalanced_accuracy={}\nf1={}\n\
             n_samples={}\npt_reference={}\npt_cutoff={}\nnormalization={}\n",
            self.signal_efficiency,
            self.data_reduction,
            self.accuracy,
            self.balanced_accuracy,
            self.f1,
            self.n_samples,
            self.pt_reference,
            self.pt_cutoff,
            self.normalization
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ClassLabel::{High as H, Low as L};

    #[test]
    fn efficiency_examples() {
        let pts = [3.0, 4.0, 0.5, 2.5];
        assert_eq!(signal_efficiency(&[H, H, L, H], &pts, 2.0).unwrap(), 1.0);
        assert_eq!(signal_efficiency(&[L, L, L, L], &pts, 2.0).unwrap(), 0.0);
        let pts: Vec<f64> = (0..10).map(|i| 3.0 + i as f64).collect();
        let mut preds = vec![H; 10];
        preds[3] = L;
        assert!((signal_efficiency(&preds, &pts, 2.0).unwrap() - 0.9).abs() < 1e-12);
        assert!(signal_efficiency(&[H], &[1.0], 2.0).is_err());
        assert!(signal_efficiency::<f64>(&[], &[], 2.0).is_err());
    }

    #[test]
    fn reduction_examples() {
        let pts = [0.5, 0.7, 3.0, 4.0];
        assert_eq!(
            data_reduction(&[H, H, H, H], &pts, 2.0, ReductionNorm::All).unwrap(),
            0.0
        );
        assert_eq!(
            data_reduction(&[L, L, H, H], &pts, 2.0, ReductionNorm::All).unwrap(),
            0.5
        );
        assert_eq!(
            data_reduction(&[L, L, H, H], &pts, 2.0, ReductionNorm::LowOnly).unwrap(),
            1.0
        );
        assert!(data_reduction::<f64>(&[], &[], 2.0, ReductionNorm::All).is_err());
    }

    #[test]
    fn f1_examples() {
        assert_eq!(f1_score(&[H, L, H], &[H, L, H]).unwrap(), 1.0);
        assert_eq!(f1_score(&[L, L, L], &[H, L, H]).unwrap(), 0.0);
        let mut p = Vec::new();
        let mut t = Vec::new();
        p.extend([H; 8]);
        t.extend([H; 8]);
        p.extend([H; 2]);
        t.extend([L; 2]);
        p.extend([L; 2]);
        t.extend([H; 2]);
        assert!((f1_score(&p, &t).unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn turn_on_examples() {
        let pts = [0.3, 0.9, 1.5, 2.5, 7.0, 50.0];
        let c = turn_on_curve(&[H; 6], &pts, &[0.0, 1.0, 2.0, 10.0]).unwrap();
        assert_eq!(c.counts, vec![2, 1, 2]);
        assert_eq!(c.efficiency, vec![1.0, 1.0, 1.0]);
        let c = turn_on_curve(&[H, L, L, H, H, L], &pts, &[0.0, 100.0]).unwrap();
        assert_eq!(c.efficiency, vec![0.5]);
        let c = turn_on_curve(&[H, L], &[0.5, 0.6], &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(c.populated, vec![true, false]);
        assert!(turn_on_curve(&[H], &[1.0], &[1.0]).is_err());
        assert!(turn_on_curve(&[H], &[1.0], &[1.0, 1.0]).is_err());
        assert!(c.to_csv().starts_with("bin_low,bin_high,count,efficiency\n0,1,2,0.5\n"));
    }

    #[test]
    fn perfect_classifier_at_reference() {
        let pts = [0.3, 0.8, 1.9, 2.1, 5.0];
        let preds: Vec<_> = pts.iter().map(|&p| label_pt(p, 2.0)).collect();
        let r = EvalReport::compute(&preds, &pts, 2.0, 2.0, ReductionNorm::LowOnly).unwrap();
        assert_eq!(r.signal_efficiency, 1.0);
        assert_eq!(r.data_reduction, 1.0);
        assert_eq!(r.accuracy, 1.0);
        assert!(r.to_kv_text().contains("normalization=low_only\n"));
    }
}
