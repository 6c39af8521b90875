//! Aggregate studies over attribution maps: additivity of masking scores and per-atom
//! agreement between attribution methods.

use std::fmt::Write as _;

use crate::attribution::{AtomScoreMap, Method};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::tensornet::{Head, Network, Target};

/// Pearson correlation coefficient. `None` when the lengths differ, fewer than two
/// points are given or either side has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n != ys.len() || n < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Head scalar of an all-zero input grid.
pub fn empty_grid_score<T: Scalar>(net: &Network<T>, head: Head, target: Target) -> Result<T> {
    let n = net.spec().input_shape().len();
    Ok(net.forward_values(&vec![T::zero(); n])?.head_scalar(head, target))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdditivityRecord {
    pub complex: String,
    pub head: Head,
    pub mode: Method,
    /// Sum of the per-atom masking scores.
    pub score_sum: f64,
    /// Head scalar of the full complex.
    pub total: f64,
    /// `total` minus the head scalar of an empty grid.
    pub total_above_empty: f64,
}

pub fn additivity_record<T: Scalar>(complex: &str, map: &AtomScoreMap<T>, empty_score: T) -> AdditivityRecord {
    AdditivityRecord {
        complex: complex.to_string(),
        head: map.head,
        mode: map.method,
        score_sum: map.sum().as_f64(),
        total: map.baseline_score.as_f64(),
        total_above_empty: (map.baseline_score - empty_score).as_f64(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdditivitySummary {
    pub records: Vec<AdditivityRecord>,
    /// Correlation of score sums with totals.
    pub r_total: Option<f64>,
    /// Correlation of score sums with totals above the empty-grid score.
    pub r_above_empty: Option<f64>,
}

pub fn additivity(records: Vec<AdditivityRecord>) -> AdditivitySummary {
    let sums: Vec<f64> = records.iter().map(|r| r.score_sum).collect();
    let totals: Vec<f64> = records.iter().map(|r| r.total).collect();
    let above: Vec<f64> = records.iter().map(|r| r.total_above_empty).collect();
    AdditivitySummary {
        r_total: pearson(&sums, &totals),
        r_above_empty: pearson(&sums, &above),
        records,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRecord {
    pub complex: String,
    pub head: Head,
    pub methods: (Method, Method),
    /// Atoms scored by both maps.
    pub atoms: usize,
    pub r: Option<f64>,
}

impl CorrelationRecord {
    pub fn method_pair(&self) -> String {
        format!("{}~{}", self.methods.0.name(), self.methods.1.name())
    }
}

/// Correlation over the atoms present in both maps, in `a`'s order.
pub fn method_correlation<T: Scalar>(complex: &str, a: &AtomScoreMap<T>, b: &AtomScoreMap<T>) -> CorrelationRecord {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in &a.scores {
        if let Some(y) = b.get(s.atom) {
            xs.push(s.score.as_f64());
            ys.push(y.as_f64());
        }
    }
    CorrelationRecord {
        complex: complex.to_string(),
        head: a.head,
        methods: (a.method, b.method),
        atoms: xs.len(),
        r: pearson(&xs, &ys),
    }
}

pub const HISTOGRAM_BINS: usize = 20;

/// Counts of defined correlations in 20 bins of width 0.1 over `[-1, 1]`. Bins include
/// their left edge; `r = 1` falls in the last bin.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationHistogram {
    pub counts: [usize; HISTOGRAM_BINS],
    pub undefined: usize,
}

impl CorrelationHistogram {
    pub fn bin_edges(bin: usize) -> (f64, f64) {
        let lo = -1.0 + 0.1 * bin as f64;
        (lo, lo + 0.1)
    }

    pub fn bin_of(r: f64) -> usize {
        let k = (r + 1.0) * 10.0;
        // Values within rounding noise of an edge belong to the bin that edge opens.
        let k = if (k - k.round()).abs() < 1e-9 { k.round() } else { k.floor() };
        (k.max(0.0) as usize).min(HISTOGRAM_BINS - 1)
    }
}

pub fn correlation_histogram(records: &[CorrelationRecord]) -> CorrelationHistogram {
    let mut h = CorrelationHistogram {
        counts: [0; HISTOGRAM_BINS],
        undefined: 0,
    };
    for rec in records {
        match rec.r {
            Some(r) => h.counts[CorrelationHistogram::bin_of(r)] += 1,
            None => h.undefined += 1,
        }
    }
    h
}

fn header(out: &mut String, comments: &[String]) {
    for c in comments {
        writeln!(out, "# {c}").unwrap();
    }
}

fn opt(r: Option<f64>) -> String {
    r.map_or_else(|| "undefined".to_string(), |r| format!("{r:.9}"))
}

pub fn additivity_csv(summary: &AdditivitySummary, comments: &[String]) -> String {
    let mut out = String::new();
    header(&mut out, comments);
    writeln!(out, "# r_total {}", opt(summary.r_total)).unwrap();
    writeln!(out, "# r_above_empty {}", opt(summary.r_above_empty)).unwrap();
    out.push_str("complex,head,mode,score_sum,total,total_above_empty\n");
    for r in &summary.records {
        writeln!(
            out,
            "{},{},{},{:.12e},{:.12e},{:.12e}",
            r.complex,
            r.head.name(),
            r.mode.name(),
            r.score_sum,
            r.total,
            r.total_above_empty
        )
        .unwrap();
    }
    out
}

pub fn correlation_csv(records: &[CorrelationRecord], comments: &[String]) -> String {
    let mut out = String::new();
    header(&mut out, comments);
    out.push_str("complex,head,method_pair,atoms,r\n");
    for r in records {
        writeln!(out, "{},{},{},{},{}", r.complex, r.head.name(), r.method_pair(), r.atoms, opt(r.r)).unwrap();
    }
    out
}

pub fn histogram_csv(h: &CorrelationHistogram, comments: &[String]) -> String {
    let mut out = String::new();
    header(&mut out, comments);
    writeln!(out, "# undefined {}", h.undefined).unwrap();
    out.push_str("bin_lo,bin_hi,count\n");
    for (bin, count) in h.counts.iter().enumerate() {
        let (lo, hi) = CorrelationHistogram::bin_edges(bin);
        writeln!(out, "{lo:.1},{hi:.1},{count}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::AtomScore;

    fn map(method: Method, scores: &[f64]) -> AtomScoreMap<f64> {
        AtomScoreMap::new(
            method,
            Head::Pose,
            2.0,
            scores
                .iter()
                .enumerate()
                .map(|(atom, &score)| AtomScore { atom, score, vector: None })
                .collect(),
        )
    }

    #[test]
    fn pearson_examples() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(pearson(&[1.0, 2.0], &[5.0, 5.0]), None);
        assert_eq!(pearson(&[1.0], &[1.0]), None);
        assert_eq!(pearson(&[1.0, 2.0], &[1.0]), None);
    }

    #[test]
    fn correlation_self_and_negation() {
        let a = map(Method::Clrp, &[0.1, -0.4, 0.7]);
        let b = map(Method::Masking, &[-0.1, 0.4, -0.7]);
        assert!((method_correlation("x", &a, &a).r.unwrap() - 1.0).abs() < 1e-12);
        assert!((method_correlation("x", &a, &b).r.unwrap() + 1.0).abs() < 1e-12);
        let c = map(Method::Gradient, &[0.3, 0.3, 0.3]);
        let rec = method_correlation("x", &a, &c);
        assert_eq!(rec.r, None);
        let h = correlation_histogram(&[rec, method_correlation("x", &a, &a)]);
        assert_eq!(h.undefined, 1);
        assert_eq!(h.counts[19], 1);
    }

    #[test]
    fn histogram_edges_are_inclusive_left() {
        assert_eq!(CorrelationHistogram::bin_of(-1.0), 0);
        assert_eq!(CorrelationHistogram::bin_of(0.0), 10);
        assert_eq!(CorrelationHistogram::bin_of(-0.05), 9);
        assert_eq!(CorrelationHistogram::bin_of(1.0), 19);
        assert_eq!(CorrelationHistogram::bin_of(-0.9), 1);
    }

    #[test]
    fn empty_map_sums_to_zero() {
        let rec = additivity_record("x", &map(Method::AtomMasking, &[]), 0.5);
        assert_eq!(rec.score_sum, 0.0);
        assert_eq!(rec.total_above_empty, 1.5);
    }
}
