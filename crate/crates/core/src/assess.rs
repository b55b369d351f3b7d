//! Front quality measures: non-dominated filtering, 2-D hypervolume, the
//! unary hypervolume difference to a known front, hitting-time curves and
//! the Wilcoxon signed-rank test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::model::ObjectiveVector;
use crate::moea::RunTrace;
use crate::zeno::ParetoFront;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AssessError {
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("empty sample")]
    Empty,
    #[error("reference front is empty")]
    EmptyFront,
}

/// Non-dominated subset, duplicates collapsed, ascending makespan.
pub fn nondominated(points: &[ObjectiveVector]) -> Vec<ObjectiveVector> {
    let mut sorted = points.to_vec();
    sorted.sort_unstable();
    let mut out: Vec<ObjectiveVector> = Vec::new();
    for p in sorted {
        if out.last().is_none_or(|last| p.secondary < last.secondary) {
            out.push(p);
        }
    }
    out
}

/// Area dominated by `points` and bounded by `reference`; points not strictly
/// better than the reference in both coordinates contribute nothing.
pub fn hypervolume(points: &[[f64; 2]], reference: [f64; 2]) -> f64 {
    let mut pts: Vec<[f64; 2]> = points
        .iter()
        .copied()
        .filter(|p| p[0] < reference[0] && p[1] < reference[1])
        .collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    // staircase of points with strictly falling second coordinate
    let mut stair: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
    for p in pts {
        if stair.last().is_none_or(|last| p[1] < last[1]) {
            stair.push(p);
        }
    }
    let mut area = 0.0;
    for (i, p) in stair.iter().enumerate() {
        let next_x = stair.get(i + 1).map_or(reference[0], |q| q[0]);
        area += (next_x - p[0]) * (reference[1] - p[1]);
    }
    area
}

/// Scaling of objective vectors onto the unit box of a reference front.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrontScale {
    pub min: [f64; 2],
    pub range: [f64; 2],
}

impl FrontScale {
    /// Bounding box of `front`; a zero range is widened to one.
    pub fn of(front: &[ObjectiveVector]) -> Option<Self> {
        let m = front.iter().map(|p| p.makespan);
        let s = front.iter().map(|p| p.secondary);
        let (mmin, mmax) = (m.clone().min()?, m.max()?);
        let (smin, smax) = (s.clone().min()?, s.max()?);
        let r = |lo: i64, hi: i64| if hi > lo { (hi - lo) as f64 } else { 1.0 };
        Some(FrontScale {
            min: [mmin as f64, smin as f64],
            range: [r(mmin, mmax), r(smin, smax)],
        })
    }

    pub fn apply(&self, v: &ObjectiveVector) -> [f64; 2] {
        [
            (v.makespan as f64 - self.min[0]) / self.range[0],
            (v.secondary as f64 - self.min[1]) / self.range[1],
        ]
    }
}

pub const HV_REFERENCE: [f64; 2] = [1.1, 1.1];

/// HV(front) minus HV(non-dominated approx) after scaling both by the
/// front's bounding box, with reference point (1.1, 1.1).
pub fn unary_hv_diff(approx: &[ObjectiveVector], front: &ParetoFront) -> Result<f64, AssessError> {
    let scale = FrontScale::of(&front.points).ok_or(AssessError::EmptyFront)?;
    let hv = |pts: &[ObjectiveVector]| {
        let scaled: Vec<[f64; 2]> = pts.iter().map(|p| scale.apply(p)).collect();
        hypervolume(&scaled, HV_REFERENCE)
    };
    let nd = nondominated(approx);
    if nd == front.points {
        return Ok(0.0);
    }
    Ok(hv(&front.points) - hv(&nd))
}

/// Empirical CDF of discovery budgets for one front point (or the whole
/// front).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryCurve {
    pub label: String,
    /// Budget at which each run discovered the target, `None` if never.
    pub discoveries: Vec<Option<u64>>,
    /// (budget, fraction of runs) at each budget where the fraction rises.
    pub steps: Vec<(u64, f64)>,
}

impl DiscoveryCurve {
    fn new(label: String, discoveries: Vec<Option<u64>>) -> Self {
        let n = discoveries.len() as f64;
        let mut budgets: Vec<u64> = discoveries.iter().flatten().copied().collect();
        budgets.sort_unstable();
        let mut steps: Vec<(u64, f64)> = Vec::new();
        for (i, &b) in budgets.iter().enumerate() {
            let frac = (i + 1) as f64 / n;
            match steps.last_mut() {
                Some(last) if last.0 == b => last.1 = frac,
                _ => steps.push((b, frac)),
            }
        }
        DiscoveryCurve {
            label,
            discoveries,
            steps,
        }
    }

    /// Fraction of runs that found the target by `budget`.
    pub fn fraction_at(&self, budget: u64) -> f64 {
        self.steps.iter().take_while(|s| s.0 <= budget).last().map_or(0.0, |s| s.1)
    }

    pub fn final_fraction(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingCdf {
    pub points: Vec<DiscoveryCurve>,
    pub whole_front: DiscoveryCurve,
}

/// First budget at which a run's archive held exactly `point`.
pub fn discovery_budget(trace: &RunTrace, point: &ObjectiveVector) -> Option<u64> {
    trace.archive_events.iter().find(|e| e.point == *point).map(|e| e.budget)
}

pub fn hitting_cdf(traces: &[RunTrace], front: &ParetoFront) -> Result<HittingCdf, AssessError> {
    if traces.is_empty() {
        return Err(AssessError::Empty);
    }
    let per_point: Vec<Vec<Option<u64>>> = front
        .points
        .iter()
        .map(|p| traces.iter().map(|t| discovery_budget(t, p)).collect())
        .collect();
    let whole: Vec<Option<u64>> = (0..traces.len())
        .map(|r| per_point.iter().map(|d| d[r]).try_fold(0, |acc, d| d.map(|b| acc.max(b))))
        .collect();
    Ok(HittingCdf {
        points: front
            .points
            .iter()
            .zip(per_point)
            .map(|(p, d)| DiscoveryCurve::new(p.to_string(), d))
            .collect(),
        whole_front: DiscoveryCurve::new("front".into(), whole),
    })
}

/// Two-sided p-value of the Wilcoxon signed-rank test on paired samples.
/// Zero differences are dropped and tied ranks averaged. Up to 20 non-zero
/// pairs the exact permutation distribution of the averaged ranks is used;
/// above that, the normal approximation with tie and continuity correction.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<f64, AssessError> {
    if a.len() != b.len() {
        return Err(AssessError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(AssessError::Empty);
    }
    let mut diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(1.0);
    }
    diffs.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    // doubled average ranks keep everything integral
    let mut ranks2 = vec![0u64; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && diffs[j + 1].abs() == diffs[i].abs() {
            j += 1;
        }
        let r2 = (i + 1 + j + 1) as u64;
        for r in &mut ranks2[i..=j] {
            *r = r2;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let w_plus2: u64 = diffs.iter().zip(&ranks2).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let total2: u64 = ranks2.iter().sum();

    if n <= 20 {
        // counts[s] = number of sign assignments whose doubled W+ equals s
        let mut counts = vec![0u64; total2 as usize + 1];
        counts[0] = 1;
        let mut reach = 0usize;
        for &r in &ranks2 {
            let r = r as usize;
            for s in (0..=reach).rev() {
                if counts[s] > 0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        let all = (1u64 << n) as f64;
        let lower: u64 = counts[..=w_plus2 as usize].iter().sum();
        let upper: u64 = counts[w_plus2 as usize..].iter().sum();
        return Ok((2.0 * lower.min(upper) as f64 / all).min(1.0));
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let w = w_plus2 as f64 / 2.0;
    let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok((2.0 * (1.0 - normal.cdf(z))).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(m: i64, s: i64) -> ObjectiveVector {
        ObjectiveVector::new(m, s)
    }

    #[test]
    fn nondominated_examples() {
        assert_eq!(nondominated(&[v(1, 1)]), vec![v(1, 1)]);
        assert_eq!(nondominated(&[v(1, 2), v(2, 1), v(2, 2)]), vec![v(1, 2), v(2, 1)]);
        assert_eq!(nondominated(&[v(3, 3), v(3, 3)]), vec![v(3, 3)]);
        assert!(nondominated(&[]).is_empty());
    }

    #[test]
    fn hypervolume_examples() {
        assert_eq!(hypervolume(&[[0.0, 0.0]], [1.0, 1.0]), 1.0);
        assert!((hypervolume(&[[0.25, 0.75], [0.75, 0.25]], [1.0, 1.0]) - 0.3125).abs() < 1e-12);
        assert_eq!(hypervolume(&[[1.0, 0.0], [0.5, 2.0]], [1.0, 1.0]), 0.0);
        assert_eq!(hypervolume(&[], [1.0, 1.0]), 0.0);
    }

    #[test]
    fn wilcoxon_small_cases() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(wilcoxon_signed_rank(&a, &a).unwrap(), 1.0);
        assert!(wilcoxon_signed_rank(&a, &a[..2]).is_err());
        assert!(wilcoxon_signed_rank(&[], &[]).is_err());
        // single non-zero difference: both tails are 1/2
        assert_eq!(wilcoxon_signed_rank(&[1.0], &[0.0]).unwrap(), 1.0);
    }
}
