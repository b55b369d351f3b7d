//! Indicator-based environmental selection with the hypervolume-difference
//! indicator.

use thiserror::Error;

use crate::model::ObjectiveVector;

pub const DEFAULT_KAPPA: f64 = 0.05;
/// Reference point in the population-scaled objective space.
pub const IBEA_REFERENCE: [f64; 2] = [2.0, 2.0];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot keep {out} of {size} individuals")]
pub struct SelectError {
    pub out: usize,
    pub size: usize,
}

pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    a.dominates(b)
}

/// Scales each objective to [0, 1] over the given points; a constant
/// objective maps to 0.
pub fn scale_population(points: &[ObjectiveVector]) -> Vec<[f64; 2]> {
    let range = |f: fn(&ObjectiveVector) -> i64| {
        let lo = points.iter().map(f).min().unwrap_or(0);
        let hi = points.iter().map(f).max().unwrap_or(0);
        (lo as f64, (hi - lo) as f64)
    };
    let (m0, mr) = range(|v| v.makespan);
    let (s0, sr) = range(|v| v.secondary);
    let norm = |v: f64, lo: f64, r: f64| if r > 0.0 { (v - lo) / r } else { 0.0 };
    points
        .iter()
        .map(|v| [norm(v.makespan as f64, m0, mr), norm(v.secondary as f64, s0, sr)])
        .collect()
}

/// Area dominated by `y` (up to the reference) that `x` does not dominate.
pub fn hv_indicator(x: [f64; 2], y: [f64; 2], reference: [f64; 2]) -> f64 {
    let area = |a: [f64; 2]| (reference[0] - a[0]).max(0.0) * (reference[1] - a[1]).max(0.0);
    area(y) - area([x[0].max(y[0]), x[1].max(y[1])])
}

/// Outcome of a selection: kept indices in ascending order, each with its
/// final fitness (higher is better).
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub kept: Vec<usize>,
    pub fitness: Vec<f64>,
}

/// Repeatedly removes the individual of lowest fitness
/// `F(x) = Σ_{y≠x} −exp(−I(y,x)/(c·κ))`, with `c` the largest indicator
/// magnitude, until `out` remain. Ties remove the lowest index. With
/// `preserve_extremes`, an individual holding the best value on either
/// objective is only removed once no other candidate remains.
pub fn ibea_select(
    points: &[ObjectiveVector],
    kappa: f64,
    out: usize,
    preserve_extremes: bool,
) -> Result<Selection, SelectError> {
    let n = points.len();
    if out > n {
        return Err(SelectError { out, size: n });
    }
    let scaled = scale_population(points);
    let mut ind = vec![0.0; n * n];
    let mut c: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = hv_indicator(scaled[i], scaled[j], IBEA_REFERENCE);
                ind[i * n + j] = v;
                c = c.max(v.abs());
            }
        }
    }
    // identical points give an all-zero matrix; any positive scale works
    let scale = if c > 0.0 { c * kappa } else { kappa };
    let contrib = |y: usize, x: usize| -(-ind[y * n + x] / scale).exp();
    let mut fitness: Vec<f64> = (0..n)
        .map(|x| (0..n).filter(|&y| y != x).map(|y| contrib(y, x)).sum())
        .collect();

    let mut alive = vec![true; n];
    let protected = |alive: &[bool]| {
        let mut prot = vec![false; n];
        if preserve_extremes {
            let best = |key: fn(&ObjectiveVector) -> (i64, i64)| {
                (0..n).filter(|&i| alive[i]).min_by_key(|&i| key(&points[i]))
            };
            if let Some(i) = best(|v| (v.makespan, v.secondary)) {
                prot[i] = true;
            }
            if let Some(i) = best(|v| (v.secondary, v.makespan)) {
                prot[i] = true;
            }
        }
        prot
    };
    for _ in out..n {
        let prot = protected(&alive);
        let pick = |allow_protected: bool| {
            (0..n)
                .filter(|&i| alive[i] && (allow_protected || !prot[i]))
                .fold(None, |best: Option<usize>, i| match best {
                    Some(b) if fitness[b] <= fitness[i] => Some(b),
                    _ => Some(i),
                })
        };
        let worst = pick(false).or_else(|| pick(true)).expect("some individual is alive");
        alive[worst] = false;
        for x in (0..n).filter(|&x| alive[x]) {
            fitness[x] -= contrib(worst, x);
        }
    }
    let kept: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
    let fitness = kept.iter().map(|&i| fitness[i]).collect();
    Ok(Selection { kept, fitness })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ov(m: i64, s: i64) -> ObjectiveVector {
        ObjectiveVector::new(m, s)
    }

    #[test]
    fn keeps_everything_when_asked() {
        let pts = [ov(1, 5), ov(2, 3), ov(4, 1)];
        assert_eq!(ibea_select(&pts, DEFAULT_KAPPA, 3, false).unwrap().kept, vec![0, 1, 2]);
    }

    #[test]
    fn dominated_point_goes_first() {
        let pts = [ov(1, 1), ov(0, 0)];
        assert_eq!(ibea_select(&pts, DEFAULT_KAPPA, 1, false).unwrap().kept, vec![1]);
    }

    #[test]
    fn oversized_request_is_an_error() {
        assert!(ibea_select(&[ov(0, 0)], DEFAULT_KAPPA, 2, false).is_err());
    }

    #[test]
    fn indicator_of_dominated_pair() {
        // y dominates x: everything x dominates y dominates too
        assert_eq!(hv_indicator([0.0, 0.0], [1.0, 1.0], [2.0, 2.0]), 0.0);
        assert_eq!(hv_indicator([1.0, 1.0], [0.0, 0.0], [2.0, 2.0]), 3.0);
    }
}
