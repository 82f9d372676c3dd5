use std::collections::BTreeMap;

use crate::records::{Metric, TrialRecord};

/// Across-trial summary of one `(metric, t)` cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub metric: Metric,
    pub t: usize,
    pub count: usize,
    pub median: f64,
    pub mean: f64,
    pub q10: f64,
    pub q90: f64,
}

/// Linearly interpolated quantile of sorted data (`h = (m − 1) q`). NaN when empty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        m => {
            let h = (m - 1) as f64 * q.clamp(0.0, 1.0);
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(m - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

/// Median, mean and 10%/90% quantiles of `values`; NaN entries are dropped.
pub fn summarize(values: &[f64]) -> (usize, f64, f64, f64, f64) {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    v.sort_by(f64::total_cmp);
    let mean = if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    };
    (
        v.len(),
        quantile_sorted(&v, 0.5),
        mean,
        quantile_sorted(&v, 0.1),
        quantile_sorted(&v, 0.9),
    )
}

/// Groups records by `(metric, t)`, ordered by metric then `t`.
pub fn aggregate(records: &[TrialRecord]) -> Vec<Summary> {
    let mut groups: BTreeMap<(Metric, usize), Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry((r.metric, r.t)).or_default().push(r.value);
    }
    groups
        .into_iter()
        .map(|((metric, t), vals)| {
            let (count, median, mean, q10, q90) = summarize(&vals);
            Summary {
                metric,
                t,
                count,
                median,
                mean,
                q10,
                q90,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_of_small_samples() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&s, 0.5), 2.5);
        assert!((quantile_sorted(&s, 0.1) - 1.3).abs() < 1e-12);
        assert_eq!(quantile_sorted(&[7.0], 0.9), 7.0);
        assert!(quantile_sorted(&[], 0.5).is_nan());
    }

    #[test]
    fn groups_by_metric_and_t() {
        let recs = [
            TrialRecord::new(0, 1, Metric::Alpha, 1.0),
            TrialRecord::new(1, 1, Metric::Alpha, 3.0),
            TrialRecord::new(0, 2, Metric::Alpha, 5.0),
        ];
        let s = aggregate(&recs);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].count, 2);
        assert_eq!(s[0].median, 2.0);
        assert_eq!(s[1].t, 2);
    }
}
