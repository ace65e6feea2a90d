//! Ranking metrics. Ties are resolved pessimistically: a negative scoring
//! exactly as high as a positive is ranked above it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApMode {
    /// One precision-recall curve over every score of every query.
    #[default]
    Pooled,
    /// Mean of per-query AP (reciprocal rank for a single positive).
    PerEdge,
}

impl ApMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "pooled" => Ok(ApMode::Pooled),
            "per-edge" => Ok(ApMode::PerEdge),
            other => Err(Error::Config(format!("unknown AP mode `{other}`"))),
        }
    }
}

pub fn rank_positive(pos: f64, negs: &[f64]) -> Result<usize> {
    if !pos.is_finite() || negs.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("candidate score".into()));
    }
    Ok(1 + negs.iter().filter(|&&s| s >= pos).count())
}

pub fn mrr(ranks: &[usize]) -> f64 {
    if ranks.is_empty() {
        return 0.0;
    }
    ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / ranks.len() as f64
}

pub fn hit_ratio(ranks: &[usize], n: usize) -> f64 {
    if ranks.is_empty() {
        return 0.0;
    }
    ranks.iter().filter(|&&r| r <= n).count() as f64 / ranks.len() as f64
}

/// Area under the precision-recall curve of `(score, is_positive)` items.
pub fn average_precision(items: &[(f64, bool)]) -> Result<f64> {
    if items.iter().any(|(s, _)| !s.is_finite()) {
        return Err(Error::NonFinite("candidate score".into()));
    }
    let positives = items.iter().filter(|(_, p)| *p).count();
    if positives == 0 {
        return Err(Error::Empty("average precision needs a positive".into()));
    }
    let mut sorted = items.to_vec();
    // descending score, negatives before positives on ties
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut hits = 0usize;
    let mut acc = 0.0;
    for (k, &(_, is_pos)) in sorted.iter().enumerate() {
        if is_pos {
            hits += 1;
            acc += hits as f64 / (k + 1) as f64;
        }
    }
    Ok(acc / positives as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks() {
        assert_eq!(rank_positive(0.9, &[0.1; 99]).unwrap(), 1);
        assert_eq!(rank_positive(0.5, &[0.9, 0.7, 0.1]).unwrap(), 3);
        assert_eq!(rank_positive(0.5, &[0.5]).unwrap(), 2);
        assert!(rank_positive(f64::NAN, &[0.5]).is_err());
    }

    #[test]
    fn reciprocal_rank_and_hits() {
        assert_eq!(mrr(&[1]), 1.0);
        assert_eq!(mrr(&[4]), 0.25);
        assert_eq!(mrr(&[1, 2]), 0.75);
        assert_eq!(hit_ratio(&[5], 10), 1.0);
        assert_eq!(hit_ratio(&[11], 10), 0.0);
        assert_eq!(hit_ratio(&[1, 100], 10), 0.5);
    }

    #[test]
    fn precision_curve() {
        assert_eq!(
            average_precision(&[(0.9, true), (0.5, false), (0.1, false)]).unwrap(),
            1.0
        );
        assert_eq!(
            average_precision(&[(0.9, false), (0.5, true)]).unwrap(),
            0.5
        );
        assert_eq!(
            average_precision(&[(0.5, false), (0.5, true)]).unwrap(),
            0.5
        );
        assert!(average_precision(&[(0.5, false)]).is_err());
    }
}
