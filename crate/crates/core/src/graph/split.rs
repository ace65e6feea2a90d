use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Seq;

pub const DEFAULT_FRACTIONS: [f64; 3] = [0.70, 0.15, 0.15];

/// Chronological train/validation/test boundaries over the event log.
///
/// Training is `[0, train_end)`, validation `[train_end, valid_end)`, test
/// `[valid_end, num_events)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train_end: Seq,
    pub valid_end: Seq,
    pub num_events: Seq,
}

impl DatasetSplit {
    pub fn train(&self) -> std::ops::Range<Seq> {
        0..self.train_end
    }

    pub fn valid(&self) -> std::ops::Range<Seq> {
        self.train_end..self.valid_end
    }

    pub fn test(&self) -> std::ops::Range<Seq> {
        self.valid_end..self.num_events
    }
}

/// Splits `num_events` at `floor(n * cumulative fraction)`.
pub fn chronological_split(num_events: usize, fractions: [f64; 3]) -> Result<DatasetSplit> {
    if num_events == 0 {
        return Err(Error::Empty("cannot split an empty event log".into()));
    }
    if fractions.iter().any(|&f| !(f > 0.0) || !f.is_finite()) {
        return Err(Error::Config(format!(
            "split fractions must be positive: {fractions:?}"
        )));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "split fractions must sum to 1, got {total}"
        )));
    }
    let n = num_events as f64;
    // the slack absorbs representation error such as 0.7 + 0.15 = 0.85000000000000009
    let cut = |f: f64| ((n * f) + 1e-9).floor() as Seq;
    let train_end = cut(fractions[0]);
    let valid_end = cut(fractions[0] + fractions[1]).min(num_events as Seq);
    if train_end == 0 || train_end >= valid_end || valid_end > num_events as Seq {
        return Err(Error::Empty(format!(
            "{num_events} events are too few for split {fractions:?}"
        )));
    }
    Ok(DatasetSplit {
        train_end,
        valid_end,
        num_events: num_events as Seq,
    })
}

/// Parses `"0.70,0.15,0.15"`.
pub fn parse_fractions(s: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Config(format!("bad split `{s}`: {e}")))?;
    match parts.as_slice() {
        [a, b, c] => Ok([*a, *b, *c]),
        _ => Err(Error::Config(format!(
            "split needs three fractions, got `{s}`"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_boundaries() {
        let s = chronological_split(100, DEFAULT_FRACTIONS).unwrap();
        assert_eq!((s.train_end, s.valid_end), (70, 85));
        assert_eq!(s.test(), 85..100);
    }

    #[test]
    fn eight_one_one() {
        let s = chronological_split(10, [0.8, 0.1, 0.1]).unwrap();
        assert_eq!((s.train_end, s.valid_end), (8, 9));
    }

    #[test]
    fn degenerate_inputs() {
        assert!(chronological_split(1, DEFAULT_FRACTIONS).is_err());
        assert!(chronological_split(0, DEFAULT_FRACTIONS).is_err());
        assert!(chronological_split(100, [0.5, 0.5, 0.5]).is_err());
        assert!(chronological_split(100, [1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn partition_covers_log() {
        for n in 3..300 {
            if let Ok(s) = chronological_split(n, DEFAULT_FRACTIONS) {
                let total = s.train().count() + s.valid().count() + s.test().count();
                assert_eq!(total, n);
                assert!(s.train_end < s.valid_end);
            }
        }
    }

    #[test]
    fn parses_fraction_list() {
        assert_eq!(
            parse_fractions("0.70,0.15,0.15").unwrap(),
            [0.7, 0.15, 0.15]
        );
        assert!(parse_fractions("0.5,0.5").is_err());
    }
}
