//! Ladder epochs of a real-valued walk.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderKind {
    /// λ(k+1) = inf{n > λ(k) : S_n ≥ S_λ(k)}
    AscendingNonstrict,
    /// 𝔱(k+1) = inf{n > 𝔱(k) : S_n > S_𝔱(k)}
    AscendingStrict,
    /// inf{n > λ(k) : S_n ≤ S_λ(k)}
    DescendingNonstrict,
    /// inf{n > λ(k) : S_n < S_λ(k)}
    DescendingStrict,
}

impl LadderKind {
    #[inline]
    fn admits(self, candidate: f64, record: f64) -> bool {
        match self {
            LadderKind::AscendingNonstrict => candidate >= record,
            LadderKind::AscendingStrict => candidate > record,
            LadderKind::DescendingNonstrict => candidate <= record,
            LadderKind::DescendingStrict => candidate < record,
        }
    }
}

/// Ladder epochs (excluding λ(0) = 0) and the walk's values there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderDecomposition {
    pub kind: LadderKind,
    pub epochs: Vec<u64>,
    pub ladder_values: Vec<f64>,
}

/// All ladder epochs of `series` (indexed from 0, with λ(0) = 0).
pub fn ladder_epochs(series: &[f64], kind: LadderKind) -> LadderDecomposition {
    let mut epochs = Vec::new();
    let mut ladder_values = Vec::new();
    if let Some(&first) = series.first() {
        let mut record = first;
        for (n, &v) in series.iter().enumerate().skip(1) {
            if kind.admits(v, record) {
                record = v;
                epochs.push(n as u64);
                ladder_values.push(v);
            }
        }
    }
    LadderDecomposition {
        kind,
        epochs,
        ladder_values,
    }
}

/// Incremental ladder tracking for streamed walks.
#[derive(Debug, Clone)]
pub(crate) struct LadderTracker {
    kind: LadderKind,
    record: f64,
}

impl LadderTracker {
    pub(crate) fn new(kind: LadderKind, start: f64) -> Self {
        LadderTracker { kind, record: start }
    }

    #[inline]
    pub(crate) fn observe(&mut self, v: f64) -> bool {
        if self.kind.admits(v, self.record) {
            self.record = v;
            true
        } else {
            false
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(series: &[f64], kind: LadderKind) -> Vec<u64> {
        // recompute each epoch from scratch: the first later index that
        // beats the value at the previous epoch
        let mut out = Vec::new();
        let mut last = 0usize;
        loop {
            let next = (last + 1..series.len()).find(|&n| match kind {
                LadderKind::AscendingNonstrict => series[n] >= series[last],
                LadderKind::AscendingStrict => series[n] > series[last],
                LadderKind::DescendingNonstrict => series[n] <= series[last],
                LadderKind::DescendingStrict => series[n] < series[last],
            });
            match next {
                Some(n) => {
                    out.push(n as u64);
                    last = n;
                }
                None => return out,
            }
        }
    }

    #[test]
    fn hand_examples() {
        let d = ladder_epochs(&[0.0, 1.0, 0.0, 2.0], LadderKind::AscendingNonstrict);
        assert_eq!(d.epochs, vec![1, 3]);
        assert_eq!(d.ladder_values, vec![1.0, 2.0]);
        let d = ladder_epochs(&[0.0, -1.0, -2.0, 1.0], LadderKind::AscendingStrict);
        assert_eq!(d.epochs[0], 3);
        let s = [0.0, -1.0, 0.0, -1.0];
        let d = ladder_epochs(&s, LadderKind::DescendingNonstrict);
        assert_eq!(d.epochs, brute(&s, LadderKind::DescendingNonstrict));
        assert_eq!(d.epochs, vec![1, 3]);
        assert!(ladder_epochs(&[0.0, -1.0, -3.0], LadderKind::AscendingStrict).epochs.is_empty());
    }

    #[test]
    fn agrees_with_brute_force_on_integer_walks() {
        let kinds = [
            LadderKind::AscendingNonstrict,
            LadderKind::AscendingStrict,
            LadderKind::DescendingNonstrict,
            LadderKind::DescendingStrict,
        ];
        let mut x: u64 = 12345;
        for _ in 0..200 {
            let mut s = vec![0.0];
            for _ in 0..40 {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let step = ((x >> 33) % 3) as f64 - 1.0;
                s.push(s.last().unwrap() + step);
            }
            for k in kinds {
                let d = ladder_epochs(&s, k);
                assert_eq!(d.epochs, brute(&s, k));
                assert!(d.epochs.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }
}
