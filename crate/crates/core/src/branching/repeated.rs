//! Repeated independent runs of one branching experiment: the outcome space
//! of sequences and its probabilities.

use crate::error::{Error, Result};
use crate::rng;

use super::{BranchSet, Perception, SinglingPolicy};

/// `runs` independent repetitions of a branch set.
#[derive(Debug, Clone)]
pub struct RepeatedRuns<'a> {
    set: &'a BranchSet,
    runs: u32,
}

impl<'a> RepeatedRuns<'a> {
    pub fn new(set: &'a BranchSet, runs: u32) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::Contract("empty branch set".into()));
        }
        if runs == 0 || runs > 24 {
            return Err(Error::Contract(format!("runs must lie in 1..=24, got {runs}")));
        }
        Ok(RepeatedRuns { set, runs })
    }

    /// Every sequence of branch indices, lexicographic order. Each sequence is
    /// one version of the observer after all runs.
    pub fn sequences(&self) -> Vec<Vec<usize>> {
        let k = self.set.len();
        let total = k.pow(self.runs);
        (0..total)
            .map(|mut flat| {
                let mut seq = vec![0; self.runs as usize];
                for slot in seq.iter_mut().rev() {
                    *slot = flat % k;
                    flat /= k;
                }
                seq
            })
            .collect()
    }

    /// Number of sequences in which branch `branch` occurs exactly `times` times.
    pub fn count_with(&self, branch: usize, times: usize) -> usize {
        self.sequences()
            .iter()
            .filter(|s| s.iter().filter(|&&b| b == branch).count() == times)
            .count()
    }

    /// Born probability of one sequence: `Π |a(sᵢ)|²`.
    pub fn sequence_probability(&self, seq: &[usize]) -> f64 {
        let w = self.set.weights();
        seq.iter().map(|&i| w[i]).product()
    }

    /// Fraction of `trials` sampled sequences equal to `target`.
    pub fn sampled_fraction(&self, target: &[usize], trials: u64, seed: u64) -> Result<f64> {
        if target.len() != self.runs as usize {
            return Err(Error::Contract("target length differs from run count".into()));
        }
        let p = Perception::new(self.set, &SinglingPolicy::Born)?;
        let mut rng = rng::stream(seed, 0);
        let mut hits = 0u64;
        for _ in 0..trials {
            let mut all = true;
            for &t in target {
                // draw every run so the stream advances identically per trial
                let b = p.draw_branch(&mut rng).expect("born selects branches");
                all &= b == t;
            }
            hits += u64::from(all);
        }
        Ok(hits as f64 / trials as f64)
    }
}
