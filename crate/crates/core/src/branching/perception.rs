use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

use super::{BranchLabel, BranchSet};

/// Strictly increasing weight function with `g(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MonotoneWeight {
    /// `g(w) = w^exponent`, `exponent > 0`.
    Power { exponent: f64 },
}

impl MonotoneWeight {
    pub fn power(exponent: f64) -> Result<Self> {
        if !(exponent.is_finite() && exponent > 0.0) {
            return Err(Error::Contract(format!("power-law exponent must be > 0, got {exponent}")));
        }
        Ok(MonotoneWeight::Power { exponent })
    }

    pub fn eval(&self, w: f64) -> f64 {
        match *self {
            MonotoneWeight::Power { exponent } => w.powf(exponent),
        }
    }
}

/// Rule that singles out one version of the observer per run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SinglingPolicy {
    /// Branch `i` with probability `|a(i)|²`.
    Born,
    /// Branch `i` with probability `g(|a(i)|²) / Σ g`.
    NormMonotone(MonotoneWeight),
    /// Each pointer subsystem (each observer's mind) picks its own index from
    /// its marginal, with no coordination between subsystems. The resulting
    /// label need not be one of the branches.
    IndependentMinds,
}

/// Precomputed sampler for one branch set and policy.
#[derive(Debug, Clone)]
pub struct Perception<'a> {
    set: &'a BranchSet,
    kind: Sampler,
}

#[derive(Debug, Clone)]
enum Sampler {
    Branches(Cdf),
    Marginals(Vec<Cdf>),
}

/// Inverse-CDF table; draws resolve ties to the lowest index.
#[derive(Debug, Clone)]
struct Cdf {
    cumulative: Vec<f64>,
}

impl Cdf {
    fn new(weights: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut acc = 0.0;
        let cumulative: Vec<f64> = weights
            .into_iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        if !(acc > 0.0 && acc.is_finite()) {
            return Err(Error::Contract("selection weights have no positive mass".into()));
        }
        Ok(Cdf { cumulative })
    }

    fn draw(&self, u: f64) -> usize {
        let total = *self.cumulative.last().expect("non-empty");
        let target = u * total;
        let idx = self.cumulative.partition_point(|&c| c <= target);
        if idx < self.cumulative.len() {
            return idx;
        }
        // rounding pushed past the end: last index with positive weight
        let mut i = self.cumulative.len() - 1;
        while i > 0 && self.cumulative[i] == self.cumulative[i - 1] {
            i -= 1;
        }
        i
    }
}

impl<'a> Perception<'a> {
    pub fn new(set: &'a BranchSet, policy: &SinglingPolicy) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::Contract("cannot perceive from an empty branch set".into()));
        }
        let kind = match policy {
            SinglingPolicy::Born => Sampler::Branches(Cdf::new(set.weights())?),
            SinglingPolicy::NormMonotone(g) => {
                Sampler::Branches(Cdf::new(set.weights().into_iter().map(|w| g.eval(w)))?)
            }
            SinglingPolicy::IndependentMinds => {
                let marginals = set
                    .pointer()
                    .iter()
                    .enumerate()
                    .map(|(slot, sub)| {
                        let mut m = vec![0.0; sub.dim];
                        for b in set.branches() {
                            m[b.label.indices()[slot]] += b.weight();
                        }
                        Cdf::new(m)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Sampler::Marginals(marginals)
            }
        };
        Ok(Perception { set, kind })
    }

    /// Probability of selecting each branch, when the policy selects branches.
    pub fn branch_probabilities(&self) -> Option<Vec<f64>> {
        match &self.kind {
            Sampler::Branches(cdf) => {
                let total = *cdf.cumulative.last().expect("non-empty");
                let mut prev = 0.0;
                Some(
                    cdf.cumulative
                        .iter()
                        .map(|&c| {
                            let p = (c - prev) / total;
                            prev = c;
                            p
                        })
                        .collect(),
                )
            }
            Sampler::Marginals(_) => None,
        }
    }

    /// Index of the selected branch; `None` under [`SinglingPolicy::IndependentMinds`].
    pub fn draw_branch(&self, rng: &mut impl Rng) -> Option<usize> {
        match &self.kind {
            Sampler::Branches(cdf) => Some(cdf.draw(rng::unit(rng))),
            Sampler::Marginals(_) => None,
        }
    }

    pub fn draw(&self, rng: &mut impl Rng) -> BranchLabel {
        match &self.kind {
            Sampler::Branches(cdf) => self.set.branches()[cdf.draw(rng::unit(rng))].label.clone(),
            Sampler::Marginals(ms) => {
                let indices = ms.iter().map(|m| m.draw(rng::unit(rng))).collect();
                BranchLabel { names: self.set.pointer_names().clone(), indices }
            }
        }
    }

    /// Histogram of `n` branch draws from sub-stream `(seed, stream)`.
    pub fn counts(&self, n: u64, seed: u64, stream: u64) -> Result<Vec<u64>> {
        let Sampler::Branches(cdf) = &self.kind else {
            return Err(Error::Contract(
                "independent-minds draws are not confined to branches".into(),
            ));
        };
        let mut rng = rng::stream(seed, stream);
        let mut counts = vec![0u64; self.set.len()];
        for _ in 0..n {
            counts[cdf.draw(rng::unit(&mut rng))] += 1;
        }
        Ok(counts)
    }
}

/// One perceived label, deterministic in `seed`.
pub fn sample_perception(set: &BranchSet, policy: &SinglingPolicy, seed: u64) -> Result<BranchLabel> {
    let p = Perception::new(set, policy)?;
    Ok(p.draw(&mut rng::stream(seed, 0)))
}
