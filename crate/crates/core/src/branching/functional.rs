//! Consistency checks for candidate probability laws `p(i) = (|a(i)|²)^k`.
//!
//! Two probes: the candidates must sum to one, and refining one branch into
//! two equal orthogonal sub-branches (a unitary on a fresh pointer qubit that
//! touches nothing else) must leave every other branch's renormalized
//! probability unchanged. Only `k = 1` survives both.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{Amplitude, LinearMap, SpaceShape};

use super::{decompose, with_ready_register, BranchSet};

/// Tolerance for both probes.
pub const FUNCTIONAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionalVerdict {
    Consistent,
    NormalizationFailure,
    RefinementFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalCheck {
    pub exponent: f64,
    /// `Σ (|a(i)|²)^k` before any renormalization.
    pub normalization_sum: f64,
    pub normalization_ok: bool,
    /// Largest change of an untouched branch's renormalized probability over
    /// all single-branch refinements.
    pub max_refinement_shift: f64,
    pub refinement_ok: bool,
}

impl FunctionalCheck {
    /// The first failing probe, normalization before refinement.
    pub fn verdict(&self) -> FunctionalVerdict {
        if !self.normalization_ok {
            FunctionalVerdict::NormalizationFailure
        } else if !self.refinement_ok {
            FunctionalVerdict::RefinementFailure
        } else {
            FunctionalVerdict::Consistent
        }
    }
}

fn renormalized(weights: &[f64], k: f64) -> Vec<f64> {
    let p: Vec<f64> = weights.iter().map(|w| w.powf(k)).collect();
    let total: f64 = p.iter().sum();
    p.into_iter().map(|x| x / total).collect()
}

fn refine_register_name(bs: &BranchSet) -> String {
    let taken = |n: &str| {
        bs.pointer().iter().any(|s| s.name == n) || bs.relative_shape().position(n).is_some()
    };
    let mut name = String::from("refine");
    while taken(&name) {
        name.push('_');
    }
    name
}

pub fn check_probability_functional(k: f64, bs: &BranchSet) -> Result<FunctionalCheck> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::Contract(format!("exponent must be positive, got {k}")));
    }
    if bs.is_empty() {
        return Err(Error::Contract("empty branch set".into()));
    }
    let weights = bs.weights();
    let normalization_sum: f64 = weights.iter().map(|w| w.powf(k)).sum();
    let before = renormalized(&weights, k);

    let state = bs.reconstruct()?;
    let refine = refine_register_name(bs);
    let extended = with_ready_register(&state, &refine, 2)?;
    let mut targets: Vec<&str> = bs.pointer().iter().map(|s| s.name.as_str()).collect();
    targets.push(&refine);
    let local_shape = extended.shape().select(&targets)?;
    let pointer_shape = SpaceShape::new(bs.pointer().iter().map(|s| (s.name.clone(), s.dim)))?;

    let mut max_shift: f64 = 0.0;
    for branch in bs.branches() {
        // Hadamard on the refine qubit, controlled on this branch's label.
        let sel = pointer_shape.flat_index(branch.label.indices())?;
        let d = local_shape.total_dim();
        let mut m = vec![Complex64::new(0.0, 0.0); d * d];
        for p in 0..d / 2 {
            let (r0, r1) = (2 * p, 2 * p + 1);
            if p == sel {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                m[r0 * d + r0] = h;
                m[r0 * d + r1] = h;
                m[r1 * d + r0] = h;
                m[r1 * d + r1] = -h;
            } else {
                m[r0 * d + r0] = Amplitude::new(1.0, 0.0);
                m[r1 * d + r1] = Amplitude::new(1.0, 0.0);
            }
        }
        let u = LinearMap::square(local_shape.clone(), m, true)?;
        let refined_state = u.apply_local(&targets, &extended)?.ket;
        let refined = decompose(&refined_state, &targets)?;
        let after = renormalized(&refined.weights(), k);

        for (b, p_after) in refined.branches().iter().zip(&after) {
            let (orig, fine) = b.label.indices().split_at(targets.len() - 1);
            if orig == branch.label.indices() {
                continue;
            }
            debug_assert_eq!(fine, &[0]);
            let i = bs
                .branches()
                .iter()
                .position(|x| x.label.indices() == orig)
                .expect("untouched branch survives refinement");
            max_shift = max_shift.max((p_after - before[i]).abs());
        }
    }

    Ok(FunctionalCheck {
        exponent: k,
        normalization_sum,
        normalization_ok: (normalization_sum - 1.0).abs() <= FUNCTIONAL_TOL,
        max_refinement_shift: max_shift,
        refinement_ok: max_shift <= FUNCTIONAL_TOL,
    })
}
