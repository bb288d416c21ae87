//! Two observers reading the same two-outcome system, with their perceptions
//! singled out either independently per observer or by one shared selection.

use crate::error::{Error, Result};
use crate::rng;
use crate::state::Ket;

use super::{decompose, measure_entangle, with_ready_register, Perception, PointerCoupling, SinglingPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MindsMode {
    /// Each observer's selection is drawn from its own marginal.
    Independent,
    /// One selection fixes both observers' perceived branch.
    Correlated,
}

/// Joint perception fractions over the sampled runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointFractions {
    pub f11: f64,
    pub f22: f64,
    pub f_disagree: f64,
}

/// Samples `n` runs of observers A and B perceiving the state
/// `√p1|1⟩ + √(1−p1)|2⟩` after both have read it.
pub fn many_minds_joint(p1: f64, mode: MindsMode, n: u64, seed: u64) -> Result<JointFractions> {
    if !(0.0..=1.0).contains(&p1) {
        return Err(Error::Contract(format!("p1 must lie in [0, 1], got {p1}")));
    }
    if n == 0 {
        return Err(Error::Contract("need at least one sample".into()));
    }
    let system = Ket::real("system", &[p1.sqrt(), (1.0 - p1).sqrt()])?;
    let state = with_ready_register(&system, "observer_a", 2)?;
    let state = with_ready_register(&state, "observer_b", 2)?;
    let state = measure_entangle(&state, &PointerCoupling::record("system", "observer_a"))?;
    let state = measure_entangle(&state, &PointerCoupling::record("system", "observer_b"))?;
    let branches = decompose(&state, &["observer_a", "observer_b"])?;

    let policy = match mode {
        MindsMode::Independent => SinglingPolicy::IndependentMinds,
        MindsMode::Correlated => SinglingPolicy::Born,
    };
    let perception = Perception::new(&branches, &policy)?;
    let mut rng = rng::stream(seed, 0);
    let (mut n11, mut n22, mut nd) = (0u64, 0u64, 0u64);
    for _ in 0..n {
        let label = perception.draw(&mut rng);
        match label.indices() {
            [0, 0] => n11 += 1,
            [1, 1] => n22 += 1,
            _ => nd += 1,
        }
    }
    let total = n as f64;
    Ok(JointFractions {
        f11: n11 as f64 / total,
        f22: n22 as f64 / total,
        f_disagree: nd as f64 / total,
    })
}
