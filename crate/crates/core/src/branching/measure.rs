use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{Ket, LinearMap, SpaceShape};

use super::PRUNE_MASS;

/// A measurement interaction that copies information from `sources` into a
/// register starting in its ready state `|0⟩`.
///
/// The coupling is the controlled shift `|s⟩|r⟩ ↦ |s⟩|r + shift(s) mod D⟩`,
/// a permutation of the basis and therefore unitary on the whole space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointerCoupling {
    sources: Vec<String>,
    register: String,
    /// One entry per joint basis index of `sources` (row-major).
    shifts: Option<Vec<usize>>,
    flag: Option<usize>,
}

impl PointerCoupling {
    /// Register records the source basis index: `|k⟩|R₀⟩ → |k⟩|R_k⟩`.
    pub fn record(source: impl Into<String>, register: impl Into<String>) -> Self {
        PointerCoupling {
            sources: vec![source.into()],
            register: register.into(),
            shifts: None,
            flag: None,
        }
    }

    /// Register records the joint index of several sources, e.g. an observer
    /// reading three dials at once.
    pub fn joint_record(sources: &[&str], register: impl Into<String>) -> Self {
        PointerCoupling {
            sources: sources.iter().map(|s| s.to_string()).collect(),
            register: register.into(),
            shifts: None,
            flag: None,
        }
    }

    /// A yes/no detector: register goes to `|1⟩` iff the source is in `value`.
    pub fn flag(source: impl Into<String>, value: usize, register: impl Into<String>) -> Self {
        PointerCoupling {
            sources: vec![source.into()],
            register: register.into(),
            shifts: None,
            flag: Some(value),
        }
    }

    /// Arbitrary shift table over the joint source index.
    pub fn custom(sources: &[&str], register: impl Into<String>, shifts: Vec<usize>) -> Self {
        PointerCoupling {
            sources: sources.iter().map(|s| s.to_string()).collect(),
            register: register.into(),
            shifts: Some(shifts),
            flag: None,
        }
    }

    pub fn register(&self) -> &str {
        &self.register
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    /// The local unitary on `(sources…, register)`.
    pub fn local_map(&self, full: &SpaceShape) -> Result<LinearMap> {
        let mut names: Vec<&str> = self.sources.iter().map(String::as_str).collect();
        if names.contains(&self.register.as_str()) {
            return Err(Error::Composition(format!(
                "register '{}' cannot measure itself",
                self.register
            )));
        }
        names.push(&self.register);
        let local = full.select(&names)?;
        let reg_dim = full.dim_of(&self.register).expect("selected above");
        let src_dim = local.total_dim() / reg_dim;
        let shifts: Vec<usize> = match (&self.shifts, self.flag) {
            (Some(s), _) => {
                if s.len() != src_dim {
                    return Err(Error::Composition(format!(
                        "shift table has {} entries, sources have dimension {src_dim}",
                        s.len()
                    )));
                }
                s.clone()
            }
            (None, Some(v)) => (0..src_dim).map(|k| usize::from(k == v)).collect(),
            (None, None) => (0..src_dim).collect(),
        };
        if let Some(&bad) = shifts.iter().find(|&&s| s >= reg_dim) {
            return Err(Error::Composition(format!(
                "register '{}' (dim {reg_dim}) cannot hold record {bad}",
                self.register
            )));
        }
        let perm: Vec<usize> = (0..local.total_dim())
            .map(|i| {
                let (s, r) = (i / reg_dim, i % reg_dim);
                s * reg_dim + (r + shifts[s]) % reg_dim
            })
            .collect();
        LinearMap::permutation(local, &perm)
    }
}

/// Entangles the coupling's register with its sources.
///
/// Every component of `state` carrying amplitude must have the register in
/// its ready state; otherwise the record would be scrambled.
pub fn measure_entangle(state: &Ket, coupling: &PointerCoupling) -> Result<Ket> {
    let shape = state.shape();
    let reg_pos = shape.require(&coupling.register)?;
    let stride = shape.strides()[reg_pos];
    let reg_dim = shape.subsystems()[reg_pos].dim;
    let unready: f64 = state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| !(i / stride).is_multiple_of(reg_dim))
        .map(|(_, a)| a.norm_sqr())
        .sum();
    if unready > PRUNE_MASS {
        return Err(Error::Contract(format!(
            "register '{}' is not in its ready state (mass {unready:.3e} off |0⟩)",
            coupling.register
        )));
    }
    let map = coupling.local_map(shape)?;
    let mut targets: Vec<&str> = coupling.sources.iter().map(String::as_str).collect();
    targets.push(&coupling.register);
    Ok(map.apply_local(&targets, state)?.ket)
}

/// `|0⟩` on a fresh register, appended to `state`.
pub fn with_ready_register(state: &Ket, name: &str, dim: usize) -> Result<Ket> {
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    amps[0] = Complex64::new(1.0, 0.0);
    state.tensor(&Ket::qudit(name, &amps)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branching::decompose;

    fn system(amps: &[f64]) -> Ket {
        let n: f64 = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
        let v: Vec<f64> = amps.iter().map(|a| a / n).collect();
        Ket::real("sys", &v).unwrap()
    }

    #[test]
    fn apparatus_then_observer_records_k() {
        let s = system(&[1.0, 2.0, 3.0]);
        let s = with_ready_register(&s, "app", 3).unwrap();
        let s = with_ready_register(&s, "obs", 3).unwrap();
        let s = measure_entangle(&s, &PointerCoupling::record("sys", "app")).unwrap();
        let s = measure_entangle(&s, &PointerCoupling::record("app", "obs")).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-12);
        let bs = decompose(&s, &["app", "obs"]).unwrap();
        assert_eq!(bs.len(), 3);
        for b in bs.branches() {
            assert_eq!(b.label.indices()[0], b.label.indices()[1]);
            let k = b.label.indices()[0];
            assert!((b.weight() - [1.0, 4.0, 9.0][k] / 14.0).abs() < 1e-12);
        }
    }

    #[test]
    fn definite_input_makes_no_new_branches() {
        let s = with_ready_register(&system(&[0.0, 1.0]), "app", 2).unwrap();
        let out = measure_entangle(&s, &PointerCoupling::record("sys", "app")).unwrap();
        let bs = decompose(&out, &["app"]).unwrap();
        assert_eq!(bs.len(), 1);
        assert_eq!(bs.branches()[0].label.indices(), &[1]);
    }

    #[test]
    fn register_not_ready() {
        let s = system(&[1.0, 1.0]).tensor(&Ket::real("app", &[0.0, 1.0]).unwrap()).unwrap();
        let err = measure_entangle(&s, &PointerCoupling::record("sys", "app")).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn register_too_small() {
        let s = with_ready_register(&system(&[1.0, 1.0, 1.0]), "app", 2).unwrap();
        assert!(measure_entangle(&s, &PointerCoupling::record("sys", "app")).is_err());
    }

    #[test]
    fn flag_detector() {
        let s = with_ready_register(&system(&[1.0, 1.0, 1.0]), "d0", 2).unwrap();
        let out = measure_entangle(&s, &PointerCoupling::flag("sys", 0, "d0")).unwrap();
        let bs = decompose(&out, &["d0"]).unwrap();
        assert!((bs.find(&[1]).unwrap().weight() - 1.0 / 3.0).abs() < 1e-12);
        assert!((bs.find(&[0]).unwrap().weight() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn coupling_map_is_unitary() {
        let s = with_ready_register(&system(&[1.0, 1.0, 1.0]), "app", 4).unwrap();
        let m = PointerCoupling::record("sys", "app").local_map(s.shape()).unwrap();
        assert!(m.is_unitary());
        assert!(m.unitarity_defect() < 1e-15);
    }
}
