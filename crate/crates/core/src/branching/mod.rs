//! Branch decomposition over pointer bases.
//!
//! A normalized state is split into one branch per assignment of basis
//! indices to the pointer subsystems (detectors, observers, registers). Each
//! branch carries a complex coefficient `a(i)` and a unit-norm relative state
//! on the remaining factors.

mod functional;
mod measure;
mod minds;
mod perception;
mod repeated;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

pub use functional::{check_probability_functional, FunctionalCheck, FunctionalVerdict};
pub use measure::{measure_entangle, with_ready_register, PointerCoupling};
pub use minds::{many_minds_joint, JointFractions, MindsMode};
pub use perception::{sample_perception, MonotoneWeight, Perception, SinglingPolicy};
pub use repeated::RepeatedRuns;

use crate::error::{Error, Result};
use crate::state::{Amplitude, Ket, SpaceShape, Subsystem};

/// Branches whose squared mass falls below this are dropped.
pub const PRUNE_MASS: f64 = 1e-14;
/// Tolerance on `Σ|a(i)|² = 1` and on reconstruction.
pub const CONSERVATION_TOL: f64 = 1e-10;
/// Largest state `reconstruct` will materialize.
const MAX_RECONSTRUCT_DIM: usize = 1 << 24;

/// Basis index per pointer subsystem.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BranchLabel {
    names: Arc<[String]>,
    indices: Vec<usize>,
}

impl BranchLabel {
    pub fn new(names: Arc<[String]>, indices: Vec<usize>) -> Result<Self> {
        if names.len() != indices.len() {
            return Err(Error::Composition(format!(
                "label has {} names but {} indices",
                names.len(),
                indices.len()
            )));
        }
        Ok(BranchLabel { names, indices })
    }

    pub fn outcomes(&self) -> impl Iterator<Item = (&str, usize)> {
        self.names.iter().map(String::as_str).zip(self.indices.iter().copied())
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name).map(|p| self.indices[p])
    }
}

impl fmt::Display for BranchLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (n, v)) in self.outcomes().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{n}={v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub label: BranchLabel,
    pub coefficient: Amplitude,
    /// Unit-norm state on the non-pointer factors.
    pub relative: Ket,
}

impl Branch {
    /// `|a(i)|²`.
    pub fn weight(&self) -> f64 {
        self.coefficient.norm_sqr()
    }

    /// The unnormalized branch vector `a(i)·relative`, free of the phase
    /// convention split between coefficient and relative state.
    pub fn component(&self) -> Ket {
        self.relative.scale(self.coefficient)
    }
}

/// An orthogonal decomposition of a state into outcome-labeled branches.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSet {
    pointer: Vec<Subsystem>,
    names: Arc<[String]>,
    relative_shape: SpaceShape,
    /// Factor order of the state the set was decomposed from.
    source_order: Vec<String>,
    branches: Vec<Branch>,
}

impl BranchSet {
    /// Assembles a set and checks its invariants: distinct labels that fit the
    /// pointer dims, unit relative kets and `Σ|a(i)|² = 1`.
    pub fn new(
        pointer: Vec<Subsystem>,
        relative_shape: SpaceShape,
        source_order: Vec<String>,
        branches: Vec<Branch>,
    ) -> Result<Self> {
        let names: Arc<[String]> = pointer.iter().map(|s| s.name.clone()).collect();
        for p in &pointer {
            if relative_shape.position(&p.name).is_some() {
                return Err(Error::Composition(format!(
                    "'{}' is both pointer and relative factor",
                    p.name
                )));
            }
        }
        let mut seen = std::collections::HashSet::with_capacity(branches.len());
        for b in &branches {
            if b.label.names() != &names[..] {
                return Err(Error::Composition(format!("label {} does not match pointer", b.label)));
            }
            for (idx, sub) in b.label.indices().iter().zip(&pointer) {
                if *idx >= sub.dim {
                    return Err(Error::Composition(format!(
                        "label {} exceeds dimension of '{}'",
                        b.label, sub.name
                    )));
                }
            }
            if !seen.insert(b.label.indices().to_vec()) {
                return Err(Error::Contract(format!("duplicate branch label {}", b.label)));
            }
            if b.relative.shape() != &relative_shape {
                return Err(Error::Composition("relative ket shape mismatch".into()));
            }
            if !b.relative.is_normalized(1e-12) {
                return Err(Error::Contract(format!("relative ket of {} is not unit norm", b.label)));
            }
        }
        let total: f64 = branches.iter().map(Branch::weight).sum();
        if (total - 1.0).abs() > CONSERVATION_TOL {
            return Err(Error::Contract(format!(
                "branch weights sum to {total}, not 1 (conservation of probability)"
            )));
        }
        Ok(BranchSet { pointer, names, relative_shape, source_order, branches })
    }

    /// A one-pointer set with the given coefficients and trivial relative
    /// states; zero coefficients produce no branch.
    pub fn from_amplitudes(pointer: &str, amplitudes: &[Amplitude]) -> Result<Self> {
        let sub = Subsystem { name: pointer.to_string(), dim: amplitudes.len() };
        let names: Arc<[String]> = Arc::from(vec![pointer.to_string()]);
        let scalar = Ket::new(SpaceShape::scalar(), vec![Complex64::new(1.0, 0.0)])?;
        let branches = amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() > 0.0)
            .map(|(i, &a)| {
                Ok(Branch {
                    label: BranchLabel::new(names.clone(), vec![i])?,
                    coefficient: a,
                    relative: scalar.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(vec![sub], SpaceShape::scalar(), vec![pointer.to_string()], branches)
    }

    /// [`from_amplitudes`](Self::from_amplitudes) with `a(i) = √wᵢ`.
    pub fn from_weights(pointer: &str, weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Contract("weights must be finite and non-negative".into()));
        }
        let amps: Vec<Amplitude> = weights.iter().map(|w| Complex64::new(w.sqrt(), 0.0)).collect();
        Self::from_amplitudes(pointer, &amps)
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn pointer(&self) -> &[Subsystem] {
        &self.pointer
    }

    pub fn pointer_names(&self) -> &Arc<[String]> {
        &self.names
    }

    pub fn relative_shape(&self) -> &SpaceShape {
        &self.relative_shape
    }

    pub fn weights(&self) -> Vec<f64> {
        self.branches.iter().map(Branch::weight).collect()
    }

    pub fn find(&self, indices: &[usize]) -> Option<&Branch> {
        self.branches.iter().find(|b| b.label.indices() == indices)
    }

    /// Rebuilds `Σ a(i)·|label i⟩ ⊗ relative_i` in the source factor order.
    pub fn reconstruct(&self) -> Result<Ket> {
        let pointer_shape = SpaceShape::new(self.pointer.iter().map(|s| (s.name.clone(), s.dim)))?;
        let joint = pointer_shape.concat(&self.relative_shape)?;
        if joint.total_dim() > MAX_RECONSTRUCT_DIM {
            return Err(Error::Composition(format!(
                "state of dimension {} is too large to reconstruct",
                joint.total_dim()
            )));
        }
        let rel_dim = self.relative_shape.total_dim();
        let mut data = vec![Complex64::new(0.0, 0.0); joint.total_dim()];
        for b in &self.branches {
            let p = pointer_shape.flat_index(b.label.indices())?;
            for (slot, r) in data[p * rel_dim..(p + 1) * rel_dim]
                .iter_mut()
                .zip(b.relative.amplitudes())
            {
                *slot = b.coefficient * r;
            }
        }
        let ket = Ket::new(joint, data)?;
        let source = SpaceShape::new(self.source_order.iter().map(|n| {
            let dim = ket.shape().dim_of(n).expect("source names cover the joint shape");
            (n.clone(), dim)
        }))?;
        ket.reorder(&source)
    }

    /// Replaces each branch's relative state; the map must keep unit norm.
    pub fn map_relative(&self, f: impl Fn(&BranchLabel, &Ket) -> Result<Ket>) -> Result<BranchSet> {
        let branches = self
            .branches
            .iter()
            .map(|b| {
                Ok(Branch {
                    label: b.label.clone(),
                    coefficient: b.coefficient,
                    relative: f(&b.label, &b.relative)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let shape = branches
            .first()
            .map(|b: &Branch| b.relative.shape().clone())
            .unwrap_or_else(|| self.relative_shape.clone());
        Self::new(self.pointer.clone(), shape, self.source_order.clone(), branches)
    }

    pub(crate) fn from_parts_unchecked(
        pointer: Vec<Subsystem>,
        relative_shape: SpaceShape,
        source_order: Vec<String>,
        branches: Vec<Branch>,
    ) -> Self {
        let names = pointer.iter().map(|s| s.name.clone()).collect();
        BranchSet { pointer, names, relative_shape, source_order, branches }
    }
}

/// Splits a normalized state into branches over the `pointer` subsystems.
///
/// The coefficient of each branch takes the phase of its largest relative
/// component, so relative kets have a real positive entry there.
pub fn decompose(state: &Ket, pointer: &[&str]) -> Result<BranchSet> {
    let shape = state.shape();
    let mut positions = Vec::with_capacity(pointer.len());
    for name in pointer {
        let p = shape.require(name)?;
        if positions.contains(&p) {
            return Err(Error::Composition(format!("pointer '{name}' listed twice")));
        }
        positions.push(p);
    }
    if !state.is_normalized(CONSERVATION_TOL) {
        return Err(Error::Contract(format!(
            "decompose needs a normalized state, got ‖ψ‖² = {}",
            state.norm_sqr()
        )));
    }
    let pointer_shape = shape.select(pointer)?;
    let rest_shape = shape.without(pointer);
    let rest_positions: Vec<usize> = (0..shape.len()).filter(|p| !positions.contains(p)).collect();
    let (np, nr) = (pointer_shape.total_dim(), rest_shape.total_dim());

    let mut buckets = vec![Complex64::new(0.0, 0.0); np * nr];
    for (flat, a) in state.amplitudes().iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let digits = shape.digits(flat);
        let p = positions.iter().fold(0, |acc, &i| acc * shape.subsystems()[i].dim + digits[i]);
        let r = rest_positions.iter().fold(0, |acc, &i| acc * shape.subsystems()[i].dim + digits[i]);
        buckets[p * nr + r] = *a;
    }

    let names: Arc<[String]> = pointer.iter().map(|s| s.to_string()).collect();
    let mut branches = Vec::new();
    for (p, chunk) in buckets.chunks_exact(nr).enumerate() {
        let mass: f64 = chunk.iter().map(|a| a.norm_sqr()).sum();
        if mass < PRUNE_MASS {
            continue;
        }
        let lead = chunk.iter().fold(Complex64::new(0.0, 0.0), |best, a| {
            if a.norm_sqr() > best.norm_sqr() {
                *a
            } else {
                best
            }
        });
        let coefficient = Complex64::from_polar(mass.sqrt(), lead.arg());
        let inv = coefficient.inv();
        let relative = Ket::new(rest_shape.clone(), chunk.iter().map(|a| a * inv).collect())?;
        branches.push(Branch {
            label: BranchLabel::new(names.clone(), pointer_shape.digits(p))?,
            coefficient,
            relative,
        });
    }
    let pointer_subs = pointer_shape.subsystems().to_vec();
    let source_order = shape.names().map(str::to_string).collect();
    Ok(BranchSet::from_parts_unchecked(pointer_subs, rest_shape, source_order, branches))
}
