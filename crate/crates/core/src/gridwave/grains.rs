//! Film-grain localization: a wave reaching a screen of grains becomes a
//! superposition of terms, each with exactly one grain exposed.

use std::ops::Range;
use std::sync::Arc;

use num_complex::Complex64;

use crate::branching::{Branch, BranchLabel, BranchSet};
use crate::error::{Error, Result};
use crate::state::{Ket, SpaceShape, Subsystem};

use super::{GridWave, ScreenPattern};

/// Grains must cover at least this fraction of the probability.
pub const COVERAGE_MIN: f64 = 0.99;

/// Disjoint, non-empty, ascending index ranges; each range is one grain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrainArray {
    regions: Vec<Range<usize>>,
}

impl GrainArray {
    pub fn new(regions: Vec<Range<usize>>) -> Result<Self> {
        if regions.is_empty() {
            return Err(Error::Contract("a grain array needs at least one grain".into()));
        }
        for (i, r) in regions.iter().enumerate() {
            if r.start >= r.end {
                return Err(Error::Contract(format!("grain {i} ({r:?}) is empty")));
            }
            if i > 0 && r.start < regions[i - 1].end {
                return Err(Error::Contract(format!(
                    "grain {i} ({r:?}) overlaps or precedes grain {}",
                    i - 1
                )));
            }
        }
        Ok(GrainArray { regions })
    }

    /// Equal grains of `width` samples tiling `start..end`.
    pub fn uniform(start: usize, end: usize, width: usize) -> Result<Self> {
        if width == 0 || end <= start || !(end - start).is_multiple_of(width) {
            return Err(Error::Contract(format!("cannot tile {start}..{end} with width {width}")));
        }
        Self::new((start..end).step_by(width).map(|s| s..s + width).collect())
    }

    pub fn regions(&self) -> &[Range<usize>] {
        &self.regions
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }
}

/// What the grains are laid over.
#[derive(Debug, Clone, Copy)]
pub enum GrainSource<'a> {
    /// Screen bins of a pattern.
    Pattern(&'a ScreenPattern),
    /// Grid samples of a wave arriving at the screen.
    Wave(&'a GridWave),
}

impl GrainSource<'_> {
    fn masses(&self) -> Vec<f64> {
        match self {
            GrainSource::Pattern(p) => p.intensity.clone(),
            GrainSource::Wave(w) => w.density().into_iter().map(|r| r * w.grid().dx()).collect(),
        }
    }
}

/// One branch per grain. Grain `i`'s squared coefficient is the probability
/// landing on it, renormalized over the covered probability; its label marks
/// grain `i` exposed (occupation 1) and every other grain unexposed.
///
/// Pointer subsystems are `grain_0 … grain_{G−1}` (dim 2 each); relative
/// states are trivial.
pub fn grain_exposure(source: GrainSource<'_>, grains: &GrainArray) -> Result<BranchSet> {
    let masses = source.masses();
    let n = masses.len();
    if let Some(r) = grains.regions.iter().find(|r| r.end > n) {
        return Err(Error::Contract(format!("grain {r:?} lies outside 0..{n}")));
    }
    let total: f64 = masses.iter().sum();
    let per_grain: Vec<f64> = grains.regions.iter().map(|r| masses[r.clone()].iter().sum()).collect();
    let covered: f64 = per_grain.iter().sum();
    if !(total > 0.0) || covered / total < COVERAGE_MIN {
        return Err(Error::Contract(format!(
            "grains cover {:.4} of the probability, need ≥ {COVERAGE_MIN}",
            covered / total
        )));
    }

    let g = grains.len();
    let pointer: Vec<Subsystem> =
        (0..g).map(|i| Subsystem { name: format!("grain_{i}"), dim: 2 }).collect();
    let names: Arc<[String]> = pointer.iter().map(|s| s.name.clone()).collect();
    let scalar = Ket::new(SpaceShape::scalar(), vec![Complex64::new(1.0, 0.0)])?;
    let branches = per_grain
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let mut occupation = vec![0usize; g];
            occupation[i] = 1;
            Ok(Branch {
                label: BranchLabel::new(names.clone(), occupation)?,
                coefficient: Complex64::new((m / covered).sqrt(), 0.0),
                relative: scalar.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let order = names.iter().cloned().collect();
    BranchSet::new(pointer, SpaceShape::scalar(), order, branches)
}

/// Grains marked exposed in a grain-exposure label.
pub fn exposed_grains(label: &BranchLabel) -> Vec<usize> {
    label.indices().iter().enumerate().filter(|(_, &o)| o > 0).map(|(i, _)| i).collect()
}

/// Whole quanta deposited across all grains in one branch.
pub fn deposited_quanta(label: &BranchLabel) -> usize {
    label.indices().iter().sum()
}
