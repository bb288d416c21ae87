//! Finite-dimensional state algebra.
//!
//! Dense complex vectors over a labeled tensor-product space, with inner
//! products, Kronecker composition and linear maps that can be embedded into
//! a larger space as identity on the untouched factors.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A complex probability amplitude.
pub type Amplitude = Complex64;

/// Tolerance for exact algebra on normalized vectors.
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance for unitarity checks on user-supplied matrices.
pub const UNITARY_TOL: f64 = 1e-10;

const ZERO: Amplitude = Complex64::new(0.0, 0.0);
const ONE: Amplitude = Complex64::new(1.0, 0.0);

/// One named tensor factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subsystem {
    pub name: String,
    pub dim: usize,
}

/// Ordered list of named tensor factors. Index order is row-major: the last
/// subsystem varies fastest.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SpaceShape {
    subsystems: Vec<Subsystem>,
    total: usize,
}

impl SpaceShape {
    pub fn new<S: Into<String>>(subsystems: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let subsystems: Vec<Subsystem> = subsystems
            .into_iter()
            .map(|(name, dim)| Subsystem { name: name.into(), dim })
            .collect();
        let mut total = 1usize;
        for (i, s) in subsystems.iter().enumerate() {
            if s.dim == 0 {
                return Err(Error::Composition(format!("subsystem '{}' has dimension 0", s.name)));
            }
            if subsystems[..i].iter().any(|o| o.name == s.name) {
                return Err(Error::Composition(format!("duplicate subsystem name '{}'", s.name)));
            }
            total = total.checked_mul(s.dim).ok_or_else(|| {
                Error::Composition("total dimension overflows the address space".into())
            })?;
        }
        Ok(SpaceShape { subsystems, total })
    }

    /// The one-dimensional space with no factors.
    pub fn scalar() -> Self {
        SpaceShape { subsystems: Vec::new(), total: 1 }
    }

    pub fn single(name: impl Into<String>, dim: usize) -> Result<Self> {
        Self::new([(name.into(), dim)])
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.total
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(|s| s.dim).collect()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.subsystems.iter().map(|s| s.name.as_str())
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.subsystems.iter().position(|s| s.name == name)
    }

    pub fn dim_of(&self, name: &str) -> Option<usize> {
        self.position(name).map(|p| self.subsystems[p].dim)
    }

    /// Position of `name`, or a composition error naming it.
    pub fn require(&self, name: &str) -> Result<usize> {
        self.position(name)
            .ok_or_else(|| Error::Composition(format!("unknown subsystem '{name}'")))
    }

    /// Row-major strides, one per subsystem.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.subsystems.len()];
        for i in (0..self.subsystems.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.subsystems[i + 1].dim;
        }
        strides
    }

    pub fn flat_index(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.subsystems.len() {
            return Err(Error::Composition(format!(
                "expected {} basis indices, got {}",
                self.subsystems.len(),
                digits.len()
            )));
        }
        let mut idx = 0;
        for (d, s) in digits.iter().zip(&self.subsystems) {
            if *d >= s.dim {
                return Err(Error::Composition(format!(
                    "basis index {d} out of range for '{}' (dim {})",
                    s.name, s.dim
                )));
            }
            idx = idx * s.dim + d;
        }
        Ok(idx)
    }

    pub fn digits(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.subsystems.len()];
        for (slot, s) in out.iter_mut().zip(&self.subsystems).rev() {
            *slot = flat % s.dim;
            flat /= s.dim;
        }
        out
    }

    /// Concatenation `self ⊗ other`; names must be disjoint.
    pub fn concat(&self, other: &SpaceShape) -> Result<SpaceShape> {
        if let Some(clash) = other.names().find(|n| self.position(n).is_some()) {
            return Err(Error::Composition(format!("subsystem name clash on '{clash}'")));
        }
        Self::new(
            self.subsystems
                .iter()
                .chain(&other.subsystems)
                .map(|s| (s.name.clone(), s.dim)),
        )
    }

    /// The shape restricted to the named subsystems, in the given order.
    pub fn select(&self, names: &[&str]) -> Result<SpaceShape> {
        let mut picked = Vec::with_capacity(names.len());
        for n in names {
            let p = self.require(n)?;
            picked.push((self.subsystems[p].name.clone(), self.subsystems[p].dim));
        }
        Self::new(picked)
    }

    /// The shape without the named subsystems, order preserved.
    pub fn without(&self, names: &[&str]) -> SpaceShape {
        let kept: Vec<_> = self
            .subsystems
            .iter()
            .filter(|s| !names.contains(&s.name.as_str()))
            .map(|s| (s.name.clone(), s.dim))
            .collect();
        Self::new(kept).expect("subset of a valid shape is valid")
    }

    /// Same dimensions factor by factor, names ignored.
    pub fn same_dims(&self, other: &SpaceShape) -> bool {
        self.dims() == other.dims()
    }
}

impl fmt::Display for SpaceShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, s) in self.subsystems.iter().enumerate() {
            if i > 0 {
                f.write_str(" ⊗ ")?;
            }
            write!(f, "{}:{}", s.name, s.dim)?;
        }
        f.write_str("]")
    }
}

/// A dense state vector over a [`SpaceShape`].
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    shape: SpaceShape,
    data: Vec<Amplitude>,
}

impl Ket {
    pub fn new(shape: SpaceShape, data: Vec<Amplitude>) -> Result<Self> {
        if data.len() != shape.total_dim() {
            return Err(Error::Composition(format!(
                "ket has {} amplitudes but shape {shape} has dimension {}",
                data.len(),
                shape.total_dim()
            )));
        }
        if data.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Contract("ket amplitudes must be finite".into()));
        }
        Ok(Ket { shape, data })
    }

    pub fn zeros(shape: SpaceShape) -> Self {
        let data = vec![ZERO; shape.total_dim()];
        Ket { shape, data }
    }

    /// Computational basis vector with the given per-subsystem indices.
    pub fn basis(shape: SpaceShape, digits: &[usize]) -> Result<Self> {
        let idx = shape.flat_index(digits)?;
        let mut k = Self::zeros(shape);
        k.data[idx] = ONE;
        Ok(k)
    }

    /// A single-subsystem ket from its amplitudes.
    pub fn qudit(name: impl Into<String>, amplitudes: &[Amplitude]) -> Result<Self> {
        Self::new(SpaceShape::single(name, amplitudes.len())?, amplitudes.to_vec())
    }

    /// A single-subsystem ket from real amplitudes.
    pub fn real(name: impl Into<String>, amplitudes: &[f64]) -> Result<Self> {
        let amps: Vec<Amplitude> = amplitudes.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        Self::qudit(name, &amps)
    }

    pub fn shape(&self) -> &SpaceShape {
        &self.shape
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.data
    }

    pub fn into_amplitudes(self) -> Vec<Amplitude> {
        self.data
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn amplitude(&self, digits: &[usize]) -> Result<Amplitude> {
        Ok(self.data[self.shape.flat_index(digits)?])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> Result<Ket> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::Contract("cannot normalize the zero vector".into()));
        }
        Ok(self.scale(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scale(&self, c: Amplitude) -> Ket {
        Ket {
            shape: self.shape.clone(),
            data: self.data.iter().map(|a| a * c).collect(),
        }
    }

    /// `self + other`, shapes must match exactly.
    pub fn add(&self, other: &Ket) -> Result<Ket> {
        self.check_same_shape(other)?;
        Ok(Ket {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    /// `Σ cᵢ·ketᵢ`; all kets must share a shape.
    pub fn superpose(terms: &[(Amplitude, &Ket)]) -> Result<Ket> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::Contract("superposition of zero terms".into()))?;
        let mut acc = Ket::zeros(first.shape.clone());
        for (c, k) in terms {
            acc.check_same_shape(k)?;
            for (slot, a) in acc.data.iter_mut().zip(&k.data) {
                *slot += c * a;
            }
        }
        Ok(acc)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn tensor(&self, other: &Ket) -> Result<Ket> {
        let shape = self.shape.concat(&other.shape)?;
        let mut data = Vec::with_capacity(shape.total_dim());
        for a in &self.data {
            data.extend(other.data.iter().map(|b| a * b));
        }
        Ok(Ket { shape, data })
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Ket) -> Result<Amplitude> {
        self.check_same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum())
    }

    /// Largest componentwise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Ket) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Reorder the tensor factors to match `target` (same names and dims).
    pub fn reorder(&self, target: &SpaceShape) -> Result<Ket> {
        if target.len() != self.shape.len() {
            return Err(Error::Composition(format!(
                "cannot reorder {} into {target}",
                self.shape
            )));
        }
        let mut src_pos = Vec::with_capacity(target.len());
        for s in target.subsystems() {
            let p = self.shape.require(&s.name)?;
            if self.shape.subsystems()[p].dim != s.dim {
                return Err(Error::Composition(format!("dimension mismatch on '{}'", s.name)));
            }
            src_pos.push(p);
        }
        let src_strides = self.shape.strides();
        let mut out = Ket::zeros(target.clone());
        for (flat, slot) in out.data.iter_mut().enumerate() {
            let digits = target.digits(flat);
            let src: usize = digits.iter().zip(&src_pos).map(|(d, &p)| d * src_strides[p]).sum();
            *slot = self.data[src];
        }
        Ok(out)
    }

    fn check_same_shape(&self, other: &Ket) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Composition(format!(
                "shape mismatch: {} vs {}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }
}

/// Result of applying a map: the output vector and its norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Applied {
    pub ket: Ket,
    pub surviving_norm: f64,
}

/// A dense linear map between two shaped spaces. The matrix is stored row
/// major with `shape_out.total_dim()` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    shape_in: SpaceShape,
    shape_out: SpaceShape,
    matrix: Vec<Amplitude>,
    unitary: bool,
}

impl LinearMap {
    /// Builds a map; when `unitary` is set the matrix is checked against
    /// `M†M = I` to within [`UNITARY_TOL`].
    pub fn new(
        shape_in: SpaceShape,
        shape_out: SpaceShape,
        matrix: Vec<Amplitude>,
        unitary: bool,
    ) -> Result<Self> {
        let (rows, cols) = (shape_out.total_dim(), shape_in.total_dim());
        if matrix.len() != rows * cols {
            return Err(Error::Composition(format!(
                "matrix has {} entries, expected {rows}×{cols}",
                matrix.len()
            )));
        }
        if matrix.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Contract("matrix entries must be finite".into()));
        }
        let map = LinearMap { shape_in, shape_out, matrix, unitary };
        if unitary {
            let dev = map.unitarity_defect();
            if rows != cols || dev > UNITARY_TOL {
                return Err(Error::Contract(format!(
                    "matrix flagged unitary deviates from M†M = I by {dev:.3e}"
                )));
            }
        }
        Ok(map)
    }

    /// Square map on one shape from a row-major matrix.
    pub fn square(shape: SpaceShape, matrix: Vec<Amplitude>, unitary: bool) -> Result<Self> {
        Self::new(shape.clone(), shape, matrix, unitary)
    }

    pub fn identity(shape: SpaceShape) -> Self {
        let d = shape.total_dim();
        let mut matrix = vec![ZERO; d * d];
        for i in 0..d {
            matrix[i * d + i] = ONE;
        }
        LinearMap { shape_in: shape.clone(), shape_out: shape, matrix, unitary: true }
    }

    /// Orthogonal projector `|v⟩⟨v|` onto a unit vector.
    pub fn projector(v: &Ket) -> Result<Self> {
        if !v.is_normalized(NORM_TOL) {
            return Err(Error::Contract("projector direction must be a unit vector".into()));
        }
        let d = v.dim();
        let data = v.amplitudes();
        let mut matrix = Vec::with_capacity(d * d);
        for r in 0..d {
            matrix.extend((0..d).map(|c| data[r] * data[c].conj()));
        }
        Ok(LinearMap {
            shape_in: v.shape().clone(),
            shape_out: v.shape().clone(),
            matrix,
            unitary: d == 1,
        })
    }

    /// The permutation `|i⟩ ↦ |perm[i]⟩`.
    pub fn permutation(shape: SpaceShape, perm: &[usize]) -> Result<Self> {
        let d = shape.total_dim();
        if perm.len() != d {
            return Err(Error::Composition("permutation length mismatch".into()));
        }
        let mut seen = vec![false; d];
        let mut matrix = vec![ZERO; d * d];
        for (col, &row) in perm.iter().enumerate() {
            if row >= d || seen[row] {
                return Err(Error::Contract("not a permutation".into()));
            }
            seen[row] = true;
            matrix[row * d + col] = ONE;
        }
        Ok(LinearMap { shape_in: shape.clone(), shape_out: shape, matrix, unitary: true })
    }

    pub fn shape_in(&self) -> &SpaceShape {
        &self.shape_in
    }

    pub fn shape_out(&self) -> &SpaceShape {
        &self.shape_out
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn entry(&self, row: usize, col: usize) -> Amplitude {
        self.matrix[row * self.shape_in.total_dim() + col]
    }

    pub fn matrix(&self) -> &[Amplitude] {
        &self.matrix
    }

    /// Largest entry of `|M†M − I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let (rows, cols) = (self.shape_out.total_dim(), self.shape_in.total_dim());
        let mut worst: f64 = 0.0;
        for i in 0..cols {
            for j in 0..cols {
                let mut acc = ZERO;
                for r in 0..rows {
                    acc += self.matrix[r * cols + i].conj() * self.matrix[r * cols + j];
                }
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }

    /// Matrix-vector product. Projectors may shrink the norm; the surviving
    /// norm is reported and a zero result is returned as is.
    pub fn apply(&self, psi: &Ket) -> Result<Applied> {
        if psi.shape() != &self.shape_in {
            return Err(Error::Composition(format!(
                "map expects {}, got {}",
                self.shape_in,
                psi.shape()
            )));
        }
        let cols = self.shape_in.total_dim();
        let input = psi.amplitudes();
        let data: Vec<Amplitude> = self
            .matrix
            .chunks_exact(cols)
            .map(|row| row.iter().zip(input).map(|(m, x)| m * x).sum())
            .collect();
        let ket = Ket { shape: self.shape_out.clone(), data };
        let surviving_norm = ket.norm();
        Ok(Applied { ket, surviving_norm })
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &LinearMap) -> Result<LinearMap> {
        if next.shape_in != self.shape_out {
            return Err(Error::Composition(format!(
                "cannot chain {} into {}",
                self.shape_out, next.shape_in
            )));
        }
        let (n, k, m) = (
            next.shape_out.total_dim(),
            self.shape_out.total_dim(),
            self.shape_in.total_dim(),
        );
        let mut matrix = vec![ZERO; n * m];
        for r in 0..n {
            for j in 0..k {
                let a = next.matrix[r * k + j];
                if a == ZERO {
                    continue;
                }
                for c in 0..m {
                    matrix[r * m + c] += a * self.matrix[j * m + c];
                }
            }
        }
        Ok(LinearMap {
            shape_in: self.shape_in.clone(),
            shape_out: next.shape_out.clone(),
            matrix,
            unitary: self.unitary && next.unitary,
        })
    }

    /// Embeds this map into `full`, acting on `targets` (in the order of this
    /// map's factors) and as identity on every other subsystem.
    pub fn lift(&self, targets: &[&str], full: &SpaceShape) -> Result<LinearMap> {
        let layout = LocalLayout::new(self, targets, full)?;
        let d = full.total_dim();
        let local = self.shape_in.total_dim();
        let mut matrix = vec![ZERO; d * d];
        for col in 0..d {
            let (base, sub_in) = layout.split(col);
            for sub_out in 0..local {
                let a = self.matrix[sub_out * local + sub_in];
                if a != ZERO {
                    matrix[(base + layout.offsets[sub_out]) * d + col] = a;
                }
            }
        }
        Ok(LinearMap {
            shape_in: full.clone(),
            shape_out: full.clone(),
            matrix,
            unitary: self.unitary,
        })
    }

    /// Same result as `self.lift(targets, psi.shape())?.apply(psi)` without
    /// materializing the full matrix.
    pub fn apply_local(&self, targets: &[&str], psi: &Ket) -> Result<Applied> {
        let layout = LocalLayout::new(self, targets, psi.shape())?;
        let local = self.shape_in.total_dim();
        let mut data = vec![ZERO; psi.dim()];
        for (col, x) in psi.amplitudes().iter().enumerate() {
            if *x == ZERO {
                continue;
            }
            let (base, sub_in) = layout.split(col);
            for sub_out in 0..local {
                let a = self.matrix[sub_out * local + sub_in];
                if a != ZERO {
                    data[base + layout.offsets[sub_out]] += a * x;
                }
            }
        }
        let ket = Ket { shape: psi.shape().clone(), data };
        let surviving_norm = ket.norm();
        Ok(Applied { ket, surviving_norm })
    }
}

/// Index bookkeeping for a square local map embedded in a larger shape.
struct LocalLayout {
    full: SpaceShape,
    positions: Vec<usize>,
    full_strides: Vec<usize>,
    /// Flat offset in the full space contributed by each local basis index.
    offsets: Vec<usize>,
}

impl LocalLayout {
    fn new(map: &LinearMap, targets: &[&str], full: &SpaceShape) -> Result<Self> {
        if !map.shape_in.same_dims(&map.shape_out) {
            return Err(Error::Composition("only square local maps can be lifted".into()));
        }
        if targets.len() != map.shape_in.len() {
            return Err(Error::Composition(format!(
                "map has {} factors but {} targets were given",
                map.shape_in.len(),
                targets.len()
            )));
        }
        let mut positions = Vec::with_capacity(targets.len());
        for (t, s) in targets.iter().zip(map.shape_in.subsystems()) {
            let p = full.require(t)?;
            if positions.contains(&p) {
                return Err(Error::Composition(format!("target '{t}' listed twice")));
            }
            if full.subsystems()[p].dim != s.dim {
                return Err(Error::Composition(format!(
                    "target '{t}' has dimension {} but the map expects {}",
                    full.subsystems()[p].dim,
                    s.dim
                )));
            }
            positions.push(p);
        }
        let full_strides = full.strides();
        let offsets = (0..map.shape_in.total_dim())
            .map(|sub| {
                map.shape_in
                    .digits(sub)
                    .iter()
                    .zip(&positions)
                    .map(|(d, &p)| d * full_strides[p])
                    .sum()
            })
            .collect();
        Ok(LocalLayout { full: full.clone(), positions, full_strides, offsets })
    }

    /// Splits a full flat index into (index with targets zeroed, local index).
    fn split(&self, flat: usize) -> (usize, usize) {
        let digits = self.full.digits(flat);
        let mut base = flat;
        let mut local = 0;
        for &p in &self.positions {
            base -= digits[p] * self.full_strides[p];
            local = local * self.full.subsystems()[p].dim + digits[p];
        }
        (base, local)
    }
}
