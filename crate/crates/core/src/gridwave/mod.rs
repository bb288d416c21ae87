//! One-dimensional wave mechanics on a uniform periodic grid.
//!
//! Free propagation is exact: the kinetic phase `exp(−iħk²t/2m)` is applied
//! in momentum space. The periodic boundary is guarded by requiring that
//! almost no probability sits near the grid edges.

mod grains;
mod slits;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub use grains::{deposited_quanta, exposed_grains, grain_exposure, GrainArray, GrainSource, COVERAGE_MIN};
pub use slits::{
    ascending_wavenumbers, far_field_amplitudes, fringe_visibility, screen_pattern, slit_mask, ScreenMode,
    ScreenPattern,
};

use crate::error::{Error, Result};

/// CODATA 2018 reduced Planck constant, J·s.
pub const HBAR_CODATA: f64 = 1.054_571_817e-34;
/// Largest probability allowed in the outer 5% of samples at each edge.
pub const BOUNDARY_LIMIT: f64 = 1e-6;
/// Tolerance on `Σ|ψ|²·dx = 1`.
pub const GRID_NORM_TOL: f64 = 1e-9;

/// Uniform sampling `x_i = origin + i·dx`, `i < n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n: usize,
    dx: f64,
    origin: f64,
}

impl Grid1D {
    pub fn new(n: usize, dx: f64, origin: f64) -> Result<Self> {
        if n < 64 || !n.is_power_of_two() {
            return Err(Error::Contract(format!("grid size must be a power of two ≥ 64, got {n}")));
        }
        if !(dx.is_finite() && dx > 0.0) || !origin.is_finite() {
            return Err(Error::Contract(format!("invalid grid spacing {dx} or origin {origin}")));
        }
        Ok(Grid1D { n, dx, origin })
    }

    /// Grid with `x = 0` at sample `n/2`.
    pub fn centered(n: usize, dx: f64) -> Result<Self> {
        Self::new(n, dx, -(n as f64) * dx / 2.0)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn x(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.dx
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Left edge and right edge (exclusive) of the sampled interval.
    pub fn extent(&self) -> (f64, f64) {
        (self.origin, self.origin + self.n as f64 * self.dx)
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n as i64;
        let dk = 2.0 * std::f64::consts::PI / (self.n as f64 * self.dx);
        (0..n).map(|j| if j < n / 2 { j } else { j - n } as f64 * dk).collect()
    }

    /// Samples in each outer band checked by the boundary invariant.
    pub fn edge_band(&self) -> usize {
        (self.n / 20).max(1)
    }
}

/// Forward/inverse transforms of one size, reusable across calls.
#[derive(Clone)]
pub struct Spectral {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    n: usize,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral").field("n", &self.n).finish()
    }
}

impl Spectral {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Spectral { forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n), n }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// Inverse transform including the `1/n` factor.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let s = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|z| *z *= s);
    }
}

/// A complex wave function sampled on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridWave {
    grid: Grid1D,
    psi: Vec<Complex64>,
    mass: f64,
    hbar: f64,
}

impl GridWave {
    pub fn new(grid: Grid1D, psi: Vec<Complex64>, mass: f64, hbar: f64) -> Result<Self> {
        if psi.len() != grid.len() {
            return Err(Error::Composition(format!(
                "{} samples for a grid of {}",
                psi.len(),
                grid.len()
            )));
        }
        if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Contract("wave samples must be finite".into()));
        }
        if !(mass.is_finite() && mass > 0.0 && hbar.is_finite() && hbar > 0.0) {
            return Err(Error::Contract(format!("mass {mass} and ħ {hbar} must be positive")));
        }
        Ok(GridWave { grid, psi, mass, hbar })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn psi(&self) -> &[Complex64] {
        &self.psi
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub(crate) fn with_psi(&self, psi: Vec<Complex64>) -> GridWave {
        GridWave { grid: self.grid, psi, mass: self.mass, hbar: self.hbar }
    }

    /// `|ψ(x_i)|²`.
    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `Σ|ψ|²·dx`.
    pub fn norm_sqr(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dx
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= GRID_NORM_TOL
    }

    pub fn normalized(&self) -> Result<GridWave> {
        let n = self.norm_sqr();
        if n <= 0.0 {
            return Err(Error::Contract("cannot normalize a zero wave".into()));
        }
        let s = 1.0 / n.sqrt();
        Ok(self.with_psi(self.psi.iter().map(|z| z * s).collect()))
    }

    /// Probability within the outer 5% of samples at both ends.
    pub fn boundary_mass(&self) -> f64 {
        let band = self.grid.edge_band();
        let n = self.grid.len();
        let edge: f64 = self.psi[..band]
            .iter()
            .chain(&self.psi[n - band..])
            .map(|z| z.norm_sqr())
            .sum();
        edge * self.grid.dx
    }

    fn require_normalized(&self) -> Result<()> {
        if !self.is_normalized() {
            return Err(Error::Contract(format!(
                "wave is not normalized (Σ|ψ|²dx = {})",
                self.norm_sqr()
            )));
        }
        Ok(())
    }

    /// Mean and standard deviation of position.
    pub fn position_moments(&self) -> (f64, f64) {
        let rho = self.density();
        let total: f64 = rho.iter().sum();
        let mean = rho.iter().enumerate().map(|(i, r)| r * self.grid.x(i)).sum::<f64>() / total;
        let var = rho
            .iter()
            .enumerate()
            .map(|(i, r)| r * (self.grid.x(i) - mean).powi(2))
            .sum::<f64>()
            / total;
        (mean, var.sqrt())
    }

    /// Discrete momentum-space amplitudes in FFT order.
    pub fn momentum_amplitudes(&self, spectral: &Spectral) -> Vec<Complex64> {
        let mut buf = self.psi.clone();
        spectral.forward(&mut buf);
        buf
    }

    /// Mean and standard deviation of momentum `ħk`.
    pub fn momentum_moments(&self) -> (f64, f64) {
        let phi = self.momentum_amplitudes(&Spectral::new(self.grid.len()));
        let ks = self.grid.wavenumbers();
        let p: Vec<f64> = phi.iter().map(|z| z.norm_sqr()).collect();
        let total: f64 = p.iter().sum();
        let mean = p.iter().zip(&ks).map(|(w, k)| w * k).sum::<f64>() / total;
        let var = p.iter().zip(&ks).map(|(w, k)| w * (k - mean).powi(2)).sum::<f64>() / total;
        (self.hbar * mean, self.hbar * var.sqrt())
    }

    /// `∂ψ/∂x` by spectral differentiation (Nyquist mode dropped).
    pub fn derivative(&self, spectral: &Spectral) -> Vec<Complex64> {
        let mut buf = self.momentum_amplitudes(spectral);
        let n = self.grid.len();
        for (j, (z, k)) in buf.iter_mut().zip(self.grid.wavenumbers()).enumerate() {
            *z *= if j == n / 2 { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, k) };
        }
        spectral.inverse(&mut buf);
        buf
    }
}

/// Minimum-uncertainty Gaussian `exp(−(x−x0)²/4σ0² + ik0x)`, normalized on
/// the grid.
pub fn gaussian_packet(
    grid: Grid1D,
    x0: f64,
    sigma0: f64,
    k0: f64,
    mass: f64,
    hbar: f64,
) -> Result<GridWave> {
    if !(sigma0.is_finite() && sigma0 > 0.0) {
        return Err(Error::Contract(format!("σ0 must be positive, got {sigma0}")));
    }
    let (lo, hi) = grid.extent();
    if x0 - 6.0 * sigma0 < lo || x0 + 6.0 * sigma0 > hi - grid.dx() {
        return Err(Error::Contract(format!(
            "packet x0 ± 6σ0 = [{}, {}] leaves the grid [{lo}, {hi})",
            x0 - 6.0 * sigma0,
            x0 + 6.0 * sigma0
        )));
    }
    let psi = grid
        .xs()
        .into_iter()
        .map(|x| {
            let u = (x - x0) / sigma0;
            Complex64::from_polar((-0.25 * u * u).exp(), k0 * x)
        })
        .collect();
    GridWave::new(grid, psi, mass, hbar)?.normalized()
}

/// Exact free evolution by a reusable plan.
#[derive(Debug, Clone)]
pub struct FreePropagator {
    spectral: Spectral,
    initial: Vec<Complex64>,
    /// `ħk²/2m` per mode.
    omega: Vec<f64>,
    wave: GridWave,
}

impl FreePropagator {
    pub fn new(w: &GridWave) -> Result<Self> {
        w.require_normalized()?;
        let spectral = Spectral::new(w.grid.len());
        let initial = w.momentum_amplitudes(&spectral);
        let omega = w
            .grid
            .wavenumbers()
            .into_iter()
            .map(|k| w.hbar * k * k / (2.0 * w.mass))
            .collect();
        Ok(FreePropagator { spectral, initial, omega, wave: w.clone() })
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// The wave at time `t`, without the boundary check.
    pub fn at_unchecked(&self, t: f64) -> GridWave {
        if t == 0.0 {
            return self.wave.clone();
        }
        let mut buf: Vec<Complex64> = self
            .initial
            .iter()
            .zip(&self.omega)
            .map(|(z, w)| z * Complex64::from_polar(1.0, -w * t))
            .collect();
        self.spectral.inverse(&mut buf);
        self.wave.with_psi(buf)
    }

    pub fn at(&self, t: f64) -> Result<GridWave> {
        let w = self.at_unchecked(t);
        let boundary_mass = w.boundary_mass();
        if boundary_mass > BOUNDARY_LIMIT {
            return Err(Error::DispersionOverflow { boundary_mass, limit: BOUNDARY_LIMIT });
        }
        Ok(w)
    }
}

/// `w` evolved freely for time `t`.
pub fn evolve_free(w: &GridWave, t: f64) -> Result<GridWave> {
    if !t.is_finite() {
        return Err(Error::Contract(format!("time must be finite, got {t}")));
    }
    FreePropagator::new(w)?.at(t)
}

/// Order-of-magnitude spreading estimate `√(x0² + 2tħ/m)`.
pub fn spread_estimate(x0: f64, t: f64, mass: f64, hbar: f64) -> f64 {
    (x0 * x0 + 2.0 * t * hbar / mass).sqrt()
}

/// Exact width of a free minimum-uncertainty Gaussian,
/// `σ0·√(1 + (ħt/2mσ0²)²)`.
pub fn gaussian_width(sigma0: f64, t: f64, mass: f64, hbar: f64) -> f64 {
    let tau = hbar * t / (2.0 * mass * sigma0 * sigma0);
    sigma0 * (1.0 + tau * tau).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uncertainty {
    pub dx: f64,
    pub dp: f64,
    pub product: f64,
}

/// Position and momentum spreads of a normalized wave.
pub fn uncertainty_product(w: &GridWave) -> Result<Uncertainty> {
    w.require_normalized()?;
    let (_, dx) = w.position_moments();
    let (_, dp) = w.momentum_moments();
    Ok(Uncertainty { dx, dp, product: dx * dp })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HBAR: f64 = 1.0;
    const MASS: f64 = 1.0;

    fn grid() -> Grid1D {
        Grid1D::centered(2048, 0.05).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(32, 1.0, 0.0).is_err());
        assert!(Grid1D::new(100, 1.0, 0.0).is_err());
        assert!(Grid1D::new(64, 0.0, 0.0).is_err());
        let g = Grid1D::centered(64, 0.5).unwrap();
        assert_eq!(g.x(32), 0.0);
        let ks = g.wavenumbers();
        assert_eq!(ks[0], 0.0);
        assert!(ks[63] < 0.0);
    }

    #[test]
    fn packet_normalized_with_expected_moments() {
        let w = gaussian_packet(grid(), 3.0, 2.0, 1.5, MASS, HBAR).unwrap();
        assert!((w.norm_sqr() - 1.0).abs() < 1e-9);
        let (mean, dx) = w.position_moments();
        assert!((mean - 3.0).abs() < 1e-6);
        assert!((dx - 2.0).abs() / 2.0 < 0.01);
        let (p, _) = w.momentum_moments();
        assert!((p - 1.5 * HBAR).abs() / 1.5 < 0.01);
    }

    #[test]
    fn packet_must_fit() {
        assert!(gaussian_packet(grid(), 48.0, 2.0, 0.0, MASS, HBAR).is_err());
    }

    #[test]
    fn evolve_zero_time_is_identity() {
        let w = gaussian_packet(grid(), 0.0, 2.0, 1.0, MASS, HBAR).unwrap();
        assert_eq!(evolve_free(&w, 0.0).unwrap(), w);
    }

    #[test]
    fn evolve_matches_dispersion_law() {
        let sigma0 = 1.5;
        let w = gaussian_packet(grid(), -5.0, sigma0, 0.0, MASS, HBAR).unwrap();
        for t in [0.5, 2.0, 6.0] {
            let e = evolve_free(&w, t).unwrap();
            assert!((e.norm_sqr() - 1.0).abs() < 1e-9);
            let (_, dx) = e.position_moments();
            let exact = gaussian_width(sigma0, t, MASS, HBAR);
            assert!((dx * dx - exact * exact).abs() / (exact * exact) < 0.005, "t={t}");
        }
    }

    #[test]
    fn evolve_overflow_is_reported() {
        let w = gaussian_packet(grid(), 0.0, 0.5, 0.0, MASS, HBAR).unwrap();
        assert!(matches!(evolve_free(&w, 200.0), Err(Error::DispersionOverflow { .. })));
    }

    #[test]
    fn spread_estimate_limits() {
        assert_eq!(spread_estimate(3.0, 0.0, 2.0, 1.0), 3.0);
        assert!((spread_estimate(0.0, 4.0, 2.0, 1.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn calcium_estimate() {
        let x = spread_estimate(10e-9, 1e-4, 66e-27, 1e-34);
        assert!(x > 5.4e-7 && x < 5.6e-7, "{x}");
    }

    #[test]
    fn gaussian_saturates_uncertainty() {
        let w = gaussian_packet(grid(), 0.0, 1.0, 0.0, MASS, HBAR).unwrap();
        let u = uncertainty_product(&w).unwrap();
        assert!((u.product - HBAR / 2.0).abs() / (HBAR / 2.0) < 0.01);
    }

    #[test]
    fn spectral_derivative_of_plane_wave() {
        let g = grid();
        let k = 2.0 * std::f64::consts::PI * 40.0 / (g.len() as f64 * g.dx());
        let psi: Vec<Complex64> = g.xs().iter().map(|&x| Complex64::from_polar(1.0, k * x)).collect();
        let w = GridWave::new(g, psi.clone(), MASS, HBAR).unwrap();
        let d = w.derivative(&Spectral::new(g.len()));
        for (a, b) in d.iter().zip(&psi) {
            assert!((a - Complex64::new(0.0, k) * b).norm() < 1e-9);
        }
    }
}
