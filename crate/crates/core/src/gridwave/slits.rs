use std::io::{self, Write};
use std::ops::Range;

use num_complex::Complex64;

use crate::error::{Error, Result};

use super::{evolve_free, Grid1D, GridWave, Spectral};

/// Transmitted fractions below this count as no transmission.
const MIN_TRANSMISSION: f64 = 1e-12;

/// Zeroes `ψ` outside the slits and renormalizes. Returns the masked wave and
/// the probability that was inside the slits.
pub fn slit_mask(w: &GridWave, slits: &[Range<usize>]) -> Result<(GridWave, f64)> {
    let n = w.grid().len();
    if slits.is_empty() {
        return Err(Error::Contract("at least one slit is required".into()));
    }
    let mut open = vec![false; n];
    for s in slits {
        if s.start >= s.end || s.end > n {
            return Err(Error::Contract(format!("slit {s:?} is empty or outside 0..{n}")));
        }
        open[s.clone()].iter_mut().for_each(|o| *o = true);
    }
    let total = w.norm_sqr();
    let psi: Vec<Complex64> = w
        .psi()
        .iter()
        .zip(&open)
        .map(|(z, &o)| if o { *z } else { Complex64::new(0.0, 0.0) })
        .collect();
    let masked = w.with_psi(psi);
    let fraction = masked.norm_sqr() / total;
    if fraction < MIN_TRANSMISSION {
        return Err(Error::PostSelection(format!(
            "slits transmit a fraction {fraction:.3e} of the wave"
        )));
    }
    Ok((masked.normalized()?, fraction))
}

/// How the screen intensity is formed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScreenMode {
    /// Fraunhofer regime: `|FFT ψ|²`, with wavenumber `k` landing at screen
    /// position `(ħk/m)·flight_time`. `bins` consecutive-sample groups; it
    /// must divide the grid size.
    FarField { flight_time: f64, bins: usize },
    /// Free evolution for `t`, then `|ψ(x)|²` at grid positions.
    Evolve { t: f64, bins: usize },
}

/// Normalized intensity per screen bin, bins in ascending position.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenPattern {
    pub centers: Vec<f64>,
    pub intensity: Vec<f64>,
}

impl ScreenPattern {
    pub fn len(&self) -> usize {
        self.intensity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intensity.is_empty()
    }

    pub fn peak(&self) -> f64 {
        self.intensity.iter().copied().fold(0.0, f64::max)
    }

    /// CSV with header `bin_center_m,intensity`.
    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "bin_center_m,intensity")?;
        for (c, i) in self.centers.iter().zip(&self.intensity) {
            writeln!(out, "{c:e},{i:e}")?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }
}

impl ScreenPattern {
    /// Sums `raw` samples into `bins` equal consecutive groups (which must
    /// divide the sample count) and normalizes the total to one. Bin centers
    /// are the mean sample position of each group.
    pub fn from_samples(centers: Vec<f64>, raw: Vec<f64>, bins: usize) -> Result<ScreenPattern> {
        let n = raw.len();
        if centers.len() != n {
            return Err(Error::Composition(format!("{} centers for {n} samples", centers.len())));
        }
        if bins == 0 || !n.is_multiple_of(bins) {
            return Err(Error::Contract(format!("{bins} bins do not divide {n} samples")));
        }
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Contract("pattern carries no intensity".into()));
        }
        let width = n / bins;
        let intensity = raw.chunks_exact(width).map(|c| c.iter().sum::<f64>() / total).collect();
        let centers = centers.chunks_exact(width).map(|c| c.iter().sum::<f64>() / width as f64).collect();
        Ok(ScreenPattern { centers, intensity })
    }
}

/// Grid wavenumbers sorted ascending (negative half first).
pub fn ascending_wavenumbers(grid: &Grid1D) -> Vec<f64> {
    let ks = grid.wavenumbers();
    let n = ks.len();
    (n / 2..n).chain(0..n / 2).map(|j| ks[j]).collect()
}

/// Momentum amplitudes in the order of [`ascending_wavenumbers`].
pub fn far_field_amplitudes(w: &GridWave, spectral: &Spectral) -> Vec<Complex64> {
    let phi = w.momentum_amplitudes(spectral);
    let n = phi.len();
    (n / 2..n).chain(0..n / 2).map(|j| phi[j]).collect()
}

pub fn screen_pattern(w: &GridWave, mode: ScreenMode) -> Result<ScreenPattern> {
    if !w.is_normalized() {
        return Err(Error::Contract("screen pattern needs a normalized wave".into()));
    }
    match mode {
        ScreenMode::FarField { flight_time, bins } => {
            let phi = far_field_amplitudes(w, &Spectral::new(w.grid().len()));
            let centers = ascending_wavenumbers(w.grid())
                .into_iter()
                .map(|k| w.hbar() * k / w.mass() * flight_time)
                .collect();
            ScreenPattern::from_samples(centers, phi.iter().map(|z| z.norm_sqr()).collect(), bins)
        }
        ScreenMode::Evolve { t, bins } => {
            let e = evolve_free(w, t)?;
            ScreenPattern::from_samples(e.grid().xs(), e.density(), bins)
        }
    }
}

/// Envelope-normalized fringe visibility.
///
/// `reference` is the pattern without interference (the incoherent sum of
/// the single-slit patterns). Over bins where the reference holds at least
/// `1e-6` of its peak, `r = pattern / reference` and the visibility is
/// `(max r − min r)/(max r + min r)`. For equal slit amplitudes this equals
/// the overlap of the which-path markers.
pub fn fringe_visibility(pattern: &[f64], reference: &[f64]) -> Result<f64> {
    if pattern.len() != reference.len() || pattern.is_empty() {
        return Err(Error::Composition("pattern and reference lengths differ".into()));
    }
    let peak = reference.iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(Error::Contract("reference pattern is empty".into()));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (p, r) in pattern.iter().zip(reference) {
        if *r >= 1e-6 * peak {
            let ratio = p / r;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }
    if hi + lo == 0.0 {
        return Ok(0.0);
    }
    Ok((hi - lo) / (hi + lo))
}
