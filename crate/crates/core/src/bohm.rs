//! Bohmian trajectories guided by a freely evolving grid wave.
//!
//! The guidance velocity is the probability current over the density,
//! `v = (ħ/m)·Im(ψ*ψ′)/|ψ|²`. Positions start |ψ0|²-distributed and are
//! integrated with RK4 against velocity fields taken from the exactly
//! evolved wave at every stage time.

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gridwave::{FreePropagator, Grid1D, GridWave, Spectral};
use crate::rng;

/// Below this fraction of the peak density the velocity is set to zero.
pub const DENSITY_FLOOR: f64 = 1e-12;
/// RK4 steps between recorded snapshots.
pub const SUBSTEPS: usize = 8;
/// Largest probability one packet may leave in another's support.
pub const SEPARATION_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    grid: Grid1D,
    v: Vec<f64>,
    inv_dx: f64,
}

impl VelocityField {
    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// Linear interpolation; `None` outside the sampled interval.
    #[inline]
    pub fn at(&self, x: f64) -> Option<f64> {
        let s = (x - self.grid.origin()) * self.inv_dx;
        if !(s >= 0.0) {
            return None;
        }
        let i = s as usize;
        let (a, b) = (*self.v.get(i)?, *self.v.get(i + 1)?);
        Some(a + (b - a) * (s - i as f64))
    }
}

fn velocity_with(w: &GridWave, spectral: &Spectral) -> VelocityField {
    let d = w.derivative(spectral);
    let rho = w.density();
    let floor = DENSITY_FLOOR * rho.iter().copied().fold(0.0, f64::max);
    let scale = w.hbar() / w.mass();
    let v = w
        .psi()
        .iter()
        .zip(&d)
        .zip(&rho)
        .map(|((p, dp), r)| if *r < floor || *r == 0.0 { 0.0 } else { scale * (p.conj() * dp).im / r })
        .collect();
    VelocityField { grid: *w.grid(), v, inv_dx: 1.0 / w.grid().dx() }
}

/// Guidance velocity of a normalized wave.
pub fn velocity_field(w: &GridWave) -> Result<VelocityField> {
    if !w.is_normalized() {
        return Err(Error::Contract("velocity field needs a normalized wave".into()));
    }
    Ok(velocity_with(w, &Spectral::new(w.grid().len())))
}

/// `n` positions drawn i.i.d. from `|ψ|²`, treating the density as constant
/// over each sample's cell `[x_i − dx/2, x_i + dx/2)`.
pub fn sample_positions(w: &GridWave, n: usize, seed: u64) -> Vec<f64> {
    let rho = w.density();
    let mut acc = 0.0;
    let cumulative: Vec<f64> = rho
        .iter()
        .map(|r| {
            acc += r;
            acc
        })
        .collect();
    let total = acc;
    let grid = w.grid();
    let mut rng = rng::stream(seed, 0);
    (0..n)
        .map(|_| {
            let target = rng::unit(&mut rng) * total;
            let i = cumulative.partition_point(|&c| c <= target).min(rho.len() - 1);
            let below = if i == 0 { 0.0 } else { cumulative[i - 1] };
            let frac = if rho[i] > 0.0 { ((target - below) / rho[i]).clamp(0.0, 1.0) } else { 0.5 };
            grid.x(i) - 0.5 * grid.dx() + frac * grid.dx()
        })
        .collect()
}

/// Recorded trajectories: `positions[trajectory][time index]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
}

impl TrajectoryEnsemble {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn at_time(&self, index: usize) -> Vec<f64> {
        self.positions.iter().map(|p| p[index]).collect()
    }

    pub fn final_positions(&self) -> Vec<f64> {
        self.at_time(self.times.len() - 1)
    }

    /// Trajectory indices sorted by position at a time index (stable).
    pub fn order_at(&self, index: usize) -> Vec<usize> {
        let xs = self.at_time(index);
        let mut idx: Vec<usize> = (0..xs.len()).collect();
        idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(a.cmp(&b)));
        idx
    }

    /// True when the sort order of trajectories is the same at every time.
    pub fn order_preserved(&self) -> bool {
        let first = self.order_at(0);
        (1..self.times.len()).all(|t| self.order_at(t) == first)
    }

    /// CSV with header `t_s,traj_0_m,…`, one row per recorded time.
    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        write!(out, "t_s")?;
        for i in 0..self.positions.len() {
            write!(out, ",traj_{i}_m")?;
        }
        writeln!(out)?;
        for (ti, t) in self.times.iter().enumerate() {
            write!(out, "{t:e}")?;
            for p in &self.positions {
                write!(out, ",{:e}", p[ti])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn interp(field: &VelocityField, x: f64) -> Result<f64> {
    field
        .at(x)
        .ok_or_else(|| Error::Integration(format!("trajectory left the grid at x = {x:e}")))
}

fn rk4_step(x: f64, h: f64, v0: &VelocityField, vh: &VelocityField, v1: &VelocityField) -> Result<f64> {
    let k1 = interp(v0, x)?;
    let k2 = interp(vh, x + 0.5 * h * k1)?;
    let k3 = interp(vh, x + 0.5 * h * k2)?;
    let k4 = interp(v1, x + h * k3)?;
    Ok(x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
}

/// Advects `n_traj` |ψ0|²-distributed positions to `t_final`, recording
/// `steps + 1` snapshots with [`SUBSTEPS`] RK4 steps between snapshots.
pub fn advect(w0: &GridWave, t_final: f64, steps: usize, n_traj: usize, seed: u64) -> Result<TrajectoryEnsemble> {
    if steps == 0 || n_traj == 0 {
        return Err(Error::Contract("need at least one step and one trajectory".into()));
    }
    if !(t_final.is_finite() && t_final >= 0.0) {
        return Err(Error::Contract(format!("t_final must be finite and ≥ 0, got {t_final}")));
    }
    let propagator = FreePropagator::new(w0)?;
    let spectral = propagator.spectral().clone();
    let field_at = |t: f64| -> Result<VelocityField> { Ok(velocity_with(&propagator.at(t)?, &spectral)) };

    let total = steps * SUBSTEPS;
    let h = t_final / total as f64;
    let mut x = sample_positions(w0, n_traj, seed);
    let mut positions: Vec<Vec<f64>> = x
        .iter()
        .map(|&x0| {
            let mut row = Vec::with_capacity(steps + 1);
            row.push(x0);
            row
        })
        .collect();
    let mut times = Vec::with_capacity(steps + 1);
    times.push(0.0);

    let mut v0 = field_at(0.0)?;
    for step in 0..total {
        let t = step as f64 * h;
        let vh = field_at(t + 0.5 * h)?;
        let v1 = field_at(t + h)?;
        x.par_chunks_mut(256).try_for_each(|chunk| -> Result<()> {
            for xi in chunk {
                *xi = rk4_step(*xi, h, &v0, &vh, &v1)?;
            }
            Ok(())
        })?;
        v0 = v1;
        if (step + 1) % SUBSTEPS == 0 {
            times.push((step + 1) as f64 * h);
            for (row, xi) in positions.iter_mut().zip(&x) {
                row.push(*xi);
            }
        }
    }
    Ok(TrajectoryEnsemble { times, positions })
}

/// Total variation distance between the empirical distribution of
/// `positions` and `|ψ|²`, over `bins` bins that are equiprobable under `|ψ|²`
/// (density constant over each sample's cell).
pub fn equilibrium_tv(w: &GridWave, positions: &[f64], bins: usize) -> Result<f64> {
    if bins < 2 || positions.is_empty() {
        return Err(Error::Contract("need at least two bins and one position".into()));
    }
    let rho = w.density();
    let total: f64 = rho.iter().sum();
    let grid = w.grid();
    let mut edges = Vec::with_capacity(bins - 1);
    let mut acc = 0.0;
    let mut q = 1;
    for (i, r) in rho.iter().enumerate() {
        while q < bins && acc + r >= total * q as f64 / bins as f64 {
            let frac = if *r > 0.0 { (total * q as f64 / bins as f64 - acc) / r } else { 0.0 };
            edges.push(grid.x(i) - 0.5 * grid.dx() + frac * grid.dx());
            q += 1;
        }
        acc += r;
    }
    let mut counts = vec![0usize; bins];
    for x in positions {
        counts[edges.partition_point(|e| e <= x)] += 1;
    }
    let n = positions.len() as f64;
    Ok(0.5 * counts.iter().map(|&c| (c as f64 / n - 1.0 / bins as f64).abs()).sum::<f64>())
}

/// One Gaussian component `a·g(x)·e^{ikx}` of a superposition that splits
/// into separately moving packets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketComponent {
    pub amplitude: Complex64,
    pub k: f64,
}

/// Components sharing one initial envelope centered at `x0` with width
/// `sigma0`, as in a beam split by momentum.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatingPackets {
    pub grid: Grid1D,
    pub mass: f64,
    pub hbar: f64,
    pub x0: f64,
    pub sigma0: f64,
    pub components: Vec<PacketComponent>,
}

impl SeparatingPackets {
    fn component_wave(&self, k: f64) -> Result<GridWave> {
        crate::gridwave::gaussian_packet(self.grid, self.x0, self.sigma0, k, self.mass, self.hbar)
    }

    /// The normalized superposition at `t = 0`.
    pub fn wave(&self) -> Result<GridWave> {
        if self.components.is_empty() {
            return Err(Error::Contract("no packet components".into()));
        }
        let mut psi = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        for c in &self.components {
            let w = self.component_wave(c.k)?;
            for (s, z) in psi.iter_mut().zip(w.psi()) {
                *s += c.amplitude * z;
            }
        }
        GridWave::new(self.grid, psi, self.mass, self.hbar)?.normalized()
    }

    /// `|a_i|² / Σ|a|²`.
    pub fn expected_fractions(&self) -> Vec<f64> {
        let total: f64 = self.components.iter().map(|c| c.amplitude.norm_sqr()).sum();
        self.components.iter().map(|c| c.amplitude.norm_sqr() / total).collect()
    }

    /// Sample-wise owner of each grid point at `t` (the component with the
    /// largest unweighted density) and the largest mass any component leaves
    /// outside its own support.
    pub fn supports_at(&self, t: f64) -> Result<(Vec<usize>, f64)> {
        let densities = self
            .components
            .iter()
            .map(|c| Ok(FreePropagator::new(&self.component_wave(c.k)?)?.at(t)?.density()))
            .collect::<Result<Vec<_>>>()?;
        let owner: Vec<usize> = (0..self.grid.len())
            .map(|x| {
                (0..densities.len())
                    .max_by(|&a, &b| densities[a][x].total_cmp(&densities[b][x]).then(b.cmp(&a)))
                    .expect("non-empty")
            })
            .collect();
        let overlap = densities
            .iter()
            .enumerate()
            .map(|(i, d)| {
                d.iter().zip(&owner).filter(|(_, &o)| o != i).map(|(r, _)| r).sum::<f64>() * self.grid.dx()
            })
            .fold(0.0, f64::max);
        Ok((owner, overlap))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathFractions {
    /// Fraction of trajectories ending in each packet's support.
    pub fractions: Vec<f64>,
    /// `|a_i|²`, normalized.
    pub expected: Vec<f64>,
    pub overlap: f64,
    pub ensemble: TrajectoryEnsemble,
}

/// Fraction of Bohmian trajectories that end in each packet.
pub fn packet_fractions(
    packets: &SeparatingPackets,
    t_final: f64,
    steps: usize,
    n_traj: usize,
    seed: u64,
) -> Result<PathFractions> {
    let (owner, overlap) = packets.supports_at(t_final)?;
    if overlap > SEPARATION_LIMIT {
        return Err(Error::Separation { overlap, limit: SEPARATION_LIMIT });
    }
    let ensemble = advect(&packets.wave()?, t_final, steps, n_traj, seed)?;
    let grid = packets.grid;
    let mut counts = vec![0usize; packets.components.len()];
    for x in ensemble.final_positions() {
        let i = (((x - grid.origin()) / grid.dx()).round() as usize).min(grid.len() - 1);
        counts[owner[i]] += 1;
    }
    Ok(PathFractions {
        fractions: counts.iter().map(|&c| c as f64 / n_traj as f64).collect(),
        expected: packets.expected_fractions(),
        overlap,
        ensemble,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridwave::{evolve_free, gaussian_packet, gaussian_width};

    fn grid() -> Grid1D {
        Grid1D::centered(1024, 0.1).unwrap()
    }

    #[test]
    fn plane_wave_velocity() {
        let g = grid();
        let k = 2.0 * std::f64::consts::PI * 12.0 / (g.len() as f64 * g.dx());
        let psi = g.xs().iter().map(|&x| Complex64::from_polar(1.0, k * x)).collect();
        let w = GridWave::new(g, psi, 2.0, 1.0).unwrap().normalized().unwrap();
        let v = velocity_field(&w).unwrap();
        assert!(v.values().iter().all(|&u| (u - k / 2.0).abs() < 1e-9));
    }

    #[test]
    fn real_packet_has_zero_velocity() {
        let w = gaussian_packet(grid(), 0.0, 3.0, 0.0, 1.0, 1.0).unwrap();
        let v = velocity_field(&w).unwrap();
        assert!(v.values().iter().all(|u| u.abs() < 1e-9));
    }

    #[test]
    fn spreading_gaussian_flow() {
        let (sigma0, t) = (3.0, 4.0);
        let w = evolve_free(&gaussian_packet(grid(), 0.0, sigma0, 0.0, 1.0, 1.0).unwrap(), t).unwrap();
        let v = velocity_field(&w).unwrap();
        // σ̇/σ = τ'²t/(1 + τ'²t²), τ' = ħ/(2mσ0²)
        let tau = 1.0 / (2.0 * sigma0 * sigma0);
        let rate = tau * tau * t / (1.0 + tau * tau * t * t);
        assert!((gaussian_width(sigma0, t, 1.0, 1.0) - w.position_moments().1).abs() < 1e-6);
        for i in (400..624).step_by(8) {
            let x = grid().x(i);
            assert!((v.values()[i] - x * rate).abs() < 1e-7, "x={x}");
        }
    }

    #[test]
    fn standing_wave_has_no_flow() {
        let g = grid();
        let k = 2.0 * std::f64::consts::PI * 6.0 / (g.len() as f64 * g.dx());
        let psi = g.xs().iter().map(|&x| Complex64::new((k * x).cos() + 0.0, 0.0)).collect();
        let w = GridWave::new(g, psi, 1.0, 1.0).unwrap().normalized().unwrap();
        let p = FreePropagator::new(&w).unwrap();
        for t in [0.0, 1.0, 7.5] {
            let v = velocity_with(&p.at_unchecked(t), p.spectral());
            assert!(v.values().iter().all(|u| u.abs() < 1e-6), "t={t}");
        }
    }

    #[test]
    fn heavy_packet_barely_moves() {
        let w = gaussian_packet(grid(), 0.0, 3.0, 0.0, 1e6, 1.0).unwrap();
        let e = advect(&w, 10.0, 5, 200, 1).unwrap();
        for p in &e.positions {
            assert!(p.iter().all(|x| (x - p[0]).abs() < 1e-9));
        }
    }

    #[test]
    fn samples_are_in_equilibrium() {
        let w = gaussian_packet(grid(), 5.0, 3.0, 0.0, 1.0, 1.0).unwrap();
        let xs = sample_positions(&w, 20_000, 11);
        assert!(equilibrium_tv(&w, &xs, 10).unwrap() < 0.02);
        let shifted: Vec<f64> = xs.iter().map(|x| x + 3.0).collect();
        assert!(equilibrium_tv(&w, &shifted, 10).unwrap() > 0.2);
    }

    #[test]
    fn sampling_is_deterministic() {
        let w = gaussian_packet(grid(), 0.0, 3.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(sample_positions(&w, 50, 4), sample_positions(&w, 50, 4));
        assert_ne!(sample_positions(&w, 50, 4), sample_positions(&w, 50, 5));
    }

    #[test]
    fn leaving_grid_is_an_integration_error() {
        let w = gaussian_packet(grid(), 30.0, 2.0, 20.0, 1.0, 1.0).unwrap();
        let err = advect(&w, 2.0, 4, 10, 1).unwrap_err();
        assert!(matches!(err, Error::Integration(_) | Error::DispersionOverflow { .. }), "{err:?}");
    }

    #[test]
    fn overlapping_packets_rejected() {
        let p = SeparatingPackets {
            grid: grid(),
            mass: 1.0,
            hbar: 1.0,
            x0: 0.0,
            sigma0: 3.0,
            components: vec![
                PacketComponent { amplitude: Complex64::new(0.5f64.sqrt(), 0.0), k: 0.5 },
                PacketComponent { amplitude: Complex64::new(0.5f64.sqrt(), 0.0), k: -0.5 },
            ],
        };
        assert!(matches!(packet_fractions(&p, 1.0, 4, 10, 1), Err(Error::Separation { .. })));
    }

    #[test]
    fn csv_layout() {
        let e = TrajectoryEnsemble { times: vec![0.0, 1.0], positions: vec![vec![0.5, 0.25], vec![1.0, 2.0]] };
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().next().unwrap(), "t_s,traj_0_m,traj_1_m");
        assert_eq!(s.lines().count(), 3);
    }
}


