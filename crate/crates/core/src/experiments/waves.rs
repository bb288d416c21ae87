//! Experiments on grid waves: slits and screens, the eraser, guided
//! trajectories and free spreading.

use num_complex::Complex64;

use crate::bohm::{equilibrium_tv, packet_fractions, PacketComponent, SeparatingPackets};
use crate::branching::{Perception, SinglingPolicy};
use crate::error::{Error, Result};
use crate::gridwave::{
    ascending_wavenumbers, deposited_quanta, exposed_grains, far_field_amplitudes, fringe_visibility,
    gaussian_packet, gaussian_width, grain_exposure, screen_pattern, slit_mask, spread_estimate,
    uncertainty_product, FreePropagator, GrainArray, GrainSource, Grid1D, GridWave, ScreenMode, ScreenPattern,
    Spectral,
};
use crate::state::{Ket, LinearMap, SpaceShape};

use super::{run, within_3_sigma, Constants, ExperimentReport, ExperimentSpec, Params};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aperture {
    /// Gaussian transmission, σ = width/8, cut at the slit window.
    Gaussian,
    Rect,
}

/// Two identical slits on a periodic grid (ħ = m = 1, dx = 1). Slit centers
/// sit on samples `n/2 ∓ separation/2`, so the right slit is an exact shift of
/// the left one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlitGeometry {
    pub n: usize,
    pub separation: usize,
    pub width: usize,
    pub aperture: Aperture,
}

impl Default for SlitGeometry {
    fn default() -> Self {
        SlitGeometry { n: 2048, separation: 128, width: 64, aperture: Aperture::Gaussian }
    }
}

impl SlitGeometry {
    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::centered(self.n, 1.0)
    }

    /// Normalized single-slit waves just past the left and right slits.
    pub fn slit_waves(&self) -> Result<(GridWave, GridWave)> {
        if self.width == 0 || self.width > self.separation || !self.n.is_multiple_of(2 * self.separation) {
            return Err(Error::Contract(format!("unusable slit geometry {self:?}")));
        }
        let grid = self.grid()?;
        let incident = GridWave::new(grid, vec![Complex64::new(1.0, 0.0); self.n], 1.0, 1.0)?.normalized()?;
        let one = |center: usize| -> Result<GridWave> {
            let lo = center - self.width / 2;
            let (masked, _) = slit_mask(&incident, &[lo..lo + self.width])?;
            let sigma = self.width as f64 / 8.0;
            let psi = masked
                .psi()
                .iter()
                .enumerate()
                .map(|(i, z)| match self.aperture {
                    Aperture::Rect => *z,
                    Aperture::Gaussian => {
                        let u = (i as f64 - center as f64) / sigma;
                        z * (-0.5 * u * u).exp()
                    }
                })
                .collect();
            GridWave::new(grid, psi, 1.0, 1.0)?.normalized()
        };
        let half = self.separation / 2;
        Ok((one(self.n / 2 - half)?, one(self.n / 2 + half)?))
    }

    /// Sample offsets from the screen center where the two slits cancel:
    /// `±(n/2s)(2m + 1)` for `m < orders`, ascending.
    pub fn node_offsets(&self, orders: usize) -> Vec<i64> {
        let q = (self.n / (2 * self.separation)) as i64;
        let pos: Vec<i64> = (0..orders as i64).map(|m| q * (2 * m + 1)).collect();
        pos.iter().rev().map(|j| -j).chain(pos.iter().copied()).collect()
    }
}

fn aperture(p: &Params) -> Aperture {
    if p.str("aperture") == "rect" { Aperture::Rect } else { Aperture::Gaussian }
}

pub fn run_double_slit(grain_orders: u64, n_draws: u64, seed: u64) -> Result<ExperimentReport> {
    let spec = ExperimentSpec::new("run_double_slit", seed)
        .param("grain_orders", grain_orders)
        .param("n_draws", n_draws);
    run(&spec, &Constants::default())
}

pub(super) fn double_slit(p: &Params, seed: u64, _: &Constants) -> Result<ExperimentReport> {
    let geometry = SlitGeometry { aperture: aperture(p), ..SlitGeometry::default() };
    let orders = p.u64("grain_orders") as usize;
    let n_draws = p.u64("n_draws");
    let q = geometry.n / (2 * geometry.separation);
    if orders == 0 || (2 * orders + 1) * q >= geometry.n / 2 {
        return Err(Error::config("params.grain_orders", "grains would run past the screen edge"));
    }
    let (left, right) = geometry.slit_waves()?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let both: Vec<Complex64> = left.psi().iter().zip(right.psi()).map(|(a, b)| (a + b) * s).collect();
    let wave = GridWave::new(*left.grid(), both, 1.0, 1.0)?;
    let mode = ScreenMode::FarField { flight_time: 1.0, bins: geometry.n };
    let pattern = screen_pattern(&wave, mode)?;
    let single_l = screen_pattern(&left, mode)?;
    let single_r = screen_pattern(&right, mode)?;
    let reference: Vec<f64> = single_l.intensity.iter().zip(&single_r.intensity).map(|(a, b)| 0.5 * (a + b)).collect();
    let visibility = fringe_visibility(&pattern.intensity, &reference)?;

    // single-sample grains on the nodes, wide grains on the bright fringes between
    let center = geometry.n as i64 / 2;
    let nodes: Vec<usize> = geometry.node_offsets(orders + 1).iter().map(|j| (center + j) as usize).collect();
    let mut regions = Vec::new();
    let mut is_node = Vec::new();
    for (i, &node) in nodes.iter().enumerate() {
        regions.push(node..node + 1);
        is_node.push(true);
        if let Some(&next) = nodes.get(i + 1) {
            regions.push(node + 1..next);
            is_node.push(false);
        }
    }
    let grains = GrainArray::new(regions)?;
    let covered: f64 = grains.regions().iter().map(|r| pattern.intensity[r.clone()].iter().sum::<f64>()).sum();
    let bs = grain_exposure(GrainSource::Pattern(&pattern), &grains)?;
    let weights = bs.weights();
    let peak = weights.iter().copied().fold(0.0, f64::max);
    let max_node = weights.iter().zip(&is_node).filter(|(_, &n)| n).map(|(w, _)| *w).fold(0.0, f64::max);
    let one_each = bs.branches().iter().all(|b| exposed_grains(&b.label).len() == 1 && deposited_quanta(&b.label) == 1);
    let counts = Perception::new(&bs, &SinglingPolicy::Born)?.counts(n_draws, seed, 0)?;
    let counts_ok = counts.iter().zip(&weights).all(|(&c, &w)| within_3_sigma(c, n_draws, w));

    let mut r = ExperimentReport::new("run_double_slit", p);
    r.scalar("visibility", visibility);
    r.scalar("n_grains", grains.len() as f64);
    r.scalar("grain_coverage", covered);
    r.scalar("peak_grain_weight", peak);
    r.scalar("max_node_grain_weight", max_node);
    r.array("grain_weights", weights);
    r.array("grain_counts", counts.iter().map(|&c| c as f64).collect());
    r.array("node_grain", is_node.iter().map(|&n| f64::from(u8::from(n))).collect());
    r.verdict("one_grain_per_branch", one_each);
    r.verdict("node_grains_dark", max_node < 1e-3 * peak);
    r.verdict("grain_counts_within_3sigma", counts_ok);
    r.verdict("fringes_fully_visible", (visibility - 1.0).abs() <= 1e-9);
    r.pattern = Some(pattern);
    Ok(r)
}

/// Marker Gram matrix `⟨m_a|P|m_b⟩` for `a, b ∈ {L, R}`.
fn gram(markers: &[Ket; 2], projector: Option<&LinearMap>) -> Result<[[Complex64; 2]; 2]> {
    let projected = match projector {
        Some(p) => [p.apply_local(&["pol_2"], &markers[0])?.ket, p.apply_local(&["pol_2"], &markers[1])?.ket],
        None => markers.clone(),
    };
    let mut g = [[Complex64::new(0.0, 0.0); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            g[a][b] = projected[a].inner(&projected[b])?;
        }
    }
    Ok(g)
}

/// `Σ_ab conj(c_a) c_b G_ab` per screen sample, and the same without the
/// cross terms.
fn intensities(l: &[Complex64], r: &[Complex64], g: &[[Complex64; 2]; 2]) -> (Vec<f64>, Vec<f64>) {
    l.iter()
        .zip(r)
        .map(|(a, b)| {
            let direct = a.norm_sqr() * g[0][0].re + b.norm_sqr() * g[1][1].re;
            let cross = 2.0 * (a.conj() * b * g[0][1]).re;
            (direct + cross, direct)
        })
        .unzip()
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    v.iter().map(|x| x / total).collect()
}

fn polarizer(theta: f64) -> Result<LinearMap> {
    LinearMap::projector(&Ket::real("pol_2", &[theta.cos(), theta.sin()])?)
}

fn overlap(g: &[[Complex64; 2]; 2]) -> f64 {
    g[0][1].norm() / (g[0][0].re * g[1][1].re).sqrt()
}

pub fn run_quantum_eraser(variant: u8, cond_angle_deg: f64, screen_bins: u64) -> Result<ExperimentReport> {
    let spec = ExperimentSpec::new("run_quantum_eraser", 0)
        .param("variant", variant.to_string())
        .param("cond_angle_deg", cond_angle_deg)
        .param("screen_bins", screen_bins);
    run(&spec, &Constants::default())
}

pub(super) fn quantum_eraser(p: &Params, _: u64, _: &Constants) -> Result<ExperimentReport> {
    let variant: u8 = p.str("variant").parse().expect("validated choice");
    let theta = p.f64("cond_angle_deg").to_radians();
    let bins = p.u64("screen_bins") as usize;
    let geometry = SlitGeometry { aperture: aperture(p), ..SlitGeometry::default() };
    if bins == 0 || !geometry.n.is_multiple_of(bins) {
        return Err(Error::config("params.screen_bins", format!("must divide {}", geometry.n)));
    }

    let (left, right) = geometry.slit_waves()?;
    let spectral = Spectral::new(geometry.n);
    let l = far_field_amplitudes(&left, &spectral);
    let r = far_field_amplitudes(&right, &spectral);
    let centers = ascending_wavenumbers(left.grid());

    // which-path markers on the polarizations of the pair
    let pair = SpaceShape::new([("pol_1", 2), ("pol_2", 2)])?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let singlet = Ket::new(pair.clone(), [0.0, h, -h, 0.0].map(|x| Complex64::new(x, 0.0)).to_vec())?;
    let flipped = Ket::new(pair, [0.0, h, h, 0.0].map(|x| Complex64::new(x, 0.0)).to_vec())?;
    let markers = if variant == 1 { [singlet.clone(), singlet] } else { [singlet, flipped] };

    let g_all = gram(&markers, None)?;
    let (raw, raw_ref) = intensities(&l, &r, &g_all);
    let (pattern, reference) = (normalized(&raw), normalized(&raw_ref));
    let visibility = fringe_visibility(&pattern, &reference)?;
    let bin = |v: &[f64]| ScreenPattern::from_samples(centers.clone(), v.to_vec(), bins);

    let mut report = ExperimentReport::new("run_quantum_eraser", p);
    report.scalar("marker_overlap", overlap(&g_all));
    report.array("bin_centers", bin(&pattern)?.centers);
    report.array("reference", bin(&reference)?.intensity);

    if variant <= 2 {
        let max_dev = pattern.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        report.scalar("visibility", visibility);
        report.scalar("max_deviation_from_single_slit_sum", max_dev);
        report.verdict("visibility_matches_marker_overlap", (visibility - overlap(&g_all)).abs() <= 1e-9);
        if variant == 2 {
            report.verdict("pattern_equals_single_slit_sum", max_dev <= 1e-9);
        }
        let out = bin(&pattern)?;
        report.array("pattern", out.intensity.clone());
        report.pattern = Some(out);
        return Ok(report);
    }

    report.events = if variant == 3 {
        vec!["partner polarization measured".into(), "screen photon detected".into()]
    } else {
        vec!["screen photon detected".into(), "partner polarization measured".into()]
    };
    let total: f64 = raw.iter().sum();
    let conditioned = |angle: f64| -> Result<(Vec<f64>, f64, f64, f64)> {
        let g = gram(&markers, Some(&polarizer(angle)?))?;
        let (raw_c, ref_c) = intensities(&l, &r, &g);
        let fraction = raw_c.iter().sum::<f64>() / total;
        let pat = normalized(&raw_c);
        let vis = fringe_visibility(&pat, &normalized(&ref_c))?;
        Ok((pat, fraction, vis, overlap(&g)))
    };
    let (pat_a, frac_a, vis_a, ov_a) = conditioned(theta)?;
    let (pat_b, frac_b, vis_b, ov_b) = conditioned(theta + std::f64::consts::FRAC_PI_2)?;
    let max_err = pat_a
        .iter()
        .zip(&pat_b)
        .zip(&pattern)
        .map(|((a, b), u)| (frac_a * a + frac_b * b - u).abs())
        .fold(0.0, f64::max);

    report.scalar("visibility", vis_a);
    report.scalar("visibility_complement", vis_b);
    report.scalar("visibility_unconditioned", visibility);
    report.scalar("coincidence_fraction", frac_a);
    report.scalar("coincidence_fraction_complement", frac_b);
    report.scalar("max_decomposition_error", max_err);
    report.verdict("conditioned_visibility_matches_overlap", (vis_a - ov_a).abs() <= 1e-9);
    report.verdict("complement_visibility_matches_overlap", (vis_b - ov_b).abs() <= 1e-9);
    report.verdict("unconditioned_pattern_has_no_fringes", visibility <= 1e-9);
    report.verdict("conditioned_patterns_sum_to_unconditioned", max_err <= 1e-9);
    report.array("pattern_complement", bin(&pat_b)?.intensity);
    report.array("pattern_unconditioned", bin(&pattern)?.intensity);
    let out = bin(&pat_a)?;
    report.array("pattern", out.intensity.clone());
    report.pattern = Some(out);
    Ok(report)
}

/// Packets for `weights`, launched from one envelope with wavenumbers spread
/// evenly over `[-3, 3]` (ħ = m = 1, σ0 = 2, dx = 0.1, 2048 samples).
pub fn split_packets(weights: &[f64]) -> Result<SeparatingPackets> {
    let m = weights.len();
    let components = weights
        .iter()
        .enumerate()
        .map(|(i, w)| PacketComponent {
            amplitude: Complex64::new(w.sqrt(), 0.0),
            k: if m == 1 { 0.0 } else { 3.0 - 6.0 * i as f64 / (m - 1) as f64 },
        })
        .collect();
    Ok(SeparatingPackets {
        grid: Grid1D::centered(2048, 0.1)?,
        mass: 1.0,
        hbar: 1.0,
        x0: 0.0,
        sigma0: 2.0,
        components,
    })
}

pub fn run_bohm_paths(weights: &[f64], n_traj: u64, seed: u64) -> Result<ExperimentReport> {
    let spec = ExperimentSpec::new("run_bohm_paths", seed)
        .param("weights", weights.to_vec())
        .param("n_traj", n_traj);
    run(&spec, &Constants::default())
}

pub(super) fn bohm_paths(p: &Params, seed: u64, _: &Constants) -> Result<ExperimentReport> {
    let weights = p.numbers("weights");
    let n = p.u64("n_traj");
    let t_final = p.f64("t_final");
    let steps = p.u64("steps") as usize;
    if weights.is_empty() || weights.len() > 3 || weights.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::config("params.weights", "need one to three positive weights"));
    }
    if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::config("params.weights", "weights must sum to 1"));
    }
    if n == 0 {
        return Err(Error::config("params.n_traj", "need at least one trajectory"));
    }
    if steps == 0 {
        return Err(Error::config("params.steps", "need at least one step"));
    }
    let packets = split_packets(&weights)?;
    let result = packet_fractions(&packets, t_final, steps, n as usize, seed)?;
    let final_wave = FreePropagator::new(&packets.wave()?)?.at(t_final)?;
    let tv = equilibrium_tv(&final_wave, &result.ensemble.final_positions(), 10)?;
    let fractions_ok = result
        .fractions
        .iter()
        .zip(&result.expected)
        .all(|(f, w)| within_3_sigma((f * n as f64).round() as u64, n, *w));

    let mut r = ExperimentReport::new("run_bohm_paths", p);
    r.scalar("n_packets", weights.len() as f64);
    r.scalar("overlap_mass", result.overlap);
    r.scalar("equilibrium_tv", tv);
    r.array("fractions", result.fractions.clone());
    r.array("expected_fractions", result.expected.clone());
    r.verdict("fractions_within_3sigma", fractions_ok);
    r.verdict("equilibrium_tv_below_0_02", tv < 0.02);
    r.verdict("no_crossing", result.ensemble.order_preserved());
    Ok(r)
}

pub fn run_packet_spread(x0_m: f64, t_s: f64, mass_kg: f64, hbar: f64) -> Result<ExperimentReport> {
    let spec = ExperimentSpec::new("run_packet_spread", 0)
        .param("x0_m", x0_m)
        .param("t_s", t_s)
        .param("mass_kg", mass_kg);
    run(&spec, &Constants { hbar })
}

/// Largest grid the spreading run will allocate.
const MAX_SPREAD_GRID: usize = 1 << 22;

pub(super) fn packet_spread(p: &Params, _: u64, c: &Constants) -> Result<ExperimentReport> {
    let (x0, t, mass) = (p.f64("x0_m"), p.f64("t_s"), p.f64("mass_kg"));
    for (key, v) in [("x0_m", x0), ("mass_kg", mass)] {
        if !(v > 0.0) {
            return Err(Error::config(format!("params.{key}"), "must be positive"));
        }
    }
    if !(t >= 0.0) {
        return Err(Error::config("params.t_s", "must be non-negative"));
    }
    let estimate = spread_estimate(x0, t, mass, c.hbar);
    let exact = gaussian_width(x0, t, mass, c.hbar);

    // the same evolution in units σ0 = ħ = m = 1
    let tau = c.hbar * t / (mass * x0 * x0);
    let final_width = gaussian_width(1.0, tau, 1.0, 1.0);
    let dx = 0.5;
    let n = ((12.0 * final_width / 0.45 / dx).ceil() as usize).max(64).next_power_of_two();
    if n > MAX_SPREAD_GRID {
        return Err(Error::Contract(format!(
            "spreading by a factor {final_width:.3e} needs a grid of {n} samples"
        )));
    }
    let w0 = gaussian_packet(Grid1D::centered(n, dx)?, 0.0, 1.0, 0.0, 1.0, 1.0)?;
    let wt = FreePropagator::new(&w0)?.at(tau)?;
    let grid_width = wt.position_moments().1 * x0;
    let u0 = uncertainty_product(&w0)?;
    let ut = uncertainty_product(&wt)?;

    let mut r = ExperimentReport::new("run_packet_spread", p);
    r.scalar("hbar", c.hbar);
    r.scalar("estimate_m", estimate);
    r.scalar("exact_width_m", exact);
    r.scalar("grid_width_m", grid_width);
    r.scalar("exact_over_estimate", exact / estimate);
    r.scalar("dimensionless_time", tau);
    r.scalar("uncertainty_initial_over_half_hbar", u0.product / 0.5);
    r.scalar("uncertainty_final_over_half_hbar", ut.product / 0.5);
    r.verdict("grid_matches_exact_width", (grid_width - exact).abs() <= 1e-3 * exact);
    r.verdict("uncertainty_bound_holds", u0.product >= 0.5 * (1.0 - 1e-2) && ut.product >= 0.5 * (1.0 - 1e-2));
    r.verdict("exact_within_factor_2_of_estimate", exact / estimate <= 2.0 && estimate / exact <= 2.0);
    Ok(r)
}
