//! Experiments on finite-dimensional systems: polarizers, spin magnets,
//! memory devices, entangled pairs and interferometer paths.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use num_complex::Complex64;

use crate::branching::{
    decompose, many_minds_joint, measure_entangle, with_ready_register, BranchSet, MindsMode, Perception,
    PointerCoupling, RepeatedRuns, SinglingPolicy,
};
use crate::error::{Error, Result};
use crate::rng;
use crate::state::{Ket, LinearMap, SpaceShape};

use super::{run, sums_to_one, within_3_sigma, Constants, ExperimentReport, ExperimentSpec, Params};

fn weight_of(bs: &BranchSet, indices: &[usize]) -> f64 {
    bs.find(indices).map_or(0.0, |b| b.weight())
}

fn real_unitary(name: &str, d: usize, m: &[f64]) -> Result<LinearMap> {
    LinearMap::square(
        SpaceShape::single(name, d)?,
        m.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        true,
    )
}

fn transpose(m: &[f64], d: usize) -> Vec<f64> {
    (0..d * d).map(|i| m[(i % d) * d + i / d]).collect()
}

pub fn run_polarization(theta_deg: f64, n_photons: u64, seed: u64) -> Result<ExperimentReport> {
    let spec = ExperimentSpec::new("run_polarization", seed)
        .param("theta_deg", theta_deg)
        .param("n_photons", n_photons);
    run(&spec, &Constants::default())
}

pub(super) fn polarization(p: &Params, seed: u64, _: &Constants) -> Result<ExperimentReport> {
    let theta = p.f64("theta_deg").to_radians();
    let n = p.u64("n_photons");
    if n == 0 {
        return Err(Error::config("params.n_photons", "need at least one photon"));
    }
    // photon polarization on (x, y); the polarizer passes x
    let photon = Ket::real("photon", &[theta.cos(), theta.sin()])?;
    let state = with_ready_register(&photon, "detector", 2)?;
    let state = measure_entangle(&state, &PointerCoupling::flag("photon", 0, "detector"))?;
    let bs = decompose(&state, &["detector"])?;
    let weights = [weight_of(&bs, &[0]), weight_of(&bs, &[1])];

    let counts = Perception::new(&bs, &SinglingPolicy::Born)?.counts(n, seed, 0)?;
    let passed: u64 = bs
        .branches()
        .iter()
        .zip(&counts)
        .filter(|(b, _)| b.label.indices() == [1])
        .map(|(_, c)| c)
        .sum();

    let mut r = ExperimentReport::new("run_polarization", p);
    r.scalar("pass_probability", weights[1]);
    r.scalar("pass_count", passed as f64);
    r.scalar("expected_pass_count", n as f64 * weights[1]);
    r.scalar("pass_fraction", passed as f64 / n as f64);
    r.array("branch_weights", weights.to_vec());
    r.verdict("pass_count_within_3sigma", within_3_sigma(passed, n, weights[1]));
    r.verdict("weights_sum_to_one", sums_to_one(&weights));
    Ok(r)
}

/// Wigner small-d matrix `d^j(θ)` for `dim = 2j + 1 ∈ {2, 3}`, row-major with
/// rows and columns ordered from `m = +j` down.
pub fn wigner_d(dim: usize, theta: f64) -> Result<Vec<f64>> {
    let (c, s) = (theta.cos(), theta.sin());
    match dim {
        2 => {
            let (ch, sh) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            Ok(vec![ch, -sh, sh, ch])
        }
        3 => {
            let r = s * FRAC_1_SQRT_2;
            Ok(vec![
                (1.0 + c) / 2.0, -r, (1.0 - c) / 2.0,
                r, c, -r,
                (1.0 - c) / 2.0, r, (1.0 + c) / 2.0,
            ])
        }
        _ => Err(Error::Contract(format!("only spin ½ and spin 1 are supported, got dimension {dim}"))),
    }
}

pub fn run_stern_gerlach(amplitudes: &[f64], chain_deg: &[f64], seed: u64) -> Result<ExperimentReport> {
    let spec = ExperimentSpec::new("run_stern_gerlach", seed)
        .param("amplitudes", amplitudes.to_vec())
        .param("chain_deg", chain_deg.to_vec());
    run(&spec, &Constants::default())
}

pub(super) fn stern_gerlach(p: &Params, seed: u64, _: &Constants) -> Result<ExperimentReport> {
    let amps = p.numbers("amplitudes");
    let chain: Vec<f64> = p.numbers("chain_deg").into_iter().map(f64::to_radians).collect();
    let n_runs = p.u64("n_runs");
    let d = amps.len();
    if !(d == 2 || d == 3) {
        return Err(Error::config("params.amplitudes", "need 2 (spin ½) or 3 (spin 1) amplitudes"));
    }
    let norm: f64 = amps.iter().map(|a| a * a).sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::config("params.amplitudes", format!("squared amplitudes sum to {norm}, not 1")));
    }
    if chain.is_empty() || chain.len() > 4 {
        return Err(Error::config("params.chain_deg", "need between 1 and 4 magnets"));
    }

    let mut state = Ket::real("spin", &amps)?;
    let mut pointer = Vec::new();
    for (i, &theta) in chain.iter().enumerate() {
        let (det, obs) = (format!("detector_{i}"), format!("observer_{i}"));
        state = with_ready_register(&state, &det, d)?;
        state = with_ready_register(&state, &obs, d)?;
        // measuring along an axis tilted by θ: rotate its eigenbasis onto the
        // standard one, record, rotate back
        let rot = wigner_d(d, theta)?;
        state = real_unitary("spin", d, &transpose(&rot, d))?.apply_local(&["spin"], &state)?.ket;
        state = measure_entangle(&state, &PointerCoupling::record("spin", det.as_str()))?;
        state = real_unitary("spin", d, &rot)?.apply_local(&["spin"], &state)?.ket;
        state = measure_entangle(&state, &PointerCoupling::record(det.as_str(), obs.as_str()))?;
        pointer.push(det);
        pointer.push(obs);
    }
    let names: Vec<&str> = pointer.iter().map(String::as_str).collect();
    let bs = decompose(&state, &names)?;

    let first_rot = wigner_d(d, chain[0])?;
    let expected_first: Vec<f64> = (0..d)
        .map(|m| (0..d).map(|k| first_rot[k * d + m] * amps[k]).sum::<f64>().powi(2))
        .collect();
    let mut first = vec![0.0; d];
    for b in bs.branches() {
        first[b.label.indices()[0]] += b.weight();
    }
    let same_axis_ok = bs.branches().iter().all(|b| {
        let idx = b.label.indices();
        (1..chain.len()).all(|i| (chain[i] - chain[i - 1]).abs() > 1e-12 || idx[2 * i] == idx[2 * i - 2])
    });
    let observers_ok = bs.branches().iter().all(|b| b.label.indices().chunks(2).all(|c| c[0] == c[1]));

    let weights = bs.weights();
    let counts = Perception::new(&bs, &SinglingPolicy::Born)?.counts(n_runs, seed, 0)?;
    let counts_ok = counts.iter().zip(&weights).all(|(&c, &w)| within_3_sigma(c, n_runs, w));

    let mut r = ExperimentReport::new("run_stern_gerlach", p);
    r.scalar("n_branches", bs.len() as f64);
    r.array("branch_weights", weights.clone());
    r.array("first_record_probabilities", first.clone());
    r.array("perceived_counts", counts.iter().map(|&c| c as f64).collect());
    r.verdict(
        "first_record_matches_amplitudes",
        first.iter().zip(&expected_first).all(|(a, b)| (a - b).abs() <= 1e-10),
    );
    r.verdict("same_axis_records_agree", same_axis_ok);
    r.verdict("observers_agree_with_detectors", observers_ok);
    r.verdict("weights_sum_to_one", sums_to_one(&weights));
    r.verdict("perceived_counts_within_3sigma", counts_ok);
    Ok(r)
}

pub fn run_schrodinger_cat(p_decay: f64, n_runs: u64, seed: u64) -> Result<ExperimentReport> {
    let spec = ExperimentSpec::new("run_schrodinger_cat", seed)
        .param("p_decay", p_decay)
        .param("n_runs", n_runs);
    run(&spec, &Constants::default())
}

pub(super) fn schrodinger_cat(p: &Params, seed: u64, _: &Constants) -> Result<ExperimentReport> {
    let p_decay = p.f64("p_decay");
    let n = p.u64("n_runs");
    if !(0.0..=1.0).contains(&p_decay) {
        return Err(Error::config("params.p_decay", format!("must lie in [0, 1], got {p_decay}")));
    }
    if n == 0 {
        return Err(Error::config("params.n_runs", "need at least one run"));
    }
    let atom = Ket::real("atom", &[(1.0 - p_decay).sqrt(), p_decay.sqrt()])?;
    let state = with_ready_register(&atom, "memory", 2)?;
    let state = with_ready_register(&state, "observer", 2)?;
    let state = measure_entangle(&state, &PointerCoupling::record("atom", "memory"))?;
    let state = measure_entangle(&state, &PointerCoupling::record("memory", "observer"))?;
    let bs = decompose(&state, &["memory", "observer"])?;

    let perception = Perception::new(&bs, &SinglingPolicy::Born)?;
    let mut rng = rng::stream(seed, 0);
    let (mut ones, mut single, mut agree) = (0u64, true, true);
    for _ in 0..n {
        let label = perception.draw(&mut rng);
        let (memory, observer) = (label.get("memory"), label.get("observer"));
        single &= label.indices().len() == 2 && matches!(memory, Some(0 | 1));
        agree &= memory == observer;
        ones += u64::from(memory == Some(1));
    }

    let mut r = ExperimentReport::new("run_schrodinger_cat", p);
    r.scalar("ones_count", ones as f64);
    r.scalar("zeros_count", (n - ones) as f64);
    r.scalar("expected_ones", n as f64 * p_decay);
    r.scalar("n_branches", bs.len() as f64);
    r.array("branch_weights", vec![weight_of(&bs, &[0, 0]), weight_of(&bs, &[1, 1])]);
    r.verdict("ones_within_3sigma", within_3_sigma(ones, n, p_decay));
    r.verdict("single_outcome_every_run", single);
    r.verdict("observer_agrees_with_memory", agree);
    Ok(r)
}

pub fn run_repeated_runs(p_one: f64, runs: u64, trials: u64, seed: u64) -> Result<ExperimentReport> {
    let spec = ExperimentSpec::new("run_repeated_runs", seed)
        .param("p_one", p_one)
        .param("runs", runs)
        .param("trials", trials);
    run(&spec, &Constants::default())
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

pub(super) fn repeated_runs(p: &Params, seed: u64, _: &Constants) -> Result<ExperimentReport> {
    let p_one = p.f64("p_one");
    let runs = p.u64("runs");
    let trials = p.u64("trials");
    if !(p_one > 0.0 && p_one < 1.0) {
        return Err(Error::config("params.p_one", format!("must lie strictly between 0 and 1, got {p_one}")));
    }
    if !(1..=16).contains(&runs) {
        return Err(Error::config("params.runs", format!("must lie in 1..=16, got {runs}")));
    }
    if trials == 0 {
        return Err(Error::config("params.trials", "need at least one trial"));
    }
    let bs = BranchSet::from_weights("outcome", &[p_one, 1.0 - p_one])?;
    let rr = RepeatedRuns::new(&bs, runs as u32)?;
    let n_sequences = rr.sequences().len();
    let half = rr.count_with(1, (runs / 2) as usize);
    let all_ones = vec![0; runs as usize];
    let p_all = rr.sequence_probability(&all_ones);
    let sampled = rr.sampled_fraction(&all_ones, trials, seed)?;
    let hits = (sampled * trials as f64).round() as u64;

    let mut r = ExperimentReport::new("run_repeated_runs", p);
    r.scalar("n_sequences", n_sequences as f64);
    r.scalar("sequences_with_half_outcome_2", half as f64);
    r.scalar("p_all_ones", p_all);
    r.scalar("sampled_all_ones", sampled);
    r.verdict("sequence_count_is_power_of_two", n_sequences as u64 == 1u64 << runs);
    r.verdict("half_count_is_binomial", half as u64 == binomial(runs, runs / 2));
    r.verdict("all_ones_within_3sigma", within_3_sigma(hits, trials, p_all));
    Ok(r)
}

fn singlet() -> Result<Ket> {
    let shape = SpaceShape::new([("pol_1", 2), ("pol_2", 2)])?;
    Ket::new(
        shape,
        [0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0].iter().map(|&x| Complex64::new(x, 0.0)).collect(),
    )
}

/// Joint outcome branches for analyzers at `alpha` and `beta` (radians);
/// outcome 0 means "passed along the analyzer axis".
fn analyzer_branches(state: &Ket, alpha: f64, beta: f64) -> Result<BranchSet> {
    let to_axis = |a: f64| vec![a.cos(), a.sin(), -a.sin(), a.cos()];
    let mut s = real_unitary("pol_1", 2, &to_axis(alpha))?.apply_local(&["pol_1"], state)?.ket;
    s = real_unitary("pol_2", 2, &to_axis(beta))?.apply_local(&["pol_2"], &s)?.ket;
    s = with_ready_register(&s, "analyzer_a", 2)?;
    s = with_ready_register(&s, "analyzer_b", 2)?;
    s = measure_entangle(&s, &PointerCoupling::record("pol_1", "analyzer_a"))?;
    s = measure_entangle(&s, &PointerCoupling::record("pol_2", "analyzer_b"))?;
    decompose(&s, &["analyzer_a", "analyzer_b"])
}

fn correlation(bs: &BranchSet) -> f64 {
    bs.branches()
        .iter()
        .map(|b| {
            let idx = b.label.indices();
            b.weight() * if idx[0] == idx[1] { 1.0 } else { -1.0 }
        })
        .sum()
}

/// Largest `|S|` over the 16 deterministic local strategies, each side fixing
/// a ±1 answer per setting.
pub fn bell_local_bound() -> f64 {
    let sign = |bit: u32| -> f64 { if bit == 0 { 1.0 } else { -1.0 } };
    (0u32..16)
        .map(|s| {
            let (a, a2, b, b2) = (sign(s & 1), sign(s >> 1 & 1), sign(s >> 2 & 1), sign(s >> 3 & 1));
            (a * b - a * b2 + a2 * b + a2 * b2).abs()
        })
        .fold(0.0, f64::max)
}

/// Wilson score interval at `z` for `k` successes in `n`.
fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    let (n, p) = (n as f64, k as f64 / n as f64);
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (center - half, center + half)
}

pub fn run_bell_chsh(angles_deg: [f64; 4], sampled: Option<u64>, seed: u64) -> Result<ExperimentReport> {
    let mut spec = ExperimentSpec::new("run_bell_chsh", seed).param("angles_deg", angles_deg.to_vec());
    spec = match sampled {
        Some(n) => spec.param("mode", "sampled").param("n", n),
        None => spec.param("mode", "analytic"),
    };
    run(&spec, &Constants::default())
}

pub(super) fn bell_chsh(p: &Params, seed: u64, _: &Constants) -> Result<ExperimentReport> {
    let angles = p.numbers("angles_deg");
    if angles.len() != 4 {
        return Err(Error::config("params.angles_deg", "need four angles a, a′, b, b′"));
    }
    let [a, a2, b, b2] = [angles[0], angles[1], angles[2], angles[3]].map(f64::to_radians);
    let psi = singlet()?;
    let pairs = [(a, b), (a, b2), (a2, b), (a2, b2)];
    let signs = [1.0, -1.0, 1.0, 1.0];
    let sets = pairs.iter().map(|&(x, y)| analyzer_branches(&psi, x, y)).collect::<Result<Vec<_>>>()?;
    let e: Vec<f64> = sets.iter().map(correlation).collect();
    let s: f64 = e.iter().zip(&signs).map(|(e, s)| e * s).sum();
    let e_same = correlation(&analyzer_branches(&psi, a, a)?);
    let bound = bell_local_bound();

    let mut r = ExperimentReport::new("run_bell_chsh", p);
    r.scalar("e_ab", e[0]);
    r.scalar("e_ab_prime", e[1]);
    r.scalar("e_a_prime_b", e[2]);
    r.scalar("e_a_prime_b_prime", e[3]);
    r.scalar("e_aa", e_same);
    r.scalar("s", s);
    r.scalar("abs_s", s.abs());
    r.scalar("local_bound", bound);
    r.scalar("tsirelson_bound", 2.0 * SQRT_2);
    r.verdict("perfect_anticorrelation", (e_same + 1.0).abs() <= 1e-12);
    r.verdict("local_bound_is_two", bound == 2.0);
    r.verdict("within_tsirelson_bound", s.abs() <= 2.0 * SQRT_2 + 1e-12);

    if p.str("mode") == "sampled" {
        let n = p.u64("n");
        if n == 0 {
            return Err(Error::config("params.n", "need at least one pair per setting"));
        }
        let (mut lo, mut hi, mut est) = (0.0, 0.0, 0.0);
        for (i, (bs, sign)) in sets.iter().zip(&signs).enumerate() {
            let counts = Perception::new(bs, &SinglingPolicy::Born)?.counts(n, seed, i as u64)?;
            let same: u64 = bs
                .branches()
                .iter()
                .zip(&counts)
                .filter(|(b, _)| b.label.indices()[0] == b.label.indices()[1])
                .map(|(_, c)| c)
                .sum();
            let (p_lo, p_hi) = wilson(same, n, 3.0);
            let (e_lo, e_hi) = (2.0 * p_lo - 1.0, 2.0 * p_hi - 1.0);
            est += sign * (2.0 * same as f64 / n as f64 - 1.0);
            if *sign > 0.0 {
                lo += e_lo;
                hi += e_hi;
            } else {
                lo -= e_hi;
                hi -= e_lo;
            }
        }
        r.scalar("sampled_s", est);
        r.scalar("sampled_s_low", lo);
        r.scalar("sampled_s_high", hi);
        r.verdict("sampled_interval_covers_analytic", lo <= s && s <= hi);
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    BeforeFirstSplitter,
    AfterFirstSplitter,
}

pub fn run_mach_zehnder(phase: f64, second_bs: bool, decision: Decision) -> Result<ExperimentReport> {
    let tag = match decision {
        Decision::BeforeFirstSplitter => "before_first_bs",
        Decision::AfterFirstSplitter => "after_first_bs",
    };
    let spec = ExperimentSpec::new("run_mach_zehnder", 0)
        .param("phase", phase)
        .param("second_bs", second_bs)
        .param("decision", tag);
    run(&spec, &Constants::default())
}

pub(super) fn mach_zehnder(p: &Params, _: u64, _: &Constants) -> Result<ExperimentReport> {
    let phase = p.f64("phase");
    let second = p.bool("second_bs");
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let shape = SpaceShape::single("path", 2)?;
    let splitter = LinearMap::square(shape.clone(), vec![h, h, h, -h], true)?;
    let arm = LinearMap::square(
        shape.clone(),
        vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::from_polar(1.0, phase)],
        true,
    )?;

    let choice = format!("second splitter {}", if second { "inserted" } else { "removed" });
    let mut events = Vec::new();
    if p.str("decision") == "before_first_bs" {
        events.push(format!("decision: {choice}"));
    }
    events.push("photon crosses first splitter".to_string());
    if p.str("decision") == "after_first_bs" {
        events.push(format!("decision: {choice}"));
    }

    let mut psi = Ket::basis(shape, &[0])?;
    psi = splitter.apply(&psi)?.ket;
    psi = arm.apply(&psi)?.ket;
    events.push("photon acquires arm phase".to_string());
    if second {
        psi = splitter.apply(&psi)?.ket;
        events.push("photon crosses second splitter".to_string());
    }
    let state = with_ready_register(&psi, "detector", 2)?;
    let state = measure_entangle(&state, &PointerCoupling::record("path", "detector"))?;
    let bs = decompose(&state, &["detector"])?;
    let probs = vec![weight_of(&bs, &[0]), weight_of(&bs, &[1])];
    events.push("detectors read".to_string());

    let expected = if second {
        [(phase / 2.0).cos().powi(2), (phase / 2.0).sin().powi(2)]
    } else {
        [0.5, 0.5]
    };
    let mut r = ExperimentReport::new("run_mach_zehnder", p);
    r.scalar("p_detector_0", probs[0]);
    r.scalar("p_detector_1", probs[1]);
    r.verdict("probabilities_sum_to_one", sums_to_one(&probs));
    r.verdict(
        "matches_interferometer_law",
        probs.iter().zip(expected).all(|(a, b)| (a - b).abs() <= 1e-12),
    );
    r.array("detector_probabilities", probs);
    r.events = events;
    Ok(r)
}

pub fn run_many_minds(p1: f64, mode: MindsMode, n: u64, seed: u64) -> Result<ExperimentReport> {
    let tag = match mode {
        MindsMode::Independent => "independent",
        MindsMode::Correlated => "correlated",
    };
    let spec = ExperimentSpec::new("run_many_minds", seed).param("p1", p1).param("mode", tag).param("n", n);
    run(&spec, &Constants::default())
}

pub(super) fn many_minds(p: &Params, seed: u64, _: &Constants) -> Result<ExperimentReport> {
    let p1 = p.f64("p1");
    let n = p.u64("n");
    if !(0.0..=1.0).contains(&p1) {
        return Err(Error::config("params.p1", format!("must lie in [0, 1], got {p1}")));
    }
    if n == 0 {
        return Err(Error::config("params.n", "need at least one sample"));
    }
    let mode = if p.str("mode") == "independent" { MindsMode::Independent } else { MindsMode::Correlated };
    let f = many_minds_joint(p1, mode, n, seed)?;
    let count = |x: f64| (x * n as f64).round() as u64;

    let mut r = ExperimentReport::new("run_many_minds", p);
    r.scalar("f11", f.f11);
    r.scalar("f22", f.f22);
    r.scalar("f_disagree", f.f_disagree);
    match mode {
        MindsMode::Independent => {
            r.verdict("f11_within_3sigma", within_3_sigma(count(f.f11), n, p1 * p1));
            r.verdict("f22_within_3sigma", within_3_sigma(count(f.f22), n, (1.0 - p1) * (1.0 - p1)));
            r.verdict("f_disagree_within_3sigma", within_3_sigma(count(f.f_disagree), n, 2.0 * p1 * (1.0 - p1)));
        }
        MindsMode::Correlated => {
            r.verdict("f11_within_3sigma", within_3_sigma(count(f.f11), n, p1));
            r.verdict("never_disagree", f.f_disagree == 0.0);
        }
    }
    Ok(r)
}
