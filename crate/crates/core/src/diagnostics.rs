//! Weighted norms, inequality checks, and experiment-level reports.
//!
//! Everything here consumes trajectories and fields produced by the
//! dynamics layer and reduces them to scalars with pinned conventions:
//!
//! * Physical-domain values: the solver works on the symmetric torus;
//!   quadratic quantities on the physical half-channel are exactly half
//!   the torus values ([`physical`]). Weighted norms with the one-sided
//!   weight `(z+ε)^{2β}` are computed directly on the strip `z ∈ (0,1)`.
//! * Weighted Hardy-type ratios on `(0,1)` in both regimes: for
//!   `k > -1` the inequality controls `∫(z+ε)^k f²` by
//!   `∫(z+ε)^{k+2}(f² + f'²)`; for `k < -1` it controls
//!   `∫(z+ε)^k (f - f(0))²` by `∫(z+ε)^{k+2} f'²`. The borderline
//!   `k = -1` is rejected. Quadrature is graded geometrically toward
//!   `z = 0` with the floor `ε` as anchor scale, so ratios are accurate
//!   deep into the small-`ε` regime.
//! * Stability functionals `D(t) = ‖ρ̃^{1/2}δu‖² + ∫₀ᵗ‖∇δu‖²` between a
//!   base and a perturbed trajectory sampled on the same grid.
//! * Floor sweeps measuring uniformity of energy/dissipation in `ε` and
//!   the Cauchy property of final states in the degenerate weight
//!   `z^{α/2}`.
//! * A fixed-column CSV rendering of trajectories.

use crate::basis::SpectralField;
use crate::constraint::StateLayout;
use crate::density::DensityProfile;
use crate::dynamics::{GalerkinSystem, RunParams, Trajectory, PI};
use crate::quadrature::Rule;
use crate::{Result, SolverError};
use nalgebra::DVector;
use serde::Serialize;

/// Convert a quadratic torus quantity to its physical-domain value.
pub fn physical(torus_value: f64) -> f64 {
    0.5 * torus_value
}

/// Graded Gauss–Legendre rule on `[0, 1]`: geometric panels from the
/// anchor scale toward `z = 0`, then uniform background panels.
pub fn unit_interval_rule(anchor: f64, background: usize) -> Rule {
    let mut edges = vec![0.0, 1.0];
    let t0 = anchor.max(1e-12).min(0.5);
    let mut e = t0 / 4.0;
    while e < 0.25 {
        edges.push(e);
        e *= 2.0;
    }
    for j in 1..background.max(2) {
        edges.push(j as f64 / background as f64);
    }
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    Rule::composite(&edges, 16)
}

/// Physical-domain weighted norm `Σᵢ ∫_Ω (z+ε)^{2β} fᵢ² dx dz` with
/// `Ω = [0,2) × (0,1)`: rectangle rule in `x` (exact for band-limited
/// fields), graded panels in `z`.
pub fn weighted_norm_sq(fields: &[&SpectralField], beta: f64, eps: f64) -> f64 {
    if fields.is_empty() {
        return 0.0;
    }
    let m = fields.iter().map(|f| f.m()).max().unwrap();
    let nx = {
        let need = 2 * m + 1;
        need + need % 2
    };
    let xs: Vec<f64> = (0..nx).map(|i| 2.0 * i as f64 / nx as f64).collect();
    let rule = unit_interval_rule(eps.max(1e-9), m + 8);
    let dx = 2.0 / nx as f64;
    let mut total = 0.0;
    for f in fields {
        let vals = f.synthesize_at(&xs, &rule.nodes);
        let nz = rule.nodes.len();
        for (iz, (&z, &wz)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
            let weight = (z + eps).powf(2.0 * beta);
            let mut sum_x = 0.0;
            for ix in 0..nx {
                let v = vals[ix * nz + iz];
                sum_x += v * v;
            }
            total += wz * weight * sum_x * dx;
        }
    }
    total
}

// ---------------------------------------------------------------------------
// Hardy-type inequality checks.
// ---------------------------------------------------------------------------

/// One test function for the Hardy ratios: value and derivative on `[0,1]`.
#[derive(Clone, Copy)]
pub struct HardyFn {
    pub name: &'static str,
    pub f: fn(f64) -> f64,
    pub df: fn(f64) -> f64,
}

/// The standard family used by the sweep: polynomial and trigonometric
/// profiles with varied boundary behaviour at `z = 0`.
pub fn hardy_family() -> Vec<HardyFn> {
    vec![
        HardyFn {
            name: "one",
            f: |_| 1.0,
            df: |_| 0.0,
        },
        HardyFn {
            name: "z",
            f: |z| z,
            df: |_| 1.0,
        },
        HardyFn {
            name: "z_sq",
            f: |z| z * z,
            df: |z| 2.0 * z,
        },
        HardyFn {
            name: "sin_pi_z",
            f: |z| (PI * z).sin(),
            df: |z| PI * (PI * z).cos(),
        },
        HardyFn {
            name: "one_minus_cos",
            f: |z| 1.0 - (PI * z).cos(),
            df: |z| PI * (PI * z).sin(),
        },
        HardyFn {
            name: "z_one_minus_z",
            f: |z| z * (1.0 - z),
            df: |z| 1.0 - 2.0 * z,
        },
    ]
}

/// Result of one Hardy ratio evaluation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HardyCheck {
    pub k: f64,
    pub eps: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; `0` when both sides vanish.
    pub ratio: f64,
}

/// Weighted Hardy ratio for exponent `k ≠ -1` on `(0,1)`.
///
/// `k > -1`: `lhs = ∫(z+ε)^k f²`, `rhs = ∫(z+ε)^{k+2}(f² + f'²)`.
/// `k < -1`: `lhs = ∫(z+ε)^k (f-f(0))²`, `rhs = ∫(z+ε)^{k+2} f'²`.
pub fn hardy_ratio(k: f64, eps: f64, func: &HardyFn) -> Result<HardyCheck> {
    if !k.is_finite() || (k + 1.0).abs() < 1e-9 {
        return Err(SolverError::InvalidParameter(format!(
            "the weighted inequality excludes the borderline exponent k = -1 (got {k})"
        )));
    }
    if !(eps >= 0.0) {
        return Err(SolverError::InvalidParameter(format!(
            "floor must be nonnegative, got {eps}"
        )));
    }
    let rule = unit_interval_rule(eps.max(1e-9), 24);
    let f = func.f;
    let df = func.df;
    let (lhs, rhs) = if k > -1.0 {
        let lhs = rule.integrate(|z| (z + eps).powf(k) * f(z) * f(z));
        let rhs = rule.integrate(|z| {
            (z + eps).powf(k + 2.0) * (f(z) * f(z) + df(z) * df(z))
        });
        (lhs, rhs)
    } else {
        let f0 = f(0.0);
        let lhs = rule.integrate(|z| {
            let d = f(z) - f0;
            (z + eps).powf(k) * d * d
        });
        let rhs = rule.integrate(|z| (z + eps).powf(k + 2.0) * df(z) * df(z));
        (lhs, rhs)
    };
    let ratio = if lhs == 0.0 {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    };
    Ok(HardyCheck {
        k,
        eps,
        lhs,
        rhs,
        ratio,
    })
}

/// Sweep row: the sharpest (largest) family ratio at one floor value.
#[derive(Debug, Clone, Serialize)]
pub struct HardyRow {
    pub eps: f64,
    pub sup_ratio: f64,
    pub per_function: Vec<(String, f64)>,
}

/// Full sweep for one exponent across floor values.
#[derive(Debug, Clone, Serialize)]
pub struct HardySweep {
    pub k: f64,
    pub rows: Vec<HardyRow>,
}

pub fn hardy_sweep(k: f64, eps_values: &[f64]) -> Result<HardySweep> {
    let family = hardy_family();
    let mut rows = Vec::new();
    for &eps in eps_values {
        let mut per = Vec::new();
        let mut sup: f64 = 0.0;
        for func in &family {
            let check = hardy_ratio(k, eps, func)?;
            if check.ratio.is_finite() {
                sup = sup.max(check.ratio);
            }
            per.push((func.name.to_string(), check.ratio));
        }
        rows.push(HardyRow {
            eps,
            sup_ratio: sup,
            per_function: per,
        });
    }
    Ok(HardySweep { k, rows })
}

// ---------------------------------------------------------------------------
// Trajectory reductions.
// ---------------------------------------------------------------------------

/// Largest energy-identity residual over all samples (torus values).
pub fn max_energy_identity_residual(traj: &Trajectory) -> f64 {
    (0..traj.times.len())
        .map(|i| traj.energy_identity_residual(i).abs())
        .fold(0.0, f64::max)
}

/// Least-squares exponential rate: fits `ln v ≈ c - rate·t` and returns
/// `rate`. Requires positive values.
pub fn fit_exponential_rate(times: &[f64], values: &[f64]) -> f64 {
    assert_eq!(times.len(), values.len());
    assert!(times.len() >= 2, "need at least two samples for a rate fit");
    let n = times.len() as f64;
    let ts: f64 = times.iter().sum::<f64>() / n;
    let ys: Vec<f64> = values.iter().map(|v| v.max(1e-300).ln()).collect();
    let ym: f64 = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, y) in times.iter().zip(&ys) {
        num += (t - ts) * (y - ym);
        den += (t - ts) * (t - ts);
    }
    -(num / den)
}

/// Summary of a long unforced run used by the regularity check.
#[derive(Debug, Clone, Serialize)]
pub struct LongRunReport {
    pub aborted: bool,
    /// True when the sampled energy never increases (slack 1e-12 rel).
    pub energy_monotone: bool,
    /// `sup_t ‖∇u‖²` over samples (torus).
    pub sup_grad_sq: f64,
    /// Fitted exponential decay rate of the energy over the last half of
    /// the samples.
    pub fitted_decay_rate: f64,
    /// `max_i |energy identity residual|` (torus).
    pub max_identity_residual: f64,
    pub final_energy: f64,
}

pub fn long_run_report(traj: &Trajectory) -> LongRunReport {
    let n = traj.times.len();
    let mut monotone = true;
    for i in 1..n {
        if traj.energy[i] > traj.energy[i - 1] * (1.0 + 1e-12) + 1e-300 {
            monotone = false;
        }
    }
    let half = n / 2;
    let fitted = fit_exponential_rate(&traj.times[half..], &traj.energy[half..]);
    LongRunReport {
        aborted: traj.aborted.is_some(),
        energy_monotone: monotone,
        sup_grad_sq: traj.dissipation_rate.iter().cloned().fold(0.0, f64::max),
        fitted_decay_rate: fitted,
        max_identity_residual: max_energy_identity_residual(traj),
        final_energy: *traj.energy.last().unwrap(),
    }
}

// ---------------------------------------------------------------------------
// Stability experiments.
// ---------------------------------------------------------------------------

/// Constraint-respecting perturbation of size `delta` in a seeded random
/// direction. Linear in `delta` (projection is linear and fixes `a0`).
pub fn perturbed_state(
    sys: &GalerkinSystem,
    a0: &DVector<f64>,
    seed: u64,
    delta: f64,
) -> DVector<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut dir = DVector::from_fn(a0.len(), |_, _| rng.gen_range(-1.0..1.0));
    dir /= dir.norm();
    sys.pressure_operator().project_constraint(&(a0 + dir * delta))
}

/// The stability functional between two trajectories on the same grid.
#[derive(Debug, Clone, Serialize)]
pub struct StabilitySeries {
    pub times: Vec<f64>,
    /// `D(t) = ‖ρ̃^{1/2}δu‖² + ∫₀ᵗ ‖∇δu‖²` (torus), trapezoid on samples.
    pub d: Vec<f64>,
    /// `D(0)` (pure weighted-mass part).
    pub d0: f64,
    /// `∫₀ᵀ (1 + ‖∇u_base‖²) dt`: the Grönwall exponent integrand.
    pub gronwall_integral: f64,
    /// `log(D(T)/D(0)) / gronwall_integral`: the observed growth exponent
    /// per unit of Grönwall budget.
    pub observed_exponent: f64,
}

pub fn stability_series(
    sys: &GalerkinSystem,
    base: &Trajectory,
    pert: &Trajectory,
) -> StabilitySeries {
    assert_eq!(
        base.times.len(),
        pert.times.len(),
        "trajectories must share the sample grid"
    );
    let n = base.times.len();
    let mut d = Vec::with_capacity(n);
    let mut grad_int = 0.0;
    let mut prev_rate = 0.0;
    let mut gron = 0.0;
    let mut prev_gron_rate = 0.0;
    for i in 0..n {
        assert!(
            (base.times[i] - pert.times[i]).abs() < 1e-12,
            "sample times diverge"
        );
        let delta = &pert.states[i] - &base.states[i];
        let rate = sys.dissipation_rate(&delta);
        let gron_rate = 1.0 + base.dissipation_rate[i];
        if i > 0 {
            let dt = base.times[i] - base.times[i - 1];
            grad_int += 0.5 * dt * (prev_rate + rate);
            gron += 0.5 * dt * (prev_gron_rate + gron_rate);
        }
        prev_rate = rate;
        prev_gron_rate = gron_rate;
        d.push(sys.energy(&delta) + grad_int);
    }
    let d0 = d[0];
    let d_end = *d.last().unwrap();
    let observed = if d0 > 0.0 && d_end > 0.0 && gron > 0.0 {
        (d_end / d0).ln() / gron
    } else {
        0.0
    };
    StabilitySeries {
        times: base.times.clone(),
        d,
        d0,
        gronwall_integral: gron,
        observed_exponent: observed,
    }
}

// ---------------------------------------------------------------------------
// Floor sweeps.
// ---------------------------------------------------------------------------

/// Configuration of an ε-sweep at fixed exponent, smoothing, and order.
#[derive(Debug, Clone)]
pub struct EpsSweepConfig {
    pub alpha: f64,
    pub delta: f64,
    pub m: usize,
    pub m_rho: usize,
    pub eps_values: Vec<f64>,
    pub seed: u64,
    pub amplitude: f64,
    pub decay: f64,
    pub params: RunParams,
}

/// Uniformity and convergence measurements across the floor sweep.
#[derive(Debug, Clone, Serialize)]
pub struct EpsSweepSummary {
    pub eps: Vec<f64>,
    /// `sup_t ‖ρ̃^{1/2}u‖²` per floor value (torus).
    pub sup_energy: Vec<f64>,
    /// `∫₀ᵀ ‖∇u‖²` per floor value (torus).
    pub total_dissipation: Vec<f64>,
    /// Distance between consecutive final states in the degenerate weight
    /// `z^{α/2}` (physical domain, `ε = 0` in the weight).
    pub final_distance: Vec<f64>,
    /// `max/min` of `sup_energy + total_dissipation` across the sweep.
    pub uniformity_ratio: f64,
    /// True when `final_distance` is strictly decreasing.
    pub distances_decreasing: bool,
}

pub fn epsilon_sweep(config: &EpsSweepConfig) -> Result<EpsSweepSummary> {
    if config.eps_values.len() < 2 {
        return Err(SolverError::InvalidParameter(
            "floor sweep needs at least two values".into(),
        ));
    }
    let mut sup_energy = Vec::new();
    let mut total_diss = Vec::new();
    let mut finals: Vec<(SpectralField, SpectralField)> = Vec::new();
    for &eps in &config.eps_values {
        let profile = DensityProfile::new(config.alpha, eps, config.delta, config.m_rho)?;
        let sys = GalerkinSystem::new(profile, config.m)?;
        let a0 = crate::dynamics::random_smooth_state(
            &sys,
            config.seed,
            config.amplitude,
            config.decay,
        );
        let traj = sys.run(&a0, &crate::dynamics::NoForcing::new(&sys), &config.params)?;
        if let Some(info) = traj.aborted {
            return Err(SolverError::Instability {
                t: info.t,
                norm: info.norm,
                guard: info.guard,
            });
        }
        sup_energy.push(traj.energy.iter().cloned().fold(0.0, f64::max));
        total_diss.push(*traj.dissipation_integral.last().unwrap());
        let layout = StateLayout::new(config.m);
        finals.push(layout.unpack_state(traj.states.last().unwrap()));
    }
    let mut final_distance = Vec::new();
    for pair in finals.windows(2) {
        let dv = pair[1].0.sub(&pair[0].0);
        let dw = pair[1].1.sub(&pair[0].1);
        final_distance.push(weighted_norm_sq(&[&dv, &dw], config.alpha / 2.0, 0.0).sqrt());
    }
    let scores: Vec<f64> = sup_energy
        .iter()
        .zip(&total_diss)
        .map(|(e, d)| e + d)
        .collect();
    let max = scores.iter().cloned().fold(f64::MIN, f64::max);
    let min = scores.iter().cloned().fold(f64::MAX, f64::min);
    let decreasing = final_distance.windows(2).all(|w| w[1] < w[0]);
    Ok(EpsSweepSummary {
        eps: config.eps_values.clone(),
        sup_energy,
        total_dissipation: total_diss,
        final_distance,
        uniformity_ratio: max / min,
        distances_decreasing: decreasing,
    })
}

// ---------------------------------------------------------------------------
// CSV rendering.
// ---------------------------------------------------------------------------

/// Fixed-order CSV rendering of a trajectory's scalar series. Columns:
///
/// ```text
/// t, energy, dissipation_rate, defect_rate, power_rate,
/// udot_weighted_sq, divergence_residual, dissipation_integral,
/// defect_integral, defect_abs_integral, power_integral, pressure_norm
/// ```
///
/// All values are torus quantities rendered with 17 significant digits,
/// enough to reproduce every f64 bit-exactly.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from(
        "t,energy,dissipation_rate,defect_rate,power_rate,udot_weighted_sq,divergence_residual,dissipation_integral,defect_integral,defect_abs_integral,power_integral,pressure_norm\n",
    );
    for i in 0..traj.times.len() {
        let row = [
            traj.times[i],
            traj.energy[i],
            traj.dissipation_rate[i],
            traj.defect_rate[i],
            traj.power_rate[i],
            traj.udot_sq[i],
            traj.div_residual[i],
            traj.dissipation_integral[i],
            traj.defect_integral[i],
            traj.defect_abs_integral[i],
            traj.power_integral[i],
            traj.pressures[i].norm(),
        ];
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            out.push_str(&format!("{v:.17e}"));
            first = false;
        }
        out.push('\n');
    }
    out
}
