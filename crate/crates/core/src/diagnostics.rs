//! A-posteriori checks on a computed trajectory. Each function consumes the
//! per-step records and measures how well one of the scheme's structural
//! estimates actually held: energy dissipation, the summed transport cost,
//! the uptake-support compatibility, the weak form of the equation, norm
//! histories, and Hölder continuity in time.

use crate::driver::TrajectoryRecord;
use crate::error::{invalid, Result};
use crate::grid::GridDensity;
use crate::kernel::KernelTable;
use crate::metrics::{dbl_bounds, w2};
use crate::testfns::{Bump, SpaceTimeTestFn};

/// How well each transport step dissipated the frozen-mask energy.
///
/// Every accepted step satisfies `F[new] + W₂²/(2τ) ≤ F[prev]` by feasibility
/// of standing still, so the normalized slack should never exceed roundoff.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationReport {
    /// Worst over steps of `(F_new + W₂²/(2τ) - F_prev) / (1 + |F_prev|)`.
    pub worst_slack: f64,
    /// Index (0-based) of the step attaining the worst slack.
    pub worst_step: usize,
    /// Total transport cost `Σ W₂²` over the run.
    pub total_transport_sq: f64,
    pub steps: usize,
}

impl DissipationReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.worst_slack <= tol
    }
}

pub fn dissipation_check(traj: &TrajectoryRecord) -> DissipationReport {
    let tau = traj.config.tau;
    let mut worst = f64::NEG_INFINITY;
    let mut worst_step = 0;
    let mut total = 0.0;
    for (k, s) in traj.steps.iter().enumerate() {
        let lhs = s.jko.energy_new.total() + s.jko.transport_sq / (2.0 * tau);
        let prev = s.jko.energy_prev.total();
        let slack = (lhs - prev) / (1.0 + prev.abs());
        if slack > worst {
            worst = slack;
            worst_step = k;
        }
        total += s.jko.transport_sq;
    }
    DissipationReport {
        worst_slack: worst,
        worst_step,
        total_transport_sq: total,
        steps: traj.steps.len(),
    }
}

/// Total-transport-cost estimate `Σ W₂² ≤ 2τ (F₀ + C)`.
///
/// `F₀` is the energy of the initial state and `C = χ(m²/4 + m)` bounds the
/// negative part of the energy: the interaction term is at least
/// `-χ m² max K / 2 = -χ m²/4` and the support term at least `-χ m ∫K = -χ m`.
/// The estimate is sharp for mass-conserving runs where the particle ladder
/// is carried between steps; the reaction substep re-anchors the ladder and
/// voids the telescoping, so apply this to runs without reaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct W2SumReport {
    pub sum_transport_sq: f64,
    pub bound: f64,
    pub initial_energy: f64,
    pub passed: bool,
}

pub fn w2_sum_check(traj: &TrajectoryRecord) -> Result<W2SumReport> {
    let first = traj
        .steps
        .first()
        .ok_or_else(|| invalid("transport-cost check needs at least one step"))?;
    let mass = traj.initial.mass();
    let chi = traj.spec.chi;
    let f0 = first.jko.energy_prev.total();
    let c = chi * (mass * mass / 4.0 + mass);
    let sum: f64 = traj.steps.iter().map(|s| s.jko.transport_sq).sum();
    let bound = 2.0 * traj.config.tau * (f0 + c);
    Ok(W2SumReport { sum_transport_sq: sum, bound, initial_energy: f0, passed: sum <= bound })
}

/// Compatibility of the uptake term with the refreshed support mask: the
/// uptake `h(ρ)` integrated over the cells *outside* the mask, per step.
/// Since the mask collects every cell above the threshold `θ`, the weighted
/// sum is at most `h(θ) · T · |domain| · max|ψ|` when the mask tracks the
/// density — and jumps by orders of magnitude when it does not.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport {
    /// `|τ Σ_n Σ_i h(ρ_i^{n+½}) (1 − β_i^{n+1}) ψ(t_n, x_i) Δx|` per test
    /// function.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

pub fn constraint_residual(
    traj: &TrajectoryRecord,
    battery: &[SpaceTimeTestFn],
) -> ConstraintReport {
    let grid = traj.grid();
    let dx = grid.dx();
    let tau = traj.config.tau;
    let centers: Vec<f64> = grid.centers().collect();
    let mut residuals = vec![0.0; battery.len()];
    for s in &traj.steps {
        for (i, (v, &inside)) in
            s.rho_half.values().iter().zip(s.beta.mask()).enumerate()
        {
            if !inside {
                let uptake = traj.spec.uptake(*v);
                if uptake != 0.0 {
                    for (fi, f) in battery.iter().enumerate() {
                        residuals[fi] += uptake * f.value(s.time, centers[i]) * tau * dx;
                    }
                }
            }
        }
    }
    let residuals: Vec<f64> = residuals.iter().map(|r| r.abs()).collect();
    let max_residual = residuals.iter().fold(0.0f64, |m, &r| m.max(r));
    ConstraintReport { residuals, max_residual }
}

/// Defect of the discrete weak form, one value per test function.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakFormReport {
    pub residuals: Vec<f64>,
    pub max_abs: f64,
}

/// Tests the recorded trajectory against the continuum equation in weak form
/// over the window `[t, s]` (both aligned to step boundaries):
///
/// ```text
/// R(φ) = ⟨ρ(s) - ρ(t), φ⟩
///        - Σ_k τ [ ⟨P(ρ^{k-½}), φ''⟩ + χ ⟨ρ^{k-½} ∂ₓc^k, φ'⟩ + ⟨M(ρ^{k-½}), φ⟩ ]
/// ```
///
/// summed over the steps inside the window, with `c^k = K∗ρ^{k-½} + K∗𝟙_{β}`
/// using the mask frozen during step `k`. Time integrals use the
/// piecewise-constant-in-time interpolant (one flat value per step), the
/// diffusion term is in pressure form (`ρ ∂ₓΦ'(ρ) = ∂ₓP(ρ)` integrated by
/// parts twice), and pressure and drift are evaluated implicitly at the
/// post-transport state, matching the minimizing-movement optimality
/// condition. The residual shrinks with `τ` until a spatial resolution floor.
pub fn weak_form_residual(
    traj: &TrajectoryRecord,
    battery: &[Bump],
    t: f64,
    s: f64,
) -> Result<WeakFormReport> {
    let tau = traj.config.tau;
    let horizon = traj.config.t_final;
    let align = |v: f64| -> Result<usize> {
        let ratio = v / tau;
        let k = ratio.round();
        if (ratio - k).abs() > 1e-9 * ratio.max(1.0) {
            return Err(invalid(format!("time {v} is not aligned to the step size {tau}")));
        }
        Ok(k as usize)
    };
    if !(0.0 <= t && t < s && s <= horizon + 1e-12) {
        return Err(invalid(format!("window [{t}, {s}] must satisfy 0 ≤ t < s ≤ {horizon}")));
    }
    let (k_lo, k_hi) = (align(t)?, align(s)?);

    let grid = traj.grid();
    let dx = grid.dx();
    let centers: Vec<f64> = grid.centers().collect();
    let spec = &traj.spec;
    let table = if spec.chi > 0.0 { Some(KernelTable::new(grid)) } else { None };

    let state_at = |k: usize| -> &GridDensity {
        if k == 0 { &traj.initial } else { &traj.steps[k - 1].rho }
    };
    let lo = state_at(k_lo);
    let hi = state_at(k_hi);

    let mut residuals: Vec<f64> = battery
        .iter()
        .map(|phi| {
            centers
                .iter()
                .enumerate()
                .map(|(i, &x)| (hi.values()[i] - lo.values()[i]) * phi.value(x))
                .sum::<f64>()
                * dx
        })
        .collect();

    for k in k_lo..k_hi {
        let step = &traj.steps[k];
        let drift: Option<Vec<f64>> = match &table {
            Some(tab) => {
                let dc_rho = tab.convolve_deriv(&step.rho_half)?;
                let dc_mask = tab.convolve_indicator_deriv(traj.frozen_beta(k))?;
                Some(
                    dc_rho
                        .values()
                        .iter()
                        .zip(dc_mask.values())
                        .map(|(a, b)| a + b)
                        .collect(),
                )
            }
            None => None,
        };
        for (fi, phi) in battery.iter().enumerate() {
            let mut flux = 0.0;
            for (i, &x) in centers.iter().enumerate() {
                let half = step.rho_half.values()[i];
                let mut cell = spec.pressure(half) * phi.second(x);
                if let Some(dc) = &drift {
                    cell += spec.chi * half * dc[i] * phi.deriv(x);
                }
                flux += cell + spec.reaction(half) * phi.value(x);
            }
            residuals[fi] -= tau * flux * dx;
        }
    }
    let max_abs = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(WeakFormReport { residuals, max_abs })
}

/// Norm history of one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularitySample {
    pub time: f64,
    pub max_value: f64,
    /// `(∫ρ^γ dx)^{1/γ}`.
    pub lgamma_norm: f64,
    /// `(∫ |∂ₓ ρ^{γ/2}|² dx)^{1/2}`.
    pub h1_seminorm: f64,
    pub entropy: f64,
    pub second_moment: f64,
}

fn sample(spec_gamma: f64, time: f64, rho: &GridDensity) -> RegularitySample {
    let dx = rho.grid().dx();
    let lgamma =
        (rho.values().iter().map(|&v| v.powf(spec_gamma)).sum::<f64>() * dx).powf(1.0 / spec_gamma);
    RegularitySample {
        time,
        max_value: rho.max_value(),
        lgamma_norm: lgamma,
        h1_seminorm: rho.h1_seminorm_pow(spec_gamma).sqrt(),
        entropy: rho.entropy(),
        second_moment: rho.second_moment(),
    }
}

/// Norm histories along the trajectory, starting with the initial state.
pub fn regularity_profile(traj: &TrajectoryRecord) -> Vec<RegularitySample> {
    let gamma = traj.spec.gamma;
    let mut out = Vec::with_capacity(traj.steps.len() + 1);
    out.push(sample(gamma, 0.0, &traj.initial));
    out.extend(traj.steps.iter().map(|s| sample(gamma, s.time, &s.rho)));
    out
}

/// Cauchy differences between final states of successive refinements,
/// along with the observed convergence orders between consecutive pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfConvergence {
    pub distances: Vec<f64>,
    pub orders: Vec<f64>,
}

/// `finals[i]` is the final density computed with step `taus[i]`; the list
/// must be ordered from coarsest to finest with each step a refinement of
/// the previous. Distances are 2-Wasserstein.
pub fn self_convergence(finals: &[GridDensity]) -> Result<SelfConvergence> {
    if finals.len() < 2 {
        return Err(invalid("self-convergence needs at least two resolutions"));
    }
    let mut distances = Vec::with_capacity(finals.len() - 1);
    for pair in finals.windows(2) {
        distances.push(w2(&pair[0], &pair[1])?);
    }
    let orders = distances
        .windows(2)
        .map(|d| if d[1] > 0.0 { (d[0] / d[1]).log2() } else { f64::INFINITY })
        .collect();
    Ok(SelfConvergence { distances, orders })
}

/// Empirical `1/2`-Hölder constants of the trajectory in time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderReport {
    /// `max W₂(ρ(s), ρ(t)) / |t-s|^{1/2}` over the sampled pairs.
    pub w2_constant: f64,
    /// Same ratio measured in the bounded-Lipschitz metric (upper bracket).
    pub dbl_constant: f64,
    /// Triangle-inequality certificate `√(2(F₀ + C))` from the summed
    /// transport estimate; only meaningful for mass-conserving runs with a
    /// carried ladder, `NaN` otherwise.
    pub certified_constant: f64,
    pub pairs: usize,
}

/// Measures `W₂` and bounded-Lipschitz distances between up to
/// `max_states` states (thinned evenly, always including the initial and
/// final ones) and divides by `|t - s|^{1/2}`. Runs with reaction change
/// total mass, where `W₂` is undefined; pass `false` for `with_w2` there and
/// the `w2_constant` comes back `NaN`.
pub fn holder_continuity(
    traj: &TrajectoryRecord,
    max_states: usize,
    with_w2: bool,
) -> Result<HolderReport> {
    if traj.steps.is_empty() {
        return Err(invalid("Hölder check needs at least one step"));
    }
    let n = traj.steps.len();
    let count = max_states.clamp(2, n + 1);
    let mut picks: Vec<usize> = (0..count)
        .map(|j| (j as f64 / (count - 1) as f64 * n as f64).round() as usize)
        .collect();
    picks.dedup();
    let state = |idx: usize| -> (f64, &GridDensity) {
        if idx == 0 {
            (0.0, &traj.initial)
        } else {
            let s = &traj.steps[idx - 1];
            (s.time, &s.rho)
        }
    };

    let mut w2_constant: f64 = if with_w2 { 0.0 } else { f64::NAN };
    let mut dbl_constant: f64 = 0.0;
    let mut pairs = 0;
    for (a, &i) in picks.iter().enumerate() {
        for &j in &picks[a + 1..] {
            let (ti, rho_i) = state(i);
            let (tj, rho_j) = state(j);
            let root_dt = (tj - ti).sqrt();
            if with_w2 {
                w2_constant = w2_constant.max(w2(rho_i, rho_j)? / root_dt);
            }
            dbl_constant = dbl_constant.max(dbl_bounds(rho_i, rho_j)?.upper / root_dt);
            pairs += 1;
        }
    }

    let certified = if traj.spec.k_m == 0.0 {
        let m = traj.initial.mass();
        let f0 = traj.steps[0].jko.energy_prev.total();
        let c = traj.spec.chi * (m * m / 4.0 + m);
        (2.0 * (f0 + c)).max(0.0).sqrt()
    } else {
        f64::NAN
    };
    Ok(HolderReport { w2_constant, dbl_constant, certified_constant: certified, pairs })
}
