//! Time stepping: implicit minimizing-movement transport composed with an
//! explicit reaction substep (Lie splitting), with the support mask refreshed
//! between the two.
//!
//! One step from state `ρ_prev` with mask `β_prev`:
//!
//! 1. transport: one minimizing-movement step with `β_prev` frozen, giving a
//!    particle ladder and the intermediate density `ρ_half` on the grid;
//! 2. mask refresh: `β = { ρ_half > threshold }`;
//! 3. reaction: cellwise ODE integration over `τ`, giving `ρ`.
//!
//! When the reaction rate is zero, step 3 is the identity and the particle
//! ladder is carried into the next step unchanged, so the transport costs
//! telescope and the energies chain exactly. Otherwise the ladder is
//! re-extracted from the post-reaction density.

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, GridDensity};
use crate::model::{support_set, ModelSpec, SupportIndicator};
use crate::reaction::{gronwall_check, reaction_step, GronwallReport};
use crate::transport::{jko_step, JkoConfig, JkoReport};

/// Parameters of a full trajectory computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    /// Splitting step `τ > 0`; must divide `t_final` evenly.
    pub tau: f64,
    /// Final time `t_final > 0`.
    pub t_final: f64,
    /// Number of equal-mass particles representing the density.
    pub n_particles: usize,
    /// Relative stationarity tolerance of the per-step descent.
    pub eps_grad: f64,
    /// Iteration cap of the per-step descent.
    pub max_iters: usize,
    /// Fault-injection switch: keep the support mask identically empty
    /// instead of refreshing it from the evolving density. Used to check that
    /// the constraint diagnostics actually detect a wrong mask.
    pub freeze_beta_empty: bool,
}

impl RunConfig {
    pub fn new(tau: f64, t_final: f64, n_particles: usize) -> Self {
        Self {
            tau,
            t_final,
            n_particles,
            eps_grad: 1e-6,
            max_iters: 500,
            freeze_beta_empty: false,
        }
    }

    fn jko_config(&self) -> JkoConfig {
        JkoConfig { tau: self.tau, eps_grad: self.eps_grad, max_iters: self.max_iters }
    }

    /// Number of splitting steps, or an error if `τ` does not divide
    /// `t_final` to within a relative `1e-9`.
    pub fn step_count(&self) -> Result<usize> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(invalid(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(invalid(format!("t_final must be positive, got {}", self.t_final)));
        }
        let ratio = self.t_final / self.tau;
        let steps = ratio.round();
        if steps < 1.0 || (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::TimeMisaligned { tau: self.tau, t_final: self.t_final });
        }
        Ok(steps as usize)
    }
}

/// Everything produced by one splitting step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Time at the end of this step.
    pub time: f64,
    /// Density after transport, before reaction.
    pub rho_half: GridDensity,
    /// Density after reaction; the state entering the next step.
    pub rho: GridDensity,
    /// Mask extracted from `rho_half`; frozen during the *next* step's
    /// transport.
    pub beta: SupportIndicator,
    /// Solver report of this step's transport minimization.
    pub jko: JkoReport,
    /// Growth ratios of this step's reaction substep.
    pub gronwall: GronwallReport,
}

/// A complete trajectory with all per-step artifacts.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub spec: ModelSpec,
    pub config: RunConfig,
    pub initial: GridDensity,
    pub initial_beta: SupportIndicator,
    pub steps: Vec<StepRecord>,
}

impl TrajectoryRecord {
    pub fn grid(&self) -> Grid {
        *self.initial.grid()
    }

    /// Final density (the initial one if no steps were taken).
    pub fn final_density(&self) -> &GridDensity {
        self.steps.last().map(|s| &s.rho).unwrap_or(&self.initial)
    }

    /// The mask that was frozen during transport of step `k` (0-based):
    /// the initial mask for `k = 0`, otherwise the previous step's.
    pub fn frozen_beta(&self, k: usize) -> &SupportIndicator {
        if k == 0 {
            &self.initial_beta
        } else {
            &self.steps[k - 1].beta
        }
    }

    /// Density at the start of step `k` (0-based).
    pub fn density_before(&self, k: usize) -> &GridDensity {
        if k == 0 {
            &self.initial
        } else {
            &self.steps[k - 1].rho
        }
    }
}

/// Runs the full splitting scheme from `initial` to `t_final`.
pub fn run(spec: &ModelSpec, initial: &GridDensity, cfg: &RunConfig) -> Result<TrajectoryRecord> {
    let n_steps = cfg.step_count()?;
    if cfg.n_particles < 2 {
        return Err(invalid(format!("need at least 2 particles, got {}", cfg.n_particles)));
    }
    let grid = *initial.grid();
    let mask_of = |rho: &GridDensity| -> SupportIndicator {
        if cfg.freeze_beta_empty {
            SupportIndicator::empty(grid)
        } else {
            support_set(rho, spec.support_threshold)
        }
    };

    let jcfg = cfg.jko_config();
    let initial_beta = mask_of(initial);
    let mut beta = initial_beta.clone();
    let mut ladder = initial.to_particles(cfg.n_particles)?;
    let mut steps = Vec::with_capacity(n_steps);

    for k in 1..=n_steps {
        let (new_ladder, jko) = jko_step(spec, &ladder, &beta, &jcfg)?;
        let rho_half = new_ladder.to_grid(grid)?;
        beta = mask_of(&rho_half);
        let rho = reaction_step(spec, &rho_half, cfg.tau)?;
        let gronwall = gronwall_check(spec, &rho_half, &rho, cfg.tau);
        ladder = if spec.k_m == 0.0 { new_ladder } else { rho.to_particles(cfg.n_particles)? };
        steps.push(StepRecord {
            time: k as f64 * cfg.tau,
            rho_half,
            rho,
            beta: beta.clone(),
            jko,
            gronwall,
        });
    }

    Ok(TrajectoryRecord {
        spec: spec.clone(),
        config: *cfg,
        initial: initial.clone(),
        initial_beta,
        steps,
    })
}
