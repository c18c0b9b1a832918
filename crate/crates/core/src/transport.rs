//! One implicit transport step of the minimizing-movement scheme, solved in
//! Lagrangian coordinates.
//!
//! A density is represented by `n` equal-mass particles at its quantiles. In
//! one dimension the optimal transport between two such ladders is the
//! identity matching, so the squared 2-Wasserstein cost is simply
//! `m Σ (X_p - Y_p)²` and the whole step reduces to the finite-dimensional
//! problem
//!
//! ```text
//!   minimize  J[X] = m/(2τ) Σ (X_p - Y_p)²  +  A[X] + Kchi[X] + S[X]
//!   over      X_1 + gap ≤ X_2 + gap ≤ ... (ordered ladders)
//! ```
//!
//! with the internal energy evaluated through midpoint gaps, the quadratic
//! interaction through exponential prefix sums (`O(n)` instead of `O(n²)`,
//! with every factor `≤ 1` so the recurrences cannot overflow), and the
//! frozen support attraction through a merge walk over the masked cells.
//! The minimizer certifies the per-step energy dissipation inequality: since
//! `X = Y` is feasible with objective `F[Y]`, any accepted iterate satisfies
//! `F[X] + W₂²(X,Y)/(2τ) ≤ F[Y]` exactly, by construction.

use crate::error::{invalid, Result};
use crate::grid::ParticleDensity;
use crate::kernel::{cell_integral_1d, cell_integral_1d_deriv};
use crate::model::{EnergyParts, ModelSpec, SupportIndicator};

/// Tuning knobs for the per-step projected descent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JkoConfig {
    /// Time step `τ > 0` of the minimizing movement.
    pub tau: f64,
    /// Stop once the stationarity residual falls below `eps_grad` times its
    /// value at the starting point.
    pub eps_grad: f64,
    /// Iteration cap for one step.
    pub max_iters: usize,
}

impl JkoConfig {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(invalid(format!("tau must be positive, got {tau}")));
        }
        Ok(Self { tau, eps_grad: 1e-6, max_iters: 500 })
    }
}

/// What one transport step did, with the quantities every later check needs.
#[derive(Debug, Clone, PartialEq)]
pub struct JkoReport {
    /// Exact squared transport cost `m Σ (X_new - X_prev)²`.
    pub transport_sq: f64,
    /// Energy components at the starting ladder.
    pub energy_prev: EnergyParts,
    /// Energy components at the accepted minimizer.
    pub energy_new: EnergyParts,
    /// `J[X_prev] - J[X_new] ≥ 0`; the per-step descent certificate.
    pub objective_drop: f64,
    /// Descent iterations spent.
    pub iterations: usize,
    /// Final stationarity residual (sup-norm of the projected step at the
    /// reference step size, divided by that step size).
    pub residual: f64,
    /// Residual at the starting point, for relative comparisons.
    pub residual_initial: f64,
    /// Whether the step reached stationarity: either the relative residual
    /// target was met, or the descent ended (no objective decrease resolvable
    /// in doubles, or the iteration cap) after collapsing the residual at
    /// least a thousandfold below its starting value.
    /// `false` means a genuine stall — the iterate is not trustworthy.
    pub converged: bool,
}

/// Frozen support-attraction field: positions and mask of the occupied cells,
/// evaluated at sorted query points by one forward and one backward walk.
/// Equivalent to summing [`cell_integral_1d`] over all masked cells, checked
/// against that sum in the tests; every accumulator factor is `exp` of a
/// nonpositive number, so the walk is overflow-free regardless of domain size.
pub(crate) struct SupportWalk {
    centers: Vec<f64>,
    mask_centers: Vec<f64>,
    dx: f64,
    half_width: f64,
    mask: Vec<bool>,
    sinh_half: f64,
}

impl SupportWalk {
    pub(crate) fn new(beta: &SupportIndicator) -> Self {
        let grid = beta.grid();
        let centers: Vec<f64> = grid.centers().collect();
        let mask_centers = centers
            .iter()
            .zip(beta.mask())
            .filter(|(_, &m)| m)
            .map(|(&c, _)| c)
            .collect();
        Self {
            centers,
            mask_centers,
            dx: grid.dx(),
            half_width: grid.half_width(),
            mask: beta.mask().to_vec(),
            sinh_half: (0.5 * grid.dx()).sinh(),
        }
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.mask_centers.is_empty()
    }

    /// `(K ∗ 1_S)(x)` and its derivative at every query point; `xs` must be
    /// ascending. Query points may lie outside the grid.
    pub(crate) fn eval(&self, xs: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = xs.len();
        let half = 0.5 * self.dx;
        let mut value = vec![0.0; n];
        let mut deriv = vec![0.0; n];
        if self.mask_centers.is_empty() {
            return (value, deriv);
        }
        // Left cells: Σ_{c ≤ x - dx/2} e^{c - x}, carried with decay factors.
        let mut acc = 0.0;
        let mut j = 0;
        let mut x_prev = f64::NEG_INFINITY;
        for (i, &x) in xs.iter().enumerate() {
            if x_prev.is_finite() {
                acc *= (x_prev - x).exp();
            }
            while j < self.mask_centers.len() && self.mask_centers[j] <= x - half {
                acc += (self.mask_centers[j] - x).exp();
                j += 1;
            }
            value[i] += self.sinh_half * acc;
            deriv[i] -= self.sinh_half * acc;
            x_prev = x;
        }
        // Right cells: Σ_{c ≥ x + dx/2} e^{x - c}, walked backwards.
        let mut acc = 0.0;
        let mut j = self.mask_centers.len();
        let mut x_prev = f64::INFINITY;
        for (i, &x) in xs.iter().enumerate().rev() {
            if x_prev.is_finite() {
                acc *= (x - x_prev).exp();
            }
            while j > 0 && self.mask_centers[j - 1] >= x + half {
                acc += (x - self.mask_centers[j - 1]).exp();
                j -= 1;
            }
            value[i] += self.sinh_half * acc;
            deriv[i] += self.sinh_half * acc;
            x_prev = x;
        }
        // At most one masked cell holds x in its interior.
        for (i, &x) in xs.iter().enumerate() {
            if x.abs() >= self.half_width {
                continue;
            }
            let cell = ((x + self.half_width) / self.dx).floor() as usize;
            let cell = cell.min(self.mask.len() - 1);
            if self.mask[cell] {
                let r = x - self.centers[cell];
                if r.abs() < half {
                    value[i] += cell_integral_1d(r, self.dx);
                    deriv[i] += cell_integral_1d_deriv(r, self.dx);
                }
            }
        }
        (value, deriv)
    }
}

/// Exact Euclidean projection onto `{x : x_{i+1} ≥ x_i + gap}` by pooling
/// adjacent violators on the shifted coordinates `x_i - i·gap`.
pub(crate) fn project_ordered(x: &mut [f64], gap: f64) {
    let n = x.len();
    // Blocks of pooled coordinates: (sum of shifted values, count).
    let mut sums: Vec<f64> = Vec::with_capacity(n);
    let mut counts: Vec<usize> = Vec::with_capacity(n);
    for (i, &xi) in x.iter().enumerate() {
        let mut s = xi - i as f64 * gap;
        let mut c = 1usize;
        while let (Some(&ps), Some(&pc)) = (sums.last(), counts.last()) {
            // Merge while the previous block mean exceeds this block mean.
            if ps * c as f64 > s * pc as f64 {
                s += ps;
                c += pc;
                sums.pop();
                counts.pop();
            } else {
                break;
            }
        }
        sums.push(s);
        counts.push(c);
    }
    let mut i = 0;
    for (s, c) in sums.into_iter().zip(counts) {
        let mean = s / c as f64;
        for _ in 0..c {
            x[i] = mean + i as f64 * gap;
            i += 1;
        }
    }
}

/// The finite-dimensional step problem: anchor ladder, model, frozen support
/// field and step size.
pub(crate) struct StepProblem<'a> {
    pub(crate) spec: &'a ModelSpec,
    pub(crate) walk: &'a SupportWalk,
    pub(crate) anchor: &'a [f64],
    pub(crate) mass: f64,
    pub(crate) tau: f64,
}

impl StepProblem<'_> {
    /// Energy `F[X] = A + Kchi + S` of a ladder (no transport term).
    fn energy(&self, x: &[f64]) -> EnergyParts {
        let internal = self.internal_energy(x);
        let (interaction, support) = if self.spec.chi > 0.0 {
            (self.interaction_energy(x), self.support_energy(x))
        } else {
            (0.0, 0.0)
        };
        EnergyParts { internal, interaction, support }
    }

    fn internal_energy(&self, x: &[f64]) -> f64 {
        let m = self.mass;
        let gamma = self.spec.gamma;
        // u(Δ) = Φ(m/Δ)·Δ = m^γ / ((γ-1) Δ^{γ-1}).
        let coeff = m.powf(gamma) / (gamma - 1.0);
        midpoint_gaps(x).map(|d| coeff * d.powf(1.0 - gamma)).sum()
    }

    fn interaction_energy(&self, x: &[f64]) -> f64 {
        let (c, d) = neighbor_sums(x);
        let total: f64 = c.iter().zip(&d).map(|(&a, &b)| a + b + 1.0).sum();
        -0.25 * self.spec.chi * self.mass * self.mass * total
    }

    fn support_energy(&self, x: &[f64]) -> f64 {
        if self.walk.is_empty() {
            return 0.0;
        }
        let (value, _) = self.walk.eval(x);
        -self.spec.chi * self.mass * value.iter().sum::<f64>()
    }

    /// Full step objective `J[X] = m/(2τ) Σ (X-Y)² + F[X]`.
    pub(crate) fn objective(&self, x: &[f64]) -> f64 {
        let move_sq: f64 = x.iter().zip(self.anchor).map(|(a, y)| (a - y) * (a - y)).sum();
        self.mass / (2.0 * self.tau) * move_sq + self.energy(x).total()
    }

    pub(crate) fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let m = self.mass;
        let gamma = self.spec.gamma;
        let mut g: Vec<f64> = x
            .iter()
            .zip(self.anchor)
            .map(|(a, y)| m / self.tau * (a - y))
            .collect();
        // Internal energy: u'(Δ) = -P(m/Δ) = -(m/Δ)^γ, spread onto the ladder
        // points that define each midpoint gap.
        let u_prime: Vec<f64> = midpoint_gaps(x).map(|d| -(m / d).powf(gamma)).collect();
        g[0] -= u_prime[0];
        g[1] += u_prime[0];
        g[n - 2] -= u_prime[n - 1];
        g[n - 1] += u_prime[n - 1];
        for (p, &up) in u_prime.iter().enumerate().take(n - 1).skip(1) {
            g[p - 1] -= 0.5 * up;
            g[p + 1] += 0.5 * up;
        }
        if self.spec.chi > 0.0 {
            let (c, d) = neighbor_sums(x);
            for i in 0..n {
                g[i] += 0.5 * self.spec.chi * m * m * (c[i] - d[i]);
            }
            if !self.walk.is_empty() {
                let (_, deriv) = self.walk.eval(x);
                for i in 0..n {
                    g[i] -= self.spec.chi * m * deriv[i];
                }
            }
        }
        g
    }
}

/// Midpoint gaps of a sorted slice: one-sided at the ends, half the two-sided
/// spacing inside (matches `ParticleDensity::midpoint_gaps`).
fn midpoint_gaps(x: &[f64]) -> impl Iterator<Item = f64> + '_ {
    let n = x.len();
    (0..n).map(move |p| {
        if p == 0 {
            x[1] - x[0]
        } else if p == n - 1 {
            x[n - 1] - x[n - 2]
        } else {
            0.5 * (x[p + 1] - x[p - 1])
        }
    })
}

/// Prefix sums `c_i = Σ_{j<i} e^{X_j - X_i}` and `d_i = Σ_{j>i} e^{X_i - X_j}`
/// in `O(n)`; every factor is `exp` of a nonpositive difference.
fn neighbor_sums(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 1..n {
        c[i] = (c[i - 1] + 1.0) * (x[i - 1] - x[i]).exp();
    }
    for i in (0..n - 1).rev() {
        d[i] = (d[i + 1] + 1.0) * (x[i] - x[i + 1]).exp();
    }
    (c, d)
}

/// One minimizing-movement step: starting from `prev`, minimizes the step
/// objective over ordered ladders by projected gradient descent with
/// Barzilai-Borwein step sizes and an Armijo line search.
///
/// The support mask `beta` is frozen for the whole step. The returned ladder
/// is strictly ordered with gaps of at least `1e-10` times the grid half
/// width; non-convergence within the iteration cap is reported, not an error.
pub fn jko_step(
    spec: &ModelSpec,
    prev: &ParticleDensity,
    beta: &SupportIndicator,
    cfg: &JkoConfig,
) -> Result<(ParticleDensity, JkoReport)> {
    let walk = SupportWalk::new(beta);
    jko_step_with_walk(spec, prev, &walk, cfg)
}

pub(crate) fn jko_step_with_walk(
    spec: &ModelSpec,
    prev: &ParticleDensity,
    walk: &SupportWalk,
    cfg: &JkoConfig,
) -> Result<(ParticleDensity, JkoReport)> {
    if !(cfg.tau.is_finite() && cfg.tau > 0.0) {
        return Err(invalid(format!("tau must be positive, got {}", cfg.tau)));
    }
    let m = prev.particle_mass();
    let problem = StepProblem {
        spec,
        walk,
        anchor: prev.positions(),
        mass: m,
        tau: cfg.tau,
    };
    let min_gap = 1e-10 * walk.half_width;
    // Reference step: exact Newton step of the quadratic transport term.
    let alpha_ref = cfg.tau / m;

    let mut x: Vec<f64> = prev.positions().to_vec();
    let mut f_x = problem.objective(&x);
    let f_start = f_x;
    let energy_prev = problem.energy(&x);
    let mut grad = problem.gradient(&x);

    let residual_of = |x: &[f64], grad: &[f64]| -> f64 {
        let mut trial: Vec<f64> = x.iter().zip(grad).map(|(a, g)| a - alpha_ref * g).collect();
        project_ordered(&mut trial, min_gap);
        trial
            .iter()
            .zip(x)
            .map(|(t, a)| (t - a).abs())
            .fold(0.0, f64::max)
            / alpha_ref
    };

    let residual_initial = residual_of(&x, &grad);
    let target = cfg.eps_grad * residual_initial;
    let mut residual = residual_initial;
    let mut alpha = alpha_ref;
    let mut iterations = 0;
    let mut converged = residual <= target;

    // Objective evaluations carry O(ε·|J|) rounding noise, so near the
    // minimizer the line search eventually finds no resolvable decrease at any
    // dyadic step scale and the residual plateaus a small factor above a tight
    // relative target. A descent that ends there — or at the iteration cap
    // after collapsing the residual at least a thousandfold — is treated as
    // stationary; ending any higher is a genuine stall and is reported as one.
    let floor_residual = 1e-3 * residual_initial;

    while !converged && iterations < cfg.max_iters {
        iterations += 1;
        // Armijo backtracking on the projected path.
        let mut accepted = false;
        let mut x_new = Vec::new();
        let mut f_new = 0.0;
        let mut step = alpha;
        for _ in 0..60 {
            let mut trial: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
            project_ordered(&mut trial, min_gap);
            let move_sq: f64 =
                trial.iter().zip(&x).map(|(t, a)| (t - a) * (t - a)).sum();
            if move_sq == 0.0 {
                break; // gradient points into the constraint normal cone
            }
            let f_trial = problem.objective(&trial);
            if f_trial <= f_x - 1e-4 / step * move_sq {
                x_new = trial;
                f_new = f_trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        let grad_new = problem.gradient(&x_new);
        // BB1 step from the accepted displacement, safeguarded around the
        // reference scale.
        let (mut sy, mut ss) = (0.0, 0.0);
        for ((xn, xo), (gn, go)) in x_new.iter().zip(&x).zip(grad_new.iter().zip(&grad)) {
            let s = xn - xo;
            sy += s * (gn - go);
            ss += s * s;
        }
        alpha = if sy > 0.0 {
            (ss / sy).clamp(1e-10 * alpha_ref, 1e6 * alpha_ref)
        } else {
            alpha_ref
        };
        x = x_new;
        f_x = f_new;
        grad = grad_new;
        residual = residual_of(&x, &grad);
        converged = residual <= target;
    }
    if !converged && residual <= floor_residual {
        converged = true;
    }

    let new = ParticleDensity::new(m, x)?;
    let transport_sq = new.w2_sq_to(prev)?;
    let energy_new = problem.energy(new.positions());
    Ok((
        new,
        JkoReport {
            transport_sq,
            energy_prev,
            energy_new,
            objective_drop: f_start - f_x,
            iterations,
            residual,
            residual_initial,
            converged,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, GridDensity};
    use crate::kernel::bessel_1d;
    use crate::model::support_set;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(gamma: f64, chi: f64) -> ModelSpec {
        ModelSpec::new(gamma, chi, 0.0, 1.0, 0.0).unwrap()
    }

    fn sorted_positions(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
        x.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut prev = f64::NEG_INFINITY;
        for v in x.iter_mut() {
            if *v <= prev + 1e-6 {
                *v = prev + 1e-6;
            }
            prev = *v;
        }
        x
    }

    #[test]
    fn pava_pools_and_projects() {
        // All-equal input spreads symmetrically around its mean.
        let mut x = vec![5.0, 5.0, 5.0];
        project_ordered(&mut x, 2.0);
        assert_eq!(x, vec![3.0, 5.0, 7.0]);
        // Already-feasible input is untouched.
        let mut y = vec![0.0, 1.0, 3.0];
        project_ordered(&mut y, 0.5);
        assert_eq!(y, vec![0.0, 1.0, 3.0]);
        // Projection property: no feasible point is closer than the output.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let z: Vec<f64> = (0..12).map(|_| rng.random_range(-5.0..5.0)).collect();
            let mut p = z.clone();
            project_ordered(&mut p, 0.1);
            for w in p.windows(2) {
                assert!(w[1] >= w[0] + 0.1 - 1e-12);
            }
            let dist_p: f64 = z.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum();
            for _ in 0..20 {
                let mut w = sorted_positions(&mut rng, 12, -5.0, 5.0);
                for (k, v) in w.iter_mut().enumerate() {
                    *v += 0.1 * k as f64; // guarantee the gap
                }
                let dist_w: f64 = z.iter().zip(&w).map(|(a, b)| (a - b) * (a - b)).sum();
                assert!(dist_p <= dist_w + 1e-12);
            }
        }
    }

    #[test]
    fn support_walk_matches_direct_cell_sum() {
        let grid = Grid::new(6.0, 160).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mask: Vec<bool> = (0..160).map(|_| rng.random_range(0.0..1.0) < 0.3).collect();
        let beta = SupportIndicator::from_mask(grid, mask.clone()).unwrap();
        let walk = SupportWalk::new(&beta);
        // Query points inside and outside the domain, sorted.
        let xs = sorted_positions(&mut rng, 50, -8.0, 8.0);
        let (value, deriv) = walk.eval(&xs);
        let dx = grid.dx();
        for (i, &x) in xs.iter().enumerate() {
            let mut v = 0.0;
            let mut d = 0.0;
            for (j, &on) in mask.iter().enumerate() {
                if on {
                    v += cell_integral_1d(x - grid.center(j), dx);
                    d += cell_integral_1d_deriv(x - grid.center(j), dx);
                }
            }
            assert!((value[i] - v).abs() <= 1e-12 * (1.0 + v.abs()), "value at {x}");
            assert!((deriv[i] - d).abs() <= 1e-12 * (1.0 + d.abs()), "deriv at {x}");
        }
    }

    #[test]
    fn neighbor_sums_match_quadratic_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let x = sorted_positions(&mut rng, 80, -4.0, 4.0);
        let (c, d) = neighbor_sums(&x);
        for i in 0..x.len() {
            let cs: f64 = (0..i).map(|j| (x[j] - x[i]).exp()).sum();
            let ds: f64 = (i + 1..x.len()).map(|j| (x[i] - x[j]).exp()).sum();
            assert!((c[i] - cs).abs() <= 1e-12 * (1.0 + cs));
            assert!((d[i] - ds).abs() <= 1e-12 * (1.0 + ds));
        }
        // Σ_j K(X_i - X_j) = (c_i + d_i + 1)/2 against the direct kernel sum.
        for i in [0, 40, 79] {
            let direct: f64 = x.iter().map(|&y| bessel_1d(x[i] - y)).sum();
            assert!((0.5 * (c[i] + d[i] + 1.0) - direct).abs() <= 1e-12 * direct);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let grid = Grid::new(6.0, 96).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for gamma in [2.0, 3.0] {
            let sp = spec(gamma, 1.0);
            let mask: Vec<bool> = (0..96).map(|_| rng.random_range(0.0..1.0) < 0.4).collect();
            let beta = SupportIndicator::from_mask(grid, mask).unwrap();
            let walk = SupportWalk::new(&beta);
            for _ in 0..5 {
                let anchor = sorted_positions(&mut rng, 30, -3.0, 3.0);
                let x = sorted_positions(&mut rng, 30, -3.0, 3.0);
                let problem = StepProblem {
                    spec: &sp,
                    walk: &walk,
                    anchor: &anchor,
                    mass: 1.0 / 30.0,
                    tau: 1e-2,
                };
                let g = problem.gradient(&x);
                let scale = g.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
                let h = 1e-6;
                for i in [0usize, 1, 14, 28, 29] {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += h;
                    xm[i] -= h;
                    let fd = (problem.objective(&xp) - problem.objective(&xm)) / (2.0 * h);
                    assert!(
                        (fd - g[i]).abs() <= 1e-5 * (1.0 + scale),
                        "gamma={gamma} i={i}: fd {fd} vs {g:?}",
                        g = g[i]
                    );
                }
            }
        }
    }

    #[test]
    fn two_particle_step_matches_scalar_minimization() {
        // With χ = 0 the step decouples into center (fixed) and gap g:
        //   J(g) = m (g - g₀)² / (4τ) + 2 m² / g   (γ = 2)
        // and the optimal gap solves m(g-g₀)/(2τ) = 2m²/g².
        let sp = spec(2.0, 0.0);
        let grid = Grid::new(5.0, 64).unwrap();
        let beta = SupportIndicator::empty(grid);
        let m = 0.7;
        let (y0, y1) = (-0.3, 0.9);
        let prev = ParticleDensity::new(m, vec![y0, y1]).unwrap();
        let tau = 0.05;
        let mut cfg = JkoConfig::new(tau).unwrap();
        cfg.eps_grad = 1e-12;
        let (new, report) = jko_step(&sp, &prev, &beta, &cfg).unwrap();
        assert!(report.converged, "residual {}", report.residual);

        let g0 = y1 - y0;
        let dj = |g: f64| m * (g - g0) / (2.0 * tau) - 2.0 * m * m / (g * g);
        let (mut lo, mut hi) = (1e-6, 50.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if dj(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let g_star = 0.5 * (lo + hi);
        let center = 0.5 * (y0 + y1);
        let got_gap = new.positions()[1] - new.positions()[0];
        let got_center = 0.5 * (new.positions()[0] + new.positions()[1]);
        assert!((got_gap - g_star).abs() < 1e-7, "gap {got_gap} vs {g_star}");
        assert!((got_center - center).abs() < 1e-9);
        assert!(g_star > g0, "pure diffusion must spread the pair");
    }

    #[test]
    fn step_decreases_objective_and_certifies_dissipation() {
        let grid = Grid::new(6.0, 128).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for chi in [0.0, 1.0] {
            let sp = spec(2.0, chi);
            for _ in 0..4 {
                let rho = GridDensity::from_fn(grid, |x| {
                    (-(x - 0.3) * (x - 0.3)).exp() + 0.5 * (-(x + 1.5) * (x + 1.5) * 4.0).exp()
                })
                .unwrap();
                let beta = support_set(&rho, 1e-3);
                let n_p = 60 + rng.random_range(0..40);
                let prev = rho.to_particles(n_p).unwrap();
                let cfg = JkoConfig::new(2e-3).unwrap();
                let (new, report) = jko_step(&sp, &prev, &beta, &cfg).unwrap();
                // Ladder stays strictly sorted.
                for w in new.positions().windows(2) {
                    assert!(w[1] > w[0]);
                }
                assert!(report.objective_drop >= 0.0);
                // Dissipation certificate: F_new + W₂²/(2τ) ≤ F_prev exactly
                // (up to roundoff), because X = prev was feasible.
                let lhs = report.energy_new.total() + report.transport_sq / (2.0 * cfg.tau);
                let rhs = report.energy_prev.total();
                assert!(
                    lhs <= rhs + 1e-11 * (1.0 + rhs.abs()),
                    "chi={chi}: {lhs} vs {rhs}"
                );
                assert!(report.converged, "residual {} of {}", report.residual, report.residual_initial);
            }
        }
    }

    #[test]
    fn particle_internal_energy_converges_to_grid_energy() {
        // Smooth compact bump: the midpoint-gap estimate must approach the
        // Eulerian internal energy as the ladder refines.
        let grid = Grid::new(4.0, 4096).unwrap();
        let rho = GridDensity::from_fn(grid, |x| {
            let s = 1.0 - x * x;
            if s > 0.0 {
                s * s
            } else {
                0.0
            }
        })
        .unwrap();
        let sp = spec(2.0, 0.0);
        let eulerian = sp.internal_energy(&rho);
        let walk = SupportWalk::new(&SupportIndicator::empty(grid));
        let err_at = |n_p: usize| {
            let p = rho.to_particles(n_p).unwrap();
            let problem = StepProblem {
                spec: &sp,
                walk: &walk,
                anchor: p.positions(),
                mass: p.particle_mass(),
                tau: 1.0,
            };
            (problem.internal_energy(p.positions()) - eulerian).abs()
        };
        let (e1, e2, e3) = (err_at(200), err_at(400), err_at(800));
        assert!(e2 < e1 && e3 < e2, "errors {e1:.3e}, {e2:.3e}, {e3:.3e}");
        assert!(e3 <= 0.01 * eulerian.abs(), "err {e3:.3e} vs energy {eulerian:.3e}");
    }

    #[test]
    fn report_transport_cost_is_the_identity_matching() {
        let grid = Grid::new(5.0, 64).unwrap();
        let rho = GridDensity::from_fn(grid, |x| (-x * x).exp()).unwrap();
        let prev = rho.to_particles(50).unwrap();
        let beta = support_set(&rho, 1e-4);
        let sp = spec(2.0, 0.8);
        let (new, report) = jko_step(&sp, &prev, &beta, &JkoConfig::new(1e-3).unwrap()).unwrap();
        let direct = new.w2_sq_to(&prev).unwrap();
        assert_eq!(report.transport_sq, direct);
        assert!(report.iterations > 0);
    }
}
