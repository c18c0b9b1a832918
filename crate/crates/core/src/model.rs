//! Model data: the internal-energy nonlinearity `Φ`, the reaction law `M`, the
//! uptake law `h`, the aggregation strength `χ`, and the support indicator `β`
//! that feeds the frozen-attraction term of the splitting scheme.
//!
//! The default nonlinearity is the power family `Φ(s) = s^γ/(γ-1)` with `γ > 1`,
//! which satisfies the two-sided bound `γ·s^{γ-2} ≤ Φ''(s) ≤ γ·s^{γ-2}` (with
//! equality); the constructor re-checks the sandwich numerically so alternative
//! families can be added without silently breaking the convexity assumptions the
//! scheme relies on.

use crate::error::{invalid, Result};
use crate::grid::{Grid, GridDensity};
use crate::kernel::KernelTable;

/// Tag for the internal-energy family. Only the power law is shipped; the tag
/// exists so the sandwich check has a place to discriminate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nonlinearity {
    PowerLaw,
}

/// Model parameters. `support_threshold` is the density level above which a
/// cell counts as occupied when building `β` (by convention `1e-10` times the
/// peak of the initial datum; the driver fills that in for presets).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub gamma: f64,
    pub chi: f64,
    pub k_m: f64,
    pub k_h: f64,
    pub support_threshold: f64,
    pub family: Nonlinearity,
}

impl ModelSpec {
    pub fn new(gamma: f64, chi: f64, k_m: f64, k_h: f64, support_threshold: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 1.0) {
            return Err(invalid(format!("gamma must be > 1, got {gamma}")));
        }
        if !(chi.is_finite() && chi >= 0.0) {
            return Err(invalid(format!("chi must be >= 0, got {chi}")));
        }
        if !(k_m.is_finite() && k_m >= 0.0) {
            return Err(invalid(format!("k_m must be >= 0, got {k_m}")));
        }
        if !(k_h.is_finite() && k_h > 0.0) {
            return Err(invalid(format!("k_h must be > 0, got {k_h}")));
        }
        if !(support_threshold.is_finite() && support_threshold >= 0.0) {
            return Err(invalid(format!("support threshold must be >= 0, got {support_threshold}")));
        }
        let spec = Self { gamma, chi, k_m, k_h, support_threshold, family: Nonlinearity::PowerLaw };
        spec.check_sandwich()?;
        Ok(spec)
    }

    /// Lower/upper constants of the convexity sandwich
    /// `c_γ s^{γ-2} ≤ Φ''(s) ≤ C_γ s^{γ-2}`; both equal `γ` for the power law.
    pub fn sandwich_constants(&self) -> (f64, f64) {
        (self.gamma, self.gamma)
    }

    /// 200-point log-spaced sandwich check on `[1e-6, 1e3]`.
    fn check_sandwich(&self) -> Result<()> {
        let (c_lo, c_hi) = self.sandwich_constants();
        for k in 0..200 {
            let t = k as f64 / 199.0;
            let s = 10f64.powf(-6.0 + 9.0 * t);
            let bound = s.powf(self.gamma - 2.0);
            let second = self.phi_second(s);
            if second < c_lo * bound * (1.0 - 1e-9) || second > c_hi * bound * (1.0 + 1e-9) {
                return Err(invalid(format!(
                    "nonlinearity violates the convexity sandwich at s={s}: Phi''={second}, bounds [{}, {}]",
                    c_lo * bound,
                    c_hi * bound
                )));
            }
        }
        Ok(())
    }

    /// `Φ(s) = s^γ/(γ-1)`.
    pub fn phi(&self, s: f64) -> f64 {
        s.powf(self.gamma) / (self.gamma - 1.0)
    }

    /// `Φ'(s) = γ s^{γ-1}/(γ-1)`.
    pub fn phi_prime(&self, s: f64) -> f64 {
        self.gamma * s.powf(self.gamma - 1.0) / (self.gamma - 1.0)
    }

    /// `Φ''(s) = γ s^{γ-2}`.
    pub fn phi_second(&self, s: f64) -> f64 {
        self.gamma * s.powf(self.gamma - 2.0)
    }

    /// `f(z) = Φ(z^{2/γ}) = z²/(γ-1)`: the convex function whose argument is the
    /// `γ/2`-th power of the density; quadratic for every `γ` in this family.
    pub fn f_of_pow(&self, z: f64) -> f64 {
        self.phi(z.powf(2.0 / self.gamma))
    }

    /// Pressure `P(s) = s Φ'(s) - Φ(s) = s^γ`; satisfies `∇P(ρ) = ρ ∇Φ'(ρ)`.
    pub fn pressure(&self, s: f64) -> f64 {
        s.powf(self.gamma)
    }

    /// `P'(s) = s Φ''(s) = γ s^{γ-1}`, the nonlinear diffusivity.
    pub fn pressure_prime(&self, s: f64) -> f64 {
        self.gamma * s.powf(self.gamma - 1.0)
    }

    /// Logistic reaction `M(s) = k_M s (1 - s)`; vanishes at 0 and 1 and obeys
    /// `M(s) ≤ k_M s`.
    pub fn reaction(&self, s: f64) -> f64 {
        self.k_m * s * (1.0 - s)
    }

    /// Saturating uptake `h(s) = k_h s / (1 + s)`; `h(0) = 0`, `h' ≤ k_h`.
    pub fn uptake(&self, s: f64) -> f64 {
        self.k_h * s / (1.0 + s)
    }

    /// Internal energy `A[ρ] = Σ Φ(ρ_i) dx ≥ 0`.
    pub fn internal_energy(&self, rho: &GridDensity) -> f64 {
        let dx = rho.grid().dx();
        rho.values().iter().map(|&v| self.phi(v)).sum::<f64>() * dx
    }

    /// Interaction energy `Kchi[ρ] = -(χ/2) Σ ρ_i (K∗ρ)_i dx`; bounded below by
    /// `-(χ/2) ‖K‖_∞ mass²` and nonpositive.
    pub fn interaction_energy(&self, rho: &GridDensity, tab: &KernelTable) -> Result<f64> {
        if self.chi == 0.0 {
            return Ok(0.0);
        }
        let field = tab.convolve(rho)?;
        let dx = rho.grid().dx();
        let acc: f64 = rho.values().iter().zip(field.values()).map(|(&r, &c)| r * c).sum();
        Ok(-0.5 * self.chi * acc * dx)
    }

    /// Support-attraction energy `S[ρ|β] = -χ Σ ρ_i (K∗1_S)_i dx`, frozen at the
    /// support `β` of a previous state; within `[-χ·mass, 0]`.
    pub fn support_energy(
        &self,
        rho: &GridDensity,
        beta: &SupportIndicator,
        tab: &KernelTable,
    ) -> Result<f64> {
        if self.chi == 0.0 {
            return Ok(0.0);
        }
        rho.grid().require_same(beta.grid(), "support_energy")?;
        let field = tab.convolve_indicator(beta)?;
        let dx = rho.grid().dx();
        let acc: f64 = rho.values().iter().zip(field.values()).map(|(&r, &c)| r * c).sum();
        Ok(-self.chi * acc * dx)
    }

    /// All three energy components at once.
    pub fn energy_parts(
        &self,
        rho: &GridDensity,
        beta: &SupportIndicator,
        tab: &KernelTable,
    ) -> Result<EnergyParts> {
        Ok(EnergyParts {
            internal: self.internal_energy(rho),
            interaction: self.interaction_energy(rho, tab)?,
            support: self.support_energy(rho, beta, tab)?,
        })
    }

    /// `A + Kchi + S`.
    pub fn total_energy(
        &self,
        rho: &GridDensity,
        beta: &SupportIndicator,
        tab: &KernelTable,
    ) -> Result<f64> {
        Ok(self.energy_parts(rho, beta, tab)?.total())
    }
}

/// The three components of the implicit-explicit energy, logged separately so
/// the dissipation and summed-transport checks can be assembled exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    pub internal: f64,
    pub interaction: f64,
    pub support: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.internal + self.interaction + self.support
    }
}

/// Per-cell 0/1 mask marking the occupied region used by the frozen attraction
/// term.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportIndicator {
    grid: Grid,
    mask: Vec<bool>,
}

impl SupportIndicator {
    pub fn from_mask(grid: Grid, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != grid.cells() {
            return Err(invalid(format!(
                "mask has {} entries for a grid of {} cells",
                mask.len(),
                grid.cells()
            )));
        }
        Ok(Self { grid, mask })
    }

    /// `β_i = 1` exactly where `ρ_i > threshold` (strict).
    pub fn from_density(rho: &GridDensity, threshold: f64) -> Self {
        let mask = rho.values().iter().map(|&v| v > threshold).collect();
        Self { grid: *rho.grid(), mask }
    }

    pub fn empty(grid: Grid) -> Self {
        Self { grid, mask: vec![false; grid.cells()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }
}

/// Support set of a density at level `threshold` (strictly above).
pub fn support_set(rho: &GridDensity, threshold: f64) -> SupportIndicator {
    SupportIndicator::from_density(rho, threshold)
}
