//! Spatial representations: a uniform symmetric grid, cell-averaged densities,
//! equal-mass particle ladders (quantile coordinates), and scalar fields.
//!
//! Conventions used throughout the crate:
//! * the domain is `[-L, L]` split into `n` cells of width `dx = 2L/n`, with
//!   cell centers `x_i = -L + (i + 1/2) dx`;
//! * integrals of cell quantities are midpoint sums `Σ f(x_i) dx`;
//! * a particle ladder carries `n_p` strictly increasing positions of equal mass
//!   `m_p`, placed at the quantiles `F^{-1}((k - 1/2) m / n_p)` of the density's
//!   piecewise-linear CDF.

use crate::error::{invalid, Error, Result};

/// Uniform symmetric grid on `[-half_width, half_width]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    half_width: f64,
    cells: usize,
}

impl Grid {
    pub fn new(half_width: f64, cells: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(invalid(format!("grid half-width must be positive, got {half_width}")));
        }
        if cells < 2 {
            return Err(invalid(format!("grid needs at least 2 cells, got {cells}")));
        }
        Ok(Self { half_width, cells })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.cells as f64
    }

    /// Center of cell `i`.
    pub fn center(&self, i: usize) -> f64 {
        debug_assert!(i < self.cells);
        -self.half_width + (i as f64 + 0.5) * self.dx()
    }

    /// Left edge of cell `i`; `left_edge(cells)` is the right end of the domain.
    pub fn left_edge(&self, i: usize) -> f64 {
        debug_assert!(i <= self.cells);
        -self.half_width + i as f64 * self.dx()
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.cells).map(|i| self.center(i))
    }

    /// Index of the cell whose half-open span `[edge_i, edge_{i+1})` contains
    /// `x`, clamped to the domain (so `x = L` maps to the last cell).
    pub fn cell_index(&self, x: f64) -> usize {
        let raw = ((x + self.half_width) / self.dx()).floor();
        (raw.max(0.0) as usize).min(self.cells - 1)
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self == other
    }

    pub(crate) fn require_same(&self, other: &Grid, what: &str) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: ({}, {} cells) vs ({}, {} cells)",
                self.half_width, self.cells, other.half_width, other.cells
            )))
        }
    }
}

/// Nonnegative cell-averaged density on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    grid: Grid,
    values: Vec<f64>,
}

impl GridDensity {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(invalid(format!(
                "density has {} values for a grid of {} cells",
                values.len(),
                grid.cells()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(invalid(format!("density value {v} at cell {i} (must be finite and >= 0)")));
            }
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at cell centers. Negative samples are rejected, not clamped.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.centers().map(&f).collect();
        Self::new(grid, values)
    }

    pub fn zero(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.cells()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `Σ ρ_i dx`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx()
    }

    /// Same profile with every value multiplied by `c >= 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(invalid(format!("scale factor must be finite and >= 0, got {c}")));
        }
        Ok(Self { grid: self.grid, values: self.values.iter().map(|v| v * c).collect() })
    }

    /// `Σ x_i² ρ_i dx`.
    pub fn second_moment(&self) -> f64 {
        let dx = self.grid.dx();
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let x = self.grid.center(i);
                x * x * v
            })
            .sum::<f64>()
            * dx
    }

    /// Entropy `Σ (ρ_i ln ρ_i - ρ_i) dx`, with `0 ln 0 = 0`.
    pub fn entropy(&self) -> f64 {
        let dx = self.grid.dx();
        self.values
            .iter()
            .map(|&v| if v > 0.0 { v * v.ln() - v } else { 0.0 })
            .sum::<f64>()
            * dx
    }

    /// Squared discrete H¹ seminorm of `ρ^{γ/2}`: `Σ |D(ρ^{γ/2})_i|² dx`, with
    /// `D` the centered difference (one-sided at the two boundary cells).
    pub fn h1_seminorm_pow(&self, gamma: f64) -> f64 {
        let n = self.values.len();
        let dx = self.grid.dx();
        let g: Vec<f64> = self.values.iter().map(|&v| v.powf(gamma / 2.0)).collect();
        let mut acc = 0.0;
        for i in 0..n {
            let d = if i == 0 {
                (g[1] - g[0]) / dx
            } else if i == n - 1 {
                (g[n - 1] - g[n - 2]) / dx
            } else {
                (g[i + 1] - g[i - 1]) / (2.0 * dx)
            };
            acc += d * d;
        }
        acc * dx
    }

    /// Cumulative masses at the `n + 1` cell edges: `cum[0] = 0`,
    /// `cum[i+1] = cum[i] + ρ_i dx`. `cum[n]` is the total mass (bitwise equal to
    /// the accumulation order used here).
    pub(crate) fn edge_cumulative(&self) -> Vec<f64> {
        let dx = self.grid.dx();
        let mut cum = Vec::with_capacity(self.values.len() + 1);
        let mut acc = 0.0;
        cum.push(0.0);
        for &v in &self.values {
            acc += v * dx;
            cum.push(acc);
        }
        cum
    }

    /// Positions of the CDF quantiles for an ascending list of mass levels in
    /// `[0, cum.last()]`. Flat runs of the CDF (empty cells) resolve to their
    /// left-most point.
    pub(crate) fn quantiles_sorted(&self, cum: &[f64], levels: impl Iterator<Item = f64>) -> Vec<f64> {
        let n = self.values.len();
        let mut out = Vec::new();
        let mut j = 0usize;
        for s in levels {
            debug_assert!(s >= 0.0);
            while j < n && cum[j + 1] < s {
                j += 1;
            }
            if j == n {
                // Roundoff pushed s past the accumulated total; clamp to the
                // right end of the last nonempty cell.
                out.push(self.grid.left_edge(n));
                continue;
            }
            let x = if self.values[j] > 0.0 {
                self.grid.left_edge(j) + (s - cum[j]) / self.values[j]
            } else {
                // s == cum[j] on a flat run: left-most point.
                self.grid.left_edge(j)
            };
            out.push(x);
        }
        out
    }

    /// Equal-mass particle ladder at the quantiles `F^{-1}((k - 1/2) m / n_p)`.
    /// A minimum gap of `1e-10 · half_width` is enforced by a forward sweep so
    /// the ladder is strictly increasing even for spike data.
    pub fn to_particles(&self, n_particles: usize) -> Result<ParticleDensity> {
        if n_particles < 2 {
            return Err(invalid(format!("need at least 2 particles, got {n_particles}")));
        }
        let cum = self.edge_cumulative();
        let total = *cum.last().unwrap();
        if total <= 0.0 {
            return Err(Error::ZeroMass("to_particles"));
        }
        let m_p = total / n_particles as f64;
        let levels = (0..n_particles).map(|k| (k as f64 + 0.5) * m_p);
        let mut positions = self.quantiles_sorted(&cum, levels);
        let min_gap = 1e-10 * self.grid.half_width();
        for k in 1..positions.len() {
            if positions[k] < positions[k - 1] + min_gap {
                positions[k] = positions[k - 1] + min_gap;
            }
        }
        ParticleDensity::new(m_p, positions)
    }
}

/// Equal-mass particle ladder: `n_p` strictly increasing positions, each
/// carrying mass `particle_mass`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleDensity {
    particle_mass: f64,
    positions: Vec<f64>,
}

impl ParticleDensity {
    pub fn new(particle_mass: f64, positions: Vec<f64>) -> Result<Self> {
        if !(particle_mass.is_finite() && particle_mass > 0.0) {
            return Err(invalid(format!("particle mass must be positive, got {particle_mass}")));
        }
        if positions.len() < 2 {
            return Err(invalid(format!("need at least 2 particles, got {}", positions.len())));
        }
        for w in positions.windows(2) {
            if !(w[0].is_finite() && w[1].is_finite() && w[1] > w[0]) {
                return Err(invalid(format!(
                    "particle positions must be finite and strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { particle_mass, positions })
    }

    pub fn particle_mass(&self) -> f64 {
        self.particle_mass
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        false // constructor enforces >= 2 particles
    }

    pub fn mass(&self) -> f64 {
        self.particle_mass * self.positions.len() as f64
    }

    /// Width associated with each particle for density estimates: midpoint gaps
    /// `(X_{k+1} - X_{k-1})/2` in the interior, one-sided gaps at the ends.
    pub fn midpoint_gaps(&self) -> Vec<f64> {
        let x = &self.positions;
        let n = x.len();
        let mut gaps = Vec::with_capacity(n);
        gaps.push(x[1] - x[0]);
        for k in 1..n - 1 {
            gaps.push((x[k + 1] - x[k - 1]) / 2.0);
        }
        gaps.push(x[n - 1] - x[n - 2]);
        gaps
    }

    /// Squared 2-Wasserstein distance to another ladder with the same particle
    /// count and mass: `Σ m_p (X_k - Y_k)²`. The sorted identity matching is the
    /// optimal coupling in 1D.
    pub fn w2_sq_to(&self, other: &ParticleDensity) -> Result<f64> {
        if self.len() != other.len() {
            return Err(invalid(format!(
                "particle counts differ: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        let rel = (self.particle_mass - other.particle_mass).abs()
            / self.particle_mass.max(other.particle_mass);
        if rel > 1e-12 {
            return Err(Error::UnequalMass { lhs: self.mass(), rhs: other.mass(), rel });
        }
        let sum: f64 = self
            .positions
            .iter()
            .zip(&other.positions)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum();
        Ok(self.particle_mass * sum)
    }

    /// Piecewise-constant reconstruction deposited onto a grid by overlap
    /// fractions. Particle `k` spreads its mass uniformly over the interval
    /// between the midpoints toward its neighbors — width `Δ_k`, the same
    /// midpoint gap the Lagrangian energy uses — with the first and last
    /// particles extended symmetrically by half their one-sided gap. Using
    /// the midpoint widths (rather than one histogram bar per gap) makes the
    /// deposit insensitive to the odd/even gap alternation that the
    /// next-nearest-neighbor energy cannot penalize. Errors if the
    /// reconstruction support leaves the domain.
    pub fn to_grid(&self, grid: Grid) -> Result<GridDensity> {
        let x = &self.positions;
        let n = x.len();
        let first_gap = x[1] - x[0];
        let last_gap = x[n - 1] - x[n - 2];
        let lo = x[0] - 0.5 * first_gap;
        let hi = x[n - 1] + 0.5 * last_gap;
        if lo < -grid.half_width() || hi > grid.half_width() {
            return Err(Error::DomainOverflow { lo, hi, half_width: grid.half_width() });
        }

        let dx = grid.dx();
        let mut values = vec![0.0; grid.cells()];
        let mut deposit = |a: f64, b: f64, dens: f64| {
            let i_lo = grid.cell_index(a);
            let i_hi = grid.cell_index(b);
            for i in i_lo..=i_hi {
                let cell_a = grid.left_edge(i);
                let cell_b = grid.left_edge(i + 1);
                let overlap = (b.min(cell_b) - a.max(cell_a)).max(0.0);
                values[i] += dens * overlap / dx;
            }
        };
        let mut left = lo;
        for k in 0..n {
            let right = if k + 1 < n { 0.5 * (x[k] + x[k + 1]) } else { hi };
            deposit(left, right, self.particle_mass / (right - left));
            left = right;
        }

        GridDensity::new(grid, values)
    }
}

/// Arbitrary-sign scalar field on a grid (convolution outputs, velocities, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(invalid(format!(
                "field has {} values for a grid of {} cells",
                values.len(),
                grid.cells()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite field value {v}")));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}
