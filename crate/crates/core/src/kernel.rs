//! The interaction kernel: the Green's function of `(I - Δ)`, i.e. the kernel
//! with Fourier symbol `1/(1 + |ξ|²)`.
//!
//! In one dimension it has the closed form `K(x) = e^{-|x|}/2` (the Morse
//! kernel); this is what the solver uses. The two-dimensional kernel is provided
//! for reference checks via the subordination integral
//!
//! ```text
//! K(x) = (1/4π) ∫₀^∞ t^{-d/2} exp(-π|x|²/t - t/(4π)) dt ,
//! ```
//!
//! which integrates to one in every dimension and reduces to the Morse kernel at
//! `d = 1`.
//!
//! Grid convolutions go through a precomputed lag table and a direct `O(n²)` sum
//! — exact summation order, no transform — which is cheap at the resolutions
//! this crate targets (`n ≤ 4096`) and keeps the values bit-reproducible.

use crate::error::Result;
use crate::grid::{Grid, GridDensity, ScalarField};
use crate::model::SupportIndicator;

/// `K(x) = e^{-|x|}/2`, the 1D kernel.
pub fn bessel_1d(x: f64) -> f64 {
    0.5 * (-x.abs()).exp()
}

/// `K'(x) = -sign(x) e^{-|x|}/2`, with `K'(0) = 0`.
pub fn bessel_1d_deriv(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        -x.signum() * 0.5 * (-x.abs()).exp()
    }
}

/// Exact integral of the 1D kernel over a cell of width `dx` centered at
/// distance `r` from the evaluation point:
/// `∫_{r-dx/2}^{r+dx/2} K(u) du`.
///
/// Used for indicator convolutions, where exact cell integrals (rather than
/// midpoint values) keep the result rigorously inside `[0, 1]`.
pub(crate) fn cell_integral_1d(r: f64, dx: f64) -> f64 {
    let h = 0.5 * dx;
    let a = r.abs();
    if a >= h {
        (-a).exp() * h.sinh()
    } else {
        1.0 - (-h).exp() * r.cosh()
    }
}

/// Derivative of [`cell_integral_1d`] in `r`; continuous across `|r| = dx/2`.
pub(crate) fn cell_integral_1d_deriv(r: f64, dx: f64) -> f64 {
    let h = 0.5 * dx;
    if r.abs() >= h {
        -r.signum() * (-r.abs()).exp() * h.sinh()
    } else {
        -(-h).exp() * r.sinh()
    }
}

/// 2D kernel `K(r)` at radius `r > 0`, by adaptive quadrature of the
/// subordination integral after the substitution `t = e^u`. Relative accuracy
/// 1e-8. Diverges logarithmically as `r → 0` (callers must pass `r > 0`).
pub fn bessel_2d(r: f64) -> f64 {
    assert!(r > 0.0 && r.is_finite(), "bessel_2d needs r > 0, got {r}");
    // Integrand g(u) = (1/4π) exp(-π r² e^{-u} - e^u/(4π)); doubly-exponential
    // decay on both sides of the saddle at u* = ln(2πr).
    let u_star = (2.0 * std::f64::consts::PI * r).ln();
    let (lo, hi) = (u_star - 46.0, u_star + 46.0);
    let g = |u: f64| {
        let t_inv = (-u).exp();
        let t = u.exp();
        let expo = -std::f64::consts::PI * r * r * t_inv - t / (4.0 * std::f64::consts::PI);
        expo.exp() / (4.0 * std::f64::consts::PI)
    };
    refine_simpson(g, lo, hi, 1e-8)
}

/// Composite Simpson with interval doubling until successive values agree to
/// `rel_tol` relative.
fn refine_simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, rel_tol: f64) -> f64 {
    let mut n = 256usize;
    let mut prev = simpson(&f, lo, hi, n);
    loop {
        n *= 2;
        let cur = simpson(&f, lo, hi, n);
        let scale = cur.abs().max(f64::MIN_POSITIVE);
        if (cur - prev).abs() <= rel_tol * scale || n >= 1 << 16 {
            return cur;
        }
        prev = cur;
    }
}

fn simpson(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    debug_assert!(n % 2 == 0);
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + i as f64 * h);
    }
    acc * h / 3.0
}

/// Kernel values precomputed at the lags of a uniform grid.
///
/// `lag[k] = K(k·dx)` feeds the density convolution (midpoint rule), and
/// `cell_lag[k] = ∫_cell K` at lag `k` feeds the indicator convolution (exact
/// cell integrals).
#[derive(Debug, Clone)]
pub struct KernelTable {
    grid: Grid,
    lag: Vec<f64>,
    cell_lag: Vec<f64>,
}

impl KernelTable {
    pub fn new(grid: Grid) -> Self {
        let dx = grid.dx();
        let n = grid.cells();
        let lag: Vec<f64> = (0..n).map(|k| bessel_1d(k as f64 * dx)).collect();
        let cell_lag: Vec<f64> = (0..n).map(|k| cell_integral_1d(k as f64 * dx, dx)).collect();
        Self { grid, lag, cell_lag }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `K(k·dx)`.
    pub fn lag(&self, k: usize) -> f64 {
        self.lag[k]
    }

    /// `(K ∗ ρ)(x_i) = Σ_j K(x_i - x_j) ρ_j dx`.
    pub fn convolve(&self, rho: &GridDensity) -> Result<ScalarField> {
        self.grid.require_same(rho.grid(), "convolve")?;
        let out = self.convolve_values(rho.values());
        ScalarField::new(self.grid, out)
    }

    pub(crate) fn convolve_values(&self, values: &[f64]) -> Vec<f64> {
        let n = values.len();
        let dx = self.grid.dx();
        let mut out = vec![0.0; n];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, &v) in values.iter().enumerate() {
                let k = i.abs_diff(j);
                acc += self.lag[k] * v;
            }
            *o = acc * dx;
        }
        out
    }

    /// `(K' ∗ ρ)(x_i) = Σ_j K'(x_i - x_j) ρ_j dx`, using `K'(r) = -sign(r) K(r)`.
    pub fn convolve_deriv(&self, rho: &GridDensity) -> Result<ScalarField> {
        self.grid.require_same(rho.grid(), "convolve_deriv")?;
        let values = rho.values();
        let n = values.len();
        let dx = self.grid.dx();
        let mut out = vec![0.0; n];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, &v) in values.iter().enumerate() {
                if j == i {
                    continue; // K'(0) = 0
                }
                let k = i.abs_diff(j);
                let sign = if j < i { -1.0 } else { 1.0 }; // -sign(x_i - x_j)
                acc += sign * self.lag[k] * v;
            }
            *o = acc * dx;
        }
        ScalarField::new(self.grid, out)
    }

    /// `(K ∗ 1_S)(x_i) = Σ_{j ∈ S} ∫_{cell j} K(x_i - y) dy`, exact per-cell
    /// integrals; every value lies in `[0, 1)` since `∫K = 1`.
    pub fn convolve_indicator(&self, beta: &SupportIndicator) -> Result<ScalarField> {
        self.grid.require_same(beta.grid(), "convolve_indicator")?;
        let mask = beta.mask();
        let n = mask.len();
        let mut out = vec![0.0; n];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, &inside) in mask.iter().enumerate() {
                if inside {
                    acc += self.cell_lag[i.abs_diff(j)];
                }
            }
            *o = acc;
        }
        ScalarField::new(self.grid, out)
    }

    /// `(K' ∗ 1_S)(x_i)` with the same exact cell integrals as
    /// [`Self::convolve_indicator`]; the kink of `K` at 0 is integrated out.
    pub fn convolve_indicator_deriv(&self, beta: &SupportIndicator) -> Result<ScalarField> {
        self.grid.require_same(beta.grid(), "convolve_indicator_deriv")?;
        let mask = beta.mask();
        let dx = self.grid.dx();
        let n = mask.len();
        let mut out = vec![0.0; n];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, &inside) in mask.iter().enumerate() {
                if inside {
                    let r = (i as f64 - j as f64) * dx;
                    acc += cell_integral_1d_deriv(r, dx);
                }
            }
            *o = acc;
        }
        ScalarField::new(self.grid, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridDensity;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn morse_kernel_point_values() {
        assert_eq!(bessel_1d(0.0), 0.5);
        let expected = 0.5 * (-1.0f64).exp(); // 0.18393972058572117
        assert!((bessel_1d(1.0) - expected).abs() < 1e-16);
        assert!((bessel_1d(-1.0) - bessel_1d(1.0)).abs() == 0.0);
        assert!(bessel_1d(2.0) < bessel_1d(1.0));
        assert_eq!(bessel_1d_deriv(0.0), 0.0);
        assert!((bessel_1d_deriv(1.0) + expected).abs() < 1e-16);
        assert!((bessel_1d_deriv(-1.0) - expected).abs() < 1e-16);
    }

    #[test]
    fn morse_kernel_midpoint_sum_is_normalized() {
        // Midpoint quadrature over [-L, L] at n = 4096: deficit is the exact
        // tail e^{-L} plus a quadrature term below 1e-6.
        let l = 10.0;
        let n = 4096;
        let grid = Grid::new(l, n).unwrap();
        let sum: f64 = grid.centers().map(bessel_1d).sum::<f64>() * grid.dx();
        assert!((sum - 1.0).abs() <= (-l).exp() + 1e-6, "midpoint mass {sum}");
    }

    #[test]
    fn cell_integral_matches_quadrature() {
        // Independent oracle: refine the midpoint rule inside one cell.
        let dx = 0.05;
        for &r in &[0.0, 0.01, 0.024, 0.026, 0.3, 2.0, -1.3] {
            let oracle = {
                let m = 40_000;
                let h = dx / m as f64;
                (0..m)
                    .map(|k| bessel_1d(r - dx / 2.0 + (k as f64 + 0.5) * h))
                    .sum::<f64>()
                    * h
            };
            let got = cell_integral_1d(r, dx);
            assert!((got - oracle).abs() < 1e-10, "r={r}: {got} vs {oracle}");
            // Derivative: central difference of the cell integral.
            let h = 1e-6;
            let fd = (cell_integral_1d(r + h, dx) - cell_integral_1d(r - h, dx)) / (2.0 * h);
            assert!((cell_integral_1d_deriv(r, dx) - fd).abs() < 1e-8, "deriv at r={r}");
        }
    }

    /// Test-side oracle for the 2D kernel: `K₀(x)/(2π)` with the modified Bessel
    /// function `K₀` evaluated by the Abramowitz–Stegun polynomial fits
    /// (absolute accuracy ~2e-7).
    fn k0_over_2pi(x: f64) -> f64 {
        let i0 = |x: f64| {
            let t = x / 3.75;
            let t2 = t * t;
            1.0 + t2 * (3.5156229
                + t2 * (3.0899424 + t2 * (1.2067492 + t2 * (0.2659732 + t2 * (0.0360768 + t2 * 0.0045813)))))
        };
        let k0 = if x <= 2.0 {
            let t2 = x * x / 4.0;
            -(x / 2.0).ln() * i0(x) - 0.57721566
                + t2 * (0.42278420
                    + t2 * (0.23069756 + t2 * (0.03488590 + t2 * (0.00262698 + t2 * (0.00010750 + t2 * 0.00000740)))))
        } else {
            let t = 2.0 / x;
            let poly = 1.25331414
                + t * (-0.07832358
                    + t * (0.02189568 + t * (-0.01062446 + t * (0.00587872 + t * (-0.00251540 + t * 0.00053208)))));
            (-x).exp() / x.sqrt() * poly
        };
        k0 / (2.0 * std::f64::consts::PI)
    }

    #[test]
    fn bessel_2d_matches_independent_oracle() {
        for &r in &[0.1, 0.5, 1.0, 2.0, 5.0] {
            let got = bessel_2d(r);
            let want = k0_over_2pi(r);
            assert!((got - want).abs() < 5e-7, "r={r}: {got} vs {want}");
        }
    }

    #[test]
    fn bessel_2d_small_r_log_asymptote() {
        let r: f64 = 1e-3;
        let asym = -(r.ln()) / (2.0 * std::f64::consts::PI);
        let ratio = bessel_2d(r) / asym;
        assert!((ratio - 1.0).abs() < 0.10, "small-r ratio {ratio}");
    }

    #[test]
    fn bessel_2d_large_r_exponential_asymptote() {
        let r: f64 = 10.0;
        let asym = (-r).exp() / (2.0 * (2.0 * std::f64::consts::PI * r).sqrt());
        let ratio = bessel_2d(r) / asym;
        assert!((ratio - 1.0).abs() < 0.02, "large-r ratio {ratio}");
    }

    #[test]
    fn bessel_2d_radial_mass_is_one() {
        // 2π ∫ K(r) r dr = 1; the r→0 log singularity is killed by the r factor.
        let f = |r: f64| 2.0 * std::f64::consts::PI * r * bessel_2d(r);
        let integral = refine_simpson(f, 1e-6, 40.0, 1e-6);
        assert!((integral - 1.0).abs() < 1e-4, "radial mass {integral}");
    }

    #[test]
    fn lag_table_is_nonincreasing() {
        let tab = KernelTable::new(Grid::new(10.0, 256).unwrap());
        for k in 1..256 {
            assert!(tab.lag(k) <= tab.lag(k - 1));
        }
    }

    #[test]
    fn convolve_of_spike_reproduces_kernel_shape() {
        let grid = Grid::new(10.0, 512).unwrap();
        let tab = KernelTable::new(grid);
        let spike_cell = 200;
        let mut values = vec![0.0; 512];
        values[spike_cell] = 1.0 / grid.dx(); // unit mass
        let rho = GridDensity::new(grid, values).unwrap();
        let field = tab.convolve(&rho).unwrap();
        for i in 0..512 {
            let expected = bessel_1d((i as f64 - spike_cell as f64) * grid.dx());
            assert!((field.values()[i] - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn convolve_respects_young_bounds() {
        let grid = Grid::new(10.0, 1024).unwrap();
        let tab = KernelTable::new(grid);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let values: Vec<f64> = (0..1024).map(|_| rng.random_range(0.0..2.0)).collect();
            let rho = GridDensity::new(grid, values).unwrap();
            let field = tab.convolve(&rho).unwrap();
            let mass = rho.mass();
            let sup = field.values().iter().cloned().fold(0.0, f64::max);
            assert!(sup <= 0.5 * mass * (1.0 + 1e-12), "sup {sup} vs mass/2 {}", 0.5 * mass);
            let l1: f64 = field.values().iter().map(|v| v.abs()).sum::<f64>() * grid.dx();
            assert!(l1 <= mass * (1.0 + 1e-12), "l1 {l1} vs mass {mass}");
        }
    }

    #[test]
    fn convolve_is_reflection_symmetric() {
        let grid = Grid::new(10.0, 512).unwrap();
        let tab = KernelTable::new(grid);
        let rho = GridDensity::from_fn(grid, |x| (-x * x).exp()).unwrap();
        let field = tab.convolve(&rho).unwrap();
        let v = field.values();
        for i in 0..512 {
            assert!((v[i] - v[511 - i]).abs() < 1e-13);
        }
    }

    #[test]
    fn convolve_deriv_tracks_difference_quotient_of_field() {
        let grid = Grid::new(10.0, 2048).unwrap();
        let tab = KernelTable::new(grid);
        let rho = GridDensity::from_fn(grid, |x| (-x * x / 2.0).exp()).unwrap();
        let field = tab.convolve(&rho).unwrap();
        let deriv = tab.convolve_deriv(&rho).unwrap();
        let dx = grid.dx();
        for i in 600..1448 {
            let fd = (field.values()[i + 1] - field.values()[i - 1]) / (2.0 * dx);
            assert!((deriv.values()[i] - fd).abs() < 1e-3, "cell {i}");
        }
    }

    #[test]
    fn indicator_convolution_matches_closed_form_on_unit_block() {
        // S = [0, 1] resolved exactly (edges aligned). Closed form of
        // (K ∗ 1_[0,1])(x) on [0,1] is 1 - e^{-x}/2 - e^{-(1-x)}/2; with exact
        // cell integrals the discrete value matches to roundoff.
        let grid = Grid::new(10.0, 1000).unwrap();
        let tab = KernelTable::new(grid);
        let beta = SupportIndicator::from_mask(
            grid,
            (0..1000).map(|i| grid.center(i) > 0.0 && grid.center(i) < 1.0).collect(),
        )
        .unwrap();
        let field = tab.convolve_indicator(&beta).unwrap();
        for i in 0..1000 {
            let x = grid.center(i);
            if (0.0..=1.0).contains(&x) {
                let expected = 1.0 - 0.5 * (-x).exp() - 0.5 * (-(1.0 - x)).exp();
                assert!((field.values()[i] - expected).abs() < 1e-13, "x={x}");
            }
        }
        // Spot value near the middle: 1 - e^{-1/2} ≈ 0.39347 at x = 0.5.
        let mid = field.values()[grid.cell_index(0.5)];
        assert!((mid - (1.0 - (-0.5f64).exp())).abs() < 2.0 * grid.dx());
    }

    #[test]
    fn indicator_convolution_stays_in_unit_interval() {
        // Full-domain indicator at a coarse resolution: exact cell integrals
        // keep the value strictly below 1 (midpoint sums would overshoot here).
        let grid = Grid::new(10.0, 512).unwrap();
        let tab = KernelTable::new(grid);
        let beta = SupportIndicator::from_mask(grid, vec![true; 512]).unwrap();
        let field = tab.convolve_indicator(&beta).unwrap();
        for &v in field.values() {
            assert!((0.0..=1.0).contains(&v), "value {v} outside [0,1]");
        }
    }

    #[test]
    fn indicator_deriv_matches_difference_quotient() {
        let grid = Grid::new(10.0, 2048).unwrap();
        let tab = KernelTable::new(grid);
        let beta = SupportIndicator::from_mask(
            grid,
            (0..2048).map(|i| grid.center(i).abs() < 2.0).collect(),
        )
        .unwrap();
        let field = tab.convolve_indicator(&beta).unwrap();
        let deriv = tab.convolve_indicator_deriv(&beta).unwrap();
        let dx = grid.dx();
        for i in 1..2047 {
            let fd = (field.values()[i + 1] - field.values()[i - 1]) / (2.0 * dx);
            assert!((deriv.values()[i] - fd).abs() < 2e-3, "cell {i}: {} vs {fd}", deriv.values()[i]);
        }
    }
}
