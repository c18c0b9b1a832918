//! Smooth, compactly supported test functions with analytic first and second
//! derivatives, used by the weak-form residual diagnostics. Each function is a
//! classical mollifier bump in space, optionally multiplied by a `C²` window
//! in time.

/// `φ(x) = exp(1 - 1/(1 - u²))` with `u = (x - c)/w`, zero for `|u| ≥ 1`.
/// Infinitely differentiable, peak value 1 at `c`, support `[c - w, c + w]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
}

impl Bump {
    pub fn new(center: f64, width: f64) -> Self {
        assert!(width > 0.0, "bump width must be positive");
        Self { center, width }
    }

    fn u(&self, x: f64) -> f64 {
        (x - self.center) / self.width
    }

    pub fn value(&self, x: f64) -> f64 {
        let u = self.u(x);
        let s = 1.0 - u * u;
        if s <= 0.0 {
            0.0
        } else {
            (1.0 - 1.0 / s).exp()
        }
    }

    /// `dφ/dx = φ · (-2u / (1-u²)²) / w`.
    pub fn deriv(&self, x: f64) -> f64 {
        let u = self.u(x);
        let s = 1.0 - u * u;
        if s <= 0.0 {
            0.0
        } else {
            self.value(x) * (-2.0 * u / (s * s)) / self.width
        }
    }

    /// `d²φ/dx² = φ · (4u²/(1-u²)⁴ - 2/(1-u²)² - 8u²/(1-u²)³) / w²`.
    pub fn second(&self, x: f64) -> f64 {
        let u = self.u(x);
        let s = 1.0 - u * u;
        if s <= 0.0 {
            0.0
        } else {
            let u2 = u * u;
            let factor = 4.0 * u2 / (s * s * s * s) - 2.0 / (s * s) - 8.0 * u2 / (s * s * s);
            self.value(x) * factor / (self.width * self.width)
        }
    }
}

/// `C²` plateau window on `[t0, t1]`: identically 1 on `[t0+ramp, t1-ramp]`,
/// tapering to 0 at the ends through the quintic smoothstep
/// `6u⁵ - 15u⁴ + 10u³` (whose first and second derivatives vanish at both
/// ends of the ramp).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    pub t0: f64,
    pub t1: f64,
    pub ramp: f64,
}

fn smoothstep(u: f64) -> f64 {
    ((6.0 * u - 15.0) * u + 10.0) * u * u * u
}

fn smoothstep_deriv(u: f64) -> f64 {
    ((30.0 * u - 60.0) * u + 30.0) * u * u
}

impl TimeWindow {
    pub fn new(t0: f64, t1: f64, ramp: f64) -> Self {
        assert!(t1 > t0 && ramp > 0.0 && 2.0 * ramp <= t1 - t0, "degenerate time window");
        Self { t0, t1, ramp }
    }

    /// A window that equals 1 over the whole span, ramps included; useful for
    /// testing conservation-style statements where the time weight should not
    /// vanish anywhere inside.
    pub fn plateau(t0: f64, t1: f64) -> Self {
        // Ramps of zero measure are not representable; fake a plateau by
        // placing the ramps just outside the span.
        let pad = 1e-3 * (t1 - t0);
        Self { t0: t0 - pad, t1: t1 + pad, ramp: pad }
    }

    pub fn value(&self, t: f64) -> f64 {
        if t <= self.t0 || t >= self.t1 {
            return 0.0;
        }
        let up = (t - self.t0) / self.ramp;
        let down = (self.t1 - t) / self.ramp;
        let mut v = 1.0;
        if up < 1.0 {
            v *= smoothstep(up);
        }
        if down < 1.0 {
            v *= smoothstep(down);
        }
        v
    }

    pub fn deriv(&self, t: f64) -> f64 {
        if t <= self.t0 || t >= self.t1 {
            return 0.0;
        }
        let up = (t - self.t0) / self.ramp;
        let down = (self.t1 - t) / self.ramp;
        // The two ramps never overlap (2·ramp ≤ span), so at most one factor
        // is non-constant at any t.
        if up < 1.0 {
            smoothstep_deriv(up) / self.ramp
        } else if down < 1.0 {
            -smoothstep_deriv(down) / self.ramp
        } else {
            0.0
        }
    }
}

/// Product test function `ψ(t, x) = θ(t) φ(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimeTestFn {
    pub space: Bump,
    pub time: TimeWindow,
}

impl SpaceTimeTestFn {
    pub fn value(&self, t: f64, x: f64) -> f64 {
        self.time.value(t) * self.space.value(x)
    }
}

/// Eight bumps spread over `[-0.9 l, 0.9 l]` at three width scales, the widest
/// covering most of the domain.
pub fn space_battery(half_width: f64) -> Vec<Bump> {
    let l = half_width;
    vec![
        Bump::new(0.0, 0.9 * l),
        Bump::new(0.0, 0.45 * l),
        Bump::new(-0.4 * l, 0.5 * l),
        Bump::new(0.4 * l, 0.5 * l),
        Bump::new(-0.6 * l, 0.3 * l),
        Bump::new(0.2 * l, 0.3 * l),
        Bump::new(0.6 * l, 0.3 * l),
        Bump::new(-0.15 * l, 0.2 * l),
    ]
}

/// Space-time battery over `(0, t_final]`: every space bump paired with a
/// full-span plateau, plus early/late half-windows on the two widest bumps.
pub fn space_time_battery(half_width: f64, t_final: f64) -> Vec<SpaceTimeTestFn> {
    let mut fns: Vec<SpaceTimeTestFn> = space_battery(half_width)
        .into_iter()
        .map(|space| SpaceTimeTestFn { space, time: TimeWindow::plateau(0.0, t_final) })
        .collect();
    let early = TimeWindow::new(0.0, 0.625 * t_final, 0.125 * t_final);
    let late = TimeWindow::new(0.375 * t_final, t_final + 0.125 * t_final, 0.125 * t_final);
    for k in 0..2 {
        fns.push(SpaceTimeTestFn { space: space_battery(half_width)[k], time: early });
        fns.push(SpaceTimeTestFn { space: space_battery(half_width)[k], time: late });
    }
    fns
}
