//! Smooth cutoff profile `chi` with prescribed slope budget.
//!
//! The profile is a clamped linear ramp of slope exactly `1 + delta` with
//! plateau offset `a = delta / (2 (1 + delta))`, mollified by a compactly
//! supported bump of radius `a / 4`. That shape gives the three properties the
//! band constructions lean on:
//!
//! 1. `chi = 0` below `0`, `chi = 1` above `1`, values in `[0, 1]` between;
//! 2. `chi' >= 0`, supported in `[0, 1]`, with sup norm `chi'(1/2) = 1 + delta`;
//! 3. `chi(s) <= s` on `[0, 1/2]`, `chi(1/2) = 1/2`, and
//!    `chi(s) <= (1 + delta) s - delta/2` on `[1/2, 1]`.
//!
//! The bump radius is small enough that the mollification window around
//! `s = 1/2` sits inside the affine part of the ramp, so the midpoint value
//! and the sup of the derivative are exact, not approximate.

use std::sync::OnceLock;

use crate::{Error, Result};

/// Clamp applied by [`select_delta`]; keeps `delta` strictly inside `(0, 1/4)`.
pub const DELTA_CAP: f64 = 0.24;

/// Largest admissible `delta` for the cutoff budget `delta^2 + delta <= epsilon`.
///
/// Returns `min(0.24, 0.99 (sqrt(1 + 4 eps) - 1) / 2)`; the positive root of
/// `d^2 + d = eps` shrunk by 1% so the budget holds strictly.
pub fn select_delta(epsilon: f64) -> f64 {
    assert!(epsilon > 0.0, "epsilon must be positive");
    DELTA_CAP.min(0.99 * ((1.0 + 4.0 * epsilon).sqrt() - 1.0) / 2.0)
}

fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

/// `integral of exp(-1/(1-x^2)) over (-1, 1)`, computed once.
fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        adaptive_simpson(&bump, -1.0, 1.0, 1e-16)
            .expect("bump normalization quadrature converges")
    })
}

/// Adaptive Simpson quadrature with absolute tolerance.
pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let err = left + right - whole;
    if err.abs() <= 15.0 * tol || m <= a || m >= b {
        return Ok(left + right + err / 15.0);
    }
    if depth == 0 {
        return Err(Error::Quadrature { residual: err.abs() / 15.0, tolerance: tol });
    }
    let lv = step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let rv = step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(lv + rv)
}

/// The mollified ramp and its derivative for a fixed `delta`.
#[derive(Clone, Copy, Debug)]
pub struct CutoffProfile {
    delta: f64,
    /// Ramp offset `a = delta / (2 (1 + delta))`; the ramp rises on `[a, 1-a]`.
    plateau: f64,
    /// Mollifier radius `a / 4`.
    bump_radius: f64,
    /// Reciprocal of the bump mass, folded into the window integrals.
    inv_mass: f64,
}

impl CutoffProfile {
    pub fn new(delta: f64) -> Result<CutoffProfile> {
        if !(delta > 0.0 && delta < 0.25) {
            return Err(Error::InvalidDelta(delta));
        }
        let plateau = delta / (2.0 * (1.0 + delta));
        Ok(CutoffProfile {
            delta,
            plateau,
            bump_radius: plateau / 4.0,
            inv_mass: 1.0 / bump_mass(),
        })
    }

    /// Profile for the largest `delta` admissible at this `epsilon`.
    pub fn for_epsilon(epsilon: f64) -> Result<CutoffProfile> {
        CutoffProfile::new(select_delta(epsilon))
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn plateau(&self) -> f64 {
        self.plateau
    }

    pub fn bump_radius(&self) -> f64 {
        self.bump_radius
    }

    /// Sup of the derivative, attained on the whole central plateau.
    pub fn slope(&self) -> f64 {
        1.0 + self.delta
    }

    /// Cutoff value. Exact `0` for `s <= a - a/4`, exact `1` beyond `1 - 3a/4`,
    /// and exactly affine (`(1+delta) s - delta/2`) on the central region;
    /// quadrature only runs inside the two mollification windows.
    pub fn chi(&self, s: f64) -> f64 {
        let a = self.plateau;
        let d = self.bump_radius;
        if s <= a - d {
            0.0
        } else if s >= 1.0 - a + d {
            1.0
        } else if s >= a + d && s <= 1.0 - a - d {
            (1.0 + self.delta) * s - 0.5 * self.delta
        } else if s < a + d {
            self.window_chi(s)
        } else {
            // ramp(s) + ramp(1-s) = 1 and the bump is even
            1.0 - self.window_chi(1.0 - s)
        }
    }

    /// Derivative of [`Self::chi`]; exactly `1 + delta` on the central plateau,
    /// exactly `0` outside `[a - a/4, 1 - a + a/4] subset of [0, 1]`.
    pub fn chi_prime(&self, s: f64) -> f64 {
        let a = self.plateau;
        let d = self.bump_radius;
        if s <= a - d || s >= 1.0 - a + d {
            0.0
        } else if s >= a + d && s <= 1.0 - a - d {
            1.0 + self.delta
        } else if s < a + d {
            self.window_chi_prime(s)
        } else {
            self.window_chi_prime(1.0 - s)
        }
    }

    /// Convolution of the ramp with the bump inside the lower window
    /// `(a - a/4, a + a/4)`, in bump-normalized coordinates.
    fn window_chi(&self, s: f64) -> f64 {
        let c = s - self.plateau;
        let d = self.bump_radius;
        let u = (c / d).min(1.0);
        if u <= -1.0 {
            return 0.0;
        }
        let integrand = |tau: f64| (c - d * tau) * bump(tau);
        let v = adaptive_simpson(&integrand, -1.0, u, 1e-16)
            .expect("cutoff window quadrature converges");
        (1.0 + self.delta) * v * self.inv_mass
    }

    fn window_chi_prime(&self, s: f64) -> f64 {
        let d = self.bump_radius;
        let u = ((s - self.plateau) / d).min(1.0);
        if u <= -1.0 {
            return 0.0;
        }
        let v = adaptive_simpson(&bump, -1.0, u, 1e-16)
            .expect("cutoff window quadrature converges");
        (1.0 + self.delta) * v * self.inv_mass
    }
}
