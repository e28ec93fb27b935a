//! The glued counterexample field `u` and its matrix potential `V`.
//!
//! Each annulus `rho_{k+1} <= |z| <= rho_k` is split into six bands. The two
//! outermost carry the pure blocks `E_k` and `E_{k+1}`; the inner four
//! interpolate between them, either through a fractional power `r^(w/2)` with
//! a cutoff in the exponent (bands 1 and 4) or through a cutoff coefficient in
//! front of the other block (bands 2 and 3). Outside `rho_{k0}` a single
//! cutoff ramps the field down to zero before `|z| = 1`.
//!
//! Every radial formula is a function of `t = log r` alone. On top of the
//! plain evaluators there is an *anchored* evaluator: band-local values
//! emitted as double-precision mantissas against a fixed exponent anchor, so
//! that finite-difference stencils can subtract nearby samples without
//! touching the (astronomically large) absolute log-magnitudes.

use num_complex::Complex64;

use crate::extrange::{normalize_arg, ExtComplex, ExtReal};
use crate::mollifier::CutoffProfile;
use crate::radii::{Preset, RadiiSchedule};
use crate::{Error, Result};

/// Point of the punctured plane, radius stored only as `t = log r`.
#[derive(Clone, Copy, Debug)]
pub struct PolarPoint {
    t: f64,
    theta: f64,
}

impl PolarPoint {
    pub fn new(t: f64, theta: f64) -> PolarPoint {
        assert!(t.is_finite() && theta.is_finite());
        PolarPoint { t, theta: normalize_arg(theta) }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Image under unit-circle inversion `x -> x / |x|^2`: exact in log radius.
    pub fn inverted(&self) -> PolarPoint {
        PolarPoint { t: -self.t, theta: self.theta }
    }
}

/// Band owning a point of the decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    /// `|z| >= rho_{k0}`.
    Outer,
    /// `rho_{k,j+1} <= |z| <= rho_{k,j}`.
    Band { k: u32, j: u8 },
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Region::Outer => write!(f, "outer"),
            Region::Band { k, j } => write!(f, "band({k},{j})"),
        }
    }
}

/// Two-component spinor value in extended range.
#[derive(Clone, Copy, Debug)]
pub struct SpinorValue {
    pub upper: ExtComplex,
    pub lower: ExtComplex,
}

impl SpinorValue {
    pub const ZERO: SpinorValue = SpinorValue { upper: ExtComplex::ZERO, lower: ExtComplex::ZERO };

    pub fn is_zero(&self) -> bool {
        self.upper.is_zero() && self.lower.is_zero()
    }

    /// Euclidean norm `sqrt(|upper|^2 + |lower|^2)`.
    pub fn norm(&self) -> ExtReal {
        (self.upper.norm_sqr() + self.lower.norm_sqr()).sqrt()
    }

    pub fn sub(&self, rhs: &SpinorValue) -> SpinorValue {
        SpinorValue { upper: self.upper - rhs.upper, lower: self.lower - rhs.lower }
    }

    /// Scale both components by an extended-range real.
    pub fn scale(&self, x: ExtReal) -> SpinorValue {
        SpinorValue { upper: self.upper.scale(x), lower: self.lower.scale(x) }
    }
}

/// 2x2 matrix potential value in extended range.
#[derive(Clone, Copy, Debug)]
pub struct PotentialValue {
    /// Row-major entries.
    pub entries: [[ExtComplex; 2]; 2],
}

impl PotentialValue {
    pub const ZERO: PotentialValue =
        PotentialValue { entries: [[ExtComplex::ZERO; 2]; 2] };

    pub fn entry(&self, row: usize, col: usize) -> ExtComplex {
        self.entries[row][col]
    }

    pub fn mul_spinor(&self, u: &SpinorValue) -> SpinorValue {
        let e = &self.entries;
        SpinorValue {
            upper: e[0][0] * u.upper + e[0][1] * u.lower,
            lower: e[1][0] * u.upper + e[1][1] * u.lower,
        }
    }
}

/// Field evaluator abstraction; implemented by the counterexample itself,
/// by Kelvin wrappers and by plain closures.
pub trait SpinorField {
    fn eval(&self, p: &PolarPoint) -> SpinorValue;
}

impl<F> SpinorField for F
where
    F: for<'a> Fn(&'a PolarPoint) -> SpinorValue,
{
    fn eval(&self, p: &PolarPoint) -> SpinorValue {
        self(p)
    }
}

impl SpinorField for Counterexample {
    /// Panics when `p.t` lies below the resolved schedule range; grid code
    /// checks the range up front.
    fn eval(&self, p: &PolarPoint) -> SpinorValue {
        self.u(p).expect("point below the resolved schedule range")
    }
}

/// The Dirac-harmonic block: `(0, conj(z)^k)` for even `k`, `(z^k, 0)` for
/// odd `k`, evaluated from `t = log r`.
pub fn harmonic_block(k: u32, p: &PolarPoint) -> SpinorValue {
    let (value, upper) = block_component(k, 0.0, 1.0, p);
    place(value, upper)
}

fn place(value: ExtComplex, upper: bool) -> SpinorValue {
    if upper {
        SpinorValue { upper: value, lower: ExtComplex::ZERO }
    } else {
        SpinorValue { upper: ExtComplex::ZERO, lower: value }
    }
}

/// One block component `coeff * r^(w/2) * E_k`: value and its slot.
///
/// The log-magnitude is computed as `(k + w/2) * t` in one expression so that
/// band formulas sharing an endpoint produce bit-identical values there.
fn block_component(k: u32, w: f64, coeff: f64, p: &PolarPoint) -> (ExtComplex, bool) {
    let m = k as f64;
    let upper = k % 2 == 1;
    if coeff == 0.0 {
        return (ExtComplex::ZERO, upper);
    }
    debug_assert!(coeff > 0.0, "band coefficients are nonnegative cutoff values");
    let winding = if upper { m * p.theta } else { -m * p.theta };
    let logmag = (m + 0.5 * w) * p.t + coeff.ln();
    (ExtComplex::new(logmag, winding), upper)
}

/// Winding number of the block component of `E_k`.
fn block_winding(k: u32) -> f64 {
    if k % 2 == 1 {
        k as f64
    } else {
        -(k as f64)
    }
}

/// Band-local spinor mantissas against a fixed exponent anchor; see
/// [`Counterexample::u_anchored`].
#[derive(Clone, Copy, Debug)]
pub struct AnchoredSpinor {
    pub upper: Complex64,
    pub lower: Complex64,
}

impl AnchoredSpinor {
    pub fn norm(&self) -> f64 {
        (self.upper.norm_sqr() + self.lower.norm_sqr()).sqrt()
    }
}

/// A fully resolved configuration: schedule, cutoff and starting index.
#[derive(Clone, Debug)]
pub struct Counterexample {
    schedule: RadiiSchedule,
    cutoff: CutoffProfile,
    k0: u32,
    epsilon: f64,
    k0_admissible: bool,
}

impl Counterexample {
    /// Resolve `delta` from `epsilon`, pick the smallest admissible even `k0`.
    ///
    /// The mild schedule has no admissible index (its band constant is around
    /// 9.17 for every `k`, far above `1 + delta`); it falls back to `k0 = 2`
    /// with `k0_admissible() == false`, which is sound for the identity checks
    /// because the defining identity holds band-wise for any starting index.
    pub fn from_epsilon(epsilon: f64, preset: Preset, k_max: u32) -> Result<Counterexample> {
        let cutoff = CutoffProfile::for_epsilon(epsilon)?;
        Counterexample::with_cutoff(epsilon, cutoff, preset, k_max)
    }

    /// Like [`Self::from_epsilon`] with an explicit cutoff (delta override).
    pub fn with_cutoff(
        epsilon: f64,
        cutoff: CutoffProfile,
        preset: Preset,
        k_max: u32,
    ) -> Result<Counterexample> {
        let delta = cutoff.delta();
        if delta * delta + delta > epsilon {
            return Err(Error::DeltaBudget { delta, epsilon });
        }
        let schedule = RadiiSchedule::new(preset, k_max)?;
        let (k0, admissible) = match schedule.select_k0(delta) {
            // the outer cap assumes an even starting parity
            Ok(k) => (k + k % 2, true),
            Err(_) if preset == Preset::Mild => (2, false),
            Err(e) => return Err(e),
        };
        if k0 > k_max.saturating_sub(1) {
            return Err(Error::NoAdmissibleK0 { delta, k_max });
        }
        Ok(Counterexample { schedule, cutoff, k0, epsilon, k0_admissible: admissible })
    }

    /// Assemble from raw parts without admissibility checks (used by tests
    /// and the negative control, e.g. forcing `k0 = 2` on the paper schedule).
    pub fn with_forced_k0(
        epsilon: f64,
        cutoff: CutoffProfile,
        schedule: RadiiSchedule,
        k0: u32,
    ) -> Result<Counterexample> {
        if k0 > schedule.k_max().saturating_sub(1) {
            return Err(Error::KOutOfRange { k: k0, k_max: schedule.k_max() });
        }
        let admissible = schedule.select_k0(cutoff.delta()).map(|k| k0 >= k).unwrap_or(false);
        Ok(Counterexample { schedule, cutoff, k0, epsilon, k0_admissible: admissible })
    }

    pub fn schedule(&self) -> &RadiiSchedule {
        &self.schedule
    }

    pub fn cutoff(&self) -> &CutoffProfile {
        &self.cutoff
    }

    pub fn k0(&self) -> u32 {
        self.k0
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.cutoff.delta()
    }

    pub fn k0_admissible(&self) -> bool {
        self.k0_admissible
    }

    /// Largest annulus index carrying bands (`k_max - 1`).
    pub fn last_annulus(&self) -> u32 {
        self.schedule.k_max() - 1
    }

    /// Band owning `t`. Boundary radii go to the band of smaller `j`, and
    /// annulus seams to the outer annulus; continuity of `u` makes the
    /// tie-break observationally irrelevant.
    pub fn classify(&self, t: f64) -> Result<Region> {
        assert!(t.is_finite());
        if t >= self.schedule.log_rho(self.k0, 0) {
            return Ok(Region::Outer);
        }
        let floor = self.schedule.log_rho(self.schedule.k_max(), 0);
        if t < floor {
            return Err(Error::BelowResolvedRange { t, limit: floor });
        }
        for k in self.k0..self.schedule.k_max() {
            if t >= self.schedule.log_rho(k + 1, 0) {
                for j in 0..6u8 {
                    if t >= self.schedule.log_rho(k, u32::from(j) + 1) {
                        return Ok(Region::Band { k, j });
                    }
                }
                unreachable!("annulus bands cover it");
            }
        }
        unreachable!("range checked above");
    }

    /// Value of the glued field. Errors only when `t` lies below the resolved
    /// schedule range.
    pub fn u(&self, p: &PolarPoint) -> Result<SpinorValue> {
        Ok(self.u_in_region(self.classify(p.t)?, p))
    }

    /// Value `u(0) = 0` at the puncture.
    pub fn origin_value() -> SpinorValue {
        SpinorValue::ZERO
    }

    /// The potential matrix at `p`.
    pub fn potential(&self, p: &PolarPoint) -> Result<PotentialValue> {
        Ok(self.potential_in_region(self.classify(p.t)?, p))
    }

    /// Cutoff argument and band constant data for the four profile bands.
    fn profile(&self, region: Region, t: f64) -> BandProfile {
        match region {
            Region::Outer => {
                let l0 = self.schedule.log_rho(self.k0, 0);
                BandProfile { s: t / l0, ds_dt: 1.0 / l0, scale: f64::NAN }
            }
            Region::Band { k, j } => {
                let l = |j: u32| self.schedule.log_rho(k, j);
                match j {
                    1 => {
                        let c = self.schedule.band_constants(k).c;
                        BandProfile {
                            s: c * (1.0 - l(1) / t),
                            ds_dt: c * l(1) / (t * t),
                            scale: c * l(1),
                        }
                    }
                    2 => {
                        let d = l(2) - l(3);
                        BandProfile { s: (l(2) - t) / d, ds_dt: -1.0 / d, scale: f64::NAN }
                    }
                    3 => {
                        let d = l(3) - l(4);
                        BandProfile { s: (t - l(4)) / d, ds_dt: 1.0 / d, scale: f64::NAN }
                    }
                    4 => {
                        let c = self.schedule.band_constants(k).c_tilde;
                        BandProfile {
                            s: c * (1.0 - l(4) / t),
                            ds_dt: c * l(4) / (t * t),
                            scale: c * l(4),
                        }
                    }
                    _ => BandProfile { s: f64::NAN, ds_dt: 0.0, scale: f64::NAN },
                }
            }
        }
    }

    /// Evaluate the band formula of `region` at `p`, regardless of which band
    /// actually owns `p.t`; seam tests compare adjacent formulas this way.
    pub fn u_in_region(&self, region: Region, p: &PolarPoint) -> SpinorValue {
        match region {
            Region::Outer => {
                let eta = self.cutoff.chi(self.profile(region, p.t).s);
                let (v, up) = block_component(self.k0, 0.0, eta, p);
                place(v, up)
            }
            Region::Band { k, j } => match j {
                0 => harmonic_block(k, p),
                5 => harmonic_block(k + 1, p),
                1 => {
                    let phi = self.cutoff.chi(self.profile(region, p.t).s);
                    let (v, up) = block_component(k, phi, 1.0, p);
                    place(v, up)
                }
                2 => {
                    let phi = self.cutoff.chi(self.profile(region, p.t).s);
                    let (a, a_up) = block_component(k, 1.0, 1.0, p);
                    let (b, _) = block_component(k + 1, -1.0, phi, p);
                    two_blocks(a, b, a_up)
                }
                3 => {
                    let phi = self.cutoff.chi(self.profile(region, p.t).s);
                    let (a, a_up) = block_component(k, 1.0, phi, p);
                    let (b, _) = block_component(k + 1, -1.0, 1.0, p);
                    two_blocks(a, b, a_up)
                }
                4 => {
                    let w = self.cutoff.chi(self.profile(region, p.t).s) - 1.0;
                    let (v, up) = block_component(k + 1, w, 1.0, p);
                    place(v, up)
                }
                _ => unreachable!("band index j <= 5"),
            },
        }
    }

    /// The band's potential matrix at `p` (entries carry the `1/r` factor).
    pub fn potential_in_region(&self, region: Region, p: &PolarPoint) -> PotentialValue {
        let units = self.potential_units(region, p);
        let mut entries = [[ExtComplex::ZERO; 2]; 2];
        for (r, row) in units.iter().enumerate() {
            for (c, &unit) in row.iter().enumerate() {
                if unit != Complex64::ZERO {
                    entries[r][c] = ExtComplex::new(unit.norm().ln() - p.t, unit.arg());
                }
            }
        }
        PotentialValue { entries }
    }

    /// Unit-scale potential parts: `potential = units * exp(-t)` entry-wise.
    /// This is also the matrix acting on anchored mantissas.
    pub fn potential_units(&self, region: Region, p: &PolarPoint) -> [[Complex64; 2]; 2] {
        let mut units = [[Complex64::ZERO; 2]; 2];
        let neg_i = Complex64::new(0.0, -1.0);
        let pos_i = Complex64::new(0.0, 1.0);
        let phase = |a: f64| Complex64::from_polar(1.0, a);
        match region {
            Region::Outer => {
                let pr = self.profile(region, p.t);
                let eta_t = self.cutoff.chi_prime(pr.s) * pr.ds_dt;
                if self.k0.is_multiple_of(2) {
                    units[0][1] = neg_i * phase(-p.theta) * eta_t;
                } else {
                    units[1][0] = neg_i * phase(p.theta) * eta_t;
                }
            }
            Region::Band { k, j } => {
                let even = k % 2 == 0;
                let pr = self.profile(region, p.t);
                match j {
                    0 | 5 => {}
                    1 | 4 => {
                        // d/dt of (profile * t): profile + t * d(profile)/dt,
                        // with t * ds/dt = scale / t free of cancellation
                        let chi = self.cutoff.chi(pr.s);
                        let profile = if j == 1 { chi } else { chi - 1.0 };
                        let w = profile + self.cutoff.chi_prime(pr.s) * pr.scale / p.t;
                        let v = 0.5 * w;
                        if (j == 1) == even {
                            units[0][1] = neg_i * phase(-p.theta) * v;
                        } else {
                            units[1][0] = neg_i * phase(p.theta) * v;
                        }
                    }
                    2 | 3 => {
                        let phi_t = self.cutoff.chi_prime(pr.s) * pr.ds_dt;
                        let m = f64::from(2 * k + 2);
                        if even {
                            units[0][1] = neg_i * phase(-p.theta) * 0.5;
                            units[1][0] = pos_i * phase(p.theta) * 0.5;
                            if j == 2 {
                                units[1][1] = neg_i * phase(m * p.theta) * phi_t;
                            } else {
                                units[0][0] = neg_i * phase(-m * p.theta) * phi_t;
                            }
                        } else {
                            units[0][1] = pos_i * phase(-p.theta) * 0.5;
                            units[1][0] = neg_i * phase(p.theta) * 0.5;
                            if j == 2 {
                                units[0][0] = neg_i * phase(-m * p.theta) * phi_t;
                            } else {
                                units[1][1] = neg_i * phase(m * p.theta) * phi_t;
                            }
                        }
                    }
                    _ => unreachable!(),
                }
            }
        }
        units
    }

    /// Decomposition `log |u| = power * t + extra` of the field norm on a
    /// band. Decay margins `log 2 + k t - log |u|` are then assembled as
    /// `log 2 + (k - power) t - extra`, which stays exact when `t` is of
    /// order `-exp(k^2)` and a direct log-magnitude subtraction would lose
    /// everything to quantization.
    pub fn u_norm_exponent(&self, region: Region, t: f64) -> (f64, f64) {
        match region {
            Region::Outer => {
                let eta = self.cutoff.chi(self.profile(region, t).s);
                (f64::from(self.k0), eta.ln())
            }
            Region::Band { k, j } => {
                let m = k as f64;
                match j {
                    0 => (m, 0.0),
                    5 => (m + 1.0, 0.0),
                    1 => (m + 0.5 * self.cutoff.chi(self.profile(region, t).s), 0.0),
                    2 | 3 => {
                        let phi = self.cutoff.chi(self.profile(region, t).s);
                        (m + 0.5, 0.5 * (1.0 + phi * phi).ln())
                    }
                    4 => {
                        let w = self.cutoff.chi(self.profile(region, t).s) - 1.0;
                        (m + 1.0 + 0.5 * w, 0.0)
                    }
                    _ => unreachable!(),
                }
            }
        }
    }

    /// Exponent anchor of a band at a base point: the log-magnitude scale all
    /// anchored mantissas are relative to.
    pub fn anchor_logmag(&self, region: Region, base: &PolarPoint) -> f64 {
        let t = base.t;
        match region {
            Region::Outer => f64::from(self.k0) * t,
            Region::Band { k, j } => {
                let m = k as f64;
                match j {
                    0 => m * t,
                    5 => (m + 1.0) * t,
                    1 => (m + 0.5 * self.cutoff.chi(self.profile(region, t).s)) * t,
                    2 | 3 => (m + 0.5) * t,
                    4 => {
                        let w = self.cutoff.chi(self.profile(region, t).s) - 1.0;
                        (m + 1.0 + 0.5 * w) * t
                    }
                    _ => unreachable!(),
                }
            }
        }
    }

    /// Value at `(base.t + dt, base.theta + dtheta)` as double mantissas
    /// relative to `exp(anchor_logmag(region, base))`.
    ///
    /// Exponent increments are assembled from exact per-band algebra (never
    /// by subtracting absolute log-magnitudes), so stencil differences stay
    /// meaningful even when the anchor is of order `-exp(k^2)`.
    pub fn u_anchored(
        &self,
        region: Region,
        base: &PolarPoint,
        dt: f64,
        dtheta: f64,
    ) -> AnchoredSpinor {
        let t0 = base.t;
        let th = base.theta + dtheta;
        let wind = |k: u32| Complex64::from_polar(1.0, block_winding(k) * th);
        let mut out = AnchoredSpinor { upper: Complex64::ZERO, lower: Complex64::ZERO };
        let mut put = |k: u32, v: Complex64| {
            if k % 2 == 1 {
                out.upper = v;
            } else {
                out.lower = v;
            }
        };
        match region {
            Region::Outer => {
                let pr = self.profile(region, t0);
                let s1 = pr.s + pr.ds_dt * dt;
                let eta = self.cutoff.chi(s1);
                put(self.k0, (f64::from(self.k0) * dt).exp() * eta * wind(self.k0));
            }
            Region::Band { k, j } => {
                let m = k as f64;
                match j {
                    0 => put(k, (m * dt).exp() * wind(k)),
                    5 => put(k + 1, ((m + 1.0) * dt).exp() * wind(k + 1)),
                    1 | 4 => {
                        // increment of (k-ish)*dt + (profile(t)*t - profile(t0)*t0)/2
                        // with t0 * (s1 - s0) = scale * dt / (t0 + dt), exact at
                        // every magnitude of t0
                        let pr = self.profile(region, t0);
                        let ds = pr.scale * dt / (t0 * (t0 + dt));
                        let t0_ds = pr.scale * dt / (t0 + dt);
                        let slope = self.cutoff.chi_prime(pr.s + 0.5 * ds);
                        let chi1 = self.cutoff.chi(pr.s + ds);
                        let (kk, profile1) =
                            if j == 1 { (k, chi1) } else { (k + 1, chi1 - 1.0) };
                        let dg = f64::from(kk) * dt + 0.5 * (slope * t0_ds + dt * profile1);
                        put(kk, dg.exp() * wind(kk));
                    }
                    2 | 3 => {
                        let pr = self.profile(region, t0);
                        let s1 = pr.s + pr.ds_dt * dt;
                        let phi = self.cutoff.chi(s1);
                        let grow = ((m + 0.5) * dt).exp();
                        let (ca, cb) = if j == 2 { (1.0, phi) } else { (phi, 1.0) };
                        put(k, grow * ca * wind(k));
                        put(k + 1, grow * cb * wind(k + 1));
                    }
                    _ => unreachable!(),
                }
            }
        }
        out
    }
}

/// Cutoff argument `s`, its `t`-derivative, and for the exponent bands the
/// constant `c * log rho` entering `t * ds/dt = scale / t`.
struct BandProfile {
    s: f64,
    ds_dt: f64,
    scale: f64,
}

fn two_blocks(a: ExtComplex, b: ExtComplex, a_upper: bool) -> SpinorValue {
    // adjacent blocks have opposite parity, so the two values never collide
    if a_upper {
        SpinorValue { upper: a, lower: b }
    } else {
        SpinorValue { upper: b, lower: a }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn paper_cfg() -> Counterexample {
        Counterexample::from_epsilon(0.1, Preset::Paper, 12).unwrap()
    }

    fn mild_cfg() -> Counterexample {
        Counterexample::from_epsilon(0.1, Preset::Mild, 12).unwrap()
    }

    #[test]
    fn resolves_expected_k0() {
        let cfg = paper_cfg();
        assert_eq!(cfg.k0(), 8);
        assert!(cfg.k0_admissible());
        let mild = mild_cfg();
        assert_eq!(mild.k0(), 2);
        assert!(!mild.k0_admissible());
    }

    #[test]
    fn delta_override_is_validated() {
        let cutoff = CutoffProfile::new(0.2).unwrap();
        // 0.2^2 + 0.2 = 0.24 > 0.1
        assert!(matches!(
            Counterexample::with_cutoff(0.1, cutoff, Preset::Paper, 12),
            Err(Error::DeltaBudget { .. })
        ));
        assert!(Counterexample::with_cutoff(0.25, cutoff, Preset::Paper, 12).is_ok());
    }

    #[test]
    fn harmonic_block_values() {
        // k = 2 at z = 1: (0, 1)
        let v = harmonic_block(2, &PolarPoint::new(0.0, 0.0));
        assert!(v.upper.is_zero());
        assert_eq!(v.lower.logmag(), 0.0);
        assert_eq!(v.lower.arg(), 0.0);
        // k = 3 at z = i: (i^3, 0) = (-i, 0)
        let v = harmonic_block(3, &PolarPoint::new(0.0, FRAC_PI_2));
        assert!(v.lower.is_zero());
        assert!((v.upper.arg() + FRAC_PI_2).abs() < 1e-15);
        // k = 2, theta = pi/4, t = -10: conj(z)^2 has logmag -20, arg -pi/2
        let v = harmonic_block(2, &PolarPoint::new(-10.0, FRAC_PI_4));
        assert_eq!(v.lower.logmag(), -20.0);
        assert!((v.lower.arg() + FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn classify_regions_and_ties() {
        let cfg = paper_cfg();
        let s = cfg.schedule();
        let k0 = cfg.k0();
        assert_eq!(cfg.classify(s.log_rho(k0, 0) + 1.0).unwrap(), Region::Outer);
        assert_eq!(cfg.classify(s.log_rho(k0, 0)).unwrap(), Region::Outer);
        let mid = 0.5 * (s.log_rho(k0, 2) + s.log_rho(k0, 3));
        assert_eq!(cfg.classify(mid).unwrap(), Region::Band { k: k0, j: 2 });
        // boundary goes to the smaller-j band
        assert_eq!(cfg.classify(s.log_rho(k0, 1)).unwrap(), Region::Band { k: k0, j: 0 });
        // annulus seam goes to the outer annulus, band 5
        assert_eq!(
            cfg.classify(s.log_rho(k0 + 1, 0)).unwrap(),
            Region::Band { k: k0, j: 5 }
        );
        assert!(cfg.classify(s.log_rho(s.k_max(), 0) * 1.5).is_err());
    }

    #[test]
    fn field_vanishes_beyond_unit_disc() {
        let cfg = paper_cfg();
        for &t in &[0.0, 0.5, 3.0] {
            for &th in &[0.0, 1.0, -2.0] {
                assert!(cfg.u(&PolarPoint::new(t, th)).unwrap().is_zero());
            }
        }
        // the potential vanishes there too
        let v = cfg.potential(&PolarPoint::new(0.5, 0.3)).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert!(v.entry(r, c).is_zero());
            }
        }
    }

    #[test]
    fn pure_band_is_the_block() {
        let cfg = paper_cfg();
        let k = cfg.k0();
        let s = cfg.schedule();
        let t = 0.5 * (s.log_rho(k, 0) + s.log_rho(k, 1));
        let p = PolarPoint::new(t, 0.77);
        let u = cfg.u(&p).unwrap();
        let e = harmonic_block(k, &p);
        assert_eq!(u.lower.logmag(), e.lower.logmag());
        assert_eq!(u.lower.arg(), e.lower.arg());
        assert!(u.upper.is_zero());
    }

    #[test]
    fn seam_formulas_agree() {
        for cfg in [paper_cfg(), mild_cfg()] {
            let k = cfg.k0();
            let s = cfg.schedule();
            for j in 1..=5u8 {
                let t = s.log_rho(k, u32::from(j));
                for i in 0..8 {
                    let p = PolarPoint::new(t, -PI + i as f64 * PI / 4.0);
                    let a = cfg.u_in_region(Region::Band { k, j: j - 1 }, &p);
                    let b = cfg.u_in_region(Region::Band { k, j }, &p);
                    assert_spinor_close(&a, &b, 1e-12);
                }
            }
            // outer seam
            let t = s.log_rho(k, 0);
            let p = PolarPoint::new(t, 0.3);
            let a = cfg.u_in_region(Region::Outer, &p);
            let b = cfg.u_in_region(Region::Band { k, j: 0 }, &p);
            assert_spinor_close(&a, &b, 1e-12);
            // annulus seam
            let t = s.log_rho(k + 1, 0);
            let p = PolarPoint::new(t, -1.1);
            let a = cfg.u_in_region(Region::Band { k, j: 5 }, &p);
            let b = cfg.u_in_region(Region::Band { k: k + 1, j: 0 }, &p);
            assert_spinor_close(&a, &b, 1e-12);
        }
    }

    fn assert_spinor_close(a: &SpinorValue, b: &SpinorValue, tol: f64) {
        for (x, y) in [(a.upper, b.upper), (a.lower, b.lower)] {
            assert_eq!(x.is_zero(), y.is_zero(), "zero-pattern mismatch");
            if !x.is_zero() {
                let scale = x.logmag().abs().max(1.0);
                assert!(
                    (x.logmag() - y.logmag()).abs() <= tol * scale,
                    "logmag {} vs {}",
                    x.logmag(),
                    y.logmag()
                );
                assert!(
                    normalize_arg(x.arg() - y.arg()).abs() <= tol,
                    "arg {} vs {}",
                    x.arg(),
                    y.arg()
                );
            }
        }
    }

    #[test]
    fn band2_matches_spec_values_at_theta_zero() {
        let cfg = mild_cfg();
        let k = cfg.k0();
        let s = cfg.schedule();
        let t = 0.5 * (s.log_rho(k, 2) + s.log_rho(k, 3));
        let p = PolarPoint::new(t, 0.0);
        let v = cfg.potential(&p).unwrap();
        // entry (1,2) = -i/(2r), entry (2,1) = +i/(2r) at theta = 0 (even k)
        let r_inv = ExtReal::from_ln(-t);
        assert!((v.entry(0, 1).logmag() - (r_inv.logmag() + 0.5f64.ln())).abs() < 1e-12);
        assert!((v.entry(0, 1).arg() + FRAC_PI_2).abs() < 1e-12);
        assert!((v.entry(1, 0).arg() - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn band1_with_flat_cutoff_is_half_over_r() {
        // where chi' = 0 and chi = 1 the only entry is -i e^{-i theta}/(2r)
        let cfg = mild_cfg();
        let k = cfg.k0();
        let s = cfg.schedule();
        // cutoff argument 1 at t = log rho_{k,2}: chi = 1, chi' = 0
        let t = s.log_rho(k, 2);
        let p = PolarPoint::new(t, 0.4);
        let v = cfg.potential_in_region(Region::Band { k, j: 1 }, &p);
        let e = v.entry(0, 1);
        assert!((e.logmag() - (0.5f64.ln() - t)).abs() < 1e-12);
        assert!((normalize_arg(e.arg() - (-FRAC_PI_2 - 0.4))).abs() < 1e-12);
    }

    #[test]
    fn anchored_matches_plain_evaluation() {
        let cfg = mild_cfg();
        let s = cfg.schedule();
        for k in cfg.k0()..cfg.k0() + 2 {
            for j in 0..6u8 {
                let lo = s.log_rho(k, u32::from(j) + 1);
                let hi = s.log_rho(k, u32::from(j));
                let t = lo + 0.37 * (hi - lo);
                let base = PolarPoint::new(t, 0.9);
                let region = Region::Band { k, j };
                let anchor = cfg.anchor_logmag(region, &base);
                for (dt, da) in [(0.0, 0.0), (2e-6, 0.0), (-2e-6, 2e-6)] {
                    let m = cfg.u_anchored(region, &base, dt, da);
                    let q = PolarPoint::new(t + dt, 0.9 + da);
                    let exact = cfg.u_in_region(region, &q);
                    for (mant, full) in [(m.upper, exact.upper), (m.lower, exact.lower)] {
                        if full.is_zero() {
                            assert!(mant.norm() < 1e-14);
                        } else {
                            let expect = full.logmag() - anchor;
                            assert!(
                                (mant.norm().ln() - expect).abs() < 1e-11,
                                "band ({k},{j}) dt={dt}"
                            );
                            assert!(normalize_arg(mant.arg() - full.arg()).abs() < 1e-11);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn parity_shift_preserves_structure() {
        // odd starting index: same seams, same support, mirrored components
        let cutoff = CutoffProfile::for_epsilon(0.1).unwrap();
        let schedule = RadiiSchedule::paper();
        let cfg = Counterexample::with_forced_k0(0.1, cutoff, schedule, 9).unwrap();
        let k = 9u32;
        let s = cfg.schedule();
        for j in 1..=5u8 {
            let t = s.log_rho(k, u32::from(j));
            let p = PolarPoint::new(t, 1.2);
            let a = cfg.u_in_region(Region::Band { k, j: j - 1 }, &p);
            let b = cfg.u_in_region(Region::Band { k, j }, &p);
            assert_spinor_close(&a, &b, 1e-12);
        }
        // odd k0 puts the outer block in the upper slot
        let p = PolarPoint::new(s.log_rho(k, 0) + 0.5, 0.0);
        let u = cfg.u(&p).unwrap();
        assert!(u.lower.is_zero());
        assert!(!u.upper.is_zero());
    }

    #[test]
    fn origin_is_exact_zero() {
        assert!(Counterexample::origin_value().is_zero());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn classify_owns_every_resolved_point(frac in 0.0..1.0f64, theta in -4.0..4.0f64) {
                let cfg = Counterexample::from_epsilon(0.1, Preset::Paper, 12).unwrap();
                let s = cfg.schedule();
                let floor = s.log_rho(s.k_max(), 0);
                let t = floor * (1.0 - frac) + frac; // sweeps [floor, 1]
                let p = PolarPoint::new(t, theta);
                match cfg.classify(t).unwrap() {
                    Region::Outer => prop_assert!(t >= s.log_rho(cfg.k0(), 0)),
                    Region::Band { k, j } => {
                        prop_assert!(k >= cfg.k0() && k < s.k_max());
                        prop_assert!(t >= s.log_rho(k, u32::from(j) + 1));
                        prop_assert!(t <= s.log_rho(k, u32::from(j)));
                        // the owning band's formula is what the dispatcher returns
                        let u = cfg.u(&p).unwrap();
                        let v = cfg.u_in_region(Region::Band { k, j }, &p);
                        prop_assert_eq!(u.upper.is_zero(), v.upper.is_zero());
                    }
                }
            }
        }
    }
}
