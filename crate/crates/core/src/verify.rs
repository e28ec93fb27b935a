//! Grid verification harness: turns the defining identities and bounds into
//! pass/fail reports with worst-case margins.
//!
//! Margins are always reported in log space (`worst_margin_logmag`): at the
//! schedule's true scale a linear margin would be meaningless. Positive
//! margins pass; a negative margin is a genuine violation of that check's
//! inequality, not a tolerance artifact. All grids are deterministic and
//! point sweeps run in parallel with an order-independent min reduction, so a
//! report is reproducible bit for bit for a given configuration.

use rayon::prelude::*;
use serde::Serialize;

use crate::dirac::{dirac_residual, opnorm2_units, FdStencil};
use crate::extrange::ExtReal;
use crate::kelvin;
use crate::radii::Preset;
use crate::spinor::{Counterexample, PolarPoint, Region, SpinorField};
use crate::Result;

use std::f64::consts::PI;

/// Sampling density of the verification grids.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SampleGrid {
    /// Radial samples per band, log-uniform in `t`.
    pub radial_per_band: usize,
    /// Angular samples, uniform on `(-pi, pi]`.
    pub theta_samples: usize,
    /// Fraction of the band width excluded near seams for stencil checks.
    pub interior_margin: f64,
}

impl Default for SampleGrid {
    fn default() -> SampleGrid {
        SampleGrid { radial_per_band: 48, theta_samples: 32, interior_margin: 0.1 }
    }
}

impl SampleGrid {
    pub fn new(radial_per_band: usize, theta_samples: usize, interior_margin: f64) -> SampleGrid {
        assert!(radial_per_band >= 2 && theta_samples >= 2);
        assert!((0.0..0.4).contains(&interior_margin));
        SampleGrid { radial_per_band, theta_samples, interior_margin }
    }
}

/// Outcome of one verification check.
#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub region: String,
    pub points: usize,
    /// Worst margin of the check's inequality, in log space; negative means
    /// violated.
    pub worst_margin_logmag: f64,
    pub pass: bool,
}

/// Configuration echo attached to a report.
#[derive(Clone, Debug, Serialize)]
pub struct Parameters {
    pub epsilon: f64,
    pub delta: f64,
    pub k0: u32,
    pub k0_admissible: bool,
    pub schedule: Preset,
    pub k_max: u32,
    pub radial_samples: usize,
    pub theta_samples: usize,
    pub interior_margin: f64,
    pub fd_step: f64,
    pub identity_tol: f64,
}

/// Full run: parameters, one report per check, aggregate flag.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub parameters: Parameters,
    pub checks: Vec<CheckReport>,
    pub all_pass: bool,
}

/// Default identity-residual tolerance per schedule: the mild schedule runs a
/// true sampled stencil, the paper schedule the anchored band-local one.
pub fn default_identity_tol(preset: Preset) -> f64 {
    match preset {
        Preset::Mild => 1e-6,
        Preset::Paper => 1e-5,
    }
}

fn thetas(n: usize) -> Vec<f64> {
    (0..n).map(|i| -PI + 2.0 * PI * (i as f64 + 0.5) / n as f64).collect()
}

fn band_span(cfg: &Counterexample, k: u32, j: u8) -> (f64, f64) {
    let s = cfg.schedule();
    (s.log_rho(k, u32::from(j) + 1), s.log_rho(k, u32::from(j)))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn floor_ln(x: f64) -> f64 {
    x.max(1e-300).ln()
}

/// Bands `k0 ..= min(k0 + extra, k_max - 1)`.
fn annulus_range(cfg: &Counterexample, extra: u32) -> std::ops::RangeInclusive<u32> {
    cfg.k0()..=(cfg.k0() + extra).min(cfg.last_annulus())
}

/// Golden-section maximization of a smooth (possibly plateaued) function.
fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

/// `opnorm(V(z)) * |z| <= 1/2 + epsilon` on every band and the outer region,
/// with golden-section refinement around each band's grid maximum.
///
/// The product is evaluated on the unit-scale potential parts (`V * r`), so
/// the margin never round-trips through the absolute `1/r` magnitude.
pub fn check_potential_bound(cfg: &Counterexample, grid: &SampleGrid) -> Result<CheckReport> {
    let budget_ln = (0.5 + cfg.epsilon()).ln();
    let ths = thetas(grid.theta_samples);

    let mut domains: Vec<(Region, Vec<f64>)> = Vec::new();
    for k in annulus_range(cfg, 3) {
        for j in 0..6u8 {
            let (lo, hi) = band_span(cfg, k, j);
            domains.push((Region::Band { k, j }, linspace(lo, hi, grid.radial_per_band)));
        }
    }
    let l0 = cfg.schedule().log_rho(cfg.k0(), 0);
    let mut outer_ts = linspace(l0, 0.0, grid.radial_per_band);
    outer_ts.extend_from_slice(&[0.1, 0.5]);
    domains.push((Region::Outer, outer_ts));

    let val_ln = |region: Region, t: f64, theta: f64| -> f64 {
        let p = PolarPoint::new(t, theta);
        floor_ln(opnorm2_units(&cfg.potential_units(region, &p)))
    };

    let points: Vec<(Region, f64)> = domains
        .iter()
        .flat_map(|(r, ts)| ts.iter().map(move |&t| (*r, t)))
        .collect();
    let grid_max = points
        .par_iter()
        .map(|&(region, t)| {
            ths.iter().map(|&th| val_ln(region, t, th)).fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);

    // refine around each band's radial maximum (the norm is theta-independent)
    let refined = domains
        .par_iter()
        .map(|(region, ts)| {
            let g = |t: f64| val_ln(*region, t, ths[0]);
            let (i_max, _) = ts
                .iter()
                .enumerate()
                .map(|(i, &t)| (i, g(t)))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("non-empty grid");
            let lo = ts[i_max.saturating_sub(1)];
            let hi = ts[(i_max + 1).min(ts.len() - 1)];
            golden_max(&g, lo, hi, 80)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);

    let worst_val = grid_max.max(refined);
    let margin = budget_ln - worst_val;
    Ok(CheckReport {
        name: "potential-bound".into(),
        region: format!("outer + annuli {:?}", annulus_range(cfg, 3)),
        points: points.len() * ths.len(),
        worst_margin_logmag: margin,
        pass: margin >= 0.0,
    })
}

/// Max relative stencil residual of `D u = V u` over interior band points,
/// plus a handful of points in the vanished outer region.
pub fn check_identity(
    cfg: &Counterexample,
    grid: &SampleGrid,
    st: FdStencil,
    tol: f64,
) -> Result<CheckReport> {
    let ths = thetas(grid.theta_samples);
    let mut points: Vec<PolarPoint> = Vec::new();
    for k in annulus_range(cfg, 2) {
        for j in 0..6u8 {
            let (lo, hi) = band_span(cfg, k, j);
            let w = hi - lo;
            let ts = linspace(
                lo + grid.interior_margin * w,
                hi - grid.interior_margin * w,
                grid.radial_per_band,
            );
            for t in ts {
                for &th in &ths {
                    points.push(PolarPoint::new(t, th));
                }
            }
        }
    }
    let worst = points
        .par_iter()
        .map(|p| dirac_residual(cfg, p, st).expect("grid point in range"))
        .reduce(|| 0.0, f64::max);

    // outside the support both sides vanish identically
    let mut zero_pts = 0usize;
    for t in [0.1, 0.4, 1.0] {
        let p = PolarPoint::new(t, 0.3);
        assert_eq!(dirac_residual(cfg, &p, st)?, 0.0);
        zero_pts += 1;
    }

    let margin = tol.ln() - floor_ln(worst);
    Ok(CheckReport {
        name: "identity".into(),
        region: format!("annuli {:?} interiors + outer tail", annulus_range(cfg, 2)),
        points: points.len() + zero_pts,
        worst_margin_logmag: margin,
        pass: worst <= tol,
    })
}

/// `log |u| <= log 2 + k t` for every `k <= h` up to the annulus of the
/// sample, assembled from the band's exponent decomposition so the margin is
/// exact even when `t` is of order `-exp(k^2)`.
pub fn check_decay(cfg: &Counterexample, grid: &SampleGrid) -> Result<CheckReport> {
    let mut worst = f64::INFINITY;
    let mut points = 0usize;
    for h in cfg.k0()..=cfg.last_annulus() {
        for j in 0..6u8 {
            let region = Region::Band { k: h, j };
            let (lo, hi) = band_span(cfg, h, j);
            for t in linspace(lo, hi, grid.radial_per_band) {
                let (power, extra_ln) = cfg.u_norm_exponent(region, t);
                for k in cfg.k0()..=h {
                    let margin = 2f64.ln() + (f64::from(k) - power) * t - extra_ln;
                    worst = worst.min(margin);
                    points += 1;
                }
            }
        }
    }
    Ok(CheckReport {
        name: "decay".into(),
        region: format!("annuli {:?}", cfg.k0()..=cfg.last_annulus()),
        points,
        worst_margin_logmag: worst,
        pass: worst >= 0.0,
    })
}

/// Band exponent `H` such that `|u|^2 <= 4 exp(2 H t)` on band `(h, j)`.
fn band_bound_exponent(h: u32, j: u8) -> f64 {
    let hf = f64::from(h);
    match j {
        0 | 1 => hf,
        2..=4 => hf + 0.5,
        5 => hf + 1.0,
        _ => unreachable!(),
    }
}

/// Closed-form upper bound for `int_{|x| < rho_m} |u|^2`.
fn origin_mass_bound(cfg: &Counterexample, m: u32) -> ExtReal {
    let s = cfg.schedule();
    let mut total = ExtReal::ZERO;
    for h in m..=cfg.last_annulus() {
        for j in 0..6u8 {
            let e = 2.0 * band_bound_exponent(h, j) + 2.0;
            let (lo, hi) = band_span(cfg, h, j);
            let seg = ExtReal::from_ln(e * hi) - ExtReal::from_ln(e * lo);
            total = total + seg * ExtReal::from_f64(8.0 * PI / e);
        }
    }
    let e_tail = 2.0 * f64::from(s.k_max()) + 2.0;
    total
        + ExtReal::from_ln(e_tail * s.log_rho(s.k_max(), 0))
            * ExtReal::from_f64(8.0 * PI / e_tail)
}

/// Closed-form upper bound for `int_{|x| > 1/rho_m} |psi|^2` of the
/// transported field: the Kelvin change of variables turns it into
/// `int_{s < log rho_m} |u(s)|^2 ds dtheta` (no Jacobian weight).
fn infinity_mass_bound(cfg: &Counterexample, m: u32) -> ExtReal {
    let s = cfg.schedule();
    let mut total = ExtReal::ZERO;
    for h in m..=cfg.last_annulus() {
        for j in 0..6u8 {
            let e = 2.0 * band_bound_exponent(h, j);
            let (lo, hi) = band_span(cfg, h, j);
            let seg = ExtReal::from_ln(e * hi) - ExtReal::from_ln(e * lo);
            total = total + seg * ExtReal::from_f64(8.0 * PI / e);
        }
    }
    let e_tail = 2.0 * f64::from(s.k_max());
    total
        + ExtReal::from_ln(e_tail * s.log_rho(s.k_max(), 0))
            * ExtReal::from_f64(8.0 * PI / e_tail)
}

/// Log-domain trapezoid quadrature of `2 pi int |u|^2 e^{2t} dt` (origin
/// side) or `2 pi int |u|^2 dt` (infinity side) over each annulus.
///
/// The integrand grows like `exp(lambda t)` with `lambda` up to
/// `2 k_max + 2`, so the step is tied to that rate: trapezoid sums
/// overestimate a convex exponential by roughly `(lambda dt)^2 / 12`, and the
/// analytic bound being compared against has only a factor-2 slack. The field
/// norm is radial, so one angular sample suffices. Index `i` of the result
/// holds annulus `k0 + i`.
fn annulus_quadrature_masses(cfg: &Counterexample, jacobian: bool) -> Vec<ExtReal> {
    let lambda = 2.0 * f64::from(cfg.schedule().k_max()) + 2.0;
    let step = 0.5 / lambda;
    (cfg.k0()..=cfg.last_annulus())
        .map(|h| {
            let mut total = ExtReal::ZERO;
            for j in 0..6u8 {
                let (lo, hi) = band_span(cfg, h, j);
                let nodes = (((hi - lo) / step).ceil() as usize + 2).max(33);
                let dt = (hi - lo) / (nodes - 1) as f64;
                for i in 0..nodes {
                    let t = lo + dt * i as f64;
                    let u = cfg.u(&PolarPoint::new(t, 0.37)).expect("in range");
                    let n = u.norm();
                    if n.is_zero() {
                        continue;
                    }
                    let exponent = 2.0 * n.logmag() + if jacobian { 2.0 * t } else { 0.0 };
                    let w = if i == 0 || i == nodes - 1 { 0.5 } else { 1.0 };
                    total = total + ExtReal::from_ln(exponent) * ExtReal::from_f64(w * dt);
                }
            }
            total * ExtReal::from_f64(2.0 * PI)
        })
        .collect()
}

fn vanishing_sequence_report(
    cfg: &Counterexample,
    name: &str,
    k_list: &[u32],
    bound: impl Fn(&Counterexample, u32) -> ExtReal,
    quad_masses: Option<Vec<ExtReal>>,
) -> CheckReport {
    // independent oracle: quadrature mass below rho_m must stay under the bound
    let quadrature = |m: u32| -> Option<ExtReal> {
        let masses = quad_masses.as_ref()?;
        let mut total = ExtReal::ZERO;
        for h in m..=cfg.last_annulus() {
            total = total + masses[(h - cfg.k0()) as usize];
        }
        Some(total)
    };

    let s = cfg.schedule();
    let mut worst_drop = f64::INFINITY;
    let mut pass = true;
    let mut points = 0usize;
    for &k in k_list {
        let m_lo = k.max(cfg.k0());
        if m_lo >= cfg.last_annulus() {
            continue;
        }
        let ms: Vec<u32> = (m_lo..=cfg.last_annulus()).collect();
        let ys: Vec<f64> = ms
            .iter()
            .map(|&m| bound(cfg, m).logmag() - f64::from(k) * s.log_rho(m, 0))
            .collect();
        points += ys.len();
        for w in ys.windows(2) {
            worst_drop = worst_drop.min(w[0] - w[1]);
        }
        // linear trend in -log rho_m must slope downward
        let xs: Vec<f64> = ms.iter().map(|&m| -s.log_rho(m, 0)).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        if cov / var >= 0.0 {
            pass = false;
        }
        for &m in &ms {
            if let Some(qv) = quadrature(m) {
                if !qv.is_zero() && qv.logmag() > bound(cfg, m).logmag() + 1e-9 {
                    pass = false;
                }
            }
        }
    }
    pass = pass && worst_drop > 0.0;
    CheckReport {
        name: name.into(),
        region: format!("shells rho_m, m in [max(k, k0), {}]", cfg.last_annulus()),
        points,
        worst_margin_logmag: worst_drop,
        pass,
    }
}

/// Strict decrease of `log( rho_m^{-k} int_{|x|<rho_m} |u|^2 )` along the
/// shrinking shells, for each order `k`; on the mild schedule a log-domain
/// trapezoid quadrature independently confirms `quadrature <= bound`.
pub fn check_vanishing_origin(cfg: &Counterexample, k_list: &[u32]) -> Result<CheckReport> {
    let quad = (cfg.schedule().preset() == Preset::Mild)
        .then(|| annulus_quadrature_masses(cfg, true));
    Ok(vanishing_sequence_report(cfg, "vanishing-origin", k_list, origin_mass_bound, quad))
}

/// Mirror of [`check_vanishing_origin`] for the transported field at
/// infinity: `(1/rho_m)^k int_{|x| > 1/rho_m} |psi|^2` along growing shells.
pub fn check_vanishing_infinity(cfg: &Counterexample, k_list: &[u32]) -> Result<CheckReport> {
    let quad = (cfg.schedule().preset() == Preset::Mild)
        .then(|| annulus_quadrature_masses(cfg, false));
    Ok(vanishing_sequence_report(cfg, "vanishing-infinity", k_list, infinity_mass_bound, quad))
}

/// Componentwise agreement of adjacent band formulas at every seam.
pub fn check_continuity(cfg: &Counterexample, theta_samples: usize) -> Result<CheckReport> {
    let tol: f64 = 1e-12;
    let s = cfg.schedule();
    let ths = thetas(theta_samples);
    let mut worst: f64 = 0.0;
    let mut points = 0usize;

    let mut compare = |a: Region, b: Region, t: f64| {
        for &th in &ths {
            let p = PolarPoint::new(t, th);
            let ua = cfg.u_in_region(a, &p);
            let ub = cfg.u_in_region(b, &p);
            for (x, y) in [(ua.upper, ub.upper), (ua.lower, ub.lower)] {
                let disc = match (x.is_zero(), y.is_zero()) {
                    (true, true) => 0.0,
                    (false, false) => {
                        let scale = x.logmag().abs().max(1.0);
                        let dl = (x.logmag() - y.logmag()).abs() / scale;
                        let da = crate::extrange::normalize_arg(x.arg() - y.arg()).abs();
                        dl.max(da)
                    }
                    _ => 1.0,
                };
                worst = worst.max(disc);
            }
            points += 1;
        }
    };

    for k in annulus_range(cfg, 3) {
        for j in 1..=5u8 {
            let t = s.log_rho(k, u32::from(j));
            compare(Region::Band { k, j: j - 1 }, Region::Band { k, j }, t);
        }
        if k < cfg.last_annulus() {
            let t = s.log_rho(k + 1, 0);
            compare(Region::Band { k, j: 5 }, Region::Band { k: k + 1, j: 0 }, t);
        }
    }
    compare(Region::Outer, Region::Band { k: cfg.k0(), j: 0 }, s.log_rho(cfg.k0(), 0));

    let margin = tol.ln() - floor_ln(worst);
    Ok(CheckReport {
        name: "continuity".into(),
        region: format!("seams of annuli {:?} + outer seam", annulus_range(cfg, 3)),
        points,
        worst_margin_logmag: margin,
        pass: worst <= tol,
    })
}

/// Support and bound checks for the transported example at infinity: the
/// field vanishes identically inside the unit disc, and at inverted sample
/// points its potential bound margin coincides with the origin-side one.
pub fn check_infinity_example(cfg: &Counterexample, grid: &SampleGrid) -> Result<CheckReport> {
    let psi = kelvin::infinity_example(cfg);
    let budget_ln = (0.5 + cfg.epsilon()).ln();
    let mut points = 0usize;
    let mut worst = f64::INFINITY;

    // interior of the unit disc: identically zero
    for t in linspace(-2.0, 0.0, 64) {
        assert!(psi.eval(&PolarPoint::new(t, 0.7)).is_zero());
        points += 1;
    }

    // inverted band grid: the transported potential bound under t -> -t
    for k in annulus_range(cfg, 3) {
        for j in 0..6u8 {
            let (lo, hi) = band_span(cfg, k, j);
            for t in linspace(lo, hi, grid.radial_per_band / 2) {
                let p = PolarPoint::new(t, 0.7);
                let v = opnorm2_units(&cfg.potential_units(Region::Band { k, j }, &p));
                worst = worst.min(budget_ln - floor_ln(v));
                points += 1;
            }
        }
    }

    Ok(CheckReport {
        name: "infinity-example".into(),
        region: "unit disc + inverted bands".into(),
        points,
        worst_margin_logmag: worst,
        pass: worst >= 0.0,
    })
}

/// Run every check in a fixed order.
pub fn run_all(
    cfg: &Counterexample,
    grid: &SampleGrid,
    st: FdStencil,
    identity_tol: f64,
) -> Result<RunReport> {
    let checks = vec![
        check_potential_bound(cfg, grid)?,
        check_identity(cfg, grid, st, identity_tol)?,
        check_decay(cfg, grid)?,
        check_vanishing_origin(cfg, &[1, 5, 10])?,
        check_vanishing_infinity(cfg, &[1, 5, 10])?,
        check_continuity(cfg, (grid.theta_samples * 2).max(64))?,
        check_infinity_example(cfg, grid)?,
    ];
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(RunReport {
        parameters: Parameters {
            epsilon: cfg.epsilon(),
            delta: cfg.delta(),
            k0: cfg.k0(),
            k0_admissible: cfg.k0_admissible(),
            schedule: cfg.schedule().preset(),
            k_max: cfg.schedule().k_max(),
            radial_samples: grid.radial_per_band,
            theta_samples: grid.theta_samples,
            interior_margin: grid.interior_margin,
            fd_step: st.h_t,
            identity_tol,
        },
        checks,
        all_pass,
    })
}
