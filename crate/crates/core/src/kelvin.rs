//! Kelvin transform adapted to the Dirac operator, and the transport of the
//! counterexample to the point at infinity.
//!
//! The transform is `u_K(x) = |x|^{-(n-1)} [i (alpha . x/|x|) alpha_{n+1}]
//! u(x/|x|^2)`. The multiplier is unitary and squares to the identity, so the
//! transform is an involution, and it intertwines the Dirac operator with its
//! `|x|^{-2}`-scaled pullback: `D u_K = |x|^{-2} [D u]_K`. In log radius the
//! inversion is the exact reflection `t -> -t`, which is what lets the
//! paper-scale field be transported without losing a digit.
//!
//! Note on mass bookkeeping: with the `|x|^{-(n-1)}` prefactor the transform
//! is *not* a plain `L^2` isometry; the change of variables gives
//! `int |u_K(x)|^2 dx = int |u(y)|^2 |y|^{-2} dy` over inverted shells (any
//! `n`). [`shell_mass_sides`] checks exactly that identity by two independent
//! quadratures; for a constant field on an annulus the unweighted masses
//! genuinely differ (see the unit tests).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::dirac::{apply_dirac_cart, CliffordSet};
use crate::extrange::{ExtComplex, ExtReal};
use crate::spinor::{Counterexample, PolarPoint, SpinorField, SpinorValue};

use std::f64::consts::{FRAC_PI_2, PI};

/// Kelvin transform of a planar log-polar spinor field (extended range).
#[derive(Clone, Debug)]
pub struct KelvinField<F> {
    base: F,
}

impl<F: SpinorField> KelvinField<F> {
    pub fn new(base: F) -> KelvinField<F> {
        KelvinField { base }
    }

    pub fn base(&self) -> &F {
        &self.base
    }
}

fn shift(z: ExtComplex, dlog: f64, dphase: f64) -> ExtComplex {
    if z.is_zero() {
        ExtComplex::ZERO
    } else {
        ExtComplex::new(z.logmag() + dlog, z.arg() + dphase)
    }
}

impl<F: SpinorField> SpinorField for KelvinField<F> {
    /// `psi_1 = -i e^{-i theta} e^{-t} u_2(-t)`,
    /// `psi_2 = +i e^{+i theta} e^{-t} u_1(-t)`.
    fn eval(&self, p: &PolarPoint) -> SpinorValue {
        let u = self.base.eval(&p.inverted());
        SpinorValue {
            upper: shift(u.lower, -p.t(), -p.theta() - FRAC_PI_2),
            lower: shift(u.upper, -p.t(), p.theta() + FRAC_PI_2),
        }
    }
}

/// The example at infinity: Kelvin transform of the counterexample field.
/// Supported in `|x| >= 1`, vanishing at infinite order there.
pub fn infinity_example(cfg: &Counterexample) -> KelvinField<impl SpinorField + '_> {
    KelvinField::new(move |p: &PolarPoint| {
        cfg.u(p).expect("inverted sample below the resolved schedule range")
    })
}

/// Exponent transported by the Kelvin transform: a potential bound
/// `|x|^{-gamma}` near the origin becomes `|x|^{gamma - 2}` near infinity.
pub fn transport_bound(gamma: f64) -> f64 {
    2.0 - gamma
}

/// Unitary Kelvin multiplier `i (alpha . x/|x|) alpha_{n+1}`.
pub fn kelvin_multiplier(cl: &CliffordSet, x: &[f64]) -> DMatrix<Complex64> {
    let n = cl.n() as usize;
    assert_eq!(x.len(), n);
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(r > 0.0, "multiplier undefined at the origin");
    let mut ax = DMatrix::from_element(cl.dim(), cl.dim(), Complex64::new(0.0, 0.0));
    for (j, &xj) in x.iter().enumerate() {
        ax += cl.alpha(j + 1) * Complex64::new(xj / r, 0.0);
    }
    ax * cl.alpha(n + 1) * Complex64::new(0.0, 1.0)
}

fn invert_point(x: &[f64]) -> Vec<f64> {
    let r2 = x.iter().map(|v| v * v).sum::<f64>();
    x.iter().map(|v| v / r2).collect()
}

/// Boxed Cartesian spinor field, the common shape of the smooth test fields.
pub type BoxedCartesianField = Box<dyn Fn(&[f64]) -> DVector<Complex64>>;

/// Smooth planar test spinor with angular structure (Cartesian, `n = 2`).
pub fn gaussian_test_field(x: &[f64]) -> DVector<Complex64> {
    let r2 = x[0] * x[0] + x[1] * x[1];
    DVector::from_vec(vec![
        Complex64::new((-r2 / 2.0).exp(), 0.0),
        Complex64::new(x[0], x[1]) * Complex64::new((-r2).exp(), 0.0),
    ])
}

/// Polynomial test spinor (Cartesian, `n = 3`).
pub fn polynomial_test_field(x: &[f64]) -> DVector<Complex64> {
    DVector::from_vec(vec![
        Complex64::new(x[0] * x[0], x[1]),
        Complex64::new(x[1] * x[2], 0.0),
        Complex64::new(x[0] + x[2] * x[2] * x[2], 0.0),
        Complex64::new(1.0, x[0] * x[1]),
    ])
}

/// Cartesian Kelvin transform at double scale, for `n = 2, 3` test fields.
pub struct CartesianKelvin<'a, F> {
    clifford: &'a CliffordSet,
    base: F,
}

impl<'a, F> CartesianKelvin<'a, F>
where
    F: Fn(&[f64]) -> DVector<Complex64>,
{
    pub fn new(clifford: &'a CliffordSet, base: F) -> Self {
        CartesianKelvin { clifford, base }
    }

    pub fn eval(&self, x: &[f64]) -> DVector<Complex64> {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let pre = r.powi(-(self.clifford.n() as i32 - 1));
        let u = (self.base)(&invert_point(x));
        kelvin_multiplier(self.clifford, x) * u * Complex64::new(pre, 0.0)
    }
}

/// Scale-regularized residual of the intertwining identity
/// `D u_K (x) = |x|^{-2} [D u]_K (x)`, both sides by central differences.
pub fn intertwining_residual<F>(cl: &CliffordSet, base: &F, x: &[f64], h: f64) -> f64
where
    F: Fn(&[f64]) -> DVector<Complex64>,
{
    let kel = CartesianKelvin::new(cl, base);
    let lhs = apply_dirac_cart(cl, &|y: &[f64]| kel.eval(y), x, h);

    let r2 = x.iter().map(|v| v * v).sum::<f64>();
    let n = cl.n();
    let du_inv = apply_dirac_cart(cl, base, &invert_point(x), h);
    let pre = r2.sqrt().powi(-(n as i32 - 1)) / r2;
    let rhs = kelvin_multiplier(cl, x) * du_inv * Complex64::new(pre, 0.0);

    let scale = kel.eval(x).norm() / r2.sqrt();
    let den = lhs.norm() + rhs.norm() + scale;
    if den == 0.0 {
        0.0
    } else {
        (lhs - rhs).norm() / den
    }
}

/// Gap between the potential-bound ratio of a field at `x` and the
/// transported ratio of its Kelvin transform at `x/|x|^2`:
///
/// `| |D u_K(y)| |y|^{2-gamma} / |u_K(y)|  -  |D u(x)| |x|^{gamma} / |u(x)| |`
///
/// which vanishes identically by the intertwining identity.
pub fn transport_ratio_gap<F>(cl: &CliffordSet, base: &F, gamma: f64, x: &[f64], h: f64) -> f64
where
    F: Fn(&[f64]) -> DVector<Complex64>,
{
    let du = apply_dirac_cart(cl, base, x, h);
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ratio_base = du.norm() * r.powf(gamma) / (base)(x).norm();

    let y = invert_point(x);
    let kel = CartesianKelvin::new(cl, base);
    let dpsi = apply_dirac_cart(cl, &|z: &[f64]| kel.eval(z), &y, h);
    let ry = 1.0 / r;
    let ratio_kelvin = dpsi.norm() * ry.powf(transport_bound(gamma)) / kel.eval(&y).norm();

    (ratio_kelvin - ratio_base).abs()
}

/// Both sides of the shell-mass transport identity
///
/// `int_{a<|x|<b} |u_K|^2 dx  =  int_{1/b<|y|<1/a} |u(y)|^2 |y|^{-2} dy`
///
/// by independent quadratures (composite Simpson in `t = log r`, trapezoid in
/// `theta`), accumulated in extended range. `nr` must be even.
pub fn shell_mass_sides<F: SpinorField>(
    base: &F,
    a: f64,
    b: f64,
    nr: usize,
    ntheta: usize,
) -> (ExtReal, ExtReal) {
    assert!(a > 0.0 && b > a && nr >= 2 && nr.is_multiple_of(2) && ntheta >= 4);
    let kelvin = KelvinField::new(move |p: &PolarPoint| base.eval(p));

    // LHS over t in [ln a, ln b]: integrand |psi|^2 e^{2t}
    let lhs = polar_quadrature(a.ln(), b.ln(), nr, ntheta, |p| {
        let psi = kelvin.eval(p);
        let n2 = psi.norm();
        if n2.is_zero() {
            ExtReal::ZERO
        } else {
            ExtReal::from_ln(2.0 * n2.logmag() + 2.0 * p.t())
        }
    });
    // RHS over s in [-ln b, -ln a]: the |y|^{-2} weight cancels the Jacobian
    let rhs = polar_quadrature(-b.ln(), -a.ln(), nr, ntheta, |p| {
        let u = base.eval(p);
        let n2 = u.norm();
        if n2.is_zero() {
            ExtReal::ZERO
        } else {
            ExtReal::from_ln(2.0 * n2.logmag())
        }
    });
    (lhs, rhs)
}

fn polar_quadrature(
    t_lo: f64,
    t_hi: f64,
    nr: usize,
    ntheta: usize,
    f: impl Fn(&PolarPoint) -> ExtReal,
) -> ExtReal {
    let dt = (t_hi - t_lo) / nr as f64;
    let dth = 2.0 * PI / ntheta as f64;
    let mut total = ExtReal::ZERO;
    for i in 0..=nr {
        let simpson_w = if i == 0 || i == nr {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let t = t_lo + i as f64 * dt;
        let mut ring = ExtReal::ZERO;
        for j in 0..ntheta {
            let theta = -PI + j as f64 * dth;
            ring = ring + f(&PolarPoint::new(t, theta));
        }
        total = total + ring * ExtReal::from_f64(simpson_w);
    }
    total * ExtReal::from_f64(dt / 3.0 * dth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radii::Preset;
    use rand::{Rng, SeedableRng};

    use super::{gaussian_test_field as gaussian2, polynomial_test_field as poly3};

    #[test]
    fn multiplier_matches_pauli_product() {
        // at x = (1, 0): i sigma_1 sigma_3 = [[0, -i], [i, 0]]
        let cl = CliffordSet::new(2).unwrap();
        let b = kelvin_multiplier(&cl, &[1.0, 0.0]);
        let i = Complex64::new(0.0, 1.0);
        assert_eq!(b[(0, 0)], Complex64::new(0.0, 0.0));
        assert_eq!(b[(0, 1)], -i);
        assert_eq!(b[(1, 0)], i);
        // applied to (1,0): (0, i)
        let w = &b * DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        assert_eq!(w[1], i);
    }

    #[test]
    fn multiplier_is_unitary_and_involutive() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in [2u32, 3] {
            let cl = CliffordSet::new(n).unwrap();
            let id = DMatrix::<Complex64>::identity(cl.dim(), cl.dim());
            for _ in 0..50 {
                let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
                if x.iter().map(|v| v * v).sum::<f64>() < 1e-2 {
                    continue;
                }
                let b = kelvin_multiplier(&cl, &x);
                assert!(((&b * b.adjoint()) - &id).norm() < 1e-14, "unitary");
                assert!(((&b * &b) - &id).norm() < 1e-14, "squares to identity");
                let w = DVector::from_fn(cl.dim(), |_, _| {
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                });
                assert!(((&b * &w).norm() - w.norm()).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn cartesian_involution_at_random_points() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for n in [2u32, 3] {
            let cl = CliffordSet::new(n).unwrap();
            let base: BoxedCartesianField =
                if n == 2 { Box::new(gaussian2) } else { Box::new(poly3) };
            let once = CartesianKelvin::new(&cl, &base);
            let twice = CartesianKelvin::new(&cl, |y: &[f64]| once.eval(y));
            for _ in 0..100 {
                let x: Vec<f64> =
                    (0..n).map(|_| rng.random_range::<f64, _>(0.3..1.5) * [1.0, -1.0][rng.random_range(0..2)]).collect();
                let u = base(&x);
                let v = twice.eval(&x);
                assert!((&v - &u).norm() <= 1e-12 * u.norm().max(1e-6), "n={n}");
            }
        }
    }

    #[test]
    fn polar_involution_on_the_counterexample() {
        let cfg = Counterexample::from_epsilon(0.1, Preset::Paper, 12).unwrap();
        let once = infinity_example(&cfg);
        let twice = KelvinField::new(move |p: &PolarPoint| once.eval(p));
        let s = cfg.schedule();
        let k = cfg.k0() + 1;
        for j in 0..6u32 {
            let t = 0.5 * (s.log_rho(k, j) + s.log_rho(k, j + 1));
            let p = PolarPoint::new(t, 0.8);
            let u = cfg.u(&p).unwrap();
            let v = twice.eval(&p);
            for (a, b) in [(u.upper, v.upper), (u.lower, v.lower)] {
                assert_eq!(a.is_zero(), b.is_zero());
                if !a.is_zero() {
                    assert!((a.logmag() - b.logmag()).abs() <= 1e-12 * a.logmag().abs());
                    assert!((a.arg() - b.arg()).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn intertwining_identity_on_smooth_fields() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        let cl2 = CliffordSet::new(2).unwrap();
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let r = rng.random_range(0.5..2.0);
            let ang = rng.random_range(0.0..std::f64::consts::TAU);
            let x = [r * ang.cos(), r * ang.sin()];
            worst = worst.max(intertwining_residual(&cl2, &gaussian2, &x, 1e-5));
        }
        assert!(worst < 1e-5, "n=2 worst residual {worst}");

        let cl3 = CliffordSet::new(3).unwrap();
        let mut worst3: f64 = 0.0;
        for _ in 0..30 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(0.4..1.2)).collect();
            worst3 = worst3.max(intertwining_residual(&cl3, &poly3, &x, 1e-5));
        }
        assert!(worst3 < 1e-5, "n=3 worst residual {worst3}");
    }

    #[test]
    fn intertwining_on_harmonic_blocks_is_noise_level() {
        // (z^2, 0)-type block: both sides vanish identically
        let cl = CliffordSet::new(2).unwrap();
        let block = |x: &[f64]| {
            let z = Complex64::new(x[0], x[1]);
            DVector::from_vec(vec![Complex64::new(0.0, 0.0), (z.conj()) * (z.conj())])
        };
        for x in [[1.0, 0.2], [0.4, -0.9], [1.4, 1.1]] {
            let r = intertwining_residual(&cl, &block, &x, 1e-5);
            assert!(r < 1e-8, "residual {r}");
        }
    }

    #[test]
    fn transported_exponent_values() {
        assert_eq!(transport_bound(1.0), 1.0);
        assert_eq!(transport_bound(2.0), 0.0);
        assert_eq!(transport_bound(1.5), 0.5);
    }

    #[test]
    fn transport_ratio_survives_inversion() {
        // f(r) = exp(-tau r^{-beta} / beta), beta = 2 gamma - 2
        let cl = CliffordSet::new(2).unwrap();
        let gamma = 1.5;
        let tau = 0.3;
        let field = move |x: &[f64]| {
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            let f = (-tau * r.powf(-1.0)).exp();
            DVector::from_vec(vec![Complex64::new(f, 0.0), Complex64::new(0.0, 0.0)])
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..25 {
            let r = rng.random_range(0.7..1.5);
            let ang = rng.random_range(0.0..std::f64::consts::TAU);
            let x = [r * ang.cos(), r * ang.sin()];
            let gap = transport_ratio_gap(&cl, &field, gamma, &x, 1e-5);
            assert!(gap < 1e-8, "gap {gap} at r={r}");
        }
    }

    #[test]
    fn shell_mass_transport_identity() {
        // smooth planar spinor with angular structure
        let base = |p: &PolarPoint| {
            let r = p.t().exp();
            let z = Complex64::from_polar(r, p.theta());
            SpinorValue {
                upper: ExtComplex::from_c64(Complex64::new((-r * r / 2.0).exp(), 0.0)),
                lower: ExtComplex::from_c64(z * Complex64::new((-r * r).exp(), 0.0)),
            }
        };
        let (lhs, rhs) = shell_mass_sides(&base, 0.5, 2.0, 512, 64);
        let gap = (lhs.logmag() - rhs.logmag()).abs();
        assert!(gap < 1e-8, "shell transport gap {gap}");
    }

    #[test]
    fn unweighted_shell_mass_is_not_preserved() {
        // u = (0, 1): |u_K| = 1/|x|, so over 1 < |x| < 2 the transform mass is
        // 2 pi ln 2 while the plain mass of u over the inverted shell is
        // pi (1 - 1/4); the |y|^{-2} weight is what restores equality.
        let base = |_: &PolarPoint| SpinorValue {
            upper: ExtComplex::ZERO,
            lower: ExtComplex::ONE,
        };
        let (lhs, rhs) = shell_mass_sides(&base, 1.0, 2.0, 256, 16);
        let expect = (2.0 * PI * 2.0f64.ln()).ln();
        assert!((lhs.logmag() - expect).abs() < 1e-10);
        assert!((rhs.logmag() - expect).abs() < 1e-10);
        // the naive unweighted pairing would compare against pi * 3/4 instead
        let unweighted = (PI * 0.75).ln();
        assert!((lhs.logmag() - unweighted).abs() > 0.5);
    }

    #[test]
    fn infinity_example_supported_outside_unit_disc() {
        let cfg = Counterexample::from_epsilon(0.1, Preset::Paper, 12).unwrap();
        let psi = infinity_example(&cfg);
        for &t in &[-3.0, -0.5, -0.01, 0.0] {
            assert!(psi.eval(&PolarPoint::new(t, 0.4)).is_zero(), "t={t}");
        }
        // inverted pure band: |psi(x)| = |x|^{-(k+1)}
        let s = cfg.schedule();
        let k = cfg.k0();
        let t_u = 0.5 * (s.log_rho(k, 0) + s.log_rho(k, 1));
        let p = PolarPoint::new(-t_u, 1.3);
        let v = psi.eval(&p);
        let n = v.norm();
        assert!((n.logmag() - (-(f64::from(k) + 1.0) * p.t())).abs() < 1e-9 * p.t().abs());
    }
}
