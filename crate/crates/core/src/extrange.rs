//! Extended-range arithmetic in sign/log-magnitude form.
//!
//! The radii schedule reaches values like `exp(-exp(144))` and field values
//! `r^k` on top of that, far below the smallest subnormal double. Numbers are
//! therefore stored as a sign plus the natural log of their absolute value
//! ([`ExtReal`]), and complex values as log-magnitude plus principal argument
//! ([`ExtComplex`]). The log-magnitude itself is an ordinary double, which
//! holds every magnitude the supported schedule produces (`k <= 25`); if an
//! operation would push it to infinity that is a hard error, not a silent
//! saturation.

use std::cmp::Ordering;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

/// Additions whose operands differ by more than this in log-magnitude
/// collapse to the larger operand (relative error below `exp(-40)`).
pub const COLLAPSE_LOGMAG: f64 = 40.0;

#[inline]
fn checked_logmag(x: f64) -> f64 {
    assert!(x.is_finite(), "extended-range overflow: logmag = {x}");
    x
}

/// Sign of an extended-range real; `Zero` is a distinguished exact state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Neg,
    Zero,
    Pos,
}

impl Sign {
    pub fn of(x: f64) -> Sign {
        if x == 0.0 {
            Sign::Zero
        } else if x > 0.0 {
            Sign::Pos
        } else {
            Sign::Neg
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Neg => Sign::Pos,
            Sign::Zero => Sign::Zero,
            Sign::Pos => Sign::Neg,
        }
    }

    fn rank(self) -> i8 {
        match self {
            Sign::Neg => -1,
            Sign::Zero => 0,
            Sign::Pos => 1,
        }
    }

    fn as_f64(self) -> f64 {
        f64::from(self.rank())
    }
}

impl Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        match self.rank() * rhs.rank() {
            0 => Sign::Zero,
            1 => Sign::Pos,
            _ => Sign::Neg,
        }
    }
}

/// Real number stored as `sign * exp(logmag)`.
///
/// Exact zero is the state `sign == Zero`; its stored logmag is canonically
/// `0.0` and never participates in comparisons.
#[derive(Clone, Copy, Debug)]
pub struct ExtReal {
    sign: Sign,
    logmag: f64,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal { sign: Sign::Zero, logmag: 0.0 };
    pub const ONE: ExtReal = ExtReal { sign: Sign::Pos, logmag: 0.0 };

    pub fn new(sign: Sign, logmag: f64) -> ExtReal {
        match sign {
            Sign::Zero => ExtReal::ZERO,
            _ => ExtReal { sign, logmag: checked_logmag(logmag) },
        }
    }

    /// Positive value `exp(logmag)`.
    pub fn from_ln(logmag: f64) -> ExtReal {
        ExtReal::new(Sign::Pos, logmag)
    }

    pub fn from_f64(x: f64) -> ExtReal {
        assert!(x.is_finite(), "cannot represent {x}");
        if x == 0.0 {
            ExtReal::ZERO
        } else {
            ExtReal { sign: Sign::of(x), logmag: x.abs().ln() }
        }
    }

    /// Nearest double; saturates to `0`/`inf` outside double range.
    pub fn to_f64(self) -> f64 {
        self.sign.as_f64() * self.logmag.exp()
    }

    pub fn is_zero(self) -> bool {
        self.sign == Sign::Zero
    }

    pub fn sign(self) -> Sign {
        self.sign
    }

    /// Log of the absolute value. Panics on exact zero.
    pub fn logmag(self) -> f64 {
        assert!(!self.is_zero(), "logmag of exact zero");
        self.logmag
    }

    pub fn abs(self) -> ExtReal {
        match self.sign {
            Sign::Zero => ExtReal::ZERO,
            _ => ExtReal { sign: Sign::Pos, logmag: self.logmag },
        }
    }

    /// Square root of a nonnegative value.
    pub fn sqrt(self) -> ExtReal {
        match self.sign {
            Sign::Zero => ExtReal::ZERO,
            Sign::Pos => ExtReal::from_ln(0.5 * self.logmag),
            Sign::Neg => panic!("sqrt of negative extended-range value"),
        }
    }

    pub fn recip(self) -> ExtReal {
        assert!(!self.is_zero(), "reciprocal of exact zero");
        ExtReal::new(self.sign, -self.logmag)
    }

    pub fn powi(self, k: i32) -> ExtReal {
        match self.sign {
            Sign::Zero => {
                assert!(k > 0, "zero to a non-positive power");
                ExtReal::ZERO
            }
            Sign::Pos => ExtReal::from_ln(checked_logmag(f64::from(k) * self.logmag)),
            Sign::Neg => {
                let sign = if k % 2 == 0 { Sign::Pos } else { Sign::Neg };
                ExtReal::new(sign, checked_logmag(f64::from(k) * self.logmag))
            }
        }
    }

    /// Total order consistent with the represented reals.
    pub fn compare(self, other: ExtReal) -> Ordering {
        match self.sign.rank().cmp(&other.sign.rank()) {
            Ordering::Equal => match self.sign {
                Sign::Zero => Ordering::Equal,
                Sign::Pos => self.logmag.total_cmp(&other.logmag),
                Sign::Neg => other.logmag.total_cmp(&self.logmag),
            },
            ord => ord,
        }
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        if self.compare(other) == Ordering::Less {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: ExtReal) -> ExtReal {
        if self.compare(other) == Ordering::Greater {
            other
        } else {
            self
        }
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    /// Log-sum-exp anchored at the larger magnitude. Operands of equal
    /// magnitude and opposite sign cancel to exact zero.
    fn add(self, rhs: ExtReal) -> ExtReal {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.logmag >= rhs.logmag { (self, rhs) } else { (rhs, self) };
        let d = small.logmag - big.logmag;
        if d < -COLLAPSE_LOGMAG {
            return big;
        }
        if big.sign == small.sign {
            ExtReal::new(big.sign, big.logmag + d.exp().ln_1p())
        } else if d == 0.0 {
            ExtReal::ZERO
        } else {
            // ln(1 - e^d) through expm1 to keep accuracy as d -> 0^-
            ExtReal::new(big.sign, big.logmag + (-d.exp_m1()).ln())
        }
    }
}

impl Sub for ExtReal {
    type Output = ExtReal;
    fn sub(self, rhs: ExtReal) -> ExtReal {
        self + (-rhs)
    }
}

impl Mul for ExtReal {
    type Output = ExtReal;
    fn mul(self, rhs: ExtReal) -> ExtReal {
        match self.sign * rhs.sign {
            Sign::Zero => ExtReal::ZERO,
            sign => ExtReal::new(sign, checked_logmag(self.logmag + rhs.logmag)),
        }
    }
}

impl Neg for ExtReal {
    type Output = ExtReal;
    fn neg(self) -> ExtReal {
        ExtReal { sign: self.sign.flip(), logmag: self.logmag }
    }
}

impl PartialEq for ExtReal {
    fn eq(&self, other: &ExtReal) -> bool {
        self.compare(*other) == Ordering::Equal
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &ExtReal) -> Option<Ordering> {
        Some(self.compare(*other))
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            Sign::Zero => write!(f, "0"),
            Sign::Pos => write!(f, "exp({})", self.logmag),
            Sign::Neg => write!(f, "-exp({})", self.logmag),
        }
    }
}

/// Normalize an angle to the principal range `(-pi, pi]`.
pub fn normalize_arg(x: f64) -> f64 {
    debug_assert!(x.is_finite());
    let mut a = x % TAU;
    if a <= -PI {
        a += TAU;
    } else if a > PI {
        a -= TAU;
    }
    a
}

/// Complex number stored as `exp(logmag) * exp(i arg)` plus an exact-zero flag.
#[derive(Clone, Copy, Debug)]
pub struct ExtComplex {
    zero: bool,
    logmag: f64,
    arg: f64,
}

impl ExtComplex {
    pub const ZERO: ExtComplex = ExtComplex { zero: true, logmag: 0.0, arg: 0.0 };
    pub const ONE: ExtComplex = ExtComplex { zero: false, logmag: 0.0, arg: 0.0 };

    pub fn new(logmag: f64, arg: f64) -> ExtComplex {
        ExtComplex { zero: false, logmag: checked_logmag(logmag), arg: normalize_arg(arg) }
    }

    pub fn from_c64(z: Complex64) -> ExtComplex {
        if z.re == 0.0 && z.im == 0.0 {
            ExtComplex::ZERO
        } else {
            ExtComplex::new(z.norm().ln(), z.arg())
        }
    }

    pub fn from_ext_real(x: ExtReal) -> ExtComplex {
        match x.sign() {
            Sign::Zero => ExtComplex::ZERO,
            Sign::Pos => ExtComplex { zero: false, logmag: x.logmag(), arg: 0.0 },
            Sign::Neg => ExtComplex { zero: false, logmag: x.logmag(), arg: PI },
        }
    }

    /// Nearest double-precision complex; saturates outside double range.
    pub fn to_c64(self) -> Complex64 {
        if self.zero {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::from_polar(self.logmag.exp(), self.arg)
        }
    }

    pub fn is_zero(self) -> bool {
        self.zero
    }

    pub fn logmag(self) -> f64 {
        assert!(!self.zero, "logmag of exact zero");
        self.logmag
    }

    pub fn arg(self) -> f64 {
        assert!(!self.zero, "argument of exact zero");
        self.arg
    }

    /// Modulus as an extended-range real; preserves logmag exactly.
    pub fn modulus(self) -> ExtReal {
        if self.zero {
            ExtReal::ZERO
        } else {
            ExtReal::from_ln(self.logmag)
        }
    }

    /// Squared modulus, `exp(2 logmag)`.
    pub fn norm_sqr(self) -> ExtReal {
        if self.zero {
            ExtReal::ZERO
        } else {
            ExtReal::from_ln(checked_logmag(2.0 * self.logmag))
        }
    }

    pub fn conj(self) -> ExtComplex {
        if self.zero {
            ExtComplex::ZERO
        } else {
            ExtComplex { zero: false, logmag: self.logmag, arg: normalize_arg(-self.arg) }
        }
    }

    pub fn recip(self) -> ExtComplex {
        assert!(!self.zero, "reciprocal of exact zero");
        ExtComplex::new(-self.logmag, -self.arg)
    }

    /// Integer power: `logmag -> k*logmag`, `arg -> normalize(k*arg)`.
    pub fn powi(self, k: i32) -> ExtComplex {
        if self.zero {
            assert!(k > 0, "zero to a non-positive power");
            return ExtComplex::ZERO;
        }
        if k == 0 {
            return ExtComplex::ONE;
        }
        let k = f64::from(k);
        ExtComplex::new(checked_logmag(k * self.logmag), k * self.arg)
    }

    /// Multiply by a unit phase `exp(i phi)`.
    pub fn rotate(self, phi: f64) -> ExtComplex {
        if self.zero {
            ExtComplex::ZERO
        } else {
            ExtComplex { zero: false, logmag: self.logmag, arg: normalize_arg(self.arg + phi) }
        }
    }

    /// Scale by an extended-range real factor.
    pub fn scale(self, x: ExtReal) -> ExtComplex {
        if self.zero || x.is_zero() {
            return ExtComplex::ZERO;
        }
        let arg = if x.sign() == Sign::Neg { self.arg + PI } else { self.arg };
        ExtComplex::new(checked_logmag(self.logmag + x.logmag()), arg)
    }

    /// Multiply by an ordinary double-precision complex factor.
    pub fn mul_c64(self, c: Complex64) -> ExtComplex {
        if self.zero || (c.re == 0.0 && c.im == 0.0) {
            return ExtComplex::ZERO;
        }
        ExtComplex::new(checked_logmag(self.logmag + c.norm().ln()), self.arg + c.arg())
    }
}

impl Mul for ExtComplex {
    type Output = ExtComplex;
    fn mul(self, rhs: ExtComplex) -> ExtComplex {
        if self.zero || rhs.zero {
            ExtComplex::ZERO
        } else {
            ExtComplex::new(checked_logmag(self.logmag + rhs.logmag), self.arg + rhs.arg)
        }
    }
}

impl Add for ExtComplex {
    type Output = ExtComplex;

    /// Anchored at the larger magnitude: the smaller operand becomes an
    /// ordinary complex ratio against the larger one.
    fn add(self, rhs: ExtComplex) -> ExtComplex {
        if self.zero {
            return rhs;
        }
        if rhs.zero {
            return self;
        }
        let (big, small) = if self.logmag >= rhs.logmag { (self, rhs) } else { (rhs, self) };
        let d = small.logmag - big.logmag;
        if d < -COLLAPSE_LOGMAG {
            return big;
        }
        let w = Complex64::new(1.0, 0.0) + Complex64::from_polar(d.exp(), small.arg - big.arg);
        let n = w.norm();
        if n == 0.0 {
            return ExtComplex::ZERO;
        }
        ExtComplex::new(big.logmag + n.ln(), big.arg + w.arg())
    }
}

impl Sub for ExtComplex {
    type Output = ExtComplex;
    fn sub(self, rhs: ExtComplex) -> ExtComplex {
        self + (-rhs)
    }
}

impl Neg for ExtComplex {
    type Output = ExtComplex;
    fn neg(self) -> ExtComplex {
        self.rotate(PI)
    }
}

impl PartialEq for ExtComplex {
    fn eq(&self, other: &ExtComplex) -> bool {
        if self.zero || other.zero {
            return self.zero == other.zero;
        }
        self.logmag == other.logmag && self.arg == other.arg
    }
}

impl fmt::Display for ExtComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.zero {
            write!(f, "0")
        } else {
            write!(f, "exp({} + {}i)", self.logmag, self.arg)
        }
    }
}
