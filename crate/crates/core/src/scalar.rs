//! Scalar types for matrix arithmetic and high-precision constants.
//!
//! [`Scalar`] abstracts over `f64` and the double-double type [`Dd`] (about 32
//! significant digits). Möbius arithmetic is generic over it so that long
//! words can be multiplied without their traces blurring into each other.

use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Real scalar usable for PSL₂(ℝ) arithmetic.
pub trait Scalar:
    Copy
    + fmt::Debug
    + PartialEq
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    const ZERO: Self;
    const ONE: Self;
    /// Short name used in metadata.
    const NAME: &'static str;

    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;

    fn abs(self) -> Self {
        if self < Self::ZERO {
            -self
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    const NAME: &'static str = "f64";

    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn sqrt(self) -> Self {
        libm::sqrt(self)
    }
    #[inline]
    fn abs(self) -> Self {
        libm::fabs(self)
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, libm::fma(a, b, -p))
}

impl Dd {
    pub const PI: Dd = Dd::from_parts(core::f64::consts::PI, 1.2246467991473532e-16);
    pub const LN2: Dd = Dd::from_parts(core::f64::consts::LN_2, 2.3190468138462996e-17);

    /// Build from an already normalized pair.
    pub const fn from_parts(hi: f64, lo: f64) -> Self {
        Self { hi, lo }
    }

    pub const fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn from_i64(n: i64) -> Self {
        // i64 values beyond 2^53 need two doubles.
        let hi = n as f64;
        let lo = (n - hi as i64) as f64;
        let (hi, lo) = quick_two_sum(hi, lo);
        Self { hi, lo }
    }

    /// Exact ratio `num / den` rounded to double-double.
    pub fn from_ratio(num: i64, den: i64) -> Self {
        Dd::from_i64(num) / Dd::from_i64(den)
    }

    #[inline]
    pub fn hi(self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    /// Multiply by `2^e` exactly.
    pub fn ldexp(self, e: i32) -> Self {
        Self { hi: libm::ldexp(self.hi, e), lo: libm::ldexp(self.lo, e) }
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 { Dd::default() } else { Dd::from_f64(f64::NAN) };
        }
        let s = libm::sqrt(self.hi);
        let s_dd = Dd::from_f64(s);
        // One Newton step in double-double: s + (x - s^2) / (2 s).
        let resid = self - s_dd * s_dd;
        s_dd + Dd::from_f64(resid.hi / (2.0 * s))
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::default();
        }
        let m = libm::round(self.hi / Dd::LN2.hi);
        let r = self - Dd::LN2.mul_f64(m);
        // Scale down so that the Taylor series converges after a few terms,
        // then undo the scaling through (e^r - 1)(e^r + 1) = e^{2r} - 1.
        const SQUARINGS: i32 = 10;
        let r = r.ldexp(-SQUARINGS);
        let mut term = r;
        let mut s = r;
        for n in 2..=12 {
            term = term * r / Dd::from_f64(n as f64);
            s += term;
            if libm::fabs(term.hi) < 1e-36 {
                break;
            }
        }
        for _ in 0..SQUARINGS {
            s = s * (s + Dd::from_f64(2.0));
        }
        (s + Dd::from_f64(1.0)).ldexp(m as i32)
    }

    pub fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::from_f64(f64::NAN);
        }
        // Newton on exp(y) = x, twice from a double seed.
        let mut y = Dd::from_f64(libm::log(self.hi));
        for _ in 0..2 {
            y = y + self * (-y).exp() - Dd::from_f64(1.0);
        }
        y
    }

    /// Decimal rendering with `digits` significant digits (truncated, not rounded).
    pub fn to_decimal(self, digits: usize) -> alloc::string::String {
        use alloc::string::String;
        use core::fmt::Write;
        let mut out = String::new();
        if !self.is_finite() {
            let _ = write!(out, "{}", self.to_f64());
            return out;
        }
        let mut x = self;
        if x.hi < 0.0 {
            out.push('-');
            x = -x;
        }
        if x.hi == 0.0 {
            out.push('0');
            return out;
        }
        let mut exp10 = libm::floor(libm::log10(x.hi)) as i32;
        x = x / pow10(exp10);
        if x.hi >= 10.0 {
            x = x / Dd::from_f64(10.0);
            exp10 += 1;
        } else if x.hi < 1.0 {
            x *= Dd::from_f64(10.0);
            exp10 -= 1;
        }
        for i in 0..digits {
            let mut d = libm::floor(x.hi) as i64;
            // Correct digits of the form 0.999...: the low part can push below.
            if (x - Dd::from_f64(d as f64)).hi < 0.0 {
                d -= 1;
            }
            let d = d.clamp(0, 9);
            out.push(char::from(b'0' + d as u8));
            if i == 0 {
                out.push('.');
            }
            x = (x - Dd::from_f64(d as f64)) * Dd::from_f64(10.0);
        }
        let _ = write!(out, "e{}", exp10);
        out
    }
}

fn pow10(e: i32) -> Dd {
    let mut result = Dd::from_f64(1.0);
    let mut base = Dd::from_f64(10.0);
    let mut n = e.unsigned_abs();
    while n > 0 {
        if n & 1 == 1 {
            result *= base;
        }
        base = base * base;
        n >>= 1;
    }
    if e < 0 {
        Dd::from_f64(1.0) / result
    } else {
        result
    }
}

impl fmt::Debug for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dd({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal(f.precision().unwrap_or(32)))
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            ord => Some(ord),
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

impl AddAssign for Dd {
    fn add_assign(&mut self, b: Dd) {
        *self = *self + b;
    }
}

impl SubAssign for Dd {
    fn sub_assign(&mut self, b: Dd) {
        *self = *self - b;
    }
}

impl MulAssign for Dd {
    fn mul_assign(&mut self, b: Dd) {
        *self = *self * b;
    }
}

impl Scalar for Dd {
    const ZERO: Self = Dd { hi: 0.0, lo: 0.0 };
    const ONE: Self = Dd { hi: 1.0, lo: 0.0 };
    const NAME: &'static str = "double-double";

    fn from_f64(x: f64) -> Self {
        Dd::from_f64(x)
    }
    fn to_f64(self) -> f64 {
        Dd::to_f64(self)
    }
    fn sqrt(self) -> Self {
        Dd::sqrt(self)
    }
}
