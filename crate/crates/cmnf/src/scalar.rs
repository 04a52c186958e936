//! Exact and high-precision scalars: big rationals, the field Q(sqrt 17),
//! binary floats of explicit precision, and the coefficient trait shared by
//! the series code.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_bigint::{BigInt, Sign};
use num_complex::Complex;
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use astro_float::BigFloat as Float;

/// Default working precision for [`FloatCtx`].
pub const DEFAULT_BITS: usize = 256;

const RM: RoundingMode = RoundingMode::ToEven;

pub fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

pub fn int(p: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(p))
}

/// Renders a rational as `"p/q"`.
pub fn rational_to_string(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses `"p/q"`, `"p"` or a finite decimal such as `"-1.25e-3"` exactly.
pub fn parse_rational(s: &str) -> Result<BigRational, Error> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(p, q));
    }
    if let Ok(p) = s.parse::<BigInt>() {
        return Ok(BigRational::from_integer(p));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(k) => (&s[..k], s[k + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
    if ip.is_empty() && fp.is_empty() {
        return Err(bad());
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{ip}{fp}0").parse().map_err(|_| bad())?;
    let scale = exp - fp.len() as i32 - 1;
    let ten = BigInt::from(10);
    let mut x = BigRational::from_integer(digits);
    if scale >= 0 {
        x *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        x /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -x } else { x })
}

/// Exact square root of a nonnegative rational, if it exists.
pub fn rational_sqrt(x: &BigRational) -> Option<BigRational> {
    if x.is_negative() {
        return None;
    }
    let n = x.numer().sqrt();
    let d = x.denom().sqrt();
    if &(&n * &n) == x.numer() && &(&d * &d) == x.denom() {
        Some(BigRational::new(n, d))
    } else {
        None
    }
}

/// Whether coefficients are exact rationals or doubles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Float => "float",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "exact" => Ok(Mode::Exact),
            "float" => Ok(Mode::Float),
            _ => Err(Error::Parse(format!("unknown mode {s:?}"))),
        }
    }
}

/// Real coefficient field: `BigRational` for exact work, `f64` otherwise.
pub trait Real: Clone + fmt::Debug + PartialEq + Send + Sync + 'static + Signed + PartialOrd {
    const MODE: Mode;
    fn from_rational(x: &BigRational) -> Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn from_i64(x: i64) -> Self {
        Self::from_rational(&int(x))
    }
    /// Square root if it exists in the field (always for `f64`, x >= 0).
    fn try_sqrt(&self) -> Option<Self>;
    /// Exact zero test in exact mode, `|x| <= tol` otherwise.
    fn near_zero(&self, tol: f64) -> bool;
    fn to_text(&self) -> String;
    fn from_text(s: &str) -> Result<Self, Error>;
}

impl Real for BigRational {
    const MODE: Mode = Mode::Exact;
    fn from_rational(x: &BigRational) -> Self {
        x.clone()
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite float")
    }
    fn to_f64(&self) -> f64 {
        ratio_to_f64(self)
    }
    fn try_sqrt(&self) -> Option<Self> {
        rational_sqrt(self)
    }
    fn near_zero(&self, _tol: f64) -> bool {
        self.is_zero()
    }
    fn to_text(&self) -> String {
        rational_to_string(self)
    }
    fn from_text(s: &str) -> Result<Self, Error> {
        parse_rational(s)
    }
}

impl Real for f64 {
    const MODE: Mode = Mode::Float;
    fn from_rational(x: &BigRational) -> Self {
        ratio_to_f64(x)
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn try_sqrt(&self) -> Option<Self> {
        (*self >= 0.0).then(|| self.sqrt())
    }
    fn near_zero(&self, tol: f64) -> bool {
        self.abs() <= tol
    }
    fn to_text(&self) -> String {
        format!("{self:e}")
    }
    fn from_text(s: &str) -> Result<Self, Error> {
        if s.contains('/') {
            return Ok(ratio_to_f64(&parse_rational(s)?));
        }
        s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("not a float: {s:?}")))
    }
}

/// Correctly scaled conversion that survives numerators and denominators far
/// outside the `f64` range.
pub fn ratio_to_f64(x: &BigRational) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let nb = x.numer().bits() as i64;
    let db = x.denom().bits() as i64;
    let shift = nb - db - 60;
    let (n, d) = if shift > 0 {
        (x.numer().clone(), x.denom() << shift as usize)
    } else {
        (x.numer() << (-shift) as usize, x.denom().clone())
    };
    let q = (n / d).to_f64().unwrap_or(f64::NAN);
    q * 2f64.powi(shift.clamp(-1100, 1100) as i32)
}

pub type Cx<S> = Complex<S>;

pub fn cx<S: Real>(re: S, im: S) -> Cx<S> {
    Complex::new(re, im)
}

pub fn cx_real<S: Real>(re: S) -> Cx<S> {
    Complex::new(re, S::zero())
}

pub fn cx_to_f64<S: Real>(z: &Cx<S>) -> Complex<f64> {
    Complex::new(z.re.to_f64(), z.im.to_f64())
}

pub fn cx_from_f64<S: Real>(z: Complex<f64>) -> Cx<S> {
    Complex::new(S::from_f64(z.re), S::from_f64(z.im))
}

// ---------------------------------------------------------------------------
// Q(sqrt 17)

/// The number `a + b*sqrt(17)` with rational `a`, `b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadExt {
    pub a: BigRational,
    pub b: BigRational,
}

impl QuadExt {
    pub fn new(a: BigRational, b: BigRational) -> Self {
        QuadExt { a, b }
    }

    pub fn from_rational(a: BigRational) -> Self {
        QuadExt { a, b: BigRational::zero() }
    }

    pub fn from_int(a: i64) -> Self {
        Self::from_rational(int(a))
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn sqrt17() -> Self {
        QuadExt { a: BigRational::zero(), b: BigRational::one() }
    }

    /// Smaller root of `x^2 - 3x - 2`.
    pub fn lambda1() -> Self {
        QuadExt { a: rat(3, 2), b: rat(-1, 2) }
    }

    /// Larger root of `x^2 - 3x - 2`.
    pub fn lambda2() -> Self {
        QuadExt { a: rat(3, 2), b: rat(1, 2) }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn conj(&self) -> Self {
        QuadExt { a: self.a.clone(), b: -self.b.clone() }
    }

    /// Field norm `a^2 - 17 b^2`.
    pub fn norm(&self) -> BigRational {
        &self.a * &self.a - int(17) * &self.b * &self.b
    }

    /// Exact sign, decided by comparing `a^2` with `17 b^2`.
    pub fn signum(&self) -> i32 {
        let sa = sign_of(&self.a);
        let sb = sign_of(&self.b);
        if sa == sb || sb == 0 {
            return sa;
        }
        if sa == 0 {
            return sb;
        }
        // opposite signs: the larger magnitude wins
        match (&self.a * &self.a).cmp(&(int(17) * &self.b * &self.b)) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => unreachable!("sqrt(17) is irrational"),
        }
    }

    pub fn checked_div(&self, other: &QuadExt) -> Result<QuadExt, Error> {
        if other.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let n = other.norm();
        let num = self * &other.conj();
        Ok(QuadExt { a: num.a / &n, b: num.b / n })
    }

    pub fn inv(&self) -> Result<QuadExt, Error> {
        QuadExt::one().checked_div(self)
    }

    pub fn pow(&self, mut e: u32) -> QuadExt {
        let mut base = self.clone();
        let mut acc = QuadExt::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    pub fn to_float(&self, ctx: &FloatCtx) -> BigFloat {
        let a = ctx.from_rational(&self.a);
        let b = ctx.from_rational(&self.b);
        ctx.add(&a, &ctx.mul(&b, &ctx.sqrt(&ctx.from_u64(17))))
    }

    pub fn to_f64(&self) -> f64 {
        let ctx = FloatCtx::new(128);
        FloatCtx::to_f64(&self.to_float(&ctx))
    }
}

fn sign_of(x: &BigRational) -> i32 {
    match x.numer().sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

impl PartialOrd for QuadExt {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some((self - other).signum().cmp(&0))
    }
}

impl fmt::Display for QuadExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}*sqrt17", self.a, self.b)
    }
}

macro_rules! quad_binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl<'a> $tr<&'a QuadExt> for &'a QuadExt {
            type Output = QuadExt;
            fn $m(self, y: &'a QuadExt) -> QuadExt {
                let f: fn(&QuadExt, &QuadExt) -> QuadExt = $body;
                f(self, y)
            }
        }
        impl $tr<QuadExt> for QuadExt {
            type Output = QuadExt;
            fn $m(self, y: QuadExt) -> QuadExt {
                (&self).$m(&y)
            }
        }
    };
}

quad_binop!(Add, add, |x, y| QuadExt { a: &x.a + &y.a, b: &x.b + &y.b });
quad_binop!(Sub, sub, |x, y| QuadExt { a: &x.a - &y.a, b: &x.b - &y.b });
quad_binop!(Mul, mul, |x, y| QuadExt { a: &x.a * &y.a + int(17) * &x.b * &y.b, b: &x.a * &y.b + &x.b * &y.a });

impl Div for QuadExt {
    type Output = QuadExt;
    /// Panics on a zero divisor; use [`QuadExt::checked_div`] to get an error.
    fn div(self, y: QuadExt) -> QuadExt {
        self.checked_div(&y).expect("division by zero in Q(sqrt17)")
    }
}

impl Neg for QuadExt {
    type Output = QuadExt;
    fn neg(self) -> QuadExt {
        QuadExt { a: -self.a, b: -self.b }
    }
}

/// Arithmetic operator selector used by the CLI and tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadOp {
    Add,
    Sub,
    Mul,
    Div,
}

pub fn quadext_arith(x: &QuadExt, y: &QuadExt, op: QuadOp) -> Result<QuadExt, Error> {
    Ok(match op {
        QuadOp::Add => x + y,
        QuadOp::Sub => x - y,
        QuadOp::Mul => x * y,
        QuadOp::Div => x.checked_div(y)?,
    })
}

pub fn quadext_to_float(x: &QuadExt, bits: usize) -> Result<BigFloat, Error> {
    if bits < 64 {
        return Err(Error::Precondition(format!("precision {bits} < 64 bits")));
    }
    Ok(x.to_float(&FloatCtx::new(bits)))
}

#[derive(Serialize, Deserialize)]
struct QuadExtJson {
    a: String,
    b: String,
}

impl Serialize for QuadExt {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        QuadExtJson { a: rational_to_string(&self.a), b: rational_to_string(&self.b) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for QuadExt {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = QuadExtJson::deserialize(d)?;
        let a = parse_rational(&j.a).map_err(serde::de::Error::custom)?;
        let b = parse_rational(&j.b).map_err(serde::de::Error::custom)?;
        Ok(QuadExt { a, b })
    }
}

// ---------------------------------------------------------------------------
// continued fraction of sqrt 17

/// Convergents `p/q` of the continued fraction of `sqrt(17)` with `q <= q_max`.
pub fn sqrt17_convergents(q_max: &BigInt) -> Vec<(BigInt, BigInt)> {
    sqrt_convergents(17, q_max)
}

/// Convergents of `sqrt(n)` for a non-square `n`, by the standard
/// `(m, d, a)` recurrence for quadratic surds.
pub fn sqrt_convergents(n: u64, q_max: &BigInt) -> Vec<(BigInt, BigInt)> {
    let a0 = n.sqrt();
    assert!(a0 * a0 != n, "n must not be a perfect square");
    let (mut m, mut d, mut a) = (0u64, 1u64, a0);
    let (mut p_prev, mut p) = (BigInt::one(), BigInt::from(a0));
    let (mut q_prev, mut q) = (BigInt::zero(), BigInt::one());
    let mut out = Vec::new();
    while &q <= q_max {
        out.push((p.clone(), q.clone()));
        m = d * a - m;
        d = (n - m * m) / d;
        a = (a0 + m) / d;
        let ab = BigInt::from(a);
        let p_next = &ab * &p + &p_prev;
        let q_next = &ab * &q + &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
    }
    out
}

/// Exact test of `|sqrt17 - p/q| > 2/(17 q^2)` in Q(sqrt 17), as
/// `(17q)^2 (p - q sqrt17)^2 - 4 > 0`.
pub fn liouville_holds(p: &BigInt, q: &BigInt) -> bool {
    assert!(q.is_positive());
    let diff = QuadExt::new(BigRational::from_integer(p.clone()), BigRational::from_integer(-q));
    let k = BigRational::from_integer(BigInt::from(17) * q);
    let lhs = &(&diff * &diff) * &QuadExt::from_rational(&k * &k);
    (lhs - QuadExt::from_int(4)).signum() > 0
}

/// Same inequality in `i128` integer arithmetic, for bulk scans with small `p, q`.
pub fn liouville_holds_small(p: i64, q: i64) -> bool {
    assert!(q > 0);
    let (p, q) = (p as i128, q as i128);
    let d = p * p - 17 * q * q;
    if p <= 0 {
        // |q sqrt17 - p| >= q sqrt17 > 4q >= 2/(17q)
        return true;
    }
    // |q sqrt17 - p| = |d| / (q sqrt17 + p); need 17 q |d| - 2p > 2 q sqrt17
    let lhs = 17 * q * d.abs() - 2 * p;
    lhs > 0 && lhs * lhs > 68 * q * q
}

// ---------------------------------------------------------------------------
// binary floating point with explicit precision

/// Precision context for [`BigFloat`] computations; round-to-nearest-even.
pub struct FloatCtx {
    bits: usize,
    consts: RefCell<Consts>,
}

impl FloatCtx {
    pub fn new(bits: usize) -> Self {
        FloatCtx { bits, consts: RefCell::new(Consts::new().expect("constant cache")) }
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn from_u64(&self, x: u64) -> BigFloat {
        BigFloat::from_u64(x, self.bits)
    }

    pub fn from_i64(&self, x: i64) -> BigFloat {
        BigFloat::from_i64(x, self.bits)
    }

    pub fn from_f64(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.bits)
    }

    pub fn from_int(&self, x: &BigInt) -> BigFloat {
        let (sign, words) = x.to_u64_digits();
        let mut acc = BigFloat::from_u64(0, self.bits);
        let base = BigFloat::from_u64(1 << 32, self.bits);
        let base = base.mul(&base, self.bits, RM);
        for w in words.iter().rev() {
            acc = acc.mul(&base, self.bits, RM).add(&BigFloat::from_u64(*w, self.bits), self.bits, RM);
        }
        if sign == Sign::Minus {
            acc.neg()
        } else {
            acc
        }
    }

    pub fn from_rational(&self, x: &BigRational) -> BigFloat {
        self.div(&self.from_int(x.numer()), &self.from_int(x.denom()))
    }

    pub fn add(&self, x: &BigFloat, y: &BigFloat) -> BigFloat {
        x.add(y, self.bits, RM)
    }

    pub fn sub(&self, x: &BigFloat, y: &BigFloat) -> BigFloat {
        x.sub(y, self.bits, RM)
    }

    pub fn mul(&self, x: &BigFloat, y: &BigFloat) -> BigFloat {
        x.mul(y, self.bits, RM)
    }

    pub fn div(&self, x: &BigFloat, y: &BigFloat) -> BigFloat {
        x.div(y, self.bits, RM)
    }

    pub fn sqrt(&self, x: &BigFloat) -> BigFloat {
        x.sqrt(self.bits, RM)
    }

    pub fn powi(&self, x: &BigFloat, n: usize) -> BigFloat {
        x.powi(n, self.bits, RM)
    }

    pub fn pow(&self, x: &BigFloat, y: &BigFloat) -> BigFloat {
        x.pow(y, self.bits, RM, &mut self.consts.borrow_mut())
    }

    pub fn ln(&self, x: &BigFloat) -> BigFloat {
        x.ln(self.bits, RM, &mut self.consts.borrow_mut())
    }

    pub fn abs(&self, x: &BigFloat) -> BigFloat {
        x.abs()
    }

    pub fn lt(x: &BigFloat, y: &BigFloat) -> bool {
        x.cmp(y).is_some_and(|c| c < 0)
    }

    pub fn le(x: &BigFloat, y: &BigFloat) -> bool {
        x.cmp(y).is_some_and(|c| c <= 0)
    }

    pub fn to_f64(x: &BigFloat) -> f64 {
        if x.is_zero() {
            return 0.0;
        }
        let mut cc = Consts::new().expect("constant cache");
        x.format(Radix::Dec, RM, &mut cc).ok().and_then(|s| s.parse::<f64>().ok()).unwrap_or(f64::NAN)
    }

    /// Decimal rendering with the context's full precision.
    pub fn to_string(&self, x: &BigFloat) -> String {
        x.format(Radix::Dec, RM, &mut self.consts.borrow_mut()).unwrap_or_else(|_| "NaN".into())
    }
}
