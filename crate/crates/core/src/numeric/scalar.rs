//! The two scalar modes used throughout the crate.
//!
//! Exact mode is backed by arbitrary-precision rationals, float mode by `f64`.
//! A whole analysis runs in one mode: every generic type in the crate is
//! parameterised by a single [`Scalar`] implementation, so mixing modes is a
//! type error rather than a runtime condition.

use std::fmt::{self, Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use super::linalg;
use super::lp;
use super::matrix::Matrix;
use super::NumericError;

pub type Rational = BigRational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Exact => f.write_str("exact"),
            Mode::Float => f.write_str("float"),
        }
    }
}

/// Field element usable by every kernel in the crate.
///
/// The kernel entry points (`kernel`, `lp_feasible_nonzero`) are trait
/// methods so that each mode gets its own algorithm: exact row reduction and
/// an exact simplex for rationals, Jacobi SVD for floats.
pub trait Scalar: Clone + Debug + PartialEq + PartialOrd + Signed + Send + Sync + 'static {
    const MODE: Mode;

    fn from_i64(v: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    /// Float to scalar; exact for rationals (binary expansion of the double).
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;

    /// `true` when `self` is zero relative to `scale`. Tolerance-free in exact mode.
    fn is_negligible(&self, scale: &Self, rel_tol: f64) -> bool;

    /// Rank and a column basis of the kernel of `m`.
    fn kernel(m: &Matrix<Self>, rel_tol: f64) -> (usize, Matrix<Self>);

    /// Nonzero solution of a homogeneous cone system, see [`lp::feasible_nonzero`].
    fn lp_feasible_nonzero(
        inequalities: &Matrix<Self>,
        equalities: &Matrix<Self>,
    ) -> Result<Option<Vec<Self>>, NumericError>;

    /// Convex weights `w >= 0`, `sum w = 1` with `sum w_i g_i = target`.
    fn convex_weights(
        generators: &[Vec<Self>],
        target: &[Self],
    ) -> Result<Option<Vec<Self>>, NumericError>;

    /// JSON rendering: numbers in float mode; integers or `"p/q"` strings in exact mode.
    fn to_json(&self) -> serde_json::Value;
}

impl Scalar for f64 {
    const MODE: Mode = Mode::Float;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_f64(v: f64) -> Self {
        v
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn is_negligible(&self, scale: &Self, rel_tol: f64) -> bool {
        self.abs() <= rel_tol * scale.abs()
    }

    fn kernel(m: &Matrix<Self>, rel_tol: f64) -> (usize, Matrix<Self>) {
        linalg::float_kernel(m, rel_tol)
    }

    fn lp_feasible_nonzero(
        _inequalities: &Matrix<Self>,
        _equalities: &Matrix<Self>,
    ) -> Result<Option<Vec<Self>>, NumericError> {
        Err(NumericError::ExactRequired("linear programming"))
    }

    fn convex_weights(
        _generators: &[Vec<Self>],
        _target: &[Self],
    ) -> Result<Option<Vec<Self>>, NumericError> {
        Err(NumericError::ExactRequired("convex hull membership"))
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Number::from_f64(*self)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null)
    }
}

impl Scalar for Rational {
    const MODE: Mode = Mode::Exact;

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_f64(v: f64) -> Self {
        Rational::from_float(v).unwrap_or_else(Rational::zero)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_negligible(&self, _scale: &Self, _rel_tol: f64) -> bool {
        self.is_zero()
    }

    fn kernel(m: &Matrix<Self>, _rel_tol: f64) -> (usize, Matrix<Self>) {
        linalg::exact_kernel(m)
    }

    fn lp_feasible_nonzero(
        inequalities: &Matrix<Self>,
        equalities: &Matrix<Self>,
    ) -> Result<Option<Vec<Self>>, NumericError> {
        lp::feasible_nonzero(inequalities, equalities)
    }

    fn convex_weights(
        generators: &[Vec<Self>],
        target: &[Self],
    ) -> Result<Option<Vec<Self>>, NumericError> {
        lp::convex_weights(generators, target)
    }

    fn to_json(&self) -> serde_json::Value {
        if self.is_integer() {
            if let Some(v) = ToPrimitive::to_i64(self.numer()) {
                return serde_json::Value::from(v);
            }
        }
        serde_json::Value::String(format_rational(self))
    }
}

/// `"p/q"`, or `"p"` for integers.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse {0:?} as a rational number")]
pub struct ParseRationalError(pub String);

/// Parses integers, fractions (`"-3/2"`), decimals (`"0.9"`) and scientific
/// notation (`"1.5e-3"`) exactly.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(text.to_string());
    let s = text.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| err())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = s[pos + 1..].parse().map_err(|_| err())?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(err());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(BigInt::from_str(&all_digits).map_err(|_| err())?);
    let shift = exponent - frac_part.len() as i32;
    let ten = Rational::from_integer(BigInt::from(10));
    if shift >= 0 {
        value *= num_traits::pow(ten, shift as usize);
    } else {
        value /= num_traits::pow(ten, (-shift) as usize);
    }
    if negative {
        value = -value;
    }
    Ok(value)
}
