//! High-precision construction of the coefficient family.
//!
//! `β_N = ⌊10^{N²} ln ln 2⌋ 10^{-N²}` is held exactly as an integer numerator
//! over a power of ten. `α_N = 2(2^{-N} e^{N e^{β_N}} - 1)` is evaluated with
//! at least `N² + 60` significant digits, since the subtraction inside
//! cancels roughly `N²` of them.

use std::str::FromStr;

use dashu_float::DBig;
use dashu_int::IBig;

/// Extra significant digits carried beyond the `N²` lost to cancellation.
const GUARD_DIGITS: usize = 60;
/// Significant digits kept in the decimal rendering of `α_N`.
pub const ALPHA_DIGITS: usize = 50;

pub(crate) fn working_digits(order: u32) -> usize {
    (order * order) as usize + GUARD_DIGITS
}

/// `ln ln 2` to `digits` significant digits.
pub fn ln_ln_2(digits: usize) -> DBig {
    DBig::from(2).with_precision(digits).value().ln().ln()
}

/// The exact rational `numerator / 10^{order²}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactBeta {
    pub order: u32,
    pub numerator: IBig,
}

impl ExactBeta {
    pub fn for_order(order: u32) -> Self {
        let digits = working_digits(order);
        let scaled = ln_ln_2(digits) * DBig::from_parts(IBig::ONE, (order * order) as isize);
        // DBig::floor rounds toward -∞, which is what ⌊·⌋ needs for a negative value.
        let numerator = scaled.floor().to_int().value();
        ExactBeta { order, numerator }
    }

    pub fn den_exp(&self) -> u32 {
        self.order * self.order
    }

    pub fn to_dbig(&self, digits: usize) -> DBig {
        DBig::from_parts(self.numerator.clone(), -(self.den_exp() as isize))
            .with_precision(digits)
            .value()
    }

    pub fn to_f64(&self) -> f64 {
        self.to_dbig(40).to_f64().value()
    }

    /// `e^{β}` evaluated in high precision, then rounded.
    pub fn exp_dbig(&self, digits: usize) -> DBig {
        self.to_dbig(digits).exp()
    }

    pub fn exp_f64(&self) -> f64 {
        self.exp_dbig(working_digits(self.order)).to_f64().value()
    }

    /// `α = 2(2^{-N} e^{N e^{β}} - 1)` at working precision.
    pub fn alpha(&self) -> DBig {
        let digits = working_digits(self.order);
        let n = DBig::from(self.order).with_precision(digits).value();
        let inner = (n * self.exp_dbig(digits)).exp();
        let scale = DBig::from(2)
            .with_precision(digits)
            .value()
            .powi(IBig::from(self.order));
        DBig::from(2) * (inner / scale - DBig::ONE)
    }
}

/// Decimal rendering with `ALPHA_DIGITS` significant digits.
pub fn render_decimal(value: &DBig) -> String {
    value
        .clone()
        .with_precision(ALPHA_DIGITS)
        .value()
        .to_string()
}

pub fn parse_decimal(text: &str) -> Option<f64> {
    DBig::from_str(text.trim()).ok().map(|v| v.to_f64().value())
}
