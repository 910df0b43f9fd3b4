//! Scalars the filter can carry probabilities in.

use crate::rational::{self, Rational};
use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_traits::{One, ToPrimitive, Zero};
use std::cell::RefCell;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

pub trait Weight:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    fn from_ratio(r: &Rational) -> Self;

    /// `1 / (1 + exp(-steepness * (x - 1/2)))`, or `None` if the scalar
    /// cannot represent it.
    fn logistic(steepness: f64, x: &Rational) -> Option<Self>;

    fn to_f64(&self) -> f64;

    /// Whether arithmetic on this scalar is exact.
    fn is_exact() -> bool;

    /// Rendering used in traces: `n/d` for exact scalars, decimal otherwise.
    fn to_trace_string(&self) -> String;
}

impl Weight for Rational {
    fn from_ratio(r: &Rational) -> Self {
        r.clone()
    }

    fn logistic(_: f64, _: &Rational) -> Option<Self> {
        None
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_exact() -> bool {
        true
    }

    fn to_trace_string(&self) -> String {
        rational::format(self)
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn centred(x: &Rational) -> f64 {
    ToPrimitive::to_f64(&(x - rational::half())).unwrap_or(f64::NAN)
}

impl Weight for f64 {
    fn from_ratio(r: &Rational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn logistic(steepness: f64, x: &Rational) -> Option<Self> {
        Some(sigmoid(steepness * centred(x)))
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn is_exact() -> bool {
        false
    }

    fn to_trace_string(&self) -> String {
        format!("{self:e}")
    }
}

impl Weight for f32 {
    fn from_ratio(r: &Rational) -> Self {
        ToPrimitive::to_f32(r).unwrap_or(f32::NAN)
    }

    fn logistic(steepness: f64, x: &Rational) -> Option<Self> {
        Some(sigmoid(steepness * centred(x)) as f32)
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }

    fn is_exact() -> bool {
        false
    }

    fn to_trace_string(&self) -> String {
        format!("{self:e}")
    }
}

/// Precision of [`Wide`], in bits.
pub const WIDE_PRECISION: usize = 1024;
const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constants"));
}

/// A 1024-bit binary float. Useful in soft mode, where `f64` rounds
/// `sigmoid(z)` to exactly 1 once `z` exceeds about 37.
#[derive(Clone, Debug, PartialEq, PartialOrd)]
pub struct Wide(BigFloat);

impl Wide {
    pub fn inner(&self) -> &BigFloat {
        &self.0
    }

    fn from_str_dec(s: &str) -> Self {
        Wide(CONSTS.with(|cc| BigFloat::parse(s, Radix::Dec, WIDE_PRECISION, RM, &mut cc.borrow_mut())))
    }
}

impl Add for Wide {
    type Output = Wide;
    fn add(self, rhs: Wide) -> Wide {
        Wide(self.0.add(&rhs.0, WIDE_PRECISION, RM))
    }
}

impl Sub for Wide {
    type Output = Wide;
    fn sub(self, rhs: Wide) -> Wide {
        Wide(self.0.sub(&rhs.0, WIDE_PRECISION, RM))
    }
}

impl Mul for Wide {
    type Output = Wide;
    fn mul(self, rhs: Wide) -> Wide {
        Wide(self.0.mul(&rhs.0, WIDE_PRECISION, RM))
    }
}

impl Div for Wide {
    type Output = Wide;
    fn div(self, rhs: Wide) -> Wide {
        Wide(self.0.div(&rhs.0, WIDE_PRECISION, RM))
    }
}

impl Zero for Wide {
    fn zero() -> Self {
        Wide(BigFloat::from_word(0, WIDE_PRECISION))
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl One for Wide {
    fn one() -> Self {
        Wide(BigFloat::from_word(1, WIDE_PRECISION))
    }
}

impl Weight for Wide {
    fn from_ratio(r: &Rational) -> Self {
        Wide::from_str_dec(&r.numer().to_string()) / Wide::from_str_dec(&r.denom().to_string())
    }

    fn logistic(steepness: f64, x: &Rational) -> Option<Self> {
        let z = Wide::from_ratio(&(x - rational::half())) * Wide(BigFloat::from_f64(steepness, WIDE_PRECISION));
        let e = CONSTS.with(|cc| z.0.neg().exp(WIDE_PRECISION, RM, &mut cc.borrow_mut()));
        Some(Wide::one() / (Wide::one() + Wide(e)))
    }

    fn to_f64(&self) -> f64 {
        self.0.to_string().parse().unwrap_or(f64::NAN)
    }

    fn is_exact() -> bool {
        false
    }

    fn to_trace_string(&self) -> String {
        self.0.to_string()
    }
}
