//! Binary stacks stored as a single exact rational.
//!
//! A word `w1 w2 .. wn` (w1 on top) is stored as `q = sum (2 wi + 1) / 4^i`.
//! The empty stack is `0`; every other stack lies in `[1/4, 1)`, with a top
//! bit of 1 exactly when `q >= 3/4`. Reading the top and testing for
//! emptiness are both thresholds of an affine function of `q`, and push/pop
//! are affine maps, so the whole stack discipline is linear plus a step
//! function.

use crate::rational::{ratio, Rational};
use num_bigint::{BigInt, Sign};
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodecError {
    #[error("{0} is not a valid stack encoding")]
    InvalidEncoding(String),
    #[error("threshold evaluated exactly at 1/2")]
    ThresholdAmbiguous,
    #[error("stack is empty")]
    EmptyStack,
    #[error("pop with top {given} but the stack top is {actual}")]
    TopMismatch { given: u8, actual: u8 },
    #[error("invalid bit string {0:?}")]
    InvalidBitString(String),
}

/// A finite binary word, index 0 is the top of the stack.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn top(&self) -> Option<bool> {
        self.0.first().copied()
    }

    pub fn push(&mut self, bit: bool) {
        self.0.insert(0, bit);
    }

    pub fn pop(&mut self) -> Option<bool> {
        if self.0.is_empty() {
            None
        } else {
            Some(self.0.remove(0))
        }
    }

    /// Drops trailing zeros at the bottom of the word.
    pub fn trim_bottom_zeros(&self) -> BitString {
        let mut bits = self.0.clone();
        while bits.last() == Some(&false) {
            bits.pop();
        }
        BitString(bits)
    }

    /// All words of exactly `len` bits, in lexicographic order.
    pub fn all_of_len(len: usize) -> impl Iterator<Item = BitString> {
        (0u64..(1u64 << len)).map(move |n| {
            BitString((0..len).map(|i| (n >> (len - 1 - i)) & 1 == 1).collect())
        })
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(CodecError::InvalidBitString(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitString)
    }
}

impl Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// Step function centred at 1/2: `1` above, `0` below.
///
/// Callers pass the already shifted argument (`4q - 2` for the top bit,
/// `4q` for the emptiness test).
pub fn heaviside(x: &Rational) -> Result<bool, CodecError> {
    let half = ratio(1, 2);
    match x.cmp(&half) {
        std::cmp::Ordering::Greater => Ok(true),
        std::cmp::Ordering::Less => Ok(false),
        std::cmp::Ordering::Equal => Err(CodecError::ThresholdAmbiguous),
    }
}

/// Affine argument fed to the step function when reading the top bit.
pub fn top_argument(q: &Rational) -> Rational {
    Rational::new(q.numer() * 4 - q.denom() * 2, q.denom().clone())
}

/// Affine argument fed to the step function when testing for emptiness.
pub fn empty_argument(q: &Rational) -> Rational {
    Rational::new(q.numer() * 4, q.denom().clone())
}

/// A validated stack encoding.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StackValue(Rational);

impl StackValue {
    pub fn empty() -> Self {
        StackValue(Rational::zero())
    }

    pub fn encode(word: &BitString) -> Self {
        // numerator in base 4 has digit 2b+1 per bit, top first; it is odd,
        // so the fraction over 4^depth is already reduced
        let mut n = BigInt::zero();
        for &b in word.bits() {
            n = (n << 2u32) + BigInt::from(2 * b as u8 + 1);
        }
        if word.is_empty() {
            return StackValue(Rational::zero());
        }
        StackValue(Rational::new_raw(n, BigInt::one() << (2 * word.len())))
    }

    pub fn as_rational(&self) -> &Rational {
        &self.0
    }

    pub fn into_rational(self) -> Rational {
        self.0
    }

    /// Number of bits on the stack; the reduced denominator is `4^depth`.
    pub fn depth(&self) -> usize {
        depth_from_denominator(self.0.denom()).expect("validated encoding")
    }

    /// Recovers the word by repeated top/pop.
    pub fn decode(&self) -> BitString {
        decode_rational(&self.0).expect("validated encoding")
    }

    pub fn top(&self) -> Result<bool, CodecError> {
        if self.0.is_zero() {
            return Err(CodecError::EmptyStack);
        }
        heaviside(&top_argument(&self.0))
    }

    pub fn is_empty(&self) -> bool {
        // 1 - H(4q); 4q is never exactly 1/2 for a valid encoding.
        !heaviside(&empty_argument(&self.0)).expect("4q avoids 1/2 on valid encodings")
    }

    pub fn push(&self, bit: bool) -> StackValue {
        StackValue(push_rational(&self.0, bit))
    }

    pub fn pop(&self, top: bool) -> Result<StackValue, CodecError> {
        let actual = self.top()?;
        if actual != top {
            return Err(CodecError::TopMismatch {
                given: top as u8,
                actual: actual as u8,
            });
        }
        Ok(StackValue(pop_rational(&self.0, top)))
    }
}

impl TryFrom<Rational> for StackValue {
    type Error = CodecError;

    fn try_from(q: Rational) -> Result<Self, Self::Error> {
        decode_rational(&q)?;
        Ok(StackValue(q))
    }
}

impl fmt::Display for StackValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::rational::format(&self.0))
    }
}

/// `q/4 + (2b+1)/4`
pub fn push_rational(q: &Rational, bit: bool) -> Rational {
    Rational::new(q.numer() + q.denom() * (2 * bit as u8 + 1), q.denom() * 4)
}

/// `4q - (2b+1)`
pub fn pop_rational(q: &Rational, top: bool) -> Rational {
    Rational::new(q.numer() * 4 - q.denom() * (2 * top as u8 + 1), q.denom().clone())
}

fn depth_from_denominator(d: &BigInt) -> Option<usize> {
    let zeros = d.trailing_zeros().unwrap_or(0) as usize;
    if !zeros.is_multiple_of(2) || (d >> zeros) != BigInt::one() {
        return None;
    }
    Some(zeros / 2)
}

/// Decodes an arbitrary rational, rejecting anything that is not the image
/// of a finite word. The reduced denominator fixes the depth; the numerator's
/// base-4 digits are then the pushed symbols `2b + 1`, top first.
pub fn decode_rational(q: &Rational) -> Result<BitString, CodecError> {
    let invalid = || CodecError::InvalidEncoding(crate::rational::format(q));
    let depth = depth_from_denominator(q.denom()).ok_or_else(invalid)?;
    if q.numer().sign() == Sign::Minus {
        return Err(invalid());
    }
    let mut n = q.numer().clone();
    let mut bits = vec![false; depth];
    for slot in bits.iter_mut().rev() {
        let digit = (&n & BigInt::from(3u8)).to_u8().expect("two bits");
        match digit {
            1 => *slot = false,
            3 => *slot = true,
            _ => return Err(invalid()),
        }
        n >>= 2u32;
    }
    if !n.is_zero() {
        return Err(invalid());
    }
    Ok(BitString(bits))
}
