//! Exact scalars, finitely supported sequences, and the three norms on `l1`.
//!
//! Every element of `l1` handled by this crate has finite support, so every
//! norm and coordinate sum is a finite rational sum and is computed exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always stored in lowest terms with a
/// positive denominator.
pub type Rat = BigRational;

/// `num / den` as an exact rational. Panics if `den == 0`.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Lossless `"numerator/denominator"` rendering. Integers keep the `/1`.
pub fn ratio_string(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Rat::new(n, d))
            }
        }
        None => s.parse::<BigInt>().ok().map(Rat::from_integer),
    }
}

pub fn max_rat(a: Rat, b: Rat) -> Rat {
    if a >= b {
        a
    } else {
        b
    }
}

pub fn min_rat(a: Rat, b: Rat) -> Rat {
    if a <= b {
        a
    } else {
        b
    }
}

/// A finitely supported rational sequence `(x_1, x_2, ...)`.
///
/// Indices start at 1. Zero entries are never stored, so two vectors are
/// equal exactly when their stored entries are equal.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct SparseVec {
    entries: BTreeMap<usize, Rat>,
}

impl SparseVec {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The `n`-th unit vector `e_n`.
    pub fn unit(n: usize) -> Result<Self> {
        let mut v = Self::zero();
        v.set(n, Rat::from_integer(1.into()))?;
        Ok(v)
    }

    /// Builds `(values[0], values[1], ...)` at indices `1, 2, ...`.
    pub fn from_dense<I>(values: I) -> Self
    where
        I: IntoIterator<Item = Rat>,
    {
        let entries = values
            .into_iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, v)| (i + 1, v))
            .collect();
        Self { entries }
    }

    /// Builds a vector from `(index, value)` pairs; repeated indices add up.
    pub fn from_entries<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, Rat)>,
    {
        let mut v = Self::zero();
        for (i, value) in entries {
            let sum = v.get(i) + value;
            v.set(i, sum)?;
        }
        Ok(v)
    }

    pub fn set(&mut self, index: usize, value: Rat) -> Result<()> {
        if index == 0 {
            return Err(Error::IndexOutOfRange(0));
        }
        if value.is_zero() {
            self.entries.remove(&index);
        } else {
            self.entries.insert(index, value);
        }
        Ok(())
    }

    /// Coordinate `x_index`; absent indices (including 0) read as zero.
    pub fn get(&self, index: usize) -> Rat {
        self.entries.get(&index).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn get_ref(&self, index: usize) -> Option<&Rat> {
        self.entries.get(&index)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Rat)> + '_ {
        self.entries.iter().map(|(&i, v)| (i, v))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    /// Largest index carrying a nonzero value, or 0 for the zero vector.
    pub fn max_index(&self) -> usize {
        self.entries.keys().next_back().copied().unwrap_or(0)
    }

    pub fn contains_index(&self, index: usize) -> bool {
        self.entries.contains_key(&index)
    }

    pub fn scale(&self, factor: &Rat) -> Self {
        if factor.is_zero() {
            return Self::zero();
        }
        let entries = self.entries.iter().map(|(&i, v)| (i, v * factor)).collect();
        Self { entries }
    }

    /// Coordinatewise `max(x_n, 0)`.
    pub fn positive_part(&self) -> Self {
        let entries = self
            .entries
            .iter()
            .filter(|(_, v)| v.is_positive())
            .map(|(&i, v)| (i, v.clone()))
            .collect();
        Self { entries }
    }

    /// Coordinatewise `max(-x_n, 0)`.
    pub fn negative_part(&self) -> Self {
        let entries = self
            .entries
            .iter()
            .filter(|(_, v)| v.is_negative())
            .map(|(&i, v)| (i, -v))
            .collect();
        Self { entries }
    }

    /// `(0, ..., 0, x_1, x_2, ...)` with `by` leading zeros.
    pub fn shift_right(&self, by: usize) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|(&i, v)| (i + by, v.clone()))
            .collect();
        Self { entries }
    }

    /// `(x_{1+by}, x_{2+by}, ...)`; the first `by` coordinates are dropped.
    pub fn shift_left(&self, by: usize) -> Self {
        let entries = self
            .entries
            .iter()
            .filter(|(&i, _)| i > by)
            .map(|(&i, v)| (i - by, v.clone()))
            .collect();
        Self { entries }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.entries.values().all(|v| !v.is_negative())
    }

    /// Exact values rendered as ratio strings, indexed from 1.
    pub fn to_ratio_strings(&self) -> Vec<(usize, String)> {
        self.iter().map(|(i, v)| (i, ratio_string(v))).collect()
    }

    fn combine(&self, other: &Self, negate_other: bool) -> Self {
        let mut entries = self.entries.clone();
        for (&i, v) in &other.entries {
            let term = if negate_other { -v } else { v.clone() };
            match entries.remove(&i) {
                Some(existing) => {
                    let sum = existing + term;
                    if !sum.is_zero() {
                        entries.insert(i, sum);
                    }
                }
                None => {
                    entries.insert(i, term);
                }
            }
        }
        Self { entries }
    }
}

impl fmt::Debug for SparseVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.entries.iter().map(|(i, v)| (i, ratio_string(v))))
            .finish()
    }
}

impl fmt::Display for SparseVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        let last = self.max_index();
        for i in 1..=last {
            if i > 1 {
                write!(f, ", ")?;
            }
            write!(f, "{}", self.get(i))?;
        }
        write!(f, ")")
    }
}

impl Add for &SparseVec {
    type Output = SparseVec;
    fn add(self, rhs: &SparseVec) -> SparseVec {
        self.combine(rhs, false)
    }
}

impl Sub for &SparseVec {
    type Output = SparseVec;
    fn sub(self, rhs: &SparseVec) -> SparseVec {
        self.combine(rhs, true)
    }
}

impl Add for SparseVec {
    type Output = SparseVec;
    fn add(self, rhs: SparseVec) -> SparseVec {
        &self + &rhs
    }
}

impl Sub for SparseVec {
    type Output = SparseVec;
    fn sub(self, rhs: SparseVec) -> SparseVec {
        &self - &rhs
    }
}

impl Neg for &SparseVec {
    type Output = SparseVec;
    fn neg(self) -> SparseVec {
        let entries = self.entries.iter().map(|(&i, v)| (i, -v)).collect();
        SparseVec { entries }
    }
}

impl Neg for SparseVec {
    type Output = SparseVec;
    fn neg(self) -> SparseVec {
        -&self
    }
}

/// `||x||_1 = sum |x_n|`.
pub fn l1_norm(x: &SparseVec) -> Rat {
    x.iter().fold(Rat::zero(), |acc, (_, v)| acc + v.abs())
}

/// `x_0 := sum x_n`.
pub fn sum_coords(x: &SparseVec) -> Rat {
    x.iter().fold(Rat::zero(), |acc, (_, v)| acc + v)
}

/// The equivalent norm `|sum x_n| + sum |x_n|`.
pub fn eq_norm(x: &SparseVec) -> Rat {
    sum_coords(x).abs() + l1_norm(x)
}

/// Lim's norm `max(||x+||_1, ||x-||_1)`.
pub fn lim_norm(x: &SparseVec) -> Rat {
    let (pos, neg) = x.iter().fold((Rat::zero(), Rat::zero()), |(p, n), (_, v)| {
        if v.is_positive() {
            (p + v, n)
        } else {
            (p, n - v)
        }
    });
    max_rat(pos, neg)
}

/// Selector for the three norms on `l1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Norm {
    L1,
    Equivalent,
    Lim,
}

impl Norm {
    pub fn eval(self, x: &SparseVec) -> Rat {
        match self {
            Norm::L1 => l1_norm(x),
            Norm::Equivalent => eq_norm(x),
            Norm::Lim => lim_norm(x),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Norm::L1 => "l1",
            Norm::Equivalent => "equivalent",
            Norm::Lim => "lim",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(values: &[(i64, i64)]) -> SparseVec {
        SparseVec::from_dense(values.iter().map(|&(n, d)| rat(n, d)))
    }

    #[test]
    fn l1_norm_examples() {
        assert_eq!(l1_norm(&SparseVec::zero()), int(0));
        assert_eq!(l1_norm(&SparseVec::unit(1).unwrap()), int(1));
        // direct summation: 1/2 + 1/3
        assert_eq!(l1_norm(&v(&[(1, 2), (-1, 3)])), rat(5, 6));
    }

    #[test]
    fn eq_norm_examples() {
        assert_eq!(eq_norm(&SparseVec::zero()), int(0));
        assert_eq!(eq_norm(&SparseVec::unit(1).unwrap()), int(2));
        assert_eq!(eq_norm(&v(&[(1, 1), (-1, 1)])), int(2));
    }

    #[test]
    fn lim_norm_examples() {
        assert_eq!(lim_norm(&SparseVec::unit(1).unwrap()), int(1));
        assert_eq!(lim_norm(&v(&[(1, 1), (-1, 1)])), int(1));
        assert_eq!(lim_norm(&v(&[(2, 1), (-1, 1), (1, 1)])), int(3));
    }

    #[test]
    fn sum_coords_examples() {
        assert_eq!(sum_coords(&SparseVec::zero()), int(0));
        assert_eq!(sum_coords(&v(&[(1, 2), (1, 2)])), int(1));
        assert_eq!(sum_coords(&v(&[(1, 1), (-1, 1)])), int(0));
    }

    #[test]
    fn zero_entries_are_never_stored() {
        let a = v(&[(1, 2), (0, 1), (1, 3)]);
        assert_eq!(a.support_len(), 2);
        let diff = &a - &a;
        assert!(diff.is_zero());
        let mut b = a.clone();
        b.set(1, int(0)).unwrap();
        assert_eq!(b.support_len(), 1);
        assert_eq!(b.get(1), int(0));
    }

    #[test]
    fn index_zero_is_rejected() {
        assert_eq!(SparseVec::unit(0), Err(Error::IndexOutOfRange(0)));
        assert!(SparseVec::from_entries([(0, int(1))]).is_err());
        assert_eq!(SparseVec::zero().get(0), int(0));
    }

    #[test]
    fn positive_and_negative_parts_split_the_vector() {
        let a = v(&[(2, 1), (-1, 1), (0, 1), (1, 5)]);
        let pos = a.positive_part();
        let neg = a.negative_part();
        assert_eq!(&pos - &neg, a);
        assert!(pos.is_nonnegative() && neg.is_nonnegative());
    }

    #[test]
    fn shifts() {
        let a = v(&[(1, 1), (2, 1)]);
        assert_eq!(a.shift_right(1), v(&[(0, 1), (1, 1), (2, 1)]));
        assert_eq!(a.shift_right(1).shift_left(1), a);
        assert_eq!(a.shift_left(1), v(&[(2, 1)]));
    }

    #[test]
    fn ratio_strings_round_trip() {
        for s in ["3/4", "-7/1", "0/1", "12345678901234567891/3"] {
            assert_eq!(ratio_string(&parse_rat(s).unwrap()), s);
        }
        assert_eq!(parse_rat("4"), Some(int(4)));
        assert_eq!(parse_rat("1/0"), None);
        assert_eq!(parse_rat("x"), None);
    }
}
