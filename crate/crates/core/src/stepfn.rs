//! Piecewise-constant functions on `[0, 1)` with dyadic breakpoints.
//!
//! Pieces are half-open `[left, right)`; they partition `[0, 1)` in order and
//! adjacent pieces never share a value, so equality of [`StepFn`] is equality
//! of functions in `L1[0,1]`.

use std::cmp::Ordering;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{min_rat, Rat};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub left: Rat,
    pub right: Rat,
    pub value: Rat,
}

impl Piece {
    pub fn new(left: Rat, right: Rat, value: Rat) -> Self {
        Self { left, right, value }
    }

    pub fn width(&self) -> Rat {
        &self.right - &self.left
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepFn {
    pieces: Vec<Piece>,
}

/// True when the reduced denominator is a power of two.
pub fn is_dyadic(r: &Rat) -> bool {
    let d = r.denom();
    d.is_positive() && (d & (d - BigInt::one())).is_zero()
}

/// `k / 2^level`.
pub fn dyadic(k: u64, level: u32) -> Rat {
    Rat::new(BigInt::from(k), BigInt::one() << level)
}

impl StepFn {
    pub fn constant(value: Rat) -> Self {
        Self {
            pieces: vec![Piece::new(Rat::zero(), Rat::one(), value)],
        }
    }

    pub fn zero() -> Self {
        Self::constant(Rat::zero())
    }

    /// Validates that `pieces` partition `[0, 1)` in order with dyadic
    /// endpoints, then merges equal neighbours.
    pub fn from_pieces(pieces: Vec<Piece>) -> Result<Self> {
        let mut expected_left = Rat::zero();
        for p in &pieces {
            if p.left != expected_left {
                return Err(Error::InvalidStepFn(format!(
                    "gap or overlap at {} (expected {})",
                    p.left, expected_left
                )));
            }
            if p.right <= p.left {
                return Err(Error::InvalidStepFn(format!(
                    "empty piece [{}, {})",
                    p.left, p.right
                )));
            }
            if !is_dyadic(&p.left) || !is_dyadic(&p.right) {
                return Err(Error::InvalidStepFn(format!(
                    "non-dyadic endpoint in [{}, {})",
                    p.left, p.right
                )));
            }
            expected_left = p.right.clone();
        }
        if expected_left != Rat::one() {
            return Err(Error::InvalidStepFn(format!(
                "pieces end at {expected_left}, not 1"
            )));
        }
        Ok(Self::canonical(pieces))
    }

    /// `value` on `[left, right)`, zero elsewhere.
    pub fn indicator(left: Rat, right: Rat, value: Rat) -> Result<Self> {
        if left.is_negative() || right > Rat::one() || left >= right {
            return Err(Error::InvalidStepFn(format!(
                "[{left}, {right}) is not a nonempty subinterval of [0, 1)"
            )));
        }
        let mut pieces = Vec::with_capacity(3);
        if left.is_positive() {
            pieces.push(Piece::new(Rat::zero(), left.clone(), Rat::zero()));
        }
        let tail = right.clone();
        pieces.push(Piece::new(left, right, value));
        if tail < Rat::one() {
            pieces.push(Piece::new(tail, Rat::one(), Rat::zero()));
        }
        Self::from_pieces(pieces)
    }

    fn canonical(pieces: Vec<Piece>) -> Self {
        let mut merged: Vec<Piece> = Vec::with_capacity(pieces.len());
        for p in pieces {
            match merged.last_mut() {
                Some(last) if last.value == p.value => last.right = p.right,
                _ => merged.push(p),
            }
        }
        Self { pieces: merged }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Value at `t` in `[0, 1)`; `None` outside.
    pub fn eval(&self, t: &Rat) -> Option<&Rat> {
        if t.is_negative() || *t >= Rat::one() {
            return None;
        }
        let idx = self
            .pieces
            .binary_search_by(|p| {
                if p.right <= *t {
                    Ordering::Less
                } else if p.left > *t {
                    Ordering::Greater
                } else {
                    Ordering::Equal
                }
            })
            .ok()?;
        Some(&self.pieces[idx].value)
    }

    /// Pointwise `op(f, g)` over the common refinement of both partitions.
    pub fn zip_with<F>(&self, other: &StepFn, mut op: F) -> StepFn
    where
        F: FnMut(&Rat, &Rat) -> Rat,
    {
        let (a, b) = (&self.pieces, &other.pieces);
        let mut out = Vec::with_capacity(a.len().max(b.len()));
        let (mut i, mut j) = (0, 0);
        let mut left = Rat::zero();
        while i < a.len() && j < b.len() {
            let right = min_rat(a[i].right.clone(), b[j].right.clone());
            out.push(Piece::new(
                left,
                right.clone(),
                op(&a[i].value, &b[j].value),
            ));
            if a[i].right == right {
                i += 1;
            }
            if b[j].right == right {
                j += 1;
            }
            left = right;
        }
        Self::canonical(out)
    }

    pub fn map_values<F>(&self, mut op: F) -> StepFn
    where
        F: FnMut(&Rat) -> Rat,
    {
        Self::canonical(
            self.pieces
                .iter()
                .map(|p| Piece::new(p.left.clone(), p.right.clone(), op(&p.value)))
                .collect(),
        )
    }

    pub fn scale(&self, factor: &Rat) -> StepFn {
        self.map_values(|v| v * factor)
    }

    /// `int_0^1 f`.
    pub fn integral(&self) -> Rat {
        self.pieces
            .iter()
            .fold(Rat::zero(), |acc, p| acc + p.width() * &p.value)
    }

    /// `int_0^1 |f|`.
    pub fn l1_integral(&self) -> Rat {
        self.pieces
            .iter()
            .fold(Rat::zero(), |acc, p| acc + p.width() * p.value.abs())
    }

    /// `int_0^1 f g`.
    pub fn pair_integral(&self, other: &StepFn) -> Rat {
        self.zip_with(other, |a, b| a * b).integral()
    }

    /// `t -> f(2t) + f(2t - 1)` restricted to `[0, 1)`, with `f` read as zero
    /// outside `[0, 1)`: one compressed copy of `f` on each half.
    pub fn dyadic_doubling(&self) -> StepFn {
        let half = Rat::new(1.into(), 2.into());
        let mut out = Vec::with_capacity(2 * self.pieces.len());
        for offset in [Rat::zero(), half.clone()] {
            for p in &self.pieces {
                out.push(Piece::new(
                    &p.left * &half + &offset,
                    &p.right * &half + &offset,
                    p.value.clone(),
                ));
            }
        }
        Self::canonical(out)
    }

    /// `sum c_i f_i`.
    pub fn linear_combination<'a, I>(terms: I) -> StepFn
    where
        I: IntoIterator<Item = (&'a Rat, &'a StepFn)>,
    {
        terms.into_iter().fold(StepFn::zero(), |acc, (c, f)| {
            acc.zip_with(f, |a, b| a + c * b)
        })
    }
}

impl Add for &StepFn {
    type Output = StepFn;
    fn add(self, rhs: &StepFn) -> StepFn {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &StepFn {
    type Output = StepFn;
    fn sub(self, rhs: &StepFn) -> StepFn {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Neg for &StepFn {
    type Output = StepFn;
    fn neg(self) -> StepFn {
        self.map_values(|v| -v)
    }
}
