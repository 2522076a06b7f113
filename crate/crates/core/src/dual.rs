//! `l1` as the dual of `c`, the space of convergent sequences.
//!
//! Elements of `c` are modelled as eventually constant sequences
//! `(lambda_1, ..., lambda_m, lim, lim, ...)`, with `lambda_0 := lim`.
//! A vector `x` in `l1` acts on `lambda` by
//!
//! ```text
//! <x, lambda> = sum_{n>=1} x_{n+1} (lambda_n - lambda_0) + x_0 lambda_0,   x_0 = sum x_n
//!             = sum_{n>=0} x_{n+1} lambda_n
//! ```

use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::epsilon::EpsSeq;
use crate::error::{Error, Result};
use crate::exact::{int, l1_norm, max_rat, sum_coords, Rat, SparseVec};
use crate::sets::ConvexSet;

/// An eventually constant sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CSeq {
    prefix: Vec<Rat>,
    limit: Rat,
}

impl CSeq {
    /// `(prefix..., limit, limit, ...)`, with redundant trailing entries stripped.
    pub fn new(mut prefix: Vec<Rat>, limit: Rat) -> Self {
        while prefix.last() == Some(&limit) {
            prefix.pop();
        }
        Self { prefix, limit }
    }

    pub fn constant(value: Rat) -> Self {
        Self::new(Vec::new(), value)
    }

    pub fn prefix(&self) -> &[Rat] {
        &self.prefix
    }

    pub fn limit(&self) -> &Rat {
        &self.limit
    }

    /// `lambda_n`; `lambda_0` is the limit.
    pub fn get(&self, n: usize) -> &Rat {
        if n == 0 {
            return &self.limit;
        }
        self.prefix.get(n - 1).unwrap_or(&self.limit)
    }

    /// `sup_n |lambda_n|`.
    pub fn sup_abs(&self) -> Rat {
        self.prefix
            .iter()
            .fold(self.limit.abs(), |acc, v| max_rat(acc, v.abs()))
    }

    /// A random element with prefix length below `max_prefix` and values
    /// `num / den`, `|num|, den <= bound`.
    pub fn random<R: Rng>(rng: &mut R, max_prefix: usize, bound: i64) -> Self {
        let draw = |rng: &mut R| {
            Rat::new(
                rng.random_range(-bound..=bound).into(),
                rng.random_range(1..=bound).into(),
            )
        };
        let len = rng.random_range(0..max_prefix.max(1));
        let prefix = (0..len).map(|_| draw(rng)).collect();
        Self::new(prefix, draw(rng))
    }
}

/// `sum_{n>=1} x_{n+1} (lambda_n - lambda_0) + (sum x) lambda_0`.
pub fn pair_centred(x: &SparseVec, lam: &CSeq) -> Rat {
    let lim = lam.limit();
    let tail = x
        .iter()
        .filter(|&(i, _)| i >= 2)
        .fold(Rat::zero(), |acc, (i, v)| acc + v * (lam.get(i - 1) - lim));
    tail + sum_coords(x) * lim
}

/// `sum_{n>=0} x_{n+1} lambda_n`.
pub fn pair_direct(x: &SparseVec, lam: &CSeq) -> Rat {
    x.iter()
        .fold(Rat::zero(), |acc, (i, v)| acc + v * lam.get(i - 1))
}

/// `<x, lambda>`. Both forms are evaluated in debug builds and must agree.
pub fn pair(x: &SparseVec, lam: &CSeq) -> Rat {
    let direct = pair_direct(x, lam);
    debug_assert_eq!(direct, pair_centred(x, lam));
    direct
}

/// A handful of eventually constant sequences with distinct prefix lengths.
pub fn test_family() -> Vec<CSeq> {
    let r = |n: i64, d: i64| Rat::new(n.into(), d.into());
    vec![
        CSeq::constant(int(1)),
        CSeq::new(vec![int(5)], int(0)),
        CSeq::new(
            (1..=8)
                .map(|k| r(if k % 2 == 0 { -1 } else { 1 }, k))
                .collect(),
            int(0),
        ),
        CSeq::new((1..=12).map(|k| r((1 << k) - 1, 1 << k)).collect(), int(1)),
        CSeq::new(vec![int(-3), r(7, 2), int(0), int(2)], r(-2, 3)),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeakStarFailure {
    pub n: usize,
    pub what: &'static str,
    pub lhs: Rat,
    pub rhs: Rat,
}

/// Exact checks on `x^(k) = e_{k+1}` for `k <= n_max`: unit norm,
/// `||x^(n) - x^(0)|| = 2`, `<x^(n), lambda> = lambda_n`, and the pairing
/// equals `lambda_0` once `n` passes the prefix of `lambda`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeakStarReport {
    pub n_max: usize,
    pub family_size: usize,
    /// Pairings that were already in the constant tail.
    pub exhausted_checked: usize,
    pub failures: Vec<WeakStarFailure>,
}

impl WeakStarReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn weak_star_witness(n_max: usize) -> Result<WeakStarReport> {
    if n_max == 0 {
        return Err(Error::InvalidParams("n_max must be >= 1".into()));
    }
    let family = test_family();
    let x0 = SparseVec::unit(1)?;
    let mut failures = Vec::new();
    let mut exhausted_checked = 0;
    let mut expect = |n: usize, what: &'static str, lhs: Rat, rhs: &Rat| {
        if lhs != *rhs {
            failures.push(WeakStarFailure {
                n,
                what,
                lhs,
                rhs: rhs.clone(),
            });
        }
    };
    expect(0, "norm", l1_norm(&x0), &Rat::one());
    for n in 1..=n_max {
        let xn = SparseVec::unit(n + 1)?;
        expect(n, "norm", l1_norm(&xn), &Rat::one());
        expect(n, "distance", l1_norm(&(&xn - &x0)), &int(2));
        for lam in &family {
            let value = pair(&xn, lam);
            if n > lam.prefix().len() {
                exhausted_checked += 1;
                expect(n, "limit", value.clone(), lam.limit());
            }
            expect(n, "coordinate", value, lam.get(n));
        }
    }
    Ok(WeakStarReport {
        n_max,
        family_size: family.len(),
        exhausted_checked,
        failures,
    })
}

/// `||x - e_m||_1` for `x` in `W` and `m` outside its support; always 2.
pub fn w_diametral_witness(x: &SparseVec, m: usize) -> Result<Rat> {
    if let Some(v) = ConvexSet::W.check(x, &EpsSeq::isometric())? {
        return Err(Error::NotMember {
            set: "W",
            reason: v.to_string(),
        });
    }
    if x.contains_index(m) {
        return Err(Error::IndexInSupport { index: m });
    }
    Ok(l1_norm(&(x - &SparseVec::unit(m)?)))
}
