//! Membership predicates and seeded samplers for the closed bounded convex
//! sets the maps act on.
//!
//! | set | definition |
//! |-----|------------|
//! | `C` | `x >= 0`, `sum x_n <= 1` |
//! | `K` | `Q(C)`: `y >= 0`, `y_1 = sum_{n>=2} y_n <= 1` |
//! | `D` | `sum w_k x_k = alpha`, `sum abs(x_j) <= q` with `w_k = 1 - delta - eps_k` |
//! | `L` | `Q(D)`: `y_1 = sum_{n>=2} y_n`, `sum w_k y_{k+1} = alpha`, `sum_{n>=2} abs(y_n) <= q` |
//! | `W` | `x >= 0`, `sum x_n = 1` |

use std::fmt;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::epsilon::EpsSeq;
use crate::error::{Error, Result};
use crate::exact::{l1_norm, ratio_string, sum_coords, Rat, SparseVec};
use crate::maps::{q_embed, tail_sum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConvexSet {
    C,
    K,
    D,
    L,
    W,
}

impl ConvexSet {
    pub fn name(self) -> &'static str {
        match self {
            ConvexSet::C => "C",
            ConvexSet::K => "K",
            ConvexSet::D => "D",
            ConvexSet::L => "L",
            ConvexSet::W => "W",
        }
    }
}

impl fmt::Display for ConvexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

impl Relation {
    fn holds(self, lhs: &Rat, rhs: &Rat) -> bool {
        match self {
            Relation::Eq => lhs == rhs,
            Relation::Le => lhs <= rhs,
            Relation::Ge => lhs >= rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Eq => "=",
            Relation::Le => "<=",
            Relation::Ge => ">=",
        }
    }
}

/// A defining constraint that failed, with both sides exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub constraint: String,
    pub lhs: Rat,
    pub relation: Relation,
    pub rhs: Rat,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} {} {} fails",
            self.constraint,
            ratio_string(&self.lhs),
            self.relation.symbol(),
            ratio_string(&self.rhs)
        )
    }
}

fn require(
    constraint: impl Into<String>,
    lhs: Rat,
    relation: Relation,
    rhs: Rat,
) -> Option<Violation> {
    if relation.holds(&lhs, &rhs) {
        None
    } else {
        Some(Violation {
            constraint: constraint.into(),
            lhs,
            relation,
            rhs,
        })
    }
}

fn first_negative(x: &SparseVec) -> Option<Violation> {
    x.iter()
        .find(|(_, v)| v.is_negative())
        .map(|(i, v)| Violation {
            constraint: format!("x_{i} >= 0"),
            lhs: v.clone(),
            relation: Relation::Ge,
            rhs: Rat::zero(),
        })
}

/// `sum_k w_k x_{k + offset}` with `w_k = 1 - delta - eps_k`.
fn weighted_sum(x: &SparseVec, offset: usize, seq: &EpsSeq) -> Result<Rat> {
    let eps = seq.prefix(x.max_index().saturating_sub(offset))?;
    let p = seq.params();
    Ok(x.iter()
        .filter(|(i, _)| *i > offset)
        .fold(Rat::zero(), |acc, (i, v)| {
            acc + p.weight(&eps[i - offset - 1]) * v
        }))
}

impl ConvexSet {
    /// The first violated defining constraint, or `None` for a member.
    pub fn check(self, x: &SparseVec, seq: &EpsSeq) -> Result<Option<Violation>> {
        let p = seq.params();
        let violation = match self {
            ConvexSet::C => first_negative(x)
                .or_else(|| require("sum x_n <= 1", sum_coords(x), Relation::Le, Rat::one())),
            ConvexSet::W => first_negative(x)
                .or_else(|| require("sum x_n = 1", sum_coords(x), Relation::Eq, Rat::one())),
            ConvexSet::K => first_negative(x)
                .or_else(|| require("y_1 = sum_{n>=2} y_n", x.get(1), Relation::Eq, tail_sum(x)))
                .or_else(|| require("y_1 <= 1", x.get(1), Relation::Le, Rat::one())),
            ConvexSet::D => require(
                "sum w_k x_k = alpha",
                weighted_sum(x, 0, seq)?,
                Relation::Eq,
                p.alpha.clone(),
            )
            .or_else(|| require("sum |x_j| <= q", l1_norm(x), Relation::Le, p.q.clone())),
            ConvexSet::L => {
                let tail = x.shift_left(1);
                require(
                    "y_1 = sum_{n>=2} y_n",
                    x.get(1),
                    Relation::Eq,
                    sum_coords(&tail),
                )
                .or(require(
                    "sum w_k y_{k+1} = alpha",
                    weighted_sum(x, 1, seq)?,
                    Relation::Eq,
                    p.alpha.clone(),
                ))
                .or_else(|| {
                    require(
                        "sum_{n>=2} |y_n| <= q",
                        l1_norm(&tail),
                        Relation::Le,
                        p.q.clone(),
                    )
                })
            }
        };
        Ok(violation)
    }

    pub fn member(self, x: &SparseVec, seq: &EpsSeq) -> Result<bool> {
        Ok(self.check(x, seq)?.is_none())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplerConfig {
    /// Raw coordinates are `num / den` with `|num|, den <= value_bound`.
    pub value_bound: i64,
    /// Rejection attempts allowed per emitted vector.
    pub max_attempts: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            value_bound: 100,
            max_attempts: 1000,
        }
    }
}

fn small_nonneg(rng: &mut ChaCha8Rng, bound: i64) -> Rat {
    Rat::new(
        rng.random_range(0..=bound).into(),
        rng.random_range(1..=bound).into(),
    )
}

fn small_signed(rng: &mut ChaCha8Rng, bound: i64) -> Rat {
    Rat::new(
        rng.random_range(-bound..=bound).into(),
        rng.random_range(1..=bound).into(),
    )
}

/// Deterministic samples from `set`, all passing [`ConvexSet::member`].
///
/// `C`/`W` normalize nonnegative draws; `D` draws `x_2..x_m` and solves
/// the affine constraint for `x_1` (the largest weight), rejecting draws that
/// overshoot `q`; `K` and `L` push `C` and `D` samples through `Q`.
pub fn sample(
    set: ConvexSet,
    seq: &EpsSeq,
    seed: u64,
    count: usize,
    support_cap: usize,
) -> Result<Vec<SparseVec>> {
    sample_with(
        &SamplerConfig::default(),
        set,
        seq,
        seed,
        count,
        support_cap,
    )
}

pub fn sample_with(
    config: &SamplerConfig,
    set: ConvexSet,
    seq: &EpsSeq,
    seed: u64,
    count: usize,
    support_cap: usize,
) -> Result<Vec<SparseVec>> {
    if support_cap < 2 {
        return Err(Error::InvalidParams(format!(
            "support cap {support_cap} must be >= 2"
        )));
    }
    if config.value_bound < 1 {
        return Err(Error::InvalidParams("value bound must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = config.value_bound;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let x = match set {
            ConvexSet::C => draw_simplex(&mut rng, bound, support_cap, false),
            ConvexSet::W => draw_simplex(&mut rng, bound, support_cap, true),
            ConvexSet::K => q_embed(&draw_simplex(&mut rng, bound, support_cap - 1, false)),
            ConvexSet::D => draw_d(&mut rng, config, seq, support_cap)?,
            ConvexSet::L => q_embed(&draw_d(&mut rng, config, seq, support_cap - 1)?),
        };
        out.push(x);
    }
    Ok(out)
}

fn draw_simplex(rng: &mut ChaCha8Rng, bound: i64, cap: usize, exact_total: bool) -> SparseVec {
    let m = rng.random_range(1..=cap.max(1));
    loop {
        let raw = SparseVec::from_dense((0..m).map(|_| {
            if rng.random_bool(0.75) {
                small_nonneg(rng, bound)
            } else {
                Rat::zero()
            }
        }));
        let total = sum_coords(&raw);
        let target = if exact_total {
            Rat::one()
        } else {
            Rat::new(rng.random_range(0..=bound).into(), bound.into())
        };
        if total.is_zero() {
            if exact_total {
                continue;
            }
            return raw;
        }
        return raw.scale(&(target / total));
    }
}

fn draw_d(
    rng: &mut ChaCha8Rng,
    config: &SamplerConfig,
    seq: &EpsSeq,
    cap: usize,
) -> Result<SparseVec> {
    let p = seq.params();
    let m = rng.random_range(1..=cap.max(1));
    let eps = seq.prefix(m)?;
    let weights: Vec<Rat> = eps.iter().map(|e| p.weight(e)).collect();
    if weights[0].is_zero() {
        return Err(Error::InvalidParams(
            "weight 1 - delta - eps_1 vanishes; D cannot be solved for x_1".into(),
        ));
    }
    // Free coordinates are drawn in [-q/(2m), q/(2m)], so most draws leave
    // room for x_1 inside the l1 ball of radius q.
    let spread = &p.q / Rat::from_integer((2 * m).into());
    for _ in 0..config.max_attempts {
        let free: Vec<Rat> = (1..m)
            .map(|_| small_signed(rng, config.value_bound) * &spread)
            .collect();
        let rest = free
            .iter()
            .zip(&weights[1..])
            .fold(Rat::zero(), |acc, (x, w)| acc + w * x);
        let first = (&p.alpha - rest) / &weights[0];
        let x = SparseVec::from_dense(std::iter::once(first).chain(free));
        if l1_norm(&x) <= p.q {
            return Ok(x);
        }
    }
    Err(Error::SamplingExhausted {
        set: "D",
        attempts: config.max_attempts,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvarianceFailure {
    pub index: usize,
    pub image: SparseVec,
    pub violation: Violation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvarianceReport {
    pub set: ConvexSet,
    pub checked: usize,
    pub failures: Vec<InvarianceFailure>,
}

impl InvarianceReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks `map(x)` is in `set` for every sample.
pub fn verify_invariance<M>(
    set: ConvexSet,
    map: M,
    samples: &[SparseVec],
    seq: &EpsSeq,
) -> Result<InvarianceReport>
where
    M: Fn(&SparseVec) -> Result<SparseVec> + Sync,
{
    let outcomes = samples
        .par_iter()
        .enumerate()
        .map(|(index, x)| {
            let image = map(x)?;
            Ok(set.check(&image, seq)?.map(|violation| InvarianceFailure {
                index,
                image,
                violation,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InvarianceReport {
        set,
        checked: samples.len(),
        failures: outcomes.into_iter().flatten().collect(),
    })
}
