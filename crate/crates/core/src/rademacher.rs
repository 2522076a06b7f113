//! Rademacher functions as exact step functions, and the computations showing
//! their closed convex hull is diametral in `L1[0,1]`.
//!
//! `x_n := r_n + r_0` takes values in `{0, 2}`. Any two convex combinations of
//! `x_1..x_N` are within distance 1 of each other, while every such
//! combination is at distance exactly 1 from `x_{N+1}`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{int, Rat};
use crate::stepfn::{dyadic, Piece, StepFn};

/// Largest `N` accepted by [`sign_sum_identity`] (`2^(N+1)` terms).
pub const SIGN_SUM_CAP: usize = 20;

/// `r_0 = 1`; for `n >= 1`, `r_n` alternates `+1, -1` on the `2^n`
/// consecutive intervals `[k/2^n, (k+1)/2^n)`.
pub fn rademacher(n: u32) -> StepFn {
    if n == 0 {
        return StepFn::constant(int(1));
    }
    let count = 1u64 << n;
    let pieces = (0..count)
        .map(|k| {
            let value = if k % 2 == 0 { int(1) } else { int(-1) };
            Piece::new(dyadic(k, n), dyadic(k + 1, n), value)
        })
        .collect();
    StepFn::from_pieces(pieces).expect("level-n dyadic intervals partition [0, 1)")
}

/// `r_n` built from `r_1 = chi[0,1/2) - chi[1/2,1)` and
/// `r_n(t) = r_{n-1}(2t) + r_{n-1}(2t - 1)`.
pub fn rademacher_recurrence(n: u32) -> StepFn {
    if n == 0 {
        return StepFn::constant(int(1));
    }
    let half = Rat::new(1.into(), 2.into());
    let mut r = StepFn::from_pieces(vec![
        Piece::new(Rat::zero(), half.clone(), int(1)),
        Piece::new(half, Rat::one(), int(-1)),
    ])
    .expect("halves partition [0, 1)");
    for _ in 2..=n {
        r = r.dyadic_doubling();
    }
    r
}

/// `x_n = r_n + r_0`.
pub fn shifted(n: u32) -> StepFn {
    rademacher(n).map_values(|v| v + int(1))
}

fn require_convex(coeffs: &[Rat]) -> Result<()> {
    if let Some(c) = coeffs.iter().find(|c| c.is_negative()) {
        return Err(Error::NotConvex(format!("negative coefficient {c}")));
    }
    let total = coeffs.iter().fold(Rat::zero(), |acc, c| acc + c);
    if total != Rat::one() {
        return Err(Error::NotConvex(format!("coefficients sum to {total}")));
    }
    Ok(())
}

/// `2^-(N+1) sum over signs e in {-1,1}^(N+1) of |e_1 a_1 + ... + e_N a_N + e_{N+1}|`
/// for a convex coefficient list `a` of length `N`, by direct enumeration.
///
/// The coefficients are scaled to integers over their common denominator and
/// the signs are visited in Gray-code order, so each term costs one addition.
pub fn sign_sum_identity(alphas: &[Rat]) -> Result<Rat> {
    require_convex(alphas)?;
    let n = alphas.len();
    if n > SIGN_SUM_CAP {
        return Err(Error::EnumerationCap {
            terms: n + 1,
            cap_exp: SIGN_SUM_CAP as u32 + 1,
        });
    }
    let common = alphas
        .iter()
        .fold(BigInt::one(), |acc, a| acc.lcm(a.denom()));
    let mut weights: Vec<BigInt> = alphas
        .iter()
        .map(|a| a.numer() * (&common / a.denom()))
        .collect();
    weights.push(common.clone());

    let mut signs = vec![1i8; n + 1];
    let mut current: BigInt = weights.iter().sum();
    let mut total = current.abs();
    let terms: u64 = 1 << (n + 1);
    for k in 1..terms {
        let bit = k.trailing_zeros() as usize;
        if signs[bit] > 0 {
            current -= &weights[bit] * 2;
        } else {
            current += &weights[bit] * 2;
        }
        signs[bit] = -signs[bit];
        total += current.abs();
    }
    Ok(Rat::new(total, common * BigInt::from(terms)))
}

/// `int |sum_{n<=N} a_n r_n - r_{N+1}|`, by step-function integration.
pub fn sign_sum_by_integration(alphas: &[Rat]) -> Result<Rat> {
    require_convex(alphas)?;
    let rs: Vec<StepFn> = (1..=alphas.len() as u32).map(rademacher).collect();
    let combo = StepFn::linear_combination(alphas.iter().zip(&rs));
    let last = rademacher(alphas.len() as u32 + 1);
    Ok((&combo - &last).l1_integral())
}

fn padded(coeffs: &[Rat], len: usize) -> Result<Vec<Rat>> {
    if coeffs.len() > len {
        return Err(Error::NotConvex(format!(
            "{} coefficients for N = {len}",
            coeffs.len()
        )));
    }
    let mut out = coeffs.to_vec();
    out.resize(len, Rat::zero());
    Ok(out)
}

/// `sum_{n<=N} a_n x_n` for a coefficient list of length `N`.
pub fn hull_point(coeffs: &[Rat]) -> StepFn {
    let xs: Vec<StepFn> = (1..=coeffs.len() as u32).map(shifted).collect();
    StepFn::linear_combination(coeffs.iter().zip(&xs))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiametralReport {
    pub n: usize,
    /// `||sum a_n x_n - sum b_n x_n||_1`
    pub pair_distance: Rat,
    /// `||sum a_n x_n - x_{N+1}||_1`
    pub distance_to_next: Rat,
}

impl DiametralReport {
    pub fn pair_distance_within_one(&self) -> bool {
        self.pair_distance <= Rat::one()
    }

    pub fn distance_to_next_is_one(&self) -> bool {
        self.distance_to_next == Rat::one()
    }

    pub fn passed(&self) -> bool {
        self.pair_distance_within_one() && self.distance_to_next_is_one()
    }
}

/// Distances between two hull points of `x_1..x_N`, and from the first to
/// `x_{N+1}`. Shorter coefficient lists are padded with zeros.
pub fn diametral_check(alphas: &[Rat], betas: &[Rat], n: usize) -> Result<DiametralReport> {
    require_convex(alphas)?;
    require_convex(betas)?;
    let (a, b) = (padded(alphas, n)?, padded(betas, n)?);
    let x = hull_point(&a);
    let y = hull_point(&b);
    let next = shifted(n as u32 + 1);
    Ok(DiametralReport {
        n,
        pair_distance: (&x - &y).l1_integral(),
        distance_to_next: (&x - &next).l1_integral(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeakKkReport {
    pub level: u32,
    pub index: u32,
    /// `||x_n||_1`
    pub norm: Rat,
    /// `||x_n - r_0||_1`
    pub distance_to_limit: Rat,
    /// `int (x_n - r_0) g` for each indicator `g` of a level-`L` dyadic interval.
    pub pairings: Vec<Rat>,
}

impl WeakKkReport {
    pub fn passed(&self) -> bool {
        self.norm == Rat::one()
            && self.distance_to_limit == Rat::one()
            && self.pairings.iter().all(Zero::is_zero)
    }
}

/// `x_n` has norm 1, pairs to zero (after subtracting its weak limit `r_0`)
/// against every level-`L` dyadic indicator, yet stays at distance 1 from `r_0`.
pub fn weak_kk_witness(level: u32, index: u32) -> Result<WeakKkReport> {
    if index <= level {
        return Err(Error::LevelNotBelowIndex { level, index });
    }
    let x = shifted(index);
    let r0 = rademacher(0);
    let centred = &x - &r0;
    let pairings = (0..1u64 << level)
        .map(|k| {
            let g = StepFn::indicator(dyadic(k, level), dyadic(k + 1, level), int(1))
                .expect("dyadic subinterval");
            centred.pair_integral(&g)
        })
        .collect();
    Ok(WeakKkReport {
        level,
        index,
        norm: x.l1_integral(),
        distance_to_limit: centred.l1_integral(),
        pairings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn first_rademacher_functions() {
        assert_eq!(rademacher(0), StepFn::constant(int(1)));
        let r1 = rademacher(1);
        assert_eq!(r1.len(), 2);
        assert_eq!(r1.eval(&rat(1, 4)), Some(&int(1)));
        assert_eq!(r1.eval(&rat(3, 4)), Some(&int(-1)));
        let r2 = rademacher(2);
        let values: Vec<Rat> = r2.pieces().iter().map(|p| p.value.clone()).collect();
        assert_eq!(values, vec![int(1), int(-1), int(1), int(-1)]);
    }

    #[test]
    fn closed_form_matches_recurrence() {
        for n in 0..=10 {
            assert_eq!(rademacher(n), rademacher_recurrence(n), "n = {n}");
        }
    }

    #[test]
    fn integral_examples() {
        assert_eq!((&rademacher(1) - &rademacher(2)).l1_integral(), int(1));
        for n in 1..6 {
            assert_eq!(shifted(n).l1_integral(), int(1));
        }
        let g = StepFn::indicator(rat(1, 4), rat(3, 4), rat(5, 3)).unwrap();
        assert_eq!(rademacher(3).pair_integral(&g), int(0));
    }

    #[test]
    fn sign_sum_by_hand() {
        // (1/4)(|1+1| + |1-1| + |-1+1| + |-1-1|) = 1
        assert_eq!(sign_sum_identity(&[int(1)]).unwrap(), int(1));
        assert_eq!(sign_sum_identity(&[rat(1, 2), rat(1, 2)]).unwrap(), int(1));
        let alphas = [rat(1, 3), rat(1, 6), rat(1, 2)];
        assert_eq!(sign_sum_identity(&alphas).unwrap(), int(1));
        assert_eq!(sign_sum_by_integration(&alphas).unwrap(), int(1));
    }

    #[test]
    fn sign_sum_rejects_bad_input() {
        assert!(matches!(
            sign_sum_identity(&[rat(1, 2)]),
            Err(Error::NotConvex(_))
        ));
        assert!(matches!(
            sign_sum_identity(&[rat(3, 2), rat(-1, 2)]),
            Err(Error::NotConvex(_))
        ));
        let mut many = vec![Rat::zero(); SIGN_SUM_CAP + 1];
        many[0] = int(1);
        assert!(matches!(
            sign_sum_identity(&many),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn diametral_examples() {
        let a = [rat(1, 3), rat(2, 3)];
        let r = diametral_check(&a, &a, 2).unwrap();
        assert_eq!(r.pair_distance, int(0));
        assert!(r.passed());
        let r = diametral_check(&[int(1)], &[int(0), int(1)], 2).unwrap();
        assert_eq!(r.pair_distance, int(1));
        assert!(r.distance_to_next_is_one());
    }

    #[test]
    fn weak_kk_examples() {
        let r = weak_kk_witness(2, 3).unwrap();
        // pairing against the indicator of [0, 1/4)
        assert_eq!(r.pairings[0], int(0));
        assert_eq!(r.pairings.len(), 4);
        assert!(r.passed());
        let r = weak_kk_witness(4, 5).unwrap();
        assert_eq!(r.pairings.len(), 16);
        assert!(r.passed());
        assert!(weak_kk_witness(3, 3).is_err());
    }

    #[test]
    fn pairing_with_the_next_level_does_not_vanish() {
        // r_3 against level-3 indicators is not orthogonal, so the level bound matters
        let g = StepFn::indicator(int(0), rat(1, 8), int(1)).unwrap();
        assert_eq!(rademacher(3).pair_integral(&g), rat(1, 8));
    }
}
