//! Small perturbations of an isometric `l1` basis, and the contraction `R`
//! they carry.
//!
//! Given `u_n` spanning an isometric copy of the `l1` basis and `v_n` with
//! `||u_n - v_n|| < gamma_n`, where
//!
//! ```text
//! gamma_1, gamma_2 < 1/4      gamma_{n+1}, gamma_{n+2} < eps_n / 2
//! ```
//!
//! the map `R(sum y_n v_n) = sum (S y)_n v_n` is a fixed-point-free
//! contraction on `M = { sum y_n v_n : y in L }`. Two explicit ambient spaces
//! are provided:
//!
//! * [`Flavor::InterleavedL1`]: `u_n = e_{2n-1}`, `v_n = e_{2n-1} + g_n e_{2n}` in `l1`;
//! * [`Flavor::DyadicBlocks`]: `u_n = 2^n 1[2^-n, 2^-n+1)` in `L1[0,1]`, and
//!   `v_n = u_n + g_n w_n` with `w_n` the normalized difference of the two
//!   halves of that block.
//!
//! Here `g_n` is the perturbation size actually used (`chosen`), strictly
//! below the bound `gamma_n`.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::epsilon::EpsSeq;
use crate::error::{Error, Result};
use crate::exact::{l1_norm, min_rat, rat, Rat, SparseVec};
use crate::maps::s_map;
use crate::sets::ConvexSet;
use crate::stepfn::{dyadic, Piece, StepFn};

/// Default number of basis vectors.
pub const DEFAULT_BASIS_COUNT: usize = 64;

/// Supremum of the admissible `gamma_n`: the minimum of every constraint
/// that mentions index `n`.
pub fn gamma_bound(n: usize, seq: &EpsSeq) -> Result<Rat> {
    if n == 0 {
        return Err(Error::IndexOutOfRange(0));
    }
    let half = rat(1, 2);
    let mut bound: Option<Rat> = None;
    let mut tighten = |c: Rat| {
        bound = Some(match bound.take() {
            Some(b) => min_rat(b, c),
            None => c,
        });
    };
    if n <= 2 {
        tighten(rat(1, 4));
    }
    if n >= 2 {
        tighten(seq.eps(n - 1)? * &half);
    }
    if n >= 3 {
        tighten(seq.eps(n - 2)? * &half);
    }
    Ok(bound.expect("n >= 1 always meets a constraint"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbationParams {
    /// `gamma_n`, strictly below [`gamma_bound`].
    pub gammas: Vec<Rat>,
    /// `g_n = ||u_n - v_n||`, strictly below `gamma_n`.
    pub chosen: Vec<Rat>,
}

impl PerturbationParams {
    /// `gamma_n = 3/4 gamma_bound(n)` and `g_n = 1/2 gamma_bound(n)` for
    /// `n = 1..=count`.
    pub fn standard(count: usize, seq: &EpsSeq) -> Result<Self> {
        let bounds = (1..=count)
            .map(|n| gamma_bound(n, seq))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            gammas: bounds.iter().map(|b| b * rat(3, 4)).collect(),
            chosen: bounds.iter().map(|b| b * rat(1, 2)).collect(),
        })
    }

    pub fn new(gammas: Vec<Rat>, chosen: Vec<Rat>, seq: &EpsSeq) -> Result<Self> {
        if gammas.len() != chosen.len() {
            return Err(Error::InvalidParams(format!(
                "{} bounds for {} perturbation sizes",
                gammas.len(),
                chosen.len()
            )));
        }
        for (i, (g, c)) in gammas.iter().zip(&chosen).enumerate() {
            let n = i + 1;
            let bound = gamma_bound(n, seq)?;
            if !(c.is_positive() && c < g && *g < bound) {
                return Err(Error::InvalidParams(format!(
                    "need 0 < g_{n} = {c} < gamma_{n} = {g} < {bound}"
                )));
            }
        }
        Ok(Self { gammas, chosen })
    }

    pub fn count(&self) -> usize {
        self.chosen.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flavor {
    InterleavedL1,
    DyadicBlocks,
}

impl Flavor {
    pub fn name(self) -> &'static str {
        match self {
            Flavor::InterleavedL1 => "interleaved-l1",
            Flavor::DyadicBlocks => "step-function-l1",
        }
    }
}

/// An element of the ambient space `X`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ambient {
    Seq(SparseVec),
    Fun(StepFn),
}

impl Ambient {
    pub fn norm(&self) -> Rat {
        match self {
            Ambient::Seq(x) => l1_norm(x),
            Ambient::Fun(f) => f.l1_integral(),
        }
    }

    pub fn sub(&self, other: &Ambient) -> Result<Ambient> {
        match (self, other) {
            (Ambient::Seq(a), Ambient::Seq(b)) => Ok(Ambient::Seq(a - b)),
            (Ambient::Fun(a), Ambient::Fun(b)) => Ok(Ambient::Fun(a - b)),
            _ => Err(Error::InvalidParams(
                "cannot subtract elements of different ambient spaces".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbedBasis {
    pub flavor: Flavor,
    pub params: PerturbationParams,
}

impl PerturbedBasis {
    pub fn new(flavor: Flavor, params: PerturbationParams) -> Self {
        Self { flavor, params }
    }

    pub fn standard(flavor: Flavor, count: usize, seq: &EpsSeq) -> Result<Self> {
        Ok(Self::new(flavor, PerturbationParams::standard(count, seq)?))
    }

    pub fn count(&self) -> usize {
        self.params.count()
    }

    fn check_range(&self, coeffs: &SparseVec) -> Result<()> {
        let max = coeffs.max_index();
        if max > self.count() {
            return Err(Error::OutsideBasis {
                index: max,
                count: self.count(),
            });
        }
        Ok(())
    }

    /// `sum t_n v_n` (perturbed) or `sum t_n u_n` as an ambient element.
    pub fn combination(&self, coeffs: &SparseVec, perturbed: bool) -> Result<Ambient> {
        self.check_range(coeffs)?;
        let g = |n: usize| -> Rat {
            if perturbed {
                self.params.chosen[n - 1].clone()
            } else {
                Rat::zero()
            }
        };
        match self.flavor {
            Flavor::InterleavedL1 => {
                let entries = coeffs
                    .iter()
                    .flat_map(|(n, t)| [(2 * n - 1, t.clone()), (2 * n, t * g(n))]);
                Ok(Ambient::Seq(SparseVec::from_entries(entries)?))
            }
            Flavor::DyadicBlocks => {
                let count = self.count() as u32;
                let mut pieces = Vec::with_capacity(2 * self.count() + 1);
                if count > 0 {
                    pieces.push(Piece::new(Rat::zero(), dyadic(1, count), Rat::zero()));
                } else {
                    pieces.push(Piece::new(Rat::zero(), Rat::one(), Rat::zero()));
                }
                // Blocks [2^-n, 2^-n+1) from the innermost (n = count) outwards.
                for n in (1..=count).rev() {
                    let t = coeffs.get(n as usize);
                    let height = Rat::from_integer(BigInt::one() << n);
                    let gn = g(n as usize);
                    let (left, mid, right) = (dyadic(2, n + 1), dyadic(3, n + 1), dyadic(4, n + 1));
                    pieces.push(Piece::new(
                        left,
                        mid.clone(),
                        &t * &height * (Rat::one() + &gn),
                    ));
                    pieces.push(Piece::new(mid, right, &t * &height * (Rat::one() - &gn)));
                }
                Ok(Ambient::Fun(StepFn::from_pieces(pieces)?))
            }
        }
    }

    /// `||sum y_n v_n||_X`.
    pub fn x_norm(&self, coeffs: &SparseVec) -> Result<Rat> {
        Ok(self.combination(coeffs, true)?.norm())
    }

    /// `||sum t_n u_n||_X`.
    pub fn unperturbed_norm(&self, coeffs: &SparseVec) -> Result<Rat> {
        Ok(self.combination(coeffs, false)?.norm())
    }

    /// `||u_n - v_n||_X`, evaluated in the ambient space.
    pub fn perturbation_size(&self, n: usize) -> Result<Rat> {
        let e = SparseVec::unit(n)?;
        let u = self.combination(&e, false)?;
        let v = self.combination(&e, true)?;
        Ok(u.sub(&v)?.norm())
    }
}

fn require_in_l(y: &SparseVec, seq: &EpsSeq) -> Result<()> {
    match ConvexSet::L.check(y, seq)? {
        None => Ok(()),
        Some(v) => Err(Error::NotMember {
            set: "L",
            reason: v.to_string(),
        }),
    }
}

/// The coefficient form of `R`: `y -> S y` for `y` in `L`.
pub fn r_map(coeffs: &SparseVec, seq: &EpsSeq) -> Result<SparseVec> {
    require_in_l(coeffs, seq)?;
    s_map(coeffs, seq)
}

/// Exact values of the two inequality chains bounding `R` as a contraction.
///
/// ```text
/// image_distance <= upper <= middle <= lower <= distance
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainReport {
    /// `||R sigma - R tau||_X`
    pub image_distance: Rat,
    /// `sum |(Sy - Sz)_n| (1 + gamma_n)`
    pub upper: Rat,
    /// `3/4 |y_1 - z_1| + sum (1 - eps_n / 2) |y_{n+1} - z_{n+1}|`
    pub middle: Rat,
    /// `sum |y_n - z_n| (1 - gamma_n)`
    pub lower: Rat,
    /// `||sigma - tau||_X`
    pub distance: Rat,
    pub identical: bool,
}

impl ChainReport {
    pub fn ordered(&self) -> bool {
        self.image_distance <= self.upper
            && self.upper <= self.middle
            && self.middle <= self.lower
            && self.lower <= self.distance
    }

    pub fn strict(&self) -> bool {
        self.identical || self.image_distance < self.distance
    }

    pub fn passed(&self) -> bool {
        self.ordered() && self.strict()
    }
}

pub fn verify_chain(
    basis: &PerturbedBasis,
    y: &SparseVec,
    z: &SparseVec,
    seq: &EpsSeq,
) -> Result<ChainReport> {
    require_in_l(y, seq)?;
    require_in_l(z, seq)?;
    let diff = y - z;
    let image_diff = &s_map(y, seq)? - &s_map(z, seq)?;
    basis.check_range(&image_diff)?;

    let gammas = &basis.params.gammas;
    let weighted = |v: &SparseVec, sign: i64| -> Rat {
        v.iter().fold(Rat::zero(), |acc, (n, c)| {
            acc + c.abs() * (Rat::one() + &gammas[n - 1] * Rat::from_integer(sign.into()))
        })
    };

    let eps = seq.prefix(diff.max_index().saturating_sub(1))?;
    let middle = diff.iter().fold(Rat::zero(), |acc, (n, c)| {
        let coeff = if n == 1 {
            rat(3, 4)
        } else {
            Rat::one() - &eps[n - 2] * rat(1, 2)
        };
        acc + coeff * c.abs()
    });

    Ok(ChainReport {
        image_distance: basis.x_norm(&image_diff)?,
        upper: weighted(&image_diff, 1),
        middle,
        lower: weighted(&diff, -1),
        distance: basis.x_norm(&diff)?,
        identical: diff.is_zero(),
    })
}

/// [`verify_chain`] over many pairs, in input order.
pub fn verify_chains(
    basis: &PerturbedBasis,
    pairs: &[(SparseVec, SparseVec)],
    seq: &EpsSeq,
) -> Result<Vec<ChainReport>> {
    pairs
        .par_iter()
        .map(|(y, z)| verify_chain(basis, y, z, seq))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::int;
    use crate::maps::{orbit, q_embed};

    fn v(values: &[(i64, i64)]) -> SparseVec {
        SparseVec::from_dense(values.iter().map(|&(n, d)| rat(n, d)))
    }

    #[test]
    fn gamma_bound_examples() {
        let seq = EpsSeq::default();
        assert_eq!(gamma_bound(1, &seq).unwrap(), rat(1, 4));
        assert_eq!(gamma_bound(2, &seq).unwrap(), rat(1, 8));
        assert_eq!(gamma_bound(3, &seq).unwrap(), rat(1, 24));
        assert_eq!(gamma_bound(4, &seq).unwrap(), rat(1, 88));
        assert!(gamma_bound(0, &seq).is_err());
    }

    #[test]
    fn x_norm_examples() {
        let seq = EpsSeq::default();
        for flavor in [Flavor::InterleavedL1, Flavor::DyadicBlocks] {
            let basis = PerturbedBasis::standard(flavor, 8, &seq).unwrap();
            assert_eq!(basis.x_norm(&SparseVec::zero()).unwrap(), int(0));
            for n in 1..=8 {
                assert_eq!(
                    basis.perturbation_size(n).unwrap(),
                    basis.params.chosen[n - 1],
                    "{flavor:?} n = {n}"
                );
            }
        }
        let basis = PerturbedBasis::standard(Flavor::InterleavedL1, 8, &seq).unwrap();
        // g_1 = 1/8
        assert_eq!(
            basis.x_norm(&SparseVec::unit(1).unwrap()).unwrap(),
            rat(9, 8)
        );
    }

    #[test]
    fn unperturbed_vectors_are_isometric() {
        let seq = EpsSeq::default();
        let t = v(&[(3, 2), (-1, 5), (0, 1), (7, 3)]);
        for flavor in [Flavor::InterleavedL1, Flavor::DyadicBlocks] {
            let basis = PerturbedBasis::standard(flavor, 6, &seq).unwrap();
            assert_eq!(basis.unperturbed_norm(&t).unwrap(), l1_norm(&t));
        }
    }

    #[test]
    fn coefficients_outside_basis_are_rejected() {
        let seq = EpsSeq::default();
        let basis = PerturbedBasis::standard(Flavor::InterleavedL1, 3, &seq).unwrap();
        assert_eq!(
            basis.x_norm(&SparseVec::unit(4).unwrap()),
            Err(Error::OutsideBasis { index: 4, count: 3 })
        );
    }

    #[test]
    fn params_validation() {
        let seq = EpsSeq::default();
        assert!(PerturbationParams::new(vec![rat(1, 5)], vec![rat(1, 10)], &seq).is_ok());
        assert!(PerturbationParams::new(vec![rat(1, 4)], vec![rat(1, 10)], &seq).is_err());
        assert!(PerturbationParams::new(vec![rat(1, 5)], vec![rat(1, 5)], &seq).is_err());
        assert!(PerturbationParams::new(vec![rat(1, 5)], vec![], &seq).is_err());
    }

    #[test]
    fn r_map_examples() {
        let seq = EpsSeq::default();
        assert_eq!(
            r_map(&v(&[(2, 1), (2, 1)]), &seq).unwrap(),
            v(&[(1, 1), (-1, 2), (3, 2)])
        );
        assert!(matches!(
            r_map(&v(&[(1, 1), (1, 1)]), &seq),
            Err(Error::NotMember { set: "L", .. })
        ));
    }

    #[test]
    fn chain_at_explicit_points() {
        let seq = EpsSeq::default();
        let y = v(&[(2, 1), (2, 1)]);
        // Q(0, 6/5): (5/12)(6/5) = 1/2
        let z = q_embed(&v(&[(0, 1), (6, 5)]));
        assert_eq!(z, v(&[(6, 5), (0, 1), (6, 5)]));
        for flavor in [Flavor::InterleavedL1, Flavor::DyadicBlocks] {
            let basis = PerturbedBasis::standard(flavor, 8, &seq).unwrap();
            let r = verify_chain(&basis, &y, &z, &seq).unwrap();
            // 3/4 * 4/5 + 7/8 * 2 + 23/24 * 6/5
            assert_eq!(r.middle, rat(7, 2));
            assert!(r.passed(), "{flavor:?}: {r:?}");
            let same = verify_chain(&basis, &y, &y, &seq).unwrap();
            assert_eq!(same.image_distance, int(0));
            assert_eq!(same.middle, int(0));
            assert_eq!(same.distance, int(0));
            assert!(same.passed());
        }
    }

    #[test]
    fn r_orbit_never_stalls() {
        let seq = EpsSeq::default();
        let basis = PerturbedBasis::standard(Flavor::InterleavedL1, 40, &seq).unwrap();
        let start = v(&[(2, 1), (2, 1)]);
        let d = orbit(|y| r_map(y, &seq), &start, 30, |c| basis.x_norm(c)).unwrap();
        assert!(d.iter().all(|x| x.is_positive()));
    }
}
