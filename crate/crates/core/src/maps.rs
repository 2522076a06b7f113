//! The fixed-point-free maps on `l1` and the exact checks run against them.
//!
//! All maps accept any finitely supported vector; whether the input lies in
//! the set a map is meant to act on is decided by [`crate::sets`].

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::epsilon::EpsSeq;
use crate::error::{Error, Result};
use crate::exact::{l1_norm, sum_coords, Norm, Rat, SparseVec};

/// Orbits longer than this are refused; support grows by one per step.
pub const DEFAULT_ORBIT_CAP: usize = 1000;

/// `x -> (1 - sum x_n, x_1, x_2, ...)`.
pub fn t_simple(x: &SparseVec) -> SparseVec {
    let mut out = x.shift_right(1);
    out.set(1, Rat::one() - sum_coords(x))
        .expect("index 1 is valid");
    out
}

/// `x -> (delta (1 - sum x_n), (1 - eps_1) x_1, (1 - eps_2) x_2, ...)`.
pub fn t_general(x: &SparseVec, seq: &EpsSeq) -> Result<SparseVec> {
    let eps = seq.prefix(x.max_index())?;
    let mut out = SparseVec::from_entries(
        x.iter()
            .map(|(k, v)| (k + 1, (Rat::one() - &eps[k - 1]) * v)),
    )?;
    out.set(1, seq.delta() * (Rat::one() - sum_coords(x)))?;
    Ok(out)
}

/// `x -> (sum x_n, x_1, x_2, ...)`, an isometry from the equivalent norm onto
/// `V = { y : y_1 = sum_{n>=2} y_n }` with the `l1` norm.
pub fn q_embed(x: &SparseVec) -> SparseVec {
    let mut out = x.shift_right(1);
    out.set(1, sum_coords(x)).expect("index 1 is valid");
    out
}

/// `y -> (y_2, y_3, ...)`, defined on `V` only.
pub fn q_inverse(y: &SparseVec) -> Result<SparseVec> {
    require_in_range_of_q(y)?;
    Ok(y.shift_left(1))
}

pub fn in_range_of_q(y: &SparseVec) -> bool {
    y.get(1) == tail_sum(y)
}

fn require_in_range_of_q(y: &SparseVec) -> Result<()> {
    let (first, tail) = (y.get(1), tail_sum(y));
    if first == tail {
        Ok(())
    } else {
        Err(Error::NotInRangeOfQ {
            first: Box::new(first),
            tail: Box::new(tail),
        })
    }
}

/// `sum_{n >= 2} y_n`.
pub fn tail_sum(y: &SparseVec) -> Rat {
    y.iter()
        .filter(|(i, _)| *i >= 2)
        .fold(Rat::zero(), |acc, (_, v)| acc + v)
}

/// `S = Q T Q^{-1}` on `V`.
pub fn s_map(y: &SparseVec, seq: &EpsSeq) -> Result<SparseVec> {
    let x = q_inverse(y)?;
    Ok(q_embed(&t_general(&x, seq)?))
}

/// The coordinate form `(1, delta (1 - y_1), (1 - eps_1) y_2, (1 - eps_2) y_3, ...)`.
///
/// Agrees with [`s_map`] on `L` (contractive parameters) and on all of `V`
/// when `delta = 1` and every `eps_k = 0`. Off those sets the first
/// coordinate differs; this is an independent route, not a replacement.
pub fn s_closed_form(y: &SparseVec, seq: &EpsSeq) -> Result<SparseVec> {
    let eps = seq.prefix(y.max_index().saturating_sub(1))?;
    let mut out = SparseVec::from_entries(
        y.iter()
            .filter(|(i, _)| *i >= 2)
            .map(|(i, v)| (i + 1, (Rat::one() - &eps[i - 2]) * v)),
    )?;
    out.set(1, Rat::one())?;
    out.set(2, seq.delta() * (Rat::one() - y.get(1)))?;
    Ok(out)
}

/// The right shift `x -> (0, x_1, x_2, ...)`.
pub fn f_shift(x: &SparseVec) -> SparseVec {
    x.shift_right(1)
}

/// `delta |sum (y_n - x_n)| + sum (1 - eps_n) |x_n - y_n|`, the closed form
/// of `||Tx - Ty||` in the equivalent norm for `x, y` in `D`.
pub fn t_distance_on_d(x: &SparseVec, y: &SparseVec, seq: &EpsSeq) -> Result<Rat> {
    let diff = x - y;
    let eps = seq.prefix(diff.max_index())?;
    let weighted = diff.iter().fold(Rat::zero(), |acc, (n, v)| {
        acc + (Rat::one() - &eps[n - 1]) * v.abs()
    });
    Ok(seq.delta() * sum_coords(&diff).abs() + weighted)
}

/// `delta |z_1 - y_1| + sum (1 - eps_n) |y_{n+1} - z_{n+1}|`, the closed form
/// of `||Sy - Sz||_1` for `y, z` in `L`.
pub fn s_distance_on_l(y: &SparseVec, z: &SparseVec, seq: &EpsSeq) -> Result<Rat> {
    let diff = y - z;
    let eps = seq.prefix(diff.max_index().saturating_sub(1))?;
    let weighted = diff
        .iter()
        .filter(|(i, _)| *i >= 2)
        .fold(Rat::zero(), |acc, (i, v)| {
            acc + (Rat::one() - &eps[i - 2]) * v.abs()
        });
    Ok(seq.delta() * diff.get(1).abs() + weighted)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// `||Tx - Ty|| = ||x - y||`
    Isometric,
    /// `||Tx - Ty|| < ||x - y||`
    Strict,
    /// `||Tx - Ty|| > ||x - y||`
    Violation,
}

impl Verdict {
    fn classify(image_distance: &Rat, distance: &Rat) -> Self {
        match image_distance.cmp(distance) {
            std::cmp::Ordering::Equal => Verdict::Isometric,
            std::cmp::Ordering::Less => Verdict::Strict,
            std::cmp::Ordering::Greater => Verdict::Violation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairOutcome {
    pub image_distance: Rat,
    pub distance: Rat,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonexpansiveReport {
    pub norm: Norm,
    pub outcomes: Vec<PairOutcome>,
}

impl NonexpansiveReport {
    pub fn is_nonexpansive(&self) -> bool {
        self.first_violation().is_none()
    }

    pub fn first_violation(&self) -> Option<(usize, &PairOutcome)> {
        self.outcomes
            .iter()
            .enumerate()
            .find(|(_, o)| o.verdict == Verdict::Violation)
    }

    pub fn all_isometric(&self) -> bool {
        self.outcomes
            .iter()
            .all(|o| o.verdict == Verdict::Isometric)
    }

    /// Every pair at positive distance is strictly contracted.
    pub fn strict_on_distinct(&self) -> bool {
        self.outcomes
            .iter()
            .all(|o| o.distance.is_zero() || o.verdict == Verdict::Strict)
    }

    /// First pair at positive distance that is not strictly contracted.
    pub fn first_non_strict(&self) -> Option<(usize, &PairOutcome)> {
        self.outcomes
            .iter()
            .enumerate()
            .find(|(_, o)| !o.distance.is_zero() && o.verdict != Verdict::Strict)
    }
}

/// Evaluates `||Tx - Ty||` against `||x - y||` for every pair.
pub fn check_nonexpansive<M>(
    map: M,
    norm: Norm,
    pairs: &[(SparseVec, SparseVec)],
) -> Result<NonexpansiveReport>
where
    M: Fn(&SparseVec) -> Result<SparseVec> + Sync,
{
    let outcomes = pairs
        .par_iter()
        .map(|(x, y)| {
            let image_distance = norm.eval(&(&map(x)? - &map(y)?));
            let distance = norm.eval(&(x - y));
            let verdict = Verdict::classify(&image_distance, &distance);
            Ok(PairOutcome {
                image_distance,
                distance,
                verdict,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NonexpansiveReport { norm, outcomes })
}

/// Displacements `d_k = ||map^{k+1}(x0) - map^k(x0)||` for `k = 0..steps`.
pub fn orbit<M, N>(mut map: M, x0: &SparseVec, steps: usize, mut norm: N) -> Result<Vec<Rat>>
where
    M: FnMut(&SparseVec) -> Result<SparseVec>,
    N: FnMut(&SparseVec) -> Result<Rat>,
{
    if steps == 0 || steps > DEFAULT_ORBIT_CAP {
        return Err(Error::InvalidParams(format!(
            "orbit length {steps} must lie in 1..={DEFAULT_ORBIT_CAP}"
        )));
    }
    let mut current = x0.clone();
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let next = map(&current)?;
        out.push(norm(&(&next - &current))?);
        current = next;
    }
    Ok(out)
}

/// Why a finitely supported fixed point of `T` cannot exist.
///
/// A fixed point satisfies `x_{k+1} = x_1 prod_{j<=k} (1 - eps_j)`. With
/// support inside `1..=n`, `x_{n+1} = 0` forces `x_1 = 0` as soon as the
/// product is nonzero, and then `x_1 = delta (1 - 0)` forces `delta = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedPointObstruction {
    pub support: usize,
    pub product: Rat,
    /// The product is positive, so `x_1` must vanish.
    pub forces_zero_first_coordinate: bool,
    /// `delta > 0` contradicts `x_1 = delta`.
    pub contradiction: bool,
}

pub fn fixed_point_obstruction(seq: &EpsSeq, support: usize) -> Result<FixedPointObstruction> {
    let product = seq.partial_product(support)?;
    let forces_zero_first_coordinate = product.is_positive();
    Ok(FixedPointObstruction {
        support,
        contradiction: forces_zero_first_coordinate && seq.delta().is_positive(),
        forces_zero_first_coordinate,
        product,
    })
}

/// `||x||_1`, wrapped for use as an orbit norm.
pub fn l1_displacement(v: &SparseVec) -> Result<Rat> {
    Ok(l1_norm(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{eq_norm, int, rat};

    fn v(values: &[(i64, i64)]) -> SparseVec {
        SparseVec::from_dense(values.iter().map(|&(n, d)| rat(n, d)))
    }

    fn e(n: usize) -> SparseVec {
        SparseVec::unit(n).unwrap()
    }

    #[test]
    fn t_simple_examples() {
        assert_eq!(t_simple(&SparseVec::zero()), e(1));
        assert_eq!(
            t_simple(&v(&[(1, 2), (1, 2)])),
            v(&[(0, 1), (1, 2), (1, 2)])
        );
        assert_eq!(t_simple(&e(1)), v(&[(0, 1), (1, 1)]));
        assert_eq!(sum_coords(&t_simple(&v(&[(1, 3), (1, 5)]))), int(1));
    }

    #[test]
    fn t_general_examples() {
        let seq = EpsSeq::default();
        assert_eq!(t_general(&SparseVec::zero(), &seq).unwrap(), v(&[(1, 2)]));
        assert_eq!(
            t_general(&v(&[(2, 1)]), &seq).unwrap(),
            v(&[(-1, 2), (3, 2)])
        );
        assert_eq!(
            t_general(&v(&[(1, 2), (1, 2)]), &seq).unwrap(),
            v(&[(0, 1), (3, 8), (11, 24)])
        );
    }

    #[test]
    fn q_examples() {
        assert_eq!(q_embed(&SparseVec::zero()), SparseVec::zero());
        assert_eq!(q_embed(&e(1)), v(&[(1, 1), (1, 1)]));
        assert_eq!(
            q_embed(&v(&[(1, 1), (-1, 1)])),
            v(&[(0, 1), (1, 1), (-1, 1)])
        );
        let x = v(&[(3, 7), (-2, 5), (0, 1), (9, 4)]);
        assert_eq!(q_inverse(&q_embed(&x)).unwrap(), x);
        assert_eq!(l1_norm(&q_embed(&x)), eq_norm(&x));
    }

    #[test]
    fn q_inverse_rejects_outside_v() {
        let err = q_inverse(&v(&[(1, 1), (2, 1)])).unwrap_err();
        assert_eq!(
            err,
            Error::NotInRangeOfQ {
                first: Box::new(int(1)),
                tail: Box::new(int(2))
            }
        );
    }

    #[test]
    fn s_map_examples() {
        let iso = EpsSeq::isometric();
        assert_eq!(
            s_map(&v(&[(1, 1), (1, 1)]), &iso).unwrap(),
            v(&[(1, 1), (0, 1), (1, 1)])
        );
        assert_eq!(
            s_map(&SparseVec::zero(), &iso).unwrap(),
            v(&[(1, 1), (1, 1)])
        );
        let seq = EpsSeq::default();
        assert_eq!(
            s_map(&v(&[(2, 1), (2, 1)]), &seq).unwrap(),
            v(&[(1, 1), (-1, 2), (3, 2)])
        );
        assert!(s_map(&v(&[(1, 1)]), &seq).is_err());
    }

    #[test]
    fn closed_form_agrees_with_conjugation_at_known_points() {
        let seq = EpsSeq::default();
        let y = v(&[(2, 1), (2, 1)]);
        assert_eq!(s_closed_form(&y, &seq).unwrap(), s_map(&y, &seq).unwrap());
        let iso = EpsSeq::isometric();
        let k = v(&[(1, 2), (1, 4), (1, 4)]);
        assert_eq!(s_closed_form(&k, &iso).unwrap(), s_map(&k, &iso).unwrap());
    }

    #[test]
    fn f_shift_examples() {
        assert_eq!(f_shift(&e(1)), e(2));
        assert_eq!(f_shift(&SparseVec::zero()), SparseVec::zero());
        assert_eq!(f_shift(&v(&[(1, 3), (2, 3)])), v(&[(0, 1), (1, 3), (2, 3)]));
    }

    #[test]
    fn nonexpansive_examples() {
        let report = check_nonexpansive(
            |x| Ok(t_simple(x)),
            Norm::Equivalent,
            &[(SparseVec::zero(), e(1))],
        )
        .unwrap();
        assert_eq!(report.outcomes[0].image_distance, int(2));
        assert_eq!(report.outcomes[0].distance, int(2));
        assert_eq!(report.outcomes[0].verdict, Verdict::Isometric);

        let seq = EpsSeq::default();
        let report = check_nonexpansive(
            |x| t_general(x, &seq),
            Norm::Equivalent,
            &[(v(&[(2, 1)]), SparseVec::zero())],
        )
        .unwrap();
        assert_eq!(report.outcomes[0].image_distance, int(3));
        assert_eq!(report.outcomes[0].distance, int(4));
        assert_eq!(report.outcomes[0].verdict, Verdict::Strict);

        let x = v(&[(1, 5), (2, 7)]);
        let report =
            check_nonexpansive(|x| t_general(x, &seq), Norm::L1, &[(x.clone(), x)]).unwrap();
        assert_eq!(report.outcomes[0].image_distance, int(0));
        assert_eq!(report.outcomes[0].distance, int(0));
        assert!(report.strict_on_distinct());
    }

    #[test]
    fn violations_are_reported_not_raised() {
        let doubling = |x: &SparseVec| Ok(x.scale(&int(2)));
        let report = check_nonexpansive(doubling, Norm::L1, &[(e(1), SparseVec::zero())]).unwrap();
        assert!(!report.is_nonexpansive());
        assert_eq!(report.first_violation().unwrap().0, 0);
    }

    #[test]
    fn orbit_examples() {
        let iso = EpsSeq::isometric();
        let d = orbit(|y| s_map(y, &iso), &SparseVec::zero(), 25, l1_displacement).unwrap();
        assert!(d.iter().all(|x| *x == int(2)));

        let seq = EpsSeq::default();
        let d = orbit(
            |x| t_general(x, &seq),
            &v(&[(2, 1)]),
            40,
            |x| Ok(eq_norm(x)),
        )
        .unwrap();
        assert!(d.iter().all(|x| x.is_positive()));
        assert!(d.windows(2).all(|w| w[1] <= w[0]));

        let d = orbit(|x| Ok(f_shift(x)), &e(1), 10, l1_displacement).unwrap();
        assert!(d.iter().all(|x| *x == int(2)));

        assert!(orbit(|x| Ok(f_shift(x)), &e(1), 0, l1_displacement).is_err());
    }

    #[test]
    fn fixed_point_obstruction_holds() {
        let seq = EpsSeq::default();
        for n in [1, 2, 10, 100] {
            let ob = fixed_point_obstruction(&seq, n).unwrap();
            assert!(ob.product > rat(33, 50));
            assert!(ob.contradiction);
        }
    }

    #[test]
    fn distance_formulas_at_known_points() {
        let seq = EpsSeq::default();
        // x = (2), y = (0, 6/5) are both in D at the defaults
        let x = v(&[(2, 1)]);
        let y = v(&[(0, 1), (6, 5)]);
        let direct = eq_norm(&(&t_general(&x, &seq).unwrap() - &t_general(&y, &seq).unwrap()));
        assert_eq!(t_distance_on_d(&x, &y, &seq).unwrap(), direct);
        let (qy, qz) = (q_embed(&x), q_embed(&y));
        let direct = l1_norm(&(&s_map(&qy, &seq).unwrap() - &s_map(&qz, &seq).unwrap()));
        assert_eq!(s_distance_on_l(&qy, &qz, &seq).unwrap(), direct);
    }
}
