//! The scalar sequence `(eps_k)` driving the contractive variant of `T`.
//!
//! With weights `w(e) = 1 - delta - e`, the sequence is defined implicitly by
//!
//! ```text
//! w(eps_{n+1}) (1 - eps_n) - delta * w(eps_1) = eta * w(eps_n)
//! ```
//!
//! which at the default parameters (`delta = 1/2`, `eps_1 = 1/4`,
//! `eta = 3/4`) reduces to `eps_{n+1} = eps_n / (4 (1 - eps_n))`. Terms are
//! produced by the solved form and memoized; [`EpsSeq::check_defining_equation`]
//! substitutes them back into the implicit equation.

use std::sync::RwLock;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{int, rat, ratio_string, Rat};

/// Default number of memoized terms.
pub const DEFAULT_CACHE_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractionParams {
    pub delta: Rat,
    pub eta: Rat,
    pub eps1: Rat,
    pub alpha: Rat,
    pub q: Rat,
}

impl Default for ContractionParams {
    fn default() -> Self {
        Self {
            delta: rat(1, 2),
            eta: rat(3, 4),
            eps1: rat(1, 4),
            alpha: rat(1, 2),
            q: int(4),
        }
    }
}

impl ContractionParams {
    pub fn with_q(q: Rat) -> Self {
        Self {
            q,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_positive() && self.delta <= Rat::one()) {
            return Err(Error::InvalidParams(format!(
                "delta = {} must lie in (0, 1]",
                self.delta
            )));
        }
        if self.eps1.is_negative() || self.eps1 >= Rat::one() {
            return Err(Error::InvalidParams(format!(
                "eps1 = {} must lie in [0, 1)",
                self.eps1
            )));
        }
        if !self.q.is_positive() {
            return Err(Error::InvalidParams(format!("q = {} must be > 0", self.q)));
        }
        Ok(())
    }

    /// True when `delta`, `eta`, `eps1`, `alpha` are the certified defaults.
    /// `q` is free; any `q >= 2` keeps `D` nonempty.
    pub fn is_certified(&self) -> bool {
        let d = Self::default();
        self.delta == d.delta && self.eta == d.eta && self.eps1 == d.eps1 && self.alpha == d.alpha
    }

    /// The weight `1 - delta - e` appearing in the definition of `D`.
    pub fn weight(&self, eps: &Rat) -> Rat {
        Rat::one() - &self.delta - eps
    }

    pub fn to_strings(&self) -> ParamStrings {
        ParamStrings {
            delta: ratio_string(&self.delta),
            eta: ratio_string(&self.eta),
            eps1: ratio_string(&self.eps1),
            alpha: ratio_string(&self.alpha),
            q: ratio_string(&self.q),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParamStrings {
    pub delta: String,
    pub eta: String,
    pub eps1: String,
    pub alpha: String,
    pub q: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Rule {
    Recurrence,
    Constant(Rat),
}

/// Memoized `eps_1, eps_2, ...` together with the parameters that produced it.
#[derive(Debug)]
pub struct EpsSeq {
    params: ContractionParams,
    rule: Rule,
    cap: usize,
    cache: RwLock<Vec<Rat>>,
}

impl Clone for EpsSeq {
    fn clone(&self) -> Self {
        let cache = self.cache.read().expect("eps cache poisoned").clone();
        Self {
            params: self.params.clone(),
            rule: self.rule.clone(),
            cap: self.cap,
            cache: RwLock::new(cache),
        }
    }
}

impl Default for EpsSeq {
    fn default() -> Self {
        Self::recurrence(ContractionParams::default()).expect("default parameters are valid")
    }
}

impl EpsSeq {
    /// The implicitly defined sequence starting at `params.eps1`.
    pub fn recurrence(params: ContractionParams) -> Result<Self> {
        params.validate()?;
        let first = params.eps1.clone();
        Ok(Self {
            params,
            rule: Rule::Recurrence,
            cap: DEFAULT_CACHE_CAP,
            cache: RwLock::new(vec![first]),
        })
    }

    /// `eps_k = value` for every `k`; used for the nonexpansive variants.
    pub fn constant(params: ContractionParams, value: Rat) -> Result<Self> {
        params.validate()?;
        if value.is_negative() || value >= Rat::one() {
            return Err(Error::InvalidParams(format!(
                "constant eps = {value} must lie in [0, 1)"
            )));
        }
        Ok(Self {
            params,
            rule: Rule::Constant(value),
            cap: DEFAULT_CACHE_CAP,
            cache: RwLock::new(Vec::new()),
        })
    }

    /// `delta = 1`, `eps = 0`: the map `S` becomes the isometry
    /// `y -> (1, 1 - y_1, y_2, ...)` on `K`.
    pub fn isometric() -> Self {
        let params = ContractionParams {
            delta: Rat::one(),
            ..ContractionParams::default()
        };
        Self::constant(params, Rat::zero()).expect("isometric parameters are valid")
    }

    pub fn with_cache_cap(mut self, cap: usize) -> Self {
        self.cap = cap.max(1);
        self
    }

    pub fn params(&self) -> &ContractionParams {
        &self.params
    }

    pub fn delta(&self) -> &Rat {
        &self.params.delta
    }

    pub fn is_recurrence(&self) -> bool {
        self.rule == Rule::Recurrence
    }

    /// Certified mode: the defining recurrence with the default parameters.
    pub fn is_certified(&self) -> bool {
        self.is_recurrence() && self.params.is_certified()
    }

    fn next_term(&self, n: usize, eps_n: &Rat) -> Result<Rat> {
        let p = &self.params;
        let one_minus = Rat::one() - eps_n;
        if one_minus.is_zero() {
            return Err(Error::Degenerate(n));
        }
        let w_next = (&p.eta * p.weight(eps_n) + &p.delta * p.weight(&p.eps1)) / one_minus;
        Ok(Rat::one() - &p.delta - w_next)
    }

    /// `eps_n` for `n >= 1`.
    pub fn eps(&self, n: usize) -> Result<Rat> {
        if n == 0 {
            return Err(Error::IndexOutOfRange(0));
        }
        if let Rule::Constant(c) = &self.rule {
            return Ok(c.clone());
        }
        {
            let cache = self.cache.read().expect("eps cache poisoned");
            if n <= cache.len() {
                return Ok(cache[n - 1].clone());
            }
        }
        let target = n.min(self.cap);
        let mut last = {
            let mut cache = self.cache.write().expect("eps cache poisoned");
            while cache.len() < target {
                let k = cache.len();
                let next = self.next_term(k, &cache[k - 1])?;
                cache.push(next);
            }
            cache[target - 1].clone()
        };
        for k in target..n {
            last = self.next_term(k, &last)?;
        }
        Ok(last)
    }

    /// `eps_1, ..., eps_n`.
    pub fn prefix(&self, n: usize) -> Result<Vec<Rat>> {
        if n == 0 {
            return Ok(Vec::new());
        }
        if let Rule::Constant(c) = &self.rule {
            return Ok(vec![c.clone(); n]);
        }
        self.eps(n.min(self.cap))?;
        let mut out: Vec<Rat> = {
            let cache = self.cache.read().expect("eps cache poisoned");
            cache[..n.min(cache.len())].to_vec()
        };
        while out.len() < n {
            let k = out.len();
            let next = self.next_term(k, &out[k - 1])?;
            out.push(next);
        }
        Ok(out)
    }

    /// `sum_{j <= n} eps_j`.
    pub fn partial_sum(&self, n: usize) -> Result<Rat> {
        if n == 0 {
            return Err(Error::IndexOutOfRange(0));
        }
        let terms = self.prefix(n)?;
        Ok(sum_over_lcm(&terms))
    }

    /// `prod_{j <= n} (1 - eps_j)`.
    pub fn partial_product(&self, n: usize) -> Result<Rat> {
        if n == 0 {
            return Err(Error::IndexOutOfRange(0));
        }
        let terms = self.prefix(n)?;
        Ok(terms
            .iter()
            .fold(Rat::one(), |acc, e| acc * (Rat::one() - e)))
    }

    /// Substitutes `eps_n`, `eps_{n+1}` into the implicit defining equation.
    /// Always true for a constant sequence, which has no defining equation.
    pub fn check_defining_equation(&self, n: usize) -> Result<bool> {
        if !self.is_recurrence() {
            return Ok(true);
        }
        let e_n = self.eps(n)?;
        let e_next = self.eps(n + 1)?;
        Ok(self.defining_equation_holds(&e_n, &e_next))
    }

    fn defining_equation_holds(&self, e_n: &Rat, e_next: &Rat) -> bool {
        let p = &self.params;
        let lhs = p.weight(e_next) * (Rat::one() - e_n) - &p.delta * p.weight(&p.eps1);
        let rhs = &p.eta * p.weight(e_n);
        lhs == rhs
    }

    /// Certifies the cached prefix `eps_1..eps_depth` against the structural
    /// invariants of the sequence.
    pub fn certify(&self, depth: usize) -> Result<EpsCertificate> {
        let terms = self.prefix(depth + 1)?;
        let half = rat(1, 2);
        let upper = Rat::one() - &self.params.delta;
        let mut cert = EpsCertificate {
            depth,
            first_equation_failure: None,
            first_halving_failure: None,
            first_bounds_failure: None,
        };
        for n in 1..=depth {
            let (e_n, e_next) = (&terms[n - 1], &terms[n]);
            if cert.first_equation_failure.is_none() && !self.defining_equation_holds(e_n, e_next) {
                cert.first_equation_failure = Some(n);
            }
            if cert.first_halving_failure.is_none()
                && !(e_next.is_positive() && *e_next < e_n * &half)
            {
                cert.first_halving_failure = Some(n);
            }
            if cert.first_bounds_failure.is_none() && !(e_n.is_positive() && *e_n < upper) {
                cert.first_bounds_failure = Some(n);
            }
        }
        Ok(cert)
    }
}

/// Exact sum of many rationals whose denominators are individually small but
/// whose lcm is huge (about 8 * 10^5 bits for the first 1000 terms).
///
/// `num-bigint` reduces with a binary gcd that is quadratic in the bit length,
/// so adding term by term with `Rat` costs seconds. Here every gcd pairs the
/// running value with one small denominator: the running denominator is kept
/// as the exact lcm, and the final numerator is reduced against each term's
/// denominator, which together carry every prime of the lcm.
fn sum_over_lcm(terms: &[Rat]) -> Rat {
    let (mut num, mut den) = (BigInt::zero(), BigInt::one());
    for t in terms {
        let d = t.denom();
        let g = gcd_big_small(&den, d);
        let d_over_g = d / &g;
        num = num * &d_over_g + t.numer() * (&den / &g);
        den *= d_over_g;
    }
    if num.is_zero() {
        return Rat::zero();
    }
    for t in terms {
        loop {
            let shared = gcd_big_small(&den, t.denom());
            if shared.is_one() {
                break;
            }
            let g = gcd_big_small(&num, &shared);
            if g.is_one() {
                break;
            }
            num /= &g;
            den /= &g;
        }
    }
    Rat::new_raw(num, den)
}

/// `gcd(big, small)` via one big-by-small remainder first.
fn gcd_big_small(big: &BigInt, small: &BigInt) -> BigInt {
    use num_integer::Integer;
    let r = big % small;
    small.gcd(&r)
}

/// First failing index (if any) of each structural property over `1..=depth`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpsCertificate {
    pub depth: usize,
    pub first_equation_failure: Option<usize>,
    /// `0 < eps_{n+1} < eps_n / 2`
    pub first_halving_failure: Option<usize>,
    /// `0 < eps_n < 1 - delta`
    pub first_bounds_failure: Option<usize>,
}

impl EpsCertificate {
    pub fn all_hold(&self) -> bool {
        self.first_equation_failure.is_none()
            && self.first_halving_failure.is_none()
            && self.first_bounds_failure.is_none()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The closed recurrence at the default parameters, kept separate from
    /// the generalized solved form used by `EpsSeq`.
    fn closed_recurrence(n: usize) -> Vec<Rat> {
        let mut out = vec![rat(1, 4)];
        while out.len() < n {
            let e = out.last().unwrap().clone();
            out.push(&e / (int(4) * (Rat::one() - &e)));
        }
        out
    }

    #[test]
    fn first_terms() {
        let seq = EpsSeq::default();
        assert_eq!(seq.eps(1).unwrap(), rat(1, 4));
        assert_eq!(seq.eps(2).unwrap(), rat(1, 12));
        assert_eq!(seq.eps(3).unwrap(), rat(1, 44));
        assert_eq!(seq.eps(0), Err(Error::IndexOutOfRange(0)));
    }

    #[test]
    fn defining_equation_by_hand() {
        // (1/2 - 1/12)(3/4) - 1/8 = 3/16 = (3/4)(1/4)
        let lhs = (rat(1, 2) - rat(1, 12)) * rat(3, 4) - rat(1, 8);
        assert_eq!(lhs, rat(3, 16));
        assert_eq!(rat(3, 4) * rat(1, 4), rat(3, 16));
        let seq = EpsSeq::default();
        assert!(seq.check_defining_equation(1).unwrap());
        assert!(seq.check_defining_equation(2).unwrap());
    }

    #[test]
    fn solved_form_matches_closed_recurrence() {
        let seq = EpsSeq::default();
        let oracle = closed_recurrence(200);
        assert_eq!(seq.prefix(200).unwrap(), oracle);
    }

    #[test]
    fn partials() {
        let seq = EpsSeq::default();
        assert_eq!(seq.partial_product(1).unwrap(), rat(3, 4));
        assert_eq!(seq.partial_product(2).unwrap(), rat(11, 16));
        assert_eq!(seq.partial_sum(2).unwrap(), rat(1, 3));
        assert_eq!(seq.partial_sum(1).unwrap(), rat(1, 4));
        assert!(seq.partial_sum(0).is_err());
    }

    #[test]
    fn lcm_sum_matches_naive_fold() {
        let seq = EpsSeq::default();
        for n in [1, 2, 7, 60] {
            let naive = seq
                .prefix(n)
                .unwrap()
                .iter()
                .fold(Rat::zero(), |a, e| a + e);
            assert_eq!(seq.partial_sum(n).unwrap(), naive);
        }
        let mixed = [rat(-3, 10), rat(7, 15), rat(1, 6), rat(-1, 3), rat(5, 12)];
        let naive = mixed.iter().fold(Rat::zero(), |a, e| a + e);
        assert_eq!(sum_over_lcm(&mixed), naive);
        assert_eq!(sum_over_lcm(&[rat(1, 2), rat(-1, 2)]), Rat::zero());
    }

    #[test]
    fn beyond_cache_cap_matches_cached_terms() {
        let capped = EpsSeq::default().with_cache_cap(5);
        let full = EpsSeq::default();
        for n in [1, 5, 6, 12, 30] {
            assert_eq!(capped.eps(n).unwrap(), full.eps(n).unwrap());
        }
        assert_eq!(capped.prefix(30).unwrap(), full.prefix(30).unwrap());
    }

    #[test]
    fn certify_defaults() {
        let cert = EpsSeq::default().certify(300).unwrap();
        assert!(cert.all_hold(), "{cert:?}");
    }

    #[test]
    fn constant_and_isometric_sequences() {
        let iso = EpsSeq::isometric();
        assert_eq!(iso.eps(7).unwrap(), int(0));
        assert_eq!(*iso.delta(), int(1));
        assert!(!iso.is_certified());
        assert_eq!(iso.partial_product(10).unwrap(), int(1));
        assert!(EpsSeq::constant(ContractionParams::default(), int(1)).is_err());
    }

    #[test]
    fn invalid_params_rejected() {
        let bad = ContractionParams {
            delta: int(0),
            ..ContractionParams::default()
        };
        assert!(EpsSeq::recurrence(bad).is_err());
        let bad_q = ContractionParams::with_q(int(0));
        assert!(EpsSeq::recurrence(bad_q).is_err());
    }

    #[test]
    fn exploratory_params_are_not_certified() {
        let p = ContractionParams {
            eta: rat(2, 3),
            ..ContractionParams::default()
        };
        let seq = EpsSeq::recurrence(p).unwrap();
        assert!(!seq.is_certified());
        // the implicit equation still holds for whatever the solved form produced
        assert!(seq.check_defining_equation(3).unwrap());
    }

    #[test]
    fn concurrent_readers_see_identical_terms() {
        let seq = EpsSeq::default();
        let results: Vec<Rat> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..4)
                .map(|i| {
                    let seq = &seq;
                    s.spawn(move || seq.eps(50 + i * 10).unwrap())
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        for (i, r) in results.iter().enumerate() {
            assert_eq!(*r, closed_recurrence(50 + i * 10)[49 + i * 10]);
        }
    }
}
