//! Seeded verification suites and their reports.
//!
//! Every suite draws its samples from a ChaCha stream derived from the
//! configured seed and the suite, and sorts its checks by id, so a given
//! configuration always yields the same report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use num_traits::{One, Signed, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dual::{pair, pair_centred, pair_direct, w_diametral_witness, weak_star_witness, CSeq};
use crate::epsilon::{ContractionParams, EpsSeq, ParamStrings};
use crate::error::{Error, Result};
use crate::exact::{
    eq_norm, int, l1_norm, lim_norm, rat, ratio_string, sum_coords, Norm, Rat, SparseVec,
};
use crate::maps::{
    check_nonexpansive, f_shift, fixed_point_obstruction, in_range_of_q, orbit, q_embed, q_inverse,
    s_closed_form, s_distance_on_l, s_map, t_distance_on_d, t_general, t_simple,
    NonexpansiveReport,
};
use crate::perturbation::{
    gamma_bound, r_map, verify_chains, Flavor, PerturbedBasis, DEFAULT_BASIS_COUNT,
};
use crate::rademacher::{
    diametral_check, rademacher, rademacher_recurrence, sign_sum_by_integration, sign_sum_identity,
    weak_kk_witness, SIGN_SUM_CAP,
};
use crate::sets::{sample, verify_invariance, ConvexSet, InvarianceReport};

pub const REPORT_VERSION: u32 = 1;

const SUPPORT_CAP: usize = 8;
pub const S_ORBIT_STARTS: usize = 10;
pub const S_ORBIT_STEPS: usize = 100;
pub const R_ORBIT_STARTS: usize = 3;
pub const R_ORBIT_STEPS: usize = 200;
const CHAIN_SUPPORT_CAP: usize = 12;
pub const RECURRENCE_LEVELS: u32 = 16;
pub const CONVEX_LISTS: usize = 100;
const WEAK_KK_MAX_LEVEL: u32 = 8;
pub const WEAK_STAR_DEPTH: usize = 100;
const OBSTRUCTION_SUPPORTS: [usize; 8] = [1, 2, 3, 5, 10, 50, 100, 1000];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, clap::ValueEnum)]
pub enum Suite {
    Section1,
    Section2,
    Section3,
    Section4,
    Section5,
    Section6,
    Section7,
    All,
}

impl Suite {
    pub const SECTIONS: [Suite; 7] = [
        Suite::Section1,
        Suite::Section2,
        Suite::Section3,
        Suite::Section4,
        Suite::Section5,
        Suite::Section6,
        Suite::Section7,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Section1 => "section1",
            Suite::Section2 => "section2",
            Suite::Section3 => "section3",
            Suite::Section4 => "section4",
            Suite::Section5 => "section5",
            Suite::Section6 => "section6",
            Suite::Section7 => "section7",
            Suite::All => "all",
        }
    }

    fn stream_base(self) -> u64 {
        (self as u64 + 1) << 8
    }

    fn run(self, ctx: &Ctx) -> Result<Vec<Check>> {
        match self {
            Suite::Section1 => section1(ctx),
            Suite::Section2 => section2(ctx),
            Suite::Section3 => section3(ctx),
            Suite::Section4 => section4(ctx),
            Suite::Section5 => section5(ctx),
            Suite::Section6 => section6(ctx),
            Suite::Section7 => section7(ctx),
            Suite::All => unreachable!("expanded before running"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteConfig {
    pub suites: Vec<Suite>,
    pub seed: u64,
    pub samples: usize,
    pub depth: usize,
    pub n_rademacher: usize,
    /// Map parameters; `q` lives here.
    pub params: ContractionParams,
    pub format: Format,
    /// Record wall-clock time per suite. Off by default so reports are reproducible.
    pub timings: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            suites: vec![Suite::All],
            seed: 0,
            samples: 500,
            depth: 1000,
            n_rademacher: 12,
            params: ContractionParams::default(),
            format: Format::Text,
            timings: false,
        }
    }
}

impl SuiteConfig {
    pub fn with_suites(suites: &[Suite]) -> Self {
        Self {
            suites: suites.to_vec(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let fail = |msg: String| Err(Error::InvalidParams(msg));
        if self.suites.is_empty() {
            return fail("no suite selected".into());
        }
        if self.samples == 0 {
            return fail("samples must be >= 1".into());
        }
        if self.depth == 0 {
            return fail("depth must be >= 1".into());
        }
        if !(1..=SIGN_SUM_CAP).contains(&self.n_rademacher) {
            return fail(format!(
                "n-rademacher = {} must lie in 1..={SIGN_SUM_CAP}",
                self.n_rademacher
            ));
        }
        if self.params.q < int(2) {
            return fail(format!("q = {} must be >= 2", self.params.q));
        }
        Ok(())
    }

    /// Selected sections in order, with `all` expanded and duplicates removed.
    pub fn selected(&self) -> Vec<Suite> {
        let mut out: Vec<Suite> = self
            .suites
            .iter()
            .flat_map(|&s| {
                if s == Suite::All {
                    Suite::SECTIONS.to_vec()
                } else {
                    vec![s]
                }
            })
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn mode(&self) -> Mode {
        if self.params.is_certified() {
            Mode::Certified
        } else {
            Mode::Exploratory
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Certified,
    Exploratory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        }
    }
}

pub type Witness = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub id: String,
    pub paper_anchor: String,
    pub status: Status,
    pub witness: Option<Witness>,
}

impl Check {
    fn from_result(id: &str, anchor: &str, outcome: Result<Outcome>) -> Self {
        let (status, witness) = match outcome {
            Ok(o) => (if o.holds { Status::Pass } else { Status::Fail }, o.witness),
            Err(e) => (
                Status::Fail,
                Witness::from([("error".into(), e.to_string())]),
            ),
        };
        Self {
            id: id.into(),
            paper_anchor: anchor.into(),
            status,
            witness: (!witness.is_empty()).then_some(witness),
        }
    }

    fn skipped(id: &str, anchor: &str, reason: &str) -> Self {
        Self {
            id: id.into(),
            paper_anchor: anchor.into(),
            status: Status::Skipped,
            witness: Some(Witness::from([("reason".into(), reason.into())])),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub checks: Vec<Check>,
    pub elapsed_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigEcho {
    pub suites: Vec<String>,
    pub seed: u64,
    pub samples: usize,
    pub depth: usize,
    pub q: String,
    pub n_rademacher: usize,
    pub params: ParamStrings,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Report {
    pub version: u32,
    pub config: ConfigEcho,
    pub suites: Vec<SuiteReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

impl Report {
    pub fn checks(&self) -> impl Iterator<Item = (&str, &Check)> {
        self.suites
            .iter()
            .flat_map(|s| s.checks.iter().map(move |c| (s.name.as_str(), c)))
    }

    pub fn find(&self, suite: Suite, id: &str) -> Option<&Check> {
        self.checks()
            .find(|(s, c)| *s == suite.name() && c.id == id)
            .map(|(_, c)| c)
    }

    pub fn tally(&self) -> Tally {
        self.checks().fold(Tally::default(), |mut t, (_, c)| {
            match c.status {
                Status::Pass => t.passed += 1,
                Status::Fail => t.failed += 1,
                Status::Skipped => t.skipped += 1,
            }
            t
        })
    }

    pub fn all_passed(&self) -> bool {
        self.tally().failed == 0
    }

    /// `0` when every check passed or failures are exploratory, `1` otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_passed() || self.config.mode == Mode::Exploratory {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let c = &self.config;
        let _ = writeln!(
            out,
            "seed={} samples={} depth={} q={} n-rademacher={} mode={}",
            c.seed,
            c.samples,
            c.depth,
            c.q,
            c.n_rademacher,
            match c.mode {
                Mode::Certified => "certified",
                Mode::Exploratory => "exploratory",
            }
        );
        for suite in &self.suites {
            let _ = match suite.elapsed_ms {
                Some(ms) => writeln!(out, "\n{} ({ms} ms)", suite.name),
                None => writeln!(out, "\n{}", suite.name),
            };
            for check in &suite.checks {
                let _ = writeln!(out, "  {}  {}", check.status.label(), check.id);
                if check.status != Status::Pass {
                    for (k, v) in check.witness.iter().flatten() {
                        let _ = writeln!(out, "          {k} = {v}");
                    }
                }
            }
        }
        let t = self.tally();
        let _ = writeln!(
            out,
            "\n{} passed, {} failed, {} skipped",
            t.passed, t.failed, t.skipped
        );
        out
    }
}

/// Runs the selected suites. Configuration errors surface before any suite starts.
pub fn run(config: &SuiteConfig) -> Result<Report> {
    config.validate()?;
    let ctx = Ctx {
        config,
        seq: EpsSeq::recurrence(config.params.clone())?,
    };
    let suites = config
        .selected()
        .par_iter()
        .map(|&suite| {
            let start = Instant::now();
            let mut checks = suite
                .run(&ctx)
                .unwrap_or_else(|e| vec![Check::from_result("setup", "sample generation", Err(e))]);
            checks.sort_by(|a, b| a.id.cmp(&b.id));
            SuiteReport {
                name: suite.name().into(),
                checks,
                elapsed_ms: config.timings.then(|| start.elapsed().as_millis() as u64),
            }
        })
        .collect();
    Ok(Report {
        version: REPORT_VERSION,
        config: ConfigEcho {
            suites: config.selected().iter().map(|s| s.name().into()).collect(),
            seed: config.seed,
            samples: config.samples,
            depth: config.depth,
            q: ratio_string(&config.params.q),
            n_rademacher: config.n_rademacher,
            params: config.params.to_strings(),
            mode: config.mode(),
        },
        suites,
    })
}

struct Ctx<'a> {
    config: &'a SuiteConfig,
    seq: EpsSeq,
}

impl Ctx<'_> {
    /// An independent seed for each (suite, stream).
    fn seed(&self, suite: Suite, stream: u64) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(suite.stream_base() + stream);
        rng.next_u64()
    }

    fn rng(&self, suite: Suite, stream: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed(suite, stream))
    }

    fn samples(&self) -> usize {
        self.config.samples
    }

    fn points(
        &self,
        set: ConvexSet,
        suite: Suite,
        stream: u64,
        cap: usize,
    ) -> Result<Vec<SparseVec>> {
        sample(
            set,
            &self.seq,
            self.seed(suite, stream),
            2 * self.samples(),
            cap,
        )
    }
}

// ---------------------------------------------------------------------------
// outcomes

#[derive(Debug, Clone, Copy)]
enum Rel {
    Eq,
    Lt,
    Le,
    Gt,
}

impl Rel {
    fn symbol(self) -> &'static str {
        match self {
            Rel::Eq => "=",
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Gt => ">",
        }
    }

    fn holds(self, lhs: &Rat, rhs: &Rat) -> bool {
        match self {
            Rel::Eq => lhs == rhs,
            Rel::Lt => lhs < rhs,
            Rel::Le => lhs <= rhs,
            Rel::Gt => lhs > rhs,
        }
    }
}

#[derive(Debug, Clone)]
struct Outcome {
    holds: bool,
    witness: Witness,
}

impl Outcome {
    fn new(holds: bool) -> Self {
        Self {
            holds,
            witness: Witness::new(),
        }
    }

    fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.witness.insert(key.into(), value.to_string());
        self
    }

    fn and(self, other: Outcome) -> Outcome {
        if self.holds {
            other
        } else {
            self
        }
    }
}

fn rel(lhs: &Rat, r: Rel, rhs: &Rat) -> Outcome {
    Outcome::new(r.holds(lhs, rhs))
        .with("lhs", ratio_string(lhs))
        .with("relation", r.symbol())
        .with("rhs", ratio_string(rhs))
}

fn render(v: &SparseVec) -> String {
    let body: Vec<String> = v
        .to_ratio_strings()
        .into_iter()
        .map(|(i, s)| format!("{i}: {s}"))
        .collect();
    format!("{{{}}}", body.join(", "))
}

fn vec_eq(lhs: &SparseVec, rhs: &SparseVec) -> Outcome {
    Outcome::new(lhs == rhs)
        .with("lhs", render(lhs))
        .with("relation", "=")
        .with("rhs", render(rhs))
}

/// Evaluates `f` on every item in parallel; reports the first failure in
/// input order, or the number of items checked.
fn over<T, F>(items: &[T], f: F) -> Result<Outcome>
where
    T: Sync,
    F: Fn(&T) -> Result<Outcome> + Sync,
{
    let results: Vec<Result<Outcome>> = items.par_iter().map(&f).collect();
    let checked = items.len();
    for (i, r) in results.into_iter().enumerate() {
        let failure = match r {
            Ok(o) if o.holds => continue,
            Ok(o) => o,
            Err(e) => Outcome::new(false).with("error", e),
        };
        return Ok(failure.with("sample", i).with("checked", checked));
    }
    Ok(Outcome::new(true).with("checked", checked))
}

fn invariance(report: Result<InvarianceReport>) -> Result<Outcome> {
    let report = report?;
    Ok(match report.failures.first() {
        None => Outcome::new(true).with("checked", report.checked),
        Some(f) => Outcome::new(false)
            .with("checked", report.checked)
            .with("sample", f.index)
            .with("image", render(&f.image))
            .with("violation", &f.violation),
    })
}

fn nonexpansive(report: Result<NonexpansiveReport>) -> Result<Outcome> {
    let report = report?;
    let checked = report.outcomes.len();
    Ok(match report.first_violation() {
        None => Outcome::new(true).with("checked", checked),
        Some((i, o)) => rel(&o.image_distance, Rel::Le, &o.distance)
            .with("sample", i)
            .with("checked", checked),
    })
}

fn membership(set: ConvexSet, points: &[SparseVec], seq: &EpsSeq) -> Result<Outcome> {
    over(points, |x| {
        Ok(match set.check(x, seq)? {
            None => Outcome::new(true),
            Some(v) => Outcome::new(false)
                .with("point", render(x))
                .with("violation", v),
        })
    })
}

fn pairs(points: &[SparseVec]) -> Vec<(SparseVec, SparseVec)> {
    points
        .chunks_exact(2)
        .map(|p| (p[0].clone(), p[1].clone()))
        .collect()
}

/// Signed vectors with up to `max_len` coordinates `num / den`,
/// `|num|, den <= 100`.
fn random_vecs(rng: &mut ChaCha8Rng, count: usize, max_len: usize) -> Vec<SparseVec> {
    (0..count)
        .map(|_| {
            let len = rng.random_range(1..=max_len);
            SparseVec::from_dense((0..len).map(|_| {
                Rat::new(
                    rng.random_range(-100..=100).into(),
                    rng.random_range(1..=100).into(),
                )
            }))
        })
        .collect()
}

/// A convex coefficient list of length `len` with integer weights in `0..=20`.
fn random_convex(rng: &mut ChaCha8Rng, len: usize) -> Vec<Rat> {
    loop {
        let weights: Vec<i64> = (0..len).map(|_| rng.random_range(0..=20)).collect();
        let total: i64 = weights.iter().sum();
        if total > 0 {
            return weights.into_iter().map(|w| rat(w, total)).collect();
        }
    }
}

// ---------------------------------------------------------------------------
// suites

fn section1(ctx: &Ctx) -> Result<Vec<Check>> {
    let s = Suite::Section1;
    let seq = &ctx.seq;
    let pts = ctx.points(ConvexSet::C, s, 0, SUPPORT_CAP)?;
    let pp = pairs(&pts);
    let vecs = random_vecs(&mut ctx.rng(s, 1), 2 * ctx.samples(), 10);
    let vpairs = pairs(&vecs);
    let scalars: Vec<Rat> = {
        let mut rng = ctx.rng(s, 2);
        (0..vpairs.len())
            .map(|_| rat(rng.random_range(-50..=50), rng.random_range(1..=50)))
            .collect()
    };
    let t = |x: &SparseVec| Ok(t_simple(x));
    let one = Rat::one();
    let zero = Rat::zero();

    Ok(vec![
        Check::from_result(
            "c_samples_are_members",
            "C: nonnegative sequences with coordinate sum at most 1",
            membership(ConvexSet::C, &pts, seq),
        ),
        Check::from_result(
            "t_maps_c_into_c",
            "T maps C into C",
            invariance(verify_invariance(ConvexSet::C, t, &pts, seq)),
        ),
        Check::from_result(
            "t_coordinate_sum_is_one",
            "sum of (Tx)_n equals 1 for x in C",
            over(&pts, |x| Ok(rel(&sum_coords(&t_simple(x)), Rel::Eq, &one))),
        ),
        Check::from_result(
            "t_isometry_equivalent_norm",
            "||Tx - Ty|| = ||x - y|| on C for the equivalent norm",
            over(&pp, |(x, y)| {
                Ok(rel(
                    &eq_norm(&(&t_simple(x) - &t_simple(y))),
                    Rel::Eq,
                    &eq_norm(&(x - y)),
                ))
            }),
        ),
        Check::from_result(
            "t_has_no_fixed_point",
            "T has no fixed point in C",
            over(&pts, |x| {
                Ok(rel(&eq_norm(&(&t_simple(x) - x)), Rel::Gt, &zero))
            }),
        ),
        Check::from_result(
            "norm_identity",
            "||x|| = |sum x_n| + ||x||_1",
            over(&vecs, |x| {
                let rhs = sum_coords(x).abs() + l1_norm(x);
                Ok(rel(&eq_norm(x), Rel::Eq, &rhs))
            }),
        ),
        Check::from_result(
            "norm_equivalence_bounds",
            "the equivalent norm and Lim's norm are equivalent to the l1 norm",
            over(&vecs, |x| {
                let (l1, eq, lim) = (l1_norm(x), eq_norm(x), lim_norm(x));
                Ok(rel(&l1, Rel::Le, &eq)
                    .and(rel(&eq, Rel::Le, &(&l1 * int(2))))
                    .and(rel(&lim, Rel::Le, &l1))
                    .and(rel(&l1, Rel::Le, &(&lim * int(2)))))
            }),
        ),
        Check::from_result(
            "norm_axioms",
            "triangle inequality and homogeneity for all three norms",
            over(&(0..vpairs.len()).collect::<Vec<_>>(), |&i| {
                let (x, y) = &vpairs[i];
                let c = &scalars[i];
                let mut out = Outcome::new(true);
                for norm in [Norm::L1, Norm::Equivalent, Norm::Lim] {
                    let sum = norm.eval(&(x + y));
                    let bound = norm.eval(x) + norm.eval(y);
                    let scaled = norm.eval(&x.scale(c));
                    let expected = c.abs() * norm.eval(x);
                    out = out
                        .and(rel(&sum, Rel::Le, &bound).with("norm", norm.name()))
                        .and(rel(&scaled, Rel::Eq, &expected).with("norm", norm.name()));
                }
                Ok(out)
            }),
        ),
    ])
}

/// `S = Q T Q^{-1}` with the isometric `T`.
fn s_isometric(y: &SparseVec) -> Result<SparseVec> {
    Ok(q_embed(&t_simple(&q_inverse(y)?)))
}

fn section2(ctx: &Ctx) -> Result<Vec<Check>> {
    let s = Suite::Section2;
    let seq = &ctx.seq;
    let vecs = random_vecs(&mut ctx.rng(s, 0), ctx.samples(), 10);
    let kpts = ctx.points(ConvexSet::K, s, 1, SUPPORT_CAP + 1)?;
    let kp = pairs(&kpts);
    let starts = &kpts[..S_ORBIT_STARTS.min(kpts.len())];

    Ok(vec![
        Check::from_result(
            "q_preserves_norm",
            "||Qx||_1 = ||x|| for all x",
            over(&vecs, |x| {
                Ok(rel(&l1_norm(&q_embed(x)), Rel::Eq, &eq_norm(x)))
            }),
        ),
        Check::from_result(
            "q_inverse_roundtrip",
            "Q is a bijection onto V with inverse dropping the first coordinate",
            over(&vecs, |x| {
                let y = q_embed(x);
                Ok(Outcome::new(in_range_of_q(&y))
                    .with("image", render(&y))
                    .and(vec_eq(&q_inverse(&y)?, x)))
            }),
        ),
        Check::from_result(
            "k_samples_are_members",
            "K = Q(C)",
            membership(ConvexSet::K, &kpts, seq),
        ),
        Check::from_result(
            "s_maps_k_into_k",
            "S = QTQ^-1 maps K into K",
            invariance(verify_invariance(ConvexSet::K, s_isometric, &kpts, seq)),
        ),
        Check::from_result(
            "s_isometry_l1",
            "S is an isometry of K for the usual norm",
            over(&kp, |(y, z)| {
                let image = l1_norm(&(&s_isometric(y)? - &s_isometric(z)?));
                Ok(rel(&image, Rel::Eq, &l1_norm(&(y - z))))
            }),
        ),
        Check::from_result(
            "s_orbit_constant_displacement",
            "S is fixed point free: orbit displacements are constant and positive",
            over(starts, |y| {
                let d = orbit(s_isometric, y, S_ORBIT_STEPS, |v| Ok(l1_norm(v)))?;
                let mut out = rel(&d[0], Rel::Gt, &Rat::zero()).with("step", 0);
                for (k, dk) in d.iter().enumerate().skip(1) {
                    out = out.and(rel(dk, Rel::Eq, &d[0]).with("step", k));
                }
                Ok(out.with("steps", d.len()))
            }),
        ),
    ])
}

fn section3(ctx: &Ctx) -> Result<Vec<Check>> {
    let s = Suite::Section3;
    let seq = &ctx.seq;
    let pts = ctx.points(ConvexSet::C, s, 0, SUPPORT_CAP)?;
    let pp = pairs(&pts);
    let t = |x: &SparseVec| t_general(x, seq);
    let iso = EpsSeq::isometric();
    let supports: Vec<usize> = OBSTRUCTION_SUPPORTS
        .iter()
        .copied()
        .chain([ctx.config.depth])
        .filter(|&n| n <= ctx.config.depth)
        .collect();
    let bound = rat(33, 50);

    let strict = if *seq.delta() == rat(1, 2) {
        let nonzero: Vec<&SparseVec> = pts.iter().filter(|x| !x.is_zero()).collect();
        Check::from_result(
            "t_strict_at_origin",
            "T is not an isometry: ||Tx - T0|| < ||x|| for nonzero x in C",
            (|| {
                let t0 = t_general(&SparseVec::zero(), seq)?;
                over(&nonzero, |x| {
                    Ok(rel(
                        &eq_norm(&(&t_general(x, seq)? - &t0)),
                        Rel::Lt,
                        &eq_norm(x),
                    ))
                })
            })(),
        )
    } else {
        Check::skipped(
            "t_strict_at_origin",
            "T is not an isometry: ||Tx - T0|| < ||x|| for nonzero x in C",
            "stated for delta = 1/2",
        )
    };

    Ok(vec![
        Check::from_result(
            "t_nonexpansive_equivalent_norm",
            "||Tx - Ty|| <= ||x - y|| on C",
            nonexpansive(check_nonexpansive(t, Norm::Equivalent, &pp)),
        ),
        Check::from_result(
            "t_maps_c_into_c",
            "T maps C into C",
            invariance(verify_invariance(ConvexSet::C, t, &pts, seq)),
        ),
        strict,
        Check::from_result(
            "t_reduces_to_isometric_case",
            "delta = 1 and eps = 0 give back the isometric T",
            over(&pts, |x| Ok(vec_eq(&t_general(x, &iso)?, &t_simple(x)))),
        ),
        Check::from_result(
            "fixed_point_obstruction",
            "a fixed point would need x_1 = 0 since prod (1 - eps_j) stays positive",
            over(&supports, |&n| {
                let o = fixed_point_obstruction(seq, n)?;
                Ok(Outcome::new(o.contradiction)
                    .with("support", n)
                    .and(rel(&o.product, Rel::Gt, &bound).with("support", n)))
            }),
        ),
    ])
}

fn section4(ctx: &Ctx) -> Result<Vec<Check>> {
    let s = Suite::Section4;
    let seq = &ctx.seq;
    let depth = ctx.config.depth;
    let params = seq.params();
    let cert = seq.certify(depth);
    let first = |pick: fn(&crate::epsilon::EpsCertificate) -> Option<usize>| -> Result<Outcome> {
        let c = cert.clone()?;
        Ok(match pick(&c) {
            None => Outcome::new(true).with("depth", depth),
            Some(n) => Outcome::new(false)
                .with("n", n)
                .with("eps_n", ratio_string(&seq.eps(n)?))
                .with("eps_next", ratio_string(&seq.eps(n + 1)?)),
        })
    };
    let eps_is = |n: usize, value: Rat| -> Result<Outcome> {
        Ok(rel(&seq.eps(n)?, Rel::Eq, &value).with("n", n))
    };

    let dpts = ctx.points(ConvexSet::D, s, 0, SUPPORT_CAP)?;
    let dp = pairs(&dpts);
    let lpts = ctx.points(ConvexSet::L, s, 1, SUPPORT_CAP + 1)?;
    let lp = pairs(&lpts);
    let t = |x: &SparseVec| t_general(x, seq);
    let sm = |y: &SparseVec| s_map(y, seq);

    Ok(vec![
        Check::from_result("eps1_exact", "eps_1 = 1/4", eps_is(1, rat(1, 4))),
        Check::from_result("eps2_exact", "eps_2 = 1/12", eps_is(2, rat(1, 12))),
        Check::from_result("eps3_exact", "eps_3 = 1/44", eps_is(3, rat(1, 44))),
        Check::from_result(
            "eps_defining_equation",
            "(1/2 - eps_{n+1})(1 - eps_n) - (1/8) = (3/4)(1/2 - eps_n)",
            first(|c| c.first_equation_failure),
        ),
        Check::from_result(
            "eps_halving",
            "0 < eps_{n+1} < eps_n / 2",
            first(|c| c.first_halving_failure),
        ),
        Check::from_result(
            "eps_bounds",
            "0 < eps_n < 1 - delta, so every factor 1 - eps_n lies in (0, 1)",
            first(|c| c.first_bounds_failure),
        ),
        Check::from_result(
            "eps_partial_sum_bound",
            "sum of eps_n stays below 2/5",
            seq.partial_sum(depth)
                .map(|v| rel(&v, Rel::Lt, &rat(2, 5)).with("depth", depth)),
        ),
        Check::from_result(
            "eps_partial_product_bound",
            "prod (1 - eps_n) stays above 33/50",
            seq.partial_product(depth)
                .map(|v| rel(&v, Rel::Gt, &rat(33, 50)).with("depth", depth)),
        ),
        Check::from_result(
            "d_samples_are_members",
            "D: weighted sum alpha and l1 norm at most q",
            membership(ConvexSet::D, &dpts, seq),
        ),
        Check::from_result(
            "t_maps_d_into_d",
            "T maps D into D",
            invariance(verify_invariance(ConvexSet::D, t, &dpts, seq)),
        ),
        Check::from_result(
            "t_weighted_sum_on_d",
            "sum (1/2 - eps_n)(Tx)_n = 1/2 on D",
            over(&dpts, |x| {
                let tx = t_general(x, seq)?;
                let eps = seq.prefix(tx.max_index())?;
                let lhs = tx.iter().fold(Rat::zero(), |acc, (n, v)| {
                    acc + params.weight(&eps[n - 1]) * v
                });
                Ok(rel(&lhs, Rel::Eq, &params.alpha))
            }),
        ),
        Check::from_result(
            "t_distance_formula_on_d",
            "||Tx - Ty|| = delta |sum (x_n - y_n)| + sum (1 - eps_n)|x_n - y_n| on D",
            over(&dp, |(x, y)| {
                let lhs = eq_norm(&(&t_general(x, seq)? - &t_general(y, seq)?));
                Ok(rel(&lhs, Rel::Eq, &t_distance_on_d(x, y, seq)?))
            }),
        ),
        Check::from_result(
            "t_contraction_on_d",
            "||Tx - Ty|| < ||x - y|| for distinct x, y in D",
            over(&dp, |(x, y)| {
                if x == y {
                    return Ok(Outcome::new(true));
                }
                let lhs = eq_norm(&(&t_general(x, seq)? - &t_general(y, seq)?));
                Ok(rel(&lhs, Rel::Lt, &eq_norm(&(x - y))))
            }),
        ),
        Check::from_result(
            "l_samples_are_members",
            "L = Q(D)",
            membership(ConvexSet::L, &lpts, seq),
        ),
        Check::from_result(
            "s_maps_l_into_l",
            "S maps L into L",
            invariance(verify_invariance(ConvexSet::L, sm, &lpts, seq)),
        ),
        Check::from_result(
            "s_closed_form_on_l",
            "Sy = (1, delta(1 - y_1), (1 - eps_1)y_2, (1 - eps_2)y_3, ...) on L",
            over(&lpts, |y| {
                Ok(vec_eq(&s_map(y, seq)?, &s_closed_form(y, seq)?))
            }),
        ),
        Check::from_result(
            "s_distance_formula_on_l",
            "||Sy - Sz||_1 = delta |y_1 - z_1| + sum (1 - eps_n)|y_{n+1} - z_{n+1}| on L",
            over(&lp, |(y, z)| {
                let lhs = l1_norm(&(&s_map(y, seq)? - &s_map(z, seq)?));
                Ok(rel(&lhs, Rel::Eq, &s_distance_on_l(y, z, seq)?))
            }),
        ),
        Check::from_result(
            "s_contraction_on_l",
            "||Sy - Sz||_1 < ||y - z||_1 for distinct y, z in L",
            over(&lp, |(y, z)| {
                if y == z {
                    return Ok(Outcome::new(true));
                }
                let lhs = l1_norm(&(&s_map(y, seq)? - &s_map(z, seq)?));
                Ok(rel(&lhs, Rel::Lt, &l1_norm(&(y - z))))
            }),
        ),
    ])
}

fn flavor_checks(ctx: &Ctx, flavor: Flavor, stream: u64) -> Result<Vec<Check>> {
    let s = Suite::Section5;
    let seq = &ctx.seq;
    let basis = PerturbedBasis::standard(flavor, DEFAULT_BASIS_COUNT, seq)?;
    let coeffs = random_vecs(&mut ctx.rng(s, stream), ctx.samples(), DEFAULT_BASIS_COUNT);
    let lpts = ctx.points(ConvexSet::L, s, stream + 1, CHAIN_SUPPORT_CAP)?;
    let lp = pairs(&lpts);
    let indices: Vec<usize> = (1..=DEFAULT_BASIS_COUNT).collect();
    let starts = &lpts[..R_ORBIT_STARTS.min(lpts.len())];
    let id = |name: &str| format!("{}.{name}", flavor.name());

    let chain = (|| {
        let reports = verify_chains(&basis, &lp, seq)?;
        over(&reports, |r| {
            let out = Outcome::new(r.passed())
                .with("image_distance", ratio_string(&r.image_distance))
                .with("upper", ratio_string(&r.upper))
                .with("middle", ratio_string(&r.middle))
                .with("lower", ratio_string(&r.lower))
                .with("distance", ratio_string(&r.distance));
            Ok(out)
        })
    })();

    Ok(vec![
        Check::from_result(
            &id("hypothesis_i"),
            "u_n span an isometric copy of the l1 basis",
            over(&coeffs, |t| {
                Ok(rel(&basis.unperturbed_norm(t)?, Rel::Eq, &l1_norm(t)))
            }),
        ),
        Check::from_result(
            &id("hypothesis_ii"),
            "||u_n - v_n|| < gamma_n",
            over(&indices, |&n| {
                let size = basis.perturbation_size(n)?;
                let chosen = &basis.params.chosen[n - 1];
                let gamma = &basis.params.gammas[n - 1];
                Ok(rel(&size, Rel::Eq, chosen)
                    .and(rel(&size, Rel::Lt, gamma))
                    .with("n", n))
            }),
        ),
        Check::from_result(
            &id("hypothesis_iii"),
            "gamma_1, gamma_2 < 1/4 and gamma_{n+1}, gamma_{n+2} < eps_n / 2",
            over(&indices, |&n| {
                Ok(rel(&basis.params.gammas[n - 1], Rel::Lt, &gamma_bound(n, seq)?).with("n", n))
            }),
        ),
        Check::from_result(
            &id("contraction_chain"),
            "||R sigma - R tau|| <= 3/4|y_1 - z_1| + sum (1 - eps_n/2)|y_{n+1} - z_{n+1}| <= ||sigma - tau||, strict for sigma != tau",
            chain,
        ),
        Check::from_result(
            &id("r_maps_l_into_l"),
            "R maps M into M",
            invariance(verify_invariance(
                ConvexSet::L,
                |y: &SparseVec| r_map(y, seq),
                &lpts,
                seq,
            )),
        ),
        Check::from_result(
            &id("r_orbit_displacement"),
            "R is fixed point free on M",
            over(starts, |y| {
                let count = y.max_index() + R_ORBIT_STEPS + 1;
                let wide = PerturbedBasis::standard(flavor, count, seq)?;
                let d = orbit(|v| r_map(v, seq), y, R_ORBIT_STEPS, |v| wide.x_norm(v))?;
                let zero = Rat::zero();
                let mut out = Outcome::new(true).with("steps", d.len());
                for (k, dk) in d.iter().enumerate() {
                    out = out.and(rel(dk, Rel::Gt, &zero).with("step", k));
                }
                Ok(out)
            }),
        ),
    ])
}

fn section5(ctx: &Ctx) -> Result<Vec<Check>> {
    let mut checks = flavor_checks(ctx, Flavor::InterleavedL1, 0)?;
    checks.extend(flavor_checks(ctx, Flavor::DyadicBlocks, 8)?);
    Ok(checks)
}

fn section6(ctx: &Ctx) -> Result<Vec<Check>> {
    let s = Suite::Section6;
    let n_max = ctx.config.n_rademacher;
    let mut rng = ctx.rng(s, 0);
    let lists: Vec<Vec<Rat>> = (0..CONVEX_LISTS)
        .map(|_| {
            let len = rng.random_range(1..=n_max);
            random_convex(&mut rng, len)
        })
        .collect();
    let hull_pairs: Vec<(usize, usize)> = (0..lists.len())
        .map(|i| (i, (i + 1) % lists.len()))
        .collect();
    let levels: Vec<u32> = (0..=RECURRENCE_LEVELS).collect();
    let index_pairs: Vec<(u32, u32)> = (1..=n_max as u32)
        .flat_map(|n| (n + 1..=n_max as u32).map(move |m| (n, m)))
        .collect();
    let kk: Vec<(u32, u32)> = {
        let mut v: Vec<(u32, u32)> = (1..=n_max as u32)
            .flat_map(|i| [(0, i), ((i - 1).min(WEAK_KK_MAX_LEVEL), i)])
            .collect();
        v.dedup();
        v
    };
    let one = Rat::one();

    Ok(vec![
        Check::from_result(
            "recurrence_matches_closed_form",
            "r_n(t) = r_{n-1}(2t) + r_{n-1}(2t - 1)",
            over(&levels, |&n| {
                Ok(Outcome::new(rademacher(n) == rademacher_recurrence(n)).with("n", n))
            }),
        ),
        Check::from_result(
            "pairwise_distance",
            "||r_n - r_m||_1 = 1 for n != m",
            over(&index_pairs, |&(n, m)| {
                let d = (&rademacher(n) - &rademacher(m)).l1_integral();
                Ok(rel(&d, Rel::Eq, &one).with("n", n).with("m", m))
            }),
        ),
        Check::from_result(
            "sign_sum_identity",
            "average over signs of |sum e_n a_n + e_{N+1}| equals 1",
            over(&lists, |a| {
                Ok(rel(&sign_sum_identity(a)?, Rel::Eq, &one).with("len", a.len()))
            }),
        ),
        Check::from_result(
            "sign_sum_matches_integral",
            "||sum a_n r_n - r_{N+1}||_1 computed by integration",
            over(&lists, |a| {
                Ok(rel(
                    &sign_sum_by_integration(a)?,
                    Rel::Eq,
                    &sign_sum_identity(a)?,
                )
                .with("len", a.len()))
            }),
        ),
        Check::from_result(
            "hull_is_diametral",
            "points of co{x_1..x_N} are within 1 of each other and at distance 1 from x_{N+1}",
            over(&hull_pairs, |&(i, j)| {
                let (a, b) = (&lists[i], &lists[j]);
                let r = diametral_check(a, b, a.len().max(b.len()))?;
                Ok(rel(&r.pair_distance, Rel::Le, &one)
                    .and(rel(&r.distance_to_next, Rel::Eq, &one))
                    .with("n", r.n))
            }),
        ),
        Check::from_result(
            "weak_kadec_klee_fails",
            "x_n -> r_0 weakly on the unit sphere while ||x_n - r_0||_1 = 1",
            over(&kk, |&(level, index)| {
                let r = weak_kk_witness(level, index)?;
                let nonzero = r.pairings.iter().filter(|p| !p.is_zero()).count();
                Ok(rel(&r.norm, Rel::Eq, &one)
                    .and(rel(&r.distance_to_limit, Rel::Eq, &one))
                    .and(Outcome::new(nonzero == 0).with("nonzero_pairings", nonzero))
                    .with("level", level)
                    .with("index", index))
            }),
        ),
    ])
}

fn section7(ctx: &Ctx) -> Result<Vec<Check>> {
    let s = Suite::Section7;
    let seq = &ctx.seq;
    let samples: Vec<(SparseVec, CSeq)> = {
        let mut rng = ctx.rng(s, 0);
        let xs = random_vecs(&mut rng, ctx.samples(), 12);
        xs.into_iter()
            .map(|x| {
                let lam = CSeq::random(&mut rng, 14, 100);
                (x, lam)
            })
            .collect()
    };
    let wpts = ctx.points(ConvexSet::W, s, 1, SUPPORT_CAP)?;
    let wp = pairs(&wpts);
    let one = CSeq::constant(int(1));
    let unit = Rat::one();
    let zero = Rat::zero();

    Ok(vec![
        Check::from_result(
            "pairing_forms_agree",
            "sum x_{n+1}(lambda_n - lambda_0) + x_0 lambda_0 = sum x_{n+1} lambda_n",
            over(&samples, |(x, lam)| {
                Ok(rel(&pair_centred(x, lam), Rel::Eq, &pair_direct(x, lam)))
            }),
        ),
        Check::from_result(
            "duality_bound",
            "|<x, lambda>| <= ||x||_1 sup |lambda_n|",
            over(&samples, |(x, lam)| {
                Ok(rel(
                    &pair(x, lam).abs(),
                    Rel::Le,
                    &(l1_norm(x) * lam.sup_abs()),
                ))
            }),
        ),
        Check::from_result(
            "weak_star_unit_vectors",
            "<x^(n), lambda> = lambda_n -> lambda_0 while ||x^(n) - x^(0)||_1 = 2",
            weak_star_witness(WEAK_STAR_DEPTH).map(|r| match r.failures.first() {
                None => Outcome::new(true)
                    .with("n_max", r.n_max)
                    .with("family", r.family_size)
                    .with("tail_pairings", r.exhausted_checked),
                Some(f) => rel(&f.lhs, Rel::Eq, &f.rhs)
                    .with("n", f.n)
                    .with("what", f.what),
            }),
        ),
        Check::from_result(
            "w_samples_are_members",
            "W: nonnegative sequences with coordinate sum 1",
            membership(ConvexSet::W, &wpts, seq),
        ),
        Check::from_result(
            "w_is_diametral",
            "W is diametral: ||x - e_m||_1 = 2 = diam W",
            over(&wpts, |x| {
                let m = x.max_index() + 1;
                Ok(rel(&w_diametral_witness(x, m)?, Rel::Eq, &int(2)).with("m", m))
            }),
        ),
        Check::from_result(
            "f_maps_w_into_w",
            "F maps W into W",
            invariance(verify_invariance(
                ConvexSet::W,
                |x: &SparseVec| Ok(f_shift(x)),
                &wpts,
                seq,
            )),
        ),
        Check::from_result(
            "f_preserves_unit_pairing",
            "<Fx, 1> = <x, 1> = 1 on W",
            over(&wpts, |x| {
                Ok(
                    rel(&pair(&f_shift(x), &one), Rel::Eq, &pair(x, &one)).and(rel(
                        &pair(x, &one),
                        Rel::Eq,
                        &unit,
                    )),
                )
            }),
        ),
        Check::from_result(
            "f_isometry",
            "F is an isometry",
            over(&wp, |(x, y)| {
                Ok(rel(
                    &l1_norm(&(&f_shift(x) - &f_shift(y))),
                    Rel::Eq,
                    &l1_norm(&(x - y)),
                ))
            }),
        ),
        Check::from_result(
            "f_has_no_fixed_point",
            "F is fixed point free on W",
            over(&wpts, |x| {
                Ok(rel(&l1_norm(&(&f_shift(x) - x)), Rel::Gt, &zero))
            }),
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(suites: &[Suite]) -> SuiteConfig {
        SuiteConfig {
            samples: 20,
            depth: 30,
            n_rademacher: 5,
            ..SuiteConfig::with_suites(suites)
        }
    }

    #[test]
    fn every_section_passes_at_small_scale() {
        let report = run(&small(&[Suite::All])).unwrap();
        assert_eq!(report.suites.len(), 7);
        for (suite, check) in report.checks() {
            assert_ne!(
                check.status,
                Status::Fail,
                "{suite}.{}: {:?}",
                check.id,
                check.witness
            );
        }
        assert_eq!(report.exit_code(), 0);
    }

    #[test]
    fn checks_are_sorted_and_reports_repeat() {
        let config = small(&[Suite::Section1, Suite::Section7]);
        let a = run(&config).unwrap();
        for s in &a.suites {
            assert!(s.checks.windows(2).all(|w| w[0].id < w[1].id));
            assert_eq!(s.elapsed_ms, None);
        }
        assert_eq!(a.to_json(), run(&config).unwrap().to_json());
    }

    #[test]
    fn depth_three_reports_eps3() {
        let config = SuiteConfig {
            depth: 3,
            ..small(&[Suite::Section4])
        };
        let report = run(&config).unwrap();
        let check = report.find(Suite::Section4, "eps3_exact").unwrap();
        assert_eq!(check.status, Status::Pass);
        assert_eq!(check.witness.as_ref().unwrap()["lhs"], "1/44");
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            SuiteConfig {
                samples: 0,
                ..SuiteConfig::default()
            },
            SuiteConfig {
                depth: 0,
                ..SuiteConfig::default()
            },
            SuiteConfig {
                n_rademacher: 21,
                ..SuiteConfig::default()
            },
            SuiteConfig {
                suites: vec![],
                ..SuiteConfig::default()
            },
            SuiteConfig {
                params: ContractionParams::with_q(rat(3, 2)),
                ..SuiteConfig::default()
            },
        ];
        for config in bad {
            assert!(
                matches!(run(&config), Err(Error::InvalidParams(_))),
                "{config:?}"
            );
        }
    }

    #[test]
    fn exploratory_failures_do_not_set_the_exit_code() {
        let config = SuiteConfig {
            params: ContractionParams {
                eps1: rat(1, 5),
                ..ContractionParams::default()
            },
            ..small(&[Suite::Section4])
        };
        let report = run(&config).unwrap();
        assert_eq!(report.config.mode, Mode::Exploratory);
        assert_eq!(
            report.find(Suite::Section4, "eps1_exact").unwrap().status,
            Status::Fail
        );
        assert_eq!(report.exit_code(), 0);
    }

    #[test]
    fn different_seeds_draw_different_samples() {
        let a = Ctx {
            config: &SuiteConfig::default(),
            seq: EpsSeq::default(),
        };
        let other = SuiteConfig {
            seed: 1,
            ..SuiteConfig::default()
        };
        let b = Ctx {
            config: &other,
            seq: EpsSeq::default(),
        };
        assert_ne!(a.seed(Suite::Section1, 0), b.seed(Suite::Section1, 0));
        assert_ne!(a.seed(Suite::Section1, 0), a.seed(Suite::Section2, 0));
    }
}
