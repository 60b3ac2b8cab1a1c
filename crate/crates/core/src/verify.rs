//! Seeded randomized property suites for the index calculus, the ring
//! operations and the extension machinery.
//!
//! Every suite is deterministic for a given seed. Checks that need a
//! certified index skip instances whose index is uncertified and count them.

use std::sync::Arc;

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bpf::{BpfMatrix, FiniteRankPart};
use crate::expr::MatrixExpr;
use crate::extensions::{
    classify_trivial, equivalence_check, ext_add, ext_mul, family_tn, matrix_units, embed,
    LaurentPoly, PullbackElem,
};
use crate::fredholm::{self, IndexResult, TruncationConfig};
use crate::linalg::DenseMatrix;
use crate::oracle;
use crate::Rational;

pub const DEFAULT_SEED: u64 = 0x5eed_1d3a;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub instances: u64,
    pub skipped: u64,
    pub violations: Vec<String>,
}

impl CheckReport {
    fn new(name: &str) -> Self {
        CheckReport {
            name: name.to_string(),
            instances: 0,
            skipped: 0,
            violations: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.instances += 1;
        if !ok {
            self.violations.push(what());
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub checks: Vec<CheckReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckReport::passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn q(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

/// Atoms of the generator set.
fn random_atom(rng: &mut ChaCha8Rng) -> MatrixExpr {
    match rng.gen_range(0..4) {
        0 => MatrixExpr::Shift(rng.gen_range(-3..=3)),
        1 => MatrixExpr::Weighted(*[-1, 1].choose(rng).unwrap()),
        2 => MatrixExpr::Dgeo(q(2)),
        _ => MatrixExpr::pow(MatrixExpr::Dgeo(q(2)), -1),
    }
}

/// Nonzero coefficients in `[−5, 5]`, support in `[1, 10]²`.
pub fn random_finite(rng: &mut ChaCha8Rng) -> MatrixExpr {
    let terms = rng.gen_range(1..=3);
    let mut e: Option<MatrixExpr> = None;
    for _ in 0..terms {
        let mut c = rng.gen_range(1..=5);
        if rng.gen_bool(0.5) {
            c = -c;
        }
        let (i, j) = (rng.gen_range(1..=10), rng.gen_range(1..=10));
        let t = MatrixExpr::mul(MatrixExpr::Lit(q(c)), MatrixExpr::Unit(i, j));
        e = Some(match e {
            None => t,
            Some(acc) => MatrixExpr::add(acc, t),
        });
    }
    e.unwrap()
}

/// A product of one or two atoms, perturbed by a finite matrix half the time.
pub fn random_generator(rng: &mut ChaCha8Rng) -> MatrixExpr {
    let mut e = random_atom(rng);
    if rng.gen_bool(0.5) {
        e = MatrixExpr::mul(e, random_atom(rng));
    }
    if rng.gen_bool(0.5) {
        e = MatrixExpr::add(e, random_finite(rng));
    }
    e
}

/// Invertible matrices with known exact inverses, as `(U, U⁻¹)`.
pub fn invertible_catalog() -> Vec<(MatrixExpr, MatrixExpr)> {
    let e12 = MatrixExpr::Unit(1, 2);
    vec![
        (MatrixExpr::Dgeo(q(2)), MatrixExpr::Dgeo(Rational::new(1.into(), 2.into()))),
        (MatrixExpr::Dfact(-1), MatrixExpr::Dfact(1)),
        (
            MatrixExpr::add(MatrixExpr::Identity, e12.clone()),
            MatrixExpr::sub(MatrixExpr::Identity, e12),
        ),
    ]
}

fn certified(a: &BpfMatrix, cfg: &TruncationConfig) -> Option<IndexResult> {
    fredholm::index(a, cfg).ok().filter(|r| r.certified)
}

/// Compares certified dimensions with the dense oracle swept to `2·N + 32`.
pub fn oracle_agrees(a: &BpfMatrix, r: &IndexResult, window: usize) -> Result<(), String> {
    let max_n = 2 * r.truncation_used + 32;
    let rep = oracle::stabilized_index(a, max_n, window).map_err(|e| e.to_string())?;
    let (nul, cor) = (*rep.nullities.last().unwrap(), *rep.coranks.last().unwrap());
    if rep.stabilized && nul == r.kernel_dim && cor == r.coker_dim {
        Ok(())
    } else {
        Err(format!(
            "certified ({}, {}) vs oracle ({nul}, {cor}), stabilized={}",
            r.kernel_dim, r.coker_dim, rep.stabilized
        ))
    }
}

/// Index calculus: additivity, inverses, finite perturbations, conjugation,
/// index-zero splitting and oracle concordance.
pub fn fredholm_suite(seed: u64, cases: usize, cfg: &TruncationConfig) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut additivity = CheckReport::new("additivity");
    let mut inverse = CheckReport::new("inverse");
    let mut perturbation = CheckReport::new("perturbation");
    let mut conjugation = CheckReport::new("conjugation");
    let mut split = CheckReport::new("split");
    let mut concordance = CheckReport::new("oracle");

    for (u, u_inv) in invertible_catalog() {
        let ui = certified(&u.eval().unwrap(), cfg);
        conjugation.record(ui.is_some_and(|r| r.index == 0), || format!("index({u}) != 0"));
        let prod = &u.eval().unwrap() * &u_inv.eval().unwrap();
        conjugation.record(prod == BpfMatrix::identity(), || format!("{u} has wrong inverse"));
    }
    let catalog = invertible_catalog();

    for case in 0..cases {
        let (ea, eb) = (random_generator(&mut rng), random_generator(&mut rng));
        let (a, b) = (ea.eval().unwrap(), eb.eval().unwrap());
        let ab = &a * &b;
        match (certified(&a, cfg), certified(&b, cfg), certified(&ab, cfg)) {
            (Some(ra), Some(rb), Some(rab)) => {
                additivity.record(rab.index == ra.index + rb.index, || {
                    format!("ind({ea} * {eb}) = {} but {} + {}", rab.index, ra.index, rb.index)
                });
                // the dense sweep is the slow part, so sample it
                if case % 5 == 0 {
                    for (m, r, e) in [(&a, &ra, ea.to_string()), (&ab, &rab, format!("({ea})*({eb})"))] {
                        let res = oracle_agrees(m, r, cfg.window);
                        concordance.record(res.is_ok(), || format!("{e}: {}", res.unwrap_err()));
                    }
                }

                match fredholm::fredholm_inverse(&ea) {
                    Ok(c) => match certified(&c.a0, cfg) {
                        Some(r0) => inverse.record(r0.index == -ra.index, || {
                            format!("ind of inverse of {ea} is {}, expected {}", r0.index, -ra.index)
                        }),
                        None => inverse.skipped += 1,
                    },
                    Err(e) => inverse.record(false, || format!("{ea}: {e}")),
                }

                let t = random_finite(&mut rng);
                let at = MatrixExpr::add(ea.clone(), t.clone()).eval().unwrap();
                match certified(&at, cfg) {
                    Some(r) => perturbation.record(r.index == ra.index, || {
                        format!("ind({ea} + {t}) = {}, expected {}", r.index, ra.index)
                    }),
                    None => perturbation.skipped += 1,
                }

                let (u, u_inv) = &catalog[case % catalog.len()];
                let conj = &(&u_inv.eval().unwrap() * &a) * &u.eval().unwrap();
                match certified(&conj, cfg) {
                    Some(r) => conjugation.record(r.index == ra.index, || {
                        format!("ind(conj({u}, {ea})) = {}, expected {}", r.index, ra.index)
                    }),
                    None => conjugation.skipped += 1,
                }
                if let Ok(cb) = fredholm::fredholm_inverse(&eb) {
                    let sandwich = &(&cb.a0 * &a) * &b;
                    match certified(&sandwich, cfg) {
                        Some(r) => conjugation.record(r.index == ra.index, || {
                            format!("ind(B0 A B) = {} for A = {ea}, B = {eb}", r.index)
                        }),
                        None => conjugation.skipped += 1,
                    }
                }
            }
            _ => additivity.skipped += 1,
        }
    }

    let split_cases = (cases / 4).max(1);
    while split.instances < split_cases as u64 {
        let e = random_generator(&mut rng);
        let Some(r) = certified(&e.eval().unwrap(), cfg) else {
            split.skipped += 1;
            continue;
        };
        // S(k) with k = ind brings the index to zero
        let zero = MatrixExpr::add(
            MatrixExpr::mul(e.clone(), MatrixExpr::Shift(r.index)),
            random_finite(&mut rng),
        );
        let a = zero.eval().unwrap();
        match fredholm::index_zero_split(&a, cfg) {
            Ok(sc) => {
                let u_idx = certified(&sc.u, cfg);
                let ok = sc.u.add_finite(&sc.t) == a
                    && u_idx.is_some_and(|r| r.kernel_dim == 0 && r.coker_dim == 0);
                split.record(ok, || format!("split of {zero} does not round trip"));
            }
            Err(fredholm::FredholmError::UncertifiedInput) => split.skipped += 1,
            Err(err) => split.record(false, || format!("{zero}: {err}")),
        }
    }

    SuiteReport {
        suite: "fredholm".into(),
        seed,
        checks: vec![additivity, inverse, perturbation, conjugation, split, concordance],
    }
}

/// Dense product of blocks, entry by entry.
fn dense_mul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut acc = Rational::zero();
            for k in 0..a.cols() {
                let (x, y) = (a.get(i, k), b.get(k, j));
                if !x.is_zero() && !y.is_zero() {
                    acc += x * y;
                }
            }
            out.set(i, j, acc);
        }
    }
    out
}

/// Rows reached by columns `1..=n` of `b`.
fn reach(b: &BpfMatrix, n: u64) -> u64 {
    let d = b.max_offset().unwrap_or(0).max(0) as u64;
    (n + d).max(b.finite().max_row()).max(n)
}

/// Ring axioms, agreement with the dense entry formula, transposition, the
/// finite ideal and congruence modulo it.
pub fn ring_suite(seed: u64, cases: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut axioms = CheckReport::new("ring axioms");
    let mut entries = CheckReport::new("entry formula");
    let mut transpose = CheckReport::new("transpose");
    let mut ideal = CheckReport::new("finite ideal");
    let mut congruence = CheckReport::new("coset congruence");
    const N: u64 = 25;

    for _ in 0..cases {
        let es: Vec<MatrixExpr> = (0..3).map(|_| random_generator(&mut rng)).collect();
        let [a, b, c] = [0, 1, 2].map(|k| es[k].eval().unwrap());
        let names = || format!("A = {}, B = {}, C = {}", es[0], es[1], es[2]);

        axioms.record(&(&a * &b) * &c == &a * &(&b * &c), || format!("associativity: {}", names()));
        axioms.record(&a * &(&b + &c) == &(&a * &b) + &(&a * &c), || format!("left distributivity: {}", names()));
        axioms.record(&(&a + &b) * &c == &(&a * &c) + &(&b * &c), || format!("right distributivity: {}", names()));
        axioms.record(&a + &b == &b + &a, || format!("commutative addition: {}", names()));
        axioms.record((&a + &a.scale(&q(-1))).is_zero(), || format!("additive inverse: {}", names()));
        axioms.record(&a * &BpfMatrix::identity() == a, || format!("unit: {}", names()));

        let k = reach(&b, N);
        let dense = dense_mul(&a.truncate(N, k), &b.truncate(k, N));
        entries.record((&a * &b).truncate(N, N) == dense, || format!("(AB) block: {}", names()));

        transpose.record(a.transpose().transpose() == a, || format!("involution: {}", names()));
        transpose.record(
            (&a * &b).transpose() == &b.transpose() * &a.transpose(),
            || format!("anti-multiplicative: {}", names()),
        );

        let f = random_finite(&mut rng).eval().unwrap();
        ideal.record(
            (&a * &f).is_finite_rank() && (&f * &a).is_finite_rank(),
            || format!("F = {f}: {}", names()),
        );

        let (f1, f2) = (random_finite(&mut rng).eval().unwrap(), random_finite(&mut rng).eval().unwrap());
        let (a2, b2) = (&a + &f1, &b + &f2);
        congruence.record(
            (&a2 * &b2).coset_eq(&(&a * &b)) && (&a2 + &b2).coset_eq(&(&a + &b)),
            || format!("perturbed product: {}", names()),
        );
    }

    SuiteReport {
        suite: "ring".into(),
        seed,
        checks: vec![axioms, entries, transpose, ideal, congruence],
    }
}

fn random_elem(rng: &mut ChaCha8Rng, parent: &Arc<crate::ExtensionAlgebra>) -> PullbackElem {
    let mut poly = LaurentPoly::zero();
    for _ in 0..rng.gen_range(1..=3) {
        poly = poly.add(&LaurentPoly::monomial(rng.gen_range(-3..=3), q(rng.gen_range(-4..=4))));
    }
    let mut corr = FiniteRankPart::new();
    for _ in 0..rng.gen_range(0..=3) {
        let c = rng.gen_range(-4..=4);
        if c != 0 {
            corr.add_entry(rng.gen_range(1..=6), rng.gen_range(1..=6), q(c));
        }
    }
    PullbackElem::new(parent, poly, corr)
}

/// Matrix units, the embedding, pullback ring laws, faithfulness,
/// classification of the family and separation by the index.
pub fn extensions_suite(seed: u64, cases: usize, cfg: &TruncationConfig, depth: u32) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut units_check = CheckReport::new("matrix units");
    let mut embed_check = CheckReport::new("embedding");
    let mut laws = CheckReport::new("pullback ring laws");
    let mut faithful = CheckReport::new("faithfulness");
    let mut classify = CheckReport::new("classification");
    let mut separation = CheckReport::new("equivalence obstruction");

    let systems = [
        ("S", BpfMatrix::shift(-1), BpfMatrix::shift(1)),
        ("T", BpfMatrix::weighted_down(), BpfMatrix::weighted_up()),
    ];
    for (name, x, y) in &systems {
        // construction verifies every relation among the cached units
        match matrix_units(x, y, 8) {
            Ok(units) => {
                units_check.instances += 8u64.pow(4);
                for _ in 0..cases.min(20) {
                    let mut f = FiniteRankPart::new();
                    for _ in 0..rng.gen_range(1..=4) {
                        let c = rng.gen_range(1..=5);
                        f.add_entry(rng.gen_range(1..=6), rng.gen_range(1..=6), q(c));
                    }
                    let m = BpfMatrix::from_finite(f);
                    // T-units are (i!/j!)·e_ij, so that embedding conjugates by Diag(i!)
                    let expected = if *name == "S" {
                        m.clone()
                    } else {
                        &(&BpfMatrix::factorial_diagonal(-1) * &m) * &BpfMatrix::factorial_diagonal(1)
                    };
                    let got = embed(&m, &units, 6);
                    embed_check.record(got.as_ref().is_ok_and(|d| *d == expected.truncate(6, 6)), || {
                        format!("{name}-system embedding of {m}")
                    });
                }
            }
            Err(e) => units_check.record(false, || format!("{name}-system: {e}")),
        }
    }

    let family: Vec<Arc<crate::ExtensionAlgebra>> =
        (0..=5).map(|n| Arc::new(family_tn(n, depth))).collect();
    for parent in family.iter().take(3) {
        for _ in 0..cases.min(30) {
            let [a, b, c] = [0; 3].map(|_| random_elem(&mut rng, parent));
            let lhs = ext_mul(&ext_mul(&a, &b).unwrap(), &c).unwrap();
            let rhs = ext_mul(&a, &ext_mul(&b, &c).unwrap()).unwrap();
            laws.record(lhs == rhs, || format!("associativity in {}", parent.label()));
            let lhs = ext_mul(&a, &ext_add(&b, &c).unwrap()).unwrap();
            let rhs = ext_add(&ext_mul(&a, &b).unwrap(), &ext_mul(&a, &c).unwrap()).unwrap();
            laws.record(lhs == rhs, || format!("distributivity in {}", parent.label()));
            laws.record(
                ext_mul(&a, &b).unwrap().matrix() == &a.matrix() * &b.matrix(),
                || format!("realization in {}", parent.label()),
            );

            if !a.is_zero() {
                let deg = a.poly().terms().map(|(n, _)| n.unsigned_abs()).max().unwrap_or(0);
                let bound = 2 * deg + 6;
                let hit = (1..=bound).any(|i| {
                    (1..=bound).any(|j| {
                        let e = PullbackElem::new(parent, LaurentPoly::zero(), FiniteRankPart::unit(i, j));
                        !ext_mul(&a, &e).unwrap().is_zero()
                    })
                });
                faithful.record(hit, || format!("no unit detects {} in {}", a.poly(), parent.label()));
            }
        }
    }

    for (n, ext) in family.iter().enumerate() {
        match classify_trivial(ext, cfg) {
            Ok(v) => {
                classify.record(v.index == n as i64 && v.trivial == (n == 0), || {
                    format!("T_{n} classified with index {}", v.index)
                });
                if n == 0 {
                    let ok = v.splitting.as_ref().is_some_and(|s| {
                        &s.sigma_x * &s.sigma_x_inv == BpfMatrix::identity()
                            && &s.sigma_x_inv * &s.sigma_x == BpfMatrix::identity()
                            && s.sigma_x.coset_eq(ext.x_image())
                    });
                    classify.record(ok, || "T_0 splitting is not an exact inverse pair".into());
                }
            }
            Err(e) => classify.record(false, || format!("T_{n}: {e}")),
        }
    }

    let mut witnesses: Vec<(BpfMatrix, BpfMatrix)> = invertible_catalog()
        .into_iter()
        .map(|(u, v)| (u.eval().unwrap(), v.eval().unwrap()))
        .collect();
    witnesses.push((BpfMatrix::identity(), BpfMatrix::identity()));
    for m in 0..=3 {
        for n in 0..=3 {
            for (u, u_inv) in &witnesses {
                let got = equivalence_check(&family[m], &family[n], u, u_inv);
                let is_identity = *u == BpfMatrix::identity();
                match got {
                    Ok(eq) if m != n => separation.record(!eq, || format!("T_{m} ~ T_{n} via {u}")),
                    Ok(eq) if is_identity => separation.record(eq, || format!("T_{m} not reflexive")),
                    Ok(_) => {}
                    Err(e) => separation.record(false, || format!("witness {u}: {e}")),
                }
            }
        }
    }

    SuiteReport {
        suite: "extensions".into(),
        seed,
        checks: vec![units_check, embed_check, laws, faithful, classify, separation],
    }
}

/// Runs one named suite, or all of them for `"all"`.
pub fn run_suite(name: &str, seed: u64, cfg: &TruncationConfig, depth: u32) -> Option<Vec<SuiteReport>> {
    Some(match name {
        "fredholm" => vec![fredholm_suite(seed, 200, cfg)],
        "ring" => vec![ring_suite(seed, 100)],
        "extensions" => vec![extensions_suite(seed, 30, cfg, depth)],
        "all" => vec![
            fredholm_suite(seed, 200, cfg),
            ring_suite(seed, 100),
            extensions_suite(seed, 30, cfg, depth),
        ],
        _ => return None,
    })
}
