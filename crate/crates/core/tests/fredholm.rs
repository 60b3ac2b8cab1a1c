use rcfm::fredholm::{self, cokernel_basis, fredholm_inverse, index, index_zero_split, kernel_basis, preimage, TruncationConfig, Vector};
use rcfm::oracle::{dense_corank, dense_nullity, stabilized_index};
use rcfm::verify::oracle_agrees;
use rcfm::{parse, BpfMatrix, Rational};

fn m(text: &str) -> BpfMatrix {
    parse(text).unwrap().eval().unwrap()
}

fn cfg() -> TruncationConfig {
    TruncationConfig::default()
}

const CORPUS: &[&str] = &[
    "I",
    "S(1)",
    "S(-1)",
    "S(3)",
    "S(-4)",
    "T(1)",
    "T(-1)",
    "Dgeo(2)",
    "Dgeo(2)^-1",
    "Dfact(-1)",
    "I - E(1,1)",
    "S(1)*S(-1)",
    "S(1) + E(1,3)",
    "S(-1) + 3*E(2,2) - E(5,1)",
    "Dgeo(2)*S(-2) + E(1,1)",
    "T(-1)*S(2)",
    "S(2)*S(-2) + E(4,1)",
    "S(-1) + S(1)*Dgeo(1/2)",
    "conj(Dgeo(2), S(-1) + E(1,2))",
    "conj(I + E(1,2), T(1))",
];

#[test]
fn certified_dimensions_agree_with_the_oracle() {
    for text in CORPUS {
        let a = m(text);
        let r = index(&a, &cfg()).unwrap_or_else(|e| panic!("{text}: {e}"));
        assert!(r.certified, "{text}");
        oracle_agrees(&a, &r, 16).unwrap_or_else(|e| panic!("{text}: {e}"));
    }
}

#[test]
fn bases_have_the_right_dimension_and_are_annihilated() {
    for text in CORPUS {
        let a = m(text);
        let r = index(&a, &cfg()).unwrap();
        let ker = kernel_basis(&a, &cfg()).unwrap();
        let coker = cokernel_basis(&a, &cfg()).unwrap();
        assert_eq!((ker.dim() as u64, coker.dim() as u64), (r.kernel_dim, r.coker_dim), "{text}");
        for v in &ker.vectors {
            assert!(fredholm::apply(&a, v).is_zero(), "{text}: {v}");
        }
        let at = a.transpose();
        for f in &coker.vectors {
            assert!(fredholm::apply(&at, f).is_zero(), "{text}: {f}");
        }
    }
}

#[test]
fn dense_dims_are_constant_past_the_support_bound() {
    for text in CORPUS {
        let a = m(text);
        let r = index(&a, &cfg()).unwrap();
        // coranks need room for the rows the band pushes out of view
        let reach = a.bands().iter().map(|b| b.offset().unsigned_abs()).max().unwrap_or(0);
        let n0 = fredholm::support_bound(&a).unwrap() + reach;
        for n in n0..n0 + 12 {
            assert_eq!(dense_nullity(&a, n), r.kernel_dim, "{text} at {n}");
            assert_eq!(dense_corank(&a, n), r.coker_dim, "{text} at {n}");
        }
    }
}

#[test]
fn oracle_examples() {
    assert_eq!(dense_nullity(&m("S(-1)"), 5), 1);
    assert_eq!(dense_nullity(&m("I"), 8), 0);
    assert_eq!(dense_nullity(&m("S(-2)"), 6), 2);
    assert_eq!(dense_corank(&m("S(1)"), 5), 1);
    assert_eq!(dense_corank(&m("Dgeo(2)"), 6), 0);
    assert_eq!(dense_corank(&m("I - E(1,1)"), 4), 1);

    let s1 = stabilized_index(&m("S(1)"), 64, 16).unwrap();
    assert!(s1.stabilized);
    assert_eq!(s1.index, Some(-1));
    let t = stabilized_index(&m("T(-1)"), 64, 16).unwrap();
    assert_eq!(t.index, Some(1));
    let zero = stabilized_index(&m("0*I"), 16, 4).unwrap();
    assert!(!zero.stabilized);
    assert_eq!(zero.nullities, (1..=16).collect::<Vec<u64>>());
}

#[test]
fn inverse_certificates_have_finite_rank_residuals() {
    for text in CORPUS.iter().filter(|t| !t.contains("Dgeo(1/2)")) {
        let e = parse(text).unwrap();
        let a = e.eval().unwrap();
        let c = fredholm_inverse(&e).unwrap_or_else(|err| panic!("{text}: {err}"));
        let id = BpfMatrix::identity();
        assert_eq!(&id - &(&c.a0 * &a), BpfMatrix::from_finite(c.r.clone()), "{text}");
        assert_eq!(&id - &(&a * &c.a0), BpfMatrix::from_finite(c.s.clone()), "{text}");
        let (ra, r0) = (index(&a, &cfg()).unwrap(), index(&c.a0, &cfg()).unwrap());
        assert_eq!(r0.index, -ra.index, "{text}");
    }
}

#[test]
fn two_band_sums_have_no_inverse_rule() {
    let e = parse("S(-1) + S(1)*Dgeo(1/2)").unwrap();
    assert!(matches!(fredholm_inverse(&e), Err(fredholm::FredholmError::UnsupportedExpression(_))));
}

#[test]
fn split_parts_invert_on_truncations() {
    for text in ["I - E(1,1)", "S(2)*S(-2) + E(4,1)", "Dgeo(2)*S(-1)*S(1) + 2*E(3,1)", "S(1)*S(-1) + E(1,2)"] {
        let a = m(text);
        let split = index_zero_split(&a, &cfg()).unwrap_or_else(|e| panic!("{text}: {e}"));
        assert_eq!(split.u.add_finite(&split.t), a);
        assert!(BpfMatrix::from_finite(split.t.clone()).is_finite_rank());
        for j in 1..=6 {
            let x = preimage(&split.u, &Vector::basis(j), &cfg()).unwrap();
            assert_eq!(fredholm::apply(&split.u, &x), Vector::basis(j), "{text}, e{j}");
        }
    }
}

#[test]
fn split_examples() {
    let s = index_zero_split(&m("I - E(1,1)"), &cfg()).unwrap();
    assert_eq!(s.u, m("I"));
    assert_eq!(BpfMatrix::from_finite(s.t), m("-E(1,1)"));
    let d = index_zero_split(&m("Dgeo(2)"), &cfg()).unwrap();
    assert_eq!(d.u, m("Dgeo(2)"));
    assert!(d.t.is_empty());
    assert_eq!(index_zero_split(&m("S(1)*S(-1)"), &cfg()).unwrap().u, m("I"));
}

#[test]
fn errors_are_reported() {
    assert!(matches!(index(&m("E(1,1)"), &cfg()), Err(fredholm::FredholmError::NotFredholm(_))));
    assert!(matches!(index_zero_split(&m("S(1)"), &cfg()), Err(fredholm::FredholmError::NotIndexZero(-1))));
    let tight = TruncationConfig { max_trunc: 3, window: 16 };
    assert!(matches!(index(&m("S(1) + E(9,9)"), &tight), Err(fredholm::FredholmError::TruncationLimit { .. })));
}

#[test]
fn perturbed_kernel_vector() {
    // the corner entry couples e1 into the kernel
    let a = m("S(-1) + E(1,1)");
    let ker = kernel_basis(&a, &cfg()).unwrap();
    assert_eq!(ker.dim(), 1);
    let v = &ker.vectors[0];
    assert!(fredholm::apply(&a, v).is_zero());
    assert_ne!(v.get(1), Rational::from_integer(0.into()));
}
