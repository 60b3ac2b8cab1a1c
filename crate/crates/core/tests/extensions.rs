use std::sync::Arc;

use rcfm::extensions::{
    classify_trivial, diag_independence, embed, equivalence_check, ext_add, ext_mul, family_tn, make_extension,
    matrix_units, ExtensionError, LaurentPoly, PullbackElem,
};
use rcfm::fredholm::TruncationConfig;
use rcfm::verify::invertible_catalog;
use rcfm::{parse, BpfMatrix, FiniteRankPart, Rational};

fn m(text: &str) -> BpfMatrix {
    parse(text).unwrap().eval().unwrap()
}

fn q(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

#[test]
fn units_from_both_generator_pairs() {
    let s = matrix_units(&m("S(-1)"), &m("S(1)"), 4).unwrap();
    for i in 1..=4 {
        for j in 1..=4 {
            assert_eq!(s.unit(i, j).unwrap(), &BpfMatrix::unit(i, j));
        }
    }
    let t = matrix_units(&m("T(-1)"), &m("T(1)"), 4).unwrap();
    assert_eq!(t.unit(1, 1).unwrap(), &BpfMatrix::unit(1, 1));
    // T-units are (i!/j!)·e_ij
    assert_eq!(t.unit(3, 1).unwrap(), &m("6*E(3,1)"));
    assert_eq!(t.unit(1, 3).unwrap(), &m("1/6*E(1,3)"));
    assert_eq!(s.unit(1, 2).unwrap() * s.unit(2, 3).unwrap(), s.unit(1, 3).unwrap().clone());
    assert!((s.unit(1, 2).unwrap() * s.unit(3, 3).unwrap()).is_zero());
}

#[test]
fn unit_construction_rejects_bad_pairs() {
    assert!(matches!(matrix_units(&m("S(1)"), &m("S(-1)"), 3), Err(ExtensionError::NotRightInverse)));
    assert!(matches!(matrix_units(&m("Dgeo(2)"), &m("Dgeo(1/2)"), 3), Err(ExtensionError::NotDirectlyInfinite)));
}

#[test]
fn shift_embedding_fixes_the_ideal() {
    let units = matrix_units(&m("S(-1)"), &m("S(1)"), 5).unwrap();
    assert_eq!(embed(&m("S(-1)"), &units, 3).unwrap(), m("S(-1)").truncate(3, 3));
    assert_eq!(embed(&m("I"), &units, 4).unwrap(), m("I").truncate(4, 4));
    for text in ["E(2,1)", "E(1,1) - 2*E(3,2) + 1/2*E(5,5)"] {
        assert_eq!(embed(&m(text), &units, 5).unwrap(), m(text).truncate(5, 5), "{text}");
    }
}

#[test]
fn weighted_embedding_conjugates_by_factorials() {
    let units = matrix_units(&m("T(-1)"), &m("T(1)"), 5).unwrap();
    for text in ["E(2,1)", "E(1,3) + E(4,4)", "T(-1) + E(2,5)"] {
        let want = &(&m("Dfact(-1)") * &m(text)) * &m("Dfact(1)");
        assert_eq!(embed(&m(text), &units, 5).unwrap(), want.truncate(5, 5), "{text}");
    }
}

#[test]
fn extensions_are_validated() {
    assert!(make_extension(&m("S(-1)"), &m("S(1)"), "T_1", 4).is_ok());
    assert!(make_extension(&m("Dgeo(2)"), &m("Dgeo(1/2)"), "T_0", 4).is_ok());
    assert!(matches!(make_extension(&m("I"), &m("I"), "bad", 2), Err(ExtensionError::DependentMonomials(_))));
    assert!(matches!(make_extension(&m("S(-1)"), &m("S(2)"), "bad", 2), Err(ExtensionError::NotCosetInverse)));
}

#[test]
fn family_generators() {
    let t2 = family_tn(2, 6);
    assert_eq!(t2.x_image(), &m("S(-2)"));
    assert_eq!(t2.y_image(), &m("S(2)"));
    assert_eq!(family_tn(0, 6).x_image(), &m("Dgeo(2)"));
}

#[test]
fn pullback_products() {
    let t1 = Arc::new(family_tn(1, 6));
    let x = PullbackElem::new(&t1, LaurentPoly::monomial(1, q(1)), FiniteRankPart::new());
    let y = PullbackElem::new(&t1, LaurentPoly::monomial(-1, q(1)), FiniteRankPart::new());
    let xy = ext_mul(&x, &y).unwrap();
    assert_eq!(xy.poly(), &LaurentPoly::one());
    assert!(xy.correction().is_empty());
    let yx = ext_mul(&y, &x).unwrap();
    assert_eq!(yx.poly(), &LaurentPoly::one());
    assert_eq!(BpfMatrix::from_finite(yx.correction().clone()), m("-E(1,1)"));

    let t0 = Arc::new(family_tn(0, 6));
    let x0 = PullbackElem::new(&t0, LaurentPoly::monomial(1, q(1)), FiniteRankPart::new());
    let y0 = PullbackElem::new(&t0, LaurentPoly::monomial(-1, q(1)), FiniteRankPart::new());
    assert!(ext_mul(&x0, &y0).unwrap().correction().is_empty());

    assert!(matches!(ext_mul(&x, &x0), Err(ExtensionError::ParentMismatch)));
}

#[test]
fn pullback_ring_laws_match_matrices() {
    let t2 = Arc::new(family_tn(2, 6));
    let mut corr = FiniteRankPart::new();
    corr.add_entry(2, 3, q(5));
    let a = PullbackElem::new(&t2, LaurentPoly::from_terms([(2, q(1)), (-1, q(3))]), corr);
    let b = PullbackElem::new(&t2, LaurentPoly::from_terms([(0, q(-2)), (1, q(1))]), FiniteRankPart::new());
    let c = PullbackElem::new(&t2, LaurentPoly::monomial(-3, q(1)), FiniteRankPart::new());
    let ab_c = ext_mul(&ext_mul(&a, &b).unwrap(), &c).unwrap();
    let a_bc = ext_mul(&a, &ext_mul(&b, &c).unwrap()).unwrap();
    assert_eq!(ab_c.matrix(), a_bc.matrix());
    assert_eq!(ab_c.matrix(), &(&a.matrix() * &b.matrix()) * &c.matrix());
    let dist = ext_mul(&a, &ext_add(&b, &c).unwrap()).unwrap();
    assert_eq!(dist.matrix(), ext_add(&ext_mul(&a, &b).unwrap(), &ext_mul(&a, &c).unwrap()).unwrap().matrix());
}

#[test]
fn classification_follows_the_index() {
    let cfg = TruncationConfig::default();
    for n in 0..=5u64 {
        let v = classify_trivial(&family_tn(n, 6), &cfg).unwrap();
        assert_eq!(v.index, n as i64);
        assert_eq!(v.trivial, n == 0);
    }
    let v0 = classify_trivial(&family_tn(0, 6), &cfg).unwrap();
    let s = v0.splitting.unwrap();
    assert_eq!(s.sigma_x, m("Dgeo(2)"));
    assert_eq!(s.sigma_x_inv, m("Dgeo(1/2)"));
}

#[test]
fn trivial_extension_with_a_perturbed_generator() {
    // index 0, nonzero kernel: the splitting moves the generator by a finite matrix
    let x = m("Dgeo(2) - E(1,1)");
    let y = m("Dgeo(1/2)");
    let ext = make_extension(&x, &y, "perturbed", 4).unwrap();
    let v = classify_trivial(&ext, &TruncationConfig::default()).unwrap();
    assert!(v.trivial);
    let s = v.splitting.unwrap_or_else(|| panic!("{:?}", v.diagnostic));
    assert!(s.sigma_x.coset_eq(&x));
    assert_eq!(&s.sigma_x * &s.sigma_x_inv, BpfMatrix::identity());
    assert_eq!(&s.sigma_x_inv * &s.sigma_x, BpfMatrix::identity());
}

#[test]
fn equivalence_examples() {
    let s = make_extension(&m("S(-1)"), &m("S(1)"), "S", 4).unwrap();
    let t = make_extension(&m("T(-1)"), &m("T(1)"), "T", 4).unwrap();
    assert!(equivalence_check(&s, &t, &m("Dfact(-1)"), &m("Dfact(1)")).unwrap());
    let t1 = family_tn(1, 6);
    assert!(equivalence_check(&t1, &t1, &m("I"), &m("I")).unwrap());
    assert!(matches!(
        equivalence_check(&t1, &t1, &m("Dgeo(2)"), &m("Dgeo(2)")),
        Err(ExtensionError::NotInvertibleWitness)
    ));
}

#[test]
fn distinct_family_members_are_never_equivalent() {
    let catalog = invertible_catalog();
    for a in 0..=3u64 {
        for b in 0..=3u64 {
            let (ea, eb) = (family_tn(a, 6), family_tn(b, 6));
            if a == b {
                assert!(equivalence_check(&ea, &eb, &m("I"), &m("I")).unwrap());
                continue;
            }
            for (u, u_inv) in &catalog {
                let ok = equivalence_check(&ea, &eb, &u.eval().unwrap(), &u_inv.eval().unwrap()).unwrap();
                assert!(!ok, "T_{a} ~ T_{b} via {u}");
            }
        }
    }
}

#[test]
fn vandermonde_examples() {
    assert!(diag_independence(&[0, 1, 2], 5).unwrap());
    assert!(diag_independence(&[3], 7).unwrap());
    assert!(diag_independence(&[-1, 0, 1, 2], 10).unwrap());
    assert!(diag_independence(&(-4..=4).collect::<Vec<_>>(), 1).unwrap());
    assert!(matches!(diag_independence(&[1, 2, 1], 1), Err(ExtensionError::DuplicateExponents(1))));
}
