//! Property-based checks of the algebraic laws of the term algebra, the
//! star engine and the parser round-trip.

use mwqc_core::{parse, poisson_bracket, serialize, star, star_truncated, StarConfig, StarExpr, Term};
use num_complex::Complex64;
use proptest::prelude::*;

const TOL: f64 = 1e-12;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn arb_complex(radius: f64) -> impl Strategy<Value = Complex64> {
    (-radius..radius, -radius..radius).prop_map(|(re, im)| c(re, im))
}

/// Frequencies are zero half of the time so that polynomial and mixed
/// cases both show up.
fn arb_freq() -> impl Strategy<Value = Complex64> {
    prop_oneof![Just(c(0.0, 0.0)), arb_complex(1.5)]
}

fn arb_term() -> impl Strategy<Value = Term> {
    (arb_complex(2.0), 0u32..3, 0u32..3, arb_freq(), arb_freq())
        .prop_map(|(coeff, m, n, alpha, beta)| Term::new(coeff, m, n, alpha, beta))
}

fn arb_expr() -> impl Strategy<Value = StarExpr> {
    prop::collection::vec(arb_term(), 0..4)
        .prop_map(|raw| StarExpr::canonicalize(raw).expect("finite draws"))
}

fn arb_point() -> impl Strategy<Value = Complex64> {
    arb_complex(1.0)
}

proptest! {
    #[test]
    fn canonicalize_is_idempotent(raw in prop::collection::vec(arb_term(), 0..6)) {
        let once = StarExpr::canonicalize(raw).unwrap();
        let twice = StarExpr::canonicalize(once.terms().to_vec()).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn add_is_commutative_and_associative(f in arb_expr(), g in arb_expr(), h in arb_expr()) {
        prop_assert!(f.add(&g).approx_eq(&g.add(&f), TOL));
        prop_assert!(f.add(&g).add(&h).approx_eq(&f.add(&g.add(&h)), TOL));
    }

    #[test]
    fn mul_is_commutative_and_associative(f in arb_expr(), g in arb_expr(), h in arb_expr()) {
        prop_assert!(f.mul(&g).approx_eq(&g.mul(&f), TOL));
        prop_assert!(f.mul(&g).mul(&h).approx_eq(&f.mul(&g.mul(&h)), 1e-10));
    }

    #[test]
    fn mul_distributes_over_add(f in arb_expr(), g in arb_expr(), h in arb_expr()) {
        let lhs = f.mul(&g.add(&h));
        let rhs = f.mul(&g).add(&f.mul(&h));
        prop_assert!(lhs.approx_eq(&rhs, 1e-10));
    }

    #[test]
    fn conj_is_an_involution(f in arb_expr()) {
        prop_assert_eq!(f.conj().conj(), f);
    }

    #[test]
    fn conj_commutes_with_mul(f in arb_expr(), g in arb_expr()) {
        prop_assert!(f.mul(&g).conj().approx_eq(&f.conj().mul(&g.conj()), TOL));
    }

    #[test]
    fn leibniz_rule_for_both_derivatives(f in arb_expr(), g in arb_expr()) {
        let product = f.mul(&g);
        let dz = product.d_z();
        let dz_leibniz = f.d_z().mul(&g).add(&f.mul(&g.d_z()));
        prop_assert!(dz.approx_eq(&dz_leibniz, 1e-11));
        let dzb = product.d_zbar();
        let dzb_leibniz = f.d_zbar().mul(&g).add(&f.mul(&g.d_zbar()));
        prop_assert!(dzb.approx_eq(&dzb_leibniz, 1e-11));
    }

    #[test]
    fn wirtinger_derivatives_commute(f in arb_expr()) {
        prop_assert!(f.d_z().d_zbar().approx_eq(&f.d_zbar().d_z(), TOL));
    }

    #[test]
    fn eval_is_a_ring_homomorphism(f in arb_expr(), g in arb_expr(), z0 in arb_point()) {
        let sum = f.add(&g).eval(z0).unwrap();
        prop_assert!((sum - (f.eval(z0).unwrap() + g.eval(z0).unwrap())).norm() < 1e-9);
        let prod = f.mul(&g).eval(z0).unwrap();
        let direct = f.eval(z0).unwrap() * g.eval(z0).unwrap();
        let scale = 1f64.max(direct.norm());
        prop_assert!((prod - direct).norm() / scale < 1e-9);
    }

    #[test]
    fn star_at_zero_hbar_is_the_pointwise_product(f in arb_expr(), g in arb_expr()) {
        let got = star(&f, &g, &StarConfig::exact(0.0)).unwrap();
        prop_assert!(got.approx_eq(&f.mul(&g), TOL));
    }

    #[test]
    fn star_is_associative(
        f in arb_term(), g in arb_term(), h in arb_term(), hbar in -2.0..2.0f64
    ) {
        let (f, g, h): (StarExpr, StarExpr, StarExpr) = (f.into(), g.into(), h.into());
        let cfg = StarConfig::exact(hbar);
        let left = star(&star(&f, &g, &cfg).unwrap(), &h, &cfg).unwrap();
        let right = star(&f, &star(&g, &h, &cfg).unwrap(), &cfg).unwrap();
        prop_assert!(left.approx_eq(&right, 1e-10));
    }

    #[test]
    fn star_conjugation_compatibility(
        f in arb_expr(), g in arb_expr(), hbar in -2.0..2.0f64
    ) {
        let cfg = StarConfig::exact(hbar);
        let lhs = star(&f, &g, &cfg).unwrap().conj();
        let rhs = star(&f.conj(), &g.conj(), &cfg).unwrap();
        prop_assert!(lhs.approx_eq(&rhs, 1e-10));
    }

    #[test]
    fn truncated_series_terminates_on_polynomials(
        coeffs in prop::collection::vec(arb_complex(2.0), 1..3),
        hbar in -1.5..1.5f64
    ) {
        // frequency-free inputs make the series nilpotent: the partial sum
        // at the combined degree already equals the exact product
        let f = StarExpr::canonicalize(
            coeffs.iter().enumerate().map(|(k, &w)| Term::monomial(w, k as u32, 1)).collect(),
        ).unwrap();
        let g = StarExpr::canonicalize(
            coeffs.iter().enumerate().map(|(k, &w)| Term::monomial(w, 1, k as u32)).collect(),
        ).unwrap();
        let order = (f.max_pow_sum() + g.max_pow_sum()) as usize;
        let exact = star(&f, &g, &StarConfig::exact(hbar)).unwrap();
        let truncated = star_truncated(&f, &g, hbar, order);
        prop_assert!(exact.approx_eq(&truncated, 1e-10));
    }

    #[test]
    fn bracket_is_antisymmetric(f in arb_expr(), g in arb_expr()) {
        let fg = poisson_bracket(&f, &g);
        let gf = poisson_bracket(&g, &f).scale(c(-1.0, 0.0));
        prop_assert!(fg.approx_eq(&gf, 1e-11));
    }

    #[test]
    fn real_direction_energy_identity(f in arb_expr(), z0 in arb_point()) {
        // |d_x f|^2 + |d_y f|^2 = 2 (|d_z f|^2 + |d_zbar f|^2) pointwise
        let dx = f.d_x().eval(z0).unwrap().norm_sqr();
        let dy = f.d_y().eval(z0).unwrap().norm_sqr();
        let dz = f.d_z().eval(z0).unwrap().norm_sqr();
        let dzb = f.d_zbar().eval(z0).unwrap().norm_sqr();
        let lhs = dx + dy;
        let rhs = 2.0 * (dz + dzb);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * 1f64.max(rhs));
    }

    #[test]
    fn parse_serialize_round_trip(f in arb_expr()) {
        let text = serialize(&f);
        let reparsed = parse(&text).unwrap();
        prop_assert_eq!(reparsed, f);
    }

    #[test]
    fn serialize_parse_is_idempotent(f in arb_expr()) {
        let text = serialize(&f);
        let again = serialize(&parse(&text).unwrap());
        prop_assert_eq!(text, again);
    }
}
