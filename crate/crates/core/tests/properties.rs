use std::sync::Arc;

use proptest::prelude::*;
use qmx_core::extend::{coarse_triangle_violations, Extension, ExtensionParams};
use qmx_core::group::{GroupContext, SubgroupSpec};
use qmx_core::qm::{antisymmetrize, defect_estimate, homogenize_estimate, Quasimorphism};
use qmx_core::rat;
use qmx_core::relcayley::{phi_tilde, RelAlphabet, RelWord, Syllable};
use qmx_core::{Alphabet, Letter, Word};

fn f2() -> Arc<GroupContext> {
    Arc::new(GroupContext::free(Alphabet::new(["a", "b"]).unwrap()))
}

fn word(max: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec((0usize..2, any::<bool>()), 0..=max)
        .prop_map(|ls| Word::from_letters(ls.into_iter().map(|(g, i)| Letter::new(g, i)).collect()))
}

fn kernel_a() -> SubgroupSpec {
    let g = f2();
    let z = Arc::new(GroupContext::free_abelian(Alphabet::new(["t"]).unwrap()));
    SubgroupSpec::kernel(&g, z.clone(), vec![z.parse("t").unwrap(), Word::identity()]).unwrap()
}

fn alph_a() -> RelAlphabet {
    let g = f2();
    let x = vec![g.parse("a").unwrap(), g.parse("a^-1").unwrap()];
    let pool = vec![g.parse("b").unwrap(), g.parse("b^-1").unwrap()];
    RelAlphabet::new(g, kernel_a(), x, pool).unwrap()
}

/// Syllables over X = {a, a⁻¹} and K-letters `aⁱ bᵉ a⁻ⁱ`.
fn rel_word(max: usize) -> impl Strategy<Value = RelWord> {
    let syl = prop_oneof![
        (0usize..2).prop_map(Syllable::X),
        (-2i64..=2, prop_oneof![Just(1i64), Just(-1i64), Just(2i64)]).prop_map(|(i, e)| {
            let a = Word::letter(Letter::gen(0));
            let b = Word::letter(Letter::gen(1));
            Syllable::K(a.pow(i).mul(&b.pow(e)).mul(&a.pow(-i)))
        }),
    ];
    prop::collection::vec(syl, 0..=max).prop_map(RelWord::new)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn free_reduction_is_idempotent_and_inverse_cancels(w in word(12)) {
        let r = w.free_reduce();
        prop_assert!(r.is_reduced());
        prop_assert_eq!(r.free_reduce(), r.clone());
        prop_assert!(w.mul(&w.inverse()).is_empty());
    }

    #[test]
    fn brooks_defect_within_certified_bound(g in word(10), h in word(10)) {
        let ctx = f2();
        for pat in ["a b", "b b", "a b a^-1"] {
            let phi = Quasimorphism::brooks_little(ctx.clone(), SubgroupSpec::Whole, ctx.parse(pat).unwrap()).unwrap();
            let d = phi.certified_defect_upper.unwrap();
            let e = defect_estimate(&phi, &[(g.clone(), h.clone())]).unwrap();
            prop_assert!(e.value <= d, "{} on {}, {}", pat, ctx.format(&g), ctx.format(&h));
            prop_assert_eq!(phi.eval(&g.inverse()).unwrap(), -phi.eval(&g).unwrap());
        }
    }

    #[test]
    fn homogenized_bounds_hold(g in word(6), h in word(6)) {
        let ctx = f2();
        let base = Quasimorphism::brooks_little(ctx.clone(), SubgroupSpec::Whole, ctx.parse("b b").unwrap()).unwrap();
        let hom = Quasimorphism::homogenized(base.clone(), 8).unwrap();
        let e = defect_estimate(&hom, &[(g.clone(), h.clone())]).unwrap();
        prop_assert!(e.value <= hom.certified_defect_upper.unwrap());
        // The N-th power estimate is within D/N of the true homogenization,
        // so two estimates at 4 and 8 are within D/4 + D/8.
        let a = homogenize_estimate(&base, &g, 4).unwrap();
        let b = homogenize_estimate(&base, &g, 8).unwrap();
        prop_assert!(rat::abs(a.value - b.value) <= a.error_radius.unwrap() + b.error_radius.unwrap());
    }

    #[test]
    fn antisymmetrization_is_odd(g in word(10)) {
        let ctx = f2();
        let phi = Quasimorphism::constant(ctx.clone(), SubgroupSpec::Whole, rat::int(3));
        let psi = antisymmetrize(&phi);
        prop_assert_eq!(psi.eval(&g.inverse()).unwrap(), -psi.eval(&g).unwrap());
    }

    #[test]
    fn normal_form_preserves_theta_and_eta(a in rel_word(8)) {
        let alph = alph_a();
        let ctx = alph.ambient().clone();
        let nf = alph.normal_form(&a).unwrap();
        prop_assert!(ctx.equal(&alph.theta(&nf), &alph.theta(&a)).unwrap());
        prop_assert!(ctx.equal(&nf.eta(), &a.eta()).unwrap());
        prop_assert_eq!(alph.normal_form(&nf).unwrap(), nf.clone());
        prop_assert!(nf.len() <= a.len());
        let inv = a.inverse(&alph);
        prop_assert!(ctx.is_identity(&alph.theta(&a.concat(&inv))).unwrap());
        prop_assert!(alph.normal_form(&a.concat(&inv)).unwrap().is_empty());
    }

    #[test]
    fn phi_tilde_is_b_exponent_of_eta(a in rel_word(8)) {
        let alph = alph_a();
        let phi = Quasimorphism::exponent_sum(alph.ambient().clone(), kernel_a(), vec![rat::int(0), rat::int(1)]).unwrap();
        prop_assert_eq!(phi_tilde(&phi, &a).unwrap(), rat::int(a.eta().exponent_vector(2)[1]));
    }

    #[test]
    fn coarse_triangle_holds(a in rel_word(6), b in rel_word(6)) {
        let alph = alph_a();
        let ctx = alph.ambient().clone();
        let base = Quasimorphism::brooks_little(ctx.clone(), kernel_a(), ctx.parse("b b").unwrap()).unwrap();
        let phi = Quasimorphism::homogenized(base, 32).unwrap();
        let d = phi.certified_defect_upper.unwrap();
        let ext = Extension::new(alph, phi, ExtensionParams::new(rat::int(1), d, 4).unwrap()).unwrap();
        prop_assert_eq!(coarse_triangle_violations(&ext, &[(a, b)]).unwrap(), 0);
    }

    #[test]
    fn defect_estimate_is_monotone_in_samples(pairs in prop::collection::vec((word(6), word(6)), 1..12)) {
        let ctx = f2();
        let phi = Quasimorphism::brooks_little(ctx.clone(), SubgroupSpec::Whole, ctx.parse("a b").unwrap()).unwrap();
        let half = defect_estimate(&phi, &pairs[..pairs.len() / 2]).unwrap();
        let all = defect_estimate(&phi, &pairs).unwrap();
        prop_assert!(half.value <= all.value);
    }
}
