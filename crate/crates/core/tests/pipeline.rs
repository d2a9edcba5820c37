use std::sync::Arc;

use qmx_core::control::{control_profile, kernel_enumerate, ControlVerdict};
use qmx_core::extend::{extended_qm, Extension, ExtensionParams};
use qmx_core::group::{ball, GroupContext, SubgroupSpec};
use qmx_core::qm::Quasimorphism;
use qmx_core::rat;
use qmx_core::relcayley::RelAlphabet;
use qmx_core::scl::{bavard_lower, cl_mixed_upper_with, scl_upper_estimate, CommutatorTable};
use qmx_core::{Alphabet, Word};

fn f2() -> Arc<GroupContext> {
    Arc::new(GroupContext::free(Alphabet::new(["a", "b"]).unwrap()))
}

fn kernel_a(g: &GroupContext) -> SubgroupSpec {
    let z = Arc::new(GroupContext::free_abelian(Alphabet::new(["t"]).unwrap()));
    SubgroupSpec::kernel(g, z.clone(), vec![z.parse("t").unwrap(), Word::identity()]).unwrap()
}

fn scenario_a() -> (RelAlphabet, Quasimorphism) {
    let g = f2();
    let k = kernel_a(&g);
    let x = vec![g.parse("a").unwrap(), g.parse("a^-1").unwrap()];
    let pool = vec![g.parse("b").unwrap(), g.parse("b^-1").unwrap()];
    let alph = RelAlphabet::new(g.clone(), k.clone(), x, pool).unwrap();
    let phi = Quasimorphism::exponent_sum(g, k, vec![rat::int(0), rat::int(1)]).unwrap();
    (alph, phi)
}

#[test]
fn scenario_a_is_conserved_and_extends_exactly() {
    let (alph, phi) = scenario_a();
    let ks = kernel_enumerate(&alph, 6, true, 1_000_000).unwrap();
    assert!(ks.len() > 10);
    let prof = control_profile(&phi, &ks, 0).unwrap();
    assert_eq!(prof.fitted_c0, rat::int(0));
    assert_eq!(prof.clamped_c0(), rat::int(1));
    assert_eq!(prof.verdict, ControlVerdict::LinearlyControlled);

    let params = ExtensionParams::new(prof.clamped_c0(), rat::int(0), 12).unwrap();
    let ext = Arc::new(Extension::new(alph, phi, params).unwrap());
    let big = extended_qm(ext.clone());
    let g = ext.alphabet().ambient().clone();
    for w in &ball(&g, 4, 10_000).unwrap().elements {
        assert_eq!(big.eval(w).unwrap(), rat::int(w.exponent_vector(2)[1]), "{}", g.format(w));
        let v = ext.value(w).unwrap();
        assert!(v.lower <= v.upper);
    }
}

#[test]
fn commutator_length_is_antitone_in_search_size() {
    let g = f2();
    let whole = SubgroupSpec::Whole;
    let small = CommutatorTable::build(&g, &whole, 1, 100_000).unwrap();
    let large = CommutatorTable::build(&g, &whole, 2, 100_000).unwrap();
    assert!(small.len() < large.len());
    let ball2 = ball(&g, 2, 1000).unwrap();
    let samples: Vec<Word> = ball2
        .elements
        .iter()
        .flat_map(|u| ball2.elements.iter().map(move |v| Word::commutator(u, v)))
        .step_by(5)
        .collect();
    for c in &samples {
        let mut prev: Option<usize> = None;
        for q in 1..=2 {
            let a = cl_mixed_upper_with(&g, &whole, &small, c, q).unwrap();
            let b = cl_mixed_upper_with(&g, &whole, &large, c, q).unwrap();
            if let Some(a) = a {
                assert!(b.is_some_and(|b| b <= a));
            }
            if let (Some(p), Some(a)) = (prev, a) {
                assert!(a <= p);
            }
            prev = a.or(prev);
        }
    }
}

#[test]
fn mixed_length_dominates_plain_length() {
    let g = f2();
    let k = kernel_a(&g);
    let plain = CommutatorTable::build(&g, &SubgroupSpec::Whole, 2, 100_000).unwrap();
    let mixed = CommutatorTable::build(&g, &k, 2, 100_000).unwrap();
    assert!(mixed.len() <= plain.len());
    for s in ["[a,b]", "[b,a]", "[a^2,b]", "[a,b] [b,a^-1]"] {
        let w = g.parse(s).unwrap();
        let p = cl_mixed_upper_with(&g, &SubgroupSpec::Whole, &plain, &w, 2).unwrap();
        let m = cl_mixed_upper_with(&g, &k, &mixed, &w, 2).unwrap();
        if let (Some(p), Some(m)) = (p, m) {
            assert!(p <= m, "{s}");
        }
    }
}

#[test]
fn powers_of_commutator_bounds() {
    let g = f2();
    let whole = SubgroupSpec::Whole;
    let table = CommutatorTable::build(&g, &whole, 5, 1_000_000).unwrap();
    let c = g.parse("[a,b]").unwrap();
    let est = scl_upper_estimate(&g, &whole, &table, &c, &[1, 2, 3], 2).unwrap();
    let cl: Vec<(u32, usize)> = est.iter().map(|&(n, cl, _)| (n, cl)).collect();
    assert_eq!(cl, vec![(1, 1), (2, 2), (3, 2)]);
    assert!(est[2].2 <= rat::ratio(2, 3));
    // cl(g^{m+n}) ≤ cl(g^m) + cl(g^n).
    assert!(cl[1].1 <= 2 * cl[0].1 && cl[2].1 <= cl[0].1 + cl[1].1);

    let phi = Quasimorphism::brooks_little(g.clone(), whole, g.parse("a b").unwrap()).unwrap();
    let lower = bavard_lower(&phi, &c, 64, false).unwrap().value;
    assert!(lower > rat::int(0));
    for (_, _, upper) in est {
        assert!(lower <= upper);
    }
}
