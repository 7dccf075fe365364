use num_rational::BigRational;
use num_traits::Signed;
use ppt_moments::det::SignClass;
use ppt_moments::fock::DEFAULT_DISCARD_THRESHOLD;
use ppt_moments::minors::DEFAULT_TOLERANCE;
use ppt_moments::oracle::{partial_transpose_first, partial_transpose_second};
use ppt_moments::minors::Strategy as Search;
use ppt_moments::{
    agreement_audit, build_moment_matrix, det_exact, leading_minor_scan, make_coherent_bell, make_singlet,
    oracle_npt, search_witness, swap_for_partial_transpose, to_density_matrix, Backend, BipartiteState,
    FockSuperposition, GaussianRational, MultiIndex, OperatorOrdering, SearchOptions, Verdict,
};
use proptest::prelude::*;

fn multi_index() -> impl Strategy<Value = MultiIndex> {
    (0u32..4, 0u32..4, 0u32..4, 0u32..4).prop_map(|(p, q, r, s)| MultiIndex::new(p, q, r, s))
}

fn gaussian_rational() -> impl Strategy<Value = GaussianRational> {
    (-4i64..=4, 1i64..=3, -4i64..=4, 1i64..=3).prop_map(|(a, b, c, d)| {
        GaussianRational::new(BigRational::new(a.into(), b.into()), BigRational::new(c.into(), d.into()))
    })
}

fn fock_state() -> impl Strategy<Value = FockSuperposition> {
    prop::collection::vec((gaussian_rational(), 0u32..=2, 0u32..=2), 1..5)
        .prop_filter_map("zero norm", |terms| FockSuperposition::new(terms).ok())
}

fn square(n: usize) -> impl Strategy<Value = Vec<GaussianRational>> {
    prop::collection::vec(gaussian_rational(), n * n)
}

fn mat_mul(a: &[GaussianRational], b: &[GaussianRational], n: usize) -> Vec<GaussianRational> {
    let mut out = vec![GaussianRational::zero(); n * n];
    for r in 0..n {
        for c in 0..n {
            for k in 0..n {
                out[r * n + c] += &(&a[r * n + k] * &b[k * n + c]);
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn swap_is_an_involution(i in multi_index(), j in multi_index()) {
        let (p, q) = swap_for_partial_transpose(i, j);
        prop_assert_eq!(swap_for_partial_transpose(p, q), (i, j));
        prop_assert_eq!((p.a_dag, p.a), (i.a_dag, i.a));
        prop_assert_eq!((q.a_dag, q.a), (j.a_dag, j.a));
    }

    #[test]
    fn partial_transposes_are_involutions(ca in 0u32..4, cb in 0u32..4, seed in any::<u64>()) {
        let dim = ((ca + 1) * (cb + 1)) as usize;
        let entries: Vec<u64> = (0..dim * dim).map(|k| seed.wrapping_mul(k as u64 + 1) >> 7).collect();
        let twice = partial_transpose_second(&partial_transpose_second(&entries, ca, cb), ca, cb);
        prop_assert_eq!(&twice, &entries);
        let both = partial_transpose_first(&partial_transpose_second(&entries, ca, cb), ca, cb);
        let full: Vec<u64> = (0..dim * dim).map(|k| entries[(k % dim) * dim + k / dim]).collect();
        prop_assert_eq!(both, full);
    }

    #[test]
    fn exact_determinant_is_multiplicative(a in square(4), b in square(4)) {
        let lhs = det_exact(&mat_mul(&a, &b, 4), 4);
        let rhs = &det_exact(&a, 4) * &det_exact(&b, 4);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn untransposed_leading_minors_are_nonnegative(psi in fock_state()) {
        let state: BipartiteState = psi.into();
        let ordering = OperatorOrdering::sv_compatible(10);
        let m = build_moment_matrix(&state, &ordering, 10, false, Backend::Auto).unwrap();
        prop_assert!(m.is_hermitian(0.0));
        for r in leading_minor_scan(&m, 10, DEFAULT_TOLERANCE).unwrap() {
            prop_assert_ne!(r.sign, SignClass::Negative, "{} = {}", r.subset, r.determinant);
            if let Some(d) = r.determinant.as_exact() {
                prop_assert!(!d.is_negative());
            }
        }
    }

    #[test]
    fn witnesses_are_sound(psi in fock_state()) {
        let state: BipartiteState = psi.into();
        let m = build_moment_matrix(&state, &OperatorOrdering::sv_compatible(8), 8, true, Backend::Auto).unwrap();
        let result = search_witness(&m, 2, Search::Exhaustive, SearchOptions::default()).unwrap();
        let (ca, cb) = state.natural_cutoffs();
        let oracle = oracle_npt(&state, ca, cb, 1e-9).unwrap();
        prop_assert!(!agreement_audit(&result, &oracle).is_hard_failure());
    }

    #[test]
    fn truncation_keeps_unit_trace(psi in fock_state()) {
        let state: BipartiteState = psi.into();
        let (ca, cb) = state.natural_cutoffs();
        let rho = to_density_matrix(&state, ca, cb, DEFAULT_DISCARD_THRESHOLD).unwrap();
        let trace: GaussianRational = (0..rho.dim())
            .map(|d| rho.exact_entries().unwrap()[d * rho.dim() + d].clone())
            .fold(GaussianRational::zero(), |acc, z| &acc + &z);
        prop_assert_eq!(trace, GaussianRational::one());
    }
}

#[test]
fn guided_and_exhaustive_agree_on_the_singlet() {
    let state: BipartiteState = make_singlet().into();
    let m = build_moment_matrix(&state, &OperatorOrdering::sv_compatible(15), 15, true, Backend::Exact).unwrap();
    let exhaustive = search_witness(&m, 3, Search::Exhaustive, SearchOptions::default()).unwrap();
    let guided = search_witness(&m, 3, Search::EigenvectorGuided, SearchOptions::default()).unwrap();
    assert_eq!(exhaustive.verdict, Verdict::NptWitnessed);
    assert_eq!(guided.verdict, Verdict::NptWitnessed);
    assert!(guided.witness.unwrap().determinant.to_f64() < 0.0);
}

#[test]
fn engine_is_deterministic_across_runs() {
    let state: BipartiteState = make_coherent_bell(1.0.into(), (-0.5).into()).unwrap().into();
    let ordering = OperatorOrdering::sv_compatible(15);
    let first = build_moment_matrix(&state, &ordering, 15, true, Backend::Float).unwrap();
    let second = build_moment_matrix(&state, &ordering, 15, true, Backend::Float).unwrap();
    assert_eq!(first, second);
    assert_eq!(first.fingerprint(), state.fingerprint());
}
