use std::sync::Arc;

use proptest::prelude::*;
use rectpoincare_core::conditions::{
    b_wq, condition_ratio, conjugate, exhaustive_families, m_choice, sample_disjoint_families, sobolev_exponent,
    ConditionTest, ExponentKind, ExponentParams, SamplerOptions,
};
use rectpoincare_core::expr::Expr;
use rectpoincare_core::functionals::{FunctionInput, FunctionalSpec};
use rectpoincare_core::grid::{build_grid, Domain, Grid, GridFunction, Rect};
use rectpoincare_core::weights::{dyadic_muckenhoupt, Weight};

fn grid(dim: usize, n: usize) -> Grid {
    build_grid(Domain::unit(dim).unwrap(), &vec![n; dim]).unwrap()
}

fn density(grid: Grid, text: &str) -> GridFunction {
    Expr::parse(text, grid.dim()).unwrap().sample(grid)
}

#[test]
fn single_family_with_certain_stop_is_the_root() {
    let g = grid(2, 16);
    let root = Rect::root(*g.domain());
    let options = SamplerOptions { stop_probability: 1.0, smallness: None };
    let families = sample_disjoint_families(&root, 1, 3, options, 7).unwrap();
    assert_eq!(families.len(), 1);
    assert_eq!(families[0].members(), &[root]);
}

#[test]
fn fixed_level_families_cover_the_root() {
    let g = grid(2, 16);
    let root = Rect::root(*g.domain());
    let families = sample_disjoint_families(&root, 4, 3, SamplerOptions::default(), 1).unwrap();
    for (level, fam) in families.iter().enumerate() {
        assert_eq!(fam.len(), 1 << (2 * level));
        assert!((fam.smallness() - 1.0).abs() < 1e-15);
    }
}

#[test]
fn smallness_target_is_respected() {
    let g = grid(2, 32);
    let root = Rect::root(*g.domain());
    let options = SamplerOptions { smallness: Some(0.25), ..SamplerOptions::default() };
    let families = sample_disjoint_families(&root, 200, 5, options, 3).unwrap();
    assert_eq!(families.len(), 200);
    assert!(families.iter().all(|f| f.smallness() <= 0.25 + 1e-12 && !f.is_empty()));
}

#[test]
fn sampling_is_deterministic_in_the_seed() {
    let g = grid(1, 64);
    let root = Rect::root(*g.domain());
    let a = sample_disjoint_families(&root, 50, 6, SamplerOptions::default(), 11).unwrap();
    let b = sample_disjoint_families(&root, 50, 6, SamplerOptions::default(), 11).unwrap();
    assert_eq!(a, b);
}

#[test]
fn exhaustive_enumeration_counts_antichains() {
    // In one dimension a node has 1 + 1 + (options of two children) antichain choices:
    // depth 0: 2 ({}, {node}); depth 1: 2·2 + 1 = 5; depth 2: 5·5 + 1 = 26.
    let root = Rect::root(Domain::unit(1).unwrap());
    assert_eq!(exhaustive_families(&root, 1).unwrap().len(), 4);
    assert_eq!(exhaustive_families(&root, 2).unwrap().len(), 25);
    let square = Rect::root(Domain::unit(2).unwrap());
    assert_eq!(exhaustive_families(&square, 1).unwrap().len(), 16);
    assert_eq!(exhaustive_families(&square, 2).unwrap().len(), 17usize.pow(4));
}

#[test]
fn constant_functional_satisfies_dp_with_norm_one() {
    let g = grid(2, 16);
    let root = Rect::root(*g.domain());
    let f = FunctionInput::from_samples(GridFunction::constant(g, 0.0));
    let families = exhaustive_families(&root, 2).unwrap();
    for p in [1.0, 2.0, 3.5] {
        let verdict =
            condition_ratio(&FunctionalSpec::ConstantOne, &f, None, &root, &families, &ConditionTest::dp(p, 1.0))
                .unwrap();
        assert!(verdict.pass);
        assert!((verdict.max_ratio - 1.0).abs() < 1e-12, "covering families give exactly 1");
    }
}

#[test]
fn measure_functional_has_unit_sd_norm() {
    for dim in [1usize, 2] {
        let g = grid(dim, if dim == 1 { 256 } else { 32 });
        let root = Rect::root(*g.domain());
        let w = Arc::new(Weight::new(density(g, "exp(sin(7*x1)) + 0.1")).unwrap());
        let mu = Arc::new(density(g, "1 + x1*x1 + 0.5*cos(9*x1)"));
        let f = FunctionInput::from_samples(GridFunction::constant(g, 0.0));
        let families = sample_disjoint_families(&root, 300, 5, SamplerOptions::default(), 5).unwrap();
        for delta in [0.5, 1.0] {
            for p in [1.0, 2.0] {
                let spec = FunctionalSpec::Measure { delta, p, mu: mu.clone(), weight: w.clone() };
                let s = dim as f64 / delta;
                let verdict =
                    condition_ratio(&spec, &f, Some(&w), &root, &families, &ConditionTest::sdp(p, s, 1.0)).unwrap();
                assert!(verdict.pass, "n={dim} δ={delta} p={p}: {}", verdict.max_ratio);
                assert!(!verdict.degenerate);
            }
        }
    }
}

#[test]
fn vanishing_functional_gives_zero_ratio() {
    let g = grid(1, 16);
    let root = Rect::root(*g.domain());
    let w = Arc::new(Weight::constant(g, 1.0).unwrap());
    let mu = Arc::new(GridFunction::constant(g, 0.0));
    let spec = FunctionalSpec::Sum(vec![FunctionalSpec::Measure { delta: 0.5, p: 1.0, mu, weight: w.clone() }]);
    let f = FunctionInput::from_samples(GridFunction::constant(g, 0.0));
    let families = exhaustive_families(&root, 1).unwrap();
    let verdict = condition_ratio(&spec, &f, Some(&w), &root, &families, &ConditionTest::dp(1.0, 1.0)).unwrap();
    assert_eq!(verdict.max_ratio, 0.0);
    assert!(verdict.pass && !verdict.degenerate);
}

#[test]
fn exponent_calculus_examples() {
    let classic = sobolev_exponent(ExponentKind::Classic, &ExponentParams::new(1.0, 2)).unwrap();
    assert_eq!(classic, 2.0);
    let e = std::f64::consts::E;
    let weighted =
        sobolev_exponent(ExponentKind::Weighted, &ExponentParams::new(2.0, 2).delta(1.0).q(1.0).awc(e)).unwrap();
    assert!((weighted - 4.0).abs() < 1e-12);
    let trivial =
        sobolev_exponent(ExponentKind::Weighted, &ExponentParams::new(1.5, 3).delta(0.5).q(1.0).awc(1.0)).unwrap();
    let classic = sobolev_exponent(ExponentKind::Classic, &ExponentParams::new(1.5, 3).delta(0.5)).unwrap();
    assert!((trivial - classic).abs() < 1e-12);
    assert!(b_wq(1.0, 1.0).is_infinite());
    assert!(sobolev_exponent(ExponentKind::Classic, &ExponentParams::new(2.0, 2)).is_err());
    assert!(sobolev_exponent(ExponentKind::Smallness, &ExponentParams::new(1.0, 2).q(1.0).m(1.0)).is_err());
}

#[test]
fn m_choice_turns_the_smallness_exponent_into_the_weighted_one() {
    for &(awc, q, p, n, delta) in &[(3.0, 1.0, 1.0, 2, 1.0), (10.0, 2.0, 2.5, 3, 0.7), (1.5, 1.2, 1.3, 4, 0.3)] {
        let m = m_choice(awc, q);
        assert_eq!(m, 1.0 + awc.ln() / q);
        assert!((b_wq(awc, q) - conjugate(m)).abs() < 1e-12 * conjugate(m));
        let base = ExponentParams::new(p, n).delta(delta).q(q);
        let small = sobolev_exponent(ExponentKind::Smallness, &base.m(m)).unwrap();
        let weighted = sobolev_exponent(ExponentKind::Weighted, &base.awc(awc)).unwrap();
        assert!((small - weighted).abs() < 1e-12 * weighted);
    }
}

#[test]
fn lemma_bound_holds_for_power_weight() {
    let domain = Domain::new(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
    let g = build_grid(domain, &[32, 32]).unwrap();
    let root = Rect::root(domain);
    let w = Arc::new(Weight::new(density(g, "sqrt(sqrt(x1*x1 + x2*x2))")).unwrap());
    let mu = Arc::new(density(g, "2 + sin(5*x1)*cos(3*x2)"));
    let f = FunctionInput::from_samples(GridFunction::constant(g, 0.0));
    let (n, q, m, p, delta) = (2.0, 1.0, 2.0, 1.0, 1.0);
    let p_star = sobolev_exponent(ExponentKind::Smallness, &ExponentParams::new(p, 2).delta(delta).q(q).m(m)).unwrap();
    assert!((p_star - 4.0 / 3.0).abs() < 1e-12);
    let s = n * conjugate(m) / delta;
    let depth = 5;
    let awc = dyadic_muckenhoupt(&w, q, &root, depth).unwrap();
    let bound = awc.powf(delta / (n * q * m));
    let families = sample_disjoint_families(&root, 200, depth, SamplerOptions::default(), 9).unwrap();
    let spec = FunctionalSpec::Measure { delta, p, mu, weight: w.clone() };
    let verdict = condition_ratio(&spec, &f, Some(&w), &root, &families, &ConditionTest::sdp(p_star, s, bound)).unwrap();
    assert!(verdict.pass, "{} vs {bound}", verdict.max_ratio);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sobolev_ladder_is_strict(p in 1.0f64..1.9, q_frac in 0.0f64..1.0, awc in 1.01f64..50.0, delta in 0.1f64..1.0) {
        let n = 2usize;
        let q = 1.0 + q_frac * (p - 1.0);
        let m = m_choice(awc, q);
        let base = ExponentParams::new(p, n).delta(delta).q(q);
        let small = sobolev_exponent(ExponentKind::Smallness, &base.m(m)).unwrap();
        let classic = sobolev_exponent(ExponentKind::Classic, &base).unwrap();
        prop_assert!(p < small && small < classic);
    }

    #[test]
    fn dp_families_are_small_in_the_first_power(seed in 0u64..500, l in 2.0f64..8.0, p in 1.2f64..3.0) {
        let g = grid(1, 64);
        let root = Rect::root(*g.domain());
        let w = Arc::new(Weight::new(density(g, "1 + x1")).unwrap());
        let mu = Arc::new(density(g, "exp(x1)"));
        let f = FunctionInput::from_samples(GridFunction::constant(g, 0.0));
        let spec = FunctionalSpec::Measure { delta: 0.5, p: 2.0, mu, weight: w };
        let options = SamplerOptions { smallness: Some(1.0 / l), ..SamplerOptions::default() };
        let families = sample_disjoint_families(&root, 20, 5, options, seed).unwrap();
        for family in families.chunks(1) {
            let dp = condition_ratio(&spec, &f, None, &root, family, &ConditionTest::dp(p, 1.0)).unwrap();
            let first = condition_ratio(&spec, &f, None, &root, family, &ConditionTest::dp(1.0, 1.0)).unwrap();
            let bound = dp.max_ratio * l.powf(-1.0 / conjugate(p));
            prop_assert!(first.max_ratio <= bound * (1.0 + 1e-10), "{} > {}", first.max_ratio, bound);
        }
    }
}
