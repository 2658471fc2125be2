use proptest::prelude::*;
use rectpoincare_core::grid::{build_grid, Basis, Domain, Grid, GridFunction, Rect};
use rectpoincare_core::weights::{
    dyadic_muckenhoupt, fujii_wilson_constant, lebesgue_r_average, make_weight, muckenhoupt_constant,
    reverse_holder_check, reverse_holder_exponent, Weight,
};

fn interval(lo: f64, hi: f64, n: usize) -> Grid {
    build_grid(Domain::new(&[lo], &[hi]).unwrap(), &[n]).unwrap()
}

/// Exhaustive A_p supremum over every dyadic interval of a 1-D grid, computed with plain loops.
fn brute_force_a2_1d(values: &[f64]) -> f64 {
    let n = values.len();
    let mut best: f64 = 0.0;
    let mut width = n;
    while width >= 1 {
        for start in (0..n).step_by(width) {
            let slice = &values[start..start + width];
            let aw = slice.iter().sum::<f64>() / width as f64;
            let ainv = slice.iter().map(|v| 1.0 / v).sum::<f64>() / width as f64;
            best = best.max(aw * ainv);
        }
        width /= 2;
    }
    best
}

#[test]
fn constant_weight_constants_are_one() {
    let grid = build_grid(Domain::new(&[0.0, 0.0], &[1.0, 2.0]).unwrap(), &[32, 32]).unwrap();
    let w = make_weight("1", grid).unwrap();
    for p in [1.0, 1.5, 2.0, 3.0] {
        let c = muckenhoupt_constant(&w, p, Basis::Rectangles, 5, 50, 7).unwrap();
        assert!((c - 1.0).abs() <= 1e-12, "p={p}: {c}");
    }
    let fw = fujii_wilson_constant(&w, Basis::Rectangles, 4, 4, 7).unwrap();
    assert!((fw - 1.0).abs() <= 0.05, "{fw}");
}

#[test]
fn negative_weight_is_rejected() {
    assert!(make_weight("-1", interval(0.0, 1.0, 8)).is_err());
}

#[test]
fn power_half_a2_matches_exhaustive_oracle_and_grows_with_depth() {
    let grid = interval(-1.0, 1.0, 4096);
    let w = make_weight("|x|^0.5", grid).unwrap();
    let mut previous = 0.0;
    for depth in 0..=12 {
        let c = muckenhoupt_constant(&w, 2.0, Basis::Rectangles, depth, 0, 1).unwrap();
        assert!(c >= 1.0 - 1e-12);
        assert!(c >= previous, "depth {depth}: {c} < {previous}");
        previous = c;
    }
    let oracle = brute_force_a2_1d(w.values());
    assert!((previous - oracle).abs() <= 1e-10 * oracle, "{previous} vs {oracle}");
    let at_ten = muckenhoupt_constant(&w, 2.0, Basis::Rectangles, 10, 0, 1).unwrap();
    assert!(at_ten.is_finite() && at_ten < 2.0);
}

#[test]
fn inverse_square_weight_is_flagged_as_non_a2() {
    // Finer grids resolve more of the singularity; the estimate grows roughly linearly in N.
    let estimate = |depth: u32| {
        let w = make_weight("|x|^(-2)", interval(-1.0, 1.0, 1 << depth)).unwrap();
        muckenhoupt_constant(&w, 2.0, Basis::Rectangles, depth, 0, 1).unwrap()
    };
    let (coarse, fine) = (estimate(4), estimate(12));
    assert!(fine > 10.0 * coarse, "{fine} vs {coarse}");
}

#[test]
fn fujii_wilson_is_monotone_and_below_a2() {
    let w = make_weight("|x|^0.5", interval(-1.0, 1.0, 1024)).unwrap();
    let mut previous = 0.0;
    for depth in 0..=6 {
        let v = fujii_wilson_constant(&w, Basis::Rectangles, depth, 3, 11).unwrap();
        assert!(v >= previous - 1e-15);
        previous = v;
    }
    let mut previous = 0.0;
    for shifts in 1..=5 {
        let v = fujii_wilson_constant(&w, Basis::Rectangles, 6, shifts, 11).unwrap();
        assert!(v >= previous - 1e-15, "shifts {shifts}");
        previous = v;
    }
    let a2 = muckenhoupt_constant(&w, 2.0, Basis::Rectangles, 6, 0, 11).unwrap();
    let ainf = fujii_wilson_constant(&w, Basis::Rectangles, 6, 1, 11).unwrap();
    assert!(ainf >= 1.0 && ainf <= a2, "{ainf} vs {a2}");
}

#[test]
fn lebesgue_r_average_oracles() {
    let grid = interval(0.0, 1.0, 64);
    let root = Rect::root(*grid.domain());
    let two_valued = Weight::new(GridFunction::from_fn(grid, |x| if x[0] < 0.5 { 1.0 } else { 4.0 })).unwrap();
    let value = lebesgue_r_average(&two_valued, 2.0, &root).unwrap();
    assert!((value - (17.0f64 / 2.0).sqrt()).abs() < 1e-12, "{value}");

    let constant = Weight::constant(grid, 3.0).unwrap();
    for r in [1.5, 2.0, 7.0] {
        let child = root.children()[1];
        let v = lebesgue_r_average(&constant, r, &child).unwrap();
        assert!((v - 3.0 * child.measure()).abs() < 1e-12);
    }
    let near_one = lebesgue_r_average(&two_valued, 1.001, &root).unwrap();
    let plain = two_valued.measure(&root).unwrap();
    assert!(near_one >= plain && (near_one - plain) / plain < 0.005);
}

#[test]
fn reverse_holder_passes_for_power_weight_against_closed_form() {
    let w = make_weight("|x|^0.5", interval(-1.0, 1.0, 1024)).unwrap();
    let ainf = fujii_wilson_constant(&w, Basis::Rectangles, 6, 4, 3).unwrap();
    let eps = reverse_holder_exponent(1, ainf);
    let root = Rect::root(*w.grid().domain());
    // Closed form of ∫_a^b |x|^s dx for the oracle.
    let integral = |a: f64, b: f64, s: f64| {
        let prim = |x: f64| x.signum() * x.abs().powf(s + 1.0) / (s + 1.0);
        prim(b) - prim(a)
    };
    for rect in root.subtree(6) {
        let report = reverse_holder_check(&w, &rect, ainf).unwrap();
        assert!(report.pass, "{:?}", rect.key());
        let (a, b) = (rect.lower(0), rect.upper(0));
        let len = b - a;
        let lhs = integral(a, b, 0.5 * (1.0 + eps)) / len;
        let rhs = 2.0 * (integral(a, b, 0.5) / len).powf(1.0 + eps);
        assert!(lhs <= rhs);
    }
    let constant = Weight::constant(*w.grid(), 5.0).unwrap();
    assert!(reverse_holder_check(&constant, &root, 1.0).unwrap().pass);
}

#[test]
fn geometric_estimate_holds_on_the_pool() {
    let grid = build_grid(Domain::new(&[-1.0, -1.0], &[1.0, 1.0]).unwrap(), &[32, 32]).unwrap();
    let w = make_weight("power:0.5", grid).unwrap();
    let p = 2.0;
    let root = Rect::root(*grid.domain());
    for rect in root.subtree(2) {
        let estimate = dyadic_muckenhoupt(&w, p, &rect, 5).unwrap();
        let wr = w.measure(&rect).unwrap();
        for sub in rect.subtree(2) {
            let lhs = (sub.measure() / rect.measure()).powf(p);
            let rhs = estimate * w.measure(&sub).unwrap() / wr;
            assert!(lhs <= rhs * (1.0 + 1e-12));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn constants_are_scale_invariant(scale in 0.01f64..100.0, exponent in -0.9f64..0.9) {
        let w = make_weight(&format!("|x|^({exponent})"), interval(-1.0, 1.0, 256)).unwrap();
        let scaled = w.scaled(scale).unwrap();
        for p in [1.0, 2.0] {
            let a = muckenhoupt_constant(&w, p, Basis::Rectangles, 8, 16, 5).unwrap();
            let b = muckenhoupt_constant(&scaled, p, Basis::Rectangles, 8, 16, 5).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a);
        }
        let a = fujii_wilson_constant(&w, Basis::Rectangles, 4, 2, 5).unwrap();
        let b = fujii_wilson_constant(&scaled, Basis::Rectangles, 4, 2, 5).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a);
    }

    #[test]
    fn wider_scans_never_decrease(extra in 0usize..40) {
        let grid = build_grid(Domain::new(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), &[16, 16]).unwrap();
        let w = make_weight("1 + x1^2 + 3*x2", grid).unwrap();
        let small = muckenhoupt_constant(&w, 2.0, Basis::Rectangles, 3, extra, 9).unwrap();
        let large = muckenhoupt_constant(&w, 2.0, Basis::Rectangles, 4, extra, 9).unwrap();
        prop_assert!(large >= small);
        prop_assert!(small >= 1.0 - 1e-12);
    }
}
