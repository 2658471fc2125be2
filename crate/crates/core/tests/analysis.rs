use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rectpoincare_core::analysis::{
    cz_decompose, dyadic_maximal, dyadic_pool, optimal_delta_oscillation, oscillation, project_polynomial,
    sharp_maximal, telescope, truncate, truncate_level, weak_norm, weak_norm_values, Center, ProjectionBasis,
    Truncation,
};
use rectpoincare_core::grid::{build_grid, Domain, Grid, GridFunction, Rect};

fn unit_interval(n: usize) -> Grid {
    build_grid(Domain::unit(1).unwrap(), &[n]).unwrap()
}

fn unit_square(n: usize) -> Grid {
    build_grid(Domain::unit(2).unwrap(), &[n, n]).unwrap()
}

fn random_function(grid: Grid, seed: u64, nonnegative: bool) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.cell_count())
        .map(|_| {
            let v: f64 = rng.gen_range(-1.0..1.0);
            if nonnegative {
                (3.0 * v).exp()
            } else {
                v * 5.0
            }
        })
        .collect();
    GridFunction::from_values(grid, values).unwrap()
}

#[test]
fn mean_projection_of_identity_is_one_half() {
    let grid = unit_interval(64);
    let f = GridFunction::from_fn(grid, |x| x[0]);
    let root = Rect::root(*grid.domain());
    let proj = project_polynomial(&f, &root, 0).unwrap();
    for v in proj.cell_values() {
        assert!((v - 0.5).abs() < 1e-14);
    }
}

#[test]
fn affine_projection_of_square_matches_normal_equations() {
    // Discrete normal equations for the fit a + b·x on midpoints x_i = (i+1/2)/N, solved in closed form.
    let n = 256usize;
    let grid = unit_interval(n);
    let f = GridFunction::from_fn(grid, |x| x[0] * x[0]);
    let root = Rect::root(*grid.domain());
    let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let mean = |g: &dyn Fn(f64) -> f64| xs.iter().map(|&x| g(x)).sum::<f64>() / n as f64;
    let (m1, m2, m3) = (mean(&|x| x), mean(&|x| x * x), mean(&|x| x * x * x));
    let slope = (m3 - m1 * m2) / (m2 - m1 * m1);
    let intercept = m2 - slope * m1;
    let proj = project_polynomial(&f, &root, 1).unwrap();
    for (i, v) in proj.cell_values().iter().enumerate() {
        assert!((v - (intercept + slope * xs[i])).abs() < 1e-12);
    }
    // Continuum limit: x − 1/6.
    assert!((slope - 1.0).abs() < 1e-4 && (intercept + 1.0 / 6.0).abs() < 1e-4);
    // Residual orthogonal to {1, x}.
    let residual: Vec<f64> = xs.iter().zip(proj.cell_values()).map(|(x, p)| x * x - p).collect();
    assert!(residual.iter().sum::<f64>().abs() / (n as f64) < 1e-12);
    assert!(residual.iter().zip(&xs).map(|(r, x)| r * x).sum::<f64>().abs() / (n as f64) < 1e-12);
    // avg|x² − (x − 1/6)| = 1/(9√3) ≈ 0.06415 in the continuum.
    let osc = oscillation(&f, &root, 1.0, None, Center::Poly(1)).unwrap();
    assert!((osc - 1.0 / (9.0 * 3f64.sqrt())).abs() < 1e-4, "{osc}");
}

#[test]
fn projection_reproduces_polynomials_and_basis_is_orthonormal() {
    let grid = unit_square(16);
    let root = Rect::root(*grid.domain());
    for m in 0..=3usize {
        let basis = ProjectionBasis::new(&[16, 16], m).unwrap();
        let gram = basis.orthonormal_gram();
        for i in 0..gram.nrows() {
            for j in 0..gram.ncols() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - expected).abs() < 1e-9);
            }
        }
        let poly = GridFunction::from_fn(grid, |x| match m {
            0 => 2.5,
            1 => 1.0 + 2.0 * x[0] - x[1],
            2 => x[0] * x[1] - 3.0 * x[1] * x[1] + 0.5,
            _ => x[0].powi(3) - x[0] * x[1] * x[1] + x[1],
        });
        let proj = project_polynomial(&poly, &root, m).unwrap();
        let values = poly.restrict(&root).unwrap();
        for (p, v) in proj.cell_values().iter().zip(&values) {
            assert!((p - v).abs() <= 1e-8 * (1.0 + v.abs()));
        }
    }
    assert!(ProjectionBasis::new(&[2, 2], 2).is_err());
    assert!(ProjectionBasis::new(&[8, 8], 4).is_err());
}

#[test]
fn projection_is_idempotent_on_nested_rectangles() {
    let grid = unit_square(32);
    let root = Rect::root(*grid.domain());
    let f = GridFunction::from_fn(grid, |x| (3.0 * x[0]).sin() * (1.0 + x[1] * x[1]));
    for m in 0..=2 {
        let proj = project_polynomial(&f, &root, m).unwrap();
        let mut projected = vec![0.0; grid.cell_count()];
        for (cell, value) in grid.cell_box(&root).unwrap().cells(&grid).zip(proj.cell_values()) {
            projected[cell] = value;
        }
        let pf = GridFunction::from_values(grid, projected).unwrap();
        for child in root.subtree(2) {
            let again = project_polynomial(&pf, &child, m).unwrap();
            let direct = pf.restrict(&child).unwrap();
            for (a, b) in again.cell_values().iter().zip(&direct) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn oscillation_examples() {
    let grid = unit_interval(4096);
    let root = Rect::root(*grid.domain());
    let f = GridFunction::from_fn(grid, |x| x[0]);
    let mean = oscillation(&f, &root, 1.0, None, Center::Mean).unwrap();
    assert!((mean - 0.25).abs() < 1e-12);
    let delta = oscillation(&f, &root, 0.5, None, Center::OptimalDelta(0.5)).unwrap();
    assert!((delta - 2.0 / 9.0).abs() < 1e-3, "{delta}");
    let c = GridFunction::constant(grid, 3.0);
    for center in [Center::Mean, Center::Poly(2), Center::OptimalDelta(0.3)] {
        assert!(oscillation(&c, &root, 1.0, None, center).unwrap().abs() < 1e-12);
    }
}

#[test]
fn optimal_delta_minimizer_is_found_by_scan() {
    let values = [0.0, 0.1, 0.15, 3.0, 3.2, 10.0];
    let weights = [1.0; 6];
    let delta = 0.5;
    let (_, value) = optimal_delta_oscillation(&values, &weights, delta);
    // Oracle: dense scan of the objective over c.
    let objective = |c: f64| {
        let s: f64 = values.iter().map(|v| (v - c).abs().powf(delta)).sum::<f64>() / 6.0;
        s.powf(1.0 / delta)
    };
    let mut best = f64::INFINITY;
    for k in 0..=200_000 {
        best = best.min(objective(-1.0 + 12.0 * k as f64 / 200_000.0));
    }
    for &v in &values {
        best = best.min(objective(v));
    }
    assert!(value <= best * (1.0 + 1e-12), "{value} vs {best}");
}

#[test]
fn weak_norm_examples() {
    let v = weak_norm_values(&[1.0, 2.0, 3.0, 4.0], &[1.0; 4], 1.0);
    assert!((v - 1.5).abs() < 1e-15);
    let grid = unit_interval(256);
    let root = Rect::root(*grid.domain());
    for seed in 0..20 {
        let f = random_function(grid, seed, false);
        for p in [1.0, 2.0, 3.5] {
            let weak = weak_norm(&f, &root, p, None).unwrap();
            let lp = rectpoincare_core::analysis::normalized_lq(f.values(), &vec![1.0; 256], p);
            assert!(weak <= lp * (1.0 + 1e-12));
        }
    }
}

#[test]
fn kolmogorov_inequality_on_random_functions() {
    let grid = unit_interval(512);
    let root = Rect::root(*grid.domain());
    let ones = vec![1.0; 512];
    for seed in 0..50 {
        let f = random_function(grid, seed, false);
        let (q, p) = (1.0, 3.0);
        let lq = rectpoincare_core::analysis::normalized_lq(f.values(), &ones, q);
        let weak = weak_norm(&f, &root, p, None).unwrap();
        let factor: f64 = (p / (p - q)).powf(1.0 / q);
        assert!(lq <= factor * weak * (1.0 + 1e-12));
    }
}

#[test]
fn maximal_function_basics() {
    let grid = unit_square(32);
    let root = Rect::root(*grid.domain());
    let c = GridFunction::constant(grid, -2.0);
    assert!(dyadic_maximal(&c, &root).unwrap().values().iter().all(|&v| (v - 2.0).abs() < 1e-14));
    let g = random_function(grid, 3, false);
    let mean_abs = g.values().iter().map(|v| v.abs()).sum::<f64>() / grid.cell_count() as f64;
    let m = dyadic_maximal(&g, &root).unwrap();
    assert!(m.values().iter().all(|&v| v >= mean_abs * (1.0 - 1e-14)));
    // Oracle: max over ancestors via explicit rectangle averages.
    for cell in [0usize, 37, 500, 1023] {
        let center = grid.cell_center(cell);
        let mut best: f64 = 0.0;
        for rect in root.subtree(5) {
            let inside = (0..2).all(|a| center[a] > rect.lower(a) && center[a] < rect.upper(a));
            if inside {
                let vals = g.restrict(&rect).unwrap();
                best = best.max(vals.iter().map(|v| v.abs()).sum::<f64>() / vals.len() as f64);
            }
        }
        assert!((m.values()[cell] - best).abs() < 1e-12);
    }
}

#[test]
fn sharp_maximal_examples() {
    let grid = unit_interval(64);
    let root = Rect::root(*grid.domain());
    let poly = GridFunction::from_fn(grid, |x| 1.0 - 2.0 * x[0] + x[0] * x[0]);
    let pool = dyadic_pool(&root, 6);
    let s = sharp_maximal(&poly, 2, &root, &pool).unwrap();
    assert!(s.values().iter().all(|v| v.abs() < 1e-9));
    let half = GridFunction::from_fn(grid, |x| if x[0] < 0.5 { 1.0 } else { 0.0 });
    let s = sharp_maximal(&half, 0, &root, &[root]).unwrap();
    assert!(s.values().iter().all(|v| (v - 0.5).abs() < 1e-15));
    let g = random_function(grid, 9, false);
    let small = sharp_maximal(&g, 1, &root, &dyadic_pool(&root, 2)).unwrap();
    let large = sharp_maximal(&g, 1, &root, &dyadic_pool(&root, 4)).unwrap();
    assert!(small.values().iter().zip(large.values()).all(|(a, b)| b >= a));
    let child = root.children()[0];
    assert!(sharp_maximal(&g, 0, &root, &[child]).is_err());
}

#[test]
fn cz_examples() {
    let grid = unit_interval(64);
    let root = Rect::root(*grid.domain());
    let ones = GridFunction::constant(grid, 1.0);
    assert!(cz_decompose(&ones, &root, 2.0).unwrap().family.is_empty());
    let spike = GridFunction::from_fn(grid, |x| if x[0] < 0.25 { 4.0 } else { 0.0 });
    let cz = cz_decompose(&spike, &root, 2.0).unwrap();
    assert_eq!(cz.family.len(), 1);
    let member = cz.family.members()[0];
    assert_eq!((member.lower(0), member.upper(0)), (0.0, 0.25));
    assert_eq!(cz.averages, vec![4.0]);
    let big = GridFunction::constant(grid, 5.0);
    assert!(cz_decompose(&big, &root, 2.0).unwrap().root_selected);
    assert!(cz_decompose(&GridFunction::constant(grid, -1.0), &root, 2.0).is_err());
}

#[test]
fn cz_sandwich_and_level_sets_on_random_data() {
    for (grid, seeds) in [(unit_interval(1024), 0..10u64), (unit_square(128), 10..14u64)] {
        let root = Rect::root(*grid.domain());
        let n = grid.dim() as i32;
        for seed in seeds {
            let g = random_function(grid, seed, true);
            let m = dyadic_maximal(&g, &root).unwrap();
            let total = g.values().iter().sum::<f64>() / grid.cell_count() as f64;
            for level in [total * 1.01, 2.0 * total, 8.0 * total] {
                let cz = cz_decompose(&g, &root, level).unwrap();
                let mut covered = vec![false; grid.cell_count()];
                for (rect, &avg) in cz.family.members().iter().zip(&cz.averages) {
                    assert!(avg > level && avg <= 2f64.powi(n) * level);
                    for cell in grid.cell_box(rect).unwrap().cells(&grid) {
                        covered[cell] = true;
                    }
                }
                for (cell, &c) in covered.iter().enumerate() {
                    assert_eq!(c, m.values()[cell] > level);
                }
                assert!(cz.family.union_measure() < root.measure() * total / level);
            }
        }
    }
}

#[test]
fn truncation_examples() {
    let grid = build_grid(Domain::new(&[0.0], &[4.0]).unwrap(), &[64]).unwrap();
    let g = GridFunction::from_fn(grid, |x| x[0]);
    let t = truncate(&g, Truncation::Level(1)).unwrap();
    for (x, v) in g.values().iter().zip(t.values()) {
        assert_eq!(*v, (x - 2.0).clamp(0.0, 2.0));
    }
    let signed = GridFunction::from_fn(grid, |x| x[0] - 1.0);
    assert!(truncate(&signed, Truncation::Level(0)).is_err());
    let h = truncate(&signed, Truncation::Height(0.5)).unwrap();
    assert!(h.values().iter().all(|&v| (0.0..=0.5).contains(&v)));
    assert_eq!(telescope(5.0, -3, 3), 5.0);
}

proptest! {
    #[test]
    fn truncation_is_a_contraction(a in -1e3f64..1e3, b in -1e3f64..1e3, k in -10i32..10) {
        prop_assert!((truncate_level(a, k) - truncate_level(b, k)).abs() <= (a - b).abs());
        prop_assert!((0.0..=2f64.powi(k)).contains(&truncate_level(a, k)));
    }

    #[test]
    fn telescoping_is_exact(v in 0.0f64..1024.0, k_min in -8i32..0) {
        prop_assert_eq!(telescope(v, k_min, 10), v);
    }

    #[test]
    fn oscillation_orderings(seed in 0u64..1000, q in 1.0f64..4.0) {
        let grid = unit_interval(128);
        let root = Rect::root(*grid.domain());
        let f = random_function(grid, seed, false);
        let mean1 = oscillation(&f, &root, 1.0, None, Center::Mean).unwrap();
        let meanq = oscillation(&f, &root, q, None, Center::Mean).unwrap();
        prop_assert!(mean1 <= meanq * (1.0 + 1e-12));
        let delta = oscillation(&f, &root, 0.5, None, Center::OptimalDelta(0.5)).unwrap();
        let mean_half = oscillation(&f, &root, 0.5, None, Center::Mean).unwrap();
        prop_assert!(delta <= mean_half * (1.0 + 1e-12));
        prop_assert!(delta <= mean1 * (1.0 + 1e-12));
    }
}
