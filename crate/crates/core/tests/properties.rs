use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use czkit::decomposition::{
    all_pass, cz_decompose, maximal_function, maximal_weak_type_checks, ntv_decompose,
    whitney_decompose,
};
use czkit::grid::{integrate, lq_norm, union_volume, DyadicCube, DyadicFrame, Grid, GridFunction};
use czkit::kernels::{hr_seminorm, watson_seminorm, Kernel, SeminormParams};
use czkit::operator::{
    distribution_function, interpolation_range, log_alpha_grid, weak_type_quasi_norm, OperatorSpec,
};
use czkit::verify::{
    builtin_testset, random_dyadic_step, testset_grid, theorem_constant, trace_cz_proof,
    trace_ntv_proof, verify_theorem1, Method, TestFunction,
};

fn samples(n: usize, lo: f64, hi: f64, h: f64) -> impl Strategy<Value = GridFunction> {
    let g = Grid::cube(n, lo, hi, h).unwrap();
    prop::collection::vec(-3.0..3.0f64, g.len())
        .prop_map(move |v| GridFunction::new(g.clone(), v).unwrap())
}

fn step(seed: u64, nonnegative: bool) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_dyadic_step(&testset_grid(1).unwrap(), &mut rng, nonnegative).unwrap()
}

fn hilbert() -> OperatorSpec {
    OperatorSpec::new(Kernel::hilbert(), 2.0, std::f64::consts::PI).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integral_is_linear(u in samples(2, 0.0, 1.0, 0.125), v in samples(2, 0.0, 1.0, 0.125),
                          a in -5.0..5.0f64, b in -5.0..5.0f64) {
        let w = u.scaled(a).add(&v.scaled(b)).unwrap();
        let scale = integrate(&u.map(f64::abs)) * a.abs() + integrate(&v.map(f64::abs)) * b.abs();
        prop_assert!((integrate(&w) - a * integrate(&u) - b * integrate(&v)).abs() <= 1e-13 * scale.max(1.0));
    }

    #[test]
    fn lq_norm_grows_with_q_on_unit_cube(u in samples(1, 0.0, 1.0, 1.0 / 32.0), q1 in 1.0..4.0f64, dq in 0.0..4.0f64) {
        let a = lq_norm(&u, q1).unwrap();
        let b = lq_norm(&u, q1 + dq).unwrap();
        prop_assert!(a <= b * (1.0 + 1e-12));
        prop_assert!(b <= lq_norm(&u, f64::INFINITY).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn children_tile_parent(n in 1usize..=3, generation in -3i32..6, coords in prop::collection::vec(-20i64..20, 3)) {
        let frame = DyadicFrame::new(vec![0.25; n], 1.0).unwrap();
        let q = DyadicCube::new(frame, generation, coords[..n].to_vec()).unwrap();
        let kids = q.children();
        prop_assert_eq!(kids.len(), 1 << n);
        let cubes: Vec<_> = kids.iter().map(|k| k.to_cube()).collect();
        for (i, a) in cubes.iter().enumerate() {
            prop_assert!(q.to_cube().contains_cube(a));
            prop_assert_eq!(kids[i].parent(), q.clone());
            for b in &cubes[i + 1..] {
                prop_assert!(a.interiors_disjoint(b));
            }
        }
        prop_assert_eq!(cubes.iter().map(|c| c.volume()).sum::<f64>(), q.volume());
        prop_assert_eq!(union_volume(&cubes), q.volume());
    }

    #[test]
    fn maximal_function_dominates_and_scales(u in samples(1, 0.0, 2.0, 1.0 / 16.0), c in 0.1..10.0f64) {
        let u = u.map(f64::abs);
        let m = maximal_function(&u).unwrap();
        for (a, b) in u.values().iter().zip(m.values()) {
            prop_assert!(*b >= *a * (1.0 - 1e-12));
        }
        let mc = maximal_function(&u.scaled(c)).unwrap();
        for (a, b) in m.values().iter().zip(mc.values()) {
            prop_assert!((a * c - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        let lambdas = log_alpha_grid(-2.0, 1.0, 4);
        prop_assert!(all_pass(&maximal_weak_type_checks(&u, &m, &lambdas)));
    }

    #[test]
    fn distribution_nonincreasing_and_chebyshev(u in samples(1, -1.0, 1.0, 1.0 / 32.0)) {
        let alphas = log_alpha_grid(-2.0, 1.0, 10);
        let d: Vec<f64> = alphas.iter().map(|a| distribution_function(&u, *a)).collect();
        prop_assert!(d.windows(2).all(|w| w[1] <= w[0]));
        let r = weak_type_quasi_norm(&u, 1.0, &alphas).unwrap();
        prop_assert!(r.quasi_norm <= u.norm(1.0).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn quasi_norm_is_homogeneous(u in samples(1, -1.0, 1.0, 1.0 / 32.0), k in -8i32..8, q in 1.0..3.0f64) {
        // powers of two keep the rescaled grid exact
        let c = 2f64.powi(k);
        let alphas = log_alpha_grid(-2.0, 1.0, 10);
        let scaled: Vec<f64> = alphas.iter().map(|a| a * c).collect();
        let a = weak_type_quasi_norm(&u, q, &alphas).unwrap();
        let b = weak_type_quasi_norm(&u.scaled(-c), q, &scaled).unwrap();
        prop_assert_eq!(b.quasi_norm, c * a.quasi_norm);
        prop_assert_eq!(b.argmax_alpha, c * a.argmax_alpha);
    }

    #[test]
    fn range_arithmetic(q in 1.0..10.0f64, ds in 0.01..10.0f64) {
        let s = q + ds;
        let r = interpolation_range(q, s).unwrap();
        if q == 1.0 {
            prop_assert_eq!((r.lower, r.upper), (1.0, f64::INFINITY));
        } else {
            prop_assert!(r.lower > 1.0 && r.upper < f64::INFINITY);
        }
        let r = interpolation_range(q, f64::INFINITY).unwrap();
        prop_assert_eq!((r.lower, r.upper), (1.0, f64::INFINITY));
        prop_assert!(interpolation_range(q, q).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cz_properties_hold(seed in any::<u64>(), q in prop::sample::select(vec![1.0, 1.5, 2.0, 3.0]), t in 0.05..2.0f64) {
        let f = step(seed, false);
        let d = cz_decompose(&f, q, t * f.max_abs()).unwrap();
        let checks = d.check_properties().unwrap();
        prop_assert!(all_pass(&checks), "{:?}", checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
    }

    #[test]
    fn ntv_properties_hold(seed in any::<u64>(), q in prop::sample::select(vec![1.0, 1.5, 2.0]), t in 0.6..2.0f64) {
        let f = step(seed, true);
        let d = ntv_decompose(&f, q, t * f.max_abs()).unwrap();
        let checks = d.check_properties().unwrap();
        prop_assert!(all_pass(&checks), "{:?}", checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
    }

    #[test]
    fn whitney_is_deterministic_and_bracketed(cells in prop::collection::vec(0u8..2, 64)) {
        let g = Grid::cube(2, 0.0, 1.0, 0.125).unwrap();
        let omega = GridFunction::new(g, cells.iter().map(|c| *c as f64).collect()).unwrap();
        let a = whitney_decompose(&omega).unwrap();
        let b = whitney_decompose(&omega).unwrap();
        prop_assert_eq!(&a.cubes, &b.cubes);
        prop_assert!(all_pass(&a.check()));
    }

    #[test]
    fn operator_is_linear(f in samples(1, -1.0, 1.0, 1.0 / 32.0), g in samples(1, -1.0, 1.0, 1.0 / 32.0),
                          a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let t = hilbert();
        let lhs = t.apply(&f.scaled(a).add(&g.scaled(b)).unwrap()).unwrap();
        let tf = t.apply(&f).unwrap();
        let tg = t.apply(&g).unwrap();
        let scale = a.abs() * tf.max_abs() + b.abs() * tg.max_abs();
        for i in 0..lhs.values().len() {
            let rhs = a * tf.values()[i] + b * tg.values()[i];
            prop_assert!((lhs.values()[i] - rhs).abs() <= 1e-10 * scale.max(1e-300));
        }
    }

    #[test]
    fn operator_commutes_with_grid_shifts(f in samples(1, -1.0, 1.0, 1.0 / 16.0), k in 1usize..16) {
        let h = 1.0 / 16.0;
        let g = Grid::cube(1, -2.0, 4.0, h).unwrap();
        let at = |x: f64| -> f64 {
            let j = ((x + 1.0) / h).floor();
            if (0.0..32.0).contains(&j) { f.values()[j as usize] } else { 0.0 }
        };
        let tau = k as f64 * h;
        let u = GridFunction::from_fn(g.clone(), |p| at(p[0])).unwrap();
        let v = GridFunction::from_fn(g, |p| at(p[0] - tau)).unwrap();
        let (tu, tv) = (hilbert().apply(&u).unwrap(), hilbert().apply(&v).unwrap());
        for i in 0..tu.values().len() - k {
            prop_assert_eq!(tv.values()[i + k], tu.values()[i]);
        }
    }

    #[test]
    fn trace_total_is_the_theorem_bound(idx in 0usize..4, alpha in prop::sample::select(vec![1.0, 2.0, 4.0])) {
        let spec = hilbert();
        let f = &builtin_testset(1, 0).unwrap()[idx].f;
        let t = trace_cz_proof(&spec, f, alpha, 1.0).unwrap();
        let last = t.steps.last().unwrap();
        let c = theorem_constant(1, 1.0, 2.0, Method::Cz).unwrap();
        prop_assert_eq!(last.rhs, c * (spec.bound + t.seminorm) * f.norm(1.0).unwrap() / alpha);
    }
}

#[test]
fn refinement_converges_quadratically() {
    let u = |h: f64| {
        let g = Grid::cube(1, 0.0, 1.0, h).unwrap();
        integrate(&GridFunction::from_fn(g, |p| (3.0 * p[0]).sin()).unwrap())
    };
    let diffs: Vec<f64> = (3..8)
        .map(|k| (u(2f64.powi(-k)) - u(2f64.powi(-k - 1))).abs())
        .collect();
    for w in diffs.windows(2) {
        assert_relative_eq!(w[0] / w[1], 4.0, max_relative = 0.05);
    }
}

#[test]
fn seminorm_respects_watson_bridge_and_reflection() {
    let p = SeminormParams::for_dim(1);
    let k = Kernel::hilbert();
    let hr = hr_seminorm(&k, f64::INFINITY, &p).unwrap().value;
    let w1 = watson_seminorm(&k, 1.0, &p).unwrap().value;
    let w2 = watson_seminorm(&k, 2.0, &p).unwrap().value;
    assert_relative_eq!(hr, w1, max_relative = 1e-2);
    // for n = 1, v_n (2^n - 1) = 2
    assert!(w1 <= 2f64.powf(0.5) * w2 * (1.0 + 1e-3) + 1e-6);

    let skew = Kernel::from_fn(1, 4.0, None, "skew", |x| {
        let a = x[0].abs();
        if x[0] > 0.0 {
            1.0 / a
        } else {
            -0.5 / a
        }
    })
    .unwrap();
    let a = hr_seminorm(&skew, 2.0, &p).unwrap().value;
    let b = hr_seminorm(&skew.reflected(), 2.0, &p).unwrap().value;
    assert_relative_eq!(a, b, max_relative = 1e-3);
}

#[test]
fn homogeneous_kernels_have_flat_slices() {
    let e = hr_seminorm(&Kernel::hilbert(), 2.0, &SeminormParams::for_dim(1)).unwrap();
    let (lo, hi) = e.slices.iter().fold((f64::INFINITY, 0.0f64), |(a, b), s| {
        (a.min(s.1), b.max(s.1))
    });
    assert!((hi - lo) / hi < 1e-3, "slices {:?}", e.slices);
}

#[test]
fn enlarging_the_testset_never_lowers_the_max_ratio() {
    let spec = hilbert();
    let set = builtin_testset(1, 3).unwrap();
    let alphas = log_alpha_grid(-3.0, 2.0, 20);
    let mut last = 0.0;
    for k in [2, 6, 12, 20] {
        let r = verify_theorem1(&spec, 1.0, &set[..k], &alphas, Method::Cz).unwrap();
        assert!(r.max_ratio >= last);
        last = r.max_ratio;
    }
}

#[test]
fn ratios_are_scale_invariant() {
    let spec = hilbert();
    let set = builtin_testset(1, 0).unwrap();
    let alphas = log_alpha_grid(-3.0, 2.0, 20);
    let c = 8.0;
    let scaled: Vec<TestFunction> = set
        .iter()
        .map(|t| TestFunction::new(t.label.clone(), t.f.scaled(c)))
        .collect();
    let scaled_alphas: Vec<f64> = alphas.iter().map(|a| a * c).collect();
    let a = verify_theorem1(&spec, 1.0, &set, &alphas, Method::Cz).unwrap();
    let b = verify_theorem1(&spec, 1.0, &scaled, &scaled_alphas, Method::Cz).unwrap();
    for (x, y) in a.per_function.iter().zip(&b.per_function) {
        assert_relative_eq!(x.ratio, y.ratio, max_relative = 1e-10);
    }
}

#[test]
fn both_proof_routes_agree() {
    let spec = hilbert();
    let set = builtin_testset(1, 0).unwrap();
    for (idx, alpha) in [(0, 2.0), (1, 4.0), (14, 3.0)] {
        let f = &set[idx].f;
        assert!(trace_cz_proof(&spec, f, alpha, 1.0).unwrap().overall);
        assert!(trace_ntv_proof(&spec, f, alpha, 1.0).unwrap().overall);
    }
}
