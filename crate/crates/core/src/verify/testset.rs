use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::{check_dim, Grid, GridFunction};

/// A labelled input for the end-to-end checks.
#[derive(Clone, Debug)]
pub struct TestFunction {
    pub label: String,
    pub f: GridFunction,
}

impl TestFunction {
    pub fn new(label: impl Into<String>, f: GridFunction) -> Self {
        Self {
            label: label.into(),
            f,
        }
    }
}

/// Box and spacing of the shipped test set in dimension `n`.
///
/// The box is asymmetric so that no sample sits at a reflection of another
/// through the origin.
pub fn testset_grid(n: usize) -> Result<Grid> {
    check_dim(n)?;
    match n {
        1 => Grid::cube(1, -8.0, 9.0, 2f64.powi(-8)),
        2 => Grid::cube(2, -4.0, 5.0, 0.125),
        _ => Grid::cube(3, -2.0, 3.0, 0.25),
    }
}

/// Up to six dyadic cubes of one random generation placed in `[-2, 2]^n`,
/// with values drawn from `[-3, 3]` (or `[0, 3]`).
pub fn random_dyadic_step(grid: &Grid, rng: &mut impl Rng, nonnegative: bool) -> Result<GridFunction> {
    let n = grid.dim();
    let min_level = (-grid.spacing().log2()).floor() as i32;
    let level = rng.gen_range(0..=3.min(min_level));
    let side = 2f64.powi(-level);
    let per_axis = (4.0 / side) as i64;
    let count = rng.gen_range(1..=6);
    let mut cubes: Vec<(Vec<i64>, f64)> = Vec::with_capacity(count);
    for _ in 0..count {
        let c: Vec<i64> = (0..n).map(|_| rng.gen_range(0..per_axis)).collect();
        let lo = if nonnegative { 0.0 } else { -3.0 };
        let mut v: f64 = rng.gen_range(lo..3.0);
        if v.abs() < 0.25 {
            v = 1.0;
        }
        cubes.push((c, v));
    }
    GridFunction::from_fn(grid.clone(), |p| {
        let mut value = 0.0;
        for (c, v) in &cubes {
            let inside = (0..n).all(|a| {
                let k = ((p[a] + 2.0) / side).floor() as i64;
                k == c[a]
            });
            if inside {
                value = *v;
            }
        }
        value
    })
}

fn bump(r2: f64) -> f64 {
    if r2 < 1.0 {
        (1.0 - 1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

/// Twenty functions on [`testset_grid`]: four dyadic indicators, ten random
/// dyadic steps from `seed`, three smooth bumps and three mean-zero
/// dipoles.
pub fn builtin_testset(n: usize, seed: u64) -> Result<Vec<TestFunction>> {
    let grid = testset_grid(n)?;
    let mut out = Vec::with_capacity(20);
    for (a, b) in [(0.0, 1.0), (0.0, 0.5), (-2.0, 0.0), (0.25, 0.5)] {
        let f = GridFunction::from_fn(grid.clone(), |p| {
            if p[..n].iter().all(|x| (a..b).contains(x)) {
                1.0
            } else {
                0.0
            }
        })?;
        out.push(TestFunction::new(format!("indicator[{a},{b})"), f));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..10 {
        out.push(TestFunction::new(
            format!("step-{i}"),
            random_dyadic_step(&grid, &mut rng, false)?,
        ));
    }
    let shapes = [(0.0, 1.0), (1.5, 0.5), (-1.0, 2.0)];
    for (c, r) in shapes {
        let f = GridFunction::from_fn(grid.clone(), |p| {
            bump(p[..n].iter().map(|x| ((x - c) / r).powi(2)).sum())
        })?;
        out.push(TestFunction::new(format!("bump(c={c},r={r})"), f));
    }
    for (c, r) in shapes {
        let f = GridFunction::from_fn(grid.clone(), |p| {
            let r2: f64 = p[..n].iter().map(|x| ((x - c) / r).powi(2)).sum();
            (p[0] - c) / r * bump(r2)
        })?;
        out.push(TestFunction::new(format!("dipole(c={c},r={r})"), f));
    }
    Ok(out)
}
