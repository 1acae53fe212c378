use rayon::prelude::*;
use serde::Serialize;

use super::constants::{constant_terms, gamma, theorem_constant};
use super::Method;
use crate::decomposition::{cz_decompose, ntv_decompose, BadPiece, PropertyCheck};
use crate::error::{Error, Result};
use crate::ext::{self, conjugate};
use crate::grid::{lq_norm, lq_power, pow_abs, union_volume, unit_ball_volume, GridFunction, Point};
use crate::kernels::{hr_seminorm, Kernel, SeminormParams};
use crate::operator::{distribution_function, OperatorSpec};

/// Relative slack on every traced inequality.
pub const TRACE_SLACK: f64 = 1e-2;

/// One measured inequality of a proof.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProofStep {
    pub name: String,
    /// Which part of the argument the step belongs to.
    pub anchor: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tol: f64,
    pub pass: bool,
}

impl ProofStep {
    fn bound(name: &str, anchor: &str, lhs: f64, rhs: f64) -> Self {
        let tol = TRACE_SLACK * rhs.abs();
        Self {
            name: name.into(),
            anchor: anchor.into(),
            lhs,
            rhs,
            tol,
            pass: lhs.is_finite() && lhs <= rhs + tol,
        }
    }

    fn from_check(c: &PropertyCheck) -> Self {
        Self {
            name: format!("{}: {}", c.property, c.name),
            anchor: "decomposition".into(),
            lhs: c.lhs,
            rhs: c.rhs,
            tol: c.tol,
            pass: c.pass,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProofTrace {
    pub method: Method,
    pub kernel: String,
    pub n: usize,
    pub q: f64,
    #[serde(serialize_with = "ext::serialize")]
    pub s: f64,
    pub alpha: f64,
    pub bound: f64,
    /// `[K]` in `H_{q'}` over the default radii and every `R_j`.
    pub seminorm: f64,
    pub seminorm_truncation: f64,
    pub gamma: f64,
    pub height: f64,
    pub cubes: usize,
    pub steps: Vec<ProofStep>,
    pub overall: bool,
}

impl ProofTrace {
    pub fn failures(&self) -> impl Iterator<Item = &ProofStep> {
        self.steps.iter().filter(|s| !s.pass)
    }
}

/// Slices of the seminorm, extended on demand with new radii.
struct SliceCache<'a> {
    kernel: &'a Kernel,
    r: f64,
    params: &'a SeminormParams,
    slices: Vec<(f64, f64)>,
    truncation: f64,
}

impl<'a> SliceCache<'a> {
    fn new(kernel: &'a Kernel, r: f64, params: &'a SeminormParams) -> Result<Self> {
        let est = hr_seminorm(kernel, r, params)?;
        Ok(Self {
            kernel,
            r,
            params,
            slices: est.slices,
            truncation: est.truncation_error,
        })
    }

    fn value(&self) -> f64 {
        self.slices.iter().fold(0.0, |m, s| m.max(s.1))
    }

    fn slice(&mut self, radius: f64) -> Result<f64> {
        if let Some(s) = self
            .slices
            .iter()
            .find(|s| (s.0 - radius).abs() <= 1e-12 * radius)
        {
            return Ok(s.1);
        }
        let mut p = self.params.clone();
        p.radii = vec![radius];
        let est = hr_seminorm(self.kernel, self.r, &p)?;
        self.truncation = self.truncation.max(est.truncation_error);
        self.slices.push((radius, est.value));
        Ok(est.value)
    }
}

/// Chooses `[K]` so that its estimate covers every `R_j` of the
/// decomposition built from it. Returns `([K], gamma, decomposition)`.
fn settle<D>(
    cache: &mut SliceCache,
    method: Method,
    spec: &OperatorSpec,
    n: usize,
    q: f64,
    alpha: f64,
    decompose: impl Fn(f64) -> Result<D>,
    pieces: impl Fn(&D) -> &[BadPiece],
) -> Result<(f64, f64, D)> {
    let mut k = cache.value();
    for round in 0.. {
        let g = gamma(n, q, spec.s, spec.bound, k, method)?;
        let dec = decompose(g * alpha)?;
        let mut m = k;
        for p in pieces(&dec) {
            m = m.max(cache.slice(p.cube.to_cube().circumradius())?);
        }
        if m <= k || round == 7 {
            return Ok((k, g, dec));
        }
        k = m;
    }
    unreachable!()
}

fn power_norm(u: &GridFunction, s: f64) -> Result<f64> {
    Ok(lq_power(u, s))
}

fn discrete_norm(values: &[f64], w: f64, p: f64) -> f64 {
    if p.is_infinite() {
        values.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else {
        (w * values.iter().map(|v| pow_abs(*v, p)).sum::<f64>()).powf(1.0 / p)
    }
}

/// `int over xs of |K(x - y) - K(x - c)| dx` for every sample `y` of each
/// piece, with `c` the piece's center.
fn kernel_differences(kernel: &Kernel, pieces: &[&GridFunction], centers: &[Vec<f64>], xs: &[Point], w: f64) -> Vec<Vec<f64>> {
    let n = kernel.dim();
    let jobs: Vec<(usize, usize)> = pieces
        .iter()
        .enumerate()
        .flat_map(|(j, p)| (0..p.grid().len()).map(move |i| (j, i)))
        .collect();
    let flat: Vec<f64> = jobs
        .par_iter()
        .map(|&(j, i)| {
            let y = pieces[j].grid().point(i);
            let c = &centers[j];
            let (mut a, mut b) = ([0.0; 3], [0.0; 3]);
            let mut sum = 0.0;
            for x in xs {
                for k in 0..n {
                    a[k] = x[k] - y[k];
                    b[k] = x[k] - c[k];
                }
                sum += (kernel.eval(&a[..n]) - kernel.eval(&b[..n])).abs();
            }
            sum * w
        })
        .collect();
    let mut out: Vec<Vec<f64>> = pieces.iter().map(|p| Vec::with_capacity(p.grid().len())).collect();
    for ((j, _), v) in jobs.into_iter().zip(flat) {
        out[j].push(v);
    }
    out
}

/// Hölder chain shared by both bad-part estimates. `weights` are the
/// functions paired with the kernel difference on each cube.
struct HolderChain {
    /// `sum_j int F_j |w_j|`.
    paired: f64,
    /// `sum_j ||F_j||_{q'} ||w_j||_q`.
    holder: f64,
    /// `max_j ||F_j||_{L^{q'}(Q_j, dy/|Q_j|)}`.
    sup: f64,
}

fn holder_chain(diffs: &[Vec<f64>], weights: &[&GridFunction], q: f64) -> Result<HolderChain> {
    let qc = conjugate(q);
    let (mut paired, mut holder, mut sup) = (0.0, 0.0, 0.0f64);
    for (fj, wj) in diffs.iter().zip(weights) {
        let h = wj.grid().cell_volume();
        let vol = h * fj.len() as f64;
        paired += h * fj.iter().zip(wj.values()).map(|(a, b)| a * b.abs()).sum::<f64>();
        let fnorm = discrete_norm(fj, h, qc);
        holder += fnorm * lq_norm(wj, q)?;
        let normalized = if qc.is_infinite() {
            fnorm
        } else {
            fnorm / vol.powf(1.0 / qc)
        };
        sup = sup.max(normalized);
    }
    Ok(HolderChain {
        paired,
        holder,
        sup,
    })
}

/// Largest `(v_n R^n / |Q_j|)^(1/q')` times the slice at `R_j`, the ball
/// form of the supremum factor.
fn ball_factor(cache: &mut SliceCache, pieces: &[BadPiece], n: usize, q: f64) -> Result<f64> {
    let ratio = (0.5 * (n as f64).sqrt()).powi(n as i32) * unit_ball_volume(n)?;
    let e = 1.0 / conjugate(q);
    let mut best: f64 = 0.0;
    for p in pieces {
        let r = p.cube.to_cube().circumradius();
        best = best.max(ratio.powf(e) * cache.slice(r)?);
    }
    Ok(best)
}

fn check_inputs(spec: &OperatorSpec, f: &GridFunction, alpha: f64, q: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    if !(q.is_finite() && q >= 1.0) {
        return Err(Error::Exponent {
            value: q,
            reason: "q must be finite and at least 1",
        });
    }
    if spec.s <= q {
        return Err(Error::Exponent {
            value: spec.s,
            reason: "s must exceed q",
        });
    }
    if spec.kernel.dim() != f.dim() {
        return Err(Error::GridMismatch("kernel and input dimensions differ".into()));
    }
    Ok(())
}

fn term(terms: &[(&'static str, f64)], name: &str) -> f64 {
    terms.iter().find(|t| t.0 == name).map_or(0.0, |t| t.1)
}

/// Good-part chain; `sup_factor` is 2^(n/q) for the dyadic decomposition
/// and 1 for the maximal-function one.
#[allow(clippy::too_many_arguments)]
fn good_part(
    steps: &mut Vec<ProofStep>,
    spec: &OperatorSpec,
    g: &GridFunction,
    tg: &GridFunction,
    alpha: f64,
    q: f64,
    height: f64,
    sup_factor: f64,
    good_term: f64,
    scale: f64,
) -> Result<f64> {
    let (s, b) = (spec.s, spec.bound);
    let measure = distribution_function(tg, alpha / 2.0);
    if s.is_finite() {
        let cheb = 2f64.powf(s) * alpha.powf(-s) * power_norm(tg, s)?;
        let strong = (2.0 * b).powf(s) * alpha.powf(-s) * power_norm(g, s)?;
        let interp = (2.0 * b).powf(s)
            * alpha.powf(-s)
            * (sup_factor * height).powf(s - q)
            * power_norm(g, q)?;
        steps.push(ProofStep::bound("good: Chebyshev", "good part", measure, cheb));
        steps.push(ProofStep::bound("good: strong bound", "good part", cheb, strong));
        steps.push(ProofStep::bound("good: property (1)", "good part", strong, interp));
        steps.push(ProofStep::bound("good: choice of gamma", "good part", interp, good_term * scale));
    } else {
        let tsup = tg.max_abs();
        let gsup = g.max_abs();
        steps.push(ProofStep::bound("good: strong bound", "good part, s = inf", tsup, b * gsup));
        steps.push(ProofStep::bound("good: height", "good part, s = inf", b * gsup, alpha / 4.0));
        steps.push(ProofStep::bound("good: empty set", "good part, s = inf", measure, 0.0));
    }
    Ok(measure)
}

/// Traces the dyadic stopping-time proof with default seminorm parameters.
pub fn trace_cz_proof(spec: &OperatorSpec, f: &GridFunction, alpha: f64, q: f64) -> Result<ProofTrace> {
    trace_cz_proof_with(spec, f, alpha, q, &SeminormParams::for_dim(f.dim()))
}

pub fn trace_cz_proof_with(
    spec: &OperatorSpec,
    f: &GridFunction,
    alpha: f64,
    q: f64,
    params: &SeminormParams,
) -> Result<ProofTrace> {
    check_inputs(spec, f, alpha, q)?;
    let n = f.dim();
    let nf = n as f64;
    let mut cache = SliceCache::new(&spec.kernel, conjugate(q), params)?;
    let (k, gam, dec) = settle(
        &mut cache,
        Method::Cz,
        spec,
        n,
        q,
        alpha,
        |height| cz_decompose(f, q, height),
        |d| &d.pieces,
    )?;
    let height = gam * alpha;
    let fq = power_norm(f, q)?;
    let scale = (spec.bound + k).powf(q) * alpha.powf(-q) * fq;
    let terms = constant_terms(n, q, spec.s, Method::Cz)?;

    let mut steps = Vec::new();
    let c0 = gam * (spec.bound + k);
    steps.push(ProofStep::bound("gamma", "choice of gamma", c0, c0));
    steps.extend(dec.check_properties()?.iter().map(ProofStep::from_check));

    let grid = dec.f.grid().clone();
    let w = grid.cell_volume();
    let b = dec.bad()?;
    let tf = spec.apply(&dec.f)?;
    let tg = spec.apply(&dec.good)?;
    let tb = spec.apply(&b)?;
    let total = distribution_function(&tf, alpha);
    let bad_measure = distribution_function(&tb, alpha / 2.0);

    let split_at = steps.len();
    steps.push(ProofStep::bound("split", "f = g + b", total, f64::NAN));
    let good = good_part(
        &mut steps,
        spec,
        &dec.good,
        &tg,
        alpha,
        q,
        height,
        2f64.powf(nf / q),
        term(&terms, "good"),
        scale,
    )?;
    steps[split_at] = ProofStep::bound("split", "f = g + b", total, good + bad_measure);

    // dilates Q_j*
    let dilates: Vec<_> = dec.pieces.iter().map(|p| p.cube.to_cube().dilate(dec.dilate)).collect();
    let star = union_volume(&dilates);
    let star_sum: f64 = dilates.iter().map(|c| c.volume()).sum();
    let cube_sum: f64 = dec.pieces.iter().map(|p| p.cube.volume()).sum();
    steps.push(ProofStep::bound("dilates: union", "measure of the dilates", star, star_sum));
    steps.push(ProofStep::bound(
        "dilates: property (2)",
        "measure of the dilates",
        star_sum,
        (2.0 * nf.sqrt()).powf(nf) * height.powf(-q) * fq,
    ));
    steps.push(ProofStep::bound(
        "dilates: choice of gamma",
        "measure of the dilates",
        (2.0 * nf.sqrt()).powf(nf) * height.powf(-q) * fq,
        term(&terms, "dilates") * scale,
    ));

    // bad part away from the dilates
    let outside: Vec<usize> = (0..grid.len())
        .filter(|&i| {
            let x = grid.point(i);
            !dilates.iter().any(|c| c.contains_point(&x[..n]))
        })
        .collect();
    let far = outside.iter().filter(|&&i| tb.values()[i].abs() > alpha / 2.0).count() as f64 * w;
    let far_integral: f64 = outside.iter().map(|&i| tb.values()[i].abs()).sum::<f64>() * w;
    steps.push(ProofStep::bound("bad: split", "bad part", bad_measure, star + far));
    steps.push(ProofStep::bound("bad: Chebyshev", "bad part", far, 2.0 / alpha * far_integral));

    let xs: Vec<Point> = outside.iter().map(|&i| grid.point(i)).collect();
    let values: Vec<&GridFunction> = dec.pieces.iter().map(|p| &p.values).collect();
    let centers: Vec<Vec<f64>> = dec.pieces.iter().map(|p| p.cube.to_cube().center().to_vec()).collect();
    let diffs = kernel_differences(&spec.kernel, &values, &centers, &xs, w);
    let chain = holder_chain(&diffs, &values, q)?;
    let after3 = 2f64.powf(nf / q + 2.0) * gam * chain.sup * cube_sum;
    let after2 = 2f64.powf(nf / q + 2.0) * gam.powf(1.0 - q) * alpha.powf(-q) * fq * chain.sup;
    steps.push(ProofStep::bound("bad: mean zero", "bad part", 2.0 / alpha * far_integral, 2.0 / alpha * chain.paired));
    steps.push(ProofStep::bound("bad: Holder", "bad part", 2.0 / alpha * chain.paired, 2.0 / alpha * chain.holder));
    steps.push(ProofStep::bound("bad: property (3)", "bad part", 2.0 / alpha * chain.holder, after3));
    steps.push(ProofStep::bound("bad: property (2)", "bad part", after3, after2));

    let half_sides: Vec<f64> = dilates.iter().map(|c| c.side() / 2.0).collect();
    let (inner, outer) = containments(&dec.pieces, &half_sides);
    steps.push(ProofStep::bound("containment: cube in ball", "balls around Q_j", inner, 1.0));
    steps.push(ProofStep::bound("containment: double ball in dilate", "balls around Q_j", outer, 1.0));
    let ball = ball_factor(&mut cache, &dec.pieces, n, q)?;
    let sup_bound = (0.5 * nf.sqrt()).powf(nf) * unit_ball_volume(n)? * k;
    steps.push(ProofStep::bound("supremum: complement of dilates", "supremum factor", chain.sup, ball));
    steps.push(ProofStep::bound("supremum: over all radii", "supremum factor", ball, sup_bound));
    let bad_bound = 2f64.powf(nf / q + 2.0) * gam.powf(1.0 - q) * alpha.powf(-q) * fq * sup_bound;
    steps.push(ProofStep::bound("bad: bound", "bad part", far, bad_bound));

    let c = theorem_constant(n, q, spec.s, Method::Cz)?;
    steps.push(ProofStep::bound("weak-type measure", "conclusion", total, c * scale));
    steps.push(ProofStep::bound("total", "conclusion", good + star + far, c * scale));

    Ok(finish(Method::Cz, spec, n, q, alpha, k, cache.truncation, gam, height, dec.pieces.len(), steps))
}

/// `(max_j circumradius / R_j, max_j 2 R_j / outer_j)`, where `outer_j`
/// is the inradius of the region that must contain `B(c_j, 2 R_j)`.
fn containments(pieces: &[BadPiece], outer: &[f64]) -> (f64, f64) {
    let (mut a, mut b) = (0.0f64, 0.0f64);
    for (p, o) in pieces.iter().zip(outer) {
        let cube = p.cube.to_cube();
        let r = 0.5 * (cube.dim() as f64).sqrt() * cube.side();
        let corner = (0..cube.dim())
            .map(|k| (cube.upper(k) - cube.center()[k]).powi(2))
            .sum::<f64>()
            .sqrt();
        a = a.max(corner / r);
        b = b.max(2.0 * r / o);
    }
    (a, b)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    method: Method,
    spec: &OperatorSpec,
    n: usize,
    q: f64,
    alpha: f64,
    seminorm: f64,
    truncation: f64,
    gamma: f64,
    height: f64,
    cubes: usize,
    steps: Vec<ProofStep>,
) -> ProofTrace {
    let overall = steps.iter().all(|s| s.pass);
    ProofTrace {
        method,
        kernel: spec.kernel.label().to_string(),
        n,
        q,
        s: spec.s,
        alpha,
        bound: spec.bound,
        seminorm,
        seminorm_truncation: truncation,
        gamma,
        height,
        cubes,
        steps,
        overall,
    }
}

/// Traces the maximal-function proof with default seminorm parameters.
/// `f` must be nonnegative.
pub fn trace_ntv_proof(spec: &OperatorSpec, f: &GridFunction, alpha: f64, q: f64) -> Result<ProofTrace> {
    trace_ntv_proof_with(spec, f, alpha, q, &SeminormParams::for_dim(f.dim()))
}

pub fn trace_ntv_proof_with(
    spec: &OperatorSpec,
    f: &GridFunction,
    alpha: f64,
    q: f64,
    params: &SeminormParams,
) -> Result<ProofTrace> {
    check_inputs(spec, f, alpha, q)?;
    let n = f.dim();
    let nf = n as f64;
    let mut cache = SliceCache::new(&spec.kernel, conjugate(q), params)?;
    let (k, gam, dec) = settle(
        &mut cache,
        Method::Ntv,
        spec,
        n,
        q,
        alpha,
        |height| ntv_decompose(f, q, height),
        |d| &d.pieces,
    )?;
    let height = gam * alpha;
    let fq = power_norm(f, q)?;
    let scale = (spec.bound + k).powf(q) * alpha.powf(-q) * fq;
    let terms = constant_terms(n, q, spec.s, Method::Ntv)?;
    let d = dec.dilate.powf(nf / q);
    let level = dec.compensator_level();

    let mut steps = Vec::new();
    let c0 = gam * (spec.bound + k);
    steps.push(ProofStep::bound("gamma", "choice of gamma", c0, c0));
    steps.extend(dec.check_properties()?.iter().map(ProofStep::from_check));

    let grid = f.grid().clone();
    let w = grid.cell_volume();
    let b = dec.bad()?;
    let e = dec.e_indicator()?;
    let compensated = b.sub(&e.scaled(level))?;
    let tf = spec.apply(f)?;
    let tg = spec.apply(&dec.good)?;
    let tb = spec.apply(&b)?;
    let te = spec.apply(&e)?;
    let tc = spec.apply(&compensated)?;
    let total = distribution_function(&tf, alpha);
    let bad_measure = distribution_function(&tb, alpha / 2.0);
    let split_at = steps.len();
    steps.push(ProofStep::bound("split", "f = g + b", total, f64::NAN));

    let good = good_part(&mut steps, spec, &dec.good, &tg, alpha, q, height, 1.0, term(&terms, "good"), scale)?;
    steps[split_at] = ProofStep::bound("split", "f = g + b", total, good + bad_measure);

    let omega = dec.omega.values();
    let outside: Vec<usize> = (0..grid.len()).filter(|&i| omega[i] == 0.0).collect();
    let part1 = dec.omega_measure();
    let part2 = outside.iter().filter(|&&i| tc.values()[i].abs() > alpha / 4.0).count() as f64 * w;
    let part3 = distribution_function(&te.scaled(level), alpha / 4.0);
    steps.push(ProofStep::bound("bad: split", "bad part", bad_measure, part1 + part2 + part3));

    let weak = 3f64.powf(nf) * height.powf(-q) * fq;
    steps.push(ProofStep::bound("I: maximal weak type", "term I", part1, weak));
    steps.push(ProofStep::bound("I: choice of gamma", "term I", weak, term(&terms, "I") * scale));

    let far_integral: f64 = outside.iter().map(|&i| tc.values()[i].abs()).sum::<f64>() * w;
    steps.push(ProofStep::bound("II: Chebyshev", "term II", part2, 4.0 / alpha * far_integral));
    let xs: Vec<Point> = outside.iter().map(|&i| grid.point(i)).collect();
    let values: Vec<&GridFunction> = dec.pieces.iter().map(|p| &p.values).collect();
    let centers: Vec<Vec<f64>> = dec.pieces.iter().map(|p| p.cube.to_cube().center().to_vec()).collect();
    let pieces_c: Vec<GridFunction> = (0..dec.pieces.len())
        .map(|j| dec.compensated_piece(j))
        .collect::<Result<_>>()?;
    let weights: Vec<&GridFunction> = pieces_c.iter().collect();
    let diffs = kernel_differences(&spec.kernel, &values, &centers, &xs, w);
    let chain = holder_chain(&diffs, &weights, q)?;
    steps.push(ProofStep::bound("II: mean zero", "term II", 4.0 / alpha * far_integral, 4.0 / alpha * chain.paired));
    steps.push(ProofStep::bound("II: Holder", "term II", 4.0 / alpha * chain.paired, 4.0 / alpha * chain.holder));
    let mut triangle: f64 = 0.0;
    for (p, c) in dec.pieces.iter().zip(&pieces_c) {
        triangle = triangle.max(lq_norm(c, q)? / p.cube.volume().powf(1.0 / q));
    }
    steps.push(ProofStep::bound("II: triangle inequality", "term II", triangle, 2.0 * d * height));
    let cube_sum: f64 = dec.pieces.iter().map(|p| p.cube.volume()).sum();
    let after_sum = 8.0 * d * gam * chain.sup * cube_sum;
    let after2 = 8.0 * d * 3f64.powf(nf) * gam.powf(1.0 - q) * alpha.powf(-q) * fq * chain.sup;
    steps.push(ProofStep::bound("II: sum over cubes", "term II", 4.0 / alpha * chain.holder, after_sum));
    steps.push(ProofStep::bound("II: property (2)", "term II", after_sum, after2));

    let whitney = &dec.pieces[..dec.whitney.cubes.len()];
    let dist: Vec<f64> = dec
        .whitney
        .geometry
        .iter()
        .map(|&(d2, _)| (d2 as f64).sqrt() * grid.spacing())
        .collect();
    let (inner, outer) = containments(whitney, &dist);
    steps.push(ProofStep::bound("containment: cube in ball", "balls around Q_j", inner, 1.0));
    steps.push(ProofStep::bound("containment: double ball in Omega", "balls around Q_j", outer, 1.0));
    let ball = ball_factor(&mut cache, &dec.pieces, n, q)?;
    let sup_bound = (0.5 * nf.sqrt()).powf(nf) * unit_ball_volume(n)? * k;
    steps.push(ProofStep::bound("supremum: complement of Omega", "supremum factor", chain.sup, ball));
    steps.push(ProofStep::bound("supremum: over all radii", "supremum factor", ball, sup_bound));
    steps.push(ProofStep::bound("II: bound", "term II", part2, term(&terms, "II") * scale));

    let e_measure: f64 = dec.compensators.iter().map(|c| c.volume()).sum();
    steps.push(ProofStep::bound("III: E inside Omega", "term III", e_measure, part1));
    if spec.s.is_finite() {
        let s = spec.s;
        let lead = 4f64.powf(s) * d.powf(s) * gam.powf(s);
        let cheb = lead * power_norm(&te, s)?;
        let strong = lead * spec.bound.powf(s) * power_norm(&e, s)?;
        let by_e = lead * spec.bound.powf(s) * e_measure;
        let by_omega = 4f64.powf(s) * d.powf(s) * (gam * spec.bound).powf(s) * part1;
        steps.push(ProofStep::bound("III: Chebyshev", "term III", part3, cheb));
        steps.push(ProofStep::bound("III: strong bound", "term III", cheb, strong));
        steps.push(ProofStep::bound("III: indicator norm", "term III", strong, by_e));
        steps.push(ProofStep::bound("III: measure of E", "term III", by_e, by_omega));
        steps.push(ProofStep::bound("III: choice of gamma", "term III", by_omega, 4f64.powf(s) * d.powf(s) * part1));
        steps.push(ProofStep::bound("III: property (2)", "term III", 4f64.powf(s) * d.powf(s) * part1, term(&terms, "III") * scale));
    } else {
        steps.push(ProofStep::bound("III: level", "term III, s = inf", level * te.max_abs(), alpha / 4.0));
        steps.push(ProofStep::bound("III: empty set", "term III, s = inf", part3, 0.0));
    }

    let c = theorem_constant(n, q, spec.s, Method::Ntv)?;
    steps.push(ProofStep::bound("weak-type measure", "conclusion", total, c * scale));
    steps.push(ProofStep::bound("total", "conclusion", good + part1 + part2 + part3, c * scale));

    Ok(finish(Method::Ntv, spec, n, q, alpha, k, cache.truncation, gam, height, dec.pieces.len(), steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn grid() -> Grid {
        Grid::cube(1, -8.0, 9.0, 1.0 / 64.0).unwrap()
    }

    fn hilbert() -> OperatorSpec {
        OperatorSpec::new(Kernel::hilbert(), 2.0, std::f64::consts::PI).unwrap()
    }

    fn report(t: &ProofTrace) -> String {
        t.failures()
            .map(|s| format!("{}: {} > {}", s.name, s.lhs, s.rhs))
            .collect::<Vec<_>>()
            .join("\n")
    }

    #[test]
    fn cz_trace_on_a_step() {
        let f = GridFunction::from_fn(grid(), |p| if (0.0..0.5).contains(&p[0]) { 3.0 } else if (0.5..1.0).contains(&p[0]) { -1.0 } else { 0.0 }).unwrap();
        let t = trace_cz_proof(&hilbert(), &f, 1.0, 1.0).unwrap();
        assert!(t.cubes > 0);
        assert!(t.overall, "{}", report(&t));
        let last = t.steps.last().unwrap();
        let c = theorem_constant(1, 1.0, 2.0, Method::Cz).unwrap();
        let k = t.seminorm;
        assert_eq!(last.rhs, c * (std::f64::consts::PI + k) * f.norm(1.0).unwrap());
    }

    #[test]
    fn vacuous_when_below_height() {
        let f = GridFunction::from_fn(grid(), |p| if (0.0..1.0).contains(&p[0]) { 0.01 } else { 0.0 }).unwrap();
        let t = trace_cz_proof(&hilbert(), &f, 1.0, 1.0).unwrap();
        assert_eq!(t.cubes, 0);
        assert!(t.overall, "{}", report(&t));
        let t = trace_ntv_proof(&hilbert(), &f, 1.0, 1.0).unwrap();
        assert_eq!(t.cubes, 0);
        assert!(t.overall, "{}", report(&t));
    }

    #[test]
    fn ntv_trace_on_indicator() {
        let f = GridFunction::from_fn(grid(), |p| if (0.0..1.0).contains(&p[0]) { 1.0 } else { 0.0 }).unwrap();
        let t = trace_ntv_proof(&hilbert(), &f, 2.0, 1.0).unwrap();
        assert!(t.cubes > 0);
        assert!(t.overall, "{}", report(&t));
    }
}
