//! Quadrature for the kernel smoothness seminorms.
//!
//! Everything is computed at unit scale and dilated by each `R`: the shift
//! variable `y` runs over a midpoint grid of the unit ball, and the outer
//! variable `x` over a polar mesh of `2 <= |x| <= 2 rho` built from dyadic
//! shells. Cell weights are exact shell-sector volumes, so the discrete
//! measures satisfy Hölder and Jensen exactly; the monotonicity properties
//! of the seminorms then hold for the computed numbers, not only in the
//! limit.
//!
//! `|x| >= 2R` and `|y| <= R` keep `x - y` at distance `>= R` from the
//! origin, so no quadrature cell ever touches a kernel singularity.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Kernel;
use crate::error::{Error, Result};
use crate::ext;
use crate::grid::MAX_DIM;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeminormParams {
    /// Stand-in for the supremum over `R > 0`; ascending.
    pub radii: Vec<f64>,
    /// Spacing of the `y` midpoint grid, as a fraction of `R`.
    pub y_spacing: f64,
    /// The outer integral runs over `2R <= |x| <= rho R`.
    pub outer_factor: f64,
    /// Radial cell width as a fraction of the inner radius of its dyadic
    /// shell; also the angular step in radians.
    pub outer_spacing: f64,
    /// Recompute every slice with the outer domain doubled and report the
    /// change.
    pub convergence_check: bool,
}

impl SeminormParams {
    /// Defaults tuned per dimension so a full sweep stays interactive.
    pub fn for_dim(n: usize) -> Self {
        let (y_spacing, outer_spacing) = match n {
            1 => (1e-3, 1.0 / 64.0),
            2 => (0.05, 1.0 / 16.0),
            _ => (0.25, 0.25),
        };
        Self {
            radii: (-4..=4).map(|k| 2f64.powi(k)).collect(),
            y_spacing,
            outer_factor: 1e4,
            outer_spacing,
            convergence_check: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() {
            return Err(Error::EmptyRadii);
        }
        if self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidParameter("radii must be positive".into()));
        }
        if self.radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "radii must be strictly ascending".into(),
            ));
        }
        if !(self.outer_factor.is_finite() && self.outer_factor > 2.0) {
            return Err(Error::InvalidParameter(format!(
                "outer radius factor must exceed 2, got {}",
                self.outer_factor
            )));
        }
        for (name, v) in [
            ("y spacing", self.y_spacing),
            ("outer spacing", self.outer_spacing),
        ] {
            if !(v.is_finite() && v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in (0, 1], got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeminormEstimate {
    /// `hr` or `watson`.
    pub family: &'static str,
    #[serde(serialize_with = "ext::serialize")]
    pub r: f64,
    pub value: f64,
    /// `(R, slice value)` for every radius.
    pub slices: Vec<(f64, f64)>,
    pub truncation_error: f64,
    pub params: SeminormParams,
}

impl SeminormEstimate {
    /// True when the truncation diagnostic exceeds `fraction` of the value.
    pub fn is_inconclusive(&self, fraction: f64) -> bool {
        self.truncation_error > fraction * self.value
    }
}

fn check_r(r: f64) -> Result<()> {
    if r.is_nan() || r < 1.0 {
        return Err(Error::Exponent {
            value: r,
            reason: "r must be at least 1",
        });
    }
    Ok(())
}

/// Midpoints of the cell grid on `[-1, 1]^n` that fall in the closed unit
/// ball.
fn unit_ball_samples(n: usize, spacing: f64) -> Vec<[f64; MAX_DIM]> {
    let per_axis = ((2.0 / spacing).round() as usize).max(1);
    let h = 2.0 / per_axis as f64;
    let total = per_axis.pow(n as u32);
    let mut out = Vec::new();
    for i in 0..total {
        let mut rem = i;
        let mut p = [0.0; MAX_DIM];
        for a in (0..n).rev() {
            p[a] = -1.0 + ((rem % per_axis) as f64 + 0.5) * h;
            rem /= per_axis;
        }
        if p.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            out.push(p);
        }
    }
    out
}

/// Polar mesh of `lo <= |x| <= hi` at unit scale. `tag` groups cells into
/// radial segments.
#[derive(Default)]
struct OuterMesh {
    points: Vec<[f64; MAX_DIM]>,
    weights: Vec<f64>,
    tags: Vec<usize>,
}

impl OuterMesh {
    fn push_segment(&mut self, n: usize, lo: f64, hi: f64, spacing: f64, tag: usize) {
        if hi <= lo * (1.0 + 1e-12) {
            return;
        }
        let radial = (((hi - lo) / (lo * spacing)) - 1e-9).ceil().max(1.0) as usize;
        let dr = (hi - lo) / radial as f64;
        let dirs = directions(n, spacing);
        for k in 0..radial {
            let r0 = lo + k as f64 * dr;
            let r1 = if k + 1 == radial { hi } else { r0 + dr };
            let radial_measure = (r1.powi(n as i32) - r0.powi(n as i32)) / n as f64;
            let rm = 0.5 * (r0 + r1);
            for (dir, ang) in &dirs {
                let mut p = [0.0; MAX_DIM];
                for a in 0..n {
                    p[a] = rm * dir[a];
                }
                self.points.push(p);
                self.weights.push(radial_measure * ang);
                self.tags.push(tag);
            }
        }
    }
}

/// Unit directions with their solid-angle weights; symmetric under
/// `x -> -x`.
fn directions(n: usize, spacing: f64) -> Vec<([f64; MAX_DIM], f64)> {
    let even = |v: f64| {
        let c = v.ceil() as usize;
        (c + c % 2).max(2)
    };
    match n {
        1 => vec![([1.0, 0.0, 0.0], 1.0), ([-1.0, 0.0, 0.0], 1.0)],
        2 => {
            let m = even(2.0 * PI / spacing);
            let dt = 2.0 * PI / m as f64;
            (0..m)
                .map(|i| {
                    let t = (i as f64 + 0.5) * dt;
                    ([t.cos(), t.sin(), 0.0], dt)
                })
                .collect()
        }
        _ => {
            let mt = (PI / spacing).ceil().max(1.0) as usize;
            let mp = even(2.0 * PI / spacing);
            let dt = PI / mt as f64;
            let dp = 2.0 * PI / mp as f64;
            let mut out = Vec::with_capacity(mt * mp);
            for i in 0..mt {
                let t0 = i as f64 * dt;
                let t1 = t0 + dt;
                let tm = 0.5 * (t0 + t1);
                let band = (t0.cos() - t1.cos()) * dp;
                for j in 0..mp {
                    let p = (j as f64 + 0.5) * dp;
                    out.push(([tm.sin() * p.cos(), tm.sin() * p.sin(), tm.cos()], band));
                }
            }
            out
        }
    }
}

/// Number of full dyadic shells `[2^m, 2^(m+1)]`, `m >= 1`, inside
/// `[2, rho]`.
fn full_shells(rho: f64) -> usize {
    ((rho.log2() + 1e-12).floor() as usize).saturating_sub(1).max(1)
}

/// Tags: `0..M` full shells `m = 1..=M`; `M` the partial shell
/// `[2^(M+1), rho]`; `M+1` is `[rho, 2^(M+2)]`; `M+2` is `[2^(M+2), 2 rho]`.
fn outer_mesh(n: usize, p: &SeminormParams, extension: bool) -> (OuterMesh, usize) {
    let rho = p.outer_factor;
    let m_full = full_shells(rho);
    let mut mesh = OuterMesh::default();
    for m in 1..=m_full {
        let lo = 2f64.powi(m as i32);
        mesh.push_segment(n, lo, 2.0 * lo, p.outer_spacing, m - 1);
    }
    let top = 2f64.powi(m_full as i32 + 1);
    mesh.push_segment(n, top, rho, p.outer_spacing, m_full);
    if extension {
        mesh.push_segment(n, rho, 2.0 * top, p.outer_spacing, m_full + 1);
        mesh.push_segment(n, (2.0 * top).max(rho), 2.0 * rho, p.outer_spacing, m_full + 2);
    }
    (mesh, m_full)
}

/// Per-cell `|K(R(u - v)) - K(R u)|` for one shift `v`, passed to `visit`
/// with the scaled weight.
#[inline]
fn for_each_difference(
    k: &Kernel,
    mesh: &OuterMesh,
    kx: &[f64],
    radius: f64,
    v: &[f64; MAX_DIM],
    mut visit: impl FnMut(usize, f64, f64),
) {
    let n = k.dim();
    let scale = radius.powi(n as i32);
    let mut z = [0.0; MAX_DIM];
    for (c, u) in mesh.points.iter().enumerate() {
        for a in 0..n {
            z[a] = radius * (u[a] - v[a]);
        }
        let d = (k.eval(&z[..n]) - kx[c]).abs();
        visit(c, scale * mesh.weights[c], d);
    }
}

fn cached_kernel(k: &Kernel, mesh: &OuterMesh, radius: f64) -> Vec<f64> {
    let n = k.dim();
    mesh.points
        .iter()
        .map(|u| {
            let mut z = [0.0; MAX_DIM];
            for a in 0..n {
                z[a] = radius * u[a];
            }
            k.eval(&z[..n])
        })
        .collect()
}

/// `(mean of F^r)^(1/r)` under the normalized counting measure, or `max F`.
fn lr_average(values: &[f64], r: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    if r.is_infinite() {
        values.iter().fold(0.0, |m: f64, v| m.max(*v))
    } else if r == 1.0 {
        values.iter().sum::<f64>() / values.len() as f64
    } else {
        let s: f64 = values.iter().map(|v| v.powf(r)).sum();
        (s / values.len() as f64).powf(1.0 / r)
    }
}

/// The averaged seminorm for several exponents, sharing the inner
/// integrals. Estimates come back in the order of `rs`.
pub fn hr_seminorm_multi(
    k: &Kernel,
    rs: &[f64],
    p: &SeminormParams,
) -> Result<Vec<SeminormEstimate>> {
    for &r in rs {
        check_r(r)?;
    }
    p.validate()?;
    let n = k.dim();
    let ys = unit_ball_samples(n, p.y_spacing);
    let (mesh, m_full) = outer_mesh(n, p, p.convergence_check);

    // (R, inner integrals over 2R..rho R, same over 2R..2 rho R)
    let mut per_radius: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::with_capacity(p.radii.len());
    for &radius in &p.radii {
        let kx = cached_kernel(k, &mesh, radius);
        let sums: Vec<(f64, f64)> = ys
            .par_iter()
            .map(|v| {
                let (mut main, mut extra) = (0.0, 0.0);
                if !k.is_zero() {
                    for_each_difference(k, &mesh, &kx, radius, v, |c, w, d| {
                        if mesh.tags[c] <= m_full {
                            main += w * d;
                        } else {
                            extra += w * d;
                        }
                    });
                }
                (main, main + extra)
            })
            .collect();
        let (main, full) = sums.into_iter().unzip();
        per_radius.push((radius, main, full));
    }

    Ok(rs
        .iter()
        .map(|&r| {
            let mut slices = Vec::with_capacity(per_radius.len());
            let mut trunc: f64 = 0.0;
            for (radius, main, full) in &per_radius {
                let s = lr_average(main, r);
                if p.convergence_check {
                    trunc = trunc.max((lr_average(full, r) - s).abs());
                }
                slices.push((*radius, s));
            }
            SeminormEstimate {
                family: "hr",
                r,
                value: slices.iter().fold(0.0, |m: f64, s| m.max(s.1)),
                slices,
                truncation_error: trunc,
                params: p.clone(),
            }
        })
        .collect())
}

/// `sup_R [ avg_{|y| <= R} ( int_{|x| >= 2R} |K(x-y) - K(x)| dx )^r ]^(1/r)`
/// with the average taken against `dy / (v_n R^n)`.
pub fn hr_seminorm(k: &Kernel, r: f64, p: &SeminormParams) -> Result<SeminormEstimate> {
    Ok(hr_seminorm_multi(k, &[r], p)?.remove(0))
}

/// Accumulates `sum w |d|^r` (or `max |d|`) over one annulus.
#[derive(Clone, Copy)]
struct Annulus {
    acc: f64,
}

impl Annulus {
    #[inline]
    fn add(&mut self, w: f64, d: f64, r: f64) {
        if r.is_infinite() {
            self.acc = self.acc.max(d);
        } else if r == 1.0 {
            self.acc += w * d;
        } else {
            self.acc += w * d.powf(r);
        }
    }

    fn norm(self, r: f64) -> f64 {
        if r.is_infinite() || r == 1.0 {
            self.acc
        } else {
            self.acc.powf(1.0 / r)
        }
    }
}

/// `(2^m R)^(n/r')`.
fn annulus_weight(n: usize, r: f64, outer: f64) -> f64 {
    let exponent = if r.is_infinite() {
        n as f64
    } else {
        n as f64 * (1.0 - 1.0 / r)
    };
    outer.powf(exponent)
}

/// The annulus-sum seminorm, truncated to the full dyadic shells inside
/// `[2R, rho R]`.
pub fn watson_seminorm(k: &Kernel, r: f64, p: &SeminormParams) -> Result<SeminormEstimate> {
    check_r(r)?;
    p.validate()?;
    let n = k.dim();
    let ys = unit_ball_samples(n, p.y_spacing);
    let (mesh, m_full) = outer_mesh(n, p, p.convergence_check);

    let mut slices = Vec::with_capacity(p.radii.len());
    let mut trunc: f64 = 0.0;
    for &radius in &p.radii {
        let kx = cached_kernel(k, &mesh, radius);
        let weights: Vec<f64> = (1..=m_full + 1)
            .map(|m| annulus_weight(n, r, 2f64.powi(m as i32) * radius))
            .collect();
        let per_y: Vec<(f64, f64)> = ys
            .par_iter()
            .map(|v| {
                if k.is_zero() {
                    return (0.0, 0.0);
                }
                let mut shells = vec![Annulus { acc: 0.0 }; m_full + 1];
                for_each_difference(k, &mesh, &kx, radius, v, |c, w, d| {
                    let t = mesh.tags[c];
                    // tags m_full and m_full+1 together form shell m_full+1
                    if t <= m_full + 1 {
                        shells[t.min(m_full)].add(w, d, r);
                    }
                });
                let main: f64 = (0..m_full).map(|i| weights[i] * shells[i].norm(r)).sum();
                let next = weights[m_full] * shells[m_full].norm(r);
                (main, next)
            })
            .collect();
        let value = per_y.iter().fold(0.0, |m: f64, v| m.max(v.0));
        if p.convergence_check {
            let extended = per_y.iter().fold(0.0, |m: f64, v| m.max(v.0 + v.1));
            trunc = trunc.max(extended - value);
        }
        slices.push((radius, value));
    }
    Ok(SeminormEstimate {
        family: "watson",
        r,
        value: slices.iter().fold(0.0, |m: f64, s| m.max(s.1)),
        slices,
        truncation_error: trunc,
        params: p.clone(),
    })
}

/// One term `(2^m R)^(n/r') [ int_{2^m R <= |x| < 2^(m+1) R} |K(x-y)-K(x)|^r dx ]^(1/r)`
/// of the annulus sum, at the mesh resolution of `p`.
pub fn watson_term(
    k: &Kernel,
    r: f64,
    radius: f64,
    y: &[f64],
    m: u32,
    p: &SeminormParams,
) -> Result<f64> {
    check_r(r)?;
    let n = k.dim();
    if y.len() != n {
        return Err(Error::InvalidParameter("shift has the wrong dimension".into()));
    }
    if !(radius.is_finite() && radius > 0.0) || m == 0 {
        return Err(Error::InvalidParameter(
            "need R > 0 and annulus index m >= 1".into(),
        ));
    }
    if y.iter().map(|v| v * v).sum::<f64>().sqrt() > radius * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter("shift must satisfy |y| <= R".into()));
    }
    let mut mesh = OuterMesh::default();
    let lo = 2f64.powi(m as i32);
    mesh.push_segment(n, lo, 2.0 * lo, p.outer_spacing, 0);
    let kx = cached_kernel(k, &mesh, radius);
    let mut v = [0.0; MAX_DIM];
    for a in 0..n {
        v[a] = y[a] / radius;
    }
    let mut acc = Annulus { acc: 0.0 };
    for_each_difference(k, &mesh, &kx, radius, &v, |_, w, d| acc.add(w, d, r));
    Ok(annulus_weight(n, r, lo * radius) * acc.norm(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::unit_ball_volume;

    #[test]
    fn mesh_volumes_are_exact() {
        for n in 1..=3 {
            let p = SeminormParams {
                outer_factor: 64.0,
                outer_spacing: 0.25,
                ..SeminormParams::for_dim(n)
            };
            let (mesh, m_full) = outer_mesh(n, &p, false);
            assert_eq!(m_full, 5);
            let vol: f64 = mesh.weights.iter().sum();
            let v = unit_ball_volume(n).unwrap();
            let exact = v * (64f64.powi(n as i32) - 2f64.powi(n as i32));
            assert!((vol - exact).abs() < 1e-9 * exact, "n={n}");
        }
    }

    #[test]
    fn ball_samples_are_symmetric() {
        let s = unit_ball_samples(2, 0.1);
        let sum: f64 = s.iter().map(|p| p[0] + p[1]).sum();
        assert!(sum.abs() < 1e-9);
        assert!(s.iter().all(|p| p[0] * p[0] + p[1] * p[1] <= 1.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        let k = Kernel::hilbert();
        let p = SeminormParams::for_dim(1);
        assert!(hr_seminorm(&k, 0.5, &p).is_err());
        let empty = SeminormParams {
            radii: vec![],
            ..p.clone()
        };
        assert!(matches!(hr_seminorm(&k, 1.0, &empty), Err(Error::EmptyRadii)));
        let small = SeminormParams {
            outer_factor: 2.0,
            ..p
        };
        assert!(watson_seminorm(&k, 1.0, &small).is_err());
    }

    #[test]
    fn zero_kernel_vanishes() {
        let k = Kernel::zero(2).unwrap();
        let p = SeminormParams {
            radii: vec![1.0],
            ..SeminormParams::for_dim(2)
        };
        assert_eq!(hr_seminorm(&k, 2.0, &p).unwrap().value, 0.0);
        assert_eq!(watson_seminorm(&k, 2.0, &p).unwrap().value, 0.0);
    }

    #[test]
    fn single_annulus_closed_form() {
        // int_{2 <= |x| < 4} |1/(x-1) - 1/x| dx = ln(3/2) + ln(6/5)
        let k = Kernel::hilbert();
        let p = SeminormParams::for_dim(1);
        let t = watson_term(&k, 1.0, 1.0, &[1.0], 1, &p).unwrap();
        assert!((t - (9.0f64 / 5.0).ln()).abs() < 1e-4, "{t}");
    }
}
