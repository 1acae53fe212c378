use std::path::Path;

use serde_json::json;

use super::{Outcome, RunConfig, EXIT_FAILED, EXIT_INCONCLUSIVE, EXIT_OK};
use crate::decomposition::{
    all_pass, cz_decompose, ntv_decompose, properties_json, whitney_decompose,
};
use crate::error::{Error, Result};
use crate::ext;
use crate::grid::io::{load_grid_function, save_grid_function};
use crate::grid::GridFunction;
use crate::kernels::{hr_seminorm, watson_seminorm, Kernel};
use crate::operator::{apply_operator, interpolation_range, weak_type_quasi_norm, OperatorSpec};
use crate::verify::{
    builtin_testset, trace_cz_proof_with, trace_ntv_proof_with, verify_theorem1_with, Method,
    TestFunction, INCONCLUSIVE_FRACTION,
};

pub(crate) fn dispatch(command: &str, c: &RunConfig, out: &Path) -> Result<Outcome> {
    match command {
        "seminorm" => seminorm(c, out),
        "decompose" => decompose(c, out),
        "whitney" => whitney(c),
        "apply" => apply(c, out),
        "weaktype" => weaktype(c, out),
        "verify" => verify(c, out),
        "trace" => trace(c),
        "range" => range(c),
        other => Err(Error::InvalidParameter(format!(
            "unknown command {other:?}"
        ))),
    }
}

fn code(ok: bool) -> i32 {
    if ok {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

/// Riesz kernels default to the plane, everything else to the line.
fn kernel(c: &RunConfig, n: Option<usize>) -> Result<Kernel> {
    let label = c.need(&c.kernel, "kernel")?;
    let n = n
        .or(c.n)
        .unwrap_or(if label.starts_with("riesz:") { 2 } else { 1 });
    Kernel::from_label(&label, n, c.size_constant)
}

fn input(c: &RunConfig) -> Result<GridFunction> {
    load_grid_function(c.need(&c.input, "input")?)
}

fn operator(c: &RunConfig, k: Kernel) -> Result<OperatorSpec> {
    let s = c.need(&c.s, "s")?;
    let b = c.need(&c.bound, "B")?;
    OperatorSpec::new(k, s, b)
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(())
}

fn seminorm(c: &RunConfig, out: &Path) -> Result<Outcome> {
    let k = kernel(c, None)?;
    let r = c.need(&c.r, "r")?;
    let params = c.seminorm_params(k.dim());
    let est = if c.watson.unwrap_or(false) {
        watson_seminorm(&k, r, &params)?
    } else {
        hr_seminorm(&k, r, &params)?
    };
    write_rows(
        &out.join("seminorm.csv"),
        &["R", "slice"],
        est.slices.iter().map(|&(a, b)| vec![a, b]),
    )?;
    let inconclusive = est.is_inconclusive(INCONCLUSIVE_FRACTION);
    Ok(Outcome {
        summary: json!({
            "kernel": k.label(),
            "family": est.family,
            "r": ext::to_json(r),
            "value": est.value,
            "truncation_error": est.truncation_error,
            "slices": est.slices,
            "inconclusive": inconclusive,
        }),
        code: if inconclusive {
            EXIT_INCONCLUSIVE
        } else {
            EXIT_OK
        },
    })
}

fn decompose(c: &RunConfig, out: &Path) -> Result<Outcome> {
    let f = input(c)?;
    let q = c.need(&c.q, "q")?;
    let height = c.need(&c.height, "height")?;
    let (report, checks, good, bad) = match c.method.unwrap_or(Method::Cz) {
        Method::Cz => {
            let d = cz_decompose(&f, q, height)?;
            (d.report()?, d.check_properties()?, d.good.clone(), d.bad()?)
        }
        Method::Ntv => {
            let d = ntv_decompose(&f, q, height)?;
            (d.report()?, d.check_properties()?, d.good.clone(), d.bad()?)
        }
    };
    save_grid_function(&good, out.join("good.csv"))?;
    save_grid_function(&bad, out.join("bad.csv"))?;
    let pass = all_pass(&checks);
    let mut summary = report;
    summary["pass"] = json!(pass);
    Ok(Outcome {
        summary,
        code: code(pass),
    })
}

fn whitney(c: &RunConfig) -> Result<Outcome> {
    let omega = load_grid_function(c.need(&c.omega, "omega")?)?;
    let w = whitney_decompose(&omega)?;
    let checks = w.check();
    let pass = all_pass(&checks);
    let cubes: Vec<_> = w
        .cubes
        .iter()
        .map(|q| {
            let cube = q.to_cube();
            json!({"center": cube.center(), "side": cube.side()})
        })
        .collect();
    Ok(Outcome {
        summary: json!({
            "cubes": cubes,
            "residue_cells": w.residue.len(),
            "residue_measure": w.residue_measure,
            "covered_measure": w.covered_measure(),
            "properties": properties_json(&checks),
            "pass": pass,
        }),
        code: code(pass),
    })
}

fn apply(c: &RunConfig, out: &Path) -> Result<Outcome> {
    let f = input(c)?;
    // the L^s data play no part in evaluating Tf
    let mut spec = OperatorSpec::new(kernel(c, Some(f.dim()))?, f64::INFINITY, 1.0)?;
    if let Some(e) = c.exclusion {
        spec = spec.with_exclusion(e)?;
    }
    let app = apply_operator(&spec, &f, f.grid())?;
    save_grid_function(&app.tf, out.join("tf.csv"))?;
    Ok(Outcome {
        summary: json!({
            "kernel": spec.kernel.label(),
            "exclusion": spec.exclusion,
            "points": app.tf.grid().len(),
            "excluded_points": app.excluded.iter().filter(|e| **e).count(),
            "max_abs": app.tf.max_abs(),
            "l2_norm": app.tf.norm(2.0)?,
        }),
        code: EXIT_OK,
    })
}

fn weaktype(c: &RunConfig, out: &Path) -> Result<Outcome> {
    let mut u = input(c)?;
    let q = c.need(&c.q, "q")?;
    if c.kernel.is_some() {
        let spec = OperatorSpec::new(kernel(c, Some(u.dim()))?, f64::INFINITY, 1.0)?;
        u = spec.apply(&u)?;
    }
    let r = weak_type_quasi_norm(&u, q, &c.alphas())?;
    write_rows(
        &out.join("weaktype.csv"),
        &["alpha", "distribution"],
        r.alphas
            .iter()
            .zip(&r.distribution)
            .map(|(a, d)| vec![*a, *d]),
    )?;
    Ok(Outcome {
        summary: json!({
            "q": q,
            "quasi_norm": r.quasi_norm,
            "argmax_alpha": r.argmax_alpha,
        }),
        code: EXIT_OK,
    })
}

fn testset(c: &RunConfig, n: usize) -> Result<Vec<TestFunction>> {
    let entries = c.testset.clone().unwrap_or_else(|| vec!["builtin".into()]);
    let mut out = Vec::new();
    for e in entries {
        if e == "builtin" {
            out.extend(builtin_testset(n, c.seed.unwrap_or(0))?);
        } else {
            let f = load_grid_function(&e)?;
            if f.dim() != n {
                return Err(Error::InvalidParameter(format!(
                    "test function {e} has dimension {}, the kernel {n}",
                    f.dim()
                )));
            }
            out.push(TestFunction::new(e, f));
        }
    }
    Ok(out)
}

fn verify(c: &RunConfig, out: &Path) -> Result<Outcome> {
    let spec = operator(c, kernel(c, None)?)?;
    let n = spec.kernel.dim();
    let q = c.need(&c.q, "q")?;
    let method = c.need(&c.method, "method")?;
    let set = testset(c, n)?;
    let report = verify_theorem1_with(&spec, q, &set, &c.alphas(), method, &c.seminorm_params(n))?;
    let mut w = csv::Writer::from_path(out.join("ratios.csv"))?;
    w.write_record(["label", "alpha", "measure", "ratio"])?;
    for e in &report.per_function {
        w.write_record([
            e.label.clone(),
            format!("{:e}", e.alpha),
            format!("{:e}", e.measure),
            format!("{:e}", e.ratio),
        ])?;
    }
    w.flush()?;
    let code = if report.inconclusive {
        EXIT_INCONCLUSIVE
    } else {
        code(report.pass)
    };
    let mut summary = serde_json::to_value(&report)?;
    summary["verdict"] = json!(report.verdict());
    Ok(Outcome { summary, code })
}

fn trace(c: &RunConfig) -> Result<Outcome> {
    let spec = operator(c, kernel(c, None)?)?;
    let n = spec.kernel.dim();
    let q = c.need(&c.q, "q")?;
    let alpha = c.need(&c.alpha, "alpha")?;
    let (label, f) = match &c.input {
        Some(path) => (path.display().to_string(), load_grid_function(path)?),
        None => {
            let idx = c.function.unwrap_or(0);
            let mut set = builtin_testset(n, c.seed.unwrap_or(0))?;
            if idx >= set.len() {
                return Err(Error::InvalidParameter(format!(
                    "function index {idx} is past the {} built-in functions",
                    set.len()
                )));
            }
            let t = set.swap_remove(idx);
            (t.label, t.f)
        }
    };
    let params = c.seminorm_params(n);
    let trace = match c.need(&c.method, "method")? {
        Method::Cz => trace_cz_proof_with(&spec, &f, alpha, q, &params)?,
        Method::Ntv => trace_ntv_proof_with(&spec, &f, alpha, q, &params)?,
    };
    let mut summary = serde_json::to_value(&trace)?;
    summary["function"] = json!(label);
    Ok(Outcome {
        summary,
        code: code(trace.overall),
    })
}

fn range(c: &RunConfig) -> Result<Outcome> {
    let r = interpolation_range(c.need(&c.q, "q")?, c.need(&c.s, "s")?)?;
    Ok(Outcome {
        summary: serde_json::to_value(r)?,
        code: EXIT_OK,
    })
}
