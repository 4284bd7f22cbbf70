//! The validate / faces / eval / grid subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use log::{debug, info};
use serde_json::{json, Value};

use toric_kahler::polytope::{
    bounding_box, classify_point, enumerate_faces, validate, Face, PointClass, ToricSpec,
    ValidationReport,
};
use toric_kahler::potentials::{
    face_metric, metric_hessian_flat, metric_hessian_projective, MetricReport, ProjectiveParams,
};
use toric_kahler::quotient::{stratum_report, StratumVerdict};
use toric_kahler::tol::ACTIVITY_TOL;

use crate::jsonfmt::{self, float_cell, matrix, num, vec_f64};
use crate::specfile::LoadedSpec;

/// Exit discipline: `Input` maps to exit code 2, `Check` to 1.
pub enum CmdError {
    Input(String),
    Check(String),
}

pub type CmdResult = Result<(), CmdError>;

pub fn write_output(out: Option<&Path>, text: &str) -> CmdResult {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CmdError::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn report_json(name: &str, report: &ValidationReport) -> Value {
    json!({
        "name": name,
        "primitive_ok": report.primitive_ok,
        "non_primitive": report.non_primitive,
        "span_ok": report.span_ok,
        "interior_ok": report.interior_ok,
        "interior_witness": report.interior_witness.as_deref().map(vec_f64),
        "interior_slack": num(report.interior_slack),
        "minimal_ok": report.minimal_ok,
        "redundant": report.redundant,
        "facet_min_slack": report.facet_min_slack.iter()
            .map(|s| s.map_or(Value::Null, num))
            .collect::<Vec<_>>(),
        "bounded": report.bounded,
        "recession_ray": report.recession_ray.as_deref().map(vec_f64),
        "all_ok": report.is_valid(),
    })
}

pub fn cmd_validate(loaded: &LoadedSpec, out: Option<&Path>) -> CmdResult {
    let report = validate(&loaded.spec);
    write_output(
        out,
        &jsonfmt::to_string(&report_json(&loaded.name, &report)),
    )?;
    if report.is_valid() {
        Ok(())
    } else {
        Err(CmdError::Check("validation failed".into()))
    }
}

/// Validate and abort with the report (exit 2) unless the spec passes.
pub fn require_valid(loaded: &LoadedSpec) -> CmdResult {
    let report = validate(&loaded.spec);
    if report.is_valid() {
        debug!("spec {} validated", loaded.name);
        Ok(())
    } else {
        eprintln!(
            "{}",
            jsonfmt::to_string(&report_json(&loaded.name, &report)).trim_end()
        );
        Err(CmdError::Input(format!(
            "spec {} fails validation",
            loaded.name
        )))
    }
}

fn verdict_json(verdict: &StratumVerdict) -> (&'static str, Value, Value) {
    match verdict {
        StratumVerdict::Smooth => ("smooth", Value::Null, Value::Null),
        StratumVerdict::Orbifold(m) => ("orbifold", json!(m), Value::Null),
        StratumVerdict::Singular(reason) => ("singular", Value::Null, json!(format!("{reason:?}"))),
    }
}

pub fn cmd_faces(loaded: &LoadedSpec, out: Option<&Path>) -> CmdResult {
    require_valid(loaded)?;
    let entries = stratum_report(&loaded.spec)
        .map_err(|e| CmdError::Input(format!("stratum report failed: {e}")))?;
    let faces: Vec<Value> = entries
        .iter()
        .map(|e| {
            let (verdict, order, reason) = verdict_json(&e.class.verdict);
            json!({
                "active_set": e.face.active_set(),
                "dim": e.face.dim(),
                "witness": vec_f64(e.face.witness()),
                "verdict": verdict,
                "orbifold_order": order,
                "singular_reason": reason,
                "stratum_dim": e.stratum_dim,
            })
        })
        .collect();
    let doc = json!({
        "name": loaded.name,
        "face_count": faces.len(),
        "faces": faces,
    });
    write_output(out, &jsonfmt::to_string(&doc))
}

fn metric_json(mode: &str, report: &MetricReport, extra: Value) -> Value {
    let hess_rows: Vec<Vec<f64>> = (0..report.hessian.nrows())
        .map(|i| {
            (0..report.hessian.ncols())
                .map(|j| report.hessian[(i, j)])
                .collect()
        })
        .collect();
    let mut doc = json!({
        "mode": mode,
        "point": vec_f64(&report.eta),
        "dual": num(report.dual_value),
        "h": num(report.h_value),
        "gradient": vec_f64(&report.gradient),
        "hessian": matrix(&hess_rows),
        "min_eig": num(report.min_eigenvalue),
        "condition": num(report.condition_number),
    });
    if let (Value::Object(doc), Value::Object(extra)) = (&mut doc, extra) {
        for (k, v) in extra {
            doc.insert(k, v);
        }
    }
    doc
}

pub fn cmd_eval(
    loaded: &LoadedSpec,
    point: &[f64],
    projective: Option<f64>,
    face: Option<&[usize]>,
    out: Option<&Path>,
) -> CmdResult {
    require_valid(loaded)?;
    let spec = &loaded.spec;
    let doc = match (face, projective) {
        (Some(_), Some(_)) => {
            return Err(CmdError::Input(
                "--face and --projective cannot be combined".into(),
            ))
        }
        (Some(active), None) => {
            let face = find_face(spec, active)?;
            let report = face_metric(spec, &face, point)
                .map_err(|e| CmdError::Check(format!("face evaluation failed: {e}")))?;
            metric_json("face", &report, json!({ "face": face.active_set() }))
        }
        (None, Some(r)) => {
            let params = ProjectiveParams::for_spec(spec, r)
                .map_err(|e| CmdError::Input(format!("bad projective scale: {e}")))?;
            let report = metric_hessian_projective(spec, &params, point)
                .map_err(|e| CmdError::Check(format!("evaluation failed: {e}")))?;
            metric_json("projective", &report, json!({ "R": num(r) }))
        }
        (None, None) => {
            let report = metric_hessian_flat(spec, point)
                .map_err(|e| CmdError::Check(format!("evaluation failed: {e}")))?;
            metric_json("flat", &report, json!({}))
        }
    };
    write_output(out, &jsonfmt::to_string(&doc))
}

fn find_face(spec: &ToricSpec, active: &[usize]) -> Result<Face, CmdError> {
    let mut wanted: Vec<usize> = active.to_vec();
    wanted.sort_unstable();
    wanted.dedup();
    enumerate_faces(spec)
        .into_iter()
        .find(|f| f.active_set() == wanted)
        .ok_or_else(|| CmdError::Input(format!("no face with active set {wanted:?}")))
}

pub struct GridArgs {
    pub resolution: Vec<usize>,
    pub bbox: Option<Vec<(f64, f64)>>,
    pub fields: Vec<String>,
    pub projective: Option<f64>,
    pub out: Option<PathBuf>,
}

pub fn cmd_grid(loaded: &LoadedSpec, args: &GridArgs) -> CmdResult {
    require_valid(loaded)?;
    let spec = &loaded.spec;
    let n = spec.torus_rank();

    let resolution: Vec<usize> = match args.resolution.len() {
        1 => vec![args.resolution[0]; n],
        k if k == n => args.resolution.clone(),
        k => {
            return Err(CmdError::Input(format!(
                "--resolution needs 1 or {n} entries, got {k}"
            )))
        }
    };
    if resolution.iter().any(|&r| r < 2) {
        return Err(CmdError::Input("resolution must be at least 2".into()));
    }
    for f in &args.fields {
        if !matches!(f.as_str(), "dual" | "h" | "min_eig") {
            return Err(CmdError::Input(format!(
                "unknown field {f:?} (expected dual, h, min_eig)"
            )));
        }
    }

    let outer = match &args.bbox {
        Some(b) => {
            if b.len() != n {
                return Err(CmdError::Input(format!(
                    "--box needs {n} ranges, got {}",
                    b.len()
                )));
            }
            b.clone()
        }
        None => bounding_box(spec)
            .ok_or_else(|| CmdError::Input("polytope is unbounded; supply --box".into()))?,
    };
    // 2% inset per side keeps default grids off the boundary.
    let boxed: Vec<(f64, f64)> = outer
        .iter()
        .map(|&(lo, hi)| {
            let w = hi - lo;
            (lo + 0.02 * w, hi - 0.02 * w)
        })
        .collect();

    let params = match args.projective {
        Some(r) => Some(
            ProjectiveParams::for_spec(spec, r)
                .map_err(|e| CmdError::Input(format!("bad projective scale: {e}")))?,
        ),
        None => None,
    };

    let mut csv = String::new();
    for k in 0..n {
        csv.push_str(&format!("eta_{k},"));
    }
    csv.push_str(&args.fields.join(","));
    csv.push('\n');

    let mut rows = 0usize;
    let total: usize = resolution.iter().product();
    for flat_idx in 0..total {
        // Row-major: the last axis varies fastest.
        let mut rem = flat_idx;
        let mut idx = vec![0usize; n];
        for k in (0..n).rev() {
            idx[k] = rem % resolution[k];
            rem /= resolution[k];
        }
        let eta: Vec<f64> = (0..n)
            .map(|k| {
                let (lo, hi) = boxed[k];
                lo + (hi - lo) * idx[k] as f64 / (resolution[k] - 1) as f64
            })
            .collect();
        if classify_point(spec, &eta, ACTIVITY_TOL).map_err(|e| CmdError::Input(e.to_string()))?
            != PointClass::Interior
        {
            continue;
        }
        let report = match &params {
            Some(p) => match metric_hessian_projective(spec, p, &eta) {
                Ok(r) => r,
                Err(_) => continue, // outside the projective domain
            },
            None => match metric_hessian_flat(spec, &eta) {
                Ok(r) => r,
                Err(_) => continue,
            },
        };
        for &x in &eta {
            csv.push_str(&float_cell(x));
            csv.push(',');
        }
        let cells: Vec<String> = args
            .fields
            .iter()
            .map(|f| match f.as_str() {
                "dual" => float_cell(report.dual_value),
                "h" => float_cell(report.h_value),
                _ => float_cell(report.min_eigenvalue),
            })
            .collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
        rows += 1;
    }

    if rows == 0 {
        return Err(CmdError::Check(
            "grid box does not intersect the interior".into(),
        ));
    }
    info!("grid produced {rows} rows");

    let meta = json!({
        "name": loaded.name,
        "resolution": resolution,
        "box": outer.iter().map(|&(lo, hi)| json!([num(lo), num(hi)])).collect::<Vec<_>>(),
        "inset_box": boxed.iter().map(|&(lo, hi)| json!([num(lo), num(hi)])).collect::<Vec<_>>(),
        "fields": args.fields,
        "projective": args.projective.map_or(Value::Null, num),
        "rows": rows,
    });
    match &args.out {
        Some(path) => {
            fs::write(path, &csv)
                .map_err(|e| CmdError::Input(format!("cannot write {}: {e}", path.display())))?;
            let meta_path = PathBuf::from(format!("{}.meta.json", path.display()));
            fs::write(&meta_path, jsonfmt::to_string(&meta)).map_err(|e| {
                CmdError::Input(format!("cannot write {}: {e}", meta_path.display()))
            })?;
        }
        None => {
            print!("{csv}");
            eprint!("{}", jsonfmt::to_string(&meta));
        }
    }
    Ok(())
}
