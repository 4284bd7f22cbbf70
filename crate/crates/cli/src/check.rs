//! The check subcommand: seeded property suites over a spec file, with
//! one summary entry per suite and the per-module tolerances baked in.

use std::path::Path;

use log::info;
use serde_json::{json, Value};

use toric_kahler::convex::{
    fd_gradient, fd_hessian, h_transform, inverse_legendre, legendre_map, separable_h,
    ConvexPotential, FlatPotential,
};
use toric_kahler::polytope::{enumerate_faces, iota_lambda, sample_interior, Face, ToricSpec};
use toric_kahler::potentials::{
    face_dual, face_h, flat_dual, flat_h, metric_hessian_flat, metric_hessian_projective,
    projective_dual, projective_h, ProjectiveParams,
};
use toric_kahler::quotient::{build_quotient, verify_level_set};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::commands::{require_valid, write_output, CmdError, CmdResult};
use crate::jsonfmt::{self, num};
use crate::specfile::LoadedSpec;

pub struct CheckArgs {
    pub samples: usize,
    pub seed: u64,
    pub bbox: Option<Vec<(f64, f64)>>,
}

struct Suite {
    name: &'static str,
    skipped: bool,
    /// Worst-case statistic; pass means `value <= threshold` unless the
    /// suite is a positivity check, where it means `value > 0`.
    value: f64,
    threshold: f64,
    positivity: bool,
}

impl Suite {
    fn residual(name: &'static str, value: f64, threshold: f64) -> Suite {
        Suite {
            name,
            skipped: false,
            value,
            threshold,
            positivity: false,
        }
    }

    fn positivity(name: &'static str, value: f64) -> Suite {
        Suite {
            name,
            skipped: false,
            value,
            threshold: 0.0,
            positivity: true,
        }
    }

    fn skipped(name: &'static str) -> Suite {
        Suite {
            name,
            skipped: true,
            value: 0.0,
            threshold: 0.0,
            positivity: false,
        }
    }

    fn pass(&self) -> bool {
        if self.skipped {
            return true;
        }
        if self.positivity {
            self.value > 0.0
        } else {
            self.value <= self.threshold
        }
    }

    fn to_json(&self) -> Value {
        json!({
            "suite": self.name,
            "skipped": self.skipped,
            "statistic": if self.skipped { Value::Null } else { num(self.value) },
            "threshold": if self.skipped { Value::Null } else { num(self.threshold) },
            "kind": if self.positivity { "min_eigenvalue" } else { "max_residual" },
            "pass": self.pass(),
        })
    }
}

pub fn cmd_check(loaded: &LoadedSpec, args: &CheckArgs, out: Option<&Path>) -> CmdResult {
    require_valid(loaded)?;
    let spec = &loaded.spec;

    // Unbounded specs get a witness-centered sampling box unless one was
    // supplied explicitly.
    let bbox: Option<Vec<(f64, f64)>> = match &args.bbox {
        Some(b) => Some(b.clone()),
        None => {
            if toric_kahler::polytope::bounding_box(spec).is_some() {
                None
            } else {
                let report = toric_kahler::polytope::validate(spec);
                let w = report
                    .interior_witness
                    .ok_or_else(|| CmdError::Input("no interior witness".into()))?;
                info!("unbounded polytope: sampling box defaults to witness +- 5");
                Some(w.iter().map(|&x| (x - 5.0, x + 5.0)).collect())
            }
        }
    };

    let points = sample_interior(spec, args.samples, args.seed, bbox.as_deref())
        .map_err(|e| CmdError::Input(format!("sampling failed: {e}")))?;

    let mut suites: Vec<Suite> = Vec::new();
    suites.extend(legendre_suites(spec, args));
    suites.push(h_flat_suite(spec, &points));
    suites.extend(projective_suites(loaded, &points));
    suites.push(face_suite(spec, args.seed));
    suites.extend(level_set_suites(spec, args, bbox.as_deref()));
    suites.push(positivity_flat(spec, &points));
    suites.extend(fd_suites(loaded, &points));
    suites.extend(fs_suites(loaded, &points));

    let all_pass = suites.iter().all(Suite::pass);
    let doc = json!({
        "name": loaded.name,
        "seed": args.seed,
        "samples": args.samples,
        "suites": suites.iter().map(Suite::to_json).collect::<Vec<_>>(),
        "all_pass": all_pass,
    });
    write_output(out, &jsonfmt::to_string(&doc))?;
    if all_pass {
        Ok(())
    } else {
        let failing: Vec<&str> = suites
            .iter()
            .filter(|s| !s.pass())
            .map(|s| s.name)
            .collect();
        Err(CmdError::Check(format!(
            "failing suites: {}",
            failing.join(", ")
        )))
    }
}

fn legendre_suites(spec: &ToricSpec, args: &CheckArgs) -> Vec<Suite> {
    let n = spec.torus_rank();
    let flat = FlatPotential::new(n);
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ 0x11);
    let mut duality = 0.0f64;
    let mut round_trip = 0.0f64;
    let mut iterations = 0usize;
    for _ in 0..args.samples {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let eta = legendre_map(&flat, &x).expect("full domain");
        let solve = match inverse_legendre(&flat, &eta, &vec![0.0; n]) {
            Ok(s) => s,
            Err(_) => {
                duality = f64::INFINITY;
                round_trip = f64::INFINITY;
                break;
            }
        };
        iterations = iterations.max(solve.iterations);
        let rt = solve
            .x
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        round_trip = round_trip.max(rt);
        let fx = flat.value(&x);
        let fdual: f64 =
            eta.iter().zip(&solve.x).map(|(e, xs)| e * xs).sum::<f64>() - flat.value(&solve.x);
        let dot: f64 = eta.iter().zip(&x).map(|(e, xi)| e * xi).sum();
        duality = duality.max((fx + fdual - dot).abs());
    }
    vec![
        Suite::residual("legendre_duality", duality, 1e-8),
        Suite::residual("legendre_round_trip", round_trip, 1e-8),
        Suite::residual("newton_iterations", iterations as f64, 30.0),
    ]
}

fn h_flat_suite(spec: &ToricSpec, points: &[Vec<f64>]) -> Suite {
    let dual = flat_dual(spec);
    let mut worst = 0.0f64;
    for eta in points {
        let direct = match flat_h(spec, eta) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let via_transform = h_transform(&dual, eta).unwrap_or(f64::INFINITY);
        let via_separable = separable_h(&dual, eta).unwrap_or(f64::INFINITY);
        worst = worst.max((direct - via_transform).abs());
        worst = worst.max((direct - via_separable).abs());
    }
    Suite::residual("h_consistency_flat", worst, 1e-10)
}

fn projective_suites(loaded: &LoadedSpec, points: &[Vec<f64>]) -> Vec<Suite> {
    let spec = &loaded.spec;
    let params = match loaded.projective_r {
        Some(r) => match ProjectiveParams::for_spec(spec, r) {
            Ok(p) => p,
            Err(_) => {
                return vec![Suite::residual(
                    "h_consistency_projective",
                    f64::INFINITY,
                    1e-10,
                )]
            }
        },
        None => {
            return vec![
                Suite::skipped("h_consistency_projective"),
                Suite::skipped("positivity_projective"),
            ]
        }
    };
    let dual = projective_dual(spec, &params);
    let mut worst = 0.0f64;
    let mut compared = 0usize;
    let mut min_eig = f64::INFINITY;
    let mut evaluated = false;
    for eta in points {
        let direct = match projective_h(spec, &params, eta) {
            Ok(v) => v,
            Err(_) => continue,
        };
        // On slice images (sum l identically R) the separable dual sits
        // on its domain boundary; the route comparison is then vacuous
        // and the fs_agreement suite carries the check instead.
        if dual.in_domain(eta) {
            let via = h_transform(&dual, eta).unwrap_or(f64::INFINITY);
            worst = worst.max((direct - via).abs());
            compared += 1;
        }
        if let Ok(rep) = metric_hessian_projective(spec, &params, eta) {
            min_eig = min_eig.min(rep.min_eigenvalue);
            evaluated = true;
        }
    }
    let consistency = if compared > 0 {
        Suite::residual("h_consistency_projective", worst, 1e-10)
    } else {
        Suite::skipped("h_consistency_projective")
    };
    let positivity = if evaluated {
        Suite::positivity("positivity_projective", min_eig)
    } else {
        Suite::skipped("positivity_projective")
    };
    vec![consistency, positivity]
}

fn face_suite(spec: &ToricSpec, seed: u64) -> Suite {
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x22);
    for face in enumerate_faces(spec) {
        if face.is_interior() {
            continue;
        }
        let dual = match face_dual(spec, &face) {
            Ok(d) => d,
            Err(_) => continue,
        };
        for _ in 0..20 {
            let w = sample_chart_point(&face, &mut rng, &dual);
            let direct = match face_h(spec, &face, &w) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let via = h_transform(&dual, &w).unwrap_or(f64::INFINITY);
            worst = worst.max((direct - via).abs());
        }
    }
    Suite::residual("h_consistency_faces", worst, 1e-10)
}

/// Draw a chart point in the open face by shrinking a box draw toward
/// the chart origin (which is strictly inside).
fn sample_chart_point(
    face: &Face,
    rng: &mut ChaCha8Rng,
    dual: &toric_kahler::SeparableDual,
) -> Vec<f64> {
    let d = face.dim();
    let mut w: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    for _ in 0..80 {
        if dual.in_domain(&w) {
            return w;
        }
        for x in w.iter_mut() {
            *x *= 0.5;
        }
    }
    vec![0.0; d]
}

fn level_set_suites(spec: &ToricSpec, args: &CheckArgs, bbox: Option<&[(f64, f64)]>) -> Vec<Suite> {
    let data = match build_quotient(spec) {
        Ok(d) => d,
        Err(_) => {
            return vec![
                Suite::residual("level_set", f64::INFINITY, 1e-12),
                Suite::residual("converse_level_set", f64::INFINITY, 1e-9),
            ]
        }
    };
    match verify_level_set(spec, &data, args.samples, args.seed ^ 0x33, bbox) {
        Ok(check) => vec![
            Suite::residual("level_set", check.max_residual, 1e-12),
            Suite::residual("converse_level_set", check.converse_max_residual, 1e-9),
        ],
        Err(_) => vec![
            Suite::residual("level_set", f64::INFINITY, 1e-12),
            Suite::residual("converse_level_set", f64::INFINITY, 1e-9),
        ],
    }
}

fn positivity_flat(spec: &ToricSpec, points: &[Vec<f64>]) -> Suite {
    let mut min_eig = f64::INFINITY;
    for eta in points {
        if let Ok(rep) = metric_hessian_flat(spec, eta) {
            min_eig = min_eig.min(rep.min_eigenvalue);
        }
    }
    Suite::positivity("positivity_flat", min_eig)
}

fn fd_suites(loaded: &LoadedSpec, points: &[Vec<f64>]) -> Vec<Suite> {
    let spec = &loaded.spec;
    let mut suites = vec![fd_one("fd_agreement_flat", &flat_dual(spec), spec, points)];
    match loaded.projective_r {
        Some(r) => match ProjectiveParams::for_spec(spec, r) {
            Ok(params) => suites.push(fd_one(
                "fd_agreement_projective",
                &projective_dual(spec, &params),
                spec,
                points,
            )),
            Err(_) => suites.push(Suite::residual(
                "fd_agreement_projective",
                f64::INFINITY,
                1e-6,
            )),
        },
        None => suites.push(Suite::skipped("fd_agreement_projective")),
    }
    suites
}

fn fd_one(
    name: &'static str,
    dual: &dyn ConvexPotential,
    spec: &ToricSpec,
    points: &[Vec<f64>],
) -> Suite {
    let step = toric_kahler::tol::FD_STEP;
    let margin = 0.05;
    let mut worst = 0.0f64;
    let mut used = 0usize;
    for eta in points {
        let slacks = match iota_lambda(spec, eta) {
            Ok(s) => s,
            Err(_) => continue,
        };
        if slacks.iter().any(|&l| l < margin) || !dual.in_domain(eta) {
            continue;
        }
        let g = dual.gradient(eta);
        let gfd = fd_gradient(dual, eta, step);
        let gscale = 1.0 + g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in g.iter().zip(&gfd) {
            worst = worst.max((a - b).abs() / gscale);
        }
        let h = dual.hessian(eta);
        let hfd = fd_hessian(dual, eta, step);
        let hscale = 1.0 + h.amax();
        for i in 0..h.nrows() {
            for j in 0..h.ncols() {
                worst = worst.max((h[(i, j)] - hfd[(i, j)]).abs() / hscale);
            }
        }
        used += 1;
        if used >= 100 {
            break;
        }
    }
    if used == 0 {
        return Suite::skipped(name);
    }
    Suite::residual(name, worst, 1e-6)
}

/// Reduction-route agreement: when Σu_j = 0 and R = −Σλ_j, the
/// projective reduction reproduces the flat one pointwise (the
/// Fubini–Study cases). Skipped otherwise.
fn fs_suites(loaded: &LoadedSpec, points: &[Vec<f64>]) -> Vec<Suite> {
    let spec = &loaded.spec;
    let r = match loaded.projective_r {
        Some(r) => r,
        None => {
            return vec![
                Suite::skipped("fs_agreement"),
                Suite::skipped("fs_hessian_agreement"),
            ]
        }
    };
    let slice_case =
        spec.normal_sum().iter().all(|&x| x == 0) && (r + spec.offset_sum()).abs() <= 1e-12;
    if !slice_case {
        return vec![
            Suite::skipped("fs_agreement"),
            Suite::skipped("fs_hessian_agreement"),
        ];
    }
    let params = match ProjectiveParams::for_spec(spec, r) {
        Ok(p) => p,
        Err(_) => {
            return vec![
                Suite::residual("fs_agreement", f64::INFINITY, 1e-10),
                Suite::residual("fs_hessian_agreement", f64::INFINITY, 1e-12),
            ]
        }
    };
    let mut worst_h = 0.0f64;
    let mut worst_hess = 0.0f64;
    for eta in points {
        let a = match projective_h(spec, &params, eta) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let b = match flat_h(spec, eta) {
            Ok(v) => v,
            Err(_) => continue,
        };
        worst_h = worst_h.max((a - b).abs());
        if let (Ok(pa), Ok(pb)) = (
            metric_hessian_projective(spec, &params, eta),
            metric_hessian_flat(spec, eta),
        ) {
            for i in 0..pa.hessian.nrows() {
                for j in 0..pa.hessian.ncols() {
                    worst_hess = worst_hess.max((pa.hessian[(i, j)] - pb.hessian[(i, j)]).abs());
                }
            }
        }
    }
    vec![
        Suite::residual("fs_agreement", worst_h, 1e-10),
        Suite::residual("fs_hessian_agreement", worst_hess, 1e-12),
    ]
}
