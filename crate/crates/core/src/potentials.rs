//! The explicit potentials on the moment side: the flat-quotient dual
//! potential Σ ℓ_j log ℓ_j and its h-transform Σ (λ_j log ℓ_j + ⟨η,u_j⟩),
//! the projective-reduction variant with the simplex deficit term, the
//! face-stratum potentials in chart coordinates, and the metric Hessians
//! with eigenvalue reports.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::convex::{ScalarConvex, SeparableDual, SeparableTerm};
use crate::lp::{self, Constraint, LpSolution, Relation};
use crate::polytope::{dot_iu, face_restriction_data, Face, FaceChart, PolytopeError, ToricSpec};
use crate::tol::LOG_GUARD;

#[derive(Debug, Error, PartialEq)]
pub enum PotentialError {
    #[error("point violates facet {facet} (slack {slack:.3e})")]
    OutsidePolytope { facet: usize, slack: f64 },
    #[error("facet {facet} is within the log-singularity guard; point must be strictly interior")]
    LogSingularity { facet: usize },
    #[error("containment violated: Σℓ exceeds R by {excess:.3e}")]
    ContainmentViolated { excess: f64 },
    #[error("Σℓ is within the log-singularity guard of R")]
    DeficitSingularity,
    #[error("polytope is unbounded; the projective reduction needs a polytope")]
    UnboundedPolytope,
    #[error(
        "scale must be positive and at least the minimal containment radius (min_r = {min_r})"
    )]
    ScaleTooSmall { min_r: f64 },
    #[error("chart point leaves the face: restricted facet {facet} has slack {slack:.3e}")]
    OutsideFace { facet: usize, slack: f64 },
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
}

/// x log x extended by continuity to 0 at x = 0.
fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// φ_P^*(η) = Σ_j ℓ_j log ℓ_j with ℓ = ι_λ(η); the boundary is allowed
/// through the x log x extension.
pub fn dual_potential_flat(spec: &ToricSpec, eta: &[f64]) -> Result<f64, PotentialError> {
    let slacks = crate::polytope::iota_lambda(spec, eta)?;
    let mut acc = 0.0;
    for (j, &l) in slacks.iter().enumerate() {
        if l < -LOG_GUARD {
            return Err(PotentialError::OutsidePolytope { facet: j, slack: l });
        }
        acc += xlogx(l.max(0.0));
    }
    Ok(acc)
}

/// Slacks of a strictly interior point; any facet within the log guard
/// is an error.
fn interior_slacks(spec: &ToricSpec, eta: &[f64]) -> Result<Vec<f64>, PotentialError> {
    let slacks = crate::polytope::iota_lambda(spec, eta)?;
    for (j, &l) in slacks.iter().enumerate() {
        if l < -LOG_GUARD {
            return Err(PotentialError::OutsidePolytope { facet: j, slack: l });
        }
        if l <= LOG_GUARD {
            return Err(PotentialError::LogSingularity { facet: j });
        }
    }
    Ok(slacks)
}

/// h(η) = Σ_j (λ_j log ℓ_j + ⟨η, u_j⟩): the potential of the reduced
/// Kähler form on the flat quotient, pulled to the moment polytope.
/// Identical to the h-transform of [`dual_potential_flat`].
pub fn flat_h(spec: &ToricSpec, eta: &[f64]) -> Result<f64, PotentialError> {
    let slacks = interior_slacks(spec, eta)?;
    let mut acc = 0.0;
    for (j, &l) in slacks.iter().enumerate() {
        acc += spec.offset(j) * l.ln() + dot_iu(spec.normal(j), eta);
    }
    Ok(acc)
}

/// Per-point metric bundle in momentum coordinates: the dual potential,
/// its h-transform, gradient, Hessian and spectral summary.
#[derive(Clone, Debug)]
pub struct MetricReport {
    pub eta: Vec<f64>,
    pub dual_value: f64,
    pub h_value: f64,
    pub gradient: Vec<f64>,
    pub hessian: DMatrix<f64>,
    pub min_eigenvalue: f64,
    pub condition_number: f64,
}

fn spectral_report(
    eta: Vec<f64>,
    dual_value: f64,
    h_value: f64,
    gradient: Vec<f64>,
    hessian: DMatrix<f64>,
) -> MetricReport {
    let eigs = hessian.clone().symmetric_eigen().eigenvalues;
    let min_eigenvalue = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_eigenvalue = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    MetricReport {
        eta,
        dual_value,
        h_value,
        gradient,
        hessian,
        min_eigenvalue,
        condition_number: max_eigenvalue / min_eigenvalue,
    }
}

/// Analytic metric data of the flat reduction at a strictly interior
/// point: Hessian Σ_j u_j u_jᵀ / ℓ_j, gradient Σ_j (log ℓ_j + 1) u_j.
pub fn metric_hessian_flat(spec: &ToricSpec, eta: &[f64]) -> Result<MetricReport, PotentialError> {
    let slacks = interior_slacks(spec, eta)?;
    let n = spec.torus_rank();
    let mut hessian = DMatrix::zeros(n, n);
    let mut gradient = vec![0.0; n];
    for (j, &l) in slacks.iter().enumerate() {
        let u = spec.normal(j);
        let w = l.ln() + 1.0;
        for a in 0..n {
            gradient[a] += w * u[a] as f64;
            for b in 0..n {
                hessian[(a, b)] += (u[a] * u[b]) as f64 / l;
            }
        }
    }
    Ok(spectral_report(
        eta.to_vec(),
        dual_potential_flat(spec, eta)?,
        flat_h(spec, eta)?,
        gradient,
        hessian,
    ))
}

/// Smallest R with ι_λ(P) ⊆ Δ_R, i.e. the maximum of Σ_j ℓ_j over P.
pub fn min_r(spec: &ToricSpec) -> Result<f64, PotentialError> {
    let cons: Vec<Constraint> = (0..spec.facet_count())
        .map(|j| {
            Constraint::new(
                spec.normal(j).iter().map(|&x| x as f64).collect(),
                Relation::Ge,
                spec.offset(j),
            )
        })
        .collect();
    let obj: Vec<f64> = spec.normal_sum().iter().map(|&x| x as f64).collect();
    match lp::maximize(&obj, &cons) {
        LpSolution::Optimal { objective, .. } => Ok(objective - spec.offset_sum()),
        LpSolution::Unbounded => Err(PotentialError::UnboundedPolytope),
        LpSolution::Infeasible => Err(PotentialError::UnboundedPolytope),
    }
}

/// Scale R of the simplex Δ_R hosting the projective reduction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectiveParams {
    r: f64,
}

impl ProjectiveParams {
    /// An unchecked scale, for evaluating the projective formulas on
    /// their pointwise domain (Σℓ ≤ R) without a containment argument.
    pub fn new(r: f64) -> Result<Self, PotentialError> {
        if !(r.is_finite() && r > 0.0) {
            return Err(PotentialError::ScaleTooSmall { min_r: 0.0 });
        }
        Ok(ProjectiveParams { r })
    }

    /// A scale certified against the spec: P bounded and R ≥ min_r(P),
    /// so ι_λ(P) ⊆ Δ_R (equality allowed).
    pub fn for_spec(spec: &ToricSpec, r: f64) -> Result<Self, PotentialError> {
        let need = min_r(spec)?;
        if !(r.is_finite()) || r < need - LOG_GUARD {
            return Err(PotentialError::ScaleTooSmall { min_r: need });
        }
        Ok(ProjectiveParams { r })
    }

    pub fn scale(&self) -> f64 {
        self.r
    }
}

/// Dual potential of the reduction of (CP^N, R·ω_FS):
/// Σ ℓ_j log ℓ_j + (R − Σℓ) log(R − Σℓ), boundary allowed.
pub fn dual_potential_projective(
    spec: &ToricSpec,
    params: &ProjectiveParams,
    eta: &[f64],
) -> Result<f64, PotentialError> {
    let base = dual_potential_flat(spec, eta)?;
    let slacks = crate::polytope::iota_lambda(spec, eta)?;
    let deficit = params.r - slacks.iter().sum::<f64>();
    if deficit < -LOG_GUARD {
        return Err(PotentialError::ContainmentViolated { excess: -deficit });
    }
    Ok(base + xlogx(deficit.max(0.0)))
}

/// h of the projective reduction:
/// Σ λ_j log ℓ_j − (R + Σλ) log(R − Σℓ).
///
/// When R + Σλ vanishes the deficit term is taken as 0 (the continuous
/// extension), which covers specs whose image fills a slice Σℓ ≡ R.
pub fn projective_h(
    spec: &ToricSpec,
    params: &ProjectiveParams,
    eta: &[f64],
) -> Result<f64, PotentialError> {
    let slacks = interior_slacks(spec, eta)?;
    let coeff = params.r + spec.offset_sum();
    let deficit = params.r - slacks.iter().sum::<f64>();
    if deficit < -LOG_GUARD {
        return Err(PotentialError::ContainmentViolated { excess: -deficit });
    }
    let mut acc = 0.0;
    for (j, &l) in slacks.iter().enumerate() {
        acc += spec.offset(j) * l.ln();
    }
    if coeff.abs() > LOG_GUARD {
        if deficit <= LOG_GUARD {
            return Err(PotentialError::DeficitSingularity);
        }
        acc -= coeff * deficit.ln();
    }
    Ok(acc)
}

/// Analytic metric data of the projective reduction:
/// Hessian Σ u_j u_jᵀ/ℓ_j + s sᵀ/(R − Σℓ) with s = Σ u_j.
pub fn metric_hessian_projective(
    spec: &ToricSpec,
    params: &ProjectiveParams,
    eta: &[f64],
) -> Result<MetricReport, PotentialError> {
    let slacks = interior_slacks(spec, eta)?;
    let n = spec.torus_rank();
    let s = spec.normal_sum();
    let coeff = params.r + spec.offset_sum();
    let deficit = params.r - slacks.iter().sum::<f64>();
    let degenerate_slice = coeff.abs() <= LOG_GUARD && s.iter().all(|&x| x == 0);
    if deficit <= LOG_GUARD && !degenerate_slice {
        if deficit < -LOG_GUARD {
            return Err(PotentialError::ContainmentViolated { excess: -deficit });
        }
        return Err(PotentialError::DeficitSingularity);
    }
    let mut hessian = DMatrix::zeros(n, n);
    let mut gradient = vec![0.0; n];
    for (j, &l) in slacks.iter().enumerate() {
        let u = spec.normal(j);
        let w = l.ln() + 1.0;
        for a in 0..n {
            gradient[a] += w * u[a] as f64;
            for b in 0..n {
                hessian[(a, b)] += (u[a] * u[b]) as f64 / l;
            }
        }
    }
    if !degenerate_slice {
        let w = deficit.ln() + 1.0;
        for a in 0..n {
            gradient[a] -= w * s[a] as f64;
            for b in 0..n {
                hessian[(a, b)] += (s[a] * s[b]) as f64 / deficit;
            }
        }
    }
    Ok(spectral_report(
        eta.to_vec(),
        dual_potential_projective(spec, params, eta)?,
        projective_h(spec, params, eta)?,
        gradient,
        hessian,
    ))
}

/// The flat dual potential as a separable convex object (strict-interior
/// domain), for h-transform cross-checks and derivative audits.
pub fn flat_dual(spec: &ToricSpec) -> SeparableDual {
    let terms = (0..spec.facet_count())
        .map(|j| SeparableTerm::new(ScalarConvex::XLogX, spec.normal(j).to_vec(), spec.offset(j)))
        .collect();
    SeparableDual::new(spec.torus_rank(), terms)
}

/// The projective dual potential as a separable convex object: the flat
/// terms plus the deficit term with functional −Σu_j and shift −(R+Σλ).
pub fn projective_dual(spec: &ToricSpec, params: &ProjectiveParams) -> SeparableDual {
    let mut terms: Vec<SeparableTerm> = (0..spec.facet_count())
        .map(|j| SeparableTerm::new(ScalarConvex::XLogX, spec.normal(j).to_vec(), spec.offset(j)))
        .collect();
    let neg_sum: Vec<i64> = spec.normal_sum().iter().map(|&x| -x).collect();
    terms.push(SeparableTerm::new(
        ScalarConvex::XLogX,
        neg_sum,
        -(params.r + spec.offset_sum()),
    ));
    SeparableDual::new(spec.torus_rank(), terms)
}

/// The face dual potential as a separable convex object on the chart
/// coordinates of g_I^*.
pub fn face_dual(spec: &ToricSpec, face: &Face) -> Result<SeparableDual, PotentialError> {
    let chart = face_restriction_data(spec, face)?;
    Ok(face_dual_from_chart(&chart))
}

fn face_dual_from_chart(chart: &FaceChart) -> SeparableDual {
    let terms = chart
        .facets
        .iter()
        .map(|rf| SeparableTerm::new(ScalarConvex::XLogX, rf.linear.clone(), -rf.constant))
        .collect();
    SeparableDual::new(chart.dim(), terms)
}

/// φ_F^*(w) = Σ_{j∉I} (v_j − λ_j) log(v_j − λ_j) in chart coordinates
/// w on the open face, with the x log x extension on the relative
/// boundary.
pub fn face_dual_potential(
    spec: &ToricSpec,
    face: &Face,
    w: &[f64],
) -> Result<f64, PotentialError> {
    let chart = face_restriction_data(spec, face)?;
    chart.embed(w)?;
    let mut acc = 0.0;
    for (r, rf) in chart.facets.iter().enumerate() {
        let slack = chart.slack(r, w);
        if slack < -LOG_GUARD {
            return Err(PotentialError::OutsideFace {
                facet: rf.facet,
                slack,
            });
        }
        acc += xlogx(slack.max(0.0));
    }
    Ok(acc)
}

/// h of the face stratum in chart coordinates:
/// Σ_{j∉I} ( (λ_j − u_j(η₀)) log(v_j − λ_j) + ⟨u_j∘B, w⟩ ).
/// Equals the h-transform of [`face_dual_potential`] on the open face;
/// with the witness at the origin it reduces to the linear-restriction
/// form Σ λ_j log(v_j − λ_j) + v_j.
pub fn face_h(spec: &ToricSpec, face: &Face, w: &[f64]) -> Result<f64, PotentialError> {
    let chart = face_restriction_data(spec, face)?;
    chart.embed(w)?;
    let mut acc = 0.0;
    for (r, rf) in chart.facets.iter().enumerate() {
        let slack = chart.slack(r, w);
        if slack < -LOG_GUARD {
            return Err(PotentialError::OutsideFace {
                facet: rf.facet,
                slack,
            });
        }
        if slack <= LOG_GUARD {
            return Err(PotentialError::LogSingularity { facet: rf.facet });
        }
        acc += -rf.constant * slack.ln() + dot_iu(&rf.linear, w);
    }
    Ok(acc)
}

/// Metric data of a face stratum at chart coordinates w (Hessian of the
/// face dual potential).
pub fn face_metric(
    spec: &ToricSpec,
    face: &Face,
    w: &[f64],
) -> Result<MetricReport, PotentialError> {
    let chart = face_restriction_data(spec, face)?;
    chart.embed(w)?;
    let d = chart.dim();
    let mut hessian = DMatrix::zeros(d, d);
    let mut gradient = vec![0.0; d];
    for (r, rf) in chart.facets.iter().enumerate() {
        let slack = chart.slack(r, w);
        if slack < -LOG_GUARD {
            return Err(PotentialError::OutsideFace {
                facet: rf.facet,
                slack,
            });
        }
        if slack <= LOG_GUARD {
            return Err(PotentialError::LogSingularity { facet: rf.facet });
        }
        let wgt = slack.ln() + 1.0;
        for a in 0..d {
            gradient[a] += wgt * rf.linear[a] as f64;
            for b in 0..d {
                hessian[(a, b)] += (rf.linear[a] * rf.linear[b]) as f64 / slack;
            }
        }
    }
    let dual_value = face_dual_potential(spec, face, w)?;
    let h_value = face_h(spec, face, w)?;
    Ok(spectral_report(
        w.to_vec(),
        dual_value,
        h_value,
        gradient,
        hessian,
    ))
}
