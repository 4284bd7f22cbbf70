//! The polyhedral set P = {η : ⟨η,u_j⟩ ≥ λ_j}: validation with LP
//! certificates, the affine slack embedding, open-face enumeration with
//! certified relative-interior witnesses, and face restriction charts.

use std::collections::{BTreeSet, VecDeque};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::lattice::{self, IntMatrix};
use crate::lp::{self, Constraint, LpSolution, Relation};
use crate::tol::ACTIVITY_TOL;

#[derive(Debug, Error, PartialEq)]
pub enum PolytopeError {
    #[error("point has dimension {actual}, spec expects {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("spec is structurally invalid: {0}")]
    InvalidSpec(String),
    #[error("the interior carries no facet restriction data")]
    InteriorHasNoRestriction,
    #[error("witness does not lie on the open face with active set {0:?}")]
    WitnessNotOnFace(Vec<usize>),
    #[error("polytope is unbounded; supply a bounding box for sampling")]
    NeedsBoundingBox,
    #[error("interior sampling failed (is the spec validated?)")]
    SamplingFailed,
    #[error("face chart has dimension {expected}, got {actual} coordinates")]
    ChartDimensionMismatch { expected: usize, actual: usize },
}

/// The defining data (n, N, u_j, λ_j) of the polyhedral set P.
///
/// Construction checks only structural consistency; the geometric
/// invariants (primitive normals, spanning, nonempty interior, minimal
/// inequality system) are certified by [`validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct ToricSpec {
    n: usize,
    normals: Vec<Vec<i64>>,
    offsets: Vec<f64>,
}

impl ToricSpec {
    pub fn new(normals: Vec<Vec<i64>>, offsets: Vec<f64>) -> Result<Self, PolytopeError> {
        if normals.is_empty() {
            return Err(PolytopeError::InvalidSpec("no facets".into()));
        }
        let n = normals[0].len();
        if n == 0 {
            return Err(PolytopeError::InvalidSpec("zero-dimensional torus".into()));
        }
        if let Some(bad) = normals.iter().position(|u| u.len() != n) {
            return Err(PolytopeError::InvalidSpec(format!(
                "normal {bad} has length {}, expected {n}",
                normals[bad].len()
            )));
        }
        if offsets.len() != normals.len() {
            return Err(PolytopeError::InvalidSpec(format!(
                "{} normals but {} offsets",
                normals.len(),
                offsets.len()
            )));
        }
        if let Some(bad) = offsets.iter().position(|x| !x.is_finite()) {
            return Err(PolytopeError::InvalidSpec(format!(
                "offset {bad} is not finite"
            )));
        }
        Ok(ToricSpec {
            n,
            normals,
            offsets,
        })
    }

    /// Torus rank n (the ambient dimension of the moment coordinates).
    pub fn torus_rank(&self) -> usize {
        self.n
    }

    /// Number of facets N.
    pub fn facet_count(&self) -> usize {
        self.normals.len()
    }

    pub fn normal(&self, j: usize) -> &[i64] {
        &self.normals[j]
    }

    pub fn normals(&self) -> &[Vec<i64>] {
        &self.normals
    }

    pub fn offset(&self, j: usize) -> f64 {
        self.offsets[j]
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// ⟨η, u_j⟩ − λ_j.
    pub fn slack(&self, j: usize, eta: &[f64]) -> f64 {
        dot_iu(&self.normals[j], eta) - self.offsets[j]
    }

    /// The lattice map A as an n×N integer matrix (columns u_j).
    pub fn normal_matrix(&self) -> IntMatrix {
        IntMatrix::from_cols(&self.normals)
    }

    /// Σ_j u_j, the coefficient of the projective deficit term.
    pub fn normal_sum(&self) -> Vec<i64> {
        let mut s = vec![0i64; self.n];
        for u in &self.normals {
            for (k, &x) in u.iter().enumerate() {
                s[k] += x;
            }
        }
        s
    }

    /// Σ_j λ_j.
    pub fn offset_sum(&self) -> f64 {
        self.offsets.iter().sum()
    }

    fn check_dim(&self, eta: &[f64]) -> Result<(), PolytopeError> {
        if eta.len() != self.n {
            return Err(PolytopeError::DimensionMismatch {
                expected: self.n,
                actual: eta.len(),
            });
        }
        Ok(())
    }
}

pub(crate) fn dot_iu(u: &[i64], x: &[f64]) -> f64 {
    u.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum()
}

/// The affine slack embedding ι_λ(η) = (⟨η,u_j⟩ − λ_j)_j of the moment
/// coordinates into the facet coordinates.
pub fn iota_lambda(spec: &ToricSpec, eta: &[f64]) -> Result<Vec<f64>, PolytopeError> {
    spec.check_dim(eta)?;
    Ok((0..spec.facet_count())
        .map(|j| spec.slack(j, eta))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PointClass {
    Interior,
    /// On the boundary; carries the set of active facet indices.
    Boundary(Vec<usize>),
    Outside,
}

/// Classify η against P with activity tolerance `tol`.
pub fn classify_point(
    spec: &ToricSpec,
    eta: &[f64],
    tol: f64,
) -> Result<PointClass, PolytopeError> {
    let slacks = iota_lambda(spec, eta)?;
    if slacks.iter().any(|&l| l < -tol) {
        return Ok(PointClass::Outside);
    }
    let active: Vec<usize> = slacks
        .iter()
        .enumerate()
        .filter(|(_, &l)| l.abs() <= tol)
        .map(|(j, _)| j)
        .collect();
    if active.is_empty() {
        Ok(PointClass::Interior)
    } else {
        Ok(PointClass::Boundary(active))
    }
}

/// Outcome of the LP certification of a spec. Failures are entries, not
/// errors; `is_valid` summarizes the checks a usable spec must pass
/// (boundedness is reported but not required).
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub primitive_ok: bool,
    /// Facets whose normal is zero or has a nontrivial content gcd.
    pub non_primitive: Vec<usize>,
    pub span_ok: bool,
    pub interior_ok: bool,
    pub interior_witness: Option<Vec<f64>>,
    /// Optimal value of the max-min-slack program (capped at 1).
    pub interior_slack: f64,
    pub minimal_ok: bool,
    pub redundant: Vec<usize>,
    /// Per-facet certificate: minimum of that facet's slack over the
    /// other constraints; `None` when unbounded below.
    pub facet_min_slack: Vec<Option<f64>>,
    pub bounded: bool,
    /// A nonzero recession direction when unbounded.
    pub recession_ray: Option<Vec<f64>>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.primitive_ok && self.span_ok && self.interior_ok && self.minimal_ok
    }
}

/// Certify the spec's geometric invariants by linear programming.
pub fn validate(spec: &ToricSpec) -> ValidationReport {
    let n = spec.torus_rank();
    let nf = spec.facet_count();

    let non_primitive: Vec<usize> = (0..nf)
        .filter(|&j| !matches!(lattice::is_primitive(spec.normal(j)), Ok(true)))
        .collect();
    let primitive_ok = non_primitive.is_empty();

    let span_ok = spec.normal_matrix().rank() == n;

    // Interior: maximize the common slack t (capped at 1 so the LP is
    // bounded even for unbounded P).
    let (interior_slack, interior_witness) = match interior_lp(spec) {
        LpSolution::Optimal { objective, point } => (objective, Some(point[..n].to_vec())),
        _ => (f64::NEG_INFINITY, None),
    };
    let interior_ok = interior_slack > ACTIVITY_TOL;
    let interior_witness = if interior_ok { interior_witness } else { None };

    // Minimality: facet j is redundant iff its slack stays nonnegative
    // over the polyhedron cut out by the other facets.
    let mut redundant = Vec::new();
    let mut facet_min_slack = Vec::with_capacity(nf);
    for j in 0..nf {
        let others: Vec<Constraint> = (0..nf)
            .filter(|&i| i != j)
            .map(|i| facet_row(spec, i))
            .collect();
        let obj: Vec<f64> = spec.normal(j).iter().map(|&x| x as f64).collect();
        match lp::minimize(&obj, &others) {
            LpSolution::Optimal { objective, .. } => {
                let min_slack = objective - spec.offset(j);
                facet_min_slack.push(Some(min_slack));
                if min_slack >= -ACTIVITY_TOL {
                    redundant.push(j);
                }
            }
            LpSolution::Unbounded => facet_min_slack.push(None),
            LpSolution::Infeasible => facet_min_slack.push(None),
        }
    }
    let minimal_ok = redundant.is_empty();

    // Boundedness: P is bounded iff the recession cone is trivial. When
    // the normals span, a nonzero recession direction can be normalized
    // to Σ_j ⟨d,u_j⟩ = 1; without spanning any annihilator direction is
    // a recession ray.
    let (bounded, recession_ray) = if !span_ok {
        let ann = lattice::kernel_basis(&spec.normal_matrix().transpose());
        let ray = ann
            .col_i64(0)
            .map(|c| c.iter().map(|&x| x as f64).collect());
        (false, ray)
    } else {
        let mut cons: Vec<Constraint> = (0..nf)
            .map(|j| {
                Constraint::new(
                    spec.normal(j).iter().map(|&x| x as f64).collect(),
                    Relation::Ge,
                    0.0,
                )
            })
            .collect();
        let sum: Vec<f64> = spec.normal_sum().iter().map(|&x| x as f64).collect();
        cons.push(Constraint::new(sum, Relation::Eq, 1.0));
        match lp::maximize(&vec![0.0; n], &cons) {
            LpSolution::Optimal { point, .. } => (false, Some(point)),
            _ => (true, None),
        }
    };

    ValidationReport {
        primitive_ok,
        non_primitive,
        span_ok,
        interior_ok,
        interior_witness,
        interior_slack,
        minimal_ok,
        redundant,
        facet_min_slack,
        bounded,
        recession_ray,
    }
}

fn facet_row(spec: &ToricSpec, j: usize) -> Constraint {
    Constraint::new(
        spec.normal(j).iter().map(|&x| x as f64).collect(),
        Relation::Ge,
        spec.offset(j),
    )
}

/// max t over (η, t) with every slack ≥ t and t ≤ 1.
fn interior_lp(spec: &ToricSpec) -> LpSolution {
    face_witness_lp(spec, &BTreeSet::new())
}

/// max t with slack_i = 0 for i in `active`, slack_j ≥ t otherwise,
/// t ≤ 1. Variables are (η, t).
fn face_witness_lp(spec: &ToricSpec, active: &BTreeSet<usize>) -> LpSolution {
    let n = spec.torus_rank();
    let mut cons = Vec::with_capacity(spec.facet_count() + 1);
    for j in 0..spec.facet_count() {
        let mut row: Vec<f64> = spec.normal(j).iter().map(|&x| x as f64).collect();
        if active.contains(&j) {
            row.push(0.0);
            cons.push(Constraint::new(row, Relation::Eq, spec.offset(j)));
        } else {
            row.push(-1.0);
            cons.push(Constraint::new(row, Relation::Ge, spec.offset(j)));
        }
    }
    let mut cap = vec![0.0; n + 1];
    cap[n] = 1.0;
    cons.push(Constraint::new(cap.clone(), Relation::Le, 1.0));
    lp::maximize(&cap, &cons)
}

/// An open face F̊ of P: its canonical active set, dimension, an
/// LP-certified relative-interior witness η₀, and an exact integer basis
/// of the annihilator g_I^* = {η : ⟨η,u_i⟩ = 0 for i ∈ I}.
#[derive(Clone, Debug)]
pub struct Face {
    active_set: Vec<usize>,
    dim: usize,
    witness: Vec<f64>,
    lin_basis: IntMatrix,
}

impl Face {
    pub fn active_set(&self) -> &[usize] {
        &self.active_set
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn witness(&self) -> &[f64] {
        &self.witness
    }

    /// Columns span the lattice of directions annihilating every active
    /// normal; n×dim.
    pub fn lin_basis(&self) -> &IntMatrix {
        &self.lin_basis
    }

    pub fn is_interior(&self) -> bool {
        self.active_set.is_empty()
    }

    /// Same face with a caller-chosen relative-interior point (the face
    /// potentials depend on this choice, so it is configurable). The
    /// point must classify onto exactly this face.
    pub fn with_witness(&self, spec: &ToricSpec, eta0: Vec<f64>) -> Result<Face, PolytopeError> {
        let class = classify_point(spec, &eta0, ACTIVITY_TOL)?;
        let ok = match &class {
            PointClass::Interior => self.active_set.is_empty(),
            PointClass::Boundary(active) => *active == self.active_set,
            PointClass::Outside => false,
        };
        if !ok {
            return Err(PolytopeError::WitnessNotOnFace(self.active_set.clone()));
        }
        Ok(Face {
            active_set: self.active_set.clone(),
            dim: self.dim,
            witness: eta0,
            lin_basis: self.lin_basis.clone(),
        })
    }
}

fn annihilator_basis(spec: &ToricSpec, active: &[usize]) -> IntMatrix {
    let rows: Vec<Vec<i64>> = active.iter().map(|&i| spec.normal(i).to_vec()).collect();
    if rows.is_empty() {
        return IntMatrix::identity(spec.torus_rank());
    }
    lattice::kernel_basis(&IntMatrix::from_rows(&rows))
}

fn make_face(spec: &ToricSpec, active: BTreeSet<usize>, witness: Vec<f64>) -> Face {
    let active_set: Vec<usize> = active.into_iter().collect();
    let lin_basis = annihilator_basis(spec, &active_set);
    Face {
        dim: lin_basis.cols(),
        active_set,
        witness,
        lin_basis,
    }
}

/// Enumerate every nonempty open face of P, the interior included.
///
/// Breadth-first over active sets: children of a face add one facet,
/// each candidate is certified or canonicalized by LPs (facets forced
/// to zero on the closed face join the active set). Exponential in the
/// worst case; intended for N ≤ 16.
pub fn enumerate_faces(spec: &ToricSpec) -> Vec<Face> {
    let nf = spec.facet_count();
    let mut found: Vec<Face> = Vec::new();
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut queue: VecDeque<BTreeSet<usize>> = VecDeque::new();

    if let LpSolution::Optimal { objective, point } = interior_lp(spec) {
        if objective > ACTIVITY_TOL {
            let witness = point[..spec.torus_rank()].to_vec();
            seen.insert(Vec::new());
            found.push(make_face(spec, BTreeSet::new(), witness));
            queue.push_back(BTreeSet::new());
        }
    }

    while let Some(parent) = queue.pop_front() {
        for j in 0..nf {
            if parent.contains(&j) {
                continue;
            }
            let mut cand: BTreeSet<usize> = parent.clone();
            cand.insert(j);
            if seen.contains(&cand.iter().copied().collect::<Vec<_>>()) {
                continue;
            }
            let (slack, point) = match face_witness_lp(spec, &cand) {
                LpSolution::Optimal { objective, point } => (objective, point),
                _ => continue, // empty face
            };
            let (canonical, witness) = if slack > ACTIVITY_TOL {
                (cand, point[..spec.torus_rank()].to_vec())
            } else {
                // The closed face is nonempty but some inactive facets
                // vanish on all of it; absorb them and re-certify.
                let mut canon = cand.clone();
                for k in 0..nf {
                    if canon.contains(&k) {
                        continue;
                    }
                    if max_slack_on_face(spec, &cand, k) <= ACTIVITY_TOL {
                        canon.insert(k);
                    }
                }
                if seen.contains(&canon.iter().copied().collect::<Vec<_>>()) {
                    continue;
                }
                match face_witness_lp(spec, &canon) {
                    LpSolution::Optimal { objective, point }
                        if objective > 0.0 || canon.len() == nf =>
                    {
                        let w = point[..spec.torus_rank()].to_vec();
                        (canon, w)
                    }
                    _ => continue,
                }
            };
            let key: Vec<usize> = canonical.iter().copied().collect();
            if seen.contains(&key) {
                continue;
            }
            seen.insert(key);
            found.push(make_face(spec, canonical.clone(), witness));
            queue.push_back(canonical);
        }
    }

    found.sort_by(|a, b| {
        b.dim
            .cmp(&a.dim)
            .then_with(|| a.active_set.cmp(&b.active_set))
    });
    found
}

/// max slack_k over the closed face {slack_i = 0, i ∈ active; slack ≥ 0},
/// capped at 1 so the program is always bounded.
fn max_slack_on_face(spec: &ToricSpec, active: &BTreeSet<usize>, k: usize) -> f64 {
    let mut cons = Vec::with_capacity(spec.facet_count() + 1);
    for j in 0..spec.facet_count() {
        let rel = if active.contains(&j) {
            Relation::Eq
        } else {
            Relation::Ge
        };
        cons.push(Constraint::new(
            spec.normal(j).iter().map(|&x| x as f64).collect(),
            rel,
            spec.offset(j),
        ));
    }
    let obj: Vec<f64> = spec.normal(k).iter().map(|&x| x as f64).collect();
    cons.push(Constraint::new(
        obj.clone(),
        Relation::Le,
        spec.offset(k) + 1.0,
    ));
    match lp::maximize(&obj, &cons) {
        LpSolution::Optimal { objective, .. } => objective - spec.offset(k),
        LpSolution::Unbounded => 1.0,
        LpSolution::Infeasible => 0.0,
    }
}

/// Affine restriction of one inactive facet to a face chart: the slack
/// becomes w ↦ ⟨linear, w⟩ + constant in the chart coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct RestrictedFacet {
    pub facet: usize,
    /// u_j composed with the chart basis; integer because the basis is.
    pub linear: Vec<i64>,
    /// slack of facet j at the chart origin η₀.
    pub constant: f64,
}

/// The affine parametrization γ_I : g_I^* → aff-span F̊, w ↦ η₀ + B·w,
/// together with the restricted slack functions of the inactive facets.
#[derive(Clone, Debug)]
pub struct FaceChart {
    pub active_set: Vec<usize>,
    pub eta0: Vec<f64>,
    /// Chart basis columns (each of length n); dim-many.
    pub basis: Vec<Vec<i64>>,
    pub facets: Vec<RestrictedFacet>,
}

impl FaceChart {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// γ_I(w) = η₀ + Σ_k w_k b_k.
    pub fn embed(&self, w: &[f64]) -> Result<Vec<f64>, PolytopeError> {
        if w.len() != self.basis.len() {
            return Err(PolytopeError::ChartDimensionMismatch {
                expected: self.basis.len(),
                actual: w.len(),
            });
        }
        let mut eta = self.eta0.clone();
        for (k, b) in self.basis.iter().enumerate() {
            for (i, &bi) in b.iter().enumerate() {
                eta[i] += w[k] * bi as f64;
            }
        }
        Ok(eta)
    }

    /// Slack of restricted facet index `r` at chart coordinates w.
    pub fn slack(&self, r: usize, w: &[f64]) -> f64 {
        dot_iu(&self.facets[r].linear, w) + self.facets[r].constant
    }
}

/// Build the chart for a proper face: translation by the witness η₀
/// composed with the exact annihilator basis, plus the affine slack
/// functions v_j − λ_j of every inactive facet.
pub fn face_restriction_data(spec: &ToricSpec, face: &Face) -> Result<FaceChart, PolytopeError> {
    if face.is_interior() {
        return Err(PolytopeError::InteriorHasNoRestriction);
    }
    let basis: Vec<Vec<i64>> = (0..face.lin_basis.cols())
        .map(|k| {
            face.lin_basis
                .col_i64(k)
                .expect("desk-scale basis fits i64")
        })
        .collect();
    let facets = (0..spec.facet_count())
        .filter(|j| !face.active_set.contains(j))
        .map(|j| {
            let linear: Vec<i64> = basis
                .iter()
                .map(|b| {
                    spec.normal(j)
                        .iter()
                        .zip(b)
                        .map(|(&u, &bi)| u * bi)
                        .sum::<i64>()
                })
                .collect();
            RestrictedFacet {
                facet: j,
                linear,
                constant: spec.slack(j, &face.witness),
            }
        })
        .collect();
    Ok(FaceChart {
        active_set: face.active_set.clone(),
        eta0: face.witness.clone(),
        basis,
        facets,
    })
}

/// Coordinate-wise LP bounding box of P; `None` when unbounded.
pub fn bounding_box(spec: &ToricSpec) -> Option<Vec<(f64, f64)>> {
    let n = spec.torus_rank();
    let cons: Vec<Constraint> = (0..spec.facet_count())
        .map(|j| facet_row(spec, j))
        .collect();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut obj = vec![0.0; n];
        obj[k] = 1.0;
        let hi = match lp::maximize(&obj, &cons) {
            LpSolution::Optimal { objective, .. } => objective,
            _ => return None,
        };
        let lo = match lp::minimize(&obj, &cons) {
            LpSolution::Optimal { objective, .. } => objective,
            _ => return None,
        };
        out.push((lo, hi));
    }
    Some(out)
}

/// Deterministic interior sampler: uniform draws over a box (supplied,
/// or the LP bounding box for bounded P), with rejected draws pulled
/// toward the interior witness.
pub fn sample_interior(
    spec: &ToricSpec,
    count: usize,
    seed: u64,
    bbox: Option<&[(f64, f64)]>,
) -> Result<Vec<Vec<f64>>, PolytopeError> {
    let boxed: Vec<(f64, f64)> = match bbox {
        Some(b) => {
            if b.len() != spec.torus_rank() {
                return Err(PolytopeError::DimensionMismatch {
                    expected: spec.torus_rank(),
                    actual: b.len(),
                });
            }
            b.to_vec()
        }
        None => bounding_box(spec).ok_or(PolytopeError::NeedsBoundingBox)?,
    };
    let witness = match interior_lp(spec) {
        LpSolution::Optimal { objective, point } if objective > ACTIVITY_TOL => {
            point[..spec.torus_rank()].to_vec()
        }
        _ => return Err(PolytopeError::SamplingFailed),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    'next: for _ in 0..count {
        let mut last = witness.clone();
        for _ in 0..200 {
            let draw: Vec<f64> = boxed
                .iter()
                .map(|&(lo, hi)| rng.gen_range(lo..=hi))
                .collect();
            if classify_point(spec, &draw, ACTIVITY_TOL)? == PointClass::Interior {
                out.push(draw);
                continue 'next;
            }
            last = draw;
        }
        // Pull the last rejected draw toward the witness.
        let mut t = 0.5;
        for _ in 0..60 {
            let pulled: Vec<f64> = witness
                .iter()
                .zip(&last)
                .map(|(&w, &p)| w + t * (p - w))
                .collect();
            if classify_point(spec, &pulled, ACTIVITY_TOL)? == PointClass::Interior {
                out.push(pulled);
                continue 'next;
            }
            t *= 0.5;
        }
        return Err(PolytopeError::SamplingFailed);
    }
    Ok(out)
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn validate_unit_simplex() {
        let spec = unit_simplex();
        let report = validate(&spec);
        assert!(report.is_valid());
        assert!(report.primitive_ok && report.span_ok);
        assert!(report.interior_ok && report.minimal_ok);
        assert!(report.bounded);
        assert!(report.recession_ray.is_none());
        let w = report.interior_witness.as_ref().unwrap();
        assert_eq!(
            classify_point(&spec, w, ACTIVITY_TOL).unwrap(),
            PointClass::Interior
        );
    }

    #[test]
    fn validate_flags_redundant_facet() {
        let spec = ToricSpec::new(
            vec![vec![1, 0], vec![0, 1], vec![-1, -1], vec![1, 1]],
            vec![0.0, 0.0, -1.0, -5.0],
        )
        .unwrap();
        let report = validate(&spec);
        assert!(!report.minimal_ok);
        assert_eq!(report.redundant, vec![3]);
        // Certificate: min of eta1 + eta2 + 5 over the simplex is 5.
        assert!((report.facet_min_slack[3].unwrap() - 5.0).abs() < 1e-8);
        // Appending the redundant facet flips only minimality.
        assert!(report.primitive_ok && report.span_ok && report.interior_ok);
    }

    #[test]
    fn validate_half_space() {
        let report = validate(&half_space());
        assert!(report.interior_ok);
        assert!(!report.bounded);
        assert!(report.is_valid());
        let ray = report.recession_ray.unwrap();
        assert!(ray[0] > 0.0);
    }

    #[test]
    fn validate_reports_non_primitive() {
        let spec =
            ToricSpec::new(vec![vec![2, 4], vec![0, 1], vec![-1, -1]], vec![0.0; 3]).unwrap();
        let report = validate(&spec);
        assert!(!report.primitive_ok);
        assert_eq!(report.non_primitive, vec![0]);
    }

    #[test]
    fn iota_lambda_examples() {
        let spec = unit_simplex();
        let l = iota_lambda(&spec, &[1.0 / 3.0, 1.0 / 3.0]).unwrap();
        for v in &l {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(
            iota_lambda(&spec, &[0.0, 0.0]).unwrap(),
            vec![0.0, 0.0, 1.0]
        );
        let hs = half_space();
        assert_eq!(iota_lambda(&hs, &[5.0]).unwrap(), vec![5.0]);
        assert!(matches!(
            iota_lambda(&spec, &[1.0]),
            Err(PolytopeError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn classify_examples() {
        let spec = unit_simplex();
        assert_eq!(
            classify_point(&spec, &[1.0 / 3.0, 1.0 / 3.0], 1e-9).unwrap(),
            PointClass::Interior
        );
        assert_eq!(
            classify_point(&spec, &[0.5, 0.0], 1e-9).unwrap(),
            PointClass::Boundary(vec![1])
        );
        assert_eq!(
            classify_point(&spec, &[2.0, 2.0], 1e-9).unwrap(),
            PointClass::Outside
        );
    }

    #[test]
    fn simplex_face_lattice() {
        let spec = unit_simplex();
        let faces = enumerate_faces(&spec);
        assert_eq!(faces.len(), 7);
        let dims: Vec<usize> = faces.iter().map(|f| f.dim()).collect();
        assert_eq!(dims.iter().filter(|&&d| d == 2).count(), 1);
        assert_eq!(dims.iter().filter(|&&d| d == 1).count(), 3);
        assert_eq!(dims.iter().filter(|&&d| d == 0).count(), 3);
        // Euler characteristic of a bounded polytope's open-face partition.
        let chi: i64 = faces.iter().map(|f| (-1i64).pow(f.dim() as u32)).sum();
        assert_eq!(chi, 1);
        // Witnesses land exactly on their faces.
        for f in &faces {
            let class = classify_point(&spec, f.witness(), ACTIVITY_TOL).unwrap();
            if f.is_interior() {
                assert_eq!(class, PointClass::Interior);
            } else {
                assert_eq!(class, PointClass::Boundary(f.active_set().to_vec()));
            }
            let rank = f.active_set().len().min(spec.torus_rank());
            assert_eq!(f.dim(), spec.torus_rank() - rank);
        }
    }

    #[test]
    fn half_space_faces() {
        let faces = enumerate_faces(&half_space());
        assert_eq!(faces.len(), 2);
        assert!(faces[0].is_interior());
        assert_eq!(faces[1].active_set(), &[0]);
        assert_eq!(faces[1].dim(), 0);
        assert!(faces[1].witness()[0].abs() < 1e-9);
    }

    #[test]
    fn cone_over_square_has_apex() {
        let spec = cone_over_square();
        let faces = enumerate_faces(&spec);
        // interior + 4 facets + 4 edges + apex
        assert_eq!(faces.len(), 10);
        let apex = faces
            .iter()
            .find(|f| f.active_set() == [0, 1, 2, 3])
            .expect("apex face");
        assert_eq!(apex.dim(), 0);
        for x in apex.witness() {
            assert!(x.abs() < 1e-9);
        }
    }

    #[test]
    fn edge_chart_of_simplex() {
        let spec = unit_simplex();
        let faces = enumerate_faces(&spec);
        let edge = faces.iter().find(|f| f.active_set() == [1]).unwrap();
        let chart = face_restriction_data(&spec, edge).unwrap();
        assert_eq!(chart.dim(), 1);
        assert_eq!(chart.basis[0], vec![1, 0]);
        assert!((chart.eta0[0] - 0.5).abs() < 1e-9 && chart.eta0[1].abs() < 1e-9);
        // Restricted slacks: facet 0 is t + 1/2, facet 2 is 1/2 - t.
        let f0 = chart.facets.iter().find(|f| f.facet == 0).unwrap();
        let f2 = chart.facets.iter().find(|f| f.facet == 2).unwrap();
        assert_eq!(f0.linear, vec![1]);
        assert!((f0.constant - 0.5).abs() < 1e-9);
        assert_eq!(f2.linear, vec![-1]);
        assert!((f2.constant - 0.5).abs() < 1e-9);
        let t = 0.2;
        assert!((chart.slack(0, &[t]) - (t + 0.5)).abs() < 1e-9);
    }

    #[test]
    fn vertex_chart_is_zero_dimensional() {
        let spec = unit_simplex();
        let faces = enumerate_faces(&spec);
        let vertex = faces.iter().find(|f| f.active_set() == [0, 1]).unwrap();
        let chart = face_restriction_data(&spec, vertex).unwrap();
        assert_eq!(chart.dim(), 0);
        assert_eq!(chart.facets.len(), 1);
        assert!((chart.facets[0].constant - 1.0).abs() < 1e-9);
        let apex_spec = cone_over_square();
        let apex_faces = enumerate_faces(&apex_spec);
        let apex = apex_faces
            .iter()
            .find(|f| f.active_set().len() == 4)
            .unwrap();
        let apex_chart = face_restriction_data(&apex_spec, apex).unwrap();
        assert_eq!(apex_chart.dim(), 0);
        assert!(apex_chart.facets.is_empty());
    }

    #[test]
    fn interior_has_no_chart() {
        let spec = unit_simplex();
        let faces = enumerate_faces(&spec);
        let interior = faces.iter().find(|f| f.is_interior()).unwrap();
        assert!(matches!(
            face_restriction_data(&spec, interior),
            Err(PolytopeError::InteriorHasNoRestriction)
        ));
    }

    #[test]
    fn with_witness_validates_membership() {
        let spec = unit_simplex();
        let faces = enumerate_faces(&spec);
        let edge = faces.iter().find(|f| f.active_set() == [1]).unwrap();
        let moved = edge.with_witness(&spec, vec![0.25, 0.0]).unwrap();
        assert_eq!(moved.witness(), &[0.25, 0.0]);
        assert!(edge.with_witness(&spec, vec![0.25, 0.25]).is_err());
        assert!(edge.with_witness(&spec, vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn iota_is_affine() {
        let spec = unit_simplex();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let a: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let b: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let t: f64 = rng.gen_range(-1.0..2.0);
            let mix: Vec<f64> = a
                .iter()
                .zip(&b)
                .map(|(&x, &y)| t * x + (1.0 - t) * y)
                .collect();
            let la = iota_lambda(&spec, &a).unwrap();
            let lb = iota_lambda(&spec, &b).unwrap();
            let lm = iota_lambda(&spec, &mix).unwrap();
            for j in 0..3 {
                assert!((lm[j] - (t * la[j] + (1.0 - t) * lb[j])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bounding_boxes() {
        let bb = bounding_box(&unit_simplex()).unwrap();
        assert!((bb[0].0).abs() < 1e-9 && (bb[0].1 - 1.0).abs() < 1e-9);
        assert!(bounding_box(&half_space()).is_none());
        assert!(bounding_box(&cone_over_square()).is_none());
    }

    #[test]
    fn sampler_is_deterministic_and_interior() {
        let spec = unit_simplex();
        let a = sample_interior(&spec, 50, 7, None).unwrap();
        let b = sample_interior(&spec, 50, 7, None).unwrap();
        assert_eq!(a, b);
        for p in &a {
            assert_eq!(
                classify_point(&spec, p, ACTIVITY_TOL).unwrap(),
                PointClass::Interior
            );
        }
        assert!(matches!(
            sample_interior(&half_space(), 10, 7, None),
            Err(PolytopeError::NeedsBoundingBox)
        ));
        let boxed = sample_interior(&half_space(), 10, 7, Some(&[(0.1, 10.0)])).unwrap();
        assert_eq!(boxed.len(), 10);
    }

    #[test]
    fn cube_face_lattice() {
        let spec = ToricSpec::new(
            vec![
                vec![1, 0, 0],
                vec![0, 1, 0],
                vec![0, 0, 1],
                vec![-1, 0, 0],
                vec![0, -1, 0],
                vec![0, 0, -1],
            ],
            vec![0.0, 0.0, 0.0, -1.0, -1.0, -1.0],
        )
        .unwrap();
        let faces = enumerate_faces(&spec);
        // 1 interior + 6 facets + 12 edges + 8 vertices.
        assert_eq!(faces.len(), 27);
        let count = |d: usize| faces.iter().filter(|f| f.dim() == d).count();
        assert_eq!((count(3), count(2), count(1), count(0)), (1, 6, 12, 8));
        let chi: i64 = faces.iter().map(|f| (-1i64).pow(f.dim() as u32)).sum();
        assert_eq!(chi, 1);
    }

    #[test]
    fn weighted_projective_vertices() {
        let faces = enumerate_faces(&weighted_112());
        let verts: Vec<&Face> = faces.iter().filter(|f| f.dim() == 0).collect();
        assert_eq!(verts.len(), 3);
        let sets: Vec<&[usize]> = verts.iter().map(|f| f.active_set()).collect();
        assert!(sets.contains(&&[0, 1][..]));
        assert!(sets.contains(&&[0, 2][..]));
        assert!(sets.contains(&&[1, 2][..]));
    }
}
