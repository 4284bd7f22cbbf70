//! Reduction bookkeeping for the quotient presentation of the toric
//! space: the lattice map A, the kernel inclusion B, the reduction level
//! ν = Bᵀ(−λ), numerical verification of φ(φ_K⁻¹(ν)) = ι_λ(P), and the
//! smooth / orbifold / singular classification of face strata.

use nalgebra::{DMatrix, DVector};
use num_traits::ToPrimitive;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::lattice::{self, IntMatrix};
use crate::polytope::{
    enumerate_faces, iota_lambda, sample_interior, Face, PolytopeError, ToricSpec,
};

#[derive(Debug, Error, PartialEq)]
pub enum QuotientError {
    #[error("facet normals do not span; the quotient presentation needs full rank")]
    SpanFailure,
    #[error("the interior stratum has no active facets to classify")]
    EmptyActiveSet,
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error(transparent)]
    Lattice(#[from] lattice::LatticeError),
}

/// The short exact sequence data 0 → k → R^N → g → 0 attached to a spec:
/// A sends e_j to u_j, B includes its kernel, ν is the reduction level.
#[derive(Clone, Debug)]
pub struct QuotientData {
    /// n×N, columns u_j.
    pub a: IntMatrix,
    /// N×k saturated kernel basis, A·B = 0.
    pub b: IntMatrix,
    /// ν = Bᵀ(−λ).
    pub nu: Vec<f64>,
    /// Component count of K (order of coker A); 1 means connected.
    pub k_components: u64,
    /// Real dimension of the principal stratum.
    pub reduced_dim: usize,
}

/// Assemble the quotient presentation. Errors if the normals fail to
/// span (the torus would not act effectively).
pub fn build_quotient(spec: &ToricSpec) -> Result<QuotientData, QuotientError> {
    let a = spec.normal_matrix();
    let k_components = match lattice::cokernel_order(&a) {
        Ok(k) => k,
        Err(lattice::LatticeError::RankDeficient { .. }) => return Err(QuotientError::SpanFailure),
        Err(e) => return Err(e.into()),
    };
    let b = lattice::kernel_basis(&a);
    let nu = (0..b.cols())
        .map(|c| {
            (0..b.rows())
                .map(|r| {
                    let entry = b.get(r, c).to_f64().unwrap_or(f64::NAN);
                    entry * (-spec.offset(r))
                })
                .sum()
        })
        .collect();
    Ok(QuotientData {
        reduced_dim: 2 * spec.torus_rank(),
        a,
        b,
        nu,
        k_components,
    })
}

/// Residuals of the level-set identity and its converse.
#[derive(Clone, Debug)]
pub struct LevelSetCheck {
    /// max |Bᵀ ι_λ(η) − ν| over the sampled interior points, with the
    /// slack vector recomputed through the lift z_j = √ℓ_j.
    pub max_residual: f64,
    pub samples: usize,
    /// max distance between a projected positive slack vector and the
    /// slack vector of its reconstructed moment point.
    pub converse_max_residual: f64,
    pub converse_samples: usize,
}

/// Sample the identity φ(φ_K⁻¹(ν)) = ι_λ(P): interior points of P lift
/// to level-ν points of C^N, and positive vectors on the level project
/// back into ι_λ(P).
pub fn verify_level_set(
    spec: &ToricSpec,
    data: &QuotientData,
    samples: usize,
    seed: u64,
    bbox: Option<&[(f64, f64)]>,
) -> Result<LevelSetCheck, QuotientError> {
    let points = sample_interior(spec, samples, seed, bbox)?;
    let bt = matrix_f64(&data.b).transpose();
    let mut max_residual = 0.0f64;
    for eta in &points {
        let slacks = iota_lambda(spec, eta)?;
        // Lift to z with |z_j|^2 = l_j and push back down.
        let moment: Vec<f64> = slacks
            .iter()
            .map(|&l| {
                let z = l.sqrt();
                z * z
            })
            .collect();
        let lv = &bt * DVector::from_vec(moment);
        for (i, &nu_i) in data.nu.iter().enumerate() {
            max_residual = max_residual.max((lv[i] - nu_i).abs());
        }
    }

    // Converse: project random nonnegative slack vectors onto the affine
    // level {Bᵀl = ν} and solve Aᵀη = l + λ for the moment point.
    let nf = spec.facet_count();
    let b = matrix_f64(&data.b);
    let at = matrix_f64(&data.a).transpose();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    let mut converse_max_residual = 0.0f64;
    let mut converse_samples = 0usize;
    let gram = b.transpose() * &b;
    let gram_inv = gram.clone().try_inverse();
    for _ in 0..samples {
        if data.b.cols() == 0 {
            break;
        }
        let gram_inv = match &gram_inv {
            Some(g) => g,
            None => break,
        };
        let draw: Vec<f64> = (0..nf).map(|_| rng.gen_range(0.1..3.0)).collect();
        let lvec = DVector::from_vec(draw);
        let defect = &b.transpose() * &lvec - DVector::from_vec(data.nu.clone());
        let projected = &lvec - &b * (gram_inv * defect);
        if projected.iter().any(|&x| x <= 0.0) {
            continue;
        }
        // Solve A^T eta = projected + lambda (consistent by construction).
        let rhs = &projected + DVector::from_vec(spec.offsets().to_vec());
        let normal_matrix = at.transpose() * &at;
        let eta = match normal_matrix
            .try_inverse()
            .map(|inv| inv * (at.transpose() * rhs))
        {
            Some(eta) => eta,
            None => break,
        };
        let back = iota_lambda(spec, eta.as_slice())?;
        for (j, &l) in back.iter().enumerate() {
            converse_max_residual = converse_max_residual.max((l - projected[j]).abs());
        }
        converse_samples += 1;
    }

    Ok(LevelSetCheck {
        max_residual,
        samples: points.len(),
        converse_max_residual,
        converse_samples,
    })
}

fn matrix_f64(m: &IntMatrix) -> DMatrix<f64> {
    let rows = m.to_f64_rows();
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| rows[i][j])
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SingularReason {
    /// More active facets than the face codimension (or a dependent
    /// active normal set): the stratum is not a quotient of a free
    /// torus action.
    NonSimple,
    /// The active normals do not span a finite-index sublattice of
    /// their saturation.
    LatticeIndexInfinite,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StratumVerdict {
    Smooth,
    /// Orbifold with the given lattice index m > 1.
    Orbifold(u64),
    Singular(SingularReason),
}

/// Verdict for one face stratum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StratumClass {
    pub active_set: Vec<usize>,
    pub verdict: StratumVerdict,
}

/// Classify the stratum over a proper face by the lattice geometry of
/// its active normal set S = {u_i : i ∈ I}: singular when dependent,
/// otherwise smooth iff S extends to a lattice basis (all invariant
/// factors 1), orbifold of order ∏ factors when not.
pub fn classify_face(spec: &ToricSpec, face: &Face) -> Result<StratumClass, QuotientError> {
    let active = face.active_set();
    if active.is_empty() {
        return Err(QuotientError::EmptyActiveSet);
    }
    let cols: Vec<Vec<i64>> = active.iter().map(|&i| spec.normal(i).to_vec()).collect();
    let s = IntMatrix::from_cols(&cols);
    let snf = lattice::smith_normal_form(&s);
    let verdict = if snf.rank < active.len() {
        StratumVerdict::Singular(SingularReason::NonSimple)
    } else {
        match lattice::factor_product(&snf.invariant_factors()) {
            Ok(1) => StratumVerdict::Smooth,
            Ok(m) => StratumVerdict::Orbifold(m),
            Err(_) => StratumVerdict::Singular(SingularReason::LatticeIndexInfinite),
        }
    };
    Ok(StratumClass {
        active_set: active.to_vec(),
        verdict,
    })
}

/// One face stratum with its verdict and real dimension 2·dim F̊.
#[derive(Clone, Debug)]
pub struct StratumEntry {
    pub face: Face,
    pub class: StratumClass,
    pub stratum_dim: usize,
}

/// Classify every stratum; the interior is always smooth of dimension 2n.
pub fn stratum_report(spec: &ToricSpec) -> Result<Vec<StratumEntry>, QuotientError> {
    enumerate_faces(spec)
        .into_iter()
        .map(|face| {
            let class = if face.is_interior() {
                StratumClass {
                    active_set: Vec::new(),
                    verdict: StratumVerdict::Smooth,
                }
            } else {
                classify_face(spec, &face)?
            };
            Ok(StratumEntry {
                stratum_dim: 2 * face.dim(),
                class,
                face,
            })
        })
        .collect()
}
