//! Strictly convex potentials and their Legendre–Fenchel machinery:
//! the gradient (Legendre) map, its damped-Newton inverse, Fenchel
//! values, the h-transform h(η) = ⟨η, dφ*⟩ − φ*(η), the separable
//! closed form of h, and pullbacks along affine embeddings.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::tol::{ARMIJO_C, NEWTON_MAX_ITER, NEWTON_TOL};

#[derive(Debug, Error, PartialEq)]
pub enum ConvexError {
    #[error("point is outside the potential's domain")]
    OutOfDomain,
    #[error("argument has dimension {actual}, potential expects {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("Newton iteration did not converge (residual {residual:.3e})")]
    NonConvergence { residual: f64 },
    #[error("target is outside the image of the Legendre map")]
    ImageViolation,
    #[error("Hessian is numerically singular at an iterate")]
    SingularHessian,
    #[error("affine map is not injective")]
    NonInjective,
    #[error("separable term {index} evaluated outside its domain")]
    TermDomain { index: usize },
}

/// A smooth strictly convex function with explicit derivatives. The
/// gradient is the Legendre map; the Hessian must be symmetric positive
/// definite on the open domain.
pub trait ConvexPotential {
    fn dim(&self) -> usize;
    fn in_domain(&self, x: &[f64]) -> bool;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn hessian(&self, x: &[f64]) -> DMatrix<f64>;
}

/// f(x) = Σ e^{x_j}: the flat metric on (C^×)^N in log coordinates
/// x_j = log|z_j|², with Legendre map x ↦ (|z_j|²)_j.
#[derive(Clone, Copy, Debug)]
pub struct FlatPotential {
    dim: usize,
}

impl FlatPotential {
    pub fn new(dim: usize) -> Self {
        FlatPotential { dim }
    }
}

impl ConvexPotential for FlatPotential {
    fn dim(&self) -> usize {
        self.dim
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        x.len() == self.dim && x.iter().all(|v| v.is_finite())
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v.exp()).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| v.exp()).collect()
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(self.dim, x.iter().map(|v| v.exp())))
    }
}

/// f(x) = ½‖x‖², the self-dual potential.
#[derive(Clone, Copy, Debug)]
pub struct HalfNormSquared {
    dim: usize,
}

impl HalfNormSquared {
    pub fn new(dim: usize) -> Self {
        HalfNormSquared { dim }
    }
}

impl ConvexPotential for HalfNormSquared {
    fn dim(&self) -> usize {
        self.dim
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        x.len() == self.dim && x.iter().all(|v| v.is_finite())
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().map(|v| v * v).sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }

    fn hessian(&self, _x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.dim, self.dim)
    }
}

/// Scalar strictly convex building blocks for separable duals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalarConvex {
    /// x log x on (0, ∞).
    XLogX,
    /// e^x on all of R.
    Exp,
    /// x²/2 on all of R.
    HalfSquare,
}

impl ScalarConvex {
    pub fn in_domain(self, x: f64) -> bool {
        match self {
            ScalarConvex::XLogX => x > 0.0,
            _ => x.is_finite(),
        }
    }

    pub fn value(self, x: f64) -> f64 {
        match self {
            ScalarConvex::XLogX => x * x.ln(),
            ScalarConvex::Exp => x.exp(),
            ScalarConvex::HalfSquare => 0.5 * x * x,
        }
    }

    pub fn deriv(self, x: f64) -> f64 {
        match self {
            ScalarConvex::XLogX => x.ln() + 1.0,
            ScalarConvex::Exp => x.exp(),
            ScalarConvex::HalfSquare => x,
        }
    }

    pub fn second_deriv(self, x: f64) -> f64 {
        match self {
            ScalarConvex::XLogX => 1.0 / x,
            ScalarConvex::Exp => x.exp(),
            ScalarConvex::HalfSquare => 1.0,
        }
    }
}

/// One term f_i(u_i(η) − λ_i) of a separable dual potential.
#[derive(Clone, Debug)]
pub struct SeparableTerm {
    pub f: ScalarConvex,
    /// The linear functional u_i as an integer vector.
    pub u: Vec<i64>,
    /// The shift λ_i.
    pub shift: f64,
}

impl SeparableTerm {
    pub fn new(f: ScalarConvex, u: Vec<i64>, shift: f64) -> Self {
        SeparableTerm { f, u, shift }
    }

    fn arg(&self, eta: &[f64]) -> f64 {
        dot_iu(&self.u, eta) - self.shift
    }
}

/// φ*(η) = Σ_i f_i(u_i(η) − λ_i): the special separable shape taken by
/// every dual potential in this crate.
#[derive(Clone, Debug)]
pub struct SeparableDual {
    dim: usize,
    terms: Vec<SeparableTerm>,
}

impl SeparableDual {
    pub fn new(dim: usize, terms: Vec<SeparableTerm>) -> Self {
        assert!(
            terms.iter().all(|t| t.u.len() == dim),
            "term arity mismatch"
        );
        SeparableDual { dim, terms }
    }

    pub fn terms(&self) -> &[SeparableTerm] {
        &self.terms
    }

    /// Index of the first term whose argument leaves its domain.
    pub fn violating_term(&self, eta: &[f64]) -> Option<usize> {
        self.terms.iter().position(|t| !t.f.in_domain(t.arg(eta)))
    }
}

impl ConvexPotential for SeparableDual {
    fn dim(&self) -> usize {
        self.dim
    }

    fn in_domain(&self, eta: &[f64]) -> bool {
        eta.len() == self.dim && self.violating_term(eta).is_none()
    }

    fn value(&self, eta: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.f.value(t.arg(eta))).sum()
    }

    fn gradient(&self, eta: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for t in &self.terms {
            let d = t.f.deriv(t.arg(eta));
            for (k, &uk) in t.u.iter().enumerate() {
                g[k] += d * uk as f64;
            }
        }
        g
    }

    fn hessian(&self, eta: &[f64]) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.dim, self.dim);
        for t in &self.terms {
            let s = t.f.second_deriv(t.arg(eta));
            for (a, &ua) in t.u.iter().enumerate() {
                for (b, &ub) in t.u.iter().enumerate() {
                    h[(a, b)] += s * ua as f64 * ub as f64;
                }
            }
        }
        h
    }
}

/// The Legendre map L_f(x) = df_x, i.e. the moment map in log
/// coordinates.
pub fn legendre_map<P: ConvexPotential + ?Sized>(
    f: &P,
    x: &[f64],
) -> Result<Vec<f64>, ConvexError> {
    check_dim(f, x)?;
    if !f.in_domain(x) {
        return Err(ConvexError::OutOfDomain);
    }
    Ok(f.gradient(x))
}

/// Outcome of a Newton inversion.
#[derive(Clone, Debug)]
pub struct NewtonSolve {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Invert the Legendre map: find x with ∇f(x) = η by damped Newton on
/// the strictly convex objective f(x) − ⟨η, x⟩, starting from `x0`.
pub fn inverse_legendre<P: ConvexPotential + ?Sized>(
    f: &P,
    eta: &[f64],
    x0: &[f64],
) -> Result<NewtonSolve, ConvexError> {
    check_dim(f, eta)?;
    check_dim(f, x0)?;
    if !f.in_domain(x0) {
        return Err(ConvexError::OutOfDomain);
    }
    let eta_norm = norm(eta);
    let tol = NEWTON_TOL * (1.0 + eta_norm);
    let x0_norm = norm(x0);
    let mut x = x0.to_vec();

    for iter in 0..NEWTON_MAX_ITER {
        let grad = f.gradient(&x);
        let res: Vec<f64> = grad.iter().zip(eta).map(|(&g, &e)| g - e).collect();
        let rn = norm(&res);
        if rn <= tol {
            return Ok(NewtonSolve {
                x,
                iterations: iter,
                residual: rn,
            });
        }
        let h = f.hessian(&x);
        let rhs = DVector::from_iterator(res.len(), res.iter().map(|v| -v));
        let step = match solve_spd(&h, &rhs) {
            Some(s) => s,
            // A degenerate Hessian on a runaway iterate means the target
            // left the image; otherwise report the solve failure.
            None => {
                return Err(match stall_verdict(&x, x0_norm, rn, tol) {
                    ConvexError::ImageViolation => ConvexError::ImageViolation,
                    _ => ConvexError::SingularHessian,
                })
            }
        };

        // Backtracking Armijo line search on g(x) = f(x) - <eta, x>.
        // The epsilon slack keeps the test meaningful once the decrease
        // per step falls below rounding noise in g.
        let g0 = f.value(&x) - dot(eta, &x);
        let noise = 4.0 * f64::EPSILON * (1.0 + g0.abs());
        let slope: f64 = res.iter().zip(step.iter()).map(|(r, s)| r * s).sum();
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let xn: Vec<f64> = x
                .iter()
                .zip(step.iter())
                .map(|(&xi, &si)| xi + alpha * si)
                .collect();
            if f.in_domain(&xn) {
                let gn = f.value(&xn) - dot(eta, &xn);
                if gn <= g0 + ARMIJO_C * alpha * slope + noise {
                    x = xn;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(stall_verdict(&x, x0_norm, norm(&res), tol));
        }
    }

    let grad = f.gradient(&x);
    let res: Vec<f64> = grad.iter().zip(eta).map(|(&g, &e)| g - e).collect();
    let rn = norm(&res);
    if rn <= tol {
        return Ok(NewtonSolve {
            x,
            iterations: NEWTON_MAX_ITER,
            residual: rn,
        });
    }
    Err(stall_verdict(&x, x0_norm, rn, tol))
}

/// Distinguish "η outside the image, iterates ran away" from a plain
/// convergence failure.
fn stall_verdict(x: &[f64], x0_norm: f64, residual: f64, tol: f64) -> ConvexError {
    if norm(x) > 50.0 * (1.0 + x0_norm) && residual > 1e3 * tol {
        ConvexError::ImageViolation
    } else {
        ConvexError::NonConvergence { residual }
    }
}

/// Fenchel dual value f*(η) = ⟨η, x⟩ − f(x) at x = L_f⁻¹(η), starting
/// the inversion from the origin.
pub fn fenchel_value<P: ConvexPotential + ?Sized>(f: &P, eta: &[f64]) -> Result<f64, ConvexError> {
    fenchel_value_from(f, eta, &vec![0.0; f.dim()])
}

/// Fenchel dual value with an explicit Newton starting point.
pub fn fenchel_value_from<P: ConvexPotential + ?Sized>(
    f: &P,
    eta: &[f64],
    x0: &[f64],
) -> Result<f64, ConvexError> {
    let solve = inverse_legendre(f, eta, x0)?;
    Ok(dot(eta, &solve.x) - f.value(&solve.x))
}

/// h(η) = ⟨η, (dφ*)_η⟩ − φ*(η): recovers the potential on the moment
/// side, φ = (L_φ)* h.
pub fn h_transform<P: ConvexPotential + ?Sized>(dual: &P, eta: &[f64]) -> Result<f64, ConvexError> {
    check_dim(dual, eta)?;
    if !dual.in_domain(eta) {
        return Err(ConvexError::OutOfDomain);
    }
    let g = dual.gradient(eta);
    Ok(dot(eta, &g) - dual.value(eta))
}

/// Closed form of the h-transform for a separable dual:
/// h(η) = Σ_i f_i′(u_i(η) − λ_i)·u_i(η) − f_i(u_i(η) − λ_i).
pub fn separable_h(d: &SeparableDual, eta: &[f64]) -> Result<f64, ConvexError> {
    check_dim(d, eta)?;
    if let Some(index) = d.violating_term(eta) {
        return Err(ConvexError::TermDomain { index });
    }
    let mut acc = 0.0;
    for t in d.terms() {
        let ui_eta = dot_iu(&t.u, eta);
        let s = ui_eta - t.shift;
        acc += t.f.deriv(s) * ui_eta - t.f.value(s);
    }
    Ok(acc)
}

/// A potential composed with an injective affine map j(w) = A·w + x:
/// value (f∘j)(w), gradient Aᵀ∇f(j(w)), Hessian Aᵀ·Hess f·A.
#[derive(Clone, Debug)]
pub struct AffinePullback<P> {
    inner: P,
    matrix: DMatrix<f64>,
    point: DVector<f64>,
}

impl<P: ConvexPotential> AffinePullback<P> {
    pub fn new(inner: P, matrix: DMatrix<f64>, point: Vec<f64>) -> Result<Self, ConvexError> {
        if matrix.nrows() != inner.dim() || point.len() != inner.dim() {
            return Err(ConvexError::DimensionMismatch {
                expected: inner.dim(),
                actual: matrix.nrows(),
            });
        }
        if matrix.rank(1e-12) < matrix.ncols() {
            return Err(ConvexError::NonInjective);
        }
        Ok(AffinePullback {
            inner,
            matrix,
            point: DVector::from_vec(point),
        })
    }

    fn embed(&self, w: &[f64]) -> Vec<f64> {
        let wv = DVector::from_column_slice(w);
        (&self.matrix * wv + &self.point).as_slice().to_vec()
    }
}

impl<P: ConvexPotential> ConvexPotential for AffinePullback<P> {
    fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    fn in_domain(&self, w: &[f64]) -> bool {
        w.len() == self.dim() && self.inner.in_domain(&self.embed(w))
    }

    fn value(&self, w: &[f64]) -> f64 {
        self.inner.value(&self.embed(w))
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let g = DVector::from_vec(self.inner.gradient(&self.embed(w)));
        (self.matrix.transpose() * g).as_slice().to_vec()
    }

    fn hessian(&self, w: &[f64]) -> DMatrix<f64> {
        let h = self.inner.hessian(&self.embed(w));
        self.matrix.transpose() * h * &self.matrix
    }
}

fn check_dim<P: ConvexPotential + ?Sized>(f: &P, x: &[f64]) -> Result<(), ConvexError> {
    if x.len() != f.dim() {
        return Err(ConvexError::DimensionMismatch {
            expected: f.dim(),
            actual: x.len(),
        });
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn dot_iu(u: &[i64], x: &[f64]) -> f64 {
    u.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn solve_spd(h: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(chol) = h.clone().cholesky() {
        return Some(chol.solve(rhs));
    }
    h.clone().lu().solve(rhs)
}

/// Central finite differences of a potential's value; used by
/// verification harnesses to audit analytic gradients.
pub fn fd_gradient<P: ConvexPotential + ?Sized>(f: &P, x: &[f64], step: f64) -> Vec<f64> {
    let mut g = Vec::with_capacity(x.len());
    let mut p = x.to_vec();
    for i in 0..x.len() {
        p[i] = x[i] + step;
        let fp = f.value(&p);
        p[i] = x[i] - step;
        let fm = f.value(&p);
        p[i] = x[i];
        g.push((fp - fm) / (2.0 * step));
    }
    g
}

/// Central finite differences of the analytic gradient.
pub fn fd_hessian<P: ConvexPotential + ?Sized>(f: &P, x: &[f64], step: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut h = DMatrix::zeros(n, n);
    let mut p = x.to_vec();
    for j in 0..n {
        p[j] = x[j] + step;
        let gp = f.gradient(&p);
        p[j] = x[j] - step;
        let gm = f.gradient(&p);
        p[j] = x[j];
        for i in 0..n {
            h[(i, j)] = (gp[i] - gm[i]) / (2.0 * step);
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tol::FD_STEP;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const LOG3: f64 = 1.0986122886681098;

    #[test]
    fn legendre_map_examples() {
        let flat = FlatPotential::new(2);
        assert_eq!(legendre_map(&flat, &[0.0, 0.0]).unwrap(), vec![1.0, 1.0]);
        let quad = HalfNormSquared::new(3);
        assert_eq!(
            legendre_map(&quad, &[1.5, -2.0, 0.0]).unwrap(),
            vec![1.5, -2.0, 0.0]
        );
        let e = FlatPotential::new(1);
        let g = legendre_map(&e, &[4.0f64.ln()]).unwrap();
        assert!((g[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_legendre_examples() {
        let flat = FlatPotential::new(2);
        let s = inverse_legendre(&flat, &[1.0, 1.0], &[0.5, -0.5]).unwrap();
        assert!(s.x.iter().all(|v| v.abs() < 1e-9));
        let quad = HalfNormSquared::new(2);
        let s = inverse_legendre(&quad, &[3.0, -2.0], &[0.0, 0.0]).unwrap();
        assert!((s.x[0] - 3.0).abs() < 1e-10 && (s.x[1] + 2.0).abs() < 1e-10);
        let e = FlatPotential::new(1);
        let s = inverse_legendre(&e, &[1.0 / 3.0], &[0.0]).unwrap();
        assert!((s.x[0] + LOG3).abs() < 1e-9);
    }

    #[test]
    fn inverse_legendre_rejects_outside_image() {
        let e = FlatPotential::new(1);
        let err = inverse_legendre(&e, &[-1.0], &[0.0]).unwrap_err();
        assert!(matches!(
            err,
            ConvexError::ImageViolation | ConvexError::NonConvergence { .. }
        ));
    }

    #[test]
    fn fenchel_examples() {
        let e = FlatPotential::new(1);
        // f = e^x: f*(1/3) = (1/3)(-log 3) - 1/3.
        let v = fenchel_value(&e, &[1.0 / 3.0]).unwrap();
        assert!((v - (-LOG3 / 3.0 - 1.0 / 3.0)).abs() < 1e-10);
        let quad = HalfNormSquared::new(2);
        let v = fenchel_value(&quad, &[1.0, 2.0]).unwrap();
        assert!((v - 2.5).abs() < 1e-10);
        let flat = FlatPotential::new(2);
        let v = fenchel_value(&flat, &[1.0, 1.0]).unwrap();
        assert!((v + 2.0).abs() < 1e-10);
    }

    fn entropy_1d() -> SeparableDual {
        SeparableDual::new(
            1,
            vec![SeparableTerm::new(ScalarConvex::XLogX, vec![1], 0.0)],
        )
    }

    #[test]
    fn h_transform_examples() {
        // phi* = eta log eta on (0, inf): h(eta) = eta.
        let d = entropy_1d();
        for eta in [0.3, 1.0, 2.5] {
            assert!((h_transform(&d, &[eta]).unwrap() - eta).abs() < 1e-12);
        }
        // Self-dual quadratic: h = phi*.
        let q = HalfNormSquared::new(2);
        let v = h_transform(&q, &[1.0, -2.0]).unwrap();
        assert!((v - 2.5).abs() < 1e-12);
        // Binary entropy at 1/2: h = log 2.
        let bin = SeparableDual::new(
            1,
            vec![
                SeparableTerm::new(ScalarConvex::XLogX, vec![1], 0.0),
                SeparableTerm::new(ScalarConvex::XLogX, vec![-1], -1.0),
            ],
        );
        let v = h_transform(&bin, &[0.5]).unwrap();
        assert!((v - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn separable_h_examples() {
        // Orthant dual: h(eta) = sum eta_j.
        let d = SeparableDual::new(
            2,
            vec![
                SeparableTerm::new(ScalarConvex::XLogX, vec![1, 0], 0.0),
                SeparableTerm::new(ScalarConvex::XLogX, vec![0, 1], 0.0),
            ],
        );
        let v = separable_h(&d, &[0.7, 1.9]).unwrap();
        assert!((v - 2.6).abs() < 1e-12);
        // Single term with u(eta) = 0: h = f'(1)*0 - f(1) = 0.
        let d = SeparableDual::new(
            1,
            vec![SeparableTerm::new(ScalarConvex::XLogX, vec![1], -1.0)],
        );
        assert!(separable_h(&d, &[0.0]).unwrap().abs() < 1e-12);
        // Unit simplex dual at the barycenter: log 3.
        let d = SeparableDual::new(
            2,
            vec![
                SeparableTerm::new(ScalarConvex::XLogX, vec![1, 0], 0.0),
                SeparableTerm::new(ScalarConvex::XLogX, vec![0, 1], 0.0),
                SeparableTerm::new(ScalarConvex::XLogX, vec![-1, -1], -1.0),
            ],
        );
        let v = separable_h(&d, &[1.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!((v - LOG3).abs() < 1e-12);
    }

    #[test]
    fn separable_h_reports_offending_index() {
        let d = SeparableDual::new(
            2,
            vec![
                SeparableTerm::new(ScalarConvex::XLogX, vec![1, 0], 0.0),
                SeparableTerm::new(ScalarConvex::XLogX, vec![0, 1], 0.0),
            ],
        );
        assert_eq!(
            separable_h(&d, &[0.5, -0.5]),
            Err(ConvexError::TermDomain { index: 1 })
        );
    }

    #[test]
    fn separable_h_agrees_with_h_transform() {
        let d = SeparableDual::new(
            2,
            vec![
                SeparableTerm::new(ScalarConvex::XLogX, vec![1, 0], 0.0),
                SeparableTerm::new(ScalarConvex::XLogX, vec![0, 1], 0.0),
                SeparableTerm::new(ScalarConvex::XLogX, vec![-1, -1], -1.0),
            ],
        );
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let a: f64 = rng.gen_range(0.01..0.9);
            let b: f64 = rng.gen_range(0.01..0.98 - a);
            let eta = [a, b];
            let lhs = separable_h(&d, &eta).unwrap();
            let rhs = h_transform(&d, &eta).unwrap();
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn affine_pullback_examples() {
        // Orthant dual on R^3 pulled back along the simplex embedding.
        let ortho = SeparableDual::new(
            3,
            vec![
                SeparableTerm::new(ScalarConvex::XLogX, vec![1, 0, 0], 0.0),
                SeparableTerm::new(ScalarConvex::XLogX, vec![0, 1, 0], 0.0),
                SeparableTerm::new(ScalarConvex::XLogX, vec![0, 0, 1], 0.0),
            ],
        );
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, -1.0]);
        let pb = AffinePullback::new(ortho, a, vec![0.0, 0.0, 1.0]).unwrap();
        let v = pb.value(&[1.0 / 3.0, 1.0 / 3.0]);
        assert!((v + LOG3).abs() < 1e-12);

        // Identity pullback is a no-op.
        let q = HalfNormSquared::new(2);
        let idp = AffinePullback::new(q, DMatrix::identity(2, 2), vec![0.0, 0.0]).unwrap();
        assert!((idp.value(&[1.0, 2.0]) - 2.5).abs() < 1e-15);
        assert_eq!(idp.gradient(&[1.0, 2.0]), vec![1.0, 2.0]);

        // j(w) = (w, -w) on the quadratic: pullback w^2 with gradient 2w.
        let q = HalfNormSquared::new(2);
        let j = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let pb = AffinePullback::new(q, j, vec![0.0, 0.0]).unwrap();
        assert!((pb.value(&[1.5]) - 2.25).abs() < 1e-15);
        assert!((pb.gradient(&[1.5])[0] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn affine_pullback_rejects_non_injective() {
        let q = HalfNormSquared::new(2);
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(
            AffinePullback::new(q, a, vec![0.0, 0.0]).unwrap_err(),
            ConvexError::NonInjective
        );
    }

    #[test]
    fn duality_and_round_trip_on_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 1..=4 {
            let flat = FlatPotential::new(n);
            for _ in 0..50 {
                let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let eta = legendre_map(&flat, &x).unwrap();
                let fs = fenchel_value(&flat, &eta).unwrap();
                let fx = flat.value(&x);
                let lhs = fx + fs - dot(&eta, &x);
                assert!(
                    lhs.abs() <= 1e-8 * (1.0 + fx.abs()),
                    "duality residual {lhs}"
                );
                let rt = inverse_legendre(&flat, &eta, &vec![0.0; n]).unwrap();
                let err =
                    rt.x.iter()
                        .zip(&x)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0f64, f64::max);
                assert!(err <= 1e-8, "round trip error {err}");
            }
        }
    }

    #[test]
    fn h_transform_recovers_primal_on_flat_pair() {
        // phi = sum e^{x_j} and phi* = sum eta log eta are dual up to the
        // linear constant fixed by the explicit formulas.
        let n = 3;
        let flat = FlatPotential::new(n);
        let dual = SeparableDual::new(
            n,
            (0..n)
                .map(|j| {
                    let mut u = vec![0i64; n];
                    u[j] = 1;
                    SeparableTerm::new(ScalarConvex::XLogX, u, 0.0)
                })
                .collect(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let eta = legendre_map(&flat, &x).unwrap();
            let h = h_transform(&dual, &eta).unwrap();
            let phi = flat.value(&x);
            assert!((h - phi).abs() <= 1e-8 * (1.0 + phi.abs()));
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let duals: Vec<SeparableDual> = vec![
            SeparableDual::new(
                2,
                vec![
                    SeparableTerm::new(ScalarConvex::XLogX, vec![1, 0], 0.0),
                    SeparableTerm::new(ScalarConvex::XLogX, vec![0, 1], 0.0),
                    SeparableTerm::new(ScalarConvex::XLogX, vec![-1, -1], -1.0),
                ],
            ),
            SeparableDual::new(
                2,
                vec![
                    SeparableTerm::new(ScalarConvex::Exp, vec![1, 1], 0.5),
                    SeparableTerm::new(ScalarConvex::HalfSquare, vec![1, -1], 0.0),
                    SeparableTerm::new(ScalarConvex::XLogX, vec![0, 1], -1.0),
                ],
            ),
        ];
        let pts = [[0.3, 0.3], [0.2, 0.5], [0.4, 0.1]];
        let mut cases: Vec<(Box<dyn ConvexPotential>, Vec<[f64; 2]>)> = duals
            .into_iter()
            .map(|d| (Box::new(d) as Box<dyn ConvexPotential>, pts.to_vec()))
            .collect();
        cases.push((
            Box::new(FlatPotential::new(2)),
            vec![[0.0, 0.0], [-1.5, 2.0], [1.0, -0.3]],
        ));
        cases.push((Box::new(HalfNormSquared::new(2)), pts.to_vec()));
        for (d, pts) in &cases {
            for p in pts {
                assert!(d.in_domain(p));
                let g = d.gradient(p);
                let gfd = fd_gradient(d.as_ref(), p, FD_STEP);
                let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                for (a, b) in g.iter().zip(&gfd) {
                    assert!((a - b).abs() <= 1e-6 * (1.0 + gmax));
                }
                let h = d.hessian(p);
                let hfd = fd_hessian(d.as_ref(), p, FD_STEP);
                let hmax = h.amax();
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((h[(i, j)] - hfd[(i, j)]).abs() <= 1e-6 * (1.0 + hmax));
                    }
                }
            }
        }
    }

    #[test]
    fn newton_reports_iterations() {
        let flat = FlatPotential::new(3);
        let s = inverse_legendre(&flat, &[2.0, 0.5, 7.0], &[0.0, 0.0, 0.0]).unwrap();
        assert!(s.iterations <= 30, "took {} iterations", s.iterations);
        assert!(s.residual <= NEWTON_TOL * (1.0 + norm(&[2.0, 0.5, 7.0])));
    }
}
