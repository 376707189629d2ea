//! Preconditioned conjugate gradients for Hermitian positive-definite
//! operator expressions.
//!
//! All estimator systems have the shape "PSD pieces plus a strictly positive
//! diagonal", so plain CG applies. The inner product is the complex one,
//! `<u, v> = sum conj(u_i) v_i`; residual inner products are real and
//! nonnegative up to round-off.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::LinearOperator;

/// Conjugate-gradient controls.
#[derive(Debug, Clone, Default)]
pub struct CgConfig {
    /// Relative residual tolerance; defaults to 1e-8.
    pub tol: Option<f64>,
    /// Iteration cap; defaults to `max(1000, 10 * dimension)`.
    pub max_iter: Option<usize>,
    /// Optional Jacobi (diagonal) preconditioner, entries > 0.
    pub preconditioner: Option<Vec<f64>>,
}

pub const DEFAULT_CG_TOL: f64 = 1e-8;

impl CgConfig {
    pub fn with_tol(tol: f64) -> Self {
        CgConfig { tol: Some(tol), ..Default::default() }
    }

    fn resolved_tol(&self) -> Result<f64> {
        let tol = self.tol.unwrap_or(DEFAULT_CG_TOL);
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::InvalidParameter(format!("CG tolerance must be in (0, 1), got {tol}")));
        }
        Ok(tol)
    }

    fn resolved_max_iter(&self, dim: usize) -> Result<usize> {
        let cap = self.max_iter.unwrap_or_else(|| 1000.max(10 * dim));
        if cap == 0 {
            return Err(Error::InvalidParameter("CG max iterations must be >= 1".into()));
        }
        Ok(cap)
    }
}

/// Outcome of a CG solve. `converged` implies the final relative residual
/// is at or below the configured tolerance.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Validate a Jacobi preconditioner diagonal (all entries strictly positive).
pub fn jacobi_preconditioner(diagonal: &[f64]) -> Result<Vec<f64>> {
    for (i, &v) in diagonal.iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "preconditioner diagonal entry {i} must be > 0, got {v}"
            )));
        }
    }
    Ok(diagonal.to_vec())
}

/// Solve `A x = b` from a zero initial guess.
pub fn conjugate_gradient(
    a: &dyn LinearOperator,
    b: &[Complex64],
    cfg: &CgConfig,
) -> Result<(Vec<Complex64>, SolveReport)> {
    cg_impl(a, b, None, cfg, None)
}

/// Solve `A x = b` warm-started from `x0` (used by the lambda grid search,
/// where consecutive systems differ by a diagonal shift only).
pub fn conjugate_gradient_from(
    a: &dyn LinearOperator,
    b: &[Complex64],
    x0: &[Complex64],
    cfg: &CgConfig,
) -> Result<(Vec<Complex64>, SolveReport)> {
    cg_impl(a, b, Some(x0), cfg, None)
}

/// Solve while recording every iterate (including the initial guess).
pub fn conjugate_gradient_traced(
    a: &dyn LinearOperator,
    b: &[Complex64],
    cfg: &CgConfig,
    iterates: &mut Vec<Vec<Complex64>>,
) -> Result<(Vec<Complex64>, SolveReport)> {
    cg_impl(a, b, None, cfg, Some(iterates))
}

fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn cg_impl(
    a: &dyn LinearOperator,
    b: &[Complex64],
    x0: Option<&[Complex64]>,
    cfg: &CgConfig,
    mut iterates: Option<&mut Vec<Vec<Complex64>>>,
) -> Result<(Vec<Complex64>, SolveReport)> {
    let dim = a.dim();
    if b.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: b.len() });
    }
    if b.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite("right-hand side".into()));
    }
    let tol = cfg.resolved_tol()?;
    let max_iter = cfg.resolved_max_iter(dim)?;
    if let Some(p) = &cfg.preconditioner {
        if p.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
        }
        jacobi_preconditioner(p)?;
    }
    let precond = cfg.preconditioner.as_deref();
    let apply_precond = |r: &[Complex64], z: &mut Vec<Complex64>| {
        z.clear();
        match precond {
            Some(p) => z.extend(r.iter().zip(p).map(|(&ri, &pi)| ri / pi)),
            None => z.extend_from_slice(r),
        }
    };

    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok((
            vec![Complex64::default(); dim],
            SolveReport { iterations: 0, relative_residual: 0.0, converged: true },
        ));
    }

    let mut x = match x0 {
        Some(init) => {
            if init.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: init.len() });
            }
            init.to_vec()
        }
        None => vec![Complex64::default(); dim],
    };
    let mut r = vec![Complex64::default(); dim];
    a.apply(&x, &mut r);
    for (ri, &bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }

    let mut z = Vec::with_capacity(dim);
    apply_precond(&r, &mut z);
    let mut rho = inner(&r, &z).re;
    let mut p = z.clone();
    let mut q = vec![Complex64::default(); dim];

    let mut best_x = x.clone();
    let mut best_res = norm(&r) / b_norm;
    let mut res = best_res;
    if let Some(h) = iterates.as_deref_mut() {
        h.push(x.clone());
    }
    let mut iterations = 0usize;
    while res > tol && iterations < max_iter {
        if rho <= 0.0 {
            // Loss of positivity from round-off; stop with the best iterate.
            break;
        }
        a.apply(&p, &mut q);
        let denom = inner(&p, &q).re;
        if denom <= 0.0 {
            break;
        }
        let alpha = rho / denom;
        for (xi, &pi) in x.iter_mut().zip(&p) {
            *xi += pi * alpha;
        }
        for (ri, &qi) in r.iter_mut().zip(&q) {
            *ri -= qi * alpha;
        }
        iterations += 1;
        res = norm(&r) / b_norm;
        if res < best_res {
            best_res = res;
            best_x.copy_from_slice(&x);
        }
        if let Some(h) = iterates.as_deref_mut() {
            h.push(x.clone());
        }
        apply_precond(&r, &mut z);
        let rho_next = inner(&r, &z).re;
        let beta = rho_next / rho;
        rho = rho_next;
        for (pi, &zi) in p.iter_mut().zip(&z) {
            *pi = zi + *pi * beta;
        }
    }

    let converged = res <= tol;
    let (x_out, res_out) = if converged { (x, res) } else { (best_x, best_res) };
    Ok((x_out, SolveReport { iterations, relative_residual: res_out, converged }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::OperatorExpr;
    use crate::toeplitz::build_empirical_covariance;
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_system_converges_in_one_iteration() {
        let a = OperatorExpr::identity(8);
        let b: Vec<Complex64> = (0..8).map(|i| Complex64::new(i as f64, -(i as f64))).collect();
        let (x, report) = conjugate_gradient(&a, &b, &CgConfig::default()).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 1);
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi).norm() < 1e-12);
        }
    }

    #[test]
    fn diagonal_system_solution() {
        let dim = 12;
        let diag: Vec<f64> = (1..=dim).map(|i| i as f64).collect();
        let a = OperatorExpr::real_diagonal(diag);
        let b = vec![Complex64::new(1.0, 0.0); dim];
        let (x, report) = conjugate_gradient(&a, &b, &CgConfig::with_tol(1e-12)).unwrap();
        assert!(report.converged);
        assert!(report.iterations <= dim);
        for (i, xi) in x.iter().enumerate() {
            assert!((xi.re - 1.0 / (i + 1) as f64).abs() < 1e-10);
            assert!(xi.im.abs() < 1e-12);
        }
    }

    #[test]
    fn ridge_system_matches_dense_solve() {
        // Sigma_hat + lambda I from 50 random samples, m = 4, lambda = 0.1.
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let n = 50;
        let m = 4;
        let lambda = 0.1;
        let coords: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let pts = crate::nufft::ScaledPoints::from_raw(&coords, 1, 1.0).unwrap();
        let cov = std::sync::Arc::new(build_empirical_covariance(&pts, m, 1e-12).unwrap());
        let dim = cov.size();
        let expr = OperatorExpr::sum(vec![
            OperatorExpr::toeplitz(cov.clone()),
            OperatorExpr::scaled(lambda, OperatorExpr::identity(dim)),
        ])
        .unwrap();
        assert!(expr.hermitian_psd());
        let b: Vec<Complex64> =
            (0..dim).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let (x, report) = conjugate_gradient(&expr, &b, &CgConfig::with_tol(1e-12)).unwrap();
        assert!(report.converged);

        // Dense factorization oracle.
        let grid = crate::grid::MultiIndexGrid::new(1, m).unwrap();
        let mut dense = DMatrix::<Complex64>::zeros(dim, dim);
        for r in 0..dim {
            let k1 = grid.unflatten(r);
            for c in 0..dim {
                let k2 = grid.unflatten(c);
                dense[(r, c)] = cov.dense_entry(&k1, &k2);
            }
            dense[(r, r)] += Complex64::new(lambda, 0.0);
        }
        let rhs = nalgebra::DVector::from_iterator(dim, b.iter().copied());
        let sol = dense.lu().solve(&rhs).unwrap();
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for i in 0..dim {
            num += (x[i] - sol[i]).norm_sqr();
            den += sol[i].norm_sqr();
        }
        assert!((num / den).sqrt() < 1e-7, "rel error {}", (num / den).sqrt());
    }

    #[test]
    fn jacobi_preconditioner_validation() {
        assert!(jacobi_preconditioner(&[1.0, 2.0]).is_ok());
        assert!(jacobi_preconditioner(&[1.0, 0.0]).is_err());
        assert!(jacobi_preconditioner(&[1.0, -2.0]).is_err());
    }

    #[test]
    fn exact_jacobi_on_diagonal_system_converges_immediately() {
        let diag: Vec<f64> = (1..=9).map(|i| i as f64 * 0.7).collect();
        let a = OperatorExpr::real_diagonal(diag.clone());
        let b = vec![Complex64::new(1.0, 2.0); 9];
        let cfg = CgConfig { preconditioner: Some(diag), ..Default::default() };
        let (_, report) = conjugate_gradient(&a, &b, &cfg).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 1);
    }

    #[test]
    fn preconditioner_does_not_increase_iterations_on_sobolev_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 400;
        let m = 64;
        let s = 2.0;
        let lambda = 1e-3;
        let coords: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let pts = crate::nufft::ScaledPoints::from_raw(&coords, 1, 1.0).unwrap();
        let cov = std::sync::Arc::new(build_empirical_covariance(&pts, m, 1e-12).unwrap());
        let grid = crate::grid::MultiIndexGrid::new(1, m).unwrap();
        let s_diag = crate::grid::sobolev_diagonal(&grid, s).unwrap();
        let s2: Vec<f64> = s_diag.iter().map(|v| v * v).collect();
        let dim = cov.size();
        let expr = OperatorExpr::sum(vec![
            OperatorExpr::toeplitz(cov.clone()),
            OperatorExpr::scaled(lambda, OperatorExpr::real_diagonal(s2.clone())),
        ])
        .unwrap();
        // Exact diagonal: diag(Sigma_hat) = g(0) = 1.
        let jacobi: Vec<f64> = s2.iter().map(|v| 1.0 + lambda * v).collect();
        for _ in 0..10 {
            let b: Vec<Complex64> = (0..dim)
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let plain = conjugate_gradient(&expr, &b, &CgConfig::with_tol(1e-10)).unwrap().1;
            let cfg = CgConfig {
                tol: Some(1e-10),
                preconditioner: Some(jacobi.clone()),
                ..Default::default()
            };
            let pre = conjugate_gradient(&expr, &b, &cfg).unwrap().1;
            assert!(pre.converged && plain.converged);
            assert!(
                pre.iterations <= plain.iterations,
                "preconditioned {} > plain {}",
                pre.iterations,
                plain.iterations
            );
        }
    }

    #[test]
    fn residual_decreases_monotonically_in_inverse_operator_norm() {
        // CG minimizes the error A-norm (= residual A^{-1}-norm) over growing
        // Krylov spaces, so that quantity is non-increasing per iteration;
        // the plain and M^{-1} residual norms are not.
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let n = 200;
        let m = 16;
        let lambda = 0.05;
        let coords: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let pts = crate::nufft::ScaledPoints::from_raw(&coords, 1, 1.0).unwrap();
        let cov = std::sync::Arc::new(build_empirical_covariance(&pts, m, 1e-12).unwrap());
        let dim = cov.size();
        let expr = OperatorExpr::sum(vec![
            OperatorExpr::toeplitz(cov),
            OperatorExpr::scaled(lambda, OperatorExpr::identity(dim)),
        ])
        .unwrap();
        let jacobi = vec![1.0 + lambda; dim];
        let b: Vec<Complex64> =
            (0..dim).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();

        let (reference, ref_report) =
            conjugate_gradient(&expr, &b, &CgConfig::with_tol(1e-13)).unwrap();
        assert!(ref_report.converged);

        let cfg =
            CgConfig { tol: Some(1e-10), preconditioner: Some(jacobi), ..Default::default() };
        let mut iterates = Vec::new();
        let (_, report) = conjugate_gradient_traced(&expr, &b, &cfg, &mut iterates).unwrap();
        assert!(report.converged);
        let error_a_norm = |x: &[Complex64]| -> f64 {
            let e: Vec<Complex64> = x.iter().zip(&reference).map(|(a, b)| a - b).collect();
            let mut ae = vec![Complex64::default(); dim];
            expr.apply(&e, &mut ae);
            inner(&e, &ae).re.max(0.0).sqrt()
        };
        let norms: Vec<f64> = iterates.iter().map(|x| error_a_norm(x)).collect();
        for pair in norms.windows(2) {
            assert!(
                pair[1] <= pair[0] * (1.0 + 1e-12) + 1e-12 * norms[0],
                "error A-norm increased: {pair:?}"
            );
        }
        assert!(norms.last().unwrap() < &(1e-8 * norms[0]));
    }

    #[test]
    fn assembled_operator_is_hermitian_in_random_probes() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let coords: Vec<f64> = (0..80).map(|_| rng.gen_range(-0.8..0.8)).collect();
        let pts = crate::nufft::ScaledPoints::from_raw(&coords, 2, 1.0).unwrap();
        let cov = std::sync::Arc::new(build_empirical_covariance(&pts, 2, 1e-12).unwrap());
        let dim = cov.size();
        let grid = crate::grid::MultiIndexGrid::new(2, 2).unwrap();
        let s2: Vec<f64> =
            crate::grid::sobolev_diagonal(&grid, 1.5).unwrap().iter().map(|v| v * v).collect();
        let expr = OperatorExpr::sum(vec![
            OperatorExpr::toeplitz(cov),
            OperatorExpr::scaled(0.01, OperatorExpr::real_diagonal(s2)),
        ])
        .unwrap();
        for _ in 0..5 {
            let u: Vec<Complex64> =
                (0..dim).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
            let v: Vec<Complex64> =
                (0..dim).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
            let mut au = vec![Complex64::default(); dim];
            let mut av = vec![Complex64::default(); dim];
            expr.apply(&u, &mut au);
            expr.apply(&v, &mut av);
            let lhs = inner(&u, &av);
            let rhs = inner(&v, &au).conj();
            let bound = 1e-10 * norm(&u) * norm(&v);
            assert!((lhs - rhs).norm() <= bound, "asymmetry {}", (lhs - rhs).norm());
        }
    }

    #[test]
    fn error_paths() {
        let a = OperatorExpr::identity(3);
        // Non-finite right-hand side.
        let bad = vec![Complex64::new(f64::NAN, 0.0); 3];
        assert!(conjugate_gradient(&a, &bad, &CgConfig::default()).is_err());
        // Dimension mismatch.
        let short = vec![Complex64::default(); 2];
        assert!(conjugate_gradient(&a, &short, &CgConfig::default()).is_err());
        // Zero rhs: trivially converged.
        let zero = vec![Complex64::default(); 3];
        let (x, report) = conjugate_gradient(&a, &zero, &CgConfig::default()).unwrap();
        assert!(report.converged);
        assert!(x.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn non_convergence_is_reported_not_thrown() {
        // One iteration cap on a non-trivial system.
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let diag: Vec<f64> = (0..40).map(|i| 1.0 + i as f64 * 37.0).collect();
        let a = OperatorExpr::real_diagonal(diag);
        let b: Vec<Complex64> =
            (0..40).map(|_| Complex64::new(rng.gen::<f64>() + 0.5, 0.0)).collect();
        let cfg = CgConfig { tol: Some(1e-14), max_iter: Some(1), ..Default::default() };
        let (_, report) = conjugate_gradient(&a, &b, &cfg).unwrap();
        assert!(!report.converged);
        assert_eq!(report.iterations, 1);
        assert!(report.relative_residual > 1e-14);
    }
}
