//! Dense small-scale reference fit.
//!
//! Materializes the design matrix row by row through the feature map, forms
//! the normal equations densely (including the physics term entrywise), and
//! solves by LU factorization. This is the independent oracle every fast
//! path is checked against; size caps keep it honest about its scale.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{self, MultiIndexGrid};
use crate::model::FittedModel;
use crate::solvers::SolveReport;
use crate::EstimatorKind;

use super::{EstimatorSpec, SampleSet};

const MAX_DENSE_DIM: usize = 2000;
const MAX_DENSE_SAMPLES: usize = 5000;

/// Reference solution of the same normal equations the fast paths solve.
pub fn fit_dense_oracle(samples: &SampleSet, spec: &EstimatorSpec, m: usize) -> Result<FittedModel> {
    spec.validate_relaxed(samples, m, true)?;
    let d = samples.dim();
    let n = samples.len();
    let dim = FittedModel::expected_theta_len(spec.kind(), d, m);
    if dim > MAX_DENSE_DIM {
        return Err(Error::SizeCapExceeded(format!("coefficient dimension {dim} > {MAX_DENSE_DIM}")));
    }
    if n > MAX_DENSE_SAMPLES {
        return Err(Error::SizeCapExceeded(format!("sample count {n} > {MAX_DENSE_SAMPLES}")));
    }

    // Row features: for row j, entry a is phi_a(X_j) (standard) or the
    // concatenated per-coordinate 1-D feature maps (additive). The normal
    // equations then read A[a,b] = mean_j feat[a] conj(feat[b]),
    // v[a] = mean_j feat[a] Y_j.
    let l = samples.half_period();
    let features: Box<dyn Fn(usize) -> Result<Vec<Complex64>>> = match spec.kind() {
        EstimatorKind::Additive => {
            let block_grid = MultiIndexGrid::new(1, m)?;
            Box::new(move |j| {
                let pt = samples.point(j);
                let mut row = Vec::with_capacity(dim);
                for &c in pt {
                    row.extend(grid::feature_map(&[c], &block_grid, l)?);
                }
                Ok(row)
            })
        }
        _ => {
            let g = MultiIndexGrid::new(d, m)?;
            Box::new(move |j| grid::feature_map(samples.point(j), &g, l))
        }
    };

    let mut a = DMatrix::<Complex64>::zeros(dim, dim);
    let mut v = DVector::<Complex64>::zeros(dim);
    let inv_n = 1.0 / n as f64;
    for j in 0..n {
        let feat = features(j)?;
        let yj = samples.y()[j];
        for r in 0..dim {
            v[r] += feat[r] * yj * inv_n;
            for c in 0..dim {
                a[(r, c)] += feat[r] * feat[c].conj() * inv_n;
            }
        }
    }

    // Regularizer diagonal.
    let lambda = spec.lambda();
    match spec.kind() {
        EstimatorKind::Additive => {
            for r in 0..dim {
                a[(r, r)] += Complex64::new(lambda, 0.0);
            }
        }
        _ => {
            let g = MultiIndexGrid::new(d, m)?;
            let reg = spec.regularizer().diagonal_squared(&g, spec.s())?;
            for r in 0..dim {
                a[(r, r)] += Complex64::new(lambda * reg[r], 0.0);
            }
        }
    }

    // Physics term, entrywise: mu * conj(D_k1) C[k1, k2] D_k2 with
    // C[k1, k2] = C_hat(k1 - k2) (box) or the collocation Gram.
    match spec {
        EstimatorSpec::PikBox { mu, op, domain, .. } if *mu > 0.0 => {
            let g = MultiIndexGrid::new(d, m)?;
            let ext = MultiIndexGrid::new(d, 2 * m)?;
            let diag = grid::diff_op_diagonal(&g, op, l)?;
            let c_hat = grid::box_fourier_generating(d, m, domain)?;
            let mut k1 = vec![0i64; d];
            let mut k2 = vec![0i64; d];
            for r in 0..dim {
                g.unflatten_into(r, &mut k1);
                for c in 0..dim {
                    g.unflatten_into(c, &mut k2);
                    let q: Vec<i64> = k1.iter().zip(&k2).map(|(a, b)| a - b).collect();
                    a[(r, c)] += diag[r].conj() * c_hat[ext.flatten(&q)] * diag[c] * *mu;
                }
            }
        }
        EstimatorSpec::PikCollocation { mu, op, collocation, .. } if *mu > 0.0 => {
            let n_r = collocation.len() / d;
            if n_r > MAX_DENSE_SAMPLES {
                return Err(Error::SizeCapExceeded(format!(
                    "collocation count {n_r} > {MAX_DENSE_SAMPLES}"
                )));
            }
            let g = MultiIndexGrid::new(d, m)?;
            let diag = grid::diff_op_diagonal(&g, op, l)?;
            let mut gram = DMatrix::<Complex64>::zeros(dim, dim);
            let inv_nr = 1.0 / n_r as f64;
            for j in 0..n_r {
                let feat = grid::feature_map(&collocation[j * d..(j + 1) * d], &g, l)?;
                for r in 0..dim {
                    for c in 0..dim {
                        gram[(r, c)] += feat[r] * feat[c].conj() * inv_nr;
                    }
                }
            }
            for r in 0..dim {
                for c in 0..dim {
                    a[(r, c)] += diag[r].conj() * gram[(r, c)] * diag[c] * *mu;
                }
            }
        }
        _ => {}
    }

    let theta_vec = a
        .clone()
        .lu()
        .solve(&v)
        .ok_or_else(|| Error::InvalidParameter("dense normal equations are singular".into()))?;

    // Residual for the report.
    let resid = (&a * &theta_vec) - &v;
    let rel = resid.norm() / v.norm().max(f64::MIN_POSITIVE);
    let theta: Vec<Complex64> = theta_vec.iter().copied().collect();
    let (diff_op, domain) = match spec {
        EstimatorSpec::PikBox { op, domain, .. } => (Some(op.clone()), Some(domain.clone())),
        EstimatorSpec::PikCollocation { op, .. } => (Some(op.clone()), None),
        _ => (None, None),
    };
    let model = FittedModel {
        kind: spec.kind(),
        d,
        m,
        l,
        s: spec.s(),
        lambda,
        mu: spec.mu(),
        diff_op,
        domain,
        theta,
        report: SolveReport { iterations: 0, relative_residual: rel, converged: true },
    };
    model.validate()?;
    Ok(model)
}
