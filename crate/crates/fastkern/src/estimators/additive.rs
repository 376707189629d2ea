//! Additive-model block system.
//!
//! The block operator has d diagonal blocks `Phi_l* Phi_l / n` (1-D Toeplitz,
//! one 1-D NUFFT each) and dense off-diagonal blocks `Phi_l1* Phi_l2 / n`,
//! each computed as a single 2-D type-1 NUFFT of unit weights at the points
//! `(-t_{j,l1}, t_{j,l2})`. Only the upper triangle is stored; the mirror
//! blocks are its conjugate transposes.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::FittedModel;
use crate::nufft::{NufftPlan, ScaledPoints, Type1Accumulator};
use crate::operator::LinearOperator;
use crate::solvers::{self, CgConfig, SolveReport};
use crate::toeplitz::{build_empirical_covariance, ToeplitzOperator};

use super::{EstimatorSpec, FitConfig, SampleSet};

pub(crate) struct AdditiveSystem {
    d: usize,
    block: usize,
    diag: Vec<Arc<ToeplitzOperator>>,
    /// Upper-triangle blocks in (l1, l2) order with l1 < l2, row-major
    /// `block x block`.
    off: Vec<Vec<Complex64>>,
    lambda: f64,
    pub rhs: Vec<Complex64>,
}

impl AdditiveSystem {
    pub fn assemble(samples: &SampleSet, m: usize, cfg: &FitConfig) -> Result<Self> {
        let d = samples.dim();
        let n = samples.len();
        let block = 2 * m + 1;
        let mut columns = Vec::with_capacity(d);
        for coord in 0..d {
            columns.push(samples.scaled_coordinate(coord)?);
        }
        let mut diag = Vec::with_capacity(d);
        let mut rhs = Vec::with_capacity(d * block);
        for pts in &columns {
            diag.push(Arc::new(build_empirical_covariance(pts, m, cfg.nufft_tol)?));
            rhs.extend(super::rhs_vector_scaled(pts, samples.y(), m, cfg.nufft_tol)?);
        }
        let mut off = Vec::with_capacity(d * (d - 1) / 2);
        if d > 1 {
            let plan = NufftPlan::uniform(2, m, cfg.nufft_tol)?;
            for l1 in 0..d {
                for l2 in (l1 + 1)..d {
                    let mut coords = Vec::with_capacity(2 * n);
                    for j in 0..n {
                        coords.push(-columns[l1].coords()[j]);
                        coords.push(columns[l2].coords()[j]);
                    }
                    let pair = ScaledPoints::new(coords, 2)?;
                    let mut acc = Type1Accumulator::new(&plan);
                    acc.add_batch_uniform(&pair, 1.0 / n as f64)?;
                    // 2-D modes (k1, k2) with k2 fastest = row-major block.
                    off.push(acc.finish());
                }
            }
        }
        Ok(AdditiveSystem { d, block, diag, off, lambda: 0.0, rhs })
    }

    pub fn with_lambda(&mut self, lambda: f64) {
        self.lambda = lambda;
    }

    fn off_index(&self, l1: usize, l2: usize) -> usize {
        debug_assert!(l1 < l2);
        // Position of (l1, l2) in the row-major upper triangle.
        l1 * self.d - l1 * (l1 + 1) / 2 + (l2 - l1 - 1)
    }

    pub fn jacobi_diagonal(&self) -> Vec<f64> {
        // diag(Phi_l* Phi_l / n) = g_l(0) = 1 up to transform error.
        vec![1.0 + self.lambda; self.d * self.block]
    }
}

impl LinearOperator for AdditiveSystem {
    fn dim(&self) -> usize {
        self.d * self.block
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let b = self.block;
        let mut tmp = vec![Complex64::default(); b];
        y.fill(Complex64::default());
        for l1 in 0..self.d {
            let out = l1 * b;
            self.diag[l1].matvec(&x[out..out + b], &mut tmp).expect("block size fixed");
            for (o, (&t, &xi)) in y[out..out + b].iter_mut().zip(tmp.iter().zip(&x[out..out + b])) {
                *o = t + xi * self.lambda;
            }
            for l2 in 0..self.d {
                if l2 == l1 {
                    continue;
                }
                let xin = &x[l2 * b..(l2 + 1) * b];
                if l1 < l2 {
                    let blk = &self.off[self.off_index(l1, l2)];
                    for r in 0..b {
                        let mut acc = Complex64::default();
                        for (c, &xc) in xin.iter().enumerate() {
                            acc += blk[r * b + c] * xc;
                        }
                        y[out + r] += acc;
                    }
                } else {
                    // Mirror block: conjugate transpose of (l2, l1).
                    let blk = &self.off[self.off_index(l2, l1)];
                    for r in 0..b {
                        let mut acc = Complex64::default();
                        for (c, &xc) in xin.iter().enumerate() {
                            acc += blk[c * b + r].conj() * xc;
                        }
                        y[out + r] += acc;
                    }
                }
            }
        }
    }

    fn hermitian_psd(&self) -> bool {
        self.lambda >= 0.0
    }
}

pub(crate) fn fit_additive_system(
    samples: &SampleSet,
    spec: &EstimatorSpec,
    m: usize,
    cfg: &FitConfig,
) -> Result<FittedModel> {
    let mut system = AdditiveSystem::assemble(samples, m, cfg)?;
    system.with_lambda(spec.lambda());
    let (theta, report) = solve_additive(&system, None, &cfg.cg)?;
    let model = FittedModel {
        kind: crate::EstimatorKind::Additive,
        d: samples.dim(),
        m,
        l: samples.half_period(),
        s: spec.s(),
        lambda: spec.lambda(),
        mu: None,
        diff_op: None,
        domain: None,
        theta,
        report,
    };
    model.validate()?;
    Ok(model)
}

pub(crate) fn solve_additive(
    system: &AdditiveSystem,
    warm: Option<&[Complex64]>,
    cg: &CgConfig,
) -> Result<(Vec<Complex64>, SolveReport)> {
    if !(system.lambda > 0.0) {
        return Err(Error::InvalidParameter("additive solve requires lambda > 0".into()));
    }
    let mut cfg = cg.clone();
    if cfg.preconditioner.is_none() {
        cfg.preconditioner = Some(solvers::jacobi_preconditioner(&system.jacobi_diagonal())?);
    }
    match warm {
        Some(x0) => solvers::conjugate_gradient_from(system, &system.rhs, x0, &cfg),
        None => solvers::conjugate_gradient(system, &system.rhs, &cfg),
    }
}
