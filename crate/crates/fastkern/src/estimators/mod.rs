//! The fitting procedures: Sobolev, low-bias, physics-informed (analytic box
//! or collocation), and additive kernel regression, plus prediction, the
//! dense small-scale oracle, and lambda grid search.
//!
//! All fast paths share one pipeline: a type-1 NUFFT builds the right-hand
//! side `Phi* Y / n`, another builds the empirical covariance as a Toeplitz
//! generating tensor, and preconditioned CG solves the assembled operator
//! expression. Nothing ever materializes `Phi`.

mod additive;
mod dense;
mod gridsearch;

pub use dense::fit_dense_oracle;
pub use gridsearch::{grid_search_lambda, GridSearchOutcome};

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{self, BoxDomain, DiffOperatorSpec, MultiIndexGrid};
use crate::model::{FittedModel, RegularizerKind};
use crate::nufft::{self, NufftPlan, ScaledPoints, Type1Accumulator};
use crate::operator::{LinearOperator, OperatorExpr};
use crate::solvers::{self, CgConfig};
use crate::toeplitz::{build_empirical_covariance, ToeplitzOperator};
use crate::EstimatorKind;

/// Training data: `n` points in `R^d` with real responses and the
/// half-period `L` of the ambient hypercube `[-L, L]^d`.
#[derive(Debug, Clone)]
pub struct SampleSet {
    x: Vec<f64>,
    y: Vec<f64>,
    d: usize,
    l: f64,
}

impl SampleSet {
    pub fn new(x: Vec<f64>, y: Vec<f64>, d: usize, l: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension d must be >= 1".into()));
        }
        if y.is_empty() || x.len() != y.len() * d {
            return Err(Error::DimensionMismatch { expected: y.len() * d, got: x.len() });
        }
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidParameter(format!("half-period L must be > 0, got {l}")));
        }
        for (i, &v) in x.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("coordinate {i}")));
            }
            if v.abs() > l {
                return Err(Error::PointOutOfRange { index: i, value: v });
            }
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("response {i}")));
        }
        Ok(SampleSet { x, y, d, l })
    }

    /// Construct with `L = max(1, max_j ||X_j||_inf)`.
    pub fn with_default_half_period(x: Vec<f64>, y: Vec<f64>, d: usize) -> Result<Self> {
        let l = grid::default_half_period(&x);
        Self::new(x, y, d, l)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn half_period(&self) -> f64 {
        self.l
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.x[j * self.d..(j + 1) * self.d]
    }

    /// Rows selected by index, same `L`.
    pub fn subset(&self, indices: &[usize]) -> Result<SampleSet> {
        let mut x = Vec::with_capacity(indices.len() * self.d);
        let mut y = Vec::with_capacity(indices.len());
        for &j in indices {
            x.extend_from_slice(self.point(j));
            y.push(self.y[j]);
        }
        SampleSet::new(x, y, self.d, self.l)
    }

    pub(crate) fn scaled(&self) -> Result<ScaledPoints> {
        ScaledPoints::from_raw(&self.x, self.d, self.l)
    }

    /// One coordinate column as 1-D scaled points (additive models).
    pub(crate) fn scaled_coordinate(&self, coord: usize) -> Result<ScaledPoints> {
        let col: Vec<f64> = (0..self.len()).map(|j| self.x[j * self.d + coord]).collect();
        ScaledPoints::from_raw(&col, 1, self.l)
    }
}

/// Estimator kind plus its hyperparameters (everything except the cutoff).
#[derive(Debug, Clone)]
pub enum EstimatorSpec {
    Sobolev { s: f64, lambda: f64 },
    LowBias { s: f64, lambda: f64 },
    PikBox { s: f64, lambda: f64, mu: f64, op: DiffOperatorSpec, domain: BoxDomain },
    PikCollocation { s: f64, lambda: f64, mu: f64, op: DiffOperatorSpec, collocation: Vec<f64> },
    Additive { s: f64, lambda: f64 },
}

impl EstimatorSpec {
    pub fn kind(&self) -> EstimatorKind {
        match self {
            EstimatorSpec::Sobolev { .. } => EstimatorKind::Sobolev,
            EstimatorSpec::LowBias { .. } => EstimatorKind::LowBias,
            EstimatorSpec::PikBox { .. } => EstimatorKind::PikBox,
            EstimatorSpec::PikCollocation { .. } => EstimatorKind::PikCollocation,
            EstimatorSpec::Additive { .. } => EstimatorKind::Additive,
        }
    }

    pub fn s(&self) -> f64 {
        match self {
            EstimatorSpec::Sobolev { s, .. }
            | EstimatorSpec::LowBias { s, .. }
            | EstimatorSpec::PikBox { s, .. }
            | EstimatorSpec::PikCollocation { s, .. }
            | EstimatorSpec::Additive { s, .. } => *s,
        }
    }

    pub fn lambda(&self) -> f64 {
        match self {
            EstimatorSpec::Sobolev { lambda, .. }
            | EstimatorSpec::LowBias { lambda, .. }
            | EstimatorSpec::PikBox { lambda, .. }
            | EstimatorSpec::PikCollocation { lambda, .. }
            | EstimatorSpec::Additive { lambda, .. } => *lambda,
        }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            EstimatorSpec::Sobolev { lambda: l, .. }
            | EstimatorSpec::LowBias { lambda: l, .. }
            | EstimatorSpec::PikBox { lambda: l, .. }
            | EstimatorSpec::PikCollocation { lambda: l, .. }
            | EstimatorSpec::Additive { lambda: l, .. } => *l = lambda,
        }
        out
    }

    pub fn mu(&self) -> Option<f64> {
        match self {
            EstimatorSpec::PikBox { mu, .. } | EstimatorSpec::PikCollocation { mu, .. } => Some(*mu),
            _ => None,
        }
    }

    fn regularizer(&self) -> RegularizerKind {
        match self {
            EstimatorSpec::Sobolev { .. } | EstimatorSpec::PikBox { .. } | EstimatorSpec::PikCollocation { .. } => {
                RegularizerKind::SobolevWeights
            }
            EstimatorSpec::LowBias { .. } | EstimatorSpec::Additive { .. } => RegularizerKind::Identity,
        }
    }

    fn validate(&self, samples: &SampleSet, m: usize) -> Result<()> {
        self.validate_relaxed(samples, m, false)
    }

    /// The dense oracle admits `lambda = 0` (plain least squares when the
    /// covariance is PD); the iterative fits do not.
    pub(crate) fn validate_relaxed(
        &self,
        samples: &SampleSet,
        m: usize,
        allow_zero_lambda: bool,
    ) -> Result<()> {
        let d = samples.dim();
        let s = self.s();
        let lambda = self.lambda();
        if m == 0 {
            return Err(Error::InvalidParameter("cutoff m must be >= 1".into()));
        }
        let lambda_ok = if allow_zero_lambda { lambda >= 0.0 } else { lambda > 0.0 };
        if !lambda_ok || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("invalid lambda {lambda}")));
        }
        match self {
            EstimatorSpec::Additive { .. } => {
                if !(s > 0.5) {
                    return Err(Error::InvalidParameter(format!("additive fit requires s > 1/2, got {s}")));
                }
            }
            _ => {
                if !(s > d as f64 / 2.0) {
                    return Err(Error::InvalidParameter(format!(
                        "fit requires s > d/2 = {}, got {s}",
                        d as f64 / 2.0
                    )));
                }
            }
        }
        match self {
            EstimatorSpec::PikBox { mu, op, domain, .. } => {
                if !(*mu >= 0.0) {
                    return Err(Error::InvalidParameter(format!("mu must be >= 0, got {mu}")));
                }
                if op.dim() != d || domain.dim() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: op.dim().min(domain.dim()) });
                }
                if (domain.half_period() - samples.half_period()).abs()
                    > 1e-12 * samples.half_period().max(1.0)
                {
                    return Err(Error::InvalidParameter(format!(
                        "box half-period {} does not match the samples' L = {}",
                        domain.half_period(),
                        samples.half_period()
                    )));
                }
            }
            EstimatorSpec::PikCollocation { mu, op, collocation, .. } => {
                if !(*mu >= 0.0) {
                    return Err(Error::InvalidParameter(format!("mu must be >= 0, got {mu}")));
                }
                if op.dim() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: op.dim() });
                }
                if collocation.is_empty() || collocation.len() % d != 0 {
                    return Err(Error::InvalidParameter(
                        "collocation points must be a nonempty n_r x d array".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Tolerances for the fitting pipeline. The covariance/rhs NUFFT tolerance
/// defaults tighter (1e-10) than the CG tolerance (1e-8) so transform error
/// never dominates.
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub nufft_tol: f64,
    pub cg: CgConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { nufft_tol: 1e-10, cg: CgConfig::default() }
    }
}

/// `v = Phi* Y / n`, one type-1 NUFFT with weights `Y/n`. Computed as the
/// conjugated +i-convention transform, matching the literal feature-map
/// algebra; Hermitian-symmetric for real responses.
pub fn rhs_vector(samples: &SampleSet, m: usize, tol: f64) -> Result<Vec<Complex64>> {
    let pts = samples.scaled()?;
    rhs_vector_scaled(&pts, samples.y(), m, tol)
}

pub(crate) fn rhs_vector_scaled(
    pts: &ScaledPoints,
    y: &[f64],
    m: usize,
    tol: f64,
) -> Result<Vec<Complex64>> {
    let plan = NufftPlan::uniform(pts.dim(), m, tol)?;
    let mut acc = Type1Accumulator::new(&plan);
    acc.add_batch_real(pts, y)?;
    let inv_n = 1.0 / pts.len() as f64;
    Ok(acc.finish().iter().map(|v| v.conj() * inv_n).collect())
}

/// Assembled pieces of a standard (non-additive) system, reusable across
/// lambda values: the covariance, the right-hand side, the regularizer
/// diagonal, and the optional physics term.
pub(crate) struct StandardSystem {
    pub cov: Arc<ToeplitzOperator>,
    pub rhs: Vec<Complex64>,
    /// Diagonal of `M* M`.
    pub reg_diag: Vec<f64>,
    /// `(mu, D diagonal, C-like Toeplitz operator)`.
    pub physics: Option<(f64, Vec<Complex64>, Arc<ToeplitzOperator>)>,
}

impl StandardSystem {
    pub fn assemble(samples: &SampleSet, spec: &EstimatorSpec, m: usize, cfg: &FitConfig) -> Result<Self> {
        let d = samples.dim();
        let grid = MultiIndexGrid::new(d, m)?;
        let pts = samples.scaled()?;
        let cov = Arc::new(build_empirical_covariance(&pts, m, cfg.nufft_tol)?);
        let rhs = rhs_vector_scaled(&pts, samples.y(), m, cfg.nufft_tol)?;
        let reg_diag = spec.regularizer().diagonal_squared(&grid, spec.s())?;
        let physics = match spec {
            EstimatorSpec::PikBox { mu, op, domain, .. } => {
                let diag = grid::diff_op_diagonal(&grid, op, samples.half_period())?;
                // The operator convention is T[k1,k2] = g(k2-k1); the box
                // matrix is C[k1,k2] = C_hat(k1-k2), so feed the conjugate
                // (= index-reversed) tensor.
                let g: Vec<Complex64> =
                    grid::box_fourier_generating(d, m, domain)?.iter().map(|v| v.conj()).collect();
                let c_op = Arc::new(ToeplitzOperator::from_generating(g, d, m, true)?);
                Some((*mu, diag, c_op))
            }
            EstimatorSpec::PikCollocation { mu, op, collocation, .. } => {
                let diag = grid::diff_op_diagonal(&grid, op, samples.half_period())?;
                let cpts = ScaledPoints::from_raw(collocation, d, samples.half_period())?;
                let gram = Arc::new(build_empirical_covariance(&cpts, m, cfg.nufft_tol)?);
                Some((*mu, diag, gram))
            }
            _ => None,
        };
        Ok(StandardSystem { cov, rhs, reg_diag, physics })
    }

    /// `Sigma_hat + lambda diag(M*M) [+ mu D* T D]` at the given lambda.
    pub fn operator(&self, lambda: f64) -> Result<OperatorExpr> {
        let mut terms = vec![
            OperatorExpr::toeplitz(self.cov.clone()),
            OperatorExpr::scaled(lambda, OperatorExpr::real_diagonal(self.reg_diag.clone())),
        ];
        if let Some((mu, diag, top)) = &self.physics {
            if *mu > 0.0 {
                let sandwich =
                    OperatorExpr::sandwich(diag.clone(), OperatorExpr::toeplitz(top.clone()))?;
                terms.push(OperatorExpr::scaled(*mu, sandwich));
            }
        }
        OperatorExpr::sum(terms)
    }

    /// Exact system diagonal (the Jacobi preconditioner): `diag(Sigma_hat) =
    /// g(0) = 1`, plus `lambda` times the regularizer diagonal, plus the
    /// physics term's `mu |D_k|^2 T[k,k]`.
    pub fn jacobi_diagonal(&self, lambda: f64) -> Vec<f64> {
        let cov_diag = center_value(&self.cov).re;
        let mut diag: Vec<f64> = self.reg_diag.iter().map(|&r| cov_diag + lambda * r).collect();
        if let Some((mu, dvec, top)) = &self.physics {
            if *mu > 0.0 {
                let t_diag = center_value(top).re;
                for (out, dk) in diag.iter_mut().zip(dvec) {
                    *out += mu * dk.norm_sqr() * t_diag;
                }
            }
        }
        diag
    }

    pub fn solve(&self, lambda: f64, warm: Option<&[Complex64]>, cg: &CgConfig) -> Result<(Vec<Complex64>, solvers::SolveReport)> {
        let op = self.operator(lambda)?;
        debug_assert!(op.hermitian_psd());
        let mut cfg = cg.clone();
        if cfg.preconditioner.is_none() {
            cfg.preconditioner = Some(solvers::jacobi_preconditioner(&self.jacobi_diagonal(lambda))?);
        }
        match warm {
            Some(x0) => solvers::conjugate_gradient_from(&op, &self.rhs, x0, &cfg),
            None => solvers::conjugate_gradient(&op, &self.rhs, &cfg),
        }
    }
}

/// `T[k, k]`, the generating tensor's center entry times the scale.
fn center_value(op: &ToeplitzOperator) -> Complex64 {
    let ext = MultiIndexGrid::new(op.dim(), 2 * op.cutoff()).expect("validated");
    op.generating()[ext.flatten(&vec![0i64; op.dim()])] * op.scale()
}

/// Fit any estimator kind at cutoff `m`.
pub fn fit(samples: &SampleSet, spec: &EstimatorSpec, m: usize, cfg: &FitConfig) -> Result<FittedModel> {
    spec.validate(samples, m)?;
    match spec {
        EstimatorSpec::Additive { .. } => additive::fit_additive_system(samples, spec, m, cfg),
        _ => {
            let system = StandardSystem::assemble(samples, spec, m, cfg)?;
            let (theta, report) = system.solve(spec.lambda(), None, &cfg.cg)?;
            let (diff_op, domain) = match spec {
                EstimatorSpec::PikBox { op, domain, .. } => (Some(op.clone()), Some(domain.clone())),
                EstimatorSpec::PikCollocation { op, .. } => (Some(op.clone()), None),
                _ => (None, None),
            };
            let model = FittedModel {
                kind: spec.kind(),
                d: samples.dim(),
                m,
                l: samples.half_period(),
                s: spec.s(),
                lambda: spec.lambda(),
                mu: spec.mu(),
                diff_op,
                domain,
                theta,
                report,
            };
            model.validate()?;
            Ok(model)
        }
    }
}

/// Sobolev kernel regression: `(Sigma_hat + lambda S^2) theta = Phi* Y / n`.
pub fn fit_sobolev(samples: &SampleSet, s: f64, lambda: f64, m: usize, cfg: &FitConfig) -> Result<FittedModel> {
    fit(samples, &EstimatorSpec::Sobolev { s, lambda }, m, cfg)
}

/// Low-bias variant with the identity regularizer:
/// `(Sigma_hat + lambda I) theta = Phi* Y / n`.
pub fn fit_lowbias(samples: &SampleSet, s: f64, lambda: f64, m: usize, cfg: &FitConfig) -> Result<FittedModel> {
    fit(samples, &EstimatorSpec::LowBias { s, lambda }, m, cfg)
}

/// Physics-informed regression on an axis-aligned box domain:
/// `(Sigma_hat + lambda S^2 + mu D* C D) theta = Phi* Y / n` with the
/// analytic box Fourier matrix `C`.
pub fn fit_pik_box(
    samples: &SampleSet,
    s: f64,
    lambda: f64,
    mu: f64,
    op: &DiffOperatorSpec,
    domain: &BoxDomain,
    m: usize,
    cfg: &FitConfig,
) -> Result<FittedModel> {
    fit(
        samples,
        &EstimatorSpec::PikBox { s, lambda, mu, op: op.clone(), domain: domain.clone() },
        m,
        cfg,
    )
}

/// Physics-informed regression with the PDE penalty sampled at collocation
/// points: the analytic `C` is replaced by `(Phi_r)* Phi_r / n_r`.
pub fn fit_pik_collocation(
    samples: &SampleSet,
    collocation: &[f64],
    s: f64,
    lambda: f64,
    mu: f64,
    op: &DiffOperatorSpec,
    m: usize,
    cfg: &FitConfig,
) -> Result<FittedModel> {
    fit(
        samples,
        &EstimatorSpec::PikCollocation {
            s,
            lambda,
            mu,
            op: op.clone(),
            collocation: collocation.to_vec(),
        },
        m,
        cfg,
    )
}

/// Additive model: d univariate expansions coupled through cross-covariance
/// blocks, `(Sigma_hat + lambda I) theta = (Phi_1* Y, ..., Phi_d* Y) / n`.
pub fn fit_additive(samples: &SampleSet, s: f64, lambda: f64, m: usize, cfg: &FitConfig) -> Result<FittedModel> {
    fit(samples, &EstimatorSpec::Additive { s, lambda }, m, cfg)
}

/// Prediction values plus the size of the discarded imaginary part.
#[derive(Debug, Clone)]
pub struct PredictOutput {
    pub values: Vec<f64>,
    /// `||imag|| / ||real||` of the complex evaluations; above
    /// [`IMAG_WARN_THRESHOLD`] for a real-response fit indicates solver
    /// trouble.
    pub imag_ratio: f64,
    pub imag_warning: bool,
}

pub const IMAG_WARN_THRESHOLD: f64 = 1e-6;

/// Evaluate `sum_k theta_k exp(i pi <k, x> / (2L))` at the test points via
/// type-2 NUFFT (summed over coordinate blocks for additive models) and
/// return the real part.
pub fn predict(model: &FittedModel, xtest: &[f64]) -> Result<Vec<f64>> {
    Ok(predict_detailed(model, xtest, 1e-10)?.values)
}

pub fn predict_detailed(model: &FittedModel, xtest: &[f64], tol: f64) -> Result<PredictOutput> {
    model.validate()?;
    let d = model.d;
    if xtest.len() % d != 0 {
        return Err(Error::DimensionMismatch { expected: d, got: xtest.len() });
    }
    let n_t = xtest.len() / d;
    let complex_values = match model.kind {
        EstimatorKind::Additive => {
            let mut total = vec![Complex64::default(); n_t];
            let block = 2 * model.m + 1;
            let plan = NufftPlan::uniform(1, model.m, tol)?;
            for coord in 0..d {
                let col: Vec<f64> = (0..n_t).map(|j| xtest[j * d + coord]).collect();
                let pts = ScaledPoints::from_raw(&col, 1, model.l)?;
                let vals = nufft::nufft_type2(&pts, &model.theta[coord * block..(coord + 1) * block], &plan)?;
                for (t, v) in total.iter_mut().zip(vals) {
                    *t += v;
                }
            }
            total
        }
        _ => {
            let pts = ScaledPoints::from_raw(xtest, d, model.l)?;
            let plan = NufftPlan::uniform(d, model.m, tol)?;
            nufft::nufft_type2(&pts, &model.theta, &plan)?
        }
    };
    let real_norm: f64 = complex_values.iter().map(|v| v.re * v.re).sum::<f64>().sqrt();
    let imag_norm: f64 = complex_values.iter().map(|v| v.im * v.im).sum::<f64>().sqrt();
    let imag_ratio = if real_norm > 0.0 { imag_norm / real_norm } else { imag_norm };
    Ok(PredictOutput {
        values: complex_values.iter().map(|v| v.re).collect(),
        imag_ratio,
        imag_warning: imag_ratio > IMAG_WARN_THRESHOLD,
    })
}
