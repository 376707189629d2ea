//! Lambda grid search with one-shot NUFFT assembly.
//!
//! The covariance, right-hand side, and physics term depend on the data but
//! not on lambda, so they are built once; each candidate lambda reuses them
//! with a diagonal shift and a CG solve warm-started from the previous
//! solution. Validation MSE is evaluated through the quadratic form
//! `theta* G_v theta - 2 Re<theta, b_v> + mean(y_v^2)` whose pieces
//! (the validation covariance `G_v` and rhs `b_v`) are themselves assembled
//! once by NUFFT, so the per-lambda cost is independent of the data size.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::FittedModel;
use crate::operator::LinearOperator;

use super::additive::{solve_additive, AdditiveSystem};
use super::{fit, EstimatorSpec, FitConfig, SampleSet, StandardSystem};

/// Result of a lambda sweep: the per-lambda validation table and solutions
/// on the training split, plus the winning model refit on the full data.
pub struct GridSearchOutcome {
    pub best_lambda: f64,
    /// `(lambda, validation MSE)` in the order given.
    pub table: Vec<(f64, f64)>,
    /// Training-split solution per lambda, same order as `table`.
    pub solutions: Vec<Vec<Complex64>>,
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
    /// Fit of the full dataset at `best_lambda`.
    pub model: FittedModel,
}

/// Deterministic holdout split: shuffle with a seeded generator, take the
/// first `round(frac * n)` rows (clamped to `1..n`) for validation.
pub fn holdout_split(n: usize, val_frac: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(val_frac > 0.0 && val_frac < 1.0) {
        return Err(Error::InvalidParameter(format!("validation fraction must be in (0, 1), got {val_frac}")));
    }
    if n < 2 {
        return Err(Error::InvalidParameter("holdout split needs n >= 2".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_val = ((val_frac * n as f64).round() as usize).clamp(1, n - 1);
    let mut val: Vec<usize> = order[..n_val].to_vec();
    let mut train: Vec<usize> = order[n_val..].to_vec();
    val.sort_unstable();
    train.sort_unstable();
    Ok((train, val))
}

/// Sweep `lambdas`, returning validation MSEs, the argmin (ties broken
/// toward larger lambda), and the best-lambda model refit on all rows.
pub fn grid_search_lambda(
    samples: &SampleSet,
    lambdas: &[f64],
    spec: &EstimatorSpec,
    m: usize,
    val_frac: f64,
    seed: u64,
    cfg: &FitConfig,
) -> Result<GridSearchOutcome> {
    if lambdas.is_empty() {
        return Err(Error::InvalidParameter("lambda grid must be nonempty".into()));
    }
    for &l in lambdas {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda grid entries must be > 0, got {l}")));
        }
    }
    spec.validate_relaxed(samples, m, false)?;

    let (train_indices, val_indices) = holdout_split(samples.len(), val_frac, seed)?;
    let train = samples.subset(&train_indices)?;
    let val = samples.subset(&val_indices)?;
    let val_mean_sq: f64 =
        val.y().iter().map(|v| v * v).sum::<f64>() / val.len() as f64;

    // The validation pieces are the plain Gram and rhs of the holdout rows
    // (no regularizer, no physics term): exactly the data that determines
    // ||B theta - y||^2 / n_v.
    enum Assembled {
        Standard { train: StandardSystem, val_gram: crate::operator::OperatorExpr, val_rhs: Vec<Complex64> },
        Additive { train: AdditiveSystem, val: AdditiveSystem },
    }

    let mut assembled = match spec {
        EstimatorSpec::Additive { .. } => Assembled::Additive {
            train: AdditiveSystem::assemble(&train, m, cfg)?,
            val: AdditiveSystem::assemble(&val, m, cfg)?,
        },
        _ => {
            let vpts = val.scaled()?;
            let gram = crate::toeplitz::build_empirical_covariance(&vpts, m, cfg.nufft_tol)?;
            let val_rhs = super::rhs_vector_scaled(&vpts, val.y(), m, cfg.nufft_tol)?;
            Assembled::Standard {
                train: StandardSystem::assemble(&train, spec, m, cfg)?,
                val_gram: crate::operator::OperatorExpr::toeplitz(std::sync::Arc::new(gram)),
                val_rhs,
            }
        }
    };

    let mut table = Vec::with_capacity(lambdas.len());
    let mut solutions: Vec<Vec<Complex64>> = Vec::with_capacity(lambdas.len());
    let mut warm: Option<Vec<Complex64>> = None;
    for &lambda in lambdas {
        let (theta, mse) = match &mut assembled {
            Assembled::Standard { train, val_gram, val_rhs } => {
                let theta = train.solve(lambda, warm.as_deref(), &cfg.cg)?.0;
                let mse = validation_mse(val_gram, val_rhs, val_mean_sq, &theta);
                (theta, mse)
            }
            Assembled::Additive { train, val } => {
                train.with_lambda(lambda);
                let theta = solve_additive(train, warm.as_deref(), &cfg.cg)?.0;
                val.with_lambda(0.0);
                let rhs = val.rhs.clone();
                let mse = validation_mse(val, &rhs, val_mean_sq, &theta);
                (theta, mse)
            }
        };
        table.push((lambda, mse));
        warm = Some(theta.clone());
        solutions.push(theta);
    }

    let mut best = 0usize;
    for i in 1..table.len() {
        let (l, mse) = table[i];
        let (bl, bmse) = table[best];
        if mse < bmse || (mse == bmse && l > bl) {
            best = i;
        }
    }
    let best_lambda = table[best].0;
    let model = fit(samples, &spec.with_lambda(best_lambda), m, cfg)?;
    Ok(GridSearchOutcome { best_lambda, table, solutions, train_indices, val_indices, model })
}

/// `||B theta - y||^2 / n_v` through the assembled quadratic-form pieces.
fn validation_mse(
    gram: &dyn LinearOperator,
    rhs: &[Complex64],
    mean_sq: f64,
    theta: &[Complex64],
) -> f64 {
    let mut gt = vec![Complex64::default(); theta.len()];
    gram.apply(theta, &mut gt);
    let quad: f64 = theta.iter().zip(&gt).map(|(a, b)| (a.conj() * b).re).sum();
    let cross: f64 = theta.iter().zip(rhs).map(|(t, b)| (t.conj() * b).re).sum();
    (quad - 2.0 * cross + mean_sq).max(0.0)
}
