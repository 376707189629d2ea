//! Fitted models and their on-disk JSON format (`fastkern-model-v1`).

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoxDomain, DiffOperatorSpec, MultiIndexGrid};
use crate::solvers::SolveReport;
use crate::EstimatorKind;

/// Which coefficient norm regularizes the fit: Sobolev weights
/// `diag(1 + ||k||^2s)` or the plain identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularizerKind {
    SobolevWeights,
    Identity,
}

impl RegularizerKind {
    /// Diagonal of `M* M` on the grid.
    pub fn diagonal_squared(&self, grid: &MultiIndexGrid, s: f64) -> Result<Vec<f64>> {
        match self {
            RegularizerKind::SobolevWeights => {
                let diag = crate::grid::sobolev_diagonal(grid, s)?;
                Ok(diag.iter().map(|v| v * v).collect())
            }
            RegularizerKind::Identity => Ok(vec![1.0; grid.size()]),
        }
    }
}

/// A fitted estimator: coefficients, grid metadata, hyperparameters, and
/// solver diagnostics. Serializable to the `fastkern-model-v1` JSON format
/// with bit-exact round-tripping of `theta`.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub kind: EstimatorKind,
    pub d: usize,
    pub m: usize,
    pub l: f64,
    pub s: f64,
    pub lambda: f64,
    /// Physics penalty weight; present only for the pik kinds.
    pub mu: Option<f64>,
    pub diff_op: Option<DiffOperatorSpec>,
    pub domain: Option<BoxDomain>,
    /// A single `(2m+1)^d` tensor, or `d` concatenated `(2m+1)` blocks for
    /// the additive kind, in grid flattening order.
    pub theta: Vec<Complex64>,
    pub report: SolveReport,
}

impl FittedModel {
    /// Expected coefficient length for the model's kind.
    pub fn expected_theta_len(kind: EstimatorKind, d: usize, m: usize) -> usize {
        match kind {
            EstimatorKind::Additive => d * (2 * m + 1),
            _ => (2 * m + 1).pow(d as u32),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let expected = Self::expected_theta_len(self.kind, self.d, self.m);
        if self.theta.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: self.theta.len() });
        }
        if !(self.l > 0.0) {
            return Err(Error::InvalidParameter(format!("half-period L must be > 0, got {}", self.l)));
        }
        Ok(())
    }

    /// Worst per-block deviation from Hermitian symmetry,
    /// `max ||theta_{-k} - conj(theta_k)|| / ||theta||`.
    pub fn hermitian_asymmetry(&self) -> f64 {
        let norm: f64 = self.theta.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let (block_grid, blocks) = match self.kind {
            EstimatorKind::Additive => (MultiIndexGrid::new(1, self.m), self.d),
            _ => (MultiIndexGrid::new(self.d, self.m), 1),
        };
        let grid = block_grid.expect("validated");
        let perm = grid.negation_permutation();
        let block = grid.size();
        let mut worst = 0.0f64;
        for b in 0..blocks {
            let t = &self.theta[b * block..(b + 1) * block];
            let dev: f64 = (0..block).map(|i| (t[perm[i]] - t[i].conj()).norm_sqr()).sum::<f64>().sqrt();
            worst = worst.max(dev);
        }
        worst / norm
    }

    pub fn to_json_string(&self) -> Result<String> {
        let file = ModelFile {
            version: MODEL_FORMAT_VERSION.to_string(),
            kind: self.kind,
            d: self.d,
            m: self.m,
            l: self.l,
            s: self.s,
            lambda: self.lambda,
            mu: self.mu,
            diff_op: self.diff_op.clone(),
            domain: self.domain.clone(),
            theta: self.theta.iter().map(|c| [c.re, c.im]).collect(),
            solve_report: self.report.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported model format version '{}', expected '{MODEL_FORMAT_VERSION}'",
                file.version
            )));
        }
        let model = FittedModel {
            kind: file.kind,
            d: file.d,
            m: file.m,
            l: file.l,
            s: file.s,
            lambda: file.lambda,
            mu: file.mu,
            diff_op: file.diff_op,
            domain: file.domain,
            theta: file.theta.iter().map(|&[re, im]| Complex64::new(re, im)).collect(),
            report: file.solve_report,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_json_string()?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }
}

pub const MODEL_FORMAT_VERSION: &str = "fastkern-model-v1";

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: String,
    kind: EstimatorKind,
    d: usize,
    m: usize,
    #[serde(rename = "L")]
    l: f64,
    s: f64,
    lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    diff_op: Option<DiffOperatorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<BoxDomain>,
    theta: Vec<[f64; 2]>,
    solve_report: SolveReport,
}
