//! d-level Toeplitz Hermitian operators applied by circulant embedding.
//!
//! An operator on the mode grid `{-m..m}^d` is stored as its generating
//! tensor `g` on `{-2m..2m}^d`; the dense matrix it represents is
//! `T[k1, k2] = g(k2 - k1)`. Matvecs embed the input into a padded
//! circulant grid (size >= 4m+1 per dimension), multiply by the cached
//! circulant spectrum in Fourier space, and extract the leading block.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{next_smooth, FftNd};
use crate::grid::MultiIndexGrid;
use crate::nufft::{NufftPlan, ScaledPoints, Type1Accumulator};

const HERMITIAN_CHECK_TOL: f64 = 1e-10;

pub struct ToeplitzOperator {
    d: usize,
    m: usize,
    generating: Vec<Complex64>,
    scale: f64,
    hermitian: bool,
    circulant_dims: Vec<usize>,
    /// Unnormalized inverse FFT of the embedded generating tensor.
    spectrum: Vec<Complex64>,
    fft: FftNd,
}

impl ToeplitzOperator {
    /// Operator with dense form `T[k1, k2] = g(k2 - k1)`; `g` is laid out on
    /// the `{-2m..2m}^d` grid in flattening order. With `hermitian` set, the
    /// symmetry `g(-q) = conj(g(q))` is verified to `1e-10`.
    pub fn from_generating(g: Vec<Complex64>, d: usize, m: usize, hermitian: bool) -> Result<Self> {
        let dims = vec![next_smooth(4 * m + 1); d];
        Self::with_circulant_sizes(g, d, m, hermitian, &dims)
    }

    /// Same as [`from_generating`](Self::from_generating) with explicit
    /// circulant embedding sizes (each `>= 4m + 1`). The choice of padding
    /// does not change matvec results beyond round-off.
    pub fn with_circulant_sizes(
        g: Vec<Complex64>,
        d: usize,
        m: usize,
        hermitian: bool,
        circulant_dims: &[usize],
    ) -> Result<Self> {
        let ext = MultiIndexGrid::new(d, 2 * m)?;
        if g.len() != ext.size() {
            return Err(Error::DimensionMismatch { expected: ext.size(), got: g.len() });
        }
        if circulant_dims.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: circulant_dims.len() });
        }
        for &n in circulant_dims {
            if n < 4 * m + 1 {
                return Err(Error::InvalidParameter(format!(
                    "circulant size {n} below embedding minimum {}",
                    4 * m + 1
                )));
            }
        }
        if hermitian {
            let perm = ext.negation_permutation();
            let mut worst = 0.0f64;
            for (i, &p) in perm.iter().enumerate() {
                worst = worst.max((g[p] - g[i].conj()).norm());
            }
            if worst > HERMITIAN_CHECK_TOL {
                return Err(Error::NotHermitian(worst));
            }
        }

        // Embed: offset s >= 0 stays at s, s < 0 wraps to N + s.
        let total: usize = circulant_dims.iter().product();
        let mut embedded = vec![Complex64::default(); total];
        ext.for_each_index(|idx, q| {
            let mut pos = 0usize;
            for (l, &ql) in q.iter().enumerate() {
                let n = circulant_dims[l];
                let p = if ql >= 0 { ql as usize } else { n - (-ql) as usize };
                pos = pos * n + p;
            }
            embedded[pos] = g[idx];
        });
        let fft = FftNd::new(circulant_dims);
        fft.inverse(&mut embedded);
        Ok(ToeplitzOperator {
            d,
            m,
            generating: g,
            scale: 1.0,
            hermitian,
            circulant_dims: circulant_dims.to_vec(),
            spectrum: embedded,
            fft,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn cutoff(&self) -> usize {
        self.m
    }

    /// Operator dimension `(2m + 1)^d`.
    pub fn size(&self) -> usize {
        (2 * self.m + 1).pow(self.d as u32)
    }

    pub fn generating(&self) -> &[Complex64] {
        &self.generating
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn set_scale(&mut self, scale: f64) {
        self.scale = scale;
    }

    /// Entry of the dense form, `T[k1, k2] = scale * g(k2 - k1)`.
    pub fn dense_entry(&self, k1: &[i64], k2: &[i64]) -> Complex64 {
        let ext = MultiIndexGrid::new(self.d, 2 * self.m).expect("validated at construction");
        let q: Vec<i64> = k2.iter().zip(k1).map(|(a, b)| a - b).collect();
        self.generating[ext.flatten(&q)] * self.scale
    }

    /// `y = T x` via padded cyclic correlation.
    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) -> Result<()> {
        let size = self.size();
        if x.len() != size || y.len() != size {
            return Err(Error::DimensionMismatch { expected: size, got: x.len().max(y.len()) });
        }
        let total: usize = self.circulant_dims.iter().product();
        let mut work = vec![Complex64::default(); total];
        let modes = 2 * self.m + 1;
        // Scatter the (2m+1)^d block into the leading corner.
        scatter_block(x, &mut work, self.d, modes, &self.circulant_dims);
        self.fft.forward(&mut work);
        for (w, s) in work.iter_mut().zip(&self.spectrum) {
            *w *= s;
        }
        self.fft.inverse(&mut work);
        let norm = self.scale / total as f64;
        gather_block(&work, y, self.d, modes, &self.circulant_dims, norm);
        Ok(())
    }
}

fn scatter_block(x: &[Complex64], work: &mut [Complex64], d: usize, modes: usize, dims: &[usize]) {
    match d {
        1 => work[..modes].copy_from_slice(x),
        2 => {
            for i in 0..modes {
                work[i * dims[1]..i * dims[1] + modes].copy_from_slice(&x[i * modes..(i + 1) * modes]);
            }
        }
        _ => {
            for i in 0..modes {
                for j in 0..modes {
                    let src = (i * modes + j) * modes;
                    let dst = (i * dims[1] + j) * dims[2];
                    work[dst..dst + modes].copy_from_slice(&x[src..src + modes]);
                }
            }
        }
    }
}

fn gather_block(work: &[Complex64], y: &mut [Complex64], d: usize, modes: usize, dims: &[usize], norm: f64) {
    match d {
        1 => {
            for (o, &v) in y.iter_mut().zip(&work[..modes]) {
                *o = v * norm;
            }
        }
        2 => {
            for i in 0..modes {
                for j in 0..modes {
                    y[i * modes + j] = work[i * dims[1] + j] * norm;
                }
            }
        }
        _ => {
            for i in 0..modes {
                for j in 0..modes {
                    for k in 0..modes {
                        y[(i * modes + j) * modes + k] = work[(i * dims[1] + j) * dims[2] + k] * norm;
                    }
                }
            }
        }
    }
}

/// Empirical covariance `Sigma_hat[k1, k2] = (1/n) sum_j exp(i <k2 - k1, t_j>)`
/// as a Toeplitz operator: one type-1 NUFFT of uniform weights `1/n` over the
/// `{-2m..2m}^d` mode grid. The generating tensor is exactly symmetrized
/// (the exact sums are Hermitian; symmetrizing removes transform noise), so
/// the operator passes the Hermitian check and is PSD up to the NUFFT
/// tolerance.
pub fn build_empirical_covariance(points: &ScaledPoints, m: usize, tol: f64) -> Result<ToeplitzOperator> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("empirical covariance needs n >= 1 samples".into()));
    }
    let plan = NufftPlan::uniform(points.dim(), 2 * m, tol)?;
    let mut acc = Type1Accumulator::new(&plan);
    acc.add_batch_uniform(points, 1.0 / points.len() as f64)?;
    let mut g = acc.finish();
    symmetrize_hermitian(&mut g, points.dim(), 2 * m)?;
    ToeplitzOperator::from_generating(g, points.dim(), m, true)
}

/// Streaming variant of [`build_empirical_covariance`]: batches accumulate on
/// the fine grid, a single FFT finishes the tensor.
pub fn build_empirical_covariance_batched(
    batches: &[ScaledPoints],
    m: usize,
    tol: f64,
) -> Result<ToeplitzOperator> {
    let n: usize = batches.iter().map(|b| b.len()).sum();
    if n == 0 {
        return Err(Error::InvalidParameter("empirical covariance needs n >= 1 samples".into()));
    }
    let d = batches.iter().find(|b| !b.is_empty()).map(|b| b.dim()).unwrap_or(1);
    let plan = NufftPlan::uniform(d, 2 * m, tol)?;
    let mut acc = Type1Accumulator::new(&plan);
    for b in batches {
        acc.add_batch_uniform(b, 1.0 / n as f64)?;
    }
    let mut g = acc.finish();
    symmetrize_hermitian(&mut g, d, 2 * m)?;
    ToeplitzOperator::from_generating(g, d, m, true)
}

fn symmetrize_hermitian(g: &mut [Complex64], d: usize, cutoff: usize) -> Result<()> {
    let ext = MultiIndexGrid::new(d, cutoff)?;
    let perm = ext.negation_permutation();
    for i in 0..g.len() {
        let p = perm[i];
        if p < i {
            continue;
        }
        let avg = (g[i] + g[p].conj()) * 0.5;
        g[i] = avg;
        g[p] = avg.conj();
    }
    Ok(())
}
