//! Multi-index frequency grids and the diagonal/analytic matrices built on them.
//!
//! A [`MultiIndexGrid`] is the ordered frequency set `{-m..m}^d`. Everything
//! downstream (NUFFT mode layout, Toeplitz tensors, coefficient vectors)
//! shares its flattening convention: lexicographic with the **last**
//! coordinate varying fastest, so `(-m,..,-m)` comes first and `(m,..,m)`
//! last.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::EstimatorKind;

/// The ordered frequency set `{-m..m}^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultiIndexGrid {
    d: usize,
    m: usize,
}

impl MultiIndexGrid {
    pub fn new(d: usize, m: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("grid dimension must be >= 1".into()));
        }
        let modes = 2 * m + 1;
        let mut size: usize = 1;
        for _ in 0..d {
            size = size
                .checked_mul(modes)
                .ok_or_else(|| Error::InvalidParameter(format!("grid (2*{m}+1)^{d} overflows")))?;
        }
        Ok(MultiIndexGrid { d, m })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn cutoff(&self) -> usize {
        self.m
    }

    /// Modes per dimension, `2m + 1`.
    pub fn modes_per_dim(&self) -> usize {
        2 * self.m + 1
    }

    /// Total number of multi-indices, `(2m + 1)^d`.
    pub fn size(&self) -> usize {
        self.modes_per_dim().pow(self.d as u32)
    }

    /// Flat position of a multi-index under the fixed ordering.
    pub fn flatten(&self, k: &[i64]) -> usize {
        debug_assert_eq!(k.len(), self.d);
        let modes = self.modes_per_dim();
        let m = self.m as i64;
        let mut idx = 0usize;
        for &kl in k {
            debug_assert!(kl.abs() <= m);
            idx = idx * modes + (kl + m) as usize;
        }
        idx
    }

    /// Inverse of [`flatten`](Self::flatten), written into `out`.
    pub fn unflatten_into(&self, mut idx: usize, out: &mut [i64]) {
        debug_assert_eq!(out.len(), self.d);
        let modes = self.modes_per_dim();
        let m = self.m as i64;
        for l in (0..self.d).rev() {
            out[l] = (idx % modes) as i64 - m;
            idx /= modes;
        }
        debug_assert_eq!(idx, 0);
    }

    pub fn unflatten(&self, idx: usize) -> Vec<i64> {
        let mut k = vec![0i64; self.d];
        self.unflatten_into(idx, &mut k);
        k
    }

    /// Flat permutation of the negation map `k -> -k` (an involution).
    pub fn negation_permutation(&self) -> Vec<usize> {
        let size = self.size();
        let mut perm = vec![0usize; size];
        let mut k = vec![0i64; self.d];
        for idx in 0..size {
            self.unflatten_into(idx, &mut k);
            for kl in k.iter_mut() {
                *kl = -*kl;
            }
            perm[idx] = self.flatten(&k);
        }
        perm
    }

    /// Visit every multi-index in flattening order.
    pub fn for_each_index(&self, mut f: impl FnMut(usize, &[i64])) {
        let size = self.size();
        let mut k = vec![-(self.m as i64); self.d];
        let m = self.m as i64;
        for idx in 0..size {
            f(idx, &k);
            // Odometer increment, last coordinate fastest.
            for l in (0..self.d).rev() {
                if k[l] < m {
                    k[l] += 1;
                    break;
                }
                k[l] = -m;
            }
        }
    }
}

/// All multi-indices of `{-m..m}^d` in flattening order.
pub fn grid_indices(d: usize, m: usize) -> Result<Vec<Vec<i64>>> {
    let grid = MultiIndexGrid::new(d, m)?;
    let mut out = Vec::with_capacity(grid.size());
    grid.for_each_index(|_, k| out.push(k.to_vec()));
    Ok(out)
}

/// Truncated feature map `phi(x)_k = exp(-i pi <k, x> / (2L))`.
///
/// Every entry has modulus one and `phi(x)_{-k} = conj(phi(x)_k)`.
pub fn feature_map(x: &[f64], grid: &MultiIndexGrid, l: f64) -> Result<Vec<Complex64>> {
    if x.len() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), got: x.len() });
    }
    if !(l > 0.0) {
        return Err(Error::InvalidParameter(format!("half-period L must be > 0, got {l}")));
    }
    let scale = std::f64::consts::PI / (2.0 * l);
    let mut out = Vec::with_capacity(grid.size());
    grid.for_each_index(|_, k| {
        let dot: f64 = k.iter().zip(x).map(|(&kl, &xl)| kl as f64 * xl).sum();
        out.push(Complex64::cis(-scale * dot));
    });
    Ok(out)
}

/// Diagonal of the Sobolev matrix `S`: entry `sqrt(1 + ||k||_2^{2s})`.
pub fn sobolev_diagonal(grid: &MultiIndexGrid, s: f64) -> Result<Vec<f64>> {
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!("smoothness s must be > 0, got {s}")));
    }
    let mut out = Vec::with_capacity(grid.size());
    grid.for_each_index(|_, k| {
        let norm_sq: f64 = k.iter().map(|&kl| (kl * kl) as f64).sum();
        out.push((1.0 + norm_sq.powf(s)).sqrt())
    });
    Ok(out)
}

/// A linear constant-coefficient differential operator `sum_a a_alpha d^alpha`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DiffOperatorSpec {
    terms: Vec<(Vec<u32>, f64)>,
}

impl DiffOperatorSpec {
    /// `terms` pairs a multi-index `alpha` (one derivative order per
    /// dimension) with its real coefficient `a_alpha`.
    pub fn new(terms: Vec<(Vec<u32>, f64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter("differential operator needs at least one term".into()));
        }
        let d = terms[0].0.len();
        if d == 0 {
            return Err(Error::InvalidParameter("differential operator multi-index is empty".into()));
        }
        for (alpha, coef) in &terms {
            if alpha.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: alpha.len() });
            }
            if !coef.is_finite() {
                return Err(Error::NonFinite("differential operator coefficient".into()));
            }
        }
        Ok(DiffOperatorSpec { terms })
    }

    pub fn dim(&self) -> usize {
        self.terms[0].0.len()
    }

    /// Highest total derivative order among the terms.
    pub fn order(&self) -> u32 {
        self.terms.iter().map(|(alpha, _)| alpha.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn terms(&self) -> &[(Vec<u32>, f64)] {
        &self.terms
    }
}

/// Diagonal symbol of a differential operator on the Fourier basis:
/// `D_k = sum_alpha a_alpha (-i pi / 2L)^{|alpha|} prod_l k_l^{alpha_l}`,
/// with the convention `0^0 = 1` so zero-order terms contribute everywhere.
pub fn diff_op_diagonal(grid: &MultiIndexGrid, op: &DiffOperatorSpec, l: f64) -> Result<Vec<Complex64>> {
    if op.dim() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), got: op.dim() });
    }
    if !(l > 0.0) {
        return Err(Error::InvalidParameter(format!("half-period L must be > 0, got {l}")));
    }
    let freq = std::f64::consts::PI / (2.0 * l);
    let mut out = Vec::with_capacity(grid.size());
    grid.for_each_index(|_, k| {
        let mut sym = Complex64::new(0.0, 0.0);
        for (alpha, coef) in op.terms() {
            let total: u32 = alpha.iter().sum();
            // (-i)^total cycles with period 4.
            let unit = match total % 4 {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(0.0, -1.0),
                2 => Complex64::new(-1.0, 0.0),
                _ => Complex64::new(0.0, 1.0),
            };
            let mut mono = 1.0f64;
            for (&kl, &al) in k.iter().zip(alpha) {
                mono *= (kl as f64).powi(al as i32);
                // powi(0) = 1 covers the 0^0 = 1 convention.
            }
            sym += unit * freq.powi(total as i32) * *coef * mono;
        }
        out.push(sym);
    });
    Ok(out)
}

/// An axis-aligned box `[a, b] subseteq [-L, L]^d`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
    half_period: f64,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, half_period: f64) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::DimensionMismatch { expected: lower.len().max(1), got: upper.len() });
        }
        if !(half_period > 0.0) {
            return Err(Error::InvalidParameter(format!("half-period L must be > 0, got {half_period}")));
        }
        for (i, (&a, &b)) in lower.iter().zip(&upper).enumerate() {
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::NonFinite("box bound".into()));
            }
            if !(a < b) {
                return Err(Error::InvalidParameter(format!("box must satisfy a < b in dimension {i}")));
            }
            if a < -half_period || b > half_period {
                return Err(Error::InvalidParameter(format!(
                    "box [{a}, {b}] exceeds [-L, L] = [{}, {}] in dimension {i}",
                    -half_period, half_period
                )));
            }
        }
        Ok(BoxDomain { lower, upper, half_period })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn half_period(&self) -> f64 {
        self.half_period
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).product()
    }
}

/// Generating values of the box Fourier matrix on `q in {-2m..2m}^d`:
/// `C(q) = (4L)^{-d} int_box exp(i <q, x> pi / (2L)) dx`, which factorizes
/// across dimensions. Satisfies `C(-q) = conj(C(q))` and `|C(q)| <= C(0)`.
pub fn box_fourier_generating(d: usize, m: usize, domain: &BoxDomain) -> Result<Vec<Complex64>> {
    if domain.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: domain.dim() });
    }
    let ext = MultiIndexGrid::new(d, 2 * m)?;
    let l = domain.half_period();
    let freq = std::f64::consts::PI / (2.0 * l);
    // One factor table per dimension, indexed by q + 2m.
    let mut factors: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    for dim in 0..d {
        let (a, b) = (domain.lower()[dim], domain.upper()[dim]);
        let mut col = Vec::with_capacity(4 * m + 1);
        for q in -(2 * m as i64)..=(2 * m as i64) {
            let val = if q == 0 {
                Complex64::new((b - a) / (4.0 * l), 0.0)
            } else {
                let qf = q as f64;
                let phase = Complex64::cis(qf * freq * b) - Complex64::cis(qf * freq * a);
                phase * Complex64::new(0.0, -2.0 * l / (std::f64::consts::PI * qf)) / (4.0 * l)
            };
            col.push(val);
        }
        factors.push(col);
    }
    let mut out = Vec::with_capacity(ext.size());
    ext.for_each_index(|_, q| {
        let mut v = Complex64::new(1.0, 0.0);
        for (dim, &ql) in q.iter().enumerate() {
            v *= factors[dim][(ql + 2 * m as i64) as usize];
        }
        out.push(v);
    });
    Ok(out)
}

/// Theory-driven `(m, lambda)` schedule.
///
/// Isotropic kinds use `m = ceil(n^{1/(2s+d)})`, `lambda = n^{-2s/(2s+d)}`;
/// the additive kind uses `m = max(1, ceil(n^{1/(2s+1)} / d))`,
/// `lambda = n^{-2s/(2s+1)}`. `m` is rounded up so `m >= 1` for every
/// `n >= 1`.
pub fn schedule_hyperparams(n: usize, s: f64, d: usize, kind: EstimatorKind) -> Result<(usize, f64)> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size n must be >= 1".into()));
    }
    if d == 0 {
        return Err(Error::InvalidParameter("dimension d must be >= 1".into()));
    }
    let nf = n as f64;
    // Guard against powf landing epsilon above an exact integer.
    let ceil_guarded = |t: f64| (t - 1e-9).ceil().max(1.0) as usize;
    match kind {
        EstimatorKind::Additive => {
            if !(s > 0.5) {
                return Err(Error::InvalidParameter(format!(
                    "additive schedule requires s > 1/2, got s = {s}"
                )));
            }
            let m = ceil_guarded(nf.powf(1.0 / (2.0 * s + 1.0)) / d as f64);
            let lambda = nf.powf(-2.0 * s / (2.0 * s + 1.0));
            Ok((m.max(1), lambda))
        }
        _ => {
            if !(s > d as f64 / 2.0) {
                return Err(Error::InvalidParameter(format!(
                    "schedule requires s > d/2 = {}, got s = {s}",
                    d as f64 / 2.0
                )));
            }
            let m = ceil_guarded(nf.powf(1.0 / (2.0 * s + d as f64)));
            let lambda = nf.powf(-2.0 * s / (2.0 * s + d as f64));
            Ok((m, lambda))
        }
    }
}

/// Default half-period when none is given: `L = max(1, max_j ||X_j||_inf)`,
/// so the data always sits inside `[-L, L]^d`.
pub fn default_half_period(x: &[f64]) -> f64 {
    x.iter().fold(1.0f64, |acc, &v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn indices_d1_m1() {
        let idx = grid_indices(1, 1).unwrap();
        assert_eq!(idx, vec![vec![-1], vec![0], vec![1]]);
    }

    #[test]
    fn indices_d2_m1_last_coordinate_fastest() {
        let idx = grid_indices(2, 1).unwrap();
        assert_eq!(idx.len(), 9);
        assert_eq!(idx[0], vec![-1, -1]);
        assert_eq!(idx[1], vec![-1, 0]);
        assert_eq!(idx[2], vec![-1, 1]);
        assert_eq!(idx[3], vec![0, -1]);
        assert_eq!(idx[8], vec![1, 1]);
    }

    #[test]
    fn index_of_origin_d3_m2() {
        // Oracle: enumerate and search.
        let idx = grid_indices(3, 2).unwrap();
        assert_eq!(idx.len(), 125);
        let pos = idx.iter().position(|k| k.iter().all(|&v| v == 0)).unwrap();
        assert_eq!(pos, 62);
        let grid = MultiIndexGrid::new(3, 2).unwrap();
        assert_eq!(grid.flatten(&[0, 0, 0]), 62);
    }

    proptest! {
        #[test]
        fn flatten_unflatten_roundtrip(d in 1usize..4, m in 0usize..5, seed in any::<u64>()) {
            let grid = MultiIndexGrid::new(d, m).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let idx = rng.gen_range(0..grid.size());
            let k = grid.unflatten(idx);
            prop_assert_eq!(grid.flatten(&k), idx);
        }
    }

    #[test]
    fn negation_is_involution() {
        let grid = MultiIndexGrid::new(2, 3).unwrap();
        let perm = grid.negation_permutation();
        for i in 0..grid.size() {
            assert_eq!(perm[perm[i]], i);
            let k = grid.unflatten(i);
            let nk = grid.unflatten(perm[i]);
            for (a, b) in k.iter().zip(&nk) {
                assert_eq!(*a, -b);
            }
        }
    }

    #[test]
    fn feature_map_at_origin_is_ones() {
        let grid = MultiIndexGrid::new(2, 2).unwrap();
        let phi = feature_map(&[0.0, 0.0], &grid, 1.0).unwrap();
        for v in phi {
            assert_relative_eq!(v.re, 1.0, max_relative = 1e-15);
            assert!(v.im.abs() < 1e-15);
        }
    }

    #[test]
    fn feature_map_quarter_period() {
        // L = pi/2 makes the frequency scale exactly 1.
        let grid = MultiIndexGrid::new(1, 1).unwrap();
        let phi = feature_map(&[std::f64::consts::FRAC_PI_2], &grid, std::f64::consts::FRAC_PI_2).unwrap();
        assert!((phi[0] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((phi[1] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((phi[2] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn feature_map_matches_scalar_oracle() {
        // Oracle: per-entry evaluation through per-dimension factors instead
        // of one accumulated phase.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let grid = MultiIndexGrid::new(2, 4).unwrap();
        let l = 1.3;
        for _ in 0..5 {
            let x = [rng.gen_range(-l..l), rng.gen_range(-l..l)];
            let phi = feature_map(&x, &grid, l).unwrap();
            grid.for_each_index(|idx, k| {
                let mut expected = Complex64::new(1.0, 0.0);
                for (kl, xl) in k.iter().zip(&x) {
                    expected *= Complex64::cis(-std::f64::consts::PI * (*kl as f64) * xl / (2.0 * l));
                }
                assert!((phi[idx] - expected).norm() < 1e-14);
            });
        }
    }

    #[test]
    fn feature_map_unit_modulus_and_conjugate_symmetry() {
        let grid = MultiIndexGrid::new(3, 2).unwrap();
        let phi = feature_map(&[0.31, -0.7, 0.11], &grid, 1.0).unwrap();
        let perm = grid.negation_permutation();
        for i in 0..grid.size() {
            assert_relative_eq!(phi[i].norm(), 1.0, max_relative = 1e-14);
            assert!((phi[perm[i]] - phi[i].conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn sobolev_diagonal_values() {
        let g1 = MultiIndexGrid::new(1, 2).unwrap();
        let s1 = sobolev_diagonal(&g1, 1.0).unwrap();
        assert_relative_eq!(s1[g1.flatten(&[0])], 1.0);
        assert_relative_eq!(s1[g1.flatten(&[2])], 5.0f64.sqrt(), max_relative = 1e-15);

        let g2 = MultiIndexGrid::new(2, 1).unwrap();
        let s2 = sobolev_diagonal(&g2, 2.0).unwrap();
        assert_relative_eq!(s2[g2.flatten(&[1, 1])], 5.0f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn sobolev_diagonal_symmetries() {
        let grid = MultiIndexGrid::new(2, 3).unwrap();
        let diag = sobolev_diagonal(&grid, 1.7).unwrap();
        let perm = grid.negation_permutation();
        for i in 0..grid.size() {
            assert!(diag[i] >= 1.0);
            assert_relative_eq!(diag[perm[i]], diag[i], max_relative = 1e-15);
            let k = grid.unflatten(i);
            let swapped = grid.flatten(&[k[1], k[0]]);
            assert_relative_eq!(diag[swapped], diag[i], max_relative = 1e-15);
        }
    }

    #[test]
    fn diff_op_first_order_minus_identity() {
        // f' - f at L = pi/2 where pi/(2L) = 1.
        let op = DiffOperatorSpec::new(vec![(vec![1], 1.0), (vec![0], -1.0)]).unwrap();
        let grid = MultiIndexGrid::new(1, 3).unwrap();
        let diag = diff_op_diagonal(&grid, &op, std::f64::consts::FRAC_PI_2).unwrap();
        assert!((diag[grid.flatten(&[0])] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((diag[grid.flatten(&[1])] - Complex64::new(-1.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn diff_op_second_order() {
        let op = DiffOperatorSpec::new(vec![(vec![2], 1.0)]).unwrap();
        let grid = MultiIndexGrid::new(1, 3).unwrap();
        let diag = diff_op_diagonal(&grid, &op, std::f64::consts::FRAC_PI_2).unwrap();
        assert!((diag[grid.flatten(&[3])] - Complex64::new(-9.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn diff_op_identity_is_all_ones() {
        let op = DiffOperatorSpec::new(vec![(vec![0, 0], 1.0)]).unwrap();
        let grid = MultiIndexGrid::new(2, 2).unwrap();
        for l in [0.7, 1.0, 4.2] {
            let diag = diff_op_diagonal(&grid, &op, l).unwrap();
            for v in &diag {
                assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn box_generating_closed_forms() {
        let l = std::f64::consts::FRAC_PI_2;
        let domain = BoxDomain::new(vec![0.0], vec![1.0], l).unwrap();
        let g = box_fourier_generating(1, 1, &domain).unwrap();
        let ext = MultiIndexGrid::new(1, 2).unwrap();
        // q = 0: (b - a)/(4L) = 1/(2 pi).
        let c0 = g[ext.flatten(&[0])];
        assert!((c0 - Complex64::new(1.0 / (2.0 * std::f64::consts::PI), 0.0)).norm() < 1e-15);
        // q = 2 with pi/(2L) = 1: (e^{2i} - 1)/(4 pi i).
        let c2 = g[ext.flatten(&[2])];
        let expected = (Complex64::cis(2.0) - Complex64::new(1.0, 0.0))
            / Complex64::new(0.0, 4.0 * std::f64::consts::PI);
        assert!((c2 - expected).norm() < 1e-15);
    }

    /// Adaptive Simpson quadrature for complex integrands.
    fn adaptive_simpson(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64, tol: f64) -> Complex64 {
        fn simpson(f: &dyn Fn(f64) -> Complex64, a: f64, m: f64, b: f64) -> Complex64 {
            (f(a) + f(m) * 4.0 + f(b)) * ((b - a) / 6.0)
        }
        fn recurse(
            f: &dyn Fn(f64) -> Complex64,
            a: f64,
            b: f64,
            whole: Complex64,
            tol: f64,
            depth: u32,
        ) -> Complex64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, 0.5 * (a + m), m);
            let right = simpson(f, m, 0.5 * (m + b), b);
            if depth == 0 || (left + right - whole).norm() < 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                recurse(f, a, m, left, tol / 2.0, depth - 1)
                    + recurse(f, m, b, right, tol / 2.0, depth - 1)
            }
        }
        let m = 0.5 * (a + b);
        recurse(f, a, b, simpson(f, a, m, b), tol, 30)
    }

    #[test]
    fn box_generating_matches_quadrature_d2() {
        // Oracle: adaptive quadrature of the defining integral, inner
        // dimension integrated first.
        let domain = BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0], 1.0).unwrap();
        let m = 2;
        let g = box_fourier_generating(2, m, &domain).unwrap();
        let ext = MultiIndexGrid::new(2, 2 * m).unwrap();
        let freq = std::f64::consts::PI / 2.0;
        ext.for_each_index(|idx, q| {
            let (q0, q1) = (q[0] as f64, q[1] as f64);
            let inner = |x0: f64| {
                adaptive_simpson(
                    &|x1: f64| Complex64::cis(freq * (q0 * x0 + q1 * x1)),
                    0.0,
                    1.0,
                    1e-13,
                )
            };
            let full = adaptive_simpson(&inner, 0.0, 1.0, 1e-13) / 16.0; // (4L)^2 = 16
            assert!(
                (g[idx] - full).norm() < 1e-10,
                "q = {q:?}: got {}, quadrature {}",
                g[idx],
                full
            );
        });
    }

    #[test]
    fn box_generating_hermitian_and_bounded() {
        let domain = BoxDomain::new(vec![-0.3, 0.1], vec![0.6, 0.9], 1.5).unwrap();
        let m = 3;
        let g = box_fourier_generating(2, m, &domain).unwrap();
        let ext = MultiIndexGrid::new(2, 2 * m).unwrap();
        let perm = ext.negation_permutation();
        let c0 = g[ext.flatten(&[0, 0])];
        assert!((c0.re - domain.volume() / (4.0f64 * 1.5).powi(2)).abs() < 1e-15);
        assert!(c0.im.abs() < 1e-16);
        for i in 0..ext.size() {
            assert!((g[perm[i]] - g[i].conj()).norm() < 1e-14);
            assert!(g[i].norm() <= c0.re + 1e-14);
        }
    }

    #[test]
    fn schedule_examples() {
        let (m, lambda) = schedule_hyperparams(1000, 1.0, 1, EstimatorKind::Sobolev).unwrap();
        assert_eq!(m, 10);
        assert_relative_eq!(lambda, 0.01, max_relative = 1e-12);

        let (m, lambda) = schedule_hyperparams(1_000_000, 2.0, 1, EstimatorKind::LowBias).unwrap();
        assert_eq!(m, 16);
        assert_relative_eq!(lambda, 10f64.powf(-24.0 / 5.0), max_relative = 1e-12);

        let (m, lambda) = schedule_hyperparams(100_000, 2.0, 5, EstimatorKind::Additive).unwrap();
        assert_eq!(m, 2);
        assert_relative_eq!(lambda, 1e-4, max_relative = 1e-12);
    }

    #[test]
    fn schedule_rejects_insufficient_smoothness() {
        assert!(schedule_hyperparams(100, 0.5, 1, EstimatorKind::Sobolev).is_err());
        assert!(schedule_hyperparams(100, 1.0, 2, EstimatorKind::PikBox).is_err());
        assert!(schedule_hyperparams(100, 0.5, 3, EstimatorKind::Additive).is_err());
        assert!(schedule_hyperparams(100, 0.51, 3, EstimatorKind::Additive).is_ok());
    }

    #[test]
    fn schedule_monotone_in_n() {
        for kind in [EstimatorKind::Sobolev, EstimatorKind::Additive] {
            let mut last_m = 0usize;
            let mut last_lambda = f64::INFINITY;
            for exp in 1..8 {
                let n = 10usize.pow(exp);
                let (m, lambda) = schedule_hyperparams(n, 1.5, 2, kind).unwrap();
                assert!(m >= last_m, "m not nondecreasing for {kind:?}");
                assert!(lambda <= last_lambda, "lambda not nonincreasing for {kind:?}");
                last_m = m;
                last_lambda = lambda;
            }
        }
    }

    #[test]
    fn default_half_period_floor_is_one() {
        assert_eq!(default_half_period(&[0.2, -0.7, 0.5]), 1.0);
        assert_eq!(default_half_period(&[0.2, -3.0, 0.5]), 3.0);
    }
}
