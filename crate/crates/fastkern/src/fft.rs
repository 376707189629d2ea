//! Thin d-dimensional wrapper around rustfft.
//!
//! Layout convention matches the grid flattening: row-major with the last
//! dimension contiguous. Both directions are unnormalized; `inverse` uses
//! the `exp(+i 2 pi u f / N)` kernel.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Cached forward/inverse plans for a fixed d-dimensional shape.
pub struct FftNd {
    dims: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl FftNd {
    pub fn new(dims: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = dims.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = dims.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        FftNd { dims: dims.to_vec(), forward, inverse }
    }


    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    /// Unnormalized forward transform along every axis.
    pub fn forward(&self, data: &mut [Complex64]) {
        for axis in 0..self.dims.len() {
            self.apply_axis(data, axis, true);
        }
    }

    /// Unnormalized inverse transform along every axis.
    pub fn inverse(&self, data: &mut [Complex64]) {
        for axis in 0..self.dims.len() {
            self.apply_axis(data, axis, false);
        }
    }

    fn apply_axis(&self, data: &mut [Complex64], axis: usize, fwd: bool) {
        assert_eq!(data.len(), self.len());
        let n = self.dims[axis];
        let plan = if fwd { &self.forward[axis] } else { &self.inverse[axis] };
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        let stride: usize = self.dims[axis + 1..].iter().product();
        if stride == 1 {
            for row in data.chunks_exact_mut(n) {
                plan.process_with_scratch(row, &mut scratch);
            }
        } else {
            let outer: usize = self.dims[..axis].iter().product();
            let mut line = vec![Complex64::default(); n];
            for o in 0..outer {
                let base_o = o * n * stride;
                for i in 0..stride {
                    let base = base_o + i;
                    for t in 0..n {
                        line[t] = data[base + t * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for t in 0..n {
                        data[base + t * stride] = line[t];
                    }
                }
            }
        }
    }
}

/// Smallest integer `>= n` whose prime factors are all in {2, 3, 5}.
pub fn next_smooth(n: usize) -> usize {
    let n = n.max(1);
    let mut candidate = n;
    loop {
        let mut rem = candidate;
        for p in [2usize, 3, 5] {
            while rem % p == 0 {
                rem /= p;
            }
        }
        if rem == 1 {
            return candidate;
        }
        candidate += 1;
    }
}
