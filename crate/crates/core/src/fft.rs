//! Multi-dimensional complex FFT over row-major `N^d` arrays.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

/// Lines gathered per parallel work item.
const LINES_PER_TASK: usize = 64;

#[derive(Clone)]
pub struct FftNd {
    dim: usize,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftNd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftNd")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .finish()
    }
}

impl FftNd {
    pub fn new(dim: usize, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            dim,
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unnormalized forward transform `X_k = Σ_j x_j e^{-2πi jk/N}` on every axis.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform including the `1/N^d` factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|c| *c *= scale);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.len(), "FFT buffer length mismatch");
        let n = self.n;
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                data.par_chunks_mut(n * LINES_PER_TASK).for_each(|chunk| {
                    let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
                    plan.process_with_scratch(chunk, &mut scratch);
                });
                continue;
            }
            // Lines along `axis`: index = outer * (n * stride) + j * stride + inner.
            let outer = self.len() / (n * stride);
            let line_count = outer * stride;
            let mut lines = vec![Complex64::default(); self.len()];
            for line in 0..line_count {
                let (o, i) = (line / stride, line % stride);
                let base = o * n * stride + i;
                let dst = &mut lines[line * n..(line + 1) * n];
                for (j, v) in dst.iter_mut().enumerate() {
                    *v = data[base + j * stride];
                }
            }
            lines.par_chunks_mut(n * LINES_PER_TASK).for_each(|chunk| {
                let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
                plan.process_with_scratch(chunk, &mut scratch);
            });
            for line in 0..line_count {
                let (o, i) = (line / stride, line % stride);
                let base = o * n * stride + i;
                let src = &lines[line * n..(line + 1) * n];
                for (j, v) in src.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
}
