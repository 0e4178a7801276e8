//! Axis-by-axis multidimensional FFT on row-major grids.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward/inverse FFT plans for a row-major grid (last axis fastest).
pub struct NdFft {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for NdFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NdFft").field("shape", &self.shape).finish()
    }
}

impl NdFft {
    pub fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = shape.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        Self {
            shape: shape.to_vec(),
            forward,
            inverse,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform including the `1/len` normalisation.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / self.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        assert_eq!(data.len(), self.len());
        let dims = self.shape.len();
        let mut line = Vec::new();
        for axis in 0..dims {
            let n = self.shape[axis];
            if n == 1 {
                continue;
            }
            let stride: usize = self.shape[axis + 1..].iter().product();
            if stride == 1 {
                plans[axis].process(data);
                continue;
            }
            line.resize(n, Complex64::new(0.0, 0.0));
            let block = n * stride;
            for outer in (0..data.len()).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (k, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + k * stride];
                    }
                    plans[axis].process(&mut line);
                    for (k, slot) in line.iter().enumerate() {
                        data[base + k * stride] = *slot;
                    }
                }
            }
        }
    }
}

/// Angular wavenumber of FFT index `k` on a periodic axis of `n` points and
/// length `len`.
pub fn wavenumber(k: usize, n: usize, len: f64) -> f64 {
    let signed = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    2.0 * PI * signed / len
}

/// Row-major multi-index of a flat offset.
pub fn unravel(mut flat: usize, shape: &[usize], out: &mut [usize]) {
    for axis in (0..shape.len()).rev() {
        out[axis] = flat % shape[axis];
        flat /= shape[axis];
    }
}

/// Flat offset of a row-major multi-index.
pub fn ravel(index: &[usize], shape: &[usize]) -> usize {
    index.iter().zip(shape).fold(0, |acc, (&i, &n)| acc * n + i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_single_mode() {
        let shape = [4, 8, 2];
        let plan = NdFft::new(&shape);
        let n = plan.len();
        let original: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64 * 0.37, (i % 3) as f64)).collect();
        let mut data = original.clone();
        plan.forward(&mut data);
        plan.inverse(&mut data);
        for (a, b) in data.iter().zip(&original) {
            assert!((a - b).norm() < 1e-12);
        }

        // exp(2 pi i x1 / 8) along axis 1 lands in a single bin.
        let mut idx = [0usize; 3];
        let mut wave: Vec<Complex64> = (0..n)
            .map(|f| {
                unravel(f, &shape, &mut idx);
                Complex64::from_polar(1.0, 2.0 * PI * idx[1] as f64 / 8.0)
            })
            .collect();
        plan.forward(&mut wave);
        for (f, v) in wave.iter().enumerate() {
            unravel(f, &shape, &mut idx);
            let expect = if idx == [0, 1, 0] { n as f64 } else { 0.0 };
            assert!((v.re - expect).abs() < 1e-9 && v.im.abs() < 1e-9);
        }
    }

    #[test]
    fn ravel_inverts_unravel() {
        let shape = [3, 5, 7];
        let mut idx = [0; 3];
        for f in 0..105 {
            unravel(f, &shape, &mut idx);
            assert_eq!(ravel(&idx, &shape), f);
        }
    }
}
