//! Free-space convolution with `|x|^p` on uniform grids via zero-padded FFT.

use rustfft::num_complex::Complex64;

use crate::fft::{unravel, NdFft};
use crate::quadrature::box_power_integral;

/// Offsets (in cells, max norm) whose kernel weight is integrated exactly;
/// farther cells use the midpoint value.
const NEAR_CELLS: i64 = 3;
const NEAR_ORDER: usize = 8;

/// Convolution of cell values with `|x|^p`, where each source cell's weight
/// is the exact integral of the kernel over the cell.
///
/// `apply(u)[i] = sum_j u[j] * int_{cell j} |x_i - y|^p dy` for cell centres
/// `x_i`, with no periodic wrap.
#[derive(Debug)]
pub struct PowerConvolver {
    shape: Vec<usize>,
    padded: Vec<usize>,
    fft: NdFft,
    kernel_hat: Vec<Complex64>,
}

impl PowerConvolver {
    pub fn new(shape: &[usize], spacing: f64, p: f64) -> Self {
        let dim = shape.len();
        let padded: Vec<usize> = shape.iter().map(|&n| 2 * n).collect();
        let fft = NdFft::new(&padded);
        let len = fft.len();
        let mut kernel = vec![Complex64::new(0.0, 0.0); len];
        let mut idx = vec![0usize; dim];
        let mut offset = vec![0.0; dim];
        let origin = vec![0.0; dim];
        let cell_volume = spacing.powi(dim as i32);
        for (flat, slot) in kernel.iter_mut().enumerate() {
            unravel(flat, &padded, &mut idx);
            let mut far = 0i64;
            for a in 0..dim {
                let n = padded[a] as i64;
                let mut o = idx[a] as i64;
                if o > n / 2 {
                    o -= n;
                }
                // The offset n/2 is never reached by a convolution of two
                // length-n/2 arrays.
                far = far.max(o.abs());
                offset[a] = o as f64 * spacing;
            }
            let value = if far <= NEAR_CELLS {
                box_power_integral(&origin, &offset, spacing, p, NEAR_ORDER)
            } else {
                let r2: f64 = offset.iter().map(|v| v * v).sum();
                cell_volume * r2.powf(0.5 * p)
            };
            *slot = Complex64::new(value, 0.0);
        }
        fft.forward(&mut kernel);
        Self {
            shape: shape.to_vec(),
            padded,
            fft,
            kernel_hat: kernel,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        let dim = self.shape.len();
        assert_eq!(input.len(), self.shape.iter().product::<usize>());
        let mut buf = vec![Complex64::new(0.0, 0.0); self.fft.len()];
        let mut idx = vec![0usize; dim];
        for (flat, &v) in input.iter().enumerate() {
            unravel(flat, &self.shape, &mut idx);
            buf[crate::fft::ravel(&idx, &self.padded)] = Complex64::new(v, 0.0);
        }
        self.fft.forward(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.fft.inverse(&mut buf);
        let mut out = vec![0.0; input.len()];
        for (flat, o) in out.iter_mut().enumerate() {
            unravel(flat, &self.shape, &mut idx);
            *o = buf[crate::fft::ravel(&idx, &self.padded)].re;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_sum() {
        let shape = [5, 4, 6];
        let h = 0.3;
        let conv = PowerConvolver::new(&shape, h, -1.0);
        let n: usize = shape.iter().product();
        let input: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64) / 7.0).collect();
        let out = conv.apply(&input);
        let mut xi = [0usize; 3];
        let mut yj = [0usize; 3];
        for i in [0, 17, n - 1] {
            unravel(i, &shape, &mut xi);
            let mut direct = 0.0;
            for (j, &u) in input.iter().enumerate() {
                unravel(j, &shape, &mut yj);
                let centre: Vec<f64> = (0..3).map(|a| (yj[a] as f64 - xi[a] as f64) * h).collect();
                direct += u * box_power_integral(&[0.0; 3], &centre, h, -1.0, NEAR_ORDER);
            }
            assert!((out[i] - direct).abs() < 1e-3 * direct.abs(), "{} vs {direct}", out[i]);
        }
    }
}
