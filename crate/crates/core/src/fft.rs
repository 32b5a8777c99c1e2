//! Multi-dimensional FFT on cubic grids, axis 0 varying fastest.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub struct CubeFft {
    d: usize,
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl CubeFft {
    pub fn new(d: usize, m: usize) -> Self {
        let mut planner = FftPlanner::new();
        CubeFft {
            d,
            m,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        }
    }

    /// Unnormalized forward transform, `X_k = sum_n x_n e^{-2 pi i k.n / m}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    /// Unnormalized inverse transform (no `1/m^d` factor).
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let m = self.m;
        assert_eq!(data.len(), m.pow(self.d as u32));
        let mut line = vec![Complex64::new(0.0, 0.0); m];
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        // axis 0 is contiguous
        for chunk in data.chunks_exact_mut(m) {
            plan.process_with_scratch(chunk, &mut scratch);
        }
        for axis in 1..self.d {
            let stride = m.pow(axis as u32);
            let block = stride * m;
            for b in (0..data.len()).step_by(block) {
                for off in 0..stride {
                    let start = b + off;
                    for (j, v) in line.iter_mut().enumerate() {
                        *v = data[start + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, v) in line.iter().enumerate() {
                        data[start + j * stride] = *v;
                    }
                }
            }
        }
    }
}

/// Signed frequency of FFT index `k` on a grid of `m` points.
#[inline]
pub fn signed_freq(k: usize, m: usize) -> i64 {
    if k <= m / 2 {
        k as i64
    } else {
        k as i64 - m as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_single_mode() {
        let (d, m) = (3usize, 6usize);
        let n = m.pow(d as u32);
        let f = CubeFft::new(d, m);
        let orig: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut x = orig.clone();
        f.forward(&mut x);
        f.inverse(&mut x);
        for (a, b) in x.iter().zip(&orig) {
            assert!((a / n as f64 - b).norm() < 1e-12);
        }
        // plane wave along axis 2 with frequency 1 lands in a single bin
        let mut w: Vec<Complex64> = (0..n)
            .map(|i| {
                let z = (i / (m * m)) as f64;
                Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * z / m as f64)
            })
            .collect();
        f.forward(&mut w);
        let bin = m * m; // k = (0, 0, 1)
        assert!((w[bin].re - n as f64).abs() < 1e-9);
        let rest: f64 = w.iter().enumerate().filter(|(i, _)| *i != bin).map(|(_, v)| v.norm()).sum();
        assert!(rest < 1e-8);
    }
}
