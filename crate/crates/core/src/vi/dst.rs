//! Orthonormal type-I discrete sine transform through a complex FFT.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// `x̂_m = √(2/(N+1)) Σ_i x_i sin(π i m / (N+1))`, `i, m = 1..=N`.
/// The transform is its own inverse.
pub(crate) struct Dst1 {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for Dst1 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dst1").field("n", &self.n).finish()
    }
}

impl Dst1 {
    pub(crate) fn new(n: usize) -> Self {
        let len = 2 * (n + 1);
        let fft = FftPlanner::new().plan_fft_forward(len);
        Dst1 { n, fft, scale: (2.0 / (n + 1) as f64).sqrt() }
    }

    /// Transforms `x` (length `n`) in place.
    pub(crate) fn apply(&self, x: &mut [f64], buf: &mut Vec<Complex<f64>>) {
        let n = self.n;
        let len = 2 * (n + 1);
        buf.clear();
        buf.resize(len, Complex::new(0.0, 0.0));
        for i in 0..n {
            buf[i + 1].re = x[i];
            buf[len - 1 - i].re = -x[i];
        }
        self.fft.process(buf);
        for m in 0..n {
            x[m] = -0.5 * buf[m + 1].im * self.scale;
        }
    }

    /// Transforms every line of a row-major `n × n` block along both axes.
    pub(crate) fn apply_2d(&self, x: &mut [f64], buf: &mut Vec<Complex<f64>>, line: &mut Vec<f64>) {
        let n = self.n;
        for row in x.chunks_mut(n) {
            self.apply(row, buf);
        }
        line.resize(n, 0.0);
        for c in 0..n {
            for r in 0..n {
                line[r] = x[r * n + c];
            }
            self.apply(line, buf);
            for r in 0..n {
                x[r * n + c] = line[r];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_sum_and_inverts() {
        let n = 7;
        let d = Dst1::new(n);
        let x: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64) - 4.5).collect();
        let mut y = x.clone();
        let mut buf = Vec::new();
        d.apply(&mut y, &mut buf);
        let s = (2.0 / (n + 1) as f64).sqrt();
        for m in 1..=n {
            let direct: f64 = (1..=n)
                .map(|i| x[i - 1] * (std::f64::consts::PI * (i * m) as f64 / (n + 1) as f64).sin())
                .sum::<f64>()
                * s;
            assert!((y[m - 1] - direct).abs() < 1e-12);
        }
        d.apply(&mut y, &mut buf);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
