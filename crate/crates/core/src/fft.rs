//! In-place radix-2 complex FFT and its separable extension to cubic 3D arrays.
//!
//! Forward transforms are unnormalized, inverse transforms carry the `1/n`
//! factor so that `inverse(forward(x)) == x`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Precomputed twiddles and bit-reversal table for one power-of-two length.
#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<u32>,
}

impl Fft {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::Config(alloc::format!(
                "FFT length {n} is not a power of two"
            )));
        }
        // each twiddle evaluated directly, no recurrence drift
        let twiddles = (0..n / 2)
            .map(|k| {
                let angle = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(libm::cos(angle), libm::sin(angle))
            })
            .collect();
        let bits = n.trailing_zeros();
        let bitrev = (0..n as u32)
            .map(|i| {
                if bits == 0 {
                    0
                } else {
                    i.reverse_bits() >> (32 - bits)
                }
            })
            .collect();
        Ok(Self {
            n,
            twiddles,
            bitrev,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, true);
        let scale = 1.0 / self.n as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        assert_eq!(data.len(), n, "FFT buffer length mismatch");
        for i in 0..n {
            let j = self.bitrev[i] as usize;
            if j > i {
                data.swap(i, j);
            }
        }
        let mut half = 1;
        while half < n {
            let stride = n / (2 * half);
            for start in (0..n).step_by(2 * half) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let w = if inverse { w.conj() } else { w };
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            half *= 2;
        }
    }
}

/// Separable FFT over a flattened row-major array with `dim` axes of equal length.
#[derive(Debug, Clone)]
pub struct FftNd {
    fft: Fft,
    dim: usize,
}

impl FftNd {
    pub fn new(points_per_axis: usize, dim: usize) -> Result<Self> {
        Ok(Self {
            fft: Fft::new(points_per_axis)?,
            dim,
        })
    }

    pub fn points_per_axis(&self) -> usize {
        self.fft.len()
    }

    pub fn total_len(&self) -> usize {
        self.fft.len().pow(self.dim as u32)
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, false);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, true);
    }

    fn apply(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.fft.len();
        let mut scratch = alloc::vec![Complex64::new(0.0, 0.0); if self.dim > 1 { n } else { 0 }];
        assert_eq!(data.len(), self.total_len(), "FFT buffer length mismatch");
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let block = stride * n;
            for outer in (0..data.len()).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    if stride == 1 {
                        let line = &mut data[base..base + n];
                        if inverse {
                            self.fft.inverse(line);
                        } else {
                            self.fft.forward(line);
                        }
                        continue;
                    }
                    for (j, s) in scratch.iter_mut().enumerate() {
                        *s = data[base + j * stride];
                    }
                    if inverse {
                        self.fft.inverse(&mut scratch);
                    } else {
                        self.fft.forward(&mut scratch);
                    }
                    for (j, s) in scratch.iter().enumerate() {
                        data[base + j * stride] = *s;
                    }
                }
            }
        }
    }
}
