//! Complex FFT: iterative radix-2 for power-of-two lengths, Bluestein's chirp
//! convolution otherwise. Forward transforms use `exp(-2 pi i jk / n)` and are
//! unnormalized; [`Fft3::inverse`] divides by `n^3`.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::math::{cos, sin, PI};
use crate::reduce;

pub type C64 = Complex64;

#[derive(Debug, Clone)]
enum Plan {
    Radix2 { twiddles: Vec<C64>, rev: Vec<u32> },
    Bluestein { m: usize, chirp: Vec<C64>, kernel: Vec<C64>, inner: Box<Fft> },
}

#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    plan: Plan,
}

impl Fft {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "FFT length must be positive");
        if n.is_power_of_two() {
            let bits = n.trailing_zeros();
            let rev = (0..n as u32)
                .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) })
                .collect();
            let twiddles = (0..n / 2)
                .map(|k| {
                    let a = -2.0 * PI * k as f64 / n as f64;
                    C64::new(cos(a), sin(a))
                })
                .collect();
            return Fft { n, plan: Plan::Radix2 { twiddles, rev } };
        }
        let m = (2 * n - 1).next_power_of_two();
        let two_n = 2 * n as u64;
        // exp(-i pi j^2 / n), with j^2 reduced mod 2n to keep the phase accurate
        let chirp: Vec<C64> = (0..n as u64)
            .map(|j| {
                let a = -PI * ((j * j) % two_n) as f64 / n as f64;
                C64::new(cos(a), sin(a))
            })
            .collect();
        let inner = Box::new(Fft::new(m));
        let mut kernel = vec![C64::new(0.0, 0.0); m];
        kernel[0] = chirp[0].conj();
        for j in 1..n {
            kernel[j] = chirp[j].conj();
            kernel[m - j] = chirp[j].conj();
        }
        inner.forward(&mut kernel);
        Fft { n, plan: Plan::Bluestein { m, chirp, kernel, inner } }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&self, buf: &mut [C64]) {
        assert_eq!(buf.len(), self.n);
        match &self.plan {
            Plan::Radix2 { twiddles, rev } => radix2(buf, twiddles, rev),
            Plan::Bluestein { m, chirp, kernel, inner } => {
                let mut a = vec![C64::new(0.0, 0.0); *m];
                for j in 0..self.n {
                    a[j] = buf[j] * chirp[j];
                }
                inner.forward(&mut a);
                for (x, k) in a.iter_mut().zip(kernel) {
                    *x *= k;
                }
                inner.inverse_unnormalized(&mut a);
                let scale = 1.0 / *m as f64;
                for k in 0..self.n {
                    buf[k] = a[k] * chirp[k] * scale;
                }
            }
        }
    }

    /// Inverse transform without the `1/n` factor.
    pub fn inverse_unnormalized(&self, buf: &mut [C64]) {
        for x in buf.iter_mut() {
            *x = x.conj();
        }
        self.forward(buf);
        for x in buf.iter_mut() {
            *x = x.conj();
        }
    }
}

fn radix2(buf: &mut [C64], twiddles: &[C64], rev: &[u32]) {
    let n = buf.len();
    for i in 0..n {
        let j = rev[i] as usize;
        if j > i {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = twiddles[k * step];
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}

/// Transforms of an `n^3` cube stored in `(z, y, x)` order.
#[derive(Debug, Clone)]
pub struct Fft3 {
    n: usize,
    line: Fft,
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        Fft3 { n, line: Fft::new(n) }
    }

    pub fn forward(&self, data: &mut [C64]) {
        self.apply(data, false);
    }

    pub fn inverse(&self, data: &mut [C64]) {
        self.apply(data, true);
        let scale = 1.0 / (self.n * self.n * self.n) as f64;
        for x in data.iter_mut() {
            *x *= scale;
        }
    }

    fn apply(&self, data: &mut [C64], inverse: bool) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n);
        let line = &self.line;
        let run = |buf: &mut [C64]| {
            if inverse {
                line.inverse_unnormalized(buf)
            } else {
                line.forward(buf)
            }
        };
        // x: contiguous lines
        reduce::for_each_chunk_mut(data, n * n, |_, plane| {
            for row in plane.chunks_mut(n) {
                run(row);
            }
        });
        // y: strided within each z-plane
        reduce::for_each_chunk_mut(data, n * n, |_, plane| {
            let mut buf = vec![C64::new(0.0, 0.0); n];
            for x in 0..n {
                for y in 0..n {
                    buf[y] = plane[y * n + x];
                }
                run(&mut buf);
                for y in 0..n {
                    plane[y * n + x] = buf[y];
                }
            }
        });
        // z: gather the columns of each y-row, transform, scatter back
        let snapshot: &[C64] = data;
        let rows: Vec<Vec<C64>> = reduce::map_indexed(n, |y| {
            let mut out = vec![C64::new(0.0, 0.0); n * n];
            let mut buf = vec![C64::new(0.0, 0.0); n];
            for x in 0..n {
                for z in 0..n {
                    buf[z] = snapshot[(z * n + y) * n + x];
                }
                run(&mut buf);
                for z in 0..n {
                    out[z * n + x] = buf[z];
                }
            }
            out
        });
        for (y, row) in rows.iter().enumerate() {
            for z in 0..n {
                let dst = (z * n + y) * n;
                data[dst..dst + n].copy_from_slice(&row[z * n..z * n + n]);
            }
        }
    }
}
