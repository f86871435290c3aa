//! Radix-2 complex FFT core backing the fast DCT and DHT paths.

/// Forward FFT plan for a fixed power-of-2 length.
///
/// Twiddles are tabulated directly from `sin_cos`, not accumulated, so
/// every stage sees full-precision rotations. A plan is immutable and can
/// be shared across worker threads.
pub(crate) struct Fft {
    n: usize,
    tw_re: Vec<f64>,
    tw_im: Vec<f64>,
}

impl Fft {
    /// `n` must be a power of two.
    pub(crate) fn new(n: usize) -> Self {
        debug_assert!(n.is_power_of_two());
        let half = n / 2;
        let mut tw_re = Vec::with_capacity(half);
        let mut tw_im = Vec::with_capacity(half);
        for j in 0..half {
            let angle = -2.0 * std::f64::consts::PI * j as f64 / n as f64;
            let (s, c) = angle.sin_cos();
            tw_re.push(c);
            tw_im.push(s);
        }
        Self { n, tw_re, tw_im }
    }

    /// In-place forward transform: X_k = sum_j x_j exp(-2 pi i j k / n).
    pub(crate) fn forward(&self, re: &mut [f64], im: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(re.len(), n);
        debug_assert_eq!(im.len(), n);
        if n < 2 {
            return;
        }

        // Bit-reversal permutation.
        let mut j = 0usize;
        for i in 1..n {
            let mut bit = n >> 1;
            while j & bit != 0 {
                j ^= bit;
                bit >>= 1;
            }
            j |= bit;
            if i < j {
                re.swap(i, j);
                im.swap(i, j);
            }
        }

        let mut len = 2usize;
        while len <= n {
            let stride = n / len;
            let half = len / 2;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let w_re = self.tw_re[k * stride];
                    let w_im = self.tw_im[k * stride];
                    let a = start + k;
                    let b = a + half;
                    let t_re = re[b] * w_re - im[b] * w_im;
                    let t_im = re[b] * w_im + im[b] * w_re;
                    re[b] = re[a] - t_re;
                    im[b] = im[a] - t_im;
                    re[a] += t_re;
                    im[a] += t_im;
                }
            }
            len <<= 1;
        }
    }
}
