//! Sketching matrices: dense Gaussian and structured `Omega = c R T P`.
//!
//! A structured sketch is never materialized. It is applied row by row:
//! flip signs (R), run the fast orthonormal transform (T), gather the
//! selected coordinates (P) and scale by c. With T orthonormal the columns
//! of R T P are already orthonormal, so c = 1 and `Omega^T Omega = I_r`
//! holds to machine precision.

mod fft;

use rand::distributions::Standard;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{dim_mismatch, invalid, Result};
use crate::matrix::{DenseMatrix, SymMatrix};
use crate::parallel::Workers;
use crate::rng;

use fft::Fft;

/// Fast orthonormal transform choices for structured sketches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    /// Walsh-Hadamard, H_n / sqrt(n). Requires power-of-2 length.
    Wht,
    /// Orthonormal type-II discrete cosine transform.
    Dct,
    /// Discrete Hartley transform, (cos + sin) / sqrt(n).
    Dht,
}

impl TransformKind {
    pub fn name(&self) -> &'static str {
        match self {
            TransformKind::Wht => "wht",
            TransformKind::Dct => "dct",
            TransformKind::Dht => "dht",
        }
    }
}

/// Which sketch family to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SketchKind {
    Gaussian,
    Wht,
    Dct,
    Dht,
}

impl SketchKind {
    pub fn transform(&self) -> Option<TransformKind> {
        match self {
            SketchKind::Gaussian => None,
            SketchKind::Wht => Some(TransformKind::Wht),
            SketchKind::Dct => Some(TransformKind::Dct),
            SketchKind::Dht => Some(TransformKind::Dht),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SketchKind::Gaussian => "gaussian",
            SketchKind::Wht => "wht",
            SketchKind::Dct => "dct",
            SketchKind::Dht => "dht",
        }
    }
}

/// Anything that can hand out matrix rows. Lets the sketch run over dense
/// storage or over implicitly defined rows without an n x n buffer.
pub trait RowSource: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn fill_row(&self, i: usize, buf: &mut [f64]);
}

impl RowSource for DenseMatrix {
    fn nrows(&self) -> usize {
        self.rows()
    }
    fn ncols(&self) -> usize {
        self.cols()
    }
    fn fill_row(&self, i: usize, buf: &mut [f64]) {
        buf.copy_from_slice(self.row(i));
    }
}

impl RowSource for SymMatrix {
    fn nrows(&self) -> usize {
        self.order()
    }
    fn ncols(&self) -> usize {
        self.order()
    }
    fn fill_row(&self, i: usize, buf: &mut [f64]) {
        buf.copy_from_slice(self.row(i));
    }
}

/// Applies the orthonormal transform: returns T^T v.
///
/// T is symmetric for WHT and DHT, so there T^T v = T v. Power-of-2 lengths
/// run in O(n log n); other lengths fall back to the direct O(n^2) rule
/// (WHT has no such fallback and rejects them).
pub fn fast_transform(kind: TransformKind, v: &[f64]) -> Result<Vec<f64>> {
    let n = v.len();
    if n == 0 {
        return Err(invalid("transform length must be at least 1"));
    }
    match kind {
        TransformKind::Wht => {
            if !n.is_power_of_two() {
                return Err(invalid(format!(
                    "Walsh-Hadamard transform requires a power-of-2 length, got {n}"
                )));
            }
            let mut out = v.to_vec();
            wht_in_place(&mut out);
            Ok(out)
        }
        TransformKind::Dct => {
            if n.is_power_of_two() {
                let fft = Fft::new(n);
                let mut out = v.to_vec();
                dct_via_fft(&fft, &mut out);
                Ok(out)
            } else {
                Ok(dct_direct(v))
            }
        }
        TransformKind::Dht => {
            if n.is_power_of_two() {
                let fft = Fft::new(n);
                let mut out = v.to_vec();
                dht_via_fft(&fft, &mut out);
                Ok(out)
            } else {
                Ok(dht_direct(v))
            }
        }
    }
}

/// In-place orthonormal Walsh-Hadamard butterfly. Length must be a power of 2.
fn wht_in_place(v: &mut [f64]) {
    let n = v.len();
    let mut h = 1usize;
    while h < n {
        let step = h * 2;
        let mut base = 0;
        while base < n {
            for j in base..base + h {
                let a = v[j];
                let b = v[j + h];
                v[j] = a + b;
                v[j + h] = a - b;
            }
            base += step;
        }
        h = step;
    }
    let scale = 1.0 / (n as f64).sqrt();
    for x in v {
        *x *= scale;
    }
}

/// Orthonormal DCT-II coefficients through the even/odd FFT reordering.
fn dct_via_fft(fft: &Fft, v: &mut [f64]) {
    let n = v.len();
    if n == 1 {
        return;
    }
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    for j in 0..n / 2 {
        re[j] = v[2 * j];
        re[n - 1 - j] = v[2 * j + 1];
    }
    fft.forward(&mut re, &mut im);
    let s0 = (1.0 / n as f64).sqrt();
    let sk = (2.0 / n as f64).sqrt();
    for k in 0..n {
        let angle = -std::f64::consts::PI * k as f64 / (2.0 * n as f64);
        let (s, c) = angle.sin_cos();
        // Re(e^{i angle} (re + i im)) = re cos(angle) - im sin(angle)
        let coeff = re[k] * c - im[k] * s;
        v[k] = coeff * if k == 0 { s0 } else { sk };
    }
}

fn dht_via_fft(fft: &Fft, v: &mut [f64]) {
    let n = v.len();
    if n == 1 {
        return;
    }
    let mut re = v.to_vec();
    let mut im = vec![0.0; n];
    fft.forward(&mut re, &mut im);
    let scale = 1.0 / (n as f64).sqrt();
    for k in 0..n {
        v[k] = (re[k] - im[k]) * scale;
    }
}

fn dct_direct(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let s0 = (1.0 / n as f64).sqrt();
    let sk = (2.0 / n as f64).sqrt();
    (0..n)
        .map(|k| {
            let sum: f64 = v
                .iter()
                .enumerate()
                .map(|(j, &x)| {
                    x * (std::f64::consts::PI * (2 * j + 1) as f64 * k as f64
                        / (2.0 * n as f64))
                        .cos()
                })
                .sum();
            sum * if k == 0 { s0 } else { sk }
        })
        .collect()
}

fn dht_direct(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|k| {
            let sum: f64 = v
                .iter()
                .enumerate()
                .map(|(j, &x)| {
                    let angle = 2.0 * std::f64::consts::PI * ((j * k) % n) as f64 / n as f64;
                    x * (angle.cos() + angle.sin())
                })
                .sum();
            sum * scale
        })
        .collect()
}

/// Structured sketch Omega = c R T P, held implicitly.
#[derive(Debug, Clone)]
pub struct StructuredSketch {
    n: usize,
    r: usize,
    kind: TransformKind,
    signs: Vec<f64>,
    selected: Vec<usize>,
    scale: f64,
    seed: u64,
}

impl StructuredSketch {
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn r(&self) -> usize {
        self.r
    }
    pub fn kind(&self) -> TransformKind {
        self.kind
    }
    /// Diagonal of R: independent Rademacher signs.
    pub fn signs(&self) -> &[f64] {
        &self.signs
    }
    /// Columns picked by the permutation submatrix P, strictly increasing.
    pub fn selected(&self) -> &[usize] {
        &self.selected
    }
    pub fn scale(&self) -> f64 {
        self.scale
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// One row of K Omega: out_j = c * (T^T (signs . row))[selected_j].
    fn apply_row(&self, row: &[f64], out: &mut [f64]) -> Result<()> {
        let flipped: Vec<f64> = row.iter().zip(&self.signs).map(|(x, s)| x * s).collect();
        let transformed = fast_transform(self.kind, &flipped)?;
        for (o, &idx) in out.iter_mut().zip(&self.selected) {
            *o = self.scale * transformed[idx];
        }
        Ok(())
    }
}

/// Draws a structured sketch from the seeded generator.
pub fn build_structured(
    n: usize,
    r: usize,
    kind: TransformKind,
    seed: u64,
) -> Result<StructuredSketch> {
    if r == 0 || r > n {
        return Err(invalid(format!(
            "sketch dimension must satisfy 1 <= r <= n, got r={r}, n={n}"
        )));
    }
    if kind == TransformKind::Wht && !n.is_power_of_two() {
        return Err(invalid(format!(
            "Walsh-Hadamard sketches require a power-of-2 dimension, got n={n}"
        )));
    }
    let mut gen = rng::seeded(seed);
    let signs: Vec<f64> = (&mut gen)
        .sample_iter::<bool, _>(Standard)
        .take(n)
        .map(|b| if b { 1.0 } else { -1.0 })
        .collect();
    let mut selected = rand::seq::index::sample(&mut gen, n, r).into_vec();
    selected.sort_unstable();
    Ok(StructuredSketch {
        n,
        r,
        kind,
        signs,
        selected,
        scale: 1.0,
        seed,
    })
}

/// K Omega for a structured sketch, parallel over rows of K.
pub fn sketch_apply<S: RowSource>(
    k: &S,
    sketch: &StructuredSketch,
    workers: &Workers,
) -> Result<DenseMatrix> {
    if k.ncols() != sketch.n {
        return Err(dim_mismatch(
            format!("{} columns", sketch.n),
            format!("{} columns", k.ncols()),
        ));
    }
    let nrows = k.nrows();
    let rows = workers.map_indexed(nrows, |i| {
        let mut buf = vec![0.0; k.ncols()];
        k.fill_row(i, &mut buf);
        let mut out = vec![0.0; sketch.r];
        sketch
            .apply_row(&buf, &mut out)
            .expect("row length already validated");
        out
    });
    DenseMatrix::from_rows(&rows)
}

/// Dense Gaussian sketch with entries N(0,1)/sqrt(r).
#[derive(Debug, Clone)]
pub struct GaussianSketch {
    entries: DenseMatrix,
    seed: u64,
}

impl GaussianSketch {
    pub fn n(&self) -> usize {
        self.entries.rows()
    }
    pub fn r(&self) -> usize {
        self.entries.cols()
    }
    pub fn entries(&self) -> &DenseMatrix {
        &self.entries
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
}

pub fn build_gaussian(n: usize, r: usize, seed: u64) -> Result<GaussianSketch> {
    if r == 0 || r > n {
        return Err(invalid(format!(
            "sketch dimension must satisfy 1 <= r <= n, got r={r}, n={n}"
        )));
    }
    let mut gen = rng::seeded(seed);
    let scale = 1.0 / (r as f64).sqrt();
    let mut entries = DenseMatrix::zeros(n, r);
    for i in 0..n {
        for j in 0..r {
            let z: f64 = gen.sample(StandardNormal);
            entries.set(i, j, z * scale);
        }
    }
    Ok(GaussianSketch { entries, seed })
}

/// K Omega for a dense Gaussian sketch, parallel over rows of K.
pub fn gaussian_apply<S: RowSource>(
    k: &S,
    sketch: &GaussianSketch,
    workers: &Workers,
) -> Result<DenseMatrix> {
    if k.ncols() != sketch.n() {
        return Err(dim_mismatch(
            format!("{} columns", sketch.n()),
            format!("{} columns", k.ncols()),
        ));
    }
    let r = sketch.r();
    let rows = workers.map_indexed(k.nrows(), |i| {
        let mut buf = vec![0.0; k.ncols()];
        k.fill_row(i, &mut buf);
        let mut out = vec![0.0; r];
        for (kk, &x) in buf.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let g_row = sketch.entries.row(kk);
            for (o, &g) in out.iter_mut().zip(g_row) {
                *o += x * g;
            }
        }
        out
    });
    DenseMatrix::from_rows(&rows)
}

/// K Omega for either sketch family (fresh sketch from `seed`).
pub fn apply_sketch_kind<S: RowSource>(
    k: &S,
    kind: SketchKind,
    r: usize,
    seed: u64,
    workers: &Workers,
) -> Result<DenseMatrix> {
    match kind.transform() {
        Some(t) => {
            let sketch = build_structured(k.ncols(), r, t, seed)?;
            sketch_apply(k, &sketch, workers)
        }
        None => {
            let sketch = build_gaussian(k.ncols(), r, seed)?;
            gaussian_apply(k, &sketch, workers)
        }
    }
}
