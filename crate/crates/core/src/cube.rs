//! Functions on the Boolean hypercube, their Walsh-Hadamard spectra, and
//! all-radii sphere means.
//!
//! Vertices of `{0,1}^n` are indexed by `0..2^n`; bit `i` of the index is
//! coordinate `i`. Norms use counting measure throughout: no `2^-n`
//! averaging factors anywhere.

use crate::error::{Error, Result};
use crate::par;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// Largest dimension accepted by default (`2^26` points, 512 MiB of `f64`).
pub const DEFAULT_MAX_DIMENSION: usize = 26;

/// Magic prefix of the binary cube-function file format.
pub const FILE_MAGIC: &[u8; 8] = b"CUBEFN01";

/// Exact binomial coefficient as `u64`; valid for `n <= 64`.
pub fn binomial_u64(n: usize, k: usize) -> u64 {
    debug_assert!(n <= 64);
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc * (n - j) as u128 / (j + 1) as u128;
    }
    acc as u64
}

/// Exact binomial coefficient as `f64`; exact as an integer for `n <= 52`,
/// correctly rounded for `n <= 64`.
pub fn binomial_f64(n: usize, k: usize) -> f64 {
    binomial_u64(n, k) as f64
}

/// A real-valued function on `{0,1}^n`, stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct CubeFunction {
    n: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CubeFunctionJson {
    n: usize,
    values: Vec<f64>,
}

impl CubeFunction {
    /// Wraps `values` as a function on `{0,1}^n`. Fails if the length is not
    /// `2^n`, any value is non-finite, or `n` exceeds `max_dimension`.
    pub fn with_max_dimension(n: usize, values: Vec<f64>, max_dimension: usize) -> Result<Self> {
        if n > max_dimension {
            return Err(Error::Capacity {
                n,
                max: max_dimension,
            });
        }
        let expected = 1usize << n;
        if values.len() != expected {
            return Err(Error::Length {
                n,
                expected,
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(CubeFunction { n, values })
    }

    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        Self::with_max_dimension(n, values, DEFAULT_MAX_DIMENSION)
    }

    pub fn zeros(n: usize) -> Result<Self> {
        if n > DEFAULT_MAX_DIMENSION {
            return Err(Error::Capacity {
                n,
                max: DEFAULT_MAX_DIMENSION,
            });
        }
        Ok(CubeFunction {
            n,
            values: vec![0.0; 1 << n],
        })
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        let mut f = Self::zeros(n)?;
        f.values.fill(c);
        Ok(f)
    }

    /// Point mass at vertex `v`.
    pub fn delta(n: usize, v: usize) -> Result<Self> {
        let mut f = Self::zeros(n)?;
        if v >= f.values.len() {
            return Err(Error::domain(format!(
                "vertex {v} out of range for dimension {n}"
            )));
        }
        f.values[v] = 1.0;
        Ok(f)
    }

    pub fn from_fn(n: usize, g: impl FnMut(usize) -> f64) -> Result<Self> {
        let g = g;
        Self::new(n, (0..1usize << n).map(g).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Index of the first strictly negative value, if any.
    pub fn first_negative(&self) -> Option<(usize, f64)> {
        self.values
            .iter()
            .enumerate()
            .find(|(_, &v)| v < 0.0)
            .map(|(i, &v)| (i, v))
    }

    pub fn require_nonnegative(&self) -> Result<()> {
        match self.first_negative() {
            Some((index, value)) => Err(Error::Negative { index, value }),
            None => Ok(()),
        }
    }

    /// `f(x XOR mask)` composed with coordinate translation.
    pub fn translate(&self, mask: usize) -> CubeFunction {
        let values = (0..self.values.len())
            .map(|x| self.values[x ^ mask])
            .collect();
        CubeFunction { n: self.n, values }
    }

    /// Antipodal reflection `f(complement(x))`.
    pub fn reflect(&self) -> CubeFunction {
        self.translate((1usize << self.n) - 1)
    }

    /// `L^p` norm under counting measure. `p` must be in `[1, inf]`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm_slice(&self.values, p)
    }

    pub fn l1_norm(&self) -> f64 {
        lp_norm_slice(&self.values, 1.0).expect("p=1 is valid")
    }

    pub fn l2_norm(&self) -> f64 {
        lp_norm_slice(&self.values, 2.0).expect("p=2 is valid")
    }

    /// Writes the binary format: magic, little-endian `u32` dimension, then
    /// `2^n` little-endian `f64` values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(FILE_MAGIC)?;
        w.write_all(&(self.n as u32).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != FILE_MAGIC {
            return Err(Error::format("bad magic; not a cube-function file"));
        }
        let mut nb = [0u8; 4];
        r.read_exact(&mut nb)?;
        let n = u32::from_le_bytes(nb) as usize;
        if n > DEFAULT_MAX_DIMENSION {
            return Err(Error::Capacity {
                n,
                max: DEFAULT_MAX_DIMENSION,
            });
        }
        let len = 1usize << n;
        let mut values = vec![0.0f64; len];
        let mut buf = [0u8; 8];
        for v in values.iter_mut() {
            r.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(Error::format("trailing bytes after cube-function data"));
        }
        CubeFunction::new(n, values)
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        let doc = CubeFunctionJson {
            n: self.n,
            values: self.values.clone(),
        };
        serde_json::to_writer(&mut w, &doc).map_err(|e| Error::format(e.to_string()))?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        let doc: CubeFunctionJson =
            serde_json::from_reader(r).map_err(|e| Error::format(e.to_string()))?;
        CubeFunction::new(doc.n, doc.values)
    }

    /// Reads either format, deciding by the magic prefix.
    pub fn read_path(path: &Path) -> Result<Self> {
        let data = std::fs::read(path)?;
        if data.starts_with(FILE_MAGIC) {
            Self::read_binary(&data[..])
        } else {
            Self::read_json(&data[..])
        }
    }

    /// Writes binary unless the path ends in `.json`.
    pub fn write_path(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        if path.extension().is_some_and(|e| e == "json") {
            self.write_json(&mut w)
        } else {
            self.write_binary(&mut w)
        }
    }
}

/// `L^p` norm of a slice under counting measure.
pub fn lp_norm_slice(values: &[f64], p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::domain(format!(
            "lp_norm requires p in [1, inf], got {p}"
        )));
    }
    if p.is_infinite() {
        return Ok(values.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    if p == 1.0 {
        return Ok(par::pairwise_sum_fn(0, values.len(), &|i| values[i].abs()));
    }
    if p == 2.0 {
        let s = par::pairwise_sum_fn(0, values.len(), &|i| values[i] * values[i]);
        return Ok(s.sqrt());
    }
    let s = par::pairwise_sum_fn(0, values.len(), &|i| values[i].abs().powf(p));
    Ok(s.powf(1.0 / p))
}

/// Fixed-shape pairwise dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    par::pairwise_sum_fn(0, a.len(), &|i| a[i] * b[i])
}

const BUTTERFLY_PAR_MIN: usize = 1 << 13;

/// In-place unnormalized Walsh-Hadamard butterflies (`H` without scaling).
pub(crate) fn wht_unnormalized_in_place(data: &mut [f64]) {
    let len = data.len();
    debug_assert!(len.is_power_of_two());
    let mut h = 1;
    while h < len {
        let block = h * 2;
        if block <= BUTTERFLY_PAR_MIN {
            // Many small blocks: parallelize across blocks.
            par::for_each_chunk_mut(data, block, |_, chunk| {
                let (a, b) = chunk.split_at_mut(h);
                for i in 0..h {
                    let x = a[i];
                    let y = b[i];
                    a[i] = x + y;
                    b[i] = x - y;
                }
            });
        } else {
            // Few large blocks: parallelize inside each block.
            for chunk in data.chunks_mut(block) {
                let (a, b) = chunk.split_at_mut(h);
                par::for_each_chunk_pair_mut(a, b, BUTTERFLY_PAR_MIN, |_, ca, cb| {
                    for i in 0..ca.len() {
                        let x = ca[i];
                        let y = cb[i];
                        ca[i] = x + y;
                        cb[i] = x - y;
                    }
                });
            }
        }
        h = block;
    }
}

/// Walsh-Hadamard coefficients of a cube function.
///
/// `coeffs[y] = 2^{-n/2} * sum_x f(x) (-1)^{x AND y popcount}` so the
/// transform is an involution and an `L^2` isometry under counting measure.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralCoefficients {
    n: usize,
    coeffs: Vec<f64>,
}

impl SpectralCoefficients {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// `L^2` energy per level: entry `x` sums `coeffs[y]^2` over `|y| = x`.
    pub fn level_energies(&self) -> Vec<f64> {
        let mut energies = vec![0.0f64; self.n + 1];
        // Fixed chunking, then in-order combination: deterministic.
        const CHUNK: usize = 1 << 14;
        let nlev = self.n + 1;
        let partials: Vec<Vec<f64>> = par::map_collect(self.coeffs.len().div_ceil(CHUNK), |ci| {
            let lo = ci * CHUNK;
            let hi = (lo + CHUNK).min(self.coeffs.len());
            let mut part = vec![0.0f64; nlev];
            for y in lo..hi {
                let c = self.coeffs[y];
                part[y.count_ones() as usize] += c * c;
            }
            part
        });
        for part in partials {
            for (e, p) in energies.iter_mut().zip(part) {
                *e += p;
            }
        }
        energies
    }

    /// Inverse transform (the transform is its own inverse).
    pub fn inverse(&self) -> CubeFunction {
        let mut data = self.coeffs.clone();
        wht_unnormalized_in_place(&mut data);
        let scale = 0.5f64.powi(self.n as i32).sqrt();
        for v in &mut data {
            *v *= scale;
        }
        CubeFunction {
            n: self.n,
            values: data,
        }
    }
}

/// Walsh-Hadamard transform with orthonormal `2^{-n/2}` scaling.
pub fn wht(f: &CubeFunction) -> SpectralCoefficients {
    let mut data = f.values.clone();
    wht_unnormalized_in_place(&mut data);
    let scale = 0.5f64.powi(f.n as i32).sqrt();
    for v in &mut data {
        *v *= scale;
    }
    SpectralCoefficients {
        n: f.n,
        coeffs: data,
    }
}

/// Applies a spectral multiplier that depends only on the coefficient level.
///
/// Computes `H diag(profile) H f / 2^n` with a single exact power-of-two
/// scaling. Any profile with `profile[0] = 1` fixes constant functions
/// bit-exactly: the butterflies on a constant produce exact doublings and
/// exact zero differences.
pub fn apply_level_profile(f: &CubeFunction, profile: &[f64]) -> Result<CubeFunction> {
    if profile.len() != f.n + 1 {
        return Err(Error::Length {
            n: f.n,
            expected: f.n + 1,
            got: profile.len(),
        });
    }
    let mut data = f.values.clone();
    wht_unnormalized_in_place(&mut data);
    let scale = 0.5f64.powi(f.n as i32);
    par::for_each_chunk_mut(&mut data, 1 << 14, |ci, chunk| {
        let base = ci << 14;
        for (j, v) in chunk.iter_mut().enumerate() {
            let level = (base + j).count_ones() as usize;
            *v *= profile[level];
        }
    });
    wht_unnormalized_in_place(&mut data);
    for v in &mut data {
        *v *= scale;
    }
    Ok(CubeFunction {
        n: f.n,
        values: data,
    })
}

/// Sphere means of one function at every center and radius.
///
/// `value(x, k)` is the average of `f` over the Hamming sphere of radius `k`
/// centered at `x`. Stored radius-major; `2^n * (n+1)` values.
#[derive(Clone, Debug)]
pub struct SphereSumMatrix {
    n: usize,
    /// `cols[k][x]` = mean of `f` over the radius-`k` sphere at `x`.
    cols: Vec<Vec<f64>>,
}

impl SphereSumMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self, x: usize, k: usize) -> f64 {
        self.cols[k][x]
    }

    pub fn radius_slice(&self, k: usize) -> &[f64] {
        &self.cols[k]
    }

    /// Row of means at center `x`, radii `0..=n`.
    pub fn row(&self, x: usize) -> Vec<f64> {
        self.cols.iter().map(|c| c[x]).collect()
    }

    /// Un-normalized row mass `sum_k value(x,k) * C(n,k)`; equals `sum_y f(y)`.
    pub fn row_mass(&self, x: usize) -> f64 {
        let mut acc = 0.0;
        for (k, col) in self.cols.iter().enumerate() {
            acc += col[x] * binomial_f64(self.n, k);
        }
        acc
    }
}

/// Hypercube adjacency apply: `out[x] = sum_i v[x XOR 2^i]`.
fn adjacency_apply(n: usize, v: &[f64], out: &mut [f64]) {
    par::for_each_chunk_mut(out, 1 << 12, |ci, chunk| {
        let base = ci << 12;
        for (j, o) in chunk.iter_mut().enumerate() {
            let x = base + j;
            let mut acc = 0.0;
            for i in 0..n {
                acc += v[x ^ (1usize << i)];
            }
            *o = acc;
        }
    });
}

/// Computes all sphere means of `f` via the distance-regular three-term
/// recurrence `(k+1) A_{k+1} = L A_k - (n-k+1) A_{k-1}` on un-normalized
/// sphere sums, then normalizes by `C(n,k)`. `O(n^2 2^n)` total.
pub fn sphere_means_all(f: &CubeFunction) -> SphereSumMatrix {
    let n = f.n;
    let len = f.values.len();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    cols.push(f.values.clone());
    if n == 0 {
        return SphereSumMatrix { n, cols };
    }
    let mut prev = f.values.clone(); // A_0
    let mut cur = vec![0.0f64; len];
    adjacency_apply(n, &prev, &mut cur); // A_1 = L A_0
    cols.push(cur.iter().map(|v| v / n as f64).collect());
    let mut scratch = vec![0.0f64; len];
    for k in 1..n {
        adjacency_apply(n, &cur, &mut scratch);
        let back = (n - k + 1) as f64;
        let div = (k + 1) as f64;
        let norm = binomial_f64(n, k + 1);
        par::for_each_chunk_mut(&mut prev, 1 << 12, |ci, chunk| {
            let base = ci << 12;
            for (j, p) in chunk.iter_mut().enumerate() {
                let x = base + j;
                *p = (scratch[x] - back * *p) / div;
            }
        });
        // prev now holds A_{k+1}; rotate.
        std::mem::swap(&mut prev, &mut cur);
        cols.push(cur.iter().map(|v| v / norm).collect());
    }
    SphereSumMatrix { n, cols }
}

/// Exact-rational sphere means for small `n`; same recurrence as
/// [`sphere_means_all`]. Returns `sums[k][x]` normalized by `C(n,k)`.
pub fn sphere_means_exact(n: usize, values: &[BigRational]) -> Vec<Vec<BigRational>> {
    assert_eq!(values.len(), 1usize << n);
    let len = values.len();
    let binom = |k: usize| -> BigInt {
        let mut acc = BigInt::one();
        for j in 0..k {
            acc = acc * BigInt::from(n - j) / BigInt::from(j + 1);
        }
        acc
    };
    let adjacency = |v: &[BigRational]| -> Vec<BigRational> {
        (0..len)
            .map(|x| {
                let mut acc = BigRational::zero();
                for i in 0..n {
                    acc += &v[x ^ (1usize << i)];
                }
                acc
            })
            .collect()
    };
    let mut cols = vec![values.to_vec()];
    if n == 0 {
        return cols;
    }
    let mut prev = values.to_vec();
    let mut cur = adjacency(&prev);
    cols.push(
        cur.iter()
            .map(|v| v / BigRational::from(BigInt::from(n)))
            .collect(),
    );
    for k in 1..n {
        let lap = adjacency(&cur);
        let back = BigRational::from(BigInt::from(n - k + 1));
        let div = BigRational::from(BigInt::from(k + 1));
        let next: Vec<BigRational> = (0..len)
            .map(|x| (&lap[x] - &back * &prev[x]) / &div)
            .collect();
        prev = std::mem::replace(&mut cur, next);
        let norm = BigRational::from(binom(k + 1));
        cols.push(cur.iter().map(|v| v / &norm).collect());
    }
    cols
}

/// Exact rational `L^1` norm helper for rational vectors.
pub fn l1_norm_exact(values: &[BigRational]) -> BigRational {
    values
        .iter()
        .fold(BigRational::zero(), |acc, v| acc + v.abs())
}
