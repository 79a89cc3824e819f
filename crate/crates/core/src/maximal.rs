//! Maximal functions of operator families: pointwise suprema with argmax
//! tracking, exact `L^1` behavior on point masses, weak-(1,1) ratios, and
//! lower-bound estimation of the `L^2 -> L^2` norm.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::cube::{
    binomial_u64, lp_norm_slice, sphere_means_all, wht_unnormalized_in_place, CubeFunction,
};
use crate::par;
use crate::radial::{GridSpec, OperatorFamily};
use crate::{Error, Result};

/// Pointwise maximum of a family applied to one function, together with the
/// winning member index at every vertex.
#[derive(Clone, Debug)]
pub struct MaximalResult {
    values: CubeFunction,
    selector: Vec<u32>,
    family_tag: String,
}

impl MaximalResult {
    pub fn values(&self) -> &CubeFunction {
        &self.values
    }

    pub fn into_values(self) -> CubeFunction {
        self.values
    }

    /// Index of the member achieving the max at each vertex; ties resolve to
    /// the smallest index, so the selector is deterministic.
    pub fn selector(&self) -> &[u32] {
        &self.selector
    }

    pub fn family_tag(&self) -> &str {
        &self.family_tag
    }
}

/// `data[i] *= profile[popcount(i)]`, chunk-parallel. Must stay numerically
/// identical to the multiplier step inside `apply_level_profile`.
fn level_multiply(data: &mut [f64], profile: &[f64]) {
    par::for_each_chunk_mut(data, 1 << 14, |ci, chunk| {
        let base = ci << 14;
        for (j, v) in chunk.iter_mut().enumerate() {
            *v *= profile[(base + j).count_ones() as usize];
        }
    });
}

/// Pointwise max across equally long columns. Strict `>` keeps the first
/// (smallest) column index on ties.
fn merge_max(len: usize, cols: &[&[f64]]) -> (Vec<f64>, Vec<u32>) {
    let pairs: Vec<(f64, u32)> = par::map_collect(len, |x| {
        let mut best = cols[0][x];
        let mut arg = 0u32;
        for (m, col) in cols.iter().enumerate().skip(1) {
            let v = col[x];
            if v > best {
                best = v;
                arg = m as u32;
            }
        }
        (best, arg)
    });
    pairs.into_iter().unzip()
}

/// `Mf(x) = max_m (A_m f)(x)` for nonnegative `f`.
///
/// A family of sphere means `S_0, S_1, ...` in radius order is served by a
/// single sweep of the sphere-mean recurrence, `O(n^2 2^n)` total. Every
/// other family shares one forward transform and pays one inverse transform
/// per member; that route holds one `2^n` buffer per member.
pub fn maximal_apply(family: &OperatorFamily, f: &CubeFunction) -> Result<MaximalResult> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if family.n() != f.n() {
        return Err(Error::DimensionMismatch {
            left: family.n(),
            right: f.n(),
        });
    }
    if let Some((index, value)) = f.first_negative() {
        return Err(Error::Negative { index, value });
    }
    let len = f.len();
    let (values, selector) = if family.is_prefix_spherical() {
        let spheres = sphere_means_all(f);
        let cols: Vec<&[f64]> = (0..family.len()).map(|k| spheres.radius_slice(k)).collect();
        merge_max(len, &cols)
    } else {
        let mut spectrum = f.values().to_vec();
        wht_unnormalized_in_place(&mut spectrum);
        let scale = 0.5f64.powi(f.n() as i32);
        let candidates: Vec<Vec<f64>> = par::map_collect(family.len(), |m| {
            let mut data = spectrum.clone();
            level_multiply(&mut data, family.member(m).profile());
            wht_unnormalized_in_place(&mut data);
            par::for_each_chunk_mut(&mut data, 1 << 14, |_, chunk| {
                for v in chunk {
                    *v *= scale;
                }
            });
            data
        });
        let cols: Vec<&[f64]> = candidates.iter().map(|c| c.as_slice()).collect();
        merge_max(len, &cols)
    };
    Ok(MaximalResult {
        values: CubeFunction::new(f.n(), values)?,
        selector,
        family_tag: family.label().to_string(),
    })
}

/// Memory cap for the exact point-mass computation: three `2^n` integer
/// buffers plus the running max.
const MAX_EXACT_L1_DIMENSION: usize = 20;

/// `|| max_k S_k delta ||_1`, exactly.
///
/// Unnormalized sphere sums of a point mass are 0/1 integers, so the
/// three-term recurrence runs in machine integers and fractions appear only
/// in the final max-and-total step. The result equals `n + 1`: each distance
/// class contributes mass `C(n,d) * 1/C(n,d)`.
pub fn l1_norm_check(n: usize) -> Result<BigRational> {
    if n > MAX_EXACT_L1_DIMENSION {
        return Err(Error::Capacity {
            n,
            max: MAX_EXACT_L1_DIMENSION,
        });
    }
    let len = 1usize << n;
    let choose: Vec<i64> = (0..=n).map(|k| binomial_u64(n, k) as i64).collect();
    let adjacency = |v: &[i64]| -> Vec<i64> {
        par::map_collect(len, |x| {
            let mut acc = 0i64;
            for i in 0..n {
                acc += v[x ^ (1usize << i)];
            }
            acc
        })
    };
    let mut prev: Vec<i64> = vec![0; len];
    prev[0] = 1; // A_0 = delta at the origin
    let mut best_num: Vec<i64> = prev.clone();
    let mut best_k: Vec<usize> = vec![0; len];
    // cand/choose[k] > best ⟺ cand * choose[best_k] > best_num * choose[k]
    let consider = |best_num: &mut [i64], best_k: &mut [usize], cand: &[i64], k: usize| {
        for x in 0..len {
            if cand[x] * choose[best_k[x]] > best_num[x] * choose[k] {
                best_num[x] = cand[x];
                best_k[x] = k;
            }
        }
    };
    if n > 0 {
        let mut cur = adjacency(&prev); // A_1
        consider(&mut best_num, &mut best_k, &cur, 1);
        for k in 1..n {
            let lap = adjacency(&cur);
            let back = (n - k + 1) as i64;
            let div = (k + 1) as i64;
            let next: Vec<i64> = par::map_collect(len, |x| {
                let num = lap[x] - back * prev[x];
                debug_assert_eq!(num % div, 0);
                num / div
            });
            prev = std::mem::replace(&mut cur, next);
            consider(&mut best_num, &mut best_k, &cur, k + 1);
        }
    }
    let mut per_k = vec![0i64; n + 1];
    for x in 0..len {
        per_k[best_k[x]] += best_num[x];
    }
    let mut total = BigRational::zero();
    for (k, &num) in per_k.iter().enumerate() {
        if num != 0 {
            total += BigRational::new(BigInt::from(num), BigInt::from(choose[k]));
        }
    }
    Ok(total)
}

/// `sup_{lambda>0} lambda * #{x : v(x) >= lambda} / l1`. For a descending
/// sort the supremum is attained at a data point, so this is exact up to the
/// final products — no sampling over thresholds.
pub fn weak_ratio_from_values(values: &[f64], l1: f64) -> Result<f64> {
    if l1.is_nan() || l1 <= 0.0 {
        return Err(Error::domain(
            "weak-type ratio needs a function with positive L1 mass",
        ));
    }
    let mut v: Vec<f64> = values.iter().copied().filter(|&t| t > 0.0).collect();
    v.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite values"));
    let mut best = 0.0f64;
    for (i, t) in v.iter().enumerate() {
        best = best.max((i + 1) as f64 * t);
    }
    Ok(best / l1)
}

/// Weak-(1,1) ratio of the family's maximal function at a nonnegative,
/// nonzero `f`.
pub fn weak_l1_ratio(family: &OperatorFamily, f: &CubeFunction) -> Result<f64> {
    let m = maximal_apply(family, f)?;
    weak_ratio_from_values(m.values().values(), f.l1_norm())
}

/// Interpolation bound `2 (p/(p-1))^{1/p}` between the weak (1,1) and the
/// trivial `L^inf` endpoint; `2 sqrt 2` at `p = 2`, tending to 2 as
/// `p -> inf`.
pub fn marcinkiewicz_bound(p: f64) -> Result<f64> {
    if p.is_nan() || p <= 1.0 {
        return Err(Error::domain(format!(
            "interpolation bound needs p > 1, got {p}"
        )));
    }
    if p.is_infinite() {
        return Ok(2.0);
    }
    Ok(2.0 * (p / (p - 1.0)).powf(p.recip()))
}

/// Knobs for the alternating-ascent norm search.
#[derive(Clone, Copy, Debug)]
pub struct AscentConfig {
    /// Restart 0 starts from a point mass; later restarts draw uniform
    /// nonnegative starts from per-restart RNG streams.
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop when the Rayleigh value improves by less than this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        AscentConfig {
            restarts: 32,
            max_iters: 400,
            tol: 1e-10,
            seed: 0,
        }
    }
}

/// A certified-from-below norm estimate: `value` is a Rayleigh quotient the
/// returned witness actually achieves, never an extrapolation.
#[derive(Clone, Debug)]
pub struct NormEstimate {
    pub family: String,
    pub n: usize,
    pub value: f64,
    pub witness: CubeFunction,
    pub method: &'static str,
    pub seed: u64,
    pub restarts: usize,
    /// Iteration (or evaluation) count of the winning restart.
    pub iterations: usize,
    /// Rayleigh values of the winning restart, one per iteration.
    pub history: Vec<f64>,
    pub grid: Option<GridSpec>,
}

impl NormEstimate {
    /// Report document. The witness is written separately; pass its path.
    pub fn to_json(&self, witness_file: Option<&str>) -> serde_json::Value {
        json!({
            "family": self.family,
            "n": self.n,
            "value": self.value,
            "witness_file": witness_file,
            "seed": self.seed,
            "restarts": self.restarts,
            "iterations": self.iterations,
            "grid": self.grid,
        })
    }
}

struct RestartRun {
    value: f64,
    witness: CubeFunction,
    iterations: usize,
    history: Vec<f64>,
}

/// `T_sigma^T g = sum_m A_m (g * 1_{sigma=m})` — radial kernels are
/// symmetric, so the adjoint reuses the members. Accumulates
/// `lambda_m ⊙ H(mask_m)` in the spectral domain to share one inverse
/// transform across members.
fn selector_adjoint(family: &OperatorFamily, g: &CubeFunction, selector: &[u32]) -> Vec<f64> {
    let len = g.len();
    let mut used = vec![false; family.len()];
    for &s in selector {
        used[s as usize] = true;
    }
    let mut acc = vec![0.0f64; len];
    for (m, u) in used.iter().enumerate() {
        if !u {
            continue;
        }
        let mut data: Vec<f64> = par::map_collect(len, |x| {
            if selector[x] == m as u32 {
                g.values()[x]
            } else {
                0.0
            }
        });
        wht_unnormalized_in_place(&mut data);
        let profile = family.member(m).profile();
        par::for_each_chunk_pair_mut(&mut acc, &mut data, 1 << 14, |ci, ca, cd| {
            let base = ci << 14;
            for (j, a) in ca.iter_mut().enumerate() {
                *a += profile[(base + j).count_ones() as usize] * cd[j];
            }
        });
    }
    wht_unnormalized_in_place(&mut acc);
    let scale = 0.5f64.powi(g.n() as i32);
    par::for_each_chunk_mut(&mut acc, 1 << 14, |_, chunk| {
        for v in chunk {
            *v *= scale;
        }
    });
    acc
}

fn ascent_single(
    family: &OperatorFamily,
    f0: CubeFunction,
    cfg: &AscentConfig,
) -> Result<RestartRun> {
    let n = family.n();
    let norm0 = f0.l2_norm();
    if norm0 == 0.0 {
        return Ok(RestartRun {
            value: 0.0,
            witness: f0,
            iterations: 0,
            history: Vec::new(),
        });
    }
    let mut start = f0.into_values();
    for v in &mut start {
        *v /= norm0;
    }
    let mut f = CubeFunction::new(n, start)?;
    let mut best_value = 0.0f64;
    let mut best_witness = f.clone();
    let mut history = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    let mut iterations = 0;
    for _ in 0..cfg.max_iters {
        // f has unit L2 norm, so the Rayleigh value is just ||Mf||_2.
        let m = maximal_apply(family, &f)?;
        let value = m.values().l2_norm();
        iterations += 1;
        history.push(value);
        if value > best_value {
            best_value = value;
            best_witness = f.clone();
        }
        if value == 0.0 || (value - prev).abs() <= cfg.tol * value.max(1.0) {
            break;
        }
        prev = value;
        // Power step on T_sigma^T T_sigma with the selector frozen; each step
        // cannot decrease the Rayleigh value in exact arithmetic, and the
        // bookkeeping above keeps the best pair regardless.
        let mut h = selector_adjoint(family, m.values(), m.selector());
        // Projected back to the nonnegative cone: the spectral route can
        // leave tiny negative dust where the true value is zero.
        for v in &mut h {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let norm = lp_norm_slice(&h, 2.0)?;
        if norm == 0.0 {
            break;
        }
        for v in &mut h {
            *v /= norm;
        }
        f = CubeFunction::new(n, h)?;
    }
    Ok(RestartRun {
        value: best_value,
        witness: best_witness,
        iterations,
        history,
    })
}

/// Multi-restart alternating ascent for `||M||_{2->2}`.
///
/// Freeze the argmax selector of the current iterate, take one power step
/// with the resulting linear row-selection operator, renormalize, re-select.
/// Restarts run in parallel on independent RNG streams derived from the
/// master seed; the winner is the best value, ties to the smallest restart
/// index, so the result is reproducible for a fixed config. The returned
/// value is a genuine lower bound: its witness achieves it.
pub fn norm2_ascent(family: &OperatorFamily, cfg: AscentConfig) -> Result<NormEstimate> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if cfg.restarts == 0 {
        return Err(Error::domain("ascent needs at least one restart"));
    }
    let n = family.n();
    let runs: Vec<Result<RestartRun>> = par::map_collect(cfg.restarts, |r| {
        let f0 = if r == 0 {
            CubeFunction::delta(n, 0)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(r as u64);
            CubeFunction::from_fn(n, |_| rng.gen::<f64>())
        };
        f0.and_then(|f0| ascent_single(family, f0, &cfg))
    });
    let mut best: Option<RestartRun> = None;
    for run in runs {
        let run = run?;
        let better = match &best {
            None => true,
            Some(b) => run.value > b.value,
        };
        if better {
            best = Some(run);
        }
    }
    let b = best.expect("at least one restart");
    Ok(NormEstimate {
        family: family.label().to_string(),
        n,
        value: b.value,
        witness: b.witness,
        method: "ascent",
        seed: cfg.seed,
        restarts: cfg.restarts,
        iterations: b.iterations,
        history: b.history,
        grid: family.grid().copied(),
    })
}

/// Exhaustive grid search plus coordinate polish over the nonnegative unit
/// sphere. The grid has `grid_resolution^(2^n)` points, so this is an oracle
/// for tiny dimensions only; the ratio is scale-invariant, which lets the
/// grid live in `[0,1]^{2^n}`.
pub fn norm2_exhaustive_small(
    family: &OperatorFamily,
    grid_resolution: usize,
) -> Result<NormEstimate> {
    let n = family.n();
    if n > 3 {
        return Err(Error::Capacity { n, max: 3 });
    }
    if grid_resolution < 2 {
        return Err(Error::domain(
            "exhaustive search needs at least two grid levels",
        ));
    }
    let len = 1usize << n;
    let total = grid_resolution
        .checked_pow(len as u32)
        .filter(|&t| t <= 10_000_000)
        .ok_or_else(|| Error::domain("exhaustive grid too large"))?;
    let step0 = 1.0 / (grid_resolution - 1) as f64;
    let ratio_of = |vals: &[f64]| -> Result<f64> {
        let norm = lp_norm_slice(vals, 2.0)?;
        if norm == 0.0 {
            return Ok(0.0);
        }
        let f = CubeFunction::new(n, vals.to_vec())?;
        let m = maximal_apply(family, &f)?;
        Ok(m.values().l2_norm() / norm)
    };
    let decode = |idx: usize| -> Vec<f64> {
        let mut vals = vec![0.0f64; len];
        let mut rem = idx;
        for v in vals.iter_mut() {
            *v = (rem % grid_resolution) as f64 * step0;
            rem /= grid_resolution;
        }
        vals
    };
    let ratios: Vec<Result<f64>> = par::map_collect(total, |idx| ratio_of(&decode(idx)));
    let mut best_idx = 0usize;
    let mut best_ratio = -1.0f64;
    for (idx, r) in ratios.into_iter().enumerate() {
        let r = r?;
        if r > best_ratio {
            best_ratio = r;
            best_idx = idx;
        }
    }
    let mut best_vals = decode(best_idx);
    let mut evals = total;
    // Coordinate ascent with step halving; accepts only strict improvements,
    // so it terminates and never leaves the nonnegative orthant.
    let mut step = step0;
    while step > 1e-10 {
        let mut improved = false;
        for i in 0..len {
            for delta in [step, -step] {
                let old = best_vals[i];
                let cand = (old + delta).max(0.0);
                if cand == old {
                    continue;
                }
                best_vals[i] = cand;
                let r = ratio_of(&best_vals)?;
                evals += 1;
                if r > best_ratio {
                    best_ratio = r;
                    improved = true;
                } else {
                    best_vals[i] = old;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    let norm = lp_norm_slice(&best_vals, 2.0)?;
    if norm > 0.0 {
        for v in &mut best_vals {
            *v /= norm;
        }
    }
    let witness = CubeFunction::new(n, best_vals)?;
    let value = ratio_of(witness.values())?;
    Ok(NormEstimate {
        family: family.label().to_string(),
        n,
        value,
        witness,
        method: "exhaustive_grid",
        seed: 0,
        restarts: 1,
        iterations: evals,
        history: vec![value],
        grid: family.grid().copied(),
    })
}
