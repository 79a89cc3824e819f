//! Marking games on the hypercube: density profiles of marked vertex or edge
//! sets around a center, exact best-center search, the edge-to-vertex
//! reduction, and extremal-marking adversaries (exhaustive at tiny `n`,
//! annealed above).

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cube::{binomial_f64, sphere_means_all, CubeFunction, DEFAULT_MAX_DIMENSION};
use crate::par;
use crate::report::fmt_f64;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkingKind {
    Vertex,
    Edge,
}

impl MarkingKind {
    fn name(self) -> &'static str {
        match self {
            MarkingKind::Vertex => "vertex",
            MarkingKind::Edge => "edge",
        }
    }
}

/// A marked subset of vertices or edges, with its exact density attached.
///
/// Vertex slots are the vertices `0..2^n`. Edge slots are direction-major:
/// the edge `(x, x ^ 2^i)` lives at `i * 2^(n-1) + squeeze(x, i)` where
/// `squeeze` drops bit `i` from the endpoint with that bit clear.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MarkingJson", into = "MarkingJson")]
pub struct MarkingSet {
    n: usize,
    kind: MarkingKind,
    words: Vec<u64>,
    slots: usize,
    count: usize,
}

#[derive(Serialize, Deserialize)]
struct MarkingJson {
    n: usize,
    kind: MarkingKind,
    marked: Vec<usize>,
}

impl TryFrom<MarkingJson> for MarkingSet {
    type Error = Error;

    fn try_from(doc: MarkingJson) -> Result<Self> {
        MarkingSet::new(doc.n, doc.kind, &doc.marked)
    }
}

impl From<MarkingSet> for MarkingJson {
    fn from(m: MarkingSet) -> Self {
        MarkingJson {
            n: m.n,
            kind: m.kind,
            marked: m.marked_indices(),
        }
    }
}

impl MarkingSet {
    fn domain_slots(n: usize, kind: MarkingKind) -> usize {
        match kind {
            MarkingKind::Vertex => 1usize << n,
            MarkingKind::Edge => n << n.saturating_sub(1),
        }
    }

    /// Builds a marking from slot indices; duplicates collapse to one mark.
    pub fn new(n: usize, kind: MarkingKind, marked: &[usize]) -> Result<Self> {
        if n > DEFAULT_MAX_DIMENSION {
            return Err(Error::Capacity {
                n,
                max: DEFAULT_MAX_DIMENSION,
            });
        }
        let slots = Self::domain_slots(n, kind);
        let mut words = vec![0u64; slots.div_ceil(64)];
        let mut count = 0usize;
        for &i in marked {
            if i >= slots {
                return Err(Error::domain(format!(
                    "marked index {i} out of range: {} marking on n={n} has {slots} slots",
                    kind.name()
                )));
            }
            let bit = 1u64 << (i % 64);
            if words[i / 64] & bit == 0 {
                words[i / 64] |= bit;
                count += 1;
            }
        }
        Ok(MarkingSet {
            n,
            kind,
            words,
            slots,
            count,
        })
    }

    pub fn vertices(n: usize, marked: &[usize]) -> Result<Self> {
        Self::new(n, MarkingKind::Vertex, marked)
    }

    pub fn edges(n: usize, marked: &[usize]) -> Result<Self> {
        Self::new(n, MarkingKind::Edge, marked)
    }

    /// Slot of the edge `(x, x ^ 2^i)`; either endpoint gives the same slot.
    pub fn edge_index(n: usize, x: usize, i: usize) -> Result<usize> {
        if i >= n || x >= 1usize << n {
            return Err(Error::domain(format!(
                "edge ({x}, direction {i}) out of range for n={n}"
            )));
        }
        let lo = x & !(1usize << i);
        let low = lo & ((1usize << i) - 1);
        let high = (lo >> (i + 1)) << i;
        Ok((i << (n - 1)) | high | low)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> MarkingKind {
        self.kind
    }

    /// Number of marked slots.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Total slots of this kind: `2^n` vertices or `n 2^(n-1)` edges.
    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.slots && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn marked_indices(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.count);
        for (wi, &w) in self.words.iter().enumerate() {
            let mut bits = w;
            while bits != 0 {
                out.push(wi * 64 + bits.trailing_zeros() as usize);
                bits &= bits - 1;
            }
        }
        out
    }

    /// Marked fraction of the domain, `count / slots` (both exact integers,
    /// so the quotient is correctly rounded).
    pub fn epsilon(&self) -> f64 {
        if self.slots == 0 {
            0.0
        } else {
            self.count as f64 / self.slots as f64
        }
    }

    /// `1_F` as a cube function (vertex markings only).
    pub fn indicator(&self) -> Result<CubeFunction> {
        if self.kind != MarkingKind::Vertex {
            return Err(Error::KindMismatch {
                expected: "vertex",
                got: self.kind.name(),
            });
        }
        let vals = (0..self.slots)
            .map(|v| if self.contains(v) { 1.0 } else { 0.0 })
            .collect();
        CubeFunction::new(self.n, vals)
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(&mut w, self).map_err(|e| Error::format(e.to_string()))?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        serde_json::from_reader(r).map_err(|e| Error::format(e.to_string()))
    }
}

/// Endpoint with the direction bit clear, and the direction, of an edge slot.
fn edge_slot_parts(n: usize, e: usize) -> (usize, usize) {
    let i = e >> (n - 1);
    let rest = e & ((1usize << (n - 1)) - 1);
    let low = rest & ((1usize << i) - 1);
    ((rest >> i) << (i + 1) | low, i)
}

/// Fraction of each sphere about `x` that is marked: entry `k` is
/// `|F ∩ sphere_k(x)| / C(n,k)`. Vertex markings only.
pub fn density_profile(f: &MarkingSet, x: usize) -> Result<Vec<f64>> {
    if f.kind != MarkingKind::Vertex {
        return Err(Error::KindMismatch {
            expected: "vertex",
            got: f.kind.name(),
        });
    }
    if x >= f.slots {
        return Err(Error::domain(format!(
            "center {x} out of range for n={}",
            f.n
        )));
    }
    let mut bins = vec![0u64; f.n + 1];
    for y in f.marked_indices() {
        bins[(x ^ y).count_ones() as usize] += 1;
    }
    Ok(bins
        .iter()
        .enumerate()
        .map(|(k, &c)| c as f64 / binomial_f64(f.n, k))
        .collect())
}

/// Marked fraction of each edge sphere about `x`: the radius-`k` edge sphere
/// holds the `C(n,k) (n-k)` edges whose closer endpoint is at distance `k`.
/// Entry `n` is 0 by convention (that sphere is empty).
fn edge_sphere_fractions(n: usize, marked: &[usize], x: usize) -> Vec<f64> {
    let mut bins = vec![0u64; n + 1];
    for &e in marked {
        let (u, i) = edge_slot_parts(n, e);
        let du = (x ^ u).count_ones() as usize;
        let dv = (x ^ u ^ (1usize << i)).count_ones() as usize;
        bins[du.min(dv)] += 1;
    }
    (0..=n)
        .map(|k| {
            if k == n {
                0.0
            } else {
                bins[k] as f64 / (binomial_f64(n, k) * (n - k) as f64)
            }
        })
        .collect()
}

/// Outcome of the best-center search over a marking.
#[derive(Clone, Debug, Serialize)]
pub struct GameResult {
    pub n: usize,
    pub best_center: usize,
    /// `min` over centers of the `max` over radii of the marked fraction.
    pub value: f64,
    /// Marked-fraction profile at the winning center, radii `0..=n`.
    pub profile: Vec<f64>,
    /// `value / sqrt(epsilon)`; 0 for the empty marking.
    pub ratio: f64,
}

/// Exact `min` over all `2^n` centers of the `max` over radii of the marked
/// sphere fraction. Vertex markings take one [`sphere_means_all`] pass over
/// `1_F`; the recurrence keeps un-normalized sphere sums integral, so every
/// mean is the correctly rounded count ratio and the result is bit-identical
/// to brute-force distance enumeration. Edge markings run the same pass over
/// the marked-degree counts and recover the per-radius edge counts from the
/// telescoping `A_k = M_k + M_{k-1}` (an edge at distance `k` is adjacent to
/// one vertex at distance `k` and one at `k+1`). Ties go to the lowest
/// center index.
pub fn best_center(f: &MarkingSet) -> Result<GameResult> {
    let n = f.n;
    let nv = 1usize << n;
    let maxima: Vec<f64> = match f.kind {
        MarkingKind::Vertex => {
            let spheres = sphere_means_all(&f.indicator()?);
            par::map_collect(nv, |x| {
                let mut mx = 0.0f64;
                for k in 0..=n {
                    mx = mx.max(spheres.value(x, k));
                }
                mx
            })
        }
        MarkingKind::Edge => {
            let mut degree = vec![0.0f64; nv];
            for e in f.marked_indices() {
                let (u, i) = edge_slot_parts(n, e);
                degree[u] += 1.0;
                degree[u ^ (1usize << i)] += 1.0;
            }
            let spheres = sphere_means_all(&CubeFunction::new(n, degree)?);
            par::map_collect(nv, |x| {
                let mut m_prev = 0.0f64;
                let mut mx = 0.0f64;
                for k in 0..n {
                    // un-normalized sphere sum of the degree counts, exact
                    let a = (spheres.value(x, k) * binomial_f64(n, k)).round();
                    let m_k = a - m_prev;
                    mx = mx.max(m_k / (binomial_f64(n, k) * (n - k) as f64));
                    m_prev = m_k;
                }
                mx
            })
        }
    };
    let mut best = 0usize;
    let mut value = f64::INFINITY;
    for (x, &v) in maxima.iter().enumerate() {
        if v < value {
            value = v;
            best = x;
        }
    }
    if nv == 0 {
        value = 0.0;
    }
    let profile = match f.kind {
        MarkingKind::Vertex => density_profile(f, best)?,
        MarkingKind::Edge => edge_sphere_fractions(n, &f.marked_indices(), best),
    };
    let ratio = if f.count == 0 {
        0.0
    } else {
        value / f.epsilon().sqrt()
    };
    Ok(GameResult {
        n,
        best_center: best,
        value,
        profile,
        ratio,
    })
}

/// Vertex shadow of an edge marking: `f(y)` is the fraction of the `n` edges
/// at `y` that are marked. With counting-measure norms,
/// `||f||_2^2 <= 2 |F'| / n`.
pub fn edge_reduce(fp: &MarkingSet) -> Result<CubeFunction> {
    if fp.kind != MarkingKind::Edge {
        return Err(Error::KindMismatch {
            expected: "edge",
            got: fp.kind.name(),
        });
    }
    let n = fp.n;
    let mut vals = vec![0.0f64; 1usize << n];
    for e in fp.marked_indices() {
        let (u, i) = edge_slot_parts(n, e);
        vals[u] += 1.0;
        vals[u ^ (1usize << i)] += 1.0;
    }
    for v in vals.iter_mut() {
        *v /= n as f64;
    }
    CubeFunction::new(n, vals)
}

/// Certificate that the vertex shadow controls edge-sphere densities.
#[derive(Clone, Debug, Serialize)]
pub struct EdgeDominationReport {
    pub n: usize,
    /// `min` over centers and radii of `bound - fraction`, where the bound is
    /// `2 S_k f` for `k <= n/2` and `2 S_{k+1} f` above; nonnegative on pass.
    pub worst_margin: f64,
    /// `2 |F'| / n - ||f||_2^2`; nonnegative on pass.
    pub l2_slack: f64,
    pub pass: bool,
}

/// Verifies, by direct edge-sphere enumeration over every center, that the
/// marked fraction of the radius-`k` edge sphere is at most `2 S_k f` for
/// `k <= n/2` and `2 S_{k+1} f` for `k > n/2`, with `f = edge_reduce(F')`,
/// and that `||f||_2^2 <= 2 |F'| / n`. Exhaustive, so `n <= 8`.
pub fn verify_edge_domination(fp: &MarkingSet) -> Result<EdgeDominationReport> {
    if fp.kind != MarkingKind::Edge {
        return Err(Error::KindMismatch {
            expected: "edge",
            got: fp.kind.name(),
        });
    }
    let n = fp.n;
    if n == 0 || n > 8 {
        return Err(Error::domain(
            "edge-sphere enumeration is exhaustive; needs 1 <= n <= 8",
        ));
    }
    let f = edge_reduce(fp)?;
    let spheres = sphere_means_all(&f);
    let marked = fp.marked_indices();
    let mut worst = f64::INFINITY;
    for x in 0..1usize << n {
        let frac = edge_sphere_fractions(n, &marked, x);
        for (k, fr) in frac.iter().enumerate().take(n) {
            let bound = if 2 * k <= n {
                2.0 * spheres.value(x, k)
            } else {
                2.0 * spheres.value(x, k + 1)
            };
            worst = worst.min(bound - fr);
        }
    }
    let fv = f.values();
    let norm2 = par::pairwise_sum_fn(0, fv.len(), &|i| fv[i] * fv[i]);
    let l2_slack = 2.0 * fp.count as f64 / n as f64 - norm2;
    let pass = worst >= -1e-12 && l2_slack >= -1e-12;
    Ok(EdgeDominationReport {
        n,
        worst_margin: worst,
        l2_slack,
        pass,
    })
}

/// Best-center value of a vertex marking by direct distance binning;
/// `O(2^n |F|)`, fine for adversary searches at small `n`.
fn value_of_marked(n: usize, marked: &[usize]) -> f64 {
    let binom: Vec<f64> = (0..=n).map(|k| binomial_f64(n, k)).collect();
    let mut value = f64::INFINITY;
    let mut bins = vec![0u32; n + 1];
    for x in 0..1usize << n {
        bins.fill(0);
        for &y in marked {
            bins[(x ^ y).count_ones() as usize] += 1;
        }
        let mut mx = 0.0f64;
        for (k, &c) in bins.iter().enumerate() {
            if c > 0 {
                mx = mx.max(c as f64 / binom[k]);
            }
        }
        value = value.min(mx);
    }
    value
}

fn translate_mask(mask: u32, nv: usize, t: usize) -> u32 {
    let mut out = 0u32;
    for y in 0..nv {
        if mask >> y & 1 == 1 {
            out |= 1 << (y ^ t);
        }
    }
    out
}

fn mask_indices(mask: u32, nv: usize) -> Vec<usize> {
    (0..nv).filter(|&y| mask >> y & 1 == 1).collect()
}

/// Exact extremal size-`m` vertex marking at `n <= 4`: maximizes the
/// best-center value over all size-`m` subsets, orbit-reduced by translation
/// (a mask is scored only when it is the minimum among its XOR-translates).
/// Ties go to the smallest canonical mask, so the result is deterministic
/// under any thread count.
pub fn exhaustive_adversary(n: usize, m: usize) -> Result<(MarkingSet, f64)> {
    if n == 0 || n > 4 {
        return Err(Error::domain("exhaustive adversary needs 1 <= n <= 4"));
    }
    let nv = 1usize << n;
    if m > nv {
        return Err(Error::domain(format!(
            "marking size {m} exceeds the {nv} vertices of n={n}"
        )));
    }
    let scored = par::map_collect(1usize << nv, |mask| {
        let mask = mask as u32;
        if mask.count_ones() as usize != m || (1..nv).any(|t| translate_mask(mask, nv, t) < mask) {
            return None;
        }
        Some((value_of_marked(n, &mask_indices(mask, nv)), mask))
    });
    let mut best: Option<(f64, u32)> = None;
    for s in scored.into_iter().flatten() {
        if best.is_none_or(|(bv, _)| s.0 > bv) {
            best = Some(s);
        }
    }
    let (value, mask) = best.expect("every size has at least one canonical mask");
    Ok((MarkingSet::vertices(n, &mask_indices(mask, nv))?, value))
}

/// Full exhaustive table for `n <= 4`: entry `m` is the extremal marking and
/// value over all size-`m` subsets. One scan over the mask space.
pub fn exhaustive_table(n: usize) -> Result<Vec<(MarkingSet, f64)>> {
    if n == 0 || n > 4 {
        return Err(Error::domain("exhaustive adversary needs 1 <= n <= 4"));
    }
    let nv = 1usize << n;
    let scored = par::map_collect(1usize << nv, |mask| {
        let mask = mask as u32;
        if (1..nv).any(|t| translate_mask(mask, nv, t) < mask) {
            return None;
        }
        Some((value_of_marked(n, &mask_indices(mask, nv)), mask))
    });
    let mut best: Vec<Option<(f64, u32)>> = vec![None; nv + 1];
    for (v, mask) in scored.into_iter().flatten() {
        let slot = &mut best[mask.count_ones() as usize];
        if slot.is_none_or(|(bv, _)| v > bv) {
            *slot = Some((v, mask));
        }
    }
    best.into_iter()
        .map(|s| {
            let (v, mask) = s.expect("every size has at least one canonical mask");
            Ok((MarkingSet::vertices(n, &mask_indices(mask, nv))?, v))
        })
        .collect()
}

/// Annealed extremal search over size-`m` vertex markings.
#[derive(Clone, Debug, Serialize)]
pub struct AnnealResult {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub budget: usize,
    pub chains: usize,
    pub t_start: f64,
    pub cooling: f64,
    pub value: f64,
    /// Best-so-far objective at the start and after each improvement;
    /// non-decreasing by construction.
    pub trace: Vec<f64>,
    pub marking: MarkingSet,
}

struct ChainOutcome {
    value: f64,
    marked: Vec<usize>,
    trace: Vec<f64>,
}

fn run_chain(
    n: usize,
    m: usize,
    seed: u64,
    chain: u64,
    budget: usize,
    t_start: f64,
    cooling: f64,
) -> ChainOutcome {
    let nv = 1usize << n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain + 1);
    let mut pool: Vec<usize> = (0..nv).collect();
    for i in 0..m {
        let j = rng.gen_range(i..nv);
        pool.swap(i, j);
    }
    let mut unmarked = pool.split_off(m);
    let mut marked = pool;
    let binom: Vec<f64> = (0..=n).map(|k| binomial_f64(n, k)).collect();
    // counts[x*(n+1) + k] = |F ∩ sphere_k(x)|, kept exact across swaps
    let mut counts = vec![0u32; nv * (n + 1)];
    for &y in &marked {
        for (x, row) in counts.chunks_mut(n + 1).enumerate() {
            row[(x ^ y).count_ones() as usize] += 1;
        }
    }
    let objective = |counts: &[u32]| -> f64 {
        let mut mn = f64::INFINITY;
        for row in counts.chunks(n + 1) {
            let mut mx = 0.0f64;
            for (k, &c) in row.iter().enumerate() {
                if c > 0 {
                    mx = mx.max(c as f64 / binom[k]);
                }
            }
            mn = mn.min(mx);
        }
        mn
    };
    let swap_counts = |counts: &mut [u32], remove: usize, add: usize| {
        for (x, row) in counts.chunks_mut(n + 1).enumerate() {
            row[(x ^ remove).count_ones() as usize] -= 1;
            row[(x ^ add).count_ones() as usize] += 1;
        }
    };
    let mut cur = objective(&counts);
    let mut best_val = cur;
    let mut best_marked = marked.clone();
    let mut trace = vec![cur];
    let mut t = t_start;
    for _ in 0..budget {
        let mi = rng.gen_range(0..marked.len());
        let ui = rng.gen_range(0..unmarked.len());
        let (out, inn) = (marked[mi], unmarked[ui]);
        swap_counts(&mut counts, out, inn);
        let cand = objective(&counts);
        if cand >= cur || rng.gen::<f64>() < ((cand - cur) / t).exp() {
            marked[mi] = inn;
            unmarked[ui] = out;
            cur = cand;
            if cand > best_val {
                best_val = cand;
                best_marked.clone_from(&marked);
                trace.push(cand);
            }
        } else {
            swap_counts(&mut counts, inn, out);
        }
        t *= cooling;
    }
    best_marked.sort_unstable();
    ChainOutcome {
        value: best_val,
        marked: best_marked,
        trace,
    }
}

/// Simulated annealing over size-`m` vertex markings at `n <= 16`: swap one
/// marked vertex for an unmarked one, Metropolis acceptance, geometric
/// cooling. Four independent seeded chains run in parallel; the best chain
/// wins, lowest chain index breaking ties, so the result is deterministic
/// for a fixed seed under any thread count.
pub fn anneal_adversary(n: usize, m: usize, seed: u64, budget: usize) -> Result<AnnealResult> {
    if n == 0 || n > 16 {
        return Err(Error::domain("annealing is sized for 1 <= n <= 16"));
    }
    let nv = 1usize << n;
    if m > nv {
        return Err(Error::domain(format!(
            "marking size {m} exceeds the {nv} vertices of n={n}"
        )));
    }
    const CHAINS: usize = 4;
    let t_start = 0.25f64;
    let cooling = if budget > 0 {
        (1e-3f64 / t_start).powf(1.0 / budget as f64)
    } else {
        1.0
    };
    // no swap exists at the extreme sizes; both values are exact anyway
    if m == 0 || m == nv {
        let marked: Vec<usize> = (0..if m == 0 { 0 } else { nv }).collect();
        let value = if m == 0 { 0.0 } else { 1.0 };
        return Ok(AnnealResult {
            n,
            m,
            seed,
            budget,
            chains: CHAINS,
            t_start,
            cooling,
            value,
            trace: vec![value],
            marking: MarkingSet::vertices(n, &marked)?,
        });
    }
    let outcomes: Vec<ChainOutcome> = par::map_collect(CHAINS, |c| {
        run_chain(n, m, seed, c as u64, budget, t_start, cooling)
    });
    let mut best = &outcomes[0];
    for c in &outcomes[1..] {
        if c.value > best.value {
            best = c;
        }
    }
    Ok(AnnealResult {
        n,
        m,
        seed,
        budget,
        chains: CHAINS,
        t_start,
        cooling,
        value: best.value,
        trace: best.trace.clone(),
        marking: MarkingSet::vertices(n, &best.marked)?,
    })
}

/// One row of the adversary results table.
#[derive(Clone, Debug, Serialize)]
pub struct GameRow {
    pub n: usize,
    pub m: usize,
    pub epsilon: f64,
    pub value: f64,
    pub ratio: f64,
    pub method: String,
    pub seed: Option<u64>,
}

impl GameRow {
    pub fn new(marking: &MarkingSet, value: f64, method: &str, seed: Option<u64>) -> Self {
        let epsilon = marking.epsilon();
        GameRow {
            n: marking.n(),
            m: marking.count(),
            epsilon,
            value,
            ratio: if marking.count() == 0 {
                0.0
            } else {
                value / epsilon.sqrt()
            },
            method: method.to_string(),
            seed,
        }
    }
}

/// CSV rows `n,m,epsilon,value,ratio,method,seed`; seed column is empty for
/// exact methods.
pub fn write_rows_csv<W: Write>(rows: &[GameRow], mut w: W) -> Result<()> {
    writeln!(w, "n,m,epsilon,value,ratio,method,seed")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.n,
            r.m,
            fmt_f64(r.epsilon),
            fmt_f64(r.value),
            fmt_f64(r.ratio),
            r.method,
            r.seed.map_or(String::new(), |s| s.to_string())
        )?;
    }
    Ok(())
}
