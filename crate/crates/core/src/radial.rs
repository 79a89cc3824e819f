//! Radial operators — mixtures of sphere means, determined either by sphere
//! weights or by a spectral profile — plus the operator families (spherical,
//! noise in two parameterizations, running-average "senate" forms) that the
//! maximal and comparison modules consume.

use crate::cube::{apply_level_profile, binomial_f64, sphere_means_all, CubeFunction};
use crate::error::{Error, Result};
use crate::krawtchouk::{ratio_to_f64, KrawtchoukTable};
use crate::par;
use crate::report::fmt_f64;
use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Symbolic operator descriptor, serialized as `{"kind": "...", ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorTag {
    Spherical { k: usize },
    NoiseT { t: f64 },
    NoiseP { p: f64 },
    SenateSpherical { k: usize },
    SenateNoiseT { t: f64 },
    SenateNoiseP { p: f64 },
    Mixture { label: String },
}

impl OperatorTag {
    fn param_string(&self) -> String {
        match self {
            OperatorTag::Spherical { k } | OperatorTag::SenateSpherical { k } => k.to_string(),
            OperatorTag::NoiseT { t } | OperatorTag::SenateNoiseT { t } => fmt_f64(*t),
            OperatorTag::NoiseP { p } | OperatorTag::SenateNoiseP { p } => fmt_f64(*p),
            OperatorTag::Mixture { label } => label.clone(),
        }
    }

    fn kind_string(&self) -> &'static str {
        match self {
            OperatorTag::Spherical { .. } => "spherical",
            OperatorTag::NoiseT { .. } => "noise_t",
            OperatorTag::NoiseP { .. } => "noise_p",
            OperatorTag::SenateSpherical { .. } => "senate_spherical",
            OperatorTag::SenateNoiseT { .. } => "senate_noise_t",
            OperatorTag::SenateNoiseP { .. } => "senate_noise_p",
            OperatorTag::Mixture { .. } => "mixture",
        }
    }
}

/// Which representation `apply` should exercise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ApplyRoute {
    Spectral,
    Direct,
}

/// An operator commuting with all hypercube symmetries.
///
/// The spectral profile (eigenvalue per level) is always present; sphere
/// weights are present when the operator was built as an explicit mixture,
/// and can be materialized from the profile on demand.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialOperator {
    n: usize,
    tag: OperatorTag,
    weights: Option<Vec<f64>>,
    profile: Vec<f64>,
}

impl RadialOperator {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tag(&self) -> &OperatorTag {
        &self.tag
    }

    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Identity operator (radius-0 sphere mean).
    pub fn identity(n: usize) -> Self {
        let mut weights = vec![0.0; n + 1];
        weights[0] = 1.0;
        RadialOperator {
            n,
            tag: OperatorTag::Spherical { k: 0 },
            weights: Some(weights),
            profile: vec![1.0; n + 1],
        }
    }

    /// Mean over the radius-`k` sphere.
    pub fn spherical(n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(Error::domain(format!("sphere radius {k} exceeds {n}")));
        }
        let table = KrawtchoukTable::build(n)?;
        Ok(Self::spherical_with_table(&table, k))
    }

    fn spherical_with_table(table: &KrawtchoukTable, k: usize) -> Self {
        let n = table.n();
        let mut weights = vec![0.0; n + 1];
        weights[k] = 1.0;
        RadialOperator {
            n,
            tag: OperatorTag::Spherical { k },
            weights: Some(weights),
            profile: table.kappa_row(k).to_vec(),
        }
    }

    /// Continuous-time noise operator: coordinates rerandomized for time `t`.
    /// Weights are the binomial mass at flip probability `(1 - e^{-t})/2`;
    /// the eigenvalue on level `x` is `e^{-tx}`.
    pub fn noise_t(n: usize, t: f64) -> Result<Self> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::domain(format!("noise time must be >= 0, got {t}")));
        }
        let p = 0.5 * (-(-t).exp_m1());
        let profile = (0..=n).map(|x| (-t * x as f64).exp()).collect();
        Ok(RadialOperator {
            n,
            tag: OperatorTag::NoiseT { t },
            weights: Some(binomial_weights(n, p)),
            profile,
        })
    }

    /// Flip-probability noise operator: each coordinate flipped independently
    /// with probability `p`; eigenvalue `(1-2p)^x` on level `x`.
    pub fn noise_p(n: usize, p: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&p) {
            return Err(Error::domain(format!(
                "flip probability {p} outside [0, 1/2]"
            )));
        }
        let base = 1.0 - 2.0 * p;
        let profile = (0..=n).map(|x| base.powi(x as i32)).collect();
        Ok(RadialOperator {
            n,
            tag: OperatorTag::NoiseP { p },
            weights: Some(binomial_weights(n, p)),
            profile,
        })
    }

    /// Time-averaged noise operator over `[0, T]`, by its closed-form
    /// spectrum `lambda[x] = (1 - e^{-Tx})/(Tx)`; `T = 0` is the identity
    /// (the `T -> 0+` limit).
    pub fn senate_noise_t(n: usize, t: f64) -> Result<Self> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::domain(format!(
                "senate horizon must be >= 0, got {t}"
            )));
        }
        let profile = (0..=n)
            .map(|x| {
                let tx = t * x as f64;
                if tx == 0.0 {
                    1.0
                } else {
                    -(-tx).exp_m1() / tx
                }
            })
            .collect();
        Ok(RadialOperator {
            n,
            tag: OperatorTag::SenateNoiseT { t },
            weights: None,
            profile,
        })
    }

    /// Flip-probability-averaged noise operator over `[0, P]`:
    /// `lambda[x] = (1 - (1-2P)^{x+1}) / (2P(x+1))`; `P = 0` is the identity.
    pub fn senate_noise_p(n: usize, p: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&p) {
            return Err(Error::domain(format!(
                "senate flip bound {p} outside [0, 1/2]"
            )));
        }
        let profile = (0..=n)
            .map(|x| {
                if p == 0.0 {
                    return 1.0;
                }
                let e = (x + 1) as f64;
                // 1 - (1-2p)^e, evaluated as -expm1(e*log1p(-2p)) for accuracy
                // at small p.
                -(e * (-2.0 * p).ln_1p()).exp_m1() / (2.0 * p * e)
            })
            .collect();
        Ok(RadialOperator {
            n,
            tag: OperatorTag::SenateNoiseP { p },
            weights: None,
            profile,
        })
    }

    /// Uniform average of `members[0..=k]`.
    pub fn senate_discrete(members: &[RadialOperator], k: usize, tag: OperatorTag) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyFamily);
        }
        if k >= members.len() {
            return Err(Error::domain(format!(
                "senate index {k} out of range for {} members",
                members.len()
            )));
        }
        let n = members[0].n;
        let scale = 1.0 / (k + 1) as f64;
        let mut profile = vec![0.0; n + 1];
        for m in &members[..=k] {
            if m.n != n {
                return Err(Error::DimensionMismatch {
                    left: n,
                    right: m.n,
                });
            }
            for (acc, v) in profile.iter_mut().zip(&m.profile) {
                *acc += v;
            }
        }
        for v in &mut profile {
            *v *= scale;
        }
        let weights = if members[..=k].iter().all(|m| m.weights.is_some()) {
            let mut w = vec![0.0; n + 1];
            for m in &members[..=k] {
                for (acc, v) in w.iter_mut().zip(m.weights.as_ref().unwrap()) {
                    *acc += v;
                }
            }
            for v in &mut w {
                *v *= scale;
            }
            Some(w)
        } else {
            None
        };
        Ok(RadialOperator {
            n,
            tag,
            weights,
            profile,
        })
    }

    /// Builds an operator directly from a spectral profile.
    pub fn from_profile(n: usize, profile: Vec<f64>, tag: OperatorTag) -> Result<Self> {
        if profile.len() != n + 1 {
            return Err(Error::Length {
                n,
                expected: n + 1,
                got: profile.len(),
            });
        }
        Ok(RadialOperator {
            n,
            tag,
            weights: None,
            profile,
        })
    }

    /// Builds an operator directly from sphere weights.
    pub fn from_weights(n: usize, weights: Vec<f64>, tag: OperatorTag) -> Result<Self> {
        if weights.len() != n + 1 {
            return Err(Error::Length {
                n,
                expected: n + 1,
                got: weights.len(),
            });
        }
        let table = KrawtchoukTable::build(n)?;
        let profile = profile_from_weights_with_table(&table, &weights);
        Ok(RadialOperator {
            n,
            tag,
            weights: Some(weights),
            profile,
        })
    }

    /// Ensures sphere weights are present, deriving them from the profile via
    /// the inverse eigen-expansion if needed.
    pub fn materialize_weights(&mut self) -> Result<()> {
        if self.weights.is_none() {
            self.weights = Some(weights_from_profile(self.n, &self.profile)?);
        }
        Ok(())
    }

    /// Applies the operator to `f`: the spectral route runs two transforms
    /// around a level multiplier; the direct route mixes sphere means with
    /// the stored weights.
    pub fn apply(&self, f: &CubeFunction, route: ApplyRoute) -> Result<CubeFunction> {
        if self.n != f.n() {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: f.n(),
            });
        }
        match route {
            ApplyRoute::Spectral => apply_level_profile(f, &self.profile),
            ApplyRoute::Direct => {
                let weights = self.weights.as_ref().ok_or(Error::MissingWeights)?;
                let spheres = sphere_means_all(f);
                let mut out = vec![0.0f64; f.len()];
                for (k, w) in weights.iter().enumerate() {
                    if *w == 0.0 {
                        continue;
                    }
                    let col = spheres.radius_slice(k);
                    par::for_each_chunk_mut(&mut out, 1 << 14, |ci, chunk| {
                        let base = ci << 14;
                        for (j, o) in chunk.iter_mut().enumerate() {
                            *o += w * col[base + j];
                        }
                    });
                }
                CubeFunction::new(f.n(), out)
            }
        }
    }

    /// Dense matrix form `M[x][y] = w_{d(x,y)} / C(n, d(x,y))`; small `n`
    /// only. Requires weights.
    pub fn dense_matrix(&self) -> Result<Vec<Vec<f64>>> {
        if self.n > 13 {
            return Err(Error::Capacity { n: self.n, max: 13 });
        }
        let weights = self.weights.as_ref().ok_or(Error::MissingWeights)?;
        let len = 1usize << self.n;
        let norm: Vec<f64> = (0..=self.n)
            .map(|d| weights[d] / binomial_f64(self.n, d))
            .collect();
        Ok((0..len)
            .map(|x| {
                (0..len)
                    .map(|y| norm[(x ^ y).count_ones() as usize])
                    .collect()
            })
            .collect())
    }

    /// CSV rows `kind,param,k_or_x,weight,lambda` (weight blank when the
    /// operator has no materialized mixture form).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "kind,param,k_or_x,weight,lambda")?;
        for i in 0..=self.n {
            let weight = match &self.weights {
                Some(ws) => fmt_f64(ws[i]),
                None => String::new(),
            };
            writeln!(
                w,
                "{},{},{},{},{}",
                self.tag.kind_string(),
                self.tag.param_string(),
                i,
                weight,
                fmt_f64(self.profile[i])
            )?;
        }
        Ok(())
    }
}

fn binomial_weights(n: usize, p: f64) -> Vec<f64> {
    let q = 1.0 - p;
    (0..=n)
        .map(|k| binomial_f64(n, k) * p.powi(k as i32) * q.powi((n - k) as i32))
        .collect()
}

/// Spectral profile of a sphere-weight mixture: `lambda[x] = sum_k w_k kappa_k(x)`.
pub fn profile_from_weights(n: usize, weights: &[f64]) -> Result<Vec<f64>> {
    let table = KrawtchoukTable::build(n)?;
    Ok(profile_from_weights_with_table(&table, weights))
}

fn profile_from_weights_with_table(table: &KrawtchoukTable, weights: &[f64]) -> Vec<f64> {
    let n = table.n();
    (0..=n)
        .map(|x| {
            let mut acc = 0.0;
            for (k, w) in weights.iter().enumerate() {
                acc += w * table.kappa(k, x);
            }
            acc
        })
        .collect()
}

/// Sphere weights of a spectral profile, by the orthogonality inversion
/// `w_k = (C(n,k)/2^n) sum_x lambda[x] kappa_k(x) C(n,x)`.
pub fn weights_from_profile(n: usize, profile: &[f64]) -> Result<Vec<f64>> {
    if profile.len() != n + 1 {
        return Err(Error::Length {
            n,
            expected: n + 1,
            got: profile.len(),
        });
    }
    let table = KrawtchoukTable::build(n)?;
    let scale = 0.5f64.powi(n as i32);
    Ok((0..=n)
        .map(|k| {
            let mut acc = 0.0;
            for (x, lam) in profile.iter().enumerate() {
                acc += lam * table.kappa(k, x) * binomial_f64(n, x);
            }
            acc * binomial_f64(n, k) * scale
        })
        .collect())
}

/// Result of the sphere-weight domination test `A <= c * B`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DominationCheck {
    pub c: f64,
    /// `max_k (w^A_k - c * w^B_k)`; domination holds when this is <= 0.
    pub worst: f64,
    pub pass: bool,
}

/// For radial operators with nonnegative kernels, entrywise matrix domination
/// is equivalent to weight domination radius by radius.
pub fn dominated_by(a: &RadialOperator, b: &RadialOperator, c: f64) -> Result<DominationCheck> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch {
            left: a.n,
            right: b.n,
        });
    }
    let wa = a.weights().ok_or(Error::MissingWeights)?;
    let wb = b.weights().ok_or(Error::MissingWeights)?;
    let mut worst = f64::NEG_INFINITY;
    for k in 0..wa.len() {
        worst = worst.max(wa[k] - c * wb[k]);
    }
    Ok(DominationCheck {
        c,
        worst,
        pass: worst <= 1e-12,
    })
}

/// Sampling grid for a real-indexed family: `points` geometrically spaced
/// values from `lo` to `hi` inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo > 0.0 && hi >= lo) || points == 0 {
            return Err(Error::domain(format!(
                "grid requires 0 < lo <= hi and points >= 1, got [{lo}, {hi}] x {points}"
            )));
        }
        Ok(GridSpec { lo, hi, points })
    }

    /// Default time grid: `[1/n^2, 10n]`, 64 points.
    pub fn default_t(n: usize, points: usize) -> Result<Self> {
        let nf = (n.max(1)) as f64;
        Self::new(1.0 / (nf * nf), 10.0 * nf, points)
    }

    /// Default flip-probability grid: `[1/n^2, 1/2]`, 64 points.
    pub fn default_p(n: usize, points: usize) -> Result<Self> {
        let nf = (n.max(2)) as f64;
        Self::new(1.0 / (nf * nf), 0.5, points)
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.lo];
        }
        let ratio = (self.hi / self.lo).ln();
        (0..self.points)
            .map(|i| self.lo * (ratio * i as f64 / (self.points - 1) as f64).exp())
            .collect()
    }
}

/// How a family is indexed.
#[derive(Clone, Debug, PartialEq)]
pub enum FamilyIndex {
    Discrete,
    Grid(GridSpec),
}

/// An ordered, immutable collection of radial operators over one dimension.
#[derive(Clone, Debug)]
pub struct OperatorFamily {
    n: usize,
    members: Vec<RadialOperator>,
    index: FamilyIndex,
    label: String,
}

impl OperatorFamily {
    pub fn from_members(
        members: Vec<RadialOperator>,
        index: FamilyIndex,
        label: impl Into<String>,
    ) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptyFamily)?;
        let n = first.n;
        if let Some(bad) = members.iter().find(|m| m.n != n) {
            return Err(Error::DimensionMismatch {
                left: n,
                right: bad.n,
            });
        }
        Ok(OperatorFamily {
            n,
            members,
            index,
            label: label.into(),
        })
    }

    /// All sphere means `S_0 ..= S_n`.
    pub fn spherical(n: usize) -> Result<Self> {
        let table = KrawtchoukTable::build(n)?;
        let members = (0..=n)
            .map(|k| RadialOperator::spherical_with_table(&table, k))
            .collect();
        Self::from_members(members, FamilyIndex::Discrete, "spherical")
    }

    /// Sphere means up to half the dimension: `S_0 ..= S_{floor(n/2)}`.
    pub fn truncated_spherical(n: usize) -> Result<Self> {
        let table = KrawtchoukTable::build(n)?;
        let members = (0..=n / 2)
            .map(|k| RadialOperator::spherical_with_table(&table, k))
            .collect();
        Self::from_members(members, FamilyIndex::Discrete, "truncated_spherical")
    }

    /// Running averages of the full spherical family.
    pub fn spherical_senates(n: usize) -> Result<Self> {
        let base = Self::spherical(n)?;
        let members = (0..=n)
            .map(|k| {
                RadialOperator::senate_discrete(
                    &base.members,
                    k,
                    OperatorTag::SenateSpherical { k },
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_members(members, FamilyIndex::Discrete, "spherical_senates")
    }

    /// Running averages of one parity class of the truncated spherical
    /// family: member `r` averages radii `parity, parity+2, ..., parity+2r`,
    /// all of which stay `<= floor(n/2)`.
    pub fn parity_senates(n: usize, parity: usize) -> Result<Self> {
        debug_assert!(parity <= 1);
        let half = n / 2;
        if half < parity {
            return Err(Error::EmptyFamily);
        }
        let r_max = (half - parity) / 2;
        let table = KrawtchoukTable::build(n)?;
        let subfamily: Vec<RadialOperator> = (0..=r_max)
            .map(|r| RadialOperator::spherical_with_table(&table, 2 * r + parity))
            .collect();
        let members = (0..=r_max)
            .map(|r| {
                RadialOperator::senate_discrete(
                    &subfamily,
                    r,
                    OperatorTag::Mixture {
                        label: format!("senate_parity{parity}_{r}"),
                    },
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_members(
            members,
            FamilyIndex::Discrete,
            format!("parity{parity}_senates"),
        )
    }

    /// Time-averaged noise operators sampled on a geometric grid.
    pub fn noise_senates_t(n: usize, grid: GridSpec) -> Result<Self> {
        let members = grid
            .values()
            .into_iter()
            .map(|t| RadialOperator::senate_noise_t(n, t))
            .collect::<Result<Vec<_>>>()?;
        Self::from_members(members, FamilyIndex::Grid(grid), "noise_senates_t")
    }

    /// Flip-probability-averaged noise operators sampled on a geometric grid.
    pub fn noise_senates_p(n: usize, grid: GridSpec) -> Result<Self> {
        let members = grid
            .values()
            .into_iter()
            .map(|p| RadialOperator::senate_noise_p(n, p))
            .collect::<Result<Vec<_>>>()?;
        Self::from_members(members, FamilyIndex::Grid(grid), "noise_senates_p")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[RadialOperator] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &RadialOperator {
        &self.members[i]
    }

    pub fn index(&self) -> &FamilyIndex {
        &self.index
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn grid(&self) -> Option<&GridSpec> {
        match &self.index {
            FamilyIndex::Grid(g) => Some(g),
            FamilyIndex::Discrete => None,
        }
    }

    /// True when every member is the mean over a single sphere, in radius
    /// order starting at 0 — the layout the fast maximal path exploits.
    pub fn is_prefix_spherical(&self) -> bool {
        self.members
            .iter()
            .enumerate()
            .all(|(i, m)| matches!(m.tag, OperatorTag::Spherical { k } if k == i))
    }
}

const FX_BITS: usize = 384;

fn fx_one() -> BigInt {
    BigInt::one() << FX_BITS
}

fn fx_mul(a: &BigInt, b: &BigInt) -> BigInt {
    (a * b) >> FX_BITS
}

fn fx_pow(base: &BigInt, mut e: usize) -> BigInt {
    let mut result = fx_one();
    let mut b = base.clone();
    while e > 0 {
        if e & 1 == 1 {
            result = fx_mul(&result, &b);
        }
        b = fx_mul(&b, &b);
        e >>= 1;
    }
    result
}

fn fx_to_f64(a: &BigInt) -> f64 {
    ratio_to_f64(a, &fx_one())
}

/// Weights of the discrete senate expansion of an averaged-noise operator.
///
/// `a[k]` is the average over `p in [0, P]` of the binomial mass
/// `C(n,k) p^k (1-p)^{n-k}`, with `P = min((K + sqrt(K))/n, 1/2)`, computed
/// via the tail identity `avg = Pr[Binomial(n+1, P) >= k+1] / ((n+1) P)` in
/// 384-bit fixed point so the values carry far more than the 1e-11 relative
/// accuracy the downstream bound checks assume.
#[derive(Clone, Debug, Serialize)]
pub struct SenateNoiseCoeffs {
    pub n: usize,
    pub k_max: usize,
    pub p: f64,
    pub a: Vec<f64>,
    /// Set when `n` is below the regime the downstream bounds assume.
    pub small_n: bool,
}

pub fn senate_noise_coeff(n: usize, k_max: usize) -> Result<SenateNoiseCoeffs> {
    if n == 0 {
        return Err(Error::domain("senate coefficients need n >= 1"));
    }
    if 2 * k_max > n {
        return Err(Error::domain(format!(
            "senate cutoff {k_max} exceeds half of n = {n}"
        )));
    }
    let small_n = n < 9;
    if k_max == 0 {
        return Ok(SenateNoiseCoeffs {
            n,
            k_max,
            p: 0.0,
            a: vec![1.0],
            small_n,
        });
    }
    let m = n + 1;
    let sqrt_k = (BigInt::from(k_max) << (2 * FX_BITS)).sqrt();
    let mut p_fx = ((BigInt::from(k_max) << FX_BITS) + sqrt_k) / BigInt::from(n);
    let half = BigInt::one() << (FX_BITS - 1);
    if p_fx > half {
        p_fx = half;
    }
    let q_fx = fx_one() - &p_fx;
    let mut pmf: Vec<BigInt> = Vec::with_capacity(m + 1);
    pmf.push(fx_pow(&q_fx, m));
    for j in 0..m {
        let t = pmf.last().unwrap() * BigInt::from(m - j) * &p_fx / (BigInt::from(j + 1) * &q_fx);
        pmf.push(t);
    }
    let mut tail = BigInt::zero();
    let mut tails = vec![BigInt::zero(); m + 1];
    for j in (1..=m).rev() {
        tail += &pmf[j];
        tails[j] = tail.clone();
    }
    let denom = BigInt::from(m) * &p_fx;
    let a = (0..=k_max)
        .map(|k| fx_to_f64(&((&tails[k + 1] << FX_BITS) / &denom)))
        .collect();
    Ok(SenateNoiseCoeffs {
        n,
        k_max,
        p: fx_to_f64(&p_fx),
        a,
        small_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Adaptive Simpson quadrature, plain recursive halving.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rule(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let left = rule(f, a, m);
            let right = rule(f, m, b);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, left, tol / 2.0, depth - 1) + rec(f, m, b, right, tol / 2.0, depth - 1)
            }
        }
        let whole = rule(f, a, b);
        rec(f, a, b, whole, tol, 40)
    }

    #[test]
    fn spherical_profiles() {
        let op = RadialOperator::spherical(3, 1).unwrap();
        let expect = [1.0, 1.0 / 3.0, -1.0 / 3.0, -1.0];
        for (a, b) in op.profile().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let id = RadialOperator::spherical(5, 0).unwrap();
        assert!(id.profile().iter().all(|&v| v == 1.0));
        let anti = RadialOperator::spherical(5, 5).unwrap();
        for (x, v) in anti.profile().iter().enumerate() {
            assert_eq!(*v, if x % 2 == 0 { 1.0 } else { -1.0 });
        }
    }

    #[test]
    fn noise_limits_and_semigroup() {
        let id = RadialOperator::noise_t(6, 0.0).unwrap();
        assert!(id.profile().iter().all(|&v| v == 1.0));
        assert_eq!(id.weights().unwrap()[0], 1.0);
        let far = RadialOperator::noise_t(6, 80.0).unwrap();
        assert!(far.profile()[1..].iter().all(|&v| v < 1e-30));
        for (a, b) in [(0.3, 0.9), (1.5, 0.01)] {
            let pa = RadialOperator::noise_t(8, a).unwrap();
            let pb = RadialOperator::noise_t(8, b).unwrap();
            let pab = RadialOperator::noise_t(8, a + b).unwrap();
            for x in 0..=8 {
                let prod = pa.profile()[x] * pb.profile()[x];
                assert!(
                    (prod - pab.profile()[x]).abs() <= 1e-12 * pab.profile()[x].abs().max(1e-30)
                );
            }
        }
    }

    #[test]
    fn noise_parameterizations_agree() {
        let t = 1.0f64;
        let p = 0.5 * (1.0 - (-t).exp());
        let via_t = RadialOperator::noise_t(9, t).unwrap();
        let via_p = RadialOperator::noise_p(9, p).unwrap();
        for x in 0..=9 {
            assert!((via_t.profile()[x] - via_p.profile()[x]).abs() <= 1e-12);
        }
        assert!(RadialOperator::noise_p(4, 0.6).is_err());
        assert!(RadialOperator::noise_t(4, -0.1).is_err());
    }

    #[test]
    fn profile_weight_duality() {
        let table = KrawtchoukTable::build(10).unwrap();
        for op in [
            RadialOperator::noise_t(10, 0.7).unwrap(),
            RadialOperator::noise_p(10, 0.23).unwrap(),
            RadialOperator::spherical(10, 4).unwrap(),
        ] {
            let w = op.weights().unwrap();
            for x in 0..=10 {
                let mixed: f64 = (0..=10).map(|k| w[k] * table.kappa(k, x)).sum();
                assert!(
                    (mixed - op.profile()[x]).abs() <= 1e-10,
                    "{:?} x={x}",
                    op.tag()
                );
            }
        }
    }

    #[test]
    fn weight_recovery_roundtrip() {
        let op = RadialOperator::noise_p(8, 0.31).unwrap();
        let recovered = weights_from_profile(8, op.profile()).unwrap();
        for (a, b) in recovered.iter().zip(op.weights().unwrap()) {
            assert!((a - b).abs() <= 1e-12);
        }
        let mut senate = RadialOperator::senate_noise_t(8, 2.0).unwrap();
        assert!(senate.weights().is_none());
        senate.materialize_weights().unwrap();
        let w = senate.weights().unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert!(w.iter().all(|&v| v >= -1e-12));
    }

    #[test]
    fn senate_discrete_base_cases() {
        let fam = OperatorFamily::spherical(3).unwrap();
        let s0 = RadialOperator::senate_discrete(
            fam.members(),
            0,
            OperatorTag::SenateSpherical { k: 0 },
        )
        .unwrap();
        assert_eq!(s0.profile(), fam.member(0).profile());
        let s1 = RadialOperator::senate_discrete(
            fam.members(),
            1,
            OperatorTag::SenateSpherical { k: 1 },
        )
        .unwrap();
        for x in 0..=3 {
            let expect = 0.5 * (1.0 + fam.member(1).profile()[x]);
            assert!((s1.profile()[x] - expect).abs() < 1e-15);
        }
        let s3 = RadialOperator::senate_discrete(
            fam.members(),
            3,
            OperatorTag::SenateSpherical { k: 3 },
        )
        .unwrap();
        for w in s3.weights().unwrap() {
            assert!((w - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn senate_noise_profiles_match_quadrature() {
        for (n, t) in [(8usize, 0.5f64), (8, 3.0), (5, 0.01)] {
            let op = RadialOperator::senate_noise_t(n, t).unwrap();
            assert_eq!(op.profile()[0], 1.0);
            for x in 1..=n {
                let oracle = simpson(&|u: f64| (-u * x as f64).exp(), 0.0, t, 1e-13) / t;
                assert!((op.profile()[x] - oracle).abs() <= 1e-10, "t={t} x={x}");
            }
            for x in 1..=n {
                assert!(op.profile()[x] < op.profile()[x - 1]);
            }
        }
        for (n, p) in [(8usize, 0.05f64), (8, 0.2), (8, 0.45), (6, 0.5)] {
            let op = RadialOperator::senate_noise_p(n, p).unwrap();
            for x in 0..=n {
                let oracle = simpson(&|u: f64| (1.0 - 2.0 * u).powi(x as i32), 0.0, p, 1e-13) / p;
                assert!((op.profile()[x] - oracle).abs() <= 1e-10, "p={p} x={x}");
            }
        }
        let half = RadialOperator::senate_noise_p(7, 0.5).unwrap();
        for x in 0..=7 {
            assert!((half.profile()[x] - 1.0 / (x + 1) as f64).abs() < 1e-15);
        }
        let id = RadialOperator::senate_noise_p(7, 0.0).unwrap();
        assert!(id.profile().iter().all(|&v| v == 1.0));
        let id = RadialOperator::senate_noise_t(7, 0.0).unwrap();
        assert!(id.profile().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn apply_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for n in [4usize, 7, 10] {
            let f = CubeFunction::from_fn(n, |_| rng.gen_range(-1.0..1.0)).unwrap();
            for op in [
                RadialOperator::noise_t(n, 0.8).unwrap(),
                RadialOperator::noise_p(n, 0.17).unwrap(),
                RadialOperator::spherical(n, n / 2).unwrap(),
            ] {
                let a = op.apply(&f, ApplyRoute::Spectral).unwrap();
                let b = op.apply(&f, ApplyRoute::Direct).unwrap();
                let scale = f.l2_norm();
                for (x, y) in a.values().iter().zip(b.values()) {
                    assert!((x - y).abs() <= 1e-10 * scale.max(1.0), "{:?}", op.tag());
                }
            }
        }
    }

    #[test]
    fn apply_preserves_constants_exactly() {
        let f = CubeFunction::constant(6, 3.25).unwrap();
        for op in [
            RadialOperator::noise_t(6, 0.4).unwrap(),
            RadialOperator::senate_noise_p(6, 0.3).unwrap(),
        ] {
            let g = op.apply(&f, ApplyRoute::Spectral).unwrap();
            assert_eq!(g.values(), f.values());
        }
    }

    #[test]
    fn domination_matches_dense_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 5;
        for _ in 0..50 {
            let wa: Vec<f64> = (0..=n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let wb: Vec<f64> = (0..=n).map(|_| rng.gen_range(0.01..1.0)).collect();
            let a = RadialOperator::from_weights(n, wa, OperatorTag::Mixture { label: "a".into() })
                .unwrap();
            let b = RadialOperator::from_weights(n, wb, OperatorTag::Mixture { label: "b".into() })
                .unwrap();
            let c = rng.gen_range(0.5..2.0);
            let by_weights = dominated_by(&a, &b, c).unwrap().pass;
            let da = a.dense_matrix().unwrap();
            let db = b.dense_matrix().unwrap();
            let dense = da
                .iter()
                .zip(&db)
                .all(|(ra, rb)| ra.iter().zip(rb).all(|(x, y)| *x <= c * y + 1e-12));
            assert_eq!(by_weights, dense);
        }
    }

    #[test]
    fn grid_specs() {
        let g = GridSpec::default_t(4, 64).unwrap();
        let vals = g.values();
        assert_eq!(vals.len(), 64);
        assert!((vals[0] - 1.0 / 16.0).abs() < 1e-15);
        assert!((vals[63] - 40.0).abs() < 1e-12);
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
        assert!(GridSpec::new(0.0, 1.0, 4).is_err());
        assert!(GridSpec::new(1.0, 0.5, 4).is_err());
    }

    #[test]
    fn families_are_consistent() {
        let fam = OperatorFamily::spherical(6).unwrap();
        assert_eq!(fam.len(), 7);
        assert!(fam.is_prefix_spherical());
        let trunc = OperatorFamily::truncated_spherical(7).unwrap();
        assert_eq!(trunc.len(), 4);
        let even = OperatorFamily::parity_senates(8, 0).unwrap();
        assert_eq!(even.len(), 3); // averages of {S0}, {S0,S2}, {S0,S2,S4}
        let odd = OperatorFamily::parity_senates(8, 1).unwrap();
        assert_eq!(odd.len(), 2); // averages of {S1}, {S1,S3}
        assert!(OperatorFamily::parity_senates(1, 1).is_err());
        let noise =
            OperatorFamily::noise_senates_t(5, GridSpec::default_t(5, 16).unwrap()).unwrap();
        assert_eq!(noise.len(), 16);
        assert!(noise.grid().is_some());
    }

    #[test]
    fn tag_json_shape() {
        let tag = OperatorTag::NoiseT { t: 0.5 };
        assert_eq!(
            serde_json::to_string(&tag).unwrap(),
            r#"{"kind":"noise_t","t":0.5}"#
        );
        let back: OperatorTag =
            serde_json::from_str(r#"{"kind":"senate_noise_p","p":0.25}"#).unwrap();
        assert_eq!(back, OperatorTag::SenateNoiseP { p: 0.25 });
    }

    #[test]
    fn senate_coeffs_match_frozen_values() {
        let c = senate_noise_coeff(16, 4).unwrap();
        assert_eq!(c.p, 0.375);
        let expect = [
            0.1568095979327213,
            0.15626749684647855,
            0.15366541163251334,
            0.1458591559906177,
            0.129_466_019_142_636_9,
        ];
        for (a, e) in c.a.iter().zip(expect) {
            assert!((a - e).abs() <= 1e-15, "{a} vs {e}");
        }
        let c = senate_noise_coeff(9, 4).unwrap();
        assert_eq!(c.p, 0.5);
        assert_eq!(c.a[0], 0.1998046875);
        assert_eq!(c.a[4], 0.124609375);
        assert!(!c.small_n);
        let c = senate_noise_coeff(256, 128).unwrap();
        assert!((c.a[128] - 1.0 / 257.0).abs() <= 1e-17);
        assert!((c.a[0] - 0.007782101167315175).abs() <= 1e-17);
        let c = senate_noise_coeff(9, 1).unwrap();
        assert!((8.0 * c.a[0] - 3.3083528031993166).abs() <= 1e-13);
        let degenerate = senate_noise_coeff(12, 0).unwrap();
        assert_eq!(degenerate.a, vec![1.0]);
        assert!(senate_noise_coeff(8, 5).is_err());
    }

    #[test]
    fn senate_coeffs_match_quadrature() {
        for (n, k_max) in [(9usize, 2usize), (16, 4), (25, 12), (40, 7)] {
            let c = senate_noise_coeff(n, k_max).unwrap();
            for (k, a) in c.a.iter().enumerate() {
                let mass =
                    |p: f64| binomial_f64(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
                let oracle = simpson(&mass, 0.0, c.p, 1e-14) / c.p;
                assert!((a - oracle).abs() <= 1e-11, "n={n} K={k_max} k={k}");
            }
        }
    }

    #[test]
    fn operator_csv_shape() {
        let op = RadialOperator::noise_t(2, 0.5).unwrap();
        let mut buf = Vec::new();
        op.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "kind,param,k_or_x,weight,lambda");
        assert!(lines[1].starts_with("noise_t,5.0000000000000000e-1,0,"));
    }
}
