//! Exact Krawtchouk tables, their algebraic verifications, root isolation,
//! and the spectral-decay scan whose output certifies the decay rate used by
//! the comparison pipeline.

use crate::error::{Error, Result};
use crate::par;
use crate::report::fmt_f64;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use std::io::Write;

/// Largest dimension for exact integer tables.
pub const MAX_EXACT_DIMENSION: usize = 128;

/// Exact binomial coefficient `C(n, k)`.
pub fn binomial_bigint(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for j in 0..k {
        acc = acc * BigInt::from(n - j) / BigInt::from(j + 1);
    }
    acc
}

fn pow2(e: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// Correctly rounded `num/den` (round-to-nearest, ties-to-even).
///
/// Requires `den > 0` and a result in the normal `f64` range; both hold for
/// every normalized table value (`|value| <= 1`, denominators below `2^128`).
pub(crate) fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    debug_assert!(den.is_positive());
    if num.is_zero() {
        return 0.0;
    }
    let negative = num.is_negative();
    let num = num.abs();
    // Scale the dividend so the integer quotient carries >= 55 bits, then
    // round via guard + sticky on the exact remainder.
    let shift = (den.bits() as i64 - num.bits() as i64 + 55).max(0) as usize;
    let (q, r) = (num << shift).div_rem(den);
    let extra = (q.bits() as usize).saturating_sub(53);
    debug_assert!(extra >= 1);
    let low: BigInt = &q & ((BigInt::one() << extra) - 1);
    let high = (&q >> extra).to_u64().expect("53-bit mantissa");
    let half = BigInt::one() << (extra - 1);
    let round_up = match low.cmp(&half) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Equal => !r.is_zero() || high & 1 == 1,
        std::cmp::Ordering::Less => false,
    };
    let mantissa = (high + round_up as u64) as f64;
    let v = mantissa * pow2(extra as i64 - shift as i64);
    if negative {
        -v
    } else {
        v
    }
}

/// Exact integer table of the degree-`k` sphere eigenpolynomials for one `n`.
///
/// `unnormalized(k, x)` stores the integer value whose quotient by `C(n,k)`
/// is the eigenvalue of the radius-`k` sphere mean on spectral level `x`.
pub struct KrawtchoukTable {
    n: usize,
    rows: Vec<Vec<BigInt>>,
    kappa_f: Vec<Vec<f64>>,
    choose: Vec<BigInt>,
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
pub struct ExactViolation {
    pub k: usize,
    pub x: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryReport {
    pub n: usize,
    pub value_at_zero_ok: bool,
    pub symmetry_violations: Vec<ExactViolation>,
    pub reflection_violations: Vec<ExactViolation>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrthogonalityReport {
    pub n: usize,
    /// `(k, l)` pairs whose weighted inner product missed the target.
    pub violations: Vec<ExactViolation>,
    pub pass: bool,
}

impl KrawtchoukTable {
    /// Builds the exact table by the three-term recurrence
    /// `(k+1) K_{k+1}(x) = (n-2x) K_k(x) - (n-k+1) K_{k-1}(x)`,
    /// whose division is exact over the integers at every step.
    pub fn build(n: usize) -> Result<Self> {
        if n > MAX_EXACT_DIMENSION {
            return Err(Error::Capacity {
                n,
                max: MAX_EXACT_DIMENSION,
            });
        }
        let choose: Vec<BigInt> = (0..=n).map(|x| binomial_bigint(n, x)).collect();
        let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(n + 1);
        rows.push(vec![BigInt::one(); n + 1]);
        if n >= 1 {
            rows.push(
                (0..=n)
                    .map(|x| BigInt::from(n as i64 - 2 * x as i64))
                    .collect(),
            );
        }
        for k in 1..n {
            let next: Vec<BigInt> = (0..=n)
                .map(|x| {
                    let num = BigInt::from(n as i64 - 2 * x as i64) * &rows[k][x]
                        - BigInt::from(n - k + 1) * &rows[k - 1][x];
                    let (q, r) = num.div_rem(&BigInt::from(k + 1));
                    debug_assert!(r.is_zero());
                    q
                })
                .collect();
            rows.push(next);
        }
        let kappa_f: Vec<Vec<f64>> = rows
            .iter()
            .enumerate()
            .map(|(k, row)| row.iter().map(|v| ratio_to_f64(v, &choose[k])).collect())
            .collect();
        Ok(KrawtchoukTable {
            n,
            rows,
            kappa_f,
            choose,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn unnormalized(&self, k: usize, x: usize) -> &BigInt {
        &self.rows[k][x]
    }

    pub fn choose(&self, k: usize) -> &BigInt {
        &self.choose[k]
    }

    pub fn kappa_exact(&self, k: usize, x: usize) -> BigRational {
        BigRational::new(self.rows[k][x].clone(), self.choose[k].clone())
    }

    /// Normalized value as `f64`, correctly rounded from the exact rational.
    pub fn kappa(&self, k: usize, x: usize) -> f64 {
        self.kappa_f[k][x]
    }

    /// Eigenvalue profile of the radius-`k` sphere mean over levels `0..=n`.
    pub fn kappa_row(&self, k: usize) -> &[f64] {
        &self.kappa_f[k]
    }

    /// Exact check of the two index symmetries:
    /// `K_k(x) C(n,x) = K_x(k) C(n,k)` and `K_k(n-x) = (-1)^k K_k(x)`,
    /// plus the normalization `K_k(0) = C(n,k)`.
    pub fn verify_symmetries(&self) -> SymmetryReport {
        let n = self.n;
        let mut symmetry_violations = Vec::new();
        let mut reflection_violations = Vec::new();
        let mut value_at_zero_ok = true;
        for k in 0..=n {
            if self.rows[k][0] != self.choose[k] {
                value_at_zero_ok = false;
            }
            for x in 0..=n {
                if &self.rows[k][x] * &self.choose[x] != &self.rows[x][k] * &self.choose[k] {
                    symmetry_violations.push(ExactViolation { k, x });
                }
                let reflected = &self.rows[k][n - x];
                let expected = if k % 2 == 0 {
                    self.rows[k][x].clone()
                } else {
                    -&self.rows[k][x]
                };
                if *reflected != expected {
                    reflection_violations.push(ExactViolation { k, x });
                }
            }
        }
        let pass =
            value_at_zero_ok && symmetry_violations.is_empty() && reflection_violations.is_empty();
        SymmetryReport {
            n,
            value_at_zero_ok,
            symmetry_violations,
            reflection_violations,
            pass,
        }
    }

    /// Exact check of `sum_x K_k(x) K_l(x) C(n,x) = [k = l] 2^n C(n,k)`.
    pub fn verify_orthogonality(&self) -> OrthogonalityReport {
        let n = self.n;
        let two_n = BigInt::one() << n;
        let mut violations = Vec::new();
        for k in 0..=n {
            for l in k..=n {
                let mut acc = BigInt::zero();
                for x in 0..=n {
                    acc += &self.rows[k][x] * &self.rows[l][x] * &self.choose[x];
                }
                let target = if k == l {
                    &two_n * &self.choose[k]
                } else {
                    BigInt::zero()
                };
                if acc != target {
                    violations.push(ExactViolation { k, x: l });
                }
            }
        }
        let pass = violations.is_empty();
        OrthogonalityReport {
            n,
            violations,
            pass,
        }
    }

    /// Exact strict bound `|K_k(x)| < C(n,k)` on the interior
    /// `1 <= k, x <= n-1`.
    pub fn interior_bound_strict(&self) -> bool {
        for k in 1..self.n {
            for x in 1..self.n {
                if self.rows[k][x].abs() >= self.choose[k] {
                    return false;
                }
            }
        }
        true
    }

    /// CSV dump: `n,k,x,value_num,value_den,value_float` with the normalized
    /// value as a reduced fraction.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,k,x,value_num,value_den,value_float")?;
        for k in 0..=self.n {
            for x in 0..=self.n {
                let q = self.kappa_exact(k, x);
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    self.n,
                    k,
                    x,
                    q.numer(),
                    q.denom(),
                    fmt_f64(self.kappa_f[k][x])
                )?;
            }
        }
        Ok(())
    }
}

/// Normalized polynomial value at a real argument, via the same three-term
/// recurrence run in `f64`. Exact at integer arguments up to rounding.
pub fn kappa_eval_real(n: usize, k: usize, x: f64) -> f64 {
    unnormalized_eval_real(n, k, x) / binomial_real(n, k)
}

fn binomial_real(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc
}

fn unnormalized_eval_real(n: usize, k: usize, x: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let lin = n as f64 - 2.0 * x;
    let mut prev = 1.0f64;
    let mut cur = lin;
    for j in 1..k {
        let next = (lin * cur - (n - j + 1) as f64 * prev) / (j + 1) as f64;
        prev = cur;
        cur = next;
    }
    cur
}

/// All `k` real roots of the degree-`k` polynomial, sorted ascending.
///
/// Roots are bracketed by sign changes on a refining uniform grid over
/// `[0, n]` (they are real and distinct, and interior to the support), then
/// bisected to width `1e-12`.
pub fn roots(n: usize, k: usize) -> Result<Vec<f64>> {
    if k > n {
        return Err(Error::domain(format!("degree {k} exceeds dimension {n}")));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let eval = |x: f64| unnormalized_eval_real(n, k, x);
    let span = n as f64;
    let mut intervals = 1usize << 10;
    loop {
        let vals: Vec<f64> = (0..=intervals)
            .map(|i| eval(span * i as f64 / intervals as f64))
            .collect();
        let mut found: Vec<f64> = Vec::with_capacity(k);
        let mut brackets: Vec<(f64, f64)> = Vec::with_capacity(k);
        for i in 0..intervals {
            let (a, b) = (vals[i], vals[i + 1]);
            let xi = span * i as f64 / intervals as f64;
            if a == 0.0 {
                found.push(xi);
            } else if b != 0.0 && a.signum() != b.signum() {
                brackets.push((xi, span * (i + 1) as f64 / intervals as f64));
            }
        }
        if found.len() + brackets.len() == k {
            for (mut lo, mut hi) in brackets {
                let mut flo = eval(lo);
                for _ in 0..100 {
                    if hi - lo <= 1e-12 {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    let fmid = eval(mid);
                    if fmid == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if flo.signum() == fmid.signum() {
                        lo = mid;
                        flo = fmid;
                    } else {
                        hi = mid;
                    }
                }
                found.push(0.5 * (lo + hi));
            }
            found.sort_by(|a, b| a.partial_cmp(b).unwrap());
            return Ok(found);
        }
        intervals *= 4;
        if intervals > 1 << 24 {
            return Err(Error::RootIsolation { n, k });
        }
    }
}

/// Containment check of a root set in the centered window
/// `n/2 +- sqrt(k(n-k))`, with `1e-9` slack.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RootBoundCheck {
    pub n: usize,
    pub k: usize,
    pub lo: f64,
    pub hi: f64,
    /// Largest distance outside the window; negative means strictly inside.
    pub worst_slack: f64,
    pub pass: bool,
}

pub fn root_bound_check(n: usize, k: usize, roots: &[f64]) -> RootBoundCheck {
    let w = (k as f64 * (n - k) as f64).sqrt();
    let lo = n as f64 / 2.0 - w;
    let hi = n as f64 / 2.0 + w;
    let worst_slack = roots
        .iter()
        .map(|&r| (lo - r).max(r - hi))
        .fold(f64::NEG_INFINITY, f64::max);
    RootBoundCheck {
        n,
        k,
        lo,
        hi,
        worst_slack,
        pass: roots.is_empty() || worst_slack <= 1e-9,
    }
}

/// Per-dimension best decay rate and its witness indices; `c` is absent when
/// every admissible value is zero (the constraint set is empty).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DecayPoint {
    pub n: usize,
    pub c: Option<f64>,
    pub k: usize,
    pub x: usize,
}

/// Output of the decay scan: the per-`n` empirical rates, the brute-force
/// small-`n` constant `c2`, the certified minimum `c_cert`, and the result of
/// re-verifying `|kappa_k(x)| <= e^{-c_cert k x / n}` over the scanned range.
#[derive(Clone, Debug, Serialize)]
pub struct DecayConstants {
    pub n_max: usize,
    pub n0: usize,
    pub per_n: Vec<DecayPoint>,
    pub c2: f64,
    pub c2_witness: [usize; 3],
    pub c_cert: f64,
    pub c_cert_witness: [usize; 3],
    pub bound_worst_rel: f64,
    pub bound_pass: bool,
}

/// Best (smallest) exponent over `1 <= k, x <= n/2` with nonzero value;
/// `ordered` restricts to `k <= x` (the two scans agree by symmetry).
fn best_rate(t: &KrawtchoukTable, ordered: bool) -> Option<(f64, usize, usize)> {
    let half = t.n / 2;
    let mut best: Option<(f64, usize, usize)> = None;
    for k in 1..=half {
        let x0 = if ordered { k } else { 1 };
        for x in x0..=half {
            let v = t.kappa_f[k][x].abs();
            if v == 0.0 {
                continue;
            }
            let c = -(t.n as f64) * v.ln() / ((k * x) as f64);
            if best.is_none_or(|(b, _, _)| c < b) {
                best = Some((c, k, x));
            }
        }
    }
    best
}

/// Scans dimensions `2..=n_max` for the certified rate and `2..n0` for the
/// brute-force small-dimension constant, then re-verifies the pointwise decay
/// bound with the certified rate at relative tolerance `1e-12`.
pub fn decay_constants(n_max: usize, n0: usize) -> Result<DecayConstants> {
    if n_max < 2 {
        return Err(Error::domain("decay scan requires n_max >= 2"));
    }
    let top = n_max.max(n0.saturating_sub(1)).max(2);
    if top > MAX_EXACT_DIMENSION {
        return Err(Error::Capacity {
            n: top,
            max: MAX_EXACT_DIMENSION,
        });
    }
    let tables: Vec<KrawtchoukTable> = par::map_collect(top - 1, |i| {
        KrawtchoukTable::build(i + 2).expect("n within cap")
    });

    let mut per_n = Vec::new();
    let mut c_cert = f64::INFINITY;
    let mut c_cert_witness = [0usize; 3];
    for t in tables.iter().take_while(|t| t.n <= n_max) {
        match best_rate(t, false) {
            Some((c, k, x)) => {
                per_n.push(DecayPoint {
                    n: t.n,
                    c: Some(c),
                    k,
                    x,
                });
                if c < c_cert {
                    c_cert = c;
                    c_cert_witness = [t.n, k, x];
                }
            }
            None => per_n.push(DecayPoint {
                n: t.n,
                c: None,
                k: 0,
                x: 0,
            }),
        }
    }

    let mut c2 = f64::INFINITY;
    let mut c2_witness = [0usize; 3];
    for t in tables.iter().take_while(|t| t.n < n0) {
        if let Some((c, k, x)) = best_rate(t, true) {
            if c < c2 {
                c2 = c;
                c2_witness = [t.n, k, x];
            }
        }
    }

    let mut bound_worst_rel = 0.0f64;
    for t in tables.iter().take_while(|t| t.n <= n_max) {
        let half = t.n / 2;
        for k in 0..=half {
            for x in 0..=half {
                let rel =
                    t.kappa_f[k][x].abs() * (c_cert * (k * x) as f64 / t.n as f64).exp() - 1.0;
                bound_worst_rel = bound_worst_rel.max(rel);
            }
        }
    }

    Ok(DecayConstants {
        n_max,
        n0,
        per_n,
        c2,
        c2_witness,
        c_cert,
        c_cert_witness,
        bound_worst_rel,
        bound_pass: bound_worst_rel <= 1e-12,
    })
}

pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
}

/// Numeric confirmation of the fixed constants used by the two-case decay
/// argument, plus the binomial lower bound `C(n, m) >= e^{n H(m/n)} / sqrt(2n)`
/// for all `n <= 64`.
#[derive(Clone, Debug, Serialize)]
pub struct CaseConstantsReport {
    pub h2_014: f64,
    pub half_ln2: f64,
    pub entropy_gap_ok: bool,
    pub c1: f64,
    pub c1_above_0116: bool,
    pub y2_ratio: f64,
    pub y2_ratio_le_093: bool,
    pub n0: usize,
    pub threshold_at_n0: f64,
    pub n0_ok: bool,
    pub stirling_worst_ratio: f64,
    pub stirling_ok: bool,
    pub pass: bool,
}

pub fn verify_case_constants() -> CaseConstantsReport {
    let h2_014 = binary_entropy(0.14);
    let half_ln2 = 0.5 * 2.0f64.ln();
    let entropy_gap_ok = h2_014 > half_ln2;
    let c1 = 2.0 * h2_014 - 2.0f64.ln();
    let c1_above_0116 = c1 > 0.116;
    let y = 2.0 * (0.14f64 * 0.86).sqrt();
    let y2 = y * y;
    let y2_ratio = y2 / (1.0 - y2);
    let y2_ratio_le_093 = y2_ratio <= 0.93;
    let n0 = 100usize;
    let threshold_at_n0 = 2.0 * (2.0 * n0 as f64).ln() / n0 as f64;
    let n0_ok = c1 >= threshold_at_n0;
    let mut stirling_worst_ratio = f64::INFINITY;
    for n in 1..=64usize {
        for m in 0..=n {
            let lhs = crate::cube::binomial_f64(n, m) * (2.0 * n as f64).sqrt();
            let rhs = (n as f64 * binary_entropy(m as f64 / n as f64)).exp();
            stirling_worst_ratio = stirling_worst_ratio.min(lhs / rhs);
        }
    }
    let stirling_ok = stirling_worst_ratio >= 1.0;
    let pass = entropy_gap_ok && c1_above_0116 && y2_ratio_le_093 && n0_ok && stirling_ok;
    CaseConstantsReport {
        h2_014,
        half_ln2,
        entropy_gap_ok,
        c1,
        c1_above_0116,
        y2_ratio,
        y2_ratio_le_093,
        n0,
        threshold_at_n0,
        n0_ok,
        stirling_worst_ratio,
        stirling_ok,
        pass,
    }
}
