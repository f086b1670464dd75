//! Lattice points on the modular hyperbola `uv ≡ K (mod q)`.
//!
//! Intervals are half-open everywhere: a box is `(U, U+X] × (V, V+Y]`, and a
//! region under a curve is `U < u <= U+X, 0 < v <= f(u)`. Real endpoints are
//! allowed; the integer points are `floor(U)+1 ..= floor(U+X)`.
//!
//! For a fixed `u` with `g = gcd(u, q)` the congruence is solvable iff
//! `g | K`, and then its solutions form one residue class modulo `q/g`, so
//! every count reduces to a strided count over an interval.

use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::Serialize;

use crate::arith::{gcd_u64, inverse_mod};
use crate::asymptotics::AsymptoticReport;
use crate::error::{Error, Result};
use crate::lemmas::CompensatedSum;
use crate::Count;

/// Parameters of `N(K, q; U, V, X, Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperbolaQuery {
    pub k: i64,
    pub q: u64,
    pub u: f64,
    pub v: f64,
    pub x: f64,
    pub y: f64,
}

/// Upper boundary `f` of a curve query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CurveBound {
    /// `u ↦ A/u`.
    Hyperbolic { a: f64 },
    /// `f(first + i) = values[i]` on consecutive integers.
    Tabulated { first: i64, values: Vec<f64> },
}

/// Parameters of `T_f(K, q; U, X)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveQuery {
    pub k: i64,
    pub q: u64,
    pub u: f64,
    pub x: f64,
    pub bound: CurveBound,
}

/// A main-term value; `convention` is set when `K ≡ 0`, where the divisor
/// sum over `r | K` is replaced by the `D = q` convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MainTerm {
    pub value: f64,
    pub convention: bool,
}

fn check_finite(vals: &[f64], what: &str) -> Result<()> {
    if vals.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what}: parameters must be finite")))
    }
}

fn require_q(q: u64) -> Result<()> {
    if q == 0 {
        Err(Error::invalid("modulus q must be positive"))
    } else {
        Ok(())
    }
}

/// Integer points of the half-open interval `(start, start + len]`.
fn integer_range(start: f64, len: f64) -> Result<(i64, i64)> {
    if len < 0.0 {
        return Err(Error::invalid("interval length must be non-negative"));
    }
    let lo = start.floor() as i64 + 1;
    let hi = (start + len).floor() as i64;
    Ok((lo, hi))
}

/// `D = gcd(K, q)`, equal to `q` when `q | K`.
pub fn gcd_kq(k: i64, q: u64) -> u64 {
    gcd_u64(k.unsigned_abs() % q, q)
}

/// The residue class of `v` solving `u v ≡ k (mod q)`, as `(v0, modulus)`,
/// or `None` when `gcd(u, q) ∤ k`.
fn solution_class(u: i64, k: i64, q: u64) -> Option<(u64, u64)> {
    let ur = u.rem_euclid(q as i64) as u64;
    let kr = k.rem_euclid(q as i64) as u64;
    let g = gcd_u64(ur, q);
    if !kr.is_multiple_of(g) {
        return None;
    }
    let m = q / g;
    let inv = inverse_mod(ur / g, m)?;
    let v0 = (u128::from(kr / g) * u128::from(inv) % u128::from(m)) as u64;
    Some((v0, m))
}

/// Number of `v ∈ [lo, hi]` with `v ≡ v0 (mod m)`.
fn count_in_class(v0: u64, m: u64, lo: i64, hi: i64) -> u64 {
    if hi < lo {
        return 0;
    }
    let m = m as i128;
    let v0 = v0 as i128;
    let upto = |x: i128| (x - v0).div_euclid(m);
    (upto(hi as i128) - upto(lo as i128 - 1)) as u64
}

/// Number of `v ∈ [lo, hi]` with `u v ≡ k (mod q)`.
pub(crate) fn count_fixed_u(u: i64, k: i64, q: u64, lo: i64, hi: i64) -> u64 {
    match solution_class(u, k, q) {
        Some((v0, m)) => count_in_class(v0, m, lo, hi),
        None => 0,
    }
}

/// Exact `#{(u, v) : U < u <= U+X, V < v <= V+Y, uv ≡ K (mod q)}`.
pub fn count_box(query: &HyperbolaQuery) -> Result<Count> {
    require_q(query.q)?;
    check_finite(&[query.u, query.v, query.x, query.y], "count_box")?;
    let (ulo, uhi) = integer_range(query.u, query.x)?;
    let (vlo, vhi) = integer_range(query.v, query.y)?;
    Ok((ulo..=uhi)
        .map(|u| Count::from(count_fixed_u(u, query.k, query.q, vlo, vhi)))
        .sum())
}

/// `Σ_{u in range} [gcd(u,q) | K] · gcd(u,q) · w(u)`; the weighted gcd sum
/// shared by both main terms.
fn weighted_gcd_sum(k: i64, q: u64, ulo: i64, uhi: i64, mut w: impl FnMut(i64) -> f64) -> f64 {
    let kabs = k.unsigned_abs();
    let mut sum = CompensatedSum::default();
    for u in ulo..=uhi {
        let g = gcd_u64(u.rem_euclid(q as i64) as u64, q);
        if kabs.is_multiple_of(g) {
            sum.add(g as f64 * w(u));
        }
    }
    sum.value()
}

/// `(Y/q) Σ_{r | K} Σ_{U < u <= U+X, gcd(u,q) = r} r`.
pub fn main_term_box(query: &HyperbolaQuery) -> Result<MainTerm> {
    require_q(query.q)?;
    check_finite(&[query.u, query.v, query.x, query.y], "main_term_box")?;
    let (ulo, uhi) = integer_range(query.u, query.x)?;
    let s = weighted_gcd_sum(query.k, query.q, ulo, uhi, |_| 1.0);
    Ok(MainTerm {
        value: query.y / query.q as f64 * s,
        convention: query.k == 0,
    })
}

/// `q^ε (q^{1/2} + X·D/q + D)` with `D = gcd(K, q)`.
pub fn error_bound_box(query: &HyperbolaQuery, epsilon: f64) -> Result<f64> {
    require_q(query.q)?;
    if epsilon < 0.0 {
        return Err(Error::invalid("epsilon must be non-negative"));
    }
    let q = query.q as f64;
    let d = gcd_kq(query.k, query.q) as f64;
    Ok(q.powf(epsilon) * (q.sqrt() + query.x * d / q + d))
}

impl CurveBound {
    /// `floor(f(u))`, exact when the hyperbolic numerator is an integer.
    fn floor_at(&self, u: i64) -> Result<i64> {
        match self {
            CurveBound::Hyperbolic { a } => {
                if u <= 0 {
                    return Err(Error::invalid("hyperbolic bound needs u >= 1"));
                }
                if a.fract() == 0.0 && a.abs() < 9.0e15 {
                    Ok((*a as i64).div_euclid(u))
                } else {
                    Ok((a / u as f64).floor() as i64)
                }
            }
            CurveBound::Tabulated { .. } => Ok(self.value_at(u)?.floor() as i64),
        }
    }

    fn value_at(&self, u: i64) -> Result<f64> {
        match self {
            CurveBound::Hyperbolic { a } => {
                if u <= 0 {
                    return Err(Error::invalid("hyperbolic bound needs u >= 1"));
                }
                Ok(a / u as f64)
            }
            CurveBound::Tabulated { first, values } => {
                let i = u - first;
                if i < 0 || i as usize >= values.len() {
                    return Err(Error::invalid(format!(
                        "tabulated bound has no value at u = {u}"
                    )));
                }
                Ok(values[i as usize])
            }
        }
    }
}

fn validate_curve(query: &CurveQuery) -> Result<(i64, i64)> {
    require_q(query.q)?;
    check_finite(&[query.u, query.x], "curve query")?;
    let (lo, hi) = integer_range(query.u, query.x)?;
    match &query.bound {
        CurveBound::Hyperbolic { a } => {
            check_finite(&[*a], "hyperbolic bound")?;
            if *a < 0.0 {
                return Err(Error::invalid("hyperbolic bound A must be non-negative"));
            }
            if query.u < 0.0 {
                return Err(Error::invalid("hyperbolic bound requires U >= 0"));
            }
        }
        CurveBound::Tabulated { values, .. } => check_finite(values, "tabulated bound")?,
    }
    for u in lo..=hi {
        if query.bound.value_at(u)? < 0.0 {
            return Err(Error::invalid(format!("curve bound negative at u = {u}")));
        }
    }
    Ok((lo, hi))
}

/// Exact `#{(u, v) : U < u <= U+X, 0 < v <= f(u), uv ≡ K (mod q)}`.
pub fn count_under_curve(query: &CurveQuery) -> Result<Count> {
    let (lo, hi) = validate_curve(query)?;
    let mut total: Count = 0;
    for u in lo..=hi {
        let top = query.bound.floor_at(u)?;
        total += Count::from(count_fixed_u(u, query.k, query.q, 1, top));
    }
    Ok(total)
}

/// `(1/q) Σ_{r|K} Σ_{gcd(u,q)=r} r f(u) − X δ_q(K)/2`.
pub fn main_term_curve(query: &CurveQuery) -> Result<MainTerm> {
    let (lo, hi) = validate_curve(query)?;
    let bound = &query.bound;
    let mut failure = None;
    let s = weighted_gcd_sum(query.k, query.q, lo, hi, |u| match bound.value_at(u) {
        Ok(v) => v,
        Err(e) => {
            failure = Some(e);
            0.0
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let divisible = query.k.unsigned_abs().is_multiple_of(query.q);
    let shift = if divisible { query.x / 2.0 } else { 0.0 };
    Ok(MainTerm {
        value: s / query.q as f64 - shift,
        convention: query.k == 0,
    })
}

/// `q^ε (X L^{-1/3} + D^{1/2} L^{1/2} / q + q^{1/2} + D)` for a hyperbolic
/// bound `A/u`, with the curvature scale `L = U³/A` taken at the left
/// endpoint (`|f''(U)| = 2A/U³`).
pub fn error_bound_curve(query: &CurveQuery, epsilon: f64) -> Result<f64> {
    require_q(query.q)?;
    if epsilon < 0.0 {
        return Err(Error::invalid("epsilon must be non-negative"));
    }
    let a = match query.bound {
        CurveBound::Hyperbolic { a } => a,
        CurveBound::Tabulated { .. } => {
            return Err(Error::invalid("error_bound_curve needs a hyperbolic bound"))
        }
    };
    if query.u <= 0.0 || a <= 0.0 {
        return Err(Error::invalid(
            "error_bound_curve needs U > 0 and A > 0 to define the curvature scale",
        ));
    }
    let l = query.u.powi(3) / a;
    Ok(curve_bound_formula(
        query.q,
        gcd_kq(query.k, query.q),
        query.x,
        l,
        epsilon,
    ))
}

/// The curve error envelope for explicit `(q, D, X, L)`.
pub fn curve_bound_formula(q: u64, d: u64, x: f64, l: f64, epsilon: f64) -> f64 {
    let qf = q as f64;
    let df = d as f64;
    qf.powf(epsilon) * (x * l.powf(-1.0 / 3.0) + df.sqrt() * l.sqrt() / qf + qf.sqrt() + df)
}

/// Exact count, main term and envelope for a box query.
pub fn box_report(query: &HyperbolaQuery, epsilon: f64) -> Result<AsymptoticReport> {
    let exact = count_box(query)?;
    let main = main_term_box(query)?;
    let bound = error_bound_box(query, epsilon)?;
    Ok(AsymptoticReport::new(exact, main.value, bound))
}

/// Exact count, main term and envelope for a hyperbolic curve query.
pub fn curve_report(query: &CurveQuery, epsilon: f64) -> Result<AsymptoticReport> {
    let exact = count_under_curve(query)?;
    let main = main_term_curve(query)?;
    let bound = error_bound_curve(query, epsilon)?;
    Ok(AsymptoticReport::new(exact, main.value, bound))
}

/// Ranges for seeded random query sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QueryRanges {
    pub max_q: u64,
    pub max_len: f64,
    pub max_abs_k: i64,
}

impl Default for QueryRanges {
    fn default() -> Self {
        QueryRanges {
            max_q: 500,
            max_len: 2000.0,
            max_abs_k: 10_000,
        }
    }
}

/// A box query and a hyperbolic curve query drawn together.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryPair {
    pub index: usize,
    pub boxed: HyperbolaQuery,
    pub curve: CurveQuery,
}

/// `count` query pairs from a SplitMix64 stream seeded with `seed`.
///
/// Per pair, in draw order: `q ∈ [1, max_q]`, `|K| ∈ [1, max_abs_k]` with a
/// random sign, box `U, V ∈ [0, max_len)`, `X, Y ∈ [0, max_len]`, then the
/// curve start `U_c ∈ [1, max_len]`, length `X_c ∈ [0, max_len]` and height
/// `h ∈ (0, max_len]`, with `A = h·U_c` so that `f(U_c) = h`. Reals are
/// `next_u64 >> 11` scaled by `2^-53`, integers are taken modulo the range.
pub fn random_queries(seed: u64, count: usize, ranges: QueryRanges) -> Vec<QueryPair> {
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut unit = move || (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    let mut out = Vec::with_capacity(count);
    for index in 0..count {
        let q = 1 + (unit() * ranges.max_q as f64) as u64 % ranges.max_q;
        let kabs = 1 + (unit() * ranges.max_abs_k as f64) as i64 % ranges.max_abs_k;
        let k = if unit() < 0.5 { -kabs } else { kabs };
        let boxed = HyperbolaQuery {
            k,
            q,
            u: unit() * ranges.max_len,
            v: unit() * ranges.max_len,
            x: unit() * ranges.max_len,
            y: unit() * ranges.max_len,
        };
        let cu = 1.0 + unit() * (ranges.max_len - 1.0);
        let cx = unit() * ranges.max_len;
        let h = (1.0 - unit()) * ranges.max_len;
        let curve = CurveQuery {
            k,
            q,
            u: cu,
            x: cx,
            bound: CurveBound::Hyperbolic { a: h * cu },
        };
        out.push(QueryPair {
            index,
            boxed,
            curve,
        });
    }
    out
}
