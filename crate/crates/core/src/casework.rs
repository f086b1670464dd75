//! Per-`(a, c)` solution counts for the positive-orthant determinant
//! equations and their region sums.
//!
//! `G(a, c)` counts `(b, d)` with `ad = Δ + bc`, `1 <= d <= H`,
//! `1 <= |b| <= H`; `J(a, c)` counts the same with `1 <= b <= H`. Summing
//! over `1 <= a, c <= H` gives the sign-class counts `(+,+,+)` and
//! `(+,+,−)` respectively.
//!
//! Regions are cut with exact integer comparisons: `c` is small when
//! `cH <= Δ` and `a` is small when `aH <= cH + Δ`, i.e. `a <= s(c)` with
//! `s(c) = c + floor(Δ/H)`.
//!
//! The hyperbola path fixes `c` and counts `a d ≡ Δ (mod c)` with `a` as the
//! outer variable. The congruence admits `b = 0`, so its region sums are
//! [`count_g_with_b0`] sums and the `b = 0` points are subtracted at the end.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::divisor_tables::shifted_sum;
use crate::error::{Error, Result};
use crate::exact_count::{sign_class_count, SignClass};
use crate::hyperbola::{count_box, count_under_curve, CurveBound, CurveQuery, HyperbolaQuery};
use crate::{Budget, Count};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RegionG {
    SS,
    SL,
    LS,
    LL,
}

impl RegionG {
    pub const ALL: [RegionG; 4] = [RegionG::SS, RegionG::SL, RegionG::LS, RegionG::LL];

    pub fn name(self) -> &'static str {
        match self {
            RegionG::SS => "SS",
            RegionG::SL => "SL",
            RegionG::LS => "LS",
            RegionG::LL => "LL",
        }
    }

    /// `(small a, small c)`.
    fn sizes(self) -> (bool, bool) {
        match self {
            RegionG::SS => (true, true),
            RegionG::SL => (true, false),
            RegionG::LS => (false, true),
            RegionG::LL => (false, false),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RegionJ {
    SmallA,
    LargeA,
}

impl RegionJ {
    pub const ALL: [RegionJ; 2] = [RegionJ::SmallA, RegionJ::LargeA];

    pub fn name(self) -> &'static str {
        match self {
            RegionJ::SmallA => "SMALL_A",
            RegionJ::LargeA => "LARGE_A",
        }
    }
}

impl fmt::Display for RegionG {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for RegionJ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegionG {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RegionG::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::Format(format!("unknown G region {s:?}")))
    }
}

impl FromStr for RegionJ {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RegionJ::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::Format(format!("unknown J region {s:?}")))
    }
}

fn check_args(h: u64, delta: i64) -> Result<()> {
    if h == 0 {
        return Err(Error::invalid("H must be positive"));
    }
    if delta < 1 {
        return Err(Error::invalid("casework needs Δ >= 1"));
    }
    if h > 1 << 20 || delta > 1 << 40 {
        return Err(Error::invalid("casework parameters out of supported range"));
    }
    Ok(())
}

fn check_point(a: u64, c: u64, h: u64, delta: i64) -> Result<()> {
    check_args(h, delta)?;
    if !(1..=h).contains(&a) || !(1..=h).contains(&c) {
        return Err(Error::invalid(format!(
            "need 1 <= a, c <= H, got a = {a}, c = {c}"
        )));
    }
    Ok(())
}

/// `s(c) = floor((cH + Δ)/H)`; `a` is small iff `a <= s(c)`.
fn small_a_limit(c: i64, h: i64, delta: i64) -> i64 {
    (c * h + delta).div_euclid(h)
}

fn c_is_small(c: i64, h: i64, delta: i64) -> bool {
    c * h <= delta
}

fn ceil_div(x: i64, y: i64) -> i64 {
    -((-x).div_euclid(y))
}

/// `d`-interval for `G(a, c)`, from `|b| <= H`.
fn g_interval(a: i64, c: i64, h: i64, delta: i64) -> (i64, i64) {
    let lo = ceil_div(delta - h * c, a).max(1);
    let hi = (delta + h * c).div_euclid(a).min(h);
    (lo, hi)
}

fn count_g_i64(a: i64, c: i64, h: i64, delta: i64, allow_b0: bool) -> Count {
    let (lo, hi) = g_interval(a, c, h, delta);
    let mut n = 0;
    for d in lo..=hi {
        let num = a * d - delta;
        if num % c == 0 && (allow_b0 || num != 0) {
            n += 1;
        }
    }
    n
}

fn count_j_i64(a: i64, c: i64, h: i64, delta: i64) -> Count {
    let lo = delta.div_euclid(a) + 1;
    let hi = (delta + c * h).div_euclid(a).min(h);
    let mut n = 0;
    for d in lo..=hi {
        if (a * d - delta) % c == 0 {
            n += 1;
        }
    }
    n
}

/// `G(a, c)`: solutions `(b, d)` of `ad = Δ + bc` with `1 <= d <= H` and
/// `1 <= |b| <= H`.
pub fn count_g(a: u64, c: u64, h: u64, delta: i64) -> Result<Count> {
    check_point(a, c, h, delta)?;
    Ok(count_g_i64(a as i64, c as i64, h as i64, delta, false))
}

/// [`count_g`] with `b = 0` admitted.
pub fn count_g_with_b0(a: u64, c: u64, h: u64, delta: i64) -> Result<Count> {
    check_point(a, c, h, delta)?;
    Ok(count_g_i64(a as i64, c as i64, h as i64, delta, true))
}

/// `J(a, c)`: solutions with `1 <= b <= H`, i.e. `Δ/a < d <= (Δ + cH)/a`.
pub fn count_j(a: u64, c: u64, h: u64, delta: i64) -> Result<Count> {
    check_point(a, c, h, delta)?;
    Ok(count_j_i64(a as i64, c as i64, h as i64, delta))
}

fn in_region_g(region: RegionG, a: i64, c: i64, h: i64, delta: i64) -> bool {
    let (small_a, small_c) = region.sizes();
    (a <= small_a_limit(c, h, delta)) == small_a && c_is_small(c, h, delta) == small_c
}

/// `a`-range of a G region at fixed `c`, clipped to `[1, H]`.
fn region_g_a_range(region: RegionG, c: i64, h: i64, delta: i64) -> Option<(i64, i64)> {
    let (small_a, small_c) = region.sizes();
    if c_is_small(c, h, delta) != small_c {
        return None;
    }
    let s = small_a_limit(c, h, delta);
    let (lo, hi) = if small_a { (1, s.min(h)) } else { (s + 1, h) };
    (lo <= hi).then_some((lo, hi))
}

fn region_j_a_range(region: RegionJ, c: i64, h: i64, delta: i64) -> Option<(i64, i64)> {
    let s = small_a_limit(c, h, delta);
    let (lo, hi) = match region {
        RegionJ::SmallA => (1, s.min(h)),
        RegionJ::LargeA => (s + 1, h),
    };
    (lo <= hi).then_some((lo, hi))
}

fn direct_g_at_c(region: RegionG, c: i64, h: i64, delta: i64, allow_b0: bool) -> Count {
    match region_g_a_range(region, c, h, delta) {
        Some((lo, hi)) => (lo..=hi)
            .map(|a| count_g_i64(a, c, h, delta, allow_b0))
            .sum(),
        None => 0,
    }
}

fn direct_j_at_c(region: RegionJ, c: i64, h: i64, delta: i64) -> Count {
    match region_j_a_range(region, c, h, delta) {
        Some((lo, hi)) => (lo..=hi).map(|a| count_j_i64(a, c, h, delta)).sum(),
        None => 0,
    }
}

/// Σ `G(a, c)` over the region, by direct double loop over `(a, c)`.
pub fn region_sum_g(h: u64, delta: i64, region: RegionG) -> Result<Count> {
    check_args(h, delta)?;
    let h = h as i64;
    Ok((1..=h)
        .into_par_iter()
        .map(|c| direct_g_at_c(region, c, h, delta, false))
        .sum())
}

/// Σ `J(a, c)` over the region, by direct double loop.
pub fn region_sum_j(h: u64, delta: i64, region: RegionJ) -> Result<Count> {
    check_args(h, delta)?;
    let h = h as i64;
    Ok((1..=h)
        .into_par_iter()
        .map(|c| direct_j_at_c(region, c, h, delta))
        .sum())
}

/// Membership test used by the partition checks.
pub fn region_of_g(a: u64, c: u64, h: u64, delta: i64) -> Result<RegionG> {
    check_point(a, c, h, delta)?;
    let (a, c, h) = (a as i64, c as i64, h as i64);
    RegionG::ALL
        .into_iter()
        .find(|r| in_region_g(*r, a, c, h, delta))
        .ok_or_else(|| Error::Invariant(format!("(a, c) = ({a}, {c}) lies in no G region")))
}

/// Box over `a ∈ [lo, hi]`, `d ∈ [1, H]`.
fn box_ad(c: i64, h: i64, delta: i64, lo: i64, hi: i64) -> Result<Count> {
    if lo > hi {
        return Ok(0);
    }
    count_box(&HyperbolaQuery {
        k: delta,
        q: c as u64,
        u: (lo - 1) as f64,
        v: 0.0,
        x: (hi - lo + 1) as f64,
        y: h as f64,
    })
}

/// Points `a ∈ [lo, hi]`, `1 <= d <= numer/a` (weak inequality).
fn curve_ad(c: i64, delta: i64, numer: i64, lo: i64, hi: i64) -> Result<Count> {
    if lo > hi {
        return Ok(0);
    }
    count_under_curve(&CurveQuery {
        k: delta,
        q: c as u64,
        u: (lo - 1) as f64,
        x: (hi - lo + 1) as f64,
        bound: CurveBound::Hyperbolic { a: numer as f64 },
    })
}

/// `a ∈ [lo, hi]` with `a | n` and `1 <= n/a <= cap`.
fn divisor_hits(n: i64, lo: i64, hi: i64, cap: i64) -> Count {
    if n < 1 {
        return 0;
    }
    (lo.max(1)..=hi)
        .filter(|a| n % a == 0 && n / a <= cap)
        .count() as Count
}

/// Region sum of `G` with `b = 0` admitted, at fixed `c`, from hyperbola
/// counts only.
fn hyperbola_g_b0_at_c(region: RegionG, c: i64, h: i64, delta: i64) -> Result<Count> {
    let Some((lo, hi)) = region_g_a_range(region, c, h, delta) else {
        return Ok(0);
    };
    let lower = delta - h * c; // f₋(a) = lower/a
    let upper = delta + h * c; // f₊(a) = upper/a
                               // The d-interval is lower/a <= d, i.e. d >= ceil(lower/a): it excludes
                               // 1 <= d < lower/a. The curve count is weak (d <= floor(lower/a)), so the
                               // point d = lower/a, reached when a | lower, is added back.
    let below_lower = |lo: i64, hi: i64| -> Result<Count> {
        let weak = curve_ad(c, delta, lower, lo, hi)?;
        Ok(weak - divisor_hits(lower, lo, hi, i64::MAX))
    };
    match region {
        // d runs over all of [1, H]
        RegionG::SL => box_ad(c, h, delta, lo, hi),
        // d in [ceil(lower/a), H]; for a < lower/H the interval is empty
        RegionG::SS => {
            let start = lo.max(ceil_div(lower, h));
            if lower <= 0 {
                return box_ad(c, h, delta, lo, hi);
            }
            Ok(box_ad(c, h, delta, start, hi)? - below_lower(start, hi)?)
        }
        // d in [1, floor(upper/a)]
        RegionG::LL => curve_ad(c, delta, upper, lo, hi),
        // d in [ceil(lower/a), floor(upper/a)]
        RegionG::LS => {
            let band = curve_ad(c, delta, upper, lo, hi)?;
            if lower <= 0 {
                return Ok(band);
            }
            Ok(band - below_lower(lo, hi)?)
        }
    }
}

/// Region sum of `J` at fixed `c` from hyperbola counts. The lower end
/// `d > Δ/a` is strict, so `T(f*)` with its weak inequality removes exactly
/// the excluded `d`, and `b >= 1` needs no further correction.
fn hyperbola_j_at_c(region: RegionJ, c: i64, h: i64, delta: i64) -> Result<Count> {
    let Some((lo, hi)) = region_j_a_range(region, c, h, delta) else {
        return Ok(0);
    };
    match region {
        RegionJ::SmallA => {
            // for a < Δ/H the interval (Δ/a, H] is empty
            let start = lo.max(ceil_div(delta, h));
            Ok(box_ad(c, h, delta, start, hi)? - curve_ad(c, delta, delta, start, hi)?)
        }
        RegionJ::LargeA => {
            Ok(curve_ad(c, delta, delta + h * c, lo, hi)? - curve_ad(c, delta, delta, lo, hi)?)
        }
    }
}

/// Σ `G(a, c)` over the region from box and curve counts, checked against
/// the direct sum for every `c`.
///
/// Fails with [`Error::Invariant`] naming the first `c` where the two
/// evaluations disagree.
pub fn region_sum_g_via_hyperbola(h: u64, delta: i64, region: RegionG) -> Result<Count> {
    check_args(h, delta)?;
    let h = h as i64;
    let per_c: Vec<Result<Count>> = (1..=h)
        .into_par_iter()
        .map(|c| {
            let with_b0 = hyperbola_g_b0_at_c(region, c, h, delta)?;
            let b0 = match region_g_a_range(region, c, h, delta) {
                Some((lo, hi)) => divisor_hits(delta, lo, hi, h),
                None => 0,
            };
            let via = with_b0.checked_sub(b0).ok_or_else(|| {
                Error::Invariant(format!("region {region}: b = 0 correction exceeds count at c = {c}"))
            })?;
            let direct = direct_g_at_c(region, c, h, delta, false);
            if via != direct {
                return Err(Error::Invariant(format!(
                    "region {region}, H = {h}, Δ = {delta}: hyperbola {via} != direct {direct} at c = {c}"
                )));
            }
            Ok(via)
        })
        .collect();
    per_c.into_iter().sum()
}

/// Σ `J(a, c)` over the region from box and curve counts, checked per `c`.
pub fn region_sum_j_via_hyperbola(h: u64, delta: i64, region: RegionJ) -> Result<Count> {
    check_args(h, delta)?;
    let h = h as i64;
    let per_c: Vec<Result<Count>> = (1..=h)
        .into_par_iter()
        .map(|c| {
            let via = hyperbola_j_at_c(region, c, h, delta)?;
            let direct = direct_j_at_c(region, c, h, delta);
            if via != direct {
                return Err(Error::Invariant(format!(
                    "region {region}, H = {h}, Δ = {delta}: hyperbola {via} != direct {direct} at c = {c}"
                )));
            }
            Ok(via)
        })
        .collect();
    per_c.into_iter().sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionRow {
    pub family: &'static str,
    pub region: &'static str,
    pub direct: Count,
    pub via_hyperbola: Count,
}

/// All region sums for one `(H, Δ)` with the cross-module identities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseworkReport {
    pub height: u64,
    pub delta: i64,
    pub rows: Vec<RegionRow>,
    pub g_total: Count,
    pub j_total: Count,
    pub sign_ppp: Count,
    pub sign_ppn: Count,
    pub shifted: Count,
}

impl CaseworkReport {
    pub fn consistent(&self) -> bool {
        self.rows.iter().all(|r| r.direct == r.via_hyperbola)
            && self.g_total == self.sign_ppp
            && self.j_total == self.sign_ppn
            && self.j_total == self.shifted
    }
}

pub fn casework_report(h: u64, delta: i64, budget: &Budget) -> Result<CaseworkReport> {
    check_args(h, delta)?;
    let mut rows = Vec::new();
    let mut g_total = 0;
    for region in RegionG::ALL {
        let direct = region_sum_g(h, delta, region)?;
        let via_hyperbola = region_sum_g_via_hyperbola(h, delta, region)?;
        g_total += direct;
        rows.push(RegionRow {
            family: "G",
            region: region.name(),
            direct,
            via_hyperbola,
        });
    }
    let mut j_total = 0;
    for region in RegionJ::ALL {
        let direct = region_sum_j(h, delta, region)?;
        let via_hyperbola = region_sum_j_via_hyperbola(h, delta, region)?;
        j_total += direct;
        rows.push(RegionRow {
            family: "J",
            region: region.name(),
            direct,
            via_hyperbola,
        });
    }
    Ok(CaseworkReport {
        height: h,
        delta,
        rows,
        g_total,
        j_total,
        sign_ppp: sign_class_count(h, delta, SignClass::PPP)?,
        sign_ppn: sign_class_count(h, delta, SignClass::PPN)?,
        shifted: shifted_sum(h, delta as u64, budget)?,
    })
}
