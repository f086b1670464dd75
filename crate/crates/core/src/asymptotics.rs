//! Main terms, exact-versus-main reports and least-squares fits in log
//! space.
//!
//! All logarithms are natural.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::arith::{divisors, sigma};
use crate::divisor_tables::ProductCount;
use crate::error::{Error, Result};
use crate::exact_count::fast_count_with;
use crate::{Budget, Count, SIX_OVER_PI_SQ};

const TWELVE_OVER_PI_SQ: f64 = 2.0 * SIX_OVER_PI_SQ;
const NINETY_SIX_OVER_PI_SQ: f64 = 16.0 * SIX_OVER_PI_SQ;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[allow(non_camel_case_types)]
pub enum MainTermKind {
    /// `(96/π²)(σ(|Δ|)/|Δ|) H²`
    THEOREM_MAIN,
    /// `(96/π²) H² ln H`
    DELTA0_MAIN,
    /// `(12/π²) H² Σ_{r|Δ, r<=H} 1/r`
    SIGN_LEMMA_MAIN,
    /// `(12/π²) N² ln N`
    TAU_SQ_MAIN,
    /// `(12/π²)(σ(Δ)/Δ) N² ln N`
    SHIFTED_LOG_CANDIDATE,
    /// `(12/π²) N² Σ_{r|Δ, r<=N} 1/r`
    SHIFTED_NOLOG_CANDIDATE,
}

impl MainTermKind {
    pub const ALL: [MainTermKind; 6] = [
        MainTermKind::THEOREM_MAIN,
        MainTermKind::DELTA0_MAIN,
        MainTermKind::SIGN_LEMMA_MAIN,
        MainTermKind::TAU_SQ_MAIN,
        MainTermKind::SHIFTED_LOG_CANDIDATE,
        MainTermKind::SHIFTED_NOLOG_CANDIDATE,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MainTermKind::THEOREM_MAIN => "THEOREM_MAIN",
            MainTermKind::DELTA0_MAIN => "DELTA0_MAIN",
            MainTermKind::SIGN_LEMMA_MAIN => "SIGN_LEMMA_MAIN",
            MainTermKind::TAU_SQ_MAIN => "TAU_SQ_MAIN",
            MainTermKind::SHIFTED_LOG_CANDIDATE => "SHIFTED_LOG_CANDIDATE",
            MainTermKind::SHIFTED_NOLOG_CANDIDATE => "SHIFTED_NOLOG_CANDIDATE",
        }
    }

    pub fn needs_delta(self) -> bool {
        !matches!(self, MainTermKind::DELTA0_MAIN | MainTermKind::TAU_SQ_MAIN)
    }
}

impl fmt::Display for MainTermKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MainTermKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MainTermKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown main term kind {s:?}")))
    }
}

/// `Σ_{r | Δ, r <= H} 1/r`.
pub fn truncated_reciprocal_divisor_sum(delta: i64, h: u64) -> Result<f64> {
    Ok(divisors(delta)?
        .into_iter()
        .filter(|r| *r <= h)
        .map(|r| 1.0 / r as f64)
        .sum())
}

/// The named main term at height (or table bound) `h` and shift `delta`.
pub fn main_term(kind: MainTermKind, h: u64, delta: i64) -> Result<f64> {
    if h == 0 {
        return Err(Error::invalid("H must be positive"));
    }
    if kind.needs_delta() && delta == 0 {
        return Err(Error::invalid(format!("{kind} needs Δ != 0")));
    }
    let hf = h as f64;
    let h2 = hf * hf;
    let sigma_ratio =
        || -> Result<f64> { Ok(sigma(delta.abs())? as f64 / delta.unsigned_abs() as f64) };
    Ok(match kind {
        MainTermKind::THEOREM_MAIN => NINETY_SIX_OVER_PI_SQ * sigma_ratio()? * h2,
        MainTermKind::DELTA0_MAIN => NINETY_SIX_OVER_PI_SQ * h2 * hf.ln(),
        MainTermKind::SIGN_LEMMA_MAIN | MainTermKind::SHIFTED_NOLOG_CANDIDATE => {
            TWELVE_OVER_PI_SQ * h2 * truncated_reciprocal_divisor_sum(delta, h)?
        }
        MainTermKind::TAU_SQ_MAIN => TWELVE_OVER_PI_SQ * h2 * hf.ln(),
        MainTermKind::SHIFTED_LOG_CANDIDATE => TWELVE_OVER_PI_SQ * sigma_ratio()? * h2 * hf.ln(),
    })
}

/// Exact count against a main term and a nominal error envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticReport {
    pub exact: Count,
    pub main: f64,
    pub error: f64,
    pub bound: f64,
    /// `|error| / bound`.
    pub normalized: f64,
}

impl AsymptoticReport {
    pub fn new(exact: Count, main: f64, bound: f64) -> Self {
        let error = exact as f64 - main;
        let normalized = if bound > 0.0 {
            error.abs() / bound
        } else if error == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        AsymptoticReport {
            exact,
            main,
            error,
            bound,
            normalized,
        }
    }
}

/// `H^ε max(H^{5/3}, |Δ|)` for `Δ != 0`; `H^ε H²` for `Δ = 0`, where the
/// secondary term is of exact order `H²`.
pub fn nominal_bound(h: u64, delta: i64, epsilon: f64) -> f64 {
    let hf = h as f64;
    let core = if delta == 0 {
        hf * hf
    } else {
        hf.powf(5.0 / 3.0).max(delta.unsigned_abs() as f64)
    };
    hf.powf(epsilon) * core
}

fn report_main(h: u64, delta: i64) -> Result<f64> {
    if delta == 0 {
        main_term(MainTermKind::DELTA0_MAIN, h, 0)
    } else {
        main_term(MainTermKind::THEOREM_MAIN, h, delta)
    }
}

/// `#D₂(H, Δ)` against its main term.
pub fn report(h: u64, delta: i64, epsilon: f64, budget: &Budget) -> Result<AsymptoticReport> {
    let pc = crate::divisor_tables::product_count(h, budget)?;
    report_with(&pc, delta, epsilon)
}

/// [`report`] on a prebuilt product counter.
pub fn report_with(pc: &ProductCount, delta: i64, epsilon: f64) -> Result<AsymptoticReport> {
    if epsilon < 0.0 || !epsilon.is_finite() {
        return Err(Error::invalid("epsilon must be finite and non-negative"));
    }
    let h = pc.height();
    let exact = fast_count_with(pc, delta);
    Ok(AsymptoticReport::new(
        exact,
        report_main(h, delta)?,
        nominal_bound(h, delta, epsilon),
    ))
}

/// Ordinary least squares `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope; zero with two points.
    pub slope_stderr: f64,
}

pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::invalid(
            "least squares needs at least two (x, y) pairs",
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx <= f64::EPSILON * xs.iter().map(|x| x * x).sum::<f64>() {
        return Err(Error::invalid("singular fit: abscissae are not distinct"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let slope_stderr = if xs.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
        slope_stderr,
    })
}

/// Power-law fit `|exact − main| ≈ e^{log_constant} H^{exponent}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorFit {
    pub exponent: f64,
    pub log_constant: f64,
    pub r_squared: f64,
    /// `(H, |error|)` for the points used.
    pub points: Vec<(u64, f64)>,
    /// Every error was zero; the fit is reported as perfect with exponent −∞.
    pub degenerate: bool,
}

/// Fits `ln |exact − main|` against `ln H` over the rows with non-zero
/// error.
pub fn fit_error_exponent(rows: &[(u64, Count, f64)]) -> Result<ErrorFit> {
    let mut hs: Vec<u64> = rows.iter().map(|r| r.0).collect();
    hs.sort_unstable();
    hs.dedup();
    if hs.len() != rows.len() || rows.iter().any(|r| r.0 == 0) {
        return Err(Error::invalid("error fit needs distinct positive H"));
    }
    let points: Vec<(u64, f64)> = rows
        .iter()
        .map(|&(h, exact, main)| (h, (exact as f64 - main).abs()))
        .filter(|p| p.1 > 0.0)
        .collect();
    if points.is_empty() && !rows.is_empty() {
        return Ok(ErrorFit {
            exponent: f64::NEG_INFINITY,
            log_constant: f64::NEG_INFINITY,
            r_squared: 1.0,
            points,
            degenerate: true,
        });
    }
    if points.len() < 3 {
        return Err(Error::invalid(
            "error fit needs at least three rows with non-zero error",
        ));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let fit = least_squares(&xs, &ys)?;
    Ok(ErrorFit {
        exponent: fit.slope,
        log_constant: fit.intercept,
        r_squared: fit.r_squared,
        points,
        degenerate: false,
    })
}

/// `value ≈ a·N² ln N + b·N²`, fitted as `value/N² = a ln N + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLinearFit {
    pub a: f64,
    pub b: f64,
    pub a_stderr: f64,
    pub r_squared: f64,
}

pub fn fit_linear_in_log(rows: &[(u64, f64)]) -> Result<LogLinearFit> {
    if rows.iter().any(|r| r.0 == 0) {
        return Err(Error::invalid("N must be positive"));
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.0 as f64).ln()).collect();
    let ys: Vec<f64> = rows
        .iter()
        .map(|r| r.1 / (r.0 as f64 * r.0 as f64))
        .collect();
    let fit = least_squares(&xs, &ys)?;
    Ok(LogLinearFit {
        a: fit.slope,
        b: fit.intercept,
        a_stderr: fit.slope_stderr,
        r_squared: fit.r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ShiftedCandidate {
    Log,
    NoLog,
}

/// Which main term the exact shifted sums follow.
///
/// The log candidate predicts `shifted/N²` grows in `ln N` with slope
/// `(12/π²) σ(Δ)/Δ`; the log-free one predicts slope 0. The fitted slope is
/// assigned to the nearer prediction. Error exponents against both
/// candidates are included for comparison (NaN when a fit is impossible).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftedVerdict {
    pub delta: i64,
    pub slope: f64,
    pub slope_stderr: f64,
    pub log_slope: f64,
    pub selected: ShiftedCandidate,
    pub log_exponent: f64,
    pub nolog_exponent: f64,
}

impl ShiftedVerdict {
    /// `|slope|` as a fraction of the log candidate's slope.
    pub fn relative_slope(&self) -> f64 {
        self.slope.abs() / self.log_slope
    }
}

/// Discriminates the two shifted main terms from `(N, shifted_sum(N, Δ))`.
pub fn discriminate_shifted(delta: i64, rows: &[(u64, Count)]) -> Result<ShiftedVerdict> {
    if delta <= 0 {
        return Err(Error::invalid("shifted discrimination needs Δ >= 1"));
    }
    let fit = fit_linear_in_log(&rows.iter().map(|&(n, v)| (n, v as f64)).collect::<Vec<_>>())?;
    let log_slope = TWELVE_OVER_PI_SQ * sigma(delta)? as f64 / delta as f64;
    let selected = if fit.a.abs() <= (fit.a - log_slope).abs() {
        ShiftedCandidate::NoLog
    } else {
        ShiftedCandidate::Log
    };
    let exponent = |kind| -> Result<f64> {
        let with_main: Vec<(u64, Count, f64)> = rows
            .iter()
            .map(|&(n, v)| Ok((n, v, main_term(kind, n, delta)?)))
            .collect::<Result<_>>()?;
        Ok(fit_error_exponent(&with_main).map_or(f64::NAN, |f| f.exponent))
    };
    Ok(ShiftedVerdict {
        delta,
        slope: fit.a,
        slope_stderr: fit.a_stderr,
        log_slope,
        selected,
        log_exponent: exponent(MainTermKind::SHIFTED_LOG_CANDIDATE)?,
        nolog_exponent: exponent(MainTermKind::SHIFTED_NOLOG_CANDIDATE)?,
    })
}
