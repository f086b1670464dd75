//! Summation identities over gcds and totients, each paired with its main
//! term and an `O(·)` envelope taken with constant 1.
//!
//! Rational sums are accumulated in `f64` with Neumaier compensation.

use serde::Serialize;

use crate::arith::{divisors, gcd_u64, mobius, tau};
use crate::error::{Error, Result};
use crate::{Count, SIX_OVER_PI_SQ};

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

fn csum(iter: impl IntoIterator<Item = f64>) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaReport {
    pub exact: f64,
    pub main: f64,
    pub error: f64,
    pub envelope: f64,
    /// `|error| / envelope`; infinite when the envelope is zero and the
    /// error is not.
    pub ratio: f64,
}

impl LemmaReport {
    pub fn new(exact: f64, main: f64, envelope: f64) -> Self {
        let error = exact - main;
        let ratio = if envelope > 0.0 {
            error.abs() / envelope
        } else if error == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        LemmaReport {
            exact,
            main,
            error,
            envelope,
            ratio,
        }
    }
}

/// `Σ_{c=1}^{K} c^A gcd(c, L)^B`, grouped by `g = gcd(c, L)`.
pub fn gcd_power_sum(k: u64, l: u64, a: f64, b: f64) -> Result<f64> {
    if k == 0 || l == 0 {
        return Err(Error::invalid("K and L must be positive"));
    }
    if b.is_nan() || b > 1.0 || !a.is_finite() {
        return Err(Error::invalid("gcd_power_sum needs finite A and B <= 1"));
    }
    let mut total = CompensatedSum::default();
    for g in divisors(l as i64)? {
        if g > k {
            break;
        }
        let rest = l / g;
        let inner = csum(
            (1..=k / g)
                .filter(|e| gcd_u64(*e, rest) == 1)
                .map(|e| (e as f64).powf(a)),
        );
        total.add((g as f64).powf(a + b) * inner);
    }
    Ok(total.value())
}

/// The gcd-power sum is only an upper bound: main is 0 and the envelope is
/// `K^{A+1+ε} L^ε`.
pub fn gcd_power_report(k: u64, l: u64, a: f64, b: f64, epsilon: f64) -> Result<LemmaReport> {
    let exact = gcd_power_sum(k, l, a, b)?;
    let envelope = (k as f64).powf(a + 1.0 + epsilon) * (l as f64).powf(epsilon);
    Ok(LemmaReport::new(exact, 0.0, envelope))
}

/// `φ(n)` for `n <= x` by a plain totient sieve.
fn phi_upto(x: u64) -> Vec<u64> {
    let n = x as usize;
    let mut phi: Vec<u64> = (0..=x).collect();
    for p in 2..=n {
        if phi[p] == p as u64 {
            for m in (p..=n).step_by(p) {
                phi[m] -= phi[m] / p as u64;
            }
        }
    }
    phi
}

fn require_x(x: u64) -> Result<()> {
    if x == 0 {
        Err(Error::invalid("X must be positive"))
    } else {
        Ok(())
    }
}

/// `Σ_{n<=X} φ(n)/n`.
pub fn phi_ratio_sum(x: u64) -> Result<f64> {
    require_x(x)?;
    let phi = phi_upto(x);
    Ok(csum((1..=x as usize).map(|n| phi[n] as f64 / n as f64)))
}

/// `Σ_{n<=X} φ(n)/n²`.
pub fn phi_over_square_sum(x: u64) -> Result<f64> {
    require_x(x)?;
    let phi = phi_upto(x);
    Ok(csum(
        (1..=x as usize).map(|n| phi[n] as f64 / (n as f64 * n as f64)),
    ))
}

/// Log factors in envelopes are floored at 1 so that `X = r`-type edges do
/// not produce a zero envelope.
fn log_floor(x: f64) -> f64 {
    x.ln().max(1.0)
}

/// `6X/π²` with envelope `log X`.
pub fn phi_ratio_report(x: u64) -> Result<LemmaReport> {
    let exact = phi_ratio_sum(x)?;
    Ok(LemmaReport::new(
        exact,
        SIX_OVER_PI_SQ * x as f64,
        log_floor(x as f64),
    ))
}

/// `(6/π²) log X` with envelope 1.
pub fn phi_over_square_report(x: u64) -> Result<LemmaReport> {
    let exact = phi_over_square_sum(x)?;
    Ok(LemmaReport::new(
        exact,
        SIX_OVER_PI_SQ * (x as f64).ln(),
        1.0,
    ))
}

/// `#{0 < x <= X : gcd(x, Y) = 1}` as `Σ_{d|Y} μ(d) ⌊X/d⌋`.
pub fn coprime_count(x: f64, y: u64) -> Result<Count> {
    if y == 0 {
        return Err(Error::invalid("Y must be positive"));
    }
    if !x.is_finite() || x < 0.0 {
        return Err(Error::invalid("X must be finite and non-negative"));
    }
    Ok(coprime_upto(x.floor() as u64, y))
}

/// Integer form of [`coprime_count`]; `y >= 1`.
fn coprime_upto(n: u64, y: u64) -> Count {
    let mut total: i128 = 0;
    for d in divisors(y as i64).expect("positive") {
        let mu = mobius(d as i64).expect("positive");
        total += i128::from(mu) * i128::from(n / d);
    }
    total as Count
}

/// `X φ(Y)/Y` with envelope `τ(Y)`.
pub fn coprime_report(x: f64, y: u64) -> Result<LemmaReport> {
    let exact = coprime_count(x, y)? as f64;
    let phi = crate::arith::phi(y as i64)? as f64;
    Ok(LemmaReport::new(
        exact,
        x * phi / y as f64,
        tau(y as i64)? as f64,
    ))
}

/// The four gcd-restricted reciprocal sums, all over pairs with
/// `gcd(x, y) = r`:
///
/// 1. `Σ r/(xy)` over `0 < x, y <= X`;
/// 2. `Σ r/x` over `0 < x <= X`, `0 < y < x + Y`;
/// 3. `Σ r/y` over `0 < x <= X`, `x + Y < y <= X`;
/// 4. `Σ r/y` over `0 < x <= X`, `0 < y <= Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum XyVariant {
    V1,
    V2,
    V3,
    V4,
}

impl XyVariant {
    pub const ALL: [XyVariant; 4] = [XyVariant::V1, XyVariant::V2, XyVariant::V3, XyVariant::V4];

    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(XyVariant::V1),
            2 => Ok(XyVariant::V2),
            3 => Ok(XyVariant::V3),
            4 => Ok(XyVariant::V4),
            _ => Err(Error::invalid(format!(
                "xy_sum variant must be 1..=4, got {i}"
            ))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            XyVariant::V1 => 1,
            XyVariant::V2 => 2,
            XyVariant::V3 => 3,
            XyVariant::V4 => 4,
        }
    }
}

fn check_xy(variant: XyVariant, x: f64, y: f64, r: u64) -> Result<()> {
    if r == 0 {
        return Err(Error::invalid("r must be positive"));
    }
    if !x.is_finite() || !y.is_finite() || x < 0.0 || y < 0.0 {
        return Err(Error::invalid("X and Y must be finite and non-negative"));
    }
    if (r as f64) > x {
        return Err(Error::invalid("xy_sum needs r <= X"));
    }
    match variant {
        XyVariant::V3 if y > x => Err(Error::invalid("variant 3 needs Y <= X")),
        XyVariant::V4 if y < r as f64 => Err(Error::invalid("variant 4 needs Y >= r")),
        _ => Ok(()),
    }
}

/// Number of integers in the open interval `(0, t)`.
fn below_strict(t: f64) -> u64 {
    if t <= 0.0 {
        0
    } else {
        (t.ceil() as u64).saturating_sub(1)
    }
}

/// Exact left-hand side of the chosen variant. After `x = r x'`,
/// `y = r y'` each sum becomes a sum over coprime `(x', y')`, evaluated with
/// Möbius-inverted coprime counts.
pub fn xy_sum_exact(variant: XyVariant, x: f64, y: f64, r: u64) -> Result<f64> {
    check_xy(variant, x, y, r)?;
    let rf = r as f64;
    let xp = (x / rf).floor() as u64;
    let yr = y / rf;
    let value = match variant {
        XyVariant::V1 => {
            // (1/r) Σ_d μ(d)/d² (H_{⌊X'/d⌋})²
            let harmonic: Vec<f64> = {
                let mut h = CompensatedSum::default();
                let mut out = vec![0.0];
                for n in 1..=xp {
                    h.add(1.0 / n as f64);
                    out.push(h.value());
                }
                out
            };
            let inner = csum((1..=xp).map(|d| {
                let mu = mobius(d as i64).expect("positive") as f64;
                let hd = harmonic[(xp / d) as usize];
                mu * hd * hd / (d as f64 * d as f64)
            }));
            inner / rf
        }
        XyVariant::V2 => {
            csum((1..=xp).map(|a| coprime_upto(below_strict(a as f64 + yr), a) as f64 / a as f64))
        }
        XyVariant::V3 => csum(
            (1..=xp)
                .filter(|b| *b as f64 > yr)
                .map(|b| coprime_upto(below_strict(b as f64 - yr), b) as f64 / b as f64),
        ),
        XyVariant::V4 => {
            let yp = yr.floor() as u64;
            csum((1..=yp).map(|b| coprime_upto(xp, b) as f64 / b as f64))
        }
    };
    Ok(value)
}

/// Main term of the chosen variant.
pub fn xy_sum_main(variant: XyVariant, x: f64, y: f64, r: u64) -> Result<f64> {
    check_xy(variant, x, y, r)?;
    let rf = r as f64;
    let lx = (x / rf).ln();
    Ok(SIX_OVER_PI_SQ
        * match variant {
            XyVariant::V1 => lx * lx / rf,
            XyVariant::V2 => x / rf + y / rf * lx,
            XyVariant::V3 => {
                let tail = if y > 0.0 { y / rf * (x / y).ln() } else { 0.0 };
                (x - y) / rf + tail
            }
            XyVariant::V4 => x / rf * (y / rf).ln(),
        })
}

/// `O(·)` term of the chosen variant with constant 1.
pub fn xy_sum_envelope(variant: XyVariant, x: f64, y: f64, r: u64) -> Result<f64> {
    check_xy(variant, x, y, r)?;
    let rf = r as f64;
    let lx = log_floor(x / rf);
    Ok(match variant {
        XyVariant::V1 => lx / rf,
        XyVariant::V2 | XyVariant::V3 => y / rf + lx * lx,
        XyVariant::V4 => x / rf,
    })
}

pub fn xy_sum(variant: XyVariant, x: f64, y: f64, r: u64) -> Result<LemmaReport> {
    Ok(LemmaReport::new(
        xy_sum_exact(variant, x, y, r)?,
        xy_sum_main(variant, x, y, r)?,
        xy_sum_envelope(variant, x, y, r)?,
    ))
}

/// `(Σ_{r|Δ, r<=H} 1/r, σ(Δ)/Δ)`.
pub fn divisor_tail(delta: u64, h: u64) -> Result<(f64, f64)> {
    if delta == 0 || h == 0 {
        return Err(Error::invalid("Δ and H must be positive"));
    }
    let divs = divisors(delta as i64)?;
    let partial = csum(divs.iter().filter(|r| **r <= h).map(|r| 1.0 / *r as f64));
    // σ(Δ)/Δ = Σ_{r|Δ} 1/r, summed in the same order for consistency
    let full = csum(divs.iter().map(|r| 1.0 / *r as f64));
    Ok((partial, full))
}

/// `0 <= σ(Δ)/Δ − Σ_{r|Δ, r<=H} 1/r <= τ(Δ)/H`, checked in integers as
/// `Σ_{r|Δ, r>H} H·(Δ/r) <= τ(Δ)·Δ`.
pub fn divisor_tail_holds(delta: u64, h: u64) -> Result<bool> {
    if delta == 0 || h == 0 {
        return Err(Error::invalid("Δ and H must be positive"));
    }
    let divs = divisors(delta as i64)?;
    let lhs: u128 = divs
        .iter()
        .filter(|r| **r > h)
        .map(|r| u128::from(h) * u128::from(delta / r))
        .sum();
    Ok(lhs <= divs.len() as u128 * u128::from(delta))
}

/// One row of a lemma regression grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaRow {
    pub lemma: &'static str,
    pub variant: u8,
    pub x: f64,
    pub y: f64,
    pub r: u64,
    pub report: LemmaReport,
}

/// Reports on the logarithmic grid `X ∈ {10², 10³, 10⁴}`,
/// `r ∈ {1, 2, 5, 10}`, `Y ∈ {X/10, X/2, X}` for every summation identity.
pub fn log_grid(epsilon: f64) -> Result<Vec<LemmaRow>> {
    use rayon::prelude::*;

    let mut jobs: Vec<(&'static str, u8, f64, f64, u64)> = Vec::new();
    for x in [100.0, 1_000.0, 10_000.0] {
        for r in [1u64, 2, 5, 10] {
            for y in [x / 10.0, x / 2.0, x] {
                for v in 1..=4u8 {
                    if v == 1 && y != x {
                        continue;
                    }
                    jobs.push(("xy_sum", v, x, y, r));
                }
            }
        }
        jobs.push(("phi_ratio_sum", 0, x, 0.0, 0));
        jobs.push(("phi_over_square_sum", 0, x, 0.0, 0));
        for l in [1u64, 720, 5040] {
            jobs.push(("gcd_power_sum", 0, x, l as f64, 0));
        }
        for y in [1u64, 30, 720, 997] {
            jobs.push(("coprime_count", 0, x + 0.5, y as f64, 0));
        }
    }
    jobs.par_iter()
        .map(|&(lemma, variant, x, y, r)| {
            let report = match lemma {
                "xy_sum" => xy_sum(XyVariant::from_index(variant)?, x, y, r)?,
                "phi_ratio_sum" => phi_ratio_report(x as u64)?,
                "phi_over_square_sum" => phi_over_square_report(x as u64)?,
                "gcd_power_sum" => gcd_power_report(x as u64, y as u64, 0.5, 1.0, epsilon)?,
                _ => coprime_report(x, y as u64)?,
            };
            Ok(LemmaRow {
                lemma,
                variant,
                x,
                y,
                r,
                report,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::gcd;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn gcd_power_examples() {
        assert_eq!(gcd_power_sum(3, 1, 0.0, 1.0).unwrap(), 3.0);
        assert_eq!(gcd_power_sum(4, 2, 0.0, 1.0).unwrap(), 6.0);
        assert!(gcd_power_sum(4, 2, 0.0, 1.5).is_err());
        assert!(gcd_power_sum(0, 2, 0.0, 1.0).is_err());
        let k = 1000u64;
        let s = gcd_power_sum(k, 720, 0.5, 1.0).unwrap();
        assert!(s <= 10.0 * (k as f64).powf(1.5) * ((k * 720) as f64).powf(0.05));
        let report = gcd_power_report(k, 720, 0.5, 1.0, 0.05).unwrap();
        assert_eq!(report.main, 0.0);
        assert_eq!(report.error, report.exact);
    }

    #[test]
    fn gcd_power_matches_direct_loop() {
        for k in [1u64, 7, 30, 64] {
            for l in [1u64, 6, 12, 30, 64, 97] {
                for (a, b) in [(0.0, 1.0), (0.5, 0.5), (-1.0, 1.0), (2.0, -1.0)] {
                    let direct: f64 = (1..=k)
                        .map(|c| (c as f64).powf(a) * (gcd_u64(c, l) as f64).powf(b))
                        .sum();
                    assert!(close(gcd_power_sum(k, l, a, b).unwrap(), direct));
                }
            }
        }
    }

    #[test]
    fn phi_sum_examples() {
        assert_eq!(phi_ratio_sum(1).unwrap(), 1.0);
        assert_eq!(phi_over_square_sum(1).unwrap(), 1.0);
        assert!(close(phi_ratio_sum(4).unwrap(), 8.0 / 3.0));
        assert!(phi_ratio_sum(0).is_err());
        let x = 100_000u64;
        let err = (phi_ratio_sum(x).unwrap() - SIX_OVER_PI_SQ * x as f64).abs();
        assert!(err <= 20.0 * (x as f64).ln());
    }

    #[test]
    fn coprime_examples() {
        assert_eq!(coprime_count(10.0, 1).unwrap(), 10);
        assert_eq!(coprime_count(10.0, 6).unwrap(), 3);
        assert_eq!(coprime_count(10.9, 6).unwrap(), 3);
        assert_eq!(coprime_count(0.0, 6).unwrap(), 0);
        assert!(coprime_count(1.0, 0).is_err());
        assert!(coprime_count(-1.0, 3).is_err());
    }

    #[test]
    fn coprime_within_tau_of_density() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..500 {
            let x: f64 = rng.gen_range(0.0..10_000.0);
            let y: u64 = rng.gen_range(1..=1000);
            let direct = (1..=x.floor() as u64)
                .filter(|n| gcd_u64(*n, y) == 1)
                .count() as u128;
            assert_eq!(coprime_count(x, y).unwrap(), direct);
            let report = coprime_report(x, y).unwrap();
            assert!(report.ratio <= 1.0, "x={x} y={y} {report:?}");
        }
    }

    fn naive_xy(variant: XyVariant, x: f64, y: f64, r: u64) -> f64 {
        let xi = x.floor() as i64;
        let r = r as i64;
        let mut s = 0.0;
        let ymax = match variant {
            XyVariant::V2 => (x + y).ceil() as i64 + 1,
            XyVariant::V4 => y.floor() as i64,
            _ => xi,
        };
        for a in 1..=xi {
            for b in 1..=ymax {
                if gcd(a, b) != r {
                    continue;
                }
                let (af, bf, rf) = (a as f64, b as f64, r as f64);
                s += match variant {
                    XyVariant::V1 => rf / (af * bf),
                    XyVariant::V2 if bf < af + y => rf / af,
                    XyVariant::V3 if af + y < bf => rf / bf,
                    XyVariant::V4 => rf / bf,
                    _ => 0.0,
                };
            }
        }
        s
    }

    #[test]
    fn xy_matches_naive_on_small_grid() {
        for variant in XyVariant::ALL {
            for x in [1.0, 2.0, 7.0, 12.5, 30.0] {
                for y in [0.0, 1.0, 2.5, 6.0, 12.0, 29.0] {
                    for r in [1u64, 2, 3, 5] {
                        if check_xy(variant, x, y, r).is_err() {
                            continue;
                        }
                        let exact = xy_sum_exact(variant, x, y, r).unwrap();
                        let naive = naive_xy(variant, x, y, r);
                        assert!(
                            close(exact, naive),
                            "{variant:?} x={x} y={y} r={r}: {exact} vs {naive}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn xy_examples() {
        let edge = xy_sum(XyVariant::V1, 3.0, 3.0, 3).unwrap();
        assert!(close(edge.exact, 1.0 / 3.0));
        assert_eq!(edge.main, 0.0);
        let v1 = xy_sum(XyVariant::V1, 100.0, 100.0, 1).unwrap();
        assert!(v1.error.abs() <= 20.0 * 100f64.ln());
        let v4 = xy_sum(XyVariant::V4, 100.0, 100.0, 2).unwrap();
        assert!(v4.error.abs() <= 20.0 * 50.0);
        assert!(xy_sum(XyVariant::V1, 3.0, 3.0, 4).is_err());
        assert!(xy_sum(XyVariant::V3, 3.0, 4.0, 1).is_err());
        assert!(xy_sum(XyVariant::V4, 30.0, 1.0, 2).is_err());
        assert!(XyVariant::from_index(5).is_err());
    }

    #[test]
    fn divisor_tail_examples() {
        let (p, f) = divisor_tail(6, 6).unwrap();
        assert!(close(p, 2.0) && close(f, 2.0));
        let (p, f) = divisor_tail(6, 2).unwrap();
        assert!(close(p, 1.5) && close(f, 2.0));
        let (p, f) = divisor_tail(13, 20).unwrap();
        assert!(close(p, 14.0 / 13.0) && close(f, 14.0 / 13.0));
        assert!(divisor_tail(0, 1).is_err());
    }

    #[test]
    fn divisor_tail_inequality() {
        for delta in 1..=2000u64 {
            for h in [1u64, 3, 10, 100] {
                assert!(divisor_tail_holds(delta, h).unwrap());
                let (p, f) = divisor_tail(delta, h).unwrap();
                assert!(f - p >= -1e-12);
            }
        }
    }

    #[test]
    fn log_grid_envelopes() {
        let rows = log_grid(0.05).unwrap();
        assert!(rows.len() > 100);
        for row in &rows {
            assert!(row.report.ratio <= 25.0, "{row:?}");
        }
    }
}
