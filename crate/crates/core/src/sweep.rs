//! Parameter sweeps and their CSV/JSON serialisation.
//!
//! Every runner returns rows in a fixed order independent of the number of
//! worker threads; counts are integers reduced exactly, so `jobs = 1` and
//! `jobs = k` agree byte for byte once timing is suppressed.

use std::io::{Read, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    discriminate_shifted, fit_error_exponent, fit_linear_in_log, report_with, ErrorFit,
    LogLinearFit, ShiftedVerdict,
};
use crate::casework::{region_sum_g, region_sum_j, CaseworkReport, RegionG, RegionJ};
use crate::divisor_tables::{build_tau_table, product_count, TauTable};
use crate::error::{Error, Result};
use crate::format::real;
use crate::hyperbola::{box_report, curve_report, random_queries, CurveBound, QueryRanges};
use crate::lemmas::LemmaRow;
use crate::{Budget, Count};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const DEFAULT_EPSILON: f64 = 0.1;

/// A worker pool of exactly `jobs` threads.
pub fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    if jobs == 0 {
        return Err(Error::invalid("jobs must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Invariant(format!("thread pool: {e}")))
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_jobs() -> usize {
    1
}

fn default_timing() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(rename = "H")]
    pub heights: Vec<u64>,
    #[serde(rename = "delta")]
    pub deltas: Vec<i64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    #[serde(default = "default_timing")]
    pub timing: bool,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.heights.is_empty() || self.deltas.is_empty() {
            return Err(Error::invalid("sweep needs at least one H and one delta"));
        }
        if self.heights.contains(&0) {
            return Err(Error::invalid("H must be positive"));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::invalid("epsilon must be finite and non-negative"));
        }
        if self.jobs == 0 {
            return Err(Error::invalid("jobs must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "H")]
    pub h: u64,
    pub delta: i64,
    pub exact: Count,
    pub main: f64,
    pub error: f64,
    pub normalized_error: f64,
    pub bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

/// `#D₂(H, Δ)` against its main term for every `(H, Δ)`; rows sorted by
/// `(Δ, H)`, duplicates removed.
pub fn run_sweep(config: &SweepConfig, budget: &Budget) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let mut heights = config.heights.clone();
    heights.sort_unstable();
    heights.dedup();
    let mut deltas = config.deltas.clone();
    deltas.sort_unstable();
    deltas.dedup();
    let pool = thread_pool(config.jobs)?;
    let per_h: Vec<Vec<SweepRow>> = pool.install(|| {
        heights
            .par_iter()
            .map(|&h| {
                let pc = product_count(h, budget)?;
                deltas
                    .iter()
                    .map(|&delta| {
                        let start = Instant::now();
                        let r = report_with(&pc, delta, config.epsilon)?;
                        let ms = start.elapsed().as_secs_f64() * 1e3;
                        Ok(SweepRow {
                            h,
                            delta,
                            exact: r.exact,
                            main: r.main,
                            error: r.error,
                            normalized_error: r.normalized,
                            bound: r.bound,
                            wall_time_ms: config.timing.then_some(ms),
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut rows: Vec<SweepRow> = per_h.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.delta, r.h));
    Ok(rows)
}

pub const SWEEP_HEADER: [&str; 7] = [
    "H",
    "delta",
    "exact",
    "main",
    "error",
    "normalized_error",
    "bound",
];

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let timing = rows.iter().any(|r| r.wall_time_ms.is_some());
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<&str> = SWEEP_HEADER.to_vec();
    if timing {
        header.push("wall_time_ms");
    }
    out.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.h.to_string(),
            r.delta.to_string(),
            r.exact.to_string(),
            real(r.main),
            real(r.error),
            real(r.normalized_error),
            real(r.bound),
        ];
        if timing {
            rec.push(r.wall_time_ms.map(real).unwrap_or_default());
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: Read>(r: R) -> Result<Vec<SweepRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    let got: Vec<&str> = headers.iter().collect();
    if got.len() < SWEEP_HEADER.len() || got[..SWEEP_HEADER.len()] != SWEEP_HEADER {
        return Err(Error::Format(format!("unexpected sweep header {got:?}")));
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| -> Result<&str> {
            rec.get(i)
                .ok_or_else(|| Error::Format(format!("row {}: missing column {}", line + 1, i)))
        };
        let parse_f = |i: usize| -> Result<f64> {
            field(i)?
                .parse()
                .map_err(|_| Error::Format(format!("row {}: bad real in column {}", line + 1, i)))
        };
        let bad = |what: &str| Error::Format(format!("row {}: bad {what}", line + 1));
        rows.push(SweepRow {
            h: field(0)?.parse().map_err(|_| bad("H"))?,
            delta: field(1)?.parse().map_err(|_| bad("delta"))?,
            exact: field(2)?.parse().map_err(|_| bad("exact"))?,
            main: parse_f(3)?,
            error: parse_f(4)?,
            normalized_error: parse_f(5)?,
            bound: parse_f(6)?,
            wall_time_ms: match rec.get(7) {
                Some(s) if !s.is_empty() => Some(s.parse().map_err(|_| bad("wall_time_ms"))?),
                _ => None,
            },
        });
    }
    Ok(rows)
}

#[derive(Serialize)]
struct JsonDoc<'a, C: Serialize, R: Serialize> {
    version: &'static str,
    config: &'a C,
    rows: &'a [R],
}

/// `{"version", "config", "rows"}` with one object per row.
pub fn write_json<W: Write, C: Serialize, R: Serialize>(
    config: &C,
    rows: &[R],
    mut w: W,
) -> Result<()> {
    serde_json::to_writer_pretty(
        &mut w,
        &JsonDoc {
            version: VERSION,
            config,
            rows,
        },
    )?;
    writeln!(w)?;
    Ok(())
}

/// Error-exponent fit per `Δ`, over every row of that `Δ`.
pub fn fit_sweep(rows: &[SweepRow]) -> Result<Vec<(i64, ErrorFit)>> {
    let mut deltas: Vec<i64> = rows.iter().map(|r| r.delta).collect();
    deltas.sort_unstable();
    deltas.dedup();
    deltas
        .into_iter()
        .map(|d| {
            let pts: Vec<(u64, Count, f64)> = rows
                .iter()
                .filter(|r| r.delta == d)
                .map(|r| (r.h, r.exact, r.main))
                .collect();
            Ok((d, fit_error_exponent(&pts)?))
        })
        .collect()
}

/// `a·H² ln H + b·H²` fit of the exact counts of one `Δ`.
pub fn fit_sweep_log(rows: &[SweepRow], delta: i64) -> Result<LogLinearFit> {
    let pts: Vec<(u64, f64)> = rows
        .iter()
        .filter(|r| r.delta == delta)
        .map(|r| (r.h, r.exact as f64))
        .collect();
    fit_linear_in_log(&pts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub k: u32,
    pub moment: Count,
    /// `moment / (N² (ln N)^{2^k − k − 1})`.
    pub normalized: f64,
}

fn tau_tables(ns: &[u64], jobs: usize, budget: &Budget) -> Result<Vec<(u64, TauTable)>> {
    if ns.is_empty() || ns.contains(&0) {
        return Err(Error::invalid("need at least one positive N"));
    }
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    thread_pool(jobs)?.install(|| {
        ns.par_iter()
            .map(|&n| Ok((n, build_tau_table(n, budget)?)))
            .collect()
    })
}

/// `Σ τ_N(n)^k` for each `N`, sorted by `N`.
pub fn tau_rows(ns: &[u64], k: u32, jobs: usize, budget: &Budget) -> Result<Vec<TauRow>> {
    if k == 0 || k > 8 {
        return Err(Error::invalid("k must be in 1..=8"));
    }
    let tables = tau_tables(ns, jobs, budget)?;
    let log_power = (1i32 << k) - k as i32 - 1;
    tables
        .into_iter()
        .map(|(n, t)| {
            let moment = t.moment(k)?;
            let nf = n as f64;
            let scale = nf * nf * nf.ln().powi(log_power);
            Ok(TauRow {
                n,
                k,
                moment,
                normalized: moment as f64 / scale,
            })
        })
        .collect()
}

pub fn write_tau_csv<W: Write>(rows: &[TauRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["N", "k", "moment", "normalized"])?;
    for r in rows {
        out.write_record([
            r.n.to_string(),
            r.k.to_string(),
            r.moment.to_string(),
            real(r.normalized),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftedRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub delta: i64,
    pub shifted: Count,
    pub log_main: f64,
    pub nolog_main: f64,
}

/// `Σ_{n} τ_N(n) τ_N(n+Δ)` for each `(N, Δ)` with both candidate main terms,
/// and the log/no-log verdict per `Δ` when at least three `N` are given.
pub fn shifted_rows(
    ns: &[u64],
    deltas: &[i64],
    jobs: usize,
    budget: &Budget,
) -> Result<(Vec<ShiftedRow>, Vec<ShiftedVerdict>)> {
    use crate::asymptotics::{main_term, MainTermKind};

    if deltas.is_empty() || deltas.iter().any(|d| *d < 1) {
        return Err(Error::invalid("shifted sums need Δ >= 1"));
    }
    let mut deltas = deltas.to_vec();
    deltas.sort_unstable();
    deltas.dedup();
    let tables = tau_tables(ns, jobs, budget)?;
    let mut rows = Vec::new();
    for &delta in &deltas {
        for (n, t) in &tables {
            rows.push(ShiftedRow {
                n: *n,
                delta,
                shifted: t.shifted_sum(delta as u64)?,
                log_main: main_term(MainTermKind::SHIFTED_LOG_CANDIDATE, *n, delta)?,
                nolog_main: main_term(MainTermKind::SHIFTED_NOLOG_CANDIDATE, *n, delta)?,
            });
        }
    }
    let mut verdicts = Vec::new();
    if tables.len() >= 3 {
        for &delta in &deltas {
            let pts: Vec<(u64, Count)> = rows
                .iter()
                .filter(|r| r.delta == delta)
                .map(|r| (r.n, r.shifted))
                .collect();
            verdicts.push(discriminate_shifted(delta, &pts)?);
        }
    }
    Ok((rows, verdicts))
}

pub fn write_shifted_csv<W: Write>(rows: &[ShiftedRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["N", "delta", "shifted", "log_main", "nolog_main"])?;
    for r in rows {
        out.write_record([
            r.n.to_string(),
            r.delta.to_string(),
            r.shifted.to_string(),
            real(r.log_main),
            real(r.nolog_main),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperbolaRow {
    pub index: usize,
    pub variant: &'static str,
    #[serde(rename = "K")]
    pub k: i64,
    pub q: u64,
    #[serde(rename = "U")]
    pub u: f64,
    #[serde(rename = "X")]
    pub x: f64,
    /// `V` for boxes, absent for curves.
    #[serde(rename = "V")]
    pub v: Option<f64>,
    /// `Y` for boxes, absent for curves.
    #[serde(rename = "Y")]
    pub y: Option<f64>,
    /// `A` of the curve `A/u`, absent for boxes.
    #[serde(rename = "A")]
    pub a: Option<f64>,
    pub exact: Count,
    pub main: f64,
    pub error: f64,
    pub bound: f64,
    pub ratio: f64,
}

/// Box and curve reports for `count` seeded query pairs, box row first.
pub fn hyperbola_diagnostics(
    seed: u64,
    count: usize,
    epsilon: f64,
    jobs: usize,
) -> Result<Vec<HyperbolaRow>> {
    let pairs = random_queries(seed, count, QueryRanges::default());
    let per_pair: Vec<[HyperbolaRow; 2]> = thread_pool(jobs)?.install(|| {
        pairs
            .par_iter()
            .map(|p| {
                let b = box_report(&p.boxed, epsilon)?;
                let c = curve_report(&p.curve, epsilon)?;
                let a = match p.curve.bound {
                    CurveBound::Hyperbolic { a } => a,
                    CurveBound::Tabulated { .. } => unreachable!("random curves are hyperbolic"),
                };
                Ok([
                    HyperbolaRow {
                        index: p.index,
                        variant: "box",
                        k: p.boxed.k,
                        q: p.boxed.q,
                        u: p.boxed.u,
                        x: p.boxed.x,
                        v: Some(p.boxed.v),
                        y: Some(p.boxed.y),
                        a: None,
                        exact: b.exact,
                        main: b.main,
                        error: b.error,
                        bound: b.bound,
                        ratio: b.normalized,
                    },
                    HyperbolaRow {
                        index: p.index,
                        variant: "curve",
                        k: p.curve.k,
                        q: p.curve.q,
                        u: p.curve.u,
                        x: p.curve.x,
                        v: None,
                        y: None,
                        a: Some(a),
                        exact: c.exact,
                        main: c.main,
                        error: c.error,
                        bound: c.bound,
                        ratio: c.normalized,
                    },
                ])
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(per_pair.into_iter().flatten().collect())
}

pub fn write_hyperbola_csv<W: Write>(rows: &[HyperbolaRow], w: W) -> Result<()> {
    let opt = |x: Option<f64>| x.map(real).unwrap_or_default();
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "index", "variant", "K", "q", "U", "X", "V", "Y", "A", "exact", "main", "error", "bound",
        "ratio",
    ])?;
    for r in rows {
        out.write_record([
            r.index.to_string(),
            r.variant.to_string(),
            r.k.to_string(),
            r.q.to_string(),
            real(r.u),
            real(r.x),
            opt(r.v),
            opt(r.y),
            opt(r.a),
            r.exact.to_string(),
            real(r.main),
            real(r.error),
            real(r.bound),
            real(r.ratio),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_lemma_csv<W: Write>(rows: &[LemmaRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "lemma", "variant", "X", "Y", "r", "exact", "main", "error", "envelope", "ratio",
    ])?;
    for row in rows {
        let r = &row.report;
        out.write_record([
            row.lemma.to_string(),
            row.variant.to_string(),
            real(row.x),
            real(row.y),
            row.r.to_string(),
            real(r.exact),
            real(r.main),
            real(r.error),
            real(r.envelope),
            real(r.ratio),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_casework_csv<W: Write>(reports: &[CaseworkReport], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["H", "delta", "family", "region", "direct", "via_hyperbola"])?;
    for rep in reports {
        for row in &rep.rows {
            out.write_record([
                rep.height.to_string(),
                rep.delta.to_string(),
                row.family.to_string(),
                row.region.to_string(),
                row.direct.to_string(),
                row.via_hyperbola.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// One golden region sum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureRow {
    #[serde(rename = "H")]
    pub h: u64,
    pub delta: i64,
    pub region: String,
    pub count: Count,
}

/// Direct-loop region sums for every G and J region of each `(H, Δ)`.
pub fn casework_fixtures(points: &[(u64, i64)]) -> Result<Vec<FixtureRow>> {
    let mut rows = Vec::new();
    for &(h, delta) in points {
        for r in RegionG::ALL {
            rows.push(FixtureRow {
                h,
                delta,
                region: r.name().into(),
                count: region_sum_g(h, delta, r)?,
            });
        }
        for r in RegionJ::ALL {
            rows.push(FixtureRow {
                h,
                delta,
                region: r.name().into(),
                count: region_sum_j(h, delta, r)?,
            });
        }
    }
    Ok(rows)
}

pub fn write_fixtures_csv<W: Write>(rows: &[FixtureRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_fixtures_csv<R: Read>(r: R) -> Result<Vec<FixtureRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}
