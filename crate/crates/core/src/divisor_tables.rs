//! The restricted divisor function
//! `τ_N(n) = #{(a, b) : ab = n, 1 <= a, b <= N}`, its moments and shifted
//! convolutions, and the signed product counter built on top of it.

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::{Budget, Count};

const MAGIC: &[u8; 4] = b"TAUN";
const FORMAT_VERSION: u32 = 1;

/// Default block length for the streaming moment and shifted-sum routines.
pub const DEFAULT_BLOCK: u64 = 1 << 20;

/// `τ_N(n)` for `1 <= n <= N²`, stored as 32-bit cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TauTable {
    bound: u64,
    // counts[0] is unused and zero
    counts: Vec<u32>,
}

fn require_bound(n: u64, op: &str) -> Result<u64> {
    if n == 0 {
        return Err(Error::invalid(format!("{op}: N must be positive")));
    }
    n.checked_mul(n).ok_or(Error::Overflow("N squared"))
}

/// Builds the table by the `O(N²)` double loop over `(a, b)`.
pub fn build_tau_table(n_bound: u64, budget: &Budget) -> Result<TauTable> {
    let sq = require_bound(n_bound, "build_tau_table")?;
    budget.check("tau table", u128::from(sq) + 1)?;
    let mut counts = vec![0u32; sq as usize + 1];
    for a in 1..=n_bound as usize {
        let step = a;
        let mut n = a;
        for _ in 0..n_bound {
            counts[n] += 1;
            n += step;
        }
    }
    Ok(TauTable {
        bound: n_bound,
        counts,
    })
}

impl TauTable {
    /// The `N` of `τ_N`.
    pub fn bound(&self) -> u64 {
        self.bound
    }

    /// `N²`, the end of the support.
    pub fn support_end(&self) -> u64 {
        self.bound * self.bound
    }

    /// Cells `1..=N²`.
    pub fn counts(&self) -> &[u32] {
        &self.counts[1..]
    }

    /// `τ_N(n)`, zero outside `1..=N²`.
    #[inline]
    pub fn get(&self, n: u64) -> u32 {
        if n == 0 || n > self.support_end() {
            0
        } else {
            self.counts[n as usize]
        }
    }

    /// Exact `Σ_n τ_N(n)^k`.
    pub fn moment(&self, k: u32) -> Result<Count> {
        if k == 0 {
            return Err(Error::invalid("tau_moment: k must be positive"));
        }
        let powers = power_table(self.counts[1..].iter().copied().max().unwrap_or(0), k)?;
        self.counts[1..]
            .par_chunks(DEFAULT_BLOCK as usize)
            .map(|chunk| {
                chunk.iter().try_fold(0u128, |acc, &t| {
                    acc.checked_add(powers[t as usize])
                        .ok_or(Error::Overflow("tau moment"))
                })
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .try_fold(0u128, |acc, x| {
                acc.checked_add(x).ok_or(Error::Overflow("tau moment"))
            })
    }

    /// Exact `Σ_{n=1}^{N²} τ_N(n) τ_N(n + Δ)`.
    pub fn shifted_sum(&self, delta: u64) -> Result<Count> {
        if delta == 0 {
            return Err(Error::invalid("shifted_sum: delta must be positive"));
        }
        let end = self.support_end();
        if delta >= end {
            return Ok(0);
        }
        let left = &self.counts[1..=(end - delta) as usize];
        let right = &self.counts[1 + delta as usize..];
        Ok(left
            .par_chunks(DEFAULT_BLOCK as usize)
            .zip(right.par_chunks(DEFAULT_BLOCK as usize))
            .map(|(l, r)| {
                l.iter()
                    .zip(r)
                    .map(|(&x, &y)| u128::from(u64::from(x) * u64::from(y)))
                    .sum::<u128>()
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum())
    }

    /// Writes the little-endian dump: `b"TAUN"`, `u32` version, `u64` N, then
    /// `N²` `u32` cells for `n = 1..=N²`.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&self.bound.to_le_bytes())?;
        let mut buf = Vec::with_capacity(4 * 4096);
        for chunk in self.counts[1..].chunks(4096) {
            buf.clear();
            for c in chunk {
                buf.extend_from_slice(&c.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    /// Reads a dump written by [`TauTable::write_to`].
    pub fn read_from<R: Read>(mut r: R, budget: &Budget) -> Result<TauTable> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("tau table: bad magic".into()));
        }
        let mut v = [0u8; 4];
        r.read_exact(&mut v)?;
        let version = u32::from_le_bytes(v);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "tau table: unsupported version {version}"
            )));
        }
        let mut nb = [0u8; 8];
        r.read_exact(&mut nb)?;
        let bound = u64::from_le_bytes(nb);
        let sq = require_bound(bound, "read tau table")?;
        budget.check("tau table", u128::from(sq) + 1)?;
        let mut bytes = vec![0u8; sq as usize * 4];
        r.read_exact(&mut bytes)?;
        let mut counts = Vec::with_capacity(sq as usize + 1);
        counts.push(0);
        counts.extend(
            bytes
                .chunks_exact(4)
                .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]])),
        );
        Ok(TauTable { bound, counts })
    }
}

fn power_table(max: u32, k: u32) -> Result<Vec<u128>> {
    (0..=max)
        .map(|t| {
            u128::from(t)
                .checked_pow(k)
                .ok_or(Error::Overflow("tau power"))
        })
        .collect()
}

/// `τ_N(n)` via the divisor window `{d | n : n/N <= d <= N}`.
///
/// Independent of the table; used for spot values and cross-checks.
pub fn tau_window(n_bound: u64, n: u64) -> Count {
    if n == 0 {
        return 0;
    }
    let mut count = 0;
    let mut d = 1u64;
    while d <= n_bound && d <= n {
        // n/N <= d  <=>  n <= d*N
        if n.is_multiple_of(d) && u128::from(n) <= u128::from(d) * u128::from(n_bound) {
            count += 1;
        }
        d += 1;
    }
    count
}

/// Table lookup of `τ_N(n)`; zero beyond `N²`, error for `n <= 0`.
pub fn tau_restricted(table: &TauTable, n: i64) -> Result<Count> {
    if n <= 0 {
        return Err(Error::invalid(format!(
            "tau_restricted: n must be positive, got {n}"
        )));
    }
    Ok(Count::from(table.get(n as u64)))
}

/// Exact `Σ_{n <= N²} τ_N(n)^k` through an in-memory table.
pub fn tau_moment(n_bound: u64, k: u32, budget: &Budget) -> Result<Count> {
    build_tau_table(n_bound, budget)?.moment(k)
}

/// Exact `Σ_{n <= N²} τ_N(n) τ_N(n + Δ)` through an in-memory table.
pub fn shifted_sum(n_bound: u64, delta: u64, budget: &Budget) -> Result<Count> {
    build_tau_table(n_bound, budget)?.shifted_sum(delta)
}

/// Fills `out[i] = τ_N(lo + i)` for the window `lo..lo + out.len()`.
///
/// Every `a <= N` marks its multiples `a·b` with `b <= N` inside the window.
pub fn fill_tau_block(n_bound: u64, lo: u64, out: &mut [u32]) {
    out.iter_mut().for_each(|c| *c = 0);
    if out.is_empty() || lo == 0 {
        return;
    }
    let hi = lo + out.len() as u64 - 1;
    // a*N >= lo is required for some multiple a*b (b <= N) to reach the window
    let a_min = lo.div_ceil(n_bound).max(1);
    let a_max = n_bound.min(hi);
    for a in a_min..=a_max {
        let first = lo.div_ceil(a).max(1) * a;
        let last = hi.min(a * n_bound);
        let mut n = first;
        while n <= last {
            out[(n - lo) as usize] += 1;
            n += a;
        }
    }
}

fn blocks(end: u64, block: u64) -> Vec<(u64, u64)> {
    let block = block.max(1);
    let mut out = Vec::new();
    let mut lo = 1;
    while lo <= end {
        let hi = (lo + block - 1).min(end);
        out.push((lo, hi));
        lo = hi + 1;
    }
    out
}

/// Streaming variant of [`tau_moment`]: memory is `O(block)` per worker.
pub fn tau_moment_streaming(n_bound: u64, k: u32, block: u64) -> Result<Count> {
    let end = require_bound(n_bound, "tau_moment_streaming")?;
    if k == 0 {
        return Err(Error::invalid("tau_moment: k must be positive"));
    }
    let partials = blocks(end, block)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut buf = vec![0u32; (hi - lo + 1) as usize];
            fill_tau_block(n_bound, lo, &mut buf);
            buf.iter().try_fold(0u128, |acc, &t| {
                u128::from(t)
                    .checked_pow(k)
                    .and_then(|p| acc.checked_add(p))
                    .ok_or(Error::Overflow("tau moment"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    partials.into_iter().try_fold(0u128, |acc, x| {
        acc.checked_add(x).ok_or(Error::Overflow("tau moment"))
    })
}

/// Streaming variant of [`shifted_sum`].
pub fn shifted_sum_streaming(n_bound: u64, delta: u64, block: u64) -> Result<Count> {
    let end = require_bound(n_bound, "shifted_sum_streaming")?;
    if delta == 0 {
        return Err(Error::invalid("shifted_sum: delta must be positive"));
    }
    if delta >= end {
        return Ok(0);
    }
    let last = end - delta;
    let partials: Vec<u128> = blocks(last, block)
        .into_par_iter()
        .map(|(lo, hi)| {
            let len = (hi - lo + 1) as usize;
            let mut left = vec![0u32; len];
            let mut right = vec![0u32; len];
            fill_tau_block(n_bound, lo, &mut left);
            fill_tau_block(n_bound, lo + delta, &mut right);
            left.iter()
                .zip(&right)
                .map(|(&x, &y)| u128::from(u64::from(x) * u64::from(y)))
                .sum()
        })
        .collect();
    Ok(partials.into_iter().sum())
}

/// `m ↦ #{(x, y) : |x|, |y| <= H, xy = m}` over the full signed box.
///
/// Closed form: `4H + 1` at `m = 0`, `2·τ_H(|m|)` otherwise (one factor pair
/// per sign pattern compatible with the sign of `m`).
#[derive(Debug, Clone)]
pub struct ProductCount {
    table: TauTable,
}

impl ProductCount {
    pub fn height(&self) -> u64 {
        self.table.bound()
    }

    pub fn table(&self) -> &TauTable {
        &self.table
    }

    /// `c₂(m)`.
    #[inline]
    pub fn get(&self, m: i64) -> Count {
        if m == 0 {
            Count::from(4 * self.height() + 1)
        } else {
            2 * Count::from(self.table.get(m.unsigned_abs()))
        }
    }
}

impl From<TauTable> for ProductCount {
    fn from(table: TauTable) -> Self {
        ProductCount { table }
    }
}

/// Product counter for the box `[-H, H]²`, backed by a τ_H table.
pub fn product_count(height: u64, budget: &Budget) -> Result<ProductCount> {
    Ok(ProductCount {
        table: build_tau_table(height, budget)?,
    })
}
