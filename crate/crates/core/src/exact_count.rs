//! Ground-truth counts of `D_n(H, Δ)`, the integer `n×n` matrices with all
//! entries in `[-H, H]` and determinant `Δ`.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::divisor_tables::{product_count, ProductCount};
use crate::error::{Error, Result};
use crate::{Budget, Count};

fn require_height(h: u64) -> Result<i64> {
    if h == 0 {
        return Err(Error::invalid("height H must be positive"));
    }
    i64::try_from(h)
        .ok()
        .filter(|&h| h <= 3_000_000_000)
        .ok_or_else(|| Error::invalid(format!("height {h} out of range")))
}

/// Full enumeration of `D_n(H, Δ)` for `n ∈ {2, 3}`.
///
/// The `n = 3` case only exists to exhibit the shape of the general count at
/// toy sizes; there is no fast path for it.
pub fn naive_count(h: u64, delta: i64, n: usize, budget: &Budget) -> Result<Count> {
    let hh = require_height(h)?;
    if !(2..=3).contains(&n) {
        return Err(Error::invalid(format!(
            "naive_count supports n = 2 or 3, got {n}"
        )));
    }
    let side = u128::from(2 * h + 1);
    let visits = side
        .checked_pow((n * n) as u32)
        .ok_or(Error::Overflow("enumeration size"))?;
    budget.check_enumeration("naive enumeration", visits)?;
    let delta = i128::from(delta);
    let count = match n {
        2 => (-hh..=hh)
            .into_par_iter()
            .map(|a| {
                let mut local: Count = 0;
                for b in -hh..=hh {
                    for c in -hh..=hh {
                        for d in -hh..=hh {
                            if i128::from(a * d - b * c) == delta {
                                local += 1;
                            }
                        }
                    }
                }
                local
            })
            .sum(),
        _ => naive_count_3(hh, delta),
    };
    Ok(count)
}

fn naive_count_3(h: i64, delta: i128) -> Count {
    let values: Vec<i64> = (-h..=h).collect();
    let side = values.len();
    let rows: Vec<[i64; 3]> = (0..side * side * side)
        .map(|i| {
            [
                values[i % side],
                values[i / side % side],
                values[i / (side * side)],
            ]
        })
        .collect();
    rows.par_iter()
        .map(|r0| {
            let mut local: Count = 0;
            for r1 in &rows {
                // cofactors of the third row
                let c0 = r0[1] * r1[2] - r0[2] * r1[1];
                let c1 = r0[2] * r1[0] - r0[0] * r1[2];
                let c2 = r0[0] * r1[1] - r0[1] * r1[0];
                for r2 in &rows {
                    if i128::from(c0 * r2[0] + c1 * r2[1] + c2 * r2[2]) == delta {
                        local += 1;
                    }
                }
            }
            local
        })
        .sum()
}

/// `#D₂(H, Δ)` as the convolution `Σ_m c₂(m) c₂(m − Δ)`, with `ad = m` and
/// `bc = m − Δ`.
pub fn fast_count(h: u64, delta: i64, budget: &Budget) -> Result<Count> {
    require_height(h)?;
    if exceeds_range(h, delta) {
        return Ok(0);
    }
    let pc = product_count(h, budget)?;
    Ok(fast_count_with(&pc, delta))
}

fn exceeds_range(h: u64, delta: i64) -> bool {
    u128::from(delta.unsigned_abs()) > 2 * u128::from(h) * u128::from(h)
}

/// [`fast_count`] reusing a prebuilt product counter.
pub fn fast_count_with(pc: &ProductCount, delta: i64) -> Count {
    let h = pc.height();
    if exceeds_range(h, delta) {
        return 0;
    }
    let sq = (h * h) as i64;
    let lo = (-sq).max(delta - sq);
    let hi = sq.min(delta + sq);
    const CHUNK: i64 = 1 << 18;
    let starts: Vec<i64> = (0..)
        .map(|i| lo + i * CHUNK)
        .take_while(|&s| s <= hi)
        .collect();
    starts
        .into_par_iter()
        .map(|s| {
            let e = (s + CHUNK - 1).min(hi);
            (s..=e)
                .map(|m| pc.get(m) * pc.get(m - delta))
                .sum::<Count>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

/// Prescribed signs of `(a, c, d)`; `b` may have either sign but is nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SignClass {
    alpha: i8,
    gamma: i8,
    delta_prime: i8,
}

impl SignClass {
    pub const PPP: SignClass = SignClass {
        alpha: 1,
        gamma: 1,
        delta_prime: 1,
    };
    pub const PPN: SignClass = SignClass {
        alpha: 1,
        gamma: 1,
        delta_prime: -1,
    };

    pub fn new(alpha: i8, gamma: i8, delta_prime: i8) -> Result<Self> {
        if [alpha, gamma, delta_prime]
            .iter()
            .all(|s| *s == 1 || *s == -1)
        {
            Ok(SignClass {
                alpha,
                gamma,
                delta_prime,
            })
        } else {
            Err(Error::invalid("sign class entries must be ±1"))
        }
    }

    /// All eight classes, `(α, γ, δ')` in lexicographic order from `(-1,-1,-1)`.
    pub fn all() -> [SignClass; 8] {
        let s = [-1i8, 1];
        let mut out = [SignClass::PPP; 8];
        let mut i = 0;
        for &alpha in &s {
            for &gamma in &s {
                for &delta_prime in &s {
                    out[i] = SignClass {
                        alpha,
                        gamma,
                        delta_prime,
                    };
                    i += 1;
                }
            }
        }
        out
    }

    pub fn alpha(&self) -> i8 {
        self.alpha
    }

    pub fn gamma(&self) -> i8 {
        self.gamma
    }

    pub fn delta_prime(&self) -> i8 {
        self.delta_prime
    }

    /// Whether `sgn d = sgn a`, i.e. the class is equinumerous with `(1,1,1)`.
    pub fn is_aligned(&self) -> bool {
        self.alpha == self.delta_prime
    }
}

impl fmt::Display for SignClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.alpha, self.gamma, self.delta_prime)
    }
}

/// Matrices in `D₂(H, Δ)` with all entries nonzero and the signs of `a, c, d`
/// fixed by `class`. `b` is solved from `b = (ad − Δ)/c`.
pub fn sign_class_count(h: u64, delta: i64, class: SignClass) -> Result<Count> {
    let hh = require_height(h)?;
    let delta = i128::from(delta);
    let (sa, sc, sd) = (
        i128::from(class.alpha),
        i128::from(class.gamma),
        i128::from(class.delta_prime),
    );
    let hw = i128::from(hh);
    Ok((1..=hh)
        .into_par_iter()
        .map(|ua| {
            let a = sa * i128::from(ua);
            let mut local: Count = 0;
            for uc in 1..=hw {
                let c = sc * uc;
                for ud in 1..=hw {
                    let num = a * (sd * ud) - delta;
                    if num % c == 0 {
                        let b = num / c;
                        if b != 0 && b.abs() <= hw {
                            local += 1;
                        }
                    }
                }
            }
            local
        })
        .sum())
}

/// Matrices in `D₂(H, Δ)` with at least one zero entry.
///
/// Enumerates `(a, b, c)`; for `a ≠ 0` the entry `d` is forced, for `a = 0`
/// every `d` works once `-bc = Δ`.
pub fn zero_entry_count(h: u64, delta: i64) -> Result<Count> {
    let hh = require_height(h)?;
    let delta = i128::from(delta);
    let hw = i128::from(hh);
    let free_d = Count::from(2 * h + 1);
    Ok((-hh..=hh)
        .into_par_iter()
        .map(|a| {
            let a = i128::from(a);
            let mut local: Count = 0;
            for b in -hw..=hw {
                for c in -hw..=hw {
                    let rhs = delta + b * c;
                    if a == 0 {
                        if rhs == 0 {
                            local += free_d;
                        }
                    } else if rhs % a == 0 {
                        let d = rhs / a;
                        if d.abs() <= hw && (b == 0 || c == 0 || d == 0) {
                            local += 1;
                        }
                    }
                }
            }
            local
        })
        .sum())
}

/// Outcome of splitting `D₂(H, Δ)` into sign classes plus zero-entry matrices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub height: u64,
    pub delta: i64,
    pub total: Count,
    /// Counts in the order of [`SignClass::all`].
    pub per_class: [Count; 8],
    pub zero_entry: Count,
    pub assembly_ok: bool,
    /// Human-readable description of every identity that failed.
    pub failures: Vec<String>,
}

impl DecompositionReport {
    pub fn class_count(&self, class: SignClass) -> Count {
        let i = SignClass::all()
            .iter()
            .position(|c| *c == class)
            .expect("every class is listed");
        self.per_class[i]
    }
}

/// Computes every part of the decomposition and checks
/// `total = Σ classes + zero_entry = 4(#(1,1,1) + #(1,1,−1)) + zero_entry`
/// together with the eight class equalities.
pub fn decompose(h: u64, delta: i64, budget: &Budget) -> Result<DecompositionReport> {
    let total = fast_count(h, delta, budget)?;
    let classes = SignClass::all();
    let mut per_class = [0; 8];
    for (slot, class) in per_class.iter_mut().zip(classes) {
        *slot = sign_class_count(h, delta, class)?;
    }
    let zero_entry = zero_entry_count(h, delta)?;

    let mut failures = Vec::new();
    let ppp = per_class[classes.iter().position(|c| *c == SignClass::PPP).unwrap()];
    let ppn = per_class[classes.iter().position(|c| *c == SignClass::PPN).unwrap()];
    for (class, &n) in classes.iter().zip(&per_class) {
        let reference = if class.is_aligned() { ppp } else { ppn };
        if n != reference {
            failures.push(format!(
                "class {class} has {n} matrices, expected {reference}"
            ));
        }
    }
    let class_sum: Count = per_class.iter().sum();
    if total != class_sum + zero_entry {
        failures.push(format!(
            "total {total} != class sum {class_sum} + zero-entry {zero_entry}"
        ));
    }
    let assembled = 4 * (ppp + ppn) + zero_entry;
    if total != assembled {
        failures.push(format!(
            "total {total} != 4·({ppp} + {ppn}) + {zero_entry} = {assembled}"
        ));
    }
    Ok(DecompositionReport {
        height: h,
        delta,
        total,
        per_class,
        zero_entry,
        assembly_ok: failures.is_empty(),
        failures,
    })
}
