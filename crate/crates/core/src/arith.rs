//! Elementary multiplicative number theory.
//!
//! Pointwise arithmetic functions (`tau`, `sigma`, `phi`, `mobius`) work by
//! trial division and are meant for single values or for cross-checking the
//! sieved [`MultiplicativeTables`].

use num_integer::Integer;

use crate::error::{Error, Result};
use crate::Budget;

/// Greatest common divisor with the sign-absolute convention, `gcd(0, 0) = 0`.
pub fn gcd(x: i64, y: i64) -> i64 {
    // i64::MIN has no positive counterpart; widen.
    let g = (x as i128).gcd(&(y as i128));
    i64::try_from(g).expect("gcd of two i64 values other than (MIN, MIN|0) fits in i64")
}

/// `gcd` on unsigned values, used in hot loops.
#[inline]
pub fn gcd_u64(x: u64, y: u64) -> u64 {
    x.gcd(&y)
}

/// Returns `1` if `q` divides `k` (zero is divisible by everything), else `0`.
pub fn delta_div(q: u64, k: i64) -> Result<u8> {
    if q == 0 {
        return Err(Error::invalid("delta_div: q must be positive"));
    }
    Ok(u8::from(k.unsigned_abs().is_multiple_of(q)))
}

fn require_positive(n: i64, op: &str) -> Result<u64> {
    if n <= 0 {
        Err(Error::invalid(format!(
            "{op}: argument must be positive, got {n}"
        )))
    } else {
        Ok(n as u64)
    }
}

/// Positive divisors of `n` in ascending order.
pub fn divisors(n: i64) -> Result<Vec<u64>> {
    let n = require_positive(n, "divisors")?;
    Ok(divisors_u64(n))
}

pub(crate) fn divisors_u64(n: u64) -> Vec<u64> {
    debug_assert!(n > 0);
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            small.push(d);
            if d != n / d {
                large.push(n / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

/// Prime factorisation as `(p, e)` pairs, ascending in `p`.
pub(crate) fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Number of positive divisors.
pub fn tau(n: i64) -> Result<u64> {
    let n = require_positive(n, "tau")?;
    Ok(factorize(n)
        .iter()
        .map(|&(_, e)| u64::from(e) + 1)
        .product())
}

/// Sum of positive divisors.
pub fn sigma(n: i64) -> Result<u128> {
    let n = require_positive(n, "sigma")?;
    Ok(sigma_u64(n))
}

pub(crate) fn sigma_u64(n: u64) -> u128 {
    factorize(n)
        .iter()
        .map(|&(p, e)| {
            let p = u128::from(p);
            // 1 + p + ... + p^e
            (0..=e).fold(0u128, |acc, _| acc * p + 1)
        })
        .product()
}

/// Euler's totient.
pub fn phi(n: i64) -> Result<u64> {
    let n = require_positive(n, "phi")?;
    Ok(phi_u64(n))
}

pub(crate) fn phi_u64(n: u64) -> u64 {
    factorize(n)
        .iter()
        .fold(n, |acc, &(p, _)| acc / p * (p - 1))
}

/// Möbius function.
pub fn mobius(n: i64) -> Result<i8> {
    let n = require_positive(n, "mobius")?;
    Ok(mobius_u64(n))
}

pub(crate) fn mobius_u64(n: u64) -> i8 {
    let f = factorize(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Sieved values of τ, σ, φ and μ on `1..=limit`.
///
/// Index `n` of each table holds the value at `n`; index 0 is unused and
/// holds zero.
#[derive(Debug, Clone)]
pub struct MultiplicativeTables {
    limit: usize,
    tau: Vec<u32>,
    sigma: Vec<u64>,
    phi: Vec<u64>,
    mu: Vec<i8>,
}

impl MultiplicativeTables {
    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn tau(&self, n: usize) -> u32 {
        self.tau[n]
    }

    pub fn sigma(&self, n: usize) -> u64 {
        self.sigma[n]
    }

    pub fn phi(&self, n: usize) -> u64 {
        self.phi[n]
    }

    pub fn mu(&self, n: usize) -> i8 {
        self.mu[n]
    }

    /// The τ table; `tau_table()[n] = τ(n)` for `1 <= n <= limit`.
    pub fn tau_table(&self) -> &[u32] {
        &self.tau
    }

    pub fn sigma_table(&self) -> &[u64] {
        &self.sigma
    }

    pub fn phi_table(&self) -> &[u64] {
        &self.phi
    }

    pub fn mu_table(&self) -> &[i8] {
        &self.mu
    }
}

/// Linear sieve for τ, σ, φ, μ up to `limit`.
///
/// Each composite is visited once through its smallest prime factor; the
/// prime-power part of `n` is split off so every function is assembled
/// multiplicatively.
pub fn sieve(limit: i64, budget: &Budget) -> Result<MultiplicativeTables> {
    let limit = require_positive(limit, "sieve")? as usize;
    // four value tables plus two scratch tables
    budget.check("multiplicative sieve", 6 * limit as u128)?;

    let len = limit + 1;
    let mut tau = vec![0u32; len];
    let mut sigma = vec![0u64; len];
    let mut phi = vec![0u64; len];
    let mut mu = vec![0i8; len];
    // smallest-prime-power part of n, and n with that part removed
    let mut pp = vec![0u64; len];
    let mut rest = vec![0u64; len];
    let mut spf = vec![0u32; len];
    let mut primes: Vec<u32> = Vec::new();

    tau[1] = 1;
    sigma[1] = 1;
    phi[1] = 1;
    mu[1] = 1;

    for n in 2..len {
        if spf[n] == 0 {
            spf[n] = n as u32;
            primes.push(n as u32);
        }
        let p = spf[n] as usize;
        for &q in &primes {
            let q = q as usize;
            if q > p || n * q > limit {
                break;
            }
            spf[n * q] = q as u32;
        }

        let m = n / p;
        if m.is_multiple_of(p) {
            pp[n] = pp[m] * p as u64;
            rest[n] = rest[m];
        } else {
            pp[n] = p as u64;
            rest[n] = m as u64;
        }

        if rest[n] == 1 {
            // n = p^k
            let p64 = p as u64;
            tau[n] = tau[m] + 1;
            sigma[n] = sigma[m] * p64 + 1;
            phi[n] = if m == 1 { p64 - 1 } else { phi[m] * p64 };
            mu[n] = if m == 1 { -1 } else { 0 };
        } else {
            let a = pp[n] as usize;
            let b = rest[n] as usize;
            tau[n] = tau[a] * tau[b];
            sigma[n] = sigma[a] * sigma[b];
            phi[n] = phi[a] * phi[b];
            mu[n] = mu[a] * mu[b];
        }
    }

    Ok(MultiplicativeTables {
        limit,
        tau,
        sigma,
        phi,
        mu,
    })
}

/// Inverse of `a` modulo `m`, if `gcd(a, m) = 1`.
pub(crate) fn inverse_mod(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let e = (a as i128).extended_gcd(&(m as i128));
    if e.gcd != 1 {
        return None;
    }
    Some(e.x.rem_euclid(m as i128) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_divisors(n: u64) -> Vec<u64> {
        (1..=n).filter(|d| n.is_multiple_of(*d)).collect()
    }

    #[test]
    fn gcd_examples() {
        assert_eq!(gcd(0, 5), 5);
        assert_eq!(gcd(12, 18), 6);
        assert_eq!(gcd(-4, 6), 2);
        assert_eq!(gcd(0, 0), 0);
        assert_eq!(gcd(i64::MIN, 6), 2);
    }

    #[test]
    fn divisor_examples() {
        assert_eq!(divisors(1).unwrap(), vec![1]);
        assert_eq!(divisors(12).unwrap(), vec![1, 2, 3, 4, 6, 12]);
        assert_eq!(divisors(49).unwrap(), vec![1, 7, 49]);
        assert!(divisors(0).is_err());
        assert!(divisors(-3).is_err());
        for n in 1..500u64 {
            assert_eq!(divisors_u64(n), trial_divisors(n));
        }
    }

    #[test]
    fn pointwise_examples() {
        assert_eq!(tau(6).unwrap(), 4);
        assert_eq!(sigma(6).unwrap(), 12);
        assert_eq!(phi(1).unwrap(), 1);
        assert_eq!(mobius(1).unwrap(), 1);
        assert_eq!(mobius(12).unwrap(), 0);
        assert!(tau(0).is_err() && sigma(-1).is_err() && phi(0).is_err() && mobius(0).is_err());
    }

    #[test]
    fn delta_div_examples() {
        assert_eq!(delta_div(5, 0).unwrap(), 1);
        assert_eq!(delta_div(5, 7).unwrap(), 0);
        assert_eq!(delta_div(7, 21).unwrap(), 1);
        assert_eq!(delta_div(7, -21).unwrap(), 1);
        assert!(delta_div(0, 1).is_err());
    }

    #[test]
    fn classical_identities_up_to_ten_thousand() {
        for n in 1..=10_000u64 {
            let ds = divisors_u64(n);
            assert_eq!(ds.iter().map(|&d| phi_u64(d)).sum::<u64>(), n);
            let mu_sum: i64 = ds.iter().map(|&d| i64::from(mobius_u64(d))).sum();
            assert_eq!(mu_sum, i64::from(n == 1));
            assert_eq!(
                sigma_u64(n),
                ds.iter().map(|&d| u128::from(d)).sum::<u128>()
            );
            assert_eq!(tau(n as i64).unwrap(), ds.len() as u64);
        }
    }

    #[test]
    fn sieve_small_tables() {
        let t = sieve(10, &Budget::default()).unwrap();
        assert_eq!(&t.phi_table()[1..], &[1, 1, 2, 2, 4, 2, 6, 4, 6, 4]);
        let one = sieve(1, &Budget::default()).unwrap();
        assert_eq!(one.limit(), 1);
        assert_eq!(
            (one.tau(1), one.sigma(1), one.phi(1), one.mu(1)),
            (1, 1, 1, 1)
        );
    }

    #[test]
    fn sieve_primes() {
        let t = sieve(2000, &Budget::default()).unwrap();
        for p in [2u64, 3, 5, 7, 97, 997, 1999] {
            let i = p as usize;
            assert_eq!(t.tau(i), 2);
            assert_eq!(t.sigma(i), p + 1);
            assert_eq!(t.phi(i), p - 1);
            assert_eq!(t.mu(i), -1);
        }
    }

    #[test]
    fn sieve_rejects_budget_and_nonpositive() {
        let tiny = Budget {
            max_cells: 100,
            ..Budget::default()
        };
        assert!(matches!(sieve(1000, &tiny), Err(Error::Budget { .. })));
        assert!(sieve(0, &Budget::default()).is_err());
    }

    #[test]
    fn phi_over_square_matches_mertens_constant() {
        // Σ φ(n)/n² = (6/π²)(ln X + γ − ζ'(2)/ζ(2)) + O(log X / X)
        let x = 1_000_000usize;
        let t = sieve(x as i64, &Budget::default()).unwrap();
        let s: f64 = (1..=x)
            .map(|n| t.phi(n) as f64 / (n as f64 * n as f64))
            .sum();
        let euler_gamma = 0.577_215_664_901_532_9;
        let log_deriv_zeta2 = -0.569_960_993_094_532_9;
        let expected =
            6.0 / std::f64::consts::PI.powi(2) * ((x as f64).ln() + euler_gamma - log_deriv_zeta2);
        assert!((s - expected).abs() < 0.01, "{s} vs {expected}");
    }

    #[test]
    fn inverse_mod_works() {
        assert_eq!(inverse_mod(3, 7), Some(5));
        assert_eq!(inverse_mod(2, 4), None);
        assert_eq!(inverse_mod(5, 1), Some(0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn gcd_divides_and_is_symmetric(x in -100_000i64..100_000, y in -100_000i64..100_000) {
                let g = gcd(x, y);
                prop_assert_eq!(g, gcd(y, x));
                prop_assert!(g >= 0);
                if g != 0 {
                    prop_assert_eq!(x % g, 0);
                    prop_assert_eq!(y % g, 0);
                }
            }

            #[test]
            fn gcd_fold_associative(x in -5000i64..5000, y in -5000i64..5000, z in -5000i64..5000) {
                prop_assert_eq!(gcd(gcd(x, y), z), gcd(x, gcd(y, z)));
            }
        }

        #[test]
        fn sieve_agrees_with_pointwise_on_random_indices() {
            use rand::{Rng, SeedableRng};
            let limit = 200_000usize;
            let t = sieve(limit as i64, &Budget::default()).unwrap();
            let mut rng = rand::rngs::StdRng::seed_from_u64(17);
            for _ in 0..1000 {
                let n = rng.gen_range(1..=limit);
                let n64 = n as i64;
                assert_eq!(u64::from(t.tau(n)), tau(n64).unwrap());
                assert_eq!(u128::from(t.sigma(n)), sigma(n64).unwrap());
                assert_eq!(t.phi(n), phi(n64).unwrap());
                assert_eq!(t.mu(n), mobius(n64).unwrap());
            }
        }
    }
}
