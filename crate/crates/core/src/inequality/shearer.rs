//! Shearer's inequality and its refinements for `h(A) = −Ent(f_A)`.
//!
//! Functions here take the table of marginal entropies `E[A] = Ent(f_A)`,
//! indexed by subset bitmask (see [`crate::entropy::subset_entropies`]).

use num_bigint::BigInt;
pub use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::space::SiteSubset;
use crate::{Error, Result};

pub const SHEARER_MAX_N: usize = 40;

/// Coefficients with `φ_k ≥ c(k,n) φ_n + d(k,n) φ_1`, where `φ_k` sums a
/// submodular `h` over the k-subsets.
#[derive(Clone, Debug, PartialEq)]
pub struct ShearerCoefficients {
    pub n: usize,
    /// `c[k−1] = c(k,n)`.
    pub c: Vec<BigRational>,
    /// `d[k−1] = d(k,n)`.
    pub d: Vec<BigRational>,
}

fn rat(x: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

/// The exact fraction `a/b`.
pub fn frac(a: u64, b: u64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

/// Exact binomial coefficient.
pub fn binomial_exact(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for j in 0..k {
        acc = acc * BigInt::from(n - j) / BigInt::from(j + 1);
    }
    acc
}

/// `c(1)=0, d(1)=1`; `c(k) = C(n,k−1)/k + (n−k)/k·c(k−1)` and
/// `d(k) = (n−k)/k·d(k−1)` for `2 ≤ k ≤ n−1`; `c(n)=1, d(n)=0`.
pub fn shearer_coefficients(n: usize) -> Result<ShearerCoefficients> {
    if !(2..=SHEARER_MAX_N).contains(&n) {
        return Err(Error::OutOfRange(format!("Shearer coefficients need 2 ≤ n ≤ {SHEARER_MAX_N}, got {n}")));
    }
    let nn = n as u64;
    let mut c = vec![BigRational::zero(); n];
    let mut d = vec![BigRational::zero(); n];
    d[0] = BigRational::one();
    for k in 2..n as u64 {
        let i = (k - 1) as usize;
        let ratio = frac(nn - k, k);
        c[i] = BigRational::from_integer(binomial_exact(nn, k - 1)) / rat(k) + &ratio * &c[i - 1];
        d[i] = &ratio * &d[i - 1];
    }
    c[n - 1] = BigRational::one();
    d[n - 1] = BigRational::zero();
    Ok(ShearerCoefficients { n, c, d })
}

impl ShearerCoefficients {
    pub fn c(&self, k: usize) -> &BigRational {
        &self.c[k - 1]
    }

    pub fn d(&self, k: usize) -> &BigRational {
        &self.d[k - 1]
    }

    pub fn sum_c(&self) -> BigRational {
        self.c.iter().fold(BigRational::zero(), |a, b| a + b)
    }

    pub fn sum_d(&self) -> BigRational {
        self.d.iter().fold(BigRational::zero(), |a, b| a + b)
    }

    /// `Σ_k γᵏ c(k,n)`.
    pub fn weighted_sum_c(&self, gamma: &BigRational) -> BigRational {
        weighted(&self.c, gamma)
    }

    /// `Σ_k γᵏ d(k,n)`.
    pub fn weighted_sum_d(&self, gamma: &BigRational) -> BigRational {
        weighted(&self.d, gamma)
    }

    /// `((n−2)2^{n−1} + 1)/(n−1)`.
    pub fn expected_sum_c(&self) -> BigRational {
        let n = self.n as u64;
        let p = BigInt::one() << (self.n - 1);
        BigRational::new(BigInt::from(n - 2) * p + 1, BigInt::from(n - 1))
    }

    /// `(2^{n−1} − 1)/(n−1)`.
    pub fn expected_sum_d(&self) -> BigRational {
        let p = BigInt::one() << (self.n - 1);
        BigRational::new(p - 1, BigInt::from(self.n as u64 - 1))
    }

    /// `((1+γ)^{n−1}[γ(n−1) − 1] + 1)/(n−1)`.
    pub fn expected_weighted_sum_c(&self, gamma: &BigRational) -> BigRational {
        let m = rat(self.n as u64 - 1);
        let pow = pow_rat(&(BigRational::one() + gamma), self.n - 1);
        (pow * (gamma * &m - BigRational::one()) + BigRational::one()) / m
    }

    /// `((1+γ)^{n−1} − 1)/(n−1)`.
    pub fn expected_weighted_sum_d(&self, gamma: &BigRational) -> BigRational {
        let m = rat(self.n as u64 - 1);
        (pow_rat(&(BigRational::one() + gamma), self.n - 1) - BigRational::one()) / m
    }
}

fn pow_rat(x: &BigRational, e: usize) -> BigRational {
    (0..e).fold(BigRational::one(), |acc, _| acc * x)
}

fn weighted(v: &[BigRational], gamma: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    let mut g = BigRational::one();
    for x in v {
        g = &g * gamma;
        acc += &g * x;
    }
    acc
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// The κ obtained for uniform crossover from plain Shearer bounds on the
/// k-set covers: `2^{−n+1}`.
pub fn naive_shearer_kappa(n: usize) -> f64 {
    0.5f64.powi(n as i32 - 1)
}

/// Closed form of `Σ_k γᵏ c(k,n)` in floating point.
pub fn weighted_c_closed_form(gamma: f64, n: usize) -> f64 {
    let m = (n - 1) as f64;
    ((1.0 + gamma).powi(n as i32 - 1) * (gamma * m - 1.0) + 1.0) / m
}

/// `(1−q)ⁿ Σγᵏc(k,n) + qⁿ Σγ⁻ᵏc(k,n)` with `γ = q/(1−q)`, for `0 < q < 1`.
pub fn bernoulli_shearer_factor(q: f64, n: usize) -> f64 {
    let gamma = q / (1.0 - q);
    (1.0 - q).powi(n as i32) * weighted_c_closed_form(gamma, n) + q.powi(n as i32) * weighted_c_closed_form(1.0 / gamma, n)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubmodularReport {
    /// `min h(A)+h(B)−h(A∩B)−h(A∪B)` over the scanned pairs.
    pub min_slack: f64,
    /// A pair attaining the minimum (bitmasks).
    pub witness: (u64, u64),
}

fn check_table(entropies: &[f64], n: usize) {
    assert_eq!(entropies.len(), 1 << n, "entropy table must have 2^n entries");
}

/// Submodularity of `h(A) = −E[A]` over all pairs of subsets.
pub fn check_submodular(entropies: &[f64], n: usize) -> SubmodularReport {
    check_table(entropies, n);
    let mut best = SubmodularReport { min_slack: f64::INFINITY, witness: (0, 0) };
    let m = 1u64 << n;
    for a in 0..m {
        for b in a..m {
            let slack = -entropies[a as usize] - entropies[b as usize]
                + entropies[(a & b) as usize]
                + entropies[(a | b) as usize];
            if slack < best.min_slack {
                best = SubmodularReport { min_slack: slack, witness: (a, b) };
            }
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShearerBound {
    /// `Σ_{A∈𝒜} Ent(f_A)`.
    pub lhs: f64,
    /// `n₊(𝒜) Ent(f)`.
    pub rhs: f64,
    pub n_plus: usize,
    pub n_minus: usize,
    /// `rhs − lhs`.
    pub slack: f64,
}

/// `Σ_{A∈𝒜} Ent(f_A) ≤ n₊(𝒜) Ent(f)`, where `n₊` (`n₋`) is the largest
/// (smallest) number of members of the family containing a given site.
pub fn shearer_bound(entropies: &[f64], n: usize, cover: &[SiteSubset]) -> ShearerBound {
    check_table(entropies, n);
    let degree = |i: usize| cover.iter().filter(|a| a.contains(i)).count();
    let n_plus = (0..n).map(degree).max().unwrap_or(0);
    let n_minus = (0..n).map(degree).min().unwrap_or(0);
    let lhs: f64 = cover.iter().map(|a| entropies[a.bits() as usize]).sum();
    let rhs = n_plus as f64 * entropies[(1usize << n) - 1];
    ShearerBound { lhs, rhs, n_plus, n_minus, slack: rhs - lhs }
}

/// Slack of `Σ_A h(A) ≥ Σc·h([n]) + Σd·Σᵢh({i})` for `h = −E`.
pub fn improved_shearer_check(entropies: &[f64], n: usize) -> Result<f64> {
    let coef = shearer_coefficients(n)?;
    let sc = to_f64(&coef.expected_sum_c());
    let sd = to_f64(&coef.expected_sum_d());
    Ok(weighted_slack(entropies, n, 1.0, sc, sd))
}

/// Slack of `Σ_A γ^{|A|} h(A) ≥ Σγᵏc·h([n]) + Σγᵏd·Σᵢh({i})` for `h = −E`.
/// The coefficient sums are evaluated exactly for rational `γ`.
pub fn weighted_shearer_check(entropies: &[f64], n: usize, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::OutOfRange(format!("weight γ = {gamma} must be positive")));
    }
    let coef = shearer_coefficients(n)?;
    let g = BigRational::from_float(gamma).expect("finite");
    let sc = to_f64(&coef.weighted_sum_c(&g));
    let sd = to_f64(&coef.weighted_sum_d(&g));
    Ok(weighted_slack(entropies, n, gamma, sc, sd))
}

fn weighted_slack(entropies: &[f64], n: usize, gamma: f64, sc: f64, sd: f64) -> f64 {
    check_table(entropies, n);
    let h = |mask: usize| -entropies[mask];
    let lhs: f64 = (0..1usize << n).map(|a| gamma.powi(a.count_ones() as i32) * h(a)).sum();
    let singles: f64 = (0..n).map(|i| h(1 << i)).sum();
    lhs - (sc * h((1 << n) - 1) + sd * singles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_n_values() {
        let c3 = shearer_coefficients(3).unwrap();
        assert_eq!(c3.d, vec![rat(1), frac(1, 2), rat(0)]);
        assert_eq!(c3.sum_c(), frac(5, 2));
        assert_eq!(c3.c, vec![rat(0), frac(3, 2), rat(1)]);
        let c2 = shearer_coefficients(2).unwrap();
        assert_eq!(c2.c, vec![rat(0), rat(1)]);
        assert_eq!(c2.d, vec![rat(1), rat(0)]);
        assert!(shearer_coefficients(1).is_err());
        assert!(shearer_coefficients(41).is_err());
    }

    #[test]
    fn identities_exact_up_to_forty() {
        for n in 2..=SHEARER_MAX_N {
            let coef = shearer_coefficients(n).unwrap();
            let nn = n as u64;
            assert_eq!(coef.sum_c(), coef.expected_sum_c(), "n={n}");
            assert_eq!(coef.sum_d(), coef.expected_sum_d(), "n={n}");
            assert_eq!(coef.c(1), &rat(0));
            assert_eq!(coef.c(n), &rat(1));
            assert_eq!(coef.d(1), &rat(1));
            assert_eq!(coef.d(n), &rat(0));
            if n >= 3 {
                assert_eq!(coef.c(n - 1), &(rat(nn) - frac(nn, nn - 1)));
            }
            for k in 1..=n {
                // h(A) = 1(A ≠ ∅) makes every step an identity
                let lhs = coef.c(k) + rat(nn) * coef.d(k);
                assert_eq!(lhs, BigRational::from_integer(binomial_exact(nn, k as u64)), "n={n} k={k}");
                if k < n {
                    // d(k,n) = (n−2)!/(k!(n−k−1)!) = C(n−1,k)/(n−1)
                    let closed = BigRational::new(binomial_exact(nn - 1, k as u64), BigInt::from(nn - 1));
                    assert_eq!(coef.d(k), &closed);
                }
            }
        }
    }

    #[test]
    fn weighted_identities_exact() {
        let gammas = [frac(1, 3), frac(1, 1), frac(2, 1), frac(3, 7), frac(9, 1)];
        for n in 2..=SHEARER_MAX_N {
            let coef = shearer_coefficients(n).unwrap();
            for g in &gammas {
                assert_eq!(coef.weighted_sum_c(g), coef.expected_weighted_sum_c(g), "n={n}");
                assert_eq!(coef.weighted_sum_d(g), coef.expected_weighted_sum_d(g), "n={n}");
            }
            assert_eq!(coef.weighted_sum_c(&rat(1)), coef.sum_c());
        }
    }

    #[test]
    fn bernoulli_factor_closed_form() {
        for n in 2..=40 {
            for q in [0.01f64, 0.1, 0.25, 0.4, 0.5] {
                let expect = 1.0 - (1.0 - q.powi(n as i32) - (1.0 - q).powi(n as i32)) / (n - 1) as f64;
                assert!((bernoulli_shearer_factor(q, n) - expect).abs() < 1e-12, "n={n} q={q}");
            }
        }
    }

    #[test]
    fn naive_kappa_is_dominated() {
        for n in 3..=40 {
            let improved = (1.0 - 0.5f64.powi(n as i32 - 1)) / (n - 1) as f64;
            assert!(naive_shearer_kappa(n) < improved);
        }
        let n = 2;
        assert_eq!(naive_shearer_kappa(n), (1.0 - 0.5f64.powi(n as i32 - 1)) / (n - 1) as f64);
    }

    #[test]
    fn additive_tables_are_modular() {
        // E[A] = Σ_{i∈A} eᵢ: submodularity holds with equality
        let e = [0.3, 1.1, 0.0, 2.5];
        let table: Vec<f64> = (0..16usize).map(|a| (0..4).filter(|i| a >> i & 1 == 1).map(|i| e[i]).sum()).collect();
        let r = check_submodular(&table, 4);
        assert!(r.min_slack.abs() < 1e-14);
    }
}
