//! Hamming weight of a sum of `n` uniform `t`-subsets of `[m]` over 𝔽₂, and
//! its distance to the uniform law on the matching parity class.
//!
//! Both laws on 𝔽₂ᵐ are invariant under coordinate permutations, hence
//! uniform within each weight class, so their total variation equals the
//! total variation of the weight marginals. `vector_law` and
//! `vector_tv_to_parity_class` check this by brute force for small `m`.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, binomial_big, combinations};
use crate::error::{Error, Result};

type Q = BigRational;

/// Above this many steps the weight DP runs in floating point.
pub const EXACT_STEP_LIMIT: usize = 500;

#[derive(Clone, Debug, PartialEq)]
pub struct WeightDistribution {
    pub m: usize,
    /// `probs[k]` is the probability of weight `k`.
    pub probs: Vec<f64>,
    /// Exact values when available.
    pub exact: Option<Vec<Q>>,
}

impl WeightDistribution {
    fn from_exact(m: usize, exact: Vec<Q>) -> Self {
        let probs = exact.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
        Self { m, probs, exact: Some(exact) }
    }
}

/// Law of the Hamming weight of `X_n`, the 𝔽₂ sum of `n` uniform `t`-sets.
pub fn weight_distribution(m: usize, t: usize, n: usize) -> Result<WeightDistribution> {
    if t == 0 || t >= m || n == 0 {
        return Err(Error::Invalid(format!("need 0 < t < m and n ≥ 1 (m={m}, t={t}, n={n})")));
    }
    // kernel[w][j]: ways to pick a t-set meeting the current support in j points
    let kernel: Vec<Vec<(usize, u128)>> = (0..=m)
        .map(|w| {
            (0..=t.min(w))
                .filter(|&j| t - j <= m - w)
                .map(|j| (w + t - 2 * j, binomial(w as u64, j as u64) * binomial((m - w) as u64, (t - j) as u64)))
                .collect()
        })
        .collect();
    let total = binomial(m as u64, t as u64);
    if n <= EXACT_STEP_LIMIT {
        let mut counts = vec![BigUint::zero(); m + 1];
        counts[0] = BigUint::one();
        for _ in 0..n {
            let mut next = vec![BigUint::zero(); m + 1];
            for (w, c) in counts.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                for &(to, ways) in &kernel[w] {
                    next[to] += c * BigUint::from(ways);
                }
            }
            counts = next;
        }
        let denom = BigInt::from(BigUint::from(total).pow(n as u32));
        let exact = counts.into_iter().map(|c| Q::new(BigInt::from(c), denom.clone())).collect();
        return Ok(WeightDistribution::from_exact(m, exact));
    }
    let mut p = vec![0.0f64; m + 1];
    p[0] = 1.0;
    for _ in 0..n {
        let mut next = vec![Neumaier::default(); m + 1];
        for (w, &pw) in p.iter().enumerate() {
            if pw == 0.0 {
                continue;
            }
            for &(to, ways) in &kernel[w] {
                next[to].add(pw * ways as f64 / total as f64);
            }
        }
        p = next.iter().map(Neumaier::sum).collect();
    }
    Ok(WeightDistribution { m, probs: p, exact: None })
}

#[derive(Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Uniform law on `{x ∈ 𝔽₂ᵐ : |x| ≡ parity}`, by weight: `2^{1−m}·C(m,k)`.
pub fn conditioned_binomial(m: usize, parity: usize) -> WeightDistribution {
    assert!(m >= 1, "m must be positive");
    let denom = BigInt::from(2u8).pow((m - 1) as u32);
    let exact = (0..=m)
        .map(|k| {
            if k % 2 == parity % 2 {
                Q::new(BigInt::from(binomial_big(m as u64, k as u64)), denom.clone())
            } else {
                Q::zero()
            }
        })
        .collect();
    WeightDistribution::from_exact(m, exact)
}

/// `½Σ|p_k − q_k|`; exact when both inputs carry exact values.
pub fn tv_distance(p: &WeightDistribution, q: &WeightDistribution) -> Result<f64> {
    if let Some(x) = tv_distance_exact(p, q)? {
        return Ok(x.to_f64().unwrap_or(f64::NAN));
    }
    Ok(0.5 * p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

pub fn tv_distance_exact(p: &WeightDistribution, q: &WeightDistribution) -> Result<Option<Q>> {
    if p.m != q.m {
        return Err(Error::Dimension(format!("weight laws for m={} and m={}", p.m, q.m)));
    }
    let (Some(a), Some(b)) = (&p.exact, &q.exact) else { return Ok(None) };
    let s = a.iter().zip(b).fold(Q::zero(), |s, (x, y)| s + (x - y).abs());
    Ok(Some(s / Q::from_integer(BigInt::from(2))))
}

/// Walsh coefficient of the uniform `t`-set law at a character of weight `s`:
/// `Σ_j (−1)^j C(s,j) C(m−s,t−j) / C(m,t)`.
pub fn walsh_coefficient(m: usize, t: usize, s: usize) -> Q {
    assert!(s <= m && t <= m, "need s ≤ m and t ≤ m");
    let mut num = BigInt::zero();
    for j in 0..=t.min(s) {
        if t - j > m - s {
            continue;
        }
        let term = BigInt::from(binomial_big(s as u64, j as u64)) * BigInt::from(binomial_big((m - s) as u64, (t - j) as u64));
        if j % 2 == 0 {
            num += term;
        } else {
            num -= term;
        }
    }
    Q::new(num, BigInt::from(binomial_big(m as u64, t as u64)))
}

/// The bound `e^{−2n/m + m}` with implied constant 1.
pub fn mixing_bound(m: usize, n: usize) -> f64 {
    (-2.0 * n as f64 / m as f64 + m as f64).exp()
}

/// Exact law of `X_n` on 𝔽₂ᵐ (bitmask keys), by enumerating all
/// `C(m,t)ⁿ` summand sequences.
pub fn vector_law(m: usize, t: usize, n: usize) -> BTreeMap<u32, Q> {
    assert!(m <= 16, "brute force is for small m");
    let sets: Vec<u32> = combinations(m, t).iter().map(|s| s.iter().fold(0u32, |a, &i| a | 1 << i)).collect();
    let mut law: BTreeMap<u32, BigUint> = BTreeMap::new();
    law.insert(0, BigUint::one());
    for _ in 0..n {
        let mut next: BTreeMap<u32, BigUint> = BTreeMap::new();
        for (x, c) in &law {
            for s in &sets {
                *next.entry(x ^ s).or_default() += c;
            }
        }
        law = next;
    }
    let denom = BigInt::from(BigUint::from(sets.len()).pow(n as u32));
    law.into_iter().map(|(x, c)| (x, Q::new(BigInt::from(c), denom.clone()))).collect()
}

/// Weight marginal of a vector law.
pub fn weight_marginal(m: usize, law: &BTreeMap<u32, Q>) -> WeightDistribution {
    let mut w = vec![Q::zero(); m + 1];
    for (x, p) in law {
        w[x.count_ones() as usize] += p;
    }
    WeightDistribution::from_exact(m, w)
}

/// Total variation between the vector law of `X_n` and the uniform law on
/// the parity class `nt mod 2`, computed on 𝔽₂ᵐ directly.
pub fn vector_tv_to_parity_class(m: usize, t: usize, n: usize) -> Q {
    let law = vector_law(m, t, n);
    let parity = (n * t) % 2;
    let u = Q::new(BigInt::one(), BigInt::from(2u8).pow((m - 1) as u32));
    let mut s = Q::zero();
    for x in 0u32..(1 << m) {
        let p = law.get(&x).cloned().unwrap_or_else(Q::zero);
        let q = if x.count_ones() as usize % 2 == parity { u.clone() } else { Q::zero() };
        s += (p - q).abs();
    }
    s / Q::from_integer(BigInt::from(2))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingRow {
    pub m: usize,
    pub t: usize,
    pub n: usize,
    pub tv: f64,
    pub bound: f64,
}

/// TV to the limiting parity class for each `n`, with the reference bound.
pub fn tv_curve(m: usize, t: usize, ns: &[usize]) -> Result<Vec<MixingRow>> {
    ns.iter()
        .map(|&n| {
            let p = weight_distribution(m, t, n)?;
            let q = conditioned_binomial(m, (n * t) % 2);
            Ok(MixingRow { m, t, n, tv: tv_distance(&p, &q)?, bound: mixing_bound(m, n) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Q {
        Q::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn one_step_is_a_point_mass() {
        let w = weight_distribution(5, 2, 1).unwrap();
        assert_eq!(w.exact.unwrap()[2], Q::one());
    }

    #[test]
    fn two_coins() {
        let w = weight_distribution(2, 1, 2).unwrap().exact.unwrap();
        assert_eq!(w, vec![r(1, 2), Q::zero(), r(1, 2)]);
    }

    #[test]
    fn parity_support() {
        for n in 1..8 {
            let w = weight_distribution(7, 3, n).unwrap();
            for (k, p) in w.probs.iter().enumerate() {
                if (k + n * 3) % 2 == 1 {
                    assert_eq!(*p, 0.0);
                }
            }
            assert!((w.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn conditioned_binomial_values() {
        assert_eq!(conditioned_binomial(3, 1).exact.unwrap(), vec![Q::zero(), r(3, 4), Q::zero(), r(1, 4)]);
        assert_eq!(conditioned_binomial(2, 1).exact.unwrap()[1], Q::one());
        for m in 1..10 {
            for par in 0..2 {
                let s = conditioned_binomial(m, par).exact.unwrap().into_iter().fold(Q::zero(), |a, b| a + b);
                assert_eq!(s, Q::one());
            }
        }
    }

    #[test]
    fn tv_extremes() {
        let a = conditioned_binomial(4, 0);
        let b = conditioned_binomial(4, 1);
        assert_eq!(tv_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(tv_distance(&a, &b).unwrap(), 1.0);
        assert!(tv_distance(&a, &conditioned_binomial(5, 0)).is_err());
    }

    #[test]
    fn walsh_endpoints() {
        for m in 2..9 {
            for t in 1..m {
                assert_eq!(walsh_coefficient(m, t, 0), Q::one());
                let sign = if t % 2 == 0 { Q::one() } else { -Q::one() };
                assert_eq!(walsh_coefficient(m, t, m), sign);
            }
        }
    }

    #[test]
    fn float_path_continues_exact_path() {
        let exact = weight_distribution(6, 2, EXACT_STEP_LIMIT).unwrap();
        let float = weight_distribution(6, 2, EXACT_STEP_LIMIT + 2).unwrap();
        assert!(float.exact.is_none());
        for (a, b) in exact.probs.iter().zip(&float.probs) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
