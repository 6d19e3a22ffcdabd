//! Subsets and binomial coefficients.

use num_bigint::BigUint;
use num_traits::One;

/// All `t`-subsets of `0..m` in lexicographic order.
pub fn combinations(m: usize, t: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if t > m {
        return out;
    }
    let mut cur: Vec<usize> = (0..t).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..t).rev().find(|&i| cur[i] < m - t + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..t {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

pub fn binomial_big(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::default();
    }
    let k = k.min(n - k);
    let mut r = BigUint::one();
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Indicator vector of a subset.
pub fn indicator(m: usize, set: &[usize]) -> Vec<i64> {
    let mut v = vec![0; m];
    for &i in set {
        v[i] = 1;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_binomials() {
        for m in 1..9 {
            for t in 0..=m {
                assert_eq!(combinations(m, t).len() as u128, binomial(m as u64, t as u64));
            }
        }
        assert_eq!(combinations(4, 2)[0], vec![0, 1]);
        assert_eq!(combinations(4, 2)[5], vec![2, 3]);
        assert_eq!(binomial_big(60, 30).to_string(), "118264581564861424");
    }
}
