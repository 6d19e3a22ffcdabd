//! Exact rational linear algebra on small dense matrices (row-major `Vec<Vec<Q>>`).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_ratio(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `"p/q"`, always with an explicit denominator.
pub fn format_q(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn parse_q(s: &str) -> Result<Q> {
    let bad = || Error::Invalid(format!("not a rational: {s:?}"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(Q::new(n, d))
}

pub fn from_i64_rows(rows: &[Vec<i64>]) -> Vec<Vec<Q>> {
    rows.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect()
}

/// Reduced row echelon form; returns the pivot column of each nonzero row.
pub fn rref(a: &mut [Vec<Q>]) -> Vec<usize> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in c..cols {
                    let d = &a[r][j] * &f;
                    a[i][j] -= d;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(a: &[Vec<Q>]) -> usize {
    let mut w = a.to_vec();
    rref(&mut w).len()
}

pub fn rank_i64(a: &[Vec<i64>]) -> usize {
    rank(&from_i64_rows(a))
}

pub fn mat_mul(a: &[Vec<Q>], b: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    let mut s = Q::zero();
                    for k in 0..inner {
                        if !row[k].is_zero() && !b[k][j].is_zero() {
                            s += &row[k] * &b[k][j];
                        }
                    }
                    s
                })
                .collect()
        })
        .collect()
}

pub fn transpose(a: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let cols = a.first().map_or(0, Vec::len);
    (0..cols).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

pub fn inverse(a: &[Vec<Q>]) -> Option<Vec<Vec<Q>>> {
    let n = a.len();
    let mut aug: Vec<Vec<Q>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            row
        })
        .collect();
    let piv = rref(&mut aug);
    if piv.len() < n || piv[n - 1] >= n {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn det(a: &[Vec<Q>]) -> Q {
    let n = a.len();
    let mut w = a.to_vec();
    let mut d = Q::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !w[i][c].is_zero()) else {
            return Q::zero();
        };
        if p != c {
            w.swap(p, c);
            d = -d;
        }
        d *= &w[c][c];
        let inv = w[c][c].recip();
        for i in c + 1..n {
            if !w[i][c].is_zero() {
                let f = &w[i][c] * &inv;
                for j in c..n {
                    let t = &w[c][j] * &f;
                    w[i][j] -= t;
                }
            }
        }
    }
    d
}

/// Integer vector proportional to `v` with coprime entries and a positive
/// leading nonzero entry.
pub fn primitive_integer(v: &[Q]) -> Vec<BigInt> {
    let mut l = BigInt::one();
    for x in v {
        l = num_integer::Integer::lcm(&l, x.denom());
    }
    let mut ints: Vec<BigInt> = v.iter().map(|x| (x * Q::from_integer(l.clone())).to_integer()).collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = num_integer::Integer::gcd(&g, x);
    }
    if !g.is_zero() {
        for x in &mut ints {
            *x /= &g;
        }
    }
    if ints.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
        for x in &mut ints {
            *x = -x.clone();
        }
    }
    ints
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_strings() {
        assert_eq!(format_q(&q_ratio(-6, 4)), "-3/2");
        assert_eq!(format_q(&q(5)), "5/1");
        assert_eq!(parse_q("10/-4").unwrap(), q_ratio(-5, 2));
        assert_eq!(parse_q("7").unwrap(), q(7));
        assert!(parse_q("1/0").is_err());
    }

    #[test]
    fn inverse_and_det() {
        let a = from_i64_rows(&[vec![2, 1], vec![1, 1]]);
        assert_eq!(det(&a), q(1));
        let inv = inverse(&a).unwrap();
        assert_eq!(mat_mul(&a, &inv), from_i64_rows(&[vec![1, 0], vec![0, 1]]));
        assert!(inverse(&from_i64_rows(&[vec![1, 2], vec![2, 4]])).is_none());
        assert_eq!(rank_i64(&[vec![1, 2], vec![2, 4]]), 1);
    }

    #[test]
    fn primitive_scaling() {
        let v = primitive_integer(&[q_ratio(-1, 2), q_ratio(1, 3), q(0)]);
        assert_eq!(v, vec![BigInt::from(3), BigInt::from(-2), BigInt::from(0)]);
    }
}
