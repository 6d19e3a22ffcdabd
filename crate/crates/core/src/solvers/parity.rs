use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::q;
use crate::lattice::{lattice_from_columns, Norm, DEFAULT_MAX_RANK};
use crate::matrix::IntMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityBound {
    /// `d_*(M·1, 2L)`, or an upper estimate of it when `exact` is false.
    pub distance: f64,
    /// Point of `2L` attaining `distance`.
    pub nearest: Vec<f64>,
    pub exact: bool,
}

/// Distance from `M·1` to `2L`, `L` the integer span of the columns. Every
/// signed sum `My` is congruent to `M·1` modulo `2L`, so this bounds the
/// discrepancy from below. Above the exact CVP rank limit the answer is a
/// Babai rounding estimate flagged `exact = false`.
pub fn parity_lower_bound(m: &IntMatrix, norm: Norm) -> Result<ParityBound> {
    let rows = m.rows();
    let cols = m.column_vecs();
    if cols.iter().all(|c| c.iter().all(|&x| x == 0)) {
        return Ok(ParityBound { distance: 0.0, nearest: vec![0.0; rows], exact: true });
    }
    let target: Vec<f64> = m.row_sums().iter().map(|&x| x as f64).collect();
    let two_l = lattice_from_columns(&cols)?.scaled(&q(2)).float()?.lll_reduced()?;
    if two_l.rank() <= DEFAULT_MAX_RANK {
        let cv = two_l.closest(&target, norm, DEFAULT_MAX_RANK)?;
        return Ok(ParityBound { distance: cv.distance, nearest: cv.point, exact: true });
    }
    let c: Vec<i64> = two_l.coefficients(&target).iter().map(|x| x.round() as i64).collect();
    let nearest = two_l.point(&c);
    let diff: Vec<f64> = nearest.iter().zip(&target).map(|(a, b)| a - b).collect();
    Ok(ParityBound { distance: norm.eval(&diff), nearest, exact: false })
}

/// Odd discrepancy of an `n`-column `t`-sparse matrix from its row sums.
///
/// For even `n` any odd row sum must move by one. For odd `n` a vector of
/// `2L` closest to the row sums differs in exactly the odd coordinates when
/// there are at least `t` of them, and needs a step of 2 otherwise.
pub fn tsparse_odd_disc(row_sums: &[i64], t: usize, n: usize) -> Result<u8> {
    let total: i64 = row_sums.iter().sum();
    if t == 0 || t > row_sums.len() || total != (n * t) as i64 {
        return Err(Error::Inconsistent(format!(
            "row sums total {total}, expected n·t = {}·{} for a {}-row t-sparse matrix",
            n,
            t,
            row_sums.len()
        )));
    }
    let odd = row_sums.iter().filter(|&&x| x.rem_euclid(2) == 1).count();
    Ok(match (n % 2 == 0, odd) {
        (true, 0) => 0,
        (true, _) => 1,
        (false, k) if k >= t => 1,
        (false, _) => 2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_example() {
        let m = IntMatrix::from_rows(&[vec![5, 2]]).unwrap();
        let b = parity_lower_bound(&m, Norm::Sup).unwrap();
        assert_eq!(b.distance, 1.0);
        assert!(b.exact);
        assert!(b.nearest[0] == 6.0 || b.nearest[0] == 8.0);
    }

    #[test]
    fn even_copies_of_one_column() {
        let m = IntMatrix::from_columns(3, &vec![vec![1, 2, -3]; 4]).unwrap();
        assert_eq!(parity_lower_bound(&m, Norm::Sup).unwrap().distance, 0.0);
        let z = IntMatrix::from_columns(2, &vec![vec![0, 0]; 3]).unwrap();
        assert_eq!(parity_lower_bound(&z, Norm::Euclidean).unwrap().distance, 0.0);
    }

    #[test]
    fn closed_form_cases() {
        assert_eq!(tsparse_odd_disc(&[2, 2, 0], 2, 2).unwrap(), 0);
        assert_eq!(tsparse_odd_disc(&[1, 1, 2], 2, 2).unwrap(), 1);
        assert_eq!(tsparse_odd_disc(&[1, 1, 1], 1, 3).unwrap(), 1);
        assert_eq!(tsparse_odd_disc(&[3, 2, 1], 2, 3).unwrap(), 1);
        assert_eq!(tsparse_odd_disc(&[3, 3, 0], 2, 3).unwrap(), 1);
        assert_eq!(tsparse_odd_disc(&[3, 0, 0, 0], 1, 3).unwrap(), 1);
        assert_eq!(tsparse_odd_disc(&[3, 3, 3, 0], 3, 3).unwrap(), 1);
        assert_eq!(tsparse_odd_disc(&[2, 2, 3, 2], 3, 3).unwrap(), 2);
        let e = tsparse_odd_disc(&[1, 1], 1, 3).unwrap_err().to_string();
        assert!(e.contains("inconsistent input"), "{e}");
    }
}
