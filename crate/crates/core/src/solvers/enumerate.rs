use super::{certified_lower_bound, norm_of, Coloring, DiscrepancyResult, Method};
use crate::error::{Error, Result};
use crate::lattice::Norm;
use crate::matrix::{Entry, IntMatrix, Matrix};

pub const MAX_EXACT_COLUMNS: usize = 30;
pub const MAX_MEET_MIDDLE_COLUMNS: usize = 44;

/// Exhaustive search over colorings in reflected Gray-code order, one column
/// update per step. The last sign is pinned to `+1` since `y` and `-y` give
/// the same value. Stops early once the parity bound is met.
pub fn disc_exact<T: Entry>(m: &Matrix<T>, norm: Norm) -> Result<DiscrepancyResult> {
    let n = m.cols();
    if n > MAX_EXACT_COLUMNS {
        return Err(Error::TooLarge(format!("{n} columns > {MAX_EXACT_COLUMNS}; use meet-in-middle or DP")));
    }
    let lower_bound = certified_lower_bound(m, norm);
    let mut y = vec![1i8; n];
    let mut s = vec![T::zero(); m.rows()];
    for c in m.columns() {
        for (a, &b) in s.iter_mut().zip(c) {
            *a += b;
        }
    }
    let mut best = norm_of(&s, norm);
    let mut best_y = y.clone();
    let steps: u64 = if n == 0 { 0 } else { (1u64 << (n - 1)) - 1 };
    let two = T::one() + T::one();
    for k in 1..=steps {
        if best <= lower_bound + 1e-12 {
            break;
        }
        let j = k.trailing_zeros() as usize;
        for (a, &b) in s.iter_mut().zip(m.col(j)) {
            if y[j] > 0 {
                *a -= two * b;
            } else {
                *a += two * b;
            }
        }
        y[j] = -y[j];
        let v = norm_of(&s, norm);
        if v < best {
            best = v;
            best_y.copy_from_slice(&y);
        }
    }
    Ok(DiscrepancyResult {
        value: best,
        certified: true,
        method: Method::GrayCode,
        coloring: Coloring(best_y),
        lower_bound,
    })
}

/// Signed sums of `cols` for every sign pattern with bit `j` of the mask
/// meaning column `j` gets `-1`. Flat, `m` entries per mask.
fn half_sums(cols: &[&[i64]], m: usize) -> Vec<i64> {
    let count = 1usize << cols.len();
    let mut out = vec![0i64; count * m];
    for c in cols {
        for (a, &b) in out[..m].iter_mut().zip(c.iter()) {
            *a += b;
        }
    }
    for mask in 1..count {
        let j = mask.trailing_zeros() as usize;
        let prev = mask & (mask - 1);
        for i in 0..m {
            out[mask * m + i] = out[prev * m + i] - 2 * cols[j][i];
        }
    }
    out
}

fn sup_sum(a: &[i64], b: &[i64], cutoff: i64) -> i64 {
    let mut v = 0;
    for (x, y) in a.iter().zip(b) {
        v = v.max((x + y).abs());
        if v >= cutoff {
            return v;
        }
    }
    v
}

/// Sup-norm discrepancy of an integer matrix by splitting the columns in
/// two halves and matching partial sums sorted by their first coordinate.
pub fn disc_meet_middle(m: &IntMatrix, norm: Norm) -> Result<DiscrepancyResult> {
    if norm != Norm::Sup {
        return Err(Error::Unsupported("meet-in-middle supports the sup-norm only".into()));
    }
    let n = m.cols();
    if n > MAX_MEET_MIDDLE_COLUMNS {
        return Err(Error::TooLarge(format!("{n} columns > {MAX_MEET_MIDDLE_COLUMNS}; use the DP")));
    }
    let rows = m.rows();
    let lower_bound = certified_lower_bound(m, norm);
    if n == 0 || rows == 0 {
        return Ok(DiscrepancyResult {
            value: 0.0,
            certified: true,
            method: Method::MeetInMiddle,
            coloring: Coloring::all_plus(n),
            lower_bound,
        });
    }
    // Column 0 is pinned to +1, so the first half holds columns 1..h.
    let h = n / 2;
    let left: Vec<&[i64]> = (1..=h).filter(|&j| j < n).map(|j| m.col(j)).collect();
    let right: Vec<&[i64]> = (h + 1..n).map(|j| m.col(j)).collect();
    let mut a = half_sums(&left, rows);
    let c0 = m.col(0);
    for chunk in a.chunks_mut(rows) {
        for (x, &c) in chunk.iter_mut().zip(c0) {
            *x += c;
        }
    }
    let b = half_sums(&right, rows);
    let mut order: Vec<usize> = (0..b.len() / rows).collect();
    order.sort_by_key(|&k| (b[k * rows], k));
    let keys: Vec<i64> = order.iter().map(|&k| b[k * rows]).collect();

    let mut best = sup_sum(&a[..rows], &b[..rows], i64::MAX);
    let mut best_pair = (0usize, 0usize);
    'outer: for (ia, sa) in a.chunks(rows).enumerate() {
        let lo = -sa[0] - best + 1;
        let start = keys.partition_point(|&x| x < lo);
        for pos in start..keys.len() {
            if keys[pos] > -sa[0] + best - 1 {
                break;
            }
            let ib = order[pos];
            let v = sup_sum(sa, &b[ib * rows..(ib + 1) * rows], best);
            if v < best {
                best = v;
                best_pair = (ia, ib);
                if (best as f64) <= lower_bound + 1e-12 {
                    break 'outer;
                }
            }
        }
    }
    let mut y = vec![1i8; n];
    for (bit, j) in (1..=h).filter(|&j| j < n).enumerate() {
        if best_pair.0 >> bit & 1 == 1 {
            y[j] = -1;
        }
    }
    for (bit, j) in (h + 1..n).enumerate() {
        if best_pair.1 >> bit & 1 == 1 {
            y[j] = -1;
        }
    }
    Ok(DiscrepancyResult {
        value: best as f64,
        certified: true,
        method: Method::MeetInMiddle,
        coloring: Coloring(y),
        lower_bound,
    })
}
