use std::collections::btree_map::{BTreeMap, Entry as MapEntry};
use std::collections::HashSet;

use super::Coloring;
use crate::error::{Error, Result};
use crate::matrix::IntMatrix;

pub const DEFAULT_STATE_CAP: usize = 10_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub feasible: bool,
    pub coloring: Option<Coloring>,
    /// Partial-sum states stored by the final DP pass.
    pub states: usize,
}

/// Is there a coloring with `‖My‖_∞ ≤ k`?
pub fn disc_decision_dp(m: &IntMatrix, k: i64) -> Result<Decision> {
    disc_decision_dp_with(m, k, DEFAULT_STATE_CAP)
}

/// Decision DP with an explicit cap on stored states.
///
/// Columns are first grouped up to sign. A group with many copies is cut
/// down to `r` or `r + 1` copies of the same parity, the removed copies
/// being paired off with opposite signs. A witness for the reduced matrix
/// lifts to one for `M`; if the reduced matrix fails, `r` doubles until
/// nothing is cut, at which point infeasibility is exact.
pub fn disc_decision_dp_with(m: &IntMatrix, k: i64, cap: usize) -> Result<Decision> {
    let n = m.cols();
    if k < 0 {
        return Ok(Decision { feasible: false, coloring: None, states: 0 });
    }
    if m.rows() == 0 {
        return Ok(Decision { feasible: true, coloring: Some(Coloring::all_plus(n)), states: 0 });
    }
    // Canonical sign: first nonzero entry positive.
    let mut flip = vec![1i8; n];
    let mut groups: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    for (j, c) in m.columns().enumerate() {
        let Some(&lead) = c.iter().find(|&&x| x != 0) else { continue };
        let mut v = c.to_vec();
        if lead < 0 {
            flip[j] = -1;
            v.iter_mut().for_each(|x| *x = -*x);
        }
        match groups.entry(v) {
            MapEntry::Vacant(e) => {
                e.insert(vec![j]);
            }
            MapEntry::Occupied(mut e) => e.get_mut().push(j),
        }
    }
    let largest = groups.values().map(Vec::len).max().unwrap_or(0);
    let mut r = 1usize;
    loop {
        let mut kept: Vec<(&[i64], usize)> = Vec::new();
        let mut paired: Vec<usize> = Vec::new();
        for (v, idx) in &groups {
            let c = idx.len();
            let keep = if c <= r + 1 { c } else if (c - r) % 2 == 0 { r } else { r + 1 };
            kept.extend(idx[..keep].iter().map(|&j| (v.as_slice(), j)));
            paired.extend_from_slice(&idx[keep..]);
        }
        let reduced = !paired.is_empty();
        let (found, states) = run_dp(m.rows(), &kept, k, cap)?;
        if let Some(signs) = found {
            let mut y = vec![1i8; n];
            for ((_, j), s) in kept.iter().zip(signs) {
                y[*j] = s * flip[*j];
            }
            for (p, &j) in paired.iter().enumerate() {
                y[j] = if p % 2 == 0 { flip[j] } else { -flip[j] };
            }
            return Ok(Decision { feasible: true, coloring: Some(Coloring(y)), states });
        }
        if !reduced || r >= largest {
            return Ok(Decision { feasible: false, coloring: None, states });
        }
        r *= 2;
    }
}

struct Layer {
    states: Vec<i64>,
    parent: Vec<u32>,
    plus: Vec<bool>,
}

/// Forward DP over `cols`; returns signs of a witness when one exists.
fn run_dp(rows: usize, cols: &[(&[i64], usize)], k: i64, cap: usize) -> Result<(Option<Vec<i8>>, usize)> {
    let n = cols.len();
    // reach[j][i]: how far coordinate i can still move using columns j..n.
    let mut reach = vec![vec![0i64; rows]; n + 1];
    for j in (0..n).rev() {
        for i in 0..rows {
            reach[j][i] = reach[j + 1][i] + cols[j].0[i].abs();
        }
    }
    let mut layers: Vec<Layer> = vec![Layer { states: vec![0; rows], parent: vec![0], plus: vec![true] }];
    let mut total = 1usize;
    for (j, (c, _)) in cols.iter().enumerate() {
        let prev = layers.last().expect("initial layer");
        let mut next = Layer { states: Vec::new(), parent: Vec::new(), plus: Vec::new() };
        let mut seen: HashSet<Vec<i64>> = HashSet::new();
        let signs: &[bool] = if j == 0 { &[true] } else { &[true, false] };
        let mut buf = vec![0i64; rows];
        for (p, s) in prev.states.chunks(rows).enumerate() {
            for &plus in signs {
                let mut ok = true;
                for i in 0..rows {
                    let v = if plus { s[i] + c[i] } else { s[i] - c[i] };
                    if v.abs() > k + reach[j + 1][i] {
                        ok = false;
                        break;
                    }
                    buf[i] = v;
                }
                if !ok || seen.contains(&buf) {
                    continue;
                }
                seen.insert(buf.clone());
                next.states.extend_from_slice(&buf);
                next.parent.push(p as u32);
                next.plus.push(plus);
                total += 1;
                if total > cap {
                    return Err(Error::StateCap { cap });
                }
            }
        }
        if next.parent.is_empty() {
            return Ok((None, total));
        }
        layers.push(next);
    }
    let last = layers.last().expect("layer");
    let hit = (0..last.parent.len())
        .find(|&p| last.states[p * rows..(p + 1) * rows].iter().all(|x| x.abs() <= k));
    let Some(mut p) = hit else { return Ok((None, total)) };
    let mut signs = vec![1i8; n];
    for j in (0..n).rev() {
        let layer = &layers[j + 1];
        signs[j] = if layer.plus[p] { 1 } else { -1 };
        p = layer.parent[p] as usize;
    }
    Ok((Some(signs), total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Norm;
    use crate::solvers::{disc_exact, disc_value};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generous_budget_is_feasible() {
        let m = IntMatrix::from_rows(&[vec![5, 2, -7], vec![1, 1, 1]]).unwrap();
        let big: i64 = m.columns().map(|c| c.iter().map(|x| x.abs()).max().unwrap()).sum();
        let d = disc_decision_dp(&m, big).unwrap();
        assert!(d.feasible);
        assert!(disc_value(&m, d.coloring.as_ref().unwrap(), Norm::Sup).unwrap() <= big as f64);
    }

    #[test]
    fn brackets_exact_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let c: Vec<Vec<i64>> = (0..12).map(|_| (0..3).map(|_| rng.random_range(-2..=2)).collect()).collect();
            let m = IntMatrix::from_columns(3, &c).unwrap();
            let v = disc_exact(&m, Norm::Sup).unwrap().value as i64;
            let d = disc_decision_dp(&m, v).unwrap();
            assert!(d.feasible);
            assert!(disc_value(&m, d.coloring.as_ref().unwrap(), Norm::Sup).unwrap() <= v as f64);
            assert!(!disc_decision_dp(&m, v - 1).unwrap().feasible);
        }
    }

    #[test]
    fn reduction_keeps_exactness() {
        // Seven copies of (1,1) plus one (1,0): the best is 1.
        let mut c = vec![vec![1, 1]; 7];
        c.push(vec![-1, 0]);
        let m = IntMatrix::from_columns(2, &c).unwrap();
        assert!(disc_decision_dp(&m, 1).unwrap().feasible);
        assert!(!disc_decision_dp(&m, 0).unwrap().feasible);
    }

    #[test]
    fn cap_is_reported() {
        let c: Vec<Vec<i64>> = (0..20).map(|j| vec![j + 1, 3 * j - 7, 2 * j * j + 1]).collect();
        let m = IntMatrix::from_columns(3, &c).unwrap();
        assert!(matches!(disc_decision_dp_with(&m, 0, 50), Err(Error::StateCap { cap: 50 })));
    }
}
