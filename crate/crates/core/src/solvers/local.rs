use rand::Rng;

use super::{certified_lower_bound, disc_value, Coloring, DiscrepancyResult, Method};
use crate::lattice::Norm;
use crate::matrix::{Entry, Matrix};

const IMPROVE: f64 = 1e-12;

/// Random restarts of steepest descent on `‖My‖_*`.
///
/// A descent step takes the best single sign flip; when none improves it
/// takes the best flip of two signs, found by a sorted nearest-pair sweep.
/// `budget` is the number of restarts. The search stops early once the
/// parity lower bound is reached, in which case the result is certified.
pub fn local_search<T: Entry, R: Rng + ?Sized>(
    m: &Matrix<T>,
    norm: Norm,
    budget: usize,
    rng: &mut R,
) -> DiscrepancyResult {
    let n = m.cols();
    let rows = m.rows();
    let lower_bound = certified_lower_bound(m, norm);
    let cols: Vec<Vec<f64>> =
        m.columns().map(|c| c.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()).collect();
    let mut best_y = Coloring::all_plus(n);
    let mut best = f64::INFINITY;
    if rows == 0 || n == 0 {
        best = 0.0;
    }
    let mut search = Descent { cols: &cols, rows, norm, s: vec![0.0; rows], y: vec![1; n] };
    for _ in 0..budget.max(1) {
        if best <= lower_bound + IMPROVE {
            break;
        }
        for e in search.y.iter_mut() {
            *e = if rng.random::<bool>() { 1 } else { -1 };
        }
        let v = search.descend();
        if v < best {
            best = v;
            best_y = Coloring(search.y.clone());
        }
    }
    let value = disc_value(m, &best_y, norm).unwrap_or(best);
    DiscrepancyResult {
        value,
        certified: value <= lower_bound + 1e-9,
        method: Method::LocalSearch,
        coloring: best_y,
        lower_bound,
    }
}

/// A local optimum reached from one random start.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOptimum {
    pub coloring: Coloring,
    pub value: f64,
    /// `My`.
    pub sum: Vec<f64>,
}

/// Endpoints of `restarts` independent descents, in restart order.
pub fn local_search_endpoints<T: Entry, R: Rng + ?Sized>(
    m: &Matrix<T>,
    norm: Norm,
    restarts: usize,
    rng: &mut R,
) -> Vec<LocalOptimum> {
    let cols: Vec<Vec<f64>> =
        m.columns().map(|c| c.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()).collect();
    let mut search = Descent { cols: &cols, rows: m.rows(), norm, s: vec![0.0; m.rows()], y: vec![1; m.cols()] };
    (0..restarts)
        .map(|_| {
            for e in search.y.iter_mut() {
                *e = if rng.random::<bool>() { 1 } else { -1 };
            }
            let value = search.descend();
            LocalOptimum { coloring: Coloring(search.y.clone()), value, sum: search.s.clone() }
        })
        .collect()
}

struct Descent<'a> {
    cols: &'a [Vec<f64>],
    rows: usize,
    norm: Norm,
    s: Vec<f64>,
    y: Vec<i8>,
}

impl Descent<'_> {
    fn reset_sum(&mut self) {
        self.s.iter_mut().for_each(|x| *x = 0.0);
        for (c, &e) in self.cols.iter().zip(&self.y) {
            for (a, b) in self.s.iter_mut().zip(c) {
                *a += e as f64 * b;
            }
        }
    }

    fn flip(&mut self, j: usize) {
        let e = self.y[j] as f64;
        for (a, b) in self.s.iter_mut().zip(&self.cols[j]) {
            *a -= 2.0 * e * b;
        }
        self.y[j] = -self.y[j];
    }

    /// Norm of `a - b`, or infinity as soon as it is known to be at least `cutoff`.
    fn dist(&self, a: &[f64], b: &[f64], cutoff: f64) -> f64 {
        match self.norm {
            Norm::Sup => {
                let mut v = 0.0f64;
                for (x, y) in a.iter().zip(b) {
                    v = v.max((x - y).abs());
                    if v >= cutoff {
                        return f64::INFINITY;
                    }
                }
                v
            }
            Norm::Euclidean => {
                let c2 = cutoff * cutoff;
                let mut v = 0.0;
                for (x, y) in a.iter().zip(b) {
                    v += (x - y) * (x - y);
                    if v >= c2 {
                        return f64::INFINITY;
                    }
                }
                v.sqrt()
            }
        }
    }

    fn descend(&mut self) -> f64 {
        self.reset_sum();
        let zero = vec![0.0; self.rows];
        let mut v = self.dist(&self.s, &zero, f64::INFINITY);
        let n = self.cols.len();
        let mut steps = vec![0.0; self.rows * n];
        loop {
            // w_j = 2 y_j x_j: flipping j moves the sum to s - w_j.
            for j in 0..n {
                let e = 2.0 * self.y[j] as f64;
                for i in 0..self.rows {
                    steps[j * self.rows + i] = e * self.cols[j][i];
                }
            }
            let mut single: Option<(f64, usize)> = None;
            for j in 0..n {
                let cut = single.map_or(v - IMPROVE, |b| b.0);
                let d = self.dist(&self.s, &steps[j * self.rows..(j + 1) * self.rows], cut);
                if d < cut {
                    single = Some((d, j));
                }
            }
            if let Some((d, j)) = single {
                self.flip(j);
                v = d;
                continue;
            }
            match self.best_pair(&steps, v - IMPROVE) {
                Some((d, j, k)) => {
                    self.flip(j);
                    self.flip(k);
                    v = d;
                }
                None => return v,
            }
        }
    }

    /// Best `(j, k)` with `‖s - w_j - w_k‖ < bound`, ties to the smallest pair.
    fn best_pair(&self, steps: &[f64], bound: f64) -> Option<(f64, usize, usize)> {
        let r = self.rows;
        let n = self.cols.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| steps[a * r].total_cmp(&steps[b * r]).then(a.cmp(&b)));
        let keys: Vec<f64> = order.iter().map(|&k| steps[k * r]).collect();
        let mut a = vec![0.0; r];
        let mut best: Option<(f64, usize, usize)> = None;
        for j in 0..n {
            for i in 0..r {
                a[i] = self.s[i] - steps[j * r + i];
            }
            let cut = best.map_or(bound, |b| b.0);
            let start = keys.partition_point(|&x| x <= a[0] - cut);
            for pos in start..n {
                let cut = best.map_or(bound, |b| b.0);
                if keys[pos] >= a[0] + cut {
                    break;
                }
                let k = order[pos];
                if k == j {
                    continue;
                }
                let d = self.dist(&a, &steps[k * r..(k + 1) * r], cut);
                let pair = (j.min(k), j.max(k));
                let better = match best {
                    None => d < cut,
                    Some((bd, bj, bk)) => d < bd || (d == bd && pair < (bj, bk)),
                };
                if better {
                    best = Some((d, pair.0, pair.1));
                }
            }
        }
        best
    }
}
