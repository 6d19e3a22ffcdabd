//! Covering radius: exact routines for small rank, plus a deep-hole search.
//!
//! Certified mode (rank ≤ 4) uses, depending on the case:
//! - rank 1: half the norm of the generator;
//! - Euclidean norm: the farthest vertex of the Voronoi cell, built from the
//!   Voronoi-relevant vectors (the unique shortest pairs of each nonzero
//!   class of `L/2L`);
//! - sup-norm, full rank: `d_∞(·, L)` is piecewise linear with breakpoints on
//!   hyperplanes `xᵢ ± xⱼ ∈ ℤ` and `2xᵢ ∈ ℤ` (after scaling `L` into `ℤᵐ`),
//!   whose vertices are half-integral, so the maximum is attained on `½ℤᵐ`;
//! - otherwise: Lipschitz branch and bound over the fundamental cell, to a
//!   tolerance of 1e-3 of the cell diameter.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, DVector};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{lattice_from_columns, FloatLattice, Lattice, Norm, DEFAULT_MAX_RANK};
use crate::combinatorics::combinations;
use crate::error::{Error, Result};
use crate::exact::{self, Q};

const MAX_CERTIFIED_RANK: usize = 4;
const GRID_FRACTION: f64 = 1e-3;
const MAX_BRANCH_BOXES: usize = 2_000_000;
const MAX_HALF_POINTS: f64 = 4.0e6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoveringMode {
    Certified,
    /// Random restarts with local ascent; the result is a lower bound.
    Estimate { samples: usize, seed: u64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct CoveringRadius {
    /// Best deep-hole distance found (exact in the closed-form cases).
    pub radius: f64,
    /// Proven upper bound; infinite in estimate mode.
    pub upper: f64,
    pub deep_hole: Vec<f64>,
    pub certified: bool,
}

pub fn covering_radius(l: &Lattice, norm: Norm, mode: CoveringMode) -> Result<CoveringRadius> {
    match mode {
        CoveringMode::Certified => certified(l, norm),
        CoveringMode::Estimate { samples, seed } => estimate(l, norm, samples, seed),
    }
}

fn certified(l: &Lattice, norm: Norm) -> Result<CoveringRadius> {
    let k = l.rank();
    if k > MAX_CERTIFIED_RANK {
        return Err(Error::TooLarge(format!(
            "certified covering radius needs rank ≤ {MAX_CERTIFIED_RANK}, got {k}"
        )));
    }
    let fl = l.float()?;
    if k == 1 {
        let b: Vec<f64> = fl.basis().column(0).iter().copied().collect();
        let r = norm.eval(&b) / 2.0;
        let hole = b.iter().map(|x| x / 2.0).collect();
        return Ok(CoveringRadius { radius: r, upper: r, deep_hole: hole, certified: true });
    }
    match norm {
        Norm::Euclidean => voronoi_vertices(&fl),
        Norm::Sup if l.is_nondegenerate() => match half_integer_scan(l) {
            Err(Error::TooLarge(_)) => branch_and_bound(&fl, norm),
            r => r,
        },
        Norm::Sup => branch_and_bound(&fl, norm),
    }
}

fn dist(fl: &FloatLattice, x: &[f64], norm: Norm) -> f64 {
    fl.closest(x, norm, DEFAULT_MAX_RANK).map(|c| c.distance).unwrap_or(f64::NAN)
}

fn half_integer_scan(l: &Lattice) -> Result<CoveringRadius> {
    let m = l.ambient_dim();
    let d = l.denominator();
    let scaled = l.scaled(&Q::from_integer(d.clone()));
    let cols: Vec<Vec<i64>> = scaled
        .basis()
        .iter()
        .map(|c| c.iter().map(|x| x.to_integer().to_i64()).collect::<Option<Vec<_>>>())
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::TooLarge("basis entries exceed i64".into()))?;
    let h = lattice_from_columns(&cols)?;
    let diag: Vec<i64> = (0..m).map(|i| h.basis()[i][i].to_integer().to_i64().unwrap_or(i64::MAX)).collect();
    let count = diag.iter().fold(2f64.powi(m as i32), |a, &x| a * x as f64);
    if count > MAX_HALF_POINTS {
        return Err(Error::TooLarge(format!("{count:.0} half-integer coset points")));
    }
    let fl = h.float()?;
    let mut best = (-1.0, Vec::new());
    let mut rep = vec![0i64; m];
    loop {
        for bits in 0u32..(1 << m) {
            let x: Vec<f64> =
                (0..m).map(|i| rep[i] as f64 + if bits >> i & 1 == 1 { 0.5 } else { 0.0 }).collect();
            let r = dist(&fl, &x, Norm::Sup);
            if r > best.0 {
                best = (r, x);
            }
        }
        let Some(i) = (0..m).find(|&i| rep[i] + 1 < diag[i]) else { break };
        rep[i] += 1;
        rep[..i].iter_mut().for_each(|x| *x = 0);
    }
    let s = exact::to_f64(&Q::from_integer(d));
    let hole = best.1.iter().map(|x| x / s).collect();
    Ok(CoveringRadius { radius: best.0 / s, upper: best.0 / s, deep_hole: hole, certified: true })
}

fn voronoi_vertices(fl: &FloatLattice) -> Result<CoveringRadius> {
    let k = fl.rank();
    let m = fl.ambient_dim();
    let double = FloatLattice::new(fl.basis() * 2.0)?;
    let mut relevant: Vec<Vec<f64>> = Vec::new();
    for mask in 1u32..(1 << k) {
        let c: Vec<i64> = (0..k).map(|i| i64::from(mask >> i & 1)).collect();
        let w = fl.point(&c);
        let neg: Vec<f64> = w.iter().map(|x| -x).collect();
        let near = double.closest(&neg, Norm::Euclidean, DEFAULT_MAX_RANK)?;
        let shortest = near.distance;
        let ties = double.ball(&neg, shortest)?;
        if ties.len() == 2 {
            let v: Vec<f64> = w.iter().zip(&near.point).map(|(a, b)| a + b).collect();
            relevant.push(v.iter().map(|x| -x).collect());
            relevant.push(v);
        }
    }
    let half_sq: Vec<f64> = relevant.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>() / 2.0).collect();
    let scale = half_sq.iter().fold(1.0f64, |a, &x| a.max(x));
    let mut best = (0.0, vec![0.0; m]);
    for pick in combinations(relevant.len(), k) {
        let a = DMatrix::from_fn(k, k, |r, j| {
            let v = &relevant[pick[r]];
            (0..m).map(|i| v[i] * fl.basis()[(i, j)]).sum::<f64>()
        });
        let rhs = DVector::from_iterator(k, pick.iter().map(|&p| half_sq[p]));
        let lu = a.lu();
        if lu.determinant().abs() < 1e-9 * scale.powi(k as i32) {
            continue;
        }
        let Some(u) = lu.solve(&rhs) else { continue };
        let x = fl.basis() * u;
        let inside = relevant
            .iter()
            .zip(&half_sq)
            .all(|(v, h)| v.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>() <= h + 1e-9 * scale);
        let r = x.norm();
        if inside && r > best.0 {
            best = (r, x.as_slice().to_vec());
        }
    }
    Ok(CoveringRadius { radius: best.0, upper: best.0, deep_hole: best.1, certified: true })
}

#[derive(PartialEq)]
struct Cell {
    upper: f64,
    lo: Vec<f64>,
    width: f64,
}

impl Eq for Cell {}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.upper.total_cmp(&other.upper)
    }
}

/// Maximizes the 1-Lipschitz function `d(·, L)` over the fundamental cell.
fn branch_and_bound(fl: &FloatLattice, norm: Norm) -> Result<CoveringRadius> {
    let k = fl.rank();
    let lens: Vec<f64> = (0..k)
        .map(|j| norm.eval(&fl.basis().column(j).iter().copied().collect::<Vec<_>>()))
        .collect();
    let diameter: f64 = lens.iter().sum();
    let tol = GRID_FRACTION * diameter;
    let eval = |lo: &[f64], w: f64| -> (f64, Vec<f64>) {
        let u = DVector::from_iterator(k, lo.iter().map(|a| a + w / 2.0));
        let x: Vec<f64> = (fl.basis() * u).as_slice().to_vec();
        (dist(fl, &x, norm), x)
    };
    let slack = |w: f64| w / 2.0 * diameter;
    let (f0, x0) = eval(&vec![0.0; k], 1.0);
    let mut best = (f0, x0);
    let mut heap = BinaryHeap::new();
    heap.push(Cell { upper: f0 + slack(1.0), lo: vec![0.0; k], width: 1.0 });
    let mut boxes = 1usize;
    while let Some(cell) = heap.pop() {
        if cell.upper <= best.0 + tol {
            return Ok(CoveringRadius { radius: best.0, upper: cell.upper.max(best.0), deep_hole: best.1, certified: true });
        }
        let w = cell.width / 2.0;
        for mask in 0u32..(1 << k) {
            let lo: Vec<f64> = (0..k).map(|i| cell.lo[i] + if mask >> i & 1 == 1 { w } else { 0.0 }).collect();
            let (f, x) = eval(&lo, w);
            if f > best.0 {
                best = (f, x);
            }
            if f + slack(w) > best.0 + tol {
                heap.push(Cell { upper: f + slack(w), lo, width: w });
            }
            boxes += 1;
        }
        if boxes > MAX_BRANCH_BOXES {
            return Err(Error::TooLarge("covering-radius certification budget exhausted".into()));
        }
    }
    Ok(CoveringRadius { radius: best.0, upper: best.0 + tol, deep_hole: best.1, certified: true })
}

fn estimate(l: &Lattice, norm: Norm, samples: usize, seed: u64) -> Result<CoveringRadius> {
    let fl = l.float()?;
    let k = fl.rank();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let at = |u: &[f64]| -> (f64, Vec<f64>) {
        let x: Vec<f64> = (fl.basis() * DVector::from_column_slice(u)).as_slice().to_vec();
        (dist(&fl, &x, norm), x)
    };
    let mut best = (-1.0, Vec::new());
    for _ in 0..samples.max(1) {
        let mut u: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let (mut f, _) = at(&u);
        let mut step = 0.1;
        while step > 1e-6 {
            let mut moved = false;
            for i in 0..k {
                for s in [step, -step] {
                    u[i] += s;
                    let (g, _) = at(&u);
                    if g > f + 1e-15 {
                        f = g;
                        moved = true;
                    } else {
                        u[i] -= s;
                    }
                }
            }
            if !moved {
                step /= 2.0;
            }
        }
        let (f, x) = at(&u);
        if f > best.0 {
            best = (f, x);
        }
    }
    Ok(CoveringRadius { radius: best.0, upper: f64::INFINITY, deep_hole: best.1, certified: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::tsparse_lattice;

    fn identity(m: usize) -> Lattice {
        let cols: Vec<Vec<i64>> = (0..m).map(|i| (0..m).map(|j| i64::from(i == j)).collect()).collect();
        lattice_from_columns(&cols).unwrap()
    }

    #[test]
    fn integer_lattice_half() {
        for m in 1..=4 {
            let r = covering_radius(&identity(m), Norm::Sup, CoveringMode::Certified).unwrap();
            assert_eq!(r.radius, 0.5);
            let e = covering_radius(&identity(m), Norm::Euclidean, CoveringMode::Certified).unwrap();
            assert!((e.radius - (m as f64).sqrt() / 2.0).abs() < 1e-9, "m={m} {}", e.radius);
        }
    }

    #[test]
    fn one_dimensional_span() {
        let l = lattice_from_columns(&[vec![5], vec![2]]).unwrap();
        for norm in [Norm::Sup, Norm::Euclidean] {
            assert_eq!(covering_radius(&l, norm, CoveringMode::Certified).unwrap().radius, 0.5);
        }
    }

    #[test]
    fn tsparse_sup_radius_is_one() {
        for m in 2..=4 {
            for t in 1..m {
                let l = tsparse_lattice(m, t).unwrap();
                let r = covering_radius(&l, Norm::Sup, CoveringMode::Certified).unwrap();
                // t = 1 gives ℤᵐ itself
                let want = if t == 1 { 0.5 } else { 1.0 };
                assert!((r.radius - want).abs() < 1e-12, "m={m} t={t}: {}", r.radius);
            }
        }
    }

    #[test]
    fn hexagonal_euclidean() {
        // A2 root lattice in the plane x+y+z=0: covering radius √(2/3).
        let l = lattice_from_columns(&[vec![1, -1, 0], vec![0, 1, -1]]).unwrap();
        let r = covering_radius(&l, Norm::Euclidean, CoveringMode::Certified).unwrap();
        assert!((r.radius - (2.0f64 / 3.0).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn degenerate_sup_by_branch_and_bound() {
        let l = lattice_from_columns(&[vec![1, -1, 0], vec![0, 1, -1]]).unwrap();
        let r = covering_radius(&l, Norm::Sup, CoveringMode::Certified).unwrap();
        assert!(r.upper - r.radius <= 1e-3 * 4.0 + 1e-12);
        let e = covering_radius(&l, Norm::Euclidean, CoveringMode::Certified).unwrap();
        assert!(r.radius <= e.radius + 1e-9 && r.upper >= e.radius / 3f64.sqrt() - 1e-9);
    }

    #[test]
    fn estimate_is_a_lower_bound() {
        let l = tsparse_lattice(4, 2).unwrap();
        let e = covering_radius(&l, Norm::Sup, CoveringMode::Estimate { samples: 20, seed: 3 }).unwrap();
        assert!(!e.certified && e.radius <= 1.0 + 1e-12 && e.radius > 0.5);
    }

    #[test]
    fn rank_five_is_refused() {
        assert!(covering_radius(&identity(5), Norm::Sup, CoveringMode::Certified).is_err());
    }
}
