//! Exhaustive closest-vector search for small-rank float lattices.

use nalgebra::{DMatrix, DVector};

use super::Norm;
use crate::error::{Error, Result};

/// Cap on the number of coefficient vectors examined by one search.
const MAX_BOX_POINTS: f64 = 5.0e7;

#[derive(Clone, Debug, PartialEq)]
pub struct ClosestVector {
    pub coefficients: Vec<i64>,
    pub point: Vec<f64>,
    pub distance: f64,
}

/// A lattice with a float basis (`m × k`, independent columns) and its
/// pseudo-inverse.
#[derive(Clone, Debug)]
pub struct FloatLattice {
    basis: DMatrix<f64>,
    pinv: DMatrix<f64>,
    pinv_row_norms: Vec<f64>,
}

impl FloatLattice {
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let gram = basis.transpose() * &basis;
        let ginv = gram
            .try_inverse()
            .ok_or_else(|| Error::DegenerateLattice("dependent basis vectors".into()))?;
        let pinv = ginv * basis.transpose();
        let pinv_row_norms = (0..pinv.nrows()).map(|i| pinv.row(i).norm()).collect();
        Ok(Self { basis, pinv, pinv_row_norms })
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn point(&self, c: &[i64]) -> Vec<f64> {
        let c = DVector::from_iterator(c.len(), c.iter().map(|&x| x as f64));
        (&self.basis * c).as_slice().to_vec()
    }

    /// Real coefficients of the projection of `x` onto the span.
    pub fn coefficients(&self, x: &[f64]) -> Vec<f64> {
        (&self.pinv * DVector::from_column_slice(x)).as_slice().to_vec()
    }

    /// Same lattice with an LLL-reduced basis (`δ = 3/4`). Short, nearly
    /// orthogonal bases keep the closest-vector box small.
    pub fn lll_reduced(&self) -> Result<FloatLattice> {
        let k = self.rank();
        let mut b: Vec<DVector<f64>> = (0..k).map(|j| self.basis.column(j).into_owned()).collect();
        let gso = |b: &[DVector<f64>]| {
            let mut bs: Vec<DVector<f64>> = Vec::with_capacity(b.len());
            let mut mu = vec![vec![0.0; b.len()]; b.len()];
            for i in 0..b.len() {
                let mut v = b[i].clone();
                for j in 0..i {
                    mu[i][j] = b[i].dot(&bs[j]) / bs[j].norm_squared();
                    v -= &bs[j] * mu[i][j];
                }
                bs.push(v);
            }
            (bs, mu)
        };
        let mut i = 1;
        let mut guard = 0usize;
        while i < k {
            guard += 1;
            if guard > 100_000 {
                break;
            }
            for j in (0..i).rev() {
                let (_, mu) = gso(&b);
                let r = mu[i][j].round();
                if r != 0.0 {
                    let bj = b[j].clone();
                    b[i] -= bj * r;
                }
            }
            let (bs, mu) = gso(&b);
            if bs[i].norm_squared() >= (0.75 - mu[i][i - 1].powi(2)) * bs[i - 1].norm_squared() {
                i += 1;
            } else {
                b.swap(i, i - 1);
                i = (i - 1).max(1);
            }
        }
        FloatLattice::new(DMatrix::from_columns(&b))
    }

    fn check_span(&self, target: &[f64]) -> Result<()> {
        let u = self.coefficients(target);
        let back = &self.basis * DVector::from_column_slice(&u);
        let scale = target.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        let resid = back.iter().zip(target).fold(0.0f64, |a, (p, t)| a.max((p - t).abs()));
        if resid > 1e-9 * scale {
            return Err(Error::Invalid("target is not in the span of the lattice".into()));
        }
        Ok(())
    }

    /// Exact (up to float rounding) closest point; ties go to the
    /// lexicographically smallest coefficient vector.
    pub fn closest(&self, target: &[f64], norm: Norm, max_rank: usize) -> Result<ClosestVector> {
        let k = self.rank();
        if k > max_rank {
            return Err(Error::TooLarge(format!("closest vector with rank {k} > {max_rank}")));
        }
        if target.len() != self.ambient_dim() {
            return Err(Error::Dimension("target length differs from ambient dimension".into()));
        }
        self.check_span(target)?;
        let u = self.coefficients(target);
        let c0: Vec<i64> = u.iter().map(|x| x.round() as i64).collect();
        let r0 = norm.eval(&diff(&self.point(&c0), target));
        let reach = norm.distortion(self.ambient_dim()) * r0 * (1.0 + 1e-12) + 1e-12;
        let (lo, hi) = self.box_around(&u, reach)?;
        let mut best: Option<ClosestVector> = None;
        let tol = 1e-12 * (1.0 + r0);
        self.walk_box(&lo, &hi, target, |c, resid| {
            let d = norm.eval(resid);
            if best.as_ref().is_none_or(|b| d < b.distance - tol) {
                best = Some(ClosestVector { coefficients: c.to_vec(), point: Vec::new(), distance: d });
            }
        });
        let mut best = best.expect("coefficient box contains the rounded point");
        best.point = self.point(&best.coefficients);
        Ok(best)
    }

    /// All coefficient vectors whose lattice point lies within Euclidean
    /// distance `radius` of `center`, in lexicographic order.
    pub fn ball(&self, center: &[f64], radius: f64) -> Result<Vec<Vec<i64>>> {
        let u = self.coefficients(center);
        let (lo, hi) = self.box_around(&u, radius * (1.0 + 1e-12) + 1e-12)?;
        let mut out = Vec::new();
        let r2 = radius * radius * (1.0 + 1e-9) + 1e-12;
        self.walk_box(&lo, &hi, center, |c, resid| {
            if resid.iter().map(|x| x * x).sum::<f64>() <= r2 {
                out.push(c.to_vec());
            }
        });
        Ok(out)
    }

    pub fn in_voronoi(&self, theta: &[f64]) -> bool {
        let nt = Norm::Euclidean.eval(theta);
        if nt == 0.0 {
            return true;
        }
        let longest = (0..self.rank()).map(|j| self.basis.column(j).norm()).fold(0.0, f64::max);
        let Ok(cands) = self.ball(&vec![0.0; theta.len()], 2.0 * nt + longest) else {
            return false;
        };
        let slack = 1e-12 * (1.0 + nt * nt);
        cands.iter().all(|c| {
            let v = self.point(c);
            let d2: f64 = theta.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum();
            nt * nt <= d2 + slack
        })
    }

    fn box_around(&self, u: &[f64], reach: f64) -> Result<(Vec<i64>, Vec<i64>)> {
        let mut lo = Vec::with_capacity(u.len());
        let mut hi = Vec::with_capacity(u.len());
        let mut count = 1.0f64;
        for (x, w) in u.iter().zip(&self.pinv_row_norms) {
            let a = (x - w * reach - 1e-9).ceil() as i64;
            let b = (x + w * reach + 1e-9).floor() as i64;
            let (a, b) = if a > b { (x.round() as i64, x.round() as i64) } else { (a, b) };
            count *= (b - a + 1) as f64;
            lo.push(a);
            hi.push(b);
        }
        if count > MAX_BOX_POINTS {
            return Err(Error::TooLarge(format!("coefficient box of {count:.0} points")));
        }
        Ok((lo, hi))
    }

    /// Visits every coefficient vector in `[lo, hi]` in lexicographic order,
    /// passing `B·c − target`.
    fn walk_box(&self, lo: &[i64], hi: &[i64], target: &[f64], mut visit: impl FnMut(&[i64], &[f64])) {
        let k = lo.len();
        let m = self.ambient_dim();
        let mut c = lo.to_vec();
        let mut resid = diff(&self.point(&c), target);
        loop {
            visit(&c, &resid);
            let mut i = k;
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                if c[i] < hi[i] {
                    c[i] += 1;
                    for r in 0..m {
                        resid[r] += self.basis[(r, i)];
                    }
                    break;
                }
                let back = (c[i] - lo[i]) as f64;
                c[i] = lo[i];
                for r in 0..m {
                    resid[r] -= back * self.basis[(r, i)];
                }
            }
        }
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
