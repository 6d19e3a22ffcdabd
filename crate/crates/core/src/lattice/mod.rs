//! Lattices spanned by integer column supports, their duals, closest vectors,
//! covering radii and Voronoi membership.
//!
//! Bases are exact rationals. Distances are floating point.

mod covering;
mod cvp;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, Q};

pub use covering::{covering_radius, CoveringMode, CoveringRadius};
pub use cvp::{ClosestVector, FloatLattice};

/// Largest rank handled by exhaustive closest-vector enumeration.
pub const DEFAULT_MAX_RANK: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    Sup,
    Euclidean,
}

impl Norm {
    /// `R_*`: the longest Euclidean vector in the unit ball of this norm on ℝᵐ.
    pub fn distortion(self, m: usize) -> f64 {
        match self {
            Norm::Sup => (m as f64).sqrt(),
            Norm::Euclidean => 1.0,
        }
    }

    pub fn eval(self, v: &[f64]) -> f64 {
        match self {
            Norm::Sup => v.iter().fold(0.0, |a: f64, x| a.max(x.abs())),
            Norm::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    m: usize,
    /// Basis vectors (columns of `B`), each of length `m`.
    basis: Vec<Vec<Q>>,
}

impl Lattice {
    /// Wraps linearly independent basis columns.
    pub fn from_basis(m: usize, basis: Vec<Vec<Q>>) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::ZeroLattice);
        }
        if basis.iter().any(|b| b.len() != m) {
            return Err(Error::Dimension("basis vector length differs from ambient dimension".into()));
        }
        if exact::rank(&basis) != basis.len() {
            return Err(Error::Invalid("basis vectors are linearly dependent".into()));
        }
        Ok(Self { m, basis })
    }

    pub fn ambient_dim(&self) -> usize {
        self.m
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<Q>] {
        &self.basis
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.rank() == self.m
    }

    /// `B` as an `m × k` float matrix.
    pub fn basis_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.m, self.rank(), |i, j| exact::to_f64(&self.basis[j][i]))
    }

    pub fn gram(&self) -> Vec<Vec<Q>> {
        let k = self.rank();
        (0..k)
            .map(|a| {
                (0..k)
                    .map(|b| {
                        self.basis[a]
                            .iter()
                            .zip(&self.basis[b])
                            .fold(Q::zero(), |s, (x, y)| s + x * y)
                    })
                    .collect()
            })
            .collect()
    }

    /// `det(BᵀB)`, exactly.
    pub fn gram_determinant(&self) -> Q {
        exact::det(&self.gram())
    }

    /// `√det(BᵀB)`.
    pub fn determinant(&self) -> f64 {
        exact::to_f64(&self.gram_determinant()).sqrt()
    }

    pub fn is_integral(&self) -> bool {
        self.basis.iter().flatten().all(|x| x.is_integer())
    }

    /// Least common denominator of the basis entries.
    pub fn denominator(&self) -> BigInt {
        self.basis.iter().flatten().fold(BigInt::one(), |l, x| l.lcm(x.denom()))
    }

    pub fn scaled(&self, s: &Q) -> Lattice {
        Lattice {
            m: self.m,
            basis: self.basis.iter().map(|b| b.iter().map(|x| x * s).collect()).collect(),
        }
    }

    /// Coefficients of `v` in this basis when `v` lies in the real span.
    pub fn coordinates(&self, v: &[Q]) -> Option<Vec<Q>> {
        let k = self.rank();
        let mut aug: Vec<Vec<Q>> = (0..self.m)
            .map(|i| {
                let mut row: Vec<Q> = (0..k).map(|j| self.basis[j][i].clone()).collect();
                row.push(v[i].clone());
                row
            })
            .collect();
        let piv = exact::rref(&mut aug);
        if piv.last() == Some(&k) {
            return None;
        }
        let mut c = vec![Q::zero(); k];
        for (r, &p) in piv.iter().enumerate() {
            c[p] = aug[r][k].clone();
        }
        Some(c)
    }

    pub fn contains(&self, v: &[Q]) -> bool {
        v.len() == self.m && self.coordinates(v).is_some_and(|c| c.iter().all(|x| x.is_integer()))
    }

    pub fn contains_i64(&self, v: &[i64]) -> bool {
        let v: Vec<Q> = v.iter().map(|&x| exact::q(x)).collect();
        self.contains(&v)
    }

    pub fn float(&self) -> Result<FloatLattice> {
        FloatLattice::new(self.basis_matrix())
    }

    pub fn closest_vector(&self, target: &[f64], norm: Norm) -> Result<ClosestVector> {
        closest_vector(self, target, norm)
    }

    pub fn to_json(&self) -> LatticeJson {
        LatticeJson {
            ambient_dim: self.m,
            rank: self.rank(),
            basis: (0..self.m)
                .map(|i| self.basis.iter().map(|b| exact::format_q(&b[i])).collect())
                .collect(),
        }
    }

    pub fn from_json(j: &LatticeJson) -> Result<Self> {
        if j.basis.len() != j.ambient_dim || j.basis.iter().any(|r| r.len() != j.rank) {
            return Err(Error::Dimension("basis shape does not match ambient_dim × rank".into()));
        }
        let basis = (0..j.rank)
            .map(|c| j.basis.iter().map(|row| exact::parse_q(&row[c])).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Lattice::from_basis(j.ambient_dim, basis)
    }
}

/// Serialized lattice: `basis[i][j]` is row `i` of the `m × k` basis matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeJson {
    pub ambient_dim: usize,
    pub rank: usize,
    pub basis: Vec<Vec<String>>,
}

/// Dual of a nondegenerate lattice, remembering its parent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualLattice {
    pub lattice: Lattice,
    pub parent: Lattice,
}

impl std::ops::Deref for DualLattice {
    type Target = Lattice;
    fn deref(&self) -> &Lattice {
        &self.lattice
    }
}

/// Canonical basis of the integer span: column-style Hermite normal form.
///
/// Column `j` has its first nonzero entry (positive) in pivot row `r_j`,
/// pivot rows increase, and entries of earlier columns in row `r_j` lie in
/// `[0, B[r_j][j])`.
pub fn lattice_from_columns(vectors: &[Vec<i64>]) -> Result<Lattice> {
    let m = vectors.first().map(Vec::len).ok_or(Error::ZeroLattice)?;
    if vectors.iter().any(|v| v.len() != m) {
        return Err(Error::Dimension("columns of different lengths".into()));
    }
    let mut uniq: Vec<&Vec<i64>> = vectors.iter().filter(|v| v.iter().any(|&x| x != 0)).collect();
    uniq.sort();
    uniq.dedup();
    let cols: Vec<Vec<BigInt>> =
        uniq.into_iter().map(|v| v.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let h = column_hnf(cols, m);
    if h.is_empty() {
        return Err(Error::ZeroLattice);
    }
    let basis = h.into_iter().map(|c| c.into_iter().map(Q::from_integer).collect()).collect();
    Ok(Lattice { m, basis })
}

fn column_hnf(mut a: Vec<Vec<BigInt>>, m: usize) -> Vec<Vec<BigInt>> {
    let mut piv = 0;
    for i in 0..m {
        loop {
            let mut rest: Vec<Vec<BigInt>> = a.drain(piv..).collect();
            rest.retain(|c| c.iter().any(|x| !x.is_zero()));
            let best = rest
                .iter()
                .enumerate()
                .filter(|(_, c)| !c[i].is_zero())
                .min_by(|(_, x), (_, y)| x[i].abs().cmp(&y[i].abs()))
                .map(|(j, _)| j);
            let Some(best) = best else {
                a.extend(rest);
                break;
            };
            rest.swap(0, best);
            let p = rest[0].clone();
            let mut done = true;
            for c in rest.iter_mut().skip(1) {
                if c[i].is_zero() {
                    continue;
                }
                let f = c[i].div_floor(&p[i]);
                for (x, y) in c.iter_mut().zip(&p) {
                    *x -= &f * y;
                }
                if !c[i].is_zero() {
                    done = false;
                }
            }
            a.extend(rest);
            if done {
                break;
            }
        }
        if piv < a.len() && !a[piv][i].is_zero() {
            if a[piv][i].is_negative() {
                for x in a[piv].iter_mut() {
                    *x = -x.clone();
                }
            }
            let p = a[piv].clone();
            for c in a[..piv].iter_mut() {
                let f = c[i].div_floor(&p[i]);
                if !f.is_zero() {
                    for (x, y) in c.iter_mut().zip(&p) {
                        *x -= &f * y;
                    }
                }
            }
            piv += 1;
        }
    }
    a.truncate(piv);
    a
}

/// Basis `B(BᵀB)⁻¹`; requires a nondegenerate lattice.
pub fn dual_lattice(l: &Lattice) -> Result<DualLattice> {
    if !l.is_nondegenerate() {
        return Err(Error::DegenerateLattice(format!(
            "rank {} in dimension {}; restrict to the span first",
            l.rank(),
            l.m
        )));
    }
    let ginv = exact::inverse(&l.gram()).ok_or_else(|| Error::DegenerateLattice("singular Gram matrix".into()))?;
    let k = l.rank();
    let basis = (0..k)
        .map(|j| {
            (0..l.m)
                .map(|i| (0..k).fold(Q::zero(), |s, a| s + &l.basis[a][i] * &ginv[a][j]))
                .collect()
        })
        .collect();
    Ok(DualLattice { lattice: Lattice { m: l.m, basis }, parent: l.clone() })
}

/// Closest lattice point by exhaustive search over a coefficient box.
pub fn closest_vector(l: &Lattice, target: &[f64], norm: Norm) -> Result<ClosestVector> {
    if target.len() != l.m {
        return Err(Error::Dimension("target length differs from ambient dimension".into()));
    }
    l.float()?.closest(target, norm, DEFAULT_MAX_RANK)
}

/// Whether `θ` is at least as close to the origin as to every other dual point.
pub fn in_voronoi(dual: &DualLattice, theta: &[f64]) -> Result<bool> {
    if !dual.is_nondegenerate() {
        return Err(Error::DegenerateLattice("Voronoi test needs a full-rank lattice".into()));
    }
    Ok(dual.float()?.in_voronoi(theta))
}

/// Integral vectors spanning `ker A` over ℝ, one per free column of the
/// reduced echelon form; each is primitive with a positive leading entry.
pub fn integer_kernel_basis(rows: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = rows.first().map_or(0, Vec::len);
    let mut a = exact::from_i64_rows(rows);
    let piv = exact::rref(&mut a);
    let free: Vec<usize> = (0..n).filter(|c| !piv.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); n];
            v[f] = Q::one();
            for (r, &p) in piv.iter().enumerate() {
                v[p] = -a[r][f].clone();
            }
            exact::primitive_integer(&v)
                .into_iter()
                .map(|x| x.to_i64().expect("kernel entry exceeds i64"))
                .collect()
        })
        .collect()
}

/// The lattice `{x ∈ ℤᵐ : Σxᵢ ≡ 0 mod t}` spanned by `t`-subset indicators.
pub fn tsparse_lattice(m: usize, t: usize) -> Result<Lattice> {
    let cols: Vec<Vec<i64>> = crate::combinatorics::combinations(m, t)
        .iter()
        .map(|s| crate::combinatorics::indicator(m, s))
        .collect();
    lattice_from_columns(&cols)
}
