//! Exact laws of the signed sums `Y_M = My`, `y` uniform on `{±½}ⁿ`, and
//! their comparison with the lattice Gaussian
//! `G_M(λ) = 2^{m/2} det(L) / (π^{m/2} √det(MMᵀ)) · exp(−2λᵀ(MMᵀ)⁻¹λ)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::distributions::ColumnDistribution;
use crate::error::{Error, Result};
use crate::exact::{format_q, Q};
use crate::lattice::{FloatLattice, Lattice};
use crate::matrix::{Entry, IntMatrix, Matrix, RealMatrix};

pub const DEFAULT_TABLE_CAP: usize = 10_000_000;

/// Constant `C` in `|log cos(πx) + π²x²/2| ≤ C x⁴` on `|x| ≤ 0.4`.
pub const TAYLOR_CONSTANT: f64 = 16.0;

/// Exact law of `Y_M`. Points are stored doubled, `2λ = Σ ±x_j`, with the
/// number of colorings reaching each; probabilities are counts over `2ⁿ`.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedSumTable {
    m: usize,
    n: usize,
    counts: BTreeMap<Vec<i64>, BigUint>,
}

impl SignedSumTable {
    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn columns(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `(2λ, count)` in lexicographic order of `2λ`.
    pub fn doubled_points(&self) -> impl Iterator<Item = (&[i64], &BigUint)> {
        self.counts.iter().map(|(k, c)| (k.as_slice(), c))
    }

    pub fn probability(&self, doubled: &[i64]) -> Q {
        match self.counts.get(doubled) {
            Some(c) => Q::new(c.clone().into(), (BigUint::one() << self.n).into()),
            None => Q::zero(),
        }
    }

    pub fn probability_f64(&self, doubled: &[i64]) -> f64 {
        self.counts.get(doubled).map_or(0.0, |c| scaled_count(c, self.n))
    }

    pub fn total_mass(&self) -> Q {
        let total: BigUint = self.counts.values().sum();
        Q::new(total.into(), (BigUint::one() << self.n).into())
    }

    pub fn is_symmetric(&self) -> bool {
        self.counts.iter().all(|(k, c)| {
            let neg: Vec<i64> = k.iter().map(|x| -x).collect();
            self.counts.get(&neg) == Some(c)
        })
    }

    /// `Σ_λ P(λ) e^{2πi⟨λ,θ⟩}`.
    pub fn fourier(&self, theta: &[f64]) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for (k, c) in &self.counts {
            let a = PI * k.iter().zip(theta).map(|(&x, t)| x as f64 * t).sum::<f64>();
            s += Complex64::new(a.cos(), a.sin()) * scaled_count(c, self.n);
        }
        s
    }
}

/// `c / 2ⁿ` in floating point without overflowing for large `n`.
fn scaled_count(c: &BigUint, n: usize) -> f64 {
    let bits = c.bits();
    let shift = bits.saturating_sub(64);
    let top = (c >> shift).to_u64().unwrap_or(u64::MAX) as f64;
    top * 2f64.powi(shift as i32 - n as i32)
}

pub fn signed_sum_distribution(m: &IntMatrix) -> Result<SignedSumTable> {
    signed_sum_distribution_with(m, DEFAULT_TABLE_CAP)
}

/// Folds the columns in, one group of equal columns at a time: `c` copies
/// of `x` contribute `(2k − c)·x` with weight `C(c, k)`.
pub fn signed_sum_distribution_with(m: &IntMatrix, cap: usize) -> Result<SignedSumTable> {
    let rows = m.rows();
    let mut groups: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    for c in m.columns() {
        *groups.entry(c.to_vec()).or_default() += 1;
    }
    let mut counts: BTreeMap<Vec<i64>, BigUint> = BTreeMap::new();
    counts.insert(vec![0; rows], BigUint::one());
    for (x, c) in groups {
        let mut binom = vec![BigUint::one(); c + 1];
        for k in 1..c {
            binom[k] = &binom[k - 1] * BigUint::from(c - k + 1) / BigUint::from(k);
        }
        let mut next: BTreeMap<Vec<i64>, BigUint> = BTreeMap::new();
        for (p, w) in &counts {
            for (k, b) in binom.iter().enumerate() {
                let f = 2 * k as i64 - c as i64;
                let q: Vec<i64> = p.iter().zip(&x).map(|(a, b)| a + f * b).collect();
                *next.entry(q).or_default() += w * b;
            }
            if next.len() > cap {
                return Err(Error::StateCap { cap });
            }
        }
        counts = next;
    }
    Ok(SignedSumTable { m: rows, n: m.cols(), counts })
}

/// `Ŷ_M(θ) = Π_j cos(π⟨x_j, θ⟩)`.
pub fn char_fn_signed_sum<T: Entry>(m: &Matrix<T>, theta: &[f64]) -> f64 {
    m.columns()
        .map(|c| (PI * c.iter().zip(theta).map(|(x, t)| x.to_f64().unwrap_or(f64::NAN) * t).sum::<f64>()).cos())
        .product()
}

/// `G_M` for a fixed `MMᵀ` and lattice determinant.
#[derive(Clone, Debug)]
pub struct LatticeGaussian {
    inv: DMatrix<f64>,
    peak: f64,
}

impl LatticeGaussian {
    pub fn new(mmt: &DMatrix<f64>, det_l: f64) -> Result<Self> {
        let m = mmt.nrows();
        let det = mmt.determinant();
        let inv = mmt.clone().try_inverse().filter(|_| det > 0.0);
        let Some(inv) = inv else {
            return Err(Error::DegenerateLattice("MMᵀ is singular".into()));
        };
        let peak = 2f64.powf(m as f64 / 2.0) * det_l / (PI.powf(m as f64 / 2.0) * det.sqrt());
        Ok(Self { inv, peak })
    }

    pub fn from_matrix<T: Entry>(m: &Matrix<T>, det_l: f64) -> Result<Self> {
        let a = m.to_nalgebra();
        Self::new(&(&a * a.transpose()), det_l)
    }

    /// `λᵀ(MMᵀ)⁻¹λ`.
    pub fn quadratic(&self, lambda: &[f64]) -> f64 {
        let v = DVector::from_column_slice(lambda);
        (v.transpose() * &self.inv * &v)[(0, 0)]
    }

    pub fn at_zero(&self) -> f64 {
        self.peak
    }

    pub fn eval(&self, lambda: &[f64]) -> f64 {
        self.peak * (-2.0 * self.quadratic(lambda)).exp()
    }
}

pub fn lattice_gaussian<T: Entry>(m: &Matrix<T>, l: &Lattice, lambda: &[f64]) -> Result<f64> {
    Ok(LatticeGaussian::from_matrix(m, l.determinant())?.eval(lambda))
}

/// Doubled coset points `2λ ∈ 2L − M·1` with `λᵀ(MMᵀ)⁻¹λ ≤ q`.
fn coset_points_within(m: &IntMatrix, l: &Lattice, mmt: &DMatrix<f64>, q: f64) -> Result<Vec<Vec<i64>>> {
    if !l.is_nondegenerate() {
        return Err(Error::DegenerateLattice("coset enumeration needs a full-rank lattice".into()));
    }
    if !l.is_integral() {
        return Err(Error::Invalid("coset enumeration needs an integral lattice".into()));
    }
    let inv = mmt.clone().try_inverse().ok_or_else(|| Error::DegenerateLattice("MMᵀ is singular".into()))?;
    let chol = nalgebra::Cholesky::new(inv).ok_or_else(|| Error::DegenerateLattice("MMᵀ is not positive".into()))?;
    let w = chol.l().transpose();
    let b = l.basis_matrix();
    let half: Vec<f64> = m.row_sums().iter().map(|&s| s as f64 / 2.0).collect();
    let center = (&w * DVector::from_column_slice(&half)).as_slice().to_vec();
    let fl = FloatLattice::new(&w * &b)?;
    let coeffs = fl.ball(&center, q.max(0.0).sqrt())?;
    let sums = m.row_sums();
    Ok(coeffs
        .into_iter()
        .map(|c| {
            let p = (&b * DVector::from_iterator(c.len(), c.iter().map(|&x| x as f64))).as_slice().to_vec();
            p.iter().zip(&sums).map(|(x, s)| 2 * x.round() as i64 - s).collect()
        })
        .collect())
}

/// `Σ G_M(λ)` over coset points with `λᵀ(½MMᵀ)⁻¹λ ≤ k²`; close to 1 for
/// `k ≈ 6` when the lattice is fine compared to the spread of `Y_M`.
pub fn gaussian_coset_mass(m: &IntMatrix, l: &Lattice, k: f64) -> Result<f64> {
    let a = m.to_nalgebra();
    let mmt = &a * a.transpose();
    let g = LatticeGaussian::new(&mmt, l.determinant())?;
    let pts = coset_points_within(m, l, &mmt, k * k / 2.0)?;
    Ok(pts.iter().map(|p| g.eval(&halve(p))).sum())
}

fn halve(p: &[i64]) -> Vec<f64> {
    p.iter().map(|&x| x as f64 / 2.0).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointRecord {
    pub lambda: Vec<f64>,
    /// Exact probability as "p/q".
    pub p_exact: String,
    pub p: f64,
    pub g: f64,
    pub abs_dev: f64,
    pub bulk: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussianComparison {
    pub m: usize,
    pub n: usize,
    /// `L`, the isotropic radius of the column distribution.
    pub radius: f64,
    pub g0: f64,
    /// `G_M(0)·2m²L²/n`.
    pub bound: f64,
    pub max_abs_dev: f64,
    pub argmax: Vec<f64>,
    pub pass: bool,
    pub bulk_points: usize,
    /// Every bulk point has positive probability.
    pub bulk_positive: bool,
    /// Records for the bulk points.
    pub points: Vec<PointRecord>,
}

impl GaussianComparison {
    pub fn write_points_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["lambda", "p_exact", "p", "g", "abs_dev", "bulk"])?;
        for r in &self.points {
            let lam: Vec<String> = r.lambda.iter().map(|x| x.to_string()).collect();
            out.write_record([
                lam.join(" "),
                r.p_exact.clone(),
                r.p.to_string(),
                r.g.to_string(),
                r.abs_dev.to_string(),
                r.bulk.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Compares the exact law of `Y_M` with `G_M` over the coset.
///
/// `P(λ) − G_M(λ)` and the bound are invariant under a common linear change
/// of coordinates, so the comparison runs on the integer columns with the
/// support lattice of `dist`; only the radius `L` is taken from the
/// isotropic position. Coset points off the table have `P = 0`; outside the
/// bulk `G_M` is already below the bound, so only bulk points need checking.
pub fn llt_compare(m: &IntMatrix, dist: &ColumnDistribution) -> Result<GaussianComparison> {
    if dist.dim() != m.rows() {
        return Err(Error::Dimension(format!("distribution has dimension {}, matrix {} rows", dist.dim(), m.rows())));
    }
    let rows = m.rows();
    let n = m.cols();
    let lattice = dist.support_lattice()?;
    let radius = dist.isotropize()?.radius;
    let a = m.to_nalgebra();
    let mmt = &a * a.transpose();
    let g = LatticeGaussian::new(&mmt, lattice.determinant())?;
    let table = signed_sum_distribution(m)?;
    let level = 2.0 * (rows * rows) as f64 * radius * radius / n as f64;
    let bound = g.at_zero() * level;

    let mut max_abs_dev = 0.0f64;
    let mut argmax = vec![0.0; rows];
    for (k, c) in table.doubled_points() {
        let lam = halve(k);
        let d = (scaled_count(c, n) - g.eval(&lam)).abs();
        if d > max_abs_dev {
            max_abs_dev = d;
            argmax = lam;
        }
    }
    // Bulk: exp(−2q) > level, i.e. q < −ln(level)/2.
    let mut points = Vec::new();
    if level < 1.0 {
        let qmax = -level.ln() / 2.0;
        for k in coset_points_within(m, &lattice, &mmt, qmax)? {
            let lam = halve(&k);
            if g.quadratic(&lam) >= qmax {
                continue;
            }
            let p = table.probability_f64(&k);
            let gv = g.eval(&lam);
            if p == 0.0 && gv > max_abs_dev {
                max_abs_dev = gv;
                argmax = lam.clone();
            }
            points.push(PointRecord {
                p_exact: format_q(&table.probability(&k)),
                p,
                g: gv,
                abs_dev: (p - gv).abs(),
                bulk: true,
                lambda: lam,
            });
        }
    }
    Ok(GaussianComparison {
        m: rows,
        n,
        radius,
        g0: g.at_zero(),
        bound,
        max_abs_dev,
        argmax,
        pass: max_abs_dev <= bound,
        bulk_points: points.len(),
        bulk_positive: points.iter().all(|r| r.p > 0.0),
        points,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Concentration {
    pub lower_ok: bool,
    pub upper_ok: bool,
    pub min_eig: f64,
    pub max_eig: f64,
}

/// Eigenvalue range of `(1/n)MMᵀ` against `[½, 2]`.
pub fn concentration_check<T: Entry>(m: &Matrix<T>) -> Concentration {
    let a = m.to_nalgebra();
    let n = m.cols().max(1) as f64;
    let s = (&a * a.transpose()) / n;
    let eig = SymmetricEigen::new(s).eigenvalues;
    let (min_eig, max_eig) = eig.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    Concentration { lower_ok: min_eig >= 0.5, upper_ok: max_eig <= 2.0, min_eig, max_eig }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorBudget {
    pub epsilon: f64,
    /// `ε ≤ 1/(2L)`.
    pub flag_i: bool,
    /// `L²nε⁴ ≤ 1`, equality being the default choice of `ε`.
    pub flag_ii: bool,
    /// `ε² ≥ 16m/(π²n)`.
    pub flag_iii: bool,
    /// `ε ≤ s`.
    pub flag_iv: bool,
    pub i1_bound: f64,
    pub i2_bound: f64,
    pub i3_expected_bound: f64,
    /// Stand-in for the unspecified absolute constant in the `I₁` bound.
    pub c: f64,
}

impl ErrorBudget {
    pub fn all_flags(&self) -> bool {
        self.flag_i && self.flag_ii && self.flag_iii && self.flag_iv
    }
}

/// Error budget for an isotropic `M` (columns of radius at most `radius`)
/// whose support lattice has determinant `lattice_det`. All bounds hold up
/// to absolute constants; `c` scales `I₁`.
pub fn error_budget(
    m: &RealMatrix,
    radius: f64,
    lattice_det: f64,
    spanningness: f64,
    epsilon: Option<f64>,
    c: f64,
) -> ErrorBudget {
    let rows = m.rows() as f64;
    let n = m.cols() as f64;
    let l = radius;
    let eps = epsilon.unwrap_or_else(|| l.powf(-0.5) * n.powf(-0.25));
    let a = m.to_nalgebra();
    let det_sigma_m = ((&a * a.transpose()) / 4.0).determinant().max(0.0);
    let norm = (2.0 * PI).powf(rows / 2.0) * det_sigma_m.sqrt();
    ErrorBudget {
        epsilon: eps,
        flag_i: eps <= 1.0 / (2.0 * l),
        flag_ii: l * l * n * eps.powi(4) <= 1.0 + 1e-12,
        flag_iii: eps * eps >= 16.0 * rows / (PI * PI * n),
        flag_iv: eps <= spanningness,
        i1_bound: c * rows * rows * l * l / n / norm,
        i2_bound: (-PI * PI * eps * eps * n / 8.0).exp() / norm,
        i3_expected_bound: (-2.0 * eps * eps * n).exp() / lattice_det,
        c,
    }
}

/// Product of tent densities `Π max(0, 2K − |wᵢ|)/(2K)²`.
pub fn tent(w: &[f64], k: f64) -> f64 {
    w.iter().map(|x| (2.0 * k - x.abs()).max(0.0) / (4.0 * k * k)).product()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothedMass {
    pub mean: f64,
    pub stderr: f64,
    /// Mean above three standard errors: some sample has `‖w‖_∞ < 2K`.
    pub certified: bool,
}

/// Sample mean of the tent weight over signed-sum samples `w = My`.
pub fn smoothed_mass(samples: &[Vec<f64>], k: f64) -> SmoothedMass {
    let n = samples.len();
    if n == 0 || k <= 0.0 {
        return SmoothedMass { mean: 0.0, stderr: 0.0, certified: false };
    }
    let vals: Vec<f64> = samples.iter().map(|w| tent(w, k)).collect();
    let mean = vals.iter().sum::<f64>() / n as f64;
    let var = if n > 1 { vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    let stderr = (var / n as f64).sqrt();
    SmoothedMass { mean, stderr, certified: mean > 0.0 && mean > 3.0 * stderr }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaylorCheck {
    /// `max |log cos(πx) + π²x²/2| / x⁴` over the grid.
    pub sup_ratio: f64,
    pub constant: f64,
    pub holds: bool,
}

/// Grid check of `|log cos(πx) + π²x²/2| ≤ C x⁴` on `0 < |x| ≤ 0.4`.
pub fn taylor_check(constant: f64, grid: usize) -> TaylorCheck {
    let sup_ratio = (1..=grid.max(1))
        .map(|i| {
            let x = 0.4 * i as f64 / grid.max(1) as f64;
            // cos(πx) − 1 = −2 sin²(πx/2), which avoids cancellation near 0.
            let log_cos = (-2.0 * (PI * x / 2.0).sin().powi(2)).ln_1p();
            (log_cos + PI * PI * x * x / 2.0).abs() / x.powi(4)
        })
        .fold(0.0, f64::max);
    TaylorCheck { sup_ratio, constant, holds: sup_ratio <= constant }
}
