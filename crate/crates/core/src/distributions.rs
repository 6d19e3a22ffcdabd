//! Column distributions: uniform t-sparse indicators, finite lattice
//! supports, and uniform unit vectors. Each carries its second moment
//! `Σ = E[XXᵀ]`, and the lattice kinds expose `X̂` and `X̃` exactly.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{combinations, indicator};
use crate::error::{Error, Result};
use crate::lattice::{lattice_from_columns, Lattice};
use crate::matrix::{IntMatrix, Matrix, RealMatrix};

/// Eigenvalue floor below which `Σ` counts as singular.
pub const EIGEN_FLOOR: f64 = 1e-10;

/// Experiment-config form of a distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum DistributionSpec {
    #[serde(rename = "tsparse")]
    TSparse { m: usize, t: usize },
    #[serde(rename = "unit_sphere")]
    UnitSphere { m: usize },
    #[serde(rename = "finite")]
    Finite { support: Vec<Vec<i64>>, probs: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct ColumnDistribution {
    spec: DistributionSpec,
    m: usize,
    support: Vec<Vec<i64>>,
    probs: Vec<f64>,
    covariance: DMatrix<f64>,
    min_eig: f64,
}

/// `x mod 1` taken in `(−1/2, 1/2]`.
pub fn mod1(x: f64) -> f64 {
    x - (x - 0.5).ceil()
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl ColumnDistribution {
    pub fn new(spec: DistributionSpec) -> Result<Self> {
        match spec {
            DistributionSpec::TSparse { m, t } => Self::tsparse(m, t),
            DistributionSpec::UnitSphere { m } => Self::unit_sphere(m),
            DistributionSpec::Finite { support, probs } => Self::finite(support, probs),
        }
    }

    pub fn tsparse(m: usize, t: usize) -> Result<Self> {
        if t == 0 || t >= m {
            return Err(Error::Invalid(format!("t-sparse needs 0 < t < m, got m={m}, t={t}")));
        }
        let support: Vec<Vec<i64>> = combinations(m, t).iter().map(|s| indicator(m, s)).collect();
        let p = 1.0 / support.len() as f64;
        let probs = vec![p; support.len()];
        let (mf, tf) = (m as f64, t as f64);
        let diag = tf / mf;
        let off = tf * (tf - 1.0) / (mf * (mf - 1.0));
        let covariance = DMatrix::from_fn(m, m, |i, j| if i == j { diag } else { off });
        let min_eig = (tf * tf / mf).min(tf * (mf - tf) / (mf * (mf - 1.0)));
        Ok(Self { spec: DistributionSpec::TSparse { m, t }, m, support, probs, covariance, min_eig })
    }

    pub fn unit_sphere(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Invalid("dimension must be positive".into()));
        }
        let covariance = DMatrix::identity(m, m) / m as f64;
        Ok(Self {
            spec: DistributionSpec::UnitSphere { m },
            m,
            support: Vec::new(),
            probs: Vec::new(),
            covariance,
            min_eig: 1.0 / m as f64,
        })
    }

    pub fn finite(support: Vec<Vec<i64>>, probs: Vec<f64>) -> Result<Self> {
        let m = support.first().map(Vec::len).ok_or_else(|| Error::Invalid("empty support".into()))?;
        if m == 0 || support.iter().any(|x| x.len() != m) {
            return Err(Error::Dimension("support vectors must share a positive length".into()));
        }
        if probs.len() != support.len() {
            return Err(Error::Dimension("one probability per support vector".into()));
        }
        if probs.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::Invalid("probabilities must be positive".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!("probabilities sum to {total}, not 1")));
        }
        let mut covariance = DMatrix::zeros(m, m);
        for (x, &p) in support.iter().zip(&probs) {
            let v = DVector::from_iterator(m, x.iter().map(|&a| a as f64));
            covariance += &v * v.transpose() * p;
        }
        let min_eig = SymmetricEigen::new(covariance.clone()).eigenvalues.min();
        let spec = DistributionSpec::Finite { support: support.clone(), probs: probs.clone() };
        Ok(Self { spec, m, support, probs, covariance, min_eig })
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn is_lattice(&self) -> bool {
        !matches!(self.spec, DistributionSpec::UnitSphere { .. })
    }

    /// Support vectors and their probabilities (empty for the unit sphere).
    pub fn support(&self) -> (&[Vec<i64>], &[f64]) {
        (&self.support, &self.probs)
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// `σ`, the least eigenvalue of `Σ`.
    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eig
    }

    /// `span_ℤ supp X`.
    pub fn support_lattice(&self) -> Result<Lattice> {
        if !self.is_lattice() {
            return Err(Error::Unsupported("the unit sphere has no support lattice".into()));
        }
        lattice_from_columns(&self.support)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self.spec {
            DistributionSpec::UnitSphere { m } => loop {
                let g: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
                let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n > 1e-300 {
                    return g.into_iter().map(|x| x / n).collect();
                }
            },
            _ => self.sample_int(rng).expect("lattice kind").into_iter().map(|x| x as f64).collect(),
        }
    }

    /// Integer sample for the lattice kinds.
    pub fn sample_int<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Vec<i64>> {
        match self.spec {
            DistributionSpec::TSparse { m, t } => {
                let mut idx: Vec<usize> = (0..m).collect();
                for i in 0..t {
                    let j = rng.random_range(i..m);
                    idx.swap(i, j);
                }
                Some(indicator(m, &idx[..t]))
            }
            DistributionSpec::Finite { .. } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (x, p) in self.support.iter().zip(&self.probs) {
                    acc += p;
                    if u < acc {
                        return Some(x.clone());
                    }
                }
                self.support.last().cloned()
            }
            DistributionSpec::UnitSphere { .. } => None,
        }
    }

    pub fn sample_int_matrix<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<IntMatrix> {
        let cols = (0..n)
            .map(|_| self.sample_int(rng).ok_or_else(|| Error::Unsupported("unit sphere columns are not integral".into())))
            .collect::<Result<Vec<_>>>()?;
        Matrix::from_columns(self.m, &cols)
    }

    pub fn sample_matrix<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> RealMatrix {
        let cols: Vec<Vec<f64>> = (0..n).map(|_| self.sample(rng)).collect();
        Matrix::from_columns(self.m, &cols).expect("sampled columns have length m")
    }

    /// Moves to isotropic position with `T = Σ^(−1/2)`.
    pub fn isotropize(&self) -> Result<IsotropizedView> {
        if self.min_eig <= EIGEN_FLOOR {
            return Err(Error::DegenerateDistribution);
        }
        let eig = SymmetricEigen::new(self.covariance.clone());
        if eig.eigenvalues.min() <= EIGEN_FLOOR {
            return Err(Error::DegenerateDistribution);
        }
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
        let transform = &eig.eigenvectors * d * eig.eigenvectors.transpose();
        let det_sigma: f64 = eig.eigenvalues.iter().product();
        let support: Vec<Vec<f64>> = self
            .support
            .iter()
            .map(|x| {
                let v = DVector::from_iterator(self.m, x.iter().map(|&a| a as f64));
                (&transform * v).as_slice().to_vec()
            })
            .collect();
        let computed = support
            .iter()
            .map(|z| z.iter().map(|a| a * a).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let radius = match self.spec {
            DistributionSpec::TSparse { m, .. } | DistributionSpec::UnitSphere { m } => (m as f64).sqrt(),
            DistributionSpec::Finite { .. } => computed,
        };
        let lattice_det = if self.is_lattice() {
            let l = self.support_lattice()?;
            l.is_nondegenerate().then(|| l.determinant() / det_sigma.sqrt())
        } else {
            None
        };
        Ok(IsotropizedView {
            transform,
            det_sigma,
            radius,
            lattice_det,
            support,
            probs: self.probs.clone(),
            m: self.m,
        })
    }

    /// `X̂(θ) = E exp(2πi⟨X,θ⟩)`.
    pub fn char_fn(&self, theta: &[f64]) -> Result<Complex64> {
        self.require_finite()?;
        let mut s = Complex64::new(0.0, 0.0);
        for (x, &p) in self.support.iter().zip(&self.probs) {
            let a = 2.0 * std::f64::consts::PI * pair(x, theta);
            s += Complex64::new(a.cos(), a.sin()) * p;
        }
        Ok(s)
    }

    /// `X̃(θ) = √E[(⟨θ,X⟩ mod 1)²]`, exact over the support.
    pub fn tilde(&self, theta: &[f64]) -> Result<f64> {
        self.require_finite()?;
        let s: f64 = self.support.iter().zip(&self.probs).map(|(x, p)| p * mod1(pair(x, theta)).powi(2)).sum();
        Ok(s.sqrt())
    }

    /// Monte Carlo `X̃(θ)`; any kind. The error is propagated from the mean
    /// square by the delta method.
    pub fn tilde_mc<R: Rng + ?Sized>(&self, theta: &[f64], samples: usize, rng: &mut R) -> Estimate {
        let n = samples.max(2);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = self.sample(rng);
            let r = mod1(x.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>()).powi(2);
            s += r;
            s2 += r * r;
        }
        let mean = s / n as f64;
        let var = (s2 / n as f64 - mean * mean).max(0.0) * n as f64 / (n - 1) as f64;
        let se_sq = (var / n as f64).sqrt();
        let value = mean.sqrt();
        let stderr = if value > 0.0 { se_sq / (2.0 * value) } else { se_sq.sqrt() };
        Estimate { value, stderr }
    }

    /// `‖θ‖_X = √(θᵀΣθ)`.
    pub fn norm_x(&self, theta: &[f64]) -> f64 {
        let v = DVector::from_column_slice(theta);
        (v.transpose() * &self.covariance * &v)[(0, 0)].max(0.0).sqrt()
    }

    fn require_finite(&self) -> Result<()> {
        if self.is_lattice() {
            Ok(())
        } else {
            Err(Error::Unsupported("exact Fourier data needs a finite support".into()))
        }
    }
}

fn pair(x: &[i64], theta: &[f64]) -> f64 {
    x.iter().zip(theta).map(|(&a, b)| a as f64 * b).sum()
}

/// A distribution moved to isotropic position `Z = T·X`.
#[derive(Clone, Debug)]
pub struct IsotropizedView {
    pub transform: DMatrix<f64>,
    pub det_sigma: f64,
    /// `L`: largest `‖Z‖₂` over the support.
    pub radius: f64,
    /// `det(T·L)` for nondegenerate lattice kinds.
    pub lattice_det: Option<f64>,
    /// Transformed support (empty for the unit sphere).
    pub support: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
    m: usize,
}

impl IsotropizedView {
    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (&self.transform * DVector::from_column_slice(x)).as_slice().to_vec()
    }

    /// `E[ZZᵀ]` recomputed from the transformed support.
    pub fn second_moment(&self) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.m, self.m);
        for (z, &p) in self.support.iter().zip(&self.probs) {
            let v = DVector::from_column_slice(z);
            s += &v * v.transpose() * p;
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mod_one_convention() {
        assert_eq!(mod1(0.5), 0.5);
        assert_eq!(mod1(-0.5), 0.5);
        assert_eq!(mod1(1.5), 0.5);
        assert!((mod1(0.7) + 0.3).abs() < 1e-15);
        assert_eq!(mod1(3.0), 0.0);
    }

    #[test]
    fn tsparse_rejects_bad_sparsity() {
        assert!(ColumnDistribution::tsparse(3, 3).is_err());
        assert!(ColumnDistribution::tsparse(3, 0).is_err());
    }

    #[test]
    fn tsparse_moments() {
        let d = ColumnDistribution::tsparse(4, 2).unwrap();
        assert_eq!(d.covariance()[(0, 0)], 0.5);
        assert!((d.covariance()[(0, 1)] - 1.0 / 6.0).abs() < 1e-15);
        let mut eig: Vec<f64> = SymmetricEigen::new(d.covariance().clone()).eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        assert!((eig[0] - 1.0 / 3.0).abs() < 1e-12 && (eig[3] - 1.0).abs() < 1e-12);
        assert!((d.min_eigenvalue() - 1.0 / 3.0).abs() < 1e-15);
        assert!((d.norm_x(&[1.0; 4]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn finite_covariance_and_validation() {
        let d = ColumnDistribution::finite(vec![vec![1, 0], vec![-1, 0]], vec![0.5, 0.5]).unwrap();
        assert_eq!(d.covariance(), &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        assert!(matches!(d.isotropize(), Err(Error::DegenerateDistribution)));
        assert!(ColumnDistribution::finite(vec![vec![1]], vec![0.9]).is_err());
        assert!(ColumnDistribution::finite(vec![vec![1], vec![2]], vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn isotropic_radius() {
        for (m, t) in [(4, 2), (5, 2), (6, 3)] {
            let v = ColumnDistribution::tsparse(m, t).unwrap().isotropize().unwrap();
            let eye = DMatrix::<f64>::identity(m, m);
            assert!((v.second_moment() - eye).abs().max() < 1e-9);
            assert_eq!(v.radius, (m as f64).sqrt());
            for z in &v.support {
                assert!((z.iter().map(|a| a * a).sum::<f64>().sqrt() - v.radius).abs() < 1e-9);
            }
        }
        let v = ColumnDistribution::unit_sphere(5).unwrap().isotropize().unwrap();
        assert!((v.apply(&[1.0, 0.0, 0.0, 0.0, 0.0])[0] - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn characteristic_function_values() {
        let d = ColumnDistribution::finite(vec![vec![1], vec![-1]], vec![0.5, 0.5]).unwrap();
        for th in [0.0, 0.1, 0.37, 1.25] {
            let c = d.char_fn(&[th]).unwrap();
            assert!((c.re - (2.0 * std::f64::consts::PI * th).cos()).abs() < 1e-12 && c.im.abs() < 1e-12);
        }
        assert!(ColumnDistribution::unit_sphere(3).unwrap().char_fn(&[0.0; 3]).is_err());
    }

    #[test]
    fn tilde_on_the_tsparse_direction() {
        let d = ColumnDistribution::tsparse(4, 2).unwrap();
        let delta = 0.1;
        let theta = [delta / 2.0, delta / 2.0, -delta / 2.0, -delta / 2.0];
        assert!((d.tilde(&theta).unwrap() - delta / 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(d.tilde(&[0.5; 4]).unwrap(), 0.0);
    }

    #[test]
    fn sphere_samples_are_unit() {
        let d = ColumnDistribution::unit_sphere(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x = d.sample(&mut rng);
            assert!((x.iter().map(|a| a * a).sum::<f64>().sqrt() - 1.0).abs() < 1e-12);
        }
        let e = d.tilde_mc(&[0.3, 0.0, 0.0, 0.0], 20_000, &mut rng);
        // ⟨θ,X⟩ = 0.3·X₁ never wraps, so X̃ = 0.3/√m
        assert!((e.value - 0.15).abs() < 5.0 * e.stderr + 1e-3);
    }

    #[test]
    fn spec_json_forms() {
        let s: DistributionSpec = serde_json::from_str(r#"{"kind":"tsparse","m":6,"t":2}"#).unwrap();
        assert_eq!(s, DistributionSpec::TSparse { m: 6, t: 2 });
        let s: DistributionSpec = serde_json::from_str(r#"{"kind":"unit_sphere","m":3}"#).unwrap();
        assert_eq!(s, DistributionSpec::UnitSphere { m: 3 });
        let s: DistributionSpec =
            serde_json::from_str(r#"{"kind":"finite","support":[[1],[-1]],"probs":[0.5,0.5]}"#).unwrap();
        assert!(ColumnDistribution::new(s).is_ok());
    }
}
