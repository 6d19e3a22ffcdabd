//! Spanningness `s(X)`: the infimum of `X̃(θ)` over pseudodual points
//! `θ ∉ L*` (those with `X̃(θ) ≤ d_X(θ, L*)/2`), the `α/β` lower bound built
//! from bounded kernel spanning sets and spreading, a direct numerical
//! search, and the sample-size thresholds that depend on it.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::combinatorics::{binomial, combinations};
use crate::distributions::{mod1, ColumnDistribution, DistributionSpec};
use crate::error::{Error, Result};
use crate::lattice::{covering_radius, dual_lattice, integer_kernel_basis, CoveringMode, FloatLattice, Norm};

/// Largest `C(m, t)` accepted by the t-sparse spanning-set construction.
pub const MAX_TSPARSE_SUPPORT: u128 = 2000;

/// Points this close to the dual lattice count as dual.
const DUAL_EXCLUSION: f64 = 1e-6;

/// Number of pseudodual candidates refined by local descent.
const REFINED: usize = 50;

/// Monte Carlo sample size for `X̃` of the unit sphere.
const SPHERE_SAMPLES: usize = 4000;

/// A spanningness value; `Infinite` when no pseudodual point exists.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Spanningness {
    Finite(f64),
    Infinite,
}

impl Spanningness {
    pub fn value(self) -> Option<f64> {
        match self {
            Spanningness::Finite(v) => Some(v),
            Spanningness::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        self == Spanningness::Infinite
    }

    /// `self ≤ other + tol`, with `∞ ≤ ∞`.
    pub fn le_with(self, other: Spanningness, tol: f64) -> bool {
        match (self, other) {
            (_, Spanningness::Infinite) => true,
            (Spanningness::Infinite, Spanningness::Finite(_)) => false,
            (Spanningness::Finite(a), Spanningness::Finite(b)) => a <= b + tol,
        }
    }
}

/// JSON form: a number, or the string `"infinity"`.
impl Serialize for Spanningness {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Spanningness::Finite(v) => s.serialize_f64(*v),
            Spanningness::Infinite => s.serialize_str("infinity"),
        }
    }
}

impl<'de> Deserialize<'de> for Spanningness {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Spanningness::Finite(v)),
            Raw::Text(s) if s == "infinity" => Ok(Spanningness::Infinite),
            Raw::Text(s) => Err(serde::de::Error::custom(format!("unexpected spanningness {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaBound {
    /// Largest `ℓ₁` norm in the spanning set; 0 for a trivial kernel.
    pub beta: u64,
    /// Integral vectors spanning `ker A_X`; coordinates follow [`kernel_support`].
    pub spanning_set: Vec<Vec<i64>>,
}

/// Columns of `A_X`: the support with each `±x` pair kept once. Since
/// `|⟨−x,θ⟩ mod 1| = |⟨x,θ⟩ mod 1|`, the sign copy adds no constraint.
pub fn kernel_support(dist: &ColumnDistribution) -> Result<Vec<Vec<i64>>> {
    if !dist.is_lattice() {
        return Err(Error::Unsupported("β-boundedness needs a finite support".into()));
    }
    let mut out: Vec<Vec<i64>> = Vec::new();
    for x in dist.support().0 {
        let neg: Vec<i64> = x.iter().map(|a| -a).collect();
        if !out.contains(x) && !out.contains(&neg) {
            out.push(x.clone());
        }
    }
    Ok(out)
}

pub fn beta_bound(dist: &ColumnDistribution) -> Result<BetaBound> {
    let spanning_set = match *dist.spec() {
        DistributionSpec::TSparse { m, t } => tsparse_spanning_set(m, t)?,
        _ => {
            let cols = kernel_support(dist)?;
            let rows: Vec<Vec<i64>> = (0..dist.dim()).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
            integer_kernel_basis(&rows)
        }
    };
    let beta = spanning_set.iter().map(|v| v.iter().map(|x| x.unsigned_abs()).sum()).max().unwrap_or(0);
    Ok(BetaBound { beta, spanning_set })
}

/// Kernel vectors `e_{S'} − e_S + e_T − e_{T'}` where `S' → S` and
/// `T' → T` both swap element 0 for the same `j`. For each `j` the pair
/// `(T', T)` is fixed to the first one, which already spans the kernel.
/// Coordinates follow the lexicographic order of `t`-subsets.
pub fn tsparse_spanning_set(m: usize, t: usize) -> Result<Vec<Vec<i64>>> {
    if t == 0 || t >= m {
        return Err(Error::Invalid(format!("t-sparse needs 0 < t < m, got m={m}, t={t}")));
    }
    if binomial(m as u64, t as u64) > MAX_TSPARSE_SUPPORT {
        return Err(Error::TooLarge(format!("C({m},{t}) exceeds {MAX_TSPARSE_SUPPORT}")));
    }
    let subsets = combinations(m, t);
    let index = |s: &[usize]| subsets.binary_search_by(|x| x.as_slice().cmp(s)).expect("t-subset");
    let size = subsets.len();
    let mut out = Vec::new();
    for j in 1..m {
        let arrows: Vec<(usize, usize)> = subsets
            .iter()
            .filter(|s| s.contains(&0) && !s.contains(&j))
            .map(|s| {
                let mut target: Vec<usize> = s.iter().map(|&x| if x == 0 { j } else { x }).collect();
                target.sort_unstable();
                (index(s), index(&target))
            })
            .collect();
        let Some(&(tp, tt)) = arrows.first() else { continue };
        for &(sp, ss) in &arrows[1..] {
            let mut v = vec![0i64; size];
            v[sp] += 1;
            v[ss] -= 1;
            v[tt] += 1;
            v[tp] -= 1;
            out.push(v);
        }
    }
    Ok(out)
}

/// Checks that the construction lies in `ker A_X` and has rank `C(m,t) − m`.
pub fn verify_tsparse_spanning_set(m: usize, t: usize) -> Result<bool> {
    let set = tsparse_spanning_set(m, t)?;
    let cols: Vec<Vec<i64>> =
        combinations(m, t).iter().map(|s| crate::combinatorics::indicator(m, s)).collect();
    let in_kernel = set.iter().all(|v| {
        (0..m).all(|i| cols.iter().zip(v).map(|(c, &a)| c[i] * a).sum::<i64>() == 0)
    });
    let expected = cols.len() - m;
    Ok(in_kernel && rank_mod_p(&set) == expected)
}

/// Rank over `F_p`, `p = 2⁶¹ − 1`. It never exceeds the rational rank.
fn rank_mod_p(rows: &[Vec<i64>]) -> usize {
    const P: u64 = (1 << 61) - 1;
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % P as u128) as u64;
    let powmod = |mut a: u64, mut e: u64| {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = mulmod(r, a);
            }
            a = mulmod(a, a);
            e >>= 1;
        }
        r
    };
    let mut a: Vec<Vec<u64>> =
        rows.iter().map(|r| r.iter().map(|&x| x.rem_euclid(P as i64) as u64).collect()).collect();
    let cols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..a.len()).find(|&r| a[r][c] != 0) else { continue };
        a.swap(rank, p);
        let inv = powmod(a[rank][c], P - 2);
        let pivot: Vec<u64> = a[rank].iter().map(|&x| mulmod(x, inv)).collect();
        for (r, row) in a.iter_mut().enumerate() {
            if r == rank || row[c] == 0 {
                continue;
            }
            let f = row[c];
            for (x, &y) in row.iter_mut().zip(&pivot) {
                *x = (*x + P - mulmod(f, y)) % P;
            }
        }
        a[rank] = pivot;
        rank += 1;
    }
    rank
}

/// Spreading constant proven for the distribution, if any: `1/(2m)` for
/// t-sparse vectors.
pub fn proven_alpha(dist: &ColumnDistribution) -> Option<f64> {
    match *dist.spec() {
        DistributionSpec::TSparse { m, .. } => Some(1.0 / (2.0 * m as f64)),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaEstimate {
    /// Smallest ratio `X̃(θ) / sup_x |⟨x,θ⟩ mod 1|` found; an upper bound on `α`.
    pub alpha: f64,
    pub witness: Vec<f64>,
    pub restarts: usize,
}

fn spreading_ratio(dist: &ColumnDistribution, theta: &[f64]) -> Option<f64> {
    let (support, _) = dist.support();
    let top = support
        .iter()
        .map(|x| mod1(x.iter().zip(theta).map(|(&a, b)| a as f64 * b).sum()).abs())
        .fold(0.0, f64::max);
    if top < 1e-12 {
        return None;
    }
    Some(dist.tilde(theta).ok()? / top)
}

/// Independent ChaCha streams derived from one seed.
fn streams(seed: u64, count: usize) -> Vec<ChaCha20Rng> {
    (0..count)
        .map(|i| {
            let mut r = ChaCha20Rng::seed_from_u64(seed);
            r.set_stream(i as u64);
            r
        })
        .collect()
}

fn min_by_value<T>(items: impl IntoIterator<Item = (f64, T)>) -> Option<(f64, T)> {
    // Strict comparison keeps the earliest of equal values.
    items.into_iter().fold(None, |best, (v, x)| match best {
        Some((b, _)) if v >= b => best,
        _ => Some((v, x)),
    })
}

/// Random restarts (direction uniform, scale log-uniform in `[1e-4, 1]`)
/// followed by coordinate descent with step halving on the spreading ratio.
pub fn alpha_estimate<R: Rng + ?Sized>(dist: &ColumnDistribution, budget: usize, rng: &mut R) -> Result<AlphaEstimate> {
    if !dist.is_lattice() {
        return Err(Error::Unsupported("spreading needs a finite support".into()));
    }
    let m = dist.dim();
    let restarts = budget.max(1);
    let seed: u64 = rng.random();
    let results: Vec<Option<(f64, Vec<f64>)>> = streams(seed, restarts)
        .into_par_iter()
        .map(|mut r| {
            let dir: Vec<f64> = (0..m).map(|_| r.sample(StandardNormal)).collect();
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
            let scale = 10f64.powf(r.random_range(-4.0..0.0));
            let mut theta: Vec<f64> = dir.iter().map(|x| x / norm * scale).collect();
            let mut val = spreading_ratio(dist, &theta)?;
            let mut step = scale / 4.0;
            while step > 1e-10 * scale.max(1e-3) {
                let mut moved = false;
                for i in 0..m {
                    for s in [step, -step] {
                        theta[i] += s;
                        match spreading_ratio(dist, &theta) {
                            Some(v) if v < val - 1e-15 => {
                                val = v;
                                moved = true;
                            }
                            _ => theta[i] -= s,
                        }
                    }
                }
                if !moved {
                    step /= 2.0;
                }
            }
            Some((val, theta))
        })
        .collect();
    let (alpha, witness) = min_by_value(results.into_iter().flatten())
        .ok_or_else(|| Error::Invalid("no restart produced a nondegenerate direction".into()))?;
    Ok(AlphaEstimate { alpha, witness, restarts })
}

/// `α/β`, with `α` proven for the distribution or supplied by the caller.
pub fn spanningness_lower_bound(dist: &ColumnDistribution, alpha: Option<f64>) -> Result<Spanningness> {
    let alpha = alpha.or_else(|| proven_alpha(dist)).ok_or_else(|| {
        Error::Unsupported("no proven spreading constant for this distribution; supply α".into())
    })?;
    let beta = beta_bound(dist)?.beta;
    Ok(if beta == 0 { Spanningness::Infinite } else { Spanningness::Finite(alpha / beta as f64) })
}

/// The distribution in isotropic coordinates `θ' = Σ^{1/2}θ`, where the
/// `d_X` metric is Euclidean and the dual lattice becomes `Σ^{1/2}L*`.
struct IsoFrame {
    m: usize,
    /// `Σ^{-1/2}`, mapping `θ'` back to `θ`.
    to_raw: DMatrix<f64>,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    dual: Option<FloatLattice>,
}

impl IsoFrame {
    fn new<R: Rng + ?Sized>(dist: &ColumnDistribution, rng: &mut R) -> Result<Self> {
        let view = dist.isotropize()?;
        let m = dist.dim();
        let (points, weights, dual) = if dist.is_lattice() {
            let to_iso = view.transform.clone().try_inverse().ok_or(Error::DegenerateDistribution)?;
            let d = dual_lattice(&dist.support_lattice()?)?;
            (view.support.clone(), view.probs.clone(), Some(FloatLattice::new(&to_iso * d.basis_matrix())?.lll_reduced()?))
        } else {
            let pts: Vec<Vec<f64>> = (0..SPHERE_SAMPLES).map(|_| view.apply(&dist.sample(rng))).collect();
            (pts, vec![1.0 / SPHERE_SAMPLES as f64; SPHERE_SAMPLES], None)
        };
        Ok(Self { m, to_raw: view.transform, points, weights, dual })
    }

    fn tilde(&self, theta: &[f64]) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(z, w)| w * mod1(z.iter().zip(theta).map(|(a, b)| a * b).sum()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Representative of `θ'` in the dual Voronoi cell.
    fn reduce(&self, theta: &[f64]) -> Vec<f64> {
        match &self.dual {
            Some(d) => match d.closest(theta, Norm::Euclidean, crate::lattice::DEFAULT_MAX_RANK) {
                Ok(cv) => theta.iter().zip(&cv.point).map(|(a, b)| a - b).collect(),
                Err(_) => theta.to_vec(),
            },
            None => theta.to_vec(),
        }
    }

    /// `X̃` at a pseudodual, non-dual `θ'` already in the Voronoi cell.
    fn pseudodual_value(&self, reduced: &[f64]) -> Option<f64> {
        let d = reduced.iter().map(|x| x * x).sum::<f64>().sqrt();
        if d < DUAL_EXCLUSION {
            return None;
        }
        let v = self.tilde(reduced);
        (v <= d / 2.0).then_some(v)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match &self.dual {
            Some(d) => {
                let u: Vec<f64> = (0..self.m).map(|_| rng.random::<f64>()).collect();
                let v = d.basis() * DVector::from_vec(u);
                self.reduce(v.as_slice())
            }
            None => {
                let dir: Vec<f64> = (0..self.m).map(|_| rng.sample(StandardNormal)).collect();
                let n = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
                let r = 4.0 * (self.m as f64).sqrt() * rng.random::<f64>().powf(1.0 / self.m as f64);
                dir.iter().map(|x| x / n * r).collect()
            }
        }
    }

    /// Coordinate descent on `X̃` that stays pseudodual and non-dual.
    fn descend(&self, mut theta: Vec<f64>, mut val: f64) -> (f64, Vec<f64>) {
        let mut step = 0.05;
        while step > 1e-7 {
            let mut moved = false;
            for i in 0..self.m {
                for s in [step, -step] {
                    let mut cand = theta.clone();
                    cand[i] += s;
                    let cand = self.reduce(&cand);
                    if let Some(v) = self.pseudodual_value(&cand) {
                        if v < val - 1e-15 {
                            theta = cand;
                            val = v;
                            moved = true;
                        }
                    }
                }
            }
            if !moved {
                step /= 2.0;
            }
        }
        (val, theta)
    }

    fn raw(&self, theta: &[f64]) -> Vec<f64> {
        (&self.to_raw * DVector::from_column_slice(theta)).as_slice().to_vec()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub upper: Spanningness,
    /// Best pseudodual point, in the original coordinates.
    pub witness: Option<Vec<f64>>,
    pub samples: usize,
    pub pseudodual_found: usize,
}

/// Samples `budget` points of the dual Voronoi cell (a ball of radius
/// `4√m` for the unit sphere, which has no lattice), keeps the pseudodual
/// ones, and refines the best 50 by descent.
pub fn spanningness_search<R: Rng + ?Sized>(
    dist: &ColumnDistribution,
    budget: usize,
    rng: &mut R,
) -> Result<SearchResult> {
    let frame = IsoFrame::new(dist, rng)?;
    let seed: u64 = rng.random();
    let chunks = 64usize.min(budget.max(1));
    let per = budget.div_ceil(chunks);
    let found: Vec<Vec<(f64, Vec<f64>)>> = streams(seed, chunks)
        .into_par_iter()
        .enumerate()
        .map(|(c, mut r)| {
            let count = per.min(budget.saturating_sub(c * per));
            (0..count)
                .filter_map(|_| {
                    let th = frame.sample(&mut r);
                    frame.pseudodual_value(&th).map(|v| (v, th))
                })
                .collect()
        })
        .collect();
    let mut cands: Vec<(f64, Vec<f64>)> = found.into_iter().flatten().collect();
    let pseudodual_found = cands.len();
    cands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    cands.truncate(REFINED);
    let refined: Vec<(f64, Vec<f64>)> = cands.into_par_iter().map(|(v, th)| frame.descend(th, v)).collect();
    let best = min_by_value(refined);
    Ok(SearchResult {
        upper: best.as_ref().map_or(Spanningness::Infinite, |b| Spanningness::Finite(b.0)),
        witness: best.map(|b| frame.raw(&b.1)),
        samples: budget,
        pseudodual_found,
    })
}

/// Recomputes `X̃(θ)` and `d_X(θ, L*)` from scratch and checks
/// `X̃(θ) ≤ d_X(θ, L*)/2 + 1e-9`. Lattice kinds only.
pub fn is_pseudodual(dist: &ColumnDistribution, theta: &[f64]) -> Result<bool> {
    let tilde = dist.tilde(theta)?;
    let l = dist.support_lattice()?;
    let dual = dual_lattice(&l)?;
    // d_X(θ, l) = ‖Σ^{1/2}(θ − l)‖₂; search the dual in those coordinates.
    let view = dist.isotropize()?;
    let to_iso = view.transform.try_inverse().ok_or(Error::DegenerateDistribution)?;
    let fl = FloatLattice::new(&to_iso * dual.basis_matrix())?.lll_reduced()?;
    let target = (&to_iso * DVector::from_column_slice(theta)).as_slice().to_vec();
    let d = fl.closest(&target, Norm::Euclidean, crate::lattice::DEFAULT_MAX_RANK)?.distance;
    Ok(tilde <= d / 2.0 + 1e-9)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanningnessReport {
    pub alpha: f64,
    /// Whether `alpha` is a proven constant rather than a numerical estimate.
    pub alpha_proven: bool,
    /// Numerical estimate of `α` (an upper bound on the true value).
    pub alpha_estimate: Option<f64>,
    pub beta: u64,
    pub lower_bound: Spanningness,
    pub numeric_upper: Spanningness,
    pub witness_theta: Option<Vec<f64>>,
    pub budget: usize,
}

/// Lower bound and numerical search together. Without a proven `α` the
/// estimate stands in and the report says so.
pub fn spanningness_report<R: Rng + ?Sized>(
    dist: &ColumnDistribution,
    alpha_budget: usize,
    search_budget: usize,
    rng: &mut R,
) -> Result<SpanningnessReport> {
    let search = spanningness_search(dist, search_budget, rng)?;
    if !dist.is_lattice() {
        return Ok(SpanningnessReport {
            alpha: f64::NAN,
            alpha_proven: false,
            alpha_estimate: None,
            beta: 0,
            lower_bound: Spanningness::Finite(0.0),
            numeric_upper: search.upper,
            witness_theta: search.witness,
            budget: search_budget,
        });
    }
    let est = alpha_estimate(dist, alpha_budget, rng)?;
    let proven = proven_alpha(dist);
    let alpha = proven.unwrap_or(est.alpha);
    Ok(SpanningnessReport {
        alpha,
        alpha_proven: proven.is_some(),
        alpha_estimate: Some(est.alpha),
        beta: beta_bound(dist)?.beta,
        lower_bound: spanningness_lower_bound(dist, Some(alpha))?,
        numeric_upper: search.upper,
        witness_theta: search.witness,
        budget: search_budget,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTerms {
    /// `m²L²(log m + log L)²`.
    pub dimension: f64,
    /// `s⁻⁴L⁻²`.
    pub spanning: f64,
    /// `L² log²(det L / √det Σ)`, the isotropic lattice determinant.
    pub determinant: f64,
    /// `R²ρ²/σ`.
    pub covering: f64,
    /// `L² log² det L` with the raw determinant (`m log² t` for t-sparse).
    pub raw_determinant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub n0: f64,
    pub n: f64,
    pub constant_c: f64,
    pub radius: f64,
    pub covering_radius: f64,
    pub sigma: f64,
    pub terms: ThresholdTerms,
}

/// `N₀ = c·max{dimension, spanning, determinant}` and
/// `N = max{c·covering, N₀}`.
pub fn n_threshold(dist: &ColumnDistribution, norm: Norm, c: f64, s_value: f64) -> Result<ThresholdReport> {
    if !dist.is_lattice() {
        return Err(Error::Unsupported("thresholds need a lattice distribution".into()));
    }
    if !(s_value > 0.0) || !(c > 0.0) {
        return Err(Error::Invalid("c and s must be positive".into()));
    }
    let m = dist.dim() as f64;
    let view = dist.isotropize()?;
    let l = view.radius;
    let lattice = dist.support_lattice()?;
    let iso_det = view.lattice_det.ok_or_else(|| Error::DegenerateLattice("support lattice is degenerate".into()))?;
    let rho = match *dist.spec() {
        DistributionSpec::TSparse { t, .. } if norm == Norm::Sup => {
            if t >= 2 {
                1.0
            } else {
                0.5
            }
        }
        _ => {
            let mode = if lattice.rank() <= 4 {
                CoveringMode::Certified
            } else {
                CoveringMode::Estimate { samples: 2000, seed: 0 }
            };
            covering_radius(&lattice, norm, mode)?.radius
        }
    };
    let sigma = dist.min_eigenvalue();
    let r = norm.distortion(dist.dim());
    let terms = ThresholdTerms {
        dimension: m * m * l * l * (m.ln() + l.ln()).powi(2),
        spanning: s_value.powi(-4) / (l * l),
        determinant: l * l * iso_det.ln().powi(2),
        covering: r * r * rho * rho / sigma,
        raw_determinant: l * l * lattice.determinant().ln().powi(2),
    };
    let n0 = c * terms.dimension.max(terms.spanning).max(terms.determinant);
    Ok(ThresholdReport {
        n0,
        n: (c * terms.covering).max(n0),
        constant_c: c,
        radius: l,
        covering_radius: rho,
        sigma,
        terms,
    })
}
