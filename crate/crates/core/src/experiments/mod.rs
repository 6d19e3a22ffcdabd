//! Seeded experiment harness.
//!
//! Every trial draws from its own ChaCha20 stream (`seed`, stream = trial
//! index), trials run on a rayon pool and results are collected in trial
//! order, so reports do not depend on the worker count. Wall time goes to a
//! sidecar file, keeping `report.json` and the CSV byte-identical on reruns.

mod config;
mod summarize;

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{Budgets, Constants, ExperimentConfig, ExperimentKind, MIN_SUBSAMPLE};
pub use summarize::{summarize, summarize_paths, LltSummaryRow, Summary, TsparseSummaryRow, UnitDiscSummaryRow};

use crate::distributions::{ColumnDistribution, DistributionSpec};
use crate::error::{Error, Result};
use crate::lattice::Norm;
use crate::local_limit::{concentration_check, llt_compare, smoothed_mass, SmoothedMass};
use crate::mixing::{conditioned_binomial, mixing_bound, tv_curve, MixingRow};
use crate::solvers::{disc_decision_dp, local_search, local_search_endpoints, parity_lower_bound, tsparse_odd_disc};
use crate::spanningness::{n_threshold, spanningness_lower_bound, spanningness_report, SpanningnessReport, ThresholdReport};

pub const VERSION: &str = concat!("randisc ", env!("CARGO_PKG_VERSION"));

/// Default `n` grid for unit-disc runs.
pub const UNIT_DISC_GRID: [usize; 5] = [100, 200, 400, 800, 1200];

/// Independent stream `index` of the generator seeded with `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha20Rng {
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TsparseRecord {
    pub trial: usize,
    pub n_parity: u8,
    pub num_odd_rows: usize,
    pub disc_closed_form: u8,
    /// DP found a coloring at the closed-form value and the exact parity
    /// bound matched it.
    pub disc_dp_confirmed: bool,
    pub disc: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LltRecord {
    pub trial: usize,
    pub pass: bool,
    pub max_abs_dev: f64,
    pub bound: f64,
    /// Eigenvalue range of `(1/n)MMᵀ` for the isotropized matrix.
    pub min_eig: f64,
    pub max_eig: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitDiscRecord {
    pub m: usize,
    pub n: usize,
    pub trial: usize,
    pub disc_heuristic: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Records {
    TsparseDisc(Vec<TsparseRecord>),
    Llt(Vec<LltRecord>),
    UnitDisc(Vec<UnitDiscRecord>),
    Mixing(Vec<MixingRow>),
    Spanningness(Vec<SpanningnessReport>),
    Threshold(Vec<ThresholdReport>),
}

impl Records {
    pub fn len(&self) -> usize {
        match self {
            Records::TsparseDisc(v) => v.len(),
            Records::Llt(v) => v.len(),
            Records::UnitDisc(v) => v.len(),
            Records::Mixing(v) => v.len(),
            Records::Spanningness(v) => v.len(),
            Records::Threshold(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn from_value(kind: ExperimentKind, v: serde_json::Value) -> Result<Self> {
        Ok(match kind {
            ExperimentKind::TsparseDisc => Records::TsparseDisc(serde_json::from_value(v)?),
            ExperimentKind::Llt => Records::Llt(serde_json::from_value(v)?),
            ExperimentKind::UnitDisc => Records::UnitDisc(serde_json::from_value(v)?),
            ExperimentKind::Mixing => Records::Mixing(serde_json::from_value(v)?),
            ExperimentKind::Spanningness => Records::Spanningness(serde_json::from_value(v)?),
            ExperimentKind::Threshold => Records::Threshold(serde_json::from_value(v)?),
        })
    }

    /// Per-trial CSV; spanningness and threshold reports have none.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<bool> {
        fn all<W: std::io::Write, T: Serialize>(w: W, rows: &[T]) -> Result<bool> {
            let mut out = csv::Writer::from_writer(w);
            for r in rows {
                out.serialize(r)?;
            }
            out.flush()?;
            Ok(true)
        }
        match self {
            Records::TsparseDisc(v) => all(w, v),
            Records::Llt(v) => all(w, v),
            Records::UnitDisc(v) => all(w, v),
            Records::Mixing(v) => all(w, v),
            Records::Spanningness(_) | Records::Threshold(_) => Ok(false),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self { name: name.into(), pass, detail }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub version: String,
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    pub records: Records,
    pub aggregate: serde_json::Value,
    pub verdicts: Vec<Verdict>,
    /// Kept out of `report.json`; see [`ExperimentReport::write_to`].
    #[serde(skip)]
    pub wall_time_secs: f64,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            version: String,
            kind: ExperimentKind,
            config: ExperimentConfig,
            records: serde_json::Value,
            aggregate: serde_json::Value,
            verdicts: Vec<Verdict>,
        }
        let raw: Raw = serde_json::from_str(text)?;
        Ok(Self {
            version: raw.version,
            kind: raw.kind,
            config: raw.config,
            records: Records::from_value(raw.kind, raw.records)?,
            aggregate: raw.aggregate,
            verdicts: raw.verdicts,
            wall_time_secs: 0.0,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    /// Writes `report.json`, `records.csv` (when the kind has one) and
    /// `timing.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()?)?;
        let mut buf = Vec::new();
        if self.records.write_csv(&mut buf)? {
            std::fs::write(dir.join("records.csv"), buf)?;
        }
        let timing = serde_json::json!({ "wall_time_secs": self.wall_time_secs });
        std::fs::write(dir.join("timing.json"), serde_json::to_string_pretty(&timing)? + "\n")?;
        Ok(())
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    let (records, aggregate, verdicts) = match config.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Aborted(format!("thread pool: {e}")))?
            .install(|| dispatch(config))?,
        None => dispatch(config)?,
    };
    Ok(ExperimentReport {
        version: VERSION.into(),
        kind: config.kind,
        // Where and how widely it ran does not affect the results.
        config: ExperimentConfig { output: None, workers: None, ..config.clone() },
        records,
        aggregate,
        verdicts,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

type Outcome = (Records, serde_json::Value, Vec<Verdict>);

fn dispatch(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.kind {
        ExperimentKind::TsparseDisc => {
            let (r, a) = run_tsparse_disc(cfg)?;
            let v = a.verdicts(&r);
            Ok((Records::TsparseDisc(r), serde_json::to_value(a)?, v))
        }
        ExperimentKind::Llt => {
            let (r, a) = run_llt(cfg)?;
            let v = vec![Verdict::new(
                "pass_rate",
                a.pass_rate >= cfg.constants.pass_rate,
                format!("{}/{} samples within the bound; threshold {}", a.passes, a.trials, cfg.constants.pass_rate),
            )];
            Ok((Records::Llt(r), serde_json::to_value(a)?, v))
        }
        ExperimentKind::UnitDisc => {
            let (r, a) = run_unit_disc(cfg)?;
            let v = a.verdicts();
            Ok((Records::UnitDisc(r), serde_json::to_value(a)?, v))
        }
        ExperimentKind::Mixing => {
            let (r, a) = run_mixing(cfg)?;
            let v = a.verdicts();
            Ok((Records::Mixing(r), serde_json::to_value(a)?, v))
        }
        ExperimentKind::Spanningness => {
            let dist = distribution(cfg)?;
            let rep = spanningness_report(&dist, cfg.budgets.alpha, cfg.budgets.search, &mut substream(cfg.seed, 0))?;
            let ok = rep.lower_bound.le_with(rep.numeric_upper, 1e-9);
            let v = vec![Verdict::new(
                "sandwich",
                ok,
                format!("lower {:?} vs numeric upper {:?}", rep.lower_bound, rep.numeric_upper),
            )];
            let agg = serde_json::json!({ "sandwich": ok });
            Ok((Records::Spanningness(vec![rep]), agg, v))
        }
        ExperimentKind::Threshold => {
            let dist = distribution(cfg)?;
            let s = match cfg.constants.s {
                Some(s) => s,
                None => spanningness_lower_bound(&dist, None)
                    .map_err(|e| Error::Config { line: 1, msg: format!("{e}; set constants.s") })?
                    .value()
                    .unwrap_or(f64::INFINITY),
            };
            let rep = n_threshold(&dist, cfg.norm, cfg.constants.c, s)?;
            let agg = serde_json::json!({ "s": if s.is_finite() { serde_json::json!(s) } else { serde_json::json!("infinity") } });
            Ok((Records::Threshold(vec![rep]), agg, Vec::new()))
        }
    }
}

fn distribution(cfg: &ExperimentConfig) -> Result<ColumnDistribution> {
    let spec = cfg.distribution.clone().ok_or_else(|| Error::Config { line: 1, msg: "missing distribution".into() })?;
    ColumnDistribution::new(spec)
}

/// Runs `f` over `0..count` on the current pool, in index order.
fn trials<T: Send>(count: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..count).into_par_iter().map(f).collect()
}

// ---- tsparse-disc ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TsparseAggregate {
    pub m: usize,
    pub t: usize,
    pub n: usize,
    pub trials: usize,
    /// Trials entering the law table.
    pub certified: usize,
    /// Certified trials with disc 0, 1, 2.
    pub counts: [usize; 3],
    pub freq: [f64; 3],
    /// Binomial standard errors at the predicted probabilities.
    pub stderr: [f64; 3],
    pub predicted: [f64; 3],
    /// Predicted probabilities as exact fractions.
    pub predicted_exact: [String; 3],
    /// `e^{−2n/m + m}`, the distance of the row-sum parities from their limit.
    pub mixing_bound: f64,
}

impl TsparseAggregate {
    fn verdicts(&self, records: &[TsparseRecord]) -> Vec<Verdict> {
        let mut out = Vec::new();
        for v in 0..3 {
            let (f, p, se) = (self.freq[v], self.predicted[v], self.stderr[v]);
            let pass = self.certified > 0 && (f - p).abs() <= 3.0 * se + 1e-12;
            out.push(Verdict::new(
                &format!("law_disc_{v}"),
                pass,
                format!("empirical {f} vs predicted {} (3 SE = {})", self.predicted_exact[v], 3.0 * se),
            ));
        }
        if self.n % 2 == 0 {
            let le1 = (self.counts[0] + self.counts[1]) as f64 / self.certified.max(1) as f64;
            out.push(Verdict::new("disc_le_1_rate", le1 >= 0.995, format!("Pr[disc <= 1] = {le1}")));
        }
        let worst = records.iter().map(|r| r.disc).max().unwrap_or(0);
        out.push(Verdict::new("disc_le_2_all", worst <= 2, format!("largest disc {worst}")));
        out
    }
}

/// Closed-form disc (0, 1 or 2) for `odd` odd rows; mirrors `tsparse_odd_disc`.
fn tsparse_disc_for(odd: usize, t: usize, n: usize) -> usize {
    match (n % 2 == 0, odd) {
        (true, 0) => 0,
        (true, _) => 1,
        (false, k) if k >= t => 1,
        (false, _) => 2,
    }
}

/// Limiting law of the t-sparse disc: the row-sum parity vector becomes
/// uniform on its parity class, so the number of odd rows is a
/// parity-conditioned binomial.
pub fn tsparse_predicted_law(m: usize, t: usize, n: usize) -> [crate::exact::Q; 3] {
    use num_traits::Zero;
    let w = conditioned_binomial(m, (n * t) % 2);
    let mut law = [crate::exact::Q::zero(), crate::exact::Q::zero(), crate::exact::Q::zero()];
    for (k, p) in w.exact.expect("conditioned binomial is exact").into_iter().enumerate() {
        law[tsparse_disc_for(k, t, n)] += p;
    }
    law
}

pub fn run_tsparse_disc(cfg: &ExperimentConfig) -> Result<(Vec<TsparseRecord>, TsparseAggregate)> {
    let (m, t, n) = (cfg.m.unwrap_or(0), cfg.t.unwrap_or(0), cfg.n.unwrap_or(0));
    let dist = ColumnDistribution::tsparse(m, t)?;
    let records = trials(cfg.trials, |trial| {
        let mut rng = substream(cfg.seed, trial as u64);
        let mat = dist.sample_int_matrix(n, &mut rng)?;
        let check = rng.random::<f64>() < cfg.subsample_check;
        let sums = mat.row_sums();
        let closed = tsparse_odd_disc(&sums, t, n)?;
        if check {
            let parity = parity_lower_bound(&mat, Norm::Sup)?;
            if !parity.exact || (parity.distance - closed as f64).abs() > 1e-9 {
                return Err(Error::Aborted(format!(
                    "trial {trial}: closed form {closed} but parity bound {}",
                    parity.distance
                )));
            }
            if !disc_decision_dp(&mat, closed as i64)?.feasible {
                return Err(Error::Aborted(format!("trial {trial}: no coloring reaches the closed form {closed}")));
            }
        }
        Ok(TsparseRecord {
            trial,
            n_parity: (n % 2) as u8,
            num_odd_rows: sums.iter().filter(|&&x| x % 2 != 0).count(),
            disc_closed_form: closed,
            disc_dp_confirmed: check,
            disc: closed,
        })
    })?;
    let mut counts = [0usize; 3];
    for r in records.iter().filter(|r| r.disc_dp_confirmed) {
        counts[r.disc as usize] += 1;
    }
    let certified: usize = counts.iter().sum();
    let law = tsparse_predicted_law(m, t, n);
    let predicted = law.clone().map(|q| crate::exact::to_f64(&q));
    let nn = certified.max(1) as f64;
    let agg = TsparseAggregate {
        m,
        t,
        n,
        trials: records.len(),
        certified,
        counts,
        freq: counts.map(|c| c as f64 / nn),
        stderr: predicted.map(|p| (p * (1.0 - p) / nn).sqrt()),
        predicted,
        predicted_exact: law.map(|q| q.to_string()),
        mixing_bound: mixing_bound(m, n),
    };
    Ok((records, agg))
}

// ---- llt ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LltAggregate {
    pub m: usize,
    pub n: usize,
    pub trials: usize,
    pub passes: usize,
    pub pass_rate: f64,
    pub stderr: f64,
    /// Every bulk coset point had positive probability in every sample.
    pub bulk_positive: bool,
}

pub fn run_llt(cfg: &ExperimentConfig) -> Result<(Vec<LltRecord>, LltAggregate)> {
    let dist = distribution(cfg)?;
    let n = cfg.n.unwrap_or(0);
    let iso = dist.isotropize()?;
    let out = trials(cfg.trials, |trial| {
        let mut rng = substream(cfg.seed, trial as u64);
        let mat = dist.sample_int_matrix(n, &mut rng)?;
        let cmp = llt_compare(&mat, &dist)?;
        let conc = concentration_check(&mat.to_f64().transform(&iso.transform)?);
        let rec = LltRecord {
            trial,
            pass: cmp.pass,
            max_abs_dev: cmp.max_abs_dev,
            bound: cmp.bound,
            min_eig: conc.min_eig,
            max_eig: conc.max_eig,
        };
        Ok((rec, cmp.bulk_positive))
    })?;
    let passes = out.iter().filter(|(r, _)| r.pass).count();
    let p = passes as f64 / out.len() as f64;
    let agg = LltAggregate {
        m: dist.dim(),
        n,
        trials: out.len(),
        passes,
        pass_rate: p,
        stderr: (p * (1.0 - p) / out.len() as f64).sqrt(),
        bulk_positive: out.iter().all(|(_, b)| *b),
    };
    Ok((out.into_iter().map(|(r, _)| r).collect(), agg))
}

// ---- unit-disc ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitDiscPoint {
    pub n: usize,
    pub median: f64,
    pub mean: f64,
    /// `√(n/m³)`.
    pub x: f64,
    /// Tent-smoothed mass of trial 0's descent endpoints at `K` equal to
    /// that trial's best value.
    pub smoothed_k: f64,
    pub smoothed: SmoothedMassRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothedMassRecord {
    pub mean: f64,
    pub stderr: f64,
    pub certified: bool,
}

impl From<SmoothedMass> for SmoothedMassRecord {
    fn from(s: SmoothedMass) -> Self {
        Self { mean: s.mean, stderr: s.stderr, certified: s.certified }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit { slope, intercept: my - slope * mx, r2 })
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        v[k / 2]
    } else {
        (v[k / 2 - 1] + v[k / 2]) / 2.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitDiscAggregate {
    pub m: usize,
    pub points: Vec<UnitDiscPoint>,
    /// Fit of `log(median)` on `√(n/m³)`.
    pub fit: Option<LinearFit>,
}

impl UnitDiscAggregate {
    fn verdicts(&self) -> Vec<Verdict> {
        let meds: Vec<f64> = self.points.iter().map(|p| p.median).collect();
        let dec = meds.windows(2).all(|w| w[1] < w[0]);
        let (fit_ok, fit_detail) = match &self.fit {
            Some(f) => (f.slope < 0.0 && f.r2 >= 0.8, format!("slope {}, R² {}", f.slope, f.r2)),
            None => (false, "no fit".into()),
        };
        let cert = self.points.iter().all(|p| p.smoothed.certified);
        vec![
            Verdict::new("median_decreasing", dec, format!("medians {meds:?}")),
            Verdict::new("log_fit", fit_ok, fit_detail),
            Verdict::new(
                "smoothed_mass_certified",
                cert,
                format!("{}/{} grid points certified", self.points.iter().filter(|p| p.smoothed.certified).count(), self.points.len()),
            ),
        ]
    }
}

pub fn run_unit_disc(cfg: &ExperimentConfig) -> Result<(Vec<UnitDiscRecord>, UnitDiscAggregate)> {
    let m = cfg.m.unwrap_or(0);
    let dist = match &cfg.distribution {
        Some(spec) => ColumnDistribution::new(spec.clone())?,
        None => ColumnDistribution::new(DistributionSpec::UnitSphere { m })?,
    };
    if dist.dim() != m {
        return Err(Error::Config { line: 1, msg: format!("distribution dimension {} differs from m = {m}", dist.dim()) });
    }
    let grid = cfg.n_grid.clone().unwrap_or_else(|| UNIT_DISC_GRID.to_vec());
    let per = cfg.trials;
    let out = trials(grid.len() * per, |idx| {
        let (gi, trial) = (idx / per, idx % per);
        let n = grid[gi];
        let mut rng = substream(cfg.seed, idx as u64);
        let mat = dist.sample_matrix(n, &mut rng);
        let best = local_search(&mat, cfg.norm, cfg.budgets.local_search, &mut rng);
        let smoothed = (trial == 0).then(|| {
            let ends = local_search_endpoints(&mat, cfg.norm, cfg.budgets.smoothed, &mut rng);
            let sums: Vec<Vec<f64>> = ends.into_iter().map(|e| e.sum).collect();
            (best.value, smoothed_mass(&sums, best.value))
        });
        Ok((UnitDiscRecord { m, n, trial, disc_heuristic: best.value }, smoothed))
    })?;
    let mut points = Vec::new();
    for (gi, &n) in grid.iter().enumerate() {
        let chunk = &out[gi * per..(gi + 1) * per];
        let vals: Vec<f64> = chunk.iter().map(|(r, _)| r.disc_heuristic).collect();
        let (k, sm) = chunk[0].1.clone().expect("trial 0 carries the smoothed mass");
        points.push(UnitDiscPoint {
            n,
            median: median(&vals),
            mean: vals.iter().sum::<f64>() / vals.len() as f64,
            x: (n as f64 / (m as f64).powi(3)).sqrt(),
            smoothed_k: k,
            smoothed: sm.into(),
        });
    }
    let usable: Vec<&UnitDiscPoint> = points.iter().filter(|p| p.median > 0.0).collect();
    let fit = linear_fit(
        &usable.iter().map(|p| p.x).collect::<Vec<_>>(),
        &usable.iter().map(|p| p.median.ln()).collect::<Vec<_>>(),
    );
    Ok((out.into_iter().map(|(r, _)| r).collect(), UnitDiscAggregate { m, points, fit }))
}

// ---- mixing ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityCurve {
    pub parity: usize,
    pub strictly_decreasing: bool,
    /// Slope of `log tv` against `n`.
    pub rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingAggregate {
    pub m: usize,
    pub t: usize,
    pub curves: Vec<ParityCurve>,
    /// `−2/m + 0.05`.
    pub rate_limit: f64,
    /// Grid points where `tv` exceeds `e^{−2n/m+m}`; reported, not fatal.
    pub bound_violations: Vec<usize>,
}

impl MixingAggregate {
    fn verdicts(&self) -> Vec<Verdict> {
        let mono = self.curves.iter().all(|c| c.strictly_decreasing);
        let rate = self.curves.iter().all(|c| c.rate.is_some_and(|r| r <= self.rate_limit));
        vec![
            Verdict::new("monotone", mono, "tv strictly decreasing along each parity of n".into()),
            Verdict::new(
                "rate",
                rate,
                format!("rates {:?} vs limit {}", self.curves.iter().map(|c| c.rate).collect::<Vec<_>>(), self.rate_limit),
            ),
        ]
    }
}

pub fn run_mixing(cfg: &ExperimentConfig) -> Result<(Vec<MixingRow>, MixingAggregate)> {
    let (m, t) = (cfg.m.unwrap_or(0), cfg.t.unwrap_or(0));
    let grid = cfg.n_grid.clone().unwrap_or_else(|| (m..=20 * m).collect());
    let rows: Vec<MixingRow> = trials(grid.len(), |i| Ok(tv_curve(m, t, &grid[i..=i])?.remove(0)))?;
    let curves = (0..2)
        .filter_map(|parity| {
            let sel: Vec<&MixingRow> = rows.iter().filter(|r| r.n % 2 == parity).collect();
            if sel.is_empty() {
                return None;
            }
            let pos: Vec<&&MixingRow> = sel.iter().filter(|r| r.tv > 0.0).collect();
            let fit = linear_fit(
                &pos.iter().map(|r| r.n as f64).collect::<Vec<_>>(),
                &pos.iter().map(|r| r.tv.ln()).collect::<Vec<_>>(),
            );
            Some(ParityCurve {
                parity,
                strictly_decreasing: sel.windows(2).all(|w| w[1].tv < w[0].tv),
                rate: fit.map(|f| f.slope),
            })
        })
        .collect();
    let agg = MixingAggregate {
        m,
        t,
        curves,
        rate_limit: -2.0 / m as f64 + 0.05,
        bound_violations: rows.iter().filter(|r| r.tv > r.bound).map(|r| r.n).collect(),
    };
    Ok((rows, agg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_json_str(text).unwrap()
    }

    #[test]
    fn predicted_law_matches_binomial_sums() {
        let law = tsparse_predicted_law(6, 2, 4000);
        assert_eq!(law[0].to_string(), "1/32");
        assert_eq!(law[1].to_string(), "31/32");
        let law = tsparse_predicted_law(6, 3, 4001);
        assert_eq!(law[1].to_string(), "13/16");
        assert_eq!(law[2].to_string(), "3/16");
    }

    #[test]
    fn fit_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|a| 2.0 - 0.5 * a).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12 && (f.intercept - 2.0).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
        assert_eq!(median(&[3.0, 1.0, 2.0, 10.0]), 2.5);
    }

    #[test]
    fn small_tsparse_run_is_reproducible() {
        let c = cfg(r#"{"kind": "tsparse-disc", "m": 4, "t": 2, "n": 200, "trials": 12, "seed": 9}"#);
        let a = run_experiment(&c).unwrap();
        let b = run_experiment(&ExperimentConfig { workers: Some(1), output: Some("elsewhere".into()), ..c.clone() })
            .unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.records.len(), 12);
        assert!(a.verdict("disc_le_2_all").unwrap().pass);
        let back = ExperimentReport::from_json_str(&a.to_json().unwrap()).unwrap();
        assert_eq!(back.records, a.records);
    }

    #[test]
    fn mixing_run_has_monotone_curves() {
        let c = cfg(r#"{"kind": "mixing", "m": 5, "t": 2, "n_grid": [5, 6, 7, 8, 9, 10, 11, 12], "seed": 0}"#);
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.records.len(), 8);
        assert!(r.verdict("monotone").unwrap().pass, "{:?}", r.verdicts);
    }
}
