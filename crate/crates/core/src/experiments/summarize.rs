//! Pooling of reports of one kind, keyed by `(m, t, n)`. Pooled statistics
//! are recomputed from the concatenated per-trial records.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{median, ExperimentKind, ExperimentReport, Records};
use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TsparseSummaryRow {
    pub m: usize,
    pub t: usize,
    pub n: usize,
    pub trials: usize,
    pub certified: usize,
    pub count_0: usize,
    pub count_1: usize,
    pub count_2: usize,
    pub freq_0: f64,
    pub freq_1: f64,
    pub freq_2: f64,
    /// Empirical binomial standard errors.
    pub stderr_0: f64,
    pub stderr_1: f64,
    pub stderr_2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LltSummaryRow {
    pub m: usize,
    pub t: Option<usize>,
    pub n: usize,
    pub trials: usize,
    pub passes: usize,
    pub pass_rate: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitDiscSummaryRow {
    pub m: usize,
    pub n: usize,
    pub trials: usize,
    pub median: f64,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Summary {
    TsparseDisc(Vec<TsparseSummaryRow>),
    Llt(Vec<LltSummaryRow>),
    UnitDisc(Vec<UnitDiscSummaryRow>),
}

impl Summary {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        fn all<W: std::io::Write, T: Serialize>(w: W, rows: &[T]) -> Result<()> {
            let mut out = csv::Writer::from_writer(w);
            for r in rows {
                out.serialize(r)?;
            }
            out.flush()?;
            Ok(())
        }
        match self {
            Summary::TsparseDisc(r) => all(w, r),
            Summary::Llt(r) => all(w, r),
            Summary::UnitDisc(r) => all(w, r),
        }
    }
}

fn se(p: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        (p * (1.0 - p) / n as f64).sqrt()
    }
}

pub fn summarize_paths<P: AsRef<Path>>(paths: &[P]) -> Result<Summary> {
    let reports = paths.iter().map(|p| ExperimentReport::from_path(p.as_ref())).collect::<Result<Vec<_>>>()?;
    summarize(&reports)
}

pub fn summarize(reports: &[ExperimentReport]) -> Result<Summary> {
    let first = reports.first().ok_or_else(|| Error::Invalid("no reports to summarize".into()))?;
    let kind = first.kind;
    if let Some(r) = reports.iter().find(|r| r.kind != kind) {
        return Err(Error::Inconsistent(format!("mixed kinds: {} and {}", kind.name(), r.kind.name())));
    }
    for (i, a) in reports.iter().enumerate() {
        if reports[..i].iter().any(|b| b.config == a.config) {
            return Err(Error::Inconsistent(format!("two reports share the config with seed {}; pooling would count them twice", a.config.seed)));
        }
    }
    match kind {
        ExperimentKind::TsparseDisc => {
            let mut pool: BTreeMap<(usize, usize, usize), (usize, [usize; 3])> = BTreeMap::new();
            for rep in reports {
                let Records::TsparseDisc(recs) = &rep.records else { unreachable!() };
                let c = &rep.config;
                let e = pool.entry((c.m.unwrap_or(0), c.t.unwrap_or(0), c.n.unwrap_or(0))).or_default();
                for r in recs {
                    e.0 += 1;
                    if r.disc_dp_confirmed {
                        e.1[r.disc as usize] += 1;
                    }
                }
            }
            Ok(Summary::TsparseDisc(
                pool.into_iter()
                    .map(|((m, t, n), (trials, c))| {
                        let cert: usize = c.iter().sum();
                        let f = c.map(|x| x as f64 / cert.max(1) as f64);
                        TsparseSummaryRow {
                            m,
                            t,
                            n,
                            trials,
                            certified: cert,
                            count_0: c[0],
                            count_1: c[1],
                            count_2: c[2],
                            freq_0: f[0],
                            freq_1: f[1],
                            freq_2: f[2],
                            stderr_0: se(f[0], cert),
                            stderr_1: se(f[1], cert),
                            stderr_2: se(f[2], cert),
                        }
                    })
                    .collect(),
            ))
        }
        ExperimentKind::Llt => {
            let mut pool: BTreeMap<(usize, Option<usize>, usize), (usize, usize)> = BTreeMap::new();
            for rep in reports {
                let Records::Llt(recs) = &rep.records else { unreachable!() };
                let (m, t) = match &rep.config.distribution {
                    Some(DistributionSpec::TSparse { m, t }) => (*m, Some(*t)),
                    Some(DistributionSpec::UnitSphere { m }) => (*m, None),
                    Some(DistributionSpec::Finite { support, .. }) => (support.first().map_or(0, Vec::len), None),
                    None => (0, None),
                };
                let e = pool.entry((m, t, rep.config.n.unwrap_or(0))).or_default();
                e.0 += recs.len();
                e.1 += recs.iter().filter(|r| r.pass).count();
            }
            Ok(Summary::Llt(
                pool.into_iter()
                    .map(|((m, t, n), (trials, passes))| {
                        let p = passes as f64 / trials.max(1) as f64;
                        LltSummaryRow { m, t, n, trials, passes, pass_rate: p, stderr: se(p, trials) }
                    })
                    .collect(),
            ))
        }
        ExperimentKind::UnitDisc => {
            let mut pool: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
            for rep in reports {
                let Records::UnitDisc(recs) = &rep.records else { unreachable!() };
                for r in recs {
                    pool.entry((r.m, r.n)).or_default().push(r.disc_heuristic);
                }
            }
            Ok(Summary::UnitDisc(
                pool.into_iter()
                    .map(|((m, n), v)| UnitDiscSummaryRow {
                        m,
                        n,
                        trials: v.len(),
                        median: median(&v),
                        mean: v.iter().sum::<f64>() / v.len() as f64,
                    })
                    .collect(),
            ))
        }
        other => Err(Error::Unsupported(format!("summarize handles tsparse-disc, llt and unit-disc, not {}", other.name()))),
    }
}
