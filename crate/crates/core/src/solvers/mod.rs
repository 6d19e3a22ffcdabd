//! Discrepancy `disc_*(M) = min_y ‖My‖_*` over colorings `y ∈ {±1}ⁿ`:
//! exhaustive Gray-code search, meet in the middle, a decision DP, the
//! parity lower bound `d_*(M·1, 2L)`, and a local-search heuristic.

mod dp;
mod enumerate;
mod local;
mod parity;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Norm;
use crate::matrix::{Entry, IntMatrix, Matrix};

pub use dp::{disc_decision_dp, disc_decision_dp_with, Decision, DEFAULT_STATE_CAP};
pub use enumerate::{disc_exact, disc_meet_middle, MAX_EXACT_COLUMNS, MAX_MEET_MIDDLE_COLUMNS};
pub use local::{local_search, local_search_endpoints, LocalOptimum};
pub use parity::{parity_lower_bound, tsparse_odd_disc, ParityBound};

/// Signs `±1`, one per column.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct Coloring(Vec<i8>);

impl Coloring {
    pub fn new(entries: Vec<i8>) -> Result<Self> {
        if entries.iter().any(|&e| e != 1 && e != -1) {
            return Err(Error::Invalid("coloring entries must be +1 or -1".into()));
        }
        Ok(Self(entries))
    }

    pub fn all_plus(n: usize) -> Self {
        Self(vec![1; n])
    }

    pub fn entries(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|e| -e).collect())
    }
}

impl TryFrom<Vec<i8>> for Coloring {
    type Error = Error;
    fn try_from(v: Vec<i8>) -> Result<Self> {
        Coloring::new(v)
    }
}

impl From<Coloring> for Vec<i8> {
    fn from(c: Coloring) -> Self {
        c.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GrayCode,
    MeetInMiddle,
    DecisionDp,
    LocalSearch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyResult {
    pub value: f64,
    pub certified: bool,
    pub method: Method,
    pub coloring: Coloring,
    /// `d_*(M·1, 2L)`; zero when no exact bound is available.
    pub lower_bound: f64,
}

/// `‖My‖_*`. Integer entries with the sup-norm are summed exactly.
pub fn disc_value<T: Entry>(m: &Matrix<T>, y: &Coloring, norm: Norm) -> Result<f64> {
    if y.len() != m.cols() {
        return Err(Error::Dimension(format!("coloring has {} entries for {} columns", y.len(), m.cols())));
    }
    let mut s = vec![T::zero(); m.rows()];
    for (c, &e) in m.columns().zip(y.entries()) {
        for (a, &b) in s.iter_mut().zip(c) {
            if e > 0 {
                *a += b;
            } else {
                *a -= b;
            }
        }
    }
    Ok(norm_of(&s, norm))
}

pub(crate) fn norm_of<T: Entry>(s: &[T], norm: Norm) -> f64 {
    match norm {
        Norm::Sup => s.iter().fold(T::zero(), |a, x| if x.abs() > a { x.abs() } else { a }).to_f64().unwrap_or(f64::NAN),
        Norm::Euclidean => s.iter().map(|x| x.to_f64().unwrap_or(f64::NAN).powi(2)).sum::<f64>().sqrt(),
    }
}

/// Integer copy of `m` when every entry is an exact integer.
pub fn as_integer<T: Entry>(m: &Matrix<T>) -> Option<IntMatrix> {
    let cols: Option<Vec<Vec<i64>>> = m
        .columns()
        .map(|c| {
            c.iter()
                .map(|x| {
                    let f = x.to_f64()?;
                    (f.fract() == 0.0 && f.abs() < 9.0e15).then_some(f as i64)
                })
                .collect()
        })
        .collect();
    Matrix::from_columns(m.rows(), &cols?).ok()
}

/// The exact parity bound when it is available, else 0.
pub(crate) fn certified_lower_bound<T: Entry>(m: &Matrix<T>, norm: Norm) -> f64 {
    match as_integer(m).map(|im| parity_lower_bound(&im, norm)) {
        Some(Ok(b)) if b.exact => b.distance,
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_of_simple_colorings() {
        let m = IntMatrix::from_rows(&[vec![5, 2]]).unwrap();
        let y = Coloring::new(vec![1, -1]).unwrap();
        assert_eq!(disc_value(&m, &y, Norm::Sup).unwrap(), 3.0);
        assert_eq!(disc_value(&m, &y.negated(), Norm::Sup).unwrap(), 3.0);
        assert!(disc_value(&m, &Coloring::all_plus(3), Norm::Sup).is_err());
        let z = IntMatrix::from_rows(&[vec![1, -1], vec![2, -2]]).unwrap();
        assert_eq!(disc_value(&z, &Coloring::all_plus(2), Norm::Euclidean).unwrap(), 0.0);
    }

    #[test]
    fn coloring_validation_and_json() {
        assert!(Coloring::new(vec![1, 0]).is_err());
        let c: Coloring = serde_json::from_str("[1,-1,1]").unwrap();
        assert_eq!(serde_json::to_string(&c).unwrap(), "[1,-1,1]");
        assert!(serde_json::from_str::<Coloring>("[2]").is_err());
    }

    #[test]
    fn result_json_fields() {
        let r = DiscrepancyResult {
            value: 3.0,
            certified: true,
            method: Method::GrayCode,
            coloring: Coloring::new(vec![1, -1]).unwrap(),
            lower_bound: 1.0,
        };
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["method"], "gray_code");
        assert_eq!(v["coloring"], serde_json::json!([1, -1]));
    }
}
