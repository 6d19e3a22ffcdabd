//! Dense column-major matrices. Columns are the objects of interest here
//! (one column per sampled vector), so they are stored contiguously.

use std::io::Read;

use num_traits::{NumAssign, Signed, ToPrimitive};

use crate::error::{Error, Result};

/// Entry types the solvers can work over.
pub trait Entry:
    Copy + PartialOrd + Signed + NumAssign + ToPrimitive + Send + Sync + std::fmt::Debug + 'static
{
}

impl<T> Entry for T where
    T: Copy + PartialOrd + Signed + NumAssign + ToPrimitive + Send + Sync + std::fmt::Debug + 'static
{
}

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type IntMatrix = Matrix<i64>;
pub type RealMatrix = Matrix<f64>;

impl<T: Copy> Matrix<T> {
    pub fn from_columns(rows: usize, columns: &[Vec<T>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::Dimension(format!(
                    "column {j} has length {}, expected {rows}",
                    c.len()
                )));
            }
            data.extend_from_slice(c);
        }
        Ok(Self { rows, cols: columns.len(), data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let mut data = Vec::with_capacity(m * n);
        for j in 0..n {
            for r in rows {
                data.push(r[j]);
            }
        }
        Ok(Self { rows: m, cols: n, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[j * self.rows + i]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[T]> + '_ {
        (0..self.cols).map(move |j| self.col(j))
    }

    pub fn column_vecs(&self) -> Vec<Vec<T>> {
        self.columns().map(<[T]>::to_vec).collect()
    }

    pub fn row_vecs(&self) -> Vec<Vec<T>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        Self { rows: self.rows, cols: idx.len(), data }
    }
}

impl<T: Entry> Matrix<T> {
    /// `M·1`, the vector of row sums.
    pub fn row_sums(&self) -> Vec<T> {
        let mut s = vec![T::zero(); self.rows];
        for c in self.columns() {
            for (a, &b) in s.iter_mut().zip(c) {
                *a += b;
            }
        }
        s
    }

    pub fn to_f64(&self) -> RealMatrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect(),
        }
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| {
            self.get(i, j).to_f64().unwrap_or(f64::NAN)
        })
    }
}

impl RealMatrix {
    /// Integer view when every entry is an exact integer.
    pub fn to_integer(&self) -> Option<IntMatrix> {
        let mut data = Vec::with_capacity(self.data.len());
        for &x in &self.data {
            if x.fract() != 0.0 || x.abs() > 9.0e15 {
                return None;
            }
            data.push(x as i64);
        }
        Some(Matrix { rows: self.rows, cols: self.cols, data })
    }

    /// Applies a linear map to every column.
    pub fn transform(&self, t: &nalgebra::DMatrix<f64>) -> Result<RealMatrix> {
        if t.ncols() != self.rows {
            return Err(Error::Dimension("transform width differs from row count".into()));
        }
        let cols: Vec<Vec<f64>> = self
            .columns()
            .map(|c| (t * nalgebra::DVector::from_column_slice(c)).as_slice().to_vec())
            .collect();
        Matrix::from_columns(t.nrows(), &cols)
    }
}

/// Reads a matrix from CSV: one matrix row per record, no header.
pub fn read_csv_matrix<R: Read>(reader: R) -> Result<RealMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|_| {
                    Error::Invalid(format!("row {}: cannot parse {s:?} as a number", i + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Invalid("empty matrix".into()));
    }
    Matrix::from_rows(&rows)
}
