use std::fmt;

/// What an [`AlignMatrix`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixRole {
    Similarity,
    Kernel,
    Plan,
}

/// Dense row-major `n × m` matrix over source rows and target columns.
#[derive(Clone, PartialEq)]
pub struct AlignMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    pub role: MatrixRole,
}

impl AlignMatrix {
    pub fn zeros(rows: usize, cols: usize, role: MatrixRole) -> Self {
        AlignMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
            role,
        }
    }

    /// # Panics
    /// If `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>, role: MatrixRole) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data has wrong length");
        AlignMatrix {
            rows,
            cols,
            data,
            role,
        }
    }

    /// # Panics
    /// If the rows are ragged.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], role: MatrixRole) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            assert_eq!(row.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(row.as_ref());
        }
        AlignMatrix::from_vec(rows.len(), cols, data, role)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, v) in sums.iter_mut().zip(self.row(i)) {
                *s += v;
            }
        }
        sums
    }

    /// Largest `|sum - 1|` over rows and over columns.
    pub fn marginal_errors(&self) -> (f64, f64) {
        let dev = |s: Vec<f64>| s.into_iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
        (dev(self.row_sums()), dev(self.col_sums()))
    }
}

impl fmt::Debug for AlignMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "AlignMatrix[{:?}] {}x{}", self.role, self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        Ok(())
    }
}
