use super::{Field, FieldElement, GaloisError};

/// Dense row-major matrix over a binary extension field.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FieldMatrix {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<u16>,
}

impl FieldMatrix {
    pub fn new(
        field: Field,
        rows: usize,
        cols: usize,
        entries: Vec<FieldElement>,
    ) -> Result<Self, GaloisError> {
        if entries.len() != rows * cols {
            return Err(GaloisError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        let mut data = Vec::with_capacity(entries.len());
        for e in entries {
            if e.field() != field {
                return Err(GaloisError::FieldMismatch {
                    left: field.exponent(),
                    right: e.field().exponent(),
                });
            }
            data.push(e.value());
        }
        Ok(FieldMatrix {
            field,
            rows,
            cols,
            data,
        })
    }

    /// Builds from raw symbol values, checking each is in range.
    pub fn from_values(
        field: Field,
        rows: usize,
        cols: usize,
        values: Vec<u16>,
    ) -> Result<Self, GaloisError> {
        if values.len() != rows * cols {
            return Err(GaloisError::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                values.len()
            )));
        }
        if let Some(&v) = values.iter().find(|&&v| v as usize >= field.order()) {
            return Err(GaloisError::ValueOutOfRange {
                value: v,
                m: field.exponent(),
            });
        }
        Ok(FieldMatrix {
            field,
            rows,
            cols,
            data: values,
        })
    }

    pub fn zeros(field: Field, rows: usize, cols: usize) -> Self {
        FieldMatrix {
            field,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: Field, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// `rows x points.len()` matrix whose column `j` is `(1, x_j, x_j^2, ...)`.
    pub fn vandermonde(field: Field, rows: usize, points: &[u16]) -> Self {
        let cols = points.len();
        let mut m = Self::zeros(field, rows, cols);
        for (j, &x) in points.iter().enumerate() {
            let mut p = 1u16;
            for i in 0..rows {
                m.data[i * cols + j] = p;
                p = field.mul_raw(p, x);
            }
        }
        m
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[u16] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        self.field.elem(self.data[r * self.cols + c]).expect("stored values are in range")
    }

    pub(crate) fn raw(&self, r: usize, c: usize) -> u16 {
        self.data[r * self.cols + c]
    }

    pub(crate) fn set_raw(&mut self, r: usize, c: usize, v: u16) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[u16] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<u16> {
        (0..self.rows).map(|r| self.raw(r, c)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set_raw(c, r, self.raw(r, c));
            }
        }
        t
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut m = Self::zeros(self.field, self.rows, cols.len());
        for r in 0..self.rows {
            for (j, &c) in cols.iter().enumerate() {
                m.set_raw(r, j, self.raw(r, c));
            }
        }
        m
    }

    pub fn mul(&self, other: &FieldMatrix) -> Result<FieldMatrix, GaloisError> {
        self.check_field(other)?;
        if self.cols != other.rows {
            return Err(GaloisError::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.field, self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.raw(r, k);
                if a == 0 {
                    continue;
                }
                for c in 0..other.cols {
                    let v = out.raw(r, c) ^ self.field.mul_raw(a, other.raw(k, c));
                    out.set_raw(r, c, v);
                }
            }
        }
        Ok(out)
    }

    fn check_field(&self, other: &FieldMatrix) -> Result<(), GaloisError> {
        if self.field != other.field {
            return Err(GaloisError::FieldMismatch {
                left: self.field.exponent(),
                right: other.field.exponent(),
            });
        }
        Ok(())
    }

    pub fn inverse(&self) -> Result<FieldMatrix, GaloisError> {
        mat_solve(self, &FieldMatrix::identity(self.field, self.rows))
    }
}

/// Solves `A X = B` by Gauss-Jordan elimination with first-nonzero pivoting.
pub fn mat_solve(a: &FieldMatrix, b: &FieldMatrix) -> Result<FieldMatrix, GaloisError> {
    a.check_field(b)?;
    if a.rows != a.cols {
        return Err(GaloisError::DimensionMismatch(format!(
            "coefficient matrix is {}x{}, not square",
            a.rows, a.cols
        )));
    }
    if a.rows != b.rows {
        return Err(GaloisError::DimensionMismatch(format!(
            "{} equations but right-hand side has {} rows",
            a.rows, b.rows
        )));
    }
    let f = a.field;
    let n = a.rows;
    let mut lhs = a.clone();
    let mut rhs = b.clone();
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| lhs.raw(r, col) != 0)
            .ok_or(GaloisError::Singular)?;
        if pivot != col {
            swap_rows(&mut lhs, pivot, col);
            swap_rows(&mut rhs, pivot, col);
        }
        let inv = f.inv_raw(lhs.raw(col, col)).expect("pivot is nonzero");
        scale_row(&mut lhs, col, inv);
        scale_row(&mut rhs, col, inv);
        for r in 0..n {
            let factor = lhs.raw(r, col);
            if r == col || factor == 0 {
                continue;
            }
            eliminate(&mut lhs, r, col, factor);
            eliminate(&mut rhs, r, col, factor);
        }
    }
    Ok(rhs)
}

fn swap_rows(m: &mut FieldMatrix, a: usize, b: usize) {
    for c in 0..m.cols {
        m.data.swap(a * m.cols + c, b * m.cols + c);
    }
}

fn scale_row(m: &mut FieldMatrix, r: usize, s: u16) {
    for c in 0..m.cols {
        let v = m.field.mul_raw(m.raw(r, c), s);
        m.set_raw(r, c, v);
    }
}

// row[target] -= factor * row[source]
fn eliminate(m: &mut FieldMatrix, target: usize, source: usize, factor: u16) {
    for c in 0..m.cols {
        let v = m.raw(target, c) ^ m.field.mul_raw(factor, m.raw(source, c));
        m.set_raw(target, c, v);
    }
}
