use std::collections::HashSet;

use itertools::Itertools;

use super::{mat_solve, Field, FieldElement, FieldMatrix, GaloisError};

/// An `(n, kappa)` Reed-Solomon code given by its `kappa x n` Vandermonde
/// generator matrix. A message `c` maps to the codeword `c G`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RsCode {
    field: Field,
    kappa: usize,
    points: Vec<u16>,
    generator: FieldMatrix,
}

impl RsCode {
    /// Evaluation points `1, w, w^2, ..., w^(n-1)`.
    pub fn new(field: Field, n: usize, kappa: usize) -> Result<Self, GaloisError> {
        if n > field.order() - 1 {
            return Err(GaloisError::InvalidCode(format!(
                "n={n} exceeds the {} nonzero elements of {field:?}",
                field.order() - 1
            )));
        }
        let points = (0..n).map(|i| field.pow_primitive(i).value()).collect();
        Self::with_points(field, kappa, points)
    }

    pub fn with_points(field: Field, kappa: usize, points: Vec<u16>) -> Result<Self, GaloisError> {
        let n = points.len();
        if kappa == 0 || kappa >= n {
            return Err(GaloisError::InvalidCode(format!(
                "need 0 < kappa < n, got kappa={kappa} n={n}"
            )));
        }
        if n > field.order() {
            return Err(GaloisError::InvalidCode(format!(
                "n={n} exceeds field size {}",
                field.order()
            )));
        }
        let mut seen = HashSet::new();
        for &p in &points {
            field.elem(p)?;
            if !seen.insert(p) {
                return Err(GaloisError::InvalidCode(format!(
                    "evaluation point {p} repeated"
                )));
            }
        }
        let generator = FieldMatrix::vandermonde(field, kappa, &points);
        Ok(RsCode {
            field,
            kappa,
            points,
            generator,
        })
    }

    /// The (7,3) code over GF(8) whose column `i` (1-based) is
    /// `(1, w^i, w^2i)`, i.e. the generator matrix printed for the worked
    /// example, columns in the same order.
    pub fn example() -> Self {
        let f = Field::gf8();
        let points = (1..=7).map(|i| f.pow_primitive(i).value()).collect();
        Self::with_points(f, 3, points).expect("valid example code")
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn points(&self) -> &[u16] {
        &self.points
    }

    pub fn generator(&self) -> &FieldMatrix {
        &self.generator
    }

    /// Column `pos` of the generator (0-based).
    pub fn column(&self, pos: usize) -> Vec<u16> {
        self.generator.column(pos)
    }

    /// Largest `n_b` such that `n_s + 2 n_b <= n - kappa`.
    pub fn error_radius(&self, erasures: usize) -> usize {
        (self.n() - self.kappa).saturating_sub(erasures) / 2
    }

    pub fn encode(&self, message: &[FieldElement]) -> Result<Vec<FieldElement>, GaloisError> {
        if message.len() != self.kappa {
            return Err(GaloisError::DimensionMismatch(format!(
                "message has {} symbols, code dimension is {}",
                message.len(),
                self.kappa
            )));
        }
        let msg = FieldMatrix::new(self.field, 1, self.kappa, message.to_vec())?;
        let cw = msg.mul(&self.generator)?;
        Ok((0..self.n()).map(|j| cw.get(0, j)).collect())
    }

    /// Finds the `r x kappa` matrix `X` with `X g_p = observed[:, j]` for
    /// each `positions[j]`. Needs exactly `kappa` distinct positions.
    pub fn interpolate(
        &self,
        positions: &[usize],
        observed: &FieldMatrix,
    ) -> Result<FieldMatrix, GaloisError> {
        if positions.len() != self.kappa || observed.cols() != self.kappa {
            return Err(GaloisError::DimensionMismatch(format!(
                "interpolation needs {} positions and columns, got {} and {}",
                self.kappa,
                positions.len(),
                observed.cols()
            )));
        }
        self.check_positions(positions)?;
        let cols = self.generator.select_columns(positions);
        // X G_S = Y  <=>  G_S^T X^T = Y^T
        Ok(mat_solve(&cols.transpose(), &observed.transpose())?.transpose())
    }

    fn check_positions(&self, positions: &[usize]) -> Result<(), GaloisError> {
        let mut seen = HashSet::new();
        for &p in positions {
            if p >= self.n() {
                return Err(GaloisError::InvalidPosition { position: p, n: self.n() });
            }
            if !seen.insert(p) {
                return Err(GaloisError::DuplicatePosition(p));
            }
        }
        Ok(())
    }

    /// Joint erasure/error decoding. See [`rs_decode`].
    pub fn decode(
        &self,
        received: &[(usize, Option<FieldElement>)],
    ) -> Result<Vec<FieldElement>, GaloisError> {
        rs_decode(self, received)
    }
}

/// Decodes by interpolating `kappa`-subsets of the surviving symbols and
/// accepting the first candidate whose disagreement count lies within the
/// unique-decoding radius `floor((N - kappa) / 2)` of the `N` survivors.
///
/// Inside that radius the accepted candidate is the only codeword that close,
/// so whenever the actual corruption obeys `n_s + 2 n_b <= n - kappa` the
/// result is the transmitted message. If no candidate is close enough the
/// corruption is reported as [`GaloisError::DecodeFailure`].
pub fn rs_decode(
    code: &RsCode,
    received: &[(usize, Option<FieldElement>)],
) -> Result<Vec<FieldElement>, GaloisError> {
    let positions: Vec<usize> = received.iter().map(|(p, _)| *p).collect();
    code.check_positions(&positions)?;
    let mut avail_pos = Vec::new();
    let mut avail_val = Vec::new();
    for (p, v) in received {
        if let Some(v) = v {
            if v.field() != code.field {
                return Err(GaloisError::FieldMismatch {
                    left: code.field.exponent(),
                    right: v.field().exponent(),
                });
            }
            avail_pos.push(*p);
            avail_val.push(v.value());
        }
    }
    let available = avail_pos.len();
    if available < code.kappa {
        return Err(GaloisError::InsufficientData {
            needed: code.kappa,
            available,
        });
    }
    let radius = (available - code.kappa) / 2;
    let columns: Vec<Vec<u16>> = avail_pos.iter().map(|&p| code.column(p)).collect();
    let mut best = usize::MAX;
    let mut tried = HashSet::new();
    for subset in (0..available).combinations(code.kappa) {
        let pos: Vec<usize> = subset.iter().map(|&i| avail_pos[i]).collect();
        let vals: Vec<u16> = subset.iter().map(|&i| avail_val[i]).collect();
        let observed = FieldMatrix::from_values(code.field, 1, code.kappa, vals)?;
        let msg = code.interpolate(&pos, &observed)?;
        if !tried.insert(msg.values().to_vec()) {
            continue;
        }
        let disagreements = columns
            .iter()
            .zip(&avail_val)
            .filter(|(g, &y)| code.field.dot_raw(msg.row(0), g) != y)
            .count();
        if disagreements <= radius {
            return Ok((0..code.kappa).map(|j| msg.get(0, j)).collect());
        }
        best = best.min(disagreements);
    }
    Err(GaloisError::DecodeFailure {
        available,
        radius,
        closest: best,
    })
}
