//! Coefficient matrices over GF(2^8) and the linear solves of the decoder.

use rand::Rng;

use crate::error::{Error, Result};
use crate::gf256::{mul_acc, scale, Gf256};
use crate::subset::combinations;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Construction {
    /// Cauchy `1 / (x_i + y_j)` with `x_i = i`, `y_j = rows + j`.
    Mds,
    Random,
    Identity,
    /// Derived from another matrix (row or column selection).
    Derived,
}

/// Human-readable construction constants for run metadata.
pub const MDS_CONSTRUCTION: &str = "cauchy a[i][j] = 1/(i + (r + j)) over GF(2^8)/0x11d";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Gf256>,
    pub construction: Construction,
}

impl CoefficientMatrix {
    pub fn from_rows(rows: Vec<Vec<Gf256>>, construction: Construction) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InconsistentLengths("ragged matrix rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.into_iter().flatten().collect(),
            construction,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![Gf256::ZERO; n * n];
        for i in 0..n {
            data[i * n + i] = Gf256::ONE;
        }
        Self {
            rows: n,
            cols: n,
            data,
            construction: Construction::Identity,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Gf256 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[Gf256] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// The submatrix keeping `cols` (in the given order).
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let data = (0..self.rows)
            .flat_map(|r| cols.iter().map(move |&c| (r, c)))
            .map(|(r, c)| self.get(r, c))
            .collect();
        Self {
            rows: self.rows,
            cols: cols.len(),
            data,
            construction: Construction::Derived,
        }
    }

    pub fn without_column(&self, col: usize) -> Self {
        let keep: Vec<usize> = (0..self.cols).filter(|&c| c != col).collect();
        self.select_columns(&keep)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let data = rows.iter().flat_map(|&r| self.row(r).iter().copied()).collect();
        Self {
            rows: rows.len(),
            cols: self.cols,
            data,
            construction: Construction::Derived,
        }
    }

    /// Determinant by Gaussian elimination; `None` if not square.
    pub fn determinant(&self) -> Option<Gf256> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut m = self.data.clone();
        let mut det = Gf256::ONE;
        for col in 0..n {
            let Some(pivot) = (col..n).find(|&r| !m[r * n + col].is_zero()) else {
                return Some(Gf256::ZERO);
            };
            if pivot != col {
                for c in 0..n {
                    m.swap(pivot * n + c, col * n + c);
                }
                // row swaps flip the sign, which is a no-op in characteristic 2
            }
            let p = m[col * n + col];
            det *= p;
            let pinv = p.inv().ok()?;
            for r in col + 1..n {
                let f = m[r * n + col] * pinv;
                if f.is_zero() {
                    continue;
                }
                for c in col..n {
                    let v = m[col * n + c];
                    m[r * n + c] += f * v;
                }
            }
        }
        Some(det)
    }

    pub fn is_invertible(&self) -> bool {
        self.determinant().is_some_and(|d| !d.is_zero())
    }

    /// Every `rows × rows` column-subset is invertible.
    pub fn all_maximal_minors_invertible(&self) -> bool {
        if self.rows > self.cols {
            return false;
        }
        combinations(self.cols, self.rows).into_iter().all(|s| {
            let cols: Vec<usize> = s.members().collect();
            self.select_columns(&cols).is_invertible()
        })
    }

    /// `A · x` where each `x[c]` is a payload of equal byte length.
    pub fn apply(&self, x: &[Vec<u8>]) -> Result<Vec<Vec<u8>>> {
        if x.len() != self.cols {
            return Err(Error::InconsistentLengths(format!(
                "{} payloads for {} columns",
                x.len(),
                self.cols
            )));
        }
        let len = x.first().map_or(0, Vec::len);
        if x.iter().any(|p| p.len() != len) {
            return Err(Error::InconsistentLengths("payload lengths differ".into()));
        }
        Ok((0..self.rows)
            .map(|r| {
                let mut out = vec![0u8; len];
                for (c, p) in x.iter().enumerate() {
                    mul_acc(&mut out, p, self.get(r, c));
                }
                out
            })
            .collect())
    }
}

/// Cauchy matrix: every `rows × rows` submatrix is invertible.
///
/// Needs `rows + cols` distinct field elements, so `rows + cols ≤ 256`.
pub fn mds_matrix(rows: usize, cols: usize) -> Result<CoefficientMatrix> {
    if rows == 0 || rows > cols || cols > 255 || rows + cols > 256 {
        return Err(Error::SizeExceedsField { rows, cols });
    }
    let mut data = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let x = Gf256(i as u8);
            let y = Gf256((rows + j) as u8);
            data.push((x + y).inv()?);
        }
    }
    Ok(CoefficientMatrix {
        rows,
        cols,
        data,
        construction: Construction::Mds,
    })
}

/// Uniform random matrices redrawn until `accept` passes. Returns the matrix
/// and the number of draws it took (at least one).
pub fn random_matrix_with_retry<R, F>(
    rows: usize,
    cols: usize,
    rng: &mut R,
    accept: F,
    limit: u32,
) -> Result<(CoefficientMatrix, u32)>
where
    R: Rng + ?Sized,
    F: Fn(&CoefficientMatrix) -> bool,
{
    for attempt in 1..=limit {
        let data = (0..rows * cols).map(|_| Gf256(rng.gen())).collect();
        let m = CoefficientMatrix {
            rows,
            cols,
            data,
            construction: Construction::Random,
        };
        if accept(&m) {
            return Ok((m, attempt));
        }
    }
    Err(Error::RetryLimitExceeded(limit))
}

/// Solves `A · x = b` for square invertible `A`; payloads must share a length.
pub fn solve_linear_system(a: &CoefficientMatrix, b: &[Vec<u8>]) -> Result<Vec<Vec<u8>>> {
    let n = a.rows;
    if a.cols != n {
        return Err(Error::InconsistentLengths(format!("{}x{} system is not square", a.rows, a.cols)));
    }
    if b.len() != n {
        return Err(Error::InconsistentLengths(format!("{} right-hand sides for {n} rows", b.len())));
    }
    let len = b.first().map_or(0, Vec::len);
    if b.iter().any(|p| p.len() != len) {
        return Err(Error::InconsistentLengths("payload lengths differ".into()));
    }
    let mut m = a.data.clone();
    let mut rhs: Vec<Vec<u8>> = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !m[r * n + col].is_zero())
            .ok_or(Error::SingularMatrix)?;
        if pivot != col {
            for c in 0..n {
                m.swap(pivot * n + c, col * n + c);
            }
            rhs.swap(pivot, col);
        }
        let pinv = m[col * n + col].inv()?;
        for c in 0..n {
            m[col * n + c] *= pinv;
        }
        scale(&mut rhs[col], pinv);
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r * n + col];
            if f.is_zero() {
                continue;
            }
            for c in 0..n {
                let v = m[col * n + c];
                m[r * n + c] += f * v;
            }
            let (pivot_row, target) = if r < col {
                let (lo, hi) = rhs.split_at_mut(col);
                (&hi[0], &mut lo[r])
            } else {
                let (lo, hi) = rhs.split_at_mut(r);
                (&lo[col], &mut hi[0])
            };
            mul_acc(target, pivot_row, f);
        }
    }
    Ok(rhs)
}

/// Indices of `want` linearly independent rows, chosen greedily top-down.
pub fn independent_rows(a: &CoefficientMatrix, want: usize) -> Result<Vec<usize>> {
    let cols = a.cols;
    let mut basis: Vec<(usize, Vec<Gf256>)> = Vec::new(); // (pivot col, reduced row)
    let mut picked = Vec::new();
    for r in 0..a.rows {
        if picked.len() == want {
            break;
        }
        let mut row = a.row(r).to_vec();
        for (p, b) in &basis {
            let f = row[*p];
            if !f.is_zero() {
                for c in 0..cols {
                    row[c] += f * b[c];
                }
            }
        }
        if let Some(p) = row.iter().position(|v| !v.is_zero()) {
            let inv = row[p].inv()?;
            row.iter_mut().for_each(|v| *v *= inv);
            // keep the basis fully reduced on its pivot columns
            for (_, b) in basis.iter_mut() {
                let f = b[p];
                if !f.is_zero() {
                    for c in 0..cols {
                        b[c] += f * row[c];
                    }
                }
            }
            basis.push((p, row));
            picked.push(r);
        }
    }
    if picked.len() < want {
        return Err(Error::SingularMatrix);
    }
    Ok(picked)
}
