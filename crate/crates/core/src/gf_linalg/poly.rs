use std::fmt;

use super::{FMatrix, Field};
use crate::{Error, Result};

/// Polynomial over `GF(p)`, coefficients lowest degree first.
///
/// Trailing zero coefficients are always stripped, so the zero polynomial has
/// no coefficients and `degree == len - 1` otherwise.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Poly {
    field: Field,
    coeffs: Vec<u32>,
}

impl Poly {
    pub fn new(field: Field, coeffs: Vec<u32>) -> Self {
        let p = field.order();
        let mut poly = Self {
            field,
            coeffs: coeffs.into_iter().map(|c| c % p).collect(),
        };
        poly.normalize();
        poly
    }

    pub fn from_ints(field: Field, coeffs: &[i64]) -> Self {
        Self::new(field, field.vector(coeffs))
    }

    pub fn zero(field: Field) -> Self {
        Self {
            field,
            coeffs: Vec::new(),
        }
    }

    pub fn constant(field: Field, c: u32) -> Self {
        Self::new(field, vec![c])
    }

    /// The monomial `z`.
    pub fn z(field: Field) -> Self {
        Self::new(field, vec![0, 1])
    }

    fn normalize(&mut self) {
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[u32] {
        &self.coeffs
    }

    /// Coefficient of `z^i` (zero beyond the degree).
    pub fn coeff(&self, i: usize) -> u32 {
        self.coeffs.get(i).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn add(&self, other: &Self) -> Self {
        let f = self.field;
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len)
            .map(|i| f.add(self.coeff(i), other.coeff(i)))
            .collect();
        Self::new(f, coeffs)
    }

    pub fn neg(&self) -> Self {
        Self {
            field: self.field,
            coeffs: self.field.neg_vec(&self.coeffs),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let f = self.field;
        if self.is_zero() || other.is_zero() {
            return Self::zero(f);
        }
        let mut coeffs = vec![0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            f.axpy(&mut coeffs[i..i + other.coeffs.len()], a, &other.coeffs);
        }
        Self::new(f, coeffs)
    }

    pub fn scale(&self, s: u32) -> Self {
        let f = self.field;
        Self::new(f, self.coeffs.iter().map(|&c| f.mul(c, s)).collect())
    }

    /// Euclidean division, returns `(quotient, remainder)`.
    pub fn div_rem(&self, divisor: &Self) -> Result<(Self, Self)> {
        let f = self.field;
        let dd = divisor.degree().ok_or(Error::DivisionByZero)?;
        let lead_inv = f.inv(divisor.coeffs[dd])?;
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return Ok((Self::zero(f), self.clone()));
        }
        let mut quot = vec![0; rem.len() - dd];
        for i in (0..quot.len()).rev() {
            let c = f.mul(rem[i + dd], lead_inv);
            quot[i] = c;
            if c != 0 {
                f.axpy(&mut rem[i..i + dd + 1], f.neg(c), &divisor.coeffs);
            }
        }
        Ok((Self::new(f, quot), Self::new(f, rem)))
    }

    pub fn eval(&self, x: u32) -> u32 {
        let f = self.field;
        self.coeffs
            .iter()
            .rev()
            .fold(0, |acc, &c| f.add(f.mul(acc, x), c))
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, &c)| match (i, c) {
                (0, c) => c.to_string(),
                (1, 1) => "z".into(),
                (1, c) => format!("{c}z"),
                (i, 1) => format!("z^{i}"),
                (i, c) => format!("{c}z^{i}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// Matrix of polynomials over `GF(p)`.
#[derive(Clone, PartialEq, Eq)]
pub struct FPolyMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Poly>,
    field: Field,
}

impl FPolyMatrix {
    pub fn new(field: Field, rows: usize, cols: usize, entries: Vec<Poly>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} polynomial matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|e| e.field != field) {
            return Err(Error::FieldMismatch {
                expected: field.order(),
                found: bad.field.order(),
            });
        }
        Ok(Self {
            rows,
            cols,
            entries,
            field,
        })
    }

    /// Builds from rows of coefficient lists (lowest degree first).
    pub fn from_coeff_rows(field: Field, rows: &[Vec<Vec<i64>>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Dimension(format!(
                    "polynomial row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            entries.extend(r.iter().map(|c| Poly::from_ints(field, c)));
        }
        Self::new(field, rows.len(), cols, entries)
    }

    pub fn zeros(field: Field, rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Poly::zero(field); rows * cols],
            field,
        }
    }

    pub fn identity(field: Field, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.entries[i * n + i] = Poly::constant(field, 1);
        }
        m
    }

    /// Constant polynomial matrix.
    pub fn from_matrix(m: &FMatrix) -> Self {
        let f = m.field();
        let entries = m.data().iter().map(|&c| Poly::constant(f, c)).collect();
        Self {
            rows: m.rows(),
            cols: m.cols(),
            entries,
            field: f,
        }
    }

    /// `z I - A` for square `A`.
    pub fn resolvent_pencil(a: &FMatrix) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(Error::Dimension("zI - A needs square A".into()));
        }
        let f = a.field();
        let mut m = Self::from_matrix(&a.neg());
        for i in 0..a.rows() {
            let idx = i * a.cols() + i;
            m.entries[idx] = m.entries[idx].add(&Poly::z(f));
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn get(&self, r: usize, c: usize) -> &Poly {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Poly) {
        self.entries[r * self.cols + c] = v;
    }

    /// Rows reordered so that row `i` of the result is row `order[i]` here.
    pub fn permute_rows(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.rows];
        if order.len() != self.rows
            || order
                .iter()
                .any(|&i| i >= self.rows || std::mem::replace(&mut seen[i], true))
        {
            return Err(Error::InvalidParams(format!(
                "{order:?} is not a permutation of {} rows",
                self.rows
            )));
        }
        let mut entries = Vec::with_capacity(self.entries.len());
        for &r in order {
            entries.extend_from_slice(&self.entries[r * self.cols..(r + 1) * self.cols]);
        }
        Ok(Self {
            entries,
            ..self.clone()
        })
    }

    /// Rows `r0..r0 + rows`.
    pub fn row_block(&self, r0: usize, rows: usize) -> Self {
        Self {
            rows,
            cols: self.cols,
            entries: self.entries[r0 * self.cols..(r0 + rows) * self.cols].to_vec(),
            field: self.field,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::Dimension(format!(
                "cannot add {}x{} and {}x{} polynomial matrices",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add(b))
            .collect();
        Ok(Self {
            entries,
            ..self.clone()
        })
    }

    pub fn scale(&self, s: &Poly) -> Self {
        Self {
            entries: self.entries.iter().map(|e| e.mul(s)).collect(),
            ..self.clone()
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.field != other.field {
            return Err(Error::FieldMismatch {
                expected: self.field.order(),
                found: other.field.order(),
            });
        }
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{} polynomial matrices",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.field, self.rows, other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let mut acc = Poly::zero(self.field);
                for k in 0..self.cols {
                    acc = acc.add(&self.get(r, k).mul(other.get(k, c)));
                }
                out.entries[r * other.cols + c] = acc;
            }
        }
        Ok(out)
    }

    /// Determinant by fraction-free (Bareiss) elimination; the empty matrix
    /// has determinant 1.
    pub fn det(&self) -> Result<Poly> {
        if self.rows != self.cols {
            return Err(Error::Dimension(format!(
                "determinant of non-square {}x{} polynomial matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let f = self.field;
        let mut m: Vec<Vec<Poly>> = (0..n)
            .map(|r| self.entries[r * n..(r + 1) * n].to_vec())
            .collect();
        let mut prev = Poly::constant(f, 1);
        let mut negate = false;
        for k in 0..n {
            if m[k][k].is_zero() {
                let Some(swap) = (k + 1..n).find(|&r| !m[r][k].is_zero()) else {
                    return Ok(Poly::zero(f));
                };
                m.swap(k, swap);
                negate = !negate;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = m[i][j].mul(&m[k][k]).sub(&m[i][k].mul(&m[k][j]));
                    let (q, r) = num.div_rem(&prev)?;
                    debug_assert!(r.is_zero(), "Bareiss division must be exact");
                    m[i][j] = q;
                }
                m[i][k] = Poly::zero(f);
            }
            prev = m[k][k].clone();
        }
        let det = if n == 0 {
            Poly::constant(f, 1)
        } else {
            m[n - 1][n - 1].clone()
        };
        Ok(if negate { det.neg() } else { det })
    }

    fn minor(&self, skip_row: usize, skip_col: usize) -> Self {
        let n = self.rows;
        let mut entries = Vec::with_capacity((n - 1) * (n - 1));
        for r in (0..n).filter(|&r| r != skip_row) {
            for c in (0..n).filter(|&c| c != skip_col) {
                entries.push(self.get(r, c).clone());
            }
        }
        Self {
            rows: n - 1,
            cols: n - 1,
            entries,
            field: self.field,
        }
    }

    /// Classical adjugate, `adj(M) * M = det(M) I`.
    pub fn adjugate(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::Dimension("adjugate of non-square matrix".into()));
        }
        let n = self.rows;
        let mut out = Self::zeros(self.field, n, n);
        for r in 0..n {
            for c in 0..n {
                let cof = self.minor(c, r).det()?;
                out.entries[r * n + c] = if (r + c) % 2 == 0 { cof } else { cof.neg() };
            }
        }
        Ok(out)
    }
}

impl fmt::Debug for FPolyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FPolyMatrix[GF({})] [", self.field.order())?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self.get(r, c).to_string()).collect();
            write!(f, "[{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}
