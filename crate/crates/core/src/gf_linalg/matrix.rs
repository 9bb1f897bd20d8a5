use std::fmt;

use super::Field;
use crate::{Error, Result};

/// Dense row-major matrix over a prime field.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u32>,
    field: Field,
}

/// Solution set `{particular + kernel * t}` of a consistent linear system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineSolution {
    pub particular: Vec<u32>,
    /// Columns span the kernel of the system matrix.
    pub kernel: FMatrix,
}

impl FMatrix {
    /// Builds a matrix from row-major data, reducing every entry mod `p`.
    pub fn new(field: Field, rows: usize, cols: usize, data: Vec<u32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        let p = field.order();
        let data = data.into_iter().map(|x| x % p).collect();
        Ok(Self {
            rows,
            cols,
            data,
            field,
        })
    }

    /// Builds a matrix from integer rows. All rows must have equal length.
    pub fn from_rows<R: AsRef<[i64]>>(field: Field, rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend(r.iter().map(|&v| field.reduce(v)));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
            field,
        })
    }

    pub fn zeros(field: Field, rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
            field,
        }
    }

    pub fn identity(field: Field, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// Column matrix from a vector.
    pub fn column_vector(field: Field, v: &[u32]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.iter().map(|&x| x % field.order()).collect(),
            field,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn field(&self) -> Field {
        self.field
    }

    #[inline]
    pub fn data(&self) -> &[u32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u32) {
        self.data[r * self.cols + c] = v % self.field.order();
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[u32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<u32> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Rows as nested vectors, convenient for printing and serialization.
    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }

    fn check_field(&self, other: &Self) -> Result<()> {
        if self.field != other.field {
            return Err(Error::FieldMismatch {
                expected: self.field.order(),
                found: other.field.order(),
            });
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_field(other)?;
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = self.field;
        let mut out = Self::zeros(f, self.rows, other.cols);
        for r in 0..self.rows {
            let acc = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for (k, &a) in self.row(r).iter().enumerate() {
                f.axpy(acc, a, other.row(k));
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[u32]) -> Result<Vec<u32>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} matrix by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![0; self.rows];
        self.mul_vec_into(v, &mut out);
        Ok(out)
    }

    /// `out = self * v` without allocation. Lengths must already agree.
    #[inline]
    pub fn mul_vec_into(&self, v: &[u32], out: &mut [u32]) {
        debug_assert_eq!(v.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        let p = self.field.order() as u64;
        for (r, o) in out.iter_mut().enumerate() {
            let acc: u64 = self
                .row(r)
                .iter()
                .zip(v)
                .map(|(&a, &b)| a as u64 * b as u64 % p)
                .sum();
            *o = (acc % p) as u32;
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_field(other)?;
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::Dimension(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            data: self.field.add_vec(&self.data, &other.data),
            ..self.clone()
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Self {
            data: self.field.neg_vec(&self.data),
            ..self.clone()
        }
    }

    pub fn scale(&self, s: u32) -> Self {
        let f = self.field;
        Self {
            data: self.data.iter().map(|&x| f.mul(x, s)).collect(),
            ..self.clone()
        }
    }

    /// Square matrix power; `pow(0)` is the identity.
    pub fn pow(&self, e: usize) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::Dimension(format!(
                "power of non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let mut acc = Self::identity(self.field, self.rows);
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &Self) -> Result<Self> {
        self.check_field(other)?;
        if self.rows != other.rows {
            return Err(Error::Dimension(format!(
                "hstack of {} and {} rows",
                self.rows, other.rows
            )));
        }
        let mut out = Self::zeros(self.field, self.rows, self.cols + other.cols);
        out.set_block(0, 0, self);
        out.set_block(0, self.cols, other);
        Ok(out)
    }

    /// Vertical concatenation `[self; other]`.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        self.check_field(other)?;
        if self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "vstack of {} and {} columns",
                self.cols, other.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
            field: self.field,
        })
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    ///
    /// Panics if the block does not fit.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Self) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for r in 0..block.rows {
            let dst = (r0 + r) * self.cols + c0;
            self.data[dst..dst + block.cols].copy_from_slice(block.row(r));
        }
    }

    /// Sub-matrix of the given shape starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols);
        let mut out = Self::zeros(self.field, rows, cols);
        for r in 0..rows {
            let src = (r0 + r) * self.cols + c0;
            out.data[r * cols..(r + 1) * cols].copy_from_slice(&self.data[src..src + cols]);
        }
        out
    }

    /// Selects the given columns, in order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut out = Self::zeros(self.field, self.rows, cols.len());
        for r in 0..self.rows {
            for (j, &c) in cols.iter().enumerate() {
                out.data[r * cols.len() + j] = self.get(r, c);
            }
        }
        out
    }

    /// Reduced row echelon form and pivot columns.
    ///
    /// Pivots are taken as the first nonzero entry scanning columns left to
    /// right and rows top to bottom, so the result is fully deterministic.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let f = self.field;
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(pr) = (row..m.rows).find(|&r| m.get(r, col) != 0) else {
                continue;
            };
            if pr != row {
                for c in 0..m.cols {
                    m.data.swap(pr * m.cols + c, row * m.cols + c);
                }
            }
            let inv = f.inv(m.get(row, col)).expect("pivot is nonzero");
            for c in 0..m.cols {
                let v = m.get(row, c);
                m.data[row * m.cols + c] = f.mul(v, inv);
            }
            let pivot_row = m.row(row).to_vec();
            for r in 0..m.rows {
                if r == row {
                    continue;
                }
                let factor = m.get(r, col);
                if factor != 0 {
                    let start = r * m.cols;
                    f.axpy(&mut m.data[start..start + m.cols], f.neg(factor), &pivot_row);
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right kernel, one basis vector per column.
    ///
    /// The basis has one column per free variable of the reduced echelon
    /// form, with that variable set to 1 and the other free variables to 0.
    pub fn kernel_basis(&self) -> Self {
        let f = self.field;
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = Self::zeros(f, self.cols, free.len());
        for (j, &fc) in free.iter().enumerate() {
            basis.data[fc * free.len() + j] = 1;
            for (i, &pc) in pivots.iter().enumerate() {
                basis.data[pc * free.len() + j] = f.neg(r.get(i, fc));
            }
        }
        basis
    }

    /// Solves `self * x = b`. Returns `Ok(None)` when the system is
    /// inconsistent; otherwise one particular solution (free variables zero)
    /// together with a kernel basis.
    pub fn solve_affine(&self, b: &[u32]) -> Result<Option<AffineSolution>> {
        if b.len() != self.rows {
            return Err(Error::Dimension(format!(
                "right-hand side has length {}, matrix has {} rows",
                b.len(),
                self.rows
            )));
        }
        let aug = self.hstack(&Self::column_vector(self.field, b))?;
        let (r, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return Ok(None);
        }
        let mut particular = vec![0; self.cols];
        for (i, &pc) in pivots.iter().enumerate() {
            particular[pc] = r.get(i, self.cols);
        }
        Ok(Some(AffineSolution {
            particular,
            kernel: self.kernel_basis(),
        }))
    }
}

impl fmt::Debug for FMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FMatrix[GF({})] {:?}", self.field.order(), self.to_rows())
    }
}

impl fmt::Display for FMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(|x| x.to_string()).collect();
            writeln!(f, "[{}]", row.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf_linalg::next_lex;
    use proptest::prelude::*;

    fn gf(p: u32) -> Field {
        Field::new(p).unwrap()
    }

    #[test]
    fn rank_examples() {
        assert_eq!(FMatrix::identity(gf(2), 3).rank(), 3);
        assert_eq!(FMatrix::zeros(gf(2), 2, 4).rank(), 0);
        let m = FMatrix::from_rows(gf(5), &[[1, 4], [3, 0], [1, 0]]).unwrap();
        assert_eq!(m.rank(), 2);
    }

    #[test]
    fn kernel_examples() {
        let id = FMatrix::identity(gf(7), 4);
        assert_eq!(id.kernel_basis().cols(), 0);

        let parity = FMatrix::from_rows(gf(2), &[[1, 1]]).unwrap();
        let k = parity.kernel_basis();
        assert_eq!(k.to_rows(), vec![vec![1], vec![1]]);

        let h2 = FMatrix::from_rows(gf(5), &[[4, 0, 1, 3, 4, 3], [0, 4, 0, 0, 1, 3]]).unwrap();
        let k = h2.kernel_basis();
        assert_eq!(k.cols(), 4);
        assert!(h2.mul(&k).unwrap().is_zero());
        assert_eq!(k.rank(), 4);
    }

    #[test]
    fn solve_examples() {
        let f = gf(3);
        let sol = FMatrix::identity(f, 3)
            .solve_affine(&[2, 0, 1])
            .unwrap()
            .unwrap();
        assert_eq!(sol.particular, vec![2, 0, 1]);
        assert_eq!(sol.kernel.cols(), 0);

        assert!(FMatrix::zeros(f, 2, 2)
            .solve_affine(&[1, 0])
            .unwrap()
            .is_none());

        let m = FMatrix::from_rows(gf(2), &[[0, 1], [1, 1]]).unwrap();
        let sol = m.solve_affine(&[1, 0]).unwrap().unwrap();
        assert_eq!(sol.particular, vec![1, 1]);

        assert!(matches!(
            m.solve_affine(&[1]),
            Err(Error::Dimension(_))
        ));
    }

    fn small_matrix() -> impl Strategy<Value = (u32, usize, usize, Vec<u32>)> {
        (prop::sample::select(vec![2u32, 3, 5]), 1usize..4, 1usize..4).prop_flat_map(
            |(p, r, c)| (Just(p), Just(r), Just(c), prop::collection::vec(0..p, r * c)),
        )
    }

    proptest! {
        #[test]
        fn rank_is_transpose_invariant((p, r, c, data) in small_matrix()) {
            let m = FMatrix::new(gf(p), r, c, data).unwrap();
            prop_assert_eq!(m.rank(), m.transpose().rank());
        }

        #[test]
        fn kernel_has_full_nullity((p, r, c, data) in small_matrix()) {
            let m = FMatrix::new(gf(p), r, c, data).unwrap();
            let k = m.kernel_basis();
            prop_assert_eq!(k.cols(), c - m.rank());
            prop_assert_eq!(k.rank(), k.cols());
            prop_assert!(m.mul(&k).unwrap().is_zero());
        }

        #[test]
        fn affine_solution_set_matches_enumeration(
            (p, r, c, data) in small_matrix(),
            seed_b in prop::collection::vec(0u32..5, 4),
        ) {
            let f = gf(p);
            let m = FMatrix::new(f, r, c, data).unwrap();
            let b: Vec<u32> = seed_b[..r].iter().map(|x| x % p).collect();
            let mut count = 0u64;
            let mut x = vec![0; c];
            loop {
                if m.mul_vec(&x).unwrap() == b {
                    count += 1;
                }
                if !next_lex(f, &mut x) {
                    break;
                }
            }
            match m.solve_affine(&b).unwrap() {
                None => prop_assert_eq!(count, 0),
                Some(sol) => {
                    prop_assert_eq!(m.mul_vec(&sol.particular).unwrap(), b);
                    prop_assert_eq!(count, (p as u64).pow(sol.kernel.cols() as u32));
                    prop_assert_eq!(sol.kernel.cols(), c - m.rank());
                }
            }
        }
    }
}
