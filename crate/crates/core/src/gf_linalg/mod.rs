//! Exact arithmetic over prime fields `GF(p)`.
//!
//! Elements are plain `u32` values kept in `[0, p)`. The [`Field`] handle
//! carries the modulus and performs every operation, so vectors are ordinary
//! `Vec<u32>` / `&[u32]` slices. Dense matrices live in [`FMatrix`] and
//! polynomial matrices in [`FPolyMatrix`].

mod matrix;
mod poly;

pub use matrix::{AffineSolution, FMatrix};
pub use poly::{FPolyMatrix, Poly};

use crate::{Error, Result};

/// A prime field `GF(p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Field {
    p: u32,
}

impl Field {
    /// Fails with [`Error::NotPrime`] unless `p` is prime.
    pub fn new(p: u32) -> Result<Self> {
        if is_prime(p) {
            Ok(Self { p })
        } else {
            Err(Error::NotPrime(p))
        }
    }

    /// Number of field elements.
    #[inline]
    pub fn order(self) -> u32 {
        self.p
    }

    #[inline]
    pub fn reduce(self, v: i64) -> u32 {
        v.rem_euclid(self.p as i64) as u32
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        debug_assert!(a < self.p && b < self.p);
        let s = a as u64 + b as u64;
        if s >= self.p as u64 {
            (s - self.p as u64) as u32
        } else {
            s as u32
        }
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            (a as u64 + self.p as u64 - b as u64) as u32
        }
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.p as u64) as u32
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(self, a: u32) -> Result<u32> {
        if a.is_multiple_of(self.p) {
            return Err(Error::DivisionByZero);
        }
        Ok(self.pow(a, self.p as u64 - 2))
    }

    pub fn div(self, a: u32, b: u32) -> Result<u32> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(self, a: u32, mut e: u64) -> u32 {
        let m = self.p as u64;
        let mut base = a as u64 % m;
        let mut acc = 1 % m;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % m;
            }
            base = base * base % m;
            e >>= 1;
        }
        acc as u32
    }

    pub fn elements(self) -> impl Iterator<Item = u32> {
        0..self.p
    }

    /// Reduces a vector of integers into the field.
    pub fn vector(self, values: &[i64]) -> Vec<u32> {
        values.iter().map(|&v| self.reduce(v)).collect()
    }

    pub fn add_vec(self, a: &[u32], b: &[u32]) -> Vec<u32> {
        debug_assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(&x, &y)| self.add(x, y)).collect()
    }

    pub fn sub_vec(self, a: &[u32], b: &[u32]) -> Vec<u32> {
        debug_assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(&x, &y)| self.sub(x, y)).collect()
    }

    pub fn neg_vec(self, a: &[u32]) -> Vec<u32> {
        a.iter().map(|&x| self.neg(x)).collect()
    }

    /// `acc += scale * v`, in place.
    pub fn axpy(self, acc: &mut [u32], scale: u32, v: &[u32]) {
        if scale == 0 {
            return;
        }
        for (a, &x) in acc.iter_mut().zip(v) {
            *a = self.add(*a, self.mul(scale, x));
        }
    }
}

/// Hamming weight: number of nonzero symbols.
#[inline]
pub fn weight(v: &[u32]) -> usize {
    v.iter().filter(|&&x| x != 0).count()
}

/// Hamming distance between equal-length vectors.
#[inline]
pub fn hamming_distance(a: &[u32], b: &[u32]) -> usize {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p as u64 {
        if (p as u64).is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Odometer over all vectors of `F^len` in lexicographic order (first
/// coordinate most significant). Returns `false` after the last vector.
pub(crate) fn next_lex(field: Field, v: &mut [u32]) -> bool {
    for x in v.iter_mut().rev() {
        *x += 1;
        if *x < field.order() {
            return true;
        }
        *x = 0;
    }
    false
}

/// Index of a vector in the lexicographic enumeration of [`next_lex`].
pub(crate) fn lex_index(field: Field, v: &[u32]) -> usize {
    v.iter()
        .fold(0usize, |acc, &x| acc * field.order() as usize + x as usize)
}

/// Inverse of [`lex_index`].
pub(crate) fn lex_vector(field: Field, mut index: usize, len: usize) -> Vec<u32> {
    let p = field.order() as usize;
    let mut v = vec![0; len];
    for x in v.iter_mut().rev() {
        *x = (index % p) as u32;
        index /= p;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_composite_moduli() {
        assert_eq!(Field::new(4), Err(Error::NotPrime(4)));
        assert_eq!(Field::new(1), Err(Error::NotPrime(1)));
        assert!(Field::new(2).is_ok());
        assert!(Field::new(65_521).is_ok());
    }

    #[test]
    fn worked_values() {
        let f5 = Field::new(5).unwrap();
        let f2 = Field::new(2).unwrap();
        assert_eq!(f5.mul(3, 4), 2);
        assert_eq!(f2.add(1, 1), 0);
        // exhaustive search for the inverse of 4
        let inv4 = (0..5).find(|&x| f5.mul(4, x) == 1).unwrap();
        assert_eq!(inv4, 4);
        assert_eq!(f5.inv(4).unwrap(), 4);
        assert_eq!(f5.inv(0), Err(Error::DivisionByZero));
    }

    #[test]
    fn ops_agree_with_integers_exhaustively() {
        for p in [2u32, 3, 5, 7] {
            let f = Field::new(p).unwrap();
            for a in 0..p {
                assert_eq!(f.neg(a), (p - a) % p);
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
                }
                for b in 0..p {
                    let (ai, bi, pi) = (a as i64, b as i64, p as i64);
                    assert_eq!(f.add(a, b) as i64, (ai + bi).rem_euclid(pi));
                    assert_eq!(f.sub(a, b) as i64, (ai - bi).rem_euclid(pi));
                    assert_eq!(f.mul(a, b) as i64, (ai * bi).rem_euclid(pi));
                }
            }
        }
    }

    #[test]
    fn lex_enumeration_round_trips() {
        let f = Field::new(3).unwrap();
        let mut v = vec![0; 3];
        let mut idx = 0;
        loop {
            assert_eq!(lex_index(f, &v), idx);
            assert_eq!(lex_vector(f, idx, 3), v);
            idx += 1;
            if !next_lex(f, &mut v) {
                break;
            }
        }
        assert_eq!(idx, 27);
    }
}
