//! Prime-field arithmetic and exact Gaussian elimination over GF(q).

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rand::Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Upper bound accepted by [`smallest_prime_geq`].
pub const PRIME_SEARCH_LIMIT: u64 = 1 << 40;

pub fn is_prime(x: u64) -> bool {
    if x < 2 {
        return false;
    }
    if x.is_multiple_of(2) {
        return x == 2;
    }
    let mut d = 3;
    while d * d <= x {
        if x.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Least prime `>= x`, by trial division.
pub fn smallest_prime_geq(x: u64) -> Result<u64> {
    if x > PRIME_SEARCH_LIMIT {
        return Err(Error::LimitExceeded(x as u128));
    }
    let mut p = x.max(2);
    while !is_prime(p) {
        p += 1;
    }
    Ok(p)
}

/// GF(q) for a prime `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct PrimeField {
    q: u64,
}

impl PrimeField {
    pub fn new(q: u64) -> Result<Self> {
        if !is_prime(q) {
            return Err(Error::FieldTooSmall { q, reason: "modulus is not prime".into() });
        }
        if q > PRIME_SEARCH_LIMIT {
            return Err(Error::LimitExceeded(q as u128));
        }
        Ok(PrimeField { q })
    }

    pub fn modulus(self) -> u64 {
        self.q
    }

    pub fn reduce(self, v: i64) -> u64 {
        v.rem_euclid(self.q as i64) as u64
    }

    pub fn add(self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    pub fn sub(self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    pub fn neg(self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    pub fn mul(self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.q as u128) as u64
    }

    pub fn pow(self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.q;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse of a nonzero element (Fermat).
    pub fn inv(self, a: u64) -> Option<u64> {
        (!a.is_multiple_of(self.q)).then(|| self.pow(a, self.q - 2))
    }

    pub fn random<R: Rng + ?Sized>(self, rng: &mut R) -> u64 {
        rng.gen_range(0..self.q)
    }

    pub fn element(self, v: u64) -> FieldElement {
        FieldElement { value: v % self.q, field: self }
    }
}

/// A value in a specific prime field; arithmetic between elements of
/// different fields panics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    field: PrimeField,
}

impl FieldElement {
    pub fn value(self) -> u64 {
        self.value
    }

    pub fn field(self) -> PrimeField {
        self.field
    }

    pub fn inv(self) -> Option<FieldElement> {
        self.field.inv(self.value).map(|v| self.field.element(v))
    }

    fn same_field(self, other: FieldElement) -> PrimeField {
        assert_eq!(self.field, other.field, "mixed field arithmetic");
        self.field
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Add for FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: Self) -> Self {
        let f = self.same_field(rhs);
        f.element(f.add(self.value, rhs.value))
    }
}

impl Sub for FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: Self) -> Self {
        let f = self.same_field(rhs);
        f.element(f.sub(self.value, rhs.value))
    }
}

impl Mul for FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: Self) -> Self {
        let f = self.same_field(rhs);
        f.element(f.mul(self.value, rhs.value))
    }
}

impl Div for FieldElement {
    type Output = FieldElement;
    // Division is multiplication by the inverse.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        self * rhs.inv().expect("division by zero in GF(q)")
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> Self {
        self.field.element(self.field.neg(self.value))
    }
}

/// Dense row-major matrix over one prime field.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldMatrix {
    field: PrimeField,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl Serialize for FieldMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq((0..self.rows).map(|r| self.row(r)))
    }
}

impl FieldMatrix {
    pub fn zeros(field: PrimeField, rows: usize, cols: usize) -> Self {
        FieldMatrix { field, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Entries may be any integers; they are reduced mod q.
    pub fn from_rows(field: PrimeField, rows: &[Vec<i64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch { expected: c, got: row.len() });
            }
            data.extend(row.iter().map(|&v| field.reduce(v)));
        }
        Ok(FieldMatrix { field, rows: r, cols: c, data })
    }

    /// Matrix whose columns are the given vectors (all of equal length).
    pub fn from_columns(field: PrimeField, height: usize, columns: &[Vec<u64>]) -> Self {
        let mut m = Self::zeros(field, height, columns.len());
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), height, "column length");
            for (i, &v) in col.iter().enumerate() {
                m.set(i, j, v % field.q);
            }
        }
        m
    }

    pub fn random<R: Rng + ?Sized>(field: PrimeField, rows: usize, cols: usize, rng: &mut R) -> Self {
        let data = (0..rows * cols).map(|_| field.random(rng)).collect();
        FieldMatrix { field, rows, cols, data }
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<u64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<u64>> {
        (0..self.cols).map(|c| self.column(c)).collect()
    }

    pub fn transpose(&self) -> FieldMatrix {
        let mut t = Self::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn mul(&self, other: &FieldMatrix) -> Result<FieldMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, got: other.rows });
        }
        let f = self.field;
        let mut out = Self::zeros(f, self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == 0 {
                    continue;
                }
                for c in 0..other.cols {
                    let v = f.add(out.get(r, c), f.mul(a, other.get(k, c)));
                    out.set(r, c, v);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[u64]) -> Result<Vec<u64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: v.len() });
        }
        let f = self.field;
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).fold(0, |acc, (&a, &b)| f.add(acc, f.mul(a, b))))
            .collect())
    }

    /// Horizontal concatenation `[A | B | ...]`.
    pub fn hcat(parts: &[&FieldMatrix]) -> Result<FieldMatrix> {
        let first = parts.first().ok_or(Error::DimensionMismatch { expected: 1, got: 0 })?;
        let rows = first.rows;
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut out = Self::zeros(first.field, rows, cols);
        let mut offset = 0;
        for p in parts {
            if p.rows != rows {
                return Err(Error::DimensionMismatch { expected: rows, got: p.rows });
            }
            for r in 0..rows {
                for c in 0..p.cols {
                    out.set(r, offset + c, p.get(r, c));
                }
            }
            offset += p.cols;
        }
        Ok(out)
    }

    /// In-place forward elimination. Returns (rank, pivot product with swap
    /// sign applied, i.e. the determinant when square and full rank).
    fn eliminate(&mut self) -> (usize, u64) {
        let f = self.field;
        let mut rank = 0;
        let mut det = 1 % f.q;
        for c in 0..self.cols {
            if rank == self.rows {
                break;
            }
            let Some(p) = (rank..self.rows).find(|&r| self.get(r, c) != 0) else {
                det = 0;
                continue;
            };
            if p != rank {
                for k in 0..self.cols {
                    self.data.swap(p * self.cols + k, rank * self.cols + k);
                }
                det = f.neg(det);
            }
            let pivot = self.get(rank, c);
            det = f.mul(det, pivot);
            let inv = f.inv(pivot).expect("nonzero pivot");
            for r in rank + 1..self.rows {
                let factor = f.mul(self.get(r, c), inv);
                if factor == 0 {
                    continue;
                }
                for k in c..self.cols {
                    let v = f.sub(self.get(r, k), f.mul(factor, self.get(rank, k)));
                    self.set(r, k, v);
                }
            }
            rank += 1;
        }
        (rank, det)
    }

    pub fn rank(&self) -> usize {
        self.clone().eliminate().0
    }

    pub fn det(&self) -> Result<FieldElement> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch { expected: self.rows, got: self.cols });
        }
        let (rank, det) = self.clone().eliminate();
        Ok(self.field.element(if rank == self.rows { det } else { 0 }))
    }

    /// Solves `A x = b` for square nonsingular `A` by Gauss-Jordan.
    pub fn solve(&self, b: &[u64]) -> Result<Vec<u64>> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch { expected: self.rows, got: self.cols });
        }
        if b.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, got: b.len() });
        }
        let rhs = FieldMatrix::from_columns(self.field, self.rows, &[b.to_vec()]);
        Ok(self.solve_matrix(&rhs)?.column(0))
    }

    pub fn inverse(&self) -> Result<FieldMatrix> {
        self.solve_matrix(&Self::identity(self.field, self.rows))
    }

    fn solve_matrix(&self, rhs: &FieldMatrix) -> Result<FieldMatrix> {
        let n = self.rows;
        let mut aug = Self::hcat(&[self, rhs])?;
        let f = self.field;
        for c in 0..n {
            let p = (c..n).find(|&r| aug.get(r, c) != 0).ok_or(Error::Singular)?;
            if p != c {
                for k in 0..aug.cols {
                    aug.data.swap(p * aug.cols + k, c * aug.cols + k);
                }
            }
            let inv = f.inv(aug.get(c, c)).expect("nonzero pivot");
            for k in 0..aug.cols {
                let v = f.mul(aug.get(c, k), inv);
                aug.set(c, k, v);
            }
            for r in 0..n {
                let factor = aug.get(r, c);
                if r == c || factor == 0 {
                    continue;
                }
                for k in 0..aug.cols {
                    let v = f.sub(aug.get(r, k), f.mul(factor, aug.get(c, k)));
                    aug.set(r, k, v);
                }
            }
        }
        let mut out = Self::zeros(f, n, rhs.cols);
        for r in 0..n {
            for c in 0..rhs.cols {
                out.set(r, c, aug.get(r, n + c));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gf(q: u64) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    #[test]
    fn primes() {
        assert_eq!(smallest_prime_geq(2).unwrap(), 2);
        assert_eq!(smallest_prime_geq(0).unwrap(), 2);
        assert_eq!(smallest_prime_geq(11).unwrap(), 11);
        assert_eq!(smallest_prime_geq(721).unwrap(), 727);
        assert_eq!(smallest_prime_geq(97).unwrap(), 97);
        assert!(smallest_prime_geq(PRIME_SEARCH_LIMIT + 1).is_err());
        assert!(PrimeField::new(12).is_err());
    }

    #[test]
    fn identity_and_singular() {
        let f = gf(5);
        let id = FieldMatrix::identity(f, 4);
        assert_eq!(id.rank(), 4);
        assert_eq!(id.det().unwrap().value(), 1);

        let m = FieldMatrix::from_rows(f, &[vec![1, 2], vec![2, 4]]).unwrap();
        assert_eq!(m.rank(), 1);
        assert_eq!(m.det().unwrap().value(), 0);
        assert_eq!(m.solve(&[1, 2]), Err(Error::Singular));
    }

    #[test]
    fn fig1_nodes_one_and_three_full_rank() {
        // columns over (a1, b1, a2, b2): a1, b1, a1+b1+a2+b2, a1+2b1+a2+2b2
        let f = gf(11);
        let m = FieldMatrix::from_columns(f, 4, &[vec![1, 0, 0, 0], vec![0, 1, 0, 0], vec![1, 1, 1, 1], vec![1, 2, 1, 2]]);
        assert_eq!(m.rank(), 4);
    }

    #[test]
    fn det_sign_and_value() {
        let f = gf(7);
        let m = FieldMatrix::from_rows(f, &[vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(m.det().unwrap().value(), 6);
        let m = FieldMatrix::from_rows(f, &[vec![2, 3], vec![1, 4]]).unwrap();
        assert_eq!(m.det().unwrap().value(), 5);
    }

    #[test]
    fn inverse_round_trip() {
        let f = gf(11);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut found = 0;
        while found < 20 {
            let a = FieldMatrix::random(f, 4, 4, &mut rng);
            if a.rank() < 4 {
                continue;
            }
            found += 1;
            let inv = a.inverse().unwrap();
            assert_eq!(a.mul(&inv).unwrap(), FieldMatrix::identity(f, 4));
        }
    }

    #[test]
    fn rectangular_rank() {
        let f = gf(5);
        let m = FieldMatrix::from_rows(f, &[vec![1, 2, 3], vec![2, 4, 6]]).unwrap();
        assert_eq!(m.rank(), 1);
        assert_eq!(m.transpose().rank(), 1);
        let m = FieldMatrix::from_rows(f, &[vec![1, 0, 3], vec![0, 1, 6]]).unwrap();
        assert_eq!(m.rank(), 2);
        assert!(m.det().is_err());
    }

    #[test]
    fn element_ops() {
        let f = gf(5);
        let a = f.element(3);
        let b = f.element(4);
        assert_eq!((a + b).value(), 2);
        assert_eq!((a - b).value(), 4);
        assert_eq!((a * b).value(), 2);
        assert_eq!((a / b * b).value(), 3);
        assert_eq!((-a).value(), 2);
        assert_eq!(f.element(0).inv(), None);
    }
}
