use alloc::vec::Vec;

use num_rational::BigRational;
use num_traits::Zero;

use super::{checked_pow, Element, RingSpec, Valuation};
use crate::{Error, Result};

/// A column vector in `K^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Vector(Vec<Element>);

impl Vector {
    pub fn new(entries: Vec<Element>) -> Result<Vector> {
        if let Some(first) = entries.first() {
            if entries.iter().any(|e| e.ring() != first.ring()) {
                return Err(Error::RingMismatch);
            }
        }
        Ok(Vector(entries))
    }

    pub fn zero(ring: RingSpec, dim: usize, depth: i64) -> Vector {
        Vector((0..dim).map(|_| Element::zero(ring, depth)).collect())
    }

    /// Inverse of [`Vector::cell_index`].
    pub fn from_cell_index(ring: RingSpec, index: u64, dim: usize, depth: i64) -> Result<Vector> {
        let radix = ring
            .checked_pow(depth.max(0) as u64)
            .ok_or_else(|| Error::IndexOverflow(alloc::format!("{}^{}", ring.ell(), depth)))?;
        let mut rest = index;
        let mut out = Vec::with_capacity(dim);
        for _ in 0..dim {
            out.push(Element::from_cell_index(ring, rest % radix, depth));
            rest /= radix;
        }
        Ok(Vector(out))
    }

    pub fn from_elements<I: IntoIterator<Item = Element>>(entries: I) -> Result<Vector> {
        Vector::new(entries.into_iter().collect())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn entries(&self) -> &[Element] {
        &self.0
    }

    pub fn into_entries(self) -> Vec<Element> {
        self.0
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Element> {
        self.0.iter()
    }

    /// Smallest working depth among the entries.
    pub fn depth(&self) -> i64 {
        self.0.iter().map(Element::depth).min().unwrap_or(i64::MAX)
    }

    /// Componentwise minimum valuation.
    pub fn valuation(&self) -> Valuation {
        self.0
            .iter()
            .map(Element::valuation)
            .min()
            .unwrap_or(Valuation::Infinite)
    }

    /// `max_i |x_i|`.
    pub fn norm(&self) -> BigRational {
        self.0
            .iter()
            .map(Element::norm)
            .max()
            .unwrap_or_else(BigRational::zero)
    }

    fn check_len(&self, other: &Vector) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        self.check_len(other)?;
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_>>()
            .map(Vector)
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        self.check_len(other)?;
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<_>>()
            .map(Vector)
    }

    pub fn neg(&self) -> Vector {
        Vector(self.0.iter().map(Element::neg).collect())
    }

    pub fn truncate(&self, depth: i64) -> Result<Vector> {
        self.0
            .iter()
            .map(|e| e.truncate(depth))
            .collect::<Result<_>>()
            .map(Vector)
    }

    pub fn reduce_to_r(&self) -> Vector {
        Vector(self.0.iter().map(Element::reduce_to_r).collect())
    }

    /// Mixed-radix code of the depth-`depth` cell: component 0 is the least
    /// significant place, each place has radix `l^depth`.
    pub fn cell_index(&self, depth: i64) -> Result<u64> {
        let Some(first) = self.0.first() else {
            return Ok(0);
        };
        let ring = first.ring();
        let radix = ring
            .checked_pow(depth.max(0) as u64)
            .ok_or_else(|| Error::IndexOverflow(alloc::format!("{}^{}", ring.ell(), depth)))?;
        checked_pow(radix, self.len() as u64).ok_or_else(|| {
            Error::IndexOverflow(alloc::format!("({}^{})^{}", ring.ell(), depth, self.len()))
        })?;
        let mut code = 0u64;
        for e in self.0.iter().rev() {
            code = code * radix + e.cell_index(depth)?;
        }
        Ok(code)
    }
}

impl core::ops::Index<usize> for Vector {
    type Output = Element;

    fn index(&self, i: usize) -> &Element {
        &self.0[i]
    }
}

impl<'a> IntoIterator for &'a Vector {
    type Item = &'a Element;
    type IntoIter = core::slice::Iter<'a, Element>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// A dense row-major matrix over `K`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    entries: Vec<Element>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Element>) -> Result<Matrix> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: entries.len(),
            });
        }
        if let Some(first) = entries.first() {
            if entries.iter().any(|e| e.ring() != first.ring()) {
                return Err(Error::RingMismatch);
            }
        }
        Ok(Matrix {
            rows,
            cols,
            entries,
        })
    }

    pub fn scalar(e: Element) -> Matrix {
        Matrix {
            rows: 1,
            cols: 1,
            entries: alloc::vec![e],
        }
    }

    pub fn identity(ring: RingSpec, n: usize, depth: i64) -> Matrix {
        let entries = (0..n * n)
            .map(|i| {
                if i / n == i % n {
                    Element::one(ring, depth)
                } else {
                    Element::zero(ring, depth)
                }
            })
            .collect();
        Matrix {
            rows: n,
            cols: n,
            entries,
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
    pub fn get(&self, r: usize, c: usize) -> &Element {
        &self.entries[r * self.cols + c]
    }

    pub fn entries(&self) -> &[Element] {
        &self.entries
    }

    pub fn valuation(&self) -> Valuation {
        self.entries
            .iter()
            .map(Element::valuation)
            .min()
            .unwrap_or(Valuation::Infinite)
    }

    pub fn norm(&self) -> BigRational {
        self.entries
            .iter()
            .map(Element::norm)
            .max()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn depth(&self) -> i64 {
        self.entries
            .iter()
            .map(Element::depth)
            .min()
            .unwrap_or(i64::MAX)
    }

    pub fn mul_vec(&self, v: &Vector) -> Result<Vector> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        let mut out = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            let mut acc: Option<Element> = None;
            for c in 0..self.cols {
                let term = self.get(r, c).mul(&v[c])?;
                acc = Some(match acc {
                    None => term,
                    Some(a) => a.add(&term)?,
                });
            }
            out.push(acc.unwrap_or_else(|| Element::zero(v[0].ring(), v.depth())));
        }
        Ok(Vector(out))
    }

    pub fn mul_mat(&self, other: &Matrix) -> Result<Matrix> {
        if other.rows != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut entries = Vec::with_capacity(self.rows * other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let mut acc = self.get(r, 0).mul(other.get(0, c))?;
                for k in 1..self.cols {
                    acc = acc.add(&self.get(r, k).mul(other.get(k, c))?)?;
                }
                entries.push(acc);
            }
        }
        Matrix::new(self.rows, other.cols, entries)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                got: other.rows * other.cols,
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_>>()?;
        Matrix::new(self.rows, self.cols, entries)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(Element::neg).collect(),
        }
    }

    pub fn truncate(&self, depth: i64) -> Result<Matrix> {
        let entries = self
            .entries
            .iter()
            .map(|e| e.truncate(depth))
            .collect::<Result<_>>()?;
        Matrix::new(self.rows, self.cols, entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_cell_round_trip() {
        let r = RingSpec::padic(3).unwrap();
        for idx in 0..81u64 {
            let v = Vector::from_cell_index(r, idx, 2, 2).unwrap();
            assert_eq!(v.cell_index(2).unwrap(), idx);
        }
        let v = Vector::from_cell_index(r, 5, 2, 2).unwrap();
        assert_eq!(v[0].cell_index(2).unwrap(), 5);
        assert!(v[1].is_zero());
    }

    #[test]
    fn norms_are_entry_maxima() {
        let r = RingSpec::padic(2).unwrap();
        let v = Vector::new(alloc::vec![
            Element::from_small(r, 4, 8),
            Element::from_small(r, 6, 8),
        ])
        .unwrap();
        assert_eq!(v.valuation(), Valuation::Finite(1));
        assert_eq!(v.norm(), BigRational::new(1.into(), 2.into()));
    }

    #[test]
    fn matrix_products() {
        let r = RingSpec::power_series(3).unwrap();
        let e = |n| Element::from_small(r, n, 6);
        let m = Matrix::new(2, 2, alloc::vec![e(1), e(2), e(0), e(1)]).unwrap();
        let v = Vector::new(alloc::vec![e(1), e(1)]).unwrap();
        let mv = m.mul_vec(&v).unwrap();
        assert!(mv[0].is_zero());
        assert_eq!(mv[1], e(1));
        let id = Matrix::identity(r, 2, 6);
        assert_eq!(m.mul_mat(&id).unwrap(), m);
        assert!(matches!(
            m.mul_vec(&Vector::zero(r, 3, 6)),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
