use core::cmp::{max, min};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use smallvec::SmallVec;

use super::{checked_pow, RingSpec, Valuation};
use crate::ring::Mode;
use crate::{Error, Result};

pub(crate) type Digits = SmallVec<[u32; 24]>;

/// An element of `K` known modulo `t^depth`.
///
/// Canonical form: `digits[i]` is the coefficient of `t^(low + i)`, the first
/// and last stored digits are nonzero, and every stored degree is below
/// `depth`. Zero has no digits and `low == 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Element {
    ring: RingSpec,
    low: i64,
    digits: Digits,
    depth: i64,
}

impl Element {
    /// Builds an element from the digit coefficients of degrees
    /// `lowest_degree, lowest_degree + 1, ..`. Digits at degrees `>= depth`
    /// are dropped.
    pub fn from_digits(
        digits: &[u32],
        lowest_degree: i64,
        ring: RingSpec,
        depth: i64,
    ) -> Result<Element> {
        if let Some(&d) = digits.iter().find(|&&d| d >= ring.ell()) {
            return Err(Error::DigitOutOfRange {
                digit: d,
                ell: ring.ell(),
            });
        }
        if digits.is_empty() {
            return Ok(Element::zero(ring, depth));
        }
        if depth <= lowest_degree {
            return Err(Error::BadDepth {
                depth,
                floor: lowest_degree,
            });
        }
        let keep = min(digits.len() as i64, depth - lowest_degree) as usize;
        Ok(Element::canonical(
            ring,
            lowest_degree,
            digits[..keep].iter().copied().collect(),
            depth,
        ))
    }

    pub fn zero(ring: RingSpec, depth: i64) -> Element {
        Element {
            ring,
            low: 0,
            digits: Digits::new(),
            depth,
        }
    }

    pub fn one(ring: RingSpec, depth: i64) -> Element {
        Element::from_small(ring, 1, depth)
    }

    /// `t^degree` (or `l^degree` in `Z_l`).
    pub fn uniformizer_power(ring: RingSpec, degree: i64, depth: i64) -> Element {
        Element::canonical(ring, degree, smallvec::smallvec![1], depth)
    }

    /// The residue-ring image of a small integer: base-`l` digits in `Z_l`,
    /// the constant `n mod l` in `F_l[[t]]`.
    pub fn from_small(ring: RingSpec, n: u64, depth: i64) -> Element {
        let ell = ring.ell() as u64;
        let digits: Digits = match ring.mode() {
            Mode::Padic => {
                let mut v = n;
                let mut out = Digits::new();
                while v > 0 {
                    out.push((v % ell) as u32);
                    v /= ell;
                }
                out
            }
            Mode::PowerSeries => smallvec::smallvec![(n % ell) as u32],
        };
        Element::canonical(ring, 0, digits, depth)
    }

    /// The element of `R` whose depth-`depth` cell has positional code `index`.
    pub fn from_cell_index(ring: RingSpec, index: u64, depth: i64) -> Element {
        let ell = ring.ell() as u64;
        let mut v = index;
        let mut digits = Digits::new();
        while v > 0 {
            digits.push((v % ell) as u32);
            v /= ell;
        }
        Element::canonical(ring, 0, digits, depth)
    }

    fn canonical(ring: RingSpec, mut low: i64, mut digits: Digits, depth: i64) -> Element {
        let cut = (depth - low).clamp(0, digits.len() as i64) as usize;
        digits.truncate(cut);
        while digits.last() == Some(&0) {
            digits.pop();
        }
        let lead = digits.iter().take_while(|&&d| d == 0).count();
        if lead == digits.len() {
            return Element::zero(ring, depth);
        }
        if lead > 0 {
            digits.drain(..lead);
            low += lead as i64;
        }
        Element {
            ring,
            low,
            digits,
            depth,
        }
    }

    #[inline]
    pub fn ring(&self) -> RingSpec {
        self.ring
    }

    #[inline]
    pub fn depth(&self) -> i64 {
        self.depth
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.digits.is_empty()
    }

    /// Degree of the first stored digit (the valuation, for nonzero elements).
    #[inline]
    pub fn lowest_degree(&self) -> i64 {
        self.low
    }

    /// Stored digits starting at [`Element::lowest_degree`].
    #[inline]
    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    /// Coefficient of `t^degree`; zero outside the stored window.
    #[inline]
    pub fn digit(&self, degree: i64) -> u32 {
        let i = degree - self.low;
        if i < 0 || i >= self.digits.len() as i64 {
            0
        } else {
            self.digits[i as usize]
        }
    }

    /// One past the highest stored degree (equal to `low` for zero).
    fn end(&self) -> i64 {
        self.low + self.digits.len() as i64
    }

    pub fn valuation(&self) -> Valuation {
        if self.is_zero() {
            Valuation::Infinite
        } else {
            Valuation::Finite(self.low)
        }
    }

    /// The valuation, or the working depth for zero: the element is known to
    /// lie in `t^v R` for this `v`.
    pub fn valuation_floor(&self) -> i64 {
        if self.is_zero() {
            self.depth
        } else {
            self.low
        }
    }

    /// `|x| = l^(-v(x))`, and `0` for zero.
    pub fn norm(&self) -> BigRational {
        if self.is_zero() {
            return BigRational::zero();
        }
        let base = BigInt::from(self.ring.ell());
        let p = num_traits::pow(base, self.low.unsigned_abs() as usize);
        if self.low >= 0 {
            BigRational::new(BigInt::one(), p)
        } else {
            BigRational::from_integer(p)
        }
    }

    pub fn in_ring_of_integers(&self) -> bool {
        self.is_zero() || self.low >= 0
    }

    fn check_ring(&self, other: &Element) -> Result<()> {
        if self.ring != other.ring {
            Err(Error::RingMismatch)
        } else {
            Ok(())
        }
    }

    /// Zeroes every digit of degree `>= depth`; the result has working depth
    /// `depth`.
    pub fn truncate(&self, depth: i64) -> Result<Element> {
        if depth > self.depth {
            return Err(Error::BadDepth {
                depth,
                floor: self.depth,
            });
        }
        Ok(Element::canonical(
            self.ring,
            self.low,
            self.digits.clone(),
            depth,
        ))
    }

    /// Drops all digits of negative degree.
    pub fn reduce_to_r(&self) -> Element {
        if self.low >= 0 {
            return self.clone();
        }
        let skip = min((-self.low) as usize, self.digits.len());
        Element::canonical(
            self.ring,
            0,
            self.digits[skip..].iter().copied().collect(),
            self.depth,
        )
    }

    /// Multiplication by `t^k`: exact, so the working depth shifts with it.
    pub fn shift(&self, k: i64) -> Element {
        let mut out = self.clone();
        if !out.is_zero() {
            out.low += k;
        }
        out.depth += k;
        out
    }

    /// Keeps the digits of degrees in `[lo, hi)`.
    pub fn digit_slice(&self, lo: i64, hi: i64) -> Element {
        let from = max(lo, self.low);
        let to = min(hi, self.end());
        if from >= to {
            return Element::zero(self.ring, self.depth);
        }
        let a = (from - self.low) as usize;
        let b = (to - self.low) as usize;
        Element::canonical(
            self.ring,
            from,
            self.digits[a..b].iter().copied().collect(),
            self.depth,
        )
    }

    /// Same value, reinterpreted at working depth `depth`. Only sound when the
    /// digits at degrees `>= self.depth()` are known to vanish.
    pub(crate) fn with_depth(&self, depth: i64) -> Element {
        Element::canonical(self.ring, self.low, self.digits.clone(), depth)
    }

    /// Positional code `sum digit_i l^i` over degrees `0..depth`.
    pub fn cell_index(&self, depth: i64) -> Result<u64> {
        if !self.in_ring_of_integers() {
            return Err(Error::NegativeValuation(self.low));
        }
        if depth > self.depth {
            return Err(Error::BadDepth {
                depth,
                floor: self.depth,
            });
        }
        let depth = max(depth, 0);
        let ell = self.ring.ell() as u64;
        if checked_pow(ell, depth as u64).is_none() {
            return Err(Error::IndexOverflow(alloc::format!("{}^{}", ell, depth)));
        }
        let mut code = 0u64;
        let top = min(depth, self.end());
        let mut deg = top - 1;
        while deg >= 0 {
            code = code * ell + self.digit(deg) as u64;
            deg -= 1;
        }
        Ok(code)
    }

    pub fn neg(&self) -> Element {
        if self.is_zero() {
            return self.clone();
        }
        let ell = self.ring.ell();
        match self.ring.mode() {
            Mode::PowerSeries => Element::canonical(
                self.ring,
                self.low,
                self.digits.iter().map(|&d| (ell - d) % ell).collect(),
                self.depth,
            ),
            Mode::Padic => {
                // -x = (l^n - x) mod l^n: complement every digit, first nonzero
                // digit against l, the rest against l - 1.
                let n = (self.depth - self.low) as usize;
                let mut out = Digits::with_capacity(n);
                out.push(ell - self.digits[0]);
                for i in 1..n {
                    let d = self.digits.get(i).copied().unwrap_or(0);
                    out.push(ell - 1 - d);
                }
                Element::canonical(self.ring, self.low, out, self.depth)
            }
        }
    }

    pub fn add(&self, other: &Element) -> Result<Element> {
        self.check_ring(other)?;
        let depth = min(self.depth, other.depth);
        if self.is_zero() {
            return other.truncate(depth);
        }
        if other.is_zero() {
            return self.truncate(depth);
        }
        let low = min(self.low, other.low);
        if low >= depth {
            return Ok(Element::zero(self.ring, depth));
        }
        let carry_room = match self.ring.mode() {
            Mode::Padic => 1,
            Mode::PowerSeries => 0,
        };
        let hi = min(depth, max(self.end(), other.end()) + carry_room);
        let n = (hi - low) as usize;
        let ell = self.ring.ell() as u64;
        let mut acc: SmallVec<[u64; 24]> = smallvec::smallvec![0; n];
        for src in [self, other] {
            let off = (src.low - low) as usize;
            for (i, &d) in src.digits.iter().enumerate() {
                if off + i < n {
                    acc[off + i] += d as u64;
                }
            }
        }
        let digits = match self.ring.mode() {
            Mode::PowerSeries => acc.iter().map(|&v| (v % ell) as u32).collect(),
            Mode::Padic => {
                let mut carry = 0u64;
                acc.iter()
                    .map(|&v| {
                        let s = v + carry;
                        carry = s / ell;
                        (s % ell) as u32
                    })
                    .collect()
            }
        };
        Ok(Element::canonical(self.ring, low, digits, depth))
    }

    pub fn sub(&self, other: &Element) -> Result<Element> {
        self.check_ring(other)?;
        self.add(&other.neg())
    }

    /// Product, exact below `min(W_a + v(b), W_b + v(a))`.
    pub fn mul(&self, other: &Element) -> Result<Element> {
        self.check_ring(other)?;
        let depth = min(
            self.depth + other.valuation_floor(),
            other.depth + self.valuation_floor(),
        );
        if self.is_zero() || other.is_zero() {
            return Ok(Element::zero(self.ring, depth));
        }
        let low = self.low + other.low;
        if low >= depth {
            return Ok(Element::zero(self.ring, depth));
        }
        let room = match self.ring.mode() {
            Mode::Padic => 2,
            Mode::PowerSeries => 0,
        };
        let hi = min(depth, self.end() + other.end() - 1 + room);
        let n = (hi - low) as usize;
        let ell = self.ring.ell() as u64;
        let digits = if ell < (1 << 16) {
            convolve::<u64>(&self.digits, &other.digits, n, ell, self.ring.mode())
        } else {
            convolve::<u128>(&self.digits, &other.digits, n, ell, self.ring.mode())
        };
        Ok(Element::canonical(self.ring, low, digits, depth))
    }

    /// The value as a nonnegative integer below `l^depth`, for elements of
    /// `R`; `Z_l` elements read as their integer residue.
    pub fn to_biguint(&self) -> Result<BigUint> {
        if !self.in_ring_of_integers() {
            return Err(Error::NegativeValuation(self.low));
        }
        let mut acc = BigUint::zero();
        for deg in (self.low..self.end()).rev() {
            acc = acc * self.ring.ell() + self.digit(deg);
        }
        Ok(acc * super::big_pow(self.ring.ell(), self.low as u64))
    }
}

trait Acc:
    Copy
    + core::ops::AddAssign
    + core::ops::Add<Output = Self>
    + core::ops::Mul<Output = Self>
    + core::ops::Div<Output = Self>
    + core::ops::Rem<Output = Self>
{
    const ZERO: Self;
    fn from_u64(v: u64) -> Self;
    fn low_u32(self) -> u32;
}

impl Acc for u64 {
    const ZERO: Self = 0;
    #[inline]
    fn from_u64(v: u64) -> Self {
        v
    }
    #[inline]
    fn low_u32(self) -> u32 {
        self as u32
    }
}

impl Acc for u128 {
    const ZERO: Self = 0;
    #[inline]
    fn from_u64(v: u64) -> Self {
        v as u128
    }
    #[inline]
    fn low_u32(self) -> u32 {
        self as u32
    }
}

fn convolve<A: Acc>(a: &[u32], b: &[u32], n: usize, ell: u64, mode: Mode) -> Digits {
    let mut acc: SmallVec<[A; 24]> = smallvec::smallvec![A::ZERO; n];
    for (i, &x) in a.iter().enumerate() {
        if i >= n || x == 0 {
            continue;
        }
        let x = A::from_u64(x as u64);
        for (j, &y) in b.iter().enumerate().take(n - i) {
            acc[i + j] += x * A::from_u64(y as u64);
        }
    }
    let l = A::from_u64(ell);
    match mode {
        Mode::PowerSeries => acc.iter().map(|&v| (v % l).low_u32()).collect(),
        Mode::Padic => {
            let mut carry = A::ZERO;
            acc.iter()
                .map(|&v| {
                    let s = v + carry;
                    carry = s / l;
                    (s % l).low_u32()
                })
                .collect()
        }
    }
}

/// Restartable stream of the `l^depth` residue-cell representatives of
/// `R / t^depth R`, in ascending cell-index order.
#[derive(Debug, Clone)]
pub struct Residues {
    ring: RingSpec,
    depth: i64,
    next: u64,
    end: u64,
}

impl Iterator for Residues {
    type Item = Element;

    fn next(&mut self) -> Option<Element> {
        if self.next >= self.end {
            return None;
        }
        let e = Element::from_cell_index(self.ring, self.next, self.depth);
        self.next += 1;
        Some(e)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.end - self.next) as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Residues {}

pub fn enumerate_residues(ring: RingSpec, depth: i64) -> Result<Residues> {
    if depth < 1 {
        return Err(Error::BadDepth { depth, floor: 0 });
    }
    let end = ring
        .checked_pow(depth as u64)
        .ok_or_else(|| Error::IndexOverflow(alloc::format!("{}^{}", ring.ell(), depth)))?;
    Ok(Residues {
        ring,
        depth,
        next: 0,
        end,
    })
}
