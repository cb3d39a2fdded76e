//! Arithmetic on depth-`D` residue codes `sum digit_i l^i` packed in a `u64`.
//! This is `R / t^D R` with the same digit rules as [`Element`](super::Element),
//! used by the exhaustive enumerators where allocation per operation is too
//! slow.

use super::{Mode, RingSpec};
use crate::{Error, Result};

const MAX_DIGITS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellArith {
    ring: RingSpec,
    depth: u32,
    modulus: u64,
}

impl CellArith {
    pub fn new(ring: RingSpec, depth: i64) -> Result<CellArith> {
        let overflow = || Error::IndexOverflow(alloc::format!("{}^{}", ring.ell(), depth));
        if depth < 1 {
            return Err(Error::BadDepth { depth, floor: 0 });
        }
        let modulus = ring.checked_pow(depth as u64).ok_or_else(overflow)?;
        if modulus > u64::MAX / 2 {
            return Err(overflow());
        }
        Ok(CellArith {
            ring,
            depth: depth as u32,
            modulus,
        })
    }

    pub fn ring(&self) -> RingSpec {
        self.ring
    }

    pub fn depth(&self) -> i64 {
        self.depth as i64
    }

    /// Number of codes, `l^D`.
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    fn split(&self, mut a: u64, out: &mut [u32; MAX_DIGITS]) {
        let ell = self.ring.ell() as u64;
        for d in out.iter_mut().take(self.depth as usize) {
            *d = (a % ell) as u32;
            a /= ell;
        }
    }

    fn join(&self, digits: &[u32; MAX_DIGITS]) -> u64 {
        let ell = self.ring.ell() as u64;
        digits[..self.depth as usize]
            .iter()
            .rev()
            .fold(0u64, |acc, &d| acc * ell + d as u64)
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        match (self.ring.mode(), self.ring.ell()) {
            (Mode::Padic, _) => (a + b) % self.modulus,
            (Mode::PowerSeries, 2) => a ^ b,
            (Mode::PowerSeries, ell) => self.digitwise(a, b, |x, y| (x + y) % ell),
        }
    }

    pub fn neg(&self, a: u64) -> u64 {
        match (self.ring.mode(), self.ring.ell()) {
            (Mode::Padic, _) => (self.modulus - a) % self.modulus,
            (Mode::PowerSeries, 2) => a,
            (Mode::PowerSeries, ell) => self.digitwise(a, 0, |x, _| (ell - x) % ell),
        }
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        match (self.ring.mode(), self.ring.ell()) {
            (Mode::Padic, _) => ((a as u128 * b as u128) % self.modulus as u128) as u64,
            (Mode::PowerSeries, 2) => {
                let mut acc = 0u64;
                let mut b = b;
                let mut shift = 0;
                while b != 0 && shift < self.depth {
                    if b & 1 == 1 {
                        acc ^= a << shift;
                    }
                    b >>= 1;
                    shift += 1;
                }
                acc & (self.modulus - 1)
            }
            (Mode::PowerSeries, ell) => {
                let (mut x, mut y, mut z) = ([0; MAX_DIGITS], [0; MAX_DIGITS], [0; MAX_DIGITS]);
                self.split(a, &mut x);
                self.split(b, &mut y);
                let n = self.depth as usize;
                for i in 0..n {
                    if x[i] == 0 {
                        continue;
                    }
                    for j in 0..n - i {
                        z[i + j] = (z[i + j] + x[i] * y[j]) % ell;
                    }
                }
                self.join(&z)
            }
        }
    }

    fn digitwise(&self, a: u64, b: u64, op: impl Fn(u32, u32) -> u32) -> u64 {
        let (mut x, mut y) = ([0; MAX_DIGITS], [0; MAX_DIGITS]);
        self.split(a, &mut x);
        self.split(b, &mut y);
        for i in 0..self.depth as usize {
            x[i] = op(x[i], y[i]);
        }
        self.join(&x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{enumerate_residues, Element};

    #[test]
    fn agrees_with_element_arithmetic() {
        for (ell, mode, depth) in [
            (2, Mode::Padic, 4),
            (2, Mode::PowerSeries, 4),
            (3, Mode::Padic, 3),
            (3, Mode::PowerSeries, 3),
            (5, Mode::PowerSeries, 2),
        ] {
            let ring = RingSpec::new(ell, mode).unwrap();
            let ar = CellArith::new(ring, depth).unwrap();
            let all: alloc::vec::Vec<Element> = enumerate_residues(ring, depth).unwrap().collect();
            for a in &all {
                let ca = a.cell_index(depth).unwrap();
                assert_eq!(ar.neg(ca), a.neg().cell_index(depth).unwrap());
                for b in &all {
                    let cb = b.cell_index(depth).unwrap();
                    let code = |e: Element| e.truncate(depth).unwrap().cell_index(depth).unwrap();
                    assert_eq!(ar.add(ca, cb), code(a.add(b).unwrap()));
                    assert_eq!(ar.sub(ca, cb), code(a.sub(b).unwrap()));
                    assert_eq!(ar.mul(ca, cb), code(a.mul(b).unwrap()));
                }
            }
        }
    }

    #[test]
    fn rejects_oversized_depth() {
        let ring = RingSpec::padic(2).unwrap();
        assert!(CellArith::new(ring, 62).is_ok());
        assert!(CellArith::new(ring, 64).is_err());
        assert!(CellArith::new(ring, 0).is_err());
    }
}
