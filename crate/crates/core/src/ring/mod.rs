//! Finite-depth arithmetic over a discrete valuation ring with prime residue
//! field: the `l`-adic integers `Z_l` (digits carry) or the power series ring
//! `F_l[[t]]` (digits do not carry), and their fraction fields.
//!
//! Every element is a finite digit expansion `sum x_j t^j` with digits drawn
//! from `{0, .., l-1}` together with a working depth `W`: all degrees below
//! `W` are exact, nothing is known about degrees `>= W`. Arithmetic propagates
//! `W` pessimistically so an element never claims digits it does not know.

mod cells;
mod element;
mod format;
mod linalg;

use core::fmt;

use num_bigint::BigUint;

use crate::{Error, Result};

pub use cells::CellArith;
pub use element::{enumerate_residues, Element, Residues};
pub use format::DigitString;
pub use linalg::{Matrix, Vector};

/// How digits interact under addition and multiplication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// `Z_l`: base-`l` integer arithmetic with carries.
    Padic,
    /// `F_l[[t]]`: coefficient-wise arithmetic modulo `l`, no carries.
    PowerSeries,
}

impl Mode {
    /// Short token used by the digit-string format and the CLI.
    pub fn token(self) -> &'static str {
        match self {
            Mode::Padic => "zp",
            Mode::PowerSeries => "fq",
        }
    }

    pub fn from_token(s: &str) -> Option<Mode> {
        match s {
            "zp" => Some(Mode::Padic),
            "fq" => Some(Mode::PowerSeries),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// The ring `R` (and its fraction field `K`): residue field size and digit mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RingSpec {
    ell: u32,
    mode: Mode,
}

impl RingSpec {
    pub fn new(ell: u32, mode: Mode) -> Result<Self> {
        if !is_prime(ell) {
            return Err(Error::NotPrime(ell));
        }
        Ok(RingSpec { ell, mode })
    }

    pub fn padic(ell: u32) -> Result<Self> {
        Self::new(ell, Mode::Padic)
    }

    pub fn power_series(ell: u32) -> Result<Self> {
        Self::new(ell, Mode::PowerSeries)
    }

    #[inline]
    pub fn ell(&self) -> u32 {
        self.ell
    }

    #[inline]
    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// `l^exp` as a machine word, if it fits.
    pub fn checked_pow(&self, exp: u64) -> Option<u64> {
        checked_pow(self.ell as u64, exp)
    }

    /// `l^exp` exactly.
    pub fn big_pow(&self, exp: u64) -> BigUint {
        big_pow(self.ell, exp)
    }
}

impl fmt::Display for RingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.mode, self.ell)
    }
}

/// Valuation of an element: a finite degree or `Infinite` for zero.
///
/// The derived ordering places `Infinite` above every finite value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Valuation::Infinite)
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => f.write_str("inf"),
        }
    }
}

pub(crate) fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let n = n as u64;
    let mut d = 3u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

pub(crate) fn checked_pow(base: u64, exp: u64) -> Option<u64> {
    let exp = u32::try_from(exp).ok()?;
    base.checked_pow(exp)
}

pub(crate) fn big_pow(base: u32, exp: u64) -> BigUint {
    let mut acc = BigUint::from(1u32);
    let mut b = BigUint::from(base);
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            acc *= &b;
        }
        e >>= 1;
        if e > 0 {
            b = &b * &b;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality() {
        let primes: alloc::vec::Vec<u32> = (0..40).filter(|&n| is_prime(n)).collect();
        assert_eq!(primes, [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]);
        assert!(is_prime(4_294_967_291));
        assert_eq!(RingSpec::padic(4), Err(Error::NotPrime(4)));
        assert_eq!(RingSpec::power_series(1), Err(Error::NotPrime(1)));
    }

    #[test]
    fn valuation_order() {
        assert!(Valuation::Infinite > Valuation::Finite(i64::MAX));
        assert!(Valuation::Finite(-3) < Valuation::Finite(2));
    }

    #[test]
    fn powers() {
        let r = RingSpec::padic(3).unwrap();
        assert_eq!(r.checked_pow(4), Some(81));
        assert_eq!(r.checked_pow(41), None);
        assert_eq!(r.big_pow(41).to_string(), "36472996377170786403");
    }
}
