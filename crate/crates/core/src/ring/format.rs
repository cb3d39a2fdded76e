use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use super::{Element, Mode, RingSpec};
use crate::{Error, Result};

/// Text form `<ring>:<ell>:<lowest_degree>:<d0,d1,...>`, e.g. `zp:2:0:1,0,1`.
///
/// Parsing keeps the digits exactly as written so that printing a parsed
/// string reproduces it byte for byte. [`DigitString::from_element`] emits
/// the canonical form; zero is written `<ring>:<ell>:0:0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitString {
    pub ring: RingSpec,
    pub lowest_degree: i64,
    pub digits: Vec<u32>,
}

impl DigitString {
    pub fn from_element(e: &Element) -> DigitString {
        if e.is_zero() {
            return DigitString {
                ring: e.ring(),
                lowest_degree: 0,
                digits: alloc::vec![0],
            };
        }
        DigitString {
            ring: e.ring(),
            lowest_degree: e.lowest_degree(),
            digits: e.digits().to_vec(),
        }
    }

    /// The element these digits describe, known to working depth `depth`.
    pub fn to_element(&self, depth: i64) -> Result<Element> {
        Element::from_digits(&self.digits, self.lowest_degree, self.ring, depth)
    }

    /// Working depth at which the written digits are the whole expansion.
    pub fn written_depth(&self) -> i64 {
        self.lowest_degree + self.digits.len() as i64
    }
}

fn parse_err(input: &str, reason: &str) -> Error {
    Error::Parse {
        input: input.to_string(),
        reason: reason.to_string(),
    }
}

impl FromStr for DigitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<DigitString> {
        let mut parts = s.split(':');
        let (Some(mode), Some(ell), Some(low), Some(digits), None) = (
            parts.next(),
            parts.next(),
            parts.next(),
            parts.next(),
            parts.next(),
        ) else {
            return Err(parse_err(s, "expected four ':'-separated fields"));
        };
        let mode = Mode::from_token(mode).ok_or_else(|| parse_err(s, "ring must be zp or fq"))?;
        let ell: u32 = ell
            .parse()
            .map_err(|_| parse_err(s, "residue field size is not an integer"))?;
        let ring = RingSpec::new(ell, mode)?;
        let lowest_degree: i64 = low
            .parse()
            .map_err(|_| parse_err(s, "lowest degree is not an integer"))?;
        if digits.is_empty() {
            return Err(parse_err(s, "digit list is empty"));
        }
        let digits = digits
            .split(',')
            .map(|d| {
                let v: u32 = d
                    .parse()
                    .map_err(|_| parse_err(s, "digit is not an integer"))?;
                if v >= ell {
                    return Err(Error::DigitOutOfRange { digit: v, ell });
                }
                Ok(v)
            })
            .collect::<Result<Vec<u32>>>()?;
        Ok(DigitString {
            ring,
            lowest_degree,
            digits,
        })
    }
}

impl fmt::Display for DigitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}:",
            self.ring.mode(),
            self.ring.ell(),
            self.lowest_degree
        )?;
        for (i, d) in self.digits.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        DigitString::from_element(self).fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let s: DigitString = "zp:2:0:1,0,1".parse().unwrap();
        assert_eq!(s.to_string(), "zp:2:0:1,0,1");
        let e = s.to_element(8).unwrap();
        assert_eq!(e.cell_index(3).unwrap(), 5);
        assert_eq!(e.to_string(), "zp:2:0:1,0,1");

        let z: DigitString = "fq:2:0:0".parse().unwrap();
        assert!(z.to_element(4).unwrap().is_zero());
        assert_eq!(z.to_element(4).unwrap().to_string(), "fq:2:0:0");

        let k: DigitString = "fq:3:-2:1,2".parse().unwrap();
        assert_eq!(k.to_string(), "fq:3:-2:1,2");
    }

    #[test]
    fn canonical_emission_strips_zeros() {
        let s: DigitString = "zp:2:0:0,0,1,0".parse().unwrap();
        assert_eq!(s.to_element(8).unwrap().to_string(), "zp:2:2:1");
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "zp:2:0",
            "zz:2:0:1",
            "zp:4:0:1",
            "zp:2:x:1",
            "zp:2:0:",
            "zp:2:0:1,,0",
            "zp:2:0:2",
            "zp:2:0:1:1",
        ] {
            assert!(bad.parse::<DigitString>().is_err(), "{bad}");
        }
    }
}
