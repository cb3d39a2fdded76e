//! Surface families `f(x, y, w) : K^p x K^q x K^d -> K^(n-d)` with analytic
//! Jacobians. A constructed set contains the surface
//! `{(w, f(x, phi(x), w))}` for every direction `x`.

use alloc::string::String;
use alloc::vec;

use crate::phi::{PhiConfig, PhiEvaluator, PhiVariant};
use crate::ring::{CellArith, Element, Matrix, RingSpec, Vector};
use crate::{Error, Result};

/// Dimensions of a family; valid when `p <= n - d <= q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub p: usize,
    pub q: usize,
    pub d: usize,
    pub n: usize,
}

impl Dims {
    pub fn new(p: usize, q: usize, d: usize, n: usize) -> Result<Dims> {
        let bad = Error::BadDimensions { p, q, d, n };
        if p == 0 || q == 0 || d > n {
            return Err(bad);
        }
        let m = n - d;
        if !(p <= m && m <= q) {
            return Err(bad);
        }
        Ok(Dims { p, q, d, n })
    }

    /// Output dimension `n - d`.
    #[inline]
    pub fn codim(&self) -> usize {
        self.n - self.d
    }
}

/// A family of surfaces indexed by `(x, y)` and parameterized by `w`.
///
/// Implementations must be pure. Working depth flows through the element
/// arithmetic: an output is only as exact as its inputs allow.
pub trait Family: Send + Sync {
    fn name(&self) -> &str;
    fn ring(&self) -> RingSpec;
    fn dims(&self) -> Dims;
    fn eval(&self, x: &Vector, y: &Vector, w: &Vector) -> Result<Vector>;
    /// `(n-d) x p`
    fn dfdx(&self, x: &Vector, y: &Vector, w: &Vector) -> Result<Matrix>;
    /// `(n-d) x q`
    fn dfdy(&self, x: &Vector, y: &Vector, w: &Vector) -> Result<Matrix>;
    /// A `q x (n-d)` right inverse of [`Family::dfdy`]; `RankDeficient` where
    /// none exists.
    fn dfdy_right_inverse(&self, x: &Vector, y: &Vector, w: &Vector) -> Result<Matrix>;

    /// Whether [`Family::eval_cells`] is available: the output modulo `t^D`
    /// must depend only on the inputs modulo `t^D` (polynomial maps with
    /// coefficients in `R`).
    fn has_cell_map(&self) -> bool {
        false
    }

    /// `f` on residue codes modulo `t^D`, written into `z`.
    fn eval_cells(
        &self,
        ar: &CellArith,
        x: &[u64],
        y: &[u64],
        w: &[u64],
        z: &mut [u64],
    ) -> Result<()> {
        let _ = (ar, x, y, w, z);
        Err(Error::Unsupported(alloc::format!(
            "{} has no residue-code map",
            self.name()
        )))
    }
}

fn check_args(f: &dyn Family, x: &Vector, y: &Vector, w: &Vector) -> Result<()> {
    let dims = f.dims();
    for (v, want) in [(x, dims.p), (y, dims.q), (w, dims.d)] {
        if v.len() != want {
            return Err(Error::DimensionMismatch {
                expected: want,
                got: v.len(),
            });
        }
        if v.iter().any(|e| e.ring() != f.ring()) {
            return Err(Error::RingMismatch);
        }
    }
    Ok(())
}

fn const_depth(x: &Vector, y: &Vector, w: &Vector) -> i64 {
    [x, y, w]
        .iter()
        .flat_map(|v| v.iter().map(Element::depth))
        .max()
        .unwrap_or(1)
}

/// Lines `z = x w - y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KakeyaLines {
    ring: RingSpec,
}

/// Lines `z = y w - x`, direction and translation exchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NikodymLines {
    ring: RingSpec,
}

pub fn kakeya_line_family(ring: RingSpec) -> KakeyaLines {
    KakeyaLines { ring }
}

pub fn nikodym_line_family(ring: RingSpec) -> NikodymLines {
    NikodymLines { ring }
}

const LINE_DIMS: Dims = Dims {
    p: 1,
    q: 1,
    d: 1,
    n: 2,
};

impl Family for KakeyaLines {
    fn name(&self) -> &str {
        "kakeya"
    }

    fn ring(&self) -> RingSpec {
        self.ring
    }

    fn dims(&self) -> Dims {
        LINE_DIMS
    }

    fn eval(&self, x: &Vector, y: &Vector, w: &Vector) -> Result<Vector> {
        check_args(self, x, y, w)?;
        Vector::new(vec![x[0].mul(&w[0])?.sub(&y[0])?])
    }

    fn dfdx(&self, x: &Vector, y: &Vector, w: &Vector) -> Result<Matrix> {
        check_args(self, x, y, w)?;
        Ok(Matrix::scalar(w[0].clone()))
    }

    fn dfdy(&self, x: &Vector, y: &Vector, w: &Vector) -> Result<Matrix> {
        check_args(self, x, y, w)?;
        Ok(Matrix::scalar(
            Element::one(self.ring, const_depth(x, y, w)).neg(),
        ))
    }

    fn dfdy_right_inverse(&self, x: &Vector, y: &Vector, w: &Vector) -> Result<Matrix> {
        self.dfdy(x, y, w)
    }

    fn has_cell_map(&self) -> bool {
        true
    }

    fn eval_cells(
        &self,
        ar: &CellArith,
        x: &[u64],
        y: &[u64],
        w: &[u64],
        z: &mut [u64],
    ) -> Result<()> {
        z[0] = ar.sub(ar.mul(x[0], w[0]), y[0]);
        Ok(())
    }
}

impl Family for NikodymLines {
    fn name(&self) -> &str {
        "nikodym"
    }

    fn ring(&self) -> RingSpec {
        self.ring
    }

    fn dims(&self) -> Dims {
        LINE_DIMS
    }

    fn eval(&self, x: &Vector, y: &Vector, w: &Vector) -> Result<Vector> {
        check_args(self, x, y, w)?;
        Vector::new(vec![y[0].mul(&w[0])?.sub(&x[0])?])
    }

    fn dfdx(&self, x: &Vector, y: &Vector, w: &Vector) -> Result<Matrix> {
        check_args(self, x, y, w)?;
        Ok(Matrix::scalar(
            Element::one(self.ring, const_depth(x, y, w)).neg(),
        ))
    }

    fn dfdy(&self, x: &Vector, y: &Vector, w: &Vector) -> Result<Matrix> {
        check_args(self, x, y, w)?;
        Ok(Matrix::scalar(w[0].clone()))
    }

    /// `1 / w`, defined wherever `w` is nonzero at its working depth.
    fn dfdy_right_inverse(&self, x: &Vector, y: &Vector, w: &Vector) -> Result<Matrix> {
        check_args(self, x, y, w)?;
        Ok(Matrix::scalar(invert(&w[0])?))
    }

    fn has_cell_map(&self) -> bool {
        true
    }

    fn eval_cells(
        &self,
        ar: &CellArith,
        x: &[u64],
        y: &[u64],
        w: &[u64],
        z: &mut [u64],
    ) -> Result<()> {
        z[0] = ar.sub(ar.mul(y[0], w[0]), x[0]);
        Ok(())
    }
}

/// Multiplicative inverse of a nonzero element, by Newton iteration on the
/// unit part. For `w = t^v u` known to depth `W`, the result is exact below
/// `W - 2v`.
pub(crate) fn invert(w: &Element) -> Result<Element> {
    let Some(v) = w.valuation().finite() else {
        return Err(Error::RankDeficient);
    };
    let ring = w.ring();
    let unit = w.shift(-v);
    let rel = unit.depth();
    let ell = ring.ell() as u64;
    // inverse of the leading digit in F_l
    let u0 = unit.digit(0) as u64;
    let inv0 = (1..ell).find(|c| (c * u0) % ell == 1).expect("l is prime");
    let two = Element::from_small(ring, 2, rel);
    let mut y = Element::from_small(ring, inv0, 1);
    let mut prec = 1i64;
    while prec < rel {
        prec = (prec * 2).min(rel);
        let y_ext = y.truncate(y.depth().min(prec))?.with_depth(prec);
        let u = unit.truncate(prec)?;
        let corr = two.truncate(prec)?.sub(&u.mul(&y_ext)?)?;
        y = y_ext.mul(&corr)?.truncate(prec)?;
    }
    Ok(y.with_depth(rel).shift(-v))
}

/// `f(x, phi(x), w)` to `depth` digits, with `w` truncated to match.
pub fn family_point(
    fam: &dyn Family,
    variant: PhiVariant,
    x: &Vector,
    w: &Vector,
    depth: i64,
) -> Result<(Vector, Vector)> {
    let dims = fam.dims();
    let phi = PhiEvaluator::new(PhiConfig::new(fam.ring(), dims.p, dims.q)?, variant, depth)?;
    point_with(fam, &phi, x, w, depth)
}

/// [`family_point`] with a prepared `phi`.
pub fn point_with(
    fam: &dyn Family,
    phi: &PhiEvaluator,
    x: &Vector,
    w: &Vector,
    depth: i64,
) -> Result<(Vector, Vector)> {
    let y = phi.eval(x)?;
    let z = fam.eval(x, &y, w)?;
    let have = z.depth().min(w.depth());
    if have < depth {
        return Err(Error::InsufficientDepth {
            required: depth,
            available: have,
        });
    }
    Ok((w.truncate(depth)?, z.truncate(depth)?))
}

/// Looks up a built-in family by its CLI name.
pub fn builtin(name: &str, ring: RingSpec) -> Result<alloc::boxed::Box<dyn Family>> {
    match name {
        "kakeya" => Ok(alloc::boxed::Box::new(kakeya_line_family(ring))),
        "nikodym" => Ok(alloc::boxed::Box::new(nikodym_line_family(ring))),
        other => Err(Error::Unsupported(String::from("unknown family ") + other)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{enumerate_residues, Mode, Valuation};

    fn s(e: Element) -> Vector {
        Vector::new(vec![e]).unwrap()
    }

    fn ring(mode: Mode, ell: u32) -> RingSpec {
        RingSpec::new(ell, mode).unwrap()
    }

    #[test]
    fn dims_validation() {
        assert!(Dims::new(1, 1, 1, 2).is_ok());
        assert!(Dims::new(1, 2, 1, 3).is_ok());
        assert!(Dims::new(2, 1, 1, 3).is_err());
        assert!(Dims::new(1, 1, 1, 3).is_err());
    }

    #[test]
    fn kakeya_examples() {
        let r = ring(Mode::Padic, 2);
        let f = kakeya_line_family(r);
        let zero = s(Element::zero(r, 6));
        let y = s(Element::from_small(r, 5, 6));
        let w = s(Element::from_small(r, 3, 6));
        let z = f.eval(&zero, &y, &w).unwrap();
        assert_eq!(z, y.neg());
        let one = s(Element::one(r, 6));
        let z = f.eval(&one, &zero, &one).unwrap();
        assert_eq!(z, one);
    }

    #[test]
    fn nikodym_examples() {
        let r = ring(Mode::PowerSeries, 2);
        let f = nikodym_line_family(r);
        let x = s(Element::from_small(r, 1, 6));
        let zero = s(Element::zero(r, 6));
        for w in enumerate_residues(r, 3).unwrap() {
            let w = s(w.truncate(3).unwrap());
            let z = f.eval(&x, &zero, &w).unwrap().truncate(3).unwrap();
            assert_eq!(z, x.neg().truncate(3).unwrap());
        }
        let one = s(Element::one(r, 6));
        assert!(f.eval(&one, &one, &one).unwrap()[0].is_zero());
        assert_eq!(
            f.dfdy_right_inverse(&one, &one, &zero),
            Err(Error::RankDeficient)
        );
    }

    #[test]
    fn right_inverses_multiply_to_identity() {
        for mode in [Mode::Padic, Mode::PowerSeries] {
            for ell in [2u32, 3, 5] {
                let r = ring(mode, ell);
                let fams: [&dyn Family; 2] = [&kakeya_line_family(r), &nikodym_line_family(r)];
                let x = s(Element::one(r, 8));
                for f in fams {
                    for code in 1..(ell as u64).pow(3) {
                        let w = s(Element::from_cell_index(r, code, 8));
                        let jy = f.dfdy(&x, &x, &w).unwrap();
                        let inv = f.dfdy_right_inverse(&x, &x, &w).unwrap();
                        let prod = jy.mul_mat(&inv).unwrap();
                        let d = prod.depth();
                        assert!(d >= 1);
                        assert_eq!(prod, Matrix::identity(r, 1, d));
                    }
                }
            }
        }
    }

    #[test]
    fn inverse_of_laurent_element() {
        let r = ring(Mode::Padic, 3);
        // w = 3 * 2 = 6 at depth 8: inverse exact below 8 - 2 = 6
        let w = Element::from_small(r, 6, 8);
        let inv = invert(&w).unwrap();
        assert_eq!(inv.valuation(), Valuation::Finite(-1));
        assert_eq!(inv.depth(), 6);
        let one = w.mul(&inv).unwrap();
        assert_eq!(one, Element::one(r, one.depth()));
        assert_eq!(one.depth(), 7);
    }

    #[test]
    fn bilinear_first_order_remainder_vanishes() {
        // f(x+h) - f(x) - dfdx h is exactly zero for both families.
        for mode in [Mode::Padic, Mode::PowerSeries] {
            let r = ring(mode, 2);
            let fams: [&dyn Family; 2] = [&kakeya_line_family(r), &nikodym_line_family(r)];
            for f in fams {
                for (i, x) in enumerate_residues(r, 5).unwrap().enumerate() {
                    let x = s(x);
                    let h = s(Element::from_small(r, (i as u64 * 7 + 3) % 32, 5));
                    let y = s(Element::from_small(r, i as u64 % 5, 5));
                    let w = s(Element::from_small(r, i as u64 % 9, 5));
                    let lhs = f
                        .eval(&x.add(&h).unwrap(), &y, &w)
                        .unwrap()
                        .sub(&f.eval(&x, &y, &w).unwrap())
                        .unwrap()
                        .sub(&f.dfdx(&x, &y, &w).unwrap().mul_vec(&h).unwrap())
                        .unwrap();
                    assert!(lhs.iter().all(Element::is_zero));
                }
            }
        }
    }

    #[test]
    fn family_point_at_origin() {
        let r = ring(Mode::PowerSeries, 2);
        let f = kakeya_line_family(r);
        let x = s(Element::zero(r, 15));
        let w = s(Element::from_small(r, 3, 8));
        let (w_out, z) = family_point(&f, PhiVariant::Series, &x, &w, 8).unwrap();
        assert_eq!(w_out, w);
        assert!(z[0].is_zero());
    }

    #[test]
    fn family_point_digit_shift_matches_digit_rule() {
        let r = ring(Mode::PowerSeries, 2);
        let f = kakeya_line_family(r);
        let ones = Element::from_digits(&[1; 9], 0, r, 9).unwrap();
        let w = s(Element::one(r, 8));
        let (_, z) = family_point(&f, PhiVariant::DigitShift, &s(ones.clone()), &w, 8).unwrap();
        let phi = crate::phi::digit_shift_eval(&ones, 8).unwrap();
        let expect = ones.truncate(8).unwrap().sub(&phi).unwrap();
        assert_eq!(z[0], expect);
    }

    #[test]
    fn eval_matches_ring_oracle() {
        let r = ring(Mode::Padic, 3);
        let f = kakeya_line_family(r);
        let mut state = 12345u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 33) % 729
        };
        for _ in 0..100 {
            let (a, b, c) = (next(), next(), next());
            let e = |n| Element::from_small(r, n, 6);
            let z = f.eval(&s(e(a)), &s(e(b)), &s(e(c))).unwrap();
            let want = (a * c + 729 - b) % 729;
            assert_eq!(z[0], e(want));
        }
    }

    #[test]
    fn cell_maps_agree_with_eval() {
        for mode in [Mode::Padic, Mode::PowerSeries] {
            let r = ring(mode, 3);
            let ar = CellArith::new(r, 2).unwrap();
            for name in ["kakeya", "nikodym"] {
                let f = builtin(name, r).unwrap();
                assert!(f.has_cell_map());
                for code in 0..729u64 {
                    let (a, b, c) = (code % 9, code / 9 % 9, code / 81);
                    let e = |n| Element::from_cell_index(r, n, 2);
                    let z = f.eval(&s(e(a)), &s(e(b)), &s(e(c))).unwrap();
                    let mut out = [0u64];
                    f.eval_cells(&ar, &[a], &[b], &[c], &mut out).unwrap();
                    assert_eq!(out[0], z[0].truncate(2).unwrap().cell_index(2).unwrap());
                }
            }
        }
    }
}
