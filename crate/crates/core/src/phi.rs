//! The continuous function `phi : K^p -> R^q`.
//!
//! `phi(x) = sum_k r_k(x) p_k(x)` where `p_k` keeps the digits of degrees
//! `alpha(k) .. alpha(k+1)` and `r_k` runs through an enumeration of every
//! `q x p` matrix of locally constant `S_k`-valued functions, block `Omega_1`
//! first, then `Omega_2`, and so on.
//!
//! Enumeration order inside a block is lexicographic in the table
//! `(entry, cell) -> value`: matrix entries row-major (most significant),
//! then input cells by ascending [`Vector::cell_index`], and each place takes
//! the index of its value in [`sk_elements`] order.

use alloc::vec::Vec;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::ring::{checked_pow, Element, Matrix, RingSpec, Vector};
use crate::{Error, Result};

/// `alpha(j) = j(j+1)/2`.
#[inline]
pub const fn alpha(j: u64) -> u64 {
    j * (j + 1) / 2
}

/// `floor(log_l k)`, computed by comparison against powers of `l`.
pub fn lambda_floor(k: u64, ell: u32) -> Result<u64> {
    if k < 1 {
        return Err(Error::BadIndex(k));
    }
    Ok(lambda(k, ell))
}

/// [`lambda_floor`] with the floor at `k = 0` taken to be `lambda(1) = 0`.
pub(crate) fn lambda(k: u64, ell: u32) -> u64 {
    let ell = ell as u64;
    let mut e = 0;
    let mut pow = ell;
    while pow <= k {
        e += 1;
        match pow.checked_mul(ell) {
            Some(next) => pow = next,
            None => break,
        }
    }
    e
}

/// Lower bound `alpha(k) - lambda(max(k, 1))` on the valuation of the `k`-th
/// summand of `phi`.
pub fn summand_floor(k: u64, ell: u32) -> i64 {
    alpha(k) as i64 - lambda(k.max(1), ell) as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PhiConfig {
    pub ring: RingSpec,
    pub p_dim: usize,
    pub q_dim: usize,
}

impl PhiConfig {
    pub fn new(ring: RingSpec, p_dim: usize, q_dim: usize) -> Result<PhiConfig> {
        if p_dim == 0 || q_dim == 0 {
            return Err(Error::BadDimensions {
                p: p_dim,
                q: q_dim,
                d: 0,
                n: 0,
            });
        }
        Ok(PhiConfig { ring, p_dim, q_dim })
    }

    fn entries(&self) -> usize {
        self.p_dim * self.q_dim
    }
}

/// `|S_k| = l^(k + lambda(k) + 1)`.
pub fn sk_size(k: u64, ell: u32) -> BigUint {
    crate::ring::big_pow(ell, k + lambda(k.max(1), ell) + 1)
}

/// The `index`-th element of `S_k`: digits on degrees `[-lambda(k), k]`,
/// lowest degree least significant.
pub fn sk_element(k: u64, index: &BigUint, ring: RingSpec, depth: i64) -> Element {
    let lam = lambda(k.max(1), ring.ell()) as i64;
    let ell = BigUint::from(ring.ell());
    let mut rest = index.clone();
    let mut digits = Vec::new();
    while !rest.is_zero() {
        let (q, r) = rest.div_rem(&ell);
        digits.push(r.to_u32().unwrap_or(0));
        rest = q;
    }
    let top = (k as i64 + lam + 1) as usize;
    digits.truncate(top);
    let depth = depth.max(k as i64 + 1);
    Element::from_digits(&digits, -lam, ring, depth).expect("digits below l")
}

/// Position of `e` in [`sk_elements`] order.
pub fn sk_index(e: &Element, k: u64) -> Result<BigUint> {
    let ring = e.ring();
    let lam = lambda(k.max(1), ring.ell()) as i64;
    if e.is_zero() {
        return Ok(BigUint::zero());
    }
    let top = e.lowest_degree() + e.digits().len() as i64 - 1;
    if e.lowest_degree() < -lam || top > k as i64 {
        return Err(Error::NotInSk(alloc::format!("{e}"), k));
    }
    let mut acc = BigUint::zero();
    for deg in (-lam..=top).rev() {
        acc = acc * ring.ell() + e.digit(deg);
    }
    Ok(acc)
}

/// Restartable stream over `S_k`.
#[derive(Debug, Clone)]
pub struct SkElements {
    k: u64,
    ring: RingSpec,
    next: BigUint,
    end: BigUint,
}

impl Iterator for SkElements {
    type Item = Element;

    fn next(&mut self) -> Option<Element> {
        if self.next >= self.end {
            return None;
        }
        let e = sk_element(self.k, &self.next, self.ring, self.k as i64 + 1);
        self.next += 1u32;
        Some(e)
    }
}

/// All elements of `S_k`, each at working depth `k + 1`.
pub fn sk_elements(k: u64, ring: RingSpec) -> SkElements {
    SkElements {
        k,
        ring,
        next: BigUint::zero(),
        end: sk_size(k, ring.ell()),
    }
}

/// Number of input cells of depth `k` in `R^p`.
fn cell_count(k: u64, cfg: &PhiConfig) -> Result<u64> {
    checked_pow(cfg.ring.ell() as u64, k * cfg.p_dim as u64).ok_or_else(|| {
        Error::IndexOverflow(alloc::format!(
            "{}^{}",
            cfg.ring.ell(),
            k * cfg.p_dim as u64
        ))
    })
}

/// Number of places in a block-`k` table.
fn table_places(k: u64, cfg: &PhiConfig) -> Result<u64> {
    cell_count(k, cfg)?
        .checked_mul(cfg.entries() as u64)
        .ok_or_else(|| Error::IndexOverflow(alloc::format!("table of block {k}")))
}

/// `|Omega_k block| = |S_k|^(l^(k p) q p)`.
///
/// Fails only when the exponent itself does not fit in a machine word.
pub fn omega_block_size(k: u64, cfg: &PhiConfig) -> Result<BigUint> {
    let places = table_places(k, cfg)?;
    Ok(biguint_pow(&sk_size(k, cfg.ring.ell()), places))
}

fn biguint_pow(base: &BigUint, mut exp: u64) -> BigUint {
    let mut acc = BigUint::one();
    let mut b = base.clone();
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= &b;
        }
        exp >>= 1;
        if exp > 0 {
            b = &b * &b;
        }
    }
    acc
}

/// Locates the block containing global index `j`: `(k, offset of block k)`.
fn locate_block(j: &BigUint, cfg: &PhiConfig) -> (u64, BigUint) {
    let mut offset = BigUint::zero();
    let mut k = 1u64;
    loop {
        let rest_bits = (j - &offset).bits();
        // The block is certainly larger than the remaining index when its
        // bit length bound already exceeds it.
        let sk_bits = sk_size(k, cfg.ring.ell()).bits() - 1;
        let certainly_contains = match table_places(k, cfg) {
            Ok(places) => places.saturating_mul(sk_bits) > rest_bits + 1,
            Err(_) => true,
        };
        if certainly_contains {
            return (k, offset);
        }
        let size = omega_block_size(k, cfg).expect("places fit");
        if j < &(&offset + &size) {
            return (k, offset);
        }
        offset += size;
        k += 1;
    }
}

/// One enumerated matrix function `r_j`: a `q x p` matrix whose entries are
/// functions `R^p -> S_k` constant on depth-`k` cells, `k = k_block`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixFn {
    cfg: PhiConfig,
    k_block: u64,
    inner_index: BigUint,
    offset: BigUint,
}

impl MatrixFn {
    #[inline]
    pub fn k_block(&self) -> u64 {
        self.k_block
    }

    #[inline]
    pub fn inner_index(&self) -> &BigUint {
        &self.inner_index
    }

    /// Global enumeration index `j`.
    pub fn index(&self) -> BigUint {
        &self.offset + &self.inner_index
    }

    pub fn config(&self) -> &PhiConfig {
        &self.cfg
    }

    /// Number of depth-`k_block` input cells.
    pub fn cells(&self) -> u64 {
        cell_count(self.k_block, &self.cfg).expect("checked at decode")
    }

    /// Builds the block-`k` function with table `values[entry * cells + cell]`.
    pub fn from_table(cfg: PhiConfig, k: u64, values: &[Element]) -> Result<MatrixFn> {
        if k < 1 {
            return Err(Error::BadIndex(k));
        }
        let places = table_places(k, &cfg)?;
        if values.len() as u64 != places {
            return Err(Error::DimensionMismatch {
                expected: places as usize,
                got: values.len(),
            });
        }
        let radix = sk_size(k, cfg.ring.ell());
        let mut inner = BigUint::zero();
        for v in values {
            if v.ring() != cfg.ring {
                return Err(Error::RingMismatch);
            }
            inner = inner * &radix + sk_index(v, k)?;
        }
        let mut offset = BigUint::zero();
        for b in 1..k {
            offset += omega_block_size(b, &cfg)?;
        }
        Ok(MatrixFn {
            cfg,
            k_block: k,
            inner_index: inner,
            offset,
        })
    }

    /// Index into [`sk_elements`] of entry `entry` (row-major) on input cell
    /// `cell`.
    pub fn value_index(&self, entry: usize, cell: u64) -> BigUint {
        let cells = self.cells();
        let places = cells * self.cfg.entries() as u64;
        let pos = entry as u64 * cells + cell;
        let radix = sk_size(self.k_block, self.cfg.ring.ell());
        let scale = biguint_pow(&radix, places - 1 - pos);
        (&self.inner_index / scale) % radix
    }

    /// The full table, ordered like [`MatrixFn::from_table`] expects, with
    /// values at working depth `depth`.
    pub fn table(&self, depth: i64) -> Vec<Element> {
        let places = self.cells() * self.cfg.entries() as u64;
        let radix = sk_size(self.k_block, self.cfg.ring.ell());
        let mut rest = self.inner_index.clone();
        let mut out = Vec::with_capacity(places as usize);
        for _ in 0..places {
            let (q, r) = rest.div_rem(&radix);
            out.push(sk_element(self.k_block, &r, self.cfg.ring, depth));
            rest = q;
        }
        out.reverse();
        out
    }

    /// `r(x)`: the `q x p` matrix on the depth-`k_block` cell of `x`.
    pub fn eval(&self, x: &Vector) -> Result<Matrix> {
        self.eval_at_depth(x, x.depth())
    }

    fn eval_at_depth(&self, x: &Vector, depth: i64) -> Result<Matrix> {
        let cell = self.cell_of(x)?;
        let entries = (0..self.cfg.entries())
            .map(|e| {
                sk_element(
                    self.k_block,
                    &self.value_index(e, cell),
                    self.cfg.ring,
                    depth,
                )
            })
            .collect();
        Matrix::new(self.cfg.q_dim, self.cfg.p_dim, entries)
    }

    fn cell_of(&self, x: &Vector) -> Result<u64> {
        if x.len() != self.cfg.p_dim {
            return Err(Error::DimensionMismatch {
                expected: self.cfg.p_dim,
                got: x.len(),
            });
        }
        let k = self.k_block as i64;
        if x.depth() < k {
            return Err(Error::InsufficientDepth {
                required: k,
                available: x.depth(),
            });
        }
        x.cell_index(k)
    }
}

/// `r_j`.
pub fn decode_matrix_fn(j: &BigUint, cfg: PhiConfig) -> MatrixFn {
    let (k, offset) = locate_block(j, &cfg);
    MatrixFn {
        cfg,
        k_block: k,
        inner_index: j - &offset,
        offset,
    }
}

/// Enumeration index of the block-`k` function that is constantly `m`.
pub fn index_of_constant_matrix(m: &Matrix, k: u64, cfg: PhiConfig) -> Result<BigUint> {
    if m.rows() != cfg.q_dim || m.cols() != cfg.p_dim {
        return Err(Error::DimensionMismatch {
            expected: cfg.entries(),
            got: m.rows() * m.cols(),
        });
    }
    let cells = cell_count(k.max(1), &cfg)? as usize;
    let values: Vec<Element> = m
        .entries()
        .iter()
        .flat_map(|e| core::iter::repeat_n(e.clone(), cells))
        .collect();
    Ok(MatrixFn::from_table(cfg, k, &values)?.index())
}

/// `p_j(x)`: digits of degrees `alpha(j) .. alpha(j+1)` of each component.
pub fn projection(x: &Vector, j: u64) -> Result<Vector> {
    let hi = alpha(j + 1) as i64;
    if x.depth() < hi {
        return Err(Error::InsufficientDepth {
            required: hi,
            available: x.depth(),
        });
    }
    if let Some(e) = x.iter().find(|e| !e.in_ring_of_integers()) {
        return Err(Error::NegativeValuation(e.lowest_degree()));
    }
    Vector::from_elements(x.iter().map(|e| e.digit_slice(alpha(j) as i64, hi)))
}

/// Index `K` of the last summand that can touch degrees below `d_out`.
pub fn last_term(d_out: i64, ell: u32) -> u64 {
    let mut k = 0u64;
    while summand_floor(k + 1, ell) < d_out {
        k += 1;
    }
    k
}

/// Input depth `alpha(K + 1)` that makes [`phi_eval`] exact to `d_out` digits.
pub fn required_phi_input_depth(d_out: i64, ell: u32) -> i64 {
    alpha(last_term(d_out, ell) + 1) as i64
}

/// Which `phi` a construction uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhiVariant {
    /// The enumerated series `sum r_k p_k`.
    Series,
    /// The digit-shift map, applied componentwise (`p = q`).
    DigitShift,
}

impl PhiVariant {
    /// Command-line token.
    pub fn name(self) -> &'static str {
        match self {
            PhiVariant::Series => "sawyer",
            PhiVariant::DigitShift => "dh",
        }
    }

    pub fn from_name(s: &str) -> Option<PhiVariant> {
        match s {
            "sawyer" | "series" => Some(PhiVariant::Series),
            "dh" | "digit-shift" => Some(PhiVariant::DigitShift),
            _ => None,
        }
    }
}

/// `phi` prepared for repeated evaluation to a fixed output depth.
///
/// The matrix functions `r_0 .. r_K` are decoded once; the evaluator is
/// immutable and can be shared between threads.
#[derive(Debug, Clone)]
pub struct PhiEvaluator {
    cfg: PhiConfig,
    variant: PhiVariant,
    d_out: i64,
    input_depth: i64,
    work: i64,
    tables: Vec<Option<Decoded>>,
}

#[derive(Debug, Clone)]
struct Decoded {
    k_block: u64,
    cells: u64,
    values: Vec<Element>,
}

const TABLE_CACHE_LIMIT: u64 = 1 << 16;

impl PhiEvaluator {
    pub fn new(cfg: PhiConfig, variant: PhiVariant, d_out: i64) -> Result<PhiEvaluator> {
        if d_out < 1 {
            return Err(Error::BadDepth {
                depth: d_out,
                floor: 0,
            });
        }
        match variant {
            PhiVariant::Series => {
                let ell = cfg.ring.ell();
                let last = last_term(d_out, ell);
                let work = d_out + lambda(last.max(1), ell) as i64;
                let tables = (0..=last)
                    .map(|k| {
                        let r = decode_matrix_fn(&BigUint::from(k), cfg);
                        let places = table_places(r.k_block, &cfg).ok()?;
                        (places <= TABLE_CACHE_LIMIT).then(|| Decoded {
                            k_block: r.k_block,
                            cells: r.cells(),
                            values: r.table(work),
                        })
                    })
                    .collect();
                Ok(PhiEvaluator {
                    cfg,
                    variant,
                    d_out,
                    input_depth: alpha(last + 1) as i64,
                    work,
                    tables,
                })
            }
            PhiVariant::DigitShift => {
                if cfg.p_dim != cfg.q_dim {
                    return Err(Error::Unsupported(alloc::format!(
                        "the digit-shift phi needs p = q, got p={} q={}",
                        cfg.p_dim,
                        cfg.q_dim
                    )));
                }
                Ok(PhiEvaluator {
                    cfg,
                    variant,
                    d_out,
                    input_depth: d_out + 1,
                    work: d_out,
                    tables: Vec::new(),
                })
            }
        }
    }

    pub fn config(&self) -> &PhiConfig {
        &self.cfg
    }

    pub fn variant(&self) -> PhiVariant {
        self.variant
    }

    pub fn output_depth(&self) -> i64 {
        self.d_out
    }

    /// Input depth needed for an exact result.
    pub fn input_depth(&self) -> i64 {
        self.input_depth
    }

    fn prepare(&self, x: &Vector) -> Result<Vector> {
        if x.len() != self.cfg.p_dim {
            return Err(Error::DimensionMismatch {
                expected: self.cfg.p_dim,
                got: x.len(),
            });
        }
        if x.iter().any(|e| e.ring() != self.cfg.ring) {
            return Err(Error::RingMismatch);
        }
        let x = x.reduce_to_r();
        if x.depth() < self.input_depth {
            return Err(Error::InsufficientDepth {
                required: self.input_depth,
                available: x.depth(),
            });
        }
        Ok(x)
    }

    /// `phi(x)` modulo `t^d_out`; `x` may lie in `K^p` (negative degrees are
    /// dropped first).
    pub fn eval(&self, x: &Vector) -> Result<Vector> {
        let x = self.prepare(x)?;
        match self.variant {
            PhiVariant::DigitShift => Vector::from_elements(
                x.iter()
                    .map(|e| digit_shift_eval(e, self.d_out))
                    .collect::<Result<Vec<_>>>()?,
            ),
            PhiVariant::Series => {
                let last = self.tables.len() as u64 - 1;
                self.sum_range(&x, 0, last + 1, self.d_out)
            }
        }
    }

    /// `r_k(x)` with values at the evaluator's working depth.
    pub fn matrix_at(&self, k: u64, x: &Vector) -> Result<Matrix> {
        let x = x.reduce_to_r();
        match self.tables.get(k as usize) {
            Some(Some(t)) => {
                let kb = t.k_block;
                if x.depth() < kb as i64 {
                    return Err(Error::InsufficientDepth {
                        required: kb as i64,
                        available: x.depth(),
                    });
                }
                let cell = x.cell_index(kb as i64)?;
                let entries = (0..self.cfg.entries())
                    .map(|e| t.values[(e as u64 * t.cells + cell) as usize].clone())
                    .collect();
                Matrix::new(self.cfg.q_dim, self.cfg.p_dim, entries)
            }
            _ => decode_matrix_fn(&BigUint::from(k), self.cfg)
                .eval_at_depth(&x, self.work.max(k as i64 + 1)),
        }
    }

    /// `r_k(x) p_k(x)` truncated to `depth` digits (`depth <= d_out`).
    pub fn summand(&self, k: u64, x: &Vector, depth: i64) -> Result<Vector> {
        let x = x.reduce_to_r();
        self.sum_range(&x, k, k + 1, depth)
    }

    /// `phi^(m)(x) = sum_{k < m} r_k(x) p_k(x)` truncated to `depth` digits.
    pub fn partial_sum(&self, m: u64, x: &Vector, depth: i64) -> Result<Vector> {
        let x = x.reduce_to_r();
        self.sum_range(&x, 0, m, depth)
    }

    fn sum_range(&self, x: &Vector, from: u64, to: u64, depth: i64) -> Result<Vector> {
        if self.variant != PhiVariant::Series {
            return Err(Error::Unsupported(
                "summands exist only for the series phi".into(),
            ));
        }
        let ell = self.cfg.ring.ell();
        let mut acc = Vector::zero(self.cfg.ring, self.cfg.q_dim, depth);
        for k in from..to {
            // terms past K vanish below d_out; skip those that cannot reach `depth`
            if summand_floor(k, ell) >= depth {
                continue;
            }
            let hi = alpha(k + 1) as i64;
            if x.depth() < hi {
                return Err(Error::InsufficientDepth {
                    required: hi,
                    available: x.depth(),
                });
            }
            let work = depth + lambda(k.max(1), ell) as i64;
            let proj = Vector::from_elements(
                x.iter()
                    .map(|e| e.digit_slice(alpha(k) as i64, hi).with_depth(work)),
            )?;
            let r = self.matrix_at(k, x)?;
            let r = if r.depth() < work {
                Matrix::new(
                    r.rows(),
                    r.cols(),
                    r.entries().iter().map(|e| e.with_depth(work)).collect(),
                )?
            } else {
                r
            };
            acc = acc.add(&r.mul_vec(&proj)?.truncate(depth)?)?;
        }
        acc.truncate(depth)
    }
}

/// `phi(x)` to `d_out` digits.
pub fn phi_eval(x: &Vector, cfg: PhiConfig, d_out: i64) -> Result<Vector> {
    PhiEvaluator::new(cfg, PhiVariant::Series, d_out)?.eval(x)
}

fn is_power_of_two(n: u64) -> bool {
    n != 0 && n & (n - 1) == 0
}

/// The digit-shift map: output digit `j` is `0` when `j + 2` is a power of
/// two and input digit `j + 1` otherwise. Applied to digits in both ring
/// modes, so over `Z_l` it is not additive.
pub fn digit_shift_eval(a: &Element, d_out: i64) -> Result<Element> {
    let a = a.reduce_to_r();
    if a.depth() < d_out + 1 {
        return Err(Error::InsufficientDepth {
            required: d_out + 1,
            available: a.depth(),
        });
    }
    let digits: Vec<u32> = (0..d_out.max(0))
        .map(|j| {
            if is_power_of_two(j as u64 + 2) {
                0
            } else {
                a.digit(j + 1)
            }
        })
        .collect();
    Element::from_digits(&digits, 0, a.ring(), d_out.max(1))
}

/// Index `N(A)`: the first `n` from which every summand has valuation at
/// least `a`.
pub fn continuity_index(a: i64, ell: u32) -> u64 {
    let mut n = 0u64;
    while summand_floor(n, ell) < a {
        n += 1;
    }
    n
}

/// Input agreement depth `alpha(N(A))` that forces `phi` to agree to `a`
/// digits.
pub fn continuity_modulus(a: i64, cfg: &PhiConfig) -> i64 {
    alpha(continuity_index(a, cfg.ring.ell())) as i64
}
