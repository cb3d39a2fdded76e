//! Proof machinery checked at finite depth: the six-term decomposition of
//! `f(x, phi(x), w)`, integer certificates for the bounds on each term, and
//! differentiability defect scans.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_rational::Ratio;

use crate::families::Family;
use crate::phi::{alpha, projection, PhiConfig, PhiEvaluator, PhiVariant};
use crate::ring::{Element, RingSpec, Vector};
use crate::{Error, Result};

/// `f(x, phi(x), w)` split into six pieces:
///
/// * `I   = f(x, phi) - f(x_N, phi) - f_x (x - x_N)`
/// * `II  = f(x_N, phi) - f(x_N, phi_N) - f_y|_(x_N, phi) (phi - phi_N)`
/// * `III = (f_y|_(x_N, phi) - f_y) (phi - phi_N)`
/// * `IV  = f_y (phi - phi_(N+1)) + f_x (x - x_(N+1))`
/// * `V   = (f_y r_N + f_x) p_N`
/// * `VI  = f(x_N, phi_N)`
///
/// where `x_N` keeps the first `alpha(N)` digits of `x`, `phi_N` is the
/// partial sum of the first `N` summands and unsubscripted Jacobians are
/// taken at `(x, phi(x), w)`. All terms are reduced mod `t^depth`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermDecomposition {
    pub n: u64,
    pub depth: i64,
    pub x: Vector,
    pub w: Vector,
    pub terms: [Vector; 6],
    /// `f(x, phi(x), w)` mod `t^depth`.
    pub value: Vector,
}

impl TermDecomposition {
    pub fn sum(&self) -> Result<Vector> {
        let mut acc = self.terms[0].clone();
        for t in &self.terms[1..] {
            acc = acc.add(t)?;
        }
        Ok(acc)
    }

    /// Whether the six terms add up to the value exactly.
    pub fn identity_holds(&self) -> Result<bool> {
        Ok(self.sum()? == self.value)
    }
}

fn at(v: Vector, depth: i64) -> Result<Vector> {
    if v.depth() < depth {
        return Err(Error::InsufficientDepth {
            required: depth,
            available: v.depth(),
        });
    }
    v.truncate(depth)
}

/// Digits of degree `< alpha(m)`.
fn head(x: &Vector, m: u64) -> Result<Vector> {
    Vector::from_elements(x.iter().map(|e| e.digit_slice(0, alpha(m) as i64)))
}

/// Decomposes `f(x, phi(x), w)` at index `n`, to `depth` digits. `x` must
/// carry enough digits for both `phi` and `p_n`.
pub fn term_decomposition(
    fam: &dyn Family,
    x: &Vector,
    w: &Vector,
    n: u64,
    depth: i64,
) -> Result<TermDecomposition> {
    if n < 1 {
        return Err(Error::BadIndex(n));
    }
    let dims = fam.dims();
    let phi = PhiEvaluator::new(
        PhiConfig::new(fam.ring(), dims.p, dims.q)?,
        PhiVariant::Series,
        depth,
    )?;
    let x = x.reduce_to_r();
    let need = phi.input_depth().max(alpha(n + 1) as i64);
    if x.depth() < need {
        return Err(Error::InsufficientDepth {
            required: need,
            available: x.depth(),
        });
    }
    let y = phi.eval(&x)?;
    let y_n = phi.partial_sum(n, &x, depth)?;
    let y_n1 = phi.partial_sum(n + 1, &x, depth)?;
    let x_n = head(&x, n)?;
    let x_n1 = head(&x, n + 1)?;
    let p_n = projection(&x, n)?;
    let r_n = phi.matrix_at(n, &x)?;

    let f = |a: &Vector, b: &Vector| fam.eval(a, b, w);
    let fx = fam.dfdx(&x, &y, w)?;
    let fy = fam.dfdy(&x, &y, w)?;
    let fy_n = fam.dfdy(&x_n, &y, w)?;

    let f_full = f(&x, &y)?;
    let f_head = f(&x_n, &y)?;
    let vi = f(&x_n, &y_n)?;
    let dx = x.sub(&x_n)?;
    let dy = y.sub(&y_n)?;

    let i = f_full.sub(&f_head)?.sub(&fx.mul_vec(&dx)?)?;
    let ii = f_head.sub(&vi)?.sub(&fy_n.mul_vec(&dy)?)?;
    let iii = fy_n.sub(&fy)?.mul_vec(&dy)?;
    let iv = fy
        .mul_vec(&y.sub(&y_n1)?)?
        .add(&fx.mul_vec(&x.sub(&x_n1)?)?)?;
    let v = fy.mul_mat(&r_n)?.add(&fx)?.mul_vec(&p_n)?;

    Ok(TermDecomposition {
        n,
        depth,
        x: x.clone(),
        w: w.clone(),
        terms: [
            at(i, depth)?,
            at(ii, depth)?,
            at(iii, depth)?,
            at(iv, depth)?,
            at(v, depth)?,
            at(vi, depth)?,
        ],
        value: at(f_full, depth)?,
    })
}

/// The five bound lemmas, by the term they control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Lemma {
    I,
    II,
    III,
    IV,
    V,
}

impl Lemma {
    pub const ALL: [Lemma; 5] = [Lemma::I, Lemma::II, Lemma::III, Lemma::IV, Lemma::V];
}

impl fmt::Display for Lemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Lemma::I => "I",
            Lemma::II => "II",
            Lemma::III => "III",
            Lemma::IV => "IV",
            Lemma::V => "V",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificateRow {
    pub lemma: Lemma,
    pub a: u64,
    pub b: u64,
    pub n: u64,
    pub holds: bool,
    /// The instantiated integer inequality.
    pub inequality: String,
}

/// Scan result for one lemma.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LemmaSummary {
    pub lemma: Lemma,
    /// First `N` in the range where the predicate holds.
    pub min_n: Option<u64>,
    /// The predicate never fails after it first holds.
    pub monotone: bool,
    /// For the term-IV lemma: every `N` meeting the hypothesis also meets
    /// the conclusion. Always true for the others.
    pub implication_ok: bool,
}

/// Integer certificate over `N` in `n_lo..=n_hi`. `rows` holds the rows at
/// each lemma's minimal `N` and the one just before it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificateReport {
    pub ell: u32,
    pub a: u64,
    pub b: u64,
    pub n_lo: u64,
    pub n_hi: u64,
    pub summaries: Vec<LemmaSummary>,
    pub rows: Vec<CertificateRow>,
}

/// Steps `j` checked directly for the term-IV tail before the growth
/// argument takes over.
pub const TAIL_WINDOW: u64 = 4;

/// `floor(log_l k)` for `k in 0..=max` (with `k = 0` mapped to `0`).
fn lambda_table(max: u64, ell: u32) -> Vec<u8> {
    let mut out = Vec::with_capacity(max as usize + 1);
    let mut lam = 0u8;
    let mut next = ell as u64;
    for k in 0..=max {
        if k == next {
            lam += 1;
            next = next.saturating_mul(ell as u64);
        }
        out.push(lam);
    }
    out
}

/// Smallest `e` with `l^e >= m`.
fn ceil_log(m: u64, ell: u32) -> u64 {
    let mut e = 0;
    let mut p = 1u64;
    while p < m {
        p = p.saturating_mul(ell as u64);
        e += 1;
    }
    e
}

struct Scan<'a> {
    lam: &'a [u8],
    ell: u32,
    a: u64,
    b: u64,
}

impl Scan<'_> {
    fn lam(&self, k: u64) -> u64 {
        self.lam[k.max(1) as usize] as u64
    }

    /// `alpha(k) - lambda(k)`: the valuation floor of the `k`-th summand.
    fn floor(&self, k: u64) -> i64 {
        alpha(k) as i64 - self.lam(k) as i64
    }

    /// `(hypothesis, conclusion)` at `n`.
    fn eval(&self, lemma: Lemma, n: u64) -> (bool, bool) {
        match lemma {
            Lemma::I => (true, alpha(n) >= n),
            Lemma::II => (true, self.floor(n) > n as i64),
            Lemma::III => (true, self.ceil_log_floor(n) >= self.lam(n)),
            Lemma::IV => (n >= self.iv_hypothesis_rhs(n), self.iv_worst(n) >= 0),
            Lemma::V => (true, self.v_lhs(n) >= self.v_rhs(n)),
        }
    }

    fn ceil_log_floor(&self, n: u64) -> u64 {
        ceil_log(self.floor(n).max(1) as u64, self.ell)
    }

    fn iv_hypothesis_rhs(&self, n: u64) -> u64 {
        self.lam(n + 1) + self.a + self.b
    }

    /// `min_j alpha(N+j) - lambda(N+j) - B - alpha(N) - A` over the window.
    /// Past the window the gap rises by at least `N + j >= 1` per step since
    /// `lambda` rises by at most 1, so the window settles every `j >= 1`.
    fn iv_worst(&self, n: u64) -> i64 {
        let target = alpha(n) as i64 + self.a as i64;
        (1..=TAIL_WINDOW)
            .map(|j| self.floor(n + j) - self.b as i64 - target)
            .min()
            .unwrap_or(0)
    }

    /// `v(V) >= v(f_y) + (A + B) + alpha(N)` with `v(f_y) >= -B`.
    fn v_lhs(&self, n: u64) -> i64 {
        -(self.b as i64) + (self.a + self.b) as i64 + alpha(n) as i64
    }

    fn v_rhs(&self, n: u64) -> i64 {
        alpha(n) as i64 + self.a as i64
    }

    /// The instantiated inequality at `n`.
    fn describe(&self, lemma: Lemma, n: u64) -> String {
        match lemma {
            Lemma::I => format!("alpha({n})={} >= {n}", alpha(n)),
            Lemma::II => format!("alpha({n})-lambda({n})={} > {n}", self.floor(n)),
            Lemma::III => format!(
                "ceil_log({})={} >= lambda({n})={}",
                self.floor(n).max(1),
                self.ceil_log_floor(n),
                self.lam(n)
            ),
            Lemma::IV => format!(
                "{n} >= lambda({})+A+B={} => min_j(alpha(N+j)-lambda(N+j)-B-alpha(N)-A)={} >= 0",
                n + 1,
                self.iv_hypothesis_rhs(n),
                self.iv_worst(n)
            ),
            Lemma::V => format!(
                "-B+(A+B)+alpha({n})={} >= alpha({n})+A={}",
                self.v_lhs(n),
                self.v_rhs(n)
            ),
        }
    }
}

/// Evaluates the integer predicates behind each term bound for every `N` in
/// `n_lo..=n_hi`, with `lambda = floor(log_l)`:
///
/// * I: `alpha(N) >= N`
/// * II: `alpha(N) - lambda(N) > N`
/// * III: `ceil(log_l(alpha(N) - lambda(N))) >= lambda(N)`
/// * IV: `N >= lambda(N+1) + A + B` implies
///   `alpha(N+j) - lambda(N+j) - B >= alpha(N) + A` for all `j >= 1`
/// * V: `-B + (A + B) + alpha(N) >= alpha(N) + A`
///
/// For IV the reported predicate is the hypothesis, and the implication is
/// checked at every scanned `N`.
pub fn certify_lemma_bounds(
    a: u64,
    b: u64,
    n_lo: u64,
    n_hi: u64,
    ell: u32,
) -> Result<CertificateReport> {
    let ring = RingSpec::padic(ell)?;
    let n_lo = n_lo.max(1);
    if n_hi < n_lo {
        return Err(Error::BadIndex(n_hi));
    }
    let lam = lambda_table(n_hi + TAIL_WINDOW + 1, ring.ell());
    let scan = Scan {
        lam: &lam,
        ell,
        a,
        b,
    };
    let mut summaries = Vec::new();
    let mut rows = Vec::new();
    for lemma in Lemma::ALL {
        let mut min_n = None;
        let mut monotone = true;
        let mut implication_ok = true;
        for n in n_lo..=n_hi {
            let (hyp, concl) = scan.eval(lemma, n);
            let holds = if lemma == Lemma::IV { hyp } else { concl };
            if lemma == Lemma::IV && hyp && !concl {
                implication_ok = false;
            }
            match (min_n, holds) {
                (None, true) => min_n = Some(n),
                (Some(_), false) => monotone = false,
                _ => {}
            }
        }
        if let Some(m) = min_n {
            for n in [m.checked_sub(1).filter(|&p| p >= n_lo), Some(m)]
                .into_iter()
                .flatten()
            {
                let (hyp, concl) = scan.eval(lemma, n);
                let inequality = scan.describe(lemma, n);
                rows.push(CertificateRow {
                    lemma,
                    a,
                    b,
                    n,
                    holds: if lemma == Lemma::IV {
                        hyp && concl
                    } else {
                        concl
                    },
                    inequality,
                });
            }
        }
        summaries.push(LemmaSummary {
            lemma,
            min_n,
            monotone,
            implication_ok,
        });
    }
    Ok(CertificateReport {
        ell,
        a,
        b,
        n_lo,
        n_hi,
        summaries,
        rows,
    })
}

impl CertificateReport {
    pub fn summary(&self, lemma: Lemma) -> &LemmaSummary {
        self.summaries
            .iter()
            .find(|s| s.lemma == lemma)
            .expect("every lemma is scanned")
    }
}

/// Deterministic sample plan: `samples` pairs `(x, h)` with `x` uniform in
/// `R` mod `t^depth` and `h = t^s u` for a unit `u` and `s` cycling through
/// `0..max_scale`. Digits come from a fixed linear congruential generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleSpec {
    pub ring: RingSpec,
    pub depth: i64,
    pub samples: u64,
    pub max_scale: i64,
    pub seed: u64,
}

impl SampleSpec {
    pub fn new(
        ring: RingSpec,
        depth: i64,
        samples: u64,
        max_scale: i64,
        seed: u64,
    ) -> Result<SampleSpec> {
        if max_scale < 1 || max_scale >= depth {
            return Err(Error::BadDepth {
                depth,
                floor: max_scale,
            });
        }
        Ok(SampleSpec {
            ring,
            depth,
            samples,
            max_scale,
            seed,
        })
    }

    /// The `(x, h)` pairs, in order.
    pub fn pairs(&self) -> Result<Vec<(Element, Element)>> {
        let mut lcg = Lcg(self.seed);
        let ell = self.ring.ell();
        let mut out = Vec::with_capacity(self.samples as usize);
        for i in 0..self.samples {
            let s = (i % self.max_scale as u64) as i64;
            let xd: Vec<u32> = (0..self.depth).map(|_| lcg.digit(ell)).collect();
            let mut hd: Vec<u32> = (s..self.depth).map(|_| lcg.digit(ell)).collect();
            hd[0] = 1 + lcg.digit(ell - 1);
            out.push((
                Element::from_digits(&xd, 0, self.ring, self.depth)?,
                Element::from_digits(&hd, s, self.ring, self.depth)?,
            ));
        }
        Ok(out)
    }
}

struct Lcg(u64);

impl Lcg {
    fn digit(&mut self, ell: u32) -> u32 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((self.0 >> 33) % ell as u64) as u32
    }
}

/// One scale `s = v(h)` of a defect scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefectRow {
    pub scale: i64,
    /// Smallest defect valuation seen at this scale; `None` when every
    /// defect vanished at the working depth.
    pub defect_valuation: Option<i64>,
    /// `defect_valuation - exponent * scale`; `None` is `+inf`.
    pub margin: Option<Ratio<i64>>,
    pub samples: u64,
}

/// Per-scale worst case (largest defect ratio, smallest valuation margin).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefectReport {
    /// Exponent the defect is compared against: `1 + alpha` or `alpha`.
    pub exponent: Ratio<i64>,
    pub rows: Vec<DefectRow>,
}

impl DefectReport {
    /// Whether every margin is at least zero.
    pub fn bounded(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.margin.is_none_or(|m| m >= Ratio::from_integer(0)))
    }
}

fn scan_defects(
    exponent: Ratio<i64>,
    spec: &SampleSpec,
    mut defect: impl FnMut(&Element, &Element) -> Result<Element>,
) -> Result<DefectReport> {
    let mut by_scale: BTreeMap<i64, (Option<i64>, u64)> = BTreeMap::new();
    for (x, h) in spec.pairs()? {
        let s = h.valuation_floor();
        let d = defect(&x, &h)?;
        let v = d.valuation().finite();
        let slot = by_scale.entry(s).or_insert((None, 0));
        slot.1 += 1;
        if let Some(v) = v {
            slot.0 = Some(slot.0.map_or(v, |m: i64| m.min(v)));
        }
    }
    let rows = by_scale
        .into_iter()
        .map(|(scale, (v, samples))| DefectRow {
            scale,
            defect_valuation: v,
            margin: v.map(|v| Ratio::from_integer(v) - exponent * scale),
            samples,
        })
        .collect();
    Ok(DefectReport { exponent, rows })
}

/// Scalar map on `R` used by the defect scans.
pub type ScalarFn<'a> = &'a dyn Fn(&Element) -> Result<Element>;

/// Very strong differentiability defect
/// `v(f(x+h) - f(x) - f'(x) h) - (1 + alpha) v(h)`.
pub fn very_strong_defect(
    f: ScalarFn<'_>,
    df: ScalarFn<'_>,
    alpha_exp: Ratio<i64>,
    spec: &SampleSpec,
) -> Result<DefectReport> {
    scan_defects(alpha_exp + 1, spec, |x, h| {
        f(&x.add(h)?)?.sub(&f(x)?)?.sub(&df(x)?.mul(h)?)
    })
}

/// Hoelder defect of a derivative: `v(f'(x+h) - f'(x)) - alpha v(h)`.
pub fn holder_defect(
    df: ScalarFn<'_>,
    alpha_exp: Ratio<i64>,
    spec: &SampleSpec,
) -> Result<DefectReport> {
    scan_defects(alpha_exp, spec, |x, h| df(&x.add(h)?)?.sub(&df(x)?))
}

/// One `k` of [`log_gap_defect_scan`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogGapRow {
    pub k: u64,
    /// `k + g(k)`.
    pub defect_valuation: i64,
    /// `g(k)`: valuation of `defect / |h|`.
    pub strict_quotient: i64,
    /// `g(k) - alpha k`: valuation of `defect / |h|^(1 + alpha)`.
    pub very_strong_quotient: Ratio<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogGapScan {
    pub p: u32,
    pub alpha: Ratio<i64>,
    pub rows: Vec<LogGapRow>,
    /// Least `K` with a negative very strong quotient for every scanned
    /// `k >= K`.
    pub crossover: Option<u64>,
}

impl LogGapScan {
    pub fn strict_nondecreasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|r| r[1].strict_quotient >= r[0].strict_quotient)
    }

    pub fn final_strict(&self) -> Option<i64> {
        self.rows.last().map(|r| r.strict_quotient)
    }
}

/// `g(k) = floor(log_p k) + 1`.
pub fn log_gap(k: u64, p: u32) -> u64 {
    let mut g = 1;
    let mut pw = p as u64;
    while pw <= k {
        g += 1;
        pw = pw.saturating_mul(p as u64);
    }
    g
}

/// Closed-form defects of the map `f(z p^j) = p^(j + g(j))` (unit `z`),
/// which is strictly differentiable with derivative `0` but not very
/// strongly differentiable. With `v(x) = j > v(h) = k` the defect has
/// valuation `k + g(k)`; the scan covers `k = 1..=k_max`.
pub fn log_gap_defect_scan(p: u32, k_max: u64, alpha_exp: Ratio<i64>) -> Result<LogGapScan> {
    RingSpec::padic(p)?;
    if k_max < 2 {
        return Err(Error::BadIndex(k_max));
    }
    let rows: Vec<LogGapRow> = (1..=k_max)
        .map(|k| {
            let g = log_gap(k, p) as i64;
            LogGapRow {
                k,
                defect_valuation: k as i64 + g,
                strict_quotient: g,
                very_strong_quotient: Ratio::from_integer(g) - alpha_exp * k as i64,
            }
        })
        .collect();
    let zero = Ratio::from_integer(0);
    let crossover = match rows.iter().rposition(|r| r.very_strong_quotient >= zero) {
        None => Some(1),
        Some(i) if i + 1 < rows.len() => Some(rows[i + 1].k),
        Some(_) => None,
    };
    Ok(LogGapScan {
        p,
        alpha: alpha_exp,
        rows,
        crossover,
    })
}

/// Defect rows of a scan in `scale,defect_valuation,margin` form, with the
/// very strong quotient as margin.
impl From<&LogGapScan> for DefectReport {
    fn from(scan: &LogGapScan) -> DefectReport {
        DefectReport {
            exponent: scan.alpha + 1,
            rows: scan
                .rows
                .iter()
                .map(|r| DefectRow {
                    scale: r.k as i64,
                    defect_valuation: Some(r.defect_valuation),
                    margin: Some(r.very_strong_quotient),
                    samples: 1,
                })
                .collect(),
        }
    }
}
