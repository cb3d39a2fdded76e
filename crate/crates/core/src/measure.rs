//! Exhaustive residue-cell hit sets of constructed sets and their covering
//! estimates.
//!
//! At depth `D` the unit cell `R^d x R^(n-d)` splits into `l^(nD)` cells. A
//! build enumerates every direction `x in R^p` at the input depth `X` that
//! makes `phi(x)` exact mod `t^D`, and every `w` cell, and marks the cell of
//! `(w, f(x, phi(x), w))`. Nothing is sampled.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;

use crate::families::Family;
use crate::phi::{required_phi_input_depth, PhiConfig, PhiEvaluator, PhiVariant};
use crate::ring::{CellArith, RingSpec, Vector};
use crate::{Error, Result};

pub const DEFAULT_CELL_BUDGET: u64 = 1 << 28;
pub const DEFAULT_PAIR_BUDGET: u64 = 1 << 28;

/// Caps on the size of a build: cells in the hit set, and enumerated
/// `(x, w)` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub cells: u64,
    pub pairs: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            cells: DEFAULT_CELL_BUDGET,
            pairs: DEFAULT_PAIR_BUDGET,
        }
    }
}

/// Membership bits over the `l^((d + m) D)` cells of `R^d x R^m`; cell
/// `(w, z)` has index `w + l^(dD) z` with `w`, `z` the vector cell codes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CellSet {
    ring: RingSpec,
    depth: i64,
    w_dim: usize,
    z_dim: usize,
    w_cells: u64,
    total: u64,
    bits: Vec<u64>,
}

fn overflow(ring: RingSpec, exp: u64) -> Error {
    Error::IndexOverflow(alloc::format!("{}^{}", ring.ell(), exp))
}

impl CellSet {
    pub fn empty(ring: RingSpec, depth: i64, w_dim: usize, z_dim: usize) -> Result<CellSet> {
        if depth < 1 {
            return Err(Error::BadDepth { depth, floor: 0 });
        }
        let d = depth as u64;
        let w_exp = w_dim as u64 * d;
        let exp = (w_dim + z_dim) as u64 * d;
        let total = ring.checked_pow(exp).ok_or_else(|| overflow(ring, exp))?;
        let w_cells = ring
            .checked_pow(w_exp)
            .ok_or_else(|| overflow(ring, w_exp))?;
        let words = usize::try_from(total.div_ceil(64)).map_err(|_| overflow(ring, exp))?;
        Ok(CellSet {
            ring,
            depth,
            w_dim,
            z_dim,
            w_cells,
            total,
            bits: vec![0; words],
        })
    }

    pub fn ring(&self) -> RingSpec {
        self.ring
    }

    pub fn depth(&self) -> i64 {
        self.depth
    }

    /// `(d, n - d)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.w_dim, self.z_dim)
    }

    pub fn total_cells(&self) -> u64 {
        self.total
    }

    /// Number of `w` cells, `l^(dD)`.
    pub fn w_cells(&self) -> u64 {
        self.w_cells
    }

    #[inline]
    pub fn index(&self, w: u64, z: u64) -> u64 {
        w + self.w_cells * z
    }

    #[inline]
    pub fn insert(&mut self, w: u64, z: u64) {
        let i = self.index(w, z);
        self.bits[(i >> 6) as usize] |= 1 << (i & 63);
    }

    #[inline]
    pub fn remove(&mut self, w: u64, z: u64) {
        let i = self.index(w, z);
        self.bits[(i >> 6) as usize] &= !(1 << (i & 63));
    }

    #[inline]
    pub fn contains(&self, w: u64, z: u64) -> bool {
        let i = self.index(w, z);
        self.bits[(i >> 6) as usize] >> (i & 63) & 1 == 1
    }

    /// Number of hit cells.
    pub fn len(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    fn check_shape(&self, other: &CellSet) -> Result<()> {
        if self.ring != other.ring {
            return Err(Error::RingMismatch);
        }
        if (self.depth, self.w_dim, self.z_dim) != (other.depth, other.w_dim, other.z_dim) {
            return Err(Error::DimensionMismatch {
                expected: self.bits.len(),
                got: other.bits.len(),
            });
        }
        Ok(())
    }

    /// In-place union; order of merging never matters.
    pub fn union_with(&mut self, other: &CellSet) -> Result<()> {
        self.check_shape(other)?;
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
        Ok(())
    }

    pub fn difference_with(&mut self, other: &CellSet) -> Result<()> {
        self.check_shape(other)?;
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a &= !b;
        }
        Ok(())
    }

    /// Hit cells as `(w, z)` code pairs, in index order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.bits.iter().enumerate().flat_map(move |(k, &word)| {
            let mut word = word;
            core::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let i = (k as u64) * 64 + word.trailing_zeros() as u64;
                word &= word - 1;
                Some((i % self.w_cells, i / self.w_cells))
            })
        })
    }

    pub fn estimate(&self) -> BigRational {
        covering_estimate(self)
    }
}

/// `hit cells / total cells`, exactly.
pub fn covering_estimate(cs: &CellSet) -> BigRational {
    BigRational::new(BigInt::from(cs.len()), BigInt::from(cs.total_cells()))
}

/// Which directions `x` a build enumerates. Cell codes are depth-`D` vector
/// cell codes of `x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Directions {
    All,
    /// Only `x` in these depth-`D` cells.
    Cells(Vec<u64>),
    /// Every `x` outside these depth-`D` cells.
    ExcludeCells(Vec<u64>),
    /// Exactly these points (each at depth at least the input depth).
    Points(Vec<Vector>),
}

impl Directions {
    fn admits(&self, cell: u64) -> bool {
        match self {
            Directions::All | Directions::Points(_) => true,
            Directions::Cells(c) => c.contains(&cell),
            Directions::ExcludeCells(c) => !c.contains(&cell),
        }
    }
}

/// `phi` input depth used for an exact build at depth `depth`.
pub fn build_input_depth(variant: PhiVariant, depth: i64, ell: u32) -> i64 {
    let need = match variant {
        PhiVariant::Series => required_phi_input_depth(depth, ell),
        PhiVariant::DigitShift => depth + 1,
    };
    need.max(depth)
}

fn check_budget(ring: RingSpec, cell_exp: u64, pair_count: &BigUint, budget: Budget) -> Result<()> {
    let cells = ring.big_pow(cell_exp);
    if cells > BigUint::from(budget.cells) || *pair_count > BigUint::from(budget.pairs) {
        return Err(Error::BudgetExceeded {
            cells: cells.to_string(),
            cell_budget: budget.cells,
            pairs: pair_count.to_string(),
            pair_budget: budget.pairs,
        });
    }
    Ok(())
}

/// A validated, budget-checked build of the hit set at one depth.
///
/// The direction space is indexed `0..direction_count()`, so a caller may
/// split it into ranges, build each with [`BuildPlan::build_range`] and merge
/// with [`CellSet::union_with`].
#[derive(Clone)]
pub struct BuildPlan<'a> {
    fam: &'a dyn Family,
    phi: PhiEvaluator,
    depth: i64,
    input_depth: i64,
    directions: Directions,
    budget: Budget,
}

impl core::fmt::Debug for BuildPlan<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("BuildPlan")
            .field("family", &self.fam.name())
            .field("variant", &self.phi.variant())
            .field("depth", &self.depth)
            .field("input_depth", &self.input_depth)
            .field("directions", &self.directions)
            .finish()
    }
}

impl<'a> BuildPlan<'a> {
    pub fn new(
        fam: &'a dyn Family,
        variant: PhiVariant,
        depth: i64,
        budget: Budget,
    ) -> Result<Self> {
        if depth < 1 {
            return Err(Error::BadDepth { depth, floor: 0 });
        }
        let ring = fam.ring();
        let input_depth = build_input_depth(variant, depth, ring.ell());
        let plan_budget = |x: i64| {
            let dims = fam.dims();
            let pairs = ring.big_pow(dims.p as u64 * x as u64 + dims.d as u64 * depth as u64);
            check_budget(
                ring,
                (dims.d + dims.codim()) as u64 * depth as u64,
                &pairs,
                budget,
            )
        };
        plan_budget(input_depth)?;
        let dims = fam.dims();
        let phi = PhiEvaluator::new(PhiConfig::new(ring, dims.p, dims.q)?, variant, depth)?;
        Ok(BuildPlan {
            fam,
            phi,
            depth,
            input_depth,
            directions: Directions::All,
            budget,
        })
    }

    /// Enumerate directions at a deeper input depth than required (used to
    /// confirm that the required depth suffices).
    pub fn with_input_depth(mut self, input_depth: i64) -> Result<Self> {
        if input_depth < self.input_depth {
            return Err(Error::InsufficientDepth {
                required: self.input_depth,
                available: input_depth,
            });
        }
        self.input_depth = input_depth;
        self.check_own_budget()?;
        Ok(self)
    }

    pub fn with_directions(mut self, directions: Directions) -> Result<Self> {
        self.directions = directions;
        self.check_own_budget()?;
        Ok(self)
    }

    fn check_own_budget(&self) -> Result<()> {
        let dims = self.fam.dims();
        let ring = self.fam.ring();
        let pairs = self.direction_count_big() * ring.big_pow(dims.d as u64 * self.depth as u64);
        check_budget(
            ring,
            (dims.d + dims.codim()) as u64 * self.depth as u64,
            &pairs,
            self.budget,
        )
    }

    fn direction_count_big(&self) -> BigUint {
        match &self.directions {
            Directions::Points(v) => BigUint::from(v.len()),
            _ => self
                .fam
                .ring()
                .big_pow(self.fam.dims().p as u64 * self.input_depth as u64),
        }
    }

    pub fn family(&self) -> &'a dyn Family {
        self.fam
    }

    pub fn phi(&self) -> &PhiEvaluator {
        &self.phi
    }

    pub fn depth(&self) -> i64 {
        self.depth
    }

    pub fn input_depth(&self) -> i64 {
        self.input_depth
    }

    pub fn directions(&self) -> &Directions {
        &self.directions
    }

    /// Size of the enumerated direction space.
    pub fn direction_count(&self) -> u64 {
        // budget-checked at construction, so this fits
        u64::try_from(self.direction_count_big()).unwrap_or(u64::MAX)
    }

    /// Number of depth-`D` direction cells, `l^(pD)`.
    pub fn direction_cells(&self) -> Result<u64> {
        let exp = self.fam.dims().p as u64 * self.depth as u64;
        self.fam
            .ring()
            .checked_pow(exp)
            .ok_or_else(|| overflow(self.fam.ring(), exp))
    }

    pub fn empty_set(&self) -> Result<CellSet> {
        let dims = self.fam.dims();
        CellSet::empty(self.fam.ring(), self.depth, dims.d, dims.codim())
    }

    /// The whole hit set.
    pub fn build(&self) -> Result<CellSet> {
        self.build_range(0..self.direction_count())
    }

    /// Cells hit by the directions with index in `range`.
    pub fn build_range(&self, range: Range<u64>) -> Result<CellSet> {
        let mut set = self.empty_set()?;
        self.visit(&self.directions, range, |_, w, z| set.insert(w, z))?;
        Ok(set)
    }

    /// Cells of `{z : (w, z) in set}` for one fixed `w`, as a set with no
    /// `w` coordinates.
    pub fn cross_section(&self, w: &Vector) -> Result<CellSet> {
        let dims = self.fam.dims();
        if w.len() != dims.d {
            return Err(Error::DimensionMismatch {
                expected: dims.d,
                got: w.len(),
            });
        }
        let ring = self.fam.ring();
        let mut set = CellSet::empty(ring, self.depth, 0, dims.codim())?;
        let n = self.direction_count();
        for idx in 0..n {
            let Some(x) = self.direction(&self.directions, idx)? else {
                continue;
            };
            let y = self.phi.eval(&x)?;
            let z = self.fam.eval(&x, &y, w)?;
            set.insert(0, self.z_code(&z)?);
        }
        Ok(set)
    }

    fn z_code(&self, z: &Vector) -> Result<u64> {
        if z.depth() < self.depth {
            return Err(Error::InsufficientDepth {
                required: self.depth,
                available: z.depth(),
            });
        }
        z.cell_index(self.depth)
    }

    /// Direction number `idx`, or `None` when the filter rejects it.
    fn direction(&self, dirs: &Directions, idx: u64) -> Result<Option<Vector>> {
        let x = match dirs {
            Directions::Points(v) => v[idx as usize].clone(),
            _ => {
                Vector::from_cell_index(self.fam.ring(), idx, self.fam.dims().p, self.input_depth)?
            }
        };
        let cell = x.cell_index(self.depth)?;
        Ok(dirs.admits(cell).then_some(x))
    }

    /// Calls `sink(direction cell, w cell, z cell)` for every enumerated
    /// point; the same triple may be reported more than once.
    fn visit(
        &self,
        dirs: &Directions,
        range: Range<u64>,
        mut sink: impl FnMut(u64, u64, u64),
    ) -> Result<()> {
        let dims = self.fam.dims();
        let ring = self.fam.ring();
        let w_cells = ring
            .checked_pow(dims.d as u64 * self.depth as u64)
            .ok_or_else(|| overflow(ring, dims.d as u64 * self.depth as u64))?;
        let end = range.end.min(match dirs {
            Directions::Points(v) => v.len() as u64,
            _ => self.direction_count(),
        });
        let range = range.start..end;
        if !self.fam.has_cell_map() {
            for idx in range {
                let Some(x) = self.direction(dirs, idx)? else {
                    continue;
                };
                let dir = x.cell_index(self.depth)?;
                let y = self.phi.eval(&x)?;
                for wi in 0..w_cells {
                    let w = Vector::from_cell_index(ring, wi, dims.d, self.depth)?;
                    let z = self.fam.eval(&x, &y, &w)?;
                    sink(dir, wi, self.z_code(&z)?);
                }
            }
            return Ok(());
        }
        // f mod t^D only sees (x, phi(x)) mod t^D; collapse directions that agree there
        let ar = CellArith::new(ring, self.depth)?;
        let radix = ar.modulus();
        let mut keys: BTreeSet<Vec<u64>> = BTreeSet::new();
        for idx in range {
            let Some(x) = self.direction(dirs, idx)? else {
                continue;
            };
            let y = self.phi.eval(&x)?;
            let key = x
                .iter()
                .chain(y.iter())
                .map(|e| e.cell_index(self.depth))
                .collect::<Result<Vec<u64>>>()?;
            keys.insert(key);
        }
        let mut w = vec![0u64; dims.d];
        let mut z = vec![0u64; dims.codim()];
        for key in &keys {
            let (xc, yc) = key.split_at(dims.p);
            let dir = mixed_radix(xc, radix);
            for wi in 0..w_cells {
                let mut rest = wi;
                for c in w.iter_mut() {
                    *c = rest % radix;
                    rest /= radix;
                }
                self.fam.eval_cells(&ar, xc, yc, &w, &mut z)?;
                sink(dir, wi, mixed_radix(&z, radix));
            }
        }
        Ok(())
    }
}

fn mixed_radix(codes: &[u64], radix: u64) -> u64 {
    codes.iter().rev().fold(0, |acc, &c| acc * radix + c)
}

/// The exact hit set of the constructed set at depth `depth`.
pub fn build_set_cells(
    fam: &dyn Family,
    variant: PhiVariant,
    depth: i64,
    budget: Budget,
) -> Result<CellSet> {
    BuildPlan::new(fam, variant, depth, budget)?.build()
}

/// The `z` cells over a fixed `w`. Fails with the family's error where its
/// `y`-Jacobian has no right inverse at `w`.
pub fn cross_section_cells(
    fam: &dyn Family,
    variant: PhiVariant,
    w: &Vector,
    depth: i64,
    budget: Budget,
) -> Result<CellSet> {
    let dims = fam.dims();
    let ring = fam.ring();
    let x0 = Vector::zero(ring, dims.p, depth);
    let y0 = Vector::zero(ring, dims.q, depth);
    fam.dfdy_right_inverse(&x0, &y0, w)?;
    BuildPlan::new(fam, variant, depth, budget)?.cross_section(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayRow {
    pub depth: i64,
    pub hit_cells: u64,
    pub total_cells: u64,
    pub estimate: BigRational,
    pub input_depth: i64,
    pub seconds: f64,
}

/// One hit-set build per depth.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub family: String,
    pub variant: PhiVariant,
    pub ring: RingSpec,
    pub rows: Vec<DecayRow>,
}

impl DecayReport {
    /// Whether the estimates never increase with depth.
    pub fn is_non_increasing(&self) -> bool {
        self.rows.windows(2).all(|r| r[1].estimate <= r[0].estimate)
    }
}

/// [`decay_report_with`] using a sequential build and no timing.
pub fn decay_report(
    fam: &dyn Family,
    variant: PhiVariant,
    d_min: i64,
    d_max: i64,
    budget: Budget,
) -> Result<DecayReport> {
    decay_report_with(fam, variant, d_min, d_max, budget, |plan| {
        Ok((plan.build()?, 0.0))
    })
}

/// Builds each depth in `d_min..=d_max` with `build`, which returns the hit
/// set and the seconds it took. Every depth is budget-checked before any
/// work starts.
pub fn decay_report_with(
    fam: &dyn Family,
    variant: PhiVariant,
    d_min: i64,
    d_max: i64,
    budget: Budget,
    mut build: impl FnMut(&BuildPlan<'_>) -> Result<(CellSet, f64)>,
) -> Result<DecayReport> {
    if d_min < 1 {
        return Err(Error::BadDepth {
            depth: d_min,
            floor: 0,
        });
    }
    if d_max < d_min {
        return Err(Error::BadDepth {
            depth: d_max,
            floor: d_min - 1,
        });
    }
    let ring = fam.ring();
    let dims = fam.dims();
    for depth in d_min..=d_max {
        let x = build_input_depth(variant, depth, ring.ell());
        let pairs = ring.big_pow(dims.p as u64 * x as u64 + dims.d as u64 * depth as u64);
        check_budget(ring, dims.n as u64 * depth as u64, &pairs, budget)?;
    }
    let mut rows = Vec::new();
    for depth in d_min..=d_max {
        let plan = BuildPlan::new(fam, variant, depth, budget)?;
        let (set, seconds) = build(&plan)?;
        rows.push(DecayRow {
            depth,
            hit_cells: set.len(),
            total_cells: set.total_cells(),
            estimate: set.estimate(),
            input_depth: plan.input_depth(),
            seconds,
        });
    }
    Ok(DecayReport {
        family: fam.name().to_string(),
        variant,
        ring,
        rows,
    })
}

/// Result of a direction-coverage audit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageReport {
    pub depth: i64,
    /// Depth-`D` direction cells audited.
    pub directions: u64,
    pub w_cells: u64,
    /// `(direction cell, w cell)` pairs with no point of that direction in
    /// the set, in ascending order.
    pub missing: Vec<(u64, u64)>,
    /// The vertical direction has no `x` parameter; it is outside the
    /// construction and never audited.
    pub vertical_excluded: bool,
}

impl CoverageReport {
    pub fn missing_count(&self) -> u64 {
        self.missing.len() as u64
    }
}

/// Checks that `set` contains, for every audited direction cell and every
/// `w` cell, some point `(w, f(x, phi(x), w))` with `x` in that direction
/// cell. `only` restricts the audit to the listed direction cells.
pub fn audit_coverage(
    plan: &BuildPlan<'_>,
    set: &CellSet,
    only: Option<&[u64]>,
) -> Result<CoverageReport> {
    let dir_cells = plan.direction_cells()?;
    let mut scope: Vec<u64> = match only {
        Some(list) => list.to_vec(),
        None => (0..dir_cells).collect(),
    };
    scope.sort_unstable();
    scope.dedup();
    let w_cells = set.w_cells();
    let pairs = dir_cells
        .checked_mul(w_cells)
        .ok_or_else(|| Error::IndexOverflow(alloc::format!("{} x {}", dir_cells, w_cells)))?;
    let mut covered = vec![0u64; pairs.div_ceil(64) as usize];
    let dirs = match only {
        Some(list) => Directions::Cells(list.to_vec()),
        None => Directions::All,
    };
    plan.visit(&dirs, 0..plan.direction_count_all(), |dir, w, z| {
        if set.contains(w, z) {
            let i = dir * w_cells + w;
            covered[(i >> 6) as usize] |= 1 << (i & 63);
        }
    })?;
    let missing = scope
        .iter()
        .flat_map(|&dir| (0..w_cells).map(move |w| (dir, w)))
        .filter(|&(dir, w)| {
            let i = dir * w_cells + w;
            covered[(i >> 6) as usize] >> (i & 63) & 1 == 0
        })
        .collect();
    Ok(CoverageReport {
        depth: plan.depth(),
        directions: scope.len() as u64,
        w_cells,
        missing,
        vertical_excluded: true,
    })
}

impl BuildPlan<'_> {
    fn direction_count_all(&self) -> u64 {
        let exp = self.fam.dims().p as u64 * self.input_depth as u64;
        self.fam.ring().checked_pow(exp).unwrap_or(u64::MAX)
    }
}

/// Builds the hit set at `depth` and audits every direction cell.
pub fn direction_coverage(
    fam: &dyn Family,
    variant: PhiVariant,
    depth: i64,
    budget: Budget,
) -> Result<CoverageReport> {
    let plan = BuildPlan::new(fam, variant, depth, budget)?;
    let set = plan.build()?;
    audit_coverage(&plan, &set, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{builtin, kakeya_line_family, Dims};
    use crate::phi::PhiEvaluator;
    use crate::ring::{Element, Matrix, Mode};

    fn fq2() -> RingSpec {
        RingSpec::power_series(2).unwrap()
    }

    /// Hides the residue-code map so builds take the element path.
    struct Slow<'a>(&'a dyn Family);

    impl Family for Slow<'_> {
        fn name(&self) -> &str {
            self.0.name()
        }
        fn ring(&self) -> RingSpec {
            self.0.ring()
        }
        fn dims(&self) -> Dims {
            self.0.dims()
        }
        fn eval(&self, x: &Vector, y: &Vector, w: &Vector) -> Result<Vector> {
            self.0.eval(x, y, w)
        }
        fn dfdx(&self, x: &Vector, y: &Vector, w: &Vector) -> Result<Matrix> {
            self.0.dfdx(x, y, w)
        }
        fn dfdy(&self, x: &Vector, y: &Vector, w: &Vector) -> Result<Matrix> {
            self.0.dfdy(x, y, w)
        }
        fn dfdy_right_inverse(&self, x: &Vector, y: &Vector, w: &Vector) -> Result<Matrix> {
            self.0.dfdy_right_inverse(x, y, w)
        }
    }

    #[test]
    fn estimate_examples() {
        let r = fq2();
        let mut cs = CellSet::empty(r, 3, 1, 1).unwrap();
        assert_eq!(cs.total_cells(), 64);
        assert_eq!(covering_estimate(&cs), BigRational::from_integer(0.into()));
        cs.insert(5, 2);
        assert_eq!(cs.estimate(), BigRational::new(1.into(), 64.into()));
        assert_eq!(cs.iter().collect::<Vec<_>>(), vec![(5, 2)]);
        for w in 0..8 {
            for z in 0..8 {
                cs.insert(w, z);
            }
        }
        assert_eq!(cs.estimate(), BigRational::from_integer(1.into()));
        cs.remove(5, 2);
        assert!(!cs.contains(5, 2));
        assert_eq!(cs.len(), 63);
    }

    #[test]
    fn depth_one_matches_brute_force() {
        for mode in [Mode::Padic, Mode::PowerSeries] {
            let r = RingSpec::new(2, mode).unwrap();
            let f = kakeya_line_family(r);
            let set = build_set_cells(&f, PhiVariant::Series, 1, Budget::default()).unwrap();
            let phi =
                PhiEvaluator::new(PhiConfig::new(r, 1, 1).unwrap(), PhiVariant::Series, 1).unwrap();
            let x_depth = phi.input_depth().max(1);
            let mut want = BTreeSet::new();
            for xi in 0..(1u64 << x_depth) {
                let x = Vector::from_cell_index(r, xi, 1, x_depth).unwrap();
                let y = phi.eval(&x).unwrap().entries()[0].digit(0) as u64;
                for w in 0..2u64 {
                    let x0 = xi & 1;
                    want.insert((w, (x0 * w + 2 - y) % 2));
                }
            }
            assert_eq!(set.iter().collect::<BTreeSet<_>>(), want);
        }
    }

    #[test]
    fn fast_and_element_paths_agree() {
        for (ell, mode) in [(2, Mode::Padic), (2, Mode::PowerSeries), (3, Mode::Padic)] {
            let r = RingSpec::new(ell, mode).unwrap();
            for name in ["kakeya", "nikodym"] {
                let f = builtin(name, r).unwrap();
                let slow = Slow(f.as_ref());
                for depth in 1..=3 {
                    for variant in [PhiVariant::Series, PhiVariant::DigitShift] {
                        let a =
                            build_set_cells(f.as_ref(), variant, depth, Budget::default()).unwrap();
                        let b = build_set_cells(&slow, variant, depth, Budget::default()).unwrap();
                        assert_eq!(a, b, "{name} {mode:?} {ell} {depth} {variant:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn single_horizontal_line() {
        let r = fq2();
        let f = kakeya_line_family(r);
        for depth in 1..=4 {
            let plan = BuildPlan::new(&f, PhiVariant::Series, depth, Budget::default()).unwrap();
            let x0 = Vector::zero(r, 1, plan.input_depth());
            let set = plan
                .with_directions(Directions::Points(vec![x0]))
                .unwrap()
                .build()
                .unwrap();
            let w_cells = 1u64 << depth;
            assert_eq!(
                set.iter().collect::<Vec<_>>(),
                (0..w_cells).map(|w| (w, 0)).collect::<Vec<_>>()
            );
            assert_eq!(
                set.estimate(),
                BigRational::new(1.into(), BigInt::from(w_cells))
            );
        }
    }

    #[test]
    fn partial_builds_merge_to_full() {
        let r = fq2();
        let f = kakeya_line_family(r);
        let plan = BuildPlan::new(&f, PhiVariant::Series, 4, Budget::default()).unwrap();
        let n = plan.direction_count();
        let full = plan.build().unwrap();
        let mut merged = plan.empty_set().unwrap();
        let mut lo = 0;
        while lo < n {
            let hi = (lo + 7).min(n);
            merged
                .union_with(&plan.build_range(lo..hi).unwrap())
                .unwrap();
            lo = hi;
        }
        assert_eq!(merged, full);
    }

    #[test]
    fn refinement_and_exactness() {
        let r = fq2();
        let f = kakeya_line_family(r);
        let report = decay_report(&f, PhiVariant::Series, 1, 6, Budget::default()).unwrap();
        assert!(report.is_non_increasing());
        for row in &report.rows {
            assert!(row.estimate <= BigRational::from_integer(1.into()));
            let plan =
                BuildPlan::new(&f, PhiVariant::Series, row.depth, Budget::default()).unwrap();
            let deeper = plan
                .clone()
                .with_input_depth(plan.input_depth() + 2)
                .unwrap();
            assert_eq!(plan.build().unwrap(), deeper.build().unwrap());
        }
    }

    #[test]
    fn union_bound_over_directions() {
        let r = RingSpec::padic(2).unwrap();
        let f = kakeya_line_family(r);
        let depth = 3;
        let plan = BuildPlan::new(&f, PhiVariant::Series, depth, Budget::default()).unwrap();
        let full = plan.build().unwrap();
        let mut sum = 0;
        let mut union = plan.empty_set().unwrap();
        for c in 0..plan.direction_cells().unwrap() {
            let one = plan
                .clone()
                .with_directions(Directions::Cells(vec![c]))
                .unwrap()
                .build()
                .unwrap();
            sum += one.len();
            union.union_with(&one).unwrap();
        }
        assert!(full.len() <= sum);
        assert_eq!(union, full);
    }

    #[test]
    fn budget_errors_carry_exact_counts() {
        let r = RingSpec::power_series(3).unwrap();
        let f = kakeya_line_family(r);
        let err = decay_report(&f, PhiVariant::Series, 2, 30, Budget::default()).unwrap_err();
        let Error::BudgetExceeded { cells, pairs, .. } = err else {
            panic!("unexpected {err:?}");
        };
        let cells: BigUint = cells.parse().unwrap();
        let pairs: BigUint = pairs.parse().unwrap();
        assert!(
            cells > BigUint::from(DEFAULT_CELL_BUDGET)
                || pairs > BigUint::from(DEFAULT_PAIR_BUDGET)
        );
        let tiny = Budget {
            cells: 16,
            pairs: 1 << 20,
        };
        assert!(matches!(
            build_set_cells(&f, PhiVariant::Series, 3, tiny),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn cross_sections() {
        let r = fq2();
        let f = kakeya_line_family(r);
        let w0 = Vector::zero(r, 1, 4);
        let cs = cross_section_cells(&f, PhiVariant::Series, &w0, 4, Budget::default()).unwrap();
        // z = -phi(x) over every direction
        let phi =
            PhiEvaluator::new(PhiConfig::new(r, 1, 1).unwrap(), PhiVariant::Series, 4).unwrap();
        let x_depth = phi.input_depth();
        let range: BTreeSet<u64> = (0..1u64 << x_depth)
            .map(|i| {
                let x = Vector::from_cell_index(r, i, 1, x_depth).unwrap();
                phi.eval(&x).unwrap().neg().cell_index(4).unwrap()
            })
            .collect();
        assert_eq!(cs.iter().map(|(_, z)| z).collect::<BTreeSet<_>>(), range);

        let set = build_set_cells(&f, PhiVariant::Series, 4, Budget::default()).unwrap();
        for wi in 0..16 {
            let w = Vector::from_cell_index(r, wi, 1, 4).unwrap();
            let cs = cross_section_cells(&f, PhiVariant::Series, &w, 4, Budget::default()).unwrap();
            let slice: Vec<u64> = set
                .iter()
                .filter(|&(a, _)| a == wi)
                .map(|(_, z)| z)
                .collect();
            assert_eq!(cs.iter().map(|(_, z)| z).collect::<Vec<_>>(), slice);
        }

        let nik = builtin("nikodym", r).unwrap();
        assert_eq!(
            cross_section_cells(nik.as_ref(), PhiVariant::Series, &w0, 4, Budget::default()),
            Err(Error::RankDeficient)
        );
        let w1 = Vector::new(vec![Element::one(r, 4)]).unwrap();
        assert!(
            cross_section_cells(nik.as_ref(), PhiVariant::Series, &w1, 4, Budget::default())
                .is_ok()
        );
    }

    #[test]
    fn coverage_and_fault_injection() {
        for name in ["kakeya", "nikodym"] {
            let f = builtin(name, fq2()).unwrap();
            for depth in 1..=4 {
                let report =
                    direction_coverage(f.as_ref(), PhiVariant::Series, depth, Budget::default())
                        .unwrap();
                assert_eq!(report.missing_count(), 0);
                assert_eq!(report.directions, 1 << depth);
                assert!(report.vertical_excluded);
            }
        }
        let f = kakeya_line_family(fq2());
        let depth = 3;
        let plan = BuildPlan::new(&f, PhiVariant::Series, depth, Budget::default()).unwrap();
        let mut set = plan.build().unwrap();
        let c = 5;
        let line = plan
            .clone()
            .with_directions(Directions::Cells(vec![c]))
            .unwrap()
            .build()
            .unwrap();
        set.difference_with(&line).unwrap();
        let report = audit_coverage(&plan, &set, Some(&[c])).unwrap();
        assert_eq!(report.missing_count(), 1 << depth);
        assert!(report.missing.iter().all(|&(d, _)| d == c));
    }
}
