//! Discrete Hardy-Littlewood maximal operators: non-centred, centred,
//! fractional and domain-restricted variants, a brute-force oracle, and the
//! two-scale split used by the preservation argument.
//!
//! All variants act on |u|. The non-centred fast path builds, per side
//! length, an anchor-average field from the prefix-sum table and reduces it
//! with a monotone-queue sliding maximum along each axis; the brute-force
//! oracle enumerates every (anchor, side) pair but reads candidate values
//! through the same table, so oracle equivalence is exact, not approximate.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{
    next_index, strides_of, CubeSpec, DiscreteMeasure, DomainMask, GridFunction, SummedAreaTable,
};

/// Cells allowed in the exhaustive oracle.
pub const BRUTE_FORCE_CELL_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaximalVariant {
    NonCentred,
    Centred,
    Fractional,
    DomainCentred,
}

impl MaximalVariant {
    pub fn name(self) -> &'static str {
        match self {
            MaximalVariant::NonCentred => "noncentred",
            MaximalVariant::Centred => "centred",
            MaximalVariant::Fractional => "fractional",
            MaximalVariant::DomainCentred => "domain",
        }
    }
}

/// Operator configuration. `beta` is read only by the fractional variant;
/// `max_side` of `None` resolves to the maximal grid extent, which is enough
/// for exactness: once a cube covers the whole support the zero-extended
/// average decreases in the side length.
#[derive(Debug, Clone, Copy)]
pub struct MaximalConfig {
    pub variant: MaximalVariant,
    pub beta: f64,
    pub max_side: Option<usize>,
}

impl MaximalConfig {
    pub fn new(variant: MaximalVariant) -> Self {
        Self { variant, beta: 0.0, max_side: None }
    }

    pub fn noncentred() -> Self {
        Self::new(MaximalVariant::NonCentred)
    }

    pub fn centred() -> Self {
        Self::new(MaximalVariant::Centred)
    }

    pub fn fractional(beta: f64) -> Self {
        Self { variant: MaximalVariant::Fractional, beta, max_side: None }
    }

    pub fn domain_centred() -> Self {
        Self::new(MaximalVariant::DomainCentred)
    }

    pub fn with_max_side(mut self, s: usize) -> Self {
        self.max_side = Some(s);
        self
    }

    pub fn resolved_max_side(&self, grid_extent: usize) -> usize {
        self.max_side.unwrap_or(grid_extent).max(1)
    }

    fn expect_variant(&self, expected: MaximalVariant) -> Result<()> {
        if self.variant == expected {
            Ok(())
        } else {
            Err(Error::VariantMismatch {
                expected: expected.name(),
                got: self.variant.name(),
            })
        }
    }

    fn validate_beta(&self, ndim: usize) -> Result<f64> {
        let beta = if self.variant == MaximalVariant::Fractional { self.beta } else { 0.0 };
        if !(0.0..=ndim as f64).contains(&beta) || !beta.is_finite() {
            return Err(Error::BetaOutOfRange { beta, ndim });
        }
        Ok(beta)
    }
}

#[derive(Debug, Clone, Copy)]
enum CandidateKind {
    /// sum / s^n: zero-extended average of |u|.
    FunctionAvg,
    /// mass / (s h)^n: measure density over the full cube volume.
    MeasureDensity,
}

/// Candidate value of one cube. Shared by the fast paths and the oracle so
/// the two compute bit-identical floats.
#[inline]
fn candidate(sum: f64, side: usize, h: f64, ndim: usize, beta: f64, kind: CandidateKind) -> f64 {
    let base = match kind {
        CandidateKind::FunctionAvg => sum / (side as f64).powi(ndim as i32),
        CandidateKind::MeasureDensity => sum / (side as f64 * h).powi(ndim as i32),
    };
    if beta == 0.0 {
        base
    } else {
        base * (side as f64 * h).powf(beta)
    }
}

/// Cube sums for the maximal kernels. Side-1 cubes read the cell value
/// directly instead of differencing prefix sums, which keeps the pointwise
/// domination M|u| >= |u| exact. A second prefix table counts support cells
/// (exact integers in f64): a cube containing no nonzero cell sums to
/// exactly zero instead of cancellation dust, so zero regions of the
/// maximal function are exact. Every path (fast and brute force) reads
/// through this, so oracle equivalence stays bit-identical.
struct FieldSource<'a> {
    table: SummedAreaTable,
    support: SummedAreaTable,
    direct: Vec<f64>,
    shape: &'a [usize],
    strides: Vec<usize>,
}

fn support_counts(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|&v| if v != 0.0 { 1.0 } else { 0.0 })
        .collect()
}

impl<'a> FieldSource<'a> {
    fn for_function(u: &'a GridFunction) -> Self {
        let direct: Vec<f64> = u.values().iter().map(|v| v.abs()).collect();
        Self {
            table: SummedAreaTable::from_function_abs(u),
            support: SummedAreaTable::from_values(u.shape(), &support_counts(&direct)),
            direct,
            shape: u.shape(),
            strides: strides_of(u.shape()),
        }
    }

    fn for_measure(mu: &'a DiscreteMeasure) -> Self {
        Self {
            table: SummedAreaTable::from_measure(mu),
            support: SummedAreaTable::from_values(mu.shape(), &support_counts(mu.masses())),
            direct: mu.masses().to_vec(),
            shape: mu.shape(),
            strides: strides_of(mu.shape()),
        }
    }

    #[inline]
    fn sum_at(&self, anchor: &[i64], side: usize) -> f64 {
        if side == 1 {
            let mut lin = 0usize;
            for (k, &a) in anchor.iter().enumerate() {
                if a < 0 || a >= self.shape[k] as i64 {
                    return 0.0;
                }
                lin += a as usize * self.strides[k];
            }
            self.direct[lin]
        } else if self.support.cube_sum_at(anchor, side) == 0.0 {
            0.0
        } else {
            self.table.cube_sum_at(anchor, side)
        }
    }
}

/// One sliding-maximum pass along `axis`; output extent shrinks by
/// window - 1. Monotone deque per lane, O(len) each.
fn sliding_max_axis(
    src: &[f64],
    shape: &[usize],
    axis: usize,
    window: usize,
) -> (Vec<usize>, Vec<f64>) {
    let n = shape.len();
    let len = shape[axis];
    debug_assert!(window >= 1 && window <= len);
    let out_len = len - window + 1;
    let mut out_shape = shape.to_vec();
    out_shape[axis] = out_len;

    if window == 1 {
        return (out_shape, src.to_vec());
    }

    let src_strides = strides_of(shape);
    let dst_strides = strides_of(&out_shape);
    let mut dst = vec![0.0f64; out_shape.iter().product()];

    let outer_axes: Vec<usize> = (0..n).filter(|&j| j != axis).collect();
    let outer_shape: Vec<usize> = outer_axes.iter().map(|&j| shape[j]).collect();
    let axis_stride = src_strides[axis];
    let dst_axis_stride = dst_strides[axis];

    let mut oidx = vec![0usize; outer_axes.len()];
    let mut deque: VecDeque<usize> = VecDeque::with_capacity(window + 1);
    loop {
        let src_base: usize = outer_axes
            .iter()
            .zip(&oidx)
            .map(|(&j, &i)| i * src_strides[j])
            .sum();
        let dst_base: usize = outer_axes
            .iter()
            .zip(&oidx)
            .map(|(&j, &i)| i * dst_strides[j])
            .sum();
        deque.clear();
        for pos in 0..len {
            let v = src[src_base + pos * axis_stride];
            while let Some(&back) = deque.back() {
                if src[src_base + back * axis_stride] <= v {
                    deque.pop_back();
                } else {
                    break;
                }
            }
            deque.push_back(pos);
            if *deque.front().unwrap() + window <= pos {
                deque.pop_front();
            }
            if pos + 1 >= window {
                let best = *deque.front().unwrap();
                dst[dst_base + (pos + 1 - window) * dst_axis_stride] =
                    src[src_base + best * axis_stride];
            }
        }
        if outer_shape.is_empty() || !next_index(&mut oidx, &outer_shape) {
            break;
        }
    }
    (out_shape, dst)
}

/// Per-side non-centred pass: anchor-candidate field on the extended lattice,
/// then one window-max sweep per axis. Output has the grid shape.
fn noncentred_side_field(
    src: &FieldSource<'_>,
    shape: &[usize],
    h: f64,
    side: usize,
    beta: f64,
    kind: CandidateKind,
) -> Vec<f64> {
    let n = shape.len();
    let ext_shape: Vec<usize> = shape.iter().map(|&e| e + side - 1).collect();
    let ext_cells: usize = ext_shape.iter().product();
    let mut field = vec![0.0f64; ext_cells];
    let off = side as i64 - 1;

    let mut idx = vec![0usize; n];
    let mut anchor = vec![0i64; n];
    let mut lin = 0usize;
    loop {
        for k in 0..n {
            anchor[k] = idx[k] as i64 - off;
        }
        let sum = src.sum_at(&anchor, side);
        field[lin] = candidate(sum, side, h, n, beta, kind);
        lin += 1;
        if !next_index(&mut idx, &ext_shape) {
            break;
        }
    }

    let mut cur_shape = ext_shape;
    let mut cur = field;
    for axis in 0..n {
        let (s, d) = sliding_max_axis(&cur, &cur_shape, axis, side);
        cur_shape = s;
        cur = d;
    }
    debug_assert_eq!(cur_shape, shape);
    cur
}

fn pointwise_max(mut a: Vec<f64>, b: Vec<f64>) -> Vec<f64> {
    for (x, y) in a.iter_mut().zip(b) {
        if y > *x {
            *x = y;
        }
    }
    a
}

/// Non-centred reduction over an explicit list of side lengths. Side passes
/// run in parallel; the max-merge is associative and exact, so the result
/// does not depend on scheduling.
fn noncentred_over_sides(
    src: &FieldSource<'_>,
    shape: &[usize],
    h: f64,
    sides: &[usize],
    beta: f64,
    kind: CandidateKind,
) -> Vec<f64> {
    let cells: usize = shape.iter().product();
    sides
        .par_iter()
        .map(|&s| noncentred_side_field(src, shape, h, s, beta, kind))
        .reduce(|| vec![0.0f64; cells], pointwise_max)
}

/// Centred reduction over odd side lengths from `sides`.
fn centred_over_sides(
    src: &FieldSource<'_>,
    shape: &[usize],
    h: f64,
    sides: &[usize],
    beta: f64,
    kind: CandidateKind,
) -> Vec<f64> {
    let n = shape.len();
    let cells: usize = shape.iter().product();
    sides
        .par_iter()
        .filter(|&&s| s % 2 == 1)
        .map(|&s| {
            let half = (s as i64 - 1) / 2;
            let mut field = vec![0.0f64; cells];
            let mut idx = vec![0usize; n];
            let mut anchor = vec![0i64; n];
            let mut lin = 0usize;
            loop {
                for k in 0..n {
                    anchor[k] = idx[k] as i64 - half;
                }
                let sum = src.sum_at(&anchor, s);
                field[lin] = candidate(sum, s, h, n, beta, kind);
                lin += 1;
                if !next_index(&mut idx, shape) {
                    break;
                }
            }
            field
        })
        .reduce(|| vec![0.0f64; cells], pointwise_max)
}

fn check_nonempty(shape: &[usize]) -> Result<()> {
    if shape.is_empty() || shape.iter().any(|&e| e == 0) {
        Err(Error::EmptyGrid)
    } else {
        Ok(())
    }
}

/// Non-centred maximal function: at each cell the maximum of zero-extended
/// |u|-averages over all cubes containing the cell with side up to max_side.
pub fn maximal_noncentred(u: &GridFunction, cfg: &MaximalConfig) -> Result<GridFunction> {
    cfg.expect_variant(MaximalVariant::NonCentred)?;
    check_nonempty(u.shape())?;
    let src = FieldSource::for_function(u);
    let s_max = cfg.resolved_max_side(u.max_extent());
    let sides: Vec<usize> = (1..=s_max).collect();
    let values = noncentred_over_sides(
        &src,
        u.shape(),
        u.cell_width(),
        &sides,
        0.0,
        CandidateKind::FunctionAvg,
    );
    Ok(GridFunction::from_raw(u.shape().to_vec(), u.cell_width(), values))
}

/// Centred maximal function over odd-side cubes centred at each cell.
pub fn maximal_centred(u: &GridFunction, cfg: &MaximalConfig) -> Result<GridFunction> {
    cfg.expect_variant(MaximalVariant::Centred)?;
    check_nonempty(u.shape())?;
    let src = FieldSource::for_function(u);
    let s_max = cfg.resolved_max_side(u.max_extent());
    let sides: Vec<usize> = (1..=s_max).collect();
    let values = centred_over_sides(
        &src,
        u.shape(),
        u.cell_width(),
        &sides,
        0.0,
        CandidateKind::FunctionAvg,
    );
    Ok(GridFunction::from_raw(u.shape().to_vec(), u.cell_width(), values))
}

/// Fractional maximal function: candidate averages weighted by (s h)^beta.
pub fn maximal_fractional(u: &GridFunction, cfg: &MaximalConfig) -> Result<GridFunction> {
    cfg.expect_variant(MaximalVariant::Fractional)?;
    check_nonempty(u.shape())?;
    let beta = cfg.validate_beta(u.ndim())?;
    let src = FieldSource::for_function(u);
    let s_max = cfg.resolved_max_side(u.max_extent());
    let sides: Vec<usize> = (1..=s_max).collect();
    let values = noncentred_over_sides(
        &src,
        u.shape(),
        u.cell_width(),
        &sides,
        beta,
        CandidateKind::FunctionAvg,
    );
    Ok(GridFunction::from_raw(u.shape().to_vec(), u.cell_width(), values))
}

/// Non-centred maximal function of a measure: sup of mu(Q)/|Q| over cubes
/// containing the cell. With a fractional config the candidates carry the
/// (s h)^beta weight.
pub fn maximal_measure(mu: &DiscreteMeasure, cfg: &MaximalConfig) -> Result<GridFunction> {
    let beta = match cfg.variant {
        MaximalVariant::NonCentred => 0.0,
        MaximalVariant::Fractional => cfg.validate_beta(mu.ndim())?,
        other => {
            return Err(Error::VariantMismatch {
                expected: "noncentred|fractional",
                got: other.name(),
            })
        }
    };
    check_nonempty(mu.shape())?;
    let src = FieldSource::for_measure(mu);
    let s_max = cfg.resolved_max_side(mu.max_extent());
    let sides: Vec<usize> = (1..=s_max).collect();
    let values = noncentred_over_sides(
        &src,
        mu.shape(),
        mu.cell_width(),
        &sides,
        beta,
        CandidateKind::MeasureDensity,
    );
    Ok(GridFunction::from_raw(mu.shape().to_vec(), mu.cell_width(), values))
}

/// Maximal field restricted to a domain mask; values are defined on mask
/// cells only.
#[derive(Debug, Clone)]
pub struct DomainField {
    field: GridFunction,
    mask: DomainMask,
}

impl DomainField {
    pub fn value_at(&self, idx: &[usize]) -> Result<f64> {
        if !self.mask.contains(idx) {
            return Err(Error::NotAMaskCell(idx.iter().map(|&i| i as i64).collect()));
        }
        Ok(self.field.value_at(idx))
    }

    /// Underlying grid with zeros outside the mask.
    pub fn grid(&self) -> &GridFunction {
        &self.field
    }

    pub fn mask(&self) -> &DomainMask {
        &self.mask
    }
}

/// Centred maximal function over cubes that lie entirely inside the mask.
/// The single-cell cube is always admissible at a mask cell.
pub fn maximal_domain_centred(
    u: &GridFunction,
    mask: &DomainMask,
    cfg: &MaximalConfig,
) -> Result<DomainField> {
    cfg.expect_variant(MaximalVariant::DomainCentred)?;
    check_nonempty(u.shape())?;
    if u.shape() != mask.shape() {
        return Err(Error::GeometryMismatch);
    }
    let n = u.ndim();
    let src = FieldSource::for_function(u);
    let mask_counts: Vec<f64> = mask.cells().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let mask_table = SummedAreaTable::from_values(u.shape(), &mask_counts);
    let s_max = cfg.resolved_max_side(u.max_extent());

    let mut values = vec![0.0f64; u.len()];
    let mut idx = vec![0usize; n];
    let mut anchor = vec![0i64; n];
    let mut lin = 0usize;
    loop {
        if mask.contains_lin(lin) {
            let mut best = 0.0f64;
            let mut s = 1usize;
            while s <= s_max {
                let half = (s as i64 - 1) / 2;
                for k in 0..n {
                    anchor[k] = idx[k] as i64 - half;
                }
                let inside = anchor
                    .iter()
                    .zip(u.shape())
                    .all(|(&a, &e)| a >= 0 && a + s as i64 <= e as i64);
                if !inside {
                    break;
                }
                let cells_in_mask = mask_table.cube_sum_at(&anchor, s);
                if cells_in_mask != (s as f64).powi(n as i32) {
                    // admissibility is monotone: a larger centred cube
                    // contains this one, so stop here
                    break;
                }
                let sum = src.sum_at(&anchor, s);
                let c = candidate(sum, s, u.cell_width(), n, 0.0, CandidateKind::FunctionAvg);
                if c > best {
                    best = c;
                }
                s += 2;
            }
            values[lin] = best;
        }
        lin += 1;
        if !next_index(&mut idx, u.shape()) {
            break;
        }
    }
    Ok(DomainField {
        field: GridFunction::from_raw(u.shape().to_vec(), u.cell_width(), values),
        mask: mask.clone(),
    })
}

/// The two-scale split of the maximal function: `small_scales` restricts the
/// supremum to sides <= r0 cells, `large_scales` to sides > r0. The empty
/// supremum is encoded as 0, consistent with nonnegative candidates.
#[derive(Debug, Clone)]
pub struct ScaleSplit {
    pub small_scales: GridFunction,
    pub large_scales: GridFunction,
    /// True when r0 = max_side leaves no admissible cube for the large part.
    pub large_vacuous: bool,
}

pub fn scale_split_maximal(
    u: &GridFunction,
    r0_cells: usize,
    cfg: &MaximalConfig,
) -> Result<ScaleSplit> {
    check_nonempty(u.shape())?;
    let s_max = cfg.resolved_max_side(u.max_extent());
    if r0_cells < 1 || r0_cells > s_max {
        return Err(Error::BadSplitRadius { r0: r0_cells, max_side: s_max });
    }
    let (kind, centred) = match cfg.variant {
        MaximalVariant::NonCentred => (CandidateKind::FunctionAvg, false),
        MaximalVariant::Centred => (CandidateKind::FunctionAvg, true),
        other => {
            return Err(Error::VariantMismatch {
                expected: "noncentred|centred",
                got: other.name(),
            })
        }
    };
    let src = FieldSource::for_function(u);
    let h = u.cell_width();
    let small_sides: Vec<usize> = (1..=r0_cells).collect();
    let large_sides: Vec<usize> = (r0_cells + 1..=s_max).collect();
    let run = |sides: &[usize]| -> Vec<f64> {
        if centred {
            centred_over_sides(&src, u.shape(), h, sides, 0.0, kind)
        } else {
            noncentred_over_sides(&src, u.shape(), h, sides, 0.0, kind)
        }
    };
    let small = run(&small_sides);
    let large_vacuous = large_sides.is_empty()
        || (centred && large_sides.iter().all(|s| s % 2 == 0));
    let large = if large_vacuous { vec![0.0; u.len()] } else { run(&large_sides) };
    Ok(ScaleSplit {
        small_scales: GridFunction::from_raw(u.shape().to_vec(), h, small),
        large_scales: GridFunction::from_raw(u.shape().to_vec(), h, large),
        large_vacuous,
    })
}

/// Input selector for the exhaustive oracle.
#[derive(Debug, Clone, Copy)]
pub enum MaximalInput<'a> {
    Function(&'a GridFunction),
    Measure(&'a DiscreteMeasure),
    MaskedFunction(&'a GridFunction, &'a DomainMask),
}

impl<'a> MaximalInput<'a> {
    fn shape(&self) -> &[usize] {
        match self {
            MaximalInput::Function(u) => u.shape(),
            MaximalInput::Measure(mu) => mu.shape(),
            MaximalInput::MaskedFunction(u, _) => u.shape(),
        }
    }

    fn cell_width(&self) -> f64 {
        match self {
            MaximalInput::Function(u) => u.cell_width(),
            MaximalInput::Measure(mu) => mu.cell_width(),
            MaximalInput::MaskedFunction(u, _) => u.cell_width(),
        }
    }
}

/// Literal enumeration of every admissible (anchor, side) pair for the
/// configured variant. Candidate arithmetic goes through the same prefix-sum
/// table as the fast paths, so agreement with them is exact.
pub fn brute_force_maximal(input: MaximalInput<'_>, cfg: &MaximalConfig) -> Result<GridFunction> {
    let shape = input.shape().to_vec();
    check_nonempty(&shape)?;
    let cells: usize = shape.iter().product();
    if cells > BRUTE_FORCE_CELL_LIMIT {
        return Err(Error::BruteForceGuard { cells, limit: BRUTE_FORCE_CELL_LIMIT });
    }
    let n = shape.len();
    let h = input.cell_width();
    let strides = strides_of(&shape);

    let (src, kind, beta, centred, mask): (
        FieldSource<'_>,
        CandidateKind,
        f64,
        bool,
        Option<&DomainMask>,
    ) = match (input, cfg.variant) {
        (MaximalInput::Function(u), MaximalVariant::NonCentred) => {
            (FieldSource::for_function(u), CandidateKind::FunctionAvg, 0.0, false, None)
        }
        (MaximalInput::Function(u), MaximalVariant::Fractional) => (
            FieldSource::for_function(u),
            CandidateKind::FunctionAvg,
            cfg.validate_beta(n)?,
            false,
            None,
        ),
        (MaximalInput::Function(u), MaximalVariant::Centred) => {
            (FieldSource::for_function(u), CandidateKind::FunctionAvg, 0.0, true, None)
        }
        (MaximalInput::Measure(mu), MaximalVariant::NonCentred) => {
            (FieldSource::for_measure(mu), CandidateKind::MeasureDensity, 0.0, false, None)
        }
        (MaximalInput::Measure(mu), MaximalVariant::Fractional) => (
            FieldSource::for_measure(mu),
            CandidateKind::MeasureDensity,
            cfg.validate_beta(n)?,
            false,
            None,
        ),
        (MaximalInput::MaskedFunction(u, m), MaximalVariant::DomainCentred) => {
            if u.shape() != m.shape() {
                return Err(Error::GeometryMismatch);
            }
            (FieldSource::for_function(u), CandidateKind::FunctionAvg, 0.0, true, Some(m))
        }
        (_, v) => {
            return Err(Error::VariantMismatch {
                expected: "matching input for variant",
                got: v.name(),
            })
        }
    };

    let s_max = cfg.resolved_max_side(shape.iter().copied().max().unwrap_or(1));
    let mut out = vec![0.0f64; cells];

    if centred {
        // enumerate cells x odd sides
        let mut idx = vec![0usize; n];
        let mut anchor = vec![0i64; n];
        let mut lin = 0usize;
        loop {
            let cell_ok = mask.map_or(true, |m| m.contains_lin(lin));
            if cell_ok {
                let mut best = 0.0f64;
                let mut s = 1usize;
                while s <= s_max {
                    let half = (s as i64 - 1) / 2;
                    for k in 0..n {
                        anchor[k] = idx[k] as i64 - half;
                    }
                    let admissible = match mask {
                        None => true,
                        Some(m) => {
                            let inside = anchor
                                .iter()
                                .zip(&shape)
                                .all(|(&a, &e)| a >= 0 && a + s as i64 <= e as i64);
                            inside && {
                                let mut cell: Vec<usize> =
                                    anchor.iter().map(|&a| a as usize).collect();
                                let mut all_in = true;
                                'cells: loop {
                                    let cl: usize = cell
                                        .iter()
                                        .zip(&strides)
                                        .map(|(&i, &st)| i * st)
                                        .sum();
                                    if !m.contains_lin(cl) {
                                        all_in = false;
                                        break;
                                    }
                                    let mut k = n;
                                    loop {
                                        if k == 0 {
                                            break 'cells;
                                        }
                                        k -= 1;
                                        cell[k] += 1;
                                        if cell[k] < anchor[k] as usize + s {
                                            break;
                                        }
                                        cell[k] = anchor[k] as usize;
                                    }
                                }
                                all_in
                            }
                        }
                    };
                    if admissible {
                        let sum = src.sum_at(&anchor, s);
                        let c = candidate(sum, s, h, n, beta, kind);
                        if c > best {
                            best = c;
                        }
                    }
                    s += 2;
                }
                out[lin] = best;
            }
            lin += 1;
            if !next_index(&mut idx, &shape) {
                break;
            }
        }
    } else {
        // enumerate (anchor, side); relax the max at every in-grid cell of
        // the cube
        let mut lo = vec![0usize; n];
        let mut hi = vec![0usize; n];
        let mut cell = vec![0usize; n];
        for s in 1..=s_max {
            let off = s as i64 - 1;
            let ext_shape: Vec<usize> = shape.iter().map(|&e| e + s - 1).collect();
            let mut aidx = vec![0usize; n];
            let mut anchor = vec![0i64; n];
            loop {
                for k in 0..n {
                    anchor[k] = aidx[k] as i64 - off;
                }
                let sum = src.sum_at(&anchor, s);
                let c = candidate(sum, s, h, n, beta, kind);
                // clip the cube to the grid and relax over its cells
                let mut empty = false;
                for k in 0..n {
                    let l = anchor[k].max(0) as usize;
                    let hh = ((anchor[k] + s as i64).min(shape[k] as i64)).max(0) as usize;
                    if l >= hh {
                        empty = true;
                        break;
                    }
                    lo[k] = l;
                    hi[k] = hh;
                }
                if !empty {
                    cell.copy_from_slice(&lo);
                    'cells: loop {
                        let lin: usize =
                            cell.iter().zip(&strides).map(|(&i, &st)| i * st).sum();
                        if c > out[lin] {
                            out[lin] = c;
                        }
                        let mut k = n;
                        loop {
                            if k == 0 {
                                break 'cells;
                            }
                            k -= 1;
                            cell[k] += 1;
                            if cell[k] < hi[k] {
                                break;
                            }
                            cell[k] = lo[k];
                        }
                    }
                }
                if !next_index(&mut aidx, &ext_shape) {
                    break;
                }
            }
        }
    }

    Ok(GridFunction::from_raw(shape, h, out))
}

/// True when any cell is negative; the operators act on |u| and callers
/// surface this as a report flag.
pub fn has_negative_values(u: &GridFunction) -> bool {
    u.values().iter().any(|&v| v < 0.0)
}
