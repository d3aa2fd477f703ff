//! Uniform-grid scalar fields, discrete measures, axis-parallel cube geometry
//! and O(1) cube sums via prefix-sum tables.
//!
//! Conventions: values are stored row-major (last axis fastest), the grid is
//! extended by zero outside its box, and cube averages divide by the full
//! cube volume so the discrete operators stay consistent with the continuum
//! definitions under zero extension.

use crate::error::{Error, Result};

/// Real-valued function sampled on a uniform n-dimensional grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    shape: Vec<usize>,
    cell_width: f64,
    values: Vec<f64>,
}

/// Nonnegative mass per grid cell. A density g is encoded as mass g*h^n per
/// cell; a point mass as a single-cell mass.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    shape: Vec<usize>,
    cell_width: f64,
    masses: Vec<f64>,
}

/// Axis-parallel cube in cell coordinates: anchor is the cell index of the
/// low corner (may be negative, the cube may overhang the grid), side is the
/// edge length in cells.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CubeSpec {
    pub anchor: Vec<i64>,
    pub side: usize,
}

/// Prefix sums of a scalar field, one extra slot per axis. `cube_sum` reads
/// any axis-parallel box in O(2^n).
#[derive(Debug, Clone)]
pub struct SummedAreaTable {
    shape: Vec<usize>,
    table_strides: Vec<usize>,
    table: Vec<f64>,
}

/// Boolean cell set forming one face-connected component; the discrete Omega
/// for domain-restricted operators.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainMask {
    shape: Vec<usize>,
    cells: Vec<bool>,
}

fn validate_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() || shape.iter().any(|&e| e == 0) {
        return Err(Error::EmptyGrid);
    }
    if shape.len() > 8 {
        return Err(Error::TooManyDims(shape.len()));
    }
    Ok(shape.iter().product())
}

fn row_major_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * shape[k + 1];
    }
    strides
}

/// Advance a row-major multi-index in place; false once the range is done.
pub(crate) fn next_index(idx: &mut [usize], shape: &[usize]) -> bool {
    for k in (0..shape.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return true;
        }
        idx[k] = 0;
    }
    false
}

impl GridFunction {
    pub fn new(shape: Vec<usize>, cell_width: f64, values: Vec<f64>) -> Result<Self> {
        let cells = validate_shape(&shape)?;
        if !(cell_width > 0.0) || !cell_width.is_finite() {
            return Err(Error::BadCellWidth(cell_width));
        }
        if values.len() != cells {
            return Err(Error::GeometryMismatch);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid values"));
        }
        Ok(Self { shape, cell_width, values })
    }

    pub fn constant(shape: Vec<usize>, cell_width: f64, value: f64) -> Result<Self> {
        let cells = validate_shape(&shape)?;
        Self::new(shape, cell_width, vec![value; cells])
    }

    /// Sample `f` at cell centers ((i_k + 1/2) h per axis).
    pub fn from_fn(
        shape: Vec<usize>,
        cell_width: f64,
        mut f: impl FnMut(&[f64]) -> f64,
    ) -> Result<Self> {
        let cells = validate_shape(&shape)?;
        let n = shape.len();
        let mut values = Vec::with_capacity(cells);
        let mut idx = vec![0usize; n];
        let mut x = vec![0.0f64; n];
        loop {
            for k in 0..n {
                x[k] = (idx[k] as f64 + 0.5) * cell_width;
            }
            values.push(f(&x));
            if !next_index(&mut idx, &shape) {
                break;
            }
        }
        Self::new(shape, cell_width, values)
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn cell_width(&self) -> f64 {
        self.cell_width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest extent over the axes; the default maximal-operator scale cap.
    pub fn max_extent(&self) -> usize {
        self.shape.iter().copied().max().unwrap_or(0)
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let strides = row_major_strides(&self.shape);
        idx.iter().zip(&strides).map(|(&i, &s)| i * s).sum()
    }

    pub fn value_at(&self, idx: &[usize]) -> f64 {
        self.values[self.linear_index(idx)]
    }

    pub fn same_geometry(&self, other: &GridFunction) -> bool {
        self.shape == other.shape && self.cell_width == other.cell_width
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            shape: self.shape.clone(),
            cell_width: self.cell_width,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub(crate) fn from_raw(shape: Vec<usize>, cell_width: f64, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), shape.iter().product::<usize>());
        Self { shape, cell_width, values }
    }
}

impl DiscreteMeasure {
    pub fn new(shape: Vec<usize>, cell_width: f64, masses: Vec<f64>) -> Result<Self> {
        let cells = validate_shape(&shape)?;
        if !(cell_width > 0.0) || !cell_width.is_finite() {
            return Err(Error::BadCellWidth(cell_width));
        }
        if masses.len() != cells {
            return Err(Error::GeometryMismatch);
        }
        for &m in &masses {
            if !m.is_finite() {
                return Err(Error::NonFinite("measure masses"));
            }
            if m < 0.0 {
                return Err(Error::NegativeMass(m));
            }
        }
        Ok(Self { shape, cell_width, masses })
    }

    /// Lebesgue encoding: mass h^n in every cell.
    pub fn lebesgue(shape: Vec<usize>, cell_width: f64) -> Result<Self> {
        let cells = validate_shape(&shape)?;
        let hn = cell_width.powi(shape.len() as i32);
        Self::new(shape, cell_width, vec![hn; cells])
    }

    /// Unit point mass at one cell.
    pub fn dirac(shape: Vec<usize>, cell_width: f64, cell: &[usize]) -> Result<Self> {
        let cells = validate_shape(&shape)?;
        let mut masses = vec![0.0; cells];
        let strides = row_major_strides(&shape);
        let lin: usize = cell.iter().zip(&strides).map(|(&i, &s)| i * s).sum();
        masses[lin] = 1.0;
        Self::new(shape, cell_width, masses)
    }

    /// Encode a nonnegative density field as the measure with mass g*h^n per cell.
    pub fn from_density(g: &GridFunction) -> Result<Self> {
        let hn = g.cell_width().powi(g.ndim() as i32);
        let masses = g.values().iter().map(|&v| v * hn).collect();
        Self::new(g.shape().to_vec(), g.cell_width(), masses)
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        Self::new(
            self.shape.clone(),
            self.cell_width,
            self.masses.iter().map(|&m| m * c).collect(),
        )
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn cell_width(&self) -> f64 {
        self.cell_width
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn max_extent(&self) -> usize {
        self.shape.iter().copied().max().unwrap_or(0)
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn same_geometry_as_fn(&self, u: &GridFunction) -> bool {
        self.shape == *u.shape() && self.cell_width == u.cell_width()
    }
}

impl CubeSpec {
    pub fn new(anchor: Vec<i64>, side: usize) -> Result<Self> {
        if side == 0 {
            return Err(Error::BadCubeSide);
        }
        Ok(Self { anchor, side })
    }

    pub fn ndim(&self) -> usize {
        self.anchor.len()
    }

    /// Euclidean diameter of the closed cube: s*h*sqrt(n).
    pub fn diameter(&self, cell_width: f64) -> f64 {
        self.side as f64 * cell_width * (self.ndim() as f64).sqrt()
    }

    /// Full cube volume (s*h)^n, regardless of grid clipping.
    pub fn volume(&self, cell_width: f64) -> f64 {
        (self.side as f64 * cell_width).powi(self.ndim() as i32)
    }

    /// True when every cell of the cube is a grid cell.
    pub fn inside(&self, shape: &[usize]) -> bool {
        self.anchor.iter().zip(shape).all(|(&a, &e)| {
            a >= 0 && a + self.side as i64 <= e as i64
        })
    }

    /// True when the half-open cell boxes intersect.
    pub fn intersects_grid(&self, shape: &[usize]) -> bool {
        self.anchor.iter().zip(shape).all(|(&a, &e)| {
            a < e as i64 && a + self.side as i64 > 0
        })
    }

    /// Cell-set inclusion: every cell of `self` is a cell of `other`.
    pub fn contained_in(&self, other: &CubeSpec) -> bool {
        self.anchor.iter().zip(&other.anchor).all(|(&a, &b)| {
            a >= b && a + self.side as i64 <= b + other.side as i64
        })
    }

    /// Iterate the in-grid cells of the cube.
    pub fn grid_cells<'a>(&'a self, shape: &'a [usize]) -> impl Iterator<Item = Vec<usize>> + 'a {
        let n = self.ndim();
        let mut lo = vec![0usize; n];
        let mut hi = vec![0usize; n];
        let mut empty = false;
        for k in 0..n {
            let l = self.anchor[k].max(0) as usize;
            let h = ((self.anchor[k] + self.side as i64).min(shape[k] as i64)).max(0) as usize;
            if l >= h {
                empty = true;
            }
            lo[k] = l;
            hi[k] = h;
        }
        let mut cur = lo.clone();
        let mut done = empty;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let out = cur.clone();
            // advance within [lo, hi)
            let mut k = n;
            loop {
                if k == 0 {
                    done = true;
                    break;
                }
                k -= 1;
                cur[k] += 1;
                if cur[k] < hi[k] {
                    break;
                }
                cur[k] = lo[k];
            }
            Some(out)
        })
    }
}

/// lambda-dilation on the cell lattice: same center cell, side factor*s.
/// Only odd factors keep the result cell-aligned.
pub fn cube_dilate(q: &CubeSpec, factor: u64) -> Result<CubeSpec> {
    if factor % 2 == 0 || factor == 0 {
        return Err(Error::EvenDilation(factor));
    }
    let pad = ((factor - 1) / 2) as i64 * q.side as i64;
    Ok(CubeSpec {
        anchor: q.anchor.iter().map(|&a| a - pad).collect(),
        side: q.side * factor as usize,
    })
}

impl SummedAreaTable {
    fn build(shape: &[usize], values: &[f64]) -> Self {
        let n = shape.len();
        let table_shape: Vec<usize> = shape.iter().map(|&e| e + 1).collect();
        let tn: usize = table_shape.iter().product();
        let mut table = vec![0.0f64; tn];
        let tstrides = row_major_strides(&table_shape);
        let vstrides = row_major_strides(shape);

        // Scatter values into the shifted slots.
        let mut idx = vec![0usize; n];
        loop {
            let src: usize = idx.iter().zip(&vstrides).map(|(&i, &s)| i * s).sum();
            let dst: usize = idx.iter().zip(&tstrides).map(|(&i, &s)| (i + 1) * s).sum();
            table[dst] = values[src];
            if !next_index(&mut idx, shape) {
                break;
            }
        }

        // Prefix along each axis in turn; the axis-by-axis order is the
        // documented deterministic summation order.
        for k in 0..n {
            let stride = tstrides[k];
            let extent = table_shape[k];
            let outer_shape: Vec<usize> = (0..n).filter(|&j| j != k).map(|j| table_shape[j]).collect();
            let outer_strides: Vec<usize> = (0..n).filter(|&j| j != k).map(|j| tstrides[j]).collect();
            let mut oidx = vec![0usize; outer_shape.len()];
            loop {
                let base: usize = oidx.iter().zip(&outer_strides).map(|(&i, &s)| i * s).sum();
                for i in 1..extent {
                    table[base + i * stride] += table[base + (i - 1) * stride];
                }
                if outer_shape.is_empty() || !next_index(&mut oidx, &outer_shape) {
                    break;
                }
            }
        }

        Self { shape: shape.to_vec(), table_strides: tstrides, table }
    }

    pub fn from_function(u: &GridFunction) -> Self {
        Self::build(u.shape(), u.values())
    }

    /// Table over |u|; the maximal operators act on the modulus.
    pub fn from_function_abs(u: &GridFunction) -> Self {
        let abs: Vec<f64> = u.values().iter().map(|v| v.abs()).collect();
        Self::build(u.shape(), &abs)
    }

    pub fn from_measure(mu: &DiscreteMeasure) -> Self {
        Self::build(mu.shape(), mu.masses())
    }

    pub fn from_values(shape: &[usize], values: &[f64]) -> Self {
        Self::build(shape, values)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Sum of the field over the cells of q that lie inside the grid;
    /// cells outside contribute zero.
    pub fn cube_sum(&self, q: &CubeSpec) -> f64 {
        debug_assert_eq!(q.ndim(), self.shape.len());
        self.cube_sum_at(&q.anchor, q.side)
    }

    /// As `cube_sum` without constructing a `CubeSpec`.
    pub fn cube_sum_at(&self, anchor: &[i64], side: usize) -> f64 {
        let n = self.shape.len();
        let mut lo = [0usize; 8];
        let mut hi = [0usize; 8];
        for k in 0..n {
            let l = anchor[k].clamp(0, self.shape[k] as i64) as usize;
            let h = (anchor[k] + side as i64).clamp(0, self.shape[k] as i64) as usize;
            if l >= h {
                return 0.0;
            }
            lo[k] = l;
            hi[k] = h;
        }
        let mut sum = 0.0;
        for corner in 0..(1usize << n) {
            let mut lin = 0usize;
            let mut low_picks = 0u32;
            for k in 0..n {
                if corner & (1 << k) != 0 {
                    lin += lo[k] * self.table_strides[k];
                    low_picks += 1;
                } else {
                    lin += hi[k] * self.table_strides[k];
                }
            }
            if low_picks % 2 == 0 {
                sum += self.table[lin];
            } else {
                sum -= self.table[lin];
            }
        }
        sum
    }
}

/// Raw cell-value sum of u over q under zero extension.
pub fn cube_sum(table: &SummedAreaTable, q: &CubeSpec) -> f64 {
    table.cube_sum(q)
}

/// Zero-extended cube mean: the sum over in-grid cells divided by the full
/// cell count s^n. Equals the plain cell mean when q lies inside the grid.
pub fn cube_average(u: &GridFunction, q: &CubeSpec) -> f64 {
    let table = SummedAreaTable::from_function(u);
    cube_average_from_table(&table, q)
}

/// As `cube_average`, reusing a prebuilt table.
pub fn cube_average_from_table(table: &SummedAreaTable, q: &CubeSpec) -> f64 {
    let n = table.shape().len();
    table.cube_sum(q) / (q.side as f64).powi(n as i32)
}

/// mu(Q): total mass of the cells of q inside the grid.
pub fn cube_measure(mu: &DiscreteMeasure, q: &CubeSpec) -> f64 {
    SummedAreaTable::from_measure(mu).cube_sum(q)
}

impl DomainMask {
    pub fn new(shape: Vec<usize>, cells: Vec<bool>) -> Result<Self> {
        let n_cells = validate_shape(&shape)?;
        if cells.len() != n_cells {
            return Err(Error::GeometryMismatch);
        }
        let mask = Self { shape, cells };
        let first = match mask.cells.iter().position(|&b| b) {
            Some(i) => i,
            None => return Err(Error::EmptyMask),
        };
        if !mask.is_connected_from(first) {
            return Err(Error::MaskDisconnected);
        }
        Ok(mask)
    }

    pub fn full(shape: Vec<usize>) -> Result<Self> {
        let n_cells = validate_shape(&shape)?;
        Self::new(shape, vec![true; n_cells])
    }

    fn is_connected_from(&self, start: usize) -> bool {
        let strides = row_major_strides(&self.shape);
        let total = self.cells.iter().filter(|&&b| b).count();
        let mut seen = vec![false; self.cells.len()];
        let mut stack = vec![start];
        seen[start] = true;
        let mut visited = 0usize;
        while let Some(lin) = stack.pop() {
            visited += 1;
            // decode, then try both face neighbours per axis
            let mut rem = lin;
            let mut idx = vec![0usize; self.shape.len()];
            for k in 0..self.shape.len() {
                idx[k] = rem / strides[k];
                rem %= strides[k];
            }
            for k in 0..self.shape.len() {
                if idx[k] > 0 {
                    let nb = lin - strides[k];
                    if self.cells[nb] && !seen[nb] {
                        seen[nb] = true;
                        stack.push(nb);
                    }
                }
                if idx[k] + 1 < self.shape[k] {
                    let nb = lin + strides[k];
                    if self.cells[nb] && !seen[nb] {
                        seen[nb] = true;
                        stack.push(nb);
                    }
                }
            }
        }
        visited == total
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn contains_lin(&self, lin: usize) -> bool {
        self.cells[lin]
    }

    pub fn contains(&self, idx: &[usize]) -> bool {
        let strides = row_major_strides(&self.shape);
        let lin: usize = idx.iter().zip(&strides).map(|(&i, &s)| i * s).sum();
        self.cells[lin]
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }
}

pub(crate) fn strides_of(shape: &[usize]) -> Vec<usize> {
    row_major_strides(shape)
}
