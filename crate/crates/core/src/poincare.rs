//! Poincaré-type functionals: mean q-oscillation, weak-type oscillation,
//! fractional averages a(Q), theorem right-hand sides, the self-improvement
//! exponent, and empirical best constants over cube families.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{CubeSpec, DiscreteMeasure, GridFunction, SummedAreaTable};
use crate::maximal::{maximal_measure, MaximalConfig};
use crate::report::{ReportRow, ReportSummary};

/// Which of the two theorem alternatives the scenario instantiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoincareVariant {
    /// alpha = 0 with mu the Lebesgue encoding (possibly scaled).
    LebesgueAlphaZero,
    /// alpha in (0,1] with mu an arbitrary nonnegative measure.
    MeasureAlphaPositive,
}

#[derive(Debug, Clone, Copy)]
pub struct PoincareConfig {
    pub alpha: f64,
    pub q: f64,
    pub variant: PoincareVariant,
}

impl PoincareConfig {
    pub fn lebesgue_alpha_zero() -> Self {
        Self { alpha: 0.0, q: 1.0, variant: PoincareVariant::LebesgueAlphaZero }
    }

    pub fn measure_alpha(alpha: f64) -> Self {
        Self { alpha, q: 1.0, variant: PoincareVariant::MeasureAlphaPositive }
    }

    pub fn with_q(mut self, q: f64) -> Self {
        self.q = q;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q >= 1.0) {
            return Err(Error::BadExponent(self.q));
        }
        match self.variant {
            PoincareVariant::LebesgueAlphaZero => {
                if self.alpha != 0.0 {
                    return Err(Error::AlphaOutOfRange(self.alpha));
                }
            }
            PoincareVariant::MeasureAlphaPositive => {
                if !(self.alpha > 0.0 && self.alpha <= 1.0) {
                    return Err(Error::AlphaOutOfRange(self.alpha));
                }
            }
        }
        Ok(())
    }
}

/// Self-improvement exponent n/(n - alpha). Rejected for alpha = 0 (that
/// route goes through the John-Nirenberg inequality, not this formula) and
/// for alpha >= n.
pub fn fpw_exponent(ndim: usize, alpha: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Err(Error::FpwAlphaZero);
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let n = ndim as f64;
    if alpha >= n {
        return Err(Error::FpwAlphaTooLarge { alpha, ndim });
    }
    Ok(n / (n - alpha))
}

fn require_inside(u_shape: &[usize], q: &CubeSpec) -> Result<()> {
    if q.inside(u_shape) {
        Ok(())
    } else {
        Err(Error::CubeOutsideGrid)
    }
}

/// Deviations |u - u_Q| over the cells of a cube fully inside the grid,
/// using the true cell mean (no zero extension).
fn deviations(u: &GridFunction, q: &CubeSpec) -> Result<Vec<f64>> {
    require_inside(u.shape(), q)?;
    let mut cells = Vec::with_capacity(q.side.pow(u.ndim() as u32));
    for cell in q.grid_cells(u.shape()) {
        cells.push(u.value_at(&cell));
    }
    let mean = cells.iter().sum::<f64>() / cells.len() as f64;
    Ok(cells.into_iter().map(|v| (v - mean).abs()).collect())
}

/// (mean over Q of |u - u_Q|^q)^(1/q) with the true cell mean. The cube must
/// lie inside the grid: oscillation against the zero extension would
/// manufacture boundary jumps.
pub fn mean_oscillation_q(u: &GridFunction, q: &CubeSpec, exponent: f64) -> Result<f64> {
    if !(exponent >= 1.0) {
        return Err(Error::BadExponent(exponent));
    }
    let devs = deviations(u, q)?;
    let count = devs.len() as f64;
    if exponent == 1.0 {
        Ok(devs.iter().sum::<f64>() / count)
    } else if exponent == 2.0 {
        Ok((devs.iter().map(|d| d * d).sum::<f64>() / count).sqrt())
    } else {
        Ok((devs.iter().map(|d| d.powf(exponent)).sum::<f64>() / count).powf(1.0 / exponent))
    }
}

/// Weak-L^q quasi-norm of 1_Q (u - u_Q), divided by |Q|^{1/q}. Exact for
/// step functions, hence exact on grids: with v the deviations sorted
/// descending and cell measure h^n, the norm is max_k v_k (k h^n)^{1/q}.
pub fn weak_oscillation(u: &GridFunction, q: &CubeSpec, exponent: f64) -> Result<f64> {
    if !(exponent >= 1.0) {
        return Err(Error::BadExponent(exponent));
    }
    let mut devs = deviations(u, q)?;
    devs.sort_by(|a, b| b.partial_cmp(a).expect("finite deviations"));
    let n = u.ndim() as i32;
    let cell_measure = u.cell_width().powi(n);
    let inv_q = 1.0 / exponent;
    let mut best = 0.0f64;
    for (k, &v) in devs.iter().enumerate() {
        let t = v * ((k + 1) as f64 * cell_measure).powf(inv_q);
        if t > best {
            best = t;
        }
    }
    Ok(best / q.volume(u.cell_width()).powf(inv_q))
}

/// The fractional average a(Q) = diam(Q)^alpha mu(Q) / |Q|.
pub fn poincare_functional(mu: &DiscreteMeasure, q: &CubeSpec, alpha: f64) -> Result<f64> {
    let table = SummedAreaTable::from_measure(mu);
    poincare_functional_from_table(&table, mu.cell_width(), q, alpha)
}

/// As `poincare_functional`, reusing a prebuilt mass table.
pub fn poincare_functional_from_table(
    mass_table: &SummedAreaTable,
    cell_width: f64,
    q: &CubeSpec,
    alpha: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let mass = mass_table.cube_sum(q);
    Ok(q.diameter(cell_width).powf(alpha) * mass / q.volume(cell_width))
}

/// Theorem right-hand side diam(Q)^alpha inf_{z in Q} M mu(z), evaluated on
/// a precomputed maximal field of the measure.
pub fn rhs_maximal_inf(m_mu: &GridFunction, q: &CubeSpec, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    require_inside(m_mu.shape(), q)?;
    let mut inf = f64::INFINITY;
    for cell in q.grid_cells(m_mu.shape()) {
        let v = m_mu.value_at(&cell);
        if v < inf {
            inf = v;
        }
    }
    Ok(q.diameter(m_mu.cell_width()).powf(alpha) * inf)
}

/// Bookkeeping variant of the right-hand side:
/// diam(Q)^alpha sup_{Q' contains Q, side <= max_side} mu(Q')/|Q'|,
/// by direct enumeration of the containing cubes.
pub fn rhs_sup_containing(
    mu: &DiscreteMeasure,
    q: &CubeSpec,
    alpha: f64,
    max_side: Option<usize>,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let table = SummedAreaTable::from_measure(mu);
    let n = mu.ndim();
    let s_max = max_side.unwrap_or(mu.max_extent()).max(q.side);
    let h = mu.cell_width();
    let mut sup = 0.0f64;
    let mut anchor = vec![0i64; n];
    for side in q.side..=s_max {
        let span = (side - q.side) as i64;
        // anchors b with b <= a and b + side >= a + q.side per axis
        let mut offsets = vec![0i64; n];
        loop {
            for k in 0..n {
                anchor[k] = q.anchor[k] - offsets[k];
            }
            let big = CubeSpec { anchor: anchor.clone(), side };
            let density = table.cube_sum(&big) / big.volume(h);
            if density > sup {
                sup = density;
            }
            // advance offsets in [0, span]
            let mut k = n;
            let mut carried = true;
            while carried {
                if k == 0 {
                    break;
                }
                k -= 1;
                offsets[k] += 1;
                if offsets[k] <= span {
                    carried = false;
                    for j in k + 1..n {
                        offsets[j] = 0;
                    }
                }
            }
            if carried {
                break;
            }
        }
    }
    Ok(q.diameter(h).powf(alpha) * sup)
}

/// How a cube family is generated.
#[derive(Debug, Clone)]
pub enum FamilyKind {
    /// Every (anchor, side) with side <= max_side inside the margin region.
    All { max_side: usize },
    /// Dyadic cubes: side 2^k, anchors at multiples of the side.
    Dyadic { max_side: usize },
    /// Seeded random cubes with sides in [1, max_side].
    Random { seed: u64, count: usize, max_side: usize },
    Fixed(Vec<CubeSpec>),
}

/// A realized cube family; every member lies inside the grid shrunk by the
/// boundary margin, so oscillations use true cell means.
#[derive(Debug, Clone)]
pub struct CubeFamily {
    cubes: Vec<CubeSpec>,
    margin: usize,
}

impl CubeFamily {
    pub fn generate(shape: &[usize], kind: &FamilyKind, margin: usize) -> Result<Self> {
        let n = shape.len();
        let region_ok = shape.iter().all(|&e| e > 2 * margin);
        if !region_ok {
            return Err(Error::EmptyFamily);
        }
        let lo = margin as i64;
        let hi: Vec<i64> = shape.iter().map(|&e| (e - margin) as i64).collect();
        let fits = |anchor: &[i64], side: usize| -> bool {
            anchor
                .iter()
                .zip(&hi)
                .all(|(&a, &h)| a >= lo && a + side as i64 <= h)
        };
        let mut cubes = Vec::new();
        match kind {
            FamilyKind::All { max_side } => {
                for side in 1..=*max_side {
                    let mut anchor = vec![lo; n];
                    'outer: loop {
                        if fits(&anchor, side) {
                            cubes.push(CubeSpec { anchor: anchor.clone(), side });
                        }
                        for k in (0..n).rev() {
                            anchor[k] += 1;
                            if anchor[k] + side as i64 <= hi[k] {
                                continue 'outer;
                            }
                            anchor[k] = lo;
                        }
                        break;
                    }
                }
            }
            FamilyKind::Dyadic { max_side } => {
                let mut side = 1usize;
                while side <= *max_side {
                    let mut k_idx = vec![0i64; n];
                    'dy: loop {
                        let anchor: Vec<i64> = k_idx.iter().map(|&i| i * side as i64).collect();
                        if fits(&anchor, side) {
                            cubes.push(CubeSpec { anchor, side });
                        }
                        for k in (0..n).rev() {
                            k_idx[k] += 1;
                            if (k_idx[k] * side as i64) + side as i64 <= hi[k] {
                                continue 'dy;
                            }
                            k_idx[k] = 0;
                        }
                        break;
                    }
                    side *= 2;
                }
            }
            FamilyKind::Random { seed, count, max_side } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut emitted = 0usize;
                let mut attempts = 0usize;
                while emitted < *count && attempts < count * 100 {
                    attempts += 1;
                    let side = rng.gen_range(1..=*max_side);
                    let mut anchor = Vec::with_capacity(n);
                    let mut ok = true;
                    for k in 0..n {
                        let top = hi[k] - side as i64;
                        if top < lo {
                            ok = false;
                            break;
                        }
                        anchor.push(rng.gen_range(lo..=top));
                    }
                    if ok {
                        cubes.push(CubeSpec { anchor, side });
                        emitted += 1;
                    }
                }
            }
            FamilyKind::Fixed(list) => {
                for q in list {
                    if fits(&q.anchor, q.side) {
                        cubes.push(q.clone());
                    }
                }
            }
        }
        if cubes.is_empty() {
            return Err(Error::EmptyFamily);
        }
        Ok(CubeFamily { cubes, margin })
    }

    /// Default family: all dyadic cubes with side up to a quarter of the
    /// smallest extent, plus 500 seeded random cubes of the same scale cap,
    /// margin equal to that largest family side.
    pub fn default_for(shape: &[usize], seed: u64) -> Result<Self> {
        let min_extent = shape.iter().copied().min().unwrap_or(1);
        let cap = (min_extent / 4).max(1);
        let margin = if shape.iter().all(|&e| e > 2 * cap) { cap } else { 0 };
        let mut fam = Self::generate(shape, &FamilyKind::Dyadic { max_side: cap }, margin)?;
        let rnd = Self::generate(
            shape,
            &FamilyKind::Random { seed, count: 500, max_side: cap },
            margin,
        )?;
        fam.cubes.extend(rnd.cubes);
        Ok(fam)
    }

    pub fn from_cubes(shape: &[usize], cubes: Vec<CubeSpec>) -> Result<Self> {
        if cubes.is_empty() || cubes.iter().any(|q| !q.inside(shape)) {
            return Err(Error::EmptyFamily);
        }
        Ok(CubeFamily { cubes, margin: 0 })
    }

    pub fn cubes(&self) -> &[CubeSpec] {
        &self.cubes
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn margin(&self) -> usize {
        self.margin
    }
}

/// Right-hand side selector for `best_constant`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhsKind {
    /// a(Q) = diam^alpha mu(Q)/|Q|.
    AFunctional,
    /// diam^alpha inf_{z in Q} M mu(z).
    MaximalInf,
    /// diam^alpha sup over containing cubes of mu/|Q'|.
    SupContaining,
}

/// Result of a best-constant scan over a family.
#[derive(Debug, Clone)]
pub struct ConstantScan {
    pub rows: Vec<ReportRow>,
    pub summary: ReportSummary,
}

impl ConstantScan {
    pub fn max_finite_ratio(&self) -> f64 {
        self.summary.max_finite_ratio
    }

    pub fn infinite_flags(&self) -> usize {
        self.summary.infinite_flags
    }
}

/// Empirical supremum of mean_oscillation_q(u, Q, q) / rhs(Q) over the
/// family. 0/0 rows report 0; positive/0 rows carry the +inf flag and are
/// excluded from the max but counted.
pub fn best_constant(
    u: &GridFunction,
    mu: &DiscreteMeasure,
    cfg: &PoincareConfig,
    fam: &CubeFamily,
    rhs: RhsKind,
) -> Result<ConstantScan> {
    cfg.validate()?;
    if !mu.same_geometry_as_fn(u) {
        return Err(Error::GeometryMismatch);
    }
    if fam.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let mass_table = SummedAreaTable::from_measure(mu);
    let m_mu = if rhs == RhsKind::MaximalInf {
        Some(maximal_measure(mu, &MaximalConfig::noncentred())?)
    } else {
        None
    };
    let mut rows = Vec::with_capacity(fam.len());
    for q in fam.cubes() {
        let lhs = mean_oscillation_q(u, q, cfg.q)?;
        let rhs_val = match rhs {
            RhsKind::AFunctional => {
                poincare_functional_from_table(&mass_table, mu.cell_width(), q, cfg.alpha)?
            }
            RhsKind::MaximalInf => {
                rhs_maximal_inf(m_mu.as_ref().expect("precomputed"), q, cfg.alpha)?
            }
            RhsKind::SupContaining => rhs_sup_containing(mu, q, cfg.alpha, None)?,
        };
        rows.push(ReportRow::evaluate(q, lhs, rhs_val));
    }
    let summary = ReportSummary::from_rows(&rows);
    Ok(ConstantScan { rows, summary })
}
