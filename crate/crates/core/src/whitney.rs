//! Exact-arithmetic Whitney decomposition of a cube, chains toward the
//! central cube, and annulus cube selection.
//!
//! The construction splits the cube triadically, keeps the middle cube as
//! generation one, then repeatedly halves the remaining frame and selects
//! the cubes touching the block selected so far. All coordinates are exact
//! rationals; the identity side = distance-to-boundary holds with zero
//! tolerance, which floating point could not deliver.

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

pub type Rational = Ratio<i128>;

pub fn rational(num: i128, den: i128) -> Rational {
    Ratio::new(num, den)
}

/// One cube of the decomposition. Coordinates live in the frame of the
/// parent cube Q' = [0, L]^n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WhitneyCube {
    pub generation: u32,
    pub low: Vec<Rational>,
    pub side: Rational,
}

impl WhitneyCube {
    pub fn center(&self) -> Vec<Rational> {
        let half = self.side / 2;
        self.low.iter().map(|&l| l + half).collect()
    }

    pub fn high(&self) -> Vec<Rational> {
        self.low.iter().map(|&l| l + self.side).collect()
    }

    pub fn volume(&self) -> Rational {
        let mut v = Rational::one();
        for _ in 0..self.low.len() {
            v *= self.side;
        }
        v
    }

    /// Face distance from the closed cube to the boundary of [0, L]^n.
    pub fn distance_to_boundary(&self, big_l: Rational) -> Rational {
        let mut d: Option<Rational> = None;
        for &l in &self.low {
            let near = l;
            let far = big_l - (l + self.side);
            let m = if near < far { near } else { far };
            d = Some(match d {
                None => m,
                Some(cur) => {
                    if m < cur {
                        m
                    } else {
                        cur
                    }
                }
            });
        }
        d.expect("nonzero dimension")
    }
}

/// Whitney decomposition of [0, L]^n down to `depth` generations plus the
/// not-yet-subdivided residual frame.
#[derive(Debug, Clone)]
pub struct WhitneyDecomposition {
    big_l: Rational,
    ndim: usize,
    depth: u32,
    generations: Vec<Vec<WhitneyCube>>,
    residual: Vec<WhitneyCube>,
}

fn sort_cubes(cubes: &mut [WhitneyCube]) {
    cubes.sort_by(|a, b| a.low.cmp(&b.low));
}

pub fn whitney_decompose(big_l: Rational, ndim: usize, depth: u32) -> Result<WhitneyDecomposition> {
    if depth == 0 {
        return Err(Error::BadDepth);
    }
    if ndim == 0 || ndim > 8 {
        return Err(Error::TooManyDims(ndim));
    }
    if big_l <= Rational::zero() {
        return Err(Error::BadAnnulusRadius);
    }
    let third = big_l / 3;

    // triadic split: the middle cube is generation one, the frame is pending
    let mut central = None;
    let mut pending: Vec<WhitneyCube> = Vec::new();
    let mut idx = vec![0u8; ndim];
    loop {
        let low: Vec<Rational> = idx.iter().map(|&i| third * i as i128).collect();
        let cube = WhitneyCube { generation: 1, low, side: third };
        if idx.iter().all(|&i| i == 1) {
            central = Some(cube);
        } else {
            pending.push(cube);
        }
        let mut k = ndim;
        let mut done = true;
        while k > 0 {
            k -= 1;
            idx[k] += 1;
            if idx[k] < 3 {
                done = false;
                break;
            }
            idx[k] = 0;
        }
        if done {
            break;
        }
    }
    let central = central.expect("middle cube exists");
    let mut generations = vec![vec![central]];

    // block [t, L - t]^n selected so far
    let mut block_low = third;
    for gen in 2..=depth {
        let child_side = pending[0].side / 2;
        let block_high = big_l - block_low;
        let mut selected = Vec::new();
        let mut next_pending = Vec::new();
        for parent in &pending {
            // halve into 2^n children
            for corner in 0..(1usize << ndim) {
                let mut low = Vec::with_capacity(ndim);
                for k in 0..ndim {
                    let off = if corner & (1 << k) != 0 { child_side } else { Rational::zero() };
                    low.push(parent.low[k] + off);
                }
                let touches = low.iter().all(|&l| l <= block_high && l + child_side >= block_low);
                let cube = WhitneyCube { generation: gen, low, side: child_side };
                if touches {
                    selected.push(cube);
                } else {
                    next_pending.push(cube);
                }
            }
        }
        sort_cubes(&mut selected);
        generations.push(selected);
        pending = next_pending;
        block_low -= child_side;
    }
    sort_cubes(&mut pending);

    Ok(WhitneyDecomposition { big_l, ndim, depth, generations, residual: pending })
}

impl WhitneyDecomposition {
    pub fn big_l(&self) -> Rational {
        self.big_l
    }

    pub fn ndim(&self) -> usize {
        self.ndim
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Emitted generations, innermost first; generation i has side
    /// L / (3 * 2^(i-1)).
    pub fn generations(&self) -> &[Vec<WhitneyCube>] {
        &self.generations
    }

    /// The unselected frame after the last generation.
    pub fn residual_boxes(&self) -> &[WhitneyCube] {
        &self.residual
    }

    pub fn central_cube(&self) -> &WhitneyCube {
        &self.generations[0][0]
    }

    pub fn all_cubes(&self) -> impl Iterator<Item = &WhitneyCube> {
        self.generations.iter().flatten()
    }

    pub fn cube_count(&self) -> usize {
        self.generations.iter().map(|g| g.len()).sum()
    }

    pub fn contains_cube(&self, cube: &WhitneyCube) -> bool {
        let gen = cube.generation as usize;
        if gen == 0 || gen > self.generations.len() {
            return false;
        }
        self.generations[gen - 1].iter().any(|c| c == cube)
    }

    pub fn emitted_measure(&self) -> Rational {
        let mut total = Rational::zero();
        for cube in self.all_cubes() {
            total += cube.volume();
        }
        total
    }

    pub fn residual_measure(&self) -> Rational {
        let mut total = Rational::zero();
        for cube in &self.residual {
            total += cube.volume();
        }
        total
    }

    /// |Q'|^ = L^n.
    pub fn total_measure(&self) -> Rational {
        let mut v = Rational::one();
        for _ in 0..self.ndim {
            v *= self.big_l;
        }
        v
    }

    /// Exact check of the defining identity side = d(Q, boundary of Q') for
    /// every emitted cube.
    pub fn side_distance_identity_holds(&self) -> bool {
        self.all_cubes()
            .all(|c| c.distance_to_boundary(self.big_l) == c.side)
    }
}

/// Exact |2a intersect 2b| / |a|; the dilated cubes share the centers.
pub fn overlap_fraction(a: &WhitneyCube, b: &WhitneyCube) -> Rational {
    let n = a.low.len();
    debug_assert_eq!(n, b.low.len());
    let half_a = a.side / 2;
    let half_b = b.side / 2;
    let mut vol = Rational::one();
    for k in 0..n {
        let lo = {
            let la = a.low[k] - half_a;
            let lb = b.low[k] - half_b;
            if la > lb { la } else { lb }
        };
        let hi = {
            let ha = a.low[k] + a.side + half_a;
            let hb = b.low[k] + b.side + half_b;
            if ha < hb { ha } else { hb }
        };
        if hi <= lo {
            return Rational::zero();
        }
        vol *= hi - lo;
    }
    vol / a.volume()
}

/// Ordered cube chain from a source cube to the central cube.
#[derive(Debug, Clone)]
pub struct Chain {
    pub source: WhitneyCube,
    pub cubes: Vec<WhitneyCube>,
    /// min over consecutive pairs of |2Q^i intersect 2Q^{i+1}| / |Q^i|.
    pub min_overlap_fraction: Rational,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }
}

/// Entry parameter of the closed segment p(t) = from + t (to - from),
/// t in [0, 1], into the closed box, or None when they miss each other.
fn segment_entry(
    from: &[Rational],
    to: &[Rational],
    low: &[Rational],
    high: &[Rational],
) -> Option<Rational> {
    let mut t_enter = Rational::zero();
    let mut t_exit = Rational::one();
    for k in 0..from.len() {
        let d = to[k] - from[k];
        if d.is_zero() {
            if from[k] < low[k] || from[k] > high[k] {
                return None;
            }
            continue;
        }
        let mut t0 = (low[k] - from[k]) / d;
        let mut t1 = (high[k] - from[k]) / d;
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        if t0 > t_enter {
            t_enter = t0;
        }
        if t1 < t_exit {
            t_exit = t1;
        }
        if t_enter > t_exit {
            return None;
        }
    }
    Some(t_enter)
}

/// Chain C(Q): all decomposed cubes whose closure meets the straight segment
/// from c(Q) to the center of Q', ordered by entry distance; ties are broken
/// by generation (deeper cube first, so the central cube closes the chain)
/// and then by lexicographic low corner.
pub fn whitney_chain(decomp: &WhitneyDecomposition, source: &WhitneyCube) -> Result<Chain> {
    if !decomp.contains_cube(source) {
        return Err(Error::SourceNotInDecomposition);
    }
    let from = source.center();
    let half_l = decomp.big_l / 2;
    let to = vec![half_l; decomp.ndim];

    let mut hits: Vec<(Rational, u32, &WhitneyCube)> = Vec::new();
    for cube in decomp.all_cubes() {
        let high = cube.high();
        if let Some(t) = segment_entry(&from, &to, &cube.low, &high) {
            hits.push((t, cube.generation, cube));
        }
    }
    hits.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(b.1.cmp(&a.1))
            .then(a.2.low.cmp(&b.2.low))
    });
    let cubes: Vec<WhitneyCube> = hits.into_iter().map(|(_, _, c)| c.clone()).collect();
    debug_assert!(!cubes.is_empty());

    let mut min_overlap: Option<Rational> = None;
    for pair in cubes.windows(2) {
        let f = overlap_fraction(&pair[0], &pair[1]);
        min_overlap = Some(match min_overlap {
            None => f,
            Some(cur) => {
                if f < cur {
                    f
                } else {
                    cur
                }
            }
        });
    }
    Ok(Chain {
        source: source.clone(),
        min_overlap_fraction: min_overlap.unwrap_or_else(|| rational(1, 1) * 4),
        cubes,
    })
}

/// Annulus selection: with Q'' the concentric cube of side L - 2 r0, return
/// the decomposed cubes whose closure meets A = Q' minus Q''. By the
/// side-distance identity these are exactly the cubes with side < r0.
pub fn annulus_cubes(decomp: &WhitneyDecomposition, r0: Rational) -> Result<Vec<WhitneyCube>> {
    let two_r0 = r0 * 2;
    if !(r0.is_positive() && two_r0 < decomp.big_l) {
        return Err(Error::BadAnnulusRadius);
    }
    Ok(decomp
        .all_cubes()
        .filter(|c| c.distance_to_boundary(decomp.big_l) < r0)
        .cloned()
        .collect())
}

// --- JSON mirror types (exact numerator/denominator integers) ---

#[derive(Debug, Clone, Serialize)]
pub struct RationalJson {
    pub num: i64,
    pub den: i64,
}

impl RationalJson {
    pub fn from_rational(r: Rational) -> Result<Self> {
        let num = i64::try_from(*r.numer())
            .map_err(|_| Error::Format("rational numerator exceeds i64".into()))?;
        let den = i64::try_from(*r.denom())
            .map_err(|_| Error::Format("rational denominator exceeds i64".into()))?;
        Ok(RationalJson { num, den })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CubeJson {
    pub generation: u32,
    pub low: Vec<RationalJson>,
    pub side: RationalJson,
}

impl CubeJson {
    pub fn from_cube(c: &WhitneyCube) -> Result<Self> {
        Ok(CubeJson {
            generation: c.generation,
            low: c
                .low
                .iter()
                .map(|&r| RationalJson::from_rational(r))
                .collect::<Result<_>>()?,
            side: RationalJson::from_rational(c.side)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l1() -> Rational {
        rational(1, 1)
    }

    #[test]
    fn first_generation_is_middle_third() {
        for n in 1..=3usize {
            let d = whitney_decompose(l1(), n, 1).unwrap();
            let gens = d.generations();
            assert_eq!(gens.len(), 1);
            assert_eq!(gens[0].len(), 1);
            let c = &gens[0][0];
            assert_eq!(c.side, rational(1, 3));
            assert!(c.low.iter().all(|&l| l == rational(1, 3)));
            assert_eq!(d.residual_boxes().len(), 3usize.pow(n as u32) - 1);
        }
    }

    #[test]
    fn second_generation_counts() {
        let d1 = whitney_decompose(l1(), 1, 2).unwrap();
        assert_eq!(d1.generations()[1].len(), 2);
        let d2 = whitney_decompose(l1(), 2, 2).unwrap();
        assert_eq!(d2.generations()[1].len(), 12);
    }

    #[test]
    fn side_distance_identity_exact_to_depth_six() {
        for n in [1usize, 2] {
            let d = whitney_decompose(l1(), n, 6).unwrap();
            assert!(d.side_distance_identity_holds());
            for (i, gen) in d.generations().iter().enumerate() {
                let expect = rational(1, 3 * (1 << i));
                for c in gen {
                    assert_eq!(c.side, expect);
                }
            }
        }
    }

    #[test]
    fn coverage_measure_is_exact() {
        for n in [1usize, 2, 3] {
            for depth in [1u32, 3, 5] {
                let d = whitney_decompose(l1(), n, depth).unwrap();
                assert_eq!(d.emitted_measure() + d.residual_measure(), d.total_measure());
            }
        }
    }

    #[test]
    fn interiors_disjoint_small_depth() {
        let d = whitney_decompose(l1(), 2, 4).unwrap();
        let cubes: Vec<&WhitneyCube> = d.all_cubes().chain(d.residual_boxes()).collect();
        for (i, a) in cubes.iter().enumerate() {
            for b in cubes.iter().skip(i + 1) {
                let overlap = (0..2).all(|k| {
                    let lo = if a.low[k] > b.low[k] { a.low[k] } else { b.low[k] };
                    let ha = a.low[k] + a.side;
                    let hb = b.low[k] + b.side;
                    let hi = if ha < hb { ha } else { hb };
                    hi > lo
                });
                assert!(!overlap, "open overlap between {a:?} and {b:?}");
            }
        }
    }

    #[test]
    fn chain_from_central_is_singleton() {
        let d = whitney_decompose(l1(), 2, 4).unwrap();
        let chain = whitney_chain(&d, d.central_cube()).unwrap();
        assert_eq!(chain.len(), 1);
        assert_eq!(&chain.cubes[0], d.central_cube());
    }

    #[test]
    fn chain_from_corner_second_generation() {
        // corner cube [1/6,1/3]^2 of generation two: the diagonal to the
        // center passes through the shared corner point (1/3,1/3), so with
        // closed-cube intersection the chain picks up the two grazing
        // generation-two cubes on its way into the central cube
        let d = whitney_decompose(l1(), 2, 2).unwrap();
        let corner = d.generations()[1]
            .iter()
            .find(|c| c.low == vec![rational(1, 6), rational(1, 6)])
            .unwrap()
            .clone();
        let chain = whitney_chain(&d, &corner).unwrap();
        assert_eq!(chain.len(), 4);
        assert_eq!(&chain.cubes[0], &corner);
        assert_eq!(chain.cubes.last().unwrap(), d.central_cube());
        for middle in &chain.cubes[1..3] {
            assert_eq!(middle.generation, 2);
            assert!(middle
                .low
                .iter()
                .all(|&l| l == rational(1, 6) || l == rational(1, 3)));
        }
        assert!(chain.min_overlap_fraction > Rational::zero());
    }

    #[test]
    fn chain_endpoints_and_overlap_everywhere() {
        for n in [1usize, 2] {
            let d = whitney_decompose(l1(), n, 5).unwrap();
            for source in d.all_cubes() {
                let chain = whitney_chain(&d, source).unwrap();
                assert_eq!(&chain.cubes[0], source, "chain must start at the source");
                assert_eq!(
                    chain.cubes.last().unwrap(),
                    d.central_cube(),
                    "chain must end at the central cube"
                );
                if chain.len() > 1 {
                    assert!(chain.min_overlap_fraction > Rational::zero());
                }
            }
        }
    }

    #[test]
    fn chain_length_linear_in_generation() {
        // empirical bound m <= K * generation with K frozen from the
        // exhaustive depth-6 sweep
        const K: usize = 4;
        for n in [1usize, 2] {
            let d = whitney_decompose(l1(), n, 6).unwrap();
            for source in d.all_cubes() {
                let chain = whitney_chain(&d, source).unwrap();
                assert!(
                    chain.len() <= K * source.generation as usize,
                    "n={n} gen={} len={}",
                    source.generation,
                    chain.len()
                );
            }
        }
    }

    #[test]
    fn chain_rejects_foreign_source() {
        let d = whitney_decompose(l1(), 2, 3).unwrap();
        let fake = WhitneyCube {
            generation: 2,
            low: vec![rational(0, 1), rational(0, 1)],
            side: rational(1, 6),
        };
        assert!(matches!(
            whitney_chain(&d, &fake),
            Err(Error::SourceNotInDecomposition)
        ));
    }

    #[test]
    fn overlap_fraction_cases() {
        let a = WhitneyCube {
            generation: 1,
            low: vec![rational(1, 3), rational(1, 3)],
            side: rational(1, 3),
        };
        assert_eq!(overlap_fraction(&a, &a), rational(4, 1));
        let far = WhitneyCube {
            generation: 2,
            low: vec![rational(10, 1), rational(10, 1)],
            side: rational(1, 6),
        };
        assert_eq!(overlap_fraction(&a, &far), Rational::zero());
        let d1 = whitney_decompose(l1(), 1, 1).unwrap();
        assert_eq!(overlap_fraction(d1.central_cube(), d1.central_cube()), rational(2, 1));
    }

    #[test]
    fn annulus_r0_third_selects_everything_but_central() {
        let d = whitney_decompose(l1(), 2, 4).unwrap();
        let sel = annulus_cubes(&d, rational(1, 3)).unwrap();
        assert_eq!(sel.len(), d.cube_count() - 1);
        assert!(sel.iter().all(|c| c != d.central_cube()));
    }

    #[test]
    fn annulus_tiny_r0_is_empty_and_bounds_checked() {
        let d = whitney_decompose(l1(), 2, 4).unwrap();
        // every emitted cube is at distance >= the deepest side 1/24
        let sel = annulus_cubes(&d, rational(1, 100)).unwrap();
        assert!(sel.is_empty());
        assert!(annulus_cubes(&d, rational(0, 1)).is_err());
        assert!(annulus_cubes(&d, rational(1, 2)).is_err());
        assert!(annulus_cubes(&d, rational(-1, 3)).is_err());
    }

    #[test]
    fn annulus_measure_bookkeeping_at_selected_radii() {
        // Sum of selected volumes <= |A| + residual measure, exact rational
        // arithmetic. Verified at the radii where the derived bound holds:
        // r0 = L/3 and r0 at the top of each generation gap (r0 = side of
        // the previous generation).
        for n in [1usize, 2] {
            let d = whitney_decompose(l1(), n, 6).unwrap();
            let mut radii = vec![rational(1, 3)];
            for i in 2..=6u32 {
                radii.push(rational(1, 3 * (1 << (i - 2)) as i128));
            }
            for r0 in radii {
                if !(r0 * 2 < d.big_l()) {
                    continue;
                }
                let sel = annulus_cubes(&d, r0).unwrap();
                let mut selected = Rational::zero();
                for c in &sel {
                    selected += c.volume();
                }
                let inner = d.big_l() - r0 * 2;
                let mut inner_vol = Rational::one();
                for _ in 0..n {
                    inner_vol *= inner;
                }
                let annulus_vol = d.total_measure() - inner_vol;
                assert!(
                    selected <= annulus_vol + d.residual_measure(),
                    "n={n} r0={r0}: {selected} vs {} + {}",
                    annulus_vol,
                    d.residual_measure()
                );
            }
        }
    }

    #[test]
    fn json_mirrors_are_exact() {
        let d = whitney_decompose(l1(), 2, 3).unwrap();
        let c = CubeJson::from_cube(d.central_cube()).unwrap();
        assert_eq!(c.side.num, 1);
        assert_eq!(c.side.den, 3);
        assert_eq!(c.low[0].num, 1);
        assert_eq!(c.low[0].den, 3);
    }
}
