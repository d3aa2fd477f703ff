//! Test-function generators: smooth bump, cone, cusp, truncated log-cusp,
//! step, disc indicator, and seeded uniform noise. Functions are sampled at
//! cell centers; the default center is the middle of the physical domain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{DiscreteMeasure, GridFunction};

/// Generator selection with its parameters, deserializable from scenario
/// configs. Optional fields fall back to the documented defaults.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Generator {
    /// exp(1 - 1/(1 - |x-x0|^2/r^2)) inside |x-x0| < r, zero outside.
    Bump {
        radius: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// max(0, 1 - |x-x0|/radius); default radius 1 in physical units.
    Cone {
        radius: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// |x-x0|^gamma.
    Cusp {
        gamma: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// min(log(1/|x-x0|), cap); default cap 4.
    LogCusp {
        cap: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// Indicator of x_axis > midpoint; default axis 0.
    Step { axis: Option<usize> },
    /// Indicator of |x-x0| < radius, with an optional linear edge ramp of
    /// the given physical width (a mollified disc).
    Disc {
        radius: Option<f64>,
        edge: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// Seeded uniform noise in [0, 1).
    Random,
}

impl Generator {
    pub fn name(&self) -> &'static str {
        match self {
            Generator::Bump { .. } => "bump",
            Generator::Cone { .. } => "cone",
            Generator::Cusp { .. } => "cusp",
            Generator::LogCusp { .. } => "log-cusp",
            Generator::Step { .. } => "step",
            Generator::Disc { .. } => "disc",
            Generator::Random => "random",
        }
    }

    fn center_override(&self) -> Option<&Vec<f64>> {
        match self {
            Generator::Bump { center, .. }
            | Generator::Cone { center, .. }
            | Generator::Cusp { center, .. }
            | Generator::LogCusp { center, .. }
            | Generator::Disc { center, .. } => center.as_ref(),
            _ => None,
        }
    }

    /// Sample on the grid [0, extent*h]^n at cell centers.
    pub fn sample(&self, shape: &[usize], cell_width: f64, seed: u64) -> Result<GridFunction> {
        let center: Vec<f64> = match self.center_override() {
            Some(c) => c.clone(),
            None => shape
                .iter()
                .map(|&e| e as f64 * cell_width / 2.0)
                .collect(),
        };
        let min_extent = shape.iter().copied().min().unwrap_or(1);
        let domain = min_extent as f64 * cell_width;
        let dist = |x: &[f64]| -> f64 {
            x.iter()
                .zip(&center)
                .map(|(&a, &c)| (a - c) * (a - c))
                .sum::<f64>()
                .sqrt()
        };
        match self {
            Generator::Bump { radius, .. } => {
                let r = radius.unwrap_or(0.35 * domain);
                GridFunction::from_fn(shape.to_vec(), cell_width, |x| {
                    let rho2 = (dist(x) / r).powi(2);
                    if rho2 < 1.0 {
                        (1.0 - 1.0 / (1.0 - rho2)).exp()
                    } else {
                        0.0
                    }
                })
            }
            Generator::Cone { radius, .. } => {
                let r = radius.unwrap_or(1.0);
                GridFunction::from_fn(shape.to_vec(), cell_width, |x| {
                    (1.0 - dist(x) / r).max(0.0)
                })
            }
            Generator::Cusp { gamma, .. } => {
                let g = *gamma;
                GridFunction::from_fn(shape.to_vec(), cell_width, |x| dist(x).powf(g))
            }
            Generator::LogCusp { cap, .. } => {
                let t = cap.unwrap_or(4.0);
                GridFunction::from_fn(shape.to_vec(), cell_width, |x| {
                    let d = dist(x);
                    if d == 0.0 {
                        t
                    } else {
                        (1.0 / d).ln().min(t)
                    }
                })
            }
            Generator::Step { axis } => {
                let k = axis.unwrap_or(0);
                let mid = center[k.min(center.len() - 1)];
                GridFunction::from_fn(shape.to_vec(), cell_width, |x| {
                    if x[k] > mid {
                        1.0
                    } else {
                        0.0
                    }
                })
            }
            Generator::Disc { radius, edge, .. } => {
                let r = radius.unwrap_or(0.25 * domain);
                let e = edge.unwrap_or(0.0);
                GridFunction::from_fn(shape.to_vec(), cell_width, |x| {
                    let d = dist(x);
                    if d < r - e {
                        1.0
                    } else if d < r {
                        (r - d) / e
                    } else {
                        0.0
                    }
                })
            }
            Generator::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let cells: usize = shape.iter().product();
                let values: Vec<f64> = (0..cells).map(|_| rng.gen_range(0.0..1.0)).collect();
                GridFunction::new(shape.to_vec(), cell_width, values)
            }
        }
    }
}

/// Uniform random grid for test suites, values in [lo, hi).
pub fn seeded_random_grid(
    shape: &[usize],
    cell_width: f64,
    seed: u64,
    lo: f64,
    hi: f64,
) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells: usize = shape.iter().product();
    let values: Vec<f64> = (0..cells).map(|_| rng.gen_range(lo..hi)).collect();
    GridFunction::new(shape.to_vec(), cell_width, values).expect("valid random grid")
}

/// Random measure with masses in [0, hi).
pub fn seeded_random_measure(
    shape: &[usize],
    cell_width: f64,
    seed: u64,
    hi: f64,
) -> DiscreteMeasure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells: usize = shape.iter().product();
    let masses: Vec<f64> = (0..cells).map(|_| rng.gen_range(0.0..hi)).collect();
    DiscreteMeasure::new(shape.to_vec(), cell_width, masses).expect("valid random measure")
}
