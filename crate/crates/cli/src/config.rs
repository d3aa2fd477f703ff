//! Scenario configuration: JSON file layered under command-line flag
//! overrides, resolved into a fully explicit scenario before any compute.

use serde::{Deserialize, Serialize};

use oscillib::error::{Error, Result};
use oscillib::generators::Generator;
use oscillib::grid::DomainMask;
use oscillib::maximal::{MaximalConfig, MaximalVariant};
use oscillib::poincare::{CubeFamily, FamilyKind};
use oscillib::verify::corridor_mask;

/// Which verification harness to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Theorem,
    Fpw,
    Gradient,
    Bmo,
    Holder,
    Fractional,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Theorem => "theorem",
            CheckKind::Fpw => "fpw",
            CheckKind::Gradient => "gradient",
            CheckKind::Bmo => "bmo",
            CheckKind::Holder => "holder",
            CheckKind::Fractional => "fractional",
        }
    }
}

/// Measure source for theorem-style checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeasureSpec {
    /// |grad_h u| h^n per cell.
    Gradient,
    /// Plain Lebesgue encoding.
    Lebesgue,
    /// Lebesgue scaled by the pre-flight constant of (u, Lebesgue).
    LebesgueScaled,
    /// Unit point mass.
    Dirac { cell: Vec<usize> },
    /// Load from an MPGM file.
    File { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FamilySpec {
    /// Dyadic cubes capped at a quarter of the smallest extent plus 500
    /// seeded random cubes, margin equal to the cap.
    Default,
    Dyadic { max_side: usize, margin: usize },
    All { max_side: usize, margin: usize },
    Random { count: usize, max_side: usize, margin: usize },
}

impl FamilySpec {
    pub fn build(&self, shape: &[usize], seed: u64) -> Result<CubeFamily> {
        match self {
            FamilySpec::Default => CubeFamily::default_for(shape, seed),
            FamilySpec::Dyadic { max_side, margin } => {
                CubeFamily::generate(shape, &FamilyKind::Dyadic { max_side: *max_side }, *margin)
            }
            FamilySpec::All { max_side, margin } => {
                CubeFamily::generate(shape, &FamilyKind::All { max_side: *max_side }, *margin)
            }
            FamilySpec::Random { count, max_side, margin } => CubeFamily::generate(
                shape,
                &FamilyKind::Random { seed, count: *count, max_side: *max_side },
                *margin,
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MaskSpec {
    /// A square of the given side joined to a one-cell-wide corridor.
    Corridor { square: usize, corridor: usize },
    /// MPGF file of 0/1 cell values.
    File { path: String },
}

/// Raw configuration: everything optional, JSON file first, flags win.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub command: Option<String>,
    pub check: Option<CheckKind>,
    pub generator: Option<Generator>,
    pub ndim: Option<usize>,
    pub extent: Option<usize>,
    pub cell_width: Option<f64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub variant: Option<String>,
    pub beta: Option<f64>,
    pub max_side: Option<usize>,
    pub alpha: Option<f64>,
    pub q: Option<f64>,
    pub measure: Option<MeasureSpec>,
    pub family: Option<FamilySpec>,
    pub mask: Option<MaskSpec>,
    pub resolutions: Option<Vec<usize>>,
    pub with_gradient_measure: Option<bool>,
    pub out_dir: Option<String>,
    pub output: Option<String>,
    pub input: Option<String>,
    pub measure_input: Option<String>,
    pub scenario_id: Option<String>,
}

impl ScenarioConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("config parse: {e}")))
    }

    /// Layer `over` on top of `self`: set fields in `over` win.
    pub fn merged_with(mut self, over: &ScenarioConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => {
                $(if over.$f.is_some() { self.$f = over.$f.clone(); })*
            };
        }
        take!(
            command, check, generator, ndim, extent, cell_width, seed, threads, variant,
            beta, max_side, alpha, q, measure, family, mask, resolutions,
            with_gradient_measure, out_dir, output, input, measure_input, scenario_id
        );
        self
    }
}

pub fn parse_variant(s: &str) -> Result<MaximalVariant> {
    match s {
        "noncentred" => Ok(MaximalVariant::NonCentred),
        "centred" => Ok(MaximalVariant::Centred),
        "fractional" => Ok(MaximalVariant::Fractional),
        "domain" => Ok(MaximalVariant::DomainCentred),
        other => Err(Error::Format(format!(
            "unknown variant {other:?}; expected noncentred|centred|fractional|domain"
        ))),
    }
}

/// Fully resolved scenario for a verify run. Serialized into reports minus
/// the execution-only knobs (threads, output paths), so reruns with a
/// different thread count still produce byte-identical artifacts.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedScenario {
    pub check: CheckKind,
    pub generator: Generator,
    pub ndim: usize,
    pub extent: usize,
    pub cell_width: f64,
    pub seed: u64,
    pub variant: String,
    pub beta: f64,
    pub max_side: Option<usize>,
    pub alpha: f64,
    pub q: f64,
    pub measure: Option<MeasureSpec>,
    pub family: FamilySpec,
    pub mask: Option<MaskSpec>,
}

impl ResolvedScenario {
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        let check = cfg
            .check
            .ok_or_else(|| Error::Config("config needs a check kind".into()))?;
        let generator = cfg
            .generator
            .clone()
            .ok_or_else(|| Error::Config("config needs a generator".into()))?;
        let ndim = cfg.ndim.unwrap_or(2);
        let extent = cfg
            .extent
            .ok_or_else(|| Error::Config("config needs an extent".into()))?;
        if ndim == 0 || extent == 0 {
            return Err(Error::Config("ndim and extent must be positive".into()));
        }
        let cell_width = cfg.cell_width.unwrap_or(1.0 / extent as f64);
        let variant = cfg.variant.clone().unwrap_or_else(|| "noncentred".into());
        parse_variant(&variant)?;
        let alpha = cfg.alpha.unwrap_or(1.0);
        Ok(ResolvedScenario {
            check,
            generator,
            ndim,
            extent,
            cell_width,
            seed: cfg.seed.unwrap_or(0),
            variant,
            beta: cfg.beta.unwrap_or(0.0),
            max_side: cfg.max_side,
            alpha,
            q: cfg.q.unwrap_or(1.0),
            measure: cfg.measure.clone(),
            family: cfg.family.clone().unwrap_or(FamilySpec::Default),
            mask: cfg.mask.clone(),
        })
    }

    pub fn shape(&self, extent: usize) -> Vec<usize> {
        vec![extent; self.ndim]
    }

    pub fn maximal_config(&self) -> Result<MaximalConfig> {
        let variant = parse_variant(&self.variant)?;
        let mut cfg = MaximalConfig::new(variant);
        cfg.beta = self.beta;
        cfg.max_side = self.max_side;
        Ok(cfg)
    }

    pub fn scenario_name(&self) -> String {
        format!("{}_{}_{}", self.check.name(), self.generator.name(), self.variant)
    }
}

pub fn build_mask(spec: &MaskSpec) -> Result<(Vec<usize>, DomainMask)> {
    match spec {
        MaskSpec::Corridor { square, corridor } => corridor_mask(*square, *corridor),
        MaskSpec::File { path } => {
            let g = oscillib::io::load_function(std::path::Path::new(path))?;
            let cells: Vec<bool> = g.values().iter().map(|&v| v >= 0.5).collect();
            let shape = g.shape().to_vec();
            let mask = DomainMask::new(shape.clone(), cells)?;
            Ok((shape, mask))
        }
    }
}
