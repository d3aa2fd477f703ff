//! Implementations of the gen, maximal, verify and whitney subcommands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use oscillib::error::{Error, Result};
use oscillib::grid::{DiscreteMeasure, GridFunction};
use oscillib::io;
use oscillib::maximal::{
    brute_force_maximal, maximal_centred, maximal_domain_centred, maximal_fractional,
    maximal_measure, maximal_noncentred, MaximalInput, MaximalVariant,
};
use oscillib::poincare::CubeFamily;
use oscillib::report::{RefinementPoint, RefinementSeries, VerificationReport};
use oscillib::verify::{
    gradient_measure, lebesgue_scaled_to_preflight, poincare_config_for, run_bmo_check,
    run_fpw_check, run_fractional_check, run_gradient_check, run_gradient_check_domain,
    run_holder_check, run_theorem_check,
};
use oscillib::whitney::{
    annulus_cubes, rational, whitney_chain, whitney_decompose, CubeJson, Rational, RationalJson,
};

use crate::config::{
    build_mask, CheckKind, MeasureSpec, ResolvedScenario, ScenarioConfig,
};

fn out_dir(cfg: &ScenarioConfig) -> PathBuf {
    PathBuf::from(cfg.out_dir.clone().unwrap_or_else(|| "out".to_string()))
}

fn write_text_atomic(path: &Path, text: &str) -> Result<()> {
    io::write_file_atomic(path, text.as_bytes())
}

/// gen: write the sampled function as MPGF, plus the companion gradient
/// measure as MPGM when requested.
pub fn cmd_gen(cfg: &ScenarioConfig) -> Result<Vec<PathBuf>> {
    let generator = cfg
        .generator
        .clone()
        .ok_or_else(|| Error::Config("gen needs a generator".into()))?;
    let extent = cfg.extent.ok_or_else(|| Error::Config("gen needs an extent".into()))?;
    let ndim = cfg.ndim.unwrap_or(2);
    if ndim == 0 || extent == 0 {
        return Err(Error::Config("ndim and extent must be positive".into()));
    }
    let h = cfg.cell_width.unwrap_or(1.0 / extent as f64);
    let seed = cfg.seed.unwrap_or(0);
    let shape = vec![extent; ndim];
    let u = generator.sample(&shape, h, seed)?;

    let dir = out_dir(cfg);
    let stem = cfg
        .output
        .clone()
        .unwrap_or_else(|| format!("{}_{}", generator.name(), extent));
    let mut written = Vec::new();
    let upath = dir.join(format!("{stem}.mpgf"));
    io::save_function(&upath, &u)?;
    written.push(upath);
    if cfg.with_gradient_measure.unwrap_or(false) {
        let mu = gradient_measure(&u)?;
        let mpath = dir.join(format!("{stem}_grad.mpgm"));
        io::save_measure(&mpath, &mu)?;
        written.push(mpath);
    }
    Ok(written)
}

/// maximal: load a grid file, apply the configured operator, write Mu.
/// With `oracle` set the result is checked for exact equality against the
/// exhaustive enumeration (small grids only); a mismatch is an invariant
/// violation reported through the exit code.
pub fn cmd_maximal(cfg: &ScenarioConfig, oracle: bool) -> Result<(PathBuf, bool)> {
    let input = cfg
        .input
        .clone()
        .ok_or_else(|| Error::Config("maximal needs --input".into()))?;
    let variant = crate::config::parse_variant(
        cfg.variant.as_deref().unwrap_or("noncentred"),
    )?;
    let mut mcfg = oscillib::maximal::MaximalConfig::new(variant);
    mcfg.beta = cfg.beta.unwrap_or(0.0);
    mcfg.max_side = cfg.max_side;

    let started = Instant::now();
    let in_path = PathBuf::from(&input);
    let (result, sides, oracle_ok, shape_str) = if in_path
        .extension()
        .map(|e| e == "mpgm")
        .unwrap_or(false)
    {
        let mu = io::load_measure(&in_path)?;
        let m = maximal_measure(&mu, &mcfg)?;
        let s = mcfg.resolved_max_side(mu.max_extent());
        let ok = if oracle {
            let slow = brute_force_maximal(MaximalInput::Measure(&mu), &mcfg)?;
            m.values() == slow.values()
        } else {
            true
        };
        let shape = format!("{:?}", mu.shape());
        (m, s, ok, shape)
    } else {
        let u = io::load_function(&in_path)?;
        let s = mcfg.resolved_max_side(u.max_extent());
        let m = match variant {
            MaximalVariant::NonCentred => maximal_noncentred(&u, &mcfg)?,
            MaximalVariant::Centred => maximal_centred(&u, &mcfg)?,
            MaximalVariant::Fractional => maximal_fractional(&u, &mcfg)?,
            MaximalVariant::DomainCentred => {
                let spec = cfg
                    .mask
                    .clone()
                    .ok_or_else(|| Error::Config("domain variant needs a mask".into()))?;
                let (mshape, mask) = build_mask(&spec)?;
                if mshape != u.shape() {
                    return Err(Error::GeometryMismatch);
                }
                maximal_domain_centred(&u, &mask, &mcfg)?.grid().clone()
            }
        };
        let ok = if oracle {
            let slow = match (variant, cfg.mask.as_ref()) {
                (MaximalVariant::DomainCentred, Some(spec)) => {
                    let (_, mask) = build_mask(spec)?;
                    brute_force_maximal(MaximalInput::MaskedFunction(&u, &mask), &mcfg)?
                }
                _ => brute_force_maximal(MaximalInput::Function(&u), &mcfg)?,
            };
            m.values() == slow.values()
        } else {
            true
        };
        let shape = format!("{:?}", u.shape());
        (m, s, ok, shape)
    };

    let dir = out_dir(cfg);
    let stem = cfg.output.clone().unwrap_or_else(|| {
        let base = in_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "input".into());
        format!("{base}_M{}", variant.name())
    });
    let opath = dir.join(format!("{stem}.mpgf"));
    io::save_function(&opath, &result)?;
    eprintln!(
        "maximal {} on {shape_str}: {} side lengths, {:.1} ms",
        variant.name(),
        sides,
        started.elapsed().as_secs_f64() * 1e3
    );
    Ok((opath, oracle_ok))
}

fn build_measure(
    spec: &MeasureSpec,
    u: &GridFunction,
    alpha: f64,
    fam: &CubeFamily,
) -> Result<DiscreteMeasure> {
    match spec {
        MeasureSpec::Gradient => gradient_measure(u),
        MeasureSpec::Lebesgue => {
            DiscreteMeasure::lebesgue(u.shape().to_vec(), u.cell_width())
        }
        MeasureSpec::LebesgueScaled => {
            Ok(lebesgue_scaled_to_preflight(u, alpha, fam)?.0)
        }
        MeasureSpec::Dirac { cell } => {
            DiscreteMeasure::dirac(u.shape().to_vec(), u.cell_width(), cell)
        }
        MeasureSpec::File { path } => io::load_measure(Path::new(path)),
    }
}

/// One verify resolution, returning the finished report.
pub fn run_scenario_at(scn: &ResolvedScenario, extent: usize) -> Result<VerificationReport> {
    let shape = scn.shape(extent);
    let h = if scn.extent == extent {
        scn.cell_width
    } else {
        // refinement series keep the physical domain [0,1]^n
        1.0 / extent as f64
    };
    let mcfg = scn.maximal_config()?;

    let mut report = match scn.check {
        CheckKind::Gradient => {
            if let Some(mask_spec) = &scn.mask {
                let (mshape, mask) = build_mask(mask_spec)?;
                let u = scn.generator.sample(&mshape, h, scn.seed)?;
                run_gradient_check_domain(&scn.scenario_name(), &u, &mask, &mcfg)?
            } else {
                let u = scn.generator.sample(&shape, h, scn.seed)?;
                run_gradient_check(&scn.scenario_name(), &u, &mcfg)?
            }
        }
        CheckKind::Bmo => {
            let u = scn.generator.sample(&shape, h, scn.seed)?;
            let fam = scn.family.build(u.shape(), scn.seed)?;
            run_bmo_check(&scn.scenario_name(), &u, &fam, &mcfg)?
        }
        CheckKind::Holder => {
            let u = scn.generator.sample(&shape, h, scn.seed)?;
            let fam = scn.family.build(u.shape(), scn.seed)?;
            run_holder_check(&scn.scenario_name(), &u, &fam, scn.alpha, &mcfg)?
        }
        CheckKind::Fpw => {
            let u = scn.generator.sample(&shape, h, scn.seed)?;
            let fam = scn.family.build(u.shape(), scn.seed)?;
            let spec = scn
                .measure
                .clone()
                .ok_or_else(|| Error::Config("fpw check needs a measure".into()))?;
            let mu = build_measure(&spec, &u, scn.alpha, &fam)?;
            run_fpw_check(&scn.scenario_name(), &u, &mu, scn.alpha, &fam)?
        }
        CheckKind::Theorem | CheckKind::Fractional => {
            let u = scn.generator.sample(&shape, h, scn.seed)?;
            let fam = scn.family.build(u.shape(), scn.seed)?;
            let spec = scn
                .measure
                .clone()
                .ok_or_else(|| Error::Config("theorem check needs a measure".into()))?;
            let mu = build_measure(&spec, &u, scn.alpha, &fam)?;
            let pcfg = poincare_config_for(scn.alpha)?.with_q(scn.q);
            if scn.check == CheckKind::Fractional {
                run_fractional_check(&scn.scenario_name(), &u, &mu, &pcfg, scn.beta, &fam)?
            } else {
                run_theorem_check(&scn.scenario_name(), &u, &mu, &pcfg, &fam, &mcfg)?
            }
        }
    };

    let mut embedded = scn.clone();
    embedded.extent = extent;
    embedded.cell_width = h;
    report.config = serde_json::to_value(&embedded)
        .map_err(|e| Error::Format(format!("config embed: {e}")))?;
    Ok(report)
}

fn series_metric(report: &VerificationReport) -> f64 {
    report
        .summary
        .norm_ratio
        .unwrap_or(report.summary.max_finite_ratio)
}

/// verify: run the configured scenario at one or more resolutions, write
/// CSV + JSON per resolution and a series JSON when refining. Returns the
/// number of invariant-violation flags (impossible flags) encountered.
pub fn cmd_verify(cfg: &ScenarioConfig) -> Result<usize> {
    let scn = ResolvedScenario::from_config(cfg)?;
    let resolutions = cfg.resolutions.clone().unwrap_or_else(|| vec![scn.extent]);
    if resolutions.is_empty() {
        return Err(Error::Config("resolutions must be nonempty".into()));
    }
    let dir = out_dir(cfg);
    let base = cfg.scenario_id.clone().unwrap_or_else(|| scn.scenario_name());

    let mut violations = 0usize;
    let mut points = Vec::new();
    for &extent in &resolutions {
        let report = run_scenario_at(&scn, extent)?;
        violations += report.summary.impossible_flags;
        points.push(RefinementPoint { extent, value: series_metric(&report) });
        write_text_atomic(&dir.join(format!("{base}_{extent}.csv")), &report.to_csv())?;
        write_text_atomic(
            &dir.join(format!("{base}_{extent}.json")),
            &report.summary_json_string(),
        )?;
        eprintln!(
            "{base} @ {extent}: max ratio {:.6}, {} rows, {} ms",
            report.summary.max_finite_ratio,
            report.summary.rows,
            report.runtime_ms.unwrap_or(0)
        );
    }
    if resolutions.len() > 1 {
        let series = RefinementSeries::new(format!("{base}-metric"), points);
        let text = serde_json::to_string_pretty(&series)
            .map_err(|e| Error::Format(format!("series serialize: {e}")))?;
        write_text_atomic(&dir.join(format!("{base}_series.json")), &text)?;
    }
    Ok(violations)
}

/// Parse "p" or "p/q" into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let parts: Vec<&str> = s.split('/').collect();
    let bad = || Error::Config(format!("cannot parse rational {s:?}"));
    match parts.as_slice() {
        [p] => {
            let num: i128 = p.trim().parse().map_err(|_| bad())?;
            Ok(rational(num, 1))
        }
        [p, q] => {
            let num: i128 = p.trim().parse().map_err(|_| bad())?;
            let den: i128 = q.trim().parse().map_err(|_| bad())?;
            if den == 0 {
                return Err(bad());
            }
            Ok(rational(num, den))
        }
        _ => Err(bad()),
    }
}

pub struct WhitneyOptions {
    pub ndim: usize,
    pub depth: u32,
    pub big_l: Rational,
    pub r0: Option<Rational>,
    pub chains: bool,
    pub out: PathBuf,
}

/// whitney: dump the exact decomposition, optional annulus selection and
/// chains, with a summary of the geometric constants.
pub fn cmd_whitney(opts: &WhitneyOptions) -> Result<PathBuf> {
    let started = Instant::now();
    let d = whitney_decompose(opts.big_l, opts.ndim, opts.depth)?;

    let generations: Vec<Vec<CubeJson>> = d
        .generations()
        .iter()
        .map(|g| g.iter().map(CubeJson::from_cube).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let residual: Vec<CubeJson> = d
        .residual_boxes()
        .iter()
        .map(CubeJson::from_cube)
        .collect::<Result<Vec<_>>>()?;

    let annulus = match opts.r0 {
        Some(r0) => {
            let sel = annulus_cubes(&d, r0)?;
            Some(
                sel.iter()
                    .map(CubeJson::from_cube)
                    .collect::<Result<Vec<_>>>()?,
            )
        }
        None => None,
    };

    let mut chains_json = Vec::new();
    let mut min_overlap: Option<Rational> = None;
    let mut max_chain_len = 0usize;
    if opts.chains {
        for source in d.all_cubes() {
            let chain = whitney_chain(&d, source)?;
            if chain.len() > max_chain_len {
                max_chain_len = chain.len();
            }
            if chain.len() > 1 {
                min_overlap = Some(match min_overlap {
                    None => chain.min_overlap_fraction,
                    Some(cur) => {
                        if chain.min_overlap_fraction < cur {
                            chain.min_overlap_fraction
                        } else {
                            cur
                        }
                    }
                });
            }
            chains_json.push(serde_json::json!({
                "source": CubeJson::from_cube(source)?,
                "length": chain.len(),
                "cubes": chain
                    .cubes
                    .iter()
                    .map(CubeJson::from_cube)
                    .collect::<Result<Vec<_>>>()?,
                "min_overlap_fraction": RationalJson::from_rational(chain.min_overlap_fraction)?,
            }));
        }
    }

    let identity = d.side_distance_identity_holds();
    let dump = serde_json::json!({
        "ndim": opts.ndim,
        "depth": opts.depth,
        "big_l": RationalJson::from_rational(opts.big_l)?,
        "generations": generations,
        "residual": residual,
        "annulus": annulus,
        "chains": if opts.chains { Some(chains_json) } else { None },
        "summary": {
            "cube_count": d.cube_count(),
            "per_generation": d.generations().iter().map(|g| g.len()).collect::<Vec<_>>(),
            "side_distance_identity": identity,
            "emitted_measure": RationalJson::from_rational(d.emitted_measure())?,
            "residual_measure": RationalJson::from_rational(d.residual_measure())?,
            "max_chain_length": if opts.chains { Some(max_chain_len) } else { None },
            "min_overlap_fraction": match min_overlap {
                Some(f) => Some(RationalJson::from_rational(f)?),
                None => None,
            },
        },
    });
    let path = opts
        .out
        .join(format!("whitney_n{}_d{}.json", opts.ndim, opts.depth));
    let text = serde_json::to_string_pretty(&dump)
        .map_err(|e| Error::Format(format!("dump serialize: {e}")))?;
    write_text_atomic(&path, &text)?;
    eprintln!(
        "whitney n={} depth={}: {} cubes, identity={}, {:.1} ms",
        opts.ndim,
        opts.depth,
        d.cube_count(),
        identity,
        started.elapsed().as_secs_f64() * 1e3
    );
    Ok(path)
}
