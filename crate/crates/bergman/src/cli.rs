//! Batch front door: config-driven experiments wiring the modules
//! together, with deterministic seeded runs and flat-file outputs.

use crate::carleson::{
    canonical_measure, carleson_profile, embedding_constant_direct, random_measure, DiscreteMeasure,
};
use crate::certify::{
    admissibility_norms, certification_report, frame_bounds, sampling_stable, PeakOperator,
};
use crate::construction::{build_g, guard_grid, verify_g, BuildConfig, EpsMode, GCase, DELTA_EVAL};
use crate::densities::{classify, lower_density, upper_density, Anchors, ClassifyConfig, DEFAULT_GRID};
use crate::error::{Error, Result};
use crate::geometry::{generate_circle_lattice, PointSequence};
use crate::space::{monomial_norms, radial_grid, KernelModel};
use crate::weights::{make_weight, RadiiSchedule, WeightSpec};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::fs;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerateSpec {
    pub spacing: f64,
    #[serde(default = "one")]
    pub stride: usize,
}

fn one() -> usize {
    1
}

/// Fully-resolved experiment configuration; every run echoes it back.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub weight: String,
    pub n_radii: usize,
    pub degree: usize,
    pub sequence: Option<String>,
    pub generate: Option<GenerateSpec>,
    pub m_min: usize,
    pub m_max: usize,
    /// ε for construct-g; derived from the density slack when absent.
    pub epsilon: Option<f64>,
    /// Block size for construct-g; auto-selected when absent.
    pub m_block: Option<usize>,
    pub case: Option<String>,
    pub seed: u64,
    pub count: usize,
    pub margin: f64,
    pub exclude_self: bool,
    pub angular: usize,
    /// Annulus cap for Gram/frame matrices in sweeps.
    pub gram_cap: usize,
    pub spacings: Vec<f64>,
    pub out: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            weight: "constant".into(),
            n_radii: 12,
            degree: 2000,
            sequence: None,
            generate: None,
            m_min: 4,
            m_max: 8,
            epsilon: None,
            m_block: None,
            case: None,
            seed: 1,
            count: 30,
            margin: 0.02,
            exclude_self: false,
            angular: 64,
            gram_cap: 8,
            spacings: vec![8.0, 12.7, 20.2, 32.0, 50.8, 80.6, 128.0, 203.2, 322.5, 512.0],
            out: "out".into(),
        }
    }
}

#[derive(Debug, Args)]
pub struct Overrides {
    /// JSON config file; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub weight: Option<String>,
    #[arg(long, global = true)]
    pub n_radii: Option<usize>,
    #[arg(long, global = true)]
    pub degree: Option<usize>,
    /// CSV file of sequence points (re,im).
    #[arg(long, global = true)]
    pub sequence: Option<String>,
    /// Lattice generator `spacing` or `spacing:stride`.
    #[arg(long, global = true)]
    pub generate: Option<String>,
    #[arg(long, global = true)]
    pub m_max: Option<usize>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub case: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out: Option<String>,
}

#[derive(Debug, Parser)]
#[command(name = "bergman", version, about = "radially weighted Bergman space laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Weight summary and doubling check.
    WeightInfo,
    /// Radii schedule table.
    Radii,
    /// Kernel diagonal comparability statistics.
    KernelDiag,
    /// Carleson profile vs direct embedding constant for a measure.
    CarlesonCheck,
    /// Upper/lower density scan for a sequence.
    Density,
    /// Interpolation/sampling candidate classification.
    Classify,
    /// Build and verify the peak function G.
    ConstructG,
    /// Gram and frame certificates.
    Certify,
    /// Explicit interpolation on seeded data; node residual table.
    InterpDemo,
    /// Reconstruction from samples on a radial grid.
    SamplingDemo,
    /// Lattice spacing ladder: densities + certificates per spacing.
    ThresholdSweep,
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::WeightInfo => "weight-info",
            Cmd::Radii => "radii",
            Cmd::KernelDiag => "kernel-diag",
            Cmd::CarlesonCheck => "carleson-check",
            Cmd::Density => "density",
            Cmd::Classify => "classify",
            Cmd::ConstructG => "construct-g",
            Cmd::Certify => "certify",
            Cmd::InterpDemo => "interp-demo",
            Cmd::SamplingDemo => "sampling-demo",
            Cmd::ThresholdSweep => "threshold-sweep",
        }
    }
}

pub fn resolve_config(ov: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg: ExperimentConfig = match &ov.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(w) = &ov.weight {
        cfg.weight = w.clone();
    }
    if let Some(n) = ov.n_radii {
        cfg.n_radii = n;
    }
    if let Some(d) = ov.degree {
        cfg.degree = d;
    }
    if let Some(s) = &ov.sequence {
        cfg.sequence = Some(s.clone());
        cfg.generate = None;
    }
    if let Some(g) = &ov.generate {
        let (sp, st) = match g.split_once(':') {
            Some((a, b)) => (
                a.parse::<f64>().map_err(|_| Error::Config(format!("bad spacing `{a}`")))?,
                b.parse::<usize>().map_err(|_| Error::Config(format!("bad stride `{b}`")))?,
            ),
            None => (
                g.parse::<f64>().map_err(|_| Error::Config(format!("bad spacing `{g}`")))?,
                1,
            ),
        };
        cfg.generate = Some(GenerateSpec { spacing: sp, stride: st });
        cfg.sequence = None;
    }
    if let Some(m) = ov.m_max {
        cfg.m_max = m;
    }
    if let Some(e) = ov.epsilon {
        cfg.epsilon = Some(e);
    }
    if let Some(c) = &ov.case {
        cfg.case = Some(c.clone());
    }
    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    if let Some(o) = &ov.out {
        cfg.out = o.clone();
    }
    if cfg.n_radii < 3 {
        return Err(Error::Config("n_radii must be ≥ 3".into()));
    }
    if cfg.m_min == 0 || cfg.m_min > cfg.m_max {
        return Err(Error::Config(format!(
            "bad m range [{}, {}]",
            cfg.m_min, cfg.m_max
        )));
    }
    Ok(cfg)
}

fn schedule(cfg: &ExperimentConfig) -> Result<(RadiiSchedule, String)> {
    let spec = WeightSpec::parse(&cfg.weight)?;
    let w = make_weight(&spec)?;
    let s = w.compute_radii(cfg.n_radii, 1e-12)?;
    Ok((s, spec.label()))
}

fn load_sequence(cfg: &ExperimentConfig, s: &RadiiSchedule) -> Result<PointSequence> {
    let seq = match (&cfg.sequence, &cfg.generate) {
        (Some(path), _) => PointSequence::from_csv(path)?,
        (None, Some(g)) => generate_circle_lattice(s, g.spacing, g.stride)?,
        (None, None) => {
            return Err(Error::InvalidParameter(
                "no sequence: pass --sequence or --generate".into(),
            ))
        }
    };
    if seq.is_empty() {
        return Err(Error::InvalidParameter("sequence is empty".into()));
    }
    Ok(seq)
}

fn write_summary(
    cfg: &ExperimentConfig,
    name: &str,
    result: serde_json::Value,
) -> Result<serde_json::Value> {
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "subcommand": name,
        "config": cfg,
        "result": result,
    });
    let dir = Path::new(&cfg.out);
    fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(&summary)?;
    fs::write(dir.join(format!("{name}.json")), &text)?;
    Ok(summary)
}

fn csv_writer(cfg: &ExperimentConfig, file: &str) -> Result<csv::Writer<fs::File>> {
    let dir = Path::new(&cfg.out);
    fs::create_dir_all(dir)?;
    Ok(csv::Writer::from_path(dir.join(file))?)
}

fn parse_case(cfg: &ExperimentConfig) -> Result<Option<GCase>> {
    match cfg.case.as_deref() {
        None => Ok(None),
        Some("i" | "I") => Ok(Some(GCase::I)),
        Some("s" | "S") => Ok(Some(GCase::S)),
        Some(other) => Err(Error::Config(format!("unknown case `{other}` (use i or s)"))),
    }
}

fn kernel(cfg: &ExperimentConfig, s: &RadiiSchedule) -> Result<KernelModel> {
    monomial_norms(s, cfg.degree)
}

/// Runs one subcommand; returns the JSON summary it wrote.
pub fn run(cli: &Cli) -> Result<serde_json::Value> {
    let cfg = resolve_config(&cli.overrides)?;
    let name = cli.cmd.name();
    match &cli.cmd {
        Cmd::WeightInfo => {
            let spec = WeightSpec::parse(&cfg.weight)?;
            let w = make_weight(&spec)?;
            let doubling = w.check_doubling(512)?;
            write_summary(&cfg, name, json!({
                "label": spec.label(),
                "doubling": doubling,
                "tail_at_half": w.tail(0.5),
            }))
        }
        Cmd::Radii => {
            let (s, label) = schedule(&cfg)?;
            let spec = WeightSpec::parse(&cfg.weight)?;
            let w = make_weight(&spec)?;
            let mut wtr = csv_writer(&cfg, "radii.csv")?;
            wtr.write_record(["n", "r_n", "gap", "tail"])?;
            for n in 0..=s.n_max() {
                wtr.write_record([
                    n.to_string(),
                    format!("{:.17e}", s.radius(n)),
                    format!("{:.17e}", s.gap(n)),
                    format!("{:.17e}", w.tail_gap(s.gap(n))),
                ])?;
            }
            wtr.flush()?;
            write_summary(&cfg, name, json!({
                "label": label,
                "n_max": s.n_max(),
                "separation_ratio": s.separation_ratio()?,
                "table": "radii.csv",
            }))
        }
        Cmd::KernelDiag => {
            let (s, label) = schedule(&cfg)?;
            let km = kernel(&cfg, &s)?;
            let cap = s.n_max().saturating_sub(3);
            let grid = radial_grid(&s, cap, cfg.angular)?;
            let stats = km.diag_ratio_stats(&grid)?;
            write_summary(&cfg, name, json!({
                "label": label,
                "degree": cfg.degree,
                "grid_cap": cap,
                "stats": stats,
            }))
        }
        Cmd::CarlesonCheck => {
            let (s, _) = schedule(&cfg)?;
            let mu = match (&cfg.sequence, &cfg.generate) {
                (Some(path), _) => DiscreteMeasure::from_csv(path)?,
                (None, Some(_)) => canonical_measure(&load_sequence(&cfg, &s)?, &s)?,
                (None, None) => {
                    let n_hi = cfg.gram_cap.min(s.n_max().saturating_sub(2)).max(1);
                    random_measure(cfg.seed, cfg.count, &s, 1, n_hi)?
                }
            };
            if mu.is_empty() {
                return Err(Error::InvalidParameter("measure is empty".into()));
            }
            let prof = carleson_profile(&mu, &s)?;
            let km = kernel(&cfg, &s)?;
            let direct = embedding_constant_direct(&mu, &km)?;
            let mut wtr = csv_writer(&cfg, "carleson_profile.csv")?;
            wtr.write_record(["n", "scaled_constant"])?;
            for (n, v) in prof.per_n.iter().enumerate() {
                wtr.write_record([n.to_string(), format!("{v:.17e}")])?;
            }
            wtr.flush()?;
            write_summary(&cfg, name, json!({
                "atoms": mu.len(),
                "total_mass": mu.total_mass(),
                "profile_sup": prof.sup,
                "direct_embedding": direct,
                "ratio": direct / prof.sup.max(f64::MIN_POSITIVE),
                "table": "carleson_profile.csv",
            }))
        }
        Cmd::Density => {
            let (s, _) = schedule(&cfg)?;
            let seq = load_sequence(&cfg, &s)?;
            let m_range = (cfg.m_min, cfg.m_max);
            let up = upper_density(&seq, &s, m_range, Anchors::Points, cfg.exclude_self)?;
            let low = lower_density(&seq, &s, m_range, DEFAULT_GRID)?;
            let mut wtr = csv_writer(&cfg, "density.csv")?;
            wtr.write_record(["m", "sup_over_m", "inf_over_m"])?;
            for (u, l) in up.per_m.iter().zip(&low.per_m) {
                wtr.write_record([
                    u.m.to_string(),
                    format!("{:.17e}", u.sup_value),
                    format!("{:.17e}", l.inf_value),
                ])?;
            }
            wtr.flush()?;
            write_summary(&cfg, name, json!({
                "points": seq.len(),
                "upper": up,
                "lower": low,
                "table": "density.csv",
            }))
        }
        Cmd::Classify => {
            let (s, _) = schedule(&cfg)?;
            let seq = load_sequence(&cfg, &s)?;
            let ccfg = ClassifyConfig {
                m_range: (cfg.m_min, cfg.m_max),
                margin: cfg.margin,
                exclude_self: cfg.exclude_self,
                ..ClassifyConfig::default()
            };
            let cls = classify(&seq, &s, &ccfg)?;
            write_summary(&cfg, name, json!({
                "points": seq.len(),
                "classification": cls,
            }))
        }
        Cmd::ConstructG => {
            let (s, _) = schedule(&cfg)?;
            let seq = load_sequence(&cfg, &s)?;
            let ccfg = ClassifyConfig {
                m_range: (cfg.m_min, cfg.m_max),
                margin: cfg.margin,
                exclude_self: cfg.exclude_self,
                ..ClassifyConfig::default()
            };
            let cls = classify(&seq, &s, &ccfg)?;
            let case = match parse_case(&cfg)? {
                Some(c) => c,
                None if cls.interp_candidate => GCase::I,
                None if cls.sampling_candidate => GCase::S,
                None => {
                    return Err(Error::InvalidParameter(format!(
                        "densities straddle the threshold (d+ = {:.4}, d- = {:.4}); pass --case",
                        cls.d_plus, cls.d_minus
                    )))
                }
            };
            let eps = match cfg.epsilon {
                Some(e) => EpsMode::Fixed(e),
                None => EpsMode::AutoFrom(match case {
                    GCase::I => cls.d_plus,
                    GCase::S => cls.d_minus,
                }),
            };
            let mut bcfg = BuildConfig::new(case, eps);
            bcfg.m = cfg.m_block;
            bcfg.phase_seed = cfg.seed;
            let g = build_g(&seq, &s, &bcfg)?;
            let grid = guard_grid(&g, &s, cfg.angular, DELTA_EVAL)?;
            let verify = verify_g(&g, &s, &grid, DELTA_EVAL)?;
            let dir = Path::new(&cfg.out);
            fs::create_dir_all(dir)?;
            fs::write(dir.join("g_model.json"), g.to_json()?)?;
            write_summary(&cfg, name, json!({
                "case": format!("{:?}", g.case),
                "epsilon": g.epsilon,
                "m": g.m,
                "atoms": g.atoms.len(),
                "atom_separation": g.atom_separation,
                "verify": verify,
                "model": "g_model.json",
            }))
        }
        Cmd::Certify => {
            let (s, _) = schedule(&cfg)?;
            let all = load_sequence(&cfg, &s)?;
            let km = kernel(&cfg, &s)?;
            // certificates live on the sub-sequence the kernel degree can
            // resolve; gram_cap bounds the annulus depth
            let gram_gap = s.gap(cfg.gram_cap.min(s.n_max()));
            let seq = PointSequence::new(
                all.points().iter().copied().filter(|z| 1.0 - z.norm() > gram_gap).collect(),
            )?;
            if seq.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "no sequence points within the gram cap annulus {}",
                    cfg.gram_cap
                )));
            }
            let sub_degree = cfg.degree.min(4 * seq.len()).max(8);
            let report = certification_report(&seq, &km, sub_degree)?;
            // plateau ladder: frame A at doubling subspace degrees
            let mut ladder = Vec::new();
            let mut d = (sub_degree / 4).max(4);
            while d <= sub_degree {
                ladder.push(frame_bounds(&seq, &km, d)?.0);
                d *= 2;
            }
            let _ = s;
            write_summary(&cfg, name, json!({
                "points_total": all.len(),
                "points_used": seq.len(),
                "report": report,
                "frame_a_ladder": ladder,
                "sampling_stable": sampling_stable(&ladder),
            }))
        }
        Cmd::InterpDemo => {
            let (s, _) = schedule(&cfg)?;
            let seq = load_sequence(&cfg, &s)?;
            let km = kernel(&cfg, &s)?;
            let eps = EpsMode::Fixed(cfg.epsilon.unwrap_or(0.1));
            let mut bcfg = BuildConfig::new(GCase::I, eps);
            bcfg.m = cfg.m_block;
            bcfg.phase_seed = cfg.seed;
            let g = build_g(&seq, &s, &bcfg)?;
            let op = PeakOperator::new(g)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let data: Vec<Complex64> = (0..seq.len())
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let mut wtr = csv_writer(&cfg, "interp_nodes.csv")?;
            wtr.write_record(["re", "im", "target_re", "target_im", "value_re", "value_im", "rel_residual"])?;
            let mut worst = 0.0f64;
            for (j, &lam) in seq.points().iter().enumerate() {
                let v = op.interpolate(&data, lam)?;
                let rel = (v - data[j]).norm() / data[j].norm().max(1e-300);
                worst = worst.max(rel);
                wtr.write_record([
                    format!("{:.17e}", lam.re),
                    format!("{:.17e}", lam.im),
                    format!("{:.17e}", data[j].re),
                    format!("{:.17e}", data[j].im),
                    format!("{:.17e}", v.re),
                    format!("{:.17e}", v.im),
                    format!("{rel:.6e}"),
                ])?;
            }
            wtr.flush()?;
            // nodes exactly on r_N have no annulus index; skip the norms then
            let norms = admissibility_norms(&seq, &data, &km, &s).ok();
            write_summary(&cfg, name, json!({
                "points": seq.len(),
                "max_node_residual": worst,
                "data_norms": norms,
                "table": "interp_nodes.csv",
            }))
        }
        Cmd::SamplingDemo => {
            let (s, _) = schedule(&cfg)?;
            let seq = load_sequence(&cfg, &s)?;
            let eps = EpsMode::Fixed(cfg.epsilon.unwrap_or(0.1));
            let mut bcfg = BuildConfig::new(GCase::S, eps);
            bcfg.m = cfg.m_block;
            bcfg.phase_seed = cfg.seed;
            let g = build_g(&seq, &s, &bcfg)?;
            let cap = g.grid_cap(&s);
            let op = PeakOperator::new(g)?;
            // true function: a fixed rational element of the space
            let f = |z: Complex64| Complex64::new(1.0, 0.0) / (Complex64::new(1.0, 0.3) - z * 0.6);
            let samples: Vec<Complex64> = seq.points().iter().map(|&z| f(z)).collect();
            let grid = radial_grid(&s, cap.min(s.n_max().saturating_sub(2)), cfg.angular)?;
            let mut wtr = csv_writer(&cfg, "sampling_grid.csv")?;
            wtr.write_record(["re", "im", "true_re", "true_im", "recon_re", "recon_im", "abs_err"])?;
            let mut max_err = 0.0f64;
            let mut skipped = 0usize;
            for &z in &grid {
                let t = f(z);
                // grid points inside the δ-guard around a node/atom are
                // excluded from the estimate by construction
                let r = match op.reconstruct(&samples, z) {
                    Ok(v) => v,
                    Err(Error::Guard(_)) => {
                        skipped += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let err = (t - r).norm();
                max_err = max_err.max(err);
                wtr.write_record([
                    format!("{:.17e}", z.re),
                    format!("{:.17e}", z.im),
                    format!("{:.17e}", t.re),
                    format!("{:.17e}", t.im),
                    format!("{:.17e}", r.re),
                    format!("{:.17e}", r.im),
                    format!("{err:.6e}"),
                ])?;
            }
            wtr.flush()?;
            write_summary(&cfg, name, json!({
                "points": seq.len(),
                "grid_points": grid.len(),
                "guard_skipped": skipped,
                "max_abs_err": max_err,
                "table": "sampling_grid.csv",
            }))
        }
        Cmd::ThresholdSweep => {
            let (s, _) = schedule(&cfg)?;
            let km = kernel(&cfg, &s)?;
            let gram_gap = s.gap(cfg.gram_cap.min(s.n_max()));
            let mut wtr = csv_writer(&cfg, "threshold_sweep.csv")?;
            wtr.write_record([
                "spacing", "points", "d_plus_est", "d_minus_est",
                "gram_min_eig", "frame_a", "frame_b",
            ])?;
            let mut rows = Vec::new();
            for &spacing in &cfg.spacings {
                let lat = generate_circle_lattice(&s, spacing, 1)?;
                let m_range = (cfg.m_min, cfg.m_max);
                let up = upper_density(&lat, &s, m_range, Anchors::Points, cfg.exclude_self)?;
                let low = lower_density(&lat, &s, m_range, DEFAULT_GRID)?;
                // certificates on the sub-lattice within the gram cap
                let sub = PointSequence::new(
                    lat.points().iter().copied().filter(|z| 1.0 - z.norm() > gram_gap).collect(),
                )?;
                let (gram_min, fa, fb) = if sub.is_empty() {
                    (f64::NAN, f64::NAN, f64::NAN)
                } else {
                    let deg = cfg.degree.min(4 * sub.len()).max(8);
                    let rep = certification_report(&sub, &km, deg)?;
                    (rep.gram_min_eig, rep.frame_a, rep.frame_b)
                };
                wtr.write_record([
                    format!("{spacing:.6e}"),
                    lat.len().to_string(),
                    format!("{:.17e}", up.d_plus_est),
                    format!("{:.17e}", low.d_minus_est),
                    format!("{gram_min:.17e}"),
                    format!("{fa:.17e}"),
                    format!("{fb:.17e}"),
                ])?;
                rows.push(json!({
                    "spacing": spacing,
                    "points": lat.len(),
                    "d_plus_est": up.d_plus_est,
                    "d_minus_est": low.d_minus_est,
                    "gram_min_eig": gram_min,
                    "frame_a": fa,
                    "frame_b": fb,
                }));
            }
            wtr.flush()?;
            write_summary(&cfg, name, json!({
                "rows": rows,
                "table": "threshold_sweep.csv",
            }))
        }
    }
}
