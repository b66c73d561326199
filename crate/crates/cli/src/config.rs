//! Run configuration: a line-oriented `[section]` / `key = value` file with
//! `#` comments, parsed as TOML.

use std::fmt;
use std::path::PathBuf;

use orbitshare::deanalysis::DeConfig;
use orbitshare::linkbudget::LinkParams;
use orbitshare::sweep::{LoadGrid, LoadGridSpec, PairMode};
use orbitshare::{PerService, Service};
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{}", list("unknown keys", .0))]
    UnknownKeys(Vec<String>),
    #[error("{}", list("invalid configuration", .0))]
    Validation(Vec<String>),
}

fn list(title: &str, items: &[String]) -> String {
    let mut s = format!("{title}:");
    for item in items {
        s.push_str("\n  - ");
        s.push_str(item);
    }
    s
}

#[derive(Debug, Default, Deserialize)]
struct RawConfig {
    link: Option<RawLinks>,
    frame: Option<RawFrame>,
    run: Option<RawRun>,
    load: Option<RawLoad>,
    rate_sweep: Option<RawRateSweep>,
    pair_sweep: Option<RawPairSweep>,
    de: Option<RawDe>,
    output: Option<RawOutput>,
}

#[derive(Debug, Default, Deserialize)]
struct RawLinks {
    leo: Option<RawLink>,
    geo: Option<RawLink>,
}

#[derive(Debug, Default, Deserialize)]
struct RawLink {
    tx_power_dbm: Option<f64>,
    tx_gain_dbi: Option<f64>,
    rx_gain_dbi: Option<f64>,
    path_loss_db: Option<f64>,
    noise_temp_dbk: Option<f64>,
    bandwidth_hz: Option<f64>,
    carrier_freq_hz: Option<f64>,
    snr_override_db: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
struct RawFrame {
    n_leo_slots: Option<i64>,
    alpha: Option<i64>,
}

#[derive(Debug, Default, Deserialize)]
struct RawRun {
    frames: Option<i64>,
    seed: Option<i64>,
    collapse_ratio: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
struct RawLoad {
    start: Option<f64>,
    stop: Option<f64>,
    step: Option<f64>,
    max_extensions: Option<i64>,
}

#[derive(Debug, Default, Deserialize)]
struct RawRateSweep {
    services: Option<Vec<String>>,
    min_rate: Option<f64>,
    fill_step: Option<f64>,
    load_grid: Option<String>,
    de_lower: Option<f64>,
    de_upper: Option<f64>,
    de_step: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
struct RawPairSweep {
    alphas: Option<Vec<i64>>,
    betas: Option<Vec<f64>>,
    min_geo_rate: Option<f64>,
    fill_step: Option<f64>,
    pair_mode: Option<String>,
    benchmark_frames: Option<i64>,
}

#[derive(Debug, Default, Deserialize)]
struct RawDe {
    grid_points: Option<i64>,
    fp_tolerance: Option<f64>,
    max_iterations: Option<i64>,
    bisection_tolerance: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
struct RawOutput {
    dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateSweepConfig {
    pub services: Vec<Service>,
    pub min_rate: f64,
    /// `None` samples only the capacity boundaries.
    pub fill_step: Option<f64>,
    pub load_grid: LoadGridSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSweepConfig {
    pub alphas: Vec<usize>,
    pub betas: Vec<f64>,
    pub min_geo_rate: f64,
    pub fill_step: Option<f64>,
    pub pair_mode: PairMode,
    /// Frames per point of the segregated benchmark sweep; `None` uses the run's.
    pub benchmark_frames: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub links: PerService<LinkParams<f64>>,
    pub n_leo_slots: usize,
    pub alpha: usize,
    pub n_frames: usize,
    pub seed: u64,
    pub collapse_ratio: Option<f64>,
    pub load_grid: LoadGrid,
    pub max_extensions: usize,
    pub rate_sweep: RateSweepConfig,
    pub pair_sweep: PairSweepConfig,
    pub de: DeConfig<f64>,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    /// The reference system with the simulator's default grids.
    fn default() -> Self {
        Self {
            links: PerService::new(LinkParams::reference_leo(), LinkParams::reference_geo()),
            n_leo_slots: 400,
            alpha: 8,
            n_frames: 2000,
            seed: 1,
            collapse_ratio: None,
            load_grid: LoadGrid::default(),
            max_extensions: 4,
            rate_sweep: RateSweepConfig {
                services: Service::ALL.to_vec(),
                min_rate: 0.1,
                fill_step: Some(0.02),
                load_grid: LoadGridSpec::Fixed(LoadGrid::default()),
            },
            pair_sweep: PairSweepConfig {
                alphas: vec![1, 2, 4, 5, 8],
                betas: vec![1.0],
                min_geo_rate: 0.05,
                fill_step: None,
                pair_mode: PairMode::default(),
                benchmark_frames: None,
            },
            de: DeConfig::default(),
            out_dir: None,
        }
    }
}

/// Parsed file plus the unknown keys that lenient parsing let through.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub config: RunConfig,
    pub warnings: Vec<String>,
}

/// 1-based line of byte offset `pos`.
fn line_of(text: &str, pos: usize) -> usize {
    text[..pos.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Line declaring `key` under the table `section`, by a plain scan of the text.
fn locate_key(text: &str, path: &str) -> Option<usize> {
    let (section, key) = path.rsplit_once('.').unwrap_or(("", path));
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = header.trim().to_string();
            if current == path {
                return Some(i + 1);
            }
        } else if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

fn non_negative(v: i64, name: &str, errors: &mut Vec<String>) -> usize {
    if v < 0 {
        errors.push(format!("{name} must be non-negative, got {v}"));
        0
    } else {
        v as usize
    }
}

fn parse_service(s: &str) -> Option<Service> {
    match s {
        "leo" => Some(Service::Leo),
        "geo" => Some(Service::Geo),
        _ => None,
    }
}

pub fn parse_pair_mode(s: &str) -> Option<PairMode> {
    match s {
        "per-service-argmax" => Some(PairMode::PerServiceArgmax),
        "shared-sweep" => Some(PairMode::SharedSweep),
        _ => None,
    }
}

fn link_params(raw: &RawLink, name: &str, errors: &mut Vec<String>) -> LinkParams<f64> {
    let mut req = |v: Option<f64>, key: &str| {
        v.unwrap_or_else(|| {
            errors.push(format!("[link.{name}] is missing `{key}`"));
            f64::NAN
        })
    };
    let params = LinkParams {
        tx_power_dbm: req(raw.tx_power_dbm, "tx_power_dbm"),
        tx_gain_dbi: req(raw.tx_gain_dbi, "tx_gain_dbi"),
        rx_gain_dbi: req(raw.rx_gain_dbi, "rx_gain_dbi"),
        path_loss_db: req(raw.path_loss_db, "path_loss_db"),
        noise_temp_dbk: req(raw.noise_temp_dbk, "noise_temp_dbk"),
        bandwidth_hz: req(raw.bandwidth_hz, "bandwidth_hz"),
        carrier_freq_hz: raw.carrier_freq_hz.unwrap_or(0.0),
        snr_override_db: raw.snr_override_db,
    };
    if params.tx_power_dbm.is_nan() && errors.iter().any(|e| e.starts_with(&format!("[link.{name}]"))) {
        return params;
    }
    if let Err(e) = params.validate() {
        errors.push(format!("[link.{name}] {e}"));
    }
    params
}

/// Parses and validates a configuration file.
///
/// Unknown keys are an error unless `lenient`, in which case they come back
/// as warnings. Validation reports every violated rule at once.
pub fn parse_config(text: &str, lenient: bool) -> Result<Parsed, ConfigError> {
    let de = toml::de::Deserializer::parse(text).map_err(|e| parse_error(text, &e))?;
    let mut unknown = Vec::new();
    let raw: RawConfig = serde_ignored::deserialize(de, |path| {
        // `Option` layers show up as `?` segments
        unknown.push(path.to_string().replace(".?", "").replace("?.", ""))
    })
        .map_err(|e| parse_error(text, &e))?;
    let unknown: Vec<String> = unknown
        .into_iter()
        .map(|path| match locate_key(text, &path) {
            Some(line) => format!("`{path}` (line {line})"),
            None => format!("`{path}`"),
        })
        .collect();
    if !unknown.is_empty() && !lenient {
        return Err(ConfigError::UnknownKeys(unknown));
    }
    let config = validate(raw)?;
    Ok(Parsed { config, warnings: unknown.into_iter().map(|k| format!("ignoring unknown key {k}")).collect() })
}

fn parse_error(text: &str, e: &toml::de::Error) -> ConfigError {
    ConfigError::Parse {
        line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
        message: e.message().trim().to_string(),
    }
}

fn validate(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let mut errors = Vec::new();
    let mut cfg = RunConfig::default();

    let links = raw.link.unwrap_or_default();
    match (&links.leo, &links.geo) {
        (Some(l), Some(g)) => {
            cfg.links = PerService::new(link_params(l, "leo", &mut errors), link_params(g, "geo", &mut errors));
        }
        _ => {
            for (name, present) in [("leo", links.leo.is_some()), ("geo", links.geo.is_some())] {
                if !present {
                    errors.push(format!("missing required section [link.{name}]"));
                }
            }
        }
    }

    match raw.frame {
        None => errors.push("missing required section [frame]".into()),
        Some(frame) => {
            match frame.n_leo_slots {
                None => errors.push("[frame] is missing `n_leo_slots`".into()),
                Some(n) if n < 2 => errors.push(format!("n_leo_slots must be at least 2, got {n}")),
                Some(n) => cfg.n_leo_slots = n as usize,
            }
            match frame.alpha {
                None => errors.push("[frame] is missing `alpha`".into()),
                Some(a) if a < 1 => errors.push(format!("alpha must be a positive integer, got {a}")),
                Some(a) => cfg.alpha = a as usize,
            }
            if let (Some(n), Some(a)) = (frame.n_leo_slots, frame.alpha) {
                if n >= 2 && a >= 1 && n % a != 0 {
                    errors.push(format!("alpha = {a} does not divide n_leo_slots = {n}"));
                }
            }
        }
    }

    if let Some(run) = raw.run {
        if let Some(f) = run.frames {
            if f < 1 {
                errors.push(format!("frames must be at least 1, got {f}"));
            } else {
                cfg.n_frames = f as usize;
            }
        }
        if let Some(s) = run.seed {
            cfg.seed = non_negative(s, "seed", &mut errors) as u64;
        }
        if let Some(r) = run.collapse_ratio {
            if !(r > 0.0 && r < 1.0) {
                errors.push(format!("collapse_ratio must lie in (0, 1), got {r}"));
            }
            cfg.collapse_ratio = Some(r);
        }
    }

    if let Some(load) = raw.load {
        let grid = LoadGrid {
            start: load.start.unwrap_or(cfg.load_grid.start),
            stop: load.stop.unwrap_or(cfg.load_grid.stop),
            step: load.step.unwrap_or(cfg.load_grid.step),
        };
        if let Err(e) = grid.validate() {
            errors.push(format!("[load] {e}"));
        }
        cfg.load_grid = grid;
        if let Some(m) = load.max_extensions {
            cfg.max_extensions = non_negative(m, "max_extensions", &mut errors);
        }
    }
    cfg.rate_sweep.load_grid = LoadGridSpec::Fixed(cfg.load_grid);

    if let Some(rs) = raw.rate_sweep {
        if let Some(services) = rs.services {
            let mut parsed = Vec::new();
            for s in &services {
                match parse_service(s) {
                    Some(v) if !parsed.contains(&v) => parsed.push(v),
                    Some(_) => {}
                    None => errors.push(format!("unknown service `{s}` (expected leo or geo)")),
                }
            }
            if parsed.is_empty() {
                errors.push("[rate_sweep] services must name at least one service".into());
            }
            parsed.sort_by_key(|s| *s as u8);
            cfg.rate_sweep.services = parsed;
        }
        if let Some(m) = rs.min_rate {
            if !(m > 0.0 && m.is_finite()) {
                errors.push(format!("min_rate must be positive, got {m}"));
            }
            cfg.rate_sweep.min_rate = m;
        }
        if let Some(f) = rs.fill_step {
            if f < 0.0 || !f.is_finite() {
                errors.push(format!("fill_step must be non-negative, got {f}"));
            }
            cfg.rate_sweep.fill_step = (f > 0.0).then_some(f);
        }
        match rs.load_grid.as_deref() {
            None | Some("fixed") => {}
            Some("de-centred") => {
                let spec = LoadGridSpec::DeCentred {
                    lower: rs.de_lower.unwrap_or(0.7),
                    upper: rs.de_upper.unwrap_or(1.3),
                    step: rs.de_step.unwrap_or(0.01),
                };
                if let LoadGridSpec::DeCentred { lower, upper, step } = spec {
                    if let Err(e) = LoadGrid::new(lower, upper, step) {
                        errors.push(format!("[rate_sweep] DE-centred grid: {e}"));
                    }
                }
                cfg.rate_sweep.load_grid = spec;
            }
            Some(other) => errors.push(format!("load_grid must be `fixed` or `de-centred`, got `{other}`")),
        }
    }

    if let Some(ps) = raw.pair_sweep {
        if let Some(alphas) = ps.alphas {
            let mut parsed = Vec::new();
            for a in alphas {
                if a < 1 {
                    errors.push(format!("pair_sweep alpha must be a positive integer, got {a}"));
                } else if cfg.n_leo_slots % a as usize != 0 {
                    errors.push(format!("pair_sweep alpha = {a} does not divide n_leo_slots = {}", cfg.n_leo_slots));
                } else {
                    parsed.push(a as usize);
                }
            }
            if parsed.is_empty() {
                errors.push("[pair_sweep] alphas must not be empty".into());
            }
            parsed.sort_unstable();
            parsed.dedup();
            cfg.pair_sweep.alphas = parsed;
        }
        if let Some(betas) = ps.betas {
            for &b in &betas {
                if !(b > 0.0 && b.is_finite()) {
                    errors.push(format!("beta must be positive, got {b}"));
                }
            }
            if betas.is_empty() {
                errors.push("[pair_sweep] betas must not be empty".into());
            }
            cfg.pair_sweep.betas = betas;
        }
        if let Some(m) = ps.min_geo_rate {
            if !(m > 0.0 && m.is_finite()) {
                errors.push(format!("min_geo_rate must be positive, got {m}"));
            }
            cfg.pair_sweep.min_geo_rate = m;
        }
        if let Some(f) = ps.fill_step {
            if f < 0.0 || !f.is_finite() {
                errors.push(format!("fill_step must be non-negative, got {f}"));
            }
            cfg.pair_sweep.fill_step = (f > 0.0).then_some(f);
        }
        if let Some(f) = ps.benchmark_frames {
            if f < 1 {
                errors.push(format!("benchmark_frames must be at least 1, got {f}"));
            } else {
                cfg.pair_sweep.benchmark_frames = Some(f as usize);
            }
        }
        if let Some(mode) = ps.pair_mode {
            match parse_pair_mode(&mode) {
                Some(m) => cfg.pair_sweep.pair_mode = m,
                None => errors.push(format!(
                    "pair_mode must be `shared-sweep` or `per-service-argmax`, got `{mode}`"
                )),
            }
        }
    }

    if let Some(d) = raw.de {
        if let Some(g) = d.grid_points {
            cfg.de.grid_points = non_negative(g, "grid_points", &mut errors);
        }
        if let Some(t) = d.fp_tolerance {
            cfg.de.fp_tolerance = t;
        }
        if let Some(m) = d.max_iterations {
            cfg.de.max_iterations = non_negative(m, "max_iterations", &mut errors);
        }
        if let Some(t) = d.bisection_tolerance {
            cfg.de.bisection_tolerance = t;
        }
        if let Err(e) = cfg.de.validate() {
            errors.push(format!("[de] {e}"));
        }
    }

    if let Some(out) = raw.output {
        cfg.out_dir = out.dir.map(PathBuf::from);
    }

    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Validation(errors))
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "N_L = {}, alpha = {}, frames = {}, seed = {}",
            self.n_leo_slots, self.alpha, self.n_frames, self.seed
        )
    }
}
