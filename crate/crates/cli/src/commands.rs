//! One function per subcommand. Each writes `<stem>.csv` and `<stem>.json`
//! into the output directory and returns the JSON text for stdout.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use orbitshare::deanalysis::threshold;
use orbitshare::linkbudget::{noise_power, received_power, snr, LinkParams};
use orbitshare::phy::{tau, Rate, TinSicModel};
use orbitshare::sweep::{
    evaluate_load, pair_sweep_shared, rate_grid, rate_pair_grid, rate_sweep_segregated, Benchmark, LoadGridSpec,
    OperatingPoint, PairClassification, PairMode, Quadrant, RateSweep, SweepPlan,
};
use orbitshare::{PerService, Service};
use serde::Serialize;

use crate::bundles::{bundle_config, Figure};
use crate::config::{parse_config, RunConfig};
use crate::output::{
    rate_sweep_rows, write_csv, write_json, DeThresholdRow, LinkBudgetRow, SweepPairsRow, SweepRateRow,
    SWEEP_PAIRS_HEADER, SWEEP_RATE_HEADER,
};

/// A user input the command cannot act on (exit status 1).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub const DEFAULT_OUT_DIR: &str = "orbitshare-out";

/// Command-line overrides applied on top of the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub frames: Option<usize>,
    pub lenient: bool,
    pub out: Option<PathBuf>,
    pub pair_mode: Option<PairMode>,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub config: RunConfig,
    pub out_dir: PathBuf,
}

impl Session {
    /// Reads the configuration (or the built-in defaults) and applies the overrides.
    pub fn load(ov: &Overrides) -> Result<Self> {
        let (config, config_dir) = match &ov.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let parsed = parse_config(&text, ov.lenient).with_context(|| format!("in {}", path.display()))?;
                for w in &parsed.warnings {
                    log::warn!("{}: {w}", path.display());
                }
                (parsed.config, path.parent().map(Path::to_path_buf))
            }
            None => (RunConfig::default(), None),
        };
        Ok(Self::with_config(config, config_dir.as_deref(), ov))
    }

    /// Applies the overrides to an already built configuration.
    pub fn with_config(mut config: RunConfig, config_dir: Option<&Path>, ov: &Overrides) -> Self {
        if let Some(seed) = ov.seed {
            config.seed = seed;
        }
        if let Some(frames) = ov.frames {
            config.n_frames = frames;
            if config.pair_sweep.benchmark_frames.is_some() {
                config.pair_sweep.benchmark_frames = Some(frames);
            }
        }
        if let Some(mode) = ov.pair_mode {
            config.pair_sweep.pair_mode = mode;
        }
        let out_dir = match (&ov.out, &config.out_dir) {
            (Some(dir), _) => dir.clone(),
            (None, Some(dir)) => config_dir.map_or_else(|| dir.clone(), |base| base.join(dir)),
            (None, None) => PathBuf::from(DEFAULT_OUT_DIR),
        };
        Self { config, out_dir }
    }
}

/// Receiver models from the effective link budget of each link.
pub fn models(cfg: &RunConfig) -> Result<PerService<TinSicModel<f64>>> {
    let model = |service: Service| -> Result<TinSicModel<f64>> {
        let link = cfg.links.get(service);
        link.validate()?;
        Ok(TinSicModel::new(snr(link).snr_linear, service)?)
    };
    Ok(PerService::new(model(Service::Leo)?, model(Service::Geo)?))
}

pub fn plan(cfg: &RunConfig, load_grid: LoadGridSpec, n_frames: usize) -> SweepPlan {
    SweepPlan {
        n_leo_slots: cfg.n_leo_slots,
        load_grid,
        n_frames,
        master_seed: cfg.seed,
        max_extensions: cfg.max_extensions,
        collapse_ratio: cfg.collapse_ratio,
        de: cfg.de,
    }
}

/// Output of a command: files written plus the JSON summary text.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

fn emit<R: Serialize, S: Serialize>(
    dir: &Path,
    stem: &str,
    rows: &[R],
    header: &[&str],
    summary: &S,
) -> Result<Artifacts> {
    let csv = write_csv(dir, stem, rows, header)?;
    let (json, summary) = write_json(dir, stem, summary)?;
    Ok(Artifacts { files: vec![csv, json], summary })
}

const LINKBUDGET_HEADER: &[&str] =
    &["receiver", "rx_power_dbw", "noise_power_dbw", "snr_computed_db", "snr_db", "snr_linear", "overridden"];

const DE_HEADER: &[&str] = &["tau", "threshold_g", "service", "snr_db", "rate", "approx_max_throughput"];

pub fn link_budget_row(service: Service, link: &LinkParams<f64>) -> LinkBudgetRow {
    let rx = received_power(link);
    let noise = noise_power(link);
    let effective = snr(link);
    LinkBudgetRow {
        receiver: service.to_string(),
        rx_power_dbw: rx,
        noise_power_dbw: noise,
        snr_computed_db: rx - noise,
        snr_db: effective.snr_db,
        snr_linear: effective.snr_linear,
        overridden: link.snr_override_db.is_some(),
    }
}

pub fn linkbudget(session: &Session) -> Result<Artifacts> {
    let rows: Vec<LinkBudgetRow> = Service::ALL
        .iter()
        .map(|&s| {
            let link = session.config.links.get(s);
            link.validate()?;
            Ok(link_budget_row(s, link))
        })
        .collect::<Result<_>>()?;
    #[derive(Serialize)]
    struct Summary<'a> {
        command: &'static str,
        receivers: &'a [LinkBudgetRow],
    }
    emit(&session.out_dir, "linkbudget", &rows, LINKBUDGET_HEADER, &Summary { command: "linkbudget", receivers: &rows })
}

#[derive(Debug, Clone, Default)]
pub struct DeThresholdArgs {
    pub tau: Option<usize>,
    pub rate: Option<f64>,
    pub service: Option<Service>,
    pub snr_db: Option<f64>,
}

pub fn de_threshold(session: &Session, args: &DeThresholdArgs) -> Result<Artifacts> {
    let cfg = &session.config;
    cfg.de.validate()?;
    let row = match (args.tau, args.rate) {
        (Some(t), None) => {
            if args.snr_db.is_some() || args.service.is_some() {
                return Err(UsageError("--snr-db and --service only apply together with --rate".into()).into());
            }
            DeThresholdRow {
                tau: t,
                threshold_g: threshold(t, &cfg.de),
                service: None,
                snr_db: None,
                rate: None,
                approx_max_throughput: None,
            }
        }
        (None, Some(r)) => {
            let service = args.service.unwrap_or(Service::Leo);
            let snr_db = match args.snr_db {
                Some(db) => db,
                None => snr(cfg.links.get(service)).snr_db,
            };
            let model = TinSicModel::from_db(snr_db, service)?;
            let t = tau(&model, &Rate::new(r, service)?)?;
            let g = threshold(t, &cfg.de);
            DeThresholdRow {
                tau: t,
                threshold_g: g,
                service: Some(service.to_string()),
                snr_db: Some(snr_db),
                rate: Some(r),
                approx_max_throughput: Some(r * g / 2.0),
            }
        }
        _ => return Err(UsageError("give exactly one of --tau or --rate".into()).into()),
    };
    #[derive(Serialize)]
    struct Summary<'a> {
        command: &'static str,
        #[serde(flatten)]
        result: &'a DeThresholdRow,
    }
    let rows = [row];
    emit(&session.out_dir, "de-threshold", &rows, DE_HEADER, &Summary { command: "de-threshold", result: &rows[0] })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Segregated,
    Shared,
}

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub scenario: Scenario,
    /// Segregated: the service's rate. Shared: the LEO rate; GEO uses `rate / alpha`.
    pub rate: f64,
    pub load: f64,
    pub service: Service,
    pub alpha: Option<usize>,
    pub beta: f64,
}

pub fn simulate(session: &Session, args: &SimulateArgs) -> Result<Artifacts> {
    let cfg = &session.config;
    let models = models(cfg)?;
    let plan = plan(cfg, LoadGridSpec::Fixed(cfg.load_grid), cfg.n_frames);
    let alpha = args.alpha.unwrap_or(cfg.alpha);
    if alpha == 0 || cfg.n_leo_slots % alpha != 0 {
        return Err(UsageError(format!("alpha = {alpha} does not divide n_leo_slots = {}", cfg.n_leo_slots)).into());
    }
    let (point, de_approx) = match args.scenario {
        Scenario::Segregated => {
            let model = *models.get(args.service);
            let t = tau(&model, &Rate::new(args.rate, args.service)?)?;
            let point = OperatingPoint::Segregated { service: args.service, model, rate: args.rate };
            (point, Some(args.rate * threshold(t, &cfg.de) / 2.0))
        }
        Scenario::Shared => {
            let rates = PerService::new(args.rate, args.rate / alpha as f64);
            (OperatingPoint::Shared { alpha, beta: args.beta, models, rates }, None)
        }
    };
    let points = evaluate_load(&point, args.load, 0, &plan)?;
    let rows: Vec<SweepRateRow> = points.iter().map(|p| SweepRateRow::new(p, de_approx)).collect();
    #[derive(Serialize)]
    struct Summary<'a> {
        command: &'static str,
        n_leo_slots: usize,
        alpha: usize,
        frames: usize,
        seed: u64,
        points: &'a [SweepRateRow],
    }
    let summary = Summary {
        command: "simulate",
        n_leo_slots: cfg.n_leo_slots,
        alpha,
        frames: cfg.n_frames,
        seed: cfg.seed,
        points: &rows,
    };
    emit(&session.out_dir, "simulate", &rows, SWEEP_RATE_HEADER, &summary)
}

/// Segregated-band rate sweeps of the configured services.
pub fn segregated_sweeps(cfg: &RunConfig, n_frames: usize) -> Result<Vec<RateSweep>> {
    let models = models(cfg)?;
    let rs = &cfg.rate_sweep;
    let plan = plan(cfg, rs.load_grid, n_frames);
    rs.services
        .iter()
        .map(|&service| {
            let model = models.get(service);
            let rates = rate_grid(model, rs.min_rate, rs.fill_step);
            log::info!("{service}: {} rates", rates.len());
            Ok(rate_sweep_segregated(service, model, &rates, &plan)?)
        })
        .collect()
}

pub fn benchmarks(sweeps: &[RateSweep]) -> Result<PerService<Benchmark>> {
    let find = |service: Service| -> Result<Benchmark> {
        let sweep = sweeps
            .iter()
            .find(|s| s.service == service)
            .ok_or_else(|| UsageError(format!("benchmarks need a {service} rate sweep")))?;
        Ok(Benchmark::from_sweep(sweep)?)
    };
    Ok(PerService::new(find(Service::Leo)?, find(Service::Geo)?))
}

#[derive(Debug, Clone, Serialize)]
pub struct RateSummary {
    pub rate: f64,
    pub tau: usize,
    pub de_threshold_g: f64,
    pub de_approx: f64,
    pub peak_throughput: f64,
    pub peak_ci: f64,
    pub peak_load: f64,
    /// `(peak - de_approx) / de_approx`.
    pub relative_gap: f64,
    pub peak_at_edge: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ServiceSummary {
    pub service: Service,
    pub snr_db: f64,
    pub capacity: f64,
    pub benchmark: Option<Benchmark>,
    pub infeasible_rates: Vec<f64>,
    pub rates: Vec<RateSummary>,
}

pub fn rate_summaries(cfg: &RunConfig, sweeps: &[RateSweep]) -> Result<Vec<ServiceSummary>> {
    let models = models(cfg)?;
    Ok(sweeps
        .iter()
        .map(|s| {
            let model = models.get(s.service);
            ServiceSummary {
                service: s.service,
                snr_db: snr(cfg.links.get(s.service)).snr_db,
                capacity: model.capacity(),
                benchmark: Benchmark::from_sweep(s).ok(),
                infeasible_rates: s.infeasible.clone(),
                rates: s
                    .entries
                    .iter()
                    .map(|e| {
                        let peak = e.sweep.peak();
                        RateSummary {
                            rate: e.rate,
                            tau: e.de.tau,
                            de_threshold_g: e.de.threshold_g,
                            de_approx: e.de.approx_max_throughput,
                            peak_throughput: peak.throughput,
                            peak_ci: peak.throughput_ci(),
                            peak_load: peak.load_configured,
                            relative_gap: (peak.throughput - e.de.approx_max_throughput) / e.de.approx_max_throughput,
                            peak_at_edge: e.sweep.peak_at_edge,
                        }
                    })
                    .collect(),
            }
        })
        .collect())
}

fn warn_edges(sweeps: &[RateSweep]) {
    for s in sweeps {
        for e in s.entries.iter().filter(|e| e.sweep.peak_at_edge) {
            log::warn!("{} rate {}: peak at the load grid edge, widen the grid", s.service, e.rate);
        }
    }
}

fn write_rate_sweep(session: &Session, stem: &str, figure: Option<Figure>, sweeps: &[RateSweep]) -> Result<Artifacts> {
    warn_edges(sweeps);
    let cfg = &session.config;
    let rows = rate_sweep_rows(sweeps);
    #[derive(Serialize)]
    struct Summary {
        command: &'static str,
        #[serde(skip_serializing_if = "Option::is_none")]
        figure: Option<&'static str>,
        n_leo_slots: usize,
        frames: usize,
        seed: u64,
        services: Vec<ServiceSummary>,
    }
    let summary = Summary {
        command: if figure.is_some() { "reproduce" } else { "sweep-rate" },
        figure: figure.map(Figure::as_str),
        n_leo_slots: cfg.n_leo_slots,
        frames: cfg.n_frames,
        seed: cfg.seed,
        services: rate_summaries(cfg, sweeps)?,
    };
    emit(&session.out_dir, stem, &rows, SWEEP_RATE_HEADER, &summary)
}

pub fn sweep_rate(session: &Session) -> Result<Artifacts> {
    let sweeps = segregated_sweeps(&session.config, session.config.n_frames)?;
    write_rate_sweep(session, "sweep-rate", None, &sweeps)
}

/// Every `(alpha, R_L)` combination of the configured pair grid.
pub fn pair_combos(cfg: &RunConfig, alphas: &[usize]) -> Result<Vec<(usize, f64)>> {
    let models = models(cfg)?;
    let ps = &cfg.pair_sweep;
    Ok(alphas
        .iter()
        .flat_map(|&a| rate_pair_grid(a, &models, ps.min_geo_rate, ps.fill_step).into_iter().map(move |r| (a, r)))
        .collect())
}

/// Throughput pairs for one beta over the given alphas.
pub fn pairs_for_beta(
    cfg: &RunConfig,
    beta: f64,
    alphas: &[usize],
    benchmark: PerService<f64>,
) -> Result<Vec<PairClassification>> {
    let models = models(cfg)?;
    let combos = pair_combos(cfg, alphas)?;
    if combos.is_empty() {
        return Err(UsageError("the rate-pair grid is empty".into()).into());
    }
    let plan = plan(cfg, LoadGridSpec::Fixed(cfg.load_grid), cfg.n_frames);
    log::info!("beta = {beta}: {} rate pairs", combos.len());
    Ok(pair_sweep_shared(&combos, beta, &models, benchmark, cfg.pair_sweep.pair_mode, &plan)?)
}

/// Benchmark sweeps (both services) followed by the pair sweeps of every beta.
pub fn pair_study(cfg: &RunConfig) -> Result<(Vec<RateSweep>, Vec<PairClassification>)> {
    let mut bench_cfg = cfg.clone();
    bench_cfg.rate_sweep.services = Service::ALL.to_vec();
    let bench_frames = cfg.pair_sweep.benchmark_frames.unwrap_or(cfg.n_frames);
    let sweeps = segregated_sweeps(&bench_cfg, bench_frames)?;
    let bench = benchmarks(&sweeps)?;
    let bench = PerService::new(bench.leo.throughput, bench.geo.throughput);
    let mut pairs = Vec::new();
    for &beta in &cfg.pair_sweep.betas {
        pairs.extend(pairs_for_beta(cfg, beta, &cfg.pair_sweep.alphas, bench)?);
    }
    Ok((sweeps, pairs))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PairPoint {
    pub rate_leo: f64,
    pub rate_geo: f64,
    pub s_leo: f64,
    pub s_geo: f64,
    pub quadrant: Quadrant,
}

impl From<&PairClassification> for PairPoint {
    fn from(p: &PairClassification) -> Self {
        Self { rate_leo: p.rates.leo, rate_geo: p.rates.geo, s_leo: p.throughput.leo, s_geo: p.throughput.geo, quadrant: p.quadrant }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairGroup {
    pub beta: f64,
    pub alpha: usize,
    pub pairs: usize,
    pub quadrants: BTreeMap<&'static str, usize>,
    pub best_leo: PairPoint,
    pub best_geo: PairPoint,
    /// Relative gains of the best coordinates over the benchmarks.
    pub gain_leo: f64,
    pub gain_geo: f64,
    pub edge_pairs: usize,
}

/// Per-(beta, alpha) digest of a pair sweep, in input order.
pub fn pair_groups(pairs: &[PairClassification]) -> Vec<PairGroup> {
    let mut groups: Vec<PairGroup> = Vec::new();
    let mut start = 0;
    while start < pairs.len() {
        let (beta, alpha) = (pairs[start].beta, pairs[start].alpha);
        let end = start + pairs[start..].iter().take_while(|p| p.beta == beta && p.alpha == alpha).count();
        let group = &pairs[start..end];
        let best_by = |f: fn(&PairClassification) -> f64| {
            group.iter().fold(&group[0], |b, p| if f(p) > f(b) { p } else { b })
        };
        let best_leo = best_by(|p| p.throughput.leo);
        let best_geo = best_by(|p| p.throughput.geo);
        let mut quadrants = BTreeMap::new();
        for q in [Quadrant::BothPreferShare, Quadrant::BothPreferSeparate, Quadrant::LeoOnly, Quadrant::GeoOnly] {
            quadrants.insert(q.as_str(), group.iter().filter(|p| p.quadrant == q).count());
        }
        groups.push(PairGroup {
            beta,
            alpha,
            pairs: group.len(),
            quadrants,
            best_leo: best_leo.into(),
            best_geo: best_geo.into(),
            gain_leo: best_leo.throughput.leo / best_leo.benchmark.leo - 1.0,
            gain_geo: best_geo.throughput.geo / best_geo.benchmark.geo - 1.0,
            edge_pairs: group.iter().filter(|p| p.peak_at_edge).count(),
        });
        start = end;
    }
    groups
}

fn write_pair_study(
    session: &Session,
    stem: &str,
    figure: Option<Figure>,
    sweeps: &[RateSweep],
    pairs: &[PairClassification],
) -> Result<Artifacts> {
    warn_edges(sweeps);
    let edges = pairs.iter().filter(|p| p.peak_at_edge).count();
    if edges > 0 {
        log::warn!("{edges} rate pairs peak at the load grid edge");
    }
    let cfg = &session.config;
    let bench = benchmarks(sweeps)?;
    let rows: Vec<SweepPairsRow> = pairs.iter().map(SweepPairsRow::from).collect();
    let bench_rows = rate_sweep_rows(sweeps);
    let bench_stem = format!("{stem}-benchmark");
    let bench_csv = write_csv(&session.out_dir, &bench_stem, &bench_rows, SWEEP_RATE_HEADER)?;
    #[derive(Serialize)]
    struct Summary {
        command: &'static str,
        #[serde(skip_serializing_if = "Option::is_none")]
        figure: Option<&'static str>,
        n_leo_slots: usize,
        frames: usize,
        benchmark_frames: usize,
        seed: u64,
        pair_mode: &'static str,
        benchmarks: PerService<Benchmark>,
        groups: Vec<PairGroup>,
    }
    let summary = Summary {
        command: if figure.is_some() { "reproduce" } else { "sweep-pairs" },
        figure: figure.map(Figure::as_str),
        n_leo_slots: cfg.n_leo_slots,
        frames: cfg.n_frames,
        benchmark_frames: cfg.pair_sweep.benchmark_frames.unwrap_or(cfg.n_frames),
        seed: cfg.seed,
        pair_mode: cfg.pair_sweep.pair_mode.as_str(),
        benchmarks: bench,
        groups: pair_groups(pairs),
    };
    let mut out = emit(&session.out_dir, stem, &rows, SWEEP_PAIRS_HEADER, &summary)?;
    out.files.push(bench_csv);
    Ok(out)
}

pub fn sweep_pairs(session: &Session) -> Result<Artifacts> {
    let (sweeps, pairs) = pair_study(&session.config)?;
    write_pair_study(session, "sweep-pairs", None, &sweeps, &pairs)
}

/// Runs a bundle. Only `--seed`, `--frames`, `--out` and `--pair-mode` are honoured;
/// the configuration file is ignored.
pub fn reproduce(figure: Figure, ov: &Overrides) -> Result<Artifacts> {
    if ov.config.is_some() {
        log::warn!("reproduce uses its bundled configuration; --config is ignored");
    }
    let session = Session::with_config(bundle_config(figure), None, ov);
    let cfg = &session.config;
    match figure {
        Figure::Fig3 => {
            let sweeps = segregated_sweeps(cfg, cfg.n_frames)?;
            write_rate_sweep(&session, figure.as_str(), Some(figure), &sweeps)
        }
        Figure::Fig4 | Figure::Fig6 => {
            let (sweeps, pairs) = pair_study(cfg)?;
            write_pair_study(&session, figure.as_str(), Some(figure), &sweeps, &pairs)
        }
    }
}

/// Exit status for a failed command: 1 for input problems, 2 for everything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let validation = err.chain().any(|c| {
        c.is::<crate::config::ConfigError>() || c.is::<UsageError>() || c.is::<orbitshare::Error>()
    });
    if validation {
        1
    } else {
        2
    }
}
