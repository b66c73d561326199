//! Experiment orchestration: load sweeps, per-rate peak search, rate sweeps
//! and shared-band throughput pairs.
//!
//! Every load point is one job. Its random stream is derived from the master
//! seed and the point's index on the load grid, so two sweeps over the same
//! grid see the same frames whatever the rate (common random numbers).

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deanalysis::{threshold, DeConfig, DeResult};
use crate::error::{Error, Result};
use crate::macsim::{
    estimate_success, throughput, Band, FrameGeometry, PerService, Scenario, SegregatedScenario,
    SharedDecoder, SharedScenario, SuccessEstimate,
};
use crate::phy::{decodes, mutual_info_single, tau, tau_boundaries, Rate, Service, TinSicModel};
use crate::rng::job_seed;

/// Offset below each capacity boundary at which rate grids sample.
pub const BOUNDARY_EPSILON: f64 = 1e-6;

/// Uniform load grid `start + i * step` for `i = 0..` while the point stays `<= stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl LoadGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        let grid = Self { start, stop, step };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start > 0.0 && self.start.is_finite()) {
            return Err(Error::InvalidArgument(format!("load grid start must be positive, got {}", self.start)));
        }
        if !(self.stop >= self.start && self.stop.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "load grid stop {} is below start {}",
                self.stop, self.start
            )));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidArgument(format!("load grid step must be positive, got {}", self.step)));
        }
        Ok(())
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn len(&self) -> usize {
        // tolerate representation error at the upper end
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Same start and step, span doubled.
    pub fn extended(&self) -> Self {
        Self { stop: self.stop + (self.point(self.len() - 1) - self.start) + self.step, ..*self }
    }
}

impl Default for LoadGrid {
    fn default() -> Self {
        Self { start: 0.1, stop: 4.0, step: 0.05 }
    }
}

/// How the load grid of a segregated-band sweep is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LoadGridSpec {
    Fixed(LoadGrid),
    /// `[lower, upper]` times the DE threshold of the rate's `tau`, step `step` times the threshold.
    DeCentred { lower: f64, upper: f64, step: f64 },
}

impl LoadGridSpec {
    fn validate(&self) -> Result<()> {
        match *self {
            LoadGridSpec::Fixed(g) => g.validate(),
            LoadGridSpec::DeCentred { lower, upper, step } => {
                LoadGrid { start: lower, stop: upper, step }.validate()
            }
        }
    }

    fn resolve(&self, g_star: Option<f64>) -> Result<LoadGrid> {
        match (*self, g_star) {
            (LoadGridSpec::Fixed(g), _) => Ok(g),
            (LoadGridSpec::DeCentred { lower, upper, step }, Some(g)) => {
                LoadGrid::new(lower * g, upper * g, step * g)
            }
            (LoadGridSpec::DeCentred { .. }, None) => Err(Error::InvalidArgument(
                "a DE-centred load grid needs a segregated-band operating point".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub n_leo_slots: usize,
    pub load_grid: LoadGridSpec,
    pub n_frames: usize,
    pub master_seed: u64,
    /// Times the grid may be doubled when the peak sits on its upper edge.
    pub max_extensions: usize,
    /// Stop a load scan once every service's throughput is below this
    /// fraction of its running peak. `None` scans the whole grid.
    pub collapse_ratio: Option<f64>,
    pub de: DeConfig<f64>,
}

impl Default for SweepPlan {
    fn default() -> Self {
        Self {
            n_leo_slots: 400,
            load_grid: LoadGridSpec::Fixed(LoadGrid::default()),
            n_frames: 2000,
            master_seed: 1,
            max_extensions: 4,
            collapse_ratio: None,
            de: DeConfig::default(),
        }
    }
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        if self.n_leo_slots < 2 {
            return Err(Error::InvalidArgument("n_leo_slots must be at least 2".into()));
        }
        if self.n_frames == 0 {
            return Err(Error::InvalidArgument("n_frames must be at least 1".into()));
        }
        if let Some(r) = self.collapse_ratio {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::InvalidArgument(format!("collapse_ratio must lie in (0, 1), got {r}")));
            }
        }
        self.load_grid.validate()?;
        self.de.validate()
    }
}

/// User counts for a target shared-band load.
///
/// `u_geo = round(g N_L / (beta + alpha))`, `u_leo = round(beta u_geo)`; the
/// returned load is recomputed from the rounded counts.
pub fn populations_for_load(
    g: f64,
    beta: f64,
    alpha: usize,
    n_leo_slots: usize,
) -> Result<(usize, usize, f64)> {
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::InvalidArgument(format!("load must be positive, got {g}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    let u_geo = (g * n_leo_slots as f64 / (beta + alpha as f64)).round() as usize;
    if u_geo == 0 {
        return Err(Error::DegenerateLoad { load: g, service: "geo" });
    }
    let u_leo = (beta * u_geo as f64).round() as usize;
    if u_leo == 0 {
        return Err(Error::DegenerateLoad { load: g, service: "leo" });
    }
    let actual = (u_leo + alpha * u_geo) as f64 / n_leo_slots as f64;
    Ok((u_leo, u_geo, actual))
}

/// Users of a single service alone on `n_slots` slots: `round(g n_slots)`.
pub fn segregated_population(g: f64, service: Service, n_slots: usize) -> Result<(usize, f64)> {
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::InvalidArgument(format!("load must be positive, got {g}")));
    }
    let u = (g * n_slots as f64).round() as usize;
    if u == 0 {
        return Err(Error::DegenerateLoad { load: g, service: service.as_str() });
    }
    Ok((u, u as f64 / n_slots as f64))
}

/// One simulated (rate, load) sample for one service.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputPoint {
    pub band: Band,
    pub service: Service,
    pub rate: f64,
    /// Interferers tolerated at the service's own receiver.
    pub tau: Option<usize>,
    pub alpha: usize,
    pub beta: Option<f64>,
    pub load_configured: f64,
    pub load_actual: f64,
    pub u_leo: usize,
    pub u_geo: usize,
    /// Slots per frame in the service's own slot system.
    pub own_slots: usize,
    pub p_s: f64,
    /// 95% half-width on `p_s`.
    pub ci_half_width: f64,
    pub throughput: f64,
    pub is_peak: bool,
}

impl ThroughputPoint {
    pub fn own_users(&self) -> usize {
        match self.service {
            Service::Leo => self.u_leo,
            Service::Geo => self.u_geo,
        }
    }

    pub fn load_own(&self) -> f64 {
        self.own_users() as f64 / self.own_slots as f64
    }

    /// Half-width of the throughput confidence interval.
    pub fn throughput_ci(&self) -> f64 {
        throughput(self.band, self.rate, self.load_own(), self.ci_half_width)
    }

    /// Whether `throughput` is exactly the formula applied to the stored inputs.
    pub fn is_consistent(&self) -> bool {
        self.throughput == throughput(self.band, self.rate, self.load_own(), self.p_s)
    }
}

/// All samples of one service's load scan and its maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSweep {
    pub points: Vec<ThroughputPoint>,
    pub peak_index: usize,
    /// The maximum is the first or last evaluated point of the grid.
    pub peak_at_edge: bool,
    /// Grid loads where rounding left a population empty.
    pub skipped_loads: Vec<f64>,
}

impl LoadSweep {
    pub fn peak(&self) -> &ThroughputPoint {
        &self.points[self.peak_index]
    }
}

/// A fixed rate configuration whose throughput is scanned over load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatingPoint {
    Segregated { service: Service, model: TinSicModel<f64>, rate: f64 },
    Shared {
        alpha: usize,
        beta: f64,
        models: PerService<TinSicModel<f64>>,
        rates: PerService<f64>,
    },
}

impl OperatingPoint {
    fn services(&self) -> Vec<Service> {
        match self {
            OperatingPoint::Segregated { service, .. } => vec![*service],
            OperatingPoint::Shared { .. } => Service::ALL.to_vec(),
        }
    }
}

/// Per-service load scans of one operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakSearch {
    pub leo: Option<LoadSweep>,
    pub geo: Option<LoadSweep>,
    /// Grid indices evaluated, aligned with each sweep's points.
    pub loads: Vec<f64>,
}

impl PeakSearch {
    pub fn get(&self, service: Service) -> Option<&LoadSweep> {
        match service {
            Service::Leo => self.leo.as_ref(),
            Service::Geo => self.geo.as_ref(),
        }
    }
}

struct LoadSample {
    configured: f64,
    actual: f64,
    u_leo: usize,
    u_geo: usize,
    estimate: SuccessEstimate,
}

fn simulate_load(point: &OperatingPoint, g: f64, seed: u64, plan: &SweepPlan) -> Result<LoadSample> {
    match *point {
        OperatingPoint::Segregated { service, model, rate } => {
            let n = plan.n_leo_slots;
            let (u, actual) = segregated_population(g, service, n)?;
            let t = tau(&model, &Rate::new(rate, service)?)?;
            let scenario = Scenario::Segregated(SegregatedScenario { service, n_slots: n, users: u, tau: t });
            let estimate = estimate_success(&scenario, plan.n_frames, seed)?;
            let (u_leo, u_geo) = match service {
                Service::Leo => (u, 0),
                Service::Geo => (0, u),
            };
            Ok(LoadSample { configured: g, actual, u_leo, u_geo, estimate })
        }
        OperatingPoint::Shared { alpha, beta, models, rates } => {
            let geometry = FrameGeometry::new(plan.n_leo_slots, alpha)?;
            let (u_leo, u_geo, actual) = populations_for_load(g, beta, alpha, plan.n_leo_slots)?;
            let rates = PerService::new(
                Rate::new(rates.leo, Service::Leo)?,
                Rate::new(rates.geo, Service::Geo)?,
            );
            let decoder = SharedDecoder::new(&models, &rates, u_leo + u_geo + 1);
            let scenario = Scenario::Shared(SharedScenario {
                geometry,
                populations: PerService::new(u_leo, u_geo),
                decoder,
            });
            let estimate = estimate_success(&scenario, plan.n_frames, seed)?;
            Ok(LoadSample { configured: g, actual, u_leo, u_geo, estimate })
        }
    }
}

fn to_point(point: &OperatingPoint, service: Service, sample: &LoadSample, plan: &SweepPlan) -> Result<ThroughputPoint> {
    let est = sample
        .estimate
        .get(service)
        .ok_or_else(|| Error::InvalidArgument(format!("no {service} users were simulated")))?;
    let (band, rate, model, alpha, beta, own_slots) = match *point {
        OperatingPoint::Segregated { model, rate, .. } => {
            (Band::Segregated, rate, model, 1, None, plan.n_leo_slots)
        }
        OperatingPoint::Shared { alpha, beta, models, rates } => {
            let own = match service {
                Service::Leo => plan.n_leo_slots,
                Service::Geo => plan.n_leo_slots / alpha,
            };
            (Band::Shared, *rates.get(service), *models.get(service), alpha, Some(beta), own)
        }
    };
    let tau = tau(&model, &Rate::new(rate, service)?).ok();
    let own_users = match service {
        Service::Leo => sample.u_leo,
        Service::Geo => sample.u_geo,
    };
    let load_own = own_users as f64 / own_slots as f64;
    Ok(ThroughputPoint {
        band,
        service,
        rate,
        tau,
        alpha,
        beta,
        load_configured: sample.configured,
        load_actual: sample.actual,
        u_leo: sample.u_leo,
        u_geo: sample.u_geo,
        own_slots,
        p_s: est.p_s,
        ci_half_width: est.ci_half_width,
        throughput: throughput(band, rate, load_own, est.p_s),
        is_peak: false,
    })
}

/// Simulates one load with the stream of grid index `job`; one point per active service.
pub fn evaluate_load(point: &OperatingPoint, g: f64, job: u64, plan: &SweepPlan) -> Result<Vec<ThroughputPoint>> {
    plan.validate()?;
    if let OperatingPoint::Shared { alpha, beta, models, rates } = point {
        validate_pair(*alpha, *beta, models, rates)?;
    }
    let sample = simulate_load(point, g, job_seed(plan.master_seed, job), plan)?;
    point.services().into_iter().map(|s| to_point(point, s, &sample, plan)).collect()
}

/// Index of the largest throughput; the first one wins ties.
fn argmax(points: &[ThroughputPoint]) -> usize {
    let mut best = 0;
    for (i, p) in points.iter().enumerate() {
        if p.throughput > points[best].throughput {
            best = i;
        }
    }
    best
}

fn scan_load(point: &OperatingPoint, grid: LoadGrid, plan: &SweepPlan) -> Result<PeakSearch> {
    let services = point.services();
    let mut grid = grid;
    let mut extensions = 0;
    let mut per_service: Vec<Vec<ThroughputPoint>> = vec![Vec::new(); services.len()];
    let mut loads = Vec::new();
    let mut skipped = Vec::new();
    let mut last_idx = None;
    let mut collapsed = false;
    let mut idx = 0;
    loop {
        if idx >= grid.len() {
            let at_upper = !per_service[0].is_empty()
                && per_service
                    .iter()
                    .any(|pts| argmax(pts) == pts.len() - 1 && Some(idx - 1) == last_idx);
            if at_upper && grid.len() >= 2 && extensions < plan.max_extensions {
                grid = grid.extended();
                extensions += 1;
                continue;
            }
            break;
        }
        let g = grid.point(idx);
        let sample = match simulate_load(point, g, job_seed(plan.master_seed, idx as u64), plan) {
            Ok(s) => s,
            Err(Error::DegenerateLoad { .. }) => {
                skipped.push(g);
                idx += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        for (k, &service) in services.iter().enumerate() {
            per_service[k].push(to_point(point, service, &sample, plan)?);
        }
        loads.push(g);
        last_idx = Some(idx);
        idx += 1;
        if let Some(ratio) = plan.collapse_ratio {
            let all_down = per_service.iter().all(|pts| {
                let peak = pts[argmax(pts)].throughput;
                peak > 0.0 && pts[pts.len() - 1].throughput < ratio * peak
            });
            if all_down {
                collapsed = true;
                break;
            }
        }
    }
    if loads.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "every load of the grid [{}, {}] leaves a population empty",
            grid.start, grid.stop
        )));
    }
    let mut sweeps = services.iter().zip(per_service).map(|(&service, mut points)| {
        let peak_index = argmax(&points);
        points[peak_index].is_peak = true;
        let last = points.len() - 1;
        let sweep = LoadSweep {
            peak_at_edge: peak_index == 0 || (peak_index == last && !collapsed),
            peak_index,
            points,
            skipped_loads: skipped.clone(),
        };
        (service, sweep)
    });
    let mut out = PeakSearch { leo: None, geo: None, loads };
    for (service, sweep) in sweeps.by_ref() {
        match service {
            Service::Leo => out.leo = Some(sweep),
            Service::Geo => out.geo = Some(sweep),
        }
    }
    Ok(out)
}

/// Scans throughput over the plan's load grid and marks each service's maximum.
///
/// A DE-centred grid is resolved from the threshold of the segregated rate's `tau`.
pub fn peak_over_load(point: &OperatingPoint, plan: &SweepPlan) -> Result<PeakSearch> {
    plan.validate()?;
    let g_star = match *point {
        OperatingPoint::Segregated { service, model, rate } => {
            let t = tau(&model, &Rate::new(rate, service)?)?;
            matches!(plan.load_grid, LoadGridSpec::DeCentred { .. }).then(|| threshold(t, &plan.de))
        }
        OperatingPoint::Shared { alpha, beta, models, rates } => {
            validate_pair(alpha, beta, &models, &rates)?;
            None
        }
    };
    scan_load(point, plan.load_grid.resolve(g_star)?, plan)
}

fn validate_pair(
    alpha: usize,
    beta: f64,
    models: &PerService<TinSicModel<f64>>,
    rates: &PerService<f64>,
) -> Result<()> {
    if alpha == 0 {
        return Err(Error::InvalidArgument("alpha must be at least 1".into()));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    for service in Service::ALL {
        let rate = Rate::new(*rates.get(service), service)?;
        tau(models.get(service), &rate)?;
    }
    Ok(())
}

/// Rates just below each capacity boundary of `model`, down to `min_rate`,
/// optionally merged with a uniform fill `fill_step, 2 fill_step, ...` below capacity.
pub fn rate_grid(model: &TinSicModel<f64>, min_rate: f64, fill_step: Option<f64>) -> Vec<f64> {
    let mut rates: Vec<f64> = tau_boundaries(model, min_rate + BOUNDARY_EPSILON)
        .into_iter()
        .map(|b| b - BOUNDARY_EPSILON)
        .collect();
    if let Some(step) = fill_step {
        let cap = model.capacity();
        rates.extend(
            (1..)
                .map(|k| k as f64 * step)
                .take_while(|&r| r < cap)
                .filter(|&r| r >= min_rate),
        );
    }
    sort_dedup(rates)
}

fn sort_dedup(mut rates: Vec<f64>) -> Vec<f64> {
    rates.sort_by(f64::total_cmp);
    rates.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    rates
}

/// One rate of a segregated-band rate sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSweepEntry {
    pub rate: f64,
    pub de: DeResult<f64>,
    pub sweep: LoadSweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSweep {
    pub service: Service,
    pub entries: Vec<RateSweepEntry>,
    /// Grid rates at or above the single-user capacity.
    pub infeasible: Vec<f64>,
}

impl RateSweep {
    /// Entry with the largest simulated peak.
    pub fn best(&self) -> Option<&RateSweepEntry> {
        self.entries.iter().fold(None, |best: Option<&RateSweepEntry>, e| match best {
            Some(b) if b.sweep.peak().throughput >= e.sweep.peak().throughput => Some(b),
            _ => Some(e),
        })
    }
}

/// Thresholds for every `tau` reached by `rates`, computed concurrently.
fn thresholds_for(taus: impl Iterator<Item = usize>, cfg: &DeConfig<f64>) -> BTreeMap<usize, f64> {
    let mut unique: Vec<usize> = taus.collect();
    unique.sort_unstable();
    unique.dedup();
    unique.into_par_iter().map(|t| (t, threshold(t, cfg))).collect::<Vec<_>>().into_iter().collect()
}

/// Peak throughput per rate in the segregated band, with the DE approximation alongside.
pub fn rate_sweep_segregated(
    service: Service,
    model: &TinSicModel<f64>,
    rates: &[f64],
    plan: &SweepPlan,
) -> Result<RateSweep> {
    plan.validate()?;
    if rates.is_empty() {
        return Err(Error::InvalidArgument("rate grid is empty".into()));
    }
    let mut feasible = Vec::new();
    let mut infeasible = Vec::new();
    for &r in rates {
        let rate = Rate::new(r, service)?;
        match tau(model, &rate) {
            Ok(t) => feasible.push((r, t)),
            Err(Error::InfeasibleRate { .. }) => infeasible.push(r),
            Err(e) => return Err(e),
        }
    }
    let g_stars = thresholds_for(feasible.iter().map(|&(_, t)| t), &plan.de);
    let entries = feasible
        .par_iter()
        .map(|&(r, t)| {
            let g_star = g_stars[&t];
            let point = OperatingPoint::Segregated { service, model: *model, rate: r };
            let grid = plan.load_grid.resolve(Some(g_star))?;
            let search = scan_load(&point, grid, plan)?;
            let sweep = search.get(service).cloned().expect("segregated scan covers its service");
            let de = DeResult { tau: t, threshold_g: g_star, approx_max_throughput: r * g_star / 2.0 };
            Ok(RateSweepEntry { rate: r, de, sweep })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateSweep { service, entries, infeasible })
}

/// Segregated-band reference: the best simulated peak over a rate sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Benchmark {
    pub rate: f64,
    pub throughput: f64,
}

impl Benchmark {
    pub fn from_sweep(sweep: &RateSweep) -> Result<Self> {
        let best = sweep
            .best()
            .ok_or_else(|| Error::InvalidArgument(format!("{} rate sweep has no feasible rate", sweep.service)))?;
        Ok(Self { rate: best.rate, throughput: best.sweep.peak().throughput })
    }
}

/// Which operator gains from sharing the band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quadrant {
    BothPreferShare,
    BothPreferSeparate,
    LeoOnly,
    GeoOnly,
}

impl Quadrant {
    /// Strict comparison of each coordinate against its benchmark.
    pub fn classify(s: PerService<f64>, benchmark: PerService<f64>) -> Self {
        match (s.leo > benchmark.leo, s.geo > benchmark.geo) {
            (true, true) => Quadrant::BothPreferShare,
            (false, false) => Quadrant::BothPreferSeparate,
            (true, false) => Quadrant::LeoOnly,
            (false, true) => Quadrant::GeoOnly,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Quadrant::BothPreferShare => "both-prefer-share",
            Quadrant::BothPreferSeparate => "both-prefer-separate",
            Quadrant::LeoOnly => "leo-only",
            Quadrant::GeoOnly => "geo-only",
        }
    }
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How a rate pair's throughput pair is read off its load scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairMode {
    /// Each service's own maximum over the common scan, at its own load.
    #[default]
    PerServiceArgmax,
    /// Both services at one common load, the one maximizing `S_L + S_G`.
    SharedSweep,
}

impl PairMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PairMode::PerServiceArgmax => "per-service-argmax",
            PairMode::SharedSweep => "shared-sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairClassification {
    pub alpha: usize,
    pub beta: f64,
    pub rates: PerService<f64>,
    pub throughput: PerService<f64>,
    /// Configured loads at which each coordinate was read.
    pub loads: PerService<f64>,
    pub benchmark: PerService<f64>,
    pub quadrant: Quadrant,
    pub peak_at_edge: bool,
}

/// Reads the throughput pair of one shared-band scan.
pub fn read_pair(search: &PeakSearch, mode: PairMode) -> Result<(PerService<f64>, PerService<f64>)> {
    let (leo, geo) = match (&search.leo, &search.geo) {
        (Some(l), Some(g)) => (l, g),
        _ => return Err(Error::InvalidArgument("pair reading needs both services".into())),
    };
    match mode {
        PairMode::PerServiceArgmax => Ok((
            PerService::new(leo.peak().throughput, geo.peak().throughput),
            PerService::new(leo.peak().load_configured, geo.peak().load_configured),
        )),
        PairMode::SharedSweep => {
            let mut best = 0;
            let sum = |i: usize| leo.points[i].throughput + geo.points[i].throughput;
            for i in 1..leo.points.len() {
                if sum(i) > sum(best) {
                    best = i;
                }
            }
            let g = leo.points[best].load_configured;
            Ok((
                PerService::new(leo.points[best].throughput, geo.points[best].throughput),
                PerService::new(g, g),
            ))
        }
    }
}

/// LEO rates for the pairs `(R_L, R_L / alpha)` with `R_G >= min_geo_rate`:
/// boundaries of the LEO receiver, `alpha` times the boundaries of the GEO
/// receiver, and an optional uniform fill of `R_L`. Only pairs decodable at
/// both own receivers are kept.
pub fn rate_pair_grid(
    alpha: usize,
    models: &PerService<TinSicModel<f64>>,
    min_geo_rate: f64,
    fill_step: Option<f64>,
) -> Vec<f64> {
    let a = alpha as f64;
    let min_leo_rate = a * min_geo_rate;
    let mut rates = rate_grid(&models.leo, min_leo_rate, fill_step);
    rates.extend(rate_grid(&models.geo, min_geo_rate, None).into_iter().map(|r| a * r));
    rates.retain(|&r| {
        r >= min_leo_rate
            && decodes(&Rate { bits_per_symbol: r, service: Service::Leo }, mutual_info_single(&models.leo, 0))
            && decodes(&Rate { bits_per_symbol: r / a, service: Service::Geo }, mutual_info_single(&models.geo, 0))
    });
    sort_dedup(rates)
}

/// Shared-band throughput pairs over `(alpha, R_L)` combinations, classified
/// against the segregated-band benchmarks. Output is ordered by alpha then rate.
pub fn pair_sweep_shared(
    combos: &[(usize, f64)],
    beta: f64,
    models: &PerService<TinSicModel<f64>>,
    benchmark: PerService<f64>,
    mode: PairMode,
    plan: &SweepPlan,
) -> Result<Vec<PairClassification>> {
    plan.validate()?;
    let LoadGridSpec::Fixed(grid) = plan.load_grid else {
        return Err(Error::InvalidArgument("shared-band sweeps need a fixed load grid".into()));
    };
    let mut combos = combos.to_vec();
    combos.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
    combos
        .par_iter()
        .map(|&(alpha, rate_leo)| {
            let rates = PerService::new(rate_leo, rate_leo / alpha as f64);
            validate_pair(alpha, beta, models, &rates)?;
            FrameGeometry::new(plan.n_leo_slots, alpha)?;
            let point = OperatingPoint::Shared { alpha, beta, models: *models, rates };
            let search = scan_load(&point, grid, plan)?;
            let (throughput, loads) = read_pair(&search, mode)?;
            let peak_at_edge = Service::ALL
                .iter()
                .any(|&s| search.get(s).is_some_and(|sw| sw.peak_at_edge));
            Ok(PairClassification {
                alpha,
                beta,
                rates,
                throughput,
                loads,
                benchmark,
                quadrant: Quadrant::classify(throughput, benchmark),
                peak_at_edge,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn models() -> PerService<TinSicModel<f64>> {
        PerService::new(
            TinSicModel::from_db(5.36, Service::Leo).unwrap(),
            TinSicModel::from_db(-2.99, Service::Geo).unwrap(),
        )
    }

    #[test]
    fn population_rounding() {
        assert_eq!(populations_for_load(1.0, 1.0, 8, 400).unwrap(), (44, 44, 0.99));
        assert_eq!(populations_for_load(1.2, 4.0, 8, 400).unwrap(), (160, 40, 1.2));
        assert_eq!(segregated_population(0.5, Service::Leo, 400).unwrap(), (200, 0.5));
        assert!(matches!(
            populations_for_load(0.001, 1.0, 8, 400),
            Err(Error::DegenerateLoad { service: "geo", .. })
        ));
        assert!(matches!(
            populations_for_load(0.003, 0.25, 1, 400),
            Err(Error::DegenerateLoad { service: "leo", .. })
        ));
    }

    #[test]
    fn grid_points_and_extension() {
        let g = LoadGrid::new(0.1, 4.0, 0.05).unwrap();
        assert_eq!(g.len(), 79);
        let e = g.extended();
        assert_eq!(e.len(), 158);
        assert_eq!(e.point(78), g.point(78));
        assert_eq!(LoadGrid::new(0.5, 0.5, 0.1).unwrap().len(), 1);
        assert!(LoadGrid::new(0.0, 1.0, 0.1).is_err());
        assert!(LoadGrid::new(1.0, 0.5, 0.1).is_err());
    }

    #[test]
    fn quadrants_are_strict() {
        let b = PerService::new(0.5, 0.4);
        assert_eq!(Quadrant::classify(PerService::new(0.6, 0.5), b), Quadrant::BothPreferShare);
        assert_eq!(Quadrant::classify(PerService::new(0.5, 0.4), b), Quadrant::BothPreferSeparate);
        assert_eq!(Quadrant::classify(PerService::new(0.6, 0.4), b), Quadrant::LeoOnly);
        assert_eq!(Quadrant::classify(PerService::new(0.1, 0.41), b), Quadrant::GeoOnly);
    }

    #[test]
    fn rate_grids_stay_feasible() {
        let m = models();
        let g = rate_grid(&m.leo, 0.1, None);
        assert!((g[g.len() - 1] - (m.leo.capacity() - BOUNDARY_EPSILON)).abs() < 1e-15);
        assert!(g.iter().all(|&r| r >= 0.1 && r < m.leo.capacity()));
        let pairs = rate_pair_grid(8, &m, 0.05, Some(0.02));
        assert!(pairs.iter().all(|&r| r >= 0.4));
        assert!(pairs.iter().all(|&r| r < m.leo.capacity() && r / 8.0 < m.geo.capacity()));
        assert!(pairs.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn single_point_grid_is_an_edge() {
        let plan = SweepPlan {
            load_grid: LoadGridSpec::Fixed(LoadGrid::new(0.3, 0.3, 0.1).unwrap()),
            n_frames: 20,
            ..SweepPlan::default()
        };
        let point = OperatingPoint::Segregated { service: Service::Leo, model: models().leo, rate: 1.0 };
        let search = peak_over_load(&point, &plan).unwrap();
        let sweep = search.leo.unwrap();
        assert_eq!(sweep.points.len(), 1);
        assert!(sweep.peak_at_edge && sweep.points[0].is_peak);
        assert!(sweep.points[0].is_consistent());
    }

    #[test]
    fn low_load_throughput_is_linear() {
        let plan = SweepPlan {
            load_grid: LoadGridSpec::Fixed(LoadGrid::new(0.025, 0.1, 0.025).unwrap()),
            n_frames: 2000,
            max_extensions: 0,
            ..SweepPlan::default()
        };
        let point = OperatingPoint::Segregated { service: Service::Leo, model: models().leo, rate: 1.0 };
        let sweep = peak_over_load(&point, &plan).unwrap().leo.unwrap();
        for p in &sweep.points {
            let ideal = 0.5 * p.rate * p.load_actual;
            // two users on the same slot pair form the dominant stopping set
            let n = p.own_slots as f64;
            let floor = 2.0 * (p.u_leo as f64 - 1.0) / (n * (n - 1.0));
            assert!((p.throughput - ideal).abs() <= p.throughput_ci() + 2.0 * floor * ideal, "{p:?}");
        }
        assert!(sweep.peak_at_edge);
    }
}
