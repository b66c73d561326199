use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::frame::{generate_frame, generate_segregated_frame, FrameGeometry};
use super::peel::{sic_decode_scenario_a, SharedDecoder};
use super::PerService;
use crate::error::{Error, Result};
use crate::phy::Service;
use crate::rng::frame_rng;

/// 97.5% standard normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

/// Band arrangement: each operator on its own channel, or both on both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Band {
    /// Scenario (a): segregated bands, half the total bandwidth per service.
    #[serde(rename = "a")]
    Segregated,
    /// Scenario (b): both services coexist over the whole band.
    #[serde(rename = "b")]
    Shared,
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Band::Segregated => "a",
            Band::Shared => "b",
        })
    }
}

/// Normalized throughput in b/s/Hz. `load_own` is the service's users per own slot.
pub fn throughput(band: Band, rate: f64, load_own: f64, p_s: f64) -> f64 {
    match band {
        Band::Segregated => 0.5 * rate * load_own * p_s,
        Band::Shared => rate * load_own * p_s,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegregatedScenario {
    pub service: Service,
    pub n_slots: usize,
    pub users: usize,
    pub tau: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SharedScenario {
    pub geometry: FrameGeometry,
    pub populations: PerService<usize>,
    pub decoder: SharedDecoder,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Segregated(SegregatedScenario),
    Shared(SharedScenario),
}

impl Scenario {
    pub fn band(&self) -> Band {
        match self {
            Scenario::Segregated(_) => Band::Segregated,
            Scenario::Shared(_) => Band::Shared,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceEstimate {
    pub service: Service,
    /// Users of this service decoded at this service's own satellite.
    pub decoded: u64,
    pub offered: u64,
    pub p_s: f64,
    /// Normal-approximation 95% half-width over per-frame success fractions;
    /// NaN for a single frame.
    pub ci_half_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessEstimate {
    pub n_frames: usize,
    pub leo: Option<ServiceEstimate>,
    pub geo: Option<ServiceEstimate>,
}

impl SuccessEstimate {
    pub fn get(&self, service: Service) -> Option<&ServiceEstimate> {
        match service {
            Service::Leo => self.leo.as_ref(),
            Service::Geo => self.geo.as_ref(),
        }
    }
}

fn summarize(service: Service, per_frame: &[u64], offered_per_frame: u64) -> ServiceEstimate {
    let n = per_frame.len();
    let decoded: u64 = per_frame.iter().sum();
    let offered = offered_per_frame * n as u64;
    let p_s = decoded as f64 / offered as f64;
    let ci_half_width = if n < 2 {
        f64::NAN
    } else {
        let var = per_frame
            .iter()
            .map(|&d| {
                let x = d as f64 / offered_per_frame as f64 - p_s;
                x * x
            })
            .sum::<f64>()
            / (n - 1) as f64;
        Z_95 * (var / n as f64).sqrt()
    };
    ServiceEstimate { service, decoded, offered, p_s, ci_half_width }
}

/// Success probability of each active service over `n_frames` independent frames.
///
/// Frame `i` draws from stream `i` of `master_seed`, and per-frame counts are
/// reduced in frame order, so the result does not depend on the thread count.
pub fn estimate_success(
    scenario: &Scenario,
    n_frames: usize,
    master_seed: u64,
) -> Result<SuccessEstimate> {
    if n_frames == 0 {
        return Err(Error::InvalidArgument("n_frames must be at least 1".into()));
    }
    match scenario {
        Scenario::Segregated(sc) => {
            if sc.users == 0 {
                return Err(Error::InvalidArgument("segregated scenario needs at least one user".into()));
            }
            let per_frame = (0..n_frames as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = frame_rng(master_seed, i);
                    let placement = generate_segregated_frame(sc.service, sc.n_slots, sc.users, &mut rng)?;
                    Ok(sic_decode_scenario_a(&placement, sc.tau, sc.n_slots).decoded.len() as u64)
                })
                .collect::<Result<Vec<u64>>>()?;
            let est = summarize(sc.service, &per_frame, sc.users as u64);
            let (leo, geo) = match sc.service {
                Service::Leo => (Some(est), None),
                Service::Geo => (None, Some(est)),
            };
            Ok(SuccessEstimate { n_frames, leo, geo })
        }
        Scenario::Shared(sc) => {
            let pops = sc.populations;
            if pops.leo + pops.geo == 0 {
                return Err(Error::InvalidArgument("shared scenario needs at least one user".into()));
            }
            let per_frame = (0..n_frames as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = frame_rng(master_seed, i);
                    let placement = generate_frame(&sc.geometry, pops.leo, pops.geo, &mut rng)?;
                    let mut own = [0u64; 2];
                    for (k, service) in Service::ALL.into_iter().enumerate() {
                        if *pops.get(service) == 0 {
                            continue;
                        }
                        let out = sc.decoder.decode_at(service, &placement, &sc.geometry);
                        own[k] = out.decoded.count_service(&placement, service) as u64;
                    }
                    Ok(own)
                })
                .collect::<Result<Vec<[u64; 2]>>>()?;
            let column = |k: usize| per_frame.iter().map(|c| c[k]).collect::<Vec<u64>>();
            let leo = (pops.leo > 0).then(|| summarize(Service::Leo, &column(0), pops.leo as u64));
            let geo = (pops.geo > 0).then(|| summarize(Service::Geo, &column(1), pops.geo as u64));
            Ok(SuccessEstimate { n_frames, leo, geo })
        }
    }
}
