//! Frame-level CRDSA Monte Carlo: replica placement and iterative SIC.
//!
//! Two settings are modelled. In the segregated band each operator runs CRDSA
//! alone on its own channel and a slot with up to `tau + 1` replicas is fully
//! resolved. In the shared band LEO and GEO users coexist on one channel; a
//! GEO packet lasts `alpha` LEO slots, and each satellite runs SIC over both
//! traffic types using its own SNR.

mod estimate;
mod frame;
mod peel;

pub use estimate::{
    estimate_success, throughput, Band, Scenario, SegregatedScenario, ServiceEstimate,
    SharedScenario, SuccessEstimate,
};
pub use frame::{
    generate_frame, generate_segregated_frame, FrameGeometry, FramePlacement, UserPlacement,
};
pub use peel::{
    sic_decode_scenario_a, sic_decode_scenario_b, DecodedSet, PeelOutcome, ReceiverRule,
    SharedDecoder, SicOutcome,
};

use serde::{Deserialize, Serialize};

use crate::phy::Service;

/// A value per operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerService<T> {
    pub leo: T,
    pub geo: T,
}

impl<T> PerService<T> {
    pub fn new(leo: T, geo: T) -> Self {
        Self { leo, geo }
    }

    pub fn get(&self, service: Service) -> &T {
        match service {
            Service::Leo => &self.leo,
            Service::Geo => &self.geo,
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(Service, &T) -> U) -> PerService<U> {
        PerService { leo: f(Service::Leo, &self.leo), geo: f(Service::Geo, &self.geo) }
    }
}
