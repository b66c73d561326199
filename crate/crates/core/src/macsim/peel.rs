//! Iterative SIC over one frame.
//!
//! Both decoders work in passes: collect everything decodable against the
//! interference state at the start of the pass, cancel it, repeat until a pass
//! finds nothing. Only slots touched by the previous pass are revisited.

use serde::{Deserialize, Serialize};

use super::frame::{FrameGeometry, FramePlacement};
use super::PerService;
use crate::error::Result;
use crate::phy::{decodes, mutual_info_single, tau, Rate, Service, TinSicModel};

/// Set of decoded user ids over a frame's population.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodedSet {
    flags: Vec<bool>,
    count: usize,
}

impl DecodedSet {
    pub fn empty(n_users: usize) -> Self {
        Self { flags: vec![false; n_users], count: 0 }
    }

    fn insert(&mut self, user: usize) -> bool {
        if self.flags[user] {
            return false;
        }
        self.flags[user] = true;
        self.count += 1;
        true
    }

    pub fn contains(&self, user: usize) -> bool {
        self.flags.get(user).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Size of the population the set ranges over.
    pub fn universe(&self) -> usize {
        self.flags.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.flags.iter().enumerate().filter(|(_, &d)| d).map(|(i, _)| i)
    }

    /// Decoded users of `service`.
    pub fn count_service(&self, placement: &FramePlacement, service: Service) -> usize {
        self.iter().filter(|&u| placement.users[u].service == service).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeelOutcome {
    pub decoded: DecodedSet,
    /// Passes run, including the final one that decoded nothing.
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SicOutcome {
    pub decoded_at_leo: DecodedSet,
    pub decoded_at_geo: DecodedSet,
    pub iterations: PerService<usize>,
}

impl SicOutcome {
    pub fn at(&self, receiver: Service) -> &DecodedSet {
        match receiver {
            Service::Leo => &self.decoded_at_leo,
            Service::Geo => &self.decoded_at_geo,
        }
    }
}

/// Slot -> users incidence in compressed rows.
struct Incidence {
    start: Vec<u32>,
    users: Vec<u32>,
}

impl Incidence {
    fn build(n_slots: usize, entries: impl Iterator<Item = (usize, usize)> + Clone) -> Self {
        let mut start = vec![0u32; n_slots + 1];
        for (slot, _) in entries.clone() {
            start[slot + 1] += 1;
        }
        for i in 0..n_slots {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut users = vec![0u32; start[n_slots] as usize];
        for (slot, user) in entries {
            users[fill[slot] as usize] = user as u32;
            fill[slot] += 1;
        }
        Self { start, users }
    }

    fn degree(&self, slot: usize) -> u32 {
        self.start[slot + 1] - self.start[slot]
    }

    fn users(&self, slot: usize) -> &[u32] {
        &self.users[self.start[slot] as usize..self.start[slot + 1] as usize]
    }
}

/// Tracks slots touched in the current pass.
struct DirtySet {
    marked: Vec<bool>,
    list: Vec<usize>,
}

impl DirtySet {
    fn all(n: usize) -> Self {
        Self { marked: vec![true; n], list: (0..n).collect() }
    }

    fn mark(&mut self, slot: usize) {
        if !self.marked[slot] {
            self.marked[slot] = true;
            self.list.push(slot);
        }
    }

    fn take(&mut self) -> Vec<usize> {
        for &s in &self.list {
            self.marked[s] = false;
        }
        std::mem::take(&mut self.list)
    }
}

/// Segregated-band peeling: a slot with `1..=tau+1` uncancelled replicas is
/// resolved entirely by intra-slot SIC, and each decoded user's twin replica
/// is cancelled.
pub fn sic_decode_scenario_a(placement: &FramePlacement, tau: usize, n_slots: usize) -> PeelOutcome {
    let n_users = placement.len();
    let incidence = Incidence::build(
        n_slots,
        placement
            .users
            .iter()
            .enumerate()
            .flat_map(|(u, p)| p.slots.iter().map(move |&s| (s as usize, u))),
    );
    let mut counts: Vec<u32> = (0..n_slots).map(|s| incidence.degree(s)).collect();
    let mut decoded = DecodedSet::empty(n_users);
    let mut dirty = DirtySet::all(n_slots);
    let mut fresh = Vec::new();
    let limit = tau as u64 + 1;
    let mut iterations = 0;

    loop {
        iterations += 1;
        fresh.clear();
        for s in dirty.take() {
            let c = counts[s] as u64;
            if c == 0 || c > limit {
                continue;
            }
            for &u in incidence.users(s) {
                if decoded.insert(u as usize) {
                    fresh.push(u as usize);
                }
            }
        }
        if fresh.is_empty() {
            break;
        }
        for &u in &fresh {
            for &s in &placement.users[u].slots {
                counts[s as usize] -= 1;
                dirty.mark(s as usize);
            }
        }
    }
    PeelOutcome { decoded, iterations }
}

/// Decoding rule of one satellite receiver for mixed traffic.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverRule {
    model: TinSicModel<f64>,
    /// Interferers a LEO packet survives here; `None` if it never decodes.
    leo_tau: Option<usize>,
    geo_rate: Rate<f64>,
    geo_feasible: bool,
    /// `mutual_info_single(model, h)` cache.
    mi: Vec<f64>,
}

impl ReceiverRule {
    pub fn new(model: TinSicModel<f64>, rates: &PerService<Rate<f64>>, table_len: usize) -> Self {
        let mi: Vec<f64> = (0..table_len.max(1)).map(|h| mutual_info_single(&model, h)).collect();
        Self {
            model,
            leo_tau: tau(&model, &rates.leo).ok(),
            geo_rate: rates.geo,
            geo_feasible: decodes(&rates.geo, mi[0]),
            mi,
        }
    }

    pub fn leo_tau(&self) -> Option<usize> {
        self.leo_tau
    }

    fn mi(&self, h: u32) -> f64 {
        match self.mi.get(h as usize) {
            Some(&v) => v,
            None => mutual_info_single(&self.model, h as usize),
        }
    }

    /// Whether a GEO packet spanning LEO slots with these occupancies decodes.
    /// Summed in slot order, matching `mutual_info_segmented`.
    fn geo_decodable(&self, span_counts: &[u32]) -> bool {
        let sum = span_counts.iter().fold(0.0, |acc, &c| acc + self.mi(c - 1));
        decodes(&self.geo_rate, sum / span_counts.len() as f64)
    }
}

/// Both receivers' rules for a given rate pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedDecoder {
    pub rules: PerService<ReceiverRule>,
}

impl SharedDecoder {
    /// `table_len` sizes the mutual-information cache (the frame population is a safe choice).
    pub fn new(
        models: &PerService<TinSicModel<f64>>,
        rates: &PerService<Rate<f64>>,
        table_len: usize,
    ) -> Self {
        Self {
            rules: PerService::new(
                ReceiverRule::new(models.leo, rates, table_len),
                ReceiverRule::new(models.geo, rates, table_len),
            ),
        }
    }

    pub fn decode(&self, placement: &FramePlacement, geometry: &FrameGeometry) -> SicOutcome {
        let inc = SharedIncidence::build(placement, geometry);
        let leo = peel_shared(placement, geometry, &inc, &self.rules.leo);
        let geo = peel_shared(placement, geometry, &inc, &self.rules.geo);
        SicOutcome {
            decoded_at_leo: leo.decoded,
            decoded_at_geo: geo.decoded,
            iterations: PerService::new(leo.iterations, geo.iterations),
        }
    }

    pub fn decode_at(
        &self,
        receiver: Service,
        placement: &FramePlacement,
        geometry: &FrameGeometry,
    ) -> PeelOutcome {
        let inc = SharedIncidence::build(placement, geometry);
        peel_shared(placement, geometry, &inc, self.rules.get(receiver))
    }
}

/// Users per slot, each service in its own slot system.
struct SharedIncidence {
    leo: Incidence,
    geo: Incidence,
}

impl SharedIncidence {
    fn build(placement: &FramePlacement, geometry: &FrameGeometry) -> Self {
        let of = |service: Service| {
            placement
                .users
                .iter()
                .enumerate()
                .filter(move |(_, p)| p.service == service)
                .flat_map(|(u, p)| p.slots.into_iter().map(move |s| (s as usize, u)))
        };
        Self {
            leo: Incidence::build(geometry.n_leo_slots(), of(Service::Leo)),
            geo: Incidence::build(geometry.n_geo_slots(), of(Service::Geo)),
        }
    }
}

/// All GEO replicas in one GEO slot span the same LEO slots and so see the same
/// interference; a GEO slot is therefore resolved as a whole, like a LEO slot.
fn peel_shared(
    placement: &FramePlacement,
    geometry: &FrameGeometry,
    inc: &SharedIncidence,
    rule: &ReceiverRule,
) -> PeelOutcome {
    let alpha = geometry.alpha();
    let n_leo = geometry.n_leo_slots();
    let n_geo = geometry.n_geo_slots();
    let users = &placement.users;

    // uncancelled replicas of either service overlapping each LEO slot
    let mut counts: Vec<u32> =
        (0..n_leo).map(|s| inc.leo.degree(s) + inc.geo.degree(s / alpha)).collect();
    let mut geo_left: Vec<u32> = (0..n_geo).map(|j| inc.geo.degree(j)).collect();
    let mut decoded = DecodedSet::empty(users.len());
    let mut dirty_leo = DirtySet::all(n_leo);
    let mut dirty_geo = DirtySet::all(n_geo);
    let mut fresh = Vec::new();
    let mut iterations = 0;

    loop {
        iterations += 1;
        fresh.clear();
        let leo_slots = dirty_leo.take();
        if let Some(t) = rule.leo_tau {
            for s in leo_slots {
                let c = counts[s];
                if c == 0 || (c - 1) as usize > t {
                    continue;
                }
                for &u in inc.leo.users(s) {
                    if decoded.insert(u as usize) {
                        fresh.push(u as usize);
                    }
                }
            }
        }
        let geo_slots = dirty_geo.take();
        if rule.geo_feasible {
            for j in geo_slots {
                if geo_left[j] == 0 || !rule.geo_decodable(&counts[j * alpha..(j + 1) * alpha]) {
                    continue;
                }
                for &u in inc.geo.users(j) {
                    if decoded.insert(u as usize) {
                        fresh.push(u as usize);
                    }
                }
            }
        }
        if fresh.is_empty() {
            break;
        }
        for &u in &fresh {
            let p = &users[u];
            for &slot in &p.slots {
                let slot = slot as usize;
                match p.service {
                    Service::Leo => {
                        counts[slot] -= 1;
                        dirty_leo.mark(slot);
                        dirty_geo.mark(slot / alpha);
                    }
                    Service::Geo => {
                        geo_left[slot] -= 1;
                        dirty_geo.mark(slot);
                        for c in &mut counts[slot * alpha..(slot + 1) * alpha] {
                            *c -= 1;
                        }
                        for s in slot * alpha..(slot + 1) * alpha {
                            dirty_leo.mark(s);
                        }
                    }
                }
            }
        }
    }
    PeelOutcome { decoded, iterations }
}

/// Shared-band SIC at both satellites.
pub fn sic_decode_scenario_b(
    placement: &FramePlacement,
    geometry: &FrameGeometry,
    rates: &PerService<Rate<f64>>,
    models: &PerService<TinSicModel<f64>>,
) -> Result<SicOutcome> {
    let decoder = SharedDecoder::new(models, rates, placement.len() + 1);
    Ok(decoder.decode(placement, geometry))
}
