use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phy::Service;

/// Slot structure of a shared MAC frame: `n_leo_slots = alpha * n_geo_slots`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameGeometry {
    n_leo_slots: usize,
    alpha: usize,
}

impl FrameGeometry {
    pub fn new(n_leo_slots: usize, alpha: usize) -> Result<Self> {
        if n_leo_slots == 0 || alpha == 0 {
            return Err(Error::InvalidArgument(
                "n_leo_slots and alpha must be positive".into(),
            ));
        }
        if n_leo_slots % alpha != 0 {
            return Err(Error::InvalidArgument(format!(
                "alpha = {alpha} does not divide n_leo_slots = {n_leo_slots}"
            )));
        }
        Ok(Self { n_leo_slots, alpha })
    }

    pub fn n_leo_slots(&self) -> usize {
        self.n_leo_slots
    }

    pub fn n_geo_slots(&self) -> usize {
        self.n_leo_slots / self.alpha
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    /// LEO slots spanned by GEO slot `geo_slot`.
    pub fn covered_leo_slots(&self, geo_slot: usize) -> Range<usize> {
        geo_slot * self.alpha..(geo_slot + 1) * self.alpha
    }

    /// Load in LEO-slot units: `(u_leo + alpha * u_geo) / n_leo_slots`.
    pub fn load(&self, u_leo: usize, u_geo: usize) -> f64 {
        (u_leo + self.alpha * u_geo) as f64 / self.n_leo_slots as f64
    }
}

/// One active user: its service and the two slots carrying its replicas, indexed
/// in the service's own slot system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserPlacement {
    pub service: Service,
    pub slots: [u32; 2],
}

/// All users of one frame; the user id is the index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FramePlacement {
    pub users: Vec<UserPlacement>,
}

impl FramePlacement {
    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn count(&self, service: Service) -> usize {
        self.users.iter().filter(|u| u.service == service).count()
    }
}

fn two_distinct<R: Rng + ?Sized>(rng: &mut R, n: usize) -> [u32; 2] {
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    [a as u32, b as u32]
}

fn push_users<R: Rng + ?Sized>(
    users: &mut Vec<UserPlacement>,
    service: Service,
    count: usize,
    n_slots: usize,
    rng: &mut R,
) -> Result<()> {
    if count == 0 {
        return Ok(());
    }
    if n_slots < 2 {
        return Err(Error::TooFewSlots { service: service.as_str(), slots: n_slots });
    }
    users.extend((0..count).map(|_| UserPlacement { service, slots: two_distinct(rng, n_slots) }));
    Ok(())
}

/// Places the replicas of a shared-band frame: LEO users first, then GEO users.
pub fn generate_frame<R: Rng + ?Sized>(
    geometry: &FrameGeometry,
    u_leo: usize,
    u_geo: usize,
    rng: &mut R,
) -> Result<FramePlacement> {
    let mut users = Vec::with_capacity(u_leo + u_geo);
    push_users(&mut users, Service::Leo, u_leo, geometry.n_leo_slots(), rng)?;
    push_users(&mut users, Service::Geo, u_geo, geometry.n_geo_slots(), rng)?;
    Ok(FramePlacement { users })
}

/// Places a single-service frame on its own channel of `n_slots` slots.
pub fn generate_segregated_frame<R: Rng + ?Sized>(
    service: Service,
    n_slots: usize,
    users: usize,
    rng: &mut R,
) -> Result<FramePlacement> {
    let mut out = Vec::with_capacity(users);
    push_users(&mut out, service, users, n_slots, rng)?;
    Ok(FramePlacement { users: out })
}
