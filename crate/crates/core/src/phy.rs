//! Treating-interference-as-noise with intra-slot SIC under perfect power control.
//!
//! Every packet arrives with the same power, so a replica overlapped by `h`
//! uncancelled interferers sees mutual information `log2(1 + s / (1 + h s))`,
//! where `s` is the receiver SNR. GEO packets in the shared band span several
//! LEO slots and see the average over their portions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Operator / traffic type. Doubles as the receiver tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Service {
    Leo,
    Geo,
}

impl Service {
    pub const ALL: [Service; 2] = [Service::Leo, Service::Geo];

    pub fn as_str(self) -> &'static str {
        match self {
            Service::Leo => "leo",
            Service::Geo => "geo",
        }
    }
}

impl fmt::Display for Service {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Receiver abstraction: the ratio `P_w / N_w` at receiver `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TinSicModel<T> {
    pub snr_linear: T,
    pub receiver: Service,
}

impl<T: Scalar> TinSicModel<T> {
    pub fn new(snr_linear: T, receiver: Service) -> Result<Self> {
        if !(snr_linear > T::zero()) || !snr_linear.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "snr_linear must be positive and finite, got {snr_linear}"
            )));
        }
        Ok(Self { snr_linear, receiver })
    }

    pub fn from_db(snr_db: T, receiver: Service) -> Result<Self> {
        Self::new(crate::linkbudget::db_to_linear(snr_db), receiver)
    }

    /// Interference-free capacity `log2(1 + s)`.
    pub fn capacity(&self) -> T {
        mutual_info_single(self, 0)
    }
}

/// Channel coding rate in bits per symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate<T> {
    pub bits_per_symbol: T,
    pub service: Service,
}

impl<T: Scalar> Rate<T> {
    pub fn new(bits_per_symbol: T, service: Service) -> Result<Self> {
        if !(bits_per_symbol > T::zero()) || !bits_per_symbol.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "rate must be positive and finite, got {bits_per_symbol}"
            )));
        }
        Ok(Self { bits_per_symbol, service })
    }
}

/// Mutual information of a replica overlapped by `interferers` uncancelled packets.
pub fn mutual_info_single<T: Scalar>(model: &TinSicModel<T>, interferers: usize) -> T {
    let s = model.snr_linear;
    let h = T::from_count(interferers);
    (T::one() + s / (T::one() + h * s)).log2()
}

/// Average mutual information over the portions of a packet spanning several slots.
pub fn mutual_info_segmented<T: Scalar>(
    model: &TinSicModel<T>,
    per_portion_interferers: &[usize],
) -> Result<T> {
    if per_portion_interferers.is_empty() {
        return Err(Error::InvalidArgument(
            "segmented mutual information needs at least one portion".into(),
        ));
    }
    let sum = per_portion_interferers
        .iter()
        .fold(T::zero(), |acc, &h| acc + mutual_info_single(model, h));
    Ok(sum / T::from_count(per_portion_interferers.len()))
}

/// Decoding condition: strictly below the available mutual information.
pub fn decodes<T: Scalar>(rate: &Rate<T>, avg_mutual_info: T) -> bool {
    rate.bits_per_symbol < avg_mutual_info
}

/// Largest number of interferers a packet of this rate survives.
///
/// Closed form first, then nudged by the decoding predicate so the result
/// is exact at floating-point boundaries.
pub fn tau<T: Scalar>(model: &TinSicModel<T>, rate: &Rate<T>) -> Result<usize> {
    let capacity = model.capacity();
    if !decodes(rate, capacity) {
        return Err(Error::InfeasibleRate {
            rate: rate.bits_per_symbol.to_f64().unwrap_or(f64::NAN),
            capacity: capacity.to_f64().unwrap_or(f64::NAN),
        });
    }
    let s = model.snr_linear;
    let bound = (s / (rate.bits_per_symbol.exp2() - T::one()) - T::one()) / s;
    // largest integer strictly below `bound`
    let mut t = if bound.is_finite() {
        let c = bound.ceil() - T::one();
        c.max(T::zero()).to_usize().unwrap_or(usize::MAX / 2)
    } else {
        usize::MAX / 2
    };
    while t > 0 && !decodes(rate, mutual_info_single(model, t)) {
        t -= 1;
    }
    while decodes(rate, mutual_info_single(model, t + 1)) {
        t += 1;
    }
    Ok(t)
}

/// Rate boundaries `log2(1 + s/(1 + h s))` for `h = 0, 1, ...` down to `min_rate`.
///
/// Entry `h` is the supremum of rates that tolerate `h` interferers.
pub fn tau_boundaries<T: Scalar>(model: &TinSicModel<T>, min_rate: T) -> Vec<T> {
    (0..)
        .map(|h| mutual_info_single(model, h))
        .take_while(|&c| c > min_rate)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    // 5.36 dB
    const S_LEO: f64 = 3.4355794789987466;

    fn leo() -> TinSicModel<f64> {
        TinSicModel::new(S_LEO, Service::Leo).unwrap()
    }

    fn rate(r: f64) -> Rate<f64> {
        Rate::new(r, Service::Leo).unwrap()
    }

    fn tau_scan(model: &TinSicModel<f64>, r: &Rate<f64>) -> Option<usize> {
        if !decodes(r, mutual_info_single(model, 0)) {
            return None;
        }
        let mut t = 0;
        while decodes(r, mutual_info_single(model, t + 1)) {
            t += 1;
        }
        Some(t)
    }

    #[test]
    fn single_portion_values() {
        let unit = TinSicModel::new(1.0, Service::Leo).unwrap();
        assert_eq!(mutual_info_single(&unit, 0), 1.0);
        // log2(1 + s/(1+s)) at 5.36 dB
        assert_abs_diff_eq!(mutual_info_single(&leo(), 1), 0.8274534799943063, epsilon = 1e-12);
        let mut prev = mutual_info_single(&leo(), 0);
        for h in 1..10_000 {
            let v = mutual_info_single(&leo(), h);
            assert!(v < prev && v > 0.0);
            prev = v;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn segmented_values() {
        let unit = TinSicModel::new(1.0, Service::Geo).unwrap();
        let v = mutual_info_segmented(&unit, &[0, 1]).unwrap();
        assert_abs_diff_eq!(v, (1.0 + 1.5f64.log2()) / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.7924812503605781, epsilon = 1e-12);
        let flat = mutual_info_segmented(&leo(), &[3; 4]).unwrap();
        assert_abs_diff_eq!(flat, mutual_info_single(&leo(), 3), epsilon = 1e-15);
        assert!(mutual_info_segmented(&leo(), &[]).is_err());
        assert_eq!(
            mutual_info_segmented(&leo(), &[2]).unwrap(),
            mutual_info_single(&leo(), 2)
        );
    }

    #[test]
    fn decoding_is_strict() {
        assert!(!decodes(&rate(0.5), 0.5));
        assert!(decodes(&rate(0.1), 1.0));
        let i1 = mutual_info_single(&leo(), 1);
        assert!(!decodes(&rate(i1), i1));
        assert!(!decodes(&rate(0.8275), i1));
        assert!(decodes(&rate(0.8274), i1));
    }

    #[test]
    fn tau_examples() {
        assert_eq!(tau(&leo(), &rate(1.0)).unwrap(), 0);
        assert_eq!(tau(&leo(), &rate(0.6)).unwrap(), 1);
        assert!(matches!(tau(&leo(), &rate(2.2)), Err(Error::InfeasibleRate { .. })));
        // exactly at a boundary the packet no longer survives that many interferers
        let c2 = mutual_info_single(&leo(), 2);
        assert_eq!(tau(&leo(), &rate(c2)).unwrap(), 1);
        assert_eq!(tau(&leo(), &rate(c2 - 1e-9)).unwrap(), 2);
        assert!(tau(&leo(), &rate(leo().capacity())).is_err());
    }

    #[test]
    fn tau_matches_scan_on_random_inputs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let s = 10f64.powf(rng.random_range(-1.5..2.0));
            let m = TinSicModel::new(s, Service::Geo).unwrap();
            let r = rate(rng.random_range(0.01..1.2) * m.capacity());
            assert_eq!(tau(&m, &r).ok(), tau_scan(&m, &r), "s={s} r={r:?}");
        }
    }

    #[test]
    fn boundaries_list() {
        let b = tau_boundaries(&leo(), 0.5);
        assert_eq!(b.len(), 3);
        assert_abs_diff_eq!(b[0], leo().capacity());
        for (h, c) in b.iter().enumerate() {
            assert_eq!(tau(&leo(), &rate(c - 1e-9)).unwrap(), h);
        }
    }

    proptest! {
        #[test]
        fn tau_is_tight(s in 0.05f64..100.0, frac in 0.001f64..0.999) {
            let m = TinSicModel::new(s, Service::Leo).unwrap();
            let r = rate(frac * m.capacity());
            let t = tau(&m, &r).unwrap();
            prop_assert!(decodes(&r, mutual_info_single(&m, t)));
            prop_assert!(!decodes(&r, mutual_info_single(&m, t + 1)));
        }

        #[test]
        fn tau_monotone(s in 0.05f64..100.0, a in 0.01f64..0.99, b in 0.01f64..0.99, k in 1.0f64..5.0) {
            let m = TinSicModel::new(s, Service::Leo).unwrap();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let r_lo = rate(lo * m.capacity());
            let r_hi = rate(hi * m.capacity());
            prop_assert!(tau(&m, &r_lo).unwrap() >= tau(&m, &r_hi).unwrap());
            let stronger = TinSicModel::new(s * k, Service::Leo).unwrap();
            prop_assert!(tau(&stronger, &r_hi).unwrap() >= tau(&m, &r_hi).unwrap());
        }

        #[test]
        fn segmented_is_permutation_invariant(mut hs in proptest::collection::vec(0usize..20, 1..16)) {
            let a = mutual_info_segmented(&leo(), &hs).unwrap();
            hs.reverse();
            let b = mutual_info_segmented(&leo(), &hs).unwrap();
            hs.sort();
            let c = mutual_info_segmented(&leo(), &hs).unwrap();
            prop_assert!((a - b).abs() < 1e-14 && (a - c).abs() < 1e-14);
        }
    }
}
