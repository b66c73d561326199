//! Free-space link budget: received power, thermal noise and SNR per receiver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Boltzmann constant in dBW/K/Hz.
pub const BOLTZMANN_DBW: f64 = -228.6;

/// Physical parameters of one uplink, stored in the units of the reference table
/// (transmit power in dBm, not dBW).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams<T> {
    pub tx_power_dbm: T,
    pub tx_gain_dbi: T,
    pub rx_gain_dbi: T,
    pub path_loss_db: T,
    pub noise_temp_dbk: T,
    pub bandwidth_hz: T,
    /// Informational only; free-space loss is given directly.
    pub carrier_freq_hz: T,
    /// Forces the resulting SNR, bypassing the budget.
    pub snr_override_db: Option<T>,
}

impl<T: Scalar> LinkParams<T> {
    /// LEO uplink of the reference system (OneWeb-like receiver).
    pub fn reference_leo() -> Self {
        Self {
            tx_power_dbm: T::lit(23.0),
            tx_gain_dbi: T::zero(),
            rx_gain_dbi: T::lit(24.2),
            path_loss_db: T::lit(161.4),
            noise_temp_dbk: T::lit(26.4),
            bandwidth_hz: T::lit(180e3),
            carrier_freq_hz: T::lit(2e9),
            snr_override_db: None,
        }
    }

    /// GEO uplink of the reference system (Inmarsat-F2-like receiver).
    pub fn reference_geo() -> Self {
        Self {
            rx_gain_dbi: T::lit(43.6),
            path_loss_db: T::lit(190.6),
            noise_temp_dbk: T::lit(25.0),
            ..Self::reference_leo()
        }
    }

    pub fn with_snr_override(mut self, snr_db: T) -> Self {
        self.snr_override_db = Some(snr_db);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("tx_power_dbm", self.tx_power_dbm),
            ("tx_gain_dbi", self.tx_gain_dbi),
            ("rx_gain_dbi", self.rx_gain_dbi),
            ("path_loss_db", self.path_loss_db),
            ("noise_temp_dbk", self.noise_temp_dbk),
            ("bandwidth_hz", self.bandwidth_hz),
            ("carrier_freq_hz", self.carrier_freq_hz),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be finite, got {v}")));
            }
        }
        if let Some(v) = self.snr_override_db {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "snr_override_db must be finite, got {v}"
                )));
            }
        }
        if self.bandwidth_hz <= T::zero() {
            return Err(Error::InvalidArgument(format!(
                "bandwidth_hz must be positive, got {}",
                self.bandwidth_hz
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudgetResult<T> {
    /// `None` when the SNR was overridden.
    pub rx_power_dbw: Option<T>,
    /// `None` when the SNR was overridden.
    pub noise_power_dbw: Option<T>,
    pub snr_db: T,
    pub snr_linear: T,
}

/// Received power in dBW: EIRP plus receive gain minus free-space loss.
pub fn received_power<T: Scalar>(params: &LinkParams<T>) -> T {
    (params.tx_power_dbm - T::lit(30.0)) + params.tx_gain_dbi + params.rx_gain_dbi
        - params.path_loss_db
}

/// Thermal noise power `k T B` in dBW.
pub fn noise_power<T: Scalar>(params: &LinkParams<T>) -> T {
    T::lit(BOLTZMANN_DBW) + params.noise_temp_dbk + params.bandwidth_hz.log10() * T::lit(10.0)
}

pub fn db_to_linear<T: Scalar>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

pub fn linear_to_db<T: Scalar>(lin: T) -> T {
    lin.log10() * T::lit(10.0)
}

pub fn snr<T: Scalar>(params: &LinkParams<T>) -> LinkBudgetResult<T> {
    match params.snr_override_db {
        Some(snr_db) => LinkBudgetResult {
            rx_power_dbw: None,
            noise_power_dbw: None,
            snr_db,
            snr_linear: db_to_linear(snr_db),
        },
        None => {
            let rx = received_power(params);
            let noise = noise_power(params);
            let snr_db = rx - noise;
            LinkBudgetResult {
                rx_power_dbw: Some(rx),
                noise_power_dbw: Some(noise),
                snr_db,
                snr_linear: db_to_linear(snr_db),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn received_power_reference_rows() {
        assert_abs_diff_eq!(received_power(&LinkParams::<f64>::reference_leo()), -144.2, epsilon = 1e-9);
        assert_abs_diff_eq!(received_power(&LinkParams::<f64>::reference_geo()), -154.0, epsilon = 1e-9);

        let unit = LinkParams {
            tx_power_dbm: 30.0,
            tx_gain_dbi: 0.0,
            rx_gain_dbi: 0.0,
            path_loss_db: 0.0,
            noise_temp_dbk: 0.0,
            bandwidth_hz: 1.0,
            carrier_freq_hz: 0.0,
            snr_override_db: None,
        };
        assert_eq!(received_power(&unit), 0.0);
        assert_abs_diff_eq!(noise_power(&unit), -228.6, epsilon = 1e-12);
    }

    #[test]
    fn noise_power_reference_rows() {
        // 10 log10(180e3) = 52.5527...
        assert_abs_diff_eq!(noise_power(&LinkParams::<f64>::reference_leo()), -149.6473, epsilon = 1e-4);
        assert_abs_diff_eq!(noise_power(&LinkParams::<f64>::reference_geo()), -151.0473, epsilon = 1e-4);
    }

    #[test]
    fn snr_reference_rows() {
        let leo = snr(&LinkParams::<f64>::reference_leo());
        let geo = snr(&LinkParams::<f64>::reference_geo());
        assert_abs_diff_eq!(leo.snr_db, 5.4473, epsilon = 1e-4);
        assert_abs_diff_eq!(geo.snr_db, -2.9527, epsilon = 1e-4);
        assert!((leo.snr_db - 5.36).abs() <= 0.15);
        assert!((geo.snr_db + 2.99).abs() <= 0.15);
        assert_eq!(leo.snr_db, leo.rx_power_dbw.unwrap() - leo.noise_power_dbw.unwrap());
    }

    #[test]
    fn override_passes_through() {
        let r = snr(&LinkParams::<f64>::reference_leo().with_snr_override(5.36));
        assert_eq!(r.snr_db, 5.36);
        assert_eq!(r.rx_power_dbw, None);
        assert_eq!(r.noise_power_dbw, None);
        assert_abs_diff_eq!(r.snr_linear, 3.4355794789987466, epsilon = 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let r = snr(&LinkParams::<f32>::reference_leo());
        assert!((r.snr_db - 5.4473).abs() < 1e-3);
    }

    #[test]
    fn validation() {
        let mut p = LinkParams::<f64>::reference_leo();
        assert!(p.validate().is_ok());
        p.bandwidth_hz = 0.0;
        assert!(p.validate().is_err());
        p = LinkParams::reference_geo();
        p.path_loss_db = f64::NAN;
        assert!(p.validate().is_err());
    }

    proptest! {
        #[test]
        fn gain_and_noise_shift_snr_one_for_one(x in -30.0f64..30.0) {
            let base = LinkParams::<f64>::reference_leo();
            let s0 = snr(&base).snr_db;
            let more_gain = LinkParams { rx_gain_dbi: base.rx_gain_dbi + x, ..base };
            let hotter = LinkParams { noise_temp_dbk: base.noise_temp_dbk + x, ..base };
            prop_assert!((snr(&more_gain).snr_db - (s0 + x)).abs() < 1e-9);
            prop_assert!((snr(&hotter).snr_db - (s0 - x)).abs() < 1e-9);
        }

        #[test]
        fn linear_round_trip(db in -40.0f64..40.0) {
            let r = snr(&LinkParams::<f64>::reference_leo().with_snr_override(db));
            prop_assert!(r.snr_linear > 0.0);
            let back = db_to_linear(linear_to_db(r.snr_linear));
            prop_assert!(((back - r.snr_linear) / r.snr_linear).abs() < 1e-12);
        }
    }
}
