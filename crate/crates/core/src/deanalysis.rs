//! Density evolution for two-replica CRDSA with intra-slot multi-packet reception.
//!
//! Slot degrees are Poisson with mean `2G` on the edge perspective and every
//! user node has degree two, so the user-to-slot update is the identity and
//! the whole recursion collapses to `q <- f_s(q; G)`. The load threshold is the
//! largest `G` with `x > f_s(x; G)` on `(0, 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phy::{tau, Rate, TinSicModel};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeConfig<T> {
    /// Uniform x-grid size for the threshold predicate.
    pub grid_points: usize,
    pub fp_tolerance: T,
    pub max_iterations: usize,
    /// Absolute tolerance on the load threshold.
    pub bisection_tolerance: T,
}

impl<T: Scalar> Default for DeConfig<T> {
    fn default() -> Self {
        Self {
            grid_points: 10_000,
            fp_tolerance: T::lit(1e-10),
            max_iterations: 100_000,
            bisection_tolerance: T::lit(1e-4),
        }
    }
}

impl<T: Scalar> DeConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let tol_ok = |t: T| t > T::zero() && t <= T::lit(1e-3);
        if self.grid_points < 1_000 {
            return Err(Error::InvalidArgument(format!(
                "grid_points must be at least 1000, got {}",
                self.grid_points
            )));
        }
        if self.max_iterations < 1_000 {
            return Err(Error::InvalidArgument(format!(
                "max_iterations must be at least 1000, got {}",
                self.max_iterations
            )));
        }
        if !tol_ok(self.fp_tolerance) || !tol_ok(self.bisection_tolerance) {
            return Err(Error::InvalidArgument("tolerances must lie in (0, 1e-3]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeResult<T> {
    pub tau: usize,
    pub threshold_g: T,
    /// `R G* / 2`, segregated-band normalization.
    pub approx_max_throughput: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeIteration<T> {
    pub residual_erasure: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Probability that a replica in a slot of degree `d` stays erased when each of
/// its `d - 1` interferers is still present with probability `q`.
pub fn slot_erasure_given_degree<T: Scalar>(q: T, d: usize, tau: usize) -> T {
    assert!(d >= 1, "slot degree seen from an edge is at least one");
    if d <= tau {
        return T::zero();
    }
    let n = d - 1;
    let p = T::one() - q;
    // binomial pmf by recurrence, starting at r = 0
    let mut term = p.powi(n as i32);
    let mut cdf = term;
    for r in 0..tau.min(n) {
        if p == T::zero() {
            term = if r + 1 == n { T::one() } else { T::zero() };
        } else {
            term = term * T::from_count(n - r) / T::from_count(r + 1) * q / p;
        }
        cdf = cdf + term;
    }
    (T::one() - cdf).max(T::zero())
}

/// `P(X > tau)` for `X ~ Poisson(mean)`, with pmf terms formed in log space.
fn poisson_upper_tail<T: Scalar>(mean: T, tau: usize) -> T {
    if mean <= T::zero() {
        return T::zero();
    }
    let ln_mean = mean.ln();
    if mean < T::from_count(tau + 1) {
        // pmf decreases past tau: sum the tail directly
        let first = tau + 1;
        let ln_fact = (1..=first).fold(T::zero(), |acc, r| acc + T::from_count(r).ln());
        let mut term = (T::from_count(first) * ln_mean - mean - ln_fact).exp();
        let mut sum = T::zero();
        let mut r = first;
        while term > sum * T::epsilon() * T::lit(0.5) && term > T::min_positive_value() {
            sum = sum + term;
            r += 1;
            term = term * mean / T::from_count(r);
        }
        sum
    } else {
        let mut ln_fact = T::zero();
        let mut cdf = T::zero();
        for r in 0..=tau {
            if r > 0 {
                ln_fact = ln_fact + T::from_count(r).ln();
            }
            cdf = cdf + (T::from_count(r) * ln_mean - mean - ln_fact).exp();
        }
        (T::one() - cdf).max(T::zero())
    }
}

/// Slot-to-user erasure probability averaged over the Poisson slot degrees.
pub fn slot_erasure_avg<T: Scalar>(q: T, g: T, tau: usize) -> T {
    poisson_upper_tail(T::lit(2.0) * g * q, tau)
}

/// Runs the recursion from `q = 1` until successive iterates are within tolerance.
///
/// Near the threshold the map contracts with a ratio close to one, so a small
/// step alone does not bound the distance to the fixed point. The iteration
/// also requires the geometric estimate `step * r / (1 - r)` of the remaining
/// distance to be within tolerance, where `r` is the ratio of successive steps.
pub fn de_iterate<T: Scalar>(g: T, tau: usize, cfg: &DeConfig<T>) -> DeIteration<T> {
    let mut q = T::one();
    let mut prev_step = T::infinity();
    for i in 1..=cfg.max_iterations {
        let next = slot_erasure_avg(q, g, tau);
        let step = (next - q).abs();
        q = next;
        let ratio = if prev_step > T::zero() { step / prev_step } else { T::zero() };
        let remaining = if ratio < T::one() { step * ratio / (T::one() - ratio) } else { T::infinity() };
        if step == T::zero() || (step < cfg.fp_tolerance && remaining < cfg.fp_tolerance) {
            return DeIteration { residual_erasure: q, iterations: i, converged: true };
        }
        prev_step = step;
    }
    DeIteration { residual_erasure: q, iterations: cfg.max_iterations, converged: false }
}

/// `min_x x - f_s(x; G)` over a grid, refined by golden-section search near the grid minimum.
fn min_gap<T: Scalar>(g: T, tau: usize, grid_points: usize) -> T {
    let lo = T::lit(1e-6);
    let hi = T::one() - lo;
    let step = (hi - lo) / T::from_count(grid_points - 1);
    let gap = |x: T| x - slot_erasure_avg(x, g, tau);

    let mut best_i = 0;
    let mut best = T::infinity();
    for i in 0..grid_points {
        let v = gap(lo + step * T::from_count(i));
        if v < best {
            best = v;
            best_i = i;
        }
    }

    let mut a = lo + step * T::from_count(best_i.saturating_sub(1));
    let mut b = (lo + step * T::from_count(best_i + 1)).min(hi);
    let inv_phi = T::lit(0.618_033_988_749_894_9);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let (mut fc, mut fd) = (gap(c), gap(d));
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = gap(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = gap(d);
        }
    }
    best.min(fc).min(fd)
}

/// Whether the erasure probability is driven to zero at load `g`.
pub fn is_admissible<T: Scalar>(g: T, tau: usize, cfg: &DeConfig<T>) -> bool {
    min_gap(g, tau, cfg.grid_points) > T::zero()
}

/// Decoding threshold `G*` for a receiver tolerating `tau` interferers per slot.
pub fn threshold<T: Scalar>(tau: usize, cfg: &DeConfig<T>) -> T {
    let mut lo = T::zero();
    let mut hi = T::one();
    while is_admissible(hi, tau, cfg) {
        lo = hi;
        hi = hi * T::lit(2.0);
    }
    while hi - lo > cfg.bisection_tolerance {
        let mid = (lo + hi) * T::lit(0.5);
        if is_admissible(mid, tau, cfg) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * T::lit(0.5)
}

/// Asymptotic peak throughput in the segregated band: `R G* / 2`.
pub fn approx_max_throughput<T: Scalar>(
    rate: &Rate<T>,
    model: &TinSicModel<T>,
    cfg: &DeConfig<T>,
) -> Result<DeResult<T>> {
    let t = tau(model, rate)?;
    let g_star = threshold(t, cfg);
    Ok(DeResult {
        tau: t,
        threshold_g: g_star,
        approx_max_throughput: rate.bits_per_symbol * g_star / T::lit(2.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::Service;
    use approx::assert_abs_diff_eq;

    fn cfg() -> DeConfig<f64> {
        DeConfig::default()
    }

    #[test]
    fn given_degree_values() {
        assert_eq!(slot_erasure_given_degree(0.0, 5, 0), 0.0);
        assert_eq!(slot_erasure_given_degree(1.0, 3, 0), 1.0);
        assert_abs_diff_eq!(slot_erasure_given_degree(0.5, 3, 1), 0.25, epsilon = 1e-15);
        assert_eq!(slot_erasure_given_degree(0.9, 2, 2), 0.0);
        assert_eq!(slot_erasure_given_degree(1.0, 4, 2), 1.0);
        assert_eq!(slot_erasure_given_degree(1.0, 3, 2), 0.0);
        assert_eq!(slot_erasure_given_degree(0.3, 1, 0), 0.0);
    }

    #[test]
    fn averaged_values() {
        assert_eq!(slot_erasure_avg(0.0, 1.3, 2), 0.0);
        for &(q, g) in &[(0.1f64, 0.3f64), (0.5, 1.0), (1.0, 2.5)] {
            assert_abs_diff_eq!(
                slot_erasure_avg(q, g, 0),
                1.0 - (-2.0 * g * q).exp(),
                epsilon = 1e-15
            );
        }
        // 1 - e^{-1} (1 + 1)
        assert_abs_diff_eq!(slot_erasure_avg(0.5, 1.0, 1), 0.26424111765711533, epsilon = 1e-14);
    }

    #[test]
    fn tail_is_accurate_for_tiny_means() {
        // P(X > 3) for mean 1e-3 ~ mean^4 / 24
        let v: f64 = slot_erasure_avg(1e-3, 0.5, 3);
        assert!((v / (1e-12 / 24.0) - 1.0).abs() < 1e-2);
        assert!(v > 0.0);
    }

    #[test]
    fn iterate_below_and_above_threshold() {
        let below = de_iterate(0.3, 0, &cfg());
        assert!(below.converged && below.residual_erasure < 1e-6);
        let above = de_iterate(0.8, 0, &cfg());
        assert!(above.converged);
        // nonzero root of x = 1 - exp(-1.6 x), found with Brent
        assert_abs_diff_eq!(above.residual_erasure, 0.641981317341719, epsilon = 1e-8);
        assert!(de_iterate(1e-4, 3, &cfg()).residual_erasure < 1e-10);
    }

    #[test]
    fn threshold_tau0_is_one_half() {
        assert_abs_diff_eq!(threshold(0, &cfg()), 0.5, epsilon = 1e-3);
    }

    #[test]
    fn threshold_matches_tangency_values() {
        // Tangency: y^{t+1}/t! = e^y - sum_{r<=t} y^r/r!, G = e^y t! / (2 y^t);
        // roots found independently (Brent) and frozen here.
        assert_abs_diff_eq!(threshold(1, &cfg()), 1.6754594357558363, epsilon = 2e-4);
        assert_abs_diff_eq!(threshold(2, &cfg()), 2.574701373493542, epsilon = 2e-4);
        assert_abs_diff_eq!(threshold(3, &cfg()), 3.3996377443089423, epsilon = 2e-4);
    }

    #[test]
    fn approx_throughput_examples() {
        let m = TinSicModel::new(3.4355794789987466, Service::Leo).unwrap();
        let r = Rate::new(1.0, Service::Leo).unwrap();
        let de = approx_max_throughput(&r, &m, &cfg()).unwrap();
        assert_eq!(de.tau, 0);
        assert_abs_diff_eq!(de.approx_max_throughput, 0.25, epsilon = 1e-3);

        let r = Rate::new(0.82745, Service::Leo).unwrap();
        let de = approx_max_throughput(&r, &m, &cfg()).unwrap();
        assert_eq!(de.tau, 1);
        assert_abs_diff_eq!(de.approx_max_throughput, 0.82745 * 1.67546 / 2.0, epsilon = 1e-3);

        let bad = Rate::new(2.2, Service::Leo).unwrap();
        assert!(approx_max_throughput(&bad, &m, &cfg()).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        assert!(DeConfig { grid_points: 10, ..cfg() }.validate().is_err());
        assert!(DeConfig { fp_tolerance: 0.1, ..cfg() }.validate().is_err());
        assert!(DeConfig { max_iterations: 5, ..cfg() }.validate().is_err());
    }

    #[test]
    fn single_precision_threshold() {
        let c = DeConfig::<f32> { fp_tolerance: 1e-5, ..DeConfig::default() };
        assert!((threshold(0, &c) - 0.5).abs() < 2e-3);
    }
}
