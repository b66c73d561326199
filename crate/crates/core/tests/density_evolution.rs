use orbitshare::deanalysis::{de_iterate, threshold, DeConfig};

fn slot_erasure_avg(q: f64, g: f64, tau: usize) -> f64 {
    orbitshare::deanalysis::slot_erasure_avg(q, g, tau)
}

/// `sum_d rho_d f_s(q; d)` with `rho_d` the edge-perspective Poisson(2G) degree
/// distribution, truncated once the pmf is negligible past its mode.
fn explicit_sum(q: f64, g: f64, tau: usize) -> f64 {
    let mean = 2.0 * g;
    let mut rho = (-mean).exp(); // d = 1
    let mut total = 0.0;
    let mut d = 1usize;
    loop {
        if d > tau {
            let n = d - 1;
            let mut cdf = 0.0;
            let mut binom = 1.0;
            for r in 0..=tau.min(n) {
                if r > 0 {
                    binom *= (n - r + 1) as f64 / r as f64;
                }
                cdf += binom * q.powi(r as i32) * (1.0 - q).powi((n - r) as i32);
            }
            total += rho * (1.0 - cdf);
        }
        rho *= mean / d as f64;
        d += 1;
        if d as f64 > mean && rho < 1e-18 {
            break total;
        }
    }
}

#[test]
fn closed_form_matches_degree_sum() {
    let mut worst: f64 = 0.0;
    for tau in 0..=6 {
        for k in 0..25 {
            let g = 0.1 + 4.9 * k as f64 / 24.0;
            for i in 0..1000 {
                let q = i as f64 / 999.0;
                worst = worst.max((slot_erasure_avg(q, g, tau) - explicit_sum(q, g, tau)).abs());
            }
        }
    }
    assert!(worst <= 1e-10, "max deviation {worst:e}");
}

#[test]
fn averaged_examples() {
    assert!((slot_erasure_avg(0.5, 1.0, 1) - (1.0 - (-1.0f64).exp() * 2.0)).abs() < 1e-14);
    for (q, g) in [(0.2, 0.3), (0.9, 2.0), (1.0, 0.5)] {
        assert!((slot_erasure_avg(q, g, 0) - (1.0 - (-2.0 * g * q).exp())).abs() < 1e-14);
    }
    assert_eq!(slot_erasure_avg(0.0, 1.0, 3), 0.0);
}

/// Tangency of `x = f_s(x; G)`: with `y = 2 G x`, `e^y = sum_{r<=tau} y^r/r! + y^(tau+1)/tau!`
/// and `G* = tau! e^y / (2 y^tau)`.
fn tangency_threshold(tau: usize) -> f64 {
    let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
    let h = |y: f64| {
        let partial: f64 = (0..=tau).map(|r| y.powi(r as i32) / fact(r)).sum();
        y.exp() - partial - y.powi(tau as i32 + 1) / fact(tau)
    };
    let (mut lo, mut hi) = (1e-3, 60.0);
    assert!(h(lo) < 0.0 && h(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let y = 0.5 * (lo + hi);
    fact(tau) * y.exp() / (2.0 * y.powi(tau as i32))
}

#[test]
fn thresholds_match_tangency_oracle() {
    let cfg: DeConfig<f64> = DeConfig::default();
    assert!((threshold(0, &cfg) - 0.5).abs() <= 1e-3);
    for tau in 1..=6 {
        let oracle = tangency_threshold(tau);
        let got = threshold(tau, &cfg);
        assert!((got - oracle).abs() <= 2.0 * cfg.bisection_tolerance, "tau {tau}: {got} vs {oracle}");
    }
    assert!((tangency_threshold(1) - 1.67546).abs() < 1e-4);
    assert!((tangency_threshold(2) - 2.5747).abs() < 1e-3);
}

#[test]
fn threshold_increases_with_tau() {
    let cfg: DeConfig<f64> = DeConfig::default();
    let t: Vec<f64> = (0..=8).map(|tau| threshold(tau, &cfg)).collect();
    assert!(t.windows(2).all(|w| w[1] > w[0]), "{t:?}");
}

#[test]
fn residual_vanishes_below_threshold() {
    let cfg: DeConfig<f64> = DeConfig::default();
    for tau in 0..=4 {
        let g_star = threshold(tau, &cfg);
        for k in 0..5 {
            let g = (g_star - 2.0 * cfg.bisection_tolerance) * (1.0 - 0.2 * k as f64);
            let it = de_iterate(g, tau, &cfg);
            assert!(it.converged, "tau {tau} g {g}");
            assert!(it.residual_erasure < cfg.fp_tolerance, "tau {tau} g {g}: {}", it.residual_erasure);
        }
    }
}

#[test]
fn residual_jumps_above_threshold() {
    let cfg: DeConfig<f64> = DeConfig::default();
    for tau in 1..=4 {
        let g_star = threshold(tau, &cfg);
        for g in [g_star + 2.0 * cfg.bisection_tolerance, g_star * 1.1, g_star * 2.0] {
            let it = de_iterate(g, tau, &cfg);
            assert!(it.residual_erasure >= 0.01, "tau {tau} g {g}: {}", it.residual_erasure);
        }
    }
}

/// At `tau = 0` the nonzero fixed point grows continuously from zero, so just
/// above the threshold the residual is small; it must match `x = 1 - e^{-2 G x}`.
#[test]
fn tau_zero_residual_follows_the_fixed_point() {
    let cfg: DeConfig<f64> = DeConfig::default();
    for g in [0.51, 0.6, 0.8, 1.5] {
        let x = de_iterate(g, 0, &cfg).residual_erasure;
        assert!(x > 0.0);
        assert!((x - (1.0 - (-2.0 * g * x).exp())).abs() < 1e-8, "g {g}: {x}");
    }
    assert!(de_iterate(0.8, 0, &cfg).residual_erasure > 0.1);
    assert!(de_iterate(0.3, 0, &cfg).residual_erasure < 1e-6);
}
