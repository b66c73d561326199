use orbitshare::deanalysis::{approx_max_throughput, DeConfig};
use orbitshare::phy::{tau_boundaries, Rate, TinSicModel};
use orbitshare::sweep::{
    pair_sweep_shared, peak_over_load, rate_sweep_segregated, LoadGrid, LoadGridSpec, OperatingPoint, PairMode,
    Quadrant, SweepPlan,
};
use orbitshare::{PerService, Service};
use proptest::prelude::*;

fn models() -> PerService<TinSicModel<f64>> {
    PerService::new(
        TinSicModel::from_db(5.36, Service::Leo).unwrap(),
        TinSicModel::from_db(-2.99, Service::Geo).unwrap(),
    )
}

fn small_plan() -> SweepPlan {
    SweepPlan {
        load_grid: LoadGridSpec::Fixed(LoadGrid::new(0.2, 2.0, 0.2).unwrap()),
        n_frames: 60,
        master_seed: 5,
        max_extensions: 1,
        ..SweepPlan::default()
    }
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let m = models();
    let plan = small_plan();
    let run = || {
        let rates = rate_sweep_segregated(Service::Leo, &m.leo, &[0.6, 1.0, 1.8], &plan).unwrap();
        let pairs = pair_sweep_shared(&[(8, 1.2), (4, 0.9)], 1.0, &m, PerService::new(0.6, 0.45), PairMode::SharedSweep, &plan)
            .unwrap();
        (rates, pairs)
    };
    assert_eq!(in_pool(1, run), in_pool(4, run));
}

#[test]
fn every_record_recomputes_its_throughput() {
    let m = models();
    let plan = small_plan();
    let shared = OperatingPoint::Shared { alpha: 4, beta: 2.0, models: m, rates: PerService::new(1.0, 0.25) };
    let seg = OperatingPoint::Segregated { service: Service::Geo, model: m.geo, rate: 0.3 };
    for point in [shared, seg] {
        let search = peak_over_load(&point, &plan).unwrap();
        for service in Service::ALL {
            if let Some(sweep) = search.get(service) {
                assert!(sweep.points.iter().all(|p| p.is_consistent()));
                assert_eq!(sweep.points.iter().filter(|p| p.is_peak).count(), 1);
                assert!(sweep.points.iter().all(|p| p.throughput <= sweep.peak().throughput));
            }
        }
    }
}

#[test]
fn de_approximation_is_a_sawtooth() {
    let cfg = DeConfig::default();
    let model = models().leo;
    let approx = |r: f64| approx_max_throughput(&Rate::new(r, Service::Leo).unwrap(), &model, &cfg).unwrap();
    let b = tau_boundaries(&model, 0.3);
    for w in b.windows(2) {
        let (hi, lo) = (w[0], w[1]);
        let (x, y) = (lo + 0.3 * (hi - lo), lo + 0.9 * (hi - lo));
        let (ax, ay) = (approx(x), approx(y));
        assert_eq!(ax.tau, ay.tau);
        assert!((ay.approx_max_throughput / ax.approx_max_throughput - y / x).abs() < 1e-12);
        // crossing a boundary from below drops tau by one
        assert_eq!(approx(hi - 1e-9).tau + 1, approx(lo - 1e-9).tau);
    }
}

proptest! {
    #[test]
    fn quadrants_survive_common_rescaling(
        sl in 0.01f64..2.0, sg in 0.01f64..2.0, bl in 0.01f64..2.0, bg in 0.01f64..2.0, k in 0.01f64..100.0,
    ) {
        let q = Quadrant::classify(PerService::new(sl, sg), PerService::new(bl, bg));
        let scaled = Quadrant::classify(PerService::new(k * sl, k * sg), PerService::new(k * bl, k * bg));
        prop_assert_eq!(q, scaled);
    }
}
