//! Fixed grids, seeds and frame counts behind `reproduce`. The acceptance
//! suite runs the same bundles (or subsets of their alpha/beta sets).

use std::fmt;

use crate::config::{parse_config, RunConfig};

/// The reference configuration shipped as `examples/paper.cfg`.
pub const PAPER_CFG: &str = include_str!("../examples/paper.cfg");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Figure {
    /// Segregated-band peak throughput versus rate, with the DE overlay.
    Fig3,
    /// Shared-band throughput pairs at beta = 1 over every alpha.
    Fig4,
    /// Shared-band throughput pairs for beta in {0.25, 1, 4}.
    Fig6,
}

impl Figure {
    pub fn as_str(self) -> &'static str {
        match self {
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig6 => "fig6",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const BENCHMARK_FRAMES: usize = 2000;
pub const FIG4_FRAMES: usize = 500;
pub const FIG6_FRAMES: usize = 100;

/// The reference configuration.
pub fn paper_config() -> RunConfig {
    parse_config(PAPER_CFG, false).expect("shipped configuration is valid").config
}

/// Configuration of one bundle.
///
/// Pair bundles simulate the segregated benchmarks at [`BENCHMARK_FRAMES`]
/// and the shared band at fewer frames per point; the pair grid holds only
/// capacity-boundary rates.
pub fn bundle_config(figure: Figure) -> RunConfig {
    let mut cfg = paper_config();
    match figure {
        Figure::Fig3 => cfg.n_frames = BENCHMARK_FRAMES,
        Figure::Fig4 => {
            cfg.n_frames = FIG4_FRAMES;
            cfg.pair_sweep.betas = vec![1.0];
            cfg.pair_sweep.benchmark_frames = Some(BENCHMARK_FRAMES);
        }
        Figure::Fig6 => {
            cfg.n_frames = FIG6_FRAMES;
            cfg.pair_sweep.betas = vec![0.25, 1.0, 4.0];
            cfg.pair_sweep.benchmark_frames = Some(BENCHMARK_FRAMES);
        }
    }
    cfg.pair_sweep.alphas = vec![1, 2, 4, 5, 8];
    cfg.pair_sweep.fill_step = None;
    cfg
}
