//! Bell-CHSH scenario on the pair-coherent state.
//!
//! The setting rotations are deterministic phase-space maps applied before
//! amplification; the rotated-quadrature boundary is sampled from the
//! oracle's Born joint (amplified and smoothed by unit vacuum noise), both
//! rotated quadratures are propagated backward, and the scaled readouts at
//! t_f are sign-binned into the four CHSH correlators.

use serde::{Deserialize, Serialize};

use super::{parallel_fold, stream_rng, ExperimentConfig, ExperimentReport, ReportPayload};
use crate::boundary::{sample_born_boundary_one, BornSampler};
use crate::dynamics::{
    integrate_backward, readout, DriftNoiseSpec, Mode, Symbol, TimeGrid, Trajectory, VarLabel,
};
use crate::error::{CoreError, Result};
use crate::oracle::{ChshSettings, FockState2, QuadGrid};
use crate::stats::{chsh, ChshEstimate};

/// Default resolution of the Born sampling grid.
const BORN_GRID_POINTS: usize = 512;

#[derive(Debug, Clone)]
pub struct BellRun {
    pub run_id: u64,
    pub pair_index: usize,
    pub backward_a: Trajectory,
    pub backward_b: Trajectory,
    pub sign_a: i8,
    pub sign_b: i8,
}

pub struct BellContext {
    pub grid: TimeGrid,
    pub settings: ChshSettings,
    pub gain: f64,
    pub n_per_pair: u64,
    samplers: Vec<BornSampler>,
    backward: DriftNoiseSpec,
    g: f64,
    seed: u64,
}

impl BellContext {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let spec = cfg.state.pair_coherent_spec()?;
        let settings = cfg.settings.ok_or_else(|| {
            CoreError::InvalidSpec("bell experiment needs CHSH settings".into())
        })?;
        let grid = cfg.grid()?;
        let state = FockState2::pair_coherent(spec.zeta, spec.truncation)?;
        let extent = state.suggested_extent();
        let quad_grid = QuadGrid::symmetric(extent, BORN_GRID_POINTS);
        let mut samplers = Vec::with_capacity(4);
        for (theta, phi) in settings.pairs() {
            let joint = state.quadrature_joint(theta, phi, &quad_grid)?;
            samplers.push(BornSampler::new(&joint));
        }
        Ok(Self {
            grid,
            settings,
            gain: cfg.gain_at(cfg.t_f),
            n_per_pair: (cfg.n_runs / 4).max(1),
            samplers,
            backward: DriftNoiseSpec::new(
                cfg.g,
                cfg.diffusion(),
                crate::dynamics::Direction::Backward,
            )?,
            g: cfg.g,
            seed: cfg.seed,
        })
    }

    /// Simulate one run of one setting pair.
    pub fn simulate(&self, pair_index: usize, run_id: u64) -> Result<BellRun> {
        let mut rng = stream_rng(self.seed, 16 + pair_index as u32, run_id);
        let ((xa_f, xb_f), _born) =
            sample_born_boundary_one(&self.samplers[pair_index], self.gain, &mut rng);
        let (theta, phi) = self.settings.pairs()[pair_index];
        let backward_a = integrate_backward(
            xa_f,
            &self.grid,
            &self.backward,
            &mut rng,
            VarLabel::rotated(Symbol::X, Mode::A, theta),
            run_id,
        );
        let backward_b = integrate_backward(
            xb_f,
            &self.grid,
            &self.backward,
            &mut rng,
            VarLabel::rotated(Symbol::X, Mode::B, phi),
            run_id,
        );
        let ra = readout(&backward_a, self.grid.n_steps, &self.grid, self.g);
        let rb = readout(&backward_b, self.grid.n_steps, &self.grid, self.g);
        Ok(BellRun {
            run_id,
            pair_index,
            backward_a,
            backward_b,
            sign_a: if ra >= 0.0 { 1 } else { -1 },
            sign_b: if rb >= 0.0 { 1 } else { -1 },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellReport {
    pub settings: ChshSettings,
    pub estimate: ChshEstimate,
    pub gain: f64,
    pub n_total: u64,
}

pub struct BellOutcome {
    pub report: ExperimentReport,
}

pub fn run_bell(cfg: &ExperimentConfig) -> Result<BellOutcome> {
    let ctx = BellContext::new(cfg)?;
    let mut sign_pairs: [Vec<(i8, i8)>; 4] = Default::default();
    for pair_index in 0..4 {
        let signs = parallel_fold(
            ctx.n_per_pair,
            Vec::new,
            |acc: &mut Vec<(i8, i8)>, run_id| {
                let run = ctx.simulate(pair_index, run_id)?;
                acc.push((run.sign_a, run.sign_b));
                Ok(())
            },
            |a, b| a.extend(b),
        )?;
        sign_pairs[pair_index] = signs;
    }
    let estimate = chsh(&sign_pairs)?;
    let n_total = estimate.n.iter().sum::<usize>() as u64;
    let report = BellReport {
        settings: ctx.settings,
        estimate,
        gain: ctx.gain,
        n_total,
    };
    Ok(BellOutcome {
        report: ExperimentReport {
            experiment: "bell".into(),
            config: cfg.clone(),
            payload: ReportPayload::Bell(report),
        },
    })
}
