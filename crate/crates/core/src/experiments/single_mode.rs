//! Single-mode measurement scenario: backward amplified x from the future
//! boundary, forward conjugate p from the initial conditional, plus the
//! conditional-fringe analysis.

use serde::{Deserialize, Serialize};

use super::{parallel_fold, stream_rng, ExperimentConfig, ExperimentReport, ReportPayload};
use crate::boundary::{sample_conditional_p_one, sample_future_x_one};
use crate::dynamics::{
    decompose, integrate_backward, integrate_forward, readout, readout_index, DriftNoiseSpec,
    TimeGrid, Trajectory, VarLabel,
};
use crate::error::{CoreError, Result};
use crate::states::{GaussianMixture1d, MixtureSpec, SuperpositionSpec};
use crate::stats::{fringe_fit, FringeFit, Histogram1, Histogram2};

/// State preparation accepted by the single-mode runners.
#[derive(Debug, Clone)]
pub enum SingleModeState {
    Superposition(SuperpositionSpec),
    Mixture(MixtureSpec),
}

impl SingleModeState {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        match &cfg.state {
            super::StateConfig::Superposition { .. } => {
                Ok(Self::Superposition(cfg.state.superposition_spec()?))
            }
            super::StateConfig::Mixture { .. } => Ok(Self::Mixture(cfg.state.mixture_spec()?)),
            _ => Err(CoreError::InvalidSpec(
                "single-mode experiments need a superposition or mixture state".into(),
            )),
        }
    }

    pub fn sigma_x2(&self) -> f64 {
        match self {
            Self::Superposition(s) => s.sigma_x2(),
            Self::Mixture(m) => m.sigma_x2(),
        }
    }

    pub fn sigma_p2(&self) -> f64 {
        match self {
            Self::Superposition(s) => s.sigma_p2(),
            Self::Mixture(m) => m.sigma_p2(),
        }
    }

    pub fn means(&self) -> Vec<f64> {
        match self {
            Self::Superposition(s) => vec![s.x1, s.x2],
            Self::Mixture(m) => m.means.clone(),
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        match self {
            Self::Superposition(s) => s.born_weights().to_vec(),
            Self::Mixture(m) => m.weights.clone(),
        }
    }

    pub fn marginal_x_future(&self, g: f64, t: f64) -> Result<GaussianMixture1d> {
        match self {
            Self::Superposition(s) => s.marginal_x_future(g, t),
            Self::Mixture(m) => m.marginal_x_future(g, t),
        }
    }
}

/// Immutable precomputed context shared by all runs of one configuration.
pub struct SingleModeContext {
    pub state: SingleModeState,
    pub grid: TimeGrid,
    pub boundary: GaussianMixture1d,
    pub backward: DriftNoiseSpec,
    pub forward: DriftNoiseSpec,
    pub t_m_index: usize,
    g: f64,
    seed: u64,
}

/// One paired run: the backward x trajectory (with its boundary component
/// label) and the forward p trajectory.
#[derive(Debug, Clone)]
pub struct SingleModeRun {
    pub run_id: u64,
    pub component: usize,
    pub x: Trajectory,
    pub p: Trajectory,
}

impl SingleModeContext {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let state = SingleModeState::from_config(cfg)?;
        let grid = cfg.grid()?;
        let d = cfg.diffusion();
        let backward = DriftNoiseSpec::new(cfg.g, d, crate::dynamics::Direction::Backward)?;
        let forward = DriftNoiseSpec::new(cfg.g, d, crate::dynamics::Direction::Forward)?;
        let boundary = state.marginal_x_future(cfg.g, cfg.t_f)?;
        let means = state.means();
        let t_m_index = match cfg.readout {
            super::ReadoutPolicy::FinalTime => grid.n_steps,
            super::ReadoutPolicy::BandSeparation { factor } => {
                let lo = means.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                readout_index(&grid, &backward, hi, lo, factor)
            }
        };
        Ok(Self {
            state,
            grid,
            boundary,
            backward,
            forward,
            t_m_index,
            g: cfg.g,
            seed: cfg.seed,
        })
    }

    /// Simulate one run from its own RNG stream; bitwise reproducible.
    pub fn simulate(&self, run_id: u64) -> Result<SingleModeRun> {
        let mut rng = stream_rng(self.seed, 0, run_id);
        let draw = sample_future_x_one(&self.boundary, &mut rng);
        let x = integrate_backward(
            draw.value,
            &self.grid,
            &self.backward,
            &mut rng,
            VarLabel::x(),
            run_id,
        );
        let p0 = match &self.state {
            SingleModeState::Superposition(spec) => {
                sample_conditional_p_one(spec, x.samples[0], &mut rng)?
            }
            SingleModeState::Mixture(m) => {
                use rand::Rng;
                m.sigma_p2().sqrt() * rng.sample::<f64, _>(rand_distr::StandardNormal)
            }
        };
        let p = integrate_forward(p0, &self.grid, &self.forward, &mut rng, VarLabel::p(), run_id);
        Ok(SingleModeRun {
            run_id,
            component: draw.component,
            x,
            p,
        })
    }

    /// Nearest-mean band assignment of a scaled readout.
    pub fn band_of(&self, readout_value: f64) -> usize {
        let means = self.state.means();
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, m) in means.iter().enumerate() {
            let d = (readout_value - m).abs();
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        best
    }
}

/// Interior-time joint histogram of the paired (x, p) trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorJoint {
    pub time: f64,
    pub hist: Histogram2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleModeReport {
    pub gain_tf: f64,
    pub t_m: f64,
    /// Fraction of runs whose scaled readout lands in each eigenvalue band,
    /// at t_m and at t_f; the Born weights are the expected limit.
    pub band_fractions_tm: Vec<f64>,
    pub band_fractions_tf: Vec<f64>,
    pub expected_weights: Vec<f64>,
    /// Mean and variance of the retro-propagating fluctuation at every grid
    /// time (the hidden-vacuum stationarity observable).
    pub delta_times: Vec<f64>,
    pub delta_mean: Vec<f64>,
    pub delta_var: Vec<f64>,
    /// Variance of the relaxed forward variable at t_f.
    pub p_final_variance: f64,
    pub interior: Vec<InteriorJoint>,
    pub n_runs: u64,
}

/// Report plus the raw interior samples (not serialized) for downstream
/// statistical tests.
pub struct SingleModeOutcome {
    pub report: ExperimentReport,
    /// (time, paired (x, p) values), one pair per run, in run order.
    pub interior_pairs: Vec<(f64, Vec<(f64, f64)>)>,
}

struct Acc {
    band_tm: Vec<u64>,
    band_tf: Vec<u64>,
    delta_sum: Vec<f64>,
    delta_sq: Vec<f64>,
    p_tf_sum: f64,
    p_tf_sq: f64,
    interior: Vec<Vec<(f64, f64)>>,
    n: u64,
}

/// Run the single-mode measurement scenario.
pub fn run_single_mode(cfg: &ExperimentConfig) -> Result<SingleModeOutcome> {
    let ctx = SingleModeContext::new(cfg)?;
    let fractions = cfg.interior_fractions();
    let interior_idx: Vec<usize> = fractions
        .iter()
        .map(|f| ctx.grid.index_of(f * cfg.t_f))
        .collect();
    let n_components = ctx.state.means().len();
    let grid_len = ctx.grid.len();
    let n_interior = interior_idx.len();

    let init = || Acc {
        band_tm: vec![0; n_components],
        band_tf: vec![0; n_components],
        delta_sum: vec![0.0; grid_len],
        delta_sq: vec![0.0; grid_len],
        p_tf_sum: 0.0,
        p_tf_sq: 0.0,
        interior: vec![Vec::new(); n_interior],
        n: 0,
    };
    let gain_tf = cfg.gain_at(cfg.t_f);
    let acc = parallel_fold(
        cfg.n_runs,
        init,
        |acc: &mut Acc, run_id| {
            let run = ctx.simulate(run_id)?;
            let r_tm = readout(&run.x, ctx.t_m_index, &ctx.grid, ctx.g);
            let r_tf = readout(&run.x, ctx.grid.n_steps, &ctx.grid, ctx.g);
            acc.band_tm[ctx.band_of(r_tm)] += 1;
            acc.band_tf[ctx.band_of(r_tf)] += 1;
            let boundary_mean = gain_tf * ctx.state.means()[run.component];
            let dec = decompose(&run.x, boundary_mean, &ctx.grid, ctx.g)?;
            for (i, d) in dec.noise.iter().enumerate() {
                acc.delta_sum[i] += d;
                acc.delta_sq[i] += d * d;
            }
            let p_tf = *run.p.samples.last().unwrap();
            acc.p_tf_sum += p_tf;
            acc.p_tf_sq += p_tf * p_tf;
            for (k, &idx) in interior_idx.iter().enumerate() {
                acc.interior[k].push((run.x.samples[idx], run.p.samples[idx]));
            }
            acc.n += 1;
            Ok(())
        },
        |a, b| {
            for (x, y) in a.band_tm.iter_mut().zip(&b.band_tm) {
                *x += y;
            }
            for (x, y) in a.band_tf.iter_mut().zip(&b.band_tf) {
                *x += y;
            }
            for (x, y) in a.delta_sum.iter_mut().zip(&b.delta_sum) {
                *x += y;
            }
            for (x, y) in a.delta_sq.iter_mut().zip(&b.delta_sq) {
                *x += y;
            }
            a.p_tf_sum += b.p_tf_sum;
            a.p_tf_sq += b.p_tf_sq;
            for (x, y) in a.interior.iter_mut().zip(b.interior) {
                x.extend(y);
            }
            a.n += b.n;
        },
    )?;

    let n = acc.n as f64;
    let delta_mean: Vec<f64> = acc.delta_sum.iter().map(|s| s / n).collect();
    let delta_var: Vec<f64> = acc
        .delta_sq
        .iter()
        .zip(&delta_mean)
        .map(|(sq, m)| (sq - n * m * m) / (n - 1.0))
        .collect();

    // Interior histograms over the analytic 4-sigma box at each time.
    let sx2_0 = ctx.state.sigma_x2();
    let sp2_0 = ctx.state.sigma_p2();
    let mut interior = Vec::with_capacity(n_interior);
    let mut interior_pairs = Vec::with_capacity(n_interior);
    for (k, &idx) in interior_idx.iter().enumerate() {
        let t = ctx.grid.time_at(idx);
        let gain_t = cfg.gain_at(t);
        let sx_t = (1.0 + gain_t * gain_t * (sx2_0 - 1.0)).sqrt();
        let sp_t = (1.0 + (sp2_0 - 1.0) / (gain_t * gain_t)).sqrt();
        let means = ctx.state.means();
        let lo = means.iter().cloned().fold(f64::INFINITY, f64::min) * gain_t - 4.0 * sx_t;
        let hi = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max) * gain_t + 4.0 * sx_t;
        let hist = Histogram2::from_pairs(
            &acc.interior[k],
            (lo, hi),
            (-4.0 * sp_t, 4.0 * sp_t),
            (30, 30),
        )?;
        interior.push(InteriorJoint { time: t, hist });
        interior_pairs.push((t, acc.interior[k].clone()));
    }

    let report = SingleModeReport {
        gain_tf,
        t_m: ctx.grid.time_at(ctx.t_m_index),
        band_fractions_tm: acc.band_tm.iter().map(|c| *c as f64 / n).collect(),
        band_fractions_tf: acc.band_tf.iter().map(|c| *c as f64 / n).collect(),
        expected_weights: ctx.state.weights(),
        delta_times: ctx.grid.times().collect(),
        delta_mean,
        delta_var,
        p_final_variance: (acc.p_tf_sq - acc.p_tf_sum * acc.p_tf_sum / n) / (n - 1.0),
        interior,
        n_runs: acc.n,
    };
    Ok(SingleModeOutcome {
        report: ExperimentReport {
            experiment: "single_mode".into(),
            config: cfg.clone(),
            payload: ReportPayload::SingleMode(report),
        },
        interior_pairs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringesReport {
    /// Analytic fringe period of the initial conditional, when the state is
    /// a superposition.
    pub expected_period: Option<f64>,
    pub n_positive: u64,
    pub n_negative: u64,
    pub hist_positive: Histogram1,
    pub hist_negative: Histogram1,
    pub fit_positive: FringeFit,
    pub fit_negative: FringeFit,
}

pub struct FringesOutcome {
    pub report: ExperimentReport,
}

/// Conditional-fringe analysis: initial p values partitioned by the sign of
/// the paired backward trajectory's boundary outcome.
pub fn run_fringes(cfg: &ExperimentConfig) -> Result<FringesOutcome> {
    let ctx = SingleModeContext::new(cfg)?;
    let acc = parallel_fold(
        cfg.n_runs,
        || (Vec::new(), Vec::new()),
        |acc: &mut (Vec<f64>, Vec<f64>), run_id| {
            let run = ctx.simulate(run_id)?;
            let boundary = run.x.boundary_value();
            let p0 = run.p.samples[0];
            if boundary >= 0.0 {
                acc.0.push(p0);
            } else {
                acc.1.push(p0);
            }
            Ok(())
        },
        |a, b| {
            a.0.extend(b.0);
            a.1.extend(b.1);
        },
    )?;
    let (positive, negative) = acc;
    for side in [&positive, &negative] {
        if side.len() < 100 {
            return Err(CoreError::InsufficientSamples {
                context: "fringe condition bin",
                got: side.len(),
                need: 100,
            });
        }
    }
    let sp = ctx.state.sigma_p2().sqrt();
    let bins = 72;
    let hist_positive = Histogram1::from_samples(&positive, -4.0 * sp, 4.0 * sp, bins)?;
    let hist_negative = Histogram1::from_samples(&negative, -4.0 * sp, 4.0 * sp, bins)?;
    let fit_positive = fringe_fit(&hist_positive)?;
    let fit_negative = fringe_fit(&hist_negative)?;
    let expected_period = match &ctx.state {
        SingleModeState::Superposition(s) => Some(std::f64::consts::TAU / s.fringe_frequency()),
        SingleModeState::Mixture(_) => None,
    };
    let report = FringesReport {
        expected_period,
        n_positive: positive.len() as u64,
        n_negative: negative.len() as u64,
        hist_positive,
        hist_negative,
        fit_positive,
        fit_negative,
    };
    Ok(FringesOutcome {
        report: ExperimentReport {
            experiment: "fringes".into(),
            config: cfg.clone(),
            payload: ReportPayload::Fringes(report),
        },
    })
}
