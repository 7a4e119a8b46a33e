//! Two-mode EPR scenario: paired backward trajectories for the amplified
//! quadratures at A and B (independent noises), forward trajectories for the
//! conjugate block.

use serde::{Deserialize, Serialize};

use super::{parallel_fold, stream_rng, ExperimentConfig, ExperimentReport, ReportPayload};
use crate::boundary::{
    sample_epr_future_one, sample_epr_initial_conjugate_one, sample_gaussian_conditional,
    EprSetting,
};
use crate::dynamics::{
    integrate_backward, integrate_forward, readout, DriftNoiseSpec, Mode, Symbol, TimeGrid,
    Trajectory, VarLabel,
};
use crate::error::{CoreError, Result};
use crate::states::EprSpec;
use crate::stats::{epr_inference, EprInference};
use rand::Rng;
use rand_distr::StandardNormal;

/// Which quadratures are amplified at the two sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EprRunSetting {
    /// x at A and x at B.
    XX,
    /// p at A and p at B.
    PP,
    /// x at A and p at B (the indirect-measurement configuration).
    XP,
}

impl EprRunSetting {
    fn backward_labels(self) -> (VarLabel, VarLabel) {
        match self {
            Self::XX => (
                VarLabel::mode(Symbol::X, Mode::A),
                VarLabel::mode(Symbol::X, Mode::B),
            ),
            Self::PP => (
                VarLabel::mode(Symbol::P, Mode::A),
                VarLabel::mode(Symbol::P, Mode::B),
            ),
            Self::XP => (
                VarLabel::mode(Symbol::X, Mode::A),
                VarLabel::mode(Symbol::P, Mode::B),
            ),
        }
    }

    fn forward_labels(self) -> (VarLabel, VarLabel) {
        match self {
            Self::XX => (
                VarLabel::mode(Symbol::P, Mode::A),
                VarLabel::mode(Symbol::P, Mode::B),
            ),
            Self::PP => (
                VarLabel::mode(Symbol::X, Mode::A),
                VarLabel::mode(Symbol::X, Mode::B),
            ),
            Self::XP => (
                VarLabel::mode(Symbol::P, Mode::A),
                VarLabel::mode(Symbol::X, Mode::B),
            ),
        }
    }
}

/// One EPR run: backward pair and forward pair, all sharing the run id.
#[derive(Debug, Clone)]
pub struct EprRun {
    pub run_id: u64,
    pub backward_a: Trajectory,
    pub backward_b: Trajectory,
    pub forward_a: Trajectory,
    pub forward_b: Trajectory,
}

pub struct EprContext {
    pub spec: EprSpec,
    pub grid: TimeGrid,
    pub setting: EprRunSetting,
    backward: DriftNoiseSpec,
    forward: DriftNoiseSpec,
    g: f64,
    t_f: f64,
    seed: u64,
    domain: u32,
    pub t_m_index: usize,
}

impl EprContext {
    pub fn new(cfg: &ExperimentConfig, setting: EprRunSetting, domain: u32) -> Result<Self> {
        cfg.validate()?;
        let spec = cfg.state.epr_spec()?;
        let grid = cfg.grid()?;
        let d = cfg.diffusion();
        let t_m_index = match cfg.readout {
            // Continuous spectrum: no band rule applies, read out at t_f.
            super::ReadoutPolicy::BandSeparation { .. } | super::ReadoutPolicy::FinalTime => {
                grid.n_steps
            }
        };
        Ok(Self {
            spec,
            grid,
            setting,
            backward: DriftNoiseSpec::new(cfg.g, d, crate::dynamics::Direction::Backward)?,
            forward: DriftNoiseSpec::new(cfg.g, d, crate::dynamics::Direction::Forward)?,
            g: cfg.g,
            t_f: cfg.t_f,
            seed: cfg.seed,
            domain,
            t_m_index,
        })
    }

    pub fn simulate(&self, run_id: u64) -> Result<EprRun> {
        let mut rng = stream_rng(self.seed, self.domain, run_id);
        let (label_ba, label_bb) = self.setting.backward_labels();
        let (label_fa, label_fb) = self.setting.forward_labels();

        // Future boundary for the amplified pair.
        let (boundary_a, boundary_b) = match self.setting {
            EprRunSetting::XX => {
                sample_epr_future_one(&self.spec, self.g, self.t_f, EprSetting::XX, &mut rng)?
            }
            EprRunSetting::PP => {
                sample_epr_future_one(&self.spec, self.g, self.t_f, EprSetting::PP, &mut rng)?
            }
            EprRunSetting::XP => {
                // x_A and p_B are uncorrelated; each has the amplified
                // single-mode Husimi variance 1 + G^2 cosh(2r).
                let gain = (self.g * self.t_f).exp();
                let sd = (1.0 + gain * gain * (2.0 * self.spec.r).cosh()).sqrt();
                (
                    sd * rng.sample::<f64, _>(StandardNormal),
                    sd * rng.sample::<f64, _>(StandardNormal),
                )
            }
        };
        // Independent noises at the two sites.
        let backward_a = integrate_backward(
            boundary_a,
            &self.grid,
            &self.backward,
            &mut rng,
            label_ba,
            run_id,
        );
        let backward_b = integrate_backward(
            boundary_b,
            &self.grid,
            &self.backward,
            &mut rng,
            label_bb,
            run_id,
        );

        // Initial conjugate pair from the factorized Q block; for the mixed
        // setting the conjugates condition on the backward values at t1.
        let (f0_a, f0_b) = match self.setting {
            EprRunSetting::XX => {
                sample_epr_initial_conjugate_one(&self.spec, EprSetting::XX, &mut rng)
            }
            EprRunSetting::PP => {
                sample_epr_initial_conjugate_one(&self.spec, EprSetting::PP, &mut rng)
            }
            EprRunSetting::XP => {
                let tr = 2.0 * self.spec.r;
                let var = 1.0 + tr.cosh();
                // p_A couples to the backward p_B; x_B couples to x_A.
                let p_a =
                    sample_gaussian_conditional(backward_b.samples[0], var, -tr.sinh(), &mut rng);
                let x_b =
                    sample_gaussian_conditional(backward_a.samples[0], var, tr.sinh(), &mut rng);
                (p_a, x_b)
            }
        };
        let forward_a =
            integrate_forward(f0_a, &self.grid, &self.forward, &mut rng, label_fa, run_id);
        let forward_b =
            integrate_forward(f0_b, &self.grid, &self.forward, &mut rng, label_fb, run_id);
        Ok(EprRun {
            run_id,
            backward_a,
            backward_b,
            forward_a,
            forward_b,
        })
    }
}

/// Statistics of one amplified EPR setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EprReport {
    pub setting: String,
    pub readout_time: f64,
    pub gain_readout: f64,
    /// Correlation of the paired scaled readouts of the backward variables.
    pub corr: f64,
    pub corr_se: f64,
    /// Closed-form Gaussian correlation at the readout time (signed).
    pub analytic_corr: f64,
    /// Variance of the inference combination of scaled readouts:
    /// x_A - x_B for XX, p_A + p_B for PP, unused for XP.
    pub inference_variance: Option<f64>,
    pub n_runs: u64,
}

pub struct EprOutcome {
    pub report: ExperimentReport,
    /// Scaled readout pairs of the backward variables, in run order.
    pub readout_pairs: Vec<(f64, f64)>,
    /// Readouts of the forward (conjugate) variables at t_m, scaled by the
    /// deamplification factor (for no-signaling and display uses).
    pub forward_pairs: Vec<(f64, f64)>,
}

pub fn run_epr(cfg: &ExperimentConfig, setting: EprRunSetting) -> Result<EprOutcome> {
    run_epr_with_domain(cfg, setting, 0)
}

pub(crate) fn run_epr_with_domain(
    cfg: &ExperimentConfig,
    setting: EprRunSetting,
    domain: u32,
) -> Result<EprOutcome> {
    let ctx = EprContext::new(cfg, setting, domain)?;
    let acc = parallel_fold(
        cfg.n_runs,
        || (Vec::new(), Vec::new()),
        |acc: &mut (Vec<(f64, f64)>, Vec<(f64, f64)>), run_id| {
            let run = ctx.simulate(run_id)?;
            let idx = ctx.t_m_index;
            acc.0.push((
                readout(&run.backward_a, idx, &ctx.grid, ctx.g),
                readout(&run.backward_b, idx, &ctx.grid, ctx.g),
            ));
            acc.1.push((run.forward_a.samples[idx], run.forward_b.samples[idx]));
            Ok(())
        },
        |a, b| {
            a.0.extend(b.0);
            a.1.extend(b.1);
        },
    )?;
    let (readout_pairs, forward_pairs) = acc;
    let t_read = ctx.grid.time_at(ctx.t_m_index);
    let corr = crate::numeric::correlation(&readout_pairs);
    let analytic = match setting {
        EprRunSetting::XX => ctx.spec.pair_correlation(ctx.g, t_read),
        EprRunSetting::PP => -ctx.spec.pair_correlation(ctx.g, t_read),
        EprRunSetting::XP => 0.0,
    };
    let n = readout_pairs.len() as f64;
    let gain = (ctx.g * t_read).exp();
    let inference_variance = match setting {
        EprRunSetting::XX => Some(crate::numeric::variance(
            &readout_pairs.iter().map(|(a, b)| a - b).collect::<Vec<_>>(),
        )),
        EprRunSetting::PP => Some(crate::numeric::variance(
            &readout_pairs.iter().map(|(a, b)| a + b).collect::<Vec<_>>(),
        )),
        EprRunSetting::XP => None,
    };
    let report = EprReport {
        setting: format!("{setting:?}"),
        readout_time: t_read,
        gain_readout: gain,
        corr,
        corr_se: (1.0 - analytic * analytic).max(1.0 / n) / n.sqrt(),
        analytic_corr: analytic,
        inference_variance,
        n_runs: readout_pairs.len() as u64,
    };
    Ok(EprOutcome {
        report: ExperimentReport {
            experiment: "epr".into(),
            config: cfg.clone(),
            payload: ReportPayload::Epr(report),
        },
        readout_pairs,
        forward_pairs,
    })
}

/// Combined (x,x) + (p,p) runs and the EPR-criterion product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EprProductReport {
    pub xx: EprReport,
    pub pp: EprReport,
    pub inference: EprInference,
}

pub fn run_epr_product(cfg: &ExperimentConfig) -> Result<(ExperimentReport, EprInference)> {
    let xx = run_epr_with_domain(cfg, EprRunSetting::XX, 0)?;
    let pp = run_epr_with_domain(cfg, EprRunSetting::PP, 1)?;
    // Readout pairs are already scaled by 1/G, so the gain here is 1.
    let inference = epr_inference(&xx.readout_pairs, &pp.readout_pairs, 1.0)?;
    let (ReportPayload::Epr(xx_report), ReportPayload::Epr(pp_report)) =
        (xx.report.payload, pp.report.payload)
    else {
        return Err(CoreError::InvalidSpec("unexpected payload".into()));
    };
    let report = ExperimentReport {
        experiment: "epr_product".into(),
        config: cfg.clone(),
        payload: ReportPayload::EprProduct(EprProductReport {
            xx: xx_report,
            pp: pp_report,
            inference,
        }),
    };
    Ok((report, inference))
}
