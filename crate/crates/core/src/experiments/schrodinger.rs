//! The indirect-measurement scenario: phase 1 amplifies x at A and p at B
//! and forms the prediction `-p_B` for a later p measurement at A; phase 2
//! re-solves with the (p, p) boundary (the fixed B setting pins the same
//! future boundary) and verifies the prediction statistically, together with
//! a no-signaling check on B's marginal.

use serde::{Deserialize, Serialize};

use super::epr::{run_epr_with_domain, EprRunSetting};
use super::{ExperimentConfig, ExperimentReport, ReportPayload};
use crate::error::Result;
use crate::stats::ks_two_sample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchrodingerReport {
    pub readout_time: f64,
    /// Correlation between the phase-2 outcome for p_A and the prediction
    /// -p_B inferred from B.
    pub prediction_corr: f64,
    pub prediction_corr_se: f64,
    pub analytic_corr: f64,
    /// Cross-correlation of the phase-1 (x_A, p_B) readouts; zero for the
    /// factorized state.
    pub phase1_xp_corr: f64,
    /// Two-sample KS between B's p readouts under the two A settings.
    pub no_signaling_statistic: f64,
    pub no_signaling_p: f64,
    pub n_runs: u64,
}

pub struct SchrodingerOutcome {
    pub report: ExperimentReport,
    /// Phase-1 readout pairs (x_A, p_B), scaled, in run order.
    pub phase1_pairs: Vec<(f64, f64)>,
    /// Phase-2 readout pairs (p_A, p_B), scaled, in run order.
    pub phase2_pairs: Vec<(f64, f64)>,
}

pub fn run_schrodinger(cfg: &ExperimentConfig) -> Result<SchrodingerOutcome> {
    // Phase 1: settings (theta = 0, phi = pi/2), i.e. amplify x_A and p_B.
    let phase1 = run_epr_with_domain(cfg, EprRunSetting::XP, 2)?;
    // Phase 2: B fixed at p, A reversed and re-amplified at p.
    let phase2 = run_epr_with_domain(cfg, EprRunSetting::PP, 3)?;

    let prediction_pairs: Vec<(f64, f64)> = phase2
        .readout_pairs
        .iter()
        .map(|(p_a, p_b)| (*p_a, -*p_b))
        .collect();
    let prediction_corr = crate::numeric::correlation(&prediction_pairs);
    let phase1_xp_corr = crate::numeric::correlation(&phase1.readout_pairs);

    let p_b_phase1: Vec<f64> = phase1.readout_pairs.iter().map(|(_, b)| *b).collect();
    let p_b_phase2: Vec<f64> = phase2.readout_pairs.iter().map(|(_, b)| *b).collect();
    let ks = ks_two_sample(&p_b_phase1, &p_b_phase2)?;

    let (ReportPayload::Epr(pp_report), ReportPayload::Epr(_)) =
        (phase2.report.payload.clone(), phase1.report.payload.clone())
    else {
        unreachable!("epr runners produce epr payloads");
    };
    let n = prediction_pairs.len() as f64;
    let analytic = -pp_report.analytic_corr; // corr(p_A, -p_B)
    let report = SchrodingerReport {
        readout_time: pp_report.readout_time,
        prediction_corr,
        prediction_corr_se: (1.0 - analytic * analytic).max(1.0 / n) / n.sqrt(),
        analytic_corr: analytic,
        phase1_xp_corr,
        no_signaling_statistic: ks.statistic,
        no_signaling_p: ks.p_value,
        n_runs: pp_report.n_runs,
    };
    Ok(SchrodingerOutcome {
        report: ExperimentReport {
            experiment: "schrodinger".into(),
            config: cfg.clone(),
            payload: ReportPayload::Schrodinger(report),
        },
        phase1_pairs: phase1.readout_pairs,
        phase2_pairs: phase2.readout_pairs,
    })
}
