use qamp_core::experiments::{ExperimentConfig, NoiseChoice, ReadoutPolicy, SingleModeContext, StateConfig};

#[test]
fn find_flip() {
    let cfg = ExperimentConfig {
        state: StateConfig::Superposition { c1: 1.0, c2: 0.0, x1: 0.8, x2: -0.8, r: 2.0 },
        g: 1.0,
        t_f: 3.0,
        dt: None,
        n_runs: 2000,
        seed: 9,
        settings: None,
        epr_setting: None,
        readout: ReadoutPolicy::default(),
        noise: NoiseChoice::default(),
        interior_fractions: None,
    };
    let ctx = SingleModeContext::new(&cfg).unwrap();
    for run_id in 0..2000u64 {
        let run = ctx.simulate(run_id).unwrap();
        let r_tf = qamp_core::dynamics::readout(&run.x, ctx.grid.n_steps, &ctx.grid, 1.0);
        if ctx.band_of(r_tf) != 0 {
            eprintln!("run {run_id}: boundary={} readout={} component={}", run.x.boundary_value(), r_tf, run.component);
        }
    }
    eprintln!("t_m_index = {} / {}", ctx.t_m_index, ctx.grid.n_steps);
}
