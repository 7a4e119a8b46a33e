//! Time grids and Ornstein-Uhlenbeck integrators for the forward and
//! backward stochastic equations.
//!
//! Both equations are linear OU processes: the amplified variable solves
//! `dx/dt- = -g x + xi_1` backward from a future boundary sample, the
//! conjugate variable solves `dp/dt = -g p + xi_2` forward from an initial
//! sample. The default integrator uses the exact one-step OU transition
//! (no discretization bias at any dt); an Euler-Maruyama fallback exists for
//! cross-checks. Noise normalization `<xi xi'> = 2 D delta` with `D = g` by
//! default, so the stationary fluctuation stays at the hidden-vacuum level
//! `D/g = 1`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Uniform grid over [0, t_end].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_end: f64,
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_end > 0.0) || n_steps == 0 {
            return Err(CoreError::InvalidSpec(
                "time grid needs t_end > 0 and at least one step".into(),
            ));
        }
        Ok(Self {
            t_end,
            dt: t_end / n_steps as f64,
            n_steps,
        })
    }

    /// Grid whose step does not exceed `max_dt`.
    pub fn with_max_dt(t_end: f64, max_dt: f64) -> Result<Self> {
        if !(max_dt > 0.0) {
            return Err(CoreError::InvalidSpec("max_dt must be > 0".into()));
        }
        Self::new(t_end, (t_end / max_dt).ceil() as usize)
    }

    /// Default resolution `dt <= 0.01 / g`.
    pub fn default_for(g: f64, t_end: f64) -> Result<Self> {
        Self::with_max_dt(t_end, 0.01 / g)
    }

    /// Number of stored samples, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time_at(&self, index: usize) -> f64 {
        index as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.time_at(i))
    }

    /// Grid index closest to the requested time.
    pub fn index_of(&self, t: f64) -> usize {
        ((t / self.dt).round() as usize).min(self.n_steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

/// Drift/diffusion parameters of one OU equation.
/// `diffusion` is D in `<xi(t) xi(t')> = 2 D delta(t - t')`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftNoiseSpec {
    pub g: f64,
    pub diffusion: f64,
    pub direction: Direction,
}

impl DriftNoiseSpec {
    pub fn new(g: f64, diffusion: f64, direction: Direction) -> Result<Self> {
        if !(g > 0.0) || diffusion < 0.0 {
            return Err(CoreError::InvalidSpec(
                "drift needs g > 0 and diffusion >= 0".into(),
            ));
        }
        Ok(Self {
            g,
            diffusion,
            direction,
        })
    }

    /// Backward equation with the default normalization D = g.
    pub fn backward(g: f64) -> Result<Self> {
        Self::new(g, g, Direction::Backward)
    }

    /// Forward equation with the default normalization D = g.
    pub fn forward(g: f64) -> Result<Self> {
        Self::new(g, g, Direction::Forward)
    }

    /// Stationary variance D/g of the fluctuation.
    pub fn stationary_variance(&self) -> f64 {
        self.diffusion / self.g
    }
}

/// Exact one-step OU transition parameters: conditioning on the previous
/// value, the next is `decay * value + noise_sd * z` with `z ~ N(0,1)`.
#[derive(Debug, Clone, Copy)]
pub struct OuStep {
    pub decay: f64,
    pub noise_sd: f64,
}

impl OuStep {
    pub fn exact(g: f64, diffusion: f64, dt: f64) -> Self {
        let decay = (-g * dt).exp();
        let var = diffusion / g * (1.0 - (-2.0 * g * dt).exp());
        Self {
            decay,
            noise_sd: var.sqrt(),
        }
    }

    /// Euler-Maruyama discretization of the same step (O(dt) variance bias).
    pub fn euler(g: f64, diffusion: f64, dt: f64) -> Self {
        Self {
            decay: 1.0 - g * dt,
            noise_sd: (2.0 * diffusion * dt).sqrt(),
        }
    }

    #[inline]
    pub fn apply(&self, value: f64, z: f64) -> f64 {
        self.decay * value + self.noise_sd * z
    }
}

/// Which quadrature a trajectory tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Symbol {
    X,
    P,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    A,
    B,
}

/// Trajectory variable label: quadrature symbol, optional mode tag and
/// optional rotation angle (for rotated Bell quadratures).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarLabel {
    pub symbol: Symbol,
    pub mode: Option<Mode>,
    pub angle: Option<f64>,
}

impl VarLabel {
    pub fn x() -> Self {
        Self {
            symbol: Symbol::X,
            mode: None,
            angle: None,
        }
    }

    pub fn p() -> Self {
        Self {
            symbol: Symbol::P,
            mode: None,
            angle: None,
        }
    }

    pub fn mode(symbol: Symbol, mode: Mode) -> Self {
        Self {
            symbol,
            mode: Some(mode),
            angle: None,
        }
    }

    pub fn rotated(symbol: Symbol, mode: Mode, angle: f64) -> Self {
        Self {
            symbol,
            mode: Some(mode),
            angle: Some(angle),
        }
    }
}

impl std::fmt::Display for VarLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.symbol {
            Symbol::X => write!(f, "x")?,
            Symbol::P => write!(f, "p")?,
        }
        if let Some(m) = self.mode {
            write!(f, "_{}", if m == Mode::A { "A" } else { "B" })?;
        }
        if let Some(a) = self.angle {
            write!(f, "@{a:.6}")?;
        }
        Ok(())
    }
}

/// A sampled amplitude path on a time grid. Samples are indexed by ascending
/// physical time regardless of the propagation direction, so a backward
/// trajectory appears amplified forward in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub label: VarLabel,
    pub direction: Direction,
    pub samples: Vec<f64>,
    pub run_id: u64,
}

impl Trajectory {
    pub fn boundary_value(&self) -> f64 {
        match self.direction {
            Direction::Backward => *self.samples.last().unwrap(),
            Direction::Forward => self.samples[0],
        }
    }
}

/// Solve the backward equation from the future boundary value down to t = 0
/// using the exact OU transition per step.
pub fn integrate_backward(
    x_future: f64,
    grid: &TimeGrid,
    spec: &DriftNoiseSpec,
    rng: &mut impl Rng,
    label: VarLabel,
    run_id: u64,
) -> Trajectory {
    debug_assert_eq!(spec.direction, Direction::Backward);
    let step = OuStep::exact(spec.g, spec.diffusion, grid.dt);
    let mut samples = vec![0.0; grid.len()];
    samples[grid.n_steps] = x_future;
    for i in (0..grid.n_steps).rev() {
        let z: f64 = rng.sample(StandardNormal);
        samples[i] = step.apply(samples[i + 1], z);
    }
    Trajectory {
        label,
        direction: Direction::Backward,
        samples,
        run_id,
    }
}

/// Solve the forward equation from the initial value up to t_end.
pub fn integrate_forward(
    p_initial: f64,
    grid: &TimeGrid,
    spec: &DriftNoiseSpec,
    rng: &mut impl Rng,
    label: VarLabel,
    run_id: u64,
) -> Trajectory {
    debug_assert_eq!(spec.direction, Direction::Forward);
    let step = OuStep::exact(spec.g, spec.diffusion, grid.dt);
    let mut samples = vec![0.0; grid.len()];
    samples[0] = p_initial;
    for i in 0..grid.n_steps {
        let z: f64 = rng.sample(StandardNormal);
        samples[i + 1] = step.apply(samples[i], z);
    }
    Trajectory {
        label,
        direction: Direction::Forward,
        samples,
        run_id,
    }
}

/// Euler-Maruyama variant of [`integrate_forward`], kept for convergence
/// cross-checks.
pub fn integrate_forward_euler(
    p_initial: f64,
    grid: &TimeGrid,
    spec: &DriftNoiseSpec,
    rng: &mut impl Rng,
    label: VarLabel,
    run_id: u64,
) -> Trajectory {
    let step = OuStep::euler(spec.g, spec.diffusion, grid.dt);
    let mut samples = vec![0.0; grid.len()];
    samples[0] = p_initial;
    for i in 0..grid.n_steps {
        let z: f64 = rng.sample(StandardNormal);
        samples[i + 1] = step.apply(samples[i], z);
    }
    Trajectory {
        label,
        direction: Direction::Forward,
        samples,
        run_id,
    }
}

/// Eigenvalue/noise split of a backward trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// Deterministic amplified part `x_j(t) = x_j e^(g t)`.
    pub deterministic: Vec<f64>,
    /// Stationary retro-propagating fluctuation `delta x(t)`.
    pub noise: Vec<f64>,
}

impl Decomposition {
    /// Reassemble the original samples.
    pub fn reassemble(&self) -> Vec<f64> {
        self.deterministic
            .iter()
            .zip(&self.noise)
            .map(|(a, b)| a + b)
            .collect()
    }
}

/// Split a backward trajectory into the deterministic amplified component
/// through the boundary mean `G x_j` and the residual noise.
pub fn decompose(
    traj: &Trajectory,
    boundary_mean: f64,
    grid: &TimeGrid,
    g: f64,
) -> Result<Decomposition> {
    if traj.direction != Direction::Backward {
        return Err(CoreError::InvalidSpec(
            "decompose applies to backward trajectories only".into(),
        ));
    }
    let deterministic: Vec<f64> = grid
        .times()
        .map(|t| boundary_mean * (-g * (grid.t_end - t)).exp())
        .collect();
    let noise = traj
        .samples
        .iter()
        .zip(&deterministic)
        .map(|(s, d)| s - d)
        .collect();
    Ok(Decomposition {
        deterministic,
        noise,
    })
}

/// Scaled readout `x~(t) = x(t) / e^(g t)`, the inferred measurement value.
pub fn readout(traj: &Trajectory, index: usize, grid: &TimeGrid, g: f64) -> f64 {
    traj.samples[index] * (-g * grid.time_at(index)).exp()
}

/// Macroscopic-realism readout index: the earliest grid time at which the
/// amplified band separation `e^(g t) |x1 - x2|` reaches `factor` times the
/// noise band width `sqrt(D/g)`. Falls back to the final index when the
/// bands never separate that far.
pub fn readout_index(
    grid: &TimeGrid,
    spec: &DriftNoiseSpec,
    x1: f64,
    x2: f64,
    factor: f64,
) -> usize {
    let width = spec.stationary_variance().sqrt();
    let sep = (x1 - x2).abs();
    if sep == 0.0 {
        return grid.n_steps;
    }
    for i in 0..=grid.n_steps {
        if (spec.g * grid.time_at(i)).exp() * sep >= factor * width {
            return i;
        }
    }
    grid.n_steps
}
