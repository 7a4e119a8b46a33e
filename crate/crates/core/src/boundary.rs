//! Samplers realizing the temporal boundary conditions.
//!
//! Backward (amplified) variables are seeded at the future boundary from the
//! Gaussian-mixture marginal of the amplified state; forward (conjugate)
//! variables are seeded at the initial time from conditional distributions.
//! Non-Gaussian targets use rejection with an analytic envelope or grid
//! inverse-CDF sampling of an oracle-computed Born joint.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{CoreError, Result};
use crate::oracle::Pdf2;
use crate::states::{EprSpec, GaussianMixture1d, PhasePoint2, SuperpositionSpec};

/// Hard guard on rejection loops; exceeding it signals an envelope bug.
const MAX_REJECTION_TRIES: u64 = 1_000_000;

/// A boundary draw tagged with the mixture component it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledSample {
    pub value: f64,
    pub component: usize,
}

/// One draw from the future-boundary mixture: pick component j with its
/// weight, then a Gaussian around the amplified mean.
pub fn sample_future_x_one(mixture: &GaussianMixture1d, rng: &mut impl Rng) -> LabeledSample {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut component = mixture.weights.len() - 1;
    for (j, w) in mixture.weights.iter().enumerate() {
        acc += w;
        if u < acc {
            component = j;
            break;
        }
    }
    let z: f64 = rng.sample(StandardNormal);
    LabeledSample {
        value: mixture.means[component] + mixture.variance.sqrt() * z,
        component,
    }
}

pub fn sample_future_x(
    mixture: &GaussianMixture1d,
    n: usize,
    rng: &mut impl Rng,
) -> Vec<LabeledSample> {
    (0..n).map(|_| sample_future_x_one(mixture, rng)).collect()
}

/// One draw of the initial conjugate value from `Q(p | x)` by rejection.
///
/// The envelope is the Gaussian prefactor with constant 2: the modulation
/// bracket is bounded in [0, 2], so the acceptance rate is at least 1/2.
pub fn sample_conditional_p_one(
    spec: &SuperpositionSpec,
    x_t1: f64,
    rng: &mut impl Rng,
) -> Result<f64> {
    let sigma_p = spec.sigma_p2().sqrt();
    for _ in 0..MAX_REJECTION_TRIES {
        let p = sigma_p * rng.sample::<f64, _>(StandardNormal);
        let accept: f64 = rng.random();
        if 2.0 * accept <= spec.conditional_bracket(p, x_t1) {
            return Ok(p);
        }
    }
    Err(CoreError::RejectionLoop(MAX_REJECTION_TRIES))
}

pub fn sample_conditional_p(
    spec: &SuperpositionSpec,
    x_t1: f64,
    n: usize,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    (0..n)
        .map(|_| sample_conditional_p_one(spec, x_t1, rng))
        .collect()
}

/// Which quadrature pair is amplified in a two-mode run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum EprSetting {
    /// Measure x at both sites.
    XX,
    /// Measure p at both sites.
    PP,
}

/// One pair draw from the future boundary of the amplified EPR state.
///
/// Sampling happens in the sum/difference coordinates where the marginal
/// factorizes with variances `2 (1 + e^(2gt) e^(+-2r))`; for the (p, p)
/// setting the squeezed/anti-squeezed roles swap.
pub fn sample_epr_future_one(
    spec: &EprSpec,
    g: f64,
    t_f: f64,
    setting: EprSetting,
    rng: &mut impl Rng,
) -> Result<(f64, f64)> {
    let (var_plus, var_minus) = spec.boundary_variances(g, t_f)?;
    let (var_sum, var_diff) = match setting {
        EprSetting::XX => (var_plus, var_minus),
        EprSetting::PP => (var_minus, var_plus),
    };
    let s = var_sum.sqrt() * rng.sample::<f64, _>(StandardNormal);
    let d = var_diff.sqrt() * rng.sample::<f64, _>(StandardNormal);
    Ok(((s + d) / 2.0, (s - d) / 2.0))
}

pub fn sample_epr_future(
    spec: &EprSpec,
    g: f64,
    t_f: f64,
    setting: EprSetting,
    n: usize,
    rng: &mut impl Rng,
) -> Result<Vec<(f64, f64)>> {
    (0..n)
        .map(|_| sample_epr_future_one(spec, g, t_f, setting, rng))
        .collect()
}

/// One pair draw of the initial-time conjugate block of the EPR Q function.
/// For an (x, x) measurement the conjugate pair is (p_A, p_B), which carries
/// the opposite correlation sign.
pub fn sample_epr_initial_conjugate_one(
    spec: &EprSpec,
    setting: EprSetting,
    rng: &mut impl Rng,
) -> (f64, f64) {
    let (var_plus, var_minus) = spec.boundary_variances(1.0, 0.0).expect("t = 0 is valid");
    // Conjugate of XX is the p block: Var(p_A + p_B) is the squeezed one.
    let (var_sum, var_diff) = match setting {
        EprSetting::XX => (var_minus, var_plus),
        EprSetting::PP => (var_plus, var_minus),
    };
    let s = var_sum.sqrt() * rng.sample::<f64, _>(StandardNormal);
    let d = var_diff.sqrt() * rng.sample::<f64, _>(StandardNormal);
    ((s + d) / 2.0, (s - d) / 2.0)
}

/// Conditional draw `b | a` from a zero-mean bivariate Gaussian with equal
/// marginal variance `var` and covariance `cov`.
pub fn sample_gaussian_conditional(value_a: f64, var: f64, cov: f64, rng: &mut impl Rng) -> f64 {
    let mean = value_a * cov / var;
    let resid = (var - cov * cov / var).max(0.0);
    mean + resid.sqrt() * rng.sample::<f64, _>(StandardNormal)
}

/// Inverse-CDF sampler over a gridded Born joint distribution. Cells are
/// drawn by their probability mass, positions jittered uniformly inside the
/// cell.
#[derive(Debug, Clone)]
pub struct BornSampler {
    grid: crate::oracle::QuadGrid,
    cumulative: Vec<f64>,
}

impl BornSampler {
    pub fn new(pdf: &Pdf2) -> Self {
        let mut cumulative = pdf.cell_masses();
        let mut acc = 0.0;
        for c in cumulative.iter_mut() {
            acc += *c;
            *c = acc;
        }
        // Guard the binary search against round-off at the top.
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Self {
            grid: pdf.grid,
            cumulative,
        }
    }

    /// One (u, v) draw from the gridded joint.
    pub fn sample(&self, rng: &mut impl Rng) -> (f64, f64) {
        let u: f64 = rng.random();
        let idx = self.cumulative.partition_point(|c| *c < u);
        let idx = idx.min(self.cumulative.len() - 1);
        let n = self.grid.n;
        let (i, j) = (idx / n, idx % n);
        let w = self.grid.step();
        let ju: f64 = rng.random();
        let jv: f64 = rng.random();
        (
            self.grid.min + (i as f64 + ju) * w,
            self.grid.min + (j as f64 + jv) * w,
        )
    }
}

/// One amplified boundary pair for the Bell scenario: the Husimi marginal of
/// the amplified state equals the Born distribution dilated by the gain and
/// convolved with unit vacuum noise, so the draw is `G u + N(0, 1)`.
/// Returns the amplified pair and the underlying Born draw.
pub fn sample_born_boundary_one(
    sampler: &BornSampler,
    gain: f64,
    rng: &mut impl Rng,
) -> ((f64, f64), (f64, f64)) {
    let (u, v) = sampler.sample(rng);
    let za: f64 = rng.sample(StandardNormal);
    let zb: f64 = rng.sample(StandardNormal);
    ((gain * u + za, gain * v + zb), (u, v))
}

pub fn sample_born_boundary(
    sampler: &BornSampler,
    gain: f64,
    n: usize,
    rng: &mut impl Rng,
) -> Vec<(f64, f64)> {
    (0..n)
        .map(|_| sample_born_boundary_one(sampler, gain, rng).0)
        .collect()
}

/// Rejection sampler for the initial conjugate pair `(p_A, p_B)` conditioned
/// on backward values `(x_A, x_B)`, against an arbitrary 4D Q density.
/// The envelope is an isotropic Gaussian whose dominating constant is found
/// by a deterministic grid scan at construction.
pub struct ConditionalPairSampler<F: Fn(PhasePoint2) -> f64> {
    q: F,
    x_a: f64,
    x_b: f64,
    envelope_sd: f64,
    bound: f64,
}

impl<F: Fn(PhasePoint2) -> f64> ConditionalPairSampler<F> {
    pub fn new(q: F, x_a: f64, x_b: f64, envelope_sd: f64) -> Result<Self> {
        if !(envelope_sd > 0.0) {
            return Err(CoreError::InvalidSpec("envelope sd must be > 0".into()));
        }
        let mut bound = 0.0f64;
        let scan = 61;
        let span = 6.0 * envelope_sd;
        for i in 0..scan {
            for j in 0..scan {
                let pa = -span + 2.0 * span * i as f64 / (scan - 1) as f64;
                let pb = -span + 2.0 * span * j as f64 / (scan - 1) as f64;
                let target = q(PhasePoint2::new(x_a, pa, x_b, pb));
                let ratio = target / gaussian2(pa, pb, envelope_sd);
                bound = bound.max(ratio);
            }
        }
        if !bound.is_finite() || bound == 0.0 {
            return Err(CoreError::InvalidSpec(
                "conditional pair target is degenerate on the scan window".into(),
            ));
        }
        Ok(Self {
            q,
            x_a,
            x_b,
            envelope_sd,
            bound: 2.0 * bound,
        })
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Result<(f64, f64)> {
        for _ in 0..MAX_REJECTION_TRIES {
            let pa = self.envelope_sd * rng.sample::<f64, _>(StandardNormal);
            let pb = self.envelope_sd * rng.sample::<f64, _>(StandardNormal);
            let target = (self.q)(PhasePoint2::new(self.x_a, pa, self.x_b, pb));
            let envelope = self.bound * gaussian2(pa, pb, self.envelope_sd);
            if target > envelope {
                return Err(CoreError::RejectionLoop(0));
            }
            if rng.random::<f64>() * envelope <= target {
                return Ok((pa, pb));
            }
        }
        Err(CoreError::RejectionLoop(MAX_REJECTION_TRIES))
    }
}

fn gaussian2(a: f64, b: f64, sd: f64) -> f64 {
    let var = sd * sd;
    (-(a * a + b * b) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var)
}
