//! State preparations and closed-form Husimi Q evaluators.
//!
//! Conventions used throughout the crate: quadratures are `x = a + a†` and
//! `p = (a - a†)/i`, the phase-space point maps to the coherent amplitude
//! `alpha = (x + i p)/2`, and every density is normalized in the `dx dp`
//! measure. The vacuum then has Husimi variance 2 per quadrature, and a
//! quadrature eigenstate regularized as a squeezed state keeps the hidden
//! vacuum level `Var = 1` as `r -> inf`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{CoreError, Result};

const NORM_TOL: f64 = 1e-12;
const PAIR_COHERENT_TAIL: f64 = 1e-10;

/// Single-mode phase-space point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(x: f64, p: f64) -> Self {
        Self { x, p }
    }

    /// Coherent amplitude `alpha = (x + i p)/2`.
    pub fn alpha(self) -> Complex64 {
        Complex64::new(self.x / 2.0, self.p / 2.0)
    }

    /// Rotated quadratures: `x_theta = x cos(theta) + p sin(theta)`,
    /// `p_theta = -x sin(theta) + p cos(theta)`.
    pub fn rotate(self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            x: self.x * c + self.p * s,
            p: -self.x * s + self.p * c,
        }
    }
}

/// Two-mode phase-space point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint2 {
    pub a: PhasePoint,
    pub b: PhasePoint,
}

impl PhasePoint2 {
    pub fn new(x_a: f64, p_a: f64, x_b: f64, p_b: f64) -> Self {
        Self {
            a: PhasePoint::new(x_a, p_a),
            b: PhasePoint::new(x_b, p_b),
        }
    }

    /// Rotate mode A by `theta` and mode B by `phi`.
    pub fn rotate(self, theta: f64, phi: f64) -> Self {
        Self {
            a: self.a.rotate(theta),
            b: self.b.rotate(phi),
        }
    }
}

/// One-dimensional Gaussian mixture with a shared variance, as produced by
/// the future-boundary marginal of an amplified state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture1d {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub variance: f64,
}

impl GaussianMixture1d {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, variance: f64) -> Result<Self> {
        if weights.len() != means.len() || weights.is_empty() {
            return Err(CoreError::InvalidSpec(
                "mixture weights and means must be non-empty and of equal length".into(),
            ));
        }
        if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(CoreError::InvalidSpec(
                "mixture weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(CoreError::InvalidSpec(format!(
                "mixture weights must sum to 1, got {total}"
            )));
        }
        if !(variance > 0.0) {
            return Err(CoreError::InvalidSpec("mixture variance must be > 0".into()));
        }
        Ok(Self {
            weights,
            means,
            variance,
        })
    }

    pub fn density(&self, x: f64) -> f64 {
        let norm = 1.0 / (2.0 * PI * self.variance).sqrt();
        self.weights
            .iter()
            .zip(&self.means)
            .map(|(w, m)| w * norm * (-(x - m).powi(2) / (2.0 * self.variance)).exp())
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let s = self.variance.sqrt();
        self.weights
            .iter()
            .zip(&self.means)
            .map(|(w, m)| w * crate::numeric::normal_cdf((x - m) / s))
            .sum()
    }
}

/// Superposition `c1 |x1> + i c2 |x2>` of quadrature eigenstates regularized
/// as squeezed states `D(x_j/2) S(r) |0>`. The relative phase `i` keeps the
/// state exactly normalized for any eigenstate overlap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperpositionSpec {
    pub c1: f64,
    pub c2_mag: f64,
    pub x1: f64,
    pub x2: f64,
    pub r: f64,
}

impl SuperpositionSpec {
    pub fn new(c1: f64, c2_mag: f64, x1: f64, x2: f64, r: f64) -> Result<Self> {
        let n = c1 * c1 + c2_mag * c2_mag;
        if (n - 1.0).abs() > NORM_TOL {
            return Err(CoreError::InvalidSpec(format!(
                "amplitudes must satisfy c1^2 + c2^2 = 1 within 1e-12, got {n}"
            )));
        }
        if c1 < 0.0 || c2_mag < 0.0 {
            return Err(CoreError::InvalidSpec(
                "amplitude magnitudes must be non-negative".into(),
            ));
        }
        if x1 == x2 || !x1.is_finite() || !x2.is_finite() {
            return Err(CoreError::InvalidSpec(
                "eigenvalues x1, x2 must be finite and distinct".into(),
            ));
        }
        if !(r > 0.0) {
            return Err(CoreError::InvalidSpec("squeezing r must be > 0".into()));
        }
        Ok(Self {
            c1,
            c2_mag,
            x1,
            x2,
            r,
        })
    }

    /// Symmetric pair `x2 = -x1`, the case printed in the source equations.
    pub fn symmetric(c1: f64, c2_mag: f64, x1: f64, r: f64) -> Result<Self> {
        Self::new(c1, c2_mag, x1, -x1, r)
    }

    /// Equal-weight symmetric superposition.
    pub fn balanced(x1: f64, r: f64) -> Result<Self> {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        Self::symmetric(c, c, x1, r)
    }

    /// Husimi x-variance `1 + e^(-2r)`.
    pub fn sigma_x2(&self) -> f64 {
        1.0 + (-2.0 * self.r).exp()
    }

    /// Husimi p-variance `1 + e^(2r)`.
    pub fn sigma_p2(&self) -> f64 {
        1.0 + (2.0 * self.r).exp()
    }

    pub fn born_weights(&self) -> [f64; 2] {
        [self.c1 * self.c1, self.c2_mag * self.c2_mag]
    }

    /// Interference frequency of the conditional in p: `(x1-x2)/(2 sigma_x^2)`.
    /// Reduces to `x1/sigma_x^2` for the symmetric pair.
    pub fn fringe_frequency(&self) -> f64 {
        (self.x1 - self.x2) / (2.0 * self.sigma_x2())
    }

    /// Husimi Q density. For the symmetric pair this is the closed form
    /// `Gaussians - 2 c1 c2 exp(...) sin(p x1 / sigma_x^2)`; the general
    /// two-mean interference argument is `(x1-x2) p / (2 sigma_x^2)`.
    pub fn q(&self, pt: PhasePoint) -> f64 {
        let sx2 = self.sigma_x2();
        let sp2 = self.sigma_p2();
        let gp = (-pt.p * pt.p / (2.0 * sp2)).exp();
        let d1 = pt.x - self.x1;
        let d2 = pt.x - self.x2;
        let diag = self.c1 * self.c1 * (-d1 * d1 / (2.0 * sx2)).exp()
            + self.c2_mag * self.c2_mag * (-d2 * d2 / (2.0 * sx2)).exp();
        let cross = 2.0
            * self.c1
            * self.c2_mag
            * (-(d1 * d1 + d2 * d2) / (4.0 * sx2)).exp()
            * (self.fringe_frequency() * pt.p).sin();
        gp * (diag - cross) / (2.0 * PI * (sx2 * sp2).sqrt())
    }

    /// Future-boundary marginal of the amplified state: weights `|c_j|^2`,
    /// means `G x_j` with `G = e^(gt)`, variance `1 + e^(2gt)(sigma_x^2 - 1)`.
    pub fn marginal_x_future(&self, g: f64, t: f64) -> Result<GaussianMixture1d> {
        if t < 0.0 {
            return Err(CoreError::InvalidSpec("boundary time must be >= 0".into()));
        }
        let gain = (g * t).exp();
        GaussianMixture1d::new(
            vec![self.c1 * self.c1, self.c2_mag * self.c2_mag],
            vec![gain * self.x1, gain * self.x2],
            1.0 + (2.0 * g * t).exp() * (self.sigma_x2() - 1.0),
        )
    }

    /// Conditional `Q(p | x)` at the initial time, derived from the joint Q:
    /// a Gaussian in p times `1 - 2 c1 c2 sin(freq * p) / W(x)` where
    /// `W(x) = c1^2 e^k + c2^2 e^-k`, `k = (x1-x2)(x - (x1+x2)/2)/(2 sigma_x^2)`.
    /// The bracket lies in [0, 2] since `2 c1 c2 <= W(x)`.
    pub fn conditional_p_given_x(&self, p: f64, x: f64) -> f64 {
        let sp2 = self.sigma_p2();
        let gauss = (-p * p / (2.0 * sp2)).exp() / (2.0 * PI * sp2).sqrt();
        gauss * self.conditional_bracket(p, x)
    }

    /// The modulation bracket of the conditional; bounded in [0, 2].
    pub fn conditional_bracket(&self, p: f64, x: f64) -> f64 {
        let sx2 = self.sigma_x2();
        let kappa = (self.x1 - self.x2) * (x - 0.5 * (self.x1 + self.x2)) / (2.0 * sx2);
        let w = self.c1 * self.c1 * kappa.exp() + self.c2_mag * self.c2_mag * (-kappa).exp();
        1.0 - 2.0 * self.c1 * self.c2_mag * (self.fringe_frequency() * p).sin() / w
    }
}

/// Diagonal mixture of quadrature eigenstates with the same regularization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub r: f64,
}

impl MixtureSpec {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(CoreError::InvalidSpec("squeezing r must be > 0".into()));
        }
        // Reuse the mixture validation; variance placeholder 1.
        GaussianMixture1d::new(weights.clone(), means.clone(), 1.0)?;
        Ok(Self { weights, means, r })
    }

    /// The mixture matching a superposition: same eigenvalues, weights `|c_j|^2`.
    pub fn matching(spec: &SuperpositionSpec) -> Self {
        Self {
            weights: vec![spec.c1 * spec.c1, spec.c2_mag * spec.c2_mag],
            means: vec![spec.x1, spec.x2],
            r: spec.r,
        }
    }

    pub fn sigma_x2(&self) -> f64 {
        1.0 + (-2.0 * self.r).exp()
    }

    pub fn sigma_p2(&self) -> f64 {
        1.0 + (2.0 * self.r).exp()
    }

    /// Husimi Q density: the interference-free Gaussian sum.
    pub fn q(&self, pt: PhasePoint) -> f64 {
        let sx2 = self.sigma_x2();
        let sp2 = self.sigma_p2();
        let gp = (-pt.p * pt.p / (2.0 * sp2)).exp();
        let diag: f64 = self
            .weights
            .iter()
            .zip(&self.means)
            .map(|(w, m)| w * (-(pt.x - m).powi(2) / (2.0 * sx2)).exp())
            .sum();
        gp * diag / (2.0 * PI * (sx2 * sp2).sqrt())
    }

    pub fn marginal_x_future(&self, g: f64, t: f64) -> Result<GaussianMixture1d> {
        if t < 0.0 {
            return Err(CoreError::InvalidSpec("boundary time must be >= 0".into()));
        }
        let gain = (g * t).exp();
        GaussianMixture1d::new(
            self.weights.clone(),
            self.means.iter().map(|m| gain * m).collect(),
            1.0 + (2.0 * g * t).exp() * (self.sigma_x2() - 1.0),
        )
    }
}

/// Two-mode squeezed vacuum with `eta = tanh(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EprSpec {
    pub r: f64,
}

impl EprSpec {
    pub fn new(r: f64) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(CoreError::InvalidSpec("EPR squeezing r must be >= 0".into()));
        }
        Ok(Self { r })
    }

    pub fn eta(&self) -> f64 {
        self.r.tanh()
    }

    /// Husimi Q density, the four-Gaussian product over the sum/difference
    /// quadratures. Factorizes exactly into an (x_A, x_B) block times a
    /// (p_A, p_B) block.
    pub fn q(&self, pt: PhasePoint2) -> f64 {
        let eta = self.eta();
        let xm = pt.a.x - pt.b.x;
        let xp = pt.a.x + pt.b.x;
        let pp = pt.a.p + pt.b.p;
        let pm = pt.a.p - pt.b.p;
        let expo = -((1.0 + eta) * (xm * xm + pp * pp) + (1.0 - eta) * (xp * xp + pm * pm)) / 8.0;
        (1.0 - eta * eta) / (16.0 * PI * PI) * expo.exp()
    }

    /// Variances of the sum/difference quadratures of the amplified state:
    /// `sigma_pm^2(t) = 2 (1 + e^(2gt) e^(+-2r))`. At `t = 0` these are the
    /// covariances implied by the Q function above.
    pub fn boundary_variances(&self, g: f64, t: f64) -> Result<(f64, f64)> {
        if t < 0.0 {
            return Err(CoreError::InvalidSpec("boundary time must be >= 0".into()));
        }
        let amp = (2.0 * g * t).exp();
        let var_plus = 2.0 * (1.0 + amp * (2.0 * self.r).exp());
        let var_minus = 2.0 * (1.0 + amp * (-2.0 * self.r).exp());
        Ok((var_plus, var_minus))
    }

    /// Correlation of the paired amplified quadratures at time t:
    /// `sinh(2r) / (cosh(2r) + e^(-2gt))`. The (p,p) pair carries the
    /// opposite sign.
    pub fn pair_correlation(&self, g: f64, t: f64) -> f64 {
        let tr = 2.0 * self.r;
        tr.sinh() / (tr.cosh() + (-2.0 * g * t).exp())
    }
}

/// Pair-coherent state: eigenstate of the product lowering operator,
/// `(ab) |psi> = zeta |psi>`, with number-basis coefficients `zeta^n / n!`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCoherentSpec {
    pub zeta: Complex64,
    pub truncation: usize,
}

impl PairCoherentSpec {
    pub fn new(zeta: impl Into<Complex64>, truncation: usize) -> Result<Self> {
        let zeta = zeta.into();
        if truncation == 0 || !zeta.norm().is_finite() {
            return Err(CoreError::InvalidSpec(
                "pair-coherent state needs finite zeta and truncation >= 1".into(),
            ));
        }
        let spec = Self { zeta, truncation };
        let tail = spec.tail_probability();
        if tail > PAIR_COHERENT_TAIL {
            return Err(CoreError::CutoffInsufficient {
                cutoff: truncation,
                what: "number-basis tail probability",
                value: tail,
                limit: PAIR_COHERENT_TAIL,
            });
        }
        Ok(spec)
    }

    /// Smallest truncation whose neglected tail probability is below 1e-10.
    pub fn auto(zeta: impl Into<Complex64>) -> Result<Self> {
        let zeta = zeta.into();
        let mut n = 4;
        loop {
            match Self::new(zeta, n) {
                Ok(spec) => return Ok(spec),
                Err(_) if n < 4096 => n *= 2,
                Err(e) => return Err(e),
            }
        }
    }

    /// Unnormalized number-basis weights `|zeta|^(2n) / (n!)^2`.
    fn weight_terms(&self, upto: usize) -> Vec<f64> {
        let z2 = self.zeta.norm_sqr();
        let mut t = 1.0;
        (0..=upto)
            .map(|n| {
                if n > 0 {
                    t *= z2 / ((n * n) as f64);
                }
                t
            })
            .collect()
    }

    /// Normalization sum, the modified Bessel `I0(2 |zeta|)`.
    pub fn norm_sum(&self) -> f64 {
        self.weight_terms(self.truncation).iter().sum()
    }

    /// Probability mass carried by coefficients beyond the truncation.
    pub fn tail_probability(&self) -> f64 {
        let extended: f64 = self.weight_terms(self.truncation + 64).iter().sum();
        (extended - self.norm_sum()) / extended
    }

    /// Husimi Q density via the truncated coherent-overlap series.
    pub fn q(&self, pt: PhasePoint2) -> f64 {
        let alpha = pt.a.alpha();
        let beta = pt.b.alpha();
        let z = self.zeta * alpha.conj() * beta.conj();
        let mut term = Complex64::new(1.0, 0.0);
        let mut h = term;
        for n in 1..=self.truncation {
            term *= z / ((n * n) as f64);
            h += term;
        }
        let gauss = (-alpha.norm_sqr() - beta.norm_sqr()).exp();
        gauss * h.norm_sqr() / (self.norm_sum() * 16.0 * PI * PI)
    }
}
