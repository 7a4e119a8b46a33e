//! Independent truncated-Fock-space reference.
//!
//! Everything here is exact linear algebra on number-basis coefficients:
//! state construction by stable recursions, quadratic (squeeze) evolution by
//! operator algebra with a matrix-exponential fallback, Husimi Q evaluation
//! by the coherent-overlap series, and quadrature distributions by Hermite
//! function expansion. The oracle validates the closed-form densities and the
//! sampled trajectory statistics; it never enters the trajectory dynamics
//! itself (boundary-table construction excepted).

mod grid;

pub use grid::{
    born_reference, chsh_grid_search, chsh_reference, packaged_chsh_reference, BornReference,
    ChshReference, ChshSearch, ChshSettings, Pdf1, Pdf2, QuadGrid, ReferenceTable,
};

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::states::{PhasePoint, PhasePoint2, SuperpositionSpec};
use std::f64::consts::PI;

const NORM_TOL: f64 = 1e-10;
const TAIL_TOL: f64 = 1e-8;

/// Fraction of top coefficients counted as the declared tail.
fn tail_start(cutoff: usize) -> usize {
    cutoff - (cutoff / 10).max(1)
}

/// Single-mode state in the truncated number basis.
#[derive(Debug, Clone)]
pub struct FockState1 {
    c: Vec<Complex64>,
}

impl FockState1 {
    pub fn from_coefficients(c: Vec<Complex64>) -> Result<Self> {
        let state = Self { c };
        state.check()?;
        Ok(state)
    }

    pub fn vacuum(cutoff: usize) -> Self {
        let mut c = vec![Complex64::ZERO; cutoff];
        c[0] = Complex64::ONE;
        Self { c }
    }

    pub fn cutoff(&self) -> usize {
        self.c.len()
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.c
    }

    /// Displaced squeezed state `D(mean_x/2) S(r) |0>` via the three-term
    /// recursion obtained from the annihilation eigenoperator. Negative `r`
    /// gives the anti-squeezed state.
    pub fn displaced_squeezed(mean_x: f64, r: f64, cutoff: usize) -> Result<Self> {
        let beta = mean_x / 2.0;
        let th = r.tanh();
        let mut c = vec![Complex64::ZERO; cutoff];
        let c0 = (1.0 / r.cosh()).sqrt() * (-beta * beta * (1.0 + th) / 2.0).exp();
        c[0] = Complex64::new(c0, 0.0);
        let drive = beta * (1.0 + th);
        for n in 0..cutoff - 1 {
            let prev = if n == 0 { Complex64::ZERO } else { c[n - 1] };
            c[n + 1] = (drive * c[n] - th * (n as f64).sqrt() * prev) / ((n + 1) as f64).sqrt();
        }
        Self::from_coefficients(c)
    }

    /// Like [`Self::displaced_squeezed`] but doubles the cutoff until the
    /// norm and tail gates pass.
    pub fn displaced_squeezed_auto(mean_x: f64, r: f64) -> Result<Self> {
        let mut cutoff = 64;
        loop {
            match Self::displaced_squeezed(mean_x, r, cutoff) {
                Ok(s) => return Ok(s),
                Err(_) if cutoff < 16384 => cutoff *= 2,
                Err(e) => return Err(e),
            }
        }
    }

    /// Superposition `c1 |x1> + i c2 |x2>` of displaced squeezed components.
    /// The norm is asserted to be 1 within 1e-10 before renormalizing: the
    /// relative phase `i` cancels the real eigenstate overlap exactly, so any
    /// deviation is truncation error.
    pub fn superposition(spec: &SuperpositionSpec, cutoff: usize) -> Result<Self> {
        Self::superposition_evolved(spec, 0.0, 0.0, cutoff)
    }

    /// The superposition amplified for time `t` at gain rate `g`: each
    /// component's mean scales by `e^(gt)` and its squeezing parameter shifts
    /// to `r - gt`, with the superposition amplitudes unchanged.
    pub fn superposition_evolved(
        spec: &SuperpositionSpec,
        g: f64,
        t: f64,
        cutoff: usize,
    ) -> Result<Self> {
        let gain = (g * t).exp();
        let r_t = spec.r - g * t;
        let one = Self::displaced_squeezed(gain * spec.x1, r_t, cutoff)?;
        let two = Self::displaced_squeezed(gain * spec.x2, r_t, cutoff)?;
        let mut c: Vec<Complex64> = one
            .c
            .iter()
            .zip(&two.c)
            .map(|(a, b)| spec.c1 * a + Complex64::i() * spec.c2_mag * b)
            .collect();
        let norm = c.iter().map(|v| v.norm_sqr()).sum::<f64>();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(CoreError::CutoffInsufficient {
                cutoff,
                what: "superposition norm deviation",
                value: (norm - 1.0).abs(),
                limit: NORM_TOL,
            });
        }
        let scale = 1.0 / norm.sqrt();
        c.iter_mut().for_each(|v| *v *= scale);
        Self::from_coefficients(c)
    }

    fn check(&self) -> Result<()> {
        let cutoff = self.cutoff();
        let norm = self.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(CoreError::CutoffInsufficient {
                cutoff,
                what: "norm deviation",
                value: (norm - 1.0).abs(),
                limit: NORM_TOL,
            });
        }
        let tail = self.tail_mass();
        if tail > TAIL_TOL {
            return Err(CoreError::CutoffInsufficient {
                cutoff,
                what: "tail mass",
                value: tail,
                limit: TAIL_TOL,
            });
        }
        Ok(())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Probability mass in the top 10% of coefficients.
    pub fn tail_mass(&self) -> f64 {
        self.c[tail_start(self.cutoff())..]
            .iter()
            .map(|v| v.norm_sqr())
            .sum()
    }

    /// Phase-rotated state whose x-quadrature distribution equals the
    /// distribution of `x_theta = x cos(theta) + p sin(theta)` of `self`.
    pub fn rotated(&self, theta: f64) -> Self {
        let c = self
            .c
            .iter()
            .enumerate()
            .map(|(n, v)| v * Complex64::from_polar(1.0, -(n as f64) * theta))
            .collect();
        Self { c }
    }

    /// Squeeze evolution `exp((g t / 2)(e^(2i theta) a^+2 - e^(-2i theta) a^2))`
    /// applied mechanically in the number basis (sub-stepped Taylor expansion
    /// of the banded generator). For `theta = 0` this amplifies the x
    /// quadrature by `e^(gt)`.
    pub fn evolve_squeeze(&self, g: f64, t: f64, theta: f64) -> Result<Self> {
        Self::from_coefficients(apply_squeeze(&self.c, g * t, theta))
    }

    /// Husimi Q density at a phase-space point (dx dp measure).
    pub fn q_eval(&self, pt: PhasePoint) -> f64 {
        let alpha = pt.alpha();
        let overlap = coherent_overlap(&self.c, alpha);
        overlap.norm_sqr() * (-alpha.norm_sqr()).exp() / (4.0 * PI)
    }

    /// Mean and variance of the x quadrature (`x = a + a^+`).
    pub fn x_moments(&self) -> (f64, f64) {
        let mut a_mean = Complex64::ZERO;
        let mut a2 = Complex64::ZERO;
        let mut n_mean = 0.0;
        for n in 0..self.cutoff() {
            let cn = self.c[n];
            n_mean += n as f64 * cn.norm_sqr();
            if n + 1 < self.cutoff() {
                a_mean += cn.conj() * self.c[n + 1] * ((n + 1) as f64).sqrt();
            }
            if n + 2 < self.cutoff() {
                a2 += cn.conj() * self.c[n + 2] * (((n + 1) * (n + 2)) as f64).sqrt();
            }
        }
        let mean = 2.0 * a_mean.re;
        let x2 = 2.0 * a2.re + 2.0 * n_mean + 1.0;
        (mean, x2 - mean * mean)
    }

    /// Born distribution of the rotated quadrature on a grid.
    pub fn quadrature_pdf(&self, theta: f64, grid: &QuadGrid) -> Result<Pdf1> {
        let rotated = self.rotated(theta);
        let xs = grid.points();
        let table = hermite_table(self.cutoff(), &xs);
        let mut values = vec![0.0; xs.len()];
        for (i, v) in values.iter_mut().enumerate() {
            let mut psi = Complex64::ZERO;
            for (n, cn) in rotated.c.iter().enumerate() {
                psi += cn * table[(n, i)];
            }
            *v = psi.norm_sqr();
        }
        Pdf1::new(*grid, values)
    }
}

/// Two-mode state in the truncated number basis.
#[derive(Debug, Clone)]
pub struct FockState2 {
    c: Array2<Complex64>,
}

impl FockState2 {
    pub fn from_coefficients(c: Array2<Complex64>) -> Result<Self> {
        let state = Self { c };
        state.check()?;
        Ok(state)
    }

    pub fn cutoff(&self) -> usize {
        self.c.nrows()
    }

    pub fn coefficient(&self, m: usize, n: usize) -> Complex64 {
        self.c[(m, n)]
    }

    /// Two-mode squeezed vacuum with Schmidt coefficients
    /// `sqrt(1 - eta^2) eta^n`, `eta = tanh r`. The cutoff is chosen so the
    /// neglected geometric tail is below 1e-12.
    pub fn epr(r: f64) -> Result<Self> {
        let eta = r.tanh();
        let cutoff = if eta < 1e-12 {
            8
        } else {
            ((-12.0 * std::f64::consts::LN_10 / (2.0 * eta.ln())).ceil() as usize).max(8)
        };
        Self::epr_with_cutoff(r, cutoff)
    }

    /// EPR state at an explicit cutoff, e.g. to leave headroom for evolution.
    pub fn epr_with_cutoff(r: f64, cutoff: usize) -> Result<Self> {
        let eta = r.tanh();
        let mut c = Array2::zeros((cutoff, cutoff));
        let scale = (1.0 - eta * eta).sqrt();
        let mut coeff = scale;
        for n in 0..cutoff {
            c[(n, n)] = Complex64::new(coeff, 0.0);
            coeff *= eta;
        }
        let norm = c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        c.mapv_inplace(|v| v / norm);
        Self::from_coefficients(c)
    }

    /// Pair-coherent state `(ab)|psi> = zeta |psi>`, coefficients `zeta^n/n!`.
    /// The truncation must satisfy the tail gate of
    /// [`crate::states::PairCoherentSpec`].
    pub fn pair_coherent(zeta: Complex64, truncation: usize) -> Result<Self> {
        crate::states::PairCoherentSpec::new(zeta, truncation)?;
        let cutoff = truncation + 1;
        let mut diag = vec![Complex64::ONE; cutoff];
        for n in 1..cutoff {
            diag[n] = diag[n - 1] * zeta / n as f64;
        }
        let norm = diag.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let mut c = Array2::zeros((cutoff, cutoff));
        for (n, v) in diag.iter().enumerate() {
            c[(n, n)] = v / norm;
        }
        Self::from_coefficients(c)
    }

    fn check(&self) -> Result<()> {
        let norm = self.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(CoreError::CutoffInsufficient {
                cutoff: self.cutoff(),
                what: "norm deviation",
                value: (norm - 1.0).abs(),
                limit: NORM_TOL,
            });
        }
        let tail = self.tail_mass();
        if tail > TAIL_TOL {
            return Err(CoreError::CutoffInsufficient {
                cutoff: self.cutoff(),
                what: "tail mass",
                value: tail,
                limit: TAIL_TOL,
            });
        }
        Ok(())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn tail_mass(&self) -> f64 {
        let start = tail_start(self.cutoff());
        let mut tail = 0.0;
        for ((m, n), v) in self.c.indexed_iter() {
            if m >= start || n >= start {
                tail += v.norm_sqr();
            }
        }
        tail
    }

    /// Phase rotation by `theta` on mode A and `phi` on mode B; the x
    /// distribution of the result is the rotated-quadrature distribution.
    pub fn rotated(&self, theta: f64, phi: f64) -> Self {
        let mut c = self.c.clone();
        for ((m, n), v) in c.indexed_iter_mut() {
            *v *= Complex64::from_polar(1.0, -(m as f64) * theta - (n as f64) * phi);
        }
        Self { c }
    }

    /// Independent squeeze evolution of each mode, applied mechanically to
    /// every column (mode A) and row (mode B) of the coefficient matrix.
    pub fn evolve_squeeze(&self, g: f64, t: f64, theta_a: f64, theta_b: f64) -> Result<Self> {
        let k = self.cutoff();
        let mut c = self.c.clone();
        let mut scratch = vec![Complex64::ZERO; k];
        for j in 0..k {
            for i in 0..k {
                scratch[i] = c[(i, j)];
            }
            let out = apply_squeeze(&scratch, g * t, theta_a);
            for i in 0..k {
                c[(i, j)] = out[i];
            }
        }
        for i in 0..k {
            for j in 0..k {
                scratch[j] = c[(i, j)];
            }
            let out = apply_squeeze(&scratch, g * t, theta_b);
            for j in 0..k {
                c[(i, j)] = out[j];
            }
        }
        Self::from_coefficients(c)
    }

    /// Husimi Q density at a two-mode phase-space point (dx dp measure).
    pub fn q_eval(&self, pt: PhasePoint2) -> f64 {
        let alpha = pt.a.alpha();
        let beta = pt.b.alpha();
        let ta = overlap_terms(self.cutoff(), alpha);
        let tb = overlap_terms(self.cutoff(), beta);
        let mut s = Complex64::ZERO;
        for m in 0..self.cutoff() {
            let mut row = Complex64::ZERO;
            for n in 0..self.cutoff() {
                let coeff = self.c[(m, n)];
                if coeff != Complex64::ZERO {
                    row += coeff * tb[n];
                }
            }
            s += ta[m] * row;
        }
        s.norm_sqr() * (-alpha.norm_sqr() - beta.norm_sqr()).exp() / (16.0 * PI * PI)
    }

    /// Symmetrized quadrature covariances (zero-mean states).
    pub fn quad_moments(&self) -> QuadMoments {
        let k = self.cutoff();
        let c = &self.c;
        let mut a_sq = Complex64::ZERO; // <a^2>
        let mut b_sq = Complex64::ZERO; // <b^2>
        let mut ab = Complex64::ZERO; // <a b>
        let mut ab_dag = Complex64::ZERO; // <a b^+>
        let mut mean_na = 0.0;
        let mut mean_nb = 0.0;
        for ((m, n), v) in c.indexed_iter() {
            let w = v.norm_sqr();
            if w == 0.0 {
                continue;
            }
            mean_na += m as f64 * w;
            mean_nb += n as f64 * w;
            let vc = v.conj();
            if m + 1 < k && n + 1 < k {
                ab += vc * c[(m + 1, n + 1)] * (((m + 1) * (n + 1)) as f64).sqrt();
            }
            if m + 1 < k && n >= 1 {
                ab_dag += vc * c[(m + 1, n - 1)] * (((m + 1) * n) as f64).sqrt();
            }
            if m + 2 < k {
                a_sq += vc * c[(m + 2, n)] * (((m + 1) * (m + 2)) as f64).sqrt();
            }
            if n + 2 < k {
                b_sq += vc * c[(m, n + 2)] * (((n + 1) * (n + 2)) as f64).sqrt();
            }
        }
        QuadMoments {
            var_x_a: 2.0 * a_sq.re + 2.0 * mean_na + 1.0,
            var_x_b: 2.0 * b_sq.re + 2.0 * mean_nb + 1.0,
            var_p_a: -2.0 * a_sq.re + 2.0 * mean_na + 1.0,
            var_p_b: -2.0 * b_sq.re + 2.0 * mean_nb + 1.0,
            cov_x: 2.0 * (ab + ab_dag).re,
            cov_p: 2.0 * (ab_dag - ab).re,
        }
    }

    /// Born joint distribution of the rotated quadratures on a grid.
    pub fn quadrature_joint(&self, theta: f64, phi: f64, grid: &QuadGrid) -> Result<Pdf2> {
        let rotated = self.rotated(theta, phi);
        let xs = grid.points();
        let table = hermite_table(self.cutoff(), &xs);
        let m = xs.len();
        let k = self.cutoff();
        // Psi = H^T C H, evaluated as H^T (C H).
        let mut ch = Array2::<Complex64>::zeros((k, m));
        for a in 0..k {
            for b in 0..k {
                let coeff = rotated.c[(a, b)];
                if coeff == Complex64::ZERO {
                    continue;
                }
                for i in 0..m {
                    ch[(a, i)] += coeff * table[(b, i)];
                }
            }
        }
        let mut values = Array2::<f64>::zeros((m, m));
        for i in 0..m {
            for j in 0..m {
                let mut acc = Complex64::ZERO;
                for a in 0..k {
                    acc += table[(a, i)] * ch[(a, j)];
                }
                values[(i, j)] = acc.norm_sqr();
            }
        }
        Pdf2::new(*grid, values)
    }
}

/// Quadrature covariance bundle for zero-mean two-mode states.
#[derive(Debug, Clone, Copy)]
pub struct QuadMoments {
    pub var_x_a: f64,
    pub var_x_b: f64,
    pub var_p_a: f64,
    pub var_p_b: f64,
    pub cov_x: f64,
    pub cov_p: f64,
}

impl QuadMoments {
    pub fn var_x_diff(&self) -> f64 {
        self.var_x_a + self.var_x_b - 2.0 * self.cov_x
    }

    pub fn var_p_sum(&self) -> f64 {
        self.var_p_a + self.var_p_b + 2.0 * self.cov_p
    }
}

/// Terms `conj(alpha)^n / sqrt(n!)` of the coherent overlap series.
fn overlap_terms(cutoff: usize, alpha: Complex64) -> Vec<Complex64> {
    let ac = alpha.conj();
    let mut t = vec![Complex64::ONE; cutoff];
    for n in 1..cutoff {
        t[n] = t[n - 1] * ac / (n as f64).sqrt();
    }
    t
}

fn coherent_overlap(c: &[Complex64], alpha: Complex64) -> Complex64 {
    let terms = overlap_terms(c.len(), alpha);
    c.iter().zip(terms).map(|(cn, t)| cn * t).sum()
}

/// Hermite-function table `psi_n(x)` in the `x = a + a^+` scaling:
/// `psi_0 = (2 pi)^(-1/4) exp(-x^2/4)`,
/// `x psi_n = sqrt(n) psi_(n-1) + sqrt(n+1) psi_(n+1)`.
pub(crate) fn hermite_table(n_max: usize, xs: &[f64]) -> Array2<f64> {
    let mut table = Array2::zeros((n_max, xs.len()));
    let norm0 = (2.0 * PI).powf(-0.25);
    for (i, &x) in xs.iter().enumerate() {
        table[(0, i)] = norm0 * (-x * x / 4.0).exp();
        if n_max > 1 {
            table[(1, i)] = x * table[(0, i)];
        }
        for n in 1..n_max.saturating_sub(1) {
            table[(n + 1, i)] = (x * table[(n, i)] - (n as f64).sqrt() * table[(n - 1, i)])
                / ((n + 1) as f64).sqrt();
        }
    }
    table
}

/// `exp((s/2)(e^(2i theta) a^+2 - e^(-2i theta) a^2)) c` for a coefficient
/// vector, via sub-steps small enough for a rapidly converging Taylor
/// expansion of the banded generator.
pub fn apply_squeeze(c: &[Complex64], s: f64, theta: f64) -> Vec<Complex64> {
    let n = c.len();
    if s == 0.0 {
        return c.to_vec();
    }
    // Generator amplitudes reach ~ (|s|/2) n near the cutoff.
    let norm_est = 0.5 * s.abs() * n as f64;
    let substeps = ((norm_est / 0.25).ceil() as usize).max(1);
    let sub = s / substeps as f64;
    let phase = Complex64::from_polar(1.0, 2.0 * theta);
    let apply_k = |v: &[Complex64], out: &mut [Complex64]| {
        out.iter_mut().for_each(|o| *o = Complex64::ZERO);
        for m in 0..n.saturating_sub(2) {
            let amp = (((m + 1) * (m + 2)) as f64).sqrt() * sub / 2.0;
            out[m + 2] += phase * amp * v[m];
            out[m] -= phase.conj() * amp * v[m + 2];
        }
    };
    let mut state = c.to_vec();
    let mut term = vec![Complex64::ZERO; n];
    let mut next = vec![Complex64::ZERO; n];
    for _ in 0..substeps {
        term.copy_from_slice(&state);
        let mut acc = state.clone();
        for order in 1..64u32 {
            apply_k(&term, &mut next);
            let inv = 1.0 / order as f64;
            let mut term_norm = 0.0;
            for (t, nx) in term.iter_mut().zip(&next) {
                *t = nx * inv;
                term_norm += t.norm_sqr();
            }
            for (a, t) in acc.iter_mut().zip(&term) {
                *a += t;
            }
            if term_norm < 1e-34 {
                break;
            }
        }
        state = acc;
    }
    state
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn vacuum_is_trivial() {
        let v = FockState1::displaced_squeezed(0.0, 0.0, 16).unwrap();
        assert_relative_eq!(v.coefficients()[0].re, 1.0, max_relative = 1e-14);
        assert!(v.coefficients()[1..].iter().all(|c| c.norm() < 1e-14));
        assert_abs_diff_eq!(
            v.q_eval(PhasePoint::new(0.0, 0.0)),
            1.0 / (4.0 * PI),
            epsilon = 1e-15
        );
    }

    #[test]
    fn displaced_squeezed_moments() {
        let s = FockState1::displaced_squeezed_auto(0.8, 2.0).unwrap();
        let (mean, var) = s.x_moments();
        assert_relative_eq!(mean, 0.8, max_relative = 1e-9);
        assert_relative_eq!(var, (-4.0f64).exp(), max_relative = 1e-8);
    }

    #[test]
    fn epr_coefficient_ratio() {
        let s = FockState2::epr(2.0).unwrap();
        let ratio = (s.coefficient(11, 11) / s.coefficient(10, 10)).re;
        assert_relative_eq!(ratio, 2.0f64.tanh(), max_relative = 1e-12);
        assert_relative_eq!(s.norm_sqr(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn epr_quadrature_covariances() {
        let s = FockState2::epr(2.0).unwrap();
        let m = s.quad_moments();
        assert_relative_eq!(m.var_x_diff(), 2.0 * (-4.0f64).exp(), max_relative = 1e-8);
        assert_relative_eq!(m.var_p_sum(), 2.0 * (-4.0f64).exp(), max_relative = 1e-8);
        assert_relative_eq!(m.var_x_a, 4.0f64.cosh(), max_relative = 1e-8);
        assert_relative_eq!(m.cov_x, 4.0f64.sinh(), max_relative = 1e-8);
        assert_relative_eq!(m.cov_p, -4.0f64.sinh(), max_relative = 1e-8);
    }

    #[test]
    fn superposition_norm_includes_overlap() {
        // Modest separation so the eigenstate overlap is clearly nonzero;
        // the i-phase keeps the norm exactly 1 up to truncation.
        let spec = SuperpositionSpec::balanced(0.4, 1.0).unwrap();
        let one = FockState1::displaced_squeezed(0.4, 1.0, 256).unwrap();
        let two = FockState1::displaced_squeezed(-0.4, 1.0, 256).unwrap();
        let overlap: Complex64 = one
            .coefficients()
            .iter()
            .zip(two.coefficients())
            .map(|(a, b)| a.conj() * b)
            .sum();
        let expected = (-(0.8f64 * 0.8) * (2.0f64).exp() / 8.0).exp();
        assert_relative_eq!(overlap.re, expected, max_relative = 1e-8);
        assert!(overlap.im.abs() < 1e-12);
        let raw_norm: f64 = one
            .coefficients()
            .iter()
            .zip(two.coefficients())
            .map(|(a, b)| {
                let c = std::f64::consts::FRAC_1_SQRT_2;
                (c * a + Complex64::i() * c * b).norm_sqr()
            })
            .sum();
        assert_abs_diff_eq!(raw_norm, 1.0, epsilon = 1e-10);
        assert!(FockState1::superposition(&spec, 256).is_ok());
    }

    #[test]
    fn squeeze_matrix_dilates_vacuum() {
        let v = FockState1::vacuum(96);
        let s = v.evolve_squeeze(1.0, 0.4, 0.0).unwrap();
        let (_, var) = s.x_moments();
        assert_relative_eq!(var, (0.8f64).exp(), max_relative = 1e-9);
        // Duration 0 is the identity.
        let id = v.evolve_squeeze(1.0, 0.0, 0.0).unwrap();
        assert_relative_eq!(id.coefficients()[0].re, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn squeeze_matrix_agrees_with_algebra() {
        // The mechanical number-basis exponential must agree with the exact
        // parameter evolution of a displaced squeezed state. The deviation is
        // pure truncation-boundary flow and shrinks with the cutoff.
        let start = FockState1::displaced_squeezed(0.6, 1.2, 224).unwrap();
        let evolved = start.evolve_squeeze(1.0, 0.5, 0.0).unwrap();
        let algebra =
            FockState1::displaced_squeezed(0.6 * (0.5f64).exp(), 1.2 - 0.5, 224).unwrap();
        let mut max_diff = 0.0f64;
        for (a, b) in evolved.coefficients().iter().zip(algebra.coefficients()) {
            max_diff = max_diff.max((a - b).norm());
        }
        assert!(max_diff < 1e-9, "coefficient mismatch {max_diff}");
        let (mean, _) = evolved.x_moments();
        assert_relative_eq!(mean, 0.6 * (0.5f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn rotation_moves_mean_between_quadratures() {
        let s = FockState1::displaced_squeezed_auto(1.0, 1.0).unwrap();
        // x_theta at theta = pi/2 is p, which has zero mean here.
        let rot = s.rotated(std::f64::consts::FRAC_PI_2);
        let (mean, _) = rot.x_moments();
        assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-10);
        assert_relative_eq!(rot.norm_sqr(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn pair_coherent_matches_closed_form() {
        let spec = crate::states::PairCoherentSpec::auto(1.1).unwrap();
        let fock = FockState2::pair_coherent(spec.zeta, spec.truncation).unwrap();
        for pt in [
            PhasePoint2::new(1.0, 0.0, 1.0, 0.0),
            PhasePoint2::new(0.3, -1.1, 0.9, 0.4),
            PhasePoint2::new(0.0, 0.0, 0.0, 0.0),
        ] {
            assert_abs_diff_eq!(fock.q_eval(pt), spec.q(pt), epsilon = 1e-10);
        }
    }
}
