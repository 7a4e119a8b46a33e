//! Gridded quadrature distributions and the CHSH reference machinery.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{hermite_table, FockState1, FockState2};
use crate::error::{CoreError, Result};
use crate::numeric::erf;
use crate::states::{PairCoherentSpec, SuperpositionSpec};

const COVERAGE: f64 = 1.0 - 1e-8;

/// Uniform cell-centered grid: `n` cells of width `(max-min)/n`, evaluation
/// points at the cell centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadGrid {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl QuadGrid {
    pub fn symmetric(extent: f64, n: usize) -> Self {
        Self {
            min: -extent,
            max: extent,
            n,
        }
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / self.n as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.min + (i as f64 + 0.5) * self.step()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.center(i)).collect()
    }
}

/// Normalized 1D probability density on a grid.
#[derive(Debug, Clone)]
pub struct Pdf1 {
    pub grid: QuadGrid,
    pub values: Vec<f64>,
}

impl Pdf1 {
    /// Wraps raw density values after checking that the grid captures the
    /// required mass, then renormalizes on the grid.
    pub fn new(grid: QuadGrid, mut values: Vec<f64>) -> Result<Self> {
        let mass: f64 = values.iter().sum::<f64>() * grid.step();
        if mass < COVERAGE {
            return Err(CoreError::GridCoverage {
                covered: mass,
                needed: COVERAGE,
            });
        }
        values.iter_mut().for_each(|v| *v /= mass);
        Ok(Self { grid, values })
    }

    pub fn mean(&self) -> f64 {
        let w = self.grid.step();
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| self.grid.center(i) * v * w)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let w = self.grid.step();
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| (self.grid.center(i) - m).powi(2) * v * w)
            .sum()
    }

    /// Probability mass in cells whose center lies at or above `cut`.
    pub fn mass_above(&self, cut: f64) -> f64 {
        let w = self.grid.step();
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.center(*i) >= cut)
            .map(|(_, v)| v * w)
            .sum()
    }

    pub fn cdf_at(&self, x: f64) -> f64 {
        let w = self.grid.step();
        let mut acc = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            let hi = self.grid.min + (i as f64 + 1.0) * w;
            if hi <= x {
                acc += v * w;
            } else {
                let lo = hi - w;
                if x > lo {
                    acc += v * (x - lo);
                }
                break;
            }
        }
        acc.min(1.0)
    }
}

/// Normalized 2D probability density on a tensor grid (same axis for both
/// variables). `values[(i, j)]` is the density at `(u_i, v_j)`.
#[derive(Debug, Clone)]
pub struct Pdf2 {
    pub grid: QuadGrid,
    pub values: Array2<f64>,
}

impl Pdf2 {
    pub fn new(grid: QuadGrid, mut values: Array2<f64>) -> Result<Self> {
        let da = grid.step() * grid.step();
        let mass: f64 = values.iter().sum::<f64>() * da;
        if mass < COVERAGE {
            return Err(CoreError::GridCoverage {
                covered: mass,
                needed: COVERAGE,
            });
        }
        values.mapv_inplace(|v| v / mass);
        Ok(Self { grid, values })
    }

    /// Sign-binned correlator `E = <sign(u) sign(v)>`.
    pub fn quadrant_correlator(&self) -> f64 {
        self.weighted_correlator(|x| if x >= 0.0 { 1.0 } else { -1.0 })
    }

    /// Finite-gain correlator: the boundary sample is `G u + N(0,1)`, so the
    /// expected sign given `u` is `erf(G u / sqrt(2))`.
    pub fn smoothed_correlator(&self, gain: f64) -> f64 {
        self.weighted_correlator(|x| erf(gain * x / std::f64::consts::SQRT_2))
    }

    fn weighted_correlator(&self, weight: impl Fn(f64) -> f64) -> f64 {
        let w = self.grid.step();
        let marks: Vec<f64> = (0..self.grid.n)
            .map(|i| weight(self.grid.center(i)))
            .collect();
        let mut acc = 0.0;
        for i in 0..self.grid.n {
            let mut row = 0.0;
            for j in 0..self.grid.n {
                row += self.values[(i, j)] * marks[j];
            }
            acc += marks[i] * row;
        }
        acc * w * w
    }

    pub fn marginal_u(&self) -> Result<Pdf1> {
        let w = self.grid.step();
        let values: Vec<f64> = (0..self.grid.n)
            .map(|i| (0..self.grid.n).map(|j| self.values[(i, j)]).sum::<f64>() * w)
            .collect();
        Pdf1::new(self.grid, values)
    }

    /// Cell probability masses, row-major, for inverse-CDF sampling.
    pub fn cell_masses(&self) -> Vec<f64> {
        let da = self.grid.step() * self.grid.step();
        self.values.iter().map(|v| v * da).collect()
    }
}

/// Measurement settings for the four CHSH correlators
/// `(theta, phi), (theta', phi), (theta, phi'), (theta', phi')`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub theta: f64,
    pub theta_prime: f64,
    pub phi: f64,
    pub phi_prime: f64,
}

impl ChshSettings {
    /// One-parameter family `(0, -2 chi, chi, -chi)` that reduces the CHSH
    /// combination to `|3 E(chi) - E(3 chi)|` for sum-covariant states.
    pub fn from_chi(chi: f64) -> Self {
        Self {
            theta: 0.0,
            theta_prime: -2.0 * chi,
            phi: chi,
            phi_prime: -chi,
        }
    }

    pub fn pairs(&self) -> [(f64, f64); 4] {
        [
            (self.theta, self.phi),
            (self.theta_prime, self.phi),
            (self.theta, self.phi_prime),
            (self.theta_prime, self.phi_prime),
        ]
    }
}

/// CHSH statistic from the four correlators.
pub fn chsh_s(e: &[f64; 4]) -> f64 {
    (e[0] + e[1] + e[2] - e[3]).abs()
}

/// Oracle CHSH values for a pair-coherent state at given settings: the
/// `G -> inf` sign-binned correlators from quadrant masses, and the
/// finite-gain smoothed correlators the simulator actually samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChshReference {
    pub zeta: f64,
    pub settings: ChshSettings,
    pub e_table: [f64; 4],
    pub s: f64,
    pub gain: f64,
    pub e_table_smoothed: [f64; 4],
    pub s_smoothed: f64,
    pub cutoff: usize,
    pub grid_points: usize,
    pub grid_extent: f64,
}

impl FockState2 {
    /// Grid extent comfortably covering the state's quadrature spread.
    pub fn suggested_extent(&self) -> f64 {
        let m = self.quad_moments();
        let sigma = m
            .var_x_a
            .max(m.var_x_b)
            .max(m.var_p_a)
            .max(m.var_p_b)
            .sqrt();
        (7.0 * sigma).max(8.0)
    }
}

pub fn chsh_reference(
    spec: &PairCoherentSpec,
    settings: ChshSettings,
    gain: f64,
    grid_points: usize,
) -> Result<ChshReference> {
    let state = FockState2::pair_coherent(spec.zeta, spec.truncation)?;
    let extent = state.suggested_extent();
    let grid = QuadGrid::symmetric(extent, grid_points);
    let mut e_table = [0.0; 4];
    let mut e_smoothed = [0.0; 4];
    for (k, (theta, phi)) in settings.pairs().into_iter().enumerate() {
        let joint = state.quadrature_joint(theta, phi, &grid)?;
        e_table[k] = joint.quadrant_correlator();
        e_smoothed[k] = joint.smoothed_correlator(gain);
    }
    Ok(ChshReference {
        zeta: spec.zeta.re,
        settings,
        e_table,
        s: chsh_s(&e_table),
        gain,
        e_table_smoothed: e_smoothed,
        s_smoothed: chsh_s(&e_smoothed),
        cutoff: state.cutoff(),
        grid_points,
        grid_extent: extent,
    })
}

/// Sign-overlap table `T_mn = integral sign(u) psi_m(u) psi_n(u) du`,
/// which reduces the correlator of a Schmidt-diagonal state to
/// `E(s) = sum c_m c_n cos((m - n) s) T_mn^2` with `s = theta + phi`.
struct SignTable {
    t: Array2<f64>,
}

impl SignTable {
    fn build(n_max: usize, grid: &QuadGrid) -> Self {
        let xs = grid.points();
        let table = hermite_table(n_max, &xs);
        let w = grid.step();
        let mut t = Array2::zeros((n_max, n_max));
        for m in 0..n_max {
            for n in 0..n_max {
                let mut acc = 0.0;
                for (i, &x) in xs.iter().enumerate() {
                    acc += x.signum() * table[(m, i)] * table[(n, i)];
                }
                t[(m, n)] = acc * w;
            }
        }
        Self { t }
    }

    fn correlator(&self, coeffs: &[f64], s: f64) -> f64 {
        let k = coeffs.len();
        let mut acc = 0.0;
        for m in 0..k {
            for n in 0..k {
                let t = self.t[(m, n)];
                acc += coeffs[m] * coeffs[n] * ((m as f64 - n as f64) * s).cos() * t * t;
            }
        }
        acc
    }
}

/// Result of the (zeta, chi) grid search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChshSearch {
    pub zeta: f64,
    pub chi: f64,
    pub s: f64,
    pub violates: bool,
    pub zeta_range: (f64, f64),
    pub chi_range: (f64, f64),
}

/// Scan real `zeta` and the one-parameter angle family for the maximal CHSH
/// statistic. Deterministic; used once to freeze the packaged reference.
pub fn chsh_grid_search(
    zeta_range: (f64, f64),
    zeta_steps: usize,
    chi_range: (f64, f64),
    chi_steps: usize,
) -> Result<ChshSearch> {
    let n_max = 32;
    let grid = QuadGrid::symmetric(10.0, 1024);
    let table = SignTable::build(n_max, &grid);
    let mut best = ChshSearch {
        zeta: zeta_range.0,
        chi: chi_range.0,
        s: 0.0,
        violates: false,
        zeta_range,
        chi_range,
    };
    let scan = |zeta: f64, chi: f64, best: &mut ChshSearch| {
        let mut coeffs = vec![1.0f64; n_max];
        for n in 1..n_max {
            coeffs[n] = coeffs[n - 1] * zeta / n as f64;
        }
        let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        coeffs.iter_mut().for_each(|c| *c /= norm);
        let s = (3.0 * table.correlator(&coeffs, chi) - table.correlator(&coeffs, 3.0 * chi)).abs();
        if s > best.s {
            best.s = s;
            best.zeta = zeta;
            best.chi = chi;
        }
    };
    for zi in 0..=zeta_steps {
        let zeta = zeta_range.0 + (zeta_range.1 - zeta_range.0) * zi as f64 / zeta_steps as f64;
        for ci in 0..=chi_steps {
            let chi = chi_range.0 + (chi_range.1 - chi_range.0) * ci as f64 / chi_steps as f64;
            scan(zeta, chi, &mut best);
        }
    }
    // Local refinement around the coarse optimum.
    let dz = (zeta_range.1 - zeta_range.0) / zeta_steps as f64;
    let dc = (chi_range.1 - chi_range.0) / chi_steps as f64;
    let (z0, c0) = (best.zeta, best.chi);
    for zi in 0..=20 {
        let zeta = (z0 - dz + 2.0 * dz * zi as f64 / 20.0).max(zeta_range.0);
        for ci in 0..=20 {
            let chi = c0 - dc + 2.0 * dc * ci as f64 / 20.0;
            scan(zeta, chi, &mut best);
        }
    }
    best.violates = best.s > 2.0;
    Ok(best)
}

/// Born weights of the criterion superposition, from peak-mass integration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BornReference {
    pub c1: f64,
    pub c2_mag: f64,
    pub x1: f64,
    pub x2: f64,
    pub r: f64,
    /// Quadrature mass on the `x1` side of the midpoint cut.
    pub band_fraction_x1: f64,
}

pub fn born_reference(spec: &SuperpositionSpec) -> Result<BornReference> {
    let state = FockState1::superposition_auto(spec)?;
    let extent = spec.x1.abs().max(spec.x2.abs()) + 8.0;
    let pdf = state.quadrature_pdf(0.0, &QuadGrid::symmetric(extent, 4096))?;
    let midpoint = 0.5 * (spec.x1 + spec.x2);
    let mass = pdf.mass_above(midpoint);
    let band_fraction_x1 = if spec.x1 > spec.x2 { mass } else { 1.0 - mass };
    Ok(BornReference {
        c1: spec.c1,
        c2_mag: spec.c2_mag,
        x1: spec.x1,
        x2: spec.x2,
        r: spec.r,
        band_fraction_x1,
    })
}

/// Versioned reference values consumed by the acceptance suite.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReferenceTable {
    pub version: u32,
    pub search: ChshSearch,
    pub chsh: ChshReference,
    pub born: BornReference,
}

/// The reference table packaged with the crate.
pub fn packaged_chsh_reference() -> ReferenceTable {
    serde_json::from_str(include_str!("../../data/chsh_reference.json"))
        .expect("packaged reference table is valid JSON")
}

impl FockState1 {
    /// Superposition with the cutoff doubled until the norm/tail gates pass.
    pub fn superposition_auto(spec: &SuperpositionSpec) -> Result<Self> {
        Self::superposition_evolved_auto(spec, 0.0, 0.0)
    }

    pub fn superposition_evolved_auto(spec: &SuperpositionSpec, g: f64, t: f64) -> Result<Self> {
        let mut cutoff = 128;
        loop {
            match Self::superposition_evolved(spec, g, t, cutoff) {
                Ok(s) => return Ok(s),
                Err(_) if cutoff < 16384 => cutoff *= 2,
                Err(e) => return Err(e),
            }
        }
    }
}
