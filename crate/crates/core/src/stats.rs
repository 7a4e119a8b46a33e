//! Estimators and hypothesis tests used by the experiments and the
//! acceptance suite: Kolmogorov-Smirnov, Pearson chi-squared against an
//! analytic density, CHSH correlators from sign-binned outcomes, EPR
//! inference variances, and the fringe fit.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{CoreError, Result};
use crate::numeric;

/// One-dimensional histogram with uniform bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram1 {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Samples outside [min, max), not binned.
    pub outside: u64,
    pub total: u64,
}

impl Histogram1 {
    pub fn from_samples(samples: &[f64], min: f64, max: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(max > min) {
            return Err(CoreError::DegenerateBinning(
                "need bins >= 1 and max > min".into(),
            ));
        }
        let width = (max - min) / bins as f64;
        let edges = (0..=bins).map(|i| min + i as f64 * width).collect();
        let mut counts = vec![0u64; bins];
        let mut outside = 0u64;
        for &s in samples {
            if s >= min && s < max {
                let idx = ((s - min) / width) as usize;
                counts[idx.min(bins - 1)] += 1;
            } else {
                outside += 1;
            }
        }
        Ok(Self {
            edges,
            counts,
            outside,
            total: samples.len() as u64,
        })
    }

    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }

    /// Normalized density estimate per bin.
    pub fn density(&self) -> Vec<f64> {
        let norm = 1.0 / (self.total as f64 * self.bin_width());
        self.counts.iter().map(|c| *c as f64 * norm).collect()
    }
}

/// Two-dimensional histogram with uniform bins on each axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram2 {
    pub x_edges: Vec<f64>,
    pub y_edges: Vec<f64>,
    /// Row-major counts, x index outer.
    pub counts: Vec<u64>,
    pub outside: u64,
    pub total: u64,
}

impl Histogram2 {
    pub fn from_pairs(
        pairs: &[(f64, f64)],
        x_range: (f64, f64),
        y_range: (f64, f64),
        bins: (usize, usize),
    ) -> Result<Self> {
        if bins.0 == 0 || bins.1 == 0 || !(x_range.1 > x_range.0) || !(y_range.1 > y_range.0) {
            return Err(CoreError::DegenerateBinning("empty 2d binning".into()));
        }
        let wx = (x_range.1 - x_range.0) / bins.0 as f64;
        let wy = (y_range.1 - y_range.0) / bins.1 as f64;
        let mut counts = vec![0u64; bins.0 * bins.1];
        let mut outside = 0u64;
        for &(x, y) in pairs {
            if x >= x_range.0 && x < x_range.1 && y >= y_range.0 && y < y_range.1 {
                let i = (((x - x_range.0) / wx) as usize).min(bins.0 - 1);
                let j = (((y - y_range.0) / wy) as usize).min(bins.1 - 1);
                counts[i * bins.1 + j] += 1;
            } else {
                outside += 1;
            }
        }
        Ok(Self {
            x_edges: (0..=bins.0).map(|i| x_range.0 + i as f64 * wx).collect(),
            y_edges: (0..=bins.1).map(|j| y_range.0 + j as f64 * wy).collect(),
            counts,
            outside,
            total: pairs.len() as u64,
        })
    }

    pub fn bins(&self) -> (usize, usize) {
        (self.x_edges.len() - 1, self.y_edges.len() - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Asymptotic Kolmogorov survival function with the Stephens small-sample
/// correction applied to the argument.
fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let lambda = (n_eff.sqrt() + 0.12 + 0.11 / n_eff.sqrt()) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    out.sort_by(|a, b| a.partial_cmp(b).expect("samples must not contain NaN"));
    out
}

/// One-sample KS test against an analytic CDF.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    if sample.len() < 10 {
        return Err(CoreError::InsufficientSamples {
            context: "ks_one_sample",
            got: sample.len(),
            need: 10,
        });
    }
    let xs = sorted(sample);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    Ok(KsResult {
        statistic: d,
        p_value: ks_p_value(d, n),
    })
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.len() < 10 || b.len() < 10 {
        return Err(CoreError::InsufficientSamples {
            context: "ks_two_sample",
            got: a.len().min(b.len()),
            need: 10,
        });
    }
    let xa = sorted(a);
    let xb = sorted(b);
    let (na, nb) = (xa.len(), xb.len());
    let mut d = 0.0f64;
    let (mut i, mut j) = (0usize, 0usize);
    while i < na && j < nb {
        let v = xa[i].min(xb[j]);
        while i < na && xa[i] == v {
            i += 1;
        }
        while j < nb && xb[j] == v {
            j += 1;
        }
        let fa = i as f64 / na as f64;
        let fb = j as f64 / nb as f64;
        d = d.max((fa - fb).abs());
    }
    let n_eff = (na * nb) as f64 / (na + nb) as f64;
    Ok(KsResult {
        statistic: d,
        p_value: ks_p_value(d, n_eff),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chi2Result {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-squared of a 2D histogram against an analytic density.
/// Expected masses are integrated per bin (3x3 Gauss-Legendre); mass and
/// counts outside the box form one extra bin; bins with expected count
/// below 5 are pooled.
pub fn chi2_2d(hist: &Histogram2, density: impl Fn(f64, f64) -> f64) -> Result<Chi2Result> {
    let (bx, by) = hist.bins();
    let (nodes, weights) = numeric::gauss_legendre(3);
    let total = hist.total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::with_capacity(bx * by + 1);
    let mut inside_mass = 0.0;
    for i in 0..bx {
        let (x0, x1) = (hist.x_edges[i], hist.x_edges[i + 1]);
        let (hx, mx) = (0.5 * (x1 - x0), 0.5 * (x0 + x1));
        for j in 0..by {
            let (y0, y1) = (hist.y_edges[j], hist.y_edges[j + 1]);
            let (hy, my) = (0.5 * (y1 - y0), 0.5 * (y0 + y1));
            let mut mass = 0.0;
            for (u, wu) in nodes.iter().zip(&weights) {
                for (v, wv) in nodes.iter().zip(&weights) {
                    mass += wu * wv * density(mx + hx * u, my + hy * v);
                }
            }
            mass *= hx * hy;
            inside_mass += mass;
            cells.push((hist.counts[i * by + j] as f64, mass * total));
        }
    }
    let outside_mass = (1.0 - inside_mass).max(0.0);
    cells.push((hist.outside as f64, outside_mass * total));

    // Pool low-expectation bins.
    let mut kept: Vec<(f64, f64)> = Vec::with_capacity(cells.len());
    let mut pool = (0.0, 0.0);
    for (obs, exp) in cells {
        if exp < 5.0 {
            pool.0 += obs;
            pool.1 += exp;
        } else {
            kept.push((obs, exp));
        }
    }
    if pool.1 >= 5.0 {
        kept.push(pool);
    } else if let Some(last) = kept.last_mut() {
        last.0 += pool.0;
        last.1 += pool.1;
    }
    if kept.len() < 2 {
        return Err(CoreError::DegenerateBinning(format!(
            "only {} usable bins after pooling",
            kept.len()
        )));
    }
    let statistic: f64 = kept
        .iter()
        .map(|(obs, exp)| (obs - exp) * (obs - exp) / exp)
        .sum();
    let dof = kept.len() - 1;
    let chi = ChiSquared::new(dof as f64).expect("dof >= 1");
    Ok(Chi2Result {
        statistic,
        dof,
        p_value: 1.0 - chi.cdf(statistic),
    })
}

/// CHSH estimate from sign-binned outcomes of the four setting pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshEstimate {
    pub e: [f64; 4],
    pub e_se: [f64; 4],
    pub s: f64,
    pub s_se: f64,
    pub n: [usize; 4],
}

pub fn chsh(pairs: &[Vec<(i8, i8)>; 4]) -> Result<ChshEstimate> {
    let mut e = [0.0; 4];
    let mut se = [0.0; 4];
    let mut n = [0usize; 4];
    for (k, data) in pairs.iter().enumerate() {
        if data.is_empty() {
            return Err(CoreError::EmptyInput("chsh setting pair"));
        }
        let m = data.len() as f64;
        let sum: f64 = data
            .iter()
            .map(|&(a, b)| {
                debug_assert!(a == 1 || a == -1);
                debug_assert!(b == 1 || b == -1);
                (a as f64) * (b as f64)
            })
            .sum();
        e[k] = sum / m;
        se[k] = ((1.0 - e[k] * e[k]).max(0.0) / m).sqrt();
        n[k] = data.len();
    }
    let s = (e[0] + e[1] + e[2] - e[3]).abs();
    let s_se = se.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(ChshEstimate { e, e_se: se, s, s_se, n })
}

/// EPR inference variances of scaled readouts and their product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EprInference {
    pub var_x_diff: f64,
    pub var_p_sum: f64,
    pub product: f64,
}

/// Takes amplitude pairs at the readout time plus the gain, forms the scaled
/// readouts `x/G`, and returns `Var(x_A - x_B)`, `Var(p_A + p_B)` and their
/// product. A product below 1 signals the EPR-paradox regime.
pub fn epr_inference(
    x_pairs: &[(f64, f64)],
    p_pairs: &[(f64, f64)],
    gain: f64,
) -> Result<EprInference> {
    if x_pairs.len() < 2 || p_pairs.len() < 2 {
        return Err(CoreError::InsufficientSamples {
            context: "epr_inference",
            got: x_pairs.len().min(p_pairs.len()),
            need: 2,
        });
    }
    let xd: Vec<f64> = x_pairs.iter().map(|(a, b)| (a - b) / gain).collect();
    let ps: Vec<f64> = p_pairs.iter().map(|(a, b)| (a + b) / gain).collect();
    let var_x_diff = numeric::variance(&xd);
    let var_p_sum = numeric::variance(&ps);
    Ok(EprInference {
        var_x_diff,
        var_p_sum,
        product: var_x_diff * var_p_sum,
    })
}

/// Fringe fit of a conditional histogram: least squares of
/// `Gaussian(p) * (A - C sin(w p) - D cos(w p))` over a frequency scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub period: f64,
    pub visibility: f64,
    pub visibility_se: f64,
    /// Fitted sine amplitude C (sign carries the fringe phase).
    pub amp_sin: f64,
    pub amp_cos: f64,
    pub residual: f64,
}

pub fn fringe_fit(hist: &Histogram1) -> Result<FringeFit> {
    let bins = hist.counts.len();
    if bins < 20 {
        return Err(CoreError::InsufficientSamples {
            context: "fringe_fit bins",
            got: bins,
            need: 20,
        });
    }
    let centers = hist.centers();
    let y = hist.density();
    let width = hist.bin_width();
    let total = hist.total as f64;

    // Gaussian width from the histogram moments (modulation bias is tiny).
    let mass: f64 = y.iter().sum::<f64>() * width;
    let mu: f64 = centers
        .iter()
        .zip(&y)
        .map(|(c, v)| c * v * width)
        .sum::<f64>()
        / mass;
    let s2: f64 = centers
        .iter()
        .zip(&y)
        .map(|(c, v)| (c - mu) * (c - mu) * v * width)
        .sum::<f64>()
        / mass;

    // Poisson weights with a floor against empty bins.
    let y_max = y.iter().cloned().fold(0.0f64, f64::max);
    let weights: Vec<f64> = y
        .iter()
        .map(|v| 1.0 / (v.max(y_max / 50.0) / (total * width)))
        .collect();

    let span = hist.edges[bins] - hist.edges[0];
    let omega_min = 2.0 * std::f64::consts::TAU / span;
    let omega_max = std::f64::consts::TAU / (4.0 * width);
    if omega_min >= omega_max {
        return Err(CoreError::DegenerateBinning(
            "histogram cannot resolve two fringe periods".into(),
        ));
    }

    let fit_at = |omega: f64| -> (f64, [f64; 3], [f64; 3]) {
        // Basis: G, G sin(w p), G cos(w p).
        let mut ata = [[0.0f64; 3]; 3];
        let mut atb = [0.0f64; 3];
        for ((&c, &v), &w) in centers.iter().zip(&y).zip(&weights) {
            let gauss = (-(c - mu) * (c - mu) / (2.0 * s2)).exp();
            let basis = [gauss, gauss * (omega * c).sin(), gauss * (omega * c).cos()];
            for i in 0..3 {
                for j in 0..3 {
                    ata[i][j] += w * basis[i] * basis[j];
                }
                atb[i] += w * basis[i] * v;
            }
        }
        let coeff = solve3(ata, atb);
        let mut resid = 0.0;
        let mut var_diag = [0.0f64; 3];
        let inv = invert3(ata);
        for i in 0..3 {
            var_diag[i] = inv[i][i];
        }
        for ((&c, &v), &w) in centers.iter().zip(&y).zip(&weights) {
            let gauss = (-(c - mu) * (c - mu) / (2.0 * s2)).exp();
            let model =
                coeff[0] * gauss + coeff[1] * gauss * (omega * c).sin() + coeff[2] * gauss * (omega * c).cos();
            resid += w * (v - model) * (v - model);
        }
        (resid, coeff, var_diag)
    };

    let scan = 600;
    let mut best = (f64::INFINITY, omega_min, [0.0; 3], [0.0; 3]);
    let log_lo = omega_min.ln();
    let log_hi = omega_max.ln();
    for k in 0..=scan {
        let omega = (log_lo + (log_hi - log_lo) * k as f64 / scan as f64).exp();
        let (resid, coeff, var) = fit_at(omega);
        if resid < best.0 {
            best = (resid, omega, coeff, var);
        }
    }
    // Golden-section refinement around the best grid point.
    let step = (log_hi - log_lo) / scan as f64;
    let mut lo = best.1 * (-2.0 * step).exp();
    let mut hi = best.1 * (2.0 * step).exp();
    for _ in 0..48 {
        let m1 = lo + 0.382 * (hi - lo);
        let m2 = lo + 0.618 * (hi - lo);
        if fit_at(m1).0 < fit_at(m2).0 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let omega = 0.5 * (lo + hi);
    let (resid, coeff, var) = fit_at(omega);
    let amp = (coeff[1] * coeff[1] + coeff[2] * coeff[2]).sqrt();
    if coeff[0] <= 0.0 {
        return Err(CoreError::NonConvergence(
            "fringe fit found non-positive envelope amplitude".into(),
        ));
    }
    // Chi-square-scaled parameter errors from the weighted normal equations.
    let dof = (bins as f64 - 3.0).max(1.0);
    let scale = (resid / dof).max(1.0);
    let se_amp = ((var[1] + var[2]).max(0.0) * scale).sqrt();
    Ok(FringeFit {
        period: std::f64::consts::TAU / omega,
        visibility: amp / coeff[0],
        visibility_se: se_amp / coeff[0],
        amp_sin: coeff[1],
        amp_cos: coeff[2],
        residual: resid,
    })
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
    let inv = invert3(a);
    let mut out = [0.0; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i] += inv[i][j] * b[j];
        }
    }
    out
}

fn invert3(m: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let inv_det = 1.0 / det;
    let mut inv = [[0.0; 3]; 3];
    inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv_det;
    inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv_det;
    inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv_det;
    inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv_det;
    inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv_det;
    inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv_det;
    inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv_det;
    inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv_det;
    inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv_det;
    inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::normal_cdf;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn normals(n: usize, mean: f64, sd: f64, r: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n)
            .map(|_| mean + sd * r.sample::<f64, _>(StandardNormal))
            .collect()
    }

    #[test]
    fn ks_identical_samples() {
        let a = vec![0.1, 0.5, 0.9, 1.5, 2.0, 2.5, 3.0, 3.3, 4.0, 4.2];
        let res = ks_two_sample(&a, &a).unwrap();
        assert_eq!(res.statistic, 0.0);
        assert!((res.p_value - 1.0).abs() < 1e-12);
        assert!(ks_two_sample(&a[..5], &a).is_err());
    }

    #[test]
    fn ks_calibration_under_null() {
        // Over 200 seeds, rejections at alpha = 0.01 should be ~1%.
        let mut rejections = 0;
        for seed in 0..200 {
            let sample = normals(2000, 0.0, 1.0, &mut rng(1000 + seed));
            let res = ks_one_sample(&sample, normal_cdf).unwrap();
            if res.p_value < 0.01 {
                rejections += 1;
            }
        }
        // 3 sigma of Binomial(200, 0.01) above the mean.
        assert!(rejections <= 7, "rejections {rejections}");
    }

    #[test]
    fn ks_power_against_shifted() {
        let sample = normals(1000, 1.0, 1.0, &mut rng(7));
        let res = ks_one_sample(&sample, normal_cdf).unwrap();
        assert!(res.p_value < 1e-6, "p = {}", res.p_value);
        let a = normals(1000, 0.0, 1.0, &mut rng(8));
        let res = ks_two_sample(&a, &sample).unwrap();
        assert!(res.p_value < 1e-6);
    }

    #[test]
    fn chi2_calibration_and_power() {
        let density = |x: f64, y: f64| {
            (-x * x / 2.0 - y * y / 2.0).exp() / (2.0 * std::f64::consts::PI)
        };
        let mut p_values = Vec::new();
        for seed in 0..40 {
            let mut r = rng(2000 + seed);
            let pairs: Vec<(f64, f64)> = (0..20_000)
                .map(|_| (r.sample(StandardNormal), r.sample(StandardNormal)))
                .collect();
            let hist =
                Histogram2::from_pairs(&pairs, (-4.0, 4.0), (-4.0, 4.0), (30, 30)).unwrap();
            let res = chi2_2d(&hist, density).unwrap();
            p_values.push(res.p_value);
        }
        let rejections = p_values.iter().filter(|p| **p < 0.01).count();
        assert!(rejections <= 3, "rejections {rejections}: {p_values:?}");
        // Shifted reference: decisive rejection.
        let mut r = rng(3000);
        let pairs: Vec<(f64, f64)> = (0..20_000)
            .map(|_| (1.0 + r.sample::<f64, _>(StandardNormal), r.sample(StandardNormal)))
            .collect();
        let hist = Histogram2::from_pairs(&pairs, (-4.0, 4.0), (-4.0, 4.0), (30, 30)).unwrap();
        let res = chi2_2d(&hist, density).unwrap();
        assert!(res.p_value < 1e-10);
    }

    #[test]
    fn chi2_rejects_degenerate_binning() {
        let hist = Histogram2::from_pairs(&[(0.0, 0.0); 4], (-1.0, 1.0), (-1.0, 1.0), (1, 1))
            .unwrap();
        // One bin holding everything pools into a single cell.
        let res = chi2_2d(&hist, |_, _| 0.25);
        assert!(matches!(res, Err(CoreError::DegenerateBinning(_))));
    }

    #[test]
    fn chsh_perfect_and_independent() {
        let perfect: Vec<(i8, i8)> = (0..1000).map(|i| if i % 2 == 0 { (1, 1) } else { (-1, -1) }).collect();
        let est = chsh(&[perfect.clone(), perfect.clone(), perfect.clone(), perfect]).unwrap();
        assert_eq!(est.e, [1.0; 4]);
        assert_eq!(est.s, 2.0);
        let mut r = rng(4);
        let fair: Vec<(i8, i8)> = (0..40_000)
            .map(|_| {
                (
                    if r.random::<bool>() { 1 } else { -1 },
                    if r.random::<bool>() { 1 } else { -1 },
                )
            })
            .collect();
        let est = chsh(&[fair.clone(), fair.clone(), fair.clone(), fair.clone()]).unwrap();
        for k in 0..4 {
            assert!(est.e[k].abs() < 3.0 / (fair.len() as f64).sqrt());
        }
        assert!(est.s < 4.0 * 3.0 / (fair.len() as f64).sqrt());
        assert!(chsh(&[vec![], vec![(1, 1)], vec![(1, 1)], vec![(1, 1)]]).is_err());
    }

    #[test]
    fn epr_inference_identities() {
        // Perfectly correlated x and anticorrelated p: zero product.
        let x: Vec<(f64, f64)> = (0..100).map(|i| (i as f64, i as f64)).collect();
        let p: Vec<(f64, f64)> = (0..100).map(|i| (i as f64, -(i as f64))).collect();
        let inf = epr_inference(&x, &p, 2.0).unwrap();
        assert_eq!(inf.product, 0.0);
        // Independent unit-variance readouts: product ~ (2 sigma^2)^2.
        let mut r = rng(5);
        let n = 50_000;
        let x: Vec<(f64, f64)> = (0..n)
            .map(|_| (r.sample(StandardNormal), r.sample(StandardNormal)))
            .collect();
        let p: Vec<(f64, f64)> = (0..n)
            .map(|_| (r.sample(StandardNormal), r.sample(StandardNormal)))
            .collect();
        let inf = epr_inference(&x, &p, 1.0).unwrap();
        assert!((inf.var_x_diff - 2.0).abs() < 3.0 * 2.0 * (2.0 / n as f64).sqrt());
        assert!((inf.product - 4.0).abs() < 0.2);
    }

    #[test]
    fn fringe_fit_recovers_known_modulation() {
        // Synthetic histogram directly from the conditional density shape.
        let sp2 = 1.0 + 4.0f64.exp();
        let omega_true = 0.8 / (1.0 + (-4.0f64).exp());
        let density = |p: f64| {
            (-p * p / (2.0 * sp2)).exp() / (2.0 * std::f64::consts::PI * sp2).sqrt()
                * (1.0 - 0.7 * (omega_true * p).sin())
        };
        // Fill a fake histogram with exact expected counts.
        let bins = 80;
        let (lo, hi) = (-25.0, 25.0);
        let width = (hi - lo) / bins as f64;
        let total = 2_000_000u64;
        let mut counts = vec![0u64; bins];
        for (i, c) in counts.iter_mut().enumerate() {
            let center = lo + (i as f64 + 0.5) * width;
            *c = (density(center) * width * total as f64).round() as u64;
        }
        let hist = Histogram1 {
            edges: (0..=bins).map(|i| lo + i as f64 * width).collect(),
            counts: counts.clone(),
            outside: 0,
            total: counts.iter().sum(),
        };
        let fit = fringe_fit(&hist).unwrap();
        let period_true = std::f64::consts::TAU / omega_true;
        assert!(
            (fit.period - period_true).abs() / period_true < 0.01,
            "period {} vs {period_true}",
            fit.period
        );
        assert!((fit.visibility - 0.7).abs() < 0.03, "V = {}", fit.visibility);
        // Doubling the frequency halves the fitted period.
        let density2 = |p: f64| {
            (-p * p / (2.0 * sp2)).exp() / (2.0 * std::f64::consts::PI * sp2).sqrt()
                * (1.0 - 0.7 * (2.0 * omega_true * p).sin())
        };
        let mut counts2 = vec![0u64; bins];
        for (i, c) in counts2.iter_mut().enumerate() {
            let center = lo + (i as f64 + 0.5) * width;
            *c = (density2(center) * width * total as f64).round() as u64;
        }
        let hist2 = Histogram1 {
            edges: hist.edges.clone(),
            counts: counts2.clone(),
            outside: 0,
            total: counts2.iter().sum(),
        };
        let fit2 = fringe_fit(&hist2).unwrap();
        assert!((fit2.period - period_true / 2.0).abs() / period_true < 0.01);
    }

    #[test]
    fn fringe_fit_flat_data_has_no_visibility() {
        let mut r = rng(6);
        let sp = (1.0f64 + 4.0f64.exp()).sqrt();
        let samples = normals(200_000, 0.0, sp, &mut r);
        let hist = Histogram1::from_samples(&samples, -4.0 * sp, 4.0 * sp, 64).unwrap();
        let fit = fringe_fit(&hist).unwrap();
        assert!(
            fit.visibility < 4.0 * fit.visibility_se.max(0.005),
            "V = {} (se {})",
            fit.visibility,
            fit.visibility_se
        );
    }

    #[test]
    fn estimators_are_permutation_invariant() {
        let mut r = rng(9);
        let mut a = normals(500, 0.0, 1.0, &mut r);
        let b = normals(500, 0.1, 1.1, &mut r);
        let before = ks_two_sample(&a, &b).unwrap();
        a.reverse();
        let after = ks_two_sample(&a, &b).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn bootstrap_validates_standard_errors() {
        // Three fixed sign datasets: bootstrap SE of E vs the binomial formula.
        for seed in [11u64, 12, 13] {
            let mut r = rng(seed);
            let bias = 0.3;
            let data: Vec<(i8, i8)> = (0..4000)
                .map(|_| {
                    let same = r.random::<f64>() < (1.0 + bias) / 2.0;
                    let a = if r.random::<bool>() { 1 } else { -1 };
                    (a, if same { a } else { -a })
                })
                .collect();
            let est = chsh(&[data.clone(), data.clone(), data.clone(), data.clone()]).unwrap();
            // Bootstrap.
            let mut es = Vec::new();
            for _ in 0..400 {
                let resampled: Vec<(i8, i8)> = (0..data.len())
                    .map(|_| data[r.random_range(0..data.len())])
                    .collect();
                let sum: f64 = resampled.iter().map(|&(a, b)| a as f64 * b as f64).sum();
                es.push(sum / data.len() as f64);
            }
            let boot_se = crate::numeric::variance(&es).sqrt();
            assert!(
                (boot_se - est.e_se[0]).abs() / est.e_se[0] < 0.10,
                "bootstrap {boot_se} vs formula {}",
                est.e_se[0]
            );
        }
    }
}
