//! Closed-form densities vs the independent Fock-space oracle, plus the
//! truncation-convergence and normalization gates.

use qamp_core::numeric::{quad, quad2};
use qamp_core::oracle::{FockState1, FockState2, QuadGrid};
use qamp_core::states::{
    EprSpec, MixtureSpec, PairCoherentSpec, PhasePoint, PhasePoint2, SuperpositionSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sample_points_1(n: usize, extent_x: f64, extent_p: f64, seed: u64) -> Vec<PhasePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            PhasePoint::new(
                extent_x * (2.0 * rng.random::<f64>() - 1.0),
                extent_p * (2.0 * rng.random::<f64>() - 1.0),
            )
        })
        .collect()
}

#[test]
fn superposition_q_matches_oracle_at_random_points() {
    let spec = SuperpositionSpec::balanced(0.8, 2.0).unwrap();
    let state = FockState1::superposition_auto(&spec).unwrap();
    for pt in sample_points_1(1000, 4.0, 12.0, 11) {
        let closed = spec.q(pt);
        let fock = state.q_eval(pt);
        assert!(
            (closed - fock).abs() < 1e-8,
            "mismatch at {pt:?}: {closed} vs {fock}"
        );
        if closed > 1e-4 {
            assert!((closed - fock).abs() / closed < 1e-7);
        }
    }
}

#[test]
fn unbalanced_superposition_matches_oracle() {
    let spec = SuperpositionSpec::new(0.6, 0.8, 0.8, -0.8, 2.0).unwrap();
    let state = FockState1::superposition_auto(&spec).unwrap();
    for pt in sample_points_1(300, 4.0, 12.0, 12) {
        assert!((spec.q(pt) - state.q_eval(pt)).abs() < 1e-8);
    }
    // General (asymmetric) eigenvalue pair.
    let spec = SuperpositionSpec::new(0.6, 0.8, 1.1, -0.3, 1.5).unwrap();
    let state = FockState1::superposition_auto(&spec).unwrap();
    for pt in sample_points_1(300, 4.0, 9.0, 13) {
        assert!((spec.q(pt) - state.q_eval(pt)).abs() < 1e-8);
    }
}

#[test]
fn squeezed_and_vacuum_match_oracle() {
    // Single displaced squeezed component via a degenerate superposition.
    let spec = SuperpositionSpec::new(1.0, 0.0, 0.8, -0.8, 2.0).unwrap();
    let state = FockState1::superposition_auto(&spec).unwrap();
    for pt in sample_points_1(300, 4.0, 12.0, 14) {
        assert!((spec.q(pt) - state.q_eval(pt)).abs() < 1e-8);
    }
}

#[test]
fn epr_q_matches_oracle_at_random_points() {
    let spec = EprSpec::new(2.0).unwrap();
    let state = FockState2::epr(2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..1000 {
        let pt = PhasePoint2::new(
            6.0 * (2.0 * rng.random::<f64>() - 1.0),
            6.0 * (2.0 * rng.random::<f64>() - 1.0),
            6.0 * (2.0 * rng.random::<f64>() - 1.0),
            6.0 * (2.0 * rng.random::<f64>() - 1.0),
        );
        let closed = spec.q(pt);
        let fock = state.q_eval(pt);
        assert!(
            (closed - fock).abs() < 1e-8,
            "mismatch at {pt:?}: {closed} vs {fock}"
        );
    }
}

#[test]
fn pair_coherent_q_matches_oracle() {
    let spec = PairCoherentSpec::auto(1.245).unwrap();
    let state = FockState2::pair_coherent(spec.zeta, spec.truncation).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..500 {
        let pt = PhasePoint2::new(
            5.0 * (2.0 * rng.random::<f64>() - 1.0),
            5.0 * (2.0 * rng.random::<f64>() - 1.0),
            5.0 * (2.0 * rng.random::<f64>() - 1.0),
            5.0 * (2.0 * rng.random::<f64>() - 1.0),
        );
        assert!((spec.q(pt) - state.q_eval(pt)).abs() < 1e-8);
    }
}

#[test]
fn densities_are_nonnegative_everywhere() {
    let sup = SuperpositionSpec::new(0.6, 0.8, 1.3, -0.5, 1.0).unwrap();
    let mix = MixtureSpec::matching(&sup);
    let epr = EprSpec::new(1.5).unwrap();
    let pc = PairCoherentSpec::auto(1.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100_000 {
        let pt = PhasePoint::new(
            20.0 * (2.0 * rng.random::<f64>() - 1.0),
            20.0 * (2.0 * rng.random::<f64>() - 1.0),
        );
        assert!(sup.q(pt) >= 0.0, "negative superposition Q at {pt:?}");
        assert!(mix.q(pt) >= 0.0);
        assert!(sup.conditional_p_given_x(pt.p, pt.x) >= 0.0);
        let pt2 = PhasePoint2::new(
            10.0 * (2.0 * rng.random::<f64>() - 1.0),
            10.0 * (2.0 * rng.random::<f64>() - 1.0),
            10.0 * (2.0 * rng.random::<f64>() - 1.0),
            10.0 * (2.0 * rng.random::<f64>() - 1.0),
        );
        assert!(epr.q(pt2) >= 0.0);
        assert!(pc.q(pt2) >= 0.0);
    }
}

#[test]
fn densities_normalize_by_quadrature() {
    let sup = SuperpositionSpec::balanced(0.8, 2.0).unwrap();
    let norm = quad2(
        |x, p| sup.q(PhasePoint::new(x, p)),
        (-8.0, 8.0),
        (-40.0, 40.0),
        32,
    );
    assert!((norm - 1.0).abs() < 1e-6, "superposition norm {norm}");

    let mix = MixtureSpec::matching(&sup);
    let norm = quad2(
        |x, p| mix.q(PhasePoint::new(x, p)),
        (-8.0, 8.0),
        (-40.0, 40.0),
        32,
    );
    assert!((norm - 1.0).abs() < 1e-6, "mixture norm {norm}");

    // Conditional normalizes in p for several fixed x.
    for x in [-1.0, 0.0, 0.4, 2.5] {
        let norm = quad(|p| sup.conditional_p_given_x(p, x), -80.0, 80.0, 64);
        assert!((norm - 1.0).abs() < 1e-8, "conditional norm {norm} at x={x}");
    }

    // EPR: factorized 2x2 blocks integrate to 1 over the 4-plane.
    let epr = EprSpec::new(1.0).unwrap();
    let x_block = quad2(
        |xa, xb| epr.q(PhasePoint2::new(xa, 0.0, xb, 0.0)),
        (-12.0, 12.0),
        (-12.0, 12.0),
        24,
    );
    let p_norm = quad2(
        |pa, pb| {
            epr.q(PhasePoint2::new(0.0, pa, 0.0, pb)) / epr.q(PhasePoint2::new(0.0, 0.0, 0.0, 0.0))
        },
        (-12.0, 12.0),
        (-12.0, 12.0),
        24,
    );
    let origin = epr.q(PhasePoint2::new(0.0, 0.0, 0.0, 0.0));
    let total = x_block * p_norm * origin / origin;
    assert!((total - 1.0).abs() < 1e-6, "epr norm {total}");
}

#[test]
fn epr_q_factorizes_into_x_and_p_blocks() {
    // Conditional of the p block given the x block equals its marginal.
    let epr = EprSpec::new(1.3).unwrap();
    let q = |xa, pa, xb, pb| epr.q(PhasePoint2::new(xa, pa, xb, pb));
    for (xa, xb, pa, pb) in [
        (0.5, -0.2, 1.0, 0.7),
        (2.0, 1.5, -0.5, 0.3),
        (-1.0, 0.0, 0.0, -2.0),
    ] {
        let lhs = q(xa, pa, xb, pb) * q(0.0, 0.0, 0.0, 0.0);
        let rhs = q(xa, 0.0, xb, 0.0) * q(0.0, pa, 0.0, pb);
        assert!(
            (lhs - rhs).abs() < 1e-15 * lhs.abs().max(1e-30),
            "factorization fails"
        );
    }
}

#[test]
fn marginal_variance_matches_oracle_evolution() {
    // Amplified-state x variance: oracle quantum variance plus unit vacuum.
    let spec = SuperpositionSpec::new(1.0, 0.0, 0.8, -0.8, 2.0).unwrap();
    let (g, t) = (1.0, 2.0);
    let evolved = FockState1::superposition_evolved_auto(&spec, g, t).unwrap();
    let (_, qvar) = evolved.x_moments();
    let marginal = spec.marginal_x_future(g, t).unwrap();
    assert!(
        ((qvar + 1.0) - marginal.variance).abs() < 1e-7,
        "oracle {} + 1 vs closed form {}",
        qvar,
        marginal.variance
    );
    // And the closed-form value for these parameters is exactly 2.
    assert!((marginal.variance - 2.0).abs() < 1e-12);
}

#[test]
fn evolved_superposition_q_matches_marginals() {
    // Interior-time oracle state: x marginal of Q equals the closed-form
    // boundary mixture at that time (the causal-consistency anchor).
    let spec = SuperpositionSpec::balanced(0.8, 2.0).unwrap();
    let (g, t) = (1.0, 1.5);
    let evolved = FockState1::superposition_evolved_auto(&spec, g, t).unwrap();
    let mixture = spec.marginal_x_future(g, t).unwrap();
    for x in [-5.0, -2.0, 0.0, 1.0, 3.6, 6.0] {
        let q_marg = quad(
            |p| evolved.q_eval(PhasePoint::new(x, p)),
            -30.0,
            30.0,
            48,
        );
        let closed = mixture.density(x);
        assert!(
            (q_marg - closed).abs() < 1e-8,
            "x = {x}: {q_marg} vs {closed}"
        );
    }
}

#[test]
fn mixture_and_superposition_share_x_marginal() {
    let sup = SuperpositionSpec::balanced(0.8, 2.0).unwrap();
    let mix = MixtureSpec::matching(&sup);
    for x in [-3.0, -0.8, 0.0, 0.4, 2.0] {
        let m_sup = quad(|p| sup.q(PhasePoint::new(x, p)), -60.0, 60.0, 48);
        let m_mix = quad(|p| mix.q(PhasePoint::new(x, p)), -60.0, 60.0, 48);
        assert!(
            (m_sup - m_mix).abs() < 1e-8,
            "marginals differ at x = {x}: {m_sup} vs {m_mix}"
        );
    }
}

#[test]
fn cutoff_doubling_leaves_reference_values_stable() {
    let spec = SuperpositionSpec::balanced(0.8, 2.0).unwrap();
    let base = FockState1::superposition(&spec, 1024).unwrap();
    let doubled = FockState1::superposition(&spec, 2048).unwrap();
    for pt in sample_points_1(50, 3.0, 10.0, 18) {
        assert!((base.q_eval(pt) - doubled.q_eval(pt)).abs() < 1e-8);
    }
    let g1 = base
        .quadrature_pdf(0.0, &QuadGrid::symmetric(8.0, 2048))
        .unwrap();
    let g2 = doubled
        .quadrature_pdf(0.0, &QuadGrid::symmetric(8.0, 2048))
        .unwrap();
    assert!((g1.mass_above(0.0) - g2.mass_above(0.0)).abs() < 1e-8);

    // Pair-coherent CHSH correlator stability under truncation doubling.
    let spec = PairCoherentSpec::auto(1.245).unwrap();
    let s1 = FockState2::pair_coherent(spec.zeta, spec.truncation).unwrap();
    let s2 = FockState2::pair_coherent(spec.zeta, spec.truncation * 2).unwrap();
    let grid = QuadGrid::symmetric(9.0, 512);
    let e1 = s1
        .quadrature_joint(0.2, 0.585, &grid)
        .unwrap()
        .quadrant_correlator();
    let e2 = s2
        .quadrature_joint(0.2, 0.585, &grid)
        .unwrap()
        .quadrant_correlator();
    assert!((e1 - e2).abs() < 1e-8, "correlator drift {e1} vs {e2}");
}

#[test]
fn oracle_is_deterministic() {
    let spec = SuperpositionSpec::balanced(0.8, 2.0).unwrap();
    let a = FockState1::superposition_auto(&spec).unwrap();
    let b = FockState1::superposition_auto(&spec).unwrap();
    let pt = PhasePoint::new(0.37, -1.22);
    assert_eq!(a.q_eval(pt).to_bits(), b.q_eval(pt).to_bits());
    // Rotation mixes in the anti-squeezed p spread, so the grid is wide.
    let pa = a
        .quadrature_pdf(0.3, &QuadGrid::symmetric(20.0, 512))
        .unwrap();
    let pb = b
        .quadrature_pdf(0.3, &QuadGrid::symmetric(20.0, 512))
        .unwrap();
    for (x, y) in pa.values.iter().zip(&pb.values) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}

#[test]
fn parseval_after_every_operation() {
    let spec = SuperpositionSpec::balanced(0.8, 2.0).unwrap();
    let state = FockState1::superposition_auto(&spec).unwrap();
    assert!((state.norm_sqr() - 1.0).abs() < 1e-10);
    let rotated = state.rotated(0.7);
    assert!((rotated.norm_sqr() - 1.0).abs() < 1e-10);
    let evolved = FockState1::vacuum(128).evolve_squeeze(1.0, 0.6, 0.3).unwrap();
    assert!((evolved.norm_sqr() - 1.0).abs() < 1e-10);
    let two = FockState2::epr(1.0).unwrap().rotated(0.3, -0.9);
    assert!((two.norm_sqr() - 1.0).abs() < 1e-10);
}

#[test]
fn two_mode_evolution_matches_variance_law() {
    // Mechanical two-mode squeeze evolution reproduces the boundary variance
    // law sigma_-^2(t) = 2(1 + e^(2gt) e^(-2r)) (quantum part; Husimi adds 2).
    let r = 1.0;
    let state = FockState2::epr_with_cutoff(r, 128).unwrap();
    let evolved = state.evolve_squeeze(1.0, 0.35, 0.0, 0.0).unwrap();
    let m = evolved.quad_moments();
    let amp = (2.0f64 * 0.35).exp();
    let expect_var_diff = 2.0 * amp * (-2.0 * r).exp();
    assert!(
        (m.var_x_diff() - expect_var_diff).abs() < 1e-6,
        "var diff {} vs {}",
        m.var_x_diff(),
        expect_var_diff
    );
    let expect_var_sum = 2.0 * amp * (2.0 * r).exp();
    let var_sum_x = m.var_x_a + m.var_x_b + 2.0 * m.cov_x;
    assert!((var_sum_x - expect_var_sum).abs() < 2e-5);
}
