mod common;

use common::{random_scenario, random_thresholds};
use cre_core::model::{crb, NormalizedProblem};
use cre_core::p1::{eval_dual, feasibility_check, schur_block, solve_p1, DualPoint, FeasibilityVerdict, SolverOptions};
use cre_core::region::{build_fig3_scenario, los_base};
use cre_core::sdp::{frank_wolfe_rate_max, FrankWolfeOptions, SdpOptions};
use cre_core::vertices::all_vertices;
use cre_core::{CreError, Hermitian, InfeasibleReason, Thresholds, TransmitCovariance};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Random dual point with `D ≻ 0`: `ν` is raised until the dual is finite.
fn interior_point(rng: &mut ChaCha8Rng, cfg: &cre_core::ScenarioConfig, th: &Thresholds) -> DualPoint {
    let l = [
        rng.random_range(0.1..1.0),
        rng.random_range(-0.5..0.5),
        rng.random_range(-0.5..0.5),
        rng.random_range(0.1..1.0),
    ];
    // Z = L L^H with L lower triangular, so Z is positive definite.
    let z1 = l[0] * l[0];
    let z2 = Complex64::new(l[0] * l[1], -l[0] * l[2]);
    let z3 = l[1] * l[1] + l[2] * l[2] + l[3] * l[3];
    let lambda = rng.random_range(0.0..2.0);
    let mut nu = lambda + z1 + z3 + 2.0 * z2.norm() + rng.random_range(0.2..2.0);
    loop {
        let dp = DualPoint { lambda, nu, z1, z2, z3 };
        if eval_dual(&dp, cfg, th).is_ok() {
            return dp;
        }
        nu *= 2.0;
    }
}

#[test]
fn weak_duality_at_random_dual_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut checked = 0;
    for seed in 0..4 {
        let cfg = random_scenario(seed, 4);
        let v = all_vertices(&cfg).unwrap();
        let th = random_thresholds(&mut rng, &v);
        let Ok(sol) = solve_p1(&cfg, &th, &SolverOptions::default()) else { continue };
        checked += 1;
        for _ in 0..10 {
            let dp = interior_point(&mut rng, &cfg, &th);
            let g = eval_dual(&dp, &cfg, &th).unwrap().g;
            assert!(g >= sol.rate - 1e-9, "g {g} below the primal rate {}", sol.rate);
        }
    }
    assert!(checked >= 2, "only {checked} feasible draws");
}

#[test]
fn subgradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for seed in 10..14 {
        let cfg = random_scenario(seed, 4);
        let v = all_vertices(&cfg).unwrap();
        let th = random_thresholds(&mut rng, &v);
        for _ in 0..5 {
            let dp = interior_point(&mut rng, &cfg, &th);
            let an = eval_dual(&dp, &cfg, &th).unwrap().subgradient;
            let y = dp.to_vec();
            for i in 0..6 {
                let h = 1e-5 * y[i].abs().max(1.0);
                let mut up = y;
                let mut dn = y;
                up[i] += h;
                dn[i] -= h;
                let g = |p: [f64; 6]| eval_dual(&DualPoint::from_vec(p), &cfg, &th).unwrap().g;
                let fd = (g(up) - g(dn)) / (2.0 * h);
                assert!((fd - an[i]).abs() <= 1e-4 * an[i].abs() + 1e-8, "coordinate {i}: fd {fd} vs {}", an[i]);
            }
        }
    }
}

#[test]
fn unbounded_dual_is_reported() {
    let cfg = random_scenario(20, 4);
    let th = Thresholds::new(0.0, f64::INFINITY).unwrap();
    let dp = DualPoint { lambda: 0.0, nu: -1.0, z1: 0.0, z2: Complex64::new(0.0, 0.0), z3: 0.0 };
    assert!(matches!(eval_dual(&dp, &cfg, &th), Err(CreError::UnboundedDual(_))));
}

#[test]
fn void_constraints_give_the_rate_vertex() {
    for seed in 30..33 {
        let cfg = random_scenario(seed, 10);
        let v = all_vertices(&cfg).unwrap();
        let sol = solve_p1(&cfg, &Thresholds::none(), &SolverOptions::default()).unwrap();
        assert!(rel(sol.rate, v.r_max.point.rate) <= 1e-6, "{} vs {}", sol.rate, v.r_max.point.rate);
    }
}

#[test]
fn orthogonal_channels_need_completion() {
    let cfg = build_fig3_scenario(1.0, &los_base()).unwrap();
    let v = all_vertices(&cfg).unwrap();
    let th = Thresholds::new(0.5 * v.e_max.point.energy, 2.0 * v.c_min.point.crb).unwrap();
    let sol = solve_p1(&cfg, &th, &SolverOptions::default()).unwrap();
    assert!(sol.used_completion);
    assert!(sol.duality_gap <= 1e-4 * sol.dual_value.max(1.0), "gap {}", sol.duality_gap);
    assert!(th.admits(&sol.s_opt, &cfg));
    // Both thresholds bind and take power away from the ID direction.
    assert!(sol.rate < v.r_max.point.rate);
}

#[test]
fn complementary_slackness() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let opts = SolverOptions { tol_dual: 1e-7, ..SolverOptions::default() };
    let mut checked = 0;
    for seed in 40..44 {
        let cfg = random_scenario(seed, 4);
        let v = all_vertices(&cfg).unwrap();
        let th = random_thresholds(&mut rng, &v);
        let Ok(sol) = solve_p1(&cfg, &th, &opts) else { continue };
        checked += 1;
        let np = NormalizedProblem::new(&cfg);
        let x = np.from_physical(&sol.s_opt);
        let d = sol.dual_opt;
        // g − R = λ(e − γ) + ν(1 − tr X) + tr(Z B) + (max L − L(X)); every
        // term is nonnegative at a feasible X, so each is at most the gap.
        let terms = [
            d.lambda * (np.energy(&x) - np.energy_threshold(th.gamma_eh)),
            d.nu * (1.0 - x.trace()),
            d.z_matrix().inner(&np.schur_block(&x, np.crb_threshold(th.gamma_s))),
        ];
        for (k, t) in terms.iter().enumerate() {
            assert!(*t <= sol.duality_gap + 1e-7 && *t >= -1e-7, "term {k}: {t:e} with gap {:e}", sol.duality_gap);
        }
    }
    assert!(checked >= 2, "only {checked} feasible draws");
}

#[test]
fn agrees_with_frank_wolfe() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut checked = 0;
    for seed in 50..53 {
        let cfg = random_scenario(seed, 4);
        let v = all_vertices(&cfg).unwrap();
        let th = random_thresholds(&mut rng, &v);
        let Ok(sol) = solve_p1(&cfg, &th, &SolverOptions::default()) else { continue };
        checked += 1;
        let fw = frank_wolfe_rate_max(&cfg, &th, &FrankWolfeOptions::default()).unwrap();
        assert!(rel(sol.rate, fw.rate) <= 1e-3, "{} vs {}", sol.rate, fw.rate);
        assert!(fw.rate <= sol.dual_value + 1e-9);
    }
    assert!(checked >= 2, "only {checked} feasible draws");
}

#[test]
fn feasibility_verdicts() {
    let cfg = build_fig3_scenario(1.0, &los_base()).unwrap();
    let v = all_vertices(&cfg).unwrap();
    let (em, cm) = (v.e_max.point.energy, v.c_min.point.crb);
    let sdp = SdpOptions::default();
    let verdict =
        |fe: f64, fs: f64| feasibility_check(&cfg, &Thresholds::new(fe * em, fs * cm).unwrap(), &sdp).unwrap();
    assert_eq!(verdict(1.1, 1e3), FeasibilityVerdict::Infeasible(InfeasibleReason::Energy));
    assert_eq!(verdict(0.1, 0.9), FeasibilityVerdict::Infeasible(InfeasibleReason::Crb));
    // Energy and sensing directions are orthogonal: both near their
    // optimum cannot share the power budget.
    assert_eq!(verdict(0.9, 1.2), FeasibilityVerdict::Infeasible(InfeasibleReason::Joint));
    assert!(matches!(verdict(0.3, 3.0), FeasibilityVerdict::Feasible { .. }));
    assert!(matches!(
        solve_p1(&cfg, &Thresholds::new(0.9 * em, 1.2 * cm).unwrap(), &SolverOptions::default()),
        Err(CreError::Infeasible(InfeasibleReason::Joint))
    ));
}

fn random_covariance(seed: u64, m: usize, power: f64) -> TransmitCovariance {
    let g = cre_core::model::scenario_file::rayleigh_matrix(m, m, seed);
    let h = Hermitian::symmetrize(&g * g.adjoint());
    TransmitCovariance::new(h.scale(power / h.trace())).unwrap()
}

#[test]
fn schur_block_sign_matches_crb() {
    let cfg = random_scenario(60, 4);
    let sm = cfg.sensing();
    for seed in 0..20 {
        let s = random_covariance(seed, 4, cfg.power);
        let c = crb(&s, &sm, &cfg).unwrap();
        let loose = schur_block(&s, &sm, cfg.gamma_s1(1.01 * c));
        let tight = schur_block(&s, &sm, cfg.gamma_s1(0.99 * c));
        assert!(loose.min_eigenvalue() >= 0.0);
        assert!(tight.min_eigenvalue() < 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Tightening either threshold never raises the optimum beyond the
    /// certified gap.
    #[test]
    fn rate_is_monotone_in_thresholds(seed in 0u64..1000, fe in 0.05f64..0.8, fs in 1.1f64..50.0) {
        let cfg = random_scenario(seed, 4);
        let v = all_vertices(&cfg).unwrap();
        let (em, cm) = (v.e_max.point.energy, v.c_min.point.crb);
        let opts = SolverOptions::default();
        let base = solve_p1(&cfg, &Thresholds::new(fe * em, fs * cm).unwrap(), &opts);
        prop_assume!(base.is_ok());
        let base = base.unwrap();
        for th in [Thresholds::new(0.5 * fe * em, fs * cm).unwrap(), Thresholds::new(fe * em, 2.0 * fs * cm).unwrap()] {
            let looser = solve_p1(&cfg, &th, &opts).unwrap();
            prop_assert!(looser.rate >= base.rate - looser.duality_gap - 1e-9);
        }
    }
}
