//! Self-checks on one scenario, written to `validate.csv` with one
//! PASS/FAIL line per check on stdout.

use std::fs::File;
use std::io::{BufWriter, Write};

use anyhow::Result;
use cre_core::model::crb;
use cre_core::model::scenario_file::rayleigh_matrix;
use cre_core::p1::{eval_dual, solve_p1, DualPoint};
use cre_core::sdp::{frank_wolfe_rate_max, FrankWolfeOptions};
use cre_core::vertices::all_vertices;
use cre_core::{CMatrix, CreError, Hermitian, ScenarioConfig, Thresholds, TransmitCovariance, Vertices};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::args::ValidateArgs;
use crate::commands::{solver_options, ORACLE_TOL};
use crate::ExitStatus;

pub const GAP_TOL: f64 = 1e-4;
pub const HOMOGENEITY_TOL: f64 = 1e-9;
pub const FD_TOL: f64 = 1e-4;
pub const FD_POINTS: usize = 20;

struct Row {
    check: &'static str,
    trial: usize,
    value: f64,
    tolerance: f64,
    pass: bool,
}

/// Energy threshold uniform in `[0.05, 0.9] E_max`, CRB threshold
/// log-uniform in `[1.05, 100] CRB_min`.
pub fn random_thresholds(rng: &mut impl Rng, v: &Vertices) -> Thresholds {
    let fe = rng.random_range(0.05..0.9);
    let fs = (rng.random_range(1.05f64.ln()..100f64.ln())).exp();
    Thresholds { gamma_eh: fe * v.e_max.point.energy, gamma_s: fs * v.c_min.point.crb }
}

/// `G Gᴴ` scaled to trace `power`, with `G` a seeded Gaussian matrix.
pub fn random_covariance(seed: u64, m: usize, power: f64) -> TransmitCovariance {
    let g = rayleigh_matrix(m, m, seed);
    let h = Hermitian::symmetrize(&g * g.adjoint());
    TransmitCovariance::new(h.scale(power / h.trace())).expect("Gram matrix is PSD")
}

/// Dual point with `Z ≻ 0` and `ν` raised until the dual function is finite.
pub fn interior_dual_point(rng: &mut impl Rng, cfg: &ScenarioConfig, th: &Thresholds) -> DualPoint {
    let l = [
        rng.random_range(0.1..1.0),
        rng.random_range(-0.5..0.5),
        rng.random_range(-0.5..0.5),
        rng.random_range(0.1..1.0),
    ];
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

/// Largest mismatch between the analytic subgradient and central
/// differences, relative to `|analytic| + 1e-4`.
pub fn subgradient_error(cfg: &ScenarioConfig, th: &Thresholds, dp: &DualPoint) -> Result<f64> {
    let an = eval_dual(dp, cfg, th)?.subgradient;
    let y = dp.to_vec();
    let g = |p: [f64; 6]| eval_dual(&DualPoint::from_vec(p), cfg, th).map(|e| e.g);
    let mut worst = 0.0f64;
    for i in 0..6 {
        let h = 1e-5 * y[i].abs().max(1.0);
        let (mut up, mut dn) = (y, y);
        up[i] += h;
        dn[i] -= h;
        let fd = (g(up)? - g(dn)?) / (2.0 * h);
        worst = worst.max((fd - an[i]).abs() / (an[i].abs() + 1e-4));
    }
    Ok(worst)
}

pub fn run(cfg: &ScenarioConfig, a: &ValidateArgs) -> Result<ExitStatus> {
    let c = &a.common;
    let v = all_vertices(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed.unwrap_or(0));
    let opts = solver_options(c);
    let mut rows = Vec::new();

    for t in 0..a.trials {
        let th = random_thresholds(&mut rng, &v);
        match solve_p1(cfg, &th, &opts) {
            Ok(sol) => {
                let rel = sol.duality_gap / sol.dual_value.abs().max(1e-12);
                rows.push(Row { check: "duality_gap", trial: t, value: rel, tolerance: GAP_TOL, pass: rel <= GAP_TOL });
                if t < 5 {
                    let fw = frank_wolfe_rate_max(cfg, &th, &FrankWolfeOptions::default())?;
                    let d = (fw.rate - sol.rate).abs() / sol.rate.abs().max(1e-12);
                    rows.push(Row {
                        check: "oracle",
                        trial: t,
                        value: d,
                        tolerance: ORACLE_TOL,
                        pass: d <= ORACLE_TOL,
                    });
                }
            }
            Err(CreError::Infeasible(r)) => log::info!("trial {t}: thresholds infeasible ({r}), skipped"),
            Err(e) => {
                log::warn!("trial {t}: {e}");
                rows.push(Row { check: "duality_gap", trial: t, value: f64::NAN, tolerance: GAP_TOL, pass: false });
            }
        }
    }

    let sm = cfg.sensing();
    for t in 0..a.trials {
        let s = random_covariance(rng.random(), cfg.tx_antennas, cfg.power);
        let k = rng.random_range(0.1..10.0);
        let base = crb(&s, &sm, cfg)?;
        let scaled = crb(&s.scale(k), &sm, cfg)?;
        let err = (scaled * k - base).abs() / base;
        rows.push(Row {
            check: "crb_homogeneity",
            trial: t,
            value: err,
            tolerance: HOMOGENEITY_TOL,
            pass: err <= HOMOGENEITY_TOL,
        });
    }

    for t in 0..FD_POINTS {
        let th = random_thresholds(&mut rng, &v);
        let dp = interior_dual_point(&mut rng, cfg, &th);
        let err = subgradient_error(cfg, &th, &dp)?;
        rows.push(Row { check: "subgradient_fd", trial: t, value: err, tolerance: FD_TOL, pass: err <= FD_TOL });
    }

    let m = cfg.tx_antennas;
    let mut asym = CMatrix::identity(m, m);
    if m > 1 {
        asym[(0, 1)] = Complex64::new(1.0, 0.0);
    }
    let rejected = m > 1 && matches!(Hermitian::new(asym), Err(CreError::ContractViolation(_)));
    rows.push(Row {
        check: "hermitian_contract",
        trial: 0,
        value: rejected as u8 as f64,
        tolerance: 1.0,
        pass: rejected || m == 1,
    });

    let mut w = BufWriter::new(File::create(c.out.join("validate.csv")).map_err(CreError::Io)?);
    writeln!(w, "check,trial,value,tolerance,pass")?;
    for r in &rows {
        writeln!(w, "{},{},{:e},{:e},{}", r.check, r.trial, r.value, r.tolerance, r.pass as u8)?;
    }
    w.flush()?;

    let mut all_pass = true;
    for check in ["duality_gap", "oracle", "crb_homogeneity", "subgradient_fd", "hermitian_contract"] {
        let sel: Vec<&Row> = rows.iter().filter(|r| r.check == check).collect();
        let failed = sel.iter().filter(|r| !r.pass).count();
        let worst = sel.iter().map(|r| r.value).fold(f64::NAN, f64::max);
        let verdict = match (sel.is_empty(), failed) {
            (true, _) => "SKIP",
            (false, 0) => "PASS",
            _ => "FAIL",
        };
        all_pass &= verdict != "FAIL";
        println!("{verdict} {check}: {} cases, {failed} failed, worst {worst:.3e}", sel.len());
    }
    Ok(if all_pass { ExitStatus::Success } else { ExitStatus::CheckFailed })
}
