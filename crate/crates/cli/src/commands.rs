use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use cre_core::model::scenario_file::ScenarioFile;
use cre_core::model::units::to_db;
use cre_core::p1::{solve_p1, write_trace_csv, SolverOptions};
use cre_core::region::{
    compare_time_switching, compute_edges, compute_surface, geomspace, rayleigh_scenario, time_switching_frontier,
    write_benchmark_csv, write_edge_csv, write_surface_csv, write_ts_csv, write_vertices_csv, RegionOptions,
    SampleStatus, CRB_CAP_FACTOR,
};
use cre_core::sdp::{frank_wolfe_rate_max, FrankWolfeOptions};
use cre_core::vertices::all_vertices;
use cre_core::{CreError, Hermitian, ScenarioConfig, Thresholds, Vertices};
use serde_json::json;

use crate::args::{parse_grid, BenchArgs, CommonArgs, EdgesArgs, SolveArgs, SurfaceArgs};
use crate::units::{parse_crb, parse_energy};
use crate::{plots, ExitStatus};

/// Relative rate difference above which the oracle is said to disagree.
pub const ORACLE_TOL: f64 = 1e-3;

/// Scenario from embedded text (replay), the `--scenario` file, or the
/// built-in Rayleigh scenario seeded by `--seed` (default 1). Returns the
/// TOML text that was used, if any.
pub fn load_scenario(common: &CommonArgs, embedded: Option<&str>) -> Result<(ScenarioConfig, Option<String>)> {
    let text = match (embedded, &common.scenario) {
        (Some(t), _) => Some(t.to_string()),
        (None, Some(p)) => {
            Some(fs::read_to_string(p).map_err(CreError::Io).with_context(|| format!("reading {}", p.display()))?)
        }
        (None, None) => None,
    };
    let cfg = match &text {
        Some(t) => {
            let mut file = ScenarioFile::parse(t)?;
            if let Some(s) = common.seed {
                file.override_seed(s);
            }
            file.to_config()?
        }
        None => rayleigh_scenario(common.seed.unwrap_or(1)),
    };
    Ok((cfg, text))
}

pub fn region_options(common: &CommonArgs) -> RegionOptions {
    RegionOptions { workers: common.workers, solver: solver_options(common) }
}

pub fn solver_options(common: &CommonArgs) -> SolverOptions {
    SolverOptions { tol_dual: common.tol_dual, ..SolverOptions::default() }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).map_err(CreError::Io).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn covariance_json(h: &Hermitian) -> serde_json::Value {
    let m = h.as_matrix();
    let n = h.dim();
    let re: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)].re).collect()).collect();
    let im: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)].im).collect()).collect();
    json!({ "dim": n, "re": re, "im": im })
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_vertices(dir: &Path, v: &Vertices) -> Result<()> {
    write_vertices_csv(v, create(dir, "vertices.csv")?)?;
    let mut covs = serde_json::Map::new();
    for x in v.iter() {
        covs.insert(x.kind.label().to_string(), covariance_json(x.covariance.matrix()));
    }
    write_json(dir, "vertex_covariances.json", &serde_json::Value::Object(covs))
}

fn finite_crb(v: &Vertices, crb: f64) -> f64 {
    let cap = CRB_CAP_FACTOR * v.c_min.point.crb;
    if crb.is_finite() {
        crb.min(cap)
    } else {
        cap
    }
}

pub fn vertices(cfg: &ScenarioConfig, c: &CommonArgs) -> Result<ExitStatus> {
    let v = all_vertices(cfg)?;
    write_vertices(&c.out, &v)?;
    for x in v.iter() {
        let p = x.point;
        println!(
            "{:>6}  crb {:.4e} rad^2 ({:.2} dB)  rate {:.4} bps/Hz  energy {:.4e} W",
            x.kind.label(),
            p.crb,
            to_db(p.crb),
            p.rate,
            p.energy
        );
    }
    Ok(ExitStatus::Success)
}

fn write_edges(cfg: &ScenarioConfig, v: &Vertices, samples: usize, c: &CommonArgs) -> Result<()> {
    let edges = compute_edges(cfg, v, samples, &region_options(c))?;
    for e in edges.iter() {
        write_edge_csv(e, create(&c.out, &format!("edge_{}.csv", e.kind.label()))?)?;
    }
    plots::edges(&c.out)
}

pub fn edges(cfg: &ScenarioConfig, a: &EdgesArgs) -> Result<ExitStatus> {
    let v = all_vertices(cfg)?;
    write_vertices(&a.common.out, &v)?;
    write_edges(cfg, &v, a.grid, &a.common)?;
    println!("wrote vertices and {} samples per edge to {}", a.grid, a.common.out.display());
    Ok(ExitStatus::Success)
}

pub fn surface(cfg: &ScenarioConfig, a: &SurfaceArgs) -> Result<ExitStatus> {
    let (n_eh, n_s) = parse_grid(&a.grid).map_err(CreError::Config)?;
    let c = &a.common;
    let v = all_vertices(cfg)?;
    write_vertices(&c.out, &v)?;
    write_edges(cfg, &v, a.edge_samples, c)?;
    let s = compute_surface(cfg, &v, n_eh, n_s, &region_options(c))?;
    write_surface_csv(&s, create(&c.out, "surface.csv")?)?;
    plots::surface(&c.out)?;
    let ok = s.records.iter().filter(|r| r.status == SampleStatus::Ok).count();
    println!("surface {n_eh}x{n_s}: {ok} solved points, written to {}", c.out.display());
    Ok(ExitStatus::Success)
}

pub fn solve(cfg: &ScenarioConfig, a: &SolveArgs) -> Result<ExitStatus> {
    let c = &a.common;
    let v = all_vertices(cfg)?;
    let gamma_eh = a.gamma_eh.as_deref().map(|s| parse_energy(s, &v)).transpose()?.unwrap_or(0.0);
    let gamma_s = a.gamma_s.as_deref().map(|s| parse_crb(s, &v)).transpose()?.unwrap_or(f64::INFINITY);
    let th = Thresholds::new(gamma_eh, gamma_s)?;
    let opts = SolverOptions { record_trace: a.trace, ..solver_options(c) };
    let sol = solve_p1(cfg, &th, &opts)?;

    let p = sol.point;
    let mut w = create(&c.out, "solution.csv")?;
    writeln!(w, "gamma_eh,gamma_s,rate,crb,crb_db,energy,dual_value,duality_gap,iterations,used_completion")?;
    writeln!(w, "W,rad^2,bps/Hz,rad^2,dB,W,bps/Hz,bps/Hz,-,-")?;
    writeln!(
        w,
        "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{}",
        gamma_eh,
        gamma_s,
        sol.rate,
        p.crb,
        to_db(p.crb),
        p.energy,
        sol.dual_value,
        sol.duality_gap,
        sol.iterations,
        sol.used_completion as u8
    )?;
    w.flush()?;
    if a.trace {
        let mut t = create(&c.out, "trace.csv")?;
        write_trace_csv(&sol.trace, &mut t)?;
        t.flush()?;
    }

    let mut status = ExitStatus::Success;
    let oracle = if a.oracle {
        let fw = frank_wolfe_rate_max(cfg, &th, &FrankWolfeOptions::default())?;
        let rel = (fw.rate - sol.rate).abs() / sol.rate.abs().max(1e-12);
        if rel > ORACLE_TOL {
            log::error!("oracle disagrees: solver {:.6} vs Frank-Wolfe {:.6} bps/Hz", sol.rate, fw.rate);
            status = ExitStatus::SolverFailure;
        }
        println!("oracle rate {:.6} bps/Hz (relative difference {rel:.2e})", fw.rate);
        Some(
            json!({ "rate": fw.rate, "gap": fw.gap, "iterations": fw.iterations, "converged": fw.converged, "relative_difference": rel }),
        )
    } else {
        None
    };

    let d = sol.dual_opt;
    let report = json!({
        "thresholds": { "gamma_eh_w": gamma_eh, "gamma_s_rad2": if gamma_s.is_finite() { json!(gamma_s) } else { json!("inf") } },
        "rate_bps_hz": sol.rate,
        "crb_rad2": if p.crb.is_finite() { json!(p.crb) } else { json!("inf") },
        "energy_w": p.energy,
        "dual_value": sol.dual_value,
        "duality_gap": sol.duality_gap,
        "dual_point": { "lambda": d.lambda, "nu": d.nu, "z1": d.z1, "z2": [d.z2.re, d.z2.im], "z3": d.z3 },
        "iterations": sol.iterations,
        "used_completion": sol.used_completion,
        "covariance": covariance_json(sol.s_opt.matrix()),
        "oracle": oracle,
    });
    write_json(&c.out, "report.json", &report)?;
    println!(
        "rate {:.6} bps/Hz  crb {:.4e} rad^2  energy {:.4e} W  gap {:.2e}  ({} iterations)",
        sol.rate, p.crb, p.energy, sol.duality_gap, sol.iterations
    );
    Ok(status)
}

pub fn benchmark(cfg: &ScenarioConfig, a: &BenchArgs) -> Result<ExitStatus> {
    let c = &a.common;
    let v = all_vertices(cfg)?;
    let gamma_eh = a.gamma_eh.iter().map(|s| parse_energy(s, &v)).collect::<Result<Vec<_>>>()?;
    if a.grid == 0 {
        return Err(anyhow!(CreError::Config("--grid must be at least 1".into())));
    }
    let hi = finite_crb(&v, v.r_max.point.crb);
    let gamma_s = geomspace(1.01 * v.c_min.point.crb, hi.max(1.01 * v.c_min.point.crb), a.grid);
    let rows = compare_time_switching(cfg, &v, &gamma_eh, &gamma_s, a.ts_step, &region_options(c))?;
    write_benchmark_csv(&rows, create(&c.out, "benchmark_ts.csv")?)?;
    let frontier = time_switching_frontier(cfg, &v, a.ts_step)?;
    write_ts_csv(&frontier, create(&c.out, "ts_frontier.csv")?)?;
    plots::benchmark(&c.out)?;
    for r in &rows {
        let ts = r.time_switching.map(|p| p.point.rate).unwrap_or(f64::NAN);
        println!(
            "E {:.3e} W  CRB {:7.2} dB  optimal {:.4}  time switching {:.4} bps/Hz",
            r.gamma_eh,
            to_db(r.gamma_s),
            r.optimal_rate,
            ts
        );
    }
    Ok(ExitStatus::Success)
}
