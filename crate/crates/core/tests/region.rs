use cre_core::p1::{solve_p1, SolverOptions};
use cre_core::region::*;
use cre_core::vertices::all_vertices;
use cre_core::Thresholds;
use num_complex::Complex64;

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(1e-300)
    }
}

fn opts() -> RegionOptions {
    RegionOptions { workers: 4, ..RegionOptions::default() }
}

/// Steering vector entries written out independently of the library.
fn steer(m: usize, sin_t: f64) -> Vec<Complex64> {
    (0..m)
        .map(|k| {
            let phase = std::f64::consts::PI * (2.0 * k as f64 + 1.0 - m as f64) / 2.0 * sin_t;
            Complex64::from_polar(1.0, phase)
        })
        .collect()
}

fn inner(h: &cre_core::CMatrix, v: &[Complex64]) -> f64 {
    let amp = h.norm() / (h.ncols() as f64).sqrt();
    (0..h.ncols()).map(|k| h[(0, k)].conj() * v[k]).sum::<Complex64>().norm() / amp
}

#[test]
fn fig3_channels_aligned_at_zero_correlation() {
    let cfg = build_fig3_scenario(0.0, &los_base()).unwrap();
    let a0 = steer(10, 0.0);
    assert_eq!(cfg.theta, 0.0);
    assert!((inner(&cfg.h_id, &a0) - 10.0).abs() < 1e-12);
    assert!((inner(&cfg.h_eh, &a0) - 10.0).abs() < 1e-12);
}

#[test]
fn fig3_channels_orthogonal_at_full_decorrelation() {
    let cfg = build_fig3_scenario(1.0, &los_base()).unwrap();
    let a0 = steer(10, 0.0);
    let a_eh = steer(10, 0.4);
    assert!(inner(&cfg.h_id, &a0) <= 1e-10 * 10.0);
    assert!(inner(&cfg.h_eh, &a0) <= 1e-10 * 10.0);
    assert!(inner(&cfg.h_id, &a_eh) <= 1e-10 * 10.0);
}

#[test]
fn fig3_channels_partially_correlated() {
    let cfg = build_fig3_scenario(0.4, &los_base()).unwrap();
    let a0 = steer(10, 0.0);
    for h in [&cfg.h_id, &cfg.h_eh] {
        let ip = inner(h, &a0);
        assert!(ip > 1e-6 && ip < 10.0 - 1e-6, "{ip}");
    }
}

#[test]
fn fig3_rejects_out_of_range_gamma() {
    assert!(build_fig3_scenario(1.5, &los_base()).is_err());
    assert!(build_fig3_scenario(-0.1, &los_base()).is_err());
    let mut small = los_base();
    small.tx_antennas = 3;
    small.h_id = small.h_id.columns(0, 3).into_owned();
    small.h_eh = small.h_eh.columns(0, 3).into_owned();
    assert!(build_fig3_scenario(1.0, &small).is_err());
}

#[test]
fn edge_endpoints_match_vertices() {
    let cfg = build_fig3_scenario(0.4, &los_base()).unwrap();
    let v = all_vertices(&cfg).unwrap();
    let e = compute_edges(&cfg, &v, 6, &opts()).unwrap();
    let close = |p: cre_core::CrePoint, q: cre_core::CrePoint| {
        rel(p.crb, q.crb) <= 1e-3 && rel(p.rate, q.rate) <= 1e-3 && rel(p.energy, q.energy) <= 1e-3
    };
    for edge in e.iter() {
        assert!(edge.samples.iter().all(|s| s.status == SampleStatus::Ok), "{:?}", edge.kind);
    }
    let first = |edge: &Edge| edge.samples.first().unwrap().point;
    let last = |edge: &Edge| edge.samples.last().unwrap().point;
    assert!(close(first(&e.cr), v.c_min.point));
    assert!(close(last(&e.cr), v.r_max.point), "{:?} {:?}", last(&e.cr), v.r_max.point);
    assert!(close(first(&e.re), v.r_max.point));
    assert!(close(last(&e.re), v.e_max.point));
    assert!(close(first(&e.ce), v.c_min.point));
    assert!(close(last(&e.ce), v.e_max.point));
}

#[test]
fn edges_are_monotone() {
    let cfg = rayleigh_scenario(3);
    let v = all_vertices(&cfg).unwrap();
    let e = compute_edges(&cfg, &v, 8, &opts()).unwrap();
    // Tighter thresholds can only lower the optimum; the slack is the
    // certified suboptimality of the looser solve.
    for w in e.re.samples.windows(2) {
        let gap = if w[0].duality_gap.is_nan() { 0.0 } else { w[0].duality_gap };
        assert!(w[1].point.rate <= w[0].point.rate + gap + 1e-9);
    }
    for w in e.cr.samples.windows(2) {
        let gap = if w[1].duality_gap.is_nan() { 0.0 } else { w[1].duality_gap };
        assert!(w[0].point.rate <= w[1].point.rate + gap + 1e-9);
    }
    for w in e.ce.samples.windows(2) {
        assert!(w[0].point.energy <= w[1].point.energy * (1.0 + 1e-6));
    }
    for s in e.cr.samples.iter().chain(&e.ce.samples) {
        assert!(s.point.crb <= s.threshold * (1.0 + 1e-6));
    }
    for s in &e.re.samples {
        assert!(s.point.energy >= s.threshold * (1.0 - 1e-6));
    }
}

#[test]
fn cr_edge_lies_between_correlation_extremes() {
    let base = los_base();
    let mid = build_fig3_scenario(0.4, &base).unwrap();
    let far = build_fig3_scenario(1.0, &base).unwrap();
    let v = all_vertices(&mid).unwrap();
    let e = compute_edges(&mid, &v, 6, &opts()).unwrap();
    let r_max = v.r_max.point.rate;
    for s in e.cr.samples.iter().skip(1) {
        let th = Thresholds::new(0.0, s.threshold).unwrap();
        let r_far = solve_p1(&far, &th, &SolverOptions::default()).unwrap().rate;
        assert!(s.point.rate <= r_max + 1e-6);
        assert!(s.point.rate >= r_far - 1e-6, "Γ_S {:e}: {} < {}", s.threshold, s.point.rate, r_far);
    }
}

fn monotone_envelope(s: &Surface) {
    for i in 0..s.gamma_eh.len() {
        for j in 0..s.gamma_s.len() {
            let r = s.at(i, j);
            if r.status != SampleStatus::Ok {
                continue;
            }
            // Neighbours with a looser energy or CRB threshold.
            let mut looser = Vec::new();
            if i > 0 {
                looser.push(s.at(i - 1, j));
            }
            if j + 1 < s.gamma_s.len() {
                looser.push(s.at(i, j + 1));
            }
            for n in looser {
                if n.status == SampleStatus::Ok {
                    // Points pinned to a vertex carry a NaN gap and no slack.
                    let gap = if n.duality_gap.is_nan() { 0.0 } else { n.duality_gap };
                    assert!(n.rate >= r.rate - gap - 1e-9, "({i},{j}): {} vs {}", n.rate, r.rate);
                } else {
                    assert_ne!(n.status, SampleStatus::Infeasible, "looser neighbour of a feasible point");
                }
            }
        }
    }
}

#[test]
fn surface_properties_rayleigh() {
    let cfg = rayleigh_scenario(5);
    let v = all_vertices(&cfg).unwrap();
    let s = compute_surface(&cfg, &v, 5, 5, &opts()).unwrap();
    assert_eq!(s.records.len(), 25);
    // Smallest energy threshold, largest CRB threshold: R-max is feasible.
    let corner = s.at(0, 4);
    assert_eq!(corner.status, SampleStatus::Ok);
    assert!(rel(corner.rate, v.r_max.point.rate) <= 1e-3);
    // The tightest pair (E_max, CRB_min) is outside unless the vertices coincide.
    assert_ne!(s.at(4, 0).status, SampleStatus::Ok);
    assert!(s.records.iter().all(|r| r.status != SampleStatus::Failed));
    assert!(s.records.iter().filter(|r| r.status == SampleStatus::Ok).count() >= 10);
    monotone_envelope(&s);
}

#[test]
fn surface_collapses_to_a_point_without_correlation() {
    let cfg = build_fig3_scenario(0.0, &los_base()).unwrap();
    let v = all_vertices(&cfg).unwrap();
    let s = compute_surface(&cfg, &v, 3, 3, &opts()).unwrap();
    for r in s.records.iter().filter(|r| r.status == SampleStatus::Ok) {
        assert!(rel(r.rate, v.r_max.point.rate) <= 1e-4);
    }
    assert!(s.records.iter().any(|r| r.status == SampleStatus::Ok));
}

#[test]
fn surface_csv_is_deterministic() {
    let cfg = rayleigh_scenario(9);
    let v = all_vertices(&cfg).unwrap();
    let run = |workers| {
        let s = compute_surface(&cfg, &v, 3, 3, &RegionOptions { workers, ..RegionOptions::default() }).unwrap();
        let mut buf = Vec::new();
        write_surface_csv(&s, &mut buf).unwrap();
        buf
    };
    let a = run(1);
    assert_eq!(a, run(3));
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("gamma_eh,gamma_s,crb_db,rate,status,duality_gap"));
    assert_eq!(lines.next(), Some("W,rad^2,dB,bps/Hz,-,bps/Hz"));
    assert_eq!(lines.count(), 9);
}

#[test]
fn time_switching_pure_portions() {
    let cfg = rayleigh_scenario(2);
    let v = all_vertices(&cfg).unwrap();
    let ts = TimeSwitching::new(&cfg, &v);
    let id = ts.evaluate(1.0, 0.0, 0.0).point;
    assert!(rel(id.rate, v.r_max.point.rate) <= 1e-12);
    assert!(rel(id.energy, v.r_max.point.energy) <= 1e-12);
    assert!(rel(id.crb, v.r_max.point.crb) <= 1e-9);
    let s = ts.evaluate(0.0, 0.0, 1.0).point;
    assert!(rel(s.crb, v.c_min.point.crb) <= 1e-9);
    assert_eq!(s.rate, 0.0);
}

#[test]
fn time_switching_frontier_is_on_the_simplex() {
    let cfg = rayleigh_scenario(2);
    let v = all_vertices(&cfg).unwrap();
    let f = time_switching_frontier(&cfg, &v, 0.05).unwrap();
    assert_eq!(f.points.len(), 21 * 22 / 2);
    for p in &f.points {
        assert!((p.t_id + p.t_eh + p.t_s - 1.0).abs() <= 1e-12);
        assert!(p.t_id >= 0.0 && p.t_eh >= 0.0 && p.t_s >= 0.0);
    }
    // The pure ID portion has the highest rate, so it is never dominated.
    let top = f.points.iter().position(|p| p.t_id == 1.0).unwrap();
    assert!(!f.dominated[top]);
    for p in &f.points {
        assert!(p.point.rate <= v.r_max.point.rate * (1.0 + 1e-12));
        assert!(p.point.energy <= v.e_max.point.energy * (1.0 + 1e-12));
        assert!(p.point.crb >= v.c_min.point.crb * (1.0 - 1e-9));
    }
}

#[test]
fn optimal_design_beats_time_switching() {
    let cfg = rayleigh_scenario(4);
    let v = all_vertices(&cfg).unwrap();
    for fe in [0.05, 0.5] {
        for fs in [1.5, 10.0, 200.0] {
            let th = Thresholds::new(fe * v.e_max.point.energy, fs * v.c_min.point.crb).unwrap();
            let Some(ts) = best_time_switching(&cfg, &v, &th, 0.005).unwrap() else { continue };
            let opt = solve_p1(&cfg, &th, &SolverOptions::default()).unwrap();
            assert!(ts.point.rate <= opt.rate + 1e-6, "fe {fe} fs {fs}: TS {} > {}", ts.point.rate, opt.rate);
        }
    }
}
