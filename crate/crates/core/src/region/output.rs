//! CSV emission. Every file starts with a header row and a units row;
//! numbers use Rust's shortest round-trip exponent format so reruns are
//! byte-identical.

use std::io::Write;

use super::sweep::{Edge, Surface, TsComparison};
use super::time_switching::TsFrontier;
use crate::error::{CreError, Result};
use crate::model::units::to_db;
use crate::vertices::Vertices;

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn writer<W: Write>(w: W, header: &[&str], units: &[&str]) -> Result<csv::Writer<W>> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header).map_err(csv_err)?;
    out.write_record(units).map_err(csv_err)?;
    Ok(out)
}

fn csv_err(e: csv::Error) -> CreError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CreError::Io(io),
        other => CreError::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

pub fn write_vertices_csv<W: Write>(v: &Vertices, w: W) -> Result<()> {
    let mut out = writer(w, &["label", "crb", "crb_db", "rate", "energy"], &["-", "rad^2", "dB", "bps/Hz", "W"])?;
    for x in v.iter() {
        let p = x.point;
        out.write_record([x.kind.label().to_string(), num(p.crb), num(to_db(p.crb)), num(p.rate), num(p.energy)])
            .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_edge_csv<W: Write>(edge: &Edge, w: W) -> Result<()> {
    let mut out = writer(
        w,
        &["threshold", "crb", "crb_db", "rate", "energy", "status", "duality_gap"],
        &[edge.kind.threshold_unit(), "rad^2", "dB", "bps/Hz", "W", "-", "bps/Hz"],
    )?;
    for s in &edge.samples {
        let p = s.point;
        out.write_record([
            num(s.threshold),
            num(p.crb),
            num(to_db(p.crb)),
            num(p.rate),
            num(p.energy),
            s.status.label().to_string(),
            num(s.duality_gap),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// One row per grid point; `crb_db` is the CRB threshold in dB.
pub fn write_surface_csv<W: Write>(surface: &Surface, w: W) -> Result<()> {
    let mut out = writer(
        w,
        &["gamma_eh", "gamma_s", "crb_db", "rate", "status", "duality_gap"],
        &["W", "rad^2", "dB", "bps/Hz", "-", "bps/Hz"],
    )?;
    for r in &surface.records {
        out.write_record([
            num(r.gamma_eh),
            num(r.gamma_s),
            num(to_db(r.gamma_s)),
            num(r.rate),
            r.status.label().to_string(),
            num(r.duality_gap),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_ts_csv<W: Write>(f: &TsFrontier, w: W) -> Result<()> {
    let mut out = writer(
        w,
        &["t_id", "t_eh", "t_s", "crb", "crb_db", "rate", "energy", "dominated"],
        &["-", "-", "-", "rad^2", "dB", "bps/Hz", "W", "-"],
    )?;
    for (p, d) in f.points.iter().zip(&f.dominated) {
        let q = p.point;
        out.write_record([
            num(p.t_id),
            num(p.t_eh),
            num(p.t_s),
            num(q.crb),
            num(to_db(q.crb)),
            num(q.rate),
            num(q.energy),
            (*d as u8).to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_benchmark_csv<W: Write>(rows: &[TsComparison], w: W) -> Result<()> {
    let mut out = writer(
        w,
        &["gamma_eh", "gamma_s", "crb_db", "rate_opt", "status", "duality_gap", "rate_ts", "t_id", "t_eh", "t_s"],
        &["W", "rad^2", "dB", "bps/Hz", "-", "bps/Hz", "bps/Hz", "-", "-", "-"],
    )?;
    for r in rows {
        let (rate, t) = match r.time_switching {
            Some(p) => (p.point.rate, [p.t_id, p.t_eh, p.t_s]),
            None => (f64::NAN, [f64::NAN; 3]),
        };
        out.write_record([
            num(r.gamma_eh),
            num(r.gamma_s),
            num(to_db(r.gamma_s)),
            num(r.optimal_rate),
            r.status.label().to_string(),
            num(r.duality_gap),
            num(rate),
            num(t[0]),
            num(t[1]),
            num(t[2]),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}
