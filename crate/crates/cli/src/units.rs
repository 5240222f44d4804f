//! Threshold strings with units.
//!
//! Energy: `none`, `0`, `1e-4` (W), `1e-4W`, `1e-4J` (per unit time, same as W),
//! `-10dBm`, or `0.5emax` (fraction of the E-max vertex energy).
//!
//! CRB: `none`, `inf`, `1e-5` (rad²), `1e-5rad2`, `1e-5rad^2`, `-50dB`, or
//! `2crbmin` (multiple of the C-min vertex CRB).

use anyhow::{bail, Context, Result};
use cre_core::model::units::{dbm_to_watts, from_db};
use cre_core::Vertices;

fn split_suffix<'a>(s: &'a str, suffixes: &[&'static str]) -> (&'a str, Option<&'static str>) {
    let lower = s.to_ascii_lowercase();
    for suf in suffixes {
        if lower.ends_with(&suf.to_ascii_lowercase()) {
            return (s[..s.len() - suf.len()].trim(), Some(*suf));
        }
    }
    (s, None)
}

fn number(s: &str, whole: &str) -> Result<f64> {
    let v: f64 = s.parse().with_context(|| format!("cannot parse '{whole}' as a number with unit"))?;
    if !v.is_finite() {
        bail!("'{whole}' is not finite");
    }
    Ok(v)
}

/// Energy threshold in W; 0 drops the constraint.
pub fn parse_energy(s: &str, v: &Vertices) -> Result<f64> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("none") {
        return Ok(0.0);
    }
    let (n, suf) = split_suffix(t, &["dBm", "emax", "W", "J"]);
    let x = number(n, t)?;
    let w = match suf {
        Some("dBm") => dbm_to_watts(x),
        Some("emax") => x * v.e_max.point.energy,
        _ => x,
    };
    if w < 0.0 {
        bail!("energy threshold '{t}' is negative");
    }
    Ok(w)
}

/// CRB threshold in rad²; `+∞` drops the constraint.
pub fn parse_crb(s: &str, v: &Vertices) -> Result<f64> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("none") || t.eq_ignore_ascii_case("inf") {
        return Ok(f64::INFINITY);
    }
    let (n, suf) = split_suffix(t, &["crbmin", "rad^2", "rad2", "dB"]);
    let x = number(n, t)?;
    let c = match suf {
        Some("dB") => from_db(x),
        Some("crbmin") => x * v.c_min.point.crb,
        _ => x,
    };
    if c <= 0.0 {
        bail!("CRB threshold '{t}' must be positive");
    }
    Ok(c)
}
