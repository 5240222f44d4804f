//! The three single-objective vertices of the region: maximum rate,
//! maximum energy and minimum CRB.

use serde::Serialize;

use crate::error::{CreError, Result};
use crate::linalg::{c, complex_svd, CMatrix, Hermitian};
use crate::model::{evaluate, steering, CrePoint, ScenarioConfig, TransmitCovariance};
use crate::sdp::{c_min_sdp, SdpOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VertexKind {
    RMax,
    EMax,
    CMin,
}

impl VertexKind {
    pub fn label(&self) -> &'static str {
        match self {
            VertexKind::RMax => "R-max",
            VertexKind::EMax => "E-max",
            VertexKind::CMin => "C-min",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Vertex {
    pub kind: VertexKind,
    pub covariance: TransmitCovariance,
    pub point: CrePoint,
    /// Set when the defining channel is zero and the vertex is trivial.
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct Vertices {
    pub r_max: Vertex,
    pub e_max: Vertex,
    pub c_min: Vertex,
}

impl Vertices {
    pub fn iter(&self) -> impl Iterator<Item = &Vertex> {
        [&self.r_max, &self.e_max, &self.c_min].into_iter()
    }
}

/// Water-filling over parallel channels with power gains `gains` (already
/// divided by the noise power): `p_k = (μ − 1/g_k)^+` with `Σ p_k = power`.
/// Channels with zero gain get nothing. The water level is found exactly by
/// scanning the gains in decreasing order.
pub fn water_filling(gains: &[f64], power: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > 0.0).collect();
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]));
    let mut p = vec![0.0; gains.len()];
    if order.is_empty() || power <= 0.0 {
        return p;
    }
    let mut inv_sum = 0.0;
    let mut level = 0.0;
    let mut active = 0;
    for (k, &i) in order.iter().enumerate() {
        let cand = (power + inv_sum + 1.0 / gains[i]) / (k + 1) as f64;
        if cand <= 1.0 / gains[i] {
            break;
        }
        inv_sum += 1.0 / gains[i];
        level = cand;
        active = k + 1;
    }
    for &i in &order[..active] {
        p[i] = (level - 1.0 / gains[i]).max(0.0);
    }
    p
}

fn vertex(kind: VertexKind, s: TransmitCovariance, cfg: &ScenarioConfig, degenerate: bool) -> Result<Vertex> {
    let point = evaluate(&s, &cfg.sensing(), cfg)?;
    Ok(Vertex { kind, covariance: s, point, degenerate })
}

/// Eigenmode transmission over the ID channel with water-filling.
pub fn r_max(cfg: &ScenarioConfig) -> Result<Vertex> {
    let svd = complex_svd(&cfg.h_id)?;
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        log::warn!("ID channel is zero; R-max vertex has zero rate");
        return vertex(VertexKind::RMax, TransmitCovariance::zeros(cfg.tx_antennas), cfg, true);
    }
    let gains: Vec<f64> = svd
        .singular_values
        .iter()
        .map(|&s| if s > crate::linalg::RANK_EPS * smax { s * s / cfg.sigma2_id } else { 0.0 })
        .collect();
    let p = water_filling(&gains, cfg.power);
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(p.len(), p.iter().map(|&v| c(v))));
    let s = Hermitian::symmetrize(&svd.v * d * svd.v.adjoint());
    vertex(VertexKind::RMax, TransmitCovariance::new(s)?, cfg, false)
}

/// Strongest eigenmode transmission over the EH channel: `P v vᴴ`.
pub fn e_max(cfg: &ScenarioConfig) -> Result<Vertex> {
    let svd = complex_svd(&cfg.h_eh)?;
    if svd.singular_values[0] == 0.0 {
        return Err(CreError::DegenerateChannel("EH channel is zero"));
    }
    let v = svd.v.column(0).into_owned();
    let s = Hermitian::outer(&v).scale(cfg.power);
    vertex(VertexKind::EMax, TransmitCovariance::new(s)?, cfg, false)
}

/// `(P/M) conj(a_t) a_tᵀ`, the CRB minimizer when `N_S > M`.
pub fn c_min_closed_form(cfg: &ScenarioConfig) -> TransmitCovariance {
    let a = steering(cfg.tx_antennas, cfg.theta).map(|z| z.conj());
    TransmitCovariance::from_hermitian_unchecked(Hermitian::outer(&a).scale(cfg.power / cfg.tx_antennas as f64))
}

/// Minimum-CRB vertex: closed form when `N_S > M`, otherwise the SDP.
pub fn c_min(cfg: &ScenarioConfig) -> Result<Vertex> {
    let s = if cfg.sensing_antennas > cfg.tx_antennas {
        c_min_closed_form(cfg)
    } else {
        c_min_sdp(cfg, &SdpOptions::default())?
    };
    vertex(VertexKind::CMin, s, cfg, false)
}

pub fn all_vertices(cfg: &ScenarioConfig) -> Result<Vertices> {
    Ok(Vertices { r_max: r_max(cfg)?, e_max: e_max(cfg)?, c_min: c_min(cfg)? })
}
