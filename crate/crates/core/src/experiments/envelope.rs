use rayon::prelude::*;

use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::spectrum::{cubic_char_roots, Zone};
use crate::C64;

/// Margin applied to the slowest spectral decay rate when fitting `c`.
const RATE_MARGIN: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct ZoneEnvelope {
    pub zone: Zone,
    /// `max |K̂_j| / bound_j` over the grid and both kernels.
    pub c_u: f64,
    /// Same for `∂_t K̂_j`.
    pub c_ut: f64,
    /// Fitted exponential rate `c` (bounded and large zones).
    pub rate: Option<f64>,
    pub points: usize,
}

impl ZoneEnvelope {
    pub fn passed(&self) -> bool {
        self.points > 0
            && self.c_u.is_finite()
            && self.c_ut.is_finite()
            && self.rate.is_none_or(|c| c > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    pub zones: Vec<ZoneEnvelope>,
}

impl EnvelopeReport {
    pub fn passed(&self) -> bool {
        self.zones.iter().all(ZoneEnvelope::passed)
    }
}

/// Right-hand sides for `(|K̂0|, |K̂1|, |∂tK̂0|, |∂tK̂1|)`.
fn bounds(cfg: &ExperimentConfig, zone: Zone, r: f64, t: f64, c: f64) -> [f64; 4] {
    let g = cfg.params.gamma;
    let r2 = r * r;
    match zone {
        Zone::Small => {
            let e = (-cfg.params.diffusion_rate() * r2 * t).exp();
            let (sn, cs) = (cfg.params.gamma_tilde() * r * t).sin_cos();
            let (sn, cs) = (sn.abs(), cs.abs());
            let mem = r2 * (-g * t).exp();
            [
                (cs + r * sn) * e + mem,
                (r2 * cs + sn / r) * e + mem,
                (r2 * cs + r * sn) * e + mem,
                (cs + r2 * r * sn) * e + mem,
            ]
        }
        Zone::Bounded => {
            let e = (-c * t).exp();
            [e; 4]
        }
        Zone::Large => {
            let (ec, er) = ((-c * t).exp(), (-r2 * t).exp());
            [
                ec + er / r2,
                (ec + er) / r2,
                ec + er,
                (ec + r2 * er) / r2,
            ]
        }
    }
}

fn ratio(value: C64, bound: f64) -> f64 {
    let v = value.norm();
    if v == 0.0 {
        0.0
    } else {
        v / bound
    }
}

/// Largest kernel-to-bound ratios per zone over the `(r, t)` product grid
/// (`r` from the configured frequency grid, `t` from `{0} ∪ t_grid`).
pub fn envelope_check(cfg: &ExperimentConfig) -> Result<EnvelopeReport> {
    cfg.validate()?;
    let zones = cfg.zones();
    let mut times = vec![0.0];
    times.extend(cfg.t_grid.iter().copied().filter(|t| *t > 0.0));
    let mut out = Vec::new();
    for zone in [Zone::Small, Zone::Bounded, Zone::Large] {
        let nodes: Vec<f64> = cfg
            .r_grid
            .nodes
            .iter()
            .copied()
            .filter(|&r| r > 0.0 && zones.classify(r) == zone)
            .collect();
        if nodes.is_empty() {
            return Err(Error::Precondition(format!(
                "frequency grid has no nodes in the {zone:?} zone"
            )));
        }
        let rate = match zone {
            Zone::Small => None,
            _ => {
                let slowest = nodes
                    .iter()
                    .map(|&r| Ok(-cubic_char_roots(&cfg.params, r)?.spectral_abscissa()))
                    .collect::<Result<Vec<f64>>>()?
                    .into_iter()
                    .fold(f64::INFINITY, f64::min);
                Some(RATE_MARGIN * slowest)
            }
        };
        let c = rate.unwrap_or(0.0);
        let per_node: Vec<(f64, f64)> = nodes
            .par_iter()
            .map(|&r| {
                let one = C64::new(1.0, 0.0);
                let zero = C64::new(0.0, 0.0);
                let s0 = cfg.solver.vdw_states(&cfg.params, r, &times, one, zero)?;
                let s1 = cfg.solver.vdw_states(&cfg.params, r, &times, zero, one)?;
                let mut cu: f64 = 0.0;
                let mut cut: f64 = 0.0;
                for (k, &t) in times.iter().enumerate() {
                    let b = bounds(cfg, zone, r, t, c);
                    cu = cu.max(ratio(s0[k].u, b[0])).max(ratio(s1[k].u, b[1]));
                    cut = cut.max(ratio(s0[k].ut, b[2])).max(ratio(s1[k].ut, b[3]));
                }
                Ok((cu, cut))
            })
            .collect::<Result<_>>()?;
        out.push(ZoneEnvelope {
            zone,
            c_u: per_node.iter().map(|p| p.0).fold(0.0, f64::max),
            c_ut: per_node.iter().map(|p| p.1).fold(0.0, f64::max),
            rate,
            points: nodes.len() * times.len(),
        });
    }
    Ok(EnvelopeReport { zones: out })
}
