use rayon::prelude::*;

use super::ExperimentConfig;
use crate::data::V2Spec;
use crate::error::{Error, Result};
use crate::fit::{rate_fit, RateFit};
use crate::kernel::ModeState;
use crate::params::ModelParams;
use crate::quadrature::{radial_integral, radial_integral_vec, NormSpec, ZoneFilter};
use crate::C64;

/// Largest relative change of the memory energy under doubling of the history grid.
pub const HISTORY_TOL: f64 = 0.01;

/// Relative quadrature tolerance for `w = v_τ − u`; the subtraction loses
/// digits as the fast MGT root grows like `1/τ`.
pub const DIFFERENCE_REL_TOL: f64 = 1e-6;

/// Absolute quadrature floor relative to the data energy; needed when `w`
/// vanishes identically (consistent data at `t = 0`).
pub const DIFFERENCE_ABS_FLOOR: f64 = 1e-14;

/// Standard-energy components of `w = v_τ − u`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyComponents {
    /// `τ‖w_tt‖²`
    pub tau_wtt: f64,
    /// `‖∇w_t‖²`
    pub grad_wt: f64,
    /// `‖∇w‖²`
    pub grad_w: f64,
    /// `τ‖w_t‖²`
    pub tau_wt: f64,
    /// `γ ∫₀ᵗ g(t−s) ‖∇w(t) − ∇w(s)‖² ds`
    pub memory: f64,
}

impl EnergyComponents {
    pub fn total(&self) -> f64 {
        self.tau_wtt + self.grad_wt + self.grad_w + self.tau_wt + self.memory
    }

    pub fn all_nonnegative(&self) -> bool {
        [self.tau_wtt, self.grad_wt, self.grad_w, self.tau_wt, self.memory]
            .iter()
            .all(|v| *v >= 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergySeries {
    pub tau: f64,
    pub t: Vec<f64>,
    pub e_standard: Vec<EnergyComponents>,
    /// `‖w(t)‖²`
    pub w_l2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub series: Vec<EnergySeries>,
    pub probe_time: f64,
    /// `E_S(probe_time)` per τ.
    pub probe_energy: Vec<f64>,
    pub fit: RateFit,
    pub predicted: f64,
    /// `(E_S(0), τ‖v₂ − Δu₀ − Δu₁‖²)` per τ.
    pub initial: Vec<(f64, f64)>,
    /// `E_S(probe)` nondecreasing in τ (soft check).
    pub monotone_in_tau: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionLimitReport {
    pub tau: Vec<f64>,
    /// `‖w(probe_time)‖²` per τ.
    pub w_l2: Vec<f64>,
    pub fit: RateFit,
    pub predicted: f64,
    /// Observed slope at least `predicted − 0.1`.
    pub meets_bound: bool,
}

fn predicted_rate(v2: &V2Spec) -> f64 {
    match v2 {
        V2Spec::Consistent => 2.0,
        V2Spec::Spectrum(_) => 1.0,
    }
}

fn tau_window(cfg: &ExperimentConfig) -> (f64, f64) {
    let lo = cfg.tau_list.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = cfg.tau_list.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// `(ŵ, ŵ_t, ŵ_tt)` at the given times for one frequency.
fn difference_states(cfg: &ExperimentConfig, mgt: &ModelParams, r: f64, times: &[f64]) -> Result<Vec<ModeState>> {
    let (u0, u1) = cfg.data_at(r);
    let v2 = C64::new(cfg.v2.eval(r, &cfg.u0, &cfg.u1), 0.0);
    let u = cfg.solver.vdw_states(&cfg.params, r, times, u0, u1)?;
    let v = cfg.solver.mgt_states(mgt, r, times, u0, u1, v2)?;
    Ok(u.iter()
        .zip(&v)
        .map(|(a, b)| ModeState {
            u: b.u - a.u,
            ut: b.ut - a.ut,
            utt: b.utt - a.utt,
            z: b.z - a.z,
        })
        .collect())
}

/// `∫ (1 + r²)² (|û₀|² + |û₁|²) + |v̂₂|²` over all frequencies.
fn data_scale(cfg: &ExperimentConfig) -> Result<f64> {
    let spec = cfg.norm_spec(0.0, 0.0, ZoneFilter::All);
    if spec.r_max <= 0.0 {
        return Ok(0.0);
    }
    let h = |r: f64| {
        let w = (1.0 + r * r).powi(2);
        let (a, b) = (cfg.u0.eval(r), cfg.u1.eval(r));
        Ok(w * (a * a + b * b) + cfg.v2.eval(r, &cfg.u0, &cfg.u1).powi(2))
    };
    Ok(radial_integral(h, &spec)?.value)
}

fn spec_at(cfg: &ExperimentConfig, t: f64, scale: f64) -> NormSpec {
    let mut spec = cfg.norm_spec(t, 0.0, ZoneFilter::All);
    spec.opts.rel_tol = DIFFERENCE_REL_TOL;
    spec.opts.abs_tol = DIFFERENCE_ABS_FLOOR * scale;
    spec
}

/// Energy components and `‖w‖²` at time `t`; the memory term uses the
/// trapezoid rule on `history_points` intervals and is checked against the
/// doubled grid.
fn energy_at(cfg: &ExperimentConfig, mgt: &ModelParams, t: f64, scale: f64) -> Result<(EnergyComponents, f64)> {
    let tau = mgt.tau()?;
    let g = cfg.params.gamma;
    let m = cfg.history_points;
    let fine = 2 * m;
    let grid: Vec<f64> = (0..=fine).map(|k| t * k as f64 / fine as f64).collect();
    let spec = spec_at(cfg, t, scale);
    if spec.r_max <= 0.0 {
        return Ok((EnergyComponents::default(), 0.0));
    }
    let h = |r: f64| -> Result<Vec<f64>> {
        let r2 = r * r;
        let st = if t > 0.0 {
            difference_states(cfg, mgt, r, &grid)?
        } else {
            difference_states(cfg, mgt, r, &[0.0])?
        };
        let w = *st.last().expect("non-empty");
        let (mut coarse, mut finer) = (0.0, 0.0);
        if t > 0.0 {
            let ds = t / fine as f64;
            for (k, (s, sk)) in grid.iter().zip(&st).enumerate() {
                let val = (-g * (t - s)).exp() * (w.u - sk.u).norm_sqr();
                let end = k == 0 || k == fine;
                finer += if end { 0.5 } else { 1.0 } * val * ds;
                if k % 2 == 0 {
                    coarse += if end { 0.5 } else { 1.0 } * val * 2.0 * ds;
                }
            }
        }
        Ok(vec![
            tau * w.utt.norm_sqr(),
            r2 * w.ut.norm_sqr(),
            r2 * w.u.norm_sqr(),
            tau * w.ut.norm_sqr(),
            g * r2 * coarse,
            g * r2 * finer,
            w.u.norm_sqr(),
        ])
    };
    let (v, _) = radial_integral_vec(h, &spec)?;
    let (memory, memory_fine) = (v[4], v[5]);
    if (memory - memory_fine).abs() > HISTORY_TOL * memory_fine.abs() && memory_fine.abs() > 1e-300 {
        return Err(Error::Refinement(format!(
            "memory energy at t = {t} changes by {:.3e} (relative) when the history grid is doubled",
            (memory - memory_fine).abs() / memory_fine.abs()
        )));
    }
    Ok((
        EnergyComponents {
            tau_wtt: v[0],
            grad_wt: v[1],
            grad_w: v[2],
            tau_wt: v[3],
            memory,
        },
        v[6],
    ))
}

/// `τ‖v₂ − Δu₀ − Δu₁‖²`, computed directly from the data spectra.
fn initial_energy(cfg: &ExperimentConfig, tau: f64) -> Result<f64> {
    let spec = cfg.norm_spec(0.0, 0.0, ZoneFilter::All);
    if spec.r_max <= 0.0 {
        return Ok(0.0);
    }
    let w2 = |r: f64| {
        let v2 = cfg.v2.eval(r, &cfg.u0, &cfg.u1);
        v2 + r * r * (cfg.u0.eval(r) + cfg.u1.eval(r))
    };
    Ok(tau * radial_integral(|r| Ok(w2(r).powi(2)), &spec)?.value)
}

pub fn singular_limit_energy(cfg: &ExperimentConfig) -> Result<EnergyReport> {
    cfg.validate_tau_list()?;
    let mut times = vec![0.0, cfg.probe_time];
    times.extend(cfg.energy_times.iter().copied().filter(|t| *t >= 0.0));
    times.sort_by(f64::total_cmp);
    times.dedup();
    let scale = data_scale(cfg)?;

    let per_tau: Vec<(EnergySeries, f64, (f64, f64))> = cfg
        .tau_list
        .par_iter()
        .map(|&tau| {
            let mgt = cfg.params.with_tau(tau)?;
            let rows: Vec<(EnergyComponents, f64)> = times
                .iter()
                .map(|&t| energy_at(cfg, &mgt, t, scale))
                .collect::<Result<_>>()?;
            let probe = rows[times.iter().position(|t| *t == cfg.probe_time).expect("probe in times")]
                .0
                .total();
            let init = (rows[0].0.total(), initial_energy(cfg, tau)?);
            Ok((
                EnergySeries {
                    tau,
                    t: times.clone(),
                    e_standard: rows.iter().map(|r| r.0).collect(),
                    w_l2: rows.iter().map(|r| r.1).collect(),
                },
                probe,
                init,
            ))
        })
        .collect::<Result<_>>()?;

    let taus: Vec<f64> = per_tau.iter().map(|p| p.0.tau).collect();
    let probe_energy: Vec<f64> = per_tau.iter().map(|p| p.1).collect();
    let fit = rate_fit(&taus, &probe_energy, tau_window(cfg))?;
    let mut order: Vec<usize> = (0..taus.len()).collect();
    order.sort_by(|&i, &j| taus[i].total_cmp(&taus[j]));
    let monotone_in_tau = order.windows(2).all(|w| probe_energy[w[1]] >= probe_energy[w[0]]);
    Ok(EnergyReport {
        probe_time: cfg.probe_time,
        probe_energy,
        fit,
        predicted: predicted_rate(&cfg.v2),
        initial: per_tau.iter().map(|p| p.2).collect(),
        monotone_in_tau,
        series: per_tau.into_iter().map(|p| p.0).collect(),
    })
}

pub fn singular_limit_solution(cfg: &ExperimentConfig) -> Result<SolutionLimitReport> {
    cfg.validate_tau_list()?;
    if !cfg.allow_outside_hypotheses && (cfg.params.gamma <= 5.0 || cfg.n < 3) {
        return Err(Error::Precondition(format!(
            "solution singular limit needs gamma > 5 and n >= 3 (got gamma = {}, n = {}); set the override to run anyway",
            cfg.params.gamma, cfg.n
        )));
    }
    let t = cfg.probe_time;
    let spec = spec_at(cfg, t, data_scale(cfg)?);
    let w_l2: Vec<f64> = cfg
        .tau_list
        .par_iter()
        .map(|&tau| {
            let mgt = cfg.params.with_tau(tau)?;
            if spec.r_max <= 0.0 {
                return Ok(0.0);
            }
            let q = radial_integral(|r| Ok(difference_states(cfg, &mgt, r, &[t])?[0].u.norm_sqr()), &spec)?;
            Ok(q.value)
        })
        .collect::<Result<_>>()?;
    let fit = rate_fit(&cfg.tau_list, &w_l2, tau_window(cfg))?;
    let predicted = predicted_rate(&cfg.v2);
    Ok(SolutionLimitReport {
        tau: cfg.tau_list.clone(),
        w_l2,
        meets_bound: fit.slope >= predicted - 0.1,
        fit,
        predicted,
    })
}
