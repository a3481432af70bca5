use rayon::prelude::*;

use super::{radial, ExperimentConfig};
use crate::error::Result;
use crate::fit::{rate_fit, RateFit};
use crate::quadrature::ZoneFilter;

#[derive(Debug, Clone, PartialEq)]
pub struct DecaySeries {
    pub t: Vec<f64>,
    /// `‖|D|^s u(t)‖`
    pub u_norm: Vec<f64>,
    /// `‖|D|^s u_t(t)‖`
    pub ut_norm: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub series: DecaySeries,
    /// Factor divided out of `u_norm` before fitting (1 unless logarithmic).
    pub log_divisor: Vec<f64>,
    pub fit_u: RateFit,
    pub fit_ut: RateFit,
    pub predicted_u: f64,
    pub predicted_ut: f64,
}

/// Norms of `u` and `u_t` over the time grid, whole frequency range.
pub fn decay_series(cfg: &ExperimentConfig) -> Result<DecaySeries> {
    cfg.validate()?;
    let rows: Vec<(f64, f64)> = cfg
        .t_grid
        .par_iter()
        .map(|&t| {
            let spec = cfg.norm_spec(t, cfg.s, ZoneFilter::All);
            let state = |r: f64| {
                let (u0, u1) = cfg.data_at(r);
                Ok(cfg.solver.vdw_states(&cfg.params, r, &[t], u0, u1)?[0])
            };
            let u = radial(&spec, |r| Ok(state(r)?.u.norm_sqr()))?;
            let ut = radial(&spec, |r| Ok(state(r)?.ut.norm_sqr()))?;
            Ok((u.sqrt(), ut.sqrt()))
        })
        .collect::<Result<_>>()?;
    Ok(DecaySeries {
        t: cfg.t_grid.clone(),
        u_norm: rows.iter().map(|r| r.0).collect(),
        ut_norm: rows.iter().map(|r| r.1).collect(),
    })
}

/// Exponents the estimates predict for `‖|D|^s u‖` and `‖|D|^s u_t‖`, and
/// whether the `u` series carries a `(ln(e+t))^{1/2}` factor.
pub fn predicted_exponents(n: u32, s: f64, u1_moment_nonzero: bool) -> (f64, f64, bool) {
    let nf = n as f64;
    let base = -s / 2.0 - nf / 4.0;
    if !u1_moment_nonzero {
        return (base, base, false);
    }
    let m = 2.0 * s + nf;
    let u = if m < 2.0 {
        1.0 - s - nf / 2.0
    } else if m == 2.0 {
        0.0
    } else if m < 3.0 {
        1.0 - 5.0 * s / 6.0 - 5.0 * nf / 12.0
    } else {
        0.5 - s / 2.0 - nf / 4.0
    };
    (u, base, m == 2.0)
}

pub fn decay_experiment(cfg: &ExperimentConfig) -> Result<DecayReport> {
    cfg.validate_time_fit()?;
    let series = decay_series(cfg)?;
    let moment = cfg.u1.profile_amplitude() != 0.0;
    let (predicted_u, predicted_ut, log_case) = predicted_exponents(cfg.n, cfg.s, moment);
    let log_divisor: Vec<f64> = series
        .t
        .iter()
        .map(|&t| {
            if log_case {
                (std::f64::consts::E + t).ln().sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let scaled: Vec<f64> = series.u_norm.iter().zip(&log_divisor).map(|(u, d)| u / d).collect();
    let fit_u = rate_fit(&series.t, &scaled, cfg.fit_window)?;
    let fit_ut = rate_fit(&series.t, &series.ut_norm, cfg.fit_window)?;
    Ok(DecayReport {
        series,
        log_divisor,
        fit_u,
        fit_ut,
        predicted_u,
        predicted_ut,
    })
}
