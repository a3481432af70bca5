use rayon::prelude::*;

use super::{decay_series, radial, ExperimentConfig};
use crate::error::{Error, Result};
use crate::fit::{rate_fit, RateFit};
use crate::kernel::leading_profiles;
use crate::quadrature::{rate_function, RateKind, ZoneFilter};

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSeries {
    pub t: Vec<f64>,
    /// `‖χ_int (û − Ĵ0 f̂0(0) − Ĵ1 f̂1(0))‖`
    pub error_norm: Vec<f64>,
    /// `‖χ_int û‖`
    pub solution_norm: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileReport {
    pub series: ProfileSeries,
    pub fit_error: RateFit,
    pub fit_solution: RateFit,
    /// `fit_solution.slope − fit_error.slope`
    pub gain: f64,
    /// Error-to-solution ratio decreases strictly at every in-window time beyond `t = 10³`.
    pub monotone_after_1e3: bool,
}

/// Small-zone norms of the solution and of its deviation from the leading profiles.
pub fn profile_error_series(cfg: &ExperimentConfig) -> Result<ProfileSeries> {
    cfg.validate()?;
    let zones = cfg.zones();
    // The profiles carry the data values at the origin, f̂(0) = (2π)^{-n/2} P_f.
    let a0 = cfg.u0.profile_amplitude();
    let a1 = cfg.u1.profile_amplitude();
    let rows: Vec<(f64, f64)> = cfg
        .t_grid
        .par_iter()
        .map(|&t| {
            let spec = cfg.norm_spec(t, cfg.s, ZoneFilter::Small);
            let u = |r: f64| {
                let (u0, u1) = cfg.data_at(r);
                Ok(cfg.solver.vdw_states(&cfg.params, r, &[t], u0, u1)?[0].u)
            };
            let err = radial(&spec, |r| {
                let j = leading_profiles(&cfg.params, r, t, &zones)?;
                Ok((u(r)? - j.j0 * a0 - j.j1 * a1).norm_sqr())
            })?;
            let sol = radial(&spec, |r| Ok(u(r)?.norm_sqr()))?;
            Ok((err.sqrt(), sol.sqrt()))
        })
        .collect::<Result<_>>()?;
    Ok(ProfileSeries {
        t: cfg.t_grid.clone(),
        error_norm: rows.iter().map(|r| r.0).collect(),
        solution_norm: rows.iter().map(|r| r.1).collect(),
    })
}

pub fn profile_error_experiment(cfg: &ExperimentConfig) -> Result<ProfileReport> {
    cfg.validate_time_fit()?;
    let series = profile_error_series(cfg)?;
    let fit_error = rate_fit(&series.t, &series.error_norm, cfg.fit_window)?;
    let fit_solution = rate_fit(&series.t, &series.solution_norm, cfg.fit_window)?;
    let ratios: Vec<f64> = series
        .t
        .iter()
        .zip(series.error_norm.iter().zip(&series.solution_norm))
        .filter(|(t, _)| **t >= 1e3 && **t >= cfg.fit_window.0 && **t <= cfg.fit_window.1)
        .map(|(_, (e, s))| e / s)
        .collect();
    let monotone_after_1e3 = ratios.len() >= 2 && ratios.windows(2).all(|w| w[1] < w[0]);
    Ok(ProfileReport {
        gain: fit_solution.slope - fit_error.slope,
        series,
        fit_error,
        fit_solution,
        monotone_after_1e3,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityReport {
    pub t: Vec<f64>,
    /// `‖u(t)‖ / H(t; n)` on the fit window.
    pub ratio: Vec<f64>,
    pub min: f64,
    pub max: f64,
    /// Ratio bounded above and away from zero on the window.
    pub bounded: bool,
}

impl OptimalityReport {
    /// `C / c`
    pub fn spread(&self) -> f64 {
        self.max / self.min
    }
}

/// `‖u(t)‖ / H(t; n)` over the in-window times, without the moment precondition.
pub fn optimality_ratios(cfg: &ExperimentConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.validate_time_fit()?;
    let mut sub = cfg.clone();
    sub.s = 0.0;
    sub.t_grid = cfg
        .t_grid
        .iter()
        .copied()
        .filter(|t| *t >= cfg.fit_window.0 * (1.0 - 1e-12) && *t <= cfg.fit_window.1 * (1.0 + 1e-12))
        .collect();
    let series = decay_series(&sub)?;
    let ratio = series
        .t
        .iter()
        .zip(&series.u_norm)
        .map(|(&t, &u)| Ok(u / rate_function(RateKind::H, t, 0.0, cfg.n)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok((series.t, ratio))
}

pub fn optimality_check(cfg: &ExperimentConfig) -> Result<OptimalityReport> {
    if cfg.u1.profile_amplitude() == 0.0 {
        return Err(Error::Precondition(
            "optimality needs u1 with nonzero moment".into(),
        ));
    }
    let (t, ratio) = optimality_ratios(cfg)?;
    let min = ratio.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ratio.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bounded = !ratio.is_empty() && min > 0.0 && max.is_finite();
    Ok(OptimalityReport {
        t,
        ratio,
        min,
        max,
        bounded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DataSpectrum;
    use crate::fit::log_space;

    #[test]
    fn zero_data_has_zero_profile_error() {
        let cfg = ExperimentConfig {
            u1: DataSpectrum::Zero,
            t_grid: vec![10.0, 100.0],
            ..ExperimentConfig::default()
        };
        let s = profile_error_series(&cfg).unwrap();
        assert!(s.error_norm.iter().all(|e| *e == 0.0));
    }

    #[test]
    fn zero_moment_is_a_precondition_violation() {
        let cfg = ExperimentConfig {
            u1: DataSpectrum::LinearGaussian { amp: 1.0, width: 1.0 },
            ..ExperimentConfig::default()
        };
        assert!(matches!(optimality_check(&cfg), Err(Error::Precondition(_))));
    }

    #[test]
    fn profile_error_is_smaller_than_solution() {
        let cfg = ExperimentConfig {
            t_grid: log_space(100.0, 1000.0, 5),
            fit_window: (100.0, 1000.0),
            ..ExperimentConfig::default()
        };
        let s = profile_error_series(&cfg).unwrap();
        for (e, u) in s.error_norm.iter().zip(&s.solution_norm) {
            assert!(e < u);
        }
    }
}
