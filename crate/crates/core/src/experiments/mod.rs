//! End-to-end harnesses: decay rates, profile refinement, optimality,
//! pointwise envelopes and singular-limit rates.

mod decay;
mod envelope;
mod profile;
mod singular;

pub use decay::{decay_experiment, decay_series, predicted_exponents, DecayReport, DecaySeries};
pub use envelope::{envelope_check, EnvelopeReport, ZoneEnvelope};
pub use profile::{
    optimality_check, optimality_ratios, profile_error_experiment, profile_error_series,
    OptimalityReport, ProfileReport, ProfileSeries,
};
pub use singular::{
    singular_limit_energy, singular_limit_solution, EnergyComponents, EnergyReport, EnergySeries,
    SolutionLimitReport,
};

use crate::data::{DataSpectrum, V2Spec};
use crate::error::{invalid, Error, Result};
use crate::fit::log_space;
use crate::kernel::{mgt_series_from_roots, vdw_series_from_roots, vdw_utt, ModeSeries, ModeState};
use crate::oracle::{accurate_step, integrate_mgt_mode, integrate_vdw_mode};
use crate::params::ModelParams;
use crate::quadrature::{oscillation_cap, radial_integral, NormSpec, QuadOptions, ZoneFilter};
use crate::spectrum::{cubic_char_roots, quartic_char_roots, FrequencyGrid, Zones};
use crate::C64;

/// Root separation (relative) below which the kernel path hands a mode to the oracle.
pub const FALLBACK_SEPARATION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeSolver {
    Kernel,
    Oracle,
}

impl ModeSolver {
    /// VDW mode states at the given nondecreasing times.
    pub fn vdw_states(&self, params: &ModelParams, r: f64, times: &[f64], u0: C64, u1: C64) -> Result<Vec<ModeState>> {
        if *self == ModeSolver::Kernel {
            if let Some(series) = kernel_vdw_series(params, r, u0, u1)? {
                return Ok(times
                    .iter()
                    .map(|&t| {
                        let mut s = series.state(t);
                        s.utt = vdw_utt(r, &s);
                        s
                    })
                    .collect());
            }
        }
        integrate_vdw_mode(params, r, times, u0, u1, accurate_step(params, r))
    }

    /// MGT mode states at the given nondecreasing times.
    pub fn mgt_states(
        &self,
        params: &ModelParams,
        r: f64,
        times: &[f64],
        v0: C64,
        v1: C64,
        v2: C64,
    ) -> Result<Vec<ModeState>> {
        if *self == ModeSolver::Kernel {
            if let Some(series) = kernel_mgt_series(params, r, v0, v1, v2)? {
                return Ok(times.iter().map(|&t| series.state(t)).collect());
            }
        }
        integrate_mgt_mode(params, r, times, v0, v1, v2, accurate_step(params, r))
    }
}

/// `None` when the roots are too close for the exponential-sum representation.
fn kernel_vdw_series(params: &ModelParams, r: f64, u0: C64, u1: C64) -> Result<Option<ModeSeries>> {
    if r == 0.0 {
        return crate::kernel::vdw_series(params, r, u0, u1).map(Some);
    }
    let roots = cubic_char_roots(params, r)?;
    if roots.min_relative_separation() < FALLBACK_SEPARATION {
        return Ok(None);
    }
    match vdw_series_from_roots(params, &roots, u0, u1) {
        Ok(s) => Ok(Some(s)),
        Err(Error::NearDegenerate { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn kernel_mgt_series(params: &ModelParams, r: f64, v0: C64, v1: C64, v2: C64) -> Result<Option<ModeSeries>> {
    if r == 0.0 {
        let tau = params.tau()?;
        // a double root at r = 0 away from the origin means 1/τ = γ
        if (1.0 / tau - params.gamma).abs() < FALLBACK_SEPARATION * params.gamma {
            return Ok(None);
        }
        return crate::kernel::mgt_series(params, r, v0, v1, v2).map(Some);
    }
    let roots = quartic_char_roots(params, r)?;
    if roots.min_relative_separation() < FALLBACK_SEPARATION {
        return Ok(None);
    }
    match mgt_series_from_roots(params, &roots, v0, v1, v2) {
        Ok(s) => Ok(Some(s)),
        Err(Error::NearDegenerate { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    pub n: u32,
    pub s: f64,
    pub u0: DataSpectrum,
    pub u1: DataSpectrum,
    pub v2: V2Spec,
    pub t_grid: Vec<f64>,
    pub r_grid: FrequencyGrid,
    pub tau_list: Vec<f64>,
    pub fit_window: (f64, f64),
    /// Probe time for the τ-fits.
    pub probe_time: f64,
    /// Extra times at which energy series are sampled.
    pub energy_times: Vec<f64>,
    /// Trapezoid intervals on `[0, t]` for the memory energy.
    pub history_points: usize,
    pub solver: ModeSolver,
    /// Lets the solution singular-limit run outside `γ > 5, n ≥ 3`.
    pub allow_outside_hypotheses: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let zones = Zones::default();
        Self {
            params: ModelParams { gamma: 2.0, tau: None },
            n: 3,
            s: 0.0,
            u0: DataSpectrum::Zero,
            u1: DataSpectrum::Gaussian { amp: 1.0, width: 1.0 },
            v2: V2Spec::Consistent,
            t_grid: log_space(1e2, 1e4, 13),
            r_grid: FrequencyGrid::log_spaced(1e-3, 100.0, 200, zones).expect("valid default grid"),
            tau_list: log_space(1e-3, 1e-1, 7),
            fit_window: (1e2, 1e4),
            probe_time: 10.0,
            energy_times: Vec::new(),
            history_points: 200,
            solver: ModeSolver::Kernel,
            allow_outside_hypotheses: false,
        }
    }
}

impl ExperimentConfig {
    pub fn zones(&self) -> Zones {
        self.r_grid.zones()
    }

    pub fn set_zones(&mut self, zones: Zones) {
        self.r_grid.eps_cut = zones.eps;
        self.r_grid.n_cut = zones.n_cut;
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n == 0 {
            return Err(invalid("n", "dimension must be >= 1"));
        }
        if !(self.s >= 0.0 && self.s.is_finite()) {
            return Err(invalid("s", format!("must be >= 0, got {}", self.s)));
        }
        if self.t_grid.is_empty()
            || self.t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0))
            || self.t_grid.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(invalid("t_grid", "times must be >= 0 and strictly increasing"));
        }
        let (lo, hi) = self.fit_window;
        if !(lo > 0.0 && hi > lo) {
            return Err(invalid("fit_window", format!("need 0 < lo < hi, got ({lo}, {hi})")));
        }
        Zones::new(self.r_grid.eps_cut, self.r_grid.n_cut)?;
        if !(self.probe_time > 0.0 && self.probe_time.is_finite()) {
            return Err(invalid("probe_time", "must be positive"));
        }
        if self.history_points < 2 {
            return Err(invalid("history_points", "need at least 2"));
        }
        Ok(())
    }

    /// Checks that the fit window lies inside the time grid's span.
    pub(crate) fn validate_time_fit(&self) -> Result<()> {
        self.validate()?;
        let first = self.t_grid[0];
        let last = *self.t_grid.last().expect("non-empty");
        let slack = 1e-12;
        if self.fit_window.0 < first * (1.0 - slack) || self.fit_window.1 > last * (1.0 + slack) {
            return Err(invalid(
                "fit_window",
                format!(
                    "window ({}, {}) not inside time grid [{first}, {last}]",
                    self.fit_window.0, self.fit_window.1
                ),
            ));
        }
        Ok(())
    }

    pub(crate) fn validate_tau_list(&self) -> Result<()> {
        self.validate()?;
        if self.tau_list.len() < 2 {
            return Err(invalid("tau_list", "need at least two values"));
        }
        if self.tau_list.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
            return Err(invalid("tau_list", "each tau must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Radius beyond which all data spectra are negligible.
    pub fn r_max(&self) -> f64 {
        self.u0
            .support_radius()
            .max(self.u1.support_radius())
            .max(self.v2.support_radius())
    }

    pub(crate) fn data_at(&self, r: f64) -> (C64, C64) {
        (C64::new(self.u0.eval(r), 0.0), C64::new(self.u1.eval(r), 0.0))
    }

    /// Norm specification at time `t` with panel widths resolving `cos(γ̃rt)`.
    pub(crate) fn norm_spec(&self, t: f64, s: f64, filter: ZoneFilter) -> NormSpec {
        let zones = self.zones();
        let r_max = match filter {
            ZoneFilter::Small => zones.eps.min(self.r_max()),
            _ => self.r_max(),
        };
        NormSpec {
            n: self.n,
            s,
            filter,
            zones,
            r_max,
            opts: QuadOptions {
                max_width: Some(oscillation_cap(self.params.gamma_tilde(), t)),
                ..QuadOptions::default()
            },
        }
    }
}

/// `ω_n ∫ r^{2s+n-1} h(r) dr`, zero when the data vanish identically.
pub(crate) fn radial<F: Fn(f64) -> Result<f64>>(spec: &NormSpec, h: F) -> Result<f64> {
    if spec.r_max <= 0.0 {
        return Ok(0.0);
    }
    Ok(radial_integral(h, spec)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_and_kernel_solvers_agree() {
        let p = ModelParams::vdw(2.0).unwrap();
        let times = [0.5, 2.0, 9.0];
        for r in [0.0, 0.05, 1.3, 12.0] {
            let a = ModeSolver::Kernel
                .vdw_states(&p, r, &times, C64::new(1.0, 0.0), C64::new(0.5, 0.0))
                .unwrap();
            let b = ModeSolver::Oracle
                .vdw_states(&p, r, &times, C64::new(1.0, 0.0), C64::new(0.5, 0.0))
                .unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x.u - y.u).norm() <= 1e-8 * x.u.norm().max(1e-3), "r={r}");
                assert!((x.utt - y.utt).norm() <= 1e-8 * x.utt.norm().max(1e-3), "r={r}");
            }
        }
    }

    #[test]
    fn kernel_path_falls_back_at_double_roots() {
        // 1/τ = γ gives a double root −γ at r = 0
        let m = ModelParams::mgt(2.0, 0.5).unwrap();
        let v = ModeSolver::Kernel
            .mgt_states(&m, 0.0, &[1.0], C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0))
            .unwrap();
        let w = integrate_mgt_mode(&m, 0.0, &[1.0], C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0), 1e-3)
            .unwrap();
        assert!((v[0].u - w[0].u).norm() < 1e-9);
    }

    #[test]
    fn config_validation() {
        let mut c = ExperimentConfig::default();
        assert!(c.validate_time_fit().is_ok());
        c.fit_window = (10.0, 1e4);
        assert!(c.validate_time_fit().is_err());
        let c = ExperimentConfig {
            tau_list: vec![0.1, 1.5],
            ..ExperimentConfig::default()
        };
        assert!(c.validate_tau_list().is_err());
        let c = ExperimentConfig {
            t_grid: vec![1.0, 1.0],
            ..ExperimentConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
