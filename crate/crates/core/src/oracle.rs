//! Fixed-step classical Runge-Kutta integration of the per-mode systems
//! `(û, û_t, z)` and `(v̂, v̂_t, v̂_tt, z)` with `z' = û − γz`.

use crate::error::{invalid, Error, Result};
use crate::kernel::ModeState;
use crate::params::ModelParams;
use crate::C64;

/// Largest accepted `h · stiffness`; the real-axis RK4 stability limit is ≈ 2.785.
pub const STABILITY_LIMIT: f64 = 2.5;

/// `max(γ, r², 1/τ)`.
pub fn stiffness(params: &ModelParams, r: f64) -> f64 {
    let mut s = params.gamma.max(r * r);
    if let Some(tau) = params.tau {
        s = s.max(1.0 / tau);
    }
    s
}

/// `min(0.1, 0.2 / stiffness)`.
pub fn default_step(params: &ModelParams, r: f64) -> f64 {
    (0.2 / stiffness(params, r)).min(0.1)
}

/// A tenth of [`default_step`], for reference comparisons at 1e-6 and below.
pub fn accurate_step(params: &ModelParams, r: f64) -> f64 {
    default_step(params, r) / 10.0
}

type State<const D: usize> = [C64; D];

fn rk4_step<const D: usize>(y: &State<D>, h: f64, f: &impl Fn(&State<D>) -> State<D>) -> State<D> {
    let add = |a: &State<D>, b: &State<D>, s: f64| {
        let mut out = *a;
        for i in 0..D {
            out[i] += b[i] * s;
        }
        out
    };
    let k1 = f(y);
    let k2 = f(&add(y, &k1, h / 2.0));
    let k3 = f(&add(y, &k2, h / 2.0));
    let k4 = f(&add(y, &k3, h));
    let mut out = *y;
    for i in 0..D {
        out[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
    }
    out
}

fn check_inputs(params: &ModelParams, r: f64, times: &[f64], step: f64) -> Result<()> {
    params.validate()?;
    if !r.is_finite() || r < 0.0 {
        return Err(invalid("r", format!("radial frequency must be finite and >= 0, got {r}")));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(invalid("step", format!("must be positive, got {step}")));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("times", "output times must be finite, >= 0 and nondecreasing"));
    }
    let limit = STABILITY_LIMIT / stiffness(params, r);
    if step > limit {
        return Err(Error::UnstableStep { step, limit });
    }
    Ok(())
}

/// Steps from 0 through each output time, landing on it exactly with equal
/// sub-steps no longer than `step`.
fn integrate<const D: usize>(
    y0: State<D>,
    times: &[f64],
    step: f64,
    f: impl Fn(&State<D>) -> State<D>,
) -> Vec<State<D>> {
    let mut out = Vec::with_capacity(times.len());
    let mut y = y0;
    let mut t = 0.0;
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let n = (span / step).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for _ in 0..n {
                y = rk4_step(&y, h, &f);
            }
            t = target;
        }
        out.push(y);
    }
    out
}

pub fn integrate_vdw_mode(
    params: &ModelParams,
    r: f64,
    times: &[f64],
    u0: C64,
    u1: C64,
    step: f64,
) -> Result<Vec<ModeState>> {
    check_inputs(params, r, times, step)?;
    let g = params.gamma;
    let r2 = r * r;
    let rhs = |y: &State<3>| [y[1], (y[0] + y[1] - y[2]) * (-r2), y[0] - y[2] * g];
    let traj = integrate([u0, u1, C64::new(0.0, 0.0)], times, step, rhs);
    Ok(traj
        .into_iter()
        .map(|y| ModeState {
            u: y[0],
            ut: y[1],
            utt: (y[0] + y[1] - y[2]) * (-r2),
            z: y[2],
        })
        .collect())
}

pub fn integrate_mgt_mode(
    params: &ModelParams,
    r: f64,
    times: &[f64],
    v0: C64,
    v1: C64,
    v2: C64,
    step: f64,
) -> Result<Vec<ModeState>> {
    let tau = params.tau()?;
    check_inputs(params, r, times, step)?;
    let g = params.gamma;
    let r2 = r * r;
    let rhs = |y: &State<4>| {
        [
            y[1],
            y[2],
            -(y[2] + (y[0] + y[1] - y[3]) * r2) / tau,
            y[0] - y[3] * g,
        ]
    };
    let traj = integrate([v0, v1, v2, C64::new(0.0, 0.0)], times, step, rhs);
    Ok(traj
        .into_iter()
        .map(|y| ModeState {
            u: y[0],
            ut: y[1],
            utt: y[2],
            z: y[3],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{mgt_mode_solution, vdw_mode_solution};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn zero_frequency_is_exact() {
        let p = ModelParams::vdw(2.0).unwrap();
        let tr = integrate_vdw_mode(&p, 0.0, &[3.0], c(1.0), c(2.0), 0.1).unwrap();
        assert!((tr[0].u - 7.0).norm() < 1e-12);
    }

    #[test]
    fn rejects_unstable_step() {
        let p = ModelParams::vdw(2.0).unwrap();
        assert!(matches!(
            integrate_vdw_mode(&p, 10.0, &[1.0], c(1.0), c(0.0), 0.1),
            Err(Error::UnstableStep { .. })
        ));
        let m = ModelParams::mgt(2.0, 0.01).unwrap();
        assert!(matches!(
            integrate_mgt_mode(&m, 1.0, &[1.0], c(1.0), c(0.0), c(0.0), 0.5),
            Err(Error::UnstableStep { .. })
        ));
        assert!(integrate_mgt_mode(&p, 1.0, &[1.0], c(1.0), c(0.0), c(0.0), 0.01).is_err());
    }

    #[test]
    fn matches_kernel_solution() {
        let p = ModelParams::vdw(2.0).unwrap();
        let h = accurate_step(&p, 0.5);
        let tr = integrate_vdw_mode(&p, 0.5, &[1.0, 5.0], c(1.0), c(0.0), h).unwrap();
        for (s, t) in tr.iter().zip([1.0, 5.0]) {
            let k = vdw_mode_solution(&p, 0.5, t, c(1.0), c(0.0)).unwrap();
            assert!((s.u - k.u).norm() < 1e-6 * k.u.norm());
            assert!((s.z - k.z).norm() < 1e-6 * k.z.norm());
        }
        let m = ModelParams::mgt(2.0, 0.1).unwrap();
        let h = accurate_step(&m, 0.5);
        let tr = integrate_mgt_mode(&m, 0.5, &[3.0], c(1.0), c(0.0), c(0.0), h).unwrap();
        let k = mgt_mode_solution(&m, 0.5, 3.0, c(1.0), c(0.0), c(0.0)).unwrap();
        assert!((tr[0].u - k.u).norm() < 1e-6 * k.u.norm());
        assert!((tr[0].utt - k.utt).norm() < 1e-6 * k.utt.norm());
    }

    #[test]
    fn fourth_order_convergence() {
        let p = ModelParams::vdw(2.0).unwrap();
        let (r, t) = (1.5, 4.0);
        let exact = vdw_mode_solution(&p, r, t, c(1.0), c(0.3)).unwrap();
        let err = |h: f64| {
            let s = integrate_vdw_mode(&p, r, &[t], c(1.0), c(0.3), h).unwrap()[0];
            (s.u - exact.u).norm() + (s.ut - exact.ut).norm() + (s.z - exact.z).norm()
        };
        let h = default_step(&p, r);
        let (e1, e2, e4) = (err(h), err(h / 2.0), err(h / 4.0));
        for ratio in [e1 / e2, e2 / e4] {
            assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn memory_identity_along_trajectory() {
        let p = ModelParams::vdw(3.0).unwrap();
        let r = 0.9;
        let h = 1e-3;
        let times: Vec<f64> = (0..=400).map(|k| k as f64 * h).collect();
        let tr = integrate_vdw_mode(&p, r, &times, c(0.4), c(-1.0), h).unwrap();
        for k in 1..times.len() - 1 {
            let dz = (tr[k + 1].z - tr[k - 1].z) / (2.0 * h);
            let resid = dz - (tr[k].u - tr[k].z * p.gamma);
            assert!(resid.norm() < 1e-5, "k={k} {resid}");
        }
    }

    #[test]
    fn initial_state_returned_at_zero() {
        let m = ModelParams::mgt(2.0, 0.1).unwrap();
        let tr = integrate_mgt_mode(&m, 0.5, &[0.0], c(1.0), c(2.0), c(3.0), 0.01).unwrap();
        assert_eq!(tr[0].u, c(1.0));
        assert_eq!(tr[0].ut, c(2.0));
        assert_eq!(tr[0].utt, c(3.0));
        assert_eq!(tr[0].z, c(0.0));
    }

    #[test]
    fn bounded_zone_modes_decay() {
        let p = ModelParams::vdw(2.0).unwrap();
        let size = |s: &ModeState| s.u.norm() + s.ut.norm() + s.z.norm();
        for r in [0.1, 1.0, 10.0] {
            let h = default_step(&p, r);
            let tr = integrate_vdw_mode(&p, r, &[0.0, 2000.0], c(1.0), c(1.0), h).unwrap();
            assert!(size(&tr[1]) < 1e-4 * size(&tr[0]), "r={r}");
        }
    }
}
