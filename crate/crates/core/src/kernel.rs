//! Closed-form mode solutions as finite exponential sums over the
//! characteristic roots.

use nalgebra::{Matrix4, Vector4};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::spectrum::{cubic_char_roots, quartic_char_roots, RootSet, Zones};
use crate::C64;

/// Largest equilibrated Vandermonde condition number accepted for the MGT solve.
pub const MAX_VANDERMONDE_COND: f64 = 1e12;

/// Solution state of one Fourier mode. `z` is the memory variable `g∗û`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeState {
    pub u: C64,
    pub ut: C64,
    pub utt: C64,
    pub z: C64,
}

impl ModeState {
    pub fn initial(u0: C64, u1: C64, u2: C64) -> Self {
        Self {
            u: u0,
            ut: u1,
            utt: u2,
            z: C64::new(0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPair {
    pub k0: C64,
    pub k1: C64,
    pub dk0: C64,
    pub dk1: C64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePair {
    pub j0: C64,
    pub j1: C64,
}

/// `u(t) = Σ c_j e^{λ_j t} + p0 + p1·t` for one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSeries {
    pub gamma: f64,
    pub terms: Vec<(C64, C64)>,
    pub linear: (C64, C64),
}

/// `(e^x − 1)/x`, accurate near 0.
fn phi1(x: C64) -> C64 {
    if x.norm() < 0.5 {
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for k in 2..30 {
            term = term * x / k as f64;
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        (x.exp() - 1.0) / x
    }
}

impl ModeSeries {
    pub fn state(&self, t: f64) -> ModeState {
        let g = self.gamma;
        let decay = (-g * t).exp();
        let mut s = ModeState::initial(C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for &(c, lam) in &self.terms {
            let e = (lam * t).exp();
            s.u += c * e;
            s.ut += c * lam * e;
            s.utt += c * lam * lam * e;
            // ∫₀ᵗ e^{-γ(t-s)} e^{λs} ds = e^{-γt}·t·φ1((λ+γ)t)
            s.z += c * decay * t * phi1((lam + g) * t);
        }
        let (p0, p1) = self.linear;
        s.u += p0 + p1 * t;
        s.ut += p1;
        let one_minus = -(-g * t).exp_m1();
        s.z += p0 * one_minus / g + p1 * (t / g - one_minus / (g * g));
        s
    }
}

/// Lagrange coefficients of the VDW kernels for root `j`.
fn vdw_kernel_coeffs(roots: &[C64], r2: f64, j: usize) -> (C64, C64) {
    let others: Vec<C64> = (0..3).filter(|&k| k != j).map(|k| roots[k]).collect();
    let den = (roots[j] - others[0]) * (roots[j] - others[1]);
    let a0 = (others[0] * others[1] - r2) / den;
    let a1 = (-(others[0] + others[1]) - r2) / den;
    (a0, a1)
}

pub fn vdw_series(params: &ModelParams, r: f64, u0: C64, u1: C64) -> Result<ModeSeries> {
    if r == 0.0 {
        return Ok(ModeSeries {
            gamma: params.gamma,
            terms: Vec::new(),
            linear: (u0, u1),
        });
    }
    vdw_series_from_roots(params, &cubic_char_roots(params, r)?, u0, u1)
}

/// As [`vdw_series`] with the cubic roots at `roots.r > 0` supplied by the caller.
pub fn vdw_series_from_roots(params: &ModelParams, roots: &RootSet, u0: C64, u1: C64) -> Result<ModeSeries> {
    if roots.multiplicity_flag {
        return Err(Error::NearDegenerate { r: roots.r });
    }
    let r2 = roots.r * roots.r;
    let terms = (0..3)
        .map(|j| {
            let (a0, a1) = vdw_kernel_coeffs(&roots.roots, r2, j);
            (a0 * u0 + a1 * u1, roots.roots[j])
        })
        .collect();
    Ok(ModeSeries {
        gamma: params.gamma,
        terms,
        linear: (C64::new(0.0, 0.0), C64::new(0.0, 0.0)),
    })
}

pub fn vdw_kernels(params: &ModelParams, r: f64, t: f64) -> Result<KernelPair> {
    check_t(t)?;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let s0 = vdw_series(params, r, one, zero)?.state(t);
    let s1 = vdw_series(params, r, zero, one)?.state(t);
    Ok(KernelPair {
        k0: s0.u,
        k1: s1.u,
        dk0: s0.ut,
        dk1: s1.ut,
    })
}

pub fn vdw_mode_solution(params: &ModelParams, r: f64, t: f64, u0: C64, u1: C64) -> Result<ModeState> {
    check_t(t)?;
    let mut s = vdw_series(params, r, u0, u1)?.state(t);
    s.utt = vdw_utt(r, &s);
    Ok(s)
}

/// `û_tt` from the equation, avoiding the cancellation in `Σ c λ² e^{λt}`.
pub fn vdw_utt(r: f64, s: &ModeState) -> C64 {
    (s.u + s.ut - s.z) * (-r * r)
}

/// Third derivative at t = 0 implied by the MGT equation (memory term vanishes).
pub fn mgt_v3(params: &ModelParams, r: f64, v0: C64, v1: C64, v2: C64) -> Result<C64> {
    let tau = params.tau()?;
    Ok(-(v2 + (v0 + v1) * (r * r)) / tau)
}

/// Solves `Σ_j c_j μ_j^i = d_i` (i = 0..3) with row and column equilibration
/// and partially pivoted LU. Returns the coefficients and the 1-norm
/// condition number of the equilibrated matrix.
pub fn solve_vandermonde4(mu: &[C64; 4], d: &[C64; 4]) -> Result<([C64; 4], f64)> {
    let mut v = Matrix4::<C64>::zeros();
    for j in 0..4 {
        let mut p = C64::new(1.0, 0.0);
        for i in 0..4 {
            v[(i, j)] = p;
            p *= mu[j];
        }
    }
    let mut rhs = Vector4::from_column_slice(d);
    for i in 0..4 {
        let m = (0..4).map(|j| v[(i, j)].norm()).fold(0.0, f64::max);
        if m > 0.0 {
            for j in 0..4 {
                v[(i, j)] /= m;
            }
            rhs[i] /= m;
        }
    }
    let mut col_scale = [1.0; 4];
    for (j, cs) in col_scale.iter_mut().enumerate() {
        let m = (0..4).map(|i| v[(i, j)].norm()).fold(0.0, f64::max);
        if m > 0.0 {
            *cs = m;
            for i in 0..4 {
                v[(i, j)] /= m;
            }
        }
    }
    let lu = v.lu();
    let inv = lu
        .try_inverse()
        .ok_or(Error::Domain("singular Vandermonde system".into()))?;
    let norm1 = |m: &Matrix4<C64>| {
        (0..4)
            .map(|j| (0..4).map(|i| m[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let cond = norm1(&v) * norm1(&inv);
    let sol = v.lu().solve(&rhs).ok_or(Error::Domain("singular Vandermonde system".into()))?;
    let mut c = [C64::new(0.0, 0.0); 4];
    for j in 0..4 {
        c[j] = sol[j] / col_scale[j];
    }
    Ok((c, cond))
}

pub fn mgt_series(params: &ModelParams, r: f64, v0: C64, v1: C64, v2: C64) -> Result<ModeSeries> {
    let tau = params.tau()?;
    if r == 0.0 {
        // v = A + B t + C e^{-t/τ}
        let c = v2 * (tau * tau);
        return Ok(ModeSeries {
            gamma: params.gamma,
            terms: vec![(c, C64::new(-1.0 / tau, 0.0))],
            linear: (v0 - c, v1 + v2 * tau),
        });
    }
    mgt_series_from_roots(params, &quartic_char_roots(params, r)?, v0, v1, v2)
}

/// As [`mgt_series`] with the quartic roots at `roots.r > 0` supplied by the caller.
pub fn mgt_series_from_roots(
    params: &ModelParams,
    roots: &RootSet,
    v0: C64,
    v1: C64,
    v2: C64,
) -> Result<ModeSeries> {
    let r = roots.r;
    if roots.multiplicity_flag {
        return Err(Error::NearDegenerate { r });
    }
    let v3 = mgt_v3(params, r, v0, v1, v2)?;
    let mu = [roots.roots[0], roots.roots[1], roots.roots[2], roots.roots[3]];
    let (c, cond) = solve_vandermonde4(&mu, &[v0, v1, v2, v3])?;
    if cond > MAX_VANDERMONDE_COND {
        return Err(Error::NearDegenerate { r });
    }
    Ok(ModeSeries {
        gamma: params.gamma,
        terms: c.iter().copied().zip(mu).collect(),
        linear: (C64::new(0.0, 0.0), C64::new(0.0, 0.0)),
    })
}

pub fn mgt_mode_solution(
    params: &ModelParams,
    r: f64,
    t: f64,
    v0: C64,
    v1: C64,
    v2: C64,
) -> Result<ModeState> {
    check_t(t)?;
    Ok(mgt_series(params, r, v0, v1, v2)?.state(t))
}

fn check_t(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(crate::error::invalid("t", format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// Leading diffusion-wave profiles on the small zone, real cos/sin form.
pub fn leading_profiles(params: &ModelParams, r: f64, t: f64, zones: &Zones) -> Result<ProfilePair> {
    check_t(t)?;
    if !(r >= 0.0 && r < zones.eps) {
        return Err(Error::Domain(format!(
            "profiles are defined for r < {}, got {r}",
            zones.eps
        )));
    }
    let g = params.gamma;
    let gt = params.gamma_tilde();
    let a = params.diffusion_rate();
    let r2 = r * r;
    let env = (-a * r2 * t).exp();
    let (sn, cs) = (gt * r * t).sin_cos();
    // sin(γ̃rt)/r with its r → 0 limit
    let sinc = if r == 0.0 { gt * t } else { sn / r };

    let den0 = 2.0 * g.powi(3) + 2.0 * (g - 1.0) * r2;
    let j0 = ((2.0 * g.powi(3) - (g - 1.0).powi(2) * r2) * cs
        + g * (g + 1.0) * (g * (g - 1.0)).sqrt() * r * sn)
        / den0;

    let j1 = (g * g + 1.0) * r2 / (2.0 * g.powi(4) + 2.0 * g * (g - 1.0) * r2) * cs
        + (2.0 * g.powi(3) - (g * g - 2.0 * g + 3.0) * r2)
            / (2.0 * g.powi(3) * gt + 2.0 * (g - 1.0) * gt * r2)
            * sinc;

    Ok(ProfilePair {
        j0: C64::new(env * j0, 0.0),
        j1: C64::new(env * j1, 0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2() -> ModelParams {
        ModelParams::vdw(2.0).unwrap()
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    /// Profiles from the two complex-conjugate branch formulas.
    fn complex_pair_profiles(params: &ModelParams, r: f64, t: f64) -> ProfilePair {
        let g = params.gamma;
        let gt = params.gamma_tilde();
        let a = params.diffusion_rate();
        let q = (g * (g - 1.0)).sqrt();
        let i = C64::new(0.0, 1.0);
        let mut j0 = C64::new(0.0, 0.0);
        let mut j1 = C64::new(0.0, 0.0);
        for sgn in [1.0, -1.0] {
            let e = (i * (sgn * gt * r * t) - a * r * r * t).exp();
            let den0 = i * (2.0 * sgn * q) - 2.0 * (g - 1.0) / g * r;
            j0 += (i * (sgn * q) + (g - 1.0).powi(2) / (2.0 * g) * r) / den0 * e;
            let den1 = i * (2.0 * sgn * q * r) - 2.0 * (g - 1.0) / g * r * r;
            j1 += (c(g) + i * (sgn * gt * r) - a * r * r) / den1 * e;
        }
        ProfilePair { j0, j1 }
    }

    #[test]
    fn kernels_interpolate_initial_data() {
        for r in [0.0, 0.01, 0.5, 3.0, 40.0] {
            let k = vdw_kernels(&p2(), r, 0.0).unwrap();
            assert!((k.k0 - 1.0).norm() < 1e-12, "r={r}");
            assert!(k.k1.norm() < 1e-12);
            assert!(k.dk0.norm() < 1e-12);
            assert!((k.dk1 - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn second_derivative_at_zero_matches_equation() {
        let p = p2();
        let r = 0.7;
        let (u0, u1) = (c(0.3), c(-1.2));
        let s = vdw_series(&p, r, u0, u1).unwrap();
        let utt: C64 = s.terms.iter().map(|(c, l)| c * l * l).sum();
        assert!((utt - (-(r * r) * (u0 + u1))).norm() < 1e-12);
    }

    #[test]
    fn zero_frequency_is_linear_motion() {
        let s = vdw_mode_solution(&p2(), 0.0, 2.0, c(1.0), c(1.0)).unwrap();
        assert_eq!(s.u, c(3.0));
        assert_eq!(s.ut, c(1.0));
    }

    #[test]
    fn memory_variable_closed_form() {
        // z = ∫₀ᵗ e^{-γ(t-s)} û(s) ds by composite Simpson on a fine grid
        let p = p2();
        let (r, t) = (0.8, 3.0);
        let m = 4000;
        let h = t / m as f64;
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..=m {
            let s = k as f64 * h;
            let w = if k == 0 || k == m { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            let u = vdw_mode_solution(&p, r, s, c(1.0), c(0.5)).unwrap().u;
            acc += u * (w * (-p.gamma * (t - s)).exp());
        }
        let z = vdw_mode_solution(&p, r, t, c(1.0), c(0.5)).unwrap().z;
        assert!((acc * (h / 3.0) - z).norm() < 1e-10);
    }

    #[test]
    fn real_data_gives_real_solution() {
        for r in [0.003, 0.4, 2.0, 15.0] {
            let s = vdw_mode_solution(&p2(), r, 7.3, c(0.9), c(-0.4)).unwrap();
            assert!(s.u.im.abs() < 1e-12 * s.u.norm().max(1.0));
            assert!(s.z.im.abs() < 1e-12 * s.z.norm().max(1.0));
        }
    }

    #[test]
    fn vandermonde_agrees_with_lagrange() {
        let m = ModelParams::mgt(2.0, 0.1).unwrap();
        let r = 0.5;
        let rs = quartic_char_roots(&m, r).unwrap();
        let mu = [rs.roots[0], rs.roots[1], rs.roots[2], rs.roots[3]];
        let d = [c(1.0), c(-0.5), c(0.25), c(2.0)];
        let (coef, cond) = solve_vandermonde4(&mu, &d).unwrap();
        assert!(cond < 1e6);
        for j in 0..4 {
            // Lagrange: c_j = Σ_i d_i · [x^i] Π_{k≠j}(x − μ_k) / Π_{k≠j}(μ_j − μ_k)
            let others: Vec<C64> = (0..4).filter(|&k| k != j).map(|k| mu[k]).collect();
            let e1 = others[0] + others[1] + others[2];
            let e2 = others[0] * others[1] + others[0] * others[2] + others[1] * others[2];
            let e3 = others[0] * others[1] * others[2];
            let num = d[3] - e1 * d[2] + e2 * d[1] - e3 * d[0];
            let den: C64 = others.iter().map(|o| mu[j] - o).product();
            assert!((coef[j] - num / den).norm() < 1e-12 * (num / den).norm().max(1.0));
        }
    }

    #[test]
    fn mgt_interpolates_initial_data() {
        let m = ModelParams::mgt(2.0, 0.1).unwrap();
        for r in [0.0, 0.05, 0.5, 4.0, 30.0] {
            let (v0, v1, v2) = (c(1.0), c(-0.3), c(0.7));
            let s = mgt_mode_solution(&m, r, 0.0, v0, v1, v2).unwrap();
            assert!((s.u - v0).norm() < 1e-12, "r={r}");
            assert!((s.ut - v1).norm() < 1e-12, "r={r}");
            assert!((s.utt - v2).norm() < 1e-11, "r={r} {:?}", s.utt);
            assert!(s.z.norm() < 1e-15);
        }
    }

    #[test]
    fn mgt_zero_frequency_closed_form() {
        let m = ModelParams::mgt(2.0, 0.2).unwrap();
        let s = mgt_mode_solution(&m, 0.0, 1.5, c(1.0), c(2.0), c(3.0)).unwrap();
        let tau: f64 = 0.2;
        let (cc, b, a) = (tau * tau * 3.0, 2.0 + tau * 3.0, 1.0 - tau * tau * 3.0);
        let expected = a + b * 1.5 + cc * (-1.5 / tau).exp();
        assert!((s.u - expected).norm() < 1e-13);
    }

    #[test]
    fn profile_forms_agree() {
        let p = p2();
        let z = Zones::default();
        for (r, t) in [(0.05, 10.0), (0.01, 300.0), (0.09, 1.0), (0.001, 5e4)] {
            let closed = leading_profiles(&p, r, t, &z).unwrap();
            let pair = complex_pair_profiles(&p, r, t);
            assert!((closed.j0 - pair.j0).norm() < 1e-12, "j0 r={r} t={t}");
            assert!((closed.j1 - pair.j1).norm() < 1e-12 * closed.j1.norm().max(1.0), "j1 r={r} t={t}");
        }
        let pp = ModelParams::vdw(6.0).unwrap();
        let closed = leading_profiles(&pp, 0.07, 40.0, &z).unwrap();
        let pair = complex_pair_profiles(&pp, 0.07, 40.0);
        assert!((closed.j0 - pair.j0).norm() < 1e-12);
        assert!((closed.j1 - pair.j1).norm() < 1e-12 * closed.j1.norm().max(1.0));
    }

    #[test]
    fn profile_limits() {
        let z = Zones::default();
        let pr = leading_profiles(&p2(), 0.0, 0.0, &z).unwrap();
        assert_eq!(pr.j0, c(1.0));
        assert_eq!(pr.j1, c(0.0));
        let pr = leading_profiles(&p2(), 0.0, 4.0, &z).unwrap();
        assert!((pr.j1 - 4.0).norm() < 1e-14);
        assert!(matches!(leading_profiles(&p2(), 0.2, 1.0, &z), Err(Error::Domain(_))));
    }

    #[test]
    fn profiles_track_kernels_on_small_zone() {
        let p = p2();
        let z = Zones::default();
        let (r, t) = (0.01, 100.0);
        let k = vdw_kernels(&p, r, t).unwrap();
        let j = leading_profiles(&p, r, t, &z).unwrap();
        assert!((k.k0 - j.j0).norm() < 1e-3);
        assert!((k.k1 - j.j1).norm() < 1e-3 * k.k1.norm().max(1.0));
    }
}
