//! Characteristic roots of the mode equations.
//!
//! VDW cubic: `λ³ + (r²+γ)λ² + (1+γ)r²λ + (γ-1)r² = 0`.
//! MGT quartic: `τμ⁴ + (1+τγ)μ³ + (r²+γ)μ² + (1+γ)r²μ + (γ-1)r² = 0`.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::params::ModelParams;
use crate::C64;

/// Relative separation below which two roots are reported as multiple.
pub const MULTIPLICITY_TOL: f64 = 1e-8;

/// Residual bound factor: `|p(λ)| < RESIDUAL_TOL · scale(λ)`.
pub const RESIDUAL_TOL: f64 = 1e-10;

const NEWTON_ITERS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Equation {
    Vdw,
    Mgt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Zone {
    Small,
    Bounded,
    Large,
}

/// Frequency zone boundaries `ε` and `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zones {
    pub eps: f64,
    pub n_cut: f64,
}

impl Default for Zones {
    fn default() -> Self {
        Self {
            eps: 0.1,
            n_cut: 10.0,
        }
    }
}

impl Zones {
    pub fn new(eps: f64, n_cut: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < n_cut && n_cut.is_finite()) {
            return Err(invalid("zones", format!("need 0 < eps < N, got eps={eps}, N={n_cut}")));
        }
        Ok(Self { eps, n_cut })
    }

    pub fn classify(&self, r: f64) -> Zone {
        if r < self.eps {
            Zone::Small
        } else if r > self.n_cut {
            Zone::Large
        } else {
            Zone::Bounded
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    pub r: f64,
    pub roots: Vec<C64>,
    pub residuals: Vec<f64>,
    pub multiplicity_flag: bool,
    /// Set for roots produced by truncated expansions.
    pub approximate: bool,
    /// Set by [`track_branches`] when the matching at this node was a tie.
    pub ambiguous: bool,
}

impl RootSet {
    pub fn spectral_abscissa(&self) -> f64 {
        self.roots.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest pairwise distance relative to the larger modulus of the pair.
    pub fn min_relative_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.roots.len() {
            for j in i + 1..self.roots.len() {
                let (a, b) = (self.roots[i], self.roots[j]);
                let d = (a - b).norm();
                let m = a.norm().max(b.norm());
                let rel = if m == 0.0 { 0.0 } else { d / m };
                best = best.min(rel);
            }
        }
        best
    }
}

/// Coefficients of the VDW cubic, highest degree first.
pub fn vdw_coefficients(params: &ModelParams, r: f64) -> [f64; 4] {
    let g = params.gamma;
    let r2 = r * r;
    [1.0, r2 + g, (1.0 + g) * r2, (g - 1.0) * r2]
}

/// Coefficients of the MGT quartic, highest degree first.
pub fn mgt_coefficients(params: &ModelParams, r: f64) -> Result<[f64; 5]> {
    let tau = params.tau()?;
    let g = params.gamma;
    let r2 = r * r;
    Ok([tau, 1.0 + tau * g, r2 + g, (1.0 + g) * r2, (g - 1.0) * r2])
}

pub fn eval_poly(coeffs: &[f64], z: C64) -> C64 {
    coeffs.iter().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

fn eval_poly_and_derivative(coeffs: &[f64], z: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &c in coeffs {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// `Σ |a_k| |λ|^k`, the natural size of the terms in `p(λ)`.
pub fn term_scale(coeffs: &[f64], z: C64) -> f64 {
    let m = z.norm();
    coeffs.iter().fold(0.0, |acc, &c| acc * m + c.abs())
}

/// Scale used in the residual bound.
pub fn residual_scale(coeffs: &[f64], z: C64) -> f64 {
    term_scale(coeffs, z).max(1.0)
}

fn check_coeffs(coeffs: &[f64]) -> Result<()> {
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(invalid("coefficients", "non-finite polynomial coefficient"));
    }
    if coeffs.first().copied().unwrap_or(0.0) == 0.0 {
        return Err(invalid("coefficients", "vanishing leading coefficient"));
    }
    Ok(())
}

/// All complex roots of a real polynomial (highest degree first), by
/// eigenvalues of a scaled companion matrix followed by Newton polishing.
pub fn poly_roots(coeffs: &[f64]) -> Result<Vec<C64>> {
    check_coeffs(coeffs)?;
    let deg = coeffs.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[0];
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    // Fujiwara-type bound; substituting λ = s·x keeps companion entries O(1).
    let mut s: f64 = 0.0;
    for (k, c) in monic.iter().enumerate().skip(1) {
        s = s.max(c.abs().powf(1.0 / k as f64));
    }
    if s == 0.0 {
        return Ok(vec![C64::new(0.0, 0.0); deg]);
    }
    let mut comp = DMatrix::<f64>::zeros(deg, deg);
    for k in 0..deg {
        comp[(0, k)] = -monic[k + 1] / s.powi(k as i32 + 1);
    }
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    let eig = comp.complex_eigenvalues();
    let raw: Vec<C64> = eig.iter().map(|z| C64::new(z.re * s, z.im * s)).collect();

    let mut roots = symmetrize(&raw);
    polish(coeffs, &mut roots);
    Ok(roots)
}

/// Pairs roots into exact conjugate pairs and snaps near-real roots onto the real axis.
fn symmetrize(raw: &[C64]) -> Vec<C64> {
    let scale = raw.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let snap = 64.0 * f64::EPSILON * scale;
    let mut reals = Vec::new();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for &z in raw {
        if z.im.abs() <= snap {
            reals.push(C64::new(z.re, 0.0));
        } else if z.im > 0.0 {
            upper.push(z);
        } else {
            lower.push(z);
        }
    }
    let mut out = reals;
    let mut used = vec![false; lower.len()];
    for z in upper {
        let best = lower
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .min_by(|a, b| {
                (a.1.conj() - z)
                    .norm()
                    .total_cmp(&(b.1.conj() - z).norm())
            })
            .map(|(i, _)| i);
        match best {
            Some(i) => {
                used[i] = true;
                let m = (z + lower[i].conj()) * 0.5;
                out.push(m);
                out.push(m.conj());
            }
            None => out.push(C64::new(z.re, 0.0)),
        }
    }
    for (i, z) in lower.into_iter().enumerate() {
        if !used[i] {
            out.push(C64::new(z.re, 0.0));
        }
    }
    out
}

fn newton(coeffs: &[f64], mut z: C64) -> C64 {
    let (mut p, _) = eval_poly_and_derivative(coeffs, z);
    for _ in 0..NEWTON_ITERS {
        let (_, dp) = eval_poly_and_derivative(coeffs, z);
        if dp.norm() == 0.0 || p.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        let cand = if z.im == 0.0 {
            C64::new(z.re - step.re, 0.0)
        } else {
            z - step
        };
        let (pc, _) = eval_poly_and_derivative(coeffs, cand);
        if pc.norm() >= p.norm() {
            break;
        }
        z = cand;
        p = pc;
        if step.norm() <= f64::EPSILON * z.norm() {
            break;
        }
    }
    z
}

fn polish(coeffs: &[f64], roots: &mut [C64]) {
    let rho = max_modulus(roots);
    let mut i = 0;
    while i < roots.len() {
        let z = roots[i];
        if z.im > 0.0 && i + 1 < roots.len() && roots[i + 1] == z.conj() {
            let p = newton(coeffs, z);
            let x = C64::new(p.re, 0.0);
            // A pair whose imaginary part is below the resolution of a double
            // root, and which is not improved by it, is a real double root.
            if p.im <= double_root_resolution(coeffs, x, rho)
                && eval_poly(coeffs, x).norm() <= eval_poly(coeffs, p).norm()
            {
                roots[i] = x;
                roots[i + 1] = x;
            } else {
                roots[i] = p;
                roots[i + 1] = p.conj();
            }
            i += 2;
        } else {
            roots[i] = newton(coeffs, z);
            i += 1;
        }
    }
}

/// Complex pairs first (upper member, then its conjugate), ordered by
/// descending real part; then real roots by descending value.
pub fn canonical_order(roots: &mut Vec<C64>) {
    let mut pairs: Vec<C64> = roots.iter().copied().filter(|z| z.im > 0.0).collect();
    let mut reals: Vec<C64> = roots.iter().copied().filter(|z| z.im == 0.0).collect();
    let lower: Vec<C64> = roots.iter().copied().filter(|z| z.im < 0.0).collect();
    pairs.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    reals.sort_by(|a, b| b.re.total_cmp(&a.re));
    let mut out = Vec::with_capacity(roots.len());
    for z in pairs {
        out.push(z);
        out.push(z.conj());
    }
    // Unpaired lower members cannot occur after symmetrize; keep them anyway.
    if out.len() / 2 < lower.len() {
        out.extend(lower.into_iter().skip(out.len() / 2));
    }
    out.extend(reals);
    *roots = out;
}

fn second_derivative_coeffs(coeffs: &[f64]) -> Vec<f64> {
    let deg = coeffs.len() - 1;
    coeffs
        .iter()
        .take(deg.saturating_sub(1))
        .enumerate()
        .map(|(i, c)| {
            let k = (deg - i) as f64;
            c * k * (k - 1.0)
        })
        .collect()
}

/// `4·√(ε_mach · S(ρ) / |p″(m)/2|)` with `ρ` the largest root modulus:
/// separations below this are not numerically distinguishable from a
/// double root at `m`, given the backward error of the companion solve.
fn double_root_resolution(coeffs: &[f64], m: C64, rho: f64) -> f64 {
    let curv = eval_poly(&second_derivative_coeffs(coeffs), m).norm() * 0.5;
    if curv > 0.0 {
        4.0 * (f64::EPSILON * term_scale(coeffs, C64::new(rho, 0.0)) / curv).sqrt()
    } else {
        0.0
    }
}

fn max_modulus(roots: &[C64]) -> f64 {
    roots.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Two roots count as multiple when their separation is within the
/// relative tolerance or within the numerical resolution of a double root,
/// `√(ε_mach · S(m) / |p″(m)/2|)` at the pair midpoint `m`.
fn multiplicity(coeffs: &[f64], roots: &[C64]) -> bool {
    let rho = max_modulus(roots);
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            let (a, b) = (roots[i], roots[j]);
            let sep = (a - b).norm();
            let m = (a + b) * 0.5;
            let tol = (MULTIPLICITY_TOL * a.norm().max(b.norm()))
                .max(double_root_resolution(coeffs, m, rho));
            if sep <= tol {
                return true;
            }
        }
    }
    false
}

fn build_root_set(coeffs: &[f64], r: f64) -> Result<RootSet> {
    let mut roots = poly_roots(coeffs)?;
    canonical_order(&mut roots);
    let residuals = roots.iter().map(|&z| eval_poly(coeffs, z).norm()).collect();
    let multiplicity_flag = multiplicity(coeffs, &roots);
    Ok(RootSet {
        r,
        roots,
        residuals,
        multiplicity_flag,
        approximate: false,
        ambiguous: false,
    })
}

fn check_r(r: f64) -> Result<()> {
    if !r.is_finite() || r < 0.0 {
        return Err(invalid("r", format!("radial frequency must be finite and >= 0, got {r}")));
    }
    Ok(())
}

pub fn cubic_char_roots(params: &ModelParams, r: f64) -> Result<RootSet> {
    check_r(r)?;
    build_root_set(&vdw_coefficients(params, r), r)
}

pub fn quartic_char_roots(params: &ModelParams, r: f64) -> Result<RootSet> {
    check_r(r)?;
    build_root_set(&mgt_coefficients(params, r)?, r)
}

pub fn char_roots(params: &ModelParams, r: f64, eq: Equation) -> Result<RootSet> {
    match eq {
        Equation::Vdw => cubic_char_roots(params, r),
        Equation::Mgt => quartic_char_roots(params, r),
    }
}

pub fn coefficients(params: &ModelParams, r: f64, eq: Equation) -> Result<Vec<f64>> {
    Ok(match eq {
        Equation::Vdw => vdw_coefficients(params, r).to_vec(),
        Equation::Mgt => mgt_coefficients(params, r)?.to_vec(),
    })
}

/// Discriminant of the VDW cubic from the general cubic formula
/// `18abcd − 4b³d + b²c² − 4ac³ − 27a²d²`.
pub fn cubic_discriminant(params: &ModelParams, r: f64) -> Result<f64> {
    check_r(r)?;
    let [a, b, c, d] = vdw_coefficients(params, r);
    Ok(18.0 * a * b * c * d - 4.0 * b.powi(3) * d + b * b * c * c
        - 4.0 * a * c.powi(3)
        - 27.0 * a * a * d * d)
}

/// The same discriminant expanded as a polynomial in `r²`.
pub fn expanded_cubic_discriminant(params: &ModelParams, r: f64) -> Result<f64> {
    check_r(r)?;
    let g = params.gamma;
    let x = r * r;
    let c3 = g * g - 2.0 * g + 5.0;
    let c2 = -2.0 * (g.powi(3) + g * g - g + 11.0);
    let c1 = g.powi(4) + 8.0 * g.powi(3) - 14.0 * g * g + 36.0 * g - 27.0;
    let c0 = -4.0 * g.powi(3) * (g - 1.0);
    Ok(x * (((c3 * x + c2) * x + c1) * x + c0))
}

/// Roots from the truncated small- or large-frequency expansions.
pub fn asymptotic_roots(
    params: &ModelParams,
    r: f64,
    zone: Zone,
    eq: Equation,
    zones: &Zones,
) -> Result<RootSet> {
    check_r(r)?;
    let g = params.gamma;
    let gt = params.gamma_tilde();
    let r2 = r * r;
    let roots = match zone {
        Zone::Small => {
            if r >= zones.eps {
                return Err(Error::Domain(format!(
                    "small-zone expansion needs r < {}, got {r}",
                    zones.eps
                )));
            }
            match eq {
                Equation::Vdw => {
                    let a = params.diffusion_rate();
                    vec![
                        C64::new(-a * r2, gt * r),
                        C64::new(-a * r2, -gt * r),
                        C64::new(-g + r2 / (g * g), 0.0),
                    ]
                }
                Equation::Mgt => {
                    let tau = params.tau()?;
                    let b = params.mgt_diffusion_rate()?;
                    vec![
                        C64::new(-b * r2, gt * r),
                        C64::new(-b * r2, -gt * r),
                        C64::new(-1.0 / tau, 0.0),
                        C64::new(-g, 0.0),
                    ]
                }
            }
        }
        Zone::Large => {
            if r <= zones.n_cut {
                return Err(Error::Domain(format!(
                    "large-zone expansion needs r > {}, got {r}",
                    zones.n_cut
                )));
            }
            let disc = ((1.0 + g) * (1.0 + g) - 4.0 * (g - 1.0)).sqrt();
            let l1 = C64::new(-(1.0 + g + disc) / 2.0, 0.0);
            let l2 = C64::new(-(1.0 + g - disc) / 2.0, 0.0);
            match eq {
                Equation::Vdw => vec![l1, l2, C64::new(1.0 - r2, 0.0)],
                Equation::Mgt => {
                    let tau = params.tau()?;
                    let re = -(1.0 - tau) / (2.0 * tau);
                    let im = r / tau.sqrt();
                    vec![l1, l2, C64::new(re, im), C64::new(re, -im)]
                }
            }
        }
        Zone::Bounded => {
            return Err(Error::Domain(
                "no asymptotic expansion on the bounded zone".into(),
            ))
        }
    };
    let coeffs = coefficients(params, r, eq)?;
    let mut roots = roots;
    canonical_order(&mut roots);
    let residuals = roots.iter().map(|&z| eval_poly(&coeffs, z).norm()).collect();
    let multiplicity_flag = multiplicity(&coeffs, &roots);
    Ok(RootSet {
        r,
        roots,
        residuals,
        multiplicity_flag,
        approximate: true,
        ambiguous: false,
    })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Optimal matching of `b` onto `a`: `result[i]` is the element of `b`
/// assigned to `a[i]`, minimising the total squared distance.
pub fn match_roots(a: &[C64], b: &[C64]) -> Vec<C64> {
    assert_eq!(a.len(), b.len());
    let mut best: Option<(f64, Vec<usize>)> = None;
    for p in permutations(a.len()) {
        let cost: f64 = p.iter().enumerate().map(|(i, &j)| (b[j] - a[i]).norm_sqr()).sum();
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, p));
        }
    }
    best.map(|(_, p)| p.iter().map(|&j| b[j]).collect())
        .unwrap_or_default()
}

fn lex_cmp(a: &[C64], b: &[C64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != std::cmp::Ordering::Equal {
            return o;
        }
    }
    std::cmp::Ordering::Equal
}

/// Reorders each node's roots so branch `i` continues branch `i` of the
/// previous node. Ties between distinct assignments are flagged and broken
/// lexicographically (real part, then imaginary part).
pub fn track_branches(sets: &[RootSet]) -> Vec<RootSet> {
    let mut out: Vec<RootSet> = Vec::with_capacity(sets.len());
    let Some(first) = sets.first() else {
        return out;
    };
    out.push(first.clone());
    let perms = permutations(first.roots.len());
    for set in &sets[1..] {
        let prev = &out.last().expect("non-empty").roots;
        let scale = prev
            .iter()
            .chain(set.roots.iter())
            .map(|z| z.norm_sqr())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let tie_tol = 1e-12 * scale;
        let mut scored: Vec<(f64, Vec<C64>)> = perms
            .iter()
            .map(|p| {
                let assigned: Vec<C64> = p.iter().map(|&j| set.roots[j]).collect();
                let cost = assigned
                    .iter()
                    .zip(prev)
                    .map(|(x, y)| (x - y).norm_sqr())
                    .sum();
                (cost, assigned)
            })
            .collect();
        let min_cost = scored.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
        scored.retain(|s| s.0 <= min_cost + tie_tol);
        scored.sort_by(|a, b| lex_cmp(&a.1, &b.1));
        let chosen = scored[0].1.clone();
        let ambiguous = scored.iter().skip(1).any(|s| {
            s.1.iter()
                .zip(&chosen)
                .any(|(x, y)| (x - y).norm_sqr() > tie_tol)
        });
        let coeff_res: Vec<f64> = chosen
            .iter()
            .map(|z| {
                let k = set.roots.iter().position(|w| w == z).unwrap_or(0);
                set.residuals.get(k).copied().unwrap_or(0.0)
            })
            .collect();
        out.push(RootSet {
            r: set.r,
            roots: chosen,
            residuals: coeff_res,
            multiplicity_flag: set.multiplicity_flag,
            approximate: set.approximate,
            ambiguous: set.ambiguous || ambiguous,
        });
    }
    out
}

/// Sorted radial nodes with positive quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub eps_cut: f64,
    pub n_cut: f64,
}

impl FrequencyGrid {
    /// `count` log-spaced nodes on `[r_min, r_max]` with trapezoid weights.
    pub fn log_spaced(r_min: f64, r_max: f64, count: usize, zones: Zones) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) || count < 2 {
            return Err(invalid(
                "grid",
                format!("need 0 < r_min < r_max and count >= 2, got [{r_min}, {r_max}] x {count}"),
            ));
        }
        let (l0, l1) = (r_min.ln(), r_max.ln());
        let nodes: Vec<f64> = (0..count)
            .map(|i| {
                if i + 1 == count {
                    r_max
                } else if i == 0 {
                    r_min
                } else {
                    (l0 + (l1 - l0) * i as f64 / (count - 1) as f64).exp()
                }
            })
            .collect();
        Self::from_nodes(nodes, zones)
    }

    pub fn from_nodes(nodes: Vec<f64>, zones: Zones) -> Result<Self> {
        if nodes.len() < 2 || nodes[0] < 0.0 || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("grid", "nodes must be >= 0 and strictly increasing"));
        }
        let m = nodes.len();
        let weights = (0..m)
            .map(|i| {
                let left = if i > 0 { nodes[i] - nodes[i - 1] } else { 0.0 };
                let right = if i + 1 < m { nodes[i + 1] - nodes[i] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect();
        Ok(Self {
            nodes,
            weights,
            eps_cut: zones.eps,
            n_cut: zones.n_cut,
        })
    }

    pub fn zones(&self) -> Zones {
        Zones {
            eps: self.eps_cut,
            n_cut: self.n_cut,
        }
    }
}
