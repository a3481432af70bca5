//! Radial Plancherel norms by adaptive Gauss-Kronrod quadrature, and the
//! rate functions `G`, `H`, `κ` that the norms are compared against.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::params::ModelParams;
use crate::spectrum::Zones;
use crate::C64;

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Wide panels are accepted untouched when their absolute integral is below
/// this fraction of the tolerance budget.
const NEGLIGIBLE_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
    /// Upper bound on panel width for oscillatory integrands.
    pub max_width: Option<f64>,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 0.0,
            max_panels: 200_000,
            max_width: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

#[derive(Debug, Clone)]
struct Panel {
    a: f64,
    b: f64,
    /// Per-component integrals.
    values: Vec<f64>,
    /// Error and absolute integral of the summed components.
    error: f64,
    abs: f64,
}

fn gk21<F: Fn(f64) -> Result<Vec<f64>>>(f: &F, a: f64, b: f64) -> Result<Panel> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let k = fc.len();
    let mut resk: Vec<f64> = fc.iter().map(|v| v * WGK[10]).collect();
    let sum = |v: &[f64]| v.iter().sum::<f64>();
    let fcs = sum(&fc);
    let mut sk = fcs * WGK[10];
    let mut sg = 0.0;
    let mut resabs = fcs.abs() * WGK[10];
    let mut fv = [(0.0, 0.0); 10];
    for j in 0..10 {
        let dx = h * XGK[j];
        let (f1, f2) = (f(c - dx)?, f(c + dx)?);
        if f1.len() != k || f2.len() != k {
            return Err(Error::Domain("integrand changed its number of components".into()));
        }
        for i in 0..k {
            resk[i] += WGK[j] * (f1[i] + f2[i]);
        }
        let (s1, s2) = (sum(&f1), sum(&f2));
        fv[j] = (s1, s2);
        sk += WGK[j] * (s1 + s2);
        resabs += WGK[j] * (s1.abs() + s2.abs());
        if j % 2 == 1 {
            sg += WG[j / 2] * (s1 + s2);
        }
    }
    let mean = sk * 0.5;
    let mut resasc = WGK[10] * (fcs - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv[j].0 - mean).abs() + (fv[j].1 - mean).abs());
    }
    let (resabs, resasc) = (resabs * h.abs(), resasc * h.abs());
    let mut error = ((sk - sg) * h).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    let values: Vec<f64> = resk.iter().map(|v| v * h).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite integrand on [{a}, {b}]")));
    }
    Ok(Panel {
        a,
        b,
        values,
        error,
        abs: resabs,
    })
}

/// Vector-valued version of [`integrate`]: all components share one panel
/// set, refined on the error of their sum.
pub fn integrate_vec<F: Fn(f64) -> Result<Vec<f64>>>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: &QuadOptions,
) -> Result<(Vec<f64>, QuadResult)> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(invalid("interval", format!("need finite a <= b, got [{a}, {b}]")));
    }
    if a == b {
        let k = f(a)?.len();
        return Ok((
            vec![0.0; k],
            QuadResult {
                value: 0.0,
                error: 0.0,
                panels: 0,
            },
        ));
    }
    let mut pts: Vec<f64> = std::iter::once(a)
        .chain(breaks.iter().copied().filter(|x| *x > a && *x < b))
        .chain(std::iter::once(b))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut panels = Vec::with_capacity(pts.len() * 4);
    for w in pts.windows(2) {
        panels.push(gk21(&f, w[0], w[1])?);
    }
    let cap = opts.max_width.unwrap_or(f64::INFINITY);
    let total_of = |p: &Panel| p.values.iter().sum::<f64>();

    loop {
        let total: f64 = panels.iter().map(total_of).sum();
        let total_abs: f64 = panels.iter().map(|p| p.abs).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        let budget = (opts.rel_tol * total.abs()).max(opts.abs_tol);
        let negligible = NEGLIGIBLE_FRACTION * (opts.rel_tol * total_abs).max(opts.abs_tol);
        // Split every non-negligible over-wide panel, otherwise the worst panel.
        let wide: Vec<usize> = (0..panels.len())
            .filter(|&i| panels[i].b - panels[i].a > cap && panels[i].abs > negligible)
            .collect();
        let to_split = if !wide.is_empty() {
            wide
        } else if err > budget {
            let worst = (0..panels.len())
                .max_by(|&i, &j| panels[i].error.total_cmp(&panels[j].error))
                .expect("non-empty");
            vec![worst]
        } else {
            panels.sort_by(|p, q| p.a.total_cmp(&q.a));
            let k = panels[0].values.len();
            let mut values = vec![0.0; k];
            for p in &panels {
                for (acc, v) in values.iter_mut().zip(&p.values) {
                    *acc += v;
                }
            }
            let value = panels.iter().map(total_of).sum();
            let error = panels.iter().map(|p| p.error).sum();
            return Ok((
                values,
                QuadResult {
                    value,
                    error,
                    panels: panels.len(),
                },
            ));
        };
        if panels.len() + to_split.len() > opts.max_panels {
            return Err(Error::Refinement(format!(
                "quadrature exceeded {} panels (error {err:e}, budget {budget:e})",
                opts.max_panels
            )));
        }
        let mut next = Vec::with_capacity(panels.len() + to_split.len());
        let mut k = 0;
        for (i, p) in panels.into_iter().enumerate() {
            if k < to_split.len() && to_split[k] == i {
                k += 1;
                let m = 0.5 * (p.a + p.b);
                if m <= p.a || m >= p.b {
                    return Err(Error::Refinement(format!(
                        "panel [{}, {}] cannot be split further",
                        p.a, p.b
                    )));
                }
                next.push(gk21(&f, p.a, m)?);
                next.push(gk21(&f, m, p.b)?);
            } else {
                next.push(p);
            }
        }
        panels = next;
    }
}

/// Globally adaptive Gauss-Kronrod integration of `f` over `[a, b]`,
/// starting from the given interior breakpoints. Panels wider than
/// `opts.max_width` are split unless their contribution is negligible.
/// Panel sums are taken left to right.
pub fn integrate<F: Fn(f64) -> Result<f64>>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: &QuadOptions,
) -> Result<QuadResult> {
    Ok(integrate_vec(|x| Ok(vec![f(x)?]), a, b, breaks, opts)?.1)
}

/// Surface area of the unit sphere in `R^n`, `2π^{n/2}/Γ(n/2)`.
pub fn sphere_area(n: u32) -> f64 {
    // Γ(n/2) by recursion from Γ(1/2) = √π and Γ(1) = 1
    let mut gamma = if n.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut x = if n.is_multiple_of(2) { 1.0 } else { 0.5 };
    while x < n as f64 / 2.0 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * PI.powf(n as f64 / 2.0) / gamma
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ZoneFilter {
    All,
    Small,
    Bounded,
    Large,
}

impl ZoneFilter {
    /// Radial interval selected by the filter, clipped to `[0, r_max]`.
    pub fn interval(&self, zones: &Zones, r_max: f64) -> (f64, f64) {
        let (lo, hi) = match self {
            ZoneFilter::All => (0.0, r_max),
            ZoneFilter::Small => (0.0, zones.eps),
            ZoneFilter::Bounded => (zones.eps, zones.n_cut),
            ZoneFilter::Large => (zones.n_cut, r_max),
        };
        (lo.min(r_max), hi.min(r_max))
    }
}

/// Where and how to integrate a radial norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSpec {
    pub n: u32,
    pub s: f64,
    pub filter: ZoneFilter,
    pub zones: Zones,
    /// Integration cut-off; the tail beyond it is checked.
    pub r_max: f64,
    pub opts: QuadOptions,
}

impl NormSpec {
    pub fn new(n: u32, s: f64, r_max: f64) -> Self {
        Self {
            n,
            s,
            filter: ZoneFilter::All,
            zones: Zones::default(),
            r_max,
            opts: QuadOptions::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n", "dimension must be >= 1"));
        }
        if !(self.s >= 0.0 && self.s.is_finite()) {
            return Err(invalid("s", format!("Sobolev order must be >= 0, got {}", self.s)));
        }
        if !(self.r_max > 0.0 && self.r_max.is_finite()) {
            return Err(invalid("r_max", format!("must be positive, got {}", self.r_max)));
        }
        Ok(())
    }
}

/// `ω_n ∫ r^{2s+n-1} h(r) dr` over the selected zone, with a check that the
/// integral beyond `r_max` is negligible.
pub fn radial_integral<F: Fn(f64) -> Result<f64>>(h: F, spec: &NormSpec) -> Result<QuadResult> {
    let (_, res) = radial_integral_vec(|r| Ok(vec![h(r)?]), spec)?;
    Ok(res)
}

/// Component-wise [`radial_integral`] on a shared panel set.
pub fn radial_integral_vec<F: Fn(f64) -> Result<Vec<f64>>>(h: F, spec: &NormSpec) -> Result<(Vec<f64>, QuadResult)> {
    spec.validate()?;
    let p = 2.0 * spec.s + spec.n as f64 - 1.0;
    let omega = sphere_area(spec.n);
    let integrand = |r: f64| -> Result<Vec<f64>> {
        let w = if p == 0.0 { 1.0 } else { r.powf(p) };
        Ok(h(r)?.into_iter().map(|v| w * v).collect())
    };
    let (lo, hi) = spec.filter.interval(&spec.zones, spec.r_max);
    let breaks = [spec.zones.eps, spec.zones.n_cut];
    let (values, body) = integrate_vec(integrand, lo, hi, &breaks, &spec.opts)?;
    let mut error = body.error;
    let reaches_tail = matches!(spec.filter, ZoneFilter::All | ZoneFilter::Large)
        || (spec.filter == ZoneFilter::Bounded && spec.r_max < spec.zones.n_cut);
    if reaches_tail {
        let tail_hi = if spec.filter == ZoneFilter::Bounded {
            spec.zones.n_cut
        } else {
            2.0 * spec.r_max
        };
        let tail_opts = QuadOptions {
            rel_tol: 1e-3,
            max_width: None,
            ..spec.opts
        };
        let summed = |r: f64| Ok(integrand(r)?.iter().sum());
        let tail = integrate(summed, spec.r_max, tail_hi, &[], &tail_opts)?;
        let mut allowed = spec.opts.rel_tol * body.value.abs() + spec.opts.abs_tol;
        if tail.value.abs() > allowed && spec.filter != ZoneFilter::All {
            // a zone may hold almost nothing; judge the cut-off against the whole range
            let whole = integrate(summed, 0.0, spec.r_max, &breaks, &tail_opts)?;
            allowed = allowed.max(spec.opts.rel_tol * whole.value.abs());
        }
        if tail.value.abs() > allowed && tail.value.abs() > 1e-300 {
            return Err(Error::Truncation {
                r_max: spec.r_max,
                tail: tail.value.abs() * omega,
            });
        }
        error += tail.value.abs();
    }
    Ok((
        values.into_iter().map(|v| omega * v).collect(),
        QuadResult {
            value: omega * body.value,
            error: omega * error,
            panels: body.panels,
        },
    ))
}

/// `‖|D|^s f‖²_{L²} = ω_n ∫ r^{2s+n-1} |f̂(r)|² dr` over the selected zone.
pub fn l2_norm_sq_radial<F: Fn(f64) -> Result<C64>>(spectrum: F, spec: &NormSpec) -> Result<QuadResult> {
    radial_integral(|r| Ok(spectrum(r)?.norm_sqr()), spec)
}

/// `‖|D|^s f‖_{L²}` for a radial spectrum.
pub fn l2_norm_radial<F: Fn(f64) -> Result<C64>>(spectrum: F, spec: &NormSpec) -> Result<f64> {
    Ok(l2_norm_sq_radial(spectrum, spec)?.value.max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelPart {
    Cos,
    Sin,
}

/// Small-zone norm of `|ξ|^s |cos(γ̃|ξ|t)| e^{-a|ξ|²t}` or of
/// `|ξ|^{s-1} |sin(γ̃|ξ|t)| e^{-a|ξ|²t}`.
pub fn kernel_norm(t: f64, s: f64, n: u32, part: KernelPart, params: &ModelParams, zones: &Zones) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        let why = if part == KernelPart::Sin && 2.0 * s + n as f64 <= 2.0 {
            "; the sine bound is singular at r = 0 when 2s + n <= 2"
        } else {
            ""
        };
        return Err(Error::Domain(format!("kernel norm needs t > 0, got {t}{why}")));
    }
    let gt = params.gamma_tilde();
    let a = params.diffusion_rate();
    let spectrum = |r: f64| -> Result<C64> {
        let env = (-a * r * r * t).exp();
        let v = match part {
            KernelPart::Cos => (gt * r * t).cos() * env,
            KernelPart::Sin => {
                let sinc = if r == 0.0 { gt * t } else { (gt * r * t).sin() / r };
                sinc * env
            }
        };
        Ok(C64::new(v, 0.0))
    };
    let spec = NormSpec {
        n,
        s,
        filter: ZoneFilter::Small,
        zones: *zones,
        r_max: zones.eps,
        opts: QuadOptions {
            max_width: Some(oscillation_cap(gt, t)),
            ..QuadOptions::default()
        },
    };
    l2_norm_radial(spectrum, &spec)
}

/// Panel-width cap: half the period `π/(ωt)` of `cos²(ωrt)`.
pub fn oscillation_cap(phase_speed: f64, t: f64) -> f64 {
    if t <= 0.0 || phase_speed <= 0.0 {
        f64::INFINITY
    } else {
        0.5 * PI / (phase_speed * t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RateKind {
    G,
    H,
    Kappa,
}

/// `G(t; s, n)`, `H(t; n)` and `κ_n(t)`.
pub fn rate_function(kind: RateKind, t: f64, s: f64, n: u32) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("rate functions need t > 0, got {t}")));
    }
    if n == 0 {
        return Err(invalid("n", "dimension must be >= 1"));
    }
    let nf = n as f64;
    Ok(match kind {
        RateKind::G => {
            if s < 0.0 {
                return Err(invalid("s", "must be >= 0"));
            }
            let m = 2.0 * s + nf;
            if m < 2.0 {
                (1.0 + t).powf(1.0 - s - nf / 2.0)
            } else if m == 2.0 {
                (std::f64::consts::E + t).ln().sqrt()
            } else if m < 3.0 {
                (1.0 + t).powf(1.0 - 5.0 * s / 6.0 - 5.0 * nf / 12.0)
            } else {
                (1.0 + t).powf(0.5 - s / 2.0 - nf / 4.0)
            }
        }
        RateKind::H => match n {
            1 => t.sqrt(),
            2 => {
                if t <= 1.0 {
                    return Err(Error::Domain(format!("H(t; 2) = (ln t)^(1/2) needs t > 1, got {t}")));
                }
                t.ln().sqrt()
            }
            _ => t.powf(0.5 - nf / 4.0),
        },
        RateKind::Kappa => match n {
            1 => (1.0 + t).sqrt(),
            2 => (std::f64::consts::E + t).ln(),
            _ => 1.0,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(r: f64) -> Result<C64> {
        Ok(C64::new((-r * r).exp(), 0.0))
    }

    /// `∫₀^∞ r^m e^{-2r²} dr = Γ((m+1)/2) / (2·2^{(m+1)/2})`
    fn gauss_moment(m: u32) -> f64 {
        let k = m + 1;
        // Γ(k/2) = sphere_area(k)^{-1} · 2π^{k/2}
        let gamma_half = 2.0 * PI.powf(k as f64 / 2.0) / sphere_area(k);
        gamma_half / (2.0 * 2f64.powf(k as f64 / 2.0))
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-15);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn gaussian_closed_forms() {
        let v = l2_norm_radial(gauss, &NormSpec::new(3, 0.0, 8.0)).unwrap();
        assert!((v - (PI / 2.0).powf(0.75)).abs() < 1e-9 * v);
        assert!((v - 1.4031).abs() < 1e-4);
        let v = l2_norm_sq_radial(gauss, &NormSpec::new(1, 1.0, 8.0)).unwrap().value;
        assert!((v - (2.0 * PI).sqrt() / 8.0).abs() < 1e-9 * v);
        for n in 1..=4u32 {
            for s in [0.0, 1.0, 2.0] {
                let v = l2_norm_sq_radial(gauss, &NormSpec::new(n, s, 8.0)).unwrap().value;
                let exact = sphere_area(n) * gauss_moment(2 * s as u32 + n - 1);
                assert!((v - exact).abs() < 1e-9 * exact, "n={n} s={s}");
            }
        }
    }

    #[test]
    fn zero_spectrum_has_zero_norm() {
        let v = l2_norm_radial(|_| Ok(C64::new(0.0, 0.0)), &NormSpec::new(2, 0.0, 5.0)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn truncation_is_reported() {
        let slow = |r: f64| Ok(C64::new(1.0 / (1.0 + r * r), 0.0));
        assert!(matches!(
            l2_norm_radial(slow, &NormSpec::new(1, 0.0, 5.0)),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn zones_partition_the_norm() {
        let f = |r: f64| Ok(C64::new((-0.1 * r * r).exp() * (1.0 + r), 0.0));
        let mut spec = NormSpec::new(3, 1.0, 25.0);
        let all = l2_norm_sq_radial(f, &spec).unwrap().value;
        let mut sum = 0.0;
        for z in [ZoneFilter::Small, ZoneFilter::Bounded, ZoneFilter::Large] {
            spec.filter = z;
            sum += l2_norm_sq_radial(f, &spec).unwrap().value;
        }
        assert!((all - sum).abs() < 1e-10 * all);
    }

    #[test]
    fn refinement_changes_less_than_error_estimate() {
        let t = 500.0;
        let f = |r: f64| Ok(C64::new((0.7 * r * t).cos() * (-0.6 * r * r * t).exp(), 0.0));
        let mut spec = NormSpec::new(3, 0.0, 0.1);
        spec.filter = ZoneFilter::Small;
        spec.opts.max_width = Some(oscillation_cap(0.7, t));
        let coarse = l2_norm_sq_radial(f, &spec).unwrap();
        spec.opts.max_width = Some(oscillation_cap(0.7, t) / 2.0);
        let fine = l2_norm_sq_radial(f, &spec).unwrap();
        assert!(fine.panels > coarse.panels);
        assert!((fine.value - coarse.value).abs() <= coarse.error.max(1e-15 * coarse.value));
    }

    #[test]
    fn rate_function_values() {
        assert!((rate_function(RateKind::H, 100.0, 0.0, 1).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(rate_function(RateKind::Kappa, 37.0, 0.0, 3).unwrap(), 1.0);
        let g = rate_function(RateKind::G, 5.0, 0.5, 1).unwrap();
        assert!((g - (std::f64::consts::E + 5.0).ln().sqrt()).abs() < 1e-15);
        assert!(matches!(rate_function(RateKind::H, 0.5, 0.0, 2), Err(Error::Domain(_))));
        assert!((rate_function(RateKind::Kappa, 3.0, 0.0, 2).unwrap() - (std::f64::consts::E + 3.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn kernel_norm_requires_positive_time() {
        let p = ModelParams::vdw(2.0).unwrap();
        assert!(matches!(
            kernel_norm(0.0, 0.0, 2, KernelPart::Sin, &p, &Zones::default()),
            Err(Error::Domain(_))
        ));
        let v = kernel_norm(10.0, 0.0, 2, KernelPart::Sin, &p, &Zones::default()).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }
}
