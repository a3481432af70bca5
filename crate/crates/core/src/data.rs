//! Radial spectra of the initial data (unitary Fourier convention).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Values below this fraction of the peak are treated as outside the support.
const SUPPORT_CUTOFF: f64 = 1e-17;

#[derive(Debug, Clone, PartialEq)]
pub enum DataSpectrum {
    Zero,
    /// `amp · e^{-(r/width)²}`
    Gaussian { amp: f64, width: f64 },
    /// `amp · (e^{-(r/w1)²} − e^{-(r/w2)²})`, vanishing at the origin.
    GaussianDiff { amp: f64, w1: f64, w2: f64 },
    /// `amp · r · e^{-(r/width)²}`, vanishing linearly at the origin.
    LinearGaussian { amp: f64, width: f64 },
    /// Piecewise linear through `(r_k, v_k)`, zero beyond the last node.
    Tabulated { r: Vec<f64>, values: Vec<f64> },
}

impl DataSpectrum {
    pub fn gaussian(amp: f64, width: f64) -> Result<Self> {
        check_width("width", width)?;
        Ok(Self::Gaussian { amp, width })
    }

    pub fn tabulated(r: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if r.len() != values.len() || r.len() < 2 {
            return Err(invalid("tabulated", "need matching node and value lists of length >= 2"));
        }
        if r[0] != 0.0 || r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("tabulated", "nodes must start at 0 and increase strictly"));
        }
        if values.iter().chain(&r).any(|v| !v.is_finite()) {
            return Err(invalid("tabulated", "non-finite entry"));
        }
        Ok(Self::Tabulated { r, values })
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Gaussian { amp, width } => amp * (-(r / width).powi(2)).exp(),
            Self::GaussianDiff { amp, w1, w2 } => {
                amp * ((-(r / w1).powi(2)).exp() - (-(r / w2).powi(2)).exp())
            }
            Self::LinearGaussian { amp, width } => amp * r * (-(r / width).powi(2)).exp(),
            Self::Tabulated { r: nodes, values } => {
                let last = nodes.len() - 1;
                if r >= nodes[last] {
                    return if r == nodes[last] { values[last] } else { 0.0 };
                }
                let k = nodes.partition_point(|x| *x <= r).max(1) - 1;
                let w = (r - nodes[k]) / (nodes[k + 1] - nodes[k]);
                values[k] * (1.0 - w) + values[k + 1] * w
            }
        }
    }

    /// Spectrum value at the origin; the amplitude multiplying the leading profiles.
    pub fn profile_amplitude(&self) -> f64 {
        self.eval(0.0)
    }

    /// `P_f = ∫ f dx = (2π)^{n/2} f̂(0)`.
    pub fn moment(&self, n: u32) -> f64 {
        (2.0 * PI).powf(n as f64 / 2.0) * self.eval(0.0)
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::Gaussian { amp, .. }
            | Self::GaussianDiff { amp, .. }
            | Self::LinearGaussian { amp, .. } => *amp == 0.0,
            Self::Tabulated { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    /// Radius beyond which the spectrum is negligible.
    pub fn support_radius(&self) -> f64 {
        let gauss_radius = |width: f64| width * (-SUPPORT_CUTOFF.ln()).sqrt();
        match self {
            Self::Zero => 0.0,
            Self::Gaussian { width, .. } => gauss_radius(*width),
            Self::GaussianDiff { w1, w2, .. } => gauss_radius(w1.max(*w2)),
            // r e^{-(r/w)²} carries an extra algebraic factor; pad by one width.
            Self::LinearGaussian { width, .. } => gauss_radius(*width) + width,
            Self::Tabulated { r, .. } => *r.last().expect("validated"),
        }
    }
}

fn check_width(name: &'static str, w: f64) -> Result<()> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(invalid(name, format!("must be positive, got {w}")));
    }
    Ok(())
}

impl fmt::Display for DataSpectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "zero"),
            Self::Gaussian { amp, width } => write!(f, "gaussian:{amp},{width}"),
            Self::GaussianDiff { amp, w1, w2 } => write!(f, "gaussian_diff:{amp},{w1},{w2}"),
            Self::LinearGaussian { amp, width } => write!(f, "linear_gaussian:{amp},{width}"),
            Self::Tabulated { r, values } => {
                write!(f, "tabulated:")?;
                for (i, (x, v)) in r.iter().zip(values).enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{x},{v}")?;
                }
                Ok(())
            }
        }
    }
}

fn parse_numbers(s: &str, sep: char) -> Result<Vec<f64>> {
    s.split(sep)
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| invalid("spectrum", format!("not a number: `{}`", x.trim())))
        })
        .collect()
}

/// `zero`, `gaussian:amp,width`, `gaussian_diff:amp,w1,w2`,
/// `linear_gaussian:amp,width` or `tabulated:r0,v0;r1,v1;...`.
impl FromStr for DataSpectrum {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        let nums = |want: usize| -> Result<Vec<f64>> {
            let v = parse_numbers(args, ',')?;
            if v.len() != want {
                return Err(invalid(
                    "spectrum",
                    format!("`{kind}` takes {want} numbers, got {}", v.len()),
                ));
            }
            Ok(v)
        };
        match kind.trim() {
            "zero" => Ok(Self::Zero),
            "gaussian" => {
                let v = nums(2)?;
                Self::gaussian(v[0], v[1])
            }
            "gaussian_diff" => {
                let v = nums(3)?;
                check_width("w1", v[1])?;
                check_width("w2", v[2])?;
                Ok(Self::GaussianDiff {
                    amp: v[0],
                    w1: v[1],
                    w2: v[2],
                })
            }
            "linear_gaussian" => {
                let v = nums(2)?;
                check_width("width", v[1])?;
                Ok(Self::LinearGaussian {
                    amp: v[0],
                    width: v[1],
                })
            }
            "tabulated" => {
                let mut r = Vec::new();
                let mut values = Vec::new();
                for pair in args.split(';') {
                    let v = parse_numbers(pair, ',')?;
                    if v.len() != 2 {
                        return Err(invalid("spectrum", format!("tabulated entry `{pair}` needs r,v")));
                    }
                    r.push(v[0]);
                    values.push(v[1]);
                }
                Self::tabulated(r, values)
            }
            other => Err(invalid("spectrum", format!("unknown spectrum kind `{other}`"))),
        }
    }
}

/// The MGT second datum `v̂2`: either tied to `(û0, û1)` as `−r²(û0+û1)`
/// or an independent spectrum.
#[derive(Debug, Clone, PartialEq)]
pub enum V2Spec {
    Consistent,
    Spectrum(DataSpectrum),
}

impl V2Spec {
    pub fn eval(&self, r: f64, u0: &DataSpectrum, u1: &DataSpectrum) -> f64 {
        match self {
            Self::Consistent => -r * r * (u0.eval(r) + u1.eval(r)),
            Self::Spectrum(s) => s.eval(r),
        }
    }

    pub fn support_radius(&self) -> f64 {
        match self {
            Self::Consistent => 0.0,
            Self::Spectrum(s) => s.support_radius(),
        }
    }
}

impl fmt::Display for V2Spec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Consistent => write!(f, "consistent"),
            Self::Spectrum(s) => s.fmt(f),
        }
    }
}

impl FromStr for V2Spec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "consistent" {
            Ok(Self::Consistent)
        } else {
            Ok(Self::Spectrum(s.parse()?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments() {
        let g = DataSpectrum::gaussian(2.0, 1.0).unwrap();
        assert_eq!(g.profile_amplitude(), 2.0);
        assert!((g.moment(3) - 2.0 * (2.0 * PI).powf(1.5)).abs() < 1e-12);
        let d: DataSpectrum = "gaussian_diff:1,1,2".parse().unwrap();
        assert_eq!(d.profile_amplitude(), 0.0);
        let l: DataSpectrum = "linear_gaussian:1,1".parse().unwrap();
        assert_eq!(l.moment(3), 0.0);
        assert!((l.eval(0.5) - 0.5 * (-0.25f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn parse_round_trip() {
        for s in ["zero", "gaussian:1,0.5", "gaussian_diff:2,1,3", "linear_gaussian:1,1", "tabulated:0,1;1,0.5;2,0"] {
            let d: DataSpectrum = s.parse().unwrap();
            let again: DataSpectrum = d.to_string().parse().unwrap();
            assert_eq!(d, again);
        }
        assert!("gaussian:1".parse::<DataSpectrum>().is_err());
        assert!("gaussian:1,-1".parse::<DataSpectrum>().is_err());
        assert!("cauchy:1,1".parse::<DataSpectrum>().is_err());
        assert!("tabulated:1,1;2,2".parse::<DataSpectrum>().is_err());
        assert_eq!("consistent".parse::<V2Spec>().unwrap(), V2Spec::Consistent);
    }

    #[test]
    fn tabulated_interpolates_and_vanishes_outside() {
        let t = DataSpectrum::tabulated(vec![0.0, 1.0, 2.0], vec![1.0, 3.0, 1.0]).unwrap();
        assert_eq!(t.eval(0.5), 2.0);
        assert_eq!(t.eval(2.0), 1.0);
        assert_eq!(t.eval(2.5), 0.0);
        assert_eq!(t.support_radius(), 2.0);
    }

    #[test]
    fn consistent_v2() {
        let u0 = DataSpectrum::gaussian(1.0, 1.0).unwrap();
        let u1 = DataSpectrum::Zero;
        let v = V2Spec::Consistent.eval(2.0, &u0, &u1);
        assert!((v + 4.0 * (-4.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn support_radius_covers_tail() {
        let g = DataSpectrum::gaussian(1.0, 1.0).unwrap();
        let r = g.support_radius();
        assert!(g.eval(r) <= 1e-17 * 1.0000001);
    }
}
