use crate::error::{invalid, Error, Result};

/// Memory decay rate `γ > 1` and, for the MGT model, thermal relaxation `τ ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub gamma: f64,
    pub tau: Option<f64>,
}

impl ModelParams {
    pub fn vdw(gamma: f64) -> Result<Self> {
        let p = Self { gamma, tau: None };
        p.validate()?;
        Ok(p)
    }

    pub fn mgt(gamma: f64, tau: f64) -> Result<Self> {
        let p = Self {
            gamma,
            tau: Some(tau),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() || self.gamma <= 1.0 {
            return Err(invalid("gamma", format!("must be finite and > 1, got {}", self.gamma)));
        }
        if let Some(tau) = self.tau {
            if !tau.is_finite() || tau <= 0.0 || tau >= 1.0 {
                return Err(invalid("tau", format!("must lie in (0, 1), got {tau}")));
            }
        }
        Ok(())
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::mgt(self.gamma, tau)
    }

    pub fn tau(&self) -> Result<f64> {
        self.tau.ok_or(Error::MissingParameter("tau"))
    }

    /// `γ̃ = √((γ-1)/γ)`, the low-frequency wave speed.
    pub fn gamma_tilde(&self) -> f64 {
        ((self.gamma - 1.0) / self.gamma).sqrt()
    }

    /// `(γ²+1)/(2γ²)`, the low-frequency diffusion coefficient.
    pub fn diffusion_rate(&self) -> f64 {
        let g2 = self.gamma * self.gamma;
        (g2 + 1.0) / (2.0 * g2)
    }

    /// Low-frequency damping of the MGT oscillatory pair.
    pub fn mgt_diffusion_rate(&self) -> Result<f64> {
        let tau = self.tau()?;
        let g = self.gamma;
        Ok(((1.0 - tau) * g * g + tau * g + 1.0) / (2.0 * g * g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_gamma_and_tau() {
        assert!(ModelParams::vdw(1.0).is_err());
        assert!(ModelParams::vdw(f64::NAN).is_err());
        assert!(ModelParams::mgt(2.0, 0.0).is_err());
        assert!(ModelParams::mgt(2.0, 1.0).is_err());
        assert_eq!(
            ModelParams::vdw(2.0).unwrap().tau(),
            Err(Error::MissingParameter("tau"))
        );
    }

    #[test]
    fn derived_quantities() {
        let p = ModelParams::vdw(2.0).unwrap();
        assert!((p.gamma_tilde() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((p.diffusion_rate() - 0.625).abs() < 1e-15);
        for g in [1.01, 1.5, 2.0, 6.0, 10.0] {
            let p = ModelParams::vdw(g).unwrap();
            let gt = p.gamma_tilde();
            assert!((gt * gt * g - (g - 1.0)).abs() < 1e-14 * g);
        }
        let m = ModelParams::mgt(2.0, 0.1).unwrap();
        assert!((m.mgt_diffusion_rate().unwrap() - (0.9 * 4.0 + 0.2 + 1.0) / 8.0).abs() < 1e-15);
    }
}
