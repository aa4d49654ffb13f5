//! Kinetic and diffusive scalings and the coefficients they induce.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which rescaling of the paraxial equation is simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Kinetic,
    Diffusive,
}

/// Threshold `e^{-e}` below which the diffusive `eta` lies in `(0, 1]`.
pub fn diffusive_epsilon_max() -> f64 {
    (-std::f64::consts::E).exp()
}

/// The scaling parameters `(epsilon, eta, beta, k0)` of a run.
///
/// Construction accepts any finite parameters so that validation reports
/// can describe an inadmissible scaling. Call [`RegimeScaling::check`]
/// before simulating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeScaling {
    regime: Regime,
    epsilon: f64,
    beta: f64,
    k0: f64,
    eta: f64,
    eta_overridden: bool,
}

impl RegimeScaling {
    pub fn new(regime: Regime, epsilon: f64, beta: f64, k0: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon = {epsilon} must be positive")));
        }
        if !(beta.is_finite() && beta >= 1.0) {
            return Err(Error::Config(format!("beta = {beta} must be >= 1")));
        }
        if !(k0.is_finite() && k0 > 0.0) {
            return Err(Error::Config(format!("k0 = {k0} must be positive")));
        }
        let eta = match regime {
            Regime::Kinetic => 1.0,
            Regime::Diffusive => 1.0 / (1.0 / epsilon).ln().ln(),
        };
        Ok(Self { regime, epsilon, beta, k0, eta, eta_overridden: false })
    }

    pub fn kinetic(epsilon: f64, beta: f64, k0: f64) -> Result<Self> {
        Self::new(Regime::Kinetic, epsilon, beta, k0)
    }

    pub fn diffusive(epsilon: f64, beta: f64, k0: f64) -> Result<Self> {
        Self::new(Regime::Diffusive, epsilon, beta, k0)
    }

    /// Replace the regime's `eta` by an explicit value.
    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::Config(format!("eta = {eta} must be positive")));
        }
        self.eta = eta;
        self.eta_overridden = true;
        Ok(self)
    }

    /// Verify the admissibility conditions of the regime.
    pub fn check(&self) -> Result<()> {
        if !(self.epsilon < 1.0) {
            return Err(Error::Config(format!("epsilon = {} must lie in (0, 1)", self.epsilon)));
        }
        if self.regime == Regime::Diffusive
            && !self.eta_overridden
            && self.epsilon > diffusive_epsilon_max()
        {
            return Err(Error::Config(format!(
                "diffusive regime needs epsilon <= e^-e = {:.5} so that eta = 1/ln(ln(1/epsilon)) lies in (0, 1]; got epsilon = {}",
                diffusive_epsilon_max(),
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn eta_overridden(&self) -> bool {
        self.eta_overridden
    }

    /// Laplacian coefficient `a = eta / (2 k0 epsilon)`.
    pub fn laplacian_coeff(&self) -> f64 {
        self.eta / (2.0 * self.k0 * self.epsilon)
    }

    /// Ito damping rate `k0^2 R(0) / (8 eta^2)` for a medium of variance `r0`.
    pub fn damping_rate(&self, r0: f64) -> f64 {
        self.k0 * self.k0 * r0 / (8.0 * self.eta * self.eta)
    }

    /// Noise gain `g = k0 / (2 eta)`.
    pub fn noise_gain(&self) -> f64 {
        self.k0 / (2.0 * self.eta)
    }

    /// Source scale factor `epsilon^beta`.
    pub fn source_scale(&self) -> f64 {
        self.epsilon.powf(self.beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinetic_eta_is_one() {
        let s = RegimeScaling::kinetic(0.1, 1.0, 2.0).unwrap();
        assert_eq!(s.eta(), 1.0);
        assert!((s.laplacian_coeff() - 2.5).abs() < 1e-15);
        assert!((s.noise_gain() - 1.0).abs() < 1e-15);
        assert!((s.damping_rate(1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn diffusive_eta_formula() {
        let eps = 1e-4_f64;
        let s = RegimeScaling::diffusive(eps, 1.0, 1.0).unwrap();
        let expected = 1.0 / (eps.recip().ln()).ln();
        assert_eq!(s.eta(), expected);
        assert!(s.eta() > 0.0 && s.eta() <= 1.0);
        assert!(s.check().is_ok());
    }

    #[test]
    fn diffusive_threshold() {
        assert!((diffusive_epsilon_max() - 0.065_988).abs() < 1e-6);
        let s = RegimeScaling::diffusive(0.5, 1.0, 1.0).unwrap();
        assert!(s.check().is_err());
        let at = RegimeScaling::diffusive(diffusive_epsilon_max(), 1.0, 1.0).unwrap();
        assert!((at.eta() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eta_override_is_admissible() {
        let s = RegimeScaling::diffusive(0.5, 1.0, 1.0).unwrap().with_eta(0.3).unwrap();
        assert_eq!(s.eta(), 0.3);
        assert!(s.check().is_ok());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(RegimeScaling::kinetic(0.0, 1.0, 1.0).is_err());
        assert!(RegimeScaling::kinetic(0.1, 0.5, 1.0).is_err());
        assert!(RegimeScaling::kinetic(0.1, 1.0, -1.0).is_err());
        assert!(RegimeScaling::kinetic(1.5, 1.0, 1.0).unwrap().check().is_err());
    }
}
