use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocitySource {
    /// `v = (-R2 θ, R1 θ)` computed from the evolving field.
    SqgCoupled,
    /// A given divergence-free velocity supplied by the caller.
    Prescribed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeDirection {
    /// `∂t θ + ∇·(vθ) + Λ^{2α}θ - εΔθ = 0`.
    Forward,
    /// `∂s ψ - ∇·(v ψ) + Λ^{2α}ψ - εΔψ = 0`, with `v` read at reversed time by the caller.
    BackwardDual,
}

/// Parameters of the transport-diffusion equation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquationSpec {
    pub alpha: f64,
    pub epsilon_visc: f64,
    pub velocity_source: VelocitySource,
    pub mollify_eps: f64,
    pub time_direction: TimeDirection,
}

impl EquationSpec {
    /// Inviscid forward SQG with the given dissipation exponent.
    pub fn sqg(alpha: f64) -> Self {
        Self {
            alpha,
            epsilon_visc: 0.0,
            velocity_source: VelocitySource::SqgCoupled,
            mollify_eps: 0.0,
            time_direction: TimeDirection::Forward,
        }
    }

    /// Forward equation driven by a prescribed velocity.
    pub fn prescribed(alpha: f64) -> Self {
        Self {
            velocity_source: VelocitySource::Prescribed,
            ..Self::sqg(alpha)
        }
    }

    pub fn with_viscosity(mut self, epsilon_visc: f64) -> Self {
        self.epsilon_visc = epsilon_visc;
        self
    }

    pub fn with_mollifier(mut self, mollify_eps: f64) -> Self {
        self.mollify_eps = mollify_eps;
        self
    }

    pub fn with_direction(mut self, direction: TimeDirection) -> Self {
        self.time_direction = direction;
        self
    }

    pub fn two_alpha(&self) -> f64 {
        2.0 * self.alpha
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 0.5) {
            return Err(Error::Parameter(format!(
                "alpha must lie in (0, 0.5], got {}",
                self.alpha
            )));
        }
        if !(self.epsilon_visc >= 0.0 && self.epsilon_visc.is_finite()) {
            return Err(Error::Parameter(format!(
                "epsilon_visc must be nonnegative, got {}",
                self.epsilon_visc
            )));
        }
        if !(self.mollify_eps >= 0.0 && self.mollify_eps.is_finite()) {
            return Err(Error::Parameter(format!(
                "mollify_eps must be nonnegative, got {}",
                self.mollify_eps
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_range() {
        assert!(EquationSpec::sqg(0.25).validate().is_ok());
        assert!(EquationSpec::sqg(0.5).validate().is_ok());
        assert!(EquationSpec::sqg(0.6).validate().is_err());
        assert!(EquationSpec::sqg(0.0).validate().is_err());
        assert!(EquationSpec::sqg(0.25)
            .with_viscosity(-1.0)
            .validate()
            .is_err());
    }
}
