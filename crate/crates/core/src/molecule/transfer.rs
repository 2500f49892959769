use crate::error::{Error, Result};
use crate::evolution::{run_backward, run_forward_recording, EquationSpec, VelocityField};
use crate::spectral::Field;

/// Both sides of the duality identity and their normalized gap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferReport {
    /// `⟨θ(t), ψ0⟩`.
    pub forward: f64,
    /// `⟨θ0, ψ(t)⟩`.
    pub backward: f64,
    /// `|forward - backward| / (‖θ0‖∞ ‖ψ0‖₁)`.
    pub residual: f64,
    /// `‖ψ(t)‖₁`.
    pub psi_l1: f64,
}

/// Runs θ forward to `t` (recording the velocity), then the molecule backward
/// against that record, and compares the two pairings.
pub fn transfer_residual(
    theta0: &Field,
    molecule: &Field,
    spec: &EquationSpec,
    velocity: Option<&dyn VelocityField>,
    t: f64,
    dt: f64,
) -> Result<TransferReport> {
    theta0.check_same_grid(molecule)?;
    let theta0 = theta0.to_physical();
    let psi0 = molecule.to_physical();
    let cell = theta0.grid().cell_volume();
    let psi_l1 = psi0.values().iter().map(|x| x.abs()).sum::<f64>() * cell;
    let scale = theta0.max_abs() * psi_l1;
    if t == 0.0 {
        let p = theta0.inner(&psi0)?;
        return Ok(TransferReport {
            forward: p,
            backward: p,
            residual: 0.0,
            psi_l1,
        });
    }
    if !(t > 0.0) {
        return Err(Error::Parameter(format!("t must be nonnegative, got {t}")));
    }
    let (theta_t, history) = run_forward_recording(&theta0, spec, velocity, t, dt, &mut [])?;
    let psi_t = run_backward(&psi0, &history, spec, t, dt, &mut [])?
        .theta
        .to_physical();
    let forward = theta_t.theta.inner(&psi0)?;
    let backward = theta0.inner(&psi_t)?;
    let residual = if scale > 0.0 {
        (forward - backward).abs() / scale
    } else {
        0.0
    };
    let psi_t_l1 = psi_t.values().iter().map(|x| x.abs()).sum::<f64>() * cell;
    Ok(TransferReport {
        forward,
        backward,
        residual,
        psi_l1: psi_t_l1,
    })
}
