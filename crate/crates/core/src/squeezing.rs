//! Squeezing figures of merit and the entanglement-depth bound.

use crate::error::{Error, Result};
use crate::operators::{Axis, axis_moments, collective_moments};
use crate::sector::SectoredState;

/// Which particle number enters the metrics for states without a definite
/// particle number. `MeanParticles` reduces to the initial N on fixed-number
/// states; both are exposed because mixed-state usage is ambiguous in the
/// literature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NConvention {
    #[default]
    MeanParticles,
    InitialN,
}

impl NConvention {
    fn value(self, state: &SectoredState) -> f64 {
        match self {
            NConvention::MeanParticles => state.mean_particles(),
            NConvention::InitialN => state.source_particles() as f64,
        }
    }
}

/// Combined squeezing report for one state.
#[derive(Debug, Clone, Copy)]
pub struct SqueezingReport {
    pub xi_d: f64,
    /// Absent when the mean spin vanishes and xi_S is undefined.
    pub xi_s: Option<f64>,
    pub n_convention: NConvention,
    pub depth_lower_bound: usize,
}

/// Dicke squeezing `xi_D = N (<dJ_z^2> + 1/4) / <J_x^2 + J_y^2>`.
pub fn xi_d(state: &SectoredState, convention: NConvention) -> Result<f64> {
    let m = collective_moments(state);
    if m.mean_jx2_plus_jy2 <= 1e-300 {
        return Err(Error::UndefinedMetric(
            "vanishing <Jx^2 + Jy^2> denominator (vacuum-like state)".into(),
        ));
    }
    let n = convention.value(state);
    Ok(n * (m.var_jz + 0.25) / m.mean_jx2_plus_jy2)
}

/// Conventional spin squeezing `xi_S = N <dJ_var^2> / <J_mean>^2` for an
/// explicit `(mean_axis, variance_axis)` pair. The default pairing used by
/// the loss-robustness comparison is `(X, Z)`.
pub fn xi_s(state: &SectoredState, axes: (Axis, Axis)) -> Result<f64> {
    let (mean_axis, var_axis) = axes;
    let (mean, _) = axis_moments(state, mean_axis);
    let n = NConvention::MeanParticles.value(state);
    if mean.abs() <= 1e-9 * n.max(1.0) {
        return Err(Error::UndefinedMetric(format!(
            "mean spin along {mean_axis:?} vanishes (<J> = {mean:.3e}); \
             xi_S does not characterize such states"
        )));
    }
    let (v1, v2) = axis_moments(state, var_axis);
    let var = v2 - v1 * v1;
    Ok(n * var / (mean * mean))
}

/// Lower bound on the entanglement depth from the Dicke squeezing:
/// `max(1, ceil(1/xi_D) - 2)`.
pub fn entanglement_depth_lower_bound(xi_d: f64) -> Result<usize> {
    if !(xi_d > 0.0) {
        return Err(Error::InvalidArgument(format!("xi_D must be positive, got {xi_d}")));
    }
    // snap near-integer reciprocals before the ceiling so that xi_D values
    // carrying float round-off (1/(N+2) computed numerically) do not jump a
    // whole integer
    let recip = 1.0 / xi_d;
    let snapped = if (recip - recip.round()).abs() < 1e-9 * recip.abs().max(1.0) {
        recip.round()
    } else {
        recip.ceil()
    };
    let bound = snapped as i64 - 2;
    Ok(bound.max(1) as usize)
}

/// Full report with the default axis pairing.
pub fn squeezing_report(state: &SectoredState, convention: NConvention) -> Result<SqueezingReport> {
    let xd = xi_d(state, convention)?;
    let xs = xi_s(state, (Axis::X, Axis::Z)).ok();
    Ok(SqueezingReport {
        xi_d: xd,
        xi_s: xs,
        n_convention: convention,
        depth_lower_bound: entanglement_depth_lower_bound(xd)?,
    })
}
