//! Fixtures shared by the criterion benches.

use geostop::bounds::DiffusionConstants;
use geostop::potentials::PotentialHandle;
use geostop::verify::sample_points;
use geostop::Result;

/// Upper-bound potentials of every family at `(n, delta)`.
pub fn upper_handles(n: usize, delta: f64) -> Result<Vec<PotentialHandle>> {
    let dc = DiffusionConstants::new(n, delta)?;
    Ok(vec![
        PotentialHandle::exp_weights_tuned(n, delta)?,
        PotentialHandle::heat(n, delta, dc.kappa_heat_ub)?,
        PotentialHandle::max(n, delta, dc.kappa_m)?,
    ])
}

/// Reproducible states at the natural regret scale for `delta`.
pub fn states(n: usize, delta: f64, count: usize) -> Result<Vec<Vec<f64>>> {
    sample_points(n, delta, count, 0xbe7c)
}
