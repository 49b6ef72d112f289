use super::{PotentialHandle, Side};
use crate::error::{Error, Result};

/// `(1/eta) log sum_k e^{eta x_k}` with max subtraction.
pub fn log_sum_exp(x: &[f64], eta: f64) -> f64 {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = x.iter().map(|v| (eta * (v - m)).exp()).sum();
    m + s.ln() / eta
}

/// `softmax(eta x)`.
pub fn softmax(x: &[f64], eta: f64) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    softmax_into(x, eta, &mut out);
    out
}

pub(crate) fn softmax_into(x: &[f64], eta: f64, out: &mut [f64]) {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for (o, v) in out.iter_mut().zip(x) {
        *o = (eta * (v - m)).exp();
        s += *o;
    }
    for o in out.iter_mut() {
        *o /= s;
    }
}

/// `Phi(x) + (1 - delta) eta / (2 delta)`.
pub fn exp_potential_geometric(x: &[f64], h: &PotentialHandle) -> Result<f64> {
    if h.family() != super::Family::ExpWeights {
        return Err(Error::InvalidArgument(
            "handle is not exponential weights".into(),
        ));
    }
    h.value(x, Side::Upper)
}
