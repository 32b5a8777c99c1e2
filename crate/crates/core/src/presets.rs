//! Named model configurations.

use crate::error::Result;
use crate::model::{OddPart, Potential, RateFunction, RateParams};

/// `w(u) = gamma + s4 u^4 + u` with `c = 0.9`, `eps = 0.1`.
pub fn gaussian_mode(gamma: f64, s4: f64) -> Result<RateFunction> {
    RateFunction::new(RateParams {
        gamma,
        s_coeffs: vec![0.0, 0.0, s4],
        r: OddPart::Linear,
        c: 0.9,
        eps: 0.1,
        c_dom: 10.0,
    })
}

/// Gaussian mode shifted so that `inf w = gamma`:
/// `w(u) = gamma + s0 + s4 u^4 + u` with `s0 = 3/4 (4 s4)^{-1/3}`, the depth
/// of the minimum of `s4 u^4 + u`.
pub fn gaussian_mode_normalized(gamma: f64, s4: f64) -> Result<RateFunction> {
    if !(s4 > 0.0) {
        return Err(crate::error::Error::InvalidParameter {
            name: "s4",
            reason: "normalization needs a positive quartic coefficient".into(),
        });
    }
    RateFunction::new(RateParams {
        gamma,
        s_coeffs: vec![0.75 * (4.0 * s4).powf(-1.0 / 3.0), 0.0, s4],
        r: OddPart::Linear,
        c: 0.9,
        eps: 0.1,
        c_dom: 10.0,
    })
}

/// Constant rate `w = gamma`. Fails the convexity condition by design.
pub fn simple_walk(gamma: f64) -> Result<RateFunction> {
    RateFunction::new(RateParams {
        gamma,
        s_coeffs: vec![],
        r: OddPart::Entire {
            derivatives: vec![],
            truncated: false,
        },
        c: 0.9,
        eps: 0.1,
        c_dom: 10.0,
    })
}

/// `V(x) = exp(-|x|^2)` in `d = 3`.
pub fn srbp_gauss_d3() -> Potential {
    Potential::gaussian(1.0, 1.0, 3).expect("valid preset")
}

pub const PRESET_NAMES: &[&str] = &["gaussian-d3", "simple-walk", "srbp-gauss-d3", "d1-explore"];
