//! Unit tags for noise variances.
//!
//! Covariance matrices use vacuum variance 1 ([`Snu`]). Channel and GKP noise
//! variances (σ², σ_r², Δ²) use vacuum variance ½ ([`HalfSnu`]). A `HalfSnu`
//! noise adds `2·σ²` to a vacuum-1 covariance diagonal.

use serde::{Deserialize, Serialize};

/// Variance with vacuum = 1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Snu(pub f64);

/// Variance with vacuum = ½.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct HalfSnu(pub f64);

impl HalfSnu {
    pub fn to_snu(self) -> Snu {
        Snu(2.0 * self.0)
    }
}

impl Snu {
    pub fn to_half(self) -> HalfSnu {
        HalfSnu(0.5 * self.0)
    }
}
