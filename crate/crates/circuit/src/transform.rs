//! Star-triangle (wye-delta) conversion.
//!
//! Wye impedances are ordered `[Za, Zb, Zc]` (arm attached to terminal a, b,
//! c); delta impedances `[Zab, Zbc, Zca]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CircuitError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Direction {
    WyeToDelta,
    DeltaToWye,
}

pub fn wye_delta(z: [Complex64; 3], direction: Direction) -> Result<[Complex64; 3]> {
    if z.iter().any(|zi| zi.norm() == 0.0 || !zi.re.is_finite() || !zi.im.is_finite()) {
        return Err(CircuitError::ZeroImpedance);
    }
    match direction {
        Direction::WyeToDelta => {
            let [za, zb, zc] = z;
            let products = za * zb + zb * zc + zc * za;
            if products.norm() == 0.0 {
                return Err(CircuitError::ZeroImpedance);
            }
            Ok([products / zc, products / za, products / zb])
        }
        Direction::DeltaToWye => {
            let [zab, zbc, zca] = z;
            let total = zab + zbc + zca;
            if total.norm() == 0.0 {
                return Err(CircuitError::ZeroImpedance);
            }
            Ok([zab * zca / total, zab * zbc / total, zbc * zca / total])
        }
    }
}
