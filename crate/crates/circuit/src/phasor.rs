use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Maps any angle in radians into `(-π, π]`.
pub fn normalize_angle(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(2.0 * PI);
    if wrapped > PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// Smallest absolute difference between two angles, in `[0, π]`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    normalize_angle(a - b).abs()
}

/// RMS magnitude and angle of a sinusoidal steady-state quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phasor {
    pub magnitude: f64,
    /// Radians, always in `(-π, π]`.
    pub angle: f64,
}

impl Phasor {
    /// Builds a phasor, folding a negative magnitude into the angle.
    pub fn new(magnitude: f64, angle: f64) -> Self {
        if magnitude < 0.0 {
            Self::new(-magnitude, angle + PI)
        } else if magnitude == 0.0 {
            Self { magnitude: 0.0, angle: 0.0 }
        } else {
            Self { magnitude, angle: normalize_angle(angle) }
        }
    }

    pub fn from_degrees(magnitude: f64, degrees: f64) -> Self {
        Self::new(magnitude, degrees.to_radians())
    }

    pub fn from_complex(z: Complex64) -> Self {
        Self::new(z.norm(), z.arg())
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.angle)
    }

    pub fn degrees(self) -> f64 {
        self.angle.to_degrees()
    }

    /// Relative magnitude error plus absolute angle error against `reference`.
    pub fn compare(self, reference: Phasor) -> (f64, f64) {
        let scale = reference.magnitude.max(f64::MIN_POSITIVE);
        (
            (self.magnitude - reference.magnitude).abs() / scale,
            angle_distance(self.angle, reference.angle),
        )
    }
}

impl From<Complex64> for Phasor {
    fn from(z: Complex64) -> Self {
        Self::from_complex(z)
    }
}

impl fmt::Display for Phasor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}∠{:.3}°", self.magnitude, self.degrees())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn negative_magnitude_flips_angle() {
        let p = Phasor::new(-2.0, 0.0);
        assert_eq!(p.magnitude, 2.0);
        assert!((p.angle - PI).abs() < 1e-15);
    }

    #[test]
    fn minus_pi_maps_to_pi() {
        assert_eq!(normalize_angle(-PI), PI);
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(0.0), 0.0);
    }

    #[test]
    fn complex_round_trip() {
        let p = Phasor::from_degrees(16.263, -45.0);
        let back = Phasor::from_complex(p.to_complex());
        let (dm, da) = back.compare(p);
        assert!(dm < 1e-14 && da < 1e-14);
    }

    proptest! {
        #[test]
        fn normalized_angle_in_range(a in -1e4f64..1e4) {
            let n = normalize_angle(a);
            prop_assert!(n > -PI && n <= PI);
            prop_assert!(((a - n) / (2.0 * PI)).round() * 2.0 * PI - (a - n) < 1e-9);
        }
    }
}
