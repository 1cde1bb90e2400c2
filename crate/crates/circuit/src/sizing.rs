//! Conductor cross-section selection by voltage drop.

use serde::{Deserialize, Serialize};

use crate::error::{CircuitError, Result};

pub const COPPER_RESISTIVITY: f64 = 1.72e-8;
pub const ALUMINIUM_RESISTIVITY: f64 = 2.82e-8;
/// Standard low-voltage cross-sections, mm².
pub const DEFAULT_CATALOG: [f64; 9] = [1.5, 2.5, 4.0, 6.0, 10.0, 16.0, 25.0, 35.0, 50.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Material {
    Copper,
    Aluminium,
}

impl Material {
    pub fn resistivity(self) -> f64 {
        match self {
            Material::Copper => COPPER_RESISTIVITY,
            Material::Aluminium => ALUMINIUM_RESISTIVITY,
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "copper" | "cu" => Some(Material::Copper),
            "aluminium" | "aluminum" | "al" => Some(Material::Aluminium),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConductorChoice {
    /// mm².
    pub cross_section: f64,
    /// Go-and-return resistance, Ω.
    pub resistance: f64,
    pub drop: f64,
    /// I²R, W.
    pub loss: f64,
}

/// Round-trip resistance `ρ·2L/A` of a route with `area_mm2` conductors.
pub fn route_resistance(length: f64, resistivity: f64, area_mm2: f64) -> f64 {
    resistivity * 2.0 * length / (area_mm2 * 1e-6)
}

/// Smallest catalog entry whose drop `I·R` stays within `allowed_drop`.
pub fn size_conductor(
    length: f64,
    current: f64,
    resistivity: f64,
    allowed_drop: f64,
    catalog: &[f64],
) -> Result<ConductorChoice> {
    let bad = |m: &str| Err(CircuitError::InvalidInput(m.to_string()));
    if !(length.is_finite() && length >= 0.0) {
        return bad("route length must be nonnegative");
    }
    if !(current.is_finite() && current > 0.0) {
        return bad("load current must be positive");
    }
    if !(resistivity.is_finite() && resistivity > 0.0) || !(allowed_drop.is_finite() && allowed_drop >= 0.0) {
        return bad("resistivity must be positive and allowed drop nonnegative");
    }
    if catalog.is_empty() || catalog.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return bad("catalog must hold positive cross-sections");
    }
    if catalog.windows(2).any(|w| w[1] <= w[0]) {
        return bad("catalog must be sorted ascending");
    }
    let choice = |area: f64| {
        let resistance = route_resistance(length, resistivity, area);
        ConductorChoice { cross_section: area, resistance, drop: current * resistance, loss: current * current * resistance }
    };
    catalog
        .iter()
        .map(|&a| choice(a))
        .find(|c| c.drop <= allowed_drop)
        .ok_or_else(|| CircuitError::NoAdmissibleSize {
            allowed: allowed_drop,
            largest_drop: choice(*catalog.last().expect("nonempty")).drop,
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn household_route() {
        let c = size_conductor(20.0, 16.0, COPPER_RESISTIVITY, 6.9, &[1.5, 2.5, 4.0, 6.0, 10.0]).unwrap();
        // 1.5 mm²: 0.4587 Ω → 7.34 V; 2.5 mm²: 0.2752 Ω → 4.40 V.
        assert_eq!(c.cross_section, 2.5);
        assert!((c.drop - 16.0 * 1.72e-8 * 40.0 / 2.5e-6).abs() < 1e-12);
    }

    #[test]
    fn edge_cases() {
        assert_eq!(size_conductor(20.0, 16.0, COPPER_RESISTIVITY, 1e9, &DEFAULT_CATALOG).unwrap().cross_section, 1.5);
        let zero = size_conductor(0.0, 16.0, COPPER_RESISTIVITY, 0.0, &DEFAULT_CATALOG).unwrap();
        assert_eq!((zero.cross_section, zero.drop, zero.loss), (1.5, 0.0, 0.0));
        assert!(matches!(
            size_conductor(1000.0, 100.0, ALUMINIUM_RESISTIVITY, 0.1, &DEFAULT_CATALOG),
            Err(CircuitError::NoAdmissibleSize { .. })
        ));
        assert!(size_conductor(1.0, 1.0, COPPER_RESISTIVITY, 1.0, &[2.5, 1.5]).is_err());
    }
}
