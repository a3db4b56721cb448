//! Link and target geometry, antenna patterns, and Fresnel-zone tests.
//!
//! Everything uses the link frame: origin at the TX antenna, `xi1` pointing
//! toward the RX along the line of sight (LoS), `xi2` horizontal-transverse,
//! `xi3` vertical up. The floor lies at `xi3 = -h`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("frequency must be positive, got {0} Hz")]
    NonPositiveFrequency(f64),
    #[error("link length must be positive, got {0} m")]
    NonPositiveLength(f64),
    #[error("link height must be positive, got {0} m")]
    NonPositiveHeight(f64),
    #[error("frequency grid must be non-empty, strictly increasing and positive")]
    BadFrequencyGrid,
    #[error("antenna gain exponent must be >= 0, got {0}")]
    BadGainExponent(f64),
    #[error("target sizes must satisfy w_s1 >= w_s2 > 0 and h_s > 0")]
    BadTargetSize,
    #[error("orientation must lie in [-pi/2, pi/2], got {0} rad")]
    BadOrientation(f64),
    #[error("antenna distance bound must lie in (0, d), got {0} m")]
    BadDistanceBound(f64),
}

/// Relative field-gain pattern of one antenna, boresight along the LoS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AntennaPattern {
    Omnidirectional,
    /// `cos^n` field-gain law toward the boresight, zero behind the antenna.
    Directional { gain_exponent: f64, max_gain_dbi: f64 },
}

impl AntennaPattern {
    pub fn validate(&self) -> Result<(), GeometryError> {
        match self {
            AntennaPattern::Omnidirectional => Ok(()),
            AntennaPattern::Directional { gain_exponent, .. } => {
                if gain_exponent.is_finite() && *gain_exponent >= 0.0 {
                    Ok(())
                } else {
                    Err(GeometryError::BadGainExponent(*gain_exponent))
                }
            }
        }
    }

    /// Relative field gain for a ray whose direction cosine w.r.t. the
    /// boresight is `cos_angle`. Unity on boresight, clamped to zero for
    /// directions more than 90 degrees off axis.
    pub fn relative_gain(&self, cos_angle: f64) -> f64 {
        match self {
            AntennaPattern::Omnidirectional => 1.0,
            AntennaPattern::Directional { gain_exponent, .. } => {
                if cos_angle <= 0.0 {
                    0.0
                } else {
                    cos_angle.min(1.0).powf(*gain_exponent)
                }
            }
        }
    }

    /// Boresight gain in dBi, used by the link budget.
    pub fn boresight_gain_dbi(&self) -> f64 {
        match self {
            AntennaPattern::Omnidirectional => 0.0,
            AntennaPattern::Directional { max_gain_dbi, .. } => *max_gain_dbi,
        }
    }
}

/// TX/RX placement and the measured frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    /// Link length in meters, TX to RX along the LoS.
    pub d: f64,
    /// LoS height above the floor in meters.
    pub h: f64,
    /// Strictly increasing frequencies in Hz.
    pub freq_grid: Vec<f64>,
    pub tx_pattern: AntennaPattern,
    pub rx_pattern: AntennaPattern,
}

impl LinkGeometry {
    pub fn new(
        d: f64,
        h: f64,
        freq_grid: Vec<f64>,
        tx_pattern: AntennaPattern,
        rx_pattern: AntennaPattern,
    ) -> Result<Self, GeometryError> {
        if !(d.is_finite() && d > 0.0) {
            return Err(GeometryError::NonPositiveLength(d));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(GeometryError::NonPositiveHeight(h));
        }
        if freq_grid.is_empty()
            || freq_grid.iter().any(|f| !f.is_finite() || *f <= 0.0)
            || freq_grid.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(GeometryError::BadFrequencyGrid);
        }
        tx_pattern.validate()?;
        rx_pattern.validate()?;
        Ok(Self { d, h, freq_grid, tx_pattern, rx_pattern })
    }

    /// Number of frequencies F.
    pub fn n_freq(&self) -> usize {
        self.freq_grid.len()
    }

    /// Distances from a link-frame point to the TX (origin) and the RX.
    pub fn path_lengths(&self, point: [f64; 3]) -> (f64, f64) {
        let [x1, x2, x3] = point;
        let r1 = (x1 * x1 + x2 * x2 + x3 * x3).sqrt();
        let dx = x1 - self.d;
        let r2 = (dx * dx + x2 * x2 + x3 * x3).sqrt();
        (r1, r2)
    }

    /// First-Fresnel-zone membership of the horizontal-plane projection
    /// `(x, y)` at LoS height: `r1 + r2 < d + lambda/2`, boundary excluded.
    pub fn in_first_fresnel(&self, freq: f64, x: f64, y: f64) -> Result<bool, GeometryError> {
        let lambda = wavelength(freq)?;
        let (r1, r2) = self.path_lengths([x, y, 0.0]);
        Ok(r1 + r2 < self.d + 0.5 * lambda)
    }

    /// Region label for a candidate position: `L1` when inside the first
    /// Fresnel ellipsoid and within `d_t` of the nearer antenna, `L0` when
    /// outside the ellipsoid, `Unassigned` otherwise (inside but far from
    /// both antennas; excluded from the detection experiment).
    pub fn classify_region(
        &self,
        freq: f64,
        x: f64,
        y: f64,
        d_t: f64,
    ) -> Result<RegionLabel, GeometryError> {
        if !(d_t.is_finite() && d_t > 0.0 && d_t < self.d) {
            return Err(GeometryError::BadDistanceBound(d_t));
        }
        if !self.in_first_fresnel(freq, x, y)? {
            return Ok(RegionLabel::L0);
        }
        let (r1, r2) = self.path_lengths([x, y, 0.0]);
        if r1.min(r2) <= d_t {
            Ok(RegionLabel::L1 { d_t })
        } else {
            Ok(RegionLabel::Unassigned)
        }
    }
}

/// Wavelength in meters for a positive frequency in Hz.
pub fn wavelength(freq: f64) -> Result<f64, GeometryError> {
    if !(freq.is_finite() && freq > 0.0) {
        return Err(GeometryError::NonPositiveFrequency(freq));
    }
    Ok(SPEED_OF_LIGHT / freq)
}

/// Body state: barycenter position, orientation and sheet dimensions of the
/// rectangular absorbing-sheet model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    /// Along-LoS coordinate from the TX, m.
    pub x: f64,
    /// Cross-LoS offset, m.
    pub y: f64,
    /// Rotation w.r.t. the LoS direction, rad, in [-pi/2, pi/2].
    pub phi: f64,
    /// Sheet height above the floor, m.
    pub h_s: f64,
    /// Maximum traversal size, m.
    pub w_s1: f64,
    /// Minimum traversal size, m.
    pub w_s2: f64,
}

impl TargetState {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.h_s > 0.0 && self.w_s2 > 0.0 && self.w_s1 >= self.w_s2) {
            return Err(GeometryError::BadTargetSize);
        }
        let half_pi = std::f64::consts::FRAC_PI_2;
        if !(self.phi >= -half_pi && self.phi <= half_pi) {
            return Err(GeometryError::BadOrientation(self.phi));
        }
        Ok(())
    }

    /// Feature vector `(x, y, phi, h_s, w_s1, w_s2)`.
    pub fn feature_vector(&self) -> [f64; 6] {
        [self.x, self.y, self.phi, self.h_s, self.w_s1, self.w_s2]
    }
}

/// Experiment region of a candidate position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RegionLabel {
    /// Outside the first Fresnel ellipsoid.
    L0,
    /// Inside the ellipsoid, within `d_t` of the nearer antenna.
    L1 { d_t: f64 },
    /// Inside the ellipsoid but beyond `d_t` of both antennas.
    Unassigned,
}

impl RegionLabel {
    pub fn is_l0(&self) -> bool {
        matches!(self, RegionLabel::L0)
    }

    pub fn is_l1(&self) -> bool {
        matches!(self, RegionLabel::L1 { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn band_2g4(n: usize) -> Vec<f64> {
        (0..n).map(|i| 2.4e9 + 1.0e8 * i as f64 / (n - 1).max(1) as f64).collect()
    }

    fn omni_link(d: f64, h: f64) -> LinkGeometry {
        LinkGeometry::new(
            d,
            h,
            band_2g4(3),
            AntennaPattern::Omnidirectional,
            AntennaPattern::Omnidirectional,
        )
        .unwrap()
    }

    #[test]
    fn wavelength_known_values() {
        assert_relative_eq!(wavelength(2.4e9).unwrap(), 0.12491352416666667, epsilon = 1e-12);
        assert_relative_eq!(wavelength(SPEED_OF_LIGHT).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(wavelength(2.5e9).unwrap(), 0.1199169832, epsilon = 1e-10);
    }

    #[test]
    fn wavelength_rejects_nonpositive() {
        assert!(wavelength(0.0).is_err());
        assert!(wavelength(-1.0).is_err());
        assert!(wavelength(f64::NAN).is_err());
    }

    #[test]
    fn wavelength_strictly_decreasing() {
        let mut prev = wavelength(1.0e9).unwrap();
        for i in 1..100 {
            let cur = wavelength(1.0e9 + 1.0e8 * i as f64).unwrap();
            assert!(cur < prev);
            prev = cur;
        }
    }

    #[test]
    fn path_lengths_examples() {
        let geom = omni_link(4.0, 1.0);
        let (r1, r2) = geom.path_lengths([2.0, 0.0, 0.0]);
        assert_relative_eq!(r1, 2.0);
        assert_relative_eq!(r2, 2.0);

        let (r1, r2) = geom.path_lengths([0.0, 0.0, 0.0]);
        assert_relative_eq!(r1, 0.0);
        assert_relative_eq!(r2, 4.0);

        let (r1, r2) = geom.path_lengths([1.0, 0.5, 0.0]);
        assert_relative_eq!(r1, 1.25f64.sqrt());
        assert_relative_eq!(r2, 9.25f64.sqrt());

        // r1 + r2 >= d for any point
        assert!(r1 + r2 >= geom.d);
    }

    #[test]
    fn fresnel_membership() {
        let geom = omni_link(4.0, 1.0);
        // On the LoS: r1 + r2 = d, inside for every frequency.
        assert!(geom.in_first_fresnel(2.45e9, 0.5, 0.0).unwrap());
        assert!(geom.in_first_fresnel(1.0e6, 3.9, 0.0).unwrap());
        // Far off axis: excess path >> lambda/2.
        assert!(!geom.in_first_fresnel(2.45e9, 2.0, 3.0).unwrap());
    }

    #[test]
    fn fresnel_boundary_is_outside() {
        let geom = omni_link(4.0, 1.0);
        let freq = 2.45e9;
        let lambda = wavelength(freq).unwrap();
        // Solve for the y giving exactly r1 + r2 = d + lambda/2 at x = d/2:
        // 2*sqrt((d/2)^2 + y^2) = d + lambda/2.
        let target = (geom.d + 0.5 * lambda) / 2.0;
        let y = (target * target - (geom.d / 2.0) * (geom.d / 2.0)).sqrt();
        let (r1, r2) = geom.path_lengths([2.0, y, 0.0]);
        // The construction is exact only up to rounding; nudge onto the
        // boundary and check the strict-inequality convention just outside.
        assert!(((r1 + r2) - (geom.d + 0.5 * lambda)).abs() < 1e-12);
        assert!(!geom.in_first_fresnel(freq, 2.0, y + 1e-9).unwrap());
    }

    #[test]
    fn classify_region_examples() {
        let geom = omni_link(4.0, 1.0);
        let f = 2.45e9;
        assert_eq!(geom.classify_region(f, 0.5, 0.0, 1.0).unwrap(), RegionLabel::L1 { d_t: 1.0 });
        assert_eq!(geom.classify_region(f, 2.0, 2.5, 1.0).unwrap(), RegionLabel::L0);
        assert_eq!(geom.classify_region(f, 2.0, 0.0, 1.0).unwrap(), RegionLabel::Unassigned);
        assert!(geom.classify_region(f, 2.0, 0.0, 0.0).is_err());
        assert!(geom.classify_region(f, 2.0, 0.0, 4.0).is_err());
    }

    #[test]
    fn classify_region_mirror_symmetry() {
        let geom = omni_link(4.0, 1.0);
        let f = 2.45e9;
        for &(x, y) in &[(0.5, 0.1), (1.0, 0.25), (2.0, 0.3), (3.1, -0.2), (0.25, 0.0)] {
            let a = geom.classify_region(f, x, y, 1.0).unwrap();
            let b = geom.classify_region(f, geom.d - x, y, 1.0).unwrap();
            let c = geom.classify_region(f, x, -y, 1.0).unwrap();
            assert_eq!(a, b, "TX/RX swap changed label at ({x},{y})");
            assert_eq!(a, c, "y mirror changed label at ({x},{y})");
        }
    }

    #[test]
    fn antenna_patterns() {
        let omni = AntennaPattern::Omnidirectional;
        assert_eq!(omni.relative_gain(1.0), 1.0);
        assert_eq!(omni.relative_gain(-0.3), 1.0);

        let dir = AntennaPattern::Directional { gain_exponent: 2.0, max_gain_dbi: 6.0 };
        assert_eq!(dir.relative_gain(1.0), 1.0);
        assert_relative_eq!(dir.relative_gain(0.5), 0.25);
        assert_eq!(dir.relative_gain(0.0), 0.0);
        assert_eq!(dir.relative_gain(-0.5), 0.0);
        assert!(AntennaPattern::Directional { gain_exponent: -1.0, max_gain_dbi: 0.0 }
            .validate()
            .is_err());
    }

    #[test]
    fn geometry_invariants_rejected() {
        let omni = AntennaPattern::Omnidirectional;
        assert!(LinkGeometry::new(0.0, 1.0, band_2g4(2), omni.clone(), omni.clone()).is_err());
        assert!(LinkGeometry::new(4.0, 0.0, band_2g4(2), omni.clone(), omni.clone()).is_err());
        assert!(LinkGeometry::new(4.0, 1.0, vec![], omni.clone(), omni.clone()).is_err());
        assert!(LinkGeometry::new(4.0, 1.0, vec![2.4e9, 2.4e9], omni.clone(), omni.clone())
            .is_err());
        assert!(LinkGeometry::new(4.0, 1.0, vec![-1.0], omni.clone(), omni).is_err());
    }

    #[test]
    fn target_state_validation() {
        let ok = TargetState { x: 1.0, y: 0.0, phi: 0.3, h_s: 1.8, w_s1: 0.55, w_s2: 0.25 };
        assert!(ok.validate().is_ok());
        assert!(TargetState { w_s1: 0.2, ..ok }.validate().is_err());
        assert!(TargetState { h_s: 0.0, ..ok }.validate().is_err());
        assert!(TargetState { phi: 2.0, ..ok }.validate().is_err());
        assert_eq!(ok.feature_vector(), [1.0, 0.0, 0.3, 1.8, 0.55, 0.25]);
    }
}
