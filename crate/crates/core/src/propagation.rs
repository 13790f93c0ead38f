//! Geometry and large-scale fading.
//!
//! Computes per-user spherical angles and distances from 3D positions,
//! evaluates the 3GPP-style directional antenna gain for a given tilt, and
//! assembles the large-scale coefficient vectors used by the rate
//! expressions.
//!
//! Conventions: the relay array sits at height `relay_height` above the
//! origin of the ground plane. The elevation angle `theta` of a user is
//! measured downward from the horizon, so `theta = atan(relay_height / r)`
//! for horizontal distance `r`, and the tilt shares the same convention.
//! The azimuth `phi` is measured from the X-axis via the two-argument
//! arctangent of the ground coordinates. All dB-to-linear conversions use
//! the power convention `10^(x/10)`.

use crate::error::{Error, Result};

/// Default relay array height in meters. The coverage geometry is
/// small-cell scale (10 m radius), so a lamppost-height array is assumed.
pub const DEFAULT_RELAY_HEIGHT: f64 = 3.0;

/// Directional antenna gain model with independently clamped azimuth and
/// elevation attenuation terms.
///
/// Gain in dBi is `-(min[12 (phi/phi_3db)^2, sll_az] + min[12
/// ((theta-tilt)/theta_3db)^2, sll_el])`, so it is always in
/// `[-(sll_az + sll_el), 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaPattern {
    /// Sidelobe level in the horizontal plane, dB (positive).
    pub sll_az_db: f64,
    /// Sidelobe level in the vertical plane, dB (positive).
    pub sll_el_db: f64,
    /// 3-dB beamwidth in the horizontal plane, radians.
    pub phi_3db: f64,
    /// 3-dB beamwidth in the vertical plane, radians.
    pub theta_3db: f64,
    /// Azimuth of the beam peak, radians. Fixed at 0 (the X-axis) in the
    /// reference configuration.
    pub boresight_azimuth: f64,
}

impl Default for AntennaPattern {
    /// Reference pattern: 25 dB / 20 dB sidelobe levels and 65 deg / 6 deg
    /// beamwidths in azimuth and elevation, beam peak on the X-axis.
    fn default() -> Self {
        AntennaPattern {
            sll_az_db: 25.0,
            sll_el_db: 20.0,
            phi_3db: 65f64.to_radians(),
            theta_3db: 6f64.to_radians(),
            boresight_azimuth: 0.0,
        }
    }
}

impl AntennaPattern {
    pub fn new(sll_az_db: f64, sll_el_db: f64, phi_3db: f64, theta_3db: f64) -> Result<Self> {
        if !(sll_az_db > 0.0 && sll_el_db > 0.0) {
            return Err(Error::invalid("sidelobe levels must be > 0 dB"));
        }
        if !(phi_3db > 0.0 && theta_3db > 0.0) {
            return Err(Error::invalid("3-dB beamwidths must be > 0"));
        }
        Ok(AntennaPattern {
            sll_az_db,
            sll_el_db,
            phi_3db,
            theta_3db,
            boresight_azimuth: 0.0,
        })
    }

    /// Largest possible attenuation in dB (both terms clamped).
    pub fn max_attenuation_db(&self) -> f64 {
        self.sll_az_db + self.sll_el_db
    }
}

/// Spherical geometry of one user as seen from the relay array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserGeometry {
    /// 3D (slant) distance from the array to the user, meters.
    pub distance: f64,
    /// Elevation angle below the horizon toward the user, radians, in
    /// (0, pi/2).
    pub elevation: f64,
    /// Azimuth from the X-axis in the horizontal plane, radians, in
    /// (-pi, pi].
    pub azimuth: f64,
}

/// Converts a dB value to linear scale using the power convention
/// `10^(x/10)`.
pub fn db_to_linear(db: f64) -> Result<f64> {
    if !db.is_finite() {
        return Err(Error::invalid(format!("non-finite dB value: {db}")));
    }
    Ok(10f64.powf(db / 10.0))
}

/// Derives the slant distance, elevation, and azimuth of a user on the
/// ground plane.
///
/// Fails for non-positive relay heights and for users placed exactly below
/// the array, where the azimuth is undefined.
pub fn user_geometry(relay_height: f64, user_xy: (f64, f64)) -> Result<UserGeometry> {
    if !(relay_height > 0.0) || !relay_height.is_finite() {
        return Err(Error::invalid(format!(
            "relay height must be positive and finite, got {relay_height}"
        )));
    }
    let (x, y) = user_xy;
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::invalid("user coordinates must be finite"));
    }
    let horizontal = x.hypot(y);
    if horizontal == 0.0 {
        return Err(Error::invalid(
            "user directly below the relay: azimuth undefined",
        ));
    }
    Ok(UserGeometry {
        distance: horizontal.hypot(relay_height),
        elevation: (relay_height / horizontal).atan(),
        azimuth: y.atan2(x),
    })
}

/// Directional antenna gain in dBi for one user at the given tilt.
///
/// The azimuth and elevation attenuations clamp independently at their
/// sidelobe levels, so the result lies in `[-(sll_az + sll_el), 0]`.
/// `tilt` is expected in (0, pi/2).
pub fn antenna_gain_dbi(geom: &UserGeometry, tilt: f64, pattern: &AntennaPattern) -> f64 {
    let az_offset = geom.azimuth - pattern.boresight_azimuth;
    let el_offset = geom.elevation - tilt;
    let att_az = (12.0 * (az_offset / pattern.phi_3db).powi(2)).min(pattern.sll_az_db);
    let att_el = (12.0 * (el_offset / pattern.theta_3db).powi(2)).min(pattern.sll_el_db);
    -(att_az + att_el)
}

/// Large-scale coefficient `beta = d^(-nu) * 10^(A_dBi / 10)` for one user.
pub fn large_scale_coeff(
    geom: &UserGeometry,
    tilt: f64,
    pattern: &AntennaPattern,
    nu: f64,
) -> Result<f64> {
    if !(geom.distance > 0.0) {
        return Err(Error::invalid(format!(
            "distance must be positive, got {}",
            geom.distance
        )));
    }
    if !(nu > 0.0) {
        return Err(Error::invalid(format!(
            "path-loss exponent must be positive, got {nu}"
        )));
    }
    let gain_dbi = antenna_gain_dbi(geom, tilt, pattern);
    Ok(geom.distance.powf(-nu) * 10f64.powf(gain_dbi / 10.0))
}

/// Relay pose plus the ground positions of the K source and K destination
/// users, with their derived spherical geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    relay_height: f64,
    source_positions: Vec<(f64, f64)>,
    dest_positions: Vec<(f64, f64)>,
    source_geometry: Vec<UserGeometry>,
    dest_geometry: Vec<UserGeometry>,
}

impl Scenario {
    /// Builds a scenario and derives per-user geometry. Requires equal,
    /// non-zero user counts on both sides and rejects degenerate
    /// placements (user exactly below the relay).
    pub fn new(
        relay_height: f64,
        source_positions: Vec<(f64, f64)>,
        dest_positions: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if source_positions.is_empty() {
            return Err(Error::invalid("scenario needs at least one user pair"));
        }
        if source_positions.len() != dest_positions.len() {
            return Err(Error::invalid(format!(
                "source/destination count mismatch: {} vs {}",
                source_positions.len(),
                dest_positions.len()
            )));
        }
        let source_geometry = source_positions
            .iter()
            .map(|&xy| user_geometry(relay_height, xy))
            .collect::<Result<Vec<_>>>()?;
        let dest_geometry = dest_positions
            .iter()
            .map(|&xy| user_geometry(relay_height, xy))
            .collect::<Result<Vec<_>>>()?;
        Ok(Scenario {
            relay_height,
            source_positions,
            dest_positions,
            source_geometry,
            dest_geometry,
        })
    }

    pub fn relay_height(&self) -> f64 {
        self.relay_height
    }

    /// Number of source-destination pairs K.
    pub fn k_pairs(&self) -> usize {
        self.source_positions.len()
    }

    pub fn source_positions(&self) -> &[(f64, f64)] {
        &self.source_positions
    }

    pub fn dest_positions(&self) -> &[(f64, f64)] {
        &self.dest_positions
    }

    pub fn source_geometry(&self) -> &[UserGeometry] {
        &self.source_geometry
    }

    pub fn dest_geometry(&self) -> &[UserGeometry] {
        &self.dest_geometry
    }
}

/// Large-scale coefficient vectors for both user groups at one tilt.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScaleProfile {
    /// Tilt the profile was evaluated at, radians.
    pub tilt: f64,
    /// Source-side coefficients, one per pair, linear scale.
    pub beta_s: Vec<f64>,
    /// Destination-side coefficients, one per pair, linear scale.
    pub beta_d: Vec<f64>,
}

impl LargeScaleProfile {
    pub fn k_pairs(&self) -> usize {
        self.beta_s.len()
    }

    pub fn sum_beta_s(&self) -> f64 {
        self.beta_s.iter().sum()
    }

    pub fn sum_beta_d(&self) -> f64 {
        self.beta_d.iter().sum()
    }
}

/// Evaluates the large-scale coefficient for every user of a scenario at
/// the given tilt. Entry `k` of each vector corresponds to user pair `k`.
pub fn beta_profile(
    scenario: &Scenario,
    tilt: f64,
    pattern: &AntennaPattern,
    nu: f64,
) -> Result<LargeScaleProfile> {
    let beta_s = scenario
        .source_geometry()
        .iter()
        .map(|g| large_scale_coeff(g, tilt, pattern, nu))
        .collect::<Result<Vec<_>>>()?;
    let beta_d = scenario
        .dest_geometry()
        .iter()
        .map(|g| large_scale_coeff(g, tilt, pattern, nu))
        .collect::<Result<Vec<_>>>()?;
    Ok(LargeScaleProfile {
        tilt,
        beta_s,
        beta_d,
    })
}
