//! Random scenario generation and file persistence.
//!
//! User pairs are placed uniformly over an annular sector centered on the
//! X-axis: azimuth uniform over the span, horizontal radius drawn
//! uniform-in-area between the minimum horizontal distance and the radius
//! at which the slant distance reaches the maximum. Scenarios round-trip
//! through a plain `key = value` text format.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::propagation::{Scenario, DEFAULT_RELAY_HEIGHT};

/// Placement law for sampled scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementConfig {
    pub k_pairs: usize,
    /// Largest allowed slant (3D) distance from the relay, meters.
    pub max_distance: f64,
    /// Smallest allowed horizontal distance, meters.
    pub min_horizontal_distance: f64,
    /// Angular width of the coverage sector, radians, centered on the
    /// X-axis.
    pub azimuth_span: f64,
    pub relay_height: f64,
}

impl PlacementConfig {
    /// Coverage defaults: 10 m radius, 1 m inner keep-out, 120 degree
    /// sector, 3 m relay height.
    pub fn new(k_pairs: usize) -> Result<Self> {
        PlacementConfig::with_geometry(
            k_pairs,
            10.0,
            1.0,
            120f64.to_radians(),
            DEFAULT_RELAY_HEIGHT,
        )
    }

    pub fn with_geometry(
        k_pairs: usize,
        max_distance: f64,
        min_horizontal_distance: f64,
        azimuth_span: f64,
        relay_height: f64,
    ) -> Result<Self> {
        if k_pairs == 0 {
            return Err(Error::invalid("k_pairs must be >= 1"));
        }
        if !(min_horizontal_distance > 0.0 && min_horizontal_distance < max_distance) {
            return Err(Error::invalid(
                "need 0 < min_horizontal_distance < max_distance",
            ));
        }
        if !(azimuth_span > 0.0 && azimuth_span <= std::f64::consts::TAU) {
            return Err(Error::invalid("azimuth_span must be in (0, 2*pi]"));
        }
        if !(relay_height > 0.0) {
            return Err(Error::invalid("relay_height must be > 0"));
        }
        if relay_height >= max_distance {
            return Err(Error::invalid(
                "relay_height >= max_distance leaves no feasible placement",
            ));
        }
        let config = PlacementConfig {
            k_pairs,
            max_distance,
            min_horizontal_distance,
            azimuth_span,
            relay_height,
        };
        if config.max_horizontal_distance() <= config.min_horizontal_distance {
            return Err(Error::invalid(
                "min_horizontal_distance leaves no feasible annulus",
            ));
        }
        Ok(config)
    }

    /// Horizontal radius at which the slant distance hits `max_distance`.
    pub fn max_horizontal_distance(&self) -> f64 {
        (self.max_distance * self.max_distance - self.relay_height * self.relay_height).sqrt()
    }
}

/// Draws a scenario: 2K users placed independently, sources first. Each
/// user draws an azimuth then a radius, so a given rng state maps to
/// exactly one scenario.
pub fn sample_scenario(config: &PlacementConfig, rng: &mut ChaCha8Rng) -> Result<Scenario> {
    let r_min = config.min_horizontal_distance;
    let r_max = config.max_horizontal_distance();
    let half_span = config.azimuth_span / 2.0;
    let draw = |rng: &mut ChaCha8Rng| -> (f64, f64) {
        let phi = rng.random_range(-half_span..half_span);
        // Uniform over the annular sector area.
        let u: f64 = rng.random();
        let r = (r_min * r_min + u * (r_max * r_max - r_min * r_min)).sqrt();
        (r * phi.cos(), r * phi.sin())
    };
    let sources: Vec<(f64, f64)> = (0..config.k_pairs).map(|_| draw(rng)).collect();
    let dests: Vec<(f64, f64)> = (0..config.k_pairs).map(|_| draw(rng)).collect();
    Scenario::new(config.relay_height, sources, dests)
}

/// Serializes a scenario in the `key = value` text format, one assignment
/// per line. Coordinates are written with shortest round-trip precision.
pub fn scenario_to_string(scenario: &Scenario) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "relay_height = {}", scenario.relay_height());
    let _ = writeln!(out, "k_pairs = {}", scenario.k_pairs());
    for (k, (x, y)) in scenario.source_positions().iter().enumerate() {
        let _ = writeln!(out, "source_{}_x = {}", k + 1, x);
        let _ = writeln!(out, "source_{}_y = {}", k + 1, y);
    }
    for (k, (x, y)) in scenario.dest_positions().iter().enumerate() {
        let _ = writeln!(out, "dest_{}_x = {}", k + 1, x);
        let _ = writeln!(out, "dest_{}_y = {}", k + 1, y);
    }
    out
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, scenario_to_string(scenario))?;
    Ok(())
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    scenario_from_str(&fs::read_to_string(path)?)
}

/// Parses the `key = value` scenario format. Rejects malformed lines,
/// duplicate keys, unknown keys, and missing keys, naming the offender.
pub fn scenario_from_str(text: &str) -> Result<Scenario> {
    let entries = parse_key_values(text)?;
    let lookup = |key: &str| -> Result<f64> {
        let (line, raw) = entries
            .get(key)
            .ok_or_else(|| Error::parse(0, format!("missing key `{key}`")))?;
        raw.parse::<f64>()
            .map_err(|_| Error::parse(*line, format!("invalid number for `{key}`: `{raw}`")))
    };

    let relay_height = lookup("relay_height")?;
    let k_raw = lookup("k_pairs")?;
    if k_raw.fract() != 0.0 || k_raw < 1.0 {
        let line = entries.get("k_pairs").map(|e| e.0).unwrap_or(0);
        return Err(Error::parse(line, format!("k_pairs must be a positive integer, got `{k_raw}`")));
    }
    let k_pairs = k_raw as usize;

    let mut sources = Vec::with_capacity(k_pairs);
    let mut dests = Vec::with_capacity(k_pairs);
    for k in 1..=k_pairs {
        sources.push((lookup(&format!("source_{k}_x"))?, lookup(&format!("source_{k}_y"))?));
        dests.push((lookup(&format!("dest_{k}_x"))?, lookup(&format!("dest_{k}_y"))?));
    }

    // Anything left over is either an out-of-range user index or a typo.
    let expected = 2 + 4 * k_pairs;
    if entries.len() != expected {
        let mut extras: Vec<&str> = entries
            .keys()
            .map(String::as_str)
            .filter(|key| !is_expected_key(key, k_pairs))
            .collect();
        extras.sort_unstable();
        let key = extras.first().copied().unwrap_or("?");
        let line = entries.get(key).map(|e| e.0).unwrap_or(0);
        return Err(Error::parse(
            line,
            format!("key `{key}` does not match k_pairs = {k_pairs}"),
        ));
    }

    Scenario::new(relay_height, sources, dests)
}

fn is_expected_key(key: &str, k_pairs: usize) -> bool {
    if key == "relay_height" || key == "k_pairs" {
        return true;
    }
    for prefix in ["source_", "dest_"] {
        if let Some(rest) = key.strip_prefix(prefix) {
            for suffix in ["_x", "_y"] {
                if let Some(idx) = rest.strip_suffix(suffix) {
                    if let Ok(k) = idx.parse::<usize>() {
                        return k >= 1 && k <= k_pairs;
                    }
                }
            }
        }
    }
    false
}

/// Splits `key = value` lines into a map of key -> (1-based line, value).
/// Blank lines are allowed; duplicate keys are rejected. Shared by
/// scenario files and the CLI config format.
pub fn parse_key_values(text: &str) -> Result<HashMap<String, (usize, String)>> {
    let mut entries = HashMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(line_no, format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(Error::parse(line_no, "empty key or value"));
        }
        if entries.insert(key.clone(), (line_no, value)).is_some() {
            return Err(Error::parse(line_no, format!("duplicate key `{key}`")));
        }
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_rng;

    #[test]
    fn sampling_is_deterministic() {
        let config = PlacementConfig::new(4).unwrap();
        let a = sample_scenario(&config, &mut trial_rng(31, 0)).unwrap();
        let b = sample_scenario(&config, &mut trial_rng(31, 0)).unwrap();
        assert_eq!(a, b);
        let c = sample_scenario(&config, &mut trial_rng(32, 0)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sampled_distances_and_azimuths_stay_in_support() {
        let config = PlacementConfig::new(5).unwrap();
        for t in 0..200 {
            let scenario = sample_scenario(&config, &mut trial_rng(77, t)).unwrap();
            for geom in scenario
                .source_geometry()
                .iter()
                .chain(scenario.dest_geometry())
            {
                assert!(geom.distance > config.relay_height);
                assert!(geom.distance <= config.max_distance + 1e-12);
                assert!(geom.azimuth.abs() <= config.azimuth_span / 2.0);
                let horizontal =
                    (geom.distance.powi(2) - config.relay_height.powi(2)).sqrt();
                assert!(horizontal >= config.min_horizontal_distance - 1e-12);
            }
        }
    }

    #[test]
    fn infeasible_configs_are_rejected() {
        assert!(PlacementConfig::with_geometry(3, 10.0, 1.0, 2.0, 10.0).is_err());
        assert!(PlacementConfig::with_geometry(3, 10.0, 1.0, 2.0, 12.0).is_err());
        assert!(PlacementConfig::with_geometry(3, 10.0, 0.0, 2.0, 3.0).is_err());
        assert!(PlacementConfig::with_geometry(3, 10.0, 11.0, 2.0, 3.0).is_err());
        assert!(PlacementConfig::with_geometry(0, 10.0, 1.0, 2.0, 3.0).is_err());
        assert!(PlacementConfig::with_geometry(3, 10.0, 1.0, 7.0, 3.0).is_err());
        // min_horizontal above the feasible annulus: sqrt(100 - 81) = 4.36 < 5.
        assert!(PlacementConfig::with_geometry(3, 10.0, 5.0, 2.0, 9.0).is_err());
    }

    #[test]
    fn round_trip_preserves_every_field() {
        let config = PlacementConfig::new(3).unwrap();
        let scenario = sample_scenario(&config, &mut trial_rng(5, 9)).unwrap();
        let text = scenario_to_string(&scenario);
        let reloaded = scenario_from_str(&text).unwrap();
        assert_eq!(scenario, reloaded);
    }

    #[test]
    fn round_trip_through_a_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scenario.txt");
        let config = PlacementConfig::new(2).unwrap();
        let scenario = sample_scenario(&config, &mut trial_rng(1, 2)).unwrap();
        save_scenario(&scenario, &path).unwrap();
        assert_eq!(load_scenario(&path).unwrap(), scenario);
    }

    #[test]
    fn missing_key_is_named() {
        let text = "k_pairs = 1\nsource_1_x = 4\nsource_1_y = 0\ndest_1_x = 5\ndest_1_y = 1\n";
        let err = scenario_from_str(text).unwrap_err();
        assert!(err.to_string().contains("relay_height"), "{err}");
    }

    #[test]
    fn duplicate_key_is_rejected_with_line() {
        let text = "relay_height = 3\nrelay_height = 4\n";
        let err = scenario_from_str(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("duplicate key `relay_height`"), "{msg}");
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn user_index_beyond_k_pairs_is_rejected() {
        let text = concat!(
            "relay_height = 3\n",
            "k_pairs = 1\n",
            "source_1_x = 4\nsource_1_y = 0\n",
            "dest_1_x = 5\ndest_1_y = 1\n",
            "source_2_x = 6\nsource_2_y = 0\n",
        );
        let err = scenario_from_str(text).unwrap_err();
        assert!(err.to_string().contains("source_2_x"), "{err}");
    }

    #[test]
    fn malformed_line_is_rejected_with_line_number() {
        let err = scenario_from_str("relay_height 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 1"), "{msg}");
        let err = scenario_from_str("relay_height = 3\nk_pairs = x\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn azimuth_distribution_is_roughly_uniform() {
        // Coarse Kolmogorov-Smirnov check against U(-span/2, span/2).
        let config = PlacementConfig::new(1).unwrap();
        let mut azimuths = Vec::new();
        for t in 0..2000 {
            let s = sample_scenario(&config, &mut trial_rng(13, t)).unwrap();
            azimuths.push(s.source_geometry()[0].azimuth);
        }
        azimuths.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let span = config.azimuth_span;
        let n = azimuths.len() as f64;
        let mut d_max: f64 = 0.0;
        for (i, &phi) in azimuths.iter().enumerate() {
            let cdf = (phi + span / 2.0) / span;
            let emp_hi = (i as f64 + 1.0) / n;
            let emp_lo = i as f64 / n;
            d_max = d_max.max((cdf - emp_lo).abs()).max((emp_hi - cdf).abs());
        }
        // ~1.95/sqrt(n) is the 0.1% KS critical value; stay coarse.
        assert!(d_max < 2.5 / n.sqrt(), "KS statistic {d_max}");
    }
}
