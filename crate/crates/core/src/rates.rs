//! Closed-form layer: harvested relay power, average-SINR lower bounds for
//! both relaying phases, and the per-pair and sum achievable rates.
//!
//! The bounds come from channel hardening: the received-signal norm is
//! split into its mean and a fluctuation treated as noise, which yields
//! closed forms in the large-scale coefficients alone. They tighten as the
//! antenna count N grows. All arithmetic is in linear scale; dB conversion
//! happens only at I/O boundaries.

use crate::error::{Error, Result};
use crate::propagation::{AntennaPattern, LargeScaleProfile};

/// System-level constants: array size, pair count, transmit power, noise
/// powers, harvesting efficiency, path-loss exponent, and the antenna
/// pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Number of relay antennas N.
    pub n_antennas: usize,
    /// Number of source-destination pairs K.
    pub k_pairs: usize,
    /// Per-source transmit power, watts.
    pub p_s: f64,
    /// RF-to-DC conversion efficiency, in (0, 1].
    pub eta: f64,
    /// Effective information-decoding noise power at the relay, linear.
    pub sigma2_r: f64,
    /// Noise power at each destination user, linear.
    pub sigma2_d: f64,
    /// Path-loss exponent.
    pub nu: f64,
    /// Directional pattern of the relay array.
    pub pattern: AntennaPattern,
    /// Apply the 1/2 half-duplex pre-log factor to all rates. Off by
    /// default: the reported rates are per-phase spectral efficiencies.
    pub half_duplex_prelog: bool,
}

impl SystemParams {
    pub fn new(
        n_antennas: usize,
        k_pairs: usize,
        p_s: f64,
        eta: f64,
        sigma2_r: f64,
        sigma2_d: f64,
        nu: f64,
    ) -> Result<Self> {
        if n_antennas == 0 || k_pairs == 0 {
            return Err(Error::invalid("n_antennas and k_pairs must be >= 1"));
        }
        if !(p_s > 0.0) {
            return Err(Error::invalid(format!("p_s must be > 0, got {p_s}")));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::invalid(format!("eta must be in (0, 1], got {eta}")));
        }
        if !(sigma2_r > 0.0 && sigma2_d > 0.0) {
            return Err(Error::invalid("noise powers must be > 0"));
        }
        if !(nu > 0.0) {
            return Err(Error::invalid(format!("nu must be > 0, got {nu}")));
        }
        Ok(SystemParams {
            n_antennas,
            k_pairs,
            p_s,
            eta,
            sigma2_r,
            sigma2_d,
            nu,
            pattern: AntennaPattern::default(),
            half_duplex_prelog: false,
        })
    }

    /// Reference configuration: eta = 0.5, relay ID noise -70 dB,
    /// destination noise -50 dB, path-loss exponent 3.76, default pattern.
    pub fn reference(n_antennas: usize, k_pairs: usize, p_s: f64) -> Result<Self> {
        SystemParams::new(n_antennas, k_pairs, p_s, 0.5, 1e-7, 1e-5, 3.76)
    }

    pub fn with_pattern(mut self, pattern: AntennaPattern) -> Self {
        self.pattern = pattern;
        self
    }
}

/// One candidate design: power-splitting ratio and array tilt, both
/// strictly interior to their ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignPoint {
    /// Fraction of received power routed to information decoding, in (0, 1).
    pub rho: f64,
    /// Array tilt, radians, in (0, pi/2).
    pub tilt: f64,
}

impl DesignPoint {
    pub fn new(rho: f64, tilt: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::invalid(format!("rho must be in (0, 1), got {rho}")));
        }
        if !(tilt > 0.0 && tilt < std::f64::consts::FRAC_PI_2) {
            return Err(Error::invalid(format!(
                "tilt must be in (0, pi/2), got {tilt}"
            )));
        }
        Ok(DesignPoint { rho, tilt })
    }

    /// Mid-range reference design: rho = 0.5, tilt = pi/4.
    pub fn baseline() -> Self {
        DesignPoint {
            rho: 0.5,
            tilt: std::f64::consts::FRAC_PI_4,
        }
    }
}

/// Per-pair SINRs and rates plus the sum rate, in bits/s/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// First-phase (users-to-relay) SINR per pair, linear.
    pub sinr_mac: Vec<f64>,
    /// Second-phase (relay-to-destinations) SINR per pair, linear.
    pub sinr_bc: Vec<f64>,
    pub rate_mac: Vec<f64>,
    pub rate_bc: Vec<f64>,
    /// Per-pair end-to-end rate, the minimum of the two phases.
    pub rate_pair: Vec<f64>,
    pub sum_rate: f64,
}

/// Average power harvested by the relay per unit time:
/// `eta * (1 - rho) * p_s * N * sum(beta_s)`.
pub fn harvested_power(profile: &LargeScaleProfile, rho: f64, params: &SystemParams) -> f64 {
    debug_assert!(rho > 0.0 && rho < 1.0);
    params.eta * (1.0 - rho) * params.p_s * params.n_antennas as f64 * profile.sum_beta_s()
}

/// Transmit normalization of the conjugate precoder so the relay's average
/// output power equals its harvested power: `alpha = 1 / sqrt(N * sum(beta_d))`.
pub fn mrt_power_coeff(profile: &LargeScaleProfile, n_antennas: usize) -> f64 {
    1.0 / (n_antennas as f64 * profile.sum_beta_d()).sqrt()
}

/// Lower bound on the average first-phase SINR of pair `k` (0-based):
/// `N b_k / (b_k + sum_{j != k} b_j + sigma2_r / (rho p_s))` with
/// `b = beta_s`.
pub fn sinr_mac_lb(k: usize, profile: &LargeScaleProfile, rho: f64, params: &SystemParams) -> f64 {
    debug_assert!(rho > 0.0 && rho < 1.0);
    let beta_k = profile.beta_s[k];
    let interference: f64 = profile.sum_beta_s() - beta_k;
    let noise = params.sigma2_r / (rho * params.p_s);
    params.n_antennas as f64 * beta_k / (beta_k + interference + noise)
}

/// Lower bound on the average second-phase SINR of pair `k` (0-based):
/// `N b_k / (b_k + sum_{j != k} b_j + sigma2_d * sum(b) /
/// (eta (1 - rho) p_s N b_k * sum(beta_s)))` with `b = beta_d`.
pub fn sinr_bc_lb(k: usize, profile: &LargeScaleProfile, rho: f64, params: &SystemParams) -> f64 {
    debug_assert!(rho > 0.0 && rho < 1.0);
    let n = params.n_antennas as f64;
    let beta_k = profile.beta_d[k];
    let interference = profile.sum_beta_d() - beta_k;
    let noise = params.sigma2_d * profile.sum_beta_d()
        / (params.eta * (1.0 - rho) * params.p_s * n * beta_k * profile.sum_beta_s());
    n * beta_k / (beta_k + interference + noise)
}

/// Evaluates both SINR bounds for every pair and assembles rates:
/// `rate = log2(1 + sinr)` per phase, per-pair rate is the entrywise
/// minimum, and the sum rate totals the pairs.
pub fn rate_report(profile: &LargeScaleProfile, rho: f64, params: &SystemParams) -> RateReport {
    let k_pairs = profile.k_pairs();
    let prelog = if params.half_duplex_prelog { 0.5 } else { 1.0 };
    let mut sinr_mac = Vec::with_capacity(k_pairs);
    let mut sinr_bc = Vec::with_capacity(k_pairs);
    let mut rate_mac = Vec::with_capacity(k_pairs);
    let mut rate_bc = Vec::with_capacity(k_pairs);
    let mut rate_pair = Vec::with_capacity(k_pairs);
    let mut sum_rate = 0.0;
    for k in 0..k_pairs {
        let gm = sinr_mac_lb(k, profile, rho, params);
        let gb = sinr_bc_lb(k, profile, rho, params);
        let rm = prelog * (1.0 + gm).log2();
        let rb = prelog * (1.0 + gb).log2();
        let rp = rm.min(rb);
        sinr_mac.push(gm);
        sinr_bc.push(gb);
        rate_mac.push(rm);
        rate_bc.push(rb);
        rate_pair.push(rp);
        sum_rate += rp;
    }
    RateReport {
        sinr_mac,
        sinr_bc,
        rate_mac,
        rate_bc,
        rate_pair,
        sum_rate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn uniform_profile(k: usize, beta_s: f64, beta_d: f64) -> LargeScaleProfile {
        LargeScaleProfile {
            tilt: 0.5,
            beta_s: vec![beta_s; k],
            beta_d: vec![beta_d; k],
        }
    }

    #[test]
    fn harvested_power_worked_example() {
        // eta=0.5, rho=0.5, p_s=1, N=100, sum(beta_s)=1e-3 -> 0.025 W.
        let profile = uniform_profile(5, 2e-4, 2e-4);
        let params = SystemParams::reference(100, 5, 1.0).unwrap();
        assert_relative_eq!(
            harvested_power(&profile, 0.5, &params),
            0.025,
            max_relative = 1e-12
        );
    }

    #[test]
    fn harvested_power_vanishes_as_rho_approaches_one() {
        let profile = uniform_profile(3, 1e-3, 1e-3);
        let params = SystemParams::reference(64, 3, 1.0).unwrap();
        let p = harvested_power(&profile, 1.0 - 1e-12, &params);
        assert!(p < 1e-10);
    }

    #[test]
    fn harvested_power_single_pair_form() {
        let beta = 3.7e-4;
        let profile = uniform_profile(1, beta, beta);
        let params = SystemParams::new(128, 1, 2.0, 0.6, 1e-7, 1e-5, 3.0).unwrap();
        assert_relative_eq!(
            harvested_power(&profile, 0.25, &params),
            0.6 * 0.75 * 2.0 * 128.0 * beta,
            max_relative = 1e-12
        );
    }

    #[test]
    fn harvested_power_is_linear_in_its_factors() {
        let profile = uniform_profile(4, 1e-4, 1e-4);
        let base = SystemParams::reference(100, 4, 1.0).unwrap();
        let p0 = harvested_power(&profile, 0.5, &base);
        let double_p = SystemParams::reference(100, 4, 2.0).unwrap();
        assert_relative_eq!(
            harvested_power(&profile, 0.5, &double_p),
            2.0 * p0,
            max_relative = 1e-12
        );
        let double_n = SystemParams::reference(200, 4, 1.0).unwrap();
        assert_relative_eq!(
            harvested_power(&profile, 0.5, &double_n),
            2.0 * p0,
            max_relative = 1e-12
        );
        // Linear in (1 - rho): harvest at rho=0.75 is half of rho=0.5.
        assert_relative_eq!(
            harvested_power(&profile, 0.75, &base),
            0.5 * p0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn mac_sinr_worked_example() {
        let profile = uniform_profile(5, 1e-3, 1e-3);
        let params = SystemParams::reference(100, 5, 1.0).unwrap();
        let sinr = sinr_mac_lb(0, &profile, 0.5, &params);
        assert_relative_eq!(sinr, 0.1 / (5e-3 + 2e-7), max_relative = 1e-12);
        assert_relative_eq!(sinr, 19.999200031998723, max_relative = 1e-10);
    }

    #[test]
    fn mac_sinr_symmetric_interference_limit() {
        // Noise term negligible: SINR -> N/K.
        let profile = uniform_profile(4, 1.0, 1.0);
        let params = SystemParams::new(100, 4, 1e9, 0.5, 1e-7, 1e-5, 3.76).unwrap();
        let sinr = sinr_mac_lb(2, &profile, 0.5, &params);
        assert_relative_eq!(sinr, 25.0, max_relative = 1e-6);
    }

    #[test]
    fn mac_sinr_single_pair_has_no_interference() {
        let beta = 4e-4;
        let profile = uniform_profile(1, beta, beta);
        let params = SystemParams::reference(64, 1, 1.0).unwrap();
        let sinr = sinr_mac_lb(0, &profile, 0.3, &params);
        assert_relative_eq!(
            sinr,
            64.0 * beta / (beta + 1e-7 / 0.3),
            max_relative = 1e-12
        );
    }

    #[test]
    fn bc_sinr_worked_example() {
        let profile = uniform_profile(5, 1e-3, 1e-3);
        let params = SystemParams::reference(100, 5, 1.0).unwrap();
        let sinr = sinr_bc_lb(0, &profile, 0.5, &params);
        assert_relative_eq!(sinr, 0.1 / (5e-3 + 4e-4), max_relative = 1e-12);
        assert_relative_eq!(sinr, 18.51851851851852, max_relative = 1e-10);
    }

    #[test]
    fn bc_sinr_symmetric_reduction() {
        // With uniform beta_d the sum over beta_d cancels against beta_k:
        // N b / (K b + sigma2_d / (eta (1-rho) p_s N beta_s)).
        let (bs, bd) = (2e-4, 7e-4);
        let profile = uniform_profile(3, bs, bd);
        let params = SystemParams::reference(80, 3, 2.0).unwrap();
        let rho = 0.4;
        let expected = 80.0 * bd
            / (3.0 * bd + 1e-5 / (0.5 * (1.0 - rho) * 2.0 * 80.0 * (3.0 * bs)));
        assert_relative_eq!(
            sinr_bc_lb(1, &profile, rho, &params),
            expected,
            max_relative = 1e-12
        );
    }

    #[test]
    fn bc_sinr_collapses_without_harvested_power() {
        let profile = uniform_profile(5, 1e-3, 1e-3);
        let params = SystemParams::reference(100, 5, 1.0).unwrap();
        let sinr = sinr_bc_lb(0, &profile, 1.0 - 1e-13, &params);
        assert!(sinr < 1e-8);
    }

    #[test]
    fn rate_report_worked_example() {
        let profile = uniform_profile(5, 1e-3, 1e-3);
        let params = SystemParams::reference(100, 5, 1.0).unwrap();
        let report = rate_report(&profile, 0.5, &params);
        // BC is the bottleneck: pair rate = log2(1 + 18.5185) per pair.
        assert_relative_eq!(report.rate_pair[0], 4.286880251226439, max_relative = 1e-10);
        assert_relative_eq!(report.sum_rate, 5.0 * report.rate_pair[0], max_relative = 1e-12);
        assert!((report.sum_rate - 21.43).abs() < 0.01);
        for k in 0..5 {
            assert_eq!(report.rate_pair[k], report.rate_mac[k].min(report.rate_bc[k]));
        }
    }

    #[test]
    fn rate_report_zero_sinr_gives_zero_rates() {
        // Vanishing large-scale coefficients drive every SINR to ~0.
        let profile = uniform_profile(2, 1e-300, 1e-300);
        let params = SystemParams::reference(100, 2, 1.0).unwrap();
        let report = rate_report(&profile, 0.5, &params);
        for k in 0..2 {
            assert!(report.rate_pair[k] < 1e-12);
        }
        assert!(report.sum_rate < 1e-11);
    }

    #[test]
    fn rate_report_deep_sidelobe_pair_contributes_nothing() {
        let mut profile = uniform_profile(3, 1e-3, 1e-3);
        profile.beta_s[1] = 1e-300;
        let params = SystemParams::reference(100, 3, 1.0).unwrap();
        let report = rate_report(&profile, 0.5, &params);
        assert!(report.rate_pair[1] < 1e-12);
        assert!(report.rate_pair[0] > 1.0);
        assert!(report.rate_pair[2] > 1.0);
    }

    #[test]
    fn half_duplex_prelog_halves_rates() {
        let profile = uniform_profile(5, 1e-3, 1e-3);
        let mut params = SystemParams::reference(100, 5, 1.0).unwrap();
        let full = rate_report(&profile, 0.5, &params);
        params.half_duplex_prelog = true;
        let half = rate_report(&profile, 0.5, &params);
        assert_relative_eq!(half.sum_rate, 0.5 * full.sum_rate, max_relative = 1e-12);
    }

    #[test]
    fn mac_sinr_increases_with_rho_and_bc_decreases() {
        let profile = uniform_profile(4, 3e-4, 5e-4);
        let params = SystemParams::reference(100, 4, 1.0).unwrap();
        let mut last_mac = 0.0;
        let mut last_bc = f64::INFINITY;
        for rho in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let mac = sinr_mac_lb(0, &profile, rho, &params);
            let bc = sinr_bc_lb(0, &profile, rho, &params);
            assert!(mac > last_mac);
            assert!(bc < last_bc);
            last_mac = mac;
            last_bc = bc;
        }
    }

    #[test]
    fn sinrs_increase_with_antenna_count() {
        let profile = uniform_profile(4, 3e-4, 5e-4);
        let small = SystemParams::reference(50, 4, 1.0).unwrap();
        let large = SystemParams::reference(200, 4, 1.0).unwrap();
        assert!(sinr_mac_lb(0, &profile, 0.5, &large) > sinr_mac_lb(0, &profile, 0.5, &small));
        assert!(sinr_bc_lb(0, &profile, 0.5, &large) > sinr_bc_lb(0, &profile, 0.5, &small));
    }

    #[test]
    fn params_validation() {
        assert!(SystemParams::new(0, 5, 1.0, 0.5, 1e-7, 1e-5, 3.76).is_err());
        assert!(SystemParams::new(100, 5, 0.0, 0.5, 1e-7, 1e-5, 3.76).is_err());
        assert!(SystemParams::new(100, 5, 1.0, 1.5, 1e-7, 1e-5, 3.76).is_err());
        assert!(SystemParams::new(100, 5, 1.0, 0.5, 0.0, 1e-5, 3.76).is_err());
        assert!(DesignPoint::new(0.0, 0.5).is_err());
        assert!(DesignPoint::new(1.0, 0.5).is_err());
        assert!(DesignPoint::new(0.5, 0.0).is_err());
        assert!(DesignPoint::new(0.5, std::f64::consts::FRAC_PI_2).is_err());
        assert!(DesignPoint::new(0.5, 0.5).is_ok());
    }
}
