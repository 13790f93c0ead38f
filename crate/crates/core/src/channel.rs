//! Monte-Carlo engine: Rayleigh-fading channel sampling, instantaneous
//! matched-filter SINRs for both phases, trial-averaged rate estimates, and
//! the random-matrix moment suite backing the closed-form layer.
//!
//! Trials are mutually independent: trial `t` draws from ChaCha stream `t`
//! of the run seed, and per-trial samples are collected in trial order
//! before a fixed-order compensated reduction. Results are therefore
//! bit-identical for any worker count.

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::propagation::{beta_profile, LargeScaleProfile, Scenario};
use crate::rates::{harvested_power, mrt_power_coeff, DesignPoint, RateReport, SystemParams};
use crate::rng::trial_rng;

type C64 = Complex<f64>;

/// One fading block: source-side and destination-side channel matrices,
/// each N x K with column k scaled by sqrt(beta_k).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub g_s: DMatrix<C64>,
    pub g_d: DMatrix<C64>,
}

/// A Monte-Carlo estimate with its standard error. `std_error` is `None`
/// when fewer than two trials contributed.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: Option<f64>,
    pub n_trials: usize,
    pub seed: u64,
}

/// Compensated (Kahan) sum over a slice, evaluated in slice order.
fn kahan_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for &v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

impl McEstimate {
    /// Builds mean and standard error from per-trial samples, reducing in
    /// sample order.
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len();
        assert!(n >= 1, "estimate needs at least one sample");
        let mean = kahan_sum(samples) / n as f64;
        let std_error = if n >= 2 {
            let sq: Vec<f64> = samples.iter().map(|&x| (x - mean) * (x - mean)).collect();
            let var = kahan_sum(&sq) / (n - 1) as f64;
            Some((var / n as f64).sqrt())
        } else {
            None
        };
        McEstimate {
            mean,
            std_error,
            n_trials: n,
            seed,
        }
    }
}

/// Draws one fading block. The small-scale entries are circularly
/// symmetric complex Gaussian with unit variance (independent real and
/// imaginary parts of variance 1/2); column k of each matrix is scaled by
/// sqrt of the corresponding large-scale coefficient. Fill order is fixed
/// (source matrix first, column-major) so a given rng state maps to
/// exactly one realization.
pub fn sample_channel(
    profile: &LargeScaleProfile,
    n_antennas: usize,
    rng: &mut ChaCha8Rng,
) -> ChannelRealization {
    let g_s = sample_scaled_matrix(&profile.beta_s, n_antennas, rng);
    let g_d = sample_scaled_matrix(&profile.beta_d, n_antennas, rng);
    ChannelRealization { g_s, g_d }
}

fn sample_scaled_matrix(betas: &[f64], n_antennas: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(n_antennas, betas.len());
    for (k, &beta) in betas.iter().enumerate() {
        let scale = beta.sqrt();
        for i in 0..n_antennas {
            m[(i, k)] = scale * sample_cn01(rng);
        }
    }
    m
}

/// One draw of a standard circularly symmetric complex Gaussian.
fn sample_cn01(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(rand_distr::StandardNormal);
    let im: f64 = rng.sample(rand_distr::StandardNormal);
    C64::new(re * std::f64::consts::FRAC_1_SQRT_2, im * std::f64::consts::FRAC_1_SQRT_2)
}

fn column_interference(g: &DMatrix<C64>, k: usize) -> f64 {
    let gk = g.column(k);
    let mut acc = 0.0;
    for j in 0..g.ncols() {
        if j != k {
            acc += gk.dotc(&g.column(j)).norm_sqr();
        }
    }
    acc
}

/// Instantaneous first-phase SINR of pair `k` after matched-filter
/// combining:
/// `rho p_s |g_k|^4 / (rho p_s sum_{j != k} |g_k^H g_j|^2 + |g_k|^2 sigma2_r)`.
pub fn mrc_sinr_instant(g_s: &DMatrix<C64>, k: usize, rho: f64, params: &SystemParams) -> f64 {
    let norm2 = g_s.column(k).norm_squared();
    if norm2 == 0.0 {
        return 0.0;
    }
    let signal = rho * params.p_s * norm2 * norm2;
    let interference = rho * params.p_s * column_interference(g_s, k);
    signal / (interference + norm2 * params.sigma2_r)
}

/// Instantaneous second-phase SINR of pair `k` under conjugate precoding
/// with relay power `p_relay` and normalization `alpha`:
/// `P a^2 |g_k|^4 / (P a^2 sum_{j != k} |g_k^H g_j|^2 + sigma2_d)`.
pub fn mrt_sinr_instant(
    g_d: &DMatrix<C64>,
    k: usize,
    p_relay: f64,
    alpha: f64,
    params: &SystemParams,
) -> f64 {
    let norm2 = g_d.column(k).norm_squared();
    if norm2 == 0.0 {
        return 0.0;
    }
    let gain = p_relay * alpha * alpha;
    let signal = gain * norm2 * norm2;
    let interference = gain * column_interference(g_d, k);
    signal / (interference + params.sigma2_d)
}

/// How the relay transmit power is set inside the Monte-Carlo loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarvestModel {
    /// Closed-form average harvest, held constant across trials (default).
    Average,
    /// Per-trial harvest `eta (1 - rho) p_s trace(G_s G_s^H)`, for
    /// sensitivity studies.
    Instantaneous,
}

/// Empirical rate report plus per-pair and sum-rate estimates with
/// standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct McRateReport {
    /// Trial-averaged SINRs and rates in the analytic report's shape. The
    /// pair entries average the per-trial minimum, so they are bounded
    /// above by the minimum of the per-phase averages.
    pub report: RateReport,
    pub pair_estimates: Vec<McEstimate>,
    pub sum_rate_estimate: McEstimate,
}

/// Trial-averaged achievable rates under matched-filter beamforming.
///
/// Each trial draws fresh fading for both phases, computes the per-pair
/// instantaneous rates `min(log2(1 + mrc), log2(1 + mrt))`, and the
/// averages are reduced in trial order. The relay power and precoder
/// normalization come from the closed-form profile quantities.
pub fn mc_rate_report(
    scenario: &Scenario,
    design: &DesignPoint,
    params: &SystemParams,
    n_trials: usize,
    seed: u64,
) -> Result<McRateReport> {
    mc_rate_report_with(scenario, design, params, n_trials, seed, HarvestModel::Average)
}

/// As [`mc_rate_report`], with an explicit relay-power model.
pub fn mc_rate_report_with(
    scenario: &Scenario,
    design: &DesignPoint,
    params: &SystemParams,
    n_trials: usize,
    seed: u64,
    harvest: HarvestModel,
) -> Result<McRateReport> {
    if n_trials == 0 {
        return Err(Error::invalid("n_trials must be >= 1"));
    }
    let profile = beta_profile(scenario, design.tilt, &params.pattern, params.nu)?;
    let k_pairs = profile.k_pairs();
    let p_relay_avg = harvested_power(&profile, design.rho, params);
    let alpha = mrt_power_coeff(&profile, params.n_antennas);
    let prelog = if params.half_duplex_prelog { 0.5 } else { 1.0 };

    struct TrialSample {
        sinr_mac: Vec<f64>,
        sinr_bc: Vec<f64>,
        rate_mac: Vec<f64>,
        rate_bc: Vec<f64>,
        rate_pair: Vec<f64>,
        sum_rate: f64,
    }

    let trials: Vec<TrialSample> = (0..n_trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let ch = sample_channel(&profile, params.n_antennas, &mut rng);
            let p_relay = match harvest {
                HarvestModel::Average => p_relay_avg,
                HarvestModel::Instantaneous => {
                    let trace: f64 = (0..k_pairs).map(|k| ch.g_s.column(k).norm_squared()).sum();
                    params.eta * (1.0 - design.rho) * params.p_s * trace
                }
            };
            let mut sample = TrialSample {
                sinr_mac: Vec::with_capacity(k_pairs),
                sinr_bc: Vec::with_capacity(k_pairs),
                rate_mac: Vec::with_capacity(k_pairs),
                rate_bc: Vec::with_capacity(k_pairs),
                rate_pair: Vec::with_capacity(k_pairs),
                sum_rate: 0.0,
            };
            for k in 0..k_pairs {
                let gm = mrc_sinr_instant(&ch.g_s, k, design.rho, params);
                let gb = mrt_sinr_instant(&ch.g_d, k, p_relay, alpha, params);
                let rm = prelog * (1.0 + gm).log2();
                let rb = prelog * (1.0 + gb).log2();
                let rp = rm.min(rb);
                sample.sinr_mac.push(gm);
                sample.sinr_bc.push(gb);
                sample.rate_mac.push(rm);
                sample.rate_bc.push(rb);
                sample.rate_pair.push(rp);
                sample.sum_rate += rp;
            }
            sample
        })
        .collect();

    let per_pair_column = |f: &dyn Fn(&TrialSample, usize) -> f64, k: usize| -> Vec<f64> {
        trials.iter().map(|t| f(t, k)).collect()
    };
    let mean_of = |col: &[f64]| kahan_sum(col) / n_trials as f64;

    let mut report = RateReport {
        sinr_mac: Vec::with_capacity(k_pairs),
        sinr_bc: Vec::with_capacity(k_pairs),
        rate_mac: Vec::with_capacity(k_pairs),
        rate_bc: Vec::with_capacity(k_pairs),
        rate_pair: Vec::with_capacity(k_pairs),
        sum_rate: 0.0,
    };
    let mut pair_estimates = Vec::with_capacity(k_pairs);
    for k in 0..k_pairs {
        report
            .sinr_mac
            .push(mean_of(&per_pair_column(&|t, k| t.sinr_mac[k], k)));
        report
            .sinr_bc
            .push(mean_of(&per_pair_column(&|t, k| t.sinr_bc[k], k)));
        report
            .rate_mac
            .push(mean_of(&per_pair_column(&|t, k| t.rate_mac[k], k)));
        report
            .rate_bc
            .push(mean_of(&per_pair_column(&|t, k| t.rate_bc[k], k)));
        let pair_col = per_pair_column(&|t, k| t.rate_pair[k], k);
        let est = McEstimate::from_samples(&pair_col, seed);
        report.rate_pair.push(est.mean);
        pair_estimates.push(est);
    }
    let sum_col: Vec<f64> = trials.iter().map(|t| t.sum_rate).collect();
    let sum_rate_estimate = McEstimate::from_samples(&sum_col, seed);
    report.sum_rate = sum_rate_estimate.mean;

    Ok(McRateReport {
        report,
        pair_estimates,
        sum_rate_estimate,
    })
}

/// Estimates of the random-matrix identities used by the closed forms.
///
/// Targets: `E|h|^4 = 2`, `E|v_ij|^2 = 1/K` for any fixed entry of the
/// right singular-vector factor, `E sigma_i^2 = N` for the (exchangeable)
/// squared singular values, `E trace(G_s G_s^H) = N sum(beta_s)`,
/// `Var|g_k|^2 = N beta_k^2`, and `E|h_k^H h_j|^2 = N` for j != k.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    /// Fourth absolute moment of one small-scale entry.
    pub e_h4: McEstimate,
    /// Squared magnitude of the (0,0) entry of the right singular-vector
    /// factor.
    pub e_v2: McEstimate,
    /// Squared singular values averaged over the K indices per trial.
    pub e_sigma2: McEstimate,
    /// Trace of `G_s G_s^H`.
    pub e_trace: McEstimate,
    /// Sample variance of `|g_0|^2` across trials; `mean` holds the
    /// variance estimate, `std_error` its large-sample standard error.
    pub var_g_norm: McEstimate,
    /// Cross moment `|h_0^H h_1|^2`; absent when K = 1.
    pub e_cross: Option<McEstimate>,
    /// Trials dropped because the singular-value decomposition failed.
    pub n_discarded: usize,
}

/// Runs the moment suite: per trial, samples an unscaled small-scale
/// matrix, takes its singular-value decomposition, and accumulates the
/// estimates listed on [`MomentReport`].
pub fn moment_suite(
    n_antennas: usize,
    k_pairs: usize,
    profile: &LargeScaleProfile,
    n_trials: usize,
    seed: u64,
) -> Result<MomentReport> {
    if n_trials == 0 {
        return Err(Error::invalid("n_trials must be >= 1"));
    }
    if profile.k_pairs() != k_pairs {
        return Err(Error::invalid(format!(
            "profile has {} pairs, expected {k_pairs}",
            profile.k_pairs()
        )));
    }

    struct TrialSample {
        h4: f64,
        v2: f64,
        sigma2: f64,
        trace: f64,
        g0_norm2: f64,
        cross: f64,
    }

    let samples: Vec<Option<TrialSample>> = (0..n_trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let h = sample_scaled_matrix(&vec![1.0; k_pairs], n_antennas, &mut rng);

            let entries = (n_antennas * k_pairs) as f64;
            let h4 = h.iter().map(|z| z.norm_sqr() * z.norm_sqr()).sum::<f64>() / entries;

            let svd = h.clone().svd(false, true);
            let v_t = match svd.v_t {
                Some(v_t) => v_t,
                None => return None,
            };
            // v_t is the conjugate transpose of V, so |v_t[(0,0)]| = |v[(0,0)]|.
            let v2 = v_t[(0, 0)].norm_sqr();
            let sigma2 = svd.singular_values.iter().map(|s| s * s).sum::<f64>() / k_pairs as f64;

            let trace: f64 = (0..k_pairs)
                .map(|k| profile.beta_s[k] * h.column(k).norm_squared())
                .sum();
            let g0_norm2 = profile.beta_s[0] * h.column(0).norm_squared();
            let cross = if k_pairs >= 2 {
                h.column(0).dotc(&h.column(1)).norm_sqr()
            } else {
                0.0
            };
            Some(TrialSample {
                h4,
                v2,
                sigma2,
                trace,
                g0_norm2,
                cross,
            })
        })
        .collect();

    let n_discarded = samples.iter().filter(|s| s.is_none()).count();
    let kept: Vec<&TrialSample> = samples.iter().flatten().collect();
    if kept.is_empty() {
        return Err(Error::invalid("all trials discarded"));
    }

    let collect = |f: &dyn Fn(&TrialSample) -> f64| -> Vec<f64> {
        kept.iter().map(|s| f(s)).collect()
    };
    let e_h4 = McEstimate::from_samples(&collect(&|s| s.h4), seed);
    let e_v2 = McEstimate::from_samples(&collect(&|s| s.v2), seed);
    let e_sigma2 = McEstimate::from_samples(&collect(&|s| s.sigma2), seed);
    let e_trace = McEstimate::from_samples(&collect(&|s| s.trace), seed);
    let e_cross = if k_pairs >= 2 {
        Some(McEstimate::from_samples(&collect(&|s| s.cross), seed))
    } else {
        None
    };
    let var_g_norm = variance_estimate(&collect(&|s| s.g0_norm2), seed);

    Ok(MomentReport {
        e_h4,
        e_v2,
        e_sigma2,
        e_trace,
        var_g_norm,
        e_cross,
        n_discarded,
    })
}

/// Sample variance with its large-sample standard error
/// `sqrt((m4 - s^4) / n)`.
fn variance_estimate(samples: &[f64], seed: u64) -> McEstimate {
    let n = samples.len();
    let mean = kahan_sum(samples) / n as f64;
    let centered2: Vec<f64> = samples.iter().map(|&x| (x - mean) * (x - mean)).collect();
    if n < 2 {
        return McEstimate {
            mean: 0.0,
            std_error: None,
            n_trials: n,
            seed,
        };
    }
    let var = kahan_sum(&centered2) / (n - 1) as f64;
    let m4 = centered2.iter().map(|&c2| c2 * c2).sum::<f64>() / n as f64;
    let se = ((m4 - var * var).max(0.0) / n as f64).sqrt();
    McEstimate {
        mean: var,
        std_error: Some(se),
        n_trials: n,
        seed,
    }
}
