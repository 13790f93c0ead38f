//! Experiment harness: power and antenna-count sweeps with baseline and
//! optimized designs, moment verification, and single-scenario
//! optimization, all emitting deterministic CSV.
//!
//! Location sets for pair count K are derived from `(seed, K, set index)`
//! only, so every sweep value and both designs see the same geometry and
//! the improvement curves are comparable across the sweep.

use std::io::Write;

use rayon::prelude::*;

use crate::channel::{mc_rate_report, moment_suite, McEstimate, MomentReport};
use crate::error::{Error, Result};
use crate::optimizer::{grid_search, Grid};
use crate::propagation::{beta_profile, db_to_linear, Scenario};
use crate::rates::{rate_report, DesignPoint, SystemParams};
use crate::rng::{derive_seed, trial_rng};
use crate::scenario::{sample_scenario, PlacementConfig};

/// Seed-derivation domains, kept distinct per purpose.
const DOMAIN_PLACEMENT: u64 = 1;
const DOMAIN_CHANNEL: u64 = 2;
const DOMAIN_MOMENTS: u64 = 3;

/// Which quantity a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    /// Per-user transmit power in dB (1 W reference).
    UserPowerDb,
    /// Relay antenna count.
    NAntennas,
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::UserPowerDb => "user_power_db",
            SweepVariable::NAntennas => "n_antennas",
        }
    }
}

/// Specification of one sweep run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    /// Swept values, ascending.
    pub values: Vec<f64>,
    /// Pair counts to run, one block of rows each.
    pub k_pairs: Vec<usize>,
    pub n_location_sets: usize,
    pub n_channel_trials: usize,
    /// Evaluate only the baseline design.
    pub baseline_only: bool,
    /// Skip the Monte-Carlo verification columns.
    pub skip_mc: bool,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::invalid("sweep values must be non-empty"));
        }
        for w in self.values.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::invalid("sweep values must be strictly increasing"));
            }
        }
        if self.k_pairs.is_empty() {
            return Err(Error::invalid("k_pairs list must be non-empty"));
        }
        if self.n_location_sets == 0 || self.n_channel_trials == 0 {
            return Err(Error::invalid("location sets and trials must be >= 1"));
        }
        Ok(())
    }

    /// Default power sweep: 0..25 dB in 5 dB steps.
    pub fn power_values() -> Vec<f64> {
        vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0]
    }

    /// Default antenna sweep: 45..170 in six even steps.
    pub fn antenna_values() -> Vec<f64> {
        vec![45.0, 70.0, 95.0, 120.0, 145.0, 170.0]
    }
}

/// One CSV row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sweep_var: &'static str,
    pub value: f64,
    pub k_pairs: usize,
    /// "baseline" or "optimized".
    pub design: &'static str,
    pub analytic_sum_rate: f64,
    pub mc_sum_rate: Option<f64>,
    pub mc_std_error: Option<f64>,
    pub mean_rho_star: f64,
    pub mean_tilt_star: f64,
    /// 100 (optimized - baseline) / baseline on the analytic means; zero
    /// on baseline rows.
    pub improvement_pct: f64,
}

pub const SWEEP_HEADER: &str = "sweep_var,value,k_pairs,design,analytic_sum_rate,mc_sum_rate,mc_std_error,mean_rho_star,mean_tilt_star,improvement_pct";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_sweep_csv(rows: &[SweepRow], out: &mut dyn Write) -> Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.sweep_var,
            r.value,
            r.k_pairs,
            r.design,
            r.analytic_sum_rate,
            fmt_opt(r.mc_sum_rate),
            fmt_opt(r.mc_std_error),
            r.mean_rho_star,
            r.mean_tilt_star,
            r.improvement_pct
        )?;
    }
    Ok(())
}

/// Per-location-set evaluation of one (value, K) cell.
struct SetOutcome {
    baseline_sum: f64,
    optimized: Option<(DesignPoint, f64)>,
    mc_baseline: Option<McEstimate>,
    mc_optimized: Option<McEstimate>,
}

/// Runs a sweep and returns the rows in canonical order (K, then value,
/// then baseline before optimized). Writes CSV to `out`.
pub fn sweep(
    spec: &SweepSpec,
    placement: &PlacementConfig,
    base_params: &SystemParams,
    grid: &Grid,
    out: &mut dyn Write,
) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut rows = Vec::new();
    for &k in &spec.k_pairs {
        let placement_k = PlacementConfig {
            k_pairs: k,
            ..placement.clone()
        };
        // Same location sets for every sweep value and design.
        let scenarios: Vec<Scenario> = (0..spec.n_location_sets as u64)
            .map(|s| {
                let seed = derive_seed(spec.seed, &[DOMAIN_PLACEMENT, k as u64, s]);
                sample_scenario(&placement_k, &mut trial_rng(seed, 0))
            })
            .collect::<Result<Vec<_>>>()?;

        for (value_idx, &value) in spec.values.iter().enumerate() {
            let mut params = base_params.clone();
            params.k_pairs = k;
            match spec.variable {
                SweepVariable::UserPowerDb => params.p_s = db_to_linear(value)?,
                SweepVariable::NAntennas => {
                    if value.fract() != 0.0 || value < 1.0 {
                        return Err(Error::invalid(format!(
                            "antenna count must be a positive integer, got {value}"
                        )));
                    }
                    params.n_antennas = value as usize;
                }
            }

            let outcomes: Vec<SetOutcome> = scenarios
                .par_iter()
                .enumerate()
                .map(|(s, scenario)| -> Result<SetOutcome> {
                    let baseline = DesignPoint::baseline();
                    let profile =
                        beta_profile(scenario, baseline.tilt, &params.pattern, params.nu)?;
                    let baseline_sum = rate_report(&profile, baseline.rho, &params).sum_rate;
                    let optimized = if spec.baseline_only {
                        None
                    } else {
                        let result = grid_search(scenario, &params, grid)?;
                        Some((result.best, result.best_sum_rate))
                    };
                    let mc_seed = |design_id: u64| {
                        derive_seed(
                            spec.seed,
                            &[DOMAIN_CHANNEL, k as u64, s as u64, value_idx as u64, design_id],
                        )
                    };
                    let mc_baseline = if spec.skip_mc {
                        None
                    } else {
                        Some(
                            mc_rate_report(
                                scenario,
                                &baseline,
                                &params,
                                spec.n_channel_trials,
                                mc_seed(0),
                            )?
                            .sum_rate_estimate,
                        )
                    };
                    let mc_optimized = match (&optimized, spec.skip_mc) {
                        (Some((best, _)), false) => Some(
                            mc_rate_report(
                                scenario,
                                best,
                                &params,
                                spec.n_channel_trials,
                                mc_seed(1),
                            )?
                            .sum_rate_estimate,
                        ),
                        _ => None,
                    };
                    Ok(SetOutcome {
                        baseline_sum,
                        optimized,
                        mc_baseline,
                        mc_optimized,
                    })
                })
                .collect::<Result<Vec<_>>>()?;

            let n_sets = outcomes.len() as f64;
            let mean = |f: &dyn Fn(&SetOutcome) -> f64| -> f64 {
                outcomes.iter().map(|o| f(o)).sum::<f64>() / n_sets
            };
            let baseline_mean = mean(&|o| o.baseline_sum);
            let baseline = DesignPoint::baseline();

            let mc_summary = |pick: &dyn Fn(&SetOutcome) -> Option<McEstimate>| {
                let estimates: Vec<McEstimate> =
                    outcomes.iter().filter_map(|o| pick(o)).collect();
                if estimates.is_empty() {
                    return (None, None);
                }
                let means: Vec<f64> = estimates.iter().map(|e| e.mean).collect();
                let combined = McEstimate::from_samples(&means, spec.seed);
                // With a single location set the channel-level error is the
                // only spread available.
                let se = combined.std_error.or(estimates[0].std_error);
                (Some(combined.mean), se)
            };

            let (mc_base_mean, mc_base_se) = mc_summary(&|o| o.mc_baseline.clone());
            rows.push(SweepRow {
                sweep_var: spec.variable.name(),
                value,
                k_pairs: k,
                design: "baseline",
                analytic_sum_rate: baseline_mean,
                mc_sum_rate: mc_base_mean,
                mc_std_error: mc_base_se,
                mean_rho_star: baseline.rho,
                mean_tilt_star: baseline.tilt,
                improvement_pct: 0.0,
            });

            if !spec.baseline_only {
                let optimized_mean = mean(&|o| o.optimized.as_ref().unwrap().1);
                let rho_mean = mean(&|o| o.optimized.as_ref().unwrap().0.rho);
                let tilt_mean = mean(&|o| o.optimized.as_ref().unwrap().0.tilt);
                let (mc_opt_mean, mc_opt_se) = mc_summary(&|o| o.mc_optimized.clone());
                rows.push(SweepRow {
                    sweep_var: spec.variable.name(),
                    value,
                    k_pairs: k,
                    design: "optimized",
                    analytic_sum_rate: optimized_mean,
                    mc_sum_rate: mc_opt_mean,
                    mc_std_error: mc_opt_se,
                    mean_rho_star: rho_mean,
                    mean_tilt_star: tilt_mean,
                    improvement_pct: 100.0 * (optimized_mean - baseline_mean) / baseline_mean,
                });
            }
        }
    }
    write_sweep_csv(&rows, out)?;
    Ok(rows)
}

/// One row of the moment-verification table.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentRow {
    pub identity: &'static str,
    pub estimate: f64,
    pub target: f64,
    pub std_error: Option<f64>,
    pub z_score: Option<f64>,
}

pub const MOMENTS_HEADER: &str = "identity,estimate,target,std_error,z_score";

/// Runs the moment suite against the large-scale profile of a scenario
/// drawn from the seed (baseline tilt), and writes one row per identity.
pub fn verify_moments(
    n_antennas: usize,
    k_pairs: usize,
    n_trials: usize,
    seed: u64,
    out: &mut dyn Write,
) -> Result<Vec<MomentRow>> {
    let placement = PlacementConfig::new(k_pairs)?;
    let scen_seed = derive_seed(seed, &[DOMAIN_PLACEMENT, k_pairs as u64, 0]);
    let scenario = sample_scenario(&placement, &mut trial_rng(scen_seed, 0))?;
    let params = SystemParams::reference(n_antennas, k_pairs, 1.0)?;
    let baseline = DesignPoint::baseline();
    let profile = beta_profile(&scenario, baseline.tilt, &params.pattern, params.nu)?;

    let mc_seed = derive_seed(seed, &[DOMAIN_MOMENTS]);
    let report = moment_suite(n_antennas, k_pairs, &profile, n_trials, mc_seed)?;
    let rows = moment_rows(&report, n_antennas, k_pairs, &profile.beta_s);

    writeln!(out, "{MOMENTS_HEADER}")?;
    for r in &rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.identity,
            r.estimate,
            r.target,
            fmt_opt(r.std_error),
            fmt_opt(r.z_score)
        )?;
    }
    Ok(rows)
}

/// Tabulates a moment report against its analytic targets.
pub fn moment_rows(
    report: &MomentReport,
    n_antennas: usize,
    k_pairs: usize,
    beta_s: &[f64],
) -> Vec<MomentRow> {
    let n = n_antennas as f64;
    let sum_beta: f64 = beta_s.iter().sum();
    let mut rows = Vec::new();
    let mut push = |identity: &'static str, est: &McEstimate, target: f64| {
        let z_score = est
            .std_error
            .filter(|&se| se > 0.0)
            .map(|se| (est.mean - target) / se);
        rows.push(MomentRow {
            identity,
            estimate: est.mean,
            target,
            std_error: est.std_error,
            z_score,
        });
    };
    push("abs_h_fourth_moment", &report.e_h4, 2.0);
    push("right_singular_entry_sq", &report.e_v2, 1.0 / k_pairs as f64);
    push("singular_value_sq", &report.e_sigma2, n);
    push("channel_gram_trace", &report.e_trace, n * sum_beta);
    push(
        "column_energy_variance",
        &report.var_g_norm,
        n * beta_s[0] * beta_s[0],
    );
    if let Some(cross) = &report.e_cross {
        push("cross_column_moment", cross, n);
    }
    rows
}

pub const SURFACE_HEADER: &str = "rho,tilt,sum_rate";

/// Runs the grid search on one scenario and writes the full objective
/// surface as CSV (`rho,tilt,sum_rate` rows, rho-major order). The summary
/// record is the returned result; the CLI prints it.
pub fn optimize_once(
    scenario: &Scenario,
    params: &SystemParams,
    grid: &Grid,
    out: &mut dyn Write,
) -> Result<crate::optimizer::OptimizationResult> {
    let result = grid_search(scenario, params, grid)?;
    writeln!(out, "{SURFACE_HEADER}")?;
    for (i, &rho) in grid.rho_values().iter().enumerate() {
        for (j, &tilt) in grid.tilt_values().iter().enumerate() {
            writeln!(out, "{},{},{}", rho, tilt, result.surface[i][j])?;
        }
    }
    Ok(result)
}

/// Samples `count` scenarios and writes them under
/// `dir/scenario_###.txt`, returning the file paths.
pub fn generate_scenarios(
    config: &PlacementConfig,
    count: usize,
    seed: u64,
    dir: &std::path::Path,
) -> Result<Vec<std::path::PathBuf>> {
    if count == 0 {
        return Err(Error::invalid("count must be >= 1"));
    }
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(count);
    for s in 0..count as u64 {
        let scen_seed = derive_seed(seed, &[DOMAIN_PLACEMENT, config.k_pairs as u64, s]);
        let scenario = sample_scenario(config, &mut trial_rng(scen_seed, 0))?;
        let path = dir.join(format!("scenario_{s:03}.txt"));
        crate::scenario::save_scenario(&scenario, &path)?;
        paths.push(path);
    }
    Ok(paths)
}
