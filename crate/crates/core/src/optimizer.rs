//! Joint grid search over (tilt, power-splitting ratio) maximizing the
//! closed-form average sum rate.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::propagation::{beta_profile, Scenario};
use crate::rates::{rate_report, DesignPoint, SystemParams};

/// Reference search step for the splitting ratio.
pub const DEFAULT_RHO_STEP: f64 = 0.0667;
/// Reference search step for the tilt, radians.
pub const DEFAULT_TILT_STEP: f64 = 0.1047;

/// Candidate values for both design variables, strictly interior to (0, 1)
/// and (0, pi/2), strictly increasing, no duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    rho_values: Vec<f64>,
    tilt_values: Vec<f64>,
    baseline_included: bool,
}

impl Grid {
    /// Builds a grid from explicit axis values.
    pub fn new(rho_values: Vec<f64>, tilt_values: Vec<f64>) -> Result<Self> {
        validate_axis(&rho_values, 1.0, "rho")?;
        validate_axis(&tilt_values, std::f64::consts::FRAC_PI_2, "tilt")?;
        Ok(Grid {
            rho_values,
            tilt_values,
            baseline_included: false,
        })
    }

    pub fn rho_values(&self) -> &[f64] {
        &self.rho_values
    }

    pub fn tilt_values(&self) -> &[f64] {
        &self.tilt_values
    }

    pub fn baseline_included(&self) -> bool {
        self.baseline_included
    }

    pub fn len(&self) -> usize {
        self.rho_values.len() * self.tilt_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn validate_axis(values: &[f64], upper: f64, name: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid(format!("{name} axis is empty")));
    }
    for &v in values {
        if !(v > 0.0 && v < upper) {
            return Err(Error::invalid(format!(
                "{name} value {v} outside the open interval (0, {upper})"
            )));
        }
    }
    for w in values.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invalid(format!(
                "{name} axis must be strictly increasing"
            )));
        }
    }
    Ok(())
}

/// Enumerates positive multiples of each step, staying at least half a
/// step away from the upper boundary so that a multiple which lands on the
/// boundary up to step rounding is excluded. With `include_baseline` the
/// reference point (0.5, pi/4) is merged in.
pub fn build_grid(rho_step: f64, tilt_step: f64, include_baseline: bool) -> Result<Grid> {
    let mut rho_values = enumerate_axis(rho_step, 1.0, "rho_step")?;
    let mut tilt_values = enumerate_axis(tilt_step, std::f64::consts::FRAC_PI_2, "tilt_step")?;
    if include_baseline {
        let baseline = DesignPoint::baseline();
        merge_value(&mut rho_values, baseline.rho);
        merge_value(&mut tilt_values, baseline.tilt);
    }
    let mut grid = Grid::new(rho_values, tilt_values)?;
    grid.baseline_included = include_baseline;
    Ok(grid)
}

fn enumerate_axis(step: f64, upper: f64, name: &str) -> Result<Vec<f64>> {
    if !(step > 0.0 && step < upper) {
        return Err(Error::invalid(format!(
            "{name} must be in (0, {upper}), got {step}"
        )));
    }
    let mut values = Vec::new();
    let mut m = 1u32;
    loop {
        let v = f64::from(m) * step;
        if v >= upper - step / 2.0 {
            break;
        }
        values.push(v);
        m += 1;
    }
    if values.is_empty() {
        return Err(Error::invalid(format!(
            "{name} = {step} leaves no interior grid point"
        )));
    }
    Ok(values)
}

fn merge_value(values: &mut Vec<f64>, v: f64) {
    if !values.iter().any(|&x| x == v) {
        values.push(v);
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
}

/// Outcome of a grid search: the best design, its sum rate, and the full
/// objective surface indexed `[rho_index][tilt_index]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best: DesignPoint,
    pub best_sum_rate: f64,
    pub surface: Vec<Vec<f64>>,
    pub evaluations: usize,
}

/// Evaluates the closed-form sum rate at every grid point, recomputing the
/// large-scale profile once per tilt, and returns the argmax. Ties break
/// toward the smallest rho, then the smallest tilt.
pub fn grid_search(
    scenario: &Scenario,
    params: &SystemParams,
    grid: &Grid,
) -> Result<OptimizationResult> {
    // One column of the surface per tilt; columns are independent.
    let columns: Vec<Vec<f64>> = grid
        .tilt_values
        .par_iter()
        .map(|&tilt| -> Result<Vec<f64>> {
            let profile = beta_profile(scenario, tilt, &params.pattern, params.nu)?;
            Ok(grid
                .rho_values
                .iter()
                .map(|&rho| rate_report(&profile, rho, params).sum_rate)
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;

    let surface: Vec<Vec<f64>> = (0..grid.rho_values.len())
        .map(|i| (0..grid.tilt_values.len()).map(|j| columns[j][i]).collect())
        .collect();

    let mut best_i = 0;
    let mut best_j = 0;
    let mut best_sum_rate = f64::NEG_INFINITY;
    for (i, row) in surface.iter().enumerate() {
        for (j, &value) in row.iter().enumerate() {
            if value > best_sum_rate {
                best_sum_rate = value;
                best_i = i;
                best_j = j;
            }
        }
    }

    Ok(OptimizationResult {
        best: DesignPoint {
            rho: grid.rho_values[best_i],
            tilt: grid.tilt_values[best_j],
        },
        best_sum_rate,
        surface,
        evaluations: grid.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn test_scenario() -> Scenario {
        Scenario::new(
            3.0,
            vec![(4.0, 0.5), (6.0, -1.0)],
            vec![(5.0, 1.0), (7.0, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn reference_rho_axis_has_14_points() {
        let grid = build_grid(DEFAULT_RHO_STEP, DEFAULT_TILT_STEP, false).unwrap();
        assert_eq!(grid.rho_values().len(), 14);
        assert_relative_eq!(grid.rho_values()[0], 0.0667, max_relative = 1e-12);
        assert_relative_eq!(grid.rho_values()[13], 0.9338, max_relative = 1e-12);
    }

    #[test]
    fn reference_tilt_axis_has_14_points() {
        // The 15th multiple of 0.1047 lands on pi/2 up to step rounding
        // and is excluded by the half-step boundary guard.
        let grid = build_grid(DEFAULT_RHO_STEP, DEFAULT_TILT_STEP, false).unwrap();
        assert_eq!(grid.tilt_values().len(), 14);
        assert!(grid.tilt_values()[13] < FRAC_PI_2);
        assert_relative_eq!(grid.tilt_values()[13], 14.0 * 0.1047, max_relative = 1e-12);
    }

    #[test]
    fn baseline_injection_adds_both_points() {
        let grid = build_grid(DEFAULT_RHO_STEP, DEFAULT_TILT_STEP, true).unwrap();
        assert!(grid.rho_values().contains(&0.5));
        assert!(grid.tilt_values().contains(&FRAC_PI_4));
        assert_eq!(grid.rho_values().len(), 15);
        assert_eq!(grid.tilt_values().len(), 15);
        assert!(grid.baseline_included());
        // Axes stay sorted after the merge.
        for w in grid.rho_values().windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn oversized_step_is_rejected() {
        assert!(build_grid(0.9, 0.1, false).is_err());
        assert!(build_grid(0.1, 1.5, false).is_err());
        assert!(build_grid(0.0, 0.1, false).is_err());
    }

    #[test]
    fn explicit_grid_validation() {
        assert!(Grid::new(vec![0.2, 0.1], vec![0.5]).is_err());
        assert!(Grid::new(vec![0.2, 0.2], vec![0.5]).is_err());
        assert!(Grid::new(vec![0.0], vec![0.5]).is_err());
        assert!(Grid::new(vec![0.2], vec![FRAC_PI_2]).is_err());
        assert!(Grid::new(vec![0.2], vec![0.5]).is_ok());
    }

    #[test]
    fn single_point_grid_returns_that_point() {
        let grid = Grid::new(vec![0.3], vec![0.6]).unwrap();
        let params = SystemParams::reference(64, 2, 1.0).unwrap();
        let result = grid_search(&test_scenario(), &params, &grid).unwrap();
        assert_eq!(result.best.rho, 0.3);
        assert_eq!(result.best.tilt, 0.6);
        assert_eq!(result.evaluations, 1);
        assert_eq!(result.surface.len(), 1);
        assert_eq!(result.best_sum_rate, result.surface[0][0]);
    }

    #[test]
    fn search_matches_exhaustive_re_evaluation() {
        let grid = Grid::new(vec![0.2, 0.4, 0.6, 0.8], vec![0.3, 0.6, 0.9, 1.2]).unwrap();
        let params = SystemParams::reference(64, 2, 1.0).unwrap();
        let scenario = test_scenario();
        let result = grid_search(&scenario, &params, &grid).unwrap();

        // Brute force in reversed order, applying the documented tie-break.
        let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
        for i in (0..grid.rho_values().len()).rev() {
            for j in (0..grid.tilt_values().len()).rev() {
                let profile = beta_profile(
                    &scenario,
                    grid.tilt_values()[j],
                    &params.pattern,
                    params.nu,
                )
                .unwrap();
                let sum = rate_report(&profile, grid.rho_values()[i], &params).sum_rate;
                if sum > best.0 || (sum == best.0 && (i, j) <= (best.1, best.2)) {
                    best = (sum, i, j);
                }
            }
        }
        assert_eq!(result.best_sum_rate, best.0);
        assert_eq!(result.best.rho, grid.rho_values()[best.1]);
        assert_eq!(result.best.tilt, grid.tilt_values()[best.2]);
        assert_eq!(result.evaluations, 16);
    }

    #[test]
    fn tie_breaks_toward_smallest_rho_then_tilt() {
        // A steep user sits far outside the elevation main lobe for every
        // tilt on the grid, so the elevation term clamps at the sidelobe
        // level and all tilt columns are exactly tied.
        let scenario = Scenario::new(3.0, vec![(1.0, 0.0)], vec![(1.0, 0.0)]).unwrap();
        let grid = Grid::new(vec![0.4, 0.6], vec![0.1, 0.2]).unwrap();
        let params = SystemParams::reference(64, 1, 1.0).unwrap();
        let result = grid_search(&scenario, &params, &grid).unwrap();
        for row in &result.surface {
            assert_eq!(row[0], row[1]);
        }
        // The tied maximum resolves to the smallest tilt.
        assert_eq!(result.best.tilt, 0.1);
        let max = result
            .surface
            .iter()
            .flatten()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(result.best_sum_rate, max);
    }

    #[test]
    fn baseline_in_grid_lower_bounds_the_optimum() {
        let params = SystemParams::reference(64, 2, 1.0).unwrap();
        let scenario = test_scenario();
        let grid = build_grid(DEFAULT_RHO_STEP, DEFAULT_TILT_STEP, true).unwrap();
        let result = grid_search(&scenario, &params, &grid).unwrap();
        let baseline = DesignPoint::baseline();
        let profile =
            beta_profile(&scenario, baseline.tilt, &params.pattern, params.nu).unwrap();
        let base_sum = rate_report(&profile, baseline.rho, &params).sum_rate;
        assert!(result.best_sum_rate >= base_sum);
    }

    #[test]
    fn adding_points_never_decreases_the_optimum() {
        let params = SystemParams::reference(64, 2, 1.0).unwrap();
        let scenario = test_scenario();
        let small = Grid::new(vec![0.3, 0.6], vec![0.4, 0.8]).unwrap();
        let large = Grid::new(vec![0.2, 0.3, 0.6, 0.7], vec![0.4, 0.6, 0.8, 1.0]).unwrap();
        let a = grid_search(&scenario, &params, &small).unwrap();
        let b = grid_search(&scenario, &params, &large).unwrap();
        assert!(b.best_sum_rate >= a.best_sum_rate);
    }
}
