use std::fs;

use online_coreset::sensitivity::{
    single_draw_weighted_sensitivity, uniform_sensitivities, ConstantAlgorithm, SelectionSampler,
};
use online_coreset::{estimate_average_sensitivity, EstimationMode};
use serde::{Deserialize, Serialize};

use crate::config::{Estimation, ExperimentConfig, Sampler};
use crate::error::HarnessError;

pub const REPORT_FILE: &str = "sensitivity.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityPoint {
    pub n: usize,
    pub beta: f64,
    pub error_bar: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub sampler: Sampler,
    pub estimation: Estimation,
    pub epsilon: f64,
    pub m: usize,
    pub points: Vec<SensitivityPoint>,
    /// Least-squares slope of `ln beta` against `ln n`; absent when some
    /// `beta` is zero or fewer than two sizes were measured.
    pub exponent: Option<f64>,
}

pub fn fitted_exponent(points: &[SensitivityPoint]) -> Option<f64> {
    if points.iter().any(|p| !(p.beta > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.beta.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

pub fn measure(config: &ExperimentConfig, n: usize) -> Result<SensitivityPoint, HarnessError> {
    let data: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let mode = match config.estimation {
        Estimation::Exhaustive => EstimationMode::Exhaustive,
        Estimation::MonteCarlo => EstimationMode::MonteCarlo {
            trials: config.trials,
        },
    };
    let seed = config.seeds.first().copied().unwrap_or(0);
    let est = match config.sampler {
        Sampler::Constant => estimate_average_sensitivity(&ConstantAlgorithm, &data, mode, seed)?,
        Sampler::Uniform => {
            let s = SelectionSampler::new(config.m, uniform_sensitivities::<f64>);
            estimate_average_sensitivity(&s, &data, mode, seed)?
        }
        Sampler::Weighted => {
            if config.estimation != Estimation::Exhaustive {
                return Err(HarnessError::config(
                    "estimation",
                    "the weighted sampler is only computed exactly",
                ));
            }
            let value = single_draw_weighted_sensitivity(
                &data,
                uniform_sensitivities::<f64>,
                config.epsilon,
            )?;
            return Ok(SensitivityPoint {
                n,
                beta: value,
                error_bar: 0.0,
            });
        }
    };
    Ok(SensitivityPoint {
        n,
        beta: est.value,
        error_bar: est.error_bar,
    })
}

pub fn sensitivity_report(config: &ExperimentConfig) -> Result<SensitivityReport, HarnessError> {
    config.validate()?;
    let points = config
        .sizes
        .iter()
        .map(|&n| measure(config, n))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SensitivityReport {
        sampler: config.sampler,
        estimation: config.estimation,
        epsilon: config.epsilon,
        m: config.m,
        exponent: fitted_exponent(&points),
        points,
    })
}

pub fn write_sensitivity_report(
    config: &ExperimentConfig,
) -> Result<SensitivityReport, HarnessError> {
    let report = sensitivity_report(config)?;
    fs::create_dir_all(&config.out)
        .map_err(|e| HarnessError::io(config.out.display().to_string(), e))?;
    let path = config.out.join(REPORT_FILE);
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    fs::write(&path, text).map_err(|e| HarnessError::io(path.display().to_string(), e))?;
    Ok(report)
}
