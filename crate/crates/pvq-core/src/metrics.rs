//! The six evaluation metrics: MAE, MSE, RMSE, MAPE, VAF, R².

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor applied to |truth| in the MAPE denominator; MAPE is otherwise
/// unstable when true values approach zero.
pub const MAPE_EPS: f64 = 1e-8;

/// One prediction set's scores.
///
/// `vaf` is a percentage (100 = perfect fit); `r2` tops out at 1. Both need
/// at least two points and non-constant truth. When that fails they are NaN
/// and `variance_degenerate` is set.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    pub mape: f64,
    pub vaf: f64,
    pub r2: f64,
    pub variance_degenerate: bool,
}

impl MetricsReport {
    /// Flat `key = value` rendering for reports and files.
    pub fn to_kv(&self) -> String {
        format!(
            "mae = {}\nmse = {}\nrmse = {}\nmape = {}\nvaf = {}\nr2 = {}\nvariance_degenerate = {}\n",
            self.mae, self.mse, self.rmse, self.mape, self.vaf, self.r2, self.variance_degenerate
        )
    }
}

/// Scores `pred` against `truth`.
///
/// MAE = mean |x - y|; MSE = mean (x - y)^2; RMSE = sqrt(MSE);
/// MAPE = mean(|x - y| / max(|y|, eps)); VAF = (1 - Var(y - x)/Var(y)) * 100;
/// R² = 1 - sum((y - x)^2) / sum((y - ybar)^2). Variances are population
/// variances.
pub fn compute_metrics(pred: &[f64], truth: &[f64]) -> Result<MetricsReport> {
    if pred.len() != truth.len() {
        return Err(Error::shape(format!(
            "metrics need equal lengths, got {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    let n = pred.len();
    if n == 0 {
        return Err(Error::contract("metrics need at least one point"));
    }
    let nf = n as f64;

    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut mape_sum = 0.0;
    for (&x, &y) in pred.iter().zip(truth) {
        let d = x - y;
        abs_sum += d.abs();
        sq_sum += d * d;
        mape_sum += d.abs() / y.abs().max(MAPE_EPS);
    }
    let mae = abs_sum / nf;
    let mse = sq_sum / nf;
    let rmse = mse.sqrt();
    let mape = mape_sum / nf;

    let truth_mean = truth.iter().sum::<f64>() / nf;
    let truth_var = truth
        .iter()
        .map(|y| (y - truth_mean) * (y - truth_mean))
        .sum::<f64>()
        / nf;

    let (vaf, r2, degenerate) = if n < 2 || truth_var == 0.0 {
        (f64::NAN, f64::NAN, true)
    } else {
        let err_mean = pred
            .iter()
            .zip(truth)
            .map(|(x, y)| y - x)
            .sum::<f64>()
            / nf;
        let err_var = pred
            .iter()
            .zip(truth)
            .map(|(x, y)| {
                let e = y - x;
                (e - err_mean) * (e - err_mean)
            })
            .sum::<f64>()
            / nf;
        let vaf = (1.0 - err_var / truth_var) * 100.0;
        let r2 = 1.0 - sq_sum / (truth_var * nf);
        (vaf, r2, false)
    };

    Ok(MetricsReport {
        mae,
        mse,
        rmse,
        mape,
        vaf,
        r2,
        variance_degenerate: degenerate,
    })
}
