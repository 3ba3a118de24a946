//! Error metrics and evaluation reports.
//!
//! MAE and MAPE are computed on denormalized (currency-unit) values while
//! the testing loss stays in normalized units, matching the training
//! objective. Accuracy is defined as 1 - MAPE and can go negative when
//! MAPE exceeds 1; it is reported as-is and flagged in the text table.

use crate::error::{Error, Result};
use crate::models::Architecture;
use crate::numerics::Tensor;
use crate::training::{evaluate_mse, Checkpoint};

fn check_pair(pred: &[f64], actual: &[f64]) -> Result<()> {
    if pred.is_empty() {
        return Err(Error::argument("metric inputs must be nonempty"));
    }
    if pred.len() != actual.len() {
        return Err(Error::argument(format!(
            "prediction count {} does not match actual count {}",
            pred.len(),
            actual.len()
        )));
    }
    Ok(())
}

/// Mean absolute error: (1/n) sum |pred - actual|.
pub fn mae(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_pair(pred, actual)?;
    let sum: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a).abs()).sum();
    Ok(sum / pred.len() as f64)
}

/// Mean absolute percentage error: (1/n) sum |(pred - actual) / actual|.
///
/// A zero actual makes the ratio undefined and is an error rather than a
/// silently skipped point; positive-close ingestion keeps real data clear
/// of this.
pub fn mape(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_pair(pred, actual)?;
    let mut sum = 0.0;
    for (i, (p, a)) in pred.iter().zip(actual).enumerate() {
        if *a == 0.0 {
            return Err(Error::DivisionByZero { index: i });
        }
        sum += ((p - a) / a).abs();
    }
    Ok(sum / pred.len() as f64)
}

/// Accuracy as defined by the evaluation protocol: 1 - MAPE.
pub fn accuracy(mape_value: f64) -> f64 {
    1.0 - mape_value
}

/// One evaluation row per model run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub approach: Architecture,
    /// MSE on normalized values, the quantity training minimizes.
    pub testing_loss: f64,
    /// Currency units.
    pub mae: f64,
    /// Dimensionless ratio.
    pub mape: f64,
    pub accuracy: f64,
}

/// Scores a checkpoint on a test set. The loss is computed on normalized
/// values; MAE and MAPE on prices denormalized through the checkpoint's
/// scaler.
pub fn evaluate(
    checkpoint: &Checkpoint,
    test: &[crate::dataset::WindowSample],
) -> Result<EvalReport> {
    let testing_loss = evaluate_mse(&checkpoint.params, test)?;
    let inputs: Vec<&Tensor> = test.iter().map(|s| &s.inputs).collect();
    let preds = crate::models::model_predict(&checkpoint.params, &inputs)?;
    let denorm_pred: Vec<f64> =
        preds.iter().map(|&p| checkpoint.scaler.denormalize(p)).collect();
    let denorm_actual: Vec<f64> =
        test.iter().map(|s| checkpoint.scaler.denormalize(s.target)).collect();
    let mae = mae(&denorm_pred, &denorm_actual)?;
    let mape = mape(&denorm_pred, &denorm_actual)?;
    Ok(EvalReport {
        approach: checkpoint.params.arch,
        testing_loss,
        mae,
        mape,
        accuracy: accuracy(mape),
    })
}

/// CSV report, one row per run, comparison-table column order.
pub fn report_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("approach,testing_loss,mae,mape,accuracy\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.approach, r.testing_loss, r.mae, r.mape, r.accuracy
        ));
    }
    out
}

/// Aligned plain-text table with the same column order as the CSV.
/// Negative accuracy is flagged since it means MAPE exceeded 1.
pub fn report_table(reports: &[EvalReport]) -> String {
    let mut out = format!(
        "{:<12} {:>14} {:>12} {:>10} {:>10}\n",
        "Approach", "Testing loss", "MAE", "MAPE", "Accuracy"
    );
    for r in reports {
        let flag = if r.accuracy < 0.0 { "  (mape > 1)" } else { "" };
        out.push_str(&format!(
            "{:<12} {:>14.6} {:>12.4} {:>10.4} {:>10.4}{}\n",
            r.approach.name(),
            r.testing_loss,
            r.mae,
            r.mape,
            r.accuracy,
            flag
        ));
    }
    out
}
