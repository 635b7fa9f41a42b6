use crate::dataset::{Dataset, Target};
use crate::error::{Result, SlmError};
use crate::tree::Prediction;

fn check_len(ds: &Dataset, preds: &[Prediction]) -> Result<()> {
    if ds.n_samples() != preds.len() {
        return Err(SlmError::DimensionMismatch {
            expected: ds.n_samples(),
            found: preds.len(),
        });
    }
    Ok(())
}

/// Fraction of correctly classified samples.
pub fn accuracy(ds: &Dataset, preds: &[Prediction]) -> Result<f64> {
    check_len(ds, preds)?;
    let labels = ds.labels().ok_or_else(|| SlmError::TaskMismatch {
        model: "classification".into(),
        data: "regression".into(),
    })?;
    let hits = labels
        .iter()
        .zip(preds)
        .filter(|(&y, p)| p.class() == Some(y))
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

pub fn rmse(ds: &Dataset, preds: &[Prediction]) -> Result<f64> {
    check_len(ds, preds)?;
    let values = ds.values().ok_or_else(|| SlmError::TaskMismatch {
        model: "regression".into(),
        data: "classification".into(),
    })?;
    let mut sse = 0.0;
    for (&y, p) in values.iter().zip(preds) {
        let v = p.value().ok_or_else(|| SlmError::TaskMismatch {
            model: "classification".into(),
            data: "regression".into(),
        })?;
        sse += (v - y).powi(2);
    }
    Ok((sse / values.len() as f64).sqrt())
}

/// Mean negative log-probability of the true class, probabilities clipped at 1e-15.
pub fn log_loss(ds: &Dataset, preds: &[Prediction]) -> Result<f64> {
    check_len(ds, preds)?;
    let labels = ds.labels().ok_or_else(|| SlmError::TaskMismatch {
        model: "classification".into(),
        data: "regression".into(),
    })?;
    let mut total = 0.0;
    for (&y, p) in labels.iter().zip(preds) {
        match p {
            Prediction::Class { probabilities, .. } => total -= probabilities[y].max(1e-15).ln(),
            Prediction::Value(_) => {
                return Err(SlmError::TaskMismatch {
                    model: "regression".into(),
                    data: "classification".into(),
                })
            }
        }
    }
    Ok(total / labels.len() as f64)
}

/// Accuracy for classification data, RMSE for regression data.
pub fn score(ds: &Dataset, preds: &[Prediction]) -> Result<f64> {
    match ds.target() {
        Target::Labels { .. } => accuracy(ds, preds),
        Target::Values(_) => rmse(ds, preds),
    }
}
