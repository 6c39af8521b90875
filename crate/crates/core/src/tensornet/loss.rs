use super::layers::softmax2;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn check_delta<T: Scalar>(delta: T) -> Result<()> {
    if delta > T::zero() && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("pseudo-Huber delta must be positive, got {delta}")))
    }
}

/// Pseudo-Huber affinity loss. For poses that are not low-RMSD the loss is a hinge:
/// it only applies when the prediction overshoots the label.
pub fn affinity_loss<T: Scalar>(y: T, yhat: T, delta: T, is_good_pose: bool) -> Result<T> {
    check_delta(delta)?;
    if !is_good_pose && yhat <= y {
        return Ok(T::zero());
    }
    let r = (y - yhat) / delta;
    Ok(delta * delta * ((T::one() + r * r).sqrt() - T::one()))
}

/// Derivative of [`affinity_loss`] with respect to the prediction.
pub fn affinity_loss_grad<T: Scalar>(y: T, yhat: T, delta: T, is_good_pose: bool) -> Result<T> {
    check_delta(delta)?;
    if !is_good_pose && yhat <= y {
        return Ok(T::zero());
    }
    let r = (y - yhat) / delta;
    Ok(-(y - yhat) / (T::one() + r * r).sqrt())
}

fn check_label(label: usize) -> Result<()> {
    if label > 1 {
        return Err(Error::InvalidArgument(format!("pose label must be 0 or 1, got {label}")));
    }
    Ok(())
}

/// Negative log softmax probability of `label`.
pub fn pose_loss<T: Scalar>(logits: [T; 2], label: usize) -> Result<T> {
    check_label(label)?;
    let m = logits[0].max(logits[1]);
    let lse = m + ((logits[0] - m).exp() + (logits[1] - m).exp()).ln();
    Ok(lse - logits[label])
}

/// Gradient of [`pose_loss`] with respect to the logits: `softmax - onehot(label)`.
pub fn pose_loss_grad<T: Scalar>(logits: [T; 2], label: usize) -> Result<[T; 2]> {
    check_label(label)?;
    let mut p = softmax2(logits);
    p[label] -= T::one();
    Ok(p)
}
