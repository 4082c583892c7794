use super::{EvalError, ScoreSet};

/// One operating point. The last point of a curve has `threshold = +inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    /// Fraction of impostor scores `>= threshold`.
    pub far: f64,
    /// Fraction of genuine scores `< threshold`.
    pub frr: f64,
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation.
pub fn std_dev(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Operating points at every distinct score plus a `+inf` sentinel, ascending.
pub fn roc(s: &ScoreSet) -> Result<Vec<RocPoint>, EvalError> {
    if s.genuine.is_empty() || s.impostor.is_empty() {
        return Err(EvalError::EmptyScores);
    }
    let genuine = sorted(&s.genuine);
    let impostor = sorted(&s.impostor);
    let mut thresholds: Vec<f64> = genuine.iter().chain(&impostor).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    thresholds.push(f64::INFINITY);
    let (ng, ni) = (genuine.len() as f64, impostor.len() as f64);
    Ok(thresholds
        .into_iter()
        .map(|t| {
            let below_g = genuine.partition_point(|&v| v < t);
            let below_i = impostor.partition_point(|&v| v < t);
            RocPoint {
                threshold: t,
                far: (impostor.len() - below_i) as f64 / ni,
                frr: below_g as f64 / ng,
            }
        })
        .collect())
}

/// FAR at the first point where FAR <= FRR, linearly interpolated from the
/// preceding point when the two rates do not meet exactly.
pub fn eer_from_roc(points: &[RocPoint]) -> f64 {
    let cross = points
        .iter()
        .position(|p| p.far <= p.frr)
        .expect("the +inf sentinel has FAR 0 and FRR 1");
    let here = points[cross];
    if here.far == here.frr || cross == 0 {
        return here.far;
    }
    let prev = points[cross - 1];
    let d_prev = prev.far - prev.frr;
    let d_here = here.far - here.frr;
    let s = d_prev / (d_prev - d_here);
    prev.far + s * (here.far - prev.far)
}

/// Equal error rate as a fraction in `[0, 1]`.
pub fn compute_eer(s: &ScoreSet) -> Result<f64, EvalError> {
    Ok(eer_from_roc(&roc(s)?))
}

/// `post - pre`, in whatever unit both are given in.
pub fn accuracy_loss(pre: f64, post: f64) -> f64 {
    post - pre
}

/// Flags a loss that disagrees with `post - pre` once all three values are
/// rounded to `decimals` places, as they would appear in a printed table.
pub fn rounding_note(pre: f64, post: f64, loss: f64, decimals: i32) -> Option<String> {
    let scale = 10f64.powi(decimals);
    let round = |v: f64| (v * scale).round() / scale;
    let implied = round(round(post) - round(pre));
    if (implied - round(loss)).abs() > 0.5 / scale {
        let p = decimals.max(0) as usize;
        Some(format!(
            "printed loss {:.p$} differs from printed post - pre = {:.p$} - {:.p$} = {:.p$}",
            round(loss),
            round(post),
            round(pre),
            implied
        ))
    } else {
        None
    }
}
