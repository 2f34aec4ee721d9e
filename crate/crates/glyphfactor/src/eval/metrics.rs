use std::collections::BTreeSet;

/// Macro-averaged F1: the unweighted mean of per-class F1 over every class
/// that appears in the true or predicted labels. A class with no true and no
/// predicted instances contributes nothing; one with an empty precision or
/// recall denominator scores 0 there.
pub fn macro_f1(y_true: &[usize], y_pred: &[usize]) -> f64 {
    assert_eq!(y_true.len(), y_pred.len(), "label/prediction length mismatch");
    let classes: BTreeSet<usize> = y_true.iter().chain(y_pred.iter()).copied().collect();
    if classes.is_empty() {
        return 0.0;
    }
    let mut sum = 0.0;
    for &c in &classes {
        let tp = y_true
            .iter()
            .zip(y_pred)
            .filter(|(t, p)| **t == c && **p == c)
            .count() as f64;
        let fp = y_true
            .iter()
            .zip(y_pred)
            .filter(|(t, p)| **t != c && **p == c)
            .count() as f64;
        let fn_ = y_true
            .iter()
            .zip(y_pred)
            .filter(|(t, p)| **t == c && **p != c)
            .count() as f64;
        let denom = 2.0 * tp + fp + fn_;
        if denom > 0.0 {
            sum += 2.0 * tp / denom;
        }
    }
    sum / classes.len() as f64
}
