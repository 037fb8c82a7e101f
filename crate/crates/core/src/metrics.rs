//! Accuracy and concentration metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Label attached to every report describing how `matthew_degree` is computed.
pub const MATTHEW_DEFINITION: &str = "gini coefficient of per-item rating mass";

/// Evaluation summary for one method on one test set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub mae: f64,
    pub matthew_degree: f64,
    /// Log-log rank/mass slope; `None` when fewer than two items carry mass.
    pub zipf_slope: Option<f64>,
    pub seed: u64,
    pub k: usize,
    pub eta: f64,
    pub iterations: u64,
    /// Every hyperparameter and setting that produced this row.
    pub config: BTreeMap<String, String>,
}

/// Mean absolute error, summed in index order.
pub fn mae<T: Scalar>(predictions: &[T], truths: &[T]) -> Result<T> {
    if predictions.len() != truths.len() {
        return Err(Error::Shape(format!(
            "{} predictions vs {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput);
    }
    let total = predictions
        .iter()
        .zip(truths)
        .fold(T::zero(), |acc, (&p, &t)| acc + (p - t).abs());
    Ok(total / T::of_usize(predictions.len()))
}

/// Sums `values[n]` into bucket `items[n]` for `num_items` buckets.
pub fn item_mass<T: Scalar>(items: &[usize], values: &[T], num_items: usize) -> Result<Vec<T>> {
    if items.len() != values.len() {
        return Err(Error::Shape(format!(
            "{} item indices vs {} values",
            items.len(),
            values.len()
        )));
    }
    let mut mass = vec![T::zero(); num_items];
    for (&i, &v) in items.iter().zip(values) {
        let slot = mass.get_mut(i).ok_or(Error::Index {
            what: "item",
            index: i,
            bound: num_items,
        })?;
        *slot += v;
    }
    Ok(mass)
}

/// Gini coefficient of a non-negative mass vector.
///
/// Uses the sorted form `sum_i (2i - n - 1) x_(i) / (n sum x)`, which equals
/// the pairwise definition `sum_ij |x_i - x_j| / (2 n sum x)`.
pub fn matthew_degree<T: Scalar>(masses: &[T]) -> Result<T> {
    if masses.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(bad) = masses.iter().find(|x| !(x.is_finite() && **x >= T::zero())) {
        return Err(Error::Domain(format!(
            "item mass {bad} is negative or non-finite"
        )));
    }
    let total: T = masses.iter().copied().sum();
    if total <= T::zero() {
        return Err(Error::DegenerateInput("all item masses are zero".into()));
    }
    let mut sorted = masses.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = sorted.len();
    let weighted = sorted.iter().enumerate().fold(T::zero(), |acc, (i, &x)| {
        acc + T::of_usize(2 * i + 1) * x - T::of_usize(n) * x
    });
    let g = weighted / (T::of_usize(n) * total);
    Ok(g.max(T::zero()).min(T::one()))
}

/// Least-squares slope of `ln f` against `ln rank` for ranks `1..=n`.
///
/// An exact power law `f_i = C i^-s` yields `-s`.
pub fn fit_zipf_exponent<T: Scalar>(frequencies: &[T]) -> Result<T> {
    if frequencies.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 frequencies, got {}",
            frequencies.len()
        )));
    }
    if let Some(bad) = frequencies
        .iter()
        .find(|f| !(f.is_finite() && **f > T::zero()))
    {
        return Err(Error::Domain(format!(
            "frequency {bad} is not strictly positive"
        )));
    }
    let n = T::of_usize(frequencies.len());
    let xs: Vec<T> = (1..=frequencies.len())
        .map(|r| T::of_usize(r).ln())
        .collect();
    let ys: Vec<T> = frequencies.iter().map(|f| f.ln()).collect();
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(&ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    Ok(sxy / sxx)
}

/// Sorts masses descending, drops entries at or below `min_frequency`, and
/// fits the rank/frequency slope.
pub fn fit_zipf_to_masses<T: Scalar>(masses: &[T], min_frequency: T) -> Result<T> {
    let mut kept: Vec<T> = masses
        .iter()
        .copied()
        .filter(|&m| m > min_frequency)
        .collect();
    kept.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    if kept.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "only {} items above the frequency cutoff",
            kept.len()
        )));
    }
    fit_zipf_exponent(&kept)
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Shape(format!(
            "{} vs {} samples",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData("need at least 2 samples".into()));
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateInput(
            "constant sample has no rank correlation".into(),
        ));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            out[idx] = avg;
        }
        start = end;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(mae(&[1.0, 3.0], &[2.0, 5.0]).unwrap(), 1.5);
        assert!(matches!(mae(&[1.0], &[1.0, 2.0]), Err(Error::Shape(_))));
        assert!(matches!(mae::<f64>(&[], &[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn gini_examples() {
        assert_eq!(matthew_degree(&[2.0, 2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert!((matthew_degree(&[0.0f64, 0.0, 7.0, 0.0]).unwrap() - 0.75).abs() < 1e-15);
        assert!(matches!(
            matthew_degree(&[0.0, 0.0]),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            matthew_degree(&[1.0, -1.0]),
            Err(Error::Domain(_))
        ));
        assert_eq!(matthew_degree(&[3.0]).unwrap(), 0.0);
    }

    #[test]
    fn zipf_fit_exact_laws() {
        let f: Vec<f64> = (1..=100).map(|i| 1.0 / i as f64).collect();
        assert!((fit_zipf_exponent(&f).unwrap() + 1.0).abs() < 1e-9);
        let f: Vec<f64> = (1..=100).map(|i| 7.0 / (i as f64).powi(2)).collect();
        assert!((fit_zipf_exponent(&f).unwrap() + 2.0).abs() < 1e-9);
    }

    #[test]
    fn zipf_fit_errors() {
        assert!(matches!(
            fit_zipf_exponent(&[1.0]),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            fit_zipf_exponent(&[1.0, 0.0]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            fit_zipf_to_masses(&[1.0, 0.0, 0.0], 0.0),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn zipf_fit_with_cutoff() {
        let mut masses: Vec<f64> = (1..=50).map(|i| 3.0 / i as f64).collect();
        masses.extend([0.0; 10]);
        masses.reverse();
        assert!((fit_zipf_to_masses(&masses, 0.0).unwrap() + 1.0).abs() < 1e-9);
    }

    #[test]
    fn item_mass_buckets() {
        let m = item_mass(&[0, 2, 0], &[1.0, 2.0, 3.0], 3).unwrap();
        assert_eq!(m, vec![4.0, 0.0, 2.0]);
        assert!(item_mass(&[3], &[1.0], 3).is_err());
    }

    #[test]
    fn spearman_basics() {
        assert!((spearman(&[0.0, 1.0, 2.0], &[1.0, 5.0, 9.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&[0.0, 1.0, 2.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert!(spearman(&[0.0, 1.0], &[1.0, 1.0]).is_err());
        let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 1.0, 2.0, 3.0]).unwrap();
        assert!(r > 0.9 && r < 1.0);
    }
}
