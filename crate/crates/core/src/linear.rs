//! Fisher LDA and linear (pooled-variance Gaussian) Naive Bayes.
//!
//! Both produce a linear decision score; positive scores predict the control
//! class, non-positive scores (including ties) predict the case class.

use crate::data::Label;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use ndarray::{Array1, Array2, ArrayView2};

#[derive(Clone, Debug, PartialEq)]
pub struct LdaModel<T: Scalar> {
    /// One weight per feature; points from the case mean toward the control
    /// mean through the pooled covariance.
    pub weights: Array1<T>,
    pub bias: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NaiveBayesModel<T: Scalar> {
    /// Per-class feature means, `[case, control]`.
    pub means: [Array1<T>; 2],
    /// Class-shared per-feature variance; sharing it across classes is what
    /// makes the decision boundary linear.
    pub pooled_var: Array1<T>,
    pub log_priors: [T; 2],
}

struct ClassStats<T: Scalar> {
    counts: [usize; 2],
    means: [Array1<T>; 2],
}

fn class_stats<T: Scalar>(x: ArrayView2<T>, y: &[Label], min_per_class: usize) -> Result<ClassStats<T>> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: x.nrows(),
        });
    }
    if x.ncols() == 0 {
        return Err(Error::InvalidData("no features".into()));
    }
    let mut counts = [0usize; 2];
    let mut sums = [Array1::<T>::zeros(x.ncols()), Array1::<T>::zeros(x.ncols())];
    for (row, label) in x.rows().into_iter().zip(y) {
        counts[label.index()] += 1;
        sums[label.index()] += &row;
    }
    for (c, label) in Label::ALL.iter().enumerate() {
        if counts[c] < min_per_class {
            return Err(Error::TooFewClassSamples {
                label: label.to_string(),
                have: counts[c],
                need: min_per_class,
            });
        }
    }
    let mut means = sums;
    for c in 0..2 {
        means[c] /= T::cast(counts[c] as f64);
    }
    Ok(ClassStats { counts, means })
}

/// Cholesky factorization of a symmetric positive-definite matrix.
fn cholesky<T: Scalar>(a: &Array2<T>) -> Option<Array2<T>> {
    let n = a.nrows();
    let mut l = Array2::<T>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if sum <= T::zero() || !sum.is_finite() {
                    return None;
                }
                l[[i, j]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Some(l)
}

/// Solve `A x = b` given the Cholesky factor `L` of `A`.
fn cholesky_solve<T: Scalar>(l: &Array2<T>, b: &Array1<T>) -> Array1<T> {
    let n = l.nrows();
    let mut y = Array1::<T>::zeros(n);
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[[i, k]] * y[k];
        }
        y[i] = sum / l[[i, i]];
    }
    let mut x = Array1::<T>::zeros(n);
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[[k, i]] * x[k];
        }
        x[i] = sum / l[[i, i]];
    }
    x
}

/// Fit Fisher LDA with a pooled within-class covariance. The covariance gets
/// a ridge of `1e-6 · trace(Σ)/d` so small-sample subsets stay solvable.
pub fn lda_fit<T: Scalar>(x: ArrayView2<T>, y: &[Label]) -> Result<LdaModel<T>> {
    let stats = class_stats(x, y, 2)?;
    let d = x.ncols();
    let n = x.nrows();

    let mut pooled = Array2::<T>::zeros((d, d));
    for (row, label) in x.rows().into_iter().zip(y) {
        let centered = &row - &stats.means[label.index()];
        for i in 0..d {
            for j in 0..=i {
                pooled[[i, j]] += centered[i] * centered[j];
            }
        }
    }
    let denom = T::cast((n - 2) as f64);
    for i in 0..d {
        for j in 0..=i {
            let v = pooled[[i, j]] / denom;
            pooled[[i, j]] = v;
            pooled[[j, i]] = v;
        }
    }
    let trace: T = (0..d).map(|i| pooled[[i, i]]).sum();
    let ridge = T::cast(1e-6) * trace / T::cast(d as f64);
    for i in 0..d {
        pooled[[i, i]] += ridge;
    }

    let diff = &stats.means[1] - &stats.means[0];
    let l = cholesky(&pooled)
        .ok_or_else(|| Error::NonFinite("pooled covariance is not positive definite".into()))?;
    let weights = cholesky_solve(&l, &diff);
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite("LDA weight vector".into()));
    }

    let midpoint = (&stats.means[0] + &stats.means[1]) * T::cast(0.5);
    let prior_shift = T::cast((stats.counts[1] as f64 / stats.counts[0] as f64).ln());
    let bias = prior_shift - weights.dot(&midpoint);
    Ok(LdaModel { weights, bias })
}

/// Scores are `w·x + b`; labels by sign with ties to the case class.
pub fn lda_predict<T: Scalar>(
    model: &LdaModel<T>,
    x: ArrayView2<T>,
) -> Result<(Vec<Label>, Vec<T>)> {
    if x.ncols() != model.weights.len() {
        return Err(Error::DimensionMismatch {
            expected: model.weights.len(),
            got: x.ncols(),
        });
    }
    let scores: Vec<T> = x
        .rows()
        .into_iter()
        .map(|r| r.dot(&model.weights) + model.bias)
        .collect();
    let labels = scores
        .iter()
        .map(|&s| if s > T::zero() { Label::Control } else { Label::Case })
        .collect();
    Ok((labels, scores))
}

/// Gaussian Naive Bayes with a class-pooled per-feature variance.
pub fn nb_fit<T: Scalar>(x: ArrayView2<T>, y: &[Label]) -> Result<NaiveBayesModel<T>> {
    let stats = class_stats(x, y, 2)?;
    let d = x.ncols();
    let n = x.nrows();

    let mut ss = Array1::<T>::zeros(d);
    for (row, label) in x.rows().into_iter().zip(y) {
        for j in 0..d {
            let c = row[j] - stats.means[label.index()][j];
            ss[j] += c * c;
        }
    }
    let denom = T::cast((n - 2) as f64);
    let floor = T::cast(1e-12);
    let pooled_var = ss.mapv(|v| {
        let var = v / denom;
        if var > floor {
            var
        } else {
            floor
        }
    });

    let log_priors = [
        T::cast((stats.counts[0] as f64 / n as f64).ln()),
        T::cast((stats.counts[1] as f64 / n as f64).ln()),
    ];
    Ok(NaiveBayesModel {
        means: stats.means,
        pooled_var,
        log_priors,
    })
}

/// Scores are control-vs-case log-odds; ties go to the case class.
pub fn nb_predict<T: Scalar>(
    model: &NaiveBayesModel<T>,
    x: ArrayView2<T>,
) -> Result<(Vec<Label>, Vec<T>)> {
    let d = model.pooled_var.len();
    if x.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.ncols(),
        });
    }
    let half = T::cast(0.5);
    let scores: Vec<T> = x
        .rows()
        .into_iter()
        .map(|r| {
            let mut log_odds = model.log_priors[1] - model.log_priors[0];
            for j in 0..d {
                let d0 = r[j] - model.means[0][j];
                let d1 = r[j] - model.means[1][j];
                log_odds += half * (d0 * d0 - d1 * d1) / model.pooled_var[j];
            }
            log_odds
        })
        .collect();
    let labels = scores
        .iter()
        .map(|&s| if s > T::zero() { Label::Control } else { Label::Case })
        .collect();
    Ok((labels, scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Axis};

    fn one_d_fixture() -> (Array2<f64>, Vec<Label>) {
        (
            array![[0.0], [1.0], [10.0], [11.0]],
            vec![Label::Case, Label::Case, Label::Control, Label::Control],
        )
    }

    #[test]
    fn lda_matches_hand_computed_one_d_solution() {
        let (x, y) = one_d_fixture();
        let m = lda_fit(x.view(), &y).unwrap();
        // pooled variance 0.5 (+ tiny ridge), w = Δμ/σ² = 10/0.5
        assert!((m.weights[0] - 20.0).abs() < 1e-3);
        // boundary at the midpoint 5.5
        let boundary = -m.bias / m.weights[0];
        assert!((boundary - 5.5).abs() < 1e-9);
        let (labels, scores) = lda_predict(&m, array![[2.0]].view()).unwrap();
        assert_eq!(labels, vec![Label::Case]);
        assert!(scores[0] < 0.0);
    }

    #[test]
    fn lda_with_identical_means_falls_back_to_prior() {
        let x: Array2<f64> = array![[1.0], [2.0], [1.0], [2.0], [1.0], [2.0]];
        let y = vec![
            Label::Case,
            Label::Case,
            Label::Control,
            Label::Control,
            Label::Control,
            Label::Control,
        ];
        let m = lda_fit(x.view(), &y).unwrap();
        assert!(m.weights[0].abs() < 1e-12);
        // majority class is control, bias = ln(4/2) > 0
        let (labels, _) = lda_predict(&m, array![[0.0], [100.0]].view()).unwrap();
        assert_eq!(labels, vec![Label::Control, Label::Control]);

        // equal priors: score 0 everywhere, tie goes to case
        let y_eq = vec![Label::Case, Label::Case, Label::Case, Label::Control, Label::Control, Label::Control];
        let x_eq: Array2<f64> = array![[1.0], [2.0], [3.0], [1.0], [2.0], [3.0]];
        let m_eq = lda_fit(x_eq.view(), &y_eq).unwrap();
        let (labels_eq, scores_eq) = lda_predict(&m_eq, array![[7.0]].view()).unwrap();
        assert!(scores_eq[0].abs() < 1e-9);
        assert_eq!(labels_eq, vec![Label::Case]);
    }

    #[test]
    fn lda_downweights_a_pure_noise_feature() {
        // feature 0 separates the classes, feature 1 is identical noise
        let noise = [0.3, -0.7, 1.1, -0.2, 0.5, -1.0];
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for (i, &nv) in noise.iter().enumerate() {
            rows.push([if i < 3 { 0.0 } else { 8.0 } + (i % 3) as f64 * 0.1, nv]);
            y.push(if i < 3 { Label::Case } else { Label::Control });
        }
        let x = Array2::from_shape_vec((6, 2), rows.concat().to_vec()).unwrap();
        let m = lda_fit(x.view(), &y).unwrap();
        assert!(m.weights[0].abs() > 5.0 * m.weights[1].abs());
        let (pred, _) = lda_predict(&m, x.view()).unwrap();
        assert_eq!(pred, y);
    }

    #[test]
    fn lda_rejects_single_class() {
        let x = array![[1.0], [2.0], [3.0]];
        let y = vec![Label::Case; 3];
        assert!(matches!(
            lda_fit(x.view(), &y).unwrap_err(),
            Error::TooFewClassSamples { .. }
        ));
    }

    #[test]
    fn nb_threshold_matches_lda_in_one_d() {
        let (x, y) = one_d_fixture();
        let nb = nb_fit(x.view(), &y).unwrap();
        let lda = lda_fit(x.view(), &y).unwrap();
        for i in 0..23 {
            let v = i as f64 * 0.5 - 0.5;
            let grid = array![[v]];
            let (nb_label, _) = nb_predict(&nb, grid.view()).unwrap();
            let (lda_label, _) = lda_predict(&lda, grid.view()).unwrap();
            assert_eq!(nb_label, lda_label, "disagree at {v}");
        }
        // closed-form threshold (μ0+μ1)/2 = 5.5
        let (below, _) = nb_predict(&nb, array![[5.49]].view()).unwrap();
        let (above, _) = nb_predict(&nb, array![[5.51]].view()).unwrap();
        assert_eq!(below, vec![Label::Case]);
        assert_eq!(above, vec![Label::Control]);
    }

    #[test]
    fn nb_equal_means_and_priors_tie_to_case() {
        let x: Array2<f64> = array![[1.0], [3.0], [1.0], [3.0]];
        let y = vec![Label::Case, Label::Case, Label::Control, Label::Control];
        let m = nb_fit(x.view(), &y).unwrap();
        let (labels, scores) = nb_predict(&m, array![[0.0], [2.0], [9.0]].view()).unwrap();
        for s in &scores {
            assert!(s.abs() < 1e-12);
        }
        assert_eq!(labels, vec![Label::Case; 3]);
    }

    #[test]
    fn nb_prior_dominates_equal_means() {
        // 18 controls vs 2 cases, identical likelihoods
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..20 {
            rows.push([if i % 2 == 0 { 1.0 } else { 3.0 }]);
            y.push(if i < 2 { Label::Case } else { Label::Control });
        }
        let x = Array2::from_shape_vec((20, 1), rows.concat().to_vec()).unwrap();
        let m = nb_fit(x.view(), &y).unwrap();
        let (labels, _) = nb_predict(&m, array![[1.0], [2.0], [3.0]].view()).unwrap();
        assert_eq!(labels, vec![Label::Control; 3]);
    }

    #[test]
    fn both_classifiers_are_permutation_invariant() {
        // full-rank within-class scatter so the solve is well conditioned
        let x: Array2<f64> = array![
            [0.1, 5.0, -1.0],
            [0.3, 6.0, -1.2],
            [-0.4, 5.6, -0.1],
            [0.8, 4.4, -0.6],
            [2.1, 5.5, 0.8],
            [2.3, 6.5, 1.1],
            [1.6, 5.9, 1.9],
            [2.8, 6.1, 0.3]
        ];
        let y = vec![
            Label::Case,
            Label::Case,
            Label::Case,
            Label::Case,
            Label::Control,
            Label::Control,
            Label::Control,
            Label::Control,
        ];
        let perm = [2usize, 0, 1];
        let xp = x.select(Axis(1), &perm);

        let lda = lda_fit(x.view(), &y).unwrap();
        let lda_p = lda_fit(xp.view(), &y).unwrap();
        let (l1, s1) = lda_predict(&lda, x.view()).unwrap();
        let (l2, s2) = lda_predict(&lda_p, xp.view()).unwrap();
        assert_eq!(l1, l2);
        for (a, b) in s1.iter().zip(&s2) {
            assert!((a - b).abs() < 1e-9);
        }

        let nb = nb_fit(x.view(), &y).unwrap();
        let nb_p = nb_fit(xp.view(), &y).unwrap();
        let (n1, t1) = nb_predict(&nb, x.view()).unwrap();
        let (n2, t2) = nb_predict(&nb_p, xp.view()).unwrap();
        assert_eq!(n1, n2);
        for (a, b) in t1.iter().zip(&t2) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn both_classifiers_are_translation_invariant() {
        let x: Array2<f64> = array![[0.0, 1.0], [1.0, 0.0], [5.0, 6.0], [6.0, 5.0]];
        let y = vec![Label::Case, Label::Case, Label::Control, Label::Control];
        let shifted = &x + 1000.0;

        let (l1, s1) = {
            let m = lda_fit(x.view(), &y).unwrap();
            lda_predict(&m, x.view()).unwrap()
        };
        let (l2, s2) = {
            let m = lda_fit(shifted.view(), &y).unwrap();
            lda_predict(&m, shifted.view()).unwrap()
        };
        assert_eq!(l1, l2);
        for (a, b) in s1.iter().zip(&s2) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }

        let (n1, t1) = {
            let m = nb_fit(x.view(), &y).unwrap();
            nb_predict(&m, x.view()).unwrap()
        };
        let (n2, t2) = {
            let m = nb_fit(shifted.view(), &y).unwrap();
            nb_predict(&m, shifted.view()).unwrap()
        };
        assert_eq!(n1, n2);
        for (a, b) in t1.iter().zip(&t2) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn predict_rejects_dimension_mismatch() {
        let (x, y) = one_d_fixture();
        let m = lda_fit(x.view(), &y).unwrap();
        assert!(matches!(
            lda_predict(&m, array![[1.0, 2.0]].view()).unwrap_err(),
            Error::DimensionMismatch { .. }
        ));
    }
}
