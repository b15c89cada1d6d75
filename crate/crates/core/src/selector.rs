//! Feature selection: 2-sigma outlier flags, majority-vote smoothing,
//! confusion scoring against the labeled anomaly interval, and the ranked
//! selected set.

use crate::error::{Error, Result};
use crate::matrix::{BinRange, FeatureMatrix};
use crate::num::{mean_and_sample_std, Scalar};
use std::fmt::Write as _;

/// Flags entries beyond mean +/- 2 std. The boundary itself is normal;
/// with sigma = 0 any value different from the mean is flagged.
pub fn flag_outliers<F: Scalar>(series: &[F], mean: F, std: F) -> Vec<bool> {
    let two = F::from_f64_lossy(2.0);
    let lo = mean - two * std;
    let hi = mean + two * std;
    series
        .iter()
        .map(|&v| {
            if std == F::zero() {
                v != mean
            } else {
                v < lo || v > hi
            }
        })
        .collect()
}

/// Majority vote over consecutive non-overlapping blocks of `k` bins (the
/// last block may be shorter). A block is abnormal only when strictly more
/// than half of its bins are flagged; ties are normal.
pub fn majority_smooth(flags: &[bool], k: usize) -> Vec<bool> {
    assert!(k >= 1, "block size must be at least 1");
    flags
        .chunks(k)
        .map(|block| {
            let set = block.iter().filter(|&&f| f).count();
            2 * set > block.len()
        })
        .collect()
}

/// Scoring outcome for one feature.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScore<F> {
    pub name: String,
    /// mean - 2 std, in raw feature units.
    pub threshold_lo: F,
    /// mean + 2 std.
    pub threshold_hi: F,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
    /// TPR - FPR over smoothed blocks.
    pub score: F,
    pub selected: bool,
}

/// Alternative ranking metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreMetric {
    /// TPR - FPR.
    #[default]
    YoudenJ,
    F1,
}

/// Scores one feature series: flag outliers against (mean, std) fitted on
/// normal-period data, smooth with k-bin majority blocks, then tally the
/// block-level confusion against the anomaly interval. A block is abnormal
/// ground truth when its bin range intersects the interval.
pub fn score_feature<F: Scalar>(
    name: &str,
    series: &[F],
    mean: F,
    std: F,
    anomaly_interval: BinRange,
    k: usize,
    metric: ScoreMetric,
) -> Result<FeatureScore<F>> {
    if k < 1 {
        return Err(Error::param("block size k must be at least 1"));
    }
    if anomaly_interval.end >= series.len() {
        return Err(Error::param("anomaly interval exceeds the series"));
    }
    let flags = flag_outliers(series, mean, std);
    let blocks = majority_smooth(&flags, k);

    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut tn = 0u64;
    let mut fn_ = 0u64;
    for (b, &predicted) in blocks.iter().enumerate() {
        let lo = b * k;
        let hi = ((b + 1) * k - 1).min(series.len() - 1);
        let truth = anomaly_interval.intersects(&BinRange::new(lo, hi).expect("valid block"));
        match (predicted, truth) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }

    let ratio = |num: u64, den: u64| {
        if den == 0 {
            F::zero()
        } else {
            F::from_count(num as usize) / F::from_count(den as usize)
        }
    };
    let tpr = ratio(tp, tp + fn_);
    let fpr = ratio(fp, fp + tn);
    let score = match metric {
        ScoreMetric::YoudenJ => tpr - fpr,
        ScoreMetric::F1 => {
            let two = F::from_f64_lossy(2.0);
            let denom = F::from_count((2 * tp + fp + fn_) as usize);
            if denom == F::zero() {
                F::zero()
            } else {
                two * F::from_count(tp as usize) / denom
            }
        }
    };

    let two = F::from_f64_lossy(2.0);
    Ok(FeatureScore {
        name: name.to_string(),
        threshold_lo: mean - two * std,
        threshold_hi: mean + two * std,
        tp,
        fp,
        tn,
        fn_,
        score,
        selected: false,
    })
}

/// Selection parameters.
#[derive(Debug, Clone)]
pub struct SelectionConfig {
    /// Majority-vote block size.
    pub k: usize,
    /// How many base features to keep.
    pub n_base: usize,
    /// How many correlation features to keep.
    pub n_corr: usize,
    pub metric: ScoreMetric,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            k: 5,
            n_base: 4,
            n_corr: 4,
            metric: ScoreMetric::YoudenJ,
        }
    }
}

/// Ranked scores plus the selected base / correlation feature sets.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport<F> {
    /// All scores, ranked best-first (score desc, FPR asc, column order).
    pub scores: Vec<FeatureScore<F>>,
    pub selected_base: Vec<String>,
    pub selected_corr: Vec<String>,
    pub k: usize,
    pub n_base: usize,
    pub n_corr: usize,
}

impl<F: Scalar> SelectionReport<F> {
    /// All selected columns, base features first.
    pub fn selected_columns(&self) -> Vec<String> {
        self.selected_base
            .iter()
            .chain(self.selected_corr.iter())
            .cloned()
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("name,threshold_lo,threshold_hi,tp,fp,tn,fn,score,selected\n");
        for s in &self.scores {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                s.name,
                s.threshold_lo,
                s.threshold_hi,
                s.tp,
                s.fp,
                s.tn,
                s.fn_,
                s.score,
                s.selected
            )
            .unwrap();
        }
        out
    }
}

fn is_correlation_feature(name: &str) -> bool {
    name.starts_with("corr(")
}

/// Scores every column of the labeled matrix and selects the top `n_base`
/// base features and top `n_corr` correlation features.
///
/// Outlier thresholds are fitted on the pre-anomaly prefix of each series
/// (bins before the anomaly interval), matching train-on-normal use.
pub fn select_features<F: Scalar>(
    matrix: &FeatureMatrix<F>,
    config: &SelectionConfig,
) -> Result<SelectionReport<F>> {
    let interval = matrix
        .anomaly_interval()
        .ok_or_else(|| Error::param("matrix carries no anomaly interval label"))?;
    if interval.start == 0 {
        return Err(Error::param(
            "anomaly interval starts at bin 0; no normal period to fit on",
        ));
    }
    let fit_range = BinRange::new(0, interval.start - 1)?;
    select_features_with_fit(matrix, fit_range, config)
}

/// Same as [`select_features`] with an explicit normal-period fit range.
pub fn select_features_with_fit<F: Scalar>(
    matrix: &FeatureMatrix<F>,
    fit_range: BinRange,
    config: &SelectionConfig,
) -> Result<SelectionReport<F>> {
    let interval = matrix
        .anomaly_interval()
        .ok_or_else(|| Error::param("matrix carries no anomaly interval label"))?;
    matrix.check_range(fit_range)?;
    if fit_range.intersects(&interval) {
        return Err(Error::param("fit range overlaps the anomaly interval"));
    }

    let mut scored: Vec<(usize, FeatureScore<F>)> = Vec::with_capacity(matrix.ncols());
    for (c, name) in matrix.column_names().iter().enumerate() {
        let series = matrix.column(c);
        let fit: Vec<F> = fit_range.iter().map(|r| series[r]).collect();
        let (mean, std) = mean_and_sample_std(&fit);
        let score = score_feature(name, &series, mean, std, interval, config.k, config.metric)?;
        scored.push((c, score));
    }

    // Rank: score desc, then lower FPR, then column order.
    scored.sort_by(|(ca, a), (cb, b)| {
        b.score
            .partial_cmp(&a.score)
            .expect("scores are finite")
            .then_with(|| {
                let fpr = |s: &FeatureScore<F>| {
                    if s.fp + s.tn == 0 {
                        F::zero()
                    } else {
                        F::from_count(s.fp as usize) / F::from_count((s.fp + s.tn) as usize)
                    }
                };
                fpr(a).partial_cmp(&fpr(b)).expect("rates are finite")
            })
            .then_with(|| ca.cmp(cb))
    });

    let mut scores: Vec<FeatureScore<F>> = scored.into_iter().map(|(_, s)| s).collect();
    let mut selected_base = Vec::new();
    let mut selected_corr = Vec::new();
    for s in scores.iter_mut() {
        let corr = is_correlation_feature(&s.name);
        if corr && selected_corr.len() < config.n_corr {
            s.selected = true;
            selected_corr.push(s.name.clone());
        } else if !corr && selected_base.len() < config.n_base {
            s.selected = true;
            selected_base.push(s.name.clone());
        }
    }

    Ok(SelectionReport {
        scores,
        selected_base,
        selected_corr,
        k: config.k,
        n_base: config.n_base,
        n_corr: config.n_corr,
    })
}

/// Plot-ready CSV for one feature: `bin,value,lo,hi,flagged`.
pub fn feature_plot_csv<F: Scalar>(
    matrix: &FeatureMatrix<F>,
    score: &FeatureScore<F>,
) -> Result<String> {
    let series = matrix.column_by_name(&score.name)?;
    // Back out (mean, std) from the stored thresholds: mean is the midpoint.
    let two = F::from_f64_lossy(2.0);
    let mean = (score.threshold_lo + score.threshold_hi) / two;
    let std = (score.threshold_hi - score.threshold_lo) / (two * two);
    let flags = flag_outliers(&series, mean, std);
    let mut out = String::from("bin,value,lo,hi,flagged\n");
    for (bin, (&v, flag)) in series.iter().zip(flags).enumerate() {
        writeln!(
            out,
            "{bin},{v},{},{},{flag}",
            score.threshold_lo, score.threshold_hi
        )
        .unwrap();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{BinKey, MatrixMeta};

    #[test]
    fn boundary_is_exclusive() {
        let flags = flag_outliers(&[2.5f64, 2.0, -2.0, -2.5, 0.0], 0.0, 1.0);
        assert_eq!(flags, vec![true, false, false, true, false]);
    }

    #[test]
    fn zero_sigma_flags_any_deviation() {
        let flags = flag_outliers(&[5.0f64, 5.1, 4.9, 5.0], 5.0, 0.0);
        assert_eq!(flags, vec![false, true, true, false]);
    }

    #[test]
    fn affine_invariance_of_flags() {
        let series = [0.4f64, -3.0, 2.2, 8.8, -0.3];
        let (a, b) = (-2.5, 7.0);
        let mapped: Vec<f64> = series.iter().map(|v| a * v + b).collect();
        let base = flag_outliers(&series, 1.0, 2.0);
        let moved = flag_outliers(&mapped, a * 1.0 + b, a.abs() * 2.0);
        assert_eq!(base, moved);
    }

    #[test]
    fn majority_vote_and_tie_rule() {
        assert_eq!(majority_smooth(&[true, true, false, true, false], 5), vec![true]);
        assert_eq!(majority_smooth(&[true, true, false, false], 4), vec![false]);
        assert_eq!(majority_smooth(&[false; 12], 5), vec![false, false, false]);
        // k = 1 is the identity.
        let flags = [true, false, true];
        assert_eq!(majority_smooth(&flags, 1), flags.to_vec());
        // Output length is ceil(len / k).
        assert_eq!(majority_smooth(&[true; 7], 3).len(), 3);
    }

    fn labeled_matrix(cols: Vec<(&str, Vec<f64>)>, interval: BinRange) -> FeatureMatrix<f64> {
        let nrows = cols[0].1.len();
        let names: Vec<String> = cols.iter().map(|(n, _)| n.to_string()).collect();
        let mut values = Vec::new();
        for r in 0..nrows {
            for (_, col) in &cols {
                values.push(col[r]);
            }
        }
        let keys = (0..nrows as u64)
            .map(|i| BinKey { index: i, start: i * 60, width: 60 })
            .collect();
        FeatureMatrix::new(
            names,
            keys,
            values,
            MatrixMeta {
                bin_width: 60,
                anomaly_interval: Some(interval),
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn perfect_separator_scores_one() {
        // Zero everywhere in the normal period, large inside the anomaly.
        let mut col = vec![0.0; 100];
        for v in col[60..80].iter_mut() {
            *v = 50.0;
        }
        let interval = BinRange::new(60, 79).unwrap();
        let m = labeled_matrix(vec![("f", col)], interval);
        let report = select_features(&m, &SelectionConfig { n_base: 1, ..Default::default() }).unwrap();
        let s = &report.scores[0];
        assert_eq!(s.score, 1.0);
        assert_eq!(s.fp, 0);
        assert_eq!(s.fn_, 0);
        assert!(s.selected);
    }

    #[test]
    fn always_flagged_scores_zero() {
        let flags = vec![true; 50];
        let blocks = majority_smooth(&flags, 5);
        assert!(blocks.iter().all(|&b| b));
        // TPR = 1 and FPR = 1 cancel.
        let series: Vec<f64> = (0..50).map(|i| if i % 2 == 0 { 100.0 } else { -100.0 }).collect();
        let s = score_feature(
            "f",
            &series,
            0.0,
            1.0,
            BinRange::new(30, 39).unwrap(),
            5,
            ScoreMetric::YoudenJ,
        )
        .unwrap();
        assert_eq!(s.score, 0.0);
        assert_eq!(s.tp + s.fn_ as u64, 2); // anomaly-period blocks
        assert_eq!(s.fp + s.tn as u64, 8);
    }

    #[test]
    fn selection_caps_and_categories() {
        let n = 100;
        let interval = BinRange::new(60, 79).unwrap();
        let mut anom = vec![0.0; n];
        for v in anom[60..80].iter_mut() {
            *v = 9.0;
        }
        let noise: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
        let m = labeled_matrix(
            vec![
                ("good", anom.clone()),
                ("noise", noise),
                ("corr(a,b)", anom),
            ],
            interval,
        );
        let report = select_features(
            &m,
            &SelectionConfig { k: 5, n_base: 1, n_corr: 0, metric: ScoreMetric::YoudenJ },
        )
        .unwrap();
        assert_eq!(report.selected_base, vec!["good".to_string()]);
        assert!(report.selected_corr.is_empty());
        // Ranking is still complete.
        assert_eq!(report.scores.len(), 3);

        let all = select_features(
            &m,
            &SelectionConfig { k: 5, n_base: 10, n_corr: 10, metric: ScoreMetric::YoudenJ },
        )
        .unwrap();
        assert_eq!(all.selected_base.len(), 2);
        assert_eq!(all.selected_corr.len(), 1);
    }

    #[test]
    fn rejects_interval_at_origin() {
        let m = labeled_matrix(vec![("f", vec![0.0; 10])], BinRange::new(0, 3).unwrap());
        assert!(select_features(&m, &SelectionConfig::default()).is_err());
    }
}
