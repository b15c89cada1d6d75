//! Standardization, Pearson correlation with significance testing, and
//! rolling-correlation feature generation.

use crate::error::{Error, Result};
use crate::matrix::{BinRange, FeatureMatrix};
use crate::num::{mean_and_sample_std, Scalar};
use std::fmt::Write as _;

mod special;

/// Per-column mean and sample standard deviation over a fit range.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnStandardization<F> {
    pub name: String,
    pub mean: F,
    pub std: F,
}

impl<F: Scalar> ColumnStandardization<F> {
    /// A zero-variance column cannot be standardized.
    pub fn is_degenerate(&self) -> bool {
        self.std == F::zero()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationParams<F> {
    pub columns: Vec<ColumnStandardization<F>>,
    pub fit_range: BinRange,
}

impl<F: Scalar> StandardizationParams<F> {
    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn degenerate_columns(&self) -> Vec<String> {
        self.columns
            .iter()
            .filter(|c| c.is_degenerate())
            .map(|c| c.name.clone())
            .collect()
    }
}

/// Fits per-column mean and sample standard deviation (divisor N-1) over
/// the fit-range rows only.
pub fn standardize_fit<F: Scalar>(
    matrix: &FeatureMatrix<F>,
    fit_range: BinRange,
) -> Result<StandardizationParams<F>> {
    matrix.check_range(fit_range)?;
    let columns = matrix
        .column_names()
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let slice: Vec<F> = fit_range.iter().map(|r| matrix.value(r, c)).collect();
            let (mean, std) = mean_and_sample_std(&slice);
            ColumnStandardization {
                name: name.clone(),
                mean,
                std,
            }
        })
        .collect();
    Ok(StandardizationParams { columns, fit_range })
}

/// Maps every non-degenerate column x to (x - mean) / std; degenerate
/// columns become all-zero and are listed in the output metadata.
pub fn standardize_apply<F: Scalar>(
    matrix: &FeatureMatrix<F>,
    params: &StandardizationParams<F>,
) -> Result<FeatureMatrix<F>> {
    if params.column_names() != matrix.column_names() {
        return Err(Error::ColumnMismatch(
            "standardization parameters fitted on different columns".into(),
        ));
    }
    let mut out = matrix.clone();
    let mut degenerate = Vec::new();
    for (c, col) in params.columns.iter().enumerate() {
        let series: Vec<F> = if col.is_degenerate() {
            degenerate.push(col.name.clone());
            vec![F::zero(); matrix.nrows()]
        } else {
            (0..matrix.nrows())
                .map(|r| (matrix.value(r, c) - col.mean) / col.std)
                .collect()
        };
        out.set_column(c, &series);
    }
    out.meta_mut().degenerate_columns = degenerate;
    Ok(out)
}

/// Pearson correlation coefficient with sample standard deviations.
///
/// Requires at least three points; constant series are rejected as
/// degenerate. The result is clamped to [-1, 1] against round-off overshoot.
pub fn pearson<F: Scalar>(x: &[F], y: &[F]) -> Result<F> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::param("correlation needs at least 3 points"));
    }
    let (mx, sx) = mean_and_sample_std(x);
    let (my, sy) = mean_and_sample_std(y);
    if sx == F::zero() || sy == F::zero() {
        return Err(Error::DegenerateCorrelation("constant series".into()));
    }
    let mut cross = F::zero();
    for (&a, &b) in x.iter().zip(y) {
        cross = cross + (a - mx) * (b - my);
    }
    // sx * sy first: multiplication commutes bitwise, which keeps
    // pearson(x, y) == pearson(y, x) exact.
    let r = cross / ((sx * sy) * F::from_count(n - 1));
    Ok(r.min(F::one()).max(-F::one()))
}

/// Outcome of the correlation significance test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Significance<F> {
    pub t_statistic: F,
    pub p_value: F,
    pub significant: bool,
}

/// Two-tailed t-test for a Pearson coefficient observed on N samples:
/// t = r sqrt((N-2)/(1-r^2)) against Student's t with N-2 degrees of
/// freedom. |r| = 1 yields p = 0.
pub fn significance<F: Scalar>(r: F, n: usize, alpha: F) -> Result<Significance<F>> {
    if n < 3 {
        return Err(Error::param("significance needs N >= 3"));
    }
    if r.abs() > F::one() {
        return Err(Error::param("|r| must not exceed 1"));
    }
    if r.abs() == F::one() {
        return Ok(Significance {
            t_statistic: F::infinity() * r.signum(),
            p_value: F::zero(),
            significant: true,
        });
    }
    let df = F::from_count(n - 2);
    let t = r * (df / (F::one() - r * r)).sqrt();
    let p = special::student_t_two_tailed(t, df);
    Ok(Significance {
        t_statistic: t,
        p_value: p,
        significant: p < alpha,
    })
}

/// A rolling series with a validity mask: entries without a full window, or
/// whose window is constant, are encoded as 0 with `valid = false`.
#[derive(Debug, Clone, PartialEq)]
pub struct RollingSeries<F> {
    pub values: Vec<F>,
    pub valid: Vec<bool>,
}

/// Trailing-window Pearson correlation: entry t covers bins [t-W+1, t].
pub fn rolling_correlation<F: Scalar>(x: &[F], y: &[F], window: usize) -> Result<RollingSeries<F>> {
    if window < 3 {
        return Err(Error::param("rolling window must be at least 3"));
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < window {
        return Err(Error::param(format!(
            "series length {} shorter than window {window}",
            x.len()
        )));
    }
    let n = x.len();
    let mut values = vec![F::zero(); n];
    let mut valid = vec![false; n];
    for t in (window - 1)..n {
        let lo = t + 1 - window;
        match pearson(&x[lo..=t], &y[lo..=t]) {
            Ok(r) => {
                values[t] = r;
                valid[t] = true;
            }
            Err(Error::DegenerateCorrelation(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(RollingSeries { values, valid })
}

/// One candidate column pair: its fit-range correlation, significance, and
/// whether a rolling-correlation column was materialized for it.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationFeatureSpec<F> {
    pub pair: (String, String),
    pub window: usize,
    pub global_r: F,
    pub p_value: F,
    pub significant: bool,
    /// Constant over the fit range; excluded before testing.
    pub degenerate: bool,
}

impl<F: Scalar> CorrelationFeatureSpec<F> {
    pub fn column_name(&self) -> String {
        correlation_column_name(&self.pair.0, &self.pair.1)
    }
}

pub fn correlation_column_name(a: &str, b: &str) -> String {
    format!("corr({a},{b})")
}

/// Splits `corr(A,B)` back into its pair of base column names.
pub fn parse_correlation_column_name(name: &str) -> Option<(String, String)> {
    let inner = name.strip_prefix("corr(")?.strip_suffix(')')?;
    let (a, b) = inner.split_once(',')?;
    Some((a.to_string(), b.to_string()))
}

/// Evaluates every unordered column pair of the (pre-normalization) base
/// matrix over the fit range and appends a rolling-correlation column for
/// each pair that passes the significance test. Specs are returned for all
/// pairs, ordered by (i, j).
pub fn generate_correlation_features<F: Scalar>(
    matrix: &FeatureMatrix<F>,
    fit_range: BinRange,
    window: usize,
    alpha: F,
) -> Result<(FeatureMatrix<F>, Vec<CorrelationFeatureSpec<F>>)> {
    matrix.check_range(fit_range)?;
    if matrix
        .column_names()
        .iter()
        .any(|n| n.starts_with("corr("))
    {
        return Err(Error::ColumnMismatch(
            "matrix already carries correlation columns".into(),
        ));
    }
    if fit_range.len() < 3 {
        return Err(Error::param("fit range needs at least 3 bins"));
    }
    if matrix.nrows() < window {
        return Err(Error::param("matrix shorter than the rolling window"));
    }

    let ncols = matrix.ncols();
    let columns: Vec<Vec<F>> = (0..ncols).map(|c| matrix.column(c)).collect();
    let fit_slices: Vec<Vec<F>> = columns
        .iter()
        .map(|col| col[fit_range.start..=fit_range.end].to_vec())
        .collect();

    let mut augmented = matrix.clone();
    let mut specs = Vec::with_capacity(ncols * (ncols - 1) / 2);
    for i in 0..ncols {
        for j in (i + 1)..ncols {
            let pair = (
                matrix.column_names()[i].clone(),
                matrix.column_names()[j].clone(),
            );
            let spec = match pearson(&fit_slices[i], &fit_slices[j]) {
                Ok(r) => {
                    let sig = significance(r, fit_range.len(), alpha)?;
                    CorrelationFeatureSpec {
                        pair,
                        window,
                        global_r: r,
                        p_value: sig.p_value,
                        significant: sig.significant,
                        degenerate: false,
                    }
                }
                Err(Error::DegenerateCorrelation(_)) => CorrelationFeatureSpec {
                    pair,
                    window,
                    global_r: F::zero(),
                    p_value: F::one(),
                    significant: false,
                    degenerate: true,
                },
                Err(e) => return Err(e),
            };
            if spec.significant {
                let rolling = rolling_correlation(&columns[i], &columns[j], window)?;
                augmented.append_column(spec.column_name(), &rolling.values)?;
            }
            specs.push(spec);
        }
    }
    Ok((augmented, specs))
}

/// Recomputes the rolling-correlation columns named in `required` on a
/// matrix that only carries base features (used to score one model's
/// feature set on a foreign dataset).
pub fn materialize_correlation_columns<F: Scalar>(
    matrix: &FeatureMatrix<F>,
    required: &[String],
    window: usize,
) -> Result<FeatureMatrix<F>> {
    let mut out = matrix.clone();
    for name in required {
        if out.column_index(name).is_some() {
            continue;
        }
        let (a, b) = parse_correlation_column_name(name).ok_or_else(|| {
            Error::ColumnMismatch(format!("required column `{name}` is not available"))
        })?;
        let xa = out.column_by_name(&a)?;
        let xb = out.column_by_name(&b)?;
        let rolling = rolling_correlation(&xa, &xb, window)?;
        out.append_column(name.clone(), &rolling.values)?;
    }
    Ok(out)
}

/// Serializes specs as `pair_a,pair_b,global_r,p_value,significant`.
pub fn specs_to_csv<F: Scalar>(specs: &[CorrelationFeatureSpec<F>]) -> String {
    let mut out = String::from("pair_a,pair_b,global_r,p_value,significant\n");
    for s in specs {
        writeln!(
            out,
            "{},{},{},{},{}",
            s.pair.0, s.pair.1, s.global_r, s.p_value, s.significant
        )
        .unwrap();
    }
    out
}
