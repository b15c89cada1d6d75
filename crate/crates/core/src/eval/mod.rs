//! Detection metrics, the cross-event accuracy matrix, the derived distance
//! matrix, and clustering of events by model similarity.

mod kmeans;
mod reference;

pub use kmeans::{kmeans, KmeansResult};
pub use reference::{reference_accuracy_matrix, REFERENCE_EVENTS};

use crate::error::{Error, Result};
use crate::matrix::{BinRange, FeatureMatrix};
use crate::num::Scalar;
use crate::stats::{materialize_correlation_columns, standardize_apply};
use crate::svm::OcsvmModel;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;

/// Confusion counts with the derived rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfusionOutcome<F> {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
    pub tpr: F,
    pub fpr: F,
    pub accuracy: F,
    /// Undefined when nothing was predicted positive.
    pub precision: Option<F>,
}

/// Tallies predictions against truth (`true` = abnormal).
pub fn confusion_metrics<F: Scalar>(predicted: &[bool], truth: &[bool]) -> Result<ConfusionOutcome<F>> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::param("confusion over an empty sequence"));
    }
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut tn = 0u64;
    let mut fn_ = 0u64;
    for (&p, &t) in predicted.iter().zip(truth) {
        match (p, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let ratio = |n: u64, d: u64| {
        if d == 0 {
            F::zero()
        } else {
            F::from_count(n as usize) / F::from_count(d as usize)
        }
    };
    Ok(ConfusionOutcome {
        tp,
        fp,
        tn,
        fn_,
        tpr: ratio(tp, tp + fn_),
        fpr: ratio(fp, fp + tn),
        accuracy: ratio(tp + tn, tp + fp + tn + fn_),
        precision: (tp + fp > 0).then(|| ratio(tp, tp + fp)),
    })
}

/// Square event-by-event matrix with possibly-invalid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<F> {
    event_names: Vec<String>,
    cells: Vec<Option<F>>,
}

/// Accuracy of model i on dataset j, percent scale.
pub type AccuracyMatrix<F> = SquareMatrix<F>;
/// Pairwise event distances.
pub type DistanceMatrix<F> = SquareMatrix<F>;

impl<F: Scalar> SquareMatrix<F> {
    pub fn from_parts(event_names: Vec<String>, cells: Vec<Option<F>>) -> Result<Self> {
        if cells.len() != event_names.len() * event_names.len() {
            return Err(Error::param("matrix is not square"));
        }
        Ok(SquareMatrix { event_names, cells })
    }

    pub fn n(&self) -> usize {
        self.event_names.len()
    }

    pub fn event_names(&self) -> &[String] {
        &self.event_names
    }

    pub fn get(&self, i: usize, j: usize) -> Option<F> {
        self.cells[i * self.n() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Option<F>) {
        let n = self.n();
        self.cells[i * n + j] = v;
    }

    /// All cells present?
    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(Option::is_some)
    }

    /// Copy with every cell rounded to the nearest integer (reporting mode).
    pub fn rounded(&self) -> Self {
        SquareMatrix {
            event_names: self.event_names.clone(),
            cells: self.cells.iter().map(|c| c.map(Float::round)).collect(),
        }
    }

    /// CSV with a leading name column; invalid cells stay empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("event");
        for name in &self.event_names {
            write!(out, ",{name}").unwrap();
        }
        out.push('\n');
        for i in 0..self.n() {
            out.push_str(&self.event_names[i]);
            for j in 0..self.n() {
                match self.get(i, j) {
                    Some(v) => write!(out, ",{v}").unwrap(),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::line(1, "empty matrix"))?;
        let mut head = header.split(',');
        if head.next() != Some("event") {
            return Err(Error::line(1, "header must start with `event`"));
        }
        let event_names: Vec<String> = head.map(str::to_owned).collect();
        let n = event_names.len();
        let mut cells = Vec::with_capacity(n * n);
        for (idx, line) in lines {
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let mut fields = line.split(',');
            let _name = fields.next();
            for field in fields {
                if field.is_empty() {
                    cells.push(None);
                } else {
                    let v: f64 = field
                        .parse()
                        .map_err(|_| Error::line(lineno, format!("bad cell `{field}`")))?;
                    cells.push(Some(F::from_f64_lossy(v)));
                }
            }
        }
        SquareMatrix::from_parts(event_names, cells)
    }
}

/// d(i, j) = |AM(i,i) + AM(j,j) - AM(i,j) - AM(j,i)|: symmetric with a zero
/// diagonal by construction. Distances touching an invalid cell are invalid.
pub fn distance_matrix<F: Scalar>(am: &AccuracyMatrix<F>) -> DistanceMatrix<F> {
    let n = am.n();
    let mut cells = vec![None; n * n];
    for i in 0..n {
        cells[i * n + i] = Some(F::zero());
        for j in (i + 1)..n {
            let d = match (am.get(i, i), am.get(j, j), am.get(i, j), am.get(j, i)) {
                (Some(ii), Some(jj), Some(ij), Some(ji)) => Some((ii + jj - ij - ji).abs()),
                _ => None,
            };
            cells[i * n + j] = d;
            cells[j * n + i] = d;
        }
    }
    SquareMatrix {
        event_names: am.event_names.clone(),
        cells,
    }
}

/// One trained per-event model, with the name it evaluates under.
#[derive(Debug, Clone)]
pub struct EventModel<F> {
    pub name: String,
    pub model: OcsvmModel<F>,
}

/// One labeled dataset: base features plus the (held-out) fit range its own
/// model was trained on.
#[derive(Debug, Clone)]
pub struct EventDataset<F> {
    pub name: String,
    pub features: FeatureMatrix<F>,
    pub fit_range: BinRange,
}

/// Balanced test split of one dataset: all anomaly bins as positives and an
/// equal-count seeded sample of normal bins outside the fit range.
pub fn balanced_split(
    nrows: usize,
    anomaly: BinRange,
    fit_range: BinRange,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if anomaly.end >= nrows {
        return Err(Error::param("anomaly interval exceeds dataset"));
    }
    let positives: Vec<usize> = anomaly.iter().collect();
    let mut pool: Vec<usize> = (0..nrows)
        .filter(|&r| !anomaly.contains(r) && !fit_range.contains(r))
        .collect();
    let want = positives.len().min(pool.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Partial Fisher-Yates: the first `want` entries become the sample.
    for i in 0..want {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
    }
    let mut negatives: Vec<usize> = pool[..want].to_vec();
    negatives.sort_unstable();
    Ok((positives, negatives))
}

/// Prepares a dataset's base features for one model: rebuilds the model's
/// correlation columns, selects its feature set, and applies its stored
/// standardization.
pub fn prepare_for_model<F: Scalar>(
    model: &OcsvmModel<F>,
    features: &FeatureMatrix<F>,
) -> Result<FeatureMatrix<F>> {
    let window = model.correlation_window.unwrap_or(60);
    let materialized = materialize_correlation_columns(features, &model.feature_names, window)?;
    let selected = materialized.select_columns(&model.feature_names)?;
    match &model.standardization {
        Some(params) => standardize_apply(&selected, params),
        None => Ok(selected),
    }
}

/// Cross-evaluates every model on every dataset's balanced split.
///
/// Cells are accuracy percent at full precision; a model whose features
/// cannot be derived on a foreign dataset yields an invalid cell. The
/// negative sample depends only on (dataset, seed), so all models face the
/// same test set per dataset.
pub fn accuracy_matrix<F: Scalar>(
    models: &[EventModel<F>],
    datasets: &[EventDataset<F>],
    split_seed: u64,
) -> Result<AccuracyMatrix<F>> {
    if models.len() != datasets.len() {
        return Err(Error::param("need one dataset per model"));
    }
    let n = models.len();
    let hundred = F::from_f64_lossy(100.0);
    let mut cells = vec![None; n * n];
    for (j, dataset) in datasets.iter().enumerate() {
        let anomaly = dataset
            .features
            .anomaly_interval()
            .ok_or_else(|| Error::param(format!("dataset `{}` is unlabeled", dataset.name)))?;
        let seed = split_seed.wrapping_add((j as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let (positives, negatives) =
            balanced_split(dataset.features.nrows(), anomaly, dataset.fit_range, seed)?;
        for (i, event_model) in models.iter().enumerate() {
            let cell = prepare_for_model(&event_model.model, &dataset.features)
                .ok()
                .and_then(|prepared| {
                    let cap = positives.len() + negatives.len();
                    let mut predicted = Vec::with_capacity(cap);
                    let mut truth = Vec::with_capacity(cap);
                    for &r in positives.iter().chain(&negatives) {
                        let d = event_model.model.decision(prepared.row(r)).ok()?;
                        predicted.push(d < F::zero());
                        truth.push(r <= anomaly.end && r >= anomaly.start);
                    }
                    let outcome = confusion_metrics::<F>(&predicted, &truth).ok()?;
                    Some(outcome.accuracy * hundred)
                });
            cells[i * n + j] = cell;
        }
    }
    SquareMatrix::from_parts(models.iter().map(|m| m.name.clone()).collect(), cells)
}

/// Flat clustering of events embedded as their distance-matrix rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult<F> {
    /// Groups ordered by first member, members in event order.
    pub groups: Vec<Vec<String>>,
    pub assignments: Vec<usize>,
    pub inertia: F,
}

pub fn cluster_events<F: Scalar>(
    d: &DistanceMatrix<F>,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<ClusterResult<F>> {
    if !d.is_complete() {
        return Err(Error::param("distance matrix has invalid cells"));
    }
    let n = d.n();
    let points: Vec<Vec<F>> = (0..n)
        .map(|i| (0..n).map(|j| d.get(i, j).expect("checked complete")).collect())
        .collect();
    let result = kmeans(&points, k, seed, restarts)?;

    let mut order: Vec<usize> = Vec::new(); // cluster ids by first appearance
    for &c in &result.assignments {
        if !order.contains(&c) {
            order.push(c);
        }
    }
    let groups = order
        .iter()
        .map(|&c| {
            result
                .assignments
                .iter()
                .enumerate()
                .filter(|(_, &a)| a == c)
                .map(|(i, _)| d.event_names[i].clone())
                .collect()
        })
        .collect();
    Ok(ClusterResult {
        groups,
        assignments: result.assignments,
        inertia: result.inertia,
    })
}
