//! File-artifact pipeline: one function per stage, driven by a TOML config.
//!
//! Artifacts land in the output directory under fixed names, so each stage
//! can be run, inspected and re-run independently:
//!
//! ```text
//! events.csv                  ingest / synth
//! features.csv(.meta.toml)    features
//! augmented.csv, corr_specs.csv   correlate
//! selection.csv, selection.meta.toml   select
//! model.txt                   train
//! verdicts.csv                detect
//! am.csv, dist.csv            evaluate
//! clusters.txt                cluster
//! report.txt, plots/          report
//! ```

use crate::error::{Error, Result};
use crate::event::{parse_event_log, write_event_log};
use crate::features::{extract_features, ExtractionConfig};
use crate::matrix::{BinRange, FeatureMatrix, MatrixMeta};
use crate::mrt::{parse_mrt_stream, ParseMode, ParseStats};
use crate::num::Scalar;
use crate::selector::{select_features_with_fit, SelectionConfig, SelectionReport};
use crate::stats::{generate_correlation_features, specs_to_csv, standardize_apply, standardize_fit};
use crate::svm::{load_model, save_model, train, KernelParams, OcsvmModel, TrainConfig, TrainingDiagnostics};
use crate::{eval, selector, synth};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Whole-pipeline configuration, TOML on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub dataset: DatasetSection,
    #[serde(default)]
    pub features: FeaturesSection,
    pub pipeline: PipelineSection,
    #[serde(default)]
    pub selection: SelectionSection,
    #[serde(default)]
    pub svm: SvmSection,
    #[serde(default)]
    pub evaluation: EvaluationSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub id: String,
    /// Event log produced by `ingest` or `synth`.
    pub events: PathBuf,
    pub bin_width: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeaturesSection {
    pub table_exchange_window_bins: u64,
    pub table_exchange_min_prefixes: usize,
    pub strict_aw_equality: bool,
}

impl Default for FeaturesSection {
    fn default() -> Self {
        let d = ExtractionConfig::default();
        FeaturesSection {
            table_exchange_window_bins: d.table_exchange_window_bins,
            table_exchange_min_prefixes: d.table_exchange_min_prefixes,
            strict_aw_equality: d.strict_aw_equality,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSection {
    /// Normal-period bins used to fit statistics and train the model.
    pub fit_range: BinRange,
    /// Ground-truth anomaly label.
    pub anomaly_interval: BinRange,
    #[serde(default = "default_window")]
    pub correlation_window: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_window() -> usize {
    60
}

fn default_alpha() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionSection {
    pub k: usize,
    pub n_base: usize,
    pub n_corr: usize,
}

impl Default for SelectionSection {
    fn default() -> Self {
        let d = SelectionConfig::default();
        SelectionSection {
            k: d.k,
            n_base: d.n_base,
            n_corr: d.n_corr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmSection {
    pub nu: f64,
    pub gamma: f64,
    pub tol: f64,
    pub max_iter: u64,
    /// Grid-search on held-out labeled bins instead of using (nu, gamma).
    pub tune: bool,
    pub nu_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
}

impl Default for SvmSection {
    fn default() -> Self {
        SvmSection {
            nu: 0.05,
            gamma: 0.0625,
            tol: 1e-3,
            max_iter: 10_000_000,
            tune: false,
            nu_grid: vec![0.01, 0.05, 0.1, 0.2, 0.5],
            gamma_grid: vec![2f64.powi(-10), 2f64.powi(-7), 2f64.powi(-4), 0.5, 4.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationSection {
    pub seed: u64,
    pub kmeans_restarts: usize,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        EvaluationSection {
            seed: 42,
            kmeans_restarts: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::format("config", e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Format { reason, .. } => Error::format(path.display().to_string(), reason),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.pipeline.fit_range.intersects(&self.pipeline.anomaly_interval) {
            return Err(Error::param("anomaly interval overlaps the fit range"));
        }
        if self.dataset.bin_width == 0 {
            return Err(Error::param("bin width must be positive"));
        }
        if self.pipeline.alpha <= 0.0 || self.pipeline.alpha >= 1.0 {
            return Err(Error::param("alpha must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn extraction_config(&self) -> ExtractionConfig {
        ExtractionConfig {
            bin_width: self.dataset.bin_width,
            dataset_start: None,
            table_exchange_window_bins: self.features.table_exchange_window_bins,
            table_exchange_min_prefixes: self.features.table_exchange_min_prefixes,
            strict_aw_equality: self.features.strict_aw_equality,
            dataset_id: Some(self.dataset.id.clone()),
            anomaly_interval: Some(self.pipeline.anomaly_interval),
        }
    }

    pub fn selection_config(&self) -> SelectionConfig {
        SelectionConfig {
            k: self.selection.k,
            n_base: self.selection.n_base,
            n_corr: self.selection.n_corr,
            ..SelectionConfig::default()
        }
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.output.dir.join(name)
    }

    /// Default pipeline settings for a synthetic scenario: the fit range
    /// starts after the rolling-window warmup and ends well before the
    /// labeled interval; everything else is the library default.
    pub fn for_scenario(scenario: &synth::ScenarioConfig, events: PathBuf, out_dir: PathBuf) -> Result<Self> {
        let anomaly = scenario.anomaly_interval;
        let fit_start = 120usize;
        let fit_end = anomaly.start.saturating_sub(150);
        if fit_end <= fit_start {
            return Err(Error::param("scenario leaves no room for a fit range"));
        }
        let config = PipelineConfig {
            dataset: DatasetSection {
                id: scenario.dataset_id.clone(),
                events,
                bin_width: scenario.bin_width,
            },
            features: FeaturesSection::default(),
            pipeline: PipelineSection {
                fit_range: BinRange::new(fit_start, fit_end)?,
                anomaly_interval: anomaly,
                correlation_window: default_window(),
                alpha: default_alpha(),
            },
            selection: SelectionSection::default(),
            svm: SvmSection::default(),
            evaluation: EvaluationSection::default(),
            output: OutputSection { dir: out_dir },
        };
        config.validate()?;
        Ok(config)
    }

    fn ensure_out_dir(&self) -> Result<()> {
        std::fs::create_dir_all(&self.output.dir)?;
        Ok(())
    }
}

fn missing_artifact(path: &Path, produced_by: &str) -> Error {
    Error::Io(std::io::Error::new(
        std::io::ErrorKind::NotFound,
        format!(
            "missing upstream artifact {}; run `{produced_by}` first",
            path.display()
        ),
    ))
}

fn read_artifact<F: Scalar>(path: &Path, produced_by: &str) -> Result<FeatureMatrix<F>> {
    if !path.exists() {
        return Err(missing_artifact(path, produced_by));
    }
    FeatureMatrix::read_files(path)
}

/// `ingest`: MRT (binary, optionally gzipped) or an existing event log into
/// the canonical sorted event log.
pub fn stage_ingest(input: &Path, output: &Path, strict: bool) -> Result<ParseStats> {
    let data = std::fs::read(input)?;
    let looks_like_mrt = data.starts_with(&[0x1f, 0x8b])
        || (data.len() >= 12 && data[4] == 0 && (data[5] == 16 || data[5] == 17));
    let (mut events, stats) = if looks_like_mrt {
        let mode = if strict { ParseMode::Strict } else { ParseMode::Lenient };
        parse_mrt_stream(&data[..], mode)?
    } else {
        let text = String::from_utf8(data)
            .map_err(|_| Error::format(input.display().to_string(), "neither MRT nor UTF-8 event log"))?;
        let events = parse_event_log(&text)?;
        let stats = ParseStats {
            records_read: events.len() as u64,
            records_accepted: events.len() as u64,
            events_emitted: events.len() as u64,
            ..ParseStats::default()
        };
        (events, stats)
    };
    crate::event::sort_events(&mut events);
    std::fs::write(output, write_event_log(&events)?)?;
    Ok(stats)
}

/// `synth`: preset or explicit scenario into events.csv (+ label sidecar
/// parameters recorded next to it).
pub fn stage_synth(config: &synth::ScenarioConfig, output: &Path) -> Result<usize> {
    let events = synth::generate(config)?;
    std::fs::write(output, write_event_log(&events)?)?;
    let meta = MatrixMeta {
        bin_width: config.bin_width,
        dataset_id: Some(config.dataset_id.clone()),
        anomaly_interval: Some(config.anomaly_interval),
        ..MatrixMeta::default()
    };
    let meta_text = toml::to_string(&meta).expect("meta serializes");
    std::fs::write(crate::matrix::meta_path(output), meta_text)?;
    Ok(events.len())
}

/// `features`: event log into the 18-column base matrix.
pub fn stage_features<F: Scalar>(config: &PipelineConfig) -> Result<FeatureMatrix<F>> {
    config.ensure_out_dir()?;
    let events_path = &config.dataset.events;
    if !events_path.exists() {
        return Err(missing_artifact(events_path, "ingest or synth"));
    }
    let text = std::fs::read_to_string(events_path)?;
    let events = parse_event_log(&text)?;
    let matrix = extract_features::<F>(&events, &config.extraction_config())?;
    matrix.write_files(&config.out("features.csv"))?;
    Ok(matrix)
}

/// `correlate`: base matrix into the augmented matrix plus pair specs.
pub fn stage_correlate<F: Scalar>(config: &PipelineConfig) -> Result<(FeatureMatrix<F>, usize)> {
    config.ensure_out_dir()?;
    let base = read_artifact::<F>(&config.out("features.csv"), "features")?;
    let (augmented, specs) = generate_correlation_features(
        &base,
        config.pipeline.fit_range,
        config.pipeline.correlation_window,
        F::from_f64_lossy(config.pipeline.alpha),
    )?;
    augmented.write_files(&config.out("augmented.csv"))?;
    std::fs::write(config.out("corr_specs.csv"), specs_to_csv(&specs))?;
    let emitted = specs.iter().filter(|s| s.significant).count();
    Ok((augmented, emitted))
}

/// `select`: augmented matrix into the ranked selection report.
pub fn stage_select<F: Scalar>(config: &PipelineConfig) -> Result<SelectionReport<F>> {
    config.ensure_out_dir()?;
    let augmented = read_artifact::<F>(&config.out("augmented.csv"), "correlate")?;
    let report = select_features_with_fit(
        &augmented,
        config.pipeline.fit_range,
        &config.selection_config(),
    )?;
    std::fs::write(config.out("selection.csv"), report.to_csv())?;
    let params = format!(
        "k = {}\nn_base = {}\nn_corr = {}\n",
        report.k, report.n_base, report.n_corr
    );
    std::fs::write(config.out("selection.meta.toml"), params)?;
    Ok(report)
}

/// Selected column names from a selection.csv, in rank order.
pub fn selected_from_csv(text: &str) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        // corr(A,B) names contain one comma: name spans all but the 8
        // trailing numeric columns.
        if cols.len() < 9 {
            return Err(Error::line(idx + 1, "too few columns"));
        }
        let name = cols[..cols.len() - 8].join(",");
        let selected = cols[cols.len() - 1] == "true";
        if selected {
            names.push(name);
        }
    }
    Ok(names)
}

/// `train`: one-class model on the fit range of the selected features.
pub fn stage_train<F: Scalar>(config: &PipelineConfig) -> Result<(OcsvmModel<F>, TrainingDiagnostics<F>)> {
    config.ensure_out_dir()?;
    let augmented = read_artifact::<F>(&config.out("augmented.csv"), "correlate")?;
    let selection_path = config.out("selection.csv");
    if !selection_path.exists() {
        return Err(missing_artifact(&selection_path, "select"));
    }
    let selected = selected_from_csv(&std::fs::read_to_string(&selection_path)?)?;
    if selected.is_empty() {
        return Err(Error::param("selection report has no selected features"));
    }

    let selected_matrix = augmented.select_columns(&selected)?;
    let params = standardize_fit(&selected_matrix, config.pipeline.fit_range)?;
    let standardized = standardize_apply(&selected_matrix, &params)?;
    let rows = standardized.rows_in(config.pipeline.fit_range)?;

    let train_config = TrainConfig {
        tol: F::from_f64_lossy(config.svm.tol),
        max_iter: config.svm.max_iter,
        ..TrainConfig::default()
    };
    let (nu, gamma) = if config.svm.tune {
        tune_on_holdout(config, &standardized, &rows, &train_config)?
    } else {
        (config.svm.nu, config.svm.gamma)
    };

    let kernel = KernelParams::rbf(F::from_f64_lossy(gamma))?;
    let (mut model, diagnostics) = train(&rows, F::from_f64_lossy(nu), kernel, &train_config)?;
    model.feature_names = selected.clone();
    model.standardization = Some(params);
    model.correlation_window = Some(config.pipeline.correlation_window);
    save_model(&model, &config.out("model.txt"))?;
    Ok((model, diagnostics))
}

/// Grid search scored on a balanced holdout built from the labeled bins.
fn tune_on_holdout<F: Scalar>(
    config: &PipelineConfig,
    standardized: &FeatureMatrix<F>,
    train_rows: &[Vec<F>],
    train_config: &TrainConfig<F>,
) -> Result<(f64, f64)> {
    let anomaly = config.pipeline.anomaly_interval;
    let (positives, negatives) = eval::balanced_split(
        standardized.nrows(),
        anomaly,
        config.pipeline.fit_range,
        config.evaluation.seed,
    )?;
    let mut rows = Vec::with_capacity(positives.len() + negatives.len());
    let mut labels = Vec::with_capacity(rows.capacity());
    for &r in positives.iter().chain(&negatives) {
        rows.push(standardized.row(r).to_vec());
        labels.push(anomaly.contains(r));
    }
    let nus: Vec<F> = config.svm.nu_grid.iter().map(|&v| F::from_f64_lossy(v)).collect();
    let gammas: Vec<F> = config.svm.gamma_grid.iter().map(|&v| F::from_f64_lossy(v)).collect();
    let ((nu, gamma), _) = crate::svm::tune(train_rows, &rows, &labels, &nus, &gammas, train_config)?;
    Ok((nu.to_f64_lossy(), gamma.to_f64_lossy()))
}

/// Per-bin verdicts plus the smoothed block verdicts, as written by `detect`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectOutcome<F> {
    pub decisions: Vec<F>,
    pub abnormal: Vec<bool>,
    pub block_abnormal: Vec<bool>,
    pub abnormal_fraction: F,
}

/// `detect`: scores every bin of a dataset with a trained model.
pub fn stage_detect<F: Scalar>(
    config: &PipelineConfig,
    model_path: Option<&Path>,
    features_path: Option<&Path>,
) -> Result<DetectOutcome<F>> {
    config.ensure_out_dir()?;
    let model_path = model_path.map(Path::to_path_buf).unwrap_or_else(|| config.out("model.txt"));
    if !model_path.exists() {
        return Err(missing_artifact(&model_path, "train"));
    }
    let model: OcsvmModel<F> = load_model(&model_path)?;
    let features_path = features_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.out("features.csv"));
    let base = read_artifact::<F>(&features_path, "features")?;

    let prepared = eval::prepare_for_model(&model, &base)?;
    let decisions = model.decisions(&prepared)?;
    // Rolling-correlation entries are undefined (0-encoded) until a full
    // window has elapsed; bins in that head region are not scoreable.
    let needs_window = model.feature_names.iter().any(|n| n.starts_with("corr("));
    let head = if needs_window {
        model.correlation_window.unwrap_or(60).saturating_sub(1)
    } else {
        0
    };
    let abnormal: Vec<bool> = decisions
        .iter()
        .enumerate()
        .map(|(r, &d)| r >= head && d < F::zero())
        .collect();
    let k = config.selection.k.max(1);
    let blocks = selector::majority_smooth(&abnormal, k);

    let mut csv = String::from("bin_index,bin_start,decision,abnormal,block_abnormal\n");
    for (r, key) in base.bin_keys().iter().enumerate() {
        writeln!(
            csv,
            "{},{},{},{},{}",
            key.index,
            key.start,
            decisions[r],
            abnormal[r],
            blocks[r / k]
        )
        .unwrap();
    }
    std::fs::write(config.out("verdicts.csv"), csv)?;

    let negatives = abnormal.iter().filter(|&&a| a).count();
    let abnormal_fraction = F::from_count(negatives) / F::from_count(abnormal.len().max(1));
    Ok(DetectOutcome {
        decisions,
        abnormal,
        block_abnormal: blocks,
        abnormal_fraction,
    })
}

/// One entry of the cross-evaluation manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEvent {
    pub name: String,
    pub features: PathBuf,
    pub model: PathBuf,
    pub fit_range: BinRange,
}

/// Manifest for `evaluate`: one features+model pair per event.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalManifest {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Round accuracy cells to integer percent before computing distances
    /// (reporting mode). Off by default: distances use full precision.
    #[serde(default)]
    pub rounded: bool,
    #[serde(rename = "event")]
    pub events: Vec<ManifestEvent>,
}

fn default_seed() -> u64 {
    42
}

impl EvalManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::format(path.display().to_string(), e.to_string()))
    }
}

/// `evaluate`: cross-event accuracy and distance matrices.
pub fn stage_evaluate<F: Scalar>(
    manifest: &EvalManifest,
    out_dir: &Path,
) -> Result<(eval::AccuracyMatrix<F>, eval::DistanceMatrix<F>)> {
    std::fs::create_dir_all(out_dir)?;
    let mut models = Vec::new();
    let mut datasets = Vec::new();
    for entry in &manifest.events {
        let model: OcsvmModel<F> = load_model(&entry.model)?;
        let features = read_artifact::<F>(&entry.features, "features")?;
        models.push(eval::EventModel {
            name: entry.name.clone(),
            model,
        });
        datasets.push(eval::EventDataset {
            name: entry.name.clone(),
            features,
            fit_range: entry.fit_range,
        });
    }
    let am = eval::accuracy_matrix(&models, &datasets, manifest.seed)?;
    let dist = if manifest.rounded {
        eval::distance_matrix(&am.rounded())
    } else {
        eval::distance_matrix(&am)
    };
    std::fs::write(out_dir.join("am.csv"), am.to_csv())?;
    std::fs::write(out_dir.join("dist.csv"), dist.to_csv())?;
    Ok((am, dist))
}

/// `cluster`: groups events from a distance matrix CSV.
pub fn stage_cluster<F: Scalar>(
    dist_path: &Path,
    k: usize,
    seed: u64,
    restarts: usize,
    output: &Path,
) -> Result<eval::ClusterResult<F>> {
    if !dist_path.exists() {
        return Err(missing_artifact(dist_path, "evaluate or repro-tables"));
    }
    let d = eval::DistanceMatrix::<F>::from_csv(&std::fs::read_to_string(dist_path)?)?;
    let result = eval::cluster_events(&d, k, seed, restarts)?;
    std::fs::write(output, cluster_text(&result, k, seed))?;
    Ok(result)
}

pub fn cluster_text<F: Scalar>(result: &eval::ClusterResult<F>, k: usize, seed: u64) -> String {
    let mut out = format!("k = {k}\nseed = {seed}\ninertia = {}\n", result.inertia);
    for (i, group) in result.groups.iter().enumerate() {
        writeln!(out, "group {} = {}", i + 1, group.join(", ")).unwrap();
    }
    out
}

/// `repro-tables`: bundled six-event accuracy matrix, its Eq-derived
/// distance matrix, and the k = 2 / k = 3 clusterings.
pub fn repro_tables<F: Scalar>(out_dir: Option<&Path>, seed: u64, restarts: usize) -> Result<String> {
    let am = eval::reference_accuracy_matrix::<F>();
    let dist = eval::distance_matrix(&am);
    let mut out = String::new();
    out.push_str("accuracy matrix (model x dataset, percent)\n");
    out.push_str(&am.to_csv());
    out.push_str("\ndistance matrix d(i,j) = |AM(i,i)+AM(j,j)-AM(i,j)-AM(j,i)|\n");
    out.push_str(&dist.to_csv());
    out.push_str("\nnote: the Slammer/Florida distance evaluates to 109; the 105 in the\n");
    out.push_str("originally published table does not match its own accuracy matrix.\n\n");
    for k in [2usize, 3] {
        let clusters = eval::cluster_events(&dist, k, seed, restarts)?;
        out.push_str(&cluster_text(&clusters, k, seed));
        out.push('\n');
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("am.csv"), am.to_csv())?;
        std::fs::write(dir.join("dist.csv"), dist.to_csv())?;
        std::fs::write(dir.join("repro-tables.txt"), &out)?;
    }
    Ok(out)
}

/// `report`: single human-readable summary of whatever artifacts exist,
/// plus plot-ready CSVs for the selected features. Never mutates upstream
/// artifacts.
pub fn stage_report<F: Scalar>(config: &PipelineConfig) -> Result<String> {
    let mut out = String::new();
    writeln!(out, "dataset: {}", config.dataset.id).unwrap();

    let features_path = config.out("features.csv");
    if features_path.exists() {
        let m = read_artifact::<F>(&features_path, "features")?;
        writeln!(
            out,
            "features: {} bins x {} columns, anomaly interval {:?}",
            m.nrows(),
            m.ncols(),
            m.anomaly_interval().map(|r| (r.start, r.end))
        )
        .unwrap();
    }

    let selection_path = config.out("selection.csv");
    let augmented_path = config.out("augmented.csv");
    if selection_path.exists() && augmented_path.exists() {
        let text = std::fs::read_to_string(&selection_path)?;
        let selected = selected_from_csv(&text)?;
        writeln!(out, "selected features: {}", selected.join(", ")).unwrap();

        let augmented = read_artifact::<F>(&augmented_path, "correlate")?;
        let report = select_features_with_fit(
            &augmented,
            config.pipeline.fit_range,
            &config.selection_config(),
        )?;
        let plots = config.out("plots");
        std::fs::create_dir_all(&plots)?;
        for score in report.scores.iter().filter(|s| s.selected) {
            let csv = selector::feature_plot_csv(&augmented, score)?;
            let safe: String = score
                .name
                .chars()
                .map(|c| if c.is_alphanumeric() { c } else { '_' })
                .collect();
            std::fs::write(plots.join(format!("{safe}.csv")), csv)?;
        }
        writeln!(out, "plot CSVs: {}", plots.display()).unwrap();
    }

    let verdicts_path = config.out("verdicts.csv");
    if verdicts_path.exists() {
        let text = std::fs::read_to_string(&verdicts_path)?;
        let (block_confusion, bin_fraction) =
            verdict_summary::<F>(&text, config.pipeline.anomaly_interval, config.selection.k)?;
        writeln!(out, "detect: abnormal bin fraction {bin_fraction}").unwrap();
        if let Some(c) = block_confusion {
            writeln!(
                out,
                "detect blocks: TPR {} FPR {} accuracy {}",
                c.tpr, c.fpr, c.accuracy
            )
            .unwrap();
        }
    }

    for name in ["am.csv", "dist.csv"] {
        let p = config.out(name);
        if p.exists() {
            writeln!(out, "\n{name}:").unwrap();
            out.push_str(&std::fs::read_to_string(&p)?);
        }
    }
    let clusters = config.out("clusters.txt");
    if clusters.exists() {
        writeln!(out, "\nclusters:").unwrap();
        out.push_str(&std::fs::read_to_string(&clusters)?);
    }

    std::fs::write(config.out("report.txt"), &out)?;
    Ok(out)
}

/// Block-level confusion of a verdicts.csv against the labeled interval.
pub fn verdict_summary<F: Scalar>(
    csv: &str,
    anomaly: BinRange,
    k: usize,
) -> Result<(Option<eval::ConfusionOutcome<F>>, F)> {
    let mut bin_flags = Vec::new();
    let mut block_flags = Vec::new();
    for line in csv.lines().skip(1) {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(Error::format("verdicts.csv", "expected 5 columns"));
        }
        bin_flags.push(cols[3] == "true");
        block_flags.push(cols[4] == "true");
    }
    if bin_flags.is_empty() {
        return Err(Error::format("verdicts.csv", "no verdicts"));
    }
    let k = k.max(1);
    let nblocks = bin_flags.len().div_ceil(k);
    let mut predicted = Vec::with_capacity(nblocks);
    let mut truth = Vec::with_capacity(nblocks);
    for b in 0..nblocks {
        let lo = b * k;
        let hi = ((b + 1) * k - 1).min(bin_flags.len() - 1);
        predicted.push(block_flags[lo]);
        truth.push(anomaly.intersects(&BinRange::new(lo, hi)?));
    }
    let confusion = eval::confusion_metrics::<F>(&predicted, &truth).ok();
    let flagged = bin_flags.iter().filter(|&&f| f).count();
    let fraction = F::from_count(flagged) / F::from_count(bin_flags.len());
    Ok((confusion, fraction))
}

/// `run-all`: features through report in one call (events must exist).
pub fn run_all<F: Scalar>(config: &PipelineConfig) -> Result<String> {
    stage_features::<F>(config)?;
    stage_correlate::<F>(config)?;
    stage_select::<F>(config)?;
    stage_train::<F>(config)?;
    stage_detect::<F>(config, None, None)?;
    stage_report::<F>(config)
}
