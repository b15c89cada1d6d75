//! Versioned text format for trained models.
//!
//! Line-oriented key/value layout; every float is decimal text with 17
//! significant digits, so parsing reproduces the trained model (and its
//! decisions) bit for bit.
//!
//! ```text
//! ocsvm-model v1
//! nu 1.0000000000000001e-1
//! kernel rbf
//! gamma 5.0000000000000000e-1
//! rho 7.3105857863000490e-1
//! correlation_window 60
//! feature Announce
//! feature corr(Announce,WADup)
//! standardization_fit 0 1199
//! standardize Announce <mean> <std>
//! standardize corr(Announce,WADup) <mean> <std>
//! sv <alpha> <x0> <x1>
//! end
//! ```

use super::{KernelKind, KernelParams, OcsvmModel};
use crate::error::{Error, Result};
use crate::matrix::BinRange;
use crate::num::Scalar;
use crate::stats::{ColumnStandardization, StandardizationParams};
use std::fmt::Write as _;
use std::path::Path;

const MAGIC: &str = "ocsvm-model v1";

fn sig17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Serializes a model into the canonical text form.
pub fn write_model<F: Scalar>(model: &OcsvmModel<F>) -> String {
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "nu {}", sig17(model.nu.to_f64_lossy())).unwrap();
    let kind = match model.kernel.kind {
        KernelKind::Rbf => "rbf",
        KernelKind::Linear => "linear",
    };
    writeln!(out, "kernel {kind}").unwrap();
    writeln!(out, "gamma {}", sig17(model.kernel.gamma.to_f64_lossy())).unwrap();
    writeln!(out, "rho {}", sig17(model.rho.to_f64_lossy())).unwrap();
    if let Some(w) = model.correlation_window {
        writeln!(out, "correlation_window {w}").unwrap();
    }
    for name in &model.feature_names {
        writeln!(out, "feature {name}").unwrap();
    }
    if let Some(st) = &model.standardization {
        writeln!(out, "standardization_fit {} {}", st.fit_range.start, st.fit_range.end).unwrap();
        for col in &st.columns {
            writeln!(
                out,
                "standardize {} {} {}",
                col.name,
                sig17(col.mean.to_f64_lossy()),
                sig17(col.std.to_f64_lossy())
            )
            .unwrap();
        }
    }
    for (sv, &alpha) in model.support_vectors.iter().zip(&model.alphas) {
        write!(out, "sv {}", sig17(alpha.to_f64_lossy())).unwrap();
        for v in sv {
            write!(out, " {}", sig17(v.to_f64_lossy())).unwrap();
        }
        out.push('\n');
    }
    out.push_str("end\n");
    out
}

/// Parses the canonical model text.
pub fn parse_model<F: Scalar>(text: &str) -> Result<OcsvmModel<F>> {
    let bad = |line: usize, reason: String| Error::Line { line, reason };
    let parse_float = |tok: &str, line: usize| -> Result<F> {
        tok.parse::<f64>()
            .map(F::from_f64_lossy)
            .map_err(|_| bad(line, format!("bad float `{tok}`")))
    };

    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l == MAGIC => {}
        Some((_, l)) => return Err(bad(1, format!("unknown model header `{l}`"))),
        None => return Err(bad(1, "empty model file".into())),
    }

    let mut nu = None;
    let mut kind = None;
    let mut gamma = None;
    let mut rho = None;
    let mut correlation_window = None;
    let mut feature_names: Vec<String> = Vec::new();
    let mut fit_range: Option<BinRange> = None;
    let mut standardize_cols: Vec<ColumnStandardization<F>> = Vec::new();
    let mut support_vectors = Vec::new();
    let mut alphas = Vec::new();
    let mut ended = false;

    for (idx, line) in lines {
        let lineno = idx + 1;
        if ended {
            return Err(bad(lineno, "content after end marker".into()));
        }
        if line == "end" {
            ended = true;
            continue;
        }
        let (key, rest) = line
            .split_once(' ')
            .ok_or_else(|| bad(lineno, format!("bad line `{line}`")))?;
        match key {
            "nu" => nu = Some(parse_float(rest, lineno)?),
            "kernel" => {
                kind = Some(match rest {
                    "rbf" => KernelKind::Rbf,
                    "linear" => KernelKind::Linear,
                    other => return Err(bad(lineno, format!("unknown kernel `{other}`"))),
                })
            }
            "gamma" => gamma = Some(parse_float(rest, lineno)?),
            "rho" => rho = Some(parse_float(rest, lineno)?),
            "correlation_window" => {
                correlation_window = Some(
                    rest.parse()
                        .map_err(|_| bad(lineno, format!("bad window `{rest}`")))?,
                )
            }
            "feature" => feature_names.push(rest.to_string()),
            "standardization_fit" => {
                let mut toks = rest.split(' ');
                let start = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| bad(lineno, "bad fit range start".into()))?;
                let end = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| bad(lineno, "bad fit range end".into()))?;
                fit_range = Some(BinRange::new(start, end)?);
            }
            "standardize" => {
                // Name first, then mean and std as the last two tokens.
                let toks: Vec<&str> = rest.rsplitn(3, ' ').collect();
                if toks.len() != 3 {
                    return Err(bad(lineno, "standardize needs name, mean, std".into()));
                }
                standardize_cols.push(ColumnStandardization {
                    name: toks[2].to_string(),
                    mean: parse_float(toks[1], lineno)?,
                    std: parse_float(toks[0], lineno)?,
                });
            }
            "sv" => {
                let mut toks = rest.split(' ');
                let alpha = parse_float(
                    toks.next().ok_or_else(|| bad(lineno, "empty sv line".into()))?,
                    lineno,
                )?;
                let values: Vec<F> = toks
                    .map(|t| parse_float(t, lineno))
                    .collect::<Result<_>>()?;
                alphas.push(alpha);
                support_vectors.push(values);
            }
            other => return Err(bad(lineno, format!("unknown key `{other}`"))),
        }
    }
    if !ended {
        return Err(Error::format("model", "missing end marker"));
    }

    let standardization = match (fit_range, standardize_cols.is_empty()) {
        (Some(fit_range), false) => Some(StandardizationParams {
            columns: standardize_cols,
            fit_range,
        }),
        (None, true) => None,
        _ => {
            return Err(Error::format(
                "model",
                "standardization lines and fit range must appear together",
            ))
        }
    };

    let kind = kind.ok_or_else(|| Error::format("model", "missing kernel"))?;
    let model = OcsvmModel {
        support_vectors,
        alphas,
        rho: rho.ok_or_else(|| Error::format("model", "missing rho"))?,
        kernel: KernelParams {
            kind,
            gamma: gamma.ok_or_else(|| Error::format("model", "missing gamma"))?,
        },
        nu: nu.ok_or_else(|| Error::format("model", "missing nu"))?,
        feature_names,
        standardization,
        correlation_window,
    };
    if let Some(st) = &model.standardization {
        if st.column_names() != model.feature_names {
            return Err(Error::format(
                "model",
                "standardization columns do not match features",
            ));
        }
    }
    let dim = model.dimension();
    if model.support_vectors.iter().any(|sv| sv.len() != dim) {
        return Err(Error::format("model", "support vectors have mixed dimensions"));
    }
    Ok(model)
}

pub fn save_model<F: Scalar>(model: &OcsvmModel<F>, path: &Path) -> Result<()> {
    std::fs::write(path, write_model(model))?;
    Ok(())
}

pub fn load_model<F: Scalar>(path: &Path) -> Result<OcsvmModel<F>> {
    let text = std::fs::read_to_string(path)?;
    parse_model(&text).map_err(|e| match e {
        Error::Format { reason, .. } => Error::format(path.display().to_string(), reason),
        other => other,
    })
}
