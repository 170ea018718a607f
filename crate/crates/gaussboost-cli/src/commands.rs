//! Implementations of the five subcommands.

use std::path::{Path, PathBuf};

use gaussboost::binning::Dataset;
use gaussboost::boosting::{load_model, save_model, train as train_model, BoostConfig, BoostModel};
use gaussboost::interpret::{combined_ranking, feature_importance, ImportanceKind, ParamSet};
use gaussboost::metrics::{accuracy_within, calibration_report, mape, nll_mean, EvalInput};
use gaussboost::normal;
use gaussboost::synth as generators;
use gaussboost::tree::TreeConfig;

use crate::csvio::{self, fmt_float};
use crate::errors::CliError;
use crate::{
    EvaluateArgs, GeneratorArg, ImportanceArgs, KindArg, PredictArgs, SynthArgs, TrainArgs,
};

impl From<KindArg> for ImportanceKind {
    fn from(kind: KindArg) -> Self {
        match kind {
            KindArg::Weight => ImportanceKind::Weight,
            KindArg::Gain => ImportanceKind::Gain,
        }
    }
}

fn usage_check(ok: bool, message: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Usage(message.into()))
    }
}

fn sibling_with_extension(path: &Path, extension: &str) -> PathBuf {
    path.with_extension(extension)
}

fn load_model_file(path: &Path) -> Result<BoostModel, CliError> {
    let document = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(load_model(&document)?)
}

/// Apply ln to the targets, rejecting non-positive values with the row.
fn log_targets(targets: &[f64]) -> Result<Vec<f64>, CliError> {
    targets
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            if y > 0.0 {
                Ok(y.ln())
            } else {
                Err(CliError::Data(format!(
                    "row {}: target {y} must be > 0 for --log-transform",
                    i + 1
                )))
            }
        })
        .collect()
}

pub fn train(args: TrainArgs) -> Result<(), CliError> {
    usage_check(args.iterations >= 1, "--iterations must be >= 1")?;
    usage_check(
        args.learning_rate > 0.0 && args.learning_rate <= 1.0,
        "--learning-rate must be in (0, 1]",
    )?;
    usage_check(
        (1..=32).contains(&args.max_depth),
        "--max-depth must be in [1, 32]",
    )?;
    usage_check(
        (2..=256).contains(&args.max_bins),
        "--max-bins must be in [2, 256]",
    )?;
    usage_check(
        args.min_samples_leaf >= 1,
        "--min-samples-leaf must be >= 1",
    )?;

    let labeled = csvio::read_labeled(&args.input, &args.target)?;
    let targets = if args.log_transform {
        log_targets(&labeled.targets)?
    } else {
        labeled.targets
    };
    let dataset = Dataset::new(
        labeled.features,
        labeled.n_cols,
        targets,
        labeled.feature_names,
    )?;

    let cfg = BoostConfig {
        iterations: args.iterations,
        learning_rate: args.learning_rate,
        tree: TreeConfig {
            max_depth: args.max_depth,
            min_samples_leaf: args.min_samples_leaf,
            min_gain: 0.0,
        },
        max_bins: args.max_bins,
        line_search_halvings: 20,
    };
    let mut out = train_model(&dataset, &cfg)?;
    out.model.log_transform = args.log_transform;

    std::fs::write(&args.output, save_model(&out.model)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.output.display())))?;

    let trace_path = sibling_with_extension(&args.output, "trace.csv");
    csvio::write_csv(
        &trace_path,
        &["iteration", "nll"],
        out.nll_trace
            .iter()
            .enumerate()
            .map(|(m, nll)| vec![m.to_string(), fmt_float(*nll)]),
    )?;

    if out.skipped_iterations == cfg.iterations {
        eprintln!(
            "warning: every iteration was skipped by the line search; \
             the model predicts the initial parameters everywhere"
        );
    }
    println!(
        "trained {} iterations ({} skipped), final training NLL {}",
        cfg.iterations,
        out.skipped_iterations,
        fmt_float(*out.nll_trace.last().expect("non-empty trace"))
    );
    println!("model: {}", args.output.display());
    println!("trace: {}", trace_path.display());
    Ok(())
}

pub fn predict(args: PredictArgs) -> Result<(), CliError> {
    let model = load_model_file(&args.model)?;
    let features = csvio::read_features(&args.input, &model.feature_names)?;
    let params = model.predict_matrix(&features, model.n_features())?;

    let mut rows = Vec::with_capacity(params.len());
    for (i, p) in params.iter().enumerate() {
        let point = if model.log_transform {
            normal::point_prediction(*p)
                .map_err(|e| CliError::Data(format!("row {}: {e}", i + 1)))?
        } else {
            p.mu
        };
        let rel_std =
            normal::relative_std(*p).map_err(|e| CliError::Data(format!("row {}: {e}", i + 1)))?;
        rows.push(vec![
            fmt_float(p.mu),
            fmt_float(p.sigma()),
            fmt_float(point),
            fmt_float(rel_std),
        ]);
    }
    csvio::write_csv(
        &args.output,
        &["mu", "sigma", "point_prediction", "relative_std"],
        rows.into_iter(),
    )?;
    println!("{} predictions: {}", params.len(), args.output.display());
    Ok(())
}

pub fn evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    usage_check(args.buckets >= 2, "--buckets must be >= 2")?;
    let model = load_model_file(&args.model)?;
    if !model.log_transform {
        return Err(CliError::Data(
            "evaluate needs a model trained with --log-transform: MAPE, ACCURACY and the \
             calibration report are defined on the original target scale"
                .into(),
        ));
    }
    let labeled = csvio::read_labeled(&args.input, &args.target)?;
    if labeled.feature_names != model.feature_names {
        // Column order may differ; reorder through the schema-checked path.
        let features = csvio::read_features(&args.input, &model.feature_names)?;
        return evaluate_inner(&args, &model, features, labeled.targets);
    }
    evaluate_inner(&args, &model, labeled.features, labeled.targets)
}

fn evaluate_inner(
    args: &EvaluateArgs,
    model: &BoostModel,
    features: Vec<f64>,
    y_original: Vec<f64>,
) -> Result<(), CliError> {
    let y_model = log_targets(&y_original)?;
    let params = model.predict_matrix(&features, model.n_features())?;
    let input = EvalInput::new(params, y_model, Some(y_original))?;

    let global_mape = mape(&input)?;
    let global_accuracy = accuracy_within(&input, 0.3)?;
    let global_nll = nll_mean(&input);
    print!(
        "{}",
        csvio::csv_to_string(
            &["mape", "accuracy", "nll"],
            std::iter::once(vec![
                fmt_float(global_mape),
                fmt_float(global_accuracy),
                fmt_float(global_nll),
            ]),
        )?
    );

    let report = calibration_report(&input, args.buckets)?;
    let header = [
        "bucket",
        "sigma_min",
        "sigma_max",
        "count",
        "mape",
        "accuracy",
        "mean_nll",
    ];
    let rows = report.buckets.iter().enumerate().map(|(b, bucket)| {
        vec![
            (b + 1).to_string(),
            fmt_float(bucket.sigma_min),
            fmt_float(bucket.sigma_max),
            bucket.count.to_string(),
            fmt_float(bucket.mape),
            fmt_float(bucket.accuracy),
            fmt_float(bucket.mean_nll),
        ]
    });
    match &args.output {
        Some(path) => {
            csvio::write_csv(path, &header, rows)?;
            println!("calibration: {}", path.display());
        }
        None => print!("{}", csvio::csv_to_string(&header, rows)?),
    }
    Ok(())
}

pub fn importance(args: ImportanceArgs) -> Result<(), CliError> {
    usage_check(
        args.alpha.is_finite() && (0.0..=1.0).contains(&args.alpha),
        "--alpha must be in [0, 1]",
    )?;
    let model = load_model_file(&args.model)?;
    let kind: ImportanceKind = args.kind.into();

    let mean = feature_importance(&model, ParamSet::Mean, kind);
    let variance = feature_importance(&model, ParamSet::Variance, kind);
    let normalize = |scores: Vec<f64>| -> Vec<f64> {
        let sum: f64 = scores.iter().sum();
        if sum == 0.0 {
            scores
        } else {
            scores.iter().map(|s| s / sum).collect()
        }
    };
    let mean_norm = normalize(mean.primary_scores());
    let var_norm = normalize(variance.primary_scores());
    let ranked = combined_ranking(&model, args.alpha, kind)?;

    let header = [
        "feature",
        "mean_importance",
        "variance_importance",
        "combined_score",
    ];
    let rows = ranked.iter().map(|r| {
        vec![
            r.name.clone(),
            fmt_float(mean_norm[r.index]),
            fmt_float(var_norm[r.index]),
            fmt_float(r.score),
        ]
    });
    match &args.output {
        Some(path) => {
            csvio::write_csv(path, &header, rows)?;
            println!("importance: {}", path.display());
        }
        None => print!("{}", csvio::csv_to_string(&header, rows)?),
    }
    Ok(())
}

pub fn synth(args: SynthArgs) -> Result<(), CliError> {
    usage_check(args.rows >= 10, "--rows must be >= 10")?;
    usage_check(args.cols >= 2, "--cols must be >= 2")?;
    let data = match args.generator {
        GeneratorArg::Heteroscedastic => {
            generators::heteroscedastic_normal(args.rows, args.cols, args.seed)?
        }
        GeneratorArg::Lognormal => generators::lognormal_revenue(args.rows, args.cols, args.seed)?,
    };

    let mut header: Vec<&str> = data.feature_names.iter().map(String::as_str).collect();
    header.push("target");
    csvio::write_csv(
        &args.output,
        &header,
        (0..data.n_rows()).map(|i| {
            let mut row: Vec<String> = data.row(i).iter().map(|v| fmt_float(*v)).collect();
            row.push(fmt_float(data.targets[i]));
            row
        }),
    )?;

    let sidecar = sibling_with_extension(&args.output, "sigma.csv");
    csvio::write_csv(
        &sidecar,
        &["true_sigma"],
        data.true_sigma.iter().map(|s| vec![fmt_float(*s)]),
    )?;
    println!(
        "{} rows: {} (sigma sidecar: {})",
        data.n_rows(),
        args.output.display(),
        sidecar.display()
    );
    Ok(())
}
