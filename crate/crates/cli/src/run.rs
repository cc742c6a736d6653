//! Executes experiment configs and writes their outputs.

use std::io::Write;
use std::path::Path;

use schatten_core::analysis::{
    batch_lower_bound_check, experts_envelope, mc_expected_regret, ogd_envelope, rad_separation_witness,
    rademacher_sum_check, rate_fit, run_regret, sign_stream_lower_bound, BatchCheck, BatchLearner, Comparator, Erm,
    TreeSumCheck, McEstimate, OnlineToBatch, OrthogonalTree, PredictableTree, RandomTree, RateFit, RegretReport,
    SignAlignedTree, WitnessEstimate,
};
use schatten_core::learners::{ExpertsConfig, ExpertsLearner, OgdConfig, OgdLearner, OnlineLearner, ZeroLearner};
use schatten_core::streams::{BatchLowerBoundConfig, Stream, StreamSpec};
use schatten_core::{BallSpec, SchattenIndex, VERSION};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{AnalysisSpec, BatchLearnerKind, ComparatorMode, Emit, ExperimentConfig, LearnerSpec, TreeKind};
use crate::error::{CliError, CliResult};
use crate::plot;

/// Files to write, in order, and the summary lines to print.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: Vec<String>,
}

impl RunOutput {
    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }
}

/// Version, seed and the full config as written.
pub fn metadata(config: &ExperimentConfig) -> Value {
    json!({
        "version": VERSION,
        "experiment": config.name,
        "seed": config.seed,
        "trials": config.trials,
        "config": config.echo,
    })
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("reports serialize");
    bytes.push(b'\n');
    bytes
}

fn to_csv<T: Serialize>(rows: &[T]) -> CliResult<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| CliError::config(format!("csv serialization: {e}")))?;
    }
    writer
        .into_inner()
        .map_err(|e| CliError::config(format!("csv serialization: {e}")))
}

/// Builds the learner described by `spec` for `stream`.
pub fn build_learner(spec: &LearnerSpec, stream: &Stream) -> schatten_core::Result<Box<dyn OnlineLearner>> {
    let d = stream.dim();
    Ok(match spec {
        LearnerSpec::Zero => Box::new(ZeroLearner::new(d, d)),
        LearnerSpec::Ogd { p, c, eta } => {
            let ball = BallSpec::new(*p, *c)?;
            let config = OgdConfig {
                ball,
                eta: *eta,
                horizon: stream.len(),
                target_radius: Some(stream.header.target_radius),
            };
            Box::new(OgdLearner::new(config, d, d)?)
        }
        LearnerSpec::Experts { eta } => {
            let mut config = ExpertsConfig::new(stream.len(), d);
            config.eta = *eta;
            Box::new(ExpertsLearner::new(config)?)
        }
    })
}

/// The same stream family at a different horizon.
pub fn with_horizon(spec: &StreamSpec, new_horizon: usize) -> CliResult<StreamSpec> {
    let mut spec = spec.clone();
    match &mut spec {
        StreamSpec::SchattenLower { horizon, d, .. } => {
            *horizon = new_horizon;
            if let Some(d) = d {
                *d = (*d).max(new_horizon);
            }
        }
        StreamSpec::SeparationRealizable { horizon, .. } | StreamSpec::Kernel { horizon, .. } => *horizon = new_horizon,
        other => {
            return Err(CliError::config(format!(
                "experiment.analysis.horizons: stream kind {} has no horizon to vary",
                other.kind()
            )))
        }
    }
    Ok(spec)
}

fn learner_ball(spec: &LearnerSpec) -> Option<(SchattenIndex, f64)> {
    match spec {
        LearnerSpec::Ogd { p, c, .. } => Some((*p, *c)),
        _ => None,
    }
}

struct RegretSetup {
    mode: ComparatorMode,
    solver_ball: Option<BallSpec>,
    tol: f64,
}

impl RegretSetup {
    fn comparator(&self, closed_form: Option<f64>) -> CliResult<Comparator> {
        let need_ball = || {
            self.solver_ball.ok_or_else(|| {
                CliError::config("experiment.analysis.comparator_ball: required when the comparator uses the solver")
            })
        };
        Ok(match (self.mode, closed_form) {
            (ComparatorMode::ClosedForm, Some(v)) => Comparator::ClosedForm(v),
            (ComparatorMode::ClosedForm, None) | (ComparatorMode::Solver, _) => Comparator::Solver {
                ball: need_ball()?,
                tol: self.tol,
            },
            (ComparatorMode::Checked, Some(v)) => Comparator::Checked {
                closed_form: v,
                ball: need_ball()?,
                tol: self.tol,
            },
            (ComparatorMode::Checked, None) => {
                return Err(CliError::config(
                    "experiment.analysis.comparator: checked mode needs a stream with a closed-form comparator",
                ))
            }
        })
    }
}

/// Envelope curves `offset + coefficient * t^exponent` drawn next to the regret curve.
fn envelopes(stream: &StreamSpec, learner: &LearnerSpec) -> Vec<Value> {
    let mut out = Vec::new();
    if let StreamSpec::SchattenLower { p, c, .. } = stream {
        out.push(json!({
            "label": "lower bound c^2 T^(1-1/p)",
            "offset": 0.0,
            "coefficient": c * c,
            "exponent": 1.0 - p.reciprocal(),
        }));
    }
    match learner {
        LearnerSpec::Ogd { p, c, .. } if *p == SchattenIndex::TWO => out.push(json!({
            "label": "OGD envelope 8c^2 sqrt(T)",
            "offset": 0.0,
            "coefficient": 8.0 * c * c,
            "exponent": 0.5,
        })),
        LearnerSpec::Ogd { p, c, .. } => out.push(json!({
            "label": "minimax order 6c^2 T^max(1/2, 1-1/p)",
            "offset": 0.0,
            "coefficient": 6.0 * c * c,
            "exponent": (1.0 - p.reciprocal()).max(0.5),
        })),
        LearnerSpec::Experts { .. } => out.push(json!({
            "label": "experts guarantee 2 + 8 sqrt(T ln 2T)",
            "experts": true,
        })),
        LearnerSpec::Zero => {}
    }
    out
}

#[derive(Serialize)]
struct HorizonRow {
    #[serde(rename = "T")]
    horizon: usize,
    trials: usize,
    mean_regret: f64,
    stderr: f64,
    lower_bound: Option<f64>,
    upper_envelope: Option<f64>,
}

#[derive(Serialize)]
struct CsvRound {
    t: usize,
    loss: f64,
    cumulative: f64,
}

fn run_regret_analysis(config: &ExperimentConfig, out: &mut RunOutput) -> CliResult<()> {
    let e = &config.experiment;
    let AnalysisSpec::Regret {
        horizons,
        comparator,
        comparator_ball,
        tol,
    } = &e.analysis
    else {
        unreachable!("caller matched the analysis kind");
    };
    let stream_spec = e.stream.as_ref().expect("validated");
    let learner_spec = e.learner.as_ref().expect("validated");
    let solver_ball = match comparator_ball {
        Some(b) => Some(BallSpec::new(b.p, b.c).map_err(CliError::field("experiment.analysis.comparator_ball"))?),
        None => learner_ball(learner_spec)
            .map(|(p, c)| BallSpec::new(p, c))
            .transpose()
            .map_err(CliError::field("experiment.learner"))?,
    };
    let setup = RegretSetup {
        mode: *comparator,
        solver_ball,
        tol: *tol,
    };

    let base_spec = stream_spec.with_seed(config.seed);
    let built = base_spec.build().map_err(CliError::field("experiment.stream"))?;
    let mut learner = build_learner(learner_spec, &built.stream).map_err(CliError::field("experiment.learner"))?;
    let mut report = run_regret(learner.as_mut(), &built.stream, &setup.comparator(built.closed_form_comparator)?)
        .map_err(CliError::field("experiment"))?;
    out.summary.push(format!(
        "{}: T={} learner={} regret={:.6} comparator_loss={:.6} ({:?})",
        config.name,
        built.stream.len(),
        learner.name(),
        report.regret,
        report.comparator_loss,
        report.comparator_source
    ));

    let horizon_values = |t: usize| -> (Option<f64>, Option<f64>) {
        let lower = match stream_spec {
            StreamSpec::SchattenLower { p, c, .. } => Some(sign_stream_lower_bound(t, *p, *c)),
            _ => None,
        };
        let upper = match learner_spec {
            LearnerSpec::Ogd { p, c, .. } if *p == SchattenIndex::TWO => Some(ogd_envelope(t, *c)),
            LearnerSpec::Experts { .. } => Some(experts_envelope(t)),
            _ => None,
        };
        (lower, upper)
    };

    let mut rows = Vec::new();
    for &t in horizons {
        let family_spec = with_horizon(stream_spec, t)?;
        let est: McEstimate = mc_expected_regret(
            |s: &Stream| build_learner(learner_spec, s),
            |seed| {
                let built = family_spec.with_seed(seed).build()?;
                let comparator = setup
                    .comparator(built.closed_form_comparator)
                    .map_err(|e| schatten_core::Error::InvalidParameter {
                        name: "comparator",
                        reason: e.to_string(),
                    })?;
                Ok((built.stream, comparator))
            },
            config.trials,
            config.seed,
        )
        .map_err(CliError::field("experiment.analysis.horizons"))?;
        let (lower_bound, upper_envelope) = horizon_values(t);
        out.summary.push(format!(
            "{}: T={t} trials={} mean_regret={:.6} stderr={:.6}",
            config.name, config.trials, est.mean, est.stderr
        ));
        rows.push(HorizonRow {
            horizon: t,
            trials: config.trials,
            mean_regret: est.mean,
            stderr: est.stderr,
            lower_bound,
            upper_envelope,
        });
    }

    let fit: Option<RateFit> = if rows.len() >= 3 {
        let hs: Vec<usize> = rows.iter().map(|r| r.horizon).collect();
        let means: Vec<f64> = rows.iter().map(|r| r.mean_regret).collect();
        let ses: Vec<f64> = rows.iter().map(|r| r.stderr).collect();
        match rate_fit(&hs, &means, &ses) {
            Ok(fit) => {
                out.summary.push(format!("{}: fitted exponent {:.4} (r2 {:.4})", config.name, fit.slope, fit.r2));
                Some(fit)
            }
            Err(err) => {
                out.summary.push(format!("{}: no rate fit: {err}", config.name));
                None
            }
        }
    } else {
        None
    };

    let mut meta = metadata(config);
    meta["stream_kind"] = json!(stream_spec.kind());
    meta["learner"] = json!(learner.name());
    meta["envelopes"] = Value::Array(envelopes(stream_spec, learner_spec));
    meta["horizons"] = serde_json::to_value(&rows).expect("rows serialize");
    report.metadata = meta.clone();

    if config.emit.contains(&Emit::Csv) {
        let rounds: Vec<CsvRound> = report
            .per_round
            .iter()
            .map(|r| CsvRound {
                t: r.t,
                loss: r.learner_loss,
                cumulative: r.cumulative,
            })
            .collect();
        out.add("regret.csv", to_csv(&rounds)?);
        if !rows.is_empty() {
            out.add("horizons.csv", to_csv(&rows)?);
        }
    }
    if config.emit.contains(&Emit::Json) {
        out.add("report.json", to_json(&report));
        if let Some(fit) = &fit {
            out.add("ratefit.json", to_json(&rate_fit_document(fit, meta.clone())));
        }
    }
    if config.emit.contains(&Emit::Svg) {
        out.add("regret.svg", plot::render_regret(&report)?.into_bytes());
        if let Some(fit) = &fit {
            out.add("ratefit.svg", plot::render_rate_fit(fit)?.into_bytes());
        }
    }
    Ok(())
}

/// A [`RateFit`] with a metadata block, as written to `ratefit.json`.
pub fn rate_fit_document(fit: &RateFit, metadata: Value) -> Value {
    let mut v = serde_json::to_value(fit).expect("rate fit serializes");
    v["metadata"] = metadata;
    v
}

fn build_tree(tree: TreeKind, horizon: usize, d: usize, c1: f64, c2: f64, seed: u64) -> schatten_core::Result<Box<dyn PredictableTree>> {
    Ok(match tree {
        TreeKind::Orthogonal => Box::new(OrthogonalTree::new(horizon, d, c1, c2)?),
        TreeKind::Random => Box::new(RandomTree::new(horizon, d, c1, c2, seed)?),
        TreeKind::SignAligned => Box::new(SignAlignedTree::new(horizon, d, c1, c2)?),
    })
}

#[derive(Serialize)]
struct TreeSumRow {
    q: f64,
    mean: f64,
    stderr: f64,
    bound: f64,
    holds: bool,
}

#[derive(Serialize)]
struct WitnessRow {
    #[serde(rename = "T")]
    horizon: usize,
    mean: f64,
    stderr: f64,
    exact: f64,
    consistent: bool,
}

#[derive(Serialize)]
struct BatchRow {
    construction: String,
    learner: String,
    n: usize,
    p: f64,
    c: f64,
    support: usize,
    mean_excess: f64,
    stderr: f64,
    bound: f64,
    recorded_bound: f64,
    holds: bool,
}

fn batch_learner(kind: BatchLearnerKind, tol: f64) -> Box<dyn BatchLearner> {
    match kind {
        BatchLearnerKind::Erm => Box::new(Erm { tol }),
        BatchLearnerKind::OnlineToBatch => Box::new(OnlineToBatch),
    }
}

fn emit_table<T: Serialize>(config: &ExperimentConfig, out: &mut RunOutput, name: &str, rows: &[T], extra: Value) -> CliResult<()> {
    if config.emit.contains(&Emit::Csv) {
        out.add(&format!("{name}.csv"), to_csv(rows)?);
    }
    if config.emit.contains(&Emit::Json) {
        let doc = json!({
            "results": rows,
            "details": extra,
            "metadata": metadata(config),
        });
        out.add(&format!("{name}.json"), to_json(&doc));
    }
    Ok(())
}

fn run_tree_analysis(config: &ExperimentConfig, out: &mut RunOutput) -> CliResult<()> {
    let AnalysisSpec::RademacherTree {
        tree,
        horizon,
        d,
        c1,
        c2,
        qs,
    } = &config.experiment.analysis
    else {
        unreachable!("caller matched the analysis kind");
    };
    let built = build_tree(*tree, *horizon, *d, *c1, *c2, config.seed).map_err(CliError::field("experiment.analysis"))?;
    let checks: Vec<TreeSumCheck> =
        rademacher_sum_check(built.as_ref(), qs, config.trials, config.seed).map_err(CliError::field("experiment.analysis"))?;
    let rows: Vec<TreeSumRow> = checks
        .iter()
        .map(|c| TreeSumRow {
            q: c.q.value(),
            mean: c.mean,
            stderr: c.stderr,
            bound: c.bound,
            holds: c.holds(),
        })
        .collect();
    for r in &rows {
        out.summary.push(format!(
            "{}: T={horizon} q={} paths={} mean={:.6} stderr={:.6} bound={:.6} {}",
            config.name,
            r.q,
            config.trials,
            r.mean,
            r.stderr,
            r.bound,
            if r.holds { "ok" } else { "VIOLATED" }
        ));
    }
    emit_table(config, out, "rademacher", &rows, json!({"tree": tree, "T": horizon, "d": d}))
}

fn run_witness_analysis(config: &ExperimentConfig, out: &mut RunOutput) -> CliResult<()> {
    let AnalysisSpec::Witness { horizons } = &config.experiment.analysis else {
        unreachable!("caller matched the analysis kind");
    };
    let mut rows = Vec::new();
    for &t in horizons {
        let est: WitnessEstimate =
            rad_separation_witness(t, config.trials, config.seed).map_err(CliError::field("experiment.analysis.horizons"))?;
        out.summary.push(format!(
            "{}: T={t} trials={} mean={:.4} stderr={:.4} exact={}",
            config.name, config.trials, est.mean, est.stderr, est.exact
        ));
        rows.push(WitnessRow {
            horizon: t,
            consistent: est.consistent(),
            mean: est.mean,
            stderr: est.stderr,
            exact: est.exact,
        });
    }
    emit_table(config, out, "witness", &rows, Value::Null)
}

fn run_batch_analysis(config: &ExperimentConfig, out: &mut RunOutput) -> CliResult<()> {
    let AnalysisSpec::BatchLowerBound {
        construction,
        learners,
        ns,
        p,
        c,
        tol,
    } = &config.experiment.analysis
    else {
        unreachable!("caller matched the analysis kind");
    };
    let mut rows = Vec::new();
    for &n in ns {
        for &kind in learners {
            let learner = batch_learner(kind, *tol);
            let cfg = BatchLowerBoundConfig::new(n, *p, *c);
            let check: BatchCheck = batch_lower_bound_check(learner.as_ref(), *construction, &cfg, config.trials, config.seed)
                .map_err(CliError::field("experiment.analysis"))?;
            out.summary.push(format!(
                "{}: {} n={n} trials={} mean_excess={:.6} stderr={:.6} bound={:.6} {}",
                config.name,
                check.learner,
                config.trials,
                check.mean_excess,
                check.stderr,
                check.bound,
                if check.holds() { "ok" } else { "VIOLATED" }
            ));
            rows.push(BatchRow {
                construction: format!("{:?}", check.construction).to_lowercase(),
                learner: check.learner.clone(),
                n,
                p: p.value(),
                c: *c,
                support: check.support,
                mean_excess: check.mean_excess,
                stderr: check.stderr,
                bound: check.bound,
                recorded_bound: check.recorded_bound,
                holds: check.holds(),
            });
        }
    }
    emit_table(config, out, "batch", &rows, Value::Null)
}

/// Runs the experiment without touching the file system.
pub fn execute(config: &ExperimentConfig) -> CliResult<RunOutput> {
    let mut out = RunOutput::default();
    match &config.experiment.analysis {
        AnalysisSpec::Regret { .. } => run_regret_analysis(config, &mut out)?,
        AnalysisSpec::RademacherTree { .. } => run_tree_analysis(config, &mut out)?,
        AnalysisSpec::Witness { .. } => run_witness_analysis(config, &mut out)?,
        AnalysisSpec::BatchLowerBound { .. } => run_batch_analysis(config, &mut out)?,
    }
    Ok(out)
}

/// Writes each file to a temporary sibling, then renames them all into place.
pub fn write_outputs(dir: &Path, files: &[(String, Vec<u8>)]) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut staged = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
        tmp.write_all(bytes).map_err(|e| CliError::io(tmp.path(), e))?;
        tmp.as_file().sync_all().map_err(|e| CliError::io(tmp.path(), e))?;
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, target) in staged {
        tmp.persist(&target).map_err(|e| CliError::io(&target, e.error))?;
    }
    Ok(())
}

/// Loads, executes and writes. Returns the summary lines.
pub fn cmd_run(config_path: &Path) -> CliResult<Vec<String>> {
    let config = ExperimentConfig::load(config_path)?;
    let output = execute(&config)?;
    write_outputs(&config.output_dir, &output.files)?;
    Ok(output.summary)
}

/// Same as [`cmd_run`] for an already-parsed config.
pub fn run_config(config: &ExperimentConfig) -> CliResult<Vec<String>> {
    let output = execute(config)?;
    write_outputs(&config.output_dir, &output.files)?;
    Ok(output.summary)
}

pub fn report_from_json(text: &str) -> CliResult<RegretReport> {
    serde_json::from_str(text).map_err(|e| CliError::config(format!("report: {e}")))
}
