//! `coe-lab`: causal queries, probabilities of causation and IV estimates
//! from the command line. Results are JSON on stdout; exit status is 0 on
//! success, 2 for malformed input and 3 when the requested quantity is
//! undefined or inconsistent with the data.

mod data;
mod model;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use coe_lab::bounds::{BoundsInput, EstimatorRegistry, Margins, MediatorData, StratifiedData};
use coe_lab::cbn::Query;
use coe_lab::graph::node_set;
use coe_lab::iv::{self, IvAssumptions};
use coe_lab::scm::{pc_exact, twin_network};
use coe_lab::synth;
use coe_lab::Error;

use model::{parse_names, Model};

#[derive(Parser)]
#[command(name = "coe-lab", version, about = "Effects of causes and causes of effects on discrete models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Model file operations.
    Model {
        #[command(subcommand)]
        command: ModelCommand,
    },
    /// Posterior distribution of targets, optionally under intervention.
    Query(QueryArgs),
    /// Probability of causation.
    Pc {
        #[command(subcommand)]
        command: PcCommand,
    },
    /// Instrumental-variable estimates from z,x,y data.
    Iv(IvArgs),
    /// d-separation test on the model's graph.
    Dsep(DsepArgs),
    /// Draw samples from the observational regime.
    Simulate(SimulateArgs),
}

#[derive(Subcommand)]
enum ModelCommand {
    /// Parse and check a model file.
    Validate { model: PathBuf },
}

#[derive(Args)]
struct QueryArgs {
    model: PathBuf,
    /// Comma-separated target variables.
    #[arg(long, required = true)]
    target: String,
    /// Observed values, `A=a,B=b`.
    #[arg(long, default_value = "")]
    evidence: String,
    /// Interventions, `X=x`.
    #[arg(long = "do", default_value = "")]
    intervention: String,
}

#[derive(Subcommand)]
enum PcCommand {
    /// Exact value from a structural model via its twin network.
    Exact(PcExactArgs),
    /// Bounds from data or summary probabilities.
    Bounds(PcBoundsArgs),
}

#[derive(Args)]
struct PcExactArgs {
    model: PathBuf,
    /// Factual evidence including the outcome, e.g. `X=1,Y=1`.
    #[arg(long)]
    factual: String,
    /// Counterfactual intervention, e.g. `X=0`.
    #[arg(long)]
    counterfactual: String,
    /// Outcome variable; defaults to the single factual variable that is
    /// not intervened on.
    #[arg(long)]
    outcome: Option<String>,
}

#[derive(Args)]
struct PcBoundsArgs {
    /// CSV data, or JSON with margins / strata / mediator probabilities.
    input: PathBuf,
    /// Covariate column for stratified bounds.
    #[arg(long)]
    covariate: Option<String>,
    /// JSON with the experimental P(Y=1 | do(X=0)).
    #[arg(long)]
    experimental: Option<PathBuf>,
    /// Mediator column.
    #[arg(long)]
    mediator: Option<String>,
    #[arg(long, default_value = "X")]
    exposure: String,
    #[arg(long, default_value = "Y")]
    outcome: String,
    /// Add-α smoothing for plug-in estimates from counts.
    #[arg(long, default_value_t = 0.0)]
    smooth: f64,
    /// Estimator name (basic, covariate, tian-pearl, mediator, lp);
    /// chosen from the inputs when omitted.
    #[arg(long)]
    method: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum IvEstimand {
    Late,
    Wald,
    AceBounds,
}

#[derive(Args)]
struct IvArgs {
    estimand: IvEstimand,
    data: PathBuf,
    /// Assume no defiers.
    #[arg(long)]
    monotone: bool,
    /// The exposure is unavailable without the instrument.
    #[arg(long, conflicts_with = "monotone")]
    availability: bool,
    /// Minimum |first-stage effect| accepted.
    #[arg(long, default_value_t = 0.01)]
    threshold: f64,
    #[arg(long, default_value = "z")]
    z: String,
    #[arg(long, default_value = "x")]
    x: String,
    #[arg(long, default_value = "y")]
    y: String,
}

#[derive(Args)]
struct DsepArgs {
    model: PathBuf,
    #[arg(long)]
    a: String,
    #[arg(long)]
    b: String,
    #[arg(long, default_value = "")]
    given: String,
}

#[derive(Args)]
struct SimulateArgs {
    model: PathBuf,
    #[arg(short = 'n', long, default_value_t = 1000)]
    rows: usize,
    #[arg(long, env = "COE_LAB_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(short = 'o', long)]
    output: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            eprint!("{e}");
            let msg = e.kind().as_str().map_or_else(|| e.to_string(), str::to_string);
            emit(&json!({"error": {"kind": "usage", "message": msg}}));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(v) => {
            emit(&v);
            ExitCode::SUCCESS
        }
        Err(e) => {
            let core = e.downcast_ref::<Error>();
            let code = if core.is_some_and(Error::is_estimand_failure) { 3 } else { 2 };
            let kind = core.map_or("input_error", Error::kind);
            eprintln!("error: {e:#}");
            let out = json!({"error": {"kind": kind, "message": format!("{e:#}")}});
            emit(&out);
            ExitCode::from(code)
        }
    }
}

/// Writes to stdout, tolerating a closed pipe.
fn emit(v: &Value) {
    let mut out = std::io::stdout().lock();
    if serde_json::to_writer_pretty(&mut out, v).is_ok() {
        let _ = writeln!(out);
    }
}

fn run(cmd: Command) -> anyhow::Result<Value> {
    match cmd {
        Command::Model {
            command: ModelCommand::Validate { model },
        } => validate(&model),
        Command::Query(a) => query(a),
        Command::Pc {
            command: PcCommand::Exact(a),
        } => pc_exact_cmd(a),
        Command::Pc {
            command: PcCommand::Bounds(a),
        } => pc_bounds_cmd(a),
        Command::Iv(a) => iv_cmd(a),
        Command::Dsep(a) => dsep(a),
        Command::Simulate(a) => simulate(a),
    }
}

fn validate(path: &Path) -> anyhow::Result<Value> {
    let m = model::load(path)?;
    let dag = m.dag();
    let order = dag.validate()?;
    let regimes: Vec<String> = match &m.model {
        Model::Cbn(c) => c.graph().regimes().values().cloned().collect(),
        _ => Vec::new(),
    };
    Ok(json!({
        "ok": true,
        "kind": m.kind,
        "variables": m.variables().collect::<Vec<_>>(),
        "edges": dag.edges().len(),
        "regime_nodes": regimes,
        "topological_order": order,
    }))
}

fn query(a: QueryArgs) -> anyhow::Result<Value> {
    let m = model::load(&a.model)?;
    let targets = parse_names(&a.target);
    if targets.is_empty() {
        bail!(Error::InvalidQuery("no targets".into()));
    }
    let evidence = m.assignment(&a.evidence)?;
    let set = m.assignment(&a.intervention)?;
    let mut net = m.network()?;
    if !set.is_empty() {
        net = net.intervene(&set)?;
    }
    let q = Query::new(targets.iter().map(String::as_str)).given_all(&evidence);
    let dist = net.joint_query(&q)?;
    let table: Vec<Value> = dist
        .entries()
        .map(|(asg, p)| json!({"assignment": m.labelled(&asg), "p": p}))
        .collect();
    Ok(json!({
        "targets": targets,
        "evidence": m.labelled(&evidence),
        "do": m.labelled(&set),
        "distribution": table,
    }))
}

fn pc_exact_cmd(a: PcExactArgs) -> anyhow::Result<Value> {
    let m = model::load(&a.model)?;
    let factual = m.assignment(&a.factual)?;
    let cf = m.assignment(&a.counterfactual)?;
    let outcome = match a.outcome {
        Some(o) => o,
        None => {
            let cands: Vec<&String> = factual.keys().filter(|k| !cf.contains_key(*k)).collect();
            match cands.as_slice() {
                [one] => (*one).clone(),
                _ => bail!(Error::InvalidQuery(
                    "cannot infer the outcome; pass --outcome".into()
                )),
            }
        }
    };
    let (pc, twin) = match &m.model {
        Model::Scm(s) => (pc_exact(s, &factual, &cf, &outcome)?, twin_network(s, &factual, &cf)?),
        Model::StCm(s) => (pc_exact(s, &factual, &cf, &outcome)?, twin_network(s, &factual, &cf)?),
        Model::Cbn(_) => bail!(Error::InvalidModel(
            "pc exact needs an scm or stcm model (shared background variables)".into()
        )),
    };
    let nodes: Vec<&str> = twin.cbn.dag().nodes().collect();
    Ok(json!({
        "pc": pc,
        "outcome": outcome,
        "factual": m.labelled(&factual),
        "counterfactual": m.labelled(&cf),
        "twin_nodes": nodes,
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Experimental {
    #[serde(default)]
    p_y1_do_x0: Option<f64>,
    /// Alternatively, trial counts under X←0.
    #[serde(default)]
    n: Option<f64>,
    #[serde(default)]
    n_y1: Option<f64>,
}

fn read_experimental(path: &Path) -> anyhow::Result<f64> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let e: Experimental = serde_json::from_str(&text)
        .map_err(|err| Error::InvalidInput(format!("{}: {err}", path.display())))?;
    match (e.p_y1_do_x0, e.n, e.n_y1) {
        (Some(p), None, None) => Ok(p),
        (None, Some(n), Some(k)) if n > 0.0 && (0.0..=n).contains(&k) => Ok(k / n),
        _ => bail!(Error::InvalidInput(
            "experimental file needs p_y1_do_x0, or n and n_y1 with 0 <= n_y1 <= n".into()
        )),
    }
}

fn read_bounds_json(path: &Path) -> anyhow::Result<BoundsInput> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    let bad = |e: serde_json::Error| Error::InvalidInput(format!("{}: {e}", path.display()));
    let input = if v.get("kind").is_some() {
        serde_json::from_value(v).map_err(bad)?
    } else if v.get("strata").is_some() {
        BoundsInput::Stratified(serde_json::from_value::<StratifiedData>(v).map_err(bad)?)
    } else if v.get("p_m1_given_x0").is_some() {
        BoundsInput::Mediator(serde_json::from_value::<MediatorData>(v).map_err(bad)?)
    } else {
        BoundsInput::Margins(serde_json::from_value::<Margins>(v).map_err(bad)?)
    };
    match &input {
        BoundsInput::Margins(m) => m.validate()?,
        BoundsInput::Stratified(d) => d.validate()?,
        BoundsInput::Mediator(d) => d.validate()?,
    }
    Ok(input)
}

fn pc_bounds_cmd(a: PcBoundsArgs) -> anyhow::Result<Value> {
    let regimes = [a.covariate.is_some(), a.experimental.is_some(), a.mediator.is_some()];
    if regimes.iter().filter(|&&r| r).count() > 1 {
        bail!(Error::InvalidInput(
            "choose at most one of --covariate, --experimental, --mediator".into()
        ));
    }
    if !(a.smooth >= 0.0 && a.smooth.is_finite()) {
        bail!(Error::InvalidInput("--smooth must be a nonnegative number".into()));
    }
    let is_json = a.input.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let mut input = if is_json {
        if a.covariate.is_some() || a.mediator.is_some() {
            bail!(Error::InvalidInput(
                "--covariate and --mediator name CSV columns; JSON input already carries strata or mediator data".into()
            ));
        }
        read_bounds_json(&a.input)?
    } else {
        let t = data::Table::read(&a.input)?;
        let (x, y, alpha) = (a.exposure.as_str(), a.outcome.as_str(), a.smooth);
        if let Some(s) = &a.covariate {
            BoundsInput::Stratified(data::stratified(&t, s, x, y, alpha)?)
        } else if let Some(m) = &a.mediator {
            BoundsInput::Mediator(data::mediator(&t, x, m, y, alpha)?.0)
        } else {
            BoundsInput::Margins(data::margins(&t, x, y, alpha)?)
        }
    };
    if let Some(path) = &a.experimental {
        let p = read_experimental(path)?;
        match &mut input {
            BoundsInput::Margins(m) => {
                if m.p_x1.is_none() {
                    bail!(Error::InvalidInput(
                        "Tian-Pearl bounds need P(X=1); add p_x1 to the margins".into()
                    ));
                }
                m.p_y1_do_x0 = Some(p);
                m.validate()?;
            }
            _ => bail!(Error::InvalidInput("--experimental applies to margins only".into())),
        }
    }
    let registry = EstimatorRegistry::default();
    let estimator = match &a.method {
        Some(name) => registry.get(name)?,
        None => registry.default_for(&input)?,
    };
    let b = estimator.estimate(&input)?;
    Ok(serde_json::to_value(b)?)
}

fn iv_cmd(a: IvArgs) -> anyhow::Result<Value> {
    let t = data::Table::read(&a.data)?;
    let d = data::iv_data(&t, &a.z, &a.x, &a.y)?;
    let assumptions = IvAssumptions {
        monotone: a.monotone || a.availability,
        availability: a.availability,
    };
    let mut warnings = Vec::new();
    let result = match a.estimand {
        IvEstimand::Late => {
            if !assumptions.monotone {
                warnings.push(
                    "monotonicity not assumed: the ratio is a local effect only if there are no defiers",
                );
            }
            json!({"estimand": "late", "value": iv::late(&d, assumptions, a.threshold)?})
        }
        IvEstimand::Wald => json!({"estimand": "wald", "value": iv::wald_ratio(&d, a.threshold)?}),
        IvEstimand::AceBounds => {
            let b = iv::ace_bounds_lp(&d, assumptions)?;
            json!({"estimand": "ace-bounds", "lower": b.lower, "upper": b.upper})
        }
    };
    let mut out = result;
    out["assumptions"] = serde_json::to_value(assumptions)?;
    out["first_stage"] = json!(d.ace_zx());
    out["itt"] = json!(d.ace_zy());
    if !warnings.is_empty() {
        out["warnings"] = json!(warnings);
    }
    Ok(out)
}

fn dsep(a: DsepArgs) -> anyhow::Result<Value> {
    let m = model::load(&a.model)?;
    let (sa, sb, sg) = (parse_names(&a.a), parse_names(&a.b), parse_names(&a.given));
    let dag = m.dag();
    let sep = dag.d_separated(
        &node_set(sa.iter().map(String::as_str)),
        &node_set(sb.iter().map(String::as_str)),
        &node_set(sg.iter().map(String::as_str)),
    )?;
    Ok(json!({"a": sa, "b": sb, "given": sg, "d_separated": sep}))
}

fn simulate(a: SimulateArgs) -> anyhow::Result<Value> {
    let m = model::load(&a.model)?;
    let d = match &m.model {
        Model::Cbn(c) => synth::sample(c, a.rows, a.seed)?,
        Model::Scm(s) => synth::sample_scm(s, a.rows, a.seed)?,
        Model::StCm(s) => synth::sample(s.observational(), a.rows, a.seed)?,
    };
    data::write_dataset(&a.output, &d, &m)?;
    Ok(json!({
        "rows": d.len(),
        "columns": d.columns,
        "seed": a.seed,
        "output": a.output.display().to_string(),
    }))
}
