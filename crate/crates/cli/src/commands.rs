use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use vpa_core::asymptotics::{classify, ray_traces, trace_points, trace_tangency, write_trace_csv, TraceRecord};
use vpa_core::{
    existence_verdict, mfcq_probe, rabier_value, section_probe, solve_front, tangency_membership, Config, Problem,
    ReferencePoint,
};

use crate::problem_file::{parse_point, resolve_ybar, ProblemFile};
use crate::report::{config_hash, write_file, write_report, Report};
use crate::{Cli, CliError, Command};

struct Inputs {
    file: ProblemFile,
    prob: Problem,
    cfg: Config,
}

fn read_text(path: &Path, what: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("reading {} {}: {}", what, path.display(), e)))
}

fn load(cli: &Cli) -> Result<Inputs, CliError> {
    let file = ProblemFile::from_json(&read_text(&cli.problem, "problem file")?)?;
    let prob = file.to_problem()?;
    let cfg = match &cli.config {
        Some(path) => serde_json::from_str::<Config>(&read_text(path, "config file")?)
            .map_err(|e| CliError::Input(format!("config file: {}", e)))?,
        None => Config::default(),
    };
    cfg.validate()?;
    Ok(Inputs { file, prob, cfg })
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Operation(e.to_string()))
}

fn read_points(path: &Path, n: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let points: Vec<Vec<f64>> = serde_json::from_str(&read_text(path, "points file")?)
        .map_err(|e| CliError::Input(format!("points file: {}", e)))?;
    if let Some(bad) = points.iter().find(|x| x.len() != n) {
        return Err(CliError::Input(format!(
            "points file: expected {} coordinates per point, got {}",
            n,
            bad.len()
        )));
    }
    Ok(points)
}

fn trace_csv(records: &[&TraceRecord], prob: &Problem) -> Result<Vec<u8>, CliError> {
    let owned: Vec<TraceRecord> = records.iter().map(|r| (*r).clone()).collect();
    let mut buf = Vec::new();
    write_trace_csv(&owned, prob.n(), prob.p(), &mut buf)?;
    Ok(buf)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let Inputs { file, prob, cfg } = load(cli)?;
    let pointwise = matches!(cli.command, Command::Eval | Command::Rabier | Command::Mfcq | Command::Tangency);
    let at = match (&cli.at, pointwise) {
        (Some(s), true) => Some(parse_point(s, prob.n())?),
        (None, true) => return Err(CliError::Input(format!("`{}` needs --at", cli.command.name()))),
        (_, false) => None,
    };
    let ybar = if pointwise {
        None
    } else {
        Some(resolve_ybar(&file, cli.ybar.as_deref(), prob.p())?)
    };
    let points = match (&cli.points, cli.command) {
        (Some(path), Command::Trace | Command::Classify) => Some(read_points(path, prob.n())?),
        _ => None,
    };
    fs::create_dir_all(&cli.out)
        .map_err(|e| CliError::Input(format!("creating output directory {}: {}", cli.out.display(), e)))?;

    let result = match cli.command {
        Command::Eval => eval(&prob, at.as_deref().expect("pointwise"), &cfg)?,
        Command::Rabier => to_value(&rabier_value(&prob, at.as_deref().expect("pointwise"), &cfg)?)?,
        Command::Mfcq => to_value(&mfcq_probe(&prob, at.as_deref().expect("pointwise"), &cfg)?)?,
        Command::Tangency => to_value(&tangency_membership(&prob, at.as_deref().expect("pointwise"), &cfg)?)?,
        Command::Trace => trace(&prob, ybar.as_ref().expect("set"), points.as_deref(), &cfg, &cli.out)?,
        Command::Classify => run_classify(&prob, ybar.as_ref().expect("set"), points.as_deref(), &cfg)?,
        Command::Section => {
            let y = ybar.as_ref().expect("set");
            to_value(&section_probe(&prob, y, cfg.budgets.section_samples, cfg.seed, &cfg)?)?
        }
        Command::Solve => solve(&prob, ybar.as_ref().expect("set"), &cfg, &cli.out)?,
        Command::Verdict => to_value(&existence_verdict(&prob, ybar.as_ref().expect("set"), &cfg)?)?,
    };

    let report = Report {
        command: cli.command.name(),
        problem: &file,
        at: at.as_deref(),
        ybar: ybar.as_ref(),
        config: &cfg,
        config_sha256: config_hash(&cfg)?,
        result,
    };
    write_report(&cli.out, &report)
}

fn eval(prob: &Problem, x: &[f64], cfg: &Config) -> Result<Value, CliError> {
    let values = |fs: &[vpa_core::PolyFunction]| -> Vec<f64> { fs.iter().map(|f| f.value(x)).collect() };
    let feasibility = prob.check_feasible(x, cfg.tolerances.feasibility, cfg.tolerances.activity)?;
    let gradients: Vec<Vec<f64>> = prob.objectives().iter().map(|f| f.gradient_at(x)).collect();
    Ok(json!({
        "objective_values": values(prob.objectives()),
        "objective_gradients": gradients,
        "equality_values": values(prob.equalities()),
        "inequality_values": values(prob.inequalities()),
        "feasibility": to_value(&feasibility)?,
    }))
}

fn trace(
    prob: &Problem,
    ybar: &ReferencePoint,
    points: Option<&[Vec<f64>]>,
    cfg: &Config,
    out: &Path,
) -> Result<Value, CliError> {
    let radii = cfg.schedule.radii();
    // a supplied point list replaces the sphere-slice traces
    let result = if let Some(points) = points {
        let records = trace_points(prob, ybar, points, cfg)?;
        let refs: Vec<&TraceRecord> = records.iter().collect();
        write_file(&out.join("trace.csv"), &trace_csv(&refs, prob)?)?;
        json!({ "points_supplied": points.len(), "records": to_value(&records)? })
    } else {
        let traces = trace_tangency(prob, ybar, &radii, cfg.seed, cfg)?;
        let refs: Vec<&TraceRecord> = traces.iter().flat_map(|t| &t.records).collect();
        write_file(&out.join("trace.csv"), &trace_csv(&refs, prob)?)?;
        json!({ "radii": radii, "traces": to_value(&traces)? })
    };
    Ok(result)
}

fn run_classify(
    prob: &Problem,
    ybar: &ReferencePoint,
    points: Option<&[Vec<f64>]>,
    cfg: &Config,
) -> Result<Value, CliError> {
    let radii = cfg.schedule.radii();
    let mut traces: Vec<Vec<TraceRecord>> = match trace_tangency(prob, ybar, &radii, cfg.seed, cfg) {
        Ok(ts) => ts.into_iter().map(|t| t.records).collect(),
        Err(vpa_core::Error::NoRadiusConverged) => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    traces.extend(ray_traces(prob, ybar, &radii, cfg)?);
    if let Some(points) = points {
        traces.push(trace_points(prob, ybar, points, cfg)?);
    }
    traces.retain(|t| !t.is_empty());
    let lengths: Vec<usize> = traces.iter().map(Vec::len).collect();
    let classification = classify(prob, ybar, &traces, cfg)?;
    Ok(json!({
        "radii": radii,
        "trace_lengths": lengths,
        "classification": to_value(&classification)?,
    }))
}

fn solve(prob: &Problem, ybar: &ReferencePoint, cfg: &Config, out: &Path) -> Result<Value, CliError> {
    let archive = solve_front(prob, ybar, cfg.budgets.grid, cfg.budgets.starts, cfg.seed, cfg)?;
    let mut json_buf = Vec::new();
    archive.write_json(&mut json_buf)?;
    json_buf.push(b'\n');
    write_file(&out.join("archive.json"), &json_buf)?;
    let mut csv_buf = Vec::new();
    archive.write_front_csv(prob.p(), &mut csv_buf)?;
    write_file(&out.join("front.csv"), &csv_buf)?;
    Ok(json!({ "archive": to_value(&archive)? }))
}
