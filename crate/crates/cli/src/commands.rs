use std::fmt::Write as _;

use stable_superprocess::config::{ConfigMap, SIMULATION_KEYS};
use stable_superprocess::kernel::{
    default_expansion_grid, expansion_approx, multiindex_enumerate, theta_constant, GridSpec, KernelTable, MultiIndex,
    StableParams,
};
use stable_superprocess::measures::{parse_function, TestFunction};
use stable_superprocess::sim::{simulate_replicates, summarize, trajectory_csv, SimulationConfig};
use stable_superprocess::verify::{
    decoupling_test, first_moment_test, kernel_limit_experiment, theorem_experiment, variance_test, EstimatorReport,
    ExperimentPlan, Verdict, PLAN_KEYS,
};
use stable_superprocess::{Error, Result, VERSION};

use crate::output::{Header, OutDir};

const COMMAND_KEYS: &[&str] = &[
    "run.threads",
    "theta.max_order",
    "kernel.t",
    "kernel.k",
    "kernel.points",
    "kernel.refine",
    "expand.function",
    "expand.t_grid",
    "expand.order",
    "simulate.replicates",
    "simulate.functions",
    "verify.experiments",
    "verify.s_grid",
    "verify.gap",
    "verify.k",
];

/// One config file may serve every command, so any known key is accepted.
fn check_keys(config: &ConfigMap) -> Result<()> {
    let known: Vec<&str> = SIMULATION_KEYS
        .iter()
        .chain(PLAN_KEYS)
        .chain(COMMAND_KEYS)
        .copied()
        .collect();
    config.check_known(&known)
}

fn params_echo(params: &StableParams) -> Vec<(String, String)> {
    vec![
        ("model.alpha".to_string(), params.alpha().to_string()),
        ("model.dim".to_string(), params.dim().to_string()),
    ]
}

fn multi_index(config: &ConfigMap, key: &str, dim: usize) -> Result<MultiIndex> {
    let entries: Vec<u32> = config.list(key)?.unwrap_or_else(|| vec![0; dim]);
    if entries.len() != dim {
        return Err(Error::Config(format!(
            "{key} needs {dim} entries, got {}",
            entries.len()
        )));
    }
    Ok(MultiIndex::new(entries))
}

fn label(k: &MultiIndex) -> String {
    k.entries().iter().map(u32::to_string).collect::<Vec<_>>().join("_")
}

pub fn theta(config: &ConfigMap, out: &OutDir) -> Result<bool> {
    check_keys(config)?;
    let params = StableParams::from_config(config)?;
    let max_order: u32 = config.parsed_or("theta.max_order", 4)?;
    let mut resolved = params_echo(&params);
    resolved.push(("theta.max_order".to_string(), max_order.to_string()));
    let header = Header::new("theta", config, resolved);
    let mut csv = header.comment_block();
    let columns: Vec<String> = (1..=params.dim()).map(|i| format!("k_{i}")).collect();
    let _ = writeln!(csv, "{},theta", columns.join(","));
    for k in multiindex_enumerate(params.dim(), max_order) {
        let value = theta_constant(&params, &k)?;
        let entries: Vec<String> = k.entries().iter().map(u32::to_string).collect();
        let _ = writeln!(csv, "{},{value}", entries.join(","));
    }
    println!("{}", out.write("theta.csv", &csv)?.display());
    Ok(true)
}

pub fn kernel(config: &ConfigMap, out: &OutDir) -> Result<bool> {
    check_keys(config)?;
    let params = StableParams::from_config(config)?;
    let t: f64 = config.require("kernel.t")?;
    let k = multi_index(config, "kernel.k", params.dim())?;
    let default_points = [256, 64, 32][params.dim() - 1];
    let points: usize = config.parsed_or("kernel.points", default_points)?;
    let refine: f64 = config.parsed_or("kernel.refine", 1.0)?;
    let grid = GridSpec::for_kernel(&params, t, points, refine).map_err(|e| Error::Config(e.to_string()))?;
    let table = KernelTable::build(&params, &k, t, &grid)?;
    let mut resolved = params_echo(&params);
    resolved.extend([
        ("kernel.t".to_string(), t.to_string()),
        ("kernel.k".to_string(), label(&k).replace('_', " ")),
        ("kernel.points".to_string(), points.to_string()),
        ("kernel.refine".to_string(), refine.to_string()),
    ]);
    let header = Header::new("kernel", config, resolved);
    if table.accuracy_warning() {
        eprintln!("superproc: some kernel values carry an accuracy warning");
    }
    let csv = header.comment_block() + &table.to_csv(VERSION);
    println!("{}", out.write("kernel.csv", &csv)?.display());
    Ok(true)
}

pub fn expand(config: &ConfigMap, out: &OutDir) -> Result<bool> {
    check_keys(config)?;
    let params = StableParams::from_config(config)?;
    let spec = config.get("expand.function").unwrap_or("gaussian()");
    let f =
        parse_function(spec, &params, config.base_dir()).map_err(|e| Error::Config(format!("expand.function: {e}")))?;
    let t_grid: Vec<f64> = config
        .list("expand.t_grid")?
        .ok_or_else(|| Error::Config("missing required key 'expand.t_grid'".into()))?;
    let order: u32 = config.parsed_or("expand.order", 0)?;
    let mut resolved = params_echo(&params);
    resolved.extend([
        ("expand.function".to_string(), f.to_string()),
        ("expand.order".to_string(), order.to_string()),
    ]);
    let header = Header::new("expand", config, resolved);
    let mut csv = header.comment_block();
    let indices = multiindex_enumerate(params.dim(), order);
    let columns: Vec<String> = indices.iter().map(|k| format!("c_{}", label(k))).collect();
    let _ = writeln!(csv, "t,scaled_sup_error,accuracy_warning,{}", columns.join(","));
    for &t in &t_grid {
        let grid = default_expansion_grid(&params, t)?;
        let result = expansion_approx(&params, &f, t, order, &grid)?;
        let coefficients: Vec<String> = result
            .per_term
            .iter()
            .map(|term| term.coefficient.to_string())
            .collect();
        let _ = writeln!(
            csv,
            "{t},{},{},{}",
            result.scaled_sup_error,
            u8::from(result.accuracy_warning()),
            coefficients.join(",")
        );
    }
    println!("{}", out.write("expand.csv", &csv)?.display());
    Ok(true)
}

fn parse_functions(config: &ConfigMap, params: &StableParams) -> Result<Vec<TestFunction>> {
    config
        .get("simulate.functions")
        .unwrap_or("one")
        .split('|')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|spec| {
            parse_function(spec, params, config.base_dir())
                .map_err(|e| Error::Config(format!("simulate.functions: {e}")))
        })
        .collect()
}

pub fn simulate(config: &ConfigMap, out: &OutDir) -> Result<bool> {
    check_keys(config)?;
    let sim = SimulationConfig::from_config(config)?;
    let functions = parse_functions(config, &sim.params)?;
    let replicates: usize = config.parsed_or("simulate.replicates", 1)?;
    if replicates == 0 {
        return Err(Error::Config("simulate.replicates must be positive".into()));
    }
    let records = simulate_replicates(&sim, &functions, replicates)?;
    if let Some(record) = records.iter().find(|r| r.aborted) {
        return Err(Error::Capacity(format!(
            "replicate {} exceeded max_particles = {}",
            record.replicate, sim.max_particles
        )));
    }
    let mut resolved = sim.echo();
    let specs: Vec<String> = functions.iter().map(TestFunction::to_string).collect();
    resolved.extend([
        ("simulate.replicates".to_string(), replicates.to_string()),
        ("simulate.functions".to_string(), specs.join(" | ")),
    ]);
    let header = Header::new("simulate", config, resolved);
    let csv = trajectory_csv(&records, functions.len(), &header.lines());
    let summary = serde_json::json!({
        "config": header
            .pairs()
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
            .collect::<serde_json::Map<_, _>>(),
        "summary": summarize(&records),
    });
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    println!("{}", out.write("trajectories.csv", &csv)?.display());
    println!("{}", out.write("summary.json", &json)?.display());
    Ok(true)
}

fn run_experiment(name: &str, config: &ConfigMap, plan: &ExperimentPlan) -> Result<Vec<EstimatorReport>> {
    match name {
        "first_moment" => Ok(vec![first_moment_test(plan)?]),
        "variance" => Ok(vec![variance_test(plan)?]),
        "decoupling" => {
            let s_grid: Vec<f64> = config
                .list("verify.s_grid")?
                .ok_or_else(|| Error::Config("decoupling needs verify.s_grid".into()))?;
            let gap: f64 = config.require("verify.gap")?;
            Ok(vec![decoupling_test(plan, &s_grid, gap)?])
        }
        "kernel_limit" => {
            let dim = plan.sim.params.dim();
            let spec = config.get("verify.k").unwrap_or("0");
            spec.split(';')
                .map(|entries| {
                    let mut single = ConfigMap::new();
                    single.insert("k", entries.trim());
                    let k = multi_index(&single, "k", dim).map_err(|e| Error::Config(format!("verify.k: {e}")))?;
                    kernel_limit_experiment(plan, &k)
                })
                .collect()
        }
        "theorem" => Ok(vec![theorem_experiment(plan)?]),
        _ => Err(Error::Config(format!(
            "unknown experiment '{name}' (first_moment, variance, decoupling, kernel_limit, theorem)"
        ))),
    }
}

fn failed_report(name: &str, error: &Error) -> EstimatorReport {
    let mut report = EstimatorReport::new(name);
    report.checks.push(stable_superprocess::verify::Check {
        name: "completed".to_string(),
        verdict: Verdict::Fail,
        measured: f64::NAN,
        target: f64::NAN,
        tolerance: f64::NAN,
        note: error.to_string(),
    });
    report.notes.push(error.to_string());
    report
}

fn file_stem(experiment: &str) -> String {
    experiment
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect::<String>()
        .trim_matches('_')
        .to_string()
}

/// Runs every listed experiment and writes one JSON and one CSV report per
/// experiment. Experiment errors are recorded in their report; the first
/// one decides the exit status.
pub fn verify(config: &ConfigMap, out: &OutDir) -> Result<bool> {
    check_keys(config)?;
    let plan = ExperimentPlan::from_config(config)?;
    plan.validate()?;
    let experiments: Vec<String> = config
        .get("verify.experiments")
        .unwrap_or("first_moment")
        .split_whitespace()
        .map(str::to_string)
        .collect();
    let mut resolved = plan.echo();
    resolved.push(("verify.experiments".to_string(), experiments.join(" ")));
    let header = Header::new("verify", config, resolved);
    let mut first_error = None;
    let mut passed = true;
    for name in &experiments {
        let reports = run_experiment(name, config, &plan).unwrap_or_else(|error| {
            let report = failed_report(name, &error);
            first_error.get_or_insert(error);
            vec![report]
        });
        for report in reports {
            passed &= report.passed();
            for line in report.summary_lines() {
                println!("{line}");
            }
            let stem = file_stem(&report.experiment);
            out.write(&format!("report_{stem}.json"), &report.to_json(header.pairs()))?;
            out.write(&format!("report_{stem}.csv"), &report.to_csv(&header.lines()))?;
        }
    }
    match first_error {
        Some(error) => Err(error),
        None => Ok(passed),
    }
}
