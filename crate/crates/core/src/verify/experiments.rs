use serde::Serialize;

use super::plan::{record_index, Conditioning, ExperimentPlan};
use super::probe::{run_probes, Probe, Sample, SmoothedFunction};
use super::report::{EstimatorReport, ReportRow, TermRow, Verdict};
use crate::error::{Error, Result};
use crate::kernel::{semigroup_at, theta_constant, KernelCache, MultiIndex};
use crate::measures::{check_integrability, theorem_terms, TestFunction};
use crate::sim::{KernelFunctional, Statistic, TrajectoryRecord};

/// Width of every mean-versus-target gate, in standard errors.
pub const SE_GATE: f64 = 3.0;
/// Minimum replicate count for a trustworthy variance standard error.
pub const MIN_VARIANCE_REPLICATES: usize = 50;
/// Minimum number of surviving replicates for survivor-conditioned checks.
pub const MIN_SURVIVORS: usize = 30;

/// Cross-replicate summary of the `Ŵ_∞` proxy `e^{-βT} W_T(1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WinfEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub survivor_fraction: f64,
}

/// The proxy `e^{-βT} W_T(1)` summarized over `trajectories`; `t` must be
/// one of their record times.
pub fn estimate_winf(trajectories: &[TrajectoryRecord], t: f64) -> Result<WinfEstimate> {
    let mut proxies = Vec::with_capacity(trajectories.len());
    let mut survivors = 0usize;
    for record in trajectories {
        let row = record
            .rows
            .iter()
            .find(|row| row.t == t)
            .ok_or_else(|| Error::Config(format!("{t} is not a record time of replicate {}", record.replicate)))?;
        proxies.push(row.wtilde1);
        survivors += usize::from(row.population > 0);
    }
    if survivors == 0 {
        return Ok(WinfEstimate {
            mean: 0.0,
            standard_error: 0.0,
            survivor_fraction: 0.0,
        });
    }
    let stat = Statistic::of(&proxies);
    Ok(WinfEstimate {
        mean: stat.mean,
        standard_error: stat.standard_error,
        survivor_fraction: survivors as f64 / trajectories.len() as f64,
    })
}

/// Per-replicate `Ŵ_∞` proxies read from the horizon record.
fn winf_proxies(plan: &ExperimentPlan, samples: &[Sample], times: &[f64]) -> Vec<f64> {
    let horizon = record_index(times, plan.sim.horizon);
    let factor = (-plan.sim.beta * plan.sim.horizon).exp() / plan.sim.scale as f64;
    samples.iter().map(|s| s.populations[horizon] as f64 * factor).collect()
}

fn missed_note(report: &mut EstimatorReport, samples: &[Sample]) {
    let missed: u64 = samples.iter().map(|s| s.missed).sum();
    if missed > 0 {
        report.notes.push(format!(
            "{missed} particle evaluations fell outside a table and counted as 0"
        ));
    }
}

fn select(values: &[f64], keep: &[bool]) -> Vec<f64> {
    values.iter().zip(keep).filter(|(_, &k)| k).map(|(v, _)| *v).collect()
}

/// `probes` at every record in `spatial` and none elsewhere, so that records
/// past the last spatial one only carry the population count.
fn probes_at(times: &[f64], spatial: &[f64], probes: &[Probe]) -> Vec<Vec<Probe>> {
    times
        .iter()
        .map(|t| if spatial.contains(t) { probes.to_vec() } else { Vec::new() })
        .collect()
}

fn check_plan_function(plan: &ExperimentPlan) -> Result<()> {
    if !plan.test_function.is_whitelisted() {
        return Err(Error::Config(format!(
            "{} is not in the whitelist of test functions",
            plan.test_function
        )));
    }
    Ok(())
}

/// Compares the replicate mean of `W̃_t(f)` with `m(T_t f)` at every `t`.
pub fn first_moment_test(plan: &ExperimentPlan) -> Result<EstimatorReport> {
    plan.validate()?;
    check_plan_function(plan)?;
    let f = &plan.test_function;
    let (config, times) = plan.configured(&plan.t_grid)?;
    let probes = probes_at(&times, &plan.t_grid, &[Probe::Function(f.clone())]);
    let samples = run_probes(&config, plan.replicates, &probes)?;
    let alive: Vec<bool> = winf_proxies(plan, &samples, &times).iter().map(|&w| w > 0.0).collect();

    let mut report = EstimatorReport::new("first_moment");
    let mut worst = 0.0f64;
    let mut verdicts = Vec::new();
    for &t in &plan.t_grid {
        let j = record_index(&times, t);
        let mut target = 0.0;
        let mut warning = false;
        for atom in plan.sim.initial.atoms() {
            let v = semigroup_at(&plan.sim.params, f, t, &atom.location)?;
            target += atom.mass * v.value;
            warning |= v.accuracy_warning;
        }
        let tilde = (-plan.sim.beta * t).exp();
        let values: Vec<f64> = samples.iter().map(|s| tilde * s.values[j][0]).collect();
        let stat = Statistic::of(&values);
        let z = (stat.mean - target).abs() / stat.standard_error;
        let verdict = if warning {
            Verdict::Indeterminate
        } else {
            Verdict::from_bool((stat.mean - target).abs() <= SE_GATE * stat.standard_error)
        };
        if !z.is_nan() {
            worst = worst.max(z);
        }
        verdicts.push(verdict);
        report
            .rows
            .push(ReportRow::new(format!("Wtilde_t({f})"), t, Conditioning::All, stat, target).with_verdict(verdict));
        if plan.conditioning.includes_survivors() {
            let stat = Statistic::of(&select(&values, &alive));
            report.rows.push(ReportRow::new(
                format!("Wtilde_t({f})"),
                t,
                Conditioning::SurvivorsOnly,
                stat,
                f64::NAN,
            ));
        }
    }
    let verdict = if verdicts.contains(&Verdict::Fail) {
        Verdict::Fail
    } else if verdicts.contains(&Verdict::Indeterminate) {
        Verdict::Indeterminate
    } else {
        Verdict::Pass
    };
    report.push_check(
        "mean_matches_semigroup",
        verdict,
        worst,
        0.0,
        SE_GATE,
        "largest |mean - m(T_t f)| in standard errors",
    );
    missed_note(&mut report, &samples);
    Ok(report)
}

/// Sample variance with a standard error from the fourth central moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceEstimate {
    pub variance: f64,
    pub standard_error: f64,
    pub count: usize,
}

impl VarianceEstimate {
    pub fn of(values: &[f64]) -> Self {
        let stat = Statistic::of(values);
        let r = values.len() as f64;
        let m4 = values.iter().map(|v| (v - stat.mean).powi(4)).sum::<f64>() / r;
        let s4 = stat.variance * stat.variance;
        let var_of_var = ((m4 - s4 * (r - 3.0) / (r - 1.0)) / r).max(0.0);
        Self {
            variance: stat.variance,
            standard_error: var_of_var.sqrt(),
            count: values.len(),
        }
    }
}

/// `Var W̃_t(1) = m(1)(1 - e^{-βt})/β` (`m(1) t` at `β = 0`).
pub fn variance_target(total_mass: f64, beta: f64, t: f64) -> f64 {
    if beta == 0.0 {
        total_mass * t
    } else {
        total_mass * -(-beta * t).exp_m1() / beta
    }
}

fn variance_samples(plan: &ExperimentPlan, scale: u64) -> Result<Vec<Vec<f64>>> {
    let mut sized = plan.clone();
    sized.sim.scale = scale;
    let (config, times) = sized.configured(&plan.t_grid)?;
    let probes: Vec<Vec<Probe>> = times.iter().map(|_| Vec::new()).collect();
    let samples = run_probes(&config, plan.replicates, &probes)?;
    Ok(plan
        .t_grid
        .iter()
        .map(|&t| {
            let j = record_index(&times, t);
            let factor = (-plan.sim.beta * t).exp() / scale as f64;
            samples.iter().map(|s| s.populations[j] as f64 * factor).collect()
        })
        .collect())
}

/// Compares the sample variance of `W̃_t(1)` with its closed form at scale
/// `n`, and checks that the measured bias shrinks at scale `2n` (same
/// seed).
pub fn variance_test(plan: &ExperimentPlan) -> Result<EstimatorReport> {
    plan.validate()?;
    if !matches!(plan.test_function, TestFunction::Constant { value, .. } if value == 1.0) {
        return Err(Error::Config("the variance test uses f = 1 only".into()));
    }
    let base = variance_samples(plan, plan.sim.scale)?;
    let doubled = variance_samples(plan, 2 * plan.sim.scale)?;
    let mass = plan.sim.initial.total_mass();
    let reliable = plan.replicates >= MIN_VARIANCE_REPLICATES;
    let mut report = EstimatorReport::new("variance");
    if !reliable {
        report.notes.push(format!(
            "{} replicates is below {MIN_VARIANCE_REPLICATES}; variance standard errors are unreliable",
            plan.replicates
        ));
    }
    for (i, &t) in plan.t_grid.iter().enumerate() {
        let target = variance_target(mass, plan.sim.beta, t);
        let at_n = VarianceEstimate::of(&base[i]);
        let at_2n = VarianceEstimate::of(&doubled[i]);
        let bias_n = at_n.variance - target;
        let bias_2n = at_2n.variance - target;
        for (scale, est) in [(plan.sim.scale, at_n), (2 * plan.sim.scale, at_2n)] {
            report.rows.push(ReportRow {
                quantity: format!("var Wtilde_t(1) n={scale}"),
                t,
                conditioning: Conditioning::All,
                mean: est.variance,
                variance: est.standard_error * est.standard_error * est.count as f64,
                standard_error: est.standard_error,
                count: est.count,
                target,
                verdict: None,
            });
        }
        let gate = if reliable {
            Verdict::from_bool(bias_n.abs() <= SE_GATE * at_n.standard_error)
        } else {
            Verdict::Indeterminate
        };
        let row = report.rows.len() - 2;
        report.rows[row].verdict = Some(gate);
        report.push_check(
            format!("variance_t={t}"),
            gate,
            at_n.variance,
            target,
            SE_GATE * at_n.standard_error,
            "",
        );
        let shrink = if reliable {
            Verdict::from_bool(bias_2n.abs() < bias_n.abs())
        } else {
            Verdict::Indeterminate
        };
        report.push_check(
            format!("bias_shrinks_t={t}"),
            shrink,
            bias_2n.abs(),
            bias_n.abs(),
            0.0,
            format!("|bias| at n={} against n={}", 2 * plan.sim.scale, plan.sim.scale),
        );
    }
    Ok(report)
}

/// Estimates `D(s) = E[(W̃_{s+gap}(f) - W̃_s(T_gap f))²]` along `s_grid` and
/// checks its exponential decay.
pub fn decoupling_test(plan: &ExperimentPlan, s_grid: &[f64], gap: f64) -> Result<EstimatorReport> {
    plan.validate()?;
    check_plan_function(plan)?;
    if s_grid.len() < 2 {
        return Err(Error::Config("s_grid needs at least two times".into()));
    }
    if !(gap >= 0.0 && gap.is_finite()) {
        return Err(Error::Config(format!("gap must be non-negative, got {gap}")));
    }
    let mut prev = 0.0;
    for &s in s_grid {
        if !(s > prev && s + gap <= plan.sim.horizon) {
            return Err(Error::Config(format!(
                "s_grid must increase strictly with s + gap within the horizon {}, got {s} after {prev}",
                plan.sim.horizon
            )));
        }
        prev = s;
    }
    let f = &plan.test_function;
    let params = &plan.sim.params;
    let smoothed = if gap > 0.0 {
        Probe::Smoothed(SmoothedFunction::new(params, f, gap)?)
    } else {
        Probe::Function(f.clone())
    };
    let mut spatial: Vec<f64> = s_grid.iter().flat_map(|&s| [s, s + gap]).collect();
    spatial.sort_by(f64::total_cmp);
    spatial.dedup();
    let (config, times) = plan.configured(&spatial)?;
    // slot 0 holds W(f), slot 1 holds W(T_gap f)
    let probes = probes_at(&times, &spatial, &[Probe::Function(f.clone()), smoothed]);
    let samples = run_probes(&config, plan.replicates, &probes)?;

    let constant = match f {
        TestFunction::Constant { value, .. } => Some(*value),
        _ => None,
    };
    let mass = plan.sim.initial.total_mass();
    let beta = plan.sim.beta;
    let mut report = EstimatorReport::new("decoupling");
    let mut d = Vec::new();
    let mut below_floor = Vec::new();
    for &s in s_grid {
        let (i, j) = (record_index(&times, s), record_index(&times, s + gap));
        let (ti, tj) = ((-beta * s).exp(), (-beta * (s + gap)).exp());
        let squares: Vec<f64> = samples
            .iter()
            .map(|x| (tj * x.values[j][0] - ti * x.values[i][1]).powi(2))
            .collect();
        let stat = Statistic::of(&squares);
        // for constant f the difference is the martingale increment of W̃(1)
        let target = constant.map_or(f64::NAN, |c| {
            c * c * (variance_target(mass, beta, s + gap) - variance_target(mass, beta, s))
        });
        let mut row = ReportRow::new("D(s)", s, Conditioning::All, stat, target);
        if constant.is_some() {
            row.verdict = Some(Verdict::from_bool(
                (stat.mean - target).abs() <= SE_GATE * stat.standard_error,
            ));
        }
        report.rows.push(row);
        if stat.mean <= SE_GATE * stat.standard_error {
            below_floor.push((s, SE_GATE * stat.standard_error));
        }
        d.push(stat.mean);
    }
    let floor_note = below_floor
        .iter()
        .map(|(s, floor)| format!("D({s}) below noise floor {floor:.3e}"))
        .collect::<Vec<_>>()
        .join("; ");
    let decided = |ok: bool| {
        if below_floor.is_empty() {
            Verdict::from_bool(ok)
        } else {
            Verdict::Indeterminate
        }
    };
    let monotone = d.windows(2).all(|w| w[1] < w[0]);
    let first = s_grid[0];
    let last = s_grid[s_grid.len() - 1];
    let ratio = d[d.len() - 1] / d[0];
    let bound = (-beta * (last - first) / 2.0).exp();
    report.push_check(
        "monotone_decrease",
        decided(monotone),
        ratio,
        1.0,
        0.0,
        floor_note.clone(),
    );
    report.push_check("decay_rate", decided(ratio <= bound), ratio, bound, 0.0, floor_note);
    if constant.is_some() {
        let worst = report
            .rows
            .iter()
            .map(|r| (r.mean - r.target).abs() / r.standard_error)
            .fold(0.0, f64::max);
        let ok = report.rows.iter().all(|r| r.verdict == Some(Verdict::Pass));
        report.push_check(
            "closed_form",
            Verdict::from_bool(ok),
            worst,
            0.0,
            SE_GATE,
            "largest |D - target| in standard errors",
        );
    }
    missed_note(&mut report, &samples);
    Ok(report)
}

fn survivor_gate(report: &mut EstimatorReport, survivors: usize) -> bool {
    if survivors < MIN_SURVIVORS {
        report
            .notes
            .push(format!("{survivors} surviving replicates, fewer than {MIN_SURVIVORS}"));
        false
    } else {
        true
    }
}

fn push_paired_rows(
    report: &mut EstimatorReport,
    plan: &ExperimentPlan,
    quantity: &str,
    t: f64,
    values: &[f64],
    alive: &[bool],
    target: f64,
) -> Statistic {
    let survivors = Statistic::of(&select(values, alive));
    report.rows.push(ReportRow::new(
        quantity,
        t,
        Conditioning::SurvivorsOnly,
        survivors,
        target,
    ));
    if plan.conditioning.includes_all() {
        report.rows.push(ReportRow::new(
            quantity,
            t,
            Conditioning::All,
            Statistic::of(values),
            target,
        ));
    }
    survivors
}

fn index_label(k: &MultiIndex) -> String {
    k.entries().iter().map(u32::to_string).collect::<Vec<_>>().join(" ")
}

/// `Y(t) = t^{(d+|k|)/α} W̃_{ρ(t)}(∂^k p_{t-ρ(t)})` against its limit
/// `(-1)^{|k|/2} ϑ^k_{d,α} Ŵ_∞` (0 for odd `|k|`), paired per replicate
/// over survivors.
pub fn kernel_limit_experiment(plan: &ExperimentPlan, k: &MultiIndex) -> Result<EstimatorReport> {
    plan.validate()?;
    let params = &plan.sim.params;
    if k.dim() != params.dim() {
        return Err(Error::Config(format!(
            "k = {k} does not match dimension {}",
            params.dim()
        )));
    }
    if plan.t_grid[0] < 4.0 {
        return Err(Error::Config(format!(
            "t_grid must start at t >= 4, got {}",
            plan.t_grid[0]
        )));
    }
    let rhos: Vec<f64> = plan.t_grid.iter().map(|&t| plan.rho(t)).collect();
    let (config, times) = plan.configured(&rhos)?;
    let cache = KernelCache::new();
    let mut probes: Vec<Vec<Probe>> = times.iter().map(|_| Vec::new()).collect();
    for (&t, &rho) in plan.t_grid.iter().zip(&rhos) {
        let kernel = KernelFunctional::new(params, k, t - rho, &cache)?;
        probes[record_index(&times, rho)] = vec![Probe::Kernel(kernel)];
    }
    let samples = run_probes(&config, plan.replicates, &probes)?;
    let winf = winf_proxies(plan, &samples, &times);
    let alive: Vec<bool> = winf.iter().map(|&w| w > 0.0).collect();
    let survivors = alive.iter().filter(|&&a| a).count();

    let order = k.order();
    let limit = if order % 2 == 1 {
        0.0
    } else {
        let sign = if (order / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * theta_constant(params, k)?
    };
    let label = index_label(k);
    let mut report = EstimatorReport::new(format!("kernel_limit k={label}"));
    let mut residuals = Vec::new();
    let mut last_signed = None;
    for (&t, &rho) in plan.t_grid.iter().zip(&rhos) {
        let j = record_index(&times, rho);
        let scale = t.powf((params.dim() as f64 + order as f64) / params.alpha()) * (-plan.sim.beta * rho).exp();
        let y: Vec<f64> = samples.iter().map(|s| scale * s.values[j][0]).collect();
        let targets: Vec<f64> = winf.iter().map(|w| limit * w).collect();
        let signed: Vec<f64> = y.iter().zip(&targets).map(|(a, b)| a - b).collect();
        let absolute: Vec<f64> = signed.iter().map(|v| v.abs()).collect();
        let mean_target = Statistic::of(&select(&targets, &alive)).mean;
        push_paired_rows(&mut report, plan, "Y(t)", t, &y, &alive, mean_target);
        last_signed = Some(push_paired_rows(
            &mut report,
            plan,
            "Y(t)-target",
            t,
            &signed,
            &alive,
            0.0,
        ));
        residuals.push(push_paired_rows(&mut report, plan, "|Y(t)-target|", t, &absolute, &alive, 0.0).mean);
    }
    let enough = survivor_gate(&mut report, survivors);
    let gated = |ok: bool| {
        if enough {
            Verdict::from_bool(ok)
        } else {
            Verdict::Indeterminate
        }
    };
    let decreasing = residuals.windows(2).all(|w| w[1] < w[0]);
    report.push_check(
        "residual_decreasing",
        gated(decreasing),
        residuals[residuals.len() - 1],
        residuals[0],
        0.0,
        "mean |Y(t) - target| over survivors, last against first t",
    );
    let last = last_signed.expect("t_grid is not empty");
    report.push_check(
        "final_mean_near_zero",
        gated(last.mean.abs() <= SE_GATE * last.standard_error),
        last.mean,
        0.0,
        SE_GATE * last.standard_error,
        "mean of Y(t) - target at the last t",
    );
    missed_note(&mut report, &samples);
    Ok(report)
}

/// Scaled residual of the long-time expansion of `W̃_t(f)` with `Ŵ_∞`
/// paired per replicate, over survivors, at `plan.expansion_order`.
pub fn theorem_experiment(plan: &ExperimentPlan) -> Result<EstimatorReport> {
    let mut reports = theorem_experiments(plan, &[plan.expansion_order])?;
    Ok(reports.remove(0))
}

/// [`theorem_experiment`] at each of `orders`, all evaluated on one set of
/// simulated trajectories.
pub fn theorem_experiments(plan: &ExperimentPlan, orders: &[u32]) -> Result<Vec<EstimatorReport>> {
    plan.validate()?;
    check_plan_function(plan)?;
    let f = &plan.test_function;
    for &order in orders {
        check_integrability(f, order).require(order)?;
    }
    let (first, last) = (plan.t_grid[0], plan.t_grid[plan.t_grid.len() - 1]);
    if last < 4.0 * first {
        return Err(Error::Config(format!(
            "t_grid must span a factor of 4 at least, got {first}..{last}"
        )));
    }
    let (config, times) = plan.configured(&plan.t_grid)?;
    let probes = probes_at(&times, &plan.t_grid, &[Probe::Function(f.clone())]);
    let samples = run_probes(&config, plan.replicates, &probes)?;
    let winf = winf_proxies(plan, &samples, &times);
    orders
        .iter()
        .map(|&order| theorem_report(plan, order, &samples, &times, &winf))
        .collect()
}

fn theorem_report(
    plan: &ExperimentPlan,
    order: u32,
    samples: &[Sample],
    times: &[f64],
    winf: &[f64],
) -> Result<EstimatorReport> {
    let f = &plan.test_function;
    let params = &plan.sim.params;
    let last = plan.t_grid[plan.t_grid.len() - 1];
    let alive: Vec<bool> = winf.iter().map(|&w| w > 0.0).collect();
    let survivors = alive.iter().filter(|&&a| a).count();

    let d = params.dim() as f64;
    let alpha = params.alpha();
    let mut report = EstimatorReport::new(format!("theorem N={order}"));
    let mut residuals = Vec::new();
    let mut comparison = None;
    for &t in &plan.t_grid {
        let j = record_index(times, t);
        let terms = theorem_terms(f, params, t, order)?;
        for (k, value) in &terms {
            report.decomposition.push(TermRow {
                t,
                index: index_label(k),
                value: value * t.powf(d / alpha),
            });
        }
        let coefficient: f64 = terms.iter().map(|(_, v)| v).sum();
        let tilde = (-plan.sim.beta * t).exp();
        let observed: Vec<f64> = samples.iter().map(|s| tilde * s.values[j][0]).collect();
        let residual = |c: f64, scale: f64| -> Vec<f64> {
            observed
                .iter()
                .zip(winf)
                .map(|(w, wi)| scale * (w - wi * c).abs())
                .collect()
        };
        let scaled = residual(coefficient, t.powf((order as f64 + d) / alpha));
        residuals.push(push_paired_rows(&mut report, plan, "R_N(t)", t, &scaled, &alive, 0.0).mean);
        if order > 0 {
            let base_coefficient: f64 = theorem_terms(f, params, t, 0)?.iter().map(|(_, v)| v).sum();
            let common = t.powf(d / alpha);
            let with_order = push_paired_rows(
                &mut report,
                plan,
                "t^(d/a) residual order N",
                t,
                &residual(coefficient, common),
                &alive,
                0.0,
            );
            let with_zero = push_paired_rows(
                &mut report,
                plan,
                "t^(d/a) residual order 0",
                t,
                &residual(base_coefficient, common),
                &alive,
                0.0,
            );
            comparison = Some((with_order.mean, with_zero.mean));
        }
    }
    let enough = survivor_gate(&mut report, survivors);
    let gated = |ok: bool| {
        if enough {
            Verdict::from_bool(ok)
        } else {
            Verdict::Indeterminate
        }
    };
    let (r_first, r_last) = (residuals[0], residuals[residuals.len() - 1]);
    report.push_check(
        "residual_non_increasing",
        gated(residuals.windows(2).all(|w| w[1] <= w[0])),
        r_last,
        r_first,
        0.0,
        "survivor mean of the scaled residual, last against first t",
    );
    report.push_check(
        "end_to_end_decrease",
        gated(r_first >= 2.0 * r_last),
        r_first / r_last,
        2.0,
        0.0,
        "first-t over last-t mean residual",
    );
    if let Some((with_order, with_zero)) = comparison {
        report.push_check(
            "higher_order_helps",
            gated(with_order <= with_zero),
            with_order,
            with_zero,
            0.0,
            format!("paired mean residual at t = {last}, order {order} against order 0"),
        );
    }
    missed_note(&mut report, samples);
    Ok(report)
}
