use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use expot::gen::random_instance;
use expot::mcc::{mcc_to_ot, parse_dimacs, solve_mcc, write_circulation};
use expot::oracle::exact_ot;
use expot::{repair_plan, run_expsinkhorn, run_plain_sinkhorn, Instance, Limits, Matrix, Plan, SinkhornRun, Trace};
use rayon::prelude::*;

use crate::formats::{bench_csv, trace_csv, BenchRow, InstanceFile, PlanFile};
use crate::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum)]
pub enum Mode {
    Expsinkhorn,
    Plain,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Expsinkhorn => "expsinkhorn",
            Mode::Plain => "plain",
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Input)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(Failure::Input)
}

pub fn load_instance(path: &Path, rationalize: Option<u64>) -> Result<(Instance, f64), Failure> {
    let file = InstanceFile::parse(&read(path)?).map_err(Failure::Input)?;
    match rationalize {
        Some(d) => Ok((file.rationalize(d).map_err(Failure::Input)?, d as f64)),
        None => Ok((file.to_instance().map_err(Failure::Input)?, 1.0)),
    }
}

/// Solver output common to both modes.
pub struct Solved {
    pub plan: Plan,
    pub trace: Option<Trace>,
    pub final_eta: f64,
    /// `2 ||r||_1 log(n mu) / eta` in instance units.
    pub gap_bound: f64,
}

pub fn solve_instance(inst: &Instance, epsilon: f64, mode: Mode, limits: Limits) -> anyhow::Result<Solved> {
    let run = match mode {
        Mode::Expsinkhorn => run_expsinkhorn(inst, epsilon, limits),
        Mode::Plain => run_plain_sinkhorn(inst, epsilon, limits),
    };
    match run {
        Ok(SinkhornRun { plan, state, trace }) => {
            let repaired = repair_plan(&plan, inst)?;
            let gap = expot::gap_bound(&state) * inst.mu() as f64;
            Ok(Solved {
                plan: repaired,
                trace: Some(trace),
                final_eta: state.eta(),
                gap_bound: gap,
            })
        }
        // All-zero costs: every feasible plan is optimal.
        Err(expot::Error::DegenerateCost) => Ok(Solved {
            plan: expot::solve(inst, epsilon)?,
            trace: None,
            final_eta: 0.0,
            gap_bound: 0.0,
        }),
        Err(e) => Err(e.into()),
    }
}

pub struct SolveArgs {
    pub input: PathBuf,
    pub epsilon: f64,
    pub mode: Mode,
    pub trace: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub max_iters: Option<usize>,
    pub rationalize: Option<u64>,
}

pub fn cmd_solve(args: &SolveArgs, out: &mut String) -> Result<(), Failure> {
    let (inst, denominator) = load_instance(&args.input, args.rationalize)?;
    let limits = Limits {
        max_steps: args.max_iters,
    };
    let solved = solve_instance(&inst, args.epsilon, args.mode, limits).map_err(Failure::Solver)?;
    let x = solved.plan.x.scaled(1.0 / denominator);
    let cost = solved.plan.cost / denominator;
    let iterations = solved.trace.as_ref().map_or(0, |t| t.len());
    let _ = writeln!(out, "cost {cost}");
    let _ = writeln!(out, "iterations {iterations}");
    let _ = writeln!(out, "final_eta {}", solved.final_eta);
    let _ = writeln!(out, "gap_bound {}", solved.gap_bound / denominator);
    if let Some(path) = &args.output {
        write(path, &PlanFile::new(&x, cost).to_json())?;
    }
    if let Some(path) = &args.trace {
        let trace = solved.trace.unwrap_or_else(|| Trace::new(inst.mu(), 0.0, 0.0));
        write(path, &trace_csv(&trace).map_err(Failure::Input)?)?;
    }
    Ok(())
}

/// Feasibility (1e-9), cost consistency, and the `OPT + epsilon` bound.
pub fn check_plan(inst: &Instance, x: &Matrix, claimed_cost: Option<f64>, epsilon: f64) -> Vec<String> {
    let mut failures = Vec::new();
    if x.rows() != inst.n() || x.cols() != inst.m() {
        failures.push(format!(
            "shape {}x{} does not match instance {}x{}",
            x.rows(),
            x.cols(),
            inst.n(),
            inst.m()
        ));
        return failures;
    }
    let plan = Plan::new(x.clone(), inst);
    let residual = plan.marginal_residual(inst);
    if residual > 1e-9 {
        failures.push(format!("feasibility: marginal residual {residual:.3e} exceeds 1e-9"));
    }
    if plan.min_entry() < -1e-9 {
        failures.push(format!("feasibility: negative entry {:.3e}", plan.min_entry()));
    }
    if let Some(claimed) = claimed_cost {
        if (claimed - plan.cost).abs() > 1e-9 * plan.cost.abs().max(1.0) {
            failures.push(format!("cost: file says {claimed} but the plan costs {}", plan.cost));
        }
    }
    let (opt, _) = exact_ot(inst);
    if plan.cost > opt + epsilon {
        failures.push(format!("optimality: cost {} exceeds OPT {opt} + {epsilon}", plan.cost));
    }
    failures
}

pub struct VerifyArgs {
    pub input: PathBuf,
    pub plan: Option<PathBuf>,
    pub solve_self: bool,
    pub epsilon: f64,
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut String) -> Result<(), Failure> {
    let (inst, _) = load_instance(&args.input, None)?;
    let failures = match (&args.plan, args.solve_self) {
        (Some(path), false) => {
            let file = PlanFile::parse(&read(path)?).map_err(Failure::Input)?;
            let x = file.matrix().map_err(Failure::Input)?;
            check_plan(&inst, &x, Some(file.cost.0), args.epsilon)
        }
        (None, true) => {
            let solved =
                solve_instance(&inst, args.epsilon, Mode::Expsinkhorn, Limits::default()).map_err(Failure::Solver)?;
            check_plan(&inst, &solved.plan.x, None, args.epsilon)
        }
        _ => return Err(Failure::Input(anyhow!("verify takes either a plan file or --self"))),
    };
    if failures.is_empty() {
        let _ = writeln!(out, "pass");
        Ok(())
    } else {
        Err(Failure::Verify(failures))
    }
}

pub struct GenArgs {
    pub n: usize,
    pub m: usize,
    pub cost_max: u64,
    pub marg_max: u64,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

pub fn cmd_gen(args: &GenArgs, out: &mut String) -> Result<(), Failure> {
    let inst: Instance = random_instance(args.n, args.m, args.cost_max, args.marg_max, args.seed)
        .map_err(|e| Failure::Input(e.into()))?;
    let text = InstanceFile::from_instance(&inst).to_json();
    match &args.output {
        Some(path) => write(path, &text),
        None => {
            out.push_str(&text);
            Ok(())
        }
    }
}

pub struct BenchArgs {
    pub eps_list: Vec<f64>,
    pub modes: Vec<Mode>,
    pub seeds: Vec<u64>,
    pub input: Option<PathBuf>,
    pub n: usize,
    pub m: usize,
    pub cost_max: u64,
    pub marg_max: u64,
    pub max_iters: Option<usize>,
    pub output: Option<PathBuf>,
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let k = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[k]
    } else {
        (values[k - 1] + values[k]) / 2.0
    })
}

/// `(slope, r^2)` of the least-squares line through `(x, y)`.
pub fn least_squares(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((sxy / sxx, r2))
}

#[derive(Default)]
struct Group {
    epsilon: f64,
    iterations: Vec<f64>,
    gaps: Vec<f64>,
    runs: usize,
    failures: usize,
}

pub fn bench_rows(args: &BenchArgs) -> Result<Vec<BenchRow>, Failure> {
    let instances: Vec<(u64, Instance)> = match &args.input {
        Some(path) => vec![(0, load_instance(path, None)?.0)],
        None => args
            .seeds
            .iter()
            .map(|&s| random_instance(args.n, args.m, args.cost_max, args.marg_max, s).map(|i| (s, i)))
            .collect::<Result<_, _>>()
            .map_err(|e| Failure::Input(e.into()))?,
    };
    let optima: Vec<f64> = instances.par_iter().map(|(_, inst)| exact_ot(inst).0).collect();
    let mut cells = Vec::new();
    for &mode in &args.modes {
        for &eps in &args.eps_list {
            for k in 0..instances.len() {
                cells.push((mode, eps, k));
            }
        }
    }
    let limits = Limits {
        max_steps: args.max_iters,
    };
    let results: Vec<_> = cells
        .par_iter()
        .map(|&(mode, eps, k)| {
            let res = solve_instance(&instances[k].1, eps, mode, limits)
                .map(|s| (s.trace.map_or(0, |t| t.len()) as f64, s.plan.cost - optima[k]));
            (mode, eps, instances[k].0, res.ok())
        })
        .collect();
    // Deterministic assembly keyed by (mode, epsilon, seed).
    let mut groups: BTreeMap<(Mode, u64), Group> = BTreeMap::new();
    let mut sorted = results;
    sorted.sort_by_key(|a| (a.0, a.1.to_bits(), a.2));
    for (mode, eps, _, res) in sorted {
        // Larger epsilon first within a mode.
        let g = groups.entry((mode, u64::MAX - eps.to_bits())).or_insert_with(|| Group {
            epsilon: eps,
            ..Group::default()
        });
        g.runs += 1;
        match res {
            Some((iters, gap)) => {
                g.iterations.push(iters);
                g.gaps.push(gap);
            }
            None => g.failures += 1,
        }
    }
    Ok(groups
        .into_iter()
        .map(|((mode, _), mut g)| BenchRow {
            mode: mode.as_str().to_string(),
            epsilon: g.epsilon,
            runs: g.runs,
            failures: g.failures,
            median_iterations: median(&mut g.iterations),
            median_cost_gap: median(&mut g.gaps),
        })
        .collect())
}

pub fn cmd_bench(args: &BenchArgs, out: &mut String) -> Result<(), Failure> {
    let rows = bench_rows(args)?;
    let text = bench_csv(&rows).map_err(Failure::Input)?;
    match &args.output {
        Some(path) => write(path, &text)?,
        None => out.push_str(&text),
    }
    let fast: Vec<&BenchRow> = rows.iter().filter(|r| r.mode == Mode::Expsinkhorn.as_str()).collect();
    let x: Vec<f64> = fast
        .iter()
        .filter(|r| r.median_iterations.is_some())
        .map(|r| (1.0 / r.epsilon).ln())
        .collect();
    let y: Vec<f64> = fast.iter().filter_map(|r| r.median_iterations).collect();
    if let Some((slope, r2)) = least_squares(&x, &y) {
        let _ = writeln!(out, "expsinkhorn slope {slope} r2 {r2}");
    }
    if rows.iter().all(|r| r.failures == r.runs) {
        return Err(Failure::Solver(anyhow!("every benchmark cell failed")));
    }
    Ok(())
}

pub fn cmd_mcc_solve(
    input: &Path,
    epsilon: Option<f64>,
    output: Option<&Path>,
    out: &mut String,
) -> Result<(), Failure> {
    let g = parse_dimacs(&read(input)?).map_err(|e| Failure::Input(e.into()))?;
    let sol = solve_mcc(&g, epsilon).map_err(|e| Failure::Solver(e.into()))?;
    let _ = writeln!(out, "cost {}", sol.cost);
    if let Some(path) = output {
        write(path, &write_circulation(&g, &sol.circulation))?;
    }
    Ok(())
}

pub fn cmd_mcc_reduce(input: &Path, output: Option<&Path>, out: &mut String) -> Result<(), Failure> {
    let g = parse_dimacs(&read(input)?).map_err(|e| Failure::Input(e.into()))?;
    let red = mcc_to_ot::<f64>(&g).map_err(|e| Failure::Solver(e.into()))?;
    let text = InstanceFile::from_instance(&red.instance).to_json();
    let _ = writeln!(out, "big_m {}", red.big_m);
    match output {
        Some(path) => write(path, &text),
        None => {
            out.push_str(&text);
            Ok(())
        }
    }
}
