use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use lasched::channel::{derivative_bound_check, mmse, MmseCurve, MmsePolicy};
use lasched::functionals::{ErrorReport, ReportBuilder};
use lasched::numeric::stage_seed;
use lasched::sampler::{
    sample, second_order_sample, DenoiserKind, SampleReport, SamplerConfig, SamplerInit, SamplerOrder,
};
use lasched::schedule::{grid_edm, grid_geometric, grid_time_uniform, las, CandidateSet, LasConfig, Schedule};
use lasched::toy::{build_toy, ToyConfig, ToyKind};
use lasched::verify::{run_suite, Suite};
use lasched::{LossProfile, SnrGrid, TargetDistribution};

use crate::args::*;
use crate::failure::{code, CliResult, Failure};
use crate::manifest::Run;

fn num(x: f64) -> String {
    format!("{x:.17e}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn load_target(spec: &str, toy: Option<&TargetArgs>) -> CliResult<TargetDistribution> {
    if let Ok(kind) = spec.parse::<ToyKind>() {
        let mut cfg = ToyConfig::new(kind);
        if let Some(t) = toy {
            cfg = cfg.with_sigma0(t.sigma0).with_scale(t.scale);
            if let Some(w) = &t.toy_weights {
                cfg = cfg.with_weights(w.clone());
            }
        }
        return build_toy(&cfg).map_err(|e| Failure::config(e.to_string()));
    }
    let text = fs::read_to_string(spec).map_err(|e| {
        Failure::config(format!(
            "target `{spec}` is neither a toy name nor a readable file: {e}"
        ))
    })?;
    TargetDistribution::from_json(&text).map_err(|e| Failure::config(format!("{spec}: {e}")))
}

fn load_loss(path: &Path) -> CliResult<LossProfile> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::new(code::UNREADABLE, format!("{}: {e}", path.display())))?;
    LossProfile::from_csv(&text).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

fn load_schedule(path: &Path) -> CliResult<Schedule> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::new(code::UNREADABLE, format!("{}: {e}", path.display())))?;
    Schedule::from_json(&text).map_err(|e| Failure::new(code::UNREADABLE, format!("{}: {e}", path.display())))
}

fn check_endpoints(e: Endpoints) -> CliResult<(f64, f64)> {
    if !(e.delta > 0.0 && e.horizon > e.delta && e.horizon.is_finite()) {
        return Err(Failure::config(format!(
            "need 0 < delta < T, got T = {}, delta = {}",
            e.horizon, e.delta
        )));
    }
    Ok((1.0 / e.horizon, 1.0 / e.delta))
}

fn check_steps(steps: &[usize]) -> CliResult<()> {
    if steps.is_empty() {
        return Err(Failure::config("no K given"));
    }
    if steps.contains(&0) {
        return Err(Failure::new(code::INFEASIBLE, "K must be at least 1"));
    }
    Ok(())
}

fn las_config(k: usize, a: LasArgs) -> LasConfig {
    LasConfig::new(k)
        .with_lambda(a.lambda)
        .with_alpha(a.alpha)
        .with_beam(a.beam, a.window, a.extra)
}

fn policy(dist: &TargetDistribution, o: OracleArgs, seed: u64) -> MmsePolicy {
    match o.quad_nodes {
        Some(nodes) => MmsePolicy::Quadrature { nodes },
        None => MmsePolicy::auto(dist, o.mc_samples, seed),
    }
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

fn print_schedule(name: &str, s: &Schedule) {
    let h: Vec<String> = s.log_steps().iter().map(|x| format!("{x:.4}")).collect();
    println!(
        "{name} K={} objective={:.6e} h=[{}]",
        s.steps,
        s.objective,
        h.join(", ")
    );
}

pub fn cmd_schedule(args: &ScheduleArgs, run: &mut Run) -> CliResult<()> {
    check_steps(&args.steps)?;
    let loss = run.stage("load", |_| load_loss(&args.loss))?;
    let endpoints = match (args.horizon, args.delta) {
        (None, None) => None,
        (Some(t), Some(d)) => Some(check_endpoints(Endpoints { horizon: t, delta: d })?),
        _ => return Err(Failure::config("give both --T and --delta, or neither")),
    };
    let cands = CandidateSet::from_profile(&loss, endpoints)?;
    run.stage("search", |run| {
        for &k in &args.steps {
            let s = las(&cands, &las_config(k, args.las))?;
            print_schedule("las", &s);
            run.write(&format!("schedule_K{k}.json"), &(s.to_json() + "\n"))?;
        }
        Ok(())
    })
}

fn baseline(name: GridName, k: usize, e: Endpoints, rho: f64) -> CliResult<SnrGrid> {
    Ok(match name {
        GridName::TimeUniform => grid_time_uniform(e.horizon, e.delta, k)?,
        GridName::Geometric => grid_geometric(e.horizon, e.delta, k)?,
        GridName::Edm => grid_edm(e.horizon, e.delta, k, rho)?,
        GridName::Las => unreachable!("las is not a baseline grid"),
    })
}

pub fn cmd_grids(args: &GridArgs, run: &mut Run) -> CliResult<()> {
    check_steps(&args.steps)?;
    check_endpoints(args.endpoints)?;
    if args.grids.contains(&GridName::Las) {
        return Err(Failure::config(
            "las needs a target or loss; use `report` or `schedule`",
        ));
    }
    run.stage("grids", |run| {
        let mut csv = String::from("schedule,K,k,gamma,t\n");
        for &name in &args.grids {
            for &k in &args.steps {
                let g = baseline(name, k, args.endpoints, args.rho)?;
                for (i, gamma) in g.gammas().iter().enumerate() {
                    let _ = writeln!(csv, "{},{k},{i},{},{}", name.label(), num(*gamma), num(1.0 / gamma));
                }
            }
        }
        run.write("grids.csv", &csv)
    })
}

/// A named grid to evaluate.
struct Entry {
    name: String,
    grid: SnrGrid,
}

fn build_entries(
    sel: &GridSelection,
    dist: &TargetDistribution,
    loss: Option<&LossProfile>,
    seed: u64,
) -> CliResult<Vec<Entry>> {
    let (lo, hi) = check_endpoints(sel.endpoints)?;
    if !sel.grids.is_empty() {
        check_steps(&sel.steps)?;
    }
    let mut out = Vec::new();
    let mut cands: Option<CandidateSet> = None;
    for &name in &sel.grids {
        for &k in &sel.steps {
            let grid = if name == GridName::Las {
                if cands.is_none() {
                    cands = Some(match loss {
                        Some(l) => CandidateSet::from_profile(l, Some((lo, hi)))?,
                        None => {
                            if sel.oracle.candidates < 2 {
                                return Err(Failure::config("need at least 2 candidates"));
                            }
                            let p = policy(dist, sel.oracle, stage_seed(seed, "candidates"));
                            let gammas = log_spaced(lo, hi, sel.oracle.candidates);
                            let risks = gammas
                                .iter()
                                .map(|&g| mmse(dist, g, p).map(|e| e.value))
                                .collect::<lasched::Result<Vec<f64>>>()?;
                            CandidateSet::new(gammas, risks)?
                        }
                    });
                }
                let s = las(cands.as_ref().expect("just built"), &las_config(k, sel.las))?;
                s.grid()?
            } else {
                baseline(name, k, sel.endpoints, sel.rho)?
            };
            out.push(Entry {
                name: name.label().to_string(),
                grid,
            });
        }
    }
    for path in &sel.schedules {
        let s = load_schedule(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "schedule".into());
        out.push(Entry { name, grid: s.grid()? });
    }
    if out.is_empty() {
        return Err(Failure::config("no grids selected"));
    }
    Ok(out)
}

#[derive(Serialize)]
struct ReportRow {
    schedule: String,
    #[serde(rename = "K")]
    steps: usize,
    report: ErrorReport,
}

#[derive(Serialize)]
struct ReportFile {
    target: String,
    policy: MmsePolicy,
    entropy: Option<f64>,
    /// Fitted `C` with `|mmse'(γ)| ≤ C²H²/γ²` on the evaluation knots.
    c_fit: Option<f64>,
    rows: Vec<ReportRow>,
}

pub fn cmd_report(args: &ReportArgs, run: &mut Run) -> CliResult<()> {
    let seed = args.common.seed;
    let (dist, loss) = run.stage("load", |run| {
        let dist = load_target(&args.target.target, Some(&args.target))?;
        run.write("target.json", &(dist.to_json() + "\n"))?;
        let loss = args.selection.loss.as_deref().map(load_loss).transpose()?;
        Ok((dist, loss))
    })?;
    let entries = run.stage("grids", |_| build_entries(&args.selection, &dist, loss.as_ref(), seed))?;
    let (lo, hi) = check_endpoints(args.selection.endpoints)?;
    let p = policy(&dist, args.selection.oracle, stage_seed(seed, "report"));
    let curve = MmseCurve::new(dist.clone(), p)?.with_domain(lo, hi)?;

    let fit = run.stage("entropy", |_| {
        let h = match dist.shannon_entropy() {
            Ok(h) if h > 0.0 => h,
            _ => return Ok(None),
        };
        let c = derivative_bound_check(&dist, &log_spaced(lo, hi, 16), p)?;
        Ok(Some((h, c.constant.sqrt())))
    })?;

    let rows = run.stage("report", |_| {
        let mut builder = ReportBuilder::new(&curve);
        if let Some(l) = &loss {
            builder = builder.with_loss(l);
        }
        if let Some((h, c)) = fit {
            builder = builder.with_entropy_fit(h, c);
        }
        entries
            .iter()
            .map(|e| {
                Ok(ReportRow {
                    schedule: e.name.clone(),
                    steps: e.grid.steps(),
                    report: builder.report(&e.grid)?,
                })
            })
            .collect::<CliResult<Vec<_>>>()
    })?;

    let mut csv = String::from(
        "schedule,K,e_disc,e_disc_stderr,e_apx,e_apx_stderr,kl_path_bound,combined_objective,disc_bound,geo_disc_bound,kl_total\n",
    );
    for r in &rows {
        let rep = &r.report;
        let fb = rep.final_bounds.as_ref();
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.schedule,
            r.steps,
            num(rep.e_disc.value),
            num(rep.e_disc.stderr),
            num(rep.e_apx.value),
            num(rep.e_apx.stderr),
            num(rep.kl_path_bound.value),
            opt_num(rep.combined_objective),
            opt_num(fb.map(|b| b.disc_bound)),
            opt_num(fb.map(|b| b.geo_disc_bound)),
            opt_num(fb.and_then(|b| b.kl_total)),
        );
        println!(
            "{} K={} e_disc={:.6e} e_apx={:.6e} kl_bound={:.6e}",
            r.schedule, r.steps, rep.e_disc.value, rep.e_apx.value, rep.kl_path_bound.value
        );
    }
    run.write("report.csv", &csv)?;
    run.write_json(
        "report.json",
        &ReportFile {
            target: args.target.target.clone(),
            policy: p,
            entropy: fit.map(|f| f.0),
            c_fit: fit.map(|f| f.1),
            rows,
        },
    )
}

#[derive(Serialize)]
struct SimulateRow {
    schedule: String,
    #[serde(rename = "K")]
    steps: usize,
    report: SampleReport,
}

pub fn cmd_simulate(args: &SimulateArgs, run: &mut Run) -> CliResult<()> {
    let seed = args.common.seed;
    if args.samples == 0 {
        return Err(Failure::config("--samples must be positive"));
    }
    let (dist, loss) = run.stage("load", |run| {
        let dist = load_target(&args.target.target, Some(&args.target))?;
        run.write("target.json", &(dist.to_json() + "\n"))?;
        let loss = args.selection.loss.as_deref().map(load_loss).transpose()?;
        Ok((dist, loss))
    })?;
    let entries = run.stage("grids", |_| build_entries(&args.selection, &dist, loss.as_ref(), seed))?;
    let order = match args.order {
        Order::First => SamplerOrder::First,
        Order::Second => SamplerOrder::Second,
    };
    let init = match args.init {
        Init::ExactForward => SamplerInit::ExactForward,
        Init::GaussianPrior => SamplerInit::GaussianPrior,
    };
    let denoiser = match args.sigma_err {
        None => DenoiserKind::Oracle,
        Some(s) if s >= 0.0 && s.is_finite() => DenoiserKind::OraclePlusNoise { sigma_err: s },
        Some(s) => return Err(Failure::config(format!("--sigma-err must be >= 0, got {s}"))),
    };

    let mut rows = Vec::with_capacity(entries.len());
    let mut csv = String::from("schedule,K,order,nll_mean,nll_stderr,nll_denoised,nll_denoised_stderr\n");
    for (i, e) in entries.iter().enumerate() {
        let k = e.grid.steps();
        let label = format!("{}_K{k}", e.name);
        let cfg = SamplerConfig::new(args.samples, stage_seed(seed, &format!("simulate/{i}/{label}")))
            .with_order(order)
            .with_init(init)
            .with_denoiser(denoiser)
            .with_final_denoise(args.final_denoise);
        let result = run.stage(&format!("sample {label}"), |run| {
            let result = match order {
                SamplerOrder::First => sample(&dist, &e.grid, &cfg)?,
                SamplerOrder::Second => second_order_sample(&dist, &e.grid, &cfg)?,
            };
            if args.save_samples {
                run.write(&format!("samples_{label}.csv"), &result.samples_csv())?;
            }
            Ok(result)
        })?;
        let r = result.report;
        let _ = writeln!(
            csv,
            "{},{k},{},{},{},{},{}",
            e.name,
            order_label(order),
            num(r.nll_mean),
            num(r.nll_stderr),
            opt_num(r.nll_denoised.map(|d| d.value)),
            opt_num(r.nll_denoised.map(|d| d.stderr)),
        );
        println!("{} K={k} nll={:.4} ± {:.4}", e.name, r.nll_mean, r.nll_stderr);
        rows.push(SimulateRow {
            schedule: e.name.clone(),
            steps: k,
            report: r,
        });
    }
    run.write("simulate.csv", &csv)?;
    run.write_json("simulate.json", &rows)
}

fn order_label(o: SamplerOrder) -> &'static str {
    match o {
        SamplerOrder::First => "first",
        SamplerOrder::Second => "second",
    }
}

/// Returns whether every check passed.
pub fn cmd_verify(args: &VerifyArgs, run: &mut Run) -> CliResult<bool> {
    let suite: Suite = args
        .suite
        .parse()
        .map_err(|e: lasched::Error| Failure::config(e.to_string()))?;
    let target = args.target.as_deref().map(|t| load_target(t, None)).transpose()?;
    let report = run.stage(&format!("verify {suite}"), |_| {
        Ok(run_suite(
            suite,
            target.as_ref(),
            stage_seed(args.common.seed, "verify"),
        )?)
    })?;
    for c in &report.checks {
        println!(
            "{} {} cases={} failures={} worst={:.3e} tol={:.3e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.cases,
            c.failures,
            c.worst,
            c.tolerance
        );
    }
    run.write_json("verify.json", &report)?;
    Ok(report.passed)
}

pub fn cmd_mmse_table(args: &MmseTableArgs, run: &mut Run) -> CliResult<()> {
    let (lo, hi) = check_endpoints(args.endpoints)?;
    if args.points == 0 {
        return Err(Failure::config("--points must be positive"));
    }
    let dist = run.stage("load", |run| {
        let dist = load_target(&args.target.target, Some(&args.target))?;
        run.write("target.json", &(dist.to_json() + "\n"))?;
        Ok(dist)
    })?;
    let p = policy(&dist, args.oracle, stage_seed(args.common.seed, "mmse-table"));
    run.stage("tabulate", |run| {
        let curve = MmseCurve::new(dist, p)?.tabulate(&log_spaced(lo, hi, args.points))?;
        run.write("mmse.csv", &curve.to_csv())
    })
}
