//! Command-line front end. Every command echoes its resolved configuration
//! to `config.resolved.toml` in the output directory.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::calibration::{estimate_lambda, knee_point, sweep_penalties, write_sweep_csv, Knee, SweepRow};
use crate::config::{read_results, ExperimentConfig};
use crate::engine::{
    check_equilibrium, compare_leadership, run_games, run_phases, seed_results, write_trace_csv,
    EquilibriumReport, GameTrace, ViolationSummary,
};
use crate::error::{Error, Result};
use crate::frontier::{pareto_filter, write_frontier_csv, Strategy};
use crate::metrics::{demographic_disparity, gamma_dem_parity_check, read_predictions_csv};

#[derive(Debug, Parser)]
#[command(name = "specgame", version, about = "Simulate specification games between a model builder and regulators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the seeding oracle on its grid and write the frontier CSV.
    GenFrontier(CommonArgs),
    /// Play one game per initial spec.
    Run(CommonArgs),
    /// Play the penalty phase schedule per initial spec.
    Phases(CommonArgs),
    /// Sweep the penalty-scalar grids.
    Sweep(CommonArgs),
    /// Compare regulator-led and builder-led games.
    CompareLeadership(CommonArgs),
    /// Estimate the builder's private penalty weight from calibrated points.
    CalibrateLambda(CommonArgs),
    /// Run the games and probe their converged points for profitable deviations.
    CheckEquilibrium(CommonArgs),
    /// Demographic disparity of a prediction table.
    Metrics(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Configuration file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Named preset applied beneath the configuration file.
    #[arg(long)]
    pub preset: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub quiet: bool,
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::GenFrontier(a)
            | Command::Run(a)
            | Command::Phases(a)
            | Command::Sweep(a)
            | Command::CompareLeadership(a)
            | Command::CalibrateLambda(a)
            | Command::CheckEquilibrium(a)
            | Command::Metrics(a) => a,
        }
    }
}

/// Maps an outcome to the process exit code.
pub fn exit_code(result: &Result<()>) -> i32 {
    match result {
        Ok(()) => 0,
        Err(e) if e.is_validation() => 2,
        Err(_) => 3,
    }
}

struct Context {
    cfg: ExperimentConfig,
    out: PathBuf,
    hash: String,
    quiet: bool,
}

impl Context {
    fn new(args: &CommonArgs) -> Result<Self> {
        let mut cfg = match &args.config {
            Some(path) => ExperimentConfig::from_file(path, args.preset.as_deref())?,
            None => ExperimentConfig::load(None, args.preset.as_deref(), Path::new("."))?,
        };
        if let Some(seed) = args.seed {
            cfg.seed = seed;
        }
        let out = args
            .out
            .clone()
            .or_else(|| cfg.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&out)?;
        let echoed = cfg.to_toml()?;
        let hash = Sha256::digest(echoed.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        std::fs::write(out.join("config.resolved.toml"), echoed)?;
        Ok(Self {
            cfg,
            out,
            hash,
            quiet: args.quiet,
        })
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.out.join(name))?))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.into()))?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let ctx = Context::new(cli.command.args())?;
    match cli.command {
        Command::GenFrontier(_) => gen_frontier(&ctx),
        Command::Run(_) => run_cmd(&ctx),
        Command::Phases(_) => phases_cmd(&ctx),
        Command::Sweep(_) => sweep_cmd(&ctx),
        Command::CompareLeadership(_) => leadership_cmd(&ctx),
        Command::CalibrateLambda(_) => lambda_cmd(&ctx),
        Command::CheckEquilibrium(_) => equilibrium_cmd(&ctx),
        Command::Metrics(_) => metrics_cmd(&ctx),
    }
}

fn gen_frontier(ctx: &Context) -> Result<()> {
    let game = ctx.cfg.game_config()?;
    let results = seed_results(&game)?;
    let mut w = ctx.create("frontier.csv")?;
    write_frontier_csv(results.points(), &mut w)?;
    w.flush()?;
    ctx.note(format!("wrote {} points to {}", results.len(), ctx.out.join("frontier.csv").display()));
    Ok(())
}

#[derive(Serialize)]
struct RunSummary {
    target: Strategy,
    converged: bool,
    rounds: usize,
    final_strategy: Strategy,
    violation: ViolationSummary,
    /// Absent when the run did not converge.
    equilibrium: Option<EquilibriumReport>,
}

fn summarize(ctx: &Context, trace: &GameTrace) -> Result<RunSummary> {
    let equilibrium = if trace.converged {
        let frontier = pareto_filter(&trace.results, &frontier_settings(ctx)?)?;
        Some(check_equilibrium(trace, &frontier, &ctx.cfg.equilibrium_settings())?)
    } else {
        None
    };
    Ok(RunSummary {
        target: trace.settings.target,
        converged: trace.converged,
        rounds: trace.last().round,
        final_strategy: trace.final_strategy,
        violation: trace.violation,
        equilibrium,
    })
}

fn frontier_settings(ctx: &Context) -> Result<crate::frontier::FrontierSettings> {
    Ok(ctx.cfg.game_config()?.frontier_settings())
}

#[derive(Serialize)]
struct Summary<'a, T> {
    command: &'a str,
    config_sha256: &'a str,
    runs: Vec<T>,
}

fn write_trace(ctx: &Context, name: &str, trace: &GameTrace) -> Result<()> {
    let mut w = ctx.create(name)?;
    write_trace_csv(trace, &mut w)?;
    w.flush()?;
    Ok(())
}

fn run_cmd(ctx: &Context) -> Result<()> {
    let game = ctx.cfg.game_config()?;
    let traces = run_games(&game)?;
    let mut runs = Vec::new();
    for (i, trace) in traces.iter().enumerate() {
        write_trace(ctx, &format!("trace_spec{i}.csv"), trace)?;
        let s = summarize(ctx, trace)?;
        ctx.note(format!(
            "spec {i}: converged={} rounds={} violation fair={:.6} priv={:.6}",
            s.converged, s.rounds, s.violation.fairness, s.violation.privacy
        ));
        runs.push(s);
    }
    ctx.write_json(
        "summary.json",
        &Summary {
            command: "run",
            config_sha256: &ctx.hash,
            runs,
        },
    )
}

#[derive(Serialize)]
struct PhaseSummary {
    target: Strategy,
    phases: Vec<PhaseEntry>,
}

#[derive(Serialize)]
struct PhaseEntry {
    c_fair: f64,
    c_priv: f64,
    converged: bool,
    rounds: usize,
    final_strategy: Strategy,
    violation: ViolationSummary,
}

fn phases_cmd(ctx: &Context) -> Result<()> {
    let game = ctx.cfg.game_config()?;
    let mut runs = Vec::new();
    for (i, &target) in game.initial_specs.iter().enumerate() {
        let traces = run_phases(&game, target)?;
        let mut phases = Vec::new();
        for (k, (trace, &[c_fair, c_priv])) in traces.iter().zip(&game.phases).enumerate() {
            write_trace(ctx, &format!("trace_phase{k}_spec{i}.csv"), trace)?;
            phases.push(PhaseEntry {
                c_fair,
                c_priv,
                converged: trace.converged,
                rounds: trace.last().round,
                final_strategy: trace.final_strategy,
                violation: trace.violation,
            });
        }
        let last = phases.last().expect("schedule is nonempty");
        ctx.note(format!(
            "spec {i}: final violation fair={:.6} priv={:.6}",
            last.violation.fairness, last.violation.privacy
        ));
        runs.push(PhaseSummary { target, phases });
    }
    ctx.write_json(
        "summary.json",
        &Summary {
            command: "phases",
            config_sha256: &ctx.hash,
            runs,
        },
    )
}

#[derive(Serialize)]
struct KneeEntry {
    fixed: &'static str,
    fixed_value: f64,
    varied: &'static str,
    knee: Option<Knee>,
}

fn sweep_cmd(ctx: &Context) -> Result<()> {
    let game = ctx.cfg.game_config()?;
    let sweep = &ctx.cfg.sweep;
    let rows = sweep_penalties(&game, &sweep.c_fair, &sweep.c_priv)?;
    let mut w = ctx.create("sweep.csv")?;
    write_sweep_csv(&rows, &mut w)?;
    w.flush()?;

    let curve = |pick: &dyn Fn(&SweepRow) -> Option<(f64, f64)>| -> Option<Knee> {
        let pts: Vec<(f64, f64)> = rows.iter().filter_map(pick).collect();
        knee_point(&pts).ok()
    };
    let mut knees = Vec::new();
    for &cf in &sweep.c_fair {
        knees.push(KneeEntry {
            fixed: "c_fair",
            fixed_value: cf,
            varied: "c_priv",
            knee: curve(&|r| (r.c_fair == cf).then_some((r.c_priv, r.mean_priv_violation))),
        });
    }
    for &cp in &sweep.c_priv {
        knees.push(KneeEntry {
            fixed: "c_priv",
            fixed_value: cp,
            varied: "c_fair",
            knee: curve(&|r| (r.c_priv == cp).then_some((r.c_fair, r.mean_fair_violation))),
        });
    }
    ctx.note(format!("wrote {} sweep rows", rows.len()));
    ctx.write_json(
        "knee.json",
        &Summary {
            command: "sweep",
            config_sha256: &ctx.hash,
            runs: knees,
        },
    )
}

fn leadership_cmd(ctx: &Context) -> Result<()> {
    let game = ctx.cfg.game_config()?;
    let summary = compare_leadership(&game)?;
    let mut w = csv::Writer::from_writer(ctx.create("leadership.csv")?);
    let arms = ["reg", "build"];
    let fields = ["acc", "cov", "gamma_ach", "eps_ach", "loss_builder", "converged"];
    let mut header = vec!["gamma0".to_string(), "epsilon0".to_string()];
    for arm in arms {
        header.extend(fields.iter().map(|f| format!("{arm}_{f}")));
    }
    w.write_record(&header)?;
    for row in &summary.rows {
        let mut rec = vec![row.target.fairness_param.to_string(), row.target.privacy_param.to_string()];
        for o in [&row.regulator_led, &row.builder_led] {
            rec.extend([
                o.accuracy.to_string(),
                o.coverage.to_string(),
                o.disparity.to_string(),
                o.epsilon.to_string(),
                o.builder_loss.to_string(),
                o.converged.to_string(),
            ]);
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    let [acc, cov, disp, eps, loss] = summary.mean_difference;
    ctx.note(format!(
        "builder-led minus regulator-led: acc {acc:+.4} cov {cov:+.4} disparity {disp:+.4} epsilon {eps:+.4} builder loss {loss:+.6}"
    ));
    ctx.write_json(
        "leadership.json",
        &Summary {
            command: "compare-leadership",
            config_sha256: &ctx.hash,
            runs: vec![summary],
        },
    )
}

#[derive(Serialize)]
struct LambdaReport<'a> {
    config_sha256: &'a str,
    which: crate::calibration::LambdaTarget,
    c: f64,
    lambda_hat: f64,
    n_points: usize,
}

fn lambda_cmd(ctx: &Context) -> Result<()> {
    let game = ctx.cfg.game_config()?;
    let l = &ctx.cfg.lambda;
    let results = match &l.results {
        Some(path) => read_results(path)?,
        None => seed_results(&game)?,
    };
    let lambda_hat = estimate_lambda(
        &results,
        l.c,
        &ctx.cfg.binning(),
        l.which,
        &game.frontier_settings().objectives,
        Strategy::new(l.targets[0], l.targets[1]),
    )?;
    println!("{lambda_hat:.4}");
    ctx.write_json(
        "lambda.json",
        &LambdaReport {
            config_sha256: &ctx.hash,
            which: l.which,
            c: l.c,
            lambda_hat,
            n_points: results.len(),
        },
    )
}

#[derive(Serialize)]
struct EquilibriumEntry {
    target: Strategy,
    converged: bool,
    report: Option<EquilibriumReport>,
}

fn equilibrium_cmd(ctx: &Context) -> Result<()> {
    let game = ctx.cfg.game_config()?;
    let traces = run_games(&game)?;
    let mut runs = Vec::new();
    for (i, trace) in traces.iter().enumerate() {
        let s = summarize(ctx, trace)?;
        match &s.equilibrium {
            Some(r) => ctx.note(format!(
                "spec {i}: verified={} max improvement builder={:.2e} fair={:.2e} priv={:.2e}",
                r.verified, r.builder_improvement, r.fairness_improvement, r.privacy_improvement
            )),
            None => ctx.note(format!("spec {i}: not converged")),
        }
        runs.push(EquilibriumEntry {
            target: s.target,
            converged: s.converged,
            report: s.equilibrium,
        });
    }
    ctx.write_json(
        "equilibrium.json",
        &Summary {
            command: "check-equilibrium",
            config_sha256: &ctx.hash,
            runs,
        },
    )
}

#[derive(Serialize)]
struct MetricsReport<'a> {
    config_sha256: &'a str,
    n_records: usize,
    max_signed: f64,
    max_abs_gap: f64,
    gamma: f64,
    gamma_dem_parity: bool,
}

fn metrics_cmd(ctx: &Context) -> Result<()> {
    let m = &ctx.cfg.metrics;
    let path = m
        .predictions
        .as_ref()
        .ok_or_else(|| Error::Invalid("metrics.predictions: no prediction table configured".into()))?;
    let file = File::open(path).map_err(|e| Error::Invalid(format!("cannot open {}: {e}", path.display())))?;
    let records = read_predictions_csv(std::io::BufReader::new(file))?;
    let report = demographic_disparity(&records, m.n_classes, m.n_groups)?;
    let mut w = csv::Writer::from_writer(ctx.create("disparity.csv")?);
    w.write_record(["subgroup", "class", "disparity"])?;
    for (z, row) in report.matrix.iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            w.write_record([z.to_string(), k.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    let parity = gamma_dem_parity_check(&report.matrix, m.gamma);
    ctx.note(format!(
        "max disparity {:.6} (abs {:.6}); {}-demographic parity: {parity}",
        report.max_signed, report.max_abs_gap, m.gamma
    ));
    ctx.write_json(
        "metrics.json",
        &MetricsReport {
            config_sha256: &ctx.hash,
            n_records: records.len(),
            max_signed: report.max_signed,
            max_abs_gap: report.max_abs_gap,
            gamma: m.gamma,
            gamma_dem_parity: parity,
        },
    )
}
