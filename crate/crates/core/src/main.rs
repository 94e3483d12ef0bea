use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use obliq::analytic::{closed_form_checks, AnalyticParams};
use obliq::bound::{verify_ratio_lattice, verify_ratio_with, VerifyOptions};
use obliq::hardness::{optimal_adaptive_value, ranking_exact_value, DpOptions, HardFamily};
use obliq::opt::{constraint_generation, export_qcqp, perturb, CgOptions, Heuristic, HeuristicOptions, QcqpModel};
use obliq::ranking::{simulate, Instance};
use obliq::report::{write_csv_rows, Metadata, Report, RunManifest};
use obliq::selftest::run_selftest;
use obliq::stepfn::GhPair;
use obliq::{Error, Result};

#[derive(Parser)]
#[command(name = "obliq", version, about = "Competitive-ratio certificates and hardness bounds for Quadratic Ranking")]
struct Cli {
    /// Worker threads for parallel stages.
    #[arg(long, global = true, env = "OBLIQ_WORKERS", default_value_t = 1)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Engine {
    Exhaustive,
    Lattice,
}

#[derive(Subcommand)]
enum Command {
    /// Certify the competitive ratio of a step-function pair.
    Verify {
        #[arg(long)]
        gh: PathBuf,
        /// Scale H down to restore the budget constraint when rounding broke it.
        #[arg(long)]
        repair: bool,
        #[arg(long)]
        no_prune: bool,
        #[arg(long, value_enum, default_value_t = Engine::Exhaustive)]
        engine: Engine,
        /// Exit with status 1 if the certified ratio is below this value.
        #[arg(long)]
        min: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Search for a good step-function pair by constraint generation.
    Optimize {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        rounds: usize,
        /// Starting pair; the default is a constant pair.
        #[arg(long)]
        start: Option<PathBuf>,
        /// Shift every starting coordinate by up to this amount.
        #[arg(long)]
        perturb: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the final relaxed program here.
        #[arg(long)]
        export: Option<PathBuf>,
        /// Best pair found, as gh JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Monte-Carlo runs of the algorithm on an instance.
    Simulate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        gh: PathBuf,
        #[arg(long)]
        repair: bool,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact value of the best adaptive strategy on a hard family.
    Hardness {
        /// warmup, h2..h6, hhat2..hhat4
        #[arg(long)]
        family: String,
        #[arg(long)]
        no_canon: bool,
        /// Also compute the exact value of Ranking.
        #[arg(long)]
        ranking: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Numeric checks of the closed-form analytic bound.
    Analytic {
        #[arg(long, default_value_t = AnalyticParams::default().a)]
        a: f64,
        #[arg(long, default_value_t = AnalyticParams::default().b)]
        b: f64,
        #[arg(long, default_value_t = AnalyticParams::default().c)]
        c: f64,
        #[arg(long, default_value_t = 1e-3)]
        grid: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write the initial relaxed program for `n` segments.
    ExportQcqp {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in example checks.
    Selftest,
}

enum Outcome {
    Pass,
    CheckFailed,
}

fn write_report<T: Serialize>(out: &Option<PathBuf>, manifest: RunManifest, result: T, started: SystemTime, t0: Instant) -> Result<()> {
    if let Some(path) = out {
        Report { manifest, result, metadata: Metadata::new(started, t0.elapsed()) }.write(path)?;
    }
    Ok(())
}

fn load_gh(path: &PathBuf, repair: bool) -> Result<GhPair> {
    let gh = GhPair::read_json_file(path)?;
    if !repair {
        return Ok(gh);
    }
    let (fixed, scale) = gh.with_budget_repair();
    if scale != 1.0 {
        println!("budget repair: H scaled by {scale:.9}");
    }
    Ok(fixed)
}

fn execute(cli: Cli) -> Result<Outcome> {
    let workers = cli.workers.max(1);
    let started = SystemTime::now();
    let t0 = Instant::now();
    match cli.command {
        Command::Verify { gh, repair, no_prune, engine, min, out, csv } => {
            let pair = load_gh(&gh, repair)?;
            let rep = match engine {
                Engine::Exhaustive => verify_ratio_with(&pair, VerifyOptions { workers, prune: !no_prune })?,
                Engine::Lattice => verify_ratio_lattice(&pair, workers)?,
            };
            println!("n = {}  ratio = {:.6}", pair.n(), rep.ratio);
            println!("argmin theta = {}  beta = {}", rep.argmin_theta, rep.argmin_beta);
            println!("pairs evaluated {}  pruned {}  ({:.3} s)", rep.pairs_evaluated, rep.pairs_pruned, rep.wall_time.as_secs_f64());
            let config = serde_json::json!({ "gh": gh, "repair": repair, "prune": !no_prune, "engine": engine, "min": min });
            let manifest = RunManifest::new("verify", config, workers)?.with_input(&gh)?;
            if let Some(path) = csv {
                let row = vec![
                    pair.n().to_string(),
                    rep.ratio.to_string(),
                    rep.pairs_evaluated.to_string(),
                    rep.pairs_pruned.to_string(),
                ];
                write_csv_rows(std::fs::File::create(path)?, &["n", "ratio", "pairs_evaluated", "pairs_pruned"], &[row])?;
            }
            let pass = min.map_or(true, |m| rep.ratio >= m);
            write_report(&out, manifest, rep, started, t0)?;
            Ok(if pass { Outcome::Pass } else { Outcome::CheckFailed })
        }
        Command::Optimize { n, rounds, start, perturb: amount, seed, export, out, report } => {
            let mut initial = match &start {
                Some(p) => Some(GhPair::read_json_file(p)?),
                None => None,
            };
            if let (Some(gh), Some(a)) = (&initial, amount) {
                initial = Some(perturb(gh, a, seed)?);
            }
            let mut solver = Heuristic { options: HeuristicOptions { seed, ..Default::default() }, last: None };
            let rep = constraint_generation(n, initial, &mut solver, &CgOptions { max_rounds: rounds, workers })?;
            for r in &rep.history {
                println!(
                    "round {:>2}: active {:>6}  claimed {:.6}  certified {:.6}  added {}",
                    r.round, r.active_pairs, r.claimed, r.certified, r.added
                );
            }
            println!("certified ratio {:.6}{}", rep.ratio, if rep.converged { "" } else { "  (round limit reached)" });
            println!("G = {:?}\nH = {:?}", rep.gh.g_values(), rep.gh.h_values());
            if let (Some(path), Some(model)) = (&export, &rep.model) {
                export_qcqp(model, path)?;
            }
            if let Some(path) = &out {
                std::fs::write(path, rep.gh.to_json()? + "\n")?;
            }
            let config = serde_json::json!({ "n": n, "rounds": rounds, "start": start, "perturb": amount });
            let mut manifest = RunManifest::new("optimize", config, workers)?.with_seed(seed);
            if let Some(p) = &start {
                manifest = manifest.with_input(p)?;
            }
            write_report(&report, manifest, &rep, started, t0)?;
            Ok(Outcome::Pass)
        }
        Command::Simulate { instance, gh, repair, samples, seed, out } => {
            let inst = Instance::from_json(&std::fs::read_to_string(&instance)?)?;
            let pair = load_gh(&gh, repair)?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::Solver(format!("thread pool: {e}")))?;
            let rep = pool.install(|| simulate(&inst, &pair, samples, seed))?;
            println!("mean weight {:.6} +- {:.6}  offline optimum {:.6}  ratio {:.6}", rep.mean_weight, rep.mean_weight_stderr, rep.offline_optimum, rep.ratio);
            for e in &rep.edges {
                println!("  edge ({}, {}): E[alpha_u + alpha_v] / w = {:.6} +- {:.6}", e.u, e.v, e.mean, e.stderr);
            }
            let ok = rep.invariants.ok();
            println!("invariants: {}", if ok { "ok" } else { "VIOLATED" });
            let config = serde_json::json!({ "instance": instance, "gh": gh, "repair": repair, "samples": samples });
            let manifest = RunManifest::new("simulate", config, workers)?.with_seed(seed).with_input(&instance)?.with_input(&gh)?;
            write_report(&out, manifest, rep, started, t0)?;
            Ok(if ok { Outcome::Pass } else { Outcome::CheckFailed })
        }
        Command::Hardness { family, no_canon, ranking, out, csv } => {
            let fam: HardFamily = family.parse()?;
            let opt = optimal_adaptive_value(fam, DpOptions { canonicalize: !no_canon, workers })?;
            println!("{} (ratio {})", opt.expected_matched, opt.ratio);
            println!("decimal {:.6}  embeddings {}  states {}", opt.ratio_f64(), opt.embeddings, opt.states);
            let mut rows = vec![vec![fam.to_string(), "optimal".into(), opt.ratio.to_string(), format!("{:.6}", opt.ratio_f64())]];
            let mut agree = true;
            let rank = if ranking {
                let r = ranking_exact_value(fam)?;
                agree = r.ratio == opt.ratio;
                println!("ranking {} (ratio {})  decimal {:.6}  {}", r.expected_matched, r.ratio, r.ratio_f64(), if agree { "equal" } else { "differs" });
                rows.push(vec![fam.to_string(), "ranking".into(), r.ratio.to_string(), format!("{:.6}", r.ratio_f64())]);
                Some(r)
            } else {
                None
            };
            if let Some(path) = csv {
                write_csv_rows(std::fs::File::create(path)?, &["family", "value", "ratio", "decimal"], &rows)?;
            }
            let config = serde_json::json!({ "family": fam.to_string(), "canonicalize": !no_canon, "ranking": ranking });
            let manifest = RunManifest::new("hardness", config, workers)?;
            write_report(&out, manifest, serde_json::json!({ "optimal": opt, "ranking": rank }), started, t0)?;
            Ok(if agree { Outcome::Pass } else { Outcome::CheckFailed })
        }
        Command::Analytic { a, b, c, grid, out, csv } => {
            let params = AnalyticParams { a, b, c };
            let rep = closed_form_checks(params, grid)?;
            for ch in &rep.checks {
                println!(
                    "{:<4} {:<40} {:>12.7} {} {:<10} (tol {:.0e})",
                    if ch.pass { "PASS" } else { "FAIL" },
                    ch.name,
                    ch.computed,
                    ch.relation,
                    ch.reference,
                    ch.tolerance
                );
            }
            if let Some(path) = csv {
                let rows: Vec<Vec<String>> = rep
                    .checks
                    .iter()
                    .map(|ch| {
                        vec![ch.name.clone(), ch.computed.to_string(), ch.relation.clone(), ch.reference.to_string(), ch.pass.to_string()]
                    })
                    .collect();
                write_csv_rows(std::fs::File::create(path)?, &["check", "computed", "relation", "reference", "pass"], &rows)?;
            }
            let pass = rep.all_pass();
            let manifest = RunManifest::new("analytic", serde_json::json!({ "params": params, "grid": grid }), workers)?;
            write_report(&out, manifest, rep, started, t0)?;
            Ok(if pass { Outcome::Pass } else { Outcome::CheckFailed })
        }
        Command::ExportQcqp { n, out } => {
            let model = QcqpModel::initial(n)?;
            export_qcqp(&model, &out)?;
            println!("{} variables, {} ratio constraints, {} budget constraints -> {}", model.variable_count(), model.active_count(), model.budget_count(), out.display());
            Ok(Outcome::Pass)
        }
        Command::Selftest => {
            let checks = run_selftest();
            for c in &checks {
                println!("{} {:<30} {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(if checks.iter().all(|c| c.pass) { Outcome::Pass } else { Outcome::CheckFailed })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
