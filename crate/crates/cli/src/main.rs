//! `icm`: density estimation by information-complexity minimization on
//! finite sample spaces, and verification of its finite-sample
//! guarantees.
//!
//! Exit codes: 0 on success (all verified bounds hold), 1 when a verified
//! bound is violated, 2 on usage or input errors. All randomness flows
//! from `--seed`; identical invocations produce byte-identical output.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use icm_core::bounds::{verify, BoundSpec, Verdict, VerifyMode};
use icm_core::complexity::{
    bayesian_resolvability, critical_prior_mass_radius, index_of_resolvability,
    localized_entropy_term, prior_mass_resolvability_bound,
};
use icm_core::divergence::{hellinger_sq, kl, renyi_divergence, rho_divergence};
use icm_core::estimator::{gibbs_posterior, mdl_objective, mdl_select, FeasibleSet};
use icm_core::experiments::{
    run_counterexample, run_parametric_rate_demo, run_sweep, CounterexampleConfig,
};
use icm_core::io::{parse_cover, parse_dataset, parse_family, LoadedFamily};
use icm_core::report::{emit_report, format_value};
use icm_core::rng::RngSpec;

#[derive(Parser)]
#[command(
    name = "icm",
    version,
    about = "Density estimation by information-complexity minimization, with a bound verifier"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a divergence between densities from a family file.
    Divergence {
        /// Family file (JSON).
        #[arg(long)]
        family: PathBuf,
        /// One of: kl, rho, renyi, hellinger.
        #[arg(long)]
        kind: String,
        /// Order parameter in (0,1); required for rho and renyi.
        #[arg(long)]
        rho: Option<f64>,
        /// Source density: a model id, or "truth".
        #[arg(long)]
        from: String,
        /// Target density: a model id.
        #[arg(long)]
        to: String,
    },
    /// Two-part-code model selection; prints the chosen id and objective.
    FitMdl {
        #[arg(long)]
        family: PathBuf,
        /// Dataset file (JSON).
        #[arg(long)]
        data: PathBuf,
        /// Model-description penalty weight.
        #[arg(long)]
        lambda: f64,
    },
    /// Tempered posterior weights; prints (id, mass) pairs as CSV.
    FitGibbs {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Likelihood temper exponent.
        #[arg(long)]
        gamma: f64,
    },
    /// Resolvability and radius functionals of a family around its truth.
    Resolvability {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        n: usize,
        /// Print only the best-single-model index.
        #[arg(long)]
        index: bool,
        /// Print only the posterior-averaged resolvability.
        #[arg(long)]
        bayesian: bool,
        /// Print only the prior-mass bound.
        #[arg(long)]
        prior_mass: bool,
        /// Print only the critical prior-mass radius.
        #[arg(long)]
        critical: bool,
        /// Also print the localized entropy of model --k at order --rho.
        #[arg(long)]
        localized: bool,
        #[arg(long)]
        rho: Option<f64>,
        /// Model index for the localized entropy.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Verify one bound and emit a one-row report CSV.
    Verify {
        #[arg(long)]
        family: PathBuf,
        /// Bound id, e.g. cor3.2, thm5.1, thm4.2, lemmaA.1.
        #[arg(long)]
        bound: String,
        /// Estimator: mdl or gibbs (aliases like thm4.1 pin it).
        #[arg(long)]
        estimator: Option<String>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        /// Cover file (JSON) for cover-based bounds.
        #[arg(long)]
        cover: Option<PathBuf>,
        /// Monte Carlo replicates.
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        /// Force exact dataset enumeration (errors above the cap).
        #[arg(long)]
        exact: bool,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Slow-convergence experiment for standard two-part-code selection.
    Counterexample {
        #[arg(long)]
        n: usize,
        /// Half-space size; the sample space has 2m points.
        #[arg(long)]
        m: usize,
        #[arg(long)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bernoulli-net comparison of global and localized entropy.
    RateDemo {
        /// Comma-separated sample sizes, e.g. 64,256,1024,4096.
        #[arg(long)]
        ns: String,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        reps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify several bounds over a parameter grid.
    Sweep {
        #[arg(long)]
        family: PathBuf,
        /// Comma-separated bound ids.
        #[arg(long)]
        bounds: String,
        /// Grid file (JSON) with axes lambda, rho, gamma, alpha, t, delta, n.
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_family(path: &Path) -> Result<LoadedFamily> {
    parse_family(&read(path)?).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn parse_estimator(token: &str) -> Result<FeasibleSet> {
    match token {
        "mdl" => Ok(FeasibleSet::PointMasses),
        "gibbs" => Ok(FeasibleSet::FullSimplex),
        other => bail!("unknown estimator `{other}` (expected mdl or gibbs)"),
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Divergence {
            family,
            kind,
            rho,
            from,
            to,
        } => {
            let loaded = load_family(&family)?;
            let source = if from == "truth" {
                loaded.require_truth()?.clone()
            } else {
                let idx = loaded
                    .index_of(&from)
                    .ok_or_else(|| anyhow!("no model with id `{from}`"))?;
                loaded.family.model(idx).clone()
            };
            let idx = loaded
                .index_of(&to)
                .ok_or_else(|| anyhow!("no model with id `{to}`"))?;
            let target = loaded.family.model(idx);
            let need_rho = || rho.ok_or_else(|| anyhow!("--rho is required for kind `{kind}`"));
            let value = match kind.as_str() {
                "kl" => kl(&source, target),
                "rho" => rho_divergence(&source, target, need_rho()?)?,
                "renyi" => renyi_divergence(&source, target, need_rho()?)?,
                "hellinger" => hellinger_sq(&source, target),
                other => bail!("unknown divergence kind `{other}`"),
            };
            println!("{}", format_value(value));
            Ok(0)
        }
        Command::FitMdl {
            family,
            data,
            lambda,
        } => {
            let loaded = load_family(&family)?;
            let dataset = parse_dataset(&read(&data)?, loaded.family.space())?;
            let k = mdl_select(&loaded.family, &dataset, lambda)?;
            let objective = mdl_objective(&loaded.family, k, &dataset, lambda);
            print!(
                "id,objective\n{},{}\n",
                loaded.ids[k],
                format_value(objective)
            );
            Ok(0)
        }
        Command::FitGibbs {
            family,
            data,
            gamma,
        } => {
            let loaded = load_family(&family)?;
            let dataset = parse_dataset(&read(&data)?, loaded.family.space())?;
            let post = gibbs_posterior(&loaded.family, &dataset, gamma)?;
            let mut out = String::from("id,mass\n");
            for (id, &mass) in loaded.ids.iter().zip(post.mu()) {
                out.push_str(&format!("{id},{}\n", format_value(mass)));
            }
            print!("{out}");
            Ok(0)
        }
        Command::Resolvability {
            family,
            lambda,
            n,
            index,
            bayesian,
            prior_mass,
            critical,
            localized,
            rho,
            k,
        } => {
            let loaded = load_family(&family)?;
            let q = loaded.require_truth()?;
            let fam = &loaded.family;
            let all = !(index || bayesian || prior_mass || critical);
            let mut out = String::from("kind,value\n");
            if all || index {
                let v = index_of_resolvability(fam, q, lambda, n);
                out.push_str(&format!("index,{}\n", format_value(v)));
            }
            if all || bayesian {
                let (v, _) = bayesian_resolvability(fam, q, lambda, n)?;
                out.push_str(&format!("bayesian,{}\n", format_value(v)));
            }
            if all || prior_mass {
                let v = prior_mass_resolvability_bound(fam, q, lambda, n)?;
                out.push_str(&format!("prior-mass,{}\n", format_value(v)));
            }
            if all || critical {
                let r = critical_prior_mass_radius(fam, q, lambda, n)?;
                out.push_str(&format!("critical,{}\n", format_value(r.value)));
                out.push_str(&format!(
                    "critical-breakpoint,{}\n",
                    format_value(r.achieved_at)
                ));
            }
            if localized {
                let rho = rho.ok_or_else(|| anyhow!("--localized requires --rho"))?;
                let k = k.ok_or_else(|| anyhow!("--localized requires --k"))?;
                if k >= fam.len() {
                    bail!("--k {k} out of range for {} models", fam.len());
                }
                let v = localized_entropy_term(fam, q, rho, n, k, 0.5)?;
                out.push_str(&format!("localized,{}\n", format_value(v)));
            }
            print!("{out}");
            Ok(0)
        }
        Command::Verify {
            family,
            bound,
            estimator,
            lambda,
            rho,
            gamma,
            alpha,
            beta,
            n,
            t,
            delta,
            cover,
            reps,
            seed,
            exact,
            out,
        } => {
            let loaded = load_family(&family)?;
            let q = loaded.require_truth()?;
            let mut spec = BoundSpec::from_token(&bound, n)?;
            if let Some(est) = estimator {
                spec.feasible = parse_estimator(&est)?;
            }
            spec.lambda = lambda;
            spec.rho = rho;
            spec.gamma = gamma;
            spec.alpha = alpha;
            spec.beta = beta;
            spec.t = t;
            spec.delta = delta;
            if let Some(cover_path) = cover {
                spec.cover = Some(parse_cover(&read(&cover_path)?, loaded.family.len())?);
            }
            let force = exact.then_some(VerifyMode::Exact);
            let report = verify(&spec, &loaded.family, q, reps, RngSpec::new(seed, 0), force)?;
            let violated = report.verdict == Verdict::Violated;
            write_output(&out, &emit_report(&[report]))?;
            Ok(if violated { 1 } else { 0 })
        }
        Command::Counterexample {
            n,
            m,
            reps,
            seed,
            out,
        } => {
            let report = run_counterexample(&CounterexampleConfig {
                n,
                m,
                replicates: reps,
                rng: RngSpec::new(seed, 0),
            })?;
            let mut content = String::from(
                "n,m,replicates,empirical_prob,se,prob_bound,resolvability,feasibility_ratio\n",
            );
            content.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                report.n,
                report.m,
                report.replicates,
                format_value(report.empirical_prob),
                format_value(report.se),
                format_value(report.prob_bound),
                format_value(report.resolvability),
                format_value(report.feasibility_ratio),
            ));
            write_output(&out, &content)?;
            Ok(0)
        }
        Command::RateDemo {
            ns,
            seed,
            reps,
            out,
        } => {
            let ns: Vec<usize> = ns
                .split(',')
                .map(|s| s.trim().parse::<usize>().context("parsing --ns"))
                .collect::<Result<_>>()?;
            let rows = run_parametric_rate_demo(&ns, reps, RngSpec::new(seed, 0))?;
            let mut content = String::from(
                "n,net_size,truth_index,global_entropy,localized_entropy,risk_mean,risk_se,quad_ratio_lower,quad_ratio_upper\n",
            );
            for r in rows {
                content.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    r.n,
                    r.net_size,
                    r.truth_index,
                    format_value(r.global_entropy),
                    format_value(r.localized_entropy),
                    format_value(r.risk_mean),
                    format_value(r.risk_se),
                    format_value(r.quad_ratio_lower),
                    format_value(r.quad_ratio_upper),
                ));
            }
            write_output(&out, &content)?;
            Ok(0)
        }
        Command::Sweep {
            family,
            bounds,
            grid,
            seed,
            reps,
            out,
        } => {
            let loaded = load_family(&family)?;
            let q = loaded.require_truth()?;
            let tokens: Vec<String> = bounds.split(',').map(|s| s.trim().to_string()).collect();
            let grid = icm_core::io::parse_grid(&read(&grid)?)?;
            let rows = run_sweep(
                &loaded.family,
                q,
                &tokens,
                &grid,
                reps,
                RngSpec::new(seed, 0),
            )?;
            let violated = rows.iter().any(|r| r.verdict == Verdict::Violated);
            write_output(&out, &emit_report(&rows))?;
            Ok(if violated { 1 } else { 0 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
