use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use qwalk::analytics::{density_f, macro_site};
use qwalk::ensemble::{laplace_exact, laplace_monte_carlo};
use qwalk::{
    averaged_kernel, hydro_scan, ks_distance_to_limit, local_equilibrium_scan, CoinTag, Experiment,
    LaplaceExponent, PositionDistribution, Profile, RandomSource, SpinorState,
};

use crate::config::{Command, ExperimentConfig};
use crate::output::{render, Header, Table};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct Verdict {
    pub pass: bool,
    pub details: Value,
}

/// Everything a command produces, before anything touches the disk.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: Table,
    pub verdict: Verdict,
    /// Secondary tables, written next to the main output as `<stem>.<name>.<ext>`.
    pub extras: Vec<(String, Table)>,
}

pub fn load_profile(path: &Path) -> Result<Profile, CliError> {
    Ok(Profile::load(path)?)
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    match cfg.command {
        Command::Evolve => evolve(cfg),
        Command::Kernel => kernel(cfg),
        Command::Lln => lln(cfg),
        Command::LocalEq => local_eq(cfg),
        Command::Hydro => hydro(cfg),
        Command::Laplace => laplace(cfg),
    }
}

/// Runs the command and writes its outputs; returns the verdict.
pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let outcome = execute(cfg)?;
    let format = cfg.format();
    let header = header(cfg, &outcome.verdict);
    let main = render(&outcome.table, &header, format);
    match &cfg.output_path {
        None => print!("{main}"),
        Some(out) => {
            write(out, &main)?;
            for (name, table) in &outcome.extras {
                write(&sibling(out, name, format.extension()), &render(table, &header, format))?;
            }
        }
    }
    Ok(outcome)
}

pub fn header(cfg: &ExperimentConfig, verdict: &Verdict) -> Header {
    let mut config = serde_json::to_value(cfg).expect("config serializes");
    config["tolerances"] = json!(cfg.resolved_tolerances());
    config["output_format"] = json!(cfg.format());
    Header {
        version: qwalk::VERSION.to_string(),
        config,
        verdict: json!({ "pass": verdict.pass, "details": verdict.details }),
    }
}

/// `dir/out.csv` → `dir/out.<name>.csv`.
pub fn sibling(out: &Path, name: &str, ext: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    out.with_file_name(format!("{stem}.{name}.{ext}"))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn single_scale(cfg: &ExperimentConfig) -> u64 {
    scales(cfg)[0]
}

fn scales(cfg: &ExperimentConfig) -> &[u64] {
    cfg.n.as_ref().map(|s| s.as_slice()).expect("validated")
}

fn profile_at(cfg: &ExperimentConfig, path: &Option<PathBuf>) -> Result<Profile, CliError> {
    load_profile(&cfg.resolve(path.as_ref().expect("validated")))
}

fn source(cfg: &ExperimentConfig) -> RandomSource {
    RandomSource::new(cfg.seed, 0)
}

fn distribution_table(dist: &PositionDistribution) -> Table {
    let mut table = Table::new(&["site", "prob"]);
    for (site, p) in dist.iter().filter(|&(_, p)| p != 0.0) {
        table.push(vec![site.into(), p.into()]);
    }
    table
}

fn evolve(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let steps = cfg.steps.unwrap_or_else(|| single_scale(cfg));
    let coin: CoinTag = match &cfg.coin {
        Some(c) => c.parse().map_err(CliError::Config)?,
        None => CoinTag::Plus,
    };
    let state = SpinorState::from_localized(cfg.site.unwrap_or(0), coin).evolve(steps);
    let dist = state.position_distribution();
    Ok(Outcome {
        table: distribution_table(&dist),
        verdict: Verdict { pass: true, details: json!({ "total_probability": dist.total() }) },
        extras: Vec::new(),
    })
}

fn kernel(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let dist = averaged_kernel(single_scale(cfg));
    Ok(Outcome {
        table: distribution_table(&dist),
        verdict: Verdict { pass: true, details: json!({ "total_probability": dist.total() }) },
        extras: Vec::new(),
    })
}

fn lln(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let ns = scales(cfg);
    let mut table = Table::new(&["n", "ks"]);
    let mut values = Vec::with_capacity(ns.len());
    let mut last_kernel = None;
    for &n in ns {
        let q = averaged_kernel(n);
        let ks = ks_distance_to_limit(&q, n);
        table.push(vec![n.into(), ks.into()]);
        values.push(ks);
        last_kernel = Some((n, q));
    }
    let (n, q) = last_kernel.expect("at least two scales");
    // Sites of the right parity are two apart, so the pmf per unit of x is q·n/2.
    let mut density = Table::new(&["x", "rescaled_pmf", "f"]);
    for m in (-(n as i64)..=n as i64).step_by(2) {
        let x = m as f64 / n as f64;
        density.push(vec![x.into(), (q.prob(m) * n as f64 / 2.0).into(), density_f(x).into()]);
    }
    let ks_max = cfg.tolerance("ks_max");
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let last = *values.last().expect("nonempty");
    Ok(Outcome {
        table,
        verdict: Verdict {
            pass: decreasing && last <= ks_max,
            details: json!({ "strictly_decreasing": decreasing, "last": last, "ks_max": ks_max }),
        },
        extras: vec![("density".to_string(), density)],
    })
}

fn local_eq(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let profile = profile_at(cfg, &cfg.profile_path)?;
    let (t, x) = (cfg.t.expect("validated"), cfg.x.unwrap_or(0.0));
    let ns = scales(cfg);
    let report = local_equilibrium_scan(&profile, t, x, ns, cfg.replicas.expect("validated"), source(cfg))?;
    let mut table = Table::new(&["n", "site", "tv_rho", "stderr", "intensity_b", "rho", "tv_b", "tv_b_rho"]);
    for (i, &n) in ns.iter().enumerate() {
        table.push(vec![
            n.into(),
            macro_site(x, n).into(),
            report.metric_values[i].into(),
            report.stderrs[i].into(),
            report.aux["intensity_b"][i].into(),
            report.aux["rho"][i].into(),
            report.aux["tv_to_poisson_b"][i].into(),
            report.aux["tv_poisson_b_rho"][i].into(),
        ]);
    }
    let tv_max = cfg.tolerance("tv_max");
    Ok(Outcome {
        table,
        verdict: Verdict {
            pass: report.monotone_trend && report.last() <= tv_max,
            details: json!({ "report": report.verdict_json(), "tv_max": tv_max }),
        },
        extras: Vec::new(),
    })
}

fn hydro(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let profile = profile_at(cfg, &cfg.profile_path)?;
    let test_fn = profile_at(cfg, &cfg.test_fn_path)?;
    let t = cfg.t.expect("validated");
    let ns = scales(cfg);
    let report = hydro_scan(&profile, &test_fn, t, ns, cfg.replicas.expect("validated"), source(cfg))?;
    let mut table = Table::new(&[
        "n",
        "functional",
        "target",
        "abs_error",
        "stderr",
        "replica_sd",
        "exact_sd",
        "relative_error",
    ]);
    for (i, &n) in ns.iter().enumerate() {
        table.push(vec![
            n.into(),
            report.aux["mean"][i].into(),
            report.aux["target"][i].into(),
            report.metric_values[i].into(),
            report.stderrs[i].into(),
            report.aux["replica_sd"][i].into(),
            report.aux["exact_sd"][i].into(),
            report.aux["relative_error"][i].into(),
        ]);
    }
    let rel_tol = cfg.tolerance("relative_error");
    let abs_tol = cfg.tolerance("abs_error");
    let last = ns.len() - 1;
    let abs_err = report.metric_values[last];
    let rel_err = report.aux["relative_error"][last];
    // A vanishing target has no meaningful relative error; the absolute
    // tolerance covers it.
    let pass = abs_err <= abs_tol || (report.aux["target"][last] != 0.0 && rel_err <= rel_tol);
    Ok(Outcome {
        table,
        verdict: Verdict {
            pass,
            details: json!({
                "report": report.verdict_json(),
                "relative_error": rel_err,
                "abs_error": abs_err,
                "relative_error_max": rel_tol,
                "abs_error_max": abs_tol,
            }),
        },
        extras: Vec::new(),
    })
}

fn laplace(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let profile = profile_at(cfg, &cfg.profile_path)?;
    let (n, t) = (single_scale(cfg), cfg.t.expect("validated"));
    let lambda = LaplaceExponent::from_pairs(&cfg.lambda_pairs()?)?;
    let exact = laplace_exact(&profile, n, t, &lambda)?;
    let experiment = Experiment::new(&profile, n, t)?;
    let mc = laplace_monte_carlo(&experiment, &lambda, cfg.replicas.expect("validated"), source(cfg));
    let gap = (mc.mean - exact).abs();
    let z = if gap == 0.0 { 0.0 } else { gap / mc.std_err };
    let mut table = Table::new(&["n", "steps", "exact", "monte_carlo", "stderr", "gap", "z_score"]);
    table.push(vec![
        n.into(),
        experiment.steps().into(),
        exact.into(),
        mc.mean.into(),
        mc.std_err.into(),
        gap.into(),
        z.into(),
    ]);
    let z_max = cfg.tolerance("z_score");
    Ok(Outcome {
        table,
        verdict: Verdict { pass: z <= z_max, details: json!({ "z_score": z, "z_score_max": z_max }) },
        extras: Vec::new(),
    })
}
