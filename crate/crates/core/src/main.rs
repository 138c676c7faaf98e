//! Command-line interface: simulate cohorts, fit models, compare the model
//! grid by WAIC, and export posterior summaries and coefficient curves.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use jointdisp::io::{
    export_curves, parse_dataset, parse_model_spec, read_chain, write_chain, write_curves,
    write_dataset, write_model_spec, write_states, write_summary, write_waic_table, WaicTableRow,
};
use jointdisp::sampler::{
    chain_diagnostics, param_names, potential_scale_reduction, run_chain, PosteriorChain,
};
use jointdisp::simulate::default_truth;
use jointdisp::{
    compute_waic, enumerate_models_from, simulate_dataset, Dataset, ModelSpec, SamplerConfig,
    SimulationConfig, VarianceModel,
};

#[derive(Parser)]
#[command(
    name = "jointdisp",
    about = "Bayesian joint dispersion models for longitudinal and survival data",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SamplerArgs {
    /// Random seed (chains beyond the first use seed+1, seed+2, ...).
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Total MCMC iterations per chain.
    #[arg(long, default_value_t = 500_000)]
    iters: usize,
    /// Burn-in iterations discarded from the front.
    #[arg(long, default_value_t = 250_000)]
    burnin: usize,
    /// Keep every thin-th post-burn-in iteration.
    #[arg(long, default_value_t = 25)]
    thin: usize,
}

impl SamplerArgs {
    fn config(&self, seed_offset: u64) -> SamplerConfig {
        SamplerConfig {
            iterations: self.iters,
            burn_in: self.burnin,
            thin: self.thin,
            seed: self.seed + seed_offset,
            ..SamplerConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort from a model spec with known parameters.
    Simulate {
        /// Model spec configuration file.
        #[arg(long)]
        spec: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Number of subjects.
        #[arg(long, default_value_t = 200)]
        n: usize,
        /// Administrative censoring time (years).
        #[arg(long, default_value_t = 5.0)]
        censor_time: f64,
        /// Comma-separated planned exam times.
        #[arg(long, default_value = "0,0.5,1,1.5,2,2.5")]
        schedule: String,
        /// Standard deviation of per-subject exam-time jitter.
        #[arg(long, default_value_t = 0.0)]
        jitter_sd: f64,
        /// Comma-separated covariate prevalences (sex, age50, prevoi).
        #[arg(long, default_value = "0.596,0.12,0.396")]
        prevalence: String,
        /// Mean of log sigma_i for EXCHANGEABLE truth.
        #[arg(long)]
        log_sigma_mean: Option<f64>,
        /// SD of log sigma_i for EXCHANGEABLE truth.
        #[arg(long)]
        log_sigma_sd: Option<f64>,
        /// Optional truth file (single-row draw format) overriding the
        /// built-in default parameters.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Fit one model to a dataset and persist the chains.
    Fit {
        #[arg(long)]
        spec: PathBuf,
        /// Longitudinal CSV (id,time_years,y_sqrt_cd4).
        #[arg(long)]
        long: PathBuf,
        /// Survival CSV (id,event_time_years,event,gender,age50,prevoi).
        #[arg(long)]
        surv: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Number of independent chains.
        #[arg(long, default_value_t = 1)]
        chains: usize,
        #[command(flatten)]
        sampler: SamplerArgs,
    },
    /// Fit the 33-model grid (or a subset) and emit the WAIC table.
    Compare {
        #[arg(long)]
        long: Option<PathBuf>,
        #[arg(long)]
        surv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated 1-based model indices (default: all 33).
        #[arg(long)]
        models: Option<String>,
        /// Spec file whose spline/prior settings seed every grid cell.
        #[arg(long)]
        template: Option<PathBuf>,
        /// List the model grid and exit without fitting.
        #[arg(long)]
        list: bool,
        #[command(flatten)]
        sampler: SamplerArgs,
    },
    /// Posterior means and 95% intervals from a fitted chain directory.
    Summarize {
        /// Chain directory written by `fit` (e.g. out/chain_0).
        #[arg(long)]
        fit: PathBuf,
        /// Output CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Posterior curves of the time-varying coefficients with 95% bands.
    Curves {
        /// Chain directory written by `fit`.
        #[arg(long)]
        fit: PathBuf,
        /// Number of grid points.
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Grid start (defaults to the link-spline domain).
        #[arg(long)]
        t_min: Option<f64>,
        /// Grid end.
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export a spline basis evaluation grid and its penalty matrix (for
    /// debugging and plotting).
    Basis {
        #[arg(long, default_value_t = 0.0)]
        t_min: f64,
        #[arg(long, default_value_t = 5.0)]
        t_max: f64,
        /// Number of knot intervals s (the basis has s + 3 functions).
        #[arg(long, default_value_t = 20)]
        intervals: usize,
        /// Evaluation grid size.
        #[arg(long, default_value_t = 201)]
        points: usize,
        /// Output directory for basis.csv and penalty.csv.
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_f64_list(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .with_context(|| format!("malformed {what} entry {tok:?}"))
        })
        .collect()
}

fn fit_one(
    data: &Dataset,
    spec: &ModelSpec,
    sampler: &SamplerArgs,
    chains: usize,
    out: &Path,
) -> Result<Vec<PosteriorChain>> {
    std::fs::create_dir_all(out)?;
    let mut fitted = Vec::with_capacity(chains);
    for c in 0..chains {
        let config = sampler.config(c as u64);
        let chain = run_chain(data, spec, &config)
            .with_context(|| format!("fitting {} (chain {c})", spec.label()))?;
        let dir = out.join(format!("chain_{c}"));
        write_chain(&chain, &dir)?;
        if let Ok(d) = chain_diagnostics(&chain) {
            let mut text = String::from("parameter,ess,degenerate\n");
            for p in &d.params {
                text.push_str(&format!("{},{},{}\n", p.name, p.ess, p.degenerate));
            }
            std::fs::write(dir.join("diagnostics.csv"), text)?;
        }
        eprintln!("wrote {}", dir.display());
        fitted.push(chain);
    }
    if chains > 1 {
        let names = param_names(&fitted[0].spec, fitted[0].n_subjects());
        let per_chain: Vec<Vec<Vec<f64>>> =
            fitted.iter().map(|c| c.flattened_rows().1).collect();
        let mut text = String::from("parameter,rhat\n");
        for (j, name) in names.iter().enumerate() {
            let series: Vec<Vec<f64>> = per_chain
                .iter()
                .map(|rows| rows.iter().map(|r| r[j]).collect())
                .collect();
            if let Ok(r) = potential_scale_reduction(&series) {
                text.push_str(&format!("{name},{r}\n"));
            }
        }
        std::fs::write(out.join("rhat.csv"), text)?;
    }
    Ok(fitted)
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate {
            spec,
            out,
            n,
            censor_time,
            schedule,
            jitter_sd,
            prevalence,
            log_sigma_mean,
            log_sigma_sd,
            truth,
            seed,
        } => {
            let spec = parse_model_spec(&spec)?;
            let prevalence = parse_f64_list(&prevalence, "prevalence")?;
            if prevalence.len() != 3 {
                bail!("--prevalence needs exactly three values");
            }
            let exchangeable = spec.variance_model == VarianceModel::Exchangeable;
            let exchangeable_log_sigma = if exchangeable {
                Some((
                    log_sigma_mean.unwrap_or_else(|| 2.0_f64.ln()),
                    log_sigma_sd.unwrap_or(0.5),
                ))
            } else {
                None
            };
            let config = SimulationConfig {
                n_subjects: n,
                exam_schedule: parse_f64_list(&schedule, "schedule")?,
                exam_jitter_sd: jitter_sd,
                censor_time,
                covariate_prevalence: [prevalence[0], prevalence[1], prevalence[2]],
                exchangeable_log_sigma,
                seed,
            };
            let truth_state = match truth {
                Some(path) => {
                    let states = jointdisp::io::read_draws(&path, &spec)?;
                    states
                        .into_iter()
                        .next()
                        .context("truth file has no rows")?
                }
                None => default_truth(&spec),
            };
            let (dataset, completed_truth) = simulate_dataset(&truth_state, &spec, &config)?;
            std::fs::create_dir_all(&out)?;
            write_dataset(
                &dataset,
                &out.join("longitudinal.csv"),
                &out.join("survival.csv"),
            )?;
            write_states(&[completed_truth], &spec, &out.join("truth.csv"))?;
            write_model_spec(&spec, &out.join("spec.cfg"))?;
            let events = dataset.subjects().iter().filter(|s| s.event()).count();
            eprintln!(
                "wrote {} ({} subjects, {} events, {} exams)",
                out.display(),
                dataset.len(),
                events,
                dataset.total_observations()
            );
        }
        Command::Fit {
            spec,
            long,
            surv,
            out,
            chains,
            sampler,
        } => {
            if chains == 0 {
                bail!("--chains must be at least 1");
            }
            let spec = parse_model_spec(&spec)?;
            let data = parse_dataset(&long, &surv)?;
            let fitted = fit_one(&data, &spec, &sampler, chains, &out)?;
            let rows: Vec<WaicTableRow> = fitted
                .iter()
                .enumerate()
                .map(|(c, chain)| {
                    Ok(WaicTableRow {
                        index: c,
                        variance_model: spec.variance_model.name().to_string(),
                        linking: spec.linking.name().to_string(),
                        baseline: spec.baseline.name().to_string(),
                        result: compute_waic(&chain.pointwise)?,
                    })
                })
                .collect::<Result<_>>()?;
            write_waic_table(&rows, &out.join("waic.csv"))?;
            eprintln!("wrote {}", out.join("waic.csv").display());
        }
        Command::Compare {
            long,
            surv,
            out,
            models,
            template,
            list,
            sampler,
        } => {
            let template_spec = match template {
                Some(path) => parse_model_spec(&path)?,
                None => ModelSpec::selected(),
            };
            let grid = enumerate_models_from(&template_spec);
            if list {
                for (k, spec) in grid.iter().enumerate() {
                    println!("{}\t{}", k + 1, spec.label());
                }
                return Ok(());
            }
            let (long, surv, out) = match (long, surv, out) {
                (Some(l), Some(s), Some(o)) => (l, s, o),
                _ => bail!("--long, --surv and --out are required unless --list is given"),
            };
            let chosen: Vec<usize> = match models {
                Some(text) => text
                    .split(',')
                    .map(|tok| -> Result<usize> {
                        let idx: usize = tok
                            .trim()
                            .parse()
                            .with_context(|| format!("malformed model index {tok:?}"))?;
                        if idx == 0 || idx > grid.len() {
                            bail!("model index {idx} outside 1..={}", grid.len());
                        }
                        Ok(idx - 1)
                    })
                    .collect::<Result<_>>()?,
                None => (0..grid.len()).collect(),
            };
            let data = parse_dataset(&long, &surv)?;
            std::fs::create_dir_all(&out)?;
            let mut rows = Vec::new();
            for idx in chosen {
                let spec = &grid[idx];
                let dir = out.join(format!("model_{:02}", idx + 1));
                let fitted = fit_one(&data, spec, &sampler, 1, &dir)?;
                let result = compute_waic(&fitted[0].pointwise)?;
                eprintln!(
                    "model {:02} {}: waic {:.2}",
                    idx + 1,
                    spec.label(),
                    result.waic
                );
                rows.push(WaicTableRow {
                    index: idx + 1,
                    variance_model: spec.variance_model.name().to_string(),
                    linking: spec.linking.name().to_string(),
                    baseline: spec.baseline.name().to_string(),
                    result,
                });
            }
            write_waic_table(&rows, &out.join("waic.csv"))?;
            eprintln!("wrote {}", out.join("waic.csv").display());
        }
        Command::Summarize { fit, out } => {
            let chain = read_chain(&fit)?;
            let rows = jointdisp::io::summarize(&chain)?;
            match out {
                Some(path) => {
                    write_summary(&rows, &path)?;
                    eprintln!("wrote {}", path.display());
                }
                None => {
                    println!("parameter,mean,lo2.5,hi97.5");
                    for r in rows {
                        println!("{},{},{},{}", r.parameter, r.mean, r.lo, r.hi);
                    }
                }
            }
        }
        Command::Basis {
            t_min,
            t_max,
            intervals,
            points,
            out,
        } => {
            if points < 2 {
                bail!("--points must be at least 2");
            }
            let basis = jointdisp::spline::SplineBasis::new(t_min, t_max, intervals)?;
            let q = basis.num_basis();
            std::fs::create_dir_all(&out)?;
            let mut text = String::from("t");
            for k in 1..=q {
                text.push_str(&format!(",b{k}"));
            }
            text.push('\n');
            for j in 0..points {
                let t = t_min + (t_max - t_min) * j as f64 / (points - 1) as f64;
                text.push_str(&jointdisp::io::fmt_float(t));
                for v in basis.eval(t)? {
                    text.push(',');
                    text.push_str(&jointdisp::io::fmt_float(v));
                }
                text.push('\n');
            }
            std::fs::write(out.join("basis.csv"), text)?;
            let penalty =
                jointdisp::spline::penalty_matrix(&jointdisp::spline::difference_matrix(q)?);
            let mut text = String::new();
            for r in 0..q {
                let row: Vec<String> = (0..q).map(|c| penalty.entry(r, c).to_string()).collect();
                text.push_str(&row.join(","));
                text.push('\n');
            }
            std::fs::write(out.join("penalty.csv"), text)?;
            eprintln!("wrote {}", out.display());
        }
        Command::Curves {
            fit,
            points,
            t_min,
            t_max,
            out,
        } => {
            if points < 2 {
                bail!("--points must be at least 2");
            }
            let chain = read_chain(&fit)?;
            let lo = t_min.unwrap_or(chain.spec.link_spline.t_min);
            let hi = t_max.unwrap_or(chain.spec.link_spline.t_max);
            if !(hi > lo) {
                bail!("grid needs t_max > t_min");
            }
            let grid: Vec<f64> = (0..points)
                .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
                .collect();
            let rows = export_curves(&chain, &grid)?;
            match out {
                Some(path) => {
                    write_curves(&rows, &path)?;
                    eprintln!("wrote {}", path.display());
                }
                None => {
                    println!("g,label,t,mean,lo2.5,hi97.5");
                    for r in rows {
                        println!("{},{},{},{},{},{}", r.g, r.label, r.t, r.mean, r.lo, r.hi);
                    }
                }
            }
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
