use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use scengen::error::Error;
use scengen::pipeline::{
    cmd_fit, cmd_plot_data, cmd_sample, cmd_validate, FitConfig, ModelKind, DEFAULT_KS_MAX,
    DEFAULT_RANK_MAX,
};

/// Copula-based scenario generation for correlated uncertainty modeling.
#[derive(Parser)]
#[command(name = "scengen", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit marginals and a dependence model from a CSV time series.
    Fit {
        /// JSON fit configuration.
        #[arg(long)]
        config: PathBuf,
        /// Where to write the model bundle.
        #[arg(long, default_value = "model.json")]
        out: PathBuf,
    },
    /// Generate scenarios from a fitted model.
    Sample {
        /// Model bundle produced by `fit`.
        #[arg(long)]
        model: PathBuf,
        /// Number of scenarios.
        #[arg(long)]
        count: usize,
        /// Master seed; identical seeds give byte-identical output.
        #[arg(long)]
        seed: u64,
        /// Output scenario CSV.
        #[arg(long)]
        out: PathBuf,
        /// Sampling thread count (default: all cores). Output does not
        /// depend on this.
        #[arg(long)]
        threads: Option<usize>,
        /// Also write a copy with the bundle's power curves applied.
        #[arg(long)]
        power_out: Option<PathBuf>,
    },
    /// Validate a scenario CSV against the model that generated it.
    Validate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        scenarios: PathBuf,
        /// Maximum acceptable per-variable KS statistic.
        #[arg(long, default_value_t = DEFAULT_KS_MAX)]
        ks_max: f64,
        /// Maximum acceptable Spearman deviation.
        #[arg(long, default_value_t = DEFAULT_RANK_MAX)]
        rank_max: f64,
        /// Write the JSON report here as well as to stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Export (x, CDF(x)) pairs of one fitted marginal.
    PlotData {
        #[arg(long)]
        model: PathBuf,
        /// Variable name.
        #[arg(long = "var")]
        variable: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        _ => 3,
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Fit { config, out } => {
            let config = FitConfig::from_file(&config)?;
            let summary = cmd_fit(&config, &out)?;
            let kind = match summary.kind {
                ModelKind::Jnt => "jnt",
                ModelKind::Dvine => "dvine",
            };
            println!(
                "fitted {kind} model over {} variables ({}) from {} observations \
                 ({} rows dropped); psd_repaired={}; wrote {}",
                summary.variables.len(),
                summary.variables.join(", "),
                summary.n_obs,
                summary.dropped_rows,
                summary.psd_repaired,
                out.display()
            );
            Ok(0)
        }
        Command::Sample {
            model,
            count,
            seed,
            out,
            threads,
            power_out,
        } => {
            let summary = cmd_sample(&model, count, seed, &out, threads, power_out.as_deref())?;
            println!(
                "sampled {} scenarios x {} variables (seed {}) to {}",
                summary.count,
                summary.n_vars,
                summary.master_seed,
                out.display()
            );
            if let Some(p) = power_out {
                println!("power-curve copy written to {}", p.display());
            }
            Ok(0)
        }
        Command::Validate {
            model,
            scenarios,
            ks_max,
            rank_max,
            report,
        } => {
            let result = cmd_validate(&model, &scenarios, ks_max, rank_max)?;
            let json = result.to_json();
            if let Some(path) = &report {
                scengen::util::write_atomic(path, json.as_bytes())?;
            }
            println!("{json}");
            Ok(if result.passed { 0 } else { 1 })
        }
        Command::PlotData {
            model,
            variable,
            out,
        } => {
            cmd_plot_data(&model, &variable, &out)?;
            println!("wrote {}", out.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
