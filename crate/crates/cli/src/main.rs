use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dirate::quadrature::gauss_radau;
use dirate::relax::SdpInstance;
use dirate::sdp::{solve_with, SolverOptions};
use dirate::Error;

mod config;
mod run;

#[derive(Parser)]
#[command(
    name = "dirate",
    version,
    about = "Device-independent entropy and key-rate bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (sweep points, or quadrature nodes for a single point).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Progress and solver iterations on stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Gauss-Radau nodes and weights on [0, 1] as `t,w` lines.
    Quadrature {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Entropy or key-rate bounds for every point of a config, as CSV.
    Rate {
        #[arg(long)]
        config: PathBuf,
        /// Output file, overriding the config's; one file per quadrature
        /// size when several are given.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Validate the config and build one relaxation, without solving.
        #[arg(long)]
        dry_run: bool,
    },
    /// Affine min-tradeoff function of a config's bound, as JSON.
    Tradeoff {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated statistics to anchor at, in constraint order.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        anchor: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solves an SDP in the text format written by the relaxation dump.
    SolveSdp {
        file: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure with its exit code: 2 for bad input, 1 for solver trouble.
struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config { .. }
            | Error::Parse { .. }
            | Error::Json(_)
            | Error::BasisTooSmall { .. } => 2,
            _ => 1,
        };
        Failure(code, e.to_string())
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure(1, format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn per_m_path(out: &Path, m: usize) -> PathBuf {
    let stem = out
        .file_stem()
        .map_or("rate".into(), |s| s.to_string_lossy().into_owned());
    let ext = out
        .extension()
        .map_or("csv".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}_m{m}.{ext}"))
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Quadrature { m, out } => {
            let rule = gauss_radau::<f64>(m).map_err(|e| Failure(2, e.to_string()))?;
            let text: String = rule
                .iter()
                .map(|(t, w)| format!("{t:.16e},{w:.16e}\n"))
                .collect();
            emit(out.as_deref(), &text)
        }
        Command::Rate {
            config,
            out,
            dry_run,
        } => {
            let (cfg, hash) = config::load(&config)?;
            run::preflight(&cfg)?;
            if dry_run {
                return Ok(());
            }
            let workers = cli.workers.unwrap_or(cfg.solver.workers).max(1);
            let ms = cfg.quadrature.m.values();
            let out = out.or_else(|| cfg.output.clone());
            let mut failed = 0;
            for &m in &ms {
                let rows = run::sweep(&cfg, m, workers, cli.verbose)?;
                failed += rows.iter().filter(|r| !r.ok()).count();
                for r in &rows {
                    if let Err(e) = &r.result {
                        eprintln!("m={m} point {:?}: {e}", r.value);
                    }
                }
                let csv = run::render_csv(&cfg, &hash, m, &rows);
                let path = match (&out, ms.len()) {
                    (Some(p), 1) => Some(p.clone()),
                    (Some(p), _) => Some(per_m_path(p, m)),
                    (None, _) => None,
                };
                emit(path.as_deref(), &csv)?;
            }
            if failed > 0 {
                return Err(Failure(
                    1,
                    format!("{failed} point(s) without a certified bound"),
                ));
            }
            Ok(())
        }
        Command::Tradeoff {
            config,
            anchor,
            out,
        } => {
            let (cfg, _) = config::load(&config)?;
            run::preflight(&cfg)?;
            let workers = cli.workers.unwrap_or(cfg.solver.workers).max(1);
            let f = run::tradeoff(&cfg, anchor.as_deref(), workers)?;
            let json = serde_json::to_string_pretty(&f).map_err(Error::from)?;
            emit(out.as_deref(), &(json + "\n"))
        }
        Command::SolveSdp { file, tol, out } => {
            let text = std::fs::read_to_string(&file)
                .map_err(|e| Failure(2, format!("cannot read {}: {e}", file.display())))?;
            let inst = SdpInstance::parse(&text)?;
            let mut opts = SolverOptions::with_tol(tol);
            opts.verbose = cli.verbose;
            let sol = solve_with(&inst, &opts);
            let json = serde_json::json!({
                "status": run::status_name(sol.status),
                "primal": sol.primal,
                "dual": sol.dual,
                "gap": sol.gap,
                "primal_residual": sol.primal_residual,
                "dual_residual": sol.dual_residual,
                "iterations": sol.iterations,
                "x": sol.x,
            });
            let text = serde_json::to_string_pretty(&json).map_err(Error::from)? + "\n";
            emit(out.as_deref(), &text)?;
            if sol.is_usable() {
                Ok(())
            } else {
                Err(Failure(
                    1,
                    format!("solver finished with status {:?}", sol.status),
                ))
            }
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
