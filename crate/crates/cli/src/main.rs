//! `wsld` command-line front end.

mod commands;
mod config;
mod error;
mod output;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Command, RawConfig, RunConfig};
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "wsld", version, about = "Weighted shifted Lubich difference operators and solvers")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Tabulate g_k, q_k and the stencil phi_k
    Coeffs,
    /// Sample the generating function f(alpha, x) on [0, pi]
    Spectrum,
    /// Check the sign of the symbol and the operator eigenvalues
    Certify,
    /// Solve the 1D manufactured problem with Crank-Nicolson
    Solve1d,
    /// Solve the 2D manufactured problem with ADI
    Solve2d,
    /// Errors and observed rates over a list of grids
    Converge,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Coeffs => Command::Coeffs,
            Cmd::Spectrum => Command::Spectrum,
            Cmd::Certify => Command::Certify,
            Cmd::Solve1d => Command::Solve1d,
            Cmd::Solve2d => Command::Solve2d,
            Cmd::Converge => Command::Converge,
        }
    }
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// Fractional order in x, 1 < alpha < 2
    #[arg(long, global = true)]
    alpha: Option<String>,
    /// Comma-separated orders for spectrum and certify
    #[arg(long, global = true)]
    alphas: Option<String>,
    /// Fractional order in y
    #[arg(long, global = true)]
    beta: Option<String>,
    /// Shift tuple, e.g. 1,2,1,0,1,2,1,-2 (1, 2, 4 or 8 integers)
    #[arg(long, global = true, allow_hyphen_values = true)]
    tuple: Option<String>,
    /// Operator order; picks the default tuple when --tuple is absent
    #[arg(long, global = true)]
    order: Option<String>,
    /// Cells in x
    #[arg(long, global = true)]
    nx: Option<String>,
    /// Cells in y
    #[arg(long, global = true)]
    ny: Option<String>,
    /// Time steps (default: tau = h^2)
    #[arg(long, global = true)]
    nt: Option<String>,
    /// Final time
    #[arg(long = "t-final", global = true)]
    t_final: Option<String>,
    /// ADI splitting: pr or douglas
    #[arg(long, global = true)]
    adi: Option<String>,
    /// Highest coefficient index for coeffs
    #[arg(long, global = true)]
    k: Option<String>,
    /// Points on [0, pi] for spectrum and certify
    #[arg(long = "x-points", global = true)]
    x_points: Option<String>,
    /// Matrix size for certify
    #[arg(long, global = true)]
    n: Option<String>,
    /// Comma-separated 1/h values for converge
    #[arg(long = "inv-h", global = true)]
    inv_h: Option<String>,
    /// Time step law for converge: h2 or a fixed step
    #[arg(long, global = true)]
    tau: Option<String>,
    /// Output CSV path (default: stdout)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// key = value configuration file; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

impl Flags {
    fn apply(self, raw: &mut RawConfig) {
        let pairs = [
            ("alpha", self.alpha),
            ("alphas", self.alphas),
            ("beta", self.beta),
            ("tuple", self.tuple),
            ("order", self.order),
            ("nx", self.nx),
            ("ny", self.ny),
            ("nt", self.nt),
            ("t-final", self.t_final),
            ("adi", self.adi),
            ("k", self.k),
            ("x-points", self.x_points),
            ("n", self.n),
            ("inv-h", self.inv_h),
            ("tau", self.tau),
            ("out", self.out.map(|p| p.to_string_lossy().into_owned())),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                raw.set_flag(key, v);
            }
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let mut raw = match &cli.flags.config {
        Some(path) => RawConfig::parse_file(path)?,
        None => RawConfig::default(),
    };
    cli.flags.apply(&mut raw);
    let cfg = RunConfig::resolve(cli.command.into(), &raw)?;
    let report = commands::run(&cfg)?;
    let text = output::render(&cfg, &report);
    match &cfg.out {
        Some(path) => {
            output::write_atomic(path, &text)?;
            let mut err = io::stderr().lock();
            for line in &report.summary {
                writeln!(err, "{line}")?;
            }
            writeln!(err, "wrote {}", path.display())?;
        }
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wsld: {e}");
            e.exit_code()
        }
    }
}
