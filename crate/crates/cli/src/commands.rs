use std::fmt::Write as _;

use wsld::spectral::{uniform_x_grid, SeriesSymbol, SERIES_TERMS};
use wsld::verification::ManufacturedCase;
use wsld::{
    certify, convergence_study, generating_function, grunwald_g, manufactured_1d, manufactured_2d, max_error,
    solve_1d, solve_2d, stencil_phi, SolveOptions, WsldError,
};

use crate::config::{Command, RunConfig};
use crate::error::CliError;

/// CSV body of a run plus extra comment lines and a human summary.
#[derive(Debug, Default)]
pub struct Report {
    pub comments: Vec<String>,
    pub body: String,
    pub summary: Vec<String>,
}

fn sci(v: f64) -> String {
    format!("{v:.15e}")
}

pub fn run(cfg: &RunConfig) -> Result<Report, CliError> {
    match cfg.command {
        Command::Coeffs => coeffs(cfg),
        Command::Spectrum => spectrum(cfg),
        Command::Certify => certify_cmd(cfg),
        Command::Solve1d => solve1d(cfg),
        Command::Solve2d => solve2d(cfg),
        Command::Converge => converge(cfg),
    }
}

fn coeffs(cfg: &RunConfig) -> Result<Report, CliError> {
    let table = stencil_phi(cfg.alpha, &cfg.tuple, cfg.k)?;
    let g = grunwald_g(cfg.alpha, cfg.k);
    let mut body = String::from("k,g_k[1],q_k[1],phi_k[1]\n");
    for k in 0..=cfg.k {
        writeln!(body, "{k},{},{},{}", sci(g[k]), sci(table.q_raw()[k]), sci(table.phi()[k])).unwrap();
    }
    Ok(Report {
        comments: vec![format!("tuple: {} alpha: {}", cfg.tuple, cfg.alpha)],
        body,
        summary: vec![format!("{} coefficients for {} at alpha = {}", cfg.k + 1, cfg.tuple, cfg.alpha)],
    })
}

fn spectrum(cfg: &RunConfig) -> Result<Report, CliError> {
    let xs = uniform_x_grid(cfg.x_points);
    let mut body = String::from("alpha[1],x[rad],f[1]\n");
    let mut method = "closed-form";
    for &alpha in &cfg.alphas {
        let values: Vec<f64> = match generating_function(&cfg.tuple, alpha, 0.0) {
            Ok(_) => xs
                .iter()
                .map(|&x| generating_function(&cfg.tuple, alpha, x))
                .collect::<Result<_, _>>()?,
            Err(WsldError::UnsupportedTuple(_)) => {
                method = "series";
                let series = SeriesSymbol::new(&cfg.tuple, alpha, SERIES_TERMS)?;
                xs.iter().map(|&x| series.eval(x)).collect::<Result<_, _>>()?
            }
            Err(e) => return Err(e.into()),
        };
        for (x, f) in xs.iter().zip(values) {
            writeln!(body, "{},{},{}", sci(alpha.value()), sci(*x), sci(f)).unwrap();
        }
    }
    Ok(Report {
        comments: vec![format!("tuple: {} method: {method}", cfg.tuple)],
        body,
        summary: vec![format!("{} samples of the symbol of {}", cfg.alphas.len() * xs.len(), cfg.tuple)],
    })
}

fn certify_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let mut body = String::from("tuple,alpha[1],f_max[1],lambda_max_sym[1],n[1],verdict\n");
    let mut summary = Vec::new();
    for &alpha in &cfg.alphas {
        let r = certify(&cfg.tuple, alpha, cfg.x_points, cfg.n)?;
        writeln!(
            body,
            "\"{}\",{},{},{},{},{}",
            r.tuple,
            sci(alpha.value()),
            sci(r.f_max),
            sci(r.lambda_max_sym),
            r.matrix_size,
            r.verdict
        )
        .unwrap();
        summary.push(format!("{} alpha = {}: {}", r.tuple, alpha, r.verdict));
    }
    Ok(Report {
        comments: vec![format!("x-points: {} n: {}", cfg.x_points, cfg.n)],
        body,
        summary,
    })
}

/// Time steps for a run: explicit `nt`, otherwise `tau = h^2` (or the fixed step).
fn time_steps(cfg: &RunConfig, h: f64) -> usize {
    cfg.nt.unwrap_or_else(|| cfg.tau.n_steps(h, cfg.t_final))
}

fn solve1d(cfg: &RunConfig) -> Result<Report, CliError> {
    let case = manufactured_1d(cfg.alpha)?;
    let h = 2.0 / cfg.nx as f64;
    let mut problem = case.problem(cfg.nx, time_steps(cfg, h))?;
    problem.t_final = cfg.t_final;
    let sol = solve_1d(&problem, &cfg.tuple, SolveOptions::default())?;
    let exact = case.exact_at_nodes(&problem.grid, cfg.t_final);
    let err = max_error(&sol.values, &exact)?;
    let mut body = String::from("x[length],u[1],u_exact[1],abs_error[1]\n");
    for ((x, u), e) in sol.nodes.iter().zip(&sol.values).zip(&exact) {
        writeln!(body, "{},{},{},{}", sci(*x), sci(*u), sci(*e), sci((u - e).abs())).unwrap();
    }
    Ok(Report {
        comments: vec![
            format!("tuple: {} alpha: {} nx: {} nt: {}", cfg.tuple, cfg.alpha, cfg.nx, problem.n_steps),
            format!("max_error: {}", sci(err)),
        ],
        body,
        summary: vec![format!("max error {err:.4e} at t = {}", cfg.t_final)],
    })
}

fn solve2d(cfg: &RunConfig) -> Result<Report, CliError> {
    let beta = cfg.beta.unwrap_or(cfg.alpha);
    let case = manufactured_2d(cfg.alpha, beta)?;
    let h = 2.0 / cfg.nx.max(cfg.ny) as f64;
    let mut problem = case.problem_xy(cfg.nx, cfg.ny, time_steps(cfg, h))?;
    problem.t_final = cfg.t_final;
    let sol = solve_2d(&problem, &cfg.tuple, &cfg.tuple, cfg.adi)?;
    let exact = case.exact_at_nodes(&problem.grid_x, &problem.grid_y, cfg.t_final);
    let err = max_error(sol.values.as_slice(), exact.as_slice())?;
    let mut body = String::from("x[length],y[length],u[1],u_exact[1],abs_error[1]\n");
    for (j, y) in sol.nodes_y.iter().enumerate() {
        for (i, x) in sol.nodes_x.iter().enumerate() {
            let (u, e) = (sol.values[(i, j)], exact[(i, j)]);
            writeln!(body, "{},{},{},{},{}", sci(*x), sci(*y), sci(u), sci(e), sci((u - e).abs())).unwrap();
        }
    }
    Ok(Report {
        comments: vec![
            format!(
                "tuple: {} alpha: {} beta: {beta} nx: {} ny: {} nt: {} adi: {}",
                cfg.tuple, cfg.alpha, cfg.nx, cfg.ny, problem.n_steps, cfg.adi
            ),
            format!("max_error: {}", sci(err)),
        ],
        body,
        summary: vec![format!("max error {err:.4e} at t = {}", cfg.t_final)],
    })
}

fn converge(cfg: &RunConfig) -> Result<Report, CliError> {
    let case = match cfg.beta {
        None => ManufacturedCase::OneD(manufactured_1d(cfg.alpha)?),
        Some(beta) => ManufacturedCase::TwoD(manufactured_2d(cfg.alpha, beta)?.with_variant(cfg.adi)),
    };
    let hs: Vec<f64> = cfg.inv_h.iter().map(|&n| 1.0 / n as f64).collect();
    let table = convergence_study(&case, &cfg.tuple, &hs, cfg.tau)?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    let summary = table
        .rows
        .iter()
        .zip(&cfg.inv_h)
        .map(|(r, n)| match r.rate {
            Some(rate) => format!("h = 1/{n}: error {:.4e}, rate {rate:.4}", r.error),
            None => format!("h = 1/{n}: error {:.4e}", r.error),
        })
        .collect();
    Ok(Report {
        comments: vec![format!("{}; {}", cfg.tau, if cfg.beta.is_some() { cfg.adi.to_string() } else { "cn".into() })],
        body: String::from_utf8(buf).expect("csv is ascii"),
        summary,
    })
}
