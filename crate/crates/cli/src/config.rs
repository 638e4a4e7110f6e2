//! Run configuration: a flat `key = value` file merged with command-line flags.
//!
//! Keys are the long flag names (`t-final` and `t_final` are both accepted).
//! Blank lines and lines starting with `#` are ignored. Flags override file
//! values. Every value is checked before any computation starts.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use wsld::{AdiVariant, FractionalOrder, ShiftTuple, TauLaw};

use crate::error::CliError;

pub const KEYS: [&str; 16] = [
    "alpha", "alphas", "beta", "tuple", "order", "nx", "ny", "nt", "t-final", "adi", "k", "x-points", "n", "inv-h",
    "tau", "out",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Coeffs,
    Spectrum,
    Certify,
    Solve1d,
    Solve2d,
    Converge,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Coeffs => "coeffs",
            Command::Spectrum => "spectrum",
            Command::Certify => "certify",
            Command::Solve1d => "solve1d",
            Command::Solve2d => "solve2d",
            Command::Converge => "converge",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Origin {
    File { path: PathBuf, line: usize },
    Flag,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::File { path, line } => write!(f, "{}:{line}", path.display()),
            Origin::Flag => f.write_str("command line"),
        }
    }
}

/// Unparsed values keyed by canonical key name.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    values: BTreeMap<String, (String, Origin)>,
}

fn canonical_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('_', "-")
}

impl RawConfig {
    pub fn parse_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config file {}: {e}", path.display())))?;
        Self::parse_str(&text, path)
    }

    pub fn parse_str(text: &str, path: &Path) -> Result<Self, CliError> {
        let mut raw = Self::default();
        for (idx, line) in text.lines().enumerate() {
            let origin = Origin::File {
                path: path.to_path_buf(),
                line: idx + 1,
            };
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("{origin}: expected `key = value`, found `{line}`")))?;
            let key = canonical_key(key);
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::Config(format!("{origin}: unknown key `{key}`")));
            }
            if raw.values.contains_key(&key) {
                return Err(CliError::Config(format!("{origin}: `{key}` assigned twice")));
            }
            raw.values.insert(key, (value.trim().to_string(), origin));
        }
        Ok(raw)
    }

    /// Sets `key` from a command-line flag, replacing any file value.
    pub fn set_flag(&mut self, key: &str, value: String) {
        self.values.insert(canonical_key(key), (value, Origin::Flag));
    }

    fn get(&self, key: &str) -> Option<&(String, Origin)> {
        self.values.get(key)
    }
}

fn bad(key: &str, origin: &Origin, msg: impl fmt::Display) -> CliError {
    CliError::Config(format!("{origin}: field `{key}`: {msg}"))
}

fn parse_with<T>(raw: &RawConfig, key: &str, f: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, CliError> {
    match raw.get(key) {
        None => Ok(None),
        Some((value, origin)) => f(value).map(Some).map_err(|e| bad(key, origin, e)),
    }
}

fn parse_order(v: &str) -> Result<FractionalOrder, String> {
    let x: f64 = v.parse().map_err(|_| format!("`{v}` is not a number"))?;
    FractionalOrder::new(x).map_err(|e| e.to_string())
}

fn parse_count(v: &str, min: usize) -> Result<usize, String> {
    let n: usize = v.parse().map_err(|_| format!("`{v}` is not a nonnegative integer"))?;
    if n < min {
        return Err(format!("must be at least {min}, got {n}"));
    }
    Ok(n)
}

fn parse_list<T>(v: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    let items: Vec<T> = v.split(',').map(|s| item(s.trim())).collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err("empty list".into());
    }
    Ok(items)
}

/// Fully checked configuration for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub alpha: FractionalOrder,
    pub beta: Option<FractionalOrder>,
    pub alphas: Vec<FractionalOrder>,
    pub tuple: ShiftTuple,
    pub nx: usize,
    pub ny: usize,
    pub nt: Option<usize>,
    pub t_final: f64,
    pub adi: AdiVariant,
    pub k: usize,
    pub x_points: usize,
    pub n: usize,
    pub inv_h: Vec<usize>,
    pub tau: TauLaw,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(command: Command, raw: &RawConfig) -> Result<Self, CliError> {
        let explicit_alpha = parse_with(raw, "alpha", parse_order)?;
        let alpha = explicit_alpha.unwrap_or(FractionalOrder::new(1.5).expect("valid default"));
        let mut beta = parse_with(raw, "beta", parse_order)?;
        if command == Command::Solve2d && beta.is_none() {
            beta = Some(alpha);
        }

        let default_alphas: &[f64] = match command {
            Command::Spectrum => &[1.1, 1.3, 1.5, 1.7, 1.9],
            Command::Certify => &[1.1, 1.5, 1.9],
            _ => &[],
        };
        let alphas = match (parse_with(raw, "alphas", |v| parse_list(v, parse_order))?, explicit_alpha) {
            (Some(list), _) => list,
            (None, Some(a)) => vec![a],
            (None, None) if default_alphas.is_empty() => vec![alpha],
            (None, None) => default_alphas
                .iter()
                .map(|&a| FractionalOrder::new(a).expect("valid default"))
                .collect(),
        };

        let order = parse_with(raw, "order", |v| match v {
            "1" => Ok(1u8),
            "2" => Ok(2),
            "3" => Ok(3),
            "4" => Ok(4),
            _ => Err(format!("operator order must be 1, 2, 3 or 4, got `{v}`")),
        })?;
        let tuple = match parse_with(raw, "tuple", |v| v.parse::<ShiftTuple>().map_err(|e| e.to_string()))? {
            Some(t) => {
                if let (Some(o), Some((_, origin))) = (order, raw.get("order")) {
                    if o != t.order() {
                        return Err(bad("order", origin, format!("tuple {t} has order {}", t.order())));
                    }
                }
                t
            }
            None => ShiftTuple::default_for_order(order.unwrap_or(4)).expect("orders 1-4 have defaults"),
        };

        let nx = parse_with(raw, "nx", |v| parse_count(v, 2))?.unwrap_or(20);
        let ny = parse_with(raw, "ny", |v| parse_count(v, 2))?.unwrap_or(nx);
        let nt = parse_with(raw, "nt", |v| parse_count(v, 1))?;
        let t_final = parse_with(raw, "t-final", |v| {
            let t: f64 = v.parse().map_err(|_| format!("`{v}` is not a number"))?;
            if t.is_finite() && t > 0.0 {
                Ok(t)
            } else {
                Err(format!("horizon must be positive, got {t}"))
            }
        })?
        .unwrap_or(1.0);
        let adi = parse_with(raw, "adi", |v| match v.to_ascii_lowercase().as_str() {
            "pr" | "peaceman-rachford" => Ok(AdiVariant::PeacemanRachford),
            "douglas" => Ok(AdiVariant::Douglas),
            _ => Err(format!("expected `pr` or `douglas`, got `{v}`")),
        })?
        .unwrap_or(AdiVariant::PeacemanRachford);
        let k = parse_with(raw, "k", |v| parse_count(v, 0))?.unwrap_or(10);
        let default_points = if command == Command::Certify { 2001 } else { 201 };
        let x_points = parse_with(raw, "x-points", |v| parse_count(v, 2))?.unwrap_or(default_points);
        let n = parse_with(raw, "n", |v| parse_count(v, 1))?.unwrap_or(64);

        let default_inv_h: &[usize] = if beta.is_some() { &[10, 20, 30, 40] } else { &[10, 20, 40, 60] };
        let inv_h = parse_with(raw, "inv-h", |v| {
            let list = parse_list(v, |s| parse_count(s, 1))?;
            if list.windows(2).any(|w| w[1] <= w[0]) {
                return Err("grid sizes must be strictly increasing".into());
            }
            Ok(list)
        })?
        .unwrap_or_else(|| default_inv_h.to_vec());
        let tau = parse_with(raw, "tau", |v| {
            if v.eq_ignore_ascii_case("h2") || v == "h^2" {
                return Ok(TauLaw::HSquared);
            }
            let t: f64 = v.parse().map_err(|_| format!("expected `h2` or a positive step, got `{v}`"))?;
            if t.is_finite() && t > 0.0 {
                Ok(TauLaw::Fixed(t))
            } else {
                Err(format!("time step must be positive, got {t}"))
            }
        })?
        .unwrap_or(TauLaw::HSquared);
        let out = raw.get("out").map(|(v, _)| PathBuf::from(v));

        let cfg = Self {
            command,
            alpha,
            beta,
            alphas,
            tuple,
            nx,
            ny,
            nt,
            t_final,
            adi,
            k,
            x_points,
            n,
            inv_h,
            tau,
            out,
        };
        cfg.check_tuple()?;
        Ok(cfg)
    }

    /// The orders at which the tuple will be evaluated by this command.
    fn orders_used(&self) -> Vec<FractionalOrder> {
        match self.command {
            Command::Spectrum | Command::Certify => self.alphas.clone(),
            _ => std::iter::once(self.alpha).chain(self.beta).collect(),
        }
    }

    /// Weights can degenerate at isolated orders; report that up front.
    fn check_tuple(&self) -> Result<(), CliError> {
        for a in self.orders_used() {
            self.tuple
                .branches(a)
                .map_err(|e| CliError::Config(format!("field `tuple`: {e} at order {a}")))?;
        }
        Ok(())
    }

    /// Canonical text of every setting that affects the output.
    pub fn canonical(&self) -> String {
        let list = |v: &[FractionalOrder]| v.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",");
        let mut s = format!("command={}\nalpha={}\n", self.command, self.alpha);
        if let Some(b) = self.beta {
            s += &format!("beta={b}\n");
        }
        s += &format!("alphas={}\ntuple={}\n", list(&self.alphas), self.tuple);
        s += &format!("nx={}\nny={}\n", self.nx, self.ny);
        if let Some(nt) = self.nt {
            s += &format!("nt={nt}\n");
        }
        s += &format!("t-final={}\nadi={}\nk={}\n", self.t_final, self.adi, self.k);
        s += &format!("x-points={}\nn={}\n", self.x_points, self.n);
        let inv_h: Vec<String> = self.inv_h.iter().map(|v| v.to_string()).collect();
        s += &format!("inv-h={}\ntau={}\n", inv_h.join(","), self.tau);
        s
    }
}
