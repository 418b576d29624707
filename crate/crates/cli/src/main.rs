//! `freecurves`: batch front end. Every subcommand prints one JSON document
//! (or CSV) and exits 0 when all checks pass, 2 when a check fails and 3
//! when a budget cap is hit.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;

use freecurves::ff_arith::FqCtx;
use freecurves::forms::Form;
use freecurves::report::parse_rat;
use freecurves::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "freecurves", version, about = "Rational curves on hypersurfaces over finite fields")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// characteristic
    #[arg(long, global = true, default_value_t = 5)]
    pub p: u32,
    /// q = p^k
    #[arg(long, global = true, default_value_t = 1)]
    pub k: u32,
    #[arg(long, global = true, default_value_t = 3)]
    pub d: usize,
    #[arg(long, global = true, default_value_t = 4)]
    pub n: usize,
    #[arg(long, global = true, default_value_t = 1)]
    pub e: usize,
    #[arg(long, global = true, default_value_t = 0, allow_negative_numbers = true)]
    pub rho: i64,
    /// rational, e.g. 1/2
    #[arg(long, global = true, default_value = "0", value_parser = parse_eps)]
    pub eps: BigRational,
    /// height exponent bound
    #[arg(long = "B", global = true, default_value_t = 1, allow_negative_numbers = true)]
    pub b: i64,
    /// JSON form {n, d, terms: [{exps, coeff}]}
    #[arg(long, global = true, conflicts_with = "fermat")]
    pub form_file: Option<PathBuf>,
    /// x_1^d + … + x_n^d (the default)
    #[arg(long, global = true)]
    pub fermat: bool,
    #[arg(long, global = true, value_enum, default_value_t = Out::Json)]
    pub out: Out,
    /// worker threads (default: all cores)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// cap on enumeration steps
    #[arg(long, global = true, default_value = "68719476736", value_parser = parse_u128)]
    pub budget: u128,
    /// run the census on forms without a smoothness certificate
    #[arg(long, global = true)]
    pub allow_uncertified: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Out {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// N, N̂, Ñ, N_ρ and the major/minor split of N_ρ
    Count,
    /// splitting-type census of degree-e curves
    Census,
    /// sampled points of the major and minor arcs with both Weyl bounds
    Arcs {
        /// samples per j
        #[arg(long, default_value_t = 10)]
        samples: usize,
    },
    /// successive minima of a lattice, or the Λ_{a,c} checks for a matrix γ
    Lattice {
        /// JSON with "matrix" (a basis) or "gamma" (a symmetric matrix)
        #[arg(long)]
        matrix_file: PathBuf,
        #[arg(long, default_value_t = 1)]
        a: i64,
        #[arg(long, default_value_t = 1)]
        c: i64,
        #[arg(long, default_value_t = 1)]
        s: i64,
    },
    /// N_X(B), N_X^{ε-free}(B), E_ε(B) and the local density estimate
    Peyre {
        /// largest prime degree in the density product
        #[arg(long, default_value_t = 2)]
        prime_cap: u32,
        #[arg(long, default_value_t = 2)]
        hensel_depth: usize,
        /// give constant maps ℓ = 0 instead of 1
        #[arg(long)]
        constant_ell_zero: bool,
        /// keep ℓ unclamped
        #[arg(long)]
        no_clamp: bool,
    },
    /// the displayed dimension bounds and hypothesis flags
    Bounds,
    /// acceptance criteria
    Verify {
        /// comma separated ids (default 1-12)
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u32>,
    },
}

fn parse_eps(s: &str) -> std::result::Result<BigRational, String> {
    parse_rat(s).ok_or_else(|| format!("not a rational number: {s}"))
}

fn parse_u128(s: &str) -> std::result::Result<u128, String> {
    s.replace('_', "").parse().map_err(|e| format!("{e}"))
}

impl Global {
    pub fn form(&self) -> Result<Form> {
        let fq = Arc::new(FqCtx::new(self.p, self.k)?);
        match &self.form_file {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                Form::from_json(fq, &serde_json::from_str(&text)?)
            }
            None => Form::fermat(fq, self.n, self.d),
        }
    }
}

/// What a subcommand produced.
pub struct Report {
    pub json: serde_json::Value,
    /// Dedicated CSV layout; the flattened JSON is used otherwise.
    pub csv: Option<String>,
    pub ok: bool,
    /// exit code when `ok` is false
    pub code: u8,
}

impl Report {
    pub fn new(json: serde_json::Value, ok: bool) -> Self {
        Report { json, csv: None, ok, code: 2 }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.global.jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| commands::dispatch(&cli)) {
        Ok(rep) => {
            let text = match cli.global.out {
                Out::Json => serde_json::to_string_pretty(&rep.json).map(|s| s + "\n").map_err(Error::from),
                Out::Csv => rep.csv.clone().map(Ok).unwrap_or_else(|| output::flatten_csv(&rep.json)),
            };
            match text {
                Ok(t) => print!("{t}"),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            }
            if rep.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(rep.code)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
