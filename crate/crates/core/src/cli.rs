//! Command-line front end. Every subcommand writes CSV or newline-delimited
//! JSON and reports the named checks that failed.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::accuracy::{
    h_star, h_star_explicit, h_star_sequence, prob_law, weak_star_test, AccuracyLaw, Bump, CeaModel, ElementPair,
    ExponentialModel, GeometricModel, LawKind, SeminormModel, SequenceParams, SineModel,
};
use crate::basis::PkBasis;
use crate::bounds::{point_bound_check, seminorm_bound_check, BoundReport, ConstantBundle, Sampling};
use crate::error::{Error, Result};
use crate::fem1d::{convergence_study, ModelProblem};
use crate::functions::{sine_seminorm, SinePi};
use crate::geometry::Simplex;

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "FEM_ACCURACY_THREADS";

#[derive(Debug, Parser)]
#[command(name = "fem-accuracy", version, about = "Explicit P_k error constants, critical mesh sizes and accuracy laws")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// csv, or json (one record per line).
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,

    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Seed for sampling-based checks.
    #[arg(long, default_value_t = 0x5eed, global = true)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    /// u = sin(πx): |u|_r = π^r ‖sin πx‖_p.
    Sine,
    /// u = exp(rate·x).
    Exp,
    /// |u|_r = rate^r.
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Law {
    Nonlinear,
    Heaviside,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Canonical P_k basis with exact coefficients (JSON; CSV gives index,node,terms).
    Basis {
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    /// Point and semi-norm bounds on the reference simplex.
    /// CSV columns: bound_name,inequality,measured,bound,pass.
    Bounds {
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Highest λ-derivative order for the point bound.
        #[arg(long, default_value_t = 2)]
        r: usize,
        /// Highest semi-norm order.
        #[arg(long, default_value_t = 1)]
        l: usize,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
    /// The error constant 𝒞_k and its ingredients.
    /// CSV columns: n,m,k,p,sigma,lambda,cea_ratio,h_cap,c1,c2,xi,k_factor,constant.
    Constant {
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        m: usize,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        cea_ratio: f64,
        #[arg(long, default_value_t = 1.0)]
        h_cap: f64,
    },
    /// Probability-law curve on a log-spaced h grid. CSV columns: h,probability.
    Prob {
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value_t = Law::Nonlinear)]
        law: Law,
    },
    /// h*_q for q = 1..qmax. CSV columns: q,h_star,h_star_over_q.
    HstarSeq {
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long, default_value_t = 200)]
        qmax: usize,
    },
    /// Pairings of P_q with a bump on [a, b] against the Heaviside limit.
    /// CSV columns: q,h_star,pairing,limit,error.
    Weakstar {
        #[command(flatten)]
        seq: SeqArgs,
        /// Comma-separated q values; defaults to 1..=qmax.
        #[arg(long, value_delimiter = ',')]
        q_list: Vec<usize>,
        #[arg(long, default_value_t = 40)]
        qmax: usize,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 2.0)]
        b: f64,
    },
    /// Galerkin convergence study for -u'' + u = f with u = sin(πx) on (0,1),
    /// halving h from hmax down to hmin. CSV columns: k,m,p,h,error,bound,order_est.
    Converge {
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        m: usize,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 0.125)]
        hmax: f64,
        #[arg(long, default_value_t = 1.0 / 64.0)]
        hmin: f64,
        #[arg(long, default_value_t = 1.0)]
        cea_ratio: f64,
    },
}

#[derive(Debug, Args)]
pub struct PairArgs {
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub k1: usize,
    #[arg(long, default_value_t = 2)]
    pub k2: usize,
    #[arg(long, default_value_t = 0)]
    pub m: usize,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Composite constant for k1; with --ck2 it replaces the sin(πx) model.
    #[arg(long, requires = "ck2")]
    pub ck1: Option<f64>,
    #[arg(long, requires = "ck1")]
    pub ck2: Option<f64>,
    /// 1 + ‖a‖/α_h, same for both degrees.
    #[arg(long, default_value_t = 1.0)]
    pub cea_ratio: f64,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = 1e-2)]
    pub hmin: f64,
    #[arg(long, default_value_t = 1e2)]
    pub hmax: f64,
    #[arg(long, default_value_t = 201)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct SeqArgs {
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, value_enum, default_value_t = Model::Sine)]
    pub model: Model,
    /// Rate for the exp and geometric models.
    #[arg(long, default_value_t = 2.0)]
    pub rate: f64,
}

impl SeqArgs {
    fn params(&self) -> Result<SequenceParams<f64>> {
        SequenceParams::new(self.n, self.m, self.p, self.k)
    }

    fn model(&self) -> Result<Box<dyn SeminormModel<f64>>> {
        if !(self.rate > 0.0) {
            return Err(Error::invalid("rate", format!("{} is not positive", self.rate)));
        }
        Ok(match self.model {
            Model::Sine => Box::new(SineModel { p: self.p }),
            Model::Exp => Box::new(ExponentialModel { rate: self.rate, p: self.p }),
            Model::Geometric => Box::new(GeometricModel { ratio: self.rate, scale: 1.0 }),
        })
    }
}

/// Ordered record, rendered as one CSV row or one JSON object.
type Record = Vec<(&'static str, Value)>;

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn write_records(out: &mut dyn Write, format: Format, records: &[Record]) -> Result<()> {
    match format {
        Format::Csv => {
            if let Some(first) = records.first() {
                writeln!(out, "{}", first.iter().map(|(k, _)| *k).collect::<Vec<_>>().join(","))?;
            }
            for r in records {
                writeln!(out, "{}", r.iter().map(|(_, v)| csv_cell(v)).collect::<Vec<_>>().join(","))?;
            }
        }
        Format::Json => {
            for r in records {
                let fields: Vec<String> =
                    r.iter().map(|(k, v)| format!("{}:{}", Value::String((*k).into()), v)).collect();
                writeln!(out, "{{{}}}", fields.join(","))?;
            }
        }
    }
    Ok(())
}

fn bound_record(r: &BoundReport<f64>) -> Record {
    vec![
        ("bound_name", Value::String(r.bound_name.clone())),
        ("inequality", Value::String(r.inequality.clone())),
        ("measured", num(r.measured)),
        ("bound", num(r.bound)),
        ("pass", Value::Bool(r.pass)),
    ]
}

fn log_grid(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo) || steps == 0 {
        return Err(Error::invalid("hmin", format!("need 0 < hmin <= hmax and steps >= 1, got [{lo}, {hi}], {steps}")));
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..steps).map(|i| (a + (b - a) * i as f64 / (steps - 1) as f64).exp()).collect())
}

fn to_json<S: Serialize>(v: &S) -> Result<String> {
    serde_json::to_string(v).map_err(|e| Error::Io(e.to_string()))
}

/// Runs one command, writing its table to `out`; returns the names of failed checks.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<Vec<String>> {
    let mut failed = Vec::new();
    let records: Vec<Record> = match &cli.command {
        Command::Basis { n, k } => {
            let basis = PkBasis::new(*n, *k)?;
            let record = basis.record();
            if cli.format == Format::Json {
                writeln!(out, "{}", to_json(&record)?)?;
                return Ok(failed);
            }
            record
                .functions
                .iter()
                .map(|f| {
                    vec![
                        ("index", Value::from(f.index)),
                        ("node", Value::String(f.node_barycentric.join(" "))),
                        ("terms", Value::from(f.terms.len())),
                    ]
                })
                .collect()
        }
        Command::Bounds { n, k, r, l, p } => {
            let basis = PkBasis::new(*n, *k)?;
            let sampling = Sampling { seed: cli.seed, ..Sampling::default() };
            let reference = Simplex::<f64>::reference(*n);
            let mut reports: Vec<BoundReport<f64>> = (0..=*r).map(|r| point_bound_check(&basis, r, sampling)).collect();
            for l in 0..=*l {
                reports.push(seminorm_bound_check(&basis, &reference, l, *p)?);
            }
            failed.extend(reports.iter().filter(|r| !r.pass).map(|r| r.bound_name.clone()));
            reports.iter().map(bound_record).collect()
        }
        Command::Constant { n, m, p, k, sigma, lambda, cea_ratio, h_cap } => {
            let b = ConstantBundle::new(*n, *m, *k, *p)
                .with_sigma(*sigma)
                .with_lambda(*lambda)
                .with_cea_ratio(*cea_ratio)
                .with_h_cap(*h_cap);
            let constant = b.script_c_k()?;
            vec![vec![
                ("n", Value::from(*n)),
                ("m", Value::from(*m)),
                ("k", Value::from(*k)),
                ("p", num(*p)),
                ("sigma", num(*sigma)),
                ("lambda", num(*lambda)),
                ("cea_ratio", num(*cea_ratio)),
                ("h_cap", num(*h_cap)),
                ("c1", num(b.c1())),
                ("c2", num(b.c2())),
                ("xi", num(b.xi_sup())),
                ("k_factor", num(b.k_factor()?)),
                ("constant", num(constant)),
            ]]
        }
        Command::Prob { pair, grid, law } => {
            let hs = match (pair.ck1, pair.ck2) {
                (Some(c1), Some(c2)) => h_star(&ElementPair::new(pair.k1, pair.k2, c1, c2)?),
                _ => {
                    let ratio = sine_seminorm(pair.k1 + 1, pair.p) / sine_seminorm(pair.k2 + 1, pair.p);
                    let cea = (pair.cea_ratio, pair.cea_ratio);
                    h_star_explicit(pair.n, pair.m, pair.p, pair.k1, pair.k2, ratio, cea)?
                }
            };
            let kind = match law {
                Law::Nonlinear => LawKind::Nonlinear,
                Law::Heaviside => LawKind::Heaviside,
            };
            let law = AccuracyLaw::new(hs, pair.k2 - pair.k1, kind)?;
            log_grid(grid.hmin, grid.hmax, grid.steps)?
                .into_iter()
                .map(|h| Ok(vec![("h", num(h)), ("probability", num(prob_law(&law, h)?))]))
                .collect::<Result<_>>()?
        }
        Command::HstarSeq { seq, qmax } => {
            let rows = h_star_sequence(&seq.params()?, *qmax, seq.model()?.as_ref(), &CeaModel::Constant)?;
            rows.iter()
                .map(|r| vec![("q", Value::from(r.q)), ("h_star", num(r.h_star)), ("h_star_over_q", num(r.h_star_over_q))])
                .collect()
        }
        Command::Weakstar { seq, q_list, qmax, a, b } => {
            let qs: Vec<usize> = if q_list.is_empty() { (1..=*qmax).collect() } else { q_list.clone() };
            let bump = Bump::new(*a, *b)?;
            let report = weak_star_test(&seq.params()?, &qs, seq.model()?.as_ref(), &CeaModel::Constant, &bump)?;
            report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        ("q", Value::from(r.q)),
                        ("h_star", num(r.h_star)),
                        ("pairing", num(r.pairing)),
                        ("limit", num(r.limit)),
                        ("error", num(r.error)),
                    ]
                })
                .collect()
        }
        Command::Converge { k, m, p, hmax, hmin, cea_ratio } => {
            if !(*hmin > 0.0 && hmax >= hmin) {
                return Err(Error::invalid("hmin", format!("need 0 < hmin <= hmax, got {hmin}, {hmax}")));
            }
            let mut elements = Vec::new();
            let mut ne = (1.0 / hmax).round().max(1.0) as usize;
            while 1.0 / ne as f64 >= hmin * (1.0 - 1e-9) {
                elements.push(ne);
                ne *= 2;
            }
            let problem = ModelProblem::new(SinePi::new(1));
            let study = convergence_study(&problem, *k, *m, *p, &elements, *cea_ratio)?;
            failed.extend(
                study.rows.iter().filter(|r| r.error > r.bound).map(|r| format!("error_bound(k={k}, m={m}, p={p}, h={})", r.h)),
            );
            study
                .rows
                .iter()
                .map(|r| {
                    vec![
                        ("k", Value::from(r.k)),
                        ("m", Value::from(r.m)),
                        ("p", num(r.p)),
                        ("h", num(r.h)),
                        ("error", num(r.error)),
                        ("bound", num(r.bound)),
                        ("order_est", r.order_est.map_or(Value::Null, num)),
                    ]
                })
                .collect()
        }
    };
    write_records(out, cli.format, &records)?;
    Ok(failed)
}

/// Sizes the global thread pool from [`THREADS_ENV`], if set.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::invalid("FEM_ACCURACY_THREADS", format!("`{raw}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::invalid("FEM_ACCURACY_THREADS", e.to_string()))
}
