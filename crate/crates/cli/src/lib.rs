//! Command-line front end for `qsplit`.
//!
//! Every subcommand writes one JSON document (or CSV with `--format csv`)
//! to stdout or `--out`. Exit codes: 0 success, 1 usage, 2 domain or
//! precondition error, 3 resource cap, 4 internal error, 5 failed report
//! criteria.

pub mod report;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use qsplit::dary_bounds::{dary_report, hard_distribution, hard_tail_matches};
use qsplit::distributions::{DAdicDistribution, DistributionFile};
use qsplit::gbeta::{
    best_upper_bound, curves, curves_csv, empirical_g, g_lb_uniform, g_ub_single_block, inner_max, perturbation_gain,
    scan_1236, two_block_record, two_block_solve, BoundMethod, BoundRecord,
};
use qsplit::hitters::{exact_min_hitter, greedy_hitter, halving_baseline, randomized_hitter, HitterResult};
use qsplit::numerics::{entropy, rational_to_f64};
use qsplit::splitting::{block_partition, check_block_partition, rho_min, rho_min_d, rho_star_min};
use qsplit::strategy::{huffman, is_optimal_question_set, restricted_opt_cost_exact, QuestionSet, QuestionSetFile, VerifyMethod};
use qsplit::{Error, Limits};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "qsplit", version, about = "Optimal question sets for distributional Twenty Questions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the document here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores); results do not depend on it
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Raise every ground-set size cap to at least this n
    #[arg(long, global = true)]
    pub cap_override: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum HitterMethod {
    Exact,
    Random,
    Halving,
    Greedy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VerifyBy {
    Hitting,
    Cost,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BoundBy {
    Uniform,
    Single,
    TwoBlock,
    Best,
    Inner,
    Perturbation,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Minimum maximal relative density over d-adic distributions on n elements
    RhoMin {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        d: u32,
    },
    /// The amount-sequence proxy of rho_min
    RhoStar {
        #[arg(long)]
        n: usize,
    },
    /// Size of a smallest optimal question set, by exact search
    QExact {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        d: u32,
    },
    /// Build an optimal question set
    Hitter {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        d: u32,
        #[arg(long, value_enum, default_value_t = HitterMethod::Exact)]
        method: HitterMethod,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        multiplier: f64,
    },
    /// Check whether a question set is optimal for every distribution
    Verify {
        /// Question-set file
        #[arg(long)]
        questions: PathBuf,
        #[arg(long, value_enum, default_value_t = VerifyBy::Both)]
        method: VerifyBy,
    },
    /// Optimal unrestricted strategy (d-ary Huffman code)
    Huffman {
        /// Comma-separated probabilities
        #[arg(long, conflicts_with = "dist")]
        probs: Option<String>,
        /// Distribution file
        #[arg(long)]
        dist: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        d: u32,
    },
    /// Optimal cost when only the given questions may be asked
    RestrictedCost {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        questions: PathBuf,
    },
    /// Bounds on G(beta)
    GBound {
        #[arg(long, default_value = "5/4")]
        beta: String,
        #[arg(long, value_enum, default_value_t = BoundBy::Best)]
        method: BoundBy,
        #[arg(long, default_value_t = 1)]
        b: u32,
        #[arg(long)]
        s: Option<f64>,
        /// Comma-separated amounts c_0, c_1, ... (inner and perturbation)
        #[arg(long)]
        c: Option<String>,
    },
    /// Upper bound on sup G over beta from the two-block family
    Scan1236 {
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
    },
    /// Single-block and two-block bound curves
    Curves {
        #[arg(long, default_value_t = 1.5)]
        beta_min: f64,
        #[arg(long, default_value_t = 1.999)]
        beta_max: f64,
        #[arg(long, default_value_t = 0.005)]
        step: f64,
    },
    /// log2(rho_min(n))/n for n = beta 2^k
    EmpiricalG {
        #[arg(long, default_value = "5/4")]
        beta: String,
        /// Comma-separated k values
        #[arg(long, default_value = "2,3,4")]
        k: String,
    },
    /// Closed-form d-ary constants
    Dary {
        #[arg(long, default_value_t = 2)]
        d: u32,
    },
    /// The hard d-adic distribution for exponent a
    HardDist {
        #[arg(long, default_value_t = 2)]
        d: u32,
        #[arg(long)]
        a: u32,
    },
    /// Block structure of a sorted d-adic distribution
    BlockPartition {
        #[arg(long)]
        dist: PathBuf,
    },
    /// Run the acceptance suite
    Report {
        #[arg(long, value_enum, default_value_t = report::Profile::Quick)]
        profile: report::Profile,
        /// Comma-separated criterion numbers
        #[arg(long)]
        only: Option<String>,
        /// Scale every tolerance (0 makes a negative control)
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
}

/// What a command produced: a JSON document, optional CSV text, and an
/// optional file the command asked to write.
pub struct Output {
    pub json: Value,
    pub csv: Option<String>,
    pub exit: i32,
}

impl Output {
    fn json(json: Value) -> Self {
        Output { json, csv: None, exit: 0 }
    }
}

pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<Error>() {
        Some(Error::Domain(_)) | Some(Error::Precondition(_)) | Some(Error::Inseparable(..)) => 2,
        Some(Error::ResourceCap(_)) => 3,
        Some(Error::Internal(_)) => 4,
        None => 2,
    }
}

fn usage(msg: String) -> anyhow::Error {
    Error::Domain(msg).into()
}

/// "5/4" or a decimal such as "1.80941", exactly.
pub fn parse_rational(text: &str) -> anyhow::Result<BigRational> {
    let t = text.trim();
    if let Some((a, b)) = t.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| usage(format!("bad rational {t:?}")))?;
        let b: BigInt = b.trim().parse().map_err(|_| usage(format!("bad rational {t:?}")))?;
        if b.is_zero() {
            return Err(usage(format!("zero denominator in {t:?}")));
        }
        return Ok(BigRational::new(a, b));
    }
    let (neg, body) = t.strip_prefix('-').map_or((false, t), |r| (true, r));
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(usage(format!("bad number {t:?}")));
    }
    let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| usage(format!("bad number {t:?}")))?;
    let value = BigRational::new(digits, BigInt::from(10).pow(frac.len() as u32));
    Ok(if neg { -value } else { value })
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> anyhow::Result<Vec<T>> {
    text.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| usage(format!("bad {what} entry {x:?}"))))
        .collect()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("cannot parse {}: {e}", path.display())))
}

fn read_dist(path: &Path) -> anyhow::Result<DAdicDistribution> {
    Ok(DAdicDistribution::from_file(&read_json::<DistributionFile>(path)?)?)
}

fn read_questions(path: &Path) -> anyhow::Result<QuestionSet> {
    Ok(QuestionSet::from_file(&read_json::<QuestionSetFile>(path)?)?)
}

fn exponents(mu: &DAdicDistribution) -> Value {
    json!({ "exponents": mu.sort_key() })
}

fn hitter_json(r: &HitterResult) -> anyhow::Result<Value> {
    Ok(serde_json::to_value(r.to_file())?)
}

fn record_json(r: &BoundRecord) -> anyhow::Result<Value> {
    Ok(serde_json::to_value(r)?)
}

pub fn execute(command: &Command, limits: &Limits) -> anyhow::Result<Output> {
    Ok(match command {
        Command::RhoMin { n, d } => {
            let r = if *d == 2 && *n >= 3 { rho_min(*n, limits)? } else { rho_min_d(*n, *d, limits)? };
            Output::json(json!({
                "n": n,
                "d": d,
                "rho_min": r.rho.to_string(),
                "witness": exponents(&r.witness),
            }))
        }
        Command::RhoStar { n } => {
            let r = rho_star_min(*n, limits)?;
            Output::json(json!({
                "n": n,
                "k": r.k,
                "rho_star": r.rho_star.to_string(),
                "witness": serde_json::to_value(r.witness.to_file())?,
            }))
        }
        Command::QExact { n, d } => {
            let r = exact_min_hitter(*n, *d, limits)?;
            let mut v = hitter_json(&r)?;
            v["q"] = json!(r.size);
            Output::json(v)
        }
        Command::Hitter { n, d, method, seed, multiplier } => {
            let r = match method {
                HitterMethod::Exact => exact_min_hitter(*n, *d, limits)?,
                HitterMethod::Greedy => greedy_hitter(*n, *d, limits)?,
                HitterMethod::Random => randomized_hitter(*n, *d, *seed, *multiplier, limits)?,
                HitterMethod::Halving => {
                    if *d != 2 {
                        return Err(usage("the halving construction is binary".into()));
                    }
                    halving_baseline(*n, limits)?
                }
            };
            Output::json(hitter_json(&r)?)
        }
        Command::Verify { questions, method } => {
            let qs = read_questions(questions)?;
            let m = match method {
                VerifyBy::Hitting => VerifyMethod::Hitting,
                VerifyBy::Cost => VerifyMethod::Cost,
                VerifyBy::Both => VerifyMethod::Both,
            };
            let v = is_optimal_question_set(&qs, m, limits)?;
            Output::json(json!({
                "n": qs.n,
                "d": qs.d,
                "optimal": v.optimal,
                "checked": v.checked,
                "counterexample": v.counterexample.as_ref().map(exponents),
            }))
        }
        Command::Huffman { probs, dist, d } => {
            let (p, base) = match (probs, dist) {
                (Some(text), None) => (parse_list::<f64>(text, "probability")?, *d),
                (None, Some(path)) => {
                    let mu = read_dist(path)?;
                    (mu.probs_f64(), mu.base())
                }
                _ => return Err(usage("give exactly one of --probs and --dist".into())),
            };
            let r = huffman(&p, base)?;
            let mut v = serde_json::to_value(&r)?;
            v["d"] = json!(base);
            v["entropy"] = json!(entropy(&p, base)?);
            Output::json(v)
        }
        Command::RestrictedCost { dist, questions } => {
            let mu = read_dist(dist)?;
            let qs = read_questions(questions)?;
            if qs.n != mu.n() {
                return Err(usage(format!("question set is on {} elements, distribution on {}", qs.n, mu.n())));
            }
            let cost = restricted_opt_cost_exact(&mu, &qs, limits)?;
            let h = mu.entropy_exact();
            Output::json(json!({
                "cost": cost.to_string(),
                "entropy": h.to_string(),
                "optimal": cost == h,
            }))
        }
        Command::GBound { beta, method, b, s, c } => {
            let beta = rational_to_f64(&parse_rational(beta)?);
            let amounts = || -> anyhow::Result<Vec<f64>> {
                let text = c.as_ref().ok_or_else(|| usage("--c is required for this method".into()))?;
                parse_list::<f64>(text, "amount")
            };
            let v = match method {
                BoundBy::Uniform => record_json(&g_lb_uniform())?,
                BoundBy::Single => record_json(&g_ub_single_block(beta, *b)?)?,
                BoundBy::TwoBlock => {
                    let sol = two_block_solve(beta, s.unwrap_or(qsplit::gbeta::TWO_BLOCK_S))?;
                    let mut v = record_json(&two_block_record(&sol))?;
                    v["solution"] = serde_json::to_value(&sol)?;
                    v
                }
                BoundBy::Best => record_json(&best_upper_bound(beta)?)?,
                BoundBy::Inner => {
                    let c = amounts()?;
                    let im = inner_max(&c, *b, beta)?;
                    json!({
                        "beta": beta,
                        "method": "inner",
                        "b": b,
                        "value": im.value,
                        "alpha": im.alpha,
                        "certified": im.certified,
                    })
                }
                BoundBy::Perturbation => {
                    let cert = perturbation_gain(&amounts()?, *b, beta)?;
                    let mut v = record_json(&BoundRecord {
                        beta: Some(beta),
                        method: BoundMethod::Perturbation,
                        b: Some(*b),
                        value: cert.payoff,
                        params: [("gain".to_string(), cert.gain)].into_iter().collect(),
                    })?;
                    v["certificate"] = serde_json::to_value(&cert)?;
                    v
                }
            };
            Output::json(v)
        }
        Command::Scan1236 { step } => {
            let scan = scan_1236(*step)?;
            let mut v = record_json(&scan.record())?;
            v["base"] = json!((-scan.value).exp2());
            Output::json(v)
        }
        Command::Curves { beta_min, beta_max, step } => {
            let rows = curves(*beta_min, *beta_max, *step)?;
            Output { json: serde_json::to_value(&rows)?, csv: Some(curves_csv(&rows)), exit: 0 }
        }
        Command::EmpiricalG { beta, k } => {
            let beta = parse_rational(beta)?;
            let ks = parse_list::<u32>(k, "k")?;
            Output::json(serde_json::to_value(empirical_g(&beta, &ks, limits)?)?)
        }
        Command::Dary { d } => Output::json(serde_json::to_value(dary_report(*d)?)?),
        Command::HardDist { d, a } => {
            let h = hard_distribution(*d, *a)?;
            let mut v = serde_json::to_value(&h)?;
            v["tail_recovered"] = json!(hard_tail_matches(&h)?);
            v["distribution"] = serde_json::to_value(h.mu.to_file())?;
            Output::json(v)
        }
        Command::BlockPartition { dist } => {
            let mu = read_dist(dist)?;
            let bp = block_partition(&mu)?;
            let mut v = serde_json::to_value(&bp)?;
            v["valid"] = json!(check_block_partition(&mu, &bp).is_ok());
            Output::json(v)
        }
        Command::Report { profile, only, tol_scale } => {
            let ids = match only {
                Some(text) => parse_list::<u32>(text, "criterion")?,
                None => vec![],
            };
            let settings = report::Settings { profile: *profile, tol_scale: *tol_scale };
            let suite = report::run_suite(&settings, &ids)?;
            for c in &suite.criteria {
                eprintln!("{}", c.line());
            }
            let exit = if suite.all_pass { 0 } else { 5 };
            Output { json: serde_json::to_value(&suite)?, csv: None, exit }
        }
    })
}

/// Flattens a JSON document into CSV: an array of objects gives one row
/// per element, anything else a single row. Nested values are written as
/// compact JSON.
pub fn to_csv(v: &Value) -> anyhow::Result<String> {
    let rows: Vec<&Value> = match v {
        Value::Array(items) => items.iter().collect(),
        other => vec![other],
    };
    let mut header: Vec<String> = Vec::new();
    for r in &rows {
        if let Value::Object(map) = r {
            for k in map.keys() {
                if !header.contains(k) {
                    header.push(k.clone());
                }
            }
        }
    }
    let cell = |x: Option<&Value>| match x {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
    };
    let mut w = csv::Writer::from_writer(vec![]);
    if header.is_empty() {
        w.write_record(["value"])?;
        for r in &rows {
            w.write_record([cell(Some(r))])?;
        }
    } else {
        w.write_record(&header)?;
        for r in &rows {
            w.write_record(header.iter().map(|k| cell(r.get(k))))?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn render(out: &Output, format: Format) -> anyhow::Result<String> {
    Ok(match format {
        Format::Json => format!("{}\n", serde_json::to_string(&out.json)?),
        Format::Csv => match &out.csv {
            Some(text) => text.clone(),
            None => to_csv(&out.json)?,
        },
    })
}

/// Parses `args`, runs the command and writes its output; returns the exit
/// status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp
                | clap::error::ErrorKind::DisplayVersion
                | clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    if let Some(t) = cli.common.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return 1;
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let mut limits = Limits::from_env();
    if let Some(n) = cli.common.cap_override {
        limits = limits.with_n_override(n);
    }
    let result = execute(&cli.command, &limits).and_then(|out| {
        let text = render(&out, cli.common.format)?;
        match &cli.common.out {
            Some(path) => {
                std::fs::write(path, &text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
                let summary = match &cli.command {
                    Command::Report { .. } => {
                        let total = out.json["criteria"].as_array().map_or(0, |a| a.len());
                        let passed = out.json["criteria"]
                            .as_array()
                            .map_or(0, |a| a.iter().filter(|c| c["pass"] == json!(true)).count());
                        format!("{passed}/{total} criteria passed; report written to {}", path.display())
                    }
                    _ => format!("wrote {}", path.display()),
                };
                println!("{summary}");
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes())?;
            }
        }
        Ok(out.exit)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
