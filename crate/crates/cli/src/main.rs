use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use grouprho::asymptotics::{entropy_report, growth_report, SequencePlan};
use grouprho::bounds::{rational_to_decimal, rho_interval, Direction};
use grouprho::cayley::{build_ball_cached, build_ball_with_limit, check_cr, cr_required_radius};
use grouprho::decider::{decide_trivial, Promise};
use grouprho::diagonal::{diagonal_step, in_hard_band, parse_target, replay, DiagonalState};
use grouprho::enumeration::LowerSequence;
use grouprho::presentation::check_small_cancellation;
use grouprho::ser::{parse_decimal, parse_rational};
use grouprho::zdgreen::theta;
use grouprho::{BigRational, Error, Presentation, Ratio, Triviality, WordProblemStrategy};
use serde_json::{json, Value};

const SCHEMA: &str = "grouprho/1";

#[derive(Parser)]
#[command(name = "grouprho", version, about = "Certified spectral-radius, growth and entropy bounds")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Largest ball radius any command may build.
    #[arg(long, default_value_t = 20, global = true)]
    radius_cap: usize,
    /// Worker threads for the parallel paths (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed recorded with the output; every pipeline here is exhaustive.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    /// Directory for cached balls.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Small cancellation report.
    Check {
        presentation: PathBuf,
        /// The λ of C'(λ), as p/q.
        #[arg(long, default_value = "1/6")]
        lambda: String,
    },
    /// Word problem.
    Wp {
        word: String,
        presentation: PathBuf,
        /// Trivial words to enumerate when no decision procedure applies.
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
    },
    /// Certified interval for the spectral radius.
    Rho {
        presentation: PathBuf,
        #[arg(long, default_value_t = 6)]
        n_max: usize,
    },
    /// Growth: exact ball sizes and upper sequences.
    Growth {
        presentation: PathBuf,
        #[arg(long, default_value_t = 6)]
        n_max: usize,
        #[command(flatten)]
        plan: PlanArgs,
    },
    /// Asymptotic entropy: exact H(X_n) and upper sequences.
    Entropy {
        presentation: PathBuf,
        #[arg(long, default_value_t = 6)]
        n_max: usize,
        #[command(flatten)]
        plan: PlanArgs,
    },
    /// Lower spectral sequence from enumerated trivial words.
    LowerSeq {
        presentation: PathBuf,
        /// Trivial words to consume.
        #[arg(long, default_value_t = 1000)]
        k: usize,
        /// Report every this many words.
        #[arg(long, default_value_t = 100)]
        every: usize,
    },
    /// Semi-decision of word triviality.
    Decide {
        word: String,
        presentation: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        /// Assert the spectral-gap promise.
        #[arg(long)]
        promise: bool,
    },
    /// Spectral radius of Z^d with the cubical generators.
    Zd {
        #[arg(long, default_value_t = 5)]
        dim: usize,
        #[arg(long, default_value = "1e-6")]
        width: String,
    },
    /// Diagonalization steps against target reals.
    Diagonal {
        /// Comma-separated targets: decimals or p/q.
        #[arg(long, value_delimiter = ',', required = true)]
        targets: Vec<String>,
        #[arg(long, default_value_t = 1)]
        steps: usize,
        /// Dovetailed triples per step.
        #[arg(long, default_value_t = 200)]
        budget: usize,
    },
    /// Exhaustive centroid-set check.
    CrCheck {
        presentation: PathBuf,
        #[arg(long, default_value_t = 3)]
        r_test: usize,
        /// Ball radius; defaults to the smallest sufficient one.
        #[arg(long)]
        radius: Option<usize>,
    },
}

#[derive(Args)]
struct PlanArgs {
    /// Pairs consumed between checkpoints of the upper sequence.
    #[arg(long, default_value_t = 2048)]
    pairs: usize,
    #[arg(long, default_value_t = 8)]
    checkpoints: usize,
    /// Cap on |S^{≤n}| for the word quotient.
    #[arg(long, default_value_t = 1 << 20)]
    quotient_words: usize,
}

impl PlanArgs {
    fn plan(&self) -> SequencePlan {
        SequencePlan {
            quotient_words: self.quotient_words,
            checkpoints: self.checkpoints,
            pairs_per_checkpoint: self.pairs,
        }
    }
}

enum Failure {
    Usage(String),
    Precondition(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_precondition() {
            Failure::Precondition(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

type Outcome = std::result::Result<Value, Failure>;

fn load(path: &Path) -> std::result::Result<Presentation, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(Presentation::parse(&text)?)
}

fn check_radius(r: usize, cap: usize) -> std::result::Result<(), Failure> {
    if r > cap {
        return Err(Failure::Usage(format!(
            "radius {r} exceeds --radius-cap {cap}"
        )));
    }
    Ok(())
}

fn rational_arg(text: &str, what: &str) -> std::result::Result<BigRational, Failure> {
    parse_rational(text).ok_or_else(|| Failure::Usage(format!("{what}: cannot parse {text:?}")))
}

fn cmd_check(p: &Presentation, lambda: &str) -> Outcome {
    let q = rational_arg(lambda, "--lambda")?;
    let (n, d) = (q.numer().try_into(), q.denom().try_into());
    let (Ok(n), Ok(d)) = (n, d) else {
        return Err(Failure::Usage("--lambda is out of range".into()));
    };
    let r = check_small_cancellation(p, Ratio::new(n, d));
    let worst_ratio = r
        .worst
        .as_ref()
        .map(|w| format!("{}/{}", w.ratio.numer(), w.ratio.denom()));
    Ok(json!({
        "passes": r.passes,
        "worst_ratio": worst_ratio,
        "report": r,
    }))
}

fn cmd_wp(p: &Presentation, word: &str, budget: usize) -> Outcome {
    let w = p.alphabet().parse_word(word)?;
    let (strategy, method) = match WordProblemStrategy::for_presentation(p) {
        Ok(s) => (s, "decision"),
        Err(e) if e.is_precondition() => (
            WordProblemStrategy::Enumeration {
                presentation: p.clone(),
                budget,
            },
            "enumeration",
        ),
        Err(e) => return Err(e.into()),
    };
    let (trivial, status) = match strategy.triviality(&w) {
        Triviality::Trivial => (Some(true), "trivial"),
        Triviality::Nontrivial => (Some(false), "nontrivial"),
        Triviality::NotProven => (None, "not_proven"),
    };
    Ok(json!({
        "word": p.alphabet().format(&w),
        "trivial": trivial,
        "status": status,
        "method": method,
    }))
}

fn cmd_rho(p: &Presentation, n_max: usize, cap: usize) -> Outcome {
    if n_max == 0 {
        return Err(Failure::Usage("--n-max must be at least 1".into()));
    }
    if !p.is_free() {
        check_radius(n_max + 1, cap)?;
    }
    let iv = rho_interval(p, n_max)?;
    Ok(json!({ "n_max": n_max, "interval": iv }))
}

fn cmd_lower_seq(p: &Presentation, k: usize, every: usize) -> Outcome {
    if k == 0 || every == 0 {
        return Err(Failure::Usage("--k and --every must be positive".into()));
    }
    let mut seq = LowerSequence::new(p);
    let mut rows = Vec::new();
    for i in 1..=k {
        seq.step();
        if i % every == 0 || i == k {
            rows.push(json!({ "k": i, "x_k": seq.value() }));
        }
    }
    Ok(json!({ "rows": rows }))
}

fn cmd_decide(p: &Presentation, word: &str, budget: usize, promise: bool) -> Outcome {
    let w = p.alphabet().parse_word(word)?;
    let d = decide_trivial(p, &w, budget, Promise { declared: promise })?;
    Ok(json!({ "word": p.alphabet().format(&w), "decision": d }))
}

fn cmd_zd(dim: usize, width: &str) -> Outcome {
    let w = parse_decimal(width)
        .or_else(|| parse_rational(width))
        .ok_or_else(|| Failure::Usage(format!("--width: cannot parse {width:?}")))?;
    let g = theta(dim, &w)?;
    Ok(json!({
        "d": g.d,
        "N": g.n,
        "theta_lo": g.theta_lo,
        "theta_hi": g.theta_hi,
        "rho_lo": g.rho_lo_decimal,
        "rho_hi": g.rho_hi_decimal,
        "tail_hi": rational_to_decimal(&g.tail_hi, 20, Direction::Up),
    }))
}

fn cmd_diagonal(targets: &[String], steps: usize, budget: usize) -> Outcome {
    let oracles = targets
        .iter()
        .map(|t| parse_target(t))
        .collect::<grouprho::Result<Vec<_>>>()?;
    for (t, o) in targets.iter().zip(&oracles) {
        if in_hard_band(&o.lower(30)) || in_hard_band(&o.upper(30)) {
            eprintln!("warning: target {t} lies in (0.6, 1.4); certification may need a very large budget");
        }
    }
    if steps > oracles.len() {
        return Err(Failure::Usage(format!(
            "{steps} steps need at least {steps} targets"
        )));
    }
    let mut state = DiagonalState::default();
    let mut outcomes = Vec::new();
    for _ in 0..steps {
        let o = diagonal_step(&mut state, &oracles, budget)?;
        let stop = matches!(o, grouprho::diagonal::StepOutcome::Undecided { .. });
        outcomes.push(o);
        if stop {
            break;
        }
    }
    let replayed = replay(&state, &oracles)?;
    Ok(json!({ "steps": outcomes, "state": state, "replayed": replayed }))
}

fn cmd_cr(p: &Presentation, r_test: usize, radius: Option<usize>, g: &Global) -> Outcome {
    let radius = radius.unwrap_or_else(|| cr_required_radius(p, r_test));
    check_radius(radius, g.radius_cap)?;
    let ball = match &g.cache_dir {
        Some(dir) => build_ball_cached(p, radius, dir)?,
        None => {
            let s = WordProblemStrategy::for_presentation(p)?;
            build_ball_with_limit(&s, radius, grouprho::cayley::DEFAULT_VERTEX_LIMIT)?
        }
    };
    let report = check_cr(&ball, p, r_test)?;
    Ok(json!({ "report": report }))
}

fn run(cli: &Cli) -> Outcome {
    let g = &cli.global;
    match &cli.command {
        Command::Check {
            presentation,
            lambda,
        } => cmd_check(&load(presentation)?, lambda),
        Command::Wp {
            word,
            presentation,
            budget,
        } => cmd_wp(&load(presentation)?, word, *budget),
        Command::Rho {
            presentation,
            n_max,
        } => cmd_rho(&load(presentation)?, *n_max, g.radius_cap),
        Command::Growth {
            presentation,
            n_max,
            plan,
        } => {
            check_radius(*n_max, g.radius_cap)?;
            let r = growth_report(&load(presentation)?, *n_max, &plan.plan())?;
            Ok(json!({ "report": r }))
        }
        Command::Entropy {
            presentation,
            n_max,
            plan,
        } => {
            check_radius(*n_max, g.radius_cap)?;
            let r = entropy_report(&load(presentation)?, *n_max, &plan.plan())?;
            Ok(json!({ "report": r }))
        }
        Command::LowerSeq {
            presentation,
            k,
            every,
        } => cmd_lower_seq(&load(presentation)?, *k, *every),
        Command::Decide {
            word,
            presentation,
            budget,
            promise,
        } => cmd_decide(&load(presentation)?, word, *budget, *promise),
        Command::Zd { dim, width } => cmd_zd(*dim, width),
        Command::Diagonal {
            targets,
            steps,
            budget,
        } => cmd_diagonal(targets, *steps, *budget),
        Command::CrCheck {
            presentation,
            r_test,
            radius,
        } => cmd_cr(&load(presentation)?, *r_test, *radius, g),
    }
}

fn render_text(v: &Value) -> String {
    let mut out = String::new();
    if let Value::Object(map) = v {
        for (k, val) in map {
            let shown = match val {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            out.push_str(&format!("{k}: {shown}\n"));
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(mut v) => {
            if let Value::Object(map) = &mut v {
                map.insert("schema".into(), json!(SCHEMA));
                map.insert("seed".into(), json!(cli.global.seed));
            }
            let text = match cli.global.format {
                Format::Json => serde_json::to_string_pretty(&v).expect("json") + "\n",
                Format::Text => render_text(&v),
            };
            // A closed pipe downstream is not an error of ours.
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Precondition(msg)) => {
            eprintln!("precondition violated: {msg}");
            ExitCode::from(3)
        }
    }
}
