use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use formscan::data::io::{read_csv, write_csv};
use formscan::demos::{self, Answers, DemoSpec};
use formscan::nn::{screen_combinations, Protocol, TrainConfig};
use formscan::pipeline::{
    cross_groups, curves_csv, discover, frequency_json, ranked_csv, render_text, DiscoveryConfig, DiscoveryReport,
    PipelineError, ScreenMode, ScreenSource,
};
use formscan::{parse, DataError, Dataset, GeneratorConfig, Metadata};

#[derive(Parser)]
#[command(name = "formscan", version, about = "Equation discovery by iterative correlation analysis")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthetic demonstration datasets.
    Demo {
        #[command(subcommand)]
        cmd: DemoCmd,
    },
    /// Rank one round of candidates against the output and print the best.
    Rank(RankArgs),
    /// Run the full discovery loop and write a run directory.
    Discover(DiscoverArgs),
    /// Train networks on combinations of given candidate functions.
    Screen(ScreenArgs),
    /// Re-render a run directory's report as text.
    Report {
        #[arg(long)]
        run: PathBuf,
    },
}

#[derive(Subcommand)]
enum DemoCmd {
    /// Write demo{id}.csv, demo{id}.meta.json and demo{id}.answers.json.
    Gen {
        #[arg(long)]
        id: u8,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Rename columns to X1..Xn/Y and strip units and roles.
        #[arg(long)]
        blind: bool,
        /// Standard deviation of Gaussian noise relative to the output's.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    /// Metadata JSON with column roles and dimensions.
    #[arg(long)]
    meta: Option<PathBuf>,
}

#[derive(Args)]
struct LibraryArgs {
    /// Add the rational family `X_i^a (c X_j^b + X_k^d)^n`.
    #[arg(long)]
    rational: bool,
    /// Enforce dimensional consistency (needs metadata).
    #[arg(long)]
    units: bool,
    /// Use the small constrained library (single-feature powers and trig).
    #[arg(long)]
    constrained: bool,
    #[arg(long)]
    seed: Option<u64>,
}

impl LibraryArgs {
    fn apply(&self, cfg: &mut DiscoveryConfig) {
        if self.constrained {
            cfg.generator = GeneratorConfig::constrained();
        }
        if self.rational {
            *cfg = std::mem::take(cfg).with_rational();
        }
        if self.units {
            cfg.generator.unit_constrained = true;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
    }
}

#[derive(Args)]
struct RankArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    lib: LibraryArgs,
    #[arg(long, default_value_t = 20)]
    top_k: usize,
    /// Also write ranked.csv here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DiscoverArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    lib: LibraryArgs,
    /// JSON discovery config; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Screen candidate combinations with small networks afterwards.
    #[arg(long)]
    screen: bool,
    /// Screen pairs of single-feature functions instead of random subsets.
    #[arg(long)]
    cross: bool,
    /// Screen the whole first-round library rather than the ranked lists.
    #[arg(long)]
    screen_library: bool,
    /// Training steps per network.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    top_k: Option<usize>,
    /// Answers file shown next to the result in report.txt.
    #[arg(long)]
    answers: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ScreenArgs {
    #[command(flatten)]
    data: DataArgs,
    /// One candidate expression per line.
    #[arg(long)]
    candidates: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random subsets to train; ignored with --cross.
    #[arg(long, default_value_t = 100)]
    n_trials: usize,
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    #[arg(long, default_value_t = 6)]
    k_max: usize,
    #[arg(long)]
    cross: bool,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Data(d) => Failure::Data(d.to_string()),
            PipelineError::Generator(g) => Failure::Usage(g.to_string()),
            other => Failure::Numeric(other.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Data(format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(io_err(path))
}

fn json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn load(d: &DataArgs) -> Result<Dataset, Failure> {
    Ok(read_csv(&d.data, d.meta.as_deref())?)
}

fn demo_gen(id: u8, n: usize, seed: u64, blind: bool, noise: f64, out: &Path) -> Result<(), Failure> {
    let spec = DemoSpec { id, n_rows: n, seed, blind, noise };
    let demo = demos::generate(&spec).map_err(|e| match e {
        demos::DemoError::UnknownDemo(_) | demos::DemoError::BadNoise(_) => Failure::Usage(e.to_string()),
        other => Failure::Data(other.to_string()),
    })?;
    fs::create_dir_all(out).map_err(io_err(out))?;
    write_csv(&out.join(format!("demo{id}.csv")), &demo.dataset)?;
    Metadata::from_dataset(&demo.dataset).write(&out.join(format!("demo{id}.meta.json")))?;
    write(&out.join(format!("demo{id}.answers.json")), &json(&demo.answers))?;
    println!("wrote demo{id}.csv, demo{id}.meta.json, demo{id}.answers.json to {}", out.display());
    Ok(())
}

fn rank(a: &RankArgs) -> Result<(), Failure> {
    let ds = load(&a.data)?;
    let mut cfg = DiscoveryConfig { max_iterations: 1, detect_dummies: false, composite_pairs: 0, ..Default::default() };
    a.lib.apply(&mut cfg);
    cfg.top_k = a.top_k;
    let report = discover(&ds, &cfg)?;
    let Some(first) = report.iterations.first() else {
        return Err(Failure::Numeric(report.notes.join("; ")));
    };
    for (k, c) in first.ranked.iter().enumerate() {
        println!("{:>3}  {:+.6}  {}", k + 1, c.r, c.expr);
    }
    if let Some(out) = &a.out {
        fs::create_dir_all(out).map_err(io_err(out))?;
        write(&out.join("ranked.csv"), &ranked_csv(&report))?;
    }
    Ok(())
}

fn discover_cmd(a: &DiscoverArgs) -> Result<(), Failure> {
    let ds = load(&a.data)?;
    let mut cfg = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(io_err(p))?;
            serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?
        }
        None => DiscoveryConfig::default(),
    };
    a.lib.apply(&mut cfg);
    if let Some(k) = a.top_k {
        cfg.top_k = k;
    }
    if let Some(m) = a.max_iterations {
        cfg.max_iterations = m;
    }
    if a.screen || a.cross || a.screen_library {
        let mut s = cfg.screen.take().unwrap_or_default();
        if a.cross {
            s.mode = ScreenMode::CrossProduct;
        }
        if a.screen_library {
            s.source = ScreenSource::Library;
        }
        cfg.screen = Some(s);
    }
    if let (Some(steps), Some(s)) = (a.steps, cfg.screen.as_mut()) {
        s.train.steps = steps;
    }
    if cfg.generator.unit_constrained && ds.features().iter().all(|c| c.dimension.is_none()) {
        return Err(Failure::Usage("--units needs metadata with column dimensions".into()));
    }
    let answers: Option<Answers> = match &a.answers {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(io_err(p))?;
            Some(serde_json::from_str(&text).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?)
        }
        None => None,
    };

    let report = discover(&ds, &cfg)?;
    let out = &a.out;
    fs::create_dir_all(out).map_err(io_err(out))?;
    write(&out.join("config.json"), &json(&cfg))?;
    write(&out.join("report.json"), &json(&report))?;
    if let Some(ans) = &answers {
        write(&out.join("answers.json"), &json(ans))?;
    }
    let text = render_text(&report, answers.as_ref());
    write(&out.join("report.txt"), &text)?;
    write(&out.join("ranked.csv"), &ranked_csv(&report))?;
    if let Some(s) = &report.screening {
        write(&out.join("curves.csv"), &curves_csv(s))?;
        write(&out.join("frequency.json"), &frequency_json(s))?;
    }
    print!("{text}");
    Ok(())
}

fn screen(a: &ScreenArgs) -> Result<(), Failure> {
    let ds = load(&a.data)?;
    let text = fs::read_to_string(&a.candidates).map_err(io_err(&a.candidates))?;
    let mut cands = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let e = parse(line)
            .map_err(|e| Failure::Data(format!("{}:{}: {line}: {e}", a.candidates.display(), i + 1)))?;
        if let Some(m) = e.max_feature_index() {
            if m >= ds.n_features() {
                return Err(Failure::Data(format!("{line} references X{} but the data has {} features", m + 1, ds.n_features())));
            }
        }
        cands.push(e);
    }
    let protocol = if a.cross {
        cross_groups(&cands).ok_or_else(|| Failure::Usage("--cross needs single-feature candidates of two features".into()))?
    } else {
        Protocol::Random { n_trials: a.n_trials, k_min: a.k_min, k_max: a.k_max }
    };
    let mut train = TrainConfig::default();
    if let Some(s) = a.steps {
        train.steps = s;
    }
    let outcome = screen_combinations(&cands, &ds, &protocol, &train, a.seed).map_err(|e| Failure::Numeric(e.to_string()))?;
    fs::create_dir_all(&a.out).map_err(io_err(&a.out))?;
    write(&a.out.join("screen.json"), &json(&outcome))?;
    write(&a.out.join("curves.csv"), &curves_csv(&outcome))?;
    write(&a.out.join("frequency.json"), &frequency_json(&outcome))?;
    for f in outcome.frequency.iter().take(20) {
        println!("{:>4}  {}", f.count, f.expr);
    }
    Ok(())
}

fn report(run: &Path) -> Result<(), Failure> {
    let path = run.join("report.json");
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let report: DiscoveryReport =
        serde_json::from_str(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    let ans_path = run.join("answers.json");
    let answers: Option<Answers> = fs::read_to_string(&ans_path).ok().and_then(|t| serde_json::from_str(&t).ok());
    print!("{}", render_text(&report, answers.as_ref()));
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    match cli.cmd {
        Cmd::Demo { cmd: DemoCmd::Gen { id, n, seed, blind, noise, out } } => demo_gen(id, n, seed, blind, noise, &out),
        Cmd::Rank(a) => rank(&a),
        Cmd::Discover(a) => discover_cmd(&a),
        Cmd::Screen(a) => screen(&a),
        Cmd::Report { run } => report(&run),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, kind, msg) = match f {
                Failure::Usage(m) => (1, "usage", m),
                Failure::Data(m) => (2, "data", m),
                Failure::Numeric(m) => (3, "numeric", m),
            };
            eprintln!("error ({kind}): {msg}");
            ExitCode::from(code)
        }
    }
}
