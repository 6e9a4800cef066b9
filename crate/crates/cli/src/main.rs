use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use logiclock::attack::{desynthesis_attack, AttackConfig, ViewMode};
use logiclock::bdd::bdd_from_netlist;
use logiclock::circuit::{parse_bench, write_bench, Netlist};
use logiclock::eval::{output_corruptibility, overhead, recovered_bits, run_campaign, CampaignConfig, Sampling};
use logiclock::locking::{apply_key, lock, LockedNetlist, Provenance, Scheme, Sidecar};
use logiclock::meerkat::{epic_security_audit, meerkat_lock, security_audit, DEFAULT_AUDIT_BUDGET};
use logiclock::rng;
use logiclock::synth::{synthesize, SynthConfig};
use logiclock::Key;

#[derive(Parser)]
#[command(name = "logiclock", version, about = "Lock, attack and audit combinational netlists")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lock a BENCH netlist; writes the locked netlist and a JSON sidecar
    Lock(LockArgs),
    /// Hardwire a key into a locked netlist and simplify
    ApplyKey(ApplyKeyArgs),
    /// Run the desynthesis attack on a locked netlist
    Attack(AttackArgs),
    /// Exact security audit of a small function
    Audit(AuditArgs),
    /// Output corruptibility of a locked netlist
    Corruptibility(CorruptArgs),
    /// Area and depth of a locked netlist relative to a baseline
    Overhead(OverheadArgs),
    /// Run an attack campaign from a JSON config
    Campaign(CampaignArgs),
    /// Print the ROBDD of a netlist, optionally locked, in DOT
    BddDot(BddDotArgs),
}

#[derive(Args)]
struct KeyArgs {
    /// Key as hex, bit 0 first, ceil(r/4) digits
    #[arg(long)]
    key: Option<String>,
    /// Key length r; with --seed alone a random key is drawn
    #[arg(long)]
    key_size: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    /// Synthesis config JSON
    #[arg(long)]
    synth_config: Option<PathBuf>,
}

#[derive(Args)]
struct LockArgs {
    input: PathBuf,
    #[arg(long, default_value = "epic")]
    scheme: String,
    #[command(flatten)]
    key: KeyArgs,
    /// Seed for the key (when generated) and for site selection
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
    /// Lock the input as given instead of synthesizing it first (EPIC)
    #[arg(long)]
    no_synth: bool,
    #[command(flatten)]
    synth: SynthArgs,
}

#[derive(Args)]
struct ApplyKeyArgs {
    input: PathBuf,
    #[command(flatten)]
    key: KeyArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct AttackArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "LOGICLOCK_JOBS", default_value_t = 0)]
    jobs: usize,
    #[arg(long, value_enum, default_value = "resolved")]
    view: ViewArg,
    #[command(flatten)]
    synth: SynthArgs,
    /// Include the per-restart trace
    #[arg(short, long)]
    verbose: bool,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ViewArg {
    Resolved,
    Stripped,
}

#[derive(Args)]
struct AuditArgs {
    input: PathBuf,
    #[arg(long)]
    key_size: usize,
    #[arg(long, default_value = "meerkat")]
    scheme: String,
    /// Cap on enumerated locking outcomes
    #[arg(long, default_value_t = DEFAULT_AUDIT_BUDGET)]
    budget: u64,
    #[command(flatten)]
    synth: SynthArgs,
}

#[derive(Args)]
struct CorruptArgs {
    input: PathBuf,
    #[command(flatten)]
    key: KeyArgs,
    #[arg(long, default_value_t = Sampling::default().inputs)]
    inputs: usize,
    #[arg(long, default_value_t = Sampling::default().keys)]
    keys: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct OverheadArgs {
    locked: PathBuf,
    baseline: PathBuf,
}

#[derive(Args)]
struct CampaignArgs {
    config: PathBuf,
    /// Directory for report.json, cells.csv and runs.csv; JSON goes to stdout otherwise
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, env = "LOGICLOCK_JOBS")]
    jobs: Option<usize>,
}

#[derive(Args)]
struct BddDotArgs {
    input: PathBuf,
    /// Lock the ROBDD with a key of this size before printing
    #[arg(long)]
    key_size: Option<usize>,
    #[arg(long)]
    key: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug)]
struct CliError {
    kind: &'static str,
    message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error: {}: {}", self.kind, self.message)
    }
}

fn fail(kind: &'static str, e: impl fmt::Display) -> CliError {
    CliError {
        kind,
        message: e.to_string(),
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| fail("io", format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| fail("io", format!("{}: {e}", path.display())))
}

fn read_netlist(path: &Path) -> Result<Netlist> {
    parse_bench(&read(path)?).map_err(|e| fail("parse", format!("{}: {e}", path.display())))
}

fn sidecar_path(bench: &Path) -> PathBuf {
    let mut s = bench.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn read_sidecar(bench: &Path) -> Result<Option<Sidecar>> {
    let path = sidecar_path(bench);
    if !path.exists() {
        return Ok(None);
    }
    serde_json::from_str(&read(&path)?).map(Some).map_err(|e| fail("config", format!("{}: {e}", path.display())))
}

fn read_locked(path: &Path) -> Result<LockedNetlist> {
    let netlist = read_netlist(path)?;
    match read_sidecar(path)? {
        Some(s) => LockedNetlist::new(netlist, s.key_inputs, Provenance { scheme: s.scheme, seed: s.seed }),
        None => LockedNetlist::from_key_input_names(netlist, Provenance { scheme: "unknown".into(), seed: 0 }),
    }
    .map_err(|e| fail("lock", e))
}

fn synth_config(args: &SynthArgs) -> Result<SynthConfig> {
    match &args.synth_config {
        None => Ok(SynthConfig::default()),
        Some(p) => SynthConfig::from_json(&read(p)?).map_err(|e| fail("config", e)),
    }
}

/// The key from `--key`, or one drawn from `seed` when only `--key-size` is given.
fn resolve_key(args: &KeyArgs, seed: u64, allow_random: bool) -> Result<Key> {
    match (&args.key, args.key_size) {
        (Some(hex), size) => {
            let digits = hex.trim().trim_start_matches("0x").len();
            Key::from_hex(hex, size.unwrap_or(4 * digits)).map_err(|e| fail("key", e))
        }
        (None, Some(r)) if allow_random => Key::random(r, &mut rng::seeded(seed)).map_err(|e| fail("key", e)),
        _ => Err(fail("usage", "give --key (hex) or --key-size")),
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| fail("io", e))?;
    match out {
        Some(p) => write(p, &format!("{text}\n")),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn cmd_lock(a: LockArgs) -> Result<()> {
    let scheme: Scheme = a.scheme.parse().map_err(|e| fail("lock", e))?;
    let key = resolve_key(&a.key, a.seed, true)?;
    let synth = synth_config(&a.synth)?;
    let input = read_netlist(&a.input)?;
    let source = if scheme == Scheme::Epic && !a.no_synth {
        synthesize(&input, &synth).map_err(|e| fail("synth", e))?
    } else {
        input
    };
    let locked = lock(scheme.id(), &source, &key, a.seed, &synth).map_err(|e| fail("lock", e))?;
    write(&a.output, &write_bench(locked.netlist()))?;
    emit(&locked.sidecar(Some(&key)), Some(&sidecar_path(&a.output)))
}

fn cmd_apply_key(a: ApplyKeyArgs) -> Result<()> {
    let locked = read_locked(&a.input)?;
    let args = KeyArgs {
        key: a.key.key,
        key_size: a.key.key_size.or(Some(locked.key_len())),
    };
    let key = resolve_key(&args, 0, false)?;
    let n = apply_key(&locked, &key).map_err(|e| fail("lock", e))?;
    let text = write_bench(&n);
    match a.output {
        Some(p) => write(&p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct AttackOutput {
    #[serde(flatten)]
    result: logiclock::attack::AttackResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    recovered_bits: Option<usize>,
}

fn cmd_attack(a: AttackArgs) -> Result<()> {
    let locked = read_locked(&a.input)?;
    let cfg = AttackConfig {
        restarts: a.restarts,
        seed: a.seed,
        synth: synth_config(&a.synth)?,
        jobs: a.jobs,
        view: match a.view {
            ViewArg::Resolved => ViewMode::Resolved,
            ViewArg::Stripped => ViewMode::Stripped,
        },
    };
    let mut result = desynthesis_attack(&locked, &cfg).map_err(|e| fail("attack", e))?;
    if !a.verbose {
        result.trace.clear();
    }
    let truth = read_sidecar(&a.input)?
        .and_then(|s| s.key)
        .and_then(|h| Key::from_hex(&h, locked.key_len()).ok());
    let recovered_bits = truth.and_then(|k| recovered_bits(&result.best_guess, &k).ok());
    emit(&AttackOutput { result, recovered_bits }, None)
}

fn cmd_audit(a: AuditArgs) -> Result<()> {
    let n = read_netlist(&a.input)?;
    let report = match a.scheme.parse::<Scheme>().map_err(|e| fail("lock", e))? {
        Scheme::Meerkat => security_audit(&n, a.key_size, None, a.budget),
        Scheme::Epic => epic_security_audit(&n, a.key_size, &synth_config(&a.synth)?, a.budget),
    }
    .map_err(|e| fail("audit", e))?;
    emit(&report, None)
}

fn cmd_corruptibility(a: CorruptArgs) -> Result<()> {
    let locked = read_locked(&a.input)?;
    let key = match (&a.key.key, a.key.key_size) {
        (None, None) => read_sidecar(&a.input)?
            .and_then(|s| s.key)
            .ok_or_else(|| fail("usage", "give --key or a sidecar with the key"))
            .and_then(|h| Key::from_hex(&h, locked.key_len()).map_err(|e| fail("key", e)))?,
        _ => resolve_key(
            &KeyArgs {
                key: a.key.key.clone(),
                key_size: a.key.key_size.or(Some(locked.key_len())),
            },
            0,
            false,
        )?,
    };
    let sampling = Sampling {
        inputs: a.inputs,
        keys: a.keys,
        ..Sampling::default()
    };
    let c = output_corruptibility(&locked, &key, &sampling, a.seed).map_err(|e| fail("eval", e))?;
    emit(&c, None)
}

fn cmd_overhead(a: OverheadArgs) -> Result<()> {
    let o = overhead(&read_netlist(&a.locked)?, &read_netlist(&a.baseline)?).map_err(|e| fail("eval", e))?;
    emit(&o, None)
}

fn cmd_campaign(a: CampaignArgs) -> Result<()> {
    let mut cfg: CampaignConfig = serde_json::from_str(&read(&a.config)?).map_err(|e| fail("config", e))?;
    if let Some(j) = a.jobs {
        cfg.jobs = j;
    }
    let base = a.config.parent().unwrap_or(Path::new("."));
    for b in &mut cfg.benchmarks {
        if b.is_relative() {
            *b = base.join(&*b);
        }
    }
    let report = run_campaign(&cfg);
    match a.output {
        None => emit(&report, None),
        Some(dir) => {
            fs::create_dir_all(&dir).map_err(|e| fail("io", format!("{}: {e}", dir.display())))?;
            write(&dir.join("report.json"), &format!("{}\n", report.to_json()))?;
            write(&dir.join("cells.csv"), &report.cells_csv().map_err(|e| fail("io", e))?)?;
            write(&dir.join("runs.csv"), &report.runs_csv().map_err(|e| fail("io", e))?)
        }
    }
}

fn cmd_bdd_dot(a: BddDotArgs) -> Result<()> {
    let n = read_netlist(&a.input)?;
    let forest = bdd_from_netlist(&n, None).map_err(|e| fail("bdd", e))?;
    let dot = if a.key.is_some() || a.key_size.is_some() {
        let key = resolve_key(
            &KeyArgs {
                key: a.key,
                key_size: a.key_size,
            },
            a.seed,
            true,
        )?;
        meerkat_lock(forest, &key, a.seed).map_err(|e| fail("lock", e))?.to_dot()
    } else {
        forest.to_dot()
    };
    match a.output {
        Some(p) => write(&p, &dot),
        None => {
            print!("{dot}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Lock(a) => cmd_lock(a),
        Command::ApplyKey(a) => cmd_apply_key(a),
        Command::Attack(a) => cmd_attack(a),
        Command::Audit(a) => cmd_audit(a),
        Command::Corruptibility(a) => cmd_corruptibility(a),
        Command::Overhead(a) => cmd_overhead(a),
        Command::Campaign(a) => cmd_campaign(a),
        Command::BddDot(a) => cmd_bdd_dot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
    }
}
