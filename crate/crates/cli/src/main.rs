//! The `vhss` command line: parameter derivation, key generation,
//! encryption, per-server evaluation, verification, security games, and
//! benchmarks. All persistent objects cross process boundaries in the binary
//! wire format.
//!
//! Exit codes: 0 success, 1 verification rejected or a game failed its gate,
//! 2 validation or argument error, 3 I/O or wire-format error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::Zero;

use vhss_cli::games::{run_correctness_game, run_hiding_game, run_verifiability_game, Tamper};
use vhss_cli::progen::ProgenConfig;
use vhss_cli::{bench, oracle, profile, progen};
use vhss_core::pke::PkeParams;
use vhss_core::program::{validate, Program, ValidatedProgram};
use vhss_core::ring::RingElement;
use vhss_core::sampling::RngHandle;
use vhss_core::vhss::{self, Evaluator, VerifyOutcome};
use vhss_core::{params, wire, Error};

const EXIT_REJECT: i32 = 1;
const EXIT_VALIDATION: i32 = 2;
const EXIT_FORMAT: i32 = 3;

struct Failure {
    code: i32,
    msg: String,
}

type CliResult<T> = Result<T, Failure>;

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::Wire(_) => EXIT_FORMAT,
            _ => EXIT_VALIDATION,
        };
        Failure {
            code,
            msg: err.to_string(),
        }
    }
}

fn arg_error(msg: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_VALIDATION,
        msg: msg.into(),
    }
}

#[derive(Parser)]
#[command(
    name = "vhss",
    version,
    about = "Two-server verifiable homomorphic secret sharing"
)]
struct Cli {
    /// Hex seed (64 chars) for all randomness; VHSS_SEED is honored when the
    /// flag is absent. Without either, the OS entropy source is used.
    #[arg(long, global = true, value_name = "HEX")]
    seed: Option<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parameter sets.
    #[command(subcommand)]
    Params(ParamsCmd),
    /// Generate the public, verification, and evaluation keys.
    Keygen(KeygenArgs),
    /// Encrypt a plaintext value under a public key.
    Encrypt(EncryptArgs),
    /// Run one server's share of an evaluation.
    Eval(EvalArgs),
    /// Combine two partial results and verify the tag.
    Verify(VerifyArgs),
    /// Run a security game and print its report.
    Game(GameArgs),
    /// Time the evaluation subroutines.
    Bench(BenchArgs),
    /// End-to-end smoke test on small derived parameters.
    Selftest,
}

#[derive(Subcommand)]
enum ParamsCmd {
    /// Derive a parameter set and write it to a file.
    Derive(DeriveArgs),
}

#[derive(Args)]
struct DeriveArgs {
    /// Plaintext magnitude bound, decimal or 2^k.
    #[arg(long, required_unless_present = "profile", conflicts_with = "profile")]
    bound: Option<String>,
    /// Named profile: toy, toy-exact[=B], table2=[lg B].
    #[arg(long)]
    profile: Option<String>,
    /// Ring dimension override (power of two); only with --bound.
    #[arg(long)]
    n: Option<usize>,
    /// Statistical security parameter; only with --bound.
    #[arg(long)]
    kappa: Option<u32>,
    /// Noise standard deviation; only with --bound.
    #[arg(long)]
    sigma: Option<u64>,
    /// Ciphertext addition budget; only with --bound.
    #[arg(long)]
    b_add: Option<u64>,
    /// Output parameter file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct KeygenArgs {
    #[arg(long)]
    params: PathBuf,
    /// Directory that receives pk.vhss, vk.vhss, ek1.vhss, ek2.vhss.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EncryptArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    pk: PathBuf,
    /// Plaintext: a signed integer, or comma-separated polynomial
    /// coefficients starting at degree 0.
    #[arg(long)]
    value: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    params: PathBuf,
    /// Which server this invocation plays; must match the evaluation key.
    #[arg(long)]
    server: u8,
    #[arg(long)]
    ek: PathBuf,
    /// Program file: text, or a packed program object.
    #[arg(long)]
    program: PathBuf,
    /// One ciphertext file per program input, in input order.
    #[arg(long = "ct", value_name = "FILE")]
    cts: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    vk: PathBuf,
    /// Server 1's partial result.
    #[arg(long)]
    p1: PathBuf,
    /// Server 2's partial result.
    #[arg(long)]
    p2: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum GameKind {
    Correctness,
    Verifiability,
    Hiding,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Uniform,
    Coeff,
    ScaledTag,
    Stale,
}

impl StrategyArg {
    fn tamper(self) -> Tamper {
        match self {
            StrategyArg::Uniform => Tamper::UniformReplace,
            StrategyArg::Coeff => Tamper::CoeffPerturb,
            StrategyArg::ScaledTag => Tamper::ScaledTag,
            StrategyArg::Stale => Tamper::StaleReplay,
        }
    }
}

#[derive(Args)]
struct GameArgs {
    #[arg(value_enum)]
    which: GameKind,
    #[arg(long, default_value = "toy")]
    profile: String,
    /// Trials (correctness, verifiability) or samples (hiding).
    #[arg(long)]
    trials: Option<u64>,
    /// Honest evaluation contexts pooled by the verifiability game.
    #[arg(long, default_value_t = 8)]
    contexts: usize,
    /// Restrict the verifiability game to one tampering strategy.
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "toy")]
    profile: String,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// Also time monomial chains of increasing degree.
    #[arg(long)]
    sweep: bool,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            std::process::exit(f.code);
        }
    }
}

fn run(cli: Cli) -> CliResult<i32> {
    let seed = cli.seed.clone();
    match cli.cmd {
        Cmd::Params(ParamsCmd::Derive(args)) => cmd_derive(args),
        Cmd::Keygen(args) => cmd_keygen(args, &seed),
        Cmd::Encrypt(args) => cmd_encrypt(args, &seed),
        Cmd::Eval(args) => cmd_eval(args),
        Cmd::Verify(args) => cmd_verify(args),
        Cmd::Game(args) => cmd_game(args, &seed),
        Cmd::Bench(args) => cmd_bench(args, &seed),
        Cmd::Selftest => cmd_selftest(),
    }
}

fn make_rng(seed: &Option<String>) -> CliResult<RngHandle> {
    let spec = match seed {
        Some(s) => Some(s.clone()),
        None => std::env::var("VHSS_SEED").ok(),
    };
    match spec {
        None => Ok(RngHandle::from_entropy()),
        Some(s) => {
            let bytes = hex::decode(s.trim())
                .map_err(|e| arg_error(format!("seed is not valid hex: {e}")))?;
            let arr: [u8; 32] = bytes
                .try_into()
                .map_err(|_| arg_error("seed must be exactly 32 bytes of hex"))?;
            Ok(RngHandle::from_seed(arr))
        }
    }
}

fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| Failure {
        code: EXIT_FORMAT,
        msg: format!("reading {}: {e}", path.display()),
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| Failure {
        code: EXIT_FORMAT,
        msg: format!("writing {}: {e}", path.display()),
    })
}

fn load_params(path: &Path) -> CliResult<PkeParams> {
    Ok(wire::decode_params(&read_file(path)?)?)
}

fn print_params(params: &PkeParams, security: Option<f64>) {
    println!("n={}", params.n);
    println!("lg_p={}", params.p.bits() - 1);
    println!("lg_q={}", params.q.bits() - 1);
    println!("r={}", params.r.value());
    println!("b_ct={}", params.b_ct);
    println!("b_add={}", params.b_add);
    if let Some(sec) = security {
        println!("security={sec}");
    }
    println!("digest={}", hex::encode(wire::params_digest(params)));
}

fn cmd_derive(args: DeriveArgs) -> CliResult<i32> {
    let overrides =
        args.n.is_some() || args.kappa.is_some() || args.sigma.is_some() || args.b_add.is_some();
    let (params, security) = match (&args.bound, &args.profile) {
        (Some(bound), None) => {
            let mut req = params::ParamRequest::new(profile::parse_magnitude(bound)?);
            req.n = args.n;
            if let Some(k) = args.kappa {
                req.kappa = k;
            }
            if let Some(s) = args.sigma {
                req.sigma = s;
            }
            if let Some(b) = args.b_add {
                req.b_add = b;
            }
            let derived = params::derive(&req)?;
            (derived.pke, derived.security)
        }
        (None, Some(spec)) => {
            if overrides {
                return Err(arg_error(
                    "--n, --kappa, --sigma, and --b-add require --bound",
                ));
            }
            (profile::parse_profile(spec)?.1, None)
        }
        _ => return Err(arg_error("exactly one of --bound or --profile")),
    };
    write_file(&args.out, &wire::encode_params(&params))?;
    print_params(&params, security);
    println!("wrote={}", args.out.display());
    Ok(0)
}

fn cmd_keygen(args: KeygenArgs, seed: &Option<String>) -> CliResult<i32> {
    let params = load_params(&args.params)?;
    let mut rng = make_rng(seed)?;
    let keys = vhss::gen(&params, &mut rng)?;
    let files = [
        ("pk.vhss", wire::encode_public_key(&params, &keys.pk)),
        ("vk.vhss", wire::encode_verify_key(&params, &keys.vk)),
        ("ek1.vhss", wire::encode_eval_key(&params, &keys.ek1)),
        ("ek2.vhss", wire::encode_eval_key(&params, &keys.ek2)),
    ];
    for (name, bytes) in files {
        let path = args.out_dir.join(name);
        write_file(&path, &bytes)?;
        println!("wrote={}", path.display());
    }
    Ok(0)
}

fn parse_value(s: &str) -> CliResult<Vec<BigInt>> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<BigInt>()
                .map_err(|_| arg_error(format!("bad coefficient {part:?}")))
        })
        .collect()
}

fn cmd_encrypt(args: EncryptArgs, seed: &Option<String>) -> CliResult<i32> {
    let params = load_params(&args.params)?;
    let pk = wire::decode_public_key(&params, &read_file(&args.pk)?)?;
    let coeffs = parse_value(&args.value)?;
    if coeffs.len() > params.n {
        return Err(arg_error(format!(
            "{} coefficients exceed ring dimension {}",
            coeffs.len(),
            params.n
        )));
    }
    let x = RingElement::from_signed(&coeffs, params.n, &params.r);
    let mut rng = make_rng(seed)?;
    let ct = vhss::enc(&params, &pk, &x, &mut rng)?;
    write_file(&args.out, &wire::encode_ciphertext(&params, &ct))?;
    println!("wrote={}", args.out.display());
    Ok(0)
}

fn load_program(params: &PkeParams, path: &Path) -> CliResult<ValidatedProgram> {
    let bytes = read_file(path)?;
    let program = if wire::peek_kind(&bytes).is_ok() {
        wire::decode_program(params, &bytes)?
    } else {
        let text = String::from_utf8(bytes).map_err(|_| {
            arg_error(format!(
                "{} is neither a wire object nor UTF-8 text",
                path.display()
            ))
        })?;
        Program::parse(&text)?
    };
    Ok(validate(program, params)?)
}

fn cmd_eval(args: EvalArgs) -> CliResult<i32> {
    let params = load_params(&args.params)?;
    let ek = wire::decode_eval_key(&params, &read_file(&args.ek)?)?;
    if ek.server.index() != args.server {
        return Err(arg_error(format!(
            "--server {} but the key belongs to server {}",
            args.server,
            ek.server.index()
        )));
    }
    let prog = load_program(&params, &args.program)?;
    if args.cts.len() != prog.n_inputs() {
        return Err(arg_error(format!(
            "program takes {} inputs, got {} --ct files",
            prog.n_inputs(),
            args.cts.len()
        )));
    }
    let mut cts = Vec::with_capacity(args.cts.len());
    for path in &args.cts {
        cts.push(wire::decode_ciphertext(&params, &read_file(path)?)?);
    }
    let partial = Evaluator::new(&params, &ek).eval(&cts, &prog)?;
    write_file(&args.out, &wire::encode_partial(&params, &partial))?;
    println!("wrote={}", args.out.display());
    Ok(0)
}

/// Centered coefficients, trailing zeros trimmed, degree 0 first.
fn render_value(y: &RingElement) -> String {
    let mut coeffs = y.centered();
    while coeffs.len() > 1 && coeffs.last() == Some(&BigInt::zero()) {
        coeffs.pop();
    }
    coeffs
        .iter()
        .map(BigInt::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn cmd_verify(args: VerifyArgs) -> CliResult<i32> {
    let params = load_params(&args.params)?;
    let vk = wire::decode_verify_key(&params, &read_file(&args.vk)?)?;
    let p1 = wire::decode_partial(&params, &read_file(&args.p1)?)?;
    let p2 = wire::decode_partial(&params, &read_file(&args.p2)?)?;
    match vhss::ver(&vk, &p1, &p2)? {
        VerifyOutcome::Accept(y) => {
            println!("{}", render_value(&y));
            Ok(0)
        }
        VerifyOutcome::Reject => {
            println!("REJECT");
            Ok(EXIT_REJECT)
        }
    }
}

fn cmd_game(args: GameArgs, seed: &Option<String>) -> CliResult<i32> {
    let (name, params) = profile::parse_profile(&args.profile)?;
    if args.strategy.is_some() && !matches!(args.which, GameKind::Verifiability) {
        return Err(arg_error(
            "--strategy only applies to the verifiability game",
        ));
    }
    let mut rng = make_rng(seed)?;
    let report = match args.which {
        GameKind::Correctness => {
            let trials = args.trials.unwrap_or(200);
            let cfg = if params.n <= 64 {
                ProgenConfig::toy(&params)
            } else {
                ProgenConfig::full(&params)
            };
            run_correctness_game(&params, trials, &cfg, &mut rng)?
        }
        GameKind::Verifiability => {
            let trials = args.trials.unwrap_or(10_000);
            let tamper = args.strategy.map(StrategyArg::tamper);
            run_verifiability_game(&params, trials, args.contexts, tamper, &mut rng)?
        }
        GameKind::Hiding => {
            let samples = args.trials.unwrap_or(10_000);
            run_hiding_game(&params, samples, &mut rng)?
        }
    };
    println!("profile={name}");
    println!("{report}");
    Ok(if report.pass { 0 } else { EXIT_REJECT })
}

fn cmd_bench(args: BenchArgs, seed: &Option<String>) -> CliResult<i32> {
    let (name, params) = profile::parse_profile(&args.profile)?;
    let mut rng = make_rng(seed)?;
    println!("profile={name}");
    let rows = bench::bench_subroutines(&params, args.reps, &mut rng)?;
    print!("{}", bench::render_rows(&rows));
    if args.sweep {
        let degrees = [3usize, 5, 7, 9, 11];
        for (d, ms) in bench::degree_sweep(&params, &degrees, args.reps, &mut rng)? {
            println!("eval_degree_{d}_ms={ms:.3}");
        }
    }
    Ok(0)
}

fn cmd_selftest() -> CliResult<i32> {
    let params = params::toy_exact(16)?;
    let mut rng = RngHandle::from_seed([71u8; 32]);

    let bytes = wire::encode_params(&params);
    let back = wire::decode_params(&bytes)?;
    if back != params {
        return Err(arg_error("parameter round trip changed the parameters"));
    }
    println!("ok params round trip");

    let keys = vhss::gen(&params, &mut rng)?;
    let text = "inputs 2 bound 2,3\nload r0 ct0\nmult r1 r0 ct1\noutput r1\n";
    let prog = validate(Program::parse(text)?, &params)?;
    let x1 = RingElement::from_i64s(&[2], params.n, &params.r);
    let x2 = RingElement::from_i64s(&[3], params.n, &params.r);
    let cts = [
        vhss::enc(&params, &keys.pk, &x1, &mut rng)?,
        vhss::enc(&params, &keys.pk, &x2, &mut rng)?,
    ];

    let p1 = Evaluator::new(&params, &keys.ek1).eval(&cts, &prog)?;
    let p2 = Evaluator::new(&params, &keys.ek2).eval(&cts, &prog)?;
    let p1 = wire::decode_partial(&params, &wire::encode_partial(&params, &p1))?;
    let p2 = wire::decode_partial(&params, &wire::encode_partial(&params, &p2))?;
    match vhss::ver(&keys.vk, &p1, &p2)? {
        VerifyOutcome::Accept(y) if render_value(&y) == "6" => println!("ok eval 2*3 = 6"),
        other => return Err(arg_error(format!("expected Accept(6), got {other:?}"))),
    }

    let toy = params::toy();
    let cfg = ProgenConfig::toy(&toy);
    for _ in 0..50 {
        let prog = progen::random_program(&cfg, &toy, &mut rng)?;
        let inputs = progen::random_inputs(&prog, &toy, &mut rng);
        let a = oracle::plaintext_oracle(&toy, &prog, &inputs)?;
        let b = oracle::recursive_oracle(&toy, &prog, &inputs)?;
        if a != b {
            return Err(arg_error(format!(
                "plaintext oracles disagree on:\n{}",
                prog.program().to_text()
            )));
        }
    }
    println!("ok plaintext oracles agree on 50 random programs");
    println!("selftest passed");
    Ok(0)
}
