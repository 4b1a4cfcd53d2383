//! Command-line front end for the truncated symmetrized-polydisk toolkit:
//! builds truncation windows, assembles boundary symbols into operators,
//! runs the relation check suites and the invariant-limit machinery, and
//! writes JSON reports with CSV matrix exports.
//!
//! Exit codes: 0 when every requested check passes, 1 when a check fails
//! (the report is still written), 2 for an unusable configuration or input.
//! The default tolerance can be overridden with the `SYMGAMMA_TOL`
//! environment variable; an explicit `--tol` wins over the environment.
//! Reports are deterministic for a fixed configuration apart from the
//! `generated_at_unix_seconds` field.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write as IoWrite};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use symgamma::asymptotics::{coefspace_projection_el, eta_map, finite_rank_fl};
use symgamma::error::Error;
use symgamma::gamma::{
    compute_q, extend_via_q, gamma2_pi_embedding, matrix_to_json, nonemptiness_check,
    q_membership_check, read_tuple_json, OperatorTuple, Q_CONVERGENCE_TOL, Q_MAX_ITER, Q_RANK_TOL,
};
use symgamma::linalg::numerical_rank;
use symgamma::operators::{
    assemble_laurent, coordinate_tuple_on, read_matrix_csv, split_blocks, toeplitz,
    write_matrix_csv, write_matrix_sidecar, TruncatedOperator,
};
use symgamma::partitions::{BasisWindow, Side, WindowRef};
use symgamma::relations::{
    check_analytic_characterization, check_brown_halmos, check_gamma_unitary,
    check_product_identities,
};
use symgamma::symbols::SymbolExpansion;

const EXIT_PASS: i32 = 0;
const EXIT_CHECK_FAILED: i32 = 1;
const EXIT_USAGE: i32 = 2;

/// Singular values below this count as zero when the ranks of the
/// coefficient-space projections are reported.
const RANK_TOL: f64 = 1e-8;

/// Tolerance used when neither `--tol` nor `SYMGAMMA_TOL` is given.
const DEFAULT_TOL: f64 = 1e-10;

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests land here too; only real parse
            // problems count as usage errors
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let config = match RunConfig::resolve(&cli) {
        Ok(config) => config,
        Err(msg) => return usage(&msg),
    };
    match execute(&config) {
        Ok(code) => code,
        Err(msg) => usage(&msg),
    }
}

fn usage(msg: &str) -> i32 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}

#[derive(Parser)]
#[command(
    name = "symgamma",
    version,
    about = "Truncated operator toolkit for the symmetrized polydisk"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// List the strict-partition bases of the truncation windows
    #[command(name = "basis")]
    Basis(CommonArgs),
    /// Assemble the two-sided compression of a symbol and export its blocks
    #[command(name = "toeplitz")]
    Toeplitz(CommonArgs),
    /// Check the shift-compression relations for a Toeplitz candidate
    #[command(name = "check-bh")]
    CheckBh(CommonArgs),
    /// Test the commutator characterization of analytic symbols
    #[command(name = "check-analytic")]
    CheckAnalytic(CommonArgs),
    /// Check adjoint, analytic-factor and defect product identities
    #[command(name = "check-products")]
    CheckProducts(CommonArgs),
    /// Compression-norm and projection-rank diagnostics for compactness
    #[command(name = "compact-diag")]
    CompactDiag(CommonArgs),
    /// Invariant limit of the inner products under powers of the last entry
    #[command(name = "gamma-q")]
    GammaQ(CommonArgs),
    /// Extend a tuple to a boundary-normal family on the invariant range
    #[command(name = "gamma-extend")]
    GammaExtend(CommonArgs),
    /// Embed a pair isometrically through its defect chain
    #[command(name = "gamma2-pi")]
    Gamma2Pi(CommonArgs),
    /// Certify a tuple as a commuting-normal boundary family
    #[command(name = "certify-unitary")]
    CertifyUnitary(CommonArgs),
}

impl Cmd {
    fn parts(&self) -> (&'static str, &CommonArgs) {
        match self {
            Cmd::Basis(a) => ("basis", a),
            Cmd::Toeplitz(a) => ("toeplitz", a),
            Cmd::CheckBh(a) => ("check-bh", a),
            Cmd::CheckAnalytic(a) => ("check-analytic", a),
            Cmd::CheckProducts(a) => ("check-products", a),
            Cmd::CompactDiag(a) => ("compact-diag", a),
            Cmd::GammaQ(a) => ("gamma-q", a),
            Cmd::GammaExtend(a) => ("gamma-extend", a),
            Cmd::Gamma2Pi(a) => ("gamma2-pi", a),
            Cmd::CertifyUnitary(a) => ("certify-unitary", a),
        }
    }
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Number of variables of the underlying polydisk
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Truncation bound on the largest partition entry
    #[arg(long = "D", default_value_t = 6)]
    d: i64,
    /// Largest compression level for the diagnostics
    #[arg(long, default_value_t = 4)]
    l_max: usize,
    /// Residual tolerance (default 1e-10, or SYMGAMMA_TOL when set)
    #[arg(long)]
    tol: Option<f64>,
    /// Symbol expansion file: one term per line, `m_1 … m_n re im`
    #[arg(long)]
    symbol: Option<PathBuf>,
    /// Second symbol for the product identities (defaults to the first)
    #[arg(long)]
    symbol2: Option<PathBuf>,
    /// Matrix CSV file with a `.meta.json` sidecar as operator input
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Operator tuple JSON file for the invariant-limit commands
    #[arg(long)]
    tuple: Option<PathBuf>,
    /// Chain truncation length for the pair embedding
    #[arg(long, default_value_t = 60)]
    trunc: usize,
    /// Directory receiving the JSON report and CSV exports
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
    /// Seed echoed into the report for reproducibility bookkeeping
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// A validated invocation: the subcommand name plus every knob it may read.
struct RunConfig {
    command: &'static str,
    n: usize,
    d: i64,
    l_max: usize,
    tol: f64,
    symbol: Option<PathBuf>,
    symbol2: Option<PathBuf>,
    matrix: Option<PathBuf>,
    tuple: Option<PathBuf>,
    trunc: usize,
    output_dir: PathBuf,
    seed: u64,
}

impl RunConfig {
    fn resolve(cli: &Cli) -> Result<Self, String> {
        let (command, a) = cli.command.parts();
        if a.n == 0 {
            return Err("--n must be at least 1".into());
        }
        if a.d < a.n as i64 - 1 {
            return Err(format!(
                "--D must be at least n-1 = {} so the window is nonempty",
                a.n as i64 - 1
            ));
        }
        if a.l_max == 0 {
            return Err("--l-max must be at least 1".into());
        }
        if a.trunc == 0 {
            return Err("--trunc must be at least 1".into());
        }
        let tol = match a.tol {
            Some(t) => t,
            None => match std::env::var("SYMGAMMA_TOL") {
                Ok(raw) => raw
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| format!("SYMGAMMA_TOL={raw:?} is not a number: {e}"))?,
                Err(_) => DEFAULT_TOL,
            },
        };
        if !(tol.is_finite() && tol > 0.0) {
            return Err(format!("tolerance must be a positive number, got {tol}"));
        }
        Ok(RunConfig {
            command,
            n: a.n,
            d: a.d,
            l_max: a.l_max,
            tol,
            symbol: a.symbol.clone(),
            symbol2: a.symbol2.clone(),
            matrix: a.matrix.clone(),
            tuple: a.tuple.clone(),
            trunc: a.trunc,
            output_dir: a.output_dir.clone(),
            seed: a.seed,
        })
    }

    fn to_json(&self) -> Value {
        json!({
            "command": self.command,
            "n": self.n,
            "D": self.d,
            "l_max": self.l_max,
            "tol": self.tol,
            "symbol": path_json(&self.symbol),
            "symbol2": path_json(&self.symbol2),
            "matrix": path_json(&self.matrix),
            "tuple": path_json(&self.tuple),
            "trunc": self.trunc,
            "output_dir": self.output_dir.display().to_string(),
            "seed": self.seed,
        })
    }
}

fn path_json(p: &Option<PathBuf>) -> Value {
    match p {
        Some(p) => json!(p.display().to_string()),
        None => Value::Null,
    }
}

fn execute(config: &RunConfig) -> Result<i32, String> {
    fs::create_dir_all(&config.output_dir).map_err(|e| {
        format!(
            "cannot create output directory {}: {e}",
            config.output_dir.display()
        )
    })?;
    match config.command {
        "basis" => cmd_basis(config),
        "toeplitz" => cmd_toeplitz(config),
        "check-bh" => cmd_check_bh(config),
        "check-analytic" => cmd_check_analytic(config),
        "check-products" => cmd_check_products(config),
        "compact-diag" => cmd_compact_diag(config),
        "gamma-q" => cmd_gamma_q(config),
        "gamma-extend" => cmd_gamma_extend(config),
        "gamma2-pi" => cmd_gamma2_pi(config),
        "certify-unitary" => cmd_certify_unitary(config),
        _ => unreachable!("unknown command"),
    }
}

// ---------------------------------------------------------------------------
// subcommands

fn cmd_basis(config: &RunConfig) -> Result<i32, String> {
    let mut windows = Map::new();
    let mut counts = Map::new();
    for (label, side) in [
        ("analytic", Side::Analytic),
        ("coanalytic", Side::Coanalytic),
        ("laurent", Side::Laurent),
    ] {
        let w = BasisWindow::enumerate(config.n, config.d, side).map_err(|e| e.to_string())?;
        counts.insert(label.into(), json!(w.len()));
        windows.insert(
            label.into(),
            serde_json::to_value(&w).map_err(|e| e.to_string())?,
        );
    }
    let mut body = Map::new();
    body.insert("counts".into(), Value::Object(counts));
    body.insert("windows".into(), Value::Object(windows));
    write_report(config, None, body)
}

fn cmd_toeplitz(config: &RunConfig) -> Result<i32, String> {
    let phi = load_symbol(config, config.symbol.as_deref())?;
    let full = assemble_laurent(&phi, config.d).map_err(|e| e.to_string())?;
    let blocks = split_blocks(&full).map_err(|e| e.to_string())?;
    let named: [(&str, &TruncatedOperator); 5] = [
        ("laurent", &full),
        ("toeplitz", &blocks.toeplitz),
        ("hankel", &blocks.hankel),
        ("co-hankel", &blocks.co_hankel),
        ("dual-toeplitz", &blocks.dual_toeplitz),
    ];
    let mut exports = Map::new();
    for (name, op) in named {
        let csv = config.output_dir.join(format!("{name}.csv"));
        let meta = config.output_dir.join(format!("{name}.meta.json"));
        export_matrix(op, &csv, &meta)?;
        exports.insert(
            name.into(),
            json!({
                "rows": op.matrix().nrows(),
                "cols": op.matrix().ncols(),
                "norm": op.norm(),
                "matrix_csv": csv.display().to_string(),
                "sidecar": meta.display().to_string(),
            }),
        );
    }
    let mut body = Map::new();
    body.insert("symbol_term_count".into(), json!(phi.terms().count()));
    body.insert("exports".into(), Value::Object(exports));
    write_report(config, None, body)
}

fn cmd_check_bh(config: &RunConfig) -> Result<i32, String> {
    let (op, input) = operator_input(config)?;
    let tuple = coordinate_tuple_on(op.domain()).map_err(|e| e.to_string())?;
    match check_brown_halmos(&op, &tuple, config.tol) {
        Ok(rep) => {
            let passed = rep.passed;
            let mut body = Map::new();
            body.insert("input".into(), input);
            body.insert(
                "check".into(),
                serde_json::to_value(&rep).map_err(|e| e.to_string())?,
            );
            write_report(config, Some(passed), body)
        }
        Err(e) if is_negative_verdict(&e) => {
            let mut body = Map::new();
            body.insert("input".into(), input);
            fail_report(config, body, &e)
        }
        Err(e) => Err(e.to_string()),
    }
}

fn cmd_check_analytic(config: &RunConfig) -> Result<i32, String> {
    let phi = load_symbol(config, config.symbol.as_deref())?;
    match check_analytic_characterization(&phi, config.d, config.tol) {
        Ok(rep) => {
            // the command asserts membership in the analytic class, so a
            // correctly detected non-analytic symbol is a failing check
            let passed = rep.symbol_is_analytic && rep.consistent;
            let mut body = Map::new();
            body.insert(
                "analysis".into(),
                serde_json::to_value(&rep).map_err(|e| e.to_string())?,
            );
            write_report(config, Some(passed), body)
        }
        Err(e) if is_negative_verdict(&e) => fail_report(config, Map::new(), &e),
        Err(e) => Err(e.to_string()),
    }
}

fn cmd_check_products(config: &RunConfig) -> Result<i32, String> {
    let phi = load_symbol(config, config.symbol.as_deref())?;
    let psi = match &config.symbol2 {
        Some(_) => load_symbol(config, config.symbol2.as_deref())?,
        None => phi.clone(),
    };
    match check_product_identities(&phi, &psi, config.d, config.tol) {
        Ok(rep) => {
            let passed = rep.passed;
            let mut body = Map::new();
            body.insert(
                "check".into(),
                serde_json::to_value(&rep).map_err(|e| e.to_string())?,
            );
            write_report(config, Some(passed), body)
        }
        Err(e) if is_negative_verdict(&e) => fail_report(config, Map::new(), &e),
        Err(e) => Err(e.to_string()),
    }
}

fn cmd_compact_diag(config: &RunConfig) -> Result<i32, String> {
    let (op, input) = operator_input(config)?;
    let window_n = op.domain().n();
    let window_d = op.domain().bound();
    let mut levels = Vec::new();
    let mut csv = String::from("l,eta_norm,e_rank,f_rank\n");
    let mut exhausted_at = None;
    for l in 1..=config.l_max {
        let eta = match eta_map(&op, l) {
            Ok(eta) => eta,
            // deeper levels need interiors the window cannot host; report
            // how far the sequence got instead of refusing the whole run
            Err(Error::WindowTooSmall(_)) if l > 1 => {
                exhausted_at = Some(l);
                break;
            }
            Err(e) if is_negative_verdict(&e) => {
                let mut body = Map::new();
                body.insert("input".into(), input);
                return fail_report(config, body, &e);
            }
            Err(e) => return Err(e.to_string()),
        };
        let el = coefspace_projection_el(window_n, l, window_d).map_err(|e| e.to_string())?;
        let fl = finite_rank_fl(window_n, l, window_d).map_err(|e| e.to_string())?;
        let e_rank = numerical_rank(el.matrix(), RANK_TOL);
        let f_rank = numerical_rank(fl.matrix(), RANK_TOL);
        csv.push_str(&format!("{l},{:.17e},{e_rank},{f_rank}\n", eta.norm));
        levels.push(json!({
            "l": l,
            "eta_norm": eta.norm,
            "eta_reading": serde_json::to_value(eta.reading).map_err(|e| e.to_string())?,
            "interior_depth_used": eta.depth_used,
            "e_rank": e_rank,
            "f_rank": f_rank,
        }));
    }
    if levels.is_empty() {
        return Err("window too small for even the first compression level".into());
    }
    let csv_path = config.output_dir.join("compact-diag.csv");
    fs::write(&csv_path, csv).map_err(|e| format!("cannot write {}: {e}", csv_path.display()))?;
    let mut body = Map::new();
    body.insert("input".into(), input);
    body.insert("levels".into(), Value::Array(levels));
    body.insert("rank_tolerance".into(), json!(RANK_TOL));
    body.insert("sequence_csv".into(), json!(csv_path.display().to_string()));
    if let Some(l) = exhausted_at {
        body.insert("window_exhausted_at_level".into(), json!(l));
    }
    write_report(config, None, body)
}

fn cmd_gamma_q(config: &RunConfig) -> Result<i32, String> {
    let t = load_tuple(config)?;
    match compute_q(t.p(), Q_CONVERGENCE_TOL, Q_MAX_ITER) {
        Ok(q) => {
            let membership = q_membership_check(&t, config.tol).map_err(|e| e.to_string())?;
            let nonempty = nonemptiness_check(&t).map_err(|e| e.to_string())?;
            let passed = membership.passed;
            let mut body = Map::new();
            body.insert("q".into(), matrix_to_json(&q));
            body.insert(
                "membership".into(),
                serde_json::to_value(&membership).map_err(|e| e.to_string())?,
            );
            body.insert("invariant_part_nonzero".into(), json!(nonempty));
            body.insert("rank_tolerance".into(), json!(Q_RANK_TOL));
            write_report(config, Some(passed), body)
        }
        Err(e) if is_negative_verdict(&e) => fail_report(config, Map::new(), &e),
        Err(e) => Err(e.to_string()),
    }
}

fn cmd_gamma_extend(config: &RunConfig) -> Result<i32, String> {
    let t = load_tuple(config)?;
    match extend_via_q(&t, config.tol) {
        Ok(tr) => {
            let passed = tr.unitary_report.passed;
            let mut body = Map::new();
            body.insert("k_dim".into(), json!(tr.k_dim));
            body.insert(
                "well_definedness_residual".into(),
                json!(tr.well_definedness_residual),
            );
            body.insert("gram_residual".into(), json!(tr.gram_residual));
            body.insert(
                "intertwining_residual".into(),
                json!(tr.intertwining_residual),
            );
            body.insert("q_isometry_defect".into(), json!(tr.q_isometry_defect));
            body.insert(
                "unitary_certificate".into(),
                serde_json::to_value(&tr.unitary_report).map_err(|e| e.to_string())?,
            );
            body.insert(
                "r".into(),
                Value::Array(tr.r.iter().map(matrix_to_json).collect()),
            );
            body.insert("u".into(), matrix_to_json(&tr.u));
            body.insert("v".into(), matrix_to_json(&tr.v));
            write_report(config, Some(passed), body)
        }
        Err(e) if is_negative_verdict(&e) => fail_report(config, Map::new(), &e),
        Err(e) => Err(e.to_string()),
    }
}

fn cmd_gamma2_pi(config: &RunConfig) -> Result<i32, String> {
    let t = load_tuple(config)?;
    match gamma2_pi_embedding(&t, config.trunc, config.tol) {
        Ok(rep) => {
            let passed = rep.passed;
            let mut body = Map::new();
            body.insert(
                "embedding".into(),
                serde_json::to_value(&rep).map_err(|e| e.to_string())?,
            );
            write_report(config, Some(passed), body)
        }
        // the embedding is defined for pairs only, so the wrong arity is a
        // precondition violation rather than a failed check
        Err(Error::NotApplicable(msg)) => Err(msg),
        Err(e) if is_negative_verdict(&e) => fail_report(config, Map::new(), &e),
        Err(e) => Err(e.to_string()),
    }
}

fn cmd_certify_unitary(config: &RunConfig) -> Result<i32, String> {
    let t = load_tuple(config)?;
    match check_gamma_unitary(t.s(), t.p(), config.tol) {
        Ok(rep) => {
            let passed = rep.passed;
            let mut body = Map::new();
            body.insert(
                "check".into(),
                serde_json::to_value(&rep).map_err(|e| e.to_string())?,
            );
            write_report(config, Some(passed), body)
        }
        Err(e) if is_negative_verdict(&e) => fail_report(config, Map::new(), &e),
        Err(e) => Err(e.to_string()),
    }
}

// ---------------------------------------------------------------------------
// input loading

fn load_symbol(config: &RunConfig, path: Option<&Path>) -> Result<SymbolExpansion, String> {
    let path = path.ok_or("this command needs --symbol <file>")?;
    let f = File::open(path).map_err(|e| format!("cannot open {}: {e}", path.display()))?;
    SymbolExpansion::read_text(config.n, BufReader::new(f))
        .map_err(|e| format!("{}: {e}", path.display()))
}

fn load_tuple(config: &RunConfig) -> Result<OperatorTuple, String> {
    let path = config
        .tuple
        .as_ref()
        .ok_or("this command needs --tuple <file>")?;
    let f = File::open(path).map_err(|e| format!("cannot open {}: {e}", path.display()))?;
    read_tuple_json(BufReader::new(f)).map_err(|e| format!("{}: {e}", path.display()))
}

/// The operator a check acts on: a fresh Toeplitz assembly when `--symbol`
/// is given, or a CSV matrix with its sidecar metadata when `--matrix` is.
fn operator_input(config: &RunConfig) -> Result<(TruncatedOperator, Value), String> {
    match (&config.symbol, &config.matrix) {
        (Some(_), Some(_)) => Err("pass either --symbol or --matrix, not both".into()),
        (Some(path), None) => {
            let phi = load_symbol(config, Some(path))?;
            let op = toeplitz(&phi, config.d).map_err(|e| e.to_string())?;
            Ok((
                op,
                json!({"kind": "symbol", "path": path.display().to_string()}),
            ))
        }
        (None, Some(path)) => {
            let op = read_matrix_with_sidecar(path)?;
            Ok((
                op,
                json!({"kind": "matrix", "path": path.display().to_string()}),
            ))
        }
        (None, None) => Err("this command needs --symbol <file> or --matrix <file>".into()),
    }
}

fn read_matrix_with_sidecar(path: &Path) -> Result<TruncatedOperator, String> {
    let meta_path = path.with_extension("meta.json");
    let meta_file =
        File::open(&meta_path).map_err(|e| format!("cannot open {}: {e}", meta_path.display()))?;
    let meta: Value = serde_json::from_reader(BufReader::new(meta_file))
        .map_err(|e| format!("{}: {e}", meta_path.display()))?;
    let domain = window_from_json(meta.get("domain"), &meta_path)?;
    let codomain = window_from_json(meta.get("codomain"), &meta_path)?;
    let depth = meta
        .get("interior_depth")
        .and_then(Value::as_u64)
        .ok_or_else(|| format!("{}: missing interior_depth", meta_path.display()))?
        as usize;
    let spread = meta
        .get("spread")
        .and_then(Value::as_u64)
        .ok_or_else(|| format!("{}: missing spread", meta_path.display()))?
        as usize;
    let f = File::open(path).map_err(|e| format!("cannot open {}: {e}", path.display()))?;
    let matrix = read_matrix_csv(BufReader::new(f), codomain.len(), domain.len())
        .map_err(|e| format!("{}: {e}", path.display()))?;
    TruncatedOperator::from_parts(matrix, domain, codomain, depth, spread)
        .map_err(|e| e.to_string())
}

fn window_from_json(v: Option<&Value>, from: &Path) -> Result<WindowRef, String> {
    let v = v.ok_or_else(|| format!("{}: missing window object", from.display()))?;
    let n = v
        .get("n")
        .and_then(Value::as_u64)
        .ok_or_else(|| format!("{}: window needs an integer n", from.display()))? as usize;
    let d = v
        .get("D")
        .and_then(Value::as_i64)
        .ok_or_else(|| format!("{}: window needs an integer D", from.display()))?;
    let side = match v.get("side").and_then(Value::as_str) {
        Some("analytic") => Side::Analytic,
        Some("coanalytic") => Side::Coanalytic,
        Some("laurent") => Side::Laurent,
        other => return Err(format!("{}: unknown window side {other:?}", from.display())),
    };
    BasisWindow::enumerate(n, d, side)
        .map(Arc::new)
        .map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------
// reporting

/// Library failures that represent a negative verdict about the input
/// operator data rather than an unusable invocation.
fn is_negative_verdict(e: &Error) -> bool {
    matches!(
        e,
        Error::NumericalFailure(_)
            | Error::SlowConvergence(..)
            | Error::NoFundamentalOperator(_)
            | Error::ExtensionIllDefined(_)
            | Error::NotApplicable(_)
            | Error::NotAToeplitzOperator(_)
            | Error::GridTooCoarse(_)
            | Error::SymmetryViolation(_)
    )
}

fn export_matrix(op: &TruncatedOperator, csv: &Path, meta: &Path) -> Result<(), String> {
    let mut w = BufWriter::new(
        File::create(csv).map_err(|e| format!("cannot create {}: {e}", csv.display()))?,
    );
    write_matrix_csv(op, &mut w).map_err(|e| format!("{}: {e}", csv.display()))?;
    w.flush().map_err(|e| format!("{}: {e}", csv.display()))?;
    let mut w = BufWriter::new(
        File::create(meta).map_err(|e| format!("cannot create {}: {e}", meta.display()))?,
    );
    write_matrix_sidecar(op, &mut w).map_err(|e| format!("{}: {e}", meta.display()))?;
    w.flush().map_err(|e| format!("{}: {e}", meta.display()))?;
    Ok(())
}

/// Writes the failure report for a check that could not produce a result
/// and returns the check-failure exit code.
fn fail_report(config: &RunConfig, mut body: Map<String, Value>, e: &Error) -> Result<i32, String> {
    body.insert("error".into(), json!(e.to_string()));
    write_report(config, Some(false), body)
}

/// Assembles the report object, writes `<command>-report.json` under the
/// output directory, prints a one-line verdict, and converts the outcome
/// into the exit code. Keys are emitted in sorted order and the timestamp
/// is confined to the single `generated_at_unix_seconds` field, so reruns
/// with the same configuration differ in that field only.
fn write_report(
    config: &RunConfig,
    passed: Option<bool>,
    body: Map<String, Value>,
) -> Result<i32, String> {
    let mut report = Map::new();
    report.insert("command".into(), json!(config.command));
    report.insert("config".into(), config.to_json());
    if let Some(p) = passed {
        report.insert("passed".into(), json!(p));
    }
    for (k, v) in body {
        report.insert(k, v);
    }
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    report.insert("generated_at_unix_seconds".into(), json!(stamp));
    let path = config
        .output_dir
        .join(format!("{}-report.json", config.command));
    let text =
        serde_json::to_string_pretty(&Value::Object(report)).map_err(|e| e.to_string())?;
    fs::write(&path, text + "\n").map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    let verdict = match passed {
        Some(true) => "pass",
        Some(false) => "FAIL",
        None => "done",
    };
    println!("{}: {verdict} ({})", config.command, path.display());
    Ok(match passed {
        Some(false) => EXIT_CHECK_FAILED,
        _ => EXIT_PASS,
    })
}
