use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use naqi_cli::output::{fmt_sig, round_json};
use naqi_cli::state_io::read_state_json;
use naqi_core::complementarity::{maximize_sum_over_states, mub_imaginarity_sum};
use naqi_core::imaginarity::{imag_measure, OrthonormalBasis};
use naqi_core::qmat::{density_to_bloch, BlochVector};
use naqi_core::scenarios::{
    alpha_beta_grid, exclusion_scan, find_naqi_threshold, linspace, scan_family, theta_grid, ExclusionPoint,
    ExclusionRecord,
};
use naqi_core::{
    bound_constant, build_state, mub_triple, mub_triple_with_phase, naqi_value, DensityMatrix, Error, FamilyKind,
    ImaginarityMeasure, NaqiConfig, OptimizerConfig, StateFamily,
};
use serde_json::{json, Value};

const JSON_DIGITS: usize = 10;
const CSV_DIGITS: usize = 9;

#[derive(Parser)]
#[command(name = "naqi", version, about = "Imaginarity, complementarity bounds and NAQI of qubit states")]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Grid points per dimension of the coarse scan
    #[arg(long, global = true, default_value_t = 24)]
    grid: usize,

    /// Simplex iterations per restart
    #[arg(long, global = true, default_value_t = 200)]
    refine_iters: usize,

    /// Simplex diameter at which refinement stops
    #[arg(long, global = true, default_value_t = 1e-9)]
    refine_tol: f64,

    /// Number of best grid cells refined
    #[arg(long, global = true, default_value_t = 8)]
    starts: usize,

    /// Shifts the grid along periodic angles (0 keeps the aligned grid)
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads [env: NAQI_WORKERS; default: available parallelism]
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Read angle arguments in degrees instead of radians
    #[arg(long, global = true)]
    degrees: bool,

    /// Write results to this file instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Output format (csv is available for scan and exclusion)
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Search only the two-angle family of basis triples
    #[arg(long, global = true)]
    two_angle_frames: bool,

    /// Override the verdict margin (for testing failure paths)
    #[arg(long, global = true, hide = true, allow_hyphen_values = true)]
    debug_verdict_margin: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Measure {
    L1,
    R,
}

impl From<Measure> for ImaginarityMeasure {
    fn from(m: Measure) -> Self {
        match m {
            Measure::L1 => ImaginarityMeasure::L1,
            Measure::R => ImaginarityMeasure::RelativeEntropy,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Werner,
    BellMixture,
}

impl From<Family> for FamilyKind {
    fn from(f: Family) -> Self {
        match f {
            Family::Werner => FamilyKind::Werner,
            Family::BellMixture => FamilyKind::BellMixture,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ExclusionFamily {
    /// λ₀ = cos α, λ₂ = sin α cos β, λ₃ = sin α sin β
    AlphaBeta,
    /// λ₀ = √2/2, λ₂ = (√2/2) cos θ, λ₃ = (√2/2) sin θ
    Theta,
}

#[derive(Clone, Copy, ValueEnum)]
enum Basis {
    Z,
    X,
    Y,
}

#[derive(Args)]
struct StateSource {
    /// Built-in two-qubit family
    #[arg(long, value_enum, requires = "p", conflicts_with = "state")]
    family: Option<Family>,

    /// Family parameter in [0, 1]
    #[arg(long, requires = "family")]
    p: Option<f64>,

    /// JSON density matrix {"dim", "re", "im"}
    #[arg(long)]
    state: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the complementarity bound constants and their maximizers
    Bound {
        #[arg(long, value_enum)]
        measure: Option<Measure>,
    },
    /// Imaginarity of a qubit state in one basis or a triple of bases
    Measure {
        /// Bloch vector x,y,z
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "state", required_unless_present = "state")]
        bloch: Option<Vec<f64>>,

        /// JSON density matrix of a qubit
        #[arg(long)]
        state: Option<PathBuf>,

        #[arg(long, value_enum)]
        measure: Option<Measure>,

        /// Eigenbasis of a Pauli operator
        #[arg(long, value_enum, conflicts_with_all = ["basis_angles", "triple"])]
        basis: Option<Basis>,

        /// Basis whose first vector has Bloch angles θ,φ
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "triple")]
        basis_angles: Option<Vec<f64>>,

        /// Basis triple θ1,φ1[,χ]; reports the three terms and their sum
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        triple: Option<Vec<f64>>,
    },
    /// Optimized NAQI value, witness and verdict of a two-qubit state
    Naqi {
        #[command(flatten)]
        source: StateSource,

        #[arg(long, value_enum)]
        measure: Measure,
    },
    /// Witness along a one-parameter family
    Scan {
        #[arg(long, value_enum)]
        family: Family,

        #[arg(long, value_enum)]
        measure: Measure,

        #[arg(long, default_value_t = 0.0)]
        from: f64,

        #[arg(long, default_value_t = 1.0)]
        to: f64,

        #[arg(long, default_value_t = 11)]
        points: usize,
    },
    /// Family parameter at which the witness changes sign
    Threshold {
        #[arg(long, value_enum)]
        family: Family,

        #[arg(long, value_enum)]
        measure: Measure,

        #[arg(long, default_value_t = 0.5)]
        lo: f64,

        #[arg(long, default_value_t = 1.0)]
        hi: f64,
    },
    /// NAQI of the three ordered pairs of a three-qubit pure state over a grid
    Exclusion {
        #[arg(long, value_enum)]
        family: ExclusionFamily,

        #[arg(long, value_enum, default_value = "l1")]
        measure: Measure,

        /// Points per grid axis (alpha-beta uses points × points)
        #[arg(long)]
        points: Option<usize>,

        /// Measure on the second party of each pair instead of the first
        #[arg(long)]
        reversed: bool,
    },
    /// Quick checks of the bound constants and two state families
    Selftest,
}

enum Failure {
    Input(String),
    NotConverged(String),
    Selftest(String),
    Internal(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::NotConverged(_) => 3,
            Failure::Selftest(_) | Failure::Internal(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::NotConverged(m) | Failure::Selftest(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonFinite { .. } | Error::BoundCheck(_) => Failure::Internal(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

struct Ctx {
    naqi: NaqiConfig,
    angle_scale: f64,
    output: Option<PathBuf>,
    format: Option<Format>,
}

impl Ctx {
    fn angles(&self, v: &[f64]) -> Vec<f64> {
        v.iter().map(|a| a * self.angle_scale).collect()
    }

    fn emit(&self, text: &str) -> Result<(), Failure> {
        match &self.output {
            Some(path) => fs::write(path, text).map_err(|e| Failure::Input(format!("output {}: {e}", path.display()))),
            None => io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Internal(format!("stdout: {e}"))),
        }
    }

    fn emit_json(&self, v: Value) -> Result<(), Failure> {
        if self.format == Some(Format::Csv) {
            return Err(Failure::Input("format: csv is only available for scan and exclusion".into()));
        }
        let text = serde_json::to_string_pretty(&round_json(v, JSON_DIGITS)).map_err(|e| Failure::Internal(e.to_string()))?;
        self.emit(&(text + "\n"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("naqi: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let c = &cli.common;
    let workers = match c.workers {
        Some(w) => Some(w),
        None => match std::env::var("NAQI_WORKERS") {
            Ok(s) => Some(s.parse().map_err(|_| Failure::Input(format!("NAQI_WORKERS: not a count: {s:?}")))?),
            Err(_) => None,
        },
    };
    if let Some(w) = workers {
        if w == 0 {
            return Err(Failure::Input("workers: must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Failure::Internal(e.to_string()))?;
    }
    let optimizer = OptimizerConfig {
        grid_points_per_dim: c.grid,
        refine_iterations: c.refine_iters,
        refine_tolerance: c.refine_tol,
        multistart_count: c.starts,
        seed: c.seed,
    };
    optimizer.validate()?;
    let mut naqi = NaqiConfig {
        optimizer,
        full_orbit: !c.two_angle_frames,
        ..Default::default()
    };
    if let Some(m) = c.debug_verdict_margin {
        naqi.verdict_margin = m;
    }
    let ctx = Ctx {
        naqi,
        angle_scale: if c.degrees { std::f64::consts::PI / 180.0 } else { 1.0 },
        output: c.output.clone(),
        format: c.format,
    };

    match cli.command {
        Command::Bound { measure } => bound(&ctx, measure),
        Command::Measure { bloch, state, measure, basis, basis_angles, triple } => {
            measure_cmd(&ctx, bloch, state, measure, basis, basis_angles, triple)
        }
        Command::Naqi { source, measure } => naqi_cmd(&ctx, source, measure),
        Command::Scan { family, measure, from, to, points } => scan(&ctx, family, measure, from, to, points),
        Command::Threshold { family, measure, lo, hi } => threshold(&ctx, family, measure, lo, hi),
        Command::Exclusion { family, measure, points, reversed } => exclusion(&ctx, family, measure, points, reversed),
        Command::Selftest => selftest(&ctx),
    }
}

fn measures(m: Option<Measure>) -> Vec<ImaginarityMeasure> {
    match m {
        Some(m) => vec![m.into()],
        None => ImaginarityMeasure::ALL.to_vec(),
    }
}

fn bloch_json(n: BlochVector) -> Value {
    json!([n.x, n.y, n.z])
}

fn bound(ctx: &Ctx, measure: Option<Measure>) -> Result<(), Failure> {
    let mut entries = serde_json::Map::new();
    for m in measures(measure) {
        let b = bound_constant(m)?;
        let best = maximize_sum_over_states(m, &mub_triple(0.0, 0.0), &OptimizerConfig::default())?;
        entries.insert(
            m.tag().into(),
            json!({
                "measure": m.tag(),
                "value": b.value,
                "maximizer": bloch_json(b.maximizer),
                "provenance": format!("{:?}", b.provenance).to_lowercase(),
                "local_maxima": best.maximizers.into_iter().map(bloch_json).collect::<Vec<_>>(),
            }),
        );
    }
    if measure.is_some() {
        let (_, v) = entries.into_iter().next().expect("one measure");
        ctx.emit_json(v)
    } else {
        ctx.emit_json(Value::Object(entries))
    }
}

fn expect_len(field: &str, v: &[f64], allowed: &[usize]) -> Result<(), Failure> {
    if allowed.contains(&v.len()) {
        Ok(())
    } else {
        Err(Failure::Input(format!("{field}: expected {allowed:?} comma-separated values, got {}", v.len())))
    }
}

fn qubit_state(bloch: Option<Vec<f64>>, state: Option<PathBuf>) -> Result<DensityMatrix, Failure> {
    if let Some(v) = &bloch {
        expect_len("bloch", v, &[3])?;
    }
    match (bloch, state) {
        (Some(v), None) => Ok(naqi_core::qmat::bloch_to_density(BlochVector::new(v[0], v[1], v[2])?)),
        (None, Some(path)) => {
            let rho = read_state_json(&path).map_err(Failure::Input)?;
            if rho.dim() != 2 {
                return Err(Failure::Input(format!("state: expected a qubit (dim 2), got dim {}", rho.dim())));
            }
            Ok(rho)
        }
        _ => Err(Failure::Input("state: give exactly one of --bloch or --state".into())),
    }
}

fn measure_cmd(
    ctx: &Ctx,
    bloch: Option<Vec<f64>>,
    state: Option<PathBuf>,
    measure: Option<Measure>,
    basis: Option<Basis>,
    basis_angles: Option<Vec<f64>>,
    triple: Option<Vec<f64>>,
) -> Result<(), Failure> {
    let rho = qubit_state(bloch, state)?;
    let n = density_to_bloch(&rho)?;
    let mut out = serde_json::Map::new();
    out.insert("bloch".into(), bloch_json(n));
    if let Some(t) = triple {
        expect_len("triple", &t, &[2, 3])?;
        let t = ctx.angles(&t);
        let triple = if t.len() == 3 { mub_triple_with_phase(t[0], t[1], t[2]) } else { mub_triple(t[0], t[1]) };
        for m in measures(measure) {
            let terms = triple
                .bases
                .iter()
                .map(|b| imag_measure(m, &rho, b))
                .collect::<Result<Vec<f64>, _>>()?;
            out.insert(
                m.tag().into(),
                json!({ "terms": terms, "sum": mub_imaginarity_sum(n, &triple, m) }),
            );
        }
    } else {
        let b = match (basis, basis_angles) {
            (_, Some(a)) => {
                expect_len("basis-angles", &a, &[2])?;
                let a = ctx.angles(&a);
                let (plus, minus) = naqi_core::frames::spinor_pair(a[0], a[1]);
                OrthonormalBasis::new(plus, minus)?
            }
            (Some(Basis::X), None) => OrthonormalBasis::x_eigenbasis(),
            (Some(Basis::Y), None) => OrthonormalBasis::y_eigenbasis(),
            (Some(Basis::Z) | None, None) => OrthonormalBasis::computational(),
        };
        for m in measures(measure) {
            out.insert(m.tag().into(), json!(imag_measure(m, &rho, &b)?));
        }
    }
    ctx.emit_json(Value::Object(out))
}

fn naqi_cmd(ctx: &Ctx, source: StateSource, measure: Measure) -> Result<(), Failure> {
    let rho = match (source.family, source.p, source.state) {
        (Some(f), Some(p), None) => build_state(&FamilyKind::from(f).at(p))?,
        (None, None, Some(path)) => read_state_json(&path).map_err(Failure::Input)?,
        _ => return Err(Failure::Input("state: give either --family with --p, or --state".into())),
    };
    let r = naqi_value(&rho, measure.into(), &ctx.naqi)?;
    let v = serde_json::to_value(&r).map_err(|e| Failure::Internal(e.to_string()))?;
    ctx.emit_json(v)?;
    if r.certified {
        Ok(())
    } else {
        Err(Failure::NotConverged(format!(
            "optimizer stopped before converging; best value {} is not certified",
            r.value
        )))
    }
}

fn scan(ctx: &Ctx, family: Family, measure: Measure, from: f64, to: f64, points: usize) -> Result<(), Failure> {
    if points == 0 {
        return Err(Failure::Input("points: must be positive".into()));
    }
    let grid = linspace(from, to, points);
    let records = scan_family(family.into(), &grid, measure.into(), &ctx.naqi)?;
    if ctx.format == Some(Format::Json) {
        let v = serde_json::to_value(&records).map_err(|e| Failure::Internal(e.to_string()))?;
        ctx.emit_json(v)?;
    } else {
        let mut text = String::from("param,N,witness,verdict\n");
        for r in &records {
            text += &format!(
                "{},{},{},{}\n",
                fmt_sig(r.param, CSV_DIGITS),
                fmt_sig(r.value, CSV_DIGITS),
                fmt_sig(r.witness, CSV_DIGITS),
                r.verdict
            );
        }
        ctx.emit(&text)?;
    }
    if records.iter().all(|r| r.certified) {
        Ok(())
    } else {
        Err(Failure::NotConverged("some scan points did not converge".into()))
    }
}

fn threshold(ctx: &Ctx, family: Family, measure: Measure, lo: f64, hi: f64) -> Result<(), Failure> {
    let kind = FamilyKind::from(family);
    let m = ImaginarityMeasure::from(measure);
    let t = find_naqi_threshold(kind, m, (lo, hi), &ctx.naqi)?;
    ctx.emit_json(json!({
        "family": kind.tag(),
        "measure": m.tag(),
        "bracket": [lo, hi],
        "threshold": t,
    }))
}

fn exclusion(
    ctx: &Ctx,
    family: ExclusionFamily,
    measure: Measure,
    points: Option<usize>,
    reversed: bool,
) -> Result<(), Failure> {
    let grid = match family {
        ExclusionFamily::AlphaBeta => {
            let n = points.unwrap_or(40);
            alpha_beta_grid(n, n)
        }
        ExclusionFamily::Theta => theta_grid(points.unwrap_or(100)),
    };
    if grid.is_empty() {
        return Err(Failure::Input("points: must be positive".into()));
    }
    let records = exclusion_scan(&grid, measure.into(), &ctx.naqi, reversed)?;
    if ctx.format == Some(Format::Json) {
        let v = serde_json::to_value(&records).map_err(|e| Failure::Internal(e.to_string()))?;
        ctx.emit_json(v)?;
    } else {
        ctx.emit(&exclusion_csv(&records, family, reversed))?;
    }
    if records.iter().all(|r| r.results.iter().all(|x| x.certified)) {
        Ok(())
    } else {
        Err(Failure::NotConverged("some exclusion points did not converge".into()))
    }
}

fn exclusion_csv(records: &[ExclusionRecord], family: ExclusionFamily, reversed: bool) -> String {
    let pairs = if reversed { "N_BA,N_CB,N_AC" } else { "N_AB,N_BC,N_CA" };
    let mut text = match family {
        ExclusionFamily::AlphaBeta => format!("alpha,beta,{pairs},count_exceeding\n"),
        ExclusionFamily::Theta => format!("theta,{pairs},count_exceeding\n"),
    };
    for r in records {
        let coords = match r.point {
            ExclusionPoint::AlphaBeta { alpha, beta } => vec![alpha, beta],
            ExclusionPoint::Theta { theta } => vec![theta],
        };
        let cols: Vec<String> = coords
            .into_iter()
            .chain(r.results.iter().map(|x| x.value))
            .map(|x| fmt_sig(x, CSV_DIGITS))
            .collect();
        text += &format!("{},{}\n", cols.join(","), r.count_exceeding);
    }
    text
}

fn selftest(ctx: &Ctx) -> Result<(), Failure> {
    let cfg = &ctx.naqi;
    let mut lines = Vec::new();
    let mut failed = Vec::new();
    let mut record = |name: String, ok: bool| {
        lines.push(format!("{} {name}", if ok { "ok    " } else { "FAILED" }));
        if !ok {
            failed.push(name);
        }
    };

    let s5 = 5f64.sqrt();
    let l1 = bound_constant(ImaginarityMeasure::L1)?;
    record(format!("l1 bound = {}", l1.value), (l1.value - s5).abs() < 1e-15);
    let re = bound_constant(ImaginarityMeasure::RelativeEntropy)?;
    record(format!("relative-entropy bound = {} (reference 2.02685)", re.value), (re.value - 2.02685).abs() <= 5e-4);

    for p in [0.2, 0.5, 0.8] {
        let r = naqi_value(&build_state(&StateFamily::Werner { p })?, ImaginarityMeasure::L1, cfg)?;
        let expect_verdict = 3.0 * p > s5;
        record(
            format!("werner p = {p}: N_l1 = {} (expected {}), verdict {}", r.value, 3.0 * p, r.verdict),
            (r.value - 3.0 * p).abs() <= 1e-6 && r.verdict == expect_verdict,
        );
    }
    for p in [0.1, 0.3, 0.5] {
        for m in ImaginarityMeasure::ALL {
            let a = naqi_value(&build_state(&StateFamily::BellMixture { p })?, m, cfg)?;
            let b = naqi_value(&build_state(&StateFamily::BellMixture { p: 1.0 - p })?, m, cfg)?;
            let verdict_ok = if p == 0.5 { !a.verdict } else { a.verdict };
            record(
                format!("bell mixture {m} at p = {p} and {}: witness {} vs {}, verdict {}", 1.0 - p, a.witness, b.witness, a.verdict),
                (a.witness - b.witness).abs() <= 1e-6 && verdict_ok,
            );
        }
    }

    let text = lines.join("\n") + "\n";
    ctx.emit(&text)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Selftest(format!("{} check(s) failed: {}", failed.len(), failed.join("; "))))
    }
}
