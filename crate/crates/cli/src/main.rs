//! `maptorus`: determinants, torsion, heat traces and self-verification of
//! metric mapping tori from the command line.
//!
//! Exit codes: 0 ok, 1 invalid input, 2 truncation failure, 3 failed
//! verification.

mod output;
mod settings;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use maptorus::determinants::{
    circle_det_massive, klein_bottle_det, mapping_torus_det_modified, mapping_torus_det_shifted,
    product_with_circle_det_forms, rect_torus_det, t2_phi_det, t2_phi_printed_defect,
};
use maptorus::oracle::{geometries, heat_trace};
use maptorus::torsion::{analytic_torsion, torsion_from_definition, witten_torsion, witten_torsion_assembled};
use maptorus::verify::{self, VerifyOptions};
use maptorus::{DetResult, IsometryKind, IsometrySpec, ManifoldSpec, MappingTorusSpec, TruncationPolicy};
use serde_json::Value;

use output::Record;
use settings::{BaseKind, Format, IsometryName, Pathway, Settings};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Truncation(String),
    Verification(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Truncation(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl From<maptorus::Error> for CliError {
    fn from(e: maptorus::Error) -> Self {
        use maptorus::Error as E;
        match e {
            E::Truncation { .. } | E::NoConvergence(_) => CliError::Truncation(e.to_string()),
            E::Inconsistent { .. } => CliError::Verification(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "maptorus", version, about = "Zeta determinants and analytic torsion of metric mapping tori")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Initial eigenvalue cutoff for every truncated series.
    #[arg(long, global = true)]
    cutoff: Option<f64>,
    /// Largest admissible certified tail bound.
    #[arg(long, global = true)]
    tail_tol: Option<f64>,
    /// Seed for randomized checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML file with default settings; explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Geometry {
    /// Interval length of the mapping torus.
    #[arg(long)]
    a: Option<f64>,
    /// Radius of the circle base.
    #[arg(long)]
    rho: Option<f64>,
    /// Torus base periods.
    #[arg(long)]
    l1: Option<f64>,
    #[arg(long)]
    l2: Option<f64>,
    /// Rotation angle (radians) for `--isometry rotation`.
    #[arg(long)]
    angle: Option<f64>,
    #[arg(long, value_enum)]
    base: Option<BaseKind>,
    #[arg(long, value_enum)]
    isometry: Option<IsometryName>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DetTarget {
    KleinBottle,
    T2Phi,
    Product,
    MappingTorus,
    Torus,
    MassiveCircle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SpecName {
    Klein,
    CircleRotation,
    T2Phi,
    Product,
    MappingTorus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum HeatTarget {
    Klein,
    Torus,
    KleinMinusTorus,
    T2Phi,
    Product,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Log-determinant of a Laplacian.
    #[command(allow_negative_numbers = true)]
    Det {
        #[arg(value_enum)]
        target: DetTarget,
        #[command(flatten)]
        geometry: Geometry,
        /// Form degree.
        #[arg(long)]
        q: Option<usize>,
        /// Spectral shift; without it the modified determinant (zero modes removed) is computed.
        #[arg(long)]
        lambda: Option<f64>,
        /// Mass parameter for `massive-circle`.
        #[arg(long)]
        t: Option<f64>,
    },
    /// Analytic torsion, or its Witten deformation with `--witten`.
    #[command(allow_negative_numbers = true)]
    Torsion {
        #[arg(long, value_enum, default_value = "klein")]
        spec: SpecName,
        #[arg(long, value_enum)]
        pathway: Option<Pathway>,
        #[arg(long)]
        witten: bool,
        #[arg(long)]
        t: Option<f64>,
        #[command(flatten)]
        geometry: Geometry,
    },
    /// Heat trace Tr e^{-tΔ} from the spectral oracle.
    #[command(allow_negative_numbers = true)]
    Heat {
        #[arg(value_enum)]
        target: HeatTarget,
        #[arg(long)]
        t: Option<f64>,
        #[command(flatten)]
        geometry: Geometry,
    },
    /// Run the self-verification checks.
    Verify {
        /// Run a single check by name.
        #[arg(long)]
        only: Option<String>,
        /// Print the available checks and exit.
        #[arg(long)]
        list: bool,
    },
}

fn flags(cli: &Cli) -> Settings {
    let mut s = Settings {
        format: cli.format,
        cutoff: cli.cutoff,
        tail_tol: cli.tail_tol,
        seed: cli.seed,
        ..Settings::default()
    };
    let geometry = |s: &mut Settings, g: &Geometry| {
        s.a = g.a;
        s.rho = g.rho;
        s.l1 = g.l1;
        s.l2 = g.l2;
        s.angle = g.angle;
        s.base = g.base;
        s.isometry = g.isometry;
    };
    match &cli.command {
        Command::Det { geometry: g, q, lambda, t, .. } => {
            geometry(&mut s, g);
            s.q = *q;
            s.lambda = *lambda;
            s.t = *t;
        }
        Command::Torsion { pathway, witten, t, geometry: g, .. } => {
            geometry(&mut s, g);
            s.pathway = *pathway;
            s.witten = witten.then_some(true);
            s.t = *t;
        }
        Command::Heat { t, geometry: g, .. } => {
            geometry(&mut s, g);
            s.t = *t;
        }
        Command::Verify { only, .. } => s.only = only.clone(),
    }
    s
}

struct Run {
    settings: Settings,
    policy: TruncationPolicy,
    params: BTreeMap<String, Value>,
}

impl Run {
    fn new(settings: Settings) -> Result<Self, CliError> {
        let mut policy = TruncationPolicy::default();
        if let Some(c) = settings.cutoff {
            policy.cutoff = c;
        }
        if let Some(t) = settings.tail_tol {
            if !(t > 0.0 && t <= 1e-2) {
                return Err(CliError::Input(format!("invalid parameter `tail-tol`: must lie in (0, 1e-2], got {t}")));
            }
            policy.tail_tol = t;
        }
        policy.validate()?;
        Ok(Self {
            settings,
            policy,
            params: BTreeMap::new(),
        })
    }

    fn param(&mut self, key: &str, v: impl Into<Value>) {
        self.params.insert(key.to_owned(), v.into());
    }

    fn real(&mut self, key: &str, value: Option<f64>, default: f64) -> Result<f64, CliError> {
        let v = value.unwrap_or(default);
        if !(v.is_finite() && v > 0.0) {
            return Err(CliError::Input(format!("invalid parameter `{key}`: must be finite and > 0, got {v}")));
        }
        self.param(key, v);
        Ok(v)
    }

    fn base(&mut self, default: BaseKind) -> Result<ManifoldSpec, CliError> {
        let kind = self.settings.base.unwrap_or(default);
        Ok(match kind {
            BaseKind::Circle => {
                self.param("base", "circle");
                let rho = self.real("rho", self.settings.rho, 1.0)?;
                ManifoldSpec::circle(rho)?
            }
            BaseKind::Torus => {
                self.param("base", "torus");
                let l1 = self.real("l1", self.settings.l1, 2.0 * PI)?;
                let l2 = self.real("l2", self.settings.l2, 2.0 * PI)?;
                ManifoldSpec::rect_torus(l1, l2)?
            }
        })
    }

    fn mapping_torus(&mut self, default_base: BaseKind) -> Result<MappingTorusSpec, CliError> {
        let base = self.base(default_base)?;
        let kind = match self.settings.isometry.unwrap_or(IsometryName::Identity) {
            IsometryName::Identity => IsometryKind::Identity,
            IsometryName::Reflection => IsometryKind::CircleReflection,
            IsometryName::Rotation => {
                let angle = self.settings.angle.unwrap_or(0.0);
                self.param("angle", angle);
                IsometryKind::CircleRotation { angle }
            }
            IsometryName::SwapShift => IsometryKind::TorusSwapShift,
        };
        self.param("isometry", cli_name(self.settings.isometry.unwrap_or(IsometryName::Identity)));
        let a = self.real("a", self.settings.a, 2.0 * PI)?;
        Ok(MappingTorusSpec::new(IsometrySpec::new(kind, base)?, a)?)
    }

    fn named_spec(&mut self, name: SpecName) -> Result<MappingTorusSpec, CliError> {
        self.param("spec", cli_name(name));
        Ok(match name {
            SpecName::Klein => {
                let a = self.real("a", self.settings.a, 2.0 * PI)?;
                let rho = self.real("rho", self.settings.rho, 1.0)?;
                MappingTorusSpec::klein_bottle(a, rho)?
            }
            SpecName::CircleRotation => {
                let a = self.real("a", self.settings.a, 2.0 * PI)?;
                let rho = self.real("rho", self.settings.rho, 1.0)?;
                let angle = self.settings.angle.unwrap_or(1.0);
                self.param("angle", angle);
                MappingTorusSpec::circle_rotation(a, rho, angle)?
            }
            SpecName::T2Phi => MappingTorusSpec::t2_phi(),
            SpecName::Product => {
                let base = self.base(BaseKind::Circle)?;
                let a = self.real("a", self.settings.a, 2.0 * PI)?;
                MappingTorusSpec::product(base, a)?
            }
            SpecName::MappingTorus => self.mapping_torus(BaseKind::Circle)?,
        })
    }

    fn record(&self, quantity: &str, det: DetResult, start: Instant) -> Record {
        Record {
            quantity: quantity.to_owned(),
            params: self.params.clone(),
            value: det.value,
            tail_bound: det.tail_bound,
            blocks_used: det.blocks_used,
            runtime_ms: start.elapsed().as_secs_f64() * 1e3,
            details: BTreeMap::new(),
        }
    }
}

/// The spelling a value has on the command line.
fn cli_name(v: impl ValueEnum) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_owned()
}

fn cmd_det(run: &mut Run, target: DetTarget) -> Result<Record, CliError> {
    let start = Instant::now();
    let policy = run.policy;
    let q = run.settings.q.unwrap_or(0);
    if run.settings.lambda.is_some() && !matches!(target, DetTarget::Product | DetTarget::MappingTorus) {
        return Err(CliError::Input(format!(
            "`--lambda` applies to `product` and `mapping-torus`, not `{}`",
            cli_name(target)
        )));
    }
    let (quantity, det) = match target {
        DetTarget::KleinBottle => {
            let a = run.real("a", run.settings.a, 2.0 * PI)?;
            let rho = run.real("rho", run.settings.rho, 1.0)?;
            ("log_det_klein_bottle", DetResult::exact(klein_bottle_det(a, rho)?))
        }
        DetTarget::Torus => {
            let a = run.real("a", run.settings.a, 2.0 * PI)?;
            let rho = run.real("rho", run.settings.rho, 1.0)?;
            ("log_det_torus", DetResult::exact(rect_torus_det(a, rho)?))
        }
        DetTarget::MassiveCircle => {
            let a = run.real("a", run.settings.a, 2.0 * PI)?;
            let t = run.real("t", run.settings.t, 1.0)?;
            ("log_det_massive_circle", DetResult::exact(circle_det_massive(a, t)?))
        }
        DetTarget::T2Phi => {
            let det = t2_phi_det(&policy)?;
            let defect = t2_phi_printed_defect();
            let mut rec = run.record("log_det_t2_phi_closed_form", det, start);
            rec.details.insert("over_count".into(), defect);
            rec.details.insert("closed_form_minus_over_count".into(), rec.value - defect);
            return Ok(rec);
        }
        DetTarget::Product => {
            let base = run.base(BaseKind::Circle)?;
            let a = run.real("a", run.settings.a, 2.0 * PI)?;
            run.param("q", q);
            match run.settings.lambda {
                Some(lambda) => {
                    let lambda = run.real("lambda", Some(lambda), 1.0)?;
                    let spec = MappingTorusSpec::product(base, a)?;
                    ("log_det_product_shifted", mapping_torus_det_shifted(&spec, q, lambda, &policy)?)
                }
                None => ("log_det_product", product_with_circle_det_forms(&base, a, q, &policy)?),
            }
        }
        DetTarget::MappingTorus => {
            let spec = run.mapping_torus(BaseKind::Circle)?;
            run.param("q", q);
            match run.settings.lambda {
                Some(lambda) => {
                    let lambda = run.real("lambda", Some(lambda), 1.0)?;
                    ("log_det_shifted", mapping_torus_det_shifted(&spec, q, lambda, &policy)?)
                }
                None => ("log_det_modified", mapping_torus_det_modified(&spec, q, &policy)?),
            }
        }
    };
    Ok(run.record(quantity, det, start))
}

fn cmd_torsion(run: &mut Run, name: SpecName) -> Result<Record, CliError> {
    let start = Instant::now();
    let spec = run.named_spec(name)?;
    let policy = run.policy;
    if run.settings.witten.unwrap_or(false) {
        let t = run.real("t", run.settings.t, 1.0)?;
        let pathway = run.settings.pathway.unwrap_or(Pathway::Theorem);
        run.param("pathway", cli_name(pathway));
        let theorem = witten_torsion(&spec, t)?;
        let mut rec = run.record("log_witten_torsion", DetResult::exact(theorem), start);
        match pathway {
            Pathway::Theorem => {}
            Pathway::Definition => rec.value = witten_torsion_assembled(&spec, t, &policy)?,
            Pathway::Both => {
                let assembled = witten_torsion_assembled(&spec, t, &policy)?;
                rec.details.insert("theorem".into(), theorem);
                rec.details.insert("assembled".into(), assembled);
                rec.details.insert("difference".into(), theorem - assembled);
            }
        }
        rec.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
        return Ok(rec);
    }
    let pathway = run.settings.pathway.unwrap_or(Pathway::Theorem);
    run.param("pathway", cli_name(pathway));
    let mut rec = match pathway {
        Pathway::Theorem => run.record("log_torsion", DetResult::exact(analytic_torsion(&spec)?), start),
        Pathway::Definition => {
            run.record("log_torsion", DetResult::exact(torsion_from_definition(&spec, &policy)?), start)
        }
        Pathway::Both => {
            let theorem = analytic_torsion(&spec)?;
            let definition = torsion_from_definition(&spec, &policy)?;
            let mut rec = run.record("log_torsion", DetResult::exact(theorem), start);
            rec.details.insert("theorem".into(), theorem);
            rec.details.insert("definition".into(), definition);
            rec.details.insert("difference".into(), theorem - definition);
            rec
        }
    };
    rec.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(rec)
}

fn cmd_heat(run: &mut Run, target: HeatTarget) -> Result<Record, CliError> {
    let start = Instant::now();
    let t = run.real("t", run.settings.t, 0.1)?;
    run.param("target", cli_name(target));
    let spectrum = match target {
        HeatTarget::T2Phi => geometries::swap_shift_mapping_torus(2.0 * PI)?,
        HeatTarget::Product => {
            let base = run.base(BaseKind::Torus)?;
            let a = run.real("a", run.settings.a, 2.0 * PI)?;
            geometries::product_with_circle(&base, a)?
        }
        _ => {
            let a = run.real("a", run.settings.a, 2.0 * PI)?;
            let rho = run.real("rho", run.settings.rho, 1.0)?;
            match target {
                HeatTarget::Klein => geometries::klein_bottle(a, rho)?,
                HeatTarget::Torus => geometries::rect_torus(a, rho)?,
                _ => geometries::klein_bottle(a, rho)?.difference(&geometries::rect_torus(a, rho)?),
            }
        }
    };
    Ok(run.record("heat_trace", DetResult::exact(heat_trace(&spectrum, t)?), start))
}

fn cmd_verify(run: &mut Run, list: bool) -> Result<(Record, bool), CliError> {
    let start = Instant::now();
    if list {
        for (name, criterion) in verify::CHECKS {
            println!("{name} (criterion {criterion})");
        }
        std::process::exit(0);
    }
    let opts = VerifyOptions {
        seed: run.settings.seed.unwrap_or(verify::DEFAULT_SEED),
        policy: run.policy,
        ..VerifyOptions::default()
    };
    run.param("seed", opts.seed);
    let reports = match run.settings.only.clone() {
        Some(name) => {
            run.param("only", name.clone());
            vec![verify::run(&name, &opts).map_err(|e| CliError::Input(e.to_string()))?]
        }
        None => verify::run_all(&opts),
    };
    let failed = reports.iter().filter(|r| !r.passed).count();
    let worst = reports.iter().map(|r| r.worst_ratio).fold(0.0, f64::max);
    let mut rec = run.record("verification_worst_ratio", DetResult::exact(worst), start);
    rec.blocks_used = reports.len();
    for r in &reports {
        rec.details.insert(format!("{}.worst_ratio", r.name), r.worst_ratio);
        rec.details.insert(format!("{}.passed", r.name), if r.passed { 1.0 } else { 0.0 });
        if rec_is_plain(run) {
            eprintln!("{} {} (worst residual/tolerance {:.3e})", if r.passed { "PASS" } else { "FAIL" }, r.name, r.worst_ratio);
            for m in r.measurements.iter().filter(|m| !m.passed) {
                eprintln!("    {}: {:.3e} > {:.1e}", m.label, m.residual, m.tolerance);
            }
            if let Some(e) = &r.error {
                eprintln!("    error: {e}");
            }
        }
    }
    rec.details.insert("failed".into(), failed as f64);
    Ok((rec, failed == 0))
}

fn rec_is_plain(run: &Run) -> bool {
    run.settings.format.unwrap_or(Format::Json) == Format::Plain
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("MAPTORUS_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Input(format!("MAPTORUS_THREADS must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Input(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let file = match &cli.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    let settings = flags(&cli).over(file);
    let format = settings.format.unwrap_or(Format::Json);
    let mut run = Run::new(settings)?;
    let (record, ok) = match cli.command {
        Command::Det { target, .. } => (cmd_det(&mut run, target)?, true),
        Command::Torsion { spec, .. } => (cmd_torsion(&mut run, spec)?, true),
        Command::Heat { target, .. } => (cmd_heat(&mut run, target)?, true),
        Command::Verify { list, .. } => cmd_verify(&mut run, list)?,
    };
    let mut out = std::io::stdout().lock();
    if let Err(e) = writeln!(out, "{}", record.render(format)) {
        // a closed pipe downstream (`| head`) is not our failure
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            return Err(CliError::Input(format!("cannot write output: {e}")));
        }
    }
    if ok {
        Ok(())
    } else {
        Err(CliError::Verification(format!("{} check(s) failed", record.details["failed"])))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Input(m) => eprintln!("error: {m}"),
                CliError::Truncation(m) => eprintln!("error: {m}"),
                CliError::Verification(m) => eprintln!("verification failed: {m}"),
            }
            ExitCode::from(e.code())
        }
    }
}
