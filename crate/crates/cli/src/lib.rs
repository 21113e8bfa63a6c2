//! The `rearrange` command line.
//!
//! Every subcommand reads an instance file, writes one CSV table (to `--out`
//! or standard output) and finishes with a one-line JSON summary record on
//! standard output. All randomness comes from `--seed`: a sub-computation
//! labelled `name` draws from `derive_seed(seed, "<command>/<name>")`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use rearrange_core::admissibility::certify;
use rearrange_core::config::Instance;
use rearrange_core::functional::{eval_phi, star_of, Engine, EngineKind, DEFAULT_SAMPLES};
use rearrange_core::kernels;
use rearrange_core::orbit::{dist_to_orbit, OrbitOptions};
use rearrange_core::rng::{derive_seed, stream};
use rearrange_core::settuple::random::{random_tuple, Kind};
use rearrange_core::settuple::{ball_tuple, radial_from_harmonic, rasterize, GridSpec, SetRepr, SetTuple};
use rearrange_core::spectral::balanced_gap;
use rearrange_core::stability::{deficit_curve, expansion_check, preset_harmonic};
use rearrange_core::symflow::{default_schedule, flow_to_balls};
use rearrange_core::{LabError, LinearFamily, MeasureSpec, Result};

#[derive(Parser, Debug)]
#[command(name = "rearrange", version, about = "Numerical laboratory for multilinear rearrangement functionals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Instance file (flat `key = value` text).
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum)]
    engine: Option<EngineArg>,
    /// Monte Carlo sample count.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the CSV table here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum EngineArg {
    Mc,
    Fiber,
    Exact,
}

impl From<EngineArg> for EngineKind {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Mc => EngineKind::Mc,
            EngineArg::Fiber => EngineKind::Fiber,
            EngineArg::Exact => EngineKind::Exact,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq)]
enum TupleArg {
    Balls,
    Random,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum KindArg {
    Mixed,
    Ellipsoid,
    Radial,
    Grid,
}

impl KindArg {
    fn kind(self) -> Option<Kind> {
        match self {
            KindArg::Mixed => None,
            KindArg::Ellipsoid => Some(Kind::Ellipsoid),
            KindArg::Radial => Some(Kind::Radial),
            KindArg::Grid => Some(Kind::Grid),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Admissibility verdict with face witnesses.
    Certify {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate Φ on the ball tuple or a random tuple.
    Phi {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "balls")]
        tuple: TupleArg,
        #[arg(long, value_enum, default_value = "mixed")]
        kind: KindArg,
    },
    /// Radial kernel profiles K_j and their boundary slopes.
    Kernels {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Steiner flow of a random raster tuple towards the balls.
    Flow {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 50)]
        steps: usize,
    },
    /// Distance to the symmetry orbit of the balls.
    Dist {
        #[command(flatten)]
        common: Common,
        /// Perturb the balls by this harmonic preset instead of drawing a random tuple.
        #[arg(long)]
        harmonic: Option<String>,
        #[arg(long, default_value_t = 0.05)]
        s: f64,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        /// Raster cells per radius for two-dimensional targets.
        #[arg(long, default_value_t = 128)]
        cells: usize,
    },
    /// Balanced spectral gap of the second-order form.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 32)]
        nu_max: usize,
    },
    /// Deficit curve of a harmonic perturbation.
    Deficit {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "nu3")]
        harmonic: String,
        /// `start:stop:count`, or a single value.
        #[arg(long, default_value = "0.02:0.1:5")]
        s: String,
        /// Compare with the second-order expansion instead.
        #[arg(long)]
        expansion: bool,
    },
    /// Structural summary: nondegeneracy, admissibility, kernel slopes, gap.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 32)]
        nu_max: usize,
    },
}

/// What a subcommand produced.
struct Output {
    csv: String,
    summary: Value,
    /// Set when a certified property failed beyond its error bars.
    violation: Option<String>,
}

struct Setup {
    inst: Instance,
    fam: LinearFamily,
    spec: MeasureSpec,
    seed: u64,
    samples: usize,
    engine: Option<EngineKind>,
}

impl Setup {
    fn new(c: &Common) -> Result<Self> {
        let inst = Instance::load(&c.instance)?;
        let fam = inst.family()?;
        let spec = inst.spec()?;
        let seed = c.seed.or(inst.seed).unwrap_or(0);
        let samples = c.samples.or(inst.samples).unwrap_or(DEFAULT_SAMPLES);
        if samples < 2 {
            return Err(LabError::argument("--samples must be at least 2"));
        }
        let engine = c.engine.map(EngineKind::from).or(inst.engine);
        Ok(Setup { inst, fam, spec, seed, samples, engine })
    }

    fn seed_for(&self, command: &str, name: &str) -> u64 {
        derive_seed(self.seed, &format!("{command}/{name}"))
    }

    /// The requested engine, else the deterministic one if it applies, else MC.
    fn engine(&self, command: &str, e: &SetTuple) -> Engine {
        let mc = Engine::mc(self.samples, self.seed_for(command, "mc"));
        match self.engine {
            Some(EngineKind::Mc) => mc,
            Some(EngineKind::Fiber) => Engine::fiber(),
            Some(EngineKind::Exact) => Engine::exact(),
            None => Engine::deterministic_for(&self.fam, e).unwrap_or(mc),
        }
    }

    fn header(&self, command: &str) -> serde_json::Map<String, Value> {
        let mut m = serde_json::Map::new();
        m.insert("command".into(), json!(command));
        m.insert("instance".into(), json!(self.inst.name));
        m.insert("d".into(), json!(self.spec.d));
        m.insert("seed".into(), json!(self.seed));
        m
    }
}

fn summary(mut head: serde_json::Map<String, Value>, body: Value) -> Value {
    if let Value::Object(b) = body {
        head.extend(b);
    }
    Value::Object(head)
}

/// Parses `start:stop:count` (inclusive, evenly spaced) or a single number.
pub fn parse_s_range(text: &str) -> Result<Vec<f64>> {
    let bad = || LabError::argument(format!("--s expects start:stop:count, got {text:?}"));
    let parts: Vec<&str> = text.split(':').collect();
    match parts[..] {
        [one] => Ok(vec![one.trim().parse().map_err(|_| bad())?]),
        [a, b, n] => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            let n: usize = n.trim().parse().map_err(|_| bad())?;
            match n {
                0 => Err(bad()),
                1 => Ok(vec![a]),
                _ => Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()),
            }
        }
        _ => Err(bad()),
    }
}

/// Rasters every non-raster set with cell `r_unit / cells`.
fn rasterized(t: &SetTuple, cells: usize, r_unit: f64) -> Result<SetTuple> {
    if t.d == 1 {
        return Ok(t.clone());
    }
    let r_max = t.sets.iter().map(|s| {
        let (lo, hi) = s.bounding_box();
        lo.iter().chain(&hi).fold(0.0_f64, |m, v| m.max(v.abs()))
    });
    let reach = r_max.fold(0.0_f64, f64::max);
    let h = r_unit / cells as f64;
    let spec = GridSpec::new(t.d, h, (reach / h).ceil() as usize + 2)?;
    let sets = t
        .sets
        .iter()
        .map(|s| match s {
            SetRepr::Grid(_) => s.clone(),
            _ => SetRepr::Grid(rasterize(s, spec)),
        })
        .collect();
    SetTuple::new(t.d, sets)
}

fn cmd_certify(c: &Common) -> Result<Output> {
    let st = Setup::new(c)?;
    let nd = st.fam.validate_nondegenerate()?;
    let cert = certify(&st.fam, &st.spec.e, st.spec.d)?;
    let mut csv = String::from("k,face_reached,sign,witness,min_slack,strict_slack,left_derivative,strict_derivative\n");
    for ic in &cert.indices {
        let (sign, point, slack) = match &ic.witness {
            Some(w) => (
                format!("{}", w.sign),
                w.point.iter().map(|v| format!("{v:.12e}")).collect::<Vec<_>>().join(" "),
                format!("{:.12e}", w.min_slack),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        let dv = ic
            .derivative
            .as_ref()
            .and_then(|d| d.estimate())
            .map(|e| format!("{:.9e}", e.value))
            .unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{sign},{point},{slack},{},{dv},{}\n",
            ic.k + 1,
            ic.face_reached,
            ic.strict_slack,
            ic.strict_derivative
        ));
    }
    let body = json!({
        "verdict": cert.verdict.to_string(),
        "nondegenerate": nd.pass,
        "e_reduced": cert.e_reduced,
        "generic": cert.genericity.as_ref().map(|g| g.generic),
        "vertices": cert.genericity.as_ref().map(|g| g.vertices.len()),
    });
    Ok(Output { csv, summary: summary(st.header("certify"), body), violation: None })
}

fn cmd_phi(c: &Common, tuple: TupleArg, kind: KindArg) -> Result<Output> {
    let st = Setup::new(c)?;
    let e = match tuple {
        TupleArg::Balls => ball_tuple(&st.spec),
        TupleArg::Random => {
            let mut rng = stream(st.seed_for("phi", "tuple"), 0);
            random_tuple(&st.spec.e, st.spec.d, kind.kind(), &mut rng)?
        }
    };
    let engine = st.engine("phi", &e);
    let phi = eval_phi(&st.fam, &e, engine)?;
    let mut csv = String::from("tuple,value,stderr,engine,samples,seed\n");
    let row = |name: &str, p: &rearrange_core::functional::PhiEstimate| {
        format!("{name},{:.15e},{:.6e},{},{},{}\n", p.value, p.stderr, p.engine, p.samples, p.seed)
    };
    csv.push_str(&row("E", &phi));
    let mut body = json!({
        "value": phi.value,
        "stderr": phi.stderr,
        "engine": phi.engine.to_string(),
        "samples": phi.samples,
    });
    let mut violation = None;
    if tuple == TupleArg::Random {
        let star = star_of(&e);
        let ps = eval_phi(&st.fam, &star, st.engine("phi", &star))?;
        csv.push_str(&row("E*", &ps));
        let gap = ps.value - phi.value;
        let sigma = phi.stderr.hypot(ps.stderr);
        body["phi_star"] = json!(ps.value);
        body["phi_star_stderr"] = json!(ps.stderr);
        body["deficit"] = json!(gap);
        if gap < -3.0 * sigma {
            violation = Some(format!("Φ(E) exceeds Φ(E*) by {} > 3σ = {}", -gap, 3.0 * sigma));
        }
    }
    Ok(Output { csv, summary: summary(st.header("phi"), body), violation })
}

fn cmd_kernels(c: &Common, points: usize) -> Result<Output> {
    let st = Setup::new(c)?;
    let mut csv = String::from("j,t,K\n");
    let mut per = Vec::new();
    for j in 0..st.fam.len() {
        let p = kernels::profile(&st.fam, &st.spec, j, points)?;
        for (t, v) in p.t.iter().zip(&p.values) {
            csv.push_str(&format!("{},{t:.12e},{v:.15e}\n", j + 1));
        }
        let gamma = if st.spec.d >= 2 {
            kernels::gamma(&st.fam, &st.spec, j).ok().map(|g| json!({"gamma": g.gamma, "differentiable": g.differentiable}))
        } else {
            None
        };
        per.push(json!({
            "j": j + 1,
            "support_radius": p.support_radius,
            "left_derivative": p.left_derivative,
            "log_concavity_defect": p.log_concavity_defect(),
            "monotonicity_defect": p.monotonicity_defect(),
            "gamma": gamma,
        }));
    }
    Ok(Output { csv, summary: summary(st.header("kernels"), json!({ "kernels": per })), violation: None })
}

fn cmd_flow(c: &Common, steps: usize) -> Result<Output> {
    let st = Setup::new(c)?;
    let mut rng = stream(st.seed_for("flow", "tuple"), 0);
    let e = random_tuple(&st.spec.e, st.spec.d, Some(Kind::Grid), &mut rng)?;
    // An instance-level fiber default does not apply to rasters; an explicit flag is an error.
    let engine = match (st.engine, c.engine) {
        (Some(EngineKind::Fiber), Some(_)) => {
            return Err(LabError::argument("the fiber engine does not accept raster sets"))
        }
        (Some(EngineKind::Fiber), None) => Engine::mc(st.samples, st.seed_for("flow", "mc")),
        _ => st.engine("flow", &e),
    };
    let traj = flow_to_balls(&st.fam, &e, &default_schedule(st.spec.d, steps)?, engine)?;
    let last = traj.last();
    let body = json!({
        "steps": steps,
        "engine": engine.kind.to_string(),
        "phi_start": traj.steps[0].phi,
        "phi_end": last.phi,
        "distance_start": traj.steps[0].distance,
        "distance_end": last.distance,
        "floor": traj.floor,
        "monotone": traj.monotone,
        "measures_preserved": traj.measures_preserved,
        "stalled": traj.stalled,
    });
    let violation = if !traj.measures_preserved {
        Some("a Steiner step changed a raster measure".to_string())
    } else if !traj.monotone {
        Some("Φ decreased along the flow beyond 3σ".to_string())
    } else {
        None
    };
    Ok(Output { csv: traj.to_csv(), summary: summary(st.header("flow"), body), violation })
}

fn cmd_dist(c: &Common, harmonic: Option<&str>, s: f64, restarts: usize, cells: usize) -> Result<Output> {
    let st = Setup::new(c)?;
    let e = match harmonic {
        Some(h) => radial_from_harmonic(&preset_harmonic(h, &st.fam, &st.spec)?, s, &st.spec)?,
        None => {
            let mut rng = stream(st.seed_for("dist", "tuple"), 0);
            random_tuple(&st.spec.e, st.spec.d, Some(Kind::Grid), &mut rng)?
        }
    };
    let r_max = st.spec.radii().into_iter().fold(0.0, f64::max);
    let e = rasterized(&e, cells, r_max)?;
    let opts = OrbitOptions { restarts, seed: st.seed_for("dist", "restarts"), ..OrbitOptions::default() };
    let fit = dist_to_orbit(&st.fam, &e, &st.spec, opts)?;
    let mut csv = String::from("restart,distance,sum,evals\n");
    for r in &fit.restarts {
        csv.push_str(&format!("{},{:.12e},{:.12e},{}\n", r.index, r.distance, r.sum, r.evals));
    }
    let body = json!({
        "distance": fit.distance,
        "sum": fit.sum,
        "v": fit.v,
        "psi": fit.psi,
        "near_optimal": fit.near_optimal.len(),
        "upper_bound_only": fit.upper_bound_only,
    });
    Ok(Output { csv, summary: summary(st.header("dist"), body), violation: None })
}

fn cmd_spectrum(c: &Common, nu_max: usize) -> Result<Output> {
    let st = Setup::new(c)?;
    let (jp, n) = st.inst.balancing(&st.fam)?;
    let rep = balanced_gap(&st.fam, &st.spec, &jp, n, nu_max)?;
    let body = json!({
        "jprime": jp.iter().map(|j| j + 1).collect::<Vec<_>>(),
        "n": n + 1,
        "gammas": rep.gammas,
        "a": rep.a,
        "decay": rep.decay,
        "tail_bound": rep.tail_bound,
        "gap_below_half": rep.a < 0.5 && rep.tail_bound.is_some_and(|t| t < 0.5),
    });
    Ok(Output { csv: rep.to_csv(), summary: summary(st.header("spectrum"), body), violation: None })
}

fn cmd_deficit(c: &Common, harmonic: &str, s: &str, expansion: bool) -> Result<Output> {
    let st = Setup::new(c)?;
    let s_list = parse_s_range(s)?;
    let g = preset_harmonic(harmonic, &st.fam, &st.spec)?;
    let probe = radial_from_harmonic(&g, s_list[0], &st.spec)?;
    let engine = st.engine("deficit", &probe);
    let fit_json = |f: &Option<rearrange_core::stability::PowerFit>| {
        f.as_ref().map(|f| {
            json!({
                "exponent": f.exponent,
                "constant": f.constant,
                "exponent_ci": f.exponent_ci,
                "constant_ci": f.constant_ci,
                "window": f.window,
            })
        })
    };
    if expansion {
        let rep = expansion_check(&st.fam, &st.spec, &g, &s_list, engine)?;
        let body = json!({
            "harmonic": harmonic,
            "engine": engine.kind.to_string(),
            "coefficient": rep.coefficient,
            "weighted_norm": rep.weighted_norm,
            "q": rep.q,
            "max_relative_residual": rep.max_relative_residual(),
            "residual_fit": fit_json(&rep.residual_fit),
        });
        return Ok(Output { csv: rep.to_csv(), summary: summary(st.header("deficit"), body), violation: None });
    }
    let curve = deficit_curve(&st.fam, &st.spec, &g, &s_list, engine, harmonic)?;
    let body = json!({
        "harmonic": harmonic,
        "engine": engine.kind.to_string(),
        "fit": fit_json(&curve.fit),
        "indeterminate": curve.indeterminate(),
        "consistent": curve.all_consistent(),
    });
    let violation = (!curve.all_consistent()).then(|| "negative deficit beyond 3σ".to_string());
    Ok(Output { csv: curve.to_csv(), summary: summary(st.header("deficit"), body), violation })
}

fn cmd_report(c: &Common, nu_max: usize) -> Result<Output> {
    let st = Setup::new(c)?;
    let mut rows = vec![("family".to_string(), "maps".to_string(), st.fam.len().to_string())];
    let nd = st.fam.validate_nondegenerate()?;
    rows.push(("family".into(), "nondegenerate".into(), nd.pass.to_string()));
    let mut body = json!({ "nondegenerate": nd.pass });
    if nd.pass {
        let cert = certify(&st.fam, &st.spec.e, st.spec.d)?;
        rows.push(("admissibility".into(), "verdict".into(), cert.verdict.to_string()));
        body["verdict"] = json!(cert.verdict.to_string());
        if let Some(g) = &cert.genericity {
            rows.push(("admissibility".into(), "generic".into(), g.generic.to_string()));
            body["generic"] = json!(g.generic);
        }
        let ball = ball_tuple(&st.spec);
        if let Some(engine) = Engine::deterministic_for(&st.fam, &ball) {
            let phi = eval_phi(&st.fam, &ball, engine)?;
            rows.push(("functional".into(), "phi_star".into(), format!("{:.15e}", phi.value)));
            body["phi_star"] = json!(phi.value);
        }
        if st.spec.d == 2 && cert.verdict == rearrange_core::admissibility::Verdict::StrictlyAdmissible {
            let (jp, n) = st.inst.balancing(&st.fam)?;
            let rep = balanced_gap(&st.fam, &st.spec, &jp, n, nu_max)?;
            for (j, g) in rep.gammas.iter().enumerate() {
                rows.push(("kernels".into(), format!("gamma_{}", j + 1), format!("{g:.12e}")));
            }
            rows.push(("spectrum".into(), "a".into(), format!("{:.12e}", rep.a)));
            body["gammas"] = json!(rep.gammas);
            body["a"] = json!(rep.a);
            body["tail_bound"] = json!(rep.tail_bound);
        }
    }
    let mut csv = String::from("section,key,value\n");
    for (a, b, v) in rows {
        csv.push_str(&format!("{a},{b},{v}\n"));
    }
    Ok(Output { csv, summary: summary(st.header("report"), body), violation: None })
}

fn dispatch(cmd: &Command) -> Result<(Output, Option<PathBuf>)> {
    let (out, common) = match cmd {
        Command::Certify { common } => (cmd_certify(common)?, common),
        Command::Phi { common, tuple, kind } => (cmd_phi(common, *tuple, *kind)?, common),
        Command::Kernels { common, points } => (cmd_kernels(common, *points)?, common),
        Command::Flow { common, steps } => (cmd_flow(common, *steps)?, common),
        Command::Dist { common, harmonic, s, restarts, cells } => {
            (cmd_dist(common, harmonic.as_deref(), *s, *restarts, *cells)?, common)
        }
        Command::Spectrum { common, nu_max } => (cmd_spectrum(common, *nu_max)?, common),
        Command::Deficit { common, harmonic, s, expansion } => (cmd_deficit(common, harmonic, s, *expansion)?, common),
        Command::Report { common, nu_max } => (cmd_report(common, *nu_max)?, common),
    };
    Ok((out, common.out.clone()))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| LabError::argument(format!("cannot write {}: {e}", path.display())))
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() { write!(stderr, "{}", e.render()) } else { write!(stdout, "{}", e.render()) };
            return code;
        }
    };
    let result = dispatch(&cli.command).and_then(|(out, path)| {
        match &path {
            Some(p) => write_file(p, &out.csv)?,
            None => {
                let _ = stdout.write_all(out.csv.as_bytes());
            }
        }
        let _ = writeln!(stdout, "{}", out.summary);
        Ok(out.violation)
    });
    match result {
        Ok(None) => 0,
        Ok(Some(v)) => {
            let err = LabError::violation(v);
            let _ = writeln!(stderr, "error: {err}");
            err.exit_code()
        }
        Err(err) => {
            let _ = writeln!(stderr, "error: {err}");
            err.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("rearrange").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    const RS: &str = "name = rs\nd = 1\nm = 2\ncoeffs = 1 0 0 1 1 1\ne = 1 1 1\n";

    #[test]
    fn s_ranges() {
        assert_eq!(parse_s_range("0.02:0.1:5").unwrap().len(), 5);
        assert_eq!(parse_s_range("0.3").unwrap(), vec![0.3]);
        let v = parse_s_range("1:2:3").unwrap();
        assert_eq!(v, vec![1.0, 1.5, 2.0]);
        for bad in ["1:2", "a:b:c", "1:2:0", ""] {
            assert!(parse_s_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn usage_errors_exit_with_one() {
        assert_eq!(call(&["frobnicate"]).0, 1);
        assert_eq!(call(&["phi"]).0, 1);
        assert_eq!(call(&["phi", "--instance", "x", "--bogus"]).0, 1);
        assert_eq!(call(&["--help"]).0, 0);
    }

    #[test]
    fn bad_instances_exit_with_one() {
        let f = instance("d = 1\nm = 2\ncoeffs = 1 0 0 1 1 1\ne = 1 1\n");
        let (code, _, err) = call(&["phi", "--instance", f.path().to_str().unwrap()]);
        assert_eq!(code, 1, "{err}");
        assert_eq!(call(&["phi", "--instance", "/nonexistent/rs.cfg"]).0, 1);
    }

    #[test]
    fn structural_failures_exit_with_two() {
        let f = instance("d = 1\nm = 2\ncoeffs = 1 0 2 0 1 1\ne = 1 1 1\n");
        let (code, _, err) = call(&["certify", "--instance", f.path().to_str().unwrap()]);
        assert_eq!(code, 2, "{err}");
    }

    #[test]
    fn exact_phi_of_unit_intervals() {
        let f = instance(RS);
        let (code, out, _) = call(&["phi", "--instance", f.path().to_str().unwrap()]);
        assert_eq!(code, 0);
        let last: Value = serde_json::from_str(out.lines().last().unwrap()).unwrap();
        assert_eq!(last["value"], json!(0.75));
        assert_eq!(last["engine"], json!("exact"));
    }

    #[test]
    fn certify_reports_the_verdict() {
        let f = instance(RS);
        let (code, out, _) = call(&["certify", "--instance", f.path().to_str().unwrap()]);
        assert_eq!(code, 0);
        assert!(out.starts_with("k,face_reached"));
        let last: Value = serde_json::from_str(out.lines().last().unwrap()).unwrap();
        assert_eq!(last["verdict"], json!("strictly-admissible"));
        assert_eq!(last["generic"], json!(true));
    }

    #[test]
    fn out_flag_moves_the_table() {
        let f = instance(RS);
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("phi.csv");
        let (code, out, _) =
            call(&["phi", "--instance", f.path().to_str().unwrap(), "--out", csv.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 1);
        assert!(std::fs::read_to_string(csv).unwrap().starts_with("tuple,value"));
    }

    #[test]
    fn seeded_runs_repeat() {
        let f = instance(RS);
        let p = f.path().to_str().unwrap();
        let args = ["phi", "--instance", p, "--tuple", "random", "--engine", "mc", "--samples", "4096", "--seed", "9"];
        let a = call(&args);
        assert_eq!(a.0, 0, "{}", a.2);
        assert_eq!(a, call(&args));
        let mut other = args;
        other[9] = "10";
        assert_ne!(a.1, call(&other).1);
    }
}
