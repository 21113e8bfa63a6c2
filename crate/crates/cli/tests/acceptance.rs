//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use rearrange_core::admissibility::{certify, Verdict};
use rearrange_core::functional::{eval_phi, star_of, Engine};
use rearrange_core::kernels::{gamma, left_derivative_at, profile, LeftDerivative};
use rearrange_core::linalg;
use rearrange_core::orbit::{dist_to_orbit, orbit_member, psi_of, OrbitOptions};
use rearrange_core::rng::{self, StreamRng};
use rearrange_core::settuple::random::{random_tuple, Kind};
use rearrange_core::settuple::{ball_tuple, rasterize, symmetric_difference, GridSpec, SetRepr, SetTuple};
use rearrange_core::spectral::{balanced_gap, coupling_matrix, SpectralContext, SphereKernel};
use rearrange_core::stability::{
    deficit_curve, orbit_path_deficits, preset_harmonic, translation_tuple, SymmetryKind,
};
use rearrange_core::symflow::{default_schedule, flow_to_balls};
use rearrange_core::{kernels, LinearFamily, MeasureSpec};

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rs(d: usize, e: Vec<f64>) -> (LinearFamily, MeasureSpec) {
    (LinearFamily::riesz_sobolev(d), MeasureSpec::new(e, d).unwrap())
}

fn unit_discs() -> (LinearFamily, MeasureSpec) {
    rs(2, vec![PI; 3])
}

fn random_family(len: usize, r: &mut StreamRng) -> LinearFamily {
    loop {
        let coeffs: Vec<Vec<f64>> =
            (0..len).map(|_| (0..2).map(|_| (rng::uniform(r, -2.0, 3.0).floor()).clamp(-2.0, 2.0)).collect()).collect();
        if let Ok(fam) = LinearFamily::new(coeffs, 1) {
            if fam.validate_nondegenerate().is_ok_and(|n| n.pass) {
                return fam;
            }
        }
    }
}

fn bll_suite() -> Outcome {
    let start = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for i in 0..200u64 {
        let mut r = rng::stream(SEED, 1000 + i);
        let d = 1 + (i % 2) as usize;
        let len = 3 + ((i / 2) % 2) as usize;
        let fam = random_family(len, &mut r).with_dim(d).unwrap();
        let e: Vec<f64> = (0..len).map(|_| rng::uniform(&mut r, 0.5, 2.0)).collect();
        let t = random_tuple(&e, d, None, &mut r).unwrap();
        let star = star_of(&t);
        let eng = if d == 1 { Engine::exact() } else { Engine::mc(1 << 16, rng::derive_seed(SEED, &format!("bll/{i}"))) };
        let phi = eval_phi(&fam, &t, eng).unwrap();
        let phi_star = eval_phi(&fam, &star, Engine::deterministic_for(&fam, &star).unwrap_or(eng)).unwrap();
        let sigma = phi.stderr.hypot(phi_star.stderr);
        let excess = phi.value - phi_star.value;
        let z = if sigma > 0.0 { excess / sigma } else if excess > 1e-12 { f64::INFINITY } else { 0.0 };
        worst = worst.max(z);
        if excess > 3.0 * sigma + 1e-12 * phi_star.value {
            failures.push(i);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && secs <= 300.0;
    outcome(
        pass,
        format!("200 tuples, max (Φ(E) − Φ(E*))/σ = {worst:.2}, violations {failures:?}, {secs:.1}s (limit 300s)"),
    )
}

fn exact_oracle() -> Outcome {
    let (fam, spec) = rs(1, vec![1.0; 3]);
    let balls = ball_tuple(&spec);
    let exact = eval_phi(&fam, &balls, Engine::exact()).unwrap().value;
    let mc = eval_phi(&fam, &balls, Engine::mc(1 << 20, SEED)).unwrap();
    let dev = (mc.value - 0.75).abs();
    let pass = (exact - 0.75).abs() < 1e-12 && dev <= 3.0 * mc.stderr && dev <= 0.01 * 0.75;
    outcome(
        pass,
        format!("exact {exact}, MC {:.6} ± {:.2e} (|Δ| = {:.2} σ, {:.3}%)", mc.value, mc.stderr, dev / mc.stderr, 100.0 * dev / 0.75),
    )
}

fn admissibility() -> Outcome {
    let fam = LinearFamily::riesz_sobolev(1);
    let verdicts: Vec<Verdict> =
        [[1.0, 1.0, 1.0], [1.0, 1.0, 2.0], [1.0, 1.0, 3.0]].iter().map(|e| certify(&fam, e, 1).unwrap().verdict).collect();
    let generic = certify(&fam, &[1.0; 3], 1).unwrap().genericity.map(|g| g.generic);
    let pass = verdicts == [Verdict::StrictlyAdmissible, Verdict::WeaklyAdmissible, Verdict::Inadmissible]
        && generic == Some(true);
    let names: Vec<String> = verdicts.iter().map(|v| v.to_string()).collect();
    outcome(pass, format!("(1,1,1), (1,1,2), (1,1,3) → {}; generic(1,1,1) = {generic:?}", names.join(", ")))
}

fn kernel_derivative() -> Outcome {
    let (fam1, spec1) = rs(1, vec![1.0; 3]);
    let dk = match left_derivative_at(&fam1, &spec1, 2, 0.5).unwrap() {
        LeftDerivative::Estimate(e) => e.value,
        LeftDerivative::NotApplicable { .. } => f64::NAN,
    };
    let (fam2, spec2) = unit_discs();
    let g3 = gamma(&fam2, &spec2, 2).unwrap().gamma;
    let rel = (g3 / 3f64.sqrt() - 1.0).abs();
    let pass = (dk + 1.0).abs() <= 0.05 && rel <= 0.01;
    outcome(pass, format!("D⁻K₃(½) = {dk:.6} (target −1 ± 0.05), γ₃ = {g3:.8} (√3 within {:.2e})", rel))
}

fn log_concavity() -> Outcome {
    let four = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![1.0, -1.0]];
    let cases = [
        ("rs d=1 (1,1,1)", LinearFamily::riesz_sobolev(1), MeasureSpec::new(vec![1.0; 3], 1).unwrap()),
        ("rs d=1 (1,1.3,1.8)", LinearFamily::riesz_sobolev(1), MeasureSpec::new(vec![1.0, 1.3, 1.8], 1).unwrap()),
        ("rs d=2 unit discs", LinearFamily::riesz_sobolev(2), MeasureSpec::new(vec![PI; 3], 2).unwrap()),
        (
            "rs d=2 (1,1.2,1.5)π",
            LinearFamily::riesz_sobolev(2),
            MeasureSpec::new(vec![PI, 1.2 * PI, 1.5 * PI], 2).unwrap(),
        ),
        ("four maps d=2", LinearFamily::new(four, 2).unwrap(), MeasureSpec::new(vec![1.0, 1.0, 1.5, 1.5], 2).unwrap()),
    ];
    let mut worst = f64::NEG_INFINITY;
    let mut parts = Vec::new();
    for (name, fam, spec) in &cases {
        let w = (0..fam.len())
            .map(|j| profile(fam, spec, j, 201).unwrap().log_concavity_defect())
            .fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(w);
        parts.push(format!("{name}: {w:.1e}"));
    }
    outcome(worst <= 1e-6, format!("max Δ² log K = {worst:.2e} (limit 1e-6); {}", parts.join(", ")))
}

fn scalar_action() -> Outcome {
    let (fam, spec) = unit_discs();
    let mut eig_err: f64 = 0.0;
    let mut cross: f64 = 0.0;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let k = SphereKernel::new(&fam, &spec, i, j).unwrap();
        let l = k.lambdas(8).unwrap();
        for nu in 1..=8 {
            let x = nu as f64;
            let oracle = if (i, j) == (0, 1) { -(2.0 / x) * (2.0 * PI * x / 3.0).sin() } else { (2.0 / x) * (PI * x / 3.0).sin() };
            eig_err = eig_err.max((l[nu] - oracle).abs());
        }
        for nu in 1..=8 {
            for mu in 1..=8 {
                if nu != mu {
                    let c = coupling_matrix(&k, nu, mu, 64).unwrap();
                    cross = cross.max(c.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs())));
                }
            }
        }
    }
    let pass = eig_err <= 1e-3 && cross < 1e-8;
    outcome(pass, format!("max |λ_ν − oracle| = {eig_err:.2e} (ν ≤ 8, limit 1e-3), max cross-degree coupling = {cross:.2e} (limit 1e-8)"))
}

fn symmetry_saturation() -> Outcome {
    let (fam, spec) = unit_discs();
    let ctx = SpectralContext::new(&fam, &spec).unwrap();
    let gam = kernels::gammas(&fam, &spec).unwrap();
    let radii = spec.radii();
    let mut ratios = Vec::new();
    for v in [[1.0, 0.0, 0.0, 0.0], [0.3, -0.2, 0.5, 0.9]] {
        let g = translation_tuple(&fam, &spec, &v).unwrap();
        let w: f64 = (0..3).map(|j| gam[j] * radii[j].powi(-1) * g.component_norm_sq(j)).sum();
        ratios.push(ctx.eval_q(&g).unwrap() / w);
    }
    let pass = ratios.iter().all(|r| (r - 0.5).abs() <= 0.01);
    outcome(pass, format!("Q(G)/Σγ_j r_j^(1−d)‖G_j‖² = {ratios:.6?} (target 0.500 ± 0.01)"))
}

fn spectral_gap() -> Outcome {
    let (fam, spec) = unit_discs();
    let (jp, n) = fam.select_independent_subset().unwrap();
    let rep = balanced_gap(&fam, &spec, &jp, n, 32).unwrap();
    let (l1, l32) = (rep.norm(1).unwrap(), rep.norm(32).unwrap());
    let pass = rep.a <= 0.49 && l32 < l1 / 10.0;
    outcome(pass, format!("max_ν≤32 A_ν = {:.6} (limit 0.49), Λ_32 = {l32:.4e} vs Λ_1/10 = {:.4e}", rep.a, l1 / 10.0))
}

fn stability_exponent() -> Outcome {
    let start = Instant::now();
    let (fam, spec) = unit_discs();
    let s: Vec<f64> = (1..=5).map(|k| 0.02 * k as f64).collect();
    let g = preset_harmonic("nu3", &fam, &spec).unwrap();
    let curve = deficit_curve(&fam, &spec, &g, &s, Engine::fiber(), "nu3").unwrap();
    let (p, c) = curve.fit.as_ref().map(|f| (f.exponent, f.constant)).unwrap_or((f64::NAN, f64::NAN));
    let kinds = [
        ("translation", SymmetryKind::Translation(vec![1.0, 0.0, 0.0, 0.0])),
        ("shear", SymmetryKind::Shear(vec![vec![1.0, 0.0], vec![0.0, -1.0]])),
    ];
    let mut orbit_ok = true;
    let mut worst_z: f64 = 0.0;
    for (_, kind) in &kinds {
        for pt in orbit_path_deficits(&fam, &spec, kind, &s, Engine::fiber()).unwrap() {
            orbit_ok &= pt.is_zero_within(3.0);
            worst_z = worst_z.max(pt.deficit.abs() / pt.stderr);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = (p - 2.0).abs() <= 0.25 && c > 0.0 && orbit_ok && curve.all_consistent() && secs <= 600.0;
    outcome(
        pass,
        format!(
            "ν=3 exponent {p:.4} (2.0 ± 0.25), c = {c:.4}; orbit paths max |deficit|/σ = {worst_z:.2} (limit 3); {secs:.1}s (limit 600s)"
        ),
    )
}

fn steiner_flow() -> Outcome {
    let mut monotone = 0;
    let mut preserved = 0;
    let mut worst_drop = f64::NEG_INFINITY;
    let four = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![1.0, -1.0]];
    for i in 0..20u64 {
        let mut r = rng::stream(SEED, 3000 + i);
        let fam = if i % 2 == 0 { LinearFamily::riesz_sobolev(2) } else { LinearFamily::new(four.clone(), 2).unwrap() };
        let e: Vec<f64> = (0..fam.len()).map(|_| rng::uniform(&mut r, 0.5, 2.0)).collect();
        let t = random_tuple(&e, 2, Some(Kind::Grid), &mut r).unwrap();
        let eng = Engine::mc(1 << 16, rng::derive_seed(SEED, &format!("flow/{i}")));
        let traj = flow_to_balls(&fam, &t, &default_schedule(2, 50).unwrap(), eng).unwrap();
        monotone += traj.monotone as usize;
        preserved += traj.measures_preserved as usize;
        for w in traj.steps.windows(2) {
            worst_drop = worst_drop.max((w[0].phi - w[1].phi) / w[0].stderr.hypot(w[1].stderr));
        }
    }
    outcome(
        monotone == 20 && preserved == 20,
        format!("20 tuples × 50 steps: monotone {monotone}/20, raster measures preserved {preserved}/20, worst step drop {worst_drop:.2} σ"),
    )
}

fn orbit_recovery() -> Outcome {
    let (fam, spec) = unit_discs();
    let grid = GridSpec::covering(2, 1.0, 128, 2.0).unwrap();
    let mut ok = 0;
    let mut worst_v: f64 = 0.0;
    let mut worst_s: f64 = 0.0;
    let mut worst_dist: f64 = 0.0;
    for i in 0..10u64 {
        let mut r = rng::stream(SEED, 4000 + i);
        let (v0, s0) = loop {
            let v: Vec<f64> = (0..4).map(|_| rng::uniform(&mut r, -0.25, 0.25)).collect();
            let s: Vec<f64> = (0..2).map(|_| rng::uniform(&mut r, -0.2, 0.2)).collect();
            if linalg::norm(&v) >= 0.15 && linalg::norm(&s) >= 0.1 {
                break (v, s);
            }
        };
        let planted = orbit_member(&fam, &spec, &v0, &psi_of(2, &s0)).unwrap();
        let sets = planted.sets.iter().map(|s| SetRepr::Grid(rasterize(s, grid))).collect();
        let e = SetTuple::new(2, sets).unwrap();
        let floor = planted.sets.iter().zip(&e.sets).map(|(p, g)| symmetric_difference(g, p).unwrap()).fold(0.0, f64::max);
        let opts = OrbitOptions { restarts: 8, seed: rng::derive_seed(SEED, &format!("orbit/{i}")), ..OrbitOptions::default() };
        let fit = dist_to_orbit(&fam, &e, &spec, opts).unwrap();
        let ev = linalg::norm(&fit.v.iter().zip(&v0).map(|(a, b)| a - b).collect::<Vec<_>>()) / linalg::norm(&v0);
        let es = linalg::norm(&fit.s.iter().zip(&s0).map(|(a, b)| a - b).collect::<Vec<_>>()) / linalg::norm(&s0);
        worst_v = worst_v.max(ev);
        worst_s = worst_s.max(es);
        worst_dist = worst_dist.max(fit.distance / floor);
        if fit.distance <= floor * (1.0 + 1e-4) && ev <= 0.05 && es <= 0.05 {
            ok += 1;
        }
    }
    outcome(
        ok == 10,
        format!(
            "{ok}/10 recovered; max distance/raster floor = {worst_dist:.5}, max relative error v {:.2}%, ψ generator {:.2}%",
            100.0 * worst_v,
            100.0 * worst_s
        ),
    )
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_rearrange");
    let inst = |n: &str| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../instances").join(n);
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<Vec<String>> = vec![
        vec!["certify".into(), "--instance".into(), inst("rs111.cfg").display().to_string()],
        vec!["phi".into(), "--instance".into(), inst("four1d.cfg").display().to_string(), "--tuple".into(), "random".into(), "--engine".into(), "mc".into(), "--samples".into(), "65536".into(), "--seed".into(), "5".into()],
        vec!["phi".into(), "--instance".into(), inst("rs2d.cfg").display().to_string(), "--tuple".into(), "random".into(), "--engine".into(), "mc".into(), "--samples".into(), "65536".into(), "--seed".into(), "5".into()],
        vec!["kernels".into(), "--instance".into(), inst("rs2d.cfg").display().to_string(), "--points".into(), "51".into()],
        vec!["flow".into(), "--instance".into(), inst("rs2d.cfg").display().to_string(), "--samples".into(), "16384".into(), "--steps".into(), "10".into(), "--seed".into(), "8".into()],
        vec!["dist".into(), "--instance".into(), inst("rs2d.cfg").display().to_string(), "--cells".into(), "48".into(), "--restarts".into(), "4".into(), "--seed".into(), "2".into()],
        vec!["spectrum".into(), "--instance".into(), inst("rs2d.cfg").display().to_string(), "--nu-max".into(), "8".into()],
        vec!["deficit".into(), "--instance".into(), inst("rs2d.cfg").display().to_string(), "--harmonic".into(), "nu3".into(), "--s".into(), "0.1".into()],
        vec!["report".into(), "--instance".into(), inst("rs111.cfg").display().to_string()],
    ];
    let mut identical = 0;
    let mut bad = Vec::new();
    for (k, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = dir.path().join(format!("run{k}_{rep}.csv"));
            let o = Command::new(bin).args(args).arg("--out").arg(&out).output().unwrap();
            let table = std::fs::read(&out).unwrap_or_default();
            outputs.push((o.status.code(), o.stdout, table));
        }
        if outputs[0] == outputs[1] && outputs[0].0 == Some(0) {
            identical += 1;
        } else {
            bad.push(args[0].clone());
        }
    }
    outcome(identical == runs.len(), format!("{identical}/{} subcommand runs byte-identical on repeat; differing: {bad:?}", runs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("rearrangement inequality suite", bll_suite),
        ("exact oracle agreement", exact_oracle),
        ("admissibility certificates", admissibility),
        ("kernel derivative and γ₃", kernel_derivative),
        ("log-concavity of kernels", log_concavity),
        ("scalar action and eigenvalues", scalar_action),
        ("translation saturates the form", symmetry_saturation),
        ("balanced spectral gap", spectral_gap),
        ("stability exponent and orbit flatness", stability_exponent),
        ("Steiner flow monotonicity", steiner_flow),
        ("orbit distance recovery", orbit_recovery),
        ("CLI determinism", determinism),
    ];
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut total = Duration::ZERO;
    for (k, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.contains(&(k + 1)) {
            continue;
        }
        let t = Instant::now();
        let o = f();
        let dt = t.elapsed();
        total += dt;
        failed += !o.pass as usize;
        println!("{} {:>2} {name}: {} [{:.1}s]", if o.pass { "PASS" } else { "FAIL" }, k + 1, o.detail, dt.as_secs_f64());
    }
    println!("acceptance: {failed} failing, {:.1}s total", total.as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
