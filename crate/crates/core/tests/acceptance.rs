//! Acceptance suite: one PASS/FAIL line per criterion; exits nonzero if any fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::process::Command;
use std::time::{Duration, Instant};

use fem_accuracy::accuracy::{
    h_star, h_star_sequence, prob_law, weak_star_test, asymptotic_slope, AccuracyLaw, Bump, CeaModel, ElementPair,
    LawKind, SequenceParams, SineModel,
};
use fem_accuracy::basis::PkBasis;
use fem_accuracy::bounds::{local_interp_bound, point_bound_check, seminorm_bound_check, ConstantBundle, Sampling};
use fem_accuracy::fem1d::{convergence_study, loglog_slope, ModelProblem};
use fem_accuracy::functions::SinePi;
use fem_accuracy::geometry::{Simplex, SimplexMesh};
use fem_accuracy::norms::{interpolation_error, seminorm, default_degree, Analytic};
use fem_accuracy::scalar::Rational;
use num_traits::{One, Zero};

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    if t <= limit {
        Ok(t)
    } else {
        Err(format!("runtime {t:.2?} exceeds {limit:?}"))
    }
}

fn unisolvence() -> Outcome {
    let start = Instant::now();
    let mut count = 0;
    for n in 1..=3 {
        for k in 1..=5 {
            let basis = PkBasis::new(n, k).map_err(|e| e.to_string())?;
            for (i, row) in basis.nodal_matrix().iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    let want = if i == j { Rational::one() } else { Rational::zero() };
                    if *v != want {
                        return Err(format!("p_{i}(M_{j}) = {v} for n={n}, k={k}"));
                    }
                }
            }
            let sum = basis.sum().reduce_barycentric();
            let nv = n + 1;
            if sum.terms().count() != 1 || sum.coefficient(&vec![0; nv]) != Rational::one() {
                return Err(format!("partition of unity fails for n={n}, k={k}"));
            }
            count += 1;
        }
    }
    let t = within(Duration::from_secs(10), start)?;
    Ok(format!("{count} bases exact, {t:.2?}"))
}

fn point_bounds() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for n in 1..=2 {
        for k in 1..=4 {
            let basis = PkBasis::new(n, k).map_err(|e| e.to_string())?;
            for r in 0..=2 {
                let rep = point_bound_check::<f64>(&basis, r, Sampling::default());
                if !rep.pass {
                    return Err(format!("{}: {} > {}", rep.bound_name, rep.measured, rep.bound));
                }
                worst = worst.max(rep.measured / rep.bound);
            }
        }
    }
    let t = within(Duration::from_secs(30), start)?;
    Ok(format!("max measured/bound = {worst:.3}, {t:.2?}"))
}

fn seminorm_bounds() -> Outcome {
    let start = Instant::now();
    let elements = [Simplex::<f64>::reference(1), Simplex::<f64>::reference(2)];
    let mut checks = 0;
    for simplex in &elements {
        for k in 1..=4 {
            let basis = PkBasis::new(simplex.dim(), k).map_err(|e| e.to_string())?;
            for l in 0..=1 {
                for p in [1.5, 2.0, 3.0] {
                    let rep = seminorm_bound_check(&basis, simplex, l, p).map_err(|e| e.to_string())?;
                    if !rep.pass {
                        return Err(format!("{}: {} > {}", rep.bound_name, rep.measured, rep.bound));
                    }
                    checks += 1;
                }
            }
        }
    }
    let t = within(Duration::from_secs(30), start)?;
    Ok(format!("{checks} checks, {t:.2?}"))
}

fn interpolation_bound() -> Outcome {
    let u = SinePi::new(1);
    let p = 2.0;
    let mut worst_order: f64 = 0.0;
    for k in 1..=3usize {
        let basis = PkBasis::new(1, k).map_err(|e| e.to_string())?;
        for l in 0..=1usize {
            let (mut hs, mut es) = (Vec::new(), Vec::new());
            for ne in [8usize, 16, 32] {
                let mesh = SimplexMesh::uniform_1d(0.0, 1.0, ne).map_err(|e| e.to_string())?;
                let measured = interpolation_error(&u, &mesh, &basis, l, p).map_err(|e| e.to_string())?.norm.value;
                let u_semi = seminorm(&Analytic(&u), &mesh, k + 1, p, default_degree(k)).map_err(|e| e.to_string())?.value;
                let bundle = ConstantBundle::from_mesh(&mesh, 1, k, p);
                let bound = local_interp_bound(&bundle, u_semi, mesh.h(), l).map_err(|e| e.to_string())?;
                if !(measured <= bound) {
                    return Err(format!("k={k}, l={l}, h=1/{ne}: {measured:e} > {bound:e}"));
                }
                hs.push(mesh.h());
                es.push(measured);
            }
            let slope = loglog_slope(&hs, &es);
            let want = (k + 1 - l) as f64;
            if (slope - want).abs() > 0.15 {
                return Err(format!("k={k}, l={l}: order {slope:.3}, expected {want}"));
            }
            worst_order = worst_order.max((slope - want).abs());
        }
    }
    Ok(format!("bounds hold, max |order − (k+1−l)| = {worst_order:.3}"))
}

fn galerkin() -> Outcome {
    let start = Instant::now();
    let problem = ModelProblem::new(SinePi::new(1));
    let elements = [8usize, 16, 32, 64, 128];
    let mut runs = 0;
    let mut worst_order: f64 = 0.0;
    let mut worst_position: f64 = 0.0;
    for k in 1..=3usize {
        for m in 0..=1usize {
            for p in [1.5, 2.0, 3.0] {
                let study = match convergence_study(&problem, k, m, p, &elements, 1.0) {
                    Ok(s) => s,
                    Err(fem_accuracy::Error::Inadmissible { .. }) => continue,
                    Err(e) => return Err(e.to_string()),
                };
                let want = (k + 1 - m) as f64;
                if (study.slope - want).abs() > 0.15 {
                    return Err(format!("k={k}, m={m}, p={p}: order {:.3}, expected {want}", study.slope));
                }
                if let Some(r) = study.reports.iter().find(|r| !r.pass) {
                    return Err(format!("k={k}, m={m}, p={p}, h={}: {:e} > {:e}", r.h, r.norm, r.bound));
                }
                worst_order = worst_order.max((study.slope - want).abs());
                worst_position = study.reports.iter().fold(worst_position, |a, r| a.max(r.position));
                runs += 1;
            }
        }
    }
    let t = within(Duration::from_secs(120), start)?;
    Ok(format!(
        "{runs} studies, max |order − (k+1−m)| = {worst_order:.3}, max error/bound = {worst_position:.1e}, {t:.2?}"
    ))
}

fn probability_law() -> Outcome {
    let pair = ElementPair::new(1, 3, 5.0, 0.8).map_err(|e| e.to_string())?;
    let law = AccuracyLaw::from_pair(&pair, LawKind::Nonlinear).map_err(|e| e.to_string())?;
    let hs = law.h_star;
    let eval = |h: f64| prob_law(&law, h).map_err(|e| e.to_string());
    if eval(hs)? != 0.5 {
        return Err(format!("P(h*) = {}", eval(hs)?));
    }
    let grid: Vec<f64> = (0..1000).map(|i| hs * 10f64.powf(-3.0 + 6.0 * i as f64 / 999.0)).collect();
    let vals = grid.iter().map(|&h| eval(h)).collect::<Result<Vec<_>, _>>()?;
    if let Some(w) = vals.windows(2).position(|w| !(w[1] < w[0])) {
        return Err(format!("not strictly decreasing at h = {}", grid[w]));
    }
    let small: Vec<f64> = (1..=8).map(|j| eval(hs * 10f64.powi(-j))).collect::<Result<_, _>>()?;
    let large: Vec<f64> = (1..=8).map(|j| eval(hs * 10f64.powi(j))).collect::<Result<_, _>>()?;
    let gaps_small: Vec<f64> = small.iter().map(|v| 1.0 - v).collect();
    if !gaps_small.windows(2).all(|w| w[1] <= w[0]) || gaps_small[7] > 1e-12 {
        return Err("limit 1 at 0+ not approached monotonically".into());
    }
    if !large.windows(2).all(|w| w[1] <= w[0]) || large[7] > 1e-12 {
        return Err("limit 0 at +∞ not approached monotonically".into());
    }
    for t in [0.25, 2.0, 1024.0, 2f64.powi(-40)] {
        let scaled = ElementPair::new(1, 3, 5.0 * t, 0.8 * t).map_err(|e| e.to_string())?;
        let scaled_law = AccuracyLaw::from_pair(&scaled, LawKind::Nonlinear).map_err(|e| e.to_string())?;
        if h_star(&scaled) != hs {
            return Err(format!("h* changes under scaling by {t}"));
        }
        for &h in &grid {
            if prob_law(&scaled_law, h).map_err(|e| e.to_string())? != eval(h)? {
                return Err(format!("P changes under scaling by {t} at h = {h}"));
            }
        }
    }
    Ok(format!("h* = {hs:.6}, 1000-point grid strictly decreasing, scaling exact"))
}

fn asymptote() -> Outcome {
    let start = Instant::now();
    let params = SequenceParams::default();
    let model = SineModel { p: params.p };
    let seq = h_star_sequence(&params, 200, &model, &CeaModel::Constant).map_err(|e| e.to_string())?;
    let target = asymptotic_slope(std::f64::consts::PI);
    let last = seq.last().ok_or("empty sequence")?;
    let rel = (last.h_star_over_q - target) / target;
    if rel.abs() > 0.05 {
        return Err(format!("h*_200/200 = {:.5}, relative error {rel:+.4}", last.h_star_over_q));
    }
    // Smallest q0 from which the sequence increases through q = 200.
    let mut q0 = seq.len();
    while q0 > 1 && seq[q0 - 1].h_star > seq[q0 - 2].h_star {
        q0 -= 1;
    }
    if q0 > 50 {
        return Err(format!("increasing only from q = {q0}"));
    }
    let t = within(Duration::from_secs(5), start)?;
    Ok(format!(
        "(n,m,p,k) = ({},{},{},{}): h*_200/200 = {:.5} vs 1/(eπ) = {target:.5} ({rel:+.2e}), increasing from q0 = {q0}, {t:.2?}",
        params.n, params.m, params.p, params.k, last.h_star_over_q
    ))
}

fn weak_star() -> Outcome {
    let start = Instant::now();
    let params = SequenceParams::default();
    let model = SineModel { p: params.p };
    let qs: Vec<usize> = (1..=40).collect();
    let report = weak_star_test(&params, &qs, &model, &CeaModel::Constant, &Bump::default()).map_err(|e| e.to_string())?;
    let first = report.first_index.ok_or("h*_q never exceeds 2")?;
    if !report.converged(1e-3) {
        let tail: Vec<String> = report.tail().iter().map(|r| format!("{}:{:.2e}", r.q, r.error)).collect();
        return Err(format!("tail errors {}", tail.join(" ")));
    }
    let t = within(Duration::from_secs(10), start)?;
    let tail = report.tail();
    Ok(format!(
        "first q with h*_q > 2 is {}, errors after it decrease from {:.2e} (q={}) to {:.2e} (q={}), {t:.2?}",
        report.rows[first].q,
        tail[0].error,
        tail[0].q,
        tail[tail.len() - 1].error,
        tail[tail.len() - 1].q
    ))
}

fn determinism() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_fem-accuracy");
    let commands: &[&[&str]] = &[
        &["basis", "--n", "2", "--k", "3", "--format", "json"],
        &["basis", "--n", "3", "--k", "2"],
        &["bounds", "--n", "2", "--k", "3", "--seed", "17"],
        &["bounds", "--n", "1", "--k", "4", "--format", "json"],
        &["constant"],
        &["constant", "--n", "2", "--m", "1", "--k", "3", "--p", "3", "--sigma", "2.5", "--format", "json"],
        &["prob", "--ck1", "2", "--ck2", "2", "--k1", "1", "--k2", "2"],
        &["prob", "--k1", "1", "--k2", "3", "--law", "heaviside", "--format", "json"],
        &["hstar-seq", "--qmax", "300"],
        &["hstar-seq", "--model", "exp", "--rate", "3", "--format", "json"],
        &["weakstar", "--qmax", "30"],
        &["converge", "--k", "2", "--m", "0", "--hmax", "0.125", "--hmin", "0.015625"],
        &["converge", "--k", "1", "--m", "1", "--p", "1.5", "--format", "json"],
    ];
    for args in commands {
        let run = || Command::new(exe).args(*args).output().map_err(|e| e.to_string());
        let (a, b) = (run()?, run()?);
        if !a.status.success() {
            return Err(format!("`{}` exited with {}", args.join(" "), a.status));
        }
        if a.stdout.is_empty() || a.stdout != b.stdout || a.stderr != b.stderr {
            return Err(format!("`{}` output differs between runs", args.join(" ")));
        }
    }
    Ok(format!("{} commands byte-identical across two runs", commands.len()))
}

fn main() {
    let criteria: [(&str, Criterion); 9] = [
        ("unisolvence and partition of unity", unisolvence),
        ("point bounds", point_bounds),
        ("semi-norm bounds", seminorm_bounds),
        ("interpolation bound and order", interpolation_bound),
        ("Galerkin convergence and a-priori bound", galerkin),
        ("probability-law properties", probability_law),
        ("h*_q asymptote", asymptote),
        ("weak-* convergence", weak_star),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {}: PASS  {name} — {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} — {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
