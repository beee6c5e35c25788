use fem_accuracy::basis::PkBasis;
use fem_accuracy::bounds::{
    global_interp_bound, local_interp_bound, point_bound_check, seminorm_bound_check, xi, ConstantBundle, Sampling,
};
use fem_accuracy::functions::{PolynomialFunction, SinePi};
use fem_accuracy::geometry::{Simplex, SimplexMesh};
use fem_accuracy::norms::{default_degree, interpolation_error, seminorm, Analytic, SobolevIndex};
use fem_accuracy::Constants64;

fn admissible(n: usize, m: usize, k: usize, p: f64) -> bool {
    SobolevIndex::new(m, p, n).unwrap().check_admissible(k).is_ok()
}

/// First k after which 𝒞_k strictly decreases through k = 40.
fn peak(n: usize, m: usize, p: f64) -> usize {
    let c: Vec<(usize, f64)> = (1..=40)
        .filter(|&k| admissible(n, m, k, p))
        .map(|k| (k, ConstantBundle::new(n, m, k, p).script_c_k().unwrap()))
        .collect();
    let mut i = c.len() - 1;
    while i > 0 && c[i - 1].1 > c[i].1 {
        i -= 1;
    }
    c[i].0
}

#[test]
fn constant_rises_then_decays() {
    // Recorded peaks; past them 𝒞_k decreases strictly and tends to 0.
    for (n, m, p, k_peak) in [(1, 0, 2.0, 1), (1, 1, 2.0, 3), (2, 1, 2.0, 4), (2, 1, 3.0, 4)] {
        assert_eq!(peak(n, m, p), k_peak, "n={n} m={m} p={p}");
        let far = ConstantBundle::new(n, m, 200, p).ln_script_c_k().unwrap();
        assert!(far < -500.0);
    }
}

#[test]
fn constant_positive_finite_and_log_matches_direct() {
    for n in 1..=3 {
        for m in 0..=2 {
            for p in [1.5, 2.0, 3.0] {
                for k in 1..=15 {
                    if !admissible(n, m, k, p) {
                        continue;
                    }
                    let b = ConstantBundle::new(n, m, k, p).with_sigma(1.5).with_lambda(2.0).with_cea_ratio(1.2);
                    let log = b.script_c_k().unwrap();
                    let direct = b.script_c_k_direct().unwrap();
                    assert!(log > 0.0 && log.is_finite());
                    assert!(((log - direct) / direct).abs() < 1e-10, "n{n} m{m} p{p} k{k}: {log} vs {direct}");
                }
            }
        }
    }
    // The log stays finite where the plain product overflows.
    let b: Constants64 = ConstantBundle::new(3, 2, 400, 2.0);
    assert!(b.ln_script_c_k().unwrap().is_finite());
    assert!(!b.script_c_k_direct().unwrap().is_normal());
}

#[test]
fn constant_rejects_inadmissible_with_named_inequality() {
    let err = ConstantBundle::new(2, 2, 2, 2.0).script_c_k().unwrap_err().to_string();
    assert!(err.contains("m ≤ k−1"), "{err}");
}

#[test]
fn every_bound_check_passes_on_the_grid() {
    let small = Sampling { lattice: 30, random: 2000, seed: 3 };
    for n in 1..=2 {
        let reference = Simplex::<f64>::reference(n);
        for k in 1..=4 {
            let basis = PkBasis::new(n, k).unwrap();
            for r in 0..=2 {
                let rep = point_bound_check::<f64>(&basis, r, small);
                assert!(rep.pass, "{rep:?}");
            }
            for l in 0..=1 {
                for p in [1.5, 2.0, 3.0] {
                    let rep = seminorm_bound_check(&basis, &reference, l, p).unwrap();
                    assert!(rep.pass, "{rep:?}");
                    assert_eq!(rep.warning.is_some(), !SobolevIndex::new(l, p, n).unwrap().embedding_holds(k, l));
                }
            }
        }
    }
}

#[test]
fn seminorm_bound_on_scaled_elements() {
    // The 1/ρ^l factor must track the element size.
    let basis = PkBasis::new(2, 3).unwrap();
    for s in [0.5, 0.1, 0.01] {
        let simplex = Simplex::<f64>::reference(2).scaled(s).unwrap();
        for p in [1.5, 2.0, 3.0] {
            assert!(seminorm_bound_check(&basis, &simplex, 1, p).unwrap().pass);
        }
    }
}

#[test]
fn interpolation_bound_for_sine() {
    let u = SinePi::new(1);
    let mesh = SimplexMesh::uniform_1d(0.0, 1.0, 8).unwrap();
    let basis = PkBasis::new(1, 2).unwrap();
    let measured = interpolation_error(&u, &mesh, &basis, 0, 2.0).unwrap().norm.value;
    let u_semi = seminorm(&Analytic(&u), &mesh, 3, 2.0, default_degree(2)).unwrap().value;
    let bundle = ConstantBundle::from_mesh(&mesh, 1, 2, 2.0);
    let bound = local_interp_bound(&bundle, u_semi, mesh.h(), 0).unwrap();
    assert!(measured <= bound, "{measured} > {bound}");
    let global = global_interp_bound(&bundle, u_semi, mesh.h()).unwrap();
    assert!(interpolation_error(&u, &mesh, &basis, 1, 2.0).unwrap().norm.value <= global);
}

#[test]
fn interpolation_bound_trivial_for_polynomials() {
    let u = PolynomialFunction::univariate(&[0.3, -1.0, 2.0]);
    let mesh = SimplexMesh::uniform_1d(0.0, 1.0, 4).unwrap();
    let err = interpolation_error(&u, &mesh, &PkBasis::new(1, 2).unwrap(), 1, 2.0).unwrap();
    assert!(err.norm.value < 1e-10);
}

#[test]
fn xi_is_bounded_by_its_cap() {
    for m in 0..4 {
        for p in [1.5, 2.0, 3.0] {
            let cap = xi(m, p, 1.0);
            for h in [1e-3, 0.1, 0.5, 0.99] {
                assert!(xi(m, p, h) <= cap);
            }
        }
    }
}

#[test]
fn single_precision_agrees() {
    let a = ConstantBundle::<f32>::new(1, 1, 2, 2.0).script_c_k().unwrap();
    let b = ConstantBundle::<f32>::new(1, 1, 3, 2.0).script_c_k().unwrap();
    assert!((b / a - 1.35).abs() < 1e-5);
    let tri = fem_accuracy::Simplex32::reference(2);
    assert!((tri.inscribed_diameter() - (2.0 - 2f32.sqrt())).abs() < 1e-6);
    let rep = point_bound_check::<f32>(&PkBasis::new(1, 2).unwrap(), 1, Sampling { lattice: 20, random: 100, seed: 1 });
    assert!(rep.pass && (rep.measured - 4.0).abs() < 1e-5);
}
