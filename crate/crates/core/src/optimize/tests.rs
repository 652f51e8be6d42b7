use super::*;
use crate::element::bezier_stiffness_2d;
use crate::mesh::boundary_half_mbb;
use proptest::prelude::*;

struct Lcg(u64);

impl Lcg {
    fn next(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

#[test]
fn simp_examples() {
    assert_eq!(simp_modulus(0.0, 3.0, 1.0, 1e-3).unwrap(), 1e-3);
    assert_eq!(simp_modulus(1.0, 3.0, 1.0, 1e-3).unwrap(), 1.0);
    assert!((simp_modulus(0.5, 3.0, 1.0, 1e-3).unwrap() - 0.125875).abs() < 1e-15);
    assert!(simp_modulus(1.1, 3.0, 1.0, 1e-3).is_err());
    assert!(simp_modulus(-0.1, 3.0, 1.0, 1e-3).is_err());
}

fn mbb_problem(nx: usize, ny: usize) -> (StaticProblem, BezierStiffness) {
    let mesh = IgaMesh::new_2d(nx, ny).unwrap();
    let k0 = bezier_stiffness_2d(0.3).unwrap();
    let bc = boundary_half_mbb(&mesh).unwrap();
    (StaticProblem::new(mesh, &k0, bc).unwrap(), k0)
}

fn evaluate(problem: &StaticProblem, k0: &BezierStiffness, x: &[f64]) -> (Compliance, f64) {
    let moduli: Vec<f64> = x
        .iter()
        .map(|&v| simp_modulus(v, 3.0, 1.0, 1e-3).unwrap())
        .collect();
    let sol = problem.solve(&moduli).unwrap();
    let ub = problem.bezier_displacements(&sol.u).unwrap();
    let comp =
        compliance_and_sensitivity(&ub, problem.connectivity(), k0, x, 3.0, 1.0, 1e-3).unwrap();
    let work = problem.load().iter().zip(&sol.u).map(|(f, u)| f * u).sum();
    (comp, work)
}

#[test]
fn zero_displacement_gives_zero_compliance() {
    let (problem, k0) = mbb_problem(3, 2);
    let ub = vec![0.0; problem.mesh().n_dofs_bezier()];
    let x = vec![0.5; 6];
    let c =
        compliance_and_sensitivity(&ub, problem.connectivity(), &k0, &x, 3.0, 1.0, 1e-3).unwrap();
    assert_eq!(c.c, 0.0);
    assert!(c.dc.iter().all(|&v| v == 0.0));
}

#[test]
fn compliance_is_external_work() {
    let (problem, k0) = mbb_problem(8, 4);
    let mut rng = Lcg(4);
    let x: Vec<f64> = (0..32).map(|_| 0.1 + 0.9 * rng.next()).collect();
    let (comp, work) = evaluate(&problem, &k0, &x);
    assert!((comp.c - work).abs() <= 1e-8 * work);
    assert!(comp.dc.iter().all(|&v| v <= 0.0));
}

#[test]
fn bezier_and_spline_energies_agree() {
    let (problem, k0) = mbb_problem(7, 3);
    let x = vec![0.6; 21];
    let moduli: Vec<f64> = x
        .iter()
        .map(|&v| simp_modulus(v, 3.0, 1.0, 1e-3).unwrap())
        .collect();
    let sol = problem.solve(&moduli).unwrap();
    let ub = problem.bezier_displacements(&sol.u).unwrap();
    let bezier =
        compliance_and_sensitivity(&ub, problem.connectivity(), &k0, &x, 3.0, 1.0, 1e-3).unwrap();
    let spline = problem.element_energies(&sol.u);
    for (a, b) in bezier.ce.iter().zip(&spline) {
        assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-12));
    }
}

#[test]
fn sensitivities_match_central_differences() {
    let (problem, k0) = mbb_problem(4, 2);
    let mut rng = Lcg(12);
    let x: Vec<f64> = (0..8).map(|_| 0.3 + 0.6 * rng.next()).collect();
    let (comp, _) = evaluate(&problem, &k0, &x);
    let h = 1e-5;
    for e in 0..8 {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[e] += h;
        xm[e] -= h;
        let fd = (evaluate(&problem, &k0, &xp).0.c - evaluate(&problem, &k0, &xm).0.c) / (2.0 * h);
        assert!(
            (comp.dc[e] - fd).abs() <= 1e-4 * fd.abs(),
            "element {e}: {} vs {fd}",
            comp.dc[e]
        );
    }
}

#[test]
fn filter_weights() {
    let mesh = IgaMesh::new_2d(6, 4).unwrap();
    let f = build_filter(&mesh, 2.4).unwrap();
    let e = mesh.element_index(2, 2, 0);
    assert_eq!(f.weight(e, e), 2.4);
    assert!((f.weight(e, mesh.element_index(3, 2, 0)) - 1.4).abs() < 1e-15);
    assert!((f.weight(e, mesh.element_index(2, 1, 0)) - 1.4).abs() < 1e-15);
    assert!((f.weight(e, mesh.element_index(3, 3, 0)) - (2.4 - 2f64.sqrt())).abs() < 1e-15);
    assert_eq!(f.weight(e, mesh.element_index(5, 2, 0)), 0.0);
    assert_eq!(f.weight(e, mesh.element_index(4, 0, 0)), 0.0);

    let d = build_filter(&mesh, 1.0).unwrap();
    assert_eq!(d.nnz(), mesh.n_elems());
    for e in 0..mesh.n_elems() {
        assert_eq!(d.row(e).0, &[e]);
    }
    assert!(build_filter(&mesh, 0.0).is_err());
    assert!(build_filter(&mesh, f64::NAN).is_err());
}

#[test]
fn filter_matches_brute_force_on_3x3() {
    let mesh = IgaMesh::new_2d(3, 3).unwrap();
    let rmin = 1.5;
    let f = build_filter(&mesh, rmin).unwrap();
    let mut rng = Lcg(99);
    let x: Vec<f64> = (0..9).map(|_| rng.next()).collect();
    let dc: Vec<f64> = (0..9).map(|_| -rng.next()).collect();
    let got = f.filter_sensitivity(&x, &dc, 1e-3).unwrap();
    for e in 0..9 {
        let (ie, je) = ((e % 3) as f64, (e / 3) as f64);
        let mut num = 0.0;
        let mut hs = 0.0;
        for s in 0..9 {
            let (is, js) = ((s % 3) as f64, (s / 3) as f64);
            let w = (rmin - ((ie - is).powi(2) + (je - js).powi(2)).sqrt()).max(0.0);
            num += w * x[s] * dc[s];
            hs += w;
        }
        let expected = num / hs / x[e].max(1e-3);
        assert!((got[e] - expected).abs() <= 1e-14 * expected.abs());
    }
}

#[test]
fn filter_identities() {
    let mesh = IgaMesh::new_2d(7, 5).unwrap();
    let diag = build_filter(&mesh, 1.0).unwrap();
    let x = vec![0.4; 35];
    let dc: Vec<f64> = (0..35).map(|e| -(e as f64) - 1.0).collect();
    for (a, b) in diag
        .filter_sensitivity(&x, &dc, 1e-3)
        .unwrap()
        .iter()
        .zip(&dc)
    {
        assert!((a - b).abs() <= 1e-15 * b.abs());
    }

    let f = build_filter(&mesh, 2.4).unwrap();
    let flat = f.filter_sensitivity(&x, &vec![-2.0; 35], 1e-3).unwrap();
    for v in flat {
        assert!((v + 2.0).abs() < 1e-14);
    }
    assert!(f.filter_sensitivity(&x, &dc[..3], 1e-3).is_err());
}

#[test]
fn filter_3d_window() {
    let mesh = IgaMesh::new_3d(4, 4, 4).unwrap();
    let f = build_filter(&mesh, 3f64.sqrt() * 2.0).unwrap();
    let e = mesh.element_index(1, 1, 1);
    let s = mesh.element_index(2, 2, 2);
    assert!((f.weight(e, s) - 3f64.sqrt()).abs() < 1e-15);
    // ceil(2√3) − 1 = 3, so offsets of 3 along one axis are inside the window.
    assert!((f.weight(e, mesh.element_index(1, 1, 3)) - (2.0 * 3f64.sqrt() - 2.0)).abs() < 1e-15);
    assert_eq!(f.weight(s, mesh.element_index(2, 2, 2)), 2.0 * 3f64.sqrt());
}

fn active(x: &[f64], dc: &[f64], volfrac: f64, m: f64) -> bool {
    let target = volfrac * x.len() as f64;
    let up: f64 = x
        .iter()
        .zip(dc)
        .map(|(&v, &d)| {
            if d < 0.0 {
                (v + m).min(1.0)
            } else {
                (v - m).max(0.0)
            }
        })
        .sum();
    let down: f64 = x.iter().map(|&v| (v - m).max(0.0)).sum();
    up > target && down < target
}

#[test]
fn oc_properties_on_random_instances() {
    let mut rng = Lcg(2024);
    let params = OcParameters::default();
    let mut n_active = 0;
    for trial in 0..1000 {
        let n = 1 + (rng.next() * 60.0) as usize;
        let x: Vec<f64> = (0..n).map(|_| rng.next()).collect();
        let scale = 10f64.powf(4.0 * rng.next() - 2.0);
        let dc: Vec<f64> = (0..n)
            .map(|_| {
                if rng.next() < 0.05 {
                    0.0
                } else {
                    -scale * rng.next()
                }
            })
            .collect();
        let dv = vec![1.0; n];
        let volfrac = 0.05 + 0.9 * rng.next();
        let up = oc_update(&x, &dc, &dv, volfrac, &params).unwrap();
        for (a, b) in up.x.iter().zip(&x) {
            assert!((0.0..=1.0).contains(a), "trial {trial}");
            assert!((a - b).abs() <= params.move_limit + 1e-15, "trial {trial}");
        }
        let mean = up.x.iter().sum::<f64>() / n as f64;
        let reachable = x.iter().map(|&v| (v - 0.2).max(0.0)).sum::<f64>() <= volfrac * n as f64;
        if up.mode != OcMode::Degenerate && reachable {
            assert!(mean <= volfrac + 1e-6, "trial {trial}");
        }
        if active(&x, &dc, volfrac, params.move_limit) {
            n_active += 1;
            assert_eq!(up.mode, OcMode::Bisection);
            assert!(
                (mean - volfrac).abs() <= 1e-3,
                "trial {trial}: {mean} vs {volfrac}"
            );
        }
    }
    assert!(n_active > 300);
}

#[test]
fn oc_fixed_point() {
    let mut rng = Lcg(5);
    let x: Vec<f64> = (0..40).map(|_| 0.25 + 0.5 * rng.next()).collect();
    let volfrac = x.iter().sum::<f64>() / 40.0;
    let lambda = 3.7;
    let dc = vec![-lambda; 40];
    let up = oc_update(&x, &dc, &vec![1.0; 40], volfrac, &OcParameters::default()).unwrap();
    assert!((up.lambda - lambda).abs() / lambda < 2e-3);
    for (a, b) in up.x.iter().zip(&x) {
        assert!((a - b).abs() < 1e-3);
    }
}

#[test]
fn oc_special_modes() {
    let p = OcParameters::default();
    let x = vec![0.5, 0.2, 0.9];
    let up = oc_update(&x, &[-1.0, 1e-14, -2.0], &[1.0; 3], 1.0, &p).unwrap();
    assert_eq!(up.mode, OcMode::Inactive);
    assert_eq!(up.clamped, 1);
    assert_eq!(up.x, vec![0.7, 0.0, 1.0]);

    let up = oc_update(&x, &[0.0; 3], &[1.0; 3], 0.45, &p).unwrap();
    assert_eq!(up.mode, OcMode::Degenerate);
    let mean = up.x.iter().sum::<f64>() / 3.0;
    assert!((mean - 0.45).abs() < 1e-12);

    assert!(oc_update(&x, &[-1.0; 2], &[1.0; 3], 0.4, &p).is_err());
    assert!(oc_update(&[1.5], &[-1.0], &[1.0], 0.4, &p).is_err());
    assert!(oc_update(&x, &[-1.0; 3], &[1.0; 3], 1.5, &p).is_err());
    assert!(oc_update(&x, &[f64::NAN; 3], &[1.0; 3], 0.5, &p).is_err());
    let bad = OcParameters {
        move_limit: 0.0,
        ..p
    };
    assert!(oc_update(&x, &[-1.0; 3], &[1.0; 3], 0.5, &bad).is_err());
}

#[test]
fn full_density_exits_immediately() {
    let mesh = IgaMesh::new_2d(6, 2).unwrap();
    let bc = boundary_half_mbb(&mesh).unwrap();
    let config = OptimizationConfig::new(mesh, 1.0, 3.0, 1.5);
    let res = run_optimization(&config, &ConstitutiveModel::new(2), bc, |_| {}).unwrap();
    assert!(res.converged);
    assert_eq!(res.iterations(), 1);
    assert!(res.density.values().iter().all(|&v| v == 1.0));
}

#[test]
fn small_mbb_run() {
    let mesh = IgaMesh::new_2d(24, 8).unwrap();
    let bc = boundary_half_mbb(&mesh).unwrap();
    let config = OptimizationConfig::new(mesh, 0.5, 3.0, 1.5);
    let mut seen = 0;
    let res = run_optimization(&config, &ConstitutiveModel::new(2), bc.clone(), |r| {
        seen += 1;
        assert_eq!(r.iteration, seen);
        assert!(r.residual <= crate::assembly::RESIDUAL_TOLERANCE);
        assert!(r.work_gap <= 1e-8);
        assert!(r.volume <= 0.5 + 1e-6);
    })
    .unwrap();
    assert!(res.converged);
    assert_eq!(res.iterations(), seen);
    assert!((res.density.mean() - 0.5).abs() <= 1e-3);
    let c = res.compliance_history();
    assert!(c.last().unwrap() < &c[0]);
    assert!(*res.change_history().last().unwrap() <= 0.01);

    let again = run_optimization(&config, &ConstitutiveModel::new(2), bc, |_| {}).unwrap();
    assert_eq!(again, res);
}

#[test]
fn config_validation() {
    let mesh = IgaMesh::new_2d(4, 2).unwrap();
    let bc = boundary_half_mbb(&mesh).unwrap();
    let base = OptimizationConfig::new(mesh, 0.5, 3.0, 1.5);
    for bad in [
        OptimizationConfig {
            volfrac: 1.5,
            ..base.clone()
        },
        OptimizationConfig {
            volfrac: 0.0,
            ..base.clone()
        },
        OptimizationConfig {
            rmin: -1.0,
            ..base.clone()
        },
        OptimizationConfig {
            max_iter: 0,
            ..base.clone()
        },
    ] {
        assert!(run_optimization(&bad, &ConstitutiveModel::new(2), bc.clone(), |_| {}).is_err());
    }
    assert!(matches!(
        run_optimization(&base, &ConstitutiveModel::new(3), bc, |_| {}),
        Err(IgaError::DimensionMismatch { .. })
    ));
}

#[test]
fn density_field_checks() {
    assert!(DensityField::new(&[2, 2], vec![0.5; 3]).is_err());
    assert!(DensityField::new(&[2, 1], vec![0.5, 1.2]).is_err());
    assert!(DensityField::new(&[2], vec![0.5, 0.5]).is_err());
    let f = DensityField::new(&[2, 1, 2], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    assert_eq!(f.get(1, 0, 1), 0.4);
    assert!((f.mean() - 0.25).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn filter_is_symmetric_and_convex(
        nx in 1usize..8, ny in 1usize..8, rmin in 0.5f64..3.5, seed in any::<u64>(),
    ) {
        let mesh = IgaMesh::new_2d(nx, ny).unwrap();
        let f = build_filter(&mesh, rmin).unwrap();
        let n = mesh.n_elems();
        for e in 0..n {
            prop_assert_eq!(f.weight(e, e), rmin);
            prop_assert!(f.row_sums()[e] > 0.0);
            let (cols, w) = f.row(e);
            for (&s, &h) in cols.iter().zip(w) {
                prop_assert!(h > 0.0);
                prop_assert_eq!(f.weight(s, e), h);
            }
        }
        let mut rng = Lcg(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.next()).collect();
        let dc: Vec<f64> = (0..n).map(|_| -rng.next()).collect();
        let out = f.filter_sensitivity(&x, &dc, 1e-3).unwrap();
        for e in 0..n {
            let (cols, _) = f.row(e);
            let vals: Vec<f64> = cols.iter().map(|&s| x[s] * dc[s]).collect();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let scaled = out[e] * x[e].max(1e-3);
            prop_assert!(scaled >= lo - 1e-12 && scaled <= hi + 1e-12);
        }
    }

    #[test]
    fn oc_box_and_move(
        xs in proptest::collection::vec(0.0f64..=1.0, 1..50),
        seed in any::<u64>(),
        volfrac in 0.01f64..1.0,
    ) {
        let mut rng = Lcg(seed);
        let dc: Vec<f64> = xs.iter().map(|_| -rng.next() * 100.0).collect();
        let up = oc_update(&xs, &dc, &vec![1.0; xs.len()], volfrac, &OcParameters::default()).unwrap();
        for (a, b) in up.x.iter().zip(&xs) {
            prop_assert!((0.0..=1.0).contains(a));
            prop_assert!((a - b).abs() <= 0.2 + 1e-15);
        }
    }
}
