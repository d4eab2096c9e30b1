//! Randomized invariants across modules.

use proptest::prelude::*;
use trimshell::assembly::{DirichletSpec, Discretization, MaterialParams};
use trimshell::dynamics::{central_difference_run, newmark_run, DynState, ExactSolution, Mass, Monitor, Scheme};
use trimshell::geometry::{frame_at, SurfaceChart};
use trimshell::harness::{ManufacturedSolution, Profile};
use trimshell::sparse::CsrMatrix;
use trimshell::spectrum::{critical_dt, dense_generalized_eigenvalues, row_sum_lump, LumpedMass, MassOp};
use trimshell::splines::TensorSplineSpace;
use trimshell::trimming::{classify_elements, ElementStatus, TrimRegion};

fn unit_square(p: usize, n: usize) -> TensorSplineSpace {
    TensorSplineSpace::uniform(p, [0.0, 0.0], [1.0, 1.0], [n, n]).unwrap()
}

/// Rectangle whose four sides sit `eps·h` outside grid lines one element in from the boundary.
fn trimmed_rect(n: usize, eps: f64) -> TrimRegion {
    let h = 1.0 / n as f64;
    let (lo, hi) = (h - eps * h, 1.0 - h + eps * h);
    TrimRegion::rectangle([lo, lo], [hi, hi], [true; 4]).unwrap()
}

fn chart() -> impl Strategy<Value = SurfaceChart> {
    prop_oneof![
        Just(SurfaceChart::FlatPlate),
        (0.0..std::f64::consts::TAU).prop_map(|angle| SurfaceChart::RotatedPlate { angle }),
        (0.4..3.0f64).prop_map(|radius| SurfaceChart::Cylinder { radius }),
        (0.3..3.0f64, 0.3..2.8f64).prop_map(|(r, a)| SurfaceChart::skewed(r, a)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn basis_partition_and_constants(p in 1usize..5, n in 1usize..9, x in 0.0..=1.0f64, y in 0.0..=1.0f64, c in -5.0..5.0f64) {
        let b = unit_square(p, n).eval([x, y], 1).unwrap();
        let sum: f64 = b.values.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        prop_assert!(b.values.iter().all(|&v| v >= -1e-12));
        let s: f64 = b.values.iter().map(|v| c * v).sum();
        prop_assert!((s - c).abs() <= 1e-12 * (1.0 + c.abs()));
        for d in &b.d {
            prop_assert!(d.iter().sum::<f64>().abs() <= 1e-10 * (n * p) as f64);
        }
    }

    #[test]
    fn frame_duality_and_area_element(ch in chart(), x in 0.0..1.0f64, y in 0.0..1.0f64) {
        let f = frame_at(&ch, [x, y]).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let d = if a == b { 1.0 } else { 0.0 };
                prop_assert!((f.a_up[a].dot(&f.a[b]) - d).abs() <= 1e-12);
            }
        }
        let vol = f.a[0].cross(&f.a[1]).dot(&f.a3);
        prop_assert!((vol * vol - f.a_cov.determinant()).abs() <= 1e-12 * f.a_cov.determinant().max(1.0));
        prop_assert!((f.a3.norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn rotation_leaves_metric_unchanged(angle in 0.0..std::f64::consts::TAU, x in 0.0..1.0f64, y in 0.0..1.0f64) {
        let r = frame_at(&SurfaceChart::RotatedPlate { angle }, [x, y]).unwrap();
        let f = frame_at(&SurfaceChart::FlatPlate, [x, y]).unwrap();
        prop_assert!((r.a_cov - f.a_cov).amax() <= 1e-12);
        prop_assert!((r.a_con - f.a_con).amax() <= 1e-12);
        prop_assert!((r.b - f.b).amax() <= 1e-12);
        prop_assert!((r.det_a - f.det_a).abs() <= 1e-12);
    }

    #[test]
    fn manufactured_rotations_are_tangent(radius in 0.5..3.0f64, x in 0.05..0.95f64, y in 0.05..0.95f64) {
        let sol = ManufacturedSolution { profile: Profile::window(), omega: 0.1 };
        let f = frame_at(&SurfaceChart::Cylinder { radius }, [x, y]).unwrap();
        let j = sol.spatial([x, y], &f);
        prop_assert!(j.theta_vector(&f).dot(&f.a3).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn cut_areas_add_up_with_positive_weights(n in 3usize..10, eps in 1e-8..0.9f64, q in 2usize..5) {
        let region = trimmed_rect(n, eps);
        let mesh = classify_elements(&unit_square(2, n), &region, q);
        let total: f64 = (0..mesh.element_count()).map(|e| mesh.cut_area(e)).sum();
        prop_assert!((total - region.area()).abs() <= 1e-8 * region.area());
        for e in 0..mesh.element_count() {
            let r = mesh.rule(e);
            prop_assert!(r.weights.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn shrinking_trim_keeps_cut_elements_cut(n in 3usize..10, e1 in 1e-6..0.9f64, shrink in 1e-6..1.0f64) {
        let s = unit_square(2, n);
        let a = classify_elements(&s, &trimmed_rect(n, e1), 3);
        let b = classify_elements(&s, &trimmed_rect(n, e1 * shrink), 3);
        for e in 0..a.element_count() {
            if a.status(e) == ElementStatus::Cut {
                prop_assert_ne!(b.status(e), ElementStatus::Inside);
            }
        }
    }

    #[test]
    fn row_sum_conserves_field_totals(p in 2usize..4, n in 4usize..7, eps in 1e-6..0.5f64, stab in any::<bool>()) {
        let mat = MaterialParams::new(1.0, 0.25, 1.0, 0.05).unwrap();
        let gamma = stab.then_some(0.5);
        let space = unit_square(p, n);
        let m_per_field = space.dim();
        let d = Discretization::new(space, SurfaceChart::Cylinder { radius: 1.2 }, trimmed_rect(n, eps), mat, p + 1, gamma).unwrap();
        let sys = d.build_system(&DirichletSpec::none()).unwrap();
        let lumped = row_sum_lump(&sys.mass, stab).unwrap();
        let field = |i: usize| sys.free[i] / m_per_field;
        let mut total = [0.0; 5];
        let mut diag = [0.0; 5];
        for i in 0..sys.n_dofs() {
            let (cols, vals) = sys.mass.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if field(j) == field(i) {
                    total[field(i)] += v;
                }
            }
            diag[field(i)] += lumped.diag[i];
        }
        for f in 0..5 {
            prop_assert!((total[f] - diag[f]).abs() <= 1e-12 * total[f].abs(), "field {}: {} vs {}", f, total[f], diag[f]);
        }
    }

    #[test]
    fn stabilized_pattern_is_contained(p in 2usize..4, n in 4usize..7, eps in 1e-8..0.3f64, gamma in 0.05..0.9f64) {
        let mat = MaterialParams::new(1.0, 0.25, 1.0, 0.05).unwrap();
        let build = |g| Discretization::new(unit_square(p, n), SurfaceChart::FlatPlate, trimmed_rect(n, eps), mat, p + 1, g);
        let (plain, stab) = (build(None).unwrap(), build(Some(gamma)).unwrap());
        prop_assert!(stab.assemble_mass().pattern_within(&plain.assemble_mass()));
        prop_assert!(stab.assemble_stiffness().pattern_within(&plain.assemble_stiffness()));
    }

    #[test]
    fn schemes_agree_at_small_steps(n in 2usize..12, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            let s: f64 = rng.random_range(0.5..2.0);
            t.push((i, i, 2.0 * s));
            if i + 1 < n {
                t.push((i, i + 1, -s));
                t.push((i + 1, i, -s));
            }
        }
        let k = CsrMatrix::from_triplets(n, n, &t);
        let lm = LumpedMass { diag: (0..n).map(|_| rng.random_range(0.5..2.0)).collect(), stabilized: false };
        let w2 = *dense_generalized_eigenvalues(&k, MassOp::Lumped(&lm)).unwrap().last().unwrap();
        let d0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a0 = k.mul_vec(&d0).iter().zip(&lm.diag).map(|(f, m)| -f / m).collect();
        let s0 = DynState { t: 0.0, d: d0, v: vec![0.0; n], a: a0 };
        let m = Mass::Lumped(lm);
        let dt = 0.01 * critical_dt(w2, Scheme::CentralDifference);
        let zero = |_: f64| vec![0.0; n];
        let record = |run: &dyn Fn(&mut Monitor<'_>)| {
            let mut traj = Vec::new();
            run(&mut |_, s| {
                traj.push(s.d.clone());
                Ok(())
            });
            traj
        };
        let cd = record(&|mon| {
            central_difference_run(&k, &m, &zero, s0.clone(), dt, 100.0 * dt, mon).unwrap();
        });
        let nm = record(&|mon| {
            newmark_run(&k, &m, &zero, s0.clone(), dt, 100.0 * dt, mon).unwrap();
        });
        prop_assert_eq!(cd.len(), nm.len());
        let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = cd.iter().map(|d| norm(d)).fold(norm(&s0.d), f64::max);
        let gap = cd.iter().zip(&nm).map(|(a, b)| norm(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>())).fold(0.0, f64::max);
        prop_assert!(gap <= 1e-4 * scale, "gap {} scale {}", gap, scale);
    }
}
