use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use conekit::cone::{map_forward, project_p, Cone};
use conekit::curvature::{classify, reduce_mixed, MixedRicciParams, Regime};
use conekit::esf::{elementary_symmetric, sigma};
use conekit::grid::Herm2;
use conekit::localization::{check_claims, growth_threshold, localize, BorderedHermitian};
use conekit::operator::OperatorSpec;
use conekit::pencil::{pencil_eigen, HermitianForm, Pencil};
use conekit::sampling::{sample_in_cone, stream};

fn vec_in(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, n)
}

fn operators() -> impl Strategy<Value = OperatorSpec> {
    prop_oneof![
        (2usize..6).prop_flat_map(|n| (1..=n).prop_map(move |k| OperatorSpec::sigma_k_root(k, n).unwrap())),
        (3usize..6).prop_flat_map(|n| (2..=n).prop_flat_map(move |k| (0..k)
            .prop_map(move |l| OperatorSpec::hessian_quotient(k, l, n).unwrap()))),
        (-1.0f64..1.5).prop_map(|rho| OperatorSpec::induced(OperatorSpec::sigma_k_root(2, 3).unwrap(), rho).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn sigma_is_symmetric_and_homogeneous(v in vec_in(6), k in 0usize..=6, t in 0.1f64..3.0, rot in 0usize..6) {
        let mut w = v.clone();
        w.rotate_left(rot);
        let a = sigma(&v, k);
        prop_assert!((a - sigma(&w, k)).abs() <= 1e-9 * (1.0 + a.abs()));
        let scaled: Vec<f64> = v.iter().map(|x| t * x).collect();
        let b = sigma(&scaled, k);
        prop_assert!((b - t.powi(k as i32) * a).abs() <= 1e-9 * (1.0 + b.abs()));
    }

    #[test]
    fn newton_identity(v in vec_in(5)) {
        // Σ λ_i² = σ_1² − 2σ_2
        let e = elementary_symmetric(&v, 2);
        let p2: f64 = v.iter().map(|x| x * x).sum();
        prop_assert!((p2 - (e[1] * e[1] - 2.0 * e[2])).abs() <= 1e-10 * (1.0 + p2));
    }

    #[test]
    fn cone_is_stable_under_orthant_shifts(seed in any::<u64>(), n in 2usize..7, kk in 0usize..7, shift in vec_in(7)) {
        let k = 1 + kk % n;
        let cone = Cone::garding(k, n).unwrap();
        let lam = sample_in_cone(&cone, &mut stream(seed, 0));
        let moved: Vec<f64> = lam.iter().zip(&shift).map(|(l, s)| l + s.abs()).collect();
        prop_assert!(cone.contains(&moved).unwrap());
        let scaled: Vec<f64> = lam.iter().map(|l| 7.5 * l).collect();
        prop_assert!(cone.contains(&scaled).unwrap());
    }

    #[test]
    fn projection_inverts_forward_map(mu in vec_in(4), rho in -3.0f64..3.5) {
        prop_assume!((rho - 4.0).abs() > 1e-3 && rho.abs() > 1e-3);
        let lam = map_forward(&mu, rho).unwrap();
        let back = project_p(&lam, rho).unwrap();
        for (a, b) in mu.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn operator_is_concave_and_homogeneous(f in operators(), seed in any::<u64>(), t in 0.2f64..5.0) {
        let cone = f.cone();
        let mut rng = stream(seed, 1);
        let a = sample_in_cone(&cone, &mut rng);
        let b = sample_in_cone(&cone, &mut rng);
        let (fa, ga) = f.value_and_gradient(&a).unwrap();
        let fb = f.value(&b).unwrap();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let scale = fa.abs() + fb.abs() + 1.0;
        prop_assert!(f.value(&mid).unwrap() >= 0.5 * (fa + fb) - 1e-10 * scale);
        let tangent = fa + ga.iter().zip(b.iter().zip(&a)).map(|(g, (y, x))| g * (y - x)).sum::<f64>();
        prop_assert!(fb <= tangent + 1e-9 * scale);
        let ta: Vec<f64> = a.iter().map(|x| t * x).collect();
        prop_assert!((f.value(&ta).unwrap() - t * fa).abs() <= 1e-10 * (1.0 + t * fa));
    }

    #[test]
    fn gradient_matches_finite_differences(f in operators(), seed in any::<u64>()) {
        let lam = sample_in_cone(&f.cone(), &mut stream(seed, 2));
        let g = f.gradient(&lam).unwrap();
        let gsum: f64 = g.iter().map(|x| x.abs()).sum();
        for i in 0..lam.len() {
            let h = 1e-6 * (1.0 + lam[i].abs());
            let mut up = lam.clone();
            let mut dn = lam.clone();
            up[i] += h;
            dn[i] -= h;
            if let (Ok(a), Ok(b)) = (f.value(&up), f.value(&dn)) {
                let fd = (a - b) / (2.0 * h);
                prop_assert!((fd - g[i]).abs() <= 1e-5 * gsum, "i={} fd={} g={}", i, fd, g[i]);
            }
        }
    }

    #[test]
    fn regime_matches_sign_test(alpha in -3.0f64..3.0, beta in 0.01f64..3.0, gamma in -3.0f64..3.0, k in 1usize..=3) {
        let cone = Cone::garding(k, 3).unwrap();
        let r = reduce_mixed(&MixedRicciParams { alpha, beta, gamma, n: 3 }, &cone).unwrap();
        let c = 3.0 * alpha + 2.0 * gamma;
        let s = cone.varrho() * beta + c;
        let expected = if c == 0.0 {
            Regime::Inadmissible
        } else if s.abs() <= 1e-12 * cone.varrho().max(1.0) * beta {
            Regime::Limiting
        } else if s > 0.0 {
            Regime::UniformlyElliptic
        } else {
            Regime::Inadmissible
        };
        prop_assert_eq!(r.regime, expected);
        prop_assert_eq!(classify(r.rho.unwrap(), cone.varrho()), r.regime);
    }

    #[test]
    fn herm2_eigen_matches_dense(a in -4.0f64..4.0, c in -4.0f64..4.0, re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let h = Herm2 { a11: a, a12: Complex64::new(re, im), a22: c };
        let (lam, vecs) = h.eigen();
        let m = DMatrix::from_row_slice(2, 2, &[
            Complex64::new(a, 0.0), Complex64::new(re, im),
            Complex64::new(re, -im), Complex64::new(c, 0.0),
        ]);
        for (l, v) in lam.iter().zip(vecs) {
            let v = nalgebra::DVector::from_row_slice(&v);
            prop_assert!((&m * &v - &v * Complex64::new(*l, 0.0)).norm() <= 1e-12 * (1.0 + l.abs()));
        }
    }

    #[test]
    fn pencil_scales_inversely_with_metric(seed in any::<u64>(), s in 0.1f64..10.0) {
        let mut rng = stream(seed, 3);
        let n = 3;
        let diag: Vec<f64> = sample_in_cone(&Cone::orthant(n).unwrap(), &mut rng);
        let theta = HermitianForm::from_real_diagonal(&[1.0, -2.0, 0.5]);
        let g = HermitianForm::from_real_diagonal(&diag);
        let gs = HermitianForm::from_real_diagonal(&diag.iter().map(|d| d * s).collect::<Vec<_>>());
        let e1 = pencil_eigen(&Pencil { g, theta: theta.clone() }).unwrap();
        let e2 = pencil_eigen(&Pencil { g: gs, theta }).unwrap();
        for (a, b) in e1.values.iter().zip(e2.values.iter()) {
            prop_assert!((a / s - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn sharp_localization_holds(seed in any::<u64>(), n in 2usize..7, eps in 0.05f64..2.0, extra in 0.0f64..5.0) {
        let (d, a) = conekit::localization::random_instance(n, &mut stream(seed, 4));
        let th = growth_threshold(&d, &a, eps).unwrap();
        let m = BorderedHermitian::new(d, a, th + extra).unwrap();
        let res = localize(&m, eps).unwrap();
        prop_assert_eq!(check_claims(&m, &res).violations, 0);
    }
}
