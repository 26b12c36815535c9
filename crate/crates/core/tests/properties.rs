//! Randomised invariants of the numeric kernels, norms and first-order spaces.

use proptest::prelude::*;
use rigidity::firstorder::{flex_space, rigidity_operator, trivial_space};
use rigidity::generators::complete_graph;
use rigidity::model::Framework;
use rigidity::norms::{EdgeGeometry, NormSpec};
use rigidity::numeric::{null_space, rank, sym_eigen, Matrix, Rational, DEFAULT_RANK_TOL};

fn int_matrix() -> impl Strategy<Value = (usize, usize, Vec<i64>)> {
    (1usize..7, 1usize..7)
        .prop_flat_map(|(r, c)| (Just(r), Just(c), prop::collection::vec(-3i64..=3, r * c)))
}

fn symmetric() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1usize..=30).prop_flat_map(|n| (Just(n), prop::collection::vec(-10.0f64..10.0, n * n)))
}

fn away_from_axes(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(
        (0.1f64..3.0, any::<bool>()).prop_map(|(x, s)| if s { x } else { -x }),
        d,
    )
}

fn smooth_norm() -> impl Strategy<Value = NormSpec<f64>> {
    prop_oneof![
        (1.2f64..6.0).prop_map(|p| NormSpec::lp(2, p).unwrap()),
        Just(NormSpec::euclidean(2).unwrap()),
    ]
}

fn placement(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rank_nullity_and_transpose((r, c, xs) in int_matrix()) {
        let m = Matrix::from_vec(r, c, xs.iter().map(|&x| Rational::from_integer(x.into())).collect()).unwrap();
        let k = rank(&m, 0.0);
        prop_assert_eq!(k + null_space(&m, 0.0).dim(), c);
        prop_assert_eq!(rank(&m.transpose(), 0.0), k);
        let f = m.to_f64();
        prop_assert_eq!(rank(&f, DEFAULT_RANK_TOL), k);
        for v in null_space(&m, 0.0).vectors() {
            prop_assert!(m.mul_vec(&v).unwrap().iter().all(|x| *x == Rational::from_integer(0.into())));
        }
    }

    #[test]
    fn eigen_reconstruction((n, xs) in symmetric()) {
        let a = Matrix::from_fn(n, n, |i, j| xs[i * n + j] + xs[j * n + i]);
        let e = sym_eigen(&a).unwrap();
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let v = &e.vectors;
        let back = Matrix::from_fn(n, n, |i, j| (0..n).map(|k| v.row(i)[k] * e.values[k] * v.row(j)[k]).sum());
        let scale = a.max_abs().max(1.0);
        for (x, y) in back.entries().iter().zip(a.entries()) {
            prop_assert!((x - y).abs() <= 1e-9 * scale);
        }
        let vtv = v.transpose().mul(v).unwrap();
        for (k, x) in vtv.entries().iter().enumerate() {
            let want = if k / n == k % n { 1.0 } else { 0.0 };
            prop_assert!((x - want).abs() <= 1e-10);
        }
    }

    #[test]
    fn norm_axioms(norm in smooth_norm(), x in prop::collection::vec(-5.0f64..5.0, 2),
                   y in prop::collection::vec(-5.0f64..5.0, 2), l in -4.0f64..4.0) {
        let n = |v: &[f64]| norm.evaluate(v).unwrap();
        let lx: Vec<f64> = x.iter().map(|v| l * v).collect();
        prop_assert!((n(&lx) - l.abs() * n(&x)).abs() <= 1e-12 * (1.0 + n(&lx)));
        let s: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        prop_assert!(n(&s) <= n(&x) + n(&y) + 1e-12);
        prop_assert!(n(&x) >= 0.0);
    }

    #[test]
    fn polyhedral_norm_axioms(x in prop::collection::vec(-20i64..20, 2), y in prop::collection::vec(-20i64..20, 2),
                              l in -5i64..5) {
        let norm = NormSpec::<Rational>::l1(2).unwrap();
        let r = |v: &[i64]| v.iter().map(|&a| Rational::from_integer(a.into())).collect::<Vec<_>>();
        let lam = Rational::from_integer(l.into());
        let (xv, yv) = (r(&x), r(&y));
        let n = |v: &[Rational]| norm.evaluate(v).unwrap();
        let lx: Vec<Rational> = xv.iter().map(|v| &lam * v).collect();
        prop_assert_eq!(n(&lx), n(&xv) * Rational::from_integer(l.abs().into()));
        let s: Vec<Rational> = xv.iter().zip(&yv).map(|(a, b)| a + b).collect();
        prop_assert!(n(&s) <= n(&xv) + n(&yv));
    }

    #[test]
    fn derivatives_match_finite_differences(norm in smooth_norm(), x in away_from_axes(2),
                                           u in prop::collection::vec(-1.0f64..1.0, 2)) {
        let EdgeGeometry::Smooth(s) = norm.classify_edge_vector(&x).unwrap() else {
            return Err(TestCaseError::fail("expected a smooth point"));
        };
        let n = |v: &[f64]| norm.evaluate(v).unwrap();
        let grad = |v: &[f64]| match norm.classify_edge_vector(v).unwrap() {
            EdgeGeometry::Smooth(s) => s.gradient,
            _ => unreachable!(),
        };
        let h = 1e-6;
        for i in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (n(&xp) - n(&xm)) / (2.0 * h);
            prop_assert!((fd - s.gradient[i]).abs() <= 1e-5, "gradient {} vs {}", fd, s.gradient[i]);
        }
        let hess = s.hessian.unwrap();
        let h = 1e-4;
        let xp: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + h * b).collect();
        let xm: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a - h * b).collect();
        let (gp, gm) = (grad(&xp), grad(&xm));
        let hu = hess.mul_vec(&u).unwrap();
        for i in 0..2 {
            let fd = (gp[i] - gm[i]) / (2.0 * h);
            prop_assert!((fd - hu[i]).abs() <= 1e-4, "hessian {} vs {}", fd, hu[i]);
        }
    }

    #[test]
    fn rigidity_map_is_translation_invariant(norm in smooth_norm(), pts in placement(4),
                                             t in prop::collection::vec(-3.0f64..3.0, 2)) {
        let fw = Framework::new(complete_graph(4), pts, norm).unwrap();
        let moved = fw.translated(&t).unwrap();
        for (a, b) in fw.rigidity_map().iter().zip(moved.rigidity_map()) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn trivial_motions_are_flexes(norm in smooth_norm(), pts in placement(5)) {
        let fw = Framework::new(complete_graph(5), pts, norm).unwrap();
        prop_assume!(fw.classify().well_positioned);
        let r = rigidity_operator(&fw).unwrap();
        let scale = r.max_abs().max(1.0);
        let trivial = trivial_space(&fw, DEFAULT_RANK_TOL);
        for t in trivial.vectors() {
            prop_assert!(r.mul_vec(&t).unwrap().iter().all(|x| x.abs() <= 1e-9 * scale));
        }
        prop_assert!(flex_space(&fw, DEFAULT_RANK_TOL).dim() >= trivial.dim());
    }
}
