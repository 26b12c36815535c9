//! Worked examples for norms, the model, first-order analysis and generators.

use std::collections::{BTreeMap, BTreeSet};

use rigidity::firstorder::{
    certify_flex, certify_strong_witness, edge_count_bound_check, flex_space,
    generalized_operator_at, in_span, is_infinitesimally_rigid, rigidity_operator, stress_space,
    strong_flex_search, trivial_space, FirstOrderError,
};
use rigidity::generators::{
    colinear_base, complete_graph, euclid_braced_square_midpoints, gen_colinear_augmentation,
    gen_grid, gen_random_placement, linf_k4_square, linf_seven_vertex, linf_single_bar,
    lp_k4_square, stable_grid_fig5ii, GridSpec,
};
use rigidity::model::{Framework, Graph};
use rigidity::norms::{EdgeGeometry, NormSpec};
use rigidity::numeric::{rank, Rational, Scalar, DEFAULT_RANK_TOL};

const TOL: f64 = DEFAULT_RANK_TOL;

fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

#[test]
fn norm_values() {
    let linf = NormSpec::<f64>::linf(2).unwrap();
    assert_eq!(linf.evaluate(&[1.0, 1.0]).unwrap(), 1.0);
    let l4 = NormSpec::<f64>::lp(2, 4.0).unwrap();
    assert!(close(l4.evaluate(&[1.0, 1.0]).unwrap(), 2f64.powf(0.25)));
    let poly =
        NormSpec::polyhedral(2, vec![vec![q(1, 1), q(0, 1)], vec![q(0, 1), q(1, 1)]]).unwrap();
    assert_eq!(poly.evaluate(&[q(3, 1), q(-5, 1)]).unwrap(), q(5, 1));
}

#[test]
fn edge_classification() {
    let linf = NormSpec::<Rational>::linf(2).unwrap();
    match linf.classify_edge_vector(&[q(1, 1), q(1, 1)]).unwrap() {
        EdgeGeometry::PolyhedralActive { rows, .. } => {
            let set: BTreeSet<Vec<Rational>> = rows.into_iter().collect();
            assert_eq!(
                set,
                BTreeSet::from([vec![q(1, 1), q(0, 1)], vec![q(0, 1), q(1, 1)]])
            );
        }
        other => panic!("{other:?}"),
    }
    let l4 = NormSpec::<f64>::lp(2, 4.0).unwrap();
    match l4.classify_edge_vector(&[-1.0, -1.0]).unwrap() {
        EdgeGeometry::Smooth(s) => assert_eq!(s.power_gradient.unwrap(), vec![-1.0, -1.0]),
        other => panic!("{other:?}"),
    }
    assert!(l4
        .classify_edge_vector(&[0.0, 0.0])
        .unwrap()
        .is_zero_length());
}

#[test]
fn one_sided_derivatives() {
    let linf = NormSpec::<Rational>::linf(2).unwrap();
    let d = linf
        .one_sided_directional(&[q(1, 1), q(1, 1)], &[q(1, 1), q(-1, 1)])
        .unwrap();
    assert_eq!(d, q(1, 1));
    let l4 = NormSpec::<f64>::lp(2, 4.0).unwrap();
    assert!(
        l4.one_sided_directional(&[1.0, 0.0], &[0.0, 5.0])
            .unwrap()
            .abs()
            < 1e-15
    );
    let u = [3.0, -4.0];
    let at_zero = l4.one_sided_directional(&[0.0, 0.0], &u).unwrap();
    assert!(close(at_zero, l4.evaluate(&u).unwrap()));
}

#[test]
fn rigidity_map_values() {
    assert_eq!(linf_single_bar().rigidity_map(), vec![q(1, 1)]);
    let r = 2f64.powf(0.25);
    let got = lp_k4_square(4.0).unwrap().rigidity_map();
    for (g, w) in got.iter().zip([1.0, 1.0, 1.0, 1.0, r, r]) {
        assert!(close(*g, w));
    }
    let seven = linf_seven_vertex();
    let (v5, v6) = (
        seven.graph().vertex_index("v5").unwrap(),
        seven.graph().vertex_index("v6").unwrap(),
    );
    assert_eq!(seven.placement()[v5], seven.placement()[v6]);
}

#[test]
fn rigidity_map_is_translation_invariant() {
    let fw = lp_k4_square(3.0).unwrap();
    let moved = fw.translated(&[0.25, -7.0]).unwrap();
    for (a, b) in fw.rigidity_map().iter().zip(moved.rigidity_map()) {
        assert!(close(*a, b));
    }
}

#[test]
fn classification_examples() {
    let bar = linf_single_bar().classify();
    assert!(!bar.well_positioned);
    assert_eq!(bar.badly_positioned_edges, vec![0]);
    let k4 = lp_k4_square(4.0).unwrap().classify();
    assert!(k4.well_positioned && k4.second_order_well_positioned);
    let g = Graph::new(&["a", "b", "c"], &[("a", "b"), ("b", "c"), ("a", "c")]).unwrap();
    let fw = Framework::new(
        g,
        vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.3, 0.8]],
        NormSpec::lp(2, 1.5).unwrap(),
    )
    .unwrap();
    let c = fw.classify();
    assert!(c.well_positioned && !c.second_order_well_positioned);
}

#[test]
fn rows_have_the_block_structure() {
    let fw = lp_k4_square(4.0).unwrap();
    let r = rigidity_operator(&fw).unwrap();
    for (e, &(v, w)) in fw.graph().edges().iter().enumerate() {
        let row = r.row(e);
        for k in 0..2 {
            assert_eq!(row[2 * v + k], -row[2 * w + k]);
        }
        for x in (0..4).filter(|&x| x != v && x != w) {
            assert_eq!(&row[2 * x..2 * x + 2], &[0.0, 0.0]);
        }
    }
    for t in trivial_space(&fw, TOL).vectors() {
        assert!(r.mul_vec(&t).unwrap().iter().all(|x| x.abs() < 1e-14));
    }
}

#[test]
fn trivial_dimensions() {
    assert_eq!(trivial_space(&lp_k4_square(4.0).unwrap(), TOL).dim(), 2);
    let norm = NormSpec::euclidean(2).unwrap();
    let k4 = gen_random_placement(&complete_graph(4), &norm, 3).unwrap();
    assert_eq!(trivial_space(&k4, TOL).dim(), 3);
    let pile = Framework::new(complete_graph(3), vec![vec![0.0, 0.0]; 3], norm).unwrap();
    assert_eq!(trivial_space(&pile, TOL).dim(), 2);
}

#[test]
fn flex_space_examples() {
    assert_eq!(flex_space(&linf_single_bar(), 0.0).dim(), 2);
    let k4 = lp_k4_square(4.0).unwrap();
    let flexes = flex_space(&k4, TOL);
    assert_eq!(flexes.dim(), 3);
    let u_bar = [1.0, -1.0, 1.0, 1.0, -1.0, -1.0, -1.0, 1.0];
    assert!(in_span(&flexes, &u_bar, TOL));
    assert_eq!(flex_space(&linf_seven_vertex(), 0.0).dim(), 2);
}

#[test]
fn infinitesimal_verdicts() {
    assert!(is_infinitesimally_rigid(&linf_single_bar(), 0.0).rigid);

    let sq = euclid_braced_square_midpoints();
    let v = is_infinitesimally_rigid(&sq, TOL);
    assert!(!v.rigid);
    let w = v.witness.unwrap();
    assert!(certify_flex(&sq, &w, TOL));
    // Only the two midpoints move once the trivial part is removed.
    let g = sq.graph();
    let mids = [g.vertex_index("2a").unwrap(), g.vertex_index("3a").unwrap()];
    let n = v.nontrivial.dim();
    assert_eq!(n, 2);
    let trivial = trivial_space(&sq, TOL);
    for u in v.nontrivial.vectors() {
        let pinned = rigidity::firstorder::pin(&trivial, &u, TOL);
        let m = pinned.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        for vtx in 0..g.vertex_count() {
            let moves = pinned[2 * vtx].abs().max(pinned[2 * vtx + 1].abs()) > 1e-9 * m;
            assert!(!moves || mids.contains(&vtx), "vertex {vtx} moves");
        }
    }

    let k4 = lp_k4_square(4.0).unwrap();
    let v = is_infinitesimally_rigid(&k4, TOL);
    assert!(!v.rigid);
    assert!(certify_flex(
        &k4,
        &[1.0, -1.0, 1.0, 1.0, -1.0, -1.0, -1.0, 1.0],
        TOL
    ));
}

#[test]
fn stress_examples() {
    let k4 = lp_k4_square(4.0).unwrap();
    let s = stress_space(&k4, TOL).unwrap();
    assert_eq!(s.basis.dim(), 1);
    let a = s.basis.vector(0);
    let signs: Vec<bool> = a.iter().map(|x| x * a[0].signum() < 0.0).collect();
    // Sides share a sign, diagonals take the other.
    assert_eq!(signs, vec![false, false, false, false, true, true]);

    let base = colinear_base(4.0, 0, false).unwrap();
    assert_eq!(stress_space(&base, TOL).unwrap().basis.dim(), 0);

    let g = Graph::new(&["a", "b"], &[("a", "b")]).unwrap();
    let bar = Framework::new(
        g,
        vec![vec![0.0, 0.0], vec![1.0, 0.5]],
        NormSpec::lp(2, 4.0).unwrap(),
    )
    .unwrap();
    assert_eq!(stress_space(&bar, TOL).unwrap().basis.dim(), 0);
    let g = Graph::new(&["a", "b"], &[("a", "b")]).unwrap();
    let bar = Framework::new(
        g,
        vec![vec![q(0, 1), q(0, 1)], vec![q(1, 1), q(0, 1)]],
        NormSpec::linf(2).unwrap(),
    )
    .unwrap();
    // One row, no dependency: the left kernel is trivial, the row space is one-dimensional.
    assert_eq!(rank(&rigidity_operator(&bar).unwrap(), 0.0), 1);
}

#[test]
fn power_and_gradient_stresses_are_rescalings() {
    let fw = stable_grid_fig5ii(4.0).unwrap();
    let s = stress_space(&fw, TOL).unwrap();
    let pb = s.power_basis.unwrap();
    assert_eq!(pb.dim(), s.basis.dim());
    let r = rigidity::firstorder::power_operator(&fw)
        .unwrap()
        .transpose();
    for a in pb.vectors() {
        assert!(r.mul_vec(&a).unwrap().iter().all(|x| x.abs() < 1e-12));
    }
}

#[test]
fn strong_examples() {
    let bar = linf_single_bar();
    let v = strong_flex_search(&bar, 0.0).unwrap();
    assert!(!v.strongly_rigid);
    // u_a = (0,0), u_b = (1,-1) is a strong flex.
    assert!(certify_strong_witness(
        &bar,
        &[q(0, 1), q(0, 1), q(1, 1), q(-1, 1)],
        0.0
    ));
    assert!(!certify_strong_witness(
        &bar,
        &[q(1, 1), q(1, 1), q(1, 1), q(1, 1)],
        0.0
    ));

    for fw in [linf_seven_vertex(), linf_k4_square()] {
        let v = strong_flex_search(&fw, 0.0).unwrap();
        assert!(!v.strongly_rigid);
        assert!(certify_strong_witness(&fw, &v.witness.unwrap().u, 0.0));
    }
    let float_seven = Framework::new(
        linf_seven_vertex().graph().clone(),
        linf_seven_vertex()
            .placement()
            .iter()
            .map(|p| p.iter().map(Scalar::to_f64).collect())
            .collect(),
        NormSpec::<f64>::linf(2).unwrap(),
    )
    .unwrap();
    assert!(matches!(
        strong_flex_search(&float_seven, TOL),
        Err(FirstOrderError::Unsupported(_))
    ));
}

#[test]
fn operator_samples() {
    let bar = linf_single_bar();
    let half = BTreeMap::from([(0usize, vec![q(1, 2), q(1, 2)])]);
    let r = generalized_operator_at(&bar, &half).unwrap();
    assert_eq!(r.row(0), &[q(-1, 2), q(-1, 2), q(1, 2), q(1, 2)]);

    let seven = linf_seven_vertex();
    let m = |s: Rational, t: Rational| {
        let w = BTreeMap::from([
            (0usize, vec![s.clone(), q(1, 1) - s]),
            (1usize, vec![t.clone(), q(1, 1) - t]),
        ]);
        rank(&generalized_operator_at(&seven, &w).unwrap(), 0.0)
    };
    assert_eq!(m(q(3, 10), q(3, 10)), 11);
    assert_eq!(m(q(0, 1), q(1, 1)), 12);
    let bad = BTreeMap::from([(0usize, vec![q(2, 1), q(-1, 1)])]);
    assert!(generalized_operator_at(&bar, &bad).is_err());
}

#[test]
fn edge_count_bound_examples() {
    assert!(!edge_count_bound_check(&linf_single_bar(), 0.0));
    assert!(edge_count_bound_check(&lp_k4_square(4.0).unwrap(), TOL));
    let grid = stable_grid_fig5ii(4.0).unwrap();
    assert_eq!(grid.graph().edge_count(), 30);
    assert!(edge_count_bound_check(&grid, TOL));
}

#[test]
fn strong_rigid_operators_have_full_rank() {
    // A well-positioned l_inf K4 in general position: strong and infinitesimal agree.
    let norm = NormSpec::<Rational>::linf(2).unwrap();
    let fw = gen_random_placement(&complete_graph(4), &norm, 11).unwrap();
    let v = strong_flex_search(&fw, 0.0).unwrap();
    let inf = is_infinitesimally_rigid(&fw, 0.0);
    assert_eq!(v.strongly_rigid, inf.rigid);
    if v.strongly_rigid {
        let r = generalized_operator_at(&fw, &BTreeMap::new()).unwrap();
        assert_eq!(rank(&r, 0.0), fw.coord_count() - inf.trivial_dim);
    }
}

#[test]
fn smallest_grid_is_the_square_k4() {
    let grid = gen_grid(&GridSpec {
        m: 2,
        n: 2,
        braces: vec![(1, 1)],
        p: 4.0,
    })
    .unwrap();
    let k4 = lp_k4_square(4.0).unwrap();
    let rename = BTreeMap::from([("1,1", "v1"), ("2,1", "v2"), ("1,2", "v3"), ("2,2", "v4")]);
    let edges = |fw: &Framework<f64>, map: &dyn Fn(&str) -> String| -> BTreeSet<(String, String)> {
        (0..fw.graph().edge_count())
            .map(|e| {
                let (a, b) = fw.graph().edge_names(e);
                let (a, b) = (map(a), map(b));
                if a < b {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect()
    };
    assert_eq!(
        edges(&grid, &|s| rename[s].to_string()),
        edges(&k4, &|s| s.to_string())
    );
    for (name, p) in grid.graph().vertex_names().iter().zip(grid.placement()) {
        let i = k4.graph().vertex_index(rename[name.as_str()]).unwrap();
        let shifted: Vec<f64> = k4.placement()[i].iter().map(|x| x + 1.0).collect();
        assert_eq!(*p, shifted);
    }
}

#[test]
fn grid_sizes_and_errors() {
    let g = stable_grid_fig5ii(4.0).unwrap();
    assert_eq!((g.graph().vertex_count(), g.graph().edge_count()), (16, 30));
    let bad = GridSpec {
        m: 4,
        n: 4,
        braces: vec![(4, 1)],
        p: 4.0,
    };
    assert!(gen_grid(&bad).is_err());
}

#[test]
fn augmentation_preconditions() {
    let base = colinear_base(4.0, 0, false).unwrap();
    assert!(gen_colinear_augmentation(&base, "v1", "v1", 0.5).is_err());
    assert!(gen_colinear_augmentation(&base, "v1", "v2", 1.0).is_err());
    // A flexible base is rejected.
    let g = Graph::new(&["a", "b", "c"], &[("a", "b"), ("b", "c")]).unwrap();
    let path = Framework::new(
        g,
        vec![vec![0.0, 0.0], vec![1.0, 0.3], vec![2.0, -0.4]],
        NormSpec::lp(2, 4.0).unwrap(),
    )
    .unwrap();
    let err = gen_colinear_augmentation(&path, "a", "c", 0.5).unwrap_err();
    assert!(err.to_string().contains("infinitesimally rigid"));
    let aug = gen_colinear_augmentation(&base, "v1", "v2", 1.0 / 3.0).unwrap();
    let v0 = aug.graph().vertex_index("v0").unwrap();
    for k in 0..2 {
        let want = (2.0 * base.placement()[0][k] + base.placement()[1][k]) / 3.0;
        assert!(close(aug.placement()[v0][k], want));
    }
}

#[test]
fn random_placements_are_reproducible() {
    let norm = NormSpec::<f64>::lp(2, 4.0).unwrap();
    let a = gen_random_placement(&complete_graph(4), &norm, 0).unwrap();
    assert!(a.classify().well_positioned);
    assert_eq!(
        a,
        gen_random_placement(&complete_graph(4), &norm, 0).unwrap()
    );
    for p in a.placement().iter().flatten() {
        assert!((-1.0..=1.0).contains(p));
    }
}
