//! Stress-energy forms and second-order witnesses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rigidity::firstorder::{
    certify_flex, flex_space, rigidity_operator, stress_space, trivial_space,
};
use rigidity::generators::{colinear_augmentation, lp_k4_square, stable_grid_fig5ii};
use rigidity::model::Framework;
use rigidity::numeric::DEFAULT_RANK_TOL;
use rigidity::secondorder::{
    analyze, certify_second_order_witness, evaluate_h_ab, evaluate_power_form, gradient_stress,
    restricted_forms, Decision, SecondOrderWitness,
};

const TOL: f64 = DEFAULT_RANK_TOL;
const U_BAR: [f64; 8] = [1.0, -1.0, 1.0, 1.0, -1.0, -1.0, -1.0, 1.0];
// Sides -1, diagonals +1.
const K4_STRESS: [f64; 6] = [-1.0, -1.0, -1.0, -1.0, 1.0, 1.0];

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn random_flex(fw: &Framework<f64>, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let basis = flex_space(fw, TOL).vectors();
    let mut u = vec![0.0; fw.coord_count()];
    for b in &basis {
        let c: f64 = rng.random_range(-1.0..1.0);
        for (x, y) in u.iter_mut().zip(b) {
            *x += c * y;
        }
    }
    u
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn h_ab_with_zero_stress_is_the_squared_map() {
    let fw = lp_k4_square(4.0).unwrap();
    let r = rigidity_operator(&fw).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let u = random_vec(&mut rng, 8);
        let ru = r.mul_vec(&u).unwrap();
        let want: f64 = ru.iter().map(|x| x * x).sum();
        assert!(close(
            evaluate_h_ab(&fw, &[0.0; 6], &[1.0; 6], &u).unwrap(),
            want,
            1e-12
        ));
    }
}

#[test]
fn h_ab_vanishes_on_translations() {
    let fw = lp_k4_square(4.0).unwrap();
    let a = gradient_stress(&fw, &K4_STRESS).unwrap();
    let t = [0.3, -2.0, 0.3, -2.0, 0.3, -2.0, 0.3, -2.0];
    assert_eq!(evaluate_h_ab(&fw, &a, &[2.0; 6], &t).unwrap(), 0.0);
    assert!(evaluate_h_ab(&fw, &a, &[0.0; 6], &t).is_err());
}

#[test]
fn k4_stress_energy_of_the_flex() {
    let fw = lp_k4_square(4.0).unwrap();
    let r = rigidity::firstorder::power_operator(&fw)
        .unwrap()
        .transpose();
    assert!(r
        .mul_vec(&K4_STRESS)
        .unwrap()
        .iter()
        .all(|x| x.abs() < 1e-14));
    // Only the diagonals see the flex, each contributing |(2, -+2)|_2^2.
    let hp = evaluate_power_form(&fw, &K4_STRESS, &U_BAR).unwrap();
    assert!(close(hp, 16.0, 1e-12));
    let a = gradient_stress(&fw, &K4_STRESS).unwrap();
    let hab = evaluate_h_ab(&fw, &a, &[1.0; 6], &U_BAR).unwrap();
    assert!(close(hab, 3.0 * 16.0, 1e-12));
}

#[test]
fn h_ab_is_p_minus_one_times_the_power_form_on_flexes() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for fw in [
        lp_k4_square(4.0).unwrap(),
        lp_k4_square(3.0).unwrap(),
        stable_grid_fig5ii(4.0).unwrap(),
    ] {
        let p = match fw.norm().kind() {
            rigidity::norms::NormKind::Lp(p) => *p,
            _ => unreachable!(),
        };
        let stresses = stress_space(&fw, TOL)
            .unwrap()
            .power_basis
            .unwrap()
            .vectors();
        assert!(!stresses.is_empty());
        let b = vec![1.0; fw.graph().edge_count()];
        for a in &stresses {
            let ag = gradient_stress(&fw, a).unwrap();
            for _ in 0..5 {
                let u = random_flex(&fw, &mut rng);
                let hp = evaluate_power_form(&fw, a, &u).unwrap();
                let hab = evaluate_h_ab(&fw, &ag, &b, &u).unwrap();
                assert!((hab - (p - 1.0) * hp).abs() <= 1e-9 * hab.abs().max(1.0));
            }
        }
    }
}

#[test]
fn k4_restricted_form_is_definite() {
    let fw = lp_k4_square(4.0).unwrap();
    let forms = restricted_forms(&fw, TOL).unwrap();
    assert_eq!((forms.flex_dim(), forms.stress_dim()), (1, 1));
    let q = &forms.forms[0];
    assert!(q.row(0)[0].abs() > forms.threshold());
    let res = analyze(&fw, TOL, 0).unwrap();
    assert_eq!(res.prestress.decision, Decision::Yes);
    assert_eq!(res.second_order.decision, Decision::Yes);
    let a = res.prestress.stress.unwrap();
    let u = forms.flex_coords.column(0);
    assert!(evaluate_power_form(&fw, &a, &u).unwrap() > 0.0);
}

#[test]
fn braced_grid_stress_energy() {
    let fw = stable_grid_fig5ii(4.0).unwrap();
    let g = fw.graph();
    let braced = [(1, 3), (2, 2), (3, 1)];
    let name = |i: usize, j: usize| format!("{i},{j}");
    let mut a = vec![0.0; g.edge_count()];
    let mut braces = Vec::new();
    for e in 0..g.edge_count() {
        let (x, y) = g.edge_names(e);
        for &(i, j) in &braced {
            let cell = [
                name(i, j),
                name(i + 1, j),
                name(i, j + 1),
                name(i + 1, j + 1),
            ];
            let (Some(px), Some(py)) = (
                cell.iter().position(|c| c == x),
                cell.iter().position(|c| c == y),
            ) else {
                continue;
            };
            if px + py == 3 {
                a[e] = 1.0;
                braces.push(e);
            } else {
                a[e] = -1.0;
            }
        }
    }
    assert_eq!(braces.len(), 6);
    let r = rigidity::firstorder::power_operator(&fw)
        .unwrap()
        .transpose();
    assert!(r.mul_vec(&a).unwrap().iter().all(|x| x.abs() < 1e-12));

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let u = random_flex(&fw, &mut rng);
        let want: f64 = braces
            .iter()
            .map(|&e| fw.edge_difference(e, &u).iter().map(|x| x * x).sum::<f64>())
            .sum();
        let got = evaluate_power_form(&fw, &a, &u).unwrap();
        assert!(close(got, want, 1e-9));
    }
}

#[test]
fn trivial_or_stable_witnesses_fail() {
    let fw = lp_k4_square(4.0).unwrap();
    let t = SecondOrderWitness {
        u: vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0],
        u_prime: vec![0.0; 8],
    };
    assert!(!certify_second_order_witness(&fw, &t, TOL));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let w = SecondOrderWitness {
            u: U_BAR.to_vec(),
            u_prime: random_vec(&mut rng, 8).iter().map(|x| 10.0 * x).collect(),
        };
        assert!(!certify_second_order_witness(&fw, &w, TOL));
    }
}

#[test]
fn aligned_augmentation_witness() {
    let fw = colinear_augmentation(4.0, 0, true).unwrap();
    let res = analyze(&fw, TOL, 0).unwrap();
    assert_eq!(res.second_order.decision, Decision::No);
    assert_eq!(res.prestress.decision, Decision::No);
    let w = res.second_order.witness.unwrap();
    assert!(certify_flex(&fw, &w.u, TOL));
    assert!(certify_second_order_witness(&fw, &w, TOL));

    // Scaling u by l and u' by l^2 keeps the witness.
    for l in [0.5, -3.0, 40.0] {
        let scaled = SecondOrderWitness {
            u: w.u.iter().map(|x| l * x).collect(),
            u_prime: w.u_prime.iter().map(|x| l * l * x).collect(),
        };
        assert!(certify_second_order_witness(&fw, &scaled, TOL));
    }
    // Adding a trivial motion to u' keeps it.
    let shifted = SecondOrderWitness {
        u: w.u.clone(),
        u_prime: w
            .u_prime
            .iter()
            .enumerate()
            .map(|(i, x)| x + if i % 2 == 0 { 0.7 } else { -0.2 })
            .collect(),
    };
    assert!(certify_second_order_witness(&fw, &shifted, TOL));

    // Every stress is blind to a second-order flex.
    for a in stress_space(&fw, TOL)
        .unwrap()
        .power_basis
        .unwrap()
        .vectors()
    {
        assert!(evaluate_power_form(&fw, &a, &w.u).unwrap().abs() < 1e-9);
    }
    assert!(!rigidity::firstorder::in_span(
        &trivial_space(&fw, TOL),
        &w.u,
        TOL
    ));
}

#[test]
fn generic_augmentation_is_prestress_stable() {
    let fw = colinear_augmentation(4.0, 0, false).unwrap();
    let res = analyze(&fw, TOL, 0).unwrap();
    assert_eq!(res.prestress.decision, Decision::Yes);
    assert_eq!(res.second_order.decision, Decision::Yes);
}

#[test]
fn prestress_witnesses_admit_a_finite_lambda() {
    let frameworks = [
        lp_k4_square(4.0).unwrap(),
        stable_grid_fig5ii(4.0).unwrap(),
        rigidity::generators::euclid_braced_square_midpoints(),
        colinear_augmentation(4.0, 0, false).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for fw in &frameworks {
        let res = analyze(fw, TOL, 0).unwrap();
        assert_eq!(res.prestress.decision, Decision::Yes);
        let a_pow = res.prestress.stress.unwrap();
        let a = gradient_stress(fw, &a_pow).unwrap();
        let n = fw.coord_count();
        let samples: Vec<Vec<f64>> = (0..1000).map(|_| random_vec(&mut rng, n)).collect();
        let ones = vec![1.0; fw.graph().edge_count()];
        let ok = |l: f64| {
            let b: Vec<f64> = ones.iter().map(|x| x * l).collect();
            samples
                .iter()
                .all(|u| evaluate_h_ab(fw, &a, &b, u).unwrap() >= -1e-9)
        };
        let mut lambda = 1.0;
        while !ok(lambda) {
            lambda *= 2.0;
            assert!(lambda <= 1e12, "no lambda found");
        }
        let b: Vec<f64> = ones.iter().map(|x| x * lambda).collect();
        for t in trivial_space(fw, TOL).vectors() {
            assert!(evaluate_h_ab(fw, &a, &b, &t).unwrap().abs() < 1e-9);
        }
        // Positive multiples of the stress keep the sign on every flex.
        let forms = restricted_forms(fw, TOL).unwrap();
        for k in 0..forms.flex_dim() {
            let u = forms.flex_coords.column(k);
            for c in [1.0, 0.01, 250.0] {
                let scaled: Vec<f64> = a_pow.iter().map(|x| c * x).collect();
                assert!(evaluate_power_form(fw, &scaled, &u).unwrap() > 0.0);
            }
        }
    }
}
