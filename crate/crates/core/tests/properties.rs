use std::sync::OnceLock;

use num_complex::Complex64;
use proptest::prelude::*;
use solenoid_core::solenoid::{finite_difference_jacobian, jacobian};
use solenoid_core::symbolic::{apply_word, enumerate_cylinders};
use solenoid_core::thermo::{sample, solve_equilibrium};
use solenoid_core::twisted::{exp_sum_values, nonconcentration_count, ExpSumOptions};
use solenoid_core::{
    coefficient_table, EquilibriumData, PerturbationSpec, Potential, SolenoidPoint, Word,
};

fn spec() -> &'static PerturbationSpec {
    static SPEC: OnceLock<PerturbationSpec> = OnceLock::new();
    SPEC.get_or_init(|| coefficient_table(5))
}

fn equilibrium() -> &'static EquilibriumData {
    static EQ: OnceLock<EquilibriumData> = OnceLock::new();
    EQ.get_or_init(|| solve_equilibrium(spec(), &Potential::Mme, 1 << 12).unwrap())
}

fn brute_count(values: &[f64], sigma: f64) -> u64 {
    let mut c = 0;
    for a in values {
        for b in values {
            if (a - b).abs() <= sigma {
                c += 1;
            }
        }
    }
    c
}

fn direct_sum(eta: f64, t: &[Vec<f64>]) -> f64 {
    let mut s = Complex64::new(0.0, 0.0);
    for a in &t[0] {
        for b in &t[1] {
            for c in &t[2] {
                s += Complex64::cis(eta * a * b * c);
            }
        }
    }
    s.norm() / (t[0].len() as f64).powi(3)
}

#[test]
fn g_prime_matches_central_differences() {
    let s = spec();
    let h = 1e-6;
    let worst = (0..10_000)
        .map(|i| {
            let x = (i as f64 + 0.5) / 10_000.0;
            let fd = (s.g_lift(x + h).0 - s.g_lift(x - h).0) / (2.0 * h);
            (fd - s.g_lift(x).1).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst < 1e-8, "worst {worst:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lift_is_strictly_increasing(x in 0.0f64..1.0, dx in 1e-9f64..0.5) {
        let s = spec();
        prop_assert!(s.f_lift(x + dx).0 > s.f_lift(x).0);
        prop_assert!(s.f_lift(x).1 > 1.9);
    }

    #[test]
    fn lift_has_degree_two(x in 0.0f64..1.0) {
        let s = spec();
        prop_assert!((s.f_lift(x + 1.0).0 - s.f_lift(x).0 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn determinant_is_a_sixteenth_of_the_derivative(
        theta in 0.0f64..1.0,
        r in 0.0f64..0.9,
        a in 0.0f64..std::f64::consts::TAU,
    ) {
        let s = spec();
        let p = SolenoidPoint::new(theta, r * a.cos(), r * a.sin());
        let j = jacobian(s, &p);
        prop_assert!((j.det() - s.f_lift(theta).1 / 16.0).abs() < 1e-12);
        let fd = finite_difference_jacobian(s, &p, 1e-6);
        for (row, fd_row) in j.0.iter().zip(&fd.0) {
            for (x, y) in row.iter().zip(fd_row) {
                prop_assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn words_land_in_their_cylinder(index in 0u64..1 << 10, x in 0.0f64..1.0) {
        let s = spec();
        let w = Word::from_index(index, 10);
        prop_assert_eq!(w.index(), index);
        let cyl = &enumerate_cylinders(s, 10).unwrap()[index as usize];
        let (y, _) = apply_word(s, &w, x).unwrap();
        prop_assert!(cyl.lo - 1e-12 <= y && y <= cyl.hi + 1e-12);
    }

    #[test]
    fn pair_count_matches_brute_force(
        raw in prop::collection::vec(0u32..500, 1..300),
        scale in 1e-3f64..1.0,
        sigma in 1e-4f64..0.5,
    ) {
        let values: Vec<f64> = raw.iter().map(|&v| v as f64 * scale / 500.0).collect();
        prop_assert_eq!(nonconcentration_count(&values, sigma).unwrap(), brute_count(&values, sigma));
    }

    #[test]
    fn exp_sum_ignores_table_order(
        mut a in prop::collection::vec(0.5f64..2.0, 16),
        b in prop::collection::vec(0.5f64..2.0, 16),
        c in prop::collection::vec(0.5f64..2.0, 16),
        eta in 0.1f64..50.0,
        shift in 0usize..16,
    ) {
        let o = ExpSumOptions::default();
        let base = exp_sum_values(eta, &[&a, &b, &c], o).unwrap();
        let swapped = exp_sum_values(eta, &[&c, &a, &b], o).unwrap();
        a.rotate_left(shift);
        let rotated = exp_sum_values(eta, &[&a, &b, &c], o).unwrap();
        prop_assert!((base - swapped).abs() < 1e-12);
        prop_assert!((base - rotated).abs() < 1e-12);
    }

    #[test]
    fn fold_matches_triple_loop(
        n in 1usize..=64,
        seed in prop::collection::vec(0.9f64..1.1, 192),
        eta in 0.1f64..100.0,
    ) {
        let tables: Vec<Vec<f64>> = (0..3).map(|j| seed[j * 64..j * 64 + n].to_vec()).collect();
        let refs: Vec<&[f64]> = tables.iter().map(Vec::as_slice).collect();
        let got = exp_sum_values(eta, &refs, ExpSumOptions::default()).unwrap();
        prop_assert!((got - direct_sum(eta, &tables)).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn cylinders_tile_the_circle(depth in 1usize..=12) {
        let cyl = enumerate_cylinders(spec(), depth).unwrap();
        prop_assert_eq!(cyl.len(), 1 << depth);
        let mut bounds: Vec<(f64, f64)> = cyl.iter().map(|c| (c.lo, c.hi)).collect();
        bounds.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut length = 0.0;
        for w in bounds.windows(2) {
            prop_assert!((w[0].1 - w[1].0).abs() < 1e-12);
        }
        for (lo, hi) in &bounds {
            prop_assert!(hi > lo);
            length += hi - lo;
        }
        prop_assert!((length - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sampling_is_deterministic_per_seed(seed in any::<u64>(), count in 1usize..5000) {
        let eq = equilibrium();
        let a = sample(eq, count, seed).unwrap();
        prop_assert_eq!(&a, &sample(eq, count, seed).unwrap());
        prop_assert!(a.iter().all(|p| (0.0..1.0).contains(&p.value())));
    }

    #[test]
    fn normalized_operator_fixes_constants(c in -5.0f64..5.0) {
        let eq = equilibrium();
        let out = eq.normalized_apply(&vec![c; eq.grid_size()]);
        prop_assert!(out.iter().all(|v| (v - c).abs() < 1e-9 * (1.0 + c.abs())));
    }
}
