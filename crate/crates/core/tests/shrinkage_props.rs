use proptest::prelude::*;
use sqrtnuc::shrinkage::{oracle_sqrt_shrinkage, shrinkage_objective, solve_sqrt_shrinkage};

fn spectrum(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 6 => 0.0f64..10.0], 1..=max_len).prop_map(|mut v| {
        v.sort_by(|a, b| b.total_cmp(a));
        v
    })
}

/// Spectrum with forced repeats.
fn repeated_spectrum() -> impl Strategy<Value = Vec<f64>> {
    (prop::collection::vec(0.0f64..10.0, 1..=3), prop::collection::vec(1usize..=3, 3)).prop_map(|(vals, reps)| {
        let mut v: Vec<f64> = vals.iter().zip(&reps).flat_map(|(&x, &k)| std::iter::repeat_n(x, k)).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    })
}

/// One-sided derivative of the objective at `s` along `d`, from its closed form.
fn directional_derivative(sigma: &[f64], s: &[f64], d: &[f64], lambda: f64, c: f64) -> f64 {
    let diff: Vec<f64> = s.iter().zip(sigma).map(|(a, b)| a - b).collect();
    let radius = (diff.iter().map(|x| x * x).sum::<f64>() + c * c).sqrt();
    let linear = lambda * d.iter().sum::<f64>();
    if radius == 0.0 {
        d.iter().map(|x| x * x).sum::<f64>().sqrt() + linear
    } else {
        diff.iter().zip(d).map(|(a, b)| a * b).sum::<f64>() / radius + linear
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn closed_form_matches_oracle(sigma in spectrum(6), lambda in 0.05f64..0.99, c in 0.0f64..3.0) {
        let closed = solve_sqrt_shrinkage(&sigma, lambda, c).unwrap();
        let oracle = oracle_sqrt_shrinkage(&sigma, lambda, c, 1e-13).unwrap();
        prop_assert!((closed.objective - oracle.objective).abs() <= 1e-8 * (1.0 + oracle.objective));
    }

    #[test]
    fn solution_invariants(sigma in spectrum(8), lambda in 0.05f64..1.5, c in prop_oneof![Just(0.0), 0.0f64..3.0]) {
        let sol = solve_sqrt_shrinkage(&sigma, lambda, c).unwrap();
        prop_assert!(sol.s.iter().zip(&sigma).all(|(s, x)| *s >= 0.0 && s <= x));
        prop_assert!(sol.s.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(sol.retained as f64 <= (1.0 / (lambda * lambda)).floor());
        prop_assert_eq!(sol.retained, sol.s.iter().filter(|&&x| x > 0.0).count());
        let obj = shrinkage_objective(&sigma, &sol.s, lambda, c);
        prop_assert!((obj - sol.objective).abs() <= 1e-12 * (1.0 + obj));
        if sol.radius > 0.0 {
            let t = lambda * sol.radius;
            let scale = 1e-9 * (1.0 + sigma[0]);
            for (s, x) in sol.s.iter().zip(&sigma) {
                if *s > 0.0 {
                    prop_assert!((x - t - s).abs() <= scale);
                } else {
                    prop_assert!(*x <= t + scale);
                }
            }
        } else {
            prop_assert_eq!(&sol.s, &sigma);
        }
    }

    #[test]
    fn no_feasible_descent_direction(
        sigma in spectrum(6),
        lambda in 0.05f64..0.99,
        c in prop_oneof![Just(0.0), 0.0f64..3.0],
        dirs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 6), 100),
    ) {
        let sol = solve_sqrt_shrinkage(&sigma, lambda, c).unwrap();
        let p = sigma.len();
        let check = |d: Vec<f64>| {
            // Feasible: coordinates sitting at zero may only increase.
            let d: Vec<f64> = d.iter().zip(&sol.s).map(|(&x, &s)| if s == 0.0 { x.abs() } else { x }).collect();
            directional_derivative(&sigma, &sol.s, &d, lambda, c)
        };
        for i in 0..p {
            for sign in [1.0, -1.0] {
                let mut e = vec![0.0; p];
                e[i] = sign;
                prop_assert!(check(e) >= -1e-7);
            }
        }
        for d in dirs {
            prop_assert!(check(d[..p].to_vec()) >= -1e-7);
        }
    }

    #[test]
    fn monotone_in_lambda(sigma in spectrum(6), lo in 0.05f64..0.9, step in 0.001f64..0.5, c in 0.0f64..3.0) {
        let a = solve_sqrt_shrinkage(&sigma, lo, c).unwrap();
        let b = solve_sqrt_shrinkage(&sigma, lo + step, c).unwrap();
        prop_assert!(b.retained <= a.retained);
        prop_assert!(b.s.iter().sum::<f64>() <= a.s.iter().sum::<f64>() * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn scale_equivariant(sigma in spectrum(6), lambda in 0.05f64..0.99, c in 0.0f64..3.0, t in 0.01f64..100.0) {
        let base = solve_sqrt_shrinkage(&sigma, lambda, c).unwrap();
        let scaled: Vec<f64> = sigma.iter().map(|x| x * t).collect();
        let sol = solve_sqrt_shrinkage(&scaled, lambda, t * c).unwrap();
        for (a, b) in sol.s.iter().zip(&base.s) {
            prop_assert!((a - t * b).abs() <= 1e-9 * t * (1.0 + sigma[0]));
        }
    }

    #[test]
    fn repeated_values_match_oracle(sigma in repeated_spectrum(), lambda in 0.05f64..0.99, c in 0.0f64..3.0) {
        prop_assume!(sigma.len() <= 8);
        let closed = solve_sqrt_shrinkage(&sigma, lambda, c).unwrap();
        let oracle = oracle_sqrt_shrinkage(&sigma, lambda, c, 1e-13).unwrap();
        prop_assert!((closed.objective - oracle.objective).abs() <= 1e-8 * (1.0 + oracle.objective));
        // Equal inputs are shrunk equally.
        for w in sigma.windows(2).zip(closed.s.windows(2)) {
            if w.0[0] == w.0[1] {
                prop_assert_eq!(w.1[0], w.1[1]);
            }
        }
    }
}

#[test]
fn boundary_tie_gives_same_solution() {
    // σ = (4, 3), λ = 0.8, c = 0: k = 0 gives r = 5 and k = 1 gives r² = 9/0.36 = 25,
    // so λr = 4 = σ₁ sits on the boundary of both and both yield s = 0.
    let sigma = [4.0, 3.0];
    let sol = solve_sqrt_shrinkage(&sigma, 0.8, 0.0).unwrap();
    assert_eq!(sol.s, vec![0.0, 0.0]);
    assert_eq!(sol.retained, 0);
    assert!((sol.objective - 5.0).abs() < 1e-12);
    let oracle = oracle_sqrt_shrinkage(&sigma, 0.8, 0.0, 1e-13).unwrap();
    assert!((sol.objective - oracle.objective).abs() <= 1e-9);
}
