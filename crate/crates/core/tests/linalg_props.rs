use proptest::prelude::*;
use sqrtnuc::linalg::{
    column_projector, min_norm_solve, norm_schatten, numerical_rank, svd, sup_norm, Matrix, Schatten,
    DEFAULT_RANK_TOL,
};

fn matrix(max_dim: usize) -> impl Strategy<Value = Matrix> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(|(r, c)| {
        prop::collection::vec(-5.0f64..5.0, r * c).prop_map(move |data| Matrix::new(r, c, data).unwrap())
    })
}

/// Tall matrix of rank at most `k`, as a product of two factors.
fn low_rank(max_dim: usize) -> impl Strategy<Value = Matrix> {
    (2..=max_dim, 1..=max_dim, 1..=3usize).prop_flat_map(|(l, m, k)| {
        (
            prop::collection::vec(-2.0f64..2.0, l * k),
            prop::collection::vec(-2.0f64..2.0, k * m),
        )
            .prop_map(move |(a, b)| {
                Matrix::new(l, k, a).unwrap().matmul(&Matrix::new(k, m, b).unwrap())
            })
    })
}

fn gram_error(q: &Matrix) -> f64 {
    let g = q.tr_matmul(q);
    g.sub(&Matrix::identity(g.rows())).sup_norm()
}

proptest! {
    #[test]
    fn svd_contract(a in matrix(7)) {
        let f = svd(&a).unwrap();
        let p = a.rows().min(a.cols());
        prop_assert_eq!(f.singulars.len(), p);
        prop_assert!(f.singulars.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(f.singulars.iter().all(|&s| s >= 0.0));
        prop_assert!(gram_error(&f.left) <= 1e-10 * p as f64);
        prop_assert!(gram_error(&f.right) <= 1e-10 * p as f64);
        let rec = f.reconstruct().sub(&a).frobenius_norm();
        prop_assert!(rec <= 1e-10 * (1.0 + a.frobenius_norm()));
    }

    #[test]
    fn schatten_norms_are_ordered(a in matrix(7)) {
        let one = norm_schatten(&a, Schatten::One).unwrap();
        let two = norm_schatten(&a, Schatten::Two).unwrap();
        let inf = norm_schatten(&a, Schatten::Infinity).unwrap();
        let entry_sq: f64 = a.as_slice().iter().map(|x| x * x).sum();
        let sv_sq: f64 = svd(&a).unwrap().singulars.iter().map(|s| s * s).sum();
        prop_assert!((two * two - entry_sq).abs() <= 1e-10 * (1.0 + entry_sq));
        prop_assert!((sv_sq - entry_sq).abs() <= 1e-10 * (1.0 + entry_sq));
        prop_assert!(inf <= two * (1.0 + 1e-12));
        prop_assert!(two <= one * (1.0 + 1e-12));
    }

    #[test]
    fn sup_norm_matches_scan(a in matrix(8)) {
        let mut brute = 0.0f64;
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                brute = brute.max(a[(i, j)].abs());
            }
        }
        prop_assert_eq!(sup_norm(&a), brute);
    }

    #[test]
    fn projector_is_idempotent_and_fixes_columns(v in low_rank(8), b in matrix(8)) {
        let p = column_projector(&v, DEFAULT_RANK_TOL).unwrap();
        prop_assert_eq!(p.rank(), numerical_rank(&v, DEFAULT_RANK_TOL).unwrap());
        prop_assert!(gram_error(p.basis()) <= 1e-10);
        let fixed = p.project(&v).sub(&v).sup_norm();
        prop_assert!(fixed <= 1e-10 * (1.0 + v.frobenius_norm()));
        let rhs = Matrix::from_fn(v.rows(), b.cols(), |i, j| b[(i % b.rows(), j)]);
        let once = p.project(&rhs);
        let twice = p.project(&once);
        prop_assert!(twice.sub(&once).sup_norm() <= 1e-10 * (1.0 + rhs.frobenius_norm()));
        let split = once.add(&p.complement(&rhs)).sub(&rhs).sup_norm();
        prop_assert!(split <= 1e-10 * (1.0 + rhs.frobenius_norm()));
    }

    #[test]
    fn min_norm_solution_is_orthogonal_to_null_space(v in low_rank(7), w in matrix(4)) {
        // Right-hand side in col(V) by construction.
        let coeffs = Matrix::from_fn(v.cols(), w.cols(), |i, j| w[(i % w.rows(), j)]);
        let b = v.matmul(&coeffs);
        let a = min_norm_solve(&v, &b, DEFAULT_RANK_TOL).unwrap();
        prop_assert!(v.matmul(&a).sub(&b).sup_norm() <= 1e-8 * (1.0 + b.frobenius_norm()));
        // Null-space directions of V: right singular vectors beyond its rank.
        let f = svd(&v.transpose().matmul(&v)).unwrap();
        let r = numerical_rank(&v, DEFAULT_RANK_TOL).unwrap();
        for k in r..v.cols() {
            let n = Matrix::from_fn(v.cols(), a.cols(), |i, _| f.left[(i, k)]);
            let inner = a.inner(&n).abs();
            prop_assert!(inner <= 1e-8 * (1.0 + a.frobenius_norm()) * n.frobenius_norm());
        }
    }
}

#[test]
fn gaussian_tall_matrix_has_full_column_rank() {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let v = Matrix::from_fn(30, 12, |_, _| StandardNormal.sample(&mut rng));
    let p = column_projector(&v, DEFAULT_RANK_TOL).unwrap();
    assert_eq!(p.rank(), 12);
}
