use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use randisc::combinatorics::{combinations, indicator};
use randisc::lattice::{covering_radius, lattice_from_columns, CoveringMode, Norm};
use randisc::matrix::IntMatrix;
use randisc::solvers::{
    disc_decision_dp, disc_exact, disc_meet_middle, disc_value, local_search, parity_lower_bound, Coloring,
};
use randisc::spanningness::beta_bound;

fn int_matrix(max_m: usize, max_n: usize, range: i64) -> impl Strategy<Value = IntMatrix> {
    (1..=max_m, 1..=max_n).prop_flat_map(move |(m, n)| {
        prop::collection::vec(prop::collection::vec(-range..=range, m), n)
            .prop_map(move |cols| IntMatrix::from_columns(m, &cols).unwrap())
    })
}

/// Columns permuted by `perm` and negated where `signs` is set.
fn scramble(m: &IntMatrix, perm: &[usize], signs: &[bool]) -> IntMatrix {
    let cols: Vec<Vec<i64>> = perm
        .iter()
        .zip(signs)
        .map(|(&j, &neg)| m.col(j).iter().map(|&x| if neg { -x } else { x }).collect())
        .collect();
    IntMatrix::from_columns(m.rows(), &cols).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn disc_ignores_column_order_and_signs(
        m in int_matrix(3, 12, 5),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut perm: Vec<usize> = (0..m.cols()).collect();
        perm.shuffle(&mut rng);
        let signs: Vec<bool> = (0..m.cols()).map(|j| (seed >> (j % 64)) & 1 == 1).collect();
        let s = scramble(&m, &perm, &signs);
        let e = disc_exact(&m, Norm::Sup).unwrap().value;
        prop_assert_eq!(disc_exact(&s, Norm::Sup).unwrap().value, e);
        prop_assert_eq!(disc_meet_middle(&s, Norm::Sup).unwrap().value, e);
        prop_assert!(disc_decision_dp(&s, e as i64).unwrap().feasible);
        prop_assert!(!disc_decision_dp(&s, e as i64 - 1).unwrap().feasible);
        prop_assert!(local_search(&s, Norm::Sup, 16, &mut rng).value >= e);
        prop_assert_eq!(disc_exact(&s, Norm::Euclidean).unwrap().value, disc_exact(&m, Norm::Euclidean).unwrap().value);
    }

    #[test]
    fn exact_value_dominates_parity_bound(m in int_matrix(3, 12, 6)) {
        for norm in [Norm::Sup, Norm::Euclidean] {
            let e = disc_exact(&m, norm).unwrap();
            let p = parity_lower_bound(&m, norm).unwrap();
            prop_assert!(p.exact);
            prop_assert!(e.value >= p.distance - 1e-9, "{} < {}", e.value, p.distance);
            prop_assert_eq!(disc_value(&m, &e.coloring, norm).unwrap(), e.value);
        }
    }

    #[test]
    fn dp_brackets_the_exact_value(m in int_matrix(3, 14, 4)) {
        let v = disc_exact(&m, Norm::Sup).unwrap().value as i64;
        let at = disc_decision_dp(&m, v).unwrap();
        prop_assert!(at.feasible);
        let y = at.coloring.unwrap();
        prop_assert!(disc_value(&m, &y, Norm::Sup).unwrap() <= v as f64);
        prop_assert!(!disc_decision_dp(&m, v - 1).unwrap().feasible);
    }

    #[test]
    fn parity_bound_is_at_most_twice_the_covering_radius(m in int_matrix(2, 6, 4)) {
        let Ok(l) = lattice_from_columns(&m.column_vecs()) else { return Ok(()) };
        for norm in [Norm::Sup, Norm::Euclidean] {
            let Ok(rho) = covering_radius(&l, norm, CoveringMode::Certified) else { continue };
            let p = parity_lower_bound(&m, norm).unwrap().distance;
            let r = if rho.certified { rho.radius } else { rho.upper };
            prop_assert!(p <= 2.0 * r + 1e-9, "{p} vs ρ {r}");
        }
    }
}

/// A t-sparse matrix holding every support vector `copies[j]` times, shuffled.
fn saturated_tsparse(m: usize, t: usize, copies: &[usize], rng: &mut ChaCha20Rng) -> IntMatrix {
    let support: Vec<Vec<i64>> = combinations(m, t).iter().map(|s| indicator(m, s)).collect();
    let mut cols: Vec<Vec<i64>> =
        support.iter().zip(copies).flat_map(|(v, &c)| std::iter::repeat_n(v.clone(), c)).collect();
    cols.shuffle(rng);
    IntMatrix::from_columns(m, &cols).unwrap()
}

/// With every support vector repeated often enough, the parity bound is
/// attained: disc equals `d_∞(M·1, 2L)`. The multiplicity floor is
/// `max(β, 1)·|S| + 1`, well above the even-coefficient sizes these supports
/// need.
#[test]
fn saturated_tsparse_attains_the_parity_bound() {
    let mut rng = ChaCha20Rng::seed_from_u64(407);
    for (m, t) in [(3, 1), (3, 2), (4, 1), (4, 2), (4, 3)] {
        let dist = randisc::distributions::ColumnDistribution::tsparse(m, t).unwrap();
        let size = combinations(m, t).len();
        let floor = beta_bound(&dist).unwrap().beta.max(1) as usize * size + 1;
        for _ in 0..6 {
            let copies: Vec<usize> = (0..size).map(|_| floor + rand::Rng::random_range(&mut rng, 0..3)).collect();
            let mat = saturated_tsparse(m, t, &copies, &mut rng);
            let p = parity_lower_bound(&mat, Norm::Sup).unwrap().distance;
            if mat.cols() <= 26 {
                assert_eq!(disc_exact(&mat, Norm::Sup).unwrap().value, p, "m={m} t={t} copies {copies:?}");
            } else {
                let d = disc_decision_dp(&mat, p as i64).unwrap();
                assert!(d.feasible, "m={m} t={t} copies {copies:?}: no coloring at {p}");
                assert_eq!(disc_value(&mat, &d.coloring.unwrap(), Norm::Sup).unwrap(), p);
            }
        }
    }
}

#[test]
fn colorings_reject_bad_entries() {
    assert!(Coloring::new(vec![1, 0, -1]).is_err());
    let y = Coloring::new(vec![1, -1]).unwrap();
    assert_eq!(y.negated().entries(), &[-1, 1]);
}
