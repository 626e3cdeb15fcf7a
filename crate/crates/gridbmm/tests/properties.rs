//! Property tests for the structural invariants.

use num_traits::{One, Signed};
use proptest::prelude::*;

use gridbmm::bitmatrix::{BoolMatrix, IndexSet, NodeId};
use gridbmm::decompose::{min_degree, MinDegreeCase};
use gridbmm::gridnorm::grid_norm_power_exact_with_cap;
use gridbmm::io::{read_matrix, write_matrix_dense, write_matrix_sparse};
use gridbmm::rational::{pow, ratio_u, Rat};
use gridbmm::sift::{sift, SiftMode, SiftOutcome};
use gridbmm::threesum::{solve_3sum_naive, solve_3sum_via_triangles, ThreeSumAnswer, ThreeSumInstance};

fn arb_matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = BoolMatrix> {
    (1..=max_rows, 1..=max_cols)
        .prop_flat_map(|(r, c)| {
            proptest::collection::vec(proptest::bool::ANY, r * c)
                .prop_map(move |bits| BoolMatrix::from_fn(r, c, |i, j| bits[i * c + j]))
        })
}

fn arb_index_set(part: usize) -> impl Strategy<Value = IndexSet> {
    proptest::collection::vec(proptest::bool::ANY, part).prop_map(move |include| {
        IndexSet::new(
            part,
            (0..part as u32).filter(|&i| include[i as usize]).collect(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Density equals the average row degree and the average column degree.
    #[test]
    fn density_is_mean_degree(m in arb_matrix(24, 24)) {
        let d = m.density().unwrap();
        let rows: Rat = (0..m.rows()).map(|x| m.row_degree(NodeId(x as u32)).unwrap()).sum();
        let cols: Rat = (0..m.cols()).map(|y| m.col_degree(NodeId(y as u32)).unwrap()).sum();
        prop_assert_eq!(rows / ratio_u(m.rows() as u64, 1), d.clone());
        prop_assert_eq!(cols / ratio_u(m.cols() as u64, 1), d);
    }

    /// Boolean product bit set iff the 2-path count is positive.
    #[test]
    fn bool_product_iff_positive_count(
        (a, b) in (1usize..=12, 1usize..=10, 1usize..=14).prop_flat_map(|(r, k, c)| {
            (
                proptest::collection::vec(proptest::bool::ANY, r * k)
                    .prop_map(move |bits| BoolMatrix::from_fn(r, k, |i, j| bits[i * k + j])),
                proptest::collection::vec(proptest::bool::ANY, k * c)
                    .prop_map(move |bits| BoolMatrix::from_fn(k, c, |i, j| bits[i * c + j])),
            )
        })
    ) {
        let bp = a.bool_product(&b).unwrap();
        let cp = a.count_product(&b).unwrap();
        for x in 0..a.rows() {
            for z in 0..b.cols() {
                prop_assert_eq!(bp.get(x, z), cp.get(x, z) >= 1);
            }
        }
    }

    /// Removing a rectangle and keeping that rectangle partitions the edges.
    #[test]
    fn zero_rectangle_partitions_edges(m in arb_matrix(20, 20)) {
        let rows = IndexSet::new(m.rows(), (0..m.rows() as u32).step_by(2).collect()).unwrap();
        let cols = IndexSet::new(m.cols(), (0..m.cols() as u32).step_by(3).collect()).unwrap();
        let z = m.zero_rectangle(&rows, &cols).unwrap();
        let s = m.submatrix(&rows, &cols).unwrap();
        prop_assert_eq!(z.count_ones() + s.count_ones(), m.count_ones());
    }

    /// Submatrix entries agree with a scalar gather.
    #[test]
    fn submatrix_matches_gather(m in arb_matrix(16, 16)) {
        let rows = IndexSet::new(m.rows(), (0..m.rows() as u32).filter(|i| i % 3 != 1).collect()).unwrap();
        let cols = IndexSet::new(m.cols(), (0..m.cols() as u32).filter(|i| i % 2 == 0).collect()).unwrap();
        let s = m.submatrix(&rows, &cols).unwrap();
        for (i, &r) in rows.members().iter().enumerate() {
            for (j, &c) in cols.members().iter().enumerate() {
                prop_assert_eq!(s.get(i, j), m.get(r as usize, c as usize));
            }
        }
    }

    /// Grid-norm powers sit between E[A]^(k*l) and 1, and transposing swaps
    /// the parameters.
    #[test]
    fn grid_norm_bounds_and_symmetry(m in arb_matrix(10, 10)) {
        for (k, ell) in [(1u32, 2u32), (2, 2)] {
            let p = grid_norm_power_exact_with_cap(&m, k, ell, 1 << 30).unwrap();
            prop_assert!(p <= Rat::one());
            prop_assert!(p >= pow(&m.density().unwrap(), k as u64 * ell as u64));
            let pt = grid_norm_power_exact_with_cap(&m.transpose(), ell, k, 1 << 30).unwrap();
            prop_assert_eq!(p, pt);
        }
    }

    /// Additive-approximation arithmetic: if `a^k` and `b^k` differ by at
    /// most `eps^k`, then `a` and `b` differ by at most `eps` (tested in the
    /// contrapositive, entirely on exact rationals).
    #[test]
    fn power_domain_error_bound(
        an in 0u64..=100, bn in 0u64..=100, en in 1u64..=100, k in 1u32..=5,
    ) {
        let a = ratio_u(an, 100);
        let b = ratio_u(bn, 100);
        let eps = ratio_u(en, 100);
        if (&a - &b).abs() > eps {
            let diff = (pow(&a, k as u64) - pow(&b, k as u64)).abs();
            prop_assert!(diff > pow(&eps, k as u64));
        }
    }

    /// Sift never returns an unverified rectangle: any DenserRect satisfies
    /// both theorem postconditions (they are re-checked internally; this
    /// re-derives them from scratch).
    #[test]
    fn sift_rectangles_verify(m in arb_matrix(12, 12), en in 1u64..=8) {
        let eps = ratio_u(en, 10);
        match sift(&m, &eps, 2, 2, &SiftMode::Exact).unwrap() {
            SiftOutcome::Regular => {}
            SiftOutcome::DenserRect { rows, cols, achieved_density } => {
                let sub = m.submatrix(&rows, &cols).unwrap();
                prop_assert_eq!(sub.density().unwrap(), achieved_density.clone());
                let e = m.density().unwrap();
                prop_assert!(achieved_density >= (Rat::one() + &eps / ratio_u(2, 1)) * &e);
                let area = ratio_u((rows.len() * cols.len()) as u64, 1);
                let bound = &eps / ratio_u(16, 1) * pow(&e, 4)
                    * ratio_u((m.rows() * m.cols()) as u64, 1);
                prop_assert!(area >= bound);
            }
        }
    }

    /// Min-degree outcomes satisfy their case's contract.
    #[test]
    fn min_degree_contract(m in arb_matrix(14, 14), gn in 1u64..=3) {
        let eps = ratio_u(1, 10);
        let gamma = ratio_u(gn, 4);
        let out = min_degree(&m, &eps, &gamma).unwrap();
        let sub = m.submatrix(&out.kept_rows, &IndexSet::full(m.cols())).unwrap();
        match out.case {
            MinDegreeCase::MinDegreeOk => {
                prop_assert!(sub.density().unwrap() >= m.density().unwrap());
                let e = sub.density().unwrap();
                for x in 0..sub.rows() {
                    let deg = sub.row_degree(NodeId(x as u32)).unwrap();
                    prop_assert!(deg >= (Rat::one() - &eps) * &e);
                }
            }
            MinDegreeCase::DensityIncrement => {
                let floor = ((Rat::one() - &gamma) * ratio_u(m.rows() as u64, 1)).floor();
                prop_assert_eq!(ratio_u(out.kept_rows.len() as u64, 1), floor);
                let need = (Rat::one() + &gamma * &eps) * m.density().unwrap();
                prop_assert!(sub.density().unwrap() >= need);
            }
        }
    }

    /// Matrix text formats round-trip.
    #[test]
    fn matrix_io_round_trips(m in arb_matrix(12, 18)) {
        prop_assert_eq!(&read_matrix(&write_matrix_dense(&m)).unwrap(), &m);
        prop_assert_eq!(&read_matrix(&write_matrix_sparse(&m)).unwrap(), &m);
    }

    /// Index-set composition is associative with membership.
    #[test]
    fn index_set_compose(outer in arb_index_set(20)) {
        let inner = IndexSet::new(outer.len(), (0..outer.len() as u32).step_by(2).collect()).unwrap();
        let composed = inner.compose(&outer).unwrap();
        for (i, &m) in composed.members().iter().enumerate() {
            prop_assert_eq!(m, outer.members()[inner.members()[i] as usize]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// The randomized 3-SUM reduction agrees with the quadratic baseline.
    #[test]
    fn threesum_reduction_agrees(values in proptest::collection::vec(-60i64..=60, 1..=24), seed in 0u64..1000) {
        let inst = ThreeSumInstance::with_auto_range(values).unwrap();
        let naive = solve_3sum_naive(&inst);
        let via = solve_3sum_via_triangles(&inst, None, seed).unwrap();
        prop_assert_eq!(naive.found(), via.found());
        if let ThreeSumAnswer::Yes(a, b, c) = via {
            prop_assert_eq!(a + b + c, 0);
            for v in [a, b, c] {
                prop_assert!(inst.values().contains(&v));
            }
        }
    }
}
