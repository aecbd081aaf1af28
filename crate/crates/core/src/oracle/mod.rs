//! Exact finite-MDP machinery for checking the learning rule: the EASpace
//! operator `H`, value iteration to its fixed point, and the contraction
//! and monotonicity checks.

mod format;
mod mdp;
mod operator;
mod random;

pub use format::{parse_mdp, write_mdp};
pub use mdp::{EnhancedFiniteMdp, FiniteMdp, QTable};
pub use operator::{apply_h, contraction_check, monotonicity_check, value_iteration, value_iteration_from};
pub use random::RandomFamily;

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::Error;

    fn single_state(r: f64, gamma: f64, n_a: usize, experts: usize, tau0: u32) -> EnhancedFiniteMdp {
        let base = FiniteMdp::new(1, n_a, gamma, vec![1.0; n_a], vec![r; n_a]).unwrap();
        EnhancedFiniteMdp::new(base, vec![vec![0]; experts], tau0).unwrap()
    }

    fn chain() -> EnhancedFiniteMdp {
        // 0 -> 1 -> 0 deterministically, reward 1 leaving state 0
        let base = FiniteMdp::new(2, 1, 0.5, vec![0.0, 1.0, 1.0, 0.0], vec![1.0, 0.0]).unwrap();
        EnhancedFiniteMdp::new(base, vec![vec![0, 0]], 2).unwrap()
    }

    #[test]
    fn h_on_single_state() {
        let m = single_state(1.0, 0.5, 2, 1, 3);
        let hq = apply_h(&QTable::for_mdp(&m), &m);
        assert!(hq.data().iter().all(|v| *v == 1.0));
    }

    #[test]
    fn h_on_chain_by_hand() {
        let m = chain();
        let q = QTable::from_vec(2, 3, vec![2.0, 3.0, 5.0, 6.0, 4.0, 0.0]).unwrap();
        let hq = apply_h(&q, &m);
        assert_eq!(hq.data(), &[4.0, 4.0, 3.0, 2.5, 2.5, 1.5]);
    }

    #[test]
    fn gamma_zero_gives_rewards() {
        let base = FiniteMdp::new(2, 2, 0.0, vec![0.5; 8], vec![1.0, -2.0, 0.25, 3.0]).unwrap();
        let m = EnhancedFiniteMdp::new(base, vec![vec![1, 0]], 3).unwrap();
        let q = value_iteration(&m, 1e-12).unwrap();
        for s in 0..2 {
            for (k, a) in m.space().iter().enumerate() {
                assert_eq!(q.get(s, k), m.base().reward(s, m.lower(s, a)));
            }
        }
    }

    #[test]
    fn geometric_series() {
        let m = single_state(1.0, 0.9, 1, 2, 4);
        let q = value_iteration(&m, 1e-12).unwrap();
        assert!(q.data().iter().all(|v| (v - 10.0).abs() < 1e-10));
    }

    #[test]
    fn fixed_point_is_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = RandomFamily::default().sample(&mut rng);
        let q = value_iteration(&m, 1e-11).unwrap();
        assert!(apply_h(&q, &m).sup_distance(&q) < 1e-10);
    }

    #[test]
    fn bad_tolerance_rejected() {
        let m = chain();
        assert!(matches!(value_iteration(&m, 0.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn constant_shift_contracts_by_gamma() {
        let base = FiniteMdp::new(
            3,
            2,
            0.7,
            vec![0., 1., 0., 0., 0., 1., 1., 0., 0., 0., 0., 1., 0., 1., 0., 1., 0., 0.],
            vec![0.3, -0.2, 1.0, 0.0, -1.0, 0.5],
        )
        .unwrap();
        let m = EnhancedFiniteMdp::new(base, vec![vec![1, 0, 1]], 1).unwrap();
        let qj = QTable::from_vec(3, 3, (0..9).map(|k| k as f64 * 0.37 - 1.0).collect()).unwrap();
        let qk = qj.map(|v| v + 2.5);
        let lhs = apply_h(&qj, &m).sup_distance(&apply_h(&qk, &m));
        assert!((lhs - 0.7 * 2.5).abs() < 1e-12);
        assert!(contraction_check(&m, &qj, &qk));
        assert!(contraction_check(&m, &qj, &qj));
    }

    #[test]
    fn optimal_expert_gives_equalities() {
        // one state, two actions; the expert always plays the better one
        let base = FiniteMdp::new(1, 2, 0.9, vec![1.0, 1.0], vec![0.2, 1.0]).unwrap();
        let m = EnhancedFiniteMdp::new(base, vec![vec![1]], 4).unwrap();
        let q = value_iteration(&m, 1e-12).unwrap();
        let best = q.row(0)[1];
        for k in m.space().macro_indices(1) {
            assert!((q.row(0)[k] - best).abs() < 1e-9);
        }
        assert!(monotonicity_check(&q, &m));
    }

    #[test]
    fn bonus_can_break_monotonicity() {
        let base = FiniteMdp::new(1, 2, 0.9, vec![1.0, 1.0], vec![0.2, 1.0]).unwrap();
        let m = EnhancedFiniteMdp::new(base, vec![vec![1]], 4).unwrap().with_bonus(0.5);
        let q = value_iteration(&m, 1e-12).unwrap();
        assert!(!monotonicity_check(&q, &m));
    }

    #[test]
    fn format_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let m = RandomFamily::default().sample(&mut rng);
            let back = parse_mdp(&write_mdp(&m)).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn format_errors_carry_lines() {
        let cases = [
            ("", 0),
            ("2 1 0.5 0\n", 1),
            ("2 1 0.5 0 1\n0.5 0.5\n1 x\n", 3),
            ("1 1 0.5 0 1\n1\n1\n7\n", 4),
            ("1 2 0.5 0 1\n1 0\n", 2),
        ];
        for (text, line) in cases {
            match parse_mdp(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        // semantic failures: a row that does not sum to one, a bad expert
        assert!(matches!(
            parse_mdp("1 1 0.5 0 1\n0.9\n0\n"),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            parse_mdp("1 1 0.5 1 1\n1\n0\n3\n"),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn format_allows_comments() {
        let text = "# tiny\n1 1 0.9 1 2  # header\n\n1\n1\n0\n";
        let m = parse_mdp(text).unwrap();
        assert_eq!(m.space().len(), 3);
    }
}
