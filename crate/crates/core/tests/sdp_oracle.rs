mod common;

use common::RandomSdp;
use dirate::relax::Sense;
use dirate::sdp::{solve, SolveStatus};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn random_instances_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..100 {
        let case = RandomSdp::generate(&mut rng);
        let want = case.brute_force();
        let sol = solve(&case.instance, 1e-8);
        assert_eq!(sol.status, SolveStatus::Optimal, "instance {k}");
        assert!(
            (sol.primal - want).abs() < 1e-5,
            "instance {k}: {} vs {want}",
            sol.primal
        );
        // The dual objective never passes the true optimum.
        let slack = match case.instance.sense {
            Sense::Minimize => sol.dual - want,
            Sense::Maximize => want - sol.dual,
        };
        assert!(
            slack <= 1e-8,
            "instance {k}: dual {} optimum {want}",
            sol.dual
        );
    }
}

#[test]
fn dumped_instances_solve_identically() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let case = RandomSdp::generate(&mut rng);
        let back = dirate::relax::SdpInstance::parse(&case.instance.dump()).unwrap();
        let (a, b) = (solve(&case.instance, 1e-8), solve(&back, 1e-8));
        assert_eq!(a.status, b.status);
        assert!((a.primal - b.primal).abs() < 1e-12);
    }
}
