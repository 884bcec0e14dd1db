use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use abr_bandit::bandit::{
    format_priors, parse_priors, warm_start, Arm, ArmStats, BanditState, SelectionKind, ShockState,
    Xorshift32,
};
use abr_bandit::reward::RewardValue;

#[test]
fn xorshift_vectors_match_recurrence() {
    fn reference(mut x: u32) -> u32 {
        x ^= x << 13;
        x ^= x >> 17;
        x ^= x << 5;
        x
    }
    assert_eq!(Xorshift32::new(1).unwrap().next_u32(), 270_369);
    assert_eq!(Xorshift32::new(2_463_534_242).unwrap().next_u32(), 723_471_715);
    let mut g = Xorshift32::new(99).unwrap();
    let mut x = 99;
    for _ in 0..1000 {
        x = reference(x);
        assert_eq!(g.next_u32(), x);
    }
    assert!(Xorshift32::new(0).is_err());
}

#[test]
fn full_exploration_is_uniform() {
    let mut b = BanditState::new(1000, 12_345, ShockState::default()).unwrap();
    let mut counts = [0u32; 3];
    for _ in 0..30_000 {
        let s = b.select_arm();
        assert_eq!(s.kind, SelectionKind::Explore);
        counts[s.arm.index()] += 1;
    }
    for c in counts {
        assert!((c as f64 / 30_000.0 - 1.0 / 3.0).abs() <= 0.02, "{counts:?}");
    }
}

#[test]
fn regret_sanity() {
    let means = [900u32, 500, 100];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut b = BanditState::new(50, 2024, ShockState::default()).unwrap();
    let mut greedy_arm_pulls = 0u32;
    for _ in 0..10_000 {
        let s = b.select_arm();
        if s.arm == Arm::Throughput {
            greedy_arm_pulls += 1;
        }
        // Bernoulli reward scaled to 0 or 1000
        let hit = rng.gen_range(0..1000) < means[s.arm.index()];
        b.record_reward(s.arm, RewardValue::new(if hit { 1000 } else { 0 }).unwrap());
    }
    assert!(greedy_arm_pulls as f64 / 10_000.0 > 0.9, "{greedy_arm_pulls}");
}

#[test]
fn shock_examples() {
    let mut s = ShockState::new(2500, 5);
    assert!(![1000, 1000, 2600].iter().any(|&bw| s.detect(bw)));
    assert!(s.detect(2600));

    let mut s = ShockState::new(2500, 5);
    assert!(![1000, 1000, 2000, 2000].iter().any(|&bw| s.detect(bw)));

    let mut s = ShockState::new(2500, 5);
    assert!(!(0..100).any(|_| s.detect(3000)));
}

/// Every way a shock can land among arbitrary arm means, epsilon and seed:
/// the next `cooldown` selections are all the throughput arm.
#[test]
fn shock_overrides_everything() {
    let stats = [ArmStats::new(10, 0), ArmStats::new(10, 10_000), ArmStats::new(0, 0)];
    for eps in [0, 100, 500, 1000] {
        for seed in 1..=8 {
            for cooldown in 1..=6u32 {
                for prefix in 0..4 {
                    for perm in 0..3usize {
                        let mut b = BanditState::new(eps, seed, ShockState::new(2500, cooldown)).unwrap();
                        for (i, arm) in b.arms.iter_mut().enumerate() {
                            *arm = stats[(i + perm) % 3];
                        }
                        for _ in 0..prefix {
                            b.select_arm();
                        }
                        let fired = [100, 100, 1000, 1000].iter().map(|&bw| b.observe_chunk_throughput(bw)).last();
                        assert_eq!(fired, Some(true));
                        for _ in 0..cooldown {
                            let s = b.select_arm();
                            assert_eq!((s.arm, s.kind), (Arm::Throughput, SelectionKind::Shock));
                        }
                        assert_ne!(b.select_arm().kind, SelectionKind::Shock);
                    }
                }
            }
        }
    }
}

#[test]
fn cooldown_decrements() {
    let mut b = BanditState::new(1000, 5, ShockState::new(2500, 5)).unwrap();
    b.shock.cooldown_remaining = 3;
    let s = b.select_arm();
    assert_eq!(s.arm, Arm::Throughput);
    assert_eq!(b.shock.cooldown_remaining, 2);
}

#[test]
fn warm_start_examples() {
    let calib = [ArmStats::new(3, 1800), ArmStats::new(4, 3000), ArmStats::new(2, 1000)];
    let fresh = || BanditState::new(0, 1, ShockState::default()).unwrap();
    let w = warm_start(&calib, 100, fresh()).unwrap();
    assert_eq!(
        w.arms,
        [ArmStats::new(100, 60_000), ArmStats::new(100, 75_000), ArmStats::new(100, 50_000)]
    );
    assert_eq!(w.greedy_arm(), Arm::Bola);
    let w = warm_start(&calib, 1, fresh()).unwrap();
    assert_eq!(w.arms, [ArmStats::new(1, 600), ArmStats::new(1, 750), ArmStats::new(1, 500)]);
    // half-up rounding of the calibration mean
    let w = warm_start(&[ArmStats::new(2, 1001); 3], 10, fresh()).unwrap();
    assert_eq!(w.arms[0], ArmStats::new(10, 5010));

    let missing = [ArmStats::new(3, 1800), ArmStats::default(), ArmStats::new(2, 1000)];
    assert!(warm_start(&missing, 100, fresh()).is_err());
    assert!(warm_start(&calib, 0, fresh()).is_err());
}

#[test]
fn prior_file_round_trip() {
    let arms = [ArmStats::new(28_459, 21_505_769), ArmStats::new(7, 0), ArmStats::new(1, 1000)];
    assert_eq!(parse_priors(&format_priors(&arms)).unwrap(), arms);
    assert!(parse_priors("0 1 2000\n1 1 1\n2 1 1\n").is_err());
    assert!(parse_priors("0 1 1\n1 1 1\n").is_err());
    assert!(parse_priors("0 1\n").is_err());
}
