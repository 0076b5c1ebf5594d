//! Cross-module invariants of the auction mechanisms and the rebate LP.

use mevr_core::auction::{
    allocate, tau_mechanism, AuctionInstance, FeasibleFamily, MechanismId,
};
use mevr_core::game::{members, player_bit, Game};
use mevr_core::ops::psi::SearchConfig;
use mevr_core::ops::OperatorId;
use mevr_core::prior::{prior_free_bound, solve_prior_optimal, PriorModel};
use mevr_core::sample;
use rand::Rng;

fn random_instance(rng: &mut rand_chacha::ChaCha8Rng, n_max: usize) -> AuctionInstance {
    let n = rng.random_range(2..=n_max);
    let bids: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 5.0).collect();
    let mut pairs = Vec::new();
    for i in 1..=n {
        for j in (i + 1)..=n {
            if rng.random::<f64>() < 0.3 {
                pairs.push((i, j));
            }
        }
    }
    AuctionInstance::new(
        bids,
        FeasibleFamily::from_conflicts(n, pairs).unwrap(),
        sample::random_monotone_game(n, rng),
        rng.random(),
    )
    .unwrap()
}

#[test]
fn winners_are_individually_rational_under_truthful_bids() {
    let mut rng = sample::rng(51);
    for _ in 0..150 {
        let inst = random_instance(&mut rng, 6);
        for mech in [MechanismId::Myerson, MechanismId::MevMax] {
            let out = allocate(&inst, mech).unwrap();
            for i in members(out.allocation) {
                let utility = inst.bids[i - 1] - out.payments[i - 1];
                assert!(utility >= -1e-9, "winner {i} under {mech:?}");
            }
        }
    }
}

#[test]
fn mev_max_attains_the_oracle_welfare_optimum() {
    let mut rng = sample::rng(52);
    for _ in 0..100 {
        let inst = random_instance(&mut rng, 6);
        let out = allocate(&inst, MechanismId::MevMax).unwrap();
        let achieved: f64 = members(out.allocation).map(|i| inst.bids[i - 1]).sum::<f64>()
            + inst.oracle.value(out.allocation);
        let best = inst
            .family
            .iter_feasible()
            .map(|s| {
                members(s).map(|i| inst.bids[i - 1]).sum::<f64>() + inst.oracle.value(s)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((achieved - best).abs() < 1e-9);
    }
}

#[test]
fn allocation_is_monotone_in_each_winning_bid() {
    let mut rng = sample::rng(53);
    for _ in 0..80 {
        let inst = random_instance(&mut rng, 5);
        for mech in [MechanismId::Myerson, MechanismId::MevMax] {
            let out = allocate(&inst, mech).unwrap();
            for i in members(out.allocation) {
                for raise in [1e-6, 0.25, 2.0, 20.0] {
                    let mut probe = inst.clone();
                    probe.bids[i - 1] += raise;
                    let out2 = allocate(&probe, mech).unwrap();
                    assert!(out2.allocation & player_bit(i) != 0);
                }
            }
        }
    }
}

#[test]
fn tau_mechanism_never_deficits_on_the_standard_sample() {
    let games = sample::monotone_sample(&[2, 3, 4, 5], 50, 0x7A0);
    let search = SearchConfig::with_k_max(2);
    for g in &games {
        let inst = AuctionInstance::new(
            vec![0.0; g.n()],
            FeasibleFamily::full(g.n()),
            g.clone(),
            0,
        )
        .unwrap();
        for op in [OperatorId::Theta, OperatorId::PsiBar] {
            let out = tau_mechanism(&inst, op, &search).unwrap();
            let rebate_total: f64 = out.payments.iter().map(|p| -p).sum();
            assert!(
                rebate_total <= g.grand_value() + 1e-9,
                "{op:?} paid {rebate_total} of {}",
                g.grand_value()
            );
            assert!(!out.deficit);
        }
    }
}

#[test]
fn user_welfare_is_not_comparable_between_the_mechanisms() {
    // MEV-heavy low bidder: the oracle-aware mechanism wins on welfare.
    let oracle = Game::new(2, vec![0.0, 3.0, 0.0, 3.0], true).unwrap();
    let inst = AuctionInstance::new(
        vec![3.0, 4.0],
        FeasibleFamily::from_conflicts(2, vec![(1, 2)]).unwrap(),
        oracle,
        0,
    )
    .unwrap();
    let myerson = allocate(&inst, MechanismId::Myerson).unwrap();
    let mev = allocate(&inst, MechanismId::MevMax).unwrap();
    assert!(mev.welfare > myerson.welfare);

    // High bidder with no MEV: the plain welfare mechanism wins.
    let oracle = Game::new(2, vec![0.0, 0.0, 10.0, 10.0], true).unwrap();
    let inst = AuctionInstance::new(
        vec![3.0, 1.0],
        FeasibleFamily::from_conflicts(2, vec![(1, 2)]).unwrap(),
        oracle,
        0,
    )
    .unwrap();
    let myerson = allocate(&inst, MechanismId::Myerson).unwrap();
    let mev = allocate(&inst, MechanismId::MevMax).unwrap();
    assert!(myerson.welfare > mev.welfare);
}

#[test]
fn zero_policy_is_always_feasible_for_the_rebate_lp() {
    for masses in [
        vec![(1usize, 1.0)],
        vec![(3, 0.2), (4, 0.5), (5, 0.3)],
        vec![(2, 0.5), (7, 0.5)],
    ] {
        let prior = PriorModel::new(masses.into_iter().collect(), None).unwrap();
        let zero = vec![0.0; prior.n_max()];
        for y in 2..=prior.y_max() {
            assert!(prior.constraint_value(&zero, y).abs() < 1e-15);
        }
        // And the LP therefore always solves.
        let policy = solve_prior_optimal(&prior).unwrap();
        assert!(policy.expected_welfare >= 0.0);
    }
}

#[test]
fn lp_shares_respect_truncated_sybil_constraints() {
    let prior = PriorModel::new(
        [(3usize, 0.25), (4, 0.45), (5, 0.3)].into_iter().collect(),
        Some(12),
    )
    .unwrap();
    let policy = solve_prior_optimal(&prior).unwrap();
    for w in &policy.welfare_shares {
        assert!((0.0..=1.0).contains(w));
    }
    for y in 2..=prior.y_max() {
        assert!(
            prior.constraint_value(&policy.welfare_shares, y) >= -1e-8,
            "deviation y = {y} profitable"
        );
    }
    assert!(policy.expected_welfare >= prior.prior_free_welfare() - 1e-9);
    assert!(policy.expected_welfare <= 1.0 + 1e-9);
    // Per-identity payments are the shares divided by the count.
    for (idx, x) in policy.per_identity.iter().enumerate() {
        assert!((x - policy.welfare_shares[idx] / (idx + 1) as f64).abs() < 1e-15);
    }
}

#[test]
fn prior_free_bound_matches_the_lp_on_degenerate_support() {
    // With all mass on one count and deviations reaching into the support,
    // the point-mass optimum is exactly 1, strictly above n/2^(n-1).
    for n in 3..=6 {
        let policy =
            solve_prior_optimal(&PriorModel::point_mass(n).unwrap()).unwrap();
        assert!(policy.expected_welfare > prior_free_bound(n));
    }
}
