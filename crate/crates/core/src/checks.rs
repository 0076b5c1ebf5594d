//! The built-in reference regression suite.
//!
//! Every check pins a closed-form result or an independent-oracle
//! equivalence at a fixed tolerance. The acceptance test target runs each
//! check as its own test; the CLI `paper-check` subcommand prints the same
//! table and exits nonzero when anything fails.

use crate::auction::{
    negative_result_scenario, sybil_split_scenario, threshold_payment, truthfulness_probe,
    AuctionInstance, FeasibleFamily, MechanismId,
};
use crate::cfmm::{
    arb, cyclic_arb, lp_game, token_split_attack, triangle_example, ArbInstance, Pool, PoolKind,
    TokenGraph,
};
use crate::game::{members, player_bit, Coalition, Game, UnanimityDecomposition};
use crate::ops::attack::{optimal_sybil_strategy, AttackFamily};
use crate::ops::psi::{psi, psi_bar, SearchConfig};
use crate::ops::values::{
    banzhaf, banzhaf_welfare_formula, pro_rata, shapley, shapley_permutation_oracle, theta,
};
use crate::ops::OperatorId;
use crate::prior::{grid_search_welfare, solve_prior_optimal, sweep_priors, PriorModel};
use crate::sample;
use rand::Rng;
use serde::Serialize;

/// Result of a single reference check.
#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        format!("[{status}] {:02} {} — {}", self.id, self.name, self.detail)
    }
}

fn outcome(id: usize, name: &'static str, ok_detail: String, failures: Vec<String>) -> CheckOutcome {
    if failures.is_empty() {
        CheckOutcome { id, name, passed: true, detail: ok_detail }
    } else {
        CheckOutcome { id, name, passed: false, detail: failures.join("; ") }
    }
}

/// Runs every reference check in order.
pub fn run_all() -> Vec<CheckOutcome> {
    vec![
        banzhaf_deficit_regression(),
        unanimity_split_attack(),
        banzhaf_sybil_sweep(),
        banzhaf_tight_unanimity_payments(),
        psi_bounds(),
        psi_bar_no_deficit_and_separability(),
        prior_lp_optimality(),
        pro_rata_equivalence(),
        token_split_payoffs(),
        auction_truthfulness(),
        counterexample_scenarios(),
        oracle_equivalences(),
    ]
}

/// 1. On the three-player deficit game, Banzhaf pays (1.5, 2.5, 1.5),
///    overshooting v(N) = 5 by exactly 0.5.
pub fn banzhaf_deficit_regression() -> CheckOutcome {
    let mut failures = Vec::new();
    let g = sample::deficit_example();
    let beta = banzhaf(&g).expect("3-player game under cap");
    for (i, want) in [(1usize, 1.5), (2, 2.5), (3, 1.5)] {
        if (beta.payment(i) - want).abs() > 1e-12 {
            failures.push(format!("beta_{i} = {} != {want}", beta.payment(i)));
        }
    }
    let welfare = beta.welfare();
    if (welfare - 5.5).abs() > 1e-12 {
        failures.push(format!("welfare {welfare} != 5.5"));
    }
    if welfare <= g.grand_value() {
        failures.push("no deficit observed".into());
    }
    let formula = banzhaf_welfare_formula(&g).expect("cap");
    if (formula - welfare).abs() > 1e-12 {
        failures.push(format!("welfare formula {formula} != {welfare}"));
    }
    outcome(
        1,
        "banzhaf deficit regression",
        "payments (1.5, 2.5, 1.5), welfare 5.5 > 5".into(),
        failures,
    )
}

/// 2. Splitting one member of the 3-player unanimity game hands the
///    attacker (k+1)/(k+3) of the unit under Shapley: strictly above 1/3,
///    strictly increasing through k = 6, divergence flagged.
pub fn unanimity_split_attack() -> CheckOutcome {
    let mut failures = Vec::new();
    let g = Game::unanimity(3, 0b111).expect("w_{1,2,3}");
    let report = optimal_sybil_strategy(
        &g,
        1,
        OperatorId::Shapley,
        AttackFamily::Split,
        6,
        &SearchConfig::default(),
    )
    .expect("within caps");
    for (k, &payoff) in report.payoffs.iter().enumerate() {
        // k new identities make k+1 in total on a (3+k)-member unanimity set.
        let expected = (k + 1) as f64 / (3 + k) as f64;
        if (payoff - expected).abs() > 1e-9 {
            failures.push(format!("payoff[{k}] = {payoff} != {expected}"));
        }
        if k >= 1 {
            if payoff <= 1.0 / 3.0 {
                failures.push(format!("payoff[{k}] = {payoff} not above 1/3"));
            }
            if payoff <= report.payoffs[k - 1] {
                failures.push(format!("payoff not strictly increasing at k = {k}"));
            }
        }
    }
    if !report.diverging {
        failures.push("divergence flag not set".into());
    }
    outcome(
        2,
        "unanimity identity-split attack on shapley",
        "attacker payoff (k+1)/(k+3) strictly increasing, divergence flagged".into(),
        failures,
    )
}

/// 3. 200 seeded random monotone games (n <= 5), all players, both
///    families, k <= 3: Banzhaf never rewards extra identities.
pub fn banzhaf_sybil_sweep() -> CheckOutcome {
    let mut failures = Vec::new();
    let games = sample::monotone_sample(&[2, 3, 4, 5], 50, 0xB27);
    let mut cases = 0usize;
    for g in &games {
        let beta = banzhaf(g).expect("cap");
        for i in 1..=g.n() {
            for family in [AttackFamily::Copy, AttackFamily::Split] {
                let report = optimal_sybil_strategy(
                    g,
                    i,
                    OperatorId::Banzhaf,
                    family,
                    3,
                    &SearchConfig::default(),
                )
                .expect("cap");
                for (k, &payoff) in report.payoffs.iter().enumerate() {
                    cases += 1;
                    if payoff > beta.payment(i) + 1e-9 {
                        failures.push(format!(
                            "game {g:?}: player {i}, {family:?}, k={k}: {payoff} > {}",
                            beta.payment(i)
                        ));
                    }
                }
            }
        }
    }
    outcome(
        3,
        "banzhaf sybil-proofness sweep",
        format!("{cases} attack payoffs on {} games, zero violations", games.len()),
        failures,
    )
}

/// 4. Banzhaf meets the symmetric Sybil-proof welfare bound with equality
///    on every unanimity game over six players: exactly 1/2^(|R|-1) inside R,
///    exactly 0 outside.
pub fn banzhaf_tight_unanimity_payments() -> CheckOutcome {
    let mut failures = Vec::new();
    let n = 6;
    for r in 1..(1u32 << n) as Coalition {
        let g = Game::unanimity(n, r).expect("basis");
        let beta = banzhaf(&g).expect("cap");
        let tight = 1.0 / 2f64.powi(r.count_ones() as i32 - 1);
        for i in 1..=n {
            let want = if r & player_bit(i) != 0 { tight } else { 0.0 };
            if beta.payment(i) != want {
                failures.push(format!("R={r:b}, i={i}: {} != {want}", beta.payment(i)));
            }
        }
    }
    outcome(
        4,
        "banzhaf tight unanimity payments",
        "bit-exact 1/2^(|R|-1) on all 63 unanimity games over 6 players".into(),
        failures,
    )
}

/// 5. psi equals c/2^(n-1) on scaled unanimity games and always sits
///    between shapley/2^(n-1) and v(N)/2^(n-1).
pub fn psi_bounds() -> CheckOutcome {
    let mut failures = Vec::new();
    let search = SearchConfig::with_k_max(3);

    for n in 1..=6usize {
        let denom = 2f64.powi(n as i32 - 1);
        for r in 1..(1u32 << n) as Coalition {
            let c = 2.5;
            let g = Game::unanimity(n, r).expect("basis").scale(c).expect("scale");
            let report = psi(&g, &search).expect("cap");
            for i in 1..=n {
                let want = if r & player_bit(i) != 0 { c / denom } else { 0.0 };
                if (report.payments.payment(i) - want).abs() > 1e-9 {
                    failures.push(format!(
                        "n={n}, R={r:b}, i={i}: psi {} != {want}",
                        report.payments.payment(i)
                    ));
                }
            }
        }
    }

    let games = sample::monotone_sample(&[2, 3, 4, 5], 25, 0x51B);
    for g in &games {
        let denom = 2f64.powi(g.n() as i32 - 1);
        let phi = shapley(g).expect("cap");
        let report = psi(g, &search).expect("cap");
        for i in 1..=g.n() {
            let value = report.payments.payment(i);
            if value > g.grand_value() / denom + 1e-9 {
                failures.push(format!("psi_{i} above v(N)/2^(n-1) on {g:?}"));
            }
            if value < phi.payment(i) / denom - 1e-9 {
                failures.push(format!("psi_{i} below shapley/2^(n-1) on {g:?}"));
            }
        }
    }
    outcome(
        5,
        "psi exact on scaled unanimity plus bounds",
        format!("120 scaled unanimity games exact; bounds on {} sampled games", games.len()),
        failures,
    )
}

/// 6. psi-bar never runs a deficit and stays 1/(1+n/2^(n-1))-separable on
///    the full sample.
pub fn psi_bar_no_deficit_and_separability() -> CheckOutcome {
    let mut failures = Vec::new();
    let search = SearchConfig::with_k_max(3);
    let mut games = sample::unanimity_basis(5);
    games.push(sample::deficit_example());
    games.extend(sample::monotone_sample(&[2, 3, 4, 5], 50, 0x9A7));
    for g in &games {
        let n = g.n();
        let report = psi_bar(g, &search).expect("cap");
        if report.welfare > g.grand_value() + 1e-9 {
            failures.push(format!("deficit {} > {} on {g:?}", report.welfare, g.grand_value()));
        }
        let t = theta(g).expect("cap");
        let divisor = 1.0 + n as f64 / 2f64.powi(n as i32 - 1);
        for i in 1..=n {
            if report.payments.payment(i) < t.payment(i) / divisor - 1e-9 {
                failures.push(format!("separability broken for player {i} on {g:?}"));
            }
        }
    }
    outcome(
        6,
        "psi-bar no-deficit and separability",
        format!("{} games, budget and separability floors hold", games.len()),
        failures,
    )
}

/// 7. The prior LP: point masses reach welfare 1; on the 66-point simplex
///    grid over support {3,4,5} the optimum dominates the prior-free policy
///    everywhere and strictly beats it at the uniform prior.
pub fn prior_lp_optimality() -> CheckOutcome {
    let mut failures = Vec::new();
    for n in 1..=10 {
        let policy = solve_prior_optimal(&PriorModel::point_mass(n).expect("valid"))
            .expect("solvable");
        if (policy.expected_welfare - 1.0).abs() > 1e-7 {
            failures.push(format!("point mass at {n}: welfare {}", policy.expected_welfare));
        }
    }

    let table = sweep_priors(&[3, 4, 5], 10, None).expect("solvable");
    if table.rows.len() != 66 {
        failures.push(format!("expected 66 grid priors, got {}", table.rows.len()));
    }
    for row in &table.rows {
        if row.optimal_welfare < row.prior_free_welfare - 1e-9 {
            failures.push(format!(
                "prior {:?}: optimal {} below prior-free {}",
                row.masses, row.optimal_welfare, row.prior_free_welfare
            ));
        }
    }

    let third = 1.0 / 3.0;
    let uniform = PriorModel::new(
        [(3, third), (4, third), (5, third)].into_iter().collect(),
        None,
    )
    .expect("valid");
    let policy = solve_prior_optimal(&uniform).expect("solvable");
    let margin = policy.expected_welfare - uniform.prior_free_welfare();
    if margin <= 1e-4 {
        failures.push(format!("uniform prior improves by only {margin}"));
    }
    outcome(
        7,
        "prior LP optimality",
        format!("point masses exact; grid dominated; uniform prior gains {margin:.4}"),
        failures,
    )
}

/// 8. On random constant-product pools the Shapley value of the induced
///    liquidity game is the pro-rata rebate.
pub fn pro_rata_equivalence() -> CheckOutcome {
    let mut failures = Vec::new();
    let mut rng = sample::rng(0xCF);
    for trial in 0..20 {
        let n = rng.random_range(2..=5);
        let reserves = (rng.random::<f64>() * 190.0 + 10.0, rng.random::<f64>() * 190.0 + 10.0);
        let prices = (rng.random::<f64>() * 3.5 + 0.5, rng.random::<f64>() * 3.5 + 0.5);
        let pool = Pool::constant_product("A", "B", reserves, 1).expect("valid");
        let shares = sample::random_shares(n, &mut rng);
        let game = lp_game(&shares, &pool, prices).expect("valid");
        let phi = shapley(&game).expect("cap");
        let pr = pro_rata(&shares, game.grand_value()).expect("simplex");
        for i in 1..=n {
            if (phi.payment(i) - pr.payment(i)).abs() > 1e-8 {
                failures.push(format!(
                    "trial {trial}: player {i}: shapley {} vs pro-rata {}",
                    phi.payment(i),
                    pr.payment(i)
                ));
            }
        }
    }
    outcome(
        8,
        "pro-rata equivalence on constant-product pools",
        "20 random pools and share vectors, max deviation within 1e-8".into(),
        failures,
    )
}

/// 9. The token-split attack on the triangle: Shapley moves from v/3 each
///    to v/4 for honest owners and v/2 for the attacker in the idealized
///    game; Banzhaf gains nothing.
pub fn token_split_payoffs() -> CheckOutcome {
    let mut failures = Vec::new();
    let graph = triangle_example();
    let search = SearchConfig::default();

    let gg = crate::cfmm::graph_game(&graph, 4).expect("valid");
    let v = gg.game.grand_value();
    let phi = shapley(&gg.game).expect("cap");
    for i in 1..=3 {
        if (phi.payment(i) - v / 3.0).abs() > 1e-12 {
            failures.push(format!("pre-split shapley_{i} = {} != v/3", phi.payment(i)));
        }
    }

    let attack = token_split_attack(&graph, 0, OperatorId::Shapley, 4, &search).expect("valid");
    if (attack.idealized.attacker_payoff - v / 2.0).abs() > 1e-12 {
        failures.push(format!(
            "idealized attacker payoff {} != v/2",
            attack.idealized.attacker_payoff
        ));
    }
    // Honest players drop to v/4 in the idealized 4-identity game.
    let ideal = crate::sybil::split_extension(&gg.game, 1, 1).expect("cap");
    let ideal_phi = shapley(ideal.extended()).expect("cap");
    for i in [2usize, 3] {
        if (ideal_phi.payment(i) - v / 4.0).abs() > 1e-12 {
            failures.push(format!("honest owner {i} gets {} != v/4", ideal_phi.payment(i)));
        }
    }

    let banz = token_split_attack(&graph, 0, OperatorId::Banzhaf, 4, &search).expect("valid");
    if banz.idealized.gain > 1e-12 {
        failures.push(format!("banzhaf idealized gain {}", banz.idealized.gain));
    }
    if banz.pool_level.gain > 1e-9 {
        failures.push(format!("banzhaf pool-level gain {}", banz.pool_level.gain));
    }
    outcome(
        9,
        "token-split attack payoffs",
        "shapley v/3 -> (v/4, v/4, attacker v/2); banzhaf unmoved".into(),
        failures,
    )
}

/// 10. 1000-trial random-deviation probes: both truthful mechanisms are
///     violation-free; the pay-your-bid control is caught.
pub fn auction_truthfulness() -> CheckOutcome {
    let mut failures = Vec::new();
    for mech in [MechanismId::Myerson, MechanismId::MevMax] {
        let report = truthfulness_probe(mech, 1000, 0xA0C).expect("valid");
        if report.violations != 0 {
            failures.push(format!("{}: {} violations", report.mechanism, report.violations));
        }
    }
    let control = truthfulness_probe(MechanismId::PayYourBid, 1000, 0xA0C).expect("valid");
    if control.violations == 0 {
        failures.push("pay-your-bid control produced no violations".into());
    }
    outcome(
        10,
        "auction truthfulness probes",
        format!(
            "myerson and mev-max clean over 1000 trials; control caught {} times",
            control.violations
        ),
        failures,
    )
}

/// 11. The two counterexample scenarios: splitting the winning bundle
///     collapses its payment from 1 to (0, 0), and the complementary pair
///     forces a deficit of exactly the pair's value.
pub fn counterexample_scenarios() -> CheckOutcome {
    let mut failures = Vec::new();
    let split = sybil_split_scenario(0.1, 42).expect("valid");
    if (split.pre_payment - 1.0).abs() > 1e-12 {
        failures.push(format!("pre-split payment {} != 1", split.pre_payment));
    }
    if split.post_payments != (0.0, 0.0) {
        failures.push(format!("post-split payments {:?} != (0, 0)", split.post_payments));
    }
    if split.post_utility <= split.pre_utility {
        failures.push("splitting did not raise the deviator's utility".into());
    }

    let negative = negative_result_scenario(1.0).expect("valid");
    if (negative.deficit_magnitude - 1.0).abs() > 1e-12 {
        failures.push(format!("deficit {} != 1", negative.deficit_magnitude));
    }
    if !negative.allocated.deficit {
        failures.push("deficit flag missing".into());
    }
    outcome(
        11,
        "counterexample scenarios",
        "payment collapse 1 -> (0,0); unit complementary pair deficit exactly 1".into(),
        failures,
    )
}

/// 12. Independent-oracle equivalences: permutation Shapley, bid-bisection
///     thresholds, grid-search arbitrage, grid-search prior LP, and the
///     unanimity-decomposition round trip.
pub fn oracle_equivalences() -> CheckOutcome {
    let mut failures = Vec::new();
    failures.extend(shapley_oracle_failures());
    failures.extend(threshold_bisection_failures());
    failures.extend(arb_grid_failures());
    failures.extend(prior_grid_failures());
    failures.extend(decomposition_roundtrip_failures());
    outcome(
        12,
        "oracle equivalences",
        "permutation shapley, bid bisection, arbitrage grids, LP grid, base round trip".into(),
        failures,
    )
}

fn shapley_oracle_failures() -> Vec<String> {
    let mut failures = Vec::new();
    let mut games = sample::unanimity_basis(5);
    games.push(sample::deficit_example());
    games.extend(sample::monotone_sample(&[4, 5, 6], 8, 0x0AC));
    games.extend(sample::monotone_sample(&[7], 3, 0x0AD));
    for g in &games {
        let fast = shapley(g).expect("cap");
        let slow = shapley_permutation_oracle(g).expect("within factorial cap");
        for i in 1..=g.n() {
            if (fast.payment(i) - slow.payment(i)).abs() > 1e-9 {
                failures.push(format!("shapley oracle mismatch on {g:?} player {i}"));
            }
        }
    }
    failures
}

fn threshold_bisection_failures() -> Vec<String> {
    let mut failures = Vec::new();
    let mut rng = sample::rng(0x7E5);
    let mut checked = 0usize;
    while checked < 100 {
        let n = rng.random_range(2..=6);
        let bids: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 5.0).collect();
        let mut pairs = Vec::new();
        for i in 1..=n {
            for j in (i + 1)..=n {
                if rng.random::<f64>() < 0.35 {
                    pairs.push((i, j));
                }
            }
        }
        let inst = AuctionInstance::new(
            bids,
            FeasibleFamily::from_conflicts(n, pairs).expect("valid"),
            sample::random_monotone_game(n, &mut rng),
            rng.random(),
        )
        .expect("valid");
        let mech = if rng.random::<bool>() { MechanismId::Myerson } else { MechanismId::MevMax };
        let out = crate::auction::allocate(&inst, mech).expect("valid");
        let Some(winner) = members(out.allocation).next() else {
            continue;
        };
        checked += 1;

        let direct = threshold_payment(&inst, mech, winner).expect("winner");
        let bisected = bisect_threshold(&inst, mech, winner);
        if (direct - bisected).abs() > 1e-9 {
            failures.push(format!(
                "threshold mismatch: direct {direct}, bisection {bisected}"
            ));
        }
    }
    failures
}

/// Re-runs the allocation while bisecting on the winner's bid; the
/// crossover is the threshold payment.
fn bisect_threshold(inst: &AuctionInstance, mech: MechanismId, winner: usize) -> f64 {
    let wins = |bid: f64| -> bool {
        let mut probe = inst.clone();
        probe.bids[winner - 1] = bid;
        let out = crate::auction::allocate(&probe, mech).expect("valid");
        out.allocation & player_bit(winner) != 0
    };
    if wins(0.0) {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = inst.bids[winner - 1];
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if wins(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn arb_grid_failures() -> Vec<String> {
    let mut failures = Vec::new();
    let mut rng = sample::rng(0xA4B);

    for trial in 0..25 {
        let kind = if trial % 2 == 0 {
            PoolKind::ConstantProduct
        } else {
            PoolKind::WeightedGeometric(rng.random::<f64>() * 0.8 + 0.1)
        };
        let reserves = (rng.random::<f64>() * 150.0 + 20.0, rng.random::<f64>() * 150.0 + 20.0);
        let pool = Pool::new(("A".into(), "B".into()), reserves, kind, 1).expect("valid");
        let prices = (rng.random::<f64>() * 2.5 + 0.5, rng.random::<f64>() * 2.5 + 0.5);
        let inst = ArbInstance::new(pool, prices).expect("valid");
        let got = arb(&inst).profit;
        let grid = grid_arb_profit(&inst);
        let scale = grid.abs().max(1.0);
        if (got - grid).abs() > 1e-6 * scale {
            failures.push(format!("arb trial {trial}: {got} vs grid {grid}"));
        }
    }

    for trial in 0..25 {
        let graph = random_two_gap_graph(&mut rng);
        let got = cyclic_arb(&graph, 4).expect("valid").profit;
        let grid = grid_cycle_profit(&graph);
        let scale = grid.abs().max(1.0);
        if (got - grid).abs() > 1e-6 * scale {
            failures.push(format!("cycle trial {trial}: {got} vs grid {grid}"));
        }
    }
    failures
}

/// Coarse-then-fine grid over post-trade reserves of asset 0.
fn grid_arb_profit(inst: &ArbInstance) -> f64 {
    let (x, y) = inst.pool.reserves;
    let (p0, p1) = inst.prices;
    let y_of = |x_new: f64| -> f64 {
        match inst.pool.kind {
            PoolKind::ConstantProduct => x * y / x_new,
            PoolKind::WeightedGeometric(w) => y * (x / x_new).powf(w / (1.0 - w)),
        }
    };
    let profit = |x_new: f64| p0 * (x - x_new) + p1 * (y - y_of(x_new));

    let coarse = 200_000usize;
    let (mut lo, mut hi) = (x * 1e-4_f64.ln().exp(), x * 1e4);
    let mut best_t = lo;
    let mut best = f64::NEG_INFINITY;
    for pass in 0..2 {
        let (log_lo, log_hi) = (lo.ln(), hi.ln());
        for i in 0..=coarse {
            let t = (log_lo + (log_hi - log_lo) * i as f64 / coarse as f64).exp();
            let p = profit(t);
            if p > best {
                best = p;
                best_t = t;
            }
        }
        if pass == 0 {
            let step = (log_hi - log_lo) / coarse as f64;
            lo = (best_t.ln() - 2.0 * step).exp();
            hi = (best_t.ln() + 2.0 * step).exp();
        }
    }
    best.max(0.0)
}

fn random_two_gap_graph(rng: &mut rand_chacha::ChaCha8Rng) -> TokenGraph {
    let base = rng.random::<f64>() * 90.0 + 10.0;
    let skew = 1.0 + rng.random::<f64>();
    TokenGraph::new(
        "A".into(),
        vec![
            Pool::constant_product("A", "B", (base, base), 1).expect("valid"),
            Pool::constant_product("A", "B", (base, base * skew), 2).expect("valid"),
        ],
    )
    .expect("valid")
}

/// Grid search over the numéraire input of the only profitable route
/// (buy B from the skewed pool, sell it into the balanced one).
fn grid_cycle_profit(graph: &TokenGraph) -> f64 {
    let round_trip = |a: f64| {
        let b = graph.pools[1].swap_out(0, a);
        graph.pools[0].swap_out(1, b) - a
    };
    let reserve = graph.pools[0].reserves.0;
    let coarse = 200_000usize;
    let mut best = 0.0f64;
    let mut best_a = 0.0;
    let mut lo = 0.0;
    let mut hi = 4.0 * reserve;
    for pass in 0..2 {
        for i in 0..=coarse {
            let a = lo + (hi - lo) * i as f64 / coarse as f64;
            let p = round_trip(a);
            if p > best {
                best = p;
                best_a = a;
            }
        }
        if pass == 0 {
            let step = (hi - lo) / coarse as f64;
            lo = (best_a - 2.0 * step).max(0.0);
            hi = best_a + 2.0 * step;
        }
    }
    best
}

fn prior_grid_failures() -> Vec<String> {
    let mut failures = Vec::new();
    for masses in [
        vec![(3usize, 0.5), (4, 0.5)],
        vec![(2, 0.3), (3, 0.7)],
        vec![(3, 0.25), (4, 0.45), (5, 0.3)],
    ] {
        let prior = PriorModel::new(masses.into_iter().collect(), None).expect("valid");
        let lp = solve_prior_optimal(&prior).expect("solvable").expected_welfare;
        let grid = grid_search_welfare(&prior, 100);
        if grid > lp + 1e-9 {
            failures.push(format!("grid {grid} beat the LP {lp}"));
        }
        if lp - grid > 0.02 {
            failures.push(format!("LP {lp} further than grid resolution from {grid}"));
        }
    }
    failures
}

fn decomposition_roundtrip_failures() -> Vec<String> {
    let mut failures = Vec::new();
    let games = sample::monotone_sample(&[2, 3, 4, 5, 6], 20, 0xDEC);
    for g in &games {
        let back = UnanimityDecomposition::of(g).reconstruct().expect("valid");
        for mask in 0..g.values().len() {
            if (back.values()[mask] - g.values()[mask]).abs() > 1e-9 {
                failures.push(format!("round trip broke {g:?} at mask {mask}"));
                break;
            }
        }
    }
    failures
}
