//! Constant-function market makers and the cooperative games they induce:
//! reference-price arbitrage over a single pool, cyclic arbitrage over a
//! token graph, and the token-split attack on graph rebates.
//!
//! There are no swap fees and no gas costs anywhere in this module; both
//! pool kinds have 1-homogeneous trading functions, which is what makes the
//! single-pool liquidity game additive.

use crate::game::{Coalition, Game, GameError, ENUM_PLAYER_CAP};
use crate::ops::psi::SearchConfig;
use crate::ops::OperatorId;
use crate::sybil::split_extension;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type AssetId = String;

/// Pools per token graph (cycle enumeration uses a 32-bit edge mask).
pub const MAX_POOLS: usize = 32;

/// Hard cap on cycle length; the interesting examples need 3 or 4.
pub const MAX_CYCLE_LEN: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CfmmError {
    #[error("reserves must be positive and finite, got {0}")]
    BadReserve(f64),
    #[error("geometric weight must lie strictly between 0 and 1, got {0}")]
    BadWeight(f64),
    #[error("prices must be positive and finite, got {0}")]
    BadPrice(f64),
    #[error("pool owner must be a positive index")]
    BadOwner,
    #[error("token graph supports at most {MAX_POOLS} pools, got {0}")]
    TooManyPools(usize),
    #[error("cycle length cap is {MAX_CYCLE_LEN}, got {0}")]
    CycleCapExceeded(usize),
    #[error("pool index {0} out of range ({1} pools)")]
    NoSuchPool(usize, usize),
    #[error("a pool pairs an asset with itself: {0}")]
    SelfPair(AssetId),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Trading-function families. Both are 1-homogeneous in the reserves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KindWire", into = "KindWire")]
pub enum PoolKind {
    /// `x * y = k`.
    ConstantProduct,
    /// `x^w * y^(1-w) = k` with the weight attached to the first asset.
    WeightedGeometric(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum KindWire {
    Named(String),
    Weighted { wg: f64 },
}

impl TryFrom<KindWire> for PoolKind {
    type Error = String;
    fn try_from(w: KindWire) -> Result<Self, String> {
        match w {
            KindWire::Named(s) if s == "cp" => Ok(PoolKind::ConstantProduct),
            KindWire::Named(s) => Err(format!("unknown pool kind {s:?}")),
            KindWire::Weighted { wg } => {
                if wg > 0.0 && wg < 1.0 {
                    Ok(PoolKind::WeightedGeometric(wg))
                } else {
                    Err(format!("weight {wg} outside (0,1)"))
                }
            }
        }
    }
}

impl From<PoolKind> for KindWire {
    fn from(k: PoolKind) -> KindWire {
        match k {
            PoolKind::ConstantProduct => KindWire::Named("cp".into()),
            PoolKind::WeightedGeometric(w) => KindWire::Weighted { wg: w },
        }
    }
}

/// A two-asset pool with an owner (the liquidity-providing identity).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoolWire", into = "PoolWire")]
pub struct Pool {
    pub pair: (AssetId, AssetId),
    pub reserves: (f64, f64),
    pub kind: PoolKind,
    pub owner: usize,
}

#[derive(Serialize, Deserialize)]
struct PoolWire {
    pair: (AssetId, AssetId),
    reserves: (f64, f64),
    kind: PoolKind,
    owner: usize,
}

impl TryFrom<PoolWire> for Pool {
    type Error = String;
    fn try_from(w: PoolWire) -> Result<Self, String> {
        Pool::new(w.pair, w.reserves, w.kind, w.owner).map_err(|e| e.to_string())
    }
}

impl From<Pool> for PoolWire {
    fn from(p: Pool) -> PoolWire {
        PoolWire { pair: p.pair, reserves: p.reserves, kind: p.kind, owner: p.owner }
    }
}

impl Pool {
    pub fn new(
        pair: (AssetId, AssetId),
        reserves: (f64, f64),
        kind: PoolKind,
        owner: usize,
    ) -> Result<Self, CfmmError> {
        for r in [reserves.0, reserves.1] {
            if !r.is_finite() || r <= 0.0 {
                return Err(CfmmError::BadReserve(r));
            }
        }
        if let PoolKind::WeightedGeometric(w) = kind {
            if !(w > 0.0 && w < 1.0) {
                return Err(CfmmError::BadWeight(w));
            }
        }
        if owner == 0 {
            return Err(CfmmError::BadOwner);
        }
        if pair.0 == pair.1 {
            return Err(CfmmError::SelfPair(pair.0));
        }
        Ok(Pool { pair, reserves, kind, owner })
    }

    pub fn constant_product(
        a: &str,
        b: &str,
        reserves: (f64, f64),
        owner: usize,
    ) -> Result<Self, CfmmError> {
        Pool::new((a.into(), b.into()), reserves, PoolKind::ConstantProduct, owner)
    }

    pub fn scaled(&self, factor: f64) -> Pool {
        Pool {
            reserves: (self.reserves.0 * factor, self.reserves.1 * factor),
            ..self.clone()
        }
    }

    /// Output received when selling `amount` of the asset on `side`
    /// (0 or 1) into the pool.
    pub fn swap_out(&self, side: usize, amount: f64) -> f64 {
        debug_assert!(side < 2);
        if amount <= 0.0 {
            return 0.0;
        }
        let (r_in, r_out) = if side == 0 {
            (self.reserves.0, self.reserves.1)
        } else {
            (self.reserves.1, self.reserves.0)
        };
        match self.kind {
            PoolKind::ConstantProduct => r_out * amount / (r_in + amount),
            PoolKind::WeightedGeometric(w) => {
                // Exponent turning the in-side reserve ratio into the
                // out-side one along the invariant surface.
                let (w_in, w_out) = if side == 0 { (w, 1.0 - w) } else { (1.0 - w, w) };
                let ratio = (r_in / (r_in + amount)).powf(w_in / w_out);
                r_out * (1.0 - ratio)
            }
        }
    }

    /// Marginal price of asset 0 quoted in asset 1 at the current reserves.
    pub fn spot_price(&self) -> f64 {
        match self.kind {
            PoolKind::ConstantProduct => self.reserves.1 / self.reserves.0,
            PoolKind::WeightedGeometric(w) => {
                (w / (1.0 - w)) * (self.reserves.1 / self.reserves.0)
            }
        }
    }
}

/// A pool to be arbitraged against external reference prices (numéraire
/// units per unit of each asset).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArbInstance {
    pub pool: Pool,
    pub prices: (f64, f64),
}

impl ArbInstance {
    pub fn new(pool: Pool, prices: (f64, f64)) -> Result<Self, CfmmError> {
        for p in [prices.0, prices.1] {
            if !p.is_finite() || p <= 0.0 {
                return Err(CfmmError::BadPrice(p));
            }
        }
        Ok(ArbInstance { pool, prices })
    }
}

/// Result of the single-pool arbitrage: the profit in numéraire units and
/// the net amounts of each asset the arbitrageur walks away with.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ArbOutcome {
    pub profit: f64,
    pub net: (f64, f64),
}

/// Optimal arbitrage against the reference price: extract the bundle that
/// maximizes `p · Δ` while keeping the trading function at or above its
/// current level. Constant-product pools are solved in closed form
/// (post-trade reserves equalize the marginal price with the reference);
/// weighted-geometric pools by golden-section search.
pub fn arb(inst: &ArbInstance) -> ArbOutcome {
    let (x, y) = inst.pool.reserves;
    let (p0, p1) = inst.prices;
    if x <= 0.0 || y <= 0.0 {
        return ArbOutcome { profit: 0.0, net: (0.0, 0.0) };
    }
    let (x_new, y_new) = match inst.pool.kind {
        PoolKind::ConstantProduct => {
            let k = x * y;
            let x_new = (k * p1 / p0).sqrt();
            (x_new, k / x_new)
        }
        PoolKind::WeightedGeometric(w) => {
            // Minimize p0*x' + p1*y'(x') over log-reserve space; the pool
            // value is convex along the invariant, so the slice is
            // unimodal.
            let gamma = w / (1.0 - w);
            let value = |t: f64| {
                let x_new = x * t.exp();
                let y_new = y * (x / x_new).powf(gamma);
                p0 * x_new + p1 * y_new
            };
            let t = golden_min(-45.0, 45.0, 200, value);
            let x_new = x * t.exp();
            (x_new, y * (x / x_new).powf(gamma))
        }
    };
    let profit = p0 * (x - x_new) + p1 * (y - y_new);
    if profit <= 0.0 {
        ArbOutcome { profit: 0.0, net: (0.0, 0.0) }
    } else {
        ArbOutcome { profit, net: (x - x_new, y - y_new) }
    }
}

fn golden_min(mut lo: f64, mut hi: f64, iters: usize, f: impl Fn(f64) -> f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 > f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

fn golden_max(lo: f64, hi: f64, iters: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let t = golden_min(lo, hi, iters, |x| -f(x));
    (t, f(t))
}

/// The liquidity-provision game of a single pool: coalition `S` owns the
/// pool scaled by its combined share mass and earns the corresponding
/// arbitrage profit. Additive whenever the trading function is
/// 1-homogeneous.
pub fn lp_game(shares: &[f64], pool: &Pool, prices: (f64, f64)) -> Result<Game, CfmmError> {
    for &s in shares {
        if s.is_nan() || s < 0.0 {
            return Err(CfmmError::Game(GameError::NegativeShare(s)));
        }
    }
    let total: f64 = shares.iter().sum();
    if (total - 1.0).abs() > crate::game::ABS_TOL {
        return Err(CfmmError::Game(GameError::OffSimplex(total)));
    }
    let n = shares.len();
    if n == 0 || n > ENUM_PLAYER_CAP {
        return Err(CfmmError::Game(GameError::EnumCapExceeded { n, cap: ENUM_PLAYER_CAP }));
    }

    let mut values = vec![0.0; 1 << n];
    for (mask, value) in values.iter_mut().enumerate() {
        let mass: f64 = crate::game::members(mask as Coalition)
            .map(|i| shares[i - 1])
            .sum();
        if mass > 0.0 {
            let inst = ArbInstance::new(pool.scaled(mass), prices)?;
            *value = arb(&inst).profit;
        }
    }
    monotone_closure(&mut values, n);
    Ok(Game::new(n, values, true)?)
}

/// Snaps away sub-ulp monotonicity wobble from independently optimized
/// coalition values.
fn monotone_closure(values: &mut [f64], n: usize) {
    for mask in 0..values.len() {
        for b in 0..n {
            let bit = 1usize << b;
            if mask & bit != 0 && values[mask] < values[mask ^ bit] {
                values[mask] = values[mask ^ bit];
            }
        }
    }
}

/// A multigraph of pools over named assets with a designated numéraire.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphWire", into = "GraphWire")]
pub struct TokenGraph {
    pub numeraire: AssetId,
    pub pools: Vec<Pool>,
}

#[derive(Serialize, Deserialize)]
struct GraphWire {
    numeraire: AssetId,
    pools: Vec<Pool>,
}

impl TryFrom<GraphWire> for TokenGraph {
    type Error = String;
    fn try_from(w: GraphWire) -> Result<Self, String> {
        TokenGraph::new(w.numeraire, w.pools).map_err(|e| e.to_string())
    }
}

impl From<TokenGraph> for GraphWire {
    fn from(g: TokenGraph) -> GraphWire {
        GraphWire { numeraire: g.numeraire, pools: g.pools }
    }
}

impl TokenGraph {
    pub fn new(numeraire: AssetId, pools: Vec<Pool>) -> Result<Self, CfmmError> {
        if pools.len() > MAX_POOLS {
            return Err(CfmmError::TooManyPools(pools.len()));
        }
        Ok(TokenGraph { numeraire, pools })
    }

    /// Distinct owners in ascending order; these become the players of the
    /// graph game.
    pub fn owners(&self) -> Vec<usize> {
        let mut owners: Vec<usize> = self.pools.iter().map(|p| p.owner).collect();
        owners.sort_unstable();
        owners.dedup();
        owners
    }
}

/// One directed hop of an arbitrage cycle.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleHop {
    pub pool_index: usize,
    pub sell: AssetId,
    pub buy: AssetId,
}

/// Best cyclic arbitrage found: optimal numéraire input, resulting profit,
/// and the cycle taken (empty when nothing is profitable).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CyclicArbOutcome {
    pub profit: f64,
    pub input: f64,
    pub cycle: Vec<CycleHop>,
}

impl CyclicArbOutcome {
    fn none() -> Self {
        CyclicArbOutcome { profit: 0.0, input: 0.0, cycle: Vec::new() }
    }
}

/// Best profit over all simple cycles through the numéraire of length at
/// most `max_cycle_len`, optimizing the input amount per cycle on the
/// concave composed-swap profit.
pub fn cyclic_arb(graph: &TokenGraph, max_cycle_len: usize) -> Result<CyclicArbOutcome, CfmmError> {
    let all = (1u32 << graph.pools.len()).wrapping_sub(1);
    cyclic_arb_restricted(graph, all, max_cycle_len)
}

/// As [`cyclic_arb`] but only pools whose index bit is set in `pool_mask`
/// are usable; this is how coalition subgraphs are evaluated.
pub fn cyclic_arb_restricted(
    graph: &TokenGraph,
    pool_mask: u32,
    max_cycle_len: usize,
) -> Result<CyclicArbOutcome, CfmmError> {
    if max_cycle_len > MAX_CYCLE_LEN {
        return Err(CfmmError::CycleCapExceeded(max_cycle_len));
    }
    if graph.pools.len() > MAX_POOLS {
        return Err(CfmmError::TooManyPools(graph.pools.len()));
    }

    let mut best = CyclicArbOutcome::none();
    let mut path: Vec<CycleHop> = Vec::new();
    search_cycles(
        graph,
        pool_mask,
        &graph.numeraire,
        0,
        max_cycle_len,
        &mut path,
        &mut best,
    );
    Ok(best)
}

fn search_cycles(
    graph: &TokenGraph,
    allowed: u32,
    at: &AssetId,
    used: u32,
    budget: usize,
    path: &mut Vec<CycleHop>,
    best: &mut CyclicArbOutcome,
) {
    if budget == 0 {
        return;
    }
    for (idx, pool) in graph.pools.iter().enumerate() {
        let bit = 1u32 << idx;
        if allowed & bit == 0 || used & bit != 0 {
            continue;
        }
        let buy = if pool.pair.0 == *at {
            pool.pair.1.clone()
        } else if pool.pair.1 == *at {
            pool.pair.0.clone()
        } else {
            continue;
        };
        path.push(CycleHop { pool_index: idx, sell: at.clone(), buy: buy.clone() });
        if buy == graph.numeraire {
            if path.len() >= 2 {
                score_cycle(graph, path, best);
            }
        } else {
            search_cycles(graph, allowed, &buy, used | bit, budget - 1, path, best);
        }
        path.pop();
    }
}

fn score_cycle(graph: &TokenGraph, cycle: &[CycleHop], best: &mut CyclicArbOutcome) {
    let output = |amount: f64| -> f64 {
        let mut flow = amount;
        for hop in cycle {
            let pool = &graph.pools[hop.pool_index];
            let side = usize::from(pool.pair.1 == hop.sell);
            flow = pool.swap_out(side, flow);
        }
        flow
    };
    let profit = |a: f64| output(a) - a;

    // Concave profit: bracket by doubling, then golden-section.
    let first = &graph.pools[cycle[0].pool_index];
    let mut hi = if first.pair.0 == cycle[0].sell { first.reserves.0 } else { first.reserves.1 };
    for _ in 0..60 {
        if profit(2.0 * hi) > profit(hi) {
            hi *= 2.0;
        } else {
            break;
        }
    }
    let (input, value) = golden_max(0.0, 2.0 * hi, 200, profit);
    if value > best.profit {
        *best = CyclicArbOutcome { profit: value, input, cycle: cycle.to_vec() };
    }
}

/// The graph game plus the owner each player index stands for.
#[derive(Clone, Debug)]
pub struct GraphGame {
    pub game: Game,
    /// `owners[i-1]` is the owner id of player `i`.
    pub owners: Vec<usize>,
}

impl GraphGame {
    pub fn player_of_owner(&self, owner: usize) -> Option<usize> {
        self.owners.iter().position(|&o| o == owner).map(|j| j + 1)
    }
}

/// Cooperative game over pool owners: a coalition's worth is the best
/// cyclic arbitrage on the subgraph of pools it owns. Monotone by
/// construction (more pools, more cycles).
pub fn graph_game(graph: &TokenGraph, max_cycle_len: usize) -> Result<GraphGame, CfmmError> {
    let owners = graph.owners();
    let n = owners.len();
    if n == 0 || n > ENUM_PLAYER_CAP {
        return Err(CfmmError::Game(GameError::EnumCapExceeded { n, cap: ENUM_PLAYER_CAP }));
    }

    let mut values = vec![0.0; 1 << n];
    for (mask, value) in values.iter_mut().enumerate().skip(1) {
        let mut pool_mask = 0u32;
        for (idx, pool) in graph.pools.iter().enumerate() {
            let player = owners.iter().position(|&o| o == pool.owner).unwrap() + 1;
            if mask as Coalition & crate::game::player_bit(player) != 0 {
                pool_mask |= 1 << idx;
            }
        }
        *value = cyclic_arb_restricted(graph, pool_mask, max_cycle_len)?.profit;
    }
    monotone_closure(&mut values, n);
    Ok(GraphGame { game: Game::new(n, values, true)?, owners })
}

/// Payoff summary of one side of the token-split attack.
#[derive(Clone, Debug, Serialize)]
pub struct AttackOutcome {
    pub grand_value: f64,
    pub attacker_payoff: f64,
    pub gain: f64,
}

/// Report of [`token_split_attack`]. `idealized` reroutes the same swap
/// function exactly (a split extension of the owner in the game), while
/// `pool_level` instantiates real replacement pools, whose composition
/// necessarily has more slippage than the original pool.
#[derive(Clone, Debug, Serialize)]
pub struct TokenSplitAttack {
    pub operator: String,
    pub pool_index: usize,
    pub attacker_owner: usize,
    pub before_grand_value: f64,
    pub before_payoff: f64,
    pub idealized: AttackOutcome,
    pub pool_level: AttackOutcome,
}

/// The token-split attack: the owner of one pool replaces it with two
/// chained pools over a fresh intermediate token, held by two identities,
/// and the rebate operator is re-run on the enlarged owner game.
pub fn token_split_attack(
    graph: &TokenGraph,
    pool_index: usize,
    operator: OperatorId,
    max_cycle_len: usize,
    search: &SearchConfig,
) -> Result<TokenSplitAttack, CfmmError> {
    let Some(pool) = graph.pools.get(pool_index) else {
        return Err(CfmmError::NoSuchPool(pool_index, graph.pools.len()));
    };
    let attacker_owner = pool.owner;

    let before = graph_game(graph, max_cycle_len)?;
    let attacker_player = before
        .player_of_owner(attacker_owner)
        .expect("attacked pool's owner is a player");
    let before_rebates = operator.rebates(&before.game, search)?;
    let before_payoff = before_rebates.payment(attacker_player);
    let before_grand_value = before.game.grand_value();

    // Idealized: exact game-level surgery. The owner's contribution now
    // requires both identities; coalition values are otherwise untouched.
    let ideal_ext = split_extension(&before.game, attacker_player, 1)?;
    let ideal_rebates = operator.rebates(ideal_ext.extended(), search)?;
    let ideal_payoff = ideal_rebates.total_over(&ideal_ext.attacker_identities());
    let idealized = AttackOutcome {
        grand_value: ideal_ext.extended().grand_value(),
        attacker_payoff: ideal_payoff,
        gain: ideal_payoff - before_payoff,
    };

    // Pool level: replace A-B with A-D and D-B around a fresh token, sized
    // at the geometric mean of the original reserves. The chained swap has
    // the original spot price but strictly more slippage.
    let fresh_owner = graph.pools.iter().map(|p| p.owner).max().unwrap_or(0) + 1;
    let intermediate: AssetId = fresh_token_name(graph);
    let mid = (pool.reserves.0 * pool.reserves.1).sqrt();
    let mut pools = graph.pools.clone();
    pools.remove(pool_index);
    pools.push(Pool::new(
        (pool.pair.0.clone(), intermediate.clone()),
        (pool.reserves.0, mid),
        pool.kind,
        attacker_owner,
    )?);
    pools.push(Pool::new(
        (intermediate, pool.pair.1.clone()),
        (mid, pool.reserves.1),
        pool.kind,
        fresh_owner,
    )?);
    let split_graph = TokenGraph::new(graph.numeraire.clone(), pools)?;

    let after = graph_game(&split_graph, max_cycle_len)?;
    let after_rebates = operator.rebates(&after.game, search)?;
    let attacker_ids: Vec<usize> = [attacker_owner, fresh_owner]
        .iter()
        .filter_map(|&o| after.player_of_owner(o))
        .collect();
    let after_payoff = after_rebates.total_over(&attacker_ids);
    let pool_level = AttackOutcome {
        grand_value: after.game.grand_value(),
        attacker_payoff: after_payoff,
        gain: after_payoff - before_payoff,
    };

    Ok(TokenSplitAttack {
        operator: operator.name().into(),
        pool_index,
        attacker_owner,
        before_grand_value,
        before_payoff,
        idealized,
        pool_level,
    })
}

fn fresh_token_name(graph: &TokenGraph) -> AssetId {
    let mut name = String::from("D");
    let taken: std::collections::HashSet<&str> = graph
        .pools
        .iter()
        .flat_map(|p| [p.pair.0.as_str(), p.pair.1.as_str()])
        .collect();
    while taken.contains(name.as_str()) {
        name.push('\'');
    }
    name
}

/// The three-pool triangle where only the full cycle is profitable: pools
/// A-B, B-C, C-A under owners 1, 2, 3, with the price discrepancy on the
/// C-A edge. The induced owner game is proportional to the three-player
/// unanimity game.
pub fn triangle_example() -> TokenGraph {
    TokenGraph::new(
        "A".into(),
        vec![
            Pool::constant_product("A", "B", (100.0, 100.0), 1).unwrap(),
            Pool::constant_product("B", "C", (100.0, 100.0), 2).unwrap(),
            Pool::constant_product("C", "A", (100.0, 120.0), 3).unwrap(),
        ],
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::coalition_of;
    use crate::ops::values::{pro_rata, shapley};
    use crate::sample;

    fn cp_pool(reserves: (f64, f64)) -> Pool {
        Pool::constant_product("A", "B", reserves, 1).unwrap()
    }

    #[test]
    fn no_discrepancy_no_profit() {
        let inst = ArbInstance::new(cp_pool((100.0, 100.0)), (1.0, 1.0)).unwrap();
        assert_eq!(arb(&inst).profit, 0.0);
    }

    #[test]
    fn constant_product_closed_form() {
        let inst = ArbInstance::new(cp_pool((100.0, 100.0)), (1.0, 4.0)).unwrap();
        let out = arb(&inst);
        // (sqrt(p0 x) - sqrt(p1 y))^2 = (10 - 20)^2.
        assert!((out.profit - 100.0).abs() < 1e-9);
        // Arbitrageur sells asset 0 into the pool and takes asset 1 out.
        assert!(out.net.0 < 0.0 && out.net.1 > 0.0);
        let value = inst.prices.0 * out.net.0 + inst.prices.1 * out.net.1;
        assert!((value - out.profit).abs() < 1e-9);
    }

    #[test]
    fn arb_is_homogeneous_in_reserves() {
        let prices = (1.3, 0.7);
        for kind in [PoolKind::ConstantProduct, PoolKind::WeightedGeometric(0.3)] {
            let base = Pool::new(("A".into(), "B".into()), (50.0, 170.0), kind, 1).unwrap();
            let unit = arb(&ArbInstance::new(base.clone(), prices).unwrap()).profit;
            for lambda in [0.5, 2.0, 10.0] {
                let scaled = arb(&ArbInstance::new(base.scaled(lambda), prices).unwrap()).profit;
                assert!(
                    (scaled - lambda * unit).abs() <= 1e-8 * scaled.abs().max(1.0),
                    "{kind:?} lambda={lambda}: {scaled} vs {}",
                    lambda * unit
                );
            }
        }
    }

    #[test]
    fn weighted_pool_matches_grid_search() {
        let pool =
            Pool::new(("A".into(), "B".into()), (80.0, 120.0), PoolKind::WeightedGeometric(0.4), 1)
                .unwrap();
        let inst = ArbInstance::new(pool.clone(), (2.0, 1.0)).unwrap();
        let got = arb(&inst).profit;
        // Brute force over final reserves of asset 0.
        let gamma = 0.4 / 0.6;
        let mut best = 0.0f64;
        for i in 1..200_000 {
            let x_new = 80.0 * (i as f64 / 50_000.0);
            let y_new = 120.0 * (80.0 / x_new).powf(gamma);
            let profit = 2.0 * (80.0 - x_new) + 1.0 * (120.0 - y_new);
            best = best.max(profit);
        }
        assert!((got - best).abs() <= 1e-5 * best.max(1.0), "{got} vs {best}");
    }

    #[test]
    fn lp_game_is_additive_and_matches_pro_rata() {
        let pool = cp_pool((100.0, 100.0));
        let prices = (1.0, 4.0);
        let shares = [0.5, 0.3, 0.2];
        let game = lp_game(&shares, &pool, prices).unwrap();
        assert!(game.profile().is_additive);

        let phi = shapley(&game).unwrap();
        let pr = pro_rata(&shares, game.grand_value()).unwrap();
        for i in 1..=3 {
            assert!((phi.payment(i) - pr.payment(i)).abs() < 1e-8);
        }

        // Single LP with share 1 earns the whole pool's arbitrage.
        let solo = lp_game(&[1.0], &pool, prices).unwrap();
        let direct = arb(&ArbInstance::new(pool, prices).unwrap()).profit;
        assert!((solo.value(0b1) - direct).abs() < 1e-12);
    }

    #[test]
    fn lp_game_rejects_bad_shares() {
        let pool = cp_pool((10.0, 10.0));
        assert!(lp_game(&[0.4, 0.4], &pool, (1.0, 1.0)).is_err());
        assert!(lp_game(&[-0.5, 1.5], &pool, (1.0, 1.0)).is_err());
    }

    #[test]
    fn two_identical_pools_admit_no_cycle_profit() {
        let graph = TokenGraph::new(
            "A".into(),
            vec![
                Pool::constant_product("A", "B", (100.0, 100.0), 1).unwrap(),
                Pool::constant_product("A", "B", (50.0, 50.0), 2).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(cyclic_arb(&graph, 4).unwrap().profit, 0.0);
    }

    #[test]
    fn two_pool_price_gap_is_harvested() {
        let graph = TokenGraph::new(
            "A".into(),
            vec![
                Pool::constant_product("A", "B", (100.0, 100.0), 1).unwrap(),
                Pool::constant_product("A", "B", (100.0, 150.0), 2).unwrap(),
            ],
        )
        .unwrap();
        let out = cyclic_arb(&graph, 4).unwrap();
        assert!(out.profit > 0.0);
        assert_eq!(out.cycle.len(), 2);

        // Grid-search cross-check on the same two-hop route.
        let buy_cheap = |a: f64| {
            let b = graph.pools[1].swap_out(0, a);
            graph.pools[0].swap_out(1, b) - a
        };
        let mut best = 0.0f64;
        for i in 0..200_000 {
            best = best.max(buy_cheap(i as f64 * 0.002));
        }
        assert!((out.profit - best).abs() <= 1e-6 * best.max(1.0), "{} vs {best}", out.profit);
    }

    #[test]
    fn triangle_needs_every_edge() {
        let graph = triangle_example();
        let full = cyclic_arb(&graph, 4).unwrap();
        assert!(full.profit > 0.0);
        assert_eq!(full.cycle.len(), 3);
        for drop in 0..3u32 {
            let mask = 0b111 & !(1 << drop);
            let partial = cyclic_arb_restricted(&graph, mask, 4).unwrap();
            assert_eq!(partial.profit, 0.0, "dropping pool {drop}");
        }
    }

    #[test]
    fn triangle_game_is_scaled_unanimity_with_equal_shapley() {
        let gg = graph_game(&triangle_example(), 4).unwrap();
        assert_eq!(gg.owners, vec![1, 2, 3]);
        let profile = gg.game.profile();
        let (c, r) = profile.unanimity_scaled.expect("triangle game is scaled unanimity");
        assert_eq!(r, coalition_of(&[1, 2, 3]));
        assert!(c > 0.0);
        let phi = shapley(&gg.game).unwrap();
        for i in 1..=3 {
            assert!((phi.payment(i) - c / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn graph_game_values_are_raw_subgraph_profits() {
        // The monotone snap in graph_game must be a no-op: coalition values
        // computed independently already increase along the lattice.
        let mut pools = triangle_example().pools;
        pools.push(Pool::constant_product("A", "B", (80.0, 95.0), 4).unwrap());
        let graph = TokenGraph::new("A".into(), pools).unwrap();
        let gg = graph_game(&graph, 4).unwrap();
        assert_eq!(gg.owners.len(), 4);
        for mask in 1u32..(1 << 4) {
            let mut pool_mask = 0u32;
            for (idx, pool) in graph.pools.iter().enumerate() {
                if mask & crate::game::player_bit(pool.owner) != 0 {
                    pool_mask |= 1 << idx;
                }
            }
            let direct = cyclic_arb_restricted(&graph, pool_mask, 4).unwrap().profit;
            assert!((gg.game.value(mask) - direct).abs() < 1e-12, "mask {mask:b}");
        }
    }

    #[test]
    fn isolated_profitable_pair_pays_its_owner_alone() {
        let mut pools = triangle_example().pools;
        // Player 4 owns both sides of a detached price gap on A-F.
        pools.push(Pool::constant_product("A", "F", (100.0, 100.0), 4).unwrap());
        pools.push(Pool::constant_product("A", "F", (100.0, 140.0), 4).unwrap());
        let graph = TokenGraph::new("A".into(), pools).unwrap();
        let gg = graph_game(&graph, 4).unwrap();
        let solo = gg.game.value(crate::game::player_bit(4));
        assert!(solo > 0.0);
    }

    #[test]
    fn token_split_attack_on_triangle() {
        let graph = triangle_example();
        let search = SearchConfig::default();

        let shap = token_split_attack(&graph, 0, OperatorId::Shapley, 4, &search).unwrap();
        let v = shap.before_grand_value;
        assert!((shap.before_payoff - v / 3.0).abs() < 1e-9);
        assert!((shap.idealized.attacker_payoff - v / 2.0).abs() < 1e-9);
        assert!(shap.idealized.gain > 0.0);
        assert!(shap.pool_level.gain > 0.0, "pool-level gain {}", shap.pool_level.gain);
        // The chained pools leak value to slippage but stay profitable.
        assert!(shap.pool_level.grand_value <= v + 1e-9);
        assert!(shap.pool_level.grand_value > 0.5 * v);

        let banz = token_split_attack(&graph, 0, OperatorId::Banzhaf, 4, &search).unwrap();
        assert!(banz.idealized.gain.abs() < 1e-9);
        assert!(banz.pool_level.gain <= 1e-9);
    }

    #[test]
    fn splitting_an_idle_pool_changes_nothing() {
        let mut pools = triangle_example().pools;
        pools.push(Pool::constant_product("A", "E", (100.0, 100.0), 4).unwrap());
        let graph = TokenGraph::new("A".into(), pools).unwrap();
        let report =
            token_split_attack(&graph, 3, OperatorId::Shapley, 4, &SearchConfig::default())
                .unwrap();
        assert_eq!(report.before_payoff, 0.0);
        assert!(report.idealized.attacker_payoff.abs() < 1e-12);
        assert!(report.pool_level.attacker_payoff.abs() < 1e-12);
    }

    #[test]
    fn graph_json_round_trip() {
        let json = r#"{"numeraire": "A", "pools": [
            {"pair": ["A","B"], "reserves": [100.0, 100.0], "kind": "cp", "owner": 1},
            {"pair": ["B","C"], "reserves": [5.0, 9.0], "kind": {"wg": 0.3}, "owner": 2}
        ]}"#;
        let graph: TokenGraph = serde_json::from_str(json).unwrap();
        assert_eq!(graph.pools.len(), 2);
        assert_eq!(graph.pools[1].kind, PoolKind::WeightedGeometric(0.3));
        let out = serde_json::to_string(&graph).unwrap();
        let back: TokenGraph = serde_json::from_str(&out).unwrap();
        assert_eq!(back, graph);
    }

    #[test]
    fn pool_validation() {
        assert!(matches!(
            Pool::constant_product("A", "B", (0.0, 1.0), 1),
            Err(CfmmError::BadReserve(_))
        ));
        assert!(matches!(
            Pool::new(("A".into(), "B".into()), (1.0, 1.0), PoolKind::WeightedGeometric(1.0), 1),
            Err(CfmmError::BadWeight(_))
        ));
        assert!(matches!(
            Pool::constant_product("A", "A", (1.0, 1.0), 1),
            Err(CfmmError::SelfPair(_))
        ));
        assert!(matches!(cyclic_arb(&triangle_example(), 7), Err(CfmmError::CycleCapExceeded(7))));
    }

    #[test]
    fn random_share_vectors_keep_lp_games_monotone() {
        let mut rng = sample::rng(3);
        for _ in 0..10 {
            let shares = sample::random_shares(4, &mut rng);
            let pool = cp_pool((40.0, 260.0));
            let game = lp_game(&shares, &pool, (2.0, 0.5)).unwrap();
            assert!(game.is_monotone());
        }
    }
}
