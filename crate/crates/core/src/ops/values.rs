//! The basic value operators: Shapley (plus its permutation-enumeration
//! oracle), Banzhaf, the minimal-marginal operator theta, and pro-rata.

use crate::game::{player_bit, Game, GameError, RebateVector, ABS_TOL, ENUM_PLAYER_CAP};

fn check_enum_cap(game: &Game) -> Result<(), GameError> {
    if game.n() > ENUM_PLAYER_CAP {
        return Err(GameError::EnumCapExceeded { n: game.n(), cap: ENUM_PLAYER_CAP });
    }
    Ok(())
}

/// Shapley value: the marginal contribution of each player averaged over
/// uniformly random arrival orders, computed by direct subset enumeration
/// with weights `|S|! (n-|S|-1)! / n! = 1 / (n * C(n-1, |S|))`.
pub fn shapley(game: &Game) -> Result<RebateVector, GameError> {
    check_enum_cap(game)?;
    let n = game.n();
    let size = 1usize << n;

    // weight[s] for a predecessor set of size s.
    let mut weight = vec![0.0; n];
    let mut binom = 1.0; // C(n-1, s)
    for (s, w) in weight.iter_mut().enumerate() {
        *w = 1.0 / (n as f64 * binom);
        binom = binom * (n - 1 - s) as f64 / (s + 1) as f64;
    }

    let mut payments = vec![0.0; n];
    for (i, payment) in payments.iter_mut().enumerate() {
        let bit = 1usize << i;
        let mut acc = 0.0;
        for mask in 0..size {
            if mask & bit == 0 {
                let s = mask.count_ones() as usize;
                acc += weight[s] * (game.values()[mask | bit] - game.values()[mask]);
            }
        }
        *payment = acc;
    }
    Ok(RebateVector(payments))
}

/// Independent Shapley oracle: exact average of marginal contributions over
/// all `n!` player orderings. Only sensible for small games.
pub fn shapley_permutation_oracle(game: &Game) -> Result<RebateVector, GameError> {
    let n = game.n();
    if n > 9 {
        return Err(GameError::EnumCapExceeded { n, cap: 9 });
    }
    let mut totals = vec![0.0; n];
    let mut perm: Vec<usize> = (1..=n).collect();
    let mut count = 0u64;

    // Heap's algorithm, iterative form.
    let mut stack = vec![0usize; n];
    accumulate(game, &perm, &mut totals);
    count += 1;
    let mut i = 1;
    while i < n {
        if stack[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(stack[i], i);
            }
            accumulate(game, &perm, &mut totals);
            count += 1;
            stack[i] += 1;
            i = 1;
        } else {
            stack[i] = 0;
            i += 1;
        }
    }

    let factorial = count as f64;
    Ok(RebateVector(totals.into_iter().map(|t| t / factorial).collect()))
}

fn accumulate(game: &Game, perm: &[usize], totals: &mut [f64]) {
    let mut mask = 0u32;
    let mut prev = 0.0;
    for &player in perm {
        mask |= player_bit(player);
        let cur = game.value(mask);
        totals[player - 1] += cur - prev;
        prev = cur;
    }
}

/// Banzhaf value: `β_i = 2^{-(n-1)} Σ_{S ∌ i} [v(S ∪ {i}) − v(S)]`.
pub fn banzhaf(game: &Game) -> Result<RebateVector, GameError> {
    check_enum_cap(game)?;
    let n = game.n();
    let size = 1usize << n;
    let scale = 1.0 / 2f64.powi(n as i32 - 1);

    let mut payments = vec![0.0; n];
    for (i, payment) in payments.iter_mut().enumerate() {
        let bit = 1usize << i;
        let mut acc = 0.0;
        for mask in 0..size {
            if mask & bit == 0 {
                acc += game.values()[mask | bit] - game.values()[mask];
            }
        }
        *payment = scale * acc;
    }
    Ok(RebateVector(payments))
}

/// Closed form for the Banzhaf welfare:
/// `W_β(v) = 2^{-(n-1)} Σ_S (2|S| − n) v(S)`.
/// Agrees with `banzhaf(v).welfare()` and provides an independent route.
pub fn banzhaf_welfare_formula(game: &Game) -> Result<f64, GameError> {
    check_enum_cap(game)?;
    let n = game.n() as f64;
    let scale = 1.0 / 2f64.powi(game.n() as i32 - 1);
    let total: f64 = game
        .values()
        .iter()
        .enumerate()
        .map(|(mask, &v)| (2.0 * mask.count_ones() as f64 - n) * v)
        .sum();
    Ok(scale * total)
}

/// The separability operator: each player's minimal marginal contribution,
/// `θ_i = min_{S ⊆ N\{i}} [v(S ∪ {i}) − v(S)]`.
pub fn theta(game: &Game) -> Result<RebateVector, GameError> {
    check_enum_cap(game)?;
    let n = game.n();
    let size = 1usize << n;

    let mut payments = vec![0.0; n];
    for (i, payment) in payments.iter_mut().enumerate() {
        let bit = 1usize << i;
        let mut min = f64::INFINITY;
        for mask in 0..size {
            if mask & bit == 0 {
                let marginal = game.values()[mask | bit] - game.values()[mask];
                if marginal < min {
                    min = marginal;
                }
            }
        }
        *payment = min;
    }
    Ok(RebateVector(payments))
}

/// Pro-rata payments `p_i = s_i * total_value` for shares on the simplex.
pub fn pro_rata(shares: &[f64], total_value: f64) -> Result<RebateVector, GameError> {
    for &s in shares {
        if s.is_nan() || s < 0.0 {
            return Err(GameError::NegativeShare(s));
        }
    }
    let sum: f64 = shares.iter().sum();
    if (sum - 1.0).abs() > ABS_TOL {
        return Err(GameError::OffSimplex(sum));
    }
    Ok(RebateVector(shares.iter().map(|s| s * total_value).collect()))
}
