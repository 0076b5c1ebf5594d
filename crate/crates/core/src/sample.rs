//! Deterministic game samples used by audits, probes, and regression tests.

use crate::game::{coalition_of, Coalition, Game};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded generator; all sampling in the crate flows through explicitly
/// created instances of this.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The 3-player game with singleton worths 1, `v({1,3}) = 2`,
/// `v({1,2}) = v({2,3}) = 4` and `v(N) = 5`. Its Banzhaf payments sum to
/// 5.5 > 5, the canonical no-deficit counterexample.
pub fn deficit_example() -> Game {
    let mut values = vec![0.0; 8];
    values[coalition_of(&[1]) as usize] = 1.0;
    values[coalition_of(&[2]) as usize] = 1.0;
    values[coalition_of(&[3]) as usize] = 1.0;
    values[coalition_of(&[1, 2]) as usize] = 4.0;
    values[coalition_of(&[1, 3]) as usize] = 2.0;
    values[coalition_of(&[2, 3]) as usize] = 4.0;
    values[coalition_of(&[1, 2, 3]) as usize] = 5.0;
    Game::new(3, values, true).expect("fixture is valid")
}

/// The "or" game: every nonempty coalition is worth 1. A single identity
/// already extracts everything, so extra identities dilute honest players.
pub fn or_game(n: usize) -> Game {
    let values = (0..1usize << n).map(|m| if m == 0 { 0.0 } else { 1.0 }).collect();
    Game::new(n, values, true).expect("or game is valid")
}

/// A random monotone game: 2^n − 1 uniform draws sorted ascending and laid
/// out along the subset lattice in (popcount, mask) order, so containment
/// always implies a weakly larger value.
pub fn random_monotone_game(n: usize, rng: &mut ChaCha8Rng) -> Game {
    let size = 1usize << n;
    let mut draws: Vec<f64> = (0..size - 1).map(|_| rng.random::<f64>()).collect();
    draws.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut order: Vec<Coalition> = (1..size as Coalition).collect();
    order.sort_by_key(|m| (m.count_ones(), *m));

    let mut values = vec![0.0; size];
    for (rank, mask) in order.into_iter().enumerate() {
        values[mask as usize] = draws[rank];
    }
    Game::new(n, values, true).expect("lattice-sorted values are monotone")
}

/// A batch of random monotone games with `counts[k]` games of `sizes[k]`
/// players each, in deterministic order.
pub fn monotone_sample(sizes: &[usize], per_size: usize, seed: u64) -> Vec<Game> {
    let mut rng = rng(seed);
    let mut games = Vec::with_capacity(sizes.len() * per_size);
    for &n in sizes {
        for _ in 0..per_size {
            games.push(random_monotone_game(n, &mut rng));
        }
    }
    games
}

/// All unanimity games `w_R` for every nonempty `R ⊆ [n]`, for each
/// `n = 1..=max_n`.
pub fn unanimity_basis(max_n: usize) -> Vec<Game> {
    let mut games = Vec::new();
    for n in 1..=max_n {
        for r in 1..(1u32 << n) {
            games.push(Game::unanimity(n, r).expect("basis element"));
        }
    }
    games
}

/// A random point on the probability simplex with `n` coordinates.
pub fn random_shares(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_games_are_monotone_and_deterministic() {
        let mut rng_a = rng(7);
        let mut rng_b = rng(7);
        for n in 2..=5 {
            let a = random_monotone_game(n, &mut rng_a);
            let b = random_monotone_game(n, &mut rng_b);
            assert!(a.is_monotone());
            assert_eq!(a.values(), b.values());
        }
    }

    #[test]
    fn unanimity_basis_count() {
        // Σ_{n<=4} (2^n − 1) = 1 + 3 + 7 + 15.
        assert_eq!(unanimity_basis(4).len(), 26);
    }

    #[test]
    fn shares_lie_on_simplex() {
        let mut r = rng(3);
        let s = random_shares(5, &mut r);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(s.iter().all(|&x| x > 0.0));
    }
}
