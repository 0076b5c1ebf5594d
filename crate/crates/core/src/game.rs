//! Transferable-utility cooperative games stored densely by subset bitmask.
//!
//! Players are numbered `1..=n` and player `i` occupies bit `i-1` of a
//! [`Coalition`] mask, least significant bit first. Index `k` of the value
//! table therefore encodes the coalition `{i : bit (i-1) of k is 1}`, with
//! index 0 the empty coalition. This convention is part of the JSON
//! interchange format and must not change.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// A coalition of players encoded as a bitmask (player `i` ↔ bit `i-1`).
pub type Coalition = u32;

/// Hard cap on players for dense storage (2^24 table entries).
pub const MAX_PLAYERS: usize = 24;

/// Cap for operators that enumerate all subsets per player.
pub const ENUM_PLAYER_CAP: usize = 20;

/// Absolute comparison tolerance for real-valued identities.
pub const ABS_TOL: f64 = 1e-9;

/// Bit for a 1-based player index.
#[inline]
pub fn player_bit(i: usize) -> Coalition {
    debug_assert!(i >= 1);
    1 << (i - 1)
}

/// Coalition containing the given 1-based players.
pub fn coalition_of(players: &[usize]) -> Coalition {
    players.iter().fold(0, |m, &i| m | player_bit(i))
}

/// The 1-based players of a coalition, ascending.
pub fn members(mask: Coalition) -> impl Iterator<Item = usize> {
    (0..MAX_PLAYERS).filter_map(move |b| (mask & (1 << b) != 0).then_some(b + 1))
}

/// Renders a coalition as `{1,3,4}` for error messages and witnesses.
pub fn coalition_string(mask: Coalition) -> String {
    let inner: Vec<String> = members(mask).map(|i| i.to_string()).collect();
    format!("{{{}}}", inner.join(","))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("player count {0} exceeds the dense-storage cap of {MAX_PLAYERS}")]
    TooManyPlayers(usize),
    #[error("player count must be at least 1")]
    NoPlayers,
    #[error("value table has length {got}, expected 2^{n} = {expected}")]
    WrongLength { n: usize, got: usize, expected: usize },
    #[error("empty coalition must have value 0, got {0}")]
    NonzeroEmpty(f64),
    #[error("coalition {} has invalid value {value} (must be finite and >= 0)", coalition_string(*.mask))]
    BadValue { mask: Coalition, value: f64 },
    #[error("monotonicity violated: v({}) = {lo_value} > v({}) = {hi_value}",
            coalition_string(*.lo), coalition_string(*.hi))]
    NotMonotone { lo: Coalition, hi: Coalition, lo_value: f64, hi_value: f64 },
    #[error("unanimity coalition must be nonempty")]
    EmptyUnanimitySet,
    #[error("coalition {} is not a subset of the {n} players", coalition_string(*.mask))]
    OutOfRange { mask: Coalition, n: usize },
    #[error("player {0} is out of range for a {1}-player game")]
    BadPlayer(usize, usize),
    #[error("player {player} must not belong to coalition {}", coalition_string(*.coalition))]
    PlayerInCoalition { player: usize, coalition: Coalition },
    #[error("operator requires n <= {cap}, game has {n} players")]
    EnumCapExceeded { n: usize, cap: usize },
    #[error("shares must sum to 1 (sum = {0})")]
    OffSimplex(f64),
    #[error("share {0} is negative")]
    NegativeShare(f64),
}

/// A monotone-flaggable characteristic function `v: 2^[n] -> R>=0` with
/// `v(empty) = 0`, stored densely in bitmask order.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGame")]
pub struct Game {
    n: usize,
    values: Vec<f64>,
    monotone: bool,
}

#[derive(Deserialize)]
struct RawGame {
    n: usize,
    values: Vec<f64>,
    #[serde(default)]
    monotone: bool,
}

impl TryFrom<RawGame> for Game {
    type Error = GameError;
    fn try_from(raw: RawGame) -> Result<Self, GameError> {
        Game::new(raw.n, raw.values, raw.monotone)
    }
}

impl fmt::Debug for Game {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Game(n={}", self.n)?;
        for (mask, v) in self.values.iter().enumerate().skip(1) {
            if *v != 0.0 {
                write!(f, ", v{}={v}", coalition_string(mask as Coalition))?;
            }
        }
        write!(f, ")")
    }
}

impl Game {
    /// Validates and builds a game. With `require_monotone`, every
    /// subset/superset covering pair is checked and the first violating pair
    /// is reported.
    pub fn new(n: usize, values: Vec<f64>, require_monotone: bool) -> Result<Self, GameError> {
        if n == 0 {
            return Err(GameError::NoPlayers);
        }
        if n > MAX_PLAYERS {
            return Err(GameError::TooManyPlayers(n));
        }
        let expected = 1usize << n;
        if values.len() != expected {
            return Err(GameError::WrongLength { n, got: values.len(), expected });
        }
        if values[0] != 0.0 {
            return Err(GameError::NonzeroEmpty(values[0]));
        }
        for (mask, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(GameError::BadValue { mask: mask as Coalition, value: v });
            }
        }
        if require_monotone {
            // Checking every covering pair (S, S ∪ {i}) covers all S ⊆ T
            // by transitivity.
            for mask in 0..expected {
                for b in 0..n {
                    let bit = 1usize << b;
                    if mask & bit == 0 && values[mask] > values[mask | bit] {
                        return Err(GameError::NotMonotone {
                            lo: mask as Coalition,
                            hi: (mask | bit) as Coalition,
                            lo_value: values[mask],
                            hi_value: values[mask | bit],
                        });
                    }
                }
            }
        }
        Ok(Game { n, values, monotone: require_monotone })
    }

    /// The unanimity game `w_R`: value 1 exactly on coalitions containing `R`.
    pub fn unanimity(n: usize, r: Coalition) -> Result<Self, GameError> {
        if r == 0 {
            return Err(GameError::EmptyUnanimitySet);
        }
        if n > MAX_PLAYERS {
            return Err(GameError::TooManyPlayers(n));
        }
        let full = full_mask(n);
        if r & !full != 0 {
            return Err(GameError::OutOfRange { mask: r, n });
        }
        let values = (0..1u64 << n)
            .map(|s| if s as Coalition & r == r { 1.0 } else { 0.0 })
            .collect();
        Game::new(n, values, true)
    }

    /// The all-zero game.
    pub fn zero(n: usize) -> Self {
        Game::new(n, vec![0.0; 1 << n], true).expect("zero game is valid")
    }

    /// The additive game with singleton worths `a`, `v(S) = Σ_{i∈S} a_i`.
    pub fn additive(singletons: &[f64]) -> Result<Self, GameError> {
        let n = singletons.len();
        if n == 0 {
            return Err(GameError::NoPlayers);
        }
        if n > MAX_PLAYERS {
            return Err(GameError::TooManyPlayers(n));
        }
        let values = (0..1usize << n)
            .map(|mask| members(mask as Coalition).map(|i| singletons[i - 1]).sum())
            .collect();
        Game::new(n, values, true)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The grand coalition mask.
    pub fn full(&self) -> Coalition {
        full_mask(self.n)
    }

    /// Whether the game was validated as monotone at construction.
    pub fn monotone_flag(&self) -> bool {
        self.monotone
    }

    /// Value of a coalition. Panics if the mask has bits beyond the players.
    #[inline]
    pub fn value(&self, coalition: Coalition) -> f64 {
        self.values[coalition as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grand_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// `v(S ∪ {i}) − v(S)` for `i ∉ S`.
    pub fn marginal(&self, i: usize, coalition: Coalition) -> Result<f64, GameError> {
        self.check_player(i)?;
        if coalition & !self.full() != 0 {
            return Err(GameError::OutOfRange { mask: coalition, n: self.n });
        }
        let bit = player_bit(i);
        if coalition & bit != 0 {
            return Err(GameError::PlayerInCoalition { player: i, coalition });
        }
        Ok(self.value(coalition | bit) - self.value(coalition))
    }

    pub fn check_player(&self, i: usize) -> Result<(), GameError> {
        if i == 0 || i > self.n {
            return Err(GameError::BadPlayer(i, self.n));
        }
        Ok(())
    }

    /// Exhaustive monotonicity test (independent of the constructor flag).
    pub fn is_monotone(&self) -> bool {
        let size = 1usize << self.n;
        for mask in 0..size {
            for b in 0..self.n {
                let bit = 1usize << b;
                if mask & bit == 0 && self.values[mask] > self.values[mask | bit] {
                    return false;
                }
            }
        }
        true
    }

    /// Pointwise sum of two games on the same player set.
    pub fn sum(&self, other: &Game) -> Result<Game, GameError> {
        if self.n != other.n {
            return Err(GameError::WrongLength {
                n: self.n,
                got: other.values.len(),
                expected: self.values.len(),
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Game::new(self.n, values, false)
    }

    /// The game scaled by a nonnegative factor.
    pub fn scale(&self, factor: f64) -> Result<Game, GameError> {
        let values = self.values.iter().map(|v| v * factor).collect();
        Game::new(self.n, values, self.monotone)
    }

    /// Structural classification: additivity, monotonicity, null players,
    /// interchangeable pairs, and scaled-unanimity detection.
    pub fn profile(&self) -> GameProfile {
        let n = self.n;
        let full = self.full();
        let is_monotone = self.is_monotone();

        let mut is_additive = true;
        'outer: for mask in 1..(1usize << n) {
            let additive: f64 = members(mask as Coalition)
                .map(|i| self.value(player_bit(i)))
                .sum();
            if (self.values[mask] - additive).abs() > ABS_TOL {
                is_additive = false;
                break 'outer;
            }
        }

        let mut null_players = Vec::new();
        for i in 1..=n {
            let bit = player_bit(i);
            let is_null = (0..1u64 << n)
                .map(|m| m as Coalition)
                .filter(|m| m & bit == 0)
                .all(|m| (self.value(m | bit) - self.value(m)).abs() <= ABS_TOL);
            if is_null {
                null_players.push(i);
            }
        }

        let mut interchangeable_pairs = Vec::new();
        for i in 1..=n {
            for j in (i + 1)..=n {
                let (bi, bj) = (player_bit(i), player_bit(j));
                let symmetric = (0..1u64 << n)
                    .map(|m| m as Coalition)
                    .filter(|m| m & (bi | bj) == 0)
                    .all(|m| (self.value(m | bi) - self.value(m | bj)).abs() <= ABS_TOL);
                if symmetric {
                    interchangeable_pairs.push((i, j));
                }
            }
        }

        // c·w_R detection: R must be the intersection of all supports, and
        // every coalition is then worth c or 0 according to R ⊆ S.
        let unanimity_scaled = {
            let c = self.grand_value();
            if c <= ABS_TOL {
                None
            } else {
                let mut r = full;
                for mask in 1..(1usize << n) {
                    if self.values[mask] > ABS_TOL {
                        r &= mask as Coalition;
                    }
                }
                let ok = r != 0
                    && (0..1usize << n).all(|mask| {
                        let want = if mask as Coalition & r == r { c } else { 0.0 };
                        (self.values[mask] - want).abs() <= ABS_TOL
                    });
                ok.then_some((c, r))
            }
        };

        GameProfile {
            is_additive,
            is_monotone,
            null_players,
            interchangeable_pairs,
            unanimity_scaled,
        }
    }
}

/// Grand-coalition mask for `n` players.
#[inline]
pub fn full_mask(n: usize) -> Coalition {
    ((1u64 << n) - 1) as Coalition
}

/// Report produced by [`Game::profile`].
#[derive(Clone, Debug, Serialize)]
pub struct GameProfile {
    pub is_additive: bool,
    pub is_monotone: bool,
    pub null_players: Vec<usize>,
    pub interchangeable_pairs: Vec<(usize, usize)>,
    /// `Some((c, R))` when the game equals `c · w_R` with `c > 0`.
    pub unanimity_scaled: Option<(f64, Coalition)>,
}

/// Per-identity payments produced by a value operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RebateVector(pub Vec<f64>);

impl RebateVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Payment of a 1-based player.
    pub fn payment(&self, i: usize) -> f64 {
        self.0[i - 1]
    }

    pub fn welfare(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Sums payments over a set of identities.
    pub fn total_over(&self, identities: &[usize]) -> f64 {
        identities.iter().map(|&i| self.payment(i)).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().copied()
    }
}

/// Coefficients of a game in the unanimity base `v = Σ c_R w_R`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnanimityDecomposition {
    n: usize,
    coefficients: BTreeMap<Coalition, f64>,
}

impl UnanimityDecomposition {
    /// Möbius inversion over the subset lattice:
    /// `c_R = Σ_{T⊆R} (−1)^{|R|−|T|} v(T)`.
    pub fn of(game: &Game) -> Self {
        let n = game.n();
        let mut work: Vec<f64> = game.values().to_vec();
        // In-place Möbius transform, one bit at a time.
        for b in 0..n {
            let bit = 1usize << b;
            for mask in 0..work.len() {
                if mask & bit != 0 {
                    work[mask] -= work[mask ^ bit];
                }
            }
        }
        let coefficients = work
            .iter()
            .enumerate()
            .skip(1)
            .map(|(mask, &c)| (mask as Coalition, c))
            .collect();
        UnanimityDecomposition { n, coefficients }
    }

    pub fn from_coefficients(
        n: usize,
        coefficients: BTreeMap<Coalition, f64>,
    ) -> Result<Self, GameError> {
        if n == 0 {
            return Err(GameError::NoPlayers);
        }
        if n > MAX_PLAYERS {
            return Err(GameError::TooManyPlayers(n));
        }
        let full = full_mask(n);
        for &r in coefficients.keys() {
            if r == 0 {
                return Err(GameError::EmptyUnanimitySet);
            }
            if r & !full != 0 {
                return Err(GameError::OutOfRange { mask: r, n });
            }
        }
        Ok(UnanimityDecomposition { n, coefficients })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coefficient(&self, r: Coalition) -> f64 {
        self.coefficients.get(&r).copied().unwrap_or(0.0)
    }

    pub fn coefficients(&self) -> &BTreeMap<Coalition, f64> {
        &self.coefficients
    }

    /// Zeta transform back to the value table: `v(S) = Σ_{R⊆S, R≠∅} c_R`.
    ///
    /// The reconstruction is not clamped, so decompositions of valid games
    /// round-trip; arbitrary coefficients may fail validation (negative
    /// coalition values are rejected by [`Game::new`]).
    pub fn reconstruct(&self) -> Result<Game, GameError> {
        let size = 1usize << self.n;
        let mut values = vec![0.0; size];
        for (&r, &c) in &self.coefficients {
            values[r as usize] += c;
        }
        for b in 0..self.n {
            let bit = 1usize << b;
            for mask in 0..size {
                if mask & bit != 0 {
                    values[mask] += values[mask ^ bit];
                }
            }
        }
        // Do not clamp; round small negative noise to zero only.
        for v in &mut values {
            if *v < 0.0 && *v > -ABS_TOL {
                *v = 0.0;
            }
        }
        Game::new(self.n, values, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_deficit_game() -> Game {
        crate::sample::deficit_example()
    }

    #[test]
    fn single_player_game() {
        let g = Game::new(1, vec![0.0, 5.0], true).unwrap();
        assert_eq!(g.value(0b1), 5.0);
        assert_eq!(g.grand_value(), 5.0);
    }

    #[test]
    fn deficit_example_is_valid_and_monotone() {
        let g = paper_deficit_game();
        assert_eq!(g.n(), 3);
        assert!(g.is_monotone());
        assert_eq!(g.grand_value(), 5.0);
        assert_eq!(g.value(coalition_of(&[1, 3])), 2.0);
    }

    #[test]
    fn monotonicity_violation_reports_witness() {
        let err = Game::new(2, vec![0.0, 3.0, 1.0, 2.0], true).unwrap_err();
        match err {
            GameError::NotMonotone { lo, hi, lo_value, hi_value } => {
                assert_eq!(lo, coalition_of(&[1]));
                assert_eq!(hi, coalition_of(&[1, 2]));
                assert_eq!((lo_value, hi_value), (3.0, 2.0));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            Game::new(2, vec![0.0, 1.0], true),
            Err(GameError::WrongLength { .. })
        ));
        assert!(matches!(
            Game::new(1, vec![1.0, 1.0], false),
            Err(GameError::NonzeroEmpty(_))
        ));
        assert!(matches!(
            Game::new(1, vec![0.0, -1.0], false),
            Err(GameError::BadValue { .. })
        ));
        assert!(matches!(
            Game::new(1, vec![0.0, f64::NAN], false),
            Err(GameError::BadValue { .. })
        ));
    }

    #[test]
    fn unanimity_values() {
        let g = Game::unanimity(3, coalition_of(&[1, 2, 3])).unwrap();
        for mask in 0..8u32 {
            let expected = if mask == 0b111 { 1.0 } else { 0.0 };
            assert_eq!(g.value(mask), expected, "mask {mask}");
        }

        let g = Game::unanimity(2, coalition_of(&[1])).unwrap();
        assert_eq!(g.value(0b01), 1.0);
        assert_eq!(g.value(0b10), 0.0);
        assert_eq!(g.value(0b11), 1.0);

        // w_{2,4} on 4 players: exactly the 4 supersets of {2,4} have value 1.
        let r = coalition_of(&[2, 4]);
        let g = Game::unanimity(4, r).unwrap();
        let ones: Vec<Coalition> = (0..16).filter(|&m| g.value(m) == 1.0).collect();
        assert_eq!(ones.len(), 4);
        for m in ones {
            assert_eq!(m & r, r);
        }
    }

    #[test]
    fn unanimity_rejects_empty_set() {
        assert!(matches!(Game::unanimity(3, 0), Err(GameError::EmptyUnanimitySet)));
    }

    #[test]
    fn marginals() {
        let w12 = Game::unanimity(2, 0b11).unwrap();
        assert_eq!(w12.marginal(2, coalition_of(&[1])).unwrap(), 1.0);
        assert_eq!(w12.marginal(2, 0).unwrap(), 0.0);
        assert!(matches!(
            w12.marginal(2, coalition_of(&[2])),
            Err(GameError::PlayerInCoalition { player: 2, .. })
        ));

        let g = paper_deficit_game();
        assert_eq!(g.marginal(1, coalition_of(&[2, 3])).unwrap(), 1.0);
    }

    #[test]
    fn decomposition_of_unanimity_is_unit_coordinate() {
        let r = coalition_of(&[1, 3]);
        let d = UnanimityDecomposition::of(&Game::unanimity(3, r).unwrap());
        for (&mask, &c) in d.coefficients() {
            let expected = if mask == r { 1.0 } else { 0.0 };
            assert!((c - expected).abs() < 1e-12, "c_{mask:b} = {c}");
        }
    }

    #[test]
    fn decomposition_of_additive_game_is_singleton_supported() {
        let g = Game::additive(&[2.0, 0.5, 1.25]).unwrap();
        let d = UnanimityDecomposition::of(&g);
        assert!((d.coefficient(coalition_of(&[1])) - 2.0).abs() < 1e-12);
        assert!((d.coefficient(coalition_of(&[2])) - 0.5).abs() < 1e-12);
        assert!((d.coefficient(coalition_of(&[3])) - 1.25).abs() < 1e-12);
        for (&mask, &c) in d.coefficients() {
            if mask.count_ones() >= 2 {
                assert!(c.abs() < 1e-12, "c_{mask:b} = {c}");
            }
        }
    }

    #[test]
    fn decomposition_roundtrip_on_deficit_example() {
        let g = paper_deficit_game();
        let back = UnanimityDecomposition::of(&g).reconstruct().unwrap();
        for mask in 0..8usize {
            assert!((back.values()[mask] - g.values()[mask]).abs() < ABS_TOL);
        }
    }

    #[test]
    fn reconstruct_single_coefficient_and_zero() {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(0b11u32, 1.0);
        let d = UnanimityDecomposition::from_coefficients(2, coeffs).unwrap();
        let g = d.reconstruct().unwrap();
        assert_eq!(g.values(), Game::unanimity(2, 0b11).unwrap().values());

        let d = UnanimityDecomposition::from_coefficients(2, BTreeMap::new()).unwrap();
        assert_eq!(d.reconstruct().unwrap().values(), Game::zero(2).values());
    }

    #[test]
    fn classify_additive() {
        let g = Game::additive(&[1.0, 2.0]).unwrap();
        let p = g.profile();
        assert!(p.is_additive);
        assert!(p.is_monotone);
        assert!(p.null_players.is_empty());
    }

    #[test]
    fn classify_unanimity() {
        let r = coalition_of(&[1, 2]);
        let p = Game::unanimity(3, r).unwrap().profile();
        assert!(!p.is_additive);
        assert_eq!(p.null_players, vec![3]);
        assert!(p.interchangeable_pairs.contains(&(1, 2)));
        assert_eq!(p.unanimity_scaled, Some((1.0, r)));
    }

    #[test]
    fn classify_deficit_example() {
        let p = paper_deficit_game().profile();
        assert!(!p.is_additive);
        assert!(p.null_players.is_empty());
        // v({1}) = v({3}) and v({1,2}) = v({2,3}), so 1 and 3 are
        // interchangeable; no other pair is.
        assert_eq!(p.interchangeable_pairs, vec![(1, 3)]);
        assert!(p.unanimity_scaled.is_none());
    }

    #[test]
    fn json_format_round_trips_bit_exactly() {
        let g = paper_deficit_game();
        let json = serde_json::to_string(&g).unwrap();
        assert!(json.contains("\"n\":3"));
        assert!(json.contains("\"values\":[0.0,1.0,1.0,4.0,1.0,2.0,4.0,5.0]"));
        let back: Game = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn json_rejects_invalid_games() {
        let bad = r#"{"n": 2, "values": [0.5, 1, 1, 2], "monotone": false}"#;
        assert!(serde_json::from_str::<Game>(bad).is_err());
        let bad = r#"{"n": 2, "values": [0, 3, 1, 2], "monotone": true}"#;
        assert!(serde_json::from_str::<Game>(bad).is_err());
        let ok = r#"{"n": 2, "values": [0, 3, 1, 2], "monotone": false}"#;
        assert!(serde_json::from_str::<Game>(ok).is_ok());
    }
}
