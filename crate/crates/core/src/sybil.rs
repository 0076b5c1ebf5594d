//! Identity manipulations of a game: Sybil extensions (copy and split),
//! and player merges (reduced and collusion games).
//!
//! New identities always occupy the highest indices `n+1..=n+k` of the
//! extended game, and [`SybilExtension`] records which player spawned them so
//! attacker payoffs can be re-aggregated per real player.

use crate::game::{full_mask, members, player_bit, Coalition, Game, GameError};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SybilFamily {
    /// Every new identity substitutes for the original: a coalition holding
    /// any of them is valued as if it held the original player.
    Copy,
    /// The original contribution activates only when all `k+1` identities
    /// are present; otherwise the coalition is valued as if the player were
    /// absent entirely.
    Split,
}

impl SybilFamily {
    pub fn name(self) -> &'static str {
        match self {
            SybilFamily::Copy => "copy",
            SybilFamily::Split => "split",
        }
    }
}

/// An extended game built from `base` by giving `player` `k` extra
/// identities of the given family.
#[derive(Clone, Debug, PartialEq)]
pub struct SybilExtension {
    base: Game,
    player: usize,
    family: SybilFamily,
    k: usize,
    extended: Game,
}

impl SybilExtension {
    pub fn base(&self) -> &Game {
        &self.base
    }

    pub fn extended(&self) -> &Game {
        &self.extended
    }

    pub fn player(&self) -> usize {
        self.player
    }

    pub fn family(&self) -> SybilFamily {
        self.family
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// All identities controlled by the attacker: the original player plus
    /// the `k` fresh indices.
    pub fn attacker_identities(&self) -> Vec<usize> {
        let n = self.base.n();
        let mut ids = vec![self.player];
        ids.extend(n + 1..=n + self.k);
        ids
    }
}

impl Serialize for SybilExtension {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            base: &'a Game,
            player: usize,
            family: SybilFamily,
            k: usize,
        }
        Wire { base: &self.base, player: self.player, family: self.family, k: self.k }
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SybilExtension {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            base: Game,
            player: usize,
            family: SybilFamily,
            k: usize,
        }
        let w = Wire::deserialize(deserializer)?;
        extend(&w.base, w.player, w.family, w.k).map_err(serde::de::Error::custom)
    }
}

/// Builds the copy or split extension of `player` with `k >= 1` new
/// identities.
pub fn extend(
    game: &Game,
    player: usize,
    family: SybilFamily,
    k: usize,
) -> Result<SybilExtension, GameError> {
    game.check_player(player)?;
    if k == 0 {
        return Err(GameError::BadPlayer(0, game.n()));
    }
    let n = game.n();
    if n + k > crate::game::MAX_PLAYERS {
        return Err(GameError::TooManyPlayers(n + k));
    }
    let extended = extended_values(game, player, family, k);
    Ok(SybilExtension { base: game.clone(), player, family, k, extended })
}

pub fn copy_extension(game: &Game, player: usize, k: usize) -> Result<SybilExtension, GameError> {
    extend(game, player, SybilFamily::Copy, k)
}

pub fn split_extension(game: &Game, player: usize, k: usize) -> Result<SybilExtension, GameError> {
    extend(game, player, SybilFamily::Split, k)
}

/// One extension step adding a single identity; the building block for
/// chained (mixed) extensions.
pub fn extend_once(game: &Game, player: usize, family: SybilFamily) -> Result<Game, GameError> {
    game.check_player(player)?;
    if game.n() + 1 > crate::game::MAX_PLAYERS {
        return Err(GameError::TooManyPlayers(game.n() + 1));
    }
    Ok(extended_values(game, player, family, 1))
}

fn extended_values(game: &Game, player: usize, family: SybilFamily, k: usize) -> Game {
    let n = game.n();
    let new_n = n + k;
    let base_mask = full_mask(n);
    let sybil_mask = full_mask(new_n) & !base_mask;
    let pbit = player_bit(player);

    let values: Vec<f64> = (0..1u64 << new_n)
        .map(|raw| {
            let s = raw as Coalition;
            let old = match family {
                SybilFamily::Copy => {
                    if s & sybil_mask != 0 {
                        // Any copy present: value as if the original joined.
                        (s & base_mask) | pbit
                    } else {
                        s & base_mask
                    }
                }
                SybilFamily::Split => {
                    if s & (sybil_mask | pbit) == sybil_mask | pbit {
                        // All identities present: the original contributes.
                        s & base_mask
                    } else {
                        (s & base_mask) & !pbit
                    }
                }
            };
            game.value(old)
        })
        .collect();

    Game::new(new_n, values, game.monotone_flag())
        .expect("extensions of valid games are valid")
}

/// A game in which a set of original players has been merged into a single
/// fresh identity `p`, which always takes the highest index.
#[derive(Clone, Debug, PartialEq)]
pub struct MergedGame {
    game: Game,
    /// Index of the merged identity in the new game (always `game.n()`).
    merged_player: usize,
    /// `kept[j-1]` is the original index of new player `j`.
    kept: Vec<usize>,
}

impl MergedGame {
    pub fn game(&self) -> &Game {
        &self.game
    }

    pub fn merged_player(&self) -> usize {
        self.merged_player
    }

    pub fn kept_players(&self) -> &[usize] {
        &self.kept
    }

    /// New index of an original player that was not merged.
    pub fn new_index_of(&self, original: usize) -> Option<usize> {
        self.kept.iter().position(|&p| p == original).map(|j| j + 1)
    }
}

fn merge_players(game: &Game, merged: Coalition) -> Result<MergedGame, GameError> {
    if merged == 0 {
        return Err(GameError::EmptyUnanimitySet);
    }
    if merged & !game.full() != 0 {
        return Err(GameError::OutOfRange { mask: merged, n: game.n() });
    }
    let kept: Vec<usize> = members(game.full() & !merged).collect();
    let new_n = kept.len() + 1;
    let p = new_n;
    let pbit = player_bit(p);

    let values: Vec<f64> = (0..1u64 << new_n)
        .map(|raw| {
            let s = raw as Coalition;
            let mut old: Coalition = 0;
            for (j, &orig) in kept.iter().enumerate() {
                if s & player_bit(j + 1) != 0 {
                    old |= player_bit(orig);
                }
            }
            if s & pbit != 0 {
                old |= merged;
            }
            game.value(old)
        })
        .collect();

    let game = Game::new(new_n, values, game.monotone_flag())
        .expect("merges of valid games are valid");
    Ok(MergedGame { game, merged_player: p, kept })
}

/// The reduced game `v_p` over `(N \ K) ∪ {p}` where `p` stands for the
/// merged set `K`. General Sybil-proofness of an operator φ demands
/// `Σ_{i∈K} φ_i(v) <= φ_p(v_p)`: reporting `K` as separate identities must
/// not beat reporting the single merged identity.
pub fn reduced_game(game: &Game, k_set: Coalition) -> Result<MergedGame, GameError> {
    merge_players(game, k_set)
}

/// The collusion game `v_S` over `(N \ S) ∪ {p}` where `p` plays for the
/// whole coalition `S`. Collusion-proofness demands
/// `Σ_{i∈S} φ_i(v) >= φ_p(v_S)`: merging into one identity must not pay.
pub fn collusion_game(game: &Game, s_set: Coalition) -> Result<MergedGame, GameError> {
    merge_players(game, s_set)
}

/// Human-readable description of an extension, for witnesses.
pub fn describe_extension(player: usize, family: SybilFamily, k: usize) -> String {
    format!("{} extension of player {player} with {k} new identities", family.name())
}
