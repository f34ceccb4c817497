//! Game files.
//!
//! ```json
//! {
//!   "name": "example1",
//!   "players": [
//!     { "name": "Row", "actions": ["T", "M", "B"] },
//!     { "name": "Col", "actions": ["L", "M", "R"] }
//!   ],
//!   "payoffs": [[0, 0, 0.85, 1, 0, 0, 0.75, 0, 0], [0, 1, 0.75, 0, 0, 0, 0.85, 0, 0]],
//!   "normalize": false
//! }
//! ```
//!
//! `payoffs[i]` lists player `i`'s payoff for every joint action, player 0's
//! action varying slowest. Entries are JSON numbers or `"p/q"` strings.
//! With `normalize: true` each player's payoffs are mapped affinely onto
//! `[0, 1]` after loading.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::game::{normalize_payoffs, ActionSpace, Game};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub actions: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PayoffValue {
    Number(serde_json::Number),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub players: Vec<PlayerSpec>,
    pub payoffs: Vec<Vec<PayoffValue>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub normalize: bool,
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema { path: path.into(), message: message.into() }
}

impl GameFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            schema(if path == "." { String::new() } else { path }, e.into_inner().to_string())
        })
    }

    pub fn to_game<T: Scalar>(&self) -> Result<Game<T>> {
        if self.players.len() < 2 {
            return Err(schema("players", "at least two players are required"));
        }
        for (i, p) in self.players.iter().enumerate() {
            if p.actions.is_empty() {
                return Err(schema(format!("players[{i}].actions"), "no actions listed"));
            }
        }
        let space = ActionSpace::new(self.players.iter().map(|p| p.actions.len()).collect())?;
        if self.payoffs.len() != self.players.len() {
            return Err(schema(
                "payoffs",
                format!("expected {} payoff vectors, found {}", self.players.len(), self.payoffs.len()),
            ));
        }
        let mut rows = Vec::with_capacity(self.payoffs.len());
        for (i, row) in self.payoffs.iter().enumerate() {
            if row.len() != space.joint_count() {
                return Err(schema(
                    format!("payoffs[{i}]"),
                    format!("expected {} entries, found {}", space.joint_count(), row.len()),
                ));
            }
            let parsed = row
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    let text = match v {
                        PayoffValue::Number(n) => n.to_string(),
                        PayoffValue::Text(s) => s.clone(),
                    };
                    T::parse(&text)
                        .filter(Scalar::is_finite)
                        .ok_or_else(|| schema(format!("payoffs[{i}][{j}]"), format!("`{text}` is not a finite number")))
                })
                .collect::<Result<Vec<T>>>()?;
            rows.push(parsed);
        }
        let labels = self.players.iter().map(|p| p.actions.clone()).collect();
        let name = self.name.clone().unwrap_or_else(|| "game".into());
        let game = Game::new(name, labels, rows).map_err(|e| schema("players", e.to_string()))?;
        Ok(if self.normalize { normalize_payoffs(&game) } else { game })
    }

    /// File form of `game`. Values exactly representable as decimals are
    /// written as numbers, others as `"p/q"`.
    pub fn from_game<T: Scalar>(game: &Game<T>) -> Self {
        let players = game
            .labels()
            .iter()
            .enumerate()
            .map(|(i, actions)| PlayerSpec { name: Some(format!("player{}", i + 1)), actions: actions.clone() })
            .collect();
        let payoffs = game
            .payoff_rows()
            .iter()
            .map(|row| row.iter().map(encode_value).collect())
            .collect();
        Self { name: Some(game.name().to_string()), players, payoffs, normalize: false }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("game files serialize")
    }
}

fn encode_value<T: Scalar>(v: &T) -> PayoffValue {
    let f = v.to_f64_lossy();
    match serde_json::Number::from_f64(f) {
        Some(n) if T::from_decimal(f).as_ref() == Some(v) => PayoffValue::Number(n),
        _ => PayoffValue::Text(v.to_string()),
    }
}

pub fn parse_game<T: Scalar>(text: &str) -> Result<Game<T>> {
    GameFile::from_json(text)?.to_game()
}

pub fn load_game<T: Scalar>(path: &Path) -> Result<Game<T>> {
    parse_game(&std::fs::read_to_string(path)?)
}

pub fn save_game<T: Scalar>(game: &Game<T>, path: &Path) -> Result<()> {
    std::fs::write(path, GameFile::from_game(game).to_json())?;
    Ok(())
}

/// Git-style content hash: `sha256("blob <len>\0" ++ bytes)`, lowercase hex.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
