use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Right,
    Left,
}

impl Side {
    /// +1 for right, −1 for left; matches the sign convention of Δφ.
    pub fn sign(self) -> f64 {
        match self {
            Side::Right => 1.0,
            Side::Left => -1.0,
        }
    }
}

/// Leg label. `R1`/`L1` are the front pair; the master CPG drives `R1`.
///
/// On the quadruped only `R1`, `R2`, `L1`, `L2` exist, with `*2` the hind legs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LegId {
    R1,
    R2,
    R3,
    L1,
    L2,
    L3,
}

impl LegId {
    pub const ALL: [LegId; 6] = [LegId::R1, LegId::R2, LegId::R3, LegId::L1, LegId::L2, LegId::L3];

    pub fn side(self) -> Side {
        match self {
            LegId::R1 | LegId::R2 | LegId::R3 => Side::Right,
            LegId::L1 | LegId::L2 | LegId::L3 => Side::Left,
        }
    }

    /// Position along the body counted from the front, starting at 1.
    pub fn segment(self) -> usize {
        match self {
            LegId::R1 | LegId::L1 => 1,
            LegId::R2 | LegId::L2 => 2,
            LegId::R3 | LegId::L3 => 3,
        }
    }

    pub fn mirror(self) -> LegId {
        match self {
            LegId::R1 => LegId::L1,
            LegId::R2 => LegId::L2,
            LegId::R3 => LegId::L3,
            LegId::L1 => LegId::R1,
            LegId::L2 => LegId::R2,
            LegId::L3 => LegId::R3,
        }
    }

    pub fn from_parts(side: Side, segment: usize) -> Option<LegId> {
        match (side, segment) {
            (Side::Right, 1) => Some(LegId::R1),
            (Side::Right, 2) => Some(LegId::R2),
            (Side::Right, 3) => Some(LegId::R3),
            (Side::Left, 1) => Some(LegId::L1),
            (Side::Left, 2) => Some(LegId::L2),
            (Side::Left, 3) => Some(LegId::L3),
            _ => None,
        }
    }
}

impl fmt::Display for LegId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LegId::R1 => "R1",
            LegId::R2 => "R2",
            LegId::R3 => "R3",
            LegId::L1 => "L1",
            LegId::L2 => "L2",
            LegId::L3 => "L3",
        };
        f.write_str(s)
    }
}

impl FromStr for LegId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "R1" => Ok(LegId::R1),
            "R2" => Ok(LegId::R2),
            "R3" => Ok(LegId::R3),
            "L1" => Ok(LegId::L1),
            "L2" => Ok(LegId::L2),
            "L3" => Ok(LegId::L3),
            other => Err(Error::InvalidArgument(format!("unknown leg '{other}'"))),
        }
    }
}

/// Parses a leg list such as `R1,L2` or `R1 L2`. An empty string is the empty list.
pub fn parse_legs(s: &str) -> Result<Vec<LegId>> {
    s.split(|c: char| c == ',' || c == '+' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Morphology {
    #[default]
    Hexapod,
    Quadruped,
}

impl Morphology {
    pub fn legs(self) -> &'static [LegId] {
        match self {
            Morphology::Hexapod => &LegId::ALL,
            Morphology::Quadruped => &[LegId::R1, LegId::R2, LegId::L1, LegId::L2],
        }
    }

    pub fn segments(self) -> usize {
        match self {
            Morphology::Hexapod => 3,
            Morphology::Quadruped => 2,
        }
    }

    pub fn has_leg(self, leg: LegId) -> bool {
        self.legs().contains(&leg)
    }

    /// Same-side legs directly in front of or behind `leg`.
    pub fn ipsilateral_neighbours(self, leg: LegId) -> Vec<LegId> {
        let seg = leg.segment();
        [seg.checked_sub(1), Some(seg + 1)]
            .into_iter()
            .flatten()
            .filter(|&s| s >= 1 && s <= self.segments())
            .filter_map(|s| LegId::from_parts(leg.side(), s))
            .collect()
    }
}

impl fmt::Display for Morphology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Morphology::Hexapod => "hexapod",
            Morphology::Quadruped => "quadruped",
        })
    }
}

impl FromStr for Morphology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hexapod" => Ok(Morphology::Hexapod),
            "quadruped" => Ok(Morphology::Quadruped),
            other => Err(Error::InvalidArgument(format!("unknown morphology '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbours() {
        let h = Morphology::Hexapod;
        assert_eq!(h.ipsilateral_neighbours(LegId::R1), vec![LegId::R2]);
        assert_eq!(h.ipsilateral_neighbours(LegId::L2), vec![LegId::L1, LegId::L3]);
        assert_eq!(Morphology::Quadruped.ipsilateral_neighbours(LegId::R2), vec![LegId::R1]);
    }

    #[test]
    fn parse_and_mirror() {
        assert_eq!(parse_legs("r1, L2").unwrap(), vec![LegId::R1, LegId::L2]);
        assert!(parse_legs("").unwrap().is_empty());
        assert!(parse_legs("R4").is_err());
        for l in LegId::ALL {
            assert_eq!(l.mirror().mirror(), l);
            assert_ne!(l.mirror().side(), l.side());
        }
    }
}
