//! Events in the `(z₁, z₂)` plane: finite unions of axis-aligned half-planes
//! and rectangles.
//!
//! Textual form, pieces joined by `|`:
//!
//! ```text
//! z1>=1.5            half-plane
//! z2<=-1             half-plane
//! rect(a1,b1,a2,b2)  [a1,b1] x [a2,b2]
//! linf>0.5           |z1| > 0.5 or |z2| > 0.5 (four half-planes)
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Z1,
    Z2,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::Z1 => 0,
            Axis::Z2 => 1,
        }
    }

    pub fn other(self) -> Axis {
        match self {
            Axis::Z1 => Axis::Z2,
            Axis::Z2 => Axis::Z1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum RegionPiece {
    /// `z[axis] >= bound` when `upper`, `z[axis] <= bound` otherwise.
    HalfPlane { axis: Axis, bound: f64, upper: bool },
    /// `lo[i] <= z[i] <= hi[i]`.
    Rectangle { lo: [f64; 2], hi: [f64; 2] },
}

impl RegionPiece {
    pub fn contains(&self, z: [f64; 2]) -> bool {
        match *self {
            RegionPiece::HalfPlane { axis, bound, upper } => {
                let v = z[axis.index()];
                if upper {
                    v >= bound
                } else {
                    v <= bound
                }
            }
            RegionPiece::Rectangle { lo, hi } => (0..2).all(|i| lo[i] <= z[i] && z[i] <= hi[i]),
        }
    }

    pub fn is_empty(&self) -> bool {
        match *self {
            RegionPiece::HalfPlane { bound, .. } => bound.is_nan(),
            RegionPiece::Rectangle { lo, hi } => (0..2).any(|i| !(lo[i] <= hi[i])),
        }
    }
}

impl fmt::Display for RegionPiece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            RegionPiece::HalfPlane { axis, bound, upper } => {
                let name = match axis {
                    Axis::Z1 => "z1",
                    Axis::Z2 => "z2",
                };
                let op = if upper { ">=" } else { "<=" };
                write!(f, "{name}{op}{bound}")
            }
            RegionPiece::Rectangle { lo, hi } => {
                write!(f, "rect({},{},{},{})", lo[0], hi[0], lo[1], hi[1])
            }
        }
    }
}

/// Union of pieces. The empty union is the empty set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Region {
    pub pieces: Vec<RegionPiece>,
}

impl Region {
    pub fn new(pieces: Vec<RegionPiece>) -> Self {
        Self { pieces }
    }

    pub fn half_plane(axis: Axis, bound: f64, upper: bool) -> Self {
        Self::new(vec![RegionPiece::HalfPlane { axis, bound, upper }])
    }

    pub fn rectangle(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Self::new(vec![RegionPiece::Rectangle { lo, hi }])
    }

    /// `{z : max(|z₁ − c₁|, |z₂ − c₂|) > r}`.
    pub fn linf_outside(center: [f64; 2], r: f64) -> Self {
        let mut pieces = Vec::with_capacity(4);
        for axis in [Axis::Z1, Axis::Z2] {
            let c = center[axis.index()];
            pieces.push(RegionPiece::HalfPlane {
                axis,
                bound: c + r,
                upper: true,
            });
            pieces.push(RegionPiece::HalfPlane {
                axis,
                bound: c - r,
                upper: false,
            });
        }
        Self::new(pieces)
    }

    pub fn contains(&self, z: [f64; 2]) -> bool {
        self.pieces.iter().any(|p| p.contains(z))
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.iter().all(|p| p.is_empty())
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.pieces.iter().map(|p| p.to_string()).collect();
        f.write_str(&parts.join("|"))
    }
}

fn number(s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("expected a number, found {s:?}")))?;
    if v.is_nan() {
        return Err(Error::Parse("NaN is not a valid bound".into()));
    }
    Ok(v)
}

fn parse_piece(text: &str, out: &mut Vec<RegionPiece>) -> Result<()> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if let Some(inner) = s.strip_prefix("rect(").and_then(|r| r.strip_suffix(')')) {
        let v: Vec<f64> = inner.split(',').map(number).collect::<Result<_>>()?;
        if v.len() != 4 {
            return Err(Error::Parse(format!(
                "rect needs four numbers, found {}",
                v.len()
            )));
        }
        out.push(RegionPiece::Rectangle {
            lo: [v[0], v[2]],
            hi: [v[1], v[3]],
        });
        return Ok(());
    }
    if let Some(rest) = s.strip_prefix("linf") {
        let r = rest
            .strip_prefix(">=")
            .or_else(|| rest.strip_prefix('>'))
            .ok_or_else(|| Error::Parse(format!("expected linf>r, found {s:?}")))?;
        out.extend(Region::linf_outside([0.0, 0.0], number(r)?).pieces);
        return Ok(());
    }
    let (axis, rest) = if let Some(r) = s.strip_prefix("z1") {
        (Axis::Z1, r)
    } else if let Some(r) = s.strip_prefix("z2") {
        (Axis::Z2, r)
    } else {
        return Err(Error::Parse(format!("unrecognised region piece {s:?}")));
    };
    let (upper, num) = if let Some(n) = rest.strip_prefix(">=") {
        (true, n)
    } else if let Some(n) = rest.strip_prefix("<=") {
        (false, n)
    } else if let Some(n) = rest.strip_prefix('>') {
        (true, n)
    } else if let Some(n) = rest.strip_prefix('<') {
        (false, n)
    } else {
        return Err(Error::Parse(format!("expected a comparison in {s:?}")));
    };
    out.push(RegionPiece::HalfPlane {
        axis,
        bound: number(num)?,
        upper,
    });
    Ok(())
}

impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().is_empty() {
            return Err(Error::Parse("empty region".into()));
        }
        let mut pieces = Vec::new();
        for part in s.split('|') {
            parse_piece(part, &mut pieces)?;
        }
        Ok(Region::new(pieces))
    }
}
