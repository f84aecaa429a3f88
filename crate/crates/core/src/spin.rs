//! Spins, models and the 0/1 face weight.
//!
//! A site is either `Vacant` or `Occupied`. A model is a set of forbidden
//! occupied-pair directions; the weight of a unit lattice cell (a *face*) is
//! 1 exactly when none of its six site pairs is a forbidden occupied pair.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Spin {
    Vacant = 0,
    Occupied = 1,
}

impl Spin {
    pub fn from_bit(b: u8) -> Spin {
        if b == 0 {
            Spin::Vacant
        } else {
            Spin::Occupied
        }
    }

    pub fn bit(self) -> u8 {
        self as u8
    }

    pub fn occupied(self) -> bool {
        self == Spin::Occupied
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bit())
    }
}

/// Directions a pair of neighbouring sites can take, as seen from the face:
/// `Horizontal` is along the transfer axis, `Vertical` along the cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Horizontal,
    Vertical,
    DiagonalNe,
    DiagonalNw,
}

/// The three lattice models. Each forbids occupied pairs in a fixed set of
/// directions:
///
/// * hard squares: horizontal and vertical;
/// * non-attacking kings: horizontal, vertical and both diagonals;
/// * read-write isolated memory: horizontal and both diagonals — vertical
///   (within-cut) adjacency is allowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    HardSquares,
    Nak,
    Rwim,
}

pub const ALL_MODELS: [Model; 3] = [Model::HardSquares, Model::Nak, Model::Rwim];

impl Model {
    pub fn forbids(self, dir: Direction) -> bool {
        use Direction::*;
        match self {
            Model::HardSquares => matches!(dir, Horizontal | Vertical),
            Model::Nak => true,
            Model::Rwim => matches!(dir, Horizontal | DiagonalNe | DiagonalNw),
        }
    }

    /// Canonical CLI/file token.
    pub fn token(self) -> &'static str {
        match self {
            Model::HardSquares => "hard-squares",
            Model::Nak => "nak",
            Model::Rwim => "rwim",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownModel(pub String);

impl fmt::Display for UnknownModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown model token `{}` (expected hard-squares, nak or rwim)",
            self.0
        )
    }
}

impl std::error::Error for UnknownModel {}

impl FromStr for Model {
    type Err = UnknownModel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hard-squares" => Ok(Model::HardSquares),
            "nak" => Ok(Model::Nak),
            "rwim" => Ok(Model::Rwim),
            other => Err(UnknownModel(other.to_string())),
        }
    }
}

/// Boundary condition of a width-`w` cut: periodic ring or open path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Cyclic,
    Path,
}

/// One unit cell of the lattice. `a`,`b` sit on the new column, `c`,`d` on
/// the old one: `a` top-left, `b` top-right, `c` bottom-left, `d`
/// bottom-right, so the transfer step moves `(c,d)` horizontal pairs into
/// `(a,b)` ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Face {
    pub a: Spin,
    pub b: Spin,
    pub c: Spin,
    pub d: Spin,
}

/// Whether the ordered site pair `(x, y)` along `dir` is allowed: a pair is
/// illegal only when both sites are occupied and the model forbids that
/// direction.
pub fn pair_legal(model: Model, x: Spin, y: Spin, dir: Direction) -> bool {
    !(x.occupied() && y.occupied() && model.forbids(dir))
}

/// 0/1 weight of a face: the product of `pair_legal` over all six site
/// pairs of the cell — verticals `(c,a)` and `(d,b)`, horizontals `(c,d)`
/// and `(a,b)`, diagonals `(c,b)` (NE) and `(d,a)` (NW).
pub fn face_weight(model: Model, face: Face) -> u8 {
    let Face { a, b, c, d } = face;
    let ok = pair_legal(model, c, a, Direction::Vertical)
        && pair_legal(model, d, b, Direction::Vertical)
        && pair_legal(model, c, d, Direction::Horizontal)
        && pair_legal(model, a, b, Direction::Horizontal)
        && pair_legal(model, c, b, Direction::DiagonalNe)
        && pair_legal(model, d, a, Direction::DiagonalNw);
    ok as u8
}

/// Convenience form of [`face_weight`] on raw bits, in the same
/// `(a b; c d)` order.
pub fn face_weight_bits(model: Model, a: u8, b: u8, c: u8, d: u8) -> u8 {
    face_weight(
        model,
        Face {
            a: Spin::from_bit(a),
            b: Spin::from_bit(b),
            c: Spin::from_bit(c),
            d: Spin::from_bit(d),
        },
    )
}

/// Whether a single cut of `m >= 2` spins is legal on its own, i.e. no
/// vertical-direction violation between neighbours within the cut. For the
/// `Path` boundary only non-wrapping neighbours are checked.
pub fn column_legal(model: Model, spins: &[Spin], boundary: Boundary) -> bool {
    debug_assert!(spins.len() >= 2, "column_legal expects m >= 2");
    if !model.forbids(Direction::Vertical) {
        return true;
    }
    let m = spins.len();
    let limit = match boundary {
        Boundary::Cyclic => m,
        Boundary::Path => m - 1,
    };
    for i in 0..limit {
        if !pair_legal(model, spins[i], spins[(i + 1) % m], Direction::Vertical) {
            return false;
        }
    }
    true
}

/// `column_legal` on the `w` low bits of `bits`, adjacent bits being
/// adjacent spins (wrapping bit w-1 to bit 0 for `Cyclic`). Legality is
/// invariant under reversing the cut, so this serves both LSB-first and
/// MSB-first encodings.
pub fn column_legal_bits(model: Model, bits: u64, w: usize, boundary: Boundary) -> bool {
    if !model.forbids(Direction::Vertical) {
        return true;
    }
    let limit = match boundary {
        Boundary::Cyclic => w,
        Boundary::Path => w - 1,
    };
    for i in 0..limit {
        if (bits >> i) & 1 == 1 && (bits >> ((i + 1) % w)) & 1 == 1 {
            return false;
        }
    }
    true
}
