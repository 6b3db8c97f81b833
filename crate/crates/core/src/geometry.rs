//! 2D vectors, axis-aligned boxes and integer quadtree cell coordinates.
//!
//! Cell adjacency is decided in integer arithmetic: both cells are rescaled to
//! the finer of the two depths and their closed index intervals are compared.
//! No floating-point tolerance is involved anywhere in adjacency.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deepest level a [`CellCoord`] may address. Keeps `ix << delta` inside `u64`.
pub const MAX_CELL_DEPTH: u32 = 30;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl SubAssign for Vec2 {
    #[inline]
    fn sub_assign(&mut self, rhs: Vec2) {
        self.x -= rhs.x;
        self.y -= rhs.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn div(self, k: f64) -> Vec2 {
        Vec2::new(self.x / k, self.y / k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Closed axis-aligned box `[min.x, max.x] × [min.y, max.y]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb {
    pub fn new(min: Vec2, max: Vec2) -> Result<Self> {
        let b = Self { min, max };
        b.validate()?;
        Ok(b)
    }

    /// `[0, 1]²`
    pub const fn unit() -> Self {
        Self {
            min: Vec2::new(0.0, 0.0),
            max: Vec2::new(1.0, 1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::InvalidBox("non-finite corner".into()));
        }
        if self.min.x > self.max.x || self.min.y > self.max.y {
            return Err(Error::InvalidBox(format!(
                "min {:?} exceeds max {:?}",
                self.min, self.max
            )));
        }
        Ok(())
    }

    /// Smallest box covering every point, `None` for an empty iterator.
    pub fn covering<I: IntoIterator<Item = Vec2>>(points: I) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut b = Self {
            min: first,
            max: first,
        };
        for p in it {
            b.min.x = b.min.x.min(p.x);
            b.min.y = b.min.y.min(p.y);
            b.max.x = b.max.x.max(p.x);
            b.max.y = b.max.y.max(p.y);
        }
        Some(b)
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    #[inline]
    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    #[inline]
    pub fn center(&self) -> Vec2 {
        Vec2::new(
            0.5 * (self.min.x + self.max.x),
            0.5 * (self.min.y + self.max.y),
        )
    }

    /// Closed containment.
    #[inline]
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Squared distance from `p` to the closest point of the box (0 inside).
    ///
    /// Monotone under rounding: for any `q` inside the box the result never
    /// exceeds `(q - p).norm_sq()` as computed in floating point.
    #[inline]
    pub fn distance_sq_to(&self, p: Vec2) -> f64 {
        let dx = (self.min.x - p.x).max(0.0).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(0.0).max(p.y - self.max.y);
        dx * dx + dy * dy
    }
}

/// True iff the closed boxes intersect (shared edges and corners count).
#[inline]
pub fn boxes_overlap_or_touch(a: &Aabb, b: &Aabb) -> bool {
    a.min.x <= b.max.x && b.min.x <= a.max.x && a.min.y <= b.max.y && b.min.y <= a.max.y
}

/// Exact identity of a quadtree cell: `ix, iy < 2^depth`.
///
/// Ordering is lexicographic on `(depth, ix, iy)`. Serialized as
/// `[depth, ix, iy]`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[u32; 3]", into = "[u32; 3]")]
pub struct CellCoord {
    depth: u32,
    ix: u32,
    iy: u32,
}

impl CellCoord {
    pub const ROOT: CellCoord = CellCoord {
        depth: 0,
        ix: 0,
        iy: 0,
    };

    pub fn new(depth: u32, ix: u32, iy: u32) -> Result<Self> {
        if depth > MAX_CELL_DEPTH {
            return Err(Error::InvalidCell(format!(
                "depth {depth} exceeds {MAX_CELL_DEPTH}"
            )));
        }
        let side = 1u64 << depth;
        if u64::from(ix) >= side || u64::from(iy) >= side {
            return Err(Error::InvalidCell(format!(
                "({depth}, {ix}, {iy}) outside a 2^{depth} grid"
            )));
        }
        Ok(Self { depth, ix, iy })
    }

    #[inline]
    pub fn depth(&self) -> u32 {
        self.depth
    }

    #[inline]
    pub fn ix(&self) -> u32 {
        self.ix
    }

    #[inline]
    pub fn iy(&self) -> u32 {
        self.iy
    }

    /// Child in quadrant `(qx, qy)`, each 0 or 1.
    ///
    /// Panics past [`MAX_CELL_DEPTH`].
    #[inline]
    pub fn child(&self, qx: u32, qy: u32) -> CellCoord {
        assert!(self.depth < MAX_CELL_DEPTH, "cell depth overflow");
        debug_assert!(qx < 2 && qy < 2);
        CellCoord {
            depth: self.depth + 1,
            ix: 2 * self.ix + qx,
            iy: 2 * self.iy + qy,
        }
    }

    /// Children in the fixed order `(0,0), (1,0), (0,1), (1,1)`.
    pub fn children(&self) -> [CellCoord; 4] {
        [
            self.child(0, 0),
            self.child(1, 0),
            self.child(0, 1),
            self.child(1, 1),
        ]
    }

    pub fn parent(&self) -> Option<CellCoord> {
        (self.depth > 0).then(|| CellCoord {
            depth: self.depth - 1,
            ix: self.ix / 2,
            iy: self.iy / 2,
        })
    }

    /// Closed index intervals on both axes at `depth >= self.depth`.
    #[inline]
    fn span_at(&self, depth: u32) -> ([u64; 2], [u64; 2]) {
        let shift = depth - self.depth;
        let x = u64::from(self.ix) << shift;
        let y = u64::from(self.iy) << shift;
        let w = 1u64 << shift;
        ([x, x + w], [y, y + w])
    }

    /// Closed-box intersection in integer arithmetic. Nested and equal cells
    /// touch.
    #[inline]
    pub fn touches(&self, other: &CellCoord) -> bool {
        let depth = self.depth.max(other.depth);
        let (ax, ay) = self.span_at(depth);
        let (bx, by) = other.span_at(depth);
        ax[0] <= bx[1] && bx[0] <= ax[1] && ay[0] <= by[1] && by[0] <= ay[1]
    }

    /// True if `other` is this cell or lies inside it.
    pub fn contains_cell(&self, other: &CellCoord) -> bool {
        if other.depth < self.depth {
            return false;
        }
        let shift = other.depth - self.depth;
        (other.ix >> shift) == self.ix && (other.iy >> shift) == self.iy
    }
}

impl fmt::Debug for CellCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.depth, self.ix, self.iy)
    }
}

impl fmt::Display for CellCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.depth, self.ix, self.iy)
    }
}

impl TryFrom<[u32; 3]> for CellCoord {
    type Error = Error;
    fn try_from([depth, ix, iy]: [u32; 3]) -> Result<Self> {
        CellCoord::new(depth, ix, iy)
    }
}

impl From<CellCoord> for [u32; 3] {
    fn from(c: CellCoord) -> Self {
        [c.depth, c.ix, c.iy]
    }
}

/// Sub-box of `root` addressed by `c` under regular 4-way bisection.
pub fn cell_box(root: &Aabb, c: CellCoord) -> Aabb {
    let scale = (1u64 << c.depth) as f64;
    let w = root.width();
    let h = root.height();
    let x0 = f64::from(c.ix);
    let y0 = f64::from(c.iy);
    Aabb {
        min: Vec2::new(root.min.x + w * (x0 / scale), root.min.y + h * (y0 / scale)),
        max: Vec2::new(
            root.min.x + w * ((x0 + 1.0) / scale),
            root.min.y + h * ((y0 + 1.0) / scale),
        ),
    }
}

/// Face, edge or corner contact between two distinct cells.
///
/// Intended for leaf sets, where interiors are disjoint; nested cells report
/// `true` since their closed boxes intersect.
pub fn cells_adjacent(a: CellCoord, b: CellCoord) -> Result<bool> {
    if a == b {
        return Err(Error::SameCell(a));
    }
    Ok(a.touches(&b))
}
