//! Points, axis-aligned boxes, box unions, affine maps and V-polytopes.
//!
//! Everything is exact. Box unions are normalized by cutting every box along
//! every coordinate value that occurs in any box of the union.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::hull;
use crate::rational::{fmt_rat, int, Rat, RatMatrix};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub coords: Vec<Rat>,
}

impl Point {
    pub fn new(coords: Vec<Rat>) -> Self {
        Self { coords }
    }

    pub fn from_i64(coords: &[i64]) -> Self {
        Self { coords: coords.iter().map(|&c| int(c)).collect() }
    }

    pub fn origin(d: usize) -> Self {
        Self { coords: vec![Rat::zero(); d] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn add(&self, other: &Point) -> Point {
        Point::new(self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point::new(self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, s: &Rat) -> Point {
        Point::new(self.coords.iter().map(|a| a * s).collect())
    }

    pub fn dot(&self, other: &Point) -> Rat {
        self.coords.iter().zip(&other.coords).fold(Rat::zero(), |acc, (a, b)| acc + a * b)
    }

    pub fn norm_sq(&self) -> Rat {
        self.dot(self)
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(fmt_rat).collect();
        write!(f, "({})", parts.join(", "))
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Closed axis-aligned box with nonempty interior.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct AxisBox {
    lo: Point,
    hi: Point,
}

impl AxisBox {
    pub fn new(lo: Point, hi: Point) -> Result<Self> {
        if lo.dim() != hi.dim() || lo.dim() == 0 {
            return Err(Error::Dimension("box corners differ in dimension".into()));
        }
        if lo.coords.iter().zip(&hi.coords).any(|(a, b)| a >= b) {
            return Err(Error::Invalid(format!("box {lo:?}..{hi:?} has empty interior")));
        }
        Ok(Self { lo, hi })
    }

    pub fn unit_cell(k: &[i64]) -> Self {
        let hi: Vec<i64> = k.iter().map(|v| v + 1).collect();
        Self { lo: Point::from_i64(k), hi: Point::from_i64(&hi) }
    }

    pub fn lo(&self) -> &Point {
        &self.lo
    }

    pub fn hi(&self) -> &Point {
        &self.hi
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn volume(&self) -> Rat {
        self.lo.coords.iter().zip(&self.hi.coords).fold(Rat::one(), |acc, (a, b)| acc * (b - a))
    }

    /// Measure of the intersection with another box.
    pub fn overlap(&self, other: &AxisBox) -> Rat {
        let mut v = Rat::one();
        for i in 0..self.dim() {
            let lo = self.lo.coords[i].clone().max(other.lo.coords[i].clone());
            let hi = self.hi.coords[i].clone().min(other.hi.coords[i].clone());
            if hi <= lo {
                return Rat::zero();
            }
            v *= hi - lo;
        }
        v
    }

    pub fn contains_point(&self, p: &Point) -> bool {
        (0..self.dim()).all(|i| self.lo.coords[i] <= p.coords[i] && p.coords[i] <= self.hi.coords[i])
    }

    pub fn corners(&self) -> Vec<Point> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| {
                Point::new(
                    (0..d)
                        .map(|i| if mask >> i & 1 == 1 { self.hi.coords[i].clone() } else { self.lo.coords[i].clone() })
                        .collect(),
                )
            })
            .collect()
    }

    pub fn translate(&self, t: &Point) -> AxisBox {
        AxisBox { lo: self.lo.add(t), hi: self.hi.add(t) }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct BoxUnion {
    pub boxes: Vec<AxisBox>,
}

impl BoxUnion {
    pub fn new(boxes: Vec<AxisBox>) -> Self {
        Self { boxes }
    }

    pub fn dim(&self) -> Option<usize> {
        self.boxes.first().map(AxisBox::dim)
    }

    fn check_dims(&self) -> Result<()> {
        if let Some(d) = self.dim() {
            if self.boxes.iter().any(|b| b.dim() != d) {
                return Err(Error::Dimension("boxes of different dimensions in one union".into()));
            }
        }
        Ok(())
    }

    pub fn bounding_box(&self) -> Option<AxisBox> {
        let first = self.boxes.first()?;
        let mut lo = first.lo.clone();
        let mut hi = first.hi.clone();
        for b in &self.boxes[1..] {
            for i in 0..lo.dim() {
                if b.lo.coords[i] < lo.coords[i] {
                    lo.coords[i] = b.lo.coords[i].clone();
                }
                if b.hi.coords[i] > hi.coords[i] {
                    hi.coords[i] = b.hi.coords[i].clone();
                }
            }
        }
        Some(AxisBox { lo, hi })
    }
}

/// Splits every box along every coordinate used by the union and returns the
/// distinct grid cells covered, in lexicographic order.
pub fn normalize_box_union(u: &BoxUnion) -> Result<BoxUnion> {
    u.check_dims()?;
    let Some(d) = u.dim() else { return Ok(BoxUnion::default()) };
    let mut cuts: Vec<Vec<Rat>> = vec![Vec::new(); d];
    for b in &u.boxes {
        for i in 0..d {
            cuts[i].push(b.lo.coords[i].clone());
            cuts[i].push(b.hi.coords[i].clone());
        }
    }
    for c in cuts.iter_mut() {
        c.sort();
        c.dedup();
    }
    let mut cells: BTreeSet<Vec<usize>> = BTreeSet::new();
    for b in &u.boxes {
        let ranges: Vec<(usize, usize)> = (0..d)
            .map(|i| {
                let lo = cuts[i].binary_search(&b.lo.coords[i]).expect("cut present");
                let hi = cuts[i].binary_search(&b.hi.coords[i]).expect("cut present");
                (lo, hi)
            })
            .collect();
        let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        loop {
            cells.insert(idx.clone());
            let mut axis = 0;
            loop {
                if axis == d {
                    break;
                }
                idx[axis] += 1;
                if idx[axis] < ranges[axis].1 {
                    break;
                }
                idx[axis] = ranges[axis].0;
                axis += 1;
            }
            if axis == d {
                break;
            }
        }
    }
    let boxes = cells
        .into_iter()
        .map(|c| AxisBox {
            lo: Point::new((0..d).map(|i| cuts[i][c[i]].clone()).collect()),
            hi: Point::new((0..d).map(|i| cuts[i][c[i] + 1].clone()).collect()),
        })
        .collect();
    Ok(BoxUnion { boxes })
}

pub fn measure(u: &BoxUnion) -> Result<Rat> {
    let n = normalize_box_union(u)?;
    Ok(n.boxes.iter().fold(Rat::zero(), |acc, b| acc + b.volume()))
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AffineMap {
    pub linear: RatMatrix,
    pub translate: Point,
}

impl AffineMap {
    pub fn new(linear: RatMatrix, translate: Point) -> Result<Self> {
        if !linear.is_square() || linear.rows() != translate.dim() {
            return Err(Error::Dimension("affine map shape mismatch".into()));
        }
        Ok(Self { linear, translate })
    }

    pub fn identity(d: usize) -> Self {
        Self { linear: RatMatrix::identity(d), translate: Point::origin(d) }
    }

    pub fn dim(&self) -> usize {
        self.translate.dim()
    }

    pub fn apply(&self, p: &Point) -> Point {
        Point::new(self.linear.apply(&p.coords)).add(&self.translate)
    }

    pub fn then(&self, outer: &AffineMap) -> AffineMap {
        AffineMap { linear: outer.linear.mul(&self.linear), translate: outer.apply(&self.translate) }
    }

    pub fn inverse(&self) -> Result<AffineMap> {
        let inv = self.linear.inverse()?;
        let t = Point::new(inv.apply(&self.translate.coords)).scale(&-Rat::one());
        Ok(AffineMap { linear: inv, translate: t })
    }
}

/// Convex polytope given by its extreme points in lexicographic order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VPolytope {
    vertices: Vec<Point>,
    affine_dim: usize,
}

impl VPolytope {
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn ambient_dim(&self) -> usize {
        self.vertices[0].dim()
    }

    pub fn affine_dim(&self) -> usize {
        self.affine_dim
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.affine_dim == self.ambient_dim()
    }

    /// Facet inequalities `n . x <= c` of a full-dimensional polytope.
    pub fn halfspaces(&self) -> Result<Vec<(Vec<Rat>, Rat)>> {
        if !self.is_full_dimensional() {
            return Err(Error::Invalid("halfspaces of a lower-dimensional polytope".into()));
        }
        let pts: Vec<Vec<Rat>> = self.vertices.iter().map(|p| p.coords.clone()).collect();
        Ok(hull::full_hull(&pts)?.facets)
    }

    pub fn contains(&self, p: &Point) -> Result<bool> {
        Ok(self.halfspaces()?.iter().all(|(n, c)| dot(n, &p.coords) <= *c))
    }

    pub fn map(&self, m: &AffineMap) -> Result<VPolytope> {
        convex_hull(&self.vertices.iter().map(|v| m.apply(v)).collect::<Vec<_>>())
    }
}

pub(crate) fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).fold(Rat::zero(), |acc, (x, y)| acc + x * y)
}

pub fn convex_hull(points: &[Point]) -> Result<VPolytope> {
    if points.is_empty() {
        return Err(Error::Empty("convex hull of no points".into()));
    }
    let d = points[0].dim();
    if points.iter().any(|p| p.dim() != d) {
        return Err(Error::Dimension("hull points differ in dimension".into()));
    }
    let uniq: Vec<Point> = points.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let raw: Vec<Vec<Rat>> = uniq.iter().map(|p| p.coords.clone()).collect();
    let (k, axes) = hull::affine_frame(&raw);
    let mut vertices: Vec<Point> = if k == 0 {
        vec![uniq[0].clone()]
    } else {
        let projected: Vec<Vec<Rat>> = raw.iter().map(|p| axes.iter().map(|&a| p[a].clone()).collect()).collect();
        let h = hull::full_hull(&projected)?;
        h.vertices.iter().map(|&i| uniq[i].clone()).collect()
    };
    vertices.sort();
    Ok(VPolytope { vertices, affine_dim: k })
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Volume {
    pub value: Rat,
    /// The polytope is not full-dimensional; the value is then zero.
    pub degenerate: bool,
}

pub fn polytope_volume(p: &VPolytope) -> Result<Volume> {
    if !p.is_full_dimensional() {
        return Ok(Volume { value: Rat::zero(), degenerate: true });
    }
    let pts: Vec<Vec<Rat>> = p.vertices.iter().map(|v| v.coords.clone()).collect();
    let h = hull::full_hull(&pts)?;
    Ok(Volume { value: h.volume.abs(), degenerate: false })
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum AffineImage {
    /// The linear part maps boxes to boxes.
    Boxes(BoxUnion),
    Polytopes(Vec<VPolytope>),
}

impl AffineImage {
    pub fn into_polytopes(self) -> Result<Vec<VPolytope>> {
        match self {
            AffineImage::Polytopes(p) => Ok(p),
            AffineImage::Boxes(u) => u.boxes.iter().map(box_polytope).collect(),
        }
    }
}

pub fn box_polytope(b: &AxisBox) -> Result<VPolytope> {
    convex_hull(&b.corners())
}

/// Image of one box under a map whose linear part is monomial.
pub fn map_box_monomial(m: &AffineMap, b: &AxisBox) -> AxisBox {
    let a = m.apply(&b.lo);
    let c = m.apply(&b.hi);
    let lo = Point::new(a.coords.iter().zip(&c.coords).map(|(x, y)| x.clone().min(y.clone())).collect());
    let hi = Point::new(a.coords.iter().zip(&c.coords).map(|(x, y)| x.clone().max(y.clone())).collect());
    AxisBox { lo, hi }
}

pub fn affine_image(m: &AffineMap, u: &BoxUnion) -> Result<AffineImage> {
    u.check_dims()?;
    if let Some(d) = u.dim() {
        if d != m.dim() {
            return Err(Error::Dimension("map and union dimensions differ".into()));
        }
    }
    if m.linear.determinant().is_zero() {
        return Err(Error::Singular);
    }
    if m.linear.is_monomial() {
        return Ok(AffineImage::Boxes(BoxUnion::new(u.boxes.iter().map(|b| map_box_monomial(m, b)).collect())));
    }
    let polys = u
        .boxes
        .iter()
        .map(|b| convex_hull(&b.corners().iter().map(|c| m.apply(c)).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    Ok(AffineImage::Polytopes(polys))
}
