//! Polyhedral cones, corners of grid sets, the lily witness search and
//! stationary vertices of self-affine tilings.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{affine_image, convex_hull, normalize_box_union, AffineImage, AffineMap, AxisBox, BoxUnion, Point};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::product::{GridSet, SelfAffineTiling};
use crate::rational::{Rat, RatMatrix};
use crate::verify::{tile_boxes, verify_tiling_exact, TilingVerdict};

/// Positive multiple of `v` with coprime integer entries.
fn primitive(v: &[Rat]) -> Vec<Rat> {
    let l = v.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints: Vec<BigInt> = v.iter().map(|c| (c * Rat::from_integer(l.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
    ints.into_iter().map(|c| Rat::from_integer(c / &g)).collect()
}

fn cross(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    vec![
        &a[1] * &b[2] - &a[2] * &b[1],
        &a[2] * &b[0] - &a[0] * &b[2],
        &a[0] * &b[1] - &a[1] * &b[0],
    ]
}

fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).fold(Rat::zero(), |acc, (x, y)| acc + x * y)
}

/// `target` is a nonnegative combination of `gens` (exact LP).
fn in_cone(gens: &[&Vec<Rat>], target: &[Rat]) -> bool {
    let d = target.len();
    let mut lp = LinearProgram::new(gens.len());
    for i in 0..d {
        lp.add(gens.iter().map(|g| g[i].clone()).collect(), Relation::Eq, target[i].clone());
    }
    lp.feasible_point().is_some()
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PolyCone {
    apex: Point,
    rays: Vec<Vec<Rat>>,
}

impl PolyCone {
    pub fn new(apex: Point, rays: Vec<Vec<Rat>>) -> Result<Self> {
        let d = apex.dim();
        if rays.is_empty() {
            return Err(Error::Empty("cone without rays".into()));
        }
        if rays.iter().any(|r| r.len() != d) {
            return Err(Error::Dimension("ray dimension differs from the apex".into()));
        }
        if rays.iter().any(|r| r.iter().all(Zero::is_zero)) {
            return Err(Error::Invalid("zero ray".into()));
        }
        Ok(Self { apex, rays })
    }

    pub fn from_i64(apex: &[i64], rays: &[Vec<i64>]) -> Result<Self> {
        Self::new(Point::from_i64(apex), rays.iter().map(|r| Point::from_i64(r).coords).collect())
    }

    pub fn apex(&self) -> &Point {
        &self.apex
    }

    pub fn rays(&self) -> &[Vec<Rat>] {
        &self.rays
    }

    pub fn dim(&self) -> usize {
        self.apex.dim()
    }

    pub fn is_nondegenerate(&self) -> bool {
        RatMatrix::from_rows(self.rays.clone()).map(|m| m.rank() == self.dim()).unwrap_or(false)
    }

    /// No line through the apex lies in the cone.
    pub fn is_pointed(&self) -> bool {
        let n = self.rays.len();
        let mut lp = LinearProgram::new(n);
        for i in 0..self.dim() {
            lp.add(self.rays.iter().map(|r| r[i].clone()).collect(), Relation::Eq, Rat::zero());
        }
        lp.add(vec![Rat::one(); n], Relation::Eq, Rat::one());
        lp.feasible_point().is_none()
    }

    /// Indices into `rays` of the extreme edges, in order.
    fn extreme_indices(&self) -> Vec<usize> {
        let prim: Vec<Vec<Rat>> = self.rays.iter().map(|r| primitive(r)).collect();
        let mut seen = BTreeSet::new();
        let uniq: Vec<usize> = (0..prim.len()).filter(|&i| seen.insert(prim[i].clone())).collect();
        if !self.is_pointed() {
            return uniq;
        }
        uniq.iter()
            .copied()
            .filter(|&i| {
                let others: Vec<&Vec<Rat>> = uniq.iter().filter(|&&j| j != i).map(|&j| &prim[j]).collect();
                others.is_empty() || !in_cone(&others, &prim[i])
            })
            .collect()
    }

    /// Duplicate directions and non-extreme rays removed; rays become
    /// primitive integer vectors. A cone that is not pointed only loses
    /// duplicates.
    pub fn canonical(&self) -> PolyCone {
        let keep = self.extreme_indices();
        PolyCone { apex: self.apex.clone(), rays: keep.iter().map(|&i| primitive(&self.rays[i])).collect() }
    }

    fn require_proper(&self) -> Result<()> {
        if !self.is_pointed() {
            return Err(Error::DegenerateCone("cone contains a line".into()));
        }
        if !self.is_nondegenerate() {
            return Err(Error::DegenerateCone("cone is not full-dimensional".into()));
        }
        Ok(())
    }

    /// Facets as sorted index sets into the canonical rays (d ≤ 3).
    pub fn facets(&self) -> Result<Vec<Vec<usize>>> {
        self.require_proper()?;
        let c = self.canonical();
        let n = c.rays.len();
        match c.dim() {
            1 => Ok(vec![vec![]]),
            2 => Ok((0..n).map(|i| vec![i]).collect()),
            3 => {
                let mut out = Vec::new();
                for i in 0..n {
                    for j in i + 1..n {
                        let normal = cross(&c.rays[i], &c.rays[j]);
                        let signs: Vec<i32> = (0..n)
                            .filter(|&k| k != i && k != j)
                            .map(|k| {
                                let s = dot(&normal, &c.rays[k]);
                                if s.is_positive() {
                                    1
                                } else if s.is_negative() {
                                    -1
                                } else {
                                    0
                                }
                            })
                            .collect();
                        let pos = signs.iter().any(|&s| s > 0);
                        let neg = signs.iter().any(|&s| s < 0);
                        if pos && neg {
                            continue;
                        }
                        if signs.contains(&0) {
                            return Err(Error::Invalid(format!("facet through rays {i},{j} is not simple")));
                        }
                        out.push(vec![i, j]);
                    }
                }
                Ok(out)
            }
            d => Err(Error::Unsupported(format!("facet enumeration in dimension {d}"))),
        }
    }
}

/// Exactly `d` extreme rays, linearly independent.
pub fn cone_is_simple(c: &PolyCone) -> Result<bool> {
    c.require_proper()?;
    let canon = c.canonical();
    Ok(canon.rays.len() == c.dim() && canon.is_nondegenerate())
}

pub fn extreme_vertices_of_boxes(u: &BoxUnion) -> Result<Vec<Point>> {
    let corners: Vec<Point> = u.boxes.iter().flat_map(|b| b.corners()).collect();
    Ok(convex_hull(&corners)?.vertices().to_vec())
}

/// Vertices of the convex hull, sorted.
pub fn extreme_vertices(g: &GridSet) -> Vec<Point> {
    extreme_vertices_of_boxes(&g.to_box_union()).expect("grid sets are nonempty")
}

/// At least `d + 1` extreme vertices (two in dimension one).
pub fn vertex_count_check(g: &GridSet) -> bool {
    extreme_vertices(g).len() > g.dim()
}

/// The local cone of a grid set at one of its extreme vertices.
#[derive(Clone, Debug)]
pub struct Corner {
    /// Hull of the local cone, canonical.
    pub cone: PolyCone,
    /// Sign patterns of the orthants of the incident cells.
    pub orthants: Vec<Vec<i8>>,
    pub convex: bool,
    pub pointed: bool,
    pub simple: bool,
}

fn integer_vertex(v: &Point) -> Result<Vec<i64>> {
    v.coords
        .iter()
        .map(|c| crate::rational::to_i64(c).ok_or_else(|| Error::Invalid(format!("{v} is not a grid point"))))
        .collect()
}

fn require_extreme(g: &GridSet, v: &Point) -> Result<()> {
    if v.dim() != g.dim() {
        return Err(Error::Dimension("vertex dimension differs from the set".into()));
    }
    if !extreme_vertices(g).contains(v) {
        return Err(Error::Invalid(format!("{v} is not an extreme vertex")));
    }
    Ok(())
}

pub fn corner_cone(g: &GridSet, v: &Point) -> Result<Corner> {
    require_extreme(g, v)?;
    let vi = integer_vertex(v)?;
    let d = g.dim();
    let mut orthants = Vec::new();
    for mask in 0..(1u32 << d) {
        // bit set: the cell lies below v along that axis
        let cell: Vec<i64> = (0..d).map(|i| vi[i] - i64::from((mask >> i) & 1)).collect();
        if g.contains(&cell) {
            orthants.push((0..d).map(|i| if (mask >> i) & 1 == 1 { -1 } else { 1 }).collect::<Vec<i8>>());
        }
    }
    let axis_signs: Vec<BTreeSet<i8>> = (0..d).map(|i| orthants.iter().map(|o| o[i]).collect()).collect();
    let product_size: usize = axis_signs.iter().map(BTreeSet::len).product();
    let convex = product_size == orthants.len();
    let mut rays = Vec::new();
    for (i, signs) in axis_signs.iter().enumerate() {
        for &s in signs {
            let mut r = vec![Rat::zero(); d];
            r[i] = Rat::from_integer(BigInt::from(s));
            rays.push(r);
        }
    }
    let cone = PolyCone::new(v.clone(), rays)?.canonical();
    let pointed = axis_signs.iter().all(|s| s.len() == 1);
    Ok(Corner { cone, orthants, convex, pointed, simple: pointed && convex })
}

/// A cone with one chosen point on every extreme edge.
#[derive(Clone, Debug)]
pub struct DirectedCone {
    cone: PolyCone,
    directing: Vec<Point>,
}

impl DirectedCone {
    /// `directing[i]` lies on ray `i` of `cone`. Non-extreme rays are dropped
    /// together with their points.
    pub fn new(cone: PolyCone, directing: Vec<Point>) -> Result<Self> {
        if directing.len() != cone.rays.len() {
            return Err(Error::Dimension("one directing point per ray".into()));
        }
        for (r, p) in cone.rays.iter().zip(&directing) {
            let w = p.sub(&cone.apex);
            if w.is_zero() || primitive(&w.coords) != primitive(r) {
                return Err(Error::Invalid(format!("directing point {p} is not on its ray")));
            }
        }
        let keep = cone.extreme_indices();
        let directing = keep.iter().map(|&i| directing[i].clone()).collect();
        Ok(Self { cone: cone.canonical(), directing })
    }

    /// Directing points at `apex + lengths[i]·rays[i]`.
    pub fn with_lengths(cone: PolyCone, lengths: &[Rat]) -> Result<Self> {
        if lengths.len() != cone.rays.len() {
            return Err(Error::Dimension("one length per ray".into()));
        }
        if lengths.iter().any(|l| !l.is_positive()) {
            return Err(Error::Invalid("directing lengths must be positive".into()));
        }
        let pts = cone.rays.iter().zip(lengths).map(|(r, l)| cone.apex.add(&Point::new(r.clone()).scale(l))).collect();
        Self::new(cone, pts)
    }

    pub fn cone(&self) -> &PolyCone {
        &self.cone
    }

    pub fn directing(&self) -> &[Point] {
        &self.directing
    }

    fn segment(&self, i: usize) -> Vec<Rat> {
        self.directing[i].sub(&self.cone.apex).coords
    }
}

/// `x` lies in the relative interior of both `a + P(facet_a)` and
/// `b + P(facet_b)`, where `P` is spanned by the directing segments of the
/// facet. The edge of `a` is not in `facet_a`, and likewise for `b`.
#[derive(Clone, Debug, PartialEq)]
pub struct LilyWitness {
    pub facet_a: Vec<usize>,
    pub facet_b: Vec<usize>,
    pub edge_a: usize,
    pub edge_b: usize,
    pub a: Point,
    pub b: Point,
    pub x: Point,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LilyOutcome {
    Simple,
    Witness(LilyWitness),
}

/// Coordinates of `x − shift` in the frame `dirs`, each strictly in (0, 1).
pub fn in_open_parallelepiped(x: &Point, shift: &Point, dirs: &[Vec<Rat>]) -> bool {
    let target = x.sub(shift).coords;
    let d = target.len();
    let k = dirs.len();
    let mut lp = LinearProgram::new(k);
    for i in 0..d {
        lp.add(dirs.iter().map(|v| v[i].clone()).collect(), Relation::Eq, target[i].clone());
    }
    let Some(lambda) = lp.feasible_point() else { return false };
    // the frame is independent, so the coordinates are unique
    let m = RatMatrix::from_rows(dirs.to_vec()).expect("rectangular frame");
    if m.rank() != k {
        return false;
    }
    lambda.iter().all(|l| l.is_positive() && l < &Rat::one())
}

/// Solves `α a₁ + Σ tᵢ bᵢ = β b₁ + Σ sᵢ aᵢ` with every coefficient positive,
/// `t₁ < β` and `s₁ < α`, maximizing the smallest slack.
fn lily_system(a: &[Vec<Rat>], b: &[Vec<Rat>]) -> Option<(Rat, Vec<Rat>, Rat, Vec<Rat>)> {
    let d = a[0].len();
    let k = a.len();
    // variables: α, β, t_1..t_k, s_1..s_k, z
    let nv = 3 + 2 * k;
    let (ia, ib, it, is, iz) = (0, 1, 2, 2 + k, 2 + 2 * k);
    let mut lp = LinearProgram::new(nv);
    for row in 0..d {
        let mut c = vec![Rat::zero(); nv];
        c[ia] += &a[0][row];
        c[ib] -= &b[0][row];
        for i in 0..k {
            c[it + i] += &b[i][row];
            c[is + i] -= &a[i][row];
        }
        lp.add(c, Relation::Eq, Rat::zero());
    }
    let unit = |i: usize| {
        let mut c = vec![Rat::zero(); nv];
        c[i] = Rat::one();
        c
    };
    for v in 0..iz {
        let mut c = unit(v);
        c[iz] = -Rat::one();
        lp.add(c, Relation::Ge, Rat::zero());
    }
    let mut c = unit(ib);
    c[it] = -Rat::one();
    c[iz] = -Rat::one();
    lp.add(c, Relation::Ge, Rat::zero());
    let mut c = unit(ia);
    c[is] = -Rat::one();
    c[iz] = -Rat::one();
    lp.add(c, Relation::Ge, Rat::zero());
    let mut total = vec![Rat::one(); nv];
    total[iz] = Rat::zero();
    lp.add(total, Relation::Le, Rat::one());
    lp.set_objective(unit(iz));
    match lp.maximize() {
        LpOutcome::Optimal { value, x } if value.is_positive() => {
            let mut alpha = x[ia].clone();
            let mut beta = x[ib].clone();
            let mut t = x[it..is].to_vec();
            let mut s = x[is..iz].to_vec();
            // all coefficients below one; the order conditions are scale free
            let max = t.iter().chain(&s).chain([&alpha, &beta]).max().cloned().unwrap();
            if max >= Rat::one() {
                let c = Rat::one() / (max * Rat::from_integer(BigInt::from(2)));
                alpha *= &c;
                beta *= &c;
                t.iter_mut().chain(s.iter_mut()).for_each(|v| *v *= &c);
            }
            Some((alpha, t, beta, s))
        }
        _ => None,
    }
}

fn solve_pair(dc: &DirectedCone, fa: &[usize], fb: &[usize], ea: usize, eb: usize) -> Option<LilyWitness> {
    let order = |f: &[usize], first: usize| -> Vec<usize> {
        std::iter::once(first).chain(f.iter().copied().filter(|&i| i != first)).collect()
    };
    let ra = order(fa, ea);
    let rb = order(fb, eb);
    let a: Vec<Vec<Rat>> = ra.iter().map(|&i| dc.segment(i)).collect();
    let b: Vec<Vec<Rat>> = rb.iter().map(|&i| dc.segment(i)).collect();
    let (_alpha, t, beta, _s) = lily_system(&a, &b)?;
    let apex = &dc.cone.apex;
    let mut x = apex.add(&Point::new(a[0].clone()));
    x = x.add(&Point::new(b[0].clone()).scale(&(Rat::one() - (&beta - &t[0]))));
    for i in 1..b.len() {
        x = x.add(&Point::new(b[i].clone()).scale(&t[i]));
    }
    Some(LilyWitness {
        facet_a: fb.to_vec(),
        facet_b: fa.to_vec(),
        edge_a: ea,
        edge_b: eb,
        a: dc.directing[ea].clone(),
        b: dc.directing[eb].clone(),
        x,
    })
}

/// Both interiority conditions, checked by coordinate solves.
pub fn check_lily_witness(dc: &DirectedCone, w: &LilyWitness) -> bool {
    let dirs = |f: &[usize]| f.iter().map(|&i| dc.segment(i)).collect::<Vec<_>>();
    w.edge_a != w.edge_b
        && !w.facet_a.contains(&w.edge_a)
        && !w.facet_b.contains(&w.edge_b)
        && dc.directing[w.edge_a] == w.a
        && dc.directing[w.edge_b] == w.b
        && in_open_parallelepiped(&w.x, &w.a, &dirs(&w.facet_a))
        && in_open_parallelepiped(&w.x, &w.b, &dirs(&w.facet_b))
}

/// Either the cone is simple, or two shifted directing parallelepipeds on
/// facets without a common edge share a relative interior point. Facet pairs
/// are tried in lexicographic order and the first success is returned.
pub fn lily_witness(dc: &DirectedCone) -> Result<LilyOutcome> {
    if cone_is_simple(&dc.cone)? {
        return Ok(LilyOutcome::Simple);
    }
    let facets = dc.cone.facets()?;
    let mut candidates = Vec::new();
    for (i, fa) in facets.iter().enumerate() {
        for fb in &facets[i + 1..] {
            if fa.iter().any(|r| fb.contains(r)) {
                continue;
            }
            for &ea in fa {
                for &eb in fb {
                    candidates.push((fa, fb, ea, eb));
                }
            }
        }
    }
    let found = candidates.par_iter().find_map_first(|&(fa, fb, ea, eb)| solve_pair(dc, fa, fb, ea, eb));
    match found {
        Some(w) => {
            if !check_lily_witness(dc, &w) {
                return Err(Error::Invariant(format!("lily witness {w:?} fails the interiority check")));
            }
            Ok(LilyOutcome::Witness(w))
        }
        None => Err(Error::Invariant("no facet pair admits a lily witness".into())),
    }
}

/// Closed membership of `p` in the grid set.
fn grid_contains_point(g: &GridSet, p: &[Rat]) -> bool {
    let mut choices: Vec<Vec<i64>> = vec![vec![]];
    for c in p {
        let f = c.floor().to_integer();
        let Ok(f) = i64::try_from(f) else { return false };
        let opts: Vec<i64> = if c.is_integer() { vec![f - 1, f] } else { vec![f] };
        choices = choices.into_iter().flat_map(|pre| opts.iter().map(move |&o| [pre.as_slice(), &[o]].concat())).collect();
    }
    choices.iter().any(|k| g.contains(k))
}

/// Index of the unique closed tile `M^{-1}G + s_j` containing `v`.
pub fn tile_containing_vertex(g: &GridSet, t: &SelfAffineTiling, v: &Point) -> Result<usize> {
    require_extreme(g, v)?;
    crate::product::check_dims(g, t)?;
    tile_containing_point(g, t, v)
}

fn tile_containing_point(g: &GridSet, t: &SelfAffineTiling, v: &Point) -> Result<usize> {
    let hits: Vec<usize> = (0..t.shifts().len())
        .filter(|&j| grid_contains_point(g, &t.dilation().apply(&v.sub(&t.shifts()[j]).coords)))
        .collect();
    match hits.as_slice() {
        [j] => Ok(*j),
        [] => Err(Error::Uncovered(format!("no tile contains {v}"))),
        _ => Err(Error::Invariant(format!("tiles {hits:?} all contain the vertex {v}"))),
    }
}

/// `φ` on the extreme vertices: `v ↦ M(v − s_j)` for the tile `j` covering `v`.
#[derive(Clone, Debug)]
pub struct VertexMap {
    pub vertices: Vec<Point>,
    pub tiles: Vec<usize>,
    pub phi: Vec<usize>,
    /// The cycle the stationary vertex was taken from, starting at it.
    pub cycle: Vec<usize>,
    /// Steps from vertex 0 until its orbit enters a cycle.
    pub tail: usize,
}

#[derive(Clone, Debug)]
pub struct StationaryVertex {
    pub vertex: Point,
    pub index: usize,
    /// `cycle_length · edge_order`.
    pub power: u32,
    pub cycle_length: u32,
    /// Order of the permutation that `M^cycle_length` induces on the corner's edges.
    pub edge_order: u32,
    /// The composed tile-to-set similarity of the `power`-th iterate.
    pub similarity: AffineMap,
    pub map: VertexMap,
}

fn phi_map(t: &SelfAffineTiling, j: usize) -> AffineMap {
    let m = t.dilation().clone();
    let translate = Point::new(m.apply(&t.shifts()[j].coords)).scale(&-Rat::one());
    AffineMap { linear: m, translate }
}

pub fn vertex_map(g: &GridSet, t: &SelfAffineTiling) -> Result<VertexMap> {
    crate::product::check_dims(g, t)?;
    let vertices = extreme_vertices(g);
    let mut tiles = Vec::with_capacity(vertices.len());
    let mut phi = Vec::with_capacity(vertices.len());
    for v in &vertices {
        let j = tile_containing_point(g, t, v)?;
        let w = phi_map(t, j).apply(v);
        let k = vertices
            .binary_search(&w)
            .map_err(|_| Error::Invariant(format!("φ({v}) = {w} is not an extreme vertex")))?;
        tiles.push(j);
        phi.push(k);
    }
    let mut tail = 0;
    let mut seen = vec![false; vertices.len()];
    let mut cur = 0;
    while !seen[cur] {
        seen[cur] = true;
        cur = phi[cur];
    }
    let entry = cur;
    cur = 0;
    while cur != entry {
        cur = phi[cur];
        tail += 1;
    }
    Ok(VertexMap { vertices, tiles, phi, cycle: Vec::new(), tail })
}

fn cycles(phi: &[usize]) -> Vec<Vec<usize>> {
    let n = phi.len();
    let mut state = vec![0u8; n];
    let mut out = Vec::new();
    for start in 0..n {
        let mut path = Vec::new();
        let mut cur = start;
        while state[cur] == 0 {
            state[cur] = 1;
            path.push(cur);
            cur = phi[cur];
        }
        if state[cur] == 1 {
            let pos = path.iter().position(|&p| p == cur).unwrap();
            let mut cyc = path[pos..].to_vec();
            let m = cyc.iter().enumerate().min_by_key(|(_, &v)| v).map(|(i, _)| i).unwrap();
            cyc.rotate_left(m);
            out.push(cyc);
        }
        for p in path {
            state[p] = 2;
        }
    }
    out
}

fn permutation_order(p: &[usize]) -> u32 {
    let mut order: u64 = 1;
    let mut seen = vec![false; p.len()];
    for s in 0..p.len() {
        let mut len = 0u64;
        let mut c = s;
        while !seen[c] {
            seen[c] = true;
            c = p[c];
            len += 1;
        }
        if len > 0 {
            order = order.lcm(&len);
        }
    }
    u32::try_from(order).unwrap_or(u32::MAX)
}

/// An extreme vertex fixed by `φ^n` whose corner edges the linear part of
/// `φ^n` maps onto themselves, with the smallest such `n`.
pub fn stationary_vertex(g: &GridSet, t: &SelfAffineTiling, max_power: u32) -> Result<StationaryVertex> {
    let mut map = vertex_map(g, t)?;
    let mut best: Option<(u32, u32, u32, usize, Vec<usize>)> = None;
    for cyc in cycles(&map.phi) {
        let n = cyc.len() as u32;
        let v = cyc[0];
        let corner = corner_cone(g, &map.vertices[v])?;
        let mn = t.dilation().pow(n);
        let rays = corner.cone.rays();
        let perm: Vec<usize> = rays
            .iter()
            .map(|r| {
                let img = primitive(&mn.apply(r));
                rays.iter()
                    .position(|q| *q == img)
                    .ok_or_else(|| Error::Invariant(format!("M^{n} does not permute the corner edges at {}", map.vertices[v])))
            })
            .collect::<Result<_>>()?;
        let k = permutation_order(&perm);
        let power = n.saturating_mul(k);
        let key = (power, n, k, v, cyc);
        if best.as_ref().is_none_or(|b| (b.0, b.3) > (key.0, key.3)) {
            best = Some(key);
        }
    }
    let (power, n, k, v, cyc) = best.expect("a finite functional graph has a cycle");
    if power > max_power {
        return Err(Error::NoCycle(max_power));
    }
    let mut sim = AffineMap::identity(g.dim());
    let mut cur = v;
    for _ in 0..power {
        sim = sim.then(&phi_map(t, map.tiles[cur]));
        cur = map.phi[cur];
    }
    let vertex = map.vertices[v].clone();
    if sim.apply(&vertex) != vertex {
        return Err(Error::Invariant(format!("composed similarity moves {vertex}")));
    }
    map.cycle = cyc;
    Ok(StationaryVertex { vertex, index: v, power, cycle_length: n, edge_order: k, similarity: sim, map })
}

/// A face of the (orthant) corner at a grid vertex: the vertex plus the axes
/// it spans.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CornerFace {
    pub vertex: Point,
    pub axes: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct FaceRestriction {
    pub face_set: GridSet,
    /// Translation removed when canonicalizing the face set.
    pub offset: Vec<i64>,
    /// Tiles of the original tiling that meet the face.
    pub tiles: Vec<usize>,
    pub tiling: SelfAffineTiling,
    pub verdict: TilingVerdict,
    /// Each restricted tile equals the corresponding induced tile.
    pub pieces_match: bool,
}

impl FaceRestriction {
    pub fn is_valid(&self) -> bool {
        self.pieces_match && self.verdict.valid
    }
}

/// All faces of dimension at least one of the corner at `v`.
pub fn corner_faces(g: &GridSet, v: &Point) -> Result<Vec<CornerFace>> {
    let c = corner_cone(g, v)?;
    if !c.simple {
        return Err(Error::Invalid(format!("corner at {v} is not simple")));
    }
    let d = g.dim();
    Ok((1u32..(1 << d))
        .map(|mask| CornerFace { vertex: v.clone(), axes: (0..d).filter(|&i| (mask >> i) & 1 == 1).collect() })
        .collect())
}

/// Data shared by every face of one corner.
struct FaceContext {
    corner: Corner,
    vertex: Vec<i64>,
    /// `M^{-1}G` as boxes, and its bounding box.
    base: BoxUnion,
    bb: AxisBox,
    /// Shift of the tile containing the vertex.
    s0: Point,
}

fn face_context(g: &GridSet, t: &SelfAffineTiling, v: &Point) -> Result<FaceContext> {
    let corner = corner_cone(g, v)?;
    if !corner.simple {
        return Err(Error::Invalid(format!("corner at {v} is not simple")));
    }
    if !t.dilation().is_monomial() {
        return Err(Error::NonDiagonal);
    }
    let inv = t.dilation().inverse()?;
    let base = match affine_image(&AffineMap::new(inv, Point::origin(g.dim()))?, &g.to_box_union())? {
        AffineImage::Boxes(b) => b,
        AffineImage::Polytopes(_) => return Err(Error::NonDiagonal),
    };
    let bb = base.bounding_box().expect("nonempty grid set");
    let s0 = t.shifts()[tile_containing_point(g, t, v)?].clone();
    Ok(FaceContext { corner, vertex: integer_vertex(v)?, base, bb, s0 })
}

/// Tiles meeting `G ∩ L` for a coordinate face `L`, restricted to `L` and
/// checked as a tiling of `G ∩ L`. Needs a monomial dilation that maps the
/// face directions into themselves.
pub fn face_restriction(g: &GridSet, t: &SelfAffineTiling, face: &CornerFace) -> Result<FaceRestriction> {
    restrict_to_face(g, t, &face_context(g, t, &face.vertex)?, face)
}

/// [`face_restriction`] for every proper face of the corner at `v`. The
/// full-dimensional face would return `t` itself.
pub fn face_restrictions(g: &GridSet, t: &SelfAffineTiling, v: &Point) -> Result<Vec<(CornerFace, FaceRestriction)>> {
    let ctx = face_context(g, t, v)?;
    (1u32..(1 << g.dim()) - 1)
        .map(|mask| {
            let face = CornerFace { vertex: v.clone(), axes: (0..g.dim()).filter(|&i| (mask >> i) & 1 == 1).collect() };
            let r = restrict_to_face(g, t, &ctx, &face)?;
            Ok((face, r))
        })
        .collect()
}

/// Same union of boxes, trying an exact match of the box lists first.
fn same_union(p: &BoxUnion, q: &BoxUnion) -> Result<bool> {
    let sorted = |u: &BoxUnion| {
        let mut b = u.boxes.clone();
        b.sort();
        b.dedup();
        b
    };
    if sorted(p) == sorted(q) {
        return Ok(true);
    }
    Ok(normalize_box_union(p)? == normalize_box_union(q)?)
}

fn restrict_to_face(g: &GridSet, t: &SelfAffineTiling, ctx: &FaceContext, face: &CornerFace) -> Result<FaceRestriction> {
    let d = g.dim();
    let axes = &face.axes;
    if axes.is_empty() || axes.windows(2).any(|w| w[0] >= w[1]) || axes.iter().any(|&a| a >= d) {
        return Err(Error::Invalid(format!("bad face axes {axes:?}")));
    }
    let fixed: Vec<usize> = (0..d).filter(|i| !axes.contains(i)).collect();
    let m = t.dilation();
    for &i in &fixed {
        for &j in axes {
            if !m[(i, j)].is_zero() {
                return Err(Error::Invalid("dilation does not preserve the face".into()));
            }
        }
    }
    let v = &ctx.vertex;
    let side = &ctx.corner.orthants[0];
    let on_flat = |b: &AxisBox| fixed.iter().all(|&i| b.lo().coords[i] <= face.vertex.coords[i] && face.vertex.coords[i] <= b.hi().coords[i]);
    let restrict = |b: &AxisBox| {
        AxisBox::new(
            Point::new(axes.iter().map(|&i| b.lo().coords[i].clone()).collect()),
            Point::new(axes.iter().map(|&i| b.hi().coords[i].clone()).collect()),
        )
        .expect("projected box")
    };
    let cells: Vec<Vec<i64>> = g
        .cells()
        .iter()
        .filter(|k| fixed.iter().all(|&i| k[i] == if side[i] > 0 { v[i] } else { v[i] - 1 }))
        .map(|k| axes.iter().map(|&i| k[i]).collect())
        .collect();
    let (face_set, offset) = GridSet::with_offset(axes.len(), cells)?;
    let off = Point::from_i64(&offset);
    let back = off.scale(&-Rat::one());
    let mut tiles = Vec::new();
    let mut pieces = Vec::new();
    for (j, sj) in t.shifts().iter().enumerate() {
        if !on_flat(&ctx.bb.translate(sj)) {
            continue;
        }
        let hit: Vec<AxisBox> =
            ctx.base.boxes.iter().map(|b| b.translate(sj)).filter(|b| on_flat(b)).map(|b| restrict(&b).translate(&back)).collect();
        if hit.is_empty() {
            continue;
        }
        if fixed.iter().any(|&i| sj.coords[i] != ctx.s0.coords[i]) {
            return Err(Error::Invariant(format!("tile {j} meets the face with a shift not parallel to it")));
        }
        tiles.push(j);
        pieces.push(BoxUnion::new(hit));
    }
    let sub = RatMatrix::from_rows(axes.iter().map(|&i| axes.iter().map(|&j| m[(i, j)].clone()).collect()).collect())?;
    let sub_inv = sub.inverse()?;
    let correction = Point::new(sub_inv.apply(&off.coords)).sub(&off);
    let shifts: Vec<Point> =
        tiles.iter().map(|&j| Point::new(axes.iter().map(|&i| t.shifts()[j].coords[i].clone()).collect()).add(&correction)).collect();
    let tiling = SelfAffineTiling::new(sub, shifts)?;
    let verdict = verify_tiling_exact(&face_set, &tiling)?;
    let induced = tile_boxes(&face_set, &tiling)?;
    let mut pieces_match = true;
    for (p, q) in pieces.iter().zip(&induced) {
        if !same_union(p, q)? {
            pieces_match = false;
            break;
        }
    }
    Ok(FaceRestriction { face_set, offset, tiles, tiling, verdict, pieces_match })
}
