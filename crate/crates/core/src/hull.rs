//! Exact convex hulls in dimension at most three.
//!
//! Inputs are rational; they are scaled to a common denominator and the
//! predicates run on `i128`. Coordinates must stay below 2^40 in magnitude
//! after scaling so that 3x3 determinants cannot overflow.

use std::collections::{BTreeSet, HashMap, HashSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rational::{Rat, RatMatrix};

const COORD_LIMIT: i128 = 1 << 40;

/// Hull of a full-dimensional point set in its own coordinates.
#[derive(Debug, Clone)]
pub(crate) struct Hull {
    /// Indices (into the deduplicated input) of the extreme points.
    pub vertices: Vec<usize>,
    /// Facet inequalities `normal . x <= offset`, exact.
    pub facets: Vec<(Vec<Rat>, Rat)>,
    pub volume: Rat,
}

/// Common-denominator integer image of a rational point set.
struct Scaled {
    pts: Vec<Vec<i128>>,
    scale: BigInt,
}

fn scale_points(points: &[Vec<Rat>]) -> Result<Scaled> {
    let mut scale = BigInt::one();
    for p in points {
        for c in p {
            scale = scale.lcm(c.denom());
        }
    }
    let scale_r = Rat::from_integer(scale.clone());
    let mut pts = Vec::with_capacity(points.len());
    for p in points {
        let mut q = Vec::with_capacity(p.len());
        for c in p {
            let v = (c * &scale_r).to_integer().to_i128().filter(|v| v.abs() < COORD_LIMIT);
            q.push(v.ok_or_else(|| Error::Unsupported("hull coordinates too large".into()))?);
        }
        pts.push(q);
    }
    Ok(Scaled { pts, scale })
}

fn sub(a: &[i128], b: &[i128]) -> Vec<i128> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn cross2(o: &[i128], a: &[i128], b: &[i128]) -> i128 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn det3(u: &[i128], v: &[i128], w: &[i128]) -> i128 {
    u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0])
        + u[2] * (v[0] * w[1] - v[1] * w[0])
}

fn cross3(u: &[i128], v: &[i128]) -> [i128; 3] {
    [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]
}

fn orient3(a: &[i128], b: &[i128], c: &[i128], d: &[i128]) -> i128 {
    det3(&sub(b, a), &sub(c, a), &sub(d, a))
}

fn rat_of(v: i128) -> Rat {
    Rat::from_integer(BigInt::from(v))
}

/// Hull of distinct points that affinely span R^k, k = point dimension <= 3.
pub(crate) fn full_hull(points: &[Vec<Rat>]) -> Result<Hull> {
    let k = points[0].len();
    let s = scale_points(points)?;
    let scale = Rat::from_integer(s.scale.clone());
    match k {
        1 => {
            let (lo, hi) = min_max_index(&s.pts);
            let facets = vec![(vec![-Rat::one()], -points[lo][0].clone()), (vec![Rat::one()], points[hi][0].clone())];
            let volume = &points[hi][0] - &points[lo][0];
            Ok(Hull { vertices: vec![lo, hi], facets, volume })
        }
        2 => hull2(&s.pts, &scale),
        3 => hull3(&s.pts, &scale),
        _ => Err(Error::Unsupported(format!("convex hull in dimension {k}"))),
    }
}

fn min_max_index(pts: &[Vec<i128>]) -> (usize, usize) {
    let lo = (0..pts.len()).min_by_key(|&i| pts[i][0]).unwrap();
    let hi = (0..pts.len()).max_by_key(|&i| pts[i][0]).unwrap();
    (lo, hi)
}

/// Counterclockwise ring of strictly convex hull vertices of planar points.
pub(crate) fn ring2(pts: &[Vec<i128>]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&a, &b| pts[a].cmp(&pts[b]));
    idx.dedup_by(|a, b| pts[*a] == pts[*b]);
    if idx.len() < 3 {
        return idx;
    }
    let mut lower: Vec<usize> = Vec::new();
    for &i in &idx {
        while lower.len() >= 2 && cross2(&pts[lower[lower.len() - 2]], &pts[lower[lower.len() - 1]], &pts[i]) <= 0 {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2 && cross2(&pts[upper[upper.len() - 2]], &pts[upper[upper.len() - 1]], &pts[i]) <= 0 {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn hull2(pts: &[Vec<i128>], scale: &Rat) -> Result<Hull> {
    let ring = ring2(pts);
    let mut facets = Vec::with_capacity(ring.len());
    let mut twice_area: i128 = 0;
    for w in 0..ring.len() {
        let a = &pts[ring[w]];
        let b = &pts[ring[(w + 1) % ring.len()]];
        twice_area += a[0] * b[1] - a[1] * b[0];
        // counterclockwise ring: outward normal of edge a->b is (dy, -dx)
        let n = [b[1] - a[1], a[0] - b[0]];
        let off = n[0] * a[0] + n[1] * a[1];
        facets.push((vec![rat_of(n[0]), rat_of(n[1])], rat_of(off) / scale));
    }
    let volume = rat_of(twice_area) / (scale * scale * Rat::from_integer(BigInt::from(2)));
    Ok(Hull { vertices: ring, facets, volume })
}

fn hull3(pts: &[Vec<i128>], scale: &Rat) -> Result<Hull> {
    let n = pts.len();
    let p0 = 0;
    let p1 = (1..n).find(|&i| pts[i] != pts[p0]).ok_or_else(|| Error::Invalid("degenerate hull".into()))?;
    let p2 = (0..n)
        .find(|&i| cross3(&sub(&pts[p1], &pts[p0]), &sub(&pts[i], &pts[p0])) != [0, 0, 0])
        .ok_or_else(|| Error::Invalid("degenerate hull".into()))?;
    let p3 = (0..n)
        .find(|&i| orient3(&pts[p0], &pts[p1], &pts[p2], &pts[i]) != 0)
        .ok_or_else(|| Error::Invalid("degenerate hull".into()))?;
    let mut faces: Vec<[usize; 3]> = Vec::new();
    let tetra = [p0, p1, p2, p3];
    for skip in 0..4 {
        let mut f: Vec<usize> = (0..4).filter(|&j| j != skip).map(|j| tetra[j]).collect();
        // outward: the omitted vertex must lie strictly below
        if orient3(&pts[f[0]], &pts[f[1]], &pts[f[2]], &pts[tetra[skip]]) > 0 {
            f.swap(1, 2);
        }
        faces.push([f[0], f[1], f[2]]);
    }
    let in_tetra: HashSet<usize> = tetra.iter().copied().collect();
    for p in 0..n {
        if in_tetra.contains(&p) {
            continue;
        }
        let visible: Vec<bool> =
            faces.iter().map(|f| orient3(&pts[f[0]], &pts[f[1]], &pts[f[2]], &pts[p]) > 0).collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut edge_owner: HashMap<(usize, usize), bool> = HashMap::new();
        for (f, &vis) in faces.iter().zip(&visible) {
            for e in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                edge_owner.insert(e, vis);
            }
        }
        let mut next = Vec::with_capacity(faces.len() + 4);
        let mut horizon = Vec::new();
        for (f, &vis) in faces.iter().zip(&visible) {
            if !vis {
                next.push(*f);
                continue;
            }
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                if edge_owner.get(&(b, a)) == Some(&false) {
                    horizon.push((a, b));
                }
            }
        }
        for (a, b) in horizon {
            next.push([a, b, p]);
        }
        faces = next;
    }
    // A hull vertex is extreme iff its incident face normals span R^3.
    let normals: Vec<[i128; 3]> =
        faces.iter().map(|f| cross3(&sub(&pts[f[1]], &pts[f[0]]), &sub(&pts[f[2]], &pts[f[0]]))).collect();
    let mut incident: HashMap<usize, Vec<usize>> = HashMap::new();
    for (fi, f) in faces.iter().enumerate() {
        for &v in f {
            incident.entry(v).or_default().push(fi);
        }
    }
    let mut vertices: Vec<usize> = incident
        .iter()
        .filter(|(_, fs)| normals_span_space(fs.iter().map(|&fi| normals[fi])))
        .map(|(&v, _)| v)
        .collect();
    vertices.sort_unstable();
    let base = &pts[faces[0][0]];
    let mut six_vol: i128 = 0;
    let mut facets = Vec::new();
    let mut seen: BTreeSet<([i128; 3], i128)> = BTreeSet::new();
    for (f, nrm) in faces.iter().zip(&normals) {
        six_vol += orient3(base, &pts[f[0]], &pts[f[1]], &pts[f[2]]);
        let g = nrm.iter().fold(0i128, |acc, &x| acc.gcd(&x));
        let nn = [nrm[0] / g, nrm[1] / g, nrm[2] / g];
        let off = nn[0] * pts[f[0]][0] + nn[1] * pts[f[0]][1] + nn[2] * pts[f[0]][2];
        if seen.insert((nn, off)) {
            facets.push((nn.iter().map(|&x| rat_of(x)).collect(), rat_of(off) / scale));
        }
    }
    let volume = rat_of(six_vol) / (scale * scale * scale * Rat::from_integer(BigInt::from(6)));
    Ok(Hull { vertices, facets, volume })
}

fn normals_span_space(mut it: impl Iterator<Item = [i128; 3]>) -> bool {
    let Some(first) = it.next() else { return false };
    let mut second: Option<[i128; 3]> = None;
    for nrm in it {
        match second {
            None => {
                if cross3(&first, &nrm) != [0, 0, 0] {
                    second = Some(nrm);
                }
            }
            Some(s) => {
                if det3(&first, &s, &nrm) != 0 {
                    return true;
                }
            }
        }
    }
    false
}

/// Affine dimension of the points and a set of coordinate axes on which the
/// projection of their affine hull is injective.
pub(crate) fn affine_frame(points: &[Vec<Rat>]) -> (usize, Vec<usize>) {
    let d = points[0].len();
    let base = &points[0];
    let rows: Vec<Vec<Rat>> =
        points.iter().skip(1).map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect()).collect();
    if rows.is_empty() {
        return (0, Vec::new());
    }
    // column pivots of the difference matrix
    let mut m = RatMatrix::from_rows(rows).expect("nonempty difference rows");
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..d {
        let Some(p) = (r..m.rows()).find(|&i| !m[(i, col)].is_zero()) else { continue };
        for c in 0..d {
            let tmp = m[(p, c)].clone();
            m[(p, c)] = m[(r, c)].clone();
            m[(r, c)] = tmp;
        }
        for i in 0..m.rows() {
            if i != r && !m[(i, col)].is_zero() {
                let f = &m[(i, col)] / &m[(r, col)];
                for c in col..d {
                    let delta = &f * &m[(r, c)];
                    m[(i, c)] -= delta;
                }
            }
        }
        pivots.push(col);
        r += 1;
        if r == m.rows() {
            break;
        }
    }
    (pivots.len(), pivots)
}
