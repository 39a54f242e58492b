//! Tiling verification: exact box arithmetic for monomial dilations and a
//! rasterized oracle for general ones.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{affine_image, measure, polytope_volume, AffineImage, AffineMap, BoxUnion, VPolytope};
use crate::product::{check_dims, GridSet, SelfAffineTiling};
use crate::rational::{fmt_rat, int, Rat};

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum VerdictMethod {
    Exact,
    /// Measures count raster cells of side `1/resolution`. `error_band` bounds
    /// the measure of the cells whose status could not be decided.
    Raster { resolution: u32, error_band: Rat },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TilingVerdict {
    pub valid: bool,
    /// Measure of `G` covered by the tiles.
    pub covered_measure: Rat,
    pub total_measure: Rat,
    /// Sum over tile pairs of the measure of their intersection.
    pub overlap_measure: Rat,
    /// Measure of the tiles lying outside `G`.
    pub outside_measure: Rat,
    pub witness: Option<String>,
    pub method: VerdictMethod,
}

impl TilingVerdict {
    pub fn error_band(&self) -> Rat {
        match &self.method {
            VerdictMethod::Exact => Rat::zero(),
            VerdictMethod::Raster { error_band, .. } => error_band.clone(),
        }
    }
}

/// One tile piece: the image of a unit cell, in integer coordinates scaled by
/// a common factor.
struct ScaledBox {
    lo: Vec<i128>,
    tile: usize,
    cell: usize,
}

fn lcm_all<'a>(values: impl Iterator<Item = &'a Rat>) -> BigInt {
    values.fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

fn to_i128(v: &Rat, scale: &BigInt) -> Result<i128> {
    (v * Rat::from_integer(scale.clone()))
        .to_integer()
        .to_i128()
        .filter(|x| x.abs() < 1i128 << 100)
        .ok_or_else(|| Error::Unsupported("coordinates too large for exact verification".into()))
}

/// Common denominator `L` and the integers `L·v`, in machine words when
/// everything fits.
fn scale_all(values: &[&Rat]) -> Result<(BigInt, Vec<i128>)> {
    const LIMIT: i128 = 1 << 100;
    let small: Option<Vec<(i128, i128)>> = values.iter().map(|v| Some((v.numer().to_i128()?, v.denom().to_i128()?))).collect();
    if let Some(pairs) = small {
        let mut l: i128 = 1;
        let mut ok = true;
        for &(_, den) in &pairs {
            let g = num_integer::Integer::gcd(&l, &den);
            match (l / g).checked_mul(den) {
                Some(x) if x < LIMIT => l = x,
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            let scaled: Option<Vec<i128>> =
                pairs.iter().map(|&(num, den)| num.checked_mul(l / den).filter(|x| x.abs() < LIMIT)).collect();
            if let Some(scaled) = scaled {
                return Ok((BigInt::from(l), scaled));
            }
        }
    }
    let scale = lcm_all(values.iter().copied());
    let scaled = values.iter().map(|v| to_i128(v, &scale)).collect::<Result<_>>()?;
    Ok((scale, scaled))
}

/// Exact verification of a tiling of a grid set whose dilation is monomial
/// (a signed permutation times a diagonal), so that every tile is a union of
/// boxes.
pub fn verify_tiling_exact(g: &GridSet, t: &SelfAffineTiling) -> Result<TilingVerdict> {
    check_dims(g, t)?;
    if !t.dilation().is_monomial() {
        return Err(Error::NonDiagonal);
    }
    let d = g.dim();
    let inv = t.dilation().inverse()?;
    // output axis i reads input axis src[i] scaled by coef[i]
    let (src, coef): (Vec<usize>, Vec<Rat>) =
        (0..d).map(|i| (0..d).find(|&j| !inv[(i, j)].is_zero()).map(|j| (j, inv[(i, j)].clone())).unwrap()).unzip();
    let values: Vec<&Rat> = coef.iter().chain(t.shifts().iter().flat_map(|s| s.coords.iter())).collect();
    let (scale, scaled) = scale_all(&values)?;
    let l = scale.to_i128().ok_or_else(|| Error::Unsupported("denominators too large".into()))?;
    let coef_i: Vec<i128> = scaled[..d].to_vec();
    let width: Vec<i128> = coef_i.iter().map(|c| c.abs()).collect();
    let shifts: Vec<Vec<i128>> = scaled[d..].chunks(d).map(<[i128]>::to_vec).collect();
    let cells: Vec<&Vec<i64>> = g.cells().iter().collect();
    if d == 1 {
        let starts: Vec<i128> = cells.iter().map(|k| coef_i[0] * (k[0] as i128 + i128::from(coef_i[0] < 0))).collect();
        return Ok(verify_line(g, &cells, &shifts, &starts, width[0], l));
    }

    let mut boxes = Vec::with_capacity(shifts.len() * cells.len());
    for (j, s) in shifts.iter().enumerate() {
        for (ci, k) in cells.iter().enumerate() {
            let lo = (0..d)
                .map(|i| {
                    let base = k[src[i]] as i128 + if coef_i[i] < 0 { 1 } else { 0 };
                    coef_i[i] * base + s[i]
                })
                .collect();
            boxes.push(ScaledBox { lo, tile: j, cell: ci });
        }
    }
    let cell_volume: i128 = width.iter().product();
    let unit = l.checked_pow(d as u32).ok_or_else(|| Error::Unsupported("scale too large".into()))?;

    let clip = |b: &ScaledBox, c: &[i64]| -> i128 {
        let mut v = 1i128;
        for i in 0..d {
            let lo = b.lo[i].max(c[i] as i128 * l);
            let hi = (b.lo[i] + width[i]).min((c[i] as i128 + 1) * l);
            if hi <= lo {
                return 0;
            }
            v *= hi - lo;
        }
        v
    };
    let cell_ranges = |b: &ScaledBox| -> Vec<(i64, i64)> {
        (0..d).map(|i| (b.lo[i].div_euclid(l) as i64, (b.lo[i] + width[i] + l - 1).div_euclid(l) as i64)).collect()
    };

    // (a) containment: the part of each box outside G
    let outside_parts: Vec<i128> = boxes
        .par_iter()
        .map(|b| {
            let mut out = 0;
            for_each_cell(&cell_ranges(b), |c| {
                if !g.contains(c) {
                    out += clip(b, c);
                }
            });
            out
        })
        .collect();
    let outside: i128 = outside_parts.iter().sum();
    let outside_witness = outside_parts.iter().position(|&v| v > 0).map(|bi| {
        let b = &boxes[bi];
        let mut leak = None;
        for_each_cell(&cell_ranges(b), |c| {
            if leak.is_none() && !g.contains(c) && clip(b, c) > 0 {
                leak = Some(c.to_vec());
            }
        });
        format!("tile {} image of cell {:?} leaves G through cell {:?}", b.tile, cells[b.cell], leak.unwrap_or_default())
    });

    // (b) overlaps: congruent boxes meet only within neighbouring buckets
    let bucket_of = |b: &ScaledBox| -> Vec<i64> { (0..d).map(|i| b.lo[i].div_euclid(width[i]) as i64).collect() };
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, b) in boxes.iter().enumerate() {
        buckets.entry(bucket_of(b)).or_default().push(i);
    }
    let neighbours: Vec<(i64, i64)> = vec![(-1, 2); d];
    let pair_overlaps: Vec<(i128, Option<(usize, usize)>)> = boxes
        .par_iter()
        .enumerate()
        .map(|(a, ba)| {
            let home = bucket_of(ba);
            let mut key = home.clone();
            let mut sum = 0i128;
            let mut first: Option<(usize, usize)> = None;
            for_each_cell(&neighbours, |off| {
                for i in 0..d {
                    key[i] = home[i] + off[i];
                }
                if let Some(list) = buckets.get(&key[..]) {
                    for &b in list {
                        if b <= a {
                            continue;
                        }
                        let bb = &boxes[b];
                        let mut v = 1i128;
                        for i in 0..d {
                            let gap = width[i] - (ba.lo[i] - bb.lo[i]).abs();
                            if gap <= 0 {
                                v = 0;
                                break;
                            }
                            v *= gap;
                        }
                        if v > 0 {
                            sum += v;
                            if first.is_none_or(|f| b < f.1) {
                                first = Some((a, b));
                            }
                        }
                    }
                }
            });
            (sum, first)
        })
        .collect();
    let overlap: i128 = pair_overlaps.iter().map(|p| p.0).sum();
    let overlap_witness = pair_overlaps.iter().find_map(|p| p.1).map(|(a, b)| {
        let (ba, bb) = (&boxes[a], &boxes[b]);
        format!(
            "tiles {} and {} overlap: images of cells {:?} and {:?}",
            ba.tile, bb.tile, cells[ba.cell], cells[bb.cell]
        )
    });

    // (c) coverage; with no overlap it is the total tile volume inside G
    let total = unit * g.len() as i128;
    let mut uncovered_witness = None;
    let covered: i128 = if overlap == 0 && cell_volume * boxes.len() as i128 - outside == total {
        total
    } else {
        let mut per_cell: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
        for (bi, b) in boxes.iter().enumerate() {
            for_each_cell(&cell_ranges(b), |c| {
                if g.contains(c) && clip(b, c) > 0 {
                    per_cell.entry(c.to_vec()).or_default().push(bi);
                }
            });
        }
        let union_in = |c: &Vec<i64>| -> i128 {
            let clipped: Vec<(Vec<i128>, Vec<i128>)> = per_cell
                .get(c)
                .map(|ids| {
                    ids.iter()
                        .map(|&bi| {
                            let b = &boxes[bi];
                            (0..d)
                                .map(|i| (b.lo[i].max(c[i] as i128 * l), (b.lo[i] + width[i]).min((c[i] as i128 + 1) * l)))
                                .unzip()
                        })
                        .collect()
                })
                .unwrap_or_default();
            union_volume(&clipped)
        };
        let per: Vec<(&Vec<i64>, i128)> = g.cells().par_iter().map(|c| (c, union_in(c))).collect();
        if let Some((c, got)) = per.iter().find(|p| p.1 < unit) {
            let missing = Rat::new(BigInt::from(unit - got), BigInt::from(unit));
            uncovered_witness = Some(format!("cell {c:?} of G is not covered: measure {} missing", fmt_rat(&missing)));
        }
        per.iter().map(|p| p.1).sum()
    };
    let as_rat = |v: i128| Rat::new(BigInt::from(v), BigInt::from(unit));
    let valid = overlap == 0 && outside == 0 && covered == total;
    Ok(TilingVerdict {
        valid,
        covered_measure: as_rat(covered),
        total_measure: g.measure(),
        overlap_measure: as_rat(overlap),
        outside_measure: as_rat(outside),
        witness: if valid { None } else { overlap_witness.or(outside_witness).or(uncovered_witness) },
        method: VerdictMethod::Exact,
    })
}

/// The one-dimensional case by sorting: tile `j` contributes the intervals
/// `[s_j + start_c, s_j + start_c + w)` in units of `1/l`.
fn verify_line(g: &GridSet, cells: &[&Vec<i64>], shifts: &[Vec<i128>], starts: &[i128], w: i128, l: i128) -> TilingVerdict {
    let nc = starts.len();
    let lows = shifts.iter().flat_map(|s| starts.iter().map(move |c| s[0] + c));
    let min = lows.clone().min().unwrap_or(0);
    let max = lows.clone().max().unwrap_or(0);
    let iv: Vec<(i128, u32)> = if max - min < 1 << 32 && shifts.len() * nc < 1 << 32 {
        // packed keys sort several times faster than tuples
        let mut keys: Vec<u64> = lows.zip(0u64..).map(|(lo, id)| (((lo - min) as u64) << 32) | id).collect();
        keys.sort_unstable();
        keys.iter().map(|k| (min + (k >> 32) as i128, *k as u32)).collect()
    } else {
        let mut iv: Vec<(i128, u32)> = lows.zip(0u32..).collect();
        iv.sort_unstable();
        iv
    };
    let label = |id: u32| (id as usize / nc, cells[id as usize % nc]);

    let mut overlap = 0i128;
    let mut overlap_witness = None;
    for (i, &(lo, a)) in iv.iter().enumerate() {
        for &(other, b) in iv[i + 1..].iter().take_while(|(x, _)| *x < lo + w) {
            overlap += lo + w - other;
            if overlap_witness.is_none() {
                let ((ta, ca), (tb, cb)) = (label(a), label(b));
                overlap_witness = Some(format!("tiles {ta} and {tb} overlap: images of cells {ca:?} and {cb:?}"));
            }
        }
    }

    // maximal runs of consecutive cells of G, scaled
    let mut runs: Vec<(i128, i128)> = Vec::new();
    for c in g.cells() {
        let (a, b) = (c[0] as i128 * l, (c[0] as i128 + 1) * l);
        match runs.last_mut() {
            Some(r) if r.1 == a => r.1 = b,
            _ => runs.push((a, b)),
        }
    }
    let inside = |lo: i128, hi: i128, from: &mut usize| -> i128 {
        while *from < runs.len() && runs[*from].1 <= lo {
            *from += 1;
        }
        runs[*from..].iter().take_while(|r| r.0 < hi).map(|r| (hi.min(r.1) - lo.max(r.0)).max(0)).sum()
    };
    let mut outside = 0i128;
    let mut outside_witness = None;
    let mut run = 0;
    for &(lo, id) in &iv {
        let out = w - inside(lo, lo + w, &mut run);
        if out > 0 && outside_witness.is_none() {
            let (t, c) = label(id);
            outside_witness = Some(format!("tile {t} image of cell {c:?} leaves G"));
        }
        outside += out;
    }

    let unit = l;
    let total = unit * g.len() as i128;
    let covered = if overlap == 0 {
        w * iv.len() as i128 - outside
    } else {
        let mut merged: Vec<(i128, i128)> = Vec::new();
        for &(lo, _) in &iv {
            match merged.last_mut() {
                Some(m) if m.1 >= lo => m.1 = m.1.max(lo + w),
                _ => merged.push((lo, lo + w)),
            }
        }
        let mut run = 0;
        merged.iter().map(|&(a, b)| inside(a, b, &mut run)).sum()
    };
    let as_rat = |v: i128| Rat::new(BigInt::from(v), BigInt::from(unit));
    let uncovered_witness = (covered < total).then(|| format!("measure {} of G is not covered", fmt_rat(&as_rat(total - covered))));
    let valid = overlap == 0 && outside == 0 && covered == total;
    TilingVerdict {
        valid,
        covered_measure: as_rat(covered),
        total_measure: g.measure(),
        overlap_measure: as_rat(overlap),
        outside_measure: as_rat(outside),
        witness: if valid { None } else { overlap_witness.or(outside_witness).or(uncovered_witness) },
        method: VerdictMethod::Exact,
    }
}

/// Calls `f` on every integer vector in the product of half-open ranges.
fn for_each_cell(ranges: &[(i64, i64)], mut f: impl FnMut(&[i64])) {
    if ranges.iter().any(|(a, b)| a >= b) {
        return;
    }
    let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        f(&cur);
        let mut i = 0;
        loop {
            if i == ranges.len() {
                return;
            }
            cur[i] += 1;
            if cur[i] < ranges[i].1 {
                break;
            }
            cur[i] = ranges[i].0;
            i += 1;
        }
    }
}

/// Volume of a union of integer boxes by coordinate compression.
fn union_volume(boxes: &[(Vec<i128>, Vec<i128>)]) -> i128 {
    let boxes: Vec<&(Vec<i128>, Vec<i128>)> = boxes.iter().filter(|(lo, hi)| lo.iter().zip(hi).all(|(a, b)| a < b)).collect();
    if boxes.is_empty() {
        return 0;
    }
    let d = boxes[0].0.len();
    let cuts: Vec<Vec<i128>> = (0..d)
        .map(|i| {
            let mut c: Vec<i128> = boxes.iter().flat_map(|b| [b.0[i], b.1[i]]).collect();
            c.sort_unstable();
            c.dedup();
            c
        })
        .collect();
    let ranges: Vec<(i64, i64)> = cuts.iter().map(|c| (0, c.len() as i64 - 1)).collect();
    let mut total = 0;
    for_each_cell(&ranges, |idx| {
        let lo: Vec<i128> = (0..d).map(|i| cuts[i][idx[i] as usize]).collect();
        let hi: Vec<i128> = (0..d).map(|i| cuts[i][idx[i] as usize + 1]).collect();
        if boxes.iter().any(|b| (0..d).all(|i| b.0[i] <= lo[i] && hi[i] <= b.1[i])) {
            total += (0..d).map(|i| hi[i] - lo[i]).product::<i128>();
        }
    });
    total
}

/// A convex piece with integer facets in raster units.
struct RasterPiece {
    /// `normal · X <= rhs` with `X = resolution · x`.
    facets: Vec<(Vec<i128>, i128)>,
    lo: Vec<i64>,
    hi: Vec<i64>,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum Status {
    Partial,
    In,
}

fn raster_piece(p: &VPolytope, resolution: u32) -> Result<Option<RasterPiece>> {
    if !p.is_full_dimensional() {
        return Ok(None);
    }
    let r = int(resolution as i64);
    let mut facets = Vec::new();
    for (n, c) in p.halfspaces()? {
        let rhs = &c * &r;
        let l = lcm_all(n.iter().chain(std::iter::once(&rhs)));
        let one = BigInt::one();
        let ni: Vec<i128> = n.iter().map(|v| to_i128(v, &l)).collect::<Result<_>>()?;
        facets.push((ni, to_i128(&rhs, &l)?));
        debug_assert!(l >= one);
    }
    let d = p.ambient_dim();
    let scaled: Vec<Vec<Rat>> = p.vertices().iter().map(|v| v.coords.iter().map(|c| c * &r).collect()).collect();
    let lo = (0..d).map(|i| scaled.iter().map(|v| v[i].floor()).min().unwrap().to_integer().to_i64().unwrap()).collect();
    let hi = (0..d).map(|i| scaled.iter().map(|v| v[i].ceil()).max().unwrap().to_integer().to_i64().unwrap()).collect();
    Ok(Some(RasterPiece { facets, lo, hi }))
}

/// Raster cells met by the interior of a union of pieces; `In` when a
/// single piece contains the whole cell.
fn rasterize(pieces: &[RasterPiece]) -> HashMap<Vec<i64>, Status> {
    let mut out: HashMap<Vec<i64>, Status> = HashMap::new();
    for p in pieces {
        let ranges: Vec<(i64, i64)> = p.lo.iter().zip(&p.hi).map(|(&a, &b)| (a, b)).collect();
        for_each_cell(&ranges, |cell| {
            let mut inside = true;
            for (n, rhs) in &p.facets {
                let base: i128 = n.iter().zip(cell).map(|(a, &x)| a * x as i128).sum();
                let min = base + n.iter().filter(|&&a| a < 0).sum::<i128>();
                let max = base + n.iter().filter(|&&a| a > 0).sum::<i128>();
                if min >= *rhs {
                    return;
                }
                if max > *rhs {
                    inside = false;
                }
            }
            let s = if inside { Status::In } else { Status::Partial };
            let e = out.entry(cell.to_vec()).or_insert(s);
            *e = (*e).max(s);
        });
    }
    out
}

pub const DEFAULT_RESOLUTION: u32 = 64;

/// Rasterized verification of `g = ⋃ (M^{-1} g + shift_j)`.
pub fn verify_tiling_raster(g: &AffineImage, t: &SelfAffineTiling, resolution: u32) -> Result<TilingVerdict> {
    let base = g.clone().into_polytopes()?;
    if base.iter().any(|p| p.ambient_dim() != t.dim()) {
        return Err(Error::Dimension("region and tiling dimensions differ".into()));
    }
    let tiles: Vec<Vec<VPolytope>> = (0..t.shifts().len())
        .into_par_iter()
        .map(|j| {
            let map = t.tile_map(j);
            base.iter().map(|p| p.map(&map)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    verify_partition_raster(g, &tiles, resolution)
}

/// Rasterized check that the given pieces partition `g`. Each cell of side
/// `1/resolution` is classified exactly against every convex piece; only
/// cells that are definitely inside or outside count as violations, and the
/// undecided cells give the error band.
pub fn verify_partition_raster(g: &AffineImage, tiles: &[Vec<VPolytope>], resolution: u32) -> Result<TilingVerdict> {
    if resolution == 0 {
        return Err(Error::Invalid("resolution must be positive".into()));
    }
    let base = g.clone().into_polytopes()?;
    let d = base.first().ok_or_else(|| Error::Empty("empty region".into()))?.ambient_dim();
    let total_measure = match g {
        AffineImage::Boxes(u) => measure(u)?,
        AffineImage::Polytopes(ps) => {
            ps.iter().map(polytope_volume).collect::<Result<Vec<_>>>()?.into_iter().fold(Rat::zero(), |a, v| a + v.value)
        }
    };
    let to_pieces = |ps: &[VPolytope]| -> Result<Vec<RasterPiece>> {
        Ok(ps.iter().map(|p| raster_piece(p, resolution)).collect::<Result<Vec<_>>>()?.into_iter().flatten().collect())
    };
    let g_map = rasterize(&to_pieces(&base)?);
    let tile_maps: Vec<HashMap<Vec<i64>, Status>> =
        tiles.par_iter().map(|ps| to_pieces(ps).map(|p| rasterize(&p))).collect::<Result<_>>()?;

    #[derive(Default, Clone, Copy)]
    struct Tally {
        tiles_in: u32,
        partial: bool,
    }
    let mut tally: HashMap<Vec<i64>, Tally> = HashMap::new();
    for m in &tile_maps {
        for (c, s) in m {
            let e = tally.entry(c.clone()).or_default();
            match s {
                Status::In => e.tiles_in += 1,
                Status::Partial => e.partial = true,
            }
        }
    }
    let (mut uncovered, mut overlap, mut outside, mut band) = (0u64, 0u64, 0u64, 0u64);
    let mut first: Option<(Vec<i64>, &str)> = None;
    let note = |c: &Vec<i64>, what: &'static str, first: &mut Option<(Vec<i64>, &str)>| {
        if first.as_ref().is_none_or(|(f, _)| c < f) {
            *first = Some((c.clone(), what));
        }
    };
    for (c, s) in &g_map {
        let t = tally.get(c).copied().unwrap_or_default();
        if *s == Status::Partial || t.partial {
            band += 1;
        }
        if *s == Status::In && t.tiles_in == 0 && !t.partial {
            uncovered += 1;
            note(c, "uncovered", &mut first);
        }
    }
    for (c, t) in &tally {
        let n = t.tiles_in as u64;
        overlap += n * n.saturating_sub(1) / 2;
        if n >= 2 {
            note(c, "covered twice", &mut first);
        }
        if !g_map.contains_key(c) {
            outside += n;
            if n > 0 {
                note(c, "outside G", &mut first);
            }
            if t.partial {
                band += 1;
            }
        }
    }
    let cell = Rat::new(BigInt::one(), BigInt::from(resolution).pow(d as u32));
    let m = |k: u64| &cell * int(k as i64);
    let valid = uncovered == 0 && overlap == 0 && outside == 0;
    let witness = first.map(|(c, what)| {
        let lo: Vec<String> = c.iter().map(|&v| fmt_rat(&Rat::new(BigInt::from(v), BigInt::from(resolution)))).collect();
        format!("raster cell at ({}) is {what}", lo.join(", "))
    });
    Ok(TilingVerdict {
        valid,
        covered_measure: &total_measure - m(uncovered),
        total_measure,
        overlap_measure: m(overlap),
        outside_measure: m(outside),
        witness: if valid { None } else { witness },
        method: VerdictMethod::Raster { resolution, error_band: m(band) },
    })
}

/// Exact verification when the dilation is monomial, raster otherwise.
pub fn verify_tiling(g: &GridSet, t: &SelfAffineTiling, resolution: u32) -> Result<TilingVerdict> {
    match verify_tiling_exact(g, t) {
        Err(Error::NonDiagonal) => verify_tiling_raster(&AffineImage::Boxes(g.to_box_union()), t, resolution),
        other => other,
    }
}

/// A grid set mapped by an affine map, as a region for the raster verifier.
pub fn region_of(g: &GridSet, map: &AffineMap) -> Result<AffineImage> {
    affine_image(map, &g.to_box_union())
}

/// Union of the tile boxes of a monomial tiling, for inspection.
pub fn tile_boxes(g: &GridSet, t: &SelfAffineTiling) -> Result<Vec<BoxUnion>> {
    if !t.dilation().is_monomial() {
        return Err(Error::NonDiagonal);
    }
    let u = g.to_box_union();
    (0..t.shifts().len())
        .map(|j| match affine_image(&t.tile_map(j), &u)? {
            AffineImage::Boxes(b) => Ok(b),
            AffineImage::Polytopes(_) => unreachable!("monomial maps send boxes to boxes"),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AxisBox, Point};
    use crate::onedim::{find_1d_tiling, verify_1d_tiling, AdmissibleTriple, SegmentSet};
    use crate::product::{build_product_set, build_product_tiling, ProductSpec};
    use crate::rational::{rat, RatMatrix};

    fn quarters(shifts: &[[Rat; 2]]) -> SelfAffineTiling {
        SelfAffineTiling::new(
            RatMatrix::diagonal(&[int(2), int(2)]),
            shifts.iter().map(|s| Point::new(s.to_vec())).collect(),
        )
        .unwrap()
    }

    /// Covered measure, pairwise overlaps and outside measure of the tile boxes, by brute force.
    fn brute_force(g: &GridSet, t: &SelfAffineTiling) -> (Rat, Rat, Rat) {
        let tiles = tile_boxes(g, t).unwrap();
        let all: Vec<AxisBox> = tiles.iter().flat_map(|b| b.boxes.clone()).collect();
        let mut overlap = Rat::zero();
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                overlap += all[i].overlap(&all[j]);
            }
        }
        // counted per box, like the verifier
        let mut outside = Rat::zero();
        let mut within = Vec::new();
        for b in &all {
            outside += b.volume() - g.to_box_union().boxes.iter().map(|c| b.overlap(c)).fold(Rat::zero(), |a, x| a + x);
            for c in &g.to_box_union().boxes {
                let lo: Vec<Rat> = (0..b.dim()).map(|i| b.lo().coords[i].clone().max(c.lo().coords[i].clone())).collect();
                let hi: Vec<Rat> = (0..b.dim()).map(|i| b.hi().coords[i].clone().min(c.hi().coords[i].clone())).collect();
                if lo.iter().zip(&hi).all(|(a, b)| a < b) {
                    within.push(AxisBox::new(Point::new(lo), Point::new(hi)).unwrap());
                }
            }
        }
        (measure(&BoxUnion::new(within)).unwrap(), overlap, outside)
    }

    #[test]
    fn line_path_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let cells: Vec<Vec<i64>> = (0..rng.gen_range(1..5)).map(|_| vec![rng.gen_range(0..7)]).collect();
            let g = GridSet::new(1, cells).unwrap();
            let m = rng.gen_range(2..5i64) * if rng.gen_bool(0.3) { -1 } else { 1 };
            let mut digits: Vec<Vec<i64>> = (0..rng.gen_range(1..8)).map(|_| vec![rng.gen_range(-3..12)]).collect();
            digits.sort();
            digits.dedup();
            let t = SelfAffineTiling::from_digits(RatMatrix::diagonal(&[int(m)]), &digits).unwrap();
            let v = verify_tiling_exact(&g, &t).unwrap();
            let (covered, overlap, outside) = brute_force(&g, &t);
            assert_eq!((&v.covered_measure, &v.overlap_measure, &v.outside_measure), (&covered, &overlap, &outside), "{g} {m} {digits:?}");
            assert_eq!(v.valid, overlap.is_zero() && outside.is_zero() && covered == g.measure());
        }
    }

    fn q4() -> SelfAffineTiling {
        let h = rat(1, 2);
        quarters(&[[int(0), int(0)], [h.clone(), int(0)], [int(0), h.clone()], [h.clone(), h]])
    }

    /// Oracle: exact measures from the generic box-union normalizer.
    fn oracle(g: &GridSet, t: &SelfAffineTiling) -> (Rat, Rat, Rat) {
        let tiles = tile_boxes(g, t).unwrap();
        let gu = g.to_box_union();
        let mut overlap = Rat::zero();
        for a in 0..tiles.len() {
            for b in a + 1..tiles.len() {
                for x in &tiles[a].boxes {
                    for y in &tiles[b].boxes {
                        overlap += x.overlap(y);
                    }
                }
            }
        }
        let all: Vec<_> = tiles.iter().flat_map(|u| u.boxes.clone()).collect();
        let mut clipped = Vec::new();
        for b in &all {
            for c in &gu.boxes {
                if !b.overlap(c).is_zero() {
                    let lo = Point::new((0..b.dim()).map(|i| b.lo().coords[i].clone().max(c.lo().coords[i].clone())).collect());
                    let hi = Point::new((0..b.dim()).map(|i| b.hi().coords[i].clone().min(c.hi().coords[i].clone())).collect());
                    clipped.push(crate::geometry::AxisBox::new(lo, hi).unwrap());
                }
            }
        }
        let covered = measure(&BoxUnion::new(clipped)).unwrap();
        let outside = all.iter().map(|b| b.volume()).fold(Rat::zero(), |a, v| a + v)
            - all.iter().flat_map(|b| gu.boxes.iter().map(move |c| b.overlap(c))).fold(Rat::zero(), |a, v| a + v);
        (covered, overlap, outside)
    }

    #[test]
    fn exact_examples() {
        let sq = GridSet::unit_cube(2);
        let v = verify_tiling_exact(&sq, &q4()).unwrap();
        assert!(v.valid);
        assert_eq!(v.covered_measure, int(1));
        assert_eq!(v.witness, None);

        let h = rat(1, 2);
        let bad = quarters(&[[int(0), int(0)], [h.clone(), int(0)], [int(0), h.clone()], [h.clone(), rat(1, 4)]]);
        let v = verify_tiling_exact(&sq, &bad).unwrap();
        assert!(!v.valid);
        // [1/2,1]x[1/4,3/4] meets [1/2,1]x[0,1/2] in a 1/2 x 1/4 rectangle
        assert_eq!(v.overlap_measure, rat(1, 8));
        assert_eq!(v.covered_measure, rat(7, 8));
        assert!(v.witness.unwrap().contains("overlap"));
        assert_eq!(oracle(&sq, &bad), (rat(7, 8), rat(1, 8), int(0)));

        let spec = ProductSpec::new(vec![
            AdmissibleTriple::new(vec![1, 2, 8], vec![1, 2, 3]).unwrap(),
            AdmissibleTriple::new(vec![1, 2, 12], vec![1, 3, 2]).unwrap(),
        ]);
        let g = build_product_set(&spec).unwrap();
        let axes: Vec<_> = (0..2).map(|i| find_1d_tiling(&SegmentSet::new(g.projection(i)).unwrap(), 64).unwrap()).collect();
        let t = build_product_tiling(&axes).unwrap();
        let v = verify_tiling_exact(&g, &t).unwrap();
        assert!(v.valid, "{v:?}");
        assert_eq!(v.covered_measure, int(36));
    }

    #[test]
    fn non_monomial_is_routed() {
        let dragon =
            SelfAffineTiling::from_digits(RatMatrix::from_i64_rows(&[vec![1, -1], vec![1, 1]]).unwrap(), &[vec![0, 0], vec![1, 0]])
                .unwrap();
        assert!(matches!(verify_tiling_exact(&GridSet::unit_cube(2), &dragon), Err(Error::NonDiagonal)));
        let v = verify_tiling(&GridSet::unit_cube(2), &dragon, 16).unwrap();
        assert!(matches!(v.method, VerdictMethod::Raster { resolution: 16, .. }));
        assert!(!v.valid);
    }

    #[test]
    fn monomial_and_reflected_dilations() {
        // M = [[0,2],[2,0]] quarters the square with a swap of axes
        let m = RatMatrix::from_i64_rows(&[vec![0, 2], vec![2, 0]]).unwrap();
        let t = SelfAffineTiling::from_digits(m, &[vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]).unwrap();
        assert!(verify_tiling_exact(&GridSet::unit_cube(2), &t).unwrap().valid);
        let r = SelfAffineTiling::from_digits(RatMatrix::diagonal(&[int(-2)]), &[vec![-1], vec![-2]]).unwrap();
        assert!(verify_tiling_exact(&GridSet::unit_cube(1), &r).unwrap().valid);
        let wrong = SelfAffineTiling::from_digits(RatMatrix::diagonal(&[int(-2)]), &[vec![0], vec![1]]).unwrap();
        let v = verify_tiling_exact(&GridSet::unit_cube(1), &wrong).unwrap();
        // both tiles land in [-1, 0]
        assert_eq!(v.outside_measure, int(1));
        assert_eq!(v.covered_measure, int(0));
    }

    #[test]
    fn gaps_and_outside_pieces() {
        let g = GridSet::new(1, vec![vec![0], vec![2]]).unwrap();
        let t = SelfAffineTiling::from_digits(RatMatrix::diagonal(&[int(4)]), &[vec![0], vec![1], vec![2], vec![3]]).unwrap();
        let v = verify_tiling_exact(&g, &t).unwrap();
        assert!(!v.valid);
        let (cov, ov, out) = oracle(&g, &t);
        assert_eq!((v.covered_measure, v.overlap_measure, v.outside_measure), (cov, ov, out));
    }

    #[test]
    fn discrete_and_continuous_agree_in_one_dimension() {
        for mask in 0u32..64 {
            let offs: Vec<i64> = std::iter::once(0).chain((1..=6).filter(|i| mask >> (i - 1) & 1 == 1)).collect();
            let u = SegmentSet::new(offs.clone()).unwrap();
            let g = GridSet::new(1, offs.iter().map(|&k| vec![k])).unwrap();
            for m in 2..=5i64 {
                for choice in 0u32..(1 << 6) {
                    let digits: Vec<i64> = (0..6).filter(|b| choice >> b & 1 == 1).map(|b| b as i64).collect();
                    if digits.len() as i64 != m {
                        continue;
                    }
                    let discrete = verify_1d_tiling(&u, m, &digits).unwrap();
                    let t = SelfAffineTiling::from_digits(
                        RatMatrix::diagonal(&[int(m)]),
                        &digits.iter().map(|&x| vec![x]).collect::<Vec<_>>(),
                    )
                    .unwrap();
                    assert_eq!(verify_tiling_exact(&g, &t).unwrap().valid, discrete, "u={u} m={m} {digits:?}");
                }
            }
        }
    }

    #[test]
    fn exact_matches_normalizer_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let cells: Vec<Vec<i64>> = (0..rng.gen_range(1..5)).map(|_| vec![rng.gen_range(0..3), rng.gen_range(0..3)]).collect();
            let g = GridSet::new(2, cells).unwrap();
            let m = [rng.gen_range(2..4), rng.gen_range(2..4)];
            let mut shifts = std::collections::BTreeSet::new();
            while shifts.len() < 4 {
                shifts.insert(Point::new(vec![rat(rng.gen_range(0..9), 4), rat(rng.gen_range(0..9), 4)]));
            }
            let t = SelfAffineTiling::new(RatMatrix::diagonal(&[int(m[0]), int(m[1])]), shifts.into_iter().collect()).unwrap();
            let v = verify_tiling_exact(&g, &t).unwrap();
            let (cov, ov, out) = oracle(&g, &t);
            assert_eq!((v.covered_measure, v.overlap_measure, v.outside_measure), (cov, ov, out));
        }
    }

    #[test]
    fn raster_examples() {
        let sq = AffineImage::Boxes(GridSet::unit_cube(2).to_box_union());
        let mut last_band = None;
        for res in [3u32, 7, 21] {
            let v = verify_tiling_raster(&sq, &q4(), res).unwrap();
            assert!(v.valid);
            let band = v.error_band();
            if let Some(prev) = last_band {
                assert!(band < prev);
            }
            last_band = Some(band);
        }
        assert_eq!(verify_tiling_raster(&sq, &q4(), 64).unwrap().error_band(), int(0));

        // one quarter pushed right by 1/8: a 1/8 x 1/2 gap, and as much outside
        let h = rat(1, 2);
        let e = rat(1, 8);
        let gap = quarters(&[[e.clone(), int(0)], [h.clone(), int(0)], [int(0), h.clone()], [h.clone(), h]]);
        let v = verify_tiling_raster(&sq, &gap, 64).unwrap();
        assert!(!v.valid);
        let deficit = &v.total_measure - &v.covered_measure;
        assert!((&deficit - rat(1, 16)).abs() <= v.error_band());
        assert_eq!(v.overlap_measure, rat(1, 16));
        let exact = verify_tiling_exact(&GridSet::unit_cube(2), &gap).unwrap();
        assert_eq!(exact.covered_measure, rat(15, 16));
    }

    #[test]
    fn raster_agrees_with_exact_on_products() {
        let spec = ProductSpec::new(vec![
            AdmissibleTriple::new(vec![1, 2], vec![1, 2]).unwrap(),
            AdmissibleTriple::trivial(),
        ]);
        let g = build_product_set(&spec).unwrap();
        let t = crate::product::tile_product_spec(&spec, 8).unwrap().unwrap();
        let region = AffineImage::Boxes(g.to_box_union());
        let exact = verify_tiling_exact(&g, &t).unwrap();
        let raster = verify_tiling_raster(&region, &t, 12).unwrap();
        assert!(exact.valid && raster.valid);
        assert!((&exact.covered_measure - &raster.covered_measure).abs() <= raster.error_band());
    }
}

#[cfg(test)]
mod dragon_tests {
    use super::*;
    use crate::attractor::{attractor_raster, DigitSet, IntegerDilation};

    fn dragon() -> (IntegerDilation, DigitSet, SelfAffineTiling) {
        let m = IntegerDilation::new(vec![vec![1, -1], vec![1, 1]]).unwrap();
        let d = DigitSet::new(vec![vec![0, 0], vec![1, 0]]).unwrap();
        let t = SelfAffineTiling::from_digits(m.matrix(), d.digits()).unwrap();
        (m, d, t)
    }

    #[test]
    fn raster_level_seven_is_split_by_level_six_tiles() {
        let (m, d, t) = dragon();
        let g6 = attractor_raster(&m, &d, 6, 1 << 20).unwrap().region().unwrap().into_polytopes().unwrap();
        let g7 = attractor_raster(&m, &d, 7, 1 << 20).unwrap().region().unwrap();
        let tiles: Vec<Vec<VPolytope>> =
            (0..2).map(|j| g6.iter().map(|p| p.map(&t.tile_map(j)).unwrap()).collect()).collect();
        for res in [16, 64] {
            let v = verify_partition_raster(&g7, &tiles, res).unwrap();
            assert!(v.valid, "{v:?}");
            assert_eq!(v.overlap_measure, Rat::zero());
        }
    }

    #[test]
    fn raster_is_not_its_own_image() {
        // M^{-1}(G_6 + D) is G_7, which differs from G_6 by more than the band
        let (m, d, t) = dragon();
        let g6 = attractor_raster(&m, &d, 6, 1 << 20).unwrap().region().unwrap();
        let v = verify_tiling_raster(&g6, &t, 64).unwrap();
        assert!(!v.valid);
        assert!(v.outside_measure.is_positive());
    }
}
