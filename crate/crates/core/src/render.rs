//! SVG figures for sets, tilings and lily witnesses; PBM bitmaps for rasters.
//! Output depends only on the inputs, byte for byte.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::attractor::AttractorRaster;
use crate::cone::{DirectedCone, LilyWitness};
use crate::error::{Error, Result};
use crate::geometry::{AffineImage, Point};
use crate::product::{GridSet, SelfAffineTiling};
use crate::rational::{to_f64, Rat};
use crate::verify::region_of;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Palette {
    #[default]
    Color,
    Gray,
}

impl Palette {
    const COLORS: [&'static str; 12] =
        ["#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac", "#86bcb6", "#d37295"];
    const GRAYS: [&'static str; 4] = ["#404040", "#808080", "#a0a0a0", "#c8c8c8"];

    pub fn color(&self, i: usize) -> &'static str {
        match self {
            Palette::Color => Self::COLORS[i % Self::COLORS.len()],
            Palette::Gray => Self::GRAYS[i % Self::GRAYS.len()],
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "color" => Ok(Palette::Color),
            "gray" => Ok(Palette::Gray),
            _ => Err(Error::Parse(format!("unknown palette {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RenderSpec {
    /// Pixels per unit.
    pub scale: u32,
    pub palette: Palette,
}

impl RenderSpec {
    pub fn new(scale: u32, palette: Palette) -> Result<Self> {
        if scale == 0 {
            return Err(Error::Invalid("scale must be at least 1".into()));
        }
        Ok(Self { scale, palette })
    }
}

fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Plane coordinates of a point: identity in d = 2, `(x, 0)` in d = 1 and a
/// fixed oblique projection in d = 3.
fn project(p: &[f64]) -> (f64, f64) {
    match p.len() {
        1 => (p[0], 0.0),
        2 => (p[0], p[1]),
        _ => (p[0] + 0.5 * p[2], p[1] + 0.35 * p[2]),
    }
}

struct Canvas {
    scale: f64,
    min: (f64, f64),
    max: (f64, f64),
    body: String,
}

impl Canvas {
    fn new(scale: u32, points: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut min = (f64::INFINITY, f64::INFINITY);
        let mut max = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (x, y) in points {
            min = (min.0.min(x), min.1.min(y));
            max = (max.0.max(x), max.1.max(y));
        }
        if !min.0.is_finite() {
            min = (0.0, 0.0);
            max = (1.0, 1.0);
        }
        Self { scale: f64::from(scale), min, max, body: String::new() }
    }

    const MARGIN: f64 = 4.0;

    /// SVG coordinates, y pointing down.
    fn at(&self, p: (f64, f64)) -> (f64, f64) {
        (Self::MARGIN + (p.0 - self.min.0) * self.scale, Self::MARGIN + (self.max.1 - p.1) * self.scale)
    }

    fn polygon(&mut self, pts: &[(f64, f64)], fill: &str, extra: &str) {
        let coords: Vec<String> = pts.iter().map(|&p| {
            let (x, y) = self.at(p);
            format!("{},{}", num(x), num(y))
        }).collect();
        let _ = writeln!(self.body, "<polygon points=\"{}\" fill=\"{fill}\" stroke=\"#222222\" stroke-width=\"0.5\"{extra}/>", coords.join(" "));
    }

    fn line(&mut self, a: (f64, f64), b: (f64, f64), stroke: &str) {
        let (a, b) = (self.at(a), self.at(b));
        let _ = writeln!(
            self.body,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{stroke}\" stroke-width=\"1\"/>",
            num(a.0),
            num(a.1),
            num(b.0),
            num(b.1)
        );
    }

    fn dot(&mut self, p: (f64, f64), fill: &str) {
        let (x, y) = self.at(p);
        let _ = writeln!(self.body, "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{fill}\"/>", num(x), num(y));
    }

    fn finish(self) -> String {
        let w = 2.0 * Self::MARGIN + (self.max.0 - self.min.0) * self.scale;
        let h = 2.0 * Self::MARGIN + (self.max.1 - self.min.1) * self.scale;
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n{}</svg>\n",
            num(w),
            num(h),
            num(w),
            num(h),
            self.body
        )
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > 3 {
        return Err(Error::Unsupported(format!("rendering in dimension {d}")));
    }
    Ok(())
}

/// Outline of an axis box after projection: a rectangle, or a hexagon for
/// a projected cube.
fn box_outline(lo: &[f64], hi: &[f64]) -> Vec<(f64, f64)> {
    match lo.len() {
        1 => vec![(lo[0], 0.0), (hi[0], 0.0), (hi[0], 1.0), (lo[0], 1.0)],
        2 => vec![(lo[0], lo[1]), (hi[0], lo[1]), (hi[0], hi[1]), (lo[0], hi[1])],
        _ => {
            let c = |x: f64, y: f64, z: f64| project(&[x, y, z]);
            vec![
                c(lo[0], lo[1], lo[2]),
                c(hi[0], lo[1], lo[2]),
                c(hi[0], lo[1], hi[2]),
                c(hi[0], hi[1], hi[2]),
                c(lo[0], hi[1], hi[2]),
                c(lo[0], hi[1], lo[2]),
            ]
        }
    }
}

fn f64s(v: &[Rat]) -> Vec<f64> {
    v.iter().map(to_f64).collect()
}

/// Cells back to front, so that nearer cubes cover farther ones.
fn depth_order(cells: &BTreeSet<Vec<i64>>) -> Vec<&Vec<i64>> {
    let mut v: Vec<&Vec<i64>> = cells.iter().collect();
    if v.first().is_some_and(|c| c.len() == 3) {
        v.sort_by_key(|c| (-c[1], c[2], c[0]));
    }
    v
}

pub fn grid_svg(g: &GridSet, spec: &RenderSpec) -> Result<String> {
    check_dim(g.dim())?;
    let outlines: Vec<Vec<(f64, f64)>> = depth_order(g.cells())
        .into_iter()
        .map(|c| {
            let lo: Vec<f64> = c.iter().map(|&x| x as f64).collect();
            let hi: Vec<f64> = lo.iter().map(|x| x + 1.0).collect();
            box_outline(&lo, &hi)
        })
        .collect();
    let mut canvas = Canvas::new(spec.scale, outlines.iter().flatten().copied());
    for o in &outlines {
        canvas.polygon(o, spec.palette.color(0), "");
    }
    Ok(canvas.finish())
}

/// Vertices of a convex polygon in counterclockwise order.
fn polygon_order(pts: &[Point]) -> Vec<(f64, f64)> {
    let v: Vec<(f64, f64)> = pts.iter().map(|p| project(&f64s(&p.coords))).collect();
    let n = v.len() as f64;
    let c = (v.iter().map(|p| p.0).sum::<f64>() / n, v.iter().map(|p| p.1).sum::<f64>() / n);
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| {
        let ta = (v[a].1 - c.1).atan2(v[a].0 - c.0);
        let tb = (v[b].1 - c.1).atan2(v[b].0 - c.0);
        ta.total_cmp(&tb)
    });
    idx.into_iter().map(|i| v[i]).collect()
}

/// One color per tile. Tiles of monomial dilations are drawn cell by cell;
/// other 2-D tiles as their convex pieces.
pub fn tiling_svg(g: &GridSet, t: &SelfAffineTiling, spec: &RenderSpec) -> Result<String> {
    check_dim(g.dim())?;
    crate::product::check_dims(g, t)?;
    let mut shapes: Vec<(usize, Vec<(f64, f64)>)> = Vec::new();
    for j in 0..t.shifts().len() {
        match region_of(g, &t.tile_map(j))? {
            AffineImage::Boxes(u) => {
                let mut boxes = u.boxes.clone();
                if g.dim() == 3 {
                    boxes.sort_by(|a, b| b.lo().coords[1].cmp(&a.lo().coords[1]).then(a.lo().coords[2].cmp(&b.lo().coords[2])));
                }
                for b in boxes {
                    shapes.push((j, box_outline(&f64s(&b.lo().coords), &f64s(&b.hi().coords))));
                }
            }
            AffineImage::Polytopes(ps) => {
                if g.dim() == 3 {
                    return Err(Error::Unsupported("non-monomial tilings in dimension 3".into()));
                }
                for p in ps {
                    shapes.push((j, polygon_order(p.vertices())));
                }
            }
        }
    }
    let mut canvas = Canvas::new(spec.scale, shapes.iter().flat_map(|s| s.1.iter().copied()));
    for (j, s) in &shapes {
        canvas.polygon(s, spec.palette.color(*j), "");
    }
    Ok(canvas.finish())
}

/// The cone edges up to their directing points, both shifted
/// parallelepipeds, and the common point.
pub fn lily_svg(dc: &DirectedCone, w: &LilyWitness, spec: &RenderSpec) -> Result<String> {
    let d = dc.cone().dim();
    if d != 3 {
        return Err(Error::Unsupported(format!("lily figures in dimension {d}")));
    }
    let apex = dc.cone().apex();
    let seg = |i: usize| dc.directing()[i].sub(apex);
    let para = |shift: &Point, f: &[usize]| -> Vec<(f64, f64)> {
        let (u, v) = (seg(f[0]), seg(f[1]));
        [shift.clone(), shift.add(&u), shift.add(&u).add(&v), shift.add(&v)].iter().map(|p| project(&f64s(&p.coords))).collect()
    };
    let pa = para(&w.a, &w.facet_a);
    let pb = para(&w.b, &w.facet_b);
    let ap = project(&f64s(&apex.coords));
    let tips: Vec<(f64, f64)> = dc.directing().iter().map(|p| project(&f64s(&p.coords))).collect();
    let x = project(&f64s(&w.x.coords));
    let mut canvas = Canvas::new(spec.scale, pa.iter().chain(&pb).chain(&tips).copied().chain([ap, x]));
    for t in &tips {
        canvas.line(ap, *t, "#222222");
    }
    canvas.polygon(&pa, spec.palette.color(0), " fill-opacity=\"0.5\"");
    canvas.polygon(&pb, spec.palette.color(1), " fill-opacity=\"0.5\"");
    canvas.dot(project(&f64s(&w.a.coords)), "#000000");
    canvas.dot(project(&f64s(&w.b.coords)), "#000000");
    canvas.dot(x, "#d00000");
    Ok(canvas.finish())
}

/// Plain PBM of the cell indices, one pixel per cell, top row = largest y.
pub fn cells_pbm(d: usize, cells: &BTreeSet<Vec<i64>>) -> Result<String> {
    if d == 0 || d > 2 {
        return Err(Error::Unsupported(format!("bitmaps in dimension {d}")));
    }
    if cells.is_empty() {
        return Err(Error::Empty("no cells to draw".into()));
    }
    let coord = |c: &Vec<i64>, i: usize| if i < d { c[i] } else { 0 };
    let (x0, x1) = (cells.iter().map(|c| c[0]).min().unwrap(), cells.iter().map(|c| c[0]).max().unwrap());
    let (y0, y1) = (cells.iter().map(|c| coord(c, 1)).min().unwrap(), cells.iter().map(|c| coord(c, 1)).max().unwrap());
    let (w, h) = (x1 - x0 + 1, y1 - y0 + 1);
    let mut out = format!("P1\n{w} {h}\n");
    for y in (y0..=y1).rev() {
        let row: Vec<&str> = (x0..=x1)
            .map(|x| {
                let k = if d == 1 { vec![x] } else { vec![x, y] };
                if cells.contains(&k) {
                    "1"
                } else {
                    "0"
                }
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    Ok(out)
}

pub fn raster_pbm(r: &AttractorRaster) -> Result<String> {
    cells_pbm(r.dilation.dim(), &r.cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attractor::{attractor_raster, DigitSet, IntegerDilation};
    use crate::rational::{int, RatMatrix};

    fn spec() -> RenderSpec {
        RenderSpec::new(16, Palette::Color).unwrap()
    }

    #[test]
    fn quartered_square_has_four_colors() {
        let t = SelfAffineTiling::from_digits(RatMatrix::diagonal(&[int(2), int(2)]), &[vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]).unwrap();
        let svg = tiling_svg(&GridSet::unit_cube(2), &t, &spec()).unwrap();
        assert_eq!(svg.matches("<polygon").count(), 4);
        let colors: BTreeSet<&str> = (0..4).map(|i| Palette::Color.color(i)).collect();
        assert!(colors.iter().all(|c| svg.contains(c)));
        assert_eq!(svg, tiling_svg(&GridSet::unit_cube(2), &t, &spec()).unwrap());
        assert!(svg.contains("points=\"4,20 12,20 12,12 4,12\""));
    }

    #[test]
    fn twin_dragon_bitmap() {
        let m = IntegerDilation::new(vec![vec![1, -1], vec![1, 1]]).unwrap();
        let d = DigitSet::new(vec![vec![0, 0], vec![1, 0]]).unwrap();
        let r = attractor_raster(&m, &d, 10, 1 << 20).unwrap();
        let pbm = raster_pbm(&r).unwrap();
        assert_eq!(pbm.matches('1').count() - pbm.lines().take(2).collect::<String>().matches('1').count(), 1024);
        assert!(pbm.starts_with("P1\n"));
    }

    #[test]
    fn three_dimensional_and_errors() {
        let g = GridSet::new(3, vec![vec![0, 0, 0], vec![1, 0, 0], vec![0, 0, 1]]).unwrap();
        let svg = grid_svg(&g, &spec()).unwrap();
        assert_eq!(svg.matches("<polygon").count(), 3);
        assert!(grid_svg(&GridSet::unit_cube(4), &spec()).is_err());
        assert!(RenderSpec::new(0, Palette::Gray).is_err());
        assert!(cells_pbm(3, &BTreeSet::from([vec![0, 0, 0]])).is_err());
    }
}
