//! Line-oriented text files.
//!
//! The first non-blank line names the kind and the dimension, e.g. `grid 2`.
//! Sections are introduced by a bare keyword line (`dilation`, `shifts`, …)
//! and hold one whitespace-separated tuple per line. Rationals are written
//! `p/q`. Blank lines and lines starting with `#` are ignored.
//!
//! ```text
//! tiling 2
//! dilation
//! 2 0
//! 0 2
//! shifts
//! 0 0
//! 1/2 0
//! ```

use std::fmt::Write as _;

use crate::attractor::{AttractorRaster, DigitSet, IntegerDilation};
use crate::cone::{DirectedCone, LilyWitness, PolyCone};
use crate::error::{Error, Result};
use crate::geometry::{AffineMap, AxisBox, BoxUnion, Point};
use crate::onedim::AdmissibleTriple;
use crate::product::{GridSet, ProductSpec, SelfAffineTiling};
use crate::rational::{fmt_rat, parse_rat, Rat, RatMatrix};

#[derive(Clone, Debug)]
pub enum Document {
    Grid(GridSet),
    Tiling(SelfAffineTiling),
    /// Integer dilation with a digit set.
    Digits(IntegerDilation, DigitSet),
    Boxes(BoxUnion),
    Affine(AffineMap),
    Cone(PolyCone),
    DirectedCone(DirectedCone),
    Raster(AttractorRaster),
    Lily(LilyWitness),
}

impl Document {
    pub fn kind(&self) -> &'static str {
        match self {
            Document::Grid(_) => "grid",
            Document::Tiling(_) => "tiling",
            Document::Digits(..) => "digits",
            Document::Boxes(_) => "boxunion",
            Document::Affine(_) => "affine",
            Document::Cone(_) | Document::DirectedCone(_) => "cone",
            Document::Raster(_) => "raster",
            Document::Lily(_) => "lily",
        }
    }
}

fn rat_line(v: &[Rat]) -> String {
    v.iter().map(fmt_rat).collect::<Vec<_>>().join(" ")
}

fn int_line(v: &[i64]) -> String {
    v.iter().map(i64::to_string).collect::<Vec<_>>().join(" ")
}

fn index_line(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn section(out: &mut String, name: &str, lines: impl IntoIterator<Item = String>) {
    out.push_str(name);
    out.push('\n');
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
}

pub fn write_document(doc: &Document) -> String {
    let mut out = String::new();
    match doc {
        Document::Grid(g) => {
            let _ = writeln!(out, "grid {}", g.dim());
            for c in g.cells() {
                let _ = writeln!(out, "{}", int_line(c));
            }
        }
        Document::Tiling(t) => {
            let _ = writeln!(out, "tiling {}", t.dim());
            section(&mut out, "dilation", t.dilation().to_rows().iter().map(|r| rat_line(r)));
            section(&mut out, "shifts", t.shifts().iter().map(|s| rat_line(&s.coords)));
        }
        Document::Digits(m, d) => {
            let _ = writeln!(out, "digits {}", m.dim());
            section(&mut out, "dilation", m.rows().iter().map(|r| int_line(r)));
            section(&mut out, "digits", d.digits().iter().map(|r| int_line(r)));
        }
        Document::Boxes(u) => {
            let _ = writeln!(out, "boxunion {}", u.dim().unwrap_or(0));
            for b in &u.boxes {
                let _ = writeln!(out, "{} | {}", rat_line(&b.lo().coords), rat_line(&b.hi().coords));
            }
        }
        Document::Affine(a) => {
            let _ = writeln!(out, "affine {}", a.dim());
            section(&mut out, "linear", a.linear.to_rows().iter().map(|r| rat_line(r)));
            section(&mut out, "translate", [rat_line(&a.translate.coords)]);
        }
        Document::Cone(c) => write_cone(&mut out, c, None),
        Document::DirectedCone(dc) => write_cone(&mut out, dc.cone(), Some(dc.directing())),
        Document::Raster(r) => {
            let _ = writeln!(out, "raster {}", r.dilation.dim());
            let _ = writeln!(out, "depth {}", r.depth);
            section(&mut out, "dilation", r.dilation.rows().iter().map(|row| int_line(row)));
            section(&mut out, "cells", r.cells.iter().map(|c| int_line(c)));
        }
        Document::Lily(w) => {
            let _ = writeln!(out, "lily {}", w.x.dim());
            let _ = writeln!(out, "facet_a {}", index_line(&w.facet_a));
            let _ = writeln!(out, "facet_b {}", index_line(&w.facet_b));
            let _ = writeln!(out, "edges {} {}", w.edge_a, w.edge_b);
            section(&mut out, "a", [rat_line(&w.a.coords)]);
            section(&mut out, "b", [rat_line(&w.b.coords)]);
            section(&mut out, "x", [rat_line(&w.x.coords)]);
        }
    }
    out
}

fn write_cone(out: &mut String, c: &PolyCone, directing: Option<&[Point]>) {
    let _ = writeln!(out, "cone {}", c.dim());
    section(out, "apex", [rat_line(&c.apex().coords)]);
    section(out, "rays", c.rays().iter().map(|r| rat_line(r)));
    if let Some(pts) = directing {
        section(out, "directing", pts.iter().map(|p| rat_line(&p.coords)));
    }
}

/// Meaningful lines with their 1-based numbers.
struct Lines<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Self { items, pos: 0 }
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.items.get(self.pos).copied()
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let r = self.peek();
        self.pos += 1;
        r
    }

    fn line_no(&self) -> usize {
        self.peek().map_or_else(|| self.items.last().map_or(0, |l| l.0 + 1), |l| l.0)
    }

    fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::Parse(format!("line {}: {msg}", self.line_no()))
    }

    fn expect_keyword(&mut self, word: &str) -> Result<()> {
        match self.peek() {
            Some((_, l)) if l == word => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(format!("expected `{word}`"))),
        }
    }

    /// Tuple lines until the next keyword line or the end.
    fn tuples(&mut self, d: usize, keywords: &[&str]) -> Result<Vec<Vec<&'a str>>> {
        let mut out = Vec::new();
        while let Some((n, l)) = self.peek() {
            if keywords.contains(&l) {
                break;
            }
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != d {
                return Err(Error::Parse(format!("line {n}: expected {d} entries, found {}", toks.len())));
            }
            out.push(toks);
            self.pos += 1;
        }
        Ok(out)
    }

    fn keyed(&mut self, key: &str) -> Result<Vec<&'a str>> {
        match self.peek() {
            Some((_, l)) if l.split_whitespace().next() == Some(key) => {
                self.pos += 1;
                Ok(l.split_whitespace().skip(1).collect())
            }
            _ => Err(self.err(format!("expected `{key} …`"))),
        }
    }

    fn finish(&self) -> Result<()> {
        match self.peek() {
            None => Ok(()),
            Some((n, l)) => Err(Error::Parse(format!("line {n}: unexpected `{l}`"))),
        }
    }
}

fn rats(t: &[&str]) -> Result<Vec<Rat>> {
    t.iter().map(|s| parse_rat(s)).collect()
}

fn ints(t: &[&str]) -> Result<Vec<i64>> {
    t.iter().map(|s| s.parse::<i64>().map_err(|_| Error::Parse(format!("{s:?} is not an integer")))).collect()
}

fn indices(t: &[&str]) -> Result<Vec<usize>> {
    t.iter().map(|s| s.parse::<usize>().map_err(|_| Error::Parse(format!("{s:?} is not an index")))).collect()
}

const KEYWORDS: &[&str] = &["dilation", "shifts", "digits", "linear", "translate", "apex", "rays", "directing", "cells", "a", "b", "x"];

pub fn parse_document(text: &str) -> Result<Document> {
    let mut lines = Lines::new(text);
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty file".into()))?;
    let mut head = header.split_whitespace();
    let kind = head.next().unwrap_or_default();
    let d: usize = head
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse(format!("line 1: header {header:?} needs a kind and a dimension")))?;
    if head.next().is_some() || d == 0 {
        return Err(Error::Parse(format!("line 1: bad header {header:?}")));
    }
    let doc = match kind {
        "grid" => {
            let cells = lines.tuples(d, &[])?.iter().map(|t| ints(t)).collect::<Result<Vec<_>>>()?;
            Document::Grid(GridSet::new(d, cells)?)
        }
        "tiling" => {
            lines.expect_keyword("dilation")?;
            let rows = lines.tuples(d, KEYWORDS)?.iter().map(|t| rats(t)).collect::<Result<Vec<_>>>()?;
            lines.expect_keyword("shifts")?;
            let shifts = lines.tuples(d, KEYWORDS)?.iter().map(|t| rats(t).map(Point::new)).collect::<Result<Vec<_>>>()?;
            Document::Tiling(SelfAffineTiling::new(square(rows, d)?, shifts)?)
        }
        "digits" => {
            lines.expect_keyword("dilation")?;
            let rows = lines.tuples(d, KEYWORDS)?.iter().map(|t| ints(t)).collect::<Result<Vec<_>>>()?;
            lines.expect_keyword("digits")?;
            let digits = lines.tuples(d, KEYWORDS)?.iter().map(|t| ints(t)).collect::<Result<Vec<_>>>()?;
            if rows.len() != d {
                return Err(Error::Parse(format!("dilation has {} rows, expected {d}", rows.len())));
            }
            Document::Digits(IntegerDilation::new(rows)?, DigitSet::new(digits)?)
        }
        "boxunion" => {
            let mut boxes = Vec::new();
            while let Some((n, l)) = lines.next() {
                let (lo, hi) = l.split_once('|').ok_or_else(|| Error::Parse(format!("line {n}: expected `lo | hi`")))?;
                let lo: Vec<&str> = lo.split_whitespace().collect();
                let hi: Vec<&str> = hi.split_whitespace().collect();
                if lo.len() != d || hi.len() != d {
                    return Err(Error::Parse(format!("line {n}: box corners need {d} entries")));
                }
                boxes.push(AxisBox::new(Point::new(rats(&lo)?), Point::new(rats(&hi)?))?);
            }
            Document::Boxes(BoxUnion::new(boxes))
        }
        "affine" => {
            lines.expect_keyword("linear")?;
            let rows = lines.tuples(d, KEYWORDS)?.iter().map(|t| rats(t)).collect::<Result<Vec<_>>>()?;
            lines.expect_keyword("translate")?;
            let tr = one_point(&mut lines, d)?;
            Document::Affine(AffineMap::new(square(rows, d)?, tr)?)
        }
        "cone" => {
            lines.expect_keyword("apex")?;
            let apex = one_point(&mut lines, d)?;
            lines.expect_keyword("rays")?;
            let rays = lines.tuples(d, KEYWORDS)?.iter().map(|t| rats(t)).collect::<Result<Vec<_>>>()?;
            let cone = PolyCone::new(apex, rays)?;
            if lines.peek().map(|l| l.1) == Some("directing") {
                lines.next();
                let pts = lines.tuples(d, KEYWORDS)?.iter().map(|t| rats(t).map(Point::new)).collect::<Result<Vec<_>>>()?;
                Document::DirectedCone(DirectedCone::new(cone, pts)?)
            } else {
                Document::Cone(cone)
            }
        }
        "raster" => {
            let depth = lines.keyed("depth")?;
            let depth: u32 = match depth.as_slice() {
                [x] => x.parse().map_err(|_| lines.err("bad depth"))?,
                _ => return Err(lines.err("bad depth")),
            };
            lines.expect_keyword("dilation")?;
            let rows = lines.tuples(d, KEYWORDS)?.iter().map(|t| ints(t)).collect::<Result<Vec<_>>>()?;
            lines.expect_keyword("cells")?;
            let cells = lines.tuples(d, KEYWORDS)?.iter().map(|t| ints(t)).collect::<Result<_>>()?;
            Document::Raster(AttractorRaster { depth, dilation: IntegerDilation::new(rows)?, cells })
        }
        "lily" => {
            let facet_a = indices(&lines.keyed("facet_a")?)?;
            let facet_b = indices(&lines.keyed("facet_b")?)?;
            let edges = indices(&lines.keyed("edges")?)?;
            if edges.len() != 2 {
                return Err(lines.err("`edges` needs two indices"));
            }
            lines.expect_keyword("a")?;
            let a = one_point(&mut lines, d)?;
            lines.expect_keyword("b")?;
            let b = one_point(&mut lines, d)?;
            lines.expect_keyword("x")?;
            let x = one_point(&mut lines, d)?;
            Document::Lily(LilyWitness { facet_a, facet_b, edge_a: edges[0], edge_b: edges[1], a, b, x })
        }
        other => return Err(Error::Parse(format!("line 1: unknown kind {other:?}"))),
    };
    lines.finish()?;
    Ok(doc)
}

fn square(rows: Vec<Vec<Rat>>, d: usize) -> Result<RatMatrix> {
    if rows.len() != d {
        return Err(Error::Parse(format!("matrix has {} rows, expected {d}", rows.len())));
    }
    RatMatrix::from_rows(rows)
}

fn one_point(lines: &mut Lines<'_>, d: usize) -> Result<Point> {
    let t = lines.tuples(d, KEYWORDS)?;
    match t.as_slice() {
        [p] => Ok(Point::new(rats(p)?)),
        _ => Err(lines.err("expected exactly one point")),
    }
}

macro_rules! typed_parser {
    ($name:ident, $variant:ident, $ty:ty) => {
        pub fn $name(text: &str) -> Result<$ty> {
            match parse_document(text)? {
                Document::$variant(v) => Ok(v),
                other => Err(Error::Parse(format!("expected a {} file, found {}", stringify!($variant).to_lowercase(), other.kind()))),
            }
        }
    };
}

typed_parser!(parse_grid, Grid, GridSet);
typed_parser!(parse_tiling, Tiling, SelfAffineTiling);
typed_parser!(parse_boxes, Boxes, BoxUnion);
typed_parser!(parse_affine, Affine, AffineMap);
typed_parser!(parse_raster, Raster, AttractorRaster);
typed_parser!(parse_lily, Lily, LilyWitness);

pub fn parse_digits(text: &str) -> Result<(IntegerDilation, DigitSet)> {
    match parse_document(text)? {
        Document::Digits(m, d) => Ok((m, d)),
        other => Err(Error::Parse(format!("expected a digits file, found {}", other.kind()))),
    }
}

/// Plain or directed cone.
pub fn parse_cone(text: &str) -> Result<Document> {
    match parse_document(text)? {
        doc @ (Document::Cone(_) | Document::DirectedCone(_)) => Ok(doc),
        other => Err(Error::Parse(format!("expected a cone file, found {}", other.kind()))),
    }
}

/// Triples joined by `x`, each optionally prefixed with `L*`:
/// `(3;(1,2,8);(1,2,3))x(3;(1,2,12);(1,3,2))`.
pub fn parse_product_spec(s: &str) -> Result<ProductSpec> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in compact.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            'x' | 'X' if depth == 0 => {
                parts.push(&compact[start..i]);
                start = i + 1;
            }
            _ => {}
        }
        if depth < 0 {
            return Err(Error::Parse(format!("unbalanced parentheses in {s:?}")));
        }
    }
    parts.push(&compact[start..]);
    let mut triples = Vec::new();
    let mut stretch = Vec::new();
    for p in parts {
        let (l, body) = match p.split_once('*') {
            Some((l, body)) => (l.parse::<i64>().map_err(|_| Error::Parse(format!("bad stretch in {p:?}")))?, body),
            None => (1, p),
        };
        if l < 1 {
            return Err(Error::Parse(format!("stretch must be positive in {p:?}")));
        }
        triples.push(body.parse::<AdmissibleTriple>()?);
        stretch.push(l);
    }
    Ok(ProductSpec { triples, stretch })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{lily_witness, LilyOutcome};
    use crate::rational::{int, rat};

    fn round_trip(doc: &Document) {
        let text = write_document(doc);
        let back = parse_document(&text).unwrap();
        assert_eq!(write_document(&back), text);
    }

    #[test]
    fn tiling_text() {
        let text = "tiling 2\n# quarters\ndilation\n2 0\n0 2\n\nshifts\n0 0\n1/2 0\n0 1/2\n1/2 1/2\n";
        let t = parse_tiling(text).unwrap();
        assert_eq!(t.shifts()[3], Point::new(vec![rat(1, 2), rat(1, 2)]));
        let out = write_document(&Document::Tiling(t));
        assert_eq!(out, text.replace("# quarters\n", "").replace("\n\n", "\n"));
    }

    #[test]
    fn all_kinds_round_trip() {
        let g = GridSet::new(2, vec![vec![0, 0], vec![1, 0], vec![0, 1]]).unwrap();
        round_trip(&Document::Grid(g.clone()));
        round_trip(&Document::Boxes(g.to_box_union()));
        let m = IntegerDilation::new(vec![vec![1, -1], vec![1, 1]]).unwrap();
        let d = DigitSet::new(vec![vec![0, 0], vec![1, 0]]).unwrap();
        round_trip(&Document::Digits(m.clone(), d.clone()));
        let r = crate::attractor::attractor_raster(&m, &d, 3, 1 << 10).unwrap();
        round_trip(&Document::Raster(r));
        let a = AffineMap::new(RatMatrix::diagonal(&[rat(1, 3), int(-2)]), Point::new(vec![rat(5, 7), int(0)])).unwrap();
        round_trip(&Document::Affine(a));
        let cone = PolyCone::from_i64(&[0, 0, 0], &[vec![1, 1, 1], vec![-1, 1, 1], vec![-1, -1, 1], vec![1, -1, 1]]).unwrap();
        round_trip(&Document::Cone(cone.clone()));
        let dc = DirectedCone::with_lengths(cone, &[int(1), int(3), rat(1, 2), int(3)]).unwrap();
        round_trip(&Document::DirectedCone(dc.clone()));
        let LilyOutcome::Witness(w) = lily_witness(&dc).unwrap() else { unreachable!() };
        round_trip(&Document::Lily(w.clone()));
        assert_eq!(parse_lily(&write_document(&Document::Lily(w.clone()))).unwrap(), w);
    }

    #[test]
    fn malformed_inputs() {
        for bad in [
            "",
            "grid",
            "grid 2\n0 0 0\n",
            "tiling 2\nshifts\n0 0\n",
            "tiling 2\ndilation\n2 0\n0 2\nshifts\n0 a\n",
            "boxunion 1\n0 1\n",
            "cone 2\napex\n0 0\nrays\n1 0\nextra words here\n",
            "widget 2\n",
        ] {
            assert!(matches!(parse_document(bad), Err(Error::Parse(_))), "{bad:?}");
        }
        assert!(parse_grid("tiling 1\ndilation\n2\nshifts\n0\n").is_err());
    }

    #[test]
    fn product_spec_text() {
        let s = parse_product_spec("(3;(1,2,8);(1,2,3)) x (3;(1,2,12);(1,3,2))").unwrap();
        assert_eq!(s.to_string(), "(3; (1,2,8); (1,2,3)) x (3; (1,2,12); (1,3,2))");
        assert_eq!(parse_product_spec(&s.to_string()).unwrap(), s);
        let s = parse_product_spec("2*(1;(1);(1))x(2;(1,2);(1,2))").unwrap();
        assert_eq!(s.stretch, vec![2, 1]);
        assert_eq!(parse_product_spec(&s.to_string()).unwrap(), s);
        assert!(parse_product_spec("(2;(1,3);(1,1))").is_err());
        assert!(parse_product_spec("(1;(1);(1)))x(").is_err());
    }
}
