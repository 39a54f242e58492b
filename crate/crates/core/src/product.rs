//! Grid sets, direct products of one-dimensional data, and self-affine
//! tilings with a rational dilation.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{AffineMap, AxisBox, BoxUnion, Point};
use crate::onedim::{expand, factorize, find_1d_tiling, AdmissibleTriple, OneDimTiling, SegmentSet};
use crate::rational::{int, Rat, RatMatrix};
use crate::spectral::is_expanding;

/// Union of unit cubes `k + [0,1]^d`, translated so that the componentwise
/// minimum of the cells is the origin.
#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct GridSet {
    d: usize,
    cells: BTreeSet<Vec<i64>>,
}

impl GridSet {
    pub fn new(d: usize, cells: impl IntoIterator<Item = Vec<i64>>) -> Result<Self> {
        Ok(Self::with_offset(d, cells)?.0)
    }

    /// Canonical grid set plus the translation that was removed.
    pub fn with_offset(d: usize, cells: impl IntoIterator<Item = Vec<i64>>) -> Result<(Self, Vec<i64>)> {
        if d == 0 {
            return Err(Error::Dimension("grid sets need d >= 1".into()));
        }
        let raw: Vec<Vec<i64>> = cells.into_iter().collect();
        if raw.is_empty() {
            return Err(Error::Empty("grid set without cells".into()));
        }
        if let Some(bad) = raw.iter().find(|c| c.len() != d) {
            return Err(Error::Dimension(format!("cell {bad:?} in a {d}-dimensional grid set")));
        }
        let offset: Vec<i64> = (0..d).map(|i| raw.iter().map(|c| c[i]).min().unwrap()).collect();
        let cells = raw.into_iter().map(|c| c.iter().zip(&offset).map(|(a, b)| a - b).collect()).collect();
        Ok((Self { d, cells }, offset))
    }

    pub fn unit_cube(d: usize) -> Self {
        Self { d, cells: std::iter::once(vec![0; d]).collect() }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn cells(&self) -> &BTreeSet<Vec<i64>> {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        self.cells.contains(k)
    }

    pub fn measure(&self) -> Rat {
        int(self.cells.len() as i64)
    }

    /// Number of cells along each axis of the bounding box.
    pub fn extents(&self) -> Vec<i64> {
        (0..self.d).map(|i| self.cells.iter().map(|c| c[i]).max().unwrap() + 1).collect()
    }

    pub fn projection(&self, axis: usize) -> Vec<i64> {
        self.cells.iter().map(|c| c[axis]).collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn to_box_union(&self) -> BoxUnion {
        BoxUnion::new(self.cells.iter().map(|k| AxisBox::unit_cell(k)).collect())
    }

    /// Cells equal the Cartesian product of their axis projections.
    pub fn is_product(&self) -> bool {
        let count: usize = (0..self.d).map(|i| self.projection(i).len()).product();
        count == self.cells.len()
    }
}

impl fmt::Display for GridSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .cells
            .iter()
            .map(|c| format!("({})", c.iter().map(i64::to_string).collect::<Vec<_>>().join(",")))
            .collect();
        write!(f, "{{{}}}", parts.join(" "))
    }
}

/// One admissible triple per axis. Axis `i` is the segment set of its triple
/// stretched by `stretch[i]`: each unit segment `k` becomes the run
/// `stretch·k, …, stretch·k + stretch − 1`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ProductSpec {
    pub triples: Vec<AdmissibleTriple>,
    pub stretch: Vec<i64>,
}

impl ProductSpec {
    pub fn new(triples: Vec<AdmissibleTriple>) -> Self {
        let stretch = vec![1; triples.len()];
        Self { triples, stretch }
    }

    pub fn dim(&self) -> usize {
        self.triples.len()
    }

    pub fn axis_set(&self, axis: usize) -> SegmentSet {
        let l = self.stretch[axis];
        let offsets = expand(&self.triples[axis]).offsets().iter().flat_map(|&k| (0..l).map(move |j| l * k + j)).collect::<Vec<_>>();
        SegmentSet::new(offsets).expect("expansions contain 0")
    }
}

impl fmt::Display for ProductSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .triples
            .iter()
            .zip(&self.stretch)
            .map(|(t, &l)| if l == 1 { t.to_string() } else { format!("{l}*{t}") })
            .collect();
        write!(f, "{}", parts.join(" x "))
    }
}

pub fn build_product_set(spec: &ProductSpec) -> Result<GridSet> {
    if spec.triples.is_empty() {
        return Err(Error::Empty("product of no axes".into()));
    }
    if spec.stretch.len() != spec.triples.len() || spec.stretch.iter().any(|&l| l < 1) {
        return Err(Error::Invalid("one positive stretch per axis required".into()));
    }
    let mut cells: Vec<Vec<i64>> = vec![Vec::new()];
    for axis in 0..spec.dim() {
        let u = spec.axis_set(axis);
        cells = cells.iter().flat_map(|c| u.offsets().iter().map(move |&k| [c.as_slice(), &[k]].concat())).collect();
    }
    GridSet::new(spec.dim(), cells)
}

/// Tiles are `M^{-1}(G) + shift_j`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SelfAffineTiling {
    dilation: RatMatrix,
    shifts: Vec<Point>,
}

impl SelfAffineTiling {
    pub fn new(dilation: RatMatrix, shifts: Vec<Point>) -> Result<Self> {
        Self::check(&dilation, &shifts)?;
        let distinct: BTreeSet<&Point> = shifts.iter().collect();
        if distinct.len() != shifts.len() {
            return Err(Error::Invalid("repeated shift".into()));
        }
        Ok(Self { dilation, shifts })
    }

    fn check(dilation: &RatMatrix, shifts: &[Point]) -> Result<()> {
        if !dilation.is_square() {
            return Err(Error::Dimension("dilation must be square".into()));
        }
        if shifts.is_empty() {
            return Err(Error::Empty("tiling without shifts".into()));
        }
        if shifts.iter().any(|s| s.dim() != dilation.rows()) {
            return Err(Error::Dimension("shift dimension differs from the dilation".into()));
        }
        if !is_expanding(dilation)? {
            return Err(Error::NotExpanding);
        }
        Ok(())
    }

    /// Shifts `M^{-1}·d` for integer digits `d`.
    pub fn from_digits(dilation: RatMatrix, digits: &[Vec<i64>]) -> Result<Self> {
        let inv = dilation.inverse()?;
        let mut sorted: Vec<&Vec<i64>> = digits.iter().collect();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Invalid("repeated shift".into()));
        }
        let shifts: Vec<Point> = if inv.is_diagonal() {
            let diag: Vec<&Rat> = (0..inv.rows()).map(|i| &inv[(i, i)]).collect();
            digits.iter().map(|d| Point::new(d.iter().zip(&diag).map(|(&x, &q)| q * Rat::from_integer(x.into())).collect())).collect()
        } else {
            digits.iter().map(|d| Point::new(inv.apply(&Point::from_i64(d).coords))).collect()
        };
        Self::check(&dilation, &shifts)?;
        Ok(Self { dilation, shifts })
    }

    pub fn dim(&self) -> usize {
        self.dilation.rows()
    }

    pub fn dilation(&self) -> &RatMatrix {
        &self.dilation
    }

    pub fn shifts(&self) -> &[Point] {
        &self.shifts
    }

    /// `M·shift_j` when every one of them is integral.
    pub fn digits(&self) -> Option<Vec<Vec<i64>>> {
        self.shifts
            .iter()
            .map(|s| {
                self.dilation.apply(&s.coords).iter().map(|v| if v.is_integer() { crate::rational::to_i64(v) } else { None }).collect()
            })
            .collect()
    }

    /// `x ↦ M^{-1}x + shift_j`.
    pub fn tile_map(&self, j: usize) -> AffineMap {
        let inv = self.dilation.inverse().expect("dilation is invertible");
        AffineMap { linear: inv, translate: self.shifts[j].clone() }
    }
}

pub fn build_product_tiling(axes: &[OneDimTiling]) -> Result<SelfAffineTiling> {
    if axes.is_empty() {
        return Err(Error::Empty("product of no axes".into()));
    }
    let ms: Vec<Rat> = axes.iter().map(|t| int(t.m)).collect();
    let mut shifts: Vec<Vec<Rat>> = vec![Vec::new()];
    for (t, m) in axes.iter().zip(&ms) {
        shifts = shifts
            .iter()
            .flat_map(|s| t.digits.iter().map(move |&dg| [s.as_slice(), &[int(dg) / m]].concat()))
            .collect();
    }
    SelfAffineTiling::new(RatMatrix::diagonal(&ms), shifts.into_iter().map(Point::new).collect())
}

/// Product tiling of a spec's grid set from per-axis searches, or the first
/// axis without a tiling up to `m_max`.
pub fn tile_product_spec(spec: &ProductSpec, m_max: i64) -> Result<std::result::Result<SelfAffineTiling, usize>> {
    let mut axes = Vec::with_capacity(spec.dim());
    for i in 0..spec.dim() {
        match find_1d_tiling(&spec.axis_set(i), m_max) {
            Some(t) => axes.push(t),
            None => return Ok(Err(i)),
        }
    }
    Ok(Ok(build_product_tiling(&axes)?))
}

/// Checks that the tiling and grid set agree in dimension.
pub fn check_dims(g: &GridSet, t: &SelfAffineTiling) -> Result<()> {
    if g.dim() != t.dim() {
        return Err(Error::Dimension(format!("grid set has d={}, tiling has d={}", g.dim(), t.dim())));
    }
    Ok(())
}

/// Shifts of the `n`-th iterate: `S_n = S + M^{-1}·S_{n-1}`, dilation `M^n`.
/// Coinciding sums are kept, so the shift count is exactly `|S|^n`.
pub fn iterate_tiling(t: &SelfAffineTiling, n: u32) -> Result<SelfAffineTiling> {
    if n == 0 {
        return Err(Error::Invalid("iteration count must be at least 1".into()));
    }
    let inv = t.dilation.inverse()?;
    let mut acc: Vec<Point> = t.shifts.clone();
    for _ in 1..n {
        let scaled: Vec<Point> = acc.iter().map(|s| Point::new(inv.apply(&s.coords))).collect();
        acc = t.shifts.iter().flat_map(|s| scaled.iter().map(move |q| s.add(q))).collect();
    }
    Ok(SelfAffineTiling { dilation: t.dilation.pow(n), shifts: acc })
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Classification {
    Product(ProductSpec),
    /// The projections span more cells than the set has.
    NotProduct { projection_cells: usize },
    /// The set is a product, but this axis is not of the admissible form.
    AxisNotAdmissible(usize),
}

pub fn classify_detailed(g: &GridSet) -> Classification {
    let projections: Vec<Vec<i64>> = (0..g.dim()).map(|i| g.projection(i)).collect();
    let count: usize = projections.iter().map(Vec::len).product();
    if count != g.len() {
        return Classification::NotProduct { projection_cells: count };
    }
    let mut triples = Vec::with_capacity(g.dim());
    let mut stretch = Vec::with_capacity(g.dim());
    for (i, p) in projections.into_iter().enumerate() {
        let u = SegmentSet::new(p).expect("canonical projections contain 0");
        match factorize(&u) {
            Some(f) => {
                triples.push(f.triple);
                stretch.push(f.run_length);
            }
            None => return Classification::AxisNotAdmissible(i),
        }
    }
    Classification::Product(ProductSpec { triples, stretch })
}

/// The product spec of `g`, or none when `g` admits no self-affine tiling.
pub fn classify_grid_set(g: &GridSet) -> Option<ProductSpec> {
    match classify_detailed(g) {
        Classification::Product(s) => Some(s),
        _ => None,
    }
}

/// Dense indexing of a finite set of integer vectors inside its bounding box.
struct CellIndex {
    lo: Vec<i64>,
    hi: Vec<i64>,
    strides: Vec<i64>,
    slot: Vec<u32>,
}

impl CellIndex {
    const ABSENT: u32 = u32::MAX;

    fn new(cells: &[Vec<i64>]) -> Self {
        let d = cells[0].len();
        let lo: Vec<i64> = (0..d).map(|i| cells.iter().map(|c| c[i]).min().unwrap()).collect();
        let hi: Vec<i64> = (0..d).map(|i| cells.iter().map(|c| c[i]).max().unwrap()).collect();
        let mut strides = vec![1i64; d];
        for i in (0..d.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * (hi[i + 1] - lo[i + 1] + 1);
        }
        let size = (strides[0] * (hi[0] - lo[0] + 1)) as usize;
        let mut slot = vec![Self::ABSENT; size];
        let mut me = Self { lo, hi, strides, slot: Vec::new() };
        for (i, c) in cells.iter().enumerate() {
            slot[me.key(c).unwrap()] = i as u32;
        }
        me.slot = slot;
        me
    }

    fn key(&self, c: &[i64]) -> Option<usize> {
        let mut k = 0i64;
        for i in 0..c.len() {
            if c[i] < self.lo[i] || c[i] > self.hi[i] {
                return None;
            }
            k += (c[i] - self.lo[i]) * self.strides[i];
        }
        Some(k as usize)
    }

    fn get(&self, c: &[i64]) -> Option<usize> {
        self.key(c).map(|k| self.slot[k]).filter(|&s| s != Self::ABSENT).map(|s| s as usize)
    }
}

/// Attempts a tiling with dilation `diag(m)` and integer digits.
///
/// Scaled by `M`, the tiling condition says the translates `G + d` partition
/// the grid set `M·G`. The lexicographically smallest uncovered cell `x` can
/// only be covered by the translate whose own smallest cell lands on `x`, so
/// every digit is forced and no branching occurs. Digits are necessarily
/// integral: on almost every axis-parallel line the tiles cut out unions of
/// unit intervals, and the leftmost uncovered point is always an integer.
pub fn diagonal_tiling_with(g: &GridSet, m: &[i64]) -> Option<Vec<Vec<i64>>> {
    let d = g.dim();
    if m.len() != d || m.iter().any(|v| v.abs() < 2) {
        return None;
    }
    let mut target: Vec<Vec<i64>> = Vec::new();
    for k in g.cells() {
        let mut partial: Vec<Vec<i64>> = vec![Vec::with_capacity(d)];
        for i in 0..d {
            let range = if m[i] > 0 { 0..m[i] } else { m[i]..0 };
            partial = partial
                .iter()
                .flat_map(|p| range.clone().map(move |j| [p.as_slice(), &[m[i] * k[i] + j]].concat()))
                .collect();
        }
        target.extend(partial);
    }
    target.sort_unstable();
    let index = CellIndex::new(&target);
    let cells: Vec<&Vec<i64>> = g.cells().iter().collect();
    let g0 = cells[0].clone();
    let mut covered = vec![false; target.len()];
    let mut digits = Vec::new();
    let mut probe = vec![0i64; d];
    for cursor in 0..target.len() {
        if covered[cursor] {
            continue;
        }
        let shift: Vec<i64> = target[cursor].iter().zip(&g0).map(|(a, b)| a - b).collect();
        for k in &cells {
            for i in 0..d {
                probe[i] = k[i] + shift[i];
            }
            let slot = index.get(&probe)?;
            if covered[slot] {
                return None;
            }
            covered[slot] = true;
        }
        digits.push(shift);
    }
    Some(digits)
}

/// First diagonal tiling with `2 ≤ |m_i| ≤ m_max`, trying smaller moduli
/// and positive signs first.
pub fn find_diagonal_tiling(g: &GridSet, m_max: i64) -> Option<SelfAffineTiling> {
    let d = g.dim();
    let values: Vec<i64> = (2..=m_max).flat_map(|v| [v, -v]).collect();
    let mut choice = vec![0usize; d];
    loop {
        let m: Vec<i64> = choice.iter().map(|&c| values[c]).collect();
        if let Some(digits) = diagonal_tiling_with(g, &m) {
            let dil = RatMatrix::diagonal(&m.iter().map(|&v| int(v)).collect::<Vec<_>>());
            return SelfAffineTiling::from_digits(dil, &digits).ok();
        }
        let mut i = 0;
        loop {
            if i == d {
                return None;
            }
            choice[i] += 1;
            if choice[i] < values.len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}
