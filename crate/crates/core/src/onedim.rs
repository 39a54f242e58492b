//! One-dimensional segment sets: admissible pairs, Minkowski sums of
//! arithmetic progressions, factorization, and discrete tilings.
//!
//! A [`SegmentSet`] `U` stands for `G = ⋃_{k∈U} [k, k+1]`. A tiling with
//! integer dilation `m` and digits `d_1..d_m` is `G = ⨆ (G + d_j) / m`, which
//! after scaling by `m` is the statement that the translates `U + d_j`
//! partition `m·U ⊕ {0, …, m−1}`.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{AffineMap, Point};
use crate::rational::{Rat, RatMatrix};

/// `(r; a; n)` with `a₁ = n₁ = 1`, `a_i, n_i ≥ 2` and `a_{i−1}·n_{i−1} | a_i`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct AdmissibleTriple {
    a: Vec<i64>,
    n: Vec<i64>,
}

impl AdmissibleTriple {
    pub fn new(a: Vec<i64>, n: Vec<i64>) -> Result<Self> {
        if !is_admissible(&a, &n)? {
            return Err(Error::Inadmissible(format!("a={a:?}, n={n:?}")));
        }
        Ok(Self { a, n })
    }

    pub fn trivial() -> Self {
        Self { a: vec![1], n: vec![1] }
    }

    pub fn r(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[i64] {
        &self.a
    }

    pub fn n(&self) -> &[i64] {
        &self.n
    }

    /// Number of unit segments, `n₁·…·n_r`.
    pub fn cardinality(&self) -> i64 {
        self.n.iter().product()
    }
}

impl fmt::Display for AdmissibleTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[i64]| v.iter().map(i64::to_string).collect::<Vec<_>>().join(",");
        write!(f, "({}; ({}); ({}))", self.r(), join(&self.a), join(&self.n))
    }
}

impl FromStr for AdmissibleTriple {
    type Err = Error;

    /// Accepts `(r; (a1,…); (n1,…))`, whitespace-insensitive.
    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::Parse(format!("malformed triple {s:?}"));
        let inner = compact.strip_prefix('(').and_then(|x| x.strip_suffix(')')).ok_or_else(bad)?;
        let parts: Vec<&str> = inner.split(';').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let r: usize = parts[0].parse().map_err(|_| bad())?;
        let list = |p: &str| -> Result<Vec<i64>> {
            let body = p.strip_prefix('(').and_then(|x| x.strip_suffix(')')).ok_or_else(bad)?;
            body.split(',').map(|x| x.parse::<i64>().map_err(|_| bad())).collect()
        };
        let a = list(parts[1])?;
        let n = list(parts[2])?;
        if a.len() != r {
            return Err(Error::Parse(format!("triple {s:?} declares r={r} but has {} entries", a.len())));
        }
        Self::new(a, n)
    }
}

/// Sorted offsets `U ⊂ Z≥0` with `0 ∈ U`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct SegmentSet {
    offsets: Vec<i64>,
}

impl SegmentSet {
    pub fn new(offsets: impl IntoIterator<Item = i64>) -> Result<Self> {
        let set: BTreeSet<i64> = offsets.into_iter().collect();
        if set.first() != Some(&0) {
            return Err(Error::Invalid("segment set must contain 0 and no negative offsets".into()));
        }
        Ok(Self { offsets: set.into_iter().collect() })
    }

    pub fn unit() -> Self {
        Self { offsets: vec![0] }
    }

    pub fn offsets(&self) -> &[i64] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn max(&self) -> i64 {
        *self.offsets.last().expect("segment sets are nonempty")
    }
}

impl fmt::Display for SegmentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.offsets.iter().map(i64::to_string).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Dilation `m` and digits stored at the scaled level: tile `j` is
/// `(G + digits[j]) / m`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OneDimTiling {
    pub m: i64,
    pub digits: Vec<i64>,
}

pub fn is_admissible(a: &[i64], n: &[i64]) -> Result<bool> {
    if a.len() != n.len() {
        return Err(Error::Dimension(format!("a has {} entries, n has {}", a.len(), n.len())));
    }
    if a.is_empty() {
        return Err(Error::Empty("admissible pair needs r >= 1".into()));
    }
    if a.iter().chain(n).any(|&v| v < 1) {
        return Err(Error::Invalid("admissible pair entries must be positive".into()));
    }
    if a[0] != 1 || n[0] != 1 {
        return Ok(false);
    }
    Ok((1..a.len()).all(|i| a[i] >= 2 && n[i] >= 2 && a[i] % (a[i - 1] * n[i - 1]) == 0))
}

/// Minkowski sum `S(a₁,n₁) + … + S(a_r,n_r)`.
pub fn expand(t: &AdmissibleTriple) -> SegmentSet {
    let mut acc = vec![0i64];
    for (&a, &n) in t.a.iter().zip(&t.n) {
        acc = acc.iter().flat_map(|&x| (0..n).map(move |k| x + k * a)).collect();
    }
    acc.sort_unstable();
    SegmentSet { offsets: acc }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Factorization {
    pub triple: AdmissibleTriple,
    /// Common length of the connected components of `G`. The components of
    /// `G` are `[L·k, L·k + L]` for `k ∈ expand(triple)`; `L = 1` exactly when
    /// `expand(triple)` is the input set itself.
    pub run_length: i64,
    /// Some level admitted more than one progression length.
    pub alternatives: bool,
}

impl Factorization {
    /// The segment set this factorization describes.
    pub fn reexpand(&self) -> SegmentSet {
        let l = self.run_length;
        let offsets = expand(&self.triple).offsets.iter().flat_map(|&k| (0..l).map(move |j| l * k + j)).collect();
        SegmentSet { offsets }
    }
}

/// Finds `(r; a; n)` with `G` equal, up to scaling, to the set of the triple.
///
/// Adjacent unit segments are first merged: `G` must consist of components of
/// one common length `L` starting at multiples of `L`, otherwise it is not of
/// the admissible form. The remaining index set is peeled greedily, longest
/// initial progression first, backtracking on failure.
pub fn factorize(u: &SegmentSet) -> Option<Factorization> {
    let runs = components(&u.offsets);
    let l = runs[0].1 - runs[0].0;
    if runs.iter().any(|&(s, e)| e - s != l || s % l != 0) {
        return None;
    }
    let starts: Vec<i64> = runs.iter().map(|&(s, _)| s / l).collect();
    let mut alternatives = false;
    let levels = peel(&starts, 1, &mut alternatives)?;
    let mut a = vec![1];
    let mut n = vec![1];
    for (ai, ni) in levels {
        a.push(ai);
        n.push(ni);
    }
    Some(Factorization { triple: AdmissibleTriple { a, n }, run_length: l, alternatives })
}

/// Maximal runs of consecutive integers as half-open `[start, end)`.
fn components(sorted: &[i64]) -> Vec<(i64, i64)> {
    let mut runs: Vec<(i64, i64)> = Vec::new();
    for &k in sorted {
        match runs.last_mut() {
            Some(last) if last.1 == k => last.1 = k + 1,
            _ => runs.push((k, k + 1)),
        }
    }
    runs
}

fn peel(u: &[i64], base: i64, alternatives: &mut bool) -> Option<Vec<(i64, i64)>> {
    if u == [0] {
        return Some(Vec::new());
    }
    let a = u[1];
    if a < 2 || a % base != 0 {
        return None;
    }
    let present: HashSet<i64> = u.iter().copied().collect();
    let longest = (1..).take_while(|k| present.contains(&(k * a))).count() as i64 + 1;
    let splits: Vec<(i64, Vec<i64>)> = (2..=longest)
        .rev()
        .filter_map(|n| {
            let period = a * n;
            let rest: Vec<i64> = u.iter().copied().filter(|x| x % period == 0).collect();
            if rest.len() as i64 * n != u.len() as i64 {
                return None;
            }
            let sums: HashSet<i64> = rest.iter().flat_map(|&x| (0..n).map(move |k| x + k * a)).collect();
            (sums.len() == u.len() && sums.iter().all(|x| present.contains(x))).then_some((n, rest))
        })
        .collect();
    if splits.len() > 1 {
        *alternatives = true;
    }
    for (n, rest) in splits {
        if let Some(mut tail) = peel(&rest, a * n, alternatives) {
            tail.insert(0, (a, n));
            return Some(tail);
        }
    }
    None
}

/// Dense positions in `m·U ⊕ {0..m−1}`: the element `m·u_r + j` sits at `r·m + j`.
struct DilatedIndex {
    m: i64,
    rank: Vec<u32>,
}

impl DilatedIndex {
    fn new(u: &SegmentSet, m: i64) -> Self {
        let mut rank = vec![u32::MAX; u.max() as usize + 1];
        for (r, &k) in u.offsets.iter().enumerate() {
            rank[k as usize] = r as u32;
        }
        Self { m, rank }
    }

    fn position(&self, x: i64) -> Option<usize> {
        let k = x.div_euclid(self.m);
        let r = *self.rank.get(usize::try_from(k).ok()?)?;
        (r != u32::MAX).then(|| r as usize * self.m as usize + x.rem_euclid(self.m) as usize)
    }
}

pub fn verify_1d_tiling(u: &SegmentSet, m: i64, digits: &[i64]) -> Result<bool> {
    if m < 2 {
        return Err(Error::Invalid(format!("dilation m = {m} must be at least 2")));
    }
    let mut sorted = digits.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::RepeatedDigit(w[0].to_string()));
    }
    if digits.len() as i64 != m {
        return Ok(false);
    }
    let index = DilatedIndex::new(u, m);
    let mut covered = vec![false; u.len() * m as usize];
    for &d in digits {
        for &k in &u.offsets {
            match index.position(k + d) {
                Some(i) if !covered[i] => covered[i] = true,
                _ => return Ok(false),
            }
        }
    }
    // |D|·|U| distinct hits on a target of the same size
    Ok(true)
}

/// Greedy cover of `m·U ⊕ {0..m−1}` by translates of `U`. The translate that
/// covers the smallest uncovered element `x` must start at `x` (its minimum
/// is `x + 0`, and anything smaller is already covered), so the search has a
/// single branch per dilation.
pub fn tile_with_dilation(u: &SegmentSet, m: i64) -> Option<OneDimTiling> {
    if m < 2 {
        return None;
    }
    let index = DilatedIndex::new(u, m);
    let n = u.len() * m as usize;
    let mut covered = vec![false; n];
    let mut digits = Vec::with_capacity(m as usize);
    for cursor in 0..n {
        if covered[cursor] {
            continue;
        }
        let d = m * u.offsets[cursor / m as usize] + (cursor % m as usize) as i64;
        for &k in &u.offsets {
            let i = index.position(k + d)?;
            if covered[i] {
                return None;
            }
            covered[i] = true;
        }
        digits.push(d);
    }
    Some(OneDimTiling { m, digits })
}

pub fn find_1d_tiling(u: &SegmentSet, m_max: i64) -> Option<OneDimTiling> {
    (2..=m_max.max(1)).into_par_iter().find_map_first(|m| tile_with_dilation(u, m))
}

pub const DEFAULT_M_MAX: i64 = 64;

/// Recognizes a union of equal-length intervals on a common grid and returns
/// its segment set together with the map `k ↦ min + L·k` from the normalized
/// set onto the input.
pub fn normalize_1d(intervals: &[(Rat, Rat)]) -> Result<Option<(SegmentSet, AffineMap)>> {
    if intervals.is_empty() {
        return Err(Error::Empty("no intervals".into()));
    }
    let mut iv: Vec<(Rat, Rat)> = intervals.to_vec();
    if iv.iter().any(|(a, b)| a >= b) {
        return Err(Error::Invalid("interval with empty interior".into()));
    }
    iv.sort();
    for w in iv.windows(2) {
        if w[1].0 < w[0].1 {
            return Err(Error::Overlap(format!("[{}, {}] and [{}, {}]", w[0].0, w[0].1, w[1].0, w[1].1)));
        }
    }
    let len = &iv[0].1 - &iv[0].0;
    if iv.iter().any(|(a, b)| b - a != len) {
        return Ok(None);
    }
    let origin = iv[0].0.clone();
    let mut offsets = Vec::with_capacity(iv.len());
    for (a, _) in &iv {
        let k = (a - &origin) / &len;
        if !k.is_integer() {
            return Ok(None);
        }
        offsets.push(crate::rational::to_i64(&k).ok_or_else(|| Error::Invalid("offset too large".into()))?);
    }
    let map = AffineMap::new(RatMatrix::diagonal(&[len]), Point::new(vec![origin]))?;
    debug_assert!(!map.linear[(0, 0)].is_zero());
    Ok(Some((SegmentSet::new(offsets)?, map)))
}

/// Every admissible triple with `∏ n_i ≤ max_card` and `a_r ≤ max_a`.
pub fn enumerate_admissible(max_card: i64, max_a: i64) -> Vec<AdmissibleTriple> {
    let mut out = vec![AdmissibleTriple::trivial()];
    let mut stack = vec![AdmissibleTriple::trivial()];
    while let Some(t) = stack.pop() {
        let base = t.a.last().unwrap() * t.n.last().unwrap();
        let card = t.cardinality();
        let mut a = base.max(2);
        while a <= max_a {
            let mut n = 2;
            while card * n <= max_card {
                let mut next = t.clone();
                next.a.push(a);
                next.n.push(n);
                out.push(next.clone());
                stack.push(next);
                n += 1;
            }
            a += base;
        }
    }
    out.sort_by(|x, y| (x.r(), &x.a, &x.n).cmp(&(y.r(), &y.a, &y.n)));
    out
}
