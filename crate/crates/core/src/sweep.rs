//! Exhaustive sweeps over small parameter ranges.

use rayon::prelude::*;

use crate::attractor::{
    attractor_raster, box_attractor_check, enumerate_complete_digit_sets, enumerate_dilations, is_parallelepiped_raster,
    separation_witness, BoxCheck, DigitSet, IntegerDilation, DEFAULT_CELL_BUDGET,
};
use crate::error::Result;
use crate::onedim::{enumerate_admissible, expand, factorize, find_1d_tiling, tile_with_dilation, verify_1d_tiling, AdmissibleTriple};
use crate::product::{GridSet, SelfAffineTiling};
use crate::rational::RatMatrix;
use crate::verify::verify_tiling_exact;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SegmentSweepReport {
    pub triples: usize,
    pub round_trips: usize,
    /// Tiled by the greedy search with `m <= m_max`.
    pub tiled_within: usize,
    /// Not tileable with `m <= m_max` but tiled at `m = a_r·n_r`.
    pub tiled_beyond: Vec<(AdmissibleTriple, i64)>,
    pub verified: usize,
    /// Discrete and exact continuous verdicts coincide.
    pub agreements: usize,
    pub failures: Vec<String>,
}

impl SegmentSweepReport {
    pub fn all_tiled_within(&self) -> bool {
        self.tiled_beyond.is_empty() && self.failures.is_empty()
    }
}

struct TripleOutcome {
    round_trip: bool,
    within: bool,
    beyond: Option<i64>,
    verified: bool,
    agree: bool,
    failure: Option<String>,
}

/// Expansion, factorization, greedy tiling and both verifiers for every
/// admissible triple in range. Triples with no tiling up to `m_max` are
/// retried at `m = a_r·n_r`.
pub fn segment_sweep(max_card: i64, max_a: i64, m_max: i64) -> SegmentSweepReport {
    let triples = enumerate_admissible(max_card, max_a);
    let rows: Vec<TripleOutcome> = triples.par_iter().map(|t| check_triple(t, m_max)).collect();
    let mut r = SegmentSweepReport { triples: triples.len(), ..Default::default() };
    for (t, o) in triples.iter().zip(rows) {
        r.round_trips += usize::from(o.round_trip);
        r.tiled_within += usize::from(o.within);
        if let Some(m) = o.beyond {
            r.tiled_beyond.push((t.clone(), m));
        }
        r.verified += usize::from(o.verified);
        r.agreements += usize::from(o.agree);
        r.failures.extend(o.failure);
    }
    r.failures.sort();
    r
}

fn check_triple(t: &AdmissibleTriple, m_max: i64) -> TripleOutcome {
    let u = expand(t);
    let round_trip = factorize(&u).is_some_and(|f| f.reexpand() == u);
    let period = t.a().last().unwrap() * t.n().last().unwrap();
    let found = find_1d_tiling(&u, m_max);
    let within = found.is_some();
    let tiling = found.or_else(|| if period > m_max { tile_with_dilation(&u, period) } else { None });
    let Some(tiling) = tiling else {
        return TripleOutcome {
            round_trip,
            within,
            beyond: None,
            verified: false,
            agree: false,
            failure: Some(format!("{t}: no tiling with m <= {}", m_max.max(period))),
        };
    };
    let discrete = verify_1d_tiling(&u, tiling.m, &tiling.digits).unwrap_or(false);
    let g = GridSet::new(1, u.offsets().iter().map(|&k| vec![k])).expect("nonempty");
    let digits: Vec<Vec<i64>> = tiling.digits.iter().map(|&d| vec![d]).collect();
    let continuous = SelfAffineTiling::from_digits(RatMatrix::diagonal(&[crate::rational::int(tiling.m)]), &digits)
        .and_then(|s| verify_tiling_exact(&g, &s))
        .is_ok_and(|v| v.valid);
    let ok = round_trip && discrete && continuous;
    TripleOutcome {
        round_trip,
        within,
        beyond: (!within).then_some(tiling.m),
        verified: discrete,
        agree: discrete == continuous,
        failure: (!ok).then(|| format!("{t}: round trip {round_trip}, discrete {discrete}, continuous {continuous}")),
    }
}

#[derive(Clone, Debug)]
pub struct AttractorSweepConfig {
    pub dims: Vec<usize>,
    pub entry_bound: i64,
    pub dets: Vec<i64>,
    pub digit_lo: i64,
    pub digit_hi: i64,
    pub depth: u32,
    pub n_max: u32,
    /// Multi-cell grid sets with pairwise separated cells, any dimension.
    pub corpus: Vec<GridSet>,
}

impl Default for AttractorSweepConfig {
    fn default() -> Self {
        Self { dims: vec![1, 2], entry_bound: 2, dets: vec![2, 3, 4], digit_lo: -2, digit_hi: 3, depth: 6, n_max: 8, corpus: default_corpus() }
    }
}

/// Small grid sets whose cells pairwise share no point.
pub fn default_corpus() -> Vec<GridSet> {
    let sets: &[(usize, &[&[i64]])] = &[
        (1, &[&[0], &[2]]),
        (1, &[&[0], &[3]]),
        (1, &[&[0], &[2], &[4]]),
        (2, &[&[0, 0], &[2, 0]]),
        (2, &[&[0, 0], &[0, 2]]),
        (2, &[&[0, 0], &[2, 1]]),
        (2, &[&[0, 0], &[2, 2]]),
        (2, &[&[0, 0], &[2, 0], &[0, 2], &[2, 2]]),
    ];
    sets.iter().map(|(d, cells)| GridSet::new(*d, cells.iter().map(|c| c.to_vec())).unwrap()).collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AttractorSweepReport {
    pub dilations: usize,
    pub pairs: usize,
    pub parallelepipeds: usize,
    pub boxes_verified: usize,
    pub witnesses: usize,
    pub max_witness_n: u32,
    /// Sorted descriptions of every instance that breaks the parallelepiped characterization.
    pub counterexamples: Vec<String>,
}

#[derive(Default)]
struct PairOutcome {
    parallelepiped: bool,
    box_ok: bool,
    witnesses: usize,
    max_n: u32,
    problems: Vec<String>,
}

fn check_pair(m: &IntegerDilation, d: &DigitSet, cfg: &AttractorSweepConfig) -> Result<PairOutcome> {
    let mut out = PairOutcome::default();
    let label = || format!("M={:?} D={:?}", m.rows(), d.digits());
    let raster = attractor_raster(m, d, cfg.depth, DEFAULT_CELL_BUDGET)?;
    let report = is_parallelepiped_raster(&raster)?;
    if report.is_parallelepiped {
        out.parallelepiped = true;
        let frame = report.frame.expect("parallelepipeds carry a frame");
        match box_attractor_check(m, d, &frame)? {
            BoxCheck::Verified { verdict, .. } if verdict.valid => out.box_ok = true,
            other => out.problems.push(format!("{}: parallelepiped raster without a box tiling ({other:?})", label())),
        }
    }
    for g in cfg.corpus.iter().filter(|g| g.dim() == m.dim()) {
        match separation_witness(g, m, d, cfg.n_max)? {
            Some(w) => {
                out.witnesses += 1;
                out.max_n = out.max_n.max(w.n);
            }
            None => out.problems.push(format!("{}: no witness for {g} with n <= {}", label(), cfg.n_max)),
        }
    }
    Ok(out)
}

pub fn attractor_sweep(cfg: &AttractorSweepConfig) -> Result<AttractorSweepReport> {
    let mut pairs = Vec::new();
    let mut report = AttractorSweepReport::default();
    for &d in &cfg.dims {
        let ms = enumerate_dilations(d, cfg.entry_bound, &cfg.dets);
        report.dilations += ms.len();
        for m in ms {
            for ds in enumerate_complete_digit_sets(&m, cfg.digit_lo, cfg.digit_hi, true)? {
                pairs.push((m.clone(), ds));
            }
        }
    }
    report.pairs = pairs.len();
    let outcomes: Vec<Result<PairOutcome>> = pairs.par_iter().map(|(m, d)| check_pair(m, d, cfg)).collect();
    for o in outcomes {
        let o = o?;
        report.parallelepipeds += usize::from(o.parallelepiped);
        report.boxes_verified += usize::from(o.box_ok);
        report.witnesses += o.witnesses;
        report.max_witness_n = report.max_witness_n.max(o.max_n);
        report.counterexamples.extend(o.problems);
    }
    report.counterexamples.sort();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_segment_sweep() {
        let r = segment_sweep(12, 12, 64);
        assert!(r.triples > 10);
        assert_eq!(r.failures, Vec::<String>::new());
        assert_eq!(r.round_trips, r.triples);
        assert_eq!(r.agreements, r.triples);
        // S(10,10) needs m = 100: every translate must fit inside one block of m·u
        let t = AdmissibleTriple::new(vec![1, 10], vec![1, 10]).unwrap();
        assert!(r.tiled_beyond.contains(&(t, 100)));
        assert!(r.tiled_beyond.iter().all(|(t, m)| *m == t.a().last().unwrap() * t.n().last().unwrap()));
    }

    #[test]
    fn one_dimensional_attractor_sweep() {
        let cfg = AttractorSweepConfig { dims: vec![1], ..Default::default() };
        let r = attractor_sweep(&cfg).unwrap();
        assert_eq!(r.dilations, 2);
        assert!(r.parallelepipeds > 0);
        assert_eq!(r.parallelepipeds, r.boxes_verified);
        assert_eq!(r.counterexamples, Vec::<String>::new());
    }
}
