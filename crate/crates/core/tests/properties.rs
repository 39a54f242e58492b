use proptest::prelude::*;

use selfaffine::attractor::{is_complete_digit_set, residue_representatives, smith_complete, DigitSet, IntegerDilation};
use selfaffine::cone::{extreme_vertices, lily_witness, vertex_count_check, DirectedCone, LilyOutcome, PolyCone};
use selfaffine::geometry::{measure, normalize_box_union, AxisBox, BoxUnion, Point};
use selfaffine::onedim::{expand, factorize, find_1d_tiling, verify_1d_tiling, AdmissibleTriple, OneDimTiling, SegmentSet};
use selfaffine::product::{
    build_product_set, classify_grid_set, iterate_tiling, tile_product_spec, GridSet, ProductSpec, SelfAffineTiling,
};
use selfaffine::rational::{int, rat, RatMatrix};
use selfaffine::verify::verify_tiling_exact;

/// Admissible triples with cardinality at most 24 and `a_r <= 48`.
fn triple() -> impl Strategy<Value = AdmissibleTriple> {
    prop::collection::vec((2i64..=4, 1i64..=3), 0..=3).prop_filter_map("too large", |levels| {
        let (mut a, mut n) = (vec![1i64], vec![1i64]);
        for (ni, k) in levels {
            let next = a.last().unwrap() * n.last().unwrap() * k;
            a.push(next.max(2));
            n.push(ni);
        }
        let t = AdmissibleTriple::new(a, n).ok()?;
        (t.cardinality() <= 24 && *t.a().last().unwrap() <= 48).then_some(t)
    })
}

fn spec(max_dim: usize) -> impl Strategy<Value = ProductSpec> {
    prop::collection::vec((triple(), 1i64..=2), 1..=max_dim).prop_map(|axes| {
        let (triples, stretch) = axes.into_iter().unzip();
        ProductSpec { triples, stretch }
    })
}

fn grid_set() -> impl Strategy<Value = GridSet> {
    (1usize..=3).prop_flat_map(|d| {
        prop::collection::btree_set(prop::collection::vec(0i64..4, d), 1..10)
            .prop_map(move |cells| GridSet::new(d, cells).unwrap())
    })
}

/// Every admissible expansion tiles with `m = a_r·n_r`, so the search stops by then.
fn tiling_of(t: &AdmissibleTriple) -> OneDimTiling {
    let period = t.a().last().unwrap() * t.n().last().unwrap();
    find_1d_tiling(&expand(t), period.max(2)).expect("a tiling exists at m = a_r n_r")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn factorization_reexpands(t in triple()) {
        let u = expand(&t);
        prop_assert_eq!(u.len() as i64, t.cardinality());
        let f = factorize(&u).expect("expansions factorize");
        prop_assert_eq!(f.run_length, 1);
        prop_assert_eq!(f.reexpand(), u.clone());
        prop_assert_eq!(expand(&f.triple), u);
    }

    #[test]
    fn one_dimensional_tilings_verify(t in triple()) {
        let u = expand(&t);
        let tiling = tiling_of(&t);
        prop_assert_eq!(tiling.digits.len() as i64, tiling.m);
        prop_assert!(verify_1d_tiling(&u, tiling.m, &tiling.digits).unwrap());
    }

    #[test]
    fn stretched_sets_factorize_with_run_length(t in triple(), l in 2i64..=4) {
        let s = ProductSpec { triples: vec![t.clone()], stretch: vec![l] };
        let u = s.axis_set(0);
        let f = factorize(&u).expect("stretched expansions factorize");
        prop_assert_eq!(f.reexpand(), u);
        prop_assert_eq!(expand(&f.triple), expand(&t));
        prop_assert_eq!(f.run_length, l);
    }

    #[test]
    fn product_sets_classify_and_tile(s in spec(3)) {
        let g = build_product_set(&s).unwrap();
        let card: i64 = s.triples.iter().zip(&s.stretch).map(|(t, l)| t.cardinality() * l).product();
        prop_assert_eq!(g.len() as i64, card);
        prop_assert!(g.is_product());
        let c = classify_grid_set(&g).expect("product sets classify");
        prop_assert_eq!(build_product_set(&c).unwrap(), g.clone());
        prop_assume!(g.len() <= 150);
        let t = tile_product_spec(&s, 192).unwrap().expect("every axis tiles");
        let v = verify_tiling_exact(&g, &t).unwrap();
        prop_assert!(v.valid, "{:?}", v);
        prop_assert_eq!(v.covered_measure, v.total_measure);
    }

    #[test]
    fn moved_tile_is_rejected(t in triple(), which in any::<prop::sample::Index>()) {
        let u = expand(&t);
        prop_assume!(u.len() > 1);
        let tiling = tiling_of(&t);
        let g = GridSet::new(1, u.offsets().iter().map(|&k| vec![k])).unwrap();
        let mut digits: Vec<Vec<i64>> = tiling.digits.iter().map(|&d| vec![d]).collect();
        let j = which.index(digits.len());
        digits[j][0] += 1;
        prop_assume!(digits.iter().filter(|d| **d == digits[j]).count() == 1);
        let s = SelfAffineTiling::from_digits(RatMatrix::diagonal(&[int(tiling.m)]), &digits).unwrap();
        let v = verify_tiling_exact(&g, &s).unwrap();
        prop_assert!(!v.valid);
        let moved: Vec<i64> = digits.iter().map(|d| d[0]).collect();
        prop_assert!(!verify_1d_tiling(&u, tiling.m, &moved).unwrap());
    }

    #[test]
    fn iterated_tilings_still_tile(t in triple(), n in 1u32..=3) {
        let u = expand(&t);
        prop_assume!(u.len() <= 8);
        let tiling = tiling_of(&t);
        prop_assume!((tiling.m as u64).pow(n) <= 512);
        let g = GridSet::new(1, u.offsets().iter().map(|&k| vec![k])).unwrap();
        let digits: Vec<Vec<i64>> = tiling.digits.iter().map(|&d| vec![d]).collect();
        let s = SelfAffineTiling::from_digits(RatMatrix::diagonal(&[int(tiling.m)]), &digits).unwrap();
        let it = iterate_tiling(&s, n).unwrap();
        prop_assert_eq!(it.shifts().len() as u64, (tiling.m as u64).pow(n));
        prop_assert!(verify_tiling_exact(&g, &it).unwrap().valid);
    }

    #[test]
    fn grid_sets_have_two_extreme_vertices(g in grid_set()) {
        prop_assert!(vertex_count_check(&g));
        let vs = extreme_vertices(&g);
        prop_assert!(vs.len() >= 2);
        let bb = g.to_box_union().bounding_box().unwrap();
        prop_assert!(vs.iter().all(|v| bb.contains_point(v)));
    }

    #[test]
    fn normalization_preserves_measure(g in grid_set(), extra in prop::collection::vec((0i64..4, 0i64..4, 1i64..3, 1i64..3), 0..4)) {
        prop_assume!(g.dim() == 2);
        let mut boxes = g.to_box_union().boxes;
        for (x, y, w, h) in extra {
            boxes.push(AxisBox::new(Point::from_i64(&[x, y]), Point::from_i64(&[x + w, y + h])).unwrap());
        }
        let u = BoxUnion::new(boxes);
        let n = normalize_box_union(&u).unwrap();
        prop_assert_eq!(measure(&n).unwrap(), measure(&u).unwrap());
        let sum = n.boxes.iter().map(AxisBox::volume).fold(int(0), |a, b| a + b);
        prop_assert_eq!(sum, measure(&u).unwrap());
    }

    #[test]
    fn rational_inverse(rows in prop::collection::vec(prop::collection::vec(-5i64..=5, 3), 3)) {
        let m = RatMatrix::from_i64_rows(&rows).unwrap();
        prop_assume!(m.determinant() != int(0));
        let inv = m.inverse().unwrap();
        prop_assert_eq!(m.mul(&inv), RatMatrix::identity(3));
        prop_assert_eq!(inv.determinant() * m.determinant(), int(1));
    }

    #[test]
    fn completeness_tests_agree(rows in prop::collection::vec(prop::collection::vec(-3i64..=3, 2), 2),
                                digits in prop::collection::btree_set(prop::collection::vec(-2i64..=2, 2), 1..6)) {
        let Ok(m) = IntegerDilation::new(rows) else { return Ok(()) };
        prop_assume!(m.det().abs() >= 2);
        let reps = DigitSet::new(residue_representatives(&m).unwrap()).unwrap();
        prop_assert!(is_complete_digit_set(&m, &reps));
        prop_assert!(smith_complete(&m, &reps));
        let ds = DigitSet::new(digits.into_iter().collect()).unwrap();
        prop_assert_eq!(is_complete_digit_set(&m, &ds), smith_complete(&m, &ds));
    }

    #[test]
    fn simplicial_cones_are_simple(rows in prop::collection::vec(prop::collection::vec(-4i64..=4, 3), 3),
                                   lengths in prop::collection::vec((1i64..=5, 1i64..=3), 3)) {
        let m = RatMatrix::from_i64_rows(&rows).unwrap();
        prop_assume!(m.determinant() != int(0));
        let cone = PolyCone::from_i64(&[0, 0, 0], &rows).unwrap();
        let lengths: Vec<_> = lengths.iter().map(|&(p, q)| rat(p, q)).collect();
        let dc = DirectedCone::with_lengths(cone, &lengths).unwrap();
        prop_assert_eq!(lily_witness(&dc).unwrap(), LilyOutcome::Simple);
    }
}

#[test]
fn segment_sets_start_at_zero() {
    assert!(SegmentSet::new([1, 2]).is_err());
    assert!(SegmentSet::new([0, 3]).is_ok());
}
