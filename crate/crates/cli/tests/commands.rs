use std::fs;
use std::path::{Path, PathBuf};

use selfaffine_cli::{run, NOT_TILABLE};

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn cli(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("selfaffine").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Run { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const REFERENCE: &str = "(3;(1,2,8);(1,2,3))x(3;(1,2,12);(1,3,2))";

#[test]
fn gen_reference_has_36_cells() {
    let r = cli(&["gen", "--triples", REFERENCE]);
    assert_eq!(r.code, 0, "{}", r.err);
    let g = selfaffine::format::parse_grid(&r.out).unwrap();
    assert_eq!(g.len(), 36);
    let xs = [0, 2, 8, 10, 16, 18];
    let ys = [0, 2, 4, 12, 14, 16];
    assert!(xs.iter().all(|&x| ys.iter().all(|&y| g.contains(&[x, y]))));
}

#[test]
fn gen_tile_verify_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("reference.grid");
    let tiling = dir.path().join("reference.tiling");
    let r = cli(&["gen", "--triples", REFERENCE, "-o", s(&grid), "--tiling", s(&tiling)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(r.out, "GENERATED 36 cells\n");
    let r = cli(&["verify", "--set", s(&grid), "--tiling", s(&tiling)]);
    assert_eq!(r.code, 0);
    assert!(r.out.starts_with("VALID\ncovered 36 of 36\noverlap 0\noutside 0\n"), "{}", r.out);

    let retiled = dir.path().join("again.tiling");
    let r = cli(&["tile", "--set", s(&grid), "-o", s(&retiled)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.starts_with("TILED "));
    let r = cli(&["verify", "--set", s(&grid), "--tiling", s(&retiled)]);
    assert!(r.out.starts_with("VALID\n"));
}

#[test]
fn verify_quartered_square() {
    let dir = tempfile::tempdir().unwrap();
    let sq = write(dir.path(), "square.grid", "grid 2\n0 0\n");
    let q = write(dir.path(), "quarter.tiling", "tiling 2\ndilation\n2 0\n0 2\nshifts\n0 0\n1/2 0\n0 1/2\n1/2 1/2\n");
    let r = cli(&["verify", "--set", s(&sq), "--tiling", s(&q)]);
    assert_eq!((r.code, r.out.lines().next()), (0, Some("VALID")));
}

#[test]
fn negative_verdicts_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let sq = write(dir.path(), "square.grid", "grid 2\n0 0\n");
    let bad = write(dir.path(), "bad.tiling", "tiling 2\ndilation\n2 0\n0 2\nshifts\n0 0\n1/2 0\n0 1/2\n1/4 1/4\n");
    let r = cli(&["verify", "--set", s(&sq), "--tiling", s(&bad)]);
    assert_eq!((r.code, r.out.lines().next()), (0, Some("INVALID")));

    let l = write(dir.path(), "ltromino.grid", "grid 2\n0 0\n1 0\n0 1\n");
    let r = cli(&["classify", "--set", s(&l)]);
    assert_eq!(r.code, 0);
    assert_eq!(r.out.lines().next(), Some(NOT_TILABLE));
    let r = cli(&["tile", "--set", s(&l)]);
    assert_eq!((r.code, r.out.lines().next()), (0, Some(NOT_TILABLE)));
}

#[test]
fn classify_reports_the_product_spec() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "pair.grid", "grid 1\n0\n2\n");
    let r = cli(&["classify", "--set", s(&g)]);
    assert_eq!(r.out, "PRODUCT (2; (1,2); (1,2))\n");
}

#[test]
fn malformed_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "broken.grid", "grid 2\n0 0 0\n");
    let r = cli(&["classify", "--set", s(&g)]);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("line 2"), "{}", r.err);
    assert_eq!(cli(&["classify", "--set", "/nonexistent/x.grid"]).code, 2);
    assert_eq!(cli(&["gen", "--triples", "(2;(1,3);(1,1))"]).code, 2);
    assert_eq!(cli(&["frobnicate"]).code, 2);
    assert_eq!(cli(&["render", "--target", "set", "--scale", "0", "--set", s(&g)]).code, 2);
    assert_eq!(cli(&["--help"]).code, 0);
}

#[test]
fn attractor_budget_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let d = write(dir.path(), "dragon.digits", "digits 2\ndilation\n1 -1\n1 1\ndigits\n0 0\n1 0\n");
    let r = cli(&["attractor", "--digits", s(&d), "--depth", "30", "--budget", "1000"]);
    assert_eq!(r.code, 3, "{}", r.err);
    let r = cli(&["attractor", "--digits", s(&d), "--depth", "4"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.out.lines().take(2).collect::<Vec<_>>(), ["NOT PARALLELEPIPED", "cells 16"]);
}

#[test]
fn attractor_box_and_contradiction() {
    let dir = tempfile::tempdir().unwrap();
    let d = write(dir.path(), "quarter.digits", "digits 2\ndilation\n2 0\n0 2\ndigits\n0 0\n1 0\n0 1\n1 1\n");
    let g = write(dir.path(), "pair.grid", "grid 2\n0 0\n2 0\n");
    let r = cli(&["attractor", "--digits", s(&d), "--depth", "3", "--witness-set", s(&g)]);
    assert_eq!(r.code, 0, "{}", r.err);
    let lines: Vec<&str> = r.out.lines().collect();
    assert_eq!(lines[0], "PARALLELEPIPED");
    assert!(lines[3].starts_with("CONTRADICTION n="), "{}", r.out);
}

#[test]
fn iterate_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let q = write(dir.path(), "q.tiling", "tiling 1\ndilation\n2\nshifts\n0\n1/2\n");
    let r = cli(&["iterate", "--tiling", s(&q), "-n", "3"]);
    assert_eq!(r.code, 0);
    let t = selfaffine::format::parse_tiling(&r.out).unwrap();
    assert_eq!(t.shifts().len(), 8);
    let sq = write(dir.path(), "u.grid", "grid 1\n0\n");
    let it = write(dir.path(), "it.tiling", &r.out);
    assert!(cli(&["verify", "--set", s(&sq), "--tiling", s(&it)]).out.starts_with("VALID"));
}

#[test]
fn lily_on_square_cone() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(
        dir.path(),
        "square.cone",
        "cone 3\napex\n0 0 0\nrays\n1 0 1\n0 1 1\n-1 0 1\n0 -1 1\ndirecting\n1 0 1\n0 1 1\n-1 0 1\n0 -1 1\n",
    );
    let w = dir.path().join("w.lily");
    let r = cli(&["lily", "--cone", s(&c), "-o", s(&w)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("WITNESS\n") && r.out.contains("checked true"), "{}", r.out);
    let svg = cli(&["render", "--target", "lily", "--cone", s(&c), "--witness", s(&w)]);
    assert_eq!(svg.code, 0, "{}", svg.err);
    assert!(svg.out.starts_with("<svg"));

    let o = write(dir.path(), "orthant.cone", "cone 3\napex\n0 0 0\nrays\n1 0 0\n0 1 0\n0 0 1\ndirecting\n1 0 0\n0 2 0\n0 0 1/2\n");
    assert_eq!(cli(&["lily", "--cone", s(&o)]).out, "SIMPLE\n");
}

#[test]
fn render_is_deterministic_and_rereadable() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("reference.grid");
    let tiling = dir.path().join("reference.tiling");
    cli(&["gen", "--triples", REFERENCE, "-o", s(&grid), "--tiling", s(&tiling)]);
    let a = cli(&["render", "--target", "set", "--set", s(&grid), "--scale", "16"]);
    let b = cli(&["render", "--target", "set", "--set", s(&grid), "--scale", "16"]);
    assert_eq!(a.code, 0, "{}", a.err);
    assert_eq!(a.out, b.out);
    assert_eq!(a.out.matches("<polygon").count(), 36);
    let t = cli(&["render", "--target", "tiling", "--set", s(&grid), "--tiling", s(&tiling), "--palette", "gray"]);
    assert_eq!(t.code, 0, "{}", t.err);

    let d = write(dir.path(), "dragon.digits", "digits 2\ndilation\n1 -1\n1 1\ndigits\n0 0\n1 0\n");
    let raster = dir.path().join("dragon.raster");
    assert_eq!(cli(&["attractor", "--digits", s(&d), "--depth", "10", "-o", s(&raster)]).code, 0);
    let from_file = cli(&["render", "--target", "raster", "--raster", s(&raster)]);
    let direct = cli(&["render", "--target", "raster", "--digits", s(&d), "--depth", "10"]);
    assert_eq!(from_file.out, direct.out);
    let ones = direct.out.lines().skip(2).flat_map(|l| l.split_whitespace()).filter(|&t| t == "1").count();
    assert_eq!(ones, 1024);
}

#[test]
fn sweeps_report_ok() {
    let r = cli(&["sweep", "segments", "--max-card", "8", "--max-a", "8"]);
    assert_eq!(r.code, 0);
    assert!(r.out.ends_with("OK\n"), "{}", r.out);
    let r = cli(&["sweep", "attractors", "--dims", "1"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.starts_with("dilations 2\n") && r.out.ends_with("OK\n"), "{}", r.out);
}
