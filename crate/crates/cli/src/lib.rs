//! `selfaffine` subcommands. [`run`] is the whole program minus process
//! exit, so tests drive it in-process.
//!
//! Exit codes: 0 for completed runs, including negative verdicts; 2 for
//! malformed input; 3 when a cell budget is exceeded; 1 for anything else.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use selfaffine::attractor::{attractor_raster, is_parallelepiped_raster, separation_witness, AttractorRaster, DEFAULT_CELL_BUDGET};
use selfaffine::cone::{check_lily_witness, lily_witness, DirectedCone, LilyOutcome, LilyWitness};
use selfaffine::format::{self, Document};
use selfaffine::onedim::DEFAULT_M_MAX;
use selfaffine::product::{build_product_set, classify_detailed, iterate_tiling, tile_product_spec, Classification, GridSet, SelfAffineTiling};
use selfaffine::rational::fmt_rat;
use selfaffine::render::{self, Palette, RenderSpec};
use selfaffine::sweep::{attractor_sweep, segment_sweep, AttractorSweepConfig};
use selfaffine::verify::{verify_tiling, DEFAULT_RESOLUTION};
use selfaffine::Error;

pub const NOT_TILABLE: &str = "NOT TILABLE (product test failed)";

#[derive(Parser, Debug)]
#[command(name = "selfaffine", version, about = "Self-affine tilings of polyhedral sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the grid set of a product spec, and optionally its tiling.
    Gen {
        /// Triples joined by `x`, e.g. "(2;(1,2);(1,2))x(1;(1);(1))".
        #[arg(long)]
        triples: String,
        #[command(flatten)]
        out: Output,
        /// Also write a product tiling here.
        #[arg(long)]
        tiling: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_M_MAX)]
        m_max: i64,
    },
    /// Classify a grid set and write a product tiling when there is one.
    Tile {
        #[arg(long)]
        set: PathBuf,
        #[command(flatten)]
        out: Output,
        #[arg(long, default_value_t = DEFAULT_M_MAX)]
        m_max: i64,
    },
    /// Check that a tiling tiles a grid set.
    Verify {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        tiling: PathBuf,
        /// Subdivisions per unit for non-monomial dilations.
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: u32,
    },
    /// Decide whether a grid set admits a self-affine tiling.
    Classify {
        #[arg(long)]
        set: PathBuf,
    },
    /// The n-th iterate of a tiling.
    Iterate {
        #[arg(long)]
        tiling: PathBuf,
        #[arg(short, long)]
        n: u32,
        #[command(flatten)]
        out: Output,
    },
    /// Rasterize the attractor of an integer dilation and digit set.
    Attractor {
        #[arg(long)]
        digits: PathBuf,
        #[arg(long, default_value_t = 6)]
        depth: u32,
        #[arg(long, default_value_t = DEFAULT_CELL_BUDGET)]
        budget: u128,
        /// Grid set to run the integer-attractor contradiction against.
        #[arg(long)]
        witness_set: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        n_max: u32,
        #[command(flatten)]
        out: Output,
    },
    /// Simple cone or two overlapping directing parallelepipeds.
    Lily {
        /// Cone file with a `directing` section.
        #[arg(long)]
        cone: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Exhaustive sweeps.
    Sweep {
        #[command(subcommand)]
        which: SweepCommand,
    },
    /// SVG or PBM figures.
    Render(RenderArgs),
}

#[derive(Subcommand, Debug)]
enum SweepCommand {
    /// Admissible triples: expansion, factorization, tiling, verification.
    Segments {
        #[arg(long, default_value_t = 64)]
        max_card: i64,
        #[arg(long, default_value_t = 64)]
        max_a: i64,
        #[arg(long, default_value_t = DEFAULT_M_MAX)]
        m_max: i64,
    },
    /// Integer dilations and complete digit sets.
    Attractors {
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2])]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        entry_bound: i64,
        #[arg(long, value_delimiter = ',', default_values_t = [2i64, 3, 4])]
        dets: Vec<i64>,
        #[arg(long, default_value_t = -2, allow_hyphen_values = true)]
        digit_lo: i64,
        #[arg(long, default_value_t = 3)]
        digit_hi: i64,
        #[arg(long, default_value_t = 6)]
        depth: u32,
        #[arg(long, default_value_t = 8)]
        n_max: u32,
    },
}

#[derive(Args, Debug)]
struct Output {
    /// Output file; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Target {
    Set,
    Tiling,
    Raster,
    Lily,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[arg(long, value_enum)]
    target: Target,
    #[arg(long)]
    set: Option<PathBuf>,
    #[arg(long)]
    tiling: Option<PathBuf>,
    /// Raster file, or a digits file rasterized at `--depth`.
    #[arg(long)]
    raster: Option<PathBuf>,
    #[arg(long)]
    digits: Option<PathBuf>,
    #[arg(long, default_value_t = 6)]
    depth: u32,
    #[arg(long)]
    cone: Option<PathBuf>,
    /// Lily witness file; computed from the cone when absent.
    #[arg(long)]
    witness: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    scale: u32,
    #[arg(long, default_value = "color")]
    palette: String,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Budget(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Budget(_) => 3,
            Failure::Other(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Budget(m) | Failure::Other(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Budget { .. } => Failure::Budget(msg),
            Error::Parse(_)
            | Error::Dimension(_)
            | Error::Empty(_)
            | Error::Invalid(_)
            | Error::Inadmissible(_)
            | Error::Overlap(_)
            | Error::RepeatedDigit(_)
            | Error::NotExpanding
            | Error::IncompleteDigits(_)
            | Error::DegenerateCone(_)
            | Error::Singular => Failure::Input(msg),
            _ => Failure::Other(msg),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Parses `argv` (program name first) and runs it. Status lines go to `out`,
/// diagnostics to `err`.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

fn read(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load<T>(path: &Path, parse: fn(&str) -> selfaffine::Result<T>) -> std::result::Result<T, Failure> {
    parse(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, dest: &Output, text: &str) -> Outcome {
    match &dest.output {
        Some(p) => fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn require<'a>(p: &'a Option<PathBuf>, flag: &str) -> std::result::Result<&'a Path, Failure> {
    p.as_deref().ok_or_else(|| Failure::Input(format!("--{flag} is required for this target")))
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Outcome {
    match cmd {
        Command::Gen { triples, out: dest, tiling, m_max } => {
            let spec = format::parse_product_spec(&triples)?;
            let g = build_product_set(&spec)?;
            emit(out, &dest, &format::write_document(&Document::Grid(g.clone())))?;
            if let Some(path) = tiling {
                match tile_product_spec(&spec, m_max)? {
                    Ok(t) => fs::write(path, format::write_document(&Document::Tiling(t)))?,
                    Err(axis) => return Err(Failure::Other(format!("axis {axis} has no tiling with m <= {m_max}"))),
                }
            }
            if dest.output.is_some() {
                writeln!(out, "GENERATED {} cells", g.len())?;
            }
        }
        Command::Tile { set, out: dest, m_max } => {
            let g = load(&set, format::parse_grid)?;
            match classify_detailed(&g) {
                Classification::Product(spec) => match tile_product_spec(&spec, m_max)? {
                    Ok(t) => {
                        emit(out, &dest, &format::write_document(&Document::Tiling(t)))?;
                        if dest.output.is_some() {
                            writeln!(out, "TILED {spec}")?;
                        }
                    }
                    Err(axis) => writeln!(out, "NO TILING FOUND (axis {axis}, m <= {m_max})")?,
                },
                other => report_negative(out, &other)?,
            }
        }
        Command::Verify { set, tiling, resolution } => {
            let g = load(&set, format::parse_grid)?;
            let t = load(&tiling, format::parse_tiling)?;
            let v = verify_tiling(&g, &t, resolution)?;
            writeln!(out, "{}", if v.valid { "VALID" } else { "INVALID" })?;
            writeln!(out, "covered {} of {}", fmt_rat(&v.covered_measure), fmt_rat(&v.total_measure))?;
            writeln!(out, "overlap {}", fmt_rat(&v.overlap_measure))?;
            writeln!(out, "outside {}", fmt_rat(&v.outside_measure))?;
            if let Some(w) = &v.witness {
                writeln!(out, "witness {w}")?;
            }
        }
        Command::Classify { set } => {
            let g = load(&set, format::parse_grid)?;
            match classify_detailed(&g) {
                Classification::Product(spec) => writeln!(out, "PRODUCT {spec}")?,
                other => report_negative(out, &other)?,
            }
        }
        Command::Iterate { tiling, n, out: dest } => {
            let t = load(&tiling, format::parse_tiling)?;
            let it = iterate_tiling(&t, n)?;
            emit(out, &dest, &format::write_document(&Document::Tiling(it)))?;
        }
        Command::Attractor { digits, depth, budget, witness_set, n_max, out: dest } => {
            let (m, ds) = load(&digits, format::parse_digits)?;
            let r = attractor_raster(&m, &ds, depth, budget)?;
            let rep = is_parallelepiped_raster(&r)?;
            if let Some(path) = &dest.output {
                fs::write(path, format::write_document(&Document::Raster(r.clone())))?;
            }
            writeln!(out, "{}", if rep.is_parallelepiped { "PARALLELEPIPED" } else { "NOT PARALLELEPIPED" })?;
            writeln!(out, "cells {}", r.len())?;
            writeln!(out, "fill {}", fmt_rat(&rep.fill_ratio))?;
            if let Some(path) = witness_set {
                let g = load(&path, format::parse_grid)?;
                match separation_witness(&g, &m, &ds, n_max) {
                    Ok(Some(w)) => writeln!(out, "CONTRADICTION n={} cells {:?} {:?}: {:?}", w.n, w.cell, w.other_cell, w.contradiction)?,
                    Ok(None) => writeln!(out, "NO CONTRADICTION (n <= {n_max})")?,
                    Err(Error::NotApplicable(why)) => writeln!(out, "NOT APPLICABLE ({why})")?,
                    Err(e) => return Err(e.into()),
                }
            }
        }
        Command::Lily { cone, out: dest } => {
            let dc = load_directed(&cone)?;
            match lily_witness(&dc)? {
                LilyOutcome::Simple => writeln!(out, "SIMPLE")?,
                LilyOutcome::Witness(w) => {
                    let checked = check_lily_witness(&dc, &w);
                    if dest.output.is_some() {
                        emit(out, &dest, &format::write_document(&Document::Lily(w.clone())))?;
                    }
                    writeln!(out, "WITNESS")?;
                    writeln!(out, "x {}", w.x)?;
                    writeln!(out, "checked {checked}")?;
                }
            }
        }
        Command::Sweep { which } => sweep(which, out)?,
        Command::Render(args) => render_cmd(args, out)?,
    }
    Ok(())
}

fn report_negative(out: &mut dyn Write, c: &Classification) -> Outcome {
    writeln!(out, "{NOT_TILABLE}")?;
    match c {
        Classification::NotProduct { projection_cells } => writeln!(out, "reason: projections span {projection_cells} cells")?,
        Classification::AxisNotAdmissible(i) => writeln!(out, "reason: axis {i} is not an admissible segment set")?,
        Classification::Product(_) => {}
    }
    Ok(())
}

fn load_directed(path: &Path) -> std::result::Result<DirectedCone, Failure> {
    match load(path, format::parse_cone)? {
        Document::DirectedCone(dc) => Ok(dc),
        _ => Err(Failure::Input(format!("{}: cone has no directing section", path.display()))),
    }
}

fn sweep(which: SweepCommand, out: &mut dyn Write) -> Outcome {
    match which {
        SweepCommand::Segments { max_card, max_a, m_max } => {
            let r = segment_sweep(max_card, max_a, m_max);
            writeln!(out, "triples {}", r.triples)?;
            writeln!(out, "round_trips {}", r.round_trips)?;
            writeln!(out, "tiled_within {}", r.tiled_within)?;
            writeln!(out, "tiled_beyond {}", r.tiled_beyond.len())?;
            for (t, m) in &r.tiled_beyond {
                writeln!(out, "beyond {t} m={m}")?;
            }
            writeln!(out, "verified {}", r.verified)?;
            writeln!(out, "agreements {}", r.agreements)?;
            for f in &r.failures {
                writeln!(out, "failure {f}")?;
            }
            writeln!(out, "{}", if r.failures.is_empty() { "OK" } else { "FAILURES" })?;
        }
        SweepCommand::Attractors { dims, entry_bound, dets, digit_lo, digit_hi, depth, n_max } => {
            let cfg = AttractorSweepConfig { dims, entry_bound, dets, digit_lo, digit_hi, depth, n_max, ..Default::default() };
            let r = attractor_sweep(&cfg)?;
            writeln!(out, "dilations {}", r.dilations)?;
            writeln!(out, "pairs {}", r.pairs)?;
            writeln!(out, "parallelepipeds {}", r.parallelepipeds)?;
            writeln!(out, "boxes_verified {}", r.boxes_verified)?;
            writeln!(out, "witnesses {}", r.witnesses)?;
            writeln!(out, "max_witness_n {}", r.max_witness_n)?;
            for c in &r.counterexamples {
                writeln!(out, "counterexample {c}")?;
            }
            writeln!(out, "{}", if r.counterexamples.is_empty() { "OK" } else { "COUNTEREXAMPLES" })?;
        }
    }
    Ok(())
}

fn load_raster(args: &RenderArgs) -> std::result::Result<AttractorRaster, Failure> {
    if let Some(p) = &args.raster {
        return load(p, format::parse_raster);
    }
    let (m, ds) = load(require(&args.digits, "raster or --digits")?, format::parse_digits)?;
    Ok(attractor_raster(&m, &ds, args.depth, DEFAULT_CELL_BUDGET)?)
}

fn render_cmd(args: RenderArgs, out: &mut dyn Write) -> Outcome {
    let spec = RenderSpec::new(args.scale, Palette::parse(&args.palette)?)?;
    let text = match args.target {
        Target::Set => render::grid_svg(&load(require(&args.set, "set")?, format::parse_grid)?, &spec)?,
        Target::Tiling => {
            let g: GridSet = load(require(&args.set, "set")?, format::parse_grid)?;
            let t: SelfAffineTiling = load(require(&args.tiling, "tiling")?, format::parse_tiling)?;
            render::tiling_svg(&g, &t, &spec)?
        }
        Target::Raster => render::raster_pbm(&load_raster(&args)?)?,
        Target::Lily => {
            let dc = load_directed(require(&args.cone, "cone")?)?;
            let w: LilyWitness = match &args.witness {
                Some(p) => load(p, format::parse_lily)?,
                None => match lily_witness(&dc)? {
                    LilyOutcome::Witness(w) => w,
                    LilyOutcome::Simple => return Err(Failure::Input("simple cone: no lily witness to draw".into())),
                },
            };
            render::lily_svg(&dc, &w, &spec)?
        }
    };
    emit(out, &args.out, &text)
}
