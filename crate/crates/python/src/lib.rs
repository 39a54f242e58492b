//! Python bindings: grid sets, tilings, verification, classification and the
//! one-dimensional and cone operations.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use selfaffine::attractor::{attractor_raster, is_parallelepiped_raster, DigitSet, IntegerDilation, DEFAULT_CELL_BUDGET};
use selfaffine::cone::{extreme_vertices, lily_witness, LilyOutcome};
use selfaffine::format::{self, Document};
use selfaffine::onedim::{self, AdmissibleTriple, SegmentSet};
use selfaffine::product::{self, build_product_set, tile_product_spec};
use selfaffine::rational::{fmt_rat, RatMatrix};
use selfaffine::render::{self, Palette, RenderSpec};
use selfaffine::verify::{self as checks, TilingVerdict};
use selfaffine::{Error, Rat};

fn py_err(e: Error) -> PyErr {
    match e {
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
        | Error::NonDiagonal
        | Error::NotApplicable(_)
        | Error::Singular => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn fraction<'py>(py: Python<'py>, r: &Rat) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((fmt_rat(r),))
}

fn fractions<'py>(py: Python<'py>, v: &[Rat]) -> PyResult<Vec<Bound<'py, PyAny>>> {
    v.iter().map(|r| fraction(py, r)).collect()
}

/// Finite union of unit cubes at integer points, translated to the origin.
#[pyclass(name = "GridSet", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGridSet(product::GridSet);

#[pymethods]
impl PyGridSet {
    #[new]
    fn new(d: usize, cells: Vec<Vec<i64>>) -> PyResult<Self> {
        product::GridSet::new(d, cells).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        match format::parse_document(text).map_err(py_err)? {
            Document::Grid(g) => Ok(Self(g)),
            other => Err(PyValueError::new_err(format!("expected a grid file, found {}", other.kind()))),
        }
    }

    fn to_text(&self) -> String {
        format::write_document(&Document::Grid(self.0.clone()))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn cells(&self) -> Vec<Vec<i64>> {
        self.0.cells().iter().cloned().collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn is_product(&self) -> bool {
        self.0.is_product()
    }

    /// Product spec such as `"(2; (1,2); (1,2))"`, or `None` when the set
    /// admits no self-affine tiling.
    fn classify(&self) -> Option<String> {
        product::classify_grid_set(&self.0).map(|s| s.to_string())
    }

    fn extreme_vertices<'py>(&self, py: Python<'py>) -> PyResult<Vec<Vec<Bound<'py, PyAny>>>> {
        extreme_vertices(&self.0).iter().map(|p| fractions(py, &p.coords)).collect()
    }

    #[pyo3(signature = (scale = 16, palette = "color"))]
    fn svg(&self, scale: u32, palette: &str) -> PyResult<String> {
        let spec = RenderSpec::new(scale, Palette::parse(palette).map_err(py_err)?).map_err(py_err)?;
        render::grid_svg(&self.0, &spec).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("GridSet(d={}, cells={})", self.0.dim(), self.0.len())
    }
}

/// Tiles `M^{-1}G + s_j` with a common dilation `M`.
#[pyclass(name = "Tiling", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTiling(product::SelfAffineTiling);

#[pymethods]
impl PyTiling {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        match format::parse_document(text).map_err(py_err)? {
            Document::Tiling(t) => Ok(Self(t)),
            other => Err(PyValueError::new_err(format!("expected a tiling file, found {}", other.kind()))),
        }
    }

    /// Integer dilation rows and integer digits; shifts are `M^{-1}·digit`.
    #[staticmethod]
    fn from_digits(dilation: Vec<Vec<i64>>, digits: Vec<Vec<i64>>) -> PyResult<Self> {
        let m = RatMatrix::from_i64_rows(&dilation).map_err(py_err)?;
        product::SelfAffineTiling::from_digits(m, &digits).map(Self).map_err(py_err)
    }

    fn to_text(&self) -> String {
        format::write_document(&Document::Tiling(self.0.clone()))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn dilation<'py>(&self, py: Python<'py>) -> PyResult<Vec<Vec<Bound<'py, PyAny>>>> {
        self.0.dilation().to_rows().iter().map(|r| fractions(py, r)).collect()
    }

    fn shifts<'py>(&self, py: Python<'py>) -> PyResult<Vec<Vec<Bound<'py, PyAny>>>> {
        self.0.shifts().iter().map(|s| fractions(py, &s.coords)).collect()
    }

    fn __len__(&self) -> usize {
        self.0.shifts().len()
    }

    fn iterate(&self, n: u32) -> PyResult<Self> {
        product::iterate_tiling(&self.0, n).map(Self).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Tiling(d={}, tiles={})", self.0.dim(), self.0.shifts().len())
    }
}

#[pyclass(name = "Verdict", frozen, get_all)]
struct PyVerdict {
    valid: bool,
    covered: Py<PyAny>,
    total: Py<PyAny>,
    overlap: Py<PyAny>,
    outside: Py<PyAny>,
    witness: Option<String>,
    exact: bool,
}

#[pymethods]
impl PyVerdict {
    fn __repr__(&self) -> String {
        format!("Verdict(valid={}, exact={})", self.valid, self.exact)
    }
}

fn to_py_verdict(py: Python<'_>, v: TilingVerdict) -> PyResult<PyVerdict> {
    Ok(PyVerdict {
        valid: v.valid,
        covered: fraction(py, &v.covered_measure)?.unbind(),
        total: fraction(py, &v.total_measure)?.unbind(),
        overlap: fraction(py, &v.overlap_measure)?.unbind(),
        outside: fraction(py, &v.outside_measure)?.unbind(),
        exact: matches!(v.method, checks::VerdictMethod::Exact),
        witness: v.witness,
    })
}

/// Grid set of a product spec like `"(2;(1,2);(1,2))x(1;(1);(1))"`.
#[pyfunction]
fn generate(triples: &str) -> PyResult<PyGridSet> {
    let spec = format::parse_product_spec(triples).map_err(py_err)?;
    build_product_set(&spec).map(PyGridSet).map_err(py_err)
}

/// Product tiling of a grid set, or `None` when it has none with `m <= m_max`.
#[pyfunction]
#[pyo3(signature = (grid, m_max = onedim::DEFAULT_M_MAX))]
fn tile(grid: &PyGridSet, m_max: i64) -> PyResult<Option<PyTiling>> {
    let Some(spec) = product::classify_grid_set(&grid.0) else { return Ok(None) };
    Ok(tile_product_spec(&spec, m_max).map_err(py_err)?.ok().map(PyTiling))
}

#[pyfunction]
#[pyo3(signature = (grid, tiling, resolution = checks::DEFAULT_RESOLUTION))]
fn verify(py: Python<'_>, grid: &PyGridSet, tiling: &PyTiling, resolution: u32) -> PyResult<PyVerdict> {
    let v = checks::verify_tiling(&grid.0, &tiling.0, resolution).map_err(py_err)?;
    to_py_verdict(py, v)
}

/// Offsets of the segment set of a triple such as `"(2;(1,2);(1,3))"`.
#[pyfunction]
fn expand(triple: &str) -> PyResult<Vec<i64>> {
    let t: AdmissibleTriple = triple.parse().map_err(py_err)?;
    Ok(onedim::expand(&t).offsets().to_vec())
}

/// The admissible triple of a segment set, plus the common run length.
#[pyfunction]
fn factorize(offsets: Vec<i64>) -> PyResult<Option<(String, i64)>> {
    let u = SegmentSet::new(offsets).map_err(py_err)?;
    Ok(onedim::factorize(&u).map(|f| (f.triple.to_string(), f.run_length)))
}

/// Smallest `m <= m_max` with a digit tiling, as `(m, digits)`.
#[pyfunction]
#[pyo3(signature = (offsets, m_max = onedim::DEFAULT_M_MAX))]
fn find_1d_tiling(offsets: Vec<i64>, m_max: i64) -> PyResult<Option<(i64, Vec<i64>)>> {
    let u = SegmentSet::new(offsets).map_err(py_err)?;
    Ok(onedim::find_1d_tiling(&u, m_max).map(|t| (t.m, t.digits)))
}

/// `None` for a simple cone, otherwise the witness as a dict.
#[pyfunction]
fn lily<'py>(py: Python<'py>, cone_text: &str) -> PyResult<Option<Bound<'py, PyDict>>> {
    let dc = match format::parse_cone(cone_text).map_err(py_err)? {
        Document::DirectedCone(dc) => dc,
        _ => return Err(PyValueError::new_err("cone has no directing section")),
    };
    match lily_witness(&dc).map_err(py_err)? {
        LilyOutcome::Simple => Ok(None),
        LilyOutcome::Witness(w) => {
            let d = PyDict::new(py);
            d.set_item("facet_a", w.facet_a.clone())?;
            d.set_item("facet_b", w.facet_b.clone())?;
            d.set_item("a", fractions(py, &w.a.coords)?)?;
            d.set_item("b", fractions(py, &w.b.coords)?)?;
            d.set_item("x", fractions(py, &w.x.coords)?)?;
            d.set_item("text", format::write_document(&Document::Lily(w)))?;
            Ok(Some(d))
        }
    }
}

/// Cell count and parallelepiped test of the depth-`depth` attractor raster.
#[pyfunction]
fn attractor(dilation: Vec<Vec<i64>>, digits: Vec<Vec<i64>>, depth: u32) -> PyResult<(usize, bool)> {
    let m = IntegerDilation::new(dilation).map_err(py_err)?;
    let ds = DigitSet::new(digits).map_err(py_err)?;
    let r = attractor_raster(&m, &ds, depth, DEFAULT_CELL_BUDGET).map_err(py_err)?;
    let rep = is_parallelepiped_raster(&r).map_err(py_err)?;
    Ok((r.len(), rep.is_parallelepiped))
}

#[pymodule]
#[pyo3(name = "selfaffine")]
fn selfaffine_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGridSet>()?;
    m.add_class::<PyTiling>()?;
    m.add_class::<PyVerdict>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(tile, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(expand, m)?)?;
    m.add_function(wrap_pyfunction!(factorize, m)?)?;
    m.add_function(wrap_pyfunction!(find_1d_tiling, m)?)?;
    m.add_function(wrap_pyfunction!(lily, m)?)?;
    m.add_function(wrap_pyfunction!(attractor, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_python_types() {
        Python::initialize();
        Python::attach(|py| {
            assert!(py_err(Error::Parse("x".into())).is_instance_of::<PyValueError>(py));
            assert!(py_err(Error::NoCycle(3)).is_instance_of::<PyRuntimeError>(py));
        });
    }

    #[test]
    fn fractions_are_python_fractions() {
        Python::initialize();
        Python::attach(|py| {
            let f = fraction(py, &selfaffine::rational::rat(3, 4)).unwrap();
            assert_eq!(f.str().unwrap().to_string(), "3/4");
        });
    }
}
