//! Python bindings: the `patchnet` extension module.

use std::collections::{BTreeMap, BTreeSet};

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use patchnet::formats::{self, emit_andl, emit_sbml, parse_andl, parse_sbml, write_trace_csv};
use patchnet::percolation::{self, Engine, Lattice};
use patchnet::sim::{run_discrete, simulate_ssa, SimConfig};
use patchnet::spatial::{self, Adjacency, Neighborhood};
use patchnet::templates::{self, apply_init, parse_init_csv, SirParams};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn neighborhood(mode: &str) -> PyResult<Neighborhood> {
    mode.parse().map_err(value_err)
}

fn adjacency(nodes: Vec<String>, edges: Vec<(String, String)>) -> PyResult<Adjacency> {
    Adjacency::new(
        nodes.iter().map(String::as_str),
        edges.iter().map(|(a, b)| (a.as_str(), b.as_str())),
    )
    .map_err(value_err)
}

type EdgeList = (Vec<String>, Vec<(String, String)>);

fn edge_list(adj: &Adjacency) -> EdgeList {
    let edges = adj
        .edges()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
    (adj.nodes().to_vec(), edges)
}

fn lattice(rows: Vec<Vec<bool>>) -> PyResult<Lattice> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("lattice must be square"));
    }
    Lattice::new(n, rows.into_iter().flatten().collect()).map_err(value_err)
}

/// A Petri net with its initial marking and transition rates.
#[pyclass(module = "patchnet")]
struct NetDocument {
    inner: formats::NetDocument,
}

#[pymethods]
impl NetDocument {
    /// Parses an ANDL model.
    #[staticmethod]
    fn from_andl(text: &str) -> PyResult<Self> {
        Ok(NetDocument {
            inner: parse_andl(text).map_err(value_err)?,
        })
    }

    /// Parses an SBML model; ignored content is reported as warnings.
    #[staticmethod]
    fn from_sbml(py: Python<'_>, text: &str) -> PyResult<Self> {
        let parsed = parse_sbml(text).map_err(value_err)?;
        let warnings = py.import("warnings")?;
        for w in &parsed.warnings {
            warnings.call_method1("warn", (w.as_str(),))?;
        }
        Ok(NetDocument {
            inner: parsed.document,
        })
    }

    fn to_andl(&self) -> String {
        emit_andl(&self.inner)
    }

    fn to_sbml(&self) -> String {
        emit_sbml(&self.inner)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn places(&self) -> Vec<String> {
        self.inner.net().places().to_vec()
    }

    #[getter]
    fn transitions(&self) -> Vec<String> {
        self.inner.net().transitions().to_vec()
    }

    /// Initial token counts in place order.
    #[getter]
    fn marking(&self) -> Vec<u64> {
        self.inner.marking().tokens().to_vec()
    }

    #[getter]
    fn rates(&self) -> BTreeMap<String, f64> {
        self.inner.rate_map()
    }

    /// `(place, weight)` pairs consumed by a transition.
    fn inputs(&self, transition: &str) -> PyResult<Vec<(String, u64)>> {
        let net = self.inner.net();
        let t = net.transition_idx(transition).map_err(value_err)?;
        Ok(net
            .inputs(t)
            .iter()
            .map(|&(p, w)| (net.places()[p].clone(), w))
            .collect())
    }

    /// `(place, weight)` pairs produced by a transition.
    fn outputs(&self, transition: &str) -> PyResult<Vec<(String, u64)>> {
        let net = self.inner.net();
        let t = net.transition_idx(transition).map_err(value_err)?;
        Ok(net
            .outputs(t)
            .iter()
            .map(|&(p, w)| (net.places()[p].clone(), w))
            .collect())
    }

    /// Transitions enabled under the initial marking, in net order.
    fn enabled(&self) -> Vec<String> {
        let net = self.inner.net();
        net.enabled_set(self.inner.marking())
            .map(|v| v.into_iter().map(String::from).collect())
            .unwrap_or_default()
    }

    fn set_rate(&mut self, transition: &str, rate: f64) -> PyResult<()> {
        self.inner.set_rate(transition, rate).map_err(value_err)
    }

    fn set_tokens(&mut self, place: &str, tokens: u64) -> PyResult<()> {
        self.inner.set_tokens(place, tokens).map_err(value_err)
    }

    /// Runs the stochastic simulator. Returns a dict with `places`, `times`,
    /// `rows`, `events`, `truncated` and the trace as `csv`.
    #[pyo3(signature = (t_end, record_dt=1.0, seed=0, max_events=None))]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        t_end: f64,
        record_dt: f64,
        seed: u64,
        max_events: Option<u64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let mut cfg = SimConfig::new(t_end, record_dt, seed);
        if let Some(m) = max_events {
            cfg = cfg.with_max_events(m);
        }
        cfg.validate().map_err(value_err)?;
        let doc = &self.inner;
        let result = py.detach(|| simulate_ssa(doc, &cfg)).map_err(runtime_err)?;
        let out = PyDict::new(py);
        out.set_item("csv", write_trace_csv(&result.trace))?;
        out.set_item("places", result.trace.places)?;
        out.set_item("times", result.trace.times)?;
        out.set_item("rows", result.trace.rows)?;
        out.set_item("events", result.events)?;
        out.set_item("truncated", result.truncated)?;
        Ok(out)
    }

    /// Fires the first enabled transition until none is left; returns the
    /// final marking and the number of firings.
    #[pyo3(signature = (max_firings=1_000_000))]
    fn run_to_quiescence(&self, max_firings: u64) -> PyResult<(Vec<u64>, u64)> {
        let (m, n) = run_discrete(&self.inner, max_firings).map_err(runtime_err)?;
        Ok((m.tokens().to_vec(), n))
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "NetDocument(name={:?}, places={}, transitions={})",
            self.inner.name(),
            self.inner.net().place_count(),
            self.inner.net().transition_count()
        )
    }
}

/// Multi-patch SIR model over an adjacency. Without `init_csv` the first
/// place holds 100 tokens.
#[pyfunction]
#[pyo3(signature = (nodes, edges, infect, recover, cross_infect, name="sir", init_csv=None))]
fn assemble_sir(
    nodes: Vec<String>,
    edges: Vec<(String, String)>,
    infect: f64,
    recover: f64,
    cross_infect: f64,
    name: &str,
    init_csv: Option<&str>,
) -> PyResult<NetDocument> {
    let adj = adjacency(nodes, edges)?;
    let (net, rates) =
        templates::assemble_sir(&adj, &SirParams::new(infect, recover, cross_infect))
            .map_err(value_err)?;
    let init = init_csv
        .map(parse_init_csv)
        .transpose()
        .map_err(value_err)?;
    let (net, marking) = apply_init(&net, init.as_ref()).map_err(value_err)?;
    let inner = formats::NetDocument::new(name, net, marking, &rates).map_err(value_err)?;
    Ok(NetDocument { inner })
}

/// Fire-spread model over the occupied patches with fire on `seeds`.
#[pyfunction]
#[pyo3(signature = (nodes, edges, occupied, seeds, rate=1.0, name="fire"))]
fn assemble_fire(
    nodes: Vec<String>,
    edges: Vec<(String, String)>,
    occupied: BTreeSet<String>,
    seeds: BTreeSet<String>,
    rate: f64,
    name: &str,
) -> PyResult<NetDocument> {
    let adj = adjacency(nodes, edges)?;
    let (net, marking) = templates::assemble_fire(&adj, &occupied, &seeds).map_err(value_err)?;
    let rates = vec![rate; net.transition_count()];
    let inner = formats::NetDocument::from_parts(name.to_string(), net, marking, rates)
        .map_err(value_err)?;
    Ok(NetDocument { inner })
}

/// Parses an adjacency matrix or edge-list CSV into `(nodes, edges)`.
#[pyfunction]
fn load_adjacency_csv(text: &str) -> PyResult<EdgeList> {
    Ok(edge_list(
        &spatial::load_adjacency_csv(text).map_err(value_err)?,
    ))
}

/// Rasterizes a GeoJSON region and returns `(nodes, edges)`.
#[pyfunction]
#[pyo3(signature = (geojson, cell_size, mode="moore"))]
fn grid_adjacency(geojson: &str, cell_size: f64, mode: &str) -> PyResult<EdgeList> {
    let poly = spatial::load_region(geojson).map_err(value_err)?;
    let grid = spatial::grid_from_region(&poly, cell_size).map_err(value_err)?;
    Ok(edge_list(&spatial::neighbors(&grid, neighborhood(mode)?)))
}

/// Whether an occupied cluster connects the left and right columns.
#[pyfunction]
#[pyo3(signature = (rows, mode="moore"))]
fn spans(rows: Vec<Vec<bool>>, mode: &str) -> PyResult<bool> {
    Ok(percolation::spans(&lattice(rows)?, neighborhood(mode)?))
}

/// Same question answered by running the fire-spread net to quiescence.
#[pyfunction]
#[pyo3(signature = (rows, mode="moore"))]
fn percolate_via_net(rows: Vec<Vec<bool>>, mode: &str) -> PyResult<bool> {
    percolation::percolate_via_net(&lattice(rows)?, neighborhood(mode)?).map_err(runtime_err)
}

#[pyfunction]
#[pyo3(signature = (rows, mode="moore"))]
fn mean_cluster_size(rows: Vec<Vec<bool>>, mode: &str) -> PyResult<f64> {
    Ok(percolation::mean_cluster_size(
        &lattice(rows)?,
        neighborhood(mode)?,
    ))
}

/// Random `n x n` occupancy as nested lists of booleans.
#[pyfunction]
fn sample_occupancy(n: usize, p: f64, seed: u64) -> PyResult<Vec<Vec<bool>>> {
    let lat = percolation::sample_occupancy(n, p, seed).map_err(value_err)?;
    Ok(lat
        .occupied()
        .chunks(n.max(1))
        .map(<[bool]>::to_vec)
        .collect())
}

/// Threshold sweep; returns a dict with `p`, `spanning_prob`,
/// `mean_cluster_size` and `p_c`.
#[pyfunction]
#[pyo3(signature = (n, p_min=0.35, p_max=0.47, step=0.01, trials=200, seed=0, mode="moore", engine="oracle"))]
#[allow(clippy::too_many_arguments)]
fn estimate_threshold<'py>(
    py: Python<'py>,
    n: usize,
    p_min: f64,
    p_max: f64,
    step: f64,
    trials: usize,
    seed: u64,
    mode: &str,
    engine: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let grid = percolation::probability_grid(p_min, p_max, step).map_err(value_err)?;
    let mode = neighborhood(mode)?;
    let engine: Engine = engine.parse().map_err(value_err)?;
    let est = py
        .detach(|| percolation::estimate_threshold(n, &grid, trials, seed, mode, engine))
        .map_err(runtime_err)?;
    let out = PyDict::new(py);
    out.set_item("p", est.p_grid)?;
    out.set_item("spanning_prob", est.spanning_prob)?;
    out.set_item("mean_cluster_size", est.mean_cluster_size)?;
    out.set_item("p_c", est.p_c_estimate)?;
    Ok(out)
}

#[pyfunction]
fn derive_seed(base: u64, index: u64) -> u64 {
    patchnet::rng::derive_seed(base, index)
}

#[pymodule]
#[pyo3(name = "patchnet")]
fn patchnet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<NetDocument>()?;
    m.add_function(wrap_pyfunction!(assemble_sir, m)?)?;
    m.add_function(wrap_pyfunction!(assemble_fire, m)?)?;
    m.add_function(wrap_pyfunction!(load_adjacency_csv, m)?)?;
    m.add_function(wrap_pyfunction!(grid_adjacency, m)?)?;
    m.add_function(wrap_pyfunction!(spans, m)?)?;
    m.add_function(wrap_pyfunction!(percolate_via_net, m)?)?;
    m.add_function(wrap_pyfunction!(mean_cluster_size, m)?)?;
    m.add_function(wrap_pyfunction!(sample_occupancy, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(derive_seed, m)?)?;
    Ok(())
}
