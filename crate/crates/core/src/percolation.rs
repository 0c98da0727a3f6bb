//! Site percolation on square lattices.
//!
//! Spanning is tested left column to right column. Two independent routes
//! answer it: a union-find over occupied cells ([`spans`]) and the fire-spread
//! net run to quiescence ([`percolate_via_net`]). Threshold estimation runs
//! `trials` lattices per occupation probability; trial `j` draws its cell
//! uniforms from `derive_seed(seed, j)` and a cell is occupied when its
//! uniform is below `p`, so the same trial is coupled across the whole
//! probability grid.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::net::NetError;
use crate::rng::{derive_seed, SplitMix64};
use crate::spatial::{neighbors, patch_id, Adjacency, Neighborhood, PatchGrid};
use crate::templates::{assemble_fire, TemplateError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PercolationError {
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("probability grid must be non-empty and sorted ascending")]
    UnsortedGrid,
    #[error("at least one trial is required")]
    NoTrials,
    #[error("lattice side must be positive")]
    EmptyLattice,
    #[error("occupancy has {got} cells, expected {expected}")]
    Size { expected: usize, got: usize },
    #[error("spanning probability never crosses 0.5 on [{lo}, {hi}]; widen the probability grid")]
    NoCrossing { lo: f64, hi: f64 },
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Net(#[from] NetError),
}

pub type Result<T> = std::result::Result<T, PercolationError>;

/// An `n x n` site lattice, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    n: usize,
    occupied: Vec<bool>,
}

impl Lattice {
    pub fn new(n: usize, occupied: Vec<bool>) -> Result<Self> {
        if n == 0 {
            return Err(PercolationError::EmptyLattice);
        }
        if occupied.len() != n * n {
            return Err(PercolationError::Size {
                expected: n * n,
                got: occupied.len(),
            });
        }
        Ok(Lattice { n, occupied })
    }

    pub fn empty(n: usize) -> Self {
        Lattice {
            n,
            occupied: vec![false; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn occupied(&self) -> &[bool] {
        &self.occupied
    }

    pub fn is_occupied(&self, row: usize, col: usize) -> bool {
        self.occupied[row * self.n + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.occupied[row * self.n + col] = value;
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    fn neighbors_of(&self, i: usize, mode: Neighborhood) -> impl Iterator<Item = usize> + '_ {
        let n = self.n as isize;
        let (r, c) = ((i / self.n) as isize, (i % self.n) as isize);
        mode.offsets().iter().filter_map(move |&(dr, dc)| {
            let (rr, cc) = (r + dr, c + dc);
            (rr >= 0 && cc >= 0 && rr < n && cc < n).then(|| (rr * n + cc) as usize)
        })
    }
}

/// Each cell occupied independently with probability `p`.
pub fn sample_occupancy(n: usize, p: f64, seed: u64) -> Result<Lattice> {
    if !(0.0..=1.0).contains(&p) {
        return Err(PercolationError::InvalidProbability(p));
    }
    let mut rng = SplitMix64::new(seed);
    Lattice::new(n, (0..n * n).map(|_| rng.next_f64() < p).collect())
}

/// Disjoint sets with path compression and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    pub fn union(&mut self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return a;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        a
    }

    pub fn size_of(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r]
    }
}

fn clusters(lat: &Lattice, mode: Neighborhood) -> UnionFind {
    let mut uf = UnionFind::new(lat.occupied.len());
    for i in 0..lat.occupied.len() {
        if !lat.occupied[i] {
            continue;
        }
        for j in lat.neighbors_of(i, mode) {
            if j > i && lat.occupied[j] {
                uf.union(i, j);
            }
        }
    }
    uf
}

/// Whether an occupied path joins the left column to the right column.
pub fn spans(lat: &Lattice, mode: Neighborhood) -> bool {
    let n = lat.n;
    let mut uf = clusters(lat, mode);
    let mut left = BTreeSet::new();
    for r in 0..n {
        if lat.is_occupied(r, 0) {
            left.insert(uf.find(r * n));
        }
    }
    (0..n).any(|r| lat.is_occupied(r, n - 1) && left.contains(&uf.find(r * n + n - 1)))
}

/// Size-weighted mean cluster size `sum s^2 / sum s`; 0 for an empty lattice.
pub fn mean_cluster_size(lat: &Lattice, mode: Neighborhood) -> f64 {
    let mut uf = clusters(lat, mode);
    let (mut s1, mut s2) = (0u64, 0u64);
    for i in 0..lat.occupied.len() {
        if lat.occupied[i] && uf.find(i) == i {
            let s = uf.size[i] as u64;
            s1 += s;
            s2 += s * s;
        }
    }
    if s1 == 0 {
        0.0
    } else {
        s2 as f64 / s1 as f64
    }
}

/// Full-lattice adjacency reused across trials of the net engine.
pub fn lattice_adjacency(n: usize, mode: Neighborhood) -> Adjacency {
    neighbors(&PatchGrid::full(n, n), mode)
}

/// Builds the fire net over the occupied cells, seeds every occupied cell of
/// the left column, runs to quiescence and reports whether any right-column
/// cell burns.
pub fn percolate_via_net(lat: &Lattice, mode: Neighborhood) -> Result<bool> {
    percolate_via_net_on(&lattice_adjacency(lat.n, mode), lat)
}

/// [`percolate_via_net`] with a prebuilt [`lattice_adjacency`].
pub fn percolate_via_net_on(adj: &Adjacency, lat: &Lattice) -> Result<bool> {
    let n = lat.n;
    let mut occupied = BTreeSet::new();
    let mut seeds = BTreeSet::new();
    for r in 0..n {
        for c in 0..n {
            if lat.is_occupied(r, c) {
                let id = patch_id(r, c);
                if c == 0 {
                    seeds.insert(id.clone());
                }
                occupied.insert(id);
            }
        }
    }
    let (net, m0) = assemble_fire(adj, &occupied, &seeds)?;
    let bound = 8 * (n as u64) * (n as u64);
    let (end, _) = net.run_to_quiescence(&m0, bound)?;
    for r in 0..n {
        if lat.is_occupied(r, n - 1) {
            let place = format!("Fire_{}", patch_id(r, n - 1));
            if end.get(&net, &place)? > 0 {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Oracle,
    Net,
}

impl std::str::FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "oracle" => Ok(Engine::Oracle),
            "net" => Ok(Engine::Net),
            _ => Err(format!("unknown engine `{s}` (expected oracle or net)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdEstimate {
    pub p_grid: Vec<f64>,
    pub spanning_prob: Vec<f64>,
    /// Trial mean of [`mean_cluster_size`] at each probability.
    pub mean_cluster_size: Vec<f64>,
    pub p_c_estimate: f64,
    pub trials: usize,
}

impl ThresholdEstimate {
    /// `p,spanning_prob,mean_cluster_size` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,spanning_prob,mean_cluster_size\n");
        for i in 0..self.p_grid.len() {
            let _ = writeln!(
                out,
                "{},{},{}",
                self.p_grid[i], self.spanning_prob[i], self.mean_cluster_size[i]
            );
        }
        out
    }
}

/// `min, min + step, ...` up to `max` inclusive, rounded to 12 decimals so
/// printed values stay clean.
pub fn probability_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    for p in [min, max] {
        if !(0.0..=1.0).contains(&p) {
            return Err(PercolationError::InvalidProbability(p));
        }
    }
    if step.is_nan() || step <= 0.0 || max < min {
        return Err(PercolationError::UnsortedGrid);
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| ((min + k as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// Linear interpolation of the first upward crossing of 0.5.
pub fn interpolate_crossing(p_grid: &[f64], probs: &[f64]) -> Option<f64> {
    let i = probs.iter().position(|&s| s >= 0.5)?;
    if probs[i] == 0.5 {
        return Some(p_grid[i]);
    }
    if i == 0 {
        return None;
    }
    let (p0, p1, s0, s1) = (p_grid[i - 1], p_grid[i], probs[i - 1], probs[i]);
    Some(p0 + (0.5 - s0) * (p1 - p0) / (s1 - s0))
}

pub fn estimate_threshold(
    n: usize,
    p_grid: &[f64],
    trials: usize,
    seed: u64,
    mode: Neighborhood,
    engine: Engine,
) -> Result<ThresholdEstimate> {
    if n == 0 {
        return Err(PercolationError::EmptyLattice);
    }
    if trials == 0 {
        return Err(PercolationError::NoTrials);
    }
    if p_grid.is_empty() || p_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(PercolationError::UnsortedGrid);
    }
    if let Some(&p) = p_grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(PercolationError::InvalidProbability(p));
    }
    let adj = (engine == Engine::Net).then(|| lattice_adjacency(n, mode));
    let per_trial: Vec<Vec<(bool, f64)>> = (0..trials)
        .into_par_iter()
        .map(|j| {
            let mut rng = SplitMix64::new(derive_seed(seed, j as u64));
            let uniforms: Vec<f64> = (0..n * n).map(|_| rng.next_f64()).collect();
            p_grid
                .iter()
                .map(|&p| {
                    let lat = Lattice {
                        n,
                        occupied: uniforms.iter().map(|&u| u < p).collect(),
                    };
                    let hit = match &adj {
                        Some(adj) => percolate_via_net_on(adj, &lat)?,
                        None => spans(&lat, mode),
                    };
                    Ok((hit, mean_cluster_size(&lat, mode)))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut spanning_prob = vec![0.0; p_grid.len()];
    let mut cluster = vec![0.0; p_grid.len()];
    for trial in &per_trial {
        for (k, &(hit, s)) in trial.iter().enumerate() {
            spanning_prob[k] += f64::from(u8::from(hit));
            cluster[k] += s;
        }
    }
    for k in 0..p_grid.len() {
        spanning_prob[k] /= trials as f64;
        cluster[k] /= trials as f64;
    }
    let p_c_estimate =
        interpolate_crossing(p_grid, &spanning_prob).ok_or(PercolationError::NoCrossing {
            lo: p_grid[0],
            hi: p_grid[p_grid.len() - 1],
        })?;
    Ok(ThresholdEstimate {
        p_grid: p_grid.to_vec(),
        spanning_prob,
        mean_cluster_size: cluster,
        p_c_estimate,
        trials,
    })
}

/// Trial seed used by [`estimate_threshold`]; `sample_occupancy(n, p,
/// trial_seed(seed, j))` reproduces trial `j` at probability `p`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    derive_seed(seed, trial as u64)
}
