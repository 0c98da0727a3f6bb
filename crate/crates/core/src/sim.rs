//! Simulation engines.
//!
//! [`simulate_ssa`] is Gillespie's direct method with mass-action
//! propensities `rate * prod_p C(m(p), w(p, t))`. Each step draws the waiting
//! time first (exponential with mean `1/A`, `A` the total propensity), then a
//! second uniform `u` selects the first transition, in canonical order, whose
//! cumulative propensity exceeds `u * A`. Cumulative sums are kept in a
//! binary sum tree so selection and updates are logarithmic; after a firing
//! only transitions that consume a touched place are re-evaluated.
//!
//! Markings are recorded sample-and-hold at every multiple of `record_dt` up
//! to `t_end`: a record point takes the latest marking at or before it.
//!
//! [`run_discrete`] is the untimed quiescence engine from [`crate::net`].

use thiserror::Error;

use crate::formats::NetDocument;
use crate::net::{Marking, NetError, PetriNet};
use crate::rng::SplitMix64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

pub type Result<T> = std::result::Result<T, SimError>;

/// Time-stamped markings in canonical place order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub places: Vec<String>,
    pub times: Vec<f64>,
    pub rows: Vec<Vec<u64>>,
}

impl Trace {
    pub fn new(net: &PetriNet) -> Self {
        Trace {
            places: net.places().to_vec(),
            times: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push(&mut self, time: f64, m: &Marking) {
        self.times.push(time);
        self.rows.push(m.tokens().to_vec());
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub t_end: f64,
    pub record_dt: f64,
    pub seed: u64,
    pub max_events: u64,
}

impl SimConfig {
    pub const DEFAULT_MAX_EVENTS: u64 = 10_000_000;

    pub fn new(t_end: f64, record_dt: f64, seed: u64) -> Self {
        SimConfig {
            t_end,
            record_dt,
            seed,
            max_events: Self::DEFAULT_MAX_EVENTS,
        }
    }

    pub fn with_max_events(mut self, max_events: u64) -> Self {
        self.max_events = max_events;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be positive and finite");
        }
        if !(self.record_dt > 0.0 && self.record_dt.is_finite()) {
            return bad("record_dt must be positive and finite");
        }
        if self.record_dt > self.t_end {
            return bad("record_dt must not exceed t_end");
        }
        if self.max_events == 0 {
            return bad("max_events must be at least 1");
        }
        Ok(())
    }

    /// Record times `k * record_dt` for `k = 0..` up to `t_end`.
    pub fn record_times(&self) -> Vec<f64> {
        let n = (self.t_end / self.record_dt + 1e-9).floor() as usize;
        (0..=n).map(|k| k as f64 * self.record_dt).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub trace: Trace,
    /// `max_events` was reached before `t_end`; the trace stops early.
    pub truncated: bool,
    pub events: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Firing {
    pub time: f64,
    pub transition: usize,
}

fn binomial(n: u64, k: u64) -> f64 {
    if n < k {
        return 0.0;
    }
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Mass-action propensity of transition index `t`.
pub fn propensity_idx(net: &PetriNet, m: &Marking, t: usize, rate: f64) -> f64 {
    let mut a = rate;
    for &(p, w) in net.inputs(t) {
        let n = m.tokens()[p];
        if n < w {
            return 0.0;
        }
        a *= binomial(n, w);
    }
    a
}

pub fn propensity(net: &PetriNet, m: &Marking, transition: &str, rate: f64) -> Result<f64> {
    let t = net.transition_idx(transition)?;
    if m.len() != net.place_count() {
        return Err(NetError::MarkingSize {
            expected: net.place_count(),
            got: m.len(),
        }
        .into());
    }
    Ok(propensity_idx(net, m, t, rate))
}

/// Binary sum tree over leaf weights; internal nodes are recomputed from their
/// children on every update, so sums never drift.
#[derive(Debug, Clone)]
struct SumTree {
    size: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    fn new(leaves: &[f64]) -> Self {
        let size = leaves.len().next_power_of_two().max(1);
        let mut nodes = vec![0.0; 2 * size];
        nodes[size..size + leaves.len()].copy_from_slice(leaves);
        for i in (1..size).rev() {
            nodes[i] = nodes[2 * i] + nodes[2 * i + 1];
        }
        SumTree { size, nodes }
    }

    fn total(&self) -> f64 {
        self.nodes[1]
    }

    fn get(&self, i: usize) -> f64 {
        self.nodes[self.size + i]
    }

    fn set(&mut self, i: usize, v: f64) {
        let mut k = self.size + i;
        self.nodes[k] = v;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    /// First leaf whose inclusive prefix sum exceeds `target`.
    fn search(&self, mut target: f64) -> usize {
        let mut k = 1;
        while k < self.size {
            let left = self.nodes[2 * k];
            if target < left {
                k *= 2;
            } else {
                target -= left;
                k = 2 * k + 1;
            }
        }
        k - self.size
    }
}

/// Direct-method engine for one run. Owns its marking and RNG.
pub struct SsaEngine<'a> {
    doc: &'a NetDocument,
    marking: Marking,
    time: f64,
    rng: SplitMix64,
    tree: SumTree,
    deps: Vec<Vec<usize>>,
}

impl<'a> SsaEngine<'a> {
    pub fn new(doc: &'a NetDocument, seed: u64) -> Self {
        let net = doc.net();
        let marking = doc.marking().clone();
        let props: Vec<f64> = (0..net.transition_count())
            .map(|t| propensity_idx(net, &marking, t, doc.rates()[t]))
            .collect();
        let deps = (0..net.transition_count())
            .map(|t| {
                let mut d: Vec<usize> = net
                    .inputs(t)
                    .iter()
                    .chain(net.outputs(t))
                    .flat_map(|&(p, _)| net.consumers(p).iter().copied())
                    .collect();
                d.sort_unstable();
                d.dedup();
                d
            })
            .collect();
        SsaEngine {
            doc,
            marking,
            time: 0.0,
            rng: SplitMix64::new(seed),
            tree: SumTree::new(&props),
            deps,
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn marking(&self) -> &Marking {
        &self.marking
    }

    pub fn total_propensity(&self) -> f64 {
        self.tree.total()
    }

    /// Draws the time of the next event, or `None` if nothing can fire.
    pub fn next_event_time(&mut self) -> Option<f64> {
        let a = self.tree.total();
        if a <= 0.0 {
            return None;
        }
        Some(self.time + self.rng.sample_exponential(1.0 / a))
    }

    /// Selects a transition, fires it and advances the clock to `at`.
    pub fn fire_at(&mut self, at: f64) -> usize {
        let target = self.rng.next_f64() * self.tree.total();
        let mut t = self.tree.search(target);
        if t >= self.doc.net().transition_count() || self.tree.get(t) <= 0.0 {
            // rounding pushed the draw past the last positive leaf
            t = (0..self.doc.net().transition_count())
                .rev()
                .find(|&i| self.tree.get(i) > 0.0)
                .expect("total propensity is positive");
        }
        let net = self.doc.net();
        net.fire_in_place(&mut self.marking, t);
        for &u in &self.deps[t] {
            self.tree.set(
                u,
                propensity_idx(net, &self.marking, u, self.doc.rates()[u]),
            );
        }
        self.time = at;
        t
    }
}

pub fn simulate_ssa(doc: &NetDocument, cfg: &SimConfig) -> Result<SimResult> {
    run_ssa(doc, cfg, None)
}

/// Like [`simulate_ssa`] but also returns every firing in order.
pub fn simulate_ssa_logged(doc: &NetDocument, cfg: &SimConfig) -> Result<(SimResult, Vec<Firing>)> {
    let mut log = Vec::new();
    let result = run_ssa(doc, cfg, Some(&mut log))?;
    Ok((result, log))
}

fn run_ssa(
    doc: &NetDocument,
    cfg: &SimConfig,
    mut log: Option<&mut Vec<Firing>>,
) -> Result<SimResult> {
    cfg.validate()?;
    let points = cfg.record_times();
    let mut trace = Trace::new(doc.net());
    let mut engine = SsaEngine::new(doc, cfg.seed);
    let mut next_point = 0;
    let mut events = 0u64;
    let mut truncated = false;
    loop {
        let t_next = engine.next_event_time().unwrap_or(f64::INFINITY);
        while next_point < points.len() && points[next_point] < t_next {
            trace.push(points[next_point], engine.marking());
            next_point += 1;
        }
        if t_next > cfg.t_end {
            break;
        }
        if events == cfg.max_events {
            truncated = true;
            break;
        }
        let t = engine.fire_at(t_next);
        events += 1;
        if let Some(log) = log.as_deref_mut() {
            log.push(Firing {
                time: t_next,
                transition: t,
            });
        }
    }
    Ok(SimResult {
        trace,
        truncated,
        events,
    })
}

/// Untimed run to quiescence of the document's net from its initial marking.
pub fn run_discrete(doc: &NetDocument, max_firings: u64) -> Result<(Marking, u64)> {
    Ok(doc.net().run_to_quiescence(doc.marking(), max_firings)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::Adjacency;
    use crate::templates::{assemble_sir, SirParams};
    use std::collections::BTreeMap;

    fn sir_doc(s: u64, i: u64) -> NetDocument {
        let adj = Adjacency::new(["p0"], []).unwrap();
        let (net, rates) = assemble_sir(&adj, &SirParams::new(0.1, 0.05, 0.01)).unwrap();
        let m = Marking::from_vec(vec![s, i, 0]);
        NetDocument::new("sir", net, m, &rates).unwrap()
    }

    fn one_transition(weight: u64, tokens: u64, rate: f64) -> NetDocument {
        let net = PetriNet::builder()
            .place("P")
            .transition("t")
            .input("P", "t", weight)
            .build()
            .unwrap();
        let mut rates = BTreeMap::new();
        rates.insert("t".to_string(), rate);
        NetDocument::new("x", net, Marking::from_vec(vec![tokens]), &rates).unwrap()
    }

    #[test]
    fn propensity_examples() {
        let doc = sir_doc(10, 2);
        assert_eq!(
            propensity(doc.net(), doc.marking(), "infect_p0", 0.1).unwrap(),
            0.1 * 10.0 * 2.0
        );
        let d = one_transition(2, 1, 1.0);
        assert_eq!(propensity(d.net(), d.marking(), "t", 1.0).unwrap(), 0.0);
        let d = one_transition(2, 4, 1.0);
        assert_eq!(propensity(d.net(), d.marking(), "t", 1.0).unwrap(), 6.0);
    }

    #[test]
    fn source_transition_propensity_is_rate() {
        let net = PetriNet::builder()
            .place("P")
            .transition("b")
            .output("b", "P", 1)
            .build()
            .unwrap();
        assert_eq!(
            propensity(&net, &Marking::zeros(&net), "b", 0.7).unwrap(),
            0.7
        );
    }

    #[test]
    fn frozen_net_holds_initial_marking() {
        let doc = sir_doc(10, 0);
        let r = simulate_ssa(&doc, &SimConfig::new(5.0, 1.0, 1)).unwrap();
        assert_eq!(r.trace.times, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(r.trace.rows.iter().all(|row| row == &vec![10, 0, 0]));
        assert_eq!(r.events, 0);
        assert!(!r.truncated);
    }

    #[test]
    fn sir_conserves_population_and_is_deterministic() {
        let doc = sir_doc(99, 1);
        let cfg = SimConfig::new(100.0, 1.0, 7);
        let a = simulate_ssa(&doc, &cfg).unwrap();
        assert_eq!(a.trace.len(), 101);
        assert!(a.trace.rows.iter().all(|r| r.iter().sum::<u64>() == 100));
        assert_eq!(a, simulate_ssa(&doc, &cfg).unwrap());
    }

    #[test]
    fn truncation_is_flagged() {
        let doc = sir_doc(99, 1);
        let cfg = SimConfig::new(100.0, 1.0, 3).with_max_events(5);
        let r = simulate_ssa(&doc, &cfg).unwrap();
        assert!(r.truncated);
        assert_eq!(r.events, 5);
        assert!(r.trace.len() < 101);
    }

    #[test]
    fn config_validation() {
        let doc = sir_doc(1, 1);
        for cfg in [
            SimConfig::new(0.0, 1.0, 0),
            SimConfig::new(1.0, 2.0, 0),
            SimConfig::new(1.0, -1.0, 0),
            SimConfig::new(1.0, 1.0, 0).with_max_events(0),
        ] {
            assert!(matches!(
                simulate_ssa(&doc, &cfg),
                Err(SimError::InvalidConfig(_))
            ));
        }
    }

    #[test]
    fn record_times_include_endpoint() {
        assert_eq!(SimConfig::new(1.0, 0.25, 0).record_times().len(), 5);
        assert_eq!(SimConfig::new(1.0, 0.3, 0).record_times().len(), 4);
        assert_eq!(SimConfig::new(0.3, 0.1, 0).record_times().len(), 4);
    }

    #[test]
    fn sum_tree_matches_linear_scan() {
        let weights = [0.0, 2.0, 0.0, 1.5, 0.5];
        let tree = SumTree::new(&weights);
        assert_eq!(tree.total(), 4.0);
        let linear = |target: f64| {
            let mut acc = 0.0;
            weights
                .iter()
                .position(|w| {
                    acc += w;
                    acc > target
                })
                .unwrap()
        };
        for target in [0.0, 1.999, 2.0, 3.49, 3.5, 3.99] {
            assert_eq!(tree.search(target), linear(target), "target {target}");
        }
    }

    #[test]
    fn discrete_engine_runs_document() {
        let doc = one_transition(1, 3, 1.0);
        assert_eq!(run_discrete(&doc, 10).unwrap().1, 3);
    }
}
