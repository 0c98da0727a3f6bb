//! Place/transition nets: structure, markings and untimed firing semantics.
//!
//! Arcs are stored sparsely per transition and kept sorted by place index, so
//! the declaration order of places is also the order in which arc terms are
//! serialized. Index 0 of [`PetriNet::places`] is the "first place" used by
//! default initialization.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("invalid identifier `{0}` (expected [A-Za-z_][A-Za-z0-9_]*)")]
    InvalidIdentifier(String),
    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),
    #[error("unknown place `{0}`")]
    UnknownPlace(String),
    #[error("unknown transition `{0}`")]
    UnknownTransition(String),
    #[error("arc weight must be at least 1 (arc {place} / {transition})")]
    ZeroWeight { place: String, transition: String },
    #[error("transition `{0}` is not enabled")]
    NotEnabled(String),
    #[error("marking has {got} entries but the net has {expected} places")]
    MarkingSize { expected: usize, got: usize },
    #[error("net still has enabled transitions after {firings} firings")]
    NonQuiescent { marking: Marking, firings: u64 },
}

pub type Result<T> = std::result::Result<T, NetError>;

/// Returns true if `id` matches `[A-Za-z_][A-Za-z0-9_]*`.
pub fn is_identifier(id: &str) -> bool {
    let mut chars = id.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A weighted arc endpoint: `(place index, weight)`.
pub type Arc = (usize, u64);

#[derive(Clone)]
pub struct PetriNet {
    places: Vec<String>,
    transitions: Vec<String>,
    place_index: HashMap<String, usize>,
    transition_index: HashMap<String, usize>,
    inputs: Vec<Vec<Arc>>,
    outputs: Vec<Vec<Arc>>,
    // transitions having the place as an input, ascending
    consumers: Vec<Vec<usize>>,
}

impl PartialEq for PetriNet {
    fn eq(&self, other: &Self) -> bool {
        self.places == other.places
            && self.transitions == other.transitions
            && self.inputs == other.inputs
            && self.outputs == other.outputs
    }
}

impl fmt::Debug for PetriNet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PetriNet")
            .field("places", &self.places)
            .field("transitions", &self.transitions)
            .field("inputs", &self.inputs)
            .field("outputs", &self.outputs)
            .finish()
    }
}

impl PetriNet {
    pub fn builder() -> PetriNetBuilder {
        PetriNetBuilder::default()
    }

    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn transitions(&self) -> &[String] {
        &self.transitions
    }

    pub fn place_count(&self) -> usize {
        self.places.len()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn place_idx(&self, id: &str) -> Result<usize> {
        self.place_index
            .get(id)
            .copied()
            .ok_or_else(|| NetError::UnknownPlace(id.to_string()))
    }

    pub fn transition_idx(&self, id: &str) -> Result<usize> {
        self.transition_index
            .get(id)
            .copied()
            .ok_or_else(|| NetError::UnknownTransition(id.to_string()))
    }

    /// Input arcs of transition `t`, sorted by place index.
    pub fn inputs(&self, t: usize) -> &[Arc] {
        &self.inputs[t]
    }

    /// Output arcs of transition `t`, sorted by place index.
    pub fn outputs(&self, t: usize) -> &[Arc] {
        &self.outputs[t]
    }

    /// Transitions that consume from place `p`.
    pub fn consumers(&self, p: usize) -> &[usize] {
        &self.consumers[p]
    }

    pub fn input_weight(&self, place: &str, transition: &str) -> Result<u64> {
        let p = self.place_idx(place)?;
        let t = self.transition_idx(transition)?;
        Ok(arc_weight(&self.inputs[t], p))
    }

    pub fn output_weight(&self, transition: &str, place: &str) -> Result<u64> {
        let p = self.place_idx(place)?;
        let t = self.transition_idx(transition)?;
        Ok(arc_weight(&self.outputs[t], p))
    }

    /// Rebuilds the net as a builder, e.g. to override arc weights.
    pub fn to_builder(&self) -> PetriNetBuilder {
        let mut b = PetriNetBuilder {
            places: self.places.clone(),
            transitions: self.transitions.clone(),
            place_lookup: self.place_index.clone(),
            transition_lookup: self.transition_index.clone(),
            ..Default::default()
        };
        for (t, arcs) in self.inputs.iter().enumerate() {
            for &(p, w) in arcs {
                b.inputs.insert((p, t), w);
            }
        }
        for (t, arcs) in self.outputs.iter().enumerate() {
            for &(p, w) in arcs {
                b.outputs.insert((t, p), w);
            }
        }
        b
    }

    pub fn is_enabled(&self, m: &Marking, transition: &str) -> Result<bool> {
        let t = self.transition_idx(transition)?;
        self.check_marking(m)?;
        Ok(self.is_enabled_idx(m, t))
    }

    /// Index-based enabling check; `m` must belong to this net.
    pub fn is_enabled_idx(&self, m: &Marking, t: usize) -> bool {
        self.inputs[t].iter().all(|&(p, w)| m.tokens[p] >= w)
    }

    pub fn fire(&self, m: &Marking, transition: &str) -> Result<Marking> {
        let t = self.transition_idx(transition)?;
        self.check_marking(m)?;
        if !self.is_enabled_idx(m, t) {
            return Err(NetError::NotEnabled(transition.to_string()));
        }
        let mut next = m.clone();
        self.fire_in_place(&mut next, t);
        Ok(next)
    }

    /// Fires `t` on `m` without checking enabling. Callers must have checked
    /// [`is_enabled_idx`](Self::is_enabled_idx).
    pub(crate) fn fire_in_place(&self, m: &mut Marking, t: usize) {
        for &(p, w) in &self.inputs[t] {
            m.tokens[p] -= w;
        }
        for &(p, w) in &self.outputs[t] {
            m.tokens[p] += w;
        }
    }

    pub fn enabled_set(&self, m: &Marking) -> Result<Vec<&str>> {
        self.check_marking(m)?;
        Ok((0..self.transitions.len())
            .filter(|&t| self.is_enabled_idx(m, t))
            .map(|t| self.transitions[t].as_str())
            .collect())
    }

    /// Fires the first enabled transition (canonical order) until none is
    /// enabled. Returns the final marking and the number of firings.
    pub fn run_to_quiescence(&self, m0: &Marking, max_firings: u64) -> Result<(Marking, u64)> {
        self.check_marking(m0)?;
        let mut m = m0.clone();
        let mut enabled: BTreeSet<usize> = (0..self.transitions.len())
            .filter(|&t| self.is_enabled_idx(&m, t))
            .collect();
        let mut firings = 0u64;
        while let Some(&t) = enabled.iter().next() {
            if firings >= max_firings {
                return Err(NetError::NonQuiescent {
                    marking: m,
                    firings,
                });
            }
            self.fire_in_place(&mut m, t);
            firings += 1;
            // only transitions reading a touched place can change status
            for &(p, _) in self.inputs[t].iter().chain(&self.outputs[t]) {
                for &u in &self.consumers[p] {
                    if self.is_enabled_idx(&m, u) {
                        enabled.insert(u);
                    } else {
                        enabled.remove(&u);
                    }
                }
            }
        }
        Ok((m, firings))
    }

    fn check_marking(&self, m: &Marking) -> Result<()> {
        if m.tokens.len() != self.places.len() {
            return Err(NetError::MarkingSize {
                expected: self.places.len(),
                got: m.tokens.len(),
            });
        }
        Ok(())
    }
}

fn arc_weight(arcs: &[Arc], p: usize) -> u64 {
    arcs.binary_search_by_key(&p, |&(q, _)| q)
        .map(|i| arcs[i].1)
        .unwrap_or(0)
}

#[derive(Debug, Clone, Default)]
pub struct PetriNetBuilder {
    places: Vec<String>,
    transitions: Vec<String>,
    place_lookup: HashMap<String, usize>,
    transition_lookup: HashMap<String, usize>,
    inputs: std::collections::BTreeMap<(usize, usize), u64>,
    outputs: std::collections::BTreeMap<(usize, usize), u64>,
    pending: Vec<NetError>,
}

impl PetriNetBuilder {
    pub fn place(mut self, id: impl Into<String>) -> Self {
        let id = id.into();
        self.place_lookup
            .entry(id.clone())
            .or_insert(self.places.len());
        self.places.push(id);
        self
    }

    pub fn transition(mut self, id: impl Into<String>) -> Self {
        let id = id.into();
        self.transition_lookup
            .entry(id.clone())
            .or_insert(self.transitions.len());
        self.transitions.push(id);
        self
    }

    /// Adds or replaces the weight of the arc `place -> transition`.
    pub fn input(mut self, place: &str, transition: &str, weight: u64) -> Self {
        match self.resolve(place, transition, weight) {
            Ok(key) => {
                self.inputs.insert(key, weight);
            }
            Err(e) => self.pending.push(e),
        }
        self
    }

    /// Adds or replaces the weight of the arc `transition -> place`.
    pub fn output(mut self, transition: &str, place: &str, weight: u64) -> Self {
        match self.resolve(place, transition, weight) {
            Ok((p, t)) => {
                self.outputs.insert((t, p), weight);
            }
            Err(e) => self.pending.push(e),
        }
        self
    }

    fn resolve(&self, place: &str, transition: &str, weight: u64) -> Result<(usize, usize)> {
        let p = *self
            .place_lookup
            .get(place)
            .ok_or_else(|| NetError::UnknownPlace(place.to_string()))?;
        let t = *self
            .transition_lookup
            .get(transition)
            .ok_or_else(|| NetError::UnknownTransition(transition.to_string()))?;
        if weight == 0 {
            return Err(NetError::ZeroWeight {
                place: place.to_string(),
                transition: transition.to_string(),
            });
        }
        Ok((p, t))
    }

    pub fn build(self) -> Result<PetriNet> {
        if let Some(e) = self.pending.into_iter().next() {
            return Err(e);
        }
        let mut place_index = HashMap::with_capacity(self.places.len());
        let mut transition_index = HashMap::with_capacity(self.transitions.len());
        for (i, id) in self.places.iter().enumerate() {
            if !is_identifier(id) {
                return Err(NetError::InvalidIdentifier(id.clone()));
            }
            if place_index.insert(id.clone(), i).is_some() {
                return Err(NetError::DuplicateId(id.clone()));
            }
        }
        for (i, id) in self.transitions.iter().enumerate() {
            if !is_identifier(id) {
                return Err(NetError::InvalidIdentifier(id.clone()));
            }
            if place_index.contains_key(id) || transition_index.insert(id.clone(), i).is_some() {
                return Err(NetError::DuplicateId(id.clone()));
            }
        }
        let mut inputs = vec![Vec::new(); self.transitions.len()];
        let mut outputs = vec![Vec::new(); self.transitions.len()];
        let mut consumers = vec![Vec::new(); self.places.len()];
        // BTreeMap iteration keeps arcs sorted by place, consumers by transition
        for (&(p, t), &w) in &self.inputs {
            inputs[t].push((p, w));
        }
        for (&(t, p), &w) in &self.outputs {
            outputs[t].push((p, w));
        }
        for (t, arcs) in inputs.iter().enumerate() {
            for &(p, _) in arcs {
                consumers[p].push(t);
            }
        }
        Ok(PetriNet {
            places: self.places,
            transitions: self.transitions,
            place_index,
            transition_index,
            inputs,
            outputs,
            consumers,
        })
    }
}

/// Token counts for every place of a net, in the net's canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Marking {
    tokens: Vec<u64>,
}

impl Marking {
    pub fn zeros(net: &PetriNet) -> Self {
        Marking {
            tokens: vec![0; net.place_count()],
        }
    }

    pub fn from_vec(tokens: Vec<u64>) -> Self {
        Marking { tokens }
    }

    /// Builds a marking from `(place, count)` pairs; unlisted places hold 0.
    pub fn from_pairs<'a, I>(net: &PetriNet, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, u64)>,
    {
        let mut m = Marking::zeros(net);
        for (id, n) in pairs {
            m.tokens[net.place_idx(id)?] = n;
        }
        Ok(m)
    }

    pub fn get(&self, net: &PetriNet, place: &str) -> Result<u64> {
        Ok(self.tokens[net.place_idx(place)?])
    }

    pub fn set(&mut self, net: &PetriNet, place: &str, count: u64) -> Result<()> {
        let p = net.place_idx(place)?;
        self.tokens[p] = count;
        Ok(())
    }

    pub fn tokens(&self) -> &[u64] {
        &self.tokens
    }

    pub fn tokens_mut(&mut self) -> &mut [u64] {
        &mut self.tokens
    }

    pub fn total(&self) -> u64 {
        self.tokens.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}
