#![allow(dead_code)]

use std::collections::BTreeSet;

use patchnet::formats::NetDocument;
use patchnet::net::{Marking, PetriNet};
use patchnet::rng::SplitMix64;
use patchnet::spatial::Adjacency;
use proptest::prelude::*;

/// Raw description of a random net: per transition, input and output arcs as
/// `(place index, weight)`.
#[derive(Debug, Clone)]
pub struct NetShape {
    pub places: Vec<String>,
    pub transitions: Vec<String>,
    pub inputs: Vec<Vec<(usize, u64)>>,
    pub outputs: Vec<Vec<(usize, u64)>>,
}

impl NetShape {
    pub fn build(&self) -> PetriNet {
        let mut b = PetriNet::builder();
        for p in &self.places {
            b = b.place(p);
        }
        for (j, t) in self.transitions.iter().enumerate() {
            b = b.transition(t);
            for &(p, w) in &self.inputs[j] {
                b = b.input(&self.places[p], t, w);
            }
            for &(p, w) in &self.outputs[j] {
                b = b.output(t, &self.places[p], w);
            }
        }
        b.build().expect("generated net is valid")
    }
}

fn ids(prefix: &'static str, n: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[A-Za-z0-9_]{0,6}", n).prop_map(move |suffixes| {
        suffixes
            .into_iter()
            .enumerate()
            .map(|(i, s)| format!("{prefix}{i}_{s}"))
            .collect()
    })
}

fn arcs(places: usize, transitions: usize) -> impl Strategy<Value = Vec<Vec<(usize, u64)>>> {
    prop::collection::vec(
        prop::collection::vec((0..places, 1u64..=4), 0..=3),
        transitions,
    )
    .prop_map(|arcs| {
        // one arc per place: keep the first weight
        arcs.into_iter()
            .map(|mut v| {
                let mut seen = BTreeSet::new();
                v.retain(|&(p, _)| seen.insert(p));
                v
            })
            .collect()
    })
}

pub fn net_shape(max_places: usize, max_transitions: usize) -> impl Strategy<Value = NetShape> {
    (1..=max_places, 0..=max_transitions).prop_flat_map(|(np, nt)| {
        (ids("p", np), ids("t", nt), arcs(np, nt), arcs(np, nt)).prop_map(
            |(places, transitions, inputs, outputs)| NetShape {
                places,
                transitions,
                inputs,
                outputs,
            },
        )
    })
}

pub fn rate() -> impl Strategy<Value = f64> {
    prop_oneof![1e-6f64..1e6, (1u32..1000).prop_map(f64::from), Just(0.5)]
}

pub fn document(max_places: usize, max_transitions: usize) -> impl Strategy<Value = NetDocument> {
    net_shape(max_places, max_transitions).prop_flat_map(|shape| {
        let np = shape.places.len();
        let nt = shape.transitions.len();
        (
            "[A-Za-z_][A-Za-z0-9_]{0,10}",
            Just(shape),
            prop::collection::vec(prop_oneof![0u64..20, 0u64..=u32::MAX as u64], np),
            prop::collection::vec(rate(), nt),
        )
            .prop_map(|(name, shape, tokens, rates)| {
                NetDocument::from_parts(name, shape.build(), Marking::from_vec(tokens), rates)
                    .expect("generated document is valid")
            })
    })
}

/// Random graph on `k` nodes named `n00..`, each pair joined with
/// probability `density`.
pub fn random_adjacency(rng: &mut SplitMix64, k: usize, density: f64) -> Adjacency {
    let names: Vec<String> = (0..k).map(|i| format!("n{i:02}")).collect();
    let mut edges = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            if rng.next_f64() < density {
                edges.push((names[i].as_str(), names[j].as_str()));
            }
        }
    }
    Adjacency::new(names.iter().map(String::as_str), edges).unwrap()
}

pub fn adjacency() -> impl Strategy<Value = Adjacency> {
    (1usize..=20, any::<u64>(), 0.0f64..0.6)
        .prop_map(|(k, seed, density)| random_adjacency(&mut SplitMix64::new(seed), k, density))
}

/// Textbook direct-method SSA, written without any of the library's
/// machinery: linear scans for enabling, propensity and selection. Consumes
/// the same random stream as the library engine would.
pub fn reference_ssa(doc: &NetDocument, t_end: f64, seed: u64) -> Vec<(f64, usize)> {
    let net = doc.net();
    let mut m: Vec<u64> = doc.marking().tokens().to_vec();
    let mut rng = SplitMix64::new(seed);
    let mut t = 0.0;
    let mut log = Vec::new();
    loop {
        let props: Vec<f64> = (0..net.transition_count())
            .map(|j| {
                net.inputs(j).iter().fold(doc.rates()[j], |acc, &(p, w)| {
                    let mut c = 1.0;
                    for i in 0..w {
                        if m[p] < w {
                            return 0.0;
                        }
                        c = c * (m[p] - i) as f64 / (i + 1) as f64;
                    }
                    acc * c
                })
            })
            .collect();
        let total: f64 = props.iter().sum();
        if total <= 0.0 {
            return log;
        }
        t += rng.sample_exponential(1.0 / total);
        if t > t_end {
            return log;
        }
        let target = rng.next_f64() * total;
        let mut acc = 0.0;
        let mut pick = props.iter().rposition(|&a| a > 0.0).unwrap();
        for (j, &a) in props.iter().enumerate() {
            acc += a;
            if target < acc && a > 0.0 {
                pick = j;
                break;
            }
        }
        for &(p, w) in net.inputs(pick) {
            m[p] -= w;
        }
        for &(p, w) in net.outputs(pick) {
            m[p] += w;
        }
        log.push((t, pick));
    }
}

/// Breadth-first flood fill from `seeds` over the occupied nodes.
pub fn flood_fill(
    adj: &Adjacency,
    occupied: &BTreeSet<String>,
    seeds: &BTreeSet<String>,
) -> BTreeSet<String> {
    let lists = adj.neighbor_lists();
    let mut burnt: BTreeSet<String> = seeds.clone();
    let mut queue: std::collections::VecDeque<usize> =
        seeds.iter().map(|s| adj.index_of(s).unwrap()).collect();
    while let Some(i) = queue.pop_front() {
        for &j in &lists[i] {
            let id = &adj.nodes()[j];
            if occupied.contains(id) && burnt.insert(id.clone()) {
                queue.push_back(j);
            }
        }
    }
    burnt
}
