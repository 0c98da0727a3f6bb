//! Multi-patch model templates instantiated over an adjacency.
//!
//! SIR: per patch `S_i, I_i, R_i`, local `infect_i: S_i + I_i -> 2 I_i` and
//! `recover_i: I_i -> R_i`, and for every undirected edge `{i, j}` the pair
//! `cross_i_j: S_i + I_j -> I_i + I_j` / `cross_j_i`. Places follow sorted
//! patch order (S, I, R within a patch); local transitions come first, then
//! cross transitions in sorted edge order.
//!
//! Fire: per occupied patch `Alive_i, Fire_i`, and for every edge between
//! occupied patches `spread_i_j: Fire_i + Alive_j -> Fire_i + Fire_j` and the
//! reverse.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::layers::PatchRates;
use crate::net::{Marking, NetError, PetriNet};
use crate::spatial::Adjacency;

/// Tokens placed in the first place when no init spec is given.
pub const DEFAULT_FIRST_PLACE_TOKENS: u64 = 100;

pub const RATE_INFECT: &str = "infect";
pub const RATE_RECOVER: &str = "recover";
pub const RATE_CROSS_INFECT: &str = "cross_infect";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TemplateError {
    #[error("adjacency has no patches")]
    EmptyAdjacency,
    #[error("rate `{name}` must be positive and finite, got {value}")]
    InvalidRate { name: String, value: f64 },
    #[error("patch `{0}` is not in the adjacency")]
    UnknownPatch(String),
    #[error("seed `{0}` is not an occupied patch")]
    SeedNotOccupied(String),
    #[error("init spec references unknown ids: {}", .0.join(", "))]
    UnknownIds(Vec<String>),
    #[error("init CSV row {row}: {message}")]
    InitCsv { row: usize, message: String },
    #[error(transparent)]
    Net(#[from] NetError),
}

pub type Result<T> = std::result::Result<T, TemplateError>;

pub type RateMap = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct SirParams {
    pub infect: f64,
    pub recover: f64,
    pub cross_infect: f64,
    /// Per-patch overrides keyed by patch id, then by rate name
    /// (`infect`, `recover`, `cross_infect`).
    pub overrides: PatchRates,
}

impl SirParams {
    pub fn new(infect: f64, recover: f64, cross_infect: f64) -> Self {
        SirParams {
            infect,
            recover,
            cross_infect,
            overrides: PatchRates::new(),
        }
    }

    pub fn with_overrides(mut self, overrides: PatchRates) -> Self {
        self.overrides = overrides;
        self
    }

    fn rate(&self, patch: &str, name: &str) -> f64 {
        if let Some(v) = self.overrides.get(patch).and_then(|m| m.get(name)) {
            return *v;
        }
        match name {
            RATE_INFECT => self.infect,
            RATE_RECOVER => self.recover,
            _ => self.cross_infect,
        }
    }

    fn validate(&self, adj: &Adjacency) -> Result<()> {
        let check = |name: &str, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(TemplateError::InvalidRate {
                    name: name.to_string(),
                    value,
                })
            }
        };
        check(RATE_INFECT, self.infect)?;
        check(RATE_RECOVER, self.recover)?;
        check(RATE_CROSS_INFECT, self.cross_infect)?;
        for (patch, rates) in &self.overrides {
            if adj.index_of(patch).is_none() {
                return Err(TemplateError::UnknownPatch(patch.clone()));
            }
            for (name, &v) in rates {
                check(&format!("{name} for {patch}"), v)?;
            }
        }
        Ok(())
    }
}

/// Builds the multi-patch SIR net and the rate of every transition.
pub fn assemble_sir(adj: &Adjacency, params: &SirParams) -> Result<(PetriNet, RateMap)> {
    if adj.is_empty() {
        return Err(TemplateError::EmptyAdjacency);
    }
    params.validate(adj)?;
    let ids = adj.nodes();
    let s = |i: usize| format!("S_{}", ids[i]);
    let inf = |i: usize| format!("I_{}", ids[i]);
    let r = |i: usize| format!("R_{}", ids[i]);

    let mut b = PetriNet::builder();
    let mut rates = RateMap::new();
    for i in 0..ids.len() {
        b = b.place(s(i)).place(inf(i)).place(r(i));
    }
    for (i, id) in ids.iter().enumerate() {
        let infect = format!("infect_{id}");
        let recover = format!("recover_{id}");
        rates.insert(infect.clone(), params.rate(id, RATE_INFECT));
        rates.insert(recover.clone(), params.rate(id, RATE_RECOVER));
        b = b
            .transition(&infect)
            .input(&s(i), &infect, 1)
            .input(&inf(i), &infect, 1)
            .output(&infect, &inf(i), 2)
            .transition(&recover)
            .input(&inf(i), &recover, 1)
            .output(&recover, &r(i), 1);
    }
    for (i, j) in adj.edge_indices() {
        for (target, source) in [(i, j), (j, i)] {
            let t = format!("cross_{}_{}", ids[target], ids[source]);
            rates.insert(t.clone(), params.rate(&ids[target], RATE_CROSS_INFECT));
            b = b
                .transition(&t)
                .input(&s(target), &t, 1)
                .input(&inf(source), &t, 1)
                .output(&t, &inf(target), 1)
                .output(&t, &inf(source), 1);
        }
    }
    Ok((b.build()?, rates))
}

/// Builds the fire-spread net over the occupied patches, with `Fire = 1` on
/// seeds and `Alive = 1` on the other occupied patches.
pub fn assemble_fire(
    adj: &Adjacency,
    occupied: &BTreeSet<String>,
    seeds: &BTreeSet<String>,
) -> Result<(PetriNet, Marking)> {
    for id in occupied {
        if adj.index_of(id).is_none() {
            return Err(TemplateError::UnknownPatch(id.clone()));
        }
    }
    if let Some(seed) = seeds.iter().find(|s| !occupied.contains(*s)) {
        return Err(TemplateError::SeedNotOccupied(seed.clone()));
    }
    let ids = adj.nodes();
    let fuel: Vec<bool> = ids.iter().map(|id| occupied.contains(id)).collect();
    // place index of Alive_i; Fire_i follows it
    let mut slot = vec![usize::MAX; ids.len()];
    let mut b = PetriNet::builder();
    let mut tokens = Vec::with_capacity(2 * occupied.len());
    for (i, id) in ids.iter().enumerate() {
        if fuel[i] {
            slot[i] = tokens.len();
            let lit = seeds.contains(id);
            tokens.push(u64::from(!lit));
            tokens.push(u64::from(lit));
            b = b.place(format!("Alive_{id}")).place(format!("Fire_{id}"));
        }
    }
    for (i, j) in adj.edge_indices() {
        if !(fuel[i] && fuel[j]) {
            continue;
        }
        for (from, to) in [(i, j), (j, i)] {
            let t = format!("spread_{}_{}", ids[from], ids[to]);
            let fire_from = format!("Fire_{}", ids[from]);
            b = b
                .transition(&t)
                .input(&fire_from, &t, 1)
                .input(&format!("Alive_{}", ids[to]), &t, 1)
                .output(&t, &fire_from, 1)
                .output(&t, &format!("Fire_{}", ids[to]), 1);
        }
    }
    Ok((b.build()?, Marking::from_vec(tokens)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArcDirection {
    /// place -> transition
    In,
    /// transition -> place
    Out,
}

/// Initial marking and arc weight overrides.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InitSpec {
    pub places: BTreeMap<String, u64>,
    /// Keyed by `(place, transition, direction)`; weights are positive.
    pub arcs: BTreeMap<(String, String, ArcDirection), u64>,
}

/// Applies an init spec to a templated net.
///
/// With a spec the marking is all-zero except for the listed places, and
/// listed arcs take the given weights. Without one, the first place of the
/// net holds [`DEFAULT_FIRST_PLACE_TOKENS`] and the arcs stay as templated.
pub fn apply_init(net: &PetriNet, spec: Option<&InitSpec>) -> Result<(PetriNet, Marking)> {
    let Some(spec) = spec else {
        let mut m = Marking::zeros(net);
        if let Some(first) = m.tokens_mut().first_mut() {
            *first = DEFAULT_FIRST_PLACE_TOKENS;
        }
        return Ok((net.clone(), m));
    };
    let mut unknown = Vec::new();
    for place in spec.places.keys() {
        if net.place_idx(place).is_err() {
            unknown.push(place.clone());
        }
    }
    for (place, transition, _) in spec.arcs.keys() {
        if net.place_idx(place).is_err() {
            unknown.push(place.clone());
        }
        if net.transition_idx(transition).is_err() {
            unknown.push(transition.clone());
        }
    }
    if !unknown.is_empty() {
        unknown.sort();
        unknown.dedup();
        return Err(TemplateError::UnknownIds(unknown));
    }
    let mut marking = Marking::zeros(net);
    for (place, &n) in &spec.places {
        marking.set(net, place, n)?;
    }
    let net = if spec.arcs.is_empty() {
        net.clone()
    } else {
        let mut b = net.to_builder();
        for ((place, transition, dir), &w) in &spec.arcs {
            b = match dir {
                ArcDirection::In => b.input(place, transition, w),
                ArcDirection::Out => b.output(transition, place, w),
            };
        }
        b.build()?
    };
    Ok((net, marking))
}

/// Parses `kind,id,value` rows where kind is `place`, `arc_in` or `arc_out`;
/// arc ids are `place:transition`. Rows are numbered from the header (row 1).
pub fn parse_init_csv(text: &str) -> Result<InitSpec> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut spec = InitSpec::default();
    for (k, record) in reader.records().enumerate() {
        let row = k + 1;
        let err = |message: String| TemplateError::InitCsv { row, message };
        let record = record.map_err(|e| err(e.to_string()))?;
        let fields: Vec<&str> = record.iter().collect();
        if row == 1 {
            if fields != ["kind", "id", "value"] {
                return Err(err("expected header `kind,id,value`".into()));
            }
            continue;
        }
        if fields.len() == 1 && fields[0].is_empty() {
            continue;
        }
        let [kind, id, value] = fields[..] else {
            return Err(err(format!("expected 3 fields, found {}", fields.len())));
        };
        let value: u64 = value
            .parse()
            .map_err(|_| err(format!("`{value}` is not a non-negative integer")))?;
        match kind {
            "place" => {
                if id.is_empty() {
                    return Err(err("empty place id".into()));
                }
                spec.places.insert(id.to_string(), value);
            }
            "arc_in" | "arc_out" => {
                let Some((place, transition)) = id
                    .split_once(':')
                    .filter(|(p, t)| !p.is_empty() && !t.is_empty() && !t.contains(':'))
                else {
                    return Err(err(format!("arc id `{id}` is not `place:transition`")));
                };
                if value == 0 {
                    return Err(err("arc weight must be at least 1".into()));
                }
                let dir = if kind == "arc_in" {
                    ArcDirection::In
                } else {
                    ArcDirection::Out
                };
                spec.arcs
                    .insert((place.to_string(), transition.to_string(), dir), value);
            }
            other => return Err(err(format!("unknown kind `{other}`"))),
        }
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn adj(nodes: &[&str], edges: &[(&str, &str)]) -> Adjacency {
        Adjacency::new(nodes.iter().copied(), edges.iter().copied()).unwrap()
    }

    fn set(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    fn params() -> SirParams {
        SirParams::new(0.1, 0.05, 0.01)
    }

    #[test]
    fn sir_single_patch() {
        let (net, rates) = assemble_sir(&adj(&["p0"], &[]), &params()).unwrap();
        assert_eq!(net.places(), ["S_p0", "I_p0", "R_p0"]);
        assert_eq!(net.transitions(), ["infect_p0", "recover_p0"]);
        assert_eq!(net.input_weight("S_p0", "infect_p0").unwrap(), 1);
        assert_eq!(net.input_weight("I_p0", "infect_p0").unwrap(), 1);
        assert_eq!(net.output_weight("infect_p0", "I_p0").unwrap(), 2);
        assert_eq!(rates["infect_p0"], 0.1);
        assert_eq!(rates["recover_p0"], 0.05);
    }

    #[test]
    fn sir_two_patches_by_hand() {
        let (net, rates) = assemble_sir(&adj(&["a", "b"], &[("a", "b")]), &params()).unwrap();
        assert_eq!(net.place_count(), 6);
        assert_eq!(
            net.transitions(),
            [
                "infect_a",
                "recover_a",
                "infect_b",
                "recover_b",
                "cross_a_b",
                "cross_b_a"
            ]
        );
        // S_a + I_b -> I_a + I_b
        assert_eq!(net.input_weight("S_a", "cross_a_b").unwrap(), 1);
        assert_eq!(net.input_weight("I_b", "cross_a_b").unwrap(), 1);
        assert_eq!(net.output_weight("cross_a_b", "I_a").unwrap(), 1);
        assert_eq!(net.output_weight("cross_a_b", "I_b").unwrap(), 1);
        assert_eq!(net.input_weight("I_a", "cross_a_b").unwrap(), 0);
        assert_eq!(rates["cross_b_a"], 0.01);
    }

    #[test]
    fn sir_overrides_and_validation() {
        let a = adj(&["a", "b"], &[("a", "b")]);
        let mut ov = PatchRates::new();
        ov.entry("b".into())
            .or_default()
            .insert("cross_infect".into(), 0.5);
        ov.entry("a".into())
            .or_default()
            .insert("infect".into(), 0.3);
        let (_, rates) = assemble_sir(&a, &params().with_overrides(ov)).unwrap();
        assert_eq!(rates["cross_b_a"], 0.5);
        assert_eq!(rates["cross_a_b"], 0.01);
        assert_eq!(rates["infect_a"], 0.3);
        assert_eq!(rates["infect_b"], 0.1);
        assert!(matches!(
            assemble_sir(&a, &SirParams::new(0.0, 1.0, 1.0)),
            Err(TemplateError::InvalidRate { .. })
        ));
        assert_eq!(
            assemble_sir(&Adjacency::default(), &params()),
            Err(TemplateError::EmptyAdjacency)
        );
    }

    #[test]
    fn fire_chain_burns_through() {
        let a = adj(&["a", "b", "c"], &[("a", "b"), ("b", "c")]);
        let (net, m0) = assemble_fire(&a, &set(&["a", "b", "c"]), &set(&["a"])).unwrap();
        assert_eq!(net.place_count(), 6);
        assert_eq!(net.transition_count(), 4);
        let (end, firings) = net.run_to_quiescence(&m0, 100).unwrap();
        assert_eq!(firings, 2);
        for id in ["a", "b", "c"] {
            assert_eq!(end.get(&net, &format!("Fire_{id}")).unwrap(), 1);
            assert_eq!(end.get(&net, &format!("Alive_{id}")).unwrap(), 0);
        }
    }

    #[test]
    fn fire_gap_blocks_spread() {
        let a = adj(&["a", "b", "c"], &[("a", "b"), ("b", "c")]);
        let (net, m0) = assemble_fire(&a, &set(&["a", "c"]), &set(&["a"])).unwrap();
        assert_eq!(net.transition_count(), 0);
        let (end, _) = net.run_to_quiescence(&m0, 100).unwrap();
        assert_eq!(end.get(&net, "Fire_a").unwrap(), 1);
        assert_eq!(end.get(&net, "Fire_c").unwrap(), 0);
        assert_eq!(end.get(&net, "Alive_c").unwrap(), 1);
    }

    #[test]
    fn fire_without_seeds_is_quiescent() {
        let a = adj(&["a", "b"], &[("a", "b")]);
        let (net, m0) = assemble_fire(&a, &set(&["a", "b"]), &set(&[])).unwrap();
        assert_eq!(net.run_to_quiescence(&m0, 10).unwrap(), (m0, 0));
    }

    #[test]
    fn fire_seed_must_be_occupied() {
        let a = adj(&["a", "b"], &[("a", "b")]);
        assert_eq!(
            assemble_fire(&a, &set(&["a"]), &set(&["b"])),
            Err(TemplateError::SeedNotOccupied("b".into()))
        );
    }

    #[test]
    fn default_init_puts_100_in_first_place() {
        let (net, _) = assemble_sir(&adj(&["p0"], &[]), &params()).unwrap();
        let (same, m) = apply_init(&net, None).unwrap();
        assert_eq!(same, net);
        assert_eq!(m.tokens(), &[100, 0, 0]);
    }

    #[test]
    fn init_spec_overrides() {
        let (net, _) = assemble_sir(&adj(&["p0"], &[]), &params()).unwrap();
        let spec = parse_init_csv("kind,id,value\nplace,S_p0,99\nplace,I_p0,1\n").unwrap();
        let (_, m) = apply_init(&net, Some(&spec)).unwrap();
        assert_eq!(m.tokens(), &[99, 1, 0]);
        let (_, empty) = apply_init(&net, Some(&InitSpec::default())).unwrap();
        assert_eq!(empty.tokens(), &[0, 0, 0]);
    }

    #[test]
    fn arc_override_touches_one_arc() {
        let (net, _) = assemble_sir(&adj(&["a", "b"], &[("a", "b")]), &params()).unwrap();
        let spec = parse_init_csv("kind,id,value\narc_in,S_a:cross_a_b,2\n").unwrap();
        let (out, _) = apply_init(&net, Some(&spec)).unwrap();
        assert_eq!(out.input_weight("S_a", "cross_a_b").unwrap(), 2);
        for t in net.transitions() {
            for p in net.places() {
                if (p.as_str(), t.as_str()) != ("S_a", "cross_a_b") {
                    assert_eq!(out.input_weight(p, t), net.input_weight(p, t));
                }
                assert_eq!(out.output_weight(t, p), net.output_weight(t, p));
            }
        }
    }

    #[test]
    fn unknown_ids_all_listed() {
        let (net, _) = assemble_sir(&adj(&["p0"], &[]), &params()).unwrap();
        let spec =
            parse_init_csv("kind,id,value\nplace,X,1\narc_out,Y:infect_p0,1\nplace,Z,2\n").unwrap();
        assert_eq!(
            apply_init(&net, Some(&spec)),
            Err(TemplateError::UnknownIds(vec![
                "X".into(),
                "Y".into(),
                "Z".into()
            ]))
        );
    }

    #[test]
    fn init_csv_parsing() {
        let spec = parse_init_csv("kind,id,value\narc_in,S_p0:infect_p0,2\n").unwrap();
        assert_eq!(
            spec.arcs[&("S_p0".into(), "infect_p0".into(), ArcDirection::In)],
            2
        );
        let row_of = |text: &str| match parse_init_csv(text) {
            Err(TemplateError::InitCsv { row, .. }) => row,
            other => panic!("expected row error, got {other:?}"),
        };
        assert_eq!(row_of("kind,id,value\nplace,S_p0,-1\n"), 2);
        assert_eq!(row_of("kind,id,value\nplace,S_p0,1\nbogus,x,1\n"), 3);
        assert_eq!(row_of("kind,id,value\narc_in,S_p0,1\n"), 2);
        assert_eq!(row_of("kind,id,value\narc_out,S_p0:t,0\n"), 2);
        assert_eq!(row_of("kind,name,value\n"), 1);
    }
}
