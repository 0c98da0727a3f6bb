mod common;

use std::collections::BTreeSet;

use common::{net_shape, random_adjacency};
use patchnet::net::{Marking, NetError};
use patchnet::rng::SplitMix64;
use patchnet::templates::assemble_fire;
use proptest::prelude::*;

proptest! {
    #[test]
    fn firing_balance(shape in net_shape(8, 8), tokens in prop::collection::vec(0u64..10, 8)) {
        let net = shape.build();
        let m = Marking::from_vec(tokens[..net.place_count()].to_vec());
        let before = m.clone();
        for (j, t) in shape.transitions.iter().enumerate() {
            let enabled = shape.inputs[j].iter().all(|&(p, w)| m.tokens()[p] >= w);
            prop_assert_eq!(net.is_enabled(&m, t).unwrap(), enabled);
            match net.fire(&m, t) {
                Ok(next) => {
                    prop_assert!(enabled);
                    for p in 0..net.place_count() {
                        let consumed: u64 = shape.inputs[j].iter().filter(|a| a.0 == p).map(|a| a.1).sum();
                        let produced: u64 = shape.outputs[j].iter().filter(|a| a.0 == p).map(|a| a.1).sum();
                        prop_assert_eq!(next.tokens()[p], m.tokens()[p] - consumed + produced);
                    }
                }
                Err(NetError::NotEnabled(_)) => prop_assert!(!enabled),
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }
        prop_assert_eq!(m, before);
    }

    #[test]
    fn enabling_flips_at_weight(shape in net_shape(6, 6), pick in any::<prop::sample::Index>()) {
        let net = shape.build();
        prop_assume!(!shape.transitions.is_empty());
        let j = pick.index(shape.transitions.len());
        let t = &shape.transitions[j];
        // every input place saturated, then one place drained to the boundary
        let mut m = Marking::from_vec(vec![10; net.place_count()]);
        prop_assert!(net.is_enabled(&m, t).unwrap());
        for &(p, w) in &shape.inputs[j] {
            m.tokens_mut()[p] = w;
            prop_assert!(net.is_enabled(&m, t).unwrap());
            m.tokens_mut()[p] = w - 1;
            prop_assert!(!net.is_enabled(&m, t).unwrap());
            m.tokens_mut()[p] = 10;
        }
    }

    #[test]
    fn enabled_set_matches_is_enabled(shape in net_shape(8, 12), tokens in prop::collection::vec(0u64..3, 8)) {
        let net = shape.build();
        let m = Marking::from_vec(tokens[..net.place_count()].to_vec());
        let expected: Vec<&str> = shape
            .transitions
            .iter()
            .filter(|t| net.is_enabled(&m, t).unwrap())
            .map(String::as_str)
            .collect();
        prop_assert_eq!(net.enabled_set(&m).unwrap(), expected);
    }
}

#[test]
fn fire_quiescence_is_order_independent() {
    let mut rng = SplitMix64::new(2024);
    for _ in 0..20 {
        let adj = random_adjacency(&mut rng, 12, 0.25);
        let occupied: BTreeSet<String> = adj
            .nodes()
            .iter()
            .filter(|_| rng.next_f64() < 0.7)
            .cloned()
            .collect();
        let seeds: BTreeSet<String> = occupied.iter().take(2).cloned().collect();
        let (net, m0) = assemble_fire(&adj, &occupied, &seeds).unwrap();
        let (canonical, _) = net.run_to_quiescence(&m0, 10_000).unwrap();
        for _ in 0..100 {
            let mut m = m0.clone();
            loop {
                let enabled = net.enabled_set(&m).unwrap();
                if enabled.is_empty() {
                    break;
                }
                let k = (rng.next_u64() % enabled.len() as u64) as usize;
                m = net.fire(&m, enabled[k]).unwrap();
            }
            assert_eq!(m, canonical);
        }
    }
}

#[test]
fn run_to_quiescence_reports_partial_marking() {
    let net = patchnet::net::PetriNet::builder()
        .place("A")
        .transition("t")
        .output("t", "A", 1)
        .build()
        .unwrap();
    let m0 = Marking::zeros(&net);
    match net.run_to_quiescence(&m0, 5) {
        Err(NetError::NonQuiescent { marking, firings }) => {
            assert_eq!(firings, 5);
            assert_eq!(marking.tokens(), &[5]);
        }
        other => panic!("expected non-quiescent error, got {other:?}"),
    }
    assert_eq!(m0.tokens(), &[0]);
}
