mod common;

use common::{adjacency, document, reference_ssa};
use patchnet::formats::NetDocument;
use patchnet::net::Marking;
use patchnet::rng::derive_seed;
use patchnet::sim::{propensity_idx, simulate_ssa, simulate_ssa_logged, SimConfig};
use patchnet::spatial::Adjacency;
use patchnet::templates::{assemble_sir, SirParams};
use proptest::prelude::*;

fn sir_doc(
    adj: &Adjacency,
    infect: f64,
    recover: f64,
    cross: f64,
    s0: u64,
    i0: u64,
) -> NetDocument {
    let (net, rates) = assemble_sir(adj, &SirParams::new(infect, recover, cross)).unwrap();
    let mut m = Marking::zeros(&net);
    for (k, id) in adj.nodes().iter().enumerate() {
        m.set(&net, &format!("S_{id}"), s0).unwrap();
        if k == 0 {
            m.set(&net, &format!("I_{id}"), i0).unwrap();
        }
    }
    NetDocument::new("sir", net, m, &rates).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn propensity_positive_iff_enabled(doc in document(10, 20), tokens in prop::collection::vec(0u64..6, 10)) {
        let net = doc.net();
        let m = Marking::from_vec(tokens[..net.place_count()].to_vec());
        for t in 0..net.transition_count() {
            let a = propensity_idx(net, &m, t, doc.rates()[t]);
            prop_assert!(a >= 0.0);
            prop_assert_eq!(a > 0.0, net.is_enabled_idx(&m, t));
        }
    }

    #[test]
    fn replaying_the_log_reproduces_the_trace(doc in document(8, 12), seed in any::<u64>()) {
        let cfg = SimConfig::new(5.0, 0.25, seed).with_max_events(2_000);
        let (result, log) = simulate_ssa_logged(&doc, &cfg).unwrap();
        prop_assert_eq!(result.events as usize, log.len());
        let net = doc.net();
        let mut m = doc.marking().clone();
        let mut next = 0;
        let times = cfg.record_times();
        for (k, &time) in times.iter().enumerate().take(result.trace.len()) {
            while next < log.len() && log[next].time <= time {
                m = net.fire(&m, &net.transitions()[log[next].transition]).unwrap();
                next += 1;
            }
            prop_assert_eq!(result.trace.times[k], time);
            prop_assert_eq!(&result.trace.rows[k], &m.tokens().to_vec());
        }
        // waits can underflow the clock's ulp when propensities are enormous
        prop_assert!(log.windows(2).all(|w| w[0].time <= w[1].time));
        if !result.truncated {
            prop_assert_eq!(result.trace.len(), times.len());
        }
    }

    #[test]
    fn sir_rows_conserve_tokens(adj in adjacency(), seed in any::<u64>()) {
        let doc = sir_doc(&adj, 0.05, 0.1, 0.01, 30, 3);
        let total = doc.marking().total();
        let result = simulate_ssa(&doc, &SimConfig::new(50.0, 1.0, seed)).unwrap();
        prop_assert_eq!(result.trace.len(), 51);
        for row in &result.trace.rows {
            prop_assert_eq!(row.iter().sum::<u64>(), total);
        }
    }
}

/// With integer rates every propensity sum is exact, so the library engine
/// and the linear-scan reference must take identical paths.
#[test]
fn matches_reference_path_exactly() {
    let adj = Adjacency::new(["a", "b", "c"], [("a", "b"), ("b", "c")]).unwrap();
    let doc = sir_doc(&adj, 1.0, 2.0, 1.0, 20, 2);
    for seed in 0..50 {
        let cfg = SimConfig::new(3.0, 3.0, seed);
        let (_, log) = simulate_ssa_logged(&doc, &cfg).unwrap();
        let reference = reference_ssa(&doc, 3.0, seed);
        let ours: Vec<(f64, usize)> = log.iter().map(|f| (f.time, f.transition)).collect();
        assert_eq!(ours, reference, "seed {seed}");
    }
}

/// Non-integer rates: compare the final-size distribution of independent
/// samples from both engines.
#[test]
fn agrees_with_reference_in_distribution() {
    let adj = Adjacency::new(["a", "b"], [("a", "b")]).unwrap();
    let doc = sir_doc(&adj, 0.013, 0.31, 0.007, 40, 2);
    let place_r = doc.net().place_idx("R_b").unwrap();
    let runs = 600;
    let ours: Vec<f64> = (0..runs)
        .map(|i| {
            let r = simulate_ssa(&doc, &SimConfig::new(40.0, 40.0, derive_seed(1, i))).unwrap();
            r.trace.rows.last().unwrap()[place_r] as f64
        })
        .collect();
    let theirs: Vec<f64> = (0..runs)
        .map(|i| {
            let log = reference_ssa(&doc, 40.0, derive_seed(2, i));
            let mut m = doc.marking().tokens().to_vec();
            for (_, t) in log {
                for &(p, w) in doc.net().inputs(t) {
                    m[p] -= w;
                }
                for &(p, w) in doc.net().outputs(t) {
                    m[p] += w;
                }
            }
            m[place_r] as f64
        })
        .collect();
    let stats = |xs: &[f64]| {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    };
    let (m1, v1) = stats(&ours);
    let (m2, v2) = stats(&theirs);
    let se = ((v1 + v2) / runs as f64).sqrt();
    assert!(se > 0.0);
    assert!((m1 - m2).abs() < 4.0 * se, "means {m1} vs {m2}, se {se}");
}

#[test]
fn truncation_is_flagged() {
    let adj = Adjacency::new(["a"], []).unwrap();
    let doc = sir_doc(&adj, 1.0, 1.0, 1.0, 100, 5);
    let r = simulate_ssa(&doc, &SimConfig::new(100.0, 1.0, 9).with_max_events(10)).unwrap();
    assert!(r.truncated);
    assert_eq!(r.events, 10);
    assert!(r.trace.len() < 101);
}
