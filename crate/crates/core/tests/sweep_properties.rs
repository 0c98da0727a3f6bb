use std::collections::BTreeMap;
use std::fs;

use patchnet::formats::{read_trace_csv, NetDocument};
use patchnet::net::Marking;
use patchnet::sim::SimConfig;
use patchnet::spatial::Adjacency;
use patchnet::sweep::{
    expand_sweep, merge_csv, run_sweep, write_merge, Axis, RunStatus, SweepSpec,
};
use patchnet::templates::{assemble_sir, SirParams};

fn spec() -> SweepSpec {
    let adj = Adjacency::new(["x", "y"], [("x", "y")]).unwrap();
    let (net, rates) = assemble_sir(&adj, &SirParams::new(0.05, 0.2, 0.02)).unwrap();
    let base = NetDocument::new(
        "pair",
        net,
        Marking::from_vec(vec![30, 2, 0, 30, 0, 0]),
        &rates,
    )
    .unwrap();
    SweepSpec {
        name: "pair".into(),
        base,
        axes: vec![
            Axis {
                path: "rates.infect_x".into(),
                values: vec![0.01, 0.05, 0.1],
            },
            Axis {
                path: "marking.S_y".into(),
                values: vec![10.0, 40.0],
            },
        ],
        replicates: 2,
        base_seed: 17,
    }
}

#[test]
fn merged_rows_and_summary_recompute() {
    let dir = tempfile::tempdir().unwrap();
    let spec = spec();
    let records = expand_sweep(&spec).unwrap();
    let done = run_sweep(
        &spec,
        &records,
        &SimConfig::new(12.0, 1.5, 0),
        dir.path(),
        3,
    )
    .unwrap();
    assert_eq!(done.len(), 12);
    assert!(done.iter().all(|r| r.status == RunStatus::Ok));

    let mut per_trace_rows = 0;
    for r in &done {
        let trace = read_trace_csv(&fs::read_to_string(dir.path().join(&r.file)).unwrap()).unwrap();
        per_trace_rows += trace.len();
        // parameter assignment reached the simulated document
        let s_y = trace.places.iter().position(|p| p == "S_y").unwrap();
        assert_eq!(trace.rows[0][s_y] as f64, r.assignment[1].1);
    }

    let (merged, summary) = merge_csv(dir.path()).unwrap();
    let mut lines = merged.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(
        header,
        [
            "run_id",
            "rates.infect_x",
            "marking.S_y",
            "time",
            "S_x",
            "I_x",
            "R_x",
            "S_y",
            "I_y",
            "R_y"
        ]
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), per_trace_rows);
    let ids: Vec<&str> = rows.iter().map(|r| r[0]).collect();
    assert!(ids.windows(2).all(|w| w[0] <= w[1]));

    // recompute final/min/max/mean from the merged table
    let mut columns: BTreeMap<(&str, usize), Vec<u64>> = BTreeMap::new();
    for row in &rows {
        for k in 4..header.len() {
            columns
                .entry((row[0], k))
                .or_default()
                .push(row[k].parse().unwrap());
        }
    }
    let mut expected = String::from("run_id,place,final,min,max,mean\n");
    for ((run, k), values) in &columns {
        let mean = values.iter().sum::<u64>() as f64 / values.len() as f64;
        expected.push_str(&format!(
            "{run},{},{},{},{},{mean}\n",
            header[*k],
            values.last().unwrap(),
            values.iter().min().unwrap(),
            values.iter().max().unwrap()
        ));
    }
    assert_eq!(summary, expected);

    write_merge(dir.path()).unwrap();
    let first = fs::read(dir.path().join("merged.csv")).unwrap();
    write_merge(dir.path()).unwrap();
    assert_eq!(fs::read(dir.path().join("merged.csv")).unwrap(), first);
}

#[test]
fn failed_and_truncated_runs_are_isolated() {
    let dir = tempfile::tempdir().unwrap();
    let spec = spec();
    let mut records = expand_sweep(&spec).unwrap();
    records.truncate(3);
    // a stale assignment that no longer resolves fails only its own run
    records[1].assignment[0].0 = "rates.gone".into();
    let cfg = SimConfig::new(50.0, 1.0, 0).with_max_events(1);
    let done = run_sweep(&spec, &records, &cfg, dir.path(), 2).unwrap();
    assert_eq!(done[0].status, RunStatus::Truncated);
    assert!(matches!(done[1].status, RunStatus::Failed(_)));
    assert_eq!(done[2].status, RunStatus::Truncated);
    let manifest = fs::read_to_string(dir.path().join("manifest.csv")).unwrap();
    assert_eq!(
        manifest.lines().filter(|l| l.contains(",failed,")).count(),
        1
    );
    let (merged, _) = merge_csv(dir.path()).unwrap();
    assert!(!merged.contains(&done[1].run_id));
}
