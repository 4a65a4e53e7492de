//! Benchmark families and records with the column layout of the runtime
//! tables: timesteps, trains, nodes, arcs, runtime, constraints, variables.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::milp::{build, BuildError};
use crate::model::{effective_scenarios, Arc, HeadwayTable, Instance, Network, Node, Scenario, Time, TrainRequest};
use crate::rational::{int, Rational};
use crate::solver::{solve, SolveError, SolveLimits, SolveStatus};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub label: String,
    pub timesteps: Time,
    pub trains: usize,
    pub nodes: usize,
    pub arcs: usize,
    /// Trains per scenario, in declaration order.
    pub scenario_trains: Vec<(String, usize)>,
    /// Mean over the repetitions.
    pub runtime: Duration,
    pub repetitions: usize,
    pub constraints: usize,
    pub variables: usize,
    pub headway_rows: usize,
    pub status: SolveStatus,
    pub objective: Option<Rational>,
    /// Search nodes of the last repetition.
    pub search_nodes: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Builds and solves `instance` `repetitions` times.
pub fn bench_instance(
    label: &str,
    instance: &Instance,
    repetitions: usize,
    limits: &SolveLimits,
) -> Result<BenchRecord, BenchError> {
    assert!(repetitions >= 1, "need at least one repetition");
    let mut total = Duration::ZERO;
    let mut last = None;
    let mut system = None;
    for _ in 0..repetitions {
        let start = Instant::now();
        let sys = build(instance)?;
        let r = solve(&sys, limits)?;
        total += start.elapsed();
        system = Some(sys);
        last = Some(r);
    }
    let (sys, r) = (system.expect("ran once"), last.expect("ran once"));
    let counts = crate::milp::Counts::of_system(&sys);
    Ok(BenchRecord {
        label: label.to_string(),
        timesteps: instance.horizon + 1,
        trains: instance.trains.len(),
        nodes: instance.network.nodes.len(),
        arcs: instance.network.arcs.len(),
        scenario_trains: effective_scenarios(instance).into_iter().map(|s| (s.id, s.train_ids.len())).collect(),
        runtime: total / repetitions as u32,
        repetitions,
        constraints: sys.rows.len(),
        variables: sys.num_vars(),
        headway_rows: counts.headway,
        status: r.status,
        objective: r.objective,
        search_nodes: r.stats.nodes,
    })
}

const COLUMNS: [&str; 11] = [
    "Instance",
    "Timesteps",
    "Trains",
    "Scenarios",
    "Nodes",
    "Arcs",
    "Runtime",
    "Constraints",
    "Variables",
    "Status",
    "Objective",
];

fn cells(r: &BenchRecord) -> Vec<String> {
    let scen = r.scenario_trains.iter().map(|(_, n)| n.to_string()).collect::<Vec<_>>().join("/");
    vec![
        r.label.clone(),
        r.timesteps.to_string(),
        r.trains.to_string(),
        scen,
        r.nodes.to_string(),
        r.arcs.to_string(),
        format!("{:.3}", r.runtime.as_secs_f64()),
        r.constraints.to_string(),
        r.variables.to_string(),
        format!("{:?}", r.status).to_lowercase(),
        r.objective.as_ref().map_or("-".to_string(), |o| o.to_string()),
    ]
}

/// Column-aligned text table.
pub fn format_table(records: &[BenchRecord]) -> String {
    let rows: Vec<Vec<String>> = records.iter().map(cells).collect();
    let widths: Vec<usize> = (0..COLUMNS.len())
        .map(|c| rows.iter().map(|r| r[c].len()).chain([COLUMNS[c].len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    let line = |out: &mut String, cols: &[&str]| {
        let padded: Vec<String> = cols
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        writeln!(out, "{}", padded.join("  ").trim_end()).expect("write to string");
    };
    line(&mut out, &COLUMNS);
    for r in &rows {
        line(&mut out, &r.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}

/// Tab-separated rows with a header line.
pub fn format_tsv(records: &[BenchRecord]) -> String {
    let mut out = COLUMNS.join("\t");
    out.push('\n');
    for r in records {
        out.push_str(&cells(r).join("\t"));
        out.push('\n');
    }
    out
}

fn corridor() -> Network {
    let nodes = ["A", "B", "C", "D", "E"].into_iter().map(Node::new).collect();
    let arcs = vec![
        Arc::new("A", "B", 1, 2, 1, int(5)),
        Arc::new("B", "C", 2, 1, 1, int(8)),
        Arc::new("B", "E", 1, 1, 1, int(3)),
        Arc::new("E", "C", 2, 1, 1, int(3)),
        Arc::new("C", "D", 1, 2, 1, int(5)),
    ];
    Network { nodes, arcs, headways: HeadwayTable { entries: vec![], default: 2 } }
}

fn corridor_train(i: usize) -> TrainRequest {
    const TRIPS: [(&str, &str, Time); 4] = [("A", "D", 6), ("A", "C", 5), ("B", "D", 5), ("A", "D", 7)];
    let (o, d, span) = TRIPS[i % TRIPS.len()];
    let depart = (i as Time * 5) % 17;
    TrainRequest::new(format!("T{}", i + 1), o, d, depart, depart + span)
}

/// A five-station corridor with a bypass, `trains` staggered trains, a
/// headway of 2 and capacity windows of 3 steps.
pub fn deterministic_family(trains: usize) -> Instance {
    Instance {
        network: corridor(),
        horizon: 24,
        trains: (0..trains).map(corridor_train).collect(),
        connections: vec![],
        scenarios: vec![],
        capacity_window: 3,
        dwell: true,
    }
}

/// The corridor with `partition.iter().sum()` trains split into consecutive
/// blocks, one scenario per block.
pub fn scenario_family(partition: &[usize]) -> Instance {
    let mut inst = deterministic_family(partition.iter().sum());
    let mut next = 0;
    inst.scenarios = partition
        .iter()
        .enumerate()
        .map(|(s, &size)| {
            let ids = inst.trains[next..next + size].iter().map(|t| t.id.clone()).collect();
            next += size;
            Scenario { id: format!("S{}", s + 1), train_ids: ids }
        })
        .collect();
    inst
}
