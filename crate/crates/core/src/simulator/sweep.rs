use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{run_simulation_in, OverheadCategory, SimConfig, SimError, SimReport};
use crate::catalog::{builtin_catalog, Catalog};

/// One swept parameter. `parameter` is `name` or `pattern.name`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: String,
    pub values: Vec<f64>,
}

/// Ordered axes; the first axis varies slowest.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SweepGrid(pub Vec<SweepAxis>);

impl SweepGrid {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn axis(mut self, parameter: &str, values: impl IntoIterator<Item = f64>) -> Self {
        self.0.push(SweepAxis {
            parameter: parameter.to_string(),
            values: values.into_iter().collect(),
        });
        self
    }

    /// Parses `param=v1,v2,...`.
    pub fn parse_axis(spec: &str) -> Result<SweepAxis, String> {
        let (name, values) = spec
            .split_once('=')
            .ok_or_else(|| format!("expected `param=v1,v2,...`, got `{spec}`"))?;
        let values = values
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("bad value `{v}` for `{name}`: {e}"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SweepAxis {
            parameter: name.trim().to_string(),
            values,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRow {
    pub bindings: BTreeMap<String, f64>,
    pub report: SimReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepTable {
    /// Binding columns in grid order.
    pub columns: Vec<String>,
    pub rows: Vec<SweepRow>,
}

const METRICS: [&str; 17] = [
    "makespan_mean",
    "makespan_p50",
    "makespan_p95",
    "makespan_stderr",
    "efficiency_mean",
    "space_overhead",
    "injected_faults",
    "activated_errors",
    "detected",
    "masked",
    "recovered",
    "unrecovered_failures",
    "avoided",
    "false_alarms",
    "votes",
    "lost_votes",
    "livelock_aborts",
];

impl SweepTable {
    /// RFC 4180 CSV: binding columns, then metric and overhead columns.
    pub fn to_csv(&self) -> Result<String, SimError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = self.columns.clone();
        header.extend(METRICS.iter().map(|m| m.to_string()));
        header.extend(OverheadCategory::ALL.iter().map(|c| format!("overhead_{}", c.key())));
        w.write_record(&header).map_err(|e| SimError::Csv(e.to_string()))?;
        for row in &self.rows {
            let r = &row.report;
            let e = &r.events;
            let mut rec: Vec<String> = self
                .columns
                .iter()
                .map(|c| row.bindings[c].to_string())
                .collect();
            rec.extend(
                [r.makespan_mean, r.makespan_p50, r.makespan_p95, r.makespan_stderr, r.efficiency_mean, r.space_overhead]
                    .iter()
                    .map(f64::to_string),
            );
            rec.extend(
                [
                    e.injected_faults,
                    e.activated_errors,
                    e.detected,
                    e.masked,
                    e.recovered,
                    e.unrecovered_failures,
                    e.avoided,
                    e.false_alarms,
                    e.votes,
                    e.lost_votes,
                    e.livelock_aborts,
                ]
                .iter()
                .map(u64::to_string),
            );
            rec.extend(r.overhead_breakdown.values().iter().map(f64::to_string));
            w.write_record(&rec).map_err(|e| SimError::Csv(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| SimError::Csv(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| SimError::Csv(e.to_string()))
    }
}

/// Resolves a grid key to the index of the instance it binds and the bare parameter name.
fn resolve_key(cfg: &SimConfig, catalog: &Catalog, key: &str) -> Result<(usize, String), SimError> {
    let (pattern, name) = match key.split_once('.') {
        Some((p, n)) => (Some(p), n),
        None => (None, key),
    };
    let matches: Vec<usize> = cfg
        .solution
        .instances
        .iter()
        .enumerate()
        .filter(|(_, i)| pattern.is_none_or(|p| p == i.pattern))
        .filter(|(_, i)| catalog.get(&i.pattern).is_some_and(|p| p.parameter(name).is_some()))
        .map(|(idx, _)| idx)
        .collect();
    match matches.as_slice() {
        [] => Err(SimError::UnknownParameter(key.to_string())),
        [one] => Ok((*one, name.to_string())),
        _ => Err(SimError::AmbiguousParameter(key.to_string())),
    }
}

/// Runs the cartesian product of `grid` against the builtin catalog.
pub fn sweep(cfg: &SimConfig, grid: &SweepGrid) -> Result<SweepTable, SimError> {
    sweep_in(cfg, grid, &builtin_catalog(), None)
}

pub fn sweep_in(
    cfg: &SimConfig,
    grid: &SweepGrid,
    catalog: &Catalog,
    threads: Option<usize>,
) -> Result<SweepTable, SimError> {
    let mut axes = Vec::with_capacity(grid.0.len());
    for axis in &grid.0 {
        let (idx, name) = resolve_key(cfg, catalog, &axis.parameter)?;
        if axis.values.is_empty() {
            return Err(SimError::InvalidConfig(format!("no values for `{}`", axis.parameter)));
        }
        let spec = catalog
            .get(&cfg.solution.instances[idx].pattern)
            .and_then(|p| p.parameter(&name))
            .expect("resolved parameter");
        if let Some(v) = axis.values.iter().find(|v| !spec.domain.contains(**v)) {
            return Err(SimError::OutOfDomain {
                parameter: axis.parameter.clone(),
                value: *v,
            });
        }
        axes.push((idx, name, axis));
    }

    let mut base = cfg.clone();
    base.trace = false;
    base.per_trial = false;
    let mut rows = Vec::new();
    let mut counters = vec![0usize; axes.len()];
    loop {
        let mut run = base.clone();
        let mut bindings = BTreeMap::new();
        for ((idx, name, axis), &c) in axes.iter().zip(&counters) {
            let v = axis.values[c];
            run.solution.instances[*idx].bindings.insert(name.clone(), v);
            bindings.insert(axis.parameter.clone(), v);
        }
        rows.push(SweepRow {
            bindings,
            report: run_simulation_in(&run, catalog, threads)?,
        });
        // odometer with the last axis fastest
        let mut k = axes.len();
        loop {
            if k == 0 {
                return Ok(SweepTable {
                    columns: grid.0.iter().map(|a| a.parameter.clone()).collect(),
                    rows,
                });
            }
            k -= 1;
            counters[k] += 1;
            if counters[k] < axes[k].2.values.len() {
                break;
            }
            counters[k] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{run_simulation, Workload};
    use crate::synthesis::{PatternInstance, SolutionCandidate};
    use crate::system::SystemModel;

    fn cfg() -> SimConfig {
        SimConfig::new(
            SystemModel::fail_stop(1000.0),
            Workload::new(2000.0),
            SolutionCandidate::bare(
                "dynamic-state",
                vec![
                    PatternInstance::new("rollback").with("checkpoint_cost", 10.0).with("restart_cost", 30.0),
                    PatternInstance::new("n-modular-redundancy"),
                ],
            ),
        )
        .with_trials(20)
        .with_seed(5)
    }

    #[test]
    fn rows_match_single_runs() {
        let t = sweep(&cfg(), &SweepGrid::new().axis("interval", [100.0, 200.0])).unwrap();
        assert_eq!(t.rows.len(), 2);
        for row in &t.rows {
            let mut single = cfg();
            single.solution.instances[0].bindings.insert("interval".into(), row.bindings["interval"]);
            assert_eq!(run_simulation(&single).unwrap().makespan_mean, row.report.makespan_mean);
        }
    }

    #[test]
    fn empty_grid_is_identity() {
        let t = sweep(&cfg(), &SweepGrid::new()).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].report, run_simulation(&cfg()).unwrap());
    }

    #[test]
    fn replication_space_tracks_n() {
        let t = sweep(&cfg(), &SweepGrid::new().axis("n-modular-redundancy.N", [3.0, 5.0])).unwrap();
        let space: Vec<f64> = t.rows.iter().map(|r| r.report.space_overhead).collect();
        // rollback adds the protected state fraction on top of the replicas
        assert_eq!(space, vec![2.25, 4.25]);
    }

    #[test]
    fn grid_order_and_errors() {
        let g = SweepGrid::new().axis("interval", [100.0, 200.0]).axis("restart_cost", [1.0, 2.0, 3.0]);
        let t = sweep(&cfg().with_trials(2), &g).unwrap();
        let order: Vec<(f64, f64)> = t.rows.iter().map(|r| (r.bindings["interval"], r.bindings["restart_cost"])).collect();
        assert_eq!(order[..4], [(100.0, 1.0), (100.0, 2.0), (100.0, 3.0), (200.0, 1.0)]);
        let csv = t.to_csv().unwrap();
        assert!(csv.starts_with("interval,restart_cost,makespan_mean,"));
        assert_eq!(csv.lines().count(), 7);

        assert!(matches!(sweep(&cfg(), &SweepGrid::new().axis("warp", [1.0])), Err(SimError::UnknownParameter(_))));
        assert!(matches!(sweep(&cfg(), &SweepGrid::new().axis("N", [4.0])), Err(SimError::OutOfDomain { .. })));
        assert!(matches!(sweep(&cfg(), &SweepGrid::new().axis("interval", [0.0])), Err(SimError::OutOfDomain { .. })));
    }

    #[test]
    fn axis_parsing() {
        let a = SweepGrid::parse_axis("rollback.interval=25, 50,75").unwrap();
        assert_eq!(a.parameter, "rollback.interval");
        assert_eq!(a.values, vec![25.0, 50.0, 75.0]);
        assert!(SweepGrid::parse_axis("interval").is_err());
        assert!(SweepGrid::parse_axis("interval=x").is_err());
    }
}
