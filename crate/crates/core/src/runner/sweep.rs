use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{fmt_opt, run_experiment, thread_pool, write_csv, ExitStatus, ExperimentConfig, RunSummary};
use crate::error::{Error, Result};

/// A config template plus the points to run it at.
///
/// Keys of `grid` and `points` are dotted paths into the template, e.g.
/// `"bath.gamma1"` or `"model.n"`. The grid is expanded as a cartesian
/// product in key order; `points` are appended after it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub template: Value,
    #[serde(default)]
    pub grid: BTreeMap<String, Vec<Value>>,
    #[serde(default)]
    pub points: Vec<BTreeMap<String, Value>>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Parameter overrides of every point, in run order.
    pub fn expand(&self) -> Vec<BTreeMap<String, Value>> {
        let mut out = Vec::new();
        if !self.grid.is_empty() {
            let mut acc = vec![BTreeMap::new()];
            for (key, values) in &self.grid {
                acc = acc
                    .into_iter()
                    .flat_map(|point| {
                        values.iter().map(move |v| {
                            let mut p = point.clone();
                            p.insert(key.clone(), v.clone());
                            p
                        })
                    })
                    .collect();
            }
            out.extend(acc);
        }
        out.extend(self.points.iter().cloned());
        out
    }
}

/// Sets `path` (dot-separated) inside `target`, creating objects as needed.
pub fn set_path(target: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut cur = target;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(Error::InvalidConfig(format!("empty segment in `{path}`")));
        }
        if cur.is_null() {
            *cur = Value::Object(Default::default());
        }
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::InvalidConfig(format!("`{path}` descends into a non-object")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert(Value::Null);
    }
    unreachable!("split yields at least one segment")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub point: usize,
    pub overrides: BTreeMap<String, Value>,
    pub status: ExitStatus,
    pub summary: RunSummary,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub status: ExitStatus,
}

impl SweepReport {
    pub fn exit_code(&self) -> i32 {
        self.status.code()
    }
}

fn run_point(sweep: &SweepConfig, point: usize, overrides: BTreeMap<String, Value>, out: &Path) -> SweepRow {
    let dir = out.join(format!("point_{point:03}"));
    let mut value = sweep.template.clone();
    let parsed = overrides
        .iter()
        .try_for_each(|(k, v)| set_path(&mut value, k, v.clone()))
        .and_then(|_| {
            if let Some(obj) = value.as_object_mut() {
                obj.remove("output_dir");
            }
            ExperimentConfig::from_value(value)
        });
    let cfg = match parsed {
        Ok(cfg) => cfg,
        Err(e) => {
            return SweepRow {
                point,
                overrides,
                status: ExitStatus::InvalidConfig,
                summary: RunSummary::default(),
                error: Some(e.to_string()),
            }
        }
    };
    let report = run_experiment(&cfg, &dir);
    let error = (!report.issues.is_empty()).then(|| {
        report
            .issues
            .iter()
            .map(|i| format!("{}: {}", i.task, i.message))
            .collect::<Vec<_>>()
            .join("; ")
    });
    SweepRow {
        point,
        overrides,
        status: report.status,
        summary: report.summary,
        error,
    }
}

/// Runs every point in parallel (capped by `NESSLAB_THREADS`), one
/// subdirectory `point_NNN` each, and writes `summary.csv`.
///
/// The sweep succeeds when it has no points or when at least one point ran
/// to completion (exit status 0 or 2).
pub fn run_sweep(sweep: &SweepConfig, out: &Path) -> Result<SweepReport> {
    std::fs::create_dir_all(out)?;
    let points = sweep.expand();
    let pool = thread_pool()?;
    let rows: Vec<SweepRow> = pool.install(|| {
        points
            .into_par_iter()
            .enumerate()
            .map(|(i, p)| run_point(sweep, i, p, out))
            .collect()
    });
    let csv_rows = rows.iter().map(|r| {
        let s = &r.summary;
        vec![
            r.point.to_string(),
            serde_json::to_string(&r.overrides).unwrap_or_default(),
            r.status.code().to_string(),
            s.sectors.map(|v| v.to_string()).unwrap_or_default(),
            s.null_dim.map(|v| v.to_string()).unwrap_or_default(),
            fmt_opt(s.residual),
            fmt_opt(s.slope),
            fmt_opt(s.fit_residual),
            fmt_opt(s.osee),
            r.error.clone().unwrap_or_default(),
        ]
    });
    write_csv(
        &out.join("summary.csv"),
        &[
            "point",
            "overrides",
            "exit_code",
            "sectors",
            "null_dim",
            "residual",
            "slope",
            "fit_residual",
            "osee",
            "error",
        ],
        csv_rows,
    )?;
    let completed = rows
        .iter()
        .any(|r| matches!(r.status, ExitStatus::Success | ExitStatus::AnsatzViolation));
    let status = if rows.is_empty() || completed {
        ExitStatus::Success
    } else {
        ExitStatus::NumericalFailure
    };
    Ok(SweepReport { rows, status })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn template() -> Value {
        json!({
            "model": {"family": "fredkin", "n": 4},
            "bath": {"gamma1": 1.0, "gamma2": 1.0, "gamma3": 1.0, "gamma4": 1.0},
            "tasks": ["sectors", "steady", "gibbs-fit"]
        })
    }

    #[test]
    fn set_path_creates_objects() {
        let mut v = json!({"a": {"b": 1}});
        set_path(&mut v, "a.c.d", json!(2)).unwrap();
        set_path(&mut v, "a.b", json!(3)).unwrap();
        assert_eq!(v, json!({"a": {"b": 3, "c": {"d": 2}}}));
        assert!(set_path(&mut v, "a.b.x", json!(0)).is_err());
    }

    #[test]
    fn grid_is_cartesian() {
        let s = SweepConfig {
            template: template(),
            grid: BTreeMap::from([
                ("model.n".into(), vec![json!(4), json!(6)]),
                ("bath.gamma1".into(), vec![json!(1), json!(2), json!(3)]),
            ]),
            points: vec![],
        };
        assert_eq!(s.expand().len(), 6);
    }

    #[test]
    fn empty_grid_gives_empty_summary() {
        let dir = tempfile::tempdir().unwrap();
        let s = SweepConfig {
            template: template(),
            grid: BTreeMap::new(),
            points: vec![],
        };
        let report = run_sweep(&s, dir.path()).unwrap();
        assert!(report.rows.is_empty());
        assert_eq!(report.exit_code(), 0);
        let text = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(text.lines().count(), 1);
    }

    #[test]
    fn beta_points_give_slopes() {
        let dir = tempfile::tempdir().unwrap();
        let points = [1.0f64, 2.0, 3.0]
            .iter()
            .map(|&g| BTreeMap::from([("bath.gamma1".into(), json!(g)), ("bath.gamma4".into(), json!(g))]))
            .collect();
        let s = SweepConfig {
            template: template(),
            grid: BTreeMap::new(),
            points,
        };
        let report = run_sweep(&s, dir.path()).unwrap();
        for (row, g) in report.rows.iter().zip([1.0f64, 2.0, 3.0]) {
            assert_eq!(row.status, ExitStatus::Success, "{:?}", row.error);
            assert!((row.summary.slope.unwrap() + g.ln()).abs() < 1e-6);
        }
        assert!(dir.path().join("point_002/gibbs_fit.csv").exists());
    }

    #[test]
    fn bad_point_recorded_per_row() {
        let dir = tempfile::tempdir().unwrap();
        let s = SweepConfig {
            template: template(),
            grid: BTreeMap::from([("bath.gamma1".into(), vec![json!(-1.0), json!(2.0)])]),
            points: vec![],
        };
        let report = run_sweep(&s, dir.path()).unwrap();
        assert_eq!(report.rows[0].status, ExitStatus::InvalidConfig);
        assert_eq!(report.rows[1].status, ExitStatus::Success);
        assert_eq!(report.exit_code(), 0);
    }
}
