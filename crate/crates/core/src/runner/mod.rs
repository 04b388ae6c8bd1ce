//! Config-driven experiments: task orchestration, file output and sweeps.
//!
//! Output files of one run, written only for requested tasks:
//!
//! | task        | files                                   |
//! |-------------|-----------------------------------------|
//! | `sectors`   | `sectors.csv`                           |
//! | `steady`    | `ness_diag.csv`, `steady.json`          |
//! | `gibbs-fit` | `gibbs_fit.csv`, `gibbs_fit.json`       |
//! | `qdbc`      | `qdbc.csv`, `qdbc.json`                 |
//! | `wdag`      | `wdag.dot`, `wdag.json`                 |
//! | `fcs`       | `fcs.csv`                               |
//! | `osee`      | `osee.json`                             |
//!
//! `manifest.json` is always written. CSV floats use 17 significant digits.

mod config;
mod sweep;

use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

pub use config::{ExperimentConfig, SolverConfig, SolverMethod, Task};
pub use sweep::{run_sweep, SweepConfig, SweepReport, SweepRow};

use crate::error::{Error, Result};
use crate::gibbs::{
    build_sector_graph, check_dag_consistency, fit_gibbs, ladder_check, predict_gibbs, sector_spread,
    to_dot, verify_qdbc, Consistency, SectorGraph,
};
use crate::lindblad::{steady_state_evolve, steady_states_dense, DensityMatrix, Liouvillian};
use crate::models::{build_hamiltonian, build_jump_set, BoundaryBaths, Family, JumpSet, ModelSpec};
use crate::observables::{default_alpha_grid, fcs_closed_form, fcs_direct, osee, osee_all_cuts, FcsResult};
use crate::operator::{Chain, SparseOperator};
use crate::sectors::{
    decompose_sectors, effective_hamiltonian, gibbs_regressors, Charge, EffectiveHamiltonian,
    SectorDecomposition,
};

/// Sector fits with a larger log residual are reported as a broken Gibbs form.
pub const GIBBS_FIT_TOLERANCE: f64 = 1e-3;
/// qDBC residuals or `‖[H, ρ]‖_F` above this are reported as a qDBC failure.
pub const QDBC_TOLERANCE: f64 = 1e-6;
/// Largest Hilbert-space dimension for which the direct FCS trace is written.
pub const FCS_DIRECT_LIMIT: usize = 1 << 14;

/// Process exit status of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Success,
    /// Ansatz violation, inconsistent potentials, or a non-unique steady state.
    AnsatzViolation,
    NumericalFailure,
    InvalidConfig,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::NumericalFailure => 1,
            ExitStatus::AnsatzViolation => 2,
            ExitStatus::InvalidConfig => 3,
        }
    }

    pub fn classify(err: &Error) -> Self {
        match err {
            Error::AnsatzViolation(_) | Error::Inconsistent | Error::UndefinedTemperature(_) => {
                ExitStatus::AnsatzViolation
            }
            Error::InvalidConfig(_)
            | Error::MissingRate(_)
            | Error::NonPositiveRate { .. }
            | Error::ChainTooShort { .. }
            | Error::UnsupportedModel(_)
            | Error::OddChain(_)
            | Error::TooLargeForDense { .. }
            | Error::Json(_) => ExitStatus::InvalidConfig,
            _ => ExitStatus::NumericalFailure,
        }
    }
}

/// A reportable problem found by one task.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Issue {
    pub task: String,
    pub status: ExitStatus,
    pub message: String,
}

/// Headline numbers of a run, used by sweep summaries.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunSummary {
    pub sectors: Option<usize>,
    pub null_dim: Option<usize>,
    pub residual: Option<f64>,
    pub slope: Option<f64>,
    pub fit_residual: Option<f64>,
    pub osee: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaskRecord {
    pub task: String,
    pub ok: bool,
    pub seconds: f64,
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub status: ExitStatus,
    pub summary: RunSummary,
    pub issues: Vec<Issue>,
    pub tasks: Vec<TaskRecord>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        self.status.code()
    }

    fn failed(status: ExitStatus, task: &str, message: String) -> Self {
        RunReport {
            status,
            summary: RunSummary::default(),
            issues: vec![Issue {
                task: task.into(),
                status,
                message,
            }],
            tasks: Vec::new(),
        }
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

struct Steady {
    rho: DensityMatrix,
    null_dim: usize,
    residual: f64,
    method: SolverMethod,
    report: Value,
}

type Flags = Vec<(ExitStatus, String)>;

struct TaskOutput {
    files: Vec<String>,
    flags: Flags,
}

impl TaskOutput {
    fn new(files: &[&str]) -> Self {
        Self {
            files: files.iter().map(|s| s.to_string()).collect(),
            flags: Vec::new(),
        }
    }

    fn flag(mut self, status: ExitStatus, message: impl Into<String>) -> Self {
        self.flags.push((status, message.into()));
        self
    }
}

struct Experiment<'a> {
    cfg: &'a ExperimentConfig,
    out: &'a Path,
    spec: ModelSpec,
    chain: Chain,
    h: SparseOperator,
    jumps: JumpSet,
    decomp: SectorDecomposition,
    heff: Result<EffectiveHamiltonian>,
    graph: Result<(SectorGraph, Consistency)>,
    steady: Option<std::result::Result<Steady, (ExitStatus, String)>>,
    summary: RunSummary,
}

/// Runs every task of `cfg`, writing outputs into `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> RunReport {
    let start = Instant::now();
    if let Err(e) = cfg.validate() {
        return RunReport::failed(ExitStatus::classify(&e), "config", e.to_string());
    }
    if let Err(e) = std::fs::create_dir_all(out) {
        return RunReport::failed(ExitStatus::NumericalFailure, "output", e.to_string());
    }
    let mut exp = match Experiment::setup(cfg, out) {
        Ok(exp) => exp,
        Err(e) => {
            let report = RunReport::failed(ExitStatus::classify(&e), "setup", e.to_string());
            let _ = write_manifest(cfg, out, &report, None, start, 0.0, None);
            return report;
        }
    };
    let setup_seconds = start.elapsed().as_secs_f64();
    let tasks = cfg.ordered_tasks();

    let mut steady_seconds = None;
    if tasks.iter().any(|t| t.needs_steady()) {
        let t0 = Instant::now();
        exp.steady = Some(exp.solve().map_err(|e| (ExitStatus::classify(&e), e.to_string())));
        steady_seconds = Some(t0.elapsed().as_secs_f64());
    }

    let mut records = Vec::new();
    let mut issues = Vec::new();
    for task in tasks {
        let t0 = Instant::now();
        let result = exp.run(task);
        let seconds = t0.elapsed().as_secs_f64();
        let record = match result {
            Ok(output) => {
                for (status, message) in output.flags {
                    issues.push(Issue {
                        task: task.name().into(),
                        status,
                        message,
                    });
                }
                TaskRecord {
                    task: task.name().into(),
                    ok: true,
                    seconds,
                    files: output.files,
                    error: None,
                }
            }
            Err((status, message)) => {
                issues.push(Issue {
                    task: task.name().into(),
                    status,
                    message: message.clone(),
                });
                TaskRecord {
                    task: task.name().into(),
                    ok: false,
                    seconds,
                    files: Vec::new(),
                    error: Some(message),
                }
            }
        };
        records.push(record);
    }

    let status = issues
        .iter()
        .map(|i| i.status)
        .max()
        .unwrap_or(ExitStatus::Success);
    let mut report = RunReport {
        status,
        summary: exp.summary.clone(),
        issues,
        tasks: records,
    };
    if let Err(e) = write_manifest(cfg, out, &report, Some(&exp), start, setup_seconds, steady_seconds) {
        report.issues.push(Issue {
            task: "manifest".into(),
            status: ExitStatus::NumericalFailure,
            message: e.to_string(),
        });
        report.status = report.status.max(ExitStatus::NumericalFailure);
    }
    report
}

fn write_manifest(
    cfg: &ExperimentConfig,
    out: &Path,
    report: &RunReport,
    exp: Option<&Experiment>,
    start: Instant,
    setup_seconds: f64,
    steady_seconds: Option<f64>,
) -> Result<()> {
    let (residual, null_dim, method) = match exp.and_then(|e| e.steady.as_ref()) {
        Some(Ok(s)) => (Some(s.residual), Some(s.null_dim), Some(s.method)),
        _ => (None, None, None),
    };
    let consistency = exp.and_then(|e| e.graph.as_ref().ok()).map(|(g, c)| consistency_json(g, c));
    let manifest = json!({
        "nesslab_version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "dim": cfg.dim(),
        "solver": method,
        "exit_code": report.status.code(),
        "status": report.status,
        "residual": residual,
        "null_dim": null_dim,
        "summary": report.summary,
        "issues": report.issues,
        "consistency": consistency,
        "tasks": report.tasks,
        "seconds": {
            "setup": setup_seconds,
            "steady": steady_seconds,
            "total": start.elapsed().as_secs_f64(),
        },
    });
    write_json(&out.join("manifest.json"), &manifest)
}

fn consistency_json(graph: &SectorGraph, c: &Consistency) -> Value {
    let witness = c.witness.as_ref().map(|w| {
        let path = |p: &[usize]| p.iter().map(|&v| graph.labels[v].clone()).collect::<Vec<_>>();
        json!({
            "from": graph.labels[w.from],
            "to": graph.labels[w.to],
            "path_a": path(&w.path_a),
            "weight_a": w.weight_a,
            "path_b": path(&w.path_b),
            "weight_b": w.weight_b,
        })
    });
    json!({
        "consistent": c.consistent,
        "components": c.components,
        "roots": c.roots.iter().map(|&r| graph.labels[r].clone()).collect::<Vec<_>>(),
        "witness": witness,
    })
}

impl<'a> Experiment<'a> {
    fn setup(cfg: &'a ExperimentConfig, out: &'a Path) -> Result<Self> {
        let spec = cfg.model_spec();
        let chain = spec.chain();
        let h = build_hamiltonian(&spec)?;
        let jumps = build_jump_set(&spec, &cfg.bath)?;
        let decomp = decompose_sectors(&h, chain)?.labeled(spec.family);
        let heff = effective_hamiltonian(&spec, &cfg.bath);
        let graph = build_sector_graph(&decomp, &jumps).map(|g| {
            let c = check_dag_consistency(&g);
            (g, c)
        });
        let summary = RunSummary {
            sectors: Some(decomp.len()),
            ..RunSummary::default()
        };
        Ok(Self {
            cfg,
            out,
            spec,
            chain,
            h,
            jumps,
            decomp,
            heff,
            graph,
            steady: None,
            summary,
        })
    }

    fn solve(&mut self) -> Result<Steady> {
        let liou = Liouvillian::new(&self.h, &self.jumps.operators())?;
        let method = self.cfg.resolved_method();
        let (rho, null_dim, mut report) = match method {
            SolverMethod::Dense => {
                let ss = steady_states_dense(&liou)?;
                let vectors: Vec<Value> = ss
                    .states
                    .iter()
                    .map(|s| json!({"trace": s.rho.trace().re, "unit_trace": s.unit_trace}))
                    .collect();
                let report = json!({
                    "sigma_max": ss.sigma_max,
                    "gap_ratio": ss.gap_ratio,
                    "warning": ss.warning,
                    "null_vectors": vectors,
                });
                let first = ss
                    .states
                    .iter()
                    .find(|s| s.unit_trace)
                    .or(ss.states.first())
                    .ok_or(Error::ZeroMatrix)?;
                (first.rho.clone(), ss.null_dim, report)
            }
            _ => {
                let res = steady_state_evolve(&liou, None, &self.cfg.evolve_options())?;
                let report = json!({"steps": res.steps, "dt": res.dt});
                (res.rho, 1, report)
            }
        };
        let residual = liou.residual(&rho)?;
        let fields = report.as_object_mut().expect("object");
        fields.insert("method".into(), json!(method));
        fields.insert("null_dim".into(), json!(null_dim));
        fields.insert("residual".into(), json!(residual));
        fields.insert("trace".into(), json!(rho.trace().re));
        fields.insert("min_eig".into(), json!(rho.min_eigenvalue()));
        fields.insert("offdiag_mass".into(), json!(rho.offdiag_mass()));
        fields.insert("hermiticity_error".into(), json!(rho.hermiticity_error()));
        fields.insert("commutator_norm".into(), json!(rho.commutator_norm(&self.h)?));
        fields.insert("sector_spread".into(), json!(sector_spread(&rho.diagonal(), &self.decomp)));
        if let Ok((_, c)) = &self.graph {
            if let Ok(predicted) = predict_gibbs(&self.decomp, c) {
                fields.insert("gibbs_trace_distance".into(), json!(rho.trace_distance(&predicted)?));
            }
        }
        self.summary.null_dim = Some(null_dim);
        self.summary.residual = Some(residual);
        Ok(Steady {
            rho,
            null_dim,
            residual,
            method,
            report,
        })
    }

    /// The unique steady state, or the reason there is none.
    fn ness(&self) -> std::result::Result<&Steady, (ExitStatus, String)> {
        match &self.steady {
            Some(Ok(s)) if s.null_dim == 1 => Ok(s),
            Some(Ok(s)) => Err((
                ExitStatus::AnsatzViolation,
                format!("steady state is not unique (null_dim = {})", s.null_dim),
            )),
            Some(Err(e)) => Err(e.clone()),
            None => Err((ExitStatus::NumericalFailure, "steady state was not computed".into())),
        }
    }

    fn run(&mut self, task: Task) -> std::result::Result<TaskOutput, (ExitStatus, String)> {
        let lift = |e: Error| (ExitStatus::classify(&e), e.to_string());
        match task {
            Task::Sectors => self.sectors().map_err(lift),
            Task::Steady => {
                match &self.steady {
                    Some(Ok(_)) => {}
                    Some(Err(e)) => return Err(e.clone()),
                    None => return Err((ExitStatus::NumericalFailure, "steady state was not computed".into())),
                }
                self.write_steady().map_err(lift)
            }
            Task::GibbsFit => {
                self.ness()?;
                self.gibbs_fit().map_err(lift)
            }
            Task::Qdbc => {
                self.ness()?;
                self.qdbc().map_err(lift)
            }
            Task::Wdag => self.wdag().map_err(lift),
            Task::Fcs => self.fcs().map_err(lift),
            Task::Osee => {
                self.ness()?;
                self.osee().map_err(lift)
            }
        }
    }

    fn sectors(&self) -> Result<TaskOutput> {
        let heff = self.heff.as_ref().ok();
        let rows = self.decomp.sectors().iter().map(|s| {
            vec![
                s.id.to_string(),
                s.label.to_string(),
                s.dim().to_string(),
                fmt_opt(heff.map(|h| h.values[s.representative()])),
            ]
        });
        write_csv(
            &self.out.join("sectors.csv"),
            &["sector_id", "label", "dim", "Heff_value"],
            rows,
        )?;
        Ok(TaskOutput::new(&["sectors.csv"]))
    }

    fn write_steady(&self) -> Result<TaskOutput> {
        let steady = match &self.steady {
            Some(Ok(s)) => s,
            _ => unreachable!("checked by caller"),
        };
        let diag = steady.rho.diagonal();
        let rows = self.chain.states().map(|s| {
            let i = s.index();
            vec![
                i.to_string(),
                s.to_string(),
                self.decomp.sector_of(i).to_string(),
                fmt_float(diag[i]),
            ]
        });
        write_csv(
            &self.out.join("ness_diag.csv"),
            &["basis_index", "state_string", "sector_id", "diagonal_value"],
            rows,
        )?;
        write_json(&self.out.join("steady.json"), &steady.report)?;
        let mut output = TaskOutput::new(&["ness_diag.csv", "steady.json"]);
        if steady.null_dim > 1 {
            output = output.flag(
                ExitStatus::AnsatzViolation,
                format!(
                    "{} independent steady states; ness_diag.csv holds the first",
                    steady.null_dim
                ),
            );
        }
        Ok(output)
    }

    fn expected_slopes(&self, names: &[String]) -> Option<Vec<f64>> {
        let bath = &self.cfg.bath;
        if names.len() == 2 {
            let (b1, b2) = (bath.beta_left().ok()?, bath.beta_right().ok()?);
            return Some(vec![b1 - b2, b2]);
        }
        self.heff.as_ref().ok().map(|h| vec![-h.beta])
    }

    fn gibbs_fit(&mut self) -> Result<TaskOutput> {
        let rho = &self.ness().expect("checked").rho;
        let mut fallback = None;
        let regressors = match gibbs_regressors(&self.spec, &self.cfg.bath) {
            Ok(r) => r,
            Err(e @ Error::UndefinedTemperature(_)) => {
                fallback = Some(e.to_string());
                vec![(
                    Charge::Magnetization.name(),
                    Charge::Magnetization.diagonal(self.chain)?,
                )]
            }
            Err(e) => return Err(e),
        };
        let fit = fit_gibbs(&rho.diagonal(), &self.decomp, &regressors)?;
        let mut header = vec!["sector_id".to_string(), "label".to_string()];
        header.extend(fit.names.iter().cloned());
        header.extend(["log_value", "fitted", "residual"].map(String::from));
        let rows = fit.rows.iter().map(|r| {
            let mut row = vec![r.sector_id.to_string(), r.label.clone()];
            row.extend(r.regressors.iter().map(|&x| fmt_float(x)));
            row.extend([r.log_value, r.fitted, r.residual].map(fmt_float));
            row
        });
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        write_csv(&self.out.join("gibbs_fit.csv"), &header_refs, rows)?;
        let expected = if fallback.is_none() {
            self.expected_slopes(&fit.names)
        } else {
            None
        };
        let report = json!({
            "names": fit.names,
            "slopes": fit.slopes,
            "expected_slopes": expected,
            "intercept": fit.intercept,
            "max_abs_residual": fit.max_abs_residual,
            "max_state_residual": fit.max_state_residual,
            "rank": fit.rank,
            "rank_deficient": fit.rank_deficient,
            "excluded_states": fit.excluded_states,
            "heff_form": self.heff.as_ref().ok().map(|h| h.form),
            "fallback": fallback,
        });
        write_json(&self.out.join("gibbs_fit.json"), &report)?;
        self.summary.slope = fit.slopes.first().copied();
        self.summary.fit_residual = Some(fit.max_abs_residual);
        let mut output = TaskOutput::new(&["gibbs_fit.csv", "gibbs_fit.json"]);
        if let Some(reason) = fallback {
            output = output.flag(ExitStatus::AnsatzViolation, reason);
        }
        if fit.max_abs_residual > GIBBS_FIT_TOLERANCE {
            output = output.flag(
                ExitStatus::AnsatzViolation,
                format!(
                    "sector fit residual {:e} exceeds {GIBBS_FIT_TOLERANCE:e}; the steady state is not of Gibbs form",
                    fit.max_abs_residual
                ),
            );
        }
        Ok(output)
    }

    fn qdbc(&self) -> Result<TaskOutput> {
        let rho = &self.ness().expect("checked").rho;
        let report = verify_qdbc(rho, &self.h, &self.jumps)?;
        let heff = self.heff.as_ref().ok();
        let mut rows = Vec::new();
        let mut entries = Vec::new();
        let mut max_lambda_error: f64 = 0.0;
        for (jump, balance) in self.jumps.jumps.iter().zip(&report.jumps) {
            let ladder = heff.and_then(|h| ladder_check(&h.values, &jump.operator).ok());
            let predicted = heff.zip(ladder).map(|(h, l)| (h.beta * l.epsilon).exp());
            let error = balance
                .lambda
                .zip(predicted)
                .map(|(l, p)| (l - p).norm() / p.max(1.0));
            if let Some(e) = error {
                max_lambda_error = max_lambda_error.max(e);
            }
            rows.push(vec![
                balance.label.clone(),
                fmt_opt(balance.lambda.map(|l| l.re)),
                fmt_opt(balance.lambda.map(|l| l.im)),
                fmt_opt(balance.residual),
                fmt_opt(ladder.map(|l| l.epsilon)),
                fmt_opt(ladder.map(|l| l.residual)),
                fmt_opt(predicted),
                fmt_opt(error),
            ]);
            entries.push(json!({
                "jump": balance.label,
                "lambda": balance.lambda.map(|l| [l.re, l.im]),
                "residual": balance.residual,
                "epsilon": ladder.map(|l| l.epsilon),
                "ladder_residual": ladder.map(|l| l.residual),
                "predicted_lambda": predicted,
                "lambda_error": error,
            }));
        }
        write_csv(
            &self.out.join("qdbc.csv"),
            &[
                "jump",
                "lambda_re",
                "lambda_im",
                "residual",
                "epsilon",
                "ladder_residual",
                "predicted_lambda",
                "lambda_error",
            ],
            rows,
        )?;
        let max_residual = report.max_residual();
        write_json(
            &self.out.join("qdbc.json"),
            &json!({
                "commutator_norm": report.commutator_norm,
                "max_residual": max_residual,
                "max_lambda_error": max_lambda_error,
                "beta": heff.map(|h| h.beta),
                "jumps": entries,
            }),
        )?;
        let mut output = TaskOutput::new(&["qdbc.csv", "qdbc.json"]);
        if report.commutator_norm > QDBC_TOLERANCE || max_residual > QDBC_TOLERANCE {
            output = output.flag(
                ExitStatus::AnsatzViolation,
                format!(
                    "qDBC fails: |[H, rho]| = {:e}, max jump residual = {max_residual:e}",
                    report.commutator_norm
                ),
            );
        }
        Ok(output)
    }

    fn wdag(&self) -> Result<TaskOutput> {
        let (graph, c) = match &self.graph {
            Ok(g) => g,
            Err(e) => return Err(Error::AnsatzViolation(e.to_string())),
        };
        let mut dot = to_dot(graph, Some(c));
        if !dot.ends_with('\n') {
            dot.push('\n');
        }
        std::fs::write(self.out.join("wdag.dot"), dot)?;
        let edges: Vec<Value> = graph
            .edges
            .iter()
            .map(|e| {
                json!({
                    "source": graph.labels[e.source],
                    "target": graph.labels[e.target],
                    "jump": e.jump,
                    "log_weight": e.log_weight,
                })
            })
            .collect();
        let vertices: Vec<Value> = graph
            .labels
            .iter()
            .zip(&c.potentials)
            .map(|(l, v)| json!({"label": l, "potential": v}))
            .collect();
        let mut report = consistency_json(graph, c);
        let fields = report.as_object_mut().expect("object");
        fields.insert("vertices".into(), json!(vertices));
        fields.insert("edges".into(), json!(edges));
        write_json(&self.out.join("wdag.json"), &report)?;
        let mut output = TaskOutput::new(&["wdag.dot", "wdag.json"]);
        if !c.consistent {
            output = output.flag(
                ExitStatus::AnsatzViolation,
                "sector potentials are path dependent; see the witness in manifest.json",
            );
        }
        if c.components > 1 {
            output = output.flag(
                ExitStatus::AnsatzViolation,
                format!("sector graph has {} weakly connected components", c.components),
            );
        }
        Ok(output)
    }

    fn fcs(&self) -> Result<TaskOutput> {
        let alphas = default_alpha_grid();
        let mut results: Vec<FcsResult> = Vec::new();
        let bath = &self.cfg.bath;
        if self.spec.family == Family::Fredkin
            && self.spec.n % 2 == 0
            && self.spec.params.boundary_baths == BoundaryBaths::Both
        {
            results.push(fcs_closed_form(
                self.spec.n,
                bath.beta_left()?,
                bath.beta_right_flipped()?,
                &alphas,
            )?);
        }
        if self.chain.dim() <= FCS_DIRECT_LIMIT {
            let heff = match &self.heff {
                Ok(h) => h,
                Err(_) => return Err(effective_hamiltonian(&self.spec, &self.cfg.bath).err().expect("same inputs")),
            };
            let sz = Charge::Magnetization.diagonal(self.chain)?;
            results.push(fcs_direct(&heff.potential(), &sz, 1.0, &alphas)?);
        }
        let rows = results.iter().flat_map(|r| {
            r.alphas.iter().zip(&r.values).map(move |(a, g)| {
                vec![fmt_float(*a), fmt_float(g.re), fmt_float(g.im), r.method.name().to_string()]
            })
        });
        write_csv(&self.out.join("fcs.csv"), &["alpha", "re_G", "im_G", "method"], rows)?;
        Ok(TaskOutput::new(&["fcs.csv"]))
    }

    fn osee(&mut self) -> Result<TaskOutput> {
        let rho = &self.ness().expect("checked").rho;
        let cut = (self.spec.n / 2).max(1);
        let half = osee(rho, self.chain, cut)?;
        let all: Vec<Value> = osee_all_cuts(rho, self.chain)?
            .into_iter()
            .map(|r| json!({"cut": r.cut, "entropy": r.entropy, "entropy_log2": r.entropy_log2}))
            .collect();
        let top: Vec<f64> = half.spectrum.iter().take(16).copied().collect();
        write_json(
            &self.out.join("osee.json"),
            &json!({
                "cut": half.cut,
                "entropy": half.entropy,
                "entropy_log2": half.entropy_log2,
                "top_16_schmidt": top,
                "all_cuts": all,
            }),
        )?;
        self.summary.osee = Some(half.entropy);
        Ok(TaskOutput::new(&["osee.json"]))
    }
}

/// Thread count from `NESSLAB_THREADS`, if set to a positive integer.
pub fn thread_limit() -> Option<usize> {
    std::env::var("NESSLAB_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// A rayon pool capped by `NESSLAB_THREADS`.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_limit() {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Bath, ModelSpec};

    fn fredkin(n: usize, g1: f64, g2: f64) -> ExperimentConfig {
        ExperimentConfig::new(ModelSpec::new(Family::Fredkin, n), Bath::four(g1, g2, g2, g1))
    }

    #[test]
    fn fredkin_all_tasks() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_experiment(&fredkin(4, 1.5, 0.5), dir.path());
        assert_eq!(report.status, ExitStatus::Success, "{:?}", report.issues);
        for f in [
            "sectors.csv",
            "ness_diag.csv",
            "steady.json",
            "gibbs_fit.csv",
            "gibbs_fit.json",
            "qdbc.csv",
            "qdbc.json",
            "wdag.dot",
            "wdag.json",
            "fcs.csv",
            "osee.json",
            "manifest.json",
        ] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        assert_eq!(report.summary.sectors, Some(9));
        assert!((report.summary.slope.unwrap() + 3f64.ln()).abs() < 1e-6);
        let manifest: Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert!(manifest["residual"].as_f64().unwrap() < 1e-9);
        assert_eq!(manifest["exit_code"], 0);
    }

    #[test]
    fn infinite_temperature() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_experiment(&fredkin(4, 1.0, 1.0), dir.path());
        assert_eq!(report.status, ExitStatus::Success, "{:?}", report.issues);
        assert!(report.summary.slope.unwrap().abs() < 1e-9);
        assert!(report.summary.osee.unwrap().abs() < 1e-9);
    }

    #[test]
    fn two_temperature_xx_is_exit_two() {
        let dir = tempfile::tempdir().unwrap();
        let bath = Bath::per_site(vec![
            crate::models::SiteRates {
                site: 1,
                raise: 1.5,
                lower: 0.5,
            },
            crate::models::SiteRates {
                site: 2,
                raise: 0.5,
                lower: 1.5,
            },
        ]);
        let cfg = ExperimentConfig::new(ModelSpec::new(Family::Xx, 2), bath);
        let report = run_experiment(&cfg, dir.path());
        assert_eq!(report.exit_code(), 2, "{:?}", report.issues);
        let manifest: Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["consistency"]["consistent"], false);
        assert!(manifest["consistency"]["witness"]["path_a"].is_array());
    }

    #[test]
    fn invalid_config_is_exit_three() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = fredkin(4, 1.5, 0.5);
        cfg.solver.tol = -1.0;
        assert_eq!(run_experiment(&cfg, dir.path()).exit_code(), 3);
    }

    #[test]
    fn non_convergence_is_exit_one() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = fredkin(4, 1.5, 0.5);
        cfg.solver.method = SolverMethod::Evolve;
        cfg.solver.max_steps = 3;
        cfg.tasks = vec![Task::Steady];
        assert_eq!(run_experiment(&cfg, dir.path()).exit_code(), 1);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let cfg = fredkin(4, 1.5, 0.5);
        run_experiment(&cfg, a.path());
        run_experiment(&cfg, b.path());
        for f in ["sectors.csv", "ness_diag.csv", "gibbs_fit.csv", "qdbc.csv", "fcs.csv", "wdag.dot"] {
            let x = std::fs::read(a.path().join(f)).unwrap();
            let y = std::fs::read(b.path().join(f)).unwrap();
            assert_eq!(x, y, "{f}");
        }
    }

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(fmt_float(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_float(-3f64.ln()), "-1.0986122886681098e0");
    }
}
