//! Certified solves with instrumented operators, summaries and the
//! comparison table.

use std::fmt::Write as _;
use std::sync::Arc;

use anyhow::anyhow;
use nofob::diagnostics::{summary_json, trace_csv, verdict, VerdictTolerances};
use nofob::engine::certificate_horizon;
use nofob::methods::{build_preset, CompositeForm, Formulation, Instance, PrimalDualProblem};
use nofob::operators::{CountedLinear, CountedSetValued, CountedSingleValued, EvalCounter, EvalCounts};
use nofob::Error;
use serde_json::{json, Value};

use crate::config::Resolved;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Passed,
    CertificateFailed,
    Diverged,
    VerdictFailed,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Passed => 0,
            Status::CertificateFailed => 1,
            Status::Diverged => 2,
            Status::VerdictFailed => 4,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Passed => "passed",
            Status::CertificateFailed => "certificate_failed",
            Status::Diverged => "diverged",
            Status::VerdictFailed => "verdict_failed",
        }
    }
}

/// What an operator slot is counted by.
#[derive(Clone, Copy)]
enum Kind {
    Resolvent,
    Eval,
    Apply,
}

/// Counted operator slots of a formulation, in table order.
struct Counters {
    slots: Vec<(&'static str, Kind, Arc<EvalCounter>)>,
    /// Counts at the start of the solve; setup such as norm estimates is excluded.
    baseline: Vec<EvalCounts>,
}

/// Column labels of the per-iteration evaluation counts.
pub const COUNT_COLUMNS: [&str; 8] = ["B res", "D res", "D eval", "C eval", "E eval", "F eval", "V", "V*"];

impl Counters {
    fn new(slots: Vec<(&'static str, Kind, Arc<EvalCounter>)>) -> Self {
        Self {
            slots,
            baseline: Vec::new(),
        }
    }

    fn mark(&mut self) {
        self.baseline = self.slots.iter().map(|(_, _, c)| c.snapshot()).collect();
    }

    fn per_iteration(&self, iterations: usize) -> Vec<(&'static str, f64)> {
        let n = iterations.max(1) as f64;
        let mut out = Vec::new();
        for (i, (label, kind, counter)) in self.slots.iter().enumerate() {
            let c = counter.snapshot() - self.baseline.get(i).copied().unwrap_or_default();
            match kind {
                Kind::Resolvent => out.push((*label, c.resolvent as f64 / n)),
                Kind::Eval => out.push((*label, c.eval as f64 / n)),
                Kind::Apply => {
                    out.push(("V", c.apply as f64 / n));
                    out.push(("V*", c.adjoint as f64 / n));
                }
            }
        }
        out
    }
}

fn instrument(f: &Formulation<f64>) -> nofob::Result<(Formulation<f64>, Counters)> {
    let set = |op| {
        let c = CountedSetValued::new(op);
        let counter = c.counter();
        (Arc::new(c), counter)
    };
    let single = |op| {
        let c = CountedSingleValued::new(op);
        let counter = c.counter();
        (Arc::new(c), counter)
    };
    Ok(match f {
        Formulation::Composite(p) => {
            let (b, cb) = set(p.b.clone());
            let (d, cd) = single(p.d.clone());
            let (c, cc) = single(p.c.clone());
            let counters = Counters::new(vec![
                ("B res", Kind::Resolvent, cb),
                ("D eval", Kind::Eval, cd),
                ("C eval", Kind::Eval, cc),
            ]);
            (Formulation::Composite(CompositeForm::new(b, d, c, p.dim)?), counters)
        }
        Formulation::PrimalDual(p) => {
            let (b, cb) = set(p.b.clone());
            let (d, cd) = set(p.d.clone());
            let (e, ce) = single(p.e.clone());
            let (fo, cf) = single(p.f.clone());
            let v = CountedLinear::new(p.v.clone());
            let cv = v.counter();
            let counters = Counters::new(vec![
                ("B res", Kind::Resolvent, cb),
                ("D res", Kind::Resolvent, cd),
                ("E eval", Kind::Eval, ce),
                ("F eval", Kind::Eval, cf),
                ("V", Kind::Apply, cv),
            ]);
            let problem = PrimalDualProblem::new(b, d, e, fo, Arc::new(v))?;
            (Formulation::PrimalDual(problem), counters)
        }
    })
}

/// The configured view, or the first view the preset can be built on.
fn select_view(r: &Resolved) -> anyhow::Result<(String, Formulation<f64>, Instance<f64>, Counters)> {
    let doc = &r.document;
    let params = &r.config.method.params;
    let build = |name: &str| -> anyhow::Result<_> {
        let f = doc.view(name)?.build::<f64>()?;
        let (counted, mut counters) = instrument(&f)?;
        let inst = build_preset(r.preset.name, &counted, params)?;
        counters.mark();
        Ok((name.to_string(), counted, inst, counters))
    };
    if let Some(name) = &r.config.view {
        return build(name);
    }
    let mut last = None;
    for (name, view) in &doc.views {
        if view.build::<f64>()?.form() != r.preset.form {
            continue;
        }
        match build(name) {
            Ok(found) => return Ok(found),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| anyhow!("problem `{}` has no view suited to `{}`", doc.name, r.preset.name)))
}

pub struct Outcome {
    pub preset: &'static str,
    pub view: String,
    pub status: Status,
    pub summary: Value,
    /// Absent when the run was refused.
    pub trace_csv: Option<String>,
    pub iterations: usize,
    pub residual: Option<f64>,
    pub termination: String,
    pub counts: Vec<(&'static str, f64)>,
}

/// Builds and runs one configuration. Errors are configuration errors;
/// solver failures are reported through [`Outcome::status`].
pub fn execute(r: &Resolved) -> anyhow::Result<Outcome> {
    let (view, _, inst, counters) = match select_view(r) {
        Ok(found) => found,
        // steps too large for the metric to be strongly positive
        Err(e) if matches!(e.downcast_ref::<Error>(), Some(Error::NotPositiveDefinite(_))) => {
            return Ok(refused(r, &e))
        }
        Err(e) => return Err(e.context("building the method")),
    };
    let stopping = r.config.stopping_rule();
    let eps = r.config.epsilon();
    let horizon = certificate_horizon(inst.kernel.as_ref(), stopping.max_iter);
    let certificate = inst.certificate(horizon, eps);
    let corollary = inst.corollary.check(horizon, eps);
    let header = json!({
        "preset": r.preset.name,
        "problem": r.document.name,
        "view": view,
        "corollary": {
            "inequality": corollary.text,
            "passed": corollary.passed,
            "worst_slack": corollary.worst_slack,
            "worst_k": corollary.worst_k,
        },
    });

    let mut options = inst.options(stopping);
    options.epsilon = eps;
    options.enforce_certificate = r.config.enforce_certificate;
    options.oracle = r.document.view(&view)?.solution::<f64>().filter(|x| x.dim() == inst.dim());
    let failed = |status: Status, err: &Error| {
        let mut summary = header.clone();
        summary["status"] = json!(status.label());
        summary["error"] = json!(err.to_string());
        summary["certificate"] = json!({
            "passed": certificate.passed,
            "inequality": certificate.inequality(),
            "worst_margin": certificate.worst_margin,
            "worst_k": certificate.worst_k,
            "epsilon": certificate.epsilon,
            "enforced": options.enforce_certificate,
        });
        Outcome {
            preset: r.preset.name,
            view: view.clone(),
            status,
            summary,
            trace_csv: None,
            iterations: match err {
                Error::Divergence { iteration, .. } => *iteration,
                _ => 0,
            },
            residual: None,
            termination: status.label().to_string(),
            counts: Vec::new(),
        }
    };
    let trace = match inst.solve(inst.zero_start(), &options) {
        Ok(t) => t,
        Err(e @ Error::Certificate { .. }) => return Ok(failed(Status::CertificateFailed, &e)),
        Err(e @ (Error::Divergence { .. } | Error::NonFinite(_) | Error::Resolvent(_))) => {
            return Ok(failed(Status::Diverged, &e))
        }
        Err(e) => return Err(e.into()),
    };
    let v = verdict(&trace, &VerdictTolerances::default())?;
    let status = if v.passed() { Status::Passed } else { Status::VerdictFailed };
    let counts = counters.per_iteration(trace.iterations);
    let mut summary = summary_json(&trace, Some(&v));
    for (key, value) in header.as_object().into_iter().flatten() {
        summary[key] = value.clone();
    }
    summary["status"] = json!(status.label());
    summary["evaluations_per_iteration"] = counts.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    let termination = serde_json::to_value(trace.termination)?
        .as_str()
        .unwrap_or_default()
        .to_string();
    Ok(Outcome {
        preset: r.preset.name,
        view,
        status,
        summary,
        trace_csv: Some(trace_csv(&trace.records)),
        iterations: trace.iterations,
        residual: trace.records.last().map(|rec| rec.residual_norm),
        termination,
        counts,
    })
}

/// Outcome of a configuration whose steps admit no valid metric.
fn refused(r: &Resolved, err: &anyhow::Error) -> Outcome {
    let status = Status::CertificateFailed;
    let summary = json!({
        "preset": r.preset.name,
        "problem": r.document.name,
        "view": r.config.view,
        "status": status.label(),
        "error": err.to_string(),
        "certificate": {
            "passed": false,
            "inequality": r.preset.certificate(),
            "enforced": r.config.enforce_certificate,
        },
    });
    Outcome {
        preset: r.preset.name,
        view: r.config.view.clone().unwrap_or_else(|| "-".into()),
        status,
        summary,
        trace_csv: None,
        iterations: 0,
        residual: None,
        termination: status.label().to_string(),
        counts: Vec::new(),
    }
}

/// Fixed-width comparison table.
pub fn table(outcomes: &[Outcome]) -> String {
    let mut rows: Vec<Vec<String>> = vec![["preset", "view", "status", "iterations", "termination", "residual"]
        .iter()
        .map(|s| s.to_string())
        .chain(COUNT_COLUMNS.iter().map(|s| s.to_string()))
        .collect()];
    for o in outcomes {
        let mut row = vec![
            o.preset.to_string(),
            o.view.clone(),
            o.status.label().to_string(),
            o.iterations.to_string(),
            o.termination.clone(),
            o.residual.map(|r| format!("{r:.3e}")).unwrap_or_else(|| "-".into()),
        ];
        for col in COUNT_COLUMNS {
            let cell = o.counts.iter().find(|(k, _)| *k == col);
            row.push(cell.map(|(_, v)| format!("{v:.2}")).unwrap_or_else(|| "-".into()));
        }
        rows.push(row);
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let line: Vec<String> = row.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

/// The comparison table as CSV.
pub fn table_csv(outcomes: &[Outcome]) -> String {
    let mut out = String::from("preset,view,status,iterations,termination,residual");
    for col in COUNT_COLUMNS {
        out.push(',');
        out.push_str(col);
    }
    out.push('\n');
    for o in outcomes {
        let _ = write!(
            out,
            "{},{},{},{},{},{}",
            o.preset,
            o.view,
            o.status.label(),
            o.iterations,
            o.termination,
            o.residual.map(|r| format!("{r:e}")).unwrap_or_default()
        );
        for col in COUNT_COLUMNS {
            let cell = o.counts.iter().find(|(k, _)| *k == col);
            out.push(',');
            out.push_str(&cell.map(|(_, v)| v.to_string()).unwrap_or_default());
        }
        out.push('\n');
    }
    out
}
