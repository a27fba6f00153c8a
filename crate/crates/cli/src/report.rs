use std::path::Path;

use mbvp_core::analysis::{
    check_growth, estimate_delta, lambda1_estimate, select_case, GrowthCheck, GrowthConstants, GrowthRole,
    Inequality, SampleBox, LAMBDA1_MIN_INTERVALS,
};
use mbvp_core::boundary::BoundaryOperator;
use mbvp_core::matrices::{is_convergent_to_zero, ConvMatrix};
use mbvp_core::nonlinear::{Checklist, SolveReport, SystemProblem};
use serde::Serialize;

use crate::config::{ConfigDocument, ConfigError};
use crate::method_name;

#[derive(Debug, Clone, Serialize)]
pub struct Lambda1Out {
    pub value: f64,
    pub method: &'static str,
    #[serde(rename = "N")]
    pub intervals: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Lambda1Pair {
    pub gamma: Option<Lambda1Out>,
    pub eta: Option<Lambda1Out>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOut {
    pub pass: bool,
    pub worst_violation: f64,
    pub witness: Witness,
}

impl From<GrowthCheck> for CheckOut {
    fn from(c: GrowthCheck) -> Self {
        Self {
            pass: c.pass,
            worst_violation: c.worst_violation,
            witness: Witness { t: c.witness.t, x: c.witness.x, y: c.witness.y },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthOut {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub d: Option<f64>,
    pub delta: f64,
    /// `given` or `sampled`.
    pub delta_source: &'static str,
    pub first: Option<CheckOut>,
    pub second: Option<CheckOut>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixOut {
    pub spectral_radius: f64,
    pub convergent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertSummary {
    pub lambda1: Lambda1Pair,
    pub growth: Option<GrowthOut>,
    pub matrix: Option<MatrixOut>,
    pub case: &'static str,
    pub bound: Option<f64>,
    pub bound_squared: Option<[f64; 2]>,
    /// Growth inequalities are checked on samples only.
    pub certificate: &'static str,
}

pub struct Certification {
    /// Growth constants that passed their sampled checks.
    pub constants: Option<GrowthConstants>,
    pub summary: CertSummary,
}

fn lambda1_out(bop: &BoundaryOperator, t_end: f64, n: usize) -> Option<Lambda1Out> {
    lambda1_estimate(bop, t_end, n).ok().map(|e| Lambda1Out {
        value: e.value,
        method: method_name(e.method),
        intervals: e.grid_n,
    })
}

fn analysis_err(key: &str, e: impl ToString) -> ConfigError {
    ConfigError::Invalid { key: key.into(), message: e.to_string() }
}

pub fn certify(doc: &ConfigDocument, prob: &SystemProblem, sbox: &SampleBox) -> Result<Certification, ConfigError> {
    let n = doc.intervals.max(LAMBDA1_MIN_INTERVALS);
    let lambda1 = Lambda1Pair {
        gamma: lambda1_out(&prob.gamma, prob.t_end, n),
        eta: lambda1_out(&prob.eta, prob.t_end, n),
    };
    let dims = (prob.n, prob.m);
    let mut constants = None;
    let mut growth = None;
    let mut matrix = None;
    if let Some((mut gc, has_delta)) = doc.growth_partial() {
        if !has_delta {
            let mut delta = 0.0f64;
            if let Some(g) = gc.first {
                let d = estimate_delta(prob.f1.as_ref(), GrowthRole::First, g.a, g.b, dims, prob.t_end, sbox)
                    .map_err(|e| analysis_err("growth", e))?;
                delta = delta.max(d);
            }
            if let Some(g) = gc.second {
                let d = estimate_delta(prob.f2.as_ref(), GrowthRole::Second, g.d, g.c, dims, prob.t_end, sbox)
                    .map_err(|e| analysis_err("growth", e))?;
                delta = delta.max(d);
            }
            gc.delta = delta;
        }
        gc.validate().map_err(|e| analysis_err("growth", e))?;
        let first = match gc.first {
            Some(g) => {
                let ineq = Inequality { own: g.a, cross: g.b, delta: gc.delta };
                Some(check_growth(prob.f1.as_ref(), GrowthRole::First, &ineq, dims, prob.t_end, sbox))
            }
            None => None,
        }
        .transpose()
        .map_err(|e| analysis_err("growth", e))?;
        let second = match gc.second {
            Some(g) => {
                let ineq = Inequality { own: g.d, cross: g.c, delta: gc.delta };
                Some(check_growth(prob.f2.as_ref(), GrowthRole::Second, &ineq, dims, prob.t_end, sbox))
            }
            None => None,
        }
        .transpose()
        .map_err(|e| analysis_err("growth", e))?;
        let pass = first.as_ref().is_none_or(|c| c.pass) && second.as_ref().is_none_or(|c| c.pass);
        if pass {
            constants = Some(gc);
        }
        if let Some(m) = gc.matrix() {
            if let Ok(cm) = ConvMatrix::new(m) {
                let (convergent, spectral_radius) = is_convergent_to_zero(&cm);
                matrix = Some(MatrixOut { spectral_radius, convergent });
            }
        }
        growth = Some(GrowthOut {
            a: gc.first.map(|g| g.a),
            b: gc.first.map(|g| g.b),
            c: gc.second.map(|g| g.c),
            d: gc.second.map(|g| g.d),
            delta: gc.delta,
            delta_source: if has_delta { "given" } else { "sampled" },
            first: first.map(CheckOut::from),
            second: second.map(CheckOut::from),
            pass,
        });
    }
    let value = |l: &Option<Lambda1Out>| l.as_ref().map_or(0.0, |l| l.value);
    let sel = select_case(value(&lambda1.gamma), value(&lambda1.eta), constants.as_ref(), prob.t_end);
    Ok(Certification {
        constants,
        summary: CertSummary {
            lambda1,
            growth,
            matrix,
            case: sel.case.name(),
            bound: sel.bound,
            bound_squared: sel.squared,
            certificate: "sampled",
        },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProblemOut {
    #[serde(rename = "T")]
    pub t_end: f64,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "N")]
    pub intervals: usize,
    pub gamma: String,
    pub eta: String,
    pub seed: u64,
}

impl ProblemOut {
    fn new(doc: &ConfigDocument, sbox: &SampleBox) -> Self {
        Self {
            t_end: doc.t_end,
            n: doc.n,
            m: doc.m,
            intervals: doc.intervals,
            gamma: doc.gamma.kind.clone(),
            eta: doc.eta.kind.clone(),
            seed: sbox.seed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NormsOut {
    pub u_h1: f64,
    pub v_h1: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageOut {
    pub homotopy: f64,
    pub u_h1_sq: f64,
    pub v_h1_sq: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub command: &'static str,
    pub problem: ProblemOut,
    pub status: &'static str,
    pub strategy: &'static str,
    pub iterations: usize,
    pub ode_res: f64,
    pub bc_res: f64,
    pub max_velocity: f64,
    pub norms: NormsOut,
    pub stages: Vec<StageOut>,
    pub residual_ok: bool,
    pub velocity_ok: bool,
    pub bound_ok: bool,
    pub case: &'static str,
    pub bound: Option<f64>,
    pub certification: CertSummary,
}

impl SolveSummary {
    pub fn new(
        doc: &ConfigDocument,
        sbox: &SampleBox,
        rep: &SolveReport,
        check: &Checklist,
        certification: CertSummary,
    ) -> Self {
        Self {
            command: "solve",
            problem: ProblemOut::new(doc, sbox),
            status: "converged",
            strategy: rep.strategy.name(),
            iterations: rep.iterations,
            ode_res: rep.ode_res,
            bc_res: rep.bc_res,
            max_velocity: rep.max_velocity,
            norms: NormsOut { u_h1: rep.norms.u_h1, v_h1: rep.norms.v_h1, total: rep.norms.total },
            stages: rep
                .stages
                .iter()
                .map(|s| StageOut { homotopy: s.homotopy, u_h1_sq: s.u_h1_sq, v_h1_sq: s.v_h1_sq })
                .collect(),
            residual_ok: check.residual_ok,
            velocity_ok: check.velocity_ok,
            bound_ok: check.bound_ok,
            case: check.case.name(),
            bound: check.bound,
            certification,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckSummary {
    pub command: &'static str,
    pub problem: ProblemOut,
    pub certification: CertSummary,
}

impl CheckSummary {
    pub fn new(doc: &ConfigDocument, sbox: &SampleBox, certification: CertSummary) -> Self {
        Self { command: "check", problem: ProblemOut::new(doc, sbox), certification }
    }
}

/// Shortest round-trip decimal, switching to exponent form for very small
/// or very large magnitudes.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-4..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

/// Columns `t, u1..un, v1..vm, du1..dun, dv1..dvm`; `du` is the velocity
/// recovered from the flux.
pub fn write_solution_csv(path: &Path, rep: &SolveReport) -> Result<(), csv::Error> {
    let (n, m) = (rep.state.u.q(), rep.state.v.q());
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|k| format!("u{k}")));
    header.extend((1..=m).map(|k| format!("v{k}")));
    header.extend((1..=n).map(|k| format!("du{k}")));
    header.extend((1..=m).map(|k| format!("dv{k}")));
    w.write_record(&header)?;
    for i in 0..rep.grid.len() {
        let mut row = vec![fmt_num(rep.grid.node(i))];
        row.extend(rep.state.u.u_at(i).iter().map(|v| fmt_num(*v)));
        row.extend(rep.state.v.u_at(i).iter().map(|v| fmt_num(*v)));
        row.extend(rep.state.u.velocity_at(i).iter().map(|v| fmt_num(*v)));
        row.extend(rep.state.v.velocity_at(i).iter().map(|v| fmt_num(*v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub intervals: usize,
    pub step: f64,
    pub error_u: f64,
    pub error_v: f64,
    pub error: f64,
    /// Observed order against the previous level.
    pub order: Option<f64>,
}

/// Nodal maximum distance of each level to the reference solution.
pub fn study_rows(levels: &[usize], solved: &[SolveReport], reference: &SolveReport) -> Vec<StudyRow> {
    let mut rows: Vec<StudyRow> = Vec::with_capacity(levels.len());
    for (&n, rep) in levels.iter().zip(solved) {
        let stride = reference.grid.intervals() / n;
        let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        let (mut eu, mut ev) = (0.0f64, 0.0f64);
        for i in 0..rep.grid.len() {
            let j = i * stride;
            eu = eu.max(dist(rep.state.u.u_at(i), reference.state.u.u_at(j)));
            ev = ev.max(dist(rep.state.v.u_at(i), reference.state.v.u_at(j)));
        }
        let error = eu.max(ev);
        let order = rows.last().filter(|p| p.error > 0.0 && error > 0.0).map(|p| {
            (p.error / error).ln() / (n as f64 / p.intervals as f64).ln()
        });
        rows.push(StudyRow { intervals: n, step: rep.grid.step(), error_u: eu, error_v: ev, error, order });
    }
    rows
}

pub fn write_study_csv(path: &Path, rows: &[StudyRow]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["N", "h", "error_u", "error_v", "error", "order"])?;
    for r in rows {
        w.write_record([
            r.intervals.to_string(),
            fmt_num(r.step),
            fmt_num(r.error_u),
            fmt_num(r.error_v),
            fmt_num(r.error),
            r.order.map(fmt_num).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
