//! Full analysis of a framework and its JSON report.

use std::time::Instant;

use serde_json::{json, Map, Value};

use crate::firstorder::{
    certify_flex, certify_strong_witness, is_infinitesimally_rigid, pin, power_operator,
    rigidity_operator, stress_space, strong_flex_search, FirstOrderError, StrongVerdict,
};
use crate::model::{AnyFramework, Classification, Framework};
use crate::norms::{NormKind, ACTIVE_TOL};
use crate::numeric::{Mode, Scalar, DEFAULT_RANK_TOL};
use crate::secondorder::{
    analyze, certify_second_order_witness, gradient_stress, Decision, SecondOrderAnalysis,
    SecondOrderError, PD_TOL, RESIDUAL_TOL,
};

pub const PRODUCT_MODEL_NOTE: &str = "generalized rigidity operators are taken from the product of per-edge \
norm subdifferentials; a strongly rigid verdict holds for every generalized operator, a strongly flexible \
verdict is relative to this product set";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    /// Relative rank tolerance for float mode.
    pub tol: f64,
    pub seed: u64,
    pub timing: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            tol: DEFAULT_RANK_TOL,
            seed: 0,
            timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReportError {
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("internal consistency violation: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    FirstOrder(FirstOrderError),
    #[error(transparent)]
    SecondOrder(#[from] SecondOrderError),
}

impl From<FirstOrderError> for ReportError {
    fn from(e: FirstOrderError) -> Self {
        match e {
            FirstOrderError::Unsupported(m) => ReportError::Unsupported(m),
            FirstOrderError::TooManyAssignments(_) => ReportError::Unsupported(e.to_string()),
            other => ReportError::FirstOrder(other),
        }
    }
}

/// A verdict that may be undecided or not defined for the framework.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No,
    Undetermined,
    NotApplicable,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Yes
        } else {
            Verdict::No
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Verdict::Yes => Some(true),
            Verdict::No => Some(false),
            _ => None,
        }
    }

    pub fn to_json(self) -> Value {
        match self {
            Verdict::Yes => Value::Bool(true),
            Verdict::No => Value::Bool(false),
            Verdict::Undetermined => "undetermined".into(),
            Verdict::NotApplicable => "n/a".into(),
        }
    }
}

impl From<Decision> for Verdict {
    fn from(d: Decision) -> Self {
        match d {
            Decision::Yes => Verdict::Yes,
            Decision::No => Verdict::No,
            Decision::Undetermined => Verdict::Undetermined,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub mode: Mode,
    pub classification: Classification,
    pub infinitesimally_rigid: bool,
    pub strongly_infinitesimally_rigid: Verdict,
    pub prestress_stable: Verdict,
    pub second_order_rigid: Verdict,
    pub locally_rigid_implied: bool,
    pub continuously_rigid_implied: bool,
    pub implication_reason: Option<&'static str>,
    pub flex_dim: usize,
    pub trivial_dim: usize,
    pub stress_dim: Option<usize>,
    pub rank: usize,
    pub edge_count_bound: bool,
    /// Everything else, already rendered.
    pub sections: Map<String, Value>,
    pub options: AnalysisOptions,
    pub elapsed_ms: Option<f64>,
}

fn vertex_map<T: Scalar>(fw: &Framework<T>, u: &[T]) -> Value {
    let d = fw.dim();
    let mut m = Map::new();
    for (i, name) in fw.graph().vertex_names().iter().enumerate() {
        m.insert(
            name.clone(),
            Value::Array(u[i * d..(i + 1) * d].iter().map(Scalar::to_json).collect()),
        );
    }
    Value::Object(m)
}

fn edge_map<T: Scalar>(fw: &Framework<T>, a: &[T]) -> Value {
    let mut m = Map::new();
    for (e, x) in a.iter().enumerate() {
        m.insert(fw.graph().edge_label(e), x.to_json());
    }
    Value::Object(m)
}

/// Flex to draw: the pinned sum of the nontrivial flex basis, or the strong
/// witness when the framework is infinitesimally rigid but strongly flexible.
pub fn display_flex<T: Scalar>(fw: &Framework<T>, tol: f64) -> Option<Vec<f64>> {
    let inf = is_infinitesimally_rigid(fw, tol);
    if inf.nontrivial.dim() > 0 {
        let mut sum = vec![T::zero(); fw.coord_count()];
        for v in inf.nontrivial.vectors() {
            for (s, x) in sum.iter_mut().zip(v) {
                *s = s.clone() + x;
            }
        }
        let pinned = pin(&inf.trivial, &sum, tol);
        return Some(pinned.iter().map(Scalar::to_f64).collect());
    }
    let strong = strong_flex_search(fw, tol).ok()?;
    strong
        .witness
        .map(|w| w.u.iter().map(Scalar::to_f64).collect())
}

fn strong_witness_json<T: Scalar>(
    fw: &Framework<T>,
    v: &StrongVerdict<T>,
    tol: f64,
) -> (Value, Value) {
    let Some(w) = &v.witness else {
        return (Value::Null, Value::Null);
    };
    let functionals = fw.norm().functionals();
    let active = |e: usize| match &fw.geometry()[e] {
        crate::norms::EdgeGeometry::PolyhedralActive { active, .. } => active.clone(),
        _ => Vec::new(),
    };
    let assignment: Vec<Value> = w
        .assignment
        .iter()
        .map(|c| {
            let act = active(c.edge);
            json!({
                "edge": fw.graph().edge_label(c.edge),
                "minus": crate::model::json::vector_json(&functionals[act[c.minus]]),
                "plus": crate::model::json::vector_json(&functionals[act[c.plus]]),
            })
        })
        .collect();
    let mut weights = Map::new();
    for (e, ws) in &w.weights {
        let act = active(*e);
        let entries: Vec<Value> = act
            .iter()
            .zip(ws)
            .map(|(&k, x)| {
                json!({
                    "functional": crate::model::json::vector_json(&functionals[k]),
                    "weight": x.to_json(),
                })
            })
            .collect();
        weights.insert(fw.graph().edge_label(*e), Value::Array(entries));
    }
    let witness = json!({
        "u": vertex_map(fw, &w.u),
        "assignment": assignment,
        "weights": weights,
    });
    (witness, Value::Bool(certify_strong_witness(fw, &w.u, tol)))
}

struct SecondOrderPart {
    prestress: Verdict,
    second_order: Verdict,
    witnesses: Map<String, Value>,
    certificates: Map<String, Value>,
    methods: Map<String, Value>,
}

fn second_order_part<T: Scalar>(
    fw: &Framework<T>,
    cls: &Classification,
    infinitesimally_rigid: bool,
    float: Option<&Framework<f64>>,
    opts: &AnalysisOptions,
) -> Result<SecondOrderPart, ReportError> {
    let mut part = SecondOrderPart {
        prestress: Verdict::NotApplicable,
        second_order: Verdict::NotApplicable,
        witnesses: Map::new(),
        certificates: Map::new(),
        methods: Map::new(),
    };
    part.witnesses
        .insert("prestress_stress".into(), Value::Null);
    part.witnesses
        .insert("second_order_flex".into(), Value::Null);
    if !cls.second_order_well_positioned {
        let why = "not second-order well-positioned";
        part.methods.insert("prestress".into(), why.into());
        part.methods.insert("second_order".into(), why.into());
        return Ok(part);
    }
    if fw.norm().is_polyhedral() {
        // Edge Hessians vanish: every stress form is zero, so both properties
        // coincide with infinitesimal rigidity.
        let v = Verdict::from_bool(infinitesimally_rigid);
        part.prestress = v;
        part.second_order = v;
        let why = "polyhedral norm: edge Hessians vanish, reduces to infinitesimal rigidity";
        part.methods.insert("prestress".into(), why.into());
        part.methods.insert("second_order".into(), why.into());
        return Ok(part);
    }
    let fw = float.expect("smooth norms run in float mode");
    let SecondOrderAnalysis {
        forms,
        prestress,
        second_order,
    } = analyze(fw, opts.tol, opts.seed)?;
    part.prestress = prestress.decision.into();
    part.second_order = second_order.decision.into();
    part.methods
        .insert("prestress".into(), prestress.method.into());
    part.methods
        .insert("second_order".into(), second_order.method.into());
    part.methods.insert(
        "forms".into(),
        json!({
            "flex_dim": forms.flex_dim(),
            "stress_dim": forms.stress_dim(),
            "threshold": forms.threshold(),
            "min_eigenvalue": prestress.min_eigenvalue,
        }),
    );
    if let Some(a) = &prestress.stress {
        let grad = gradient_stress(fw, a)?;
        part.witnesses.insert(
            "prestress_stress".into(),
            json!({
                "power": edge_map(fw, a),
                "gradient": edge_map(fw, &grad),
            }),
        );
        part.certificates.insert(
            "prestress_stress_residual".into(),
            stress_residual(fw, a).into(),
        );
    }
    if let Some(w) = &second_order.witness {
        part.witnesses.insert(
            "second_order_flex".into(),
            json!({ "u": vertex_map(fw, &w.u), "u_prime": vertex_map(fw, &w.u_prime) }),
        );
        part.certificates.insert(
            "second_order_flex".into(),
            certify_second_order_witness(fw, w, RESIDUAL_TOL).into(),
        );
    }
    Ok(part)
}

/// `|R_p^T a|_inf` for a power stress.
fn stress_residual(fw: &Framework<f64>, a: &[f64]) -> f64 {
    match power_operator(fw) {
        Some(r) => r
            .transpose()
            .mul_vec(a)
            .expect("edge count")
            .iter()
            .fold(0.0, |m, x| m.max(x.abs())),
        None => f64::NAN,
    }
}

fn analyze_typed<T: Scalar>(
    fw: &Framework<T>,
    float: Option<&Framework<f64>>,
    opts: &AnalysisOptions,
) -> Result<AnalysisReport, ReportError> {
    let start = opts.timing.then(Instant::now);
    let tol = opts.tol;
    let cls = fw.classify();
    let inf = is_infinitesimally_rigid(fw, tol);
    let strong = strong_flex_search(fw, tol)?;
    let stresses = stress_space(fw, tol);
    let sop = second_order_part(fw, &cls, inf.rigid, float, opts)?;

    let mut witnesses = Map::new();
    let mut certificates = Map::new();
    let flex = inf.witness.as_ref().map(|u| pin(&inf.trivial, u, tol));
    match &flex {
        Some(u) => {
            witnesses.insert("infinitesimal_flex".into(), vertex_map(fw, u));
            certificates.insert("infinitesimal_flex".into(), certify_flex(fw, u, tol).into());
        }
        None => {
            witnesses.insert("infinitesimal_flex".into(), Value::Null);
        }
    }
    let (sw, sc) = strong_witness_json(fw, &strong, tol);
    witnesses.insert("strong_flex".into(), sw);
    if !sc.is_null() {
        certificates.insert("strong_flex".into(), sc);
    }
    witnesses.extend(sop.witnesses);
    certificates.extend(sop.certificates);
    certificates.insert("edge_count_bound".into(), strong.edge_count_bound.into());
    certificates.insert(
        "strong_assignments_checked".into(),
        strong.assignments_checked.into(),
    );

    let stress_json = match &stresses {
        Some(s) => {
            let mut m = Map::new();
            m.insert(
                "gradient".into(),
                Value::Array(s.basis.vectors().iter().map(|a| edge_map(fw, a)).collect()),
            );
            if let Some(pb) = &s.power_basis {
                m.insert(
                    "power".into(),
                    Value::Array(pb.vectors().iter().map(|a| edge_map(fw, a)).collect()),
                );
            }
            Value::Object(m)
        }
        None => Value::Null,
    };

    let strongly = Verdict::from_bool(strong.strongly_rigid);
    let (local, reason) = if strong.strongly_rigid {
        (
            true,
            Some("strongly infinitesimally rigid frameworks are locally rigid"),
        )
    } else if sop.prestress == Verdict::Yes {
        (true, Some("prestress stable frameworks are locally rigid"))
    } else {
        (false, None)
    };

    let mut sections = Map::new();
    sections.insert("witnesses".into(), Value::Object(witnesses));
    sections.insert("certificates".into(), Value::Object(certificates));
    sections.insert("stresses".into(), stress_json);
    sections.insert("methods".into(), Value::Object(sop.methods));

    let report = AnalysisReport {
        mode: T::MODE,
        classification: cls,
        infinitesimally_rigid: inf.rigid,
        strongly_infinitesimally_rigid: strongly,
        prestress_stable: sop.prestress,
        second_order_rigid: sop.second_order,
        locally_rigid_implied: local,
        continuously_rigid_implied: local,
        implication_reason: reason,
        flex_dim: inf.flex_dim,
        trivial_dim: inf.trivial_dim,
        stress_dim: stresses.as_ref().map(|s| s.basis.dim()),
        rank: rigidity_operator(fw).map_or(inf.rank, |r| crate::numeric::rank(&r, tol)),
        edge_count_bound: strong.edge_count_bound,
        sections,
        options: *opts,
        elapsed_ms: start.map(|s| s.elapsed().as_secs_f64() * 1e3),
    };
    report.validate()?;
    Ok(report)
}

/// Runs every analysis applicable to `fw`.
pub fn analyze_framework(
    fw: &AnyFramework,
    opts: &AnalysisOptions,
) -> Result<AnalysisReport, ReportError> {
    let mut report = match fw {
        AnyFramework::Exact(f) => analyze_typed(f, None, opts)?,
        AnyFramework::Float(f) => analyze_typed(f, Some(f), opts)?,
    };
    let (names, kind) = match fw {
        AnyFramework::Exact(f) => (edge_names(f), norm_json(f)),
        AnyFramework::Float(f) => (edge_names(f), norm_json(f)),
    };
    report.sections.insert("edges".into(), names);
    report.sections.insert("norm".into(), kind);
    Ok(report)
}

fn edge_names<T: Scalar>(fw: &Framework<T>) -> Value {
    Value::Array(
        (0..fw.graph().edge_count())
            .map(|e| fw.graph().edge_label(e).into())
            .collect(),
    )
}

fn norm_json<T: Scalar>(fw: &Framework<T>) -> Value {
    match fw.norm().kind() {
        NormKind::Euclidean => json!({"kind": "euclidean", "dim": fw.dim()}),
        NormKind::Lp(p) => json!({"kind": "lp", "dim": fw.dim(), "p": p}),
        NormKind::Polyhedral(f) => {
            json!({"kind": "polyhedral", "dim": fw.dim(), "functionals": f.len()})
        }
    }
}

impl AnalysisReport {
    /// Checks the implication diagram wherever both sides are decided.
    pub fn validate(&self) -> Result<(), ReportError> {
        let bad = |m: &str| Err(ReportError::Inconsistent(m.to_string()));
        let strong = self.strongly_infinitesimally_rigid.as_bool();
        if strong == Some(true) && !self.infinitesimally_rigid {
            return bad("strongly rigid but infinitesimally flexible");
        }
        if self.classification.well_positioned
            && strong.is_some_and(|s| s != self.infinitesimally_rigid)
        {
            return bad("well-positioned but strong and infinitesimal verdicts differ");
        }
        if self.classification.second_order_well_positioned {
            let pre = self.prestress_stable.as_bool();
            let sec = self.second_order_rigid.as_bool();
            if self.infinitesimally_rigid && pre == Some(false) {
                return bad("infinitesimally rigid but not prestress stable");
            }
            if pre == Some(true) && sec == Some(false) {
                return bad("prestress stable but not second-order rigid");
            }
        }
        if self.locally_rigid_implied
            && strong != Some(true)
            && self.prestress_stable != Verdict::Yes
        {
            return bad("local rigidity implied without a sufficient condition");
        }
        if self.continuously_rigid_implied && !self.locally_rigid_implied {
            return bad("continuous rigidity implied without local rigidity");
        }
        Ok(())
    }

    pub fn to_json(&self, edge_label: impl Fn(usize) -> String) -> Value {
        let mut root = Map::new();
        root.insert(
            "classification".into(),
            json!({
                "well_positioned": self.classification.well_positioned,
                "second_order_well_positioned": self.classification.second_order_well_positioned,
                "badly_positioned_edges": self.classification.badly_positioned_edges.iter()
                    .map(|&e| edge_label(e)).collect::<Vec<_>>(),
            }),
        );
        root.insert(
            "verdicts".into(),
            json!({
                "infinitesimally_rigid": self.infinitesimally_rigid,
                "strongly_infinitesimally_rigid": self.strongly_infinitesimally_rigid.to_json(),
                "prestress_stable": self.prestress_stable.to_json(),
                "second_order_rigid": self.second_order_rigid.to_json(),
            }),
        );
        root.insert(
            "implications".into(),
            json!({
                "locally_rigid_implied": self.locally_rigid_implied,
                "continuously_rigid_implied": self.continuously_rigid_implied,
                "reason": self.implication_reason.map(|r| {
                    format!("{r}; locally rigid frameworks are continuously rigid")
                }),
            }),
        );
        root.insert(
            "dimensions".into(),
            json!({
                "flex": self.flex_dim,
                "trivial": self.trivial_dim,
                "stress": self.stress_dim,
                "rank": self.rank,
            }),
        );
        for key in [
            "norm",
            "edges",
            "witnesses",
            "certificates",
            "stresses",
            "methods",
        ] {
            if let Some(v) = self.sections.get(key) {
                root.insert(key.into(), v.clone());
            }
        }
        root.insert("model".into(), PRODUCT_MODEL_NOTE.into());
        root.insert(
            "mode".into(),
            match self.mode {
                Mode::Exact => "exact",
                Mode::Float => "float",
            }
            .into(),
        );
        root.insert(
            "tolerances".into(),
            json!({
                "rank": self.options.tol,
                "active": ACTIVE_TOL,
                "pd": PD_TOL,
                "residual": RESIDUAL_TOL,
            }),
        );
        root.insert("seed".into(), self.options.seed.into());
        if let Some(ms) = self.elapsed_ms {
            root.insert("timing".into(), json!({ "total_ms": ms }));
        }
        Value::Object(root)
    }
}

/// Analysis plus serialization.
pub fn report_json(fw: &AnyFramework, opts: &AnalysisOptions) -> Result<Value, ReportError> {
    let report = analyze_framework(fw, opts)?;
    let g = fw.graph();
    Ok(report.to_json(|e| g.edge_label(e)))
}

pub fn serialize_report(report: &Value) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report values are finite or null");
    s.push('\n');
    s
}
