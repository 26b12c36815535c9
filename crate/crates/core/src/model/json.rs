//! Framework documents.
//!
//! ```json
//! { "norm": {"kind": "polyhedral", "dim": 2, "functionals": [[1, 0], [0, 1]]},
//!   "vertices": ["a", "b"], "edges": [["a", "b"]],
//!   "placement": {"a": [0, 0], "b": [1, "1/2"]} }
//! ```
//!
//! Coordinates and functional entries are JSON numbers or rational strings.
//! Numbers are read exactly from their decimal spelling, so `0.9` is `9/10`
//! in exact mode.

use serde_json::{Map, Value};

use super::{AnyFramework, Framework, Graph, ModelError};
use crate::norms::{NormError, NormKind, NormSpec};
use crate::numeric::{parse_rational, Mode, Rational, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl SchemaError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        SchemaError {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LoadError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModeRequest {
    /// Exact for polyhedral norms, float otherwise.
    #[default]
    Auto,
    Exact,
    Float,
}

/// A coordinate as read: exact value plus the double nearest to the literal.
#[derive(Debug, Clone, PartialEq)]
pub struct Number {
    pub exact: Rational,
    pub float: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DocumentNorm {
    Euclidean,
    Lp(f64),
    Polyhedral,
}

/// A validated document, not yet committed to a scalar mode.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameworkDocument {
    pub norm: DocumentNorm,
    pub dim: usize,
    pub functionals: Vec<Vec<Number>>,
    pub vertices: Vec<String>,
    pub edges: Vec<(String, String)>,
    /// Coordinates in vertex order.
    pub placement: Vec<Vec<Number>>,
}

pub fn parse_document(text: &str) -> Result<FrameworkDocument, LoadError> {
    let root: Value = serde_json::from_str(text).map_err(|e| LoadError::Json(e.to_string()))?;
    Ok(document_from_value(&root)?)
}

pub fn document_from_value(root: &Value) -> Result<FrameworkDocument, SchemaError> {
    let root = object(root, "$")?;
    let norm = object(field(root, "$", "norm")?, "$.norm")?;
    let kind = field(norm, "$.norm", "kind")?
        .as_str()
        .ok_or_else(|| SchemaError::new("$.norm.kind", "expected a string"))?;
    let dim = field(norm, "$.norm", "dim")?
        .as_u64()
        .filter(|&d| d > 0)
        .ok_or_else(|| SchemaError::new("$.norm.dim", "expected a positive integer"))?
        as usize;

    let mut functionals = Vec::new();
    let doc_norm = match kind {
        "euclidean" => DocumentNorm::Euclidean,
        "lp" => {
            let p = field(norm, "$.norm", "p")?
                .as_f64()
                .ok_or_else(|| SchemaError::new("$.norm.p", "expected a number"))?;
            if !(p.is_finite() && p > 1.0) {
                return Err(SchemaError::new(
                    "$.norm.p",
                    format!("p must be finite and > 1, got {p}"),
                ));
            }
            DocumentNorm::Lp(p)
        }
        "polyhedral" => {
            let fs = array(field(norm, "$.norm", "functionals")?, "$.norm.functionals")?;
            for (i, f) in fs.iter().enumerate() {
                let path = format!("$.norm.functionals[{i}]");
                functionals.push(number_vector(f, &path, dim)?);
            }
            DocumentNorm::Polyhedral
        }
        other => {
            return Err(SchemaError::new(
                "$.norm.kind",
                format!(
                "unknown norm kind {other:?} (expected \"lp\", \"euclidean\" or \"polyhedral\")"
            ),
            ))
        }
    };

    let vertices: Vec<String> = array(field(root, "$", "vertices")?, "$.vertices")?
        .iter()
        .enumerate()
        .map(|(i, v)| {
            v.as_str()
                .map(str::to_string)
                .ok_or_else(|| SchemaError::new(format!("$.vertices[{i}]"), "expected a string"))
        })
        .collect::<Result<_, _>>()?;

    let mut edges = Vec::new();
    for (i, e) in array(field(root, "$", "edges")?, "$.edges")?
        .iter()
        .enumerate()
    {
        let path = format!("$.edges[{i}]");
        let pair = array(e, &path)?;
        if pair.len() != 2 {
            return Err(SchemaError::new(path, "expected a pair of vertex names"));
        }
        let name = |k: usize| {
            pair[k]
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| SchemaError::new(format!("{path}[{k}]"), "expected a string"))
        };
        edges.push((name(0)?, name(1)?));
    }

    let placement_obj = object(field(root, "$", "placement")?, "$.placement")?;
    for key in placement_obj.keys() {
        if !vertices.contains(key) {
            return Err(SchemaError::new(
                format!("$.placement.{key}"),
                "coordinates for an undeclared vertex",
            ));
        }
    }
    let mut placement = Vec::with_capacity(vertices.len());
    for v in &vertices {
        let path = format!("$.placement.{v}");
        let value = placement_obj
            .get(v)
            .ok_or_else(|| SchemaError::new(&path, "missing coordinates"))?;
        placement.push(number_vector(value, &path, dim)?);
    }

    let doc = FrameworkDocument {
        norm: doc_norm,
        dim,
        functionals,
        vertices,
        edges,
        placement,
    };
    // Graph-level validation does not depend on the mode.
    Graph::new(&doc.vertices, &doc.edges).map_err(|e| model_error_path(&e))?;
    Ok(doc)
}

impl FrameworkDocument {
    pub fn auto_mode(&self) -> Mode {
        match self.norm {
            DocumentNorm::Polyhedral => Mode::Exact,
            _ => Mode::Float,
        }
    }

    pub fn build(&self, request: ModeRequest) -> Result<AnyFramework, LoadError> {
        let mode = match request {
            ModeRequest::Auto => self.auto_mode(),
            ModeRequest::Float => Mode::Float,
            ModeRequest::Exact => {
                if self.norm != DocumentNorm::Polyhedral {
                    return Err(LoadError::Unsupported(
                        "exact mode requires a polyhedral norm; l_p and Euclidean analyses run in float mode"
                            .into(),
                    ));
                }
                Mode::Exact
            }
        };
        Ok(match mode {
            Mode::Exact => AnyFramework::Exact(self.build_with(|n| n.exact.clone())?),
            Mode::Float => AnyFramework::Float(self.build_with(|n| n.float)?),
        })
    }

    fn build_with<T: Scalar>(
        &self,
        pick: impl Fn(&Number) -> T,
    ) -> Result<Framework<T>, SchemaError> {
        let norm = match self.norm {
            DocumentNorm::Euclidean => NormSpec::euclidean(self.dim),
            DocumentNorm::Lp(p) => NormSpec::lp(self.dim, p),
            DocumentNorm::Polyhedral => NormSpec::polyhedral(
                self.dim,
                self.functionals
                    .iter()
                    .map(|f| f.iter().map(&pick).collect())
                    .collect(),
            ),
        }
        .map_err(|e| norm_error_path(&e))?;
        let graph = Graph::new(&self.vertices, &self.edges).map_err(|e| model_error_path(&e))?;
        let placement = self
            .placement
            .iter()
            .map(|p| p.iter().map(&pick).collect())
            .collect();
        Framework::new(graph, placement, norm).map_err(|e| model_error_path(&e))
    }
}

pub fn parse_framework(text: &str, request: ModeRequest) -> Result<AnyFramework, LoadError> {
    parse_document(text)?.build(request)
}

/// Serializes in the document schema; `parse_framework` inverts it.
pub fn framework_to_json<T: Scalar>(fw: &Framework<T>) -> Value {
    let norm = fw.norm();
    let mut n = Map::new();
    match norm.kind() {
        NormKind::Euclidean => {
            n.insert("kind".into(), "euclidean".into());
            n.insert("dim".into(), norm.dim().into());
        }
        NormKind::Lp(p) => {
            n.insert("kind".into(), "lp".into());
            n.insert("dim".into(), norm.dim().into());
            n.insert("p".into(), p.to_json());
        }
        NormKind::Polyhedral(_) => {
            n.insert("kind".into(), "polyhedral".into());
            n.insert("dim".into(), norm.dim().into());
            n.insert(
                "functionals".into(),
                Value::Array(
                    norm.supplied_functionals()
                        .iter()
                        .map(|f| vector_json(f))
                        .collect(),
                ),
            );
        }
    }
    let g = fw.graph();
    let mut placement = Map::new();
    for (name, p) in g.vertex_names().iter().zip(fw.placement()) {
        placement.insert(name.clone(), vector_json(p));
    }
    let edges: Vec<Value> = (0..g.edge_count())
        .map(|e| {
            let (v, w) = g.edge_names(e);
            Value::Array(vec![v.into(), w.into()])
        })
        .collect();
    let mut root = Map::new();
    root.insert("norm".into(), Value::Object(n));
    root.insert(
        "vertices".into(),
        Value::Array(
            g.vertex_names()
                .iter()
                .map(|v| Value::from(v.as_str()))
                .collect(),
        ),
    );
    root.insert("edges".into(), Value::Array(edges));
    root.insert("placement".into(), Value::Object(placement));
    Value::Object(root)
}

pub fn any_framework_to_json(fw: &AnyFramework) -> Value {
    match fw {
        AnyFramework::Exact(f) => framework_to_json(f),
        AnyFramework::Float(f) => framework_to_json(f),
    }
}

pub fn vector_json<T: Scalar>(v: &[T]) -> Value {
    Value::Array(v.iter().map(Scalar::to_json).collect())
}

fn field<'a>(obj: &'a Map<String, Value>, path: &str, key: &str) -> Result<&'a Value, SchemaError> {
    obj.get(key)
        .ok_or_else(|| SchemaError::new(format!("{path}.{key}"), "missing field"))
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, SchemaError> {
    v.as_object()
        .ok_or_else(|| SchemaError::new(path, "expected an object"))
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, SchemaError> {
    v.as_array()
        .ok_or_else(|| SchemaError::new(path, "expected an array"))
}

fn number(v: &Value, path: &str) -> Result<Number, SchemaError> {
    match v {
        Value::Number(n) => {
            let text = n.to_string();
            let exact = parse_rational(&text).map_err(|e| SchemaError::new(path, e.to_string()))?;
            let float = n
                .as_f64()
                .ok_or_else(|| SchemaError::new(path, "number out of range"))?;
            Ok(Number { exact, float })
        }
        Value::String(s) => {
            let exact = parse_rational(s).map_err(|e| SchemaError::new(path, e.to_string()))?;
            let float = exact.to_f64();
            Ok(Number { exact, float })
        }
        _ => Err(SchemaError::new(
            path,
            "expected a number or a rational string",
        )),
    }
}

fn number_vector(v: &Value, path: &str, dim: usize) -> Result<Vec<Number>, SchemaError> {
    let items = array(v, path)?;
    if items.len() != dim {
        return Err(SchemaError::new(
            path,
            format!("expected {dim} entries, found {}", items.len()),
        ));
    }
    items
        .iter()
        .enumerate()
        .map(|(i, x)| number(x, &format!("{path}[{i}]")))
        .collect()
}

fn norm_error_path(e: &NormError) -> SchemaError {
    let path = match e {
        NormError::InvalidP(_) => "$.norm.p".to_string(),
        NormError::FunctionalLength { index, .. } => format!("$.norm.functionals[{index}]"),
        NormError::NoFunctionals | NormError::NotSpanning { .. } => {
            "$.norm.functionals".to_string()
        }
        NormError::ZeroDimension => "$.norm.dim".to_string(),
        _ => "$.norm".to_string(),
    };
    SchemaError::new(path, e.to_string())
}

fn model_error_path(e: &ModelError) -> SchemaError {
    let path = match e {
        ModelError::DuplicateVertex { index, .. } => format!("$.vertices[{index}]"),
        ModelError::UnknownVertex { edge, end, .. } => format!("$.edges[{edge}][{end}]"),
        ModelError::Loop { edge, .. } | ModelError::DuplicateEdge { edge, .. } => {
            format!("$.edges[{edge}]")
        }
        ModelError::MissingCoordinates { name } | ModelError::CoordinateDimension { name, .. } => {
            format!("$.placement.{name}")
        }
        ModelError::ExtraCoordinates { .. } => "$.placement".to_string(),
        ModelError::Norm(n) => return norm_error_path(n),
    };
    SchemaError::new(path, e.to_string())
}
