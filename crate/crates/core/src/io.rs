//! Model and tree documents, number formatting and graph export.
//!
//! Model documents (JSON):
//!
//! ```json
//! {
//!   "lambda": 2,
//!   "conditions": [{"name": "e1", "p": 0.5}, {"name": "e2", "p": 0.5}],
//!   "symptoms": ["d1"],
//!   "matrix": [[0], [1]]
//! }
//! ```
//!
//! The CSV variant has a header row `condition,p,<symptom names…>` followed by
//! one row per condition. Both formats are described in the crate's `schema/`
//! directory.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::model::{DiagnosisModel, RawModel};
use crate::planner::{
    evaluate_tree, Criterion, CriterionKind, DiagnosisTree, LeafStatus, Node, NodeId,
};

/// Significant digits used for every printed number.
pub const SIG_DIGITS: usize = 12;

/// Formats `x` with exactly 12 significant digits, in fixed notation for
/// magnitudes in `[1e-5, 1e12)` and scientific notation otherwise.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return format!("{:.*}", SIG_DIGITS - 1, 0.0);
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

/// `x` rounded to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFormat {
    Json,
    Csv,
}

impl ModelFormat {
    /// `.csv` files are CSV, everything else JSON.
    pub fn from_path(path: &str) -> Self {
        if path.to_ascii_lowercase().ends_with(".csv") {
            ModelFormat::Csv
        } else {
            ModelFormat::Json
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    /// Alphabet size for CSV input; inferred from the data when absent.
    pub lambda: Option<u32>,
    pub renormalize: bool,
}

#[derive(Debug, Clone)]
pub struct ParsedModel {
    pub model: DiagnosisModel,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionDocument {
    pub name: String,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub lambda: i64,
    pub conditions: Vec<ConditionDocument>,
    pub symptoms: Vec<String>,
    pub matrix: Vec<Vec<i64>>,
}

impl From<ModelDocument> for RawModel {
    fn from(doc: ModelDocument) -> Self {
        RawModel {
            lambda: doc.lambda,
            conditions: doc.conditions.into_iter().map(|c| (c.name, c.p)).collect(),
            symptoms: doc.symptoms,
            matrix: doc.matrix,
        }
    }
}

pub fn parse_model(text: &str, format: ModelFormat, options: &ParseOptions) -> Result<ParsedModel> {
    let mut warnings = Vec::new();
    let raw = match format {
        ModelFormat::Json => parse_json_model(text)?,
        ModelFormat::Csv => parse_csv_model(text, options.lambda, &mut warnings)?,
    };
    let model = raw.validate(options.renormalize)?;
    Ok(ParsedModel { model, warnings })
}

fn parse_json_model(text: &str) -> Result<RawModel> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: ModelDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::parse(
            format!("{path} (line {}, column {})", inner.line(), inner.column()),
            inner.to_string(),
        )
    })?;
    Ok(doc.into())
}

fn parse_csv_model(
    text: &str,
    lambda: Option<u32>,
    warnings: &mut Vec<String>,
) -> Result<RawModel> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let csv_err = |e: csv::Error| {
        let location = e
            .position()
            .map_or_else(|| "csv".to_string(), |p| format!("line {}", p.line()));
        Error::parse(location, e.to_string())
    };
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.len() < 3 {
        return Err(Error::parse(
            "line 1",
            "header needs a condition column, a probability column and at least one symptom",
        ));
    }
    let symptoms: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
    let mut conditions = Vec::new();
    let mut matrix = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let name = record[0].to_string();
        let p: f64 = record[1].parse().map_err(|_| {
            Error::parse(
                format!("line {line}, column 2 (p)"),
                format!("invalid probability `{}`", &record[1]),
            )
        })?;
        let row = record
            .iter()
            .enumerate()
            .skip(2)
            .map(|(col, cell)| {
                cell.parse::<i64>().map_err(|_| {
                    Error::parse(
                        format!("line {line}, column {} ({})", col + 1, &header[col]),
                        format!("invalid symptom value `{cell}`"),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        conditions.push((name, p));
        matrix.push(row);
    }
    let lambda = match lambda {
        Some(l) => i64::from(l),
        None => {
            let max = matrix.iter().flatten().copied().max().unwrap_or(0);
            let inferred = (max + 1).max(2);
            warnings.push(format!(
                "lambda not given; inferred {inferred} from maximum entry {max}"
            ));
            inferred
        }
    };
    Ok(RawModel {
        lambda,
        conditions,
        symptoms,
        matrix,
    })
}

/// Model document as JSON, one condition and one matrix row per line.
pub fn model_to_json(model: &DiagnosisModel) -> String {
    let quote = |s: &str| serde_json::to_string(s).expect("string serializes");
    let mut out = String::from("{\n");
    let _ = writeln!(out, "  \"lambda\": {},", model.lambda());
    out.push_str("  \"conditions\": [\n");
    for i in 0..model.n() {
        let sep = if i + 1 < model.n() { "," } else { "" };
        let p = serde_json::to_string(&model.prior(i)).expect("finite float serializes");
        let _ = writeln!(
            out,
            "    {{\"name\": {}, \"p\": {p}}}{sep}",
            quote(model.condition_name(i))
        );
    }
    out.push_str("  ],\n");
    let symptoms: Vec<String> = (0..model.t())
        .map(|r| quote(model.symptom_name(r)))
        .collect();
    let _ = writeln!(out, "  \"symptoms\": [{}],", symptoms.join(", "));
    out.push_str("  \"matrix\": [\n");
    for i in 0..model.n() {
        let sep = if i + 1 < model.n() { "," } else { "" };
        let row: Vec<String> = model.matrix().row(i).iter().map(u32::to_string).collect();
        let _ = writeln!(out, "    [{}]{sep}", row.join(", "));
    }
    out.push_str("  ]\n}\n");
    out
}

// ---------------------------------------------------------------------------
// tree documents

fn criterion_name(c: Criterion) -> &'static str {
    match c.kind {
        CriterionKind::Combinatorial => "cb",
        CriterionKind::Shannon => "shannon",
    }
}

/// Canonical tree document: sorted keys, posteriors rounded to 12
/// significant digits, pretty-printed with a trailing newline.
pub fn tree_to_json(tree: &DiagnosisTree, model: &DiagnosisModel) -> String {
    let doc = json!({
        "criterion": criterion_name(tree.criterion()),
        "base": tree.criterion().shannon_base,
        "root": node_value(tree, model, tree.root()),
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("tree serializes");
    s.push('\n');
    s
}

fn node_value(tree: &DiagnosisTree, model: &DiagnosisModel, id: NodeId) -> Value {
    match tree.node(id) {
        Node::Test {
            symptom, branches, ..
        } => {
            let branches: Map<String, Value> = branches
                .iter()
                .map(|&(v, child)| (v.to_string(), node_value(tree, model, child)))
                .collect();
            json!({ "test": model.symptom_name(*symptom), "branches": branches })
        }
        Node::Leaf {
            members,
            posterior,
            status,
        } => {
            let names: Vec<&str> = members.iter().map(|&i| model.condition_name(i)).collect();
            let post: Map<String, Value> = members
                .iter()
                .zip(posterior)
                .map(|(&i, &q)| (model.condition_name(i).to_string(), json!(round_sig(q))))
                .collect();
            json!({
                "leaf": names,
                "status": match status {
                    LeafStatus::Resolved => "resolved",
                    LeafStatus::Ambiguous => "ambiguous",
                },
                "posterior": post,
            })
        }
    }
}

/// Parses a tree document against `model` and checks it structurally.
pub fn parse_tree(text: &str, model: &DiagnosisModel) -> Result<DiagnosisTree> {
    let doc: Value = serde_json::from_str(text).map_err(|e| {
        Error::parse(
            format!("line {}, column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::parse("$", "expected an object"))?;
    let base = match obj.get("base") {
        None => model.lambda(),
        Some(v) => v
            .as_u64()
            .and_then(|b| u32::try_from(b).ok())
            .ok_or_else(|| Error::parse("base", "expected a positive integer"))?,
    };
    let criterion = match obj.get("criterion").and_then(Value::as_str) {
        Some("cb") => Criterion::combinatorial(),
        Some("shannon") => Criterion::shannon(base)?,
        Some(other) => {
            return Err(Error::parse(
                "criterion",
                format!("unknown criterion `{other}`"),
            ))
        }
        None => return Err(Error::parse("criterion", "missing field `criterion`")),
    };
    let root = obj
        .get("root")
        .ok_or_else(|| Error::parse("root", "missing field `root`"))?;
    let mut nodes = Vec::new();
    parse_node(root, "root", model, &mut nodes)?;
    let tree = DiagnosisTree::from_nodes(nodes, NodeId(0), model.lambda(), criterion)?;
    evaluate_tree(&tree, model)?;
    Ok(tree)
}

fn parse_node(
    value: &Value,
    path: &str,
    model: &DiagnosisModel,
    nodes: &mut Vec<Node>,
) -> Result<Vec<usize>> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::parse(path, "expected an object"))?;
    if let Some(test) = obj.get("test") {
        let name = test
            .as_str()
            .ok_or_else(|| Error::parse(format!("{path}.test"), "expected a symptom name"))?;
        let symptom = model.symptom_index(name).ok_or_else(|| {
            Error::parse(format!("{path}.test"), format!("unknown symptom `{name}`"))
        })?;
        let branches = obj
            .get("branches")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::parse(format!("{path}.branches"), "expected an object"))?;
        let id = nodes.len();
        nodes.push(Node::Test {
            symptom,
            branches: Vec::new(),
            members: Vec::new(),
        });
        let mut ordered: Vec<(u32, &String, &Value)> = branches
            .iter()
            .map(|(k, v)| {
                k.parse::<u32>().map(|value| (value, k, v)).map_err(|_| {
                    Error::parse(
                        format!("{path}.branches"),
                        format!("branch key `{k}` is not a value"),
                    )
                })
            })
            .collect::<Result<_>>()?;
        ordered.sort_by_key(|&(value, _, _)| value);
        let mut edges = Vec::with_capacity(ordered.len());
        let mut members = Vec::new();
        for (v, key, child) in ordered {
            edges.push((v, NodeId(nodes.len())));
            members.extend(parse_node(
                child,
                &format!("{path}.branches.{key}"),
                model,
                nodes,
            )?);
        }
        members.sort_unstable();
        nodes[id] = Node::Test {
            symptom,
            branches: edges,
            members: members.clone(),
        };
        return Ok(members);
    }

    let leaf = obj
        .get("leaf")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::parse(path, "expected `test` or `leaf`"))?;
    let mut members = Vec::with_capacity(leaf.len());
    for (k, entry) in leaf.iter().enumerate() {
        let name = entry.as_str().ok_or_else(|| {
            Error::parse(format!("{path}.leaf[{k}]"), "expected a condition name")
        })?;
        members.push(model.condition_index(name).ok_or_else(|| {
            Error::parse(
                format!("{path}.leaf[{k}]"),
                format!("unknown condition `{name}`"),
            )
        })?);
    }
    members.sort_unstable();
    let status = match obj.get("status").and_then(Value::as_str) {
        Some("resolved") => LeafStatus::Resolved,
        Some("ambiguous") => LeafStatus::Ambiguous,
        _ => {
            return Err(Error::parse(
                format!("{path}.status"),
                "expected `resolved` or `ambiguous`",
            ))
        }
    };
    let mass: f64 = members.iter().map(|&i| model.prior(i)).sum();
    let posterior: Vec<f64> = members.iter().map(|&i| model.prior(i) / mass).collect();
    if let Some(given) = obj.get("posterior") {
        let given = given
            .as_object()
            .ok_or_else(|| Error::parse(format!("{path}.posterior"), "expected an object"))?;
        if given.len() != members.len() {
            return Err(Error::parse(
                format!("{path}.posterior"),
                "posterior does not list the leaf's conditions",
            ));
        }
        for (&i, &q) in members.iter().zip(&posterior) {
            let name = model.condition_name(i);
            let stated = given.get(name).and_then(Value::as_f64).ok_or_else(|| {
                Error::parse(
                    format!("{path}.posterior.{name}"),
                    "missing posterior value",
                )
            })?;
            if (stated - q).abs() > 1e-9 {
                return Err(Error::TreeModelMismatch(format!(
                    "posterior of `{name}` is {stated}, model gives {q}"
                )));
            }
        }
    }
    nodes.push(Node::Leaf {
        members: members.clone(),
        posterior,
        status,
    });
    Ok(members)
}

// ---------------------------------------------------------------------------
// graph export

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Directed graph: boxes for tests, ellipses for leaves, edges labelled with
/// the observed value.
pub fn export_dot(tree: &DiagnosisTree, model: &DiagnosisModel) -> String {
    let mut out = String::from("digraph diagnosis {\n");
    for (id, node) in tree.nodes().iter().enumerate() {
        match node {
            Node::Test {
                symptom, branches, ..
            } => {
                let _ = writeln!(
                    out,
                    "  n{id} [shape=box, label=\"{}\"];",
                    dot_escape(model.symptom_name(*symptom))
                );
                for (v, child) in branches {
                    let _ = writeln!(out, "  n{id} -> n{} [label=\"{v}\"];", child.0);
                }
            }
            Node::Leaf {
                members, status, ..
            } => {
                let names: Vec<String> = members
                    .iter()
                    .map(|&i| dot_escape(model.condition_name(i)))
                    .collect();
                let status = match status {
                    LeafStatus::Resolved => "resolved",
                    LeafStatus::Ambiguous => "ambiguous",
                };
                let _ = writeln!(
                    out,
                    "  n{id} [shape=ellipse, label=\"{}\\n{status}\"];",
                    names.join(", ")
                );
            }
        }
    }
    out.push_str("}\n");
    out
}
