//! JSON documents for instances and certificates.
//!
//! The canonical form lists classes sorted by support, one per line, with
//! only nonzero color counts, keyed by 1-based color.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Certificate, EdgeClass, Instance, Parameters, Vertex};
use crate::verify::VerificationReport;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{location}: {message}")]
pub struct SchemaError {
    pub location: String,
    pub message: String,
}

impl SchemaError {
    fn at(location: impl Into<String>, message: impl Into<String>) -> Self {
        SchemaError { location: location.into(), message: message.into() }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    n: u32,
    m: u32,
    h: u32,
    lambda: u64,
    r: Vec<u64>,
    edges: Vec<EdgeDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CertificateDoc {
    n: u32,
    m: u32,
    h: u32,
    lambda: u64,
    r: Vec<u64>,
    #[serde(default)]
    report: Option<VerificationReport>,
    edges: Vec<EdgeDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    support: Vec<Vertex>,
    alpha: u32,
    colors: BTreeMap<String, u64>,
}

fn json_error(e: serde_json::Error) -> SchemaError {
    SchemaError::at(format!("line {} column {}", e.line(), e.column()), e.to_string())
}

fn convert_params(n: u32, m: u32, h: u32, lambda: u64, r: Vec<u64>) -> Result<Parameters, SchemaError> {
    Parameters::new(n, m, h, lambda, r).map_err(|e| SchemaError::at("parameters", e.to_string()))
}

fn convert_edges(edges: Vec<EdgeDoc>, k: usize) -> Result<Vec<EdgeClass>, SchemaError> {
    let mut classes = Vec::with_capacity(edges.len());
    for (idx, edge) in edges.into_iter().enumerate() {
        let loc = |field: &str| format!("edges[{idx}].{field}");
        let mut support = edge.support;
        if support.contains(&0) {
            return Err(SchemaError::at(loc("support"), "vertex ids are 1-based"));
        }
        support.sort_unstable();
        if support.windows(2).any(|w| w[0] == w[1]) {
            return Err(SchemaError::at(loc("support"), "repeated vertex"));
        }
        if edge.alpha != 0 {
            return Err(SchemaError::at(loc("alpha"), "documents only carry alpha 0"));
        }
        let mut color_counts = vec![0u64; k];
        for (key, count) in edge.colors {
            let color: usize = match key.parse::<usize>() {
                Ok(c) if key == c.to_string() => c,
                _ => return Err(SchemaError::at(loc("colors"), format!("color key {key:?} is not an integer"))),
            };
            if color == 0 || color > k {
                return Err(SchemaError::at(loc("colors"), format!("color {color} outside [1, {k}]")));
            }
            color_counts[color - 1] = count;
        }
        classes.push(EdgeClass { support, alpha: 0, color_counts, uncolored: 0 });
    }
    Ok(classes)
}

pub fn parse_instance(text: &str) -> Result<Instance, SchemaError> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(json_error)?;
    let params = convert_params(doc.n, doc.m, doc.h, doc.lambda, doc.r)?;
    let classes = convert_edges(doc.edges, params.k())?;
    Ok(Instance::new(params, classes))
}

pub fn parse_certificate(text: &str) -> Result<Certificate, SchemaError> {
    let doc: CertificateDoc = serde_json::from_str(text).map_err(json_error)?;
    let params = convert_params(doc.n, doc.m, doc.h, doc.lambda, doc.r)?;
    let classes = convert_edges(doc.edges, params.k())?;
    let mut cert = Certificate::new(params, classes);
    cert.report = doc.report;
    Ok(cert)
}

fn write_document(params: &Parameters, report: Option<&VerificationReport>, classes: &[EdgeClass]) -> String {
    let mut out = String::new();
    let r = serde_json::to_string(params.r()).expect("integer vector");
    write!(
        out,
        "{{\"n\":{},\"m\":{},\"h\":{},\"lambda\":{},\"r\":{}",
        params.n(),
        params.m(),
        params.h(),
        params.lambda(),
        r
    )
    .unwrap();
    if let Some(report) = report {
        out.push_str(",\"report\":");
        out.push_str(&serde_json::to_string(report).expect("report serializes"));
    }
    out.push_str(",\"edges\":[");
    for (i, class) in classes.iter().enumerate() {
        let colors = class
            .color_counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(j, &c)| ((j + 1).to_string(), c))
            .collect::<Vec<_>>();
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        // BTreeMap<String, _> would order "10" before "2".
        write!(out, "{{\"support\":{},\"alpha\":{},\"colors\":{{", serde_json::to_string(&class.support).unwrap(), class.alpha).unwrap();
        for (idx, (key, count)) in colors.iter().enumerate() {
            if idx > 0 {
                out.push(',');
            }
            write!(out, "\"{key}\":{count}").unwrap();
        }
        out.push_str("}}");
    }
    if !classes.is_empty() {
        out.push('\n');
    }
    out.push_str("]}\n");
    out
}

pub fn serialize_instance(inst: &Instance) -> String {
    write_document(inst.params(), None, inst.classes())
}

pub fn serialize_certificate(cert: &Certificate) -> String {
    write_document(cert.params(), cert.report.as_ref(), cert.classes())
}
