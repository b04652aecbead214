//! JSON serialization.
//!
//! A flat network is `{"layers":[{"A":[[[re,im],…],…],"b":[[re,im],…]},…],
//! "masks":[{"A":[[bool,…],…],"b":[bool,…]},…]}` with an optional `"meta"`
//! object. Numbers are written with 17 significant digits so that parsing
//! restores every weight bit for bit.
//!
//! A structured network lists its distinct nodes once, children before
//! parents: `{"format":"structured","root":k,"nodes":[…]}`, where a node is
//! a flat network with `"kind":"leaf"`, or `{"kind":"serial"|"parallel",
//! "children":[ids]}`, or `{"kind":"weighted_sum","children":[ids],
//! "coeffs":[[re,im],…],"bias":[re,im]}`.

use std::collections::HashMap;
use std::fmt::Write;
use std::sync::Arc;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::layer::AffineLayer;
use crate::network::ModReLUNetwork;
use crate::precision::EvalPolicy;
use crate::stats::ArchitectureStats;
use crate::structured::{NetRef, NodeKind, StructuredNet};
use crate::C64;

fn push_f64(out: &mut String, x: f64) {
    write!(out, "{x:.16e}").expect("writing to a string");
}

fn push_c64(out: &mut String, z: C64) {
    out.push('[');
    push_f64(out, z.re);
    out.push(',');
    push_f64(out, z.im);
    out.push(']');
}

fn push_list<T>(out: &mut String, items: &[T], mut f: impl FnMut(&mut String, &T)) {
    out.push('[');
    for (i, it) in items.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        f(out, it);
    }
    out.push(']');
}

fn push_layers(out: &mut String, net: &ModReLUNetwork) {
    out.push_str("\"layers\":");
    push_list(out, net.layers(), |out, l| {
        out.push_str("{\"A\":");
        let rows: Vec<&[C64]> = l.weights().chunks(l.cols()).collect();
        push_list(out, &rows, |out, row| push_list(out, row, |out, z| push_c64(out, *z)));
        out.push_str(",\"b\":");
        push_list(out, l.bias(), |out, z| push_c64(out, *z));
        out.push('}');
    });
    out.push_str(",\"masks\":");
    push_list(out, net.layers(), |out, l| {
        out.push_str("{\"A\":");
        let rows: Vec<&[bool]> = l.weight_mask().chunks(l.cols()).collect();
        push_list(out, &rows, |out, row| push_list(out, row, |out, m| out.push_str(if *m { "true" } else { "false" })));
        out.push_str(",\"b\":");
        push_list(out, l.bias_mask(), |out, m| out.push_str(if *m { "true" } else { "false" }));
        out.push('}');
    });
}

fn push_meta(out: &mut String, meta: Option<&Value>) {
    if let Some(m) = meta {
        out.push_str(",\"meta\":");
        out.push_str(&m.to_string());
    }
}

/// Serializes a flat network.
pub fn network_to_json(net: &ModReLUNetwork) -> String {
    let mut out = String::from("{");
    push_layers(&mut out, net);
    push_meta(&mut out, net.meta());
    out.push('}');
    out
}

/// Serializes a structured network, writing each shared node once.
pub fn structured_to_json(net: &StructuredNet) -> String {
    let mut ids: HashMap<usize, usize> = HashMap::new();
    let mut nodes: Vec<String> = Vec::new();
    let mut root = String::new();
    write_node_body(net, &mut ids, &mut nodes, &mut root);
    let root_id = nodes.len();
    nodes.push(root);
    let mut out = format!("{{\"format\":\"structured\",\"root\":{root_id},\"nodes\":[");
    out.push_str(&nodes.join(","));
    out.push(']');
    push_meta(&mut out, net.meta());
    out.push('}');
    out
}

fn node_id(node: &NetRef, ids: &mut HashMap<usize, usize>, nodes: &mut Vec<String>) -> usize {
    let key = Arc::as_ptr(node) as usize;
    if let Some(id) = ids.get(&key) {
        return *id;
    }
    let mut body = String::new();
    write_node_body(node, ids, nodes, &mut body);
    let id = nodes.len();
    nodes.push(body);
    ids.insert(key, id);
    id
}

fn write_node_body(
    node: &StructuredNet,
    ids: &mut HashMap<usize, usize>,
    nodes: &mut Vec<String>,
    out: &mut String,
) {
    let child_ids = |children: &[NetRef], ids: &mut HashMap<usize, usize>, nodes: &mut Vec<String>| {
        children.iter().map(|c| node_id(c, ids, nodes).to_string()).collect::<Vec<_>>().join(",")
    };
    match node.kind() {
        NodeKind::Leaf(net) => {
            out.push_str("{\"kind\":\"leaf\",");
            push_layers(out, net);
            push_meta(out, net.meta());
            out.push('}');
        }
        NodeKind::Serial(ch) => {
            let c = child_ids(ch, ids, nodes);
            write!(out, "{{\"kind\":\"serial\",\"children\":[{c}]}}").expect("string write");
        }
        NodeKind::Parallel(ch) => {
            let c = child_ids(ch, ids, nodes);
            write!(out, "{{\"kind\":\"parallel\",\"children\":[{c}]}}").expect("string write");
        }
        NodeKind::WeightedSum { children, coeffs, bias } => {
            let c = child_ids(children, ids, nodes);
            write!(out, "{{\"kind\":\"weighted_sum\",\"children\":[{c}],\"coeffs\":").expect("string write");
            push_list(out, coeffs, |out, z| push_c64(out, *z));
            out.push_str(",\"bias\":");
            push_c64(out, *bias);
            out.push('}');
        }
    }
}

/// A deserialized network of either form.
#[derive(Debug, Clone)]
pub enum AnyNet {
    Flat(ModReLUNetwork),
    Structured(NetRef),
}

impl AnyNet {
    pub fn d_in(&self) -> usize {
        match self {
            AnyNet::Flat(n) => n.d_in(),
            AnyNet::Structured(n) => n.d_in(),
        }
    }

    pub fn d_out(&self) -> usize {
        match self {
            AnyNet::Flat(n) => n.d_out(),
            AnyNet::Structured(n) => n.d_out(),
        }
    }

    pub fn stats(&self) -> ArchitectureStats {
        match self {
            AnyNet::Flat(n) => n.stats(),
            AnyNet::Structured(n) => n.stats(),
        }
    }

    pub fn meta(&self) -> Option<&Value> {
        match self {
            AnyNet::Flat(n) => n.meta(),
            AnyNet::Structured(n) => n.meta(),
        }
    }

    pub fn evaluate(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.evaluate_with(x, EvalPolicy::Auto)
    }

    pub fn evaluate_with(&self, x: &[C64], policy: EvalPolicy) -> Result<Vec<C64>> {
        match self {
            AnyNet::Flat(n) => n.evaluate_with(x, policy),
            AnyNet::Structured(n) => n.evaluate_with(x, policy),
        }
    }

    pub fn to_json(&self) -> String {
        match self {
            AnyNet::Flat(n) => network_to_json(n),
            AnyNet::Structured(n) => structured_to_json(n),
        }
    }
}

fn bad(path: &str, msg: &str) -> Error {
    Error::Parse { line: 0, column: 0, message: format!("{path}: {msg}") }
}

fn parse_c64(v: &Value, path: &str) -> Result<C64> {
    match v.as_array().map(|a| a.as_slice()) {
        Some([re, im]) => match (re.as_f64(), im.as_f64()) {
            (Some(re), Some(im)) => Ok(C64::new(re, im)),
            _ => Err(bad(path, "complex entries must be numbers")),
        },
        _ => Err(bad(path, "expected a [re, im] pair")),
    }
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| bad(path, "expected an array"))
}

fn parse_bool_row(v: &Value, path: &str) -> Result<Vec<bool>> {
    array(v, path)?
        .iter()
        .map(|b| b.as_bool().ok_or_else(|| bad(path, "mask entries must be booleans")))
        .collect()
}

fn parse_flat(v: &Value, path: &str) -> Result<ModReLUNetwork> {
    let layers_v = array(v.get("layers").ok_or_else(|| bad(path, "missing \"layers\""))?, path)?;
    let masks_v = match v.get("masks") {
        Some(m) => Some(array(m, &format!("{path}.masks"))?),
        None => None,
    };
    if let Some(m) = masks_v {
        if m.len() != layers_v.len() {
            return Err(bad(path, "\"masks\" must have one entry per layer"));
        }
    }
    let mut layers = Vec::with_capacity(layers_v.len());
    for (i, lv) in layers_v.iter().enumerate() {
        let lp = format!("{path}.layers[{i}]");
        let rows = array(lv.get("A").ok_or_else(|| bad(&lp, "missing \"A\""))?, &lp)?;
        let bias = array(lv.get("b").ok_or_else(|| bad(&lp, "missing \"b\""))?, &lp)?;
        let mut w = Vec::new();
        let mut cols = None;
        for (r, row) in rows.iter().enumerate() {
            let rp = format!("{lp}.A[{r}]");
            let row = array(row, &rp)?;
            if *cols.get_or_insert(row.len()) != row.len() {
                return Err(bad(&rp, "ragged matrix"));
            }
            for (c, z) in row.iter().enumerate() {
                w.push(parse_c64(z, &format!("{rp}[{c}]"))?);
            }
        }
        let b = bias
            .iter()
            .enumerate()
            .map(|(r, z)| parse_c64(z, &format!("{lp}.b[{r}]")))
            .collect::<Result<Vec<_>>>()?;
        let cols = cols.unwrap_or(0);
        let layer = match masks_v {
            Some(m) => {
                let mp = format!("{path}.masks[{i}]");
                let mv = &m[i];
                let ma = array(mv.get("A").ok_or_else(|| bad(&mp, "missing \"A\""))?, &mp)?;
                let mut wm = Vec::new();
                for row in ma {
                    wm.extend(parse_bool_row(row, &mp)?);
                }
                let bm = parse_bool_row(mv.get("b").ok_or_else(|| bad(&mp, "missing \"b\""))?, &mp)?;
                AffineLayer::with_masks(rows.len(), cols, w, b, wm, bm)
            }
            None => AffineLayer::new(rows.len(), cols, w, b),
        }
        .map_err(|e| bad(&lp, &e.to_string()))?;
        layers.push(layer);
    }
    let net = ModReLUNetwork::new(layers).map_err(|e| bad(path, &e.to_string()))?;
    Ok(match v.get("meta") {
        Some(m) => net.with_meta(m.clone()),
        None => net,
    })
}

fn parse_structured(v: &Value) -> Result<NetRef> {
    let nodes_v = array(v.get("nodes").ok_or_else(|| bad("$", "missing \"nodes\""))?, "$.nodes")?;
    let root = v
        .get("root")
        .and_then(Value::as_u64)
        .ok_or_else(|| bad("$", "missing integer \"root\""))? as usize;
    let mut built: Vec<NetRef> = Vec::with_capacity(nodes_v.len());
    for (i, nv) in nodes_v.iter().enumerate() {
        let path = format!("$.nodes[{i}]");
        let kind = nv.get("kind").and_then(Value::as_str).ok_or_else(|| bad(&path, "missing \"kind\""))?;
        let children = || -> Result<Vec<NetRef>> {
            array(nv.get("children").ok_or_else(|| bad(&path, "missing \"children\""))?, &path)?
                .iter()
                .map(|c| {
                    let id = c.as_u64().ok_or_else(|| bad(&path, "child ids must be integers"))? as usize;
                    built.get(id).cloned().ok_or_else(|| bad(&path, "child id must refer to an earlier node"))
                })
                .collect()
        };
        let node = match kind {
            "leaf" => Ok(StructuredNet::leaf(parse_flat(nv, &path)?)),
            "serial" => StructuredNet::serial(children()?),
            "parallel" => StructuredNet::parallel(children()?),
            "weighted_sum" => {
                let coeffs = array(nv.get("coeffs").ok_or_else(|| bad(&path, "missing \"coeffs\""))?, &path)?
                    .iter()
                    .map(|z| parse_c64(z, &path))
                    .collect::<Result<Vec<_>>>()?;
                let bias = parse_c64(nv.get("bias").ok_or_else(|| bad(&path, "missing \"bias\""))?, &path)?;
                StructuredNet::weighted_sum(children()?, coeffs, bias)
            }
            other => return Err(bad(&path, &format!("unknown node kind {other:?}"))),
        }
        .map_err(|e| match e {
            Error::Parse { .. } => e,
            other => bad(&path, &other.to_string()),
        })?;
        built.push(node);
    }
    let root = built.get(root).ok_or_else(|| bad("$.root", "no such node"))?;
    Ok(match v.get("meta") {
        Some(m) => Arc::new((**root).clone().with_meta(m.clone())),
        None => root.clone(),
    })
}

/// Parses either serialized form.
pub fn parse_network(text: &str) -> Result<AnyNet> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if v.get("nodes").is_some() {
        Ok(AnyNet::Structured(parse_structured(&v)?))
    } else {
        Ok(AnyNet::Flat(parse_flat(&v, "$")?))
    }
}
