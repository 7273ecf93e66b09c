//! `.qnet` network descriptions: JSON text with complex scalars written as
//! `[re, im]` and matrices as row-major nested arrays.
//!
//! ```text
//! {
//!   "name": "single cavity",
//!   "plant": {"M": [[[0, 0]]], "couplings": {"w": [[[1, 0]]]}},
//!   "topology": "observer"
//! }
//! ```
//!
//! The plant is given either as `{M, couplings}` or as raw `{A, B, C}` blocks
//! keyed by channel. Plant fields may also sit at the top level. The topology
//! is `"observer"`, `"yamamoto"` or `{"S", "W", "y_width"}`.

use std::fmt::Write as _;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::matrixkit::{CMatrix, C64};
use crate::passive_model::{realize, ChannelLabel, HamiltonianCoupling, ModelError, PassiveSystem, Port};
use crate::synthesis::{ControllerGains, ScatteringPair, SynthesisError};
use crate::DEFAULT_TOL;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("validation error at {path}: {message}")]
    Validation { path: String, message: String },
}

impl FormatError {
    /// Field path for schema and validation errors.
    pub fn path(&self) -> Option<&str> {
        match self {
            FormatError::Syntax { .. } => None,
            FormatError::Schema { path, .. } | FormatError::Validation { path, .. } => Some(path),
        }
    }
}

fn schema(path: &str, message: impl Into<String>) -> FormatError {
    FormatError::Schema { path: path.to_string(), message: message.into() }
}

fn invalid(path: &str, message: impl Into<String>) -> FormatError {
    FormatError::Validation { path: path.to_string(), message: message.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlantSpec {
    Hamiltonian(HamiltonianCoupling),
    Raw(PassiveSystem),
}

impl PlantSpec {
    pub fn system(&self) -> PassiveSystem {
        match self {
            PlantSpec::Hamiltonian(hc) => realize(hc),
            PlantSpec::Raw(sys) => sys.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    Observer,
    Yamamoto,
    General { s: CMatrix, w: CMatrix, y_width: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkDescription {
    pub name: Option<String>,
    pub comment: Option<String>,
    pub plant: PlantSpec,
    pub topology: Option<Topology>,
    pub gains: Option<ControllerGains>,
}

fn widths(sys: &PassiveSystem) -> (usize, usize) {
    let width = |l| sys.port(l).map_or(0, |p| p.b.cols());
    (width(ChannelLabel::W) + width(ChannelLabel::F), width(ChannelLabel::U))
}

impl NetworkDescription {
    pub fn new(plant: PlantSpec) -> Self {
        Self { name: None, comment: None, plant, topology: None, gains: None }
    }

    pub fn system(&self) -> PassiveSystem {
        self.plant.system()
    }

    /// Resolved `(S, W)`; `None` without a topology.
    pub fn scattering_pair(&self) -> Result<Option<ScatteringPair>, FormatError> {
        self.scattering_pair_with_tol(DEFAULT_TOL)
    }

    fn scattering_pair_with_tol(&self, tol: f64) -> Result<Option<ScatteringPair>, FormatError> {
        let Some(top) = &self.topology else { return Ok(None) };
        let sys = self.system();
        for p in sys.ports() {
            if !matches!(p.label, ChannelLabel::W | ChannelLabel::U | ChannelLabel::F) {
                return Err(invalid(
                    "topology",
                    format!("plant channel {} cannot be routed; only w, u, f are", p.label),
                ));
            }
        }
        let (n_y, n_u) = widths(&sys);
        let sw = match top {
            Topology::Observer => ScatteringPair::observer(n_y, n_u),
            Topology::Yamamoto => {
                if n_u != n_y {
                    return Err(invalid(
                        "topology",
                        format!("yamamoto needs equal output and feedback widths, got {n_y} and {n_u}"),
                    ));
                }
                ScatteringPair::yamamoto(n_y)
            }
            Topology::General { s, w, y_width } => {
                if *y_width != n_y {
                    return Err(invalid("topology.y_width", format!("plant output width is {n_y}, not {y_width}")));
                }
                ScatteringPair::new(s.clone(), w.clone(), n_y, n_u, tol).map_err(|e| match e {
                    SynthesisError::NotUnitary { which, defect } => {
                        invalid(&format!("topology.{which}"), format!("not unitary (defect {defect:.3e})"))
                    }
                    other => invalid("topology", other.to_string()),
                })?
            }
        };
        Ok(Some(sw))
    }

    /// Checks cross-field consistency: topology against plant widths and
    /// gain shapes against both.
    pub fn validate(&self, tol: f64) -> Result<(), FormatError> {
        let sw = self.scattering_pair_with_tol(tol)?;
        if let Some(g) = &self.gains {
            let Some(sw) = sw else { return Err(invalid("gains", "gains need a topology")) };
            let n = self.system().n();
            let expect =
                [("gains.G1", &g.g1, (n, sw.n_y())), ("gains.G2", &g.g2, (n, sw.n_z())), ("gains.A_c", &g.a_c, (n, n))];
            for (path, m, shape) in expect {
                if m.shape() != shape {
                    return Err(invalid(
                        path,
                        format!("is {}x{}, expected {}x{}", m.rows(), m.cols(), shape.0, shape.1),
                    ));
                }
            }
            if g.g3.rows() != n {
                return Err(invalid("gains.G3", format!("has {} rows, expected {n}", g.g3.rows())));
            }
        }
        Ok(())
    }
}

fn syntax_error(e: &serde_json::Error) -> FormatError {
    let msg = e.to_string();
    let message = msg.split(" at line ").next().unwrap_or(&msg).to_string();
    FormatError::Syntax { line: e.line(), column: e.column(), message }
}

fn object<'a>(v: &'a Value, path: &str, allowed: &[&str]) -> Result<&'a Map<String, Value>, FormatError> {
    let Value::Object(map) = v else { return Err(schema(path, "expected an object")) };
    for k in map.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(schema(&join(path, k), "unknown field"));
        }
    }
    Ok(map)
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn number(v: &Value, path: &str) -> Result<f64, FormatError> {
    v.as_f64().filter(|x| x.is_finite()).ok_or_else(|| schema(path, "expected a finite number"))
}

fn complex(v: &Value, path: &str) -> Result<C64, FormatError> {
    match v {
        Value::Array(pair) if pair.len() == 2 => {
            Ok(C64::new(number(&pair[0], &format!("{path}[0]"))?, number(&pair[1], &format!("{path}[1]"))?))
        }
        _ => Err(schema(path, "expected a complex number [re, im]")),
    }
}

fn matrix(v: &Value, path: &str) -> Result<CMatrix, FormatError> {
    let Value::Array(rows) = v else { return Err(schema(path, "expected a matrix (array of rows)")) };
    let mut out = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let rp = format!("{path}[{i}]");
        let Value::Array(entries) = row else { return Err(schema(&rp, "expected a row (array of [re, im])")) };
        let row: Vec<C64> =
            entries.iter().enumerate().map(|(j, e)| complex(e, &format!("{rp}[{j}]"))).collect::<Result<_, _>>()?;
        if let Some(first) = out.first() {
            let first: &Vec<C64> = first;
            if first.len() != row.len() {
                return Err(invalid(&rp, format!("row has {} entries, expected {}", row.len(), first.len())));
            }
        }
        out.push(row);
    }
    if out.is_empty() {
        return Ok(CMatrix::zeros(0, 0));
    }
    CMatrix::try_from_rows(&out).map_err(|e| invalid(path, e.to_string()))
}

fn label(key: &str, path: &str) -> Result<ChannelLabel, FormatError> {
    key.parse().map_err(|e: String| schema(&join(path, key), e))
}

fn channel_map(v: &Value, path: &str) -> Result<Vec<(ChannelLabel, CMatrix)>, FormatError> {
    let Value::Object(map) = v else { return Err(schema(path, "expected an object keyed by channel")) };
    let mut out = Vec::with_capacity(map.len());
    for (k, m) in map {
        let l = label(k, path)?;
        out.push((l, matrix(m, &join(path, k))?));
    }
    Ok(out)
}

fn model_error(e: ModelError, path: &str) -> FormatError {
    match e {
        ModelError::NotHermitian { what, asymmetry } => {
            invalid(&join(path, &what), format!("not Hermitian (asymmetry {asymmetry:.3e})"))
        }
        ModelError::DuplicateChannel(l) => invalid(&join(path, l.as_str()), "channel declared twice"),
        other => invalid(path, other.to_string()),
    }
}

const PLANT_KEYS: [&str; 5] = ["M", "couplings", "A", "B", "C"];

fn plant(map: &Map<String, Value>, path: &str, tol: f64) -> Result<PlantSpec, FormatError> {
    let has = |k: &str| map.contains_key(k);
    let ham = has("M") || has("couplings");
    let raw = has("A") || has("B") || has("C");
    if ham && raw {
        return Err(schema(path, "plant must use either {M, couplings} or {A, B, C}, not both"));
    }
    if ham {
        let m = matrix(map.get("M").ok_or_else(|| schema(&join(path, "M"), "missing field"))?, &join(path, "M"))?;
        let couplings = match map.get("couplings") {
            Some(v) => channel_map(v, &join(path, "couplings"))?,
            None => Vec::new(),
        };
        if !m.is_square() {
            return Err(invalid(&join(path, "M"), format!("is {}x{}, expected square", m.rows(), m.cols())));
        }
        for (l, a) in &couplings {
            if a.cols() != m.rows() || a.rows() == 0 {
                return Err(invalid(
                    &join(&join(path, "couplings"), l.as_str()),
                    format!("is {}x{}, expected k x {}", a.rows(), a.cols(), m.rows()),
                ));
            }
        }
        return HamiltonianCoupling::new(m, couplings, tol)
            .map(PlantSpec::Hamiltonian)
            .map_err(|e| model_error(e, path));
    }
    if raw {
        let ap = join(path, "A");
        let a = matrix(map.get("A").ok_or_else(|| schema(&ap, "missing field"))?, &ap)?;
        if !a.is_square() {
            return Err(invalid(&ap, format!("is {}x{}, expected square", a.rows(), a.cols())));
        }
        let n = a.rows();
        let bs = match map.get("B") {
            Some(v) => channel_map(v, &join(path, "B"))?,
            None => Vec::new(),
        };
        let mut cs = match map.get("C") {
            Some(v) => channel_map(v, &join(path, "C"))?,
            None => Vec::new(),
        };
        let mut ports = Vec::with_capacity(bs.len());
        for (l, b) in bs {
            let bp = join(&join(path, "B"), l.as_str());
            if b.rows() != n && !(n == 0 && b.rows() == 0) {
                return Err(invalid(&bp, format!("has {} rows, expected {n}", b.rows())));
            }
            let b = if b.rows() == 0 { CMatrix::zeros(n, 0) } else { b };
            let c = match cs.iter().position(|(k, _)| *k == l) {
                Some(i) => {
                    let c = cs.remove(i).1;
                    if c.shape() != (b.cols(), n) {
                        return Err(invalid(
                            &join(&join(path, "C"), l.as_str()),
                            format!("is {}x{}, expected {}x{n}", c.rows(), c.cols(), b.cols()),
                        ));
                    }
                    Some(c)
                }
                None => None,
            };
            ports.push(Port { label: l, b, c });
        }
        if let Some((l, _)) = cs.first() {
            return Err(invalid(&join(&join(path, "C"), l.as_str()), "output matrix without a matching B block"));
        }
        return PassiveSystem::new(a, ports).map(PlantSpec::Raw).map_err(|e| model_error(e, path));
    }
    Err(schema(path, "missing plant: expected {M, couplings} or {A, B, C}"))
}

fn topology(v: &Value, path: &str) -> Result<Topology, FormatError> {
    match v {
        Value::String(s) if s == "observer" => Ok(Topology::Observer),
        Value::String(s) if s == "yamamoto" => Ok(Topology::Yamamoto),
        Value::String(s) if s == "general" => Err(schema(path, "general topology needs an object {S, W, y_width}")),
        Value::String(s) => Err(schema(path, format!("unknown preset {s:?}"))),
        Value::Object(_) => {
            let map = object(v, path, &["S", "W", "y_width"])?;
            let get = |k: &str| map.get(k).ok_or_else(|| schema(&join(path, k), "missing field"));
            let s = matrix(get("S")?, &join(path, "S"))?;
            let w = matrix(get("W")?, &join(path, "W"))?;
            let yp = join(path, "y_width");
            let y_width = get("y_width")?.as_u64().ok_or_else(|| schema(&yp, "expected a non-negative integer"))?;
            if !s.is_square() || !w.is_square() || s.rows() != w.rows() {
                return Err(invalid(path, "S and W must be square of equal size"));
            }
            if y_width > s.rows() as u64 {
                return Err(invalid(&yp, format!("exceeds size {}", s.rows())));
            }
            Ok(Topology::General { s, w, y_width: y_width as usize })
        }
        _ => Err(schema(path, "expected a preset name or an object")),
    }
}

fn gains(v: &Value, path: &str) -> Result<ControllerGains, FormatError> {
    let map = object(v, path, &["G1", "G2", "G3", "A_c"])?;
    let get = |k: &str| -> Result<CMatrix, FormatError> {
        let p = join(path, k);
        matrix(map.get(k).ok_or_else(|| schema(&p, "missing field"))?, &p)
    };
    Ok(ControllerGains { g1: get("G1")?, g2: get("G2")?, g3: get("G3")?, a_c: get("A_c")? })
}

fn string(map: &Map<String, Value>, key: &str) -> Result<Option<String>, FormatError> {
    match map.get(key) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(schema(key, "expected a string")),
    }
}

pub fn parse_network(text: &[u8]) -> Result<NetworkDescription, FormatError> {
    parse_network_with_tol(text, DEFAULT_TOL)
}

/// As [`parse_network`], with `tol` for the Hermiticity and unitarity checks.
pub fn parse_network_with_tol(text: &[u8], tol: f64) -> Result<NetworkDescription, FormatError> {
    let value: Value = serde_json::from_slice(text).map_err(|e| syntax_error(&e))?;
    let mut allowed = vec!["name", "comment", "plant", "topology", "gains"];
    allowed.extend(PLANT_KEYS);
    let top = object(&value, "", &allowed)?;
    let inline = PLANT_KEYS.iter().any(|k| top.contains_key(*k));
    let plant = match top.get("plant") {
        Some(_) if inline => return Err(schema("plant", "plant given both inline and under \"plant\"")),
        Some(v) => plant(object(v, "plant", &PLANT_KEYS)?, "plant", tol)?,
        None if inline => plant(top, "", tol)?,
        None => return Err(schema("plant", "missing field")),
    };
    let desc = NetworkDescription {
        name: string(top, "name")?,
        comment: string(top, "comment")?,
        plant,
        topology: top.get("topology").map(|v| topology(v, "topology")).transpose()?,
        gains: top.get("gains").map(|v| gains(v, "gains")).transpose()?,
    };
    desc.validate(tol)?;
    Ok(desc)
}

enum Node {
    Str(String),
    Int(u64),
    Num(f64),
    List(Vec<Node>),
    Obj(Vec<(String, Node)>),
}

fn complex_node(z: C64) -> Node {
    Node::List(vec![Node::Num(z.re), Node::Num(z.im)])
}

fn matrix_node(m: &CMatrix) -> Node {
    Node::List((0..m.rows()).map(|i| Node::List((0..m.cols()).map(|j| complex_node(m[(i, j)])).collect())).collect())
}

fn obj(mut fields: Vec<(String, Node)>) -> Node {
    fields.sort_by(|a, b| a.0.cmp(&b.0));
    Node::Obj(fields)
}

fn channel_node(items: impl Iterator<Item = (ChannelLabel, CMatrix)>) -> Node {
    obj(items.map(|(l, m)| (l.as_str().to_string(), matrix_node(&m))).collect())
}

fn is_matrix(items: &[Node]) -> bool {
    items.iter().all(|r| matches!(r, Node::List(_)))
}

fn write_node(out: &mut String, node: &Node, indent: usize) {
    match node {
        Node::Str(s) => out.push_str(&serde_json::to_string(s).unwrap_or_default()),
        Node::Int(i) => {
            let _ = write!(out, "{i}");
        }
        Node::Num(x) => {
            let x = if *x == 0.0 { 0.0 } else { *x };
            let _ = write!(out, "{x:.16e}");
        }
        Node::List(items) if !items.is_empty() && is_matrix(items) && indent > 0 => {
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push_str(",\n");
                    out.push_str(&" ".repeat(indent + 1));
                }
                write_node(out, item, 0);
            }
            out.push(']');
        }
        Node::List(items) => {
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                write_node(out, item, 0);
            }
            out.push(']');
        }
        Node::Obj(fields) => {
            if fields.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (k, (key, value)) in fields.iter().enumerate() {
                out.push_str(&" ".repeat(indent + 2));
                out.push_str(&serde_json::to_string(key).unwrap_or_default());
                out.push_str(": ");
                let start = out.rfind('\n').map_or(0, |p| p + 1);
                let col = out.len() - start;
                write_node(out, value, if matches!(value, Node::Obj(_)) { indent + 2 } else { col });
                if k + 1 < fields.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&" ".repeat(indent));
            out.push('}');
        }
    }
}

/// Canonical text: sorted keys, every float as `{:.16e}`, trailing newline.
pub fn serialize_network(desc: &NetworkDescription) -> Vec<u8> {
    let mut fields = Vec::new();
    if let Some(name) = &desc.name {
        fields.push(("name".to_string(), Node::Str(name.clone())));
    }
    if let Some(comment) = &desc.comment {
        fields.push(("comment".to_string(), Node::Str(comment.clone())));
    }
    let plant = match &desc.plant {
        PlantSpec::Hamiltonian(hc) => obj(vec![
            ("M".into(), matrix_node(hc.m())),
            ("couplings".into(), channel_node(hc.couplings().iter().cloned())),
        ]),
        PlantSpec::Raw(sys) => {
            let mut f = vec![
                ("A".into(), matrix_node(sys.a())),
                ("B".into(), channel_node(sys.ports().iter().map(|p| (p.label, p.b.clone())))),
            ];
            if sys.ports().iter().any(|p| p.c.is_some()) {
                f.push((
                    "C".into(),
                    channel_node(sys.ports().iter().filter_map(|p| p.c.clone().map(|c| (p.label, c)))),
                ));
            }
            obj(f)
        }
    };
    fields.push(("plant".into(), plant));
    if let Some(top) = &desc.topology {
        let node = match top {
            Topology::Observer => Node::Str("observer".into()),
            Topology::Yamamoto => Node::Str("yamamoto".into()),
            Topology::General { s, w, y_width } => obj(vec![
                ("S".into(), matrix_node(s)),
                ("W".into(), matrix_node(w)),
                ("y_width".into(), Node::Int(*y_width as u64)),
            ]),
        };
        fields.push(("topology".into(), node));
    }
    if let Some(g) = &desc.gains {
        fields.push((
            "gains".into(),
            obj(vec![
                ("A_c".into(), matrix_node(&g.a_c)),
                ("G1".into(), matrix_node(&g.g1)),
                ("G2".into(), matrix_node(&g.g2)),
                ("G3".into(), matrix_node(&g.g3)),
            ]),
        ));
    }
    let mut out = String::new();
    write_node(&mut out, &obj(fields), 0);
    out.push('\n');
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixkit::c;
    use crate::random;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const EXAMPLE1: &str = r#"{
  "name": "example1",
  "plant": {"M": [[[0.5, 0]]], "couplings": {"w": [[[1, 0]]], "u": [[[1, 0]]]}},
  "topology": "observer",
  "gains": {"G1": [[[-1, 0]]], "G2": [[[-1, 0]]], "G3": [[[0, 0]]], "A_c": [[[-1, -0.5]]]}
}"#;

    #[test]
    fn minimal_cavity() {
        let d = parse_network(br#"{"M": [[[0,0]]], "couplings": {"w": [[[1,0]]]}}"#).unwrap();
        let a = d.system().a().clone();
        assert!((a[(0, 0)] - c(-0.5, 0.0)).norm() < 1e-15);
        assert!(d.topology.is_none());
    }

    #[test]
    fn example1_round_trip_is_bit_identical() {
        let d = parse_network(EXAMPLE1.as_bytes()).unwrap();
        let text = serialize_network(&d);
        let again = parse_network(&text).unwrap();
        assert_eq!(again, d);
        assert_eq!(serialize_network(&again), text);
        assert!(text.ends_with(b"\n"));
        let sw = d.scattering_pair().unwrap().unwrap();
        assert_eq!((sw.n_y(), sw.n_u()), (1, 1));
    }

    #[test]
    fn full_precision_is_kept() {
        let g = 2f64.sqrt() / 3.0;
        let hc = HamiltonianCoupling::new(
            CMatrix::scalar(c(0.1, 0.0)),
            vec![(ChannelLabel::W, CMatrix::scalar(c(g, -g / 7.0)))],
            1e-9,
        )
        .unwrap();
        let d = NetworkDescription::new(PlantSpec::Hamiltonian(hc));
        let back = parse_network(&serialize_network(&d)).unwrap();
        let PlantSpec::Hamiltonian(h) = back.plant else { panic!() };
        assert_eq!(h.coupling(ChannelLabel::W).unwrap()[(0, 0)], c(g, -g / 7.0));
    }

    #[test]
    fn non_unitary_s_names_field() {
        let text = r#"{"plant": {"M": [[[0,0]]], "couplings": {"w": [[[1,0]]], "u": [[[1,0]]]}},
            "topology": {"S": [[[1,0],[1,0]],[[0,0],[1,0]]], "W": [[[1,0],[0,0]],[[0,0],[1,0]]], "y_width": 1}}"#;
        let e = parse_network(text.as_bytes()).unwrap_err();
        assert!(matches!(e, FormatError::Validation { .. }));
        assert_eq!(e.path(), Some("topology.S"));
    }

    #[test]
    fn diagnostics_carry_paths() {
        let cases: [(&str, &str); 6] = [
            (r#"{"plant": {"M": [[[0,0]]], "couplings": {"q": [[[1,0]]]}}}"#, "plant.couplings.q"),
            (r#"{"plant": {"M": [[[0,0],[1,0]],[[2,0],[0,0]]]}}"#, "plant.M"),
            (r#"{"plant": {"M": [[[0,0]]]}, "extra": 1}"#, "extra"),
            (r#"{"plant": {"M": [[[0,0]]], "couplings": {"w": [[1]]}}}"#, "plant.couplings.w[0][0]"),
            (r#"{"plant": {"A": [[[0,0]]], "B": {"w": [[[1,0],[1,0]]]}, "C": {"w": [[[1,0]]]}}}"#, "plant.C.w"),
            (r#"{"plant": {"M": [[[0,0]]]}, "topology": "ring"}"#, "topology"),
        ];
        for (text, path) in cases {
            let e = parse_network(text.as_bytes()).unwrap_err();
            assert_eq!(e.path(), Some(path), "{e}");
        }
        let e = parse_network(b"{\n  \"plant\": [1,\n}").unwrap_err();
        assert!(matches!(e, FormatError::Syntax { line: 3, column: 1, .. }), "{e}");
    }

    #[test]
    fn raw_plant_may_be_unrealizable() {
        let d = parse_network(br#"{"A": [[[-0.5,0]]], "B": {"w": [[[-1,0]]]}, "C": {"w": [[[2,0]]]}}"#).unwrap();
        assert!(matches!(d.plant, PlantSpec::Raw(_)));
    }

    fn random_description(rng: &mut ChaCha8Rng) -> NetworkDescription {
        use rand::Rng;
        let n = rng.gen_range(1..4);
        let ky = rng.gen_range(1..3);
        let ku = rng.gen_range(1..3);
        let hc = HamiltonianCoupling::new(
            random::hermitian(rng, n),
            vec![(ChannelLabel::W, random::matrix(rng, ky, n)), (ChannelLabel::U, random::matrix(rng, ku, n))],
            1e-9,
        )
        .unwrap();
        let mut d = NetworkDescription::new(PlantSpec::Hamiltonian(hc));
        d.name = Some(format!("net-{}", rng.gen::<u32>()));
        let p = ky + ku;
        d.topology = Some(Topology::General { s: random::unitary(rng, p), w: random::unitary(rng, p), y_width: ky });
        d.gains = Some(ControllerGains {
            g1: random::matrix(rng, n, ky),
            g2: random::matrix(rng, n, ku),
            g3: random::matrix(rng, n, n),
            a_c: random::matrix(rng, n, n),
        });
        d
    }

    #[test]
    fn random_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let d = random_description(&mut rng);
            let text = serialize_network(&d);
            let back = parse_network(&text).unwrap();
            assert_eq!(back, d);
            assert_eq!(serialize_network(&back), text);
        }
    }

    proptest! {
        #[test]
        fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
            let _ = parse_network(&bytes);
        }

        #[test]
        fn mutated_documents_never_panic(pos in 0usize..200, byte in any::<u8>()) {
            let mut text = EXAMPLE1.as_bytes().to_vec();
            let k = pos % text.len();
            text[k] = byte;
            let _ = parse_network(&text);
        }
    }
}
