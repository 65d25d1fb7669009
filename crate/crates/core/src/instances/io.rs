use std::collections::BTreeMap;

use num_traits::Signed;
use serde_json::{json, Map, Value};

use super::{
    EcInstance, Edge, ElemInstance, Graph, HyperInstance, Hyperedge, Hypergraph, Instance,
    PairRequirements,
};
use crate::rational::{self, Rational};
use crate::vertex_set::{VertexSet, MAX_VERTICES};

/// Schema or validation failure, located by a JSON field path.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message} at {path}")]
pub struct ParseError {
    pub path: String,
    pub message: String,
}

fn fail<T>(path: impl Into<String>, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        path: path.into(),
        message: message.into(),
    })
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, ParseError> {
    match obj.get(key) {
        Some(v) => Ok(v),
        None => fail(join(path, key), "missing field"),
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn as_uint(v: &Value, path: &str) -> Result<usize, ParseError> {
    match v.as_u64() {
        Some(u) => Ok(u as usize),
        None => fail(path, "expected a nonnegative integer"),
    }
}

fn as_vertex(v: &Value, n: usize, path: &str) -> Result<usize, ParseError> {
    let u = as_uint(v, path)?;
    if u >= n {
        return fail(path, format!("vertex {u} out of range (n = {n})"));
    }
    Ok(u)
}

fn as_cost(v: &Value, path: &str) -> Result<Rational, ParseError> {
    let c = match rational::from_json(v) {
        Ok(c) => c,
        Err(e) => return fail(path, e.to_string()),
    };
    if c.is_negative() {
        return fail(path, "negative cost");
    }
    Ok(c)
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, ParseError> {
    match v.as_array() {
        Some(a) => Ok(a),
        None => fail(path, "expected an array"),
    }
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, ParseError> {
    match v.as_object() {
        Some(o) => Ok(o),
        None => fail(path, "expected an object"),
    }
}

fn parse_edges(obj: &Map<String, Value>, n: usize) -> Result<Graph, ParseError> {
    let mut g = Graph::new(n);
    for (i, e) in as_array(field(obj, "edges", "")?, "edges")?
        .iter()
        .enumerate()
    {
        let p = format!("edges[{i}]");
        let eo = as_object(e, &p)?;
        let u = as_vertex(field(eo, "u", &p)?, n, &join(&p, "u"))?;
        let v = as_vertex(field(eo, "v", &p)?, n, &join(&p, "v"))?;
        if u == v {
            return fail(p, "self-loop");
        }
        let cost = as_cost(field(eo, "cost", &p)?, &join(&p, "cost"))?;
        g.edges.push(Edge { u, v, cost });
    }
    Ok(g)
}

fn parse_hyperedges(obj: &Map<String, Value>, n: usize) -> Result<Hypergraph, ParseError> {
    let mut h = Hypergraph::new(n);
    for (i, e) in as_array(field(obj, "hyperedges", "")?, "hyperedges")?
        .iter()
        .enumerate()
    {
        let p = format!("hyperedges[{i}]");
        let eo = as_object(e, &p)?;
        let vp = join(&p, "vertices");
        let mut vertices = VertexSet::EMPTY;
        for (j, v) in as_array(field(eo, "vertices", &p)?, &vp)?
            .iter()
            .enumerate()
        {
            let vpath = format!("{vp}[{j}]");
            let u = as_vertex(v, n, &vpath)?;
            if vertices.contains(u) {
                return fail(vpath, format!("duplicate vertex {u}"));
            }
            vertices.insert(u);
        }
        if vertices.len() < 2 {
            return fail(vp, "hyperedge of size < 2");
        }
        let cost = as_cost(field(eo, "cost", &p)?, &join(&p, "cost"))?;
        h.hyperedges.push(Hyperedge { vertices, cost });
    }
    Ok(h)
}

fn parse_requirements(
    obj: &Map<String, Value>,
    n: usize,
    terminals: Option<VertexSet>,
) -> Result<PairRequirements, ParseError> {
    let mut reqs = PairRequirements::new();
    let mut seen = std::collections::BTreeSet::new();
    for (i, r) in as_array(field(obj, "requirements", "")?, "requirements")?
        .iter()
        .enumerate()
    {
        let p = format!("requirements[{i}]");
        let ro = as_object(r, &p)?;
        let u = as_vertex(field(ro, "u", &p)?, n, &join(&p, "u"))?;
        let v = as_vertex(field(ro, "v", &p)?, n, &join(&p, "v"))?;
        if u == v {
            return fail(p, "requirement between a vertex and itself");
        }
        let value = as_uint(field(ro, "r", &p)?, &join(&p, "r"))?;
        let value = match u32::try_from(value) {
            Ok(x) => x,
            Err(_) => return fail(join(&p, "r"), "requirement too large"),
        };
        if let Some(t) = terminals {
            for (w, key) in [(u, "u"), (v, "v")] {
                if !t.contains(w) && value > 0 {
                    return fail(join(&p, key), format!("requirement on non-terminal {w}"));
                }
            }
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return fail(p, "duplicate requirement pair");
        }
        reqs.set(u, v, value);
    }
    Ok(reqs)
}

fn reject_fields(obj: &Map<String, Value>, kind: &str, keys: &[&str]) -> Result<(), ParseError> {
    for key in keys {
        if obj.contains_key(*key) {
            return fail(*key, format!("field not allowed for kind {kind:?}"));
        }
    }
    Ok(())
}

/// Parses and validates an instance file.
pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let root: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return fail("$", format!("invalid JSON: {e}")),
    };
    let obj = as_object(&root, "$")?;
    let kind = match field(obj, "kind", "")?.as_str() {
        Some(k) => k,
        None => return fail("kind", "expected a string"),
    };
    let n = as_uint(field(obj, "n", "")?, "n")?;
    if n > MAX_VERTICES {
        return fail(
            "n",
            format!("at most {MAX_VERTICES} vertices are supported"),
        );
    }
    match kind {
        "ec" => {
            reject_fields(obj, kind, &["hyperedges", "terminals", "node_weights"])?;
            let graph = parse_edges(obj, n)?;
            let requirements = parse_requirements(obj, n, None)?;
            Ok(Instance::Ec(EcInstance {
                graph,
                requirements,
            }))
        }
        "elem" => {
            reject_fields(obj, kind, &["hyperedges"])?;
            let graph = parse_edges(obj, n)?;
            let mut terminals = VertexSet::EMPTY;
            for (i, t) in as_array(field(obj, "terminals", "")?, "terminals")?
                .iter()
                .enumerate()
            {
                let p = format!("terminals[{i}]");
                let v = as_vertex(t, n, &p)?;
                if terminals.contains(v) {
                    return fail(p, format!("duplicate terminal {v}"));
                }
                terminals.insert(v);
            }
            let mut node_weights = BTreeMap::new();
            if let Some(w) = obj.get("node_weights") {
                for (key, value) in as_object(w, "node_weights")? {
                    let p = format!("node_weights.{key}");
                    let v: usize = match key.parse() {
                        Ok(v) if v < n => v,
                        _ => return fail(p, "key is not a vertex id"),
                    };
                    if terminals.contains(v) {
                        return fail(p, format!("weight on terminal {v}"));
                    }
                    node_weights.insert(v, as_cost(value, &p)?);
                }
            }
            let requirements = parse_requirements(obj, n, Some(terminals))?;
            Ok(Instance::Elem(ElemInstance {
                graph,
                terminals,
                requirements,
                node_weights,
            }))
        }
        "hyper" => {
            reject_fields(obj, kind, &["edges", "terminals", "node_weights"])?;
            let hypergraph = parse_hyperedges(obj, n)?;
            let requirements = parse_requirements(obj, n, None)?;
            Ok(Instance::Hyper(HyperInstance {
                hypergraph,
                requirements,
            }))
        }
        other => fail("kind", format!("unknown kind {other:?}")),
    }
}

fn edges_json(g: &Graph) -> Value {
    Value::Array(
        g.edges
            .iter()
            .map(|e| json!({"u": e.u, "v": e.v, "cost": rational::to_json(&e.cost)}))
            .collect(),
    )
}

fn requirements_json(r: &PairRequirements) -> Value {
    Value::Array(
        r.iter()
            .map(|(u, v, r)| json!({"u": u, "v": v, "r": r}))
            .collect(),
    )
}

pub fn instance_to_json(inst: &Instance) -> Value {
    let mut obj = Map::new();
    obj.insert("kind".into(), json!(inst.kind().as_str()));
    obj.insert("n".into(), json!(inst.n()));
    match inst {
        Instance::Ec(i) => {
            obj.insert("edges".into(), edges_json(&i.graph));
        }
        Instance::Elem(i) => {
            obj.insert("edges".into(), edges_json(&i.graph));
            obj.insert("terminals".into(), json!(i.terminals.to_vec()));
            if !i.node_weights.is_empty() {
                let weights: Map<String, Value> = i
                    .node_weights
                    .iter()
                    .map(|(v, w)| (v.to_string(), rational::to_json(w)))
                    .collect();
                obj.insert("node_weights".into(), Value::Object(weights));
            }
        }
        Instance::Hyper(i) => {
            let hs = i
                .hypergraph
                .hyperedges
                .iter()
                .map(|h| json!({"vertices": h.vertices.to_vec(), "cost": rational::to_json(&h.cost)}))
                .collect();
            obj.insert("hyperedges".into(), Value::Array(hs));
        }
    }
    obj.insert(
        "requirements".into(),
        requirements_json(inst.requirements()),
    );
    Value::Object(obj)
}

/// Pretty-printed JSON with a trailing newline.
pub fn serialize_instance(inst: &Instance) -> String {
    let mut s = serde_json::to_string_pretty(&instance_to_json(inst)).expect("instance JSON");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    const CYCLE: &str = r#"{"kind":"ec","n":4,
        "edges":[{"u":0,"v":1,"cost":1},{"u":1,"v":2,"cost":1},{"u":2,"v":3,"cost":1},{"u":3,"v":0,"cost":1}],
        "requirements":[{"u":0,"v":1,"r":1},{"u":0,"v":2,"r":1},{"u":0,"v":3,"r":1},
                        {"u":1,"v":2,"r":1},{"u":1,"v":3,"r":1},{"u":2,"v":3,"r":1}]}"#;

    #[test]
    fn parses_cycle() {
        let Instance::Ec(inst) = parse_instance(CYCLE).unwrap() else {
            panic!()
        };
        assert_eq!(inst.graph.n, 4);
        assert_eq!(inst.graph.edges.len(), 4);
        assert_eq!(inst.requirements.len(), 6);
    }

    #[test]
    fn parses_hyperedge() {
        let text = r#"{"kind":"hyper","n":3,"hyperedges":[{"vertices":[0,1,2],"cost":0}],"requirements":[]}"#;
        let Instance::Hyper(inst) = parse_instance(text).unwrap() else {
            panic!()
        };
        assert_eq!(inst.hypergraph.hyperedges[0].vertices.len(), 3);
        assert_eq!(inst.hypergraph.hyperedges[0].cost, int(0));
    }

    #[test]
    fn negative_cost_has_path() {
        let text = r#"{"kind":"ec","n":2,"edges":[{"u":0,"v":1,"cost":"-1"}],"requirements":[]}"#;
        let err = parse_instance(text).unwrap_err();
        assert_eq!(err.to_string(), "negative cost at edges[0].cost");
    }

    #[test]
    fn validation_errors() {
        let small =
            r#"{"kind":"hyper","n":3,"hyperedges":[{"vertices":[1],"cost":1}],"requirements":[]}"#;
        assert_eq!(
            parse_instance(small).unwrap_err().path,
            "hyperedges[0].vertices"
        );

        let nonterm = r#"{"kind":"elem","n":3,"edges":[{"u":0,"v":1,"cost":1}],"terminals":[0,2],
            "requirements":[{"u":0,"v":1,"r":1}]}"#;
        let err = parse_instance(nonterm).unwrap_err();
        assert_eq!(err.path, "requirements[0].v");
        assert!(err.message.contains("non-terminal"));

        let weighted_terminal = r#"{"kind":"elem","n":3,"edges":[],"terminals":[0,2],
            "node_weights":{"0":3},"requirements":[]}"#;
        assert_eq!(
            parse_instance(weighted_terminal).unwrap_err().path,
            "node_weights.0"
        );

        let float = r#"{"kind":"ec","n":2,"edges":[{"u":0,"v":1,"cost":0.5}],"requirements":[]}"#;
        assert_eq!(parse_instance(float).unwrap_err().path, "edges[0].cost");

        assert_eq!(
            parse_instance(r#"{"kind":"ec","n":2}"#).unwrap_err().path,
            "edges"
        );
        assert_eq!(parse_instance("[1]").unwrap_err().path, "$");
    }

    #[test]
    fn rationals_serialize_in_lowest_terms() {
        let mut g = Graph::new(3);
        g.add_edge(0, 1, ratio(3, 2));
        g.add_edge(1, 2, ratio(4, 2));
        let inst = Instance::Ec(EcInstance {
            graph: g,
            requirements: PairRequirements::new(),
        });
        let text = serialize_instance(&inst);
        assert!(text.contains("\"3/2\""));
        assert!(text.contains("\"cost\": 2"));
        assert_eq!(parse_instance(&text).unwrap(), inst);
    }

    #[test]
    fn elem_round_trip() {
        let text = r#"{"kind":"elem","n":4,"edges":[{"u":0,"v":3,"cost":"1/3"},{"u":3,"v":1,"cost":2}],
            "terminals":[0,1],"node_weights":{"3":"7/2"},"requirements":[{"u":1,"v":0,"r":1}]}"#;
        let inst = parse_instance(text).unwrap();
        let again = parse_instance(&serialize_instance(&inst)).unwrap();
        assert_eq!(inst, again);
    }
}
