//! Road-network domain types, parsers for the plain node/edge/connection
//! files, and the builder that validates and indexes them.

use crate::error::{Error, Result};
use crate::xml;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Plain,
    TrafficLight,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    pub from_node: String,
    pub to_node: String,
    pub length: f64,
    pub speed_limit: f64,
    pub lane_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    pub from_edge: String,
    pub from_lane: usize,
    pub to_edge: String,
    pub to_lane: usize,
    pub tl_id: Option<String>,
    pub link_index: Option<usize>,
}

/// Validated, indexed network. Immutable once built.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub connections: Vec<Connection>,
    /// tl node id -> number of controlled links.
    pub link_counts: BTreeMap<String, usize>,
    node_index: HashMap<String, usize>,
    edge_index: HashMap<String, usize>,
    /// (from edge index, from lane, to edge index) -> connection index.
    conn_index: HashMap<(usize, usize, usize), usize>,
}

impl RoadNetwork {
    pub fn node(&self, id: &str) -> Option<&Node> {
        self.node_index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        self.edge_index.get(id).map(|&i| &self.edges[i])
    }

    pub fn edge_idx(&self, id: &str) -> Option<usize> {
        self.edge_index.get(id).copied()
    }

    pub fn connection_between(
        &self,
        from_edge: usize,
        from_lane: usize,
        to_edge: usize,
    ) -> Option<&Connection> {
        self.conn_index
            .get(&(from_edge, from_lane, to_edge))
            .map(|&i| &self.connections[i])
    }

    /// Any connection from `from_edge` to `to_edge`, regardless of lane.
    pub fn any_connection(&self, from_edge: &str, to_edge: &str) -> Option<&Connection> {
        self.connections
            .iter()
            .find(|c| c.from_edge == from_edge && c.to_edge == to_edge)
    }
}

fn parse_node_kind(raw: Option<&str>) -> Result<NodeKind> {
    match raw {
        None | Some("priority") | Some("plain") | Some("unregulated") => Ok(NodeKind::Plain),
        Some("traffic_light") => Ok(NodeKind::TrafficLight),
        Some(other) => Err(Error::schema("node", format!("unknown type '{other}'"))),
    }
}

pub fn parse_nodes(text: &str) -> Result<Vec<Node>> {
    let doc = xml::parse_doc(text)?;
    let mut out = Vec::new();
    for n in xml::elements(&doc, "node") {
        let id = xml::req_attr(&n, "id")?.to_string();
        if id.is_empty() {
            return Err(Error::schema("node", "empty id"));
        }
        let x: f64 = xml::req_parse(&n, "x")?;
        let y: f64 = xml::req_parse(&n, "y")?;
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::schema("node", format!("non-finite coordinates for '{id}'")));
        }
        let kind = parse_node_kind(n.attribute("type"))?;
        out.push(Node { id, x, y, kind });
    }
    Ok(out)
}

pub fn parse_edges(text: &str) -> Result<Vec<Edge>> {
    let doc = xml::parse_doc(text)?;
    let mut out = Vec::new();
    for n in xml::elements(&doc, "edge") {
        let id = xml::req_attr(&n, "id")?.to_string();
        let from_node = xml::req_attr(&n, "from")?.to_string();
        let to_node = xml::req_attr(&n, "to")?.to_string();
        if from_node == to_node {
            return Err(Error::schema(
                "edge",
                format!("edge '{id}' is a self-loop on node '{from_node}'"),
            ));
        }
        let length: f64 = xml::req_parse(&n, "length")?;
        let speed_limit: f64 = xml::req_parse(&n, "speed")?;
        let lane_count: usize = xml::opt_parse(&n, "numLanes")?.unwrap_or(1);
        if !(length > 0.0) {
            return Err(Error::schema("edge", format!("edge '{id}': length must be > 0")));
        }
        if !(speed_limit > 0.0) {
            return Err(Error::schema("edge", format!("edge '{id}': speed must be > 0")));
        }
        if lane_count < 1 {
            return Err(Error::schema("edge", format!("edge '{id}': numLanes must be >= 1")));
        }
        out.push(Edge {
            id,
            from_node,
            to_node,
            length,
            speed_limit,
            lane_count,
        });
    }
    Ok(out)
}

pub fn parse_connections(text: &str) -> Result<Vec<Connection>> {
    let doc = xml::parse_doc(text)?;
    let mut out = Vec::new();
    for n in xml::elements(&doc, "connection") {
        out.push(Connection {
            from_edge: xml::req_attr(&n, "from")?.to_string(),
            to_edge: xml::req_attr(&n, "to")?.to_string(),
            from_lane: xml::opt_parse(&n, "fromLane")?.unwrap_or(0),
            to_lane: xml::opt_parse(&n, "toLane")?.unwrap_or(0),
            tl_id: n.attribute("tl").map(str::to_string),
            link_index: xml::opt_parse(&n, "linkIndex")?,
        });
    }
    Ok(out)
}

pub fn parse_plain_network(
    nodes_text: &str,
    edges_text: &str,
    connections_text: &str,
) -> Result<(Vec<Node>, Vec<Edge>, Vec<Connection>)> {
    Ok((
        parse_nodes(nodes_text)?,
        parse_edges(edges_text)?,
        parse_connections(connections_text)?,
    ))
}

/// Combine parsed collections into a validated network (NETCONVERT analog).
pub fn build_network(
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    connections: Vec<Connection>,
) -> Result<RoadNetwork> {
    let mut node_index = HashMap::new();
    for (i, n) in nodes.iter().enumerate() {
        if node_index.insert(n.id.clone(), i).is_some() {
            return Err(Error::Build(format!("duplicate node id '{}'", n.id)));
        }
    }
    let mut edge_index = HashMap::new();
    for (i, e) in edges.iter().enumerate() {
        if edge_index.insert(e.id.clone(), i).is_some() {
            return Err(Error::Build(format!("duplicate edge id '{}'", e.id)));
        }
        for (role, node) in [("from", &e.from_node), ("to", &e.to_node)] {
            if !node_index.contains_key(node) {
                return Err(Error::Build(format!(
                    "edge '{}' references unknown {role} node '{node}'",
                    e.id
                )));
            }
        }
    }

    let mut conn_index = HashMap::new();
    let mut per_tl: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, c) in connections.iter().enumerate() {
        let from = *edge_index
            .get(&c.from_edge)
            .ok_or_else(|| Error::Build(format!("connection references unknown edge '{}'", c.from_edge)))?;
        let to = *edge_index
            .get(&c.to_edge)
            .ok_or_else(|| Error::Build(format!("connection references unknown edge '{}'", c.to_edge)))?;
        if c.from_lane >= edges[from].lane_count {
            return Err(Error::Build(format!(
                "connection {}->{}: fromLane {} out of range (edge has {} lanes)",
                c.from_edge, c.to_edge, c.from_lane, edges[from].lane_count
            )));
        }
        if c.to_lane >= edges[to].lane_count {
            return Err(Error::Build(format!(
                "connection {}->{}: toLane {} out of range (edge has {} lanes)",
                c.from_edge, c.to_edge, c.to_lane, edges[to].lane_count
            )));
        }
        conn_index.insert((from, c.from_lane, to), i);
        if let Some(tl) = &c.tl_id {
            match node_index.get(tl).map(|&ni| nodes[ni].kind) {
                Some(NodeKind::TrafficLight) => {}
                Some(_) => {
                    return Err(Error::Build(format!(
                        "connection controlled by '{tl}' which is not a traffic_light node"
                    )))
                }
                None => return Err(Error::Build(format!("connection references unknown tl '{tl}'"))),
            }
            let idx = c.link_index.ok_or_else(|| {
                Error::Build(format!(
                    "connection {}->{} controlled by '{tl}' has no linkIndex",
                    c.from_edge, c.to_edge
                ))
            })?;
            per_tl.entry(tl.clone()).or_default().push(idx);
        }
    }

    // Per-tl link indices must be unique and contiguous from 0.
    let mut link_counts = BTreeMap::new();
    for (tl, mut idxs) in per_tl {
        idxs.sort_unstable();
        let n = idxs.len();
        let mut seen = HashSet::new();
        for &i in &idxs {
            if !seen.insert(i) {
                return Err(Error::Build(format!("tl '{tl}': duplicate link index {i}")));
            }
        }
        let gaps: Vec<usize> = (0..n).filter(|i| !seen.contains(i)).collect();
        if !gaps.is_empty() {
            return Err(Error::Build(format!(
                "tl '{tl}': link indices not contiguous from 0, missing {gaps:?}"
            )));
        }
        link_counts.insert(tl, n);
    }

    for n in &nodes {
        if n.kind == NodeKind::TrafficLight && !link_counts.contains_key(&n.id) {
            return Err(Error::Build(format!(
                "traffic_light node '{}' controls no connections",
                n.id
            )));
        }
    }

    Ok(RoadNetwork {
        nodes,
        edges,
        connections,
        link_counts,
        node_index,
        edge_index,
        conn_index,
    })
}

pub fn write_nodes(nodes: &[Node]) -> String {
    let mut s = String::from("<nodes>\n");
    for n in nodes {
        let kind = match n.kind {
            NodeKind::Plain => "priority",
            NodeKind::TrafficLight => "traffic_light",
        };
        writeln!(s, "  <node id=\"{}\" x=\"{}\" y=\"{}\" type=\"{kind}\"/>", n.id, n.x, n.y).unwrap();
    }
    s.push_str("</nodes>\n");
    s
}

pub fn write_edges(edges: &[Edge]) -> String {
    let mut s = String::from("<edges>\n");
    for e in edges {
        writeln!(
            s,
            "  <edge id=\"{}\" from=\"{}\" to=\"{}\" length=\"{}\" speed=\"{}\" numLanes=\"{}\"/>",
            e.id, e.from_node, e.to_node, e.length, e.speed_limit, e.lane_count
        )
        .unwrap();
    }
    s.push_str("</edges>\n");
    s
}

pub fn write_connections(connections: &[Connection]) -> String {
    let mut s = String::from("<connections>\n");
    for c in connections {
        write!(
            s,
            "  <connection from=\"{}\" to=\"{}\" fromLane=\"{}\" toLane=\"{}\"",
            c.from_edge, c.to_edge, c.from_lane, c.to_lane
        )
        .unwrap();
        if let Some(tl) = &c.tl_id {
            write!(s, " tl=\"{tl}\"").unwrap();
        }
        if let Some(i) = c.link_index {
            write!(s, " linkIndex=\"{i}\"").unwrap();
        }
        s.push_str("/>\n");
    }
    s.push_str("</connections>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn node_fields_map_directly() {
        let nodes = parse_nodes(r#"<nodes><node id="n1" x="0" y="0" type="traffic_light"/></nodes>"#)
            .unwrap();
        assert_eq!(nodes.len(), 1);
        assert_eq!(nodes[0].id, "n1");
        assert_eq!(nodes[0].x, 0.0);
        assert_eq!(nodes[0].y, 0.0);
        assert_eq!(nodes[0].kind, NodeKind::TrafficLight);
    }

    #[test]
    fn self_loop_edge_rejected() {
        let err = parse_edges(
            r#"<edges><edge id="e" from="n1" to="n1" length="10" speed="10"/></edges>"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("self-loop"), "{err}");
    }

    #[test]
    fn missing_attribute_names_element_and_attribute() {
        let err = parse_nodes(r#"<nodes><node id="n1" x="0"/></nodes>"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("node") && msg.contains("'y'"), "{msg}");
    }

    #[test]
    fn malformed_xml_reports_line() {
        let err = parse_nodes("<nodes>\n<node id=\"a\" x=\"0\" y=\"0\"\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert!(line >= 1),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn cross_fixture_has_twelve_indexed_connections() {
        let (nodes, edges, conns) = fixtures::cross_plain();
        assert_eq!(edges.len(), 8);
        assert_eq!(conns.len(), 12);
        let mut idxs: Vec<usize> = conns.iter().map(|c| c.link_index.unwrap()).collect();
        idxs.sort_unstable();
        assert_eq!(idxs, (0..12).collect::<Vec<_>>());
        let net = build_network(nodes, edges, conns).unwrap();
        assert_eq!(net.link_counts.get("c"), Some(&12));
    }

    #[test]
    fn light_controlling_nothing_is_a_build_error() {
        let nodes = parse_nodes(
            r#"<nodes><node id="a" x="0" y="0" type="traffic_light"/><node id="b" x="1" y="0"/></nodes>"#,
        )
        .unwrap();
        let edges =
            parse_edges(r#"<edges><edge id="e" from="a" to="b" length="5" speed="10"/></edges>"#)
                .unwrap();
        let err = build_network(nodes, edges, vec![]).unwrap_err();
        assert!(err.to_string().contains("controls no connections"), "{err}");
    }

    #[test]
    fn no_lights_means_empty_link_counts() {
        let nodes = parse_nodes(r#"<nodes><node id="a" x="0" y="0"/><node id="b" x="1" y="0"/></nodes>"#)
            .unwrap();
        let edges =
            parse_edges(r#"<edges><edge id="e" from="a" to="b" length="5" speed="10"/></edges>"#)
                .unwrap();
        let net = build_network(nodes, edges, vec![]).unwrap();
        assert!(net.link_counts.is_empty());
    }

    #[test]
    fn dangling_connection_rejected() {
        let nodes = parse_nodes(r#"<nodes><node id="a" x="0" y="0"/><node id="b" x="1" y="0"/></nodes>"#)
            .unwrap();
        let edges =
            parse_edges(r#"<edges><edge id="e" from="a" to="b" length="5" speed="10"/></edges>"#)
                .unwrap();
        let conns = parse_connections(r#"<connections><connection from="e" to="ghost"/></connections>"#)
            .unwrap();
        let err = build_network(nodes, edges, conns).unwrap_err();
        assert!(err.to_string().contains("ghost"), "{err}");
    }

    #[test]
    fn non_contiguous_link_indices_list_gaps() {
        let (nodes, edges, mut conns) = fixtures::cross_plain();
        conns.retain(|c| c.link_index != Some(3));
        let err = build_network(nodes, edges, conns).unwrap_err();
        assert!(err.to_string().contains("missing"), "{err}");
    }

    #[test]
    fn parse_serialize_parse_round_trip() {
        let (nodes, edges, conns) = fixtures::cross_plain();
        let (n2, e2, c2) = parse_plain_network(
            &write_nodes(&nodes),
            &write_edges(&edges),
            &write_connections(&conns),
        )
        .unwrap();
        assert_eq!(nodes, n2);
        assert_eq!(edges, e2);
        assert_eq!(conns, c2);
    }

    #[test]
    fn build_is_deterministic() {
        let (nodes, edges, conns) = fixtures::cross_plain();
        let a = build_network(nodes.clone(), edges.clone(), conns.clone()).unwrap();
        let b = build_network(nodes, edges, conns).unwrap();
        assert_eq!(a.link_counts, b.link_counts);
        assert_eq!(a.connections, b.connections);
    }
}
