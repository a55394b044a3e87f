//! Flat-file graph exports: edge list and node table CSVs, and GraphML.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::{Edge, SessionGraph};

#[derive(Debug, Serialize, Deserialize)]
struct EdgeRow {
    src_id: u32,
    dst_id: u32,
    weight: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NodeRow {
    pub id: u32,
    pub resource: String,
    pub requests: u64,
    pub in_degree: u64,
    pub out_degree: u64,
}

/// `src_id,dst_id,weight`
pub fn write_edge_list<W: Write>(graph: &SessionGraph, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in graph.edges() {
        w.serialize(EdgeRow {
            src_id: e.src,
            dst_id: e.dst,
            weight: e.weight,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// `id,resource,requests,in_degree,out_degree`
pub fn write_node_table<W: Write>(graph: &SessionGraph, out: W) -> csv::Result<()> {
    let (k_in, k_out) = graph.degrees();
    let mut w = csv::Writer::from_writer(out);
    for (i, resource) in graph.resources().iter().enumerate() {
        w.serialize(NodeRow {
            id: i as u32,
            resource: resource.clone(),
            requests: graph.requests()[i],
            in_degree: k_in[i],
            out_degree: k_out[i],
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_node_table<R: io::Read>(input: R) -> csv::Result<Vec<NodeRow>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

/// Rebuilds a graph from its node table and edge list. Node ids must be
/// `0..n` in order. Self-loop tallies are not part of either file.
pub fn read_graph<N: io::Read, E: io::Read>(nodes: N, edges: E) -> Result<SessionGraph, csv::Error> {
    let rows = read_node_table(nodes)?;
    for (i, row) in rows.iter().enumerate() {
        if row.id as usize != i {
            return Err(csv::Error::from(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("node ids must be consecutive from 0, found {} at row {i}", row.id),
            )));
        }
    }
    let n = rows.len() as u32;
    let mut list = Vec::new();
    for row in csv::Reader::from_reader(edges).deserialize() {
        let row: EdgeRow = row?;
        if row.src_id >= n || row.dst_id >= n {
            return Err(csv::Error::from(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("edge ({}, {}) references unknown node", row.src_id, row.dst_id),
            )));
        }
        list.push(Edge {
            src: row.src_id,
            dst: row.dst_id,
            weight: row.weight,
        });
    }
    let (resources, requests) = rows.into_iter().map(|r| (r.resource, r.requests)).unzip();
    Ok(SessionGraph::from_parts(resources, requests, list))
}

fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            // not representable in XML 1.0
            c if (c as u32) < 0x20 && !matches!(c, '\t' | '\n' | '\r') => out.push('\u{fffd}'),
            c => out.push(c),
        }
    }
    out
}

/// GraphML with node attributes `resource`, `requests` and edge attribute
/// `weight`, readable by Gephi and networkx.
pub fn write_graphml<W: Write>(graph: &SessionGraph, mut out: W) -> io::Result<()> {
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(
        out,
        r#"<graphml xmlns="http://graphml.graphdrawing.org/xmlns" xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" xsi:schemaLocation="http://graphml.graphdrawing.org/xmlns http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd">"#
    )?;
    writeln!(
        out,
        r#"  <key id="resource" for="node" attr.name="resource" attr.type="string"/>"#
    )?;
    writeln!(
        out,
        r#"  <key id="requests" for="node" attr.name="requests" attr.type="long"/>"#
    )?;
    writeln!(
        out,
        r#"  <key id="weight" for="edge" attr.name="weight" attr.type="long"/>"#
    )?;
    writeln!(out, r#"  <graph id="G" edgedefault="directed">"#)?;
    for (i, resource) in graph.resources().iter().enumerate() {
        writeln!(
            out,
            r#"    <node id="n{i}"><data key="resource">{}</data><data key="requests">{}</data></node>"#,
            escape_xml(resource),
            graph.requests()[i]
        )?;
    }
    for e in graph.edges() {
        writeln!(
            out,
            r#"    <edge source="n{}" target="n{}"><data key="weight">{}</data></edge>"#,
            e.src, e.dst, e.weight
        )?;
    }
    writeln!(out, "  </graph>")?;
    writeln!(out, "</graphml>")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sessionizer::{AgentKey, Request, Session};

    fn graph() -> SessionGraph {
        let s = |p: &[&str]| Session {
            agent: AgentKey::default(),
            requests: p
                .iter()
                .map(|r| Request {
                    resource: r.to_string(),
                    timestamp: 0,
                })
                .collect(),
        };
        SessionGraph::build(&[s(&["/a", "/b?x=<1>&y", "/a"]), s(&["/a", "/b?x=<1>&y"])])
    }

    #[test]
    fn csv_exports() {
        let g = graph();
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "src_id,dst_id,weight\n0,1,2\n1,0,1\n");

        let mut buf = Vec::new();
        write_node_table(&g, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "id,resource,requests,in_degree,out_degree\n0,/a,3,1,1\n1,/b?x=<1>&y,2,1,1\n"
        );
    }

    #[test]
    fn csv_read_back() {
        let g = graph();
        let (mut nodes, mut edges) = (Vec::new(), Vec::new());
        write_node_table(&g, &mut nodes).unwrap();
        write_edge_list(&g, &mut edges).unwrap();
        let back = read_graph(nodes.as_slice(), edges.as_slice()).unwrap();
        assert_eq!(back.resources(), g.resources());
        assert_eq!(back.edges(), g.edges());
        assert_eq!(back.requests(), g.requests());

        let bad = read_graph(
            "id,resource,requests,in_degree,out_degree\n0,/a,1,0,0\n".as_bytes(),
            "src_id,dst_id,weight\n0,5,1\n".as_bytes(),
        );
        assert!(bad.is_err());
    }

    #[test]
    fn graphml_escapes() {
        let mut buf = Vec::new();
        write_graphml(&graph(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains(r#"<data key="resource">/b?x=&lt;1&gt;&amp;y</data>"#));
        assert!(text.contains(r#"<edge source="n0" target="n1"><data key="weight">2</data></edge>"#));
        assert_eq!(text.matches("<node ").count(), 2);
        assert_eq!(escape_xml("a\u{1}b"), "a\u{fffd}b");
    }
}
