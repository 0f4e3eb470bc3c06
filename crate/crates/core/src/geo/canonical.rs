//! Canonical region text: JSON with sorted keys and every number printed
//! with six decimals. Used for byte-level determinism checks.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{Point2D, Region};

enum Node {
    Num(f64),
    Str(String),
    List(Vec<Node>),
    Map(BTreeMap<&'static str, Node>),
}

fn emit(node: &Node, out: &mut String) {
    match node {
        Node::Num(v) => {
            let _ = write!(out, "{v:.6}");
        }
        Node::Str(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Node::List(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                emit(item, out);
            }
            out.push(']');
        }
        Node::Map(map) => {
            out.push('{');
            for (i, (k, v)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "\"{k}\":");
                emit(v, out);
            }
            out.push('}');
        }
    }
}

fn ring(points: &[Point2D]) -> Node {
    Node::List(
        points
            .iter()
            .map(|p| Node::List(vec![Node::Num(p.x), Node::Num(p.y)]))
            .collect(),
    )
}

pub fn region_to_canonical_json(region: &Region) -> String {
    let buildings = region
        .buildings
        .iter()
        .map(|b| {
            Node::Map(BTreeMap::from([
                ("id", Node::Num(f64::from(b.id.0))),
                ("name", Node::Str(b.name.clone())),
                ("type", Node::Str(b.btype.as_str().into())),
                ("block_id", Node::Num(f64::from(b.block_id.0))),
                ("capacity", Node::Num(f64::from(b.capacity))),
                ("ring", ring(&b.polygon)),
            ]))
        })
        .collect();
    let blocks = region
        .blocks
        .iter()
        .map(|b| {
            Node::Map(BTreeMap::from([
                ("id", Node::Num(f64::from(b.id.0))),
                ("name", Node::Str(b.name.clone())),
                ("ring", ring(&b.polygon)),
            ]))
        })
        .collect();
    let g = &region.grid;
    let grid = Node::Map(BTreeMap::from([
        ("origin", Node::List(vec![Node::Num(g.origin.x), Node::Num(g.origin.y)])),
        ("cell_size", Node::Num(g.cell_size)),
        ("rows", Node::Num(g.rows as f64)),
        ("cols", Node::Num(g.cols as f64)),
        (
            "counts",
            Node::List(g.counts.iter().map(|&c| Node::Num(f64::from(c))).collect()),
        ),
    ]));
    let root = Node::Map(BTreeMap::from([
        ("buildings", Node::List(buildings)),
        ("blocks", Node::List(blocks)),
        ("grid", grid),
        ("total_population", Node::Num(f64::from(region.total_population))),
    ]));
    let mut out = String::new();
    emit(&root, &mut out);
    out.push('\n');
    out
}
