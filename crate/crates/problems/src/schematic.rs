//! Deterministic layered SVG schematic. Nodes sit in columns by their hop
//! distance from ground; ground itself is a rail along the bottom.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write;

use cq_circuit::{parse_netlist, Circuit, ElementKind, GROUND};

use crate::error::Result;
use crate::instance::ProblemInstance;

const COLUMN: f64 = 170.0;
const ROW: f64 = 90.0;
const MARGIN: f64 = 60.0;
const STACK: f64 = 22.0;

pub fn render_schematic(instance: &ProblemInstance) -> Result<String> {
    Ok(render_circuit(&parse_netlist(&instance.netlist)?))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Name and value, i.e. the netlist line with its nodes dropped.
fn label(element: &cq_circuit::Element) -> String {
    let line = element.to_string();
    let skip = if matches!(element.kind, ElementKind::Coupling { .. }) { 0 } else { element.nodes.len() };
    let mut tokens = line.split_whitespace();
    let name = tokens.next().unwrap_or_default();
    let rest: Vec<&str> = tokens.skip(skip).collect();
    if rest.is_empty() { name.to_string() } else { format!("{name} {}", rest.join(" ")) }
}

/// Column of every non-ground node; unreachable islands go after the rest.
fn layers(circuit: &Circuit) -> BTreeMap<String, usize> {
    let mut adjacent: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for e in circuit.elements() {
        let nodes: Vec<&str> = e.nodes.iter().map(String::as_str).collect();
        for &a in &nodes {
            for &b in &nodes {
                if a != b {
                    adjacent.entry(a).or_default().insert(b);
                }
            }
        }
    }
    let mut depth: BTreeMap<String, usize> = BTreeMap::new();
    let mut queue = VecDeque::from([(GROUND, 0usize)]);
    let mut seen = BTreeSet::from([GROUND]);
    while let Some((node, d)) = queue.pop_front() {
        if node != GROUND {
            depth.insert(node.to_string(), d);
        }
        for &next in adjacent.get(node).into_iter().flatten() {
            if seen.insert(next) {
                queue.push_back((next, d + 1));
            }
        }
    }
    let far = depth.values().max().copied().unwrap_or(0) + 1;
    for node in circuit.nodes() {
        if node != GROUND && !depth.contains_key(node) {
            depth.insert(node.clone(), far);
        }
    }
    depth
}

pub fn render_circuit(circuit: &Circuit) -> String {
    let depth = layers(circuit);
    let mut columns: BTreeMap<usize, Vec<&String>> = BTreeMap::new();
    for (node, d) in &depth {
        columns.entry(*d).or_default().push(node);
    }
    let mut position: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    let rows = columns.values().map(Vec::len).max().unwrap_or(1).max(1);
    for (d, nodes) in &columns {
        for (i, node) in nodes.iter().enumerate() {
            position.insert(node.as_str(), (MARGIN + COLUMN * (*d as f64 - 0.5).max(0.0) + COLUMN / 2.0, MARGIN + ROW * i as f64));
        }
    }
    let max_column = columns.keys().max().copied().unwrap_or(1).max(1);
    let width = 2.0 * MARGIN + COLUMN * max_column as f64;
    let rail_y = MARGIN + ROW * rows as f64;
    let height = rail_y + MARGIN;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="monospace" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<title>{}</title>"#, escape(circuit.title()));
    let _ = writeln!(
        svg,
        r#"<line class="rail" data-node="0" x1="{MARGIN:.1}" y1="{rail_y:.1}" x2="{:.1}" y2="{rail_y:.1}" stroke="black" stroke-width="3"/>"#,
        width - MARGIN
    );

    // Elements sharing the same node set are stacked sideways.
    let mut stacked: BTreeMap<Vec<String>, usize> = BTreeMap::new();
    let mut couplings = 0usize;
    for e in circuit.elements() {
        let mut key = e.nodes.clone();
        key.sort();
        let slot = stacked.entry(key).or_default();
        let offset = *slot as f64 * STACK;
        *slot += 1;

        let non_ground: Vec<(f64, f64)> =
            e.nodes.iter().filter(|n| n.as_str() != GROUND).filter_map(|n| position.get(n.as_str()).copied()).collect();
        let anchor_x = if non_ground.is_empty() {
            MARGIN + offset
        } else {
            non_ground.iter().map(|p| p.0).sum::<f64>() / non_ground.len() as f64
        };
        let ends: Vec<(f64, f64)> = e
            .nodes
            .iter()
            .map(|n| if n == GROUND { (anchor_x, rail_y) } else { position.get(n.as_str()).copied().unwrap_or((anchor_x, rail_y)) })
            .collect();
        let (cx, cy) = if ends.is_empty() {
            couplings += 1;
            (width - MARGIN, MARGIN / 2.0 + STACK * couplings as f64)
        } else {
            let n = ends.len() as f64;
            (ends.iter().map(|p| p.0).sum::<f64>() / n + offset, ends.iter().map(|p| p.1).sum::<f64>() / n + offset / 2.0)
        };

        let _ = writeln!(svg, r#"<g class="element" data-name="{}" data-type="{:?}">"#, escape(&e.name), e.element_type());
        for (x, y) in &ends {
            let _ = writeln!(svg, r#"<line x1="{x:.1}" y1="{y:.1}" x2="{cx:.1}" y2="{cy:.1}" stroke="black"/>"#);
        }
        let _ = writeln!(
            svg,
            r#"<rect x="{:.1}" y="{:.1}" width="36" height="16" fill="white" stroke="black"/>"#,
            cx - 18.0,
            cy - 8.0
        );
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, cx + 22.0, cy + 4.0, escape(&label(e)));
        let _ = writeln!(svg, "</g>");
    }
    for (node, (x, y)) in &position {
        let _ = writeln!(
            svg,
            r#"<g class="node" data-node="{0}"><circle cx="{x:.1}" cy="{y:.1}" r="3"/><text x="{1:.1}" y="{2:.1}">{0}</text></g>"#,
            escape(node),
            x + 5.0,
            y - 6.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_drop_nodes() {
        let c = parse_netlist("V1 1 0 DC 12\nR1 1 0 4\nL1 1 2 1m\nL2 2 0 1m\nK1 L1 L2 0.5\n").unwrap();
        let labels: Vec<String> = c.elements().iter().map(label).collect();
        assert_eq!(labels[0], "V1 DC 12");
        assert_eq!(labels[1], "R1 4");
        assert_eq!(labels[4], "K1 L1 L2 0.5");
    }
}
