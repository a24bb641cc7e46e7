//! Dendrogram export: Newick, Graphviz DOT and a self-contained SVG.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::cluster::Dendrogram;
use crate::evaluate::Truth;
use crate::numfmt::format_sig;

fn newick_label(name: &str) -> String {
    let plain = !name.is_empty() && name.chars().all(|c| !c.is_whitespace() && !"()[]':;,".contains(c));
    if plain {
        name.to_string()
    } else {
        format!("'{}'", name.replace('\'', "''"))
    }
}

/// Newick string; branch lengths are parent height minus child height.
pub fn to_newick(dend: &Dendrogram) -> String {
    fn walk(dend: &Dendrogram, node: usize, out: &mut String) {
        match dend.children(node) {
            None => out.push_str(&newick_label(&dend.leaves[node])),
            Some((l, r)) => {
                let h = dend.node_height(node);
                out.push('(');
                walk(dend, l, out);
                let _ = write!(out, ":{}", format_sig(h - dend.node_height(l)));
                out.push(',');
                walk(dend, r, out);
                let _ = write!(out, ":{}", format_sig(h - dend.node_height(r)));
                out.push(')');
            }
        }
    }
    let mut out = String::new();
    walk(dend, dend.root(), &mut out);
    out.push_str(";\n");
    out
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz digraph: boxes for documents, points for merges.
pub fn to_dot(dend: &Dendrogram) -> String {
    let n = dend.n_leaves();
    let mut out = String::from("digraph dendrogram {\n  rankdir=LR;\n");
    for (i, leaf) in dend.leaves.iter().enumerate() {
        let _ = writeln!(out, "  n{i} [label=\"{}\", shape=box];", dot_escape(leaf));
    }
    for (i, m) in dend.merges.iter().enumerate() {
        let node = n + i;
        let _ = writeln!(out, "  n{node} [label=\"\", shape=point, xlabel=\"{}\"];", format_sig(m.height));
        let _ = writeln!(out, "  n{node} -> n{};", m.left);
        let _ = writeln!(out, "  n{node} -> n{};", m.right);
    }
    out.push_str("}\n");
    out
}

const PALETTE: [&str; 12] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
    "#393b79", "#637939",
];

/// Figures shown above the SVG dendrogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgCaption {
    pub n_features: usize,
    pub ac: f64,
    pub purity: Option<f64>,
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Horizontal dendrogram, root on the left. Leaf labels are coloured by
/// truth class when `truth` is given.
pub fn to_svg(dend: &Dendrogram, truth: Option<&Truth>, caption: &SvgCaption) -> String {
    const ROW: f64 = 18.0;
    const LEFT: f64 = 20.0;
    const TOP: f64 = 60.0;
    const WIDTH: f64 = 480.0;
    const LABEL_SPACE: f64 = 220.0;

    let n = dend.n_leaves();
    let order = dend.leaf_order();
    let max_h = dend.merges.last().map(|m| m.height).unwrap_or(0.0);
    let x_of = |h: f64| {
        if max_h > 0.0 {
            LEFT + WIDTH * (1.0 - h / max_h)
        } else {
            LEFT + WIDTH
        }
    };
    let mut y = vec![0.0; 2 * n - 1];
    for (row, &leaf) in order.iter().enumerate() {
        y[leaf] = TOP + ROW * row as f64;
    }
    for (i, m) in dend.merges.iter().enumerate() {
        y[n + i] = (y[m.left] + y[m.right]) / 2.0;
    }

    let colors: BTreeMap<&str, &str> = truth
        .map(|t| {
            let classes: std::collections::BTreeSet<&str> = t.values().map(String::as_str).collect();
            classes.into_iter().enumerate().map(|(i, c)| (c, PALETTE[i % PALETTE.len()])).collect()
        })
        .unwrap_or_default();

    let height = TOP + ROW * n as f64 + 20.0;
    let width = LEFT + WIDTH + LABEL_SPACE;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let purity = caption.purity.map(|p| format!("{p:.2}")).unwrap_or_else(|| "n/a".into());
    let _ = writeln!(
        out,
        "<g id=\"caption\"><text x=\"{LEFT}\" y=\"20\">features: {}</text><text x=\"{LEFT}\" y=\"36\">AC: {:.2}</text><text x=\"{LEFT}\" y=\"52\">purity: {purity}</text></g>",
        caption.n_features, caption.ac
    );
    let _ = writeln!(out, "<g id=\"tree\" stroke=\"black\" stroke-width=\"1\" fill=\"none\">");
    for m in &dend.merges {
        let x = x_of(m.height);
        let _ = writeln!(
            out,
            "<path d=\"M{:.2},{:.2} H{x:.2} V{:.2} H{:.2}\"/>",
            x_of(dend.node_height(m.left)),
            y[m.left],
            y[m.right],
            x_of(dend.node_height(m.right)),
        );
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, "<g id=\"leaves\">");
    for &leaf in &order {
        let id = &dend.leaves[leaf];
        let fill = truth.and_then(|t| t.get(id)).and_then(|c| colors.get(c.as_str())).copied().unwrap_or("black");
        let label = match truth.and_then(|t| t.get(id)) {
            Some(class) => format!("{} ({})", xml_escape(id), xml_escape(class)),
            None => xml_escape(id),
        };
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"{fill}\" dominant-baseline=\"middle\">{label}</text>",
            LEFT + WIDTH + 6.0,
            y[leaf]
        );
    }
    let _ = writeln!(out, "</g>\n</svg>");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::Merge;

    fn four() -> Dendrogram {
        Dendrogram::from_merges(
            vec!["a".into(), "b".into(), "c d".into(), "e'f".into()],
            vec![
                Merge { left: 0, right: 1, height: 1.0, size: 2 },
                Merge { left: 2, right: 3, height: 2.0, size: 2 },
                Merge { left: 4, right: 5, height: 5.0, size: 4 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn newick_with_branch_lengths() {
        assert_eq!(to_newick(&four()), "((a:1,b:1):4,('c d':2,'e''f':2):3);\n");
    }

    #[test]
    fn dot_lists_every_node() {
        let dot = to_dot(&four());
        assert_eq!(dot.matches("shape=box").count(), 4);
        assert_eq!(dot.matches("shape=point").count(), 3);
        assert_eq!(dot.matches(" -> ").count(), 6);
    }

    #[test]
    fn svg_colours_by_truth() {
        let truth: Truth = [("a", "X"), ("b", "X"), ("c d", "Y"), ("e'f", "Y")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        let svg = to_svg(&four(), Some(&truth), &SvgCaption { n_features: 12, ac: 0.8, purity: Some(1.0) });
        assert!(svg.contains("features: 12"));
        assert!(svg.contains("AC: 0.80"));
        assert!(svg.contains("purity: 1.00"));
        assert!(svg.contains("fill=\"#1f77b4\" dominant-baseline=\"middle\">a (X)"));
        assert!(svg.contains("fill=\"#d62728\" dominant-baseline=\"middle\">c d (Y)"));
        assert_eq!(svg.matches("<path").count(), 3);
    }
}
