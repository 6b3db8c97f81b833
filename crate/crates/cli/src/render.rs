//! SVG snapshots in the style of the figures: leaf cells shaded by depth
//! (dark near the root, light near the leaves), organization cells overlaid
//! in red, bodies as dots colored by species.

use std::fmt::Write;

use orgtree::{Aabb, NTree, Organization};

/// Canvas size of the longer root side, in pixels.
pub const CANVAS: f64 = 800.0;
/// Lightness of a depth-0 cell, in percent.
pub const ROOT_LIGHTNESS: f64 = 30.0;
/// Lightness of a cell at the tree's maximum depth, in percent.
pub const LEAF_LIGHTNESS: f64 = 90.0;
pub const ORG_OPACITY: f64 = 0.6;

pub fn depth_lightness(depth: u32, max_depth: u32) -> f64 {
    let t = f64::from(depth) / f64::from(max_depth.max(1));
    ROOT_LIGHTNESS + (LEAF_LIGHTNESS - ROOT_LIGHTNESS) * t.min(1.0)
}

fn species_hue(species: usize, count: usize) -> f64 {
    360.0 * species as f64 / count.max(1) as f64
}

struct Viewport {
    root: Aabb,
    scale: f64,
}

impl Viewport {
    fn new(root: Aabb) -> Self {
        let scale = CANVAS / root.width().max(root.height());
        Self { root, scale }
    }

    fn x(&self, x: f64) -> f64 {
        (x - self.root.min.x) * self.scale
    }

    // world y grows upward
    fn y(&self, y: f64) -> f64 {
        (self.root.max.y - y) * self.scale
    }

    fn rect(&self, b: &Aabb) -> (f64, f64, f64, f64) {
        (self.x(b.min.x), self.y(b.max.y), b.width() * self.scale, b.height() * self.scale)
    }
}

/// Renders the tree's leaves, the organizations' cells and the bodies.
/// `species_count` spreads the dot hues around the color wheel.
pub fn render_svg(tree: &NTree, organizations: &[Organization], species_count: usize) -> String {
    let view = Viewport::new(*tree.root_box());
    let w = tree.root_box().width() * view.scale;
    let h = tree.root_box().height() * view.scale;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.3} {h:.3}">"#
    );
    let _ = writeln!(s, r#"<g class="cells" stroke="black" stroke-width="0.5">"#);
    for leaf in tree.leaves() {
        let (x, y, cw, ch) = view.rect(&tree.cell_box(leaf.coord));
        let l = depth_lightness(leaf.coord.depth(), tree.max_depth());
        let _ = writeln!(
            s,
            r#"<rect class="cell" data-depth="{}" x="{x:.3}" y="{y:.3}" width="{cw:.3}" height="{ch:.3}" fill="hsl(0,0%,{l:.1}%)"/>"#,
            leaf.coord.depth()
        );
    }
    s.push_str("</g>\n");
    let _ = writeln!(s, r#"<g class="organizations">"#);
    for org in organizations {
        for c in &org.cells {
            let (x, y, cw, ch) = view.rect(&tree.cell_box(*c));
            let _ = writeln!(
                s,
                r##"<rect class="org" data-org="{}" x="{x:.3}" y="{y:.3}" width="{cw:.3}" height="{ch:.3}" fill="#ff0000" fill-opacity="{ORG_OPACITY}"/>"##,
                org.id
            );
        }
    }
    s.push_str("</g>\n");
    let _ = writeln!(s, r#"<g class="bodies">"#);
    for b in tree.bodies() {
        let hue = species_hue(b.species, species_count);
        let _ = writeln!(
            s,
            r#"<circle cx="{:.3}" cy="{:.3}" r="2" fill="hsl({hue:.0},70%,45%)"/>"#,
            view.x(b.position.x),
            view.y(b.position.y)
        );
    }
    s.push_str("</g>\n</svg>\n");
    s
}

pub fn svg_file_name(step: u64) -> String {
    format!("frame_{step:06}.svg")
}
