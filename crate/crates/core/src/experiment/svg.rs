use std::fmt::Write;

use crate::membership::MembershipVector;
use crate::scene::Scene;

const PX_PER_M: f64 = 80.0;
const PAD: f64 = 20.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22",
];

/// Floor plan with rooms, sources, critical-distance circles (green) and
/// nodes coloured by their strongest cluster, opacity proportional to the
/// membership value.
pub fn floorplan_svg(scene: &Scene, memberships: &[MembershipVector]) -> String {
    let x0 = scene.rooms.iter().map(|r| r.x0).fold(f64::INFINITY, f64::min);
    let y0 = scene.rooms.iter().map(|r| r.y0).fold(f64::INFINITY, f64::min);
    let x1 = scene.rooms.iter().map(|r| r.x1).fold(f64::NEG_INFINITY, f64::max);
    let y1 = scene.rooms.iter().map(|r| r.y1).fold(f64::NEG_INFINITY, f64::max);
    let px = |x: f64| PAD + (x - x0) * PX_PER_M;
    // SVG y grows downwards.
    let py = |y: f64| PAD + (y1 - y) * PX_PER_M;
    let w = 2.0 * PAD + (x1 - x0) * PX_PER_M;
    let h = 2.0 * PAD + (y1 - y0) * PX_PER_M;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for r in &scene.rooms {
        let _ = writeln!(
            s,
            r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black" stroke-width="2"><title>{}</title></rect>"#,
            px(r.x0),
            py(r.y1),
            (r.x1 - r.x0) * PX_PER_M,
            (r.y1 - r.y0) * PX_PER_M,
            r.name
        );
    }
    for src in &scene.sources {
        let dc = scene.rooms[src.room].critical_distance();
        let (cx, cy) = (px(src.position.x), py(src.position.y));
        let _ = writeln!(
            s,
            r#"<circle cx="{cx:.1}" cy="{cy:.1}" r="{:.1}" fill="none" stroke="green" stroke-width="1.5"/>"#,
            dc * PX_PER_M
        );
        let _ = writeln!(
            s,
            r#"<path d="M {:.1} {:.1} l 7 12 l -14 0 z" fill="black"><title>source {} ({})</title></path>"#,
            cx,
            cy - 7.0,
            src.id,
            src.class
        );
    }
    for node in &scene.nodes {
        let best = memberships
            .iter()
            .enumerate()
            .filter_map(|(k, mv)| mv.get(node.id).map(|mu| (k, mu)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
        let (color, mu) = match best {
            Some((k, mu)) if mu > 0.0 => (PALETTE[k % PALETTE.len()], mu),
            _ => ("#888888", 0.0),
        };
        let is_ref = memberships.iter().any(|mv| mv.reference_node_id == node.id);
        let _ = writeln!(
            s,
            r#"<circle cx="{:.1}" cy="{:.1}" r="6" fill="{color}" fill-opacity="{:.3}" stroke="{}" stroke-width="{}"><title>node {} mu={mu:.3}</title></circle>"#,
            px(node.position.x),
            py(node.position.y),
            0.15 + 0.85 * mu,
            if is_ref { "black" } else { color },
            if is_ref { 2 } else { 1 },
            node.id
        );
    }
    s.push_str("</svg>\n");
    s
}
