use rand::Rng;
use serde::{Deserialize, Serialize};

use super::geometry::{Point, Room};
use super::template::{Node, Scene, SceneTemplate, Source};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstellationConstraints {
    /// Nodes of the same room that must lie within the room's critical
    /// distance of every constrained source.
    pub min_close_nodes: usize,
    pub max_attempts: usize,
}

impl Default for ConstellationConstraints {
    fn default() -> Self {
        Self {
            min_close_nodes: 3,
            max_attempts: 2_000_000,
        }
    }
}

fn uniform_in(room: &Room, margin: f64, r: &mut impl Rng) -> Point {
    Point::new(
        r.random_range(room.x0 + margin..room.x1 - margin),
        r.random_range(room.y0 + margin..room.y1 - margin),
    )
}

/// Post-hoc audit of a scene against the constellation constraints. Returns
/// a description of the first violation.
pub fn check_constraints(
    scene: &Scene,
    constraints: &ConstellationConstraints,
    min_source_separation_m: f64,
) -> std::result::Result<(), String> {
    for (i, a) in scene.sources.iter().enumerate() {
        for b in &scene.sources[i + 1..] {
            let d = a.position.distance(b.position);
            if d < min_source_separation_m {
                return Err(format!(
                    "sources {} and {} are {d:.2} m apart (< {min_source_separation_m} m)",
                    a.id, b.id
                ));
            }
        }
    }
    for s in scene.sources.iter().filter(|s| s.constrained) {
        let room = &scene.rooms[s.room];
        let dc = room.critical_distance();
        let close = scene
            .nodes
            .iter()
            .filter(|n| n.room == s.room && n.position.distance(s.position) < dc)
            .count();
        if close < constraints.min_close_nodes {
            return Err(format!(
                "source {} in `{}` has {close} nodes within critical distance {dc:.2} m, need {}",
                s.id, room.name, constraints.min_close_nodes
            ));
        }
    }
    Ok(())
}

/// Draw sources and nodes uniformly inside their rooms, rejecting whole
/// constellations until every constraint holds. Deterministic in `seed`.
pub fn generate_constellation(
    template: &SceneTemplate,
    seed: u64,
    constraints: &ConstellationConstraints,
) -> Result<Scene> {
    template.validate()?;
    let rooms: Vec<Room> = template.rooms.iter().map(|r| r.room.clone()).collect();
    let source_rooms: Vec<usize> = template
        .sources
        .iter()
        .map(|s| template.room_index(&s.room))
        .collect::<Result<_>>()?;
    let mut r = rng::rng(seed);
    let mut last_violation = String::from("no attempt made");
    for _ in 0..constraints.max_attempts {
        let sources: Vec<Source> = template
            .sources
            .iter()
            .zip(&source_rooms)
            .enumerate()
            .map(|(id, (spec, &room))| Source {
                id,
                room,
                position: spec
                    .position
                    .unwrap_or_else(|| uniform_in(&rooms[room], template.source_margin_m, &mut r)),
                class: spec.class.clone(),
                constrained: spec.constrained,
            })
            .collect();
        let mut nodes = Vec::with_capacity(template.node_count());
        for (ri, spec) in template.rooms.iter().enumerate() {
            for _ in 0..spec.nodes {
                nodes.push(Node {
                    id: nodes.len(),
                    room: ri,
                    position: uniform_in(&rooms[ri], template.node_margin_m, &mut r),
                });
            }
        }
        let scene = Scene {
            name: template.name.clone(),
            rooms: rooms.clone(),
            sources,
            nodes,
            sample_rate: template.sample_rate,
            wall_loss_db: template.wall_loss_db,
        };
        match check_constraints(&scene, constraints, template.min_source_separation_m) {
            Ok(()) => return Ok(scene),
            Err(v) => last_violation = v,
        }
    }
    Err(Error::ConstraintUnsatisfiable {
        attempts: constraints.max_attempts,
        constraint: last_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::template::RoomSpec;
    use crate::scene::SourceSpec;

    #[test]
    fn constraint_holds_and_is_deterministic() {
        let t = SceneTemplate::two_source_living();
        let c = ConstellationConstraints::default();
        for seed in 0..5 {
            let s = generate_constellation(&t, seed, &c).unwrap();
            s.validate().unwrap();
            check_constraints(&s, &c, t.min_source_separation_m).unwrap();
            let dc = s.rooms[0].critical_distance();
            for src in &s.sources {
                let close = s
                    .nodes
                    .iter()
                    .filter(|n| n.position.distance(src.position) < dc)
                    .count();
                assert!(close >= 3);
            }
            assert_eq!(s, generate_constellation(&t, seed, &c).unwrap());
        }
    }

    #[test]
    fn single_source_ten_nodes() {
        let mut t = SceneTemplate::two_source_living();
        t.sources.truncate(1);
        let s = generate_constellation(&t, 3, &ConstellationConstraints::default()).unwrap();
        let dc = s.rooms[0].critical_distance();
        let close = s
            .nodes
            .iter()
            .filter(|n| n.position.distance(s.sources[0].position) < dc)
            .count();
        assert!(close >= 3);
    }

    #[test]
    fn unsatisfiable_names_constraint() {
        let t = SceneTemplate {
            min_source_separation_m: 0.0,
            ..SceneTemplate::two_source_living()
        };
        let c = ConstellationConstraints {
            min_close_nodes: 11,
            max_attempts: 50,
        };
        match generate_constellation(&t, 1, &c) {
            Err(Error::ConstraintUnsatisfiable { attempts, constraint }) => {
                assert_eq!(attempts, 50);
                assert!(constraint.contains("critical distance"), "{constraint}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn uniform_positions_center_statistics() {
        // 1000 nodes, no constraint: empirical mean within 3σ of the centre.
        let t = SceneTemplate {
            name: "u".into(),
            rooms: vec![RoomSpec {
                room: Room {
                    name: "r".into(),
                    x0: 0.0,
                    y0: 0.0,
                    x1: 4.0,
                    y1: 5.0,
                    t60_s: 0.5,
                },
                nodes: 1000,
            }],
            sources: vec![SourceSpec {
                room: "r".into(),
                class: "low-f0".into(),
                position: None,
                constrained: false,
            }],
            sample_rate: 16_000,
            wall_loss_db: 6.0,
            source_margin_m: 0.5,
            node_margin_m: 0.0,
            min_source_separation_m: 0.0,
        };
        let s = generate_constellation(&t, 17, &ConstellationConstraints::default()).unwrap();
        let n = s.nodes.len() as f64;
        let mx = s.nodes.iter().map(|p| p.position.x).sum::<f64>() / n;
        let my = s.nodes.iter().map(|p| p.position.y).sum::<f64>() / n;
        let sx = 4.0 / 12f64.sqrt() / n.sqrt();
        let sy = 5.0 / 12f64.sqrt() / n.sqrt();
        assert!((mx - 2.0).abs() < 3.0 * sx, "{mx}");
        assert!((my - 2.5).abs() < 3.0 * sy, "{my}");
    }
}
