use std::path::Path;

use serde::{Deserialize, Serialize};

use super::geometry::{wall_count, Point, Room};
use crate::dsp::DEFAULT_SAMPLE_RATE;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomSpec {
    #[serde(flatten)]
    pub room: Room,
    /// Nodes placed uniformly inside this room.
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub room: String,
    pub class: String,
    /// Fixed position; drawn uniformly inside the room when absent.
    #[serde(default)]
    pub position: Option<Point>,
    /// Require nodes within the room's critical distance of this source.
    #[serde(default)]
    pub constrained: bool,
}

/// Scene layout from which seeded constellations are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneTemplate {
    pub name: String,
    pub rooms: Vec<RoomSpec>,
    pub sources: Vec<SourceSpec>,
    #[serde(default = "default_sample_rate")]
    pub sample_rate: u32,
    /// Insertion loss per wall between source and node rooms.
    #[serde(default = "default_wall_loss")]
    pub wall_loss_db: f64,
    #[serde(default = "default_source_margin")]
    pub source_margin_m: f64,
    #[serde(default = "default_node_margin")]
    pub node_margin_m: f64,
    #[serde(default = "default_source_separation")]
    pub min_source_separation_m: f64,
}

fn default_sample_rate() -> u32 {
    DEFAULT_SAMPLE_RATE
}
fn default_wall_loss() -> f64 {
    6.0
}
fn default_source_margin() -> f64 {
    0.5
}
fn default_node_margin() -> f64 {
    0.1
}
fn default_source_separation() -> f64 {
    1.5
}

fn room(name: &str, x0: f64, y0: f64, x1: f64, y1: f64, t60_s: f64, nodes: usize) -> RoomSpec {
    RoomSpec {
        room: Room {
            name: name.into(),
            x0,
            y0,
            x1,
            y1,
            t60_s,
        },
        nodes,
    }
}

fn source(room: &str, class: &str, constrained: bool) -> SourceSpec {
    SourceSpec {
        room: room.into(),
        class: class.into(),
        position: None,
        constrained,
    }
}

impl SceneTemplate {
    /// "2SL": one 4 × 5 m living room, two sources, ten nodes.
    pub fn two_source_living() -> Self {
        Self {
            name: "2SL".into(),
            rooms: vec![room("living", 0.0, 0.0, 4.0, 5.0, 0.5, 10)],
            sources: vec![source("living", "low-f0", true), source("living", "high-f0", true)],
            sample_rate: DEFAULT_SAMPLE_RATE,
            wall_loss_db: default_wall_loss(),
            source_margin_m: default_source_margin(),
            node_margin_m: default_node_margin(),
            min_source_separation_m: 2.0,
        }
    }

    /// "4SA": four-room apartment, four sources, sixteen nodes. The living
    /// room matches the "2SL" room.
    pub fn four_source_apartment() -> Self {
        Self {
            name: "4SA".into(),
            rooms: vec![
                room("living", 0.0, 0.0, 4.0, 5.0, 0.5, 10),
                room("hallway", 4.0, 0.0, 6.0, 5.0, 0.8, 2),
                room("kitchen", 6.0, 0.0, 10.0, 2.5, 0.45, 2),
                room("bedroom", 6.0, 2.5, 10.0, 5.0, 0.4, 2),
            ],
            sources: vec![
                source("living", "low-f0", true),
                source("living", "high-f0", true),
                source("kitchen", "high-f0", false),
                source("bedroom", "low-f0", false),
            ],
            sample_rate: DEFAULT_SAMPLE_RATE,
            wall_loss_db: default_wall_loss(),
            source_margin_m: default_source_margin(),
            node_margin_m: default_node_margin(),
            min_source_separation_m: 2.0,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "2SL" | "2sl" => Ok(Self::two_source_living()),
            "4SA" | "4sa" => Ok(Self::four_source_apartment()),
            other => Err(Error::invalid("template", format!("unknown template `{other}`"))),
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        let t: Self = serde_json::from_slice(&bytes)?;
        t.validate()?;
        Ok(t)
    }

    pub fn node_count(&self) -> usize {
        self.rooms.iter().map(|r| r.nodes).sum()
    }

    pub fn room_index(&self, name: &str) -> Result<usize> {
        self.rooms
            .iter()
            .position(|r| r.room.name == name)
            .ok_or_else(|| Error::invalid("room", format!("unknown room `{name}`")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.rooms.is_empty() {
            return Err(Error::Empty("template rooms"));
        }
        for r in &self.rooms {
            if !(r.room.t60_s > 0.0) {
                return Err(Error::invalid("t60_s", format!("room `{}` needs T60 > 0", r.room.name)));
            }
            if !(r.room.width() > 2.0 * self.node_margin_m && r.room.depth() > 2.0 * self.node_margin_m) {
                return Err(Error::invalid("room", format!("room `{}` is degenerate", r.room.name)));
            }
        }
        if self.node_count() < 2 {
            return Err(Error::invalid("nodes", "need at least 2 nodes"));
        }
        if self.sources.is_empty() {
            return Err(Error::invalid("sources", "need at least 1 source"));
        }
        for s in &self.sources {
            let idx = self.room_index(&s.room)?;
            super::SourceClass::by_name(&s.class)?;
            if let Some(p) = s.position {
                if !self.rooms[idx].room.contains(p) {
                    return Err(Error::invalid("position", format!("source outside room `{}`", s.room)));
                }
            }
        }
        if self.sample_rate == 0 {
            return Err(Error::invalid("sample_rate", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub id: usize,
    pub room: usize,
    pub position: Point,
    pub class: String,
    pub constrained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub room: usize,
    pub position: Point,
}

/// One concrete constellation: rooms, placed sources and nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub name: String,
    pub rooms: Vec<Room>,
    pub sources: Vec<Source>,
    pub nodes: Vec<Node>,
    pub sample_rate: u32,
    pub wall_loss_db: f64,
}

impl Scene {
    /// Linear gain on the path from `source` to `node` due to walls in between.
    pub fn path_gain(&self, source: usize, node: usize) -> f64 {
        let walls =
            wall_count(&self.rooms, self.sources[source].room, self.nodes[node].room).unwrap_or(self.rooms.len());
        10f64.powf(-self.wall_loss_db * walls as f64 / 20.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.len() < 2 {
            return Err(Error::invalid("nodes", "need at least 2 nodes"));
        }
        if self.sources.is_empty() {
            return Err(Error::invalid("sources", "need at least 1 source"));
        }
        if self.rooms.iter().any(|r| !(r.t60_s > 0.0)) {
            return Err(Error::invalid("t60_s", "T60 must be positive"));
        }
        for s in &self.sources {
            if !self.rooms.get(s.room).is_some_and(|r| r.contains(s.position)) {
                return Err(Error::invalid("sources", format!("source {} outside its room", s.id)));
            }
        }
        for n in &self.nodes {
            if !self.rooms.get(n.room).is_some_and(|r| r.contains(n.position)) {
                return Err(Error::invalid("nodes", format!("node {} outside its room", n.id)));
            }
        }
        Ok(())
    }

    pub fn node_positions(&self) -> Vec<Point> {
        self.nodes.iter().map(|n| n.position).collect()
    }

    pub fn source_positions(&self) -> Vec<Point> {
        self.sources.iter().map(|s| s.position).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_templates_validate_and_round_trip_json() {
        for t in [
            SceneTemplate::two_source_living(),
            SceneTemplate::four_source_apartment(),
        ] {
            t.validate().unwrap();
            let json = serde_json::to_string(&t).unwrap();
            let back: SceneTemplate = serde_json::from_str(&json).unwrap();
            assert_eq!(back, t);
        }
        assert_eq!(SceneTemplate::four_source_apartment().node_count(), 16);
        assert!(SceneTemplate::by_name("nope").is_err());
    }

    #[test]
    fn json_defaults_apply() {
        let json = r#"{
            "name": "tiny",
            "rooms": [{"name": "r", "x0": 0, "y0": 0, "x1": 3, "y1": 3, "t60_s": 0.4, "nodes": 4}],
            "sources": [{"room": "r", "class": "low-f0"}]
        }"#;
        let t: SceneTemplate = serde_json::from_str(json).unwrap();
        t.validate().unwrap();
        assert_eq!(t.sample_rate, 16_000);
        assert_eq!(t.wall_loss_db, 6.0);
        assert!(!t.sources[0].constrained);
    }

    #[test]
    fn invalid_templates_rejected() {
        let mut t = SceneTemplate::two_source_living();
        t.rooms[0].room.t60_s = 0.0;
        assert!(t.validate().is_err());
        let mut t = SceneTemplate::two_source_living();
        t.sources[0].class = "kazoo".into();
        assert!(t.validate().is_err());
        let mut t = SceneTemplate::two_source_living();
        t.rooms[0].nodes = 1;
        assert!(t.validate().is_err());
    }
}
