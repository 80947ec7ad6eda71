//! Multi-room acoustic scenes: geometry, constellation sampling, stochastic
//! room impulse responses, synthetic sources and node signal rendering.

mod constellation;
mod geometry;
mod render;
mod rir;
mod source;
mod template;

pub use constellation::{check_constraints, generate_constellation, ConstellationConstraints};
pub use geometry::{critical_distance, Point, Room, ROOM_HEIGHT_M, SPEED_OF_SOUND};
pub use render::{fft_convolve, render_node_signals, render_scene, RenderedScene, RirSet};
pub use rir::{synthesize_rir, Rir};
pub use source::{make_source_signal, SourceClass, SEGMENT_S};
pub use template::{Node, RoomSpec, Scene, SceneTemplate, Source, SourceSpec};
