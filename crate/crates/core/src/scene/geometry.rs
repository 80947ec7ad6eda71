use serde::{Deserialize, Serialize};

pub const SPEED_OF_SOUND: f64 = 343.0;
pub const ROOM_HEIGHT_M: f64 = 2.6;

/// Position on the floor plan, in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn translate(self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }

    pub fn scale(self, a: f64) -> Self {
        Self::new(self.x * a, self.y * a)
    }
}

/// Axis-aligned rectangular room `[x0, x1] × [y0, y1]` with a reverberation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub name: String,
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub t60_s: f64,
}

impl Room {
    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn depth(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.depth()
    }

    pub fn volume(&self) -> f64 {
        self.area() * ROOM_HEIGHT_M
    }

    pub fn center(&self) -> Point {
        Point::new((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    pub fn critical_distance(&self) -> f64 {
        critical_distance(self.volume(), self.t60_s)
    }

    /// Rooms touching along a wall segment of positive length.
    pub fn is_adjacent(&self, other: &Room) -> bool {
        const EPS: f64 = 1e-9;
        let overlap = |a0: f64, a1: f64, b0: f64, b1: f64| a1.min(b1) - a0.max(b0);
        let shares_vertical = ((self.x1 - other.x0).abs() < EPS || (other.x1 - self.x0).abs() < EPS)
            && overlap(self.y0, self.y1, other.y0, other.y1) > EPS;
        let shares_horizontal = ((self.y1 - other.y0).abs() < EPS || (other.y1 - self.y0).abs() < EPS)
            && overlap(self.x0, self.x1, other.x0, other.x1) > EPS;
        shares_vertical || shares_horizontal
    }
}

/// Sabine-based critical distance `0.057 · sqrt(V / T60)` in metres.
pub fn critical_distance(volume_m3: f64, t60_s: f64) -> f64 {
    0.057 * (volume_m3 / t60_s).sqrt()
}

/// Minimum number of walls between rooms `a` and `b` (BFS over adjacency).
pub(crate) fn wall_count(rooms: &[Room], a: usize, b: usize) -> Option<usize> {
    if a == b {
        return Some(0);
    }
    let mut dist = vec![usize::MAX; rooms.len()];
    let mut queue = std::collections::VecDeque::from([a]);
    dist[a] = 0;
    while let Some(r) = queue.pop_front() {
        for n in 0..rooms.len() {
            if dist[n] == usize::MAX && rooms[r].is_adjacent(&rooms[n]) {
                dist[n] = dist[r] + 1;
                if n == b {
                    return Some(dist[n]);
                }
                queue.push_back(n);
            }
        }
    }
    None
}
