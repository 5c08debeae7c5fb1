use rand::Rng;
use serde::{Deserialize, Serialize};

/// A point in 3D space, meters. Ground nodes sit at z = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn ground(x: f64, y: f64) -> Self {
        Self { x, y, z: 0.0 }
    }
}

/// ||p - q||_2.
pub fn euclidean_distance(p: Position3D, q: Position3D) -> f64 {
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    let dz = p.z - q.z;
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Squared separation, the quantity the deployment constraint thresholds.
pub fn squared_distance(p: Position3D, q: Position3D) -> f64 {
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    let dz = p.z - q.z;
    dx * dx + dy * dy + dz * dz
}

/// Direction cosine along the x axis from `from` toward `to`, used by the
/// uniform-linear-array steering vectors. Arrays are oriented along x.
pub fn direction_cosine_x(from: Position3D, to: Position3D) -> f64 {
    let d = euclidean_distance(from, to);
    if d == 0.0 {
        0.0
    } else {
        (to.x - from.x) / d
    }
}

/// Uniform UE drop over the square area (z = 0).
pub fn draw_ue_positions<R: Rng>(rng: &mut R, k: usize, area_m: f64) -> Vec<Position3D> {
    (0..k)
        .map(|_| Position3D::ground(rng.gen_range(0.0..area_m), rng.gen_range(0.0..area_m)))
        .collect()
}

/// ARIS starting layout: a circle of radius area/4 around the BS footprint,
/// at the configured hover altitude. Pairwise separation is max for the count.
pub fn circle_layout(center: Position3D, n: usize, area_m: f64, altitude_m: f64) -> Vec<Position3D> {
    let radius = area_m / 4.0;
    (0..n)
        .map(|i| {
            let angle = 2.0 * std::f64::consts::PI * (i as f64) / (n as f64);
            Position3D::new(
                center.x + radius * angle.cos(),
                center.y + radius * angle.sin(),
                altitude_m,
            )
        })
        .collect()
}
