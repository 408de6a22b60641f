//! Minimal 3D vector math for atomic coordinates (angstroms).

use serde::{Deserialize, Serialize};

/// A point or displacement in 3D space, in angstroms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }

    pub fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Squared Euclidean distance; exactly symmetric in its arguments.
    pub fn dist2(self, o: Vec3) -> f64 {
        let d = self.sub(o);
        d.dot(d)
    }

    pub fn dist(self, o: Vec3) -> f64 {
        self.dist2(o).sqrt()
    }
}

/// A 3x3 rotation matrix, rows stored as vectors.
#[derive(Debug, Clone, Copy)]
pub struct Rotation {
    pub rows: [Vec3; 3],
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation {
        rows: [
            Vec3 { x: 1.0, y: 0.0, z: 0.0 },
            Vec3 { x: 0.0, y: 1.0, z: 0.0 },
            Vec3 { x: 0.0, y: 0.0, z: 1.0 },
        ],
    };

    /// Rotation by `angle` radians about a (not necessarily unit) axis.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Rotation {
        let n = axis.norm();
        assert!(n > 0.0, "rotation axis must be nonzero");
        let u = axis.scale(1.0 / n);
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        Rotation {
            rows: [
                Vec3::new(c + u.x * u.x * t, u.x * u.y * t - u.z * s, u.x * u.z * t + u.y * s),
                Vec3::new(u.y * u.x * t + u.z * s, c + u.y * u.y * t, u.y * u.z * t - u.x * s),
                Vec3::new(u.z * u.x * t - u.y * s, u.z * u.y * t + u.x * s, c + u.z * u.z * t),
            ],
        }
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        Vec3::new(self.rows[0].dot(v), self.rows[1].dot(v), self.rows[2].dot(v))
    }
}

/// A rigid (distance-preserving) transform: rotation, optional mirror, translation.
#[derive(Debug, Clone, Copy)]
pub struct RigidTransform {
    pub rotation: Rotation,
    pub mirror: bool,
    pub translation: Vec3,
}

impl RigidTransform {
    pub fn translation(t: Vec3) -> Self {
        RigidTransform { rotation: Rotation::IDENTITY, mirror: false, translation: t }
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        let v = if self.mirror { Vec3::new(-v.x, v.y, v.z) } else { v };
        self.rotation.apply(v).add(self.translation)
    }
}
