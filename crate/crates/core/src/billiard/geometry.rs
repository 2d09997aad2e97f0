use std::ops::{Add, AddAssign, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Vec2 { x: c, y: s }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the planar cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2 {
            x: self.x / n,
            y: self.y / n,
        }
    }

    /// Counterclockwise rotation by `angle`.
    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2 {
            x: c * self.x - s * self.y,
            y: s * self.x + c * self.y,
        }
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2 {
            x: self.x + o.x,
            y: self.y + o.y,
        }
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2 {
            x: self.x - o.x,
            y: self.y - o.y,
        }
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2 {
            x: self.x * s,
            y: self.y * s,
        }
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2 {
            x: -self.x,
            y: -self.y,
        }
    }
}

/// Entry time of the ray `p + t v` (|v| = 1) into the disk `(c, r)`, for a
/// ray starting outside the disk. Uses the cancellation-free root
/// `t = c_0 / (-b + sqrt(b^2 - c_0))` with `b = (p - c).v`, `c_0 = |p - c|^2 - r^2`.
pub fn ray_enters_circle(p: Vec2, v: Vec2, c: Vec2, r: f64) -> Option<f64> {
    let d = p - c;
    let b = d.dot(v);
    if b >= 0.0 {
        return None;
    }
    let c0 = d.norm_sq() - r * r;
    if c0 <= 0.0 {
        return None;
    }
    let disc = b * b - c0;
    if disc < 0.0 {
        return None;
    }
    Some(c0 / (-b + disc.sqrt()))
}

/// Exit time of the ray from the disk `(c, r)` (the larger root), in the stable form.
pub fn ray_exits_circle(p: Vec2, v: Vec2, c: Vec2, r: f64) -> Option<f64> {
    let d = p - c;
    let b = d.dot(v);
    let c0 = d.norm_sq() - r * r;
    let disc = b * b - c0;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t = if b <= 0.0 { -b + sq } else { -c0 / (b + sq) };
    (t > 0.0).then_some(t)
}

/// Specular reflection of `v` about the unit normal `n`.
pub fn reflect(v: Vec2, n: Vec2) -> Vec2 {
    (v - n * (2.0 * v.dot(n))).normalized()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_roots_match_naive_formula_for_generic_rays() {
        let p = Vec2::new(-2.0, 0.3);
        let v = Vec2::new(1.0, 0.05).normalized();
        let c = Vec2::new(0.0, 0.0);
        let t = ray_enters_circle(p, v, c, 0.5).unwrap();
        let d = p - c;
        let b = d.dot(v);
        let naive = -b - (b * b - d.norm_sq() + 0.25).sqrt();
        assert!((t - naive).abs() < 1e-12);
        assert!(((p + v * t - c).norm() - 0.5).abs() < 1e-14);
        let te = ray_exits_circle(Vec2::new(0.1, 0.0), v, c, 0.5).unwrap();
        assert!(((Vec2::new(0.1, 0.0) + v * te).norm() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn reflection_preserves_speed_and_angle() {
        let n = Vec2::from_angle(0.3);
        let v = Vec2::from_angle(2.9);
        let w = reflect(v, n);
        assert!((w.norm() - 1.0).abs() < 1e-15);
        assert!((w.dot(n) + v.dot(n)).abs() < 1e-15);
        assert!((w.cross(n) - v.cross(n)).abs() < 1e-15);
    }
}
