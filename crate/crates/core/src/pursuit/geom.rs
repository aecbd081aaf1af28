use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Self::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Unit vector, or `None` for a (numerically) zero vector.
    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > 1e-12).then(|| self * (1.0 / n))
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Rotated anticlockwise by `theta`.
    pub fn rotate(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Rotated anticlockwise by a quarter turn.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
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
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Unsigned angle between two headings, in `[0, π]`.
pub fn angle_between(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

pub fn closest_on_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return a;
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

/// Static obstacle geometry.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    /// Simple polygon, vertices in order (either orientation).
    Polygon(Vec<Vec2>),
    Segment(Vec2, Vec2),
    Disc { center: Vec2, radius: f64 },
}

impl Shape {
    pub fn contains(&self, p: Vec2) -> bool {
        match self {
            Shape::Polygon(v) => {
                let mut inside = false;
                let mut j = v.len() - 1;
                for i in 0..v.len() {
                    let (a, b) = (v[i], v[j]);
                    if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
                        inside = !inside;
                    }
                    j = i;
                }
                inside
            }
            Shape::Segment(..) => false,
            Shape::Disc { center, radius } => p.distance(*center) < *radius,
        }
    }

    /// Nearest boundary point to `p`.
    pub fn closest_point(&self, p: Vec2) -> Vec2 {
        match self {
            Shape::Polygon(v) => {
                let mut best = (f64::INFINITY, v[0]);
                for i in 0..v.len() {
                    let c = closest_on_segment(p, v[i], v[(i + 1) % v.len()]);
                    let d = c.distance(p);
                    if d < best.0 {
                        best = (d, c);
                    }
                }
                best.1
            }
            Shape::Segment(a, b) => closest_on_segment(p, *a, *b),
            Shape::Disc { center, radius } => match (p - *center).normalized() {
                Some(u) => *center + u * *radius,
                None => *center + Vec2::new(*radius, 0.0),
            },
        }
    }

    /// Distance from `p` to the shape; zero inside.
    pub fn distance(&self, p: Vec2) -> f64 {
        if self.contains(p) {
            0.0
        } else {
            self.closest_point(p).distance(p)
        }
    }

    pub fn centroid(&self) -> Vec2 {
        match self {
            Shape::Polygon(v) => v.iter().fold(Vec2::ZERO, |acc, p| acc + *p) * (1.0 / v.len() as f64),
            Shape::Segment(a, b) => (*a + *b) * 0.5,
            Shape::Disc { center, .. } => *center,
        }
    }

    pub fn translated(&self, by: Vec2) -> Shape {
        match self {
            Shape::Polygon(v) => Shape::Polygon(v.iter().map(|p| *p + by).collect()),
            Shape::Segment(a, b) => Shape::Segment(*a + by, *b + by),
            Shape::Disc { center, radius } => Shape::Disc {
                center: *center + by,
                radius: *radius,
            },
        }
    }

    pub fn rotated(&self, theta: f64) -> Shape {
        match self {
            Shape::Polygon(v) => Shape::Polygon(v.iter().map(|p| p.rotate(theta)).collect()),
            Shape::Segment(a, b) => Shape::Segment(a.rotate(theta), b.rotate(theta)),
            Shape::Disc { center, radius } => Shape::Disc {
                center: center.rotate(theta),
                radius: *radius,
            },
        }
    }
}

/// Axis-aligned rectangle `[min, max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self {
            min: Vec2::new(x0.min(x1), y0.min(y1)),
            max: Vec2::new(x0.max(x1), y0.max(y1)),
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Obstacle {
    pub name: String,
    pub shape: Shape,
}

/// Rectangular arena `[0, width] × [0, height]` whose boundary acts as walls.
#[derive(Clone, Debug, PartialEq)]
pub struct Arena {
    pub width: f64,
    pub height: f64,
    pub obstacles: Vec<Obstacle>,
}

/// Closest obstacle point to a query position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contact {
    pub point: Vec2,
    pub distance: f64,
}

impl Arena {
    pub fn open(width: f64, height: f64) -> Self {
        Self {
            width,
            height,
            obstacles: Vec::new(),
        }
    }

    pub fn diagonal(&self) -> f64 {
        self.width.hypot(self.height)
    }

    pub fn inside(&self, p: Vec2) -> bool {
        p.x >= 0.0 && p.x <= self.width && p.y >= 0.0 && p.y <= self.height
    }

    fn boundary_contact(&self, p: Vec2) -> Contact {
        let q = Vec2::new(p.x.clamp(0.0, self.width), p.y.clamp(0.0, self.height));
        if q != p {
            return Contact { point: q, distance: 0.0 };
        }
        let options = [
            Vec2::new(0.0, p.y),
            Vec2::new(self.width, p.y),
            Vec2::new(p.x, 0.0),
            Vec2::new(p.x, self.height),
        ];
        let mut best = Contact {
            point: options[0],
            distance: p.x,
        };
        for o in &options[1..] {
            let d = o.distance(p);
            if d < best.distance {
                best = Contact { point: *o, distance: d };
            }
        }
        best
    }

    /// Nearest point over the walls, the static obstacles and `extra`.
    pub fn nearest(&self, p: Vec2, extra: &[Shape]) -> Contact {
        let mut best = self.boundary_contact(p);
        for shape in self.obstacles.iter().map(|o| &o.shape).chain(extra) {
            let d = shape.distance(p);
            if d < best.distance {
                best = Contact {
                    point: shape.closest_point(p),
                    distance: d,
                };
            }
        }
        best
    }

    pub fn clearance(&self, p: Vec2, extra: &[Shape]) -> f64 {
        self.nearest(p, extra).distance
    }
}
