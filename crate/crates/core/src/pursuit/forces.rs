use std::f64::consts::FRAC_PI_2;

use super::geom::{angle_between, Vec2};

/// Gains of the potential-field forces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForceParams {
    /// Obstacle repulsion gain η.
    pub eta: f64,
    /// Obstacle influence range ρ0.
    pub rho0: f64,
    /// Inter-individual balance parameter λ; teammates settle at 2λ.
    pub lambda: f64,
}

impl Default for ForceParams {
    fn default() -> Self {
        Self {
            eta: 1.0,
            rho0: 2.0,
            lambda: 1.5,
        }
    }
}

/// Unit push away from the pursuers, or the current heading when the
/// displacements cancel.
pub fn evader_repulsion(evader: Vec2, pursuers: &[Vec2], heading: f64) -> Vec2 {
    pursuers
        .iter()
        .fold(Vec2::ZERO, |acc, p| acc + (evader - *p))
        .normalized()
        .unwrap_or_else(|| Vec2::from_angle(heading))
}

fn repulsion_magnitude(d: f64, p: &ForceParams) -> f64 {
    p.eta * (1.0 / d - 1.0 / p.rho0) / (d * d)
}

/// `η(1/d − 1/ρ0)/d² · N[x − x_o]` inside the influence range, capped at ten
/// times its value at `0.1·ρ0`.
pub fn obstacle_repulsion(x: Vec2, nearest: Vec2, p: &ForceParams) -> Vec2 {
    let d = x.distance(nearest);
    if d >= p.rho0 {
        return Vec2::ZERO;
    }
    let Some(dir) = (x - nearest).normalized() else {
        return Vec2::ZERO;
    };
    let cap = 10.0 * repulsion_magnitude(0.1 * p.rho0, p);
    dir * repulsion_magnitude(d, p).min(cap)
}

pub fn attraction(pursuer: Vec2, evader: Vec2) -> Vec2 {
    (evader - pursuer).normalized().unwrap_or(Vec2::ZERO)
}

/// `Σ_j (0.5 − λ/d_j)·N[x_j − x_i]`, skipping coincident teammates.
pub fn inter_individual(pursuer: Vec2, teammates: &[Vec2], lambda: f64) -> Vec2 {
    teammates.iter().fold(Vec2::ZERO, |acc, t| {
        let d = t.distance(pursuer);
        match (*t - pursuer).normalized() {
            Some(u) => acc + u * (0.5 - lambda / d),
            None => acc,
        }
    })
}

/// Total potential-field force on a pursuer.
pub fn apf_force(pursuer: Vec2, evader: Vec2, teammates: &[Vec2], nearest: Option<Vec2>, p: &ForceParams) -> Vec2 {
    let repulsion = nearest.map_or(Vec2::ZERO, |o| obstacle_repulsion(pursuer, o, p));
    attraction(pursuer, evader) + repulsion + inter_individual(pursuer, teammates, p.lambda)
}

/// Heading that circles the nearest obstacle anticlockwise.
///
/// `nearest` maps a position to the closest obstacle point within range.
/// The tangent is taken at a half-step predictor so that a constant-speed
/// agent keeps its stand-off distance instead of spiralling outward.
pub fn wall_follow_heading(x: Vec2, heading: f64, speed: f64, nearest: impl Fn(Vec2) -> Option<Vec2>) -> f64 {
    let Some(n0) = nearest(x).and_then(|o| (x - o).normalized()) else {
        return heading;
    };
    let mid = x + n0.perp() * (0.5 * speed);
    let n1 = nearest(mid).and_then(|o| (mid - o).normalized()).unwrap_or(n0);
    n1.perp().angle()
}

/// Which rule of the escape cascade produced the evader heading.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EscapeMode {
    Repulsion,
    WallFollow,
    TurnAround,
    Slip,
}

/// Tunables of the evader's escape rules.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EscapeParams {
    pub forces: ForceParams,
    /// Pursuers farther than this are ignored by the encirclement and
    /// blocked-branch tests.
    pub watch_range: f64,
    /// A wall-following branch counts as blocked when a watched pursuer lies
    /// within this angle of it.
    pub blocked_angle: f64,
    /// Encircled when the widest gap between watched pursuer bearings is
    /// below this angle.
    pub encircle_gap: f64,
}

impl Default for EscapeParams {
    fn default() -> Self {
        Self {
            forces: ForceParams::default(),
            watch_range: 7.5,
            blocked_angle: std::f64::consts::FRAC_PI_4,
            encircle_gap: std::f64::consts::PI,
        }
    }
}

/// Widest angular gap between the given bearings, as `(width, bisector)`.
pub fn widest_gap(bearings: &[f64]) -> Option<(f64, f64)> {
    if bearings.is_empty() {
        return None;
    }
    let mut b: Vec<f64> = bearings.iter().map(|t| t.rem_euclid(std::f64::consts::TAU)).collect();
    b.sort_by(f64::total_cmp);
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 0..b.len() {
        let start = b[k];
        let end = if k + 1 < b.len() { b[k + 1] } else { b[0] + std::f64::consts::TAU };
        let gap = end - start;
        if gap > best.0 {
            best = (gap, start + gap / 2.0);
        }
    }
    Some(best)
}

/// Evader heading from the rule cascade: slip through an encirclement, else
/// follow the wall when pinned between pursuers and an obstacle, else flee
/// along the total force.
pub fn escape_decide(
    evader: Vec2,
    heading: f64,
    pursuers: &[Vec2],
    nearest: Option<Vec2>,
    p: &EscapeParams,
) -> (f64, EscapeMode) {
    let watched: Vec<f64> = pursuers
        .iter()
        .filter(|q| q.distance(evader) <= p.watch_range)
        .filter_map(|q| (*q - evader).normalized().map(Vec2::angle))
        .collect();
    if watched.len() >= 2 {
        if let Some((gap, bisector)) = widest_gap(&watched) {
            if gap < p.encircle_gap {
                return (super::geom::wrap_angle(bisector), EscapeMode::Slip);
            }
        }
    }

    let f_e = evader_repulsion(evader, pursuers, heading);
    let f_o = nearest.map_or(Vec2::ZERO, |o| obstacle_repulsion(evader, o, &p.forces));
    let f_t = f_e + f_o;
    if obtuse(f_t, f_e) {
        let n = f_o.normalized().expect("checked");
        let (left, right) = (n.perp().angle(), (-n.perp()).angle());
        let (first, second) = if angle_between(left, heading) <= angle_between(right, heading) {
            (left, right)
        } else {
            (right, left)
        };
        let blocked = watched.iter().any(|b| angle_between(*b, first) <= p.blocked_angle);
        return if blocked {
            (second, EscapeMode::TurnAround)
        } else {
            (first, EscapeMode::WallFollow)
        };
    }
    let dir = f_t.normalized().unwrap_or(f_e);
    (dir.angle(), EscapeMode::Repulsion)
}

/// True when the angle between two vectors exceeds a right angle.
pub fn obtuse(a: Vec2, b: Vec2) -> bool {
    match (a.normalized(), b.normalized()) {
        (Some(u), Some(v)) => u.dot(v).clamp(-1.0, 1.0).acos() > FRAC_PI_2,
        _ => false,
    }
}
