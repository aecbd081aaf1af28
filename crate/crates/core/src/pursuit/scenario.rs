//! `key = value` scenario files.
//!
//! ```text
//! arena = 20 20
//! pursuer_speed = 0.3
//! obstacle = o1 polygon 6 0  7 0  7 7  6 7
//! obstacle = rail segment 2 10 5 10
//! pursuer_spawn = 1 1 4 4
//! ```
//!
//! `#` starts a comment. `obstacle` may repeat; every other key at most once.

use std::collections::HashSet;
use std::fmt::Write as _;

use super::forces::{EscapeParams, ForceParams};
use super::geom::{Arena, Obstacle, Rect, Shape, Vec2};
use crate::error::{Error, Result};

/// Everything needed to build a pursuit world.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub arena: Arena,
    pub num_pursuers: usize,
    pub pursuer_speed: f64,
    pub evader_speed: f64,
    pub capture_radius: f64,
    pub clearance: f64,
    pub forces: ForceParams,
    pub k_d: f64,
    pub r_d_clip: f64,
    pub max_steps: usize,
    pub pursuer_spawn: Rect,
    pub evader_spawn: Rect,
    pub dynamic_obstacles: usize,
    pub dynamic_radius: f64,
    /// Obstacles farther than this do not appear in observations.
    pub obstacle_range: f64,
    /// Teammates farther than this do not appear in observations.
    pub teammate_range: f64,
    /// Range used by the evader's encirclement and blocked-branch tests.
    pub watch_range: f64,
}

impl Default for Scenario {
    /// Open 20×20 arena.
    fn default() -> Self {
        Self {
            arena: Arena::open(20.0, 20.0),
            num_pursuers: 3,
            pursuer_speed: 0.3,
            evader_speed: 0.4,
            capture_radius: 1.0,
            clearance: 0.3,
            forces: ForceParams::default(),
            k_d: 10.0,
            r_d_clip: 1.0,
            max_steps: 1000,
            pursuer_spawn: Rect::new(1.0, 1.0, 4.0, 4.0),
            evader_spawn: Rect::new(14.0, 14.0, 18.0, 18.0),
            dynamic_obstacles: 0,
            dynamic_radius: 0.5,
            obstacle_range: 2.0,
            teammate_range: f64::INFINITY,
            watch_range: 1.5 * 1.0 * 5.0,
        }
    }
}

impl Scenario {
    /// The shipped layout: a concave block with a narrow passage around the
    /// pursuer corner and three blocks around the evader region.
    pub fn shipped() -> Self {
        parse_scenario(include_str!("../../data/arena.scn")).expect("shipped scenario is valid")
    }

    pub fn escape_params(&self) -> EscapeParams {
        EscapeParams {
            forces: self.forces,
            watch_range: self.watch_range,
            ..EscapeParams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("arena width", self.arena.width),
            ("arena height", self.arena.height),
            ("pursuer_speed", self.pursuer_speed),
            ("evader_speed", self.evader_speed),
            ("capture_radius", self.capture_radius),
            ("clearance", self.clearance),
            ("eta", self.forces.eta),
            ("rho0", self.forces.rho0),
            ("lambda", self.forces.lambda),
            ("dynamic_radius", self.dynamic_radius),
            ("obstacle_range", self.obstacle_range),
            ("teammate_range", self.teammate_range),
            ("watch_range", self.watch_range),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.k_d >= 0.0 && self.r_d_clip >= 0.0) {
            return Err(Error::invalid("k_d and r_d_clip must be non-negative"));
        }
        if (4.0 * self.pursuer_speed - 3.0 * self.evader_speed).abs() > 1e-9 * self.evader_speed {
            return Err(Error::invalid("pursuer and evader speeds must be in ratio 3:4"));
        }
        if self.num_pursuers == 0 || self.max_steps == 0 {
            return Err(Error::invalid("num_pursuers and max_steps must be positive"));
        }
        for o in &self.arena.obstacles {
            let ok = match &o.shape {
                Shape::Polygon(v) => v.len() >= 3 && v.iter().all(|p| p.is_finite()),
                Shape::Segment(a, b) => a.is_finite() && b.is_finite(),
                Shape::Disc { center, radius } => center.is_finite() && *radius > 0.0,
            };
            if !ok {
                return Err(Error::invalid(format!("obstacle '{}' is degenerate", o.name)));
            }
        }
        for (name, rect) in [("pursuer_spawn", self.pursuer_spawn), ("evader_spawn", self.evader_spawn)] {
            if !self.spawn_is_clear(rect) {
                return Err(Error::invalid(format!("{name} overlaps an obstacle or leaves the arena")));
            }
        }
        Ok(())
    }

    /// Samples a 21×21 lattice over the region and requires clearance at every point.
    fn spawn_is_clear(&self, r: Rect) -> bool {
        (0..=20).all(|i| {
            (0..=20).all(|j| {
                let p = Vec2::new(
                    r.min.x + (r.max.x - r.min.x) * i as f64 / 20.0,
                    r.min.y + (r.max.y - r.min.y) * j as f64 / 20.0,
                );
                self.arena.inside(p) && self.arena.clearance(p, &[]) >= self.clearance
            })
        })
    }
}

fn numbers(line: usize, text: &str) -> Result<Vec<f64>> {
    text.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() || v.is_infinite() && *v > 0.0)
                .ok_or_else(|| Error::parse(line, format!("bad number {t:?}")))
        })
        .collect()
}

fn exactly<const N: usize>(line: usize, key: &str, text: &str) -> Result<[f64; N]> {
    let v = numbers(line, text)?;
    v.try_into()
        .map_err(|v: Vec<f64>| Error::parse(line, format!("{key} expects {N} numbers, got {}", v.len())))
}

fn count(line: usize, key: &str, text: &str) -> Result<usize> {
    text.trim()
        .parse::<usize>()
        .map_err(|_| Error::parse(line, format!("{key} expects a non-negative integer")))
}

fn parse_obstacle(line: usize, text: &str) -> Result<Obstacle> {
    let mut parts = text.split_whitespace();
    let name = parts.next().ok_or_else(|| Error::parse(line, "obstacle needs a name"))?;
    let kind = parts.next().ok_or_else(|| Error::parse(line, "obstacle needs a kind"))?;
    let rest: Vec<&str> = parts.collect();
    let v = numbers(line, &rest.join(" "))?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::parse(line, "obstacle coordinates must be finite"));
    }
    let shape = match kind {
        "polygon" => {
            if v.len() < 6 || v.len() % 2 != 0 {
                return Err(Error::parse(line, "polygon needs at least three x y pairs"));
            }
            Shape::Polygon(v.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect())
        }
        "segment" => match v[..] {
            [x0, y0, x1, y1] => Shape::Segment(Vec2::new(x0, y0), Vec2::new(x1, y1)),
            _ => return Err(Error::parse(line, "segment needs x0 y0 x1 y1")),
        },
        "disc" => match v[..] {
            [x, y, r] => Shape::Disc {
                center: Vec2::new(x, y),
                radius: r,
            },
            _ => return Err(Error::parse(line, "disc needs x y radius")),
        },
        other => return Err(Error::parse(line, format!("unknown obstacle kind {other:?}"))),
    };
    Ok(Obstacle {
        name: name.to_string(),
        shape,
    })
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut s = Scenario::default();
    let mut seen = HashSet::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::parse(line, "expected key = value"))?;
        let (key, value) = (key.trim(), value.trim());
        if key != "obstacle" && !seen.insert(key.to_string()) {
            return Err(Error::parse(line, format!("duplicate key {key:?}")));
        }
        let scalar = |v: &str| exactly::<1>(line, key, v).map(|[x]| x);
        match key {
            "arena" => {
                let [w, h] = exactly::<2>(line, key, value)?;
                s.arena.width = w;
                s.arena.height = h;
            }
            "num_pursuers" => s.num_pursuers = count(line, key, value)?,
            "pursuer_speed" => s.pursuer_speed = scalar(value)?,
            "evader_speed" => s.evader_speed = scalar(value)?,
            "capture_radius" => s.capture_radius = scalar(value)?,
            "clearance" => s.clearance = scalar(value)?,
            "eta" => s.forces.eta = scalar(value)?,
            "rho0" => s.forces.rho0 = scalar(value)?,
            "lambda" => s.forces.lambda = scalar(value)?,
            "k_d" => s.k_d = scalar(value)?,
            "r_d_clip" => s.r_d_clip = scalar(value)?,
            "max_steps" => s.max_steps = count(line, key, value)?,
            "pursuer_spawn" | "evader_spawn" => {
                let [x0, y0, x1, y1] = exactly::<4>(line, key, value)?;
                let r = Rect::new(x0, y0, x1, y1);
                if key == "pursuer_spawn" {
                    s.pursuer_spawn = r;
                } else {
                    s.evader_spawn = r;
                }
            }
            "dynamic_obstacles" => s.dynamic_obstacles = count(line, key, value)?,
            "dynamic_radius" => s.dynamic_radius = scalar(value)?,
            "obstacle_range" => s.obstacle_range = scalar(value)?,
            "teammate_range" => s.teammate_range = scalar(value)?,
            "watch_range" => s.watch_range = scalar(value)?,
            "obstacle" => s.arena.obstacles.push(parse_obstacle(line, value)?),
            other => return Err(Error::parse(line, format!("unknown key {other:?}"))),
        }
    }
    s.validate()?;
    Ok(s)
}

pub fn write_scenario(s: &Scenario) -> String {
    let mut out = String::new();
    let r = |r: Rect| format!("{} {} {} {}", r.min.x, r.min.y, r.max.x, r.max.y);
    writeln!(out, "arena = {} {}", s.arena.width, s.arena.height).unwrap();
    writeln!(out, "num_pursuers = {}", s.num_pursuers).unwrap();
    writeln!(out, "pursuer_speed = {}", s.pursuer_speed).unwrap();
    writeln!(out, "evader_speed = {}", s.evader_speed).unwrap();
    writeln!(out, "capture_radius = {}", s.capture_radius).unwrap();
    writeln!(out, "clearance = {}", s.clearance).unwrap();
    writeln!(out, "eta = {}", s.forces.eta).unwrap();
    writeln!(out, "rho0 = {}", s.forces.rho0).unwrap();
    writeln!(out, "lambda = {}", s.forces.lambda).unwrap();
    writeln!(out, "k_d = {}", s.k_d).unwrap();
    writeln!(out, "r_d_clip = {}", s.r_d_clip).unwrap();
    writeln!(out, "max_steps = {}", s.max_steps).unwrap();
    writeln!(out, "pursuer_spawn = {}", r(s.pursuer_spawn)).unwrap();
    writeln!(out, "evader_spawn = {}", r(s.evader_spawn)).unwrap();
    writeln!(out, "dynamic_obstacles = {}", s.dynamic_obstacles).unwrap();
    writeln!(out, "dynamic_radius = {}", s.dynamic_radius).unwrap();
    writeln!(out, "obstacle_range = {}", s.obstacle_range).unwrap();
    writeln!(out, "teammate_range = {}", s.teammate_range).unwrap();
    writeln!(out, "watch_range = {}", s.watch_range).unwrap();
    for o in &s.arena.obstacles {
        let body = match &o.shape {
            Shape::Polygon(v) => {
                let pts: Vec<String> = v.iter().map(|p| format!("{} {}", p.x, p.y)).collect();
                format!("polygon {}", pts.join("  "))
            }
            Shape::Segment(a, b) => format!("segment {} {} {} {}", a.x, a.y, b.x, b.y),
            Shape::Disc { center, radius } => format!("disc {} {} {}", center.x, center.y, radius),
        };
        writeln!(out, "obstacle = {} {}", o.name, body).unwrap();
    }
    out
}
