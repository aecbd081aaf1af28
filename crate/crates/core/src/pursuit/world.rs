use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::forces::{apf_force, escape_decide, wall_follow_heading, EscapeMode};
use super::geom::{angle_between, wrap_angle, Arena, Rect, Shape, Vec2};
use super::scenario::Scenario;
use crate::error::{Error, Result};

pub const NUM_HEADINGS: usize = 24;
pub const OBS_WIDTH: usize = 9;
pub const CAPTURE_REWARD: f64 = 50.0;
pub const TURN_PENALTY: f64 = -5.0;
pub const COLLISION_PENALTY: f64 = -50.0;

/// Heading of bin `k`: `2πk/24`, wrapped into `(−π, π]`.
pub fn bin_angle(k: usize) -> f64 {
    wrap_angle(TAU * (k % NUM_HEADINGS) as f64 / NUM_HEADINGS as f64)
}

/// Nearest heading bin.
pub fn heading_to_bin(theta: f64) -> usize {
    let width = TAU / NUM_HEADINGS as f64;
    (theta.rem_euclid(TAU) / width).round() as usize % NUM_HEADINGS
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Agent {
    pub pos: Vec2,
    pub heading: f64,
    pub speed: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DynamicObstacle {
    pub pos: Vec2,
    pub dir: f64,
    pub hold: u32,
    pub radius: f64,
}

impl DynamicObstacle {
    pub fn shape(&self) -> Shape {
        Shape::Disc {
            center: self.pos,
            radius: self.radius,
        }
    }
}

/// Moves `d` one step at `speed`, reflecting off walls and static obstacles,
/// and redraws its direction and hold time when the hold runs out.
pub fn dynamic_obstacle_step<R: Rng + ?Sized>(d: &DynamicObstacle, rng: &mut R, arena: &Arena, speed: f64) -> DynamicObstacle {
    let fits = |p: Vec2| arena.inside(p) && arena.clearance(p, &[]) >= d.radius;
    let u = Vec2::from_angle(d.dir);
    let contact = arena.nearest(d.pos + u * speed, &[]);
    let reflected = match (d.pos + u * speed - contact.point).normalized() {
        Some(n) => u - n * (2.0 * u.dot(n)),
        None => -u,
    };
    let mut next = *d;
    for cand in [u, reflected, -u] {
        let p = d.pos + cand * speed;
        if fits(p) {
            next.pos = p;
            next.dir = cand.angle();
            break;
        }
    }
    next.hold = next.hold.saturating_sub(1);
    if next.hold == 0 {
        next.dir = rng.random_range(-PI..PI);
        next.hold = rng.random_range(10..=15);
    }
    next
}

/// Moves from `from` along unit `dir` by `dist`, stopping where clearance to
/// the obstacles would drop below `clearance`. Returns the end point and
/// whether the move was cut short.
pub fn clipped_move(arena: &Arena, extra: &[Shape], from: Vec2, dir: Vec2, dist: f64, clearance: f64) -> (Vec2, bool) {
    let gap = |p: Vec2| if arena.inside(p) { arena.clearance(p, extra) } else { -1.0 };
    let start_gap = gap(from);
    let target = from + dir * dist;
    if start_gap < clearance {
        // already in contact: only moves that open the gap are allowed
        let end = if gap(target) > start_gap { target } else { from };
        return (end, true);
    }
    let n = ((dist / (0.5 * clearance)).ceil() as usize).max(1);
    let mut lo = 0.0;
    for k in 1..=n {
        let t = k as f64 / n as f64;
        if gap(from + dir * (dist * t)) < clearance {
            let mut hi = t;
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                if gap(from + dir * (dist * mid)) >= clearance {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return (from + dir * (dist * lo), true);
        }
        lo = t;
    }
    (target, false)
}

/// Per-pursuer reward decomposition.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RewardParts {
    pub main: f64,
    pub time: f64,
    pub collision: f64,
    pub distance: f64,
}

impl RewardParts {
    pub fn total(&self) -> f64 {
        self.main + self.time + self.collision + self.distance
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PursuitStep {
    pub rewards: Vec<RewardParts>,
    /// Every pursuer is within the capture radius.
    pub terminal: bool,
    /// Step cap reached without termination.
    pub truncated: bool,
    /// Rule the evader followed, `None` once it is caught.
    pub escape: Option<EscapeMode>,
}

impl PursuitStep {
    pub fn done(&self) -> bool {
        self.terminal || self.truncated
    }
}

/// Continuous pursuit arena with one evader and several pursuers.
#[derive(Clone, Debug)]
pub struct PursuitWorld {
    scenario: Scenario,
    rng: ChaCha8Rng,
    pursuers: Vec<Agent>,
    evader: Agent,
    dynamic: Vec<DynamicObstacle>,
    captured: Vec<bool>,
    evader_frozen: bool,
    t: usize,
    done: bool,
}

fn sample_in<R: Rng + ?Sized>(rng: &mut R, r: Rect) -> Vec2 {
    let x = if r.max.x > r.min.x { rng.random_range(r.min.x..=r.max.x) } else { r.min.x };
    let y = if r.max.y > r.min.y { rng.random_range(r.min.y..=r.max.y) } else { r.min.y };
    Vec2::new(x, y)
}

impl PursuitWorld {
    /// Builds a world and places agents with [`PursuitWorld::reset`].
    pub fn new(scenario: Scenario, seed: u64) -> Result<Self> {
        scenario.validate()?;
        let n = scenario.num_pursuers;
        let mut w = Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            pursuers: Vec::new(),
            evader: Agent {
                pos: Vec2::ZERO,
                heading: 0.0,
                speed: scenario.evader_speed,
            },
            dynamic: Vec::new(),
            captured: vec![false; n],
            evader_frozen: false,
            t: 0,
            done: false,
            scenario,
        };
        w.reset()?;
        Ok(w)
    }

    /// Places agents explicitly; headings are kept, speeds come from the
    /// scenario. No dynamic obstacles are spawned.
    pub fn from_positions(scenario: Scenario, pursuers: &[(Vec2, f64)], evader: (Vec2, f64), seed: u64) -> Result<Self> {
        scenario.validate()?;
        if pursuers.len() != scenario.num_pursuers {
            return Err(Error::invalid("pursuer count differs from the scenario"));
        }
        let agent = |(pos, heading): (Vec2, f64), speed| Agent { pos, heading, speed };
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            pursuers: pursuers.iter().map(|p| agent(*p, scenario.pursuer_speed)).collect(),
            evader: agent(evader, scenario.evader_speed),
            dynamic: Vec::new(),
            captured: vec![false; pursuers.len()],
            evader_frozen: false,
            t: 0,
            done: false,
            scenario,
        })
    }

    /// Moves every agent to the given `(position, heading)` and restarts the
    /// clock without touching the scenario or the RNG.
    pub fn place(&mut self, pursuers: &[(Vec2, f64)], evader: (Vec2, f64)) -> Result<()> {
        if pursuers.len() != self.scenario.num_pursuers {
            return Err(Error::invalid("pursuer count differs from the scenario"));
        }
        for (a, (pos, heading)) in self.pursuers.iter_mut().zip(pursuers) {
            a.pos = *pos;
            a.heading = *heading;
        }
        self.evader.pos = evader.0;
        self.evader.heading = evader.1;
        self.captured = vec![false; pursuers.len()];
        self.evader_frozen = false;
        self.t = 0;
        self.done = false;
        Ok(())
    }

    /// New episode: uniform spawns with clearance, pursuers facing the
    /// evader, evader facing away from the pursuers' centroid.
    pub fn reset(&mut self) -> Result<()> {
        let sc = &self.scenario;
        let clear = |p: Vec2, others: &[Vec2]| {
            sc.arena.clearance(p, &[]) >= sc.clearance && others.iter().all(|o| o.distance(p) >= 2.0 * sc.clearance + 1e-6)
        };
        let mut placed: Vec<Vec2> = Vec::new();
        for _ in 0..sc.num_pursuers {
            let p = (0..10_000)
                .map(|_| sample_in(&mut self.rng, sc.pursuer_spawn))
                .find(|p| clear(*p, &placed))
                .ok_or_else(|| Error::invalid("could not place pursuers in their spawn region"))?;
            placed.push(p);
        }
        let e = (0..10_000)
            .map(|_| sample_in(&mut self.rng, sc.evader_spawn))
            .find(|p| clear(*p, &[]))
            .ok_or_else(|| Error::invalid("could not place the evader"))?;
        let centroid = placed.iter().fold(Vec2::ZERO, |a, p| a + *p) * (1.0 / placed.len() as f64);
        self.pursuers = placed
            .iter()
            .map(|p| Agent {
                pos: *p,
                heading: (e - *p).angle(),
                speed: sc.pursuer_speed,
            })
            .collect();
        self.evader = Agent {
            pos: e,
            heading: (e - centroid).normalized().map_or(0.0, Vec2::angle),
            speed: sc.evader_speed,
        };
        self.dynamic.clear();
        for _ in 0..sc.dynamic_obstacles {
            let r = sc.dynamic_radius;
            let agents: Vec<Vec2> = placed.iter().copied().chain([e]).collect();
            let area = Rect::new(r, r, sc.arena.width - r, sc.arena.height - r);
            let pos = (0..10_000)
                .map(|_| sample_in(&mut self.rng, area))
                .find(|p| {
                    sc.arena.clearance(*p, &[]) >= r && agents.iter().all(|a| a.distance(*p) >= r + sc.clearance + 0.5)
                })
                .ok_or_else(|| Error::invalid("could not place dynamic obstacles"))?;
            let dir = self.rng.random_range(-PI..PI);
            let hold = self.rng.random_range(10..=15);
            self.dynamic.push(DynamicObstacle { pos, dir, hold, radius: r });
        }
        self.captured = vec![false; sc.num_pursuers];
        self.evader_frozen = false;
        self.t = 0;
        self.done = false;
        Ok(())
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn pursuers(&self) -> &[Agent] {
        &self.pursuers
    }

    pub fn evader(&self) -> &Agent {
        &self.evader
    }

    pub fn dynamic_obstacles(&self) -> &[DynamicObstacle] {
        &self.dynamic
    }

    pub fn time(&self) -> usize {
        self.t
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn evader_frozen(&self) -> bool {
        self.evader_frozen
    }

    /// Pursuers that have captured the evader at least once.
    pub fn captured(&self) -> &[bool] {
        &self.captured
    }

    /// Stops the evader as if it had been caught.
    pub fn freeze_evader(&mut self) {
        self.evader_frozen = true;
    }

    fn dynamic_shapes(&self) -> Vec<Shape> {
        self.dynamic.iter().map(DynamicObstacle::shape).collect()
    }

    /// Closest obstacle point (walls, static and dynamic obstacles) within `range`.
    pub fn nearest_obstacle(&self, p: Vec2, range: f64) -> Option<Vec2> {
        let c = self.scenario.arena.nearest(p, &self.dynamic_shapes());
        (c.distance < range).then_some(c.point)
    }

    pub fn teammates(&self, i: usize) -> Vec<Vec2> {
        self.pursuers
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, a)| a.pos)
            .collect()
    }

    /// Heading suggested by the potential-field expert for pursuer `i`.
    pub fn apf_heading(&self, i: usize) -> f64 {
        let me = self.pursuers[i];
        let nearest = self.nearest_obstacle(me.pos, self.scenario.forces.rho0);
        let f = apf_force(me.pos, self.evader.pos, &self.teammates(i), nearest, &self.scenario.forces);
        f.normalized().map_or(me.heading, Vec2::angle)
    }

    /// Heading suggested by the wall-following expert for pursuer `i`.
    pub fn wall_follow_heading(&self, i: usize) -> f64 {
        let me = self.pursuers[i];
        let range = self.scenario.forces.rho0;
        wall_follow_heading(me.pos, me.heading, me.speed, |p| self.nearest_obstacle(p, range))
    }

    /// Egocentric observation of pursuer `i`: evader, nearest obstacle and
    /// two nearest teammates as (distance / diagonal, relative bearing),
    /// then the pursuer's own heading.
    pub fn observation(&self, i: usize) -> Vec<f64> {
        let sc = &self.scenario;
        let me = self.pursuers[i];
        let diag = sc.arena.diagonal();
        let rel = |p: Vec2| -> (f64, f64) {
            let d = p - me.pos;
            let bearing = d.normalized().map_or(0.0, |u| wrap_angle(u.angle() - me.heading));
            ((d.norm() / diag).min(1.0), bearing)
        };
        let mut obs = Vec::with_capacity(OBS_WIDTH);
        let (d, b) = rel(self.evader.pos);
        obs.extend([d, b]);
        let (d, b) = self
            .nearest_obstacle(me.pos, sc.obstacle_range)
            .map_or((1.0, 0.0), rel);
        obs.extend([d, b]);
        let mut mates: Vec<Vec2> = self
            .teammates(i)
            .into_iter()
            .filter(|p| p.distance(me.pos) <= sc.teammate_range)
            .collect();
        mates.sort_by(|a, b| a.distance(me.pos).total_cmp(&b.distance(me.pos)));
        for k in 0..2 {
            let (d, b) = mates.get(k).map_or((1.0, 0.0), |p| rel(*p));
            obs.extend([d, b]);
        }
        obs.push(wrap_angle(me.heading));
        obs
    }

    /// Advances one timestep with each pursuer steering to heading bin `bins[i]`.
    pub fn step(&mut self, bins: &[usize]) -> Result<PursuitStep> {
        if self.done {
            return Err(Error::invalid("step called on a finished episode"));
        }
        if bins.len() != self.pursuers.len() {
            return Err(Error::invalid(format!(
                "expected {} headings, got {}",
                self.pursuers.len(),
                bins.len()
            )));
        }
        if let Some(b) = bins.iter().find(|b| **b >= NUM_HEADINGS) {
            return Err(Error::invalid(format!("heading bin {b} out of range")));
        }
        let sc = self.scenario.clone();
        let positions: Vec<Vec2> = self.pursuers.iter().map(|a| a.pos).collect();
        let before: Vec<f64> = positions.iter().map(|p| p.distance(self.evader.pos)).collect();

        let escape = if self.evader_frozen {
            None
        } else {
            let nearest = self.nearest_obstacle(self.evader.pos, sc.forces.rho0);
            let (h, mode) = escape_decide(self.evader.pos, self.evader.heading, &positions, nearest, &sc.escape_params());
            self.evader.heading = h;
            Some(mode)
        };

        let mut dynamic = std::mem::take(&mut self.dynamic);
        for d in &mut dynamic {
            *d = dynamic_obstacle_step(d, &mut self.rng, &sc.arena, sc.pursuer_speed);
        }
        self.dynamic = dynamic;
        let extra = self.dynamic_shapes();

        let mut rewards = vec![RewardParts::default(); self.pursuers.len()];
        let mut collided = vec![false; self.pursuers.len()];
        for (i, agent) in self.pursuers.iter_mut().enumerate() {
            let h = bin_angle(bins[i]);
            if angle_between(h, agent.heading) > FRAC_PI_4 + 1e-9 {
                rewards[i].time = TURN_PENALTY;
            }
            let (pos, hit) = clipped_move(&sc.arena, &extra, agent.pos, Vec2::from_angle(h), agent.speed, sc.clearance);
            agent.pos = pos;
            agent.heading = h;
            collided[i] = hit;
        }
        for i in 0..self.pursuers.len() {
            for j in i + 1..self.pursuers.len() {
                if self.pursuers[i].pos.distance(self.pursuers[j].pos) < 2.0 * sc.clearance {
                    collided[i] = true;
                    collided[j] = true;
                }
            }
        }

        if !self.evader_frozen {
            let e = self.evader;
            let (pos, _) = clipped_move(&sc.arena, &extra, e.pos, Vec2::from_angle(e.heading), e.speed, sc.clearance);
            self.evader.pos = pos;
        }

        self.t += 1;
        let mut all_in = true;
        for (i, agent) in self.pursuers.iter().enumerate() {
            let d = agent.pos.distance(self.evader.pos);
            let within = d < sc.capture_radius;
            all_in &= within;
            if within && !self.captured[i] {
                self.captured[i] = true;
                rewards[i].main = CAPTURE_REWARD;
            }
            if collided[i] {
                rewards[i].collision = COLLISION_PENALTY;
            }
            rewards[i].distance = (sc.k_d * (before[i] - d)).clamp(-sc.r_d_clip, sc.r_d_clip);
        }
        if self.captured.iter().any(|c| *c) {
            self.evader_frozen = true;
        }
        let terminal = all_in;
        let truncated = !terminal && self.t >= sc.max_steps;
        self.done = terminal || truncated;
        Ok(PursuitStep {
            rewards,
            terminal,
            truncated,
            escape,
        })
    }
}

/// One row of an exported trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub t: usize,
    pub agent: String,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub rewards: RewardParts,
    pub active_macro: String,
}

/// Rows for the current world state: the evader, then each pursuer.
pub fn snapshot_rows(world: &PursuitWorld, rewards: &[RewardParts], macros: &[String]) -> Vec<TrajectoryRow> {
    let e = world.evader();
    let mut rows = vec![TrajectoryRow {
        t: world.time(),
        agent: "E".into(),
        x: e.pos.x,
        y: e.pos.y,
        heading: e.heading,
        rewards: RewardParts::default(),
        active_macro: String::new(),
    }];
    for (i, a) in world.pursuers().iter().enumerate() {
        rows.push(TrajectoryRow {
            t: world.time(),
            agent: format!("P{}", i + 1),
            x: a.pos.x,
            y: a.pos.y,
            heading: a.heading,
            rewards: rewards.get(i).copied().unwrap_or_default(),
            active_macro: macros.get(i).cloned().unwrap_or_default(),
        });
    }
    rows
}

pub fn write_trajectory_csv<W: Write>(rows: &[TrajectoryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let to_internal = |e: csv::Error| Error::Internal(format!("csv: {e}"));
    w.write_record(["t", "agent", "x", "y", "heading", "r_main", "r_time", "r_collision", "r_distance", "macro"])
        .map_err(to_internal)?;
    for r in rows {
        w.write_record([
            r.t.to_string(),
            r.agent.clone(),
            r.x.to_string(),
            r.y.to_string(),
            r.heading.to_string(),
            r.rewards.main.to_string(),
            r.rewards.time.to_string(),
            r.rewards.collision.to_string(),
            r.rewards.distance.to_string(),
            r.active_macro.clone(),
        ])
        .map_err(to_internal)?;
    }
    w.flush().map_err(|e| Error::Internal(format!("csv flush: {e}")))?;
    Ok(())
}
