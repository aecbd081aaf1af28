//! Continuous multi-pursuer arena: constant-speed kinematics, the evader's
//! force-based escape rules, potential-field and wall-following pursuer
//! experts, reward decomposition, dynamic obstacles and macro interruption.

mod forces;
mod geom;
mod scenario;
mod world;

pub use forces::{
    apf_force, attraction, escape_decide, evader_repulsion, inter_individual, obstacle_repulsion, obtuse,
    wall_follow_heading, widest_gap, EscapeMode, EscapeParams, ForceParams,
};
pub use geom::{angle_between, closest_on_segment, wrap_angle, Arena, Contact, Obstacle, Rect, Shape, Vec2};
pub use scenario::{parse_scenario, write_scenario, Scenario};
pub use world::{
    bin_angle, clipped_move, dynamic_obstacle_step, heading_to_bin, snapshot_rows, write_trajectory_csv, Agent,
    DynamicObstacle, PursuitStep, PursuitWorld, RewardParts, TrajectoryRow, CAPTURE_REWARD, COLLISION_PENALTY,
    NUM_HEADINGS, OBS_WIDTH, TURN_PENALTY,
};

/// True when some action other than `running` beats it by more than `c_l`.
pub fn ima_check(values: &[f64], running: usize, c_l: f64) -> bool {
    let threshold = values[running] + c_l;
    values
        .iter()
        .enumerate()
        .any(|(k, v)| k != running && *v > threshold)
}
