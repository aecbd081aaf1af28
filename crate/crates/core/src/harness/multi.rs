use rand::Rng;

use super::config::Algorithm;
use super::episode::{policy_tick, record, EpisodeStats, Rollout, Scheme, Track};
use super::learner::Learner;
use crate::error::Result;
use crate::learning::{argmax, epsilon_greedy, shaping_advice_reward, QFunction};
use crate::pursuit::{heading_to_bin, PursuitWorld};
use crate::space::{EnhancedAction, EnhancedActionSpace, MacroExecutor};

/// Potential-field expert.
pub const EXPERT_APF: usize = 1;
/// Wall-following expert.
pub const EXPERT_WALL: usize = 2;

/// Heading bins the two experts would pick for pursuer `i`.
pub fn expert_bins(world: &PursuitWorld, i: usize) -> [usize; 2] {
    [
        heading_to_bin(world.apf_heading(i)),
        heading_to_bin(world.wall_follow_heading(i)),
    ]
}

/// Heading bin executed for `m` by pursuer `i`.
pub fn lower_pursuit(m: EnhancedAction, world: &PursuitWorld, i: usize) -> usize {
    match (m.primitive_index(), m.expert()) {
        (Some(k), _) => k,
        (None, Some(EXPERT_APF)) => heading_to_bin(world.apf_heading(i)),
        _ => heading_to_bin(world.wall_follow_heading(i)),
    }
}

/// One training episode: every pursuer acts on its own observation with its
/// own executor, all of them read and feed the one shared learner.
pub fn train_pursuit_episode<Q, R>(
    world: &mut PursuitWorld,
    learner: &mut Learner<Vec<f64>, Q>,
    scheme: &Scheme,
    epsilon: f64,
    rng: &mut R,
) -> Result<EpisodeStats>
where
    Q: QFunction<Vec<f64>>,
    R: Rng + ?Sized,
{
    world.reset()?;
    let n = world.pursuers().len();
    let space = *learner.space();
    let mut tracks: Vec<Track<Vec<f64>>> = (0..n).map(|_| Track::default()).collect();
    let mut stats = EpisodeStats::default();
    let mut obs: Vec<Vec<f64>> = (0..n).map(|i| world.observation(i)).collect();
    loop {
        let mut decisions = Vec::with_capacity(n);
        for (i, track) in tracks.iter_mut().enumerate() {
            let d = track
                .exec
                .step(&space, &obs[i], |o| epsilon_greedy(&learner.q, o, &space, epsilon, rng))?;
            decisions.push((d, track.exec.remaining()));
        }
        let bins: Vec<usize> = decisions
            .iter()
            .enumerate()
            .map(|(i, (d, _))| lower_pursuit(d.action, world, i))
            .collect();
        let shaping = scheme.algorithm == Algorithm::Shaping;
        let demos_now: Vec<[usize; 2]> = if shaping {
            (0..n).map(|i| expert_bins(world, i)).collect()
        } else {
            Vec::new()
        };

        let step = world.step(&bins)?;
        let next: Vec<Vec<f64>> = (0..n).map(|i| world.observation(i)).collect();
        for i in 0..n {
            let (d, remaining) = decisions[i];
            let mut reward = step.rewards[i].total();
            if shaping {
                let demos = [demos_now[i], expert_bins(world, i)];
                let next_action = argmax(&learner.q.values(&next[i]));
                reward = shaping_advice_reward(
                    reward,
                    &0usize,
                    bins[i],
                    &1usize,
                    next_action,
                    |which: &usize, a| demos[*which].contains(&a),
                    scheme.shaping_potential,
                    if step.terminal { 0.0 } else { scheme.gamma },
                );
            }
            record(
                learner,
                &mut tracks[i],
                scheme,
                &obs[i],
                d.action,
                d.selected,
                remaining,
                reward,
                &next[i],
                step.terminal,
                step.done(),
                &mut stats.losses,
            )?;
            stats.macro_steps += usize::from(!d.action.is_primitive());
            stats.ret += step.rewards[i].total();
        }
        stats.steps += 1;
        if step.done() {
            stats.success = step.terminal;
            return Ok(stats);
        }
        obs = next;
    }
}

/// Evaluation rollout with decentralised execution of the shared policy.
#[allow(clippy::too_many_arguments)]
pub fn eval_pursuit_episode<Q, R>(
    world: &mut PursuitWorld,
    q: &Q,
    space: &EnhancedActionSpace,
    epsilon: f64,
    rng: &mut R,
    c_l: Option<f64>,
    trace: bool,
) -> Result<Rollout>
where
    Q: QFunction<Vec<f64>>,
    R: Rng + ?Sized,
{
    world.reset()?;
    let n = world.pursuers().len();
    let mut execs = vec![MacroExecutor::new(); n];
    let mut out = Rollout::default();
    loop {
        let mut bins = Vec::with_capacity(n);
        for (i, exec) in execs.iter_mut().enumerate() {
            let o = world.observation(i);
            let m = policy_tick(exec, space, q, &o, epsilon, rng, c_l, trace.then_some(&mut out.ima))?;
            out.durations.push(m.duration());
            bins.push(lower_pursuit(m, world, i));
        }
        let step = world.step(&bins)?;
        out.steps += 1;
        if step.done() {
            out.success = step.terminal;
            return Ok(out);
        }
    }
}
