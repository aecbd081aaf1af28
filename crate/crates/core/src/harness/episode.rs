use rand::Rng;

use super::config::Algorithm;
use super::learner::{Learner, Stored};
use crate::error::Result;
use crate::learning::{argmax, epsilon_greedy, fanout, shaping_advice_reward, QFunction, SmdpAccumulator};
use crate::pursuit::ima_check;
use crate::space::{lower_action, EnhancedAction, EnhancedActionSpace, Environment, ExpertPolicy, MacroExecutor};

/// Per-episode training summary.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodeStats {
    pub steps: usize,
    pub success: bool,
    /// Agent-timesteps spent inside expert macros.
    pub macro_steps: usize,
    /// Undiscounted environment return (summed over agents).
    pub ret: f64,
    /// Online losses, if the learner fits while acting.
    pub losses: Vec<f64>,
}

/// How rewards and storage are shaped by the algorithm.
#[derive(Clone, Copy, Debug)]
pub struct Scheme {
    pub algorithm: Algorithm,
    pub bonus: f64,
    pub gamma: f64,
    pub shaping_potential: f64,
}

impl Scheme {
    pub fn new(algorithm: Algorithm, hp: &crate::learning::Hyperparams) -> Self {
        Self {
            algorithm,
            bonus: algorithm.bonus(hp),
            gamma: hp.gamma,
            shaping_potential: hp.shaping_potential,
        }
    }
}

/// Per-agent macro bookkeeping during training.
pub(crate) struct Track<S> {
    pub exec: MacroExecutor,
    pub smdp: Option<SmdpAccumulator<S>>,
}

impl<S> Default for Track<S> {
    fn default() -> Self {
        Self {
            exec: MacroExecutor::new(),
            smdp: None,
        }
    }
}

/// Stores what one agent saw on one timestep. `remaining` is the executor's
/// tick count on that step, including the step itself.
#[allow(clippy::too_many_arguments)]
pub(crate) fn record<S: Clone, Q: QFunction<S>>(
    learner: &mut Learner<S, Q>,
    track: &mut Track<S>,
    scheme: &Scheme,
    state: &S,
    executed: EnhancedAction,
    selected: bool,
    remaining: u32,
    reward: f64,
    next: &S,
    terminal: bool,
    done: bool,
    losses: &mut Vec<f64>,
) -> Result<()> {
    if scheme.algorithm == Algorithm::Smdp {
        if selected {
            track.smdp = Some(SmdpAccumulator::start(state.clone(), executed, scheme.gamma));
        }
        let acc = track.smdp.as_mut().expect("macro started before it runs");
        // same per-step bonus the intra-macro chain would collect
        acc.push(reward + scheme.bonus * (remaining as f64 - 1.0));
        if remaining <= 1 || done {
            let t = track.smdp.take().expect("present").finish(next.clone(), terminal);
            losses.extend(learner.store(Stored::Macro(t))?);
        }
    } else {
        for t in fanout(state, executed, reward, next, terminal, scheme.bonus, learner.space()) {
            losses.extend(learner.store(Stored::Step(t))?);
        }
    }
    Ok(())
}

/// Runs one ε-greedy training episode on a single-agent environment.
///
/// `features` maps environment states to Q-function inputs; experts act on
/// the raw environment state.
pub fn train_episode<E, X, S, Q, R>(
    env: &mut E,
    experts: &[X],
    features: &impl Fn(&E::State) -> S,
    learner: &mut Learner<S, Q>,
    scheme: &Scheme,
    epsilon: f64,
    rng: &mut R,
) -> Result<EpisodeStats>
where
    E: Environment,
    X: ExpertPolicy<E::State>,
    S: Clone,
    Q: QFunction<S>,
    R: Rng + ?Sized,
{
    let mut stats = EpisodeStats::default();
    let mut state = env.reset();
    let mut feat = features(&state);
    let mut track = Track::<S>::default();
    let space = *learner.space();
    loop {
        let d = track
            .exec
            .step(&space, &feat, |f| epsilon_greedy(&learner.q, f, &space, epsilon, rng))?;
        let remaining = track.exec.remaining();
        let primitive = lower_action(d.action, &state, experts)?;
        let out = env.step(primitive)?;
        let next_feat = features(&out.state);
        let mut reward = out.reward;
        if scheme.algorithm == Algorithm::Shaping {
            let next_action = argmax(&learner.q.values(&next_feat));
            let demonstrated = |s: &E::State, a: usize| experts.iter().any(|e| e.act(s) == a);
            reward = shaping_advice_reward(
                reward,
                &state,
                primitive,
                &out.state,
                next_action,
                demonstrated,
                scheme.shaping_potential,
                // an absorbing state carries no potential
                if out.terminal { 0.0 } else { scheme.gamma },
            );
        }
        record(
            learner,
            &mut track,
            scheme,
            &feat,
            d.action,
            d.selected,
            remaining,
            reward,
            &next_feat,
            out.terminal,
            out.done(),
            &mut stats.losses,
        )?;
        stats.steps += 1;
        stats.macro_steps += usize::from(!d.action.is_primitive());
        stats.ret += out.reward;
        if out.done() {
            stats.success = out.terminal;
            return Ok(stats);
        }
        state = out.state;
        feat = next_feat;
    }
}

/// One interruption test made while a macro was mid-flight.
#[derive(Clone, Debug, PartialEq)]
pub struct ImaEvent {
    pub values: Vec<f64>,
    /// Flat index of the continuation `m^i(τ_r)`.
    pub continuation: usize,
    pub interrupted: bool,
}

/// A greedy evaluation episode.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Rollout {
    pub success: bool,
    pub steps: usize,
    /// Duration of the active macro at each timestep.
    pub durations: Vec<u32>,
    /// Filled only when tracing is requested.
    pub ima: Vec<ImaEvent>,
}

/// Evaluation tick: greedy selection (ε-greedy if `epsilon > 0`) with
/// optional interruption at threshold `c_l`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn policy_tick<S: ?Sized, Q: QFunction<S>, R: Rng + ?Sized>(
    exec: &mut MacroExecutor,
    space: &EnhancedActionSpace,
    q: &Q,
    state: &S,
    epsilon: f64,
    rng: &mut R,
    c_l: Option<f64>,
    trace: Option<&mut Vec<ImaEvent>>,
) -> Result<EnhancedAction> {
    let mut event = None;
    let d = exec.step_with_interrupt(
        space,
        state,
        |s| {
            if epsilon > 0.0 {
                epsilon_greedy(q, s, space, epsilon, rng)
            } else {
                space.action(argmax(&q.values(s))).expect("q width matches the space")
            }
        },
        |s, cont| {
            let Some(c_l) = c_l else { return false };
            let values = q.values(s);
            let k = space.flat_index(cont).expect("continuation lies in the space");
            let hit = ima_check(&values, k, c_l);
            event = Some(ImaEvent {
                values,
                continuation: k,
                interrupted: hit,
            });
            hit
        },
    )?;
    if let (Some(log), Some(e)) = (trace, event) {
        log.push(e);
    }
    Ok(d.action)
}

/// Evaluation rollout on a single-agent environment.
#[allow(clippy::too_many_arguments)]
pub fn eval_episode<E, X, S, Q, R>(
    env: &mut E,
    experts: &[X],
    features: &impl Fn(&E::State) -> S,
    q: &Q,
    space: &EnhancedActionSpace,
    epsilon: f64,
    rng: &mut R,
    c_l: Option<f64>,
    trace: bool,
) -> Result<Rollout>
where
    E: Environment,
    X: ExpertPolicy<E::State>,
    Q: QFunction<S>,
    R: Rng + ?Sized,
{
    let mut out = Rollout::default();
    let mut exec = MacroExecutor::new();
    let mut state = env.reset();
    loop {
        let feat = features(&state);
        let m = policy_tick(&mut exec, space, q, &feat, epsilon, rng, c_l, trace.then_some(&mut out.ima))?;
        out.durations.push(m.duration());
        let step = env.step(lower_action(m, &state, experts)?)?;
        out.steps += 1;
        if step.done() {
            out.success = step.terminal;
            return Ok(out);
        }
        state = step.state;
    }
}
