use crate::error::{Error, Result};
use crate::learning::{
    imalr_target, imalr_target_double, smdp_target, FitSample, Hyperparams, QFunction, ReplayBuffer, SmdpTransition,
    Transition,
};
use crate::space::EnhancedActionSpace;

/// A replayable experience: an IMALR step or a completed SMDP macro.
#[derive(Clone, Debug, PartialEq)]
pub enum Stored<S> {
    Step(Transition<S>),
    Macro(SmdpTransition<S>),
}

impl<S> Stored<S> {
    fn state(&self) -> &S {
        match self {
            Stored::Step(t) => &t.state,
            Stored::Macro(t) => &t.state,
        }
    }
}

/// One regression target handed to the Q-function.
#[derive(Clone, Debug, PartialEq)]
pub struct UpdateRecord<S> {
    pub state: S,
    pub action: usize,
    pub target: f64,
}

struct TargetRule<'a> {
    space: &'a EnhancedActionSpace,
    gamma: f64,
    double_q: bool,
}

impl TargetRule<'_> {
    fn eval<S, Q: QFunction<S>>(&self, item: &Stored<S>, live: &Q, frozen: &Q) -> Result<(usize, f64)> {
        match item {
            Stored::Step(t) => {
                let y = if self.double_q {
                    imalr_target_double(t, live, frozen, self.gamma, self.space)?
                } else {
                    imalr_target(t, frozen, self.gamma, self.space)?
                };
                Ok((self.space.flat_index(t.action)?, y))
            }
            Stored::Macro(t) => Ok((self.space.flat_index(t.action)?, smdp_target(t, frozen, self.gamma)?)),
        }
    }
}

/// Q-function, target copy, replay memory and update bookkeeping shared by
/// every training loop.
pub struct Learner<S, Q> {
    pub q: Q,
    target: Q,
    space: EnhancedActionSpace,
    gamma: f64,
    double_q: bool,
    minibatch: usize,
    updates_per_episode: usize,
    sync_interval: u64,
    online: bool,
    replay: ReplayBuffer<Stored<S>>,
    updates: u64,
    stored: u64,
    /// When set, every regression target is appended here.
    pub log: Option<Vec<UpdateRecord<S>>>,
}

impl<S: Clone, Q: QFunction<S>> Learner<S, Q> {
    pub fn new(q: Q, space: EnhancedActionSpace, hp: &Hyperparams, online: bool, replay_seed: u64) -> Result<Self> {
        if q.num_actions() != space.len() {
            return Err(Error::invalid(format!(
                "Q-function has {} outputs, action space has {}",
                q.num_actions(),
                space.len()
            )));
        }
        Ok(Self {
            target: q.snapshot(),
            q,
            space,
            gamma: hp.gamma,
            double_q: hp.double_q,
            minibatch: hp.minibatch,
            updates_per_episode: hp.updates_per_episode,
            sync_interval: hp.target_sync_interval,
            online,
            replay: ReplayBuffer::new(hp.memory_size, replay_seed),
            updates: 0,
            stored: 0,
            log: None,
        })
    }

    pub fn space(&self) -> &EnhancedActionSpace {
        &self.space
    }

    /// Experiences stored so far.
    pub fn stored(&self) -> u64 {
        self.stored
    }

    /// Minibatch updates performed so far.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn replay_len(&self) -> usize {
        self.replay.len()
    }

    fn rule(&self) -> TargetRule<'_> {
        TargetRule {
            space: &self.space,
            gamma: self.gamma,
            double_q: self.double_q,
        }
    }

    fn checked(&self, loss: f64) -> Result<f64> {
        if loss.is_finite() {
            Ok(loss)
        } else {
            Err(Error::TrainingFailure(format!(
                "loss became {loss} after {} updates and {} stored experiences",
                self.updates, self.stored
            )))
        }
    }

    /// Files one experience. In online mode it is also fitted at once,
    /// bootstrapping from the live Q-function; the loss is returned.
    pub fn store(&mut self, item: Stored<S>) -> Result<Option<f64>> {
        self.stored += 1;
        let mut loss = None;
        if self.online {
            let (action, target) = self.rule().eval(&item, &self.q, &self.q)?;
            let l = self.q.fit(&[FitSample {
                state: item.state(),
                action,
                target,
            }]);
            if let Some(log) = &mut self.log {
                log.push(UpdateRecord {
                    state: item.state().clone(),
                    action,
                    target,
                });
            }
            loss = Some(self.checked(l)?);
        }
        if self.updates_per_episode > 0 {
            self.replay.push(item);
        }
        Ok(loss)
    }

    /// End-of-episode replay phase: up to `T_u` minibatch updates with a
    /// target copy refreshed every `f` updates. Returns the losses.
    pub fn train(&mut self) -> Result<Vec<f64>> {
        let mut losses = Vec::with_capacity(self.updates_per_episode);
        for _ in 0..self.updates_per_episode {
            if self.replay.is_empty() {
                break;
            }
            let rule = TargetRule {
                space: &self.space,
                gamma: self.gamma,
                double_q: self.double_q,
            };
            let batch = self.replay.sample(self.minibatch);
            let mut samples = Vec::with_capacity(batch.len());
            for item in &batch {
                let (action, target) = rule.eval(*item, &self.q, &self.target)?;
                samples.push(FitSample {
                    state: item.state(),
                    action,
                    target,
                });
            }
            if let Some(log) = &mut self.log {
                log.extend(samples.iter().map(|s| UpdateRecord {
                    state: s.state.clone(),
                    action: s.action,
                    target: s.target,
                }));
            }
            let loss = self.q.fit(&samples);
            self.updates += 1;
            losses.push(self.checked(loss)?);
            if self.updates.is_multiple_of(self.sync_interval) {
                self.target = self.q.snapshot();
            }
        }
        Ok(losses)
    }
}
