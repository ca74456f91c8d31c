//! A simulated device: the actual trajectory, scripted exogenous events, and
//! the observe/step/repair interface the diagnostician uses.

use std::collections::BTreeSet;

use crate::action::{repair, ActionDescription, ActionError, FluentLiteral, Occurrence, State, Trajectory};
use crate::diagnosis::WorldOracle;
use crate::logic::Term;

#[derive(Debug, thiserror::Error)]
pub enum WorldError {
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error("{0} is not an observable fluent")]
    Unobservable(Term),
    #[error("time {time} is in the future (world is at {now})")]
    Future { time: usize, now: usize },
    #[error("{0} is not a state")]
    NotAState(String),
    #[error("{0} is not an action")]
    UnknownAction(Term),
    #[error("{0} is not a component")]
    UnknownComponent(Term),
    #[error("scripted occurrence {0} is not exogenous")]
    NotExogenous(Occurrence),
    #[error("action {{{actions}}} at {time} is inexecutable: {law}")]
    Inexecutable { actions: String, time: usize, law: String },
    #[error("action {{{actions}}} at {time} has no successor state")]
    NoSuccessor { actions: String, time: usize },
}

/// The actual trajectory `W` of a device and its schedule of exogenous events.
#[derive(Debug, Clone)]
pub struct World {
    sd: ActionDescription,
    actual: Trajectory,
    script: BTreeSet<Occurrence>,
    branching: Vec<usize>,
}

fn show(a: &BTreeSet<Term>) -> String {
    a.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
}

impl World {
    /// `sd` gains the repair actions; `initial` must be a state of it.
    pub fn new(
        sd: &ActionDescription,
        initial: impl IntoIterator<Item = FluentLiteral>,
        script: impl IntoIterator<Item = Occurrence>,
    ) -> Result<Self, WorldError> {
        let sd = sd.with_repair_actions();
        let initial: BTreeSet<FluentLiteral> = initial.into_iter().collect();
        if !sd.is_state(&initial) {
            let s = State::from_literals(initial);
            return Err(WorldError::NotAState(s.to_string()));
        }
        let script: BTreeSet<Occurrence> = script.into_iter().collect();
        if let Some(o) = script.iter().find(|o| !sd.signature.exogenous_actions.contains(&o.action)) {
            return Err(WorldError::NotExogenous(o.clone()));
        }
        Ok(World {
            sd,
            actual: Trajectory::initial(State::from_literals(initial)),
            script,
            branching: Vec::new(),
        })
    }

    pub fn description(&self) -> &ActionDescription {
        &self.sd
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.actual
    }

    pub fn script(&self) -> &BTreeSet<Occurrence> {
        &self.script
    }

    pub fn now(&self) -> usize {
        self.actual.len()
    }

    pub fn state(&self, t: usize) -> Option<&State> {
        self.actual.states.get(t)
    }

    /// Time points at which the world had to choose among several successors.
    pub fn branching_steps(&self) -> &[usize] {
        &self.branching
    }

    /// `f` if it holds at `t` in the actual trajectory, else `¬f`.
    pub fn observe(&self, t: usize, f: &Term) -> Result<FluentLiteral, WorldError> {
        if !self.sd.signature.observable.contains(f) {
            return Err(WorldError::Unobservable(f.clone()));
        }
        let s = self.state(t).ok_or(WorldError::Future { time: t, now: self.now() })?;
        Ok(if s.holds(f) {
            FluentLiteral::pos(f.clone())
        } else {
            FluentLiteral::neg(f.clone())
        })
    }

    fn advance(&mut self, actions: BTreeSet<Term>) -> Result<(), WorldError> {
        if let Some(a) = actions.iter().find(|a| !self.sd.signature.is_action(a)) {
            return Err(WorldError::UnknownAction(a.clone()));
        }
        let t = self.now();
        let s = self.actual.last().clone();
        if let Some(law) = self.sd.blocking_law(&s, &actions) {
            return Err(WorldError::Inexecutable {
                actions: show(&actions),
                time: t,
                law: format!("{}: {}", law.name, law),
            });
        }
        let next = self.sd.successors(&s, &actions)?;
        let Some(first) = next.first() else {
            return Err(WorldError::NoSuccessor {
                actions: show(&actions),
                time: t,
            });
        };
        if next.len() > 1 {
            self.branching.push(t);
        }
        self.actual.states.push(first.clone());
        self.actual.actions.push(actions);
        Ok(())
    }

    /// Executes `agent` together with the exogenous events scripted for now.
    pub fn step(&mut self, agent: &BTreeSet<Term>) -> Result<(), WorldError> {
        let t = self.now();
        let mut actions = agent.clone();
        actions.extend(self.script.iter().filter(|o| o.time == t).map(|o| o.action.clone()));
        self.advance(actions)
    }

    /// Repairs `components` in one step, with no exogenous events.
    pub fn repair(&mut self, components: &BTreeSet<Term>) -> Result<(), WorldError> {
        if let Some(c) = components.iter().find(|c| !self.sd.signature.components.contains(c)) {
            return Err(WorldError::UnknownComponent(c.clone()));
        }
        self.advance(components.iter().map(repair).collect())
    }
}

impl WorldOracle for World {
    type Error = WorldError;

    fn time(&self) -> usize {
        self.now()
    }

    fn observe(&self, t: usize, f: &Term) -> Result<FluentLiteral, WorldError> {
        World::observe(self, t, f)
    }

    fn repair(&mut self, components: &BTreeSet<Term>) -> Result<(), WorldError> {
        World::repair(self, components)
    }
}
