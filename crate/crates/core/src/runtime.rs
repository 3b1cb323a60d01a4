//! Running an ATN as the controller of an agent in a maze.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::builder::{Atn, NodeId};
use crate::maze::{AgentState, Maze, Outcome, Percept, Position};
use crate::token::Direction;

/// Default number of time steps per trial.
pub const DEFAULT_STEP_CAP: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeChoice {
    FirstEligible,
    RandomEligible,
}

/// What happens when no edge leaving the current node is eligible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefaultAction {
    /// Move in a uniformly random direction and stay on the node.
    Random,
    /// Abort the trial as failed.
    Finish,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunPolicy {
    pub edge_choice: EdgeChoice,
    pub default_action: DefaultAction,
    pub step_cap: usize,
}

impl Default for RunPolicy {
    fn default() -> Self {
        RunPolicy {
            edge_choice: EdgeChoice::FirstEligible,
            default_action: DefaultAction::Random,
            step_cap: DEFAULT_STEP_CAP,
        }
    }
}

impl FromStr for EdgeChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "first" | "first-eligible" => Ok(EdgeChoice::FirstEligible),
            "random" | "random-eligible" => Ok(EdgeChoice::RandomEligible),
            other => Err(format!("unknown edge choice `{other}`")),
        }
    }
}

impl fmt::Display for EdgeChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeChoice::FirstEligible => "first",
            EdgeChoice::RandomEligible => "random",
        })
    }
}

impl FromStr for DefaultAction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "random" => Ok(DefaultAction::Random),
            "finish" => Ok(DefaultAction::Finish),
            other => Err(format!("unknown default action `{other}`")),
        }
    }
}

impl fmt::Display for DefaultAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DefaultAction::Random => "random",
            DefaultAction::Finish => "finish",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialResult {
    pub steps: usize,
    pub found_food: bool,
    /// No eligible edge under [`DefaultAction::Finish`].
    pub failed: bool,
    pub reached_end: bool,
}

impl TrialResult {
    /// Steps charged to fitness: the step cap unless food was found.
    pub fn cost(&self, step_cap: usize) -> usize {
        if self.found_food {
            self.steps
        } else {
            step_cap
        }
    }
}

/// One line of a trial trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub node: usize,
    pub percept: Percept,
    /// `None` when the default action was used.
    pub edge: Option<usize>,
    pub action: Option<Direction>,
    pub position: Position,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edge = self.edge.map_or("DEFAULT".to_string(), |e| e.to_string());
        let action = self.action.map_or("FAIL", |d| d.as_str());
        write!(
            f,
            "{} {} {} {} {}",
            self.node, self.percept, edge, action, self.position
        )
    }
}

/// Edges leaving `node` whose conditions all hold under `percept`, in creation order.
pub fn eligible_edges(atn: &Atn, node: NodeId, percept: &Percept) -> Vec<usize> {
    atn.outgoing(node)
        .iter()
        .copied()
        .filter(|&i| {
            atn.edges()[i]
                .conditions
                .iter()
                .all(|c| percept.get(c.direction) == c.kind)
        })
        .collect()
}

fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> Direction {
    Direction::ALL[rng.random_range(0..Direction::ALL.len())]
}

pub fn run_trial<R: Rng + ?Sized>(
    atn: &Atn,
    maze: &Maze,
    start: Position,
    policy: &RunPolicy,
    rng: &mut R,
) -> TrialResult {
    run_trial_inner(atn, maze, start, policy, rng, None)
}

/// Like [`run_trial`], also recording one [`TraceStep`] per time step.
pub fn run_trial_traced<R: Rng + ?Sized>(
    atn: &Atn,
    maze: &Maze,
    start: Position,
    policy: &RunPolicy,
    rng: &mut R,
) -> (TrialResult, Vec<TraceStep>) {
    let mut trace = Vec::new();
    let result = run_trial_inner(atn, maze, start, policy, rng, Some(&mut trace));
    (result, trace)
}

fn run_trial_inner<R: Rng + ?Sized>(
    atn: &Atn,
    maze: &Maze,
    start: Position,
    policy: &RunPolicy,
    rng: &mut R,
    mut trace: Option<&mut Vec<TraceStep>>,
) -> TrialResult {
    let cap = policy.step_cap;
    let mut node = Atn::START;
    let mut state = AgentState {
        position: start,
        steps: 0,
    };
    let unfinished = |failed, reached_end| TrialResult {
        steps: cap,
        found_food: false,
        failed,
        reached_end,
    };

    while state.steps < cap {
        let percept = maze.percept(state.position);
        let eligible = eligible_edges(atn, node, &percept);
        let (edge, action) = if eligible.is_empty() {
            match policy.default_action {
                DefaultAction::Finish => {
                    if let Some(t) = trace.as_deref_mut() {
                        t.push(TraceStep {
                            node: atn.display_id(node),
                            percept,
                            edge: None,
                            action: None,
                            position: state.position,
                        });
                    }
                    return unfinished(true, false);
                }
                DefaultAction::Random => (None, random_direction(rng)),
            }
        } else {
            let chosen = match policy.edge_choice {
                EdgeChoice::FirstEligible => eligible[0],
                EdgeChoice::RandomEligible => eligible[rng.random_range(0..eligible.len())],
            };
            let action = match atn.edges()[chosen].actions.last() {
                Some(&d) => d,
                None => random_direction(rng),
            };
            (Some(chosen), action)
        };

        let (next, outcome) = maze.step(state, action);
        if let Some(t) = trace.as_deref_mut() {
            t.push(TraceStep {
                node: atn.display_id(node),
                percept,
                edge,
                action: Some(action),
                position: next.position,
            });
        }
        state = next;
        if outcome == Outcome::FoundFood {
            return TrialResult {
                steps: state.steps,
                found_food: true,
                failed: false,
                reached_end: false,
            };
        }
        if let Some(e) = edge {
            node = atn.edges()[e].dst;
            if node == Atn::END {
                return unfinished(false, true);
            }
        }
    }
    unfinished(false, false)
}

/// Per-start-cell step costs, one trial per start cell in start-cell order.
pub fn trial_costs<R: Rng + ?Sized>(
    atn: &Atn,
    maze: &Maze,
    policy: &RunPolicy,
    rng: &mut R,
) -> Vec<usize> {
    maze.start_cells()
        .iter()
        .map(|&start| run_trial(atn, maze, start, policy, rng).cost(policy.step_cap))
        .collect()
}

/// Mean steps to food over all start cells (lower is better).
pub fn evaluate<R: Rng + ?Sized>(atn: &Atn, maze: &Maze, policy: &RunPolicy, rng: &mut R) -> f64 {
    let costs = trial_costs(atn, maze, policy, rng);
    costs.iter().sum::<usize>() as f64 / costs.len() as f64
}
