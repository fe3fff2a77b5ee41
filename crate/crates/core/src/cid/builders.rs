//! Finite-window diagrams of the recommendation problem.
//!
//! Every builder produces `timesteps` state/decision slices. In the naive
//! and extended diagrams a reward compares two consecutive states, so they
//! carry one reward node fewer than they have states.

use std::fmt;
use std::str::FromStr;

use super::{Cid, CidError, CidNode, EdgeKind, Family, NodeKind};

/// The four diagrams this crate knows how to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiagramKind {
    Naive,
    Extended,
    Observation,
    RfTampering,
}

impl DiagramKind {
    pub const ALL: [DiagramKind; 4] =
        [DiagramKind::Naive, DiagramKind::Extended, DiagramKind::Observation, DiagramKind::RfTampering];

    pub fn build(self, timesteps: usize) -> Result<Cid, CidError> {
        match self {
            DiagramKind::Naive => build_naive_cid(timesteps),
            DiagramKind::Extended => build_extended_cid(timesteps),
            DiagramKind::Observation => build_observation_cid(timesteps),
            DiagramKind::RfTampering => build_rf_tampering_cid(timesteps),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DiagramKind::Naive => "naive",
            DiagramKind::Extended => "extended",
            DiagramKind::Observation => "observation",
            DiagramKind::RfTampering => "rf-tampering",
        }
    }
}

impl fmt::Display for DiagramKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DiagramKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive" => Ok(DiagramKind::Naive),
            "extended" => Ok(DiagramKind::Extended),
            "observation" => Ok(DiagramKind::Observation),
            "rf-tampering" | "rf" => Ok(DiagramKind::RfTampering),
            other => Err(format!("unknown diagram '{other}' (expected naive, extended, observation or rf-tampering)")),
        }
    }
}

fn id(family: &Family, t: usize) -> String {
    format!("{}_{}", family.symbol(), t)
}

fn check_horizon(timesteps: usize) -> Result<(), CidError> {
    if timesteps < 2 {
        Err(CidError::InvalidHorizon(timesteps))
    } else {
        Ok(())
    }
}

fn add(cid: &mut Cid, kind: NodeKind, family: Family, t: usize) {
    cid.add_node(CidNode::new(kind, family, t)).expect("builders never emit duplicate ids");
}

/// States, decisions and rewards only. The reward for step `x` compares
/// `S_x` with `S_{x+1}`.
pub fn build_naive_cid(timesteps: usize) -> Result<Cid, CidError> {
    check_horizon(timesteps)?;
    let mut cid = Cid::new();
    for x in 0..timesteps {
        add(&mut cid, NodeKind::Structural, Family::State, x);
        add(&mut cid, NodeKind::Decision, Family::Action, x);
        cid.add_edge(id(&Family::State, x), id(&Family::Action, x), EdgeKind::Information);
    }
    for x in 0..timesteps - 1 {
        add(&mut cid, NodeKind::Utility, Family::Reward, x);
        let s = id(&Family::State, x);
        let s_next = id(&Family::State, x + 1);
        let a = id(&Family::Action, x);
        let r = id(&Family::Reward, x);
        cid.add_edge(&s, &s_next, EdgeKind::Causal);
        cid.add_edge(&a, &s_next, EdgeKind::Causal);
        cid.add_edge(&s, &r, EdgeKind::Causal);
        cid.add_edge(&s_next, &r, EdgeKind::Causal);
    }
    Ok(cid)
}

/// The naive diagram plus the hidden user variable: `thetaT_x` drives
/// `S_{x+1}`, and each recommendation feeds into the next `thetaT`.
pub fn build_extended_cid(timesteps: usize) -> Result<Cid, CidError> {
    let mut cid = build_naive_cid(timesteps)?;
    add_exogenous_chain(&mut cid, Family::ThetaT, timesteps);
    for x in 0..timesteps - 1 {
        cid.add_edge(id(&Family::ThetaT, x), id(&Family::State, x + 1), EdgeKind::Causal);
    }
    Ok(cid)
}

/// Adds `family_0..family_{k-1}` as a chain, each also fed by the previous
/// action.
fn add_exogenous_chain(cid: &mut Cid, family: Family, timesteps: usize) {
    for x in 0..timesteps {
        add(cid, NodeKind::Structural, family.clone(), x);
    }
    for x in 0..timesteps - 1 {
        let next = id(&family, x + 1);
        cid.add_edge(id(&family, x), &next, EdgeKind::Causal);
        cid.add_edge(id(&Family::Action, x), &next, EdgeKind::Causal);
    }
}

/// The extended diagram with rewards routed through observations
/// (`R : O -> reals`). An observation depends on the state the
/// recommendation was made in, the recommendation itself and a second
/// exogenous user variable `thetaR`. Since a reward no longer needs the next
/// state, the final step also gets an observation and a reward.
pub fn build_observation_cid(timesteps: usize) -> Result<Cid, CidError> {
    let mut cid = build_extended_cid(timesteps)?;
    add_exogenous_chain(&mut cid, Family::ThetaR, timesteps);
    add(&mut cid, NodeKind::Utility, Family::Reward, timesteps - 1);
    for x in 0..timesteps {
        add(&mut cid, NodeKind::Structural, Family::Observation, x);
        let o = id(&Family::Observation, x);
        let r = id(&Family::Reward, x);
        cid.remove_edge(&id(&Family::State, x), &r, EdgeKind::Causal);
        cid.remove_edge(&id(&Family::State, x + 1), &r, EdgeKind::Causal);
        cid.add_edge(id(&Family::State, x), &o, EdgeKind::Causal);
        cid.add_edge(id(&Family::Action, x), &o, EdgeKind::Causal);
        cid.add_edge(id(&Family::ThetaR, x), &o, EdgeKind::Causal);
        cid.add_edge(&o, &r, EdgeKind::Causal);
    }
    Ok(cid)
}

/// A problem open to reward-function tampering: the agent's model `theta_t`
/// of the reward parameters is moved by its actions and feeds the reward
/// `R(S_t; theta_t)`, but never feeds the next state.
pub fn build_rf_tampering_cid(timesteps: usize) -> Result<Cid, CidError> {
    check_horizon(timesteps)?;
    let mut cid = Cid::new();
    for t in 0..timesteps {
        add(&mut cid, NodeKind::Structural, Family::State, t);
        add(&mut cid, NodeKind::Decision, Family::Action, t);
        add(&mut cid, NodeKind::Structural, Family::Theta, t);
        add(&mut cid, NodeKind::Utility, Family::Reward, t);
        let s = id(&Family::State, t);
        let r = id(&Family::Reward, t);
        cid.add_edge(&s, id(&Family::Action, t), EdgeKind::Information);
        cid.add_edge(&s, &r, EdgeKind::Causal);
        cid.add_edge(id(&Family::Theta, t), &r, EdgeKind::Causal);
    }
    for t in 0..timesteps - 1 {
        let a = id(&Family::Action, t);
        let s_next = id(&Family::State, t + 1);
        let theta_next = id(&Family::Theta, t + 1);
        cid.add_edge(id(&Family::State, t), &s_next, EdgeKind::Causal);
        cid.add_edge(&a, &s_next, EdgeKind::Causal);
        cid.add_edge(&a, &theta_next, EdgeKind::Causal);
        cid.add_edge(id(&Family::Theta, t), &theta_next, EdgeKind::Causal);
    }
    Ok(cid)
}
