//! Temporal-logic motion planning for teams of spherical agents.
//!
//! Each agent's LTL task is compiled to a Büchi automaton, combined with a
//! region-level transition system into a prefix/suffix plan, and executed
//! in continuous time by decentralized navigation functions that keep agents
//! out of unrelated regions and away from each other.

pub mod buchi;
pub mod fixtures;
pub mod ltl;
pub mod navfield;
pub mod planner;
pub mod search;
pub mod simulator;
pub mod workspace;
