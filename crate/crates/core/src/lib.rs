//! Crowd navigation simulator and trajectory evaluation toolkit.
//!
//! Pedestrians follow a social force model and walk in groups. A robot
//! either drives straight at its goal or infers the groups around it and
//! joins a compatible flow, with a motion-primitive planner keeping it
//! clear of everyone it can see.

pub mod cli;
pub mod eval;
pub mod flow;
pub mod forces;
pub mod geom;
pub mod groups;
pub mod local;
pub mod rng;
pub mod sim;
pub mod world;
