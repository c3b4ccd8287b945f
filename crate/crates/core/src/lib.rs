//! Receding-horizon trajectory planning in partially known environments.
//!
//! Each planning cycle produces a fast *whole* trajectory that may cross
//! unknown space and a *safe* backup trajectory that stays in known-free
//! space and ends at rest. Only the prefix of the whole trajectory up to the
//! backup's start point, followed by the backup, is ever committed.

pub mod geom;
pub mod map;
pub mod decomp;
pub mod path;
pub mod solver;
pub mod traj;
pub mod replan;
pub mod sim;
