//! Docking trajectory optimization for a 3-DOF surface vessel.
//!
//! The stack transcribes a docking optimal-control problem with direct
//! collocation ([`ocp`]), solves it with the workspace SQP solver, and runs
//! the result as a receding-horizon controller ([`mpc`]) against a
//! fixed-step simulation plant ([`plant`]). Scenario files, CSV logs and SVG
//! plots live in [`scenario`], [`output`] and [`plot`].

pub mod geometry;
pub mod mpc;
pub mod ocp;
pub mod output;
pub mod plant;
pub mod plot;
pub mod scenario;
pub mod thrust;
pub mod vessel;
