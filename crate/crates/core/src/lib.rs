pub mod double_angle;
pub mod error;
pub mod expr;
pub mod ivp;
pub mod jet;
pub mod reference;
pub mod catalog;
pub mod duplication;
pub mod checker;
pub mod harness;
pub mod cli;
