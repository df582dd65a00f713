//! Steady-state and transient thermal simulation of 3D-stacked dies with
//! optional microchannel cooling layers, plus a design-space sweep driver.

pub mod cooling;
pub mod design;
pub mod dse;
pub mod error;
pub mod floorplan;
pub mod par;
pub mod pipeline;
pub mod power;
pub mod stack;
pub mod thermal;
