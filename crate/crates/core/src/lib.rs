//! Moment-matrix relaxations for Bell scenarios: Tsirelson and PPT bounds,
//! device-independent negativity and genuine-negativity bounds, and an
//! explicit-model oracle to cross-check them.

pub mod algebra;
pub mod moment;
pub mod oracle;
pub mod programs;
pub mod scenario;
pub mod solver;
