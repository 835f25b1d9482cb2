//! Head-stabilized scanning for a MEMS-mirror lidar on a moving platform.

pub mod compensate;
pub mod geom;
pub mod memsctl;
pub mod simcore;
pub mod slamlite;
