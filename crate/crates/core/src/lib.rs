//! Exact-arithmetic engine for cluster-quiver mutations with potentials,
//! torus-fixed-point enumeration, truncated equivariant quasimap
//! I-functions, and mechanical coefficient-level verification of the
//! mutation duality identities (fundamental building block, star-shaped
//! quiver, and the D3 mutation cycle).
//!
//! Everything is computed over arbitrary-precision rationals at generic
//! parameter points; an identity "passes" only when every coefficient inside
//! the comparison box agrees exactly at several independent generic points.

pub mod checker;
pub mod fixpoints;
pub mod ifun;
pub mod kahler;
pub mod quiver;
pub mod rat;
pub mod series;

pub use checker::{
    check_building_block, check_cycle, check_d3_step, check_star, CheckReport, CheckSpec,
    CycleReport, Selection,
};
pub use fixpoints::{
    cardinality_check, enumerate, family_quiver, generic_point, iota, iota_inv, EquivariantPoint,
    Family, FixedPoint, IotaPair, Ranks, StepId,
};
pub use ifun::{
    building_block_i, building_block_i_dual, effectivity_prune, lefschetz_factor,
    restricted_quiver_i, restricted_series, DegreeVector, EffectivityFilter, IModel, Prune,
};
pub use kahler::KahlerMap;
pub use quiver::{Arrow, CycleWord, KahlerCase, MapRule, MutationResult, Node, Quiver, QuiverError};
pub use rat::Rat;
pub use series::{expand_prefactor, sfr, DegreeBox, LaurentSeries, Prefactor, SeriesError, Unit};
