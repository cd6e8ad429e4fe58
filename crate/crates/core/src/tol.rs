//! Numerical tolerances shared across the crate.

/// A pole with `|Re p|` at or below this lies on the imaginary axis.
pub const TOL_AXIS: f64 = 1e-9;

/// Separates a zero margin from a positive one in the realness classifier.
pub const TOL_MARGIN: f64 = 1e-9;

/// Relative distance under which a numerator root cancels a denominator root.
pub const ROOT_MATCH_TOL: f64 = 1e-8;

/// Relative distance under which computed roots are treated as one multiple
/// root. Companion eigenvalues of a triple root scatter by roughly
/// `eps^(1/3) ~ 6e-6`, so this has to sit above that.
pub const ROOT_CLUSTER_TOL: f64 = 1e-4;

/// Grid points closer than this (rad/s) to an imaginary-axis pole are skipped.
pub const POLE_EXCLUSION: f64 = 1e-6;

pub const MAX_DEGREE: usize = 32;

/// Overflow guard for closed-loop runs.
pub const OVERFLOW_GUARD: f64 = 1e9;
