//! A computational laboratory for comparison geometry on exact model
//! surfaces and sampled finite metric spaces.
//!
//! The library is organized bottom-up:
//!
//! * [`model_plane`] — trigonometry in the constant-curvature plane:
//!   the Jacobi function, comparison angles, and the hyperbolic excess
//!   lower bound.
//! * [`quadrature`] — adaptive Simpson integration used as an
//!   independent oracle for every closed form in the crate.
//! * [`metric_core`] — finite metric spaces backed by exact distance
//!   formulas or by shortest paths on a weighted graph; geodesics,
//!   Alexandrov quadruple defects, and curvature-bound estimation.
//! * [`generators`] — exact model spaces (Euclidean balls, cones,
//!   cylinders, hyperbolic disks, a paraboloid) and seeded sampling of
//!   finite subsets with per-point weights.
//! * [`measure`] — ball volumes, radial area profiles, Bishop-Gromov
//!   monotonicity checks, and the polar integration identity.
//! * [`excess`] — the excess function, heights over geodesics, the
//!   Abresch-Gromoll comparison machinery, and sampled verification.
//! * [`critical`] — Grove-Shiohama criticality tests, radius scans,
//!   and the closed-form thresholds of the large-volume-growth
//!   finiteness theorem.
//! * [`report`] — the shared verification-report structure emitted by
//!   every check.

pub mod critical;
pub mod excess;
pub mod generators;
pub mod measure;
pub mod metric_core;
pub mod model_plane;
pub mod quadrature;
pub mod report;
