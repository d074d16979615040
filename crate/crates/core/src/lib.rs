//! Dynamic operating envelopes (DOEs) for flexible resources on radial
//! low-voltage feeders.
//!
//! A DOE is a per-bus, per-step interval of admissible active and reactive
//! injection. This crate computes them from voltage measurements or forecasts:
//!
//! - [`netmodel`]: radial network description and validation.
//! - [`powerflow`]: backward-forward sweep solver and scenario batches.
//! - [`scenario`]: seeded multiplicative forecast noise.
//! - [`envelope`]: piecewise envelope policies and real-time DOEs.
//! - [`robust`]: chance-constrained day-ahead DOEs (methods M1 and M2).
//! - [`pqchart`]: joint P-Q feasible regions under power factor and apparent
//!   power limits.
//! - [`fnaproxy`]: envelope shrinkage as a flexibility-need indicator.
//! - [`csvio`]: CSV readers and writers for all of the above.
//! - [`synthetic`]: a deterministic 76-bus test feeder.
//!
//! Sign convention: positive P and Q are injections into the grid.
//!
//! ```
//! use doe_core::envelope::{EnvelopePolicy, Envelope, Mode};
//!
//! let anrc = EnvelopePolicy::standard(Mode::Anrc);
//! assert_eq!(anrc.bounds(1.0).unwrap(), Envelope::new(-1.0, 1.0));
//! assert_eq!(anrc.bounds(1.10).unwrap(), Envelope::new(-1.0, 0.0));
//! ```

pub mod csvio;
pub mod envelope;
pub mod fnaproxy;
pub mod netmodel;
pub mod powerflow;
pub mod pqchart;
pub mod robust;
pub mod scenario;
pub mod synthetic;

pub use num_complex::Complex64;

pub use envelope::{rt_doe, CellEnvelope, DoeSeries, Envelope, EnvelopePolicy, Mode, Policies, PolicyPair, VoltageSeries};
pub use netmodel::{BusId, LoadProfile, Network};
pub use powerflow::{batch_solve, RadialSolver};
pub use robust::{m1_doe, m2_doe, CcConfig, VoltageScenarioSet};
pub use scenario::{generate, NoiseConfig, ScenarioSet};
