//! Discrete causal inference toolkit.
//!
//! "Effects of causes" queries run on causal Bayesian networks ([`cbn`]) and
//! instrumental-variable models ([`iv`]); "causes of effects" queries compute
//! the probability of causation exactly on twin networks ([`scm`]) or bound it
//! from empirical margins ([`bounds`]).
//!
//! ```
//! use coe_lab::bounds::{pc_bounds_basic, Margins};
//! use coe_lab::cbn::{CbnBuilder, Query};
//!
//! let b = pc_bounds_basic(&Margins::new(0.6, 0.3)?)?;
//! assert_eq!((b.lower, b.upper), (0.5, 1.0));
//!
//! let net = CbnBuilder::new()
//!     .binary("X")
//!     .binary("Y")
//!     .cpt("X", &[], vec![0.5, 0.5])
//!     .cpt("Y", &["X"], vec![0.9, 0.1, 0.4, 0.6])
//!     .regime("X")
//!     .build()?;
//! let p = net.joint_query(&Query::new(["Y"]).set("X", 1))?;
//! assert!((p.values()[1] - 0.6).abs() < 1e-12);
//! # Ok::<(), coe_lab::Error>(())
//! ```

pub mod bounds;
pub mod cbn;
pub mod error;
pub mod factor;
pub mod graph;
pub mod iv;
pub mod scm;
pub mod synth;

pub use error::{Error, Result};
