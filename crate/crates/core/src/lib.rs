//! Robust adaptive Metropolis (RAM) sampling with AM, ASWAM, ASM and fixed
//! random-walk baselines, plus Monte Carlo estimators for the RAM mean field.
//!
//! ```
//! use ramcmc::prelude::*;
//!
//! let target = ramcmc::targets::student2d_paper();
//! let mut config = SamplerConfig::new(
//!     Algorithm::Ram,
//!     vec![1.0, 2.0],
//!     LowerTriangularFactor::identity(2),
//! );
//! config.burn_in = 1_000;
//! config.iterations = 5_000;
//! let mut rng = RngStream::new(7, 0);
//! let summary = run_chain(&config, &target, &mut rng, &mut NullSink).unwrap();
//! assert!(summary.acceptance_rate > 0.1 && summary.acceptance_rate < 0.4);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod proposals;
pub mod samplers;
pub mod targets;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::analysis::{ChainSummary, Checkpoint, Estimate};
    pub use crate::error::{Error, Result};
    pub use crate::linalg::{LowerTriangularFactor, Matrix, SymmetricMatrix};
    pub use crate::proposals::{ProposalSpec, RngStream};
    pub use crate::samplers::{
        run_chain, AdaptationSchedule, Algorithm, Chain, NullSink, RecordSink, SamplerConfig,
        VecSink,
    };
    pub use crate::targets::TargetModel;
}
