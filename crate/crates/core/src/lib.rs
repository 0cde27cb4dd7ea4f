//! Two-site dynamical mean-field theory on an emulated five-qubit register.
//!
//! The crate stacks up from a dense statevector simulator ([`qsim`]) through
//! the two-site Anderson impurity model and its exact diagonalization
//! ([`siam`]), Trotterized evolution circuits in two gate dialects
//! ([`trotter`]), ancilla interferometry for the retarded impurity Green
//! function ([`interferometry`]), classical post-processing from time series
//! to self-energies and spectra ([`analysis`]), and the self-consistency
//! loop that drives the Mott transition ([`dmft`]).
//!
//! Energies are measured in units of the Bethe-lattice hopping scale `t*`,
//! times in `1/t*`. All public operations are pure functions of their
//! inputs and safe to call concurrently.

pub mod acceptance;
pub mod analysis;
pub mod dmft;
pub mod interferometry;
#[doc(hidden)]
pub mod oracle;
pub mod qsim;
pub mod siam;
pub mod trotter;

/// Errors shared across the solver stack.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Invalid argument: bad qubit index, dimension mismatch, parameter out
    /// of range, and similar caller mistakes.
    #[error("{0}")]
    Domain(String),
    /// The ground state is (numerically) degenerate, so ground-state
    /// expectation values are ill-defined.
    #[error("degenerate ground state (relative gap {gap:.3e})")]
    DegenerateGroundState { gap: f64 },
    /// The two-cosine fit failed to describe the time series.
    #[error("two-cosine fit rms residual {rms:.3e} exceeds {limit}")]
    PoorFit { rms: f64, limit: f64 },
    /// The self-energy has a pole at or inside the finite-difference window
    /// around omega = 0; the quasiparticle weight must be taken as zero.
    #[error("self-energy singular at omega = 0; insulating branch")]
    InsulatingBranch,
    /// A pointwise evaluation hit a pole or a vanishing denominator.
    #[error("singular evaluation: {0}")]
    Singular(String),
    /// Bisection could not bracket a root.
    #[error("no sign change of the filling mismatch in [{lo}, {hi}]")]
    Bracketing { lo: f64, hi: f64 },
    /// The self-consistency loop hit an unrecoverable error mid-run; the
    /// iterations completed so far are attached for diagnosis.
    #[error("self-consistency loop aborted at iteration {iteration}: {source}")]
    LoopAborted {
        iteration: usize,
        source: Box<Error>,
        history: Vec<dmft::IterationRecord>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
