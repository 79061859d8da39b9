//! Sparse best-basis approximation of a slowness-deviation field inside a
//! ball from travel-time delays along rays.
//!
//! The solver greedily assembles `f_N = Σ αₙ dₙ` from a hybrid dictionary of
//! global orthonormal ball polynomials and local tesseroid hat functions,
//! descending a noise-weighted Tikhonov–Phillips functional with an H¹
//! penalty. Hat candidates are improved each iteration by a two-stage
//! derivative-free search over their six continuous parameters, and rays are
//! activated in packages as the data fit improves.
//!
//! Modules follow the pipeline: [`geo`] (coordinates, tesseroids),
//! [`special`] (Jacobi/Legendre machinery), [`basis`] (trial-function
//! evaluation), [`quad`] (integration rules), [`gram`] (H¹ inner products),
//! [`forward`] (rays and the line-integral operator), [`scenario`]
//! (synthetic truth, noise, error measures), [`solver`] (the greedy
//! iteration), [`config`] (run configuration and batch driver).

pub mod basis;
pub mod config;
pub mod forward;
pub mod geo;
pub mod gram;
pub mod parallel;
pub mod quad;
pub mod scenario;
pub mod solver;
pub mod special;
