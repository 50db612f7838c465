//! Bogoliubov-de Gennes spectrum of a converged background.
//!
//! Perturbations are written in the frame comoving with the background phase,
//! δψ = e^{iθ₀}(u e^{−iωt} + v* e^{iω*t}) e^{−γt/2}, so the homogeneous loss is
//! factored out of the operator and added back to reported linewidths.

mod modes;
mod operator;
mod qnm;

pub use modes::{diagonalize, BdgMode, NormClass};
pub use operator::{assemble_bdg, BdgOperator, Boundary};
pub use qnm::{find_qnm, QnmEstimate, QnmSearch};
