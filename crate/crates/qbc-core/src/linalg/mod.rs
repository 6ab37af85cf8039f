//! Dense complex linear algebra on small multi-qubit spaces.

mod measure;
mod schmidt;
mod spectral;
mod state;
mod subsystems;

pub use measure::{measure_projective, outcome_probabilities, project_outcome, ProjectiveMeasurement};
pub use schmidt::{schmidt, SchmidtForm};
pub use spectral::{eigh, fidelity, helstrom, is_hermitian, psd_sqrt, trace_distance, trace_norm};
pub(crate) use state::check_distribution;
pub use state::{tensor, tensor_all, Amplitude, CMatrix, CVector, DensityOp, PureState, Tensor, UnitaryOp, C64};
pub use subsystems::{
    apply_local, embed_operator, partial_trace, permute_density, permute_state, reduced_state, LocalEvolution,
};
pub(crate) use subsystems::{bipartite_matrix, check_targets};

/// Numerical tolerances shared across the crate.
pub mod tol {
    /// Construction-time invariants (norms, traces, Hermiticity).
    pub const CONSTRUCT: f64 = 1e-12;
    /// Assertions on derived quantities.
    pub const DERIVED: f64 = 1e-10;
    /// Comparisons between two computational routes.
    pub const CROSS: f64 = 1e-9;
    /// Most negative eigenvalue tolerated (and zeroed) in a density operator.
    pub const PSD_CLAMP: f64 = 1e-10;
}

/// Largest number of qubits held as one dense state.
pub const DENSE_CAP_QUBITS: usize = 12;

/// Haar-random states and unitaries for property checks and fixtures.
pub mod random {
    use super::{CMatrix, CVector, PureState, UnitaryOp, C64};
    use rand::Rng;

    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        // Box–Muller
        let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
        C64::new(gaussian(rng), gaussian(rng))
    }

    pub fn state<R: Rng + ?Sized>(dims: Vec<usize>, rng: &mut R) -> PureState {
        let dim: usize = dims.iter().product();
        let v = CVector::from_fn(dim, |_, _| complex_gaussian(rng));
        PureState::normalized(v, dims).expect("gaussian vector is nonzero")
    }

    /// QR of a Ginibre matrix with the phase fix that makes it Haar.
    pub fn unitary<R: Rng + ?Sized>(dims: Vec<usize>, rng: &mut R) -> UnitaryOp {
        let dim: usize = dims.iter().product();
        let g = CMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng));
        let qr = g.qr();
        let (q, r) = (qr.q(), qr.r());
        let mut u = q;
        for j in 0..dim {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 { d / C64::new(d.norm(), 0.0) } else { C64::new(1.0, 0.0) };
            for i in 0..dim {
                u[(i, j)] *= phase;
            }
        }
        UnitaryOp::new(u, dims).expect("QR factor is unitary")
    }

    /// Random density operator: marginal of a random pure state on a space
    /// of the same dimension.
    pub fn density<R: Rng + ?Sized>(dims: Vec<usize>, rng: &mut R) -> super::DensityOp {
        let dim: usize = dims.iter().product();
        let s = state(vec![dim, dim], rng);
        let m = super::reduced_state(&s, &[0]).expect("valid cut");
        super::DensityOp::new(m.matrix().clone(), dims).expect("marginal is a state")
    }
}
