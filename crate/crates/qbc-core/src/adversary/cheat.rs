//! Optimal cheating for each side of a two-state commitment.

use crate::error::{Error, Result};
use crate::linalg::{
    apply_local, bipartite_matrix, check_targets, fidelity, helstrom, project_outcome, DensityOp,
    ProjectiveMeasurement, PureState, UnitaryOp,
};

/// Babe's best chance of guessing `b` from `ρ^B_b` before opening.
pub fn babe_optimal_cheat(rho0: &DensityOp, rho1: &DensityOp) -> Result<f64> {
    helstrom(rho0, rho1)
}

/// Error of the best single-qubit guess between `|φ⟩` and `|φ′⟩` with
/// `|⟨φ|φ′⟩|² = ε1`.
pub fn parity_error_probability(epsilon1: f64) -> f64 {
    0.5 - 0.5 * (1.0 - epsilon1).sqrt()
}

/// Babe's optimum on `n` parity-encoded qubits: `1/2 + (1 − 2p_e)^n / 2`.
pub fn parity_concealing_closed_form(n: usize, epsilon1: f64) -> f64 {
    let bias = 1.0 - 2.0 * parity_error_probability(epsilon1);
    0.5 + 0.5 * bias.powi(n as i32)
}

/// `(F², F)` with `F` the fidelity of Babe's two states.
pub fn cheat_bounds(rho0: &DensityOp, rho1: &DensityOp) -> Result<(f64, f64)> {
    let f = fidelity(rho0, rho1)?;
    Ok((f * f, f))
}

fn check_pair(phi0: &PureState, phi1: &PureState, cut: &[usize]) -> Result<()> {
    if phi0.dims() != phi1.dims() {
        return Err(Error::dims(format!("{:?} vs {:?}", phi0.dims(), phi1.dims())));
    }
    if cut.is_empty() || cut.len() >= phi0.num_subsystems() {
        return Err(Error::InvalidBipartition(format!(
            "cut {cut:?} must be a nonempty proper subset of {} subsystems",
            phi0.num_subsystems()
        )));
    }
    check_targets(cut, phi0.num_subsystems())
}

/// Adam's local unitary on `cut` maximizing `|⟨Φ1|(U ⊗ I)|Φ0⟩|`.
///
/// With `Φ_b = Σ M_b[a, t] |a⟩|t⟩` the overlap is `tr(U M0 M1†)`, so `U = V W†`
/// from the SVD `M0 M1† = W Σ V†` attains `‖M0 M1†‖₁ = F(ρ^B_0, ρ^B_1)`. When
/// the two marginals agree this is the Schmidt-basis exchange.
pub fn epr_cheat_unitary(phi0: &PureState, phi1: &PureState, cut: &[usize]) -> Result<UnitaryOp> {
    check_pair(phi0, phi1, cut)?;
    let m0 = bipartite_matrix(phi0, cut)?;
    let m1 = bipartite_matrix(phi1, cut)?;
    let x = &m0 * m1.adjoint();
    let svd = x.svd(true, true);
    let (w, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let u = v_t.adjoint() * w.adjoint();
    UnitaryOp::new(u, cut.iter().map(|&c| phi0.dims()[c]).collect())
}

/// How Babe checks an opening of `b = 1`.
#[derive(Clone, Debug)]
pub enum Verification {
    /// One projective measurement onto `Φ1` across every subsystem.
    Joint,
    /// Measurements applied in turn; each must land on outcome 0.
    Sequence(Vec<ProjectiveMeasurement>),
}

impl Verification {
    /// Accept/reject on each listed subsystem group, against the marginal
    /// states of a product `Φ1`.
    pub fn per_part(groups: &[(Vec<usize>, PureState)]) -> Result<Self> {
        groups
            .iter()
            .map(|(targets, v)| ProjectiveMeasurement::accept_reject(targets.clone(), v))
            .collect::<Result<Vec<_>>>()
            .map(Verification::Sequence)
    }
}

/// Exact probability that Adam, having committed `Φ0`, applies `U` on `cut`,
/// opens `b = 1`, and passes `verification`.
pub fn adam_cheat_success(
    phi0: &PureState,
    phi1: &PureState,
    u: &UnitaryOp,
    cut: &[usize],
    verification: &Verification,
) -> Result<f64> {
    check_pair(phi0, phi1, cut)?;
    let state = apply_local(u, cut, phi0)?;
    match verification {
        Verification::Joint => {
            let all: Vec<usize> = (0..phi1.num_subsystems()).collect();
            let m = ProjectiveMeasurement::accept_reject(all, phi1)?;
            Ok(project_outcome(&state, &m, 0)?.0)
        }
        Verification::Sequence(steps) => {
            let mut state = state;
            let mut p = 1.0;
            for m in steps {
                let (q, post) = project_outcome(&state, m, 0)?;
                p *= q;
                match post {
                    Some(s) => state = s,
                    None => return Ok(0.0),
                }
            }
            Ok(p)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;
    use crate::linalg::{random, reduced_state, tensor, trace_distance};
    use crate::states::{parity_mixture, purification, ParityEncoding};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parity_concealment_matches_closed_form() {
        let enc = ParityEncoding::new(4, 0.25).unwrap();
        let p = babe_optimal_cheat(&parity_mixture(0, &enc).unwrap(), &parity_mixture(1, &enc).unwrap()).unwrap();
        assert!((p - 0.78125).abs() < 1e-9);
        assert!((parity_concealing_closed_form(4, 0.25) - 0.78125).abs() < 1e-15);
        assert!((parity_error_probability(0.5) - 0.146_446_609_406_726_2).abs() < 1e-12);
    }

    #[test]
    fn single_qubit_error_is_helstrom_error() {
        let enc = ParityEncoding::new(1, 0.5).unwrap();
        let p = helstrom(&enc.phi.to_density(), &enc.phi_prime.to_density()).unwrap();
        assert!((1.0 - p - parity_error_probability(0.5)).abs() < 1e-12);
    }

    #[test]
    fn identical_states_give_half() {
        let rho = DensityOp::maximally_mixed(vec![2, 2]).unwrap();
        assert!((babe_optimal_cheat(&rho, &rho).unwrap() - 0.5).abs() < 1e-15);
        let (lo, hi) = cheat_bounds(&rho, &rho).unwrap();
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_states_give_zero_bounds() {
        let a = PureState::basis(0, vec![2]).unwrap().to_density();
        let b = PureState::basis(1, vec![2]).unwrap().to_density();
        assert_eq!(cheat_bounds(&a, &b).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn same_commitment_gives_certain_cheat() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi = random::state(vec![3, 2], &mut rng);
        let u = epr_cheat_unitary(&phi, &phi, &[0]).unwrap();
        let p = adam_cheat_success(&phi, &phi, &u, &[0], &Verification::Joint).unwrap();
        assert!((p - 1.0).abs() < 1e-9);
        let honest = UnitaryOp::identity(vec![3]).unwrap();
        assert!((adam_cheat_success(&phi, &phi, &honest, &[0], &Verification::Joint).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn concealing_commitment_is_fully_cheatable() {
        // two purifications of the same mixture on B
        let b0 = [PureState::basis(0, vec![2]).unwrap(), PureState::basis(1, vec![2]).unwrap()];
        let plus = PureState::from_real(&[S, S], vec![2]).unwrap();
        let minus = PureState::from_real(&[S, -S], vec![2]).unwrap();
        let phi0 = purification(&[0.5, 0.5], &b0).unwrap();
        let phi1 = purification(&[0.5, 0.5], &[plus, minus]).unwrap();
        let rb0 = reduced_state(&phi0, &[0]).unwrap();
        let rb1 = reduced_state(&phi1, &[0]).unwrap();
        assert!(trace_distance(&rb0, &rb1).unwrap() < 1e-12);
        let u = epr_cheat_unitary(&phi0, &phi1, &[1]).unwrap();
        let moved = apply_local(&u, &[1], &phi0).unwrap();
        assert!(moved.approx_eq_projective(&phi1, 1e-9));
    }

    #[test]
    fn overlap_equals_marginal_fidelity_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..30 {
            let phi0 = random::state(vec![4, 4], &mut rng);
            let phi1 = random::state(vec![4, 4], &mut rng);
            let u = epr_cheat_unitary(&phi0, &phi1, &[0]).unwrap();
            let overlap = apply_local(&u, &[0], &phi0).unwrap().inner(&phi1).unwrap().norm();
            let f = fidelity(&reduced_state(&phi0, &[1]).unwrap(), &reduced_state(&phi1, &[1]).unwrap()).unwrap();
            assert!((overlap - f).abs() < 1e-9);
            // no random local unitary does better
            for _ in 0..20 {
                let v = random::unitary(vec![4], &mut rng);
                let o = apply_local(&v, &[0], &phi0).unwrap().inner(&phi1).unwrap().norm();
                assert!(o <= overlap + 1e-12);
            }
        }
    }

    #[test]
    fn split_verification_is_at_least_joint() {
        // Φ1 a product over {A0 B0} x {A1 B1}; checking each part separately
        // accepts anything the joint check accepts
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let left = random::state(vec![2, 2], &mut rng);
        let right = random::state(vec![2, 2], &mut rng);
        let phi1 = tensor(&left, &right);
        let phi0 = random::state(vec![2, 2, 2, 2], &mut rng);
        let cut = [0, 2];
        let u = epr_cheat_unitary(&phi0, &phi1, &cut).unwrap();
        let joint = adam_cheat_success(&phi0, &phi1, &u, &cut, &Verification::Joint).unwrap();
        let split = Verification::per_part(&[(vec![0, 1], left), (vec![2, 3], right)]).unwrap();
        let parts = adam_cheat_success(&phi0, &phi1, &u, &cut, &split).unwrap();
        assert!(parts + 1e-12 >= joint);
    }

    #[test]
    fn mismatched_inputs_are_errors() {
        let a = PureState::basis(0, vec![2, 2]).unwrap();
        let b = PureState::basis(0, vec![4]).unwrap();
        assert!(epr_cheat_unitary(&a, &b, &[0]).is_err());
        assert!(epr_cheat_unitary(&a, &a, &[0, 1]).is_err());
        assert!(epr_cheat_unitary(&a, &a, &[2]).is_err());
    }
}
