use rand::Rng;

use super::state::{CMatrix, PureState, C64};
use super::subsystems::{apply_to_amplitudes, check_targets};
use super::tol;
use crate::error::{Error, Result};

/// Complete set of orthogonal projectors on `targets` (in order).
#[derive(Clone, Debug)]
pub struct ProjectiveMeasurement {
    pub targets: Vec<usize>,
    pub projectors: Vec<CMatrix>,
}

impl ProjectiveMeasurement {
    pub fn new(targets: Vec<usize>, projectors: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = projectors.first() else {
            return Err(Error::InvalidProjectors("empty projector list".into()));
        };
        let d = first.nrows();
        let mut sum = CMatrix::zeros(d, d);
        for (k, p) in projectors.iter().enumerate() {
            if p.nrows() != d || p.ncols() != d {
                return Err(Error::InvalidProjectors(format!("projector {k} has wrong size")));
            }
            if (p - p.adjoint()).norm() > tol::DERIVED {
                return Err(Error::InvalidProjectors(format!("projector {k} is not Hermitian")));
            }
            if (p * p - p).norm() > tol::DERIVED {
                return Err(Error::InvalidProjectors(format!("projector {k} is not idempotent")));
            }
            sum += p;
        }
        if (sum - CMatrix::identity(d, d)).norm() > tol::DERIVED {
            return Err(Error::InvalidProjectors("projectors do not sum to identity".into()));
        }
        Ok(Self { targets, projectors })
    }

    /// Rank-one projectors onto the given orthonormal vectors.
    pub fn from_basis(targets: Vec<usize>, basis: &[PureState]) -> Result<Self> {
        Self::new(targets, basis.iter().map(PureState::projector).collect())
    }

    /// Two outcomes: 0 = "is `v`", 1 = "is not `v`".
    pub fn accept_reject(targets: Vec<usize>, v: &PureState) -> Result<Self> {
        let p = v.projector();
        let q = CMatrix::identity(v.dim(), v.dim()) - &p;
        Self::new(targets, vec![p, q])
    }

    fn check_against(&self, s: &PureState) -> Result<()> {
        check_targets(&self.targets, s.num_subsystems())?;
        let td: usize = self.targets.iter().map(|&t| s.dims()[t]).product();
        if td != self.projectors[0].nrows() {
            return Err(Error::dims(format!(
                "projectors of size {} on targets of dimension {td}",
                self.projectors[0].nrows()
            )));
        }
        Ok(())
    }
}

/// Born probabilities `‖(P_k ⊗ I)ψ‖²`.
pub fn outcome_probabilities(s: &PureState, m: &ProjectiveMeasurement) -> Result<Vec<f64>> {
    m.check_against(s)?;
    m.projectors.iter().map(|p| Ok(apply_to_amplitudes(p, &m.targets, s)?.norm_squared())).collect()
}

/// Samples an outcome and returns the renormalized post-measurement state.
pub fn measure_projective<R: Rng + ?Sized>(
    s: &PureState,
    m: &ProjectiveMeasurement,
    rng: &mut R,
) -> Result<(usize, PureState)> {
    let probs = outcome_probabilities(s, m)?;
    let k = sample_index(&probs, rng);
    let projected = apply_to_amplitudes(&m.projectors[k], &m.targets, s)?;
    let norm = projected.norm();
    Ok((k, PureState::from_raw(projected / C64::new(norm, 0.0), s.dims().to_vec())))
}

/// Probability of outcome `k` and the renormalized state it leaves, if any.
pub fn project_outcome(s: &PureState, m: &ProjectiveMeasurement, k: usize) -> Result<(f64, Option<PureState>)> {
    m.check_against(s)?;
    let p = m.projectors.get(k).ok_or_else(|| Error::param(format!("outcome {k} of {}", m.projectors.len())))?;
    let projected = apply_to_amplitudes(p, &m.targets, s)?;
    let norm = projected.norm();
    let post = (norm > 0.0).then(|| PureState::from_raw(projected / C64::new(norm, 0.0), s.dims().to_vec()));
    Ok((norm * norm, post))
}

pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_nonzero = k;
        }
        acc += p;
        if u < acc && p > 0.0 {
            return k;
        }
    }
    last_nonzero
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn comp_basis() -> ProjectiveMeasurement {
        let b = [PureState::basis(0, vec![2]).unwrap(), PureState::basis(1, vec![2]).unwrap()];
        ProjectiveMeasurement::from_basis(vec![0], &b).unwrap()
    }

    fn plus() -> PureState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        PureState::from_real(&[h, h], vec![2]).unwrap()
    }

    #[test]
    fn zero_measures_zero() {
        let s = PureState::basis(0, vec![2]).unwrap();
        let p = outcome_probabilities(&s, &comp_basis()).unwrap();
        assert_eq!(p, vec![1.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(measure_projective(&s, &comp_basis(), &mut rng).unwrap().0, 0);
        }
    }

    #[test]
    fn plus_is_fair() {
        let p = outcome_probabilities(&plus(), &comp_basis()).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn plus_sampling_within_three_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let trials = 100_000;
        let zeros =
            (0..trials).filter(|_| measure_projective(&plus(), &comp_basis(), &mut rng).unwrap().0 == 0).count();
        let freq = zeros as f64 / trials as f64;
        let sigma = (0.25 / trials as f64).sqrt();
        assert!((freq - 0.5).abs() < 3.0 * sigma, "freq {freq}");
    }

    #[test]
    fn post_state_is_projected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (k, post) = measure_projective(&plus(), &comp_basis(), &mut rng).unwrap();
        let expected = PureState::basis(k, vec![2]).unwrap();
        assert!(post.approx_eq_projective(&expected, 1e-12));
    }

    #[test]
    fn incomplete_set_rejected() {
        let p0 = PureState::basis(0, vec![2]).unwrap().projector();
        assert!(matches!(ProjectiveMeasurement::new(vec![0], vec![p0]), Err(Error::InvalidProjectors(_))));
    }

    #[test]
    fn non_idempotent_rejected() {
        let half = CMatrix::identity(2, 2) * C64::new(0.5, 0.0);
        assert!(ProjectiveMeasurement::new(vec![0], vec![half.clone(), half]).is_err());
    }

    #[test]
    fn measurement_on_second_subsystem() {
        let s = PureState::basis(1, vec![2, 2]).unwrap(); // |0>|1>
        let m = ProjectiveMeasurement { targets: vec![1], ..comp_basis() };
        assert_eq!(outcome_probabilities(&s, &m).unwrap(), vec![0.0, 1.0]);
    }
}
