//! Classical randomness against a purification: the same average state, but
//! only the purification lets the ancilla holder pick the ensemble later.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{project_outcome, trace_distance, DensityOp, ProjectiveMeasurement, PureState};
use crate::states::purification;

/// A weighted list of pure states and their average.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EnsembleReport {
    pub weights: Vec<f64>,
    #[serde(skip)]
    pub states: Vec<PureState>,
    #[serde(skip)]
    pub average: DensityOp,
}

impl EnsembleReport {
    fn new(weights: Vec<f64>, states: Vec<PureState>) -> Result<Self> {
        let average = DensityOp::mixture(&weights, &states)?;
        Ok(Self { weights, states, average })
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SteeringReport {
    /// One definite `ψ_k` per trial; there is no ancilla to measure.
    pub classical: EnsembleReport,
    /// Post-measurement states of the system after measuring the
    /// purification's ancilla in the steering basis.
    pub steered: EnsembleReport,
    /// `‖ρ_classical − ρ_steered‖₁`.
    pub average_distance: f64,
}

/// Outcome `m` of the ancilla measurement occurs with probability `q_m` and
/// leaves the system in `χ_m`.
pub fn steering_demo(weights: &[f64], states: &[PureState], basis: &[PureState]) -> Result<SteeringReport> {
    let psi = purification(weights, states)?;
    let ancilla = psi.num_subsystems() - 1;
    if basis.len() != states.len() || basis.iter().any(|g| g.dims() != [states.len()]) {
        return Err(Error::param(format!("steering basis must be {0} vectors of dimension {0}", states.len())));
    }
    let m = ProjectiveMeasurement::from_basis(vec![ancilla], basis)?;
    let keep: Vec<usize> = (0..ancilla).collect();
    let mut probs = Vec::new();
    let mut steered = Vec::new();
    for k in 0..basis.len() {
        let (q, post) = project_outcome(&psi, &m, k)?;
        if let Some(post) = post {
            // the post-measurement state is a product with |g_k⟩
            let rho = crate::linalg::reduced_state(&post, &keep)?;
            let (vals, vecs) = crate::linalg::eigh(rho.matrix());
            let top = (0..vals.len()).max_by(|&a, &b| vals[a].total_cmp(&vals[b])).expect("nonempty");
            probs.push(q);
            steered.push(PureState::normalized(vecs.column(top).into_owned(), states[0].dims().to_vec())?);
        }
    }
    let classical = EnsembleReport::new(weights.to_vec(), states.to_vec())?;
    let steered = EnsembleReport::new(probs, steered)?;
    let average_distance = trace_distance(&classical.average, &steered.average)?;
    Ok(SteeringReport { classical, steered, average_distance })
}
