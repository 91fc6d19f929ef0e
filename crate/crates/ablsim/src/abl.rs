//! Conditional probabilities for an intermediate measurement given both the
//! pre-selected and the post-selected state of a system.
//!
//! For a complete final measurement that found |ψ₂⟩, the probability that an
//! intermediate measurement C at time t gave outcome cₙ is
//!
//! ```text
//!                 |⟨ψ₂| U₂ Pₙ U₁ |ψ₁⟩|²
//! Prob(cₙ) = ─────────────────────────────
//!             Σᵢ |⟨ψ₂| U₂ Pᵢ U₁ |ψ₁⟩|²
//! ```
//!
//! where U₁ evolves from pre-selection to t and U₂ from t to post-selection.
//! When the final measurement is incomplete, so that the recorded outcome only
//! locates the system inside a subspace with projector P_B, each squared
//! amplitude is replaced by the squared norm ‖P_B U₂ Pᵢ U₁|ψ₁⟩‖², which sums
//! the rank-1 formula over any orthonormal basis of the subspace. Both
//! variants are ratios, so they are invariant under rescaling of |ψ₁⟩ and of
//! the post-selection.
//!
//! [`decompose_total`] is the bookkeeping side: it recombines conditional
//! probabilities with final-outcome marginals. It computes whatever mixture it
//! is given; feeding it conditionals and marginals taken from different
//! arrangements is exactly the fallacy the preset scenarios demonstrate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    Measurement, Operator, Projector, StateVector, IMPOSSIBLE_TOL, PROB_SUM_TOL, ZERO_NORM_TOL,
};

/// A two-time query: pre-selected state, intermediate measurement, and a
/// post-selection of type `P` (a [`StateVector`] for complete final
/// measurements, a [`Projector`] for incomplete ones). Optional unitaries
/// `u1` (pre-selection → t) and `u2` (t → post-selection) default to the
/// identity.
#[derive(Clone, Debug)]
pub struct AblQuery<P> {
    pre: StateVector,
    intermediate: Measurement,
    post: P,
    u1: Option<Operator>,
    u2: Option<Operator>,
}

impl<P> AblQuery<P> {
    pub fn with_u1(mut self, u1: Operator) -> Result<Self> {
        if u1.space() != self.pre.space() {
            return Err(Error::SpaceMismatch("u1 vs pre-selected state"));
        }
        u1.require_unitary()?;
        self.u1 = Some(u1);
        Ok(self)
    }

    pub fn with_u2(mut self, u2: Operator) -> Result<Self> {
        if u2.space() != self.pre.space() {
            return Err(Error::SpaceMismatch("u2 vs pre-selected state"));
        }
        u2.require_unitary()?;
        self.u2 = Some(u2);
        Ok(self)
    }

    pub fn pre(&self) -> &StateVector {
        &self.pre
    }

    pub fn intermediate(&self) -> &Measurement {
        &self.intermediate
    }

    pub fn post(&self) -> &P {
        &self.post
    }

    fn validate_pre(pre: &StateVector, intermediate: &Measurement) -> Result<()> {
        if pre.space() != intermediate.space() {
            return Err(Error::SpaceMismatch("pre-selected state vs intermediate measurement"));
        }
        let norm_sqr = pre.norm_sqr();
        if norm_sqr.sqrt() < ZERO_NORM_TOL {
            return Err(Error::ZeroState { norm_sqr });
        }
        Ok(())
    }

    /// U₂ Pᵢ U₁ |ψ₁⟩ for every intermediate outcome, in outcome order.
    fn branches(&self) -> Result<Vec<(String, StateVector)>> {
        let evolved = match &self.u1 {
            Some(u1) => u1.apply(&self.pre)?,
            None => self.pre.clone(),
        };
        self.intermediate
            .outcomes()
            .iter()
            .map(|(label, proj)| {
                let mut branch = proj.apply(&evolved)?;
                if let Some(u2) = &self.u2 {
                    branch = u2.apply(&branch)?;
                }
                Ok((label.clone(), branch))
            })
            .collect()
    }
}

impl AblQuery<StateVector> {
    /// Query with a rank-1 post-selection |ψ₂⟩. Neither state needs to be
    /// normalized (the formula is scale-invariant), only nonzero.
    pub fn post_state(pre: StateVector, intermediate: Measurement, post: StateVector) -> Result<Self> {
        Self::validate_pre(&pre, &intermediate)?;
        if post.space() != intermediate.space() {
            return Err(Error::SpaceMismatch("post-selected state vs intermediate measurement"));
        }
        let norm_sqr = post.norm_sqr();
        if norm_sqr.sqrt() < ZERO_NORM_TOL {
            return Err(Error::ZeroState { norm_sqr });
        }
        Ok(AblQuery {
            pre,
            intermediate,
            post,
            u1: None,
            u2: None,
        })
    }
}

impl AblQuery<Projector> {
    /// Query whose final measurement only located the system inside the
    /// subspace projected on by `post`.
    pub fn post_projector(pre: StateVector, intermediate: Measurement, post: Projector) -> Result<Self> {
        Self::validate_pre(&pre, &intermediate)?;
        if post.space() != intermediate.space() {
            return Err(Error::SpaceMismatch("post-selection projector vs intermediate measurement"));
        }
        Ok(AblQuery {
            pre,
            intermediate,
            post,
            u1: None,
            u2: None,
        })
    }
}

fn normalized_weights(weights: Vec<(String, f64)>) -> Result<Vec<(String, f64)>> {
    let denom: f64 = weights.iter().map(|(_, w)| w).sum();
    if denom < IMPOSSIBLE_TOL {
        return Err(Error::ImpossiblePostSelection);
    }
    Ok(weights.into_iter().map(|(l, w)| (l, w / denom)).collect())
}

/// Two-time conditional distribution for a complete final measurement:
/// Prob(cₙ) ∝ |⟨ψ₂|U₂ Pₙ U₁|ψ₁⟩|². Rows follow intermediate outcome order.
pub fn abl_probability(query: &AblQuery<StateVector>) -> Result<Vec<(String, f64)>> {
    let weights = query
        .branches()?
        .into_iter()
        .map(|(label, branch)| Ok((label, query.post.inner(&branch)?.norm_sqr())))
        .collect::<Result<Vec<_>>>()?;
    normalized_weights(weights)
}

/// Two-time conditional distribution for an incomplete final measurement:
/// Prob(cₙ) ∝ ‖P_B U₂ Pₙ U₁|ψ₁⟩‖². For a rank-1 P_B = |ψ₂⟩⟨ψ₂| this equals
/// [`abl_probability`] exactly.
pub fn abl_generalized(query: &AblQuery<Projector>) -> Result<Vec<(String, f64)>> {
    let weights = query
        .branches()?
        .into_iter()
        .map(|(label, branch)| Ok((label, query.post.apply(&branch)?.norm_sqr())))
        .collect::<Result<Vec<_>>>()?;
    normalized_weights(weights)
}

/// Inputs for a law-of-total-probability reconstruction of
/// Prob(`target`) = Σ_o Prob(`target` | o) · Prob(o) over final outcomes o.
///
/// The struct records whatever tables the caller supplies; nothing here
/// checks that conditionals and marginals refer to the same experimental
/// arrangement. That mismatch is the point of the fallacy demonstrations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionInput {
    /// Name of the event being reconstructed (bookkeeping only).
    pub target: String,
    /// `(final outcome, Prob(target | outcome))` rows.
    pub conditionals: Vec<(String, f64)>,
    /// `(final outcome, Prob(outcome))` rows; must cover the same outcomes
    /// and sum to 1.
    pub marginals: Vec<(String, f64)>,
}

impl DecompositionInput {
    pub fn new(
        target: impl Into<String>,
        conditionals: Vec<(String, f64)>,
        marginals: Vec<(String, f64)>,
    ) -> Result<Self> {
        let input = DecompositionInput {
            target: target.into(),
            conditionals,
            marginals,
        };
        input.validate()?;
        Ok(input)
    }

    fn validate(&self) -> Result<()> {
        for (label, _) in &self.conditionals {
            if !self.marginals.iter().any(|(l, _)| l == label) {
                return Err(Error::IncompleteTable(format!("marginal for {label:?}")));
            }
        }
        for (label, _) in &self.marginals {
            if !self.conditionals.iter().any(|(l, _)| l == label) {
                return Err(Error::IncompleteTable(format!("conditional for {label:?}")));
            }
        }
        for (label, p) in self.conditionals.iter().chain(&self.marginals) {
            if !(-1e-12..=1.0 + 1e-12).contains(p) {
                return Err(Error::InvalidDecomposition(format!(
                    "probability for {label:?} out of range: {p}"
                )));
            }
        }
        let total: f64 = self.marginals.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidDecomposition(format!(
                "marginals sum to {total}, not 1"
            )));
        }
        Ok(())
    }
}

/// Σ_o Prob(target | o) · Prob(o), summed in conditional row order.
pub fn decompose_total(input: &DecompositionInput) -> Result<f64> {
    input.validate()?;
    let mut total = 0.0;
    for (label, cond) in &input.conditionals {
        let (_, marg) = input
            .marginals
            .iter()
            .find(|(l, _)| l == label)
            .expect("validated");
        total += cond * marg;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{Space, C64};
    use crate::optics::{beam_splitter_particle, BeamSplitter, ModeRegistry};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn registry() -> ModeRegistry {
        ModeRegistry::new(["a", "c", "d", "b", "e"]).unwrap()
    }

    /// (1/√2)|a⟩ + (1/2)|c⟩ + (1/2)|d⟩: the state between the inner
    /// interferometer and the final beam splitter.
    fn pre_state(space: &Space) -> StateVector {
        StateVector::from_components(
            space,
            &[
                ("a", c(1.0 / 2f64.sqrt())),
                ("c", c(0.5)),
                ("d", c(0.5)),
            ],
            false,
        )
        .unwrap()
    }

    fn watch_c(space: &Space) -> Measurement {
        Measurement::binary(
            "path-c",
            "on-c",
            Projector::onto_label(space, "c").unwrap(),
            "off-c",
        )
        .unwrap()
    }

    fn final_bs(reg: &ModeRegistry) -> Operator {
        beam_splitter_particle(
            reg,
            &BeamSplitter {
                in1: "d".into(),
                in2: "c".into(),
                out1: "e".into(),
                out2: "b".into(),
            },
        )
        .unwrap()
    }

    fn plus_minus(space: &Space, sign: f64) -> StateVector {
        StateVector::from_components(space, &[("a", c(1.0)), ("b", c(sign))], true).unwrap()
    }

    #[test]
    fn certain_history_gives_a_point_distribution() {
        let space = Space::new(["a", "c", "d"]).unwrap();
        let meas = Measurement::new(
            "arm",
            vec![
                ("a".into(), Projector::onto_label(&space, "a").unwrap()),
                ("c".into(), Projector::onto_label(&space, "c").unwrap()),
                ("d".into(), Projector::onto_label(&space, "d").unwrap()),
            ],
        )
        .unwrap();
        let a = space.basis_state("a").unwrap();
        let probs =
            abl_probability(&AblQuery::post_state(a.clone(), meas, a).unwrap()).unwrap();
        assert!(close(probs[0].1, 1.0, 1e-15));
        assert!(close(probs[1].1, 0.0, 1e-15));
        assert!(close(probs[2].1, 0.0, 1e-15));
    }

    #[test]
    fn symmetric_post_selection_gives_one_tenth_on_the_watched_arm() {
        let reg = registry();
        let space = reg.particle_space();
        let query = AblQuery::post_state(pre_state(space), watch_c(space), plus_minus(space, 1.0))
            .unwrap()
            .with_u2(final_bs(&reg))
            .unwrap();
        let probs = abl_probability(&query).unwrap();
        assert_eq!(probs[0].0, "on-c");
        assert!(close(probs[0].1, 0.1, 1e-12));
        assert!(close(probs[1].1, 0.9, 1e-12));
    }

    #[test]
    fn antisymmetric_post_selection_gives_one_half_on_the_watched_arm() {
        let reg = registry();
        let space = reg.particle_space();
        let query = AblQuery::post_state(pre_state(space), watch_c(space), plus_minus(space, -1.0))
            .unwrap()
            .with_u2(final_bs(&reg))
            .unwrap();
        let probs = abl_probability(&query).unwrap();
        assert!(close(probs[0].1, 0.5, 1e-12));
    }

    #[test]
    fn bright_port_post_selection_gives_one_half_on_the_watched_arm() {
        let reg = registry();
        let space = reg.particle_space();
        let query = AblQuery::post_state(
            pre_state(space),
            watch_c(space),
            space.basis_state("e").unwrap(),
        )
        .unwrap()
        .with_u2(final_bs(&reg))
        .unwrap();
        let probs = abl_probability(&query).unwrap();
        assert!(close(probs[0].1, 0.5, 1e-12));
    }

    #[test]
    fn subspace_post_selection_gives_one_sixth_on_the_watched_arm() {
        let reg = registry();
        let space = reg.particle_space();
        let d1 = Projector::from_vectors(&[
            space.basis_state("a").unwrap(),
            space.basis_state("b").unwrap(),
        ])
        .unwrap();
        let query = AblQuery::post_projector(pre_state(space), watch_c(space), d1)
            .unwrap()
            .with_u2(final_bs(&reg))
            .unwrap();
        let probs = abl_generalized(&query).unwrap();
        assert_eq!(probs[0].0, "on-c");
        assert!(close(probs[0].1, 1.0 / 6.0, 1e-12));
        assert!(close(probs[1].1, 5.0 / 6.0, 1e-12));
    }

    #[test]
    fn rank_one_subspace_reduces_to_the_state_formula() {
        let reg = registry();
        let space = reg.particle_space();
        let post = plus_minus(space, 1.0);
        let by_state = abl_probability(
            &AblQuery::post_state(pre_state(space), watch_c(space), post.clone())
                .unwrap()
                .with_u2(final_bs(&reg))
                .unwrap(),
        )
        .unwrap();
        let by_projector = abl_generalized(
            &AblQuery::post_projector(
                pre_state(space),
                watch_c(space),
                Projector::onto_state(&post).unwrap(),
            )
            .unwrap()
            .with_u2(final_bs(&reg))
            .unwrap(),
        )
        .unwrap();
        for ((_, a), (_, b)) in by_state.iter().zip(&by_projector) {
            assert!(close(*a, *b, 1e-12));
        }
    }

    #[test]
    fn trivial_post_selection_reproduces_forward_probabilities() {
        let reg = registry();
        let space = reg.particle_space();
        let everything = Projector::new(Operator::identity(space)).unwrap();
        let query = AblQuery::post_projector(pre_state(space), watch_c(space), everything)
            .unwrap()
            .with_u2(final_bs(&reg))
            .unwrap();
        let probs = abl_generalized(&query).unwrap();
        assert!(close(probs[0].1, 0.25, 1e-12));
        assert!(close(probs[1].1, 0.75, 1e-12));
    }

    #[test]
    fn distributions_are_invariant_under_rescaling_the_boundary_states() {
        let reg = registry();
        let space = reg.particle_space();
        let scale = C64::new(0.0, 3.0);
        let reference = abl_probability(
            &AblQuery::post_state(pre_state(space), watch_c(space), plus_minus(space, 1.0))
                .unwrap()
                .with_u2(final_bs(&reg))
                .unwrap(),
        )
        .unwrap();
        let rescaled = abl_probability(
            &AblQuery::post_state(
                pre_state(space).scaled(scale),
                watch_c(space),
                plus_minus(space, 1.0).scaled(C64::new(-0.5, 0.5)),
            )
            .unwrap()
            .with_u2(final_bs(&reg))
            .unwrap(),
        )
        .unwrap();
        for ((_, a), (_, b)) in reference.iter().zip(&rescaled) {
            assert!(close(*a, *b, 1e-13));
        }
    }

    #[test]
    fn unreachable_post_selection_is_rejected() {
        let space = Space::new(["a", "c", "d"]).unwrap();
        let meas = Measurement::binary(
            "arm",
            "on-a",
            Projector::onto_label(&space, "a").unwrap(),
            "off-a",
        )
        .unwrap();
        let query = AblQuery::post_state(
            space.basis_state("a").unwrap(),
            meas,
            space.basis_state("c").unwrap(),
        )
        .unwrap();
        assert_eq!(
            abl_probability(&query).unwrap_err(),
            Error::ImpossiblePostSelection
        );
    }

    #[test]
    fn non_unitary_evolution_is_rejected() {
        let space = Space::new(["a", "c"]).unwrap();
        let meas = Measurement::binary(
            "arm",
            "on-a",
            Projector::onto_label(&space, "a").unwrap(),
            "off-a",
        )
        .unwrap();
        let mut bad = Operator::identity(&space);
        bad.set_entry(0, 0, c(2.0));
        let query = AblQuery::post_state(
            space.basis_state("a").unwrap(),
            meas,
            space.basis_state("a").unwrap(),
        )
        .unwrap()
        .with_u2(bad);
        assert!(matches!(query.unwrap_err(), Error::NotUnitary(_)));
    }

    #[test]
    fn mixture_follows_the_supplied_tables() {
        let input = DecompositionInput::new(
            "click",
            vec![("x".into(), 1.0 / 6.0), ("y".into(), 0.5)],
            vec![("x".into(), 0.5), ("y".into(), 0.5)],
        )
        .unwrap();
        assert!(close(decompose_total(&input).unwrap(), 1.0 / 3.0, 1e-15));
    }

    #[test]
    fn mixture_requires_matching_outcome_sets() {
        let missing_marginal = DecompositionInput::new(
            "click",
            vec![("x".into(), 0.5), ("y".into(), 0.5)],
            vec![("x".into(), 1.0)],
        );
        assert!(matches!(
            missing_marginal.unwrap_err(),
            Error::IncompleteTable(_)
        ));
        let missing_conditional = DecompositionInput::new(
            "click",
            vec![("x".into(), 0.5)],
            vec![("x".into(), 0.5), ("y".into(), 0.5)],
        );
        assert!(matches!(
            missing_conditional.unwrap_err(),
            Error::IncompleteTable(_)
        ));
    }

    #[test]
    fn mixture_requires_marginals_that_sum_to_one() {
        let input = DecompositionInput::new(
            "click",
            vec![("x".into(), 0.5), ("y".into(), 0.5)],
            vec![("x".into(), 0.5), ("y".into(), 0.3)],
        );
        assert!(matches!(
            input.unwrap_err(),
            Error::InvalidDecomposition(_)
        ));
    }
}
