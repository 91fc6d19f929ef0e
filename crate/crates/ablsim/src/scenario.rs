//! One prepared interferometer experiment: a circuit, an initial particle
//! state, final detectors, and (when a which-way coupler is present) the
//! intermediate click record, together with its forward and two-time
//! analyses.
//!
//! Forward analysis runs the circuit and applies the Born rule at the end.
//! Two-time analysis conditions on a final detector and asks for the
//! probability that the coupler clicked, working on the particle space: the
//! pre-selected state is the state just before the coupler, the remaining
//! beam splitters become the evolution `u2` of the query, and the detector
//! subspace is the post-selection. The coupler itself is exactly the
//! projective click/no-click alternative the query ranges over, which is why
//! the conditional denominators equal the forward detector probabilities of
//! the coupled circuit.

use crate::abl::{abl_generalized, abl_probability, AblQuery};
use crate::error::{Error, Result};
use crate::hilbert::{
    born_probabilities, orthonormalize, Measurement, Operator, Projector, StateVector,
    STATE_NORM_TOL,
};
use crate::optics::{
    beam_splitter_particle, d3_click_projector, detector_projector, run_circuit, Circuit,
    CircuitElement, DetectorSpec, ModeRegistry,
};

/// Outcome label for "the which-way detector fired".
pub const CLICK: &str = "click";
/// Outcome label for "the which-way detector stayed silent".
pub const NO_CLICK: &str = "no-click";
/// Outcome label for the remainder of the identity not covered by detectors.
pub const REMAINDER: &str = "none";
/// Forward rows with probability at or below this are unreachable and dropped
/// from reports.
pub const REPORT_TOL: f64 = 1e-12;

/// A named, validated experiment. Construction checks the circuit, embeds the
/// initial particle state (ancilla in its no-click level), and assembles the
/// final projective measurement from the detector subspaces plus a remainder
/// outcome.
#[derive(Clone, Debug)]
pub struct Scenario {
    name: String,
    circuit: Circuit,
    initial_particle: StateVector,
    initial: StateVector,
    detectors: Vec<DetectorSpec>,
    intermediate_name: String,
    final_meas: Measurement,
    intermediate_meas: Option<Measurement>,
}

impl Scenario {
    pub fn new(
        name: impl Into<String>,
        circuit: Circuit,
        initial_particle: StateVector,
        detectors: Vec<DetectorSpec>,
        intermediate_name: impl Into<String>,
    ) -> Result<Self> {
        let name = name.into();
        let intermediate_name = intermediate_name.into();
        if intermediate_name.is_empty() {
            return Err(Error::InvalidScenario(
                "the intermediate observable needs a name".into(),
            ));
        }
        if initial_particle.space() != circuit.registry().particle_space() {
            return Err(Error::SpaceMismatch("initial state vs particle space"));
        }
        let norm = initial_particle.norm();
        if (norm - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::NotNormalized {
                norm_sqr: norm * norm,
            });
        }
        if detectors.is_empty() {
            return Err(Error::InvalidScenario("at least one detector is required".into()));
        }
        for (i, d) in detectors.iter().enumerate() {
            if d.name == REMAINDER || d.name == intermediate_name {
                return Err(Error::InvalidScenario(format!(
                    "detector name {:?} is reserved",
                    d.name
                )));
            }
            if detectors[..i].iter().any(|other| other.name == d.name) {
                return Err(Error::DuplicateLabel(d.name.clone()));
            }
        }
        if circuit.coupler_count() > 1 {
            return Err(Error::InvalidScenario(
                "at most one which-way coupler is supported".into(),
            ));
        }
        let registry = circuit.registry();
        let initial = registry.embed_state(&initial_particle)?;
        let final_meas = build_final_measurement(registry, &detectors)?;
        let intermediate_meas = if circuit.coupler_index().is_some() {
            Some(Measurement::binary(
                intermediate_name.clone(),
                CLICK,
                d3_click_projector(registry)?,
                NO_CLICK,
            )?)
        } else {
            None
        };
        Ok(Scenario {
            name,
            circuit,
            initial_particle,
            initial,
            detectors,
            intermediate_name,
            final_meas,
            intermediate_meas,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn registry(&self) -> &ModeRegistry {
        self.circuit.registry()
    }

    pub fn detectors(&self) -> &[DetectorSpec] {
        &self.detectors
    }

    pub fn intermediate_name(&self) -> &str {
        &self.intermediate_name
    }

    pub fn d3_present(&self) -> bool {
        self.circuit.coupler_index().is_some()
    }

    /// Full-space initial state (ancilla, if any, in the no-click level).
    pub fn initial(&self) -> &StateVector {
        &self.initial
    }

    pub fn initial_particle(&self) -> &StateVector {
        &self.initial_particle
    }

    /// Final projective measurement: one outcome per detector plus, when the
    /// detectors do not already resolve the identity, a [`REMAINDER`] outcome.
    pub fn final_measurement(&self) -> &Measurement {
        &self.final_meas
    }

    /// Click/no-click measurement on the full space, present iff the circuit
    /// has a which-way coupler.
    pub fn intermediate_measurement(&self) -> Option<&Measurement> {
        self.intermediate_meas.as_ref()
    }

    /// The full-space state entering the detectors.
    pub fn run(&self) -> Result<StateVector> {
        run_circuit(&self.initial, &self.circuit)
    }

    /// Born probabilities at the detectors, in detector order; the remainder
    /// row appears only if reachable, and the click marginal (named after the
    /// intermediate observable) is appended when a coupler is present.
    pub fn forward_probabilities(&self) -> Result<Vec<(String, f64)>> {
        let final_state = self.run()?;
        let born = born_probabilities(&final_state, &self.final_meas)?;
        let mut rows = Vec::with_capacity(born.len() + 1);
        for (label, p) in born {
            if label == REMAINDER && p <= REPORT_TOL {
                continue;
            }
            rows.push((label, p));
        }
        if let Some(meas) = &self.intermediate_meas {
            let p_click = meas.projector(CLICK)?.apply(&final_state)?.norm_sqr();
            rows.push((self.intermediate_name.clone(), p_click));
        }
        Ok(rows)
    }

    /// Click probability (in the two-time sense) per detector:
    /// `(detector, Prob(click | detector))` in detector order.
    pub fn abl_conditionals(&self) -> Result<Vec<(String, f64)>> {
        self.detectors
            .iter()
            .map(|d| {
                let dist = self.click_conditional(&d.name)?;
                let (_, p) = dist
                    .into_iter()
                    .find(|(l, _)| l == CLICK)
                    .expect("binary intermediate always has a click outcome");
                Ok((d.name.clone(), p))
            })
            .collect()
    }

    /// Full two-time click/no-click distribution conditioned on one detector.
    /// Detectors spanning a single ray use the complete-measurement formula;
    /// wider subspaces use the generalized one.
    pub fn click_conditional(&self, detector: &str) -> Result<Vec<(String, f64)>> {
        let spec = self
            .detectors
            .iter()
            .find(|d| d.name == detector)
            .ok_or_else(|| Error::UnknownLabel(detector.to_string()))?;
        let (pre, u2) = self.split_at_coupler()?;
        let intermediate = self.intermediate_particle()?;
        let basis = orthonormalize(&spec.generators)?;
        if basis.len() == 1 {
            let query = AblQuery::post_state(pre, intermediate, basis.into_iter().next().unwrap())?
                .with_u2(u2)?;
            abl_probability(&query)
        } else {
            let query =
                AblQuery::post_projector(pre, intermediate, Projector::from_vectors(&basis)?)?
                    .with_u2(u2)?;
            abl_generalized(&query)
        }
    }

    /// Particle-space state just before the coupler, and the product of the
    /// remaining element unitaries.
    fn split_at_coupler(&self) -> Result<(StateVector, Operator)> {
        let registry = self.registry();
        let coupler = self.circuit.coupler_index().ok_or(Error::NoAncilla)?;
        let mut pre = self.initial_particle.clone();
        for element in &self.circuit.elements()[..coupler] {
            pre = particle_unitary(registry, element)?.apply(&pre)?;
        }
        let mut u2 = Operator::identity(registry.particle_space());
        for element in &self.circuit.elements()[coupler + 1..] {
            u2 = particle_unitary(registry, element)?.compose(&u2)?;
        }
        Ok((pre, u2))
    }

    /// Click/no-click alternative as a particle-space measurement: "was the
    /// particle on the watched mode".
    fn intermediate_particle(&self) -> Result<Measurement> {
        let watched = self.circuit.watched_mode().ok_or(Error::NoAncilla)?;
        let proj = Projector::onto_label(self.registry().particle_space(), watched)?;
        Measurement::binary(self.intermediate_name.clone(), CLICK, proj, NO_CLICK)
    }
}

fn particle_unitary(registry: &ModeRegistry, element: &CircuitElement) -> Result<Operator> {
    match element {
        CircuitElement::BeamSplitter(bs) => beam_splitter_particle(registry, bs),
        CircuitElement::WhichWayCoupler { .. } => Err(Error::InvalidScenario(
            "which-way couplers cannot appear on one side of themselves".into(),
        )),
    }
}

fn build_final_measurement(
    registry: &ModeRegistry,
    detectors: &[DetectorSpec],
) -> Result<Measurement> {
    let mut outcomes = Vec::with_capacity(detectors.len() + 1);
    let mut sum = Operator::zero(registry.space());
    for spec in detectors {
        let proj = detector_projector(registry, spec)?;
        sum = sum.add(proj.op())?;
        outcomes.push((spec.name.clone(), proj));
    }
    let remainder_op = Operator::identity(registry.space()).sub(&sum)?;
    let remainder = Projector::new(remainder_op).map_err(|_| {
        Error::InvalidMeasurement(
            "final measurement: detector subspaces overlap, they must be mutually orthogonal"
                .into(),
        )
    })?;
    if remainder.rank() > 0 {
        outcomes.push((REMAINDER.to_string(), remainder));
    }
    Measurement::new("final", outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::C64;
    use crate::optics::BeamSplitter;
    use crate::presets::{build_scenario, D1Variant};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn lookup(rows: &[(String, f64)], label: &str) -> f64 {
        rows.iter()
            .find(|(l, _)| l == label)
            .unwrap_or_else(|| panic!("missing row {label:?}"))
            .1
    }

    #[test]
    fn uncoupled_run_splits_evenly_and_reports_no_click_row() {
        let s = build_scenario(false, D1Variant::Subspace).unwrap();
        let rows = s.forward_probabilities().unwrap();
        assert_eq!(rows.len(), 2);
        assert!(close(lookup(&rows, "D1"), 0.5, 1e-12));
        assert!(close(lookup(&rows, "D2"), 0.5, 1e-12));
    }

    #[test]
    fn coupled_run_shifts_weight_to_the_first_detector() {
        let s = build_scenario(true, D1Variant::Subspace).unwrap();
        let rows = s.forward_probabilities().unwrap();
        assert_eq!(rows.len(), 3);
        assert!(close(lookup(&rows, "D1"), 0.75, 1e-12));
        assert!(close(lookup(&rows, "D2"), 0.25, 1e-12));
        assert!(close(lookup(&rows, "D3"), 0.25, 1e-12));
    }

    #[test]
    fn coupled_run_with_split_first_detector() {
        let s = build_scenario(true, D1Variant::PlusMinus).unwrap();
        let rows = s.forward_probabilities().unwrap();
        assert!(close(lookup(&rows, "D1+"), 0.625, 1e-12));
        assert!(close(lookup(&rows, "D1-"), 0.125, 1e-12));
        assert!(close(lookup(&rows, "D2"), 0.25, 1e-12));
        assert!(close(lookup(&rows, "D3"), 0.25, 1e-12));
    }

    #[test]
    fn uncoupled_run_with_split_first_detector() {
        let s = build_scenario(false, D1Variant::PlusMinus).unwrap();
        let rows = s.forward_probabilities().unwrap();
        assert!(close(lookup(&rows, "D1+"), 0.25, 1e-12));
        assert!(close(lookup(&rows, "D1-"), 0.25, 1e-12));
        assert!(close(lookup(&rows, "D2"), 0.5, 1e-12));
    }

    #[test]
    fn conditionals_for_the_undivided_first_detector() {
        let s = build_scenario(true, D1Variant::Subspace).unwrap();
        let rows = s.abl_conditionals().unwrap();
        assert!(close(lookup(&rows, "D1"), 1.0 / 6.0, 1e-12));
        assert!(close(lookup(&rows, "D2"), 0.5, 1e-12));
    }

    #[test]
    fn conditionals_for_the_split_first_detector() {
        let s = build_scenario(true, D1Variant::PlusMinus).unwrap();
        let rows = s.abl_conditionals().unwrap();
        assert!(close(lookup(&rows, "D1+"), 0.1, 1e-12));
        assert!(close(lookup(&rows, "D1-"), 0.5, 1e-12));
        assert!(close(lookup(&rows, "D2"), 0.5, 1e-12));
    }

    #[test]
    fn conditionals_weighted_by_marginals_recover_the_click_probability() {
        for variant in [D1Variant::Subspace, D1Variant::PlusMinus] {
            let s = build_scenario(true, variant).unwrap();
            let forward = s.forward_probabilities().unwrap();
            let conditionals = s.abl_conditionals().unwrap();
            let mixed: f64 = conditionals
                .iter()
                .map(|(name, c)| c * lookup(&forward, name))
                .sum();
            assert!(close(mixed, lookup(&forward, "D3"), 1e-12));
        }
    }

    #[test]
    fn unknown_detector_is_rejected() {
        let s = build_scenario(true, D1Variant::Subspace).unwrap();
        assert_eq!(
            s.click_conditional("D9").unwrap_err(),
            Error::UnknownLabel("D9".into())
        );
    }

    #[test]
    fn conditioning_requires_a_coupler() {
        let s = build_scenario(false, D1Variant::Subspace).unwrap();
        assert_eq!(s.abl_conditionals().unwrap_err(), Error::NoAncilla);
    }

    #[test]
    fn overlapping_detectors_are_rejected() {
        let registry = ModeRegistry::new(["a", "b"]).unwrap();
        let circuit = Circuit::new(registry, vec![]).unwrap();
        let space = circuit.registry().particle_space().clone();
        let err = Scenario::new(
            "bad",
            circuit,
            space.basis_state("a").unwrap(),
            vec![
                DetectorSpec::new("X", vec![space.basis_state("a").unwrap()]),
                DetectorSpec::new(
                    "Y",
                    vec![StateVector::from_components(
                        &space,
                        &[("a", C64::from(1.0)), ("b", C64::from(1.0))],
                        true,
                    )
                    .unwrap()],
                ),
            ],
            "D3",
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidMeasurement(_)));
    }

    #[test]
    fn reserved_and_duplicate_detector_names_are_rejected() {
        let registry = ModeRegistry::new(["a", "b"]).unwrap();
        let circuit = Circuit::new(registry, vec![]).unwrap();
        let space = circuit.registry().particle_space().clone();
        let make = |names: &[&str]| {
            Scenario::new(
                "bad",
                circuit.clone(),
                space.basis_state("a").unwrap(),
                names
                    .iter()
                    .enumerate()
                    .map(|(i, n)| {
                        DetectorSpec::new(
                            *n,
                            vec![space.basis_state(if i == 0 { "a" } else { "b" }).unwrap()],
                        )
                    })
                    .collect(),
                "D3",
            )
        };
        assert!(matches!(
            make(&["none"]).unwrap_err(),
            Error::InvalidScenario(_)
        ));
        assert!(matches!(
            make(&["D3"]).unwrap_err(),
            Error::InvalidScenario(_)
        ));
        assert!(matches!(
            make(&["X", "X"]).unwrap_err(),
            Error::DuplicateLabel(_)
        ));
    }

    #[test]
    fn second_coupler_is_rejected() {
        let registry = ModeRegistry::with_ancilla(["a", "b"], "anc0", "anc1").unwrap();
        let circuit = Circuit::new(
            registry,
            vec![
                CircuitElement::WhichWayCoupler { mode: "a".into() },
                CircuitElement::WhichWayCoupler { mode: "b".into() },
            ],
        )
        .unwrap();
        let space = circuit.registry().particle_space().clone();
        let err = Scenario::new(
            "bad",
            circuit,
            space.basis_state("a").unwrap(),
            vec![DetectorSpec::new("X", vec![space.basis_state("a").unwrap()])],
            "D3",
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidScenario(_)));
    }

    #[test]
    fn remainder_outcome_shows_up_when_reachable() {
        let registry = ModeRegistry::new(["a", "b"]).unwrap();
        let circuit = Circuit::new(
            registry,
            vec![CircuitElement::BeamSplitter(BeamSplitter {
                in1: "a".into(),
                in2: "b".into(),
                out1: "a".into(),
                out2: "b".into(),
            })],
        )
        .unwrap();
        let space = circuit.registry().particle_space().clone();
        let s = Scenario::new(
            "half",
            circuit,
            space.basis_state("a").unwrap(),
            vec![DetectorSpec::new("X", vec![space.basis_state("a").unwrap()])],
            "D3",
        )
        .unwrap();
        let rows = s.forward_probabilities().unwrap();
        assert!(close(lookup(&rows, "X"), 0.5, 1e-12));
        assert!(close(lookup(&rows, REMAINDER), 0.5, 1e-12));
    }
}
