//! TOML scenario files.
//!
//! ```toml
//! name = "original"
//! modes = ["a", "c", "d", "b", "e"]
//! ancilla = ["anc0", "anc1"]
//! normalize = false
//! initial = [["a", "1", "0"]]
//!
//! [[elements]]
//! type = "beamsplitter"
//! in1 = "a"
//! in2 = "c"
//! out1 = "a"
//! out2 = "c"
//!
//! [[elements]]
//! type = "whichway"
//! mode = "c"
//!
//! [[detectors]]
//! name = "D2"
//! generators = [[["e", "1", "0"]]]
//! ```
//!
//! Amplitudes are `[label, re, im]` triples whose numeric parts may be TOML
//! numbers, decimal strings, or exact rationals like `"1/2"`. The initial
//! state must be normalized unless `normalize = true`; detector generators
//! only fix a span and are always normalized.

use ablsim::hilbert::{Space, StateVector, C64};
use ablsim::optics::{BeamSplitter, Circuit, CircuitElement, DetectorSpec, ModeRegistry};
use ablsim::scenario::Scenario;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Num {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Num {
    fn value(&self) -> Result<f64, String> {
        match self {
            Num::Int(i) => Ok(*i as f64),
            Num::Float(f) => Ok(*f),
            Num::Text(s) => {
                let s = s.trim();
                if let Some((num, den)) = s.split_once('/') {
                    let num: f64 = num
                        .trim()
                        .parse::<i64>()
                        .map_err(|_| format!("bad rational numerator in {s:?}"))?
                        as f64;
                    let den: f64 = den
                        .trim()
                        .parse::<i64>()
                        .map_err(|_| format!("bad rational denominator in {s:?}"))?
                        as f64;
                    if den == 0.0 {
                        return Err(format!("zero denominator in {s:?}"));
                    }
                    Ok(num / den)
                } else {
                    s.parse::<f64>().map_err(|_| format!("bad number {s:?}"))
                }
            }
        }
    }
}

type Component = (String, Num, Num);

#[derive(Debug, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
enum ScnElement {
    #[serde(rename = "beamsplitter")]
    BeamSplitter {
        in1: String,
        in2: String,
        out1: String,
        out2: String,
    },
    #[serde(rename = "whichway")]
    WhichWay { mode: String },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScnDetector {
    name: String,
    generators: Vec<Vec<Component>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScnFile {
    name: Option<String>,
    modes: Vec<String>,
    ancilla: Option<(String, String)>,
    #[serde(default)]
    normalize: bool,
    initial: Vec<Component>,
    #[serde(default)]
    elements: Vec<ScnElement>,
    detectors: Vec<ScnDetector>,
    intermediate_name: Option<String>,
}

/// What went wrong while loading a scenario file, split by exit-code class.
#[derive(Debug)]
pub enum LoadError {
    /// Unreadable file or malformed TOML/numbers.
    Parse(String),
    /// Well-formed file describing an invalid experiment.
    Invalid(ablsim::Error),
}

impl std::fmt::Display for LoadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LoadError::Parse(msg) => write!(f, "{msg}"),
            LoadError::Invalid(err) => write!(f, "{err}"),
        }
    }
}

fn components_to_state(
    space: &Space,
    components: &[Component],
    normalize: bool,
) -> Result<StateVector, LoadError> {
    let mut pairs = Vec::with_capacity(components.len());
    for (label, re, im) in components {
        let re = re.value().map_err(LoadError::Parse)?;
        let im = im.value().map_err(LoadError::Parse)?;
        pairs.push((label.as_str(), C64::new(re, im)));
    }
    StateVector::from_components(space, &pairs, normalize).map_err(LoadError::Invalid)
}

/// Parses TOML text into a validated [`Scenario`].
pub fn parse_scenario(text: &str) -> Result<Scenario, LoadError> {
    let file: ScnFile =
        toml::from_str(text).map_err(|e| LoadError::Parse(format!("scenario parse error:\n{e}")))?;
    let registry = match &file.ancilla {
        Some((no_click, click)) => {
            ModeRegistry::with_ancilla(file.modes.clone(), no_click, click)
        }
        None => ModeRegistry::new(file.modes.clone()),
    }
    .map_err(LoadError::Invalid)?;
    let elements = file
        .elements
        .iter()
        .map(|e| match e {
            ScnElement::BeamSplitter {
                in1,
                in2,
                out1,
                out2,
            } => CircuitElement::BeamSplitter(BeamSplitter {
                in1: in1.clone(),
                in2: in2.clone(),
                out1: out1.clone(),
                out2: out2.clone(),
            }),
            ScnElement::WhichWay { mode } => CircuitElement::WhichWayCoupler { mode: mode.clone() },
        })
        .collect();
    let circuit = Circuit::new(registry, elements).map_err(LoadError::Invalid)?;
    let particle = circuit.registry().particle_space().clone();
    let initial = components_to_state(&particle, &file.initial, file.normalize)?;
    let detectors = file
        .detectors
        .iter()
        .map(|d| {
            let generators = d
                .generators
                .iter()
                .map(|g| components_to_state(&particle, g, true))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(DetectorSpec::new(d.name.clone(), generators))
        })
        .collect::<Result<Vec<_>, LoadError>>()?;
    Scenario::new(
        file.name.as_deref().unwrap_or("custom"),
        circuit,
        initial,
        detectors,
        file.intermediate_name.as_deref().unwrap_or("D3"),
    )
    .map_err(LoadError::Invalid)
}

/// Reads and parses a scenario file.
pub fn load_scenario(path: &std::path::Path) -> Result<Scenario, LoadError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| LoadError::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text)
}
