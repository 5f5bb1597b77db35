//! Scenario files: a schedule plus everything needed to simulate it.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use signed_consensus::classification::ClassifierConfig;
use signed_consensus::dynamics::{
    AdditiveVariant, ConstantGain, CosineGain, GainFunction, IntegratorConfig, Nonlinearity,
    NonlinearitySpec, SinSquaredGain,
};
use signed_consensus::signed_graph::{Schedule, ScheduleFile, SegmentFile};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolName {
    #[default]
    Linear,
    NonlinearAdditiveNode,
    NonlinearAdditiveEdge,
    GainFlow,
}

/// Pair indices are 1-based, like everything else in the file formats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityOverride {
    pub i: usize,
    pub j: usize,
    pub h: Nonlinearity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityFile {
    pub default: Nonlinearity,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<NonlinearityOverride>,
}

/// Gain family for the gain flow; its support is the (constant) schedule
/// matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GainFile {
    Constant,
    SinSquared,
    Cosine,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub n: usize,
    pub segments: Vec<SegmentFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub x0: Vec<f64>,
    #[serde(default)]
    pub protocol: ProtocolName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinearity: Option<NonlinearityFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<GainFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classifier: Option<ClassifierConfig>,
}

pub enum Protocol {
    Linear,
    Additive(AdditiveVariant, NonlinearitySpec),
    GainFlow(Box<dyn GainFunction>),
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Linear => "linear",
            Protocol::Additive(AdditiveVariant::NodeEvaluated, _) => "nonlinear-additive-node",
            Protocol::Additive(AdditiveVariant::EdgeEvaluated, _) => "nonlinear-additive-edge",
            Protocol::GainFlow(_) => "gain-flow",
        }
    }
}

pub struct Scenario {
    pub name: String,
    pub schedule: Schedule,
    pub x0: Vec<f64>,
    pub protocol: Protocol,
    pub t_end: Option<f64>,
    pub integrator: IntegratorConfig,
    pub classifier: ClassifierConfig,
    pub hash: String,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// SHA-256 of the canonical (compact) serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("scenario serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// Checks the cross-field rules and builds the runnable scenario.
    /// Errors name the offending field.
    pub fn into_scenario(self, name: &str) -> Result<Scenario, String> {
        let hash = self.hash();
        let schedule = ScheduleFile {
            n: self.n,
            segments: self.segments.clone(),
            period: self.period,
            labels: self.labels.clone(),
        }
        .into_schedule()
        .map_err(|e| e.to_string())?;
        if self.x0.len() != self.n {
            return Err(format!("x0: expected {} entries, got {}", self.n, self.x0.len()));
        }
        if let Some(i) = self.x0.iter().position(|v| !v.is_finite()) {
            return Err(format!("x0[{i}]: must be finite"));
        }
        if let Some(t) = self.t_end {
            if !(t > 0.0 && t.is_finite()) {
                return Err(format!("t_end: must be positive, got {t}"));
            }
        }

        let additive = matches!(
            self.protocol,
            ProtocolName::NonlinearAdditiveNode | ProtocolName::NonlinearAdditiveEdge
        );
        if additive != self.nonlinearity.is_some() {
            return Err(format!(
                "nonlinearity: required for the additive nonlinear protocols and only for them (protocol is {:?})",
                self.protocol
            ));
        }
        let gain_flow = self.protocol == ProtocolName::GainFlow;
        if gain_flow != self.gain.is_some() {
            return Err(format!(
                "gain: required for the gain-flow protocol and only for it (protocol is {:?})",
                self.protocol
            ));
        }

        let protocol = match self.protocol {
            ProtocolName::Linear => Protocol::Linear,
            ProtocolName::NonlinearAdditiveNode | ProtocolName::NonlinearAdditiveEdge => {
                let nl = self.nonlinearity.clone().expect("checked above");
                let mut overrides = Vec::with_capacity(nl.overrides.len());
                for (idx, o) in nl.overrides.into_iter().enumerate() {
                    if o.i == 0 || o.j == 0 {
                        return Err(format!("nonlinearity.overrides[{idx}]: indices are 1-based"));
                    }
                    overrides.push((o.i - 1, o.j - 1, o.h));
                }
                let spec = NonlinearitySpec::new(self.n, nl.default, overrides)
                    .map_err(|e| format!("nonlinearity: {e}"))?;
                let variant = if self.protocol == ProtocolName::NonlinearAdditiveNode {
                    AdditiveVariant::NodeEvaluated
                } else {
                    AdditiveVariant::EdgeEvaluated
                };
                Protocol::Additive(variant, spec)
            }
            ProtocolName::GainFlow => {
                let support = schedule
                    .constant_matrix()
                    .ok_or("gain: the gain flow needs a constant schedule as its support")?
                    .clone();
                Protocol::GainFlow(match self.gain.expect("checked above") {
                    GainFile::Constant => Box::new(ConstantGain(support)),
                    GainFile::SinSquared => Box::new(SinSquaredGain { support }),
                    GainFile::Cosine => Box::new(CosineGain { support }),
                })
            }
        };

        Ok(Scenario {
            name: name.to_string(),
            x0: self.x0.clone(),
            t_end: self.t_end,
            integrator: self.integrator.clone().unwrap_or_default(),
            classifier: self.classifier.clone().unwrap_or_default(),
            schedule,
            protocol,
            hash,
        })
    }
}
