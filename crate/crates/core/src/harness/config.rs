use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::body_model::{
    build_with_joint_table, double_leg_masses, load_model, AnthropometricTable, BodyModel,
    JointTable, REFERENCE_HEIGHT, REFERENCE_MASS,
};
use crate::controller::ParamLayout;
use crate::cost::{Strategy, DEFAULT_TOLERANCE};
use crate::optimizer::OptimizerConfig;
use crate::problem::DEFAULT_PENALTY_WEIGHT;
use crate::{Error, Result};

use super::target::{default_duration, place_target};

/// DoF of the reduced sagittal preset.
pub const PLANAR_6DOF: [&str; 6] = [
    "ankle.flexion",
    "knee.flexion",
    "hip.flexion",
    "lumbar.flexion",
    "r_shoulder.flexion",
    "r_elbow.flexion",
];

/// Which degrees of freedom carry controller parameters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    /// Every DoF that is not locked.
    #[default]
    #[serde(rename = "full")]
    Full,
    /// Sagittal flexion of ankle, knee, hip, lumbar spine, right shoulder and elbow.
    #[serde(rename = "planar-6dof")]
    Planar6Dof,
    /// Every DoF including locked ones.
    #[serde(rename = "all")]
    All,
}

impl Preset {
    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Full => "full",
            Preset::Planar6Dof => "planar-6dof",
            Preset::All => "all",
        }
    }

    pub fn layout(self, model: &BodyModel) -> Result<ParamLayout> {
        match self {
            Preset::Full => Ok(ParamLayout::unlocked(model)),
            Preset::Planar6Dof => ParamLayout::from_names(model, &PLANAR_6DOF),
            Preset::All => Ok(ParamLayout::all(model)),
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Preset::Full, Preset::Planar6Dof, Preset::All]
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown preset '{s}' (expected full, planar-6dof or all)"
                ))
            })
    }
}

/// A weight given explicitly or calibrated from a minimum-error run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum LambdaSetting {
    #[default]
    Auto,
    Value(f64),
}

impl Serialize for LambdaSetting {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LambdaSetting::Auto => s.serialize_str("auto"),
            LambdaSetting::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for LambdaSetting {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = LambdaSetting;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a non-negative number or \"auto\"")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<LambdaSetting, E> {
                if v == "auto" {
                    Ok(LambdaSetting::Auto)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<LambdaSetting, E> {
                if v.is_finite() && v >= 0.0 {
                    Ok(LambdaSetting::Value(v))
                } else {
                    Err(E::invalid_value(de::Unexpected::Float(v), &self))
                }
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<LambdaSetting, E> {
                self.visit_f64(v as f64)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<LambdaSetting, E> {
                self.visit_f64(v as f64)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LambdaConfig {
    pub power: LambdaSetting,
    pub com: LambdaSetting,
}

/// Where the body model comes from. With no fields set, the shipped
/// default model is used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Complete model file; excludes every other field.
    pub file: Option<PathBuf>,
    /// Stature, m.
    pub height: Option<f64>,
    /// Body mass, kg.
    pub mass: Option<f64>,
    pub anthropometrics: Option<PathBuf>,
    pub joint_table: Option<PathBuf>,
    /// Double thigh and shank masses to stand in for both legs.
    pub double_legs: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            file: None,
            height: None,
            mass: None,
            anthropometrics: None,
            joint_table: None,
            double_legs: true,
        }
    }
}

impl ModelConfig {
    fn is_default(&self) -> bool {
        *self == ModelConfig::default()
    }

    pub fn build(&self, base: &Path) -> Result<BodyModel> {
        if let Some(file) = &self.file {
            if self.height.is_some()
                || self.mass.is_some()
                || self.anthropometrics.is_some()
                || self.joint_table.is_some()
            {
                return Err(Error::Config(
                    "model.file cannot be combined with anthropometric fields".into(),
                ));
            }
            return load_model(base.join(file));
        }
        if self.is_default() {
            return Ok(BodyModel::default_model());
        }
        let table = match &self.anthropometrics {
            Some(p) => AnthropometricTable::load(base.join(p))?,
            None => AnthropometricTable::standard(),
        };
        let joints = match &self.joint_table {
            Some(p) => JointTable::load(base.join(p))?,
            None => JointTable::standard(),
        };
        let model = build_with_joint_table(
            self.height.unwrap_or(REFERENCE_HEIGHT),
            self.mass.unwrap_or(REFERENCE_MASS),
            &table,
            &joints,
        )?;
        if self.double_legs {
            double_leg_masses(&model)
        } else {
            Ok(model)
        }
    }
}

/// Target given either directly or through the virtual trunk-flexion posture.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetConfig {
    /// Trunk flexion of the virtual posture, deg.
    pub trunk_flexion: Option<f64>,
    /// World position, m.
    pub position: Option<[f64; 3]>,
}

/// One reaching simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: Option<String>,
    pub model: ModelConfig,
    pub preset: Preset,
    /// Explicit `joint.plane` list; overrides `preset`.
    pub active_dofs: Option<Vec<String>>,
    pub target: TargetConfig,
    /// Movement duration, s. Defaults by trunk flexion (15, 30, 60 deg).
    pub duration: Option<f64>,
    pub strategy: Strategy,
    pub lambda0: LambdaConfig,
    /// Diagonal of R for the power term, one per DoF (default identity).
    pub power_weights: Vec<f64>,
    /// Diagonal of R for the COM term.
    pub com_weights: [f64; 3],
    /// Joint-limit penalty weight, deg^-2.
    pub penalty_weight: f64,
    pub optimizer: OptimizerConfig,
    pub output_dir: Option<PathBuf>,
    /// Directory that relative model paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: None,
            model: ModelConfig::default(),
            preset: Preset::Full,
            active_dofs: None,
            target: TargetConfig::default(),
            duration: None,
            strategy: Strategy::MinError,
            lambda0: LambdaConfig::default(),
            power_weights: Vec::new(),
            com_weights: [1.0; 3],
            penalty_weight: DEFAULT_PENALTY_WEIGHT,
            optimizer: OptimizerConfig::default(),
            output_dir: None,
            base_dir: PathBuf::new(),
        }
    }
}

/// A configuration with every default filled in and the model built.
#[derive(Clone, Debug)]
pub struct ResolvedScenario {
    pub name: String,
    pub model: BodyModel,
    pub layout: ParamLayout,
    pub target: Vector3<f64>,
    pub trunk_flexion: Option<f64>,
    pub t_f: f64,
    pub strategy: Strategy,
    pub lambda0: LambdaConfig,
    pub power_weights: Vec<f64>,
    pub com_weights: [f64; 3],
    pub penalty_weight: f64,
    pub optimizer: OptimizerConfig,
}

impl ScenarioConfig {
    /// Convenience constructor for a trunk-flexion target.
    pub fn for_trunk_flexion(strategy: Strategy, trunk_flexion: f64, preset: Preset) -> Self {
        ScenarioConfig {
            strategy,
            preset,
            target: TargetConfig {
                trunk_flexion: Some(trunk_flexion),
                position: None,
            },
            ..Default::default()
        }
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_string(),
            line: e.span().map(|s| 1 + text[..s.start].matches('\n').count()),
            message: e.message().to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text, &path.display().to_string())?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn resolve(&self) -> Result<ResolvedScenario> {
        self.optimizer.validate()?;
        let model = self.model.build(&self.base_dir)?;
        let layout = match &self.active_dofs {
            Some(names) => ParamLayout::from_names(&model, names)?,
            None => self.preset.layout(&model)?,
        };
        let (target, trunk_flexion) = match (&self.target.trunk_flexion, &self.target.position) {
            (Some(f), None) => (place_target(&model, *f)?, Some(*f)),
            (None, Some(p)) => (Vector3::from(*p), None),
            _ => {
                return Err(Error::Config(
                    "target needs exactly one of trunk_flexion or position".into(),
                ))
            }
        };
        let t_f =
            match (self.duration, trunk_flexion.and_then(default_duration)) {
                (Some(t), _) => t,
                (None, Some(t)) => t,
                (None, None) => return Err(Error::Config(
                    "duration is required unless the target is a 15, 30 or 60 deg trunk flexion"
                        .into(),
                )),
            };
        if !(t_f.is_finite() && t_f > 0.0) {
            return Err(Error::Config(format!(
                "duration must be positive, got {t_f}"
            )));
        }
        if !(self.penalty_weight.is_finite() && self.penalty_weight >= 0.0) {
            return Err(Error::Config(format!(
                "penalty_weight must be non-negative, got {}",
                self.penalty_weight
            )));
        }
        if self.optimizer.error_tolerance != DEFAULT_TOLERANCE
            && self.optimizer.error_tolerance <= 0.0
        {
            return Err(Error::Config(
                "optimizer.error_tolerance must be positive".into(),
            ));
        }
        let name = self.name.clone().unwrap_or_else(|| match trunk_flexion {
            Some(f) => format!(
                "{}-{}",
                super::target_label(f)
                    .map(str::to_string)
                    .unwrap_or(format!("flex{f}")),
                self.strategy
            ),
            None => format!("custom-{}", self.strategy),
        });
        Ok(ResolvedScenario {
            name,
            model,
            layout,
            target,
            trunk_flexion,
            t_f,
            strategy: self.strategy,
            lambda0: self.lambda0.clone(),
            power_weights: self.power_weights.clone(),
            com_weights: self.com_weights,
            penalty_weight: self.penalty_weight,
            optimizer: self.optimizer.clone(),
        })
    }
}
