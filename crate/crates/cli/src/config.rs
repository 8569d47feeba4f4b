//! Scenario configuration: a versioned JSON document checked against the
//! bundled schema, then converted into library types.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use lrmr_sar::forward::{
    AmplitudeMode, CorrelationMode, ForwardModel, PowerIteration, Representation, SamplingGrid,
    Spectrum, TransmitterPhase,
};
use lrmr_sar::io::ContentHash;
use lrmr_sar::scene::{
    phantom_with_levels, ReflectivityImage, SceneGrid, Topography, Trajectory, TransmitterModel,
    Vec3, DEFAULT_PHANTOM_LEVELS,
};
use lrmr_sar::solver::{SolverConfig, StepRule};
use lrmr_sar::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

/// JSON schema every scenario file must satisfy.
pub const SCHEMA: &str = include_str!("../schema/scenario.schema.json");

/// Reference scenario: 11×11 scene, two offset circular arcs, 2 GHz cross.
pub const REFERENCE_CONFIG: &str = include_str!("../../../configs/reference.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    pub scene: SceneConfig,
    pub geometry: GeometryConfig,
    pub waveform: WaveformConfig,
    pub sampling: SamplingConfig,
    pub mode: CorrelationMode,
    #[serde(default)]
    pub amplitude: AmplitudeMode,
    #[serde(default)]
    pub transmitter_phase: TransmitterPhase,
    /// Standard deviation of complex Gaussian noise added to the data.
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub analysis: AnalysisBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub pixels_per_side: usize,
    pub pixel_spacing_m: f64,
    #[serde(default)]
    pub origin_offset_m: [f64; 2],
    #[serde(default)]
    pub ground_height_m: f64,
    #[serde(default)]
    pub phantom: PhantomConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhantomConfig {
    /// Built-in target with three reflectivity levels.
    Default {
        #[serde(default = "default_levels")]
        levels: [f64; 3],
    },
    /// `re,im` CSV in row-major pixel order, relative to the config file.
    Csv { path: PathBuf },
}

fn default_levels() -> [f64; 3] {
    DEFAULT_PHANTOM_LEVELS
}

impl Default for PhantomConfig {
    fn default() -> Self {
        PhantomConfig::Default {
            levels: DEFAULT_PHANTOM_LEVELS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// One trajectory for auto mode, two for cross mode (auto ignores the second).
    pub receivers: Vec<TrajectoryConfig>,
    pub transmitter_position_m: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrajectoryConfig {
    CircularArc {
        radius_m: f64,
        altitude_m: f64,
        interval_rad: [f64; 2],
        #[serde(default)]
        offset_rad: f64,
    },
    Linear {
        start_m: [f64; 3],
        end_m: [f64; 3],
        interval: [f64; 2],
    },
    Waypoints {
        params: Vec<f64>,
        points_m: Vec<[f64; 3]>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumConfig {
    #[default]
    Flat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformConfig {
    pub center_frequency_hz: f64,
    pub bandwidth_hz: f64,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub num_frequencies: usize,
    pub num_slow_times: usize,
    /// Slow-time interval in the trajectory's parameter (radians for arcs).
    pub aperture_interval: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepresentationConfig {
    #[default]
    MatrixFree,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverBlock {
    pub lambda: f64,
    pub step_rule: StepRule,
    pub max_iterations: usize,
    pub data_tolerance: f64,
    pub rank_threshold: f64,
    pub log_stride: usize,
    pub divergence_window: usize,
    pub divergence_factor: f64,
    pub power_iteration_tolerance: f64,
    pub power_iteration_max_iterations: usize,
    pub representation: RepresentationConfig,
}

impl Default for SolverBlock {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            lambda: d.lambda,
            step_rule: d.step_rule,
            max_iterations: d.max_iterations,
            data_tolerance: d.data_tolerance,
            rank_threshold: d.rank_threshold,
            log_stride: d.log_stride,
            divergence_window: d.divergence_window,
            divergence_factor: d.divergence_factor,
            power_iteration_tolerance: d.power_iteration.tolerance,
            power_iteration_max_iterations: d.power_iteration.max_iterations,
            representation: RepresentationConfig::MatrixFree,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisBlock {
    /// Pass threshold for pixel spacing over the resolution bound.
    pub resolution_margin: f64,
    /// Extra center frequencies at which `analyze bound` evaluates the bound.
    pub bound_frequencies_hz: Vec<f64>,
    /// Receiver trajectories are scaled by this factor for kernel estimates.
    pub kernel_receiver_scale: f64,
    pub kernel_amplitude: AmplitudeMode,
    pub kernel_num_frequencies: usize,
    pub kernel_num_slow_times: usize,
    pub num_quads: usize,
    pub ric_ranks: Vec<usize>,
    pub ric_samples: usize,
}

impl Default for AnalysisBlock {
    fn default() -> Self {
        Self {
            resolution_margin: 5.0,
            bound_frequencies_hz: vec![760e6, 2e9],
            kernel_receiver_scale: 10.0,
            kernel_amplitude: AmplitudeMode::GeometricSpreading,
            kernel_num_frequencies: 48,
            kernel_num_slow_times: 40_000,
            num_quads: 500,
            ric_ranks: vec![1],
            ric_samples: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub directory: PathBuf,
    pub write_images: bool,
    pub write_data: bool,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("output"),
            write_images: true,
            write_data: true,
        }
    }
}

fn config_error(pointer: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        pointer: pointer.into(),
        message: message.into(),
    }
}

fn schema_validator() -> Result<jsonschema::Validator> {
    let schema: Value = serde_json::from_str(SCHEMA)?;
    jsonschema::validator_for(&schema)
        .map_err(|e| Error::InvalidConfig(format!("bundled schema is invalid: {e}")))
}

/// Schema violations, each as `(JSON pointer, message)`.
pub fn schema_errors(doc: &Value) -> Result<Vec<(String, String)>> {
    let validator = schema_validator()?;
    Ok(validator
        .iter_errors(doc)
        .map(|e| {
            let ptr = e.instance_path().to_string();
            (
                if ptr.is_empty() { "/".to_string() } else { ptr },
                e.to_string(),
            )
        })
        .collect())
}

impl ScenarioConfig {
    /// Parses, schema-checks and semantically validates a JSON document.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text)?;
        Self::from_value(doc)
    }

    pub fn from_value(doc: Value) -> Result<Self> {
        if let Some((pointer, message)) = schema_errors(&doc)?.into_iter().next() {
            return Err(config_error(pointer, message));
        }
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(doc).map_err(|e| {
            let pointer = path_to_pointer(&e.path().to_string());
            config_error(pointer, e.inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; a CSV phantom path is resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_json_str(&text)?;
        if let PhantomConfig::Csv { path: p } = &mut cfg.scene.phantom {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn reference() -> Self {
        Self::from_json_str(REFERENCE_CONFIG).expect("bundled reference config is valid")
    }

    /// Checks that the schema cannot express.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(config_error(
                "/schema_version",
                format!(
                    "unsupported version {} (expected {SCHEMA_VERSION})",
                    self.schema_version
                ),
            ));
        }
        let w = &self.waveform;
        if w.center_frequency_hz <= w.bandwidth_hz / 2.0 {
            return Err(config_error(
                "/waveform/center_frequency_hz",
                "center frequency must exceed half the bandwidth",
            ));
        }
        let [a, b] = self.sampling.aperture_interval;
        if !(a < b) {
            return Err(config_error(
                "/sampling/aperture_interval",
                "interval must be increasing",
            ));
        }
        let needed = match self.mode {
            CorrelationMode::Cross => 2,
            CorrelationMode::Auto => 1,
        };
        if self.geometry.receivers.len() < needed {
            return Err(config_error(
                "/geometry/receivers",
                format!("{} mode needs {needed} receiver trajectories", self.mode),
            ));
        }
        for (i, r) in self.geometry.receivers.iter().enumerate() {
            r.build()
                .map_err(|e| config_error(format!("/geometry/receivers/{i}"), e.to_string()))?;
        }
        self.forward_model()
            .map_err(|e| config_error("/geometry", e.to_string()))?;
        self.solver_config()?
            .validate()
            .map_err(|e| config_error("/solver", e.to_string()))?;
        if self.noise_std < 0.0 {
            return Err(config_error("/noise_std", "must be non-negative"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, excluding the output block so that
    /// the same scenario hashes identically wherever it is written.
    pub fn hash(&self) -> ContentHash {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(map) = &mut v {
            map.remove("output");
        }
        ContentHash::of(&serde_json::to_vec(&v).expect("value serializes"))
    }

    pub fn with_mode(mut self, mode: CorrelationMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_center_frequency_hz(mut self, fc: f64) -> Self {
        self.waveform.center_frequency_hz = fc;
        self
    }

    pub fn scene_grid(&self) -> Result<SceneGrid> {
        let s = &self.scene;
        SceneGrid::new(
            s.pixels_per_side,
            s.pixel_spacing_m,
            s.origin_offset_m,
            Topography::Flat {
                height: s.ground_height_m,
            },
        )
    }

    pub fn sampling_grid(&self) -> Result<SamplingGrid> {
        SamplingGrid::new(
            2.0 * PI * self.waveform.center_frequency_hz,
            2.0 * PI * self.waveform.bandwidth_hz,
            self.sampling.num_frequencies,
            self.sampling.aperture_interval,
            self.sampling.num_slow_times,
        )
    }

    pub fn forward_model(&self) -> Result<ForwardModel> {
        let r = &self.geometry.receivers;
        let first = r[0].build()?;
        let second = match r.get(1) {
            Some(t) => t.build()?,
            None => first.clone(),
        };
        let model = ForwardModel {
            scene: self.scene_grid()?,
            receivers: [first, second],
            transmitter: TransmitterModel::new(Vec3::from(self.geometry.transmitter_position_m))?,
            sampling: self.sampling_grid()?,
            mode: self.mode,
            amplitude: self.amplitude,
            spectrum: match self.waveform.spectrum {
                SpectrumConfig::Flat => Spectrum::Flat,
            },
        };
        model.validate()?;
        Ok(model)
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let s = &self.solver;
        Ok(SolverConfig {
            lambda: s.lambda,
            step_rule: s.step_rule,
            max_iterations: s.max_iterations,
            data_tolerance: s.data_tolerance,
            rank_threshold: s.rank_threshold,
            log_stride: s.log_stride,
            divergence_window: s.divergence_window,
            divergence_factor: s.divergence_factor,
            power_iteration: PowerIteration {
                tolerance: s.power_iteration_tolerance,
                max_iterations: s.power_iteration_max_iterations,
                seed: self.seed,
            },
        })
    }

    pub fn representation(&self) -> Representation {
        match self.solver.representation {
            RepresentationConfig::MatrixFree => Representation::MatrixFree,
            RepresentationConfig::Explicit => Representation::Explicit,
        }
    }

    pub fn phantom(&self) -> Result<ReflectivityImage> {
        let grid = self.scene_grid()?;
        match &self.scene.phantom {
            PhantomConfig::Default { levels } => phantom_with_levels(&grid, *levels),
            PhantomConfig::Csv { path } => {
                let file = std::fs::File::open(path)?;
                let values = lrmr_sar::io::read_complex_csv(std::io::BufReader::new(file))?;
                ReflectivityImage::new(grid, values)
            }
        }
    }
}

impl TrajectoryConfig {
    pub fn build(&self) -> Result<Trajectory> {
        match self {
            TrajectoryConfig::CircularArc {
                radius_m,
                altitude_m,
                interval_rad,
                offset_rad,
            } => Trajectory::circular(*radius_m, *altitude_m, *interval_rad, *offset_rad),
            TrajectoryConfig::Linear {
                start_m,
                end_m,
                interval,
            } => Trajectory::linear(Vec3::from(*start_m), Vec3::from(*end_m), *interval),
            TrajectoryConfig::Waypoints { params, points_m } => Trajectory::waypoints(
                params.clone(),
                points_m.iter().map(|p| Vec3::from(*p)).collect(),
            ),
        }
    }
}

// serde_path_to_error renders `a.b[2].c`; JSON pointers want `/a/b/2/c`.
fn path_to_pointer(path: &str) -> String {
    if path == "." || path.is_empty() {
        return "/".into();
    }
    let mut out = String::new();
    for seg in path.split('.') {
        let mut rest = seg;
        if let Some(i) = rest.find('[') {
            out.push('/');
            out.push_str(&rest[..i]);
            rest = &rest[i..];
            while let Some(end) = rest.find(']') {
                out.push('/');
                out.push_str(&rest[1..end]);
                rest = &rest[end + 1..];
            }
        } else {
            out.push('/');
            out.push_str(rest);
        }
    }
    out
}
