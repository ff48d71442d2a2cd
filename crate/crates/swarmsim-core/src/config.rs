//! Scenario configuration: a flat `key = value` text format with `#`
//! comments, mirroring the config struct field names. No nesting, no
//! environment variables; every run is fully described by its file plus
//! explicit CLI overrides.

use crate::controller::{ControllerConfig, Mode};
use crate::world::WorldConfig;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {0}: {1}")]
    Malformed(usize, String),
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("bad value for '{0}': {1}")]
    BadValue(String, String),
    #[error("{0}")]
    Invalid(String),
    #[error("io error reading {0}: {1}")]
    Io(PathBuf, std::io::Error),
}

/// Initial placement strategy for the non-seed swarm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    Aggregate,
    Random,
}

/// Everything a single run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub shape_file: PathBuf,
    pub robot_count: usize,
    pub mode: Mode,
    pub placement: Placement,
    pub cell_size: f64,
    pub world: WorldConfig,
    pub d_desired: f64,
    pub hysteresis: f64,
    pub cooldown: u64,
    pub quiescence_window: u64,
    pub stability_threshold: u64,
    pub orbit_mirrored: bool,
    pub max_ticks: u64,
    pub trace_stride: u64,
    pub output_dir: PathBuf,
    pub completion_threshold: f64,
    pub override_holes: bool,
    pub arena_width: f64,
    pub arena_height: f64,
    /// Optional explicit initial poses (fixture placement), one
    /// `id,x,y,heading` per line; overrides `placement`.
    pub poses_file: Option<PathBuf>,
    pub dump_messages: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let world = WorldConfig::default();
        let controller = ControllerConfig::defaults_for(world.robot_diameter);
        ScenarioConfig {
            shape_file: PathBuf::from("shape.txt"),
            robot_count: 30,
            mode: Mode::Baseline,
            placement: Placement::Aggregate,
            cell_size: world.robot_diameter,
            d_desired: controller.d_desired,
            hysteresis: controller.hysteresis,
            cooldown: controller.cooldown,
            quiescence_window: controller.quiescence_window,
            stability_threshold: controller.stability_threshold,
            orbit_mirrored: false,
            world,
            max_ticks: 100_000,
            trace_stride: 100,
            output_dir: PathBuf::from("out"),
            completion_threshold: 0.95,
            override_holes: false,
            arena_width: 1.0,
            arena_height: 1.0,
            poses_file: None,
            dump_messages: false,
        }
    }
}

impl ScenarioConfig {
    pub fn controller_config(&self) -> ControllerConfig {
        ControllerConfig {
            d_desired: self.d_desired,
            hysteresis: self.hysteresis,
            cooldown: self.cooldown,
            quiescence_window: self.quiescence_window,
            stability_threshold: self.stability_threshold,
            robot_diameter: self.world.robot_diameter,
            gradient_range: self.world.gradient_range,
            orbit_mirrored: self.orbit_mirrored,
        }
    }

    /// Effective packing pitch: the center-to-center spacing the controller
    /// maintains, which defines the robot's exclusion footprint for
    /// capacity and surplus accounting.
    pub fn packing_pitch(&self) -> f64 {
        self.world.robot_diameter + self.d_desired
    }

    pub fn from_file(path: &Path) -> Result<ScenarioConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(path.to_path_buf(), e))?;
        let mut config = Self::from_text(&text)?;
        // Relative paths resolve against the config file's directory.
        if let Some(dir) = path.parent() {
            if config.shape_file.is_relative() {
                config.shape_file = dir.join(&config.shape_file);
            }
            if let Some(pf) = &config.poses_file {
                if pf.is_relative() {
                    config.poses_file = Some(dir.join(pf));
                }
            }
        }
        Ok(config)
    }

    pub fn from_text(text: &str) -> Result<ScenarioConfig, ConfigError> {
        let mut config = ScenarioConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError::Malformed(idx + 1, format!("expected 'key = value', got '{line}'"))
            })?;
            config.set(key.trim(), value.trim())?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Apply one `key = value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
            value
                .parse::<T>()
                .map_err(|_| ConfigError::BadValue(key.into(), value.into()))
        }
        fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
            match value {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(ConfigError::BadValue(key.into(), value.into())),
            }
        }
        match key {
            "shape_file" => self.shape_file = PathBuf::from(value),
            "robot_count" => self.robot_count = parse(key, value)?,
            "mode" => {
                self.mode = match value {
                    "baseline" => Mode::Baseline,
                    "extended" => Mode::Extended,
                    _ => return Err(ConfigError::BadValue(key.into(), value.into())),
                }
            }
            "placement" => {
                self.placement = match value {
                    "aggregate" => Placement::Aggregate,
                    "random" => Placement::Random,
                    _ => return Err(ConfigError::BadValue(key.into(), value.into())),
                }
            }
            "cell_size" => self.cell_size = parse(key, value)?,
            "comm_radius" => self.world.comm_radius = parse(key, value)?,
            "gradient_range" => self.world.gradient_range = parse(key, value)?,
            "message_loss_prob" => self.world.message_loss_prob = parse(key, value)?,
            "speed" => self.world.speed = parse(key, value)?,
            "turn_rate" => self.world.turn_rate = parse(key, value)?,
            "motion_noise_xy_std" => self.world.motion_noise_xy_std = parse(key, value)?,
            "motion_noise_heading_std" => {
                self.world.motion_noise_heading_std = parse(key, value)?
            }
            "sensor_noise_std" => self.world.sensor_noise_std = parse(key, value)?,
            "tick_duration" => self.world.tick_duration = parse(key, value)?,
            "robot_diameter" => self.world.robot_diameter = parse(key, value)?,
            "rng_seed" => self.world.rng_seed = parse(key, value)?,
            "collision_tolerance" => self.world.collision_tolerance = parse(key, value)?,
            "collision_max_iters" => self.world.collision_max_iters = parse(key, value)?,
            "d_desired" => self.d_desired = parse(key, value)?,
            "hysteresis" => self.hysteresis = parse(key, value)?,
            "cooldown" => self.cooldown = parse(key, value)?,
            "quiescence_window" => self.quiescence_window = parse(key, value)?,
            "stability_threshold" => self.stability_threshold = parse(key, value)?,
            "orbit_mirrored" => self.orbit_mirrored = parse_bool(key, value)?,
            "max_ticks" => self.max_ticks = parse(key, value)?,
            "trace_stride" => self.trace_stride = parse(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "completion_threshold" => self.completion_threshold = parse(key, value)?,
            "override_holes" => self.override_holes = parse_bool(key, value)?,
            "arena_width" => self.arena_width = parse(key, value)?,
            "arena_height" => self.arena_height = parse(key, value)?,
            "poses_file" => self.poses_file = Some(PathBuf::from(value)),
            "dump_messages" => self.dump_messages = parse_bool(key, value)?,
            other => return Err(ConfigError::UnknownKey(other.into())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.robot_count < 1 {
            return Err(ConfigError::Invalid("robot_count must be >= 1".into()));
        }
        if self.max_ticks < 1 {
            return Err(ConfigError::Invalid("max_ticks must be >= 1".into()));
        }
        if self.trace_stride < 1 {
            return Err(ConfigError::Invalid("trace_stride must be >= 1".into()));
        }
        if self.cell_size <= 0.0 {
            return Err(ConfigError::Invalid("cell_size must be > 0".into()));
        }
        if self.d_desired < 0.0 || self.hysteresis < 0.0 {
            return Err(ConfigError::Invalid(
                "d_desired and hysteresis must be >= 0".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.completion_threshold) {
            return Err(ConfigError::Invalid(
                "completion_threshold must be in [0, 1]".into(),
            ));
        }
        self.world.validate().map_err(ConfigError::Invalid)
    }

    /// Serialize back to the flat text format (stable key order).
    pub fn to_text(&self) -> String {
        let mut kv: BTreeMap<&str, String> = BTreeMap::new();
        kv.insert("shape_file", self.shape_file.display().to_string());
        kv.insert("robot_count", self.robot_count.to_string());
        kv.insert(
            "mode",
            match self.mode {
                Mode::Baseline => "baseline".into(),
                Mode::Extended => "extended".into(),
            },
        );
        kv.insert(
            "placement",
            match self.placement {
                Placement::Aggregate => "aggregate".into(),
                Placement::Random => "random".into(),
            },
        );
        kv.insert("cell_size", format!("{}", self.cell_size));
        kv.insert("comm_radius", format!("{}", self.world.comm_radius));
        kv.insert("gradient_range", format!("{}", self.world.gradient_range));
        kv.insert(
            "message_loss_prob",
            format!("{}", self.world.message_loss_prob),
        );
        kv.insert("speed", format!("{}", self.world.speed));
        kv.insert("turn_rate", format!("{}", self.world.turn_rate));
        kv.insert(
            "motion_noise_xy_std",
            format!("{}", self.world.motion_noise_xy_std),
        );
        kv.insert(
            "motion_noise_heading_std",
            format!("{}", self.world.motion_noise_heading_std),
        );
        kv.insert("sensor_noise_std", format!("{}", self.world.sensor_noise_std));
        kv.insert("tick_duration", format!("{}", self.world.tick_duration));
        kv.insert("robot_diameter", format!("{}", self.world.robot_diameter));
        kv.insert("rng_seed", self.world.rng_seed.to_string());
        kv.insert(
            "collision_tolerance",
            format!("{}", self.world.collision_tolerance),
        );
        kv.insert(
            "collision_max_iters",
            self.world.collision_max_iters.to_string(),
        );
        kv.insert("d_desired", format!("{}", self.d_desired));
        kv.insert("hysteresis", format!("{}", self.hysteresis));
        kv.insert("cooldown", self.cooldown.to_string());
        kv.insert("quiescence_window", self.quiescence_window.to_string());
        kv.insert("stability_threshold", self.stability_threshold.to_string());
        kv.insert("orbit_mirrored", self.orbit_mirrored.to_string());
        kv.insert("max_ticks", self.max_ticks.to_string());
        kv.insert("trace_stride", self.trace_stride.to_string());
        kv.insert("output_dir", self.output_dir.display().to_string());
        kv.insert(
            "completion_threshold",
            format!("{}", self.completion_threshold),
        );
        kv.insert("override_holes", self.override_holes.to_string());
        kv.insert("arena_width", format!("{}", self.arena_width));
        kv.insert("arena_height", format!("{}", self.arena_height));
        if let Some(pf) = &self.poses_file {
            kv.insert("poses_file", pf.display().to_string());
        }
        kv.insert("dump_messages", self.dump_messages.to_string());
        let mut out = String::new();
        for (k, v) in kv {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}
