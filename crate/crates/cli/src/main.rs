//! `tag`: batch front end for the tendon-actuated galvanometer toolkit.
//!
//! Angles are given and printed in degrees, lengths in millimetres.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use tag_core::{ConfigFile, ErrorClass, HomogeneousTransform, ModelConfig, TagError};

#[derive(Debug, Parser)]
#[command(
    name = "tag",
    version,
    about = "Tendon-actuated galvanometer model and experiment runner"
)]
struct Cli {
    #[command(flatten)]
    model: ModelArgs,
    #[command(subcommand)]
    command: Command,
}

/// Model overrides; any value given here beats the config file.
#[derive(Debug, Args)]
struct ModelArgs {
    /// TOML key-value file with model parameters.
    #[arg(long, global = true, env = "TAG_CONFIG")]
    config: Option<PathBuf>,
    /// Pivot to tendon attachment distance l (mm).
    #[arg(long, global = true, value_name = "MM")]
    fulcrum_length: Option<f64>,
    /// Return spring stiffness K_s (N/mm).
    #[arg(long, global = true, value_name = "N_PER_MM")]
    spring_constant: Option<f64>,
    /// Tendon length L (mm).
    #[arg(long, global = true, value_name = "MM")]
    wire_length: Option<f64>,
    /// Tendon Young's modulus E (GPa).
    #[arg(long, global = true, value_name = "GPA")]
    wire_modulus: Option<f64>,
    /// Tendon radius r (mm).
    #[arg(long, global = true, value_name = "MM")]
    wire_radius: Option<f64>,
    #[arg(long, global = true, value_name = "MM")]
    max_stroke: Option<f64>,
    /// Mirror to laser source offset along the beam (mm).
    #[arg(long, global = true, value_name = "MM", allow_hyphen_values = true)]
    v1: Option<f64>,
    /// Mirror to target surface distance (mm).
    #[arg(long, global = true, value_name = "MM")]
    v2: Option<f64>,
    /// File with 16 row-major numbers: joint tip to robot base.
    #[arg(long, global = true, value_name = "FILE")]
    base_transform: Option<PathBuf>,
}

impl ModelArgs {
    fn file_layer(&self) -> Result<ConfigFile, TagError> {
        match &self.config {
            Some(p) => ConfigFile::load(p),
            None => Ok(ConfigFile::default()),
        }
    }

    fn flag_layer(&self) -> Result<ConfigFile, TagError> {
        let base_transform = match &self.base_transform {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| TagError::Io {
                    path: p.clone(),
                    source: e,
                })?;
                let t = HomogeneousTransform::parse_row_major(&text)?;
                Some(t.matrix().transpose().iter().copied().collect())
            }
            None => None,
        };
        Ok(ConfigFile {
            fulcrum_length_mm: self.fulcrum_length,
            spring_constant_n_per_mm: self.spring_constant,
            wire_length_mm: self.wire_length,
            wire_modulus_gpa: self.wire_modulus,
            wire_radius_mm: self.wire_radius,
            max_stroke_mm: self.max_stroke,
            v1_mm: self.v1,
            v2_mm: self.v2,
            base_transform,
            ..ConfigFile::default()
        })
    }

    fn resolve(&self) -> Result<ModelConfig, TagError> {
        self.file_layer()?.overlay(self.flag_layer()?).resolve()
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Stroke or mirror angle to beam deflection and spot position.
    #[command(group(ArgGroup::new("input").required(true)))]
    Fk {
        /// Tendon stroke (mm).
        #[arg(long, group = "input", allow_hyphen_values = true)]
        stroke: Option<f64>,
        /// Mirror rotation (deg).
        #[arg(long, group = "input", allow_hyphen_values = true)]
        phi: Option<f64>,
        /// Motor revolutions, converted through the lead screw.
        #[arg(long, group = "input", allow_hyphen_values = true)]
        revs: Option<f64>,
    },
    /// Spot displacement to mirror rotation and stroke.
    Ik {
        /// Spot displacement on the target (mm).
        #[arg(long, allow_hyphen_values = true)]
        dx: f64,
    },
    /// Stroke sweep with synthetic frames, or replay of measured angles.
    Sweep(commands::SweepArgs),
    /// Laser steering trials, or replay of measured displacements.
    Steer(commands::SteerArgs),
    /// Fit fulcrum length and elongation coefficient to sweep data.
    Calibrate(commands::CalibrateArgs),
    /// Measure the holder angle in a PGM image or a directory of them.
    EstimateAngle(commands::EstimateArgs),
    /// Draw a synthetic holder frame as PGM.
    Render(commands::RenderArgs),
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Tag(TagError),
}

impl From<TagError> for CliError {
    fn from(e: TagError) -> Self {
        CliError::Tag(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Tag(e) => match e.class() {
                ErrorClass::Usage => 2,
                ErrorClass::Domain => 3,
                ErrorClass::Io => 4,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Tag(e) => write!(f, "{e}"),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let model = cli.model.resolve()?;
    let config = cli.model.config.as_deref();
    match cli.command {
        Command::Fk { stroke, phi, revs } => commands::fk(&model, stroke, phi, revs),
        Command::Ik { dx } => commands::ik(&model, dx),
        Command::Sweep(a) => commands::sweep(&model, config, &a),
        Command::Steer(a) => commands::steer(&model, config, &a),
        Command::Calibrate(a) => commands::calibrate(&model, config, &a),
        Command::EstimateAngle(a) => commands::estimate_angle(&model, config, &a),
        Command::Render(a) => commands::render(&model, config, &a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
