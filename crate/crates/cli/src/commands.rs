use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::Args;
use tag_core::experiments::{
    calibrate as fit_model, calibration_csv, read_steering_replay, read_sweep_replay,
    run_laser_steering, run_stroke_sweep, steering_csv, steering_from_measurements, steering_rmse,
    steering_summary_csv, summarize_sweep, sweep_csv, sweep_from_measurements, sweep_rmse,
    write_atomic, CalibrationConfig, SteeringConfig, SweepConfig, SweepRecord,
};
use tag_core::image::{
    estimate_angle_detailed, render_synthetic_tag, write_edges_csv, CannyConfig, CropRect,
    GrayImage, PipelineConfig, RenderParams, BINARY_THRESHOLD,
};
use tag_core::kinematics::{
    delta_x, ik_phi_from_delta_x, ik_stroke_from_delta_x, laser_point, mirror_state,
    reflection_angle, stroke_from_phi, Frame,
};
use tag_core::{ModelConfig, TagError};

use crate::manifest::RunManifest;
use crate::CliError;

type CmdResult = Result<(), CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn create_dir(dir: &Path) -> Result<(), TagError> {
    std::fs::create_dir_all(dir).map_err(|e| TagError::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn open(path: &Path) -> Result<BufReader<File>, TagError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| TagError::Io {
            path: path.to_path_buf(),
            source: e,
        })
}

fn write_output(
    dir: &Path,
    name: &str,
    text: &str,
    manifest: &mut RunManifest,
) -> Result<(), TagError> {
    write_atomic(&dir.join(name), text.as_bytes())?;
    manifest.outputs.push(name.to_string());
    Ok(())
}

pub fn fk(
    model: &ModelConfig,
    stroke: Option<f64>,
    phi: Option<f64>,
    revs: Option<f64>,
) -> CmdResult {
    let p = &model.tag;
    let (stroke, phi) = match (stroke, phi, revs) {
        (Some(s), _, _) => (s, mirror_state(s, p)?.phi_rad),
        (_, _, Some(r)) => {
            let s = model.actuator.stroke_from_motor(r);
            (s, mirror_state(s, p)?.phi_rad)
        }
        (_, Some(deg), _) => {
            let phi = deg.to_radians();
            (stroke_from_phi(phi, p)?, phi)
        }
        _ => return Err(usage("one of --stroke, --phi, --revs is required")),
    };
    let theta1 = reflection_angle(phi)?;
    let dx = delta_x(phi, &model.geometry)?;
    let tip = laser_point(phi, &model.geometry, Frame::Tip)?.position_mm;
    let base = laser_point(phi, &model.geometry, Frame::Base)?.position_mm;
    println!("stroke       {stroke:.6} mm");
    if stroke > p.max_stroke_mm {
        println!("             (beyond max stroke {} mm)", p.max_stroke_mm);
    }
    println!("phi          {:.6} deg", phi.to_degrees());
    println!(
        "incident     {:.6} deg",
        p.rest_incident_deg + phi.to_degrees()
    );
    println!("theta1       {:.6} deg", theta1.to_degrees());
    println!("delta_x      {dx:.6} mm");
    println!("spot_tip     {:.6} {:.6} {:.6} mm", tip.x, tip.y, tip.z);
    println!("spot_base    {:.6} {:.6} {:.6} mm", base.x, base.y, base.z);
    Ok(())
}

pub fn ik(model: &ModelConfig, dx: f64) -> CmdResult {
    if dx.is_nan() || dx < 0.0 {
        return Err(usage(format!("--dx must be >= 0, got {dx}")));
    }
    let phi = ik_phi_from_delta_x(dx, &model.geometry)?;
    let stroke = ik_stroke_from_delta_x(dx, &model.geometry, &model.tag)?;
    println!("phi          {:.6} deg", phi.to_degrees());
    println!("stroke       {stroke:.6} mm");
    println!(
        "motor        {:.6} rev",
        model.actuator.motor_from_stroke(stroke)
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    /// Stroke increment (mm).
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    /// Sweep end, exclusive (mm).
    #[arg(long, default_value_t = 2.0)]
    max: f64,
    /// Gaussian intensity noise on each synthetic frame.
    #[arg(long, default_value_t = 5.0)]
    image_noise: f64,
    /// Random deviation of the true holder angle from the model (deg).
    #[arg(long, default_value_t = 0.0)]
    angle_jitter: f64,
    /// Fill only the model columns.
    #[arg(long)]
    no_images: bool,
    /// Sweep CSV with measured angles instead of synthetic frames.
    #[arg(long, value_name = "CSV", conflicts_with_all = ["no_images", "trials", "step", "max"])]
    replay: Option<PathBuf>,
}

impl SweepArgs {
    fn config(&self) -> SweepConfig {
        SweepConfig {
            step_mm: self.step,
            max_mm: self.max,
            trials: self.trials,
            seed: self.seed,
            synthetic_images: !self.no_images,
            angle_jitter_deg: self.angle_jitter,
            image_noise_sigma: self.image_noise,
            ..SweepConfig::default()
        }
    }
}

fn sweep_records(model: &ModelConfig, a: &SweepArgs) -> Result<Vec<SweepRecord>, TagError> {
    match &a.replay {
        Some(path) => Ok(sweep_from_measurements(
            &model.tag,
            &read_sweep_replay(open(path)?)?,
        )),
        None => run_stroke_sweep(&model.tag, &a.config()),
    }
}

pub fn sweep(model: &ModelConfig, config: Option<&Path>, a: &SweepArgs) -> CmdResult {
    let records = sweep_records(model, a)?;
    create_dir(&a.out_dir)?;
    let mut manifest = RunManifest::new("sweep", config, Some(a.seed), &a.out_dir, model);
    write_output(
        &a.out_dir,
        "sweep.csv",
        &sweep_csv(&records)?,
        &mut manifest,
    )?;
    manifest.write(&a.out_dir)?;

    for r in records.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "warning: trial {} at {:.3} mm: {}",
            r.trial_id,
            r.stroke_mm,
            r.error.as_deref().unwrap_or_default()
        );
    }
    let summary = summarize_sweep(&records);
    println!("{} records, {} strokes", records.len(), summary.len());
    if summary
        .iter()
        .any(|s| s.mean_estimated_dtheta_deg.is_some())
    {
        println!("rmse         {:.6} deg", sweep_rmse(&records)?);
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct SteerArgs {
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    /// Commanded mirror rotations (deg).
    #[arg(long, value_delimiter = ',', default_values_t = [10.0, 20.0, 30.0])]
    angles: Vec<f64>,
    /// Spot measurement noise (mm).
    #[arg(long, default_value_t = 0.3)]
    noise: f64,
    /// Steering CSV with measured displacements.
    #[arg(long, value_name = "CSV", conflicts_with_all = ["trials", "angles", "noise"])]
    replay: Option<PathBuf>,
}

pub fn steer(model: &ModelConfig, config: Option<&Path>, a: &SteerArgs) -> CmdResult {
    let records = match &a.replay {
        Some(path) => {
            steering_from_measurements(&model.geometry, &read_steering_replay(open(path)?)?)?
        }
        None => run_laser_steering(
            &model.geometry,
            &SteeringConfig {
                angles_deg: a.angles.clone(),
                trials: a.trials,
                noise_sigma_mm: a.noise,
                seed: a.seed,
            },
        )?,
    };
    create_dir(&a.out_dir)?;
    let mut manifest = RunManifest::new("steer", config, Some(a.seed), &a.out_dir, model);
    write_output(
        &a.out_dir,
        "steering.csv",
        &steering_csv(&records)?,
        &mut manifest,
    )?;
    write_output(
        &a.out_dir,
        "steering_summary.csv",
        &steering_summary_csv(&records)?,
        &mut manifest,
    )?;
    manifest.write(&a.out_dir)?;

    println!("phi_deg  theoretical_mm  mean_mm  std_mm  error_pct");
    for r in &records {
        println!(
            "{:7.2}  {:14.4}  {:7.4}  {:6.4}  {:+9.3}",
            r.phi_deg, r.theoretical_dx_mm, r.mean_dx_mm, r.std_dx_mm, r.percent_error
        );
    }
    println!("rmse         {:.6} mm", steering_rmse(&records)?);
    Ok(())
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Sweep CSV to fit; every row with an estimate is one sample. Without
    /// it a synthetic sweep is generated from the current model.
    #[arg(long, value_name = "CSV")]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trials in the synthetic sweep.
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value_t = 5.0)]
    image_noise: f64,
    /// Starting fulcrum length (mm); defaults to the model value.
    #[arg(long, value_name = "MM")]
    init_l: Option<f64>,
    #[arg(long, default_value_t = 100)]
    max_iterations: usize,
}

pub fn calibrate(model: &ModelConfig, config: Option<&Path>, a: &CalibrateArgs) -> CmdResult {
    let records = match &a.input {
        Some(path) => sweep_from_measurements(&model.tag, &read_sweep_replay(open(path)?)?),
        None => run_stroke_sweep(
            &model.tag,
            &SweepConfig {
                trials: a.trials,
                seed: a.seed,
                image_noise_sigma: a.image_noise,
                ..SweepConfig::default()
            },
        )?,
    };
    let samples: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| r.estimated_dtheta_deg.map(|e| (r.stroke_mm, e)))
        .collect();
    let mut init = model.tag;
    if let Some(l) = a.init_l {
        init.fulcrum_length_mm = l;
    }
    let cfg = CalibrationConfig {
        max_iterations: a.max_iterations,
        ..CalibrationConfig::default()
    };
    let result = fit_model(&samples, &init, &cfg)?;

    create_dir(&a.out_dir)?;
    let mut manifest = RunManifest::new("calibrate", config, Some(a.seed), &a.out_dir, model);
    write_output(
        &a.out_dir,
        "calibration.csv",
        &calibration_csv(&result)?,
        &mut manifest,
    )?;
    manifest.write(&a.out_dir)?;

    println!("samples      {}", samples.len());
    println!("l            {:.6} mm", result.fulcrum_length_mm);
    println!("c            {:.9}", result.elongation_coefficient);
    println!("rmse         {:.6} deg", result.residual_rmse_deg);
    println!("iterations   {}", result.iterations);
    println!("converged    {}", result.converged);
    if !result.converged {
        eprintln!("warning: iteration limit reached before convergence");
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// PGM file, or a directory whose `.pgm` files are processed in name order.
    input: PathBuf,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Crop window `x,y,width,height` in pixels.
    #[arg(long, value_delimiter = ',', num_args = 4, value_name = "X,Y,W,H")]
    crop: Option<Vec<usize>>,
    #[arg(long, default_value_t = BINARY_THRESHOLD)]
    threshold: u8,
    #[arg(long, default_value_t = CannyConfig::default().low)]
    canny_low: f64,
    #[arg(long, default_value_t = CannyConfig::default().high)]
    canny_high: f64,
    #[arg(long, default_value_t = CannyConfig::default().aperture)]
    aperture: usize,
    /// Gaussian pre-blur; 0 disables it.
    #[arg(long, default_value_t = CannyConfig::default().blur_sigma)]
    blur_sigma: f64,
    /// Also write `<name>_edges.csv` per image.
    #[arg(long)]
    edges: bool,
}

impl EstimateArgs {
    fn pipeline(&self) -> PipelineConfig {
        let crop = match self.crop.as_deref() {
            Some(&[x, y, width, height]) => CropRect {
                x,
                y,
                width,
                height,
            },
            _ => RenderParams::default_crop(),
        };
        PipelineConfig {
            crop,
            threshold: self.threshold,
            canny: CannyConfig {
                low: self.canny_low,
                high: self.canny_high,
                aperture: self.aperture,
                blur_sigma: self.blur_sigma,
            },
        }
    }
}

fn pgm_files(input: &Path) -> Result<Vec<PathBuf>, TagError> {
    if !input.is_dir() {
        return Ok(vec![input.to_path_buf()]);
    }
    let io = |e| TagError::Io {
        path: input.to_path_buf(),
        source: e,
    };
    let mut files = Vec::new();
    for entry in std::fs::read_dir(input).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
        {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(TagError::InvalidConfig(format!(
            "no .pgm files in {}",
            input.display()
        )));
    }
    Ok(files)
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into())
}

pub fn estimate_angle(model: &ModelConfig, config: Option<&Path>, a: &EstimateArgs) -> CmdResult {
    let pipeline = a.pipeline();
    pipeline.validate()?;
    let files = pgm_files(&a.input)?;
    create_dir(&a.out_dir)?;
    let mut manifest = RunManifest::new("estimate-angle", config, None, &a.out_dir, model);

    let mut table = String::from("file,angle_deg,slope,edge_count,fit_residual_rms,error\n");
    let mut first_error = None;
    for path in &files {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let result =
            GrayImage::read_pgm(path).and_then(|img| estimate_angle_detailed(&img, &pipeline));
        match result {
            Ok(est) => {
                println!("{name}  {:.4} deg", est.angle_deg);
                table.push_str(&format!(
                    "{name},{:.6},{:.6},{},{:.6},\n",
                    est.angle_deg,
                    est.fit.slope,
                    est.edges.len(),
                    est.fit.fit_residual_rms
                ));
                if a.edges {
                    let mut buf = Vec::new();
                    write_edges_csv(&mut buf, &est.edges)?;
                    let edge_name = format!("{}_edges.csv", file_stem(path));
                    write_atomic(&a.out_dir.join(&edge_name), &buf)?;
                    manifest.outputs.push(edge_name);
                }
            }
            Err(e) => {
                eprintln!("error: {name}: {e}");
                table.push_str(&format!(
                    "{name},,,,,{}\n",
                    e.to_string().replace([',', '\n'], ";")
                ));
                first_error.get_or_insert(e);
            }
        }
    }
    write_output(&a.out_dir, "angles.csv", &table, &mut manifest)?;
    manifest.write(&a.out_dir)?;
    match first_error {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("pose").required(true)))]
pub struct RenderArgs {
    /// Holder rotation (deg).
    #[arg(long, group = "pose")]
    phi: Option<f64>,
    /// Tendon stroke (mm), converted through the lever model.
    #[arg(long, group = "pose")]
    stroke: Option<f64>,
    /// Gaussian intensity noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output PGM; a `.manifest.json` file is written next to it.
    #[arg(long)]
    out: PathBuf,
}

pub fn render(model: &ModelConfig, config: Option<&Path>, a: &RenderArgs) -> CmdResult {
    let phi = match (a.phi, a.stroke) {
        (Some(deg), _) => deg.to_radians(),
        (_, Some(s)) => mirror_state(s, &model.tag)?.phi_rad,
        _ => return Err(usage("one of --phi, --stroke is required")),
    };
    let params = RenderParams::default().with_noise(a.noise, a.seed);
    let img = render_synthetic_tag(phi, &params)?;
    let dir = match a.out.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    create_dir(&dir)?;
    write_atomic(&a.out, &img.to_pgm_bytes())?;

    let mut manifest = RunManifest::new("render", config, Some(a.seed), &dir, model);
    let name = a
        .out
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    manifest.outputs.push(name.clone());
    manifest.write_as(&dir.join(format!("{name}.manifest.json")))?;
    println!("wrote {} ({:.4} deg)", a.out.display(), phi.to_degrees());
    Ok(())
}
