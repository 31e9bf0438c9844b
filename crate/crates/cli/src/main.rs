use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use quasimono::beamformer::{beamform, beamform_values};
use quasimono::closed_form::{
    closed_form_phase, predicted_peak, strongest_lobes, KernelMode, GRATING_WARNING_GAP_DB,
};
use quasimono::experiment::{emit_results, run_sweep, Subset, SweepRow, SweepSpec};
use quasimono::propagation::far_field_distance;
use quasimono::scenario::{load_config_file, rts_displacement, Config};
use quasimono::signal_chain::{analytic_element_values, run_chain, ChainOptions};
use quasimono::{Error, Scenario};

/// Largest accepted pairwise disagreement between model levels in `compare`.
const COMPARE_TOLERANCE_DEG: f64 = 0.02;

#[derive(Parser)]
#[command(
    name = "quasimono",
    version,
    about = "Quasi-monostatic RTS angle-of-arrival simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a configuration and print derived quantities.
    Validate { config: PathBuf },
    /// Run the full chain once and write range/angle spectra and a summary.
    Simulate {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Sweep the RTS transmitter displacement and write per-subset detections.
    Sweep {
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Compare the detected angle across model levels.
    Compare {
        config: PathBuf,
        #[command(flatten)]
        opts: Overrides,
    },
}

#[derive(Args, Clone)]
struct Overrides {
    /// Beamforming grid step in degrees.
    #[arg(long)]
    grid_step_deg: Option<f64>,
    /// Range DFT zero-padding factor (power of two).
    #[arg(long, default_value_t = 1)]
    zero_pad: usize,
    /// Closed-form kernel.
    #[arg(long, default_value = "dirichlet")]
    mode: KernelMode,
    /// Antenna subset NTXxNRX (comma-separated list for `sweep`).
    #[arg(long)]
    subset: Option<String>,
    /// Do not lengthen the return path by the transmitter displacement.
    #[arg(long)]
    no_range_compensation: bool,
}

/// Failure classes mapped to process exit codes.
enum Failure {
    Validation(String),
    Runtime(String),
    Io(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Runtime(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Runtime(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Io(_) | Error::Csv(_) => Failure::Io(msg),
            Error::Parse(_)
            | Error::Invalid { .. }
            | Error::Nyquist { .. }
            | Error::EmptySelection => Failure::Validation(msg),
            _ => Failure::Runtime(msg),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { config } => validate(&config),
        Command::Simulate {
            config,
            out_dir,
            opts,
        } => simulate(&config, &out_dir, &opts),
        Command::Sweep { config, out, opts } => sweep(&config, &out, &opts),
        Command::Compare { config, opts } => compare(&config, &opts),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}

/// Rounds values that would print as "-0.000" to zero.
fn shown(deg: f64, decimals: i32) -> f64 {
    if deg.abs() < 0.5 * 10f64.powi(-decimals) {
        0.0
    } else {
        deg
    }
}

fn load(path: &Path) -> Result<Config, Failure> {
    if !path.exists() {
        return Err(Failure::Io(format!(
            "config file {} not found",
            path.display()
        )));
    }
    Ok(load_config_file(path)?)
}

fn apply_grid(s: Scenario, opts: &Overrides) -> Result<Scenario, Failure> {
    match opts.grid_step_deg {
        None => Ok(s),
        Some(step) => {
            let grid = s.grid().with_step(step.to_radians())?;
            Ok(s.with_grid(grid)?)
        }
    }
}

fn single_subset(s: &Scenario, opts: &Overrides) -> Result<Subset, Failure> {
    match &opts.subset {
        None => Ok(Subset::new(s.array().tx_count, s.array().rx_count)),
        Some(label) => {
            let sub: Subset = label.parse()?;
            s.with_subarray(sub.tx_count, sub.rx_count)?;
            Ok(sub)
        }
    }
}

fn chain_options(s: &Scenario, opts: &Overrides) -> Result<ChainOptions, Failure> {
    let return_offset_m = if opts.no_range_compensation {
        0.0
    } else {
        let rc = s.rts().range_m;
        rc.hypot(rts_displacement(s)) - rc
    };
    let chain = ChainOptions {
        zero_pad: opts.zero_pad,
        return_offset_m,
        ..Default::default()
    };
    chain.validate()?;
    Ok(chain)
}

fn validate(path: &Path) -> CmdResult {
    let config = match load(path) {
        Ok(c) => c,
        Err(Failure::Io(m)) => return Err(Failure::Io(m)),
        Err(f) => {
            println!("status: FAIL");
            return Err(f);
        }
    };
    let s = config.scenario;
    if let Some(section) = &config.sweep {
        if let Err(e) = SweepSpec::from_section(s, Some(section)) {
            println!("status: FAIL");
            return Err(e.into());
        }
    }
    let c = s.chirp();
    println!("wavelength_m:          {:.6e}", s.wavelength_m());
    println!("steering_wavelength_m: {:.6e}", s.steering_wavelength_m());
    println!("sample_rate_hz:        {:.6e}", c.sample_rate_hz());
    println!("far_field_distance_m:  {:.6}", far_field_distance(&s));
    println!("range_m:               {:.6}", s.rts().range_m);
    println!("max_beat_hz:           {:.6e}", s.max_beat_frequency_hz());
    println!("nyquist_margin_hz:     {:.6e}", s.nyquist_margin_hz());
    let warnings = s.warnings();
    for w in &warnings {
        println!("warning: {w}");
    }
    println!(
        "status: {}",
        if warnings.is_empty() { "PASS" } else { "WARN" }
    );
    Ok(())
}

fn simulate(path: &Path, out_dir: &Path, opts: &Overrides) -> CmdResult {
    let s = apply_grid(load(path)?.scenario, opts)?;
    let sub = single_subset(&s, opts)?;
    let chain = chain_options(&s, opts)?;
    for w in s.warnings() {
        println!("warning: {w}");
    }

    let range = run_chain(&s, &chain)?.select_subset(&sub.tx_indices(), &sub.rx_indices())?;
    let angles = beamform(&range, &s);
    let detected = angles.refine_peak()?;
    let sub_scenario = s.with_subarray(sub.tx_count, sub.rx_count)?;
    let predicted = predicted_peak(&sub_scenario, opts.mode)?;
    let phi_a = closed_form_phase(&sub_scenario);

    fs::create_dir_all(out_dir).map_err(Error::from)?;
    let mut buf = Vec::new();
    range.write_csv(&mut buf)?;
    fs::write(out_dir.join("range_spectrum.csv"), &buf).map_err(Error::from)?;
    buf.clear();
    angles.write_csv(&mut buf)?;
    fs::write(out_dir.join("angle_spectrum.csv"), &buf).map_err(Error::from)?;

    let summary = [
        ("subset", sub.label.clone()),
        ("detected_bin", range.detected_bin().to_string()),
        (
            "detected_fullchain_deg",
            format!("{:.8e}", detected.to_degrees()),
        ),
        (
            "detected_closedform_deg",
            format!("{:.8e}", predicted.to_degrees()),
        ),
        ("closedform_mode", opts.mode.to_string()),
        ("phi_a_rad", format!("{phi_a:.8e}")),
    ];
    let mut text = String::from("key,value\n");
    for (k, v) in &summary {
        text.push_str(&format!("{k},{v}\n"));
    }
    fs::write(out_dir.join("summary.csv"), text).map_err(Error::from)?;

    println!("subset:                  {}", sub.label);
    println!("detected bin:            {}", range.detected_bin());
    println!(
        "detected (full chain):   {:.4}°",
        shown(detected.to_degrees(), 4)
    );
    println!(
        "detected (closed form):  {:.4}° [{}]",
        shown(predicted.to_degrees(), 4),
        opts.mode
    );
    println!("phi_A:                   {phi_a:.6} rad");
    println!("wrote {}", out_dir.display());
    Ok(())
}

fn sweep(path: &Path, out: &Path, opts: &Overrides) -> CmdResult {
    let config = load(path)?;
    let section = config
        .sweep
        .as_ref()
        .ok_or_else(|| Failure::Validation(format!("{} has no [sweep] section", path.display())))?;
    let s = apply_grid(config.scenario, opts)?;
    let mut spec = SweepSpec::from_section(s, Some(section))?.with_zero_pad(opts.zero_pad);
    ChainOptions {
        zero_pad: opts.zero_pad,
        ..Default::default()
    }
    .validate()?;
    if let Some(list) = &opts.subset {
        spec = spec.with_subsets(Subset::parse_list(list)?)?;
    }
    if opts.no_range_compensation {
        spec = spec.with_range_compensation(false);
    }
    if !spec.far_field_ok() {
        println!("warning: Rc is inside the far-field distance of the array");
    }

    let rows = run_sweep(&spec)?;
    emit_results(&rows, out)?;

    println!(
        "{:<8} {:>18} {:>16}",
        "subset", "max |dev| (deg)", "at d_rts (m)"
    );
    for sub in spec.subsets() {
        let worst =
            rows.iter()
                .filter(|r| r.subset == sub.label)
                .fold(None::<&SweepRow>, |best, r| match best {
                    Some(b) if b.deviation_deg.abs() >= r.deviation_deg.abs() => Some(b),
                    _ => Some(r),
                });
        if let Some(r) = worst {
            println!(
                "{:<8} {:>18.6} {:>16.6}",
                sub.label,
                r.deviation_deg.abs(),
                r.d_rts_m
            );
        }
    }
    println!("wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}

fn compare(path: &Path, opts: &Overrides) -> CmdResult {
    let base = apply_grid(load(path)?.scenario, opts)?;
    let sub = single_subset(&base, opts)?;
    let s = base.with_subarray(sub.tx_count, sub.rx_count)?;
    let chain = chain_options(&s, opts)?;

    let full = beamform(&run_chain(&s, &chain)?, &s).refine_peak()?;
    let direct =
        beamform_values(&analytic_element_values(&s, chain.return_offset_m)?, &s).refine_peak()?;
    let sinc = predicted_peak(&s, KernelMode::Sinc)?;
    let dirichlet = predicted_peak(&s, KernelMode::Dirichlet)?;

    let levels = [
        ("full chain", full.to_degrees(), true),
        ("direct sum", direct.to_degrees(), true),
        (
            "closed form (sinc)",
            sinc.to_degrees(),
            opts.mode == KernelMode::Sinc,
        ),
        (
            "closed form (dirichlet)",
            dirichlet.to_degrees(),
            opts.mode == KernelMode::Dirichlet,
        ),
    ];
    println!("subset {} ({} gate)", sub.label, opts.mode);
    for (name, deg, _) in &levels {
        println!("  {name:<24} {:>12.6}°", shown(*deg, 6));
    }
    let mut worst: f64 = 0.0;
    for (i, a) in levels.iter().enumerate() {
        for b in &levels[i + 1..] {
            let diff = (a.1 - b.1).abs();
            let gated = a.2 && b.2;
            if gated {
                worst = worst.max(diff);
            }
            println!(
                "  |{} − {}| = {diff:.6}°{}",
                a.0,
                b.0,
                if gated { "" } else { " (not gated)" }
            );
        }
    }
    let lobes = strongest_lobes(&s, opts.mode).filter(|p| p.gap_db < GRATING_WARNING_GAP_DB);
    if let Some(lobes) = lobes {
        println!(
            "warning: grating-lobe risk: lobes at {:.3}° and {:.3}° differ by {:.2} dB (< {GRATING_WARNING_GAP_DB} dB)",
            lobes.primary_rad.to_degrees(),
            lobes.secondary_rad.to_degrees(),
            lobes.gap_db
        );
    }
    if worst > COMPARE_TOLERANCE_DEG {
        return Err(Failure::Runtime(format!(
            "max pairwise difference {worst:.6}° exceeds {COMPARE_TOLERANCE_DEG}°"
        )));
    }
    println!("max gated difference {worst:.6}° (tolerance {COMPARE_TOLERANCE_DEG}°): OK");
    Ok(())
}
