//! Command-line driver: build a configuration, run the verification checks,
//! dump profile data for plotting.
//!
//! Exit codes: 0 all checks pass, 1 at least one check failed, 2 bad
//! invocation.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use num_complex::Complex64;

use sucp_core::dirac::{dirac_residual, opnorm2_units, CliffordSet};
use sucp_core::kelvin::{
    gaussian_test_field, kelvin_multiplier, intertwining_residual, polynomial_test_field,
    shell_mass_sides, BoxedCartesianField, CartesianKelvin,
};
use sucp_core::verify::{self, CheckReport, Parameters, RunReport, SampleGrid};
use sucp_core::{
    Counterexample, CutoffProfile, FdStencil, PolarPoint, Preset, Region, SpinorField,
};

#[derive(Parser)]
#[command(name = "sucp", version, about = "Verification harness for a sharp Dirac unique-continuation counterexample field", long_about = None)]
struct Cli {
    #[command(flatten)]
    opts: CommonOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Potential budget: the bound checked is opnorm(V(z)) <= (1/2 + epsilon)/|z|
    #[arg(long, global = true, default_value_t = 0.1)]
    epsilon: f64,

    /// Override the cutoff sharpness (must satisfy delta^2 + delta <= epsilon and delta < 1/4)
    #[arg(long, global = true)]
    delta: Option<f64>,

    /// Radii schedule preset
    #[arg(long, global = true, value_enum, default_value_t = ScheduleArg::Paper)]
    schedule: ScheduleArg,

    /// Largest resolved annulus index
    #[arg(long, global = true, default_value_t = 12)]
    k_max: u32,

    /// Radial samples per band
    #[arg(long, global = true, default_value_t = 48)]
    radial_samples: usize,

    /// Angular samples
    #[arg(long, global = true, default_value_t = 32)]
    theta_samples: usize,

    /// Central-difference step in (t, theta)
    #[arg(long, global = true, default_value_t = 1e-6)]
    fd_step: f64,

    /// Identity residual tolerance (default 1e-6 mild, 1e-5 paper)
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Report format
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScheduleArg {
    Paper,
    Mild,
}

impl From<ScheduleArg> for Preset {
    fn from(s: ScheduleArg) -> Preset {
        match s {
            ScheduleArg::Paper => Preset::Paper,
            ScheduleArg::Mild => Preset::Mild,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum SampleWhat {
    /// opnorm(V) * r along t
    PotentialBound,
    /// log-magnitude of |u| along t
    ULogmag,
    /// identity residual along t
    Residual,
}

#[derive(Subcommand)]
enum Command {
    /// Resolve delta and k0 and print the schedule summary
    Build,
    /// Run every check; exit 0 iff all pass
    Check,
    /// CSV dump of a profile quantity along t at fixed theta
    Sample {
        #[arg(long, value_enum, default_value_t = SampleWhat::PotentialBound)]
        what: SampleWhat,
        /// Annulus index (defaults to k0)
        #[arg(long)]
        k: Option<u32>,
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
    },
    /// Kelvin-transform identity residuals on smooth test fields
    KelvinCheck,
    /// Checks for the transported example at infinity
    Infinity,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            // configuration problems are usage errors
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let opts = &cli.opts;
    if let Some(d) = opts.delta {
        if !(d > 0.0 && d < 0.25) || d * d + d > opts.epsilon {
            anyhow::bail!(
                "--delta {d} is not admissible for epsilon {} (need 0 < delta < 1/4 and delta^2 + delta <= epsilon)",
                opts.epsilon
            );
        }
    }
    if !(opts.epsilon > 0.0 && opts.epsilon.is_finite()) {
        anyhow::bail!("--epsilon must be a positive real, got {}", opts.epsilon);
    }
    if !(opts.fd_step > 0.0 && opts.fd_step.is_finite()) {
        anyhow::bail!("--fd-step must be a positive real, got {}", opts.fd_step);
    }
    if opts.radial_samples < 2 || opts.theta_samples < 2 {
        anyhow::bail!("--radial-samples and --theta-samples must be at least 2");
    }
    let preset: Preset = opts.schedule.into();
    let cfg = match opts.delta {
        Some(d) => Counterexample::with_cutoff(opts.epsilon, CutoffProfile::new(d)?, preset, opts.k_max)?,
        None => Counterexample::from_epsilon(opts.epsilon, preset, opts.k_max)?,
    };
    let grid = SampleGrid::new(opts.radial_samples, opts.theta_samples, 0.1);
    let st = FdStencil::with_step(opts.fd_step);
    let tol = opts.tol.unwrap_or_else(|| verify::default_identity_tol(preset));

    match cli.command {
        Command::Build => {
            print_build_summary(&cfg);
            Ok(ExitCode::SUCCESS)
        }
        Command::Check => {
            let report = verify::run_all(&cfg, &grid, st, tol)?;
            emit_report(opts, &report)?;
            Ok(exit_for(report.all_pass))
        }
        Command::Sample { what, k, theta } => {
            let csv = sample_csv(&cfg, &grid, st, what, k.unwrap_or_else(|| cfg.k0()), theta)?;
            write_output(opts, &csv)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::KelvinCheck => {
            let report = kelvin_report(&cfg, &grid, st, tol);
            emit_report(opts, &report)?;
            Ok(exit_for(report.all_pass))
        }
        Command::Infinity => {
            let checks = vec![
                verify::check_infinity_example(&cfg, &grid)?,
                verify::check_vanishing_infinity(&cfg, &[1, 5, 10])?,
            ];
            let report = assemble(&cfg, &grid, st, tol, checks);
            emit_report(opts, &report)?;
            Ok(exit_for(report.all_pass))
        }
    }
}

fn exit_for(all_pass: bool) -> ExitCode {
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn parameters(cfg: &Counterexample, grid: &SampleGrid, st: FdStencil, tol: f64) -> Parameters {
    Parameters {
        epsilon: cfg.epsilon(),
        delta: cfg.delta(),
        k0: cfg.k0(),
        k0_admissible: cfg.k0_admissible(),
        schedule: cfg.schedule().preset(),
        k_max: cfg.schedule().k_max(),
        radial_samples: grid.radial_per_band,
        theta_samples: grid.theta_samples,
        interior_margin: grid.interior_margin,
        fd_step: st.h_t,
        identity_tol: tol,
    }
}

fn assemble(
    cfg: &Counterexample,
    grid: &SampleGrid,
    st: FdStencil,
    tol: f64,
    checks: Vec<CheckReport>,
) -> RunReport {
    let all_pass = checks.iter().all(|c| c.pass);
    RunReport { parameters: parameters(cfg, grid, st, tol), checks, all_pass }
}

fn print_build_summary(cfg: &Counterexample) {
    let s = cfg.schedule();
    println!("schedule      : {}", s.preset());
    println!("epsilon       : {}", cfg.epsilon());
    println!("delta         : {}", cfg.delta());
    println!("k0            : {} (admissible: {})", cfg.k0(), cfg.k0_admissible());
    println!("k_max         : {}", s.k_max());
    println!();
    println!("{:>4} {:>26} {:>14} {:>14}", "k", "log rho_k", "c_k", "c~_k");
    for k in cfg.k0()..=s.k_max() {
        let bc = s.band_constants(k);
        println!(
            "{:>4} {:>26} {:>14.10} {:>14.10}",
            k,
            format!("logmag:{:.6e}", s.log_rho(k, 0)),
            bc.c,
            bc.c_tilde
        );
    }
}

/// Deterministic well-spread sample points on an annulus (golden-angle spiral).
fn spiral_points(n: usize, r_lo: f64, r_hi: f64, dim: usize) -> Vec<Vec<f64>> {
    let golden = PI * (3.0 - 5.0f64.sqrt());
    (0..n)
        .map(|i| {
            let f = (i as f64 + 0.5) / n as f64;
            let r = r_lo + (r_hi - r_lo) * f;
            let a = golden * i as f64;
            match dim {
                2 => vec![r * a.cos(), r * a.sin()],
                3 => {
                    let z = 2.0 * f - 1.0;
                    let rho = (1.0 - z * z).sqrt();
                    vec![r * rho * a.cos(), r * rho * a.sin(), r * z]
                }
                _ => unreachable!(),
            }
        })
        .collect()
}

fn kelvin_report(cfg: &Counterexample, grid: &SampleGrid, st: FdStencil, tol: f64) -> RunReport {
    let floor_ln = |x: f64| x.max(1e-300).ln();
    let mut checks = Vec::new();

    for (n, name) in [(2u32, "kelvin-involution-n2"), (3u32, "kelvin-involution-n3")] {
        let cl = CliffordSet::new(n).expect("supported dimension");
        let base: BoxedCartesianField = if n == 2 {
            Box::new(gaussian_test_field)
        } else {
            Box::new(polynomial_test_field)
        };
        let once = CartesianKelvin::new(&cl, &base);
        let twice = CartesianKelvin::new(&cl, |y: &[f64]| once.eval(y));
        let pts = spiral_points(100, 0.4, 1.6, n as usize);
        let worst = pts
            .iter()
            .map(|x| {
                let u = base(x);
                ((twice.eval(x) - &u).norm() / u.norm().max(1e-9)).abs()
            })
            .fold(0.0f64, f64::max);
        checks.push(CheckReport {
            name: name.into(),
            region: format!("{} spiral points, 0.4 <= |x| <= 1.6", pts.len()),
            points: pts.len(),
            worst_margin_logmag: (1e-12f64).ln() - floor_ln(worst),
            pass: worst <= 1e-12,
        });
    }

    for (n, name) in [(2u32, "kelvin-intertwining-n2"), (3u32, "kelvin-intertwining-n3")] {
        let cl = CliffordSet::new(n).expect("supported dimension");
        let base: BoxedCartesianField = if n == 2 {
            Box::new(gaussian_test_field)
        } else {
            Box::new(polynomial_test_field)
        };
        let pts = spiral_points(50, 0.5, 1.5, n as usize);
        let worst = pts
            .iter()
            .map(|x| intertwining_residual(&cl, &base, x, 1e-5))
            .fold(0.0f64, f64::max);
        checks.push(CheckReport {
            name: name.into(),
            region: format!("{} spiral points", pts.len()),
            points: pts.len(),
            worst_margin_logmag: (1e-5f64).ln() - floor_ln(worst),
            pass: worst <= 1e-5,
        });
    }

    {
        let cl = CliffordSet::new(2).expect("supported dimension");
        let pts = spiral_points(64, 0.3, 2.0, 2);
        let worst = pts
            .iter()
            .map(|x| {
                let b = kelvin_multiplier(&cl, x);
                let w = DVector::from_vec(vec![
                    Complex64::new(0.6, -0.2),
                    Complex64::new(-0.3, 0.7),
                ]);
                ((&b * &w).norm() - w.norm()).abs()
            })
            .fold(0.0f64, f64::max);
        checks.push(CheckReport {
            name: "kelvin-multiplier-unitarity".into(),
            region: "2d annulus".into(),
            points: pts.len(),
            worst_margin_logmag: (1e-12f64).ln() - floor_ln(worst),
            pass: worst <= 1e-12,
        });
    }

    {
        let base = |p: &PolarPoint| {
            let r = p.t().exp();
            let z = Complex64::from_polar(r, p.theta());
            sucp_core::SpinorValue {
                upper: sucp_core::ExtComplex::from_c64(Complex64::new((-r * r / 2.0).exp(), 0.0)),
                lower: sucp_core::ExtComplex::from_c64(z * Complex64::new((-r * r).exp(), 0.0)),
            }
        };
        let (lhs, rhs) = shell_mass_sides(&base, 0.5, 2.0, 512, 64);
        let gap = (lhs.logmag() - rhs.logmag()).abs();
        checks.push(CheckReport {
            name: "kelvin-shell-mass-transport".into(),
            region: "0.5 <= |x| <= 2 vs inverted shell".into(),
            points: 513 * 64,
            worst_margin_logmag: (1e-8f64).ln() - floor_ln(gap),
            pass: gap <= 1e-8,
        });
    }

    assemble(cfg, grid, st, tol, checks)
}

fn sample_csv(
    cfg: &Counterexample,
    grid: &SampleGrid,
    st: FdStencil,
    what: SampleWhat,
    k: u32,
    theta: f64,
) -> anyhow::Result<String> {
    if k > cfg.last_annulus() {
        anyhow::bail!("annulus {k} beyond resolved range (k_max - 1 = {})", cfg.last_annulus());
    }
    let s = cfg.schedule();
    let mut out = String::new();
    out.push_str("# t = log r (natural log); the radius itself may underflow doubles\n");
    let header = match what {
        SampleWhat::PotentialBound => "t,theta,opnorm_times_r",
        SampleWhat::ULogmag => "t,theta,logmag_u",
        SampleWhat::Residual => "t,theta,residual",
    };
    out.push_str(header);
    out.push('\n');
    for j in 0..6u8 {
        let lo = s.log_rho(k, u32::from(j) + 1);
        let hi = s.log_rho(k, u32::from(j));
        let (a, b) = match what {
            // stencil checks stay clear of the seams
            SampleWhat::Residual => {
                let w = hi - lo;
                (lo + grid.interior_margin * w, hi - grid.interior_margin * w)
            }
            _ => (lo, hi),
        };
        for i in 0..grid.radial_per_band {
            let t = a + (b - a) * i as f64 / (grid.radial_per_band - 1) as f64;
            let p = PolarPoint::new(t, theta);
            let value = match what {
                SampleWhat::PotentialBound => {
                    opnorm2_units(&cfg.potential_units(Region::Band { k, j }, &p))
                }
                SampleWhat::ULogmag => {
                    let n = cfg.eval(&p).norm();
                    if n.is_zero() {
                        f64::NEG_INFINITY
                    } else {
                        n.logmag()
                    }
                }
                SampleWhat::Residual => dirac_residual(cfg, &p, st)?,
            };
            out.push_str(&format!("{t:.17e},{theta:.17e},{value:.17e}\n"));
        }
    }
    Ok(out)
}

fn emit_report(opts: &CommonOpts, report: &RunReport) -> anyhow::Result<()> {
    let text = match opts.format {
        FormatArg::Json => serde_json::to_string_pretty(report)? + "\n",
        FormatArg::Csv => {
            let mut s = String::from("name,region,points,worst_margin_logmag,pass\n");
            for c in &report.checks {
                s.push_str(&format!(
                    "{},\"{}\",{},{:.17e},{}\n",
                    c.name, c.region, c.points, c.worst_margin_logmag, c.pass
                ));
            }
            s
        }
    };
    write_output(opts, &text)
}

fn write_output(opts: &CommonOpts, text: &str) -> anyhow::Result<()> {
    match &opts.out {
        Some(path) => fs::write(path, text)?,
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}
