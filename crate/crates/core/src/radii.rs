//! Radii schedule, band constants and the admissible starting index.
//!
//! The defining schedule is `log rho_{k,j} = -exp((k + j/6)^2)`: six nested
//! sub-radii per annulus, each annulus collapsing doubly-exponentially fast.
//! A second, much gentler schedule (`log rho_{k,j} = -2^(k + j/6)`) keeps all
//! radii representable as ordinary doubles; the band formulas never look at
//! anything beyond the stored logs, so identities verified on the mild
//! schedule carry the same algebra as the paper-scale one.

use serde::Serialize;

use crate::{Error, Result};

/// Which radii schedule a configuration runs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Doubly-exponential radii; requires extended-range arithmetic.
    Paper,
    /// `-2^(k + j/6)` logs, representable in hardware floats; used for
    /// finite-difference identity checks.
    Mild,
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Preset::Paper => write!(f, "paper"),
            Preset::Mild => write!(f, "mild"),
        }
    }
}

/// Interpolation constants of the two exponent bands of an annulus.
#[derive(Clone, Copy, Debug)]
pub struct BandConstants {
    /// `c_k = (1 - log rho_{k,1} / log rho_{k,2})^{-1}`.
    pub c: f64,
    /// `c~_k = (1 - log rho_{k,4} / log rho_{k,5})^{-1}`.
    pub c_tilde: f64,
}

/// The five inequalities an admissible starting index must satisfy,
/// evaluated from the stored logs of one annulus.
#[derive(Clone, Copy, Debug)]
pub struct K0Conditions {
    /// `c_k <= 1 + delta`.
    pub c_bound: bool,
    /// `1 / (log rho_{k,2} - log rho_{k,3}) <= delta`.
    pub phi_slope_bound: bool,
    /// `1 / (log rho_{k,3} - log rho_{k,4}) <= delta`.
    pub phi_tilde_slope_bound: bool,
    /// `c~_k <= 1 + delta`.
    pub c_tilde_bound: bool,
    /// `1 / |log rho_{k,0}| <= 1/2`.
    pub outer_width_bound: bool,
}

impl K0Conditions {
    pub fn all(&self) -> bool {
        self.c_bound
            && self.phi_slope_bound
            && self.phi_tilde_slope_bound
            && self.c_tilde_bound
            && self.outer_width_bound
    }
}

/// Precomputed `log rho_{k,j}` table for one preset.
#[derive(Clone, Debug)]
pub struct RadiiSchedule {
    preset: Preset,
    k_max: u32,
    /// `logs[k][j] = log rho_{k,j}` for `k <= k_max`, `j <= 6`.
    logs: Vec<[f64; 7]>,
}

impl RadiiSchedule {
    pub const DEFAULT_K_MAX: u32 = 12;

    /// Paper preset supports `k_max` up to this before `exp((k+1)^2)` leaves
    /// double range.
    pub const PAPER_K_MAX_LIMIT: u32 = 25;

    pub fn new(preset: Preset, k_max: u32) -> Result<RadiiSchedule> {
        let limit = match preset {
            Preset::Paper => Self::PAPER_K_MAX_LIMIT,
            Preset::Mild => 60,
        };
        if k_max < 2 || k_max > limit {
            return Err(Error::KOutOfRange { k: k_max, k_max: limit });
        }
        let logs = (0..=k_max)
            .map(|k| {
                let mut row = [0.0; 7];
                for (j, slot) in row.iter_mut().enumerate() {
                    let x = k as f64 + j as f64 / 6.0;
                    *slot = match preset {
                        Preset::Paper => -(x * x).exp(),
                        Preset::Mild => -(2f64.powf(x)),
                    };
                }
                row
            })
            .collect();
        Ok(RadiiSchedule { preset, k_max, logs })
    }

    pub fn paper() -> RadiiSchedule {
        RadiiSchedule::new(Preset::Paper, Self::DEFAULT_K_MAX).expect("default schedule")
    }

    pub fn mild() -> RadiiSchedule {
        RadiiSchedule::new(Preset::Mild, Self::DEFAULT_K_MAX).expect("default schedule")
    }

    pub fn preset(&self) -> Preset {
        self.preset
    }

    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    /// `log rho_{k,j}`; `j` may be 6, which equals `log rho_{k+1,0}` exactly.
    pub fn log_rho(&self, k: u32, j: u32) -> f64 {
        assert!(k <= self.k_max, "k = {k} beyond k_max = {}", self.k_max);
        assert!(j <= 6, "sub-radius index {j} out of range");
        self.logs[k as usize][j as usize]
    }

    pub fn band_constants(&self, k: u32) -> BandConstants {
        BandConstants {
            c: 1.0 / (1.0 - self.log_rho(k, 1) / self.log_rho(k, 2)),
            c_tilde: 1.0 / (1.0 - self.log_rho(k, 4) / self.log_rho(k, 5)),
        }
    }

    /// Evaluate the five admissibility inequalities at annulus `k`.
    pub fn k0_conditions(&self, k: u32, delta: f64) -> K0Conditions {
        let bc = self.band_constants(k);
        let budget = 1.0 + delta;
        K0Conditions {
            c_bound: bc.c <= budget,
            phi_slope_bound: 1.0 / (self.log_rho(k, 2) - self.log_rho(k, 3)) <= delta,
            phi_tilde_slope_bound: 1.0 / (self.log_rho(k, 3) - self.log_rho(k, 4)) <= delta,
            c_tilde_bound: bc.c_tilde <= budget,
            outer_width_bound: 1.0 / self.log_rho(k, 0).abs() <= 0.5,
        }
    }

    /// Smallest `k` such that every annulus from `k` up to `k_max` passes all
    /// five conditions. Monotonicity in `k` is not assumed: the suffix is
    /// checked outright.
    pub fn select_k0(&self, delta: f64) -> Result<u32> {
        let mut first = None;
        for k in (1..=self.k_max).rev() {
            if self.k0_conditions(k, delta).all() {
                first = Some(k);
            } else {
                break;
            }
        }
        first.ok_or(Error::NoAdmissibleK0 { delta, k_max: self.k_max })
    }
}
