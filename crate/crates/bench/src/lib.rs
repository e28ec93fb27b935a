//! Shared fixtures for the criterion benches.

use sucp_core::{Counterexample, PolarPoint, Preset};

/// Default paper-scale configuration used by the benches.
pub fn paper_config() -> Counterexample {
    Counterexample::from_epsilon(0.1, Preset::Paper, 12).expect("default config resolves")
}

/// Default mild-scale configuration used by the benches.
pub fn mild_config() -> Counterexample {
    Counterexample::from_epsilon(0.1, Preset::Mild, 12).expect("default config resolves")
}

/// Interior sample points of one annulus, a few per band.
pub fn band_points(cfg: &Counterexample, per_band: usize) -> Vec<PolarPoint> {
    let k = cfg.k0();
    let s = cfg.schedule();
    let mut out = Vec::new();
    for j in 0..6u32 {
        let lo = s.log_rho(k, j + 1);
        let hi = s.log_rho(k, j);
        for i in 0..per_band {
            let f = (i as f64 + 0.5) / per_band as f64;
            out.push(PolarPoint::new(lo + f * (hi - lo), 0.9));
        }
    }
    out
}
