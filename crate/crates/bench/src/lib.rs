//! Shared fixtures for the criterion benchmarks in `benches/`.

use pcfsqueeze::experiments::{Setup, Simulation};
use pcfsqueeze::RamanModel;

/// Paper fibre and pulse on an `n`-point grid of half-width 20, Raman noise
/// on, multi-Lorentzian response.
pub fn simulation(n_points: usize, dz: f64) -> Simulation {
    let setup = Setup {
        n_points,
        t_window: 20.0,
        dz,
        raman: RamanModel::silica_multi_lorentzian(0.068),
        ..Setup::nl_pm_750_defaults()
    };
    Simulation::new(setup).expect("valid benchmark setup")
}
