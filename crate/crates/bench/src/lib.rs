//! Shared fixtures for the criterion benches.

use linqubit_core::{Complex64, SchemeParams};

/// Parameter points spanning small and large coherent amplitudes at eta = 0.8.
pub fn reference_points() -> Vec<SchemeParams> {
    [(0.3, 0.4), (1.0, 0.6), (2.0, 1.2)]
        .iter()
        .map(|&(g, phi)| SchemeParams::real(0.8, g, phi).expect("valid reference point"))
        .collect()
}

pub fn gamma(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}
