//! Bundled cross-event detection-accuracy matrix for six widely studied
//! BGP incidents (row = model, column = dataset, integer percent). Drives
//! the `repro-tables` command and the clustering regression tests.

use super::AccuracyMatrix;
use crate::num::Scalar;

pub const REFERENCE_EVENTS: [&str; 6] = [
    "Nimda",
    "Slammer",
    "Codered",
    "Eastcoast",
    "Florida",
    "Katrina",
];

const REFERENCE_AM: [[u32; 6]; 6] = [
    [99, 100, 82, 85, 70, 62],
    [90, 100, 81, 50, 32, 50],
    [70, 51, 91, 45, 55, 49],
    [50, 50, 50, 100, 50, 54],
    [51, 50, 50, 41, 91, 50],
    [53, 77, 63, 62, 60, 90],
];

/// The six-event accuracy matrix, percent scale.
pub fn reference_accuracy_matrix<F: Scalar>() -> AccuracyMatrix<F> {
    let names = REFERENCE_EVENTS.iter().map(|s| s.to_string()).collect();
    let cells = REFERENCE_AM
        .iter()
        .flatten()
        .map(|&v| Some(F::from_count(v as usize)))
        .collect();
    AccuracyMatrix::from_parts(names, cells).expect("reference matrix is square")
}
