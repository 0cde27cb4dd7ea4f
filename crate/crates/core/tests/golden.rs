//! Golden-file checks of the circuit serialization: the emitted gate
//! order and angle formatting are the interchange contract, so any drift
//! must be a conscious change of these files.

use qdmft::siam::SiamParams;
use qdmft::trotter::{self, Method, StepParity, TrotterPlan};

fn params() -> SiamParams {
    // Generic point: every diagonal rotation is present.
    SiamParams::new(4.0, 1.0, 0.5, 1.0).unwrap()
}

#[test]
fn xy_step_serialization_is_frozen() {
    let text = trotter::serialize_circuit(&trotter::build_xy_step(&params(), 0.25));
    assert_eq!(text, include_str!("golden/xy_step.txt"));
}

#[test]
fn cz_step_serialization_is_frozen() {
    let circuit = trotter::build_cz_step(&params(), 0.25, StepParity::Odd, false);
    let text = trotter::serialize_circuit(&circuit);
    assert_eq!(text, include_str!("golden/cz_step_odd.txt"));
}

#[test]
fn optimized_cz_pair_serialization_is_frozen() {
    let plan = TrotterPlan::new(Method::Cz, params(), 2, 0.5, true).unwrap();
    let text = trotter::serialize_circuit(&trotter::build_evolution(&plan));
    assert_eq!(text, include_str!("golden/cz_pair_optimized.txt"));
}
