//! Compilation of the first-order Trotterized time evolution into gate
//! sequences, for two hardware backends:
//!
//! - the XY backend, which applies the hybridization factors as native
//!   XY gates and the interaction as one direct ZZ gate on the
//!   non-adjacent impurity pair (an all-to-all coupler);
//! - the CZ backend, which realizes every two-qubit interaction from
//!   CZ-phi gates on a linear qubit chain: ZZ factors as two CZ-phi
//!   conjugated by X flips, hybridization via basis-rotation sandwiches,
//!   and the impurity-pair interaction routed through Swaps.
//!
//! Steps are assembled from a small structural op list so that gate
//! counting can use the backend's native units (a routed ZZ counts as
//! one ZZ gate, not as its CZ-phi expansion).

use crate::qsim::{inner_product, Circuit, Gate, StateVector};
use crate::siam::{SiamParams, SYSTEM_QUBITS};
use crate::{Error, Result};

use std::f64::consts::{FRAC_PI_2, PI};

/// Gate decomposition backend.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Method {
    Xy,
    Cz,
}

/// Position of a CZ-backend step within an optimized pair. Odd steps
/// order the factors diagonal, interaction, YY, XX; even steps reverse
/// the block order so that adjacent XX sandwiches cancel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepParity {
    Odd,
    Even,
}

/// A validated evolution request: n_steps first-order steps of length
/// tau / n_steps.
#[derive(Clone, Copy, Debug)]
pub struct TrotterPlan {
    pub method: Method,
    pub n_steps: usize,
    pub tau: f64,
    pub params: SiamParams,
    /// CZ backend only: alternate step parity and drop the cancelling
    /// basis rotations between neighbouring steps. Ignored by XY.
    pub optimize_pairs: bool,
}

impl TrotterPlan {
    pub fn new(
        method: Method,
        params: SiamParams,
        n_steps: usize,
        tau: f64,
        optimize_pairs: bool,
    ) -> Result<TrotterPlan> {
        if n_steps == 0 {
            return Err(Error::Domain("n_steps must be at least 1".into()));
        }
        if !tau.is_finite() || tau < 0.0 {
            return Err(Error::Domain(format!("tau = {tau} must be finite and nonnegative")));
        }
        Ok(TrotterPlan { method, n_steps, tau, params, optimize_pairs })
    }
}

/// Gate tallies in the backend's native units. A Swap contributes 3 to
/// `czphi_gates` (its CZ-phi realization cost) and a CZ-backend ZZ gate
/// contributes 2; the XY backend's direct ZZ contributes none.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct GateCount {
    pub zz_gates: usize,
    pub swap_gates: usize,
    pub single_qubit_rotations: usize,
    pub xy_gates: usize,
    pub czphi_gates: usize,
}

/// Structural step element; the unit the gate-count report counts in.
#[derive(Clone, Debug)]
enum StepOp {
    Rot(Gate),
    Xy(usize, usize, f64),
    /// B interaction applied natively on the all-to-all backend.
    DirectZz(usize, usize, f64),
    Swap(usize, usize),
    /// ZZ(theta) on an adjacent pair, realized as two CZ-phi gates
    /// conjugated by X flips.
    ZzBlock(usize, usize, f64),
}

/// Single-qubit angles of one step: the C gates exp[+i(U/4 - mu/2) Z dt]
/// on the impurity qubits and D gates exp[+i(eps_c/2) Z dt] on the bath
/// qubits, expressed as RotZ angles. Zero angles are omitted.
fn diagonal_rotations(p: &SiamParams, dt: f64) -> Vec<StepOp> {
    let theta_c = (p.mu - p.u / 2.0) * dt;
    let theta_d = -p.epsilon_c * dt;
    let mut ops = Vec::new();
    if theta_c != 0.0 {
        ops.push(StepOp::Rot(Gate::rz(0, theta_c)));
        ops.push(StepOp::Rot(Gate::rz(2, theta_c)));
    }
    if theta_d != 0.0 {
        ops.push(StepOp::Rot(Gate::rz(1, theta_d)));
        ops.push(StepOp::Rot(Gate::rz(3, theta_d)));
    }
    ops
}

/// One XY-backend step: C and D rotations, the B gate
/// exp(-i (U/4) Z0 Z2 dt) applied directly, and XY(V dt) on each
/// impurity-bath pair.
fn xy_step_ops(p: &SiamParams, dt: f64) -> Vec<StepOp> {
    let mut ops = diagonal_rotations(p, dt);
    let theta_b = p.u * dt / 2.0;
    if theta_b != 0.0 {
        ops.push(StepOp::DirectZz(0, 2, theta_b));
    }
    let theta_v = p.v * dt;
    if theta_v != 0.0 {
        ops.push(StepOp::Xy(0, 1, theta_v));
        ops.push(StepOp::Xy(2, 3, theta_v));
    }
    ops
}

/// One CZ-backend step. Block order follows the parity; `optimize`
/// removes the rotations that cancel against the neighbouring step of an
/// odd/even pair (the odd step's closing Ry layer, the even step's
/// opening Ry layer), which leaves the pair's composed unitary exactly
/// unchanged.
fn cz_step_ops(p: &SiamParams, dt: f64, parity: StepParity, optimize: bool) -> Vec<StepOp> {
    let diag = diagonal_rotations(p, dt);

    let theta_b = p.u * dt / 2.0;
    let mut b_block = Vec::new();
    if theta_b != 0.0 {
        // Z0 Z2 routed to the adjacent pair (1, 2).
        b_block.push(StepOp::Swap(0, 1));
        b_block.push(StepOp::ZzBlock(1, 2, theta_b));
        b_block.push(StepOp::Swap(0, 1));
    }

    let theta_v = p.v * dt;
    let sandwich = |open: fn(usize) -> Gate, close: fn(usize) -> Gate, skip_open: bool, skip_close: bool| {
        let mut ops = Vec::new();
        if theta_v == 0.0 {
            return ops;
        }
        if !skip_open {
            ops.extend((0..SYSTEM_QUBITS).map(|q| StepOp::Rot(open(q))));
        }
        ops.push(StepOp::ZzBlock(0, 1, theta_v));
        ops.push(StepOp::ZzBlock(2, 3, theta_v));
        if !skip_close {
            ops.extend((0..SYSTEM_QUBITS).map(|q| StepOp::Rot(close(q))));
        }
        ops
    };
    // Rx(pi/2) maps Z to Y, Ry(-pi/2) maps Z to X; each sandwich turns
    // the ZZ blocks into the corresponding hybridization factor.
    let yy = |skip_open, skip_close| {
        sandwich(|q| Gate::rx(q, FRAC_PI_2), |q| Gate::rx(q, -FRAC_PI_2), skip_open, skip_close)
    };
    let xx = |skip_open, skip_close| {
        sandwich(|q| Gate::ry(q, -FRAC_PI_2), |q| Gate::ry(q, FRAC_PI_2), skip_open, skip_close)
    };

    let mut ops = Vec::new();
    match parity {
        StepParity::Odd => {
            ops.extend(diag);
            ops.extend(b_block);
            ops.extend(yy(false, false));
            ops.extend(xx(false, optimize));
        }
        StepParity::Even => {
            ops.extend(xx(optimize, false));
            ops.extend(yy(false, false));
            ops.extend(b_block);
            ops.extend(diag);
        }
    }
    ops
}

fn evolution_ops(plan: &TrotterPlan) -> Vec<StepOp> {
    let dt = plan.tau / plan.n_steps as f64;
    let mut ops = Vec::new();
    match plan.method {
        Method::Xy => {
            for _ in 0..plan.n_steps {
                ops.extend(xy_step_ops(&plan.params, dt));
            }
        }
        Method::Cz if plan.optimize_pairs => {
            for i in 0..plan.n_steps {
                let (parity, optimize) = if i % 2 == 0 {
                    // The closing layer may only be dropped when an even
                    // partner follows.
                    (StepParity::Odd, i + 1 < plan.n_steps)
                } else {
                    (StepParity::Even, true)
                };
                ops.extend(cz_step_ops(&plan.params, dt, parity, optimize));
            }
        }
        Method::Cz => {
            for _ in 0..plan.n_steps {
                ops.extend(cz_step_ops(&plan.params, dt, StepParity::Odd, false));
            }
        }
    }
    ops
}

fn lower(ops: &[StepOp]) -> Circuit {
    let mut c = Circuit::new(SYSTEM_QUBITS);
    for op in ops {
        match op {
            StepOp::Rot(g) => c.push(g.clone()),
            StepOp::Xy(a, b, th) => c.push(Gate::xy(*a, *b, *th)),
            StepOp::DirectZz(a, b, th) => c.push(Gate::zz(*a, *b, *th)),
            StepOp::Swap(a, b) => c.push(Gate::swap(*a, *b)),
            StepOp::ZzBlock(a, b, th) => push_zz_block(&mut c, *a, *b, *th),
        }
    }
    c
}

/// exp(-i (phi/2) Za Zb) up to the global phase e^{i phi/2}, from two
/// CZ-phi gates conjugated by X flips; see `zz_from_czphi`.
fn push_zz_block(c: &mut Circuit, a: usize, b: usize, phi: f64) {
    c.push(Gate::rx(b, PI));
    c.push(Gate::czphi(a, b, phi));
    c.push(Gate::rx(b, PI));
    c.push(Gate::rx(a, PI));
    c.push(Gate::czphi(a, b, phi));
    c.push(Gate::rx(a, PI));
}

/// The six-gate CZ-phi realization of exp(-i (phi/2) Z0 Z1) (up to
/// global phase) as a standalone two-qubit circuit.
pub fn zz_from_czphi(phi: f64) -> Circuit {
    let mut c = Circuit::new(2);
    push_zz_block(&mut c, 0, 1, phi);
    c
}

/// One XY-backend Trotter step of length dt. Panics if dt < 0.
pub fn build_xy_step(params: &SiamParams, dt: f64) -> Circuit {
    assert!(dt >= 0.0, "dt must be nonnegative");
    lower(&xy_step_ops(params, dt))
}

/// One CZ-backend Trotter step of length dt. Panics if dt < 0.
pub fn build_cz_step(params: &SiamParams, dt: f64, parity: StepParity, optimize: bool) -> Circuit {
    assert!(dt >= 0.0, "dt must be nonnegative");
    lower(&cz_step_ops(params, dt, parity, optimize))
}

/// The full n-step evolution circuit for the plan. The CZ backend emits
/// uniform (odd-parity) steps unless `optimize_pairs` asks for the
/// alternating cancellation-optimized form.
pub fn build_evolution(plan: &TrotterPlan) -> Circuit {
    lower(&evolution_ops(plan))
}

/// Tallies the plan's circuit in native backend units.
pub fn count_gates(plan: &TrotterPlan) -> GateCount {
    let mut count = GateCount::default();
    for op in evolution_ops(plan) {
        match op {
            StepOp::Rot(_) => count.single_qubit_rotations += 1,
            StepOp::Xy(..) => count.xy_gates += 1,
            StepOp::DirectZz(..) => count.zz_gates += 1,
            StepOp::Swap(..) => {
                count.swap_gates += 1;
                count.czphi_gates += 3;
            }
            StepOp::ZzBlock(..) => {
                count.zz_gates += 1;
                count.czphi_gates += 2;
            }
        }
    }
    count
}

/// State fidelity |<a|b>|^2.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(inner_product(a, b)?.norm_sqr())
}

/// Line-oriented text form of a circuit, one gate per line:
/// `GATE q0[,q1] [angle]`, angles in radians with 17 significant digits.
pub fn serialize_circuit(circuit: &Circuit) -> String {
    use crate::qsim::{Axis, GateKind};
    let mut out = String::new();
    for gate in circuit.gates() {
        let ts = gate.targets();
        let line = match gate.kind() {
            GateKind::RotX(th) => format!("RX {} {th:.16e}", ts[0]),
            GateKind::RotY(th) => format!("RY {} {th:.16e}", ts[0]),
            GateKind::RotZ(th) => format!("RZ {} {th:.16e}", ts[0]),
            GateKind::Hadamard => format!("H {}", ts[0]),
            GateKind::XY(th) => format!("XY {},{} {th:.16e}", ts[0], ts[1]),
            GateKind::ZZ(th) => format!("ZZ {},{} {th:.16e}", ts[0], ts[1]),
            GateKind::CZPhi(phi) => format!("CZPHI {},{} {phi:.16e}", ts[0], ts[1]),
            GateKind::Swap => format!("SWAP {},{}", ts[0], ts[1]),
            GateKind::ControlledPauli { axis, control_value } => {
                let name = match (axis, control_value) {
                    (Axis::X, false) => "CX0",
                    (Axis::X, true) => "CX1",
                    (Axis::Y, false) => "CY0",
                    (Axis::Y, true) => "CY1",
                    (Axis::Z, _) => unreachable!("rejected at construction"),
                };
                format!("{name} {},{}", ts[0], ts[1])
            }
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}
