//! Dense statevector simulation for registers of up to five qubits.
//!
//! Conventions: bit `k` of a basis index (bit 0 least significant) stores
//! qubit `k`, and qubit state |0> is the sigma^z = +1 eigenstate, so the
//! all-zeros state is the fermionic vacuum of the layers above. Two-qubit
//! gate matrices are written in the local basis where the first listed
//! target supplies the high bit of the 4x4 index. States carry no meaningful
//! global phase and are compared through overlaps, never componentwise.

use num_complex::Complex64;

use crate::{Error, Result};

/// Largest supported register: four system qubits plus one ancilla.
pub const MAX_QUBITS: usize = 5;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const IM: Complex64 = Complex64::new(0.0, 1.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Pauli axis label for rotations, controlled gates, and expectation values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Pure state of an n-qubit register as 2^n complex amplitudes.
#[derive(Clone, Debug)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    n_qubits: usize,
}

impl StateVector {
    /// Builds a normalized state from raw amplitudes. The length must be
    /// 2^n for n in 1..=[`MAX_QUBITS`] and the vector must not be null.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n_qubits = match amplitudes.len() {
            2 => 1,
            4 => 2,
            8 => 3,
            16 => 4,
            32 => 5,
            len => {
                return Err(Error::Domain(format!(
                    "amplitude vector length {len} is not 2^n for n in 1..={MAX_QUBITS}"
                )))
            }
        };
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-14 {
            return Err(Error::Domain("cannot normalize a null vector".into()));
        }
        let amplitudes = amplitudes.into_iter().map(|a| a / norm).collect();
        Ok(Self { amplitudes, n_qubits })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub(crate) fn from_raw(amplitudes: Vec<Complex64>, n_qubits: usize) -> Self {
        debug_assert_eq!(amplitudes.len(), 1 << n_qubits);
        Self { amplitudes, n_qubits }
    }
}

/// Prepares the computational basis state |index> on `n_qubits` qubits.
pub fn init_basis_state(n_qubits: usize, index: usize) -> Result<StateVector> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::Domain(format!(
            "register size {n_qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    let dim = 1usize << n_qubits;
    if index >= dim {
        return Err(Error::Domain(format!(
            "basis index {index} out of range for {n_qubits} qubits"
        )));
    }
    let mut amplitudes = vec![ZERO; dim];
    amplitudes[index] = ONE;
    Ok(StateVector { amplitudes, n_qubits })
}

/// Gate kinds with their angle conventions:
/// RotA(theta) = exp(-i (theta/2) sigma^A),
/// XY(theta)   = exp(-i (theta/2) (XX + YY)),
/// ZZ(theta)   = exp(-i (theta/2) ZZ),
/// CZPhi(phi)  = diag(1, 1, 1, e^{i phi}).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateKind {
    RotX(f64),
    RotY(f64),
    RotZ(f64),
    Hadamard,
    XY(f64),
    ZZ(f64),
    CZPhi(f64),
    Swap,
    /// Pauli on the second target, applied when the first (control) qubit
    /// is in the basis state selected by `control_value`.
    ControlledPauli { axis: Axis, control_value: bool },
}

impl GateKind {
    /// Number of target qubits the kind acts on.
    pub fn arity(self) -> usize {
        match self {
            GateKind::RotX(_) | GateKind::RotY(_) | GateKind::RotZ(_) | GateKind::Hadamard => 1,
            _ => 2,
        }
    }
}

/// A gate bound to specific target qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    kind: GateKind,
    targets: Vec<usize>,
}

/// Dense unitary of a gate in the local basis of its targets.
#[derive(Clone, Copy, Debug)]
pub enum GateMatrix {
    Single([[Complex64; 2]; 2]),
    Two([[Complex64; 4]; 4]),
}

impl Gate {
    /// Validates arity, target distinctness, and the controlled-Pauli axis
    /// restriction (controlled sigma^z is already covered by CZPhi(pi)).
    pub fn new(kind: GateKind, targets: &[usize]) -> Result<Gate> {
        let arity = kind.arity();
        if targets.len() != arity {
            return Err(Error::Domain(format!(
                "{kind:?} expects {arity} target(s), got {}",
                targets.len()
            )));
        }
        if arity == 2 && targets[0] == targets[1] {
            return Err(Error::Domain(format!(
                "{kind:?} requires two distinct targets, got {targets:?}"
            )));
        }
        if let GateKind::ControlledPauli { axis: Axis::Z, .. } = kind {
            return Err(Error::Domain(
                "controlled Pauli supports x and y axes only".into(),
            ));
        }
        Ok(Gate { kind, targets: targets.to_vec() })
    }

    pub fn rx(target: usize, theta: f64) -> Gate {
        Gate { kind: GateKind::RotX(theta), targets: vec![target] }
    }

    pub fn ry(target: usize, theta: f64) -> Gate {
        Gate { kind: GateKind::RotY(theta), targets: vec![target] }
    }

    pub fn rz(target: usize, theta: f64) -> Gate {
        Gate { kind: GateKind::RotZ(theta), targets: vec![target] }
    }

    pub fn hadamard(target: usize) -> Gate {
        Gate { kind: GateKind::Hadamard, targets: vec![target] }
    }

    pub fn xy(a: usize, b: usize, theta: f64) -> Gate {
        assert_ne!(a, b, "XY targets must differ");
        Gate { kind: GateKind::XY(theta), targets: vec![a, b] }
    }

    pub fn zz(a: usize, b: usize, theta: f64) -> Gate {
        assert_ne!(a, b, "ZZ targets must differ");
        Gate { kind: GateKind::ZZ(theta), targets: vec![a, b] }
    }

    pub fn czphi(a: usize, b: usize, phi: f64) -> Gate {
        assert_ne!(a, b, "CZPhi targets must differ");
        Gate { kind: GateKind::CZPhi(phi), targets: vec![a, b] }
    }

    pub fn swap(a: usize, b: usize) -> Gate {
        assert_ne!(a, b, "Swap targets must differ");
        Gate { kind: GateKind::Swap, targets: vec![a, b] }
    }

    /// Controlled sigma^axis on `target`, fired when `control` reads
    /// `control_value`. Axis must be x or y.
    pub fn controlled_pauli(control: usize, target: usize, axis: Axis, control_value: bool) -> Gate {
        assert_ne!(control, target, "control and target must differ");
        assert!(axis != Axis::Z, "controlled Pauli supports x and y axes only");
        Gate {
            kind: GateKind::ControlledPauli { axis, control_value },
            targets: vec![control, target],
        }
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// Dense unitary in the target-local basis; see the module docs for the
    /// index ordering of two-qubit matrices.
    pub fn matrix(&self) -> GateMatrix {
        match self.kind {
            GateKind::RotX(t) => {
                let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
                GateMatrix::Single([[re(c), -IM * s], [-IM * s, re(c)]])
            }
            GateKind::RotY(t) => {
                let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
                GateMatrix::Single([[re(c), re(-s)], [re(s), re(c)]])
            }
            GateKind::RotZ(t) => GateMatrix::Single([
                [Complex64::from_polar(1.0, -t / 2.0), ZERO],
                [ZERO, Complex64::from_polar(1.0, t / 2.0)],
            ]),
            GateKind::Hadamard => {
                let h = re(std::f64::consts::FRAC_1_SQRT_2);
                GateMatrix::Single([[h, h], [h, -h]])
            }
            GateKind::XY(t) => {
                // Identity on |00> and |11>; a rotation by the *full* angle
                // in the single-excitation block, because XX and YY add up.
                let (c, s) = (t.cos(), t.sin());
                GateMatrix::Two([
                    [ONE, ZERO, ZERO, ZERO],
                    [ZERO, re(c), -IM * s, ZERO],
                    [ZERO, -IM * s, re(c), ZERO],
                    [ZERO, ZERO, ZERO, ONE],
                ])
            }
            GateKind::ZZ(t) => {
                let even = Complex64::from_polar(1.0, -t / 2.0);
                let odd = Complex64::from_polar(1.0, t / 2.0);
                GateMatrix::Two([
                    [even, ZERO, ZERO, ZERO],
                    [ZERO, odd, ZERO, ZERO],
                    [ZERO, ZERO, odd, ZERO],
                    [ZERO, ZERO, ZERO, even],
                ])
            }
            GateKind::CZPhi(phi) => GateMatrix::Two([
                [ONE, ZERO, ZERO, ZERO],
                [ZERO, ONE, ZERO, ZERO],
                [ZERO, ZERO, ONE, ZERO],
                [ZERO, ZERO, ZERO, Complex64::from_polar(1.0, phi)],
            ]),
            GateKind::Swap => GateMatrix::Two([
                [ONE, ZERO, ZERO, ZERO],
                [ZERO, ZERO, ONE, ZERO],
                [ZERO, ONE, ZERO, ZERO],
                [ZERO, ZERO, ZERO, ONE],
            ]),
            GateKind::ControlledPauli { axis, control_value } => {
                let p = pauli(axis);
                let mut m = [[ZERO; 4]; 4];
                // The control is the first target, i.e. the high local bit.
                let (fire, rest) = if control_value { (1, 0) } else { (0, 1) };
                for i in 0..2 {
                    for j in 0..2 {
                        m[2 * fire + i][2 * fire + j] = p[i][j];
                    }
                    m[2 * rest + i][2 * rest + i] = ONE;
                }
                GateMatrix::Two(m)
            }
        }
    }
}

pub(crate) fn pauli(axis: Axis) -> [[Complex64; 2]; 2] {
    match axis {
        Axis::X => [[ZERO, ONE], [ONE, ZERO]],
        Axis::Y => [[ZERO, -IM], [IM, ZERO]],
        Axis::Z => [[ONE, ZERO], [ZERO, -ONE]],
    }
}

/// Ordered gate list for a fixed register width.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    /// Empty circuit on `n_qubits` qubits (1..=[`MAX_QUBITS`]).
    pub fn new(n_qubits: usize) -> Circuit {
        assert!(
            (1..=MAX_QUBITS).contains(&n_qubits),
            "register size {n_qubits} outside 1..={MAX_QUBITS}"
        );
        Circuit { n_qubits, gates: Vec::new() }
    }

    /// Appends a gate. Panics if a target lies outside the register; the
    /// builders construct targets statically, so that is a programming error.
    pub fn push(&mut self, gate: Gate) {
        assert!(
            gate.targets.iter().all(|&q| q < self.n_qubits),
            "gate targets {:?} outside register of {} qubits",
            gate.targets,
            self.n_qubits
        );
        self.gates.push(gate);
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }
}

/// Applies one gate and returns the transformed state.
pub fn apply_gate(state: &StateVector, gate: &Gate) -> Result<StateVector> {
    let mut out = state.clone();
    apply_gate_in_place(out.amplitudes_mut(), gate)?;
    Ok(out)
}

/// Applies the circuit's gates in list order. The circuit may act on a
/// register prefix of a wider state (e.g. system gates on a state that also
/// carries an ancilla).
pub fn apply_circuit(state: &StateVector, circuit: &Circuit) -> Result<StateVector> {
    if circuit.n_qubits() > state.n_qubits() {
        return Err(Error::Domain(format!(
            "circuit on {} qubits cannot act on a {}-qubit state",
            circuit.n_qubits(),
            state.n_qubits()
        )));
    }
    let mut out = state.clone();
    for gate in circuit.gates() {
        apply_gate_in_place(out.amplitudes_mut(), gate)?;
    }
    Ok(out)
}

pub(crate) fn apply_gate_in_place(amps: &mut [Complex64], gate: &Gate) -> Result<()> {
    let dim = amps.len();
    if gate.targets.iter().any(|&q| (1usize << q) >= dim) {
        return Err(Error::Domain(format!(
            "gate targets {:?} outside register",
            gate.targets
        )));
    }
    match gate.matrix() {
        GateMatrix::Single(m) => apply_single(amps, gate.targets[0], &m),
        GateMatrix::Two(m) => apply_two(amps, gate.targets[0], gate.targets[1], &m),
    }
    Ok(())
}

fn apply_single(amps: &mut [Complex64], q: usize, m: &[[Complex64; 2]; 2]) {
    let bit = 1usize << q;
    for i in 0..amps.len() {
        if i & bit == 0 {
            let (a0, a1) = (amps[i], amps[i | bit]);
            amps[i] = m[0][0] * a0 + m[0][1] * a1;
            amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
        }
    }
}

fn apply_two(amps: &mut [Complex64], hi: usize, lo: usize, m: &[[Complex64; 4]; 4]) {
    let (hb, lb) = (1usize << hi, 1usize << lo);
    let mask = hb | lb;
    for i in 0..amps.len() {
        if i & mask == 0 {
            let idx = [i, i | lb, i | hb, i | mask];
            let v = [amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]];
            for r in 0..4 {
                amps[idx[r]] = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2] + m[r][3] * v[3];
            }
        }
    }
}

/// Applies a Pauli string to the amplitudes, restricted to the basis states
/// where `control` reads `control_value`. Used by the interferometry layer
/// for Jordan-Wigner-dressed controlled operators.
pub(crate) fn apply_controlled_pauli_string(
    amps: &mut [Complex64],
    control: usize,
    control_value: bool,
    string: &[(usize, Axis)],
) {
    let cbit = 1usize << control;
    let mut flip = 0usize;
    for &(q, axis) in string {
        debug_assert_ne!(q, control);
        if axis != Axis::Z {
            flip |= 1 << q;
        }
    }
    let want = if control_value { cbit } else { 0 };
    let mut out = amps.to_vec();
    for i in 0..amps.len() {
        if i & cbit != want {
            continue;
        }
        // |i> -> phase * |i ^ flip>; accumulate the phase factor per qubit.
        let j = i ^ flip;
        let mut phase = ONE;
        for &(q, axis) in string {
            let bit = (i >> q) & 1;
            match axis {
                Axis::X => {}
                Axis::Y => phase *= if bit == 0 { IM } else { -IM },
                Axis::Z => {
                    if bit == 1 {
                        phase = -phase;
                    }
                }
            }
        }
        out[j] = phase * amps[i];
    }
    amps.copy_from_slice(&out);
}

/// Expectation value <state| sigma^axis_qubit |state>.
pub fn expectation_pauli(state: &StateVector, axis: Axis, qubit: usize) -> Result<f64> {
    if qubit >= state.n_qubits() {
        return Err(Error::Domain(format!(
            "qubit {qubit} out of range for {}-qubit state",
            state.n_qubits()
        )));
    }
    let bit = 1usize << qubit;
    let amps = state.amplitudes();
    let mut acc = 0.0;
    match axis {
        Axis::Z => {
            for (i, a) in amps.iter().enumerate() {
                let sign = if i & bit == 0 { 1.0 } else { -1.0 };
                acc += sign * a.norm_sqr();
            }
        }
        Axis::X => {
            for i in 0..amps.len() {
                if i & bit == 0 {
                    acc += 2.0 * (amps[i].conj() * amps[i | bit]).re;
                }
            }
        }
        Axis::Y => {
            for i in 0..amps.len() {
                if i & bit == 0 {
                    acc += 2.0 * (amps[i].conj() * amps[i | bit]).im;
                }
            }
        }
    }
    Ok(acc)
}

/// Inner product <a|b>.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    if a.n_qubits() != b.n_qubits() {
        return Err(Error::Domain(format!(
            "dimension mismatch: {} vs {} qubits",
            a.n_qubits(),
            b.n_qubits()
        )));
    }
    Ok(a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| x.conj() * y)
        .sum())
}
