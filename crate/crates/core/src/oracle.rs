//! Slow, dense reference implementations used by the test suite.
//!
//! Everything here recomputes results through an independent route (explicit
//! matrix embeddings, full-matrix Jacobi diagonalization, Taylor-series
//! exponentials) so the fast statevector and solver paths can be checked
//! against them. Nothing in this module is part of the supported API.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::qsim::{pauli, Axis, Circuit, Gate, GateMatrix, StateVector};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense 2^n x 2^n unitary of a gate acting on an n-qubit register.
///
/// Local indices are folded independently of the statevector kernels: the
/// first target supplies the high bit of the local index.
pub fn embed_gate(gate: &Gate, n_qubits: usize) -> DMatrix<Complex64> {
    let dim = 1usize << n_qubits;
    let ts = gate.targets();
    let mut out = DMatrix::zeros(dim, dim);
    match gate.matrix() {
        GateMatrix::Single(m) => {
            let bit = 1usize << ts[0];
            for r in 0..dim {
                for c in 0..dim {
                    if (r ^ c) & !bit != 0 {
                        continue;
                    }
                    out[(r, c)] = m[(r >> ts[0]) & 1][(c >> ts[0]) & 1];
                }
            }
        }
        GateMatrix::Two(m) => {
            let mask = (1usize << ts[0]) | (1usize << ts[1]);
            for r in 0..dim {
                for c in 0..dim {
                    if (r ^ c) & !mask != 0 {
                        continue;
                    }
                    let lr = (((r >> ts[0]) & 1) << 1) | ((r >> ts[1]) & 1);
                    let lc = (((c >> ts[0]) & 1) << 1) | ((c >> ts[1]) & 1);
                    out[(r, c)] = m[lr][lc];
                }
            }
        }
    }
    out
}

/// Product of the circuit's embedded gates, later gates multiplied on the
/// left, embedded into a register of `n_qubits >= circuit.n_qubits()`.
pub fn circuit_matrix(circuit: &Circuit, n_qubits: usize) -> DMatrix<Complex64> {
    assert!(n_qubits >= circuit.n_qubits());
    let dim = 1usize << n_qubits;
    let mut u = DMatrix::identity(dim, dim);
    for gate in circuit.gates() {
        u = embed_gate(gate, n_qubits) * u;
    }
    u
}

/// Applies a dense operator to a state without renormalizing.
pub fn apply_matrix(m: &DMatrix<Complex64>, state: &StateVector) -> StateVector {
    let dim = state.amplitudes().len();
    assert_eq!(m.nrows(), dim);
    assert_eq!(m.ncols(), dim);
    let v = DVector::from_column_slice(state.amplitudes());
    let w = m * v;
    StateVector::from_raw(w.iter().copied().collect(), state.n_qubits())
}

/// Full eigensystem of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns eigenvalues ascending with matching eigenvector
/// columns. Iterates until the off-diagonal Frobenius norm drops below
/// 1e-12 of the matrix norm, capped at 50 sweeps.
pub fn jacobi_hermitian(a: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    let mut m = a.clone();
    let mut v: DMatrix<Complex64> = DMatrix::identity(n, n);
    let scale = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let tol = 1e-12 * scale.max(1e-300);
    for _ in 0..50 {
        let off = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j)
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let b = m[(p, q)];
                if b.norm() <= 1e-300 {
                    continue;
                }
                // Zero the (p, q) pivot: with b = |b| e^{i beta}, the
                // rotation [[c, -s e^{i beta}], [s e^{-i beta}, c]] reduces
                // to the real symmetric case with cot(2 theta) = tau.
                let tau = (m[(p, p)].re - m[(q, q)].re) / (2.0 * b.norm());
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let phase = b / b.norm();
                let mut j: DMatrix<Complex64> = DMatrix::identity(n, n);
                j[(p, p)] = Complex64::new(c, 0.0);
                j[(p, q)] = -phase * s;
                j[(q, p)] = phase.conj() * s;
                j[(q, q)] = Complex64::new(c, 0.0);
                m = j.adjoint() * m * &j;
                v *= j;
            }
        }
    }
    let evals: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| evals[i].partial_cmp(&evals[j]).unwrap());
    let sorted: Vec<f64> = order.iter().map(|&i| evals[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        vecs.set_column(new, &v.column(old));
    }
    (sorted, vecs)
}

/// Matrix exponential by scaling-and-squaring over a 30-term Taylor series.
pub fn expm_taylor(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    let norm = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let mut squarings = 0i32;
    let mut scaled = norm;
    while scaled > 0.25 {
        scaled /= 2.0;
        squarings += 1;
    }
    let b = a.unscale(2f64.powi(squarings));
    let mut result: DMatrix<Complex64> = DMatrix::identity(n, n);
    let mut term: DMatrix<Complex64> = DMatrix::identity(n, n);
    for k in 1..=30 {
        term = (&term * &b).unscale(k as f64);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Composite midpoint rule on n uniform panels.
pub fn midpoint_integral<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
    assert!(n > 0);
    assert!(hi >= lo);
    let h = (hi - lo) / n as f64;
    (0..n).map(|k| f(lo + (k as f64 + 0.5) * h)).sum::<f64>() * h
}

/// Dense matrix of a product of Paulis on distinct qubits (identity
/// elsewhere), built entrywise from the index bits.
pub fn pauli_string_matrix(n_qubits: usize, string: &[(usize, Axis)]) -> DMatrix<Complex64> {
    let dim = 1usize << n_qubits;
    let mut mask = 0usize;
    for &(q, _) in string {
        assert!(q < n_qubits);
        assert_eq!(mask & (1 << q), 0, "duplicate qubit {q} in Pauli string");
        mask |= 1 << q;
    }
    let mut out = DMatrix::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            if (r ^ c) & !mask != 0 {
                continue;
            }
            let mut val = ONE;
            for &(q, axis) in string {
                val *= pauli(axis)[(r >> q) & 1][(c >> q) & 1];
            }
            out[(r, c)] = val;
        }
    }
    out
}

/// Global-phase-insensitive agreement of two same-shape operators:
/// |tr(A^dag B)| / dim, which is 1 exactly when A = e^{i theta} B unitary.
pub fn trace_overlap(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    (a.adjoint() * b).trace().norm() / a.nrows() as f64
}

/// The fermionic Anderson Hamiltonian assembled directly from products of
/// Jordan-Wigner creation operators:
///
///   U n_{1d} n_{1u} - mu (n_{1d} + n_{1u}) + eps_c (n_{2d} + n_{2u})
///   + V sum_s (c^dag_{1s} c_{2s} + c^dag_{2s} c_{1s})
///
/// Equals the spin-form Hamiltonian plus (U/4 - mu + eps_c) times the
/// identity; the tests check that equivalence.
pub fn fermionic_hamiltonian(p: &crate::siam::SiamParams) -> DMatrix<Complex64> {
    use crate::siam::{jw_creation_operator, Spin};
    let cdag = |site, spin| jw_creation_operator(site, spin).unwrap();
    let number = |site, spin| {
        let cd = cdag(site, spin);
        &cd * cd.adjoint()
    };
    let mut h = number(1, Spin::Down) * number(1, Spin::Up) * Complex64::new(p.u, 0.0);
    h += (number(1, Spin::Down) + number(1, Spin::Up)).scale(-p.mu);
    h += (number(2, Spin::Down) + number(2, Spin::Up)).scale(p.epsilon_c);
    for spin in [Spin::Down, Spin::Up] {
        let hop = cdag(1, spin) * cdag(2, spin).adjoint();
        h += (&hop + hop.adjoint()).scale(p.v);
    }
    h
}

/// Spectral-norm distance between operators up to a global phase:
/// min over theta of the 2-norm of A - e^{i theta} B, with theta chosen
/// Frobenius-optimally as arg tr(B^dag A).
pub fn operator_phase_error(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let overlap: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| y.conj() * x).sum();
    let phase = if overlap.norm() > 1e-300 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    let d = a - b.map(|x| phase * x);
    let (evals, _) = jacobi_hermitian(&(d.adjoint() * &d));
    evals.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Particle-branch Lehmann poles of the spin-down impurity Green
/// function by brute force: Jacobi diagonalization of the number-basis
/// Hamiltonian and explicit residues of c^dag_{1 down} on the ground
/// state. Returns the two dominant (omega, alpha) pairs, omega ascending;
/// a second entry of weight 0 duplicates the first frequency.
pub fn lehmann_poles_jacobi(p: &crate::siam::SiamParams) -> [(f64, f64); 2] {
    let (vals, vecs) = jacobi_hermitian(&fermionic_hamiltonian(p));
    let cdag = crate::siam::jw_creation_operator(1, crate::siam::Spin::Down)
        .expect("site 1 exists");
    let excited = &cdag * vecs.column(0);

    let mut poles: Vec<(f64, f64)> = Vec::new();
    for j in 0..vals.len() {
        let alpha = vecs.column(j).dotc(&excited).norm_sqr();
        if alpha <= 1e-12 {
            continue;
        }
        let omega = (vals[j] - vals[0]).max(0.0);
        match poles.iter_mut().find(|(w, _)| (*w - omega).abs() <= 1e-9) {
            Some((_, a)) => *a += alpha,
            None => poles.push((omega, alpha)),
        }
    }
    poles.sort_by(|a, b| a.0.total_cmp(&b.0));
    if poles.len() > 2 {
        poles.sort_by(|a, b| b.1.total_cmp(&a.1));
        poles.truncate(2);
        poles.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let first = poles[0];
    let second = if poles.len() > 1 { poles[1] } else { (first.0, 0.0) };
    [first, second]
}

/// Quasiparticle weight at fixed bath parameters by brute force: Jacobi
/// diagonalization of the number-basis Hamiltonian, explicit Lehmann
/// residues of c^dag_{1 down}, and the analytic difference quotient of
/// the assembled self-energy. Returns 0 on the insulating branch.
fn classical_z_at(u: f64, v: f64, t_star: f64) -> f64 {
    let p = crate::siam::SiamParams::with_t_star(u, u / 2.0, 0.0, v, t_star)
        .expect("half-filled parameters are valid");
    let [(w1, a1), (w2, a2)] = lehmann_poles_jacobi(&p);

    let h = 1e-3 * t_star;
    let (w1sq, w2sq) = (w1 * w1, w2 * w2);
    let zeta_sq = 2.0 * (a1 * w2sq + a2 * w1sq);
    if zeta_sq <= h * h {
        return 0.0;
    }
    if (w1sq * w2sq - v * v * zeta_sq).abs() / zeta_sq >= 0.5 {
        return 0.0;
    }
    let slope = (w1sq + w2sq - zeta_sq - v * v) / (h * h - zeta_sq);
    (1.0 / (1.0 - slope)).clamp(0.0, 1.0)
}

/// Fully classical half-filled two-site DMFT: iterate the weight from
/// [`classical_z_at`] through V = sqrt(Z) t* with the same floor,
/// tolerance, and iteration cap as the production loop.
pub fn classical_dmft_z(u: f64, t_star: f64) -> f64 {
    let v_floor = 1e-4 * t_star;
    let v_tol = 1e-4 * t_star;
    let mut v = t_star;
    let mut z = 1.0;
    for _ in 0..100 {
        z = classical_z_at(u, v, t_star);
        let v_new = z.sqrt() * t_star;
        if v_new < v_floor {
            return 0.0;
        }
        if (v_new - v).abs() < v_tol {
            return z;
        }
        v = v_new;
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<Complex64> {
        let raw = DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        (&raw + raw.adjoint()).unscale(2.0)
    }

    #[test]
    fn jacobi_matches_nalgebra_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..5 {
            let h = random_hermitian(&mut rng, 16);
            let (vals, vecs) = jacobi_hermitian(&h);
            let mut reference = nalgebra::SymmetricEigen::new(h.clone())
                .eigenvalues
                .iter()
                .copied()
                .collect::<Vec<f64>>();
            reference.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (x, y) in vals.iter().zip(&reference) {
                assert!((x - y).abs() < 1e-10);
            }
            // Residual check ties the vectors to the values.
            for k in 0..16 {
                let col = vecs.column(k);
                let resid = &h * col - col.map(|x| x * vals[k]);
                assert!(resid.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt() < 1e-10);
            }
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn expm_reproduces_single_qubit_rotation() {
        // exp(-i (theta/2) X) must equal the RotX gate matrix.
        let theta = 0.731;
        let x = pauli_string_matrix(1, &[(0, Axis::X)]);
        let exact = expm_taylor(&x.map(|e| e * Complex64::new(0.0, -theta / 2.0)));
        let gate = embed_gate(&Gate::rx(0, theta), 1);
        assert!((&exact - &gate).iter().map(|x| x.norm()).fold(0.0, f64::max) < 1e-14);
    }

    #[test]
    fn expm_of_antihermitian_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let h = random_hermitian(&mut rng, 8).map(|e| e * Complex64::new(0.0, -3.0));
        let u = expm_taylor(&h);
        let err = (u.adjoint() * &u - DMatrix::<Complex64>::identity(8, 8))
            .iter()
            .map(|x| x.norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn midpoint_rule_on_polynomials_and_periods() {
        let third = midpoint_integral(|x| x * x, 0.0, 1.0, 2000);
        assert!((third - 1.0 / 3.0).abs() < 1e-7);
        let zero = midpoint_integral(f64::sin, 0.0, 2.0 * PI, 1024);
        assert!(zero.abs() < 1e-12);
    }

    #[test]
    fn pauli_strings_square_to_identity() {
        let s = pauli_string_matrix(3, &[(0, Axis::Z), (2, Axis::Y)]);
        let sq = &s * &s;
        let err = (sq - DMatrix::<Complex64>::identity(8, 8))
            .iter()
            .map(|x| x.norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-15);
        // Hermiticity.
        assert!((&s - s.adjoint()).iter().map(|x| x.norm()).fold(0.0, f64::max) < 1e-15);
    }

    #[test]
    fn circuit_matrix_orders_left_to_right() {
        let mut c = Circuit::new(1);
        c.push(Gate::rx(0, 0.7));
        c.push(Gate::rz(0, 0.9));
        let composed = circuit_matrix(&c, 1);
        let manual = embed_gate(&Gate::rz(0, 0.9), 1) * embed_gate(&Gate::rx(0, 0.7), 1);
        assert!((&composed - &manual).iter().map(|x| x.norm()).fold(0.0, f64::max) < 1e-15);
    }

    #[test]
    fn phase_error_ignores_global_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let h = random_hermitian(&mut rng, 4).map(|e| e * Complex64::new(0.0, 1.0));
        let u = expm_taylor(&h);
        let rotated = u.map(|e| e * Complex64::from_polar(1.0, 1.234));
        assert!(operator_phase_error(&u, &rotated) < 1e-12);
    }

    #[test]
    fn phase_error_known_value_for_diagonal_pair() {
        // A = I, B = diag(1, e^{i d}): optimal phase splits the angle and
        // the distance is 2 sin(d/4).
        let delta = 0.3;
        let a = DMatrix::<Complex64>::identity(2, 2);
        let mut b = DMatrix::<Complex64>::identity(2, 2);
        b[(1, 1)] = Complex64::from_polar(1.0, delta);
        let expected = 2.0 * (delta / 4.0).sin();
        assert!((operator_phase_error(&a, &b) - expected).abs() < 1e-12);
    }

    #[test]
    fn classical_weight_limits() {
        // Closed form at u=4, v=1 is Z = 9/13; the finite difference step
        // h = 1e-3 displaces it at the 1e-8 level.
        assert!((classical_z_at(4.0, 1.0, 1.0) - 9.0 / 13.0).abs() <= 1e-7);
        assert!((classical_z_at(0.0, 1.0, 1.0) - 1.0).abs() <= 1e-12);
        assert!((classical_dmft_z(0.0, 1.0) - 1.0).abs() <= 1e-12);
        assert_eq!(classical_dmft_z(8.0, 1.0), 0.0);
    }
}
