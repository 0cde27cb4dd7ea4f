//! Single-ancilla Ramsey interferometry for the retarded impurity Green
//! function, on a register of four system qubits plus one ancilla.
//!
//! The protocol sandwiches the system evolution between two controlled
//! Pauli operators on the impurity and reads the complex amplitude
//! F(tau) = <U^dag sigma^alpha U sigma^beta> off the ancilla as
//! <sigma^z> + i <sigma^y>. The greater and lesser Green functions are
//! linear combinations of the four (alpha, beta) terms; the retarded
//! function follows as iG^R = i (G^> - G^<).
//!
//! Only the impurity Paulis are controlled; the evolution itself runs
//! unconditionally on the system qubits, so it can be either a Trotter
//! circuit or an exact 16x16 propagator applied per ancilla block.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::qsim::{
    apply_controlled_pauli_string, apply_gate_in_place, expectation_pauli, Axis, Circuit, Gate,
    StateVector,
};
use crate::siam::{self, SiamParams, Spin, SYSTEM_QUBITS};
use crate::trotter::{self, TrotterPlan};
use crate::{Error, Result};

/// Register index of the interferometry ancilla (the highest bit, so the
/// two ancilla sectors are contiguous 16-amplitude blocks).
pub const ANCILLA: usize = 4;

const IM: Complex64 = Complex64::new(0.0, 1.0);

/// How the system is propagated between the two controlled Paulis.
pub enum Evolution<'a> {
    /// A gate circuit on the system qubits only (width <= 4).
    Circuit(&'a Circuit),
    /// A dense 16x16 propagator, applied exactly.
    Exact(&'a DMatrix<Complex64>),
}

/// Uniform time grid tau_k = k * tau_max / n_points, k = 0..=n_points.
#[derive(Clone, Copy, Debug)]
pub struct TimeGrid {
    pub tau_max: f64,
    pub n_points: usize,
}

impl TimeGrid {
    pub fn new(tau_max: f64, n_points: usize) -> Result<TimeGrid> {
        if !tau_max.is_finite() || tau_max <= 0.0 {
            return Err(Error::Domain(format!("tau_max = {tau_max} must be positive")));
        }
        if n_points == 0 {
            return Err(Error::Domain("n_points must be at least 1".into()));
        }
        Ok(TimeGrid { tau_max, n_points })
    }

    pub fn tau(&self, k: usize) -> f64 {
        k as f64 * self.tau_max / self.n_points as f64
    }
}

/// Propagation backend for a measured series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GreenMethod {
    Xy,
    Cz,
    Exact,
}

impl GreenMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            GreenMethod::Xy => "xy",
            GreenMethod::Cz => "cz",
            GreenMethod::Exact => "exact",
        }
    }
}

/// Measured iG^R(tau_k) on a uniform grid. times[0] = 0 and the value
/// there equals 1 (the anticommutation sum rule) to numerical precision.
#[derive(Clone, Debug)]
pub struct GreenSeries {
    pub params: SiamParams,
    pub method: GreenMethod,
    /// Trotter steps that a point at tau_max would use; intermediate
    /// points scale proportionally. Unused by the exact method.
    pub n_steps_per_time: usize,
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl GreenSeries {
    /// CSV rendering with header `tau,re_igr,im_igr`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,re_igr,im_igr\n");
        for (t, v) in self.times.iter().zip(&self.values) {
            out.push_str(&format!("{},{},{}\n", t, v.re, v.im));
        }
        out
    }

    /// JSON document with full provenance.
    pub fn to_json(&self) -> String {
        #[derive(serde::Serialize)]
        struct Doc<'a> {
            params: &'a SiamParams,
            method: &'a str,
            n_steps: usize,
            times: &'a [f64],
            values_re: Vec<f64>,
            values_im: Vec<f64>,
        }
        serde_json::to_string_pretty(&Doc {
            params: &self.params,
            method: self.method.as_str(),
            n_steps: self.n_steps_per_time,
            times: &self.times,
            values_re: self.values.iter().map(|v| v.re).collect(),
            values_im: self.values.iter().map(|v| v.im).collect(),
        })
        .expect("green series serializes")
    }
}

/// The Pauli string standing in for sigma^axis on the impurity of the
/// given spin: the up mode (qubit 2) drags its Jordan-Wigner Z string
/// over qubits 0 and 1; the down mode (qubit 0) is string-free.
pub(crate) fn dressed_impurity(spin: Spin, axis: Axis) -> Vec<(usize, Axis)> {
    match spin {
        Spin::Down => vec![(0, axis)],
        Spin::Up => vec![(0, Axis::Z), (1, Axis::Z), (2, axis)],
    }
}

fn apply_evolution(amps: &mut [Complex64], evolution: &Evolution) -> Result<()> {
    match evolution {
        Evolution::Circuit(c) => {
            if c.n_qubits() > SYSTEM_QUBITS {
                return Err(Error::Domain(
                    "evolution circuit must act on system qubits only".into(),
                ));
            }
            for gate in c.gates() {
                apply_gate_in_place(amps, gate)?;
            }
        }
        Evolution::Exact(u) => {
            let dim = 1 << SYSTEM_QUBITS;
            if u.nrows() != dim || u.ncols() != dim {
                return Err(Error::Domain(format!(
                    "exact propagator must be {dim}x{dim}"
                )));
            }
            for block in 0..2 {
                let lo = block * dim;
                let v = DVector::from_column_slice(&amps[lo..lo + dim]);
                let w = *u * v;
                amps[lo..lo + dim].copy_from_slice(w.as_slice());
            }
        }
    }
    Ok(())
}

/// One Ramsey term F(tau) = <U^dag sigma^alpha U sigma^beta> on the
/// impurity of the default (down) spin. `alpha` and `beta` must be X or
/// Y; `ground` is the four-qubit system state the protocol starts from.
pub fn ramsey_term(
    alpha: Axis,
    beta: Axis,
    evolution: &Evolution,
    ground: &StateVector,
) -> Result<Complex64> {
    ramsey_term_spin(alpha, beta, evolution, ground, Spin::Down)
}

/// Spin-resolved Ramsey term; the up-spin impurity operators carry their
/// Jordan-Wigner strings inside the controlled gates.
pub fn ramsey_term_spin(
    alpha: Axis,
    beta: Axis,
    evolution: &Evolution,
    ground: &StateVector,
    spin: Spin,
) -> Result<Complex64> {
    if alpha == Axis::Z || beta == Axis::Z {
        return Err(Error::Domain("Ramsey Pauli axes must be x or y".into()));
    }
    if ground.n_qubits() != SYSTEM_QUBITS {
        return Err(Error::Domain(format!(
            "ground state must have {SYSTEM_QUBITS} qubits, got {}",
            ground.n_qubits()
        )));
    }

    // |0>_ancilla (x) |ground>, ancilla as the high bit.
    let dim = 1 << SYSTEM_QUBITS;
    let mut amps = vec![Complex64::new(0.0, 0.0); 2 * dim];
    amps[..dim].copy_from_slice(ground.amplitudes());

    apply_gate_in_place(&mut amps, &Gate::hadamard(ANCILLA))?;
    apply_controlled_pauli_string(&mut amps, ANCILLA, false, &dressed_impurity(spin, beta));
    apply_evolution(&mut amps, evolution)?;
    apply_controlled_pauli_string(&mut amps, ANCILLA, true, &dressed_impurity(spin, alpha));
    apply_gate_in_place(&mut amps, &Gate::hadamard(ANCILLA))?;

    let state = StateVector::from_raw(amps, SYSTEM_QUBITS + 1);
    let z = expectation_pauli(&state, Axis::Z, ANCILLA)?;
    let y = expectation_pauli(&state, Axis::Y, ANCILLA)?;
    Ok(Complex64::new(z, y))
}

/// The four Ramsey terms (F_xx, F_xy, F_yx, F_yy) of one time point.
fn ramsey_terms(
    evolution: &Evolution,
    ground: &StateVector,
    spin: Spin,
) -> Result<[Complex64; 4]> {
    use Axis::{X, Y};
    Ok([
        ramsey_term_spin(X, X, evolution, ground, spin)?,
        ramsey_term_spin(X, Y, evolution, ground, spin)?,
        ramsey_term_spin(Y, X, evolution, ground, spin)?,
        ramsey_term_spin(Y, Y, evolution, ground, spin)?,
    ])
}

/// G^>(tau) = -i <c(tau) c^dag>; expanding c = (x + iy)/2 in the four
/// measured terms gives the combination below. The lesser function has
/// the reversed operator order, which conjugates every term.
fn combine_terms([fxx, fxy, fyx, fyy]: [Complex64; 4]) -> (Complex64, Complex64) {
    let greater = -IM / 4.0 * (fxx - IM * fxy + IM * fyx + fyy);
    let lesser =
        IM / 4.0 * (fxx.conj() - IM * fxy.conj() + IM * fyx.conj() + fyy.conj());
    (greater, lesser)
}

/// Greater and lesser Green functions from one set of four Ramsey terms.
fn green_pair_spin(
    evolution: &Evolution,
    ground: &StateVector,
    spin: Spin,
) -> Result<(Complex64, Complex64)> {
    Ok(combine_terms(ramsey_terms(evolution, ground, spin)?))
}

/// G^>(tau) = -i <c(tau) c^dag(0)> for the spin-down impurity mode.
pub fn greater_green(evolution: &Evolution, ground: &StateVector) -> Result<Complex64> {
    Ok(green_pair_spin(evolution, ground, Spin::Down)?.0)
}

/// G^<(tau) = +i <c^dag(0) c(tau)> for the spin-down impurity mode.
pub fn lesser_green(evolution: &Evolution, ground: &StateVector) -> Result<Complex64> {
    Ok(green_pair_spin(evolution, ground, Spin::Down)?.1)
}

/// Measures iG^R(tau_k) = i [G^>(tau_k) - G^<(tau_k)] over the grid.
///
/// Trotter backends hold the step size fixed at tau_max / n_steps: the
/// point at tau_k uses N_k = max(1, ceil(n_steps k / n_points)) steps.
/// The exact backend diagonalizes once and propagates per point.
pub fn measure_green_series(
    params: &SiamParams,
    grid: &TimeGrid,
    method: GreenMethod,
    n_steps: usize,
) -> Result<GreenSeries> {
    measure_green_series_spin(params, grid, method, n_steps, Spin::Down)
}

pub fn measure_green_series_spin(
    params: &SiamParams,
    grid: &TimeGrid,
    method: GreenMethod,
    n_steps: usize,
    spin: Spin,
) -> Result<GreenSeries> {
    measure_series_impl(params, grid, method, n_steps, spin, |_, terms| Ok(terms))
}

/// Like [`measure_green_series`], but each of the eight raw ancilla
/// expectations per time point (real and imaginary parts of the four
/// Ramsey terms) is replaced by a `shots`-sample Bernoulli average,
/// modeling finite measurement statistics. Deterministic in `seed`.
pub fn measure_green_series_sampled(
    params: &SiamParams,
    grid: &TimeGrid,
    method: GreenMethod,
    n_steps: usize,
    shots: u64,
    seed: u64,
) -> Result<GreenSeries> {
    measure_series_impl(params, grid, method, n_steps, Spin::Down, |k, terms| {
        let mut sampled = [Complex64::default(); 4];
        for (j, term) in terms.iter().enumerate() {
            // One decorrelated substream per measured component; the odd
            // multiplier keeps distinct counters on distinct streams.
            let stream = |component: u64| {
                seed ^ (k as u64 * 8 + j as u64 * 2 + component)
                    .wrapping_mul(0x9E3779B97F4A7C15)
            };
            sampled[j] = Complex64::new(
                sample_shots(term.re, shots, stream(0))?,
                sample_shots(term.im, shots, stream(1))?,
            );
        }
        Ok(sampled)
    })
}

fn measure_series_impl(
    params: &SiamParams,
    grid: &TimeGrid,
    method: GreenMethod,
    n_steps: usize,
    spin: Spin,
    mut post: impl FnMut(usize, [Complex64; 4]) -> Result<[Complex64; 4]>,
) -> Result<GreenSeries> {
    if n_steps == 0 {
        return Err(Error::Domain("n_steps must be at least 1".into()));
    }
    let eig = siam::diagonalize(&siam::build_spin_hamiltonian(params));
    let (ground, _) = siam::ground_from_eigen(&eig)?;

    let mut times = Vec::with_capacity(grid.n_points + 1);
    let mut values = Vec::with_capacity(grid.n_points + 1);
    for k in 0..=grid.n_points {
        let tau = grid.tau(k);
        let terms = match method {
            GreenMethod::Exact => {
                let u = eig.propagator(tau);
                ramsey_terms(&Evolution::Exact(&u), &ground, spin)?
            }
            GreenMethod::Xy | GreenMethod::Cz => {
                let backend = match method {
                    GreenMethod::Xy => trotter::Method::Xy,
                    _ => trotter::Method::Cz,
                };
                let n_k = ((n_steps * k + grid.n_points - 1) / grid.n_points).max(1);
                let plan = TrotterPlan::new(backend, *params, n_k, tau, false)?;
                let circuit = trotter::build_evolution(&plan);
                ramsey_terms(&Evolution::Circuit(&circuit), &ground, spin)?
            }
        };
        let (greater, lesser) = combine_terms(post(k, terms)?);
        times.push(tau);
        values.push(IM * (greater - lesser));
    }
    Ok(GreenSeries {
        params: *params,
        method,
        n_steps_per_time: n_steps,
        times,
        values,
    })
}

/// State fidelity |<psi(tau_k) | psi_T(tau_k)>|^2 of the Trotterized
/// evolution of the excited state c^dag_{1 down} |GS> against the exact
/// propagator, over the same constant-step grid the Green-function
/// measurement uses.
pub fn fidelity_series(
    params: &SiamParams,
    grid: &TimeGrid,
    method: trotter::Method,
    n_steps: usize,
) -> Result<Vec<f64>> {
    if n_steps == 0 {
        return Err(Error::Domain("n_steps must be at least 1".into()));
    }
    let eig = siam::diagonalize(&siam::build_spin_hamiltonian(params));
    let (ground, _) = siam::ground_from_eigen(&eig)?;
    let cdag = siam::jw_creation_operator(1, Spin::Down)?;
    let raw = &cdag * DVector::from_column_slice(ground.amplitudes());
    let excited = StateVector::from_amplitudes(raw.as_slice().to_vec())?;

    let mut out = Vec::with_capacity(grid.n_points + 1);
    for k in 0..=grid.n_points {
        let tau = grid.tau(k);
        let exact_amps =
            eig.propagator(tau) * DVector::from_column_slice(excited.amplitudes());
        let exact = StateVector::from_raw(exact_amps.as_slice().to_vec(), SYSTEM_QUBITS);
        let n_k = ((n_steps * k + grid.n_points - 1) / grid.n_points).max(1);
        let plan = TrotterPlan::new(method, *params, n_k, tau, false)?;
        let trotterized =
            crate::qsim::apply_circuit(&excited, &trotter::build_evolution(&plan))?;
        out.push(trotter::fidelity(&exact, &trotterized)?);
    }
    Ok(out)
}

/// Impurity filling n_imp = <n_down + n_up> in the exact ground state.
pub fn measure_filling(params: &SiamParams) -> Result<f64> {
    let (gs, _) = siam::ground_state(params)?;
    let z0 = expectation_pauli(&gs, Axis::Z, 0)?;
    let z2 = expectation_pauli(&gs, Axis::Z, 2)?;
    Ok(1.0 - (z0 + z2) / 2.0)
}

/// Replaces a noiseless expectation value in [-1, 1] by the average of
/// `shots` Bernoulli outcomes drawn from a seeded generator; models
/// finite measurement statistics deterministically.
pub fn sample_shots(expectation: f64, shots: u64, seed: u64) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    if shots == 0 {
        return Err(Error::Domain("shots must be at least 1".into()));
    }
    let p = (1.0 + expectation) / 2.0;
    if !(-1e-12..=1.0 + 1e-12).contains(&p) {
        return Err(Error::Domain(format!(
            "expectation {expectation} outside [-1, 1]"
        )));
    }
    let p = p.clamp(0.0, 1.0);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let successes = (0..shots).filter(|_| rng.gen::<f64>() < p).count();
    Ok(2.0 * successes as f64 / shots as f64 - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::trotter::Method;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hf() -> SiamParams {
        SiamParams::new(4.0, 2.0, 0.0, 1.0).unwrap()
    }

    fn ground(p: &SiamParams) -> StateVector {
        siam::ground_state(p).unwrap().0
    }

    fn identity_evolution() -> Circuit {
        Circuit::new(SYSTEM_QUBITS)
    }

    /// Direct matrix-element route for F, bypassing the ancilla entirely.
    fn direct_term(
        alpha: Axis,
        beta: Axis,
        u: &DMatrix<Complex64>,
        gs: &StateVector,
    ) -> Complex64 {
        let sa = oracle::pauli_string_matrix(SYSTEM_QUBITS, &[(0, alpha)]);
        let sb = oracle::pauli_string_matrix(SYSTEM_QUBITS, &[(0, beta)]);
        let op = u.adjoint() * sa * u * sb;
        let v = DVector::from_column_slice(gs.amplitudes());
        (v.adjoint() * op * v)[(0, 0)]
    }

    #[test]
    fn ramsey_at_tau_zero_reduces_to_pauli_algebra() {
        let p = hf();
        let gs = ground(&p);
        let idc = identity_evolution();
        let ev = Evolution::Circuit(&idc);

        let fxx = ramsey_term(Axis::X, Axis::X, &ev, &gs).unwrap();
        assert!((fxx - Complex64::new(1.0, 0.0)).norm() <= 1e-12);

        // <XY> = i <Z>.
        let fxy = ramsey_term(Axis::X, Axis::Y, &ev, &gs).unwrap();
        let z0 = expectation_pauli(&gs, Axis::Z, 0).unwrap();
        assert!((fxy - Complex64::new(0.0, z0)).norm() <= 1e-12);

        assert!(ramsey_term(Axis::Z, Axis::X, &ev, &gs).is_err());
    }

    #[test]
    fn ramsey_matches_direct_matrix_element() {
        let p = hf();
        let gs = ground(&p);
        let u = siam::exact_propagator(&p, 1.0);
        let ev = Evolution::Exact(&u);
        for alpha in [Axis::X, Axis::Y] {
            for beta in [Axis::X, Axis::Y] {
                let protocol = ramsey_term(alpha, beta, &ev, &gs).unwrap();
                let direct = direct_term(alpha, beta, &u, &gs);
                assert!((protocol - direct).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn ramsey_matches_direct_for_random_trotter_circuits() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..10 {
            let u: f64 = rng.gen::<f64>() * 6.0;
            let params = SiamParams::new(
                u,
                rng.gen::<f64>() * u,
                rng.gen::<f64>() * 2.0 - 1.0,
                0.3 + rng.gen::<f64>() * 1.2,
            )
            .unwrap();
            let tau = rng.gen::<f64>() * 6.0;
            let plan = TrotterPlan::new(Method::Xy, params, 8, tau, false).unwrap();
            let circuit = trotter::build_evolution(&plan);
            let dense = oracle::circuit_matrix(&circuit, SYSTEM_QUBITS);
            let gs = match siam::ground_state(&params) {
                Ok((s, _)) => s,
                Err(_) => continue,
            };
            let protocol =
                ramsey_term(Axis::Y, Axis::X, &Evolution::Circuit(&circuit), &gs).unwrap();
            let direct = direct_term(Axis::Y, Axis::X, &dense, &gs);
            assert!((protocol - direct).norm() <= 1e-10);
        }
    }

    #[test]
    fn green_functions_at_tau_zero_count_particles() {
        let p = SiamParams::new(4.0, 1.0, 0.5, 1.0).unwrap();
        let gs = ground(&p);
        let idc = identity_evolution();
        let ev = Evolution::Circuit(&idc);

        // Spin-down filling, directly from the ground state.
        let n_down = (1.0 - expectation_pauli(&gs, Axis::Z, 0).unwrap()) / 2.0;

        let greater = greater_green(&ev, &gs).unwrap();
        assert!((greater - Complex64::new(0.0, -(1.0 - n_down))).norm() <= 1e-10);

        let lesser = lesser_green(&ev, &gs).unwrap();
        assert!((lesser - Complex64::new(0.0, n_down)).norm() <= 1e-10);
    }

    #[test]
    fn noninteracting_greater_green_closed_form() {
        let p = SiamParams::new(0.0, 0.0, 0.0, 1.0).unwrap();
        let gs = ground(&p);
        for tau in [0.4, 1.3, 2.9] {
            let u = siam::exact_propagator(&p, tau);
            let greater = greater_green(&Evolution::Exact(&u), &gs).unwrap();
            let expected = Complex64::new(0.0, -0.5) * Complex64::from_polar(1.0, -tau);
            assert!((greater - expected).norm() <= 1e-10);
        }
    }

    #[test]
    fn green_branches_match_lehmann_sums() {
        let p = hf();
        let fit = siam::lehmann_green(&p).unwrap();
        let gs = ground(&p);
        for tau in [0.0, 0.7, 1.9, 4.2] {
            let u = siam::exact_propagator(&p, tau);
            let ev = Evolution::Exact(&u);
            let particle: Complex64 = [(fit.alpha1, fit.omega1), (fit.alpha2, fit.omega2)]
                .iter()
                .map(|&(a, w)| Complex64::new(0.0, -a) * Complex64::from_polar(1.0, -w * tau))
                .sum();
            assert!((greater_green(&ev, &gs).unwrap() - particle).norm() <= 1e-8);
            // Hole branch mirrors the particle branch at half filling.
            let hole: Complex64 = [(fit.alpha1, fit.omega1), (fit.alpha2, fit.omega2)]
                .iter()
                .map(|&(a, w)| Complex64::new(0.0, a) * Complex64::from_polar(1.0, w * tau))
                .sum();
            assert!((lesser_green(&ev, &gs).unwrap() - hole).norm() <= 1e-8);
        }
    }

    #[test]
    fn series_sum_rule_and_reality_for_every_method() {
        let p = hf();
        let grid = TimeGrid::new(3.0, 6).unwrap();
        for method in [GreenMethod::Xy, GreenMethod::Cz, GreenMethod::Exact] {
            let series = measure_green_series(&p, &grid, method, 6).unwrap();
            assert_eq!(series.times.len(), 7);
            assert_eq!(series.times[0], 0.0);
            assert!(series.times.windows(2).all(|w| w[0] < w[1]));
            assert!((series.values[0] - Complex64::new(1.0, 0.0)).norm() <= 1e-8);
            for v in &series.values {
                assert!(v.im.abs() <= 1e-8, "{method:?} series not real: {v}");
            }
        }
    }

    #[test]
    fn exact_series_equals_two_cosine_form() {
        let p = hf();
        let fit = siam::lehmann_green(&p).unwrap();
        let grid = TimeGrid::new(6.0, 12).unwrap();
        let series = measure_green_series(&p, &grid, GreenMethod::Exact, 1).unwrap();
        for (t, v) in series.times.iter().zip(&series.values) {
            assert!((v.re - fit.evaluate(*t)).abs() <= 1e-8);
        }
    }

    #[test]
    fn trotterized_series_tracks_exact_and_converges() {
        let p = hf();
        let grid = TimeGrid::new(6.0, 12).unwrap();
        let exact = measure_green_series(&p, &grid, GreenMethod::Exact, 1).unwrap();
        let worst = |n: usize| -> f64 {
            let xy = measure_green_series(&p, &grid, GreenMethod::Xy, n).unwrap();
            xy.values
                .iter()
                .zip(&exact.values)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max)
        };
        let coarse = worst(24);
        let fine = worst(48);
        assert!(coarse <= 0.08, "24-step deviation {coarse}");
        assert!(fine <= 0.02, "48-step deviation {fine}");
        assert!(fine < coarse);
    }

    #[test]
    fn spin_up_series_equals_spin_down_at_half_filling() {
        let p = hf();
        let grid = TimeGrid::new(2.0, 4).unwrap();
        for method in [GreenMethod::Exact, GreenMethod::Xy] {
            let down =
                measure_green_series_spin(&p, &grid, method, 8, Spin::Down).unwrap();
            let up = measure_green_series_spin(&p, &grid, method, 8, Spin::Up).unwrap();
            for (a, b) in down.values.iter().zip(&up.values) {
                assert!((a - b).norm() <= 1e-8);
            }
        }
    }

    #[test]
    fn evolution_must_not_touch_ancilla() {
        let p = hf();
        let gs = ground(&p);
        let wide = Circuit::new(5);
        let result = ramsey_term(Axis::X, Axis::X, &Evolution::Circuit(&wide), &gs);
        assert!(matches!(result, Err(Error::Domain(_))));
    }

    #[test]
    fn filling_examples() {
        assert!((measure_filling(&hf()).unwrap() - 1.0).abs() <= 1e-10);

        // Deep potential: doubly occupied impurity. The admixture to the
        // bath scales as (v/mu)^2 per spin, so the stated limit is only
        // reached to that accuracy.
        let deep = SiamParams::new(0.0, 100.0, 0.0, 1.0).unwrap();
        assert!((measure_filling(&deep).unwrap() - 2.0).abs() <= 5e-4);
        let deeper = SiamParams::new(0.0, 1e4, 0.0, 1.0).unwrap();
        assert!((measure_filling(&deeper).unwrap() - 2.0).abs() <= 1e-6);

        // Generic point against an independent diagonal-weight route.
        let p = SiamParams::new(4.0, 1.0, 0.5, 1.0).unwrap();
        let (vals, vecs) = oracle::jacobi_hermitian(&siam::build_spin_hamiltonian(&p));
        assert!(vals[1] - vals[0] > 1e-9);
        let col = vecs.column(0);
        let oracle_n: f64 = col
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * ((i & 1) + ((i >> 2) & 1)) as f64)
            .sum();
        assert!((measure_filling(&p).unwrap() - oracle_n).abs() <= 1e-9);
    }

    #[test]
    fn shot_sampling_statistics() {
        assert_eq!(sample_shots(1.0, 17, 3).unwrap(), 1.0);
        assert_eq!(sample_shots(-1.0, 17, 3).unwrap(), -1.0);
        assert!(sample_shots(1.5, 17, 3).is_err());
        assert!(sample_shots(0.5, 0, 3).is_err());

        // Unbiased at zero with a million shots.
        let z = sample_shots(0.0, 1_000_000, 12345).unwrap();
        assert!(z.abs() < 0.005);

        // Mean over many seeds converges to the expectation.
        let shots = 1000u64;
        let expectation = 0.3;
        let mean: f64 = (0..100)
            .map(|seed| sample_shots(expectation, shots, seed).unwrap())
            .sum::<f64>()
            / 100.0;
        assert!((mean - expectation).abs() <= 4.0 / ((100 * shots) as f64).sqrt());

        // Determinism.
        assert_eq!(
            sample_shots(0.2, 5000, 9).unwrap(),
            sample_shots(0.2, 5000, 9).unwrap()
        );
    }

    #[test]
    fn sampled_series_is_deterministic_and_converges_to_noiseless() {
        let p = hf();
        let grid = TimeGrid::new(6.0, 12).unwrap();
        let clean = measure_green_series(&p, &grid, GreenMethod::Exact, 1).unwrap();

        let a = measure_green_series_sampled(&p, &grid, GreenMethod::Exact, 1, 4000, 7).unwrap();
        let b = measure_green_series_sampled(&p, &grid, GreenMethod::Exact, 1, 4000, 7).unwrap();
        assert_eq!(a.values, b.values);

        let other = measure_green_series_sampled(&p, &grid, GreenMethod::Exact, 1, 4000, 8).unwrap();
        assert_ne!(a.values, other.values);

        // Eight sampled expectations enter each point; at 10^6 shots the
        // combined deviation stays within a few standard errors.
        let fine =
            measure_green_series_sampled(&p, &grid, GreenMethod::Exact, 1, 1_000_000, 7).unwrap();
        let max_dev = fine
            .values
            .iter()
            .zip(&clean.values)
            .map(|(s, c)| (s - c).norm())
            .fold(0.0f64, f64::max);
        assert!(max_dev <= 0.01, "max sampled deviation {max_dev}");
        assert!(max_dev > 0.0);

        assert!(
            measure_green_series_sampled(&p, &grid, GreenMethod::Exact, 1, 0, 7).is_err()
        );
    }

    #[test]
    fn series_serialization_round_trips() {
        let p = hf();
        let grid = TimeGrid::new(1.0, 2).unwrap();
        let series = measure_green_series(&p, &grid, GreenMethod::Exact, 1).unwrap();
        let csv = series.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "tau,re_igr,im_igr");
        assert_eq!(csv.lines().count(), 4);
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[0], "0");
        assert!((first[1].parse::<f64>().unwrap() - 1.0).abs() <= 1e-8);
        // Shortest round-trip float formatting.
        assert_eq!(first[1].parse::<f64>().unwrap().to_string(), first[1]);

        let json = series.to_json();
        let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(doc["method"], "exact");
        assert_eq!(doc["times"].as_array().unwrap().len(), 3);
        assert!((doc["values_re"][0].as_f64().unwrap() - 1.0).abs() <= 1e-10);
    }
}
