//! Release-gating acceptance checks, shared by the `acceptance`
//! integration-test target and `qdmft selftest`.
//!
//! Each criterion measures its own quantities, compares them against fixed
//! thresholds, and reports a single pass/fail line with the measured
//! numbers. Criteria are independent and deterministic; the random draws
//! use fixed seeds.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::analysis::{self, FrequencyGrid};
use crate::dmft::{self, DmftConfig, Phase};
use crate::interferometry::{self, Evolution, GreenMethod, GreenSeries, TimeGrid};
use crate::oracle;
use crate::qsim::Axis;
use crate::siam::{self, SiamParams, Spin, SYSTEM_QUBITS};
use crate::trotter::{self, Method, TrotterPlan};

pub const N_CRITERIA: usize = 12;

/// Outcome of one acceptance criterion.
#[derive(Clone, Debug)]
pub struct CriterionReport {
    /// 1-based index, matching the release checklist.
    pub index: usize,
    pub name: &'static str,
    pub passed: bool,
    /// Measured values against their thresholds.
    pub detail: String,
    pub seconds: f64,
}

impl CriterionReport {
    /// The one-line pass/fail summary.
    pub fn line(&self) -> String {
        format!(
            "criterion {:02} {} {:<20} [{:7.2} s] {}",
            self.index,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.seconds,
            self.detail
        )
    }
}

/// Runs a single criterion by 1-based index.
///
/// Panics if the index is outside 1..=12 or if a criterion's own
/// machinery breaks (an invariant violation, as opposed to a measured
/// value missing its threshold, which is a FAIL report).
pub fn criterion(index: usize) -> CriterionReport {
    let started = Instant::now();
    let (name, (passed, detail)) = match index {
        1 => ("fidelity-floor", fidelity_floor()),
        2 => ("method-ordering", method_ordering()),
        3 => ("trotter-scaling", trotter_scaling()),
        4 => ("interferometry", interferometry_oracle()),
        5 => ("jw-algebra", jw_algebra()),
        6 => ("zz-decomposition", zz_decomposition()),
        7 => ("gate-counts", gate_counts()),
        8 => ("self-energy-poles", self_energy_poles()),
        9 => ("insulating-point", insulating_point()),
        10 => ("mott-transition", mott_transition()),
        11 => ("green-sum-rule", green_sum_rule()),
        12 => ("fit-round-trip", fit_round_trip()),
        _ => panic!("criterion index {index} out of range 1..={N_CRITERIA}"),
    };
    CriterionReport {
        index,
        name,
        passed,
        detail,
        seconds: started.elapsed().as_secs_f64(),
    }
}

/// Runs the whole suite in order.
pub fn run_all() -> Vec<CriterionReport> {
    (1..=N_CRITERIA).map(criterion).collect()
}

fn params_half(u: f64) -> SiamParams {
    SiamParams::half_filling(u, 1.0).expect("half-filled parameters are valid")
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// 1: minimum Trotterized-state fidelity at N=24 stays above 99%.
fn fidelity_floor() -> (bool, String) {
    let started = Instant::now();
    let p = params_half(4.0);
    let grid = TimeGrid::new(6.0, 24).expect("valid grid");
    let series = interferometry::fidelity_series(&p, &grid, Method::Xy, 24)
        .expect("measurable fidelity curve");
    let min = series.iter().copied().fold(f64::INFINITY, f64::min);
    let secs = started.elapsed().as_secs_f64();
    (
        min >= 0.99 && secs < 5.0,
        format!("min XY fidelity {min:.6} (floor 0.99); {secs:.2} s (budget 5)"),
    )
}

/// 2: the XY backend never trails the CZ backend by more than 1e-9.
fn method_ordering() -> (bool, String) {
    let p = params_half(4.0);
    let grid = TimeGrid::new(6.0, 24).expect("valid grid");
    let mut worst = f64::INFINITY;
    for n in [6, 12, 18, 24] {
        let xy = interferometry::fidelity_series(&p, &grid, Method::Xy, n)
            .expect("measurable fidelity curve");
        let cz = interferometry::fidelity_series(&p, &grid, Method::Cz, n)
            .expect("measurable fidelity curve");
        for (a, b) in xy.iter().zip(&cz) {
            worst = worst.min(a - b);
        }
    }
    (
        worst >= -1e-9,
        format!("min (F_XY - F_CZ) = {worst:.2e} over N in {{6,12,18,24}} (allowed >= -1e-9)"),
    )
}

/// 3: halving the step size halves the operator error (first order).
fn trotter_scaling() -> (bool, String) {
    let p = params_half(4.0);
    let h = siam::build_spin_hamiltonian(&p);
    let exact = oracle::expm_taylor(&(&h * Complex64::new(0.0, -6.0)));
    let error_at = |n: usize| {
        let plan = TrotterPlan::new(Method::Xy, p, n, 6.0, false).expect("valid plan");
        let trot = oracle::circuit_matrix(&trotter::build_evolution(&plan), SYSTEM_QUBITS);
        oracle::operator_phase_error(&trot, &exact)
    };
    let (e24, e48) = (error_at(24), error_at(48));
    let ratio = e24 / e48;
    (
        (1.6..=2.4).contains(&ratio),
        format!("eps(24) = {e24:.3e}, eps(48) = {e48:.3e}, ratio {ratio:.3} (window [1.6, 2.4])"),
    )
}

/// 4: the ancilla protocol reproduces the dense matrix element on 50
/// random parameter/time/axis/spin draws under exact evolution.
fn interferometry_oracle() -> (bool, String) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(421);
    let mut worst: f64 = 0.0;
    let mut accepted = 0usize;
    while accepted < 50 {
        let u: f64 = rng.gen::<f64>() * 8.0;
        let mu = rng.gen::<f64>() * (u + 2.0) - 1.0;
        let eps_c = rng.gen::<f64>() * 4.0 - 2.0;
        let v = 0.2 + rng.gen::<f64>() * 1.8;
        let tau = rng.gen::<f64>() * 6.0;
        let axes = [Axis::X, Axis::Y];
        let alpha = axes[rng.gen_range(0..2)];
        let beta = axes[rng.gen_range(0..2)];
        let spin = if rng.gen::<bool>() { Spin::Down } else { Spin::Up };

        let p = SiamParams::new(u, mu, eps_c, v).expect("draw ranges are valid");
        // Degenerate draws have no unique ground state to compare on.
        let Ok((gs, _)) = siam::ground_state(&p) else { continue };
        accepted += 1;

        let prop = siam::exact_propagator(&p, tau);
        let protocol =
            interferometry::ramsey_term_spin(alpha, beta, &Evolution::Exact(&prop), &gs, spin)
                .expect("valid Ramsey inputs");

        let sa = oracle::pauli_string_matrix(
            SYSTEM_QUBITS,
            &interferometry::dressed_impurity(spin, alpha),
        );
        let sb = oracle::pauli_string_matrix(
            SYSTEM_QUBITS,
            &interferometry::dressed_impurity(spin, beta),
        );
        let op = prop.adjoint() * sa * &prop * sb;
        let g = DVector::from_column_slice(gs.amplitudes());
        let direct = (g.adjoint() * op * g)[(0, 0)];
        worst = worst.max((protocol - direct).norm());
    }
    (
        worst <= 1e-10,
        format!("50 draws, max |F_ancilla - F_direct| = {worst:.2e} (<= 1e-10)"),
    )
}

/// 5: the Jordan-Wigner operators obey the fermionic algebra, and the
/// number-basis Hamiltonian equals the spin Hamiltonian up to a shift.
fn jw_algebra() -> (bool, String) {
    let modes = [
        (1, Spin::Down),
        (2, Spin::Down),
        (1, Spin::Up),
        (2, Spin::Up),
    ];
    let cdag: Vec<DMatrix<Complex64>> = modes
        .iter()
        .map(|&(site, spin)| siam::jw_creation_operator(site, spin).expect("valid mode"))
        .collect();
    let c: Vec<DMatrix<Complex64>> = cdag.iter().map(|m| m.adjoint()).collect();
    let id = DMatrix::<Complex64>::identity(16, 16);
    let anti = |a: &DMatrix<Complex64>, b: &DMatrix<Complex64>| a * b + b * a;

    let mut checked = 0usize;
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let mut d = anti(&c[i], &cdag[j]);
            if i == j {
                d -= &id;
            }
            worst = worst.max(max_abs(&d));
            checked += 1;
        }
    }
    for i in 0..4 {
        for j in i..4 {
            worst = worst.max(max_abs(&anti(&c[i], &c[j])));
            worst = worst.max(max_abs(&anti(&cdag[i], &cdag[j])));
            checked += 2;
        }
    }

    let p = SiamParams::new(4.0, 1.0, 0.5, 0.8).expect("valid parameters");
    let shift = Complex64::from(siam::identity_shift(&p));
    let diff = oracle::fermionic_hamiltonian(&p) - siam::build_spin_hamiltonian(&p) - &id * shift;
    let h_dev = max_abs(&diff);

    (
        checked == 36 && worst <= 1e-12 && h_dev <= 1e-12,
        format!(
            "{checked} anticommutators, max deviation {worst:.2e}; \
             Hamiltonian-shift deviation {h_dev:.2e} (both <= 1e-12)"
        ),
    )
}

/// 6: the six-gate CZ-phi block realizes exp(-i (phi/2) ZZ) up to a
/// global phase for 100 random angles.
fn zz_decomposition() -> (bool, String) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2923);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let phi = (rng.gen::<f64>() - 0.5) * 4.0 * std::f64::consts::PI;
        let got = oracle::circuit_matrix(&trotter::zz_from_czphi(phi), 2);
        let mut want = DMatrix::<Complex64>::zeros(4, 4);
        for idx in 0..4 {
            // Z (x) Z eigenvalue on the basis state: +1 for 00/11.
            let zz = if idx == 0 || idx == 3 { 1.0 } else { -1.0 };
            want[(idx, idx)] = Complex64::from_polar(1.0, -0.5 * phi * zz);
        }
        worst = worst.max(oracle::operator_phase_error(&got, &want));
    }
    (
        worst <= 1e-12,
        format!("100 angles, max phase-insensitive deviation {worst:.2e} (<= 1e-12)"),
    )
}

/// 7: the CZ backend's gate tallies match the published per-step and
/// per-optimized-pair counts exactly.
fn gate_counts() -> (bool, String) {
    // Generic parameters so no diagonal rotation vanishes.
    let p = SiamParams::new(4.0, 1.0, 0.5, 1.0).expect("valid parameters");
    let single = trotter::count_gates(
        &TrotterPlan::new(Method::Cz, p, 1, 0.3, false).expect("valid plan"),
    );
    let pair = trotter::count_gates(
        &TrotterPlan::new(Method::Cz, p, 2, 0.6, true).expect("valid plan"),
    );
    let got_single = (single.zz_gates, single.swap_gates, single.single_qubit_rotations);
    let got_pair = (pair.zz_gates, pair.swap_gates, pair.single_qubit_rotations);
    (
        got_single == (5, 2, 20) && got_pair == (10, 4, 32),
        format!(
            "single step (zz, swap, rot) = {got_single:?} want (5, 2, 20); \
             optimized pair = {got_pair:?} want (10, 4, 32)"
        ),
    )
}

/// 8: the self-energy poles fitted from the Trotterized XY series sit
/// within 3% of the brute-force values.
fn self_energy_poles() -> (bool, String) {
    let started = Instant::now();
    let p = params_half(4.0);
    let grid = TimeGrid::new(6.0, 24).expect("valid grid");
    let series = interferometry::measure_green_series(&p, &grid, GreenMethod::Xy, 24)
        .expect("measurable series");
    let fit = analysis::fit_two_cosine(&series).expect("fittable series");
    let zeta_fit =
        (2.0 * (fit.alpha1 * fit.omega2.powi(2) + fit.alpha2 * fit.omega1.powi(2))).sqrt();

    let [(w1, a1), (w2, a2)] = oracle::lehmann_poles_jacobi(&p);
    let zeta_ref = (2.0 * (a1 * w2 * w2 + a2 * w1 * w1)).sqrt();

    let rel = (zeta_fit - zeta_ref).abs() / zeta_ref;
    let secs = started.elapsed().as_secs_f64();
    (
        rel <= 0.03 && secs < 30.0,
        format!(
            "Sigma poles +-{zeta_fit:.4} vs exact +-{zeta_ref:.4}, \
             relative error {rel:.4} (<= 0.03); {secs:.2} s (budget 30)"
        ),
    )
}

/// 9: at U=8 the loop collapses to the V=0 insulator and the spectral
/// curve matches the analytic atomic-limit formula.
fn insulating_point() -> (bool, String) {
    let config = DmftConfig::half_filled(8.0, 1.0, GreenMethod::Exact, 24);
    let result = dmft::run(&config).expect("loop completes");
    let collapsed = result.converged
        && result.phase == Phase::Insulating
        && result.v_final == 0.0
        && result.z_final == 0.0;

    let p = SiamParams::with_t_star(8.0, 4.0, 0.0, result.v_final, 1.0)
        .expect("valid parameters");
    let grid = FrequencyGrid::midpoint_curve(1.0);
    let se = analysis::dyson_self_energy(&result.final_fit, &p, &grid)
        .expect("no grid point hits a pole");
    let curve = analysis::spectral_function(&se, &p);

    let mut max_rel: f64 = 0.0;
    for (&omega, &a) in grid.omegas.iter().zip(&curve) {
        let reference = analysis::bethe_dos(omega - 16.0 / omega, 1.0);
        let denom = if reference > 0.0 { reference } else { 1.0 };
        max_rel = max_rel.max((a - reference).abs() / denom);
    }
    (
        collapsed && max_rel <= 1e-6,
        format!(
            "collapse to (V, Z) = ({}, {}), converged {}; \
             max relative spectral error {max_rel:.2e} (<= 1e-6)",
            result.v_final, result.z_final, result.converged
        ),
    )
}

/// 10: the Z(U) sweep reproduces the Mott transition and the Trotterized
/// sweeps track the brute-force classical loop.
fn mott_transition() -> (bool, String) {
    let started = Instant::now();
    let mut grid_u = vec![0.1];
    grid_u.extend((1..=11).map(|k| 0.5 * k as f64));
    grid_u.extend([6.5, 7.0, 8.0]);

    let template = DmftConfig::half_filled(1.0, 1.0, GreenMethod::Exact, 24);
    let mut zs = Vec::new();
    for (u, r) in dmft::sweep_z(&template, &grid_u) {
        match r {
            Ok(res) => zs.push((u, res.z_final)),
            Err(e) => return (false, format!("exact sweep failed at U = {u}: {e}")),
        }
    }
    let monotone = zs.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-9);
    let weak = zs[0].1;
    let mott_ok = zs.iter().filter(|(u, _)| *u >= 6.0).all(|(_, z)| *z == 0.0);

    let interacting = [1.0, 2.0, 3.0, 4.0, 5.0];
    let classical: Vec<f64> = interacting
        .iter()
        .map(|&u| oracle::classical_dmft_z(u, 1.0))
        .collect();
    let xy24 = dmft::sweep_z(
        &DmftConfig::half_filled(1.0, 1.0, GreenMethod::Xy, 24),
        &interacting,
    );
    let mut max_dev24: f64 = 0.0;
    let mut dev24 = [0.0f64; 2];
    for ((u, r), z_ref) in xy24.iter().zip(&classical) {
        let z = match r {
            Ok(res) => res.z_final,
            Err(e) => return (false, format!("XY N=24 sweep failed at U = {u}: {e}")),
        };
        let dev = (z - z_ref).abs();
        max_dev24 = max_dev24.max(dev);
        if *u == 4.0 {
            dev24[0] = dev;
        } else if *u == 5.0 {
            dev24[1] = dev;
        }
    }
    let mut dev48 = [0.0f64; 2];
    for (i, (u, r)) in dmft::sweep_z(
        &DmftConfig::half_filled(1.0, 1.0, GreenMethod::Xy, 48),
        &[4.0, 5.0],
    )
    .iter()
    .enumerate()
    {
        let z = match r {
            Ok(res) => res.z_final,
            Err(e) => return (false, format!("XY N=48 sweep failed at U = {u}: {e}")),
        };
        dev48[i] = (z - classical[3 + i]).abs();
    }
    let refined = dev48[0] <= dev24[0] + 1e-6 && dev48[1] <= dev24[1] + 1e-6;
    let secs = started.elapsed().as_secs_f64();
    (
        monotone && weak >= 0.99 && mott_ok && max_dev24 <= 0.05 && refined && secs < 600.0,
        format!(
            "monotone {monotone}; Z(0.1) = {weak:.4} (>= 0.99); Z = 0 above U_c: {mott_ok}; \
             max |Z_XY24 - Z_classical| = {max_dev24:.4} (<= 0.05); \
             N=48 dev [{:.4}, {:.4}] vs N=24 dev [{:.4}, {:.4}] at U in {{4, 5}}; \
             {secs:.1} s (budget 600)",
            dev48[0], dev48[1], dev24[0], dev24[1]
        ),
    )
}

/// 11: sum rule iG^R(0) = 1 and reality of iG^R at half filling for
/// every method and acceptance interaction.
fn green_sum_rule() -> (bool, String) {
    let grid = TimeGrid::new(6.0, 24).expect("valid grid");
    let mut worst_sum: f64 = 0.0;
    let mut worst_im: f64 = 0.0;
    for method in [GreenMethod::Xy, GreenMethod::Cz, GreenMethod::Exact] {
        for u in [4.0, 5.0, 8.0] {
            let p = params_half(u);
            let series = interferometry::measure_green_series(&p, &grid, method, 24)
                .expect("measurable series");
            worst_sum = worst_sum.max((series.values[0] - Complex64::from(1.0)).norm());
            for value in &series.values {
                worst_im = worst_im.max(value.im.abs());
            }
        }
    }
    (
        worst_sum <= 1e-8 && worst_im <= 1e-8,
        format!(
            "max |iG^R(0) - 1| = {worst_sum:.2e}, max |Im iG^R| = {worst_im:.2e} \
             (both <= 1e-8) over {{xy, cz, exact}} x U in {{4, 5, 8}}"
        ),
    )
}

/// 12: the two-cosine fit recovers synthetic pole parameters to 1e-6
/// over 100 random instances with pole gap > 0.1.
fn fit_round_trip() -> (bool, String) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
    let p = params_half(4.0);
    let times: Vec<f64> = (0..=24).map(|k| 0.25 * k as f64).collect();
    let mut worst: f64 = 0.0;
    let mut accepted = 0usize;
    while accepted < 100 {
        let wa = 0.2 + rng.gen::<f64>() * 5.3;
        let wb = 0.2 + rng.gen::<f64>() * 5.3;
        if (wa - wb).abs() <= 0.1 {
            continue;
        }
        let aa = 0.02 + rng.gen::<f64>() * 0.46;
        let (w1, w2, a1, a2) = if wa <= wb {
            (wa, wb, aa, 0.5 - aa)
        } else {
            (wb, wa, 0.5 - aa, aa)
        };
        accepted += 1;
        let values = times
            .iter()
            .map(|&t| {
                Complex64::from(2.0 * (a1 * (w1 * t).cos() + a2 * (w2 * t).cos()))
            })
            .collect();
        let series = GreenSeries {
            params: p,
            method: GreenMethod::Exact,
            n_steps_per_time: 1,
            times: times.clone(),
            values,
        };
        let fit = match analysis::fit_two_cosine(&series) {
            Ok(f) => f,
            Err(e) => {
                return (
                    false,
                    format!("fit failed on draw {accepted} (a1 {a1:.3}, w1 {w1:.3}, w2 {w2:.3}): {e}"),
                )
            }
        };
        let dev = (fit.alpha1 - a1)
            .abs()
            .max((fit.omega1 - w1).abs())
            .max((fit.alpha2 - a2).abs())
            .max((fit.omega2 - w2).abs());
        worst = worst.max(dev);
    }
    (
        worst <= 1e-6,
        format!("100 round trips, max parameter deviation {worst:.2e} (<= 1e-6)"),
    )
}
