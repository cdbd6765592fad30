use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::{qcl_system, CheckResult, Suite, VerifyReport};
use crate::constants::{C0, HBAR};
use crate::grid::{courant_timestep, Boundary, GridState, MaterialParams};
use crate::propagator::LindbladPropagator;
use crate::quantum::{DensityMatrix, QuantumSystem, QuantumSystemSpec};
use crate::C64;

const DX: f64 = 1e-7;

fn empty_grid(m: usize, s: f64, left: Boundary, right: Boundary) -> GridState {
    let mat = MaterialParams::vacuum();
    let dt = courant_timestep(DX, 1.0, s);
    GridState::new(m, DX, dt, mat, left, right, DensityMatrix::zeros(1), 1.0).expect("valid grid")
}

/// Right-going pulse f(x - c t) on E at t = 0 and on H at t = -dt/2.
fn launch(g: &mut GridState, f: impl Fn(f64) -> f64) {
    let eta = g.material().impedance();
    let shift = 0.5 * C0 * g.dt;
    for (k, e) in g.e_field.iter_mut().enumerate() {
        *e = f(k as f64 * DX);
    }
    for (k, h) in g.h_field.iter_mut().enumerate() {
        *h = -f((k as f64 + 0.5) * DX + shift) / eta;
    }
}

fn step(g: &mut GridState, zeros: &[f64]) {
    g.update_h();
    g.update_e(zeros);
    g.apply_boundaries();
}

fn centroid(e: &[f64]) -> f64 {
    let (mut w, mut wx) = (0.0, 0.0);
    for (k, v) in e.iter().enumerate() {
        w += v * v;
        wx += v * v * k as f64;
    }
    wx / w * DX
}

fn modulated(x0: f64, width: f64, wavelength: f64) -> impl Fn(f64) -> f64 {
    move |x| {
        let u = (x - x0) / width;
        (-u * u).exp() * (2.0 * PI * (x - x0) / wavelength).cos()
    }
}

fn gaussian(x0: f64, width: f64) -> impl Fn(f64) -> f64 {
    move |x| {
        let u = (x - x0) / width;
        (-u * u).exp()
    }
}

/// Measured group speed over c of a pulse with a 20-cell carrier.
pub fn free_space_speed(s: f64) -> f64 {
    let m = 3000;
    let mut g = empty_grid(m, s, Boundary::Absorbing, Boundary::Absorbing);
    let lambda = 20.0 * DX;
    launch(&mut g, modulated(600.0 * DX, 5.0 * lambda, lambda));
    let zeros = vec![0.0; m];
    let x_start = centroid(&g.e_field);
    let steps = (1500.0 / s) as usize;
    for _ in 0..steps {
        step(&mut g, &zeros);
    }
    (centroid(&g.e_field) - x_start) / (steps as f64 * g.dt) / C0
}

/// Relative change of the conserved discrete energy over `steps` steps in
/// a closed lossless cavity.
pub fn energy_drift(steps: usize) -> f64 {
    let m = 200;
    let mut g = empty_grid(
        m,
        0.95,
        Boundary::PerfectReflector,
        Boundary::PerfectReflector,
    );
    launch(&mut g, modulated(100.0 * DX, 15.0 * DX, 20.0 * DX));
    g.e_field[0] = 0.0;
    g.e_field[m] = 0.0;
    let zeros = vec![0.0; m];
    let w0 = g.field_energy();
    let mut worst = 0.0f64;
    for n in 0..steps {
        step(&mut g, &zeros);
        if n % 100 == 99 {
            worst = worst.max((g.field_energy() / w0 - 1.0).abs());
        }
    }
    worst.max((g.field_energy() / w0 - 1.0).abs())
}

/// (sign error of the reflected peak, relative energy error) after a pulse
/// hits a perfect reflector.
pub fn pec_reflection() -> (f64, f64) {
    let m = 800;
    let mut g = empty_grid(m, 1.0, Boundary::Absorbing, Boundary::PerfectReflector);
    launch(&mut g, gaussian(300.0 * DX, 30.0 * DX));
    let zeros = vec![0.0; m];
    let w0 = g.field_energy();
    // Out to the wall and back to the starting point.
    for _ in 0..1000 {
        step(&mut g, &zeros);
    }
    let (kmax, vmax) = g
        .e_field
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(k, &v)| (k, v))
        .unwrap();
    let _ = kmax;
    ((vmax + 1.0).abs(), (g.field_energy() / w0 - 1.0).abs())
}

/// Energy left in the grid after a pulse has run into an absorbing end,
/// relative to the launched energy.
pub fn absorbing_reflection(s: f64) -> f64 {
    let m = 800;
    let mut g = empty_grid(m, s, Boundary::PerfectReflector, Boundary::Absorbing);
    launch(&mut g, gaussian(300.0 * DX, 30.0 * DX));
    let zeros = vec![0.0; m];
    let w0 = g.field_energy();
    for _ in 0..(900.0 / s) as usize {
        step(&mut g, &zeros);
    }
    g.field_energy().abs() / w0
}

fn two_level(omega0: f64, dipole: f64, decay: f64, pure: f64) -> QuantumSystem {
    let mut spec = QuantumSystemSpec::empty(2, 1e21, 1e-8);
    spec.energies = vec![0.0, HBAR * omega0];
    spec.dipole[(0, 1)] = dipole;
    spec.dipole[(1, 0)] = dipole;
    spec.rates[(0, 1)] = decay;
    spec.pure_dephasing[(0, 1)] = pure;
    spec.pure_dephasing[(1, 0)] = pure;
    QuantumSystem::new(spec).expect("valid two-level system")
}

/// Measured Rabi frequency over d E0 / hbar for a resonant drive over ten
/// Rabi periods.
pub fn rabi_frequency() -> f64 {
    let omega0 = 2.0 * PI * 1e12;
    let dt = 0.05 / omega0;
    let dipole = 1e-28;
    let rabi = 0.01 * omega0;
    let e0 = rabi * HBAR / dipole;
    let sys = two_level(omega0, dipole, 0.0, 0.0);
    let prop = LindbladPropagator::new(&sys, dt).unwrap();
    let mut rho = DensityMatrix::pure_level(2, 0);
    let per_carrier = (2.0 * PI / (omega0 * dt)).round() as usize;
    let steps = (10.0 * 2.0 * PI / (rabi * dt)) as usize + 2 * per_carrier;
    let mut p = Vec::with_capacity(steps);
    for n in 0..steps {
        let t = (n as f64 + 0.5) * dt;
        prop.drift_step(rho.data_mut(), e0 * (omega0 * t).cos());
        p.push(rho.population(1) - 0.5);
    }
    // Moving average over one carrier period removes the 2 w0 ripple.
    let w = per_carrier;
    let mut smooth = Vec::with_capacity(steps - w);
    let mut acc: f64 = p[..w].iter().sum();
    for n in w..steps {
        smooth.push(acc / w as f64);
        acc += p[n] - p[n - w];
    }
    let mut crossings = Vec::new();
    for n in 1..smooth.len() {
        let (a, b) = (smooth[n - 1], smooth[n]);
        if a.signum() != b.signum() && a != 0.0 {
            // Window centre sits (w - 1)/2 samples behind the end.
            crossings.push((n as f64 - 1.0 + a / (a - b)) * dt);
        }
    }
    if crossings.len() < 3 {
        return f64::NAN;
    }
    let half_periods = (crossings.len() - 1) as f64;
    let period = 2.0 * (crossings[crossings.len() - 1] - crossings[0]) / half_periods;
    2.0 * PI / period / rabi
}

fn driven_run(sys: &QuantumSystem, dt: f64, t_end: f64, e0: f64, omega: f64) -> DensityMatrix {
    let prop = LindbladPropagator::new(sys, dt).unwrap();
    let mut rho = DensityMatrix::pure_level(2, 1);
    let steps = (t_end / dt).round() as usize;
    for n in 0..steps {
        let t = (n as f64 + 0.5) * dt;
        prop.drift_step(rho.data_mut(), e0 * (omega * t).sin());
    }
    rho
}

fn distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Observed orders of convergence for a damped, driven two-level cell at
/// dt, dt/2 and dt/4 against a dt/64 reference.
pub fn dt_convergence_orders() -> [f64; 2] {
    let omega0 = 2.0 * PI * 1e12;
    let sys = two_level(omega0, 1e-28, 2e11, 5e11);
    let e0 = 0.3 * omega0 * HBAR / 1e-28;
    let omega = 0.9 * omega0;
    let t_end = 5e-12;
    let dt = 0.1 / omega0;
    let t_end = (t_end / (4.0 * dt)).round() * 4.0 * dt;
    let reference = driven_run(&sys, dt / 64.0, t_end, e0, omega);
    let errs: Vec<f64> = (0..3)
        .map(|k| {
            distance(
                &driven_run(&sys, dt / f64::from(1 << k), t_end, e0, omega),
                &reference,
            )
        })
        .collect();
    [(errs[0] / errs[1]).log2(), (errs[1] / errs[2]).log2()]
}

/// Ratio of the population decay rate to the coherence decay rate with no
/// pure dephasing (T2 = 2 T1).
pub fn decay_rate_ratio() -> f64 {
    let decay = 1e11;
    let sys = two_level(2.0 * PI * 1e12, 0.0, decay, 0.0);
    let dt = 1e-14;
    let prop = LindbladPropagator::new(&sys, dt).unwrap();
    let mut rho = DensityMatrix::zeros(2);
    rho.set(1, 1, C64::new(0.5, 0.0));
    rho.set(0, 0, C64::new(0.5, 0.0));
    rho.set(1, 0, C64::new(0.5, 0.0));
    rho.set(0, 1, C64::new(0.5, 0.0));
    let steps = 1000;
    for _ in 0..steps {
        prop.drift_step(rho.data_mut(), 0.0);
    }
    let t = steps as f64 * dt;
    let pop_rate = -(rho.population(1) / 0.5).ln() / t;
    let coh_rate = -(rho.get(1, 0).norm() / 0.5).ln() / t;
    pop_rate / coh_rate
}

/// Largest deviation between populations after a long field-free run and
/// the null vector of the rate matrix, found by a direct solve.
pub fn steady_state_error(system: &QuantumSystem) -> f64 {
    let n = system.num_levels();
    let mut spec = QuantumSystemSpec::empty(n, system.carrier_density(), system.period_length());
    for i in 0..n {
        spec.energies[i] = system.energy(i);
        for j in 0..n {
            spec.rates[(i, j)] = system.rate(i, j);
        }
    }
    let sys = QuantumSystem::new(spec).unwrap();
    let mut a = DMatrix::from_fn(n, n, |i, k| {
        if i == k {
            -sys.inverse_lifetime(i)
        } else {
            sys.rate(i, k)
        }
    });
    let mut b = DVector::zeros(n);
    for k in 0..n {
        a[(n - 1, k)] = 1.0;
    }
    b[n - 1] = 1.0;
    let null = a
        .lu()
        .solve(&b)
        .expect("rate matrix has a one-dimensional null space");

    let dt = 0.1 / sys.max_rate();
    let prop = LindbladPropagator::new(&sys, dt).unwrap();
    let mut rho = DensityMatrix::pure_level(n, 0);
    for _ in 0..20_000 {
        prop.drift_step(rho.data_mut(), 0.0);
    }
    (0..n)
        .map(|i| (rho.population(i) - null[i]).abs())
        .fold(0.0, f64::max)
}

pub fn solver_suite(seed: u64) -> VerifyReport {
    let mut checks = Vec::new();
    for s in [1.0, 0.9] {
        let v = free_space_speed(s);
        checks.push(CheckResult::at_most(
            format!("free_space_speed_s{s}"),
            (v - 1.0).abs(),
            0.01,
            format!("v/c = {v:.6}, 20 cells per wavelength"),
        ));
    }
    checks.push(CheckResult::at_most(
        "energy_drift_closed_cavity",
        energy_drift(100_000),
        1e-6,
        "1e5 steps",
    ));
    let (sign, energy) = pec_reflection();
    checks.push(CheckResult::at_most(
        "pec_reflection_sign",
        sign,
        1e-3,
        "reflected peak vs -1",
    ));
    checks.push(CheckResult::at_most(
        "pec_reflection_energy",
        energy,
        1e-6,
        "",
    ));
    for s in [1.0, 0.9] {
        checks.push(CheckResult::at_most(
            format!("absorbing_reflection_s{s}"),
            absorbing_reflection(s),
            1e-4,
            "energy left after impact",
        ));
    }
    let r = rabi_frequency();
    checks.push(CheckResult::at_most(
        "rabi_frequency",
        (r - 1.0).abs(),
        0.01,
        format!("measured / expected = {r:.6}"),
    ));
    let orders = dt_convergence_orders();
    for (k, o) in orders.iter().enumerate() {
        checks.push(CheckResult::at_most(
            format!("dt_convergence_order_{k}"),
            (o - 2.0).abs(),
            0.2,
            format!("order {o:.4}"),
        ));
    }
    let ratio = decay_rate_ratio();
    checks.push(CheckResult::at_most(
        "t2_equals_twice_t1",
        (ratio - 2.0).abs(),
        1e-6,
        format!("ratio {ratio:.9}"),
    ));
    let (qcl, _, _) = qcl_system();
    checks.push(CheckResult::at_most(
        "steady_state_null_vector",
        steady_state_error(&qcl),
        1e-10,
        "",
    ));
    VerifyReport {
        suite: Suite::Solver,
        samples: 1,
        seed,
        checks,
        notes: vec!["deterministic; the seed is unused".into()],
    }
}
