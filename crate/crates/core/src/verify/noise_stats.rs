use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::diffusion::random_physical_density;
use super::{qcl_system, CheckResult, Suite, VerifyReport};
use crate::diffusion::{
    assemble_noise_matrix, cnumber_diffusion_matrix, semiclassical_field, AssemblyMode,
    CNumberState, ThreeLevelParams, COMPONENT_NAMES, MATTER_OPERATORS,
};
use crate::noise::{
    full_fluctuation_vector, initial_condition_2lvl, reduced_coherence_noise,
    reduced_population_noise, NoiseDiagnostics, NoiseStream, StreamDomain, FULL_DRAWS,
};
use crate::quantum::QuantumSystem;
use crate::C64;

/// Running mean and variance of a real statistic.
#[derive(Default, Clone, Copy)]
struct Moments {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn mean(&self) -> f64 {
        self.sum / self.n
    }

    /// Standard error of the mean.
    fn std_error(&self) -> f64 {
        let m = self.mean();
        ((self.sum_sq / self.n - m * m).max(0.0) / self.n).sqrt()
    }
}

/// Deviations of the full-scheme second moments from D, in units of the
/// statistical error of each estimate.
struct MomentDeviations {
    /// |z| of every entry with nonzero spread.
    z: Vec<f64>,
    worst: String,
}

/// Second moments of the full fluctuation terms at a fixed state against
/// the diffusion matrix.
fn full_scheme_moments(
    system: &QuantumSystem,
    topo: crate::diffusion::Topology,
    rho: &[C64; 9],
    e_z: f64,
    draws: usize,
    seed: u64,
    diag: &mut NoiseDiagnostics,
) -> MomentDeviations {
    // Components with i >= j are drawn directly; the others are their
    // conjugate mirrors and carry no independent statistics.
    let comps: Vec<(usize, usize)> = MATTER_OPERATORS
        .iter()
        .filter(|&&(_, (i, j))| i >= j)
        .map(|&(c, (i, j))| (c, topo.level(j) * 3 + topo.level(i)))
        .collect();
    let nc = comps.len();
    let mut re = vec![Moments::default(); nc * nc];
    let mut im = vec![Moments::default(); nc * nc];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xi = [0.0; FULL_DRAWS];
    for _ in 0..draws {
        for x in xi.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        let f = full_fluctuation_vector(rho, system, topo, e_z, 1.0, &xi, diag);
        for a in 0..nc {
            for b in a..nc {
                let v = f.data[comps[a].1] * f.data[comps[b].1];
                re[a * nc + b].push(v.re);
                im[a * nc + b].push(v.im);
            }
        }
    }
    let ga = semiclassical_field(system, topo, e_z);
    let state = CNumberState::from_density(rho, topo, C64::new(ga, 0.0));
    let d = cnumber_diffusion_matrix(&state, &ThreeLevelParams::from_system(system, topo));
    let scale = d.iter().map(|z| z.norm()).fold(1e-300, f64::max);
    let mut worst = 0.0f64;
    let mut at = String::new();
    let mut zs = Vec::new();
    for a in 0..nc {
        for b in a..nc {
            let target = d[(comps[a].0, comps[b].0)];
            for (m, t, part) in [
                (&re[a * nc + b], target.re, "re"),
                (&im[a * nc + b], target.im, "im"),
            ] {
                let dev = (m.mean() - t).abs();
                // Entries that vanish identically have zero spread.
                let sigma = m.std_error();
                if sigma <= 1e-12 * scale {
                    if dev > 1e-12 * scale {
                        zs.push(f64::INFINITY);
                    }
                    continue;
                }
                let z = dev / sigma;
                zs.push(z);
                if z > worst {
                    worst = z;
                    at = format!(
                        "{part} ({}, {}): {:.4e} vs {:.4e}",
                        COMPONENT_NAMES[comps[a].0],
                        COMPONENT_NAMES[comps[b].0],
                        m.mean(),
                        t
                    );
                }
            }
        }
    }
    MomentDeviations { z: zs, worst: at }
}

/// Largest count k with P(Binomial(n, p) > k) >= alpha, so exceeding it
/// has probability below alpha if every entry is unbiased.
fn chance_exceedances(n: usize, p: f64, alpha: f64) -> usize {
    let mut pmf = (1.0 - p).powi(n as i32);
    let mut cdf = pmf;
    let mut k = 0;
    while 1.0 - cdf >= alpha && k < n {
        pmf *= (n - k) as f64 / (k + 1) as f64 * p / (1.0 - p);
        cdf += pmf;
        k += 1;
    }
    k
}

/// First random density matrix whose physical factor needs no clamping, so
/// that B B^T reproduces D exactly.
fn unclamped_density(
    system: &QuantumSystem,
    topo: crate::diffusion::Topology,
    e_z: f64,
    rng: &mut ChaCha8Rng,
) -> [C64; 9] {
    let params = ThreeLevelParams::from_system(system, topo);
    let ga = semiclassical_field(system, topo, e_z);
    for _ in 0..10_000 {
        let rho = random_physical_density(rng);
        let state = CNumberState::from_density(&rho, topo, C64::new(ga, 0.0));
        let mut diag = NoiseDiagnostics::default();
        assemble_noise_matrix(&state, &params, AssemblyMode::Physical, &mut diag);
        if diag.clamped == 0 {
            return rho;
        }
    }
    panic!("no unclamped density matrix in 10000 draws");
}

pub fn noise_stats_suite(samples: usize, seed: u64) -> VerifyReport {
    let samples = samples.max(100);
    let (system, topo, n_cell) = qcl_system();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e_z = 3e5;
    let rho = unclamped_density(&system, topo, e_z, &mut rng);
    let mut checks = Vec::new();
    let mut notes = Vec::new();

    // Full scheme: entries within 3 sigma. With many entries a few land
    // outside by chance, so the count of 3-sigma exceedances is held to the
    // binomial bound and the worst entry to a gross-error limit.
    let mut diag = NoiseDiagnostics::default();
    let full_draws = (10 * samples).min(1_000_000);
    let dev = full_scheme_moments(&system, topo, &rho, e_z, full_draws, seed ^ 1, &mut diag);
    let beyond = dev.z.iter().filter(|&&z| z > 3.0).count();
    let allowed = chance_exceedances(dev.z.len(), 0.0027, 1e-3);
    let worst = dev.z.iter().copied().fold(0.0, f64::max);
    checks.push(CheckResult::at_most(
        "full_scheme_entries_beyond_3_sigma",
        beyond as f64,
        allowed as f64,
        format!("{} entries, {full_draws} draws", dev.z.len()),
    ));
    checks.push(CheckResult::at_most(
        "full_scheme_worst_sigma",
        worst,
        5.0,
        format!("worst {}", dev.worst),
    ));
    notes.push(format!(
        "full scheme: {} clamped of {} radicands",
        diag.clamped, diag.radicands
    ));

    // Reduced scheme closed forms, independent of the implementation's
    // radicand helpers.
    let pops = [rho[0].re, rho[4].re, rho[8].re];
    let rate = |to: usize, from: usize| system.rate(to, from);
    let mut diag = NoiseDiagnostics::default();
    let mut worst_pop = 0.0f64;
    let mut pop_at = String::new();
    for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
        let expected = (rate(j, i) * pops[i] + rate(i, j) * pops[j]) / n_cell;
        if expected == 0.0 {
            continue;
        }
        let mut m = Moments::default();
        for _ in 0..samples {
            let f = reduced_population_noise(
                &system,
                &rho,
                i,
                j,
                n_cell,
                rng.sample(StandardNormal),
                &mut diag,
            );
            m.push(f * f);
        }
        let rel = (m.mean() / expected - 1.0).abs();
        if rel > worst_pop {
            worst_pop = rel;
            pop_at = format!("levels ({i}, {j})");
        }
    }
    checks.push(CheckResult::at_most(
        "reduced_population_variance_rel",
        worst_pop,
        0.05,
        format!("{samples} draws, worst {pop_at}"),
    ));

    let (lo, up) = (topo.lower, topo.upper);
    let out_up: f64 = (0..3).filter(|&k| k != up).map(|k| rate(k, up)).sum();
    let feed: f64 = (0..3)
        .filter(|&k| k != up)
        .map(|k| rate(up, k) * pops[k])
        .sum();
    let radicand = -out_up * pops[up] + feed + 2.0 * system.dephasing(lo, up) * pops[up];
    let expected = radicand / n_cell;
    let (mut m_abs, mut m_re, mut m_im) =
        (Moments::default(), Moments::default(), Moments::default());
    for _ in 0..samples {
        let (x2, x3) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
        let f = reduced_coherence_noise(&system, &rho, lo, up, n_cell, x2, x3, &mut diag);
        m_abs.push(f.norm_sqr());
        m_re.push(f.re * f.re);
        m_im.push(f.im * f.im);
    }
    checks.push(CheckResult::at_most(
        "reduced_coherence_second_moment_rel",
        (m_abs.mean() / expected - 1.0).abs(),
        0.05,
        format!("{samples} draws"),
    ));
    checks.push(CheckResult::at_most(
        "reduced_coherence_re_im_split_rel",
        (m_re.mean() / m_im.mean() - 1.0).abs(),
        0.05,
        "",
    ));

    // Tipping angle of the initial condition: <theta^2> = 4 / n_cell.
    let n = 1e4;
    let mut m = Moments::default();
    for k in 0..samples {
        let mut st = NoiseStream::new(seed, StreamDomain::Verification, 0, k as u64);
        let r = initial_condition_2lvl(n, &mut st);
        let theta = 2.0 * (r.population(0).sqrt()).asin();
        m.push(theta * theta);
    }
    checks.push(CheckResult::at_most(
        "tipping_angle_second_moment_rel",
        (m.mean() / (4.0 / n) - 1.0).abs(),
        0.05,
        format!("{samples} draws, n_cell = 1e4"),
    ));
    checks.push(CheckResult::at_most(
        "clamp_fraction_reduced",
        diag.clamp_fraction(),
        1e-3,
        format!("{} of {}", diag.clamped, diag.radicands),
    ));

    VerifyReport {
        suite: Suite::NoiseStats,
        samples,
        seed,
        checks,
        notes,
    }
}
