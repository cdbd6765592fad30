use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{qcl_system, CheckResult, Suite, VerifyReport};
use crate::diffusion::{
    assemble_noise_matrix, cnumber_diffusion_matrix, einstein_check, ordered_einstein_matrix,
    table1_check, AssemblyMode, CNumberState, CorrelationPair, Table1Family, ThreeLevelParams,
    COMPONENT_NAMES, MATTER_OPERATORS, TRANSCRIPTION_NOTES,
};
use crate::diffusion::{comp, L1P, L2, L3};
use crate::noise::NoiseDiagnostics;
use crate::C64;

fn cnormal(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// rho = G G^dagger / trace with complex Gaussian G: positive definite
/// with full support. Returned row-major.
pub fn random_physical_density(rng: &mut ChaCha8Rng) -> [C64; 9] {
    let g: Vec<C64> = (0..9).map(|_| cnormal(rng)).collect();
    let mut rho = [C64::new(0.0, 0.0); 9];
    for r in 0..3 {
        for c in 0..3 {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..3 {
                s += g[r * 3 + k] * g[c * 3 + k].conj();
            }
            rho[r * 3 + c] = s;
        }
    }
    let tr = (rho[0] + rho[4] + rho[8]).re;
    for v in &mut rho {
        *v /= tr;
    }
    rho
}

/// Parameters with randomized rates, dephasing and energies.
fn random_params(rng: &mut ChaCha8Rng) -> ThreeLevelParams {
    let mut rates = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                rates[i][j] = 10f64.powf(rng.gen_range(9.0..12.5));
            }
        }
    }
    let mut p = ThreeLevelParams {
        g: 1.0,
        omega: rng.gen_range(0.0..3e12),
        rates,
        gamma: [[0.0; 3]; 3],
        energies: [0.0, rng.gen_range(0.0..3e13), rng.gen_range(0.0..3e13)],
        kappa: 0.0,
        n_th: 0.0,
    };
    for a in 0..3 {
        for b in 0..3 {
            if a != b {
                p.gamma[a][b] = 0.5 * (p.inv_tau(a) + p.inv_tau(b));
            }
        }
    }
    for (a, b) in [(L1P, L2), (L1P, L3), (L2, L3)] {
        let gp = 10f64.powf(rng.gen_range(10.0..12.5));
        p.gamma[a][b] += gp;
        p.gamma[b][a] += gp;
    }
    p
}

fn random_state(rng: &mut ChaCha8Rng) -> CNumberState {
    let topo = crate::diffusion::Topology {
        injector: L1P,
        lower: L2,
        upper: L3,
    };
    let rho = random_physical_density(rng);
    let a = cnormal(rng) * 1e11;
    CNumberState::from_density(&rho, topo, a)
}

fn matrix_scale(d: &crate::diffusion::Matrix11) -> f64 {
    d.iter().map(|z| z.norm()).fold(1e-300, f64::max)
}

pub fn diffusion_suite(samples: usize, seed: u64) -> VerifyReport {
    let samples = samples.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (qcl, qcl_topo, _) = qcl_system();
    let qcl_params = ThreeLevelParams::from_system(&qcl, qcl_topo);

    let mut exact = 0.0f64;
    let mut physical = 0.0f64;
    let mut asym = 0.0f64;
    let mut row_sum = 0.0f64;
    let mut worst_exact = String::new();
    let mut physical_diag = NoiseDiagnostics::default();
    let mut unclamped_states = 0usize;
    let mut transcription = 0.0f64;
    for k in 0..samples {
        let p = if k % 2 == 0 {
            qcl_params.clone()
        } else {
            random_params(&mut rng)
        };
        let s = random_state(&mut rng);
        let mut diag = NoiseDiagnostics::default();
        let f = assemble_noise_matrix(&s, &p, AssemblyMode::Exact, &mut diag);
        let r = f.max_relative_residual();
        if r > exact {
            exact = r;
            worst_exact = f
                .offending_entries(0.5 * r)
                .first()
                .map(|(a, b, _)| format!("worst at ({a}, {b})"))
                .unwrap_or_default();
        }
        // Clamping changes B on purpose; the identity only holds where no
        // radicand went negative.
        let mut d_phys = NoiseDiagnostics::default();
        let f = assemble_noise_matrix(&s, &p, AssemblyMode::Physical, &mut d_phys);
        physical_diag.merge(&d_phys);
        if d_phys.clamped == 0 {
            unclamped_states += 1;
            physical = physical.max(f.max_relative_residual());
        }

        let d = cnumber_diffusion_matrix(&s, &p);
        let scale = matrix_scale(&d);
        asym = asym.max(
            (d - d.transpose())
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max)
                / scale,
        );
        for &x in &[comp::S33, comp::S22, comp::S1P1P] {
            let sum = d[(x, comp::S33)] + d[(x, comp::S22)] + d[(x, comp::S1P1P)];
            row_sum = row_sum.max(sum.norm() / scale);
        }
        if k < 50 {
            let e = ordered_einstein_matrix(&s, &p);
            for &(x, _) in MATTER_OPERATORS.iter() {
                for &(y, _) in MATTER_OPERATORS.iter() {
                    transcription = transcription.max((d[(x, y)] - e[x][y]).norm() / scale);
                }
            }
        }
    }

    let mut checks = vec![
        CheckResult::at_most("bbt_equals_d_exact_assembly", exact, 1e-10, worst_exact),
        CheckResult::at_most(
            "bbt_equals_d_physical_assembly",
            if unclamped_states > 0 {
                physical
            } else {
                f64::NAN
            },
            1e-10,
            format!(
                "{unclamped_states} of {samples} states unclamped; {} clamped of {} radicands",
                physical_diag.clamped, physical_diag.radicands
            ),
        ),
        CheckResult::at_most("d_symmetric", asym, 1e-12, ""),
        CheckResult::at_most("population_rows_sum_to_zero", row_sum, 1e-12, ""),
        CheckResult::at_most(
            "matrix_matches_master_equation",
            transcription,
            1e-12,
            format!("{} states", samples.min(50)),
        ),
    ];

    for family in Table1Family::ALL {
        for variant in [false, true] {
            if variant && family != Table1Family::Single {
                continue;
            }
            let mut worst = 0.0f64;
            for _ in 0..samples {
                let (a, b, c) = (cnormal(&mut rng), cnormal(&mut rng), cnormal(&mut rng));
                worst = worst.max(table1_check(family, a, b, c, variant));
            }
            let name = format!(
                "table1_{:?}{}",
                family,
                if variant { "_coherence_variant" } else { "" }
            )
            .to_lowercase();
            checks.push(CheckResult::at_most(name, worst, 1e-12, ""));
        }
    }

    // Closed-form quantum correlations against the Einstein relation with
    // finite-difference moments; a few states suffice.
    let mut fd_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for pair in CorrelationPair::ALL {
        if pair.operators().is_none() {
            continue;
        }
        let mut worst = 0.0f64;
        for _ in 0..8 {
            let s = random_state(&mut fd_rng);
            if let Some((value, residual)) = einstein_check(pair, &s, &qcl_params, 2e-17) {
                worst = worst.max(residual / value.norm().max(1e9));
            }
        }
        checks.push(CheckResult::at_most(
            format!("einstein_relation {}", pair.label()),
            worst,
            1e-6,
            "finite-difference moments",
        ));
    }

    let mut notes: Vec<String> = TRANSCRIPTION_NOTES
        .iter()
        .map(|n| format!("transcription: {n}"))
        .collect();
    notes.push(format!("components: {}", COMPONENT_NAMES.join(", ")));
    VerifyReport {
        suite: Suite::Diffusion,
        samples,
        seed,
        checks,
        notes,
    }
}
