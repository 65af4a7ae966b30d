//! Reference values computed independently of the solver paths they check:
//! closed forms, direct quadrature and brute-force Fock construction.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use semigrav_core::entanglement::{
    block_entropy, branch_entanglement, ideal_branch_grams, EntanglementReport,
};
use semigrav_core::fock::{apply_creation, tensor_blocks, FockExpansion, ModeCoefficients};
use semigrav_core::{Branch, GramMatrix, Result};

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Closed-form potential of a normalized 3D Gaussian of total mass `mass`.
pub fn gaussian_potential_erf(g: f64, mass: f64, sigma: f64, r: f64) -> f64 {
    -g * mass / r * libm::erf(r / (sigma * std::f64::consts::SQRT_2))
}

/// Potential of a 3D Gaussian by direct radial integration of the Green's
/// function: `-G[(1/r)∫₀ʳ 4πs²ρ ds + ∫ᵣ^∞ 4πsρ ds]`.
pub fn gaussian_potential_quadrature(g: f64, mass: f64, sigma: f64, r: f64) -> f64 {
    let rho = |s: f64| {
        mass * (-s * s / (2.0 * sigma * sigma)).exp() / (2.0 * PI * sigma * sigma).powf(1.5)
    };
    let inner = simpson(|s| 4.0 * PI * s * s * rho(s), 0.0, r, 4000);
    let outer = simpson(|s| 4.0 * PI * s * rho(s), r, r + 40.0 * sigma, 40000);
    -g * (inner / r + outer)
}

/// `-G∫ρ(y)/sqrt((x-y)²+a²) dy` for a 1D Gaussian line density.
pub fn softened_line_potential(g: f64, mass: f64, sigma: f64, center: f64, a: f64, x: f64) -> f64 {
    let rho = |y: f64| {
        mass * (-(y - center).powi(2) / (2.0 * sigma * sigma)).exp()
            / (2.0 * PI * sigma * sigma).sqrt()
    };
    -g * simpson(
        |y| rho(y) / ((x - y).powi(2) + a * a).sqrt(),
        center - 14.0 * sigma,
        center + 14.0 * sigma,
        20000,
    )
}

/// RMS width of a freely spreading Gaussian, `σ₀·sqrt(1 + (ħt/2mσ₀²)²)`.
pub fn free_width(sigma0: f64, hbar: f64, mass: f64, t: f64) -> f64 {
    let tau = hbar * t / (2.0 * mass * sigma0 * sigma0);
    sigma0 * (1.0 + tau * tau).sqrt()
}

/// Entries `(a, b)` of the Löwdin transform `[[a, b], [b, a]]` for the real
/// Gram matrix `[[1, s], [s, 1]]`.
pub fn lowdin_2x2(s: f64) -> (f64, f64) {
    let p = 1.0 / (1.0 + s).sqrt();
    let m = 1.0 / (1.0 - s).sqrt();
    (0.5 * (p + m), 0.5 * (p - m))
}

/// `(â†[c])^N|0⟩/√N!` by N explicit creation steps.
pub fn ladder_state(mode: &ModeCoefficients, n: u32, labels: Vec<u32>) -> Result<FockExpansion> {
    let mut e = FockExpansion::vacuum(labels);
    for _ in 0..n {
        e = apply_creation(&e, mode)?;
    }
    let factorial: f64 = (1..=n).map(f64::from).product();
    Ok(e.scaled(Complex64::new(1.0 / factorial.sqrt(), 0.0)))
}

/// Normalized `|N;c_L⟩ + |N;c_R⟩` by explicit creation steps.
pub fn ladder_pair_block(
    cl: &ModeCoefficients,
    cr: &ModeCoefficients,
    n: u32,
) -> Result<FockExpansion> {
    let labels: Vec<u32> = (0..cl.len() as u32).collect();
    ladder_state(cl, n, labels.clone())?
        .superpose(&ladder_state(cr, n, labels)?)?
        .normalized()
}

/// Full occupation-basis construction of `Σ_b a_b |N;v1_b⟩⊗|N;v2_b⟩` where the
/// branch orbitals are explicit coefficient vectors, followed by the partial trace.
pub fn brute_force_branches(
    v1: &[ModeCoefficients; 4],
    v2: &[ModeCoefficients; 4],
    n: u32,
    amplitudes: &[Complex64; 4],
) -> Result<EntanglementReport> {
    let d1 = v1[0].len() as u32;
    let d2 = v2[0].len() as u32;
    let mut total: Option<FockExpansion> = None;
    for b in 0..4 {
        let e1 = ladder_state(&v1[b], n, (0..d1).collect())?;
        let e2 = ladder_state(&v2[b], n, (d1..d1 + d2).collect())?;
        let t = tensor_blocks(&e1, &e2)?.scaled(amplitudes[b]);
        total = Some(match total {
            None => t,
            Some(x) => x.superpose(&t)?,
        });
    }
    block_entropy(&total.expect("four branches").normalized()?)
}

pub fn gram_of(vs: &[ModeCoefficients]) -> GramMatrix {
    GramMatrix::new(DMatrix::from_fn(vs.len(), vs.len(), |i, j| {
        vs[i].overlap(&vs[j])
    }))
    .expect("Gram of vectors")
}

pub fn random_unit(rng: &mut impl Rng, k: usize) -> ModeCoefficients {
    let v: Vec<Complex64> = (0..k)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    ModeCoefficients::new(v.into_iter().map(|z| z / norm).collect())
}

/// Point-mass phase of each branch after time `t`: every packet of a branch
/// sits in the Newton potential of the other subsystem's packet, so each
/// ordered pair contributes `-(t/ħ)·G(Nm)²/d_b`. Softening is ignored.
pub fn point_mass_phases(
    centers: &[[f64; 3]; 4],
    g: f64,
    n: u32,
    mass: f64,
    hbar: f64,
    t: f64,
) -> [f64; 4] {
    let nm = f64::from(n) * mass;
    Branch::ALL.map(|b| {
        let [l1, l2] = b.labels();
        let (p, q) = (centers[l1.index()], centers[l2.index()]);
        let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
        2.0 * (-(t / hbar) * g * nm * nm / d)
    })
}

/// Entanglement of the ideal four-branch state with the given branch phases.
pub fn phase_oracle_entanglement(phases: &[f64; 4], n: u32) -> Result<EntanglementReport> {
    let (g1, g2) = ideal_branch_grams();
    let amplitudes = phases.map(|theta| Complex64::from_polar(0.5, theta));
    branch_entanglement(&g1, &g2, n, &amplitudes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_branch_negativity_has_closed_form() {
        // ½Σ e^{iθ_b}|b⟩ with orthonormal sides: (Σσ)² = 1 + |sin(φ/2)|, φ = θ_LL + θ_RR − θ_LR − θ_RL
        for phases in [
            [0.0, 0.0, 0.0, 0.0],
            [0.3, -0.1, 0.2, 0.05],
            [1.0, 0.0, 0.0, 2.0],
        ] {
            let phi: f64 = phases[0] + phases[3] - phases[1] - phases[2];
            let want = (1.0 + (phi / 2.0).sin().abs()).log2();
            let got = phase_oracle_entanglement(&phases, 1)
                .unwrap()
                .log_negativity;
            assert!((got - want).abs() < 1e-12, "{phases:?}: {got} vs {want}");
        }
    }

    #[test]
    fn point_mass_phases_count_both_orderings() {
        let centers = [
            [-3.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [3.0, 0.0, 0.0],
        ];
        let p = point_mass_phases(&centers, 1.0, 2, 0.5, 1.0, 2.0);
        // branch LR pairs 1L and 2R at distance 6: 2·(−t·G(Nm)²/d)
        assert!((p[1] - 2.0 * (-2.0 / 6.0)).abs() < 1e-15);
        assert!((p[2] - 2.0 * (-2.0 / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn quadrature_potentials_match_closed_forms() {
        for r in [0.4, 1.0, 3.0, 6.0] {
            let a = gaussian_potential_quadrature(0.8, 2.0, 1.5, r);
            let b = gaussian_potential_erf(0.8, 2.0, 1.5, r);
            assert!((a - b).abs() < 1e-10 * b.abs());
        }
        // a narrow line density looks like a point mass far away
        let far = softened_line_potential(1.0, 1.0, 0.05, 0.0, 1.0, 30.0);
        assert!((far + 1.0 / (900.0f64 + 1.0).sqrt()).abs() < 1e-6);
    }

    #[test]
    fn lowdin_closed_form_is_inverse_square_root() {
        let (a, b) = lowdin_2x2(0.4);
        // T·G·T = I for G = [[1, s], [s, 1]]
        let s = 0.4;
        let t_g = [a + b * s, a * s + b];
        assert!((t_g[0] * a + t_g[1] * b - 1.0).abs() < 1e-14);
        assert!((t_g[0] * b + t_g[1] * a).abs() < 1e-14);
    }
}
