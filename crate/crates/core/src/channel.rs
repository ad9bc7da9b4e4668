//! Channel model and the states it produces.
//!
//! The full R–A–B state is built first. Tracing out B gives the unheralded
//! R–A state, and projecting B gives the heralded one.
//!
//! Basis index 0 is the environment ground state |ψ⟩, index 1 the excited
//! state |ψ⊥⟩. Subsystem order is R, A, B.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{check_range, Error, Result};
use crate::qmat::{kron, partial_trace_raw, CMatrix, DensityMatrix, C64, STATE_TOL};

/// Thermal environment qubit 𝓔 = (1−p_T)|ψ⟩⟨ψ| + p_T|ψ⊥⟩⟨ψ⊥|.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvironmentSpec {
    p_t: f64,
    basis: (String, String),
}

impl EnvironmentSpec {
    pub fn new(p_t: f64) -> Result<Self> {
        Self::with_basis(p_t, "H", "V")
    }

    pub fn with_basis(p_t: f64, ground: &str, excited: &str) -> Result<Self> {
        check_range("p_T", p_t, 0.0, 0.5)?;
        Ok(Self {
            p_t,
            basis: (ground.to_owned(), excited.to_owned()),
        })
    }

    pub fn p_t(&self) -> f64 {
        self.p_t
    }

    /// Labels of (ground, excited).
    pub fn basis(&self) -> (&str, &str) {
        (&self.basis.0, &self.basis.1)
    }
}

/// Success / flip / loss probabilities of the environment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelParams {
    pub ps: f64,
    pub pf: f64,
    pub pl: f64,
}

impl ChannelParams {
    pub fn new(ps: f64, pf: f64, pl: f64) -> Result<Self> {
        check_range("P_S", ps, 0.0, 1.0)?;
        check_range("P_F", pf, 0.0, 1.0)?;
        check_range("P_L", pl, 0.0, 1.0)?;
        let sum = ps + pf + pl;
        if (sum - 1.0).abs() > STATE_TOL {
            return Err(Error::NotNormalized(sum));
        }
        Ok(Self { ps, pf, pl })
    }

    /// Closes the triple with P_F = 1 − P_S − P_L.
    pub fn from_success_loss(ps: f64, pl: f64) -> Result<Self> {
        check_range("P_S", ps, 0.0, 1.0)?;
        check_range("P_L", pl, 0.0, 1.0)?;
        let mut pf = 1.0 - ps - pl;
        if pf < 0.0 {
            if pf < -STATE_TOL {
                return Err(Error::OutOfRange {
                    name: "P_S + P_L",
                    value: ps + pl,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
            pf = 0.0;
        }
        Self::new(ps, pf, pl)
    }
}

/// ΔE/(k_B T) for a two-level environment qubit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalPoint(f64);

impl ThermalPoint {
    pub fn new(delta_e_over_kt: f64) -> Result<Self> {
        if delta_e_over_kt.is_nan() || delta_e_over_kt < 0.0 {
            return Err(Error::OutOfRange {
                name: "ΔE/kT",
                value: delta_e_over_kt,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        Ok(Self(delta_e_over_kt))
    }

    pub fn ratio(self) -> f64 {
        self.0
    }
}

/// Two-level Boltzmann occupation of the excited state, e^{−x}/(1+e^{−x}).
pub fn thermal_p(t: ThermalPoint) -> f64 {
    1.0 / (1.0 + t.0.exp())
}

/// diag(1−p_T, p_T)
pub fn env_state(spec: &EnvironmentSpec) -> DensityMatrix {
    DensityMatrix::from_parts_unchecked(
        CMatrix::from_real_diag(&[1.0 - spec.p_t, spec.p_t]),
        vec![2],
    )
}

/// |Ψ⁻⟩⟨Ψ⁻| with |Ψ⁻⟩ = (|ψψ⊥⟩ − |ψ⊥ψ⟩)/√2.
pub fn singlet() -> DensityMatrix {
    DensityMatrix::from_parts_unchecked(CMatrix::outer(&singlet_ket()), vec![2, 2])
}

pub fn singlet_ket() -> [C64; 4] {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    [C64::new(0.0, 0.0), h, -h, C64::new(0.0, 0.0)]
}

fn half_identity() -> DensityMatrix {
    DensityMatrix::maximally_mixed(vec![2])
}

/// P_S |Ψ⁻⟩⟨Ψ⁻| + (1−P_S) (I/2 ⊗ 𝓔)
pub fn unconditional_state(ps: f64, spec: &EnvironmentSpec) -> Result<DensityMatrix> {
    check_range("P_S", ps, 0.0, 1.0)?;
    let noise = half_identity().tensor(&env_state(spec));
    let mat = &singlet().matrix().scale(ps) + &noise.matrix().scale(1.0 - ps);
    Ok(DensityMatrix::from_parts_unchecked(mat, vec![2, 2]))
}

/// Swaps the last two tensor factors of a three-qubit operator.
fn swap_last_two(m: &CMatrix) -> CMatrix {
    let perm = |i: usize| (i & 0b100) | ((i & 0b010) >> 1) | ((i & 0b001) << 1);
    let mut out = CMatrix::zeros(8);
    for i in 0..8 {
        for j in 0..8 {
            out[(perm(i), perm(j))] = m[(i, j)];
        }
    }
    out
}

/// P_S Ψ⁻_{RA}⊗𝓔_B + P_F Ψ⁻_{RB}⊗𝓔_A + P_L (I/2)⊗𝓔_A⊗𝓔_B, order R, A, B.
pub fn tripartite_state(params: &ChannelParams, spec: &EnvironmentSpec) -> DensityMatrix {
    let env = env_state(spec);
    let success = kron(singlet().matrix(), env.matrix());
    let flip = swap_last_two(&success);
    let loss = kron(&kron(half_identity().matrix(), env.matrix()), env.matrix());
    let mat = &(&success.scale(params.ps) + &flip.scale(params.pf)) + &loss.scale(params.pl);
    DensityMatrix::from_parts_unchecked(mat, vec![2, 2, 2])
}

/// Closed-form state heralded by |ψ⟩⟨ψ|_B, with its probability
/// N = (1−p_T)(1−P_F) + P_F/2.
pub fn conditional_state(
    params: &ChannelParams,
    spec: &EnvironmentSpec,
) -> Result<(DensityMatrix, f64)> {
    let p = spec.p_t;
    let env = env_state(spec);
    let noise = half_identity().tensor(&env);
    let excited_r = CMatrix::from_real_diag(&[0.0, 1.0]);
    let flipped = kron(&excited_r, env.matrix());

    let unnormalised = &(&singlet().matrix().scale((1.0 - p) * params.ps)
        + &noise.matrix().scale((1.0 - p) * params.pl))
        + &flipped.scale(0.5 * params.pf);
    let n = (1.0 - p) * (1.0 - params.pf) + 0.5 * params.pf;
    if n <= 0.0 {
        return Err(Error::ZeroWeight);
    }
    Ok((
        DensityMatrix::from_parts_unchecked(unnormalised.scale(1.0 / n), vec![2, 2]),
        n,
    ))
}

/// Rank-1 projector onto cos(θ/2)|ψ⟩ + e^{iφ} sin(θ/2)|ψ⊥⟩.
pub fn projector_from_angles(theta: f64, phi: f64) -> CMatrix {
    let ket = [
        C64::new((theta / 2.0).cos(), 0.0),
        C64::from_polar((theta / 2.0).sin(), phi),
    ];
    CMatrix::outer(&ket)
}

pub fn ground_projector() -> CMatrix {
    CMatrix::from_real_diag(&[1.0, 0.0])
}

pub fn excited_projector() -> CMatrix {
    CMatrix::from_real_diag(&[0.0, 1.0])
}

fn validate_projector(p: &CMatrix) -> Result<()> {
    if p.dim() != 2 {
        return Err(Error::InvalidProjector(format!("dimension {}", p.dim())));
    }
    let dev = p.hermitian_deviation();
    if dev > STATE_TOL {
        return Err(Error::InvalidProjector(format!("not Hermitian ({dev:e})")));
    }
    let idem = (&(p * p) - p).frobenius_norm();
    if idem > STATE_TOL {
        return Err(Error::InvalidProjector(format!("P² ≠ P ({idem:e})")));
    }
    let tr = p.trace().re;
    if (tr - 1.0).abs() > STATE_TOL {
        return Err(Error::InvalidProjector(format!("rank {tr}")));
    }
    Ok(())
}

/// Applies I⊗I⊗Π on B, traces B out and returns the normalised R–A state
/// with the outcome probability.
pub fn project_b(rho8: &DensityMatrix, projector: &CMatrix) -> Result<(DensityMatrix, f64)> {
    validate_projector(projector)?;
    if rho8.dims() != [2, 2, 2] {
        return Err(Error::DimensionMismatch(8, rho8.dim()));
    }
    let lift = kron(&CMatrix::identity(4), projector);
    let projected = (&(&lift * rho8.matrix()) * &lift).hermitian_part();
    let weight = projected.trace().re;
    if weight <= 1e-15 {
        return Err(Error::ZeroWeight);
    }
    let reduced = partial_trace_raw(&projected, &[2, 2, 2], 2)?;
    let state = reduced.scale(1.0 / weight).hermitian_part();
    Ok((DensityMatrix::from_parts_unchecked(state, vec![2, 2]), weight))
}
