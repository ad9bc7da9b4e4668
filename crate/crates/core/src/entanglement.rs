//! PPT verdicts and negativity for two-qubit states.
//!
//! For 2⊗2 systems a positive partial transpose is necessary and sufficient
//! for separability, so the sign of the smallest PT eigenvalue is an exact
//! entanglement test.

use crate::error::{Error, Result};
use crate::qmat::{herm_eigvals, partial_transpose, DensityMatrix};

/// Default verdict threshold on the smallest partial-transpose eigenvalue.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntanglementReport {
    pub min_pt_eigenvalue: f64,
    pub negativity: f64,
    pub entangled: bool,
}

fn check_two_qubit(rho: &DensityMatrix) -> Result<()> {
    if rho.dims() != [2, 2] {
        return Err(Error::DimensionMismatch(4, rho.dim()));
    }
    Ok(())
}

/// Spectrum of the partial transpose on A, ascending.
pub fn pt_spectrum(rho: &DensityMatrix) -> Result<Vec<f64>> {
    check_two_qubit(rho)?;
    herm_eigvals(&partial_transpose(rho, 1)?)
}

pub fn report(rho: &DensityMatrix, tol: f64) -> Result<EntanglementReport> {
    let spectrum = pt_spectrum(rho)?;
    Ok(EntanglementReport {
        min_pt_eigenvalue: spectrum[0],
        negativity: negativity_from_spectrum(&spectrum),
        entangled: spectrum[0] < -tol,
    })
}

fn negativity_from_spectrum(spectrum: &[f64]) -> f64 {
    spectrum.iter().fold(0.0, |acc, &x| acc + (-x).max(0.0))
}

/// Absolute sum of the negative PT eigenvalues.
pub fn negativity(rho: &DensityMatrix) -> Result<f64> {
    pt_spectrum(rho).map(|s| negativity_from_spectrum(&s))
}

/// True iff the smallest PT eigenvalue is below `-tol`.
pub fn is_entangled(rho: &DensityMatrix, tol: f64) -> Result<bool> {
    Ok(pt_spectrum(rho)?[0] < -tol)
}
