//! Simulated two-qubit polarisation tomography.
//!
//! Each qubit is measured in the three Pauli bases, giving nine basis groups
//! of four outcomes each (36 product projectors). Reconstruction is linear
//! inversion of the Pauli expectation values followed by a projection onto
//! the closest density matrix.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::photonics::derive_seed;
use crate::qmat::{herm_eigh, kron, CMatrix, DensityMatrix, C64, STATE_TOL};

/// Single-qubit measurement eigenstates. H is the ground state |ψ⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Eigenstate {
    H,
    V,
    D,
    A,
    L,
    R,
}

pub const EIGENSTATES: [Eigenstate; 6] = [
    Eigenstate::H,
    Eigenstate::V,
    Eigenstate::D,
    Eigenstate::A,
    Eigenstate::L,
    Eigenstate::R,
];

impl Eigenstate {
    pub fn label(self) -> &'static str {
        match self {
            Eigenstate::H => "H",
            Eigenstate::V => "V",
            Eigenstate::D => "D",
            Eigenstate::A => "A",
            Eigenstate::L => "L",
            Eigenstate::R => "R",
        }
    }

    /// 0 = Z (H/V), 1 = X (D/A), 2 = Y (L/R).
    pub fn axis(self) -> usize {
        self as usize / 2
    }

    /// Eigenvalue of the Pauli operator on [`Self::axis`].
    pub fn sign(self) -> f64 {
        if (self as usize).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    pub fn ket(self) -> [C64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let r = |x: f64| C64::new(x, 0.0);
        match self {
            Eigenstate::H => [r(1.0), r(0.0)],
            Eigenstate::V => [r(0.0), r(1.0)],
            Eigenstate::D => [r(h), r(h)],
            Eigenstate::A => [r(h), r(-h)],
            Eigenstate::L => [r(h), C64::new(0.0, h)],
            Eigenstate::R => [r(h), C64::new(0.0, -h)],
        }
    }
}

impl fmt::Display for Eigenstate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Eigenstate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EIGENSTATES
            .into_iter()
            .find(|e| e.label() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown projector label {s:?}")))
    }
}

pub const N_SETTINGS: usize = 36;

/// Setting index of the product projector (r, a).
pub fn setting_index(r: Eigenstate, a: Eigenstate) -> usize {
    6 * r as usize + a as usize
}

pub fn setting(index: usize) -> (Eigenstate, Eigenstate) {
    (EIGENSTATES[index / 6], EIGENSTATES[index % 6])
}

/// Basis group (axis_r, axis_a) flattened to 0..9.
fn group_of(index: usize) -> usize {
    let (r, a) = setting(index);
    3 * r.axis() + a.axis()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseModel {
    /// `shots_per_setting` draws per basis group, split over its four outcomes.
    #[default]
    Multinomial,
    /// Independent Poisson count with mean shots·p per setting.
    Poisson,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TomographySettings {
    pub shots_per_setting: u64,
    pub seed: u64,
    pub noise_model: NoiseModel,
}

impl TomographySettings {
    pub fn new(shots_per_setting: u64, seed: u64, noise_model: NoiseModel) -> Result<Self> {
        if shots_per_setting == 0 {
            return Err(Error::OutOfRange {
                name: "shots_per_setting",
                value: 0.0,
                lo: 1.0,
                hi: u64::MAX as f64,
            });
        }
        Ok(Self {
            shots_per_setting,
            seed,
            noise_model,
        })
    }
}

/// Counts for the 36 settings; a missing entry is `None`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountTable {
    counts: [Option<u64>; N_SETTINGS],
}

/// Header of the serialised count table. Labels are H, V, D, A, L, R.
pub const COUNT_HEADER: &str = "setting_r,setting_a,count";

impl CountTable {
    pub fn empty() -> Self {
        Self {
            counts: [None; N_SETTINGS],
        }
    }

    pub fn from_counts(counts: [u64; N_SETTINGS]) -> Self {
        Self {
            counts: counts.map(Some),
        }
    }

    pub fn get(&self, r: Eigenstate, a: Eigenstate) -> Option<u64> {
        self.counts[setting_index(r, a)]
    }

    pub fn set(&mut self, r: Eigenstate, a: Eigenstate, count: u64) {
        self.counts[setting_index(r, a)] = Some(count);
    }

    pub fn complete(&self) -> Result<[u64; N_SETTINGS]> {
        let mut out = [0; N_SETTINGS];
        for (i, c) in self.counts.iter().enumerate() {
            let (r, a) = setting(i);
            out[i] = c.ok_or_else(|| Error::IncompleteTable(format!("missing setting ({r},{a})")))?;
        }
        Ok(out)
    }

    /// Total count of each of the nine basis groups.
    pub fn group_totals(&self) -> Result<[u64; 9]> {
        let counts = self.complete()?;
        let mut totals = [0; 9];
        for (i, c) in counts.iter().enumerate() {
            totals[group_of(i)] += c;
        }
        Ok(totals)
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{COUNT_HEADER}")?;
        for (i, c) in self.counts.iter().enumerate() {
            if let Some(c) = c {
                let (r, a) = setting(i);
                writeln!(out, "{r},{a},{c}")?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut table = Self::empty();
        for (n, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || (n == 0 && line == COUNT_HEADER) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let [r, a, c] = fields[..] else {
                return Err(Error::Parse(format!("line {}: expected 3 fields", n + 1)));
            };
            let (r, a): (Eigenstate, Eigenstate) = (r.parse()?, a.parse()?);
            let c: u64 = c
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))?;
            if table.get(r, a).is_some() {
                return Err(Error::Parse(format!("line {}: duplicate setting ({r},{a})", n + 1)));
            }
            table.set(r, a, c);
        }
        Ok(table)
    }
}

fn check_two_qubit(rho: &DensityMatrix) -> Result<()> {
    if rho.dims() != [2, 2] {
        return Err(Error::DimensionMismatch(4, rho.dim()));
    }
    Ok(())
}

/// tr(Π_i ρ) for all 36 settings.
pub fn born_probabilities(rho: &DensityMatrix) -> Result<[f64; N_SETTINGS]> {
    check_two_qubit(rho)?;
    let mut out = [0.0; N_SETTINGS];
    for (i, p) in out.iter_mut().enumerate() {
        let (r, a) = setting(i);
        let (kr, ka) = (r.ket(), a.ket());
        let ket = [kr[0] * ka[0], kr[0] * ka[1], kr[1] * ka[0], kr[1] * ka[1]];
        *p = rho.matrix().expectation(&ket).re.clamp(0.0, 1.0);
    }
    Ok(out)
}

const PROB_TOL: f64 = 1e-9;

fn check_probabilities(probs: &[f64; N_SETTINGS]) -> Result<()> {
    for &p in probs {
        if !(p.is_finite() && (-PROB_TOL..=1.0 + PROB_TOL).contains(&p)) {
            return Err(Error::OutOfRange {
                name: "probability",
                value: p,
                lo: 0.0,
                hi: 1.0,
            });
        }
    }
    let mut sums = [0.0; 9];
    for (i, p) in probs.iter().enumerate() {
        sums[group_of(i)] += p;
    }
    match sums.iter().find(|s| (*s - 1.0).abs() > PROB_TOL) {
        Some(&s) => Err(Error::NotNormalized(s)),
        None => Ok(()),
    }
}

/// Draws a count table; each basis group uses its own derived seed.
pub fn sample_counts(probs: &[f64; N_SETTINGS], settings: &TomographySettings) -> Result<CountTable> {
    check_probabilities(probs)?;
    let mut counts = [0u64; N_SETTINGS];
    for group in 0..9 {
        let members: Vec<usize> = (0..N_SETTINGS).filter(|&i| group_of(i) == group).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(settings.seed, group as u64, 0));
        match settings.noise_model {
            NoiseModel::Multinomial => {
                let mut left = settings.shots_per_setting;
                let mut mass = 1.0;
                for (k, &i) in members.iter().enumerate() {
                    let p = probs[i].clamp(0.0, 1.0);
                    let c = if k + 1 == members.len() {
                        left
                    } else if mass <= 0.0 || left == 0 {
                        0
                    } else {
                        let q = (p / mass).clamp(0.0, 1.0);
                        Binomial::new(left, q).expect("q in [0,1]").sample(&mut rng)
                    };
                    counts[i] = c;
                    left -= c;
                    mass -= p;
                }
            }
            NoiseModel::Poisson => {
                for &i in &members {
                    let mean = settings.shots_per_setting as f64 * probs[i].max(0.0);
                    counts[i] = if mean > 0.0 {
                        Poisson::new(mean).expect("positive mean").sample(&mut rng) as u64
                    } else {
                        0
                    };
                }
            }
        }
    }
    Ok(CountTable::from_counts(counts))
}

fn pauli(axis: usize) -> CMatrix {
    let (z, o, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0));
    match axis {
        0 => CMatrix::from_rows(&[vec![o, z], vec![z, -o]]),
        1 => CMatrix::from_rows(&[vec![z, o], vec![o, z]]),
        _ => CMatrix::from_rows(&[vec![z, -i], vec![i, z]]),
    }
}

/// Linear inversion from per-setting weights (probabilities or counts).
///
/// Weights are normalised within each basis group; single-qubit expectation
/// values are averaged over the three groups that contain them.
pub fn invert_frequencies(weights: &[f64; N_SETTINGS]) -> Result<CMatrix> {
    let mut totals = [0.0; 9];
    for (i, w) in weights.iter().enumerate() {
        totals[group_of(i)] += w;
    }
    if let Some(g) = totals.iter().position(|&t| t <= 0.0) {
        let names = ["Z", "X", "Y"];
        return Err(Error::IncompleteTable(format!(
            "basis group {}{} has no counts",
            names[g / 3],
            names[g % 3]
        )));
    }
    // corr[a][b] = ⟨σ_a ⊗ σ_b⟩, single_r[a] = ⟨σ_a ⊗ I⟩, single_a[b] = ⟨I ⊗ σ_b⟩
    let mut corr = [[0.0; 3]; 3];
    let mut single_r = [0.0; 3];
    let mut single_a = [0.0; 3];
    for (i, w) in weights.iter().enumerate() {
        let (r, a) = setting(i);
        let f = w / totals[group_of(i)];
        corr[r.axis()][a.axis()] += r.sign() * a.sign() * f;
        single_r[r.axis()] += r.sign() * f / 3.0;
        single_a[a.axis()] += a.sign() * f / 3.0;
    }
    let id = CMatrix::identity(2);
    let mut m = CMatrix::identity(4);
    for a in 0..3 {
        m = &m + &kron(&pauli(a), &id).scale(single_r[a]);
        m = &m + &kron(&id, &pauli(a)).scale(single_a[a]);
        for (b, &c) in corr[a].iter().enumerate() {
            m = &m + &kron(&pauli(a), &pauli(b)).scale(c);
        }
    }
    Ok(m.scale(0.25))
}

/// Hermitian, unit-trace estimate; may have negative eigenvalues.
pub fn linear_inversion(counts: &CountTable) -> Result<CMatrix> {
    invert_frequencies(&counts.complete()?.map(|c| c as f64))
}

/// Closest density matrix in Frobenius norm with the same trace.
///
/// Eigenvalues are sorted descending; from the smallest up, any value that
/// would stay negative after absorbing the running deficit is set to zero,
/// and the accumulated deficit is then spread evenly over the rest.
pub fn project_to_physical(m: &CMatrix) -> Result<DensityMatrix> {
    if m.dim() != 4 {
        return Err(Error::DimensionMismatch(4, m.dim()));
    }
    let dev = m.hermitian_deviation();
    if dev > 1e-10 {
        return Err(Error::NotHermitian(dev));
    }
    let tr = m.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > STATE_TOL {
        return Err(Error::InvalidTrace(tr.re));
    }
    let eig = herm_eigh(&m.hermitian_part())?;
    let clipped = water_fill(&eig.values);
    let out = eig.with_values(&clipped).hermitian_part();
    let tr = out.trace().re;
    Ok(DensityMatrix::from_parts_unchecked(out.scale(1.0 / tr), vec![2, 2]))
}

/// Water-filling on eigenvalues given in ascending order.
pub fn water_fill(ascending: &[f64]) -> Vec<f64> {
    let n = ascending.len();
    let mut out = ascending.to_vec();
    let mut deficit = 0.0;
    for (i, &lam) in ascending.iter().enumerate() {
        let remaining = (n - i) as f64;
        if lam + deficit / remaining < 0.0 {
            deficit += lam;
            out[i] = 0.0;
        } else {
            for v in &mut out[i..] {
                *v += deficit / remaining;
            }
            break;
        }
    }
    out
}

/// Linear inversion followed by physical projection.
pub fn reconstruct(counts: &CountTable) -> Result<DensityMatrix> {
    project_to_physical(&linear_inversion(counts)?)
}

/// Samples counts from `truth` and reconstructs it.
pub fn simulate_tomography(
    truth: &DensityMatrix,
    settings: &TomographySettings,
) -> Result<(CountTable, DensityMatrix)> {
    let counts = sample_counts(&born_probabilities(truth)?, settings)?;
    let rho = reconstruct(&counts)?;
    Ok((counts, rho))
}
