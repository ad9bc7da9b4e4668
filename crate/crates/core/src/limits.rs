//! Cooling-limit boundaries.
//!
//! Closed forms give the critical success probability P_S above which the
//! R–A state stays entangled, without heralding (`uncond_boundary`) and with
//! the auxiliary output projected on the ground state (`cond_boundary`,
//! which depends on p_T and P_L only through their product P_TL).
//! `critical_ps_numeric` recovers the same numbers by bisecting on the
//! smallest partial-transpose eigenvalue of the explicit states, and `sweep`
//! evaluates both over parameter grids.

use rayon::prelude::*;

use crate::channel::{conditional_state, unconditional_state, ChannelParams, EnvironmentSpec};
use crate::entanglement::{negativity, pt_spectrum};
use crate::error::{check_range, Bracket, Error, Result};
use crate::qmat::DensityMatrix;

/// Two values closer than this count as equal when comparing P_S to a
/// boundary; equality is "not quantum".
pub const BOUNDARY_SLACK: f64 = 1e-12;

/// Bisection stops once the bracket is this narrow.
pub const BISECTION_TOL: f64 = 1e-8;

const MONOTONE_SAMPLES: usize = 33;
const MONOTONE_SLACK: f64 = 1e-12;

/// √(p(1−p)) / (1 + √(p(1−p)))
pub fn uncond_boundary(p_t: f64) -> Result<f64> {
    check_range("p_T", p_t, 0.0, 0.5)?;
    let s = (p_t * (1.0 - p_t)).sqrt();
    Ok(s / (1.0 + s))
}

/// p_T / P_S² < 1, the small-p_T form of the unconditional limit.
pub fn uncond_approx_ok(ps: f64, p_t: f64) -> Result<bool> {
    check_range("P_S", ps, 0.0, 1.0)?;
    check_range("p_T", p_t, 0.0, 1.0)?;
    Ok(ratio_below_one(p_t, ps))
}

/// (√(x(4−3x)) − x)/2 with x = P_TL = p_T·P_L.
pub fn cond_boundary(p_tl: f64) -> Result<f64> {
    check_range("P_TL", p_tl, 0.0, 1.0)?;
    Ok(((p_tl * (4.0 - 3.0 * p_tl)).sqrt() - p_tl) / 2.0)
}

/// p_T·P_L / P_S² < 1, the small-p_T form of the conditional limit.
pub fn cond_approx_ok(ps: f64, p_t: f64, pl: f64) -> Result<bool> {
    check_range("P_S", ps, 0.0, 1.0)?;
    check_range("p_T", p_t, 0.0, 1.0)?;
    check_range("P_L", pl, 0.0, 1.0)?;
    Ok(ratio_below_one(p_t * pl, ps))
}

fn ratio_below_one(error: f64, ps: f64) -> bool {
    if ps == 0.0 {
        return false;
    }
    error / (ps * ps) < 1.0 - BOUNDARY_SLACK
}

/// √(P_L/2): the conditional boundary at p_T = 1/2 for small P_L.
pub fn high_temp_boundary(pl: f64) -> Result<f64> {
    check_range("P_L", pl, 0.0, 1.0)?;
    Ok((pl / 2.0).sqrt())
}

/// Which state the numeric boundary search probes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    Unconditional,
    Conditional,
}

fn probe_state(route: Route, ps: f64, spec: &EnvironmentSpec, pl: f64) -> Result<DensityMatrix> {
    match route {
        Route::Unconditional => unconditional_state(ps, spec),
        Route::Conditional => {
            let params = ChannelParams::from_success_loss(ps, pl)?;
            Ok(conditional_state(&params, spec)?.0)
        }
    }
}

/// Critical P_S found by bisection on the zero of the smallest PT eigenvalue.
///
/// The bracket is [0, 1] unconditionally and [0, 1 − P_L] with P_F closing
/// the triple in the conditional case. Before bisecting, negativity is
/// sampled across the bracket and must be non-decreasing in P_S.
pub fn critical_ps_numeric(p_t: f64, pl: f64, route: Route) -> Result<f64> {
    if !(p_t > 0.0 && p_t <= 0.5) {
        return Err(Error::OutOfRange {
            name: "p_T",
            value: p_t,
            lo: 0.0,
            hi: 0.5,
        });
    }
    let spec = EnvironmentSpec::new(p_t)?;
    let hi_end = match route {
        Route::Unconditional => 1.0,
        Route::Conditional => {
            if !(0.0..1.0).contains(&pl) {
                return Err(Error::OutOfRange {
                    name: "P_L",
                    value: pl,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
            1.0 - pl
        }
    };
    let min_eig = |ps: f64| -> Result<f64> { Ok(pt_spectrum(&probe_state(route, ps, &spec, pl)?)?[0]) };

    let mut previous = 0.0f64;
    for k in 0..MONOTONE_SAMPLES {
        let ps = hi_end * k as f64 / (MONOTONE_SAMPLES - 1) as f64;
        let neg = (-min_eig(ps)?).max(0.0);
        if neg < previous - MONOTONE_SLACK {
            return Err(Error::NotMonotone);
        }
        previous = neg;
    }

    let (mut lo, mut hi) = (0.0, hi_end);
    if min_eig(lo)? < 0.0 {
        return Err(Error::NoSignChange(Bracket::AlwaysEntangled));
    }
    if min_eig(hi)? >= 0.0 {
        return Err(Error::NoSignChange(Bracket::NeverEntangled));
    }
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if min_eig(mid)? < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Closed-form verdicts at one (p_T, P_S, P_L) point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitVerdict {
    pub unconditional_ok: bool,
    pub conditional_ok: bool,
    pub uncond_boundary_ps: f64,
    pub cond_boundary_ps: f64,
}

impl LimitVerdict {
    pub fn regime(&self) -> Regime {
        if self.unconditional_ok {
            Regime::Unconditional
        } else if self.conditional_ok {
            Regime::ConditionalOnly
        } else {
            Regime::Separable
        }
    }
}

/// The three point classes of the experiment's parameter space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Regime {
    /// Entangled without heralding.
    Unconditional,
    /// Separable without heralding, entangled once B is projected.
    ConditionalOnly,
    Separable,
}

impl Regime {
    pub fn from_verdicts(unconditional: bool, conditional: bool) -> Self {
        match (unconditional, conditional) {
            (true, _) => Regime::Unconditional,
            (false, true) => Regime::ConditionalOnly,
            (false, false) => Regime::Separable,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Regime::Unconditional => "unconditional",
            Regime::ConditionalOnly => "conditional_only",
            Regime::Separable => "separable",
        }
    }
}

fn feasible(ps: f64, pl: f64) -> bool {
    ps + pl <= 1.0 + BOUNDARY_SLACK
}

/// Strict "P_S > boundary" with the boundary itself excluded.
pub fn exceeds(ps: f64, boundary: f64) -> bool {
    ps - boundary > BOUNDARY_SLACK
}

pub fn evaluate(p_t: f64, ps: f64, pl: f64) -> Result<LimitVerdict> {
    check_range("P_S", ps, 0.0, 1.0)?;
    check_range("P_L", pl, 0.0, 1.0)?;
    let ub = uncond_boundary(p_t)?;
    let cb = cond_boundary(p_t * pl)?;
    Ok(LimitVerdict {
        unconditional_ok: exceeds(ps, ub),
        conditional_ok: feasible(ps, pl) && exceeds(ps, cb),
        uncond_boundary_ps: ub,
        cond_boundary_ps: cb,
    })
}

/// Values along one grid axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis(pub Vec<f64>);

impl Axis {
    /// `steps` evenly spaced values from `start` to `stop` inclusive.
    pub fn linspace(start: f64, stop: f64, steps: usize) -> Self {
        match steps {
            0 => Axis(vec![]),
            1 => Axis(vec![start]),
            _ => Axis(
                (0..steps)
                    .map(|k| start + (stop - start) * k as f64 / (steps - 1) as f64)
                    .collect(),
            ),
        }
    }
}

/// Either a full Cartesian grid or an explicit list of (p_T, P_L, P_S) points.
#[derive(Clone, Debug, PartialEq)]
pub enum SweepGrid {
    Cartesian { p_t: Axis, p_l: Axis, p_s: Axis },
    Points(Vec<(f64, f64, f64)>),
}

impl SweepGrid {
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        match self {
            SweepGrid::Points(p) => p.clone(),
            SweepGrid::Cartesian { p_t, p_l, p_s } => {
                let mut out = Vec::with_capacity(p_t.0.len() * p_l.0.len() * p_s.0.len());
                for &t in &p_t.0 {
                    for &l in &p_l.0 {
                        for &s in &p_s.0 {
                            out.push((t, l, s));
                        }
                    }
                }
                out
            }
        }
    }
}

/// One evaluated grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub p_t: f64,
    pub ps: f64,
    pub pl: f64,
    pub p_tl: f64,
    pub verdict: LimitVerdict,
    /// Negativity of the heralded state; `None` when P_S + P_L > 1.
    pub numeric_negativity: Option<f64>,
    pub feasible: bool,
    /// Whether the point lies on the 2·P_S + P_L = 1 plane of the
    /// single-noise-source photonic setup.
    pub photonic_plane: bool,
}

fn sweep_point((p_t, pl, ps): (f64, f64, f64)) -> Result<SweepRecord> {
    let verdict = evaluate(p_t, ps, pl)?;
    let feasible = feasible(ps, pl);
    let numeric_negativity = if feasible {
        let params = ChannelParams::from_success_loss(ps, pl)?;
        let (state, _) = conditional_state(&params, &EnvironmentSpec::new(p_t)?)?;
        Some(negativity(&state)?)
    } else {
        None
    };
    Ok(SweepRecord {
        p_t,
        ps,
        pl,
        p_tl: p_t * pl,
        verdict,
        numeric_negativity,
        feasible,
        photonic_plane: (2.0 * ps + pl - 1.0).abs() <= BOUNDARY_SLACK,
    })
}

/// Evaluates every grid point in parallel; output is sorted by (P_L, p_T, P_S).
pub fn sweep(grid: &SweepGrid) -> Result<Vec<SweepRecord>> {
    let mut records = grid
        .points()
        .into_par_iter()
        .map(sweep_point)
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| {
        a.pl.total_cmp(&b.pl)
            .then(a.p_t.total_cmp(&b.p_t))
            .then(a.ps.total_cmp(&b.ps))
    });
    Ok(records)
}

/// Boundary values at one (p_T, P_L) point.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceRecord {
    pub p_t: f64,
    pub pl: f64,
    pub p_tl: f64,
    pub uncond_boundary: f64,
    pub cond_boundary: f64,
    pub high_temp_boundary: f64,
    /// Bisection results; `None` when p_T = 0 or no crossing exists.
    pub uncond_numeric: Option<f64>,
    pub cond_numeric: Option<f64>,
}

fn numeric_or_none(p_t: f64, pl: f64, route: Route) -> Result<Option<f64>> {
    if p_t == 0.0 || (route == Route::Conditional && pl >= 1.0) {
        return Ok(None);
    }
    match critical_ps_numeric(p_t, pl, route) {
        Ok(v) => Ok(Some(v)),
        Err(Error::NoSignChange(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn surface_point(p_t: f64, pl: f64, numeric: bool) -> Result<SurfaceRecord> {
    let (uncond_numeric, cond_numeric) = if numeric {
        (
            numeric_or_none(p_t, pl, Route::Unconditional)?,
            numeric_or_none(p_t, pl, Route::Conditional)?,
        )
    } else {
        (None, None)
    };
    Ok(SurfaceRecord {
        p_t,
        pl,
        p_tl: p_t * pl,
        uncond_boundary: uncond_boundary(p_t)?,
        cond_boundary: cond_boundary(p_t * pl)?,
        high_temp_boundary: high_temp_boundary(pl)?,
        uncond_numeric,
        cond_numeric,
    })
}

/// Boundary surfaces over a (p_T, P_L) grid, sorted by (P_L, p_T).
pub fn surface(p_t: &Axis, p_l: &Axis, numeric: bool) -> Result<Vec<SurfaceRecord>> {
    let points: Vec<(f64, f64)> = p_l
        .0
        .iter()
        .flat_map(|&l| p_t.0.iter().map(move |&t| (t, l)))
        .collect();
    points
        .into_par_iter()
        .map(|(t, l)| surface_point(t, l, numeric))
        .collect()
}
