//! Photon-level Monte Carlo of the beam-splitter channel simulator.
//!
//! A pair source emits singlets: one photon goes straight to detector R, the
//! other meets an attenuated noise source on a 50:50 beam splitter (BS1).
//! One BS1 output is discarded, the other is split again 50:50 (BS2) towards
//! outputs A and B. Residual unpaired photons also reach R. Each of the three
//! sources is an independent Poisson stream, and every beam-splitter choice
//! is an independent fair coin.
//!
//! A coincidence window `[t_R, t_R + τ]` opens at every R click. Windows with
//! exactly one click at each of R, A and B are heralded triples. A signal
//! photon at A makes a triple a success and one at B makes it a flip; a
//! triple without a signal photon is a loss. Windows with two or more clicks
//! at any output are dropped. Each triple also records whether the B photon
//! would pass an analyser projecting on the ground polarisation.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::channel::{conditional_state, ChannelParams, EnvironmentSpec};
use crate::error::{check_range, Error, Result};
use crate::qmat::DensityMatrix;

/// Polarisation state of the injected noise photons.
#[derive(Clone, Debug, PartialEq)]
pub enum NoisePolarization {
    /// Every noise photon in |ψ⟩.
    Ground,
    /// Every noise photon in |ψ⊥⟩.
    Excited,
    /// Excited with probability p_T.
    Thermal(EnvironmentSpec),
}

impl NoisePolarization {
    pub fn excited_probability(&self) -> f64 {
        match self {
            NoisePolarization::Ground => 0.0,
            NoisePolarization::Excited => 1.0,
            NoisePolarization::Thermal(spec) => spec.p_t(),
        }
    }
}

/// Source rates (1/s) and coincidence window (s).
#[derive(Clone, Debug, PartialEq)]
pub struct RateConfig {
    pub rate_singlet: f64,
    pub rate_singles: f64,
    pub rate_noise: f64,
    pub window: f64,
    pub noise: NoisePolarization,
}

/// Mean occupation per window above which multi-photon windows stop being rare.
pub const OCCUPANCY_WARN: f64 = 0.1;

impl RateConfig {
    pub fn new(
        rate_singlet: f64,
        rate_singles: f64,
        rate_noise: f64,
        window: f64,
        noise: NoisePolarization,
    ) -> Result<Self> {
        let cfg = Self {
            rate_singlet,
            rate_singles,
            rate_noise,
            window,
            noise,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("rate_singlet", self.rate_singlet, 0.0, f64::MAX)?;
        check_range("rate_singles", self.rate_singles, 0.0, f64::MAX)?;
        check_range("rate_noise", self.rate_noise, 0.0, f64::MAX)?;
        if !(self.window.is_finite() && self.window > 0.0) {
            return Err(Error::OutOfRange {
                name: "window",
                value: self.window,
                lo: f64::MIN_POSITIVE,
                hi: f64::MAX,
            });
        }
        Ok(())
    }

    pub fn with_noise(&self, noise: NoisePolarization) -> Self {
        Self {
            noise,
            ..self.clone()
        }
    }

    /// Sources whose mean count per window exceeds [`OCCUPANCY_WARN`].
    pub fn warnings(&self) -> Vec<String> {
        [
            ("rate_singlet", self.rate_singlet),
            ("rate_singles", self.rate_singles),
            ("rate_noise", self.rate_noise),
        ]
        .iter()
        .filter(|(_, r)| r * self.window > OCCUPANCY_WARN)
        .map(|(name, r)| format!("{name}·window = {:.3} exceeds {OCCUPANCY_WARN}", r * self.window))
        .collect()
    }

    /// Same rates and window; noise polarisation may differ.
    fn same_source(&self, other: &Self) -> bool {
        self.rate_singlet == other.rate_singlet
            && self.rate_singles == other.rate_singles
            && self.rate_noise == other.rate_noise
            && self.window == other.window
    }

    /// r = R_Ψ / (4 R_S): singlet rate relative to the R-arm background.
    pub fn singlet_fraction(&self) -> Result<f64> {
        if self.rate_singles <= 0.0 {
            return Err(Error::OutOfRange {
                name: "rate_singles",
                value: self.rate_singles,
                lo: f64::MIN_POSITIVE,
                hi: f64::MAX,
            });
        }
        Ok(self.rate_singlet / (4.0 * self.rate_singles))
    }
}

/// 𝓡 = R_N R_S τ / R_Ψ
pub fn rate_ratio(config: &RateConfig) -> Result<f64> {
    if config.rate_singlet <= 0.0 {
        return Err(Error::OutOfRange {
            name: "rate_singlet",
            value: config.rate_singlet,
            lo: f64::MIN_POSITIVE,
            hi: f64::MAX,
        });
    }
    Ok(config.rate_noise * config.rate_singles * config.window / config.rate_singlet)
}

/// (1/(2+r), 1/(2+r), r/(2+r)); always on the 2·P_S + P_L = 1 plane.
pub fn params_from_ratio(r: f64) -> Result<ChannelParams> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::OutOfRange {
            name: "rate ratio",
            value: r,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    if r.is_infinite() {
        return ChannelParams::new(0.0, 0.0, 1.0);
    }
    let ps = 1.0 / (2.0 + r);
    let pl = r / (2.0 + r);
    // Close on P_F so the triple sums to 1 exactly.
    ChannelParams::new(ps, 1.0 - ps - pl, pl)
}

/// Upper bounds on P_L reachable with a strong noise source.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AccessibleBounds {
    /// P_S / r
    pub from_success: f64,
    /// (1 − P_S)/(1 − r); `None` when r ≥ 1 leaves it unbounded.
    pub from_complement: Option<f64>,
}

impl AccessibleBounds {
    pub fn violated_by(&self, pl: f64) -> bool {
        pl >= self.from_success || self.from_complement.is_some_and(|b| pl >= b)
    }
}

pub fn accessible_bounds(ps: f64, r_singlet: f64) -> Result<AccessibleBounds> {
    check_range("P_S", ps, 0.0, 1.0)?;
    if !(r_singlet.is_finite() && r_singlet > 0.0) {
        return Err(Error::OutOfRange {
            name: "r_singlet",
            value: r_singlet,
            lo: f64::MIN_POSITIVE,
            hi: f64::MAX,
        });
    }
    Ok(AccessibleBounds {
        from_success: ps / r_singlet,
        from_complement: (r_singlet < 1.0).then(|| (1.0 - ps) / (1.0 - r_singlet)),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Detector {
    R,
    A,
    B,
}

impl Detector {
    pub fn label(self) -> &'static str {
        match self {
            Detector::R => "R",
            Detector::A => "A",
            Detector::B => "B",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// Either photon of a down-converted pair.
    Signal,
    Noise,
    /// Unpaired photon in the R arm.
    Single,
}

impl Provenance {
    pub fn label(self) -> &'static str {
        match self {
            Provenance::Signal => "signal",
            Provenance::Noise => "noise",
            Provenance::Single => "single",
        }
    }
}

/// One detector click; `time` is seconds from the start of its segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Click {
    pub time: f64,
    pub detector: Detector,
    pub provenance: Provenance,
    /// True when the photon is in the excited polarisation.
    pub excited: bool,
}

/// Header line of the time-tag dump.
pub const TIMETAG_HEADER: &str = "time_ps,detector,provenance";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Outcome {
    Success = 0,
    Flip = 1,
    Loss = 2,
}

/// Heralded-triple counts.
///
/// `n_*` classify every triple by provenance. `heralded_*` count the subset
/// whose B photon passes the ground-state analyser.
#[derive(Clone, Debug, PartialEq)]
pub struct CoincidenceTally {
    pub n_success: u64,
    pub n_flip: u64,
    pub n_loss: u64,
    pub heralded_success: u64,
    pub heralded_flip: u64,
    pub heralded_loss: u64,
    config: Option<RateConfig>,
}

/// Empirical probabilities with binomial standard errors √(p(1−p)/n).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub values: [f64; 3],
    pub std_errors: [f64; 3],
    pub n: u64,
}

impl Estimate {
    fn from_counts(counts: [u64; 3]) -> Result<Self> {
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::EmptyTally);
        }
        let nf = n as f64;
        let values = counts.map(|c| c as f64 / nf);
        let std_errors = values.map(|p| (p * (1.0 - p) / nf).sqrt());
        Ok(Self {
            values,
            std_errors,
            n,
        })
    }

    pub fn params(&self) -> Result<ChannelParams> {
        let [ps, pf, pl] = self.values;
        ChannelParams::new(ps, 1.0 - ps - pl, pl).or_else(|_| ChannelParams::new(ps, pf, pl))
    }
}

impl CoincidenceTally {
    pub fn empty() -> Self {
        Self {
            n_success: 0,
            n_flip: 0,
            n_loss: 0,
            heralded_success: 0,
            heralded_flip: 0,
            heralded_loss: 0,
            config: None,
        }
    }

    /// Tally with no analyser information or source config, e.g. from recorded data.
    pub fn from_counts(n_success: u64, n_flip: u64, n_loss: u64) -> Self {
        Self {
            n_success,
            n_flip,
            n_loss,
            ..Self::empty()
        }
    }

    fn for_config(config: &RateConfig) -> Self {
        Self {
            config: Some(config.clone()),
            ..Self::empty()
        }
    }

    pub fn config(&self) -> Option<&RateConfig> {
        self.config.as_ref()
    }

    pub fn n_triple(&self) -> u64 {
        self.n_success + self.n_flip + self.n_loss
    }

    pub fn n_heralded(&self) -> u64 {
        self.heralded_success + self.heralded_flip + self.heralded_loss
    }

    fn record(&mut self, outcome: Outcome, passes: bool) {
        let (n, h) = match outcome {
            Outcome::Success => (&mut self.n_success, &mut self.heralded_success),
            Outcome::Flip => (&mut self.n_flip, &mut self.heralded_flip),
            Outcome::Loss => (&mut self.n_loss, &mut self.heralded_loss),
        };
        *n += 1;
        if passes {
            *h += 1;
        }
    }

    /// Sums two tallies. Associative and commutative in the counts.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        let config = match (&self.config, &other.config) {
            (Some(a), Some(b)) if !a.same_source(b) => return Err(Error::MismatchedConfigs),
            (Some(a), _) => Some(a.clone()),
            (None, b) => b.clone(),
        };
        Ok(Self {
            n_success: self.n_success + other.n_success,
            n_flip: self.n_flip + other.n_flip,
            n_loss: self.n_loss + other.n_loss,
            heralded_success: self.heralded_success + other.heralded_success,
            heralded_flip: self.heralded_flip + other.heralded_flip,
            heralded_loss: self.heralded_loss + other.heralded_loss,
            config,
        })
    }

    /// Empirical (P_S, P_F, P_L) over all triples.
    pub fn empirical(&self) -> Result<Estimate> {
        Estimate::from_counts([self.n_success, self.n_flip, self.n_loss])
    }

    /// Outcome fractions among triples that pass the B analyser.
    pub fn heralded_fractions(&self) -> Result<Estimate> {
        Estimate::from_counts([self.heralded_success, self.heralded_flip, self.heralded_loss])
    }

    /// Fraction of triples passing the analyser, with its standard error.
    pub fn herald_rate(&self) -> Result<(f64, f64)> {
        let n = self.n_triple();
        if n == 0 {
            return Err(Error::EmptyTally);
        }
        let p = self.n_heralded() as f64 / n as f64;
        Ok((p, (p * (1.0 - p) / n as f64).sqrt()))
    }

    /// 2·P_S + P_L − 1 (equal to P_S − P_F) and its multinomial standard error.
    pub fn plane_residual(&self) -> Result<(f64, f64)> {
        let est = self.empirical()?;
        let [ps, pf, _] = est.values;
        let d = ps - pf;
        Ok((d, ((ps + pf - d * d) / est.n as f64).sqrt()))
    }

    /// P_L / P_S, `None` without successes.
    pub fn loss_ratio(&self) -> Option<f64> {
        (self.n_success > 0).then(|| self.n_loss as f64 / self.n_success as f64)
    }

    fn cells(&self) -> [u64; 6] {
        [
            self.heralded_success,
            self.heralded_flip,
            self.heralded_loss,
            self.n_success - self.heralded_success,
            self.n_flip - self.heralded_flip,
            self.n_loss - self.heralded_loss,
        ]
    }

    fn add_cell(&mut self, cell: usize) {
        let outcome = match cell % 3 {
            0 => Outcome::Success,
            1 => Outcome::Flip,
            _ => Outcome::Loss,
        };
        self.record(outcome, cell < 3);
    }
}

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(SPLITMIX_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `stream` in segment `segment`:
/// `splitmix64(splitmix64(master ^ splitmix64(stream)) ^ segment)`.
/// Each stream's seed depends only on its own id.
pub fn derive_seed(master: u64, segment: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(stream)) ^ segment)
}

const STREAM_PAIRS: u64 = 1;
const STREAM_SINGLES: u64 = 2;
const STREAM_NOISE: u64 = 3;

/// Arrival times of a Poisson process on [0, duration).
pub fn poisson_arrivals<R: Rng>(rate: f64, duration: f64, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::new();
    if rate <= 0.0 {
        return out;
    }
    let gap = Exp::new(rate).expect("positive rate");
    let mut t = gap.sample(rng);
    while t < duration {
        out.push(t);
        t += gap.sample(rng);
    }
    out
}

/// Target number of source events per segment.
const SEGMENT_EVENTS: f64 = 262_144.0;

/// Splits `duration` into segments of equal length (the last may be shorter).
fn segments(config: &RateConfig, duration: f64) -> Vec<(u64, f64, f64)> {
    let total_rate = config.rate_singlet + config.rate_singles + config.rate_noise;
    let len = if total_rate > 0.0 {
        (SEGMENT_EVENTS / total_rate).max(10.0 * config.window).min(duration)
    } else {
        duration
    };
    let count = (duration / len).ceil().max(1.0) as u64;
    (0..count)
        .map(|k| {
            let start = k as f64 * len;
            (k, start, (duration - start).min(len))
        })
        .collect()
}

/// Generates all clicks of one segment, sorted by time.
fn segment_clicks(config: &RateConfig, seed: u64, segment: u64, length: f64) -> Vec<Click> {
    let mut clicks = Vec::new();

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, segment, STREAM_PAIRS));
    for t in poisson_arrivals(config.rate_singlet, length, &mut rng) {
        // Singlet: in the H/V basis the two photons are always orthogonal.
        let r_excited = rng.random_bool(0.5);
        clicks.push(Click {
            time: t,
            detector: Detector::R,
            provenance: Provenance::Signal,
            excited: r_excited,
        });
        if rng.random_bool(0.5) {
            let detector = if rng.random_bool(0.5) { Detector::A } else { Detector::B };
            clicks.push(Click {
                time: t,
                detector,
                provenance: Provenance::Signal,
                excited: !r_excited,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, segment, STREAM_SINGLES));
    for t in poisson_arrivals(config.rate_singles, length, &mut rng) {
        clicks.push(Click {
            time: t,
            detector: Detector::R,
            provenance: Provenance::Single,
            excited: rng.random_bool(0.5),
        });
    }

    let p_excited = config.noise.excited_probability();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, segment, STREAM_NOISE));
    for t in poisson_arrivals(config.rate_noise, length, &mut rng) {
        let excited = rng.random_bool(p_excited);
        if rng.random_bool(0.5) {
            let detector = if rng.random_bool(0.5) { Detector::A } else { Detector::B };
            clicks.push(Click {
                time: t,
                detector,
                provenance: Provenance::Noise,
                excited,
            });
        }
    }

    clicks.sort_by(|a, b| a.time.total_cmp(&b.time));
    clicks
}

/// Scans the coincidence windows of one segment.
fn tally_clicks(config: &RateConfig, clicks: &[Click], length: f64) -> CoincidenceTally {
    let mut tally = CoincidenceTally::for_config(config);
    let tau = config.window;
    let mut start = 0usize;
    for click in clicks.iter().filter(|c| c.detector == Detector::R) {
        let t0 = click.time;
        if t0 + tau > length {
            break;
        }
        while clicks[start].time < t0 {
            start += 1;
        }
        let (mut n_r, mut a, mut b) = (0u32, Vec::with_capacity(1), Vec::with_capacity(1));
        for c in clicks[start..].iter().take_while(|c| c.time <= t0 + tau) {
            match c.detector {
                Detector::R => n_r += 1,
                Detector::A => a.push(c),
                Detector::B => b.push(c),
            }
        }
        if n_r != 1 || a.len() != 1 || b.len() != 1 {
            continue;
        }
        let outcome = if a[0].provenance == Provenance::Signal {
            Outcome::Success
        } else if b[0].provenance == Provenance::Signal {
            Outcome::Flip
        } else {
            Outcome::Loss
        };
        tally.record(outcome, !b[0].excited);
    }
    tally
}

fn check_duration(duration: f64) -> Result<()> {
    if duration.is_finite() && duration > 0.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "duration",
            value: duration,
            lo: f64::MIN_POSITIVE,
            hi: f64::MAX,
        })
    }
}

/// Runs the Monte Carlo for `duration` seconds.
///
/// Time is cut into fixed segments, each with its own derived seeds; a
/// window that would run past its segment's end is not evaluated. Segments
/// run in parallel and are summed, so the result depends only on
/// `(config, duration, seed)`.
pub fn simulate_streams(config: &RateConfig, duration: f64, seed: u64) -> Result<CoincidenceTally> {
    config.validate()?;
    check_duration(duration)?;
    segments(config, duration)
        .into_par_iter()
        .map(|(k, _, len)| Ok(tally_clicks(config, &segment_clicks(config, seed, k, len), len)))
        .try_reduce(|| CoincidenceTally::for_config(config), |a, b| a.merge(&b))
}

/// Same run as [`simulate_streams`], also writing every click as
/// `time_ps,detector,provenance` after a [`TIMETAG_HEADER`] line.
pub fn simulate_with_timetags<W: Write>(
    config: &RateConfig,
    duration: f64,
    seed: u64,
    out: &mut W,
) -> std::io::Result<CoincidenceTally> {
    let invalid = |e: Error| std::io::Error::new(std::io::ErrorKind::InvalidInput, e.to_string());
    config.validate().map_err(invalid)?;
    check_duration(duration).map_err(invalid)?;
    writeln!(out, "{TIMETAG_HEADER}")?;
    let mut total = CoincidenceTally::for_config(config);
    for (k, start, len) in segments(config, duration) {
        let clicks = segment_clicks(config, seed, k, len);
        let start_ps = (start * 1e12).round() as u64;
        for c in &clicks {
            let ps = start_ps + (c.time * 1e12).round() as u64;
            writeln!(out, "{ps},{},{}", c.detector.label(), c.provenance.label())?;
        }
        total = total.merge(&tally_clicks(config, &clicks, len)).map_err(invalid)?;
    }
    Ok(total)
}

/// Mixes a ground-noise record and an excited-noise record into one with
/// excited fraction `p_t`.
///
/// Each output event comes from the excited record with probability `p_t`,
/// otherwise from the ground record, drawn without replacement. Mixing stops
/// when the record selected next is exhausted, so every recorded triple is
/// used at most once.
pub fn mix_detections(
    tally_ground: &CoincidenceTally,
    tally_excited: &CoincidenceTally,
    p_t: f64,
    seed: u64,
) -> Result<CoincidenceTally> {
    let spec = EnvironmentSpec::new(p_t)?;
    let config = match (tally_ground.config(), tally_excited.config()) {
        (Some(g), Some(e)) => {
            let polarised = g.noise == NoisePolarization::Ground && e.noise == NoisePolarization::Excited;
            if !polarised || !g.same_source(e) {
                return Err(Error::MismatchedConfigs);
            }
            Some(g.with_noise(NoisePolarization::Thermal(spec)))
        }
        (None, None) => None,
        _ => return Err(Error::MismatchedConfigs),
    };
    let mut remaining = [tally_ground.cells(), tally_excited.cells()];
    let mut out = CoincidenceTally {
        config,
        ..CoincidenceTally::empty()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, 0));
    loop {
        let which = usize::from(rng.random_bool(p_t));
        let total: u64 = remaining[which].iter().sum();
        if total == 0 {
            break;
        }
        let mut pick = rng.random_range(0..total);
        let cell = remaining[which]
            .iter()
            .position(|&c| {
                if pick < c {
                    true
                } else {
                    pick -= c;
                    false
                }
            })
            .expect("pick below total");
        remaining[which][cell] -= 1;
        out.add_cell(cell);
    }
    Ok(out)
}

/// Heralded R–A state implied by the tally's empirical channel parameters.
pub fn heralded_state_estimate(
    tally: &CoincidenceTally,
    spec: &EnvironmentSpec,
) -> Result<DensityMatrix> {
    let params = tally.empirical()?.params()?;
    Ok(conditional_state(&params, spec)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::singlet;
    use approx::assert_abs_diff_eq;

    fn config(rn: f64) -> RateConfig {
        RateConfig::new(1e3, 1e4, rn, 1e-9, NoisePolarization::Ground).unwrap()
    }

    #[test]
    fn rate_ratio_examples() {
        assert_eq!(rate_ratio(&config(0.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(rate_ratio(&config(1e5)).unwrap(), 1e-3, epsilon = 1e-15);
        let mut c = config(1e5);
        c.window *= 2.0;
        assert_abs_diff_eq!(rate_ratio(&c).unwrap(), 2e-3, epsilon = 1e-15);
        c.rate_singlet = 0.0;
        assert!(rate_ratio(&c).is_err());
    }

    #[test]
    fn params_from_ratio_examples() {
        let p = params_from_ratio(0.0).unwrap();
        assert_eq!((p.ps, p.pf, p.pl), (0.5, 0.5, 0.0));
        let p = params_from_ratio(2.0).unwrap();
        assert_eq!((p.ps, p.pf, p.pl), (0.25, 0.25, 0.5));
        let p = params_from_ratio(1e12).unwrap();
        assert!(p.ps < 1e-11 && p.pl > 1.0 - 1e-11);
        let p = params_from_ratio(f64::INFINITY).unwrap();
        assert_eq!((p.ps, p.pf, p.pl), (0.0, 0.0, 1.0));
        assert!(params_from_ratio(-0.1).is_err());
        let p = params_from_ratio(0.37).unwrap();
        assert_abs_diff_eq!(2.0 * p.ps + p.pl, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn accessible_bounds_examples() {
        let b = accessible_bounds(0.1, 0.5).unwrap();
        assert_abs_diff_eq!(b.from_success, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(b.from_complement.unwrap(), 1.8, epsilon = 1e-15);
        assert!(b.violated_by(0.25) && !b.violated_by(0.15));
        assert!(accessible_bounds(1e-9, 0.5).unwrap().from_success < 1e-8);
        let half = accessible_bounds(0.1, 0.25).unwrap();
        assert_abs_diff_eq!(half.from_success, 2.0 * b.from_success, epsilon = 1e-15);
        assert!(accessible_bounds(0.1, 1.5).unwrap().from_complement.is_none());
        assert!(accessible_bounds(0.1, 0.0).is_err());
    }

    #[test]
    fn no_noise_means_no_triples() {
        let cfg = RateConfig::new(50.0, 0.0, 0.0, 1e-3, NoisePolarization::Ground).unwrap();
        let t = simulate_streams(&cfg, 1e4, 1).unwrap();
        assert_eq!(t.n_triple(), 0);
        assert!(matches!(t.empirical(), Err(Error::EmptyTally)));
    }

    #[test]
    fn simulation_is_deterministic() {
        let cfg = RateConfig::new(10.0, 20.0, 50.0, 1e-3, NoisePolarization::Ground).unwrap();
        let a = simulate_streams(&cfg, 2e4, 7).unwrap();
        let b = simulate_streams(&cfg, 2e4, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.n_triple() > 0);
        let c = simulate_streams(&cfg, 2e4, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn timetag_dump_matches_plain_run() {
        let cfg = RateConfig::new(10.0, 20.0, 50.0, 1e-3, NoisePolarization::Ground).unwrap();
        let mut buf = Vec::new();
        let dumped = simulate_with_timetags(&cfg, 2e3, 3, &mut buf).unwrap();
        assert_eq!(dumped, simulate_streams(&cfg, 2e3, 3).unwrap());
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(TIMETAG_HEADER));
        let mut last = 0u64;
        for line in lines {
            let fields: Vec<_> = line.split(',').collect();
            assert_eq!(fields.len(), 3);
            let t: u64 = fields[0].parse().unwrap();
            assert!(t >= last);
            last = t;
            assert!(["R", "A", "B"].contains(&fields[1]));
            assert!(["signal", "noise", "single"].contains(&fields[2]));
        }
    }

    #[test]
    fn ground_noise_always_passes_analyser() {
        let cfg = RateConfig::new(10.0, 20.0, 50.0, 1e-3, NoisePolarization::Ground).unwrap();
        let t = simulate_streams(&cfg, 5e4, 11).unwrap();
        assert_eq!(t.heralded_success, t.n_success);
        assert_eq!(t.heralded_loss, t.n_loss);
        let t = simulate_streams(&cfg.with_noise(NoisePolarization::Excited), 5e4, 11).unwrap();
        assert_eq!(t.heralded_success, 0);
        assert_eq!(t.heralded_loss, 0);
    }

    #[test]
    fn merge_is_order_independent() {
        let cfg = RateConfig::new(10.0, 20.0, 50.0, 1e-3, NoisePolarization::Ground).unwrap();
        let a = simulate_streams(&cfg, 1e4, 1).unwrap();
        let b = simulate_streams(&cfg, 1e4, 2).unwrap();
        let c = simulate_streams(&cfg, 1e4, 3).unwrap();
        let left = a.merge(&b).unwrap().merge(&c).unwrap();
        let right = c.merge(&a.merge(&b).unwrap()).unwrap();
        assert_eq!(left, right);
        let other = simulate_streams(&RateConfig { window: 2e-3, ..cfg }, 1e3, 1).unwrap();
        assert!(matches!(a.merge(&other), Err(Error::MismatchedConfigs)));
    }

    #[test]
    fn mixing_edge_cases() {
        let cfg = RateConfig::new(10.0, 20.0, 50.0, 1e-3, NoisePolarization::Ground).unwrap();
        let g = simulate_streams(&cfg, 2e4, 1).unwrap();
        let e = simulate_streams(&cfg.with_noise(NoisePolarization::Excited), 2e4, 2).unwrap();
        let m = mix_detections(&g, &e, 0.0, 5).unwrap();
        assert_eq!(m.cells(), g.cells());
        assert_eq!(m, mix_detections(&g, &e, 0.0, 5).unwrap());
        let other = simulate_streams(&RateConfig { window: 2e-3, ..cfg }, 1e3, 1).unwrap();
        assert!(matches!(
            mix_detections(&g, &other, 0.2, 1),
            Err(Error::MismatchedConfigs)
        ));
        assert!(mix_detections(&g, &e, 0.6, 1).is_err());
    }

    #[test]
    fn heralded_estimate_examples() {
        let spec = EnvironmentSpec::new(0.2).unwrap();
        let s = heralded_state_estimate(&CoincidenceTally::from_counts(500, 0, 0), &spec).unwrap();
        assert!(s.matrix().max_abs_diff(singlet().matrix()) < 1e-15);

        let spec0 = EnvironmentSpec::new(0.0).unwrap();
        let s = heralded_state_estimate(&CoincidenceTally::from_counts(400, 400, 0), &spec0).unwrap();
        let params = ChannelParams::new(0.5, 0.5, 0.0).unwrap();
        let (want, n) = conditional_state(&params, &spec0).unwrap();
        assert!(s.matrix().max_abs_diff(want.matrix()) < 1e-15);
        assert_abs_diff_eq!(n, 0.75, epsilon = 1e-15);

        assert!(matches!(
            heralded_state_estimate(&CoincidenceTally::empty(), &spec),
            Err(Error::EmptyTally)
        ));
    }

    #[test]
    fn seed_derivation_is_stream_local() {
        let a = derive_seed(42, 3, STREAM_NOISE);
        assert_eq!(a, derive_seed(42, 3, STREAM_NOISE));
        assert_ne!(a, derive_seed(42, 3, STREAM_PAIRS));
        assert_ne!(a, derive_seed(42, 4, STREAM_NOISE));
    }

    #[test]
    fn occupancy_warning() {
        let cfg = RateConfig::new(10.0, 20.0, 200.0, 1e-3, NoisePolarization::Ground).unwrap();
        let w = cfg.warnings();
        assert_eq!(w.len(), 1);
        assert!(w[0].starts_with("rate_noise"));
        assert!(RateConfig::new(-1.0, 0.0, 0.0, 1e-3, NoisePolarization::Ground).is_err());
        assert!(RateConfig::new(1.0, 0.0, 0.0, 0.0, NoisePolarization::Ground).is_err());
    }
}
