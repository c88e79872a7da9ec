//! Circuit trajectories: sampled measurement patterns and the non-unitary
//! evolution operator they generate.
//!
//! One step applies the unitary propagator, then the projectors for every
//! measurement scheduled in that step, then rescales so the squared
//! Frobenius norm of the operator stays at 2^L. Measurement outcomes are
//! forced with equal probability rather than sampled from the Born rule;
//! when a forced outcome would annihilate the operator the opposite
//! outcome is used instead and the redraw is logged.

use std::collections::BTreeMap;

use faer::complex_native::c64;
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{ModelParams, Outcome, Propagator, ZProjector, MAX_SITES};

/// Kept-weight threshold, relative to the invariant norm, below which a
/// forced outcome counts as annihilating and triggers a redraw.
pub const ANNIHILATION_TOL: f64 = 1e-10;

/// Relative tolerance on the squared-norm invariant.
pub const NORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementEvent {
    /// 1-based step index; the measurement follows the step's unitary.
    pub step: usize,
    pub site: usize,
    pub outcome: Outcome,
}

/// A forced outcome that was replaced by its opposite to avoid
/// annihilating the trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Redraw {
    pub step: usize,
    pub site: usize,
}

/// Master seed plus a per-trajectory stream index. Streams of one master
/// seed are statistically independent, so an ensemble enumerates streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternSeed {
    pub master: u64,
    pub stream: u64,
}

/// The full measurement schedule of one trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasurementPattern {
    pub l: usize,
    pub n_steps: usize,
    pub p: Option<f64>,
    pub seed: Option<PatternSeed>,
    events: Vec<MeasurementEvent>,
}

impl MeasurementPattern {
    /// Build a pattern from an explicit event list. Events must lie in
    /// range and no site may be measured twice in the same step.
    pub fn from_events(l: usize, n_steps: usize, mut events: Vec<MeasurementEvent>) -> Result<Self> {
        if l == 0 || l > MAX_SITES {
            return Err(Error::InvalidParams(format!("pattern needs 1 <= L <= {MAX_SITES}, got {l}")));
        }
        for e in &events {
            if e.site >= l {
                return Err(Error::InvalidParams(format!("event site {} out of range for L = {l}", e.site)));
            }
            if e.step == 0 || e.step > n_steps {
                return Err(Error::InvalidParams(format!(
                    "event step {} out of range 1..={n_steps}",
                    e.step
                )));
            }
        }
        events.sort_by_key(|e| (e.step, e.site));
        if events.windows(2).any(|w| w[0].step == w[1].step && w[0].site == w[1].site) {
            return Err(Error::InvalidParams("duplicate (step, site) in measurement pattern".into()));
        }
        Ok(Self { l, n_steps, p: None, seed: None, events })
    }

    pub fn events(&self) -> &[MeasurementEvent] {
        &self.events
    }

    /// Events of one step, in ascending site order.
    pub fn events_at(&self, step: usize) -> &[MeasurementEvent] {
        let lo = self.events.partition_point(|e| e.step < step);
        let hi = self.events.partition_point(|e| e.step <= step);
        &self.events[lo..hi]
    }
}

/// Sample a pattern: each site is measured in each step with probability
/// `p`, and measured sites get an outcome forced up or down with equal
/// probability. Draws run step by step, sites in ascending order, with
/// the outcome drawn only for the sites that are measured.
pub fn sample_pattern(
    l: usize,
    n_steps: usize,
    p: f64,
    seed: PatternSeed,
) -> Result<MeasurementPattern> {
    if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
        return Err(Error::InvalidParams(format!("measurement rate must lie in [0, 1], got {p}")));
    }
    let mut pattern = MeasurementPattern::from_events(l, n_steps, Vec::new())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.master);
    rng.set_stream(seed.stream);
    for step in 1..=n_steps {
        for site in 0..l {
            if rng.gen::<f64>() < p {
                let outcome = if rng.gen::<bool>() { Outcome::Up } else { Outcome::Down };
                pattern.events.push(MeasurementEvent { step, site, outcome });
            }
        }
    }
    pattern.p = Some(p);
    pattern.seed = Some(seed);
    Ok(pattern)
}

/// The running non-unitary evolution operator of a trajectory, kept at
/// squared Frobenius norm 2^L.
pub struct EvolutionOperator {
    l: usize,
    step: usize,
    matrix: Mat<c64>,
}

impl EvolutionOperator {
    /// Identity initial condition; its squared norm is already 2^L.
    pub fn identity(l: usize) -> Result<Self> {
        if l == 0 || l > MAX_SITES {
            return Err(Error::InvalidParams(format!("operator needs 1 <= L <= {MAX_SITES}, got {l}")));
        }
        let nd = 1usize << l;
        let matrix = Mat::from_fn(nd, nd, |i, j| {
            if i == j {
                c64::new(1.0, 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        });
        Ok(Self { l, step: 0, matrix })
    }

    /// Wrap an explicit matrix, e.g. a mid-trajectory snapshot.
    pub fn from_matrix(l: usize, step: usize, matrix: Mat<c64>) -> Result<Self> {
        let nd = 1usize << l;
        if l == 0 || l > MAX_SITES || matrix.nrows() != nd || matrix.ncols() != nd {
            return Err(Error::ShapeMismatch(format!(
                "expected a {nd} x {nd} matrix for L = {l}, got {} x {}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { l, step, matrix })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn dim(&self) -> usize {
        1 << self.l
    }

    pub fn matrix(&self) -> faer::MatRef<'_, c64> {
        self.matrix.as_ref()
    }

    pub fn norm_sq(&self) -> f64 {
        let n = self.matrix.norm_l2();
        n * n
    }

    /// Verify the squared-norm invariant to relative tolerance.
    pub fn check_norm(&self) -> Result<()> {
        let expected = self.dim() as f64;
        let found = self.norm_sq();
        if (found - expected).abs() > NORM_TOL * expected {
            return Err(Error::NotNormalized { found, expected });
        }
        Ok(())
    }

    /// One circuit step: unitary, then this step's projective measurements
    /// in ascending site order, then a single rescaling back to the norm
    /// invariant. Outcomes that would annihilate the operator are flipped
    /// and logged in `redraws`.
    pub fn advance(
        &mut self,
        prop: &Propagator,
        events: &[MeasurementEvent],
        redraws: &mut Vec<Redraw>,
    ) -> Result<()> {
        let step = self.step + 1;
        let mut m = prop.matrix() * self.matrix.as_ref();
        let nd = self.dim();

        // Row weights let each annihilation check run in O(2^L) instead of
        // rescanning the whole matrix.
        let mut row_sq = vec![0.0f64; nd];
        for j in 0..nd {
            for i in 0..nd {
                let v = m[(i, j)];
                row_sq[i] += v.re * v.re + v.im * v.im;
            }
        }

        let floor = ANNIHILATION_TOL * ANNIHILATION_TOL * nd as f64;
        for event in events {
            let mut proj = ZProjector::new(event.site, event.outcome, self.l)?;
            let kept: f64 = (0..nd).filter(|&i| proj.keeps(i)).map(|i| row_sq[i]).sum();
            if kept < floor {
                proj = ZProjector::new(event.site, event.outcome.flipped(), self.l)?;
                let kept: f64 = (0..nd).filter(|&i| proj.keeps(i)).map(|i| row_sq[i]).sum();
                if kept < floor {
                    return Err(Error::Annihilated { step, site: event.site });
                }
                redraws.push(Redraw { step, site: event.site });
            }
            proj.mask_rows(&mut m);
            for i in 0..nd {
                if !proj.keeps(i) {
                    row_sq[i] = 0.0;
                }
            }
        }

        let total: f64 = row_sq.iter().sum();
        if !(total.is_finite() && total > floor) {
            let site = events.last().map_or(0, |e| e.site);
            return Err(Error::Annihilated { step, site });
        }
        let scale = (nd as f64 / total).sqrt();
        let m = faer::scale(c64::new(scale, 0.0)) * &m;

        self.matrix = m;
        self.step = step;
        Ok(())
    }
}

/// Per-observable time series: observable name to (step, value) pairs.
pub type SeriesMap = BTreeMap<String, Vec<(usize, f64)>>;

/// Measures observables along a trajectory. `wants` decides at which
/// steps `observe` runs; `take_series` drains the accumulated data.
pub trait Recorder {
    fn wants(&self, step: usize, n_steps: usize) -> bool;
    fn observe(&mut self, op: &EvolutionOperator) -> Result<()>;
    fn take_series(&mut self) -> SeriesMap;
}

/// Everything one trajectory produced.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRecord {
    pub l: usize,
    pub n_steps: usize,
    pub p: Option<f64>,
    pub seed: Option<PatternSeed>,
    pub series: SeriesMap,
    pub redraws: Vec<Redraw>,
    /// Human-readable reason if the trajectory stopped early.
    pub aborted: Option<String>,
}

/// Run one trajectory from the identity, recording wherever the recorder
/// asks (step 0 included). Annihilation that survives a redraw aborts the
/// trajectory but still returns the data gathered so far.
pub fn evolve(
    prop: &Propagator,
    pattern: &MeasurementPattern,
    recorder: &mut dyn Recorder,
) -> Result<TrajectoryRecord> {
    let params: &ModelParams = prop.params();
    if params.l != pattern.l {
        return Err(Error::ShapeMismatch(format!(
            "propagator has L = {} but pattern has L = {}",
            params.l, pattern.l
        )));
    }
    let mut op = EvolutionOperator::identity(pattern.l)?;
    let mut redraws = Vec::new();
    let mut aborted = None;

    if recorder.wants(0, pattern.n_steps) {
        recorder.observe(&op)?;
    }
    for step in 1..=pattern.n_steps {
        match op.advance(prop, pattern.events_at(step), &mut redraws) {
            Ok(()) => {}
            Err(Error::Annihilated { step, site }) => {
                aborted = Some(format!("annihilated at step {step}, site {site}"));
                break;
            }
            Err(e) => return Err(e),
        }
        if recorder.wants(step, pattern.n_steps) {
            recorder.observe(&op)?;
        }
    }

    Ok(TrajectoryRecord {
        l: pattern.l,
        n_steps: pattern.n_steps,
        p: pattern.p,
        seed: pattern.seed,
        series: recorder.take_series(),
        redraws,
        aborted,
    })
}
