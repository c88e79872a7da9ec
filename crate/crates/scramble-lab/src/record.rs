//! Ready-made recorder wiring trajectory evolution to the Choi-state
//! observables. Series keys produced here are the contract consumed by
//! the ensemble-averaging layer and the CSV writers.

use crate::choi::{purity_cd, spatial_tmi_profile, subsystem_entropy, tmi, LegSet, PartitionSpec};
use crate::error::Result;
use crate::haar::HaarReference;
use crate::trajectory::{EvolutionOperator, Recorder, SeriesMap};

/// Which steps to record. `Stride(s)` records every s-th step plus the
/// final one; step 0 is always a multiple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Schedule {
    Stride(usize),
    Steps(Vec<usize>),
}

impl Schedule {
    pub fn wants(&self, step: usize, n_steps: usize) -> bool {
        match self {
            Schedule::Stride(s) => step % s.max(&1) == 0 || step == n_steps,
            Schedule::Steps(list) => list.contains(&step),
        }
    }
}

pub const KEY_PURITY: &str = "purity";
pub const KEY_ENTROPY_CD: &str = "entropy_cd";
pub const KEY_I3: &str = "i3";
pub const KEY_I3_NORM: &str = "i3_norm";

pub fn spatial_key(r: usize) -> String {
    format!("spatial_i3_r{r}")
}

pub fn spatial_norm_key(r: usize) -> String {
    format!("spatial_i3_norm_r{r}")
}

/// Records any subset of {purity, output entropy, quadripartition TMI,
/// spatial TMI scan} on the schedule's steps. A Haar reference adds the
/// normalized variants alongside the raw ones.
pub struct ObservableRecorder {
    schedule: Schedule,
    purity: bool,
    entropy_cd: bool,
    quad_tmi: bool,
    spatial_tmi: bool,
    haar: Option<HaarReference>,
    series: SeriesMap,
}

impl ObservableRecorder {
    pub fn new(schedule: Schedule) -> Self {
        Self {
            schedule,
            purity: false,
            entropy_cd: false,
            quad_tmi: false,
            spatial_tmi: false,
            haar: None,
            series: SeriesMap::new(),
        }
    }

    pub fn with_purity(mut self) -> Self {
        self.purity = true;
        self
    }

    pub fn with_entropy_cd(mut self) -> Self {
        self.entropy_cd = true;
        self
    }

    pub fn with_quad_tmi(mut self) -> Self {
        self.quad_tmi = true;
        self
    }

    pub fn with_spatial_tmi(mut self) -> Self {
        self.spatial_tmi = true;
        self
    }

    pub fn with_haar(mut self, reference: HaarReference) -> Self {
        self.haar = Some(reference);
        self
    }

    fn push(&mut self, key: &str, step: usize, value: f64) {
        self.series.entry(key.to_string()).or_default().push((step, value));
    }
}

impl Recorder for ObservableRecorder {
    fn wants(&self, step: usize, n_steps: usize) -> bool {
        self.schedule.wants(step, n_steps)
    }

    fn observe(&mut self, op: &EvolutionOperator) -> Result<()> {
        let step = op.step();
        if self.purity {
            let v = purity_cd(op)?;
            self.push(KEY_PURITY, step, v);
        }
        if self.entropy_cd {
            let outs: Vec<usize> = (0..op.l()).collect();
            let legs = LegSet::new(op.l(), &[], &outs)?;
            let v = subsystem_entropy(op, &legs)?;
            self.push(KEY_ENTROPY_CD, step, v);
        }
        if self.quad_tmi {
            let part = PartitionSpec::equal_quadripartition(op.l())?;
            let sample = tmi(op, &part)?;
            self.push(KEY_I3, step, sample.i3);
            if let Some(reference) = self.haar {
                let normed = reference.normalize_sample(&sample)?;
                self.push(KEY_I3_NORM, step, normed.i3_normalized.unwrap());
            }
        }
        if self.spatial_tmi {
            let profile = spatial_tmi_profile(op)?;
            for (r, &i3) in profile.i3.iter().enumerate() {
                self.push(&spatial_key(r), step, i3);
                if let Some(reference) = self.haar {
                    if reference.l != op.l() {
                        return Err(crate::error::Error::ShapeMismatch(format!(
                            "reference is for L = {} but operator has L = {}",
                            reference.l,
                            op.l()
                        )));
                    }
                    self.push(&spatial_norm_key(r), step, reference.normalize_value(i3));
                }
            }
        }
        Ok(())
    }

    fn take_series(&mut self) -> SeriesMap {
        std::mem::take(&mut self.series)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stride_schedule_includes_endpoints() {
        let s = Schedule::Stride(5);
        let wanted: Vec<usize> = (0..=23).filter(|&t| s.wants(t, 23)).collect();
        assert_eq!(wanted, vec![0, 5, 10, 15, 20, 23]);
        let every = Schedule::Stride(1);
        assert!((0..=10).all(|t| every.wants(t, 10)));
    }

    #[test]
    fn explicit_schedule_matches_listed_steps() {
        let s = Schedule::Steps(vec![80, 85, 90]);
        assert!(!s.wants(0, 100));
        assert!(s.wants(85, 100));
        assert!(!s.wants(100, 100));
    }

    #[test]
    fn records_identity_observables() {
        let op = EvolutionOperator::identity(4).unwrap();
        let reference = HaarReference {
            l: 4,
            n_samples: 1,
            seed: 0,
            mean_abs_i3: 0.25,
            std_error: 0.0,
        };
        let mut rec = ObservableRecorder::new(Schedule::Stride(1))
            .with_purity()
            .with_entropy_cd()
            .with_quad_tmi()
            .with_spatial_tmi()
            .with_haar(reference);
        rec.observe(&op).unwrap();
        let series = rec.take_series();

        assert!((series[KEY_PURITY][0].1 - 1.0 / 16.0).abs() <= 1e-12);
        assert!((series[KEY_ENTROPY_CD][0].1 - 4.0).abs() <= 1e-9);
        assert!(series[KEY_I3][0].1.abs() <= 1e-9);
        assert!(series[KEY_I3_NORM][0].1.abs() <= 1e-8);
        assert!(series.contains_key(&spatial_key(0)));
        assert!(series.contains_key(&spatial_norm_key(0)));
        assert_eq!(series.keys().filter(|k| k.starts_with("spatial_i3_r")).count(), 1);

        // Draining leaves the recorder empty.
        assert!(rec.take_series().is_empty());
    }

    #[test]
    fn spatial_scan_emits_one_series_per_distance() {
        let op = EvolutionOperator::identity(6).unwrap();
        let mut rec = ObservableRecorder::new(Schedule::Stride(1)).with_spatial_tmi();
        rec.observe(&op).unwrap();
        let series = rec.take_series();
        let keys: Vec<_> = series.keys().cloned().collect();
        assert_eq!(keys, vec![spatial_key(0), spatial_key(1), spatial_key(2)]);
    }

    #[test]
    fn mismatched_reference_is_rejected() {
        let op = EvolutionOperator::identity(4).unwrap();
        let reference = HaarReference {
            l: 6,
            n_samples: 1,
            seed: 0,
            mean_abs_i3: 0.25,
            std_error: 0.0,
        };
        let mut rec =
            ObservableRecorder::new(Schedule::Stride(1)).with_quad_tmi().with_haar(reference);
        assert!(rec.observe(&op).is_err());
    }
}
