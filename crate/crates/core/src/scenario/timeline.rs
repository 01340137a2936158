use crate::{Error, Result};

/// Why the filter stops at an epoch. Several reasons may coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EventTags {
    pub grid: bool,
    pub tle: bool,
    pub radar: bool,
}

impl EventTags {
    fn merge(&mut self, other: EventTags) {
        self.grid |= other.grid;
        self.tle |= other.tle;
        self.radar |= other.radar;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimelineEvent {
    pub epoch: f64,
    pub tags: EventTags,
}

/// Epochs closer than this are merged into one event.
pub const EPOCH_MERGE_TOL: f64 = 1e-6;

/// Sorted union of the step grid on `[start, end]`, the TLE epochs and the
/// radar epochs. The grid always includes `end` when it is a whole number of
/// steps from `start`.
pub fn build_timeline(start: f64, end: f64, step: f64, tle_epochs: &[f64], radar_epochs: &[f64]) -> Result<Vec<TimelineEvent>> {
    if !(step > 0.0) || !(end >= start) {
        return Err(Error::Config(format!("invalid time span [{start}, {end}] with step {step}")));
    }
    if let Some(t) = tle_epochs.iter().find(|t| !(start..=end).contains(*t)) {
        return Err(Error::Config(format!("TLE epoch {t} lies outside [{start}, {end}]")));
    }
    let mut events = Vec::new();
    let n = ((end - start) / step + 1e-9).floor() as usize;
    for k in 0..=n {
        events.push(TimelineEvent {
            epoch: start + k as f64 * step,
            tags: EventTags {
                grid: true,
                ..Default::default()
            },
        });
    }
    for t in tle_epochs {
        events.push(TimelineEvent {
            epoch: *t,
            tags: EventTags {
                tle: true,
                ..Default::default()
            },
        });
    }
    for t in radar_epochs {
        events.push(TimelineEvent {
            epoch: *t,
            tags: EventTags {
                radar: true,
                ..Default::default()
            },
        });
    }
    events.sort_by(|a, b| a.epoch.total_cmp(&b.epoch));
    let mut merged: Vec<TimelineEvent> = Vec::with_capacity(events.len());
    for e in events {
        match merged.last_mut() {
            Some(last) if (e.epoch - last.epoch).abs() <= EPOCH_MERGE_TOL => {
                // keep the grid epoch when merging so rows line up across runs
                if e.tags.grid {
                    last.epoch = e.epoch;
                }
                last.tags.merge(e.tags);
            }
            _ => merged.push(e),
        }
    }
    Ok(merged)
}
