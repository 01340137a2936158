use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::filter::RicStats;
use crate::{Error, Result};

/// One line of the metrics CSV. Metric fields are empty before the filter
/// has been initialised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub epoch: f64,
    pub map_distance_m: Option<f64>,
    pub pos_mean_r: Option<f64>,
    pub pos_mean_i: Option<f64>,
    pub pos_mean_c: Option<f64>,
    pub pos_std_r: Option<f64>,
    pub pos_std_i: Option<f64>,
    pub pos_std_c: Option<f64>,
    pub vel_mean_r: Option<f64>,
    pub vel_mean_i: Option<f64>,
    pub vel_mean_c: Option<f64>,
    pub vel_std_r: Option<f64>,
    pub vel_std_i: Option<f64>,
    pub vel_std_c: Option<f64>,
    pub r_eff: f64,
    /// `coast`, or the updates applied at this epoch joined by `+`
    /// (`tle`, `radar`, `resample`).
    pub event: String,
}

impl MetricsRow {
    pub fn empty(epoch: f64) -> Self {
        Self {
            epoch,
            map_distance_m: None,
            pos_mean_r: None,
            pos_mean_i: None,
            pos_mean_c: None,
            pos_std_r: None,
            pos_std_i: None,
            pos_std_c: None,
            vel_mean_r: None,
            vel_mean_i: None,
            vel_mean_c: None,
            vel_std_r: None,
            vel_std_i: None,
            vel_std_c: None,
            r_eff: 1.0,
            event: "coast".into(),
        }
    }

    pub fn from_stats(epoch: f64, map_distance: f64, s: &RicStats, r_eff: f64, tags: &[&str]) -> Self {
        Self {
            epoch,
            map_distance_m: Some(map_distance),
            pos_mean_r: Some(s.position_mean.x),
            pos_mean_i: Some(s.position_mean.y),
            pos_mean_c: Some(s.position_mean.z),
            pos_std_r: Some(s.position_std.x),
            pos_std_i: Some(s.position_std.y),
            pos_std_c: Some(s.position_std.z),
            vel_mean_r: Some(s.velocity_mean.x),
            vel_mean_i: Some(s.velocity_mean.y),
            vel_mean_c: Some(s.velocity_mean.z),
            vel_std_r: Some(s.velocity_std.x),
            vel_std_i: Some(s.velocity_std.y),
            vel_std_c: Some(s.velocity_std.z),
            r_eff,
            event: if tags.is_empty() { "coast".into() } else { tags.join("+") },
        }
    }

    /// Position standard deviations along R, I, C.
    pub fn position_std(&self) -> Option<[f64; 3]> {
        Some([self.pos_std_r?, self.pos_std_i?, self.pos_std_c?])
    }

    pub fn is_coast(&self) -> bool {
        self.event == "coast"
    }

    fn metric_fields(&self) -> [Option<f64>; 13] {
        [
            self.map_distance_m,
            self.pos_mean_r,
            self.pos_mean_i,
            self.pos_mean_c,
            self.pos_std_r,
            self.pos_std_i,
            self.pos_std_c,
            self.vel_mean_r,
            self.vel_mean_i,
            self.vel_mean_c,
            self.vel_std_r,
            self.vel_std_i,
            self.vel_std_c,
        ]
    }

    fn set_metric_fields(&mut self, v: [Option<f64>; 13]) {
        [
            self.map_distance_m,
            self.pos_mean_r,
            self.pos_mean_i,
            self.pos_mean_c,
            self.pos_std_r,
            self.pos_std_i,
            self.pos_std_c,
            self.vel_mean_r,
            self.vel_mean_i,
            self.vel_mean_c,
            self.vel_std_r,
            self.vel_std_i,
            self.vel_std_c,
        ] = v;
    }
}

pub fn write_metrics<W: Write>(w: W, rows: &[MetricsRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_metrics<R: Read>(r: R) -> Result<Vec<MetricsRow>> {
    let mut rd = csv::Reader::from_reader(r);
    Ok(rd.deserialize().collect::<std::result::Result<Vec<MetricsRow>, _>>()?)
}

/// Per-epoch arithmetic mean across runs. A metric is averaged over the runs
/// in which it is present. The event of the merged row is the union of the
/// runs' tags, in first-seen order.
pub fn mean_rows(runs: &[&[MetricsRow]]) -> Result<Vec<MetricsRow>> {
    let first = runs
        .first()
        .ok_or_else(|| Error::InsufficientData("no runs to average".into()))?;
    if runs.iter().any(|r| r.len() != first.len()) {
        return Err(Error::Input("runs have different row counts".into()));
    }
    (0..first.len())
        .map(|i| {
            let rows: Vec<&MetricsRow> = runs.iter().map(|r| &r[i]).collect();
            if rows.iter().any(|r| r.epoch != rows[0].epoch) {
                return Err(Error::Input(format!("runs disagree on the epoch of row {i}")));
            }
            let mut out = MetricsRow::empty(rows[0].epoch);
            let mut fields = [None; 13];
            for (k, f) in fields.iter_mut().enumerate() {
                let vals: Vec<f64> = rows.iter().filter_map(|r| r.metric_fields()[k]).collect();
                if !vals.is_empty() {
                    *f = Some(vals.iter().sum::<f64>() / vals.len() as f64);
                }
            }
            out.set_metric_fields(fields);
            out.r_eff = rows.iter().map(|r| r.r_eff).sum::<f64>() / rows.len() as f64;
            let mut tags: Vec<&str> = Vec::new();
            for r in &rows {
                for t in r.event.split('+').filter(|t| *t != "coast") {
                    if !tags.contains(&t) {
                        tags.push(t);
                    }
                }
            }
            if !tags.is_empty() {
                out.event = tags.join("+");
            }
            Ok(out)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn row(epoch: f64, d: f64, tags: &[&str]) -> MetricsRow {
        let s = RicStats {
            position_mean: Vector3::new(d, 2.0 * d, 3.0 * d),
            position_std: Vector3::new(1.0, 2.0, 3.0),
            velocity_mean: Vector3::zeros(),
            velocity_std: Vector3::new(0.1, 0.2, 0.3),
        };
        MetricsRow::from_stats(epoch, d, &s, 0.5, tags)
    }

    #[test]
    fn csv_round_trip_keeps_empty_fields() {
        let rows = vec![MetricsRow::empty(0.0), row(120.0, 4.0, &["radar"]), row(240.0, 5.0, &[])];
        let mut buf = Vec::new();
        write_metrics(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header.split(',').count(), 16);
        assert!(header.starts_with("epoch,map_distance_m,"));
        assert_eq!(read_metrics(buf.as_slice()).unwrap(), rows);
        assert_eq!(rows[2].event, "coast");
    }

    #[test]
    fn mean_is_arithmetic_and_skips_missing() {
        let a = vec![MetricsRow::empty(0.0), row(120.0, 2.0, &["radar"])];
        let b = vec![row(0.0, 6.0, &[]), row(120.0, 4.0, &["tle", "resample"])];
        let m = mean_rows(&[&a, &b]).unwrap();
        assert_eq!(m[0].map_distance_m, Some(6.0));
        assert_eq!(m[0].r_eff, 0.75);
        assert_eq!(m[1].map_distance_m, Some(3.0));
        assert_eq!(m[1].pos_mean_c, Some(9.0));
        assert_eq!(m[1].event, "radar+tle+resample");
        let short = vec![row(0.0, 1.0, &[])];
        assert!(mean_rows(&[&a, &short]).is_err());
    }
}
