//! Event-stream data model, file formats, windowing and synthetic streams.

mod camera;
mod io;
mod synth;

use nalgebra::{Vector2, Vector3};

use crate::error::{Error, Result};

pub use camera::{CameraIntrinsics, Distortion, MIN_DEPTH};
pub use io::{
    parse_calibration, parse_events, parse_ground_truth, write_calibration, write_events,
    write_ground_truth, Calibration, JITTER_TOLERANCE,
};
pub use synth::{random_scene, synthesize, SynthSpec};

/// A single event: image position, timestamp and polarity.
///
/// Polarity is kept for file fidelity only; nothing in the estimators reads it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub u: Vector2<f64>,
    pub t: f64,
    pub p: i8,
}

impl Event {
    pub fn new(x: f64, y: f64, t: f64, p: i8) -> Self {
        Self {
            u: Vector2::new(x, y),
            t,
            p,
        }
    }
}

/// Events over `[0, t_max]` on a window-local clock.
#[derive(Debug, Clone, PartialEq)]
pub struct EventWindow {
    events: Vec<Event>,
    t_max: f64,
    source_offset: f64,
}

impl EventWindow {
    /// Builds a window from events already on the window clock.
    pub fn new(events: Vec<Event>, t_max: f64, source_offset: f64) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::InvalidArgument("event window is empty".into()));
        }
        if !(t_max >= 0.0 && t_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("invalid window duration {t_max}")));
        }
        let mut prev = 0.0;
        for e in &events {
            if !(e.t >= 0.0 && e.t <= t_max) {
                return Err(Error::InvalidArgument(format!(
                    "event time {} outside [0, {t_max}]",
                    e.t
                )));
            }
            if e.t < prev {
                return Err(Error::InvalidArgument("window timestamps decrease".into()));
            }
            prev = e.t;
        }
        Ok(Self {
            events,
            t_max,
            source_offset,
        })
    }

    /// Wraps a whole stream as one window on its own clock (offset 0), with
    /// `t_max` set to the last timestamp.
    pub fn from_stream(events: Vec<Event>) -> Result<Self> {
        let t_max = events.last().map_or(0.0, |e| e.t);
        Self::new(events, t_max, 0.0)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Absolute time of the window's `t = 0`.
    pub fn source_offset(&self) -> f64 {
        self.source_offset
    }
}

/// Splits a time-ordered stream into contiguous windows
/// `[k * window, (k + 1) * window)` of the stream clock, rebasing each to
/// its own start. Empty windows are omitted.
pub fn split_windows(events: &[Event], window: f64) -> Result<Vec<EventWindow>> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "window duration must be positive, got {window}"
        )));
    }
    let mut out = Vec::new();
    let mut current: Option<(u64, Vec<Event>)> = None;
    for e in events {
        let k = (e.t / window).floor().max(0.0) as u64;
        match &mut current {
            Some((ck, buf)) if *ck == k => buf.push(*e),
            Some((ck, _)) if k < *ck => {
                return Err(Error::InvalidArgument("events are not time-ordered".into()))
            }
            _ => {
                if let Some((ck, buf)) = current.take() {
                    out.push(rebase(ck, buf, window)?);
                }
                current = Some((k, vec![*e]));
            }
        }
    }
    if let Some((ck, buf)) = current {
        out.push(rebase(ck, buf, window)?);
    }
    Ok(out)
}

fn rebase(k: u64, events: Vec<Event>, window: f64) -> Result<EventWindow> {
    let offset = k as f64 * window;
    let events = events
        .into_iter()
        .map(|e| Event {
            t: (e.t - offset).clamp(0.0, window),
            ..e
        })
        .collect();
    EventWindow::new(events, window, offset)
}

/// Ground-truth angular velocity samples.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthTrack {
    samples: Vec<(f64, Vector3<f64>)>,
}

impl GroundTruthTrack {
    pub fn new(samples: Vec<(f64, Vector3<f64>)>) -> Result<Self> {
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidArgument(
                "ground-truth timestamps must be strictly increasing".into(),
            ));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[(f64, Vector3<f64>)] {
        &self.samples
    }

    /// Sample nearest to `t`, restricted to `[lo, hi]`. Ties go to the
    /// earlier sample.
    pub fn nearest_within(&self, t: f64, lo: f64, hi: f64) -> Option<Vector3<f64>> {
        self.samples
            .iter()
            .filter(|(ts, _)| *ts >= lo && *ts <= hi)
            .min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()))
            .map(|(_, w)| *w)
    }

    /// Linear interpolation at `t`, provided at least one sample lies in
    /// `[lo, hi]`; clamps to the end samples outside the track span.
    pub fn interpolate_within(&self, t: f64, lo: f64, hi: f64) -> Option<Vector3<f64>> {
        self.nearest_within(t, lo, hi)?;
        let idx = self.samples.partition_point(|(ts, _)| *ts <= t);
        if idx == 0 {
            return Some(self.samples[0].1);
        }
        if idx == self.samples.len() {
            return Some(self.samples[idx - 1].1);
        }
        let (t0, w0) = self.samples[idx - 1];
        let (t1, w1) = self.samples[idx];
        let s = (t - t0) / (t1 - t0);
        Some(w0 + (w1 - w0) * s)
    }
}
