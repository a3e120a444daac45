//! Plain-text formats: `t x y p` event files, `key=value` calibration files
//! and `t wx wy wz` ground-truth files. `#` starts a comment line.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use nalgebra::Vector3;

use super::{CameraIntrinsics, Distortion, Event, GroundTruthTrack};
use crate::error::{Error, Result};

/// Out-of-order timestamps within this many seconds are re-sorted rather
/// than rejected.
pub const JITTER_TOLERANCE: f64 = 1e-6;

fn content_lines(reader: impl BufRead) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| match l {
            Ok(s) => {
                let s = s.trim();
                !s.is_empty() && !s.starts_with('#')
            }
            Err(_) => true,
        })
}

fn parse_field(line: usize, name: &str, s: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse {name} from {s:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("{name} is not finite"),
        });
    }
    Ok(v)
}

/// Parses an event file. When `sensor` is given, coordinates are checked to
/// lie in `[0, W) x [0, H)`.
pub fn parse_events(reader: impl BufRead, sensor: Option<&CameraIntrinsics>) -> Result<Vec<Event>> {
    let mut events = Vec::new();
    let mut latest = f64::NEG_INFINITY;
    let mut needs_sort = false;
    for (line, text) in content_lines(reader) {
        let text = text?;
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 4 fields `t x y p`, found {}", fields.len()),
            });
        }
        let t = parse_field(line, "timestamp", fields[0])?;
        let x = parse_field(line, "x", fields[1])?;
        let y = parse_field(line, "y", fields[2])?;
        let p = match fields[3] {
            "1" | "+1" => 1,
            "0" | "-1" => -1,
            other => {
                return Err(Error::Parse {
                    line,
                    msg: format!("polarity must be 0/1 or -1/+1, found {other:?}"),
                })
            }
        };
        if t < 0.0 {
            return Err(Error::NegativeTimestamp { line, t });
        }
        if t < latest {
            if latest - t > JITTER_TOLERANCE {
                return Err(Error::OutOfOrder {
                    line,
                    t,
                    prev: latest,
                });
            }
            needs_sort = true;
        }
        latest = latest.max(t);
        let e = Event::new(x, y, t, p);
        if let Some(cam) = sensor {
            if !cam.contains_raw(&e.u) {
                return Err(Error::OutOfSensor {
                    line,
                    x,
                    y,
                    width: cam.width,
                    height: cam.height,
                });
            }
        }
        events.push(e);
    }
    if needs_sort {
        events.sort_by(|a, b| a.t.total_cmp(&b.t));
    }
    Ok(events)
}

/// Writes events in the `t x y p` layout (polarity as 1/0), using the
/// shortest representation that round-trips each value exactly.
pub fn write_events(mut w: impl Write, events: &[Event]) -> Result<()> {
    for e in events {
        let p = if e.p > 0 { 1 } else { 0 };
        writeln!(w, "{} {} {} {}", e.t, e.u.x, e.u.y, p)?;
    }
    Ok(())
}

/// Intrinsics plus optional distortion coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub intrinsics: CameraIntrinsics,
    pub distortion: Distortion,
}

/// Parses `key=value` pairs separated by whitespace or newlines. Required
/// keys: `fx fy cx cy width height`; optional: `k1 k2 p1 p2 k3`.
pub fn parse_calibration(reader: impl BufRead) -> Result<Calibration> {
    let mut map = HashMap::new();
    for (line, text) in content_lines(reader) {
        let text = text?;
        for tok in text.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| Error::Parse {
                line,
                msg: format!("expected key=value, found {tok:?}"),
            })?;
            let key = k.trim().to_ascii_lowercase();
            let val = parse_field(line, &key, v.trim())?;
            map.insert(key, val);
        }
    }
    let get = |k: &str| {
        map.get(k)
            .copied()
            .ok_or_else(|| Error::Calibration(format!("missing key `{k}`")))
    };
    let dim = |k: &str| -> Result<usize> {
        let v = get(k)?;
        if v < 1.0 || v.fract() != 0.0 {
            return Err(Error::Calibration(format!("`{k}` must be a positive integer")));
        }
        Ok(v as usize)
    };
    let intrinsics = CameraIntrinsics::new(
        get("fx")?,
        get("fy")?,
        get("cx")?,
        get("cy")?,
        dim("width")?,
        dim("height")?,
    )?;
    let opt = |k: &str| map.get(k).copied().unwrap_or(0.0);
    Ok(Calibration {
        intrinsics,
        distortion: Distortion {
            k1: opt("k1"),
            k2: opt("k2"),
            p1: opt("p1"),
            p2: opt("p2"),
            k3: opt("k3"),
        },
    })
}

pub fn write_calibration(mut w: impl Write, calib: &Calibration) -> Result<()> {
    let c = &calib.intrinsics;
    writeln!(w, "fx={}\nfy={}\ncx={}\ncy={}", c.fx, c.fy, c.cx, c.cy)?;
    writeln!(w, "width={}\nheight={}", c.width, c.height)?;
    let d = &calib.distortion;
    if !d.is_zero() {
        writeln!(w, "k1={} k2={} p1={} p2={} k3={}", d.k1, d.k2, d.p1, d.p2, d.k3)?;
    }
    Ok(())
}

/// Parses a `t wx wy wz` ground-truth track (rad/s).
pub fn parse_ground_truth(reader: impl BufRead) -> Result<GroundTruthTrack> {
    let mut samples = Vec::new();
    for (line, text) in content_lines(reader) {
        let text = text?;
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 4 fields `t wx wy wz`, found {}", fields.len()),
            });
        }
        let t = parse_field(line, "timestamp", fields[0])?;
        let w = Vector3::new(
            parse_field(line, "wx", fields[1])?,
            parse_field(line, "wy", fields[2])?,
            parse_field(line, "wz", fields[3])?,
        );
        if let Some((prev, _)) = samples.last() {
            if t <= *prev {
                return Err(Error::Parse {
                    line,
                    msg: "ground-truth timestamps must be strictly increasing".into(),
                });
            }
        }
        samples.push((t, w));
    }
    GroundTruthTrack::new(samples)
}

pub fn write_ground_truth(mut w: impl Write, track: &GroundTruthTrack) -> Result<()> {
    for (t, om) in track.samples() {
        writeln!(w, "{} {} {} {}", t, om.x, om.y, om.z)?;
    }
    Ok(())
}
