//! Loading events and calibration from disk.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::Context;
use cmbnb::events::{parse_calibration, parse_events, Calibration, Event};

use crate::{data, CliResult, InputArgs};

pub fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .with_context(|| format!("opening {}", path.display()))
        .map_err(data)
}

pub fn calibration(path: &Path) -> CliResult<Calibration> {
    parse_calibration(open(path)?)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(data)
}

/// Calibration and events, undistorted on request.
pub fn load(args: &InputArgs, undistort: bool) -> CliResult<(Calibration, Vec<Event>)> {
    let calib = calibration(&args.calib)?;
    let mut events = parse_events(open(&args.events)?, Some(&calib.intrinsics))
        .with_context(|| format!("reading {}", args.events.display()))
        .map_err(data)?;
    if undistort && !calib.distortion.is_zero() {
        for e in &mut events {
            e.u = calib.distortion.undistort_pixel(&calib.intrinsics, &e.u);
        }
    }
    Ok((calib, events))
}
