//! Run artifacts: trajectory CSV and JSON-lines event log.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use ltlnav_core::simulator::{Event, Observer, Sample};
use ltlnav_core::workspace::Point;

use crate::CliError;

pub const TRAJECTORY_HEADER: [&str; 11] =
    ["t", "agent", "x", "y", "z", "ux", "uy", "uz", "edge_src", "edge_dst", "phase"];

/// One trajectory row. `z` and `uz` are empty in planar runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub agent: u32,
    pub x: f64,
    pub y: f64,
    pub z: Option<f64>,
    pub ux: f64,
    pub uy: f64,
    pub uz: Option<f64>,
    pub edge_src: u32,
    pub edge_dst: u32,
    pub phase: String,
}

impl TrajectoryRow {
    pub fn from_sample(s: &Sample, dim: usize) -> Self {
        let third = |v: f64| (dim == 3).then_some(v);
        TrajectoryRow {
            t: s.t,
            agent: s.agent,
            x: s.position.x,
            y: s.position.y,
            z: third(s.position.z),
            ux: s.control.x,
            uy: s.control.y,
            uz: third(s.control.z),
            edge_src: s.edge.0,
            edge_dst: s.edge.1,
            phase: s.phase.to_string(),
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y, self.z.unwrap_or(0.0))
    }
}

/// Streams samples to CSV and events to JSON lines. The first write error is
/// kept and reported by [`ArtifactWriter::finish`].
pub struct ArtifactWriter<T: Write, E: Write> {
    dim: usize,
    trajectory: csv::Writer<T>,
    events: E,
    error: Option<CliError>,
}

impl<T: Write, E: Write> ArtifactWriter<T, E> {
    pub fn new(dim: usize, trajectory: T, events: E) -> Result<Self, CliError> {
        let mut trajectory = csv::WriterBuilder::new().has_headers(false).from_writer(trajectory);
        trajectory.write_record(TRAJECTORY_HEADER).map_err(csv_error)?;
        Ok(ArtifactWriter { dim, trajectory, events, error: None })
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.trajectory.flush().map_err(|e| CliError::Output(e.to_string()))?;
        self.events.flush().map_err(|e| CliError::Output(e.to_string()))
    }

    fn keep(&mut self, r: Result<(), CliError>) {
        if let (Err(e), None) = (r, &self.error) {
            self.error = Some(e);
        }
    }
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Output(e.to_string())
}

impl<T: Write, E: Write> Observer for ArtifactWriter<T, E> {
    fn sample(&mut self, s: &Sample) {
        let row = TrajectoryRow::from_sample(s, self.dim);
        let r = self.trajectory.serialize(row).map_err(csv_error);
        self.keep(r);
    }

    fn event(&mut self, e: &Event) {
        let r = serde_json::to_writer(&mut self.events, e)
            .map_err(io::Error::from)
            .and_then(|_| self.events.write_all(b"\n"))
            .map_err(|e| CliError::Output(e.to_string()));
        self.keep(r);
    }
}

/// Reads a trajectory CSV written by `simulate`.
pub fn read_trajectory(path: &Path) -> Result<Vec<TrajectoryRow>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let header = reader.headers().map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if header.iter().ne(TRAJECTORY_HEADER) {
        return Err(CliError::Input(format!("{}: not a trajectory file", path.display())));
    }
    reader
        .deserialize()
        .collect::<Result<Vec<TrajectoryRow>, _>>()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ltlnav_core::simulator::Phase;

    fn sample() -> Sample {
        Sample {
            t: 0.5,
            agent: 2,
            position: Point::new(1.0, -0.25, 3.0),
            control: Point::new(0.0, 1.5, -1.0),
            edge: (4, 1),
            phase: Phase::T2,
        }
    }

    #[test]
    fn planar_rows_leave_z_blank() {
        let mut w = ArtifactWriter::new(2, Vec::new(), Vec::new()).unwrap();
        w.sample(&sample());
        let text = String::from_utf8(w.trajectory.into_inner().unwrap()).unwrap();
        assert_eq!(text, "t,agent,x,y,z,ux,uy,uz,edge_src,edge_dst,phase\n0.5,2,1.0,-0.25,,0.0,1.5,,4,1,T2\n");
    }

    #[test]
    fn rows_round_trip() {
        let dir = std::env::temp_dir().join(format!("ltlnav-rows-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.csv");
        let mut w = ArtifactWriter::new(3, std::fs::File::create(&path).unwrap(), io::sink()).unwrap();
        w.sample(&sample());
        w.finish().unwrap();
        let rows = read_trajectory(&path).unwrap();
        assert_eq!(rows, vec![TrajectoryRow::from_sample(&sample(), 3)]);
        assert_eq!(rows[0].position(), Point::new(1.0, -0.25, 3.0));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
