//! On-disk form of a run.
//!
//! A member directory holds `trajectory.bin`, `summary.csv`, `final.csv`
//! and `manifest.json`. The binary trajectory is little-endian:
//!
//! ```text
//! magic "CGTRAJ01" | species u32 | reserved u32 | nu f64 | steps u64 |
//! mass_defect f64 | frames u64 |
//! per frame: time f64 | dt f64 | (species + 2) x (len u64 | field bytes)
//! ```
//!
//! Fields use the single-field encoding of `field_grid` and come in the
//! order species, pressure, potential.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use congestion::brinkman_stepper::{Frame, Trajectory};
use congestion::field_grid::{decode_field, encode_field, ScalarField};

use crate::ExperimentError;

pub const TRAJECTORY_MAGIC: &[u8; 8] = b"CGTRAJ01";
const MAX_SPECIES: usize = 16;

pub fn encode_trajectory(traj: &Trajectory) -> Vec<u8> {
    let species = traj.frames.first().map_or(0, |f| f.species.len());
    let mut out = Vec::new();
    out.extend_from_slice(TRAJECTORY_MAGIC);
    out.extend_from_slice(&(species as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&traj.nu.to_le_bytes());
    out.extend_from_slice(&(traj.steps as u64).to_le_bytes());
    out.extend_from_slice(&traj.mass_defect.to_le_bytes());
    out.extend_from_slice(&(traj.frames.len() as u64).to_le_bytes());
    for f in &traj.frames {
        out.extend_from_slice(&f.time.to_le_bytes());
        out.extend_from_slice(&f.dt.to_le_bytes());
        for field in f.species.iter().chain([&f.pressure, &f.potential]) {
            let bytes = encode_field(field);
            out.extend_from_slice(&(bytes.len() as u64).to_le_bytes());
            out.extend_from_slice(&bytes);
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ExperimentError> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| malformed(format!("truncated at byte {}", self.at)))?;
        let out = &self.bytes[self.at..end];
        self.at = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, ExperimentError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, ExperimentError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64, ExperimentError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.at
    }
}

fn malformed(message: impl Into<String>) -> ExperimentError {
    ExperimentError::Malformed(message.into())
}

/// Inverse of [`encode_trajectory`]. Rejects anything that the steppers
/// could not have produced: mixed grids, negative densities, decreasing
/// times or trailing bytes.
pub fn decode_trajectory(bytes: &[u8]) -> Result<Trajectory, ExperimentError> {
    let mut c = Cursor { bytes, at: 0 };
    if c.take(8)? != TRAJECTORY_MAGIC {
        return Err(malformed("bad magic"));
    }
    let species = c.u32()? as usize;
    if species == 0 || species > MAX_SPECIES {
        return Err(malformed(format!("species count {species} out of range")));
    }
    if c.u32()? != 0 {
        return Err(malformed("reserved field is not zero"));
    }
    let nu = c.f64()?;
    let steps = c.u64()? as usize;
    let mass_defect = c.f64()?;
    if !(nu >= 0.0 && nu.is_finite()) || !mass_defect.is_finite() {
        return Err(malformed("bad run metadata"));
    }
    let count = c.u64()?;
    // every frame needs at least its two times and field lengths
    if count == 0 || count > (c.remaining() / (16 + 8 * (species + 2))) as u64 {
        return Err(malformed(format!("frame count {count} does not fit the data")));
    }
    let mut frames: Vec<Frame> = Vec::with_capacity(count as usize);
    for k in 0..count {
        let (time, dt) = (c.f64()?, c.f64()?);
        if !(time.is_finite() && dt.is_finite() && dt >= 0.0) {
            return Err(malformed(format!("frame {k}: bad time or step")));
        }
        if frames.last().is_some_and(|p| time < p.time) {
            return Err(malformed(format!("frame {k}: time goes backwards")));
        }
        let mut fields = Vec::with_capacity(species + 2);
        for _ in 0..species + 2 {
            let len = c.u64()?;
            if len > c.remaining() as u64 {
                return Err(malformed(format!("frame {k}: field length {len} past the end")));
            }
            let field = decode_field(c.take(len as usize)?).map_err(|e| malformed(format!("frame {k}: {e}")))?;
            fields.push(field);
        }
        let grid = *fields[0].grid();
        if fields.iter().any(|f| *f.grid() != grid) || frames.first().is_some_and(|f| *f.pressure.grid() != grid) {
            return Err(malformed(format!("frame {k}: fields on different grids")));
        }
        let potential = fields.pop().expect("potential");
        let pressure = fields.pop().expect("pressure");
        if !fields.iter().all(ScalarField::is_nonnegative) {
            return Err(malformed(format!("frame {k}: negative density")));
        }
        frames.push(Frame { time, dt, species: fields, pressure, potential });
    }
    if c.remaining() != 0 {
        return Err(malformed(format!("{} trailing bytes", c.remaining())));
    }
    Ok(Trajectory { frames, nu, steps, mass_defect })
}

/// `time,dt,mass,max_density,max_pressure,max_potential`, one row per frame.
pub fn summary_csv(traj: &Trajectory) -> String {
    let mut out = String::from("time,dt,mass,max_density,max_pressure,max_potential\n");
    for f in &traj.frames {
        let rho = f.total();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            f.time,
            f.dt,
            rho.integral(),
            rho.max(),
            f.pressure.max(),
            f.potential.max()
        );
    }
    out
}

/// Cell values of one frame: position, total density, each species, then
/// pressure and potential.
pub fn frame_csv(frame: &Frame) -> String {
    let grid = *frame.pressure.grid();
    let mut out = String::from(if grid.dim() == 1 { "x,density" } else { "x,y,density" });
    if frame.species.len() > 1 {
        for s in 1..=frame.species.len() {
            let _ = write!(out, ",species_{s}");
        }
    }
    out.push_str(",pressure,potential\n");
    let rho = frame.total();
    for k in 0..grid.len() {
        let (x, y) = grid.position(k);
        if grid.dim() == 1 {
            let _ = write!(out, "{x},{}", rho.values()[k]);
        } else {
            let _ = write!(out, "{x},{y},{}", rho.values()[k]);
        }
        if frame.species.len() > 1 {
            for s in &frame.species {
                let _ = write!(out, ",{}", s.values()[k]);
            }
        }
        let _ = writeln!(out, ",{},{}", frame.pressure.values()[k], frame.potential.values()[k]);
    }
    out
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), ExperimentError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| ExperimentError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| ExperimentError::io(path, e))
}

pub fn read_trajectory(dir: &Path) -> Result<Trajectory, ExperimentError> {
    let path = dir.join("trajectory.bin");
    let bytes = fs::read(&path).map_err(|e| ExperimentError::io(&path, e))?;
    decode_trajectory(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use congestion::brinkman_stepper::{run, Observers, StepControls};
    use congestion::field_grid::Grid;
    use congestion::pressure_laws::{power_law, Growth, InitialData};

    fn sample() -> Trajectory {
        let grid = Grid::line(32, 4.0).unwrap();
        let rho = ScalarField::from_fn(grid, |x, _| (0.25 - x * x).max(0.0));
        let law = power_law(2.0, 0.1, Growth::linear(1.0, 1.0).unwrap()).unwrap();
        let data = InitialData::single(rho, 1.0);
        run(&data, &law, 0.05, &StepControls::default(), &Observers::Stride(3)).unwrap()
    }

    #[test]
    fn trajectory_round_trips_bitwise() {
        let traj = sample();
        let bytes = encode_trajectory(&traj);
        assert_eq!(decode_trajectory(&bytes).unwrap(), traj);
    }

    #[test]
    fn damaged_trajectories_are_rejected() {
        let bytes = encode_trajectory(&sample());
        assert!(decode_trajectory(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_trajectory(&extra).is_err());
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(decode_trajectory(&magic).is_err());
        let mut count = bytes;
        count[40..48].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(decode_trajectory(&count).is_err());
    }

    #[test]
    fn csv_shapes() {
        let traj = sample();
        assert_eq!(summary_csv(&traj).lines().count(), traj.frames.len() + 1);
        let csv = frame_csv(traj.last());
        assert!(csv.starts_with("x,density,pressure,potential\n"));
        assert_eq!(csv.lines().count(), 33);
    }
}
