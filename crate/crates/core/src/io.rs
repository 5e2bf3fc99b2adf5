//! Snapshot, VTK and time-series files.
//!
//! Snapshots are self-describing little-endian binaries: an 8-byte magic, a format
//! version, the grid dimensions, the step counter, the temperature-history depth and a
//! list of named `f64` arrays. Reading a snapshot back restores the evolving state
//! bitwise; the derived macroscopic fields are recomputed on restart.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::{Grid, Padded};
use crate::sim::{DiagnosticsRecord, FieldSet};

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"TLBMSNAP";
pub const SNAPSHOT_VERSION: u32 = 1;

fn put_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_u64(w: &mut impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn get_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn put_array(w: &mut impl Write, name: &str, data: &[f64]) -> Result<()> {
    put_u32(w, name.len() as u32)?;
    w.write_all(name.as_bytes())?;
    put_u64(w, data.len() as u64)?;
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn get_array(r: &mut impl Read) -> Result<(String, Vec<f64>)> {
    let len = get_u32(r)? as usize;
    if len > 256 {
        return Err(Error::Format(format!("array name of {len} bytes")));
    }
    let mut name = vec![0u8; len];
    r.read_exact(&mut name)?;
    let name = String::from_utf8(name).map_err(|_| Error::Format("array name is not UTF-8".into()))?;
    let count = get_u64(r)? as usize;
    let mut bytes = vec![0u8; count.checked_mul(8).ok_or_else(|| Error::Format("array too large".into()))?];
    r.read_exact(&mut bytes)?;
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((name, data))
}

/// Write the evolving state of `fields` to `path`.
pub fn write_snapshot(path: &Path, fields: &FieldSet) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(SNAPSHOT_MAGIC)?;
    put_u32(&mut w, SNAPSHOT_VERSION)?;
    for d in fields.grid.dims() {
        put_u64(&mut w, d as u64)?;
    }
    put_u64(&mut w, fields.step)?;
    w.write_all(&[fields.history])?;
    let mut arrays: Vec<(&str, &[f64])> = vec![("f", &fields.f), ("temperature", &fields.temperature)];
    if !fields.g.is_empty() {
        arrays.push(("g", &fields.g));
    }
    if !fields.t_prev.is_empty() {
        arrays.push(("t_prev", &fields.t_prev));
        arrays.push(("t_prev2", &fields.t_prev2));
    }
    put_u32(&mut w, arrays.len() as u32)?;
    for (name, data) in arrays {
        put_array(&mut w, name, data)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a snapshot written by [`write_snapshot`] onto `grid`, whose dimensions must
/// match. Derived fields are left zeroed.
pub fn read_snapshot(path: &Path, grid: &Grid) -> Result<FieldSet> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Format(format!("{} is not a snapshot", path.display())));
    }
    let version = get_u32(&mut r)?;
    if version != SNAPSHOT_VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {version}")));
    }
    let mut dims = [0usize; 3];
    for d in dims.iter_mut() {
        *d = get_u64(&mut r)? as usize;
    }
    if dims != grid.dims() {
        return Err(Error::Format(format!("snapshot grid {dims:?} does not match {:?}", grid.dims())));
    }
    let step = get_u64(&mut r)?;
    let mut hist = [0u8; 1];
    r.read_exact(&mut hist)?;
    let n = grid.len();
    let mut fields = FieldSet::new(grid.clone(), false);
    fields.step = step;
    fields.history = hist[0];
    for _ in 0..get_u32(&mut r)? {
        let (name, data) = get_array(&mut r)?;
        let (slot, per_node) = match name.as_str() {
            "f" => (&mut fields.f, crate::lattice::Q19),
            "g" => (&mut fields.g, crate::lattice::Q7),
            "temperature" => (&mut fields.temperature, 1),
            "t_prev" => (&mut fields.t_prev, 1),
            "t_prev2" => (&mut fields.t_prev2, 1),
            other => return Err(Error::Format(format!("unknown snapshot array '{other}'"))),
        };
        if data.len() != n * per_node {
            return Err(Error::Format(format!("array '{name}' has {} values, expected {}", data.len(), n * per_node)));
        }
        *slot = data;
    }
    fields.velocity = Padded::new(grid);
    fields.psi = Padded::new(grid);
    Ok(fields)
}

/// Write density, temperature and velocity as a legacy ASCII VTK structured-points file.
pub fn write_vtk(path: &Path, fields: &FieldSet) -> Result<()> {
    let g = &fields.grid;
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "thermolbm step {}", fields.step)?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} {}", g.nx, g.ny, g.nz)?;
    writeln!(w, "ORIGIN 0 0 0")?;
    writeln!(w, "SPACING 1 1 1")?;
    writeln!(w, "POINT_DATA {}", g.len())?;
    for (name, data) in [("density", &fields.rho), ("temperature", &fields.temperature)] {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in data.iter() {
            writeln!(w, "{v:e}")?;
        }
    }
    writeln!(w, "VECTORS velocity double")?;
    for n in 0..g.len() {
        let u = fields.velocity_at(n);
        writeln!(w, "{:e} {:e} {:e}", u[0], u[1], u[2])?;
    }
    w.flush()?;
    Ok(())
}

/// Snapshot and VTK paths for `step` inside `dir`.
pub fn output_paths(dir: &Path, step: u64) -> (PathBuf, PathBuf) {
    (dir.join(format!("state_{step:09}.bin")), dir.join(format!("fields_{step:09}.vtk")))
}

/// Write the snapshot and VTK file of the current step.
pub fn write_outputs(dir: &Path, fields: &FieldSet) -> Result<()> {
    let (bin, vtk) = output_paths(dir, fields.step);
    write_snapshot(&bin, fields)?;
    write_vtk(&vtk, fields)
}

const SERIES_HEADER: [&str; 6] = ["step", "mass", "max_speed", "diameter", "contact_radius", "mean_step_seconds"];

/// Write diagnostics records as CSV.
pub fn write_series_csv(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(SERIES_HEADER).map_err(csv_error)?;
    for r in records {
        w.write_record([
            r.step.to_string(),
            format!("{:e}", r.mass),
            format!("{:e}", r.max_speed),
            format!("{:e}", r.diameter),
            format!("{:e}", r.contact_radius),
            format!("{:e}", r.mean_step_seconds),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a series written by [`write_series_csv`].
pub fn read_series_csv(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let mut rd = csv::Reader::from_path(path).map_err(csv_error)?;
    let header: Vec<String> = rd.headers().map_err(csv_error)?.iter().map(str::to_owned).collect();
    if header != SERIES_HEADER {
        return Err(Error::Format(format!("unexpected series header {header:?}")));
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_error)?;
        let num = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|_| Error::Format(format!("bad number '{}' in series", &rec[i])))
        };
        out.push(DiagnosticsRecord {
            step: rec[0].parse().map_err(|_| Error::Format(format!("bad step '{}'", &rec[0])))?,
            mass: num(1)?,
            max_speed: num(2)?,
            diameter: num(3)?,
            contact_radius: num(4)?,
            mean_step_seconds: num(5)?,
        });
    }
    Ok(out)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}
