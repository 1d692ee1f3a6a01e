//! Result files: convergence tables as CSV and gnuplot data, cell fields as
//! legacy ASCII VTK.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::mesh::PolygonalMesh;
use crate::verification::{ConvergenceRecord, StressMethod};
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 9] = [
    "test", "family", "level", "h_e", "dofs", "E_vem", "E_rcp0", "E_rcp1", "time_s",
];

/// Round-trip exact, locale-independent float formatting.
fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn optional(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

/// Writes one header line and one row per record, in the given order.
/// Methods that were not run leave their column empty.
pub fn write_csv_to<W: Write>(records: &[ConvergenceRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.test.name().to_string(),
            r.family.name().to_string(),
            r.level.to_string(),
            float(r.h_e),
            r.dofs.to_string(),
            optional(r.error(StressMethod::Vem)),
            optional(r.error(StressMethod::Rcp0)),
            optional(r.error(StressMethod::Rcp1)),
            float(r.time_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(records: &[ConvergenceRecord], path: &Path) -> Result<()> {
    write_csv_to(records, BufWriter::new(File::create(path)?))
}

pub fn read_csv_from<R: Read>(input: R) -> Result<Vec<ConvergenceRecord>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Format {
            line: 1,
            message: format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |message: String| Error::Format { line, message };
        let field = |i: usize| row.get(i).unwrap_or_default();
        let number = |i: usize| -> Result<f64> {
            field(i)
                .parse::<f64>()
                .map_err(|e| bad(format!("column {}: {e}", CSV_HEADER[i])))
        };
        let optional = |i: usize| -> Result<Option<f64>> {
            if field(i).is_empty() {
                Ok(None)
            } else {
                number(i).map(Some)
            }
        };
        records.push(ConvergenceRecord {
            test: field(0).parse().map_err(|e: Error| bad(e.to_string()))?,
            family: field(1).parse().map_err(|e: crate::mesh::MeshError| bad(e.to_string()))?,
            level: field(2).parse().map_err(|e| bad(format!("column level: {e}")))?,
            h_e: number(3)?,
            dofs: field(4).parse().map_err(|e| bad(format!("column dofs: {e}")))?,
            errors: [optional(5)?, optional(6)?, optional(7)?],
            time_s: number(8)?,
        });
    }
    Ok(records)
}

pub fn read_csv(path: &Path) -> Result<Vec<ConvergenceRecord>> {
    read_csv_from(File::open(path)?)
}

/// Gnuplot data: one index block per (test, family), columns
/// `h_e E_vem E_rcp0 E_rcp1`, missing values as `NaN`.
pub fn write_dat_to<W: Write>(records: &[ConvergenceRecord], mut out: W) -> Result<()> {
    let mut previous = None;
    for r in records {
        let key = (r.test, r.family);
        if previous != Some(key) {
            if previous.is_some() {
                writeln!(out, "\n")?;
            }
            writeln!(out, "# test {} family {}", r.test, r.family)?;
            writeln!(out, "# h_e E_vem E_rcp0 E_rcp1")?;
            previous = Some(key);
        }
        let cols: Vec<String> = StressMethod::ALL
            .iter()
            .map(|&m| r.error(m).map_or_else(|| "NaN".to_string(), float))
            .collect();
        writeln!(out, "{} {}", float(r.h_e), cols.join(" "))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_dat(records: &[ConvergenceRecord], path: &Path) -> Result<()> {
    write_dat_to(records, BufWriter::new(File::create(path)?))
}

/// Legacy ASCII unstructured grid with polygon cells and one scalar per cell
/// for every named field.
pub fn write_vtk_to<W: Write>(
    mesh: &PolygonalMesh,
    cell_fields: &[(&str, &[f64])],
    mut out: W,
) -> Result<()> {
    for (name, values) in cell_fields {
        if values.len() != mesh.num_cells() {
            return Err(Error::InvalidInput(format!(
                "field `{name}` has {} values for {} cells",
                values.len(),
                mesh.num_cells()
            )));
        }
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::InvalidInput(format!("invalid VTK field name `{name}`")));
        }
    }
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "vemrcp cell fields")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.num_vertices())?;
    for p in mesh.vertices() {
        writeln!(out, "{} {} 0", float(p.x), float(p.y))?;
    }
    let size: usize = mesh.cells().iter().map(|c| c.len() + 1).sum();
    writeln!(out, "CELLS {} {}", mesh.num_cells(), size)?;
    for cell in mesh.cells() {
        let ids: Vec<String> = cell.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{} {}", cell.len(), ids.join(" "))?;
    }
    writeln!(out, "CELL_TYPES {}", mesh.num_cells())?;
    for _ in 0..mesh.num_cells() {
        // VTK_POLYGON
        writeln!(out, "7")?;
    }
    if !cell_fields.is_empty() {
        writeln!(out, "CELL_DATA {}", mesh.num_cells())?;
        for (name, values) in cell_fields {
            writeln!(out, "SCALARS {name} double 1")?;
            writeln!(out, "LOOKUP_TABLE default")?;
            for v in values.iter() {
                writeln!(out, "{}", float(*v))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_vtk(mesh: &PolygonalMesh, cell_fields: &[(&str, &[f64])], path: &Path) -> Result<()> {
    write_vtk_to(mesh, cell_fields, BufWriter::new(File::create(path)?))
}
