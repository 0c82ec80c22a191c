//! Nodal field files: CSV (`x1,x2,value`, 17 significant digits) and
//! legacy ASCII VTK unstructured grids.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use crate::fem::NodeField;
use crate::mesh::Mesh;

pub const FIELD_HEADER: [&str; 3] = ["x1", "x2", "value"];

/// Fixed 17-significant-digit scientific notation; parses back bit-exact.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_field_csv(path: &Path, mesh: &Mesh, field: &NodeField) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(FIELD_HEADER)?;
    for (p, v) in mesh.nodes().iter().zip(field.iter()) {
        w.write_record([fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(*v)])?;
    }
    w.flush()
}

/// Field values with the coordinates they were written at.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub points: Vec<[f64; 2]>,
    pub values: Vec<f64>,
}

pub fn read_field_csv(path: &Path) -> io::Result<FieldFile> {
    let invalid = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.iter().map(str::trim).ne(FIELD_HEADER) {
        return Err(invalid(format!(
            "{}: expected header x1,x2,value",
            path.display()
        )));
    }
    let mut out = FieldFile {
        points: Vec::new(),
        values: Vec::new(),
    };
    for (line, record) in r.records().enumerate() {
        let record = record?;
        if record.len() != 3 {
            return Err(invalid(format!(
                "{}: row {} has {} columns",
                path.display(),
                line + 1,
                record.len()
            )));
        }
        let mut nums = [0.0; 3];
        for (slot, text) in nums.iter_mut().zip(record.iter()) {
            *slot = text.trim().parse().map_err(|_| {
                invalid(format!(
                    "{}: row {}: bad number {text:?}",
                    path.display(),
                    line + 1
                ))
            })?;
        }
        out.points.push([nums[0], nums[1]]);
        out.values.push(nums[2]);
    }
    Ok(out)
}

/// Legacy VTK (ASCII) unstructured grid of triangles with point scalars.
pub fn vtk_string(mesh: &Mesh, name: &str, field: &NodeField) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{name}");
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", mesh.node_count());
    for p in mesh.nodes() {
        let _ = writeln!(s, "{} {} 0", fmt_f64(p[0]), fmt_f64(p[1]));
    }
    let nt = mesh.triangle_count();
    let _ = writeln!(s, "CELLS {} {}", nt, 4 * nt);
    for [a, b, c] in mesh.triangles() {
        let _ = writeln!(s, "3 {a} {b} {c}");
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(s, "5");
    }
    let _ = writeln!(s, "POINT_DATA {}", mesh.node_count());
    let _ = writeln!(s, "SCALARS {name} double 1");
    let _ = writeln!(s, "LOOKUP_TABLE default");
    for v in field.iter() {
        let _ = writeln!(s, "{}", fmt_f64(*v));
    }
    s
}

pub fn write_field_vtk(path: &Path, mesh: &Mesh, name: &str, field: &NodeField) -> io::Result<()> {
    fs::write(path, vtk_string(mesh, name, field))
}
