//! On-disk formats: a flat binary layout for fields (header then row-major
//! values), CSV for plotting, and JSON for measures.

use std::io::{self, Read, Write};
use std::path::Path;
use std::sync::Arc;

use nlpot::{Grid, RadonMeasure, Region, ScalarField};

const MAGIC: &[u8; 4] = b"NLPF";
const VERSION: u32 = 1;

fn put_u32(w: &mut impl Write, v: u32) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_u64(w: &mut impl Write, v: u64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_f64(w: &mut impl Write, v: f64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn get_u32(r: &mut impl Read) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn get_u64(r: &mut impl Read) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn get_f64(r: &mut impl Read) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Header: magic, version, n, region (tag + parameters), h, origin, dims,
/// count; then row-major values (inactive cells hold NaN), then the singular
/// cell list.
pub fn write_field(path: &Path, field: &ScalarField) -> io::Result<()> {
    let grid = field.grid();
    let n = grid.dim();
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    put_u32(&mut w, VERSION)?;
    put_u32(&mut w, n as u32)?;
    match grid.region() {
        Region::Box => put_u32(&mut w, 0)?,
        Region::Annulus { center, r_in, r_out } => {
            put_u32(&mut w, 1)?;
            for d in 0..n {
                put_f64(&mut w, center[d])?;
            }
            put_f64(&mut w, *r_in)?;
            put_f64(&mut w, *r_out)?;
        }
    }
    put_f64(&mut w, grid.spacing())?;
    for d in 0..n {
        put_f64(&mut w, grid.origin()[d])?;
    }
    for d in 0..n {
        put_u32(&mut w, grid.dims()[d] as u32)?;
    }
    put_u64(&mut w, grid.len() as u64)?;
    for lin in 0..grid.len() {
        let v = if grid.is_active(lin) && !field.is_singular(lin) {
            field.values()[lin]
        } else {
            f64::NAN
        };
        put_f64(&mut w, v)?;
    }
    put_u64(&mut w, field.singular_cells().len() as u64)?;
    for &s in field.singular_cells() {
        put_u64(&mut w, s as u64)?;
    }
    w.flush()
}

pub fn read_field(path: &Path) -> io::Result<ScalarField> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad magic"));
    }
    let version = get_u32(&mut r)?;
    if version != VERSION {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("unsupported version {version}"),
        ));
    }
    let n = get_u32(&mut r)? as usize;
    let tag = get_u32(&mut r)?;
    let region = match tag {
        0 => None,
        1 => {
            let mut center = vec![0.0; n];
            for c in center.iter_mut() {
                *c = get_f64(&mut r)?;
            }
            let r_in = get_f64(&mut r)?;
            let r_out = get_f64(&mut r)?;
            Some((center, r_in, r_out))
        }
        _ => return Err(io::Error::new(io::ErrorKind::InvalidData, "bad region tag")),
    };
    let h = get_f64(&mut r)?;
    let mut origin = vec![0.0; n];
    for o in origin.iter_mut() {
        *o = get_f64(&mut r)?;
    }
    let mut dims = vec![0usize; n];
    for d in dims.iter_mut() {
        *d = get_u32(&mut r)? as usize;
    }
    let count = get_u64(&mut r)? as usize;

    let grid: Arc<Grid> = match region {
        Some((center, r_in, r_out)) => Grid::annulus(n, &center, r_in, r_out, h)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?,
        None => {
            let hi: Vec<f64> = origin
                .iter()
                .zip(&dims)
                .map(|(o, d)| o + *d as f64 * h)
                .collect();
            Grid::boxed(n, &origin, &hi, h)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?
        }
    };
    if grid.len() != count || grid.dims() != &dims[..] {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "reconstructed grid does not match the header",
        ));
    }
    let mut values = vec![0.0; count];
    for v in values.iter_mut() {
        let raw = get_f64(&mut r)?;
        *v = if raw.is_nan() { 0.0 } else { raw };
    }
    let mut out = ScalarField::from_fn(&grid, |x| {
        let lin = grid.cell_of(x).expect("cell centers map to their own cell");
        values[lin]
    });
    let singular_count = get_u64(&mut r)? as usize;
    for _ in 0..singular_count {
        out.mark_singular(get_u64(&mut r)? as usize);
    }
    Ok(out)
}

/// CSV rows: index, coordinates, value (active cells only).
pub fn write_field_csv(path: &Path, field: &ScalarField) -> io::Result<()> {
    let grid = field.grid();
    let n = grid.dim();
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(w, "index")?;
    for d in 0..n {
        write!(w, ",x{}", d + 1)?;
    }
    writeln!(w, ",value")?;
    for lin in grid.active_cells() {
        let c = grid.center_of(lin);
        write!(w, "{lin}")?;
        for d in 0..n {
            write!(w, ",{}", c[d])?;
        }
        if field.is_singular(lin) {
            writeln!(w, ",nan")?;
        } else {
            writeln!(w, ",{}", field.values()[lin])?;
        }
    }
    w.flush()
}

/// {"atoms": [[x..., mass], ...], "density": <field path or null>}
pub fn write_measure_json(
    path: &Path,
    mu: &RadonMeasure,
    density_ref: Option<&str>,
) -> io::Result<()> {
    let n = mu.dim();
    let atoms: Vec<Vec<f64>> = mu
        .atoms()
        .iter()
        .map(|(p, m)| {
            let mut row: Vec<f64> = p[..n].to_vec();
            row.push(*m);
            row
        })
        .collect();
    let density = match (mu.density(), density_ref) {
        (Some(_), Some(r)) => serde_json::Value::String(r.to_string()),
        _ => serde_json::Value::Null,
    };
    let doc = serde_json::json!({ "atoms": atoms, "density": density });
    std::fs::write(path, serde_json::to_string_pretty(&doc)?)
}
