//! Snapshot files and CSV output.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::analysis::NormReport;
use crate::error::{Error, Result};
use crate::spectral::{Field, Grid};

const MAGIC: &[u8; 4] = b"FDT1";

/// Writes `field` as `FDT1`, dim (u32), N (u32), L (f64), samples (f64), all little-endian.
pub fn write_snapshot(field: &Field, path: &Path) -> Result<()> {
    let g = field.grid();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(g.dim() as u32).to_le_bytes())?;
    w.write_all(&(g.points_per_axis() as u32).to_le_bytes())?;
    w.write_all(&g.box_length().to_le_bytes())?;
    for v in field.values().iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Field> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    decode_snapshot(&bytes)
}

fn decode_snapshot(bytes: &[u8]) -> Result<Field> {
    if bytes.len() < 20 {
        return Err(Error::Format(format!(
            "snapshot truncated: {} header bytes",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("bad snapshot magic".into()));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let dim = u32_at(4) as usize;
    let n = u32_at(8) as usize;
    let length = f64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
    let grid = Grid::new(dim, n, length)
        .map_err(|e| Error::Format(format!("bad snapshot header: {e}")))?;
    let body = &bytes[20..];
    if body.len() != 8 * grid.len() {
        return Err(Error::Format(format!(
            "snapshot body holds {} bytes, expected {}",
            body.len(),
            8 * grid.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Field::from_values(grid, values).map_err(|e| Error::Format(e.to_string()))
}

/// 17 significant digits; `None` becomes an empty cell.
pub fn format_number(x: Option<f64>) -> String {
    match x {
        Some(v) => format!("{v:.16e}"),
        None => String::new(),
    }
}

/// Writes a header line and one comma-separated line per row.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// One row of the time-series output.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub norms: NormReport,
    /// Discrete energy identity residual over the preceding step, when known.
    pub energy_balance_residual: Option<f64>,
}

pub const DIAGNOSTICS_COLUMNS: [&str; 12] = [
    "time",
    "l1",
    "l2",
    "l4",
    "linf",
    "min",
    "max",
    "sobolev_alpha_energy",
    "holder",
    "besov_p",
    "bmo",
    "energy_balance_residual",
];

impl DiagnosticsRecord {
    fn cells(&self) -> Vec<String> {
        let n = &self.norms;
        [
            Some(self.time),
            n.lp(1.0),
            n.lp(2.0),
            n.lp(4.0),
            Some(n.linf),
            Some(n.min_value),
            Some(n.max_value),
            Some(n.sobolev_alpha_energy),
            n.holder_seminorm,
            n.besov_seminorm_p,
            n.bmo,
            self.energy_balance_residual,
        ]
        .into_iter()
        .map(format_number)
        .collect()
    }
}

pub fn write_diagnostics_csv<'a, I>(records: I, path: &Path) -> Result<()>
where
    I: IntoIterator<Item = &'a DiagnosticsRecord>,
{
    write_csv(
        path,
        &DIAGNOSTICS_COLUMNS,
        records.into_iter().map(DiagnosticsRecord::cells),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::NormSettings;
    use std::f64::consts::PI;

    fn field() -> Field {
        let g = Grid::square(16, 2.0 * PI).unwrap();
        Field::from_fn(g, |x| x[0].sin() + 0.1 * (3.0 * x[1]).cos() + 1e-17)
    }

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.fdt");
        let f = field();
        write_snapshot(&f, &p).unwrap();
        let back = read_snapshot(&p).unwrap();
        assert_eq!(back.grid(), f.grid());
        let same = back
            .values()
            .iter()
            .zip(f.values().iter())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        assert!(same);
    }

    #[test]
    fn snapshot_rejects_bad_input() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.fdt");
        write_snapshot(&field(), &p).unwrap();
        let good = std::fs::read(&p).unwrap();
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode_snapshot(&bad), Err(Error::Format(_))));
        assert!(matches!(
            decode_snapshot(&good[..good.len() - 3]),
            Err(Error::Format(_))
        ));
        let mut odd = good.clone();
        odd[8..12].copy_from_slice(&12u32.to_le_bytes());
        assert!(matches!(decode_snapshot(&odd), Err(Error::Format(_))));
    }

    #[test]
    fn diagnostics_csv_layout_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        write_diagnostics_csv(&[], &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap().lines().count(), 1);

        let norms = NormReport::compute(&field(), &NormSettings::cheap(0.25)).unwrap();
        let recs = vec![
            DiagnosticsRecord {
                time: 0.0,
                norms: norms.clone(),
                energy_balance_residual: None,
            },
            DiagnosticsRecord {
                time: 0.1,
                norms,
                energy_balance_residual: Some(1.0 / 3.0),
            },
        ];
        write_diagnostics_csv(&recs, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], DIAGNOSTICS_COLUMNS.join(","));
        let cells: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(cells[0].parse::<f64>().unwrap(), 0.1);
        assert_eq!(
            cells[1].parse::<f64>().unwrap(),
            recs[1].norms.lp(1.0).unwrap()
        );
        assert_eq!(cells[11].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(cells[8], "");
    }
}
