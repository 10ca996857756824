//! Plot-ready exports of a transmission map: a gnuplot nonuniform-matrix
//! text file and a minimal grayscale raster (ASCII PGM), both over Re(S21).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::data::{DataError, MapData};

fn io_err(path: &Path, source: std::io::Error) -> DataError {
    DataError::Io { path: path.display().to_string(), source }
}

/// Gnuplot nonuniform matrix: first row holds the current axis, every
/// following row a frequency and the Re(S21) values across currents.
/// Plot with `splot 'file' nonuniform matrix with image`.
pub fn write_heatmap_matrix(path: impl AsRef<Path>, map: &MapData) -> Result<(), DataError> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    let inner = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(w, "# re(S21) map: splot 'this file' nonuniform matrix with image")?;
        writeln!(w, "# columns: current_ma; rows: freq_hz")?;
        write!(w, "{}", map.currents().len())?;
        for c in map.currents() {
            write!(w, " {c}")?;
        }
        writeln!(w)?;
        for (j, f) in map.freqs().iter().enumerate() {
            write!(w, "{f}")?;
            for i in 0..map.currents().len() {
                write!(w, " {}", map.s21()[i][j].re)?;
            }
            writeln!(w)?;
        }
        Ok(())
    };
    inner(&mut w).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

/// ASCII PGM (P2) raster: x = current (ascending), y = frequency (descending,
/// so low frequencies sit at the bottom of the image), Re(S21) mapped
/// linearly onto gray 0..255 over the range stated in the header.
pub fn write_heatmap_pgm(path: impl AsRef<Path>, map: &MapData) -> Result<(), DataError> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for row in map.s21() {
        for z in row {
            lo = lo.min(z.re);
            hi = hi.max(z.re);
        }
    }
    let scale = hi - lo;
    let inner = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(w, "P2")?;
        writeln!(w, "# re(S21) in [{lo}, {hi}] mapped linearly to gray [0, 255]")?;
        writeln!(w, "# x: current_ma ascending; y: freq_hz descending")?;
        writeln!(w, "{} {}", map.currents().len(), map.freqs().len())?;
        writeln!(w, "255")?;
        for j in (0..map.freqs().len()).rev() {
            let mut line = String::new();
            for i in 0..map.currents().len() {
                let v = map.s21()[i][j].re;
                let gray = if scale > 0.0 {
                    ((v - lo) / scale * 255.0).round().clamp(0.0, 255.0) as u8
                } else {
                    0
                };
                if !line.is_empty() {
                    line.push(' ');
                }
                line.push_str(&gray.to_string());
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    };
    inner(&mut w).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SweepMeta;
    use num_complex::Complex64;

    fn tiny_map(values: Vec<Vec<f64>>) -> MapData {
        let currents: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
        let freqs: Vec<f64> = (0..values[0].len()).map(|j| 1e9 + j as f64 * 1e6).collect();
        let s21 = values
            .into_iter()
            .map(|row| row.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
            .collect();
        MapData::new(currents, freqs, s21, SweepMeta::default()).unwrap()
    }

    #[test]
    fn constant_map_gives_uniform_raster() {
        let map = tiny_map(vec![vec![0.25; 3]; 2]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("flat.pgm");
        write_heatmap_pgm(&path, &map).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let pixels: Vec<&str> = text
            .lines()
            .skip(5)
            .flat_map(|l| l.split_whitespace())
            .collect();
        assert_eq!(pixels.len(), 6);
        assert!(pixels.iter().all(|p| *p == pixels[0]), "{pixels:?}");
    }

    #[test]
    fn single_pixel_map() {
        let map = tiny_map(vec![vec![1.0]]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.pgm");
        write_heatmap_pgm(&path, &map).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("P2"));
        let dims: Vec<&str> = lines.nth(2).unwrap().split_whitespace().collect();
        assert_eq!(dims, vec!["1", "1"]);
    }

    #[test]
    fn matrix_has_axis_row_and_rectangular_body() {
        let map = tiny_map(vec![vec![0.1, 0.2], vec![0.3, 0.4], vec![0.5, 0.6]]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        write_heatmap_matrix(&path, &map).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let rows: Vec<Vec<&str>> = text
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| l.split_whitespace().collect())
            .collect();
        assert_eq!(rows[0][0], "3");
        assert_eq!(rows[0].len(), 4);
        assert_eq!(rows.len(), 1 + map.freqs().len());
        for row in &rows[1..] {
            assert_eq!(row.len(), 1 + 3);
        }
    }
}
