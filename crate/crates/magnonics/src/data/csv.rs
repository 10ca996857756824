//! CSV serialization of sweeps, maps, and fit-input point series.
//!
//! Layout shared by all four formats: UTF-8, LF line endings, `#`-prefixed
//! `key=value` metadata lines, then a fixed column-header line, then data
//! rows. Floats carry 17 significant digits.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{fmt_f64, DataError, MapData, Sweep, SweepMeta};

const SWEEP_FORMAT: &str = "sweep-csv/1";
const MAP_FORMAT: &str = "map-csv/1";
const SCALING_FORMAT: &str = "scaling-csv/1";
const TEMPERATURE_FORMAT: &str = "temperature-csv/1";

const SWEEP_HEADER: &str = "freq_hz,re_s21,im_s21";
const MAP_HEADER: &str = "current_ma,freq_hz,re_s21,im_s21";
const SCALING_HEADER: &str = "diameter_m,g_hz";
const TEMPERATURE_HEADER: &str = "temperature_k,gamma_hz";

fn io_err(path: &Path, source: std::io::Error) -> DataError {
    DataError::Io { path: path.display().to_string(), source }
}

fn write_meta(w: &mut impl Write, format: &str, meta: &SweepMeta) -> std::io::Result<()> {
    writeln!(w, "# format={format}")?;
    if let Some(v) = meta.current_ma {
        writeln!(w, "# current_ma={}", fmt_f64(v))?;
    }
    if let Some(v) = meta.temperature_k {
        writeln!(w, "# temperature_k={}", fmt_f64(v))?;
    }
    if let Some(v) = meta.power_dbm {
        writeln!(w, "# power_dbm={}", fmt_f64(v))?;
    }
    if let Some(v) = meta.seed {
        writeln!(w, "# seed={v}")?;
    }
    for (k, v) in &meta.labels {
        writeln!(w, "# {k}={v}")?;
    }
    Ok(())
}

/// Streaming metadata/header/row scanner shared by the readers.
struct Rows<R: BufRead> {
    lines: std::iter::Enumerate<std::io::Lines<R>>,
    pub meta: SweepMeta,
}

impl<R: BufRead> Rows<R> {
    /// Consume metadata lines and the column header; verify format id.
    fn open(reader: R, format: &str, header: &str) -> Result<Self, DataError> {
        let mut lines = reader.lines().enumerate();
        let mut meta = SweepMeta::default();
        loop {
            let (idx, line) = match lines.next() {
                Some((idx, line)) => (idx, line.map_err(|e| DataError::Parse {
                    line: idx + 1,
                    message: e.to_string(),
                })?),
                None => {
                    return Err(DataError::Structure {
                        message: "file ends before the column header".into(),
                    })
                }
            };
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('#') {
                let rest = rest.trim();
                let (key, value) = rest.split_once('=').ok_or_else(|| DataError::Parse {
                    line: lineno,
                    message: format!("metadata line is not key=value: {rest:?}"),
                })?;
                apply_meta(&mut meta, key.trim(), value.trim(), format, lineno)?;
                continue;
            }
            if trimmed != header {
                return Err(DataError::Parse {
                    line: lineno,
                    message: format!("expected column header {header:?}, found {trimmed:?}"),
                });
            }
            return Ok(Self { lines, meta });
        }
    }

    /// Next data row split into `n` numeric fields.
    fn next_row(&mut self, n: usize) -> Option<Result<(usize, Vec<f64>), DataError>> {
        loop {
            let (idx, line) = match self.lines.next() {
                Some((idx, Ok(line))) => (idx, line),
                Some((idx, Err(e))) => {
                    return Some(Err(DataError::Parse { line: idx + 1, message: e.to_string() }))
                }
                None => return None,
            };
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').collect();
            if fields.len() != n {
                return Some(Err(DataError::Parse {
                    line: lineno,
                    message: format!("expected {n} comma-separated fields, found {}", fields.len()),
                }));
            }
            let mut values = Vec::with_capacity(n);
            for field in fields {
                match field.trim().parse::<f64>() {
                    Ok(v) if v.is_finite() => values.push(v),
                    Ok(v) => {
                        return Some(Err(DataError::Parse {
                            line: lineno,
                            message: format!("non-finite value {v}"),
                        }))
                    }
                    Err(_) => {
                        return Some(Err(DataError::Parse {
                            line: lineno,
                            message: format!("not a number: {field:?}"),
                        }))
                    }
                }
            }
            return Some(Ok((lineno, values)));
        }
    }
}

fn apply_meta(
    meta: &mut SweepMeta,
    key: &str,
    value: &str,
    format: &str,
    lineno: usize,
) -> Result<(), DataError> {
    let parse_f64 = |v: &str| {
        v.parse::<f64>().map_err(|_| DataError::Parse {
            line: lineno,
            message: format!("metadata {key}: not a number: {v:?}"),
        })
    };
    match key {
        "format" => {
            if value != format {
                return Err(DataError::SchemaVersion {
                    found: value.to_string(),
                    supported: format.to_string(),
                });
            }
        }
        "current_ma" => meta.current_ma = Some(parse_f64(value)?),
        "temperature_k" => meta.temperature_k = Some(parse_f64(value)?),
        "power_dbm" => meta.power_dbm = Some(parse_f64(value)?),
        "seed" => {
            meta.seed = Some(value.parse::<u64>().map_err(|_| DataError::Parse {
                line: lineno,
                message: format!("metadata seed: not an unsigned integer: {value:?}"),
            })?)
        }
        _ => {
            meta.labels.insert(key.to_string(), value.to_string());
        }
    }
    Ok(())
}

/// Write a sweep to any writer.
pub fn write_sweep_to(w: &mut impl Write, sweep: &Sweep) -> std::io::Result<()> {
    write_meta(w, SWEEP_FORMAT, &sweep.meta)?;
    writeln!(w, "{SWEEP_HEADER}")?;
    for (f, z) in sweep.freqs().iter().zip(sweep.s21()) {
        writeln!(w, "{},{},{}", fmt_f64(*f), fmt_f64(z.re), fmt_f64(z.im))?;
    }
    Ok(())
}

pub fn write_sweep(path: impl AsRef<Path>, sweep: &Sweep) -> Result<(), DataError> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    write_sweep_to(&mut w, sweep).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

/// Read a sweep from any reader.
pub fn read_sweep_from(reader: impl Read) -> Result<Sweep, DataError> {
    let mut rows = Rows::open(BufReader::new(reader), SWEEP_FORMAT, SWEEP_HEADER)?;
    let mut freqs = Vec::new();
    let mut s21 = Vec::new();
    while let Some(row) = rows.next_row(3) {
        let (lineno, v) = row?;
        if let Some(&last) = freqs.last() {
            if v[0] <= last {
                return Err(DataError::Parse {
                    line: lineno,
                    message: format!("frequency {} is not above the previous {}", v[0], last),
                });
            }
        }
        freqs.push(v[0]);
        s21.push(Complex64::new(v[1], v[2]));
    }
    if freqs.is_empty() {
        return Err(DataError::Structure { message: "sweep file contains no data rows".into() });
    }
    Sweep::new(freqs, s21, rows.meta)
}

pub fn read_sweep(path: impl AsRef<Path>) -> Result<Sweep, DataError> {
    let path = path.as_ref();
    read_sweep_from(File::open(path).map_err(|e| io_err(path, e))?)
}

/// Write a map in long format, grouped by current.
pub fn write_map_to(w: &mut impl Write, map: &MapData) -> std::io::Result<()> {
    write_meta(w, MAP_FORMAT, &map.meta)?;
    writeln!(w, "{MAP_HEADER}")?;
    for (i, current) in map.currents().iter().enumerate() {
        for (f, z) in map.freqs().iter().zip(&map.s21()[i]) {
            writeln!(
                w,
                "{},{},{},{}",
                fmt_f64(*current),
                fmt_f64(*f),
                fmt_f64(z.re),
                fmt_f64(z.im)
            )?;
        }
    }
    Ok(())
}

pub fn write_map(path: impl AsRef<Path>, map: &MapData) -> Result<(), DataError> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    write_map_to(&mut w, map).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

/// Read a long-format map; validates rectangularity and both axes.
pub fn read_map_from(reader: impl Read) -> Result<MapData, DataError> {
    let mut rows = Rows::open(BufReader::new(reader), MAP_FORMAT, MAP_HEADER)?;
    let mut currents: Vec<f64> = Vec::new();
    let mut freqs: Vec<f64> = Vec::new();
    let mut matrix: Vec<Vec<Complex64>> = Vec::new();
    let mut first_block = true;

    while let Some(row) = rows.next_row(4) {
        let (lineno, v) = row?;
        let (current, f, z) = (v[0], v[1], Complex64::new(v[2], v[3]));
        let new_block = match currents.last() {
            None => true,
            Some(&last) if current == last => false,
            Some(&last) if current > last => true,
            Some(&last) => {
                return Err(DataError::Parse {
                    line: lineno,
                    message: format!("current {current} is below the previous block at {last}"),
                })
            }
        };
        if new_block {
            if let Some(prev) = matrix.last() {
                if prev.len() != freqs.len() {
                    return Err(DataError::Structure {
                        message: format!(
                            "column at current {} mA has {} points, expected {}",
                            currents.last().unwrap(),
                            prev.len(),
                            freqs.len()
                        ),
                    });
                }
            }
            currents.push(current);
            matrix.push(Vec::new());
            first_block = matrix.len() == 1;
        }
        let block = matrix.last_mut().unwrap();
        if first_block {
            if let Some(&last) = freqs.last() {
                if f <= last {
                    return Err(DataError::Parse {
                        line: lineno,
                        message: format!("frequency {f} is not above the previous {last}"),
                    });
                }
            }
            freqs.push(f);
        } else {
            let idx = block.len();
            if idx >= freqs.len() || freqs[idx] != f {
                return Err(DataError::Structure {
                    message: format!(
                        "column at current {current} mA deviates from the frequency grid at line {lineno}"
                    ),
                });
            }
        }
        block.push(z);
    }

    if matrix.is_empty() {
        return Err(DataError::Structure { message: "map file contains no data rows".into() });
    }
    if let Some(prev) = matrix.last() {
        if prev.len() != freqs.len() {
            return Err(DataError::Structure {
                message: format!(
                    "column at current {} mA has {} points, expected {}",
                    currents.last().unwrap(),
                    prev.len(),
                    freqs.len()
                ),
            });
        }
    }
    MapData::new(currents, freqs, matrix, rows.meta)
}

pub fn read_map(path: impl AsRef<Path>) -> Result<MapData, DataError> {
    let path = path.as_ref();
    read_map_from(File::open(path).map_err(|e| io_err(path, e))?)
}

fn write_pairs_to(
    w: &mut impl Write,
    format: &str,
    header: &str,
    labels: &BTreeMap<String, String>,
    points: &[(f64, f64)],
) -> std::io::Result<()> {
    writeln!(w, "# format={format}")?;
    for (k, v) in labels {
        writeln!(w, "# {k}={v}")?;
    }
    writeln!(w, "{header}")?;
    for (x, y) in points {
        writeln!(w, "{},{}", fmt_f64(*x), fmt_f64(*y))?;
    }
    Ok(())
}

fn read_pairs_from(
    reader: impl Read,
    format: &str,
    header: &str,
) -> Result<Vec<(f64, f64)>, DataError> {
    let mut rows = Rows::open(BufReader::new(reader), format, header)?;
    let mut points = Vec::new();
    while let Some(row) = rows.next_row(2) {
        let (_, v) = row?;
        points.push((v[0], v[1]));
    }
    if points.is_empty() {
        return Err(DataError::Structure { message: "series file contains no data rows".into() });
    }
    Ok(points)
}

/// Coupling-versus-diameter points, `diameter_m,g_hz`.
pub fn write_scaling_points(
    path: impl AsRef<Path>,
    labels: &BTreeMap<String, String>,
    points: &[(f64, f64)],
) -> Result<(), DataError> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    write_pairs_to(&mut w, SCALING_FORMAT, SCALING_HEADER, labels, points)
        .map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_scaling_points(path: impl AsRef<Path>) -> Result<Vec<(f64, f64)>, DataError> {
    let path = path.as_ref();
    read_pairs_from(
        File::open(path).map_err(|e| io_err(path, e))?,
        SCALING_FORMAT,
        SCALING_HEADER,
    )
}

/// Linewidth-versus-temperature points, `temperature_k,gamma_hz`.
pub fn write_temperature_points(
    path: impl AsRef<Path>,
    labels: &BTreeMap<String, String>,
    points: &[(f64, f64)],
) -> Result<(), DataError> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    write_pairs_to(&mut w, TEMPERATURE_FORMAT, TEMPERATURE_HEADER, labels, points)
        .map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_temperature_points(path: impl AsRef<Path>) -> Result<Vec<(f64, f64)>, DataError> {
    let path = path.as_ref();
    read_pairs_from(
        File::open(path).map_err(|e| io_err(path, e))?,
        TEMPERATURE_FORMAT,
        TEMPERATURE_HEADER,
    )
}
