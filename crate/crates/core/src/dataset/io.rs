//! Wide-format profile files: one header line
//! `T_1,…,T_n,p_1,…,p_n,tauc_1,…,tauc_n[,L_0,…,L_n]`, then one profile per row.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{input_labels, output_labels, ColumnLabel, LevelGrid, Profile, ProfileSet};
use crate::error::{Error, Result};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Schema(e.to_string())
}

/// Grid and flux presence implied by a header line.
pub fn infer_grid(header: &[&str]) -> Result<(LevelGrid, bool)> {
    let width = header.len();
    // 3n inputs, or 3n + (n + 1) with fluxes; names decide when both fit.
    let mut candidates = Vec::new();
    if width % 3 == 0 && width > 0 {
        candidates.push((width / 3, false));
    }
    if width >= 5 && (width - 1) % 4 == 0 {
        candidates.push(((width - 1) / 4, true));
    }
    let mut last_err = Error::Schema(format!("{width} columns match no level count"));
    for (n, fluxes) in candidates {
        let grid = LevelGrid::new(n)?;
        match check_header(header, grid, fluxes) {
            Ok(()) => return Ok((grid, fluxes)),
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

/// Loads a profile file, taking the grid from its header.
pub fn load_profiles_auto(path: &Path) -> Result<ProfileSet> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let (grid, _) = infer_grid(&refs)?;
    load_profiles(path, grid)
}

fn expected_header(grid: LevelGrid, fluxes: bool) -> Vec<ColumnLabel> {
    let mut labels = input_labels(grid);
    if fluxes {
        labels.extend(output_labels(grid));
    }
    labels
}

fn check_header(header: &[&str], grid: LevelGrid, fluxes: bool) -> Result<()> {
    let expected = expected_header(grid, fluxes);
    for (i, (got, want)) in header.iter().zip(&expected).enumerate() {
        if ColumnLabel::parse(got) != Some(*want) {
            return Err(Error::Schema(format!(
                "column {} is '{}', expected '{}'",
                i + 1,
                got,
                want
            )));
        }
    }
    Ok(())
}

pub fn read_profiles<R: Read>(reader: R, grid: LevelGrid) -> Result<ProfileSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    let n = grid.n_full();
    let fluxes = if header.len() == 3 * n {
        false
    } else if header.len() == 3 * n + grid.n_half() {
        true
    } else {
        return Err(Error::Schema(format!(
            "header has {} columns, expected {} or {} for {} levels",
            header.len(),
            3 * n,
            3 * n + grid.n_half(),
            n
        )));
    };
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    check_header(&header_refs, grid, fluxes)?;

    let mut profiles = Vec::new();
    let mut flux_rows = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        if record.len() != header.len() {
            return Err(Error::Schema(format!(
                "row {}: {} columns, expected {}",
                row + 1,
                record.len(),
                header.len()
            )));
        }
        let values = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                field.parse::<f64>().map_err(|_| {
                    Error::Schema(format!("row {}, column {}: '{}' is not a number", row + 1, header[col], field))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let profile = Profile {
            temperature: values[0..n].to_vec(),
            pressure: values[n..2 * n].to_vec(),
            cloud_optical_depth: values[2 * n..3 * n].to_vec(),
        };
        profile
            .check(grid)
            .map_err(|reason| Error::InvalidProfile { row: row + 1, reason })?;
        profiles.push(profile);
        if fluxes {
            flux_rows.push(values[3 * n..].to_vec());
        }
    }
    let set = ProfileSet::new(grid, profiles)?;
    if fluxes {
        set.with_fluxes(flux_rows)
    } else {
        Ok(set)
    }
}

pub fn load_profiles(path: &Path, grid: LevelGrid) -> Result<ProfileSet> {
    let file = File::open(path).map_err(io_err(path))?;
    read_profiles(BufReader::new(file), grid)
}

pub fn write_profiles<W: Write>(writer: W, data: &ProfileSet) -> Result<()> {
    let fluxes = data.fluxes();
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    let header: Vec<String> = expected_header(data.grid(), fluxes.is_some())
        .iter()
        .map(ToString::to_string)
        .collect();
    wtr.write_record(&header).map_err(csv_err)?;
    for (i, p) in data.profiles().iter().enumerate() {
        let mut fields: Vec<String> = p
            .temperature
            .iter()
            .chain(&p.pressure)
            .chain(&p.cloud_optical_depth)
            .map(|v| v.to_string())
            .collect();
        if let Some(f) = fluxes {
            fields.extend(f[i].iter().map(|v| v.to_string()));
        }
        wtr.write_record(&fields).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| Error::Schema(e.to_string()))?;
    Ok(())
}

pub fn save_profiles(path: &Path, data: &ProfileSet) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    write_profiles(&mut w, data)?;
    w.flush().map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "T_1,T_2,T_3,p_1,p_2,p_3,tauc_1,tauc_2,tauc_3\n\
                           220,250,280,100,300,500,0,1.5,0\n\
                           215,245,290,110,320,510,0,0,0.2\n";

    #[test]
    fn reads_minimal_file() {
        let grid = LevelGrid::new(3).unwrap();
        let set = read_profiles(MINIMAL.as_bytes(), grid).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.profiles()[1].cloud_optical_depth, vec![0.0, 0.0, 0.2]);
        assert!(set.fluxes().is_none());
    }

    #[test]
    fn reports_offending_row() {
        let text = "T_1,T_2,T_3,p_1,p_2,p_3,tauc_1,tauc_2,tauc_3\n\
                    220,250,280,100,300,500,0,0,0\n\
                    220,250,280,500,300,100,0,0,0\n";
        let err = read_profiles(text.as_bytes(), LevelGrid::new(3).unwrap()).unwrap_err();
        match err {
            Error::InvalidProfile { row, reason } => {
                assert_eq!(row, 2);
                assert!(reason.contains("pressure"), "{reason}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_missing_columns_and_bad_names() {
        let grid = LevelGrid::new(3).unwrap();
        let short = "T_1,T_2,T_3,p_1,p_2,p_3,tauc_1,tauc_2,tauc_3\n220,250,280,100,300,500,0,0\n";
        assert!(matches!(read_profiles(short.as_bytes(), grid), Err(Error::Schema(_))));
        let renamed = MINIMAL.replacen("p_2", "q_2", 1);
        assert!(matches!(read_profiles(renamed.as_bytes(), grid), Err(Error::Schema(_))));
        assert!(matches!(read_profiles(MINIMAL.as_bytes(), LevelGrid::new(2).unwrap()), Err(Error::Schema(_))));
    }

    #[test]
    fn round_trip_with_fluxes() {
        let grid = LevelGrid::new(3).unwrap();
        let set = read_profiles(MINIMAL.as_bytes(), grid)
            .unwrap()
            .with_fluxes(vec![vec![0.0, 10.5, 20.25, 30.125], vec![0.0, 1.0, 2.0, 3.0]])
            .unwrap();
        let mut buf = Vec::new();
        write_profiles(&mut buf, &set).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("T_1,T_2,T_3,p_1,p_2,p_3,tauc_1,tauc_2,tauc_3,L_0,L_1,L_2,L_3\n"));
        assert_eq!(read_profiles(buf.as_slice(), grid).unwrap(), set);
    }

    #[test]
    fn infers_grid_from_header() {
        let h: Vec<&str> = MINIMAL.lines().next().unwrap().split(',').collect();
        assert_eq!(infer_grid(&h).unwrap(), (LevelGrid::new(3).unwrap(), false));
        let mut with_flux = h.clone();
        with_flux.extend(["L_0", "L_1", "L_2", "L_3"]);
        assert_eq!(infer_grid(&with_flux).unwrap(), (LevelGrid::new(3).unwrap(), true));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("profiles.csv");
        let grid = LevelGrid::new(3).unwrap();
        let set = read_profiles(MINIMAL.as_bytes(), grid).unwrap();
        save_profiles(&path, &set).unwrap();
        assert_eq!(load_profiles(&path, grid).unwrap(), set);
        assert!(matches!(load_profiles(&dir.path().join("missing.csv"), grid), Err(Error::Io { .. })));
    }
}
