//! Fixed-column PDB reader and a writer for the normalized subset.

use std::io::{BufRead, Write};

use chrono::{Datelike, NaiveDate};

use super::{ParseError, Structure, StructureBuilder};
use crate::geometry::Vec3;

const MONTHS: [&str; 12] =
    ["JAN", "FEB", "MAR", "APR", "MAY", "JUN", "JUL", "AUG", "SEP", "OCT", "NOV", "DEC"];

fn col(line: &str, lo: usize, hi: usize) -> &str {
    let bytes = line.as_bytes();
    if lo >= bytes.len() {
        return "";
    }
    let hi = hi.min(bytes.len());
    std::str::from_utf8(&bytes[lo..hi]).unwrap_or("")
}

/// Parses `27-JAN-24` into a date. Two-digit years follow the archive
/// convention: 00-49 map to 2000-2049, 50-99 to 1950-1999.
pub(crate) fn parse_header_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    let mut parts = s.split('-');
    let day: u32 = parts.next()?.trim().parse().ok()?;
    let mon_txt = parts.next()?.trim().to_ascii_uppercase();
    let month = MONTHS.iter().position(|m| *m == mon_txt)? as u32 + 1;
    let yy: i32 = parts.next()?.trim().parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    let year = if yy < 50 { 2000 + yy } else { 1900 + yy };
    NaiveDate::from_ymd_opt(year, month, day)
}

fn format_header_date(d: NaiveDate) -> Result<String, ParseError> {
    let year = d.year();
    if !(1950..=2049).contains(&year) {
        return Err(ParseError::UnwritableDate(d));
    }
    Ok(format!("{:02}-{}-{:02}", d.day(), MONTHS[d.month0() as usize], year % 100))
}

/// Parses PDB text. Keeps the first model, the first alternate location of
/// each atom, and polypeptide residues only; hydrogens are retained but
/// flagged non-heavy. `code_hint` supplies the pdb code when the HEADER
/// lacks one (typically the file stem).
pub fn parse_pdb<R: BufRead>(reader: R, code_hint: Option<&str>) -> Result<Structure, ParseError> {
    let mut header_code: Option<String> = None;
    let mut date: Option<NaiveDate> = None;
    let mut resolution: Option<f64> = None;
    let mut builder = StructureBuilder::new();
    let mut first_model_done = false;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let record = col(&line, 0, 6).trim_end();
        match record {
            "HEADER" => {
                if let Some(d) = parse_header_date(col(&line, 50, 59)) {
                    date = Some(d);
                }
                let code = col(&line, 62, 66).trim();
                if !code.is_empty() {
                    header_code = Some(code.to_string());
                }
            }
            "REMARK" => {
                if col(&line, 7, 10).trim() == "2" && line.contains("RESOLUTION.") {
                    if let Some(rest) = line.split("RESOLUTION.").nth(1) {
                        let tok = rest.split_whitespace().next().unwrap_or("");
                        if let Ok(r) = tok.parse::<f64>() {
                            resolution = Some(r);
                        }
                    }
                }
            }
            "ENDMDL" => {
                first_model_done = true;
            }
            "END" => break,
            "ATOM" | "HETATM" => {
                if first_model_done {
                    continue;
                }
                let resname = col(&line, 17, 20).trim().to_string();
                let chain_id = col(&line, 21, 22).trim().to_string();
                if chain_id.is_empty() {
                    return Err(ParseError::Malformed {
                        line: lineno,
                        reason: "blank chain id".to_string(),
                    });
                }
                let seq_num: i32 = col(&line, 22, 26).trim().parse().map_err(|_| {
                    ParseError::Malformed { line: lineno, reason: "bad residue number".into() }
                })?;
                let icode = col(&line, 26, 27).chars().next().filter(|c| *c != ' ');
                let name = col(&line, 12, 16).trim().to_string();
                if name.is_empty() {
                    return Err(ParseError::Malformed {
                        line: lineno,
                        reason: "blank atom name".to_string(),
                    });
                }
                let parse_coord = |lo: usize, hi: usize| -> Result<f64, ParseError> {
                    col(&line, lo, hi).trim().parse::<f64>().map_err(|_| ParseError::Malformed {
                        line: lineno,
                        reason: "bad coordinate".to_string(),
                    })
                };
                let coords =
                    Vec3::new(parse_coord(30, 38)?, parse_coord(38, 46)?, parse_coord(46, 54)?);
                let element = col(&line, 76, 78).trim().to_string();
                builder.add_atom(
                    record == "HETATM",
                    &chain_id,
                    seq_num,
                    icode,
                    &resname,
                    &name,
                    &element,
                    coords,
                );
            }
            _ => {}
        }
    }

    builder.finish(header_code, code_hint, date, resolution)
}

/// Writes the normalized PDB subset: HEADER (code, date), optional REMARK 2
/// resolution, one ATOM block per chain. Parsing the output reproduces the
/// model field-by-field for any model that itself came from a parse
/// (coordinates are emitted at the same three-decimal precision the reader
/// consumes).
pub fn write_pdb<W: Write>(w: &mut W, s: &Structure) -> Result<(), ParseError> {
    let date_txt = match s.deposition_date {
        Some(d) => format_header_date(d)?,
        None => " ".repeat(9),
    };
    writeln!(
        w,
        "HEADER    {:<40}{}   {}",
        "PROTEIN COMPLEX",
        date_txt,
        s.pdb_code.to_ascii_uppercase()
    )?;
    if let Some(r) = s.resolution {
        writeln!(w, "REMARK   2 RESOLUTION. {:7.2} ANGSTROMS.", r)?;
    }
    let mut serial = 0usize;
    for chain in &s.chains {
        if chain.id.len() != 1 {
            return Err(ParseError::UnwritableChainId(chain.id.clone()));
        }
        for res in &chain.residues {
            for atom in &res.atoms {
                serial += 1;
                let name = if atom.name.len() >= 4 {
                    atom.name.clone()
                } else {
                    format!(" {:<3}", atom.name)
                };
                writeln!(
                    w,
                    "ATOM  {:>5} {:<4} {:>3} {}{:>4}{}   {:>8.3}{:>8.3}{:>8.3}{:>6.2}{:>6.2}          {:>2}",
                    serial % 100_000,
                    name,
                    res.raw_name,
                    chain.id,
                    res.seq_num,
                    res.insertion_code.unwrap_or(' '),
                    atom.coords.x,
                    atom.coords.y,
                    atom.coords.z,
                    1.00,
                    0.00,
                    atom.element
                )?;
            }
        }
        writeln!(w, "TER")?;
    }
    writeln!(w, "END")?;
    Ok(())
}
