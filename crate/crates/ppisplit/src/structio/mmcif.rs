//! Minimal mmCIF reader: the `atom_site` loop plus entry id and deposition
//! date. Everything else in the file is skipped.

use std::io::BufRead;

use chrono::NaiveDate;

use super::{ParseError, Structure, StructureBuilder};
use crate::geometry::Vec3;

const DATE_TAG: &str = "_pdbx_database_status.recvd_initial_deposition_date";
const ENTRY_TAG: &str = "_entry.id";

fn is_null(tok: &str) -> bool {
    tok == "." || tok == "?"
}

fn unquote(tok: &str) -> &str {
    let b = tok.as_bytes();
    if b.len() >= 2 && (b[0] == b'\'' || b[0] == b'"') && b[b.len() - 1] == b[0] {
        &tok[1..tok.len() - 1]
    } else {
        tok
    }
}

/// Splits one line into CIF tokens (quoted strings stay single tokens).
fn tokenize(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut chars = line.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if c.is_whitespace() {
            continue;
        }
        if c == '#' {
            break;
        }
        if c == '\'' || c == '"' {
            let quote = c;
            let mut end = line.len();
            for (j, cj) in line[i + 1..].char_indices() {
                // A closing quote must be followed by whitespace or EOL.
                if cj == quote {
                    let abs = i + 1 + j;
                    let next = line[abs + quote.len_utf8()..].chars().next();
                    if next.map_or(true, |n| n.is_whitespace()) {
                        end = abs + quote.len_utf8();
                        break;
                    }
                }
            }
            out.push(line[i..end].to_string());
            while let Some(&(j, _)) = chars.peek() {
                if j < end {
                    chars.next();
                } else {
                    break;
                }
            }
        } else {
            let mut end = line.len();
            for (j, cj) in line[i..].char_indices() {
                if cj.is_whitespace() {
                    end = i + j;
                    break;
                }
            }
            out.push(line[i..end].to_string());
            while let Some(&(j, _)) = chars.peek() {
                if j < end {
                    chars.next();
                } else {
                    break;
                }
            }
        }
    }
    out
}

#[derive(Default)]
struct AtomSiteCols {
    group: Option<usize>,
    atom_id: Option<usize>,
    comp_id: Option<usize>,
    asym_id: Option<usize>,
    seq_id: Option<usize>,
    ins_code: Option<usize>,
    x: Option<usize>,
    y: Option<usize>,
    z: Option<usize>,
    element: Option<usize>,
    model: Option<usize>,
}

impl AtomSiteCols {
    /// auth_* names win over label_* so numbering matches the PDB rendering.
    fn assign(&mut self, tag: &str, idx: usize) {
        match tag {
            "group_PDB" => self.group = Some(idx),
            "auth_atom_id" => self.atom_id = Some(idx),
            "label_atom_id" => self.atom_id = self.atom_id.or(Some(idx)),
            "auth_comp_id" => self.comp_id = Some(idx),
            "label_comp_id" => self.comp_id = self.comp_id.or(Some(idx)),
            "auth_asym_id" => self.asym_id = Some(idx),
            "label_asym_id" => self.asym_id = self.asym_id.or(Some(idx)),
            "auth_seq_id" => self.seq_id = Some(idx),
            "label_seq_id" => self.seq_id = self.seq_id.or(Some(idx)),
            "pdbx_PDB_ins_code" => self.ins_code = Some(idx),
            "Cartn_x" => self.x = Some(idx),
            "Cartn_y" => self.y = Some(idx),
            "Cartn_z" => self.z = Some(idx),
            "type_symbol" => self.element = Some(idx),
            "pdbx_PDB_model_num" => self.model = Some(idx),
            _ => {}
        }
    }
}

enum Mode {
    Plain,
    LoopHeader { tags: Vec<String> },
    LoopData { tags: Vec<String>, row: Vec<String> },
}

/// Parses mmCIF text. Only the first data block is read; within it, the
/// first model is kept and the shared polypeptide retention rules apply.
pub fn parse_mmcif<R: BufRead>(
    reader: R,
    code_hint: Option<&str>,
) -> Result<Structure, ParseError> {
    let mut builder = StructureBuilder::new();
    let mut entry_id: Option<String> = None;
    let mut date: Option<NaiveDate> = None;
    let mut keep_model: Option<String> = None;
    let mut pending_tag: Option<String> = None;
    let mut mode = Mode::Plain;
    let mut in_semicolon_text = false;
    let mut seen_data_block = false;
    let mut done = false;

    for (idx, line) in reader.lines().enumerate() {
        if done {
            break;
        }
        let lineno = idx + 1;
        let line = line?;

        if in_semicolon_text {
            if line.starts_with(';') {
                in_semicolon_text = false;
                pending_tag = None;
            }
            continue;
        }
        if line.starts_with(';') {
            // Multi-line text value; nothing we keep arrives this way.
            in_semicolon_text = true;
            continue;
        }

        let tokens = tokenize(&line);
        if tokens.is_empty() {
            continue;
        }

        let mut i = 0;
        while i < tokens.len() {
            let tok = &tokens[i];
            let lower = tok.to_ascii_lowercase();

            if lower.starts_with("data_") {
                if seen_data_block {
                    done = true;
                    break;
                }
                seen_data_block = true;
                let name = &tok[5..];
                if !name.is_empty() {
                    entry_id.get_or_insert_with(|| name.to_string());
                }
                mode = Mode::Plain;
                i += 1;
                continue;
            }
            if lower == "loop_" {
                mode = Mode::LoopHeader { tags: Vec::new() };
                i += 1;
                continue;
            }

            match &mut mode {
                Mode::LoopHeader { tags } => {
                    if tok.starts_with('_') {
                        tags.push(tok.clone());
                        i += 1;
                    } else {
                        let tags = std::mem::take(tags);
                        mode = Mode::LoopData { tags, row: Vec::new() };
                    }
                }
                Mode::LoopData { tags, row } => {
                    if tok.starts_with('_') {
                        if !row.is_empty() {
                            return Err(ParseError::Malformed {
                                line: lineno,
                                reason: "loop row truncated".to_string(),
                            });
                        }
                        mode = Mode::Plain;
                        continue;
                    }
                    row.push(tok.clone());
                    if row.len() == tags.len() {
                        let full = std::mem::take(row);
                        process_loop_row(
                            tags,
                            &full,
                            &mut builder,
                            &mut keep_model,
                            lineno,
                        )?;
                    }
                    i += 1;
                }
                Mode::Plain => {
                    if tok.starts_with('_') {
                        if let Some(tag) = pending_tag.take() {
                            // Previous tag had no value on its line; CIF would
                            // put it on this line, but another tag arrived.
                            let _ = tag;
                        }
                        if i + 1 < tokens.len() {
                            let val = unquote(&tokens[i + 1]).to_string();
                            record_plain(tok, &val, &mut entry_id, &mut date);
                            i += 2;
                        } else {
                            pending_tag = Some(tok.clone());
                            i += 1;
                        }
                    } else if let Some(tag) = pending_tag.take() {
                        let val = unquote(tok).to_string();
                        record_plain(&tag, &val, &mut entry_id, &mut date);
                        i += 1;
                    } else {
                        i += 1;
                    }
                }
            }
        }
    }

    builder.finish(entry_id, code_hint, date, None)
}

fn record_plain(tag: &str, value: &str, entry_id: &mut Option<String>, date: &mut Option<NaiveDate>) {
    if is_null(value) {
        return;
    }
    if tag == ENTRY_TAG {
        *entry_id = Some(value.to_string());
    } else if tag == DATE_TAG {
        if let Ok(d) = NaiveDate::parse_from_str(value, "%Y-%m-%d") {
            *date = Some(d);
        }
    }
}

fn process_loop_row(
    tags: &[String],
    row: &[String],
    builder: &mut StructureBuilder,
    keep_model: &mut Option<String>,
    lineno: usize,
) -> Result<(), ParseError> {
    if !tags.first().map_or(false, |t| t.starts_with("_atom_site.")) {
        return Ok(());
    }
    let mut cols = AtomSiteCols::default();
    for (idx, tag) in tags.iter().enumerate() {
        if let Some(name) = tag.strip_prefix("_atom_site.") {
            cols.assign(name, idx);
        }
    }
    let get = |c: Option<usize>| -> Option<&str> {
        c.and_then(|i| row.get(i)).map(|s| unquote(s)).filter(|s| !is_null(s))
    };

    if let Some(model) = get(cols.model) {
        match keep_model {
            None => *keep_model = Some(model.to_string()),
            Some(first) if first.as_str() != model => return Ok(()),
            _ => {}
        }
    }

    let need = |v: Option<&str>, what: &str| -> Result<String, ParseError> {
        v.map(str::to_string).ok_or_else(|| ParseError::Malformed {
            line: lineno,
            reason: format!("atom_site row missing {what}"),
        })
    };
    let group = get(cols.group).unwrap_or("ATOM");
    let atom_name = need(get(cols.atom_id), "atom id")?;
    let resname = need(get(cols.comp_id), "comp id")?;
    let chain_id = need(get(cols.asym_id), "asym id")?;
    let seq_num: i32 = need(get(cols.seq_id), "seq id")?
        .parse()
        .map_err(|_| ParseError::Malformed { line: lineno, reason: "bad seq id".into() })?;
    let icode = get(cols.ins_code).and_then(|s| s.chars().next());
    let coord = |c: Option<usize>| -> Result<f64, ParseError> {
        need(get(c), "coordinate")?
            .parse()
            .map_err(|_| ParseError::Malformed { line: lineno, reason: "bad coordinate".into() })
    };
    let coords = Vec3::new(coord(cols.x)?, coord(cols.y)?, coord(cols.z)?);
    let element = get(cols.element).unwrap_or("").to_string();

    builder.add_atom(
        group == "HETATM",
        &chain_id,
        seq_num,
        icode,
        &resname,
        &atom_name,
        &element,
        coords,
    );
    Ok(())
}
