//! MATPOWER case files (`mpc.baseMVA`, `mpc.bus`, `mpc.gen`, `mpc.branch`).
//!
//! Only the documented leading columns are read; any further columns and any
//! other `mpc.*` fields are skipped. Quantities are converted to per-unit on
//! the system base and angles to radians.

use std::fmt::Write as _;

use super::case::{Branch, Bus, BusKind, NetworkCase};
use super::NetworkError;

const BUS_COLUMNS: usize = 13;
const GEN_COLUMNS: usize = 8;
const BRANCH_COLUMNS: usize = 11;

#[derive(Debug, Clone, Copy)]
struct Cell {
    value: f64,
    line: usize,
    column: usize,
}

#[derive(Debug, Default)]
struct Matrix {
    rows: Vec<(usize, Vec<Cell>)>,
}

#[derive(Debug, Default)]
struct RawCase {
    name: Option<String>,
    base_mva: Option<f64>,
    bus: Option<Matrix>,
    gen: Option<Matrix>,
    branch: Option<Matrix>,
}

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> NetworkError {
    NetworkError::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Removes a trailing `%` comment, ignoring `%` inside single quotes.
fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '\'' => quoted = !quoted,
            '%' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

enum State {
    Idle,
    Matrix { field: String, matrix: Matrix, row: Vec<Cell>, row_line: usize },
    Skipping { closer: char },
}

fn finish_row(matrix: &mut Matrix, row: &mut Vec<Cell>, row_line: usize) {
    if !row.is_empty() {
        matrix.rows.push((row_line, std::mem::take(row)));
    }
}

fn tokenize_into(
    text: &str,
    line_no: usize,
    offset: usize,
    matrix: &mut Matrix,
    row: &mut Vec<Cell>,
    row_line: &mut usize,
) -> Result<bool, NetworkError> {
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | ',' | '\r' => i += 1,
            ';' => {
                finish_row(matrix, row, *row_line);
                i += 1;
            }
            ']' => {
                finish_row(matrix, row, *row_line);
                return Ok(true);
            }
            _ => {
                let start = i;
                while i < bytes.len() && !matches!(bytes[i] as char, ' ' | '\t' | ',' | ';' | ']' | '\r') {
                    i += 1;
                }
                let token = &text[start..i];
                let value: f64 = token.parse().map_err(|_| {
                    parse_error(line_no, offset + start + 1, format!("cannot parse `{token}` as a number"))
                })?;
                if row.is_empty() {
                    *row_line = line_no;
                }
                row.push(Cell {
                    value,
                    line: line_no,
                    column: offset + start + 1,
                });
            }
        }
    }
    // A newline inside brackets also terminates a row.
    finish_row(matrix, row, *row_line);
    Ok(false)
}

fn scan(text: &str) -> Result<RawCase, NetworkError> {
    let mut raw = RawCase::default();
    let mut state = State::Idle;
    for (idx, full_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(full_line);
        state = match state {
            State::Skipping { closer } => {
                if line.contains(closer) {
                    State::Idle
                } else {
                    State::Skipping { closer }
                }
            }
            State::Matrix {
                field,
                mut matrix,
                mut row,
                mut row_line,
            } => {
                if tokenize_into(line, line_no, 0, &mut matrix, &mut row, &mut row_line)? {
                    store(&mut raw, &field, matrix);
                    State::Idle
                } else {
                    State::Matrix { field, matrix, row, row_line }
                }
            }
            State::Idle => {
                let trimmed = line.trim_start();
                let lead = line.len() - trimmed.len();
                if let Some(rest) = trimmed.strip_prefix("function") {
                    if let Some((_, name)) = rest.split_once('=') {
                        let name = name.trim().trim_end_matches(';').trim();
                        if !name.is_empty() {
                            raw.name = Some(name.to_string());
                        }
                    }
                    State::Idle
                } else if let Some(rest) = trimmed.strip_prefix("mpc.") {
                    let Some((field, value)) = rest.split_once('=') else {
                        return Err(parse_error(line_no, lead + 1, "expected `=` after field name"));
                    };
                    let field = field.trim().to_string();
                    let value_offset = lead + 4 + rest.find('=').unwrap() + 1;
                    let value_trim = value.trim_start();
                    let value_offset = value_offset + (value.len() - value_trim.len());
                    if let Some(body) = value_trim.strip_prefix('[') {
                        let mut matrix = Matrix::default();
                        let mut row = Vec::new();
                        let mut row_line = line_no;
                        if tokenize_into(body, line_no, value_offset + 1, &mut matrix, &mut row, &mut row_line)? {
                            store(&mut raw, &field, matrix);
                            State::Idle
                        } else {
                            State::Matrix { field, matrix, row, row_line }
                        }
                    } else if value_trim.starts_with('{') {
                        if value_trim.contains('}') {
                            State::Idle
                        } else {
                            State::Skipping { closer: '}' }
                        }
                    } else {
                        if field == "baseMVA" {
                            let token = value_trim.trim_end().trim_end_matches(';').trim();
                            let v: f64 = token.parse().map_err(|_| {
                                parse_error(line_no, value_offset + 1, format!("cannot parse `{token}` as a number"))
                            })?;
                            raw.base_mva = Some(v);
                        }
                        State::Idle
                    }
                } else {
                    State::Idle
                }
            }
        };
    }
    if let State::Matrix { field, .. } = state {
        return Err(parse_error(text.lines().count(), 1, format!("matrix `mpc.{field}` is not closed")));
    }
    Ok(raw)
}

fn store(raw: &mut RawCase, field: &str, matrix: Matrix) {
    match field {
        "bus" => raw.bus = Some(matrix),
        "gen" => raw.gen = Some(matrix),
        "branch" => raw.branch = Some(matrix),
        _ => {}
    }
}

fn check_width(row: &[Cell], line: usize, needed: usize, what: &str) -> Result<(), NetworkError> {
    if row.len() < needed {
        let column = row.last().map(|c| c.column).unwrap_or(1);
        return Err(parse_error(
            line,
            column,
            format!("{what} row has {} columns, expected at least {needed}", row.len()),
        ));
    }
    Ok(())
}

fn integer(cell: Cell, what: &str) -> Result<i64, NetworkError> {
    if cell.value.fract() != 0.0 || !cell.value.is_finite() {
        return Err(parse_error(cell.line, cell.column, format!("{what} must be an integer")));
    }
    Ok(cell.value as i64)
}

fn bus_number(cell: Cell) -> Result<u32, NetworkError> {
    let v = integer(cell, "bus number")?;
    u32::try_from(v).map_err(|_| parse_error(cell.line, cell.column, format!("bus number {v} out of range")))
}

/// Parses MATPOWER case text into a per-unit [`NetworkCase`].
pub fn parse_case(text: &str) -> Result<NetworkCase, NetworkError> {
    let raw = scan(text)?;
    let base_mva = raw
        .base_mva
        .ok_or_else(|| parse_error(1, 1, "missing `mpc.baseMVA`"))?;
    if !(base_mva > 0.0) {
        return Err(parse_error(1, 1, "`mpc.baseMVA` must be positive"));
    }
    let bus_rows = raw.bus.ok_or_else(|| parse_error(1, 1, "missing `mpc.bus`"))?;
    let gen_rows = raw.gen.unwrap_or_default();
    let branch_rows = raw.branch.ok_or_else(|| parse_error(1, 1, "missing `mpc.branch`"))?;

    let mut buses = Vec::with_capacity(bus_rows.rows.len());
    for (line, row) in &bus_rows.rows {
        check_width(row, *line, BUS_COLUMNS, "bus")?;
        let number = bus_number(row[0])?;
        if buses.iter().any(|b: &Bus| b.number == number) {
            return Err(parse_error(*line, row[0].column, format!("duplicate bus number {number}")));
        }
        let kind = match integer(row[1], "bus type")? {
            1 => BusKind::Pq,
            2 => BusKind::Pv,
            3 => BusKind::Slack,
            other => {
                return Err(parse_error(
                    *line,
                    row[1].column,
                    format!("unsupported bus type {other} at bus {number}"),
                ))
            }
        };
        buses.push(Bus {
            number,
            kind,
            pd: row[2].value / base_mva,
            qd: row[3].value / base_mva,
            pg: 0.0,
            qg: 0.0,
            gs: row[4].value / base_mva,
            bs: row[5].value / base_mva,
            area: integer(row[6], "area")? as u32,
            vm_init: row[7].value,
            va_init: row[8].value.to_radians(),
            vm_setpoint: None,
            base_kv: row[9].value,
            zone: integer(row[10], "zone")? as u32,
            vmax: row[11].value,
            vmin: row[12].value,
        });
    }

    let positions: std::collections::HashMap<i64, usize> =
        buses.iter().enumerate().map(|(i, b)| (i64::from(b.number), i)).collect();
    let lookup = |cell: Cell| -> Result<usize, NetworkError> {
        let number = integer(cell, "bus number")?;
        positions
            .get(&number)
            .copied()
            .ok_or(NetworkError::UnknownBus {
                bus: number,
                line: cell.line,
            })
    };

    let mut setpoint_seen = vec![false; buses.len()];
    let mut gen_updates = Vec::new();
    for (line, row) in &gen_rows.rows {
        check_width(row, *line, GEN_COLUMNS, "gen")?;
        let at = lookup(row[0])?;
        if row[7].value > 0.0 {
            gen_updates.push((at, row[1].value / base_mva, row[2].value / base_mva, row[5].value));
        }
    }
    for (at, pg, qg, vg) in gen_updates {
        let bus = &mut buses[at];
        bus.pg += pg;
        bus.qg += qg;
        if !setpoint_seen[at] {
            setpoint_seen[at] = true;
            if bus.kind != BusKind::Pq {
                bus.vm_setpoint = Some(vg);
            }
        }
    }
    for bus in buses.iter_mut() {
        if bus.kind != BusKind::Pq && bus.vm_setpoint.is_none() {
            bus.vm_setpoint = Some(bus.vm_init);
        }
    }

    let mut branches = Vec::with_capacity(branch_rows.rows.len());
    for (line, row) in &branch_rows.rows {
        check_width(row, *line, BRANCH_COLUMNS, "branch")?;
        let from = lookup(row[0])?;
        let to = lookup(row[1])?;
        let ratio = row[8].value;
        branches.push(Branch {
            from,
            to,
            r: row[2].value,
            x: row[3].value,
            b: row[4].value,
            rate_a: row[5].value,
            tap: if ratio == 0.0 { 1.0 } else { ratio },
            shift: row[9].value.to_radians(),
            in_service: row[10].value > 0.0,
        });
    }

    let case = NetworkCase {
        name: raw.name.unwrap_or_else(|| "case".to_string()),
        base_mva,
        buses,
        branches,
    };
    if case.slack_buses().is_empty() {
        return Err(NetworkError::NoSlack);
    }
    Ok(case)
}

/// Finds the decimal value whose forward conversion reproduces `target`
/// exactly, starting from `guess`. Falls back to `guess`.
fn invert(target: f64, guess: f64, forward: impl Fn(f64) -> f64) -> f64 {
    if forward(guess) == target || !guess.is_finite() {
        return guess;
    }
    let mut up = guess;
    let mut down = guess;
    for _ in 0..64 {
        up = up.next_up();
        down = down.next_down();
        if forward(up) == target {
            return up;
        }
        if forward(down) == target {
            return down;
        }
    }
    guess
}

/// Serializes a case back to MATPOWER text. Generators are written one per
/// bus, aggregated, so `parse_case(&write_case(c))` reproduces `c`.
pub fn write_case(case: &NetworkCase) -> String {
    let base = case.base_mva;
    let mw = |pu: f64| invert(pu, pu * base, |v| v / base);
    let deg = |rad: f64| invert(rad, rad.to_degrees(), f64::to_radians);
    let mut out = String::new();
    let _ = writeln!(out, "function mpc = {}", case.name);
    let _ = writeln!(out, "mpc.version = '2';");
    let _ = writeln!(out, "mpc.baseMVA = {base};");
    let _ = writeln!(out, "\n%% bus data");
    let _ = writeln!(out, "%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin");
    let _ = writeln!(out, "mpc.bus = [");
    for b in &case.buses {
        let _ = writeln!(
            out,
            "\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{};",
            b.number,
            b.kind.matpower_code(),
            mw(b.pd),
            mw(b.qd),
            mw(b.gs),
            mw(b.bs),
            b.area,
            b.vm_init,
            deg(b.va_init),
            b.base_kv,
            b.zone,
            b.vmax,
            b.vmin
        );
    }
    let _ = writeln!(out, "];\n\n%% generator data");
    let _ = writeln!(out, "%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin");
    let _ = writeln!(out, "mpc.gen = [");
    for b in &case.buses {
        if b.vm_setpoint.is_none() && b.pg == 0.0 && b.qg == 0.0 {
            continue;
        }
        let _ = writeln!(
            out,
            "\t{}\t{}\t{}\t9999\t-9999\t{}\t{}\t1\t9999\t0;",
            b.number,
            mw(b.pg),
            mw(b.qg),
            b.vm_setpoint.unwrap_or(b.vm_init),
            base
        );
    }
    let _ = writeln!(out, "];\n\n%% branch data");
    let _ = writeln!(out, "%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax");
    let _ = writeln!(out, "mpc.branch = [");
    for br in &case.branches {
        let _ = writeln!(
            out,
            "\t{}\t{}\t{}\t{}\t{}\t{}\t0\t0\t{}\t{}\t{}\t-360\t360;",
            case.buses[br.from].number,
            case.buses[br.to].number,
            br.r,
            br.x,
            br.b,
            br.rate_a,
            br.tap,
            deg(br.shift),
            u8::from(br.in_service)
        );
    }
    let _ = writeln!(out, "];");
    out
}
