//! CPLEX-LP text output for a [`LinearModel`]. The emitted bytes are a pure
//! function of the model: fixed variable and row order, integer coefficients,
//! fixed wrapping. Suitable for golden tests and for feeding any LP-format
//! solver.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use super::{LinearExpr, LinearModel, RowSense, VarKind};

#[derive(Debug, Error)]
pub enum LpWriteError {
    #[error("cannot write LP file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

const WRAP_COLUMN: usize = 72;

/// Appends `token` to `line`, flushing to `out` at the wrap column.
/// Continuation lines start with a space, as LP format requires.
fn push_token(out: &mut String, line: &mut String, token: &str) {
    if !line.is_empty() && line.len() + token.len() + 1 > WRAP_COLUMN {
        out.push_str(line);
        out.push('\n');
        line.clear();
        line.push(' ');
    }
    if !line.is_empty() && !line.ends_with(' ') {
        line.push(' ');
    }
    line.push_str(token);
}

fn flush(out: &mut String, line: &mut String) {
    if !line.is_empty() {
        out.push_str(line);
        out.push('\n');
        line.clear();
    }
}

/// Writes one linear expression. A row with no terms gets a zero-coefficient
/// anchor on the first model variable so the text still parses.
fn write_expr(out: &mut String, line: &mut String, model: &LinearModel, expr: &LinearExpr) {
    if expr.terms.is_empty() {
        if let Some(first) = model.variables.first() {
            push_token(out, line, &format!("0 {}", first.name));
        }
        return;
    }
    for (i, &(var, coefficient)) in expr.terms.iter().enumerate() {
        let name = &model.variables[var].name;
        let magnitude = coefficient.unsigned_abs();
        let token = if i == 0 {
            match (coefficient < 0, magnitude == 1) {
                (false, true) => name.clone(),
                (false, false) => format!("{magnitude} {name}"),
                (true, true) => format!("- {name}"),
                (true, false) => format!("- {magnitude} {name}"),
            }
        } else {
            let sign = if coefficient < 0 { '-' } else { '+' };
            if magnitude == 1 {
                format!("{sign} {name}")
            } else {
                format!("{sign} {magnitude} {name}")
            }
        };
        push_token(out, line, &token);
    }
}

/// Renders the model as CPLEX-LP text. All four section headers are always
/// present; two calls on the same model produce byte-identical output.
pub fn write_lp(model: &LinearModel) -> String {
    let mut out = String::new();
    let mut line = String::new();

    out.push_str("Minimize\n");
    line.push_str(" obj:");
    write_expr(&mut out, &mut line, model, &model.objective);
    flush(&mut out, &mut line);

    out.push_str("Subject To\n");
    for row in &model.rows {
        write!(line, " {}:", row.name).unwrap();
        write_expr(&mut out, &mut line, model, &row.expr);
        let sense = match row.sense {
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
            RowSense::Eq => "=",
        };
        push_token(&mut out, &mut line, &format!("{} {}", sense, row.rhs));
        flush(&mut out, &mut line);
    }

    out.push_str("Bounds\n");
    for var in &model.variables {
        if let VarKind::Continuous { lower, upper } = var.kind {
            out.push_str(&format!(" {} <= {} <= {}\n", lower, var.name, upper));
        }
    }

    out.push_str("Binaries\n");
    for var in &model.variables {
        if var.kind == VarKind::Binary {
            push_token(&mut out, &mut line, &var.name);
        }
    }
    flush(&mut out, &mut line);

    out.push_str("End\n");
    out
}

/// Writes the LP text to a file, reporting the path on failure.
pub fn write_lp_file(model: &LinearModel, path: &Path) -> Result<(), LpWriteError> {
    std::fs::write(path, write_lp(model)).map_err(|source| LpWriteError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::super::linearize;
    use super::*;
    use crate::instance::{
        Instance, Km, MaintenancePacket, PacketId, Route, RouteId, Train, TrainId,
    };

    fn tiny_instance() -> Instance {
        Instance {
            horizon_days: 2,
            depot_capacity: 1,
            mileage_range_enabled: false,
            multi_day_routes: false,
            trains: vec![Train {
                id: TrainId(1),
                begin_day: 1,
                end_day: 2,
                maintenance_cycle_km: 1_000,
                initial_mileage_km: 900,
                next_packet: Some(PacketId(1)),
                min_mileage_km: None,
                max_mileage_km: None,
            }],
            routes: vec![Route { id: RouteId(1), mileage_km: 200, successor: None, day_offset: 0 }],
            packets: vec![MaintenancePacket { id: PacketId(1), duration_days: 1 }],
            eligibility: vec![vec![true]],
        }
    }

    /// Minimal independent LP reader: section splitting plus name counting.
    /// Kept deliberately separate from the writer's internals.
    pub(crate) fn parse_lp_summary(text: &str) -> (usize, std::collections::BTreeSet<String>) {
        let mut rows = 0;
        let mut vars = std::collections::BTreeSet::new();
        let mut section = "";
        for raw in text.lines() {
            let trimmed = raw.trim();
            match trimmed {
                "Minimize" | "Subject To" | "Bounds" | "Binaries" | "End" => {
                    section = trimmed;
                    continue;
                }
                _ => {}
            }
            for token in trimmed.split_whitespace() {
                if let Some(name) = token.strip_suffix(':') {
                    if section == "Subject To" && !name.is_empty() {
                        rows += 1;
                    }
                    continue;
                }
                if token.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                    && token.contains('_')
                {
                    vars.insert(token.to_string());
                }
            }
        }
        (rows, vars)
    }

    #[test]
    fn all_section_headers_always_present() {
        let empty = Instance {
            horizon_days: 1,
            depot_capacity: 0,
            mileage_range_enabled: false,
            multi_day_routes: false,
            trains: vec![],
            routes: vec![],
            packets: vec![],
            eligibility: vec![],
        };
        let text = write_lp(&linearize(&empty).unwrap());
        for header in ["Minimize", "Subject To", "Bounds", "Binaries", "End"] {
            assert!(text.contains(header), "missing {header} in:\n{text}");
        }
    }

    #[test]
    fn output_is_byte_deterministic() {
        let model = linearize(&tiny_instance()).unwrap();
        assert_eq!(write_lp(&model), write_lp(&model));
    }

    #[test]
    fn reparse_recovers_rows_and_variables() {
        let model = linearize(&tiny_instance()).unwrap();
        let text = write_lp(&model);
        let (rows, vars) = parse_lp_summary(&text);
        assert_eq!(rows, model.rows.len());
        let model_vars: std::collections::BTreeSet<String> =
            model.variables.iter().map(|v| v.name.clone()).collect();
        assert_eq!(vars, model_vars);
    }

    #[test]
    fn coefficients_print_as_integers() {
        let model = linearize(&tiny_instance()).unwrap();
        let text = write_lp(&model);
        assert!(!text.contains('.'), "LP text must stay integer:\n{text}");
        assert!(text.contains("C5_m1_t1: l_m1_t1 <= 1000"));
    }

    #[test]
    fn long_expressions_wrap_with_continuation_lines() {
        let trains: Vec<Train> = (1..=6)
            .map(|i| Train {
                id: TrainId(i),
                begin_day: 1,
                end_day: 3,
                maintenance_cycle_km: 100_000 as Km,
                initial_mileage_km: 0,
                next_packet: None,
                min_mileage_km: None,
                max_mileage_km: None,
            })
            .collect();
        let inst = Instance {
            horizon_days: 3,
            depot_capacity: 1,
            mileage_range_enabled: false,
            multi_day_routes: false,
            eligibility: vec![vec![true]; trains.len()],
            trains,
            routes: vec![Route { id: RouteId(1), mileage_km: 10, successor: None, day_offset: 0 }],
            packets: vec![],
        };
        let text = write_lp(&linearize(&inst).unwrap());
        assert!(text.lines().all(|l| l.len() <= WRAP_COLUMN + 24));
        let (rows, _) = parse_lp_summary(&text);
        assert_eq!(rows, linearize(&inst).unwrap().rows.len());
    }
}
