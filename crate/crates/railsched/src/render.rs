//! Timetable views of a feasible schedule: one row per train, one column per
//! day. Cells show the route, `SPARE`, or the packet occupying the train for
//! each day of a maintenance visit. Infeasible schedules are refused with
//! their violation report attached.

use std::fmt::Write as _;

use thiserror::Error;

use crate::instance::{Day, Defect, Instance, RouteId, Train};
use crate::schedule::Schedule;
use crate::semantics::{check_feasibility, FeasibilityReport, SemanticsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderStyle {
    Text,
    Svg,
}

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("instance fails validation with {} defect(s)", .0.len())]
    InvalidInstance(Vec<Defect>),
    #[error("schedule is infeasible and will not be rendered:\n{0}")]
    Infeasible(FeasibilityReport),
}

/// Renders a feasible schedule. Output is a pure function of the inputs:
/// the same (instance, schedule, style) always yields identical bytes.
pub fn render_schedule(
    instance: &Instance,
    schedule: &Schedule,
    style: RenderStyle,
) -> Result<String, RenderError> {
    let report = check_feasibility(schedule, instance).map_err(|e| match e {
        SemanticsError::InvalidInstance(d) => RenderError::InvalidInstance(d),
        other => unreachable!("checker only fails on invalid instances: {other}"),
    })?;
    if !report.is_feasible() {
        return Err(RenderError::Infeasible(report));
    }
    Ok(match style {
        RenderStyle::Text => render_text(instance, schedule),
        RenderStyle::Svg => render_svg(instance, schedule),
    })
}

/// Cell content for one (train, day): blank outside the window.
fn cell(instance: &Instance, schedule: &Schedule, train: &Train, day: Day) -> String {
    if !train.window_contains(day) {
        return String::new();
    }
    for start in schedule.starts_of(train.id) {
        if let Some(packet) = instance.packet(start.packet) {
            if start.day <= day && day < start.day + packet.duration_days {
                return packet.id.to_string();
            }
        }
    }
    match schedule.assignment(train.id, day) {
        Some(Some(route)) if route == RouteId::SPARE => "SPARE".into(),
        Some(Some(route)) => route.to_string(),
        _ => String::new(),
    }
}

fn render_text(instance: &Instance, schedule: &Schedule) -> String {
    let days: Vec<Day> = (1..=instance.horizon_days).collect();
    let mut columns: Vec<Vec<String>> = Vec::new();

    let mut label_column = vec!["train".to_string()];
    label_column.extend(instance.trains.iter().map(|t| t.id.to_string()));
    columns.push(label_column);
    for &day in &days {
        let mut column = vec![format!("day {day}")];
        column.extend(instance.trains.iter().map(|t| cell(instance, schedule, t, day)));
        columns.push(column);
    }

    let widths: Vec<usize> =
        columns.iter().map(|c| c.iter().map(String::len).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in 0..=instance.trains.len() {
        let line: Vec<String> = columns
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{:<w$}", c[row]))
            .collect();
        out.push_str(line.join(" | ").trim_end());
        out.push('\n');
        if row == 0 {
            let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
            out.push_str(&rule.join("-+-"));
            out.push('\n');
        }
    }
    out
}

const CELL_W: u32 = 64;
const CELL_H: u32 = 26;
const LABEL_W: u32 = 56;
const MARGIN: u32 = 8;

fn render_svg(instance: &Instance, schedule: &Schedule) -> String {
    let days = instance.horizon_days;
    let width = MARGIN * 2 + LABEL_W + days * CELL_W;
    let height = MARGIN * 2 + CELL_H * (instance.trains.len() as u32 + 1);
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="monospace" font-size="12">"#
    )
    .unwrap();

    let text = |out: &mut String, x: u32, y: u32, s: &str| {
        writeln!(
            out,
            r#"  <text x="{x}" y="{y}" text-anchor="middle" dominant-baseline="middle">{s}</text>"#
        )
        .unwrap();
    };

    for day in 1..=days {
        let x = MARGIN + LABEL_W + (day - 1) * CELL_W + CELL_W / 2;
        text(&mut out, x, MARGIN + CELL_H / 2, &format!("day {day}"));
    }
    for (row, train) in instance.trains.iter().enumerate() {
        let y = MARGIN + CELL_H * (row as u32 + 1);
        text(&mut out, MARGIN + LABEL_W / 2, y + CELL_H / 2, &train.id.to_string());
        for day in 1..=days {
            if !train.window_contains(day) {
                continue;
            }
            let content = cell(instance, schedule, train, day);
            let fill = if content == "SPARE" {
                "#f2f2f2"
            } else if content.starts_with('P') {
                "#ffd9a0"
            } else {
                "#ffffff"
            };
            let x = MARGIN + LABEL_W + (day - 1) * CELL_W;
            writeln!(
                out,
                r##"  <rect x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="{fill}" stroke="#888888"/>"##
            )
            .unwrap();
            text(&mut out, x + CELL_W / 2, y + CELL_H / 2, &content);
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Km, MaintenancePacket, PacketId, TrainId};
    use crate::schedule::Schedule;

    fn spare_only_instance() -> Instance {
        Instance {
            horizon_days: 3,
            depot_capacity: 0,
            mileage_range_enabled: false,
            multi_day_routes: false,
            trains: vec![crate::instance::Train {
                id: TrainId(7),
                begin_day: 1,
                end_day: 3,
                maintenance_cycle_km: 1_000 as Km,
                initial_mileage_km: 0,
                next_packet: None,
                min_mileage_km: None,
                max_mileage_km: None,
            }],
            routes: vec![],
            packets: vec![MaintenancePacket { id: PacketId(1), duration_days: 1 }],
            eligibility: vec![vec![]],
        }
    }

    #[test]
    fn spare_only_train_renders_a_row_of_spare() {
        let inst = spare_only_instance();
        let sched = Schedule::all_spare(&inst);
        let text = render_schedule(&inst, &sched, RenderStyle::Text).unwrap();
        let row = text.lines().nth(2).unwrap();
        assert_eq!(row, "T7    | SPARE | SPARE | SPARE");
    }

    #[test]
    fn rendering_is_deterministic() {
        let inst = spare_only_instance();
        let sched = Schedule::all_spare(&inst);
        for style in [RenderStyle::Text, RenderStyle::Svg] {
            let a = render_schedule(&inst, &sched, style).unwrap();
            let b = render_schedule(&inst, &sched, style).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn infeasible_schedules_are_refused_with_the_report() {
        let inst = spare_only_instance();
        let mut sched = Schedule::all_spare(&inst);
        sched.set_assignment(TrainId(7), 2, None);
        match render_schedule(&inst, &sched, RenderStyle::Text) {
            Err(RenderError::Infeasible(report)) => assert!(!report.is_feasible()),
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn svg_carries_the_same_cells() {
        let inst = spare_only_instance();
        let sched = Schedule::all_spare(&inst);
        let svg = render_schedule(&inst, &sched, RenderStyle::Svg).unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches(">SPARE</text>").count(), 3);
        assert_eq!(svg.matches("<rect").count(), 3);
    }
}
