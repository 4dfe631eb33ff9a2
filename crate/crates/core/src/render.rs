//! Grid pictures of constraints and compromiser assignments.
//!
//! Rows are the first agent's object, columns the second agent's, panels
//! left to right the third agent's, and panel rows top to bottom the
//! fourth agent's.

use std::fmt::Write;

use crate::alpha::CompromiserAssignment;
use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::instance::{AgentSet, Instance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RenderFormat {
    #[default]
    Ascii,
    Svg,
}

impl std::str::FromStr for RenderFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ascii" => Ok(RenderFormat::Ascii),
            "svg" => Ok(RenderFormat::Svg),
            other => Err(Error::Parse(format!("unknown render format `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Cell {
    Feasible,
    Infeasible(Option<AgentSet>),
}

const FEASIBLE: &str = "·";

struct Grid<'a> {
    inst: &'a Instance,
    cells: Vec<Cell>,
}

impl Grid<'_> {
    fn label(&self, code: u32) -> String {
        match self.cells[code as usize] {
            Cell::Feasible => FEASIBLE.to_string(),
            Cell::Infeasible(None) => "[ ]".to_string(),
            Cell::Infeasible(Some(s)) => format!("[{}]", self.inst.agent_names(s).join(" ")),
        }
    }

    fn panels(&self) -> (usize, usize) {
        let m = self.inst.num_objects();
        match self.inst.num_agents() {
            2 => (1, 1),
            3 => (1, m),
            _ => (m, m),
        }
    }

    fn code(&self, row: usize, col: usize, panel: usize, panel_row: usize) -> u32 {
        let inst = self.inst;
        let mut objects = vec![row, col, panel, panel_row];
        objects.truncate(inst.num_agents());
        objects
            .iter()
            .enumerate()
            .fold(0, |code, (i, &o)| inst.with_object(code, i, o))
    }

    fn ascii(&self) -> String {
        let inst = self.inst;
        let m = inst.num_objects();
        let n = inst.num_agents();
        let (panel_rows, panels) = self.panels();
        let corner = format!("{}\\{}", inst.agent_name(0), inst.agent_name(1));
        let row_w = inst
            .objects()
            .iter()
            .map(|o| o.chars().count())
            .chain([corner.chars().count()])
            .max()
            .unwrap();
        let cell_w = (0..inst.num_allocations() as u32)
            .map(|c| self.label(c).chars().count())
            .chain(inst.objects().iter().map(|o| o.chars().count()))
            .max()
            .unwrap();
        let pad = |s: &str, w: usize| format!("{s}{}", " ".repeat(w - s.chars().count()));
        let panel_w = row_w + m * (cell_w + 1);
        let mut out = String::new();
        for pr in 0..panel_rows {
            if pr > 0 {
                out.push('\n');
            }
            if n == 4 {
                writeln!(out, "{} = {}", inst.agent_name(3), inst.object_name(pr)).unwrap();
            }
            let mut lines: Vec<String> = vec![String::new(); m + if n >= 3 { 2 } else { 1 }];
            for p in 0..panels {
                let mut block = Vec::new();
                if n >= 3 {
                    block.push(pad(&format!("{} = {}", inst.agent_name(2), inst.object_name(p)), panel_w));
                }
                let mut head = pad(&corner, row_w);
                for col in 0..m {
                    head.push(' ');
                    head.push_str(&pad(inst.object_name(col), cell_w));
                }
                block.push(head);
                for row in 0..m {
                    let mut line = pad(inst.object_name(row), row_w);
                    for col in 0..m {
                        line.push(' ');
                        line.push_str(&pad(&self.label(self.code(row, col, p, pr)), cell_w));
                    }
                    block.push(line);
                }
                for (k, l) in block.into_iter().enumerate() {
                    if p > 0 {
                        lines[k].push_str("   ");
                    }
                    lines[k].push_str(&l);
                }
            }
            for l in lines {
                out.push_str(l.trim_end());
                out.push('\n');
            }
        }
        out
    }

    fn svg(&self) -> String {
        const CELL: usize = 48;
        const GAP: usize = 24;
        const TITLE: usize = 20;
        let inst = self.inst;
        let m = inst.num_objects();
        let n = inst.num_agents();
        let (panel_rows, panels) = self.panels();
        let panel_w = (m + 1) * CELL;
        let panel_h = TITLE + (m + 1) * CELL;
        let width = panels * panel_w + (panels - 1) * GAP;
        let height = panel_rows * (panel_h + TITLE) + (panel_rows - 1) * GAP;
        let mut out = String::new();
        writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="monospace" font-size="12">"#
        )
        .unwrap();
        for pr in 0..panel_rows {
            let y0 = pr * (panel_h + TITLE + GAP);
            if n == 4 {
                writeln!(
                    out,
                    r#"<text x="0" y="{}">{} = {}</text>"#,
                    y0 + 14,
                    esc(inst.agent_name(3)),
                    esc(inst.object_name(pr))
                )
                .unwrap();
            }
            for p in 0..panels {
                let x0 = p * (panel_w + GAP);
                let top = y0 + TITLE;
                if n >= 3 {
                    writeln!(
                        out,
                        r#"<text x="{}" y="{}">{} = {}</text>"#,
                        x0,
                        top + 14,
                        esc(inst.agent_name(2)),
                        esc(inst.object_name(p))
                    )
                    .unwrap();
                }
                let gy = top + TITLE;
                let mid = CELL / 2;
                writeln!(
                    out,
                    r#"<text x="{}" y="{}" text-anchor="middle">{}\{}</text>"#,
                    x0 + mid,
                    gy + mid + 4,
                    esc(inst.agent_name(0)),
                    esc(inst.agent_name(1))
                )
                .unwrap();
                for k in 0..m {
                    let name = esc(inst.object_name(k));
                    writeln!(
                        out,
                        r#"<text x="{}" y="{}" text-anchor="middle">{name}</text>"#,
                        x0 + (k + 1) * CELL + mid,
                        gy + mid + 4
                    )
                    .unwrap();
                    writeln!(
                        out,
                        r#"<text x="{}" y="{}" text-anchor="middle">{name}</text>"#,
                        x0 + mid,
                        gy + (k + 1) * CELL + mid + 4
                    )
                    .unwrap();
                }
                for row in 0..m {
                    for col in 0..m {
                        let code = self.code(row, col, p, pr);
                        let (x, y) = (x0 + (col + 1) * CELL, gy + (row + 1) * CELL);
                        let fill = match self.cells[code as usize] {
                            Cell::Feasible => "#ffffff",
                            Cell::Infeasible(_) => "#c8c8c8",
                        };
                        writeln!(
                            out,
                            r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="#000000"/>"##
                        )
                        .unwrap();
                        let text = match self.cells[code as usize] {
                            Cell::Feasible => FEASIBLE.to_string(),
                            Cell::Infeasible(None) => String::new(),
                            Cell::Infeasible(Some(s)) => inst.agent_names(s).join(" "),
                        };
                        if !text.is_empty() {
                            writeln!(
                                out,
                                r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
                                x + mid,
                                y + mid + 4,
                                esc(&text)
                            )
                            .unwrap();
                        }
                    }
                }
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn render_grid(grid: Grid, format: RenderFormat) -> Result<String> {
    let n = grid.inst.num_agents();
    if !(2..=4).contains(&n) {
        return Err(Error::InvalidSpec(format!(
            "grids can show 2 to 4 agents, this instance has {n}"
        )));
    }
    Ok(match format {
        RenderFormat::Ascii => grid.ascii(),
        RenderFormat::Svg => grid.svg(),
    })
}

pub fn render_alpha(alpha: &CompromiserAssignment, format: RenderFormat) -> Result<String> {
    let cells = alpha
        .cells()
        .iter()
        .map(|&s| {
            if s.is_empty() {
                Cell::Feasible
            } else {
                Cell::Infeasible(Some(s))
            }
        })
        .collect();
    render_grid(
        Grid {
            inst: alpha.instance(),
            cells,
        },
        format,
    )
}

pub fn render_constraint(c: &Constraint, format: RenderFormat) -> Result<String> {
    let inst = c.instance();
    let cells = (0..inst.num_allocations() as u32)
        .map(|x| {
            if c.is_feasible(x) {
                Cell::Feasible
            } else {
                Cell::Infeasible(None)
            }
        })
        .collect();
    render_grid(Grid { inst, cells }, format)
}
