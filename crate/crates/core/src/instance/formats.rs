//! Grid map (`.map`) and scenario (`.scen`) files from the standard MAPF
//! benchmark repository, plus the JSON instance and plan documents.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Agent, Cell, Graph, InstanceError, MapfInstance, Plan, VertexId};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}, column {column}: unknown cell character '{ch}'")]
    UnknownCell { line: usize, column: usize, ch: char },
    #[error("scenario row {row}: {message}")]
    ScenarioRow { row: usize, message: String },
    #[error("graph has no grid layout")]
    NotAGrid,
    #[error("invalid instance: {0}")]
    Instance(#[from] InstanceError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn syntax(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax { line, message: message.into() }
}

fn header_value(line_no: usize, line: Option<&str>, key: &str) -> Result<String, FormatError> {
    let line = line.ok_or_else(|| syntax(line_no, format!("missing '{key}' header")))?;
    let mut parts = line.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some(k), Some(v), None) if k == key => Ok(v.to_string()),
        _ => Err(syntax(line_no, format!("expected '{key} <value>', found '{line}'"))),
    }
}

/// Parses a grid map. Passable cells are `.`, `G` and `S`; `@`, `O`, `T` and
/// `W` are blocked.
pub fn parse_map(text: &str) -> Result<Graph, FormatError> {
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));
    let kind = header_value(1, lines.next(), "type")?;
    if kind != "octile" {
        return Err(syntax(1, format!("unsupported map type '{kind}'")));
    }
    let height: usize =
        header_value(2, lines.next(), "height")?.parse().map_err(|_| syntax(2, "height is not a number"))?;
    let width: usize =
        header_value(3, lines.next(), "width")?.parse().map_err(|_| syntax(3, "width is not a number"))?;
    match lines.next() {
        Some(l) if l.trim() == "map" => {}
        _ => return Err(syntax(4, "expected 'map'")),
    }

    let mut blocked = Vec::with_capacity(width * height);
    for row in 0..height {
        let line_no = 5 + row;
        let line = lines.next().ok_or_else(|| syntax(line_no, format!("expected {height} rows, found {row}")))?;
        let chars: Vec<char> = line.chars().collect();
        if chars.len() != width {
            return Err(syntax(line_no, format!("row has {} cells, expected {width}", chars.len())));
        }
        for (col, ch) in chars.into_iter().enumerate() {
            blocked.push(match ch {
                '.' | 'G' | 'S' => false,
                '@' | 'O' | 'T' | 'W' => true,
                _ => return Err(FormatError::UnknownCell { line: line_no, column: col + 1, ch }),
            });
        }
    }
    if let Some((i, extra)) = lines.enumerate().find(|(_, l)| !l.trim().is_empty()) {
        return Err(syntax(5 + height + i, format!("unexpected content after map rows: '{extra}'")));
    }
    Ok(Graph::grid(width, height, blocked)?)
}

/// Canonical map text: `.` for passable cells and `@` for blocked ones.
pub fn render_map(graph: &Graph) -> Result<String, FormatError> {
    let grid = graph.grid_layout().ok_or(FormatError::NotAGrid)?;
    let mut out = format!("type octile\nheight {}\nwidth {}\nmap\n", grid.height(), grid.width());
    for y in 0..grid.height() {
        for x in 0..grid.width() {
            out.push(if grid.is_blocked(Cell::new(x, y)) { '@' } else { '.' });
        }
        out.push('\n');
    }
    Ok(out)
}

/// One row of a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEntry {
    pub bucket: u32,
    pub map: String,
    pub width: usize,
    pub height: usize,
    pub start: Cell,
    pub goal: Cell,
    pub optimal_length: f64,
}

fn parse_scenario_rows(text: &str) -> Result<Vec<ScenarioEntry>, FormatError> {
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));
    match lines.next() {
        Some(l) if l.trim_start().starts_with("version") => {}
        _ => return Err(syntax(1, "expected 'version' header")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = i + 1;
        let fields: Vec<&str> =
            if line.contains('\t') { line.split('\t').collect() } else { line.split_whitespace().collect() };
        if fields.len() != 9 {
            return Err(FormatError::ScenarioRow {
                row,
                message: format!("expected 9 fields, found {}", fields.len()),
            });
        }
        let num = |idx: usize, name: &str| -> Result<usize, FormatError> {
            fields[idx].trim().parse().map_err(|_| FormatError::ScenarioRow {
                row,
                message: format!("{name} '{}' is not a number", fields[idx]),
            })
        };
        rows.push(ScenarioEntry {
            bucket: num(0, "bucket")? as u32,
            map: fields[1].trim().to_string(),
            width: num(2, "width")?,
            height: num(3, "height")?,
            start: Cell::new(num(4, "start-x")?, num(5, "start-y")?),
            goal: Cell::new(num(6, "goal-x")?, num(7, "goal-y")?),
            optimal_length: fields[8].trim().parse().map_err(|_| FormatError::ScenarioRow {
                row,
                message: format!("optimal length '{}' is not a number", fields[8]),
            })?,
        });
    }
    Ok(rows)
}

/// Parses a scenario file and maps each row to `(start, goal)` vertices of
/// `graph`. Rows are numbered from 1 after the header.
pub fn parse_scenario(text: &str, graph: &Graph) -> Result<Vec<(VertexId, VertexId)>, FormatError> {
    let grid = graph.grid_layout().ok_or(FormatError::NotAGrid)?;
    parse_scenario_rows(text)?
        .into_iter()
        .enumerate()
        .map(|(i, entry)| {
            let row = i + 1;
            let locate = |cell: Cell, what: &str| -> Result<VertexId, FormatError> {
                if !grid.in_bounds(cell) {
                    return Err(FormatError::ScenarioRow {
                        row,
                        message: format!(
                            "{what} ({}, {}) outside the {}x{} map",
                            cell.x,
                            cell.y,
                            grid.width(),
                            grid.height()
                        ),
                    });
                }
                grid.vertex_at(cell).ok_or_else(|| FormatError::ScenarioRow {
                    row,
                    message: format!("{what} ({}, {}) is a blocked cell", cell.x, cell.y),
                })
            };
            Ok((locate(entry.start, "start")?, locate(entry.goal, "goal")?))
        })
        .collect()
}

/// Writes scenario rows in the benchmark repository layout.
pub fn render_scenario(entries: &[ScenarioEntry]) -> String {
    let mut out = String::from("version 1\n");
    for e in entries {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.8}\n",
            e.bucket, e.map, e.width, e.height, e.start.x, e.start.y, e.goal.x, e.goal.y, e.optimal_length
        ));
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Location {
    Cell([usize; 2]),
    Vertex(VertexId),
}

#[derive(Debug, Serialize, Deserialize)]
struct AgentDoc {
    start: Location,
    goal: Location,
}

#[derive(Debug, Serialize, Deserialize)]
struct GridDoc {
    width: usize,
    height: usize,
    #[serde(default)]
    blocked: Vec<[usize; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphDoc {
    vertex_count: usize,
    edges: Vec<[VertexId; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid: Option<GridDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    graph: Option<GraphDoc>,
    agents: Vec<AgentDoc>,
}

/// Parses the native JSON instance document. Either `grid` (with cell
/// coordinates `[x, y]` for agents) or `graph` (explicit vertex ids) must be
/// present.
pub fn parse_instance_json(text: &str) -> Result<MapfInstance, FormatError> {
    let doc: InstanceDoc = serde_json::from_str(text)?;
    let graph = match (&doc.grid, &doc.graph) {
        (Some(g), None) => {
            let mut blocked = vec![false; g.width * g.height];
            for &[x, y] in &g.blocked {
                if x >= g.width || y >= g.height {
                    return Err(syntax(0, format!("blocked cell ({x}, {y}) outside the grid")));
                }
                blocked[y * g.width + x] = true;
            }
            Graph::grid(g.width, g.height, blocked)?
        }
        (None, Some(g)) => Graph::from_edges(g.vertex_count, g.edges.iter().map(|&[u, v]| (u, v)))?,
        _ => return Err(syntax(0, "instance needs exactly one of 'grid' or 'graph'")),
    };
    let resolve = |loc: &Location| -> Result<VertexId, FormatError> {
        match (loc, graph.grid_layout()) {
            (Location::Vertex(v), _) => Ok(*v),
            (Location::Cell([x, y]), Some(grid)) => grid
                .vertex_at(Cell::new(*x, *y))
                .ok_or_else(|| syntax(0, format!("cell ({x}, {y}) is blocked or outside the grid"))),
            (Location::Cell(_), None) => Err(FormatError::NotAGrid),
        }
    };
    let agents = doc
        .agents
        .iter()
        .map(|a| Ok(Agent { start: resolve(&a.start)?, goal: resolve(&a.goal)? }))
        .collect::<Result<Vec<_>, FormatError>>()?;
    Ok(MapfInstance::new(graph, agents)?)
}

pub fn render_instance_json(instance: &MapfInstance) -> String {
    let graph = instance.graph();
    let doc = match graph.grid_layout() {
        Some(grid) => {
            let cell = |v: VertexId| {
                let c = grid.cell_of(v);
                Location::Cell([c.x, c.y])
            };
            InstanceDoc {
                grid: Some(GridDoc {
                    width: grid.width(),
                    height: grid.height(),
                    blocked: grid.blocked_cells().into_iter().map(|c| [c.x, c.y]).collect(),
                }),
                graph: None,
                agents: instance
                    .agents()
                    .iter()
                    .map(|a| AgentDoc { start: cell(a.start), goal: cell(a.goal) })
                    .collect(),
            }
        }
        None => InstanceDoc {
            grid: None,
            graph: Some(GraphDoc {
                vertex_count: graph.vertex_count(),
                edges: graph.edges().into_iter().map(|(u, v)| [u, v]).collect(),
            }),
            agents: instance
                .agents()
                .iter()
                .map(|a| AgentDoc { start: Location::Vertex(a.start), goal: Location::Vertex(a.goal) })
                .collect(),
        },
    };
    serde_json::to_string_pretty(&doc).expect("instance document serializes") + "\n"
}

#[derive(Debug, Serialize, Deserialize)]
struct PlanAgentDoc {
    path: Vec<VertexId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cells: Option<Vec<[usize; 2]>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PlanDoc {
    makespan: usize,
    #[serde(default)]
    agents: Vec<PlanAgentDoc>,
    arrangements: Vec<Vec<VertexId>>,
}

/// Plan document: per-agent vertex sequences (with grid cells when the graph
/// is a grid) and the per-timestep arrangement table.
pub fn plan_to_json(plan: &Plan, graph: &Graph) -> serde_json::Value {
    let agents = plan
        .paths()
        .into_iter()
        .map(|path| PlanAgentDoc {
            cells: graph.grid_layout().map(|g| {
                path.iter()
                    .map(|&v| {
                        let c = g.cell_of(v);
                        [c.x, c.y]
                    })
                    .collect()
            }),
            path,
        })
        .collect();
    serde_json::to_value(PlanDoc { makespan: plan.makespan(), agents, arrangements: plan.arrangements().to_vec() })
        .expect("plan document serializes")
}

/// Reads a plan document; only the arrangement table is used.
pub fn parse_plan_json(text: &str) -> Result<Plan, FormatError> {
    let doc: PlanDoc = serde_json::from_str(text)?;
    Ok(Plan::new(doc.arrangements))
}
