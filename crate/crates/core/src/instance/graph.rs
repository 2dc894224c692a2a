use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::InstanceError;

/// Index of a vertex in a [`Graph`].
pub type VertexId = usize;

/// Grid coordinates of a cell: `x` is the column, `y` the row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }
}

/// Layout information for graphs built from a 4-connected grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridLayout {
    width: usize,
    height: usize,
    blocked: Vec<bool>,
    cell_to_vertex: Vec<Option<VertexId>>,
    vertex_to_cell: Vec<Cell>,
}

impl GridLayout {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_blocked(&self, cell: Cell) -> bool {
        self.blocked[cell.y * self.width + cell.x]
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.height
    }

    /// Vertex for a cell, or `None` when the cell is blocked or out of bounds.
    pub fn vertex_at(&self, cell: Cell) -> Option<VertexId> {
        if !self.in_bounds(cell) {
            return None;
        }
        self.cell_to_vertex[cell.y * self.width + cell.x]
    }

    pub fn cell_of(&self, v: VertexId) -> Cell {
        self.vertex_to_cell[v]
    }

    /// Blocked cells in row-major order.
    pub fn blocked_cells(&self) -> Vec<Cell> {
        (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| Cell::new(x, y)))
            .filter(|&c| self.is_blocked(c))
            .collect()
    }
}

/// Undirected simple graph with sorted adjacency lists.
///
/// Waiting is not an edge here; the time-expansion graph adds it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<VertexId>>,
    grid: Option<GridLayout>,
}

impl Graph {
    /// Builds a graph from an undirected edge list. Duplicate edges collapse.
    pub fn from_edges(
        vertex_count: usize,
        edges: impl IntoIterator<Item = (VertexId, VertexId)>,
    ) -> Result<Self, InstanceError> {
        let mut sets = vec![BTreeSet::new(); vertex_count];
        for (u, v) in edges {
            if u >= vertex_count || v >= vertex_count {
                return Err(InstanceError::VertexOutOfRange { vertex: u.max(v), vertex_count });
            }
            if u == v {
                return Err(InstanceError::SelfLoop(u));
            }
            sets[u].insert(v);
            sets[v].insert(u);
        }
        Ok(Graph { adjacency: sets.into_iter().map(|s| s.into_iter().collect()).collect(), grid: None })
    }

    /// Path graph `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Self {
        Graph::from_edges(n, (1..n).map(|v| (v - 1, v))).expect("path edges are valid")
    }

    /// 4-connected grid. `blocked` is row-major with `width * height` entries.
    /// Passable cells are numbered in row-major order.
    pub fn grid(width: usize, height: usize, blocked: Vec<bool>) -> Result<Self, InstanceError> {
        if blocked.len() != width * height {
            return Err(InstanceError::GridShape { width, height, cells: blocked.len() });
        }
        let mut cell_to_vertex = vec![None; width * height];
        let mut vertex_to_cell = Vec::new();
        for y in 0..height {
            for x in 0..width {
                if !blocked[y * width + x] {
                    cell_to_vertex[y * width + x] = Some(vertex_to_cell.len());
                    vertex_to_cell.push(Cell::new(x, y));
                }
            }
        }
        let mut adjacency = vec![Vec::new(); vertex_to_cell.len()];
        for (v, c) in vertex_to_cell.iter().enumerate() {
            let mut push = |x: usize, y: usize| {
                if let Some(u) = cell_to_vertex[y * width + x] {
                    adjacency[v].push(u);
                }
            };
            if c.y > 0 {
                push(c.x, c.y - 1);
            }
            if c.x > 0 {
                push(c.x - 1, c.y);
            }
            if c.x + 1 < width {
                push(c.x + 1, c.y);
            }
            if c.y + 1 < height {
                push(c.x, c.y + 1);
            }
            adjacency[v].sort_unstable();
        }
        Ok(Graph { adjacency, grid: Some(GridLayout { width, height, blocked, cell_to_vertex, vertex_to_cell }) })
    }

    /// Fully passable grid.
    pub fn open_grid(width: usize, height: usize) -> Self {
        Graph::grid(width, height, vec![false; width * height]).expect("shape matches")
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adjacency[v]
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v < self.adjacency.len()
    }

    pub fn grid_layout(&self) -> Option<&GridLayout> {
        self.grid.as_ref()
    }

    /// All undirected edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, adj)| adj.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
            .collect()
    }

    /// Human-readable vertex label: grid coordinates when available.
    pub fn label(&self, v: VertexId) -> String {
        match &self.grid {
            Some(g) => {
                let c = g.cell_of(v);
                format!("({},{})", c.x, c.y)
            }
            None => format!("v{v}"),
        }
    }
}
