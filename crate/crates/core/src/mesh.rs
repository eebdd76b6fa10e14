//! Structured quadrilateral meshes for the lid-driven cavity and the
//! backward-facing step.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::fe::{jacobian_det, ElementOrder, Tabulation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Lid,
    Wall,
    Inflow,
    Outflow,
}

/// One element edge on ∂Ω. `mid` is the edge midpoint node for Q2.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub mid: Option<usize>,
    pub tag: BoundaryTag,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Geometry {
    Cavity,
    Step { length: f64 },
}

impl Geometry {
    pub fn area(&self) -> f64 {
        match *self {
            Geometry::Cavity => 4.0,
            Geometry::Step { length } => 2.0 * (length + 1.0) - 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MeshTopology {
    pub nodes: Vec<[f64; 2]>,
    /// Local node lists in the reference element ordering.
    pub elements: Vec<Vec<usize>>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub element_size_h: f64,
    pub order: ElementOrder,
    pub geometry: Geometry,
}

impl MeshTopology {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn corners(&self, e: usize) -> [[f64; 2]; 4] {
        let el = &self.elements[e];
        [
            self.nodes[el[0]],
            self.nodes[el[1]],
            self.nodes[el[2]],
            self.nodes[el[3]],
        ]
    }

    /// Nodes touching boundary edges with the given tag (midpoints included).
    pub fn tagged_nodes(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .boundary_edges
            .iter()
            .filter(|e| e.tag == tag)
            .flat_map(|e| e.nodes.into_iter().chain(e.mid))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// All nodes lying on ∂Ω.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .boundary_edges
            .iter()
            .flat_map(|e| e.nodes.into_iter().chain(e.mid))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Sum of element areas by quadrature of |J|.
    pub fn total_area(&self) -> f64 {
        let tab = Tabulation::new(ElementOrder::Q1);
        (0..self.element_count())
            .map(|e| tab.map(&self.corners(e)).iter().map(|p| p.weight).sum::<f64>())
            .sum()
    }

    /// Element containing x, located through the structured lattice.
    /// Both geometries have their lower-left corner at (-1,-1).
    pub fn locate(&self, x: [f64; 2]) -> Option<usize> {
        let h = self.element_size_h;
        let tol = 1e-12;
        let (x0, y0) = (-1.0, -1.0);
        let ci = ((x[0] - x0) / h).floor();
        let cj = ((x[1] - y0) / h).floor();
        // try the neighbouring cells too, for points on cell edges
        for di in [0.0, -1.0] {
            for dj in [0.0, -1.0] {
                let (a, b) = (ci + di, cj + dj);
                if a < 0.0 || b < 0.0 {
                    continue;
                }
                let lo = [x0 + a * h, y0 + b * h];
                if x[0] < lo[0] - tol || x[0] > lo[0] + h + tol {
                    continue;
                }
                if x[1] < lo[1] - tol || x[1] > lo[1] + h + tol {
                    continue;
                }
                if let Some(e) = self.cell_lookup(a as usize, b as usize) {
                    return Some(e);
                }
            }
        }
        None
    }

    fn cell_lookup(&self, ci: usize, cj: usize) -> Option<usize> {
        let n_unit = (1.0 / self.element_size_h).round() as usize;
        match self.geometry {
            Geometry::Cavity => {
                let n = 2 * n_unit;
                (ci < n && cj < n).then_some(cj * n + ci)
            }
            Geometry::Step { length } => {
                let nx = ((length + 1.0) / self.element_size_h).round() as usize;
                let ny = 2 * n_unit;
                if ci >= nx || cj >= ny {
                    return None;
                }
                // rows below y=0 only hold cells with x >= 0
                let short = nx - n_unit;
                if cj < n_unit {
                    if ci < n_unit {
                        None
                    } else {
                        Some(cj * short + (ci - n_unit))
                    }
                } else {
                    Some(n_unit * short + (cj - n_unit) * nx + ci)
                }
            }
        }
    }
}

fn integral_count(value: f64, what: &str) -> Result<usize> {
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::Parameter(format!("{what} must be a positive integer, got {value}")));
    }
    let r = value.round();
    if r < 1.0 || (value - r).abs() > 1e-9 * r.max(1.0) {
        return Err(Error::Parameter(format!("{what} must be a positive integer, got {value}")));
    }
    Ok(r as usize)
}

/// Lattice coordinate with exact endpoints and exact break points.
fn lattice_coord(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    if i == 0 {
        lo
    } else if i == n {
        hi
    } else {
        lo + (hi - lo) * (i as f64) / (n as f64)
    }
}

struct Lattice {
    k: usize,
    ni: usize,
    index: Vec<usize>, // usize::MAX where no node
}

impl Lattice {
    fn node(&self, i: usize, j: usize) -> usize {
        let n = self.index[j * (self.ni + 1) + i];
        debug_assert!(n != usize::MAX);
        n
    }
}

/// Builds nodes, elements and boundary edges over a set of unit cells.
fn build_structured(
    x_range: (f64, f64),
    y_range: (f64, f64),
    cells_x: usize,
    cells_y: usize,
    keep_cell: impl Fn(usize, usize) -> bool,
    tag_edge: impl Fn([f64; 2], [f64; 2]) -> BoundaryTag,
    h: f64,
    order: ElementOrder,
    geometry: Geometry,
) -> MeshTopology {
    let k = order.degree();
    let ni = cells_x * k;
    let nj = cells_y * k;
    // a lattice point is kept when any adjacent cell is kept
    let point_kept = |i: usize, j: usize| -> bool {
        let cis: &[usize] = &[i / k, (i.max(1) - 1) / k];
        let cjs: &[usize] = &[j / k, (j.max(1) - 1) / k];
        cis.iter().any(|&ci| {
            cjs.iter()
                .any(|&cj| ci < cells_x && cj < cells_y && keep_cell(ci, cj))
        })
    };
    let mut index = vec![usize::MAX; (ni + 1) * (nj + 1)];
    let mut nodes = Vec::new();
    for j in 0..=nj {
        for i in 0..=ni {
            if point_kept(i, j) {
                index[j * (ni + 1) + i] = nodes.len();
                nodes.push([
                    lattice_coord(x_range.0, x_range.1, i, ni),
                    lattice_coord(y_range.0, y_range.1, j, nj),
                ]);
            }
        }
    }
    let lat = Lattice { k, ni, index };

    let mut elements = Vec::new();
    let mut cell_of = vec![usize::MAX; cells_x * cells_y];
    for cj in 0..cells_y {
        for ci in 0..cells_x {
            if !keep_cell(ci, cj) {
                continue;
            }
            cell_of[cj * cells_x + ci] = elements.len();
            let (i0, j0) = (ci * lat.k, cj * lat.k);
            let mut el = vec![
                lat.node(i0, j0),
                lat.node(i0 + k, j0),
                lat.node(i0 + k, j0 + k),
                lat.node(i0, j0 + k),
            ];
            if k == 2 {
                el.extend([
                    lat.node(i0 + 1, j0),
                    lat.node(i0 + 2, j0 + 1),
                    lat.node(i0 + 1, j0 + 2),
                    lat.node(i0, j0 + 1),
                    lat.node(i0 + 1, j0 + 1),
                ]);
            }
            elements.push(el);
        }
    }

    let has_cell = |ci: isize, cj: isize| -> bool {
        ci >= 0
            && cj >= 0
            && (ci as usize) < cells_x
            && (cj as usize) < cells_y
            && cell_of[cj as usize * cells_x + ci as usize] != usize::MAX
    };
    let mut boundary_edges = Vec::new();
    for cj in 0..cells_y {
        for ci in 0..cells_x {
            let e = cell_of[cj * cells_x + ci];
            if e == usize::MAX {
                continue;
            }
            let el = &elements[e];
            let (ci, cj) = (ci as isize, cj as isize);
            // bottom, right, top, left with neighbouring cell offsets
            let sides = [((0, 1), 4, (0, -1)), ((1, 2), 5, (1, 0)), ((2, 3), 6, (0, 1)), ((3, 0), 7, (-1, 0))];
            for ((a, b), m, (di, dj)) in sides {
                if has_cell(ci + di, cj + dj) {
                    continue;
                }
                let nodes_ab = [el[a], el[b]];
                let tag = tag_edge(nodes[nodes_ab[0]], nodes[nodes_ab[1]]);
                boundary_edges.push(BoundaryEdge {
                    nodes: nodes_ab,
                    mid: (k == 2).then(|| el[m]),
                    tag,
                });
            }
        }
    }

    MeshTopology {
        nodes,
        elements,
        boundary_edges,
        element_size_h: h,
        order,
        geometry,
    }
}

pub fn build_cavity_mesh(h: f64, order: ElementOrder) -> Result<MeshTopology> {
    let n = integral_count(2.0 / h, "2/h")?;
    Ok(build_structured(
        (-1.0, 1.0),
        (-1.0, 1.0),
        n,
        n,
        |_, _| true,
        |a, b| {
            if a[1] == 1.0 && b[1] == 1.0 {
                BoundaryTag::Lid
            } else {
                BoundaryTag::Wall
            }
        },
        h,
        order,
        Geometry::Cavity,
    ))
}

pub fn build_step_mesh(length: f64, h: f64, order: ElementOrder) -> Result<MeshTopology> {
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::Parameter(format!("step length must be positive, got {length}")));
    }
    let n_unit = integral_count(1.0 / h, "1/h")?;
    let n_len = integral_count(length / h, "L/h")?;
    let cells_x = n_unit + n_len;
    let cells_y = 2 * n_unit;
    Ok(build_structured(
        (-1.0, length),
        (-1.0, 1.0),
        cells_x,
        cells_y,
        |ci, cj| ci >= n_unit || cj >= n_unit,
        move |a, b| {
            if a[0] == -1.0 && b[0] == -1.0 {
                BoundaryTag::Inflow
            } else if a[0] == length && b[0] == length {
                BoundaryTag::Outflow
            } else {
                BoundaryTag::Wall
            }
        },
        h,
        order,
        Geometry::Step { length },
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub jacobian_positive: bool,
    pub conforming: bool,
    pub boundary_tags_cover: bool,
    pub tag_set_valid: bool,
    pub messages: Vec<String>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.jacobian_positive && self.conforming && self.boundary_tags_cover && self.tag_set_valid
    }
}

pub fn validate_mesh(mesh: &MeshTopology) -> ValidationReport {
    let mut messages = Vec::new();
    let npe = mesh.order.nodes_per_element();

    let tab = Tabulation::new(mesh.order);
    let mut jacobian_positive = true;
    for (e, el) in mesh.elements.iter().enumerate() {
        if el.len() != npe || el.iter().any(|&n| n >= mesh.nodes.len()) {
            jacobian_positive = false;
            messages.push(format!("element {e} has an invalid node list"));
            continue;
        }
        let c = mesh.corners(e);
        if tab.rule.points.iter().any(|&p| jacobian_det(&c, p) <= 0.0) {
            jacobian_positive = false;
            messages.push(format!("element {e} has a non-positive Jacobian"));
        }
    }

    // edges keyed by sorted corner pairs; value: (count, midpoint nodes)
    let mut edges: HashMap<(usize, usize), (usize, Vec<usize>)> = HashMap::new();
    for el in mesh.elements.iter().filter(|el| el.len() == npe) {
        for s in 0..4 {
            let (a, b) = (el[s], el[(s + 1) % 4]);
            let key = (a.min(b), a.max(b));
            let entry = edges.entry(key).or_insert((0, Vec::new()));
            entry.0 += 1;
            if npe == 9 {
                entry.1.push(el[4 + s]);
            }
        }
    }
    let mut conforming = true;
    for (key, (count, mids)) in &edges {
        if *count > 2 {
            conforming = false;
            messages.push(format!("edge {key:?} shared by {count} elements"));
        }
        if mids.windows(2).any(|w| w[0] != w[1]) {
            conforming = false;
            messages.push(format!("edge {key:?} has mismatched midpoint nodes"));
        }
    }
    // hanging vertices: every element corner must be a corner of each edge it lies on
    let mut tagged: HashMap<(usize, usize), usize> = HashMap::new();
    for be in &mesh.boundary_edges {
        let key = (be.nodes[0].min(be.nodes[1]), be.nodes[0].max(be.nodes[1]));
        *tagged.entry(key).or_insert(0) += 1;
    }
    let mut boundary_tags_cover = true;
    for (key, (count, _)) in &edges {
        let t = tagged.get(key).copied().unwrap_or(0);
        if *count == 1 && t != 1 {
            boundary_tags_cover = false;
            messages.push(format!("boundary edge {key:?} carries {t} tags"));
        }
        if *count == 2 && t != 0 {
            boundary_tags_cover = false;
            messages.push(format!("interior edge {key:?} is tagged"));
        }
    }
    for key in tagged.keys() {
        if !edges.contains_key(key) {
            boundary_tags_cover = false;
            messages.push(format!("tagged edge {key:?} is not an element edge"));
        }
    }
    let allowed: &[BoundaryTag] = match mesh.geometry {
        Geometry::Cavity => &[BoundaryTag::Lid, BoundaryTag::Wall],
        Geometry::Step { .. } => &[BoundaryTag::Inflow, BoundaryTag::Wall, BoundaryTag::Outflow],
    };
    let tag_set_valid = mesh.boundary_edges.iter().all(|e| allowed.contains(&e.tag));
    if !tag_set_valid {
        messages.push("boundary uses a tag not allowed for this geometry".into());
    }
    ValidationReport {
        jacobian_positive,
        conforming,
        boundary_tags_cover,
        tag_set_valid,
        messages,
    }
}

/// Legacy VTK unstructured grid; Q2 elements are written as VTK_BIQUADRATIC_QUAD.
/// Point data fields are (name, values per node); vectors use 2 values per node.
pub fn write_vtk<W: Write>(
    mesh: &MeshTopology,
    scalars: &[(&str, &[f64])],
    vectors: &[(&str, &[[f64; 2]])],
    out: &mut W,
) -> Result<()> {
    let n = mesh.node_count();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "oseen mesh")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {n} double")?;
    for p in &mesh.nodes {
        writeln!(out, "{:.17e} {:.17e} 0", p[0], p[1])?;
    }
    let npe = mesh.order.nodes_per_element();
    let ne = mesh.element_count();
    writeln!(out, "CELLS {ne} {}", ne * (npe + 1))?;
    for el in &mesh.elements {
        let ids: Vec<String> = el.iter().map(|i| i.to_string()).collect();
        writeln!(out, "{npe} {}", ids.join(" "))?;
    }
    writeln!(out, "CELL_TYPES {ne}")?;
    let cell_type = if npe == 4 { 9 } else { 28 };
    for _ in 0..ne {
        writeln!(out, "{cell_type}")?;
    }
    if scalars.is_empty() && vectors.is_empty() {
        return Ok(());
    }
    writeln!(out, "POINT_DATA {n}")?;
    for (name, v) in scalars {
        if v.len() != n {
            return Err(Error::Dimension(format!("field {name} has {} values for {n} nodes", v.len())));
        }
        writeln!(out, "SCALARS {name} double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for x in v.iter() {
            writeln!(out, "{x:.17e}")?;
        }
    }
    for (name, v) in vectors {
        if v.len() != n {
            return Err(Error::Dimension(format!("field {name} has {} values for {n} nodes", v.len())));
        }
        writeln!(out, "VECTORS {name} double")?;
        for x in v.iter() {
            writeln!(out, "{:.17e} {:.17e} 0", x[0], x[1])?;
        }
    }
    Ok(())
}
