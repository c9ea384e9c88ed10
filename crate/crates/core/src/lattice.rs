//! Truss-lattice geometry generators: struts as two quadrilateral patches,
//! unit cells UC1-UC4 plus a solid reference cell, and tessellation into a
//! conforming multi-patch mesh.
//!
//! Joints are resolved by miter cuts: each strut end is closed by the two
//! segments from the joint point to the offset-line intersections with its
//! angular neighbors. Adjoining struts therefore tile the joint region
//! exactly, material is counted once, and every cut segment is a conforming
//! shared edge between the two neighboring half-strut patches.

use crate::error::{FlexoError, Result};
use crate::mesh::MultiPatchMesh;
use crate::patch::NurbsPatch;
use serde::{Deserialize, Serialize};

/// Unit-cell topology. Segment lists live in unit coordinates on [0,1]^2
/// and are scaled by the cell dimensions; segments are pre-split so that
/// struts meet only at endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitCellTopology {
    /// X-braced: two corner-to-corner diagonals (split at the center).
    Uc1,
    /// N-braced: verticals at both sides plus one diagonal.
    Uc2,
    /// Square frame: four edge struts.
    Uc3,
    /// Vertical strut pair with a horizontal mid-height cross strut.
    Uc4,
    /// Solid square cell (one patch, no struts).
    Solid,
    /// User-supplied strut segments in unit-cell coordinates.
    Custom(Vec<[[f64; 2]; 2]>),
}

impl UnitCellTopology {
    /// Strut segments of one cell in unit coordinates.
    pub fn unit_segments(&self) -> Vec<[[f64; 2]; 2]> {
        match self {
            UnitCellTopology::Uc1 => vec![
                [[0.0, 0.0], [0.5, 0.5]],
                [[1.0, 0.0], [0.5, 0.5]],
                [[0.0, 1.0], [0.5, 0.5]],
                [[1.0, 1.0], [0.5, 0.5]],
            ],
            UnitCellTopology::Uc2 => vec![
                [[0.0, 0.0], [0.0, 1.0]],
                [[1.0, 0.0], [1.0, 1.0]],
                [[0.0, 0.0], [1.0, 1.0]],
            ],
            UnitCellTopology::Uc3 => vec![
                [[0.0, 0.0], [1.0, 0.0]],
                [[0.0, 1.0], [1.0, 1.0]],
                [[0.0, 0.0], [0.0, 1.0]],
                [[1.0, 0.0], [1.0, 1.0]],
            ],
            UnitCellTopology::Uc4 => vec![
                [[0.0, 0.0], [0.0, 0.5]],
                [[0.0, 0.5], [0.0, 1.0]],
                [[1.0, 0.0], [1.0, 0.5]],
                [[1.0, 0.5], [1.0, 1.0]],
                [[0.0, 0.5], [1.0, 0.5]],
            ],
            UnitCellTopology::Solid => vec![],
            UnitCellTopology::Custom(segs) => segs.clone(),
        }
    }
}

/// Lattice definition: topology, cell dimensions, fill fraction,
/// tessellation counts, and the per-patch discretization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub topology: UnitCellTopology,
    /// Cell width (m).
    pub cell_a: f64,
    /// Cell height (m).
    pub cell_b: f64,
    /// Relative density in (0, 1]; ignored for Solid (treated as 1).
    pub rho: f64,
    pub nx_cells: usize,
    pub ny_cells: usize,
    /// NURBS degree in both directions.
    pub degree: usize,
    /// Elements along a strut (and per direction of a solid cell).
    pub nel_length: usize,
    /// Elements across each half of a strut.
    pub nel_width: usize,
}

impl LatticeSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.cell_a > 0.0 && self.cell_b > 0.0) {
            return Err(FlexoError::InvalidArgument(
                "cell dimensions must be positive".into(),
            ));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(FlexoError::InvalidArgument(format!(
                "rho = {} outside (0, 1]",
                self.rho
            )));
        }
        if self.nx_cells == 0 || self.ny_cells == 0 {
            return Err(FlexoError::InvalidArgument(
                "tessellation counts must be at least 1".into(),
            ));
        }
        if self.degree < 2 {
            return Err(FlexoError::InvalidArgument(
                "degree must be at least 2 for C1-coupled analysis".into(),
            ));
        }
        if self.nel_length == 0 || self.nel_width == 0 {
            return Err(FlexoError::InvalidArgument(
                "element counts must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn domain_area(&self) -> f64 {
        self.cell_a * self.cell_b * self.nx_cells as f64 * self.ny_cells as f64
    }
}

/// A generated lattice: the conforming mesh plus the solved strut width and
/// the achieved fill fraction.
#[derive(Debug)]
pub struct Lattice {
    pub mesh: MultiPatchMesh,
    pub strut_width: f64,
    pub material_area: f64,
    pub rho_actual: f64,
}

// ---------------------------------------------------------------------------
// Strut segment collection
// ---------------------------------------------------------------------------

type Pt = [f64; 2];

fn sub(a: Pt, b: Pt) -> Pt {
    [a[0] - b[0], a[1] - b[1]]
}

fn add(a: Pt, b: Pt) -> Pt {
    [a[0] + b[0], a[1] + b[1]]
}

fn scale(a: Pt, s: f64) -> Pt {
    [a[0] * s, a[1] * s]
}

fn cross(a: Pt, b: Pt) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: Pt, b: Pt) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: Pt) -> f64 {
    dot(a, a).sqrt()
}

/// CCW-left normal of a direction.
fn rot90(a: Pt) -> Pt {
    [-a[1], a[0]]
}

/// Tessellated strut segments in physical coordinates with coincident
/// duplicates (shared cell-boundary struts) removed.
pub fn tessellated_segments(spec: &LatticeSpec) -> Vec<[Pt; 2]> {
    let unit = spec.topology.unit_segments();
    let tol = 1e-9 * spec.cell_a.max(spec.cell_b);
    let key = |p: Pt| -> (i64, i64) {
        ((p[0] / tol).round() as i64, (p[1] / tol).round() as i64)
    };
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for cy in 0..spec.ny_cells {
        for cx in 0..spec.nx_cells {
            let ox = cx as f64 * spec.cell_a;
            let oy = cy as f64 * spec.cell_b;
            for seg in &unit {
                let p0 = [ox + seg[0][0] * spec.cell_a, oy + seg[0][1] * spec.cell_b];
                let p1 = [ox + seg[1][0] * spec.cell_a, oy + seg[1][1] * spec.cell_b];
                let (k0, k1) = (key(p0), key(p1));
                let canon = if k0 <= k1 { (k0, k1) } else { (k1, k0) };
                if seen.insert(canon) {
                    out.push([p0, p1]);
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Miter joint geometry
// ---------------------------------------------------------------------------

/// Corner points of one strut after joint resolution. `p` corners sit on
/// the +n side of the axis (n = CCW-left of the axis direction).
#[derive(Debug, Clone)]
struct StrutGeom {
    j0: Pt,
    j1: Pt,
    c0p: Pt,
    c0m: Pt,
    c1p: Pt,
    c1m: Pt,
}

impl StrutGeom {
    /// Material polygon: hexagon through both miter corners and both joint
    /// points (shoelace, counterclockwise).
    fn area(&self) -> f64 {
        let poly = [self.c0m, self.c1m, self.j1, self.c1p, self.c0p, self.j0];
        let mut a = 0.0;
        for i in 0..poly.len() {
            let p = poly[i];
            let q = poly[(i + 1) % poly.len()];
            a += cross(p, q);
        }
        a / 2.0
    }
}

fn intersect_lines(base1: Pt, dir1: Pt, base2: Pt, dir2: Pt) -> Pt {
    // base1 + t dir1 = base2 + s dir2; near-parallel lines (collinear
    // struts) fall back to the base midpoint, exact for equal widths.
    let det = cross(dir1, [-dir2[0], -dir2[1]]);
    if det.abs() < 1e-9 {
        return scale(add(base1, base2), 0.5);
    }
    let rhs = sub(base2, base1);
    let t = cross(rhs, [-dir2[0], -dir2[1]]) / det;
    add(base1, scale(dir1, t))
}

/// Resolves all joints for a uniform strut width. Errors if any resulting
/// quad would be degenerate (width infeasible for the geometry).
fn miter_geometry(segments: &[[Pt; 2]], width: f64) -> Result<Vec<StrutGeom>> {
    if width <= 0.0 {
        return Err(FlexoError::InvalidArgument("width must be positive".into()));
    }
    let scale_len = segments
        .iter()
        .map(|s| norm(sub(s[1], s[0])))
        .fold(0.0_f64, f64::max);
    if scale_len == 0.0 {
        return Err(FlexoError::InvalidArgument("no strut segments".into()));
    }
    let tol = 1e-9 * scale_len;
    let key = |p: Pt| -> (i64, i64) {
        ((p[0] / tol).round() as i64, (p[1] / tol).round() as i64)
    };

    // Joint map: quantized point -> incident (strut, end) pairs.
    let mut joints: std::collections::HashMap<(i64, i64), Vec<(usize, usize)>> =
        std::collections::HashMap::new();
    for (si, seg) in segments.iter().enumerate() {
        if norm(sub(seg[1], seg[0])) <= width {
            return Err(FlexoError::DegenerateGeometry(format!(
                "strut {si} shorter than its width"
            )));
        }
        joints.entry(key(seg[0])).or_default().push((si, 0));
        joints.entry(key(seg[1])).or_default().push((si, 1));
    }

    // left/right corner per (strut, end): left is CCW of the away-direction.
    let away = |si: usize, end: usize| -> Pt {
        let seg = &segments[si];
        let d = if end == 0 {
            sub(seg[1], seg[0])
        } else {
            sub(seg[0], seg[1])
        };
        scale(d, 1.0 / norm(d))
    };
    let mut left = vec![[[0.0; 2]; 2]; segments.len()];
    let mut right = vec![[[0.0; 2]; 2]; segments.len()];

    for ends in joints.values() {
        let (si0, e0) = ends[0];
        let j = segments[si0][e0];
        if ends.len() == 1 {
            // Free end: perpendicular cut.
            let u = away(si0, e0);
            let n = rot90(u);
            left[si0][e0] = add(j, scale(n, width / 2.0));
            right[si0][e0] = sub(j, scale(n, width / 2.0));
            continue;
        }
        let mut sorted: Vec<(usize, usize)> = ends.clone();
        sorted.sort_by(|&a, &b| {
            let ua = away(a.0, a.1);
            let ub = away(b.0, b.1);
            ua[1].atan2(ua[0])
                .partial_cmp(&ub[1].atan2(ub[0]))
                .unwrap()
        });
        let k = sorted.len();
        for i in 0..k {
            let (sa, ea) = sorted[i];
            let (sb, eb) = sorted[(i + 1) % k];
            let ua = away(sa, ea);
            let ub = away(sb, eb);
            // Left offset line of strut a meets right offset line of the
            // next strut counterclockwise.
            let corner = intersect_lines(
                add(j, scale(rot90(ua), width / 2.0)),
                ua,
                sub(j, scale(rot90(ub), width / 2.0)),
                ub,
            );
            // Miter corner must stay within the near half of both struts.
            for &(s, _) in &[(sa, ea), (sb, eb)] {
                let len = norm(sub(segments[s][1], segments[s][0]));
                if norm(sub(corner, j)) > 0.5 * len {
                    return Err(FlexoError::DegenerateGeometry(format!(
                        "miter corner exceeds half strut length at joint ({:.3e}, {:.3e})",
                        j[0], j[1]
                    )));
                }
            }
            left[sa][ea] = corner;
            right[sb][eb] = corner;
        }
    }

    let mut out = Vec::with_capacity(segments.len());
    for (si, seg) in segments.iter().enumerate() {
        // End 0 away-direction is +d, so its left corner is on +n; end 1
        // away-direction is -d, so its left corner is on -n.
        let g = StrutGeom {
            j0: seg[0],
            j1: seg[1],
            c0p: left[si][0],
            c0m: right[si][0],
            c1p: right[si][1],
            c1m: left[si][1],
        };
        check_strut_quads(&g)?;
        out.push(g);
    }
    Ok(out)
}

/// A bilinear quad with corners (A, B, C, D) in the [(0,0),(1,0),(0,1),(1,1)]
/// order has positive Jacobian iff it is positive at the four corners
/// (the bilinear determinant attains its extrema at corners).
fn quad_is_valid(a: Pt, b: Pt, c: Pt, d: Pt) -> bool {
    cross(sub(b, a), sub(c, a)) > 0.0
        && cross(sub(b, a), sub(d, b)) > 0.0
        && cross(sub(d, c), sub(c, a)) > 0.0
        && cross(sub(d, c), sub(d, b)) > 0.0
}

fn check_strut_quads(g: &StrutGeom) -> Result<()> {
    let plus = quad_is_valid(g.j0, g.j1, g.c0p, g.c1p);
    let minus = quad_is_valid(g.c0m, g.c1m, g.j0, g.j1);
    if plus && minus {
        Ok(())
    } else {
        Err(FlexoError::DegenerateGeometry(
            "strut half-patch folds over (width too large for joint angle)".into(),
        ))
    }
}

fn strut_geom_patches(
    g: &StrutGeom,
    degree: usize,
    nel_len: usize,
    nel_wid: usize,
) -> Result<[NurbsPatch; 2]> {
    let plus = NurbsPatch::bilinear(
        [g.j0, g.j1, g.c0p, g.c1p],
        degree,
        degree,
        nel_len,
        nel_wid,
    )?;
    let minus = NurbsPatch::bilinear(
        [g.c0m, g.c1m, g.j0, g.j1],
        degree,
        degree,
        nel_len,
        nel_wid,
    )?;
    Ok([plus, minus])
}

// ---------------------------------------------------------------------------
// Public strut / cell / tessellation API
// ---------------------------------------------------------------------------

/// Builds one strut as two quadrilateral patches split lengthwise at the
/// midline (the shared interface edge), with perpendicular end cuts and
/// linearly varying width w0 -> w1.
pub fn build_strut(
    p0: Pt,
    p1: Pt,
    w0: f64,
    w1: f64,
    degree: usize,
    nel_len: usize,
    nel_wid: usize,
) -> Result<[NurbsPatch; 2]> {
    let len = norm(sub(p1, p0));
    if w0 <= 0.0 || w1 <= 0.0 {
        return Err(FlexoError::InvalidArgument("widths must be positive".into()));
    }
    if len <= w0.max(w1) {
        return Err(FlexoError::DegenerateGeometry(format!(
            "strut length {len:.3e} not greater than max width"
        )));
    }
    let d = scale(sub(p1, p0), 1.0 / len);
    let n = rot90(d);
    let g = StrutGeom {
        j0: p0,
        j1: p1,
        c0p: add(p0, scale(n, w0 / 2.0)),
        c0m: sub(p0, scale(n, w0 / 2.0)),
        c1p: add(p1, scale(n, w1 / 2.0)),
        c1m: sub(p1, scale(n, w1 / 2.0)),
    };
    check_strut_quads(&g)?;
    strut_geom_patches(&g, degree, nel_len, nel_wid)
}

fn lattice_patches(spec: &LatticeSpec, width: f64) -> Result<Vec<NurbsPatch>> {
    let mut patches = Vec::new();
    if spec.topology == UnitCellTopology::Solid {
        for cy in 0..spec.ny_cells {
            for cx in 0..spec.nx_cells {
                let x0 = cx as f64 * spec.cell_a;
                let y0 = cy as f64 * spec.cell_b;
                let x1 = x0 + spec.cell_a;
                let y1 = y0 + spec.cell_b;
                patches.push(NurbsPatch::bilinear(
                    [[x0, y0], [x1, y0], [x0, y1], [x1, y1]],
                    spec.degree,
                    spec.degree,
                    spec.nel_length,
                    spec.nel_length,
                )?);
            }
        }
        return Ok(patches);
    }
    let segments = tessellated_segments(spec);
    let geoms = miter_geometry(&segments, width)?;
    for g in &geoms {
        let [a, b] = strut_geom_patches(g, spec.degree, spec.nel_length, spec.nel_width)?;
        patches.push(a);
        patches.push(b);
    }
    Ok(patches)
}

fn material_area(spec: &LatticeSpec, width: f64) -> Result<f64> {
    let segments = tessellated_segments(spec);
    let geoms = miter_geometry(&segments, width)?;
    Ok(geoms.iter().map(StrutGeom::area).sum())
}

/// Solves the uniform strut width so the total material area equals
/// rho * domain area, by bisection.
pub fn solve_strut_width(spec: &LatticeSpec) -> Result<f64> {
    spec.validate()?;
    if spec.topology == UnitCellTopology::Solid {
        return Err(FlexoError::NotApplicable(
            "solid topology has no strut width".into(),
        ));
    }
    let segments = tessellated_segments(spec);
    if segments.is_empty() {
        return Err(FlexoError::InvalidArgument("topology has no struts".into()));
    }
    let target = spec.rho * spec.domain_area();
    let min_len = segments
        .iter()
        .map(|s| norm(sub(s[1], s[0])))
        .fold(f64::INFINITY, f64::min);

    // Largest geometrically valid width (miter corners within bounds).
    let mut hi = 0.95 * min_len;
    let mut tries = 0;
    while miter_geometry(&segments, hi).is_err() {
        hi *= 0.5;
        tries += 1;
        if tries > 40 {
            return Err(FlexoError::InvalidArgument(
                "no feasible strut width for topology".into(),
            ));
        }
    }
    let area_hi = material_area(spec, hi)?;
    if area_hi < target {
        return Err(FlexoError::InvalidArgument(format!(
            "rho = {} infeasible: max fill fraction {:.4}",
            spec.rho,
            area_hi / spec.domain_area()
        )));
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        match material_area(spec, mid) {
            Ok(a) if a >= target => hi = mid,
            Ok(_) => lo = mid,
            // Degenerate at mid (non-monotone validity should not happen,
            // but shrink from above defensively).
            Err(_) => hi = mid,
        }
    }
    let w = hi;
    let achieved = material_area(spec, w)? / spec.domain_area();
    if (achieved - spec.rho).abs() > 0.02 * spec.rho {
        return Err(FlexoError::InvalidArgument(format!(
            "width solve missed rho: wanted {}, achieved {achieved:.5}",
            spec.rho
        )));
    }
    Ok(w)
}

/// Patches of a single unit cell (tessellation counts forced to 1x1).
pub fn build_unit_cell(spec: &LatticeSpec) -> Result<Vec<NurbsPatch>> {
    let mut one = spec.clone();
    one.nx_cells = 1;
    one.ny_cells = 1;
    one.validate()?;
    if one.topology == UnitCellTopology::Solid {
        return lattice_patches(&one, 0.0);
    }
    let w = solve_strut_width(&one)?;
    lattice_patches(&one, w)
}

/// Full tessellated lattice as a conforming multi-patch mesh.
pub fn tessellate(spec: &LatticeSpec) -> Result<Lattice> {
    spec.validate()?;
    let (width, area) = if spec.topology == UnitCellTopology::Solid {
        (0.0, spec.domain_area())
    } else {
        let w = solve_strut_width(spec)?;
        (w, material_area(spec, w)?)
    };
    let patches = lattice_patches(spec, width)?;
    let mesh = MultiPatchMesh::build(patches)?;
    let rho_actual = area / spec.domain_area();
    Ok(Lattice {
        mesh,
        strut_width: width,
        material_area: area,
        rho_actual,
    })
}
