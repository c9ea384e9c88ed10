//! Element and interface assembly of the coupled flexoelectric system.
//!
//! Global DOF layout: mechanical DOFs interleaved (u_x, u_y) = (2n, 2n+1)
//! for node n, electrical DOFs phi = 2N + n appended after all mechanical
//! ones. The assembled physical blocks are kept separate; `reduced` applies
//! the beta congruence scaling, constraints, and Dirichlet elimination.

use crate::error::{FlexoError, Result};
use crate::material::MaterialSet;
use crate::mesh::{Element, InterfaceEdge, MultiPatchMesh};
use crate::patch::{NurbsPatch, PatchEdge, PhysicalBasis};
use crate::quadrature::gauss_rule;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sprs::{CsMat, TriMat};
use std::collections::BTreeMap;

// ---------------------------------------------------------------------------
// DOF helpers
// ---------------------------------------------------------------------------

pub fn dof_ux(node: usize) -> usize {
    2 * node
}

pub fn dof_uy(node: usize) -> usize {
    2 * node + 1
}

pub fn dof_phi(node: usize, n_nodes: usize) -> usize {
    2 * n_nodes + node
}

fn is_phi(dof: usize, n_nodes: usize) -> bool {
    dof >= 2 * n_nodes
}

// ---------------------------------------------------------------------------
// Shape-function derivative matrices
// ---------------------------------------------------------------------------

/// Derivative matrices at one quadrature point, laid out so that
/// eps = B_u^T u, grad_eps = H_u^T u, E = -B_phi^T phi. Mechanical rows
/// interleave (u_x, u_y) per function.
#[derive(Debug, Clone)]
pub struct ShapeMatrices {
    pub b_u: DMatrix<f64>,
    pub h_u: DMatrix<f64>,
    pub b_phi: DMatrix<f64>,
    pub h_phi: DMatrix<f64>,
}

pub fn shape_matrices(pb: &PhysicalBasis) -> ShapeMatrices {
    let n = pb.r.len();
    let mut b_u = DMatrix::zeros(2 * n, 3);
    let mut h_u = DMatrix::zeros(2 * n, 6);
    let mut b_phi = DMatrix::zeros(n, 2);
    let mut h_phi = DMatrix::zeros(2 * n, 4);
    for a in 0..n {
        let [rx, ry] = pb.grad[a];
        let [rxx, rxy, ryy] = pb.hess[a];
        b_u[(2 * a, 0)] = rx;
        b_u[(2 * a, 2)] = ry;
        b_u[(2 * a + 1, 1)] = ry;
        b_u[(2 * a + 1, 2)] = rx;

        // Strain-gradient order (e11,1 e22,1 g12,1 e11,2 e22,2 g12,2).
        h_u[(2 * a, 0)] = rxx;
        h_u[(2 * a, 2)] = rxy;
        h_u[(2 * a, 3)] = rxy;
        h_u[(2 * a, 5)] = ryy;
        h_u[(2 * a + 1, 1)] = rxy;
        h_u[(2 * a + 1, 2)] = rxx;
        h_u[(2 * a + 1, 4)] = ryy;
        h_u[(2 * a + 1, 5)] = rxy;

        b_phi[(a, 0)] = rx;
        b_phi[(a, 1)] = ry;

        h_phi[(2 * a, 0)] = rx;
        h_phi[(2 * a, 2)] = ry;
        h_phi[(2 * a + 1, 1)] = rx;
        h_phi[(2 * a + 1, 3)] = ry;
    }
    ShapeMatrices {
        b_u,
        h_u,
        b_phi,
        h_phi,
    }
}

/// Global node ids of the functions in a PhysicalBasis, in local order.
fn basis_nodes(mesh: &MultiPatchMesh, patch_id: usize, pb: &PhysicalBasis) -> Vec<usize> {
    let patch = &mesh.patches[patch_id];
    let (_, ny) = patch.num_ctrl();
    let q = patch.spec.kv_eta.degree;
    let per = q + 1;
    let n = pb.r.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let i = pb.first.0 + k / per;
        let j = pb.first.1 + k % per;
        out.push(mesh.node_of[patch_id][i * ny + j]);
    }
    out
}

// ---------------------------------------------------------------------------
// Element stiffness
// ---------------------------------------------------------------------------

/// Element stiffness blocks: K_uu (2n x 2n), K_uphi (2n x n), K_phiphi
/// (n x n), plus the element's global node list.
pub fn element_block(
    mesh: &MultiPatchMesh,
    el: &Element,
    mat: &MaterialSet,
) -> Result<(Vec<usize>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let patch = &mesh.patches[el.patch];
    let p = patch.spec.kv_xi.degree;
    let q = patch.spec.kv_eta.degree;
    let qr_x = gauss_rule(p + 1)?;
    let qr_y = gauss_rule(q + 1)?;
    let c = mat.c_matrix()?;
    let h = mat.h_matrix()?;
    let e = mat.e_matrix();
    let mu = mat.mu_matrix();
    let kappa = mat.kappa_matrix();

    let (xa, xb) = el.xi_range;
    let (ea, eb) = el.eta_range;
    let n_cp = (p + 1) * (q + 1);
    let mut k_uu = DMatrix::zeros(2 * n_cp, 2 * n_cp);
    let mut k_uphi = DMatrix::zeros(2 * n_cp, n_cp);
    let mut k_phiphi = DMatrix::zeros(n_cp, n_cp);
    let mut nodes = Vec::new();

    for (gi, &gx) in qr_x.points.iter().enumerate() {
        for (gj, &gy) in qr_y.points.iter().enumerate() {
            let xi = xa + (gx + 1.0) * 0.5 * (xb - xa);
            let eta = ea + (gy + 1.0) * 0.5 * (eb - ea);
            let pb = patch.physical_basis(xi, eta)?;
            if nodes.is_empty() {
                nodes = basis_nodes(mesh, el.patch, &pb);
            }
            let sm = shape_matrices(&pb);
            let wt = qr_x.weights[gi] * qr_y.weights[gj] * 0.25 * (xb - xa) * (eb - ea)
                * pb.det_j;
            // Dense C/h as DMatrix for mixed products.
            let c_d = DMatrix::from_fn(3, 3, |i, j| c[(i, j)]);
            let h_d = DMatrix::from_fn(6, 6, |i, j| h[(i, j)]);
            let e_d = DMatrix::from_fn(2, 3, |i, j| e[(i, j)]);
            let mu_d = DMatrix::from_fn(2, 6, |i, j| mu[(i, j)]);
            let kappa_d = DMatrix::from_fn(2, 2, |i, j| kappa[(i, j)]);
            k_uu += (&sm.b_u * &c_d * sm.b_u.transpose()
                + &sm.h_u * &h_d * sm.h_u.transpose())
                * wt;
            k_uphi += (&sm.b_u * e_d.transpose() * sm.b_phi.transpose()
                + &sm.h_u * mu_d.transpose() * sm.b_phi.transpose())
                * wt;
            k_phiphi += (&sm.b_phi * &kappa_d * sm.b_phi.transpose()) * wt;
        }
    }
    Ok((nodes, k_uu, k_uphi, k_phiphi))
}

// ---------------------------------------------------------------------------
// Jump / average operators and the interface (DG) block
// ---------------------------------------------------------------------------

/// Jump and average of a normal-sign-carrying scalar pair:
/// jump = grad_L . n_L + grad_R . n_R; average = (a_L + a_R)/2.
pub fn jump_average(
    grad_l: [f64; 2],
    grad_r: [f64; 2],
    n_l: [f64; 2],
    n_r: [f64; 2],
    flux_l: f64,
    flux_r: f64,
) -> (f64, f64) {
    let jump = grad_l[0] * n_l[0] + grad_l[1] * n_l[1] + grad_r[0] * n_r[0]
        + grad_r[1] * n_r[1];
    let avg = 0.5 * (flux_l + flux_r);
    (jump, avg)
}

/// Stabilization parameter tau = alpha E L^2 / h.
pub fn stabilization_tau(alpha: f64, e_modulus: f64, length_scale: f64, h: f64) -> Result<f64> {
    if h <= 0.0 {
        return Err(FlexoError::InvalidArgument("element size must be positive".into()));
    }
    Ok(alpha * e_modulus * length_scale * length_scale / h)
}

/// Projection matrix N(n): r_i = sigma_tilde_ijk n_j n_k in the
/// strain-gradient vector ordering.
fn normal_projection(n: [f64; 2]) -> DMatrix<f64> {
    let (n1, n2) = (n[0], n[1]);
    DMatrix::from_row_slice(
        2,
        6,
        &[
            n1 * n1,
            0.0,
            n1 * n2,
            n1 * n2,
            0.0,
            n2 * n2,
            0.0,
            n1 * n2,
            n1 * n1,
            0.0,
            n2 * n2,
            n1 * n2,
        ],
    )
}

/// Per-DOF interface operator entries at one quadrature point.
struct InterfaceEntry {
    dof: usize,
    /// Contribution to the jump vector [[du/dn]] (2 components).
    jump: [f64; 2],
    /// Contribution to the average flux {r} (2 components).
    avg: [f64; 2],
}

fn side_entries(
    mesh: &MultiPatchMesh,
    patch_id: usize,
    pb: &PhysicalBasis,
    normal: [f64; 2],
    proj: &DMatrix<f64>,
    mat_h: &DMatrix<f64>,
    mat_mu_t: &DMatrix<f64>,
    n_nodes: usize,
    out: &mut Vec<InterfaceEntry>,
) {
    let nodes = basis_nodes(mesh, patch_id, pb);
    let sm = shape_matrices(pb);
    let n = pb.r.len();
    // r = N(n) (h H_u^T u + mu^T B_phi^T phi); averages carry 1/2.
    let flux_u = proj * mat_h * sm.h_u.transpose(); // 2 x 2n
    let flux_phi = proj * mat_mu_t * sm.b_phi.transpose(); // 2 x n
    for a in 0..n {
        let jc = pb.grad[a][0] * normal[0] + pb.grad[a][1] * normal[1];
        for comp in 0..2 {
            let col = 2 * a + comp;
            let mut jump = [0.0; 2];
            jump[comp] = jc;
            out.push(InterfaceEntry {
                dof: 2 * nodes[a] + comp,
                jump,
                avg: [0.5 * flux_u[(0, col)], 0.5 * flux_u[(1, col)]],
            });
        }
        out.push(InterfaceEntry {
            dof: dof_phi(nodes[a], n_nodes),
            jump: [0.0; 2],
            avg: [0.5 * flux_phi[(0, a)], 0.5 * flux_phi[(1, a)]],
        });
    }
}

/// Matched quadrature segments on an interface: breakpoints are the union
/// of both sides' element boundaries in the left edge parameter.
fn interface_breakpoints(edge: &InterfaceEdge, mesh: &MultiPatchMesh) -> Vec<f64> {
    let left = &mesh.patches[edge.left_patch];
    let right = &mesh.patches[edge.right_patch];
    let mut ts: Vec<f64> = Vec::new();
    for (a, b) in left.edge_spans(edge.left_edge) {
        ts.push(a);
        ts.push(b);
    }
    for (a, b) in right.edge_spans(edge.right_edge) {
        // map_param is an involution, so it also maps right to left coords.
        ts.push(edge.map_param(a));
        ts.push(edge.map_param(b));
    }
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    ts
}

/// Assembles one interface edge's symmetric interior-penalty contribution
/// into `acc` (and the penalty-only part into `acc_pen`). The accumulators
/// are keyed by (row, col) so that duplicate contributions are summed in a
/// fixed order and mirrored entries stay bitwise equal.
fn interface_block_into(
    mesh: &MultiPatchMesh,
    edge: &InterfaceEdge,
    mat: &MaterialSet,
    tau: f64,
    acc: &mut BTreeMap<(usize, usize), f64>,
    acc_pen: &mut BTreeMap<(usize, usize), f64>,
) -> Result<()> {
    let n_nodes = mesh.num_nodes();
    let left = &mesh.patches[edge.left_patch];
    let right = &mesh.patches[edge.right_patch];
    let deg = left
        .spec
        .kv_xi
        .degree
        .max(left.spec.kv_eta.degree)
        .max(right.spec.kv_xi.degree)
        .max(right.spec.kv_eta.degree);
    let qr = gauss_rule(deg + 2)?;
    let h6 = mat.h_matrix()?;
    let mat_h = DMatrix::from_fn(6, 6, |i, j| h6[(i, j)]);
    let mu = mat.mu_matrix();
    let mat_mu_t = DMatrix::from_fn(6, 2, |i, j| mu[(j, i)]);

    let ts = interface_breakpoints(edge, mesh);
    let mut entries: Vec<InterfaceEntry> = Vec::new();
    for seg in ts.windows(2) {
        let (t0, t1) = (seg[0], seg[1]);
        if t1 - t0 < 1e-14 {
            continue;
        }
        for (gi, &g) in qr.points.iter().enumerate() {
            let t = t0 + (g + 1.0) * 0.5 * (t1 - t0);
            let tr = edge.map_param(t);
            let (xi_l, eta_l) = edge.left_edge.param(t);
            let (xi_r, eta_r) = edge.right_edge.param(tr);
            let pb_l = left.physical_basis(xi_l, eta_l)?;
            let pb_r = right.physical_basis(xi_r, eta_r)?;
            let (_, n_l, line_j) = left.edge_frame(edge.left_edge, t)?;
            let n_r = [-n_l[0], -n_l[1]];
            // n (x) n is sign-invariant; use the left normal throughout.
            let proj = normal_projection(n_l);
            let wt = qr.weights[gi] * 0.5 * (t1 - t0) * line_j;

            entries.clear();
            side_entries(
                mesh,
                edge.left_patch,
                &pb_l,
                n_l,
                &proj,
                &mat_h,
                &mat_mu_t,
                n_nodes,
                &mut entries,
            );
            side_entries(
                mesh,
                edge.right_patch,
                &pb_r,
                n_r,
                &proj,
                &mat_h,
                &mat_mu_t,
                n_nodes,
                &mut entries,
            );

            // Each unordered pair is evaluated once and mirrored, so the
            // assembled operator is symmetric to the last bit.
            for (ia, a) in entries.iter().enumerate() {
                for (ib, b) in entries.iter().enumerate().skip(ia) {
                    let jj = a.jump[0] * b.jump[0] + a.jump[1] * b.jump[1];
                    let ja_rb = a.jump[0] * b.avg[0] + a.jump[1] * b.avg[1];
                    let ra_jb = a.avg[0] * b.jump[0] + a.avg[1] * b.jump[1];
                    let v = wt * (tau * jj - ja_rb - ra_jb);
                    if v != 0.0 {
                        *acc.entry((a.dof, b.dof)).or_insert(0.0) += v;
                        if ia != ib {
                            *acc.entry((b.dof, a.dof)).or_insert(0.0) += v;
                        }
                    }
                    let vp = wt * tau * jj;
                    if vp != 0.0 {
                        *acc_pen.entry((a.dof, b.dof)).or_insert(0.0) += vp;
                        if ia != ib {
                            *acc_pen.entry((b.dof, a.dof)).or_insert(0.0) += vp;
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Boundary conditions and loads
// ---------------------------------------------------------------------------

/// Geometric region selector for constraints and loads. Face selectors
/// refer to the mesh bounding box; coordinate selectors use absolute
/// physical coordinates (m).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Left,
    Right,
    Bottom,
    Top,
    XBelow(f64),
    XAbove(f64),
    YBelow(f64),
    YAbove(f64),
    /// Single node nearest to the given point.
    Near([f64; 2]),
}

impl Region {
    fn matches(&self, p: &[f64; 2], bbox: &([f64; 2], [f64; 2]), tol: f64) -> bool {
        match self {
            Region::Left => (p[0] - bbox.0[0]).abs() < tol,
            Region::Right => (p[0] - bbox.1[0]).abs() < tol,
            Region::Bottom => (p[1] - bbox.0[1]).abs() < tol,
            Region::Top => (p[1] - bbox.1[1]).abs() < tol,
            Region::XBelow(x) => p[0] < x + tol,
            Region::XAbove(x) => p[0] > x - tol,
            Region::YBelow(y) => p[1] < y + tol,
            Region::YAbove(y) => p[1] > y - tol,
            Region::Near(_) => false,
        }
    }

    fn select_nodes(&self, mesh: &MultiPatchMesh, tol: f64) -> Vec<usize> {
        if let Region::Near(pt) = self {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (i, c) in mesh.node_coords.iter().enumerate() {
                let d = (c[0] - pt[0]).powi(2) + (c[1] - pt[1]).powi(2);
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            return vec![best];
        }
        mesh.nodes_where(|c| self.matches(c, &mesh.bbox, tol))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DofKind {
    Ux,
    Uy,
    Phi,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirichletBc {
    pub region: Region,
    pub dof: DofKind,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TractionBc {
    pub region: Region,
    pub traction: [f64; 2],
}

/// Prescribed outward normal electric displacement w = D . n on an edge.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceChargeBc {
    pub region: Region,
    pub w: f64,
}

/// Double traction conjugate to the normal derivative of displacement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DoubleTractionBc {
    pub region: Region,
    pub r: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointLoad {
    pub at: [f64; 2],
    pub force: [f64; 2],
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BoundarySpec {
    #[serde(default)]
    pub dirichlet: Vec<DirichletBc>,
    #[serde(default)]
    pub tractions: Vec<TractionBc>,
    #[serde(default)]
    pub surface_charges: Vec<SurfaceChargeBc>,
    #[serde(default)]
    pub double_tractions: Vec<DoubleTractionBc>,
    #[serde(default)]
    pub point_loads: Vec<PointLoad>,
    /// Each region's phi DOFs are tied to a single floating value.
    #[serde(default)]
    pub equipotential: Vec<Region>,
    #[serde(default)]
    pub body_force: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DofConstraint {
    Free,
    Fixed(f64),
    SlaveOf(usize),
}

/// Boundary edge in region: all sample points along the edge match.
fn edge_in_region(
    patch: &NurbsPatch,
    edge: PatchEdge,
    region: &Region,
    bbox: &([f64; 2], [f64; 2]),
    tol: f64,
) -> Result<bool> {
    if matches!(region, Region::Near(_)) {
        return Err(FlexoError::InvalidArgument(
            "Near region cannot select edges".into(),
        ));
    }
    for k in 0..5 {
        let t = k as f64 / 4.0;
        let p = patch.edge_point(edge, t)?;
        if !region.matches(&p, bbox, tol) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn region_tol(mesh: &MultiPatchMesh) -> f64 {
    let (lo, hi) = mesh.bbox;
    let diag = ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt();
    1e-7 * diag
}

/// Accumulates all load terms into a full-size physical force vector.
pub fn load_vector(mesh: &MultiPatchMesh, bc: &BoundarySpec) -> Result<Vec<f64>> {
    let n_nodes = mesh.num_nodes();
    let tol = region_tol(mesh);
    let mut f = vec![0.0; 3 * n_nodes];

    // Body force.
    if let Some(b) = bc.body_force {
        for el in mesh.elements() {
            let patch = &mesh.patches[el.patch];
            let p = patch.spec.kv_xi.degree;
            let q = patch.spec.kv_eta.degree;
            let qr_x = gauss_rule(p + 1)?;
            let qr_y = gauss_rule(q + 1)?;
            let (xa, xb) = el.xi_range;
            let (ea, eb) = el.eta_range;
            for (gi, &gx) in qr_x.points.iter().enumerate() {
                for (gj, &gy) in qr_y.points.iter().enumerate() {
                    let xi = xa + (gx + 1.0) * 0.5 * (xb - xa);
                    let eta = ea + (gy + 1.0) * 0.5 * (eb - ea);
                    let pb = patch.physical_basis(xi, eta)?;
                    let nodes = basis_nodes(mesh, el.patch, &pb);
                    let wt = qr_x.weights[gi] * qr_y.weights[gj] * 0.25 * (xb - xa)
                        * (eb - ea)
                        * pb.det_j;
                    for (a, &node) in nodes.iter().enumerate() {
                        f[dof_ux(node)] += wt * pb.r[a] * b[0];
                        f[dof_uy(node)] += wt * pb.r[a] * b[1];
                    }
                }
            }
        }
    }

    // Edge loads share the traversal pattern.
    let mut edge_loads: Vec<(&Region, EdgeLoadKind)> = Vec::new();
    for t in &bc.tractions {
        edge_loads.push((&t.region, EdgeLoadKind::Traction(t.traction)));
    }
    for c in &bc.surface_charges {
        edge_loads.push((&c.region, EdgeLoadKind::Charge(c.w)));
    }
    for d in &bc.double_tractions {
        edge_loads.push((&d.region, EdgeLoadKind::DoubleTraction(d.r)));
    }
    for (region, kind) in edge_loads {
        let mut any = false;
        for &(pid, edge) in &mesh.boundary_edges {
            let patch = &mesh.patches[pid];
            if !edge_in_region(patch, edge, region, &mesh.bbox, tol)? {
                continue;
            }
            any = true;
            integrate_edge_load(mesh, pid, edge, &kind, &mut f)?;
        }
        if !any {
            return Err(FlexoError::InvalidArgument(format!(
                "no boundary edge matches load region {region:?}"
            )));
        }
    }

    for pl in &bc.point_loads {
        let node = Region::Near(pl.at).select_nodes(mesh, tol)[0];
        f[dof_ux(node)] += pl.force[0];
        f[dof_uy(node)] += pl.force[1];
    }
    Ok(f)
}

enum EdgeLoadKind {
    Traction([f64; 2]),
    Charge(f64),
    DoubleTraction([f64; 2]),
}

fn integrate_edge_load(
    mesh: &MultiPatchMesh,
    pid: usize,
    edge: PatchEdge,
    kind: &EdgeLoadKind,
    f: &mut [f64],
) -> Result<()> {
    let patch = &mesh.patches[pid];
    let n_nodes = mesh.num_nodes();
    let deg = patch.spec.kv_xi.degree.max(patch.spec.kv_eta.degree);
    let qr = gauss_rule(deg + 2)?;
    for (t0, t1) in patch.edge_spans(edge) {
        for (gi, &g) in qr.points.iter().enumerate() {
            let t = t0 + (g + 1.0) * 0.5 * (t1 - t0);
            let (xi, eta) = edge.param(t);
            let pb = patch.physical_basis(xi, eta)?;
            let nodes = basis_nodes(mesh, pid, &pb);
            let (_, n, line_j) = patch.edge_frame(edge, t)?;
            let wt = qr.weights[gi] * 0.5 * (t1 - t0) * line_j;
            match kind {
                EdgeLoadKind::Traction(tr) => {
                    for (a, &node) in nodes.iter().enumerate() {
                        f[dof_ux(node)] += wt * pb.r[a] * tr[0];
                        f[dof_uy(node)] += wt * pb.r[a] * tr[1];
                    }
                }
                EdgeLoadKind::Charge(w) => {
                    for (a, &node) in nodes.iter().enumerate() {
                        f[dof_phi(node, n_nodes)] += wt * pb.r[a] * w;
                    }
                }
                EdgeLoadKind::DoubleTraction(r) => {
                    for (a, &node) in nodes.iter().enumerate() {
                        let dn = pb.grad[a][0] * n[0] + pb.grad[a][1] * n[1];
                        f[dof_ux(node)] += wt * dn * r[0];
                        f[dof_uy(node)] += wt * dn * r[1];
                    }
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Global assembly
// ---------------------------------------------------------------------------

/// DG and conditioning settings. A direct tau wins over alpha;
/// with neither, tau = 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DgSettings {
    pub tau: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: f64,
}

impl Default for DgSettings {
    fn default() -> Self {
        Self {
            tau: None,
            alpha: None,
            beta: 1e10,
        }
    }
}

impl DgSettings {
    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.tau {
            if t < 0.0 {
                return Err(FlexoError::InvalidArgument("tau must be >= 0".into()));
            }
        }
        if let Some(a) = self.alpha {
            if a < 0.0 {
                return Err(FlexoError::InvalidArgument("alpha must be >= 0".into()));
            }
        }
        if self.beta <= 0.0 {
            return Err(FlexoError::InvalidArgument("beta must be positive".into()));
        }
        Ok(())
    }

    fn tau_for(&self, mat: &MaterialSet, h: f64) -> Result<f64> {
        if let Some(t) = self.tau {
            return Ok(t);
        }
        if let Some(a) = self.alpha {
            return stabilization_tau(a, mat.e_modulus, mat.length_scale, h);
        }
        Ok(0.0)
    }
}

/// Assembled physical blocks plus constraint bookkeeping.
#[derive(Debug, Clone)]
pub struct CoupledSystem {
    pub n_nodes: usize,
    pub k_uu: CsMat<f64>,
    pub k_uphi: CsMat<f64>,
    pub k_phiphi: CsMat<f64>,
    /// Interface (DG) block over all 3N DOFs, symmetric.
    pub k_interface: CsMat<f64>,
    /// Penalty-only part of the interface block (positive semidefinite).
    pub k_penalty: CsMat<f64>,
    pub f: Vec<f64>,
    pub beta: f64,
    pub constraints: Vec<DofConstraint>,
}

pub fn assemble(
    mesh: &MultiPatchMesh,
    mat: &MaterialSet,
    bc: &BoundarySpec,
    dg: &DgSettings,
) -> Result<CoupledSystem> {
    mat.validate()?;
    dg.validate()?;
    let n_nodes = mesh.num_nodes();
    let n_u = 2 * n_nodes;

    let mut tri_uu = TriMat::new((n_u, n_u));
    let mut tri_uphi = TriMat::new((n_u, n_nodes));
    let mut tri_phiphi = TriMat::new((n_nodes, n_nodes));
    for el in mesh.elements() {
        let (nodes, k_uu, k_uphi, k_phiphi) = element_block(mesh, &el, mat)?;
        let n = nodes.len();
        for a in 0..n {
            for b in 0..n {
                for i in 0..2 {
                    for j in 0..2 {
                        let v = k_uu[(2 * a + i, 2 * b + j)];
                        if v != 0.0 {
                            tri_uu.add_triplet(2 * nodes[a] + i, 2 * nodes[b] + j, v);
                        }
                    }
                    let v = k_uphi[(2 * a + i, b)];
                    if v != 0.0 {
                        tri_uphi.add_triplet(2 * nodes[a] + i, nodes[b], v);
                    }
                }
                let v = k_phiphi[(a, b)];
                if v != 0.0 {
                    tri_phiphi.add_triplet(nodes[a], nodes[b], v);
                }
            }
        }
    }

    let n_tot = 3 * n_nodes;
    let mut acc_i = BTreeMap::new();
    let mut acc_pen = BTreeMap::new();
    for edge in &mesh.interfaces {
        let tau = dg.tau_for(mat, edge.h)?;
        interface_block_into(mesh, edge, mat, tau, &mut acc_i, &mut acc_pen)?;
    }
    let to_mat = |acc: &BTreeMap<(usize, usize), f64>| {
        let mut tri = TriMat::new((n_tot, n_tot));
        for (&(i, j), &v) in acc {
            tri.add_triplet(i, j, v);
        }
        tri.to_csr()
    };

    let f = load_vector(mesh, bc)?;
    let constraints = build_constraints(mesh, bc)?;

    Ok(CoupledSystem {
        n_nodes,
        k_uu: tri_uu.to_csr(),
        k_uphi: tri_uphi.to_csr(),
        k_phiphi: tri_phiphi.to_csr(),
        k_interface: to_mat(&acc_i),
        k_penalty: to_mat(&acc_pen),
        f,
        beta: dg.beta,
        constraints,
    })
}

fn build_constraints(mesh: &MultiPatchMesh, bc: &BoundarySpec) -> Result<Vec<DofConstraint>> {
    let n_nodes = mesh.num_nodes();
    let tol = region_tol(mesh);
    let mut cons = vec![DofConstraint::Free; 3 * n_nodes];

    for region in &bc.equipotential {
        let nodes = region.select_nodes(mesh, tol);
        if nodes.is_empty() {
            return Err(FlexoError::InvalidArgument(format!(
                "equipotential region {region:?} selects no nodes"
            )));
        }
        let master = dof_phi(*nodes.iter().min().unwrap(), n_nodes);
        for &n in &nodes {
            let d = dof_phi(n, n_nodes);
            if d == master {
                continue;
            }
            match cons[d] {
                DofConstraint::Free => cons[d] = DofConstraint::SlaveOf(master),
                _ => {
                    return Err(FlexoError::InvalidArgument(format!(
                        "node {n} phi DOF constrained more than once"
                    )))
                }
            }
        }
    }

    for d in &bc.dirichlet {
        let nodes = d.region.select_nodes(mesh, tol);
        if nodes.is_empty() {
            return Err(FlexoError::InvalidArgument(format!(
                "Dirichlet region {:?} selects no nodes",
                d.region
            )));
        }
        for &n in &nodes {
            let dof = match d.dof {
                DofKind::Ux => dof_ux(n),
                DofKind::Uy => dof_uy(n),
                DofKind::Phi => dof_phi(n, n_nodes),
            };
            match cons[dof] {
                DofConstraint::Free => cons[dof] = DofConstraint::Fixed(d.value),
                DofConstraint::Fixed(v) if v == d.value => {}
                _ => {
                    return Err(FlexoError::InvalidArgument(format!(
                        "DOF {dof} constrained more than once"
                    )))
                }
            }
        }
    }
    Ok(cons)
}

// ---------------------------------------------------------------------------
// Beta scaling + constraint elimination
// ---------------------------------------------------------------------------

/// The constrained system in scaled unknowns U' = [u; phi/beta].
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    /// Symmetric CSC matrix over the free DOFs.
    pub mat: CsMat<f64>,
    pub rhs: Vec<f64>,
    /// Full-DOF index map: Some(reduced index) for free DOFs.
    pub free_index: Vec<Option<usize>>,
    /// Resolved constraint per full DOF (slaves point at masters).
    pub constraints: Vec<DofConstraint>,
    pub n_nodes: usize,
    pub beta: f64,
}

impl CoupledSystem {
    pub fn num_dofs(&self) -> usize {
        3 * self.n_nodes
    }

    /// Physical (unscaled, unconstrained) full matrix K + K_I with the
    /// saddle sign on the electrical block.
    pub fn full_matrix(&self) -> CsMat<f64> {
        let n = self.num_dofs();
        let nn = self.n_nodes;
        let mut tri = TriMat::new((n, n));
        for (&v, (i, j)) in self.k_uu.iter() {
            tri.add_triplet(i, j, v);
        }
        for (&v, (i, j)) in self.k_uphi.iter() {
            tri.add_triplet(i, 2 * nn + j, v);
            tri.add_triplet(2 * nn + j, i, v);
        }
        for (&v, (i, j)) in self.k_phiphi.iter() {
            tri.add_triplet(2 * nn + i, 2 * nn + j, -v);
        }
        for (&v, (i, j)) in self.k_interface.iter() {
            tri.add_triplet(i, j, v);
        }
        tri.to_csr()
    }

    /// Applies the congruence scaling and eliminates constraints.
    pub fn reduced(&self) -> Result<ReducedSystem> {
        let n = self.num_dofs();
        let nn = self.n_nodes;
        let beta = self.beta;

        // Resolve slave chains (single level by construction).
        let resolve = |d: usize| -> usize {
            match self.constraints[d] {
                DofConstraint::SlaveOf(m) => m,
                _ => d,
            }
        };
        // Scaled fixed values: phi Dirichlet enters as phi/beta.
        let scaled_fix = |d: usize| -> Option<f64> {
            match self.constraints[d] {
                DofConstraint::Fixed(v) => {
                    Some(if is_phi(d, nn) { v / beta } else { v })
                }
                _ => None,
            }
        };

        let mut free_index = vec![None; n];
        let mut n_free = 0;
        for d in 0..n {
            if self.constraints[d] == DofConstraint::Free {
                free_index[d] = Some(n_free);
                n_free += 1;
            }
        }
        if n_free == 0 {
            return Err(FlexoError::InvalidArgument("no free DOFs".into()));
        }

        let full = self.full_matrix();
        let mut tri = TriMat::new((n_free, n_free));
        let mut rhs = vec![0.0; n_free];
        for d in 0..n {
            let v = self.f[d] * if is_phi(d, nn) { beta } else { 1.0 };
            let rd = resolve(d);
            if let Some(i) = free_index[rd] {
                rhs[i] += v;
            }
        }
        for (&v, (i, j)) in full.iter() {
            let scale = beta
                .powi(is_phi(i, nn) as i32 + is_phi(j, nn) as i32);
            let v = v * scale;
            let ri = resolve(i);
            let rj = resolve(j);
            match (free_index[ri], scaled_fix(rj)) {
                (Some(a), None) => {
                    let b = free_index[rj].expect("unfixed dof must be free");
                    tri.add_triplet(a, b, v);
                }
                (Some(a), Some(val)) => {
                    rhs[a] -= v * val;
                }
                (None, _) => {}
            }
        }
        Ok(ReducedSystem {
            mat: tri.to_csc(),
            rhs,
            free_index,
            constraints: self.constraints.clone(),
            n_nodes: nn,
            beta,
        })
    }
}

impl ReducedSystem {
    /// Expands a reduced solution to full physical DOFs (phi de-scaled).
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let n = self.free_index.len();
        let nn = self.n_nodes;
        let mut full = vec![0.0; n];
        for d in 0..n {
            let scaled = match self.constraints[d] {
                DofConstraint::Free => x[self.free_index[d].unwrap()],
                DofConstraint::Fixed(v) => {
                    if is_phi(d, nn) {
                        v / self.beta
                    } else {
                        v
                    }
                }
                DofConstraint::SlaveOf(m) => match self.constraints[m] {
                    DofConstraint::Free => x[self.free_index[m].unwrap()],
                    DofConstraint::Fixed(v) => {
                        if is_phi(m, nn) {
                            v / self.beta
                        } else {
                            v
                        }
                    }
                    DofConstraint::SlaveOf(_) => unreachable!("slave chains are single level"),
                },
            };
            full[d] = if is_phi(d, nn) {
                scaled * self.beta
            } else {
                scaled
            };
        }
        full
    }
}
