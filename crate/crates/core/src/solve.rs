//! Direct solution of the reduced coupled system and post-processing:
//! field sampling, energy integrals, electromechanical coupling factor,
//! and the interface gradient-jump metric.

use crate::assembly::{dof_phi, dof_ux, dof_uy, shape_matrices, CoupledSystem};
use crate::error::{FlexoError, Result};
use crate::material::{MaterialSet, PointState, Vector6};
use crate::mesh::MultiPatchMesh;
use crate::quadrature::gauss_rule;
use nalgebra::{Vector2, Vector3};
use sprs::{CsMat, FillInReduction, SymmetryCheck};
use sprs_ldl::Ldl;

/// Solved physical DOF vector plus solver diagnostics.
#[derive(Debug, Clone)]
pub struct Solution {
    /// Full physical DOFs: (u_x, u_y) interleaved, then phi.
    pub dofs: Vec<f64>,
    pub n_nodes: usize,
    /// Final relative residual of the scaled reduced system.
    pub residual: f64,
}

impl Solution {
    pub fn u(&self, node: usize) -> [f64; 2] {
        [self.dofs[dof_ux(node)], self.dofs[dof_uy(node)]]
    }

    pub fn phi(&self, node: usize) -> f64 {
        self.dofs[dof_phi(node, self.n_nodes)]
    }
}

fn spmv(a: &CsMat<f64>, x: &[f64], y: &mut [f64]) {
    y.iter_mut().for_each(|v| *v = 0.0);
    for (&v, (i, j)) in a.iter() {
        y[i] += v * x[j];
    }
}

/// Factors and solves the constrained scaled system with LDLT plus
/// iterative refinement down to a relative residual of 1e-9.
pub fn solve(sys: &CoupledSystem) -> Result<Solution> {
    let red = sys.reduced()?;
    // Symmetrize to wash out round-off asymmetry before factoring.
    let at = red.mat.clone().transpose_into().to_csc();
    let sym: CsMat<f64> = (&red.mat + &at).map(|v| 0.5 * v);
    let n = red.rhs.len();

    // Symmetric Jacobi equilibration: the saddle system mixes scales of
    // many orders (penalty, dielectric, elastic), which unpivoted LDLT
    // tolerates poorly without it.
    let mut diag_scale = vec![1.0_f64; n];
    for (&v, (i, j)) in sym.iter() {
        if i == j && v.abs() > 0.0 {
            diag_scale[i] = 1.0 / v.abs().sqrt();
        }
    }
    let scaled: CsMat<f64> = {
        let mut tri = sprs::TriMat::new((n, n));
        for (&v, (i, j)) in sym.iter() {
            tri.add_triplet(i, j, v * diag_scale[i] * diag_scale[j]);
        }
        tri.to_csc()
    };

    let ldl = Ldl::new()
        .check_symmetry(SymmetryCheck::DontCheckSymmetry)
        .fill_in_reduction(FillInReduction::ReverseCuthillMcKee)
        .numeric(scaled.view())
        .map_err(|e| FlexoError::SolverFailure(format!("LDLT factorization failed: {e}")))?;
    // Solves A x = b through the equilibrated factorization.
    let solve_one = |b: &[f64]| -> Vec<f64> {
        let sb: Vec<f64> = b.iter().zip(&diag_scale).map(|(v, s)| v * s).collect();
        let mut y = ldl.solve(&sb[..]);
        for (v, s) in y.iter_mut().zip(&diag_scale) {
            *v *= s;
        }
        y
    };
    let rhs_norm = red
        .rhs
        .iter()
        .fold(0.0_f64, |m, &x| m.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    let mut x = solve_one(&red.rhs);
    let mut r = vec![0.0; n];
    let mut rel = f64::INFINITY;
    for _ in 0..25 {
        spmv(&sym, &x, &mut r);
        for i in 0..n {
            r[i] = red.rhs[i] - r[i];
        }
        let r_norm = r.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
        rel = r_norm / rhs_norm;
        if rel <= 1e-9 {
            break;
        }
        let dx = solve_one(&r);
        for i in 0..n {
            x[i] += dx[i];
        }
    }
    if !rel.is_finite() || rel > 1e-6 {
        return Err(FlexoError::SolverFailure(format!(
            "iterative refinement stalled at relative residual {rel:e}"
        )));
    }
    Ok(Solution {
        dofs: red.expand(&x),
        n_nodes: sys.n_nodes,
        residual: rel,
    })
}

// ---------------------------------------------------------------------------
// Field sampling
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct FieldSample {
    pub x: [f64; 2],
    pub u: [f64; 2],
    pub phi: f64,
    pub eps: Vector3<f64>,
    pub grad_eps: Vector6,
    pub e_field: Vector2<f64>,
}

/// Evaluates displacement, potential, and their derived fields at a
/// parametric point of one patch.
pub fn sample_field(
    mesh: &MultiPatchMesh,
    sol: &Solution,
    patch_id: usize,
    xi: f64,
    eta: f64,
) -> Result<FieldSample> {
    let patch = &mesh.patches[patch_id];
    let pb = patch.physical_basis(xi, eta)?;
    let sm = shape_matrices(&pb);
    let (_, ny) = patch.num_ctrl();
    let q = patch.spec.kv_eta.degree;
    let per = q + 1;
    let n = pb.r.len();

    let mut u = [0.0; 2];
    let mut phi = 0.0;
    let mut ue = nalgebra::DVector::zeros(2 * n);
    let mut pe = nalgebra::DVector::zeros(n);
    for k in 0..n {
        let i = pb.first.0 + k / per;
        let j = pb.first.1 + k % per;
        let node = mesh.node_of[patch_id][i * ny + j];
        let ua = sol.u(node);
        u[0] += pb.r[k] * ua[0];
        u[1] += pb.r[k] * ua[1];
        phi += pb.r[k] * sol.phi(node);
        ue[2 * k] = ua[0];
        ue[2 * k + 1] = ua[1];
        pe[k] = sol.phi(node);
    }
    let eps_v = sm.b_u.transpose() * &ue;
    let geps_v = sm.h_u.transpose() * &ue;
    let e_v = -(sm.b_phi.transpose() * &pe);
    Ok(FieldSample {
        x: patch.map_point(xi, eta)?,
        u,
        phi,
        eps: Vector3::new(eps_v[0], eps_v[1], eps_v[2]),
        grad_eps: Vector6::from_iterator((0..6).map(|i| geps_v[i])),
        e_field: Vector2::new(e_v[0], e_v[1]),
    })
}

// ---------------------------------------------------------------------------
// Energies and coupling factor
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct Energies {
    /// 1/2 integral of eps:sigma_hat + grad_eps:sigma_tilde.
    pub mechanical: f64,
    /// 1/2 integral of E . kappa E.
    pub electrical: f64,
}

impl Energies {
    /// Electromechanical coupling factor sqrt(W_elec / W_mech).
    pub fn coupling_factor(&self) -> Result<f64> {
        if self.mechanical <= 0.0 {
            return Err(FlexoError::NotApplicable(
                "coupling factor needs positive mechanical energy".into(),
            ));
        }
        Ok((self.electrical / self.mechanical).sqrt())
    }
}

pub fn energies(mesh: &MultiPatchMesh, mat: &MaterialSet, sol: &Solution) -> Result<Energies> {
    let kappa = mat.kappa_matrix();
    let mut w_mech = 0.0;
    let mut w_elec = 0.0;
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
                let s = sample_field(mesh, sol, el.patch, xi, eta)?;
                let pb = patch.physical_basis(xi, eta)?;
                let wt = qr_x.weights[gi] * qr_y.weights[gj] * 0.25 * (xb - xa)
                    * (eb - ea)
                    * pb.det_j;
                let state = PointState {
                    eps: s.eps,
                    grad_eps: s.grad_eps,
                    e_field: s.e_field,
                };
                let flux = crate::material::constitutive(&state, mat)?;
                w_mech += 0.5
                    * wt
                    * (s.eps.dot(&flux.sigma_hat) + s.grad_eps.dot(&flux.sigma_tilde));
                w_elec += 0.5 * wt * (s.e_field.transpose() * kappa * s.e_field)[0];
            }
        }
    }
    Ok(Energies {
        mechanical: w_mech,
        electrical: w_elec,
    })
}

/// Normalized analytical coupling factors of a bending strip with
/// dimensionless thickness h' (combined piezo+flexo, flexo-only).
pub fn analytical_kem_normalized(h_prime: f64) -> Result<(f64, f64)> {
    if h_prime <= 0.0 {
        return Err(FlexoError::InvalidArgument(
            "normalized thickness must be positive".into(),
        ));
    }
    let flexo = 12.0_f64.sqrt() / h_prime;
    let combined = (1.0 + 12.0 / (h_prime * h_prime)).sqrt();
    Ok((combined, flexo))
}

// ---------------------------------------------------------------------------
// Interface jump metric
// ---------------------------------------------------------------------------

/// Length-normalized L2 norm of the displacement normal-derivative jump
/// over all patch interfaces: sqrt(sum int ||[[du/dn]]||^2 ds / L_total).
pub fn interface_jump_metric(mesh: &MultiPatchMesh, sol: &Solution) -> Result<f64> {
    if mesh.interfaces.is_empty() {
        return Err(FlexoError::NotApplicable(
            "mesh has no patch interfaces".into(),
        ));
    }
    let mut total = 0.0;
    let mut length = 0.0;
    for edge in &mesh.interfaces {
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
        let mut ts: Vec<f64> = Vec::new();
        for (a, b) in left.edge_spans(edge.left_edge) {
            ts.push(a);
            ts.push(b);
        }
        for (a, b) in right.edge_spans(edge.right_edge) {
            ts.push(edge.map_param(a));
            ts.push(edge.map_param(b));
        }
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
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
                let s_l = sample_grad_u(mesh, sol, edge.left_patch, xi_l, eta_l)?;
                let s_r = sample_grad_u(mesh, sol, edge.right_patch, xi_r, eta_r)?;
                let (_, n_l, line_j) = left.edge_frame(edge.left_edge, t)?;
                let wt = qr.weights[gi] * 0.5 * (t1 - t0) * line_j;
                let mut jump2 = 0.0;
                for comp in 0..2 {
                    let j = (s_l[comp][0] - s_r[comp][0]) * n_l[0]
                        + (s_l[comp][1] - s_r[comp][1]) * n_l[1];
                    jump2 += j * j;
                }
                total += wt * jump2;
                length += wt;
            }
        }
    }
    Ok((total / length).sqrt())
}

/// Displacement gradient rows [grad u_x; grad u_y] at a parametric point.
fn sample_grad_u(
    mesh: &MultiPatchMesh,
    sol: &Solution,
    patch_id: usize,
    xi: f64,
    eta: f64,
) -> Result<[[f64; 2]; 2]> {
    let patch = &mesh.patches[patch_id];
    let pb = patch.physical_basis(xi, eta)?;
    let (_, ny) = patch.num_ctrl();
    let per = patch.spec.kv_eta.degree + 1;
    let mut g = [[0.0; 2]; 2];
    for k in 0..pb.r.len() {
        let i = pb.first.0 + k / per;
        let j = pb.first.1 + k % per;
        let node = mesh.node_of[patch_id][i * ny + j];
        let ua = sol.u(node);
        for comp in 0..2 {
            g[comp][0] += pb.grad[k][0] * ua[comp];
            g[comp][1] += pb.grad[k][1] * ua[comp];
        }
    }
    Ok(g)
}
