//! NURBS patch geometry: parametric-to-physical mapping with first and
//! second derivatives, and push-forward of basis derivatives to physical
//! space.

use crate::error::{FlexoError, Result};
use crate::nurbs::{nurbs_basis_2d, NurbsBasis2D, PatchBasisSpec};
use crate::spline::make_open_knot_vector;

/// A tensor-product NURBS patch mapping the parametric unit square to a
/// physical quadrilateral region.
///
/// Control points and weights are stored row-major: index `i * n_eta + j`
/// for xi-index `i` and eta-index `j`.
#[derive(Debug, Clone)]
pub struct NurbsPatch {
    pub spec: PatchBasisSpec,
    pub ctrl: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

/// One of the four parametric boundary edges of a patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PatchEdge {
    /// eta = 0, parameterized by xi.
    South,
    /// xi = 1, parameterized by eta.
    East,
    /// eta = 1, parameterized by xi.
    North,
    /// xi = 0, parameterized by eta.
    West,
}

impl PatchEdge {
    pub const ALL: [PatchEdge; 4] = [
        PatchEdge::South,
        PatchEdge::East,
        PatchEdge::North,
        PatchEdge::West,
    ];

    /// Maps the edge parameter t in [0, 1] to patch coordinates.
    pub fn param(&self, t: f64) -> (f64, f64) {
        match self {
            PatchEdge::South => (t, 0.0),
            PatchEdge::East => (1.0, t),
            PatchEdge::North => (t, 1.0),
            PatchEdge::West => (0.0, t),
        }
    }
}

/// Mapping value and derivatives at a parametric point.
#[derive(Debug, Clone, Copy)]
pub struct MappingDerivs {
    pub x: [f64; 2],
    /// jac[c] = (d x_c / d xi, d x_c / d eta).
    pub jac: [[f64; 2]; 2],
    pub det_j: f64,
    /// Second parametric derivatives per coordinate: (xi xi, xi eta, eta eta).
    pub h_geo: [[f64; 3]; 2],
}

/// Basis functions pushed to physical space at one quadrature point.
#[derive(Debug, Clone)]
pub struct PhysicalBasis {
    /// Global (i, j) grid index of the first local function (see
    /// [`NurbsBasis2D`] ordering).
    pub first: (usize, usize),
    pub r: Vec<f64>,
    /// (d/dx, d/dy) per function.
    pub grad: Vec<[f64; 2]>,
    /// (xx, xy, yy) per function.
    pub hess: Vec<[f64; 3]>,
    pub det_j: f64,
}

impl NurbsPatch {
    pub fn new(spec: PatchBasisSpec, ctrl: Vec<[f64; 2]>, weights: Vec<f64>) -> Result<Self> {
        let (nx, ny) = spec.num_basis();
        if ctrl.len() != nx * ny || weights.len() != nx * ny {
            return Err(FlexoError::InvalidArgument(format!(
                "control grid {}x{} expects {} points, got {} / {} weights",
                nx,
                ny,
                nx * ny,
                ctrl.len(),
                weights.len()
            )));
        }
        Ok(Self { spec, ctrl, weights })
    }

    /// Builds a patch over a (possibly non-parallel-sided) quadrilateral with
    /// the bilinear map reproduced exactly: control points sit at the
    /// bilinear image of the Greville grid, all weights one.
    ///
    /// Corner order: (xi, eta) = (0,0), (1,0), (0,1), (1,1).
    pub fn bilinear(
        corners: [[f64; 2]; 4],
        degree_xi: usize,
        degree_eta: usize,
        nel_xi: usize,
        nel_eta: usize,
    ) -> Result<Self> {
        let kv_xi = make_open_knot_vector(degree_xi, degree_xi + nel_xi)?;
        let kv_eta = make_open_knot_vector(degree_eta, degree_eta + nel_eta)?;
        let spec = PatchBasisSpec { kv_xi, kv_eta };
        let gx = spec.kv_xi.greville();
        let gy = spec.kv_eta.greville();
        let [c00, c10, c01, c11] = corners;
        let bilin = |s: f64, t: f64| -> [f64; 2] {
            [
                (1.0 - s) * (1.0 - t) * c00[0]
                    + s * (1.0 - t) * c10[0]
                    + (1.0 - s) * t * c01[0]
                    + s * t * c11[0],
                (1.0 - s) * (1.0 - t) * c00[1]
                    + s * (1.0 - t) * c10[1]
                    + (1.0 - s) * t * c01[1]
                    + s * t * c11[1],
            ]
        };
        let mut ctrl = Vec::with_capacity(gx.len() * gy.len());
        for &s in &gx {
            for &t in &gy {
                ctrl.push(bilin(s, t));
            }
        }
        let weights = vec![1.0; ctrl.len()];
        NurbsPatch::new(spec, ctrl, weights)
    }

    pub fn num_ctrl(&self) -> (usize, usize) {
        self.spec.num_basis()
    }

    pub fn basis(&self, xi: f64, eta: f64, n_derivs: usize) -> Result<NurbsBasis2D> {
        nurbs_basis_2d(&self.spec, &self.weights, xi, eta, n_derivs)
    }

    pub fn map_point(&self, xi: f64, eta: f64) -> Result<[f64; 2]> {
        let nb = self.basis(xi, eta, 0)?;
        let (_, ny) = self.num_ctrl();
        let mut x = [0.0; 2];
        for (k, (i, j)) in nb.global_indices(&self.spec).into_iter().enumerate() {
            let c = self.ctrl[i * ny + j];
            x[0] += nb.r[k] * c[0];
            x[1] += nb.r[k] * c[1];
        }
        Ok(x)
    }

    pub fn mapping_derivatives(&self, xi: f64, eta: f64) -> Result<MappingDerivs> {
        let nb = self.basis(xi, eta, 2)?;
        let (_, ny) = self.num_ctrl();
        let mut x = [0.0; 2];
        let mut jac = [[0.0; 2]; 2];
        let mut h_geo = [[0.0; 3]; 2];
        for (k, (i, j)) in nb.global_indices(&self.spec).into_iter().enumerate() {
            let c = self.ctrl[i * ny + j];
            for d in 0..2 {
                x[d] += nb.r[k] * c[d];
                jac[d][0] += nb.dr[k][0] * c[d];
                jac[d][1] += nb.dr[k][1] * c[d];
                h_geo[d][0] += nb.d2r[k][0] * c[d];
                h_geo[d][1] += nb.d2r[k][1] * c[d];
                h_geo[d][2] += nb.d2r[k][2] * c[d];
            }
        }
        let det_j = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det_j <= 0.0 {
            return Err(FlexoError::DegenerateGeometry(format!(
                "det J = {det_j} at (xi, eta) = ({xi}, {eta})"
            )));
        }
        Ok(MappingDerivs { x, jac, det_j, h_geo })
    }

    /// Basis values with physical first and second derivatives.
    ///
    /// First derivatives use the inverse Jacobian; second derivatives solve
    /// the full chain rule, removing the geometric curvature term:
    ///   d2R_param = J^T Hess_phys J + grad_phys . H_geo.
    pub fn physical_basis(&self, xi: f64, eta: f64) -> Result<PhysicalBasis> {
        let nb = self.basis(xi, eta, 2)?;
        let md = self.mapping_derivatives(xi, eta)?;
        let j = md.jac;
        let inv_det = 1.0 / md.det_j;
        // Inverse of [[x_xi, x_eta],[y_xi, y_eta]].
        let ji = [
            [j[1][1] * inv_det, -j[0][1] * inv_det],
            [-j[1][0] * inv_det, j[0][0] * inv_det],
        ];
        // 3x3 system mapping (R_xx, R_xy, R_yy) to (R_xixi, R_xieta, R_etaeta).
        let (xs, ys) = (j[0], j[1]);
        let m = nalgebra::Matrix3::new(
            xs[0] * xs[0],
            2.0 * xs[0] * ys[0],
            ys[0] * ys[0],
            xs[0] * xs[1],
            xs[0] * ys[1] + xs[1] * ys[0],
            ys[0] * ys[1],
            xs[1] * xs[1],
            2.0 * xs[1] * ys[1],
            ys[1] * ys[1],
        );
        let m_inv = m.try_inverse().ok_or_else(|| {
            FlexoError::DegenerateGeometry("second-derivative transform is singular".into())
        })?;

        let n = nb.len();
        let mut grad = vec![[0.0; 2]; n];
        let mut hess = vec![[0.0; 3]; n];
        for k in 0..n {
            let gx = ji[0][0] * nb.dr[k][0] + ji[1][0] * nb.dr[k][1];
            let gy = ji[0][1] * nb.dr[k][0] + ji[1][1] * nb.dr[k][1];
            grad[k] = [gx, gy];
            let rhs = nalgebra::Vector3::new(
                nb.d2r[k][0] - gx * md.h_geo[0][0] - gy * md.h_geo[1][0],
                nb.d2r[k][1] - gx * md.h_geo[0][1] - gy * md.h_geo[1][1],
                nb.d2r[k][2] - gx * md.h_geo[0][2] - gy * md.h_geo[1][2],
            );
            let h = m_inv * rhs;
            hess[k] = [h[0], h[1], h[2]];
        }
        Ok(PhysicalBasis {
            first: nb.first,
            r: nb.r,
            grad,
            hess,
            det_j: md.det_j,
        })
    }

    /// Physical point on an edge at edge parameter t.
    pub fn edge_point(&self, edge: PatchEdge, t: f64) -> Result<[f64; 2]> {
        let (xi, eta) = edge.param(t);
        self.map_point(xi, eta)
    }

    /// Edge tangent dX/dt, outward unit normal, and the line Jacobian |dX/dt|
    /// at edge parameter t.
    pub fn edge_frame(&self, edge: PatchEdge, t: f64) -> Result<([f64; 2], [f64; 2], f64)> {
        let (xi, eta) = edge.param(t);
        let md = self.mapping_derivatives(xi, eta)?;
        // Column of J along the edge parameter and along the inward direction.
        let (tan_col, in_col, in_sign) = match edge {
            PatchEdge::South => (0, 1, 1.0),
            PatchEdge::North => (0, 1, -1.0),
            PatchEdge::West => (1, 0, 1.0),
            PatchEdge::East => (1, 0, -1.0),
        };
        let tangent = [md.jac[0][tan_col], md.jac[1][tan_col]];
        let inward = [in_sign * md.jac[0][in_col], in_sign * md.jac[1][in_col]];
        let len = (tangent[0] * tangent[0] + tangent[1] * tangent[1]).sqrt();
        let mut n = [tangent[1] / len, -tangent[0] / len];
        if n[0] * inward[0] + n[1] * inward[1] > 0.0 {
            n = [-n[0], -n[1]];
        }
        Ok((tangent, n, len))
    }

    /// Control-grid indices lying on an edge, ordered by the edge parameter.
    pub fn edge_ctrl_indices(&self, edge: PatchEdge) -> Vec<usize> {
        let (nx, ny) = self.num_ctrl();
        match edge {
            PatchEdge::South => (0..nx).map(|i| i * ny).collect(),
            PatchEdge::North => (0..nx).map(|i| i * ny + ny - 1).collect(),
            PatchEdge::West => (0..ny).collect(),
            PatchEdge::East => (0..ny).map(|j| (nx - 1) * ny + j).collect(),
        }
    }

    /// Knot spans of the parameter running along an edge.
    pub fn edge_spans(&self, edge: PatchEdge) -> Vec<(f64, f64)> {
        match edge {
            PatchEdge::South | PatchEdge::North => self.spec.kv_xi.spans(),
            PatchEdge::East | PatchEdge::West => self.spec.kv_eta.spans(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_square(p: usize, nel: usize) -> NurbsPatch {
        NurbsPatch::bilinear(
            [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
            p,
            p,
            nel,
            nel,
        )
        .unwrap()
    }

    fn trapezoid(p: usize, nel: usize) -> NurbsPatch {
        NurbsPatch::bilinear(
            [[0.0, 0.0], [1.0, 0.0], [0.2, 1.0], [1.3, 1.4]],
            p,
            p,
            nel,
            nel,
        )
        .unwrap()
    }

    #[test]
    fn identity_map_on_unit_square() {
        let patch = unit_square(3, 2);
        let x = patch.map_point(0.3, 0.7).unwrap();
        assert_abs_diff_eq!(x[0], 0.3, epsilon = 1e-13);
        assert_abs_diff_eq!(x[1], 0.7, epsilon = 1e-13);
        let md = patch.mapping_derivatives(0.4, 0.6).unwrap();
        assert_abs_diff_eq!(md.jac[0][0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(md.jac[0][1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(md.jac[1][1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(md.det_j, 1.0, epsilon = 1e-12);
        for d in 0..2 {
            for k in 0..3 {
                assert_abs_diff_eq!(md.h_geo[d][k], 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn bilinear_corner_interpolation() {
        let patch = NurbsPatch::bilinear(
            [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 2.0]],
            2,
            2,
            1,
            1,
        )
        .unwrap();
        let x = patch.map_point(1.0, 1.0).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(x[1], 2.0, epsilon = 1e-13);
    }

    #[test]
    fn curved_map_matches_de_casteljau() {
        // Single-element quadratic patch: the map is the tensor-product
        // Bezier surface of its control net, evaluated by de Casteljau.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let spec = PatchBasisSpec {
            kv_xi: make_open_knot_vector(2, 3).unwrap(),
            kv_eta: make_open_knot_vector(2, 3).unwrap(),
        };
        let ctrl: Vec<[f64; 2]> = (0..9)
            .map(|k| {
                let i = (k / 3) as f64;
                let j = (k % 3) as f64;
                [
                    i / 2.0 + 0.1 * rng.gen::<f64>(),
                    j / 2.0 + 0.1 * rng.gen::<f64>(),
                ]
            })
            .collect();
        let patch = NurbsPatch::new(spec, ctrl.clone(), vec![1.0; 9]).unwrap();
        let de_casteljau_1d = |pts: &[[f64; 2]], t: f64| -> [f64; 2] {
            let mut q = pts.to_vec();
            for r in 1..q.len() {
                for i in 0..q.len() - r {
                    q[i] = [
                        (1.0 - t) * q[i][0] + t * q[i + 1][0],
                        (1.0 - t) * q[i][1] + t * q[i + 1][1],
                    ];
                }
            }
            q[0]
        };
        for _ in 0..20 {
            let xi: f64 = rng.gen();
            let eta: f64 = rng.gen();
            // Reduce along eta per xi-row, then along xi.
            let rows: Vec<[f64; 2]> = (0..3)
                .map(|i| de_casteljau_1d(&ctrl[i * 3..i * 3 + 3], eta))
                .collect();
            let expect = de_casteljau_1d(&rows, xi);
            let got = patch.map_point(xi, eta).unwrap();
            assert_abs_diff_eq!(got[0], expect[0], epsilon = 1e-12);
            assert_abs_diff_eq!(got[1], expect[1], epsilon = 1e-12);
        }
    }

    #[test]
    fn affine_scaling_det() {
        let patch = NurbsPatch::bilinear(
            [[0.0, 0.0], [2.0, 0.0], [0.0, 1.0], [2.0, 1.0]],
            2,
            2,
            2,
            2,
        )
        .unwrap();
        let md = patch.mapping_derivatives(0.37, 0.81).unwrap();
        assert_abs_diff_eq!(md.det_j, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn mapping_derivatives_match_finite_differences() {
        let patch = trapezoid(3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = 1e-6;
        for _ in 0..30 {
            let xi: f64 = 0.1 + 0.8 * rng.gen::<f64>();
            let eta: f64 = 0.1 + 0.8 * rng.gen::<f64>();
            let md = patch.mapping_derivatives(xi, eta).unwrap();
            let f = |a: f64, b: f64| patch.map_point(a, b).unwrap();
            for d in 0..2 {
                let fd_xi = (f(xi + h, eta)[d] - f(xi - h, eta)[d]) / (2.0 * h);
                let fd_eta = (f(xi, eta + h)[d] - f(xi, eta - h)[d]) / (2.0 * h);
                assert!((md.jac[d][0] - fd_xi).abs() / fd_xi.abs().max(1.0) < 1e-6);
                assert!((md.jac[d][1] - fd_eta).abs() / fd_eta.abs().max(1.0) < 1e-6);
                let fd_xx = (f(xi + h, eta)[d] - 2.0 * f(xi, eta)[d] + f(xi - h, eta)[d]) / (h * h);
                let fd_ee = (f(xi, eta + h)[d] - 2.0 * f(xi, eta)[d] + f(xi, eta - h)[d]) / (h * h);
                assert!((md.h_geo[d][0] - fd_xx).abs() < 1e-2 * fd_xx.abs().max(1.0));
                assert!((md.h_geo[d][2] - fd_ee).abs() < 1e-2 * fd_ee.abs().max(1.0));
            }
        }
    }

    #[test]
    fn physical_derivatives_scale_law() {
        // Patch scaled by s: dR/dx = (1/s) dR/dxi, d2R/dx2 = (1/s^2) d2R/dxi2.
        let s = 3.0;
        let scaled = NurbsPatch::bilinear(
            [[0.0, 0.0], [s, 0.0], [0.0, s], [s, s]],
            3,
            3,
            2,
            2,
        )
        .unwrap();
        let reference = unit_square(3, 2);
        let pbs = scaled.physical_basis(0.3, 0.55).unwrap();
        let pbr = reference.basis(0.3, 0.55, 2).unwrap();
        for k in 0..pbs.r.len() {
            assert_abs_diff_eq!(pbs.grad[k][0], pbr.dr[k][0] / s, epsilon = 1e-10);
            assert_abs_diff_eq!(pbs.grad[k][1], pbr.dr[k][1] / s, epsilon = 1e-10);
            assert_abs_diff_eq!(pbs.hess[k][0], pbr.d2r[k][0] / (s * s), epsilon = 1e-9);
            assert_abs_diff_eq!(pbs.hess[k][2], pbr.d2r[k][2] / (s * s), epsilon = 1e-9);
        }
    }

    #[test]
    fn physical_derivatives_on_trapezoid_match_fd_through_inverse_map() {
        // FD oracle in physical space: numerically invert the map around a
        // base point and difference the basis values.
        let patch = trapezoid(3, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let invert = |x: [f64; 2], guess: (f64, f64)| -> (f64, f64) {
            let (mut xi, mut eta) = guess;
            for _ in 0..50 {
                let md = patch.mapping_derivatives(xi, eta).unwrap();
                let rx = x[0] - md.x[0];
                let ry = x[1] - md.x[1];
                let det = md.det_j;
                let dxi = (md.jac[1][1] * rx - md.jac[0][1] * ry) / det;
                let deta = (-md.jac[1][0] * rx + md.jac[0][0] * ry) / det;
                xi += dxi;
                eta += deta;
                if dxi.abs() + deta.abs() < 1e-14 {
                    break;
                }
            }
            (xi, eta)
        };
        for _ in 0..10 {
            let xi0: f64 = 0.2 + 0.6 * rng.gen::<f64>();
            let eta0: f64 = 0.2 + 0.6 * rng.gen::<f64>();
            let pb = patch.physical_basis(xi0, eta0).unwrap();
            let x0 = patch.map_point(xi0, eta0).unwrap();
            let h = 1e-5;
            let eval_at = |x: [f64; 2]| -> Vec<f64> {
                let (xi, eta) = invert(x, (xi0, eta0));
                patch.basis(xi, eta, 0).unwrap().r
            };
            let rp = eval_at([x0[0] + h, x0[1]]);
            let rm = eval_at([x0[0] - h, x0[1]]);
            let up = eval_at([x0[0], x0[1] + h]);
            let um = eval_at([x0[0], x0[1] - h]);
            let r0 = patch.basis(xi0, eta0, 0).unwrap().r;
            for k in 0..pb.r.len() {
                let fd_x = (rp[k] - rm[k]) / (2.0 * h);
                let fd_y = (up[k] - um[k]) / (2.0 * h);
                assert!((pb.grad[k][0] - fd_x).abs() / fd_x.abs().max(1.0) < 1e-5);
                assert!((pb.grad[k][1] - fd_y).abs() / fd_y.abs().max(1.0) < 1e-5);
                let fd_xx = (rp[k] - 2.0 * r0[k] + rm[k]) / (h * h);
                let fd_yy = (up[k] - 2.0 * r0[k] + um[k]) / (h * h);
                assert!((pb.hess[k][0] - fd_xx).abs() / fd_xx.abs().max(1.0) < 1e-4);
                assert!((pb.hess[k][2] - fd_yy).abs() / fd_yy.abs().max(1.0) < 1e-4);
            }
        }
    }

    #[test]
    fn outward_normals() {
        let patch = unit_square(2, 2);
        let (_, n_s, _) = patch.edge_frame(PatchEdge::South, 0.5).unwrap();
        let (_, n_e, _) = patch.edge_frame(PatchEdge::East, 0.5).unwrap();
        let (_, n_n, _) = patch.edge_frame(PatchEdge::North, 0.5).unwrap();
        let (_, n_w, _) = patch.edge_frame(PatchEdge::West, 0.5).unwrap();
        assert_abs_diff_eq!(n_s[1], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(n_e[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(n_n[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(n_w[0], -1.0, epsilon = 1e-12);
    }
}
