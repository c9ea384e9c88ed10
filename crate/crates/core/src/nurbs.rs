//! Bivariate tensor-product NURBS basis evaluation with first and second
//! parametric derivatives (rational quotient rule).

use crate::error::{FlexoError, Result};
use crate::spline::{bspline_basis, KnotVector};

/// Degrees and knot vectors of a tensor-product basis.
#[derive(Debug, Clone)]
pub struct PatchBasisSpec {
    pub kv_xi: KnotVector,
    pub kv_eta: KnotVector,
}

impl PatchBasisSpec {
    pub fn num_basis(&self) -> (usize, usize) {
        (self.kv_xi.num_basis(), self.kv_eta.num_basis())
    }
}

/// Rational basis values over the local tensor-product support.
///
/// Function ordering is row-major over the local grid: local index
/// `k = a * (q+1) + b` pairs xi-function `a` with eta-function `b`.
#[derive(Debug, Clone)]
pub struct NurbsBasis2D {
    /// Global (i, j) grid index of the first local function.
    pub first: (usize, usize),
    pub r: Vec<f64>,
    /// d/dxi and d/deta per function.
    pub dr: Vec<[f64; 2]>,
    /// (xi xi, xi eta, eta eta) per function.
    pub d2r: Vec<[f64; 3]>,
}

impl NurbsBasis2D {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Global grid indices (i, j) of each local function, same ordering as
    /// the value arrays.
    pub fn global_indices(&self, spec: &PatchBasisSpec) -> Vec<(usize, usize)> {
        let q = spec.kv_eta.degree;
        let n = self.r.len();
        let mut out = Vec::with_capacity(n);
        let per = q + 1;
        for k in 0..n {
            out.push((self.first.0 + k / per, self.first.1 + k % per));
        }
        out
    }
}

/// Evaluates the nonzero rational basis functions at (xi, eta).
///
/// `weights` is a flattened n_xi x n_eta grid in row-major order
/// (index `i * n_eta + j`).
pub fn nurbs_basis_2d(
    spec: &PatchBasisSpec,
    weights: &[f64],
    xi: f64,
    eta: f64,
    n_derivs: usize,
) -> Result<NurbsBasis2D> {
    let (nx, ny) = spec.num_basis();
    if weights.len() != nx * ny {
        return Err(FlexoError::InvalidArgument(format!(
            "expected {} weights, got {}",
            nx * ny,
            weights.len()
        )));
    }
    if weights.iter().any(|&w| w <= 0.0) {
        return Err(FlexoError::InvalidArgument(
            "weights must be strictly positive".into(),
        ));
    }
    let bx = bspline_basis(&spec.kv_xi, xi, n_derivs)?;
    let by = bspline_basis(&spec.kv_eta, eta, n_derivs)?;
    let p = spec.kv_xi.degree;
    let q = spec.kv_eta.degree;
    let i0 = bx.first_func(p);
    let j0 = by.first_func(q);
    let n_loc = (p + 1) * (q + 1);

    // Weighted numerators A = N M w with derivatives, plus the weight
    // function W and its derivatives.
    let mut a = vec![0.0; n_loc];
    let mut a_xi = vec![0.0; n_loc];
    let mut a_eta = vec![0.0; n_loc];
    let mut a_xx = vec![0.0; n_loc];
    let mut a_xe = vec![0.0; n_loc];
    let mut a_ee = vec![0.0; n_loc];
    let (mut w, mut w_xi, mut w_eta, mut w_xx, mut w_xe, mut w_ee) =
        (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);

    for ai in 0..=p {
        for bj in 0..=q {
            let k = ai * (q + 1) + bj;
            let wt = weights[(i0 + ai) * ny + (j0 + bj)];
            let n = bx.values[ai];
            let m = by.values[bj];
            let n1 = bx.d1[ai];
            let m1 = by.d1[bj];
            let n2 = bx.d2[ai];
            let m2 = by.d2[bj];
            a[k] = wt * n * m;
            a_xi[k] = wt * n1 * m;
            a_eta[k] = wt * n * m1;
            a_xx[k] = wt * n2 * m;
            a_xe[k] = wt * n1 * m1;
            a_ee[k] = wt * n * m2;
            w += a[k];
            w_xi += a_xi[k];
            w_eta += a_eta[k];
            w_xx += a_xx[k];
            w_xe += a_xe[k];
            w_ee += a_ee[k];
        }
    }

    let mut r = vec![0.0; n_loc];
    let mut dr = vec![[0.0; 2]; n_loc];
    let mut d2r = vec![[0.0; 3]; n_loc];
    for k in 0..n_loc {
        r[k] = a[k] / w;
        if n_derivs >= 1 {
            dr[k][0] = (a_xi[k] - r[k] * w_xi) / w;
            dr[k][1] = (a_eta[k] - r[k] * w_eta) / w;
        }
        if n_derivs >= 2 {
            d2r[k][0] = (a_xx[k] - 2.0 * dr[k][0] * w_xi - r[k] * w_xx) / w;
            d2r[k][1] = (a_xe[k] - dr[k][0] * w_eta - dr[k][1] * w_xi - r[k] * w_xe) / w;
            d2r[k][2] = (a_ee[k] - 2.0 * dr[k][1] * w_eta - r[k] * w_ee) / w;
        }
    }

    Ok(NurbsBasis2D {
        first: (i0, j0),
        r,
        dr,
        d2r,
    })
}
