//! Univariate B-spline basis evaluation with derivatives, open knot vector
//! construction, and per-element Bezier extraction operators.

use crate::error::{FlexoError, Result};
use nalgebra::DMatrix;

/// An open (clamped) knot vector together with the polynomial degree.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    pub degree: usize,
    pub knots: Vec<f64>,
}

impl KnotVector {
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        if degree < 1 {
            return Err(FlexoError::InvalidArgument("degree must be >= 1".into()));
        }
        if knots.len() < 2 * (degree + 1) {
            return Err(FlexoError::InvalidArgument(
                "knot vector too short for degree".into(),
            ));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(FlexoError::InvalidArgument("knots must be non-decreasing".into()));
        }
        let first = knots[0];
        let last = *knots.last().unwrap();
        if knots[..=degree].iter().any(|&k| k != first)
            || knots[knots.len() - degree - 1..].iter().any(|&k| k != last)
        {
            return Err(FlexoError::InvalidArgument(
                "knot vector must be open (clamped)".into(),
            ));
        }
        Ok(Self { degree, knots })
    }

    /// Number of basis functions.
    pub fn num_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Distinct knot spans as (start, end) pairs, zero-length spans skipped.
    pub fn spans(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for w in self.knots.windows(2) {
            if w[1] > w[0] {
                out.push((w[0], w[1]));
            }
        }
        out
    }

    pub fn num_elements(&self) -> usize {
        self.spans().len()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    /// Index of the knot span containing `xi` (left-closed; the last
    /// nonempty span at the right endpoint).
    pub fn find_span(&self, xi: f64) -> Result<usize> {
        let (lo, hi) = self.domain();
        if xi < lo || xi > hi {
            return Err(FlexoError::OutOfDomain(format!(
                "xi = {xi} outside knot range [{lo}, {hi}]"
            )));
        }
        let p = self.degree;
        let n = self.num_basis();
        if xi >= self.knots[n] {
            // Right endpoint: last span with nonzero width.
            let mut s = n - 1;
            while self.knots[s + 1] <= self.knots[s] {
                s -= 1;
            }
            return Ok(s);
        }
        let mut lo_i = p;
        let mut hi_i = n;
        while hi_i - lo_i > 1 {
            let mid = (lo_i + hi_i) / 2;
            if xi < self.knots[mid] {
                hi_i = mid;
            } else {
                lo_i = mid;
            }
        }
        Ok(lo_i)
    }

    /// Greville abscissae (knot averages), one per basis function.
    pub fn greville(&self) -> Vec<f64> {
        let p = self.degree;
        (0..self.num_basis())
            .map(|i| self.knots[i + 1..=i + p].iter().sum::<f64>() / p as f64)
            .collect()
    }
}

/// Open uniform knot vector with `n_ctrl - degree - 1` equal interior
/// intervals over [0, 1].
pub fn make_open_knot_vector(degree: usize, n_ctrl: usize) -> Result<KnotVector> {
    if n_ctrl < degree + 1 {
        return Err(FlexoError::InvalidArgument(format!(
            "n_ctrl = {n_ctrl} too small for degree {degree}"
        )));
    }
    let n_spans = n_ctrl - degree;
    let mut knots = vec![0.0; degree + 1];
    for i in 1..n_spans {
        knots.push(i as f64 / n_spans as f64);
    }
    knots.extend(std::iter::repeat(1.0).take(degree + 1));
    KnotVector::new(degree, knots)
}

/// Nonzero basis values and parametric derivatives on one span.
#[derive(Debug, Clone)]
pub struct BasisEval {
    /// Knot span index; local function k corresponds to global index
    /// `span_index - degree + k`.
    pub span_index: usize,
    pub values: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl BasisEval {
    /// Global index of the first nonzero basis function.
    pub fn first_func(&self, degree: usize) -> usize {
        self.span_index - degree
    }
}

/// Evaluates the `degree + 1` nonzero B-spline basis functions at `xi`
/// with up to `n_derivs <= 2` parametric derivatives (Cox-de Boor
/// recursion with the standard derivative triangle).
pub fn bspline_basis(kv: &KnotVector, xi: f64, n_derivs: usize) -> Result<BasisEval> {
    let span = kv.find_span(xi)?;
    let p = kv.degree;
    let u = &kv.knots;

    // ndu[j][r]: basis values and knot differences of the recursion triangle.
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = xi - u[span + 1 - j];
        right[j] = u[span + j] - xi;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    let values: Vec<f64> = (0..=p).map(|j| ndu[j][p]).collect();
    let mut ders = vec![vec![0.0; p + 1]; n_derivs.min(2) + 1];
    ders[0].copy_from_slice(&values);

    let nd = n_derivs.min(2).min(p);
    let mut a = vec![vec![0.0; p + 1]; 2];
    for r in 0..=p {
        let mut s1 = 0;
        let mut s2 = 1;
        a[0][0] = 1.0;
        for k in 1..=nd {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
            for j in j1..=j2 {
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][(rk + j as isize) as usize];
                d += a[s2][j] * ndu[(rk + j as isize) as usize][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    // Multiply by p!/(p-k)!.
    let mut factor = p as f64;
    for k in 1..=nd {
        for r in 0..=p {
            ders[k][r] *= factor;
        }
        factor *= (p - k) as f64;
    }

    let d1 = if n_derivs >= 1 { ders.get(1).cloned().unwrap_or(vec![0.0; p + 1]) } else { vec![0.0; p + 1] };
    let d2 = if n_derivs >= 2 { ders.get(2).cloned().unwrap_or(vec![0.0; p + 1]) } else { vec![0.0; p + 1] };

    Ok(BasisEval {
        span_index: span,
        values,
        d1,
        d2,
    })
}

/// Per-element Bezier extraction operators C_e mapping Bernstein basis
/// values on the element to the nonzero B-spline basis values.
#[derive(Debug, Clone)]
pub struct BezierExtraction {
    /// One (p+1) x (p+1) operator per nonzero knot span.
    pub operators: Vec<DMatrix<f64>>,
}

/// Computes extraction operators by successive knot insertion until every
/// interior knot has multiplicity p (Borden-style algorithm).
pub fn bezier_extract(kv: &KnotVector) -> Result<BezierExtraction> {
    let p = kv.degree;
    let u = &kv.knots;
    let m = u.len();
    let n_el = kv.num_elements();
    let mut ops: Vec<DMatrix<f64>> = Vec::with_capacity(n_el);

    let mut c = DMatrix::<f64>::identity(p + 1, p + 1);
    let mut a = p;
    let mut b = a + 1;
    let mut alphas = vec![0.0; p + 1];

    while b < m - 1 {
        let mut c_next = DMatrix::<f64>::identity(p + 1, p + 1);
        let i = b;
        let mut bb = b;
        while bb < m - 1 && u[bb + 1] == u[bb] {
            bb += 1;
        }
        let mult = bb - i + 1;
        let b_knot = u[bb];
        if mult < p {
            let numer = b_knot - u[a];
            for j in (mult + 1..=p).rev() {
                alphas[j - mult - 1] = numer / (u[a + j] - u[a]);
            }
            let r = p - mult;
            for j in 1..=r {
                let save = r - j;
                let s = mult + j;
                for k in (s..=p).rev() {
                    let alpha = alphas[k - s];
                    for row in 0..p + 1 {
                        c[(row, k)] = alpha * c[(row, k)] + (1.0 - alpha) * c[(row, k - 1)];
                    }
                }
                if bb < m - 1 {
                    // Overlapping coefficients of the next operator.
                    for row in 0..=j {
                        c_next[(save + row, save)] = c[(p - j + row, p)];
                    }
                }
            }
        }
        ops.push(c.clone());
        if bb < m - 1 {
            c = c_next;
            a = bb;
            b = bb + 1;
        } else {
            break;
        }
    }
    if ops.is_empty() {
        ops.push(c);
    }
    if ops.len() != n_el {
        return Err(FlexoError::InvalidArgument(format!(
            "extraction produced {} operators for {} elements",
            ops.len(),
            n_el
        )));
    }
    Ok(BezierExtraction { operators: ops })
}

/// Bernstein basis of degree p on [0, 1], with derivatives up to 2 in the
/// local coordinate. Rows: value, d1, d2; length p+1 each.
pub fn bernstein_basis(p: usize, t: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = p + 1;
    let mut b = vec![0.0; n];
    b[0] = 1.0;
    for j in 1..n {
        let mut saved = 0.0;
        for k in 0..j {
            let temp = b[k];
            b[k] = saved + (1.0 - t) * temp;
            saved = t * temp;
        }
        b[j] = saved;
    }
    let bern = |deg: usize, t: f64| -> Vec<f64> {
        let mut v = vec![0.0; deg + 1];
        v[0] = 1.0;
        for j in 1..=deg {
            let mut saved = 0.0;
            for k in 0..j {
                let temp = v[k];
                v[k] = saved + (1.0 - t) * temp;
                saved = t * temp;
            }
            v[j] = saved;
        }
        v
    };
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    if p >= 1 {
        let lower = bern(p - 1, t);
        for i in 0..n {
            let a = if i >= 1 { lower[i - 1] } else { 0.0 };
            let c = if i <= p - 1 { lower[i] } else { 0.0 };
            d1[i] = p as f64 * (a - c);
        }
    }
    if p >= 2 {
        let lower2 = bern(p - 2, t);
        let get = |v: &[f64], i: isize| -> f64 {
            if i < 0 || i as usize >= v.len() {
                0.0
            } else {
                v[i as usize]
            }
        };
        for i in 0..n {
            let ii = i as isize;
            d2[i] = (p * (p - 1)) as f64
                * (get(&lower2, ii - 2) - 2.0 * get(&lower2, ii - 1) + get(&lower2, ii));
        }
    }
    (b, d1, d2)
}
