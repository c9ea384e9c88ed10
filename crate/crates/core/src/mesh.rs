//! Multi-patch mesh: shared-node identification across patch boundaries,
//! interior interface-edge detection, and element bookkeeping.

use crate::error::{FlexoError, Result};
use crate::patch::{NurbsPatch, PatchEdge};
use std::collections::HashMap;

/// An interior edge shared by two patches, with the orientation map
/// between the two edge parameterizations.
#[derive(Debug, Clone)]
pub struct InterfaceEdge {
    pub left_patch: usize,
    pub left_edge: PatchEdge,
    pub right_patch: usize,
    pub right_edge: PatchEdge,
    /// Right edge parameter for left parameter t: t if false, 1 - t if true.
    pub reversed: bool,
    /// Characteristic element size along the interface (m).
    pub h: f64,
}

impl InterfaceEdge {
    pub fn map_param(&self, t: f64) -> f64 {
        if self.reversed {
            1.0 - t
        } else {
            t
        }
    }
}

/// A knot-span element of one patch.
#[derive(Debug, Clone, Copy)]
pub struct Element {
    pub patch: usize,
    pub xi_range: (f64, f64),
    pub eta_range: (f64, f64),
}

/// A collection of patches with merged control-point identification,
/// detected interior interfaces, and global node numbering.
#[derive(Debug, Clone)]
pub struct MultiPatchMesh {
    pub patches: Vec<NurbsPatch>,
    /// Per patch, per control-point index: global node id.
    pub node_of: Vec<Vec<usize>>,
    pub node_coords: Vec<[f64; 2]>,
    pub interfaces: Vec<InterfaceEdge>,
    /// Patch edges on the domain boundary.
    pub boundary_edges: Vec<(usize, PatchEdge)>,
    pub bbox: ([f64; 2], [f64; 2]),
}

const EDGE_SAMPLES: usize = 9;

impl MultiPatchMesh {
    /// Builds the mesh with the default tolerance 1e-9 x bbox diagonal.
    pub fn build(patches: Vec<NurbsPatch>) -> Result<Self> {
        let bbox = bounding_box(&patches);
        let diag = ((bbox.1[0] - bbox.0[0]).powi(2) + (bbox.1[1] - bbox.0[1]).powi(2)).sqrt();
        Self::build_with_tol(patches, 1e-9 * diag.max(f64::MIN_POSITIVE))
    }

    pub fn build_with_tol(patches: Vec<NurbsPatch>, tol: f64) -> Result<Self> {
        if patches.is_empty() {
            return Err(FlexoError::InvalidArgument("no patches".into()));
        }
        let bbox = bounding_box(&patches);
        let (node_of, node_coords) = merge_nodes(&patches, tol);
        let interfaces = detect_interfaces(&patches, tol)?;
        let mut interface_set: HashMap<(usize, PatchEdge), ()> = HashMap::new();
        for it in &interfaces {
            interface_set.insert((it.left_patch, it.left_edge), ());
            interface_set.insert((it.right_patch, it.right_edge), ());
        }
        let mut boundary_edges = Vec::new();
        for (p, _) in patches.iter().enumerate() {
            for e in PatchEdge::ALL {
                if !interface_set.contains_key(&(p, e)) {
                    boundary_edges.push((p, e));
                }
            }
        }
        Ok(Self {
            patches,
            node_of,
            node_coords,
            interfaces,
            boundary_edges,
            bbox,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.node_coords.len()
    }

    /// 2 mechanical + 1 electrical DOF per global node.
    pub fn num_dofs(&self) -> usize {
        3 * self.num_nodes()
    }

    pub fn elements(&self) -> Vec<Element> {
        let mut out = Vec::new();
        for (p, patch) in self.patches.iter().enumerate() {
            for xs in patch.spec.kv_xi.spans() {
                for es in patch.spec.kv_eta.spans() {
                    out.push(Element {
                        patch: p,
                        xi_range: xs,
                        eta_range: es,
                    });
                }
            }
        }
        out
    }

    /// Total physical area by quadrature of det J.
    pub fn area(&self) -> Result<f64> {
        let mut total = 0.0;
        for el in self.elements() {
            let patch = &self.patches[el.patch];
            let p = patch.spec.kv_xi.degree;
            let q = patch.spec.kv_eta.degree;
            let qr_x = crate::quadrature::gauss_rule(p + 1)?;
            let qr_y = crate::quadrature::gauss_rule(q + 1)?;
            let (xa, xb) = el.xi_range;
            let (ea, eb) = el.eta_range;
            for (gi, &gx) in qr_x.points.iter().enumerate() {
                for (gj, &gy) in qr_y.points.iter().enumerate() {
                    let xi = xa + (gx + 1.0) * 0.5 * (xb - xa);
                    let eta = ea + (gy + 1.0) * 0.5 * (eb - ea);
                    let md = patch.mapping_derivatives(xi, eta)?;
                    total += md.det_j
                        * qr_x.weights[gi]
                        * qr_y.weights[gj]
                        * 0.25
                        * (xb - xa)
                        * (eb - ea);
                }
            }
        }
        Ok(total)
    }

    /// Global node ids whose coordinates satisfy `pred`.
    pub fn nodes_where(&self, pred: impl Fn(&[f64; 2]) -> bool) -> Vec<usize> {
        self.node_coords
            .iter()
            .enumerate()
            .filter(|(_, c)| pred(c))
            .map(|(i, _)| i)
            .collect()
    }
}

fn bounding_box(patches: &[NurbsPatch]) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in patches {
        for c in &p.ctrl {
            for d in 0..2 {
                lo[d] = lo[d].min(c[d]);
                hi[d] = hi[d].max(c[d]);
            }
        }
    }
    (lo, hi)
}

/// Merges geometrically coincident control points into shared global nodes
/// using union-find over a spatial hash grid.
fn merge_nodes(patches: &[NurbsPatch], tol: f64) -> (Vec<Vec<usize>>, Vec<[f64; 2]>) {
    let mut all: Vec<[f64; 2]> = Vec::new();
    let mut offsets = Vec::with_capacity(patches.len());
    for p in patches {
        offsets.push(all.len());
        all.extend_from_slice(&p.ctrl);
    }
    let n = all.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        let mut root = i;
        while parent[root] != root {
            root = parent[root];
        }
        let mut cur = i;
        while parent[cur] != root {
            let next = parent[cur];
            parent[cur] = root;
            cur = next;
        }
        root
    }
    let cell = tol.max(f64::MIN_POSITIVE) * 4.0;
    let key = |c: &[f64; 2]| -> (i64, i64) {
        ((c[0] / cell).floor() as i64, (c[1] / cell).floor() as i64)
    };
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, c) in all.iter().enumerate() {
        grid.entry(key(c)).or_default().push(i);
    }
    for (i, c) in all.iter().enumerate() {
        let (kx, ky) = key(c);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(cands) = grid.get(&(kx + dx, ky + dy)) {
                    for &j in cands {
                        if j <= i {
                            continue;
                        }
                        let d = ((all[j][0] - c[0]).powi(2) + (all[j][1] - c[1]).powi(2)).sqrt();
                        if d <= tol {
                            let ri = find(&mut parent, i);
                            let rj = find(&mut parent, j);
                            if ri != rj {
                                parent[ri.max(rj)] = ri.min(rj);
                            }
                        }
                    }
                }
            }
        }
    }
    // Compress roots to contiguous node ids in first-appearance order so the
    // numbering is independent of merge order.
    let mut node_id: HashMap<usize, usize> = HashMap::new();
    let mut coords = Vec::new();
    let mut node_of = Vec::with_capacity(patches.len());
    for (pi, p) in patches.iter().enumerate() {
        let mut ids = Vec::with_capacity(p.ctrl.len());
        for k in 0..p.ctrl.len() {
            let root = find(&mut parent, offsets[pi] + k);
            let id = *node_id.entry(root).or_insert_with(|| {
                coords.push(all[root]);
                coords.len() - 1
            });
            ids.push(id);
        }
        node_of.push(ids);
    }
    (node_of, coords)
}

/// Finds every pair of geometrically coincident patch edges; partially
/// overlapping edges are rejected as nonconforming.
pub fn detect_interfaces(patches: &[NurbsPatch], tol: f64) -> Result<Vec<InterfaceEdge>> {
    struct EdgeInfo {
        patch: usize,
        edge: PatchEdge,
        samples: Vec<[f64; 2]>,
        length: f64,
        n_elements: usize,
    }
    let mut edges = Vec::new();
    for (pi, p) in patches.iter().enumerate() {
        for e in PatchEdge::ALL {
            let mut samples = Vec::with_capacity(EDGE_SAMPLES);
            for s in 0..EDGE_SAMPLES {
                let t = s as f64 / (EDGE_SAMPLES - 1) as f64;
                samples.push(p.edge_point(e, t)?);
            }
            let length: f64 = samples
                .windows(2)
                .map(|w| ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt())
                .sum();
            edges.push(EdgeInfo {
                patch: pi,
                edge: e,
                samples,
                length,
                n_elements: p.edge_spans(e).len(),
            });
        }
    }

    let dist = |a: &[f64; 2], b: &[f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let mut matched = vec![false; edges.len()];
    let mut out = Vec::new();
    for i in 0..edges.len() {
        for j in i + 1..edges.len() {
            if edges[i].patch == edges[j].patch {
                continue;
            }
            let (a, b) = (&edges[i], &edges[j]);
            let forward = (0..EDGE_SAMPLES)
                .map(|k| dist(&a.samples[k], &b.samples[k]))
                .fold(0.0f64, f64::max);
            let backward = (0..EDGE_SAMPLES)
                .map(|k| dist(&a.samples[k], &b.samples[EDGE_SAMPLES - 1 - k]))
                .fold(0.0f64, f64::max);
            let coincide = forward.min(backward) < tol;
            if coincide {
                if matched[i] || matched[j] {
                    return Err(FlexoError::NonconformingInterface(format!(
                        "edge of patch {} matches more than one neighbor",
                        a.patch
                    )));
                }
                matched[i] = true;
                matched[j] = true;
                let h = 0.5 * (a.length / a.n_elements as f64 + b.length / b.n_elements as f64);
                out.push(InterfaceEdge {
                    left_patch: a.patch,
                    left_edge: a.edge,
                    right_patch: b.patch,
                    right_edge: b.edge,
                    reversed: backward < forward,
                    h,
                });
            }
        }
    }
    // Partial overlaps: an unmatched edge whose interior touches another
    // patch's edge trace is not supported.
    for i in 0..edges.len() {
        if matched[i] {
            continue;
        }
        for j in 0..edges.len() {
            if i == j || edges[i].patch == edges[j].patch {
                continue;
            }
            let interior = &edges[i].samples[1..EDGE_SAMPLES - 1];
            let touches = interior.iter().any(|p| {
                edges[j]
                    .samples
                    .windows(2)
                    .any(|seg| point_segment_distance(p, &seg[0], &seg[1]) < tol)
            });
            if touches {
                return Err(FlexoError::NonconformingInterface(format!(
                    "patch {} edge partially overlaps patch {} edge",
                    edges[i].patch, edges[j].patch
                )));
            }
        }
    }
    Ok(out)
}

fn point_segment_distance(p: &[f64; 2], a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let c = [a[0] + t * ab[0], a[1] + t * ab[1]];
    ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt()
}
