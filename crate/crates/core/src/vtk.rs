//! Legacy-ASCII VTK unstructured-grid export of solved fields, plus a
//! small independent reader used to verify round-trips.

use crate::error::{FlexoError, Result};
use crate::mesh::MultiPatchMesh;
use crate::solve::{sample_field, Solution};

/// Serializes the solution on each patch as an (s x s)-quad sampling grid.
/// Point data: `u` (2-vector padded to 3), `phi`, `eps11`, `E2`.
pub fn vtk_string(mesh: &MultiPatchMesh, sol: &Solution, sampling: usize) -> Result<String> {
    if sampling == 0 {
        return Err(FlexoError::InvalidArgument(
            "VTK sampling density must be >= 1".into(),
        ));
    }
    let s = sampling;
    let pts_per_patch = (s + 1) * (s + 1);
    let n_points = mesh.patches.len() * pts_per_patch;
    let n_cells = mesh.patches.len() * s * s;

    let mut points = String::new();
    let mut u = String::new();
    let mut phi = String::new();
    let mut eps11 = String::new();
    let mut e2 = String::new();
    for p in 0..mesh.patches.len() {
        for j in 0..=s {
            for i in 0..=s {
                let xi = i as f64 / s as f64;
                let eta = j as f64 / s as f64;
                let f = sample_field(mesh, sol, p, xi, eta)?;
                points.push_str(&format!("{:.17e} {:.17e} 0.0\n", f.x[0], f.x[1]));
                u.push_str(&format!("{:.17e} {:.17e} 0.0\n", f.u[0], f.u[1]));
                phi.push_str(&format!("{:.17e}\n", f.phi));
                eps11.push_str(&format!("{:.17e}\n", f.eps[0]));
                e2.push_str(&format!("{:.17e}\n", f.e_field[1]));
            }
        }
    }

    let mut cells = String::new();
    for p in 0..mesh.patches.len() {
        let base = p * pts_per_patch;
        for j in 0..s {
            for i in 0..s {
                let a = base + j * (s + 1) + i;
                cells.push_str(&format!("4 {} {} {} {}\n", a, a + 1, a + s + 2, a + s + 1));
            }
        }
    }

    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str("coupled electromechanical field output\n");
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    out.push_str(&format!("POINTS {n_points} double\n"));
    out.push_str(&points);
    out.push_str(&format!("CELLS {n_cells} {}\n", 5 * n_cells));
    out.push_str(&cells);
    out.push_str(&format!("CELL_TYPES {n_cells}\n"));
    for _ in 0..n_cells {
        out.push_str("9\n");
    }
    out.push_str(&format!("POINT_DATA {n_points}\n"));
    out.push_str("VECTORS u double\n");
    out.push_str(&u);
    out.push_str("SCALARS phi double 1\nLOOKUP_TABLE default\n");
    out.push_str(&phi);
    out.push_str("SCALARS eps11 double 1\nLOOKUP_TABLE default\n");
    out.push_str(&eps11);
    out.push_str("SCALARS E2 double 1\nLOOKUP_TABLE default\n");
    out.push_str(&e2);
    Ok(out)
}

pub fn write_vtk(
    mesh: &MultiPatchMesh,
    sol: &Solution,
    sampling: usize,
    path: &std::path::Path,
) -> Result<()> {
    let text = vtk_string(mesh, sol, sampling)?;
    std::fs::write(path, text).map_err(FlexoError::Io)
}

// ---------------------------------------------------------------------------
// Independent reader (validation only)
// ---------------------------------------------------------------------------

/// Minimal legacy-VTK reader: token-scans the header keywords and pulls
/// out the point coordinates and named point-data arrays.
#[derive(Debug, Default)]
pub struct VtkData {
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<[usize; 4]>,
    pub vectors: Vec<(String, Vec<[f64; 3]>)>,
    pub scalars: Vec<(String, Vec<f64>)>,
}

pub fn parse_vtk(text: &str) -> Result<VtkData> {
    let mut tokens = text
        .lines()
        .skip(2) // comment line may contain arbitrary words
        .flat_map(|l| l.split_whitespace())
        .peekable();
    let mut data = VtkData::default();
    let bad =
        |what: &str| FlexoError::InvalidArgument(format!("malformed VTK stream near {what}"));

    let mut n_points = 0usize;
    while let Some(tok) = tokens.next() {
        match tok {
            "ASCII" | "DATASET" | "UNSTRUCTURED_GRID" => {}
            "POINTS" => {
                n_points = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| bad("POINTS"))?;
                tokens.next(); // dtype
                for _ in 0..n_points {
                    let mut p = [0.0; 3];
                    for c in p.iter_mut() {
                        *c = tokens
                            .next()
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| bad("POINTS data"))?;
                    }
                    data.points.push(p);
                }
            }
            "CELLS" => {
                let n: usize = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| bad("CELLS"))?;
                tokens.next(); // total size
                for _ in 0..n {
                    let k: usize = tokens
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| bad("cell arity"))?;
                    if k != 4 {
                        return Err(bad("non-quad cell"));
                    }
                    let mut c = [0usize; 4];
                    for v in c.iter_mut() {
                        *v = tokens
                            .next()
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| bad("cell index"))?;
                    }
                    data.cells.push(c);
                }
            }
            "CELL_TYPES" => {
                let n: usize = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| bad("CELL_TYPES"))?;
                for _ in 0..n {
                    tokens.next();
                }
            }
            "POINT_DATA" => {
                let n: usize = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| bad("POINT_DATA"))?;
                if n != n_points {
                    return Err(bad("POINT_DATA count"));
                }
            }
            "VECTORS" => {
                let name = tokens.next().ok_or_else(|| bad("VECTORS name"))?.to_string();
                tokens.next(); // dtype
                let mut arr = Vec::with_capacity(n_points);
                for _ in 0..n_points {
                    let mut v = [0.0; 3];
                    for c in v.iter_mut() {
                        *c = tokens
                            .next()
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| bad("vector data"))?;
                    }
                    arr.push(v);
                }
                data.vectors.push((name, arr));
            }
            "SCALARS" => {
                let name = tokens.next().ok_or_else(|| bad("SCALARS name"))?.to_string();
                tokens.next(); // dtype
                // optional component count, then LOOKUP_TABLE <name>
                while let Some(&t) = tokens.peek() {
                    if t == "LOOKUP_TABLE" {
                        tokens.next();
                        tokens.next();
                        break;
                    }
                    tokens.next();
                }
                let mut arr = Vec::with_capacity(n_points);
                for _ in 0..n_points {
                    arr.push(
                        tokens
                            .next()
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| bad("scalar data"))?,
                    );
                }
                data.scalars.push((name, arr));
            }
            _ => return Err(bad(tok)),
        }
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, BoundarySpec, DgSettings, DirichletBc, DofKind, Region};
    use crate::material::MaterialSet;
    use crate::patch::NurbsPatch;
    use crate::solve::solve;

    fn solved_unit_square() -> (MultiPatchMesh, crate::solve::Solution, MaterialSet) {
        let mesh = MultiPatchMesh::build(vec![NurbsPatch::bilinear(
            [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
            2,
            2,
            2,
            2,
        )
        .unwrap()])
        .unwrap();
        let mat = MaterialSet::default_study();
        let bc = BoundarySpec {
            dirichlet: vec![
                DirichletBc {
                    region: Region::Left,
                    dof: DofKind::Ux,
                    value: 0.0,
                },
                DirichletBc {
                    region: Region::Left,
                    dof: DofKind::Uy,
                    value: 0.0,
                },
                DirichletBc {
                    region: Region::Bottom,
                    dof: DofKind::Phi,
                    value: 0.0,
                },
                DirichletBc {
                    region: Region::Top,
                    dof: DofKind::Phi,
                    value: 5.0,
                },
            ],
            ..Default::default()
        };
        let sys = assemble(&mesh, &mat, &bc, &DgSettings::default()).unwrap();
        let sol = solve(&sys).unwrap();
        (mesh, sol, mat)
    }

    #[test]
    fn sampling_two_gives_four_quads_nine_points() {
        let (mesh, sol, _) = solved_unit_square();
        let text = vtk_string(&mesh, &sol, 2).unwrap();
        let data = parse_vtk(&text).unwrap();
        assert_eq!(data.points.len(), 9);
        assert_eq!(data.cells.len(), 4);
    }

    #[test]
    fn round_trip_preserves_fields() {
        let (mesh, sol, _) = solved_unit_square();
        let text = vtk_string(&mesh, &sol, 3).unwrap();
        let data = parse_vtk(&text).unwrap();
        assert_eq!(data.vectors.len(), 1);
        assert_eq!(data.scalars.len(), 3);
        assert_eq!(data.vectors[0].0, "u");
        let names: Vec<&str> = data.scalars.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["phi", "eps11", "E2"]);
        // Compare against direct resampling.
        let s = 3;
        let mut k = 0;
        for j in 0..=s {
            for i in 0..=s {
                let f = crate::solve::sample_field(
                    &mesh,
                    &sol,
                    0,
                    i as f64 / s as f64,
                    j as f64 / s as f64,
                )
                .unwrap();
                assert!((data.points[k][0] - f.x[0]).abs() < 1e-7);
                assert!((data.vectors[0].1[k][1] - f.u[1]).abs() < 1e-7 * f.u[1].abs().max(1e-30));
                assert!((data.scalars[0].1[k] - f.phi).abs() < 1e-7 * f.phi.abs().max(1e-30));
                assert!((data.scalars[2].1[k] - f.e_field[1]).abs() < 1e-7);
                k += 1;
            }
        }
    }

    #[test]
    fn grounded_boundary_phi_exact_zero() {
        let (mesh, sol, _) = solved_unit_square();
        let text = vtk_string(&mesh, &sol, 4).unwrap();
        let data = parse_vtk(&text).unwrap();
        let phi = &data.scalars[0].1;
        for (p, &v) in data.points.iter().zip(phi.iter()) {
            if p[1].abs() < 1e-12 {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn zero_sampling_rejected() {
        let (mesh, sol, _) = solved_unit_square();
        assert!(vtk_string(&mesh, &sol, 0).is_err());
    }
}
