//! Periodic simplicial meshes of a box.
//!
//! Meshes are built on a structured vertex lattice with `N_k + 1` vertices
//! per direction, so vertices on opposite box faces are distinct entries.
//! Periodicity lives entirely in the interface table: every element facet is
//! paired with exactly one other facet, together with the vertex permutation
//! and the translation between the two copies.
//!
//! Facet `g` of an element is the facet opposite its local vertex `g`, with
//! the remaining vertices kept in increasing local order.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::physmap::simplex_volume;

#[derive(Debug, Clone, PartialEq)]
pub struct Interface {
    pub elem_a: usize,
    pub facet_a: usize,
    pub elem_b: usize,
    pub facet_b: usize,
    /// Facet vertex `p` of side A is facet vertex `perm[p]` of side B.
    pub perm: Vec<usize>,
    /// `x_B = x_A + shift` for matched vertices.
    pub shift: Vec<f64>,
}

/// The element across one facet, seen from the other side.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub elem: usize,
    pub facet: usize,
    /// Own facet vertex `p` is neighbor facet vertex `perm[p]`.
    pub perm: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub dim: usize,
    /// Side lengths of the periodic box `[0, L_1] x ... x [0, L_d]`.
    pub box_size: Vec<f64>,
    pub vertices: Vec<Vec<f64>>,
    pub elements: Vec<Vec<usize>>,
    pub interfaces: Vec<Interface>,
}

/// Local vertex indices of facet `g` of a `dim`-simplex.
pub fn facet_vertices(dim: usize, g: usize) -> Vec<usize> {
    (0..=dim).filter(|&v| v != g).collect()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

impl Mesh {
    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_vertices(&self, k: usize) -> Vec<Vec<f64>> {
        self.elements[k].iter().map(|&v| self.vertices[v].clone()).collect()
    }

    pub fn element_volume(&self, k: usize) -> f64 {
        simplex_volume(&self.element_vertices(k))
    }

    pub fn longest_edge(&self, k: usize) -> f64 {
        let v = self.element_vertices(k);
        let mut h = 0.0f64;
        for a in 0..v.len() {
            for b in a + 1..v.len() {
                h = h.max(norm(&sub(&v[a], &v[b])));
            }
        }
        h
    }

    /// Smallest nominal element size, the size being the longest edge.
    pub fn h_min(&self) -> f64 {
        (0..self.n_elements()).map(|k| self.longest_edge(k)).fold(f64::INFINITY, f64::min)
    }

    /// Neighbor table indexed `[element][facet]`.
    pub fn neighbors(&self) -> Result<Vec<Vec<Neighbor>>> {
        let nf = self.dim + 1;
        let mut out: Vec<Vec<Option<Neighbor>>> = vec![vec![None; nf]; self.n_elements()];
        for (i, itf) in self.interfaces.iter().enumerate() {
            let mut inv = vec![0; itf.perm.len()];
            for (p, &q) in itf.perm.iter().enumerate() {
                inv[q] = p;
            }
            for (e, f, n) in [
                (itf.elem_a, itf.facet_a, Neighbor {
                    elem: itf.elem_b,
                    facet: itf.facet_b,
                    perm: itf.perm.clone(),
                }),
                (itf.elem_b, itf.facet_b, Neighbor {
                    elem: itf.elem_a,
                    facet: itf.facet_a,
                    perm: inv.clone(),
                }),
            ] {
                let slot = out
                    .get_mut(e)
                    .and_then(|r| r.get_mut(f))
                    .ok_or_else(|| Error::Mesh(format!("interface {i} references missing facet ({e}, {f})")))?;
                if slot.is_some() {
                    return Err(Error::Mesh(format!("facet {f} of element {e} appears in two interfaces")));
                }
                *slot = Some(n);
            }
        }
        out.into_iter()
            .enumerate()
            .map(|(e, row)| {
                row.into_iter()
                    .enumerate()
                    .map(|(f, n)| n.ok_or_else(|| Error::Mesh(format!("facet {f} of element {e} has no interface"))))
                    .collect()
            })
            .collect()
    }

    /// Largest distance between matched interface vertices after the shift.
    pub fn interface_mismatch(&self) -> f64 {
        let mut worst = 0.0f64;
        for itf in &self.interfaces {
            let fa = facet_vertices(self.dim, itf.facet_a);
            let fb = facet_vertices(self.dim, itf.facet_b);
            for (p, &q) in itf.perm.iter().enumerate() {
                let xa = &self.vertices[self.elements[itf.elem_a][fa[p]]];
                let xb = &self.vertices[self.elements[itf.elem_b][fb[q]]];
                let d: Vec<f64> = (0..self.dim).map(|k| xa[k] + itf.shift[k] - xb[k]).collect();
                worst = worst.max(norm(&d));
            }
        }
        worst
    }

    /// Checks orientation, facet pairing and interface geometry.
    pub fn validate(&self) -> Result<()> {
        for k in 0..self.n_elements() {
            let vol = self.element_volume(k);
            if !(vol > 0.0) {
                return Err(Error::Mesh(format!("element {k} has nonpositive volume {vol:e}")));
            }
        }
        self.neighbors()?;
        let size = self.box_size.iter().cloned().fold(0.0, f64::max);
        let mis = self.interface_mismatch();
        if mis > 1e-10 * size {
            return Err(Error::Mesh(format!("interface vertices mismatch by {mis:e}")));
        }
        Ok(())
    }
}

type LatticePoint = [i64; 3];

/// Pairs facets through their periodic lattice coordinates.
///
/// A facet is translated so that its smallest lattice coordinate along each
/// axis lies in `[0, N_k)`; the sorted translated vertex list is its key.
fn build_interfaces(
    dim: usize,
    divisions: &[usize],
    box_size: &[f64],
    lattice: &[LatticePoint],
    elements: &[Vec<usize>],
) -> Result<Vec<Interface>> {
    struct Side {
        elem: usize,
        facet: usize,
        offset: [i64; 3],
        verts: Vec<LatticePoint>,
    }
    let mut groups: HashMap<Vec<LatticePoint>, Vec<Side>> = HashMap::new();
    let mut order = Vec::new();
    for (e, el) in elements.iter().enumerate() {
        for g in 0..=dim {
            let verts: Vec<LatticePoint> = facet_vertices(dim, g).iter().map(|&v| lattice[el[v]]).collect();
            let mut offset = [0i64; 3];
            for k in 0..dim {
                let n = divisions[k] as i64;
                let lo = verts.iter().map(|p| p[k]).min().unwrap_or(0);
                offset[k] = lo.div_euclid(n) * n;
            }
            let shifted: Vec<LatticePoint> = verts
                .iter()
                .map(|p| {
                    let mut q = *p;
                    for k in 0..dim {
                        q[k] -= offset[k];
                    }
                    q
                })
                .collect();
            let mut key = shifted.clone();
            key.sort();
            if !groups.contains_key(&key) {
                order.push(key.clone());
            }
            groups.entry(key).or_default().push(Side {
                elem: e,
                facet: g,
                offset,
                verts: shifted,
            });
        }
    }
    let mut out = Vec::with_capacity(order.len());
    for key in order {
        let sides = &groups[&key];
        if sides.len() != 2 {
            return Err(Error::Mesh(format!(
                "a facet is shared by {} elements instead of 2",
                sides.len()
            )));
        }
        let (a, b) = (&sides[0], &sides[1]);
        let perm: Vec<usize> = a
            .verts
            .iter()
            .map(|p| b.verts.iter().position(|q| q == p).expect("facet keys agree"))
            .collect();
        let shift = (0..dim)
            .map(|k| (b.offset[k] - a.offset[k]) as f64 / divisions[k] as f64 * box_size[k])
            .collect();
        out.push(Interface {
            elem_a: a.elem,
            facet_a: a.facet,
            elem_b: b.elem,
            facet_b: b.facet,
            perm,
            shift,
        });
    }
    Ok(out)
}

fn lattice_vertices(divisions: &[usize], box_size: &[f64]) -> (Vec<Vec<f64>>, Vec<LatticePoint>) {
    let dim = divisions.len();
    let counts: Vec<usize> = divisions.iter().map(|n| n + 1).collect();
    let total: usize = counts.iter().product();
    let mut verts = Vec::with_capacity(total);
    let mut lattice = Vec::with_capacity(total);
    for m in 0..total {
        let mut r = m;
        let mut p = [0i64; 3];
        let mut x = vec![0.0; dim];
        for k in 0..dim {
            let i = r % counts[k];
            r /= counts[k];
            p[k] = i as i64;
            x[k] = box_size[k] * i as f64 / divisions[k] as f64;
        }
        verts.push(x);
        lattice.push(p);
    }
    (verts, lattice)
}

fn vertex_id(idx: &[usize], divisions: &[usize]) -> usize {
    let mut id = 0;
    for k in (0..idx.len()).rev() {
        id = id * (divisions[k] + 1) + idx[k];
    }
    id
}

/// `2 Nx Ny` triangles, each cell split along its lower-right to upper-left
/// diagonal.
pub fn uniform_tri_mesh(nx: usize, ny: usize, box_size: [f64; 2]) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::Mesh("mesh divisions must be at least 1".into()));
    }
    let div = [nx, ny];
    let (vertices, lattice) = lattice_vertices(&div, &box_size);
    let mut elements = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let a = vertex_id(&[i, j], &div);
            let b = vertex_id(&[i + 1, j], &div);
            let c = vertex_id(&[i + 1, j + 1], &div);
            let d = vertex_id(&[i, j + 1], &div);
            elements.push(vec![a, b, d]);
            elements.push(vec![b, c, d]);
        }
    }
    let interfaces = build_interfaces(2, &div, &box_size, &lattice, &elements)?;
    Ok(Mesh {
        dim: 2,
        box_size: box_size.to_vec(),
        vertices,
        elements,
        interfaces,
    })
}

const PERMUTATIONS_3: [([usize; 3], bool); 6] = [
    ([0, 1, 2], true),
    ([0, 2, 1], false),
    ([1, 0, 2], false),
    ([1, 2, 0], true),
    ([2, 0, 1], true),
    ([2, 1, 0], false),
];

/// `6 N^3` tetrahedra from the Freudenthal split of each cube along its
/// main diagonal.
pub fn uniform_tet_mesh(n: usize, box_size: [f64; 3]) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::Mesh("mesh divisions must be at least 1".into()));
    }
    let div = [n, n, n];
    let (vertices, lattice) = lattice_vertices(&div, &box_size);
    let mut elements = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for (perm, even) in PERMUTATIONS_3 {
                    let mut c = [i, j, k];
                    let mut path = vec![vertex_id(&c, &div)];
                    for axis in perm {
                        c[axis] += 1;
                        path.push(vertex_id(&c, &div));
                    }
                    if !even {
                        path.swap(2, 3);
                    }
                    elements.push(path);
                }
            }
        }
    }
    let interfaces = build_interfaces(3, &div, &box_size, &lattice, &elements)?;
    Ok(Mesh {
        dim: 3,
        box_size: box_size.to_vec(),
        vertices,
        elements,
        interfaces,
    })
}

fn check_unit_box(mesh: &Mesh, dim: usize) -> Result<()> {
    if mesh.dim != dim {
        return Err(Error::Dimension(mesh.dim));
    }
    if mesh.box_size.iter().any(|&l| (l - 1.0).abs() > 1e-14) {
        return Err(Error::Mesh("perturbations are defined on the unit box".into()));
    }
    Ok(())
}

fn finish_perturbation(mut mesh: Mesh, vertices: Vec<Vec<f64>>) -> Result<Mesh> {
    mesh.vertices = vertices;
    for k in 0..mesh.n_elements() {
        let vol = mesh.element_volume(k);
        if !(vol > 0.0) {
            return Err(Error::Mesh(format!("element {k} inverted by the perturbation (volume {vol:e})")));
        }
    }
    Ok(mesh)
}

/// Applies
/// `x_1 = x^_1 exp(0.5 (x^_1 - 1)) + 0.4 sin(pi x^_1) sin(pi x^_2)`,
/// `x_2 = x^_2 exp(alpha (x^_2 - 1))` to every vertex.
pub fn perturb_mesh_2d(mesh: &Mesh, alpha: f64) -> Result<Mesh> {
    use std::f64::consts::PI;
    check_unit_box(mesh, 2)?;
    let verts = mesh
        .vertices
        .iter()
        .map(|v| {
            let (a, b) = (v[0], v[1]);
            vec![
                a * (0.5 * (a - 1.0)).exp() + 0.4 * (PI * a).sin() * (PI * b).sin(),
                b * (alpha * (b - 1.0)).exp(),
            ]
        })
        .collect();
    finish_perturbation(mesh.clone(), verts)
}

/// Three-dimensional analogue of [`perturb_mesh_2d`], with `alpha` acting
/// on `x_3`.
pub fn perturb_mesh_3d(mesh: &Mesh, alpha: f64) -> Result<Mesh> {
    use std::f64::consts::PI;
    check_unit_box(mesh, 3)?;
    let verts = mesh
        .vertices
        .iter()
        .map(|v| {
            let (a, b, c) = (v[0], v[1], v[2]);
            let bump = 0.4 * (PI * a).sin() * (PI * b).sin() * (PI * c).sin();
            vec![
                a * (0.5 * (a - 1.0)).exp() + bump,
                b * (0.5 * (b - 1.0)).exp() + bump,
                c * (alpha * (c - 1.0)).exp(),
            ]
        })
        .collect();
    finish_perturbation(mesh.clone(), verts)
}

#[derive(Debug, Clone)]
pub struct MeshQuality {
    /// Per element, `L_max / (sqrt(2 d (d + 1)) r_in)`; 1 for a regular simplex.
    pub aspect_ratio: Vec<f64>,
    /// Per element largest interior angle in degrees (2D only).
    pub max_angle: Vec<f64>,
}

impl MeshQuality {
    pub fn max_aspect_ratio(&self) -> f64 {
        self.aspect_ratio.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_interior_angle(&self) -> Option<f64> {
        if self.max_angle.is_empty() {
            None
        } else {
            Some(self.max_angle.iter().cloned().fold(0.0, f64::max))
        }
    }
}

/// Interior angles of a triangle in degrees.
pub fn triangle_angles(v: &[Vec<f64>]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (i, slot) in out.iter_mut().enumerate() {
        let a = sub(&v[(i + 1) % 3], &v[i]);
        let b = sub(&v[(i + 2) % 3], &v[i]);
        let cos = (a[0] * b[0] + a[1] * b[1]) / (norm(&a) * norm(&b));
        *slot = cos.clamp(-1.0, 1.0).acos().to_degrees();
    }
    out
}

/// Aspect ratio of a simplex, normalized to 1 for the regular simplex.
pub fn aspect_ratio(v: &[Vec<f64>]) -> f64 {
    let dim = v.len() - 1;
    let vol = simplex_volume(v).abs();
    let mut lmax = 0.0f64;
    for a in 0..=dim {
        for b in a + 1..=dim {
            lmax = lmax.max(norm(&sub(&v[a], &v[b])));
        }
    }
    let boundary: f64 = (0..=dim)
        .map(|g| {
            let f: Vec<&Vec<f64>> = facet_vertices(dim, g).iter().map(|&i| &v[i]).collect();
            if dim == 2 {
                norm(&sub(f[1], f[0]))
            } else {
                0.5 * norm(&cross(&sub(f[1], f[0]), &sub(f[2], f[0])))
            }
        })
        .sum();
    let r_in = dim as f64 * vol / boundary;
    lmax / ((2 * dim * (dim + 1)) as f64).sqrt() / r_in
}

pub fn quality_report(mesh: &Mesh) -> MeshQuality {
    let mut aspect = Vec::with_capacity(mesh.n_elements());
    let mut angles = Vec::new();
    for k in 0..mesh.n_elements() {
        let v = mesh.element_vertices(k);
        aspect.push(aspect_ratio(&v));
        if mesh.dim == 2 {
            angles.push(triangle_angles(&v).iter().cloned().fold(0.0, f64::max));
        }
    }
    MeshQuality {
        aspect_ratio: aspect,
        max_angle: angles,
    }
}

fn real(x: f64) -> String {
    format!("{x:.17e}")
}

/// Writes the mesh in the `tpss-mesh 1` text format:
///
/// ```text
/// tpss-mesh 1
/// dim <d>
/// box <L_1> ... <L_d>
/// vertices <n>
/// <x_1> ... <x_d>
/// elements <n>
/// <v_0> ... <v_d>
/// interfaces <n>
/// <elem_a> <facet_a> <elem_b> <facet_b> <perm_0> ... <perm_{d-1}> <shift_1> ... <shift_d>
/// end
/// ```
pub fn write_mesh<W: Write>(mesh: &Mesh, mut w: W) -> Result<()> {
    let mut s = String::new();
    let join = |v: &[f64]| v.iter().map(|&x| real(x)).collect::<Vec<_>>().join(" ");
    let _ = writeln!(s, "tpss-mesh 1");
    let _ = writeln!(s, "dim {}", mesh.dim);
    let _ = writeln!(s, "box {}", join(&mesh.box_size));
    let _ = writeln!(s, "vertices {}", mesh.vertices.len());
    for v in &mesh.vertices {
        let _ = writeln!(s, "{}", join(v));
    }
    let _ = writeln!(s, "elements {}", mesh.elements.len());
    for e in &mesh.elements {
        let _ = writeln!(s, "{}", e.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "));
    }
    let _ = writeln!(s, "interfaces {}", mesh.interfaces.len());
    for i in &mesh.interfaces {
        let perm: Vec<String> = i.perm.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(
            s,
            "{} {} {} {} {} {}",
            i.elem_a,
            i.facet_a,
            i.elem_b,
            i.facet_b,
            perm.join(" "),
            join(&i.shift)
        );
    }
    let _ = writeln!(s, "end");
    w.write_all(s.as_bytes())?;
    Ok(())
}

pub fn read_mesh<R: BufRead>(r: R) -> Result<Mesh> {
    let mut rows = Vec::new();
    for (i, l) in r.lines().enumerate() {
        let l = l?;
        let t = l.trim();
        if !t.is_empty() && !t.starts_with('#') {
            rows.push((i + 1, t.split_whitespace().map(String::from).collect::<Vec<_>>()));
        }
    }
    let mut it = rows.into_iter();
    let mut last_line = 0;
    let mut next = |what: &str| -> Result<(usize, Vec<String>)> {
        let row = it.next().ok_or_else(|| Error::Parse {
            line: last_line + 1,
            msg: format!("unexpected end of file, expected {what}"),
        })?;
        last_line = row.0;
        Ok(row)
    };
    fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
        s.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("cannot parse `{s}`"),
        })
    }
    fn expect(line: usize, f: &[String], key: &str, n: usize) -> Result<()> {
        if f.first().map(String::as_str) != Some(key) || f.len() != n + 1 {
            return Err(Error::Parse {
                line,
                msg: format!("expected `{key}` with {n} value(s)"),
            });
        }
        Ok(())
    }
    let (l, f) = next("header")?;
    expect(l, &f, "tpss-mesh", 1)?;
    let (l, f) = next("dim")?;
    expect(l, &f, "dim", 1)?;
    let dim: usize = num(l, &f[1])?;
    if !(2..=3).contains(&dim) {
        return Err(Error::Dimension(dim));
    }
    let (l, f) = next("box")?;
    expect(l, &f, "box", dim)?;
    let box_size = f[1..].iter().map(|s| num(l, s)).collect::<Result<Vec<f64>>>()?;
    let (l, f) = next("vertices")?;
    expect(l, &f, "vertices", 1)?;
    let nv: usize = num(l, &f[1])?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (l, f) = next("vertex")?;
        if f.len() != dim {
            return Err(Error::Parse { line: l, msg: "malformed vertex".into() });
        }
        vertices.push(f.iter().map(|s| num(l, s)).collect::<Result<Vec<f64>>>()?);
    }
    let (l, f) = next("elements")?;
    expect(l, &f, "elements", 1)?;
    let ne: usize = num(l, &f[1])?;
    let mut elements = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (l, f) = next("element")?;
        let e = f.iter().map(|s| num(l, s)).collect::<Result<Vec<usize>>>()?;
        if e.len() != dim + 1 || e.iter().any(|&v| v >= nv) {
            return Err(Error::Parse { line: l, msg: "malformed element".into() });
        }
        elements.push(e);
    }
    let (l, f) = next("interfaces")?;
    expect(l, &f, "interfaces", 1)?;
    let ni: usize = num(l, &f[1])?;
    let mut interfaces = Vec::with_capacity(ni);
    for _ in 0..ni {
        let (l, f) = next("interface")?;
        if f.len() != 4 + dim + dim {
            return Err(Error::Parse { line: l, msg: "malformed interface".into() });
        }
        let ints = f[..4 + dim].iter().map(|s| num(l, s)).collect::<Result<Vec<usize>>>()?;
        interfaces.push(Interface {
            elem_a: ints[0],
            facet_a: ints[1],
            elem_b: ints[2],
            facet_b: ints[3],
            perm: ints[4..].to_vec(),
            shift: f[4 + dim..].iter().map(|s| num(l, s)).collect::<Result<Vec<f64>>>()?,
        });
    }
    let (l, f) = next("end")?;
    expect(l, &f, "end", 0)?;
    let mesh = Mesh {
        dim,
        box_size,
        vertices,
        elements,
        interfaces,
    };
    mesh.validate()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_counts() {
        let m = uniform_tri_mesh(4, 4, [1.0, 1.0]).unwrap();
        assert_eq!(m.n_elements(), 32);
        assert_eq!(m.interfaces.len(), 48);
        m.validate().unwrap();
        for k in 0..32 {
            assert!((m.element_volume(k) - 1.0 / 32.0).abs() < 1e-15);
        }
        let one = uniform_tri_mesh(1, 1, [1.0, 1.0]).unwrap();
        assert_eq!(one.n_elements(), 2);
        assert_eq!(one.interfaces.len(), 3);
        one.validate().unwrap();
    }

    #[test]
    fn tetrahedron_counts() {
        for n in [1, 2, 4] {
            let m = uniform_tet_mesh(n, [1.0, 1.0, 1.0]).unwrap();
            assert_eq!(m.n_elements(), 6 * n * n * n);
            assert_eq!(m.interfaces.len(), 2 * m.n_elements());
            m.validate().unwrap();
            let total: f64 = (0..m.n_elements()).map(|k| m.element_volume(k)).sum();
            assert!((total - 1.0).abs() < 1e-13);
            let v0 = m.element_volume(0);
            assert!((0..m.n_elements()).all(|k| (m.element_volume(k) - v0).abs() < 1e-15));
        }
    }

    #[test]
    fn interface_round_trip_is_identity() {
        let m = uniform_tet_mesh(2, [1.0, 1.0, 1.0]).unwrap();
        let nb = m.neighbors().unwrap();
        for (e, row) in nb.iter().enumerate() {
            for (f, n) in row.iter().enumerate() {
                let back = &nb[n.elem][n.facet];
                assert_eq!((back.elem, back.facet), (e, f));
                let composed: Vec<usize> = n.perm.iter().map(|&q| back.perm[q]).collect();
                assert_eq!(composed, (0..3).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn perturbation_keeps_corner_and_periodicity() {
        let m = uniform_tri_mesh(10, 100, [1.0, 1.0]).unwrap();
        let p = perturb_mesh_2d(&m, 0.25).unwrap();
        let corner = p.vertices.iter().zip(&m.vertices).find(|(_, v)| v[0] == 1.0 && v[1] == 1.0).unwrap();
        assert!((corner.0[0] - 1.0).abs() < 1e-15 && (corner.0[1] - 1.0).abs() < 1e-15);
        p.validate().unwrap();
        let t = uniform_tet_mesh(3, [1.0, 1.0, 1.0]).unwrap();
        let z = perturb_mesh_3d(&t, 0.0).unwrap();
        for (a, b) in z.vertices.iter().zip(&t.vertices) {
            assert_eq!(a[2], b[2]);
        }
        perturb_mesh_3d(&t, 3.0).unwrap().validate().unwrap();
    }

    #[test]
    fn quality_of_simple_shapes() {
        let right = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let ang = triangle_angles(&right);
        assert!((ang.iter().cloned().fold(0.0, f64::max) - 90.0).abs() < 1e-12);
        assert!((ang.iter().sum::<f64>() - 180.0).abs() < 1e-9);
        let eq = |s: f64| vec![vec![0.0, 0.0], vec![s, 0.0], vec![0.5 * s, 0.5 * 3f64.sqrt() * s]];
        assert!((aspect_ratio(&eq(1.0)) - 1.0).abs() < 1e-12);
        assert!((aspect_ratio(&eq(7.5)) - aspect_ratio(&eq(1.0))).abs() < 1e-12);
        let tet = vec![
            vec![1.0, 1.0, 1.0],
            vec![1.0, -1.0, -1.0],
            vec![-1.0, 1.0, -1.0],
            vec![-1.0, -1.0, 1.0],
        ];
        assert!((aspect_ratio(&tet) - 1.0).abs() < 1e-12);
        let q = quality_report(&uniform_tri_mesh(4, 4, [1.0, 1.0]).unwrap());
        assert!(q.aspect_ratio.iter().all(|&a| (a - q.aspect_ratio[0]).abs() < 1e-12));
    }

    #[test]
    fn text_round_trip() {
        let m = perturb_mesh_2d(&uniform_tri_mesh(3, 2, [1.0, 1.0]).unwrap(), 2.5).unwrap();
        let mut buf = Vec::new();
        write_mesh(&m, &mut buf).unwrap();
        assert_eq!(read_mesh(&buf[..]).unwrap(), m);
    }
}
