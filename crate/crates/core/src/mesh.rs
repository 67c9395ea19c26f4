//! Conforming triangulations with side topology.
//!
//! Triangles are stored counter-clockwise. Local side `i` of a triangle is the
//! side opposite its local vertex `i`. Every side knows the element with the
//! smaller id (`minus`) and, for interior sides, the element with the larger id
//! (`plus`). The side normal `n_S` is the outward unit normal of the `minus`
//! element, so it points from `minus` to `plus` and outward on the boundary.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

pub mod refine;

pub use refine::{refine, RefineOptions, Refinement};

/// Relative tolerance for geometric coincidence tests.
pub const GEOM_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("index {index} out of range on line {line} (limit {limit})")]
    IndexOutOfRange {
        line: usize,
        index: usize,
        limit: usize,
    },
    #[error("element {0} has zero area")]
    ZeroArea(usize),
    #[error("side ({0}, {1}) is shared by more than two elements")]
    NonManifold(usize, usize),
    #[error("vertex {vertex} hangs on side ({a}, {b})")]
    NonConforming { vertex: usize, a: usize, b: usize },
    #[error("boundary entry ({0}, {1}) is not a boundary side")]
    NotABoundarySide(usize, usize),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Boundary condition type attached to a boundary side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

impl BoundaryKind {
    fn label(self) -> char {
        match self {
            BoundaryKind::Dirichlet => 'D',
            BoundaryKind::Neumann => 'N',
        }
    }
}

/// The two elements adjacent to a side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SideElements {
    pub minus: usize,
    pub plus: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    sides: Vec<[usize; 2]>,
    side_elements: Vec<SideElements>,
    element_sides: Vec<[usize; 3]>,
    boundary: Vec<Option<BoundaryKind>>,
    areas: Vec<f64>,
    centroids: Vec<[f64; 2]>,
    diameters: Vec<f64>,
    side_lengths: Vec<f64>,
    side_midpoints: Vec<[f64; 2]>,
    side_normals: Vec<[f64; 2]>,
}

pub(crate) fn side_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn signed_area(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]))
}

fn dist(p: [f64; 2], q: [f64; 2]) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

impl Mesh {
    /// Builds a mesh from vertices and triangles. Clockwise triangles are
    /// reoriented. Boundary sides missing from `labels` are Dirichlet.
    pub fn new(
        vertices: Vec<[f64; 2]>,
        mut triangles: Vec<[usize; 3]>,
        labels: &HashMap<(usize, usize), BoundaryKind>,
    ) -> Result<Self, MeshError> {
        let nv = vertices.len();
        for (t, tri) in triangles.iter_mut().enumerate() {
            for &i in tri.iter() {
                if i >= nv {
                    return Err(MeshError::IndexOutOfRange {
                        line: 0,
                        index: i,
                        limit: nv,
                    });
                }
            }
            let p = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
            let a = signed_area(p[0], p[1], p[2]);
            let longest = dist(p[0], p[1]).max(dist(p[1], p[2])).max(dist(p[2], p[0]));
            if a.abs() <= GEOM_TOL * longest * longest {
                return Err(MeshError::ZeroArea(t));
            }
            if a < 0.0 {
                tri.swap(1, 2);
            }
        }

        let mut index: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 2);
        let mut sides = Vec::new();
        let mut side_elements: Vec<SideElements> = Vec::new();
        let mut element_sides = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut es = [0usize; 3];
            for (i, e) in es.iter_mut().enumerate() {
                let key = side_key(tri[(i + 1) % 3], tri[(i + 2) % 3]);
                let s = *index.entry(key).or_insert_with(|| {
                    sides.push([key.0, key.1]);
                    side_elements.push(SideElements {
                        minus: t,
                        plus: None,
                    });
                    sides.len() - 1
                });
                if side_elements[s].minus != t {
                    if side_elements[s].plus.is_some() {
                        return Err(MeshError::NonManifold(key.0, key.1));
                    }
                    side_elements[s].plus = Some(t);
                }
                *e = s;
            }
            element_sides.push(es);
        }

        let mut boundary = vec![None; sides.len()];
        for (s, se) in side_elements.iter().enumerate() {
            if se.plus.is_none() {
                let key = (sides[s][0], sides[s][1]);
                boundary[s] = Some(*labels.get(&key).unwrap_or(&BoundaryKind::Dirichlet));
            }
        }
        for &(a, b) in labels.keys() {
            match index.get(&side_key(a, b)) {
                Some(&s) if boundary[s].is_some() => {}
                _ => return Err(MeshError::NotABoundarySide(a, b)),
            }
        }

        let mut mesh = Mesh {
            vertices,
            triangles,
            sides,
            side_elements,
            element_sides,
            boundary,
            areas: Vec::new(),
            centroids: Vec::new(),
            diameters: Vec::new(),
            side_lengths: Vec::new(),
            side_midpoints: Vec::new(),
            side_normals: Vec::new(),
        };
        mesh.compute_geometry();
        Ok(mesh)
    }

    fn compute_geometry(&mut self) {
        let v = &self.vertices;
        self.areas = self
            .triangles
            .iter()
            .map(|t| signed_area(v[t[0]], v[t[1]], v[t[2]]))
            .collect();
        self.centroids = self
            .triangles
            .iter()
            .map(|t| {
                [
                    (v[t[0]][0] + v[t[1]][0] + v[t[2]][0]) / 3.0,
                    (v[t[0]][1] + v[t[1]][1] + v[t[2]][1]) / 3.0,
                ]
            })
            .collect();
        self.side_lengths = self.sides.iter().map(|s| dist(v[s[0]], v[s[1]])).collect();
        self.side_midpoints = self
            .sides
            .iter()
            .map(|s| {
                [
                    0.5 * (v[s[0]][0] + v[s[1]][0]),
                    0.5 * (v[s[0]][1] + v[s[1]][1]),
                ]
            })
            .collect();
        self.diameters = self
            .element_sides
            .iter()
            .map(|es| es.iter().map(|&s| self.side_lengths[s]).fold(0.0, f64::max))
            .collect();
        let mut normals = vec![[0.0; 2]; self.sides.len()];
        for (s, n) in normals.iter_mut().enumerate() {
            let t = self.side_elements[s].minus;
            let i = self.local_side(t, s);
            *n = self.outward_normal(t, i);
        }
        self.side_normals = normals;
    }

    /// Outward unit normal of local side `i` of element `t`.
    pub fn outward_normal(&self, t: usize, i: usize) -> [f64; 2] {
        let tri = self.triangles[t];
        let p = self.vertices[tri[(i + 1) % 3]];
        let q = self.vertices[tri[(i + 2) % 3]];
        let e = [q[0] - p[0], q[1] - p[1]];
        let l = e[0].hypot(e[1]);
        [e[1] / l, -e[0] / l]
    }

    /// Local index of side `s` in element `t`.
    pub fn local_side(&self, t: usize, s: usize) -> usize {
        self.element_sides[t]
            .iter()
            .position(|&x| x == s)
            .expect("side does not belong to element")
    }

    /// `+1` if `n_S` is the outward normal of `t` on side `s`, else `-1`.
    pub fn side_sign(&self, t: usize, s: usize) -> f64 {
        if self.side_elements[s].minus == t {
            1.0
        } else {
            -1.0
        }
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }
    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }
    pub fn sides(&self) -> &[[usize; 2]] {
        &self.sides
    }
    pub fn side_elements(&self) -> &[SideElements] {
        &self.side_elements
    }
    pub fn element_sides(&self) -> &[[usize; 3]] {
        &self.element_sides
    }
    pub fn boundary(&self) -> &[Option<BoundaryKind>] {
        &self.boundary
    }
    pub fn areas(&self) -> &[f64] {
        &self.areas
    }
    pub fn centroids(&self) -> &[[f64; 2]] {
        &self.centroids
    }
    pub fn diameters(&self) -> &[f64] {
        &self.diameters
    }
    pub fn side_lengths(&self) -> &[f64] {
        &self.side_lengths
    }
    pub fn side_midpoints(&self) -> &[[f64; 2]] {
        &self.side_midpoints
    }
    pub fn side_normals(&self) -> &[[f64; 2]] {
        &self.side_normals
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn n_elements(&self) -> usize {
        self.triangles.len()
    }
    pub fn n_sides(&self) -> usize {
        self.sides.len()
    }

    pub fn element_vertices(&self, t: usize) -> [[f64; 2]; 3] {
        let tri = self.triangles[t];
        [
            self.vertices[tri[0]],
            self.vertices[tri[1]],
            self.vertices[tri[2]],
        ]
    }

    pub fn is_dirichlet_side(&self, s: usize) -> bool {
        self.boundary[s] == Some(BoundaryKind::Dirichlet)
    }

    /// Vertices lying on at least one Dirichlet side.
    pub fn dirichlet_vertices(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for (s, side) in self.sides.iter().enumerate() {
            if self.is_dirichlet_side(s) {
                mask[side[0]] = true;
                mask[side[1]] = true;
            }
        }
        mask
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Average mesh size `(|domain| / #vertices)^(1/2)`.
    pub fn average_mesh_size(&self) -> f64 {
        (self.total_area() / self.vertices.len() as f64).sqrt()
    }

    /// Elements incident to each vertex, in increasing order.
    pub fn vertex_elements(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                out[v].push(t);
            }
        }
        out
    }

    /// Elements sharing at least one vertex with `t`, sorted.
    pub fn patch(&self, t: usize) -> Vec<usize> {
        let ve = self.vertex_elements();
        self.patch_with(&ve, t)
    }

    pub(crate) fn patch_with(&self, ve: &[Vec<usize>], t: usize) -> Vec<usize> {
        let mut p: Vec<usize> = self.triangles[t]
            .iter()
            .flat_map(|&v| ve[v].iter().copied())
            .collect();
        p.sort_unstable();
        p.dedup();
        p
    }

    /// Sides meeting the interior of the vertex patch of `t`, sorted.
    ///
    /// A closed side meets the open patch exactly when both of its adjacent
    /// elements belong to the patch.
    pub fn patch_sides(&self, t: usize) -> Vec<usize> {
        let patch = self.patch(t);
        let mut out: Vec<usize> = patch
            .iter()
            .flat_map(|&e| self.element_sides[e].iter().copied())
            .filter(|&s| {
                let se = self.side_elements[s];
                match se.plus {
                    Some(p) => {
                        patch.binary_search(&se.minus).is_ok() && patch.binary_search(&p).is_ok()
                    }
                    None => false,
                }
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Smallest interior angle over all elements, in degrees.
    pub fn min_angle_degrees(&self) -> f64 {
        let mut best = f64::INFINITY;
        for t in 0..self.n_elements() {
            let p = self.element_vertices(t);
            for i in 0..3 {
                let a = p[i];
                let b = p[(i + 1) % 3];
                let c = p[(i + 2) % 3];
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
                best = best.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        best
    }

    /// Boundary labels keyed by sorted vertex pair.
    pub fn boundary_labels(&self) -> HashMap<(usize, usize), BoundaryKind> {
        self.sides
            .iter()
            .zip(&self.boundary)
            .filter_map(|(s, b)| b.map(|k| ((s[0], s[1]), k)))
            .collect()
    }

    /// Parses the text format: a header `nv nt nb`, `nv` lines `x y`, `nt`
    /// lines `i j k` (0-based) and `nb` lines `i j D|N`.
    pub fn parse(text: &str) -> Result<Self, MeshError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hl, header) = lines.next().ok_or(MeshError::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let counts: Vec<usize> = parse_fields(hl, header, 3)?;
        let (nv, nt, nb) = (counts[0], counts[1], counts[2]);

        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, l) = next_line(&mut lines)?;
            let xy: Vec<f64> = parse_fields(ln, l, 2)?;
            vertices.push([xy[0], xy[1]]);
        }
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (ln, l) = next_line(&mut lines)?;
            let ijk: Vec<usize> = parse_fields(ln, l, 3)?;
            for &i in &ijk {
                if i >= nv {
                    return Err(MeshError::IndexOutOfRange {
                        line: ln,
                        index: i,
                        limit: nv,
                    });
                }
            }
            triangles.push([ijk[0], ijk[1], ijk[2]]);
        }
        let mut labels = HashMap::new();
        for _ in 0..nb {
            let (ln, l) = next_line(&mut lines)?;
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 {
                return Err(MeshError::Parse {
                    line: ln,
                    msg: format!("expected 3 fields, found {}", f.len()),
                });
            }
            let mut ij = [0usize; 2];
            for k in 0..2 {
                ij[k] = f[k].parse().map_err(|e| MeshError::Parse {
                    line: ln,
                    msg: format!("{e}"),
                })?;
                if ij[k] >= nv {
                    return Err(MeshError::IndexOutOfRange {
                        line: ln,
                        index: ij[k],
                        limit: nv,
                    });
                }
            }
            let kind = match f[2] {
                "D" => BoundaryKind::Dirichlet,
                "N" => BoundaryKind::Neumann,
                other => {
                    return Err(MeshError::Parse {
                        line: ln,
                        msg: format!("unknown boundary label {other:?}"),
                    })
                }
            };
            labels.insert(side_key(ij[0], ij[1]), kind);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(MeshError::Parse {
                line: ln,
                msg: "trailing data".into(),
            });
        }
        let mesh = Mesh::new(vertices, triangles, &labels)?;
        mesh.check_conforming()?;
        Ok(mesh)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MeshError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Serializes to the text format read by [`Mesh::parse`].
    pub fn to_text(&self) -> String {
        let nb = self.boundary.iter().filter(|b| b.is_some()).count();
        let mut out = format!("{} {} {}\n", self.n_vertices(), self.n_elements(), nb);
        for v in &self.vertices {
            let _ = writeln!(out, "{:e} {:e}", v[0], v[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
        }
        for (s, b) in self.sides.iter().zip(&self.boundary) {
            if let Some(k) = b {
                let _ = writeln!(out, "{} {} {}", s[0], s[1], k.label());
            }
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MeshError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Rejects vertices lying in the relative interior of a one-sided side.
    fn check_conforming(&self) -> Result<(), MeshError> {
        for (s, se) in self.side_elements.iter().enumerate() {
            if se.plus.is_some() {
                continue;
            }
            let [a, b] = self.sides[s];
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            let len = self.side_lengths[s];
            for (v, &x) in self.vertices.iter().enumerate() {
                if v == a || v == b {
                    continue;
                }
                let cross = signed_area(pa, pb, x).abs() * 2.0 / len;
                if cross > GEOM_TOL * len {
                    continue;
                }
                let e = [pb[0] - pa[0], pb[1] - pa[1]];
                let t = ((x[0] - pa[0]) * e[0] + (x[1] - pa[1]) * e[1]) / (len * len);
                if t > GEOM_TOL && t < 1.0 - GEOM_TOL {
                    return Err(MeshError::NonConforming { vertex: v, a, b });
                }
            }
        }
        Ok(())
    }

    /// Uniform triangulation of the L-shaped domain
    /// `(-1,1)^2 \ [0,1]x[-1,0]` into squares of side `1/n_per_unit`, each cut
    /// along the diagonal from its lower-left to its upper-right corner. All
    /// boundary sides are Dirichlet.
    pub fn lshape(n_per_unit: usize) -> Self {
        let n = 2 * n_per_unit;
        let h = 1.0 / n_per_unit as f64;
        let inside = |i: usize, j: usize| !(i >= n_per_unit && j < n_per_unit);
        let mut id = vec![usize::MAX; (n + 1) * (n + 1)];
        let mut vertices = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                let cell_touch = [
                    (i, j),
                    (i.wrapping_sub(1), j),
                    (i, j.wrapping_sub(1)),
                    (i.wrapping_sub(1), j.wrapping_sub(1)),
                ]
                .iter()
                .any(|&(ci, cj)| ci < n && cj < n && inside(ci, cj));
                if cell_touch {
                    id[j * (n + 1) + i] = vertices.len();
                    vertices.push([-1.0 + i as f64 * h, -1.0 + j as f64 * h]);
                }
            }
        }
        let mut triangles = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if !inside(i, j) {
                    continue;
                }
                let v00 = id[j * (n + 1) + i];
                let v10 = id[j * (n + 1) + i + 1];
                let v01 = id[(j + 1) * (n + 1) + i];
                let v11 = id[(j + 1) * (n + 1) + i + 1];
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        Mesh::new(vertices, triangles, &HashMap::new()).expect("valid L-shape mesh")
    }

    /// Unit square `(0,1)^2` with squares of side `1/n`, diagonal cut as in
    /// [`Mesh::lshape`]. Sides on `x = 1` are Neumann when `neumann_right` is
    /// set; all other boundary sides are Dirichlet.
    pub fn unit_square(n: usize, neumann_right: bool) -> Self {
        let h = 1.0 / n as f64;
        let mut vertices = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 * h, j as f64 * h]);
            }
        }
        let mut triangles = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let v00 = j * (n + 1) + i;
                let v10 = v00 + 1;
                let v01 = v00 + n + 1;
                let v11 = v01 + 1;
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        let mut labels = HashMap::new();
        if neumann_right {
            for j in 0..n {
                let a = j * (n + 1) + n;
                labels.insert(side_key(a, a + n + 1), BoundaryKind::Neumann);
            }
        }
        Mesh::new(vertices, triangles, &labels).expect("valid square mesh")
    }
}

fn next_line<'a>(
    it: &mut impl Iterator<Item = (usize, &'a str)>,
) -> Result<(usize, &'a str), MeshError> {
    it.next().ok_or(MeshError::Parse {
        line: 0,
        msg: "unexpected end of input".into(),
    })
}

fn parse_fields<T: std::str::FromStr>(
    line: usize,
    text: &str,
    n: usize,
) -> Result<Vec<T>, MeshError>
where
    T::Err: std::fmt::Display,
{
    let out: Vec<T> = text
        .split_whitespace()
        .map(|f| {
            f.parse::<T>().map_err(|e| MeshError::Parse {
                line,
                msg: format!("{f:?}: {e}"),
            })
        })
        .collect::<Result<_, _>>()?;
    if out.len() != n {
        return Err(MeshError::Parse {
            line,
            msg: format!("expected {n} fields, found {}", out.len()),
        });
    }
    Ok(out)
}
