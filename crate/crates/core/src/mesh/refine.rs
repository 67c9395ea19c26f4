//! Red-green-blue refinement.
//!
//! Marked elements are red-refined. The closure marks the reference side
//! (longest side, ties to the smaller side id) of every element with a marked
//! side, then refines with one (green), two (blue) or three (red) bisected
//! sides. Midpoints are created once per marked side, so coincident vertices
//! never arise.

use std::collections::HashMap;

use super::{side_key, BoundaryKind, Mesh};

#[derive(Clone, Copy, Debug, Default)]
pub struct RefineOptions {
    /// Red-refine the central child of every marked element once more, which
    /// places a vertex in the interior of each marked element.
    pub interior_node: bool,
}

#[derive(Clone, Debug)]
pub struct Refinement {
    pub mesh: Mesh,
    /// Parent element (in the input mesh) of every new element.
    pub parent: Vec<usize>,
}

/// Reference side of element `t`: its longest side, ties to the smaller id.
pub fn reference_side(mesh: &Mesh, t: usize) -> usize {
    let es = mesh.element_sides()[t];
    let len = mesh.side_lengths();
    let mut best = es[0];
    for &s in &es[1..] {
        if len[s] > len[best] || (len[s] == len[best] && s < best) {
            best = s;
        }
    }
    best
}

struct Step {
    mesh: Mesh,
    parent: Vec<usize>,
    central: Vec<Option<usize>>,
}

fn refine_once(mesh: &Mesh, marked: &[usize]) -> Step {
    let ns = mesh.n_sides();
    let mut side_marked = vec![false; ns];
    let mut queue = Vec::new();
    for &t in marked {
        for &s in &mesh.element_sides()[t] {
            side_marked[s] = true;
        }
        queue.push(t);
    }
    // Any element with a marked side gets its reference side marked.
    for s in 0..ns {
        if side_marked[s] {
            let se = mesh.side_elements()[s];
            queue.push(se.minus);
            if let Some(p) = se.plus {
                queue.push(p);
            }
        }
    }
    let refs: Vec<usize> = (0..mesh.n_elements())
        .map(|t| reference_side(mesh, t))
        .collect();
    while let Some(t) = queue.pop() {
        let r = refs[t];
        if side_marked[r] {
            continue;
        }
        side_marked[r] = true;
        let se = mesh.side_elements()[r];
        queue.push(se.minus);
        if let Some(p) = se.plus {
            queue.push(p);
        }
    }

    let mut vertices = mesh.vertices().to_vec();
    let mut midpoint = vec![usize::MAX; ns];
    for s in 0..ns {
        if side_marked[s] {
            midpoint[s] = vertices.len();
            vertices.push(mesh.side_midpoints()[s]);
        }
    }

    let mut labels: HashMap<(usize, usize), BoundaryKind> = HashMap::new();
    for (s, b) in mesh.boundary().iter().enumerate() {
        if let Some(kind) = *b {
            let [a, c] = mesh.sides()[s];
            if side_marked[s] {
                let m = midpoint[s];
                labels.insert(side_key(a, m), kind);
                labels.insert(side_key(m, c), kind);
            } else {
                labels.insert((a, c), kind);
            }
        }
    }

    let mut triangles = Vec::with_capacity(mesh.n_elements() * 2);
    let mut parent = Vec::with_capacity(mesh.n_elements() * 2);
    let mut central = vec![None; mesh.n_elements()];
    for t in 0..mesh.n_elements() {
        let p = mesh.triangles()[t];
        let es = mesh.element_sides()[t];
        let m = [midpoint[es[0]], midpoint[es[1]], midpoint[es[2]]];
        let count = es.iter().filter(|&&s| side_marked[s]).count();
        let children: Vec<[usize; 3]> = match count {
            0 => vec![p],
            3 => {
                central[t] = Some(triangles.len() + 3);
                vec![
                    [p[0], m[2], m[1]],
                    [m[2], p[1], m[0]],
                    [m[1], m[0], p[2]],
                    [m[0], m[1], m[2]],
                ]
            }
            _ => {
                let r = mesh.local_side(t, refs[t]);
                let (a, b, c) = (p[r], p[(r + 1) % 3], p[(r + 2) % 3]);
                let mr = m[r];
                if count == 1 {
                    vec![[a, b, mr], [a, mr, c]]
                } else if side_marked[es[(r + 2) % 3]] {
                    // Second marked side runs from `a` to `b`.
                    let q = m[(r + 2) % 3];
                    vec![[a, q, mr], [q, b, mr], [a, mr, c]]
                } else {
                    // Second marked side runs from `c` to `a`.
                    let q = m[(r + 1) % 3];
                    vec![[a, b, mr], [a, mr, q], [q, mr, c]]
                }
            }
        };
        for c in children {
            triangles.push(c);
            parent.push(t);
        }
    }
    let mesh = Mesh::new(vertices, triangles, &labels).expect("refinement preserves validity");
    Step {
        mesh,
        parent,
        central,
    }
}

/// Refines `marked` elements and closes the mesh. Children are numbered in
/// parent order, so the output only depends on the input.
pub fn refine(mesh: &Mesh, marked: &[usize], opts: RefineOptions) -> Refinement {
    let first = refine_once(mesh, marked);
    if !opts.interior_node || marked.is_empty() {
        return Refinement {
            mesh: first.mesh,
            parent: first.parent,
        };
    }
    let inner: Vec<usize> = marked.iter().filter_map(|&t| first.central[t]).collect();
    let second = refine_once(&first.mesh, &inner);
    let parent = second.parent.iter().map(|&c| first.parent[c]).collect();
    Refinement {
        mesh: second.mesh,
        parent,
    }
}
