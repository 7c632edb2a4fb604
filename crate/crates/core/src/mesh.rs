//! Simplicial meshes in one and two space dimensions.
//!
//! A [`Mesh`] is immutable once built. Refinement produces a new mesh with an
//! incremented generation counter together with a [`Prolongation`] that maps
//! nodal vectors of the old mesh onto the new one.
//!
//! Triangles are stored with their *newest vertex* first, so the refinement
//! edge of `[a, b, c]` is always `(b, c)`. Newest-vertex bisection then only
//! has to look at the node order, and children inherit a consistent labelling
//! without any extra bookkeeping.

use std::collections::{HashMap, HashSet};
use std::io::{self, Write};

use crate::error::{invalid, Error, Result};

/// Node coordinates. One-dimensional meshes leave the second entry at zero.
pub type Point = [f64; 2];

/// An interior facet: an interior node in 1d, an interior edge in 2d.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InteriorFacet {
    /// Facet vertices. For 1d meshes both entries hold the same node.
    pub nodes: [usize; 2],
    /// The two elements sharing the facet, lower index first.
    pub elements: [usize; 2],
}

/// Element diameters and facet sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeData {
    /// `h_T`, one entry per element.
    pub element: Vec<f64>,
    /// `h_E`, one entry per interior facet. In 1d the mean length of the two
    /// adjacent elements, in 2d the edge length.
    pub facet: Vec<f64>,
}

/// Affine element data: measure and gradients of the barycentric coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub measure: f64,
    /// Only the first `dim + 1` entries are meaningful.
    pub grads: [[f64; 2]; 3],
}

/// Transfer of nodal vectors from a mesh to its refinement.
///
/// Old nodes keep their index; every new node sits at the midpoint of a parent
/// edge whose endpoints are old nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Prolongation {
    source_generation: u64,
    target_generation: u64,
    source_nodes: usize,
    midpoints: Vec<[usize; 2]>,
}

impl Prolongation {
    pub fn source_generation(&self) -> u64 {
        self.source_generation
    }

    pub fn target_generation(&self) -> u64 {
        self.target_generation
    }

    pub fn source_nodes(&self) -> usize {
        self.source_nodes
    }

    pub fn target_nodes(&self) -> usize {
        self.source_nodes + self.midpoints.len()
    }

    /// Parent edge endpoints of each new node, in new-node order.
    pub fn midpoints(&self) -> &[[usize; 2]] {
        &self.midpoints
    }

    /// Applies the map to a raw nodal vector.
    pub fn apply(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.source_nodes {
            return Err(Error::DimensionMismatch(format!(
                "prolongation expects {} nodal values, got {}",
                self.source_nodes,
                values.len()
            )));
        }
        let mut out = Vec::with_capacity(self.target_nodes());
        out.extend_from_slice(values);
        for &[a, b] in &self.midpoints {
            out.push(0.5 * (values[a] + values[b]));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    nodes: Vec<Point>,
    cells: Vec<usize>,
    facets: Vec<InteriorFacet>,
    element_facets: Vec<Vec<usize>>,
    on_boundary: Vec<bool>,
    parents: Vec<usize>,
    generation: u64,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn dist(p: Point, q: Point) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

fn signed_area2(p: Point, q: Point, r: Point) -> f64 {
    (q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1])
}

impl Mesh {
    /// `n` equal subintervals of `[a, b]`.
    pub fn uniform_interval(a: f64, b: f64, n: usize) -> Result<Mesh> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return invalid(format!("interval requires a < b, got a = {a}, b = {b}"));
        }
        if n == 0 {
            return invalid("interval mesh needs at least one element");
        }
        let h = (b - a) / n as f64;
        let mut xs: Vec<f64> = (0..=n).map(|i| a + h * i as f64).collect();
        xs[n] = b;
        Mesh::interval_from_nodes(xs)
    }

    /// 1d mesh from strictly increasing node positions.
    pub fn interval_from_nodes(xs: Vec<f64>) -> Result<Mesh> {
        if xs.len() < 2 {
            return invalid("interval mesh needs at least two nodes");
        }
        if xs.iter().any(|x| !x.is_finite()) || xs.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("interval nodes must be finite and strictly increasing");
        }
        let cells: Vec<usize> = (0..xs.len() - 1).flat_map(|i| [i, i + 1]).collect();
        let parents = (0..xs.len() - 1).collect();
        let nodes = xs.into_iter().map(|x| [x, 0.0]).collect();
        Mesh::build(1, nodes, cells, parents, 0)
    }

    /// The unit square split into `n × n` cells, each cut along the
    /// `(i, j)–(i+1, j+1)` diagonal.
    pub fn uniform_square(n: usize) -> Result<Mesh> {
        if n == 0 {
            return invalid("square mesh needs n >= 1");
        }
        let idx = |i: usize, j: usize| j * (n + 1) + i;
        let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                nodes.push([i as f64 / n as f64, j as f64 / n as f64]);
            }
        }
        let mut tris = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                tris.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                tris.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
        Mesh::from_triangles(nodes, tris)
    }

    /// Builds a 2d mesh from arbitrary triangles. Orientation is normalised to
    /// counter-clockwise and the newest vertex is placed opposite the longest
    /// edge (ties go to the edge with the lexicographically smallest sorted
    /// node pair).
    pub fn from_triangles(nodes: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Mesh> {
        if triangles.is_empty() {
            return invalid("triangle mesh has no elements");
        }
        let mut cells = Vec::with_capacity(3 * triangles.len());
        for (e, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nodes.len()) {
                return invalid(format!("triangle {e} references a missing node"));
            }
            let [a, b, c] = *tri;
            let area2 = signed_area2(nodes[a], nodes[b], nodes[c]);
            if !(area2.abs() > 0.0) {
                return invalid(format!("triangle {e} is degenerate"));
            }
            let [a, b, c] = if area2 > 0.0 { [a, b, c] } else { [a, c, b] };
            // Local edge opposite vertex k.
            let opposite = [(b, c), (c, a), (a, b)];
            let lens = opposite.map(|(p, q)| dist(nodes[p], nodes[q]));
            let longest = lens.iter().cloned().fold(0.0, f64::max);
            let k = (0..3)
                .filter(|&k| lens[k] >= longest * (1.0 - 1e-12))
                .min_by_key(|&k| edge_key(opposite[k].0, opposite[k].1))
                .unwrap_or(0);
            let rotated = match k {
                0 => [a, b, c],
                1 => [b, c, a],
                _ => [c, a, b],
            };
            cells.extend_from_slice(&rotated);
        }
        let parents = (0..triangles.len()).collect();
        Mesh::build(2, nodes, cells, parents, 0)
    }

    fn build(
        dim: usize,
        nodes: Vec<Point>,
        cells: Vec<usize>,
        parents: Vec<usize>,
        generation: u64,
    ) -> Result<Mesh> {
        let n_elem = cells.len() / (dim + 1);
        let mut facets = Vec::new();
        let mut element_facets = vec![Vec::new(); n_elem];
        let mut on_boundary = vec![false; nodes.len()];
        if dim == 1 {
            let mut owners: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
            for e in 0..n_elem {
                owners[cells[2 * e]].push(e);
                owners[cells[2 * e + 1]].push(e);
            }
            for (v, own) in owners.iter().enumerate() {
                match own.len() {
                    1 => on_boundary[v] = true,
                    2 => {
                        let f = facets.len();
                        facets.push(InteriorFacet {
                            nodes: [v, v],
                            elements: [own[0].min(own[1]), own[0].max(own[1])],
                        });
                        element_facets[own[0]].push(f);
                        element_facets[own[1]].push(f);
                    }
                    0 => return invalid(format!("node {v} is not attached to any element")),
                    _ => return invalid(format!("node {v} is shared by more than two intervals")),
                }
            }
        } else {
            let mut edges: HashMap<(usize, usize), (usize, Option<usize>)> = HashMap::new();
            let mut order = Vec::new();
            for e in 0..n_elem {
                let t = &cells[3 * e..3 * e + 3];
                for (p, q) in [(t[1], t[2]), (t[2], t[0]), (t[0], t[1])] {
                    let key = edge_key(p, q);
                    match edges.get_mut(&key) {
                        None => {
                            edges.insert(key, (e, None));
                            order.push(key);
                        }
                        Some((_, second @ None)) => *second = Some(e),
                        Some(_) => {
                            return invalid(format!("edge {key:?} is shared by more than two triangles"))
                        }
                    }
                }
            }
            let mut attached = vec![false; nodes.len()];
            for &v in &cells {
                attached[v] = true;
            }
            if let Some(v) = attached.iter().position(|a| !a) {
                return invalid(format!("node {v} is not attached to any element"));
            }
            for key in order {
                match edges[&key] {
                    (first, Some(second)) => {
                        let f = facets.len();
                        facets.push(InteriorFacet {
                            nodes: [key.0, key.1],
                            elements: [first.min(second), first.max(second)],
                        });
                        element_facets[first].push(f);
                        element_facets[second].push(f);
                    }
                    (_, None) => {
                        on_boundary[key.0] = true;
                        on_boundary[key.1] = true;
                    }
                }
            }
        }
        let mesh = Mesh {
            dim,
            nodes,
            cells,
            facets,
            element_facets,
            on_boundary,
            parents,
            generation,
        };
        for e in 0..n_elem {
            if !(mesh.geometry(e).measure > 0.0) {
                return invalid(format!("element {e} has non-positive measure"));
            }
        }
        Ok(mesh)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> Point {
        self.nodes[i]
    }

    /// Node indices of element `e` (two for intervals, three for triangles
    /// with the newest vertex first).
    pub fn element(&self, e: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.cells[k * e..k * e + k]
    }

    pub fn elements(&self) -> impl Iterator<Item = &[usize]> {
        self.cells.chunks_exact(self.dim + 1)
    }

    pub fn interior_facets(&self) -> &[InteriorFacet] {
        &self.facets
    }

    /// Indices into [`Mesh::interior_facets`] of the interior facets of `e`.
    pub fn element_facets(&self, e: usize) -> &[usize] {
        &self.element_facets[e]
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.on_boundary[node]
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.num_nodes()).filter(|&v| self.on_boundary[v]).collect()
    }

    pub fn free_nodes(&self) -> Vec<usize> {
        (0..self.num_nodes()).filter(|&v| !self.on_boundary[v]).collect()
    }

    /// Number of degrees of freedom of the P1 space with Dirichlet conditions.
    pub fn num_free(&self) -> usize {
        self.on_boundary.iter().filter(|b| !**b).count()
    }

    /// For every element, the element of the previous generation it was cut
    /// from (itself for meshes that were never refined).
    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    pub fn geometry(&self, e: usize) -> ElementGeometry {
        let el = self.element(e);
        if self.dim == 1 {
            let len = self.nodes[el[1]][0] - self.nodes[el[0]][0];
            ElementGeometry {
                measure: len,
                grads: [[-1.0 / len, 0.0], [1.0 / len, 0.0], [0.0, 0.0]],
            }
        } else {
            let [p0, p1, p2] = [self.nodes[el[0]], self.nodes[el[1]], self.nodes[el[2]]];
            let a2 = signed_area2(p0, p1, p2);
            ElementGeometry {
                measure: 0.5 * a2,
                grads: [
                    [(p1[1] - p2[1]) / a2, (p2[0] - p1[0]) / a2],
                    [(p2[1] - p0[1]) / a2, (p0[0] - p2[0]) / a2],
                    [(p0[1] - p1[1]) / a2, (p1[0] - p0[0]) / a2],
                ],
            }
        }
    }

    /// Physical point with barycentric coordinates `bary` in element `e`.
    pub fn point_at(&self, e: usize, bary: &[f64; 3]) -> Point {
        let mut p = [0.0; 2];
        for (k, &v) in self.element(e).iter().enumerate() {
            p[0] += bary[k] * self.nodes[v][0];
            p[1] += bary[k] * self.nodes[v][1];
        }
        p
    }

    /// Barycentric coordinates of `p` with respect to element `e`.
    pub fn barycentric(&self, e: usize, p: Point) -> [f64; 3] {
        let el = self.element(e);
        if self.dim == 1 {
            let (x0, x1) = (self.nodes[el[0]][0], self.nodes[el[1]][0]);
            let s = (p[0] - x0) / (x1 - x0);
            [1.0 - s, s, 0.0]
        } else {
            let [p0, p1, p2] = [self.nodes[el[0]], self.nodes[el[1]], self.nodes[el[2]]];
            let a2 = signed_area2(p0, p1, p2);
            [
                signed_area2(p, p1, p2) / a2,
                signed_area2(p0, p, p2) / a2,
                signed_area2(p0, p1, p) / a2,
            ]
        }
    }

    /// Finds an element containing `p` (closed, with a small tolerance).
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        const TOL: f64 = 1e-12;
        (0..self.num_elements()).find_map(|e| {
            let b = self.barycentric(e, p);
            let inside = b[..=self.dim].iter().all(|&l| l >= -TOL);
            inside.then_some((e, b))
        })
    }

    pub fn size_data(&self) -> SizeData {
        let element: Vec<f64> = (0..self.num_elements()).map(|e| self.diameter(e)).collect();
        let facet = self
            .facets
            .iter()
            .map(|f| {
                if self.dim == 1 {
                    0.5 * (element[f.elements[0]] + element[f.elements[1]])
                } else {
                    dist(self.nodes[f.nodes[0]], self.nodes[f.nodes[1]])
                }
            })
            .collect();
        SizeData { element, facet }
    }

    pub fn diameter(&self, e: usize) -> f64 {
        let el = self.element(e);
        if self.dim == 1 {
            self.nodes[el[1]][0] - self.nodes[el[0]][0]
        } else {
            let [p0, p1, p2] = [self.nodes[el[0]], self.nodes[el[1]], self.nodes[el[2]]];
            dist(p0, p1).max(dist(p1, p2)).max(dist(p2, p0))
        }
    }

    /// Sum of element measures.
    pub fn total_measure(&self) -> f64 {
        (0..self.num_elements()).map(|e| self.geometry(e).measure).sum()
    }

    /// Smallest interior angle over all triangles, in radians. `None` in 1d.
    pub fn min_angle(&self) -> Option<f64> {
        if self.dim != 2 {
            return None;
        }
        let mut min = f64::INFINITY;
        for el in self.elements() {
            let p = [self.nodes[el[0]], self.nodes[el[1]], self.nodes[el[2]]];
            for k in 0..3 {
                let (a, b, c) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
                min = min.min(cos.clamp(-1.0, 1.0).acos());
            }
        }
        Some(min)
    }

    /// Refines the mesh. Every marked element is bisected at least once: 1d
    /// elements at their midpoint, triangles by newest-vertex bisection with
    /// the conforming closure.
    pub fn refine(&self, marked: &[usize]) -> Result<(Mesh, Prolongation)> {
        let n_elem = self.num_elements();
        if let Some(&bad) = marked.iter().find(|&&e| e >= n_elem) {
            return invalid(format!("marked element {bad} does not exist ({n_elem} elements)"));
        }
        let mut nodes = self.nodes.clone();
        let mut midpoints = Vec::new();
        let mut cells = Vec::with_capacity(self.cells.len() + 4 * marked.len());
        let mut parents = Vec::with_capacity(n_elem + 2 * marked.len());
        if self.dim == 1 {
            let mut is_marked = vec![false; n_elem];
            for &e in marked {
                is_marked[e] = true;
            }
            for e in 0..n_elem {
                let (a, b) = (self.cells[2 * e], self.cells[2 * e + 1]);
                if is_marked[e] {
                    let m = nodes.len();
                    nodes.push([0.5 * (nodes[a][0] + nodes[b][0]), 0.0]);
                    midpoints.push([a.min(b), a.max(b)]);
                    cells.extend_from_slice(&[a, m, m, b]);
                    parents.extend_from_slice(&[e, e]);
                } else {
                    cells.extend_from_slice(&[a, b]);
                    parents.push(e);
                }
            }
        } else {
            let split = self.closure(marked);
            let mut created: HashMap<(usize, usize), usize> = HashMap::new();
            let mut stack = Vec::new();
            for e in 0..n_elem {
                let t = &self.cells[3 * e..3 * e + 3];
                stack.push([t[0], t[1], t[2]]);
                while let Some([a, b, c]) = stack.pop() {
                    let key = edge_key(b, c);
                    if split.contains(&key) {
                        let m = *created.entry(key).or_insert_with(|| {
                            let (p, q) = (nodes[b], nodes[c]);
                            nodes.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                            midpoints.push([key.0, key.1]);
                            nodes.len() - 1
                        });
                        // LIFO: (m, a, b) is emitted before (m, c, a).
                        stack.push([m, c, a]);
                        stack.push([m, a, b]);
                    } else {
                        cells.extend_from_slice(&[a, b, c]);
                        parents.push(e);
                    }
                }
            }
        }
        let mesh = Mesh::build(self.dim, nodes, cells, parents, self.generation + 1)?;
        let map = Prolongation {
            source_generation: self.generation,
            target_generation: mesh.generation,
            source_nodes: self.num_nodes(),
            midpoints,
        };
        Ok((mesh, map))
    }

    /// Edges to split so that bisecting the marked triangles leaves no
    /// hanging node: every triangle touching a split edge must also split its
    /// refinement edge.
    fn closure(&self, marked: &[usize]) -> HashSet<(usize, usize)> {
        let mut owners: HashMap<(usize, usize), [usize; 2]> = HashMap::new();
        for (e, t) in self.elements().enumerate() {
            for (p, q) in [(t[1], t[2]), (t[2], t[0]), (t[0], t[1])] {
                owners
                    .entry(edge_key(p, q))
                    .and_modify(|o| o[1] = e)
                    .or_insert([e, usize::MAX]);
            }
        }
        let refinement_edge = |e: usize| {
            let t = self.element(e);
            edge_key(t[1], t[2])
        };
        let mut split = HashSet::new();
        let mut queue = Vec::new();
        for &e in marked {
            let key = refinement_edge(e);
            if split.insert(key) {
                queue.push(key);
            }
        }
        while let Some(edge) = queue.pop() {
            for e in owners[&edge] {
                if e == usize::MAX {
                    continue;
                }
                let key = refinement_edge(e);
                if split.insert(key) {
                    queue.push(key);
                }
            }
        }
        split
    }

    /// Plain-text listing: a `nodes <count>` line followed by one `x [y]` line
    /// per node, then an `elements <count>` line followed by the 0-based node
    /// indices of each element.
    pub fn write_dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "nodes {}", self.num_nodes())?;
        for p in &self.nodes {
            if self.dim == 1 {
                writeln!(w, "{:.17e}", p[0])?;
            } else {
                writeln!(w, "{:.17e} {:.17e}", p[0], p[1])?;
            }
        }
        writeln!(w, "elements {}", self.num_elements())?;
        for el in self.elements() {
            let line: Vec<String> = el.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }
}
