use std::f64::consts::PI;

use super::mesh::TriangleMesh;
use super::vec3::{add, cross, dist2, dot, norm, scale, sub};

/// Closest point to `p` on triangle `(a, b, c)` (Voronoi-region walk).
pub fn closest_point_on_triangle(p: [f64; 3], a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> [f64; 3] {
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(p, a);
    let d1 = dot(ab, ap);
    let d2 = dot(ac, ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = sub(p, b);
    let d3 = dot(ab, bp);
    let d4 = dot(ac, bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return add(a, scale(ab, d1 / (d1 - d3)));
    }
    let cp = sub(p, c);
    let d5 = dot(ab, cp);
    let d6 = dot(ac, cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return add(a, scale(ac, d2 / (d2 - d6)));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return add(b, scale(sub(c, b), w));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    add(a, add(scale(ab, v), scale(ac, w)))
}

/// Signed solid angle of triangle `(a, b, c)` seen from `p`, over 4π.
pub fn triangle_winding(p: [f64; 3], a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let (a, b, c) = (sub(a, p), sub(b, p), sub(c, p));
    let (la, lb, lc) = (norm(a), norm(b), norm(c));
    let det = dot(a, cross(b, c));
    let div = la * lb * lc + dot(a, b) * lc + dot(a, c) * lb + dot(b, c) * la;
    det.atan2(div) / (2.0 * PI)
}

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min: [f64; 3],
    max: [f64; 3],
}

impl Aabb {
    fn empty() -> Self {
        Aabb { min: [f64::INFINITY; 3], max: [f64::NEG_INFINITY; 3] }
    }

    fn grow(&mut self, p: [f64; 3]) {
        for a in 0..3 {
            self.min[a] = self.min[a].min(p[a]);
            self.max[a] = self.max[a].max(p[a]);
        }
    }

    fn dist2(&self, p: [f64; 3]) -> f64 {
        let mut d = 0.0;
        for a in 0..3 {
            let e = (self.min[a] - p[a]).max(0.0).max(p[a] - self.max[a]);
            d += e * e;
        }
        d
    }
}

#[derive(Debug, Clone)]
struct Node {
    bbox: Aabb,
    /// Children for inner nodes, `[start, end)` into the triangle order for leaves.
    kind: NodeKind,
    /// Σ area·n over the node's triangles.
    dipole: [f64; 3],
    center: [f64; 3],
    radius: f64,
}

#[derive(Debug, Clone, Copy)]
enum NodeKind {
    Inner(usize, usize),
    Leaf(usize, usize),
}

const LEAF_SIZE: usize = 4;

/// Far-field acceptance ratio for the winding-number dipole expansion.
const WINDING_BETA: f64 = 4.0;

/// Bounding volume hierarchy over a mesh's triangles.
#[derive(Debug, Clone)]
pub struct Bvh<'m> {
    mesh: &'m TriangleMesh,
    nodes: Vec<Node>,
    order: Vec<usize>,
}

/// Result of a nearest-triangle query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest {
    pub triangle: usize,
    pub point: [f64; 3],
    pub dist2: f64,
}

impl<'m> Bvh<'m> {
    pub fn new(mesh: &'m TriangleMesh) -> Self {
        let n = mesh.triangles().len();
        let centroids: Vec<[f64; 3]> = (0..n)
            .map(|t| {
                let [a, b, c] = mesh.corners(t);
                scale(add(add(a, b), c), 1.0 / 3.0)
            })
            .collect();
        let mut bvh = Bvh { mesh, nodes: Vec::new(), order: (0..n).collect() };
        if n > 0 {
            bvh.build(0, n, &centroids);
        }
        bvh
    }

    fn build(&mut self, start: usize, end: usize, centroids: &[[f64; 3]]) -> usize {
        let mut bbox = Aabb::empty();
        let mut cbox = Aabb::empty();
        let mut dipole = [0.0; 3];
        let mut weighted = [0.0; 3];
        let mut area = 0.0;
        for &t in &self.order[start..end] {
            let [a, b, c] = self.mesh.corners(t);
            for p in [a, b, c] {
                bbox.grow(p);
            }
            cbox.grow(centroids[t]);
            let n2 = cross(sub(b, a), sub(c, a));
            dipole = add(dipole, scale(n2, 0.5));
            let ar = 0.5 * norm(n2);
            weighted = add(weighted, scale(centroids[t], ar));
            area += ar;
        }
        let center = if area > 0.0 { scale(weighted, 1.0 / area) } else { centroids[self.order[start]] };
        let mut radius: f64 = 0.0;
        for &t in &self.order[start..end] {
            for p in self.mesh.corners(t) {
                radius = radius.max(dist2(p, center).sqrt());
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node { bbox, kind: NodeKind::Leaf(start, end), dipole, center, radius });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let axis = (0..3)
            .max_by(|&a, &b| {
                (cbox.max[a] - cbox.min[a]).partial_cmp(&(cbox.max[b] - cbox.min[b])).unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(0);
        let mid = (start + end) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&x, &y| {
            centroids[x][axis].partial_cmp(&centroids[y][axis]).unwrap_or(std::cmp::Ordering::Equal).then(x.cmp(&y))
        });
        let left = self.build(start, mid, centroids);
        let right = self.build(mid, end, centroids);
        self.nodes[id].kind = NodeKind::Inner(left, right);
        id
    }

    pub fn mesh(&self) -> &TriangleMesh {
        self.mesh
    }

    /// Nearest triangle to `p` closer than `max_dist` (unbounded with `f64::INFINITY`).
    pub fn nearest(&self, p: [f64; 3], max_dist: f64) -> Option<Nearest> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<Nearest> = None;
        let mut best_d2 = if max_dist.is_finite() { max_dist * max_dist } else { f64::INFINITY };
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.bbox.dist2(p) > best_d2 {
                continue;
            }
            match node.kind {
                NodeKind::Leaf(s, e) => {
                    for &t in &self.order[s..e] {
                        let [a, b, c] = self.mesh.corners(t);
                        let q = closest_point_on_triangle(p, a, b, c);
                        let d2 = dist2(p, q);
                        if d2 < best_d2 || (d2 == best_d2 && best.is_none_or(|n| t < n.triangle)) {
                            best_d2 = d2;
                            best = Some(Nearest { triangle: t, point: q, dist2: d2 });
                        }
                    }
                }
                NodeKind::Inner(l, r) => {
                    let (dl, dr) = (self.nodes[l].bbox.dist2(p), self.nodes[r].bbox.dist2(p));
                    // push the farther child first so the nearer one is searched first
                    if dl <= dr {
                        stack.push(r);
                        stack.push(l);
                    } else {
                        stack.push(l);
                        stack.push(r);
                    }
                }
            }
        }
        best
    }

    /// Generalized winding number of the mesh at `p`: exact near the query,
    /// dipole-approximated for clusters far away relative to their size.
    pub fn winding_number(&self, p: [f64; 3]) -> f64 {
        if self.nodes.is_empty() {
            return 0.0;
        }
        let mut w = 0.0;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            let d = sub(node.center, p);
            let r = norm(d);
            if r > WINDING_BETA * node.radius && r > 0.0 {
                w += dot(node.dipole, d) / (4.0 * PI * r * r * r);
                continue;
            }
            match node.kind {
                NodeKind::Leaf(s, e) => {
                    for &t in &self.order[s..e] {
                        let [a, b, c] = self.mesh.corners(t);
                        w += triangle_winding(p, a, b, c);
                    }
                }
                NodeKind::Inner(l, r) => {
                    stack.push(r);
                    stack.push(l);
                }
            }
        }
        w
    }
}
