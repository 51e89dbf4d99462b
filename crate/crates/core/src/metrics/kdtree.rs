/// Exact nearest-neighbour index over a fixed 3D point set.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<[f64; 3]>,
    nodes: Vec<KdNode>,
}

#[derive(Debug, Clone, Copy)]
struct KdNode {
    point: usize,
    axis: usize,
    left: Option<usize>,
    right: Option<usize>,
}

impl KdTree {
    pub fn new(points: &[[f64; 3]]) -> Self {
        let mut tree = KdTree { points: points.to_vec(), nodes: Vec::with_capacity(points.len()) };
        let mut idx: Vec<usize> = (0..points.len()).collect();
        tree.build(&mut idx);
        tree
    }

    fn build(&mut self, idx: &mut [usize]) -> Option<usize> {
        if idx.is_empty() {
            return None;
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in idx.iter() {
            for a in 0..3 {
                lo[a] = lo[a].min(self.points[i][a]);
                hi[a] = hi[a].max(self.points[i][a]);
            }
        }
        let axis = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).partial_cmp(&(hi[b] - lo[b])).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap_or(0);
        let mid = idx.len() / 2;
        let pts = &self.points;
        idx.select_nth_unstable_by(mid, |&x, &y| {
            pts[x][axis].partial_cmp(&pts[y][axis]).unwrap_or(std::cmp::Ordering::Equal).then(x.cmp(&y))
        });
        let id = self.nodes.len();
        self.nodes.push(KdNode { point: idx[mid], axis, left: None, right: None });
        let (l, r) = idx.split_at_mut(mid);
        let left = self.build(l);
        let right = self.build(&mut r[1..]);
        self.nodes[id].left = left;
        self.nodes[id].right = right;
        Some(id)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index and squared distance of the nearest stored point.
    pub fn nearest(&self, q: [f64; 3]) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(0, q, &mut best);
        Some(best)
    }

    fn search(&self, id: usize, q: [f64; 3], best: &mut (usize, f64)) {
        let node = self.nodes[id];
        let p = self.points[node.point];
        let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2);
        if d2 < best.1 || (d2 == best.1 && node.point < best.0) {
            *best = (node.point, d2);
        }
        let diff = q[node.axis] - p[node.axis];
        let (near, far) = if diff < 0.0 { (node.left, node.right) } else { (node.right, node.left) };
        if let Some(n) = near {
            self.search(n, q, best);
        }
        if let Some(f) = far {
            if diff * diff <= best.1 {
                self.search(f, q, best);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_exact_and_duplicate_points() {
        let pts = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 2.0, 0.0]];
        let t = KdTree::new(&pts);
        assert_eq!(t.nearest([0.9, 0.1, 0.0]).unwrap().0, 1);
        let (i, d2) = t.nearest([0.0, 1.9, 0.0]).unwrap();
        assert!(i == 3 && (d2 - 0.01).abs() < 1e-15);
        assert!(KdTree::new(&[]).nearest([0.0; 3]).is_none());
    }
}
