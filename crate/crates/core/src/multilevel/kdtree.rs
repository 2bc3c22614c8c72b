//! Small static k-d tree with lazy deletion, used for nearest-unpaired
//! neighbor queries during matching.

/// k-d tree over points in `R^d`, stored flat with stride `d`.
///
/// Points are removed logically via [`KdTree::deactivate`]; searches skip
/// inactive points. Distance ties resolve to the smaller point index so
/// queries are deterministic.
pub struct KdTree {
    dim: usize,
    points: Vec<f64>,
    nodes: Vec<Node>,
    active: Vec<bool>,
    root: i32,
}

struct Node {
    point: usize,
    left: i32,
    right: i32,
}

impl KdTree {
    pub fn new(dim: usize, points: &[f64]) -> Self {
        assert!(dim >= 1);
        assert_eq!(points.len() % dim, 0);
        let n = points.len() / dim;
        let mut order: Vec<usize> = (0..n).collect();
        let mut tree = KdTree {
            dim,
            points: points.to_vec(),
            nodes: Vec::with_capacity(n),
            active: vec![true; n],
            root: -1,
        };
        tree.root = tree.build(&mut order, 0);
        tree
    }

    fn coord(&self, point: usize, axis: usize) -> f64 {
        self.points[point * self.dim + axis]
    }

    fn build(&mut self, order: &mut [usize], depth: usize) -> i32 {
        if order.is_empty() {
            return -1;
        }
        let axis = depth % self.dim;
        let mid = order.len() / 2;
        order.select_nth_unstable_by(mid, |&a, &b| {
            self.coord(a, axis)
                .partial_cmp(&self.coord(b, axis))
                .unwrap()
                .then(a.cmp(&b))
        });
        let point = order[mid];
        let id = self.nodes.len() as i32;
        self.nodes.push(Node {
            point,
            left: -1,
            right: -1,
        });
        let (lo, rest) = order.split_at_mut(mid);
        let hi = &mut rest[1..];
        let left = self.build(lo, depth + 1);
        let right = self.build(hi, depth + 1);
        self.nodes[id as usize].left = left;
        self.nodes[id as usize].right = right;
        id
    }

    pub fn deactivate(&mut self, point: usize) {
        self.active[point] = false;
    }

    /// Nearest active point to `q`, or `None` if everything is inactive.
    pub fn nearest_active(&self, q: &[f64]) -> Option<usize> {
        debug_assert_eq!(q.len(), self.dim);
        let mut best = (f64::INFINITY, usize::MAX);
        self.search(self.root, q, 0, &mut best);
        (best.1 != usize::MAX).then_some(best.1)
    }

    fn search(&self, node: i32, q: &[f64], depth: usize, best: &mut (f64, usize)) {
        if node < 0 {
            return;
        }
        let n = &self.nodes[node as usize];
        if self.active[n.point] {
            let mut d2 = 0.0;
            for (a, qa) in q.iter().enumerate() {
                let diff = qa - self.coord(n.point, a);
                d2 += diff * diff;
            }
            if d2 < best.0 || (d2 == best.0 && n.point < best.1) {
                *best = (d2, n.point);
            }
        }
        let axis = depth % self.dim;
        let diff = q[axis] - self.coord(n.point, axis);
        let (near, far) = if diff < 0.0 {
            (n.left, n.right)
        } else {
            (n.right, n.left)
        };
        self.search(near, q, depth + 1, best);
        if diff * diff <= best.0 {
            self.search(far, q, depth + 1, best);
        }
    }
}
