use crate::linalg::Vec3;
use crate::numeric::Real;

const LEAF: usize = 8;

enum Node<T> {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: T, left: Box<Node<T>>, right: Box<Node<T>> },
}

/// Static 3-d tree for exact nearest-neighbour queries.
pub struct KdTree<T> {
    points: Vec<Vec3<T>>,
    root: Node<T>,
}

impl<T: Real> KdTree<T> {
    pub fn new(mut points: Vec<Vec3<T>>) -> Self {
        let n = points.len();
        let root = build(&mut points, 0, n);
        Self { points, root }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Squared distance to the nearest stored point (`inf` when empty).
    pub fn nearest_sq(&self, q: Vec3<T>) -> T {
        let mut best = T::infinity();
        self.search(&self.root, q, &mut best);
        best
    }

    fn search(&self, node: &Node<T>, q: Vec3<T>, best: &mut T) {
        match node {
            Node::Leaf { start, end } => {
                for p in &self.points[*start..*end] {
                    let d = (*p - q).norm_squared();
                    if d < *best {
                        *best = d;
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[*axis] - *value;
                let (near, far) = if diff <= T::zero() { (left, right) } else { (right, left) };
                self.search(near, q, best);
                if diff * diff <= *best {
                    self.search(far, q, best);
                }
            }
        }
    }
}

fn build<T: Real>(pts: &mut [Vec3<T>], offset: usize, len: usize) -> Node<T> {
    let slice = &mut pts[offset..offset + len];
    if len <= LEAF {
        return Node::Leaf { start: offset, end: offset + len };
    }
    let (lo, hi) = slice.iter().fold((slice[0], slice[0]), |(lo, hi), p| (lo.min_elem(*p), hi.max_elem(*p)));
    let ext = hi - lo;
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    let mid = len / 2;
    slice.select_nth_unstable_by(mid, |a, b| a[axis].partial_cmp(&b[axis]).expect("finite points"));
    let value = slice[mid][axis];
    // left holds coordinates <= value, right >= value
    Node::Split {
        axis,
        value,
        left: Box::new(build(pts, offset, mid)),
        right: Box::new(build(pts, offset + mid, len - mid)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn matches_brute_force(
            pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0), 1..300),
            qs in prop::collection::vec((-6.0f64..6.0, -6.0f64..6.0, -6.0f64..6.0), 1..30),
        ) {
            let pts: Vec<_> = pts.into_iter().map(|(x, y, z)| Vec3::new(x, y, z)).collect();
            let tree = KdTree::new(pts.clone());
            for (x, y, z) in qs {
                let q = Vec3::new(x, y, z);
                let brute = pts.iter().map(|p| (*p - q).norm_squared()).fold(f64::INFINITY, f64::min);
                prop_assert_eq!(tree.nearest_sq(q), brute);
            }
        }
    }

    #[test]
    fn duplicate_coordinates() {
        let pts: Vec<_> = (0..50).map(|i| Vec3::new(1.0, (i % 3) as f64, 0.0)).collect();
        let tree = KdTree::new(pts);
        assert_eq!(tree.nearest_sq(Vec3::new(1.0, 2.0, 0.5)), 0.25);
    }
}
