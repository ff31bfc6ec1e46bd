//! Landmark shapes, component partitioning, normalization, the interocular
//! error metric, and cross-validation folds.

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of landmark points in a full shape.
pub const NUM_POINTS: usize = 26;

/// The four facial components. Order is fixed and used everywhere a
/// component index appears.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    Eyebrow,
    Eye,
    Nose,
    Mouth,
}

impl Component {
    pub const ALL: [Component; 4] = [
        Component::Eyebrow,
        Component::Eye,
        Component::Nose,
        Component::Mouth,
    ];

    pub fn index(self) -> usize {
        match self {
            Component::Eyebrow => 0,
            Component::Eye => 1,
            Component::Nose => 2,
            Component::Mouth => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Component::Eyebrow => "eyebrow",
            Component::Eye => "eye",
            Component::Nose => "nose",
            Component::Mouth => "mouth",
        }
    }

    pub fn from_name(name: &str) -> Option<Component> {
        Component::ALL.iter().copied().find(|c| c.name() == name)
    }
}

impl std::fmt::Display for Component {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// An ordered set of landmark points, `(x, y)` per point.
///
/// Full shapes carry exactly [`NUM_POINTS`] points; the model layer also
/// operates on reduced point counts for small test models, so the length is
/// carried explicitly rather than being a compile-time constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSet {
    points: Vec<(f64, f64)>,
}

impl LandmarkSet {
    /// A full 26-point shape.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        Self::with_len(points, NUM_POINTS)
    }

    /// A shape with an explicit point count (used by reduced test models).
    pub fn with_len(points: Vec<(f64, f64)>, expected: usize) -> Result<Self> {
        if points.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "LandmarkSet point count",
                expected,
                actual: points.len(),
            });
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::DegenerateShape {
                reason: "non-finite coordinate".into(),
            });
        }
        Ok(Self { points })
    }

    /// Rebuilds a shape from the flat `[x0, y0, x1, y1, ...]` layout.
    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.len() % 2 != 0 {
            return Err(Error::DimensionMismatch {
                context: "LandmarkSet::from_flat",
                expected: flat.len() + 1,
                actual: flat.len(),
            });
        }
        let points = flat.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        Self::with_len(points, flat.len() / 2)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn point(&self, i: usize) -> (f64, f64) {
        self.points[i]
    }

    /// Flat `[x0, y0, x1, y1, ...]` vector (length `2 * len`).
    pub fn flatten(&self) -> DVector<f64> {
        let mut v = DVector::zeros(2 * self.points.len());
        for (i, (x, y)) in self.points.iter().enumerate() {
            v[2 * i] = *x;
            v[2 * i + 1] = *y;
        }
        v
    }

    /// Coordinates of the given point indices, flattened in index order.
    pub fn gather(&self, indices: &[usize]) -> DVector<f64> {
        let mut v = DVector::zeros(2 * indices.len());
        for (slot, &i) in indices.iter().enumerate() {
            v[2 * slot] = self.points[i].0;
            v[2 * slot + 1] = self.points[i].1;
        }
        v
    }

    /// Centroid of the given point indices.
    pub fn centroid(&self, indices: &[usize]) -> (f64, f64) {
        let n = indices.len() as f64;
        let (mut cx, mut cy) = (0.0, 0.0);
        for &i in indices {
            cx += self.points[i].0;
            cy += self.points[i].1;
        }
        (cx / n, cy / n)
    }
}

/// Disjoint assignment of point indices to the four components, covering
/// `0..num_points` exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentPartition {
    pub eyebrow: Vec<usize>,
    pub eye: Vec<usize>,
    pub nose: Vec<usize>,
    pub mouth: Vec<usize>,
}

impl ComponentPartition {
    /// The default 26-point convention: eyebrows 0-7, eyes 8-15, nose 16-19,
    /// mouth 20-25.
    pub fn default_26() -> Self {
        Self {
            eyebrow: (0..8).collect(),
            eye: (8..16).collect(),
            nose: (16..20).collect(),
            mouth: (20..26).collect(),
        }
    }

    pub fn indices(&self, c: Component) -> &[usize] {
        match c {
            Component::Eyebrow => &self.eyebrow,
            Component::Eye => &self.eye,
            Component::Nose => &self.nose,
            Component::Mouth => &self.mouth,
        }
    }

    /// Total number of points covered.
    pub fn num_points(&self) -> usize {
        Component::ALL.iter().map(|&c| self.indices(c).len()).sum()
    }

    /// Dimension (2 * point count) of one component's coordinate vector.
    pub fn dim(&self, c: Component) -> usize {
        2 * self.indices(c).len()
    }

    /// Checks the disjoint-cover invariant over `0..num_points`.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_points();
        let mut seen = vec![false; n];
        for &c in &Component::ALL {
            let idx = self.indices(c);
            if idx.is_empty() {
                return Err(Error::EmptyInput {
                    context: "ComponentPartition (empty component)",
                });
            }
            for &i in idx {
                if i >= n {
                    return Err(Error::IndexOutOfRange {
                        context: "ComponentPartition",
                        index: i,
                        size: n,
                    });
                }
                if seen[i] {
                    return Err(Error::DegenerateShape {
                        reason: format!("partition assigns point {i} twice"),
                    });
                }
                seen[i] = true;
            }
        }
        Ok(())
    }
}

/// Eye-center references used for normalization and the error metric: the
/// two eye centers are the centroids of these index groups, and the scale
/// convention is unit interocular distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationSpec {
    pub left_eye: Vec<usize>,
    pub right_eye: Vec<usize>,
}

impl NormalizationSpec {
    /// Eye centers from the default 26-point partition: points 8-11 (left)
    /// and 12-15 (right).
    pub fn default_26() -> Self {
        Self {
            left_eye: (8..12).collect(),
            right_eye: (12..16).collect(),
        }
    }

    pub fn validate(&self, num_points: usize) -> Result<()> {
        if self.left_eye.is_empty() || self.right_eye.is_empty() {
            return Err(Error::EmptyInput {
                context: "NormalizationSpec eye group",
            });
        }
        for &i in self.left_eye.iter().chain(&self.right_eye) {
            if i >= num_points {
                return Err(Error::IndexOutOfRange {
                    context: "NormalizationSpec",
                    index: i,
                    size: num_points,
                });
            }
        }
        Ok(())
    }

    /// Distance between the two eye centers of `shape`.
    pub fn interocular(&self, shape: &LandmarkSet) -> f64 {
        let (lx, ly) = shape.centroid(&self.left_eye);
        let (rx, ry) = shape.centroid(&self.right_eye);
        ((lx - rx).powi(2) + (ly - ry).powi(2)).sqrt()
    }
}

/// Translates the shape so the midpoint of the two eye centers is the
/// origin and scales it so the interocular distance is 1.
pub fn normalize(raw: &LandmarkSet, spec: &NormalizationSpec) -> Result<LandmarkSet> {
    spec.validate(raw.len())?;
    let (lx, ly) = raw.centroid(&spec.left_eye);
    let (rx, ry) = raw.centroid(&spec.right_eye);
    let dist = ((lx - rx).powi(2) + (ly - ry).powi(2)).sqrt();
    if dist < 1e-9 {
        return Err(Error::DegenerateShape {
            reason: format!("interocular distance {dist} below 1e-9"),
        });
    }
    let (mx, my) = ((lx + rx) / 2.0, (ly + ry) / 2.0);
    let points = raw
        .points()
        .iter()
        .map(|(x, y)| ((x - mx) / dist, (y - my) / dist))
        .collect();
    LandmarkSet::with_len(points, raw.len())
}

/// Per-point normalized distances between a detected shape and the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct PointErrors {
    per_point: Vec<f64>,
}

impl PointErrors {
    pub fn per_point(&self) -> &[f64] {
        &self.per_point
    }

    pub fn mean(&self) -> f64 {
        self.per_point.iter().sum::<f64>() / self.per_point.len() as f64
    }

    /// Mean over one component's points.
    pub fn component_mean(&self, partition: &ComponentPartition, c: Component) -> f64 {
        let idx = partition.indices(c);
        idx.iter().map(|&i| self.per_point[i]).sum::<f64>() / idx.len() as f64
    }
}

/// Per-point error `|p_i - p̂_i| / interocular`.
pub fn normalized_error(
    detected: &LandmarkSet,
    truth: &LandmarkSet,
    interocular: f64,
) -> Result<PointErrors> {
    if detected.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            context: "normalized_error",
            expected: truth.len(),
            actual: detected.len(),
        });
    }
    if !(interocular > 0.0) {
        return Err(Error::DegenerateShape {
            reason: format!("interocular distance {interocular} not positive"),
        });
    }
    let per_point = detected
        .points()
        .iter()
        .zip(truth.points())
        .map(|((dx, dy), (tx, ty))| ((dx - tx).powi(2) + (dy - ty).powi(2)).sqrt() / interocular)
        .collect();
    Ok(PointErrors { per_point })
}

/// Disjoint index folds covering a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
}

impl FoldPlan {
    /// Indices not in fold `k` (the training split for that fold).
    pub fn complement(&self, k: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, fold) in self.folds.iter().enumerate() {
            if i != k {
                out.extend_from_slice(fold);
            }
        }
        out.sort_unstable();
        out
    }
}

/// Seeded shuffle followed by a round-robin split into `k` folds whose
/// sizes differ by at most one.
pub fn make_folds(n_samples: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 || k > n_samples {
        return Err(Error::TooFewSamples {
            context: "make_folds",
            needed: k.max(2),
            actual: n_samples,
        });
    }
    let mut order: Vec<usize> = (0..n_samples).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut folds = vec![Vec::new(); k];
    for (i, idx) in order.into_iter().enumerate() {
        folds[i % k].push(idx);
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(FoldPlan { folds, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn square_shape() -> LandmarkSet {
        // 26 points on a ring, with eye groups placed so the eye centers are
        // (-0.5, 0) and (0.5, 0).
        let mut pts = Vec::new();
        for i in 0..NUM_POINTS {
            let a = i as f64 / NUM_POINTS as f64 * std::f64::consts::TAU;
            pts.push((a.cos(), a.sin()));
        }
        // Overwrite the default eye groups (8..12 left, 12..16 right).
        for (k, i) in (8..12).enumerate() {
            pts[i] = (-0.5 + 0.01 * (k as f64 - 1.5), 0.01 * (k as f64 - 1.5));
        }
        for (k, i) in (12..16).enumerate() {
            pts[i] = (0.5 + 0.01 * (k as f64 - 1.5), -0.01 * (k as f64 - 1.5));
        }
        LandmarkSet::new(pts).unwrap()
    }

    #[test]
    fn partition_default_is_valid() {
        let p = ComponentPartition::default_26();
        p.validate().unwrap();
        assert_eq!(p.num_points(), NUM_POINTS);
        assert_eq!(p.dim(Component::Mouth), 12);
    }

    #[test]
    fn partition_rejects_overlap() {
        let mut p = ComponentPartition::default_26();
        p.eye[0] = 0; // collides with eyebrow
        assert!(p.validate().is_err());
    }

    #[test]
    fn normalize_is_identity_on_normalized_shape() {
        let spec = NormalizationSpec::default_26();
        let s = normalize(&square_shape(), &spec).unwrap();
        let again = normalize(&s, &spec).unwrap();
        for (a, b) in s.points().iter().zip(again.points()) {
            assert_relative_eq!(a.0, b.0, epsilon = 1e-12);
            assert_relative_eq!(a.1, b.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn normalize_is_translation_and_scale_invariant() {
        let spec = NormalizationSpec::default_26();
        let base = square_shape();
        let normalized = normalize(&base, &spec).unwrap();

        let shifted = LandmarkSet::new(
            base.points()
                .iter()
                .map(|(x, y)| (x + 10.0, y - 3.0))
                .collect(),
        )
        .unwrap();
        let scaled =
            LandmarkSet::new(base.points().iter().map(|(x, y)| (x * 2.0, y * 2.0)).collect())
                .unwrap();

        for variant in [shifted, scaled] {
            let n = normalize(&variant, &spec).unwrap();
            for (a, b) in n.points().iter().zip(normalized.points()) {
                assert_relative_eq!(a.0, b.0, epsilon = 1e-12);
                assert_relative_eq!(a.1, b.1, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn normalize_rejects_coincident_eyes() {
        let pts = vec![(1.0, 1.0); NUM_POINTS];
        let s = LandmarkSet::new(pts).unwrap();
        let err = normalize(&s, &NormalizationSpec::default_26()).unwrap_err();
        assert!(matches!(err, Error::DegenerateShape { .. }));
    }

    #[test]
    fn normalized_error_zero_for_identical_shapes() {
        let s = square_shape();
        let e = normalized_error(&s, &s, 1.0).unwrap();
        assert!(e.per_point().iter().all(|&v| v == 0.0));
        assert_eq!(e.mean(), 0.0);
    }

    #[test]
    fn normalized_error_unit_offset() {
        let truth = square_shape();
        let mut pts = truth.points().to_vec();
        pts[5].0 += 2.5; // offset by exactly the interocular distance below
        let det = LandmarkSet::new(pts).unwrap();
        let e = normalized_error(&det, &truth, 2.5).unwrap();
        assert_relative_eq!(e.per_point()[5], 1.0, epsilon = 1e-12);
        assert_eq!(e.per_point()[4], 0.0);
    }

    #[test]
    fn normalized_error_three_four_five() {
        let truth = square_shape();
        let mut pts = truth.points().to_vec();
        pts[0].0 += 0.3;
        pts[0].1 += 0.4;
        let det = LandmarkSet::new(pts).unwrap();
        let e = normalized_error(&det, &truth, 1.0).unwrap();
        assert_relative_eq!(e.per_point()[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn normalized_error_rejects_nonpositive_interocular() {
        let s = square_shape();
        assert!(normalized_error(&s, &s, 0.0).is_err());
    }

    #[test]
    fn folds_singletons() {
        let plan = make_folds(10, 10, 1).unwrap();
        assert_eq!(plan.folds.len(), 10);
        assert!(plan.folds.iter().all(|f| f.len() == 1));
    }

    #[test]
    fn folds_sizes_differ_by_at_most_one() {
        let plan = make_folds(10, 3, 1).unwrap();
        let mut sizes: Vec<usize> = plan.folds.iter().map(|f| f.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![3, 3, 4]);
        let mut all: Vec<usize> = plan.folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn folds_deterministic_per_seed() {
        assert_eq!(make_folds(25, 4, 9).unwrap(), make_folds(25, 4, 9).unwrap());
        assert_ne!(
            make_folds(25, 4, 9).unwrap().folds,
            make_folds(25, 4, 10).unwrap().folds
        );
    }

    #[test]
    fn folds_reject_too_few_samples() {
        assert!(make_folds(3, 4, 0).is_err());
        assert!(make_folds(3, 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn normalize_idempotent(dx in -50.0..50.0f64, dy in -50.0..50.0f64, s in 0.1..20.0f64) {
            let spec = NormalizationSpec::default_26();
            let base = square_shape();
            let moved = LandmarkSet::new(
                base.points().iter().map(|(x, y)| (x * s + dx, y * s + dy)).collect(),
            ).unwrap();
            let once = normalize(&moved, &spec).unwrap();
            let twice = normalize(&once, &spec).unwrap();
            for (a, b) in once.points().iter().zip(twice.points()) {
                prop_assert!((a.0 - b.0).abs() <= 1e-12);
                prop_assert!((a.1 - b.1).abs() <= 1e-12);
            }
        }

        #[test]
        fn error_triangle_inequality(seed in 0u64..1000) {
            use rand::Rng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut jitter = |base: &LandmarkSet| {
                LandmarkSet::new(
                    base.points().iter()
                        .map(|(x, y)| (x + rng.random_range(-0.5..0.5), y + rng.random_range(-0.5..0.5)))
                        .collect(),
                ).unwrap()
            };
            let a = square_shape();
            let b = jitter(&a);
            let c = jitter(&a);
            let ab = normalized_error(&a, &b, 1.3).unwrap();
            let bc = normalized_error(&b, &c, 1.3).unwrap();
            let ac = normalized_error(&a, &c, 1.3).unwrap();
            for i in 0..NUM_POINTS {
                prop_assert!(ac.per_point()[i] <= ab.per_point()[i] + bc.per_point()[i] + 1e-12);
            }
        }
    }
}
