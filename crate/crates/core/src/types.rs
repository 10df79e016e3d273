use crate::error::{Error, Result};

/// Per-pixel feature vector `[x, y, L, a, b]`.
pub type Feature = [f64; 5];

/// Number of feature dimensions.
pub const DIMS: usize = 5;

/// Row-major image of 5-D pixel features: raw pixel coordinates followed by CIELab color.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImage {
    width: usize,
    height: usize,
    features: Vec<Feature>,
}

impl FeatureImage {
    /// Builds a feature image from per-pixel Lab triples in row-major order.
    pub fn from_lab(width: usize, height: usize, lab: &[[f64; 3]]) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if lab.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "expected {} Lab values, got {}",
                width * height,
                lab.len()
            )));
        }
        let features = lab
            .iter()
            .enumerate()
            .map(|(j, c)| [(j % width) as f64, (j / width) as f64, c[0], c[1], c[2]])
            .collect();
        Ok(Self { width, height, features })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    #[inline]
    pub fn get(&self, index: usize) -> &Feature {
        &self.features[index]
    }
}

/// Per-class confidence planes, each row-major with scores in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreStack {
    width: usize,
    height: usize,
    class_names: Vec<String>,
    planes: Vec<Vec<f32>>,
}

impl ScoreStack {
    pub fn new(
        width: usize,
        height: usize,
        class_names: Vec<String>,
        planes: Vec<Vec<f32>>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if planes.is_empty() {
            return Err(Error::NoClasses);
        }
        if class_names.len() != planes.len() {
            return Err(Error::InvalidArgument(format!(
                "{} class names for {} planes",
                class_names.len(),
                planes.len()
            )));
        }
        for (p, plane) in planes.iter().enumerate() {
            if plane.len() != width * height {
                return Err(Error::InvalidArgument(format!(
                    "plane {p} holds {} values, expected {}",
                    plane.len(),
                    width * height
                )));
            }
            if let Some((index, &value)) = plane
                .iter()
                .enumerate()
                .find(|(_, v)| !(0.0..=1.0).contains(*v))
            {
                return Err(Error::ScoreOutOfRange { plane: p, index, value });
            }
        }
        Ok(Self { width, height, class_names, planes })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_classes(&self) -> usize {
        self.planes.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn plane(&self, class: usize) -> &[f32] {
        &self.planes[class]
    }

    pub fn planes(&self) -> &[Vec<f32>] {
        &self.planes
    }

    /// Per-pixel decision over the stack.
    ///
    /// With several classes this is the argmax (first index wins ties). A single plane is
    /// a binary problem: label 1 where the score is at least 0.5, label 0 elsewhere.
    pub fn argmax(&self) -> LabelMap {
        let n = self.width * self.height;
        let labels = if self.planes.len() == 1 {
            self.planes[0].iter().map(|&s| u32::from(s >= 0.5)).collect()
        } else {
            (0..n)
                .map(|j| {
                    let mut best = 0;
                    for k in 1..self.planes.len() {
                        if self.planes[k][j] > self.planes[best][j] {
                            best = k;
                        }
                    }
                    best as u32
                })
                .collect()
        };
        LabelMap { width: self.width, height: self.height, labels }
    }

    /// Mask of pixels whose decision selects `class`.
    pub fn foreground_mask(&self, argmax: &LabelMap, class: usize) -> Vec<bool> {
        let target = if self.planes.len() == 1 { 1 } else { class as u32 };
        argmax.labels().iter().map(|&l| l == target).collect()
    }
}

/// Row-major label image. Holds class indices or cluster indices; see [`LabelMap::ORPHAN`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
}

impl LabelMap {
    /// Marks a pixel that no cluster claimed.
    pub const ORPHAN: u32 = u32::MAX;
    /// Ground-truth pixels excluded from evaluation.
    pub const IGNORE: u32 = 255;

    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if labels.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "label map holds {} values, expected {}",
                labels.len(),
                width * height
            )));
        }
        Ok(Self { width, height, labels })
    }

    pub fn filled(width: usize, height: usize, label: u32) -> Self {
        Self { width, height, labels: vec![label; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [u32] {
        &mut self.labels
    }

    #[inline]
    pub fn get(&self, index: usize) -> u32 {
        self.labels[index]
    }

    pub fn same_shape(&self, other: &LabelMap) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch {
                expected_width: self.width,
                expected_height: self.height,
                width: other.width,
                height: other.height,
            });
        }
        Ok(())
    }

    /// Binary mask of pixels carrying `label`.
    pub fn mask(&self, label: u32) -> Vec<bool> {
        self.labels.iter().map(|&l| l == label).collect()
    }
}
