//! Datasets and the file formats shared with external tooling.

pub mod cifar;
pub mod container;
pub mod dump;
pub mod report;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::prob::{one_hot, LabelWeights};

/// Labelled images of uniform size; sample ids are positions `0..N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageDataset {
    images: Vec<Image>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl ImageDataset {
    pub fn new(images: Vec<Image>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::LengthMismatch { expected: images.len(), found: labels.len() });
        }
        if let Some(first) = images.first() {
            for img in &images[1..] {
                first.same_dims(img)?;
            }
        }
        if let Some((record, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= num_classes) {
            return Err(Error::LabelOutOfRange { record, label, num_classes });
        }
        Ok(Self { images, labels, num_classes })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn image(&self, i: usize) -> &Image {
        &self.images[i]
    }

    pub fn images(&self) -> &[Image] {
        &self.images
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_weights(&self, i: usize) -> Result<LabelWeights> {
        one_hot(self.labels[i], self.num_classes)
    }

    /// `(width, height)` of the images, if any.
    pub fn dims(&self) -> Option<(usize, usize)> {
        self.images.first().map(Image::dims)
    }
}
