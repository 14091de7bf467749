//! CIFAR binary batches: each record is one label byte followed by a 32x32
//! image stored as 1024 red, 1024 green and 1024 blue bytes, row-major.

use std::fs;
use std::path::Path;

use super::ImageDataset;
use crate::error::{Error, Result};
use crate::image::{Image, CHANNELS};

pub const SIDE: usize = 32;
pub const IMAGE_BYTES: usize = SIDE * SIDE * CHANNELS;
pub const RECORD_BYTES: usize = 1 + IMAGE_BYTES;

/// Loads one or more batch files; ids follow file order.
pub fn load_cifar_binary<P: AsRef<Path>>(paths: &[P], num_classes: usize) -> Result<ImageDataset> {
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for path in paths {
        let path = path.as_ref();
        let bytes = fs::read(path)?;
        if bytes.len() % RECORD_BYTES != 0 {
            return Err(Error::TruncatedFile {
                path: path.to_path_buf(),
                len: bytes.len() as u64,
                record: RECORD_BYTES as u64,
            });
        }
        for record in bytes.chunks_exact(RECORD_BYTES) {
            let label = record[0] as usize;
            if label >= num_classes {
                return Err(Error::LabelOutOfRange { record: labels.len(), label, num_classes });
            }
            labels.push(label);
            images.push(Image::new(SIDE, SIDE, record[1..].to_vec())?);
        }
    }
    ImageDataset::new(images, labels, num_classes)
}

/// Writes a dataset of 32x32 images in the same layout.
pub fn write_cifar_binary(path: impl AsRef<Path>, dataset: &ImageDataset) -> Result<()> {
    let mut bytes = Vec::with_capacity(dataset.len() * RECORD_BYTES);
    for (img, &label) in dataset.images().iter().zip(dataset.labels()) {
        if img.dims() != (SIDE, SIDE) {
            return Err(Error::DimensionMismatch(img.width(), img.height(), SIDE, SIDE));
        }
        let label =
            u8::try_from(label).map_err(|_| Error::InvalidParameter(format!("label {label} exceeds a byte")))?;
        bytes.push(label);
        bytes.extend_from_slice(img.pixels());
    }
    fs::write(path, bytes)?;
    Ok(())
}
