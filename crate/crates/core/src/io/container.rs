//! Binary container of augmented images, read by external inference tools.
//!
//! All integers little-endian. Header (16 bytes):
//!
//! | offset | size | field                   |
//! |--------|------|-------------------------|
//! | 0      | 4    | magic `AUGR`            |
//! | 4      | 2    | version (1)             |
//! | 6      | 2    | number of classes       |
//! | 8      | 4    | record count            |
//! | 12     | 2    | width                   |
//! | 14     | 2    | height                  |
//!
//! Each record: `id: u32`, `replica: u16`, `k: u16`, then `k` pairs of
//! `(class: u16, weight: f64)`, then `width * height * 3` channel-planar
//! pixel bytes.

use std::fs::File;
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use crate::augment::AugmentedSample;
use crate::error::{Error, Result};
use crate::image::{Image, CHANNELS};
use crate::prob::LabelWeights;

pub const MAGIC: [u8; 4] = *b"AUGR";
pub const VERSION: u16 = 1;
pub const HEADER_BYTES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContainerHeader {
    pub num_classes: u16,
    pub count: u32,
    pub width: u16,
    pub height: u16,
}

impl ContainerHeader {
    pub fn to_bytes(&self) -> [u8; HEADER_BYTES] {
        let mut b = [0u8; HEADER_BYTES];
        b[0..4].copy_from_slice(&MAGIC);
        b[4..6].copy_from_slice(&VERSION.to_le_bytes());
        b[6..8].copy_from_slice(&self.num_classes.to_le_bytes());
        b[8..12].copy_from_slice(&self.count.to_le_bytes());
        b[12..14].copy_from_slice(&self.width.to_le_bytes());
        b[14..16].copy_from_slice(&self.height.to_le_bytes());
        b
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        if b.len() < 4 || b[0..4] != MAGIC {
            return Err(Error::BadMagic);
        }
        if b.len() < HEADER_BYTES {
            return Err(Error::Truncated { offset: b.len() as u64 });
        }
        let u16_at = |o: usize| u16::from_le_bytes([b[o], b[o + 1]]);
        let version = u16_at(4);
        if version != VERSION {
            return Err(Error::VersionUnsupported(version.to_string()));
        }
        Ok(Self {
            num_classes: u16_at(6),
            count: u32::from_le_bytes([b[8], b[9], b[10], b[11]]),
            width: u16_at(12),
            height: u16_at(14),
        })
    }
}

/// One stored record.
#[derive(Debug, Clone, PartialEq)]
pub struct ContainerRecord {
    pub id: u32,
    pub replica: u16,
    pub labels: LabelWeights,
    pub image: Image,
}

impl TryFrom<&AugmentedSample> for ContainerRecord {
    type Error = Error;

    fn try_from(s: &AugmentedSample) -> Result<Self> {
        Ok(Self {
            id: narrow(s.id, "id")?,
            replica: narrow(s.replica_index as u64, "replica")?,
            labels: s.labels.clone(),
            image: s.image.clone(),
        })
    }
}

fn narrow<T: TryFrom<u64>>(v: u64, what: &str) -> Result<T> {
    T::try_from(v).map_err(|_| Error::InvalidParameter(format!("{what} {v} does not fit the container field")))
}

fn encode_record(out: &mut impl Write, r: &ContainerRecord) -> Result<()> {
    out.write_all(&r.id.to_le_bytes())?;
    out.write_all(&r.replica.to_le_bytes())?;
    let pairs: Vec<(usize, f64)> = r.labels.nonzero().collect();
    out.write_all(&narrow::<u16>(pairs.len() as u64, "label count")?.to_le_bytes())?;
    for (class, w) in pairs {
        out.write_all(&narrow::<u16>(class as u64, "class")?.to_le_bytes())?;
        out.write_all(&w.to_le_bytes())?;
    }
    out.write_all(r.image.pixels())?;
    Ok(())
}

/// Writes records of uniform size; the count is patched in at the end.
pub fn write_records<W: Write + Seek>(
    mut out: W,
    num_classes: usize,
    dims: (usize, usize),
    records: impl IntoIterator<Item = Result<ContainerRecord>>,
) -> Result<u32> {
    let mut header = ContainerHeader {
        num_classes: narrow(num_classes as u64, "classes")?,
        count: 0,
        width: narrow(dims.0 as u64, "width")?,
        height: narrow(dims.1 as u64, "height")?,
    };
    let start = out.stream_position()?;
    out.write_all(&header.to_bytes())?;
    let mut count = 0u32;
    for r in records {
        let r = r?;
        if r.image.dims() != dims {
            return Err(Error::DimensionMismatch(r.image.width(), r.image.height(), dims.0, dims.1));
        }
        if r.labels.len() != num_classes {
            return Err(Error::LengthMismatch { expected: num_classes, found: r.labels.len() });
        }
        encode_record(&mut out, &r)?;
        count = count.checked_add(1).ok_or_else(|| Error::InvalidParameter("too many records".into()))?;
    }
    header.count = count;
    let end = out.stream_position()?;
    out.seek(SeekFrom::Start(start))?;
    out.write_all(&header.to_bytes())?;
    out.seek(SeekFrom::Start(end))?;
    out.flush()?;
    Ok(count)
}

/// Writes an augmented stream to `path` and returns the record count.
pub fn write_augmented_dataset(
    path: impl AsRef<Path>,
    num_classes: usize,
    dims: (usize, usize),
    samples: impl IntoIterator<Item = Result<AugmentedSample>>,
) -> Result<u32> {
    let out = BufWriter::new(File::create(path)?);
    write_records(out, num_classes, dims, samples.into_iter().map(|s| s.and_then(|s| ContainerRecord::try_from(&s))))
}

/// Decodes a whole container held in memory.
pub fn decode(bytes: &[u8]) -> Result<(ContainerHeader, Vec<ContainerRecord>)> {
    let header = ContainerHeader::from_bytes(bytes)?;
    let c = header.num_classes as usize;
    let (w, h) = (header.width as usize, header.height as usize);
    let pixel_bytes = w * h * CHANNELS;
    let mut pos = HEADER_BYTES;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
        let end = pos.checked_add(n).filter(|&e| e <= bytes.len()).ok_or(Error::Truncated { offset: *pos as u64 })?;
        let s = &bytes[*pos..end];
        *pos = end;
        Ok(s)
    };

    let mut records = Vec::with_capacity(header.count as usize);
    for _ in 0..header.count {
        let record_start = pos as u64;
        let fixed = take(&mut pos, 8)?;
        let id = u32::from_le_bytes([fixed[0], fixed[1], fixed[2], fixed[3]]);
        let replica = u16::from_le_bytes([fixed[4], fixed[5]]);
        let k = u16::from_le_bytes([fixed[6], fixed[7]]) as usize;
        let mut pairs = Vec::with_capacity(k);
        for _ in 0..k {
            let p = take(&mut pos, 10)?;
            let class = u16::from_le_bytes([p[0], p[1]]) as usize;
            let w = f64::from_le_bytes(p[2..10].try_into().expect("8 bytes"));
            pairs.push((class, w));
        }
        let labels = LabelWeights::from_pairs(c, &pairs).map_err(|e| Error::BadRecord {
            index: records.len(),
            reason: format!("labels at byte {record_start}: {e}"),
        })?;
        let image = Image::new(w, h, take(&mut pos, pixel_bytes)?.to_vec())?;
        records.push(ContainerRecord { id, replica, labels, image });
    }
    if pos != bytes.len() {
        return Err(Error::CountMismatch { expected: header.count as usize, found: header.count as usize + 1 });
    }
    Ok((header, records))
}

pub fn read_augmented_dataset(path: impl AsRef<Path>) -> Result<(ContainerHeader, Vec<ContainerRecord>)> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::one_hot;
    use std::io::Cursor;

    fn encode(records: Vec<ContainerRecord>, c: usize, dims: (usize, usize)) -> Vec<u8> {
        let mut buf = Cursor::new(Vec::new());
        write_records(&mut buf, c, dims, records.into_iter().map(Ok)).unwrap();
        buf.into_inner()
    }

    #[test]
    fn empty_stream_is_valid() {
        let bytes = encode(vec![], 10, (32, 32));
        assert_eq!(bytes.len(), HEADER_BYTES);
        assert_eq!(&bytes[0..4], b"AUGR");
        let (h, r) = decode(&bytes).unwrap();
        assert_eq!(h.count, 0);
        assert!(r.is_empty());
    }

    #[test]
    fn one_hot_record_layout() {
        let img = Image::filled(2, 1, [1, 2, 3]);
        let rec = ContainerRecord { id: 5, replica: 1, labels: one_hot(2, 3).unwrap(), image: img };
        let bytes = encode(vec![rec.clone()], 3, (2, 1));
        let body = &bytes[HEADER_BYTES..];
        assert_eq!(&body[0..4], &5u32.to_le_bytes());
        assert_eq!(&body[4..6], &1u16.to_le_bytes());
        assert_eq!(&body[6..8], &1u16.to_le_bytes());
        assert_eq!(&body[8..10], &2u16.to_le_bytes());
        assert_eq!(&body[10..18], &1.0f64.to_le_bytes());
        assert_eq!(&body[18..], &[1, 1, 2, 2, 3, 3]);
        assert_eq!(decode(&bytes).unwrap().1, vec![rec]);
    }

    #[test]
    fn malformations() {
        assert!(matches!(decode(b"NOPE000000000000"), Err(Error::BadMagic)));
        assert!(matches!(decode(b"AU"), Err(Error::BadMagic)));
        assert!(matches!(decode(b"AUGR\x01\x00"), Err(Error::Truncated { .. })));

        let rec = ContainerRecord { id: 0, replica: 0, labels: one_hot(0, 2).unwrap(), image: Image::zeros(2, 2) };
        let bytes = encode(vec![rec], 2, (2, 2));
        assert!(matches!(decode(&bytes[..bytes.len() - 1]), Err(Error::Truncated { .. })));
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(matches!(decode(&v2), Err(Error::VersionUnsupported(_))));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(decode(&extra), Err(Error::CountMismatch { .. })));
    }

    #[test]
    fn rejects_mismatched_dims() {
        let rec = ContainerRecord { id: 0, replica: 0, labels: one_hot(0, 2).unwrap(), image: Image::zeros(3, 2) };
        let err = write_records(Cursor::new(Vec::new()), 2, (2, 2), [Ok(rec)]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(..)));
    }
}
