//! Pixel-level image operations. All are deterministic; randomness is drawn
//! by the caller.

use crate::error::{Error, Result};
use crate::image::{to_byte, Image, CHANNELS};

/// Hard limits for color jitter factors.
pub const JITTER_FACTOR_LIMITS: (f64, f64) = (0.0, 2.0);

/// Default sampling range of jitter factors.
pub const DEFAULT_JITTER_RANGE: [f64; 2] = [0.5, 1.5];

/// Default zero padding of the random crop.
pub const DEFAULT_CROP_PAD: usize = 4;

const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

/// Mirrors the image left to right.
pub fn horizontal_flip(img: &Image) -> Image {
    let (w, h) = img.dims();
    let mut out = img.clone();
    for c in 0..CHANNELS {
        for y in 0..h {
            for x in 0..w {
                out.set(w - 1 - x, y, c, img.get(x, y, c));
            }
        }
    }
    out
}

/// Zero-pads by `pad` on every side, then crops the original size at
/// `(offset_x, offset_y)` in padded coordinates. Offsets are ignored when
/// `pad == 0`.
pub fn crop_pad(img: &Image, pad: usize, offset_x: usize, offset_y: usize) -> Result<Image> {
    if pad == 0 {
        return Ok(img.clone());
    }
    if offset_x > 2 * pad || offset_y > 2 * pad {
        return Err(Error::OffsetOutOfRange { x: offset_x, y: offset_y, pad });
    }
    let (w, h) = img.dims();
    let mut out = Image::zeros(w, h);
    for c in 0..CHANNELS {
        for y in 0..h {
            let sy = (y + offset_y) as isize - pad as isize;
            if sy < 0 || sy >= h as isize {
                continue;
            }
            for x in 0..w {
                let sx = (x + offset_x) as isize - pad as isize;
                if sx >= 0 && sx < w as isize {
                    out.set(x, y, c, img.get(sx as usize, sy as usize, c));
                }
            }
        }
    }
    Ok(out)
}

fn check_factor(name: &'static str, value: f64) -> Result<()> {
    let (min, max) = JITTER_FACTOR_LIMITS;
    if !(min..=max).contains(&value) {
        return Err(Error::FactorOutOfRange { name, value, min, max });
    }
    Ok(())
}

/// Brightness, contrast then saturation adjustment. Intermediate values stay
/// in floating point, clamped to `[0, 255]` after each stage; the result is
/// rounded half-to-even once at the end.
pub fn color_jitter(img: &Image, brightness: f64, contrast: f64, saturation: f64) -> Result<Image> {
    check_factor("brightness", brightness)?;
    check_factor("contrast", contrast)?;
    check_factor("saturation", saturation)?;

    let n = img.width() * img.height();
    let mut rgb: Vec<[f64; 3]> = (0..n)
        .map(|i| std::array::from_fn(|c| (img.pixels()[c * n + i] as f64 * brightness).clamp(0.0, 255.0)))
        .collect();

    let gray = |p: &[f64; 3]| LUMA[0] * p[0] + LUMA[1] * p[1] + LUMA[2] * p[2];
    let mean_gray = rgb.iter().map(gray).sum::<f64>() / n as f64;
    for p in &mut rgb {
        for v in p.iter_mut() {
            *v = (mean_gray + (*v - mean_gray) * contrast).clamp(0.0, 255.0);
        }
    }

    for p in &mut rgb {
        let g = gray(p);
        for v in p.iter_mut() {
            *v = (g + (*v - g) * saturation).clamp(0.0, 255.0);
        }
    }

    let mut out = img.clone();
    let pixels = out.pixels_mut();
    for (i, p) in rgb.iter().enumerate() {
        for c in 0..CHANNELS {
            pixels[c * n + i] = to_byte(p[c]);
        }
    }
    Ok(out)
}

/// Rotates clockwise by `quarter_turns * 90` degrees. Odd turns need a
/// square image so dimensions are preserved.
pub fn rotate90(img: &Image, quarter_turns: u32) -> Result<Image> {
    let (w, h) = img.dims();
    let k = quarter_turns % 4;
    if k % 2 == 1 && w != h {
        return Err(Error::InvalidParameter(format!("90 degree rotation of a non-square {w}x{h} image")));
    }
    let mut out = img.clone();
    for c in 0..CHANNELS {
        for y in 0..h {
            for x in 0..w {
                let (dx, dy) = match k {
                    0 => (x, y),
                    1 => (w - 1 - y, x),
                    2 => (w - 1 - x, h - 1 - y),
                    _ => (y, w - 1 - x),
                };
                out.set(dx, dy, c, img.get(x, y, c));
            }
        }
    }
    Ok(out)
}

/// Zeroes a `side x side` square centered at `(cx, cy)`, clipped to the image.
pub fn cutout(img: &Image, cx: usize, cy: usize, side: usize) -> Image {
    let (w, h) = img.dims();
    let (x0, x1) = clipped_span(cx, side, w);
    let (y0, y1) = clipped_span(cy, side, h);
    let mut out = img.clone();
    for c in 0..CHANNELS {
        for y in y0..y1 {
            for x in x0..x1 {
                out.set(x, y, c, 0);
            }
        }
    }
    out
}

/// `[center - side/2, center - side/2 + side)` clipped to `[0, limit)`.
fn clipped_span(center: usize, side: usize, limit: usize) -> (usize, usize) {
    let start = center as isize - (side / 2) as isize;
    let end = start + side as isize;
    (start.clamp(0, limit as isize) as usize, end.clamp(0, limit as isize) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> Image {
        let pixels = (0..w * h * CHANNELS).map(|i| (i * 7 % 256) as u8).collect();
        Image::new(w, h, pixels).unwrap()
    }

    #[test]
    fn flip_examples() {
        let img = ramp(5, 3);
        assert_eq!(horizontal_flip(&horizontal_flip(&img)), img);
        let one = Image::filled(1, 1, [1, 2, 3]);
        assert_eq!(horizontal_flip(&one), one);
        let ab = Image::new(2, 1, vec![10, 20, 30, 40, 50, 60]).unwrap();
        assert_eq!(horizontal_flip(&ab).pixels(), &[20, 10, 40, 30, 60, 50]);
    }

    #[test]
    fn crop_pad_examples() {
        let img = ramp(32, 32);
        assert_eq!(crop_pad(&img, 4, 4, 4).unwrap(), img);
        assert_eq!(crop_pad(&img, 0, 3, 1).unwrap(), img);

        let shifted = crop_pad(&img, 4, 0, 0).unwrap();
        for c in 0..3 {
            for y in 0..32 {
                for x in 0..32 {
                    let expected = if x < 4 || y < 4 { 0 } else { img.get(x - 4, y - 4, c) };
                    assert_eq!(shifted.get(x, y, c), expected);
                }
            }
        }
        assert!(matches!(crop_pad(&img, 4, 9, 0), Err(Error::OffsetOutOfRange { .. })));
    }

    #[test]
    fn jitter_examples() {
        let img = ramp(8, 8);
        assert_eq!(color_jitter(&img, 1.0, 1.0, 1.0).unwrap(), img);

        let bright = color_jitter(&Image::filled(2, 2, [200, 200, 200]), 1.5, 1.0, 1.0).unwrap();
        assert!(bright.pixels().iter().all(|&p| p == 255));

        let gray = color_jitter(&img, 1.0, 1.0, 0.0).unwrap();
        let n = 64;
        for i in 0..n {
            let (r, g, b) = (img.pixels()[i] as f64, img.pixels()[n + i] as f64, img.pixels()[2 * n + i] as f64);
            let luma = (0.299 * r + 0.587 * g + 0.114 * b).round_ties_even();
            for c in 0..3 {
                assert!((gray.pixels()[c * n + i] as f64 - luma).abs() <= 1.0);
            }
            assert_eq!(gray.pixels()[i], gray.pixels()[n + i]);
            assert_eq!(gray.pixels()[i], gray.pixels()[2 * n + i]);
        }

        assert!(matches!(color_jitter(&img, 2.5, 1.0, 1.0), Err(Error::FactorOutOfRange { name: "brightness", .. })));
        assert!(matches!(color_jitter(&img, 1.0, -0.1, 1.0), Err(Error::FactorOutOfRange { name: "contrast", .. })));
    }

    #[test]
    fn contrast_zero_flattens_to_mean_gray() {
        let img = Image::new(2, 1, vec![0, 100, 0, 100, 0, 100]).unwrap();
        let flat = color_jitter(&img, 1.0, 0.0, 1.0).unwrap();
        assert!(flat.pixels().iter().all(|&p| p == 50));
    }

    #[test]
    fn rotation() {
        let img = ramp(4, 4);
        assert_eq!(rotate90(&rotate90(&img, 1).unwrap(), 3).unwrap(), img);
        assert_eq!(rotate90(&img, 2).unwrap(), rotate90(&rotate90(&img, 1).unwrap(), 1).unwrap());
        let r = rotate90(&img, 1).unwrap();
        // Top-left goes to top-right under a clockwise turn.
        assert_eq!(r.get(3, 0, 0), img.get(0, 0, 0));
        let wide = ramp(4, 2);
        assert!(rotate90(&wide, 1).is_err());
        assert_eq!(rotate90(&wide, 2).unwrap().dims(), (4, 2));
    }

    #[test]
    fn cutout_clips() {
        let img = Image::filled(8, 8, [9, 9, 9]);
        let out = cutout(&img, 0, 0, 4);
        let zeros = out.pixels().iter().filter(|&&p| p == 0).count();
        assert_eq!(zeros, 3 * 2 * 2);
        let out = cutout(&img, 4, 4, 4);
        assert_eq!(out.pixels().iter().filter(|&&p| p == 0).count(), 3 * 16);
    }
}
