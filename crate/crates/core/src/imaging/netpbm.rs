//! Netpbm codecs: PGM (P5 binary, P2 ASCII) read, PGM (P5) write, PPM (P6)
//! write, PBM (P4) read/write. Bit-exact per the Netpbm format specs; every
//! decode error carries the byte offset it was detected at.

use super::{BitMask, Image8, RgbImage};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PnmError {
    #[error("malformed header at byte {offset}: {reason}")]
    MalformedHeader { offset: usize, reason: &'static str },
    #[error("truncated data at byte {offset}: need {missing} more bytes")]
    TruncatedData { offset: usize, missing: usize },
    #[error("unsupported maxval {maxval} at byte {offset} (only maxval <= 255 is supported)")]
    UnsupportedMaxval { offset: usize, maxval: u64 },
    #[error("invalid sample at byte {offset}: {reason}")]
    InvalidSample { offset: usize, reason: &'static str },
}

fn is_pnm_ws(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    /// Skips whitespace and `#`-to-end-of-line comments.
    fn skip_separators(&mut self) {
        loop {
            while self.pos < self.data.len() && is_pnm_ws(self.data[self.pos]) {
                self.pos += 1;
            }
            if self.pos < self.data.len() && self.data[self.pos] == b'#' {
                while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                return;
            }
        }
    }

    /// Reads an unsigned decimal token. Returns the value and its offset.
    fn next_uint(&mut self) -> Result<(u64, usize), PnmError> {
        self.skip_separators();
        let start = self.pos;
        if start >= self.data.len() {
            return Err(PnmError::MalformedHeader {
                offset: start,
                reason: "unexpected end of data, expected a decimal value",
            });
        }
        let mut value: u64 = 0;
        let mut digits = 0usize;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            value = value
                .saturating_mul(10)
                .saturating_add((self.data[self.pos] - b'0') as u64);
            self.pos += 1;
            digits += 1;
        }
        if digits == 0 {
            return Err(PnmError::MalformedHeader {
                offset: start,
                reason: "expected a decimal value",
            });
        }
        Ok((value, start))
    }

    /// Consumes the single whitespace byte that separates the header from
    /// binary raster data.
    fn expect_single_ws(&mut self) -> Result<(), PnmError> {
        if self.pos >= self.data.len() || !is_pnm_ws(self.data[self.pos]) {
            return Err(PnmError::MalformedHeader {
                offset: self.pos,
                reason: "expected single whitespace before raster data",
            });
        }
        self.pos += 1;
        Ok(())
    }
}

fn parse_dims(cur: &mut Cursor) -> Result<(usize, usize), PnmError> {
    let (w, w_off) = cur.next_uint()?;
    let (h, h_off) = cur.next_uint()?;
    if w == 0 || w > u32::MAX as u64 {
        return Err(PnmError::MalformedHeader {
            offset: w_off,
            reason: "width must be between 1 and 2^32-1",
        });
    }
    if h == 0 || h > u32::MAX as u64 {
        return Err(PnmError::MalformedHeader {
            offset: h_off,
            reason: "height must be between 1 and 2^32-1",
        });
    }
    Ok((w as usize, h as usize))
}

/// Decodes a binary (P5) or ASCII (P2) PGM with maxval <= 255.
pub fn load_pgm(bytes: &[u8]) -> Result<Image8, PnmError> {
    if bytes.len() < 2 {
        return Err(PnmError::MalformedHeader {
            offset: 0,
            reason: "missing magic number",
        });
    }
    let binary = match &bytes[..2] {
        b"P5" => true,
        b"P2" => false,
        _ => {
            return Err(PnmError::MalformedHeader {
                offset: 0,
                reason: "magic number is not P5 or P2",
            })
        }
    };
    let mut cur = Cursor::new(bytes);
    cur.pos = 2;
    let (w, h) = parse_dims(&mut cur)?;
    let (maxval, maxval_off) = cur.next_uint()?;
    if maxval == 0 {
        return Err(PnmError::MalformedHeader {
            offset: maxval_off,
            reason: "maxval must be at least 1",
        });
    }
    if maxval > 255 {
        return Err(PnmError::UnsupportedMaxval {
            offset: maxval_off,
            maxval,
        });
    }
    let count = w * h;
    let mut pixels = Vec::with_capacity(count);
    if binary {
        cur.expect_single_ws()?;
        let available = bytes.len() - cur.pos;
        if available < count {
            return Err(PnmError::TruncatedData {
                offset: bytes.len(),
                missing: count - available,
            });
        }
        pixels.extend_from_slice(&bytes[cur.pos..cur.pos + count]);
        for (i, &v) in pixels.iter().enumerate() {
            if v as u64 > maxval {
                return Err(PnmError::InvalidSample {
                    offset: cur.pos + i,
                    reason: "sample exceeds maxval",
                });
            }
        }
    } else {
        for _ in 0..count {
            cur.skip_separators();
            if cur.pos >= bytes.len() {
                return Err(PnmError::TruncatedData {
                    offset: bytes.len(),
                    missing: count - pixels.len(),
                });
            }
            let (v, off) = cur.next_uint().map_err(|_| PnmError::InvalidSample {
                offset: cur.pos,
                reason: "expected a decimal sample",
            })?;
            if v > maxval {
                return Err(PnmError::InvalidSample {
                    offset: off,
                    reason: "sample exceeds maxval",
                });
            }
            pixels.push(v as u8);
        }
    }
    Ok(Image8::new(w, h, pixels).expect("dims validated"))
}

/// Encodes a binary P5 PGM with maxval 255.
pub fn write_pgm(image: &Image8) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend_from_slice(image.pixels());
    out
}

/// Encodes a binary P6 PPM with maxval 255.
pub fn write_ppm(image: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend_from_slice(image.data());
    out
}

/// Decodes a binary (P4) PBM. Set bits (PBM "black", bit value 1) mark the
/// mask foreground. Rows are packed MSB-first and padded to byte boundaries.
pub fn load_pbm(bytes: &[u8]) -> Result<BitMask, PnmError> {
    if bytes.len() < 2 || &bytes[..2] != b"P4" {
        return Err(PnmError::MalformedHeader {
            offset: 0,
            reason: "magic number is not P4",
        });
    }
    let mut cur = Cursor::new(bytes);
    cur.pos = 2;
    let (w, h) = parse_dims(&mut cur)?;
    cur.expect_single_ws()?;
    let row_bytes = w.div_ceil(8);
    let needed = row_bytes * h;
    let available = bytes.len() - cur.pos;
    if available < needed {
        return Err(PnmError::TruncatedData {
            offset: bytes.len(),
            missing: needed - available,
        });
    }
    let mut bits = vec![false; w * h];
    for y in 0..h {
        let row = &bytes[cur.pos + y * row_bytes..cur.pos + (y + 1) * row_bytes];
        for x in 0..w {
            bits[y * w + x] = row[x / 8] & (0x80 >> (x % 8)) != 0;
        }
    }
    Ok(BitMask::new(w, h, bits).expect("dims validated"))
}

/// Encodes a binary P4 PBM; set bits encode as 1 ("black").
pub fn write_pbm(mask: &BitMask) -> Vec<u8> {
    let mut out = format!("P4\n{} {}\n", mask.width(), mask.height()).into_bytes();
    let row_bytes = mask.width().div_ceil(8);
    for y in 0..mask.height() {
        let mut row = vec![0u8; row_bytes];
        for x in 0..mask.width() {
            if mask.get(x, y) {
                row[x / 8] |= 0x80 >> (x % 8);
            }
        }
        out.extend_from_slice(&row);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn p5_hand_constructed_bytes() {
        let bytes = b"P5 2 2 255\n\x00\x40\x80\xff";
        let img = load_pgm(bytes).unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.pixels(), &[0, 64, 128, 255]);
    }

    #[test]
    fn p2_single_pixel() {
        let img = load_pgm(b"P2\n1 1\n255\n7\n").unwrap();
        assert_eq!((img.width(), img.height()), (1, 1));
        assert_eq!(img.pixels(), &[7]);
    }

    #[test]
    fn p2_with_comments_and_odd_spacing() {
        let img = load_pgm(b"P2 # a comment\n# another\n 2\t1 \n 10\n3 9").unwrap();
        assert_eq!(img.pixels(), &[3, 9]);
    }

    #[test]
    fn empty_input_is_malformed_at_offset_zero() {
        assert_eq!(
            load_pgm(b""),
            Err(PnmError::MalformedHeader {
                offset: 0,
                reason: "missing magic number"
            })
        );
    }

    #[test]
    fn wrong_magic_rejected() {
        assert!(matches!(
            load_pgm(b"P6\n1 1\n255\nxxx"),
            Err(PnmError::MalformedHeader { offset: 0, .. })
        ));
    }

    #[test]
    fn truncated_p5_reports_missing_bytes() {
        let bytes = b"P5\n2 2\n255\n\x01\x02";
        assert_eq!(
            load_pgm(bytes),
            Err(PnmError::TruncatedData {
                offset: bytes.len(),
                missing: 2
            })
        );
    }

    #[test]
    fn sixteen_bit_maxval_rejected() {
        assert_eq!(
            load_pgm(b"P5\n1 1\n65535\n\x00\x00"),
            Err(PnmError::UnsupportedMaxval {
                offset: 7,
                maxval: 65535
            })
        );
    }

    #[test]
    fn p2_sample_above_maxval_rejected() {
        assert!(matches!(
            load_pgm(b"P2\n1 1\n15\n16\n"),
            Err(PnmError::InvalidSample { .. })
        ));
    }

    #[test]
    fn ppm_single_red_pixel_exact_bytes() {
        let img = RgbImage::new(1, 1, vec![255, 0, 0]).unwrap();
        assert_eq!(write_ppm(&img), b"P6\n1 1\n255\n\xff\x00\x00");
    }

    #[test]
    fn zero_area_rgb_rejected_before_write() {
        assert!(RgbImage::new(0, 1, vec![]).is_err());
        assert!(RgbImage::new(3, 0, vec![]).is_err());
    }

    #[test]
    fn pbm_all_set_4x4() {
        let bytes = b"P4\n4 4\n\xf0\xf0\xf0\xf0";
        let mask = load_pbm(bytes).unwrap();
        assert_eq!((mask.width(), mask.height()), (4, 4));
        assert_eq!(mask.count_set(), 16);
        assert_eq!(write_pbm(&mask), bytes);
    }

    #[test]
    fn truncated_pbm_rejected() {
        assert!(matches!(
            load_pbm(b"P4\n9 2\n\x00\x00"),
            Err(PnmError::TruncatedData { .. })
        ));
    }

    proptest! {
        #[test]
        fn pgm_round_trip_is_bit_exact(
            w in 1usize..40, h in 1usize..40,
            data in proptest::collection::vec(any::<u8>(), 0..1600),
        ) {
            let mut pixels = vec![0u8; w * h];
            for (i, v) in data.into_iter().take(w * h).enumerate() {
                pixels[i] = v;
            }
            let img = Image8::new(w, h, pixels).unwrap();
            prop_assert_eq!(load_pgm(&write_pgm(&img)).unwrap(), img);
        }

        #[test]
        fn pbm_round_trip_is_bit_exact(
            w in 1usize..40, h in 1usize..20,
            data in proptest::collection::vec(any::<bool>(), 0..800),
        ) {
            let mut bits = vec![false; w * h];
            for (i, v) in data.into_iter().take(w * h).enumerate() {
                bits[i] = v;
            }
            let mask = BitMask::new(w, h, bits).unwrap();
            prop_assert_eq!(load_pbm(&write_pbm(&mask)).unwrap(), mask);
        }
    }
}
