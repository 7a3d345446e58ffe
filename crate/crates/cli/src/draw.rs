//! Overlay drawing: 1-pixel box outlines, per-identity colors, and a tiny
//! 3x5 digit font for id labels.

use sdof_core::imaging::RgbImage;

/// Deterministic saturated color per track identity.
pub fn color_for_id(id: u64) -> [u8; 3] {
    let hash = id.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let hue = (hash >> 32) % 360;
    hsv_to_rgb(hue as f64, 0.85, 0.95)
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let c = v * s;
    let x = c * (1.0 - ((h / 60.0) % 2.0 - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match (h / 60.0) as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    [
        ((r + m) * 255.0) as u8,
        ((g + m) * 255.0) as u8,
        ((b + m) * 255.0) as u8,
    ]
}

/// 1-pixel rectangle outline; coordinates are rounded and clipped.
pub fn draw_rect(image: &mut RgbImage, x: f64, y: f64, w: f64, h: f64, color: [u8; 3]) {
    let x0 = x.round() as i64;
    let y0 = y.round() as i64;
    let x1 = x0 + (w.round() as i64 - 1).max(0);
    let y1 = y0 + (h.round() as i64 - 1).max(0);
    for cx in x0..=x1 {
        image.put(cx, y0, color);
        image.put(cx, y1, color);
    }
    for cy in y0..=y1 {
        image.put(x0, cy, color);
        image.put(x1, cy, color);
    }
}

/// 3x5 digit glyphs, one row per byte, 3 low bits used (MSB = left pixel).
const DIGITS: [[u8; 5]; 10] = [
    [0b111, 0b101, 0b101, 0b101, 0b111], // 0
    [0b010, 0b110, 0b010, 0b010, 0b111], // 1
    [0b111, 0b001, 0b111, 0b100, 0b111], // 2
    [0b111, 0b001, 0b111, 0b001, 0b111], // 3
    [0b101, 0b101, 0b111, 0b001, 0b001], // 4
    [0b111, 0b100, 0b111, 0b001, 0b111], // 5
    [0b111, 0b100, 0b111, 0b101, 0b111], // 6
    [0b111, 0b001, 0b001, 0b001, 0b001], // 7
    [0b111, 0b101, 0b111, 0b101, 0b111], // 8
    [0b111, 0b101, 0b111, 0b001, 0b111], // 9
];

/// Draws a decimal number with its top-left corner at `(x, y)`.
pub fn draw_number(image: &mut RgbImage, value: u64, x: i64, y: i64, color: [u8; 3]) {
    let digits: Vec<usize> = value
        .to_string()
        .bytes()
        .map(|b| (b - b'0') as usize)
        .collect();
    for (i, &d) in digits.iter().enumerate() {
        let gx = x + i as i64 * 4;
        for (row, bits) in DIGITS[d].iter().enumerate() {
            for col in 0..3 {
                if bits & (0b100 >> col) != 0 {
                    image.put(gx + col as i64, y + row as i64, color);
                }
            }
        }
    }
}
