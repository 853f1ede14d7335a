//! Binary portable graymap (P5) with 8- or 16-bit samples.

use std::fmt;

/// Raw graymap: row-major samples in `0..=maxval`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graymap {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PgmError(pub String);

impl fmt::Display for PgmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "malformed PGM: {}", self.0)
    }
}

impl std::error::Error for PgmError {}

fn bad(msg: impl Into<String>) -> PgmError {
    PgmError(msg.into())
}

/// Next whitespace-delimited header token, skipping `#` comments.
fn token(bytes: &[u8], pos: &mut usize) -> Result<String, PgmError> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(bad("truncated header"));
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

fn number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize, PgmError> {
    let t = token(bytes, pos)?;
    t.parse().map_err(|_| bad(format!("{what} is not a number: {t:?}")))
}

impl Graymap {
    pub fn decode(bytes: &[u8]) -> Result<Self, PgmError> {
        let mut pos = 0;
        if token(bytes, &mut pos)? != "P5" {
            return Err(bad("only binary P5 graymaps are supported"));
        }
        let width = number(bytes, &mut pos, "width")?;
        let height = number(bytes, &mut pos, "height")?;
        let maxval = number(bytes, &mut pos, "maxval")?;
        if width == 0 || height == 0 {
            return Err(bad("empty image"));
        }
        if !(1..=65535).contains(&maxval) {
            return Err(bad(format!("maxval {maxval} outside 1..=65535")));
        }
        // Exactly one whitespace byte separates the header from the raster.
        pos += 1;
        let wide = maxval > 255;
        let count = width * height;
        let need = count * if wide { 2 } else { 1 };
        let raster = bytes
            .get(pos..pos + need)
            .ok_or_else(|| bad(format!("raster has {} bytes, expected {need}", bytes.len().saturating_sub(pos))))?;
        let samples: Vec<u16> = if wide {
            raster.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
        } else {
            raster.iter().map(|&b| b as u16).collect()
        };
        if let Some(s) = samples.iter().find(|&&s| s as usize > maxval) {
            return Err(bad(format!("sample {s} exceeds maxval {maxval}")));
        }
        Ok(Graymap {
            width,
            height,
            maxval: maxval as u16,
            samples,
        })
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n{}\n", self.width, self.height, self.maxval).into_bytes();
        if self.maxval > 255 {
            for s in &self.samples {
                out.extend_from_slice(&s.to_be_bytes());
            }
        } else {
            out.extend(self.samples.iter().map(|&s| s as u8));
        }
        out
    }

    /// Samples mapped linearly from `0..=maxval` onto `[lo, hi]`.
    pub fn to_intensities(&self, (lo, hi): (f64, f64)) -> Vec<f64> {
        let m = self.maxval as f64;
        self.samples.iter().map(|&s| lo + (hi - lo) * s as f64 / m).collect()
    }

    /// Nearest samples for `values` on `[lo, hi]`, clipping out-of-range values.
    pub fn from_intensities(
        values: &[f64],
        width: usize,
        height: usize,
        maxval: u16,
        (lo, hi): (f64, f64),
    ) -> Self {
        let m = maxval as f64;
        let samples = values
            .iter()
            .map(|v| (((v - lo) / (hi - lo)).clamp(0.0, 1.0) * m).round() as u16)
            .collect();
        Graymap {
            width,
            height,
            maxval,
            samples,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_bit_round_trip_with_comment() {
        let mut bytes = b"P5\n# made by hand\n3 2\n255\n".to_vec();
        bytes.extend([0u8, 10, 255, 128, 7, 9]);
        let g = Graymap::decode(&bytes).unwrap();
        assert_eq!((g.width, g.height, g.maxval), (3, 2, 255));
        assert_eq!(Graymap::decode(&g.encode()).unwrap(), g);
    }

    #[test]
    fn sixteen_bit_round_trip() {
        let g = Graymap {
            width: 2,
            height: 2,
            maxval: 65535,
            samples: vec![0, 1, 40000, 65535],
        };
        assert_eq!(Graymap::decode(&g.encode()).unwrap(), g);
    }

    #[test]
    fn intensities_round_trip_exactly_on_samples() {
        let g = Graymap {
            width: 4,
            height: 1,
            maxval: 1000,
            samples: vec![0, 333, 999, 1000],
        };
        let v = g.to_intensities((0.0, 3.0));
        assert_eq!(Graymap::from_intensities(&v, 4, 1, 1000, (0.0, 3.0)), g);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Graymap::decode(b"P2\n1 1\n255\n0").is_err());
        assert!(Graymap::decode(b"P5\n2 2\n255\n\x00").is_err());
        assert!(Graymap::decode(b"P5\n1 1\n10\n\x0b").is_err());
        assert!(Graymap::decode(b"P5\n1 1\n70000\n\x00\x00").is_err());
    }
}
