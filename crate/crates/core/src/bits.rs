//! Bit strings as `'0'`/`'1'` text.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A sequence of bits, one `u8` (0 or 1) per bit.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Bits(pub Vec<u8>);

impl Bits {
    /// Unpacks bytes most significant bit first.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        Bits(
            bytes
                .iter()
                .flat_map(|b| (0..8).rev().map(move |i| (b >> i) & 1))
                .collect(),
        )
    }

    /// Packs bits MSB first; a short final byte is padded with zeros.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.0
            .chunks(8)
            .map(|c| {
                c.iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, b)| acc | ((b & 1) << (7 - i)))
            })
            .collect()
    }

    pub fn from_hex(s: &str) -> Result<Self, String> {
        let s = s.trim().trim_start_matches("0x");
        if !s.len().is_multiple_of(2) {
            return Err(format!("hex string has odd length {}", s.len()));
        }
        let bytes = (0..s.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(&s[i..i + 2], 16).map_err(|e| format!("bad hex: {e}")))
            .collect::<Result<Vec<u8>, String>>()?;
        Ok(Self::from_bytes(&bytes))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(if *b & 1 == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Bits {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(format!("`{other}` is not a bit")),
            })
            .collect::<Result<Vec<u8>, _>>()
            .map(Bits)
    }
}

impl Serialize for Bits {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bits {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<Vec<u8>> for Bits {
    fn from(v: Vec<u8>) -> Self {
        Bits(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bytes_msb_first() {
        let b = Bits::from_bytes(&[0b1010_0001]);
        assert_eq!(b.to_string(), "10100001");
        assert_eq!(Bits::from_hex("a1").unwrap(), b);
        assert!(Bits::from_hex("a").is_err());
        assert!("012".parse::<Bits>().is_err());
    }

    proptest! {
        #[test]
        fn byte_and_text_round_trip(bytes in prop::collection::vec(any::<u8>(), 0..32)) {
            let b = Bits::from_bytes(&bytes);
            prop_assert_eq!(b.to_bytes(), bytes);
            prop_assert_eq!(b.to_string().parse::<Bits>().unwrap(), b);
        }
    }
}
