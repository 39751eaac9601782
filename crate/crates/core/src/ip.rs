use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::CoreError;

/// A 32-bit IPv4 address, totally ordered by numeric value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ip(pub u32);

impl Ip {
    pub fn octets(self) -> [u8; 4] {
        self.0.to_be_bytes()
    }

    pub fn from_octets(o: [u8; 4]) -> Self {
        Ip(u32::from_be_bytes(o))
    }

    /// Address `self + k`, or None past 255.255.255.255.
    pub fn checked_add(self, k: u32) -> Option<Ip> {
        self.0.checked_add(k).map(Ip)
    }
}

impl fmt::Display for Ip {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = self.octets();
        write!(f, "{}.{}.{}.{}", o[0], o[1], o[2], o[3])
    }
}

impl FromStr for Ip {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, CoreError> {
        let bad = || CoreError::ParseIp(s.to_string());
        let mut parts = s.split('.');
        let mut octets = [0u8; 4];
        for slot in octets.iter_mut() {
            let p = parts.next().ok_or_else(bad)?;
            if p.is_empty() || p.len() > 3 || !p.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            *slot = p.parse().map_err(|_| bad())?;
        }
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(Ip::from_octets(octets))
    }
}

impl Serialize for Ip {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Ip {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// An IPv4 prefix. The base address must have all bits below
/// `32 - length` clear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Prefix {
    base: Ip,
    length: u8,
}

impl Prefix {
    pub fn new(base: Ip, length: u8) -> Result<Self, CoreError> {
        if length > 32 {
            return Err(CoreError::ParsePrefix(
                format!("{base}/{length}"),
                "length out of range".into(),
            ));
        }
        if base.0 & !Self::mask(length) != 0 {
            return Err(CoreError::UnalignedPrefix {
                base: base.to_string(),
                len: length,
            });
        }
        Ok(Prefix { base, length })
    }

    /// Prefix of the given length containing `ip` (bits below the mask dropped).
    pub fn containing(ip: Ip, length: u8) -> Self {
        debug_assert!(length <= 32);
        Prefix {
            base: Ip(ip.0 & Self::mask(length)),
            length,
        }
    }

    fn mask(length: u8) -> u32 {
        if length == 0 {
            0
        } else {
            u32::MAX << (32 - length)
        }
    }

    pub fn base(&self) -> Ip {
        self.base
    }

    pub fn length(&self) -> u8 {
        self.length
    }

    /// Highest address in the prefix.
    pub fn broadcast(&self) -> Ip {
        Ip(self.base.0 | !Self::mask(self.length))
    }

    pub fn contains(&self, ip: Ip) -> bool {
        ip.0 & Self::mask(self.length) == self.base.0
    }

    /// Number of addresses covered, capped at u64 range (length 0 covers 2^32).
    pub fn size(&self) -> u64 {
        1u64 << (32 - self.length as u64)
    }

    /// All addresses in the prefix in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = Ip> {
        let base = self.base.0 as u64;
        (0..self.size()).map(move |k| Ip((base + k) as u32))
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.base, self.length)
    }
}

impl FromStr for Prefix {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, CoreError> {
        let (ip, len) = s
            .split_once('/')
            .ok_or_else(|| CoreError::ParsePrefix(s.into(), "missing /length".into()))?;
        let base: Ip = ip.parse()?;
        let length: u8 = len
            .parse()
            .map_err(|_| CoreError::ParsePrefix(s.into(), "bad length".into()))?;
        Prefix::new(base, length)
    }
}

impl Serialize for Prefix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Prefix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// Autonomous-system number; always positive, unique within a topology.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct AsId(pub u32);

impl AsId {
    pub fn new(number: u32) -> Result<Self, CoreError> {
        if number == 0 {
            return Err(CoreError::ZeroAsId);
        }
        Ok(AsId(number))
    }
}

impl fmt::Display for AsId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for AsId {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, CoreError> {
        let n: u32 = s.parse().map_err(|_| CoreError::ZeroAsId)?;
        AsId::new(n)
    }
}
