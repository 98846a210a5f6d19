//! JSON forms of vectors, with exact integers written as decimal strings.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::simplex::{validate, SimplexVector};
use crate::words::{Block, Digit, FreqVector};

#[derive(Serialize, Deserialize)]
struct EntryJson {
    block: Block,
    num: String,
    den: String,
}

fn entries_to_json(entries: &BTreeMap<Block, BigRational>) -> Vec<EntryJson> {
    entries
        .iter()
        .map(|(b, v)| EntryJson { block: b.clone(), num: v.numer().to_string(), den: v.denom().to_string() })
        .collect()
}

fn entries_from_json<E: serde::de::Error>(entries: Vec<EntryJson>) -> Result<BTreeMap<Block, BigRational>, E> {
    let mut out = BTreeMap::new();
    for e in entries {
        let num: BigInt = e.num.trim().parse().map_err(|_| E::custom(format!("bad numerator {:?}", e.num)))?;
        let den: BigInt = e.den.trim().parse().map_err(|_| E::custom(format!("bad denominator {:?}", e.den)))?;
        if den == BigInt::from(0) {
            return Err(E::custom(format!("zero denominator for block {}", e.block)));
        }
        if out.insert(e.block.clone(), BigRational::new(num, den)).is_some() {
            return Err(E::custom(format!("duplicate block {}", e.block)));
        }
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct SimplexJson {
    k: usize,
    #[serde(rename = "N")]
    cutoff: Digit,
    entries: Vec<EntryJson>,
}

impl Serialize for SimplexVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SimplexJson { k: self.k(), cutoff: self.cutoff(), entries: entries_to_json(self.entries()) }
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SimplexVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = SimplexJson::deserialize(deserializer)?;
        let entries = entries_from_json::<D::Error>(raw.entries)?;
        validate(raw.k, raw.cutoff, entries).map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct FreqJson {
    k: usize,
    n: usize,
    entries: Vec<EntryJson>,
}

impl Serialize for FreqVector<BigRational> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        FreqJson { k: self.k(), n: self.n(), entries: entries_to_json(self.entries()) }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FreqVector<BigRational> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = FreqJson::deserialize(deserializer)?;
        let entries = entries_from_json::<D::Error>(raw.entries)?;
        if let Some(b) = entries.keys().find(|b| b.k() != raw.k) {
            return Err(D::Error::custom(format!("block {b} does not have length {}", raw.k)));
        }
        Ok(FreqVector::from_entries(raw.k, raw.n, entries))
    }
}

/// `serde(with = ...)` adapter writing a rational as `"p/q"`.
pub mod rational_str {
    use super::*;

    pub fn serialize<S: Serializer>(value: &BigRational, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&crate::exact::format_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<BigRational, D::Error> {
        let text = String::deserialize(deserializer)?;
        crate::exact::parse_rational(&text).ok_or_else(|| D::Error::custom(format!("not a rational: {text:?}")))
    }
}

/// Like [`rational_str`] for optional values.
pub mod opt_rational_str {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Option<BigRational>, serializer: S) -> Result<S::Ok, S::Error> {
        match value {
            Some(v) => serializer.serialize_some(&crate::exact::format_rational(v)),
            None => serializer.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Option<BigRational>, D::Error> {
        Option::<String>::deserialize(deserializer)?
            .map(|text| {
                crate::exact::parse_rational(&text).ok_or_else(|| D::Error::custom(format!("not a rational: {text:?}")))
            })
            .transpose()
    }
}
