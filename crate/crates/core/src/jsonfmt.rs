//! Float formatting shared by the JSON Lines artifacts.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

/// An `f64` written in scientific notation with 17 significant digits,
/// which reads back bit-exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Sci(pub f64);

pub(crate) fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl Serialize for Sci {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(serde::ser::Error::custom("non-finite float"));
        }
        let raw = RawValue::from_string(format_f64(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Sci {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        f64::deserialize(d).map(Sci)
    }
}
