//! Serde helpers for values JSON cannot carry natively.

/// `f64` that may be `±∞`: finite values are numbers, infinities are the
/// strings `"inf"` and `"-inf"`.
pub mod ext_f64 {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(serde::Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => parse(&s).ok_or_else(|| D::Error::custom(format!("not a number: {s}"))),
        }
    }

    pub fn parse(s: &str) -> Option<f64> {
        match s {
            "inf" | "+inf" => Some(f64::INFINITY),
            "-inf" => Some(f64::NEG_INFINITY),
            "nan" => Some(f64::NAN),
            other => other.parse().ok(),
        }
    }

    pub fn format(v: f64) -> String {
        if v.is_finite() {
            format!("{v}")
        } else if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    }
}

#[cfg(test)]
mod tests {
    #[derive(serde::Serialize, serde::Deserialize, Debug, PartialEq)]
    struct W(#[serde(with = "super::ext_f64")] f64);

    #[test]
    fn infinities_survive_json() {
        for v in [1.5, f64::INFINITY, f64::NEG_INFINITY] {
            let s = serde_json::to_string(&W(v)).unwrap();
            assert_eq!(serde_json::from_str::<W>(&s).unwrap(), W(v));
        }
        assert_eq!(serde_json::to_string(&W(f64::NEG_INFINITY)).unwrap(), "\"-inf\"");
    }
}
