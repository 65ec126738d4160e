//! Serialize exact rationals as `"p/q"` strings (integers as `"p"`).

use num_rational::Rational64;
use serde::{de, Deserialize, Deserializer, Serializer};

pub fn serialize<S: Serializer>(r: &Rational64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format(r))
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Int(i64),
        Text(String),
    }
    match Repr::deserialize(d)? {
        Repr::Int(i) => Ok(Rational64::from_integer(i)),
        Repr::Text(t) => parse(&t).map_err(de::Error::custom),
    }
}

pub fn format(r: &Rational64) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse(text: &str) -> Result<Rational64, String> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (text, "1"),
    };
    let num: i64 = num.parse().map_err(|_| format!("bad rational `{text}`"))?;
    let den: i64 = den.parse().map_err(|_| format!("bad rational `{text}`"))?;
    if den == 0 {
        return Err(format!("zero denominator in `{text}`"));
    }
    Ok(Rational64::new(num, den))
}
