//! Exact probabilities.

use num_rational::Ratio;
use num_traits::ToPrimitive;

/// Exact rational probability or weight.
pub type Prob = Ratio<i64>;

pub fn to_f64(p: &Prob) -> f64 {
    p.to_f64().unwrap_or(f64::NAN)
}

/// Renders `p/q` (or just `p` for integers).
pub fn fraction(p: &Prob) -> String {
    if *p.denom() == 1 {
        p.numer().to_string()
    } else {
        format!("{}/{}", p.numer(), p.denom())
    }
}

/// Renders `p/q ≈ 0.dddddd`.
pub fn fraction_with_decimal(p: &Prob) -> String {
    format!("{} ≈ {:.6}", fraction(p), to_f64(p))
}

pub fn parse_fraction(s: &str) -> Option<Prob> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().ok()?;
            let d: i64 = d.trim().parse().ok()?;
            (d != 0).then(|| Prob::new(n, d))
        }
        None => s.parse::<i64>().ok().map(Prob::from_integer),
    }
}

/// Serde adapter storing a [`Prob`] as a `"p/q"` string.
pub mod serde_fraction {
    use super::{fraction, parse_fraction, Prob};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &Prob, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fraction(p))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Prob, D::Error> {
        let raw = String::deserialize(d)?;
        parse_fraction(&raw).ok_or_else(|| D::Error::custom(format!("bad fraction {raw:?}")))
    }
}
