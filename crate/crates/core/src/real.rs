//! Serde helpers writing reals as 17-significant-digit decimal strings.
//!
//! Reading accepts either such a string or a plain JSON number.

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub fn format(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub fn parse(s: &str) -> Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| format!("not a real number: {s:?} ({e})"))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RealRepr {
    Text(String),
    Number(f64),
}

impl RealRepr {
    fn value(self) -> Result<f64, String> {
        match self {
            RealRepr::Text(s) => parse(&s),
            RealRepr::Number(x) => Ok(x),
        }
    }
}

/// Newtype carrying the string representation; handy inside collections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(self.0))
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        RealRepr::deserialize(d)?.value().map(Real).map_err(D::Error::custom)
    }
}

pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    Real(*x).serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Real::deserialize(d).map(|r| r.0)
}

pub mod opt {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        x.map(Real).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Option::<Real>::deserialize(d)?.map(|r| r.0))
    }
}

pub mod seq {
    use super::*;

    pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(xs.iter().map(|x| Real(*x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<Real>::deserialize(d)?.into_iter().map(|r| r.0).collect())
    }
}

pub mod seq2 {
    use super::*;

    pub fn serialize<S: Serializer>(xs: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(
            xs.iter()
                .map(|row| row.iter().map(|x| Real(*x)).collect::<Vec<_>>()),
        )
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        Ok(Vec::<Vec<Real>>::deserialize(d)?
            .into_iter()
            .map(|row| row.into_iter().map(|r| r.0).collect())
            .collect())
    }
}

/// Complex numbers as `[re, im]`.
pub mod complex {
    use super::*;

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [Real(z.re), Real(z.im)].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[Real; 2]>::deserialize(d)?;
        Ok(Complex64::new(re.0, im.0))
    }
}

pub mod complex_seq {
    use super::*;

    pub fn serialize<S: Serializer>(zs: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(zs.iter().map(|z| [Real(z.re), Real(z.im)]))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        Ok(Vec::<[Real; 2]>::deserialize(d)?
            .into_iter()
            .map(|[re, im]| Complex64::new(re.0, im.0))
            .collect())
    }
}
