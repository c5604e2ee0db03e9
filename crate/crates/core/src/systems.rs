//! Registry of the standard test systems.
//!
//! Normalizations vary across the literature; the ones used here are:
//!
//! | key          | n | fields                                        |
//! |--------------|---|-----------------------------------------------|
//! | `euclidean2` | 2 | ∂₁, ∂₂                                        |
//! | `grushin`    | 2 | ∂₁, x₁∂₂                                      |
//! | `heisenberg` | 3 | ∂₁ − (x₂/2)∂₃, ∂₂ + (x₁/2)∂₃ (symmetric form)  |
//! | `martinet`   | 3 | ∂₁, ∂₂ + (x₁²/2)∂₃                            |
//! | `acs3`       | 3 | ∂₁, (1 − x₁)∂₂ + x₁²∂₃                        |

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::fields::{ControlSystem, PolyVectorField};
use crate::poly::Polynomial;

pub const SYSTEM_NAMES: [&str; 5] = ["euclidean2", "grushin", "heisenberg", "martinet", "acs3"];

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn field(components: Vec<Polynomial>) -> PolyVectorField {
    PolyVectorField::new(components).expect("registry fields are well formed")
}

fn system(fields: Vec<PolyVectorField>) -> ControlSystem {
    ControlSystem::new(fields).expect("registry systems are well formed")
}

pub fn euclidean2() -> ControlSystem {
    system(vec![
        PolyVectorField::coordinate(2, 0),
        PolyVectorField::coordinate(2, 1),
    ])
}

pub fn grushin() -> ControlSystem {
    let x1 = Polynomial::var(2, 0);
    system(vec![
        PolyVectorField::coordinate(2, 0),
        field(vec![Polynomial::zero(2), x1]),
    ])
}

pub fn heisenberg() -> ControlSystem {
    let x1 = Polynomial::var(3, 0);
    let x2 = Polynomial::var(3, 1);
    system(vec![
        field(vec![Polynomial::one(3), Polynomial::zero(3), x2.scale(&q(-1, 2))]),
        field(vec![Polynomial::zero(3), Polynomial::one(3), x1.scale(&q(1, 2))]),
    ])
}

pub fn martinet() -> ControlSystem {
    let x1 = Polynomial::var(3, 0);
    system(vec![
        PolyVectorField::coordinate(3, 0),
        field(vec![
            Polynomial::zero(3),
            Polynomial::one(3),
            (&x1 * &x1).scale(&q(1, 2)),
        ]),
    ])
}

pub fn acs3() -> ControlSystem {
    let x1 = Polynomial::var(3, 0);
    system(vec![
        PolyVectorField::coordinate(3, 0),
        field(vec![Polynomial::zero(3), &Polynomial::one(3) - &x1, &x1 * &x1]),
    ])
}

/// Looks a system up by registry key.
pub fn registry_lookup(name: &str) -> Result<ControlSystem> {
    match name {
        "euclidean2" => Ok(euclidean2()),
        "grushin" => Ok(grushin()),
        "heisenberg" => Ok(heisenberg()),
        "martinet" => Ok(martinet()),
        "acs3" => Ok(acs3()),
        _ => {
            let closest = SYSTEM_NAMES
                .iter()
                .map(|k| (strsim::levenshtein(name, k), *k))
                .min()
                .filter(|(d, _)| *d <= 3);
            Err(Error::UnknownSystem {
                name: name.to_string(),
                hint: closest
                    .map(|(_, k)| format!(" (did you mean '{k}'?)"))
                    .unwrap_or_default(),
                available: SYSTEM_NAMES.join(", "),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::eval_field;

    #[test]
    fn lookup_known_names() {
        for name in SYSTEM_NAMES {
            assert!(registry_lookup(name).is_ok(), "{name}");
        }
        assert_eq!(registry_lookup("acs3").unwrap(), acs3());
        let e = registry_lookup("euclidean2").unwrap();
        assert_eq!(e.fields()[0], PolyVectorField::coordinate(2, 0));
        assert_eq!(e.fields()[1], PolyVectorField::coordinate(2, 1));
    }

    #[test]
    fn acs3_matches_definition() {
        let s = acs3();
        let x = [0.5, 1.0, 2.0];
        assert_eq!(eval_field(&s.fields()[0], &x).unwrap(), vec![1.0, 0.0, 0.0]);
        assert_eq!(eval_field(&s.fields()[1], &x).unwrap(), vec![0.0, 0.5, 0.25]);
    }

    #[test]
    fn unknown_name_lists_alternatives() {
        let err = registry_lookup("grushn").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("grushn"));
        assert!(msg.contains("did you mean 'grushin'"), "{msg}");
        assert!(!registry_lookup("qqqqqqqqqq")
            .unwrap_err()
            .to_string()
            .contains("did you mean"));
        for name in SYSTEM_NAMES {
            assert!(msg.contains(name));
        }
    }
}
