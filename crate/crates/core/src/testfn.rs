//! Named test functions with closed forms, used by experiments and tests.

use serde::{Deserialize, Serialize};

use crate::covering::{build_interpolator_with_kernel, CardinalKernel, CoveringKind, CoveringSpec};
use crate::error::{Error, Result};
use crate::forms::{CVector, C64};

fn cx(v: [f64; 2]) -> C64 {
    C64::new(v[0], v[1])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "name")]
pub enum TestFunction {
    /// `prod xi_j^a_j`.
    Monomial { powers: Vec<u32> },
    /// `xi^holo conj(xi)^anti` on `C`.
    ConjMonomial { holo: u32, anti: u32 },
    /// `exp(sum xi_j)`.
    Exp,
    /// `g(zeta) = sum c_j zeta^j`; on a covering, `g(r(y))`.
    PullbackPoly { coeffs: Vec<[f64; 2]> },
    /// `L_center(h)` on the strip covering, `h` given as `(label, value)` pairs.
    CardinalSum {
        coeffs: Vec<(i64, [f64; 2])>,
        center: [f64; 2],
        window: usize,
        #[serde(default)]
        kernel: CardinalKernel,
    },
}

impl TestFunction {
    pub fn monomial(powers: &[u32]) -> Self {
        TestFunction::Monomial {
            powers: powers.to_vec(),
        }
    }

    pub fn is_holomorphic(&self) -> bool {
        !matches!(self, TestFunction::ConjMonomial { anti, .. } if *anti > 0)
    }

    /// Value at a point of `C^n`.
    pub fn eval(&self, xi: &CVector) -> Result<C64> {
        let one = C64::new(1.0, 0.0);
        match self {
            TestFunction::Monomial { powers } => {
                if powers.len() != xi.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: powers.len(),
                        got: xi.dim(),
                    });
                }
                Ok(powers
                    .iter()
                    .zip(xi.components())
                    .fold(one, |acc, (&a, x)| acc * x.powu(a)))
            }
            TestFunction::ConjMonomial { holo, anti } => {
                let x = single(xi)?;
                Ok(x.powu(*holo) * x.conj().powu(*anti))
            }
            TestFunction::Exp => Ok(xi.components().iter().sum::<C64>().exp()),
            TestFunction::PullbackPoly { coeffs } => {
                let x = single(xi)?;
                Ok(horner(coeffs, x))
            }
            TestFunction::CardinalSum { .. } => Err(Error::invalid(
                "cardinal sums live on the strip covering; use eval_covering",
            )),
        }
    }

    /// `d f / d conj(xi)` on `C`.
    pub fn dbar(&self, xi: &CVector) -> Result<C64> {
        match self {
            TestFunction::ConjMonomial { holo, anti } => {
                let x = single(xi)?;
                if *anti == 0 {
                    return Ok(C64::new(0.0, 0.0));
                }
                Ok(*anti as f64 * x.powu(*holo) * x.conj().powu(anti - 1))
            }
            TestFunction::CardinalSum { .. } => Err(Error::invalid("no dbar for covering functions")),
            _ => {
                single(xi)?;
                Ok(C64::new(0.0, 0.0))
            }
        }
    }

    /// Value at a point `y` of a model covering.
    pub fn eval_covering(&self, cov: &CoveringSpec, y: C64) -> Result<C64> {
        match self {
            TestFunction::PullbackPoly { coeffs } => Ok(horner(coeffs, cov.project(y))),
            TestFunction::CardinalSum {
                coeffs,
                center,
                window,
                kernel,
            } => {
                if cov.kind != CoveringKind::StripZ {
                    return Err(Error::invalid("cardinal sums need the strip covering"));
                }
                let op = build_interpolator_with_kernel(cov, cx(*center), *window as i64, *kernel)?;
                let mut acc = C64::new(0.0, 0.0);
                for &(k, v) in coeffs {
                    if k.unsigned_abs() as usize > *window {
                        return Err(Error::invalid(format!("label {k} outside window {window}")));
                    }
                    acc += cx(v) * op.basis(k, y);
                }
                Ok(acc)
            }
            _ => Err(Error::invalid("only pullback-poly and cardinal-sum live on coverings")),
        }
    }

    /// Total degree of a polynomial test function.
    pub fn degree(&self) -> Option<u32> {
        match self {
            TestFunction::Monomial { powers } => Some(powers.iter().sum()),
            TestFunction::ConjMonomial { holo, anti } => Some(holo + anti),
            TestFunction::PullbackPoly { coeffs } => Some(coeffs.len().saturating_sub(1) as u32),
            _ => None,
        }
    }
}

fn single(xi: &CVector) -> Result<C64> {
    if xi.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: xi.dim(),
        });
    }
    Ok(xi[0])
}

fn horner(coeffs: &[[f64; 2]], x: C64) -> C64 {
    coeffs
        .iter()
        .rev()
        .fold(C64::new(0.0, 0.0), |acc, &c| acc * x + cx(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::AnnulusPair;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn closed_forms() {
        let z = CVector::new(vec![c(0.2, 0.), c(0., 0.1)]).unwrap();
        let v = TestFunction::monomial(&[2, 1]).eval(&z).unwrap();
        assert!((v - c(0., 0.004)).norm() < 1e-17);
        let x = CVector::scalar(c(0.3, 0.4));
        let f = TestFunction::ConjMonomial { holo: 1, anti: 1 };
        assert!((f.eval(&x).unwrap() - c(0.25, 0.)).norm() < 1e-16);
        assert!((f.dbar(&x).unwrap() - c(0.3, 0.4)).norm() < 1e-16);
        assert!(!f.is_holomorphic());
        let p = TestFunction::PullbackPoly {
            coeffs: vec![[1., 0.], [0., 0.], [2., 0.]],
        };
        assert!((p.eval(&x).unwrap() - (1.0 + 2.0 * c(0.3, 0.4) * c(0.3, 0.4))).norm() < 1e-15);
        assert_eq!(p.dbar(&x).unwrap(), c(0., 0.));
    }

    #[test]
    fn config_names() {
        let f: TestFunction = serde_json::from_str(r#"{"name":"conj-monomial","holo":0,"anti":2}"#).unwrap();
        assert_eq!(f, TestFunction::ConjMonomial { holo: 0, anti: 2 });
        let f: TestFunction = serde_json::from_str(
            r#"{"name":"cardinal-sum","coeffs":[[0,[1.0,0.0]]],"center":[1.0,0.0],"window":8}"#,
        )
        .unwrap();
        let cov = CoveringSpec::strip(AnnulusPair::new(0.8, 1.3, 0.6, 1.5).unwrap());
        assert!((f.eval_covering(&cov, c(0., 0.)).unwrap() - c(1., 0.)).norm() < 1e-15);
        assert!(f.eval_covering(&cov, c(2. * std::f64::consts::PI, 0.)).unwrap().norm() < 1e-15);
    }
}
