use crate::error::{Error, Result};

const MASS_TOL: f64 = 1e-10;

/// Finite family of probability vectors on a common support.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSet {
    support_size: usize,
    members: Vec<Vec<f64>>,
}

fn check_member(p: &[f64], n: usize) -> Result<()> {
    if p.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.len(),
            context: "distribution over the support",
        });
    }
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid("distribution has a negative or non-finite entry"));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::invalid(format!("distribution sums to {total}")));
    }
    Ok(())
}

impl DistributionSet {
    pub fn new(support_size: usize, members: Vec<Vec<f64>>) -> Result<Self> {
        for m in &members {
            check_member(m, support_size)?;
        }
        Ok(DistributionSet { support_size, members })
    }

    pub fn empty(support_size: usize) -> Self {
        DistributionSet {
            support_size,
            members: Vec::new(),
        }
    }

    pub fn push(&mut self, p: Vec<f64>) -> Result<()> {
        check_member(&p, self.support_size)?;
        self.members.push(p);
        Ok(())
    }

    pub fn support_size(&self) -> usize {
        self.support_size
    }

    pub fn members(&self) -> &[Vec<f64>] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Union of several sets on the same support.
    pub fn union<'a>(sets: impl IntoIterator<Item = &'a DistributionSet>) -> Result<Self> {
        let mut out: Option<DistributionSet> = None;
        for s in sets {
            match out.as_mut() {
                None => out = Some(s.clone()),
                Some(o) => {
                    if o.support_size != s.support_size {
                        return Err(Error::invalid("union of sets on different supports"));
                    }
                    o.members.extend(s.members.iter().cloned());
                }
            }
        }
        out.ok_or_else(|| Error::invalid("union of no sets"))
    }
}

/// `max_{rho in Pi} |<g, rho>|`.
pub fn pi_norm(g: &[f64], pis: &DistributionSet) -> Result<f64> {
    if pis.is_empty() {
        return Err(Error::invalid("Pi-norm over an empty distribution set"));
    }
    if g.len() != pis.support_size() {
        return Err(Error::DimensionMismatch {
            expected: pis.support_size(),
            got: g.len(),
            context: "function on support",
        });
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("function values must be finite"));
    }
    Ok(pis
        .members()
        .iter()
        .map(|rho| rho.iter().zip(g).map(|(r, x)| r * x).sum::<f64>().abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Concentration {
    pub value: f64,
    /// `(step, atom)` where some `rho` has mass but `nu_h` has none.
    pub offending: Option<(usize, usize)>,
}

/// `max_h max_{rho in Pi_h} sqrt(sum_x rho(x)^2 / nu_h(x))`.
pub fn concentration_coefficient(nu: &[Vec<f64>], pis: &[DistributionSet]) -> Result<Concentration> {
    if nu.len() != pis.len() {
        return Err(Error::DimensionMismatch {
            expected: pis.len(),
            got: nu.len(),
            context: "reference distributions per step",
        });
    }
    let mut best = 1.0f64;
    for (h, (nu_h, set)) in nu.iter().zip(pis).enumerate() {
        check_member(nu_h, set.support_size())?;
        for rho in set.members() {
            let mut acc = 0.0;
            for (x, (&r, &v)) in rho.iter().zip(nu_h).enumerate() {
                if r == 0.0 {
                    continue;
                }
                if v == 0.0 {
                    return Ok(Concentration {
                        value: f64::INFINITY,
                        offending: Some((h, x)),
                    });
                }
                acc += r * r / v;
            }
            best = best.max(acc.sqrt());
        }
    }
    Ok(Concentration {
        value: best,
        offending: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_norm_examples() {
        let pis = DistributionSet::new(3, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(pi_norm(&[0.0; 3], &pis).unwrap(), 0.0);
        assert_eq!(pi_norm(&[3.0, -5.0, 7.0], &pis).unwrap(), 5.0);
        assert!((pi_norm(&[-2.5; 3], &pis).unwrap() - 2.5).abs() < 1e-15);
        assert!(pi_norm(&[1.0; 3], &DistributionSet::empty(3)).is_err());
    }

    #[test]
    fn concentration_examples() {
        let nu = vec![vec![0.25; 4]];
        let same = DistributionSet::new(4, vec![vec![0.25; 4]]).unwrap();
        assert!((concentration_coefficient(&nu, &[same]).unwrap().value - 1.0).abs() < 1e-10);
        let point = DistributionSet::new(4, vec![vec![0.0, 0.0, 1.0, 0.0]]).unwrap();
        assert!((concentration_coefficient(&nu, &[point.clone()]).unwrap().value - 2.0).abs() < 1e-10);
        let partial = vec![vec![0.5, 0.5, 0.0, 0.0]];
        let c = concentration_coefficient(&partial, &[point]).unwrap();
        assert!(c.value.is_infinite());
        assert_eq!(c.offending, Some((0, 2)));
    }

    #[test]
    fn rejects_bad_members() {
        assert!(DistributionSet::new(2, vec![vec![0.5, 0.6]]).is_err());
        assert!(DistributionSet::new(2, vec![vec![1.5, -0.5]]).is_err());
        assert!(DistributionSet::new(2, vec![vec![1.0]]).is_err());
    }
}
