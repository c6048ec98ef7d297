//! Bregman distance generators.
//!
//! A distance carries its generator `phi`, the gradient of the generator,
//! and the two constants the solver's parameter validators consume: the
//! strong-convexity modulus of `phi` and the Lipschitz constant of its
//! gradient. Generators that lack a global modulus (Itakura-Saito,
//! Kullback-Leibler) report both constants as 0 and are rejected by the
//! checked-mode validators; they remain usable when no descent certificate
//! is requested.

use crate::error::{Error, Result};
use crate::numerics::{fro_norm, inner, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainTag {
    AllReals,
    PositiveOrthant,
}

type ScalarFn = Box<dyn Fn(&Matrix) -> f64 + Send + Sync>;
type GradFn = Box<dyn Fn(&Matrix) -> Matrix + Send + Sync>;

/// How `distance` is evaluated. `Generic` applies the defining formula
/// `phi(x) - phi(y) - <grad phi(y), x - y>`; `ClosedForm` substitutes an
/// explicit expression (used where the catalogue lists a divergence that is
/// not globally the Bregman distance of its generator).
enum EvalForm {
    Generic,
    ClosedForm(Box<dyn Fn(&Matrix, &Matrix) -> f64 + Send + Sync>),
}

pub struct BregmanDistance {
    name: String,
    phi: ScalarFn,
    grad_phi: GradFn,
    eval: EvalForm,
    /// Strong-convexity modulus of the generator (0 = unavailable).
    pub strong_convexity_mu: f64,
    /// Lipschitz constant of the generator gradient (0 = unavailable).
    pub grad_lipschitz_ell: f64,
    pub domain: DomainTag,
    constants_available: bool,
}

impl std::fmt::Debug for BregmanDistance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BregmanDistance")
            .field("name", &self.name)
            .field("mu", &self.strong_convexity_mu)
            .field("ell", &self.grad_lipschitz_ell)
            .field("domain", &self.domain)
            .finish()
    }
}

impl BregmanDistance {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Whether the modulus and Lipschitz fields are meaningful for
    /// descent-constant computation. False for the divergences that lack
    /// global constants (Itakura-Saito, Kullback-Leibler).
    pub fn constants_available(&self) -> bool {
        self.constants_available
    }

    pub fn phi(&self, x: &Matrix) -> Result<f64> {
        self.check_domain(x)?;
        Ok((self.phi)(x))
    }

    pub fn grad_phi(&self, x: &Matrix) -> Result<Matrix> {
        self.check_domain(x)?;
        Ok((self.grad_phi)(x))
    }

    /// The distance `phi(x) - phi(y) - <grad phi(y), x - y>`.
    pub fn distance(&self, x: &Matrix, y: &Matrix) -> Result<f64> {
        if !x.same_shape(y) {
            return Err(Error::shape(
                format!("{:?}", x.shape()),
                format!("{:?}", y.shape()),
                "BregmanDistance::distance",
            ));
        }
        self.check_domain(x)?;
        self.check_domain(y)?;
        match &self.eval {
            EvalForm::Generic => {
                let g = (self.grad_phi)(y);
                Ok((self.phi)(x) - (self.phi)(y) - inner(&g, &x.sub(y))?)
            }
            EvalForm::ClosedForm(f) => Ok(f(x, y)),
        }
    }

    fn check_domain(&self, x: &Matrix) -> Result<()> {
        if self.domain == DomainTag::PositiveOrthant
            && x.to_row_major().iter().any(|v| *v <= 0.0)
        {
            return Err(Error::DomainViolation {
                distance: self.name.clone(),
                reason: "requires strictly positive entries".to_string(),
            });
        }
        Ok(())
    }

    /// `(gamma/2) ||x - y||^2`, generator `(gamma/2) ||x||^2`.
    /// Modulus and gradient Lipschitz constant are both `gamma`.
    pub fn squared_euclidean(gamma: f64) -> Result<Self> {
        if gamma <= 0.0 || !gamma.is_finite() {
            return Err(Error::invalid("gamma", "must be finite and > 0"));
        }
        Ok(BregmanDistance {
            name: format!("sq_euclid:{gamma}"),
            phi: Box::new(move |x| 0.5 * gamma * fro_norm(x).powi(2)),
            grad_phi: Box::new(move |x| x.scale(gamma)),
            eval: EvalForm::Generic,
            strong_convexity_mu: gamma,
            grad_lipschitz_ell: gamma,
            domain: DomainTag::AllReals,
            constants_available: true,
        })
    }

    /// `(1/2) <Q(x - y), x - y>` for symmetric positive definite `Q`.
    ///
    /// The 1/2 factor normalizes the generator so that `Q = gamma * I`
    /// reproduces `squared_euclidean(gamma)`. Modulus and Lipschitz
    /// constant are the extreme eigenvalues of `Q`.
    pub fn mahalanobis(q: &Matrix) -> Result<Self> {
        if q.rows() != q.cols() {
            return Err(Error::invalid("q", "must be square"));
        }
        let scale = q.max_abs().max(1.0);
        for i in 0..q.rows() {
            for j in 0..q.cols() {
                if (q.get(i, j) - q.get(j, i)).abs() > 1e-10 * scale {
                    return Err(Error::invalid("q", "must be symmetric (tolerance 1e-10)"));
                }
            }
        }
        let eigen = nalgebra::SymmetricEigen::new(q.inner().clone());
        let lambda_min = eigen.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let lambda_max = eigen.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if lambda_min <= 0.0 {
            return Err(Error::invalid(
                "q",
                format!("must be positive definite (lambda_min = {lambda_min})"),
            ));
        }
        let q_phi = q.clone();
        let q_grad = q.clone();
        Ok(BregmanDistance {
            name: "mahalanobis".to_string(),
            phi: Box::new(move |x| {
                0.5 * inner(&q_phi.matmul(x), x).expect("shape checked by caller")
            }),
            grad_phi: Box::new(move |x| q_grad.matmul(x)),
            eval: EvalForm::Generic,
            strong_convexity_mu: lambda_min,
            grad_lipschitz_ell: lambda_max,
            domain: DomainTag::AllReals,
            constants_available: true,
        })
    }

    /// `sum_i x_i log(x_i / y_i) - sum_i (x_i - y_i)` on positive entries;
    /// generator `sum_i (x_i log x_i - x_i)`.
    pub fn itakura_saito() -> Self {
        BregmanDistance {
            name: "itakura_saito".to_string(),
            phi: Box::new(|x| x.to_row_major().iter().map(|v| v * v.ln() - v).sum()),
            grad_phi: Box::new(|x| x.map(|v| v.ln())),
            eval: EvalForm::Generic,
            strong_convexity_mu: 0.0,
            grad_lipschitz_ell: 0.0,
            domain: DomainTag::PositiveOrthant,
            constants_available: false,
        }
    }

    /// `sum_i x_i log(x_i / y_i)` on positive entries; generator
    /// `sum_i x_i log x_i`.
    ///
    /// The divergence equals the generator's Bregman distance only on
    /// equal-sum arguments (it is the classical form on the probability
    /// simplex); off the simplex it can be negative. It is kept in this
    /// catalogue as listed, with both constants unavailable.
    pub fn kullback_leibler() -> Self {
        BregmanDistance {
            name: "kullback_leibler".to_string(),
            phi: Box::new(|x| x.to_row_major().iter().map(|v| v * v.ln()).sum()),
            grad_phi: Box::new(|x| x.map(|v| v.ln() + 1.0)),
            eval: EvalForm::ClosedForm(Box::new(|x, y| {
                x.to_row_major()
                    .iter()
                    .zip(y.to_row_major().iter())
                    .map(|(a, b)| a * (a / b).ln())
                    .sum()
            })),
            strong_convexity_mu: 0.0,
            grad_lipschitz_ell: 0.0,
            domain: DomainTag::PositiveOrthant,
            constants_available: false,
        }
    }

    /// Parses a config name: `sq_euclid:<gamma>`, `mahalanobis:<matrix-file>`,
    /// `itakura_saito`, `kullback_leibler`.
    pub fn from_config_name(spec: &str) -> Result<Self> {
        if let Some(gamma) = spec.strip_prefix("sq_euclid:") {
            let gamma: f64 = gamma.parse().map_err(|_| {
                Error::invalid("bregman", format!("bad gamma in '{spec}'"))
            })?;
            return BregmanDistance::squared_euclidean(gamma);
        }
        if let Some(path) = spec.strip_prefix("mahalanobis:") {
            let q = crate::io::read_matrix_auto(std::path::Path::new(path))?;
            return BregmanDistance::mahalanobis(&q);
        }
        match spec {
            "itakura_saito" => Ok(BregmanDistance::itakura_saito()),
            "kullback_leibler" => Ok(BregmanDistance::kullback_leibler()),
            _ => Err(Error::invalid("bregman", format!("unknown distance '{spec}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::Rng;

    fn rand_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| rng.next_gaussian())
    }

    fn rand_positive(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| 0.1 + 3.0 * rng.next_f64())
    }

    #[test]
    fn squared_euclidean_examples() {
        let d2 = BregmanDistance::squared_euclidean(2.0).unwrap();
        let x = Matrix::column(&[1.0, 0.0]).unwrap();
        let y = Matrix::column(&[0.0, 0.0]).unwrap();
        assert_eq!(d2.distance(&x, &x).unwrap(), 0.0);
        // unit step under gamma = 2 costs 1
        assert!((d2.distance(&x, &y).unwrap() - 1.0).abs() < 1e-15);

        let d1 = BregmanDistance::squared_euclidean(1.0).unwrap();
        assert!((d1.distance(&x, &y).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(d1.strong_convexity_mu, 1.0);
        assert_eq!(d1.grad_lipschitz_ell, 1.0);
        assert!(BregmanDistance::squared_euclidean(0.0).is_err());
        assert!(BregmanDistance::squared_euclidean(-1.0).is_err());
    }

    #[test]
    fn euclidean_equals_identity_mahalanobis() {
        let d1 = BregmanDistance::squared_euclidean(1.0).unwrap();
        let dq = BregmanDistance::mahalanobis(&Matrix::identity(3)).unwrap();
        let mut rng = Rng::new(5);
        for _ in 0..20 {
            let x = rand_matrix(&mut rng, 3, 1);
            let y = rand_matrix(&mut rng, 3, 1);
            let a = d1.distance(&x, &y).unwrap();
            let b = dq.distance(&x, &y).unwrap();
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn mahalanobis_examples() {
        let q = Matrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let d = BregmanDistance::mahalanobis(&q).unwrap();
        let zero = Matrix::zeros(2, 1);
        let e1 = Matrix::column(&[1.0, 0.0]).unwrap();
        let e2 = Matrix::column(&[0.0, 1.0]).unwrap();
        assert!((d.distance(&e1, &zero).unwrap() - 0.5).abs() < 1e-14);
        assert!((d.distance(&e2, &zero).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(d.distance(&e1, &e1).unwrap(), 0.0);
        assert_eq!(d.strong_convexity_mu, 1.0);
        assert_eq!(d.grad_lipschitz_ell, 4.0);

        let two_i = Matrix::identity(4).scale(2.0);
        let d2 = BregmanDistance::mahalanobis(&two_i).unwrap();
        let e2 = BregmanDistance::squared_euclidean(2.0).unwrap();
        let mut rng = Rng::new(9);
        for _ in 0..20 {
            let x = rand_matrix(&mut rng, 4, 1);
            let y = rand_matrix(&mut rng, 4, 1);
            let a = d2.distance(&x, &y).unwrap();
            let b = e2.distance(&x, &y).unwrap();
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn mahalanobis_rejects_bad_q() {
        let asym = Matrix::from_rows(vec![vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(BregmanDistance::mahalanobis(&asym).is_err());
        let indef = Matrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        assert!(BregmanDistance::mahalanobis(&indef).is_err());
    }

    #[test]
    fn divergence_examples() {
        let is = BregmanDistance::itakura_saito();
        let kl = BregmanDistance::kullback_leibler();
        let x = Matrix::column(&[1.0, 2.0, 3.0]).unwrap();
        assert!(is.distance(&x, &x).unwrap().abs() <= 1e-12);
        assert!(kl.distance(&x, &x).unwrap().abs() <= 1e-12);

        let two = Matrix::column(&[2.0]).unwrap();
        let one = Matrix::column(&[1.0]).unwrap();
        let got = kl.distance(&two, &one).unwrap();
        assert!((got - 2.0 * 2f64.ln()).abs() < 1e-14);

        let neg = Matrix::column(&[-1.0]).unwrap();
        assert!(is.distance(&neg, &one).is_err());
        assert!(kl.distance(&one, &neg).is_err());
        assert_eq!(is.strong_convexity_mu, 0.0);
        assert_eq!(kl.grad_lipschitz_ell, 0.0);
    }

    #[test]
    fn nonnegativity_sweeps() {
        let mut rng = Rng::new(31);
        let se = BregmanDistance::squared_euclidean(1.7).unwrap();
        let q = {
            let g = rand_matrix(&mut rng, 3, 3);
            g.matmul(&g.transpose()).add(&Matrix::identity(3))
        };
        let mh = BregmanDistance::mahalanobis(&q).unwrap();
        for _ in 0..200 {
            let x = rand_matrix(&mut rng, 3, 2);
            let y = rand_matrix(&mut rng, 3, 2);
            for d in [&se, &mh] {
                let v = d.distance(&x, &y).unwrap();
                let scale = 1.0 + d.phi(&x).unwrap().abs();
                assert!(v >= -1e-12 * scale);
                assert_eq!(d.distance(&x, &x).unwrap(), 0.0);
                // strong convexity lower bound
                let mu = d.strong_convexity_mu;
                let gap = fro_norm(&x.sub(&y)).powi(2);
                assert!(v >= 0.5 * mu * gap - 1e-12 * scale.max(gap));
            }
        }
        let is = BregmanDistance::itakura_saito();
        for _ in 0..100 {
            let x = rand_positive(&mut rng, 4, 1);
            let y = rand_positive(&mut rng, 4, 1);
            let v = is.distance(&x, &y).unwrap();
            assert!(v >= -1e-12 * (1.0 + is.phi(&x).unwrap().abs()));
            assert!(is.distance(&x, &x).unwrap().abs() <= 1e-12);
        }
        // the listed KL form is nonnegative on equal-sum arguments
        let kl = BregmanDistance::kullback_leibler();
        for _ in 0..100 {
            let x = rand_positive(&mut rng, 4, 1);
            let y = rand_positive(&mut rng, 4, 1);
            let sx: f64 = x.to_row_major().iter().sum();
            let sy: f64 = y.to_row_major().iter().sum();
            let xn = x.scale(1.0 / sx);
            let yn = y.scale(1.0 / sy);
            let v = kl.distance(&xn, &yn).unwrap();
            assert!(v >= -1e-12);
            assert!(kl.distance(&xn, &xn).unwrap().abs() <= 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = Rng::new(77);
        let q = {
            let g = rand_matrix(&mut rng, 3, 3);
            g.matmul(&g.transpose()).add(&Matrix::identity(3))
        };
        let generators: Vec<BregmanDistance> = vec![
            BregmanDistance::squared_euclidean(2.5).unwrap(),
            BregmanDistance::mahalanobis(&q).unwrap(),
            BregmanDistance::itakura_saito(),
            BregmanDistance::kullback_leibler(),
        ];
        let h = 1e-6;
        for d in &generators {
            for _ in 0..50 {
                let x = if d.domain == DomainTag::PositiveOrthant {
                    rand_positive(&mut rng, 3, 1)
                } else {
                    rand_matrix(&mut rng, 3, 1)
                };
                let g = d.grad_phi(&x).unwrap();
                for i in 0..3 {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp.set(i, 0, x.get(i, 0) + h);
                    xm.set(i, 0, x.get(i, 0) - h);
                    let fd = (d.phi(&xp).unwrap() - d.phi(&xm).unwrap()) / (2.0 * h);
                    let gi = g.get(i, 0);
                    assert!(
                        (fd - gi).abs() <= 1e-5 * (1.0 + gi.abs()),
                        "{}: fd {fd} vs grad {gi}",
                        d.name()
                    );
                }
            }
        }
    }

    #[test]
    fn config_names_parse() {
        assert_eq!(
            BregmanDistance::from_config_name("sq_euclid:2.5")
                .unwrap()
                .strong_convexity_mu,
            2.5
        );
        assert!(BregmanDistance::from_config_name("itakura_saito").is_ok());
        assert!(BregmanDistance::from_config_name("kullback_leibler").is_ok());
        assert!(BregmanDistance::from_config_name("sq_euclid:zzz").is_err());
        assert!(BregmanDistance::from_config_name("nope").is_err());
    }
}
