//! Fractions of [`Poly`], kept in lowest terms with a monic denominator.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num::{BigInt, BigRational, Integer, One};

use super::poly::{gcd, Poly, ENERGY_NAMES, NVARS};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatFunc {
    num: Poly,
    den: Poly,
}

impl RatFunc {
    pub fn new(num: Poly, den: Poly) -> Self {
        assert!(!den.is_zero(), "rational function with zero denominator");
        if num.is_zero() {
            return RatFunc { num, den: Poly::one() };
        }
        let g = gcd(&num, &den);
        let num = num.div_exact(&g).expect("gcd divides numerator");
        let den = den.div_exact(&g).expect("gcd divides denominator");
        let lc = den.leading().expect("nonzero").1.clone();
        let inv = lc.recip();
        RatFunc { num: num.scale(&inv), den: den.scale(&inv) }
    }

    pub fn zero() -> Self {
        RatFunc { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> Self {
        Self::from(Poly::one())
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn as_poly(&self) -> Option<&Poly> {
        (self.den == Poly::one()).then_some(&self.num)
    }

    pub fn recip(&self) -> Option<Self> {
        (!self.is_zero()).then(|| RatFunc::new(self.den.clone(), self.num.clone()))
    }

    pub fn eval(&self, x: &[f64; NVARS]) -> f64 {
        self.num.eval(x) / self.den.eval(x)
    }

    pub fn eval_rational(&self, x: &[BigRational; NVARS]) -> Option<BigRational> {
        let d = self.den.eval_rational(x);
        (d != BigRational::from_integer(0.into())).then(|| self.num.eval_rational(x) / d)
    }

    /// Substitute each variable by a polynomial.
    pub fn compose(&self, subs: &[Poly; NVARS]) -> Self {
        RatFunc::new(self.num.compose(subs), self.den.compose(subs))
    }

    /// Printed with integer coefficients: numerator and denominator are both
    /// scaled by the lcm of their coefficient denominators.
    pub fn display_with(&self, names: &[&str; NVARS]) -> String {
        if self.den == Poly::one() {
            return self.num.display_with(names);
        }
        let l = self
            .num
            .terms()
            .chain(self.den.terms())
            .fold(BigInt::one(), |acc, (_, c)| acc.lcm(c.denom()));
        let l = BigRational::from_integer(l);
        let (n, d) = (self.num.scale(&l), self.den.scale(&l));
        let wrap = |p: &Poly| {
            let s = p.display_with(names);
            if p.terms().count() == 1 && !s.contains('/') {
                s
            } else {
                format!("({s})")
            }
        };
        let n_str = if n.terms().count() == 1 { n.display_with(names) } else { format!("({})", n.display_with(names)) };
        format!("{}/{}", n_str, wrap(&d))
    }
}

impl From<Poly> for RatFunc {
    fn from(p: Poly) -> Self {
        RatFunc { num: p, den: Poly::one() }
    }
}

impl Add for &RatFunc {
    type Output = RatFunc;
    fn add(self, o: &RatFunc) -> RatFunc {
        if self.den == o.den {
            return RatFunc::new(&self.num + &o.num, self.den.clone());
        }
        RatFunc::new(&(&self.num * &o.den) + &(&o.num * &self.den), &self.den * &o.den)
    }
}

impl Sub for &RatFunc {
    type Output = RatFunc;
    fn sub(self, o: &RatFunc) -> RatFunc {
        self + &(-o)
    }
}

impl Mul for &RatFunc {
    type Output = RatFunc;
    fn mul(self, o: &RatFunc) -> RatFunc {
        RatFunc::new(&self.num * &o.num, &self.den * &o.den)
    }
}

impl Div for &RatFunc {
    type Output = RatFunc;
    fn div(self, o: &RatFunc) -> RatFunc {
        assert!(!o.is_zero(), "division by zero rational function");
        RatFunc::new(&self.num * &o.den, &self.den * &o.num)
    }
}

impl Neg for &RatFunc {
    type Output = RatFunc;
    fn neg(self) -> RatFunc {
        RatFunc { num: -&self.num, den: self.den.clone() }
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with(&ENERGY_NAMES))
    }
}

impl fmt::Debug for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RatFunc({self})")
    }
}
