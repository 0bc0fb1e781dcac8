//! Polynomials with rational coefficients in three indeterminates.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

pub const NVARS: usize = 3;
pub type Exponents = [u16; NVARS];

/// Default variable names: energies of `u` and `v`, and the dimension.
pub const ENERGY_NAMES: [&str; NVARS] = ["Eu", "Ev", "d"];
pub const EU: usize = 0;
pub const EV: usize = 1;
pub const DIM: usize = 2;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: BTreeMap<Exponents, BigRational>,
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert([0; NVARS], c);
        }
        p
    }

    pub fn int(n: i64) -> Self {
        Poly::constant(rat(n))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Poly::constant(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn var(i: usize) -> Self {
        let mut e = [0; NVARS];
        e[i] = 1;
        Poly::monomial(e, BigRational::one())
    }

    pub fn monomial(e: Exponents, c: BigRational) -> Self {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(e, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &BigRational)> {
        self.terms.iter()
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&[0; NVARS]).cloned(),
            _ => None,
        }
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().map(|&x| x as u32).sum()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, v: usize) -> u16 {
        self.terms.keys().map(|e| e[v]).max().unwrap_or(0)
    }

    pub fn uses_var(&self, v: usize) -> bool {
        self.degree_in(v) > 0
    }

    /// Lex-leading term (largest exponent vector).
    pub fn leading(&self) -> Option<(&Exponents, &BigRational)> {
        self.terms.iter().next_back()
    }

    fn add_term(&mut self, e: Exponents, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(e).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(e, x)| (*e, x * c)).collect() }
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut out = Poly::one();
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// Coefficient of `x_v^k`, a polynomial free of `x_v`.
    pub fn coeff_in(&self, v: usize, k: u16) -> Poly {
        let mut out = Poly::zero();
        for (e, c) in &self.terms {
            if e[v] == k {
                let mut e2 = *e;
                e2[v] = 0;
                out.add_term(e2, c.clone());
            }
        }
        out
    }

    fn shift(&self, v: usize, k: u16) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    let mut e2 = *e;
                    e2[v] += k;
                    (e2, c.clone())
                })
                .collect(),
        }
    }

    /// Replace every variable by the given polynomial.
    pub fn compose(&self, subs: &[Poly; NVARS]) -> Poly {
        let mut out = Poly::zero();
        for (e, c) in &self.terms {
            let mut t = Poly::constant(c.clone());
            for v in 0..NVARS {
                if e[v] > 0 {
                    t = &t * &subs[v].pow(e[v] as u32);
                }
            }
            out = &out + &t;
        }
        out
    }

    /// Replace variable `v` by `p`.
    pub fn substitute(&self, v: usize, p: &Poly) -> Poly {
        let mut subs = [Poly::var(0), Poly::var(1), Poly::var(2)];
        subs[v] = p.clone();
        self.compose(&subs)
    }

    pub fn eval_rational(&self, x: &[BigRational; NVARS]) -> BigRational {
        let mut s = BigRational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for v in 0..NVARS {
                for _ in 0..e[v] {
                    t *= &x[v];
                }
            }
            s += t;
        }
        s
    }

    pub fn eval(&self, x: &[f64; NVARS]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let cf = c.to_f64().unwrap_or(f64::NAN);
                (0..NVARS).fold(cf, |acc, v| acc * x[v].powi(e[v] as i32))
            })
            .sum()
    }

    /// `self / d` when the division is exact.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        let (de, dc) = d.leading()?;
        let (de, dc) = (*de, dc.clone());
        let mut rem = self.clone();
        let mut q = Poly::zero();
        while let Some((re, rc)) = rem.leading() {
            if (0..NVARS).any(|v| re[v] < de[v]) {
                return None;
            }
            let mut e = [0; NVARS];
            for v in 0..NVARS {
                e[v] = re[v] - de[v];
            }
            let t = Poly::monomial(e, rc / &dc);
            rem = &rem - &(&t * d);
            q = &q + &t;
        }
        Some(q)
    }

    /// Scale so the lex-leading coefficient is 1.
    pub fn monic(&self) -> Poly {
        match self.leading() {
            None => Poly::zero(),
            Some((_, c)) => self.scale(&c.recip()),
        }
    }

    /// Pseudo-remainder of `self` by `b` with respect to `x_v`.
    fn prem(&self, b: &Poly, v: usize) -> Poly {
        let db = b.degree_in(v);
        let lc = b.coeff_in(v, db);
        let mut r = self.clone();
        while !r.is_zero() && r.degree_in(v) >= db {
            let dr = r.degree_in(v);
            let t = r.coeff_in(v, dr).shift(v, dr - db);
            r = &(&lc * &r) - &(&t * b);
        }
        r
    }

    /// Content with respect to `x_v`: gcd of the coefficients of its powers.
    fn content_in(&self, v: usize) -> Poly {
        let mut g = Poly::zero();
        for k in 0..=self.degree_in(v) {
            let c = self.coeff_in(v, k);
            if !c.is_zero() {
                g = gcd(&g, &c);
                if g.as_constant().is_some() {
                    return Poly::one();
                }
            }
        }
        g
    }
}

/// Monic greatest common divisor.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    let Some(v) = (0..NVARS).rev().find(|&v| a.uses_var(v) || b.uses_var(v)) else {
        return Poly::one();
    };
    let ca = a.content_in(v);
    let cb = b.content_in(v);
    let cont = gcd(&ca, &cb);
    let mut x = a.div_exact(&ca).expect("content divides");
    let mut y = b.div_exact(&cb).expect("content divides");
    if x.degree_in(v) < y.degree_in(v) {
        std::mem::swap(&mut x, &mut y);
    }
    loop {
        if y.is_zero() {
            break;
        }
        if y.degree_in(v) == 0 {
            x = Poly::one();
            break;
        }
        let r = x.prem(&y, v);
        x = y;
        y = if r.is_zero() { r } else { r.div_exact(&r.content_in(v)).expect("content divides") };
    }
    (&cont * &x).monic()
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.add_term(*e, c.clone());
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.add_term(*e, -c.clone());
        }
        out
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let mut e = *e1;
                for v in 0..NVARS {
                    e[v] += e2[v];
                }
                out.add_term(e, c1 * c2);
            }
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly { terms: self.terms.iter().map(|(e, c)| (*e, -c.clone())).collect() }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Poly {
            type Output = Poly;
            fn $m(self, o: Poly) -> Poly {
                (&self).$m(&o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}

impl Poly {
    /// Human-readable form with the given variable names, highest terms first.
    pub fn display_with(&self, names: &[&str; NVARS]) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut s = String::new();
        for (i, (e, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if i == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let mono: Vec<String> = (0..NVARS)
                .filter(|&v| e[v] > 0)
                .map(|v| if e[v] == 1 { names[v].to_string() } else { format!("{}^{}", names[v], e[v]) })
                .collect();
            if mono.is_empty() {
                s.push_str(&a.to_string());
            } else {
                if !a.is_one() {
                    s.push_str(&a.to_string());
                    s.push('*');
                }
                s.push_str(&mono.join("*"));
            }
        }
        s
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with(&ENERGY_NAMES))
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly({self})")
    }
}
