//! Molecule diagrams for bilinear expressions in two Helmholtz fields `u`, `v`
//! and the position vector `r`.
//!
//! Atoms are `r`, `u` or `v`; a bond is a summed spatial index. A bond ending
//! on `u` or `v` is a derivative, a bond ending on `r` is a component `r_i`.
//! A vector diagram carries one extra dangling bond.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use super::poly::{Poly, DIM, EU, EV};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    R,
    U,
    V,
}

/// Atoms and unordered bonds. Stored bonds have `a <= b` and are sorted.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<(usize, usize)>,
}

const MAX_ATOMS: usize = 6;
const MAX_REWRITES: usize = 100;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

fn norm_bond(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl Molecule {
    pub fn new(atoms: Vec<Atom>, bonds: Vec<(usize, usize)>) -> Result<Self> {
        if atoms.len() > MAX_ATOMS {
            return Err(Error::Symbolic(format!("molecules are limited to {MAX_ATOMS} atoms")));
        }
        if let Some(&(a, b)) = bonds.iter().find(|&&(a, b)| a >= atoms.len() || b >= atoms.len()) {
            return Err(Error::Symbolic(format!("bond ({a},{b}) refers to a missing atom")));
        }
        let mut bonds: Vec<_> = bonds.into_iter().map(|(a, b)| norm_bond(a, b)).collect();
        bonds.sort_unstable();
        Ok(Molecule { atoms, bonds })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[(usize, usize)] {
        &self.bonds
    }

    /// Bond ends at atom `i`; a self-bond counts twice.
    pub fn degree(&self, i: usize) -> usize {
        self.bonds.iter().map(|&(a, b)| (a == i) as usize + (b == i) as usize).sum()
    }

    fn has_self_bond(&self, i: usize) -> bool {
        self.bonds.contains(&(i, i))
    }

    /// Every `r` has exactly one bond and no field carries a self-bond.
    pub fn is_valid(&self) -> bool {
        (0..self.atoms.len()).all(|i| match self.atoms[i] {
            Atom::R => self.degree(i) == 1 && !self.has_self_bond(i),
            _ => !self.has_self_bond(i),
        })
    }

    fn permuted(&self, perm: &[usize]) -> Molecule {
        let mut atoms = vec![Atom::R; self.atoms.len()];
        for (old, &new) in perm.iter().enumerate() {
            atoms[new] = self.atoms[old];
        }
        let mut bonds: Vec<_> = self.bonds.iter().map(|&(a, b)| norm_bond(perm[a], perm[b])).collect();
        bonds.sort_unstable();
        Molecule { atoms, bonds }
    }

    /// Minimal relabelling; equal for isomorphic molecules.
    pub fn canonical(&self) -> Molecule {
        self.canonical_with_perm().0
    }

    fn canonical_with_perm(&self) -> (Molecule, Vec<usize>) {
        permutations(self.atoms.len())
            .into_iter()
            .map(|p| (self.permuted(&p), p))
            .min()
            .expect("at least the identity permutation")
    }

    /// Disjoint union.
    pub fn product(&self, o: &Molecule) -> Molecule {
        let off = self.atoms.len();
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&o.atoms);
        let mut bonds = self.bonds.clone();
        bonds.extend(o.bonds.iter().map(|&(a, b)| (a + off, b + off)));
        bonds.sort_unstable();
        Molecule { atoms, bonds }
    }

    fn with_bond(&self, a: usize, b: usize) -> Molecule {
        let mut m = self.clone();
        m.bonds.push(norm_bond(a, b));
        m.bonds.sort_unstable();
        m
    }

    fn remove_atom(&mut self, i: usize) {
        self.atoms.remove(i);
        let fix = |x: usize| if x > i { x - 1 } else { x };
        self.bonds = self.bonds.iter().map(|&(a, b)| norm_bond(fix(a), fix(b))).collect();
        self.bonds.sort_unstable();
    }

    fn remove_bond(&mut self, bond: (usize, usize)) {
        let pos = self.bonds.iter().position(|&b| b == bond).expect("bond present");
        self.bonds.remove(pos);
    }

    fn applicable(&self) -> Vec<Rewrite> {
        let mut out = Vec::new();
        for (i, &atom) in self.atoms.iter().enumerate() {
            let selfb = self.has_self_bond(i);
            match atom {
                Atom::U | Atom::V if selfb => out.push(Rewrite::FieldLoop(i)),
                Atom::R if selfb => out.push(Rewrite::PositionLoop(i)),
                Atom::R if self.degree(i) == 2 => out.push(Rewrite::Contract(i)),
                _ => {}
            }
        }
        out
    }

    fn apply(&mut self, rw: Rewrite) -> Result<Poly> {
        match rw {
            Rewrite::FieldLoop(i) => {
                self.remove_bond((i, i));
                let var = if self.atoms[i] == Atom::U { EU } else { EV };
                Ok(-Poly::var(var))
            }
            Rewrite::PositionLoop(i) => {
                if self.degree(i) != 2 {
                    return Err(Error::Symbolic("r atom with a self-bond and further bonds".into()));
                }
                self.remove_bond((i, i));
                self.remove_atom(i);
                Ok(Poly::var(DIM))
            }
            Rewrite::Contract(i) => {
                let ends: Vec<usize> = self
                    .bonds
                    .iter()
                    .filter(|&&(a, b)| a == i || b == i)
                    .map(|&(a, b)| if a == i { b } else { a })
                    .collect();
                let (x, y) = (ends[0], ends[1]);
                self.remove_bond(norm_bond(i, x));
                self.remove_bond(norm_bond(i, y));
                self.bonds.push(norm_bond(x, y));
                self.bonds.sort_unstable();
                self.remove_atom(i);
                Ok(Poly::one())
            }
        }
    }

    /// Apply the rewrite rules until the molecule is valid. With `rng` the next
    /// rule is chosen at random, otherwise the first applicable one is used.
    pub fn normalize<R: Rng>(&self, mut rng: Option<&mut R>) -> Result<(Poly, Molecule)> {
        let mut m = self.clone();
        let mut coeff = Poly::one();
        for _ in 0..MAX_REWRITES {
            let options = m.applicable();
            let Some(&rw) = (match rng.as_deref_mut() {
                Some(r) => options.choose(r),
                None => options.first(),
            }) else {
                if !m.is_valid() {
                    return Err(Error::Symbolic(format!("no rule applies to invalid molecule {m}")));
                }
                return Ok((coeff, m.canonical()));
            };
            coeff = &coeff * &m.apply(rw)?;
        }
        Err(Error::Symbolic(format!("rewriting did not terminate within {MAX_REWRITES} steps")))
    }
}

#[derive(Clone, Copy, Debug)]
enum Rewrite {
    /// `u_ii -> -E_u u`, `v_ii -> -E_v v`
    FieldLoop(usize),
    /// `d_i r_i -> d`
    PositionLoop(usize),
    /// `r` with two bond ends is a Kronecker delta joining its neighbours.
    Contract(usize),
}

impl Molecule {
    /// Index notation; the dangling index, if any, is printed as `a`.
    fn render(&self, dangle: Option<usize>) -> String {
        const LETTERS: [char; 8] = ['i', 'j', 'k', 'l', 'm', 'n', 'p', 'q'];
        let n = self.atoms.len();
        let mut idx: Vec<String> = vec![String::new(); n];
        let mut squares = 0;
        let mut hidden = vec![false; n];
        let mut letter = 0;
        for &(a, b) in &self.bonds {
            let lone_r = |x: usize| self.atoms[x] == Atom::R && self.degree(x) == 1 && Some(x) != dangle;
            if a != b && lone_r(a) && lone_r(b) {
                squares += 1;
                hidden[a] = true;
                hidden[b] = true;
                continue;
            }
            let c = LETTERS[letter % LETTERS.len()];
            letter += 1;
            idx[a].push(c);
            idx[b].push(c);
        }
        if let Some(d) = dangle {
            idx[d].push('a');
        }
        let mut parts = Vec::new();
        if squares > 0 {
            parts.push(if squares == 1 { "r^2".to_string() } else { format!("r^{}", 2 * squares) });
        }
        for i in (0..n).filter(|&i| !hidden[i]) {
            let name = match self.atoms[i] {
                Atom::R => "r",
                Atom::U => "u",
                Atom::V => "v",
            };
            parts.push(if idx[i].is_empty() { name.to_string() } else { format!("{name}_{}", idx[i]) });
        }
        if parts.is_empty() {
            return "1".into();
        }
        parts.join(" ")
    }
}

impl fmt::Display for Molecule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(None))
    }
}

/// A molecule with one dangling bond attached to atom `dangle`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VectorDiagram {
    mol: Molecule,
    dangle: usize,
}

impl VectorDiagram {
    pub fn new(atoms: Vec<Atom>, bonds: Vec<(usize, usize)>, dangle: usize) -> Result<Self> {
        let mol = Molecule::new(atoms, bonds)?;
        if dangle >= mol.atoms.len() {
            return Err(Error::Symbolic("dangling bond on a missing atom".into()));
        }
        let v = VectorDiagram { mol, dangle };
        let ok = (0..v.mol.atoms.len()).all(|i| {
            let deg = v.mol.degree(i) + (i == dangle) as usize;
            match v.mol.atoms[i] {
                Atom::R => deg == 1 && !v.mol.has_self_bond(i),
                _ => !v.mol.has_self_bond(i),
            }
        });
        if !ok {
            return Err(Error::Symbolic("vector diagram is not in normal form".into()));
        }
        Ok(v)
    }

    pub fn molecule(&self) -> &Molecule {
        &self.mol
    }

    pub fn dangle(&self) -> usize {
        self.dangle
    }

    pub fn canonical(&self) -> VectorDiagram {
        permutations(self.mol.atoms.len())
            .into_iter()
            .map(|p| VectorDiagram { mol: self.mol.permuted(&p), dangle: p[self.dangle] })
            .min_by(|a, b| (&a.mol, a.dangle).cmp(&(&b.mol, b.dangle)))
            .expect("identity permutation")
    }
}

impl fmt::Display for VectorDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.mol.render(Some(self.dangle)))
    }
}

/// Linear combination of canonical molecules with polynomial coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DiagramExpr {
    terms: BTreeMap<Molecule, Poly>,
}

impl DiagramExpr {
    pub fn zero() -> Self {
        DiagramExpr::default()
    }

    pub fn term(c: Poly, m: &Molecule) -> Self {
        let mut e = DiagramExpr::zero();
        e.add_term(c, m.canonical());
        e
    }

    fn add_term(&mut self, c: Poly, m: Molecule) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(m.clone()).or_default();
        *slot = &*slot + &c;
        if slot.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Molecule, &Poly)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Molecule) -> Poly {
        self.terms.get(&m.canonical()).cloned().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &DiagramExpr) -> DiagramExpr {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(c.clone(), m.clone());
        }
        out
    }

    pub fn scale(&self, c: &Poly) -> DiagramExpr {
        let mut out = DiagramExpr::zero();
        for (m, x) in &self.terms {
            out.add_term(x * c, m.clone());
        }
        out
    }

    /// Product of expressions: molecules combine by disjoint union.
    pub fn mul(&self, o: &DiagramExpr) -> DiagramExpr {
        let mut out = DiagramExpr::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                out.add_term(c1 * c2, m1.product(m2).canonical());
            }
        }
        out
    }
}

impl fmt::Display for DiagramExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| if *c == Poly::one() { m.to_string() } else { format!("({c}) {m}") })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

/// Divergence: attach the dangling bond to each atom in turn and rewrite.
pub fn divergence(v: &VectorDiagram) -> Result<DiagramExpr> {
    divergence_with::<rand::rngs::ThreadRng>(v, None)
}

pub fn divergence_with<R: Rng>(v: &VectorDiagram, mut rng: Option<&mut R>) -> Result<DiagramExpr> {
    let mut out = DiagramExpr::zero();
    let mut order: Vec<usize> = (0..v.mol.atoms.len()).collect();
    if let Some(r) = rng.as_deref_mut() {
        order.shuffle(r);
    }
    for a in order {
        let (c, m) = v.mol.with_bond(v.dangle, a).normalize(rng.as_deref_mut())?;
        out.add_term(c, m);
    }
    Ok(out)
}
