//! Bruhat sections, transition maps, signed cocycles and Bruhat–Hopf
//! coordinates.

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::flag::{act, act_matrix, flag_of, flag_of_matrix, k_iota, transversality, Flag, Transversality};
use crate::group::{AMElement, CartanVector, GroupElement, Mat, SignVector};
use crate::linalg::{bruhat, kan, kan_minus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SectionKind {
    Unipotent,
    Compact,
}

/// A Bruhat section over the cell of flags transverse to `base`, right
/// translated by `offset`. Compact sections only carry an M-part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub kind: SectionKind,
    pub base: Flag,
    pub offset: AMElement,
}

/// The representative h_ξ̌ = rep(ξ̌)·k_ιᵀ ∈ K, mapping η̌₀ to ξ̌.
pub fn base_representative(base: &Flag) -> Mat {
    base.rep() * k_iota(base.n()).transpose()
}

impl Section {
    pub fn unipotent(base: Flag) -> Section {
        let n = base.n();
        Section {
            kind: SectionKind::Unipotent,
            base,
            offset: AMElement::identity(n),
        }
    }

    pub fn compact(base: Flag) -> Section {
        let n = base.n();
        Section {
            kind: SectionKind::Compact,
            base,
            offset: AMElement::identity(n),
        }
    }

    /// [e], the unipotent section over the cell opposite η̌₀.
    pub fn standard(n: usize) -> Section {
        Section::unipotent(Flag::opposite(n))
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    /// s.x. A compact section only accepts an M-valued translation.
    pub fn right_mul(&self, x: &AMElement) -> Result<Section> {
        if self.kind == SectionKind::Compact && x.a.norm() > 1e-12 {
            return Err(Error::InvalidInput(
                "compact sections can only be translated by M".into(),
            ));
        }
        Ok(Section {
            kind: self.kind,
            base: self.base.clone(),
            offset: self.offset.mul(x),
        })
    }

    pub fn right_mul_m(&self, m: &SignVector) -> Section {
        Section {
            kind: self.kind,
            base: self.base.clone(),
            offset: self.offset.mul(&AMElement::from_m(m.clone())),
        }
    }

    /// The same section viewed as compact (k_I ∘ s), keeping the M-part of
    /// the offset.
    pub fn to_compact(&self) -> Section {
        Section {
            kind: SectionKind::Compact,
            base: self.base.clone(),
            offset: AMElement::from_m(self.offset.m.clone()),
        }
    }

    /// [h] = h·[e](h⁻¹ ·) for any h ∈ G, written as [ξ̌].x with ξ̌ = hη̌₀.
    pub fn through(h: &GroupElement) -> Result<Section> {
        let t = kan_minus(h.matrix())?;
        let n = h.n();
        let base = flag_of_matrix(&(&t.k * k_iota(n)))?;
        let m = sign_part(&base_representative(&base), &t.k)?;
        Ok(Section {
            kind: SectionKind::Unipotent,
            base,
            offset: AMElement::new(t.a, m)?,
        })
    }

    /// Left translate by k ∈ SO(n): (k·s)(ξ) = k·s(k⁻¹ξ).
    pub fn translate(&self, k: &Mat) -> Result<Section> {
        let base = act_matrix(k, &self.base);
        let m = sign_part(&base_representative(&base), &(k * base_representative(&self.base)))?;
        Ok(Section {
            kind: self.kind,
            base,
            offset: AMElement::from_m(m).mul(&self.offset),
        })
    }

    pub fn domain(&self, xi: &Flag, cfg: &Config) -> Transversality {
        transversality(xi, &self.base, cfg)
    }

    pub fn eval(&self, xi: &Flag, cfg: &Config) -> Result<GroupElement> {
        let h = base_representative(&self.base);
        let c = h.transpose() * xi.rep();
        let lu = bruhat(&c, cfg).map_err(|_| Error::OutOfDomain {
            margin: transversality(xi, &self.base, cfg).margin,
        })?;
        let hu = h * lu.u_minus;
        let m = match self.kind {
            SectionKind::Unipotent => hu * self.offset.to_matrix(),
            SectionKind::Compact => kan(&hu)?.k * self.offset.m.to_matrix(),
        };
        Ok(GroupElement::from_matrix_unchecked(m))
    }
}

/// Read off k1ᵀk2 ∈ M for two frames of the same flag.
fn sign_part(k1: &Mat, k2: &Mat) -> Result<SignVector> {
    let d = k1.transpose() * k2;
    let diag: Vec<f64> = (0..d.nrows()).map(|i| d[(i, i)]).collect();
    SignVector::round(&diag, 1e-6)
        .ok_or_else(|| Error::InvalidInput("frames do not differ by a sign matrix".into()))
}

pub fn eval_section(s: &Section, xi: &Flag) -> Result<GroupElement> {
    s.eval(xi, &Config::default())
}

/// Solve s(ξ)·b = rhs, using the transpose for compact sections.
fn left_divide(s: &Section, sx: &GroupElement, rhs: &Mat) -> Result<Mat> {
    match s.kind {
        SectionKind::Compact => Ok(sx.matrix().transpose() * rhs),
        SectionKind::Unipotent => sx
            .matrix()
            .clone()
            .lu()
            .solve(rhs)
            .ok_or(Error::NonInvertible),
    }
}

/// AM-part of an upper triangular matrix together with the relative size of
/// its strictly lower part (zero in exact arithmetic).
fn upper_am(b: &Mat) -> Result<(AMElement, f64)> {
    let n = b.nrows();
    let d: Vec<f64> = (0..n).map(|i| b[(i, i)]).collect();
    let scale = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut lower = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            lower = lower.max(b[(i, j)].abs());
        }
    }
    Ok((AMElement::from_diagonal(&d)?, lower / scale))
}

/// 𝒯_{s,s2}(ξ): the AM-part of s(ξ)⁻¹s2(ξ).
pub fn transition(s: &Section, s2: &Section, xi: &Flag) -> Result<AMElement> {
    transition_with(s, s2, xi, &Config::default()).map(|r| r.0)
}

pub fn transition_with(s: &Section, s2: &Section, xi: &Flag, cfg: &Config) -> Result<(AMElement, f64)> {
    let a = s.eval(xi, cfg)?;
    let b = s2.eval(xi, cfg)?;
    upper_am(&left_divide(s, &a, b.matrix())?)
}

/// β_{s1,s0}(g, ξ): the AM-part of s1(gξ)⁻¹·g·s0(ξ).
pub fn cocycle(s1: &Section, s0: &Section, g: &GroupElement, xi: &Flag) -> Result<AMElement> {
    cocycle_with(s1, s0, g, xi, &Config::default()).map(|r| r.0)
}

/// Cocycle plus the relative size of the strictly lower part of
/// s1(gξ)⁻¹·g·s0(ξ).
pub fn cocycle_with(
    s1: &Section,
    s0: &Section,
    g: &GroupElement,
    xi: &Flag,
    cfg: &Config,
) -> Result<(AMElement, f64)> {
    let gx = act(g, xi);
    let a = s0.eval(xi, cfg)?;
    let b = s1.eval(&gx, cfg)?;
    upper_am(&left_divide(s1, &b, &(g.matrix() * a.matrix()))?)
}

/// σ(g, ξ), the A-part of the Iwasawa decomposition of g·rep(ξ).
pub fn iwasawa_cocycle(g: &GroupElement, xi: &Flag) -> CartanVector {
    kan(&(g.matrix() * xi.rep()))
        .expect("invertible matrix has a KAN decomposition")
        .a
}

/// Bruhat–Hopf coordinates (ξ, ξ̌; x)_s of s(ξ)·u·x with u ∈ N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BHCoordinates {
    pub xi: Flag,
    pub xi_check: Flag,
    pub x: AMElement,
    pub section: Section,
}

pub fn to_bh(g: &GroupElement, s: &Section) -> Result<BHCoordinates> {
    to_bh_with(g, s, &Config::default())
}

pub fn to_bh_with(g: &GroupElement, s: &Section, cfg: &Config) -> Result<BHCoordinates> {
    let xi = flag_of(g);
    let xi_check = flag_of_matrix(&(g.matrix() * k_iota(g.n())))?;
    let sx = s.eval(&xi, cfg)?;
    let (x, _) = upper_am(&left_divide(s, &sx, g.matrix())?)?;
    Ok(BHCoordinates {
        xi,
        xi_check,
        x,
        section: s.clone(),
    })
}

pub fn from_bh(c: &BHCoordinates) -> Result<GroupElement> {
    from_bh_with(c, &Config::default())
}

/// s(ξ)·u·x where u ∈ N is the unique element with s(ξ)·u·η̌₀ = ξ̌.
pub fn from_bh_with(c: &BHCoordinates, cfg: &Config) -> Result<GroupElement> {
    let n = c.xi.n();
    let ki = k_iota(n);
    let sx = c.section.eval(&c.xi, cfg)?;
    let target = left_divide(&c.section, &sx, c.xi_check.rep())?;
    let lu = bruhat(&(ki.transpose() * target), cfg).map_err(|_| Error::NotTransverse {
        margin: transversality(&c.xi, &c.xi_check, cfg).margin,
    })?;
    let u = &ki * lu.u_minus * ki.transpose();
    Ok(GroupElement::from_matrix_unchecked(sx.matrix() * u * c.x.to_matrix()))
}

impl BHCoordinates {
    /// g·(ξ, ξ̌; x)_{s0} = (gξ, gξ̌; β_{s1,s0}(g, ξ)·x)_{s1}.
    pub fn left_act(&self, g: &GroupElement, s1: &Section, cfg: &Config) -> Result<BHCoordinates> {
        let (beta, _) = cocycle_with(s1, &self.section, g, &self.xi, cfg)?;
        Ok(BHCoordinates {
            xi: act(g, &self.xi),
            xi_check: act(g, &self.xi_check),
            x: beta.mul(&self.x),
            section: s1.clone(),
        })
    }

    /// (ξ, ξ̌; x)_s·y = (ξ, ξ̌; xy)_s.
    pub fn right_mul(&self, y: &AMElement) -> BHCoordinates {
        BHCoordinates {
            x: self.x.mul(y),
            ..self.clone()
        }
    }
}

/// Coordinates (ξ; m)_s of k ∈ SO(n) in a compact section.
pub fn compact_coords(k: &Mat, s: &Section) -> Result<(Flag, SignVector)> {
    if s.kind != SectionKind::Compact {
        return Err(Error::InvalidInput("compact_coords needs a compact section".into()));
    }
    let xi = flag_of_matrix(k)?;
    let sx = s.eval(&xi, &Config::default())?;
    let m = sign_part(sx.matrix(), k)?;
    Ok((xi, m))
}

/// All permutations of 0..n in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
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

/// Compact sections over the cells opposite the n! coordinate flags. Every
/// flag is transverse to at least one of them.
pub fn covering_family(n: usize) -> Vec<Section> {
    permutations(n)
        .into_iter()
        .map(|w| Section::compact(Flag::permutation(&w)))
        .collect()
}

/// Index of the chart whose domain contains ξ with the largest minor margin.
pub fn best_chart(family: &[Section], xi: &Flag) -> usize {
    let cfg = Config::default();
    let mut best = 0;
    let mut best_margin = f64::NEG_INFINITY;
    for (i, s) in family.iter().enumerate() {
        let m = s.domain(xi, &cfg).margin;
        if m > best_margin {
            best = i;
            best_margin = m;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flag::flag_distance;
    use crate::linalg::relative_error;

    #[test]
    fn standard_section_at_standard_flag_is_identity() {
        let s = Section::standard(3);
        let v = eval_section(&s, &Flag::standard(3)).unwrap();
        assert!(relative_error(v.matrix(), &Mat::identity(3, 3)) < 1e-15);
    }

    #[test]
    fn covering_family_size() {
        assert_eq!(covering_family(3).len(), 6);
        assert_eq!(permutations(4).len(), 24);
    }

    #[test]
    fn identity_bh_coordinates() {
        let s = Section::compact(Flag::opposite(3));
        let c = to_bh(&GroupElement::identity(3), &s).unwrap();
        assert!(flag_distance(&c.xi, &Flag::standard(3)) < 1e-14);
        assert!(flag_distance(&c.xi_check, &Flag::opposite(3)) < 1e-14);
        assert!(c.x.distance(&AMElement::identity(3)) < 1e-15);
    }
}
