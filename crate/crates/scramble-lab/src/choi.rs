//! State-channel map and operator-space entanglement.
//!
//! The normalized evolution operator K (squared Frobenius norm 2^L) maps
//! to a pure state with amplitudes c = K / sqrt(2^L) on 2L legs: leg j
//! (j < L) carries input site j and leg L + j carries output site j, so a
//! flattened basis index g stores the input index in its low L bits and
//! the output index in the next L bits. Subsystem entropies of that state
//! quantify how the circuit delocalizes operator-space information.

use faer::complex_native::c64;
use faer::{Mat, Side};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spin::MAX_SITES;
use crate::trajectory::EvolutionOperator;

/// Spectral weights below this are dropped before the logarithm.
pub const EIGENVALUE_FLOOR: f64 = 1e-14;

/// Mutual information is clamped from below at minus this; subadditivity
/// violations beyond round-off never survive the clamp.
pub const MI_NEG_TOL: f64 = 1e-9;

/// A subset of the 2L Choi legs, stored as a bitmask (input site j at bit
/// j, output site j at bit L + j).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LegSet {
    l: usize,
    bits: u32,
}

impl LegSet {
    pub fn new(l: usize, input_sites: &[usize], output_sites: &[usize]) -> Result<Self> {
        if l == 0 || l > MAX_SITES {
            return Err(Error::InvalidParams(format!("leg set needs 1 <= L <= {MAX_SITES}, got {l}")));
        }
        let mut bits = 0u32;
        for &j in input_sites {
            if j >= l {
                return Err(Error::InvalidParams(format!("input site {j} out of range for L = {l}")));
            }
            bits |= 1 << j;
        }
        for &j in output_sites {
            if j >= l {
                return Err(Error::InvalidParams(format!("output site {j} out of range for L = {l}")));
            }
            bits |= 1 << (l + j);
        }
        Ok(Self { l, bits })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// Number of legs in the set.
    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn contains_input(&self, j: usize) -> bool {
        j < self.l && (self.bits >> j) & 1 == 1
    }

    pub fn contains_output(&self, j: usize) -> bool {
        j < self.l && (self.bits >> (self.l + j)) & 1 == 1
    }

    pub fn union(&self, other: &LegSet) -> Result<LegSet> {
        if self.l != other.l {
            return Err(Error::ShapeMismatch(format!(
                "cannot unite leg sets with L = {} and L = {}",
                self.l, other.l
            )));
        }
        Ok(LegSet { l: self.l, bits: self.bits | other.bits })
    }

    pub fn complement(&self) -> LegSet {
        let all = (1u32 << (2 * self.l)) - 1;
        LegSet { l: self.l, bits: !self.bits & all }
    }

    /// Mask over input-index bits.
    fn in_mask(&self) -> u32 {
        self.bits & ((1 << self.l) - 1)
    }

    /// Mask over output-index bits, shifted down to bit 0.
    fn out_mask(&self) -> u32 {
        self.bits >> self.l
    }
}

/// Quadripartition of the 2L legs: inputs split into A and B, outputs
/// into C and D.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionSpec {
    l: usize,
    a: LegSet,
    b: LegSet,
    c: LegSet,
    d: LegSet,
}

impl PartitionSpec {
    /// A and B each take half the inputs, C and D the matching halves of
    /// the outputs. Requires even L.
    pub fn equal_quadripartition(l: usize) -> Result<Self> {
        if l < 2 || l > MAX_SITES {
            return Err(Error::InvalidParams(format!("quadripartition needs 2 <= L <= {MAX_SITES}, got {l}")));
        }
        if l % 2 != 0 {
            return Err(Error::InvalidParams(format!("equal quadripartition needs even L, got {l}")));
        }
        let half: Vec<usize> = (0..l / 2).collect();
        let rest: Vec<usize> = (l / 2..l).collect();
        Ok(Self {
            l,
            a: LegSet::new(l, &half, &[])?,
            b: LegSet::new(l, &rest, &[])?,
            c: LegSet::new(l, &[], &half)?,
            d: LegSet::new(l, &[], &rest)?,
        })
    }

    /// Two-site A fixed at the input end, two-site D on the output layer
    /// a distance r away: A = in {0, 1}, D = out {2 + r, 3 + r}. B and C
    /// absorb the remaining input and output legs.
    pub fn spatial(l: usize, r: usize) -> Result<Self> {
        if l < 4 || l > MAX_SITES {
            return Err(Error::InvalidParams(format!("spatial partition needs 4 <= L <= {MAX_SITES}, got {l}")));
        }
        if r > l - 4 {
            return Err(Error::InvalidParams(format!("r = {r} out of range 0..={} for L = {l}", l - 4)));
        }
        let a_sites = [0, 1];
        let d_sites = [2 + r, 3 + r];
        let b_sites: Vec<usize> = (2..l).collect();
        let c_sites: Vec<usize> = (0..l).filter(|j| !d_sites.contains(j)).collect();
        Ok(Self {
            l,
            a: LegSet::new(l, &a_sites, &[])?,
            b: LegSet::new(l, &b_sites, &[])?,
            c: LegSet::new(l, &[], &c_sites)?,
            d: LegSet::new(l, &[], &d_sites)?,
        })
    }

    /// Number of spatial partitions in the r-scan: r runs 0..=L-4.
    pub fn spatial_count(l: usize) -> usize {
        l.saturating_sub(3)
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn a(&self) -> &LegSet {
        &self.a
    }

    pub fn b(&self) -> &LegSet {
        &self.b
    }

    pub fn c(&self) -> &LegSet {
        &self.c
    }

    pub fn d(&self) -> &LegSet {
        &self.d
    }
}

/// Factorization route for a subsystem entropy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntropyPath {
    /// Gram eigenvalues when the subset side is at least four times
    /// smaller than its complement, full SVD otherwise.
    Auto,
    Svd,
    Gram,
}

/// Extract the bits of `value` selected by `mask`, packed ascending.
fn gather(mask: u32, value: u32) -> u32 {
    let mut out = 0;
    let mut out_bit = 0;
    let mut m = mask;
    while m != 0 {
        let bit = m.trailing_zeros();
        out |= ((value >> bit) & 1) << out_bit;
        out_bit += 1;
        m &= m - 1;
    }
    out
}

/// Reshape the Choi amplitudes into a matrix with the subset's legs as
/// rows and the complement's legs as columns.
fn choi_reshape(op: &EvolutionOperator, subset: &LegSet) -> Mat<c64> {
    let nd = op.dim();
    let full = (nd - 1) as u32;
    let x_in = subset.in_mask();
    let x_out = subset.out_mask();
    let y_in = !x_in & full;
    let y_out = !x_out & full;

    let tx_in: Vec<u32> = (0..nd).map(|v| gather(x_in, v as u32)).collect();
    let ty_in: Vec<u32> = (0..nd).map(|v| gather(y_in, v as u32)).collect();
    let sx = x_in.count_ones();
    let sy = y_in.count_ones();
    let tx_out: Vec<u32> = (0..nd).map(|v| gather(x_out, v as u32) << sx).collect();
    let ty_out: Vec<u32> = (0..nd).map(|v| gather(y_out, v as u32) << sy).collect();

    let dx = 1usize << subset.len();
    let dy = 1usize << (2 * subset.l - subset.len());
    let scale = c64::new(1.0 / (nd as f64).sqrt(), 0.0);
    let k = op.matrix();
    let mut m = Mat::<c64>::zeros(dx, dy);
    for nu in 0..nd {
        let xi = tx_in[nu];
        let yi = ty_in[nu];
        for mu in 0..nd {
            let x = (xi | tx_out[mu]) as usize;
            let y = (yi | ty_out[mu]) as usize;
            m[(x, y)] = k[(mu, nu)] * scale;
        }
    }
    m
}

fn entropy_bits(weights: impl Iterator<Item = f64>) -> f64 {
    let mut s = 0.0;
    for w in weights {
        s -= w * w.log2();
    }
    s
}

/// Operator entanglement entropy of a leg subset, in bits.
pub fn subsystem_entropy(op: &EvolutionOperator, subset: &LegSet) -> Result<f64> {
    subsystem_entropy_with(op, subset, EntropyPath::Auto)
}

pub fn subsystem_entropy_with(
    op: &EvolutionOperator,
    subset: &LegSet,
    path: EntropyPath,
) -> Result<f64> {
    if subset.l != op.l() {
        return Err(Error::ShapeMismatch(format!(
            "leg set has L = {} but operator has L = {}",
            subset.l,
            op.l()
        )));
    }
    op.check_norm()?;
    let m = choi_reshape(op, subset);
    let use_gram = match path {
        EntropyPath::Gram => true,
        EntropyPath::Svd => false,
        EntropyPath::Auto => 4 * m.nrows() <= m.ncols(),
    };
    let s = if use_gram {
        let gram = &m * m.adjoint();
        let eigs = gram.selfadjoint_eigenvalues(Side::Lower);
        entropy_bits(eigs.into_iter().filter(|&w| w >= EIGENVALUE_FLOOR))
    } else {
        let svs = m.singular_values();
        entropy_bits(svs.into_iter().filter(|&s| s >= EIGENVALUE_FLOOR).map(|s| s * s))
    };
    Ok(s)
}

/// The six entropies entering the tripartite mutual information, plus
/// S_ACD obtained from purity of the global state as the entropy of B.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EntropyBundle {
    pub s_a: f64,
    pub s_c: f64,
    pub s_d: f64,
    pub s_ac: f64,
    pub s_ad: f64,
    pub s_cd: f64,
    pub s_acd: f64,
}

pub fn entropy_bundle(op: &EvolutionOperator, part: &PartitionSpec) -> Result<EntropyBundle> {
    let ac = part.a.union(&part.c)?;
    let ad = part.a.union(&part.d)?;
    let cd = part.c.union(&part.d)?;
    Ok(EntropyBundle {
        s_a: subsystem_entropy(op, &part.a)?,
        s_c: subsystem_entropy(op, &part.c)?,
        s_d: subsystem_entropy(op, &part.d)?,
        s_ac: subsystem_entropy(op, &ac)?,
        s_ad: subsystem_entropy(op, &ad)?,
        s_cd: subsystem_entropy(op, &cd)?,
        s_acd: subsystem_entropy(op, &part.b)?,
    })
}

/// I(X:Y) = S_X + S_Y - S_XY, clamped so round-off cannot produce a
/// spuriously negative correlation.
pub fn mutual_information(s_x: f64, s_y: f64, s_xy: f64) -> f64 {
    (s_x + s_y - s_xy).max(-MI_NEG_TOL)
}

/// One tripartite-mutual-information evaluation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TmiSample {
    pub l: usize,
    pub step: usize,
    /// I3(A:C:D) in bits; negative values signal scrambling.
    pub i3: f64,
    /// I3 divided by the mean |I3| of Haar-random circuits at this L;
    /// filled once a Haar reference is applied.
    pub i3_normalized: Option<f64>,
}

pub fn tmi_from_bundle(b: &EntropyBundle) -> f64 {
    b.s_a + b.s_c + b.s_d + b.s_acd - b.s_ac - b.s_ad - b.s_cd
}

pub fn tmi(op: &EvolutionOperator, part: &PartitionSpec) -> Result<TmiSample> {
    if part.l != op.l() {
        return Err(Error::ShapeMismatch(format!(
            "partition has L = {} but operator has L = {}",
            part.l,
            op.l()
        )));
    }
    let bundle = entropy_bundle(op, part)?;
    Ok(TmiSample { l: op.l(), step: op.step(), i3: tmi_from_bundle(&bundle), i3_normalized: None })
}

/// TMI across the whole spatial r-scan at one time step. The entropies
/// that do not depend on r (S_A, S_B, S_CD over all outputs) are computed
/// once and shared.
#[derive(Debug, Clone, Serialize)]
pub struct SpatialTmi {
    pub l: usize,
    pub step: usize,
    /// i3[r] for r = 0..=L-4.
    pub i3: Vec<f64>,
}

pub fn spatial_tmi_profile(op: &EvolutionOperator) -> Result<SpatialTmi> {
    let l = op.l();
    if l < 4 {
        return Err(Error::InvalidParams(format!("spatial scan needs L >= 4, got {l}")));
    }
    let a = LegSet::new(l, &[0, 1], &[])?;
    let b = LegSet::new(l, &(2..l).collect::<Vec<_>>(), &[])?;
    let all_out = LegSet::new(l, &[], &(0..l).collect::<Vec<_>>())?;
    let s_a = subsystem_entropy(op, &a)?;
    let s_acd = subsystem_entropy(op, &b)?;
    let s_cd = subsystem_entropy(op, &all_out)?;

    let mut i3 = Vec::with_capacity(PartitionSpec::spatial_count(l));
    for r in 0..=l - 4 {
        let part = PartitionSpec::spatial(l, r)?;
        let s_c = subsystem_entropy(op, &part.c)?;
        let s_d = subsystem_entropy(op, &part.d)?;
        let s_ac = subsystem_entropy(op, &part.a.union(&part.c)?)?;
        let s_ad = subsystem_entropy(op, &part.a.union(&part.d)?)?;
        i3.push(s_a + s_c + s_d + s_acd - s_ac - s_ad - s_cd);
    }
    Ok(SpatialTmi { l, step: op.step(), i3 })
}

/// Purity of the reduced state on the output legs, tr[(K K†)²] / N_D².
pub fn purity_cd(op: &EvolutionOperator) -> Result<f64> {
    op.check_norm()?;
    let gram = op.matrix() * op.matrix().adjoint();
    let fro = gram.norm_l2();
    let nd = op.dim() as f64;
    Ok(fro * fro / (nd * nd))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{ModelParams, Propagator};
    use crate::trajectory::{evolve, sample_pattern, PatternSeed, Recorder, SeriesMap};

    fn identity_op(l: usize) -> EvolutionOperator {
        EvolutionOperator::identity(l).unwrap()
    }

    fn unitary_op(l: usize) -> EvolutionOperator {
        let prop = Propagator::new(ModelParams::chaotic(l)).unwrap();
        EvolutionOperator::from_matrix(l, 1, prop.matrix().to_owned()).unwrap()
    }

    /// Generic non-unitary operator: a short measured trajectory.
    fn measured_op(l: usize, steps: usize) -> EvolutionOperator {
        struct Keep(Option<Mat<c64>>);
        impl Recorder for Keep {
            fn wants(&self, step: usize, n_steps: usize) -> bool {
                step == n_steps
            }
            fn observe(&mut self, op: &EvolutionOperator) -> crate::error::Result<()> {
                self.0 = Some(op.matrix().to_owned());
                Ok(())
            }
            fn take_series(&mut self) -> SeriesMap {
                SeriesMap::new()
            }
        }
        let prop = Propagator::new(ModelParams::chaotic(l)).unwrap();
        let pattern = sample_pattern(l, steps, 0.3, PatternSeed { master: 42, stream: 0 }).unwrap();
        let mut keep = Keep(None);
        evolve(&prop, &pattern, &mut keep).unwrap();
        EvolutionOperator::from_matrix(l, steps, keep.0.unwrap()).unwrap()
    }

    #[test]
    fn quadripartition_layout() {
        let p = PartitionSpec::equal_quadripartition(4).unwrap();
        for j in 0..2 {
            assert!(p.a().contains_input(j));
            assert!(p.c().contains_output(j));
        }
        for j in 2..4 {
            assert!(p.b().contains_input(j));
            assert!(p.d().contains_output(j));
        }
        assert!(PartitionSpec::equal_quadripartition(5).is_err());
        let p2 = PartitionSpec::equal_quadripartition(2).unwrap();
        assert_eq!(p2.a().len(), 1);
        assert_eq!(p2.d().len(), 1);
    }

    #[test]
    fn spatial_layout() {
        let p = PartitionSpec::spatial(6, 0).unwrap();
        assert!(p.d().contains_output(2) && p.d().contains_output(3));
        let p = PartitionSpec::spatial(6, 2).unwrap();
        assert!(p.d().contains_output(4) && p.d().contains_output(5));
        assert!(PartitionSpec::spatial(6, 3).is_err());
        assert_eq!(PartitionSpec::spatial_count(10), 7);
        // A, B, C, D tile all 2L legs.
        let p = PartitionSpec::spatial(5, 1).unwrap();
        let total = p.a().len() + p.b().len() + p.c().len() + p.d().len();
        assert_eq!(total, 10);
    }

    #[test]
    fn identity_entropies_count_cut_pairs() {
        let op = identity_op(3);
        for j in 0..3 {
            let one = LegSet::new(3, &[j], &[]).unwrap();
            assert!((subsystem_entropy(&op, &one).unwrap() - 1.0).abs() <= 1e-12);
            let pair = LegSet::new(3, &[j], &[j]).unwrap();
            assert!(subsystem_entropy(&op, &pair).unwrap().abs() <= 1e-12);
        }
        let two = LegSet::new(3, &[0, 2], &[]).unwrap();
        assert!((subsystem_entropy(&op, &two).unwrap() - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn gram_and_svd_paths_agree_on_every_subset() {
        let op = unitary_op(3);
        for bits in 0..(1u32 << 6) {
            let ins: Vec<usize> = (0..3).filter(|&j| (bits >> j) & 1 == 1).collect();
            let outs: Vec<usize> = (0..3).filter(|&j| (bits >> (3 + j)) & 1 == 1).collect();
            let x = LegSet::new(3, &ins, &outs).unwrap();
            let gram = subsystem_entropy_with(&op, &x, EntropyPath::Gram).unwrap();
            let svd = subsystem_entropy_with(&op, &x, EntropyPath::Svd).unwrap();
            assert!((gram - svd).abs() <= 1e-9, "subset {bits:#08b}: {gram} vs {svd}");
            let comp = subsystem_entropy(&op, &x.complement()).unwrap();
            assert!((gram - comp).abs() <= 1e-9, "subset {bits:#08b}: {gram} vs complement {comp}");
        }
    }

    #[test]
    fn complementarity_holds_for_measured_operators() {
        let op = measured_op(4, 6);
        for bits in [0b1u32, 0b10010, 0b1100_0011, 0b101_0101] {
            let ins: Vec<usize> = (0..4).filter(|&j| (bits >> j) & 1 == 1).collect();
            let outs: Vec<usize> = (0..4).filter(|&j| (bits >> (4 + j)) & 1 == 1).collect();
            let x = LegSet::new(4, &ins, &outs).unwrap();
            let s = subsystem_entropy(&op, &x).unwrap();
            let sbar = subsystem_entropy(&op, &x.complement()).unwrap();
            assert!((s - sbar).abs() <= 1e-9);
        }
    }

    #[test]
    fn block_swap_permutation_localizes_information() {
        // Site permutation 0<->2, 1<->3: operator information moves but
        // does not scramble, so all pair-counting entropies are integers
        // and I3 vanishes.
        let nd = 16;
        let perm = |n: usize| ((n & 0b0011) << 2) | ((n & 0b1100) >> 2);
        let mut k = Mat::<c64>::zeros(nd, nd);
        for n in 0..nd {
            k[(perm(n), n)] = c64::new(1.0, 0.0);
        }
        let op = EvolutionOperator::from_matrix(4, 1, k).unwrap();
        let part = PartitionSpec::equal_quadripartition(4).unwrap();
        let b = entropy_bundle(&op, &part).unwrap();
        for (got, want) in [
            (b.s_a, 2.0),
            (b.s_c, 2.0),
            (b.s_d, 2.0),
            (b.s_acd, 2.0),
            (b.s_ac, 4.0),
            (b.s_ad, 0.0),
            (b.s_cd, 4.0),
        ] {
            assert!((got - want).abs() <= 1e-9, "got {got}, want {want}");
        }
        assert!(tmi(&op, &part).unwrap().i3.abs() <= 1e-9);
    }

    #[test]
    fn identity_has_zero_tmi_everywhere() {
        for l in [4usize, 6] {
            let op = identity_op(l);
            let quad = PartitionSpec::equal_quadripartition(l).unwrap();
            assert!(tmi(&op, &quad).unwrap().i3.abs() <= 1e-9);
            for r in 0..=l - 4 {
                let sp = PartitionSpec::spatial(l, r).unwrap();
                assert!(tmi(&op, &sp).unwrap().i3.abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn identity_mutual_informations() {
        let l = 4;
        let op = identity_op(l);
        let part = PartitionSpec::equal_quadripartition(l).unwrap();
        let b = entropy_bundle(&op, &part).unwrap();
        let i_ac = mutual_information(b.s_a, b.s_c, b.s_ac);
        assert!((i_ac - l as f64).abs() <= 1e-9);
        let i_ad = mutual_information(b.s_a, b.s_d, b.s_ad);
        assert!(i_ad.abs() <= 1e-9);
    }

    #[test]
    fn mutual_information_clamps_round_off() {
        assert_eq!(mutual_information(0.0, 0.0, 1e-3), -MI_NEG_TOL);
        assert_eq!(mutual_information(1.0, 1.0, 1.5), 0.5);
    }

    #[test]
    fn product_unitary_leaves_disjoint_regions_uncorrelated() {
        fn kron(a: &Mat<c64>, b: &Mat<c64>) -> Mat<c64> {
            Mat::from_fn(a.nrows() * b.nrows(), a.ncols() * b.ncols(), |i, j| {
                a[(i / b.nrows(), j / b.ncols())] * b[(i % b.nrows(), j % b.ncols())]
            })
        }
        let rot = |t: f64| {
            Mat::<c64>::from_fn(2, 2, |i, j| {
                let v = match (i, j) {
                    (0, 0) | (1, 1) => t.cos(),
                    (0, 1) => -t.sin(),
                    _ => t.sin(),
                };
                c64::new(v, 0.0)
            })
        };
        // Site 3 varies slowest, so it comes first in the Kronecker chain.
        let mut k = rot(0.9);
        for t in [0.4, 1.3, 0.2] {
            k = kron(&k, &rot(t));
        }
        let op = EvolutionOperator::from_matrix(4, 1, k).unwrap();
        let part = PartitionSpec::equal_quadripartition(4).unwrap();
        let b = entropy_bundle(&op, &part).unwrap();
        assert!(mutual_information(b.s_a, b.s_d, b.s_ad).abs() <= 1e-9);
    }

    #[test]
    fn unitary_operator_keeps_outputs_maximally_mixed() {
        for l in [3usize, 4] {
            let op = unitary_op(l);
            let outs = LegSet::new(l, &[], &(0..l).collect::<Vec<_>>()).unwrap();
            let s_cd = subsystem_entropy(&op, &outs).unwrap();
            assert!((s_cd - l as f64).abs() <= 1e-9);
        }
    }

    #[test]
    fn spatial_profile_matches_individual_partitions() {
        let op = measured_op(5, 5);
        let profile = spatial_tmi_profile(&op).unwrap();
        assert_eq!(profile.i3.len(), 2);
        for r in 0..=1 {
            let part = PartitionSpec::spatial(5, r).unwrap();
            let direct = tmi(&op, &part).unwrap().i3;
            assert!((profile.i3[r] - direct).abs() <= 1e-9);
        }
    }

    #[test]
    fn purity_of_identity_and_rank_one() {
        let op = identity_op(3);
        assert!((purity_cd(&op).unwrap() - 1.0 / 8.0).abs() <= 1e-12);
        let mut k = Mat::<c64>::zeros(8, 8);
        k[(0, 0)] = c64::new(8.0f64.sqrt(), 0.0);
        let pure = EvolutionOperator::from_matrix(3, 0, k).unwrap();
        assert!((purity_cd(&pure).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn purity_is_invariant_under_further_unitaries() {
        let l = 4;
        let op = measured_op(l, 4);
        let before = purity_cd(&op).unwrap();
        let prop = Propagator::new(ModelParams::chaotic(l)).unwrap();
        let rotated = prop.matrix() * op.matrix();
        let after = purity_cd(&EvolutionOperator::from_matrix(l, 5, rotated).unwrap()).unwrap();
        assert!((before - after).abs() <= 1e-9);
        // S_CD is likewise unitary-invariant from the left.
        let outs = LegSet::new(l, &[], &(0..l).collect::<Vec<_>>()).unwrap();
        let s_before = subsystem_entropy(&op, &outs).unwrap();
        let rotated = prop.matrix() * op.matrix();
        let s_after = subsystem_entropy(
            &EvolutionOperator::from_matrix(l, 5, rotated).unwrap(),
            &outs,
        )
        .unwrap();
        assert!((s_before - s_after).abs() <= 1e-9);
    }

    #[test]
    fn entropy_rejects_unnormalized_operators() {
        let mut k = Mat::<c64>::zeros(4, 4);
        for i in 0..4 {
            k[(i, i)] = c64::new(2.0, 0.0);
        }
        let op = EvolutionOperator::from_matrix(2, 0, k).unwrap();
        let x = LegSet::new(2, &[0], &[]).unwrap();
        assert!(matches!(subsystem_entropy(&op, &x), Err(Error::NotNormalized { .. })));
    }
}
