//! Measurement cycle benchmarking: repeat the measurement (a CNOT onto a
//! reused classical bit in the CNOT picture) 2k times with twirling, and
//! estimate the ⟨IZ⟩, ⟨ZI⟩, ⟨ZZ⟩ decays.

use rand::Rng;
use serde::Serialize;

use crate::error::Error;
use crate::linalg::{cr, kron, CMatrix};
use crate::ptm::NoiseFidelities;
use crate::sim::{gates, DensityMatrix, SuperOp};
use crate::Result;

/// One twirl assignment: X power and the two Z powers around a measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwirlSample {
    pub x: u8,
    pub z1: u8,
    pub z2: u8,
}

impl TwirlSample {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        TwirlSample { x: rng.gen_range(0..2), z1: rng.gen_range(0..2), z2: rng.gen_range(0..2) }
    }
}

/// MCB run configuration.
#[derive(Debug, Clone)]
pub struct McbConfig {
    pub depths: Vec<usize>,
    pub randomizations: usize,
    pub shots: usize,
}

impl Default for McbConfig {
    fn default() -> Self {
        McbConfig { depths: vec![0, 1, 2, 5, 8], randomizations: 256, shots: 128 }
    }
}

impl McbConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.depths.contains(&0) {
            return Err(Error::domain("depths must include k = 0"));
        }
        if self.randomizations == 0 || self.shots == 0 {
            return Err(Error::domain("randomizations and shots must be at least 1"));
        }
        Ok(())
    }
}

/// Per-randomization expectation estimates at one depth.
#[derive(Debug, Clone, Serialize)]
pub struct McbRecord {
    pub depth: usize,
    pub iz: f64,
    pub zi: f64,
    pub zz: f64,
}

/// Expectations with standard errors at one depth.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DepthExpectations {
    pub depth: usize,
    pub iz: (f64, f64),
    pub zi: (f64, f64),
    pub zz: (f64, f64),
}

/// Full MCB dataset: one row per depth.
#[derive(Debug, Clone, Serialize)]
pub struct McbData {
    pub depths: Vec<DepthExpectations>,
}

impl McbData {
    pub fn ks(&self) -> Vec<f64> {
        self.depths.iter().map(|d| d.depth as f64).collect()
    }

    pub fn series(&self, which: &str) -> Vec<(f64, f64)> {
        self.depths
            .iter()
            .map(|d| match which {
                "iz" => d.iz,
                "zi" => d.zi,
                _ => d.zz,
            })
            .collect()
    }
}

/// Aggregate per-randomization records into means and standard errors over
/// randomizations, per depth.
pub fn mcb_expectations(records: &[McbRecord]) -> Result<McbData> {
    if records.is_empty() {
        return Err(Error::domain("no MCB records"));
    }
    let mut depths: Vec<usize> = records.iter().map(|r| r.depth).collect();
    depths.sort_unstable();
    depths.dedup();
    let mut out = Vec::new();
    for depth in depths {
        let rows: Vec<&McbRecord> = records.iter().filter(|r| r.depth == depth).collect();
        let n = rows.len() as f64;
        let stat = |get: &dyn Fn(&McbRecord) -> f64| {
            let mean = rows.iter().map(|r| get(r)).sum::<f64>() / n;
            let sigma = if rows.len() > 1 {
                (rows.iter().map(|r| (get(r) - mean).powi(2)).sum::<f64>() / (n - 1.0) / n)
                    .sqrt()
            } else {
                0.0
            };
            (mean, sigma)
        };
        out.push(DepthExpectations {
            depth,
            iz: stat(&|r| r.iz),
            zi: stat(&|r| r.zi),
            zz: stat(&|r| r.zz),
        });
    }
    Ok(McbData { depths: out })
}

/// Exact MCB expectations from the two-qubit (qubit ⊗ classical-bit)
/// density-matrix simulator with explicit bit-flip channels — an
/// independent check of the closed-form transfer matrix.
pub fn mcb_exact(f: &NoiseFidelities, depths: &[usize]) -> Result<Vec<(usize, f64, f64, f64)>> {
    let flip = |p: f64, wires: usize| -> Result<SuperOp> {
        // wires = 1: single-wire flip; wires = 2: correlated two-wire flip.
        let x = gates::x_qubit();
        let (k0, k1) = if wires == 1 {
            (gates::identity(2) * cr((1.0 - p).sqrt()), x * cr(p.sqrt()))
        } else {
            (gates::identity(4) * cr((1.0 - p).sqrt()), kron(&x, &x) * cr(p.sqrt()))
        };
        SuperOp::from_kraus(&[k0, k1])
    };
    let sp = flip(f.p_sp(), 1)?;
    let s = flip(f.p_s(), 1)?;
    let a = flip(f.p_a(), 1)?;
    let c = flip(f.p_c(), 2)?;

    let z = gates::z_qubit();
    let zz = kron(&z, &z);
    let mut out = Vec::new();
    for &k in depths {
        let mut rho = DensityMatrix::ground(&[2, 2])?;
        rho.apply_superop(&sp, &[0])?;
        for _ in 0..2 * k {
            rho.apply_superop(&c, &[0, 1])?;
            rho.apply_superop(&a, &[1])?;
            rho.apply_superop(&s, &[0])?;
            rho.apply_unitary(&gates::cnot(), &[0, 1])?;
        }
        // Final measurement contributes f_a·f_s to any Z on the qubit wire;
        // the correlated error cancels there.
        let fm = f.f_a * f.f_s;
        let iz = rho.expectation(&z, &[1])?;
        let zi = fm * rho.expectation(&z, &[0])?;
        let zz_val = fm * rho.expectation(&zz, &[0, 1])?;
        out.push((k, iz, zi, zz_val));
    }
    Ok(out)
}

/// Sampled MCB. With purely diagonal (bit-flip) noise the twirls are
/// distribution-preserving relabelings, so each shot reduces to classical
/// bit propagation: the reused classical register accumulates the CNOT
/// parity while flip errors strike the qubit (p_s), the register (p_a), or
/// both (p_c) before every cycle.
pub fn run_mcb_sampled<R: Rng>(
    f: &NoiseFidelities,
    cfg: &McbConfig,
    rng: &mut R,
) -> Result<Vec<McbRecord>> {
    cfg.validate()?;
    let bern = |rng: &mut R, p: f64| rng.gen::<f64>() < p;
    let mut records = Vec::new();
    for &k in &cfg.depths {
        for _ in 0..cfg.randomizations {
            let (mut iz, mut zi, mut zz) = (0.0, 0.0, 0.0);
            for _ in 0..cfg.shots {
                let mut q = bern(rng, f.p_sp());
                let mut c = false;
                for _ in 0..2 * k {
                    let corr = bern(rng, f.p_c());
                    q ^= bern(rng, f.p_s()) ^ corr;
                    c ^= bern(rng, f.p_a()) ^ corr;
                    c ^= q;
                }
                // Final measurement: the record flips with p_s and p_a; the
                // correlated flip hits both the record and the discarded
                // post-measurement state, so it cancels.
                let m = q ^ bern(rng, f.p_s()) ^ bern(rng, f.p_a());
                let sc = if c { -1.0 } else { 1.0 };
                let sm = if m { -1.0 } else { 1.0 };
                iz += sc;
                zi += sm;
                zz += sc * sm;
            }
            let n = cfg.shots as f64;
            records.push(McbRecord { depth: k, iz: iz / n, zi: zi / n, zz: zz / n });
        }
    }
    Ok(records)
}

/// Average of the twirled measurement cycle, with an arbitrary injected
/// noise channel `noise` on the qubit ⊗ cbit pair before the CNOT. Each
/// cycle's twirl applies `Zᶻ¹Xˣ` to the qubit before the measurement,
/// `Xˣ Zᶻ²` after, and corrects the recorded bit by XOR with x (an X on
/// the classical wire). Because the recorded bit is un-XORed in software,
/// the register physically carries the previous cycle's flip into the next
/// cycle: seen from one cycle, that is an extra X pair on the classical
/// wire (flip going in, compensation on readout), so the average runs over
/// the 8 per-cycle assignments × 2 inherited register flips.
pub fn twirl_averaged_cycle(noise: &SuperOp) -> Result<SuperOp> {
    if noise.dim() != 4 {
        return Err(Error::dimension("injected noise must act on the qubit ⊗ cbit pair"));
    }
    let x = gates::x_qubit();
    let z = gates::z_qubit();
    let id = gates::identity(2);
    let cx = SuperOp::from_unitary(&gates::cnot())?;
    let mut acc = CMatrix::zeros(16, 16);
    for x0 in 0..2u8 {
        for xb in 0..2u8 {
            for z1 in 0..2u8 {
                for z2 in 0..2u8 {
                    let pick = |b: u8, g: &CMatrix| if b == 1 { g.clone() } else { id.clone() };
                    let pre = kron(&(pick(z1, &z) * pick(xb, &x)), &pick(x0, &x));
                    let post = kron(&(pick(xb, &x) * pick(z2, &z)), &(pick(xb, &x) * pick(x0, &x)));
                    let cycle = SuperOp::from_unitary(&post)?
                        .compose(&cx)?
                        .compose(noise)?
                        .compose(&SuperOp::from_unitary(&pre)?)?;
                    acc += cycle.matrix();
                }
            }
        }
    }
    SuperOp::from_matrix(4, acc / cr(16.0))
}
