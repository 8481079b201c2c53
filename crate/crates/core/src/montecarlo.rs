//! Monte Carlo estimation of logical failure rates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitSim, Extraction, Program, Tracking};
use crate::code::{build, Geometry, PauliKind, Sector, SubsystemCode};
use crate::decoder::{Decoder, Judge};
use crate::error::{Error, Result};
use crate::lattice::{build_2d, build_3d, defects_from_history, DefectSet, VirtualLattice};
use crate::noise::{sample_code_capacity, NoiseVariant};
use crate::schedule::find_schedule;

/// Number of noisy syndrome layers per trial.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TPolicy {
    /// `T = L`.
    EqualL,
    Fixed(usize),
}

impl TPolicy {
    pub fn rounds(self, l: usize) -> usize {
        match self {
            TPolicy::EqualL => l,
            TPolicy::Fixed(t) => t,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub geometry: Geometry,
    pub noise: NoiseVariant,
    pub ls: Vec<usize>,
    pub ps: Vec<f64>,
    pub t_policy: TPolicy,
    pub trials: u64,
    pub seed: u64,
    /// Error type that is simulated and decoded.
    pub sector: Sector,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.ls.is_empty() || self.ps.is_empty() {
            return Err(Error::InvalidArgument("empty L or p list".into()));
        }
        if let Some(p) = self.ps.iter().find(|p| !(0.0..=0.5).contains(*p)) {
            return Err(Error::InvalidArgument(format!("error rate {p} outside [0, 0.5]")));
        }
        if self.noise != NoiseVariant::CodeCapacity && self.geometry != Geometry::Toric {
            return Err(Error::Unsupported(
                "noisy syndrome extraction is simulated on the torus only".into(),
            ));
        }
        if self.noise != NoiseVariant::CodeCapacity && self.t_policy == TPolicy::Fixed(0) {
            return Err(Error::InvalidArgument("T must be at least 1".into()));
        }
        Ok(())
    }

    /// Syndrome layers recorded for size `l` (0 for perfect syndromes).
    pub fn rounds(&self, l: usize) -> usize {
        match self.noise {
            NoiseVariant::CodeCapacity => 0,
            _ => self.t_policy.rounds(l),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultPoint {
    pub geometry: Geometry,
    pub noise: NoiseVariant,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub p: f64,
    pub trials: u64,
    pub failures: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(failures: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    const Z: f64 = 1.959_963_984_540_054;
    let n = trials as f64;
    let phat = failures as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = Z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of one trial, independent of how trials are scheduled on workers.
pub fn trial_seed(master: u64, l: usize, p_index: usize, trial: u64) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ l as u64);
    h = splitmix64(h ^ p_index as u64);
    splitmix64(h ^ trial)
}

/// Everything needed to run trials at one lattice size.
pub struct SizeSetup {
    pub code: SubsystemCode,
    pub noise: NoiseVariant,
    pub sector: Sector,
    pub t_rounds: usize,
    program: Option<Program>,
    /// Lattice with priors in units of `p`.
    base: VirtualLattice,
    judge: Judge,
}

impl SizeSetup {
    pub fn new(geometry: Geometry, l: usize, noise: NoiseVariant, t_rounds: usize, sector: Sector) -> Result<Self> {
        let code = build(l, geometry)?;
        let (program, base) = match noise {
            NoiseVariant::CodeCapacity => (None, build_2d(&code, sector)?),
            NoiseVariant::CircuitBased | NoiseVariant::DirectParity => {
                let extraction = match noise {
                    NoiseVariant::CircuitBased => Extraction::Circuit(find_schedule()?),
                    _ => Extraction::DirectParity,
                };
                let program = Program::new(&code, extraction)?;
                let (lat, _) = build_3d(&code, &program, t_rounds, sector)?;
                (Some(program), lat)
            }
        };
        let judge = Judge::new(&code, sector);
        Ok(SizeSetup {
            code,
            noise,
            sector,
            t_rounds,
            program,
            base,
            judge,
        })
    }

    pub fn lattice(&self) -> &VirtualLattice {
        &self.base
    }

    pub fn decoder(&self, p: f64) -> Result<Decoder> {
        Decoder::new(&self.base.with_rate(p), self.code.n_qubits())
    }

    /// One trial; true on logical failure.
    pub fn trial(&self, decoder: &Decoder, p: f64, seed: u64) -> Result<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (accumulated, defects) = match &self.program {
            None => {
                let e = sample_code_capacity(&self.code, self.sector, p, &mut rng);
                let checks = self.code.sector_checks(self.sector);
                let mut nodes = Vec::new();
                for (c, op) in checks.iter().enumerate() {
                    if op.anticommutes(&e)? {
                        nodes.push(c);
                    }
                }
                let d = DefectSet {
                    n_checks: checks.len(),
                    layers: 1,
                    nodes,
                };
                (e, d)
            }
            Some(program) => {
                let sim = CircuitSim::new(program, self.t_rounds, Tracking::from(self.sector))?;
                let record = sim.simulate(p, &mut rng);
                let history = record
                    .history(self.sector)
                    .ok_or_else(|| Error::Inconsistent("sector not tracked".into()))?;
                let d = defects_from_history(history);
                (record.accumulated, d)
            }
        };
        let correction = decoder.decode(&defects)?;
        Ok(!self.judge.judge(&accumulated, &correction.operator)?)
    }

    /// Failure count over `trials` trials seeded from `(seed, l, p_index)`.
    pub fn run_point(&self, p: f64, p_index: usize, trials: u64, seed: u64) -> Result<u64> {
        let decoder = self.decoder(p)?;
        let l = self.code.l();
        (0..trials)
            .into_par_iter()
            .map(|t| self.trial(&decoder, p, trial_seed(seed, l, p_index, t)).map(u64::from))
            .try_reduce(|| 0, |a, b| Ok(a + b))
    }
}

/// Runs every `(L, p)` point of a configuration. `progress` is called after each
/// point is finished.
pub fn run(config: &RunConfig, mut progress: impl FnMut(&ResultPoint)) -> Result<Vec<ResultPoint>> {
    config.validate()?;
    let mut out = Vec::new();
    for &l in &config.ls {
        let t = config.rounds(l);
        let setup = SizeSetup::new(config.geometry, l, config.noise, t, config.sector)?;
        for (pi, &p) in config.ps.iter().enumerate() {
            let failures = setup.run_point(p, pi, config.trials, config.seed)?;
            let (ci_low, ci_high) = wilson_interval(failures, config.trials);
            let point = ResultPoint {
                geometry: config.geometry,
                noise: config.noise,
                l,
                t,
                p,
                trials: config.trials,
                failures,
                rate: failures as f64 / config.trials as f64,
                ci_low,
                ci_high,
            };
            progress(&point);
            out.push(point);
        }
    }
    Ok(out)
}

pub const CSV_HEADER: &str = "geometry,noise,L,T,p,trials,failures,rate,ci_low,ci_high";

/// Results as CSV with [`CSV_HEADER`]; floats are written in shortest
/// round-trip form.
pub fn to_csv(points: &[ResultPoint]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if points.is_empty() {
        let _ = w.write_record(CSV_HEADER.split(','));
    }
    for r in points {
        w.serialize(r).expect("in-memory CSV write");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
}

pub fn from_csv(text: &str) -> Result<Vec<ResultPoint>> {
    let mut rd = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rd
        .headers()
        .map_err(|e| Error::InvalidArgument(format!("CSV header: {e}")))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != CSV_HEADER {
        return Err(Error::InvalidArgument(format!(
            "expected header '{CSV_HEADER}', got '{header}'"
        )));
    }
    rd.deserialize()
        .map(|row| row.map_err(|e| Error::InvalidArgument(format!("CSV row: {e}"))))
        .collect()
}

/// Sign changes of `rate(L_large) - rate(L_small)` along `p` for each pair of
/// consecutive sizes; a clean threshold shows exactly one per pair.
pub fn crossing_counts(points: &[ResultPoint]) -> Vec<(usize, usize, usize)> {
    let mut ls: Vec<usize> = points.iter().map(|r| r.l).collect();
    ls.sort_unstable();
    ls.dedup();
    let mut out = Vec::new();
    for w in ls.windows(2) {
        let rate = |l: usize| -> Vec<(f64, f64)> {
            let mut v: Vec<(f64, f64)> = points.iter().filter(|r| r.l == l).map(|r| (r.p, r.rate)).collect();
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
            v
        };
        let (a, b) = (rate(w[0]), rate(w[1]));
        let diffs: Vec<f64> = a
            .iter()
            .filter_map(|&(p, ra)| b.iter().find(|&&(q, _)| q == p).map(|&(_, rb)| rb - ra))
            .filter(|d| *d != 0.0)
            .collect();
        let changes = diffs.windows(2).filter(|d| (d[0] < 0.0) != (d[1] < 0.0)).count();
        out.push((w[0], w[1], changes));
    }
    out
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            geometry: Geometry::Toric,
            noise: NoiseVariant::CodeCapacity,
            ls: vec![8],
            ps: vec![0.05],
            t_policy: TPolicy::EqualL,
            trials: 1000,
            seed: 0,
            sector: PauliKind::X,
        }
    }
}
