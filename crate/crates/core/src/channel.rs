//! Synthetic character classifier. Emits 35 logits per gesture from a
//! three-level Gaussian model (true class, its confusable distractors, the
//! rest), turns logits into the input representations used for training and
//! testing, and calibrates the model to target top-1/top-5 accuracies.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal, StandardNormal};

use crate::alphabet::{argmax, Symbol, NUM_CLASSES, NUM_GESTURES};
use crate::error::{Error, Result};

pub const NUM_DISTRACTORS: usize = 4;

/// Raw classifier scores, one per gesture.
pub type LogitVector = [f64; NUM_GESTURES];
/// A distribution over the 36 classes; the OOV entry is always 0 on channel output.
pub type Distribution = [f64; NUM_CLASSES];

const MODEL_HEADER: &str = "softspell-confusion-model v1";

/// Parameters of the simulated classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionModel {
    /// For every gesture, the four gestures it is most easily confused with.
    pub distractors: [[Symbol; NUM_DISTRACTORS]; NUM_GESTURES],
    pub mu_true: f64,
    pub mu_distractor: f64,
    pub mu_other: f64,
    pub sigma: f64,
    pub temperature: f64,
}

/// Hand-listed look-alike gestures; the rest of each set is drawn pseudorandomly.
const LOOKALIKES: &[(&str, &[&str])] = &[
    ("A", &["Ä"]),
    ("Ä", &["A"]),
    ("O", &["Ö"]),
    ("Ö", &["O"]),
    ("U", &["Ü", "V"]),
    ("Ü", &["U"]),
    ("V", &["U"]),
    ("I", &["J"]),
    ("J", &["I"]),
    ("M", &["N"]),
    ("N", &["M"]),
    ("S", &["SCH"]),
    ("SCH", &["S"]),
];

/// The fixed distractor sets: look-alikes first, then symbols drawn from a
/// generator seeded by the gesture index.
pub fn default_distractors() -> [[Symbol; NUM_DISTRACTORS]; NUM_GESTURES] {
    let mut sets = [[Symbol::A; NUM_DISTRACTORS]; NUM_GESTURES];
    for s in Symbol::gestures() {
        let mut picked: Vec<Symbol> = LOOKALIKES
            .iter()
            .find(|(name, _)| Symbol::from_name(name) == Some(s))
            .map(|(_, alikes)| alikes.iter().filter_map(|n| Symbol::from_name(n)).collect())
            .unwrap_or_default();
        let mut rng = ChaCha8Rng::seed_from_u64(0x0D15_7AC7 + s.index() as u64);
        while picked.len() < NUM_DISTRACTORS {
            let cand = Symbol::from_index(rng.random_range(0..NUM_GESTURES)).unwrap();
            if cand != s && !picked.contains(&cand) {
                picked.push(cand);
            }
        }
        sets[s.index()].copy_from_slice(&picked);
    }
    sets
}

impl ConfusionModel {
    pub fn new(
        distractors: [[Symbol; NUM_DISTRACTORS]; NUM_GESTURES],
        mu_true: f64,
        mu_distractor: f64,
        mu_other: f64,
        sigma: f64,
        temperature: f64,
    ) -> Result<Self> {
        let model = ConfusionModel {
            distractors,
            mu_true,
            mu_distractor,
            mu_other,
            sigma,
            temperature,
        };
        model.validate()?;
        Ok(model)
    }

    /// A model with the default distractor sets.
    pub fn with_levels(mu_true: f64, mu_distractor: f64, mu_other: f64, sigma: f64, temperature: f64) -> Result<Self> {
        ConfusionModel::new(default_distractors(), mu_true, mu_distractor, mu_other, sigma, temperature)
    }

    /// A channel whose argmax is always the truth.
    pub fn noiseless() -> Self {
        ConfusionModel::with_levels(6.0, 3.0, 0.0, 1e-9, 1.0).unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        for s in Symbol::gestures() {
            let set = &self.distractors[s.index()];
            for (i, d) in set.iter().enumerate() {
                if *d == s || d.is_oov() || set[..i].contains(d) {
                    return Err(Error::InvalidParameter(format!("bad distractor set for {s}: {set:?}")));
                }
            }
        }
        let finite = [self.mu_true, self.mu_distractor, self.mu_other, self.sigma, self.temperature]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !(self.mu_true > self.mu_distractor && self.mu_distractor > self.mu_other) {
            return Err(Error::InvalidParameter(
                "need finite means with mu_true > mu_distractor > mu_other".into(),
            ));
        }
        if self.sigma <= 0.0 || self.temperature <= 0.0 {
            return Err(Error::InvalidParameter("sigma and temperature must be positive".into()));
        }
        Ok(())
    }

    /// Mean logit of class `class` when `truth` is signed.
    #[inline]
    pub fn mean_logit(&self, truth: Symbol, class: Symbol) -> f64 {
        if class == truth {
            self.mu_true
        } else if self.distractors[truth.index()].contains(&class) {
            self.mu_distractor
        } else {
            self.mu_other
        }
    }

    /// One classifier output for a video of `truth`.
    pub fn sample_logits<R: Rng + ?Sized>(&self, truth: Symbol, rng: &mut R) -> Result<LogitVector> {
        if truth.is_oov() {
            return Err(Error::TruthIsOov);
        }
        let mut logits = [0.0; NUM_GESTURES];
        for (i, l) in logits.iter_mut().enumerate() {
            let g: f64 = StandardNormal.sample(rng);
            *l = self.mean_logit(truth, Symbol::from_index(i).unwrap()) + self.sigma * g;
        }
        Ok(logits)
    }

    /// Versioned `key=value` text; floats use shortest round-trip formatting.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{MODEL_HEADER}").unwrap();
        for (key, v) in [
            ("mu_true", self.mu_true),
            ("mu_distractor", self.mu_distractor),
            ("mu_other", self.mu_other),
            ("sigma", self.sigma),
            ("temperature", self.temperature),
        ] {
            writeln!(out, "{key}={v:?}").unwrap();
        }
        for s in Symbol::gestures() {
            let names: Vec<&str> = self.distractors[s.index()].iter().map(|d| d.as_str()).collect();
            writeln!(out, "distractors.{s}={}", names.join(",")).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |reason: String| Error::Format {
            what: "confusion model",
            reason,
        };
        let mut lines = text.lines();
        if lines.next().map(str::trim_end) != Some(MODEL_HEADER) {
            return Err(bad("missing or unsupported header".into()));
        }
        let mut scalars = [None; 5];
        let keys = ["mu_true", "mu_distractor", "mu_other", "sigma", "temperature"];
        let mut distractors = [[Symbol::OOV; NUM_DISTRACTORS]; NUM_GESTURES];
        let mut seen = [false; NUM_GESTURES];
        for line in lines.map(str::trim_end).filter(|l| !l.is_empty()) {
            let (key, value) = line.split_once('=').ok_or_else(|| bad(format!("no '=' in {line:?}")))?;
            if let Some(name) = key.strip_prefix("distractors.") {
                let s = Symbol::from_name(name)
                    .filter(|s| !s.is_oov())
                    .ok_or_else(|| bad(format!("unknown symbol {name:?}")))?;
                let set: Vec<Symbol> = value
                    .split(',')
                    .map(|n| Symbol::from_name(n).ok_or_else(|| bad(format!("unknown symbol {n:?}"))))
                    .collect::<Result<_>>()?;
                if set.len() != NUM_DISTRACTORS {
                    return Err(bad(format!("{name} has {} distractors", set.len())));
                }
                distractors[s.index()].copy_from_slice(&set);
                seen[s.index()] = true;
            } else {
                let slot = keys.iter().position(|k| *k == key).ok_or_else(|| bad(format!("unknown key {key:?}")))?;
                scalars[slot] = Some(value.parse::<f64>().map_err(|e| bad(format!("{key}: {e}")))?);
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(bad(format!("no distractors for {}", Symbol::from_index(missing).unwrap())));
        }
        let get = |i: usize| scalars[i].ok_or_else(|| bad(format!("missing {}", keys[i])));
        ConfusionModel::new(distractors, get(0)?, get(1)?, get(2)?, get(3)?, get(4)?)
    }
}

/// How logits become a network input column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VariantSpec {
    /// One-hot of the argmax.
    Hardmax,
    /// `softmax(logits / temperature)`.
    Softmax,
    /// Per draw, hardmax with probability `p_hard`, softmax otherwise.
    MixHardSoft { p_hard: f64 },
    /// `softmax(alpha · logits)` with alpha uniform in `[lo, hi]`, redrawn per letter.
    AlphaScaled { lo: f64, hi: f64 },
    /// `softmax(logits + e)` with `e ~ N(0, variance)` per logit.
    NoiseAdded { variance: f64 },
}

impl VariantSpec {
    pub const MIX: VariantSpec = VariantSpec::MixHardSoft { p_hard: 0.5 };
    pub const ALPHA: VariantSpec = VariantSpec::AlphaScaled { lo: 0.0, hi: 1000.0 };
    pub const NOISE: VariantSpec = VariantSpec::NoiseAdded { variance: 0.1 };

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            VariantSpec::Hardmax | VariantSpec::Softmax => true,
            VariantSpec::MixHardSoft { p_hard } => (0.0..=1.0).contains(&p_hard),
            VariantSpec::AlphaScaled { lo, hi } => 0.0 <= lo && lo <= hi && hi <= 1000.0,
            VariantSpec::NoiseAdded { variance } => variance > 0.0 && variance.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid variant {self:?}")))
        }
    }

    /// Short name: `hard`, `soft`, `mix`, `alpha`, `noise`.
    pub fn name(&self) -> &'static str {
        match self {
            VariantSpec::Hardmax => "hard",
            VariantSpec::Softmax => "soft",
            VariantSpec::MixHardSoft { .. } => "mix",
            VariantSpec::AlphaScaled { .. } => "alpha",
            VariantSpec::NoiseAdded { .. } => "noise",
        }
    }
}

/// One-hot of the argmax logit, with the OOV entry appended.
pub fn hardmax(logits: &LogitVector) -> Distribution {
    let mut out = [0.0; NUM_CLASSES];
    out[argmax(logits)] = 1.0;
    out
}

/// `softmax(scale · logits)` with the OOV entry appended as 0.
pub fn scaled_softmax(logits: &LogitVector, scale: f64) -> Distribution {
    let mut out = [0.0; NUM_CLASSES];
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = (scale * (l - max)).exp();
        sum += *o;
    }
    for o in &mut out[..NUM_GESTURES] {
        *o /= sum;
    }
    out
}

/// Applies `variant` to one logit vector.
pub fn to_distribution<R: Rng + ?Sized>(
    logits: &LogitVector,
    variant: &VariantSpec,
    temperature: f64,
    rng: &mut R,
) -> Distribution {
    match *variant {
        VariantSpec::Hardmax => hardmax(logits),
        VariantSpec::Softmax => scaled_softmax(logits, 1.0 / temperature),
        VariantSpec::MixHardSoft { p_hard } => {
            if rng.random_bool(p_hard) {
                hardmax(logits)
            } else {
                scaled_softmax(logits, 1.0 / temperature)
            }
        }
        VariantSpec::AlphaScaled { lo, hi } => {
            let alpha = if hi > lo { rng.random_range(lo..=hi) } else { lo };
            scaled_softmax(logits, alpha)
        }
        VariantSpec::NoiseAdded { variance } => {
            let normal = Normal::new(0.0, variance.sqrt()).expect("positive variance");
            let mut noisy = *logits;
            for l in &mut noisy {
                *l += normal.sample(rng);
            }
            scaled_softmax(&noisy, 1.0)
        }
    }
}

/// Number of classes ranked ahead of `truth`; equal scores at a lower index rank ahead.
pub fn truth_rank(scores: &[f64], truth: usize) -> usize {
    let t = scores[truth];
    scores
        .iter()
        .enumerate()
        .filter(|&(j, &v)| j != truth && (v > t || (v == t && j < truth)))
        .count()
}

/// Fraction of `n` samples (truth uniform over the gestures) whose truth is
/// among the `k` largest logits.
pub fn empirical_topk<R: Rng + ?Sized>(model: &ConfusionModel, k: usize, n: usize, rng: &mut R) -> f64 {
    assert!((1..=NUM_GESTURES).contains(&k) && n >= 1, "need 1 <= k <= 35 and n >= 1");
    let mut hits = 0usize;
    for _ in 0..n {
        let truth = Symbol::from_index(rng.random_range(0..NUM_GESTURES)).unwrap();
        let logits = model.sample_logits(truth, rng).unwrap();
        if truth_rank(&logits, truth.index()) < k {
            hits += 1;
        }
    }
    hits as f64 / n as f64
}

/// Search ranges and fixed levels for [`calibrate_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSettings {
    pub mu_true: f64,
    pub mu_other: f64,
    pub temperature: f64,
    pub sigma_bounds: (f64, f64),
    pub iterations: usize,
    pub top1_tolerance: f64,
    pub top5_tolerance: f64,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        CalibrationSettings {
            mu_true: 6.0,
            mu_other: 0.0,
            temperature: 1.0,
            sigma_bounds: (1e-3, 20.0),
            iterations: 30,
            top1_tolerance: 0.01,
            top5_tolerance: 0.005,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub model: ConfusionModel,
    /// Monte-Carlo estimates on the calibration sample.
    pub top1: f64,
    pub top5: f64,
}

/// Common random numbers: the same truths and noise are reused for every
/// parameter setting, which keeps the estimates monotone in the parameters.
struct MonteCarlo {
    truths: Vec<usize>,
    noise: Vec<f64>,
    is_distractor: [[bool; NUM_GESTURES]; NUM_GESTURES],
}

impl MonteCarlo {
    fn new<R: Rng + ?Sized>(n: usize, distractors: &[[Symbol; NUM_DISTRACTORS]; NUM_GESTURES], rng: &mut R) -> Self {
        let truths = (0..n).map(|_| rng.random_range(0..NUM_GESTURES)).collect();
        let noise = (0..n * NUM_GESTURES).map(|_| StandardNormal.sample(rng)).collect();
        let mut is_distractor = [[false; NUM_GESTURES]; NUM_GESTURES];
        for (t, set) in distractors.iter().enumerate() {
            for d in set {
                is_distractor[t][d.index()] = true;
            }
        }
        MonteCarlo {
            truths,
            noise,
            is_distractor,
        }
    }

    /// (top-1, top-5) at the given levels.
    fn accuracy(&self, mu_true: f64, mu_distractor: f64, mu_other: f64, sigma: f64) -> (f64, f64) {
        let (mut top1, mut top5) = (0usize, 0usize);
        for (i, &t) in self.truths.iter().enumerate() {
            let g = &self.noise[i * NUM_GESTURES..(i + 1) * NUM_GESTURES];
            let lt = mu_true + sigma * g[t];
            let mut ahead = 0;
            for (j, &gj) in g.iter().enumerate() {
                if j == t {
                    continue;
                }
                let mu = if self.is_distractor[t][j] { mu_distractor } else { mu_other };
                let l = mu + sigma * gj;
                if l > lt || (l == lt && j < t) {
                    ahead += 1;
                    if ahead >= 5 {
                        break;
                    }
                }
            }
            top1 += usize::from(ahead == 0);
            top5 += usize::from(ahead < 5);
        }
        let n = self.truths.len() as f64;
        (top1 as f64 / n, top5 as f64 / n)
    }
}

/// Calibrates with [`CalibrationSettings::default`].
pub fn calibrate<R: Rng + ?Sized>(target_top1: f64, target_top5: f64, n_mc: usize, rng: &mut R) -> Result<Calibration> {
    calibrate_with(target_top1, target_top5, n_mc, &CalibrationSettings::default(), rng)
}

/// Finds `sigma` and `mu_distractor` by nested bisection so that Monte-Carlo
/// top-1 and top-5 hit the targets: the inner search moves the distractor
/// level to fix top-1 at a given noise level, the outer search moves the noise
/// level to fix top-5.
pub fn calibrate_with<R: Rng + ?Sized>(
    target_top1: f64,
    target_top5: f64,
    n_mc: usize,
    settings: &CalibrationSettings,
    rng: &mut R,
) -> Result<Calibration> {
    if !(0.0 < target_top1 && target_top1 < target_top5 && target_top5 <= 1.0) {
        return Err(Error::InvalidTargets {
            top1: target_top1,
            top5: target_top5,
        });
    }
    if n_mc == 0 {
        return Err(Error::InvalidParameter("n_mc must be positive".into()));
    }
    let distractors = default_distractors();
    let mc = MonteCarlo::new(n_mc, &distractors, rng);
    let (mu_true, mu_other) = (settings.mu_true, settings.mu_other);
    let span = mu_true - mu_other;
    // distractor level stays strictly between the other two
    let md_lo = mu_other + 1e-6 * span;
    let md_hi = mu_true - 1e-6 * span;

    // largest distractor level whose top-1 still meets the target
    let solve_distractor = |sigma: f64| -> f64 {
        if mc.accuracy(mu_true, md_lo, mu_other, sigma).0 < target_top1 {
            return md_lo;
        }
        let (mut lo, mut hi) = (md_lo, md_hi);
        for _ in 0..settings.iterations {
            let mid = 0.5 * (lo + hi);
            if mc.accuracy(mu_true, mid, mu_other, sigma).0 >= target_top1 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let top5_at = |sigma: f64| -> (f64, f64, f64) {
        let md = solve_distractor(sigma);
        let (t1, t5) = mc.accuracy(mu_true, md, mu_other, sigma);
        (md, t1, t5)
    };

    let (s_lo, s_hi) = settings.sigma_bounds;
    let (mut lo, mut hi) = (s_lo, s_hi);
    let mut best = top5_at(lo);
    if best.2 >= target_top5 {
        let at_hi = top5_at(hi);
        if at_hi.2 >= target_top5 {
            lo = hi;
            best = at_hi;
        } else {
            // geometric bisection: sigma spans several decades
            for _ in 0..settings.iterations {
                let mid = (lo * hi).sqrt();
                let r = top5_at(mid);
                if r.2 >= target_top5 {
                    lo = mid;
                    best = r;
                } else {
                    hi = mid;
                }
            }
        }
    }
    let (md, top1, top5) = best;
    if (top1 - target_top1).abs() > settings.top1_tolerance || (top5 - target_top5).abs() > settings.top5_tolerance {
        return Err(Error::CalibrationFailed { top1, top5 });
    }
    let model = ConfusionModel::new(distractors, mu_true, md, mu_other, lo, settings.temperature)?;
    Ok(Calibration { model, top1, top5 })
}
