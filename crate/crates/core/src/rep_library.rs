//! Goal representations: feature transforms, the four baselines and the
//! randomized template library.
//!
//! A [`RepresentationSpec`] is a pure description; [`RepresentationSpec::encode`]
//! maps a [`FeatureVector`] to a [`RepValue`], a short tuple of small
//! integers. Encodings never look at anything but the features of the pair.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cube_env::{CubeEnv, GoalIndex, StateIndex};
use crate::error::{Error, Result};
use crate::features::{features, FeatureVector};
use crate::oracle::OracleTables;
use crate::rng::{stream, Domain};

/// Multiplier of the polynomial rolling hash used by hashed templates.
pub const HASH_MULTIPLIER: u64 = 1_000_003;
/// Initial accumulator of the rolling hash.
pub const HASH_OFFSET: u64 = 17;
/// Inclusive range of sampled hash moduli.
pub const HASH_MODULUS_RANGE: (u32, u32) = (3, 24);
/// Sampled moduli for `proj_mod`.
pub const PROJ_MODULI: [i32; 4] = [2, 3, 4, 5];
/// Inclusive coefficient range for `proj_mod`.
pub const PROJ_COEFF_RANGE: (i32, i32) = (-2, 2);
/// Probability that an optional target-identity field is included.
pub const TARGET_INCLUDE_PROB: f64 = 0.5;
/// Probability that a directional field enters a random subset.
pub const FIELD_INCLUDE_PROB: f64 = 0.5;

/// Longest encoding any spec produces.
pub const MAX_REP_LEN: usize = 10;

/// Scalar feature transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Transform {
    Raw,
    Sign,
    Abs,
    Clip(u8),
    Parity,
    SgnBucket(u8),
    DistBucket(u8),
    DistParity,
    ValueRaw,
    ValueBucket3,
}

/// Transforms applicable to `dx1, dy1, dx2, dy2`.
pub const DIRECTIONAL_TRANSFORMS: [Transform; 9] = [
    Transform::Raw,
    Transform::Sign,
    Transform::Abs,
    Transform::Clip(1),
    Transform::Clip(2),
    Transform::Clip(3),
    Transform::Parity,
    Transform::SgnBucket(2),
    Transform::SgnBucket(3),
];

/// Transforms applicable to `d_at, d_bg`.
pub const DISTANCE_TRANSFORMS: [Transform; 5] = [
    Transform::Raw,
    Transform::DistBucket(2),
    Transform::DistBucket(3),
    Transform::DistBucket(4),
    Transform::DistParity,
];

/// Transforms applicable to `V*`.
pub const VALUE_TRANSFORMS: [Transform; 2] = [Transform::ValueRaw, Transform::ValueBucket3];

impl Transform {
    pub fn apply(self, x: i32) -> i32 {
        match self {
            Transform::Raw | Transform::ValueRaw => x,
            Transform::Sign => x.signum(),
            Transform::Abs => x.abs(),
            Transform::Clip(k) => x.clamp(-(k as i32), k as i32),
            Transform::Parity => x.abs() % 2,
            Transform::SgnBucket(k) => x.signum() * x.abs().min(k as i32),
            Transform::DistBucket(k) => x.min(k as i32),
            Transform::DistParity => x.rem_euclid(2),
            // Cost -V* bucketed into {0, 1, 2, 3, >=4}.
            Transform::ValueBucket3 => (-x).min(4),
        }
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transform::Raw => write!(f, "raw"),
            Transform::Sign => write!(f, "sign"),
            Transform::Abs => write!(f, "abs"),
            Transform::Clip(k) => write!(f, "clip_{k}"),
            Transform::Parity => write!(f, "parity"),
            Transform::SgnBucket(k) => write!(f, "sgn_bucket_{k}"),
            Transform::DistBucket(k) => write!(f, "bucket_{k}"),
            Transform::DistParity => write!(f, "dist_parity"),
            Transform::ValueRaw => write!(f, "value_raw"),
            Transform::ValueBucket3 => write!(f, "value_bucket_3"),
        }
    }
}

impl FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown transform '{s}'"));
        let param = |prefix: &str, allowed: &[u8]| -> Result<u8> {
            let k: u8 = s[prefix.len()..].parse().map_err(|_| bad())?;
            if allowed.contains(&k) {
                Ok(k)
            } else {
                Err(bad())
            }
        };
        Ok(match s {
            "raw" => Transform::Raw,
            "sign" => Transform::Sign,
            "abs" => Transform::Abs,
            "parity" => Transform::Parity,
            "dist_parity" => Transform::DistParity,
            "value_raw" => Transform::ValueRaw,
            "value_bucket_3" => Transform::ValueBucket3,
            _ if s.starts_with("clip_") => Transform::Clip(param("clip_", &[1, 2, 3])?),
            _ if s.starts_with("sgn_bucket_") => Transform::SgnBucket(param("sgn_bucket_", &[2, 3])?),
            _ if s.starts_with("bucket_") => Transform::DistBucket(param("bucket_", &[2, 3, 4])?),
            _ => return Err(bad()),
        })
    }
}

impl Serialize for Transform {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Transform {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Encoded representation value `Z`: a short tuple of integers.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RepValue {
    len: u8,
    vals: [i32; MAX_REP_LEN],
}

impl RepValue {
    pub fn new() -> Self {
        Self { len: 0, vals: [0; MAX_REP_LEN] }
    }

    pub fn from_slice(xs: &[i32]) -> Self {
        let mut z = Self::new();
        for &x in xs {
            z.push(x);
        }
        z
    }

    pub fn push(&mut self, x: i32) {
        assert!((self.len as usize) < MAX_REP_LEN, "representation tuple too long");
        self.vals[self.len as usize] = x;
        self.len += 1;
    }

    pub fn as_slice(&self) -> &[i32] {
        &self.vals[..self.len as usize]
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

impl Default for RepValue {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for RepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("RepValue").field(&self.as_slice()).finish()
    }
}

/// Assigns dense ids to representation values seen within one evaluation.
#[derive(Debug, Default)]
pub struct Interner {
    ids: HashMap<RepValue, u32>,
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, z: RepValue) -> u32 {
        let next = self.ids.len() as u32;
        *self.ids.entry(z).or_insert(next)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Polynomial rolling hash over a tuple.
pub fn poly_hash(vals: &[i32]) -> u64 {
    vals.iter().fold(HASH_OFFSET, |acc, &v| {
        acc.wrapping_mul(HASH_MULTIPLIER).wrapping_add(v as i64 as u64)
    })
}

fn hash_mod(vals: &[i32], modulus: u32) -> i32 {
    (poly_hash(vals) % modulus as u64) as i32
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Full,
    Signs,
    ValueOnly,
    Distances,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] =
        [BaselineKind::Full, BaselineKind::Signs, BaselineKind::ValueOnly, BaselineKind::Distances];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Full => "full",
            BaselineKind::Signs => "signs",
            BaselineKind::ValueOnly => "value_only",
            BaselineKind::Distances => "distances",
        }
    }
}

/// Feature subset used by one gripper phase of `phase_split`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhaseView {
    pub target: bool,
    pub dir: [Option<Transform>; 4],
    pub at: Option<Transform>,
    pub bg: Option<Transform>,
}

/// Spec body. Serialized as `{"template": name, "params": {...}}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "template", content = "params", rename_all = "snake_case")]
pub enum RepKind {
    Full,
    Signs,
    ValueOnly,
    Distances,
    /// `h`, optional `t`, transformed value.
    ValuePlus { target: bool, value: Transform },
    /// `h`, optional `t`, transformed `d_at` and `d_bg`.
    DistCoarse { target: bool, at: Transform, bg: Transform },
    /// `h`, optional `t`, signs of a nonempty subset of the directions.
    DirSubset { target: bool, fields: [bool; 4] },
    /// `h`, `t`, all four directions with independent transforms.
    DirCoarse { dir: [Transform; 4] },
    /// `h`, optional `t`, a nonempty direction subset plus both distances.
    MixedDirDist { target: bool, dir: [Option<Transform>; 4], at: Transform, bg: Transform },
    /// Different feature views with and without a held cube.
    PhaseSplit { free: PhaseView, holding: PhaseView },
    /// `h`, optional `t`, integer projections of the directions modulo `modulus`.
    ProjMod { target: bool, coeffs: Vec<[i32; 4]>, modulus: i32 },
    /// `h`, optional `t`, hashes of `(dx1, dy1)` and `(dx2, dy2)`.
    TwoHash { target: bool, m1: u32, m2: u32 },
    /// Hash of `(h, t, dx1, dy1, dx2, dy2)`.
    HashedActor { modulus: u32 },
    /// Hash of `(h, d_at, d_bg)`.
    HashedDist { modulus: u32 },
    /// `h` and four transformed directions, without target identity.
    DropId { dir: [Transform; 4] },
}

/// Template families of the random library.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TemplateName {
    ValuePlus,
    DistCoarse,
    DirSubset,
    DirCoarse,
    MixedDirDist,
    PhaseSplit,
    ProjMod,
    TwoHash,
    HashedActor,
    HashedDist,
    DropId,
}

impl TemplateName {
    pub const ALL: [TemplateName; 11] = [
        TemplateName::ValuePlus,
        TemplateName::DistCoarse,
        TemplateName::DirSubset,
        TemplateName::DirCoarse,
        TemplateName::MixedDirDist,
        TemplateName::PhaseSplit,
        TemplateName::ProjMod,
        TemplateName::TwoHash,
        TemplateName::HashedActor,
        TemplateName::HashedDist,
        TemplateName::DropId,
    ];

    /// Relative sampling weight. The four families that pin down the corners
    /// of the sufficiency plane get double weight.
    pub fn weight(self) -> u32 {
        match self {
            TemplateName::ValuePlus
            | TemplateName::DistCoarse
            | TemplateName::DirSubset
            | TemplateName::DirCoarse => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TemplateName::ValuePlus => "value_plus",
            TemplateName::DistCoarse => "dist_coarse",
            TemplateName::DirSubset => "dir_subset",
            TemplateName::DirCoarse => "dir_coarse",
            TemplateName::MixedDirDist => "mixed_dir_dist",
            TemplateName::PhaseSplit => "phase_split",
            TemplateName::ProjMod => "proj_mod",
            TemplateName::TwoHash => "two_hash",
            TemplateName::HashedActor => "hashed_actor",
            TemplateName::HashedDist => "hashed_dist",
            TemplateName::DropId => "drop_id",
        }
    }
}

/// Deterministic description of a goal encoder.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RepresentationSpec {
    pub id: String,
    #[serde(flatten)]
    pub kind: RepKind,
    /// Library seed the spec was drawn under; `None` for baselines.
    pub seed: Option<u64>,
}

/// One of the four fixed baselines.
pub fn baseline(kind: BaselineKind) -> RepresentationSpec {
    let body = match kind {
        BaselineKind::Full => RepKind::Full,
        BaselineKind::Signs => RepKind::Signs,
        BaselineKind::ValueOnly => RepKind::ValueOnly,
        BaselineKind::Distances => RepKind::Distances,
    };
    RepresentationSpec { id: kind.name().to_string(), kind: body, seed: None }
}

pub fn baselines() -> Vec<RepresentationSpec> {
    BaselineKind::ALL.into_iter().map(baseline).collect()
}

fn push_dir(z: &mut RepValue, f: &FeatureVector, dir: &[Option<Transform>; 4]) {
    for (x, tr) in f.directions().into_iter().zip(dir) {
        if let Some(tr) = tr {
            z.push(tr.apply(x));
        }
    }
}

impl RepKind {
    /// Template or baseline name as it appears in files.
    pub fn template_name(&self) -> &'static str {
        match self {
            RepKind::Full => "full",
            RepKind::Signs => "signs",
            RepKind::ValueOnly => "value_only",
            RepKind::Distances => "distances",
            RepKind::ValuePlus { .. } => "value_plus",
            RepKind::DistCoarse { .. } => "dist_coarse",
            RepKind::DirSubset { .. } => "dir_subset",
            RepKind::DirCoarse { .. } => "dir_coarse",
            RepKind::MixedDirDist { .. } => "mixed_dir_dist",
            RepKind::PhaseSplit { .. } => "phase_split",
            RepKind::ProjMod { .. } => "proj_mod",
            RepKind::TwoHash { .. } => "two_hash",
            RepKind::HashedActor { .. } => "hashed_actor",
            RepKind::HashedDist { .. } => "hashed_dist",
            RepKind::DropId { .. } => "drop_id",
        }
    }

    pub fn encode(&self, f: &FeatureVector) -> RepValue {
        let mut z = RepValue::new();
        let h = f.h.code();
        let t = f.target_code();
        let maybe_t = |z: &mut RepValue, on: bool| {
            if on {
                z.push(t);
            }
        };
        match self {
            RepKind::Full => {
                z = RepValue::from_slice(&[h, t, f.dx1, f.dy1, f.dx2, f.dy2]);
            }
            RepKind::Signs => {
                z = RepValue::from_slice(&[
                    h,
                    t,
                    f.dx1.signum(),
                    f.dy1.signum(),
                    f.dx2.signum(),
                    f.dy2.signum(),
                ]);
            }
            RepKind::ValueOnly => z.push(f.v),
            RepKind::Distances => z = RepValue::from_slice(&[h, f.d_at, f.d_bg]),
            RepKind::ValuePlus { target, value } => {
                z.push(h);
                maybe_t(&mut z, *target);
                z.push(value.apply(f.v));
            }
            RepKind::DistCoarse { target, at, bg } => {
                z.push(h);
                maybe_t(&mut z, *target);
                z.push(at.apply(f.d_at));
                z.push(bg.apply(f.d_bg));
            }
            RepKind::DirSubset { target, fields } => {
                z.push(h);
                maybe_t(&mut z, *target);
                for (x, on) in f.directions().into_iter().zip(fields) {
                    if *on {
                        z.push(x.signum());
                    }
                }
            }
            RepKind::DirCoarse { dir } => {
                z.push(h);
                z.push(t);
                for (x, tr) in f.directions().into_iter().zip(dir) {
                    z.push(tr.apply(x));
                }
            }
            RepKind::MixedDirDist { target, dir, at, bg } => {
                z.push(h);
                maybe_t(&mut z, *target);
                push_dir(&mut z, f, dir);
                z.push(at.apply(f.d_at));
                z.push(bg.apply(f.d_bg));
            }
            RepKind::PhaseSplit { free, holding } => {
                let view = if f.h == crate::cube_env::Gripper::None { free } else { holding };
                z.push(h);
                maybe_t(&mut z, view.target);
                push_dir(&mut z, f, &view.dir);
                if let Some(tr) = view.at {
                    z.push(tr.apply(f.d_at));
                }
                if let Some(tr) = view.bg {
                    z.push(tr.apply(f.d_bg));
                }
            }
            RepKind::ProjMod { target, coeffs, modulus } => {
                z.push(h);
                maybe_t(&mut z, *target);
                let d = f.directions();
                for c in coeffs {
                    let dot: i32 = c.iter().zip(d).map(|(a, b)| a * b).sum();
                    z.push(dot.rem_euclid(*modulus));
                }
            }
            RepKind::TwoHash { target, m1, m2 } => {
                z.push(h);
                maybe_t(&mut z, *target);
                z.push(hash_mod(&[f.dx1, f.dy1], *m1));
                z.push(hash_mod(&[f.dx2, f.dy2], *m2));
            }
            RepKind::HashedActor { modulus } => {
                z.push(hash_mod(&[h, t, f.dx1, f.dy1, f.dx2, f.dy2], *modulus));
            }
            RepKind::HashedDist { modulus } => {
                z.push(hash_mod(&[h, f.d_at, f.d_bg], *modulus));
            }
            RepKind::DropId { dir } => {
                z.push(h);
                for (x, tr) in f.directions().into_iter().zip(dir) {
                    z.push(tr.apply(x));
                }
            }
        }
        z
    }

    /// Compact parameter tag used inside spec ids.
    fn param_tag(&self) -> String {
        let tb = |b: bool| if b { "t" } else { "nt" };
        let opt = |o: &Option<Transform>| o.map_or("-".to_string(), |t| t.to_string());
        let dirs = |d: &[Option<Transform>; 4]| d.iter().map(opt).collect::<Vec<_>>().join(",");
        match self {
            RepKind::Full | RepKind::Signs | RepKind::ValueOnly | RepKind::Distances => String::new(),
            RepKind::ValuePlus { target, value } => format!("{}.{value}", tb(*target)),
            RepKind::DistCoarse { target, at, bg } => format!("{}.{at}.{bg}", tb(*target)),
            RepKind::DirSubset { target, fields } => {
                let bits: String = fields.iter().map(|&b| if b { '1' } else { '0' }).collect();
                format!("{}.{bits}", tb(*target))
            }
            RepKind::DirCoarse { dir } | RepKind::DropId { dir } => {
                dir.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",")
            }
            RepKind::MixedDirDist { target, dir, at, bg } => {
                format!("{}.{}.{at}.{bg}", tb(*target), dirs(dir))
            }
            RepKind::PhaseSplit { free, holding } => {
                let view = |v: &PhaseView| {
                    format!("{}.{}.{}.{}", tb(v.target), dirs(&v.dir), opt(&v.at), opt(&v.bg))
                };
                format!("{}|{}", view(free), view(holding))
            }
            RepKind::ProjMod { target, coeffs, modulus } => {
                let c: Vec<String> = coeffs
                    .iter()
                    .map(|c| c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
                    .collect();
                format!("{}.m{modulus}.[{}]", tb(*target), c.join(";"))
            }
            RepKind::TwoHash { target, m1, m2 } => format!("{}.m{m1}.m{m2}", tb(*target)),
            RepKind::HashedActor { modulus } | RepKind::HashedDist { modulus } => format!("m{modulus}"),
        }
    }
}

impl RepresentationSpec {
    pub fn template_name(&self) -> &'static str {
        self.kind.template_name()
    }

    pub fn encode(&self, f: &FeatureVector) -> RepValue {
        self.kind.encode(f)
    }
}

/// Encodes `(s, g)` under `spec`.
pub fn encode(
    spec: &RepresentationSpec,
    env: &CubeEnv,
    oracle: &OracleTables,
    s: StateIndex,
    g: GoalIndex,
) -> Result<RepValue> {
    Ok(spec.encode(&features(env, oracle, s, g)?))
}

fn sample_target<R: Rng>(rng: &mut R) -> bool {
    rng.random_bool(TARGET_INCLUDE_PROB)
}

fn pick<R: Rng, T: Copy>(rng: &mut R, xs: &[T]) -> T {
    xs[rng.random_range(0..xs.len())]
}

fn sample_dir_subset<R: Rng>(rng: &mut R, allow_empty: bool) -> [Option<Transform>; 4] {
    loop {
        let dir: [Option<Transform>; 4] = std::array::from_fn(|_| {
            rng.random_bool(FIELD_INCLUDE_PROB).then(|| pick(rng, &DIRECTIONAL_TRANSFORMS))
        });
        if allow_empty || dir.iter().any(Option::is_some) {
            return dir;
        }
    }
}

fn sample_phase_view<R: Rng>(rng: &mut R) -> PhaseView {
    PhaseView {
        target: sample_target(rng),
        dir: sample_dir_subset(rng, true),
        at: rng.random_bool(FIELD_INCLUDE_PROB).then(|| pick(rng, &DISTANCE_TRANSFORMS)),
        bg: rng.random_bool(FIELD_INCLUDE_PROB).then(|| pick(rng, &DISTANCE_TRANSFORMS)),
    }
}

fn sample_hash_modulus<R: Rng>(rng: &mut R) -> u32 {
    rng.random_range(HASH_MODULUS_RANGE.0..=HASH_MODULUS_RANGE.1)
}

fn sample_template<R: Rng>(rng: &mut R) -> TemplateName {
    let total: u32 = TemplateName::ALL.iter().map(|t| t.weight()).sum();
    let mut r = rng.random_range(0..total);
    for t in TemplateName::ALL {
        if r < t.weight() {
            return t;
        }
        r -= t.weight();
    }
    unreachable!("weights exhausted")
}

fn sample_kind<R: Rng>(rng: &mut R, template: TemplateName) -> RepKind {
    match template {
        TemplateName::ValuePlus => {
            RepKind::ValuePlus { target: sample_target(rng), value: pick(rng, &VALUE_TRANSFORMS) }
        }
        TemplateName::DistCoarse => RepKind::DistCoarse {
            target: sample_target(rng),
            at: pick(rng, &DISTANCE_TRANSFORMS),
            bg: pick(rng, &DISTANCE_TRANSFORMS),
        },
        TemplateName::DirSubset => {
            let target = sample_target(rng);
            let fields = loop {
                let f: [bool; 4] = std::array::from_fn(|_| rng.random_bool(FIELD_INCLUDE_PROB));
                if f.iter().any(|&b| b) {
                    break f;
                }
            };
            RepKind::DirSubset { target, fields }
        }
        TemplateName::DirCoarse => {
            RepKind::DirCoarse { dir: std::array::from_fn(|_| pick(rng, &DIRECTIONAL_TRANSFORMS)) }
        }
        TemplateName::MixedDirDist => RepKind::MixedDirDist {
            target: sample_target(rng),
            dir: sample_dir_subset(rng, false),
            at: pick(rng, &DISTANCE_TRANSFORMS),
            bg: pick(rng, &DISTANCE_TRANSFORMS),
        },
        TemplateName::PhaseSplit => {
            RepKind::PhaseSplit { free: sample_phase_view(rng), holding: sample_phase_view(rng) }
        }
        TemplateName::ProjMod => {
            let target = sample_target(rng);
            let k = rng.random_range(1..=3);
            let coeffs = (0..k)
                .map(|_| loop {
                    let c: [i32; 4] = std::array::from_fn(|_| {
                        rng.random_range(PROJ_COEFF_RANGE.0..=PROJ_COEFF_RANGE.1)
                    });
                    if c.iter().any(|&x| x != 0) {
                        break c;
                    }
                })
                .collect();
            RepKind::ProjMod { target, coeffs, modulus: pick(rng, &PROJ_MODULI) }
        }
        TemplateName::TwoHash => RepKind::TwoHash {
            target: sample_target(rng),
            m1: sample_hash_modulus(rng),
            m2: sample_hash_modulus(rng),
        },
        TemplateName::HashedActor => RepKind::HashedActor { modulus: sample_hash_modulus(rng) },
        TemplateName::HashedDist => RepKind::HashedDist { modulus: sample_hash_modulus(rng) },
        TemplateName::DropId => {
            RepKind::DropId { dir: std::array::from_fn(|_| pick(rng, &DIRECTIONAL_TRANSFORMS)) }
        }
    }
}

/// Spec `index` of the library drawn under `seed`; independent of every
/// other index.
pub fn sample_spec(seed: u64, index: usize) -> RepresentationSpec {
    let mut rng = stream(seed, Domain::Library, 0, index as u32);
    let template = sample_template(&mut rng);
    let kind = sample_kind(&mut rng, template);
    let id = format!("{index:04}-{}-{}", template.name(), kind.param_tag());
    RepresentationSpec { id, kind, seed: Some(seed) }
}

/// `count` random specs drawn from the eleven templates.
pub fn sample_library(count: usize, seed: u64) -> Result<Vec<RepresentationSpec>> {
    if count == 0 {
        return Err(Error::InvalidArgument("library size must be positive".into()));
    }
    Ok((0..count).map(|i| sample_spec(seed, i)).collect())
}
