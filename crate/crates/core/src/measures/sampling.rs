use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

use crate::dynamics::noise::{counter_rng, ATOM_STREAM};
use crate::error::{ensure_dim, Error, Result};
use crate::space_ops::{SpaceKind, SpaceSpec};
use crate::Vector;

/// Initial laws from which particle atoms are drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialLaw {
    PointMass(Vector),
    /// Gaussian level plus a smooth random profile with `modes` modes.
    ///
    /// Delay spaces: `x^0 ~ N(head_mean, head_std^2)` and the history equals
    /// `x^0` plus the random profile, pinned to `x^0` at `xi = 0`. Vintage
    /// spaces: the Gaussian level scales a `sin(pi s)` bump. Euclidean
    /// spaces: every coordinate is an independent Gaussian.
    GaussianProfile {
        head_mean: f64,
        head_std: f64,
        amplitude: f64,
        modes: usize,
    },
    /// Fixed profiles with rational-like weights. Component `k` of atom `i`
    /// is chosen by comparing the base-2 radical inverse of `i` with the
    /// cumulative weights, so proportions are stratified and the atoms for
    /// `n` are a prefix of the atoms for any larger `n`. `jitter` scales a
    /// smooth random perturbation added to each atom.
    Mixture {
        profiles: Vec<Vector>,
        weights: Vec<f64>,
        jitter: f64,
    },
}

impl InitialLaw {
    /// Short description for reports.
    pub fn label(&self) -> String {
        match self {
            InitialLaw::PointMass(x) => format!("point mass (dim {})", x.len()),
            InitialLaw::GaussianProfile {
                head_mean,
                head_std,
                amplitude,
                modes,
            } => format!("gaussian profile (mean {head_mean}, std {head_std}, amplitude {amplitude}, modes {modes})"),
            InitialLaw::Mixture { profiles, weights, jitter } => format!(
                "mixture of {} profiles (weights {weights:?}, jitter {jitter})",
                profiles.len()
            ),
        }
    }
}

/// Base-2 radical inverse of `i` in `[0, 1)`.
pub fn van_der_corput(mut i: u64) -> f64 {
    let mut inv = 0.5;
    let mut acc = 0.0;
    while i > 0 {
        if i & 1 == 1 {
            acc += inv;
        }
        inv *= 0.5;
        i >>= 1;
    }
    acc
}

fn normalized_positions(space: &SpaceSpec) -> Vec<f64> {
    let m = space.grid_len();
    (0..m).map(|j| j as f64 / (m - 1).max(1) as f64).collect()
}

/// Smooth zero-mean random perturbation, compatible with the boundary
/// condition of the space.
fn smooth_profile<R: Rng>(rng: &mut R, space: &SpaceSpec, amplitude: f64, modes: usize) -> Vector {
    let mut v = Vector::zeros(space.dim);
    let coeffs: Vec<f64> = (0..modes).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let s = normalized_positions(space);
    let h = space.head_count;
    for (j, sj) in s.iter().enumerate() {
        let mut acc = 0.0;
        for (k, z) in coeffs.iter().enumerate() {
            let kk = (k + 1) as f64;
            let basis = match space.kind {
                SpaceKind::Delay => (kk * PI * sj).cos() - (kk * PI).cos(),
                _ => (kk * PI * sj).sin(),
            };
            acc += z * basis / kk;
        }
        v[h + j] = amplitude * acc;
    }
    v
}

fn sample_one(law: &InitialLaw, space: &SpaceSpec, index: u64, seed: u64) -> Vector {
    let mut rng = counter_rng(&[ATOM_STREAM, seed, index]);
    match law {
        InitialLaw::PointMass(x) => x.clone(),
        InitialLaw::GaussianProfile {
            head_mean,
            head_std,
            amplitude,
            modes,
        } => {
            let level = head_mean + head_std * rng.sample::<f64, _>(StandardNormal);
            match space.kind {
                SpaceKind::Delay => {
                    let mut v = smooth_profile(&mut rng, space, *amplitude, *modes);
                    v[0] = level;
                    for j in 0..space.grid_len() {
                        v[1 + j] += level;
                    }
                    v
                }
                SpaceKind::Vintage => {
                    let mut v = smooth_profile(&mut rng, space, *amplitude, *modes);
                    for (j, sj) in normalized_positions(space).iter().enumerate() {
                        v[j] += level * (PI * sj).sin();
                    }
                    v
                }
                SpaceKind::Euclid => Vector::from_fn(space.dim, |_, _| {
                    head_mean + head_std * rng.sample::<f64, _>(StandardNormal)
                }),
            }
        }
        InitialLaw::Mixture {
            profiles,
            weights,
            jitter,
        } => {
            let u = van_der_corput(index);
            let mut cum = 0.0;
            let mut k = profiles.len() - 1;
            for (c, w) in weights.iter().enumerate() {
                cum += w;
                if u < cum {
                    k = c;
                    break;
                }
            }
            let mut v = profiles[k].clone();
            if *jitter != 0.0 {
                let z0: f64 = rng.sample(StandardNormal);
                let p = smooth_profile(&mut rng, space, *jitter, 4);
                v += p;
                for h in 0..space.head_count {
                    v[h] += jitter * z0;
                }
                if space.kind == SpaceKind::Delay {
                    let last = space.grid_len();
                    v[last] += jitter * z0;
                }
            }
            v
        }
    }
}

fn validate(law: &InitialLaw, space: &SpaceSpec) -> Result<()> {
    match law {
        InitialLaw::PointMass(x) => ensure_dim(space.dim, x.len(), "point mass"),
        InitialLaw::GaussianProfile { head_std, amplitude, .. } => {
            if !(*head_std >= 0.0 && *amplitude >= 0.0) {
                return Err(Error::InvalidParameter("gaussian profile scales must be >= 0".into()));
            }
            Ok(())
        }
        InitialLaw::Mixture {
            profiles,
            weights,
            jitter,
        } => {
            if profiles.is_empty() || profiles.len() != weights.len() {
                return Err(Error::InvalidParameter(
                    "mixture needs one weight per profile and at least one profile".into(),
                ));
            }
            for p in profiles {
                ensure_dim(space.dim, p.len(), "mixture profile")?;
            }
            if weights.iter().any(|w| !(*w > 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter("mixture weights must be positive and sum to 1".into()));
            }
            if !(*jitter >= 0.0) {
                return Err(Error::InvalidParameter("mixture jitter must be >= 0".into()));
            }
            Ok(())
        }
    }
}

/// Draw `n` atoms. Atom `i` depends only on `(law, i, seed)`, so samples for
/// increasing `n` are nested.
pub fn sample_atoms(law: &InitialLaw, space: &SpaceSpec, n: usize, seed: u64) -> Result<Vec<Vector>> {
    validate(law, space)?;
    Ok((0..n as u64).map(|i| sample_one(law, space, i, seed)).collect())
}
