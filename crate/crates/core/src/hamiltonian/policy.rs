use std::fmt;
use std::sync::Arc;

use nalgebra::DVectorView;

use crate::error::{ensure_dim, Error, Result};
use crate::{Matrix, Vector};

/// Admissible control set, applied componentwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlCone {
    Nonnegative,
    Full,
    Box { lo: f64, hi: f64 },
}

impl ControlCone {
    pub fn contains(&self, q: f64) -> bool {
        match *self {
            ControlCone::Nonnegative => q >= 0.0,
            ControlCone::Full => q.is_finite(),
            ControlCone::Box { lo, hi } => q >= lo && q <= hi,
        }
    }

    pub fn project(&self, q: f64) -> f64 {
        match *self {
            ControlCone::Nonnegative => q.max(0.0),
            ControlCone::Full => q,
            ControlCone::Box { lo, hi } => q.clamp(lo, hi),
        }
    }

    /// Interval `[lo, hi]` of the cone intersected with `[-radius, radius]`.
    pub fn search_interval(&self, radius: f64) -> (f64, f64) {
        match *self {
            ControlCone::Nonnegative => (0.0, radius),
            ControlCone::Full => (-radius, radius),
            ControlCone::Box { lo, hi } => (lo.max(-radius), hi.min(radius)),
        }
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub(crate) fn check(&self, q: &Vector) -> Result<()> {
        for &v in q.iter() {
            if !self.contains(v) {
                return Err(Error::OutsideCone {
                    value: v,
                    cone: self.to_string(),
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for ControlCone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlCone::Nonnegative => write!(f, "[0, inf)"),
            ControlCone::Full => write!(f, "(-inf, inf)"),
            ControlCone::Box { lo, hi } => write!(f, "[{lo}, {hi}]"),
        }
    }
}

/// What a feedback law sees when it is asked for a control.
pub struct FeedbackInput<'a> {
    pub time: f64,
    pub step: usize,
    pub particle: usize,
    pub n: usize,
    pub state: DVectorView<'a, f64>,
    pub mean: &'a Vector,
}

pub type FeedbackFn = Arc<dyn Fn(&FeedbackInput<'_>) -> Vector + Send + Sync>;

#[derive(Clone)]
pub enum PolicyKind {
    Constant(Vector),
    /// One `control_dim x n` matrix per time step.
    OpenLoop(Vec<Matrix>),
    Feedback(FeedbackFn),
}

/// A control law for the particle system; every emitted control is checked
/// against the cone.
#[derive(Clone)]
pub struct ControlPolicy {
    kind: PolicyKind,
    cone: ControlCone,
    control_dim: usize,
}

impl fmt::Debug for ControlPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            PolicyKind::Constant(q) => format!("Constant({:?})", q.as_slice()),
            PolicyKind::OpenLoop(s) => format!("OpenLoop({} steps)", s.len()),
            PolicyKind::Feedback(_) => "Feedback".to_string(),
        };
        f.debug_struct("ControlPolicy")
            .field("kind", &kind)
            .field("cone", &self.cone)
            .field("control_dim", &self.control_dim)
            .finish()
    }
}

impl ControlPolicy {
    pub fn constant(q: Vector, cone: ControlCone) -> Result<Self> {
        cone.check(&q)?;
        Ok(Self {
            control_dim: q.len(),
            kind: PolicyKind::Constant(q),
            cone,
        })
    }

    /// The zero control, which must lie in the cone.
    pub fn zero(control_dim: usize, cone: ControlCone) -> Result<Self> {
        Self::constant(Vector::zeros(control_dim), cone)
    }

    pub fn open_loop(steps: Vec<Matrix>, cone: ControlCone) -> Result<Self> {
        let first = steps
            .first()
            .ok_or_else(|| Error::InvalidParameter("open-loop policy needs at least one step".into()))?;
        let (qd, n) = first.shape();
        for s in &steps {
            if s.shape() != (qd, n) {
                return Err(Error::InvalidParameter("open-loop steps must share one shape".into()));
            }
            for &v in s.iter() {
                if !cone.contains(v) {
                    return Err(Error::OutsideCone {
                        value: v,
                        cone: cone.to_string(),
                    });
                }
            }
        }
        Ok(Self {
            control_dim: qd,
            kind: PolicyKind::OpenLoop(steps),
            cone,
        })
    }

    pub fn feedback(control_dim: usize, cone: ControlCone, f: FeedbackFn) -> Self {
        Self {
            kind: PolicyKind::Feedback(f),
            cone,
            control_dim,
        }
    }

    pub fn kind(&self) -> &PolicyKind {
        &self.kind
    }

    pub fn cone(&self) -> ControlCone {
        self.cone
    }

    pub fn control_dim(&self) -> usize {
        self.control_dim
    }

    /// Fail early when the policy cannot drive `n` particles for `steps` steps.
    pub fn check_compatible(&self, n: usize, steps: usize) -> Result<()> {
        if let PolicyKind::OpenLoop(s) = &self.kind {
            ensure_dim(n, s[0].ncols(), "open-loop particle count")?;
            if s.len() < steps {
                return Err(Error::DimensionMismatch {
                    expected: steps,
                    got: s.len(),
                    context: "open-loop step count",
                });
            }
        }
        Ok(())
    }

    /// Control of one particle (or one block of a lifted state).
    pub fn control_for(
        &self,
        step: usize,
        time: f64,
        particle: usize,
        n: usize,
        state: DVectorView<'_, f64>,
        mean: &Vector,
    ) -> Result<Vector> {
        let q = match &self.kind {
            PolicyKind::Constant(q) => return Ok(q.clone()),
            PolicyKind::OpenLoop(s) => s[step].column(particle).into_owned(),
            PolicyKind::Feedback(f) => {
                let q = f(&FeedbackInput {
                    time,
                    step,
                    particle,
                    n,
                    state,
                    mean,
                });
                ensure_dim(self.control_dim, q.len(), "feedback output")?;
                self.cone.check(&q)?;
                q
            }
        };
        Ok(q)
    }

    /// Controls for a whole ensemble, one column per particle.
    pub fn controls(&self, step: usize, time: f64, states: &Matrix, mean: &Vector) -> Result<Matrix> {
        let n = states.ncols();
        match &self.kind {
            PolicyKind::OpenLoop(s) => Ok(s[step].clone()),
            PolicyKind::Constant(q) => Ok(Matrix::from_fn(self.control_dim, n, |r, _| q[r])),
            PolicyKind::Feedback(_) => {
                let mut out = Matrix::zeros(self.control_dim, n);
                for i in 0..n {
                    let q = self.control_for(step, time, i, n, states.column(i).as_view(), mean)?;
                    out.set_column(i, &q);
                }
                Ok(out)
            }
        }
    }

    /// Same law with every control multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        match &self.kind {
            PolicyKind::Constant(q) => Self::constant(q * factor, self.cone),
            PolicyKind::OpenLoop(s) => Self::open_loop(s.iter().map(|m| m * factor).collect(), self.cone),
            PolicyKind::Feedback(f) => {
                let f = f.clone();
                Ok(Self::feedback(
                    self.control_dim,
                    self.cone,
                    Arc::new(move |inp| f(inp) * factor),
                ))
            }
        }
    }
}
