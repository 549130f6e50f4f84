use serde::{Deserialize, Serialize};

use super::{
    build_fhrb, build_fhrb_momentum, build_fhrdr, build_forward_backward, build_frb,
    build_pd_resolvent_compensated, build_pd_triangular, CompositeForm, Corollary, FhrdrConfig,
    Instance, PdResConfig, PdTriConfig, PrimalDualProblem, Sequence,
};
use crate::engine::DEFAULT_EPSILON;
use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Which problem formulation a preset consumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    /// `0 in B x + D x + C x`
    Composite,
    /// `0 in B y + V* z + E y + F y`, `0 in D^{-1} z - V y`
    PrimalDual,
}

/// A problem in one of the two formulations.
#[derive(Clone)]
pub enum Formulation<T: Scalar> {
    Composite(CompositeForm<T>),
    PrimalDual(PrimalDualProblem<T>),
}

impl<T: Scalar> Formulation<T> {
    pub fn form(&self) -> Form {
        match self {
            Self::Composite(_) => Form::Composite,
            Self::PrimalDual(_) => Form::PrimalDual,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Composite(c) => c.dim,
            Self::PrimalDual(p) => p.dim(),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    /// `number` or `sequence`.
    pub kind: &'static str,
    pub description: &'static str,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Family {
    ForwardBackward,
    Frb,
    Fhrb,
    FhrbMomentum,
    ChambollePock,
    VuCondat,
    Triangular,
    Projective,
    Frdr,
    Fhrdr,
    Compensated,
}

/// Catalog entry.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub method: &'static str,
    pub form: Form,
    /// The kernel `M_k` and metric `S`.
    pub kernel: &'static str,
    /// Structural requirements on the problem.
    pub requires: &'static str,
    pub params: &'static [ParamSpec],
    #[serde(skip)]
    family: Family,
}

const THETA: ParamSpec = ParamSpec {
    name: "theta",
    kind: "number",
    description: "additional momentum, < 1 (default 0)",
};
const GAMMA: ParamSpec = ParamSpec {
    name: "gamma",
    kind: "number",
    description: "step size (default: 90% of the largest certified step)",
};
const ALPHA: ParamSpec = ParamSpec {
    name: "alpha",
    kind: "sequence",
    description: "step sizes alpha_k (default: 90% of the largest certified constant step)",
};
const TAU: ParamSpec = ParamSpec {
    name: "tau",
    kind: "number",
    description: "primal step (default: 90% of the largest certified step with sigma = tau/|V|^2)",
};
const SIGMA: ParamSpec = ParamSpec {
    name: "sigma",
    kind: "number",
    description: "dual step (default tau/|V|^2)",
};
const LAMBDA: ParamSpec = ParamSpec {
    name: "lambda",
    kind: "sequence",
    description: "relaxation lambda_k (default 2)",
};
const TAU_DR: ParamSpec = ParamSpec {
    name: "tau",
    kind: "number",
    description: "primal step (default: 90% of the largest certified step with varsigma = 1/tau)",
};
const VARSIGMA: ParamSpec = ParamSpec {
    name: "varsigma",
    kind: "number",
    description: "dual resolvent step (default 1/tau)",
};
const NORM_V: ParamSpec = ParamSpec {
    name: "norm_v",
    kind: "number",
    description: "upper bound on |V| (default: analytic bound or power iteration)",
};

static PRESETS: [Preset; 11] = [
    Preset {
        name: "forward_backward",
        method: "forward-backward",
        form: Form::Composite,
        kernel: "M = Id/gamma, S = Id",
        requires: "D = 0",
        params: &[GAMMA, THETA],
        family: Family::ForwardBackward,
    },
    Preset {
        name: "frb",
        method: "forward-reflected-backward",
        form: Form::Composite,
        kernel: "M_k = Id/alpha_k - (D + C), S = Id",
        requires: "none (C is treated as Lipschitz)",
        params: &[ALPHA],
        family: Family::Frb,
    },
    Preset {
        name: "fhrb",
        method: "forward-half-reflected-backward",
        form: Form::Composite,
        kernel: "M_k = Id/alpha_k - D, S = Id",
        requires: "none",
        params: &[ALPHA],
        family: Family::Fhrb,
    },
    Preset {
        name: "fhrb_momentum",
        method: "forward-half-reflected-backward with momentum",
        form: Form::Composite,
        kernel: "M_k = Id/alpha_k - D, S = Id",
        requires: "none",
        params: &[ALPHA, THETA],
        family: Family::FhrbMomentum,
    },
    Preset {
        name: "chambolle_pock",
        method: "Chambolle-Pock primal-dual hybrid gradient",
        form: Form::PrimalDual,
        kernel: "triangular kernel with lambda = 2",
        requires: "E = 0, F = 0",
        params: &[TAU, SIGMA, THETA, NORM_V],
        family: Family::ChambollePock,
    },
    Preset {
        name: "vu_condat",
        method: "Vu-Condat primal-dual",
        form: Form::PrimalDual,
        kernel: "triangular kernel with lambda = 2",
        requires: "E = 0",
        params: &[TAU, SIGMA, THETA, NORM_V],
        family: Family::VuCondat,
    },
    Preset {
        name: "pd_triangular",
        method: "primal-dual with block-triangular metric",
        form: Form::PrimalDual,
        kernel: "M_k = [[Id/tau - E, -V*], [(1 - lambda_k) V, Id/sigma]], S = [[Id, -tau V*], [-tau V, (tau/sigma) Id]]",
        requires: "none",
        params: &[TAU, SIGMA, LAMBDA, THETA, NORM_V],
        family: Family::Triangular,
    },
    Preset {
        name: "pd_projective_style",
        method: "primal-dual with decoupled dual update",
        form: Form::PrimalDual,
        kernel: "triangular kernel with lambda = 0",
        requires: "none",
        params: &[TAU, SIGMA, THETA, NORM_V],
        family: Family::Projective,
    },
    Preset {
        name: "frdr",
        method: "forward-reflected Douglas-Rachford",
        form: Form::PrimalDual,
        kernel: "triangular kernel with V = Id, lambda = 2, sigma = 1/varsigma",
        requires: "V = Id, F = 0",
        params: &[TAU_DR, VARSIGMA],
        family: Family::Frdr,
    },
    Preset {
        name: "fhrdr",
        method: "forward-half-reflected Douglas-Rachford",
        form: Form::PrimalDual,
        kernel: "triangular kernel with V = Id, lambda = 2, sigma = 1/varsigma",
        requires: "V = Id",
        params: &[TAU_DR, VARSIGMA, THETA],
        family: Family::Fhrdr,
    },
    Preset {
        name: "pd_resolvent_compensated",
        method: "primal-dual with resolvent compensation",
        form: Form::PrimalDual,
        kernel: "M_k = [[Id/tau - V* J(a_k + sigma V .) - E, 0], [0, Id/sigma]], J = (Id + sigma D^-1)^-1, S = diag(Id, (tau/sigma) Id)",
        requires: "none",
        params: &[TAU, SIGMA, THETA, NORM_V],
        family: Family::Compensated,
    },
];

pub fn presets() -> &'static [Preset] {
    &PRESETS
}

pub fn preset(name: &str) -> Result<&'static Preset> {
    PRESETS
        .iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
}

impl Preset {
    pub fn accepts_theta(&self) -> bool {
        self.params.iter().any(|p| p.name == "theta")
    }

    /// The step-size condition checked for this preset, in its parameters.
    pub fn certificate(&self) -> String {
        let theta = if self.accepts_theta() { 0.1 } else { 0.0 };
        self.template(theta).text()
    }

    fn template(&self, theta: f64) -> Corollary<f64> {
        match self.family {
            Family::ForwardBackward => Corollary::ForwardBackward {
                gamma: 1.0,
                beta: 1.0,
                theta,
            },
            Family::Frb | Family::Fhrb | Family::FhrbMomentum => Corollary::Fhrb {
                alpha: Sequence::Constant(1.0),
                delta: 1.0,
                beta: 1.0,
                theta,
            },
            Family::ChambollePock | Family::VuCondat | Family::Triangular | Family::Projective => {
                Corollary::Triangular {
                    tau: 1.0,
                    sigma: 1.0,
                    norm_v: 1.0,
                    lambda: Sequence::Constant(2.0),
                    delta: 1.0,
                    beta: 1.0,
                    theta,
                }
            }
            Family::Frdr | Family::Fhrdr => Corollary::Fhrdr {
                tau: 1.0,
                varsigma: 1.0,
                delta: 1.0,
                beta: 1.0,
                theta,
            },
            Family::Compensated => Corollary::ResolventCompensated {
                tau: 1.0,
                sigma: 1.0,
                norm_v: 1.0,
                delta: 1.0,
                beta: 1.0,
                theta,
            },
        }
    }
}

/// Method parameters; unset step sizes are chosen automatically.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetParams<T> {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Sequence<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Sequence<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub varsigma: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_v: Option<T>,
}

impl<T: Scalar> PresetParams<T> {
    fn set_names(&self) -> Vec<&'static str> {
        let mut names = Vec::new();
        let flags = [
            ("gamma", self.gamma.is_some()),
            ("alpha", self.alpha.is_some()),
            ("theta", self.theta.is_some()),
            ("tau", self.tau.is_some()),
            ("sigma", self.sigma.is_some()),
            ("lambda", self.lambda.is_some()),
            ("varsigma", self.varsigma.is_some()),
            ("norm_v", self.norm_v.is_some()),
        ];
        for (name, set) in flags {
            if set {
                names.push(name);
            }
        }
        names
    }
}

/// Largest `t` in `(0, cap]` with `passes(t)`, assuming `passes` is
/// monotone, scaled by `0.9`.
fn auto_step<T: Scalar>(passes: impl Fn(T) -> bool) -> Result<T> {
    let cap = lit::<T>(1e6);
    let mut hi = T::one();
    while passes(hi) && hi < cap {
        hi *= lit(2.0);
    }
    if passes(hi) {
        return Ok(hi * lit(0.9));
    }
    let mut lo = T::zero();
    for _ in 0..200 {
        let mid = (lo + hi) / lit(2.0);
        if passes(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo > T::zero() {
        Ok(lo * lit(0.9))
    } else {
        Err(Error::InvalidParameter(
            "no step size satisfies the certificate".into(),
        ))
    }
}

fn composite<T: Scalar>(p: &Preset, f: &Formulation<T>) -> Result<CompositeForm<T>> {
    match f {
        Formulation::Composite(c) => Ok(c.clone()),
        Formulation::PrimalDual(_) => Err(Error::InvalidParameter(format!(
            "preset `{}` needs a composite formulation",
            p.name
        ))),
    }
}

fn primal_dual<T: Scalar>(p: &Preset, f: &Formulation<T>) -> Result<PrimalDualProblem<T>> {
    match f {
        Formulation::PrimalDual(pd) => Ok(pd.clone()),
        Formulation::Composite(_) => Err(Error::InvalidParameter(format!(
            "preset `{}` needs a primal-dual formulation",
            p.name
        ))),
    }
}

fn require(cond: bool, preset: &Preset, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("preset `{}` requires {what}", preset.name)))
    }
}

/// Instantiates preset `name` on a problem.
pub fn build_preset<T: Scalar>(name: &str, problem: &Formulation<T>, params: &PresetParams<T>) -> Result<Instance<T>> {
    let p = preset(name)?;
    for set in params.set_names() {
        if !p.params.iter().any(|spec| spec.name == set) {
            return Err(Error::InvalidParameter(format!(
                "preset `{}` does not take parameter `{set}`",
                p.name
            )));
        }
    }
    let theta = params.theta.unwrap_or(T::zero());
    let eps = lit::<T>(DEFAULT_EPSILON);
    match p.family {
        Family::ForwardBackward => {
            let form = composite(p, problem)?;
            let gamma = match params.gamma {
                Some(g) => g,
                None => auto_step(|g: T| {
                    Corollary::ForwardBackward {
                        gamma: g,
                        beta: form.beta,
                        theta,
                    }
                    .check(1, eps)
                    .passed
                })?,
            };
            build_forward_backward(&form, gamma, theta)
        }
        Family::Frb | Family::Fhrb | Family::FhrbMomentum => {
            let form = composite(p, problem)?;
            let (delta, beta) = if p.family == Family::Frb {
                (form.delta + form.beta, T::zero())
            } else {
                (form.delta, form.beta)
            };
            let alpha = match &params.alpha {
                Some(a) => a.clone(),
                None => {
                    let a = auto_step(|a: T| {
                        Corollary::Fhrb {
                            alpha: Sequence::Constant(a),
                            delta,
                            beta,
                            theta,
                        }
                        .check(1, eps)
                        .passed
                    })?;
                    Sequence::Constant(a)
                }
            };
            match p.family {
                Family::Frb => build_frb(&form, alpha),
                Family::Fhrb => build_fhrb(&form, alpha),
                _ => build_fhrb_momentum(&form, alpha, theta),
            }
        }
        Family::ChambollePock | Family::VuCondat | Family::Triangular | Family::Projective => {
            let pd = primal_dual(p, problem)?;
            match p.family {
                Family::ChambollePock => {
                    require(pd.e.is_zero() && pd.f.is_zero(), p, "E = 0 and F = 0")?
                }
                Family::VuCondat => require(pd.e.is_zero(), p, "E = 0")?,
                _ => {}
            }
            let lambda = match p.family {
                Family::Projective => Sequence::Constant(T::zero()),
                Family::Triangular => params.lambda.clone().unwrap_or(Sequence::Constant(lit(2.0))),
                _ => Sequence::Constant(lit(2.0)),
            };
            lambda.validate_finite("lambda")?;
            let norm_v = match params.norm_v {
                Some(n) => n,
                None => pd.norm_v()?,
            };
            let ratio = if norm_v > T::zero() {
                T::one() / (norm_v * norm_v)
            } else {
                T::one()
            };
            let corollary = |tau: T, sigma: T| Corollary::Triangular {
                tau,
                sigma,
                norm_v,
                lambda: lambda.clone(),
                delta: pd.delta,
                beta: pd.beta,
                theta,
            };
            let (tau, sigma) = match (params.tau, params.sigma) {
                (Some(t), Some(s)) => (t, s),
                (Some(t), None) => (t, t * ratio),
                (None, Some(s)) => (auto_step(|t: T| corollary(t, s).check(64, eps).passed)?, s),
                (None, None) => {
                    let t = auto_step(|t: T| corollary(t, t * ratio).check(64, eps).passed)?;
                    (t, t * ratio)
                }
            };
            let config = PdTriConfig {
                tau,
                sigma,
                lambda,
                theta,
                norm_v: Some(norm_v),
            };
            build_pd_triangular(&pd, &config)
        }
        Family::Frdr | Family::Fhrdr => {
            let pd = primal_dual(p, problem)?;
            require(pd.v.is_identity(), p, "V = Id")?;
            if p.family == Family::Frdr {
                require(pd.f.is_zero(), p, "F = 0")?;
            }
            let corollary = |tau: T, varsigma: T| Corollary::Fhrdr {
                tau,
                varsigma,
                delta: pd.delta,
                beta: pd.beta,
                theta,
            };
            let (tau, varsigma) = match (params.tau, params.varsigma) {
                (Some(t), Some(s)) => (t, s),
                (Some(t), None) => (t, T::one() / t),
                (None, Some(s)) => (auto_step(|t: T| corollary(t, s).check(1, eps).passed)?, s),
                (None, None) => {
                    let t = auto_step(|t: T| corollary(t, T::one() / t).check(1, eps).passed)?;
                    (t, T::one() / t)
                }
            };
            build_fhrdr(&pd, &FhrdrConfig { tau, varsigma, theta })
        }
        Family::Compensated => {
            let pd = primal_dual(p, problem)?;
            let norm_v = match params.norm_v {
                Some(n) => n,
                None => pd.norm_v()?,
            };
            let ratio = if norm_v > T::zero() {
                T::one() / (norm_v * norm_v)
            } else {
                T::one()
            };
            let corollary = |tau: T, sigma: T| Corollary::ResolventCompensated {
                tau,
                sigma,
                norm_v,
                delta: pd.delta,
                beta: pd.beta,
                theta,
            };
            let (tau, sigma) = match (params.tau, params.sigma) {
                (Some(t), Some(s)) => (t, s),
                (Some(t), None) => (t, t * ratio),
                (None, Some(s)) => (auto_step(|t: T| corollary(t, s).check(1, eps).passed)?, s),
                (None, None) => {
                    let t = auto_step(|t: T| corollary(t, t * ratio).check(1, eps).passed)?;
                    (t, t * ratio)
                }
            };
            build_pd_resolvent_compensated(
                &pd,
                &PdResConfig {
                    tau,
                    sigma,
                    theta,
                    norm_v: Some(norm_v),
                },
            )
        }
    }
}
