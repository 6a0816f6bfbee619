//! Smooth compactly supported radial cutoff functions.
//!
//! The cutoff is identically 1 on a plateau, identically 0 outside its
//! support, and infinitely smooth in between. A radial (as opposed to box)
//! geometry is used everywhere so the singular moment integrals factor
//! exactly into radial and angular parts.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::real::{norm2, real, Real};

type ProfileFn<R> = Arc<dyn Fn(R) -> R + Send + Sync>;

/// Radial cutoff profile with plateau `[0, a]` and support `[0, b]`.
#[derive(Clone)]
pub struct RadialCutoff<R: Real> {
    plateau_radius: R,
    support_radius: R,
    profile_id: String,
    profile: ProfileFn<R>,
}

impl<R: Real> RadialCutoff<R> {
    /// Plateau radius `a`: `profile(r) = 1` for `r <= a`.
    pub fn plateau_radius(&self) -> R {
        self.plateau_radius
    }

    /// Support radius `b`: `profile(r) = 0` for `r >= b`.
    pub fn support_radius(&self) -> R {
        self.support_radius
    }

    /// Identifier of the profile family, recorded in weight-file metadata.
    pub fn profile_id(&self) -> &str {
        &self.profile_id
    }

    /// Profile value at radius `r >= 0`.
    pub fn eval_radial(&self, r: R) -> R {
        (self.profile)(r)
    }

    /// Window value `profile(|x| / scale)`. With the default `(3/4, 1)`
    /// profile this is 1 for `|x| <= (3/4) scale` and 0 for `|x| >= scale`.
    pub fn eval_window(&self, scale: R, x: &[R]) -> R {
        (self.profile)(norm2(x) / scale)
    }
}

impl<R: Real> std::fmt::Debug for RadialCutoff<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialCutoff")
            .field("plateau_radius", &self.plateau_radius)
            .field("support_radius", &self.support_radius)
            .field("profile_id", &self.profile_id)
            .finish()
    }
}

/// `exp(-1/t)` extended by zero for `t <= 0`.
fn smooth_step_piece<R: Real>(t: R) -> R {
    if t <= R::zero() {
        R::zero()
    } else {
        (-t.recip()).exp()
    }
}

/// The standard C-infinity cutoff with plateau `a` and support `b`:
/// `profile(r) = g((b - r) / (b - a))` where
/// `g(t) = e(t) / (e(t) + e(1 - t))` and `e(t) = exp(-1/t)` for `t > 0`.
pub fn make_standard_cutoff<R: Real>(a: R, b: R) -> Result<RadialCutoff<R>> {
    if !(a > R::zero() && b > a) {
        return Err(Error::InvalidParameters(format!(
            "cutoff needs 0 < plateau < support, got plateau {a:?}, support {b:?}"
        )));
    }
    let profile = move |r: R| -> R {
        if r <= a {
            return R::one();
        }
        if r >= b {
            return R::zero();
        }
        let t = (b - r) / (b - a);
        let e = smooth_step_piece(t);
        let e_c = smooth_step_piece(R::one() - t);
        e / (e + e_c)
    };
    Ok(RadialCutoff {
        plateau_radius: a,
        support_radius: b,
        profile_id: "exp-pou".to_owned(),
        profile: Arc::new(profile),
    })
}

/// The default profile used by the weight synthesis: plateau 3/4, support 1.
pub fn default_cutoff<R: Real>() -> RadialCutoff<R> {
    make_standard_cutoff(real(0.75), R::one()).expect("default cutoff parameters are valid")
}
