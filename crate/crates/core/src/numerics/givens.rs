/// Real plane rotation `[[c, s], [-s, c]]` that maps `(a, b)` to `(r, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GivensRotation {
    pub c: f64,
    pub s: f64,
    pub r: f64,
}

impl GivensRotation {
    /// Rotation angle; lies in `[0, pi/2]` whenever the inputs were nonnegative.
    pub fn angle(&self) -> f64 {
        self.s.atan2(self.c)
    }

    pub fn from_angle(psi: f64) -> Self {
        GivensRotation {
            c: psi.cos(),
            s: psi.sin(),
            r: 1.0,
        }
    }
}

/// Rotation zeroing `b` against `a`. `(0, 0)` yields the identity.
pub fn givens_zero(a: f64, b: f64) -> GivensRotation {
    let r = a.hypot(b);
    if r == 0.0 {
        return GivensRotation { c: 1.0, s: 0.0, r: 0.0 };
    }
    GivensRotation {
        c: a / r,
        s: b / r,
        r,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_cases() {
        assert_eq!(givens_zero(3.0, 4.0), GivensRotation { c: 0.6, s: 0.8, r: 5.0 });
        assert_eq!(givens_zero(1.0, 0.0), GivensRotation { c: 1.0, s: 0.0, r: 1.0 });
        assert_eq!(givens_zero(0.0, 1.0), GivensRotation { c: 0.0, s: 1.0, r: 1.0 });
        assert_eq!(givens_zero(0.0, 0.0), GivensRotation { c: 1.0, s: 0.0, r: 0.0 });
    }

    #[test]
    fn angle_in_first_quadrant() {
        for &(a, b) in &[(1.0, 2.0), (0.1, 0.0), (0.0, 3.0), (5.0, 5.0)] {
            let g = givens_zero(a, b);
            let psi = g.angle();
            assert!((0.0..=std::f64::consts::FRAC_PI_2).contains(&psi));
            assert!((psi - f64::atan2(b, a)).abs() < 1e-15);
        }
    }
}
