//! Face fluxes for the 2D shallow-water equations.
//!
//! All fluxes are written in face-normal coordinates: `un` is the velocity
//! along the face normal (left to right), `ut` the tangential velocity.
//! Bed slope is handled by hydrostatic reconstruction, which makes the
//! scheme exactly preserve a lake at rest.

/// Flux through one face. The normal-momentum flux differs on the two sides
/// by the hydrostatic bed-slope correction.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FaceFlux {
    pub mass: f64,
    pub mom_left: f64,
    pub mom_right: f64,
    pub mom_t: f64,
}

impl FaceFlux {
    pub const ZERO: FaceFlux = FaceFlux {
        mass: 0.0,
        mom_left: 0.0,
        mom_right: 0.0,
        mom_t: 0.0,
    };
}

/// One side of a face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideState {
    pub h: f64,
    pub z: f64,
    pub un: f64,
    pub ut: f64,
}

/// HLL flux for (h, h*un, h*ut). The tangential component is upwinded with
/// the mass flux. Returns (mass, normal momentum, tangential momentum).
#[inline]
pub fn hll(hl: f64, ul: f64, vl: f64, hr: f64, ur: f64, vr: f64, g: f64) -> (f64, f64, f64) {
    if hl <= 0.0 && hr <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let cl = (g * hl).sqrt();
    let cr = (g * hr).sqrt();
    let (sl, sr) = if hl <= 0.0 {
        (ur - 2.0 * cr, ur + cr)
    } else if hr <= 0.0 {
        (ul - cl, ul + 2.0 * cl)
    } else {
        // Einfeldt: Roe-averaged speeds.
        let (sl_, sr_) = (hl.sqrt(), hr.sqrt());
        let u_roe = (sl_ * ul + sr_ * ur) / (sl_ + sr_);
        let c_roe = (0.5 * g * (hl + hr)).sqrt();
        ((ul - cl).min(u_roe - c_roe), (ur + cr).max(u_roe + c_roe))
    };

    let fl_m = hl * ul;
    let fl_n = hl * ul * ul + 0.5 * g * hl * hl;
    let fr_m = hr * ur;
    let fr_n = hr * ur * ur + 0.5 * g * hr * hr;

    let (mass, mom) = if sl >= 0.0 {
        (fl_m, fl_n)
    } else if sr <= 0.0 {
        (fr_m, fr_n)
    } else {
        let inv = 1.0 / (sr - sl);
        (
            (sr * fl_m - sl * fr_m + sl * sr * (hr - hl)) * inv,
            (sr * fl_n - sl * fr_n + sl * sr * (hr * ur - hl * ul)) * inv,
        )
    };
    let mom_t = if mass >= 0.0 { mass * vl } else { mass * vr };
    (mass, mom, mom_t)
}

/// Interior face with hydrostatic reconstruction.
#[inline]
pub fn interior(left: SideState, right: SideState, g: f64) -> FaceFlux {
    let zf = left.z.max(right.z);
    let hl = (left.h + left.z - zf).max(0.0);
    let hr = (right.h + right.z - zf).max(0.0);
    if hl <= 0.0 && hr <= 0.0 && left.h <= 0.0 && right.h <= 0.0 {
        return FaceFlux::ZERO;
    }
    let (mass, mom, mom_t) = hll(hl, left.un, left.ut, hr, right.un, right.ut, g);
    FaceFlux {
        mass,
        mom_left: mom + 0.5 * g * (left.h * left.h - hl * hl),
        mom_right: mom + 0.5 * g * (right.h * right.h - hr * hr),
        mom_t,
    }
}

/// Reflective wall on the right of `cell` (`cell_is_left`) or on its left.
#[inline]
pub fn wall(cell: SideState, cell_is_left: bool, g: f64) -> FaceFlux {
    if cell.h <= 0.0 {
        return FaceFlux::ZERO;
    }
    let (_, mom, _) = if cell_is_left {
        hll(cell.h, cell.un, cell.ut, cell.h, -cell.un, cell.ut, g)
    } else {
        hll(cell.h, -cell.un, cell.ut, cell.h, cell.un, cell.ut, g)
    };
    FaceFlux {
        mass: 0.0,
        mom_left: mom,
        mom_right: mom,
        mom_t: 0.0,
    }
}

/// Transmissive (free outfall) edge. Water may leave but never enter; an
/// inward-moving cell sees a wall.
#[inline]
pub fn open(cell: SideState, cell_is_left: bool, g: f64) -> FaceFlux {
    let outward = if cell_is_left { cell.un >= 0.0 } else { cell.un <= 0.0 };
    if !outward {
        return wall(cell, cell_is_left, g);
    }
    let h = cell.h;
    let mass = h * cell.un;
    let mom = h * cell.un * cell.un + 0.5 * g * h * h;
    FaceFlux {
        mass,
        mom_left: mom,
        mom_right: mom,
        mom_t: mass * cell.ut,
    }
}
