//! Clarke and Park transforms and the switch hexagon.

use saf::plant::{
    clarke, hexagon_check, inverse_clarke, park, park_inverse, switch_to_uabc, HexagonMode, SwitchVector, Vec2, Vec3,
};

fn main() -> saf::Result<()> {
    let (v_m, theta) = (310.0, 0.4);
    let i_abc = Vec3::new(10.0, -4.0, -6.0);
    let i_ab = clarke(&i_abc)?;
    let x = park(&i_ab, theta, v_m);
    println!("i_abc = {:?}", i_abc.as_slice());
    println!("i_ab  = {:?}", i_ab.as_slice());
    println!("x_dq  = {:?} (V·A)", x.as_slice());
    let back = inverse_clarke(&park_inverse(&x, theta, v_m)?);
    println!("round trip error = {:e}", (back - i_abc).amax());

    println!("\nswitch table:");
    for s in SwitchVector::vertices() {
        let (u_abc, u_ab) = switch_to_uabc(&s);
        println!("  {:?} -> u_abc {:>7.4?}  u_ab {:>7.4?}", s.legs(), u_abc.as_slice(), u_ab.as_slice());
    }

    for u in [Vec2::new(0.5, 0.0), Vec2::new(0.6, 0.0), Vec2::new(0.0, 0.6)] {
        let c = hexagon_check(&u, HexagonMode::InscribedCircle);
        let h = hexagon_check(&u, HexagonMode::ExactHexagon);
        println!(
            "u_ab {:?}: circle {} ({:+.4}), hexagon {} ({:+.4})",
            u.as_slice(),
            c.feasible,
            c.margin,
            h.feasible,
            h.margin
        );
    }
    Ok(())
}
