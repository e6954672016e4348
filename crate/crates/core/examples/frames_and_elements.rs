//! Conversions between osculating elements, the barycentric inertial frame
//! and the rotating-pulsating frame, and the Tisserand parameter.
//!
//!     cargo run --release --example frames_and_elements

use ks_er3bp::frames::{
    heliocentric_elements_to_inertial, inertial_to_heliocentric_elements, inertial_to_rotating_state,
    momenta_from_velocity, rotating_to_inertial_state, OrbitalElements, SystemParams,
};
use ks_er3bp::indicators::tisserand;
use ks_er3bp::ks::{lift, push_down, CartesianState};

fn main() -> ks_er3bp::Result<()> {
    let p = SystemParams::preset("sun-earth").expect("known preset");
    let gm = 1.0 - p.mu;
    let f0 = 0.9862623425908257;
    let el = OrbitalElements {
        a: 1.3103706971044482,
        e: 0.6,
        i: 0.0,
        omega: 0.0,
        node: 0.0,
        f_true: 0.22823102675215523,
    };
    let inertial = heliocentric_elements_to_inertial(&el, f0, &p, gm)?;
    let (r, v) = inertial_to_rotating_state(&inertial, f0, &p);
    println!("inertial  R = {:?}", inertial.r);
    println!("rotating  r = {r:?}  dr/df = {v:?}");

    let back = rotating_to_inertial_state(&r, &v, f0, &p);
    let el2 = inertial_to_heliocentric_elements(&back, f0, &p, gm);
    println!("elements back: a = {:.15} e = {:.15} f = {:.15}", el2.a, el2.e, el2.f_true);
    println!("Tisserand {:.12}", tisserand(&el2)?);

    let c = CartesianState { r, p: momenta_from_velocity(&r, &v), f: f0, action: 0.0 };
    let ks = lift(&c, &p)?;
    let c2 = push_down(&ks, &p)?;
    println!("KS u = {:?}", ks.u);
    println!("lift/push_down position error {:.2e}", (0..3).map(|k| (c2.r[k] - c.r[k]).abs()).fold(0.0, f64::max));
    Ok(())
}
