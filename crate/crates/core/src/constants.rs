//! CODATA 2018 physical constants (SI units) and unit conversions.

/// The fixed table of fundamental constants used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Boltzmann constant, J/K.
    pub boltzmann: f64,
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
    /// Speed of light in vacuum, m/s.
    pub speed_of_light: f64,
    /// Vacuum permittivity, F/m.
    pub vacuum_permittivity: f64,
    /// Elementary charge, C.
    pub elementary_charge: f64,
    /// Avogadro constant, 1/mol.
    pub avogadro: f64,
    /// Atomic mass constant, kg.
    pub atomic_mass: f64,
}

pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
    boltzmann: 1.380_649e-23,
    hbar: 1.054_571_817e-34,
    speed_of_light: 299_792_458.0,
    vacuum_permittivity: 8.854_187_812_8e-12,
    elementary_charge: 1.602_176_634e-19,
    avogadro: 6.022_140_76e23,
    atomic_mass: 1.660_539_066_60e-27,
};

pub const K_B: f64 = CODATA_2018.boltzmann;
pub const HBAR: f64 = CODATA_2018.hbar;
pub const C_LIGHT: f64 = CODATA_2018.speed_of_light;
pub const EPSILON_0: f64 = CODATA_2018.vacuum_permittivity;
pub const E_CHARGE: f64 = CODATA_2018.elementary_charge;
pub const N_A: f64 = CODATA_2018.avogadro;

/// Angular frequency of a 1 eV photon, rad/s (e/ħ ≈ 1.519×10¹⁵).
pub const RAD_PER_S_PER_EV: f64 = E_CHARGE / HBAR;

pub const NM: f64 = 1e-9;
pub const PN: f64 = 1e-12;

/// Converts a photon energy in eV to an angular frequency in rad/s.
#[inline]
pub fn ev_to_rad_s(ev: f64) -> f64 {
    ev * RAD_PER_S_PER_EV
}

#[inline]
pub fn rad_s_to_ev(rad_s: f64) -> f64 {
    rad_s / RAD_PER_S_PER_EV
}
