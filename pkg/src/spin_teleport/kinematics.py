"""Relativistic elastic scattering of equal masses (pp) and flight times."""

from __future__ import annotations

import math
from dataclasses import dataclass

PROTON_MASS_MEV = 938.272
SPEED_OF_LIGHT = 299_792_458.0  # m/s

# beam energies quoted for the proposed experiment
DESIGN_ENERGY_WINDOW_MEV = (20.0, 50.0)


class KinematicsError(ValueError):
    pass


@dataclass(frozen=True)
class BeamSpec:
    kinetic_energy_mev: float

    def __post_init__(self):
        if not self.kinetic_energy_mev > 0:
            raise KinematicsError(
                f"beam kinetic energy must be positive, got {self.kinetic_energy_mev}"
            )

    @property
    def outside_design_window(self) -> bool:
        lo, hi = DESIGN_ENERGY_WINDOW_MEV
        return not lo <= self.kinetic_energy_mev <= hi


@dataclass(frozen=True)
class ScatterSolution:
    theta_cm_deg: float
    theta_lab_deg: float
    recoil_lab_deg: float
    t_out_mev: float
    t_recoil_mev: float
    beta_out: float
    beta_recoil: float

    @property
    def opening_angle_deg(self) -> float:
        return self.theta_lab_deg + self.recoil_lab_deg


def gamma_cm(kinetic_energy_mev: float, mass: float = PROTON_MASS_MEV) -> float:
    """Lorentz factor of the c.m. frame for a beam on an equal-mass target at rest."""
    return math.sqrt((2 * mass + kinetic_energy_mev) / (2 * mass))


def _lab_leg(gamma: float, beta: float, e_star: float, p_star: float, theta: float):
    """Boost one c.m. leg at polar angle ``theta``; return (angle, kinetic, beta)."""
    p_perp = p_star * math.sin(theta)
    p_par = gamma * (p_star * math.cos(theta) + beta * e_star)
    energy = gamma * (e_star + beta * p_star * math.cos(theta))
    # kinetic energy from p^2 / (E + m) avoids cancellation in E - m at low energy
    p2 = p_perp**2 + p_par**2
    kinetic = p2 / (energy + PROTON_MASS_MEV)
    return math.atan2(p_perp, p_par), kinetic, math.sqrt(p2) / energy


def solve_elastic(beam: BeamSpec, theta_cm_deg: float) -> ScatterSolution:
    if not 0.0 < theta_cm_deg < 180.0:
        raise KinematicsError(f"theta_cm_deg must be in (0, 180), got {theta_cm_deg}")
    m = PROTON_MASS_MEV
    t = beam.kinetic_energy_mev
    gamma = gamma_cm(t)
    beta = math.sqrt(1 - 1 / gamma**2)
    e_star = gamma * m
    p_star = math.sqrt(t * m / 2)  # sqrt(e_star^2 - m^2), written to keep precision
    theta = math.radians(theta_cm_deg)

    ang_out, t_out, beta_out = _lab_leg(gamma, beta, e_star, p_star, theta)
    ang_rec, t_rec, beta_rec = _lab_leg(gamma, beta, e_star, p_star, math.pi - theta)
    return ScatterSolution(
        theta_cm_deg=float(theta_cm_deg),
        theta_lab_deg=math.degrees(ang_out),
        recoil_lab_deg=math.degrees(ang_rec),
        t_out_mev=t_out,
        t_recoil_mev=t_rec,
        beta_out=beta_out,
        beta_recoil=beta_rec,
    )


def time_of_flight(path_length_m: float, beta: float) -> float:
    if path_length_m < 0:
        raise KinematicsError(f"path length must be >= 0, got {path_length_m}")
    if not 0.0 < beta < 1.0:
        raise KinematicsError(f"beta must be in (0, 1), got {beta}")
    return path_length_m / (beta * SPEED_OF_LIGHT)
