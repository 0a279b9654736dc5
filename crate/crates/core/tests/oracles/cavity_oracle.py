"""Reference values for the single-sided cavity reflectivity model.

Evaluated with mpmath at 50 significant digits, independently of the Rust
implementation. Frequencies are ordinary frequencies converted to angular
ones with a factor 2*pi.

    python3 cavity_oracle.py
"""
from mpmath import mp, mpf, mpc, sqrt, pi

mp.dps = 50

KAPPA = 2 * pi * mpf("20.34e9")
GAMMA = 2 * pi * mpf("94e6")
HBAR = mpf("1.054571817e-34")
MU_B = mpf("9.2740100783e-24")
G_LANDE = mpf(2)


def reflectivity(g, kappa_wg, det_atom, det_cav):
    num = kappa_wg * (mpc(0, det_atom) + GAMMA / 2)
    den = (mpc(0, det_cav) + KAPPA / 2) * (mpc(0, det_atom) + GAMMA / 2) + g * g
    return 1 - num / den


def case(coop, ratio, delta_b=0):
    g = sqrt(coop * KAPPA * GAMMA) / 2
    kappa_wg = ratio * KAPPA
    split = sqrt(2 * (g * g - (GAMMA / 2) * (kappa_wg / 2 - KAPPA)))
    field = HBAR * split / (MU_B * G_LANDE)
    s = split * (1 + delta_b)
    r_on = reflectivity(g, kappa_wg, 0, -s / 2)
    r_off = reflectivity(g, kappa_wg, -s, -s / 2)
    return split, field, r_on, r_off


for coop, ratio in [(100, 1), (100, mpf("0.97"))]:
    split, field, r_on, r_off = case(coop, ratio)
    print(f"C={coop} ratio={ratio}")
    print(f"  splitting_rad_s = {mp.nstr(split, 17)}")
    print(f"  field_tesla     = {mp.nstr(field, 17)}")
    print(f"  r_on  = {mp.nstr(r_on.real, 17)} {mp.nstr(r_on.imag, 17)}")
    print(f"  r_off = {mp.nstr(r_off.real, 17)} {mp.nstr(r_off.imag, 17)}")
