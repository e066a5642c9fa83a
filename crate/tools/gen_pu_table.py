"""Generate the bundled perceptually-uniform luminance table.

The code value is the integral of 1/tvi(L) over luminance, where tvi is the
photopic/scotopic threshold-versus-intensity function of Ferwerda et al.
(1996) as tabulated by Ward Larson et al. (1997). The integral is then mapped
by the affine transform that best fits 8-bit sRGB code values of a display
with 80 cd/m^2 peak over [0.1, 80] cd/m^2 (the construction used for the
original PU encoding).

Usage: python3 tools/gen_pu_table.py > crates/core/data/pu_table.csv
"""

import numpy as np
from scipy.integrate import cumulative_trapezoid


def log_tvi(log_la):
    la = np.asarray(log_la, dtype=float)
    with np.errstate(invalid="ignore"):
        return _select(la)


def _select(la):
    return np.select(
        [la < -3.94, la < -1.44, la < -0.0184, la < 1.9],
        [
            np.full_like(la, -2.86),
            (0.405 * la + 1.6) ** 2.18 - 2.86,
            la - 0.395,
            (0.249 * la + 0.65) ** 2.7 - 0.72,
        ],
        default=la - 1.255,
    )


def srgb_code(lum, peak=80.0):
    v = np.clip(lum / peak, 0.0, 1.0)
    enc = np.where(v <= 0.0031308, 12.92 * v, 1.055 * v ** (1 / 2.4) - 0.055)
    return 255.0 * enc


def main():
    # fine grid for the integral, in log10 luminance
    fine = np.linspace(-5.0, 10.0, 150001)
    lum = 10.0 ** fine
    # dP/dlog10L = L ln10 / tvi(L)
    dens = lum * np.log(10.0) / 10.0 ** log_tvi(fine)
    raw = cumulative_trapezoid(dens, fine, initial=0.0)

    fit = (fine >= -1.0) & (fine <= np.log10(80.0))
    a, b = np.polyfit(raw[fit], srgb_code(lum[fit]), 1)
    pu = a * raw + b

    knots = np.linspace(-5.0, 10.0, 1501)
    values = np.interp(knots, fine, pu)
    print("log10_luminance,pu")
    for k, v in zip(knots, values):
        print(f"{k:.4f},{v:.6f}")


if __name__ == "__main__":
    main()
