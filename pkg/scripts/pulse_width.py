"""AP-switching frequency versus bias for several pulse widths and device speeds.

Prints one table per device and the fitted sigmoid (K, V_half) for each pulse width.
A slow device read with a short pulse stays below the equilibrium sigmoid.
"""
import argparse

import numpy as np

from pbit_forge.devices import SmtjDevice, fit_sigmoid, smtj_frequencies, smtj_probability


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pulses", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    volts = np.linspace(0.50, 0.65, 16)
    widths = (130e-9, 1e-6, 10e-6, 50e-6, None)

    for rate in (1e5, 1e8):
        dev = SmtjDevice(rate_scale=rate)
        print(f"\nrate_scale {rate:.0e} /s")
        print("V_mtj[mV]  sigmoid  " + "  ".join(f"{'eq' if w is None else f'{w * 1e6:g}us':>8}" for w in widths))
        table = {w: smtj_frequencies(dev, volts, w, args.pulses, rng) for w in widths}
        for k, v in enumerate(volts):
            cells = "  ".join(f"{table[w][k]:8.4f}" for w in widths)
            print(f"{v * 1e3:9.1f}  {smtj_probability(dev, v):7.4f}  {cells}")
        for w in widths:
            K, vh = fit_sigmoid(volts, table[w], args.pulses)
            label = "equilibrium" if w is None else f"{w * 1e6:g} us"
            print(f"  fit {label:>12}: K={K:6.1f} /V  V_half={vh * 1e3:6.1f} mV")


if __name__ == "__main__":
    main()
