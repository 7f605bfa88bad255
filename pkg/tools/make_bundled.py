"""Regenerate the bundled traces and reference model under src/svcuep/data.

    python tools/make_bundled.py
"""

import os

from svcuep.trace import save_trace, synth_trace
from svcuep.uep import PUBLISHED_MODEL, format_model

DATA = os.path.join(os.path.dirname(__file__), os.pardir, "src", "svcuep", "data")

N_FRAMES = 60
DISPERSION = 0.3

# name: (base mean bits, enhancement mean bits, seed)
TRACES = {
    # large base packets: base losses dominate at the equal split
    "parkjoy_like": (24000, 8000, 101),
    # tiny base packets, large enhancement packets
    "mc1_like": (1500, 20000, 102),
    # base packets small enough that both layers' loss costs balance
    "sh1_like": (3000, 8000, 103),
}


def main():
    for name, (base, enh, seed) in TRACES.items():
        save_trace(synth_trace(N_FRAMES, base, enh, DISPERSION, seed),
                   os.path.join(DATA, f"{name}.csv"))
    with open(os.path.join(DATA, "published_model.txt"), "w", encoding="utf-8") as fh:
        fh.write(format_model(PUBLISHED_MODEL))


if __name__ == "__main__":
    main()
