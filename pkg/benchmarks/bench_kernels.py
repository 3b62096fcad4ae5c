"""Time the numba kernels against their pure-numpy fallbacks.

Runs each hot path on both backends (same inputs, same outputs checked
to 1e-10) and prints a CSV table of best-of-N wall times plus the
speedup.  The numpy path is what you get with SKYR_NO_NUMBA=1; numbers
here justify keeping the dual implementation.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time
import warnings

import numpy as np

from skyrm._accel import HAS_NUMBA, force_backend
from skyrm.field import random_unit_field, topological_charge
from skyrm.profiles import BPProfile, TruncatedProfile, sample
from skyrm.stray import f_surf_direct, f_vol_direct


def _time(fn, repeat):
    best = np.inf
    value = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        value = fn()
        best = min(best, time.perf_counter() - t0)
    return best, value


def _cases():
    rng = np.random.default_rng(42)
    charge_field = random_unit_field(rng, 512, 512, h=0.1, smooth=4)
    oracle_field = random_unit_field(rng, 24, 24, h=0.5, smooth=2)
    profile = TruncatedProfile(rho=1.0, theta=0.3, L=64.0)
    bp = BPProfile(rho=1.0)

    def sample_truncated():
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return sample(profile, 200.0, 801).data

    return [
        ("charge 512^2", lambda: float(topological_charge(charge_field))),
        ("f_vol_direct 24^2", lambda: f_vol_direct(oracle_field)),
        ("f_surf_direct 24^2", lambda: f_surf_direct(oracle_field)),
        ("sample truncated 801^2", sample_truncated),
        ("sample bp 801^2", lambda: sample(bp, 40.0, 801).data),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    if not HAS_NUMBA:
        print("numba is not importable; nothing to compare")
        return

    print("kernel,numpy_s,numba_s,speedup")
    for name, fn in _cases():
        try:
            force_backend("numba")
            fn()  # compile outside the timed region
            t_nb, v_nb = _time(fn, args.repeat)
            force_backend("numpy")
            t_np, v_np = _time(fn, args.repeat)
        finally:
            force_backend(None)
        agree = np.allclose(v_np, v_nb, rtol=1e-10, atol=1e-12)
        if not agree:
            raise AssertionError(f"{name}: backends disagree")
        print(f"{name},{t_np:.4f},{t_nb:.4f},{t_np / t_nb:.1f}")


if __name__ == "__main__":
    main()
