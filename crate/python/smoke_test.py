"""Smoke test for the `cbs` Python module.

Build first with `cargo build --release -p cbs-py`. If `cbs` is not
installed, the freshly built library is loaded from the cargo target
directory.
"""

import importlib
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_cbs():
    try:
        return importlib.import_module("cbs")
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libcbs.so"
        if lib.exists():
            tmp = Path(tempfile.mkdtemp())
            shutil.copy(lib, tmp / "cbs.so")
            sys.path.insert(0, str(tmp))
            return importlib.import_module("cbs")
    sys.exit("cbs module not found; run `cargo build --release -p cbs-py` first")


def main():
    cbs = load_cbs()

    p = cbs.MediumParams(detuning=0.0, b=0.5, s0=0.01, channel="scalar")
    print(p)
    assert abs(p.s() - 0.01) < 1e-15

    bd = cbs.assemble(p, inelastic=False)
    gl_el, gc_el = bd["gamma_l_el"], bd["gamma_c_el"]
    print(f"quadrature gamma_L_el = {gl_el:.4f}, gamma_C_el = {gc_el:.4f}")
    assert abs(gl_el / -6.53 - 1) < 0.02 and abs(gc_el / -18.8 - 1) < 0.02

    z, values = cbs.solve_intensity(0.5, nodes=64)
    assert len(z) == len(values) == 64 and all(v > 0 for v in values)

    est, err = cbs.mc_breakdown(p, samples=20000, seed=1, inelastic=False)
    sig = (est["gamma_l_el"] - gl_el) / err["gamma_l_el"]
    print(f"Monte Carlo gamma_L_el = {est['gamma_l_el']:.3f} +- {err['gamma_l_el']:.3f} ({sig:+.1f} sigma)")
    assert abs(sig) < 5

    curve = cbs.spectral_enhancement(p, [-1.0, 0.5, 1.0], nodes=64)
    assert len(curve["eta"]) == 3

    hpar = cbs.MediumParams(b=0.5, channel="hpar")
    point = cbs.mc_spectral_point(hpar, 0.5, samples=5000, seed=2)
    print(f"h||h eta(0.5) = {point['eta'][0]:.3f} +- {point['eta'][1]:.3f}")

    stats = cbs.path_statistics([1.0, 2.0], samples=5000, seed=3)
    print(f"<N> exponent {stats['exponent_mean']:.2f}")

    dip = cbs.classical_response(realizations=4, seed=4, atoms=40)
    print(f"coupled dipoles ratio {dip['ratio'][0]:.2f} +- {dip['ratio'][1]:.2f}, predicted {dip['predicted_ratio']:.3f}")

    try:
        cbs.MediumParams(b=-1.0)
    except ValueError as e:
        print(f"rejected: {e}")
    else:
        raise AssertionError("negative thickness accepted")

    print("ok")


if __name__ == "__main__":
    main()
