"""Smoke test for the `oseen` extension module.

Build with `cargo build --release -p oseen-python`, then run this script; it
loads target/release/liboseen.so directly when the module is not installed.
"""

import importlib.machinery
import importlib.util
import math
import pathlib
import sys


def load():
    try:
        import oseen

        return oseen
    except ImportError:
        pass
    root = pathlib.Path(__file__).resolve().parent.parent
    for profile in ("release", "debug"):
        lib = root / "target" / profile / "liboseen.so"
        if lib.exists():
            loader = importlib.machinery.ExtensionFileLoader("oseen", str(lib))
            spec = importlib.util.spec_from_loader("oseen", loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            return module
    sys.exit("liboseen.so not found; run `cargo build --release -p oseen-python`")


def main():
    oseen = load()

    mesh = oseen.cavity_mesh(0.25, order=2)
    assert mesh.node_count() == 17 * 17, mesh
    assert abs(mesh.area() - 4.0) < 1e-12
    step = oseen.step_mesh(5.0, 0.5)
    assert abs(step.area() - 11.0) < 1e-12

    sol = oseen.solve_cavity(100.0, 0.125, order=1, gamma=0.1)
    assert sol.converged, sol.table_entry()
    assert len(sol.velocity) == sol.mesh.node_count()
    (ys, u1), _ = sol.centerline()
    assert abs(u1[-1] - 1.0) < 1e-12 and abs(u1[0]) < 1e-12
    print("cavity Re=100 Q1 h=1/8:", sol.table_entry())

    try:
        oseen.solve_cavity(100.0, 0.125, preconditioner="jacobi")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown preconditioner accepted")

    _, min_re, max_mod = oseen.schur_eigenvalues(0.02, 0.1, 0.25)
    assert min_re > 0.0 and max_mod <= 1.0 + 1e-8
    mu_kp, mu_pk = oseen.field_of_values(0.02, 0.1, 0.25)
    assert mu_pk >= 0.5 - 1e-8 and mu_kp * mu_pk <= 1.0 + 1e-10
    violations, _ = oseen.schur_dominance(0.01, 0.1, 0.25, trials=20)
    assert violations == 0
    print(f"probe nu=0.02 gamma=0.1 h=1/4: min Re = {min_re:.4e}, max |l| = {max_mod:.6f}, mu_PK = {mu_pk:.4f}")
    assert math.isfinite(sol.average_gmres)
    print("ok")


if __name__ == "__main__":
    main()
