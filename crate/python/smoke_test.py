#!/usr/bin/env python3
"""Builds the extension module, imports it, and spot-checks the bindings."""
import math
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def build_module(dest: pathlib.Path) -> None:
    subprocess.run(
        ["cargo", "build", "--release", "-p", "bmcarpet-py"], cwd=ROOT, check=True
    )
    shutil.copy(ROOT / "target/release/libbmcarpet_py.so", dest / "bmcarpet_py.so")


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        build_module(pathlib.Path(tmp))
        sys.path.insert(0, tmp)
        import bmcarpet_py

        carpet = bmcarpet_py.Carpet(
            2, 3, [(0, 0), (0, 2), (1, 1)], [1 / 3, 1 / 3, 1 / 3]
        )
        toml_twin = bmcarpet_py.Carpet.from_toml(
            (ROOT / "specs/figure1.toml").read_text()
        )
        assert carpet.fingerprint() == toml_twin.fingerprint()
        assert carpet.m == 2 and carpet.n == 3
        assert abs(carpet.sigma - math.log(2) / math.log(3)) < 1e-15

        assert abs(carpet.beta(1.0)) < 1e-12
        assert abs(carpet.hausdorff_dimension() - 1.3496838) < 1e-6
        a_min, a_max, f_min, f_max = carpet.alpha_range()
        assert abs(a_min - 1.2158923) < 1e-6
        assert abs(a_max - math.log(3) / math.log(2)) < 1e-12
        assert abs(f_min - carpet.sigma) < 1e-6 and abs(f_max) < 1e-6

        alpha1 = carpet.alpha(1.0)
        f, t_star = carpet.f(alpha1)
        assert abs(f - alpha1) < 1e-8 and abs(t_star - 1.0) < 1e-6
        try:
            carpet.f(1.7)
        except ValueError:
            pass
        else:
            raise AssertionError("f(1.7) should raise ValueError")

        rows = carpet.curve([0.0, 1.0])
        assert abs(rows[0][2] - carpet.hausdorff_dimension()) < 1e-12
        assert abs(rows[1][3]) < 1e-12

        w = carpet.tilted_weights(0.0)
        assert abs(sum(w) - 1.0) < 1e-12 and abs(w[0] - w[1]) < 1e-15

        x0, y0, width, height, measure = carpet.approx_square([(0, 0), (1, 1)], 2)
        assert (width, height) == (1 / 3, 1 / 4)
        assert abs(measure - (1 / 3) * (1 / 3)) < 1e-15
        delta = carpet.symbolic_local_dim([(0, 0), (1, 1)], 2)
        assert abs(delta + math.log(measure) / (2 * math.log(2))) < 1e-12

        prefix = carpet.sample_prefix(1.0, 50, 7, 0)
        assert len(prefix) == 50 and prefix == carpet.sample_prefix(1.0, 50, 7, 0)

        value, lower, upper = carpet.ball_measure(0.5, 0.5, 2.0)
        assert lower == value == upper == 1.0
        # (1/2, 1) is the fixed point of the digit (1, 1) map, so it lies on
        # the carpet and every ball around it carries mass.
        value, lower, upper = carpet.ball_measure(0.5, 1.0, 2 ** -8)
        assert 0 < lower <= value <= upper < 1
        assert (upper - lower) <= 1e-6 * lower

        print("smoke test ok")


if __name__ == "__main__":
    main()
