"""Observed order of the strip finite-difference solver on manufactured solutions."""

import argparse
from dataclasses import dataclass, field

import numpy as np

from dinifreq.coefficients import constant_field, constant_potential, identity_field
from dinifreq.fields import catalog, convergence_study
from dinifreq.geometry import DiniDomain, flat_chart, power_chart


@dataclass
class StudyConfig:
    window: tuple = (0.5, 0.5)
    levels: tuple = field(default=(32, 64, 128, 256))


def cases():
    flat = DiniDomain.build(flat_chart(), 0.5)
    curved = DiniDomain.build(power_chart(1.0), 0.5)
    affine = catalog("affine_x2")
    yield "Im z^2, A = I", flat, identity_field(), constant_potential(0.0), lambda x: -2 * x[..., 0] * x[..., 1], None
    yield ("x1 x2, A = diag(2, 1)", flat, constant_field(np.diag([2.0, 1.0])), constant_potential(0.0),
           lambda x: x[..., 0] * x[..., 1], None)
    yield ("e^x1 sin(-2 x2), V = -3", flat, identity_field(), constant_potential(-3.0),
           lambda x: np.exp(x[..., 0]) * np.sin(-2 * x[..., 1]), None)
    yield ("affine A, e^x1 sin(-2 x2)", flat, affine.coeff, constant_potential(0.0),
           lambda x: np.exp(x[..., 0]) * np.sin(-2 * x[..., 1]),
           lambda x: (-2.9 - 0.3 * x[..., 0]) * np.exp(x[..., 0]) * np.sin(-2 * x[..., 1]))
    yield ("curved chart x^2/2", curved, identity_field(), constant_potential(0.0),
           lambda x: (x[..., 0] ** 2 / 2 - x[..., 1]) * np.exp(x[..., 0]),
           lambda x: (1 + 2 * x[..., 0] + x[..., 0] ** 2 / 2 - x[..., 1]) * np.exp(x[..., 0]))


def main(cfg: StudyConfig):
    for label, dom, coeff, V, exact, src in cases():
        st = convergence_study(dom, coeff, V, exact, cfg.window, cfg.levels, source=src)
        errs = " ".join(f"{e:.2e}" for e in st.errors)
        order = "exact" if st.exact else f"{st.observed_order:.3f}"
        print(f"{label:28s} errors {errs}   order {order}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--levels", type=int, nargs="+", default=[32, 64, 128, 256])
    a = p.parse_args()
    main(StudyConfig(levels=tuple(a.levels)))
